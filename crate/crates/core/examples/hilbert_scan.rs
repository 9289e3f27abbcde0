//! Draws the order-3 Hilbert curve as a grid of visit times.
use scandiction::scan::hilbert_scan;

fn main() -> scandiction::Result<()> {
    let k = 3;
    let side = 1usize << k;
    let curve = hilbert_scan(k)?;
    let mut time = vec![0usize; side * side];
    for (t, s) in curve.order().iter().enumerate() {
        time[s.row * side + s.col] = t;
    }
    for row in time.chunks(side) {
        let line: Vec<String> = row.iter().map(|t| format!("{t:3}")).collect();
        println!("{}", line.join(""));
    }
    let adjacent = curve.order().windows(2).all(|w| w[0].manhattan(w[1]) == 1);
    println!("every step moves to a neighbour: {adjacent}");
    Ok(())
}
