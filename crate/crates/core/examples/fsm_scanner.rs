//! A finite-state scanner: the serpentine machine, its text form, and a
//! data-dependent machine that is rejected because it never covers the grid.
use scandiction::grid::{Alphabet, DataArray, Site};
use scandiction::scan::{fsm_scan, FsmScannerSpec};

fn show(label: &str, sites: &[Site]) {
    let path: Vec<String> = sites.iter().map(|s| format!("({},{})", s.row, s.col)).collect();
    println!("{label}: {}", path.join(" "));
}

fn main() -> scandiction::Result<()> {
    let a = DataArray::from_fn(3, 4, Alphabet::Binary, |s: Site| ((s.row + 2 * s.col) % 3 == 0) as u8 as f64)?;
    let serp = FsmScannerSpec::serpentine();
    print!("{}", serp.to_text());
    show("serpentine", &fsm_scan(&serp, &a)?.sites);

    // State 0 walks right; the first 1 it reads switches it to walking down
    // for good, so it leaves most sites unvisited.
    let turner = FsmScannerSpec::new(2, 2, 0, Site::new(0, 0), vec![0, 1, 0, 1, 1, 1], vec![(0, 1), (1, 0)])?;
    match fsm_scan(&turner, &a) {
        Ok(t) => show("turner", &t.sites),
        Err(e) => println!("turner is not a scanner on this array: {e}"),
    }
    Ok(())
}
