//! Gap between the error bound from compressibility and the inverse-entropy
//! error rate, with LZ78 estimates for a noisy and a structured sequence.
use rand::Rng;
use scandiction::entropy::lz78_compressibility;
use scandiction::loss::{fmg_gap, inv_binary_entropy};
use scandiction::rng::seeded;

fn main() -> scandiction::Result<()> {
    println!("  rho   h^-1(rho)    gap");
    for i in 0..=10 {
        let rho = i as f64 / 10.0;
        println!("{rho:5.2} {:10.5} {:9.5}", inv_binary_entropy(rho)?, fmg_gap(rho));
    }
    let mut rng = seeded(2);
    let noisy: Vec<f64> = (0..200_000).map(|_| f64::from(rng.gen_bool(0.1) as u8)).collect();
    let periodic: Vec<f64> = (0..200_000).map(|i| ((i / 3) % 2) as f64).collect();
    for (name, seq) in [("bernoulli(0.1)", &noisy), ("period 6", &periodic)] {
        let rho = lz78_compressibility(seq, 2)?;
        println!("{name:<15} LZ78 rho={rho:.4} gap={:.4}", fmg_gap(rho));
    }
    Ok(())
}
