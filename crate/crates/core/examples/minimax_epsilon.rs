//! Best affine fit of the Bayes envelope by the binary entropy, per loss.
use scandiction::loss::{bayes_envelope, binary_entropy, minimax_affine, Loss};

fn main() -> scandiction::Result<()> {
    for loss in [Loss::Hamming, Loss::Squared, Loss::Log] {
        let a = minimax_affine(loss);
        println!(
            "{loss:<8} alpha={:.6} beta={:+.6} eps={:.6} equioscillates={}",
            a.alpha,
            a.beta,
            a.epsilon,
            a.equioscillates()
        );
        if a.epsilon < 1e-12 {
            println!("          exact fit");
            continue;
        }
        for e in &a.extrema {
            println!("          error {:+.6} at p={:.4}", e.error, e.p);
        }
    }
    let loss = Loss::Squared;
    let a = minimax_affine(loss);
    println!("\n   p   envelope     fit");
    for i in 0..=10 {
        let p = i as f64 / 20.0;
        println!("{p:5.2} {:9.5} {:9.5}", bayes_envelope(loss, p)?, a.alpha * binary_entropy(p) + a.beta);
    }
    Ok(())
}
