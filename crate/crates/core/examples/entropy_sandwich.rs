//! Empirical conditional entropy against the optimal k-th order loss on
//! Bernoulli sequences, with the affine sandwich checked on each.
use rand::Rng;
use scandiction::entropy::sandwich_check;
use scandiction::loss::{minimax_affine, Loss};
use scandiction::predict::markov_fit;
use scandiction::rng::seeded;

fn main() -> scandiction::Result<()> {
    let k = 2;
    let mut rng = seeded(9);
    for loss in [Loss::Hamming, Loss::Squared] {
        let approx = minimax_affine(loss);
        println!("{loss}: eps={:.5}", approx.epsilon);
        for p in [0.05, 0.2, 0.35, 0.5] {
            let seq: Vec<f64> = (0..50_000).map(|_| f64::from(rng.gen_bool(p) as u8)).collect();
            let per_site = markov_fit(&seq, 2, k, loss)?.sequence_loss(&[&seq]) / seq.len() as f64;
            let s = sandwich_check(&seq, 2, k, &approx, per_site)?;
            println!(
                "  p={p:.2} H={:.4} loss={:.4} residual={:.5} bound={:.5} holds={}",
                s.entropy,
                s.per_site_loss,
                s.residual,
                s.bound,
                s.holds()
            );
        }
    }
    Ok(())
}
