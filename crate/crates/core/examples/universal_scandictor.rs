//! Runs the block-wise exponential-weighting scandictor over four raster
//! experts on a field whose halves favour different directions.
use scandiction::experiments::split_markov_field;
use scandiction::loss::Loss;
use scandiction::universal::{regret_bound, run_universal, ExpertPool};

fn main() -> scandiction::Result<()> {
    let (n, m, lambda) = (64, 4, 4);
    let array = split_markov_field(n, 0.1, 21)?;
    let pool = ExpertPool::orientations(lambda, Loss::Hamming)?;
    let log = run_universal(&array, &pool, m, Loss::Hamming, None, 21)?;
    let last = log.cumulative.last().unwrap();
    for (e, total) in pool.experts().iter().zip(last) {
        println!("{:<24} ledger loss {total:8.1}", e.name);
    }
    println!("eta = {:.5}", log.eta);
    println!("drawn run      {:8.1}", log.l_alg);
    println!("expected run   {:8.2}", log.l_alg_expected);
    println!("best expert    {:8.1}", log.l_min);
    println!(
        "regret {:.2} <= bound {:.2}",
        log.expected_regret(),
        regret_bound(m, n, lambda as f64, Loss::Hamming.l_max())
    );
    Ok(())
}
