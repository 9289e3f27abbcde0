//! Exponential weighting over every scandictor of 2x2 binary blocks:
//! 576 adaptive scan trees times 2^15 predictors, evaluated exactly.
use scandiction::experiments::split_markov_field;
use scandiction::loss::Loss;
use scandiction::universal::{run_full_pool_m2, FULL_POOL_PREDICTORS};

fn main() -> scandiction::Result<()> {
    let array = split_markov_field(16, 0.1, 5)?;
    let run = run_full_pool_m2(&array, Loss::Hamming, None, 5)?;
    println!("pool size {} x {FULL_POOL_PREDICTORS} = {}", 576, run.lambda);
    println!("eta {:.6}", run.eta);
    println!("best scandictor loss {:.1}", run.l_min);
    println!("expected loss        {:.2}", run.l_alg_expected);
    println!("drawn loss           {:.1}", run.l_alg);
    println!("regret {:.2} <= {:.2}", run.l_alg_expected - run.l_min, run.bound);
    let tight = run.log_ratio.iter().zip(&run.hoeffding).filter(|(l, h)| l <= h).count();
    println!("weight-ratio inequality holds on {tight}/{} blocks", run.log_ratio.len());
    Ok(())
}
