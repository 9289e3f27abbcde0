//! A symmetric Markov chain predicted in raster order and in
//! odds-then-evens order, each with the optimal predictor for that order.
use scandiction::fields::{markov_chain, MarkovRowOracle};
use scandiction::grid::{Alphabet, DataArray};
use scandiction::loss::Loss;
use scandiction::predict::scandict;
use scandiction::rng::seeded;
use scandiction::scan::{Orientation, ScanKind};

fn main() -> scandiction::Result<()> {
    let (flip, len) = (0.25, 100_000);
    let array = DataArray::new(1, len, Alphabet::Binary, markov_chain(flip, len, &mut seeded(7)))?;
    for kind in [ScanKind::Raster(Orientation::RowLrDown), ScanKind::OddsEvens] {
        let scanner = kind.build(array.rect())?;
        let mut oracle = MarkovRowOracle::new(flip, Loss::Hamming)?;
        let (total, _) = scandict(&array, &scanner, &mut oracle, Loss::Hamming)?;
        println!("{:<16} error rate {:.4}", kind.name(), total / len as f64);
    }
    // Odd sites form a chain with flip probability 2p(1-p). An even site
    // between equal neighbours errs with p^2 / (p^2 + (1-p)^2); between
    // unequal neighbours it is a coin toss.
    let p = flip;
    let two_step = 2.0 * p * (1.0 - p);
    let agree = p * p / (p * p + (1.0 - p) * (1.0 - p));
    let even = (1.0 - two_step) * agree + two_step * 0.5;
    println!("expected: raster {p:.4}, odds-evens {:.4}", (two_step + even) / 2.0);
    Ok(())
}
