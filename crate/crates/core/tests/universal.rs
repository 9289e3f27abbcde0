use proptest::prelude::*;

use scandiction::grid::{Alphabet, DataArray, Site};
use scandiction::loss::Loss;
use scandiction::universal::{
    optimal_eta, regret_bound, run_universal, weights_update, ExpertPool, LossMatrix, RunLog, Schedule,
};

fn array6(bits: &[bool]) -> DataArray {
    DataArray::from_fn(6, 6, Alphabet::Binary, |s: Site| f64::from(u8::from(bits[s.row * 6 + s.col]))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn regret_and_weight_ratio_on_small_arrays(
        bits in proptest::collection::vec(any::<bool>(), 36),
        lambda in 1usize..5,
        m in 2usize..4,
        squared in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let loss = if squared { Loss::Squared } else { Loss::Hamming };
        let a = array6(&bits);
        let pool = ExpertPool::orientations(lambda, loss).unwrap();
        let matrix = LossMatrix::compute(&a, &pool, m, loss).unwrap();
        let eta = optimal_eta(m, 6, lambda as f64, loss.l_max());
        let s = Schedule::new(&matrix, eta);
        prop_assert!(s.expected_total() - s.l_min <= regret_bound(m, 6, lambda as f64, loss.l_max()) + 1e-9);
        prop_assert!(s.weight_ratio_violations().is_empty());
        prop_assert!(s.probs.iter().all(|p| (p.iter().sum::<f64>() - 1.0).abs() < 1e-12));
        prop_assert!(s.probs[0].iter().all(|p| (p - 1.0 / lambda as f64).abs() < 1e-12));

        // Ledger increments lie in [0, m^2 l_max].
        let cap = (m * m) as f64 * loss.l_max();
        prop_assert!(matrix.losses.iter().flatten().all(|l| (0.0..=cap + 1e-12).contains(l)));

        let log = RunLog::from_schedule(&matrix, &s, seed);
        prop_assert!((log.l_alg - log.block_loss.iter().sum::<f64>()).abs() < 1e-9);
        let last = log.cumulative.last().unwrap();
        prop_assert_eq!(log.l_min, last.iter().copied().fold(f64::INFINITY, f64::min));
        for w in log.cumulative.windows(2) {
            prop_assert!(w[0].iter().zip(&w[1]).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn weights_are_a_stable_softmax(
        losses in proptest::collection::vec(0.0f64..1e6, 1..20),
        eta in 1e-6f64..10.0,
    ) {
        let p = weights_update(&losses, eta);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|x| x.is_finite() && *x >= 0.0));
        // Lower loss never gets lower weight.
        for i in 0..losses.len() {
            for j in 0..losses.len() {
                if losses[i] < losses[j] {
                    prop_assert!(p[i] >= p[j]);
                }
            }
        }
    }
}

#[test]
fn run_is_reproducible_and_seed_sensitive() {
    let bits: Vec<bool> = (0..36).map(|i| (i * 7 + i / 5) % 3 == 0).collect();
    let a = array6(&bits);
    let pool = ExpertPool::orientations(4, Loss::Hamming).unwrap();
    let x = run_universal(&a, &pool, 2, Loss::Hamming, Some(2.0), 1).unwrap();
    let y = run_universal(&a, &pool, 2, Loss::Hamming, Some(2.0), 1).unwrap();
    assert_eq!(x, y);
    let differs = (2..40).any(|s| run_universal(&a, &pool, 2, Loss::Hamming, Some(2.0), s).unwrap().chosen != x.chosen);
    assert!(differs);
    // The expectation does not depend on the draw.
    let z = run_universal(&a, &pool, 2, Loss::Hamming, Some(2.0), 99).unwrap();
    assert_eq!(x.l_alg_expected, z.l_alg_expected);
}
