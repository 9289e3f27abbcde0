use proptest::prelude::*;

use scandiction::entropy::{
    consistency_bound, consistency_gap, consistency_holds_exact, empirical_dist, lz78_compressibility,
    sandwich_check,
};
use scandiction::loss::{
    bayes_envelope, binary_entropy, fmg_gap, inv_binary_entropy, minimax_affine, minimax_affine_in,
    EntropyBase, Loss,
};
use scandiction::predict::markov_fit;

proptest! {
    #[test]
    fn entropy_inverse_round_trip(y in 0.0f64..=1.0) {
        let p = inv_binary_entropy(y).unwrap();
        prop_assert!((0.0..=0.5).contains(&p));
        prop_assert!((binary_entropy(p) - y).abs() <= 1e-10);
    }

    #[test]
    fn empirical_model_is_a_distribution(
        seq in proptest::collection::vec(0u8..3, 8..300),
        k in 0usize..4,
    ) {
        let seq: Vec<f64> = seq.iter().map(|x| f64::from(*x)).collect();
        let m = empirical_dist(&seq, 3, k).unwrap();
        prop_assert_eq!(m.windows(), (seq.len() - k) as u64);
        let mut total = 0.0;
        let mut s = vec![0usize; k + 1];
        loop {
            total += m.prob(&s).unwrap();
            let mut i = 0;
            while i <= k && s[i] == 2 {
                s[i] = 0;
                i += 1;
            }
            if i > k {
                break;
            }
            s[i] += 1;
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
        for j in 0..=k {
            let small = empirical_dist(&seq, 3, j).unwrap();
            prop_assert!(consistency_holds_exact(&m, &small).unwrap());
            prop_assert!(consistency_gap(&m, &small).unwrap() <= consistency_bound(&m, &small) + 1e-15);
        }
    }

    /// The in-sample order-k optimum sits within eps + k l_max / N of the
    /// affine function of the empirical conditional entropy.
    #[test]
    fn empirical_sandwich(
        bits in proptest::collection::vec(any::<bool>(), 10..400),
        k in 0usize..4,
        squared in any::<bool>(),
    ) {
        let loss = if squared { Loss::Squared } else { Loss::Hamming };
        let seq: Vec<f64> = bits.iter().map(|b| f64::from(u8::from(*b))).collect();
        let approx = minimax_affine(loss);
        let measured = markov_fit(&seq, 2, k, loss).unwrap().sequence_loss(&[&seq]) / seq.len() as f64;
        let s = sandwich_check(&seq, 2, k, &approx, measured).unwrap();
        prop_assert!(s.holds(), "{:?}", s);
        prop_assert!(sandwich_check(&seq, 2, k, &approx, measured + 0.01).is_err());
    }

    #[test]
    fn affine_fit_bounds_the_envelope(p in 0.0f64..=1.0) {
        for loss in [Loss::Hamming, Loss::Squared, Loss::Log] {
            let a = minimax_affine(loss);
            let gap = (a.alpha * binary_entropy(p) + a.beta - bayes_envelope(loss, p).unwrap()).abs();
            prop_assert!(gap <= a.epsilon + 1e-9);
        }
    }
}

#[test]
fn epsilon_does_not_depend_on_the_entropy_base() {
    for loss in [Loss::Hamming, Loss::Squared, Loss::Log] {
        let bits = minimax_affine_in(loss, EntropyBase::Bits);
        let nats = minimax_affine_in(loss, EntropyBase::Nats);
        assert!((bits.epsilon - nats.epsilon).abs() < 1e-9, "{loss}");
        assert!((bits.alpha - nats.alpha * std::f64::consts::LN_2).abs() < 1e-6, "{loss}");
    }
}

#[test]
fn fits_equioscillate() {
    for loss in [Loss::Hamming, Loss::Squared] {
        let a = minimax_affine(loss);
        assert!(a.equioscillates(), "{a:?}");
        assert!(a.alternations() >= 3);
    }
}

#[test]
fn fmg_curve_anchors() {
    assert_eq!(fmg_gap(0.0), 0.0);
    assert!(fmg_gap(1.0).abs() < 1e-12);
    assert!((inv_binary_entropy(0.5).unwrap() - 0.110028).abs() < 1e-6);
    assert!((fmg_gap(0.5) - (0.25 - 0.110028)).abs() < 1e-6);
}

#[test]
fn lz78_separates_structure_from_noise() {
    // A constant sequence parses into about sqrt(2N) phrases.
    let zeros = vec![0.0; 100_000];
    assert!(lz78_compressibility(&zeros, 2).unwrap() < 0.05);
    let mut rng = scandiction::rng::seeded(1);
    let noise: Vec<f64> = (0..100_000).map(|_| f64::from(rand::Rng::gen_range(&mut rng, 0..2u8))).collect();
    assert!(lz78_compressibility(&noise, 2).unwrap() > 0.9);
}
