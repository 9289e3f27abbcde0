//! Loss functions, Bayes envelopes, and the minimax affine approximation of a
//! binary Bayes envelope by the binary entropy function.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Floor applied to the probability mass under log loss so the loss stays bounded.
pub const LOG_FLOOR: f64 = 1e-9;

/// A per-symbol loss `l(x, q)` between a revealed symbol `x` and a prediction `q`.
///
/// Hamming loss takes predictions in the symbol alphabet. Squared and absolute
/// loss take real predictions. Log loss is binary only; its prediction is the
/// probability assigned to symbol 1 and the loss is measured in nats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Loss {
    Hamming,
    Squared,
    Absolute,
    Log,
}

impl Loss {
    pub const ALL: [Loss; 4] = [Loss::Hamming, Loss::Squared, Loss::Absolute, Loss::Log];

    pub fn eval(&self, x: f64, q: f64) -> f64 {
        match self {
            Loss::Hamming => {
                if x == q {
                    0.0
                } else {
                    1.0
                }
            }
            Loss::Squared => (x - q) * (x - q),
            Loss::Absolute => (x - q).abs(),
            Loss::Log => {
                let mass = if x >= 0.5 { q } else { 1.0 - q };
                -mass.max(LOG_FLOOR).ln()
            }
        }
    }

    /// Upper bound on the loss of a single prediction over binary or unit-interval data.
    pub fn l_max(&self) -> f64 {
        match self {
            Loss::Hamming | Loss::Squared | Loss::Absolute => 1.0,
            Loss::Log => -LOG_FLOOR.ln(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Loss::Hamming => "hamming",
            Loss::Squared => "squared",
            Loss::Absolute => "absolute",
            Loss::Log => "log",
        }
    }

    /// Expected loss of prediction `q` when the symbol is drawn from `p` over `0..p.len()`.
    pub fn risk(&self, p: &[f64], q: f64) -> f64 {
        p.iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(x, w)| w * self.eval(x as f64, q))
            .sum()
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hamming" => Ok(Loss::Hamming),
            "squared" | "square" | "mse" => Ok(Loss::Squared),
            "absolute" | "abs" => Ok(Loss::Absolute),
            "log" | "logloss" => Ok(Loss::Log),
            _ => Err(Error::param("loss", format!("unknown loss `{s}`"))),
        }
    }
}

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    binary_entropy_nats(p) / std::f64::consts::LN_2
}

/// Binary entropy in nats, with `0 log 0 = 0`.
pub fn binary_entropy_nats(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.ln() };
    term(p) + term(1.0 - p)
}

/// Bayes envelope `phi_l(p) = min_q [(1-p) l(0,q) + p l(1,q)]` for a Bernoulli(p) symbol.
pub fn bayes_envelope(loss: Loss, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::OutOfRange(format!("Bernoulli parameter {p}")));
    }
    Ok(match loss {
        Loss::Hamming | Loss::Absolute => p.min(1.0 - p),
        Loss::Squared => p * (1.0 - p),
        Loss::Log => binary_entropy_nats(p),
    })
}

fn envelope(loss: Loss, p: f64) -> f64 {
    bayes_envelope(loss, p).expect("mesh point inside [0,1]")
}

/// Logarithm base used for the entropy term of an [`AffineApprox`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyBase {
    Bits,
    Nats,
}

impl EntropyBase {
    fn entropy(&self, p: f64) -> f64 {
        match self {
            EntropyBase::Bits => binary_entropy(p),
            EntropyBase::Nats => binary_entropy_nats(p),
        }
    }
}

/// A point where the approximation error reaches its maximum magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub p: f64,
    /// Signed error `alpha h(p) + beta - phi(p)` at `p`.
    pub error: f64,
}

/// Best affine approximation `alpha h_b(p) + beta` of a binary Bayes envelope
/// in the uniform norm over `p` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineApprox {
    pub loss: Loss,
    pub alpha: f64,
    pub beta: f64,
    /// Maximum of `|alpha h(p) + beta - phi(p)|` at the returned coefficients.
    pub epsilon: f64,
    pub base: EntropyBase,
    /// Extremal points in increasing `p`.
    pub extrema: Vec<Extremum>,
}

impl AffineApprox {
    pub fn error_at(&self, p: f64) -> f64 {
        self.alpha * self.base.entropy(p) + self.beta - envelope(self.loss, p)
    }

    /// Number of sign alternations along the extremal points.
    pub fn alternations(&self) -> usize {
        self.extrema
            .windows(2)
            .filter(|w| w[0].error.signum() != w[1].error.signum())
            .count()
    }

    /// Chebyshev criterion: at least three extremal points with alternating signs.
    /// A zero-error fit is trivially optimal.
    pub fn equioscillates(&self) -> bool {
        self.epsilon < 1e-12 || self.alternations() >= 2
    }
}

const MESH: usize = 20_000;

/// Minimax affine approximation with entropy in bits.
pub fn minimax_affine(loss: Loss) -> AffineApprox {
    minimax_affine_in(loss, EntropyBase::Bits)
}

/// Solves `min_{alpha,beta} max_p |alpha h(p) + beta - phi_l(p)|`.
///
/// For fixed `alpha` the best `beta` centres the residual `phi - alpha h`, and
/// the resulting error is half the residual's range, which is convex in
/// `alpha`. A golden-section search over `alpha` on a mesh of width
/// `1/20000` is followed by local refinement of every extremum, so the
/// reported epsilon is the true maximum at the returned coefficients.
pub fn minimax_affine_in(loss: Loss, base: EntropyBase) -> AffineApprox {
    let ps: Vec<f64> = (0..=MESH).map(|i| i as f64 / MESH as f64).collect();
    let hs: Vec<f64> = ps.iter().map(|p| base.entropy(*p)).collect();
    let phis: Vec<f64> = ps.iter().map(|p| envelope(loss, *p)).collect();

    let range = |alpha: f64| -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (h, phi) in hs.iter().zip(&phis) {
            let r = phi - alpha * h;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    };
    let spread = |alpha: f64| {
        let (lo, hi) = range(alpha);
        hi - lo
    };

    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (-4.0, 4.0);
    let mut c = b - golden * (b - a);
    let mut d = a + golden * (b - a);
    let (mut fc, mut fd) = (spread(c), spread(d));
    for _ in 0..120 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - golden * (b - a);
            fc = spread(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + golden * (b - a);
            fd = spread(d);
        }
    }
    let alpha = (a + b) / 2.0;
    let (lo, hi) = range(alpha);
    let beta = (lo + hi) / 2.0;

    let mut approx = AffineApprox {
        loss,
        alpha,
        beta,
        epsilon: 0.0,
        base,
        extrema: Vec::new(),
    };
    let errs: Vec<f64> = ps.iter().map(|p| approx.error_at(*p)).collect();

    // Refine each local maximum of |error| between its mesh neighbours.
    let mut peaks = Vec::new();
    for i in 0..errs.len() {
        let here = errs[i].abs();
        let left = if i > 0 { errs[i - 1].abs() } else { f64::NEG_INFINITY };
        let right = errs.get(i + 1).map_or(f64::NEG_INFINITY, |e| e.abs());
        if here >= left && here >= right {
            let lo_p = ps[i.saturating_sub(1)];
            let hi_p = ps[(i + 1).min(MESH)];
            let p = refine_peak(&approx, lo_p, hi_p, ps[i]);
            peaks.push(Extremum {
                p,
                error: approx.error_at(p),
            });
        }
    }
    let epsilon = peaks.iter().map(|e| e.error.abs()).fold(0.0, f64::max);
    approx.epsilon = epsilon;

    let tol = (epsilon * 1e-3).max(1e-12);
    let mut extrema: Vec<Extremum> = Vec::new();
    for e in peaks.into_iter().filter(|e| e.error.abs() >= epsilon - tol) {
        match extrema.last() {
            Some(last) if e.p - last.p < 2.0 / MESH as f64 => {}
            _ => extrema.push(e),
        }
    }
    approx.extrema = extrema;
    approx
}

/// Golden-section maximization of `|error|` on `[lo, hi]`, never returning a
/// point worse than `start`.
fn refine_peak(approx: &AffineApprox, lo: f64, hi: f64, start: f64) -> f64 {
    let f = |p: f64| approx.error_at(p).abs();
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..80 {
        let c = b - golden * (b - a);
        let d = a + golden * (b - a);
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let mid = (a + b) / 2.0;
    [start, lo, hi, mid]
        .into_iter()
        .fold(start, |best, p| if f(p) > f(best) { p } else { best })
}

/// The unique `p` in `[0, 1/2]` with `h_b(p) = y` bits, by bisection to machine precision.
pub fn inv_binary_entropy(y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) || y.is_nan() {
        return Err(Error::OutOfRange(format!("entropy {y} bits")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if binary_entropy(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let err = |p: f64| (binary_entropy(p) - y).abs();
    Ok(if err(lo) <= err(hi) { lo } else { hi })
}

/// `rho/2 - h_b^{-1}(rho)`: the Hamming excess-loss bound of the Hilbert scan
/// relative to any finite-state scan, for compressibility `rho` in bits per
/// symbol. Values of `rho` outside `[0, 1]` (finite-length estimators can
/// overshoot) are clamped.
pub fn fmg_gap(rho: f64) -> f64 {
    let r = rho.clamp(0.0, 1.0);
    0.5 * r - inv_binary_entropy(r).expect("clamped into [0,1]")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_closed_forms() {
        assert_eq!(bayes_envelope(Loss::Hamming, 0.3).unwrap(), 0.3);
        assert_eq!(bayes_envelope(Loss::Squared, 0.5).unwrap(), 0.25);
        let p = 0.37;
        assert!((bayes_envelope(Loss::Log, p).unwrap() - binary_entropy_nats(p)).abs() < 1e-15);
        assert!(bayes_envelope(Loss::Hamming, 1.2).is_err());
        assert!(bayes_envelope(Loss::Hamming, -0.1).is_err());
    }

    #[test]
    fn envelope_matches_direct_minimization() {
        for &loss in &Loss::ALL {
            for i in 1..20 {
                let p = i as f64 / 20.0;
                let direct = (0..=10_000)
                    .map(|j| loss.risk(&[1.0 - p, p], j as f64 / 10_000.0))
                    .fold(f64::INFINITY, f64::min);
                let env = bayes_envelope(loss, p).unwrap();
                assert!(env <= direct + 1e-12, "{loss} p={p}");
                assert!(direct - env < 1e-4, "{loss} p={p}");
            }
        }
    }

    #[test]
    fn envelopes_are_concave() {
        for &loss in &Loss::ALL {
            let h = 1e-3;
            for i in 1..1000 {
                let p = i as f64 * h;
                let second = envelope(loss, p - h) - 2.0 * envelope(loss, p) + envelope(loss, p + h);
                assert!(second <= 1e-12, "{loss} p={p}");
            }
        }
    }

    #[test]
    fn minimax_hamming_and_squared() {
        let h = minimax_affine(Loss::Hamming);
        assert!((h.epsilon - 0.0805).abs() < 5e-4, "{h:?}");
        assert!((h.alpha - 0.5).abs() < 1e-3);
        assert!(h.equioscillates());
        let s = minimax_affine(Loss::Squared);
        assert!((s.epsilon - 0.01363).abs() < 2e-4, "{s:?}");
        assert!((s.alpha - 0.25).abs() < 2e-3);
        assert!(s.equioscillates());
        // Absolute loss shares the Hamming envelope.
        let a = minimax_affine(Loss::Absolute);
        assert!((a.epsilon - h.epsilon).abs() < 1e-9);
    }

    #[test]
    fn minimax_log_is_exact() {
        let l = minimax_affine(Loss::Log);
        assert!(l.epsilon < 1e-6);
        assert!((l.alpha - std::f64::consts::LN_2).abs() < 1e-6);
        assert!(l.beta.abs() < 1e-6);
        let n = minimax_affine_in(Loss::Log, EntropyBase::Nats);
        assert!((n.alpha - 1.0).abs() < 1e-6);
    }

    #[test]
    fn epsilon_is_base_invariant() {
        for loss in [Loss::Hamming, Loss::Squared] {
            let b = minimax_affine_in(loss, EntropyBase::Bits);
            let n = minimax_affine_in(loss, EntropyBase::Nats);
            assert!((b.epsilon - n.epsilon).abs() < 1e-6);
            assert!((b.alpha / std::f64::consts::LN_2 - n.alpha).abs() < 1e-4);
        }
    }

    #[test]
    fn no_nearby_coefficients_do_better() {
        let h = minimax_affine(Loss::Hamming);
        let worst = |alpha: f64, beta: f64| {
            (0..=2000)
                .map(|i| {
                    let p = i as f64 / 2000.0;
                    (alpha * binary_entropy(p) + beta - envelope(Loss::Hamming, p)).abs()
                })
                .fold(0.0, f64::max)
        };
        for da in [-0.01, 0.0, 0.01] {
            for db in [-0.01, 0.0, 0.01] {
                assert!(worst(h.alpha + da, h.beta + db) >= h.epsilon - 1e-4);
            }
        }
    }

    #[test]
    fn inverse_entropy_anchors() {
        assert_eq!(inv_binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(inv_binary_entropy(1.0).unwrap(), 0.5);
        let p = inv_binary_entropy(0.5).unwrap();
        assert!((p - 0.110028).abs() < 1e-6);
        assert!((binary_entropy(p) - 0.5).abs() < 1e-12);
        assert!(inv_binary_entropy(1.5).is_err());
    }

    #[test]
    fn fmg_gap_anchors() {
        assert_eq!(fmg_gap(0.0), 0.0);
        assert!(fmg_gap(0.1) < 0.04);
        assert_eq!(fmg_gap(1.3), fmg_gap(1.0));
    }

    #[test]
    fn log_loss_is_bounded() {
        assert!((Loss::Log.eval(1.0, 0.0) - Loss::Log.l_max()).abs() < 1e-12);
        assert_eq!(Loss::Log.eval(0.0, 0.0), 0.0);
        assert_eq!("squared".parse::<Loss>().unwrap(), Loss::Squared);
        assert!("huber".parse::<Loss>().is_err());
    }
}
