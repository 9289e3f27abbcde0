//! Empirical distributions of scanned sequences, conditional entropies, the
//! LZ78 compressibility estimate, and the entropy/loss sandwich.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::loss::{AffineApprox, EntropyBase, Loss};
use crate::predict::markov_fit;

/// Largest number of strings an [`EmpiricalModel`] may tabulate.
pub const MAX_STRINGS: usize = 1 << 24;

/// Order-`(k+1)` empirical distribution of a symbol sequence: the relative
/// frequency of each string among the `N - k` sliding windows of length `k+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalModel {
    window: usize,
    symbols: usize,
    /// Indexed big-endian: the first symbol of a string is most significant.
    counts: Vec<u64>,
    total: u64,
    source_len: usize,
    source_hash: u64,
}

fn fingerprint(seq: &[f64]) -> u64 {
    // FNV-1a over the bit patterns.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in seq {
        for b in v.to_bits().to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

fn to_symbols(seq: &[f64], symbols: usize) -> Result<Vec<usize>> {
    seq.iter()
        .map(|x| {
            if *x >= 0.0 && x.fract() == 0.0 && (*x as usize) < symbols {
                Ok(*x as usize)
            } else {
                Err(Error::OutOfRange(format!("value {x} is not one of {symbols} symbols")))
            }
        })
        .collect()
}

/// Builds the order-`(k+1)` empirical distribution of `seq` over `symbols` symbols.
pub fn empirical_dist(seq: &[f64], symbols: usize, k: usize) -> Result<EmpiricalModel> {
    if seq.len() <= k {
        return Err(Error::SequenceTooShort {
            len: seq.len(),
            order: k,
        });
    }
    if symbols < 2 {
        return Err(Error::param("symbols", "need at least two symbols"));
    }
    let window = k + 1;
    let size = (0..window)
        .try_fold(1usize, |acc, _| acc.checked_mul(symbols).filter(|n| *n <= MAX_STRINGS))
        .ok_or_else(|| Error::param("k", format!("{symbols}^{window} strings is too many")))?;
    let syms = to_symbols(seq, symbols)?;
    let mut counts = vec![0u64; size];
    let mut idx = 0usize;
    for (i, &x) in syms.iter().enumerate() {
        idx = (idx * symbols + x) % size;
        if i + 1 >= window {
            counts[idx] += 1;
        }
    }
    Ok(EmpiricalModel {
        window,
        symbols,
        counts,
        total: (seq.len() - k) as u64,
        source_len: seq.len(),
        source_hash: fingerprint(seq),
    })
}

impl EmpiricalModel {
    /// Window length `k + 1`.
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    /// Number of windows, `N - k`.
    pub fn windows(&self) -> u64 {
        self.total
    }

    fn index(&self, s: &[usize]) -> Result<usize> {
        if s.len() > self.window {
            return Err(Error::param(
                "string",
                format!("length {} exceeds window {}", s.len(), self.window),
            ));
        }
        s.iter().try_fold(0usize, |acc, &x| {
            if x >= self.symbols {
                Err(Error::OutOfRange(format!("symbol {x}")))
            } else {
                Ok(acc * self.symbols + x)
            }
        })
    }

    /// Window count of a string of length at most `k+1`; shorter strings are
    /// counted as prefixes of windows.
    pub fn count(&self, s: &[usize]) -> Result<u64> {
        let idx = self.index(s)?;
        let span = self.symbols.pow((self.window - s.len()) as u32);
        Ok(self.counts[idx * span..(idx + 1) * span].iter().sum())
    }

    /// `P^(s)`; for `|s| < k+1` this is the prefix marginal `sum_x P^([s, x])`.
    pub fn prob(&self, s: &[usize]) -> Result<f64> {
        Ok(self.count(s)? as f64 / self.total as f64)
    }

    /// `P^(x | s')` for a context of length `k`, with `0/0 = 1/q`.
    pub fn conditional(&self, x: usize, context: &[usize]) -> Result<f64> {
        if context.len() + 1 != self.window {
            return Err(Error::param("context", format!("need length {}", self.window - 1)));
        }
        let joint = {
            let mut s = context.to_vec();
            s.push(x);
            self.count(&s)?
        };
        let marginal = self.count(context)?;
        Ok(if marginal == 0 {
            1.0 / self.symbols as f64
        } else {
            joint as f64 / marginal as f64
        })
    }

    /// Empirical conditional entropy `H^(X | X^k)` in nats, `0 log 0 = 0`.
    pub fn cond_entropy(&self) -> f64 {
        let q = self.symbols;
        let total = self.total as f64;
        let mut h = 0.0;
        for row in self.counts.chunks(q) {
            let m: u64 = row.iter().sum();
            if m == 0 {
                continue;
            }
            for &c in row.iter().filter(|c| **c > 0) {
                h -= (c as f64 / total) * (c as f64 / m as f64).ln();
            }
        }
        h
    }

    pub fn cond_entropy_bits(&self) -> f64 {
        self.cond_entropy() / std::f64::consts::LN_2
    }

    fn same_source(&self, other: &EmpiricalModel) -> Result<()> {
        if self.source_len != other.source_len
            || self.source_hash != other.source_hash
            || self.symbols != other.symbols
        {
            return Err(Error::DomainMismatch(
                "models were built from different sequences".into(),
            ));
        }
        Ok(())
    }
}

/// Largest `|P^{k+1}(s) - P^{j}(s)|` over strings `s` of length `j`, where
/// `big` has window `k+1` and `small` window `j <= k+1`, both built from the
/// same sequence.
pub fn consistency_gap(big: &EmpiricalModel, small: &EmpiricalModel) -> Result<f64> {
    big.same_source(small)?;
    if small.window > big.window {
        return Err(Error::param("j", "second model must not have the longer window"));
    }
    let span = big.symbols.pow((big.window - small.window) as u32);
    let mut gap: f64 = 0.0;
    for (idx, &c_small) in small.counts.iter().enumerate() {
        let c_big: u64 = big.counts[idx * span..(idx + 1) * span].iter().sum();
        let d = (c_big as f64 / big.total as f64 - c_small as f64 / small.total as f64).abs();
        gap = gap.max(d);
    }
    Ok(gap)
}

/// `(k + 1 - j) / (N - k)`, the bound on [`consistency_gap`].
pub fn consistency_bound(big: &EmpiricalModel, small: &EmpiricalModel) -> f64 {
    (big.window - small.window) as f64 / big.total as f64
}

/// Checks the consistency bound for every string in exact integer
/// arithmetic: `|c/M - c'/M'| <= D/M` with `M = N - k`, `M' = M + D`.
pub fn consistency_holds_exact(big: &EmpiricalModel, small: &EmpiricalModel) -> Result<bool> {
    big.same_source(small)?;
    if small.window > big.window {
        return Err(Error::param("j", "second model must not have the longer window"));
    }
    let span = big.symbols.pow((big.window - small.window) as u32);
    let m = i128::from(big.total);
    let m2 = i128::from(small.total);
    let d = (big.window - small.window) as i128;
    Ok(small.counts.iter().enumerate().all(|(idx, &c_small)| {
        let c_big: u64 = big.counts[idx * span..(idx + 1) * span].iter().sum();
        let lhs = (i128::from(c_big) * m2 - i128::from(c_small) * m).abs();
        lhs * m <= d * m * m2
    }))
}

/// Number of phrases in the incremental (LZ78) parse of `seq`, counting a
/// trailing incomplete phrase.
pub fn lz78_phrases(seq: &[usize]) -> usize {
    let mut trie: HashMap<(usize, usize), usize> = HashMap::new();
    let mut node = 0usize;
    let mut phrases = 0;
    for &x in seq {
        match trie.get(&(node, x)) {
            Some(&child) => node = child,
            None => {
                phrases += 1;
                let id = phrases;
                trie.insert((node, x), id);
                node = 0;
            }
        }
    }
    if node != 0 {
        phrases += 1;
    }
    phrases
}

/// LZ78 compressibility estimate `c (log2 c + log2 q) / N` in bits per
/// symbol, where `c` is the phrase count. Finite-length values can exceed
/// `log2 q`.
pub fn lz78_compressibility(seq: &[f64], symbols: usize) -> Result<f64> {
    if seq.len() < 2 {
        return Err(Error::SequenceTooShort {
            len: seq.len(),
            order: 1,
        });
    }
    let syms = to_symbols(seq, symbols)?;
    let c = lz78_phrases(&syms) as f64;
    Ok(c * (c.log2() + (symbols as f64).log2()) / seq.len() as f64)
}

/// Outcome of comparing a measured loss with the affine function of the
/// empirical conditional entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich {
    /// `H^(X | X^k)` in the entropy base of the approximation.
    pub entropy: f64,
    pub per_site_loss: f64,
    /// `|alpha H + beta - L|`.
    pub residual: f64,
    /// `epsilon + k l_max / N`.
    pub bound: f64,
}

impl Sandwich {
    pub fn holds(&self) -> bool {
        self.residual <= self.bound + 1e-12
    }
}

/// Checks `|alpha H^(X|X^k) + beta - L| <= epsilon + k l_max / N`, where `L`
/// is the measured per-site loss of the optimal k-th order Markov predictor
/// on `seq`. The loss is recomputed from `seq`; a measurement that does not
/// come from that predictor on that sequence is rejected.
pub fn sandwich_check(
    seq: &[f64],
    symbols: usize,
    k: usize,
    approx: &AffineApprox,
    measured_per_site: f64,
) -> Result<Sandwich> {
    let loss: Loss = approx.loss;
    let table = markov_fit(seq, symbols, k, loss)?;
    let n = seq.len() as f64;
    let refit = table.sequence_loss(&[seq]) / n;
    if (refit - measured_per_site).abs() > 1e-9 * (1.0 + refit.abs()) {
        return Err(Error::DomainMismatch(format!(
            "measured loss {measured_per_site} is not the order-{k} optimum {refit} on this sequence"
        )));
    }
    let model = empirical_dist(seq, symbols, k)?;
    let entropy = match approx.base {
        EntropyBase::Bits => model.cond_entropy_bits(),
        EntropyBase::Nats => model.cond_entropy(),
    };
    Ok(Sandwich {
        entropy,
        per_site_loss: refit,
        residual: (approx.alpha * entropy + approx.beta - refit).abs(),
        bound: approx.epsilon + k as f64 * loss.l_max() / n,
    })
}

/// `|alpha H + beta - L|` for a known entropy rate `H` (in the base of `approx`).
pub fn stochastic_residual(approx: &AffineApprox, entropy_rate: f64, per_site_loss: f64) -> f64 {
    (approx.alpha * entropy_rate + approx.beta - per_site_loss).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::minimax_affine;
    use rand::Rng;

    fn bits(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = crate::rng::seeded(seed);
        (0..n).map(|_| rng.gen_range(0..2) as f64).collect()
    }

    #[test]
    fn alternating_sequence_pairs() {
        let seq = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let m = empirical_dist(&seq, 2, 1).unwrap();
        assert_eq!(m.windows(), 5);
        assert!((m.prob(&[0, 1]).unwrap() - 0.6).abs() < 1e-15);
        assert!((m.prob(&[1, 0]).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(m.prob(&[0, 0]).unwrap(), 0.0);
        assert_eq!(m.prob(&[1, 1]).unwrap(), 0.0);
        assert_eq!(m.cond_entropy(), 0.0);
        assert_eq!(m.conditional(0, &[0]).unwrap(), 0.0);
        assert!(empirical_dist(&seq, 2, 6).is_err());
    }

    #[test]
    fn constant_sequence_is_a_point_mass() {
        let seq = vec![1.0; 30];
        for k in 0..5 {
            let m = empirical_dist(&seq, 2, k).unwrap();
            assert_eq!(m.prob(&vec![1; k + 1]).unwrap(), 1.0);
            assert_eq!(m.cond_entropy(), 0.0);
        }
    }

    #[test]
    fn unseen_context_is_uniform() {
        let m = empirical_dist(&[0.0, 0.0, 0.0], 2, 1).unwrap();
        assert_eq!(m.conditional(1, &[1]).unwrap(), 0.5);
    }

    #[test]
    fn marginals_are_consistent() {
        let seq = bits(500, 3);
        let m = empirical_dist(&seq, 2, 3).unwrap();
        let total: f64 = (0..16)
            .map(|i| m.prob(&[(i >> 3) & 1, (i >> 2) & 1, (i >> 1) & 1, i & 1]).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        for a in 0..2 {
            for b in 0..2 {
                let direct = m.prob(&[a, b]).unwrap();
                let summed: f64 = (0..2)
                    .flat_map(|c| (0..2).map(move |d| (c, d)))
                    .map(|(c, d)| m.prob(&[a, b, c, d]).unwrap())
                    .sum();
                assert!((direct - summed).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fair_bits_entropy() {
        let seq = bits(100_000, 9);
        let m = empirical_dist(&seq, 2, 0).unwrap();
        assert!((m.cond_entropy() - std::f64::consts::LN_2).abs() < 0.01);
    }

    #[test]
    fn consistency_on_random_sequence() {
        let seq = bits(100, 17);
        let big = empirical_dist(&seq, 2, 3).unwrap();
        let small = empirical_dist(&seq, 2, 0).unwrap();
        let gap = consistency_gap(&big, &small).unwrap();
        assert!(gap <= 3.0 / 97.0);
        assert!(consistency_holds_exact(&big, &small).unwrap());
        assert_eq!(consistency_gap(&big, &big).unwrap(), 0.0);
        let other = empirical_dist(&bits(100, 18), 2, 0).unwrap();
        assert!(consistency_gap(&big, &other).is_err());
    }

    #[test]
    fn lz78_anchors() {
        assert_eq!(lz78_phrases(&[0, 1, 0, 0, 0, 1, 1]), 5);
        let zeros = vec![0.0; 100_000];
        assert!(lz78_compressibility(&zeros, 2).unwrap() < 0.05);
        let periodic: Vec<f64> = (0..1_000_000).map(|i| (i % 2) as f64).collect();
        assert!(lz78_compressibility(&periodic, 2).unwrap() < 0.05);
        let random = bits(100_000, 1);
        let rho = lz78_compressibility(&random, 2).unwrap();
        assert!((0.9..=1.3).contains(&rho), "{rho}");
    }

    #[test]
    fn sandwich_on_deterministic_and_random_data() {
        let h = minimax_affine(Loss::Hamming);
        let zeros = vec![0.0; 1000];
        let s = sandwich_check(&zeros, 2, 2, &h, 0.0).unwrap();
        assert!(s.holds());
        assert!((s.residual - h.beta.abs()).abs() < 1e-12);

        let seq = bits(5000, 2);
        let table = markov_fit(&seq, 2, 3, Loss::Hamming).unwrap();
        let l = table.sequence_loss(&[&seq]) / seq.len() as f64;
        assert!(sandwich_check(&seq, 2, 3, &h, l).unwrap().holds());
        assert!(sandwich_check(&seq, 2, 3, &h, l + 0.01).is_err());
    }

    #[test]
    fn log_loss_residual_vanishes() {
        let log = minimax_affine(Loss::Log);
        let seq = bits(4000, 4);
        let table = markov_fit(&seq, 2, 2, Loss::Log).unwrap();
        let l = table.sequence_loss(&[&seq]) / seq.len() as f64;
        let s = sandwich_check(&seq, 2, 2, &log, l).unwrap();
        assert!(s.holds());
        assert!(s.residual <= 2.0 * Loss::Log.l_max() / seq.len() as f64);
    }
}
