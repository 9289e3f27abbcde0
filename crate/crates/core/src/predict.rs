//! Predictors and the cumulative-loss driver.

use crate::error::{Error, Result};
use crate::grid::{DataArray, Site};
use crate::loss::Loss;
use crate::scan::{scan_with, ScanTrajectory, Scanner};

/// What a predictor may look at before the next value is revealed: the sites
/// and values seen so far in the current segment, and the site to predict.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    pub sites: &'a [Site],
    pub values: &'a [f64],
    pub next: Site,
}

impl<'a> History<'a> {
    /// History of a plain sequence, for one-dimensional use.
    pub fn of_values(values: &'a [f64]) -> Self {
        History {
            sites: &[],
            values,
            next: Site::new(0, values.len()),
        }
    }
}

/// A sequential predictor. `reset` is called at the start of every
/// independently scanned segment.
pub trait Predictor: Send {
    fn reset(&mut self) {}

    fn predict(&mut self, history: &History<'_>) -> f64;

    fn name(&self) -> String {
        "predictor".to_string()
    }
}

/// Always predicts the same value.
#[derive(Debug, Clone, Copy)]
pub struct ConstantPredictor(pub f64);

impl Predictor for ConstantPredictor {
    fn predict(&mut self, _history: &History<'_>) -> f64 {
        self.0
    }

    fn name(&self) -> String {
        format!("constant-{}", self.0)
    }
}

fn validate_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty support".into()));
    }
    if p.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidDistribution(format!("negative or non-finite mass in {p:?}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("masses sum to {total}")));
    }
    Ok(())
}

/// Bayes response to non-negative weights over symbols `0..w.len()`; the
/// weights need not be normalized. Zero total weight is read as uniform.
fn bayes_from_weights(w: &[f64], loss: Loss) -> f64 {
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        let uniform = vec![1.0; w.len()];
        return bayes_from_weights(&uniform, loss);
    }
    match loss {
        Loss::Hamming => {
            let mut best = 0;
            for (x, v) in w.iter().enumerate() {
                if *v > w[best] {
                    best = x;
                }
            }
            best as f64
        }
        Loss::Squared => w.iter().enumerate().map(|(x, v)| x as f64 * v).sum::<f64>() / total,
        Loss::Absolute => {
            let mut acc = 0.0;
            for (x, v) in w.iter().enumerate() {
                acc += v;
                if acc >= total / 2.0 {
                    return x as f64;
                }
            }
            (w.len() - 1) as f64
        }
        Loss::Log => w.get(1).copied().unwrap_or(0.0) / total,
    }
}

/// Prediction minimizing the expected loss under `p` (a distribution over
/// symbols `0..p.len()`). Hamming ties go to the smallest symbol; log loss
/// is defined for binary symbols only and predicts `p(1)`.
pub fn bayes_predict(p: &[f64], loss: Loss) -> Result<f64> {
    validate_distribution(p)?;
    if loss == Loss::Log && p.len() != 2 {
        return Err(Error::InvalidDistribution(format!(
            "log loss over {} symbols",
            p.len()
        )));
    }
    Ok(bayes_from_weights(p, loss))
}

/// Prediction used for contexts that carry no information.
pub fn neutral_prediction(symbols: usize, loss: Loss) -> f64 {
    bayes_from_weights(&vec![1.0; symbols], loss)
}

/// Largest context table a [`MarkovTable`] may allocate.
pub const MAX_CONTEXTS: usize = 1 << 24;

/// A k-th order Markov predictor as a lookup table.
///
/// Contexts are the previous `k` values of the current segment. Near the
/// start of a segment the missing positions hold a start marker, so a
/// context digit is 0 for "before the start" and `x + 1` for symbol `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovTable {
    order: usize,
    symbols: usize,
    loss: Loss,
    /// `contexts x symbols` transition counts.
    counts: Vec<u64>,
    decisions: Vec<f64>,
}

impl MarkovTable {
    fn context_count(symbols: usize, order: usize) -> Result<usize> {
        let base = symbols + 1;
        let mut n = 1usize;
        for _ in 0..order {
            n = n
                .checked_mul(base)
                .filter(|n| *n <= MAX_CONTEXTS)
                .ok_or_else(|| Error::param("k", format!("order {order} needs too many contexts")))?;
        }
        Ok(n)
    }

    fn empty(symbols: usize, order: usize, loss: Loss) -> Result<Self> {
        if symbols < 2 {
            return Err(Error::param("symbols", "need at least two symbols"));
        }
        if loss == Loss::Log && symbols != 2 {
            return Err(Error::param("loss", "log loss needs a binary alphabet"));
        }
        let contexts = Self::context_count(symbols, order)?;
        Ok(MarkovTable {
            order,
            symbols,
            loss,
            counts: vec![0; contexts * symbols],
            decisions: vec![neutral_prediction(symbols, loss); contexts],
        })
    }

    /// A table with explicit per-context decisions, indexed as described on
    /// the type. `decisions.len()` must be `(symbols + 1)^order`.
    pub fn from_decisions(symbols: usize, order: usize, loss: Loss, decisions: Vec<f64>) -> Result<Self> {
        let mut t = Self::empty(symbols, order, loss)?;
        if decisions.len() != t.decisions.len() {
            return Err(Error::param(
                "decisions",
                format!("expected {} entries, got {}", t.decisions.len(), decisions.len()),
            ));
        }
        t.decisions = decisions;
        Ok(t)
    }

    /// Order-1 table that repeats the last value and predicts `first` at a segment start.
    pub fn repeat_last(symbols: usize, loss: Loss, first: f64) -> Result<Self> {
        let mut decisions = vec![first];
        decisions.extend((0..symbols).map(|x| x as f64));
        Self::from_decisions(symbols, 1, loss, decisions)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn decisions(&self) -> &[f64] {
        &self.decisions
    }

    pub fn counts(&self, context: usize) -> &[u64] {
        &self.counts[context * self.symbols..(context + 1) * self.symbols]
    }

    /// Context index of the `order` values preceding position `t` of `seq`.
    pub fn context_at(&self, seq: &[f64], t: usize) -> usize {
        let base = self.symbols + 1;
        let mut ctx = 0;
        for j in (0..self.order).rev() {
            let digit = if t > j { seq[t - 1 - j] as usize + 1 } else { 0 };
            ctx = ctx * base + digit;
        }
        ctx
    }

    pub fn decision(&self, context: usize) -> f64 {
        self.decisions[context]
    }

    /// Cumulative loss of this table on a sequence, restarting at every segment.
    pub fn sequence_loss(&self, segments: &[&[f64]]) -> f64 {
        segments
            .iter()
            .map(|seg| {
                (0..seg.len())
                    .map(|t| self.loss.eval(seg[t], self.decisions[self.context_at(seg, t)]))
                    .sum::<f64>()
            })
            .sum()
    }
}

impl Predictor for MarkovTable {
    fn predict(&mut self, history: &History<'_>) -> f64 {
        let t = history.values.len();
        self.decisions[self.context_at(history.values, t)]
    }

    fn name(&self) -> String {
        format!("markov-k{}", self.order)
    }
}

fn check_symbols(seq: &[f64], symbols: usize) -> Result<()> {
    match seq
        .iter()
        .find(|x| **x < 0.0 || x.fract() != 0.0 || **x as usize >= symbols)
    {
        Some(x) => Err(Error::OutOfRange(format!(
            "value {x} is not one of {symbols} symbols"
        ))),
        None => Ok(()),
    }
}

/// Fits the k-th order Markov table minimizing the empirical loss over the
/// given segments, each scanned from a fresh start. Every position is
/// counted, including the first `k` of a segment under their padded contexts.
pub fn fit_segments(segments: &[&[f64]], symbols: usize, order: usize, loss: Loss) -> Result<MarkovTable> {
    let mut table = MarkovTable::empty(symbols, order, loss)?;
    for seg in segments {
        check_symbols(seg, symbols)?;
        for t in 0..seg.len() {
            let ctx = table.context_at(seg, t);
            table.counts[ctx * symbols + seg[t] as usize] += 1;
        }
    }
    for ctx in 0..table.decisions.len() {
        let c = table.counts(ctx);
        if c.iter().any(|v| *v > 0) {
            let w: Vec<f64> = c.iter().map(|v| *v as f64).collect();
            table.decisions[ctx] = bayes_from_weights(&w, loss);
        }
    }
    Ok(table)
}

/// Fits the k-th order Markov predictor to one observation sequence.
pub fn markov_fit(seq: &[f64], symbols: usize, order: usize, loss: Loss) -> Result<MarkovTable> {
    if order >= seq.len() {
        return Err(Error::SequenceTooShort {
            len: seq.len(),
            order,
        });
    }
    fit_segments(&[seq], symbols, order, loss)
}

/// Runs the scandictor `(scanner, predictor)` over `array` and returns its
/// cumulative loss with the trajectory. The predictor is reset at the start
/// and at every segment restart and sees only the current segment.
pub fn scandict(
    array: &DataArray,
    scanner: &dyn Scanner,
    predictor: &mut dyn Predictor,
    loss: Loss,
) -> Result<(f64, ScanTrajectory)> {
    let mut predictions = Vec::with_capacity(scanner.domain().area());
    predictor.reset();
    let traj = scan_with(scanner, array, |visit, sites, values| {
        if visit.restart && !predictions.is_empty() {
            predictor.reset();
        }
        predictions.push(predictor.predict(&History {
            sites,
            values,
            next: visit.site,
        }));
    })?;
    let total = traj
        .values
        .iter()
        .zip(&predictions)
        .map(|(x, q)| loss.eval(*x, *q))
        .sum();
    Ok((total, traj))
}

/// Cumulative loss of a predictor on a plain sequence.
pub fn predict_sequence(seq: &[f64], predictor: &mut dyn Predictor, loss: Loss) -> f64 {
    predictor.reset();
    (0..seq.len())
        .map(|t| loss.eval(seq[t], predictor.predict(&History::of_values(&seq[..t]))))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Alphabet;
    use crate::scan::{raster_scan, Orientation, ScanKind};

    #[test]
    fn bayes_examples() {
        assert_eq!(bayes_predict(&[0.3, 0.7], Loss::Hamming).unwrap(), 1.0);
        assert_eq!(bayes_predict(&[0.5, 0.5], Loss::Hamming).unwrap(), 0.0);
        assert!((bayes_predict(&[0.6, 0.4], Loss::Squared).unwrap() - 0.4).abs() < 1e-15);
        assert!((bayes_predict(&[0.6, 0.4], Loss::Log).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(bayes_predict(&[0.2, 0.2, 0.6], Loss::Absolute).unwrap(), 2.0);
        assert!(bayes_predict(&[0.5, 0.6], Loss::Hamming).is_err());
        assert!(bayes_predict(&[-0.1, 1.1], Loss::Hamming).is_err());
        assert!(bayes_predict(&[0.2, 0.2, 0.6], Loss::Log).is_err());
    }

    #[test]
    fn fit_example_from_hand_count() {
        let seq = [0.0, 0.0, 1.0, 0.0, 0.0];
        let t = markov_fit(&seq, 2, 1, Loss::Hamming).unwrap();
        assert_eq!(t.decision(1), 0.0);
        assert_eq!(t.counts(1), &[2, 1]);
        assert_eq!(t.decision(2), 0.0);
        assert!(markov_fit(&seq, 2, 5, Loss::Hamming).is_err());
    }

    #[test]
    fn constant_sequence_fits_perfectly() {
        let seq = vec![0.0; 40];
        for k in 0..4 {
            for loss in [Loss::Hamming, Loss::Squared, Loss::Absolute] {
                let t = markov_fit(&seq, 2, k, loss).unwrap();
                assert_eq!(t.sequence_loss(&[&seq]), 0.0);
            }
        }
    }

    #[test]
    fn fair_bits_order_zero_squared() {
        use rand::Rng;
        let mut rng = crate::rng::seeded(11);
        let seq: Vec<f64> = (0..100_000).map(|_| rng.gen_range(0..2) as f64).collect();
        let t = markov_fit(&seq, 2, 0, Loss::Squared).unwrap();
        assert!((t.decision(0) - 0.5).abs() < 0.01);
        let per_site = t.sequence_loss(&[&seq]) / seq.len() as f64;
        assert!((per_site - 0.25).abs() < 0.001);
    }

    #[test]
    fn checkerboard_is_order_one_predictable() {
        let a = DataArray::from_fn(4, 4, Alphabet::Binary, |s| ((s.row + s.col) % 2) as f64)
            .unwrap();
        let s = raster_scan(a.rect(), Orientation::RowLrDown);
        let traj = crate::scan::scan(&s, &a).unwrap();
        let mut table = markov_fit(&traj.values, 2, 1, Loss::Hamming).unwrap();
        let (loss, _) = scandict(&a, &s, &mut table, Loss::Hamming).unwrap();
        // Row ends repeat the last symbol, so the alternation breaks three times,
        // and the padded start context sees one 0.
        let direct = table.sequence_loss(&[&traj.values]);
        assert_eq!(loss, direct);
        assert!(loss <= 3.0);
    }

    #[test]
    fn half_predictor_squared_loss() {
        let a = DataArray::from_fn(5, 3, Alphabet::Binary, |s| ((s.row * 7 + s.col) % 3 == 0) as u8 as f64)
            .unwrap();
        let (loss, _) = scandict(
            &a,
            &raster_scan(a.rect(), Orientation::ColTbLeft),
            &mut ConstantPredictor(0.5),
            Loss::Squared,
        )
        .unwrap();
        assert_eq!(loss, 15.0 / 4.0);
    }

    #[test]
    fn scan_then_sequence_invariance() {
        use rand::Rng;
        let mut rng = crate::rng::seeded(5);
        let a = DataArray::from_fn(8, 8, Alphabet::Binary, |_| rng.gen_range(0..2) as f64).unwrap();
        let s = ScanKind::Hilbert.build(a.rect()).unwrap();
        let traj = crate::scan::scan(&s, &a).unwrap();
        let mut table = markov_fit(&traj.values, 2, 2, Loss::Hamming).unwrap();
        let (l2d, _) = scandict(&a, &s, &mut table, Loss::Hamming).unwrap();
        let row = DataArray::new(1, 64, Alphabet::Binary, traj.values.clone()).unwrap();
        let (l1d, _) = scandict(
            &row,
            &raster_scan(row.rect(), Orientation::RowLrDown),
            &mut table,
            Loss::Hamming,
        )
        .unwrap();
        assert_eq!(l2d, l1d);
        assert_eq!(l1d, predict_sequence(&traj.values, &mut table, Loss::Hamming));
    }

    #[test]
    fn repeat_last_table() {
        let t = MarkovTable::repeat_last(2, Loss::Hamming, 0.0).unwrap();
        let seq = [1.0, 1.0, 0.0, 0.0, 1.0];
        // Mistakes at the start (predicts 0, sees 1) and at each change.
        assert_eq!(t.sequence_loss(&[&seq]), 3.0);
    }
}
