//! Seeded random-field generators and the predictors that are optimal for them.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::grid::{Alphabet, DataArray, Site};
use crate::loss::{bayes_envelope, binary_entropy, Loss};
use crate::predict::{bayes_predict, History, Predictor};
use crate::rng::{seeded, Rng};

/// Layout of a binary symmetric Markov chain on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkovLayout {
    /// One chain of length `n^2` on a `1 x n^2` row.
    OneD,
    /// An independent stationary chain along every row of an `n x n` grid.
    RowWise,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    IidBernoulli { p: f64 },
    /// Symmetric chain that flips with probability `flip` at each step.
    MarkovRow { flip: f64, layout: MarkovLayout },
    /// Cyclically shifted binary expansion of a uniform real.
    ShiftAdversary,
    /// Independent `m x m` tiles, each drawn from `inner` at side `m`.
    MixingBlocks { m: usize, inner: Box<FieldKind> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub kind: FieldKind,
    pub seed: u64,
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(name, format!("{p} is not a probability")))
    }
}

/// Stationary binary symmetric Markov chain of length `len`.
pub fn markov_chain(flip: f64, len: usize, rng: &mut Rng) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut x = rng.gen_bool(0.5);
    for _ in 0..len {
        out.push(f64::from(u8::from(x)));
        if rng.gen_bool(flip) {
            x = !x;
        }
    }
    out
}

fn generate_with(kind: &FieldKind, n: usize, rng: &mut Rng) -> Result<DataArray> {
    match kind {
        FieldKind::IidBernoulli { p } => {
            check_prob("p", *p)?;
            DataArray::from_fn(n, n, Alphabet::Binary, |_| f64::from(u8::from(rng.gen_bool(*p))))
        }
        FieldKind::MarkovRow { flip, layout } => {
            check_prob("flip", *flip)?;
            match layout {
                MarkovLayout::OneD => {
                    DataArray::new(1, n * n, Alphabet::Binary, markov_chain(*flip, n * n, rng))
                }
                MarkovLayout::RowWise => {
                    let mut cells = Vec::with_capacity(n * n);
                    for _ in 0..n {
                        cells.extend(markov_chain(*flip, n, rng));
                    }
                    DataArray::new(n, n, Alphabet::Binary, cells)
                }
            }
        }
        FieldKind::ShiftAdversary => Ok(ShiftAdversary::draw(n, rng)?.to_array()),
        FieldKind::MixingBlocks { m, inner } => {
            if *m == 0 || *m > n {
                return Err(Error::param("m", format!("tile side {m} for grid side {n}")));
            }
            if matches!(**inner, FieldKind::MarkovRow { layout: MarkovLayout::OneD, .. }) {
                return Err(Error::param("inner", "tiles must be square fields"));
            }
            let mut cells = vec![0.0; n * n];
            let mut alphabet = Alphabet::Binary;
            for tr in (0..n).step_by(*m) {
                for tc in (0..n).step_by(*m) {
                    let tile = generate_with(inner, *m, rng)?;
                    alphabet = tile.alphabet();
                    for r in 0..(*m).min(n - tr) {
                        for c in 0..(*m).min(n - tc) {
                            cells[(tr + r) * n + tc + c] = tile.get(Site::new(r, c));
                        }
                    }
                }
            }
            DataArray::new(n, n, alphabet, cells)
        }
    }
}

/// Draws an `n x n` field (a `1 x n^2` row for the one-dimensional chain).
pub fn generate(spec: &FieldSpec, n: usize) -> Result<DataArray> {
    if n < 2 {
        return Err(Error::param("n", "grid side must be at least 2"));
    }
    generate_with(&spec.kind, n, &mut seeded(spec.seed))
}

/// One draw of the shifted-expansion field on an `n x n` grid.
///
/// Before shifting, row-major position 0 holds a uniform real `U` and
/// positions `1..n^2` hold the first `n^2 - 1` bits of its binary expansion.
/// The field is that sequence cyclically shifted by `shift`, so position
/// `(k + shift) mod n^2` holds entry `k`. The expansion bits are kept
/// exactly; the real cell's value is represented by a double that agrees
/// with `U` in its leading bits.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftAdversary {
    n: usize,
    bits: Vec<u8>,
    shift: usize,
    real: f64,
}

impl ShiftAdversary {
    pub fn draw(n: usize, rng: &mut Rng) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n", "grid side must be at least 2"));
        }
        let len = n * n;
        let bits: Vec<u8> = (0..len - 1).map(|_| u8::from(rng.gen_bool(0.5))).collect();
        let shift = rng.gen_range(0..len);
        // Leading 52 bits of U from the expansion; the remainder of U is fresh.
        let mut real = 0.0;
        let mut scale = 0.5;
        for b in bits.iter().take(52) {
            real += scale * f64::from(*b);
            scale *= 0.5;
        }
        let lead = bits.len().min(52);
        let tail: f64 = rng.gen_range(0.0..1.0);
        real += tail * 0.5f64.powi(lead as i32);
        // Keep the real cell distinguishable from a bit.
        let real = real.clamp(f64::EPSILON, 1.0 - f64::EPSILON);
        Ok(ShiftAdversary {
            n,
            bits,
            shift,
            real,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    pub fn real(&self) -> f64 {
        self.real
    }

    /// Row-major position of the real-valued cell.
    pub fn real_position(&self) -> usize {
        self.shift
    }

    /// Value at row-major position `pos`.
    pub fn value(&self, pos: usize) -> f64 {
        let len = self.n * self.n;
        let k = (pos + len - self.shift) % len;
        if k == 0 {
            self.real
        } else {
            f64::from(self.bits[k - 1])
        }
    }

    pub fn to_array(&self) -> DataArray {
        let cells = (0..self.n * self.n).map(|p| self.value(p)).collect();
        DataArray::new(self.n, self.n, Alphabet::Unit, cells).expect("cells lie in [0,1]")
    }

    /// Recovers every cell from the real cell's position and expansion.
    pub fn reconstruct(&self, real_position: usize) -> Vec<f64> {
        let len = self.n * self.n;
        (0..len)
            .map(|p| {
                let k = (p + len - real_position) % len;
                if k == 0 {
                    self.real
                } else {
                    f64::from(self.bits[k - 1])
                }
            })
            .collect()
    }

    /// Squared loss of the optimal scandictor along a data-independent
    /// row-major visiting order: predict 1/2 until the real cell is seen,
    /// then predict every remaining cell exactly.
    pub fn squared_loss_along(&self, order: &[usize]) -> f64 {
        let mut total = 0.0;
        for &pos in order {
            let x = self.value(pos);
            total += (x - 0.5) * (x - 0.5);
            if pos == self.shift {
                break;
            }
        }
        total
    }
}

/// Optimal predictor for the shifted-expansion field: 1/2 until a non-binary
/// value has been observed, after which the remaining cells are read off the
/// shifted expansion.
#[derive(Debug, Clone)]
pub struct ShiftOracle {
    field: Arc<ShiftAdversary>,
    cols: usize,
}

impl ShiftOracle {
    pub fn new(field: Arc<ShiftAdversary>) -> Self {
        let cols = field.n;
        ShiftOracle { field, cols }
    }
}

impl Predictor for ShiftOracle {
    fn predict(&mut self, history: &History<'_>) -> f64 {
        let found = history
            .values
            .iter()
            .zip(history.sites)
            .find(|(v, _)| **v != 0.0 && **v != 1.0)
            .map(|(_, s)| s.row * self.cols + s.col);
        match found {
            Some(real_pos) => {
                let len = self.cols * self.cols;
                let pos = history.next.row * self.cols + history.next.col;
                let k = (pos + len - real_pos) % len;
                f64::from(self.field.bits[k - 1])
            }
            None => 0.5,
        }
    }

    fn name(&self) -> String {
        "shift-oracle".to_string()
    }
}

/// Bayes predictor for i.i.d. Bernoulli(p) data.
#[derive(Debug, Clone, Copy)]
pub struct KnownBernoulli {
    prediction: f64,
}

impl KnownBernoulli {
    pub fn new(p: f64, loss: Loss) -> Result<Self> {
        Ok(KnownBernoulli {
            prediction: bayes_predict(&[1.0 - p, p], loss)?,
        })
    }
}

impl Predictor for KnownBernoulli {
    fn predict(&mut self, _history: &History<'_>) -> f64 {
        self.prediction
    }

    fn name(&self) -> String {
        "known-bernoulli".to_string()
    }
}

/// Bayes predictor for grids whose rows are independent stationary symmetric
/// Markov chains, under any scan. The posterior of a cell depends only on the
/// nearest observed cells to its left and right in the same row.
#[derive(Debug, Clone)]
pub struct MarkovRowOracle {
    flip: f64,
    loss: Loss,
    rows: BTreeMap<usize, BTreeMap<usize, bool>>,
    ingested: usize,
}

impl MarkovRowOracle {
    pub fn new(flip: f64, loss: Loss) -> Result<Self> {
        check_prob("flip", flip)?;
        Ok(MarkovRowOracle {
            flip,
            loss,
            rows: BTreeMap::new(),
            ingested: 0,
        })
    }

    /// Probability that two cells `d` apart in a row are equal.
    fn same(&self, d: usize) -> f64 {
        0.5 * (1.0 + (1.0 - 2.0 * self.flip).powi(d as i32))
    }

    /// Posterior probability that `site` holds 1 given the observed cells.
    pub fn posterior(&self, site: Site) -> f64 {
        let Some(row) = self.rows.get(&site.row) else {
            return 0.5;
        };
        let left = row.range(..site.col).next_back();
        let right = row.range(site.col + 1..).next();
        let factor = |x: bool, neighbour: Option<(&usize, &bool)>| -> f64 {
            match neighbour {
                None => 1.0,
                Some((col, v)) => {
                    let s = self.same(col.abs_diff(site.col));
                    if *v == x {
                        s
                    } else {
                        1.0 - s
                    }
                }
            }
        };
        let w1 = factor(true, left) * factor(true, right);
        let w0 = factor(false, left) * factor(false, right);
        w1 / (w0 + w1)
    }
}

impl Predictor for MarkovRowOracle {
    fn reset(&mut self) {
        self.rows.clear();
        self.ingested = 0;
    }

    fn predict(&mut self, history: &History<'_>) -> f64 {
        if history.values.len() < self.ingested {
            self.reset();
        }
        for i in self.ingested..history.values.len() {
            let s = history.sites[i];
            self.rows
                .entry(s.row)
                .or_default()
                .insert(s.col, history.values[i] >= 0.5);
        }
        self.ingested = history.values.len();
        let p1 = self.posterior(history.next);
        bayes_predict(&[1.0 - p1, p1], self.loss).expect("posterior is a distribution")
    }

    fn name(&self) -> String {
        "markov-row-oracle".to_string()
    }
}

/// An analytically known loss of a field/scan pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticOptimum {
    /// Asymptotic expected loss per site.
    PerSite(f64),
    /// Lower bound on the expected cumulative loss over the whole grid.
    TotalLowerBound(f64),
}

/// Tabulated expected losses of optimal prediction along a named scan.
///
/// Markov entries are asymptotic per-site rates that ignore the O(1/n)
/// effect of chain starts.
pub fn analytic_optimum(kind: &FieldKind, scan: &str, loss: Loss, n: usize) -> Result<AnalyticOptimum> {
    let not_tabulated = || {
        Error::NotTabulated(format!("{kind:?} with scan `{scan}` under {loss} loss"))
    };
    match kind {
        FieldKind::IidBernoulli { p } => {
            check_prob("p", *p)?;
            Ok(AnalyticOptimum::PerSite(bayes_envelope(loss, *p)?))
        }
        FieldKind::MarkovRow { flip: p, layout } => {
            check_prob("flip", *p)?;
            let p = *p;
            let raster_like = matches!(scan, "raster" | "row-lr-down" | "serpentine");
            let per_site = match (loss, scan) {
                (Loss::Hamming | Loss::Squared, _) if raster_like => bayes_envelope(loss, p)?,
                (Loss::Hamming | Loss::Squared, "odds-evens") if *layout == MarkovLayout::OneD => {
                    // Odd sites see the chain at lag two; even sites see both neighbours.
                    let q = 2.0 * p * (1.0 - p);
                    let agree = p * p + (1.0 - p) * (1.0 - p);
                    let post = p * p / agree;
                    let evens = agree * bayes_envelope(loss, post)?
                        + (1.0 - agree) * bayes_envelope(loss, 0.5)?;
                    0.5 * (bayes_envelope(loss, q)? + evens)
                }
                (Loss::Hamming | Loss::Squared, "column" | "col-tb-right")
                    if *layout == MarkovLayout::RowWise =>
                {
                    bayes_envelope(loss, p)?
                }
                _ => return Err(not_tabulated()),
            };
            Ok(AnalyticOptimum::PerSite(per_site))
        }
        FieldKind::ShiftAdversary if loss == Loss::Squared => {
            // Until the real cell is found, every cell read is a fair bit
            // independent of the past, and it is found after (N-1)/2 bits on
            // average whatever the scan.
            let cells = (n * n) as f64;
            Ok(AnalyticOptimum::TotalLowerBound((cells - 1.0) / 8.0))
        }
        _ => Err(not_tabulated()),
    }
}

/// Entropy per site, in bits, of an `n x n` grid of independent stationary
/// symmetric chains along the rows.
pub fn rowwise_markov_entropy_rate(flip: f64, n: usize) -> f64 {
    (1.0 + (n as f64 - 1.0) * binary_entropy(flip)) / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predict::scandict;
    use crate::scan::{Orientation, ScanKind};

    #[test]
    fn same_seed_same_array() {
        let spec = FieldSpec {
            kind: FieldKind::IidBernoulli { p: 0.5 },
            seed: 4,
        };
        let a = generate(&spec, 64).unwrap();
        assert_eq!(a, generate(&spec, 64).unwrap());
        let mean = a.cells().iter().sum::<f64>() / a.len() as f64;
        // 3 sigma = 3 * 0.5 / 64
        assert!((mean - 0.5).abs() < 0.0235);
    }

    #[test]
    fn markov_transition_frequency() {
        let mut rng = seeded(7);
        let seq = markov_chain(0.25, 100_000, &mut rng);
        let flips = seq.windows(2).filter(|w| w[0] != w[1]).count() as f64;
        assert!((flips / 99_999.0 - 0.25).abs() < 0.01);
    }

    #[test]
    fn markov_marginals_are_stationary() {
        let mut rng = seeded(8);
        let seq = markov_chain(0.1, 200_000, &mut rng);
        let freq = |off: usize| -> f64 {
            let w: Vec<_> = seq[off..].chunks_exact(2).collect();
            w.iter().filter(|c| c[0] == 1.0 && c[1] == 1.0).count() as f64 / w.len() as f64
        };
        assert!((freq(0) - freq(1)).abs() < 0.01);
    }

    #[test]
    fn rowwise_layout_rows_are_chains() {
        let spec = FieldSpec {
            kind: FieldKind::MarkovRow {
                flip: 0.0,
                layout: MarkovLayout::RowWise,
            },
            seed: 1,
        };
        let a = generate(&spec, 16).unwrap();
        for r in 0..16 {
            let first = a.get(Site::new(r, 0));
            assert!((0..16).all(|c| a.get(Site::new(r, c)) == first));
        }
        let one_d = FieldSpec {
            kind: FieldKind::MarkovRow {
                flip: 0.3,
                layout: MarkovLayout::OneD,
            },
            seed: 1,
        };
        assert_eq!(generate(&one_d, 8).unwrap().cols(), 64);
    }

    #[test]
    fn shift_adversary_reconstructs_from_the_real_cell() {
        let mut rng = seeded(2);
        for n in [2, 3, 8, 16] {
            let adv = ShiftAdversary::draw(n, &mut rng).unwrap();
            let a = adv.to_array();
            let real_pos = a
                .cells()
                .iter()
                .position(|v| *v != 0.0 && *v != 1.0)
                .unwrap();
            assert_eq!(real_pos, adv.real_position());
            assert_eq!(adv.reconstruct(real_pos), a.cells());
        }
    }

    #[test]
    fn shift_oracle_matches_direct_accounting() {
        let mut rng = seeded(3);
        for _ in 0..20 {
            let adv = Arc::new(ShiftAdversary::draw(6, &mut rng).unwrap());
            let a = adv.to_array();
            for kind in ScanKind::all() {
                let Ok(s) = kind.build(a.rect()) else { continue };
                let (loss, _) =
                    scandict(&a, &s, &mut ShiftOracle::new(adv.clone()), Loss::Squared).unwrap();
                let order: Vec<usize> = s.order().iter().map(|s| s.row * 6 + s.col).collect();
                assert!((loss - adv.squared_loss_along(&order)).abs() < 1e-12, "{kind}");
            }
        }
    }

    #[test]
    fn mixing_blocks_tile_independently() {
        let spec = FieldSpec {
            kind: FieldKind::MixingBlocks {
                m: 4,
                inner: Box::new(FieldKind::MarkovRow {
                    flip: 0.0,
                    layout: MarkovLayout::RowWise,
                }),
            },
            seed: 9,
        };
        let a = generate(&spec, 10).unwrap();
        assert_eq!(a.rows(), 10);
        // Within a tile every row is constant.
        for r in 0..10 {
            for tc in [0, 4, 8] {
                let first = a.get(Site::new(r, tc));
                assert!((tc..(tc + 4).min(10)).all(|c| a.get(Site::new(r, c)) == first));
            }
        }
    }

    #[test]
    fn markov_oracle_on_raster_matches_transition_rule() {
        let spec = FieldSpec {
            kind: FieldKind::MarkovRow {
                flip: 0.25,
                layout: MarkovLayout::RowWise,
            },
            seed: 5,
        };
        let a = generate(&spec, 64).unwrap();
        let s = crate::scan::raster_scan(a.rect(), Orientation::RowLrDown);
        let mut oracle = MarkovRowOracle::new(0.25, Loss::Hamming).unwrap();
        let (loss, traj) = scandict(&a, &s, &mut oracle, Loss::Hamming).unwrap();
        // Repeat-last within a row; the first cell of each row is predicted 0.
        let mut direct = 0.0;
        for (i, site) in traj.sites.iter().enumerate() {
            let q = if site.col == 0 { 0.0 } else { traj.values[i - 1] };
            direct += Loss::Hamming.eval(traj.values[i], q);
        }
        assert_eq!(loss, direct);
    }

    #[test]
    fn odds_evens_table_value() {
        let kind = FieldKind::MarkovRow {
            flip: 0.25,
            layout: MarkovLayout::OneD,
        };
        assert_eq!(
            analytic_optimum(&kind, "odds-evens", Loss::Hamming, 0).unwrap(),
            AnalyticOptimum::PerSite(5.0 / 16.0)
        );
        assert_eq!(
            analytic_optimum(&kind, "raster", Loss::Hamming, 0).unwrap(),
            AnalyticOptimum::PerSite(0.25)
        );
        assert_eq!(
            analytic_optimum(&FieldKind::ShiftAdversary, "hilbert", Loss::Squared, 4).unwrap(),
            AnalyticOptimum::TotalLowerBound(15.0 / 8.0)
        );
        assert!(analytic_optimum(&kind, "hilbert", Loss::Hamming, 0).is_err());
    }
}
