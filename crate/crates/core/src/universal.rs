//! Block-wise exponential weighting over a finite pool of scandictors.
//!
//! The grid is cut into blocks (see [`crate::grid::block_partition`]). Before
//! each block the algorithm draws one expert with probability proportional to
//! `exp(-eta L_j)`, where `L_j` is that expert's cumulative loss on the
//! previous blocks, and uses it on the block. Every expert is simulated on
//! every block so all `L_j` stay current.
//!
//! Edge blocks are charged `l_max` per site for every expert, so they never
//! change the weights; the algorithm still scans them with a row raster and
//! the neutral predictor, and that real loss is reported separately.

use std::io::Write;
use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{block_partition, BlockId, BlockLayout, DataArray, Rect};
use crate::loss::Loss;
use crate::predict::{neutral_prediction, scandict, ConstantPredictor, MarkovTable, Predictor};
use crate::rng::seeded;
use crate::scan::{
    enumerate_tree_scanners, raster_scan, Orientation, ScanKind, ScannerFactory, TreeScanner,
};

/// Shared constructor of fresh predictors.
pub type PredictorFactory = Arc<dyn Fn() -> Box<dyn Predictor> + Send + Sync>;

/// One scandictor of the pool, defined on any block.
#[derive(Clone)]
pub struct Expert {
    pub name: String,
    pub scanner: ScannerFactory,
    pub predictor: PredictorFactory,
}

impl Expert {
    /// Cumulative loss of this expert scanning `rect` of `array` from scratch.
    pub fn block_loss(&self, array: &DataArray, rect: Rect, loss: Loss) -> Result<f64> {
        let scanner = (self.scanner)(rect)?;
        if scanner.domain() != rect {
            return Err(Error::DomainMismatch(format!(
                "expert `{}` built a scanner over {} for block {rect}",
                self.name,
                scanner.domain()
            )));
        }
        let mut predictor = (self.predictor)();
        Ok(scandict(array, scanner.as_ref(), predictor.as_mut(), loss)?.0)
    }
}

/// A finite pool of experts.
#[derive(Clone, Default)]
pub struct ExpertPool {
    experts: Vec<Expert>,
}

impl ExpertPool {
    pub fn new(experts: Vec<Expert>) -> Self {
        ExpertPool { experts }
    }

    pub fn len(&self) -> usize {
        self.experts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }

    pub fn experts(&self) -> &[Expert] {
        &self.experts
    }

    pub fn push(&mut self, expert: Expert) {
        self.experts.push(expert);
    }

    /// The first `count` raster orientations, each paired with the order-1
    /// "repeat the last value" predictor over binary data.
    pub fn orientations(count: usize, loss: Loss) -> Result<Self> {
        if count == 0 || count > Orientation::ALL.len() {
            return Err(Error::param("lambda", format!("{count} orientations requested")));
        }
        let table = MarkovTable::repeat_last(2, loss, neutral_prediction(2, loss))?;
        let experts = Orientation::ALL[..count]
            .iter()
            .map(|o| {
                let t = table.clone();
                Expert {
                    name: format!("{}+repeat-last", o.name()),
                    scanner: ScanKind::Raster(*o).factory(),
                    predictor: Arc::new(move || Box::new(t.clone()) as Box<dyn Predictor>),
                }
            })
            .collect();
        Ok(ExpertPool { experts })
    }
}

/// `softmax(-eta L)`, shifted by the smallest loss so no weight underflows to
/// an all-zero vector.
pub fn weights_update(losses: &[f64], eta: f64) -> Vec<f64> {
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = losses.iter().map(|l| (-eta * (l - min)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Learning rate minimizing `ln(lambda)/eta + m^2 l_max^2 eta (n+m)^2 / 8`:
/// `sqrt(8 ln lambda) / (m l_max (n+m))`. A single expert needs no learning,
/// so `lambda = 1` returns 1.
pub fn optimal_eta(m: usize, n: usize, lambda: f64, l_max: f64) -> f64 {
    if lambda <= 1.0 {
        return 1.0;
    }
    (8.0 * lambda.ln()).sqrt() / (m as f64 * l_max * (n + m) as f64)
}

/// Bound on expected regret, `m (n+m) sqrt(ln lambda) l_max / sqrt(2)`.
pub fn regret_bound(m: usize, n: usize, lambda: f64, l_max: f64) -> f64 {
    if lambda <= 1.0 {
        return 0.0;
    }
    m as f64 * (n + m) as f64 * lambda.ln().sqrt() * l_max / std::f64::consts::SQRT_2
}

/// Probability bound `exp(-2 (K+1)^2 eps^2 / (m^2 l_max)^2)` on the realized
/// loss exceeding its expectation by `(K+1)^2 eps`.
pub fn chernoff_tail(k: usize, m: usize, epsilon: f64, l_max: f64) -> f64 {
    let blocks = ((k + 1) * (k + 1)) as f64;
    let range = (m * m) as f64 * l_max;
    (-2.0 * blocks * epsilon * epsilon / (range * range)).exp()
}

/// Per-block, per-expert losses on one array.
#[derive(Debug, Clone, PartialEq)]
pub struct LossMatrix {
    pub n: usize,
    pub m: usize,
    pub l_max: f64,
    pub blocks: Vec<BlockId>,
    /// `losses[i][j]`: loss charged to expert `j` on the `i`-th block.
    pub losses: Vec<Vec<f64>>,
    /// Real loss of the fallback scan on edge blocks (zero on full blocks).
    pub edge_actual: Vec<f64>,
}

impl LossMatrix {
    /// Simulates every expert on every full block, in parallel over experts.
    pub fn compute(array: &DataArray, pool: &ExpertPool, m: usize, loss: Loss) -> Result<Self> {
        if array.rows() != array.cols() {
            return Err(Error::DomainMismatch(format!(
                "block-wise scandiction needs a square array, got {}x{}",
                array.rows(),
                array.cols()
            )));
        }
        if pool.is_empty() {
            return Err(Error::param("pool", "no experts"));
        }
        let n = array.rows();
        let layout = block_partition(n, m)?;
        let blocks = layout.raster_block_order();
        let full: Vec<(usize, Rect)> = blocks
            .iter()
            .enumerate()
            .filter(|(_, id)| matches!(id, BlockId::Full { .. }))
            .map(|(i, id)| (i, layout.rect(*id)))
            .collect();
        let per_expert: Vec<Vec<f64>> = pool
            .experts
            .par_iter()
            .map(|e| {
                full.iter()
                    .map(|(_, rect)| e.block_loss(array, *rect, loss))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        let l_max = loss.l_max();
        let mut losses = Vec::with_capacity(blocks.len());
        let mut edge_actual = Vec::with_capacity(blocks.len());
        let mut next_full = 0;
        for id in &blocks {
            let rect = layout.rect(*id);
            match id {
                BlockId::Full { .. } => {
                    losses.push(per_expert.iter().map(|row| row[next_full]).collect());
                    edge_actual.push(0.0);
                    next_full += 1;
                }
                BlockId::Edge(_) => {
                    losses.push(vec![l_max * rect.area() as f64; pool.len()]);
                    edge_actual.push(edge_fallback_loss(array, rect, loss)?);
                }
            }
        }
        Ok(LossMatrix {
            n,
            m,
            l_max,
            blocks,
            losses,
            edge_actual,
        })
    }

    pub fn experts(&self) -> usize {
        self.losses.first().map_or(0, Vec::len)
    }

    /// Final cumulative loss of every expert.
    pub fn totals(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.experts()];
        for row in &self.losses {
            for (t, l) in total.iter_mut().zip(row) {
                *t += l;
            }
        }
        total
    }

    pub fn l_min(&self) -> f64 {
        self.totals().into_iter().fold(f64::INFINITY, f64::min)
    }
}

fn edge_fallback_loss(array: &DataArray, rect: Rect, loss: Loss) -> Result<f64> {
    let scanner = raster_scan(rect, Orientation::RowLrDown);
    let symbols = array.alphabet().size().unwrap_or(2) as usize;
    let mut predictor = ConstantPredictor(neutral_prediction(symbols, loss));
    Ok(scandict(array, &scanner, &mut predictor, loss)?.0)
}

/// The seed-independent part of a run: the weights before every block and
/// the quantities derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub eta: f64,
    /// `probs[i]`: distribution over experts before block `i`.
    pub probs: Vec<Vec<f64>>,
    /// `E_{P_i}[L_j(x^i)]` per block.
    pub expected: Vec<f64>,
    /// `ln(W_{i+1} / W_i)` per block.
    pub log_ratio: Vec<f64>,
    /// `-eta E_{P_i}[L_j(x^i)] + eta^2 (m^2 l_max)^2 / 8` per block.
    pub hoeffding: Vec<f64>,
    pub l_min: f64,
}

impl Schedule {
    pub fn new(matrix: &LossMatrix, eta: f64) -> Self {
        let lambda = matrix.experts();
        let range = (matrix.m * matrix.m) as f64 * matrix.l_max;
        let mut cum = vec![0.0; lambda];
        let mut probs = Vec::with_capacity(matrix.blocks.len());
        let mut expected = Vec::with_capacity(matrix.blocks.len());
        let mut log_ratio = Vec::with_capacity(matrix.blocks.len());
        let mut hoeffding = Vec::with_capacity(matrix.blocks.len());
        for row in &matrix.losses {
            let p = weights_update(&cum, eta);
            let e: f64 = p.iter().zip(row).map(|(p, l)| p * l).sum();
            // ln sum_j P_j exp(-eta l_j), shifted by the smallest block loss.
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            let s: f64 = p
                .iter()
                .zip(row)
                .map(|(p, l)| p * (-eta * (l - lo)).exp())
                .sum();
            log_ratio.push(s.ln() - eta * lo);
            hoeffding.push(-eta * e + eta * eta * range * range / 8.0);
            expected.push(e);
            probs.push(p);
            for (c, l) in cum.iter_mut().zip(row) {
                *c += l;
            }
        }
        Schedule {
            eta,
            probs,
            expected,
            log_ratio,
            hoeffding,
            l_min: cum.into_iter().fold(f64::INFINITY, f64::min),
        }
    }

    /// Expected cumulative loss of the algorithm.
    pub fn expected_total(&self) -> f64 {
        self.expected.iter().sum()
    }

    /// Blocks at which the per-step weight-ratio inequality fails (with a
    /// relative slack of 1e-12 for rounding).
    pub fn weight_ratio_violations(&self) -> Vec<usize> {
        self.log_ratio
            .iter()
            .zip(&self.hoeffding)
            .enumerate()
            .filter(|(_, (lr, h))| **lr > **h + 1e-12 * (1.0 + h.abs()))
            .map(|(i, _)| i)
            .collect()
    }

    /// Draws the expert for every block with a generator seeded by `seed`.
    pub fn draw(&self, seed: u64) -> Vec<usize> {
        let mut rng = seeded(seed);
        self.probs
            .iter()
            .map(|p| {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (j, pj) in p.iter().enumerate() {
                    acc += pj;
                    if u < acc {
                        return j;
                    }
                }
                p.len() - 1
            })
            .collect()
    }
}

/// Record of one run of the universal scandictor.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub eta: f64,
    pub blocks: Vec<BlockId>,
    pub chosen: Vec<usize>,
    /// Ledger loss of the chosen expert on each block.
    pub block_loss: Vec<f64>,
    pub expected: Vec<f64>,
    pub log_ratio: Vec<f64>,
    pub hoeffding: Vec<f64>,
    /// `cumulative[i][j]`: loss of expert `j` after block `i`.
    pub cumulative: Vec<Vec<f64>>,
    /// Ledger loss of the algorithm.
    pub l_alg: f64,
    /// Expected ledger loss of the algorithm.
    pub l_alg_expected: f64,
    pub l_min: f64,
    /// Loss actually incurred, with edge blocks scanned by the fallback.
    pub actual_loss: f64,
}

impl RunLog {
    pub fn from_schedule(matrix: &LossMatrix, schedule: &Schedule, seed: u64) -> Self {
        let chosen = schedule.draw(seed);
        let block_loss: Vec<f64> = chosen
            .iter()
            .zip(&matrix.losses)
            .map(|(j, row)| row[*j])
            .collect();
        let mut cum = vec![0.0; matrix.experts()];
        let mut cumulative = Vec::with_capacity(matrix.blocks.len());
        for row in &matrix.losses {
            for (c, l) in cum.iter_mut().zip(row) {
                *c += l;
            }
            cumulative.push(cum.clone());
        }
        let actual_loss = matrix
            .blocks
            .iter()
            .zip(&block_loss)
            .zip(&matrix.edge_actual)
            .map(|((id, l), e)| if matches!(id, BlockId::Full { .. }) { *l } else { *e })
            .sum();
        RunLog {
            eta: schedule.eta,
            blocks: matrix.blocks.clone(),
            l_alg: block_loss.iter().sum(),
            block_loss,
            chosen,
            expected: schedule.expected.clone(),
            log_ratio: schedule.log_ratio.clone(),
            hoeffding: schedule.hoeffding.clone(),
            cumulative,
            l_alg_expected: schedule.expected_total(),
            l_min: schedule.l_min,
            actual_loss,
        }
    }

    /// Expected regret against the best expert.
    pub fn expected_regret(&self) -> f64 {
        self.l_alg_expected - self.l_min
    }

    /// CSV with one row per block: index, chosen expert, its block loss, the
    /// running realized and expected totals, then every expert's running total.
    pub fn write_csv<W: Write>(&self, mut w: W, names: &[String]) -> Result<()> {
        write!(w, "block,chosen,block_loss,cum_alg,cum_expected")?;
        for name in names {
            write!(w, ",{name}")?;
        }
        writeln!(w)?;
        let (mut alg, mut exp) = (0.0, 0.0);
        for i in 0..self.blocks.len() {
            alg += self.block_loss[i];
            exp += self.expected[i];
            write!(w, "{i},{},{},{alg},{exp}", self.chosen[i], self.block_loss[i])?;
            for c in &self.cumulative[i] {
                write!(w, ",{c}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Runs the universal scandictor on a square array. `eta` defaults to
/// [`optimal_eta`].
pub fn run_universal(
    array: &DataArray,
    pool: &ExpertPool,
    m: usize,
    loss: Loss,
    eta: Option<f64>,
    seed: u64,
) -> Result<RunLog> {
    let matrix = LossMatrix::compute(array, pool, m, loss)?;
    let eta = eta.unwrap_or_else(|| optimal_eta(m, matrix.n, pool.len() as f64, loss.l_max()));
    if !(eta > 0.0) {
        return Err(Error::param("eta", "learning rate must be positive"));
    }
    let schedule = Schedule::new(&matrix, eta);
    Ok(RunLog::from_schedule(&matrix, &schedule, seed))
}

/// Number of predictors in the full 2x2 pool: one binary decision per
/// observed-history node of depth at most 3.
pub const FULL_POOL_PREDICTORS: u64 = 1 << 15;

/// Outcome of the exact exponential-weighting run over every scandictor of
/// 2x2 binary blocks: all 576 decision-tree scanners times all `2^15`
/// history-to-bit predictors.
#[derive(Debug, Clone, PartialEq)]
pub struct FullPoolRun {
    pub eta: f64,
    pub lambda: f64,
    pub expected: Vec<f64>,
    pub log_ratio: Vec<f64>,
    pub hoeffding: Vec<f64>,
    pub l_alg: f64,
    pub l_alg_expected: f64,
    pub l_min: f64,
    pub bound: f64,
}

fn log_add(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

fn log_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().collect();
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + v.iter().map(|x| (x - hi).exp()).sum::<f64>().ln()
}

/// Exponential weighting over the whole 2x2 pool without enumerating it.
///
/// An expert is a pair `(psi, f)`: a decision-tree scanner and a predictor
/// assigning a bit to each of the 15 history nodes. Its loss is a sum over
/// nodes of `C_psi(node, f(node))`, the loss accumulated at that node when
/// predicting that bit. The weight `exp(-eta L)` therefore factorizes, and
/// summing over `f` gives `W_psi = prod_node sum_d exp(-eta C_psi(node, d))`.
/// Drawing `psi` by `W_psi` and then each node's bit independently is an
/// exact draw from the exponential weights over all `576 * 2^15` experts.
pub fn run_full_pool_m2(array: &DataArray, loss: Loss, eta: Option<f64>, seed: u64) -> Result<FullPoolRun> {
    if array.alphabet().size() != Some(2) {
        return Err(Error::DomainMismatch("the full pool is defined for binary arrays".into()));
    }
    if array.rows() != array.cols() {
        return Err(Error::DomainMismatch("block-wise scandiction needs a square array".into()));
    }
    let n = array.rows();
    let m = 2;
    let layout: BlockLayout = block_partition(n, m)?;
    let trees: Vec<TreeScanner> = enumerate_tree_scanners(Rect::sized(2, 2))?;
    let lambda = trees.len() as f64 * FULL_POOL_PREDICTORS as f64;
    let l_max = loss.l_max();
    let eta = eta.unwrap_or_else(|| optimal_eta(m, n, lambda, l_max));
    let range = 4.0 * l_max;
    let mut rng = seeded(seed);

    // c[psi][node][d], node in 1..16.
    let mut c = vec![[[0.0f64; 2]; 16]; trees.len()];
    let mut edge_charge = 0.0;
    let (mut expected, mut log_ratio, mut hoeffding) = (Vec::new(), Vec::new(), Vec::new());
    let mut l_alg = 0.0;

    for id in layout.raster_block_order() {
        let rect = layout.rect(id);
        if matches!(id, BlockId::Edge(_)) {
            let charge = l_max * rect.area() as f64;
            edge_charge += charge;
            l_alg += charge;
            expected.push(charge);
            log_ratio.push(-eta * charge);
            hoeffding.push(-eta * charge + eta * eta * range * range / 8.0);
            continue;
        }
        let at = |s: crate::grid::Site| {
            array.get(crate::grid::Site::new(rect.origin.row + s.row, rect.origin.col + s.col))
        };
        let node_log = |cpsi: &[[f64; 2]; 16], node: usize| {
            log_add(-eta * cpsi[node][0], -eta * cpsi[node][1])
        };
        let log_w: Vec<f64> = c
            .iter()
            .map(|cpsi| (1..16).map(|node| node_log(cpsi, node)).sum())
            .collect();
        let log_total = log_sum(log_w.iter().copied());
        let paths: Vec<Vec<(usize, f64)>> = trees
            .iter()
            .map(|t| t.path(|s| at(s)).into_iter().map(|(node, s)| (node, at(s))).collect())
            .collect();

        // Expected block loss and the next total weight.
        let mut e = 0.0;
        let mut log_next = Vec::with_capacity(trees.len());
        for (psi, path) in paths.iter().enumerate() {
            let p_psi = (log_w[psi] - log_total).exp();
            let mut block = 0.0;
            let mut delta_log = 0.0;
            for &(node, x) in path {
                let [c0, c1] = c[psi][node];
                let before = log_add(-eta * c0, -eta * c1);
                let q1 = (-eta * c1 - before).exp();
                let (l0, l1) = (loss.eval(x, 0.0), loss.eval(x, 1.0));
                block += (1.0 - q1) * l0 + q1 * l1;
                delta_log += log_add(-eta * (c0 + l0), -eta * (c1 + l1)) - before;
            }
            e += p_psi * block;
            log_next.push(log_w[psi] + delta_log);
        }
        let lr = log_sum(log_next) - log_total;

        // Draw psi, then the bit at each node along its path.
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut psi = trees.len() - 1;
        for (j, lw) in log_w.iter().enumerate() {
            acc += (lw - log_total).exp();
            if u < acc {
                psi = j;
                break;
            }
        }
        for &(node, x) in &paths[psi] {
            let [c0, c1] = c[psi][node];
            let q1 = (-eta * c1 - log_add(-eta * c0, -eta * c1)).exp();
            let d = if rng.gen::<f64>() < q1 { 1.0 } else { 0.0 };
            l_alg += loss.eval(x, d);
        }

        for (psi, path) in paths.iter().enumerate() {
            for &(node, x) in path {
                c[psi][node][0] += loss.eval(x, 0.0);
                c[psi][node][1] += loss.eval(x, 1.0);
            }
        }
        expected.push(e);
        log_ratio.push(lr);
        hoeffding.push(-eta * e + eta * eta * range * range / 8.0);
    }

    let l_min = c
        .iter()
        .map(|cpsi| (1..16).map(|node| cpsi[node][0].min(cpsi[node][1])).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
        + edge_charge;
    Ok(FullPoolRun {
        eta,
        lambda,
        l_alg_expected: expected.iter().sum(),
        expected,
        log_ratio,
        hoeffding,
        l_alg,
        l_min,
        bound: regret_bound(m, n, lambda, l_max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{generate, FieldKind, FieldSpec, MarkovLayout};
    use crate::grid::{Alphabet, Site};

    #[test]
    fn weights_examples() {
        assert_eq!(weights_update(&[5.0, 5.0], 0.3), vec![0.5, 0.5]);
        let p = weights_update(&[0.0, 1e6], 1.0);
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1] < 1e-12);
        let p = weights_update(&[0.0, 1.0, 2.0], std::f64::consts::LN_2);
        for (got, want) in p.iter().zip([4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_and_bound_examples() {
        let eta = optimal_eta(2, 8, 4.0, 1.0);
        assert!((eta - (8.0 * 4f64.ln()).sqrt() / 20.0).abs() < 1e-15);
        assert!((eta - 0.1665).abs() < 1e-4);
        assert!((optimal_eta(2, 8, 4.0, 2.0) - eta / 2.0).abs() < 1e-15);
        let b = regret_bound(2, 8, 4.0, 1.0);
        assert!((b - 16.65).abs() < 0.01);
        assert_eq!(regret_bound(2, 8, 1.0, 1.0), 0.0);
        // The optimum of ln(lambda)/eta + m^2 l^2 eta (n+m)^2 / 8 equals the bound.
        let f = |e: f64| 4f64.ln() / e + 4.0 * e * 100.0 / 8.0;
        assert!((f(eta) - b).abs() < 1e-9);
        assert!(f(eta * 1.01) > f(eta) && f(eta * 0.99) > f(eta));
    }

    #[test]
    fn chernoff_examples() {
        assert_eq!(chernoff_tail(9, 2, 0.0, 1.0), 1.0);
        assert!((chernoff_tail(9, 2, 1.0, 1.0) - (-12.5f64).exp()).abs() < 1e-15);
        assert!(chernoff_tail(9, 2, 0.2, 1.0) < chernoff_tail(9, 2, 0.1, 1.0));
    }

    fn rowwise(n: usize, seed: u64) -> DataArray {
        generate(
            &FieldSpec {
                kind: FieldKind::MarkovRow {
                    flip: 0.1,
                    layout: MarkovLayout::RowWise,
                },
                seed,
            },
            n,
        )
        .unwrap()
    }

    #[test]
    fn single_expert_has_no_regret() {
        let a = rowwise(16, 1);
        let pool = ExpertPool::orientations(1, Loss::Hamming).unwrap();
        let log = run_universal(&a, &pool, 4, Loss::Hamming, None, 0).unwrap();
        assert!(log.chosen.iter().all(|j| *j == 0));
        assert!(log.expected_regret().abs() < 1e-9);
        assert_eq!(log.l_alg, log.l_min);
    }

    #[test]
    fn row_scanner_wins_on_rowwise_field() {
        let a = rowwise(64, 2);
        let pool = ExpertPool::new(vec![
            ExpertPool::orientations(1, Loss::Hamming).unwrap().experts()[0].clone(),
            ExpertPool::orientations(5, Loss::Hamming).unwrap().experts()[4].clone(),
        ]);
        assert!(pool.experts()[1].name.starts_with("col-tb-right"));
        let bound = regret_bound(4, 64, 2.0, 1.0);
        let mut row_choices = 0;
        let mut total = 0;
        for seed in 0..50 {
            let log = run_universal(&a, &pool, 4, Loss::Hamming, None, seed).unwrap();
            assert!(log.expected_regret() <= bound);
            assert!(log.l_alg_expected >= log.l_min - 1e-9);
            row_choices += log.chosen.iter().filter(|j| **j == 0).count();
            total += log.chosen.len();
        }
        assert!(row_choices * 10 > total * 6, "{row_choices}/{total}");
    }

    #[test]
    fn ranking_flip_stays_within_bound() {
        // Top half: constant rows (row scan wins); bottom half: constant columns.
        let n = 32;
        let a = DataArray::from_fn(n, n, Alphabet::Binary, |s: Site| {
            if s.row < n / 2 {
                (s.row % 2) as f64
            } else {
                (s.col % 2) as f64
            }
        })
        .unwrap();
        let pool = ExpertPool::orientations(8, Loss::Hamming).unwrap();
        let bound = regret_bound(4, n, 8.0, 1.0);
        for seed in 0..20 {
            let log = run_universal(&a, &pool, 4, Loss::Hamming, None, seed).unwrap();
            assert!(log.expected_regret() <= bound);
            assert!(log.log_ratio.iter().zip(&log.hoeffding).all(|(l, h)| l <= h));
        }
    }

    #[test]
    fn expected_loss_decomposition() {
        let a = rowwise(20, 3);
        let pool = ExpertPool::orientations(4, Loss::Squared).unwrap();
        let matrix = LossMatrix::compute(&a, &pool, 3, Loss::Squared).unwrap();
        let s = Schedule::new(&matrix, 0.2);
        let direct: f64 = s
            .probs
            .iter()
            .zip(&matrix.losses)
            .map(|(p, l)| p.iter().zip(l).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        assert!((direct - s.expected_total()).abs() < 1e-9);
        assert!(s.probs.iter().all(|p| (p.iter().sum::<f64>() - 1.0).abs() < 1e-12));
        assert!(s.weight_ratio_violations().is_empty());
    }

    #[test]
    fn csv_is_deterministic() {
        let a = rowwise(12, 4);
        let pool = ExpertPool::orientations(3, Loss::Hamming).unwrap();
        let names: Vec<String> = pool.experts().iter().map(|e| e.name.clone()).collect();
        let render = || {
            let log = run_universal(&a, &pool, 3, Loss::Hamming, None, 9).unwrap();
            let mut buf = Vec::new();
            log.write_csv(&mut buf, &names).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let first = render();
        assert_eq!(first, render());
        assert_eq!(first.lines().count(), 1 + 16);
    }

    /// Explicit enumeration of all 576 * 2^15 experts on a 5x5 grid.
    #[test]
    fn full_pool_matches_explicit_enumeration() {
        use rand::Rng;
        let mut rng = seeded(21);
        let a = DataArray::from_fn(5, 5, Alphabet::Binary, |_| rng.gen_range(0..2) as f64).unwrap();
        let loss = Loss::Hamming;
        let eta = 0.3;
        let run = run_full_pool_m2(&a, loss, Some(eta), 0).unwrap();

        let layout = block_partition(5, 2).unwrap();
        let trees = enumerate_tree_scanners(Rect::sized(2, 2)).unwrap();
        let full: Vec<Rect> = layout
            .raster_block_order()
            .into_iter()
            .filter(|id| matches!(id, BlockId::Full { .. }))
            .map(|id| layout.rect(id))
            .collect();
        // For each tree and block: the (node, bit) sequence along the path.
        let paths: Vec<Vec<Vec<(usize, u8)>>> = trees
            .iter()
            .map(|t| {
                full.iter()
                    .map(|r| {
                        let at = |s: Site| a.get(Site::new(r.origin.row + s.row, r.origin.col + s.col));
                        t.path(at).into_iter().map(|(node, s)| (node, at(s) as u8)).collect()
                    })
                    .collect()
            })
            .collect();
        let experts = trees.len() * (1 << 15);
        let mut cum = vec![0.0f64; experts];
        let mut expected = 0.0;
        for b in 0..full.len() {
            let min = cum.iter().copied().fold(f64::INFINITY, f64::min);
            let mut z = 0.0;
            let mut e = 0.0;
            for (psi, tp) in paths.iter().enumerate() {
                for f in 0..(1usize << 15) {
                    let idx = psi * (1 << 15) + f;
                    let w = (-eta * (cum[idx] - min)).exp();
                    let l: f64 = tp[b]
                        .iter()
                        .map(|(node, x)| f64::from(u8::from(((f >> (node - 1)) & 1) as u8 != *x)))
                        .sum();
                    z += w;
                    e += w * l;
                    cum[idx] += l;
                }
            }
            expected += e / z;
        }
        let edges: f64 = layout.edge_blocks().iter().map(|r| r.area() as f64).sum();
        let l_min = cum.iter().copied().fold(f64::INFINITY, f64::min) + edges;
        assert!((run.l_min - l_min).abs() < 1e-9);
        assert!((run.l_alg_expected - (expected + edges)).abs() < 1e-6, "{} vs {}", run.l_alg_expected, expected + edges);
        assert!(run.l_alg_expected - run.l_min <= run.bound);
    }
}
