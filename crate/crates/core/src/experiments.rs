//! Reproducible experiments that emit CSV with an in-run pass/fail verdict.
//!
//! Every report starts with a `# check:` comment naming the claim and the
//! bound, then a header row, the data rows and a final `# verdict:` line.
//! Replicas use the seeds `seed + index` and are aggregated in index order, so
//! identical configurations produce byte-identical output at any thread count.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::entropy::{empirical_dist, lz78_compressibility, sandwich_check, stochastic_residual};
use crate::error::{Error, Result};
use crate::fields::{
    generate, markov_chain, rowwise_markov_entropy_rate, FieldKind, FieldSpec, KnownBernoulli,
    MarkovLayout, MarkovRowOracle, ShiftAdversary,
};
use crate::grid::{block_partition, Alphabet, DataArray, Rect, Site};
use crate::loss::{binary_entropy, fmg_gap, minimax_affine, Loss};
use crate::predict::{markov_fit, scandict, Predictor};
use crate::rng::{replica, replica_seed, seeded};
use crate::scan::{scan, Orientation, ScanKind};
use crate::universal::{
    chernoff_tail, optimal_eta, regret_bound, run_full_pool_m2, ExpertPool, LossMatrix, RunLog,
    Schedule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Epsilon,
    Lemma1,
    MarkovExample,
    Regret,
    Theorem3M2,
    MixingAs,
    PhVsRaster,
    FmgCurve,
    Sandwich,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Epsilon,
        Experiment::Lemma1,
        Experiment::MarkovExample,
        Experiment::Regret,
        Experiment::Theorem3M2,
        Experiment::MixingAs,
        Experiment::PhVsRaster,
        Experiment::FmgCurve,
        Experiment::Sandwich,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Epsilon => "epsilon",
            Experiment::Lemma1 => "lemma1",
            Experiment::MarkovExample => "markov-example",
            Experiment::Regret => "regret",
            Experiment::Theorem3M2 => "theorem3-m2",
            Experiment::MixingAs => "mixing-as",
            Experiment::PhVsRaster => "ph-vs-raster",
            Experiment::FmgCurve => "fmg-curve",
            Experiment::Sandwich => "sandwich",
        }
    }

    /// Parameters the experiment reads besides `seed` and `out`.
    pub fn keys(&self) -> &'static [&'static str] {
        match self {
            Experiment::Epsilon | Experiment::FmgCurve => &[],
            Experiment::Lemma1 => &["n", "replicas"],
            Experiment::MarkovExample => &["n", "p", "loss"],
            Experiment::Regret => &["n", "m", "lambda", "replicas", "seeds", "p", "loss", "eta"],
            Experiment::Theorem3M2 => &["n", "replicas", "p", "loss", "eta"],
            Experiment::MixingAs => &["n", "m", "lambda", "seeds", "p", "loss", "eta"],
            Experiment::PhVsRaster => &["n", "k", "p", "loss"],
            Experiment::Sandwich => &["n", "k", "p", "loss"],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::param("experiment", format!("unknown experiment `{s}`")))
    }
}

/// Parameters of one run. Unset fields take per-experiment defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub loss: Option<Loss>,
    pub seed: u64,
    pub replicas: Option<usize>,
    /// Independent draws of the algorithm's randomness per array.
    pub seeds: Option<usize>,
    pub p: Option<f64>,
    pub lambda: Option<usize>,
    pub eta: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            n: None,
            m: None,
            k: None,
            loss: None,
            seed: 0,
            replicas: None,
            seeds: None,
            p: None,
            lambda: None,
            eta: None,
            out: None,
        }
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::param(key, format!("cannot parse `{value}`")))
        }
        match key {
            "experiment" => {
                let e: Experiment = value.parse()?;
                if e != self.experiment {
                    return Err(Error::param(
                        "experiment",
                        format!("config is for `{e}`, running `{}`", self.experiment),
                    ));
                }
            }
            "n" => self.n = Some(num(key, value)?),
            "m" => self.m = Some(num(key, value)?),
            "k" => self.k = Some(num(key, value)?),
            "loss" => self.loss = Some(value.parse()?),
            "seed" => self.seed = num(key, value)?,
            "replicas" => self.replicas = Some(num(key, value)?),
            "seeds" => self.seeds = Some(num(key, value)?),
            "p" => self.p = Some(num(key, value)?),
            "lambda" => self.lambda = Some(num(key, value)?),
            "eta" => self.eta = Some(num(key, value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(Error::param(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies a plain-text `key = value` file; `#` starts a comment.
    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (line, key, value) in parse_key_values(text)? {
            self.set(&key, &value).map_err(|e| Error::parse(line, e.to_string()))?;
        }
        Ok(())
    }

    /// Rejects parameters the experiment does not read and values outside
    /// their domain.
    pub fn validate(&self) -> Result<()> {
        let set = [
            ("n", self.n.is_some()),
            ("m", self.m.is_some()),
            ("k", self.k.is_some()),
            ("loss", self.loss.is_some()),
            ("replicas", self.replicas.is_some()),
            ("seeds", self.seeds.is_some()),
            ("p", self.p.is_some()),
            ("lambda", self.lambda.is_some()),
            ("eta", self.eta.is_some()),
        ];
        let keys = self.experiment.keys();
        for (key, present) in set {
            if present && !keys.contains(&key) {
                return Err(Error::param(
                    key,
                    format!("not a parameter of `{}`", self.experiment),
                ));
            }
        }
        if let Some(p) = self.p {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param("p", format!("{p} is not a probability")));
            }
        }
        for (key, v) in [("replicas", self.replicas), ("seeds", self.seeds), ("lambda", self.lambda)] {
            if v == Some(0) {
                return Err(Error::param(key, "must be positive"));
            }
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::param("eta", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Splits `key = value` lines, skipping blanks and `#` comments.
pub fn parse_key_values(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected key = value, got `{line}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(Error::parse(i + 1, "empty key or value"));
        }
        out.push((i + 1, k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Result of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: Experiment,
    /// The claim being checked and its pass/fail bound.
    pub check: String,
    pub header: String,
    pub rows: Vec<String>,
    /// Headline numbers, in the order they were computed.
    pub metrics: Vec<(String, f64)>,
    pub passed: bool,
}

impl Report {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# check: {}", self.check);
        let _ = writeln!(s, "{}", self.header);
        for row in &self.rows {
            let _ = writeln!(s, "{row}");
        }
        let _ = writeln!(s, "# verdict: {}", if self.passed { "PASS" } else { "FAIL" });
        s
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Validates `config`, runs the experiment and writes the CSV to `out` when set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let report = match config.experiment {
        Experiment::Epsilon => epsilon(),
        Experiment::Lemma1 => lemma1(config),
        Experiment::MarkovExample => markov_example(config),
        Experiment::Regret => regret(config),
        Experiment::Theorem3M2 => theorem3_m2(config),
        Experiment::MixingAs => mixing_as(config),
        Experiment::PhVsRaster => ph_vs_raster(config),
        Experiment::FmgCurve => fmg_curve(),
        Experiment::Sandwich => sandwich(config),
    }?;
    if let Some(out) = &config.out {
        report.write_to(out)?;
    }
    Ok(report)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.9}")
}

fn epsilon() -> Result<Report> {
    let targets = [(Loss::Hamming, 0.08, 0.005), (Loss::Squared, 0.0137, 0.002), (Loss::Log, 0.0, 1e-6)];
    let mut rows = Vec::new();
    let mut metrics = Vec::new();
    let mut passed = true;
    for (loss, target, tol) in targets {
        let a = minimax_affine(loss);
        let ok = (a.epsilon - target).abs() <= tol;
        passed &= ok;
        // An exact fit attains its zero error everywhere.
        let argmax: Vec<String> = if a.epsilon < 1e-12 {
            vec!["all".into()]
        } else {
            a.extrema.iter().map(|e| format!("{:.4}", e.p)).collect()
        };
        rows.push(format!(
            "{},{},{},{},{},{target},{tol},{ok}",
            loss.name(),
            fmt_f(a.alpha),
            fmt_f(a.beta),
            fmt_f(a.epsilon),
            argmax.join(" ")
        ));
        metrics.push((format!("epsilon_{}", loss.name()), a.epsilon));
    }
    Ok(Report {
        experiment: Experiment::Epsilon,
        check: "minimax affine fit of the Bayes envelope by binary entropy (bits); \
                epsilon_hamming = 0.08 +- 0.005, epsilon_squared = 0.0137 +- 0.002, epsilon_log = 0 +- 1e-6"
            .into(),
        header: "loss,alpha,beta,epsilon,argmax,target,tolerance,pass".into(),
        rows,
        metrics,
        passed,
    })
}

/// Row-major indices of a named scan over an `n x n` grid.
fn scan_indices(kind: ScanKind, n: usize) -> Result<Vec<usize>> {
    Ok(kind
        .order(Rect::sized(n, n))?
        .into_iter()
        .map(|s| s.row * n + s.col)
        .collect())
}

fn lemma1(config: &ExperimentConfig) -> Result<Report> {
    let n = config.n.unwrap_or(32);
    let replicas = config.replicas.unwrap_or(2000);
    let mut kinds = vec![
        ScanKind::Raster(Orientation::RowLrDown),
        ScanKind::Raster(Orientation::RowRlUp),
        ScanKind::Raster(Orientation::ColTbRight),
        ScanKind::OddsEvens,
    ];
    if n.is_power_of_two() {
        kinds.insert(3, ScanKind::Hilbert);
    }
    let orders: Vec<Vec<usize>> = kinds.iter().map(|k| scan_indices(*k, n)).collect::<Result<_>>()?;
    let per_replica: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let adv = ShiftAdversary::draw(n, &mut replica(config.seed, r as u64))?;
            Ok(orders.iter().map(|o| adv.squared_loss_along(o)).collect())
        })
        .collect::<Result<_>>()?;
    let cells = (n * n) as f64;
    let floor = 0.95 * (cells + 1.0) / 8.0;
    let ceiling = 1.10 * cells / 16.0;
    let mut rows = Vec::new();
    let mut metrics = Vec::new();
    let mut passed = true;
    for (i, kind) in kinds.iter().enumerate() {
        let mean = per_replica.iter().map(|v| v[i]).sum::<f64>() / replicas as f64;
        let ok = mean >= floor;
        passed &= ok;
        rows.push(format!("{},{},>=,{},{ok}", kind.name(), fmt_f(mean), fmt_f(floor)));
        metrics.push((format!("mean_{}", kind.name()), mean));
    }
    // Forward and reverse raster are the first two scans.
    let min_mean = per_replica.iter().map(|v| v[0].min(v[1])).sum::<f64>() / replicas as f64;
    let ok = min_mean <= ceiling;
    passed &= ok;
    rows.push(format!("min(row-lr-down;row-rl-up),{},<=,{},{ok}", fmt_f(min_mean), fmt_f(ceiling)));
    metrics.push(("mean_min_opposed".into(), min_mean));
    Ok(Report {
        experiment: Experiment::Lemma1,
        check: format!(
            "shifted-expansion field, squared loss, n={n}, {replicas} replicas: every scan's mean total loss \
             >= 0.95 (n^2+1)/8 = {floor:.3}; mean of min over two opposed rasters <= 1.10 n^2/16 = {ceiling:.3}"
        ),
        header: "scan,mean_total_loss,relation,bound,pass".into(),
        rows,
        metrics,
        passed,
    })
}

fn markov_example(config: &ExperimentConfig) -> Result<Report> {
    let flip = config.p.unwrap_or(0.25);
    let len = config.n.unwrap_or(200_000);
    let loss = config.loss.unwrap_or(Loss::Hamming);
    if !matches!(loss, Loss::Hamming | Loss::Squared) {
        return Err(Error::param("loss", "hamming or squared"));
    }
    if len < 4 {
        return Err(Error::param("n", "chain length must be at least 4"));
    }
    let chain = markov_chain(flip, len, &mut seeded(config.seed));
    let array = DataArray::new(1, len, Alphabet::Binary, chain)?;
    let kind = FieldKind::MarkovRow {
        flip,
        layout: MarkovLayout::OneD,
    };
    let rect = array.rect();
    let mut rows = Vec::new();
    let mut metrics = Vec::new();
    let mut passed = true;
    let mut rates = Vec::new();
    for scan_kind in [ScanKind::Raster(Orientation::RowLrDown), ScanKind::OddsEvens] {
        let scanner = scan_kind.build(rect)?;
        let mut oracle = MarkovRowOracle::new(flip, loss)?;
        let (total, _) = scandict(&array, &scanner, &mut oracle, loss)?;
        let rate = total / len as f64;
        let name = if scan_kind == ScanKind::OddsEvens { "odds-evens" } else { "raster" };
        let crate::fields::AnalyticOptimum::PerSite(expected) =
            crate::fields::analytic_optimum(&kind, name, loss, len)?
        else {
            unreachable!("Markov rates are per site")
        };
        let ok = (rate - expected).abs() <= 0.01;
        passed &= ok;
        rows.push(format!("{name},{},{},0.01,{ok}", fmt_f(rate), fmt_f(expected)));
        metrics.push((format!("rate_{name}"), rate));
        rates.push((rate, expected));
    }
    let excess = rates[1].0 - rates[0].0;
    let expected_excess = rates[1].1 - rates[0].1;
    let ok = (excess - expected_excess).abs() <= 0.02;
    passed &= ok;
    rows.push(format!("excess,{},{},0.02,{ok}", fmt_f(excess), fmt_f(expected_excess)));
    metrics.push(("excess".into(), excess));
    Ok(Report {
        experiment: Experiment::MarkovExample,
        check: format!(
            "symmetric Markov chain flip={flip}, length {len}, {loss} loss, optimal predictor: \
             raster and odds-then-evens rates within 0.01 of their analytic values"
        ),
        header: "scan,rate,analytic,tolerance,pass".into(),
        rows,
        metrics,
        passed,
    })
}

/// A field whose top half has row-wise and bottom half column-wise chains,
/// so the best orientation changes halfway through a raster of blocks.
pub fn split_markov_field(n: usize, flip: f64, seed: u64) -> Result<DataArray> {
    let rows = generate(
        &FieldSpec {
            kind: FieldKind::MarkovRow {
                flip,
                layout: MarkovLayout::RowWise,
            },
            seed,
        },
        n,
    )?;
    let cols = generate(
        &FieldSpec {
            kind: FieldKind::MarkovRow {
                flip,
                layout: MarkovLayout::RowWise,
            },
            seed: seed ^ 0x9e37_79b9_7f4a_7c15,
        },
        n,
    )?
    .transpose();
    DataArray::from_fn(n, n, Alphabet::Binary, |s: Site| {
        if s.row < n / 2 {
            rows.get(s)
        } else {
            cols.get(s)
        }
    })
}

fn regret(config: &ExperimentConfig) -> Result<Report> {
    let n = config.n.unwrap_or(64);
    let m = config.m.unwrap_or(4);
    let lambda = config.lambda.unwrap_or(8);
    let replicas = config.replicas.unwrap_or(100);
    let seeds = config.seeds.unwrap_or(1);
    let flip = config.p.unwrap_or(0.1);
    let loss = config.loss.unwrap_or(Loss::Hamming);
    block_partition(n, m)?;
    let pool = ExpertPool::orientations(lambda, loss)?;
    let eta = config
        .eta
        .unwrap_or_else(|| optimal_eta(m, n, lambda as f64, loss.l_max()));
    let bound = regret_bound(m, n, lambda as f64, loss.l_max());
    let runs: Vec<(f64, f64, f64, usize)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let seed = replica_seed(config.seed, r as u64);
            let array = split_markov_field(n, flip, seed)?;
            let matrix = LossMatrix::compute(&array, &pool, m, loss)?;
            let schedule = Schedule::new(&matrix, eta);
            let worst_realized = (0..seeds)
                .map(|s| RunLog::from_schedule(&matrix, &schedule, replica_seed(seed, s as u64)).l_alg)
                .fold(f64::NEG_INFINITY, f64::max);
            Ok((
                schedule.expected_total(),
                schedule.l_min,
                worst_realized,
                schedule.weight_ratio_violations().len(),
            ))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut max_regret = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut over = 0;
    for (r, (lbar, lmin, worst, v)) in runs.iter().enumerate() {
        let regret = lbar - lmin;
        max_regret = max_regret.max(regret);
        violations += v;
        let ok = regret <= bound && *v == 0;
        over += usize::from(regret > bound);
        rows.push(format!(
            "{r},{},{},{},{},{},{},{v},{ok}",
            fmt_f(*lbar),
            fmt_f(*lmin),
            fmt_f(regret),
            fmt_f(bound),
            fmt_f(regret / bound),
            fmt_f(*worst - lmin)
        ));
    }
    Ok(Report {
        experiment: Experiment::Regret,
        check: format!(
            "expected regret of exponential weighting, n={n} m={m} lambda={lambda} eta={eta:.6}, \
             {replicas} arrays x {seeds} draws: every L_bar - L_min <= m(n+m) sqrt(ln lambda) l_max / sqrt(2) \
             = {bound:.4}, and ln(W_next/W) <= -eta E[L] + eta^2 (m^2 l_max)^2/8 at every block"
        ),
        header: "array,l_bar,l_min,regret,bound,ratio,max_realized_minus_min,weight_ratio_violations,pass".into(),
        rows,
        metrics: vec![
            ("max_regret".into(), max_regret),
            ("bound".into(), bound),
            ("max_ratio".into(), max_regret / bound),
            ("arrays_over_bound".into(), over as f64),
            ("weight_ratio_violations".into(), violations as f64),
        ],
        passed: over == 0 && violations == 0,
    })
}

fn theorem3_m2(config: &ExperimentConfig) -> Result<Report> {
    let n = config.n.unwrap_or(16);
    let replicas = config.replicas.unwrap_or(4);
    let flip = config.p.unwrap_or(0.1);
    let loss = config.loss.unwrap_or(Loss::Hamming);
    let runs = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let seed = replica_seed(config.seed, r as u64);
            let array = split_markov_field(n, flip, seed)?;
            run_full_pool_m2(&array, loss, config.eta, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let cells = (n * n) as f64;
    let mut rows = Vec::new();
    let mut passed = true;
    let mut max_ratio: f64 = 0.0;
    for (r, run) in runs.iter().enumerate() {
        let regret = run.l_alg_expected - run.l_min;
        let violations = run
            .log_ratio
            .iter()
            .zip(&run.hoeffding)
            .filter(|(l, h)| **l > **h + 1e-12 * (1.0 + h.abs()))
            .count();
        let ok = regret <= run.bound && violations == 0;
        passed &= ok;
        max_ratio = max_ratio.max(regret / run.bound);
        rows.push(format!(
            "{r},{},{},{},{},{},{},{},{violations},{ok}",
            run.lambda,
            fmt_f(run.eta),
            fmt_f(run.l_alg_expected),
            fmt_f(run.l_alg),
            fmt_f(run.l_min),
            fmt_f(run.bound),
            fmt_f(regret / cells)
        ));
    }
    Ok(Report {
        experiment: Experiment::Theorem3M2,
        check: format!(
            "exponential weighting over every 2x2 binary scandictor (576 tree scanners x 2^15 predictors), \
             n={n}: L_bar - L_min <= regret bound and the per-block weight-ratio inequality holds"
        ),
        header: "array,lambda,eta,l_bar,l_alg,l_min,bound,regret_per_site,weight_ratio_violations,pass".into(),
        rows,
        metrics: vec![("max_ratio".into(), max_ratio)],
        passed,
    })
}

/// Probability levels used by the concentration experiment.
pub const CONCENTRATION_EPSILONS: [f64; 3] = [0.05, 0.1, 0.15];

fn mixing_as(config: &ExperimentConfig) -> Result<Report> {
    let n = config.n.unwrap_or(64);
    let m = config
        .m
        .unwrap_or_else(|| ((n as f64).powf(0.25).floor() as usize).max(1));
    let lambda = config.lambda.unwrap_or(4);
    let seeds = config.seeds.unwrap_or(10_000);
    let flip = config.p.unwrap_or(0.2);
    let loss = config.loss.unwrap_or(Loss::Hamming);
    let layout = block_partition(n, m)?;
    let array = generate(
        &FieldSpec {
            kind: FieldKind::MixingBlocks {
                m,
                inner: Box::new(FieldKind::MarkovRow {
                    flip,
                    layout: MarkovLayout::RowWise,
                }),
            },
            seed: config.seed,
        },
        n,
    )?;
    let pool = ExpertPool::orientations(lambda, loss)?;
    let matrix = LossMatrix::compute(&array, &pool, m, loss)?;
    let eta = config
        .eta
        .unwrap_or_else(|| optimal_eta(m, n, lambda as f64, loss.l_max()));
    let schedule = Schedule::new(&matrix, eta);
    let realized: Vec<f64> = (0..seeds)
        .into_par_iter()
        .map(|s| RunLog::from_schedule(&matrix, &schedule, replica_seed(config.seed, s as u64)).l_alg)
        .collect();
    let lbar = schedule.expected_total();
    let lmin = schedule.l_min;
    let bound = regret_bound(m, n, lambda as f64, loss.l_max());
    let k = layout.k();
    let blocks = ((k + 1) * (k + 1)) as f64;
    let cells = (n * n) as f64;
    let mut rows = Vec::new();
    let mut metrics = Vec::new();
    let mut passed = true;
    for eps in CONCENTRATION_EPSILONS {
        let threshold = blocks * eps;
        let tail = chernoff_tail(k, m, eps, loss.l_max());
        let dev = realized.iter().filter(|l| **l - lbar >= threshold).count() as f64 / seeds as f64;
        let total = realized
            .iter()
            .filter(|l| **l - lmin >= threshold + bound)
            .count() as f64
            / seeds as f64;
        let ok = dev <= tail && total <= tail;
        passed &= ok;
        rows.push(format!(
            "{eps},{},{},{},{},{},{ok}",
            fmt_f(threshold),
            fmt_f((threshold + bound) / cells),
            fmt_f(dev),
            fmt_f(total),
            fmt_f(tail)
        ));
        metrics.push((format!("freq_{eps}"), dev));
        metrics.push((format!("tail_{eps}"), tail));
    }
    let mean_excess = realized.iter().map(|l| (l - lmin) / cells).sum::<f64>() / seeds as f64;
    metrics.push(("mean_excess_per_site".into(), mean_excess));
    Ok(Report {
        experiment: Experiment::MixingAs,
        check: format!(
            "fixed {n}x{n} tiled-Markov array, m={m}, lambda={lambda}, {seeds} seeds: frequency of \
             L_alg - L_bar >= (K+1)^2 eps and of L_alg - L_min >= (K+1)^2 eps + regret bound are both \
             <= exp(-2 (K+1)^2 eps^2 / (m^2 l_max)^2); mean (L_alg - L_min)/n^2 = {mean_excess:.5}"
        ),
        header: "epsilon,threshold,delta_per_site,freq_over_expected,freq_over_best,tail_bound,pass".into(),
        rows,
        metrics,
        passed,
    })
}

/// Per-site loss of the best order-`k` Markov predictor fitted to a scan's sequence.
fn fitted_rate(array: &DataArray, kind: ScanKind, k: usize, loss: Loss) -> Result<(f64, Vec<f64>)> {
    let traj = scan(&kind.build(array.rect())?, array)?;
    let table = markov_fit(&traj.values, 2, k, loss)?;
    let rate = table.sequence_loss(&[&traj.values]) / traj.len() as f64;
    Ok((rate, traj.values))
}

fn ph_vs_raster(config: &ExperimentConfig) -> Result<Report> {
    // The bound is asymptotic in the context length; order 6 on 128x128
    // still exceeds it on row-wise chains, order 12 on 512x512 does not.
    let n = config.n.unwrap_or(512);
    let k = config.k.unwrap_or(12);
    let flip = config.p.unwrap_or(0.1);
    let loss = config.loss.unwrap_or(Loss::Hamming);
    if !n.is_power_of_two() {
        return Err(Error::param("n", "must be a power of two"));
    }
    if loss == Loss::Log {
        return Err(Error::param("loss", "hamming, squared or absolute"));
    }
    let approx = minimax_affine(loss);
    let fields: Vec<(String, FieldKind)> = vec![
        ("iid".into(), FieldKind::IidBernoulli { p: flip }),
        (
            "markov-rows".into(),
            FieldKind::MarkovRow {
                flip,
                layout: MarkovLayout::RowWise,
            },
        ),
        (
            "tiled-markov".into(),
            FieldKind::MixingBlocks {
                m: 4,
                inner: Box::new(FieldKind::MarkovRow {
                    flip,
                    layout: MarkovLayout::RowWise,
                }),
            },
        ),
    ];
    let others = [
        ScanKind::Raster(Orientation::RowLrDown),
        ScanKind::Raster(Orientation::ColTbRight),
        ScanKind::Serpentine,
    ];
    let cells = (n * n) as f64;
    let slack = 2.0 * approx.epsilon + 2.0 * k as f64 * loss.l_max() / cells;
    let mut rows = Vec::new();
    let mut passed = true;
    let mut max_excess = f64::NEG_INFINITY;
    for (i, (name, kind)) in fields.iter().enumerate() {
        let array = generate(
            &FieldSpec {
                kind: kind.clone(),
                seed: replica_seed(config.seed, i as u64),
            },
            n,
        )?;
        let (hilbert, seq) = fitted_rate(&array, ScanKind::Hilbert, k, loss)?;
        let rho = lz78_compressibility(&seq, 2)?;
        let fmg = fmg_gap(rho);
        for other in others {
            let (rate, _) = fitted_rate(&array, other, k, loss)?;
            let excess = hilbert - rate;
            max_excess = max_excess.max(excess);
            let ok = excess <= slack;
            passed &= ok;
            let tighter = if fmg < 2.0 * approx.epsilon { "fmg" } else { "2eps" };
            rows.push(format!(
                "{name},{},{k},{},{},{},{},{},{},{tighter},{ok}",
                other.name(),
                fmt_f(rho),
                fmt_f(hilbert),
                fmt_f(rate),
                fmt_f(excess),
                fmt_f(slack),
                fmt_f(fmg)
            ));
        }
    }
    Ok(Report {
        experiment: Experiment::PhVsRaster,
        check: format!(
            "Hilbert scan vs finite-state scans, order-{k} empirically optimal predictors, n={n}, {loss} loss: \
             hilbert - other <= 2 eps + 2 k l_max / n^2 = {slack:.5}; the LZ78-based gap rho/2 - h^-1(rho) is reported"
        ),
        header: "field,scan,k,rho_hat,hilbert_loss,scan_loss,excess,bound_2eps,fmg_gap,tighter,pass".into(),
        rows,
        metrics: vec![("max_excess".into(), max_excess), ("bound".into(), slack)],
        passed,
    })
}

fn fmg_curve() -> Result<Report> {
    let mut rows = Vec::new();
    let (mut best, mut at) = (f64::NEG_INFINITY, 0.0);
    for i in 0..=1000 {
        let rho = i as f64 / 1000.0;
        let g = fmg_gap(rho);
        if g > best {
            best = g;
            at = rho;
        }
        rows.push(format!("{rho:.3},{}", fmt_f(g)));
    }
    let low = fmg_gap(0.1);
    let passed = (best - 0.16).abs() <= 0.005 && (at - 0.75).abs() <= 0.05 && low < 0.04;
    Ok(Report {
        experiment: Experiment::FmgCurve,
        check: format!(
            "rho/2 - h^-1(rho) on a 0.001 mesh: max = 0.16 +- 0.005 at rho = 0.75 +- 0.05, value at 0.1 < 0.04; \
             observed max {best:.5} at {at:.3}, value at 0.1 = {low:.5}"
        ),
        header: "rho,gap".into(),
        rows,
        metrics: vec![("max".into(), best), ("argmax".into(), at), ("at_0.1".into(), low)],
        passed,
    })
}

/// Slack added to the approximation error for finite-array effects.
pub const SANDWICH_SLACK: f64 = 0.005;

fn sandwich(config: &ExperimentConfig) -> Result<Report> {
    let n = config.n.unwrap_or(512);
    let k = config.k.unwrap_or(2);
    let flip = config.p.unwrap_or(0.25);
    let losses = match config.loss {
        Some(l @ (Loss::Hamming | Loss::Squared)) => vec![l],
        Some(_) => return Err(Error::param("loss", "hamming or squared")),
        None => vec![Loss::Hamming, Loss::Squared],
    };
    let mut kinds = vec![
        ScanKind::Raster(Orientation::RowLrDown),
        ScanKind::Raster(Orientation::ColTbRight),
        ScanKind::OddsEvens,
    ];
    if n.is_power_of_two() {
        kinds.insert(1, ScanKind::Hilbert);
    }
    // (label, field, entropy rate in bits, index for seeding)
    let mut fields: Vec<(String, FieldKind, f64)> = (1..=19)
        .map(|i| {
            let p = i as f64 * 0.05;
            (format!("iid-{p:.2}"), FieldKind::IidBernoulli { p }, binary_entropy(p))
        })
        .collect();
    fields.push((
        format!("markov-rows-{flip}"),
        FieldKind::MarkovRow {
            flip,
            layout: MarkovLayout::RowWise,
        },
        rowwise_markov_entropy_rate(flip, n),
    ));

    struct Line {
        row: String,
        residual: f64,
        bound: f64,
        kind: &'static str,
    }
    let per_field: Vec<Vec<Line>> = fields
        .par_iter()
        .enumerate()
        .map(|(i, (label, kind, h))| {
            let array = generate(
                &FieldSpec {
                    kind: kind.clone(),
                    seed: replica_seed(config.seed, i as u64),
                },
                n,
            )?;
            let mut lines = Vec::new();
            for &loss in &losses {
                let approx = minimax_affine(loss);
                let mut rates = Vec::new();
                for kind_scan in &kinds {
                    let mut predictor: Box<dyn Predictor> = match kind {
                        FieldKind::IidBernoulli { p } => Box::new(KnownBernoulli::new(*p, loss)?),
                        FieldKind::MarkovRow { flip, .. } => Box::new(MarkovRowOracle::new(*flip, loss)?),
                        _ => unreachable!("only iid and Markov fields are swept"),
                    };
                    let scanner = kind_scan.build(array.rect())?;
                    let (total, traj) = scandict(&array, &scanner, predictor.as_mut(), loss)?;
                    let rate = total / array.len() as f64;
                    let residual = stochastic_residual(&approx, *h, rate);
                    let bound = approx.epsilon + SANDWICH_SLACK;
                    rates.push((kind_scan.name(), rate));
                    lines.push(Line {
                        row: format!(
                            "oracle,{label},{},{},-,{},-,{},{},{},{}",
                            loss.name(),
                            kind_scan.name(),
                            fmt_f(*h),
                            fmt_f(rate),
                            fmt_f(residual),
                            fmt_f(bound),
                            residual <= bound
                        ),
                        residual,
                        bound,
                        kind: "oracle",
                    });
                    if *kind_scan == ScanKind::Raster(Orientation::RowLrDown) {
                        let table = markov_fit(&traj.values, 2, k, loss)?;
                        let fitted = table.sequence_loss(&[&traj.values]) / traj.len() as f64;
                        let s = sandwich_check(&traj.values, 2, k, &approx, fitted)?;
                        let h_k = empirical_dist(&traj.values, 2, k)?.cond_entropy_bits();
                        let rho = lz78_compressibility(&traj.values, 2)?;
                        lines.push(Line {
                            row: format!(
                                "empirical,{label},{},{},{k},{},{},{},{},{},{}",
                                loss.name(),
                                kind_scan.name(),
                                fmt_f(h_k),
                                fmt_f(rho),
                                fmt_f(s.per_site_loss),
                                fmt_f(s.residual),
                                fmt_f(s.bound),
                                s.holds()
                            ),
                            residual: s.residual,
                            bound: s.bound,
                            kind: "empirical",
                        });
                    }
                }
                let bound = 2.0 * approx.epsilon + 2.0 * SANDWICH_SLACK;
                for a in 0..rates.len() {
                    for b in a + 1..rates.len() {
                        let diff = (rates[a].1 - rates[b].1).abs();
                        lines.push(Line {
                            row: format!(
                                "pair,{label},{},{}|{},-,{},-,{},{},{},{}",
                                loss.name(),
                                rates[a].0,
                                rates[b].0,
                                fmt_f(*h),
                                fmt_f(diff),
                                fmt_f(diff),
                                fmt_f(bound),
                                diff <= bound
                            ),
                            residual: diff,
                            bound,
                            kind: "pair",
                        });
                    }
                }
            }
            Ok(lines)
        })
        .collect::<Result<_>>()?;
    let lines: Vec<Line> = per_field.into_iter().flatten().collect();
    let passed = lines.iter().all(|l| l.residual <= l.bound + 1e-12);
    let margin = |kind: &str| {
        lines
            .iter()
            .filter(|l| l.kind == kind)
            .map(|l| l.residual - l.bound)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let metrics = vec![
        ("worst_oracle_margin".into(), margin("oracle")),
        ("worst_empirical_margin".into(), margin("empirical")),
        ("worst_pair_margin".into(), margin("pair")),
    ];
    Ok(Report {
        experiment: Experiment::Sandwich,
        check: format!(
            "n={n}: |alpha H + beta - L| <= eps + {SANDWICH_SLACK} for optimal predictors along raster/hilbert/column/odds-evens \
             (H = exact entropy rate in bits); every scan pair differs by <= 2 eps + {}; \
             order-{k} empirical rows use eps + k l_max / N",
            2.0 * SANDWICH_SLACK
        ),
        header: "kind,field,loss,scan,k,entropy_bits,rho_hat,loss_per_site,residual,bound,pass".into(),
        rows: lines.into_iter().map(|l| l.row).collect(),
        metrics,
        passed,
    })
}

/// Draws a field for the `generate` command. `field` is one of `iid`,
/// `markov` (row-wise chains), `markov-1d`, `shift` or `mixing`.
pub fn field_kind(field: &str, p: f64, m: usize) -> Result<FieldKind> {
    Ok(match field {
        "iid" => FieldKind::IidBernoulli { p },
        "markov" => FieldKind::MarkovRow {
            flip: p,
            layout: MarkovLayout::RowWise,
        },
        "markov-1d" => FieldKind::MarkovRow {
            flip: p,
            layout: MarkovLayout::OneD,
        },
        "shift" => FieldKind::ShiftAdversary,
        "mixing" => FieldKind::MixingBlocks {
            m,
            inner: Box::new(FieldKind::MarkovRow {
                flip: p,
                layout: MarkovLayout::RowWise,
            }),
        },
        other => return Err(Error::param("field", format!("unknown field `{other}`"))),
    })
}

/// Shared handle for callers that want to keep a drawn adversary around.
pub fn shift_field(n: usize, seed: u64) -> Result<Arc<ShiftAdversary>> {
    Ok(Arc::new(ShiftAdversary::draw(n, &mut seeded(seed))?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_and_overrides() {
        let mut c = ExperimentConfig::new(Experiment::Regret);
        c.apply_file_text("# regret run\nexperiment = regret\nn = 16\nm=2 # blocks\nlambda = 4\n")
            .unwrap();
        c.set("n", "32").unwrap();
        assert_eq!((c.n, c.m, c.lambda), (Some(32), Some(2), Some(4)));
        c.validate().unwrap();
        assert!(c.apply_file_text("experiment = lemma1").is_err());
        assert!(c.apply_file_text("n 4").is_err());
        let mut e = ExperimentConfig::new(Experiment::Epsilon);
        e.n = Some(3);
        let err = e.validate().unwrap_err().to_string();
        assert!(err.contains("`n`"), "{err}");
    }

    #[test]
    fn fmg_curve_passes() {
        let r = fmg_curve().unwrap();
        assert!(r.passed);
        assert_eq!(r.rows.len(), 1001);
        assert!(r.to_csv().starts_with("# check:"));
        assert!(r.to_csv().trim_end().ends_with("# verdict: PASS"));
    }

    #[test]
    fn small_runs_are_deterministic() {
        let mut c = ExperimentConfig::new(Experiment::Regret);
        c.n = Some(12);
        c.m = Some(3);
        c.lambda = Some(3);
        c.replicas = Some(4);
        c.seed = 5;
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(a.passed);
    }

    #[test]
    fn markov_example_small() {
        let mut c = ExperimentConfig::new(Experiment::MarkovExample);
        c.n = Some(50_000);
        let r = run_experiment(&c).unwrap();
        assert!(r.passed, "{}", r.to_csv());
    }

    #[test]
    fn split_field_halves() {
        let a = split_markov_field(8, 0.0, 1).unwrap();
        // Zero flips: constant rows on top, constant columns below.
        for r in 0..4 {
            assert!((0..8).all(|c| a.get(Site::new(r, c)) == a.get(Site::new(r, 0))));
        }
        for c in 0..8 {
            assert!((4..8).all(|r| a.get(Site::new(r, c)) == a.get(Site::new(4, c))));
        }
    }
}
