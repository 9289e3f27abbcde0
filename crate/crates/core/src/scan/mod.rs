//! Scanners: the order in which a scandictor visits the sites of an array.
//!
//! A [`Scanner`] is a factory of [`ScanSession`]s. A session is asked for the
//! next site given the values revealed so far, so data-dependent scanners
//! (finite-state machines, decision trees) and fixed orders share one
//! interface. [`scan`] drives a session over an array and checks that the
//! emitted sites cover the scanner's domain exactly once.

mod blockwise;
mod fsm;
mod hilbert;
mod tree;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{DataArray, Rect, Site};

pub use blockwise::{blockwise_compose, BlockwiseScanner, EdgePolicy};
pub use fsm::{fsm_scan, FsmScanner, FsmScannerSpec, EOF};
pub use hilbert::{hilbert_order, hilbert_scan};
pub use tree::{enumerate_tree_scanners, TreeScanner};

/// One step of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Visit {
    pub site: Site,
    /// True when this site opens a new independently scanned segment
    /// (a new block of a block-wise scanner). Predictors restart here.
    pub restart: bool,
}

/// A running scan over one array.
pub trait ScanSession {
    /// Next site to visit. `observed` holds the values at the sites visited
    /// so far in the current segment, in visit order.
    fn next_site(&mut self, observed: &[f64]) -> Result<Visit>;
}

/// A scanner over a fixed rectangular domain.
pub trait Scanner: Send + Sync {
    fn domain(&self) -> Rect;

    fn start(&self) -> Box<dyn ScanSession + '_>;

    fn name(&self) -> String {
        "scanner".to_string()
    }
}

/// Shared constructor of scanners for arbitrary rectangles.
pub type ScannerFactory = Arc<dyn Fn(Rect) -> Result<Box<dyn Scanner>> + Send + Sync>;

/// The ordered sites and revealed values of a completed scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTrajectory {
    pub domain: Rect,
    pub sites: Vec<Site>,
    pub values: Vec<f64>,
    /// Indices at which a new segment starts; always begins with 0.
    pub restarts: Vec<usize>,
}

impl ScanTrajectory {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Index ranges of the independently scanned segments.
    pub fn segments(&self) -> Vec<std::ops::Range<usize>> {
        let mut bounds = self.restarts.clone();
        bounds.push(self.sites.len());
        bounds.windows(2).map(|w| w[0]..w[1]).collect()
    }

    /// Position of every site of the domain in the trajectory, indexed row-major.
    pub fn positions(&self) -> Vec<Option<usize>> {
        let mut pos = vec![None; self.domain.area()];
        for (i, s) in self.sites.iter().enumerate() {
            if let Some(idx) = self.domain.local_index(*s) {
                pos[idx] = Some(i);
            }
        }
        pos
    }
}

/// Runs `scanner` on `array`, enforcing the coverage property: every site of
/// the domain is emitted exactly once in `|domain|` steps.
pub fn scan(scanner: &dyn Scanner, array: &DataArray) -> Result<ScanTrajectory> {
    scan_with(scanner, array, |_, _, _| {})
}

/// Like [`scan`], calling `before_reveal(visit, sites, values)` at every step
/// before the value at `visit.site` is revealed. `sites` and `values` hold
/// the current segment's past, which restarts when `visit.restart` is set.
pub fn scan_with(
    scanner: &dyn Scanner,
    array: &DataArray,
    mut before_reveal: impl FnMut(Visit, &[Site], &[f64]),
) -> Result<ScanTrajectory> {
    let domain = scanner.domain();
    let grid = array.rect();
    if domain.origin.row + domain.rows > grid.rows || domain.origin.col + domain.cols > grid.cols
    {
        return Err(Error::DomainMismatch(format!(
            "scanner domain {domain} exceeds array {}x{}",
            grid.rows, grid.cols
        )));
    }
    let total = domain.area();
    let mut seen = vec![false; total];
    let mut sites = Vec::with_capacity(total);
    let mut values = Vec::with_capacity(total);
    let mut restarts = vec![0];
    let mut segment_start = 0;
    let mut session = scanner.start();
    for t in 0..total {
        let visit = session.next_site(&values[segment_start..])?;
        let idx = domain.local_index(visit.site).ok_or_else(|| {
            Error::InvalidScanner(format!(
                "step {t}: site {} outside domain {domain}",
                visit.site
            ))
        })?;
        if seen[idx] {
            return Err(Error::InvalidScanner(format!(
                "step {t}: site {} visited twice",
                visit.site
            )));
        }
        seen[idx] = true;
        if visit.restart && t > 0 {
            restarts.push(t);
            segment_start = t;
        }
        before_reveal(visit, &sites[segment_start..], &values[segment_start..]);
        sites.push(visit.site);
        values.push(array.get(visit.site));
    }
    Ok(ScanTrajectory {
        domain,
        sites,
        values,
        restarts,
    })
}

/// A data-independent scanner that replays a precomputed order.
#[derive(Debug, Clone)]
pub struct FixedOrder {
    domain: Rect,
    order: Arc<[Site]>,
    name: String,
}

impl FixedOrder {
    /// Wraps an explicit order. The order must be a permutation of `domain`.
    pub fn new(domain: Rect, order: Vec<Site>, name: impl Into<String>) -> Result<Self> {
        if order.len() != domain.area() {
            return Err(Error::InvalidScanner(format!(
                "order of length {} for domain {domain}",
                order.len()
            )));
        }
        let mut seen = vec![false; domain.area()];
        for s in &order {
            let idx = domain
                .local_index(*s)
                .ok_or_else(|| Error::InvalidScanner(format!("site {s} outside {domain}")))?;
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::InvalidScanner(format!("site {s} repeated")));
            }
        }
        Ok(FixedOrder {
            domain,
            order: order.into(),
            name: name.into(),
        })
    }

    pub fn order(&self) -> &[Site] {
        &self.order
    }
}

struct FixedSession<'a> {
    order: &'a [Site],
    next: usize,
}

impl ScanSession for FixedSession<'_> {
    fn next_site(&mut self, _observed: &[f64]) -> Result<Visit> {
        let site = *self
            .order
            .get(self.next)
            .ok_or_else(|| Error::InvalidScanner("scan ran past its domain".into()))?;
        self.next += 1;
        Ok(Visit {
            site,
            restart: false,
        })
    }
}

impl Scanner for FixedOrder {
    fn domain(&self) -> Rect {
        self.domain
    }

    fn start(&self) -> Box<dyn ScanSession + '_> {
        Box::new(FixedSession {
            order: &self.order,
            next: 0,
        })
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

/// The eight axis-aligned raster orientations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Rows top to bottom, each row left to right.
    RowLrDown,
    RowRlDown,
    RowLrUp,
    RowRlUp,
    /// Columns left to right, each column top to bottom.
    ColTbRight,
    ColBtRight,
    ColTbLeft,
    ColBtLeft,
}

impl Orientation {
    pub const ALL: [Orientation; 8] = [
        Orientation::RowLrDown,
        Orientation::RowRlDown,
        Orientation::RowLrUp,
        Orientation::RowRlUp,
        Orientation::ColTbRight,
        Orientation::ColBtRight,
        Orientation::ColTbLeft,
        Orientation::ColBtLeft,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Orientation::RowLrDown => "row-lr-down",
            Orientation::RowRlDown => "row-rl-down",
            Orientation::RowLrUp => "row-lr-up",
            Orientation::RowRlUp => "row-rl-up",
            Orientation::ColTbRight => "col-tb-right",
            Orientation::ColBtRight => "col-bt-right",
            Orientation::ColTbLeft => "col-tb-left",
            Orientation::ColBtLeft => "col-bt-left",
        }
    }
}

/// Sites of `rect` in the given raster orientation.
pub fn raster_order(rect: Rect, orientation: Orientation) -> Vec<Site> {
    use Orientation::*;
    let rows: Vec<usize> = match orientation {
        RowLrDown | RowRlDown | ColTbRight | ColTbLeft => (0..rect.rows).collect(),
        _ => (0..rect.rows).rev().collect(),
    };
    let cols: Vec<usize> = match orientation {
        RowLrDown | RowLrUp | ColTbRight | ColBtRight => (0..rect.cols).collect(),
        _ => (0..rect.cols).rev().collect(),
    };
    let at = |r: usize, c: usize| Site::new(rect.origin.row + r, rect.origin.col + c);
    let row_major = matches!(orientation, RowLrDown | RowRlDown | RowLrUp | RowRlUp);
    let mut out = Vec::with_capacity(rect.area());
    if row_major {
        for &r in &rows {
            out.extend(cols.iter().map(|&c| at(r, c)));
        }
    } else {
        for &c in &cols {
            out.extend(rows.iter().map(|&r| at(r, c)));
        }
    }
    out
}

/// Raster scanner over `rect` in one of the eight orientations.
pub fn raster_scan(rect: Rect, orientation: Orientation) -> FixedOrder {
    FixedOrder::new(rect, raster_order(rect, orientation), orientation.name())
        .expect("raster orders are permutations")
}

/// Boustrophedon order: even rows left to right, odd rows right to left.
pub fn serpentine_order(rect: Rect) -> Vec<Site> {
    let mut out = Vec::with_capacity(rect.area());
    for r in 0..rect.rows {
        let row = rect.origin.row + r;
        if r % 2 == 0 {
            out.extend((0..rect.cols).map(|c| Site::new(row, rect.origin.col + c)));
        } else {
            out.extend((0..rect.cols).rev().map(|c| Site::new(row, rect.origin.col + c)));
        }
    }
    out
}

/// Visits the odd 1-based row-major positions of `rect` in increasing order,
/// then the even ones. On a `1 x n` row this is 1, 3, 5, ..., 2, 4, ....
pub fn odds_then_evens_order(rect: Rect) -> Vec<Site> {
    let n = rect.area();
    (0..n)
        .step_by(2)
        .chain((1..n).step_by(2))
        .map(|i| rect.site_at(i))
        .collect()
}

/// Odds-then-evens scanner over a `1 x n` row.
pub fn odds_then_evens(n: usize) -> Result<FixedOrder> {
    if n == 0 {
        return Err(Error::UnsupportedSize("empty row".into()));
    }
    let rect = Rect::sized(1, n);
    FixedOrder::new(rect, odds_then_evens_order(rect), "odds-evens")
}

/// Named data-independent scan families that can be instantiated on any rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScanKind {
    Raster(Orientation),
    Serpentine,
    Hilbert,
    OddsEvens,
}

impl ScanKind {
    /// Every named kind, orientations first.
    pub fn all() -> Vec<ScanKind> {
        let mut v: Vec<ScanKind> = Orientation::ALL.iter().map(|o| ScanKind::Raster(*o)).collect();
        v.extend([ScanKind::Serpentine, ScanKind::Hilbert, ScanKind::OddsEvens]);
        v
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScanKind::Raster(o) => o.name(),
            ScanKind::Serpentine => "serpentine",
            ScanKind::Hilbert => "hilbert",
            ScanKind::OddsEvens => "odds-evens",
        }
    }

    pub fn order(&self, rect: Rect) -> Result<Vec<Site>> {
        Ok(match self {
            ScanKind::Raster(o) => raster_order(rect, *o),
            ScanKind::Serpentine => serpentine_order(rect),
            ScanKind::Hilbert => hilbert_order(rect)?,
            ScanKind::OddsEvens => odds_then_evens_order(rect),
        })
    }

    pub fn build(&self, rect: Rect) -> Result<FixedOrder> {
        FixedOrder::new(rect, self.order(rect)?, self.name())
    }

    /// A factory producing this kind of scanner on any rectangle.
    pub fn factory(self) -> ScannerFactory {
        Arc::new(move |rect| Ok(Box::new(self.build(rect)?) as Box<dyn Scanner>))
    }
}

impl fmt::Display for ScanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "raster" | "row" | "rows" => return Ok(ScanKind::Raster(Orientation::RowLrDown)),
            "column" | "columns" | "col" => return Ok(ScanKind::Raster(Orientation::ColTbRight)),
            "reverse" | "reverse-raster" => return Ok(ScanKind::Raster(Orientation::RowRlUp)),
            "boustrophedon" => return Ok(ScanKind::Serpentine),
            "odds-then-evens" | "oe" => return Ok(ScanKind::OddsEvens),
            _ => {}
        }
        ScanKind::all()
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param("scan", format!("unknown scan `{s}`")))
    }
}

/// Counts the positions `i >= 2` of `a` whose predecessor `a[i-1]` lies
/// within the `window` sites preceding `a[i]` in `b`.
pub fn context_overlap(a: &ScanTrajectory, b: &ScanTrajectory, window: usize) -> Result<usize> {
    if a.domain != b.domain || a.len() != b.len() {
        return Err(Error::DomainMismatch(format!(
            "trajectories over {} and {}",
            a.domain, b.domain
        )));
    }
    let pos_b = b.positions();
    let pos = |s: Site| -> Result<usize> {
        a.domain
            .local_index(s)
            .and_then(|i| pos_b[i])
            .ok_or_else(|| Error::DomainMismatch(format!("site {s} missing from second scan")))
    };
    let mut count = 0;
    for w in a.sites.windows(2) {
        let (prev, cur) = (pos(w[0])?, pos(w[1])?);
        if cur > prev && cur - prev <= window {
            count += 1;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Alphabet;

    fn zeros(rows: usize, cols: usize) -> DataArray {
        DataArray::filled(rows, cols, Alphabet::Binary, 0.0).unwrap()
    }

    fn sites(v: &[(usize, usize)]) -> Vec<Site> {
        v.iter().map(|(r, c)| Site::new(*r, *c)).collect()
    }

    #[test]
    fn raster_examples() {
        let r = Rect::sized(2, 2);
        assert_eq!(
            raster_order(r, Orientation::RowLrDown),
            sites(&[(0, 0), (0, 1), (1, 0), (1, 1)])
        );
        assert_eq!(
            raster_order(r, Orientation::RowLrUp),
            sites(&[(1, 0), (1, 1), (0, 0), (0, 1)])
        );
        assert_eq!(
            raster_order(r, Orientation::ColBtLeft),
            sites(&[(1, 1), (0, 1), (1, 0), (0, 0)])
        );
        let row = Rect::sized(1, 5);
        assert_eq!(
            raster_order(row, Orientation::RowLrDown),
            (0..5).map(|c| Site::new(0, c)).collect::<Vec<_>>()
        );
    }

    #[test]
    fn reverse_raster_is_reversed_forward() {
        let r = Rect::new(1, 2, 3, 4);
        let mut fwd = raster_order(r, Orientation::RowLrDown);
        fwd.reverse();
        assert_eq!(fwd, raster_order(r, Orientation::RowRlUp));
    }

    #[test]
    fn odds_then_evens_examples() {
        let one_based = |n: usize| -> Vec<usize> {
            odds_then_evens(n)
                .unwrap()
                .order()
                .iter()
                .map(|s| s.col + 1)
                .collect()
        };
        assert_eq!(one_based(5), vec![1, 3, 5, 2, 4]);
        assert_eq!(one_based(6), vec![1, 3, 5, 2, 4, 6]);
        assert_eq!(one_based(1), vec![1]);
    }

    #[test]
    fn every_kind_covers_its_domain() {
        for kind in ScanKind::all() {
            let rect = Rect::new(0, 0, 8, 8);
            let s = kind.build(rect).unwrap();
            let t = scan(&s, &zeros(8, 8)).unwrap();
            assert_eq!(t.len(), 64, "{kind}");
        }
    }

    #[test]
    fn scan_kind_names_round_trip() {
        for kind in ScanKind::all() {
            assert_eq!(kind.name().parse::<ScanKind>().unwrap(), kind);
        }
        assert!("zigzag-ish".parse::<ScanKind>().is_err());
    }

    #[test]
    fn driver_rejects_revisits() {
        struct Stuck;
        struct StuckSession;
        impl ScanSession for StuckSession {
            fn next_site(&mut self, _: &[f64]) -> Result<Visit> {
                Ok(Visit {
                    site: Site::new(0, 0),
                    restart: false,
                })
            }
        }
        impl Scanner for Stuck {
            fn domain(&self) -> Rect {
                Rect::sized(2, 2)
            }
            fn start(&self) -> Box<dyn ScanSession + '_> {
                Box::new(StuckSession)
            }
        }
        assert!(matches!(
            scan(&Stuck, &zeros(2, 2)),
            Err(Error::InvalidScanner(_))
        ));
    }

    fn overlap_oracle(a: &[Site], b: &[Site], k: usize) -> usize {
        (1..a.len())
            .filter(|&i| {
                (0..b.len()).any(|j| {
                    (1..=k).any(|d| j >= d && b[j] == a[i] && b[j - d] == a[i - 1])
                })
            })
            .count()
    }

    fn traj(order: Vec<Site>, rect: Rect) -> ScanTrajectory {
        let s = FixedOrder::new(rect, order, "t").unwrap();
        scan(&s, &zeros(rect.rows, rect.cols)).unwrap()
    }

    #[test]
    fn overlap_examples() {
        let rect = Rect::sized(4, 4);
        let row = traj(raster_order(rect, Orientation::RowLrDown), rect);
        assert_eq!(context_overlap(&row, &row, 1).unwrap(), 15);
        let up = traj(raster_order(rect, Orientation::RowLrUp), rect);
        assert_eq!(context_overlap(&row, &up, 1).unwrap(), 16 - 4);
        let col = traj(raster_order(rect, Orientation::ColTbRight), rect);
        assert_eq!(context_overlap(&row, &col, 1).unwrap(), 0);
        for kind in ScanKind::all() {
            let other = traj(kind.order(rect).unwrap(), rect);
            for k in 1..4 {
                assert_eq!(
                    context_overlap(&row, &other, k).unwrap(),
                    overlap_oracle(&row.sites, &other.sites, k),
                    "{kind} k={k}"
                );
            }
        }
        let small = traj(raster_order(Rect::sized(2, 2), Orientation::RowLrDown), Rect::sized(2, 2));
        assert!(context_overlap(&row, &small, 1).is_err());
    }
}
