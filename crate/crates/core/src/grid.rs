//! Grids, sites, rectangles and the block partition of a square grid.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

/// A lattice site, addressed by row and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub row: usize,
    pub col: usize,
}

impl Site {
    pub const fn new(row: usize, col: usize) -> Self {
        Site { row, col }
    }

    /// l1 distance between two sites.
    pub fn manhattan(self, other: Site) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// An axis-aligned rectangle of sites, `rows x cols` with top-left corner at `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub origin: Site,
    pub rows: usize,
    pub cols: usize,
}

impl Rect {
    pub const fn new(row: usize, col: usize, rows: usize, cols: usize) -> Self {
        Rect {
            origin: Site { row, col },
            rows,
            cols,
        }
    }

    /// The `rows x cols` rectangle anchored at the origin.
    pub const fn sized(rows: usize, cols: usize) -> Self {
        Rect::new(0, 0, rows, cols)
    }

    pub fn area(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }

    pub fn contains(&self, site: Site) -> bool {
        site.row >= self.origin.row
            && site.row < self.origin.row + self.rows
            && site.col >= self.origin.col
            && site.col < self.origin.col + self.cols
    }

    /// Whether a signed position falls inside the rectangle.
    pub fn contains_signed(&self, row: i64, col: i64) -> bool {
        row >= 0 && col >= 0 && self.contains(Site::new(row as usize, col as usize))
    }

    /// Row-major index of `site` relative to this rectangle.
    pub fn local_index(&self, site: Site) -> Option<usize> {
        self.contains(site)
            .then(|| (site.row - self.origin.row) * self.cols + (site.col - self.origin.col))
    }

    /// Inverse of [`Rect::local_index`].
    pub fn site_at(&self, index: usize) -> Site {
        Site::new(
            self.origin.row + index / self.cols,
            self.origin.col + index % self.cols,
        )
    }

    pub fn sites_row_major(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.area()).map(move |i| self.site_at(i))
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}@{}", self.rows, self.cols, self.origin)
    }
}

/// The value space of a data array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alphabet {
    /// Values in {0, 1}.
    Binary,
    /// Values in {0, .., q-1}.
    Finite(u32),
    /// Real values in [0, 1].
    Unit,
}

impl Alphabet {
    /// Number of symbols for finite alphabets.
    pub fn size(&self) -> Option<u32> {
        match self {
            Alphabet::Binary => Some(2),
            Alphabet::Finite(q) => Some(*q),
            Alphabet::Unit => None,
        }
    }

    pub fn admits(&self, value: f64) -> bool {
        match self {
            Alphabet::Binary => value == 0.0 || value == 1.0,
            Alphabet::Finite(q) => {
                value >= 0.0 && value.fract() == 0.0 && value < f64::from(*q)
            }
            Alphabet::Unit => (0.0..=1.0).contains(&value),
        }
    }

    fn tag(&self) -> String {
        match self {
            Alphabet::Binary => "binary".to_string(),
            Alphabet::Finite(q) => format!("finite:{q}"),
            Alphabet::Unit => "unit".to_string(),
        }
    }
}

impl FromStr for Alphabet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Alphabet::Binary),
            "unit" => Ok(Alphabet::Unit),
            _ => {
                let q = s
                    .strip_prefix("finite:")
                    .and_then(|q| q.parse::<u32>().ok())
                    .filter(|q| *q >= 2)
                    .ok_or_else(|| Error::parse(1, format!("unknown alphabet tag `{s}`")))?;
                Ok(Alphabet::Finite(q))
            }
        }
    }
}

/// A finite two-dimensional array of symbols, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataArray {
    rows: usize,
    cols: usize,
    alphabet: Alphabet,
    cells: Vec<f64>,
}

impl DataArray {
    pub fn new(rows: usize, cols: usize, alphabet: Alphabet, cells: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::UnsupportedSize(format!("empty grid {rows}x{cols}")));
        }
        if cells.len() != rows * cols {
            return Err(Error::DomainMismatch(format!(
                "{} cells for a {rows}x{cols} grid",
                cells.len()
            )));
        }
        if let Some((i, v)) = cells.iter().enumerate().find(|(_, v)| !alphabet.admits(**v)) {
            return Err(Error::OutOfRange(format!(
                "cell {i} holds {v}, not in alphabet {}",
                alphabet.tag()
            )));
        }
        Ok(DataArray {
            rows,
            cols,
            alphabet,
            cells,
        })
    }

    pub fn filled(rows: usize, cols: usize, alphabet: Alphabet, value: f64) -> Result<Self> {
        DataArray::new(rows, cols, alphabet, vec![value; rows * cols])
    }

    /// Builds an array from a per-site function.
    pub fn from_fn(
        rows: usize,
        cols: usize,
        alphabet: Alphabet,
        mut f: impl FnMut(Site) -> f64,
    ) -> Result<Self> {
        let rect = Rect::sized(rows, cols);
        let cells = rect.sites_row_major().map(&mut f).collect();
        DataArray::new(rows, cols, alphabet, cells)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn rect(&self) -> Rect {
        Rect::sized(self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Value at `site`. Panics when the site lies outside the grid.
    pub fn get(&self, site: Site) -> f64 {
        assert!(
            site.row < self.rows && site.col < self.cols,
            "site {site} outside {}x{} grid",
            self.rows,
            self.cols
        );
        self.cells[site.row * self.cols + site.col]
    }

    pub fn try_get(&self, site: Site) -> Option<f64> {
        (site.row < self.rows && site.col < self.cols)
            .then(|| self.cells[site.row * self.cols + site.col])
    }

    /// The transposed array.
    pub fn transpose(&self) -> DataArray {
        let mut cells = Vec::with_capacity(self.cells.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                cells.push(self.cells[r * self.cols + c]);
            }
        }
        DataArray {
            rows: self.cols,
            cols: self.rows,
            alphabet: self.alphabet,
            cells,
        }
    }

    /// Writes the array in the `SDGRID` text format.
    ///
    /// Line 1 is `SDGRID <rows> <cols> <alphabet-tag>`; each following line
    /// holds one row of whitespace-separated values. Reals use the shortest
    /// representation that parses back to the same `f64`, so a write/read/write
    /// cycle is byte-identical.
    pub fn write_sdgrid<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "SDGRID {} {} {}", self.rows, self.cols, self.alphabet.tag())?;
        for row in self.cells.chunks(self.cols) {
            let mut line = String::with_capacity(row.len() * 2);
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                match self.alphabet {
                    Alphabet::Unit => line.push_str(&format!("{v}")),
                    _ => line.push_str(&format!("{}", *v as u64)),
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_sdgrid_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_sdgrid(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("SDGRID output is ASCII")
    }

    pub fn read_sdgrid<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing SDGRID header"))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "SDGRID" {
            return Err(Error::parse(1, format!("bad header `{header}`")));
        }
        let rows: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(1, "bad row count"))?;
        let cols: usize = fields[2]
            .parse()
            .map_err(|_| Error::parse(1, "bad column count"))?;
        let alphabet: Alphabet = fields[3].parse()?;
        let mut cells = Vec::with_capacity(rows * cols);
        for (i, line) in lines.enumerate() {
            let line = line?;
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::parse(i + 2, format!("bad value `{tok}`")))?;
                cells.push(v);
            }
        }
        DataArray::new(rows, cols, alphabet, cells)
    }

    pub fn from_sdgrid_str(s: &str) -> Result<Self> {
        DataArray::read_sdgrid(s.as_bytes())
    }
}

/// Handle to one block of a [`BlockLayout`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockId {
    /// Full `m x m` block at block-row `row`, block-column `col`.
    Full { row: usize, col: usize },
    /// Index into the edge-block list.
    Edge(usize),
}

/// Partition of an `n x n` grid into `K^2` full `m x m` blocks and `2K+1`
/// edge blocks, where `K = ceil(n/m) - 1`.
///
/// Edge blocks are listed as the right strip (top to bottom), then the bottom
/// strip (left to right), then the corner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    n: usize,
    m: usize,
    k: usize,
    full: Vec<Rect>,
    edge: Vec<Rect>,
}

/// Splits the `n x n` grid into blocks of side `m`.
pub fn block_partition(n: usize, m: usize) -> Result<BlockLayout> {
    if m < 1 || m >= n {
        return Err(Error::InvalidPartition { n, m });
    }
    let k = n.div_ceil(m) - 1;
    let rest = n - k * m;
    let mut full = Vec::with_capacity(k * k);
    for br in 0..k {
        for bc in 0..k {
            full.push(Rect::new(br * m, bc * m, m, m));
        }
    }
    let mut edge = Vec::with_capacity(2 * k + 1);
    for br in 0..k {
        edge.push(Rect::new(br * m, k * m, m, rest));
    }
    for bc in 0..k {
        edge.push(Rect::new(k * m, bc * m, rest, m));
    }
    edge.push(Rect::new(k * m, k * m, rest, rest));
    Ok(BlockLayout { n, m, k, full, edge })
}

impl BlockLayout {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `K = ceil(n/m) - 1`, the number of full blocks per side.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn full_blocks(&self) -> &[Rect] {
        &self.full
    }

    pub fn edge_blocks(&self) -> &[Rect] {
        &self.edge
    }

    /// Total number of blocks, `(K+1)^2`.
    pub fn block_count(&self) -> usize {
        self.full.len() + self.edge.len()
    }

    pub fn rect(&self, id: BlockId) -> Rect {
        match id {
            BlockId::Full { row, col } => self.full[row * self.k + col],
            BlockId::Edge(i) => self.edge[i],
        }
    }

    /// Block visiting order: boustrophedon over the `K x K` full blocks
    /// (row 0 left to right, row 1 right to left, ...), then the edge blocks.
    pub fn raster_block_order(&self) -> Vec<BlockId> {
        let mut order = Vec::with_capacity(self.block_count());
        for row in 0..self.k {
            if row % 2 == 0 {
                order.extend((0..self.k).map(|col| BlockId::Full { row, col }));
            } else {
                order.extend((0..self.k).rev().map(|col| BlockId::Full { row, col }));
            }
        }
        order.extend((0..self.edge.len()).map(BlockId::Edge));
        order
    }
}

/// Free-function form of [`BlockLayout::raster_block_order`].
pub fn raster_block_order(layout: &BlockLayout) -> Vec<BlockId> {
    layout.raster_block_order()
}
