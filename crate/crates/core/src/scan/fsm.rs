//! Finite-state scanner machines.
//!
//! The machine is a next-state table `g(state, symbol)` and a displacement
//! table `d(state)`. After reading the value at the current site it moves to
//! `g(state, x)` and steps by `d(new state)`. A step that leaves the domain
//! reads the end-of-file symbol instead and steps again. Over a whole scan at
//! most `|B|` end-of-file reads are allowed; a machine that needs more, or
//! that revisits a site, is not a valid scanner.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{DataArray, Rect, Site};

use super::{scan, ScanSession, ScanTrajectory, Scanner, Visit};

/// Column index of the end-of-file symbol in a next-state row is `symbols`;
/// this marker stands for it in the text format.
pub const EOF: &str = "EOF";

/// Tables of a finite-state scanner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FsmScannerSpec {
    states: usize,
    symbols: usize,
    initial_state: usize,
    /// Relative to the domain origin.
    initial_site: Site,
    /// `states x (symbols + 1)`, row-major; the last column is end-of-file.
    next: Vec<usize>,
    disp: Vec<(i64, i64)>,
}

impl FsmScannerSpec {
    pub fn new(
        states: usize,
        symbols: usize,
        initial_state: usize,
        initial_site: Site,
        next: Vec<usize>,
        disp: Vec<(i64, i64)>,
    ) -> Result<Self> {
        if states == 0 || symbols == 0 {
            return Err(Error::InvalidScanner("empty state or symbol set".into()));
        }
        if initial_state >= states {
            return Err(Error::InvalidScanner(format!(
                "initial state {initial_state} of {states}"
            )));
        }
        if next.len() != states * (symbols + 1) || disp.len() != states {
            return Err(Error::InvalidScanner("tables are not total".into()));
        }
        if let Some(bad) = next.iter().find(|s| **s >= states) {
            return Err(Error::InvalidScanner(format!("transition to unknown state {bad}")));
        }
        Ok(FsmScannerSpec {
            states,
            symbols,
            initial_state,
            initial_site,
            next,
            disp,
        })
    }

    /// One-state machine with a constant displacement.
    pub fn constant(symbols: usize, step: (i64, i64)) -> Self {
        FsmScannerSpec::new(1, symbols, 0, Site::new(0, 0), vec![0; symbols + 1], vec![step])
            .expect("constant machine is well formed")
    }

    /// Four-state boustrophedon machine over binary data: sweep right, on
    /// hitting the edge drop diagonally back into the next row, sweep left,
    /// and so on.
    pub fn serpentine() -> Self {
        const RIGHT: usize = 0;
        const DROP_LEFT: usize = 1;
        const LEFT: usize = 2;
        const DROP_RIGHT: usize = 3;
        let next = vec![
            RIGHT, RIGHT, DROP_LEFT, // RIGHT
            LEFT, LEFT, DROP_LEFT, // DROP_LEFT
            LEFT, LEFT, DROP_RIGHT, // LEFT
            RIGHT, RIGHT, DROP_RIGHT, // DROP_RIGHT
        ];
        let disp = vec![(0, 1), (1, -1), (0, -1), (1, 1)];
        FsmScannerSpec::new(4, 2, RIGHT, Site::new(0, 0), next, disp)
            .expect("serpentine machine is well formed")
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    fn step(&self, state: usize, symbol: usize) -> usize {
        self.next[state * (self.symbols + 1) + symbol]
    }

    /// Serializes to the `FSMSCAN` text format.
    ///
    /// ```text
    /// FSMSCAN states=<S> symbols=<q>
    /// initial <state> <row> <col>
    /// disp <state> <drow> <dcol>
    /// next <state> <symbol|EOF> <state>
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "FSMSCAN states={} symbols={}", self.states, self.symbols).unwrap();
        writeln!(
            out,
            "initial {} {} {}",
            self.initial_state, self.initial_site.row, self.initial_site.col
        )
        .unwrap();
        for (s, (dr, dc)) in self.disp.iter().enumerate() {
            writeln!(out, "disp {s} {dr} {dc}").unwrap();
        }
        for s in 0..self.states {
            for x in 0..=self.symbols {
                let sym = if x == self.symbols {
                    EOF.to_string()
                } else {
                    x.to_string()
                };
                writeln!(out, "next {s} {sym} {}", self.step(s, x)).unwrap();
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing FSMSCAN header"))?;
        let mut head = header.split_whitespace();
        if head.next() != Some("FSMSCAN") {
            return Err(Error::parse(1, "expected FSMSCAN header"));
        }
        let mut states = None;
        let mut symbols = None;
        for kv in head {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::parse(1, format!("bad header field `{kv}`")))?;
            let v: usize = v
                .parse()
                .map_err(|_| Error::parse(1, format!("bad number `{v}`")))?;
            match k {
                "states" => states = Some(v),
                "symbols" => symbols = Some(v),
                _ => return Err(Error::parse(1, format!("unknown header field `{k}`"))),
            }
        }
        let states = states.ok_or_else(|| Error::parse(1, "missing states="))?;
        let symbols = symbols.ok_or_else(|| Error::parse(1, "missing symbols="))?;
        let mut initial = None;
        let mut disp = vec![None; states];
        let mut next = vec![None; states * (symbols + 1)];

        for (line, content) in lines {
            let f: Vec<&str> = content.split_whitespace().collect();
            let num = |s: &str| -> Result<usize> {
                s.parse()
                    .map_err(|_| Error::parse(line, format!("bad number `{s}`")))
            };
            let int = |s: &str| -> Result<i64> {
                s.parse()
                    .map_err(|_| Error::parse(line, format!("bad offset `{s}`")))
            };
            let state = |s: &str| -> Result<usize> {
                let v = num(s)?;
                if v >= states {
                    return Err(Error::parse(line, format!("state {v} out of range")));
                }
                Ok(v)
            };
            match f.as_slice() {
                ["initial", s, r, c] => {
                    initial = Some((state(s)?, Site::new(num(r)?, num(c)?)));
                }
                ["disp", s, dr, dc] => disp[state(s)?] = Some((int(dr)?, int(dc)?)),
                ["next", s, x, t] => {
                    let x = if *x == EOF {
                        symbols
                    } else {
                        let v = num(x)?;
                        if v >= symbols {
                            return Err(Error::parse(line, format!("symbol {v} out of range")));
                        }
                        v
                    };
                    next[state(s)? * (symbols + 1) + x] = Some(state(t)?);
                }
                _ => return Err(Error::parse(line, format!("unrecognized line `{content}`"))),
            }
        }
        let (initial_state, initial_site) =
            initial.ok_or_else(|| Error::parse(1, "missing `initial` line"))?;
        let disp = disp
            .into_iter()
            .enumerate()
            .map(|(s, d)| d.ok_or_else(|| Error::parse(1, format!("no displacement for state {s}"))))
            .collect::<Result<Vec<_>>>()?;
        let next = next
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                t.ok_or_else(|| {
                    Error::parse(
                        1,
                        format!("no transition for state {} symbol {}", i / (symbols + 1), i % (symbols + 1)),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        FsmScannerSpec::new(states, symbols, initial_state, initial_site, next, disp)
    }
}

/// A finite-state machine bound to a domain.
#[derive(Debug, Clone)]
pub struct FsmScanner {
    spec: FsmScannerSpec,
    domain: Rect,
}

impl FsmScanner {
    pub fn new(spec: FsmScannerSpec, domain: Rect) -> Result<Self> {
        let start = Site::new(
            domain.origin.row + spec.initial_site.row,
            domain.origin.col + spec.initial_site.col,
        );
        if !domain.contains(start) {
            return Err(Error::InvalidScanner(format!(
                "initial site {start} outside {domain}"
            )));
        }
        Ok(FsmScanner { spec, domain })
    }

    pub fn spec(&self) -> &FsmScannerSpec {
        &self.spec
    }
}

struct FsmSession<'a> {
    scanner: &'a FsmScanner,
    state: usize,
    pos: (i64, i64),
    started: bool,
    eof_reads: usize,
}

impl ScanSession for FsmSession<'_> {
    fn next_site(&mut self, observed: &[f64]) -> Result<Visit> {
        let spec = &self.scanner.spec;
        let domain = self.scanner.domain;
        if self.started {
            let x = *observed
                .last()
                .ok_or_else(|| Error::InvalidScanner("no observation to read".into()))?;
            let symbol = x as usize;
            if x < 0.0 || x.fract() != 0.0 || symbol >= spec.symbols {
                return Err(Error::DomainMismatch(format!(
                    "value {x} outside a {}-symbol machine alphabet",
                    spec.symbols
                )));
            }
            self.state = spec.step(self.state, symbol);
            self.advance();
            while !domain.contains_signed(self.pos.0, self.pos.1) {
                self.eof_reads += 1;
                if self.eof_reads > domain.area() {
                    return Err(Error::InvalidScanner(format!(
                        "more than {} end-of-file reads without covering the domain",
                        domain.area()
                    )));
                }
                self.state = spec.step(self.state, spec.symbols);
                self.advance();
            }
        }
        self.started = true;
        Ok(Visit {
            site: Site::new(self.pos.0 as usize, self.pos.1 as usize),
            restart: false,
        })
    }
}

impl FsmSession<'_> {
    fn advance(&mut self) {
        let (dr, dc) = self.scanner.spec.disp[self.state];
        self.pos = (self.pos.0 + dr, self.pos.1 + dc);
    }
}

impl Scanner for FsmScanner {
    fn domain(&self) -> Rect {
        self.domain
    }

    fn start(&self) -> Box<dyn ScanSession + '_> {
        let o = self.domain.origin;
        Box::new(FsmSession {
            scanner: self,
            state: self.spec.initial_state,
            pos: (
                (o.row + self.spec.initial_site.row) as i64,
                (o.col + self.spec.initial_site.col) as i64,
            ),
            started: false,
            eof_reads: 0,
        })
    }

    fn name(&self) -> String {
        format!("fsm{}", self.spec.states)
    }
}

/// Runs a finite-state scanner over the whole array.
pub fn fsm_scan(spec: &FsmScannerSpec, array: &DataArray) -> Result<ScanTrajectory> {
    let scanner = FsmScanner::new(spec.clone(), array.rect())?;
    scan(&scanner, array)
}
