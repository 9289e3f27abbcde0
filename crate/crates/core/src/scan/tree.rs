//! Decision-tree scanners over small binary blocks.
//!
//! Every scanner of a block with `A` sites is a tree of depth `A`: the node
//! reached after observing `t` bits picks the next site among the `A - t`
//! unvisited ones. Nodes are numbered heap-style, `(1 << t) | bits` with the
//! first observed bit most significant.

use crate::error::{Error, Result};
use crate::grid::{Rect, Site};

use super::{ScanSession, Scanner, Visit};

/// Largest block area for which decision trees are materialized.
pub const MAX_TREE_AREA: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeScanner {
    domain: Rect,
    /// `choice[node - 1]` indexes the unvisited sites (row-major) at `node`.
    choice: Vec<u8>,
}

impl TreeScanner {
    pub fn new(domain: Rect, choice: Vec<u8>) -> Result<Self> {
        let area = domain.area();
        if area == 0 || area > MAX_TREE_AREA {
            return Err(Error::UnsupportedSize(format!(
                "decision-tree scanner over {area} sites"
            )));
        }
        if choice.len() != (1 << area) - 1 {
            return Err(Error::InvalidScanner(format!(
                "{} tree nodes for {area} sites",
                choice.len()
            )));
        }
        for (i, c) in choice.iter().enumerate() {
            let depth = (usize::BITS - 1 - (i + 1).leading_zeros()) as usize;
            if usize::from(*c) >= area - depth {
                return Err(Error::InvalidScanner(format!(
                    "node {} picks site {c} of {}",
                    i + 1,
                    area - depth
                )));
            }
        }
        Ok(TreeScanner { domain, choice })
    }

    /// Site chosen at `node`, given the row-major indices still unvisited.
    fn pick(&self, node: usize, unvisited: &mut Vec<usize>) -> Site {
        let idx = unvisited.remove(usize::from(self.choice[node - 1]));
        self.domain.site_at(idx)
    }

    /// Walks the tree over the block values `value(site)`, returning the
    /// `(node, site)` pair of every step.
    pub fn path(&self, mut value: impl FnMut(Site) -> f64) -> Vec<(usize, Site)> {
        let area = self.domain.area();
        let mut unvisited: Vec<usize> = (0..area).collect();
        let mut node = 1;
        let mut out = Vec::with_capacity(area);
        for _ in 0..area {
            let site = self.pick(node, &mut unvisited);
            out.push((node, site));
            let bit = usize::from(value(site) >= 0.5);
            node = (node << 1) | bit;
        }
        out
    }
}

struct TreeSession<'a> {
    tree: &'a TreeScanner,
    node: usize,
    unvisited: Vec<usize>,
}

impl ScanSession for TreeSession<'_> {
    fn next_site(&mut self, observed: &[f64]) -> Result<Visit> {
        if let Some(x) = observed.last() {
            if *x != 0.0 && *x != 1.0 {
                return Err(Error::DomainMismatch(format!(
                    "decision-tree scanners read bits, got {x}"
                )));
            }
            self.node = (self.node << 1) | usize::from(*x == 1.0);
        }
        if self.unvisited.is_empty() {
            return Err(Error::InvalidScanner("scan ran past its domain".into()));
        }
        Ok(Visit {
            site: self.tree.pick(self.node, &mut self.unvisited),
            restart: false,
        })
    }
}

impl Scanner for TreeScanner {
    fn domain(&self) -> Rect {
        self.domain
    }

    fn start(&self) -> Box<dyn ScanSession + '_> {
        Box::new(TreeSession {
            tree: self,
            node: 1,
            unvisited: (0..self.domain.area()).collect(),
        })
    }

    fn name(&self) -> String {
        "tree".to_string()
    }
}

/// All decision-tree scanners of a binary block with at most 4 sites.
/// A 2x2 block has `4 * 3^2 * 2^4 = 576` of them.
pub fn enumerate_tree_scanners(domain: Rect) -> Result<Vec<TreeScanner>> {
    let area = domain.area();
    if area == 0 || area > 4 {
        return Err(Error::UnsupportedSize(format!(
            "enumerating decision trees over {area} sites"
        )));
    }
    let nodes = (1usize << area) - 1;
    let radix: Vec<u8> = (1..=nodes)
        .map(|node| (area - (usize::BITS - 1 - node.leading_zeros()) as usize) as u8)
        .collect();
    let mut digits = vec![0u8; nodes];
    let mut out = Vec::new();
    loop {
        out.push(TreeScanner {
            domain,
            choice: digits.clone(),
        });
        let mut i = 0;
        loop {
            if i == nodes {
                return Ok(out);
            }
            digits[i] += 1;
            if digits[i] < radix[i] {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Alphabet, DataArray};
    use crate::scan::scan;
    use std::collections::HashSet;

    #[test]
    fn two_by_two_count() {
        let trees = enumerate_tree_scanners(Rect::sized(2, 2)).unwrap();
        assert_eq!(trees.len(), 576);
        let distinct: HashSet<_> = trees.iter().map(|t| t.choice.clone()).collect();
        assert_eq!(distinct.len(), 576);
        assert_eq!(enumerate_tree_scanners(Rect::sized(1, 3)).unwrap().len(), 3 * 4);
        assert!(enumerate_tree_scanners(Rect::sized(3, 3)).is_err());
    }

    #[test]
    fn every_tree_covers_every_block() {
        let rect = Rect::new(2, 4, 2, 2);
        let trees = enumerate_tree_scanners(rect).unwrap();
        for bits in 0..16u32 {
            let a = DataArray::from_fn(4, 6, Alphabet::Binary, |s| {
                rect.local_index(s).map_or(0.0, |i| f64::from((bits >> i) & 1))
            })
            .unwrap();
            for tree in &trees {
                let t = scan(tree, &a).unwrap();
                let via_path: Vec<Site> = tree.path(|s| a.get(s)).into_iter().map(|p| p.1).collect();
                assert_eq!(t.sites, via_path);
            }
        }
    }

    #[test]
    fn distinct_trees_give_distinct_behaviour() {
        // Two trees differ iff some array makes them emit different orders.
        let rect = Rect::sized(2, 2);
        let trees = enumerate_tree_scanners(rect).unwrap();
        let signature = |t: &TreeScanner| -> Vec<Vec<Site>> {
            (0..16u32)
                .map(|bits| {
                    t.path(|s| f64::from((bits >> rect.local_index(s).unwrap()) & 1))
                        .into_iter()
                        .map(|p| p.1)
                        .collect()
                })
                .collect()
        };
        let sigs: HashSet<_> = trees.iter().map(signature).collect();
        assert_eq!(sigs.len(), 576);
    }
}
