//! Block-wise composition: scan each block of a partition independently.

use crate::error::{Error, Result};
use crate::grid::{BlockId, BlockLayout, Rect};

use super::{raster_scan, Orientation, ScanSession, Scanner, ScannerFactory, Visit};

/// How edge blocks (the strips left over when `m` does not divide the grid
/// into whole blocks) are scanned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgePolicy {
    /// Plain row-major raster.
    #[default]
    Raster,
    /// The inner factory, which must then accept non-square rectangles.
    Inner,
}

/// Scans the blocks of a layout in block raster order, restarting the inner
/// scanner on each block.
pub struct BlockwiseScanner {
    layout: BlockLayout,
    order: Vec<BlockId>,
    blocks: Vec<Box<dyn Scanner>>,
    name: String,
}

/// Builds the block-wise scanner for `layout` from an inner scanner factory.
pub fn blockwise_compose(
    layout: &BlockLayout,
    inner: &ScannerFactory,
    edge_policy: EdgePolicy,
) -> Result<BlockwiseScanner> {
    let order = layout.raster_block_order();
    let mut blocks: Vec<Box<dyn Scanner>> = Vec::with_capacity(order.len());
    for id in &order {
        let rect = layout.rect(*id);
        let scanner: Box<dyn Scanner> = match (id, edge_policy) {
            (BlockId::Edge(_), EdgePolicy::Raster) => {
                Box::new(raster_scan(rect, Orientation::RowLrDown))
            }
            _ => inner(rect)?,
        };
        if scanner.domain() != rect {
            return Err(Error::DomainMismatch(format!(
                "inner scanner covers {} instead of block {rect}",
                scanner.domain()
            )));
        }
        blocks.push(scanner);
    }
    let name = format!(
        "blockwise-{}",
        blocks.first().map(|b| b.name()).unwrap_or_default()
    );
    Ok(BlockwiseScanner {
        layout: layout.clone(),
        order,
        blocks,
        name,
    })
}

impl BlockwiseScanner {
    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    /// Blocks in the order they are scanned.
    pub fn block_order(&self) -> &[BlockId] {
        &self.order
    }
}

struct BlockwiseSession<'a> {
    scanner: &'a BlockwiseScanner,
    block: usize,
    inner: Option<Box<dyn ScanSession + 'a>>,
    left_in_block: usize,
}

impl<'a> ScanSession for BlockwiseSession<'a> {
    fn next_site(&mut self, observed: &[f64]) -> Result<Visit> {
        let restart = self.left_in_block == 0;
        if restart {
            let scanner = self
                .scanner
                .blocks
                .get(self.block)
                .ok_or_else(|| Error::InvalidScanner("block-wise scan ran past the grid".into()))?;
            self.block += 1;
            self.left_in_block = scanner.domain().area();
            self.inner = Some(scanner.start());
        }
        // After a restart the driver hands over only this block's values.
        let local = if restart { &[][..] } else { observed };
        let visit = self
            .inner
            .as_mut()
            .expect("inner session started")
            .next_site(local)?;
        self.left_in_block -= 1;
        Ok(Visit {
            site: visit.site,
            restart,
        })
    }
}

impl Scanner for BlockwiseScanner {
    fn domain(&self) -> Rect {
        Rect::sized(self.layout.n(), self.layout.n())
    }

    fn start(&self) -> Box<dyn ScanSession + '_> {
        Box::new(BlockwiseSession {
            scanner: self,
            block: 0,
            inner: None,
            left_in_block: 0,
        })
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{block_partition, Alphabet, DataArray, Site};
    use crate::scan::{raster_order, scan, FsmScanner, FsmScannerSpec, ScanKind};
    use std::sync::Arc;

    #[test]
    fn four_by_two_raster_blocks() {
        let layout = block_partition(4, 2).unwrap();
        let s = blockwise_compose(
            &layout,
            &ScanKind::Raster(Orientation::RowLrDown).factory(),
            EdgePolicy::Raster,
        )
        .unwrap();
        let a = DataArray::filled(4, 4, Alphabet::Binary, 0.0).unwrap();
        let t = scan(&s, &a).unwrap();
        let mut want = Vec::new();
        for id in layout.raster_block_order() {
            want.extend(raster_order(layout.rect(id), Orientation::RowLrDown));
        }
        assert_eq!(t.sites, want);
        assert_eq!(t.restarts, vec![0, 4, 8, 12]);
    }

    #[test]
    fn hilbert_blocks_on_non_power_of_two_grid() {
        let layout = block_partition(11, 4).unwrap();
        let s = blockwise_compose(&layout, &ScanKind::Hilbert.factory(), EdgePolicy::Raster)
            .unwrap();
        let a = DataArray::filled(11, 11, Alphabet::Binary, 1.0).unwrap();
        let t = scan(&s, &a).unwrap();
        assert_eq!(t.len(), 121);
        assert_eq!(t.restarts.len(), layout.block_count());
        assert!(blockwise_compose(&layout, &ScanKind::Hilbert.factory(), EdgePolicy::Inner).is_err());
    }

    #[test]
    fn m_is_n_minus_one() {
        let layout = block_partition(6, 5).unwrap();
        assert_eq!(layout.block_count(), 4);
        let s = blockwise_compose(&layout, &ScanKind::Serpentine.factory(), EdgePolicy::Inner)
            .unwrap();
        let a = DataArray::filled(6, 6, Alphabet::Binary, 0.0).unwrap();
        assert_eq!(scan(&s, &a).unwrap().len(), 36);
    }

    #[test]
    fn data_dependent_inner_scanner_sees_block_local_history() {
        let layout = block_partition(7, 3).unwrap();
        let factory: ScannerFactory = Arc::new(|rect| {
            Ok(Box::new(FsmScanner::new(FsmScannerSpec::serpentine(), rect)?) as Box<dyn Scanner>)
        });
        let s = blockwise_compose(&layout, &factory, EdgePolicy::Inner).unwrap();
        let a = DataArray::from_fn(7, 7, Alphabet::Binary, |s: Site| ((s.row * s.col) % 2) as f64)
            .unwrap();
        let t = scan(&s, &a).unwrap();
        assert_eq!(t.len(), 49);
    }
}
