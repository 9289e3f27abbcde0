//! Splits a 10x10 grid into 3x3 blocks and prints the visiting order.
use scandiction::grid::{block_partition, raster_block_order, BlockId};

fn main() -> scandiction::Result<()> {
    let (n, m) = (10, 3);
    let layout = block_partition(n, m)?;
    println!(
        "n={n} m={m}: K={} full blocks={} edge blocks={}",
        layout.k(),
        layout.full_blocks().len(),
        layout.edge_blocks().len()
    );
    for id in raster_block_order(&layout) {
        let r = layout.rect(id);
        let tag = match id {
            BlockId::Full { row, col } => format!("full ({row},{col})"),
            BlockId::Edge(i) => format!("edge {i}"),
        };
        println!("{tag:>12}: rows {}..{} cols {}..{}", r.origin.row, r.origin.row + r.rows, r.origin.col, r.origin.col + r.cols);
    }
    Ok(())
}
