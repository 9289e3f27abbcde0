//! Peano-Hilbert scan of a `2^k x 2^k` square.

use crate::error::{Error, Result};
use crate::grid::{Rect, Site};

use super::FixedOrder;

/// Maps a curve index to `(x, y)` on a `side x side` square.
fn d2xy(side: usize, d: usize) -> (usize, usize) {
    let (mut x, mut y) = (0usize, 0usize);
    let mut t = d;
    let mut s = 1;
    while s < side {
        let rx = 1 & (t / 2);
        let ry = 1 & (t ^ rx);
        if ry == 0 {
            if rx == 1 {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        x += s * rx;
        y += s * ry;
        t /= 4;
        s *= 2;
    }
    (x, y)
}

/// Hilbert order over a square rectangle whose side is a power of two (at least 2).
///
/// The curve starts at the top-left corner and, at order 1, visits
/// `(0,0), (1,0), (1,1), (0,1)` in (row, col) coordinates.
pub fn hilbert_order(rect: Rect) -> Result<Vec<Site>> {
    let side = rect.rows;
    if rect.rows != rect.cols || side < 2 || !side.is_power_of_two() {
        return Err(Error::UnsupportedSize(format!(
            "Hilbert scan needs a 2^k x 2^k square with k >= 1, got {}x{}",
            rect.rows, rect.cols
        )));
    }
    Ok((0..side * side)
        .map(|d| {
            let (x, y) = d2xy(side, d);
            Site::new(rect.origin.row + y, rect.origin.col + x)
        })
        .collect())
}

/// Hilbert scanner of order `k` over the `2^k x 2^k` square at the origin.
pub fn hilbert_scan(k: u32) -> Result<FixedOrder> {
    if k == 0 || k > 15 {
        return Err(Error::UnsupportedSize(format!("Hilbert order {k}")));
    }
    let side = 1usize << k;
    let rect = Rect::sized(side, side);
    FixedOrder::new(rect, hilbert_order(rect)?, "hilbert")
}
