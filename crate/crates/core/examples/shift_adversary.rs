//! The shifted binary-expansion field under squared loss. A fixed scan pays
//! about 1/8 per site; the better of two opposed rasters, picked after the
//! fact, pays about half that; a scan that starts at the real cell and
//! follows the expansion pays almost nothing.
use scandiction::fields::ShiftAdversary;
use scandiction::rng::seeded;

fn main() -> scandiction::Result<()> {
    let n = 8;
    let cells = n * n;
    let mut rng = seeded(4);
    let draws = 2000;
    let (mut forward, mut reverse, mut best) = (0.0, 0.0, 0.0);
    let raster: Vec<usize> = (0..cells).collect();
    let backward: Vec<usize> = (0..cells).rev().collect();
    for _ in 0..draws {
        let adv = ShiftAdversary::draw(n, &mut rng)?;
        let f = adv.squared_loss_along(&raster);
        let b = adv.squared_loss_along(&backward);
        forward += f;
        reverse += b;
        best += f.min(b);
    }
    let d = draws as f64;
    println!("mean loss forward raster  {:.3}", forward / d);
    println!("mean loss reverse raster  {:.3}", reverse / d);
    println!("mean of the better of two {:.3}", best / d);
    println!("(n^2 - 1) / 8             {:.3}", (cells - 1) as f64 / 8.0);

    // Cheating: start at the real cell and walk the expansion in order.
    let adv = ShiftAdversary::draw(n, &mut rng)?;
    let start = adv.real_position();
    let follow: Vec<usize> = (0..cells).map(|k| (start + k) % cells).collect();
    println!("following the expansion   {:.3}", adv.squared_loss_along(&follow));
    Ok(())
}
