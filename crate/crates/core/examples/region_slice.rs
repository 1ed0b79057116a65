//! Coarse text rendering of the `(c_x, ċ_x)` slice at `c_z = 0.6`, `ċ_z = 0`.
//!
//! Pass a path to also write the full 400×400 grid as CSV.

use std::fs::File;

use vhip::capturability::{slice_scan, RegionClass, SliceSpec};
use vhip::model::ConstraintSet;

fn main() -> vhip::error::Result<()> {
    let cs = ConstraintSet::walker();
    let coarse = SliceSpec::horizontal_slice(0.6, cs.g / 0.6, cs.g, 48);
    let grid = slice_scan(&coarse, &cs)?;
    println!("u = c_x in {:?}, v = dc_x in {:?}", coarse.u_range, coarse.v_range);
    println!("'#' inner, '+' outer only, '.' outside");
    for j in (0..grid.v.len()).rev() {
        let line: String = (0..grid.u.len())
            .map(|i| match grid.get(i, j) {
                RegionClass::Inner => '#',
                RegionClass::OuterOnly => '+',
                RegionClass::Outside => '.',
            })
            .collect();
        println!("{:+.2} {line}", grid.v[j]);
    }

    if let Some(path) = std::env::args().nth(1) {
        let fine = SliceSpec::horizontal_slice(0.6, cs.g / 0.6, cs.g, 400);
        slice_scan(&fine, &cs)?.write_csv(File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
