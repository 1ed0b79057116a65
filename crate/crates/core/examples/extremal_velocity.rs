//! Largest forward velocity at rest height 0.6 m for both region approximations.

use vhip::capturability::{
    extremal_velocity, inner_extremal_velocity_closed_form, outer_extremal_velocity_closed_form, Region,
};
use vhip::model::{ComState, ConstraintSet};

fn main() -> vhip::error::Result<()> {
    let cs = ConstraintSet::walker();
    let base = ComState::new(0.0, 0.6, 0.0, 0.0)?;
    println!(
        "inner: bisection {:.6}, closed form {:.6}",
        extremal_velocity(&base, &cs, Region::Inner)?,
        inner_extremal_velocity_closed_form(&base, &cs)?
    );
    println!(
        "outer: bisection {:.6}, closed form {:.6}",
        extremal_velocity(&base, &cs, Region::Outer)?,
        outer_extremal_velocity_closed_form(&base, &cs)
    );
    Ok(())
}
