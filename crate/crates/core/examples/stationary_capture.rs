//! Holding the input at the state's own ICI brings the CoM to rest at `φ(ξ(x0))`.

use vhip::capturability::{classify, stationary_capture_target};
use vhip::control::PureIciController;
use vhip::model::{simulate, ComState, ConstraintSet};

fn main() -> vhip::error::Result<()> {
    let cs = ConstraintSet::walker();
    let x0 = ComState::new(0.02, 0.62, 0.25, -0.3)?;
    println!("x0 = {x0:?} ({:?})", classify(&x0, &cs));

    let rest = stationary_capture_target(&x0, cs.g)?;
    let traj = simulate(&x0, &mut PureIciController { g: cs.g }, 4.0, 1e-3, &cs)?;
    for row in traj.rows.iter().step_by(500) {
        println!(
            "t = {:.1}  c = ({:+.5}, {:.5})  xi = ({:.6}, {:.6})",
            row.t, row.state.c_x, row.state.c_z, row.ici.xi_p, row.ici.xi_lambda
        );
    }
    let x_f = traj.final_state().expect("non-empty trajectory");
    println!("predicted rest point ({:.6}, {:.6})", rest.x, rest.y);
    println!("reached             ({:.6}, {:.6}), speed {:.2e}", x_f.c_x, x_f.c_z, x_f.velocity().norm());
    Ok(())
}
