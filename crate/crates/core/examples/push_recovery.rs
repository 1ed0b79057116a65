//! A 0.58 m/s forward push at rest: ICP feedback with fixed height falls,
//! the ICI controller recovers by raising the CoM to 0.75 m.

use vhip::harness::{run_scenario, ControllerSpec, Scenario};
use vhip::indicators::ici;

fn main() -> vhip::error::Result<()> {
    let s = Scenario::push_recovery(ControllerSpec::ici());
    let xi0 = ici(&s.initial_state(), s.constraints.g)?;
    println!("after the push xi_p = {:.4} (p+ = {})", xi0.xi_p, s.constraints.p_max);

    for spec in [ControllerSpec::icp(), ControllerSpec::ici()] {
        let (traj, rec) = run_scenario(&Scenario { controller: spec, ..s })?;
        let x_f = traj.final_state().expect("non-empty trajectory");
        println!(
            "{:>4}: success {:<5} final c = ({:+.3e}, {:.4}) |dc| = {:.3e}",
            rec.controller,
            rec.success,
            x_f.c_x,
            x_f.c_z,
            x_f.velocity().norm()
        );
    }
    Ok(())
}
