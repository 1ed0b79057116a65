//! Online gains and compensation along the push recovery run.

use vhip::harness::{run_scenario, ControllerSpec, Scenario};

fn main() -> vhip::error::Result<()> {
    let (traj, _) = run_scenario(&Scenario::push_recovery(ControllerSpec::ici()))?;
    println!("{:>5} {:>9} {:>9} {:>8} {:>8} {:>11}", "t", "p", "lambda", "k1", "k2", "eta_p");
    for row in traj.rows.iter().step_by(100).take(21) {
        let k = row.gains.expect("ICI rows carry gains");
        println!(
            "{:5.2} {:9.5} {:9.4} {:8.4} {:8.4} {:11.3e}",
            row.t,
            row.input.p,
            row.input.lambda,
            k.k1,
            k.k2,
            row.eta_p.unwrap_or(0.0)
        );
    }
    Ok(())
}
