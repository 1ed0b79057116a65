//! The DCM baseline along a vertical velocity sweep for two initial
//! divergence rates. Success tracks how close `ω(0)` is to the true rate.

use vhip::harness::{run_scenario, ControllerSpec, Experiment};
use vhip::indicators::omega;
use vhip::model::Vec2;

fn main() -> vhip::error::Result<()> {
    let exp = Experiment::default();
    let g = exp.constraints.g;
    let omegas = [(g / 0.6).sqrt(), 3.6];
    println!("{:>6} {:>8} {:>12} {:>12}", "dc_z", "omega", "w0 = 4.04", "w0 = 3.6");
    for i in 0..=22 {
        let dcz = -0.4 + 0.05 * i as f64;
        let v = Vec2::new(0.2, dcz);
        let mut cells = Vec::new();
        for w0 in omegas {
            let (_, rec) = run_scenario(&exp.scenario(ControllerSpec::dcm(w0), v)?)?;
            cells.push(if rec.success { "ok" } else { "fail" });
        }
        println!("{dcz:+6.2} {:8.4} {:>12} {:>12}", omega(0.6, dcz, g)?, cells[0], cells[1]);
    }
    Ok(())
}
