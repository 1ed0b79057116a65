//! Paired Monte Carlo of the three controllers from the nominal rest state.
//!
//! Usage: `cargo run --release --example monte_carlo -- [n] [seed]`

use vhip::harness::{monte_carlo, ControllerSpec, Experiment};

fn main() -> vhip::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let n = args.next().map_or(1000, |a| a.parse().expect("n must be an integer"));
    let seed = args.next().map_or(0, |a| a.parse().expect("seed must be an integer"));
    let exp = Experiment { seed, ..Experiment::default() };
    for spec in [
        ControllerSpec::ici(),
        ControllerSpec::icp(),
        ControllerSpec::dcm((exp.constraints.g / exp.nominal.y).sqrt()),
        ControllerSpec::dcm(3.6),
    ] {
        let recs = monte_carlo(spec, n, &exp)?;
        let ok = recs.iter().filter(|r| r.success).count();
        println!("{:<28} {ok:>6}/{n}", spec.label());
    }
    Ok(())
}
