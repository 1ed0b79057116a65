use std::process::Command;

fn vhip(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_vhip")).args(args).output().unwrap()
}

#[test]
fn region_slice_default_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("slice.csv");
    let o = vhip(&["region-slice", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u,v,class"));
    assert_eq!(lines.count(), 160_000);
}

#[test]
fn simulate_push_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ici.csv");
    let o = vhip(&["simulate", "--controller", "ici", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("t,c_x,c_z,dc_x,dc_z,p,lambda,xi_p,xi_lambda,k1,k2,eta_p\n"));
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(last[0], 4.0);
    let pos = (last[1].powi(2) + (last[2] - 0.75).powi(2)).sqrt();
    let vel = (last[3].powi(2) + last[4].powi(2)).sqrt();
    assert!(pos.max(vel) < 0.01);

    let o = vhip(&["simulate", "--controller", "icp", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(vhip(&["monte-carlo", "--n", "0"]).status.code(), Some(2));
    assert_eq!(vhip(&["monte-carlo", "--bogus"]).status.code(), Some(2));
    assert_eq!(vhip(&["simulate", "--p-min", "0.2"]).status.code(), Some(2));
    assert_eq!(vhip(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(vhip(&["--help"]).status.code(), Some(0));
}

#[test]
fn help_lists_every_flag() {
    let mc = String::from_utf8(vhip(&["monte-carlo", "--help"]).stdout).unwrap();
    for flag in [
        "--p-min", "--p-max", "--lambda-min", "--lambda-max", "--g", "--dt", "--tf", "--n", "--seed",
        "--controller", "--omega0", "--gain", "--epsilon", "--max-gain", "--gamma", "--target-cx",
        "--target-cz", "--out",
    ] {
        assert!(mc.contains(flag), "missing {flag}");
    }
}

#[test]
fn monte_carlo_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = vhip(&["monte-carlo", "--n", "8", "--seed", "3", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    let text = String::from_utf8(ta).unwrap();
    assert!(text.starts_with("trial,dcx0,dcz0,controller,success,pos_err,vel_err,failure_reason\n"));
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn compare_pairs_all_controllers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp.csv");
    let o = vhip(&["compare", "--n", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 5);
}
