//! Closed-form inner (`Ω`) and outer (`Ω̃`) approximations of the capture
//! basin, grid slices through them, and extremal-velocity searches.
//!
//! `Ω` asks for the ICI itself to lie in `U`. `Ω̃` keeps the stiffness band
//! on `ξ_λ` but replaces the ZMP condition on `ξ_p` with the weaker one on
//! the two-sided approximators. Both use closed inequalities.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::indicators::{ici, two_sided};
use crate::model::{phi, ComState, ConstraintSet, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionClass {
    Inner,
    OuterOnly,
    Outside,
}

impl RegionClass {
    /// CSV code: 0 inner, 1 outer only, 2 outside.
    pub fn code(self) -> u8 {
        match self {
            RegionClass::Inner => 0,
            RegionClass::OuterOnly => 1,
            RegionClass::Outside => 2,
        }
    }
}

/// Which approximation a membership query refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Inner,
    Outer,
}

fn lambda_band_ok(xi_lambda: f64, cs: &ConstraintSet) -> bool {
    cs.lambda_min <= xi_lambda && xi_lambda <= cs.lambda_max
}

pub fn in_inner(x: &ComState, cs: &ConstraintSet) -> bool {
    match ici(x, cs.g) {
        Ok(xi) => cs.p_min <= xi.xi_p && xi.xi_p <= cs.p_max && lambda_band_ok(xi.xi_lambda, cs),
        Err(_) => false,
    }
}

pub fn in_outer(x: &ComState, cs: &ConstraintSet) -> bool {
    let Ok(xi) = ici(x, cs.g) else {
        return false;
    };
    let ts = two_sided(x, cs);
    ts.lower() <= cs.p_max && ts.upper() >= cs.p_min && lambda_band_ok(xi.xi_lambda, cs)
}

pub fn in_region(x: &ComState, cs: &ConstraintSet, region: Region) -> bool {
    match region {
        Region::Inner => in_inner(x, cs),
        Region::Outer => in_outer(x, cs),
    }
}

pub fn classify(x: &ComState, cs: &ConstraintSet) -> RegionClass {
    if in_inner(x, cs) {
        RegionClass::Inner
    } else if in_outer(x, cs) {
        RegionClass::OuterOnly
    } else {
        RegionClass::Outside
    }
}

/// Strict membership in `Ω` with a margin on all four inequalities.
pub fn in_inner_interior(x: &ComState, cs: &ConstraintSet, margin: f64) -> bool {
    match ici(x, cs.g) {
        Ok(xi) => {
            cs.p_min + margin < xi.xi_p
                && xi.xi_p < cs.p_max - margin
                && cs.lambda_min + margin < xi.xi_lambda
                && xi.xi_lambda < cs.lambda_max - margin
        }
        Err(_) => false,
    }
}

/// Where the state-only ICI policy brings the CoM to rest: `φ(ξ(x))`.
pub fn stationary_capture_target(x: &ComState, g: f64) -> Result<Vec2> {
    phi(ici(x, g)?.to_vector(), g)
}

/// A state coordinate that can be swept or searched along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coord {
    Cx,
    Cz,
    DCx,
    DCz,
}

impl Coord {
    pub fn get(self, x: &ComState) -> f64 {
        match self {
            Coord::Cx => x.c_x,
            Coord::Cz => x.c_z,
            Coord::DCx => x.dc_x,
            Coord::DCz => x.dc_z,
        }
    }

    pub fn with(self, x: &ComState, value: f64) -> ComState {
        let mut out = *x;
        match self {
            Coord::Cx => out.c_x = value,
            Coord::Cz => out.c_z = value,
            Coord::DCx => out.dc_x = value,
            Coord::DCz => out.dc_z = value,
        }
        out
    }
}

impl FromStr for Coord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cx" | "c_x" => Ok(Coord::Cx),
            "cz" | "c_z" => Ok(Coord::Cz),
            "dcx" | "dc_x" => Ok(Coord::DCx),
            "dcz" | "dc_z" => Ok(Coord::DCz),
            other => Err(Error::InvalidArgument(format!("unknown coordinate '{other}'"))),
        }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Coord::Cx => "cx",
            Coord::Cz => "cz",
            Coord::DCx => "dcx",
            Coord::DCz => "dcz",
        })
    }
}

/// A 2D slice through the 4D state space.
///
/// The two unswept coordinates are taken from `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec {
    pub base: ComState,
    pub u_axis: Coord,
    pub v_axis: Coord,
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
    pub resolution: (usize, usize),
}

impl SliceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.u_axis == self.v_axis {
            return Err(Error::InvalidArgument("slice axes must differ".into()));
        }
        for (lo, hi) in [self.u_range, self.v_range] {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidArgument(format!("bad slice range [{lo}, {hi}]")));
            }
        }
        if self.resolution.0 == 0 || self.resolution.1 == 0 {
            return Err(Error::InvalidArgument("slice resolution must be at least 1".into()));
        }
        Ok(())
    }

    /// `(c_z, ċ_z)` slice at `c_x = ċ_x = 0`.
    pub fn height_slice(resolution: usize) -> Self {
        Self {
            base: ComState {
                c_x: 0.0,
                c_z: 0.6,
                dc_x: 0.0,
                dc_z: 0.0,
            },
            u_axis: Coord::Cz,
            v_axis: Coord::DCz,
            u_range: (0.3, 1.0),
            v_range: (-1.5, 1.5),
            resolution: (resolution, resolution),
        }
    }

    /// `(c_x, ċ_x)` slice with `(c_z, ċ_z)` chosen so that `ω² = omega_sq`.
    pub fn horizontal_slice(c_z: f64, omega_sq: f64, g: f64, resolution: usize) -> Self {
        let w = omega_sq.sqrt();
        // c_z ω² + ċ_z ω − g = 0 solved for ċ_z
        let dc_z = (g - c_z * omega_sq) / w;
        Self {
            base: ComState {
                c_x: 0.0,
                c_z,
                dc_x: 0.0,
                dc_z,
            },
            u_axis: Coord::Cx,
            v_axis: Coord::DCx,
            u_range: (-0.3, 0.3),
            v_range: (-2.5, 2.5),
            resolution: (resolution, resolution),
        }
    }

    fn centers(range: (f64, f64), n: usize) -> Vec<f64> {
        let w = (range.1 - range.0) / n as f64;
        (0..n).map(|i| range.0 + (i as f64 + 0.5) * w).collect()
    }
}

/// Row-major grid of classifications; row `j` holds `v[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceGrid {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub cells: Vec<RegionClass>,
}

impl SliceGrid {
    pub fn get(&self, i: usize, j: usize) -> RegionClass {
        self.cells[j * self.u.len() + i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, RegionClass)> + '_ {
        let nu = self.u.len();
        self.cells
            .iter()
            .enumerate()
            .map(move |(k, &c)| (self.u[k % nu], self.v[k / nu], c))
    }

    pub fn count(&self, class: RegionClass) -> usize {
        self.cells.iter().filter(|&&c| c == class).count()
    }

    /// Writes `u,v,class` with a header row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["u", "v", "class"])?;
        for (u, v, c) in self.iter() {
            out.write_record([format!("{u:?}"), format!("{v:?}"), c.code().to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Classifies every cell center of the slice; cells with `c_z <= 0` are `Outside`.
pub fn slice_scan(spec: &SliceSpec, cs: &ConstraintSet) -> Result<SliceGrid> {
    spec.validate()?;
    let u = SliceSpec::centers(spec.u_range, spec.resolution.0);
    let v = SliceSpec::centers(spec.v_range, spec.resolution.1);
    let nu = u.len();
    let cells = (0..u.len() * v.len())
        .into_par_iter()
        .map(|k| {
            let x = spec.u_axis.with(&spec.base, u[k % nu]);
            let x = spec.v_axis.with(&x, v[k / nu]);
            if x.validate().is_err() {
                RegionClass::Outside
            } else {
                classify(&x, cs)
            }
        })
        .collect();
    Ok(SliceGrid { u, v, cells })
}

/// Bisection width for extremal searches (m/s).
pub const EXTREMAL_TOL: f64 = 1e-6;

const BRACKET_LIMIT: f64 = 1e6;

/// Largest `ċ_x ≥ 0` keeping `base` (with its `ċ_x` replaced) in `region`.
pub fn extremal_velocity(base: &ComState, cs: &ConstraintSet, region: Region) -> Result<f64> {
    extremal_along(base, cs, region, Coord::DCx, 1.0)
}

/// Largest `t ≥ 0` such that setting `axis` to `direction.signum() * t`
/// keeps `base` in `region`; the set along the ray is an interval for both
/// approximations.
pub fn extremal_along(
    base: &ComState,
    cs: &ConstraintSet,
    region: Region,
    axis: Coord,
    direction: f64,
) -> Result<f64> {
    let sign = direction.signum();
    let member = |t: f64| in_region(&axis.with(base, sign * t), cs, region);
    if !member(0.0) {
        return Err(Error::NoBracket);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while member(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > BRACKET_LIMIT {
            return Err(Error::NoBracket);
        }
    }
    while hi - lo > EXTREMAL_TOL {
        let mid = 0.5 * (lo + hi);
        if member(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `(p⁺ − c_x) ω`: the inner boundary in `ċ_x` at fixed `(c_x, c_z, ċ_z)`.
pub fn inner_extremal_velocity_closed_form(base: &ComState, cs: &ConstraintSet) -> Result<f64> {
    let w = crate::indicators::omega(base.c_z, base.dc_z, cs.g)?;
    Ok((cs.p_max - base.c_x) * w)
}

/// `(p⁺ − c_x) √λ⁺`: the outer boundary in `ċ_x`.
pub fn outer_extremal_velocity_closed_form(base: &ComState, cs: &ConstraintSet) -> f64 {
    (cs.p_max - base.c_x) * cs.lambda_max.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cs() -> ConstraintSet {
        ConstraintSet::walker()
    }

    fn st(c_x: f64, c_z: f64, dc_x: f64, dc_z: f64) -> ComState {
        ComState::new(c_x, c_z, dc_x, dc_z).unwrap()
    }

    #[test]
    fn inner_examples() {
        assert!(in_inner(&st(0.0, 0.6, 0.5, 0.0), &cs()));
        assert!(!in_inner(&st(0.0, 0.6, 0.58, 0.0), &cs()));
        for (c_x, c_z) in [(-0.1, 0.5), (0.14, 0.8), (0.0, 0.6), (0.07, 0.73)] {
            assert!(in_inner(&st(c_x, c_z, 0.0, 0.0), &cs()), "{c_x} {c_z}");
        }
        assert!(!in_inner(&st(0.0, 0.45, 0.0, 0.0), &cs()));
    }

    #[test]
    fn outer_examples() {
        assert!(in_outer(&st(0.0, 0.6, 0.58, 0.0), &cs()));
        assert!(in_outer(&st(0.0, 0.6, 0.5, 0.0), &cs()));
        assert!(!in_outer(&st(0.0, 0.6, 2.0, 0.0), &cs()));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&st(0.0, 0.6, 0.5, 0.0), &cs()), RegionClass::Inner);
        assert_eq!(classify(&st(0.0, 0.6, 0.6, 0.0), &cs()), RegionClass::OuterOnly);
        assert_eq!(classify(&st(0.0, 0.6, 1.0, 0.0), &cs()), RegionClass::Outside);
    }

    #[test]
    fn interior_margin() {
        assert!(in_inner_interior(&st(0.0, 0.6, 0.0, 0.0), &cs(), 1e-3));
        assert!(!in_inner_interior(&st(0.14, 0.6, 0.0, 0.0), &cs(), 0.0));
        assert!(in_inner(&st(0.14, 0.6, 0.0, 0.0), &cs()));
    }

    #[test]
    fn extremal_examples() {
        let base = st(0.0, 0.6, 0.0, 0.0);
        let inner = extremal_velocity(&base, &cs(), Region::Inner).unwrap();
        assert_abs_diff_eq!(inner, 0.5658, epsilon = 1e-3);
        assert_abs_diff_eq!(inner, inner_extremal_velocity_closed_form(&base, &cs()).unwrap(), epsilon = 2e-6);
        assert_abs_diff_eq!(
            inner_extremal_velocity_closed_form(&base, &cs()).unwrap(),
            0.14 * (9.8f64 / 0.6).sqrt(),
            epsilon = 1e-15
        );

        let outer = extremal_velocity(&base, &cs(), Region::Outer).unwrap();
        assert_abs_diff_eq!(outer, 0.6198064213930025, epsilon = 2e-6);

        let edge = st(0.14, 0.6, 0.0, 0.0);
        assert_eq!(extremal_velocity(&edge, &cs(), Region::Inner).unwrap(), 0.0);
    }

    #[test]
    fn extremal_without_bracket() {
        let beyond = st(0.2, 0.6, 0.0, 0.0);
        assert!(matches!(extremal_velocity(&beyond, &cs(), Region::Inner), Err(Error::NoBracket)));
        let too_low = st(0.0, 0.3, 0.0, 0.0);
        assert!(extremal_velocity(&too_low, &cs(), Region::Outer).is_err());
    }

    #[test]
    fn extremal_in_vertical_direction() {
        let base = st(0.0, 0.6, 0.0, 0.0);
        let up = extremal_along(&base, &cs(), Region::Outer, Coord::DCz, 1.0).unwrap();
        let down = extremal_along(&base, &cs(), Region::Outer, Coord::DCz, -1.0).unwrap();
        // ċ_z = (g − c_z λ)/√λ at the band edges
        assert_abs_diff_eq!(up, 0.7, epsilon = 2e-6);
        assert_abs_diff_eq!(down, (0.6 * 19.6 - 9.8) / 19.6f64.sqrt(), epsilon = 2e-6);
    }

    #[test]
    fn capture_target_examples() {
        let rest = st(0.04, 0.66, 0.0, 0.0);
        assert_abs_diff_eq!(stationary_capture_target(&rest, 9.8).unwrap(), rest.position(), epsilon = 1e-14);

        let pushed = st(0.0, 0.6, 0.58, 0.0);
        let target = stationary_capture_target(&pushed, 9.8).unwrap();
        assert_abs_diff_eq!(target.x, 0.1435127811985641, epsilon = 1e-12);
        assert_abs_diff_eq!(target.y, 0.6, epsilon = 1e-14);

        let moving = st(0.02, 0.7, 0.3, -0.2);
        let d = stationary_capture_target(&moving, 9.8).unwrap() - moving.position();
        let v = moving.velocity();
        assert_abs_diff_eq!(d.x * v.y - d.y * v.x, 0.0, epsilon = 1e-14);
        assert!(d.dot(&v) > 0.0);
    }

    #[test]
    fn single_cell_slice() {
        let spec = SliceSpec {
            base: st(0.0, 0.6, 0.0, 0.0),
            u_axis: Coord::Cx,
            v_axis: Coord::DCx,
            u_range: (-0.01, 0.01),
            v_range: (0.49, 0.51),
            resolution: (1, 1),
        };
        let grid = slice_scan(&spec, &cs()).unwrap();
        assert_eq!(grid.cells, vec![RegionClass::Inner]);
    }

    #[test]
    fn slice_validation() {
        let mut spec = SliceSpec::height_slice(4);
        spec.v_axis = Coord::Cz;
        assert!(slice_scan(&spec, &cs()).is_err());
        let mut spec = SliceSpec::height_slice(4);
        spec.resolution = (0, 4);
        assert!(slice_scan(&spec, &cs()).is_err());
        let mut spec = SliceSpec::height_slice(4);
        spec.u_range = (1.0, 0.3);
        assert!(slice_scan(&spec, &cs()).is_err());
    }

    #[test]
    fn slice_cells_below_ground_are_outside() {
        let mut spec = SliceSpec::height_slice(20);
        spec.u_range = (-0.5, 0.5);
        let grid = slice_scan(&spec, &cs()).unwrap();
        for (u, _, c) in grid.iter() {
            if u <= 0.0 {
                assert_eq!(c, RegionClass::Outside);
            }
        }
    }

    fn runs(column: impl Iterator<Item = RegionClass>) -> Vec<RegionClass> {
        let mut runs: Vec<RegionClass> = Vec::new();
        for c in column {
            if runs.last() != Some(&c) {
                runs.push(c);
            }
        }
        runs
    }

    /// Inner cells form one band per column; at c_x = 0 the band sits inside
    /// an outer-only band on both sides.
    #[test]
    fn horizontal_slice_topology() {
        let c = cs();
        let spec = SliceSpec::horizontal_slice(0.6, c.g / 0.6, c.g, 121);
        let grid = slice_scan(&spec, &c).unwrap();
        for i in 0..grid.u.len() {
            let r = runs((0..grid.v.len()).map(|j| grid.get(i, j)));
            assert!(r.iter().filter(|&&c| c == RegionClass::Inner).count() <= 1, "{r:?}");
        }
        let mid = grid.u.len() / 2;
        assert!(grid.u[mid].abs() < 1e-12);
        let r = runs((0..grid.v.len()).map(|j| grid.get(mid, j)));
        use RegionClass::*;
        assert_eq!(r, vec![Outside, OuterOnly, Inner, OuterOnly, Outside]);
    }

    /// Class changes in the (c_z, ċ_z) slice happen where ξ_λ crosses a band edge.
    #[test]
    fn height_slice_boundaries_follow_stiffness_band() {
        let c = cs();
        let grid = slice_scan(&SliceSpec::height_slice(80), &c).unwrap();
        let xi_l = |u: f64, v: f64| crate::indicators::omega(u, v, c.g).unwrap().powi(2);
        let crosses = |a: f64, b: f64| {
            [c.lambda_min, c.lambda_max].iter().any(|&l| (a - l) * (b - l) <= 0.0)
        };
        let mut boundaries = 0;
        for j in 0..grid.v.len() {
            for i in 0..grid.u.len() - 1 {
                if grid.get(i, j) != grid.get(i + 1, j) {
                    boundaries += 1;
                    let a = xi_l(grid.u[i], grid.v[j]);
                    let b = xi_l(grid.u[i + 1], grid.v[j]);
                    assert!(crosses(a, b), "u={} v={}", grid.u[i], grid.v[j]);
                }
            }
        }
        assert!(boundaries > 0);
        assert_eq!(grid.count(RegionClass::OuterOnly), 0);
    }

    #[test]
    fn slice_csv_layout() {
        let grid = slice_scan(&SliceSpec::height_slice(3), &cs()).unwrap();
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "u,v,class");
        assert_eq!(lines.len(), 10);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 3));
    }

    #[test]
    fn coord_parse() {
        assert_eq!("dcz".parse::<Coord>().unwrap(), Coord::DCz);
        assert_eq!("c_x".parse::<Coord>().unwrap(), Coord::Cx);
        assert!("q".parse::<Coord>().is_err());
    }
}
