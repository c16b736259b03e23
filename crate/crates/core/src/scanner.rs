//! ε-almost periods of a windowed configuration. A grid of candidate shifts
//! is tested by collared matching, and the accepted set is summarized by its
//! covering radius over the search box.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{bottleneck_distance, matching_feasible_below, CollarSpec, DistanceResult};
use crate::pointset::{check_dim, distance, Point, PointConfiguration, Window, WindowKind};

/// How wide the optional boundary ring is when comparing `D` with `D + τ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum CollarPolicy {
    /// `|τ| + eps`: the region a shift by τ plus matching slack can empty.
    #[default]
    Automatic,
    Fixed { width: f64 },
}

impl CollarPolicy {
    pub fn collar_for(&self, tau: &Point, eps: f64) -> CollarSpec {
        match *self {
            CollarPolicy::Automatic => CollarSpec { width: tau.norm() + eps },
            CollarPolicy::Fixed { width } => CollarSpec { width },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodScanSpec {
    pub eps: f64,
    /// Cube of candidate shifts; scanned on a closed grid symmetric about its center.
    pub search_box: Window,
    pub grid_step: f64,
    #[serde(default)]
    pub collar_policy: CollarPolicy,
}

impl PeriodScanSpec {
    /// Search box `[-half_width, half_width]^dim` with the automatic collar.
    pub fn centered(dim: usize, eps: f64, half_width: f64, grid_step: f64) -> Result<Self> {
        let spec = PeriodScanSpec {
            eps,
            search_box: Window::cube(Point::origin(dim), 2.0 * half_width)?,
            grid_step,
            collar_policy: CollarPolicy::Automatic,
        };
        spec.validate(dim)?;
        Ok(spec)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.grid_step.is_finite() && self.grid_step > 0.0) {
            return Err(Error::InvalidParameter("grid step must be positive".into()));
        }
        if self.grid_step > 0.5 * self.eps * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "grid step {} exceeds eps/2 = {}",
                self.grid_step,
                0.5 * self.eps
            )));
        }
        if self.search_box.kind != WindowKind::Cube {
            return Err(Error::InvalidParameter("search box must be a cube".into()));
        }
        if let CollarPolicy::Fixed { width } = self.collar_policy {
            CollarSpec::new(width)?;
        }
        check_dim(dim, self.search_box.dim())
    }

    /// Grid nodes `center + j·step` with every coordinate inside the closed box,
    /// in lexicographic order.
    pub fn nodes(&self) -> Vec<Point> {
        closed_grid(&self.search_box, self.grid_step, 0.0)
    }
}

/// Nodes `center + j·step` of the closed cube shrunk by `inset`, ordered
/// lexicographically (first coordinate slowest).
pub(crate) fn closed_grid(cube: &Window, step: f64, inset: f64) -> Vec<Point> {
    let k = cube.dim();
    let half = 0.5 * cube.extent - inset;
    if half < 0.0 {
        return Vec::new();
    }
    let m = (half / step + 1e-9).floor() as i64;
    let c = cube.center.coords();
    let mut out = Vec::new();
    let mut j = vec![-m; k];
    loop {
        out.push(Point::new((0..k).map(|i| c[i] + j[i] as f64 * step).collect()));
        let mut axis = k;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            j[axis] += 1;
            if j[axis] <= m {
                break;
            }
            j[axis] = -m;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlmostPeriodReport {
    pub spec: PeriodScanSpec,
    pub accepted: Vec<Point>,
    /// Largest distance from a node of the box (shrunk by one grid step) to
    /// the nearest accepted shift; infinite when nothing was accepted.
    pub covering_radius: f64,
    /// Some acceptance relied on a matching wider than its collar.
    pub boundary_limited: bool,
    pub nodes_scanned: usize,
}

fn check_window(d: &PointConfiguration, collar: CollarSpec) -> Result<()> {
    if d.window().shrink(collar.width).is_none() {
        return Err(Error::WindowTooSmall(format!(
            "a collar of width {} leaves no mandatory region in the window",
            collar.width
        )));
    }
    Ok(())
}

/// `restrict(D + τ, W)` on the window of `D`.
pub fn shifted_on_window(d: &PointConfiguration, tau: &Point) -> Result<PointConfiguration> {
    d.translate(tau)?.restrict(d.window())
}

/// Windowed test of `dist(D, D + τ) < eps` with the automatic collar `|τ| + eps`.
pub fn is_almost_period(d: &PointConfiguration, tau: &Point, eps: f64) -> Result<bool> {
    Ok(almost_period_check(d, tau, eps, CollarPolicy::Automatic)?.0)
}

/// Returns `(accepted, trusted)`; `trusted` means the witness stays within the collar.
fn almost_period_check(
    d: &PointConfiguration,
    tau: &Point,
    eps: f64,
    policy: CollarPolicy,
) -> Result<(bool, bool)> {
    check_dim(d.dim(), tau.dim())?;
    let collar = policy.collar_for(tau, eps);
    check_window(d, collar)?;
    let shifted = shifted_on_window(d, tau)?;
    Ok(match matching_feasible_below(d, &shifted, eps, collar)? {
        Some(w) => (true, w.max_pair_distance(d, &shifted) <= collar.width),
        None => (false, true),
    })
}

/// Windowed bottleneck distance between `D` and `D + τ`.
pub fn shift_distance(d: &PointConfiguration, tau: &Point, collar: CollarSpec) -> Result<DistanceResult> {
    check_window(d, collar)?;
    bottleneck_distance(d, &shifted_on_window(d, tau)?, collar)
}

pub(crate) fn covering_radius(search_box: &Window, step: f64, accepted: &[Point]) -> f64 {
    if accepted.is_empty() {
        return f64::INFINITY;
    }
    closed_grid(search_box, step, step)
        .par_iter()
        .map(|x| {
            accepted
                .iter()
                .map(|t| distance(x.coords(), t.coords()))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max)
}

pub fn scan_periods(d: &PointConfiguration, spec: &PeriodScanSpec) -> Result<AlmostPeriodReport> {
    spec.validate(d.dim())?;
    let nodes = spec.nodes();
    if let Some(widest) = nodes
        .iter()
        .map(|t| spec.collar_policy.collar_for(t, spec.eps))
        .max_by(|a, b| a.width.total_cmp(&b.width))
    {
        check_window(d, widest)?;
    }
    let results: Vec<(bool, bool)> = nodes
        .par_iter()
        .map(|tau| almost_period_check(d, tau, spec.eps, spec.collar_policy))
        .collect::<Result<_>>()?;
    let boundary_limited = results.iter().any(|&(ok, trusted)| ok && !trusted);
    let accepted: Vec<Point> = nodes
        .iter()
        .zip(&results)
        .filter(|(_, r)| r.0)
        .map(|(t, _)| t.clone())
        .collect();
    let covering_radius = covering_radius(&spec.search_box, spec.grid_step, &accepted);
    Ok(AlmostPeriodReport {
        spec: spec.clone(),
        accepted,
        covering_radius,
        boundary_limited,
        nodes_scanned: nodes.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupOp {
    Sum,
    Difference,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupViolation {
    pub first: Point,
    pub second: Point,
    pub op: GroupOp,
    pub combined: Point,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupCheck {
    pub checked: usize,
    pub skipped_outside_box: usize,
    pub violations: Vec<GroupViolation>,
}

/// Sums and differences of accepted ε-almost periods must be 2ε-almost
/// periods. At most `max_checks` combinations are tested, sampled with
/// `seed` when there are more.
pub fn group_property_check(
    report: &AlmostPeriodReport,
    d: &PointConfiguration,
    max_checks: usize,
    seed: u64,
) -> Result<GroupCheck> {
    let acc = &report.accepted;
    let eps2 = 2.0 * report.spec.eps;
    let mut candidates = Vec::new();
    let mut skipped = 0usize;
    let (lo, hi) = report.search_box_bounds();
    let inside = |p: &Point| {
        p.coords()
            .iter()
            .enumerate()
            .all(|(i, &x)| x >= lo[i] - 1e-9 && x <= hi[i] + 1e-9)
    };
    for i in 0..acc.len() {
        for j in i..acc.len() {
            for op in [GroupOp::Sum, GroupOp::Difference] {
                let combined = match op {
                    GroupOp::Sum => acc[i].add(&acc[j]),
                    GroupOp::Difference => acc[i].sub(&acc[j]),
                };
                if inside(&combined) {
                    candidates.push((i, j, op, combined));
                } else {
                    skipped += 1;
                }
            }
        }
    }
    let chosen: Vec<usize> = if candidates.len() > max_checks {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample(&mut rng, candidates.len(), max_checks).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..candidates.len()).collect()
    };
    let policy = report.spec.collar_policy;
    let outcomes: Vec<bool> = chosen
        .par_iter()
        .map(|&c| almost_period_check(d, &candidates[c].3, eps2, policy).map(|r| r.0))
        .collect::<Result<_>>()?;
    let violations = chosen
        .iter()
        .zip(&outcomes)
        .filter(|(_, &ok)| !ok)
        .map(|(&c, _)| {
            let (i, j, op, ref combined) = candidates[c];
            GroupViolation {
                first: acc[i].clone(),
                second: acc[j].clone(),
                op,
                combined: combined.clone(),
            }
        })
        .collect();
    Ok(GroupCheck {
        checked: chosen.len(),
        skipped_outside_box: skipped,
        violations,
    })
}

impl AlmostPeriodReport {
    fn search_box_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        self.spec.search_box.bounds()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SPropertySample {
    pub tau: Point,
    /// Infinite when no matching exists at any threshold.
    pub distance: f64,
    pub collar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SPropertyEstimate {
    /// Largest sampled windowed distance: an empirical lower bound for the
    /// S-property constant.
    pub value: f64,
    pub samples: Vec<SPropertySample>,
}

/// Windowed `dist(D, D + τ)` for every sampled τ. The collar starts at
/// `|τ| + spacing` and widens to `|τ| + 2·value` until the value is trusted.
pub fn s_property_estimate(d: &PointConfiguration, tau_samples: &[Point]) -> Result<SPropertyEstimate> {
    let k = d.dim();
    let spacing = if d.is_empty() {
        1.0
    } else {
        (d.window().volume() / d.len() as f64).powf(1.0 / k as f64)
    };
    let samples: Vec<SPropertySample> = tau_samples
        .par_iter()
        .map(|tau| {
            check_dim(k, tau.dim())?;
            let mut slack = spacing;
            loop {
                let collar = CollarSpec::new(tau.norm() + slack)?;
                let r = shift_distance(d, tau, collar)?;
                match r.value {
                    None => {
                        return Ok(SPropertySample {
                            tau: tau.clone(),
                            distance: f64::INFINITY,
                            collar: collar.width,
                        })
                    }
                    Some(v) if v <= slack => {
                        return Ok(SPropertySample {
                            tau: tau.clone(),
                            distance: v,
                            collar: collar.width,
                        })
                    }
                    Some(v) => slack = 2.0 * v,
                }
            }
        })
        .collect::<Result<_>>()?;
    let value = samples.iter().map(|s| s.distance).fold(0.0, f64::max);
    Ok(SPropertyEstimate { value, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, GeneratorKind, GeneratorSpec, LatticeSpec};

    fn integers(lo: f64, hi: f64) -> PointConfiguration {
        generate(&GeneratorSpec::new(
            GeneratorKind::Lattice { lattice: LatticeSpec::integer(1) },
            Window::interval(lo, hi).unwrap(),
        ))
        .unwrap()
    }

    fn union_sqrt2(lo: f64, hi: f64) -> PointConfiguration {
        generate(&GeneratorSpec::new(
            GeneratorKind::LatticeUnion {
                components: vec![
                    LatticeSpec::integer(1),
                    LatticeSpec::progression(std::f64::consts::SQRT_2, 0.0),
                ],
            },
            Window::interval(lo, hi).unwrap(),
        ))
        .unwrap()
    }

    #[test]
    fn integer_almost_periods() {
        let z = integers(-50.0, 50.0);
        assert!(is_almost_period(&z, &Point::from(5.1), 0.2).unwrap());
        assert!(!is_almost_period(&z, &Point::from(0.5), 0.2).unwrap());
        assert!(is_almost_period(&z, &Point::from(0.0), 0.2).unwrap());
    }

    #[test]
    fn union_with_sqrt2_progression() {
        // 5√2 ≈ 7.0711: the √2 component moves by about 0.0711
        let d = union_sqrt2(-100.0, 100.0);
        assert!(is_almost_period(&d, &Point::from(7.0), 0.1).unwrap());
        assert!(!is_almost_period(&d, &Point::from(7.0), 0.05).unwrap());
    }

    #[test]
    fn window_too_small_is_reported() {
        let z = integers(-5.0, 5.0);
        let err = is_almost_period(&z, &Point::from(4.9), 0.2).unwrap_err();
        assert!(err.is_window_too_small());
    }

    #[test]
    fn grid_is_symmetric_and_lexicographic() {
        let spec = PeriodScanSpec::centered(2, 0.2, 0.2, 0.1).unwrap();
        let nodes = spec.nodes();
        assert_eq!(nodes.len(), 25);
        assert_eq!(nodes[0].coords(), &[-0.2, -0.2]);
        assert_eq!(nodes[1].coords(), &[-0.2, -0.1]);
        assert!(nodes.contains(&Point::new(vec![0.0, 0.0])));
    }

    #[test]
    fn step_must_resolve_eps() {
        assert!(PeriodScanSpec::centered(1, 0.2, 10.0, 0.15).is_err());
    }

    #[test]
    fn scan_of_integers() {
        let z = integers(-50.0, 50.0);
        let spec = PeriodScanSpec::centered(1, 0.2, 10.0, 0.1).unwrap();
        let r = scan_periods(&z, &spec).unwrap();
        for t in spec.nodes() {
            let x = t.coords()[0];
            let frac = (x - x.round()).abs();
            if frac < 0.2 - 1e-9 {
                assert!(r.accepted.contains(&t), "{x} should be accepted");
            }
            if frac > 0.2 + 1e-9 {
                assert!(!r.accepted.contains(&t), "{x} should be rejected");
            }
        }
        // accepted sets are within 0.2 of integers, so no node is farther
        // than 1/2 - 0.2 (plus one step of grid slack) from them
        assert!(r.covering_radius <= 0.5 - 0.2 + 0.1 + 1e-9, "{}", r.covering_radius);
        assert!(r.covering_radius >= 0.5 - 0.2 - 1e-9);
        assert!(!r.boundary_limited);
    }

    #[test]
    fn acceptance_is_monotone_in_eps_and_symmetric() {
        let d = union_sqrt2(-60.0, 60.0);
        let small = scan_periods(&d, &PeriodScanSpec::centered(1, 0.1, 8.0, 0.05).unwrap()).unwrap();
        let large = scan_periods(&d, &PeriodScanSpec::centered(1, 0.2, 8.0, 0.05).unwrap()).unwrap();
        for t in &small.accepted {
            assert!(large.accepted.contains(t));
            assert!(small.accepted.contains(&t.neg()));
        }
    }

    #[test]
    fn group_property_on_integers() {
        let z = integers(-50.0, 50.0);
        let r = scan_periods(&z, &PeriodScanSpec::centered(1, 0.2, 10.0, 0.1).unwrap()).unwrap();
        let g = group_property_check(&r, &z, 2000, 1).unwrap();
        assert!(g.checked > 0);
        assert!(g.violations.is_empty(), "{:?}", g.violations.first());
    }

    #[test]
    fn group_property_trivial_report() {
        let z = integers(-50.0, 50.0);
        let mut r = scan_periods(&z, &PeriodScanSpec::centered(1, 0.2, 1.0, 0.1).unwrap()).unwrap();
        r.accepted = vec![Point::from(0.0)];
        let g = group_property_check(&r, &z, 100, 1).unwrap();
        assert!(g.violations.is_empty());
    }

    #[test]
    fn s_property_examples() {
        let z = integers(-50.0, 50.0);
        let taus: Vec<Point> = [0.5, 0.25, 0.7].iter().map(|&x| Point::from(x)).collect();
        let e = s_property_estimate(&z, &taus).unwrap();
        assert!((e.value - 0.5).abs() < 1e-12);
        assert_eq!(s_property_estimate(&z, &[Point::from(0.0)]).unwrap().value, 0.0);

        let z2 = generate(&GeneratorSpec::new(
            GeneratorKind::Lattice { lattice: LatticeSpec::integer(2) },
            Window::symmetric_cube(2, -10.0, 10.0).unwrap(),
        ))
        .unwrap();
        let e = s_property_estimate(&z2, &[Point::new(vec![0.5, 0.5])]).unwrap();
        assert!((e.value - 0.5f64.sqrt()).abs() < 1e-12);
    }
}
