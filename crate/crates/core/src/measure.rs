//! Counting measures seen through radial test functions. Small differences
//! between convolution fields are linked back to equal point counts on the
//! connected components of a union of small balls.

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointset::{check_dim, distance, unit_ball_volume, Point, PointConfiguration, Window, WindowKind};
use crate::scanner::{closed_grid, covering_radius, PeriodScanSpec};
use crate::spatial::GridIndex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `1 - |x|/r` on the ball.
    Tent,
    /// `exp(1 - 1/(1 - (|x|/r)^2))` on the ball.
    Bump,
}

/// Radial test function with `φ(0) = 1`, support in the open ball of radius `radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub profile: Profile,
    pub radius: f64,
}

const QUADRATURE_INTERVALS: usize = 4000;

impl TestFunction {
    pub fn new(profile: Profile, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!("support radius must be positive, got {radius}")));
        }
        Ok(Self { profile, radius })
    }

    pub fn tent(radius: f64) -> Result<Self> {
        Self::new(Profile::Tent, radius)
    }

    pub fn bump(radius: f64) -> Result<Self> {
        Self::new(Profile::Bump, radius)
    }

    /// Value at distance `s` from the origin.
    pub fn radial(&self, s: f64) -> f64 {
        let u = s / self.radius;
        if u >= 1.0 {
            return 0.0;
        }
        match self.profile {
            Profile::Tent => 1.0 - u,
            Profile::Bump => (1.0 - 1.0 / (1.0 - u * u)).exp(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.radial(crate::pointset::norm(x))
    }

    /// Lipschitz constant: exact for the tent, a numerically maximized slope
    /// (padded by 1e-6 relative) for the bump.
    pub fn lipschitz(&self) -> f64 {
        match self.profile {
            Profile::Tent => 1.0 / self.radius,
            Profile::Bump => {
                let slope = |u: f64| {
                    let q = 1.0 - u * u;
                    (1.0 - 1.0 / q).exp() * 2.0 * u / (q * q)
                };
                let n = 20_000;
                let (mut best_u, mut best) = (0.0, 0.0);
                for i in 1..n {
                    let u = i as f64 / n as f64;
                    let s = slope(u);
                    if s > best {
                        best = s;
                        best_u = u;
                    }
                }
                let (mut lo, mut hi) = (best_u - 1.0 / n as f64, (best_u + 1.0 / n as f64).min(1.0 - 1e-12));
                for _ in 0..100 {
                    let m1 = lo + (hi - lo) / 3.0;
                    let m2 = hi - (hi - lo) / 3.0;
                    if slope(m1) < slope(m2) {
                        lo = m1;
                    } else {
                        hi = m2;
                    }
                }
                best = best.max(slope(0.5 * (lo + hi)));
                best * (1.0 + 1e-6) / self.radius
            }
        }
    }

    /// `ν = ∫ φ dm` in dimension `k`.
    pub fn mass(&self, k: usize) -> f64 {
        let r = self.radius;
        match self.profile {
            Profile::Tent => unit_ball_volume(k) * r.powi(k as i32) / (k as f64 + 1.0),
            Profile::Bump => radial_integral(|s| self.radial(s), r, k),
        }
    }
}

/// `k V_k ∫_0^r s^{k-1} f(s) ds` by composite Simpson.
pub(crate) fn radial_integral(f: impl Fn(f64) -> f64, r: f64, k: usize) -> f64 {
    let n = QUADRATURE_INTERVALS;
    let h = r / n as f64;
    let g = |s: f64| s.powi(k as i32 - 1) * f(s);
    let mut acc = g(0.0) + g(r);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
    }
    k as f64 * unit_ball_volume(k) * acc * h / 3.0
}

/// Finite stand-in for `sup_{x ∈ R^k}`: the nodes of a cube at a fixed step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    #[serde(rename = "box")]
    pub region: Window,
    pub step: f64,
}

impl SampleGrid {
    pub fn new(region: Window, step: f64) -> Result<Self> {
        if region.kind != WindowKind::Cube {
            return Err(Error::InvalidParameter("sample grids live on cubes".into()));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!("grid step must be positive, got {step}")));
        }
        Ok(Self { region, step })
    }

    pub fn nodes(&self) -> Vec<Point> {
        closed_grid(&self.region, self.step, 0.0)
    }

    pub fn translate(&self, t: &Point) -> Result<Self> {
        Ok(Self {
            region: self.region.translate(t)?,
            step: self.step,
        })
    }

    fn check_admissible(&self, window: &Window, phi: &TestFunction) -> Result<()> {
        check_dim(window.dim(), self.region.dim())?;
        let ok = window
            .shrink(phi.radius)
            .is_some_and(|inner| inner.contains_window(&self.region));
        if ok {
            Ok(())
        } else {
            Err(Error::WindowTooSmall(format!(
                "sample box must lie in the window shrunk by the support radius {}",
                phi.radius
            )))
        }
    }
}

/// Largest grid step keeping the discretized sup within `tolerance / 2` of the
/// true sup, for fields with at most `n` contributing atoms per point.
pub fn certified_step(tolerance: f64, phi: &TestFunction, n: usize) -> f64 {
    tolerance / (2.0 * phi.lipschitz() * n.max(1) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvolutionField {
    pub grid: SampleGrid,
    pub phi: TestFunction,
    pub nodes: Vec<Point>,
    pub values: Vec<f64>,
    pub source: String,
}

impl ConvolutionField {
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

fn field_values(d: &PointConfiguration, phi: &TestFunction, nodes: &[Point]) -> Vec<f64> {
    let index = GridIndex::new(d.points(), phi.radius);
    nodes
        .par_iter()
        .map(|x| {
            let mut acc = 0.0;
            index.for_each_within(x.coords(), phi.radius, |_, s| acc += phi.radial(s));
            acc
        })
        .collect()
}

/// `φ * μ_D` at every node of `grid`.
pub fn convolve(d: &PointConfiguration, phi: &TestFunction, grid: &SampleGrid) -> Result<ConvolutionField> {
    grid.check_admissible(d.window(), phi)?;
    let nodes = grid.nodes();
    let values = field_values(d, phi, &nodes);
    Ok(ConvolutionField {
        grid: grid.clone(),
        phi: *phi,
        nodes,
        values,
        source: format!("{} points in {}-dimensional window", d.len(), d.dim()),
    })
}

/// Sup-norm distance between two fields sampled on the same grid.
pub fn field_distance(a: &ConvolutionField, b: &ConvolutionField) -> Result<f64> {
    if a.grid != b.grid || a.phi != b.phi {
        return Err(Error::GridMismatch);
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

pub fn weak_uniform_distance(
    d1: &PointConfiguration,
    d2: &PointConfiguration,
    phi: &TestFunction,
    grid: &SampleGrid,
) -> Result<f64> {
    field_distance(&convolve(d1, phi, grid)?, &convolve(d2, phi, grid)?)
}

/// `max_z |φ*μ(z) - φ*μ(z - τ)|` over the grid.
pub fn measure_shift_deviation(
    d: &PointConfiguration,
    tau: &Point,
    phi: &TestFunction,
    grid: &SampleGrid,
) -> Result<f64> {
    check_dim(d.dim(), tau.dim())?;
    grid.check_admissible(d.window(), phi)?;
    grid.translate(&tau.neg())?.check_admissible(d.window(), phi)?;
    let nodes = grid.nodes();
    let shifted: Vec<Point> = nodes.iter().map(|z| z.sub(tau)).collect();
    let here = field_values(d, phi, &nodes);
    let there = field_values(d, phi, &shifted);
    Ok(here
        .iter()
        .zip(&there)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

pub fn measure_period_check(
    d: &PointConfiguration,
    tau: &Point,
    eps: f64,
    phi: &TestFunction,
    grid: &SampleGrid,
) -> Result<bool> {
    Ok(measure_shift_deviation(d, tau, phi, grid)? <= eps)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurePeriodReport {
    pub spec: PeriodScanSpec,
    pub phi: TestFunction,
    pub grid: SampleGrid,
    pub accepted: Vec<Point>,
    pub covering_radius: f64,
    pub nodes_scanned: usize,
}

/// Scans the shift grid of `spec` for τ passing `measure_period_check` at `spec.eps`.
pub fn scan_measure_periods(
    d: &PointConfiguration,
    spec: &PeriodScanSpec,
    phi: &TestFunction,
    grid: &SampleGrid,
) -> Result<MeasurePeriodReport> {
    spec.validate(d.dim())?;
    let reach = grid.region.dilate(spec.search_box.half_width() * (d.dim() as f64).sqrt());
    let far = SampleGrid { region: reach, step: grid.step };
    far.check_admissible(d.window(), phi)?;
    let taus = spec.nodes();
    let deviations: Vec<f64> = taus
        .par_iter()
        .map(|t| measure_shift_deviation(d, t, phi, grid))
        .collect::<Result<_>>()?;
    let accepted: Vec<Point> = taus
        .iter()
        .zip(&deviations)
        .filter(|(_, &dev)| dev <= spec.eps)
        .map(|(t, _)| t.clone())
        .collect();
    Ok(MeasurePeriodReport {
        spec: spec.clone(),
        phi: *phi,
        grid: grid.clone(),
        covering_radius: covering_radius(&spec.search_box, spec.grid_step, &accepted),
        accepted,
        nodes_scanned: taus.len(),
    })
}

/// `ε / (2M + 2)`, strictly below `ε / (2M + 1)`.
pub fn eta_for(eps: f64, m: usize) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("count bound must be at least 1".into()));
    }
    Ok(eps / (2.0 * m as f64 + 2.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Component {
    pub indices: Vec<usize>,
    pub diameter: f64,
}

/// Connected components of `∪ B(a_n, η)`, ordered by smallest member index.
pub fn components(d: &PointConfiguration, eta: f64) -> Vec<Component> {
    let pts = d.points();
    let mut uf = UnionFind::<usize>::new(pts.len());
    let index = GridIndex::new(pts, 2.0 * eta);
    for (i, p) in pts.iter().enumerate() {
        index.for_each_within(p.coords(), 2.0 * eta, |j, s| {
            if j > i && s < 2.0 * eta {
                uf.union(i, j);
            }
        });
    }
    let labels = uf.into_labeling();
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, root) in labels.iter().enumerate() {
        groups.entry(*root).or_default().push(i);
    }
    let mut out: Vec<Component> = groups
        .into_values()
        .map(|indices| {
            let mut diameter: f64 = 0.0;
            for (a, &i) in indices.iter().enumerate() {
                for &j in &indices[a + 1..] {
                    diameter = diameter.max(distance(pts[i].coords(), pts[j].coords()));
                }
            }
            Component { indices, diameter }
        })
        .collect();
    out.sort_by_key(|c| c.indices[0]);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentMismatch {
    pub component: usize,
    pub expected: usize,
    pub found: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentCountReport {
    pub eta: f64,
    pub components_checked: usize,
    pub mismatches: Vec<ComponentMismatch>,
    /// Points of the second set in the checked region lying in no component.
    pub orphans: Vec<usize>,
}

impl ComponentCountReport {
    pub fn matched(&self) -> bool {
        self.mismatches.is_empty() && self.orphans.is_empty()
    }
}

/// Compares, component by component of `∪ B(a, η)` over `d1`, how many points
/// of `d1` and of `d2` it holds. Only components at distance `2η` from the
/// window boundary are checked, since those are complete inside the window.
pub fn component_count_report(d1: &PointConfiguration, d2: &PointConfiguration, eta: f64) -> Result<ComponentCountReport> {
    check_dim(d1.dim(), d2.dim())?;
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    let comps = components(d1, eta);
    let mut owner = vec![0usize; d1.len()];
    for (c, comp) in comps.iter().enumerate() {
        for &i in &comp.indices {
            owner[i] = c;
        }
    }
    let interior = d1.window().shrink(2.0 * eta);
    let inside = |p: &Point| interior.as_ref().is_some_and(|w| w.contains(p.coords()));
    let checked: Vec<bool> = comps
        .iter()
        .map(|c| c.indices.iter().all(|&i| inside(&d1.points()[i])))
        .collect();

    let index = GridIndex::new(d1.points(), eta);
    let mut found = vec![0usize; comps.len()];
    let mut orphans = Vec::new();
    for (j, q) in d2.points().iter().enumerate() {
        let mut best: Option<(f64, usize)> = None;
        index.for_each_within(q.coords(), eta, |i, s| {
            if s < eta && best.is_none_or(|(b, _)| s < b) {
                best = Some((s, i));
            }
        });
        match best {
            Some((_, i)) => found[owner[i]] += 1,
            None if inside(q) => orphans.push(j),
            None => {}
        }
    }
    let mismatches = comps
        .iter()
        .enumerate()
        .filter(|&(c, _)| checked[c])
        .filter(|&(c, comp)| found[c] != comp.indices.len())
        .map(|(c, comp)| ComponentMismatch {
            component: c,
            expected: comp.indices.len(),
            found: found[c],
        })
        .collect();
    Ok(ComponentCountReport {
        eta,
        components_checked: checked.iter().filter(|&&b| b).count(),
        mismatches,
        orphans,
    })
}

pub fn component_count_match(d1: &PointConfiguration, d2: &PointConfiguration, eta: f64) -> Result<bool> {
    Ok(component_count_report(d1, d2, eta)?.matched())
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

    fn grid(lo: f64, hi: f64, step: f64) -> SampleGrid {
        SampleGrid::new(Window::interval(lo, hi).unwrap(), step).unwrap()
    }

    fn value_at(f: &ConvolutionField, x: f64) -> f64 {
        let i = f.nodes.iter().position(|p| (p.coords()[0] - x).abs() < 1e-12).unwrap();
        f.values[i]
    }

    #[test]
    fn tent_field_values() {
        let z = integers(-20.0, 20.0);
        let phi = TestFunction::tent(0.5).unwrap();
        let f = convolve(&z, &phi, &grid(-10.0, 10.0, 0.05)).unwrap();
        assert_eq!(value_at(&f, 0.0), 1.0);
        assert!((value_at(&f, 0.25) - 0.5).abs() < 1e-12);
        // 1-periodic: nodes 20 steps apart agree
        for i in 0..f.values.len() - 20 {
            assert!((f.values[i] - f.values[i + 20]).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_must_clear_the_boundary() {
        let z = integers(-5.0, 5.0);
        let phi = TestFunction::tent(0.5).unwrap();
        assert!(convolve(&z, &phi, &grid(-4.6, 4.6, 0.1)).unwrap_err().is_window_too_small());
        assert!(convolve(&z, &phi, &grid(-4.5, 4.5, 0.1)).is_ok());
    }

    #[test]
    fn masses_agree_with_quadrature() {
        for k in 1..=3 {
            for r in [0.2, 1.0, 2.5] {
                let tent = TestFunction::tent(r).unwrap();
                let numeric = radial_integral(|s| tent.radial(s), r, k);
                assert!((tent.mass(k) - numeric).abs() < 1e-9 * (1.0 + numeric));
            }
        }
        assert!((TestFunction::tent(0.3).unwrap().mass(1) - 0.3).abs() < 1e-15);
        let bump = TestFunction::bump(1.0).unwrap();
        assert!(bump.mass(1) > 0.0 && bump.mass(1) < 2.0);
    }

    #[test]
    fn bump_lipschitz_bounds_sampled_slopes() {
        let bump = TestFunction::bump(0.7).unwrap();
        let lip = bump.lipschitz();
        let h = 1e-5;
        for i in 0..7000 {
            let s = i as f64 * 1e-4;
            let slope = (bump.radial(s + h) - bump.radial(s)).abs() / h;
            assert!(slope <= lip * (1.0 + 1e-3));
        }
        assert_eq!(bump.radial(0.0), 1.0);
        assert_eq!(bump.radial(0.7), 0.0);
    }

    #[test]
    fn weak_uniform_examples() {
        let z = integers(-20.0, 20.0);
        let phi = TestFunction::tent(0.5).unwrap();
        let g = grid(-10.0, 10.0, 0.01);
        assert_eq!(weak_uniform_distance(&z, &z, &phi, &g).unwrap(), 0.0);
        let mut prev = f64::INFINITY;
        for delta in [0.1, 0.05, 0.01] {
            let moved = z.translate(&Point::from(delta)).unwrap().restrict(z.window()).unwrap();
            let w = weak_uniform_distance(&z, &moved, &phi, &g).unwrap();
            assert!(w <= 2.0 * delta / 0.5 + 1e-12);
            assert!(w < prev);
            prev = w;
        }
        let extra = z.union(&PointConfiguration::new(z.window().clone(), vec![Point::from(0.5)]).unwrap()).unwrap();
        let phi = TestFunction::tent(0.2).unwrap();
        assert!((weak_uniform_distance(&z, &extra, &phi, &g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let z = integers(-20.0, 20.0);
        let phi = TestFunction::tent(0.5).unwrap();
        let a = convolve(&z, &phi, &grid(-10.0, 10.0, 0.1)).unwrap();
        let b = convolve(&z, &phi, &grid(-10.0, 10.0, 0.2)).unwrap();
        assert!(matches!(field_distance(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn measure_period_examples() {
        let z = integers(-30.0, 30.0);
        let phi = TestFunction::tent(0.5).unwrap();
        let g = grid(-10.0, 10.0, 0.05);
        assert!(measure_period_check(&z, &Point::from(3.0), 1e-12, &phi, &g).unwrap());
        assert!(!measure_period_check(&z, &Point::from(0.5), 0.3, &phi, &g).unwrap());
        assert!(measure_period_check(&z, &Point::from(0.0), 0.0, &phi, &g).unwrap());
        let err = measure_period_check(&z, &Point::from(25.0), 0.1, &phi, &g).unwrap_err();
        assert!(err.is_window_too_small());
    }

    #[test]
    fn measure_scan_on_integers() {
        let z = integers(-40.0, 40.0);
        let phi = TestFunction::tent(0.5).unwrap();
        let g = grid(-10.0, 10.0, 0.05);
        let spec = PeriodScanSpec::centered(1, 0.2, 5.0, 0.05).unwrap();
        let r = scan_measure_periods(&z, &spec, &phi, &g).unwrap();
        for t in &r.accepted {
            let x = t.coords()[0];
            assert!((x - x.round()).abs() <= 0.1 + 1e-9);
        }
        assert!(r.accepted.iter().any(|t| (t.coords()[0] - 4.0).abs() < 1e-9));
    }

    #[test]
    fn eta_values() {
        assert!((eta_for(0.5, 4).unwrap() - 0.05).abs() < 1e-15);
        assert!((eta_for(0.9, 1).unwrap() - 0.225).abs() < 1e-15);
        assert_eq!(eta_for(0.5, 1000).unwrap(), 0.5 / 2002.0);
        assert!(eta_for(1.0, 3).is_err());
        assert!(eta_for(0.0, 3).is_err());
        assert!(eta_for(0.5, 0).is_err());
    }

    #[test]
    fn component_examples() {
        let z = integers(-10.0, 11.0);
        let c = components(&z, 0.3);
        assert_eq!(c.len(), 21);
        assert!(c.iter().all(|c| c.indices.len() == 1 && c.diameter == 0.0));

        let w = Window::interval(-1.0, 11.0).unwrap();
        let d = PointConfiguration::new(w, vec![0.0.into(), 0.5.into(), 10.0.into()]).unwrap();
        let c = components(&d, 0.3);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].indices, vec![0, 1]);
        assert_eq!(c[0].diameter, 0.5);
        assert_eq!(c[1].diameter, 0.0);
    }

    #[test]
    fn component_count_examples() {
        let z = integers(-20.0, 20.0);
        assert!(component_count_match(&z, &z, 0.1).unwrap());
        let moved = z.translate(&Point::from(0.01)).unwrap().restrict(z.window()).unwrap();
        assert!(component_count_match(&z, &moved, 0.3).unwrap());
        let extra = z.union(&PointConfiguration::new(z.window().clone(), vec![Point::from(0.5)]).unwrap()).unwrap();
        let report = component_count_report(&z, &extra, 0.1).unwrap();
        assert!(!report.matched());
        assert_eq!(report.orphans.len(), 1);
        let stacked = z.union(&PointConfiguration::new(z.window().clone(), vec![Point::from(3.02)]).unwrap()).unwrap();
        let report = component_count_report(&z, &stacked, 0.1).unwrap();
        assert_eq!(report.mismatches.len(), 1);
        assert_eq!(report.mismatches[0].found, 2);
    }
}
