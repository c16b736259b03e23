//! Executable suites tying the structural results on almost periodic sets to
//! finite checks. A report records its inputs, every check with the
//! operations it called and its tolerance, and never asserts more than "all
//! finite checks passed on these windows".

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::density::local_count_max;
use crate::error::{Error, Result};
use crate::generators::{converging_family, generate, GeneratorKind, GeneratorSpec, LatticeSpec, PerturbationTerm};
use crate::measure::{
    component_count_report, components, convolve, eta_for, field_distance, measure_shift_deviation, SampleGrid,
    TestFunction,
};
use crate::metric::{bottleneck_distance, CollarSpec};
use crate::pointset::{Point, PointConfiguration, Window};
use crate::scanner::{closed_grid, is_almost_period, scan_periods, shift_distance, CollarPolicy, PeriodScanSpec};
use crate::spatial::GridIndex;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub operations: Vec<String>,
    pub tolerance: f64,
    pub passed: bool,
    /// Signed slack: positive when the check holds with room to spare.
    pub margin: f64,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, ops: &[&str], tolerance: f64, passed: bool, margin: f64, detail: String) -> Self {
        Check {
            name: name.into(),
            operations: ops.iter().map(|s| s.to_string()).collect(),
            tolerance,
            passed,
            margin,
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremReport {
    pub id: String,
    /// Which statements the checks exercise.
    pub covers: String,
    pub inputs: Value,
    pub precondition_met: bool,
    pub checks: Vec<Check>,
    pub all_checks_passed: bool,
}

impl TheoremReport {
    fn new(id: &str, covers: &str, inputs: Value) -> Self {
        TheoremReport {
            id: id.into(),
            covers: covers.into(),
            inputs,
            precondition_met: true,
            checks: Vec::new(),
            all_checks_passed: false,
        }
    }

    fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    fn finish(mut self) -> Self {
        self.all_checks_passed = self.precondition_met && self.checks.iter().all(|c| c.passed);
        self
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Members of a converging family; the last one is the limit.
#[derive(Clone, Debug)]
pub struct Family {
    pub label: String,
    pub spec: GeneratorSpec,
    pub amplitudes: Vec<f64>,
    pub members: Vec<PointConfiguration>,
}

impl Family {
    pub fn build(label: impl Into<String>, spec: GeneratorSpec, amplitudes: Vec<f64>) -> Result<Self> {
        let members = converging_family(&spec, &amplitudes)?;
        Ok(Family {
            label: label.into(),
            spec,
            amplitudes,
            members,
        })
    }

    pub fn limit(&self) -> &PointConfiguration {
        self.members.last().expect("families are nonempty")
    }

    fn inputs(&self) -> Value {
        json!({
            "family": self.label,
            "spec": self.spec,
            "amplitudes": self.amplitudes,
            "points_per_member": self.limit().len(),
        })
    }
}

fn summary(d: &PointConfiguration) -> Value {
    json!({"points": d.len(), "window": d.window()})
}

/// Node of a small cube around the window center farthest from every point;
/// a deliberately misplaced extra point for fault injection.
fn gap_point(d: &PointConfiguration) -> Point {
    let probe = Window::cube(d.window().center.clone(), 4.0).expect("positive edge");
    let index = GridIndex::new(d.points(), 1.0);
    let mut best = (f64::NEG_INFINITY, d.window().center.clone());
    for x in closed_grid(&probe, 0.05, 0.0) {
        let mut near = 2.0f64;
        index.for_each_within(x.coords(), 2.0, |_, s| near = near.min(s));
        if near > best.0 {
            best = (near, x);
        }
    }
    best.1
}

fn with_extra_point(d: &PointConfiguration, p: Point) -> Result<PointConfiguration> {
    d.union(&PointConfiguration::new(d.window().clone(), vec![p])?)
}

fn fmax(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// ε/3 transfer: periods of a close member are periods of the limit.
pub fn verify_limit_theorem(family: &Family, eps_ladder: &[f64], box_half_width: f64) -> Result<TheoremReport> {
    let mut inputs = family.inputs();
    inputs["eps_ladder"] = json!(eps_ladder);
    inputs["box_half_width"] = json!(box_half_width);
    let mut report = TheoremReport::new("t1", "limits of almost periodic multiple sets", inputs);
    let limit = family.limit();
    let k = limit.dim();
    let gaps: Vec<f64> = family
        .members
        .iter()
        .map(|m| Ok(bottleneck_distance(m, limit, CollarSpec::none())?.value.unwrap_or(f64::INFINITY)))
        .collect::<Result<_>>()?;
    let faulty = with_extra_point(limit, gap_point(limit))?;
    // the limit itself only counts for a singleton family
    let candidates = gaps.len().saturating_sub(1).max(1);

    for &eps in eps_ladder {
        let third = eps / 3.0;
        let Some(p0) = gaps[..candidates].iter().position(|&g| g < third) else {
            report.precondition_met = false;
            report.push(Check::new(
                format!("eps={eps}: member within eps/3 of the limit"),
                &["bottleneck_distance"],
                third,
                false,
                third - fmax(gaps.iter().copied().filter(|g| g.is_finite())),
                format!("member distances {gaps:?}"),
            ));
            continue;
        };
        report.push(Check::new(
            format!("eps={eps}: member within eps/3 of the limit"),
            &["bottleneck_distance"],
            third,
            true,
            third - gaps[p0],
            format!("member {p0} at distance {}", gaps[p0]),
        ));

        let spec = PeriodScanSpec::centered(k, third, box_half_width, third / 2.0)?;
        let scan = scan_periods(&family.members[p0], &spec)?;
        let mut worst = 0.0f64;
        let mut failures = Vec::new();
        for tau in &scan.accepted {
            if !is_almost_period(limit, tau, eps)? {
                failures.push(tau.clone());
            }
            let d = shift_distance(limit, tau, CollarPolicy::Automatic.collar_for(tau, eps))?;
            worst = worst.max(d.value.unwrap_or(f64::INFINITY));
        }
        let nontrivial = scan.accepted.iter().filter(|t| t.norm() >= eps).count();
        report.push(Check::new(
            format!("eps={eps}: member periods found beyond the trivial ball"),
            &["scan_periods"],
            third,
            nontrivial > 0,
            nontrivial as f64,
            format!("{} accepted, {nontrivial} with |tau| >= eps", scan.accepted.len()),
        ));
        report.push(Check::new(
            format!("eps={eps}: transferred periods are eps-almost periods of the limit"),
            &["scan_periods", "is_almost_period", "shift_distance"],
            eps,
            failures.is_empty(),
            eps - worst,
            format!("{} checked, {} rejected", scan.accepted.len(), failures.len()),
        ));

        let far: Vec<&Point> = scan.accepted.iter().filter(|t| t.norm() >= 1.0).collect();
        let mut caught = 0;
        for tau in &far {
            if !is_almost_period(&faulty, tau, eps)? {
                caught += 1;
            }
        }
        report.push(Check::new(
            format!("eps={eps}: extra point in the limit breaks the transfer"),
            &["is_almost_period"],
            eps,
            !far.is_empty() && caught == far.len(),
            caught as f64,
            format!("{caught} of {} shifts with |tau| >= 1 rejected", far.len()),
        ));
    }
    Ok(report.finish())
}

/// Maximum clique by Bron–Kerbosch with pivoting; ties go to the first found.
fn max_clique(adj: &[Vec<bool>]) -> Vec<usize> {
    fn go(adj: &[Vec<bool>], r: &mut Vec<usize>, p: Vec<usize>, x: Vec<usize>, best: &mut Vec<usize>) {
        if p.is_empty() && x.is_empty() {
            if r.len() > best.len() {
                *best = r.clone();
            }
            return;
        }
        if r.len() + p.len() <= best.len() {
            return;
        }
        let pivot = *p.iter().chain(&x).max_by_key(|&&u| p.iter().filter(|&&v| adj[u][v]).count()).unwrap();
        let candidates: Vec<usize> = p.iter().copied().filter(|&v| !adj[pivot][v]).collect();
        let (mut p, mut x) = (p, x);
        for v in candidates {
            r.push(v);
            let np = p.iter().copied().filter(|&u| adj[v][u]).collect();
            let nx = x.iter().copied().filter(|&u| adj[v][u]).collect();
            go(adj, r, np, nx, best);
            r.pop();
            p.retain(|&u| u != v);
            x.push(v);
        }
    }
    let mut best = Vec::new();
    go(adj, &mut Vec::new(), (0..adj.len()).collect(), Vec::new(), &mut best);
    best.sort_unstable();
    best
}

fn bochner_edges(
    d: &PointConfiguration,
    shifts: &[Point],
    accepted: &[Point],
    eps: f64,
) -> Result<Vec<Vec<bool>>> {
    let n = shifts.len();
    let mut adj = vec![vec![false; n]; n];
    for l in 0..n {
        for m in l + 1..n {
            let diff = shifts[l].sub(&shifts[m]);
            let near = accepted.iter().any(|t| diff.distance(t) < eps);
            let ok = near && is_almost_period(d, &shifts[m].sub(&shifts[l]), 2.0 * eps)?;
            adj[l][m] = ok;
            adj[m][l] = ok;
        }
    }
    Ok(adj)
}

/// Finds the largest sub-list of `shifts` whose pairwise differences sit
/// within `eps` of a scanner-accepted period and whose translates stay
/// `2·eps`-close. Passes when that sub-list has at least `min_size` members.
pub fn verify_bochner_smoke(d: &PointConfiguration, shifts: &[Point], eps: f64, min_size: usize) -> Result<TheoremReport> {
    let inputs = json!({
        "configuration": summary(d),
        "shifts": shifts,
        "eps": eps,
        "min_size": min_size,
    });
    let mut report = TheoremReport::new("t2", "almost periods along a sequence of shifts", inputs);
    let k = d.dim();
    let spread = fmax(shifts.iter().flat_map(|a| shifts.iter().map(move |b| a.sub(b).norm()))).max(0.0);
    let half = spread / (k as f64).sqrt() + eps;
    let step = eps / 4.0;
    let spec = PeriodScanSpec::centered(k, eps, (half / step).ceil() * step, step)?;
    let scan = scan_periods(d, &spec)?;
    let adj = bochner_edges(d, shifts, &scan.accepted, eps)?;
    let clique = if shifts.is_empty() { Vec::new() } else { max_clique(&adj) };
    report.push(Check::new(
        "sub-list with pairwise period differences",
        &["scan_periods", "is_almost_period"],
        eps,
        clique.len() >= min_size,
        clique.len() as f64 - min_size as f64,
        format!("indices {clique:?} of {} shifts", shifts.len()),
    ));

    let faulty = with_extra_point(d, gap_point(d))?;
    let faulty_scan = scan_periods(&faulty, &spec)?;
    let faulty_adj = bochner_edges(&faulty, shifts, &faulty_scan.accepted, eps)?;
    let far: Vec<(usize, usize)> = clique
        .iter()
        .flat_map(|&l| clique.iter().map(move |&m| (l, m)))
        .filter(|&(l, m)| l < m && shifts[l].distance(&shifts[m]) >= 1.0)
        .collect();
    let caught = far.iter().filter(|&&(l, m)| !faulty_adj[l][m]).count();
    report.push(Check::new(
        "extra point removes the far pairs",
        &["scan_periods", "is_almost_period"],
        eps,
        caught == far.len(),
        caught as f64,
        format!(
            "{caught} of {} far pairs rejected; {} shifts accepted on the faulty set",
            far.len(),
            faulty_scan.accepted.len()
        ),
    ));
    Ok(report.finish())
}

/// Sample grid on the window shrunk by `inset`, centered like the window.
pub fn interior_grid(window: &Window, inset: f64, step: f64) -> Result<SampleGrid> {
    let inner = window
        .shrink(inset)
        .ok_or_else(|| Error::WindowTooSmall(format!("window vanishes when shrunk by {inset}")))?;
    let cube = Window::cube(inner.center.clone(), 2.0 * inner.half_width() / match inner.kind {
        crate::pointset::WindowKind::Cube => 1.0,
        crate::pointset::WindowKind::Ball => (inner.dim() as f64).sqrt(),
    })?;
    SampleGrid::new(cube, step)
}

/// Set-level and measure-level convergence agree.
///
/// (a) windowed distance to the limit bounds the field distance through the
/// Lipschitz constant; (b) a field distance below `ν/2` at support `η/2`
/// forces equal counts on every `η`-component; (c) every accepted
/// `eps`-almost period of the limit is a measure-level period at the
/// transferred tolerance `eps·Lip·N`. A member with an injected extra point
/// must fail (b) and must not satisfy its premise.
pub fn verify_set_measure_equivalence(
    family: &Family,
    phi: &TestFunction,
    grid: &SampleGrid,
    eps: f64,
    box_half_width: f64,
) -> Result<TheoremReport> {
    let mut inputs = family.inputs();
    inputs["phi"] = json!(phi);
    inputs["grid"] = json!(grid);
    inputs["eps"] = json!(eps);
    inputs["box_half_width"] = json!(box_half_width);
    let mut report = TheoremReport::new(
        "t10",
        "weak uniform convergence of counting measures; also covers density and unit-ball count bounds for them",
        inputs,
    );
    let limit = family.limit();
    let k = limit.dim();
    let lip = phi.lipschitz();

    // (a)
    let dists: Vec<f64> = family
        .members
        .iter()
        .map(|m| Ok(bottleneck_distance(m, limit, CollarSpec::none())?.value.unwrap_or(f64::INFINITY)))
        .collect::<Result<_>>()?;
    let d_max = fmax(dists.iter().copied());
    let nodes = grid.nodes();
    let n_a = local_count_max(limit, Some(&nodes), phi.radius + d_max)?;
    let limit_field = convolve(limit, phi, grid)?;
    let mut wuds = Vec::new();
    for m in &family.members {
        wuds.push(field_distance(&convolve(m, phi, grid)?, &limit_field)?);
    }
    let slack = fmax(wuds.iter().zip(&dists).map(|(w, d)| w - lip * d * n_a as f64));
    report.push(Check::new(
        "(a) field distance within Lip·N times the set distance",
        &["bottleneck_distance", "weak_uniform_distance", "local_count_max"],
        0.0,
        slack <= 1e-12,
        -slack,
        format!("Lip {lip}, N {n_a}, set distances {dists:?}, field distances {wuds:?}"),
    ));
    let monotone = wuds.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    report.push(Check::new(
        "(a) field distance non-increasing along the family",
        &["weak_uniform_distance"],
        1e-12,
        monotone,
        0.0,
        format!("{wuds:?}"),
    ));

    // (b)
    let m_hat = local_count_max(limit, None, 1.0)?;
    let eta = eta_for(eps, m_hat)?;
    let comps = components(limit, eta);
    let widest = fmax(comps.iter().map(|c| c.diameter)).max(0.0);
    report.push(Check::new(
        "(b) eta-components are narrower than eps",
        &["local_count_max", "eta_for", "components"],
        eps,
        widest < eps,
        eps - widest,
        format!("M {m_hat}, eta {eta}, {} components", comps.len()),
    ));
    let small = TestFunction::tent(eta / 2.0)?;
    let nu = small.mass(k);
    let small_grid = interior_grid(limit.window(), small.radius + 2.0 * eta, small.radius / 4.0)?;
    let small_limit = convolve(limit, &small, &small_grid)?;
    let mut premise_members = 0;
    let mut violations = Vec::new();
    for (p, m) in family.members.iter().enumerate() {
        let w = field_distance(&convolve(m, &small, &small_grid)?, &small_limit)?;
        if w < nu / 2.0 {
            premise_members += 1;
            if !component_count_report(limit, m, eta)?.matched() {
                violations.push(p);
            }
        }
    }
    report.push(Check::new(
        "(b) small field distance forces equal component counts",
        &["weak_uniform_distance", "component_count_match"],
        nu / 2.0,
        violations.is_empty() && premise_members > 0,
        premise_members as f64,
        format!("nu {nu}; {premise_members} members below nu/2; violations at {violations:?}"),
    ));
    let injected = with_extra_point(limit, gap_point(limit))?;
    let w_fault = field_distance(&convolve(&injected, &small, &small_grid)?, &small_limit)?;
    let fault_counts = component_count_report(limit, &injected, eta)?;
    report.push(Check::new(
        "(b) injected extra point fails the component count",
        &["weak_uniform_distance", "component_count_match"],
        nu / 2.0,
        !fault_counts.matched() && w_fault >= nu / 2.0,
        w_fault - nu / 2.0,
        format!(
            "field distance {w_fault}, {} orphans, {} mismatches",
            fault_counts.orphans.len(),
            fault_counts.mismatches.len()
        ),
    ));

    // (c)
    report.push(measure_transfer_check(limit, eps, phi, grid, box_half_width, "(c)")?);
    Ok(report.finish())
}

/// Every accepted `eps`-almost period passes the measure check at `eps·Lip·N`,
/// with `N` the largest count within `r + eps` of a grid node.
fn measure_transfer_check(
    d: &PointConfiguration,
    eps: f64,
    phi: &TestFunction,
    grid: &SampleGrid,
    box_half_width: f64,
    tag: &str,
) -> Result<Check> {
    let k = d.dim();
    let spec = PeriodScanSpec::centered(k, eps, box_half_width, eps / 4.0)?;
    let scan = scan_periods(d, &spec)?;
    let n = local_count_max(d, Some(&grid.nodes()), phi.radius + eps)?;
    let tol = eps * phi.lipschitz() * n as f64;
    let mut worst = 0.0f64;
    let mut failed = 0;
    for tau in &scan.accepted {
        let dev = measure_shift_deviation(d, tau, phi, grid)?;
        worst = worst.max(dev);
        if dev > tol {
            failed += 1;
        }
    }
    Ok(Check::new(
        format!("{tag} accepted set periods are measure periods at eps·Lip·N"),
        &["scan_periods", "local_count_max", "measure_period_check"],
        tol,
        failed == 0 && scan.accepted.len() > 1,
        tol - worst,
        format!("N {n}, {} accepted, {failed} failed, worst deviation {worst}", scan.accepted.len()),
    ))
}

/// Sample grid for the transfer check: clear of the window boundary by the
/// largest shift, the collar slack and the support radius.
pub fn transfer_grid(d: &PointConfiguration, eps: f64, phi: &TestFunction, box_half_width: f64, step: f64) -> Result<SampleGrid> {
    let reach = box_half_width * (d.dim() as f64).sqrt();
    interior_grid(d.window(), 2.0 * reach + 2.0 * eps + phi.radius, step)
}

/// Median nearest-neighbor distance.
pub fn nearest_neighbor_median(d: &PointConfiguration) -> f64 {
    let pts = d.points();
    let mut nn: Vec<f64> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            pts.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| p.distance(q))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    nn.sort_by(f64::total_cmp);
    if nn.is_empty() {
        return f64::INFINITY;
    }
    nn[nn.len() / 2]
}

/// Set periods transfer to measure periods on almost periodic inputs; the
/// Poisson control has no period outside the trivial ball at either level.
pub fn verify_transfer(
    periodic: &[(String, PointConfiguration)],
    control: &PointConfiguration,
    eps: f64,
    phi: &TestFunction,
    box_half_width: f64,
) -> Result<TheoremReport> {
    let inputs = json!({
        "configurations": periodic.iter().map(|(l, d)| json!({"label": l, "configuration": summary(d)})).collect::<Vec<_>>(),
        "control": summary(control),
        "eps": eps,
        "phi": phi,
        "box_half_width": box_half_width,
    });
    let mut report = TheoremReport::new("t11", "set almost periodicity versus measure almost periodicity", inputs);
    for (label, d) in periodic {
        let n = local_count_max(d, None, phi.radius + eps)?;
        let step = crate::measure::certified_step(eps, phi, n).min(0.05);
        let grid = transfer_grid(d, eps, phi, box_half_width, step)?;
        report.push(measure_transfer_check(d, eps, phi, &grid, box_half_width, label)?);
    }

    let median = nearest_neighbor_median(control);
    let ce = 0.4 * median;
    let k = control.dim();
    let spec = PeriodScanSpec::centered(k, ce, box_half_width, ce / 2.0)?;
    let set_scan = scan_periods(control, &spec)?;
    let set_far = set_scan.accepted.iter().filter(|t| t.norm() >= ce).count();
    report.push(Check::new(
        "control: no set-level period outside the trivial ball",
        &["scan_periods"],
        ce,
        set_far == 0,
        -(set_far as f64),
        format!("nearest-neighbor median {median}, eps {ce}, {} accepted", set_scan.accepted.len()),
    ));
    let cphi = TestFunction::tent(1.0)?;
    let grid = transfer_grid(control, ce, &cphi, box_half_width, ce / 2.0)?;
    let measure_scan = crate::measure::scan_measure_periods(control, &spec, &cphi, &grid)?;
    let measure_far = measure_scan.accepted.iter().filter(|t| t.norm() >= ce).count();
    report.push(Check::new(
        "control: no measure-level period outside the trivial ball",
        &["scan_measure_periods"],
        ce,
        measure_far == 0,
        -(measure_far as f64),
        format!("{} accepted", measure_scan.accepted.len()),
    ));
    Ok(report.finish())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    AlmostPeriodic,
    Exploratory,
    Control,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusEntry {
    pub label: &'static str,
    pub role: Role,
    pub spec: GeneratorSpec,
}

pub const CONTROL_SEED: u64 = 20_240_531;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

pub fn perturbed_lattice_spec(window: Window) -> GeneratorSpec {
    GeneratorSpec::new(
        GeneratorKind::PerturbedLattice {
            lattice: LatticeSpec::integer(1),
            terms: vec![PerturbationTerm { amplitude: 0.1, frequency: vec![SQRT_2], phase: 0.0 }],
        },
        window,
    )
}

pub fn standard_corpus() -> Vec<CorpusEntry> {
    let line = |lo, hi| Window::interval(lo, hi).expect("valid interval");
    vec![
        CorpusEntry {
            label: "integers",
            role: Role::AlmostPeriodic,
            spec: GeneratorSpec::new(GeneratorKind::Lattice { lattice: LatticeSpec::integer(1) }, line(-50.0, 50.0)),
        },
        CorpusEntry {
            label: "square_lattice",
            role: Role::AlmostPeriodic,
            spec: GeneratorSpec::new(
                GeneratorKind::Lattice { lattice: LatticeSpec::integer(2) },
                Window::symmetric_cube(2, -20.0, 20.0).expect("valid cube"),
            ),
        },
        CorpusEntry {
            label: "integers_and_sqrt2",
            role: Role::AlmostPeriodic,
            spec: GeneratorSpec::new(
                GeneratorKind::LatticeUnion {
                    components: vec![LatticeSpec::integer(1), LatticeSpec::progression(SQRT_2, 0.0)],
                },
                line(-100.0, 100.0),
            ),
        },
        CorpusEntry {
            label: "integers_and_shifted_sqrt2",
            role: Role::AlmostPeriodic,
            spec: GeneratorSpec::new(
                GeneratorKind::LatticeUnion {
                    components: vec![LatticeSpec::integer(1), LatticeSpec::progression(SQRT_2, 0.5)],
                },
                line(-100.0, 100.0),
            ),
        },
        CorpusEntry {
            label: "perturbed_integers",
            role: Role::AlmostPeriodic,
            spec: perturbed_lattice_spec(line(-100.0, 100.0)),
        },
        CorpusEntry {
            label: "fibonacci_chain",
            role: Role::Exploratory,
            spec: GeneratorSpec::new(
                GeneratorKind::CutAndProject1d { slope: 1.0 / 1.618_033_988_749_895, acceptance: None },
                line(-100.0, 100.0),
            ),
        },
        CorpusEntry {
            label: "poisson_control",
            role: Role::Control,
            spec: GeneratorSpec::new(
                GeneratorKind::Poisson { intensity: 1.0, seed: Some(CONTROL_SEED) },
                line(-100.0, 100.0),
            ),
        },
    ]
}

/// Perturbation amplitudes `0.1 + 0.1·4^{-p}` converging to the corpus member.
pub fn perturbed_family() -> Result<Family> {
    let mut amps: Vec<f64> = (0..9).map(|p| 0.1 + 0.1 * 0.25f64.powi(p)).collect();
    amps.push(0.1);
    Family::build(
        "perturbed_integers",
        perturbed_lattice_spec(Window::interval(-100.0, 100.0)?),
        amps,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    All,
    T1,
    T2,
    T10,
    T11,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Suite::All),
            "t1" => Ok(Suite::T1),
            "t2" => Ok(Suite::T2),
            "t10" => Ok(Suite::T10),
            "t11" => Ok(Suite::T11),
            other => Err(Error::InvalidParameter(format!("unknown suite {other:?}; expected all, t1, t2, t10 or t11"))),
        }
    }
}

pub const SHIFT_SEED: u64 = 7;

/// `n` shifts uniform in `[-half, half)^k` from a fixed seed.
pub fn seeded_shifts(k: usize, n: usize, half: f64, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point::new((0..k).map(|_| rng.random_range(-half..half)).collect()))
        .collect()
}

fn corpus_member(label: &str) -> Result<PointConfiguration> {
    let entry = standard_corpus()
        .into_iter()
        .find(|e| e.label == label)
        .ok_or_else(|| Error::InvalidParameter(format!("no corpus member {label}")))?;
    generate(&entry.spec)
}

fn run_one(suite: Suite) -> Result<Vec<TheoremReport>> {
    match suite {
        Suite::T1 => Ok(vec![verify_limit_theorem(&perturbed_family()?, &[0.3, 0.2], 10.0)?]),
        Suite::T2 => {
            let shifts = seeded_shifts(1, 10, 10.0, SHIFT_SEED);
            Ok(vec![
                verify_bochner_smoke(&corpus_member("integers")?, &shifts, 0.3, 3)?,
                verify_bochner_smoke(&corpus_member("perturbed_integers")?, &shifts, 0.3, 2)?,
            ])
        }
        Suite::T10 => {
            let family = perturbed_family()?;
            let phi = TestFunction::tent(0.5)?;
            let grid = transfer_grid(family.limit(), 0.3, &phi, 10.0, 0.02)?;
            Ok(vec![verify_set_measure_equivalence(&family, &phi, &grid, 0.3, 10.0)?])
        }
        Suite::T11 => {
            let periodic = vec![("perturbed_integers".to_string(), corpus_member("perturbed_integers")?)];
            let phi = TestFunction::tent(0.5)?;
            Ok(vec![verify_transfer(&periodic, &corpus_member("poisson_control")?, 0.25, &phi, 10.0)?])
        }
        Suite::All => unreachable!("expanded by run_suite"),
    }
}

/// Runs the requested suites; reports come back in suite order.
pub fn run_suite(suite: Suite) -> Result<Vec<TheoremReport>> {
    let list = match suite {
        Suite::All => vec![Suite::T1, Suite::T2, Suite::T10, Suite::T11],
        s => vec![s],
    };
    use rayon::prelude::*;
    let parts: Vec<Vec<TheoremReport>> = list.into_par_iter().map(run_one).collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clique_search() {
        let t = true;
        let f = false;
        let adj = vec![
            vec![f, t, t, f],
            vec![t, f, t, f],
            vec![t, t, f, t],
            vec![f, f, t, f],
        ];
        assert_eq!(max_clique(&adj), vec![0, 1, 2]);
        assert_eq!(max_clique(&[vec![false]]), vec![0]);
    }

    #[test]
    fn constant_family_passes_trivially() {
        let spec = perturbed_lattice_spec(Window::interval(-40.0, 40.0).unwrap());
        let fam = Family::build("constant", spec, vec![0.1, 0.1, 0.1]).unwrap();
        let r = verify_limit_theorem(&fam, &[0.3], 5.0).unwrap();
        assert!(r.all_checks_passed, "{r:#?}");
    }

    #[test]
    fn non_converging_family_flags_precondition() {
        let spec = perturbed_lattice_spec(Window::interval(-40.0, 40.0).unwrap());
        let fam = Family::build("far", spec, vec![0.3, 0.0]).unwrap();
        let r = verify_limit_theorem(&fam, &[0.03], 5.0).unwrap();
        assert!(!r.precondition_met);
        assert!(!r.all_checks_passed);
    }

    #[test]
    fn equal_shifts_form_one_group() {
        let z = corpus_member("integers").unwrap();
        let shifts = vec![Point::from(2.3); 4];
        let r = verify_bochner_smoke(&z, &shifts, 0.3, 4).unwrap();
        assert!(r.all_checks_passed, "{r:#?}");
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!("t10".parse::<Suite>().unwrap(), Suite::T10);
        assert!("t3".parse::<Suite>().is_err());
    }

    #[test]
    fn corpus_generates() {
        for e in standard_corpus() {
            let d = generate(&e.spec).unwrap();
            assert!(!d.is_empty(), "{}", e.label);
        }
    }
}
