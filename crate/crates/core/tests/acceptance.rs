//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criterion 4's covering-radius interval cannot hold for the covering radius
//! as defined (for ℤ it is about 1/2 - ε, not 1/2 + ε); it is evaluated as
//! stated and listed in `KNOWN_FAILURES`. Any other failure, or criterion 4
//! unexpectedly passing, makes this target exit non-zero.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use apsets::density::{density_estimate, discrepancy_scan, local_count_max};
use apsets::generators::generate;
use apsets::harness::{
    perturbed_family, seeded_shifts, standard_corpus, transfer_grid, verify_bochner_smoke,
    verify_set_measure_equivalence, verify_transfer, Role,
};
use apsets::measure::{components, eta_for, TestFunction};
use apsets::metric::{bottleneck_distance, brute_force_distance, CollarSpec};
use apsets::pointset::{Point, PointConfiguration, Window};
use apsets::scanner::{group_property_check, scan_periods, PeriodScanSpec};

const KNOWN_FAILURES: &[u32] = &[4];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn member(label: &str) -> PointConfiguration {
    let e = standard_corpus().into_iter().find(|e| e.label == label).expect("corpus label");
    generate(&e.spec).expect("corpus generates")
}

fn random_set(rng: &mut ChaCha8Rng, k: usize, n: usize, half: f64) -> PointConfiguration {
    let w = Window::symmetric_cube(k, -half, half).unwrap();
    let pts = (0..n)
        .map(|_| Point::new((0..k).map(|_| rng.random_range(-half..half)).collect()))
        .collect();
    PointConfiguration::new(w, pts).unwrap()
}

fn dist0(a: &PointConfiguration, b: &PointConfiguration) -> f64 {
    bottleneck_distance(a, b, CollarSpec::none()).unwrap().value.unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    let pairs = 600;
    for i in 0..pairs {
        let k = 1 + i % 3;
        let n = rng.random_range(0..=8);
        let a = random_set(&mut rng, k, n, 5.0);
        let b = random_set(&mut rng, k, n, 5.0);
        let fast = bottleneck_distance(&a, &b, CollarSpec::none()).unwrap().value;
        let slow = brute_force_distance(&a, &b).unwrap();
        if fast != slow {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 60.0,
        format!("{pairs} pairs, {mismatches} mismatches, {secs:.2}s"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut asym, mut worst) = (0, f64::NEG_INFINITY);
    let triples = 250;
    for i in 0..triples {
        let k = 1 + i % 3;
        let n = rng.random_range(1..=25);
        let a = random_set(&mut rng, k, n, 4.0);
        let b = random_set(&mut rng, k, n, 4.0);
        let c = random_set(&mut rng, k, n, 4.0);
        let (ab, ba, bc, ac) = (dist0(&a, &b), dist0(&b, &a), dist0(&b, &c), dist0(&a, &c));
        if ab != ba {
            asym += 1;
        }
        worst = worst.max(ac - (ab + bc));
    }
    outcome(
        asym == 0 && worst <= 1e-12,
        format!("{triples} triples, {asym} asymmetric, worst triangle excess {worst:e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut untrusted = 0;
    let mut cases = 0;
    for k in 1..=2usize {
        let d = if k == 1 { member("integers") } else { member("square_lattice") };
        let edge = Point::new(vec![0.49 / (k as f64).sqrt(); k]);
        let mut deltas = vec![Point::origin(k), edge.clone(), edge.neg()];
        while deltas.len() < 25 {
            let v = Point::new((0..k).map(|_| rng.random_range(-0.5..0.5)).collect());
            if v.norm() < 0.5 {
                deltas.push(v);
            }
        }
        for delta in &deltas {
            let shifted = d.translate(delta).unwrap().restrict(d.window()).unwrap();
            let r = bottleneck_distance(&d, &shifted, CollarSpec::new(1.0).unwrap()).unwrap();
            worst = worst.max((r.value.unwrap_or(f64::INFINITY) - delta.norm()).abs());
            untrusted += usize::from(!r.trusted);
            cases += 1;
        }
    }
    outcome(
        worst <= 1e-12 && untrusted == 0,
        format!("{cases} shifts, worst |value - |delta|| {worst:e}, {untrusted} untrusted"),
    )
}

fn criterion_4() -> Outcome {
    let z = member("integers");
    let (eps, step) = (0.2, 0.05);
    let spec = PeriodScanSpec::centered(1, eps, 10.0, step).unwrap();
    let report = scan_periods(&z, &spec).unwrap();
    let mut wrong = 0;
    for tau in spec.nodes() {
        let x = tau.coords()[0];
        let frac = (x - x.round()).abs();
        if (frac - eps).abs() < 1e-9 {
            continue; // on the boundary at grid resolution
        }
        if (frac < eps) != report.accepted.contains(&tau) {
            wrong += 1;
        }
    }
    let cr = report.covering_radius;
    let in_range = (0.5..=0.5 + eps + step).contains(&cr);
    outcome(
        wrong == 0 && in_range,
        format!(
            "accepted set {} ({} nodes disagree); covering_radius {cr} {} [0.5, {}]",
            if wrong == 0 { "exact" } else { "wrong" },
            wrong,
            if in_range { "in" } else { "outside" },
            0.5 + eps + step
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for label in ["integers", "integers_and_sqrt2", "perturbed_integers"] {
        let d = member(label);
        let spec = PeriodScanSpec::centered(1, 0.2, 10.0, 0.1).unwrap();
        let report = scan_periods(&d, &spec).unwrap();
        let g = group_property_check(&report, &d, 400, 5).unwrap();
        ok &= g.violations.is_empty() && g.checked > 0;
        lines.push(format!("{label}: {} checked, {} violations", g.checked, g.violations.len()));
    }
    outcome(ok, lines.join("; "))
}

fn criterion_6() -> Outcome {
    let d = member("integers_and_shifted_sqrt2");
    let target = 1.0 + 0.5f64.sqrt();
    let est = density_estimate(&d, &[], &[50.0, 100.0, 200.0]).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for &(t, ratio) in &est.trend {
        let err = (ratio - target).abs();
        ok &= err <= 2.0 / t;
        parts.push(format!("T={t}: err {err:.5} (<= {:.3})", 2.0 / t));
    }
    // a cube of edge 200 fills the window, so random centers use T <= 100
    let alphas = seeded_shifts(1, 10, 50.0, 6);
    let shifted = density_estimate(&d, &alphas, &[50.0, 100.0]).unwrap();
    let bound = 4.0 / 100.0;
    ok &= shifted.max_shift_deviation <= bound;
    parts.push(format!(
        "max_shift_deviation {:.4} over 10 centers at T=100 (<= {bound})",
        shifted.max_shift_deviation
    ));
    outcome(ok, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for e in standard_corpus().into_iter().filter(|e| e.role == Role::AlmostPeriodic) {
        let d = generate(&e.spec).unwrap();
        let k = d.dim();
        let root_k = (k as f64).sqrt();
        let shapes: Vec<Window> = (0..=156)
            .map(|i| Window::cube(d.window().center.clone(), (1.0 + 0.25 * i as f64) / root_k).unwrap())
            .collect();
        let reach = if k == 1 { 5.0 } else { 2.5 };
        let shifts = seeded_shifts(k, 25, reach, 7);
        let r = discrepancy_scan(&d, &shapes, &shifts).unwrap();
        let first = r.fitted_c_in(1.0, 20.5);
        let second = r.fitted_c_in(20.5, 40.0 + 1e-9);
        let good = second <= 1.1 * first;
        ok &= good;
        parts.push(format!("{}: C {first:.3} -> {second:.3}", e.label));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let eps = 0.3;
    let mut ok = true;
    let mut parts = Vec::new();
    for e in standard_corpus() {
        let d = generate(&e.spec).unwrap();
        let m = local_count_max(&d, None, 1.0).unwrap();
        let eta = eta_for(eps, m).unwrap();
        let widest = components(&d, eta).iter().map(|c| c.diameter).fold(0.0, f64::max);
        ok &= widest < eps;
        parts.push(format!("{}: M {m}, widest {widest:.4}", e.label));
    }
    let family = perturbed_family().unwrap();
    let phi = TestFunction::tent(0.5).unwrap();
    let grid = transfer_grid(family.limit(), eps, &phi, 10.0, 0.02).unwrap();
    let report = verify_set_measure_equivalence(&family, &phi, &grid, eps, 10.0).unwrap();
    for name in [
        "(b) small field distance forces equal component counts",
        "(b) injected extra point fails the component count",
    ] {
        let c = report.check(name).expect("check present");
        ok &= c.passed;
        parts.push(format!("{name}: {}", c.detail));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let periodic = vec![("perturbed_integers".to_string(), member("perturbed_integers"))];
    let phi = TestFunction::tent(0.5).unwrap();
    let report = verify_transfer(&periodic, &member("poisson_control"), 0.25, &phi, 10.0).unwrap();
    let detail = report
        .checks
        .iter()
        .map(|c| format!("{} [{}]: {}", c.name, if c.passed { "ok" } else { "fail" }, c.detail))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(report.all_checks_passed, detail)
}

fn criterion_10() -> Outcome {
    let shifts = seeded_shifts(1, 10, 10.0, 10);
    let report = verify_bochner_smoke(&member("integers"), &shifts, 0.3, 3).unwrap();
    let c = &report.checks[0];
    outcome(c.passed, c.detail.clone())
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    // keep the test harness's own arguments from confusing anyone
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut unexpected = Vec::new();
    for (id, f) in criteria {
        if filter.as_deref().is_some_and(|f| f != id.to_string()) {
            continue;
        }
        let o = f();
        println!("criterion {id:>2}: {} | {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if o.passed == KNOWN_FAILURES.contains(&id) {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: outcomes as expected (known failures: {KNOWN_FAILURES:?})");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
