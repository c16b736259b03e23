//! Input families. Lattices and their perturbations are almost periodic by
//! construction; cut-and-project chains are exploratory and seeded Poisson
//! samples serve as negative controls.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointset::{Point, PointConfiguration, Window, WindowKind};

/// `offset + Σ m_i basis[i]` over integer vectors `m`. Each row of `basis`
/// is one basis vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub basis: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl LatticeSpec {
    pub fn integer(dim: usize) -> Self {
        let basis = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        LatticeSpec {
            basis,
            offset: vec![0.0; dim],
        }
    }

    /// `spacing · ℤ + offset` on the line.
    pub fn progression(spacing: f64, offset: f64) -> Self {
        LatticeSpec {
            basis: vec![vec![spacing]],
            offset: vec![offset],
        }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    fn matrix(&self) -> DMatrix<f64> {
        let k = self.dim();
        // columns are basis vectors
        DMatrix::from_fn(k, k, |r, c| self.basis[c][r])
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.offset.len() != dim || self.basis.len() != dim || self.basis.iter().any(|b| b.len() != dim) {
            return Err(Error::InvalidSpec(format!(
                "lattice basis must be {dim} vectors of dimension {dim} with a {dim}-dimensional offset"
            )));
        }
        if self.basis.iter().flatten().chain(&self.offset).any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec("lattice entries must be finite".into()));
        }
        let scale = self
            .basis
            .iter()
            .map(|b| crate::pointset::norm(b))
            .product::<f64>();
        if self.matrix().determinant().abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidSpec("lattice basis is singular".into()));
        }
        Ok(())
    }

    /// Length of the shortest nonzero lattice vector (searched over small
    /// coefficient vectors, exact for reasonably reduced bases).
    pub fn minimal_gap(&self) -> f64 {
        let k = self.dim();
        let mut best = f64::INFINITY;
        let mut m = vec![-3i64; k];
        loop {
            if m.iter().any(|&x| x != 0) {
                let v: Vec<f64> = (0..k)
                    .map(|r| (0..k).map(|c| m[c] as f64 * self.basis[c][r]).sum())
                    .collect();
                best = best.min(crate::pointset::norm(&v));
            }
            let mut axis = 0;
            loop {
                if axis == k {
                    return best;
                }
                m[axis] += 1;
                if m[axis] <= 3 {
                    break;
                }
                m[axis] = -3;
                axis += 1;
            }
        }
    }

    /// All lattice points inside `window`.
    pub fn points_in(&self, window: &Window) -> Vec<Point> {
        let k = self.dim();
        let b = self.matrix();
        let inv = b.clone().try_inverse().expect("validated nonsingular basis");
        let (lo, hi) = window.bounds();
        let mut mlo = vec![i64::MAX; k];
        let mut mhi = vec![i64::MIN; k];
        for corner in 0..(1usize << k) {
            let x = DVector::from_fn(k, |i, _| {
                (if corner >> i & 1 == 1 { hi[i] } else { lo[i] }) - self.offset[i]
            });
            let m = &inv * x;
            for i in 0..k {
                mlo[i] = mlo[i].min(m[i].floor() as i64 - 1);
                mhi[i] = mhi[i].max(m[i].ceil() as i64 + 1);
            }
        }
        let mut out = Vec::new();
        let mut m = mlo.clone();
        loop {
            let x: Vec<f64> = (0..k)
                .map(|r| self.offset[r] + (0..k).map(|c| m[c] as f64 * self.basis[c][r]).sum::<f64>())
                .collect();
            if window.contains(&x) {
                out.push(Point::new(x));
            }
            let mut axis = 0;
            loop {
                if axis == k {
                    return out;
                }
                m[axis] += 1;
                if m[axis] <= mhi[axis] {
                    break;
                }
                m[axis] = mlo[axis];
                axis += 1;
            }
        }
    }
}

/// One term `c · sin(2π⟨λ, n⟩ + θ)` of a lattice perturbation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationTerm {
    pub amplitude: f64,
    pub frequency: Vec<f64>,
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    Lattice {
        lattice: LatticeSpec,
    },
    LatticeUnion {
        components: Vec<LatticeSpec>,
    },
    PerturbedLattice {
        lattice: LatticeSpec,
        terms: Vec<PerturbationTerm>,
    },
    /// Model set from ℤ²: physical coordinate `m + slope·n`, internal
    /// coordinate `n - slope·m` restricted to `acceptance = [lo, hi)`.
    CutAndProject1d {
        slope: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        acceptance: Option<[f64; 2]>,
    },
    Poisson {
        intensity: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub window: Window,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, window: Window) -> Self {
        GeneratorSpec { kind, window }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.window.dim();
        match &self.kind {
            GeneratorKind::Lattice { lattice } => lattice.validate(k),
            GeneratorKind::LatticeUnion { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidSpec("lattice union needs at least one component".into()));
                }
                components.iter().try_for_each(|c| c.validate(k))
            }
            GeneratorKind::PerturbedLattice { lattice, terms } => {
                lattice.validate(k)?;
                for t in terms {
                    if t.frequency.len() != k {
                        return Err(Error::InvalidSpec(format!(
                            "perturbation frequency must have dimension {k}"
                        )));
                    }
                    if !(t.amplitude.is_finite() && t.phase.is_finite() && t.frequency.iter().all(|x| x.is_finite())) {
                        return Err(Error::InvalidSpec("perturbation parameters must be finite".into()));
                    }
                }
                let reach = perturbation_reach(terms, k);
                let gap = lattice.minimal_gap();
                if reach >= 0.5 * gap {
                    return Err(Error::InvalidSpec(format!(
                        "perturbation reach {reach} must stay below half the minimal lattice gap {gap}"
                    )));
                }
                Ok(())
            }
            GeneratorKind::CutAndProject1d { slope, acceptance } => {
                if k != 1 {
                    return Err(Error::InvalidSpec("cut-and-project generator is one-dimensional".into()));
                }
                if !(slope.is_finite() && *slope > 0.0) {
                    return Err(Error::InvalidSpec("slope must be positive".into()));
                }
                if let Some([lo, hi]) = acceptance {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(Error::InvalidSpec("acceptance interval must satisfy lo < hi".into()));
                    }
                }
                Ok(())
            }
            GeneratorKind::Poisson { intensity, seed } => {
                if !(intensity.is_finite() && *intensity > 0.0) {
                    return Err(Error::InvalidSpec("Poisson intensity must be positive".into()));
                }
                if seed.is_none() {
                    return Err(Error::InvalidSpec("Poisson generator requires a seed".into()));
                }
                Ok(())
            }
        }
    }
}

/// Largest Euclidean displacement a perturbation can cause: the same scalar
/// is added on every axis, so the sum of amplitudes is scaled by √k.
fn perturbation_reach(terms: &[PerturbationTerm], k: usize) -> f64 {
    terms.iter().map(|t| t.amplitude.abs()).sum::<f64>() * (k as f64).sqrt()
}

fn perturbation(terms: &[PerturbationTerm], n: &[f64]) -> f64 {
    terms
        .iter()
        .map(|t| {
            let phase: f64 = t.frequency.iter().zip(n).map(|(l, x)| l * x).sum();
            t.amplitude * (std::f64::consts::TAU * phase + t.phase).sin()
        })
        .sum()
}

fn perturb(n: &Point, terms: &[PerturbationTerm], scale: f64) -> Point {
    let d = scale * perturbation(terms, n.coords());
    Point::new(n.coords().iter().map(|x| x + d).collect())
}

/// Deterministic for a fixed spec (including its seed).
pub fn generate(spec: &GeneratorSpec) -> Result<PointConfiguration> {
    spec.validate()?;
    let w = &spec.window;
    let points = match &spec.kind {
        GeneratorKind::Lattice { lattice } => lattice.points_in(w),
        GeneratorKind::LatticeUnion { components } => {
            components.iter().flat_map(|c| c.points_in(w)).collect()
        }
        GeneratorKind::PerturbedLattice { lattice, terms } => {
            // dilate first so points drifting inward from outside are kept
            let outer = w.dilate(perturbation_reach(terms, w.dim()));
            lattice
                .points_in(&outer)
                .iter()
                .map(|n| perturb(n, terms, 1.0))
                .filter(|p| w.contains(p.coords()))
                .collect()
        }
        GeneratorKind::CutAndProject1d { slope, acceptance } => cut_and_project(*slope, *acceptance, w),
        GeneratorKind::Poisson { intensity, seed } => {
            poisson(*intensity, seed.expect("validated seed"), w)?
        }
    };
    PointConfiguration::new(w.clone(), points)
}

fn cut_and_project(slope: f64, acceptance: Option<[f64; 2]>, w: &Window) -> Vec<Point> {
    let [lo, hi] = acceptance.unwrap_or([-slope, 1.0]);
    let (wlo, whi) = w.bounds();
    let (a, b) = (wlo[0], whi[0]);
    let denom = 1.0 + slope * slope;
    let span = lo.abs().max(hi.abs());
    let m_lo = ((a - slope * span) / denom).floor() as i64 - 2;
    let m_hi = ((b + slope * span) / denom).ceil() as i64 + 2;
    let mut out = Vec::new();
    for m in m_lo..=m_hi {
        let mf = m as f64;
        let n_lo = (lo + slope * mf).ceil() as i64 - 1;
        let n_hi = (hi + slope * mf).floor() as i64 + 1;
        for n in n_lo..=n_hi {
            let nf = n as f64;
            let internal = nf - slope * mf;
            if lo <= internal && internal < hi {
                let x = mf + slope * nf;
                if w.contains(&[x]) {
                    out.push(Point::from(x));
                }
            }
        }
    }
    out.sort_by(|p, q| p.coords()[0].total_cmp(&q.coords()[0]));
    out
}

fn poisson(intensity: f64, seed: u64, w: &Window) -> Result<Vec<Point>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = intensity * w.volume();
    let count = Poisson::new(mean)
        .map_err(|e| Error::InvalidSpec(format!("Poisson mean {mean}: {e}")))?
        .sample(&mut rng) as usize;
    let (lo, hi) = w.bounds();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = lo.iter().zip(&hi).map(|(&l, &h)| rng.random_range(l..h)).collect();
        if w.kind == WindowKind::Cube || w.contains(&x) {
            out.push(Point::new(x));
        }
    }
    Ok(out)
}

/// Perturbed-lattice members that share one index set: the lattice points of
/// `W_{-reach}` for the largest amplitude. Member `p` scales the perturbation
/// so that its total amplitude is `amplitudes[p]`; the last member plays the
/// role of the limit. Consecutive members are then at most
/// `|amplitudes[p] - amplitudes[q]|·√k` apart pointwise.
pub fn converging_family(spec: &GeneratorSpec, amplitudes: &[f64]) -> Result<Vec<PointConfiguration>> {
    spec.validate()?;
    let GeneratorKind::PerturbedLattice { lattice, terms } = &spec.kind else {
        return Err(Error::InvalidSpec("converging families are built from perturbed lattices".into()));
    };
    if amplitudes.is_empty() {
        return Err(Error::InvalidSpec("amplitude list is empty".into()));
    }
    if amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::InvalidSpec("amplitudes must be finite and non-negative".into()));
    }
    if amplitudes.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidSpec("amplitudes must be non-increasing".into()));
    }
    let total: f64 = terms.iter().map(|t| t.amplitude.abs()).sum();
    if total == 0.0 {
        return Err(Error::InvalidSpec("perturbation has zero total amplitude".into()));
    }
    let k = spec.window.dim();
    let gap = lattice.minimal_gap();
    let max_reach = amplitudes[0] * (k as f64).sqrt();
    if max_reach >= 0.5 * gap {
        return Err(Error::InvalidSpec(format!(
            "amplitude reach {max_reach} must stay below half the minimal lattice gap {gap}"
        )));
    }
    let inner = spec
        .window
        .shrink(max_reach)
        .ok_or_else(|| Error::WindowTooSmall("window vanishes after removing the perturbation reach".into()))?;
    let index = lattice.points_in(&inner);
    amplitudes
        .iter()
        .map(|&amp| {
            let scale = amp / total;
            let pts = index.iter().map(|n| perturb(n, terms, scale)).collect();
            PointConfiguration::new(spec.window.clone(), pts)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{bottleneck_distance, CollarSpec};

    const GOLDEN: f64 = 1.618_033_988_749_895;

    fn xs(c: &PointConfiguration) -> Vec<f64> {
        let mut v: Vec<f64> = c.points().iter().map(|p| p.coords()[0]).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn integer_lattice_half_open() {
        let spec = GeneratorSpec::new(
            GeneratorKind::Lattice { lattice: LatticeSpec::integer(1) },
            Window::cube(0.0, 6.0).unwrap(),
        );
        assert_eq!(xs(&generate(&spec).unwrap()), vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn two_dimensional_lattice_count() {
        let spec = GeneratorSpec::new(
            GeneratorKind::Lattice { lattice: LatticeSpec::integer(2) },
            Window::symmetric_cube(2, -20.0, 20.0).unwrap(),
        );
        assert_eq!(generate(&spec).unwrap().len(), 1600);
    }

    #[test]
    fn lattice_union_matches_direct_enumeration() {
        let s2 = std::f64::consts::SQRT_2;
        let spec = GeneratorSpec::new(
            GeneratorKind::LatticeUnion {
                components: vec![LatticeSpec::integer(1), LatticeSpec::progression(s2, 0.5)],
            },
            Window::interval(0.0, 10.0).unwrap(),
        );
        let got = generate(&spec).unwrap();
        // independent enumeration of both progressions
        let mut expected: Vec<f64> = (0..10).map(|n| n as f64).collect();
        expected.extend((-10..20).map(|m| m as f64 * s2 + 0.5).filter(|&x| (0.0..10.0).contains(&x)));
        expected.sort_by(f64::total_cmp);
        assert_eq!(xs(&got), expected);
        assert_eq!(got.len(), 10 + 7);
    }

    #[test]
    fn fibonacci_chain_has_two_gaps_in_golden_ratio() {
        let spec = GeneratorSpec::new(
            GeneratorKind::CutAndProject1d { slope: 1.0 / GOLDEN, acceptance: None },
            Window::interval(-200.0, 200.0).unwrap(),
        );
        let pts = xs(&generate(&spec).unwrap());
        let mut gaps: Vec<f64> = pts.windows(2).map(|w| w[1] - w[0]).collect();
        gaps.sort_by(f64::total_cmp);
        let short = gaps[0];
        let long = *gaps.last().unwrap();
        for g in &gaps {
            assert!((g - short).abs() < 1e-9 || (g - long).abs() < 1e-9, "unexpected gap {g}");
        }
        assert!((long / short - GOLDEN).abs() < 1e-9);
    }

    #[test]
    fn poisson_is_deterministic_and_needs_seed() {
        let w = Window::interval(-50.0, 50.0).unwrap();
        let spec = GeneratorSpec::new(GeneratorKind::Poisson { intensity: 1.0, seed: Some(7) }, w.clone());
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let unseeded = GeneratorSpec::new(GeneratorKind::Poisson { intensity: 1.0, seed: None }, w);
        assert!(matches!(generate(&unseeded), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn rejects_large_perturbation_and_singular_basis() {
        let w = Window::interval(-10.0, 10.0).unwrap();
        let bad = GeneratorSpec::new(
            GeneratorKind::PerturbedLattice {
                lattice: LatticeSpec::integer(1),
                terms: vec![PerturbationTerm { amplitude: 0.6, frequency: vec![0.3], phase: 0.0 }],
            },
            w.clone(),
        );
        assert!(matches!(generate(&bad), Err(Error::InvalidSpec(_))));
        let singular = GeneratorSpec::new(
            GeneratorKind::Lattice {
                lattice: LatticeSpec { basis: vec![vec![1.0, 1.0], vec![2.0, 2.0]], offset: vec![0.0, 0.0] },
            },
            Window::symmetric_cube(2, -2.0, 2.0).unwrap(),
        );
        assert!(matches!(generate(&singular), Err(Error::InvalidSpec(_))));
    }

    fn perturbed(amplitude: f64) -> GeneratorSpec {
        GeneratorSpec::new(
            GeneratorKind::PerturbedLattice {
                lattice: LatticeSpec::integer(1),
                terms: vec![PerturbationTerm {
                    amplitude,
                    frequency: vec![std::f64::consts::SQRT_2],
                    phase: 0.0,
                }],
            },
            Window::interval(-30.0, 30.0).unwrap(),
        )
    }

    #[test]
    fn perturbed_lattice_keeps_boundary_points() {
        let c = generate(&perturbed(0.2)).unwrap();
        // every lattice index in the window contributes unless it drifted out
        assert!(c.len() >= 59 && c.len() <= 61);
        for p in c.points() {
            let x = p.coords()[0];
            let n = x.round();
            assert!((x - n - 0.2 * (std::f64::consts::TAU * std::f64::consts::SQRT_2 * n).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn converging_family_distances_shrink() {
        let amps = [0.2, 0.1, 0.05, 0.0];
        let fam = converging_family(&perturbed(0.2), &amps).unwrap();
        let limit = fam.last().unwrap();
        let mut prev = f64::INFINITY;
        for (member, &a) in fam.iter().zip(&amps) {
            let d = bottleneck_distance(member, limit, CollarSpec::none()).unwrap().value.unwrap();
            assert!(d <= a + 1e-12);
            assert!(d <= prev);
            prev = d;
        }
        let single = converging_family(&perturbed(0.2), &[0.1]).unwrap();
        assert_eq!(single.len(), 1);
        let flat = converging_family(&perturbed(0.2), &[0.1, 0.1]).unwrap();
        assert_eq!(
            bottleneck_distance(&flat[0], &flat[1], CollarSpec::none()).unwrap().value,
            Some(0.0)
        );
        assert!(converging_family(&perturbed(0.2), &[0.1, 0.2]).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec = perturbed(0.1);
        let s = serde_json::to_string(&spec).unwrap();
        assert!(s.contains("\"kind\":\"perturbed_lattice\""));
        let back: GeneratorSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
    }
}
