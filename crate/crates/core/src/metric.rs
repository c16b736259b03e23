//! Bijection-infimum (bottleneck) distance between windowed configurations.
//!
//! For infinite discrete sets the distance is the infimum over bijections of
//! the largest displacement. On a finite window we emulate it with a collar:
//! points deeper than `collar.width` inside the window are mandatory and must
//! be matched, points in the boundary ring may stay unmatched. A result is
//! `trusted` only when its value does not exceed the collar width.

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matching::cover_mandatory;
use crate::pointset::{check_dim, distance, PointConfiguration};
use crate::spatial::GridIndex;

/// Largest configuration the factorial oracle accepts.
pub const BRUTE_FORCE_MAX: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CollarSpec {
    pub width: f64,
}

impl CollarSpec {
    pub fn new(width: f64) -> Result<Self> {
        if !(width.is_finite() && width >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "collar width must be finite and non-negative, got {width}"
            )));
        }
        Ok(CollarSpec { width })
    }

    /// Every point is mandatory.
    pub fn none() -> Self {
        CollarSpec { width: 0.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MatchingWitness {
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_a: Vec<usize>,
    pub unmatched_b: Vec<usize>,
}

impl MatchingWitness {
    /// Largest pair distance, or 0 for an empty matching.
    pub fn max_pair_distance(&self, a: &PointConfiguration, b: &PointConfiguration) -> f64 {
        self.pairs
            .iter()
            .map(|&(i, j)| distance(a.points()[i].coords(), b.points()[j].coords()))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MatchDiagnostics {
    pub len_a: usize,
    pub len_b: usize,
    pub mandatory_a: usize,
    pub mandatory_b: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceResult {
    /// `None` when no threshold admits a matching of the mandatory points.
    pub value: Option<f64>,
    pub witness: MatchingWitness,
    pub collar: CollarSpec,
    pub trusted: bool,
    pub diagnostics: MatchDiagnostics,
}

impl DistanceResult {
    pub fn is_feasible(&self) -> bool {
        self.value.is_some()
    }
}

/// Exact `min over bijections of max |a_i - b_σ(i)|` by enumerating every
/// permutation. `None` when the cardinalities differ.
pub fn brute_force_distance(a: &PointConfiguration, b: &PointConfiguration) -> Result<Option<f64>> {
    check_dim(a.dim(), b.dim())?;
    let n = a.len();
    if n > BRUTE_FORCE_MAX || b.len() > BRUTE_FORCE_MAX {
        return Err(Error::TooLarge {
            max: BRUTE_FORCE_MAX,
            got: n.max(b.len()),
        });
    }
    if n != b.len() {
        return Ok(None);
    }
    if n == 0 {
        return Ok(Some(0.0));
    }
    let d: Vec<Vec<f64>> = a
        .points()
        .iter()
        .map(|p| {
            b.points()
                .iter()
                .map(|q| distance(p.coords(), q.coords()))
                .collect()
        })
        .collect();
    let best = (0..n)
        .permutations(n)
        .map(|perm| {
            perm.iter()
                .enumerate()
                .map(|(i, &j)| d[i][j])
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(Some(best))
}

fn check_pair(a: &PointConfiguration, b: &PointConfiguration) -> Result<()> {
    check_dim(a.dim(), b.dim())?;
    if a.window() != b.window() {
        return Err(Error::WindowMismatch);
    }
    Ok(())
}

/// Mandatory flags: points inside `W_{-width}`. A zero collar makes every
/// point mandatory.
pub(crate) fn mandatory_flags(c: &PointConfiguration, collar: CollarSpec) -> Vec<bool> {
    if collar.width == 0.0 {
        return vec![true; c.len()];
    }
    match c.window().shrink(collar.width) {
        None => vec![false; c.len()],
        Some(inner) => c.points().iter().map(|p| inner.contains(p.coords())).collect(),
    }
}

/// Candidate pair `(i, j, d)` with `d = |a_i - b_j|`.
type Pair = (usize, usize, f64);

fn pairs_within(a: &PointConfiguration, b: &PointConfiguration, radius: f64, strict: bool) -> Vec<Pair> {
    let index = GridIndex::new(b.points(), radius);
    let mut out = Vec::new();
    for (i, p) in a.points().iter().enumerate() {
        index.for_each_within(p.coords(), radius, |j, d| {
            if !strict || d < radius {
                out.push((i, j, d));
            }
        });
    }
    out
}

fn solve(
    a: &PointConfiguration,
    b: &PointConfiguration,
    pairs: &[Pair],
    ma: &[bool],
    mb: &[bool],
) -> Option<MatchingWitness> {
    let mut adj = vec![Vec::new(); a.len()];
    for &(i, j, _) in pairs {
        adj[i].push(j);
    }
    let m = cover_mandatory(&adj, b.len(), ma, mb)?;
    let pairs = m.pairs();
    let unmatched_a = (0..a.len()).filter(|&i| m.mate_left[i].is_none()).collect();
    let unmatched_b = (0..b.len()).filter(|&j| m.mate_right[j].is_none()).collect();
    Some(MatchingWitness {
        pairs,
        unmatched_a,
        unmatched_b,
    })
}

/// Is there a partial bijection covering every mandatory point of both sides
/// with all pair distances `<= eps`?
pub fn matching_feasible(
    a: &PointConfiguration,
    b: &PointConfiguration,
    eps: f64,
    collar: CollarSpec,
) -> Result<Option<MatchingWitness>> {
    feasible_at(a, b, eps, false, collar)
}

/// Same as [`matching_feasible`] with the strict bound `< eps`, which is the
/// form the almost-period definition uses.
pub fn matching_feasible_below(
    a: &PointConfiguration,
    b: &PointConfiguration,
    eps: f64,
    collar: CollarSpec,
) -> Result<Option<MatchingWitness>> {
    feasible_at(a, b, eps, true, collar)
}

fn feasible_at(
    a: &PointConfiguration,
    b: &PointConfiguration,
    eps: f64,
    strict: bool,
    collar: CollarSpec,
) -> Result<Option<MatchingWitness>> {
    check_pair(a, b)?;
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::InvalidParameter(format!("eps must be non-negative, got {eps}")));
    }
    let ma = mandatory_flags(a, collar);
    let mb = mandatory_flags(b, collar);
    let need_a = ma.iter().filter(|&&m| m).count();
    let need_b = mb.iter().filter(|&&m| m).count();
    if need_a > b.len() || need_b > a.len() {
        return Ok(None);
    }
    let pairs = pairs_within(a, b, eps, strict);
    Ok(solve(a, b, &pairs, &ma, &mb))
}

/// Mean distance from points of `a` to their nearest neighbor in `b`
/// (sampled for large inputs).
fn mean_cross_nn(a: &PointConfiguration, b: &PointConfiguration) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let stride = (a.len() / 256).max(1);
    let mut total = 0.0;
    let mut n = 0usize;
    for p in a.points().iter().step_by(stride) {
        let nn = b
            .points()
            .iter()
            .map(|q| distance(p.coords(), q.coords()))
            .fold(f64::INFINITY, f64::min);
        total += nn;
        n += 1;
    }
    total / n as f64
}

fn span(a: &PointConfiguration, b: &PointConfiguration) -> f64 {
    let k = a.dim();
    let mut lo = vec![f64::INFINITY; k];
    let mut hi = vec![f64::NEG_INFINITY; k];
    for p in a.points().iter().chain(b.points()) {
        for (i, &x) in p.coords().iter().enumerate() {
            lo[i] = lo[i].min(x);
            hi[i] = hi[i].max(x);
        }
    }
    lo.iter()
        .zip(&hi)
        .map(|(l, h)| (h - l).max(0.0).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Smallest threshold `t` at which [`matching_feasible`] holds, with a
/// witness attaining it.
///
/// The optimum is always a realized pair distance, so the search bisects the
/// sorted list of pair distances below a cap. The cap starts at twice the
/// mean cross nearest-neighbor distance and doubles until feasible or until
/// it covers every pair.
pub fn bottleneck_distance(
    a: &PointConfiguration,
    b: &PointConfiguration,
    collar: CollarSpec,
) -> Result<DistanceResult> {
    check_pair(a, b)?;
    let ma = mandatory_flags(a, collar);
    let mb = mandatory_flags(b, collar);
    let diagnostics = MatchDiagnostics {
        len_a: a.len(),
        len_b: b.len(),
        mandatory_a: ma.iter().filter(|&&m| m).count(),
        mandatory_b: mb.iter().filter(|&&m| m).count(),
    };
    let trusted_for = |value: f64| {
        value <= collar.width || (collar.width == 0.0 && a.len() == b.len())
    };
    let infeasible = || DistanceResult {
        value: None,
        witness: MatchingWitness::default(),
        collar,
        trusted: false,
        diagnostics,
    };

    if diagnostics.mandatory_a > b.len() || diagnostics.mandatory_b > a.len() {
        return Ok(infeasible());
    }
    if diagnostics.mandatory_a == 0 && diagnostics.mandatory_b == 0 {
        return Ok(DistanceResult {
            value: Some(0.0),
            witness: MatchingWitness {
                pairs: Vec::new(),
                unmatched_a: (0..a.len()).collect(),
                unmatched_b: (0..b.len()).collect(),
            },
            collar,
            trusted: trusted_for(0.0),
            diagnostics,
        });
    }

    // padded so rounding never leaves a pair outside the final cap
    let full = span(a, b) * (1.0 + 1e-9);
    let mut cap = 2.0 * mean_cross_nn(a, b);
    if cap.is_nan() || cap <= 0.0 {
        cap = if full > 0.0 { full * 1e-6 } else { 1.0 };
    }
    loop {
        let covers_all = cap >= full;
        let mut pairs = pairs_within(a, b, cap, false);
        pairs.sort_by(|x, y| x.2.total_cmp(&y.2));
        if solve(a, b, &pairs, &ma, &mb).is_some() {
            let mut values: Vec<f64> = pairs.iter().map(|p| p.2).collect();
            values.dedup();
            let prefix = |t: f64| pairs.partition_point(|p| p.2 <= t);
            let (mut lo, mut hi) = (0usize, values.len() - 1);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if solve(a, b, &pairs[..prefix(values[mid])], &ma, &mb).is_some() {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            let witness = solve(a, b, &pairs[..prefix(values[lo])], &ma, &mb)
                .expect("feasible at the located threshold");
            let value = witness.max_pair_distance(a, b);
            return Ok(DistanceResult {
                value: Some(value),
                witness,
                collar,
                trusted: trusted_for(value),
                diagnostics,
            });
        }
        if covers_all {
            return Ok(infeasible());
        }
        cap = if cap * 2.0 >= full { full } else { cap * 2.0 };
    }
}
