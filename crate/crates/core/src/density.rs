//! Counting statistics on a window. Cube densities come with a shift
//! diagnostic; convex shapes give empirical discrepancy constants.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pointset::{check_dim, Point, PointConfiguration, Window, WindowKind};
use crate::scanner::closed_grid;
use crate::spatial::GridIndex;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensitySample {
    pub t: f64,
    pub alpha: Point,
    pub count: usize,
    /// `count / T^k`
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub samples: Vec<DensitySample>,
    /// Ratio of the origin cube at the largest T.
    pub extrapolated: f64,
    /// `max_α |ratio(α, T_max) - ratio(0, T_max)|`
    pub max_shift_deviation: f64,
    /// Origin-cube ratios by increasing T.
    pub trend: Vec<(f64, f64)>,
    /// Change between the two largest T; a finite-size indicator, not an error bound.
    pub last_change: f64,
    /// Zero density rules the input out as almost periodic.
    pub zero_density: bool,
}

/// Counts in `Q(α, T)` for every α (plus the origin) and every T.
pub fn density_estimate(d: &PointConfiguration, alphas: &[Point], ts: &[f64]) -> Result<DensityEstimate> {
    let k = d.dim();
    if ts.is_empty() {
        return Err(Error::InvalidParameter("need at least one cube size".into()));
    }
    if let Some(t) = ts.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::InvalidParameter(format!("cube size must be positive, got {t}")));
    }
    let origin = Point::origin(k);
    let mut all_alphas = vec![origin.clone()];
    for a in alphas {
        check_dim(k, a.dim())?;
        if *a != origin {
            all_alphas.push(a.clone());
        }
    }
    let mut ts_sorted = ts.to_vec();
    ts_sorted.sort_by(f64::total_cmp);
    ts_sorted.dedup();

    let jobs: Vec<(f64, Point)> = ts_sorted
        .iter()
        .flat_map(|&t| all_alphas.iter().map(move |a| (t, a.clone())))
        .collect();
    let samples: Vec<DensitySample> = jobs
        .into_par_iter()
        .map(|(t, alpha)| {
            let cube = Window::cube(alpha.clone(), t)?;
            if !d.window().contains_window(&cube) {
                return Err(Error::WindowTooSmall(format!(
                    "cube Q({:?}, {t}) exceeds the configuration window",
                    alpha.coords()
                )));
            }
            let count = d.count_in(&cube)?;
            Ok(DensitySample {
                t,
                alpha,
                count,
                ratio: count as f64 / t.powi(k as i32),
            })
        })
        .collect::<Result<_>>()?;

    let t_max = *ts_sorted.last().unwrap();
    let at = |t: f64, a: &Point| {
        samples
            .iter()
            .find(|s| s.t == t && s.alpha == *a)
            .map(|s| s.ratio)
            .expect("sample present")
    };
    let extrapolated = at(t_max, &origin);
    let max_shift_deviation = all_alphas
        .iter()
        .map(|a| (at(t_max, a) - extrapolated).abs())
        .fold(0.0, f64::max);
    let trend: Vec<(f64, f64)> = ts_sorted.iter().map(|&t| (t, at(t, &origin))).collect();
    let last_change = match trend.len() {
        0 | 1 => 0.0,
        n => (trend[n - 1].1 - trend[n - 2].1).abs(),
    };
    Ok(DensityEstimate {
        samples,
        extrapolated,
        max_shift_deviation,
        trend,
        last_change,
        zero_density: extrapolated == 0.0,
    })
}

/// Centers `step = radius/2` apart covering `W_{-radius}`.
pub fn default_centers(window: &Window, radius: f64) -> Vec<Point> {
    let Some(inner) = window.shrink(radius) else {
        return Vec::new();
    };
    let cube = Window {
        kind: WindowKind::Cube,
        center: inner.center.clone(),
        extent: 2.0 * inner.half_width(),
    };
    closed_grid(&cube, 0.5 * radius, 0.0)
        .into_iter()
        .filter(|c| inner.kind == WindowKind::Cube || inner.contains(c.coords()))
        .collect()
}

/// `max_c card(D ∩ B(c, radius))` over the given centers (or the default grid).
pub fn local_count_max(d: &PointConfiguration, centers: Option<&[Point]>, radius: f64) -> Result<usize> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let owned;
    let centers = match centers {
        Some(c) => c,
        None => {
            owned = default_centers(d.window(), radius);
            &owned
        }
    };
    let index = GridIndex::new(d.points(), radius);
    centers
        .par_iter()
        .map(|c| {
            check_dim(d.dim(), c.dim())?;
            let mut n = 0usize;
            index.for_each_within(c.coords(), radius, |_, dist| {
                if dist < radius {
                    n += 1;
                }
            });
            Ok(n)
        })
        .try_reduce(|| 0, |a, b| Ok(a.max(b)))
}

/// A bounded convex region that can be counted, measured and shifted.
pub trait ConvexShape: Sync {
    fn contains(&self, x: &[f64]) -> bool;
    fn diameter(&self) -> f64;
    fn translated(&self, t: &Point) -> Result<Self>
    where
        Self: Sized;
    fn fits_in(&self, window: &Window) -> bool;
    fn describe(&self) -> String;
}

impl ConvexShape for Window {
    fn contains(&self, x: &[f64]) -> bool {
        Window::contains(self, x)
    }

    fn diameter(&self) -> f64 {
        Window::diameter(self)
    }

    fn translated(&self, t: &Point) -> Result<Self> {
        self.translate(t)
    }

    fn fits_in(&self, window: &Window) -> bool {
        window.contains_window(self)
    }

    fn describe(&self) -> String {
        match self.kind {
            WindowKind::Cube => format!("cube(edge={})", self.extent),
            WindowKind::Ball => format!("ball(radius={})", self.extent),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyObservation {
    pub shape: String,
    pub diameter: f64,
    pub shift: Point,
    pub base_count: usize,
    pub shifted_count: usize,
    pub delta: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub family: String,
    pub dim: usize,
    pub observed: Vec<DiscrepancyObservation>,
    /// `max |Δcard| / (diam^(k-1) + 1)`
    pub fitted_c: f64,
}

fn normalized(delta: usize, diameter: f64, k: usize) -> f64 {
    delta as f64 / (diameter.powi(k as i32 - 1) + 1.0)
}

impl DiscrepancyReport {
    /// Fitted constant restricted to shapes with `lo <= diam < hi`.
    pub fn fitted_c_in(&self, lo: f64, hi: f64) -> f64 {
        self.observed
            .iter()
            .filter(|o| o.diameter >= lo && o.diameter < hi)
            .map(|o| normalized(o.delta, o.diameter, self.dim))
            .fold(0.0, f64::max)
    }
}

/// `|card(D ∩ E) - card(D ∩ (E + t))|` for every shape and shift.
pub fn discrepancy_scan<S: ConvexShape>(
    d: &PointConfiguration,
    shapes: &[S],
    shifts: &[Point],
) -> Result<DiscrepancyReport> {
    let k = d.dim();
    for t in shifts {
        check_dim(k, t.dim())?;
    }
    let count = |s: &S| d.points().iter().filter(|p| s.contains(p.coords())).count();
    let observed: Vec<Vec<DiscrepancyObservation>> = shapes
        .par_iter()
        .map(|e| {
            if !e.fits_in(d.window()) {
                return Err(Error::WindowTooSmall(format!("{} exceeds the window", e.describe())));
            }
            let base = count(e);
            shifts
                .iter()
                .map(|t| {
                    let moved = e.translated(t)?;
                    if !moved.fits_in(d.window()) {
                        return Err(Error::WindowTooSmall(format!(
                            "{} shifted by {:?} exceeds the window",
                            e.describe(),
                            t.coords()
                        )));
                    }
                    let shifted = count(&moved);
                    Ok(DiscrepancyObservation {
                        shape: e.describe(),
                        diameter: e.diameter(),
                        shift: t.clone(),
                        base_count: base,
                        shifted_count: shifted,
                        delta: base.abs_diff(shifted),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let observed: Vec<DiscrepancyObservation> = observed.into_iter().flatten().collect();
    let fitted_c = observed
        .iter()
        .map(|o| normalized(o.delta, o.diameter, k))
        .fold(0.0, f64::max);
    let family = shapes
        .first()
        .map(|s| s.describe().split('(').next().unwrap_or("shape").to_string())
        .unwrap_or_else(|| "none".into());
    Ok(DiscrepancyReport {
        family,
        dim: k,
        observed,
        fitted_c,
    })
}
