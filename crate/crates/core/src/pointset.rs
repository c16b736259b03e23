//! Finite windowed stand-ins for discrete multiple sets.
//!
//! A [`PointConfiguration`] is a finite multiset of points confined to a
//! [`Window`]. Cubes are half-open (`c - L/2 <= y < c + L/2` on every axis),
//! balls are open. Multiplicity is carried by repetition, so index positions
//! are the natural unit for matchings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when comparing window boundaries produced by arithmetic.
const CONTAINMENT_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, factor: f64) -> Point {
        Point(self.0.iter().map(|a| a * factor).collect())
    }

    pub fn neg(&self) -> Point {
        self.scale(-1.0)
    }

    pub fn distance(&self, other: &Point) -> f64 {
        distance(&self.0, &other.0)
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point(coords)
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point(vec![x])
    }
}

/// Euclidean distance. Every module measures pair distances through this one
/// function so that thresholds compare bit-identical values.
#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Cube,
    Ball,
}

/// An axis-aligned cube `Q(center, extent)` or an open ball `B(center, extent)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub kind: WindowKind,
    pub center: Point,
    pub extent: f64,
}

impl Window {
    pub fn new(kind: WindowKind, center: Point, extent: f64) -> Result<Self> {
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidWindow(format!(
                "extent must be positive and finite, got {extent}"
            )));
        }
        if center.dim() == 0 {
            return Err(Error::InvalidWindow("center has no coordinates".into()));
        }
        if !center.is_finite() {
            return Err(Error::InvalidWindow("center is not finite".into()));
        }
        Ok(Window {
            kind,
            center,
            extent,
        })
    }

    /// Half-open cube with edge length `edge`.
    pub fn cube(center: impl Into<Point>, edge: f64) -> Result<Self> {
        Self::new(WindowKind::Cube, center.into(), edge)
    }

    /// Open ball with the given radius.
    pub fn ball(center: impl Into<Point>, radius: f64) -> Result<Self> {
        Self::new(WindowKind::Ball, center.into(), radius)
    }

    /// Cube `[lo, hi)` in one dimension.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::cube(0.5 * (lo + hi), hi - lo)
    }

    /// Half-open cube `[lo, hi)^dim`.
    pub fn symmetric_cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::cube(Point(vec![0.5 * (lo + hi); dim]), hi - lo)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Distance from the center to the boundary along an axis.
    pub fn half_width(&self) -> f64 {
        match self.kind {
            WindowKind::Cube => 0.5 * self.extent,
            WindowKind::Ball => self.extent,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dim());
        let c = self.center.coords();
        match self.kind {
            WindowKind::Cube => {
                let h = 0.5 * self.extent;
                x.iter()
                    .zip(c)
                    .all(|(&xi, &ci)| ci - h <= xi && xi < ci + h)
            }
            WindowKind::Ball => distance(x, c) < self.extent,
        }
    }

    pub fn translate(&self, tau: &Point) -> Result<Window> {
        check_dim(self.dim(), tau.dim())?;
        Ok(Window {
            kind: self.kind,
            center: self.center.add(tau),
            extent: self.extent,
        })
    }

    /// The inner window `W_{-rho} = { x : B(x, rho) ⊂ W }`, or `None` when it is empty.
    pub fn shrink(&self, rho: f64) -> Option<Window> {
        assert!(rho >= 0.0, "shrink radius must be non-negative");
        if rho == 0.0 {
            return Some(self.clone());
        }
        let extent = match self.kind {
            WindowKind::Cube => self.extent - 2.0 * rho,
            WindowKind::Ball => self.extent - rho,
        };
        (extent > 0.0).then(|| Window {
            kind: self.kind,
            center: self.center.clone(),
            extent,
        })
    }

    /// The outer window `W_rho`, enlarged by `rho` in every direction.
    pub fn dilate(&self, rho: f64) -> Window {
        assert!(rho >= 0.0, "dilation radius must be non-negative");
        let extent = match self.kind {
            WindowKind::Cube => self.extent + 2.0 * rho,
            WindowKind::Ball => self.extent + rho,
        };
        Window {
            kind: self.kind,
            center: self.center.clone(),
            extent,
        }
    }

    /// Axis-aligned bounding box as `(lo, hi)` corner vectors.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let h = self.half_width();
        let c = self.center.coords();
        (
            c.iter().map(|ci| ci - h).collect(),
            c.iter().map(|ci| ci + h).collect(),
        )
    }

    pub fn diameter(&self) -> f64 {
        match self.kind {
            WindowKind::Cube => self.extent * (self.dim() as f64).sqrt(),
            WindowKind::Ball => 2.0 * self.extent,
        }
    }

    pub fn volume(&self) -> f64 {
        let k = self.dim();
        match self.kind {
            WindowKind::Cube => self.extent.powi(k as i32),
            WindowKind::Ball => unit_ball_volume(k) * self.extent.powi(k as i32),
        }
    }

    /// Whether `inner` is a subset of `self`, up to a small arithmetic slack.
    pub fn contains_window(&self, inner: &Window) -> bool {
        if inner.dim() != self.dim() {
            return false;
        }
        let slack = CONTAINMENT_SLACK * (1.0 + self.extent.abs());
        let c = self.center.coords();
        let ic = inner.center.coords();
        match (self.kind, inner.kind) {
            (WindowKind::Cube, _) => {
                let h = 0.5 * self.extent;
                let ih = inner.half_width();
                ic.iter()
                    .zip(c)
                    .all(|(&x, &y)| x - ih >= y - h - slack && x + ih <= y + h + slack)
            }
            (WindowKind::Ball, WindowKind::Ball) => {
                distance(c, ic) + inner.extent <= self.extent + slack
            }
            (WindowKind::Ball, WindowKind::Cube) => {
                // farthest corner of the cube from the ball center
                let ih = 0.5 * inner.extent;
                let far: f64 = ic
                    .iter()
                    .zip(c)
                    .map(|(&x, &y)| {
                        let d = (x - y).abs() + ih;
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt();
                far <= self.extent + slack
            }
        }
    }
}

/// Volume of the unit ball in `k` dimensions.
pub fn unit_ball_volume(k: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_k = 2π/k · V_{k-2}
    let mut v = if k.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut j = if k.is_multiple_of(2) { 2 } else { 3 };
    while j <= k {
        v *= 2.0 * std::f64::consts::PI / j as f64;
        j += 2;
    }
    v
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// A finite multiset of points inside a window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointConfiguration {
    dim: usize,
    window: Window,
    points: Vec<Point>,
}

impl PointConfiguration {
    /// Builds a configuration, rejecting points that are non-finite, of the
    /// wrong dimension, or outside the window.
    pub fn new(window: Window, points: Vec<Point>) -> Result<Self> {
        let dim = window.dim();
        for (index, p) in points.iter().enumerate() {
            check_dim(dim, p.dim())?;
            if !p.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if !window.contains(p.coords()) {
                return Err(Error::OutsideWindow { index });
            }
        }
        Ok(PointConfiguration {
            dim,
            window,
            points,
        })
    }

    /// Keeps only the points that fall inside `window`.
    pub fn from_points_clipped(window: Window, points: Vec<Point>) -> Result<Self> {
        let dim = window.dim();
        for p in &points {
            check_dim(dim, p.dim())?;
        }
        let points = points
            .into_iter()
            .filter(|p| p.is_finite() && window.contains(p.coords()))
            .collect();
        Ok(PointConfiguration {
            dim,
            window,
            points,
        })
    }

    pub fn empty(window: Window) -> Self {
        PointConfiguration {
            dim: window.dim(),
            window,
            points: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    /// `{a + tau}` on the translated window. Multiplicities are preserved.
    pub fn translate(&self, tau: &Point) -> Result<Self> {
        check_dim(self.dim, tau.dim())?;
        Ok(PointConfiguration {
            dim: self.dim,
            window: self.window.translate(tau)?,
            points: self.points.iter().map(|p| p.add(tau)).collect(),
        })
    }

    /// Keeps exactly the points (with multiplicity) inside `region`; the
    /// region becomes the new window.
    pub fn restrict(&self, region: &Window) -> Result<Self> {
        check_dim(self.dim, region.dim())?;
        Ok(PointConfiguration {
            dim: self.dim,
            window: region.clone(),
            points: self
                .points
                .iter()
                .filter(|p| region.contains(p.coords()))
                .cloned()
                .collect(),
        })
    }

    /// Cardinality, with multiplicity, of the points inside `region`.
    pub fn count_in(&self, region: &Window) -> Result<usize> {
        check_dim(self.dim, region.dim())?;
        Ok(self
            .points
            .iter()
            .filter(|p| region.contains(p.coords()))
            .count())
    }

    /// Union of two configurations on the window of `self`.
    pub fn union(&self, other: &PointConfiguration) -> Result<Self> {
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        PointConfiguration::new(self.window.clone(), points)
    }

    /// Same points on a different window (which must contain them all).
    pub fn with_window(&self, window: Window) -> Result<Self> {
        PointConfiguration::new(window, self.points.clone())
    }

    /// Points sorted lexicographically; handy for multiset comparisons.
    pub fn sorted_points(&self) -> Vec<Point> {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| {
            a.coords()
                .iter()
                .zip(b.coords())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        pts
    }
}
