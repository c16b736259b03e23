//! Uniform hash grid for fixed-radius neighbor queries.

use std::collections::HashMap;

use crate::pointset::{distance, Point};

/// Buckets point indices by the integer cell `floor(x / cell)` on every axis.
#[derive(Debug)]
pub struct GridIndex<'a> {
    points: &'a [Point],
    cell: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl<'a> GridIndex<'a> {
    /// `cell` is clamped away from zero; a larger cell only costs extra
    /// candidate checks, never a missed neighbor.
    pub fn new(points: &'a [Point], cell: f64) -> Self {
        let scale = points
            .iter()
            .flat_map(|p| p.coords().iter())
            .fold(0.0f64, |m, x| m.max(x.abs()));
        let cell = cell.max(1e-9 * (1.0 + scale));
        let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(cell_key(p.coords(), cell)).or_default().push(i);
        }
        GridIndex {
            points,
            cell,
            buckets,
        }
    }

    pub fn points(&self) -> &'a [Point] {
        self.points
    }

    /// Calls `f(index, distance)` for every indexed point within `radius`
    /// (inclusive) of `center`.
    pub fn for_each_within(&self, center: &[f64], radius: f64, mut f: impl FnMut(usize, f64)) {
        let pad = radius * 1e-12 + 1e-300;
        let lo: Vec<i64> = center
            .iter()
            .map(|&c| ((c - radius - pad) / self.cell).floor() as i64)
            .collect();
        let hi: Vec<i64> = center
            .iter()
            .map(|&c| ((c + radius + pad) / self.cell).floor() as i64)
            .collect();
        let cells: i64 = lo.iter().zip(&hi).map(|(l, h)| h - l + 1).product();
        if cells as usize > 4 * self.buckets.len() + 16 {
            // query box dwarfs the occupied cells: scan buckets instead
            for (key, bucket) in &self.buckets {
                if key.iter().zip(lo.iter().zip(&hi)).all(|(k, (l, h))| l <= k && k <= h) {
                    self.visit(bucket, center, radius, &mut f);
                }
            }
            return;
        }
        let mut key = lo.clone();
        loop {
            if let Some(bucket) = self.buckets.get(&key) {
                self.visit(bucket, center, radius, &mut f);
            }
            // odometer increment
            let mut axis = 0;
            loop {
                if axis == key.len() {
                    return;
                }
                key[axis] += 1;
                if key[axis] <= hi[axis] {
                    break;
                }
                key[axis] = lo[axis];
                axis += 1;
            }
        }
    }

    fn visit(&self, bucket: &[usize], center: &[f64], radius: f64, f: &mut impl FnMut(usize, f64)) {
        for &j in bucket {
            let d = distance(center, self.points[j].coords());
            if d <= radius {
                f(j, d);
            }
        }
    }

    /// Indices within `radius` of `center`, in ascending order.
    pub fn within(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(center, radius, |j, _| out.push(j));
        out.sort_unstable();
        out
    }
}

fn cell_key(x: &[f64], cell: f64) -> Vec<i64> {
    x.iter().map(|&c| (c / cell).floor() as i64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matches_brute_force(
            pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 0..60),
            center in prop::collection::vec(-6.0f64..6.0, 2),
            radius in 0.0f64..3.0,
            cell in 0.05f64..4.0,
        ) {
            let pts: Vec<Point> = pts.into_iter().map(Point::new).collect();
            let index = GridIndex::new(&pts, cell);
            let expected: Vec<usize> = (0..pts.len())
                .filter(|&j| distance(&center, pts[j].coords()) <= radius)
                .collect();
            prop_assert_eq!(index.within(&center, radius), expected);
        }
    }
}
