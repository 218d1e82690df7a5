//! Closed convex subsets of the dual space, held as membership predicates
//! with optional exact views.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use crate::numerics::{interval_hausdorff_distance, ExtReal, Grid, Tolerances, XInterval};

pub type Membership = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
pub type SupportFn = Arc<dyn Fn(&[f64]) -> ExtReal + Send + Sync>;

#[derive(Clone)]
pub struct DualSet {
    dim: usize,
    member: Membership,
    interval: Option<XInterval>,
    support: Option<SupportFn>,
    /// Some part of the computation hit the window boundary.
    pub window_flagged: bool,
    /// Hausdorff gap between two independent evaluation routes, if both ran.
    pub route_gap: Option<f64>,
}

impl fmt::Debug for DualSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DualSet")
            .field("dim", &self.dim)
            .field("interval", &self.interval)
            .field("window_flagged", &self.window_flagged)
            .field("route_gap", &self.route_gap)
            .finish()
    }
}

/// Result of comparing two sets on the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetComparison {
    pub hausdorff: f64,
    pub agree: bool,
}

impl DualSet {
    pub fn from_membership(dim: usize, member: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        DualSet {
            dim,
            member: Arc::new(member),
            interval: None,
            support: None,
            window_flagged: false,
            route_gap: None,
        }
    }

    pub fn from_interval(iv: XInterval) -> Self {
        let c = iv;
        let mut s = DualSet::from_membership(1, move |x| c.contains(x[0]));
        s.interval = Some(iv);
        s
    }

    pub fn empty(dim: usize) -> Self {
        let mut s = DualSet::from_membership(dim, |_| false);
        if dim == 1 {
            s.interval = Some(XInterval::Empty);
        }
        s
    }

    pub fn with_interval(mut self, iv: XInterval) -> Self {
        self.interval = Some(iv);
        self
    }

    pub fn with_support(mut self, h: impl Fn(&[f64]) -> ExtReal + Send + Sync + 'static) -> Self {
        self.support = Some(Arc::new(h));
        self
    }

    pub fn flagged(mut self, flag: bool) -> Self {
        self.window_flagged |= flag;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (self.member)(x)
    }

    pub fn membership(&self) -> Membership {
        self.member.clone()
    }

    /// Known support function, if one was attached.
    pub fn support(&self, d: &[f64]) -> Option<ExtReal> {
        self.support.as_ref().map(|h| h(d))
    }

    /// The 1D interval view, if attached.
    pub fn interval(&self) -> Option<XInterval> {
        self.interval
    }

    /// The 1D interval view, extracting it from membership when absent.
    pub fn interval_on_window(&self, tol: &Tolerances) -> XInterval {
        match self.interval {
            Some(iv) => iv,
            None => extract_interval(&*self.member, tol.window_radius, &[], 2000),
        }
    }

    /// Members among the points of a grid.
    pub fn raster(&self, grid: &Grid) -> Vec<bool> {
        grid.points().map(|p| self.contains(&p)).collect()
    }

    /// Intersection of several sets of equal dimension.
    pub fn intersection(sets: Vec<DualSet>) -> DualSet {
        let dim = sets.first().map_or(1, |s| s.dim);
        let flagged = sets.iter().any(|s| s.window_flagged);
        let iv = if sets.iter().all(|s| s.interval.is_some()) && dim == 1 {
            Some(sets.iter().fold(XInterval::whole(), |acc, s| acc.intersect(&s.interval.unwrap())))
        } else {
            None
        };
        let members: Vec<Membership> = sets.into_iter().map(|s| s.member).collect();
        let mut out = DualSet::from_membership(dim, move |x| members.iter().all(|m| m(x)));
        out.interval = iv;
        out.window_flagged = flagged;
        out
    }

    /// Union of several sets (not necessarily convex).
    pub fn union(dim: usize, sets: Vec<DualSet>) -> DualSet {
        let flagged = sets.iter().any(|s| s.window_flagged);
        let members: Vec<Membership> = sets.into_iter().map(|s| s.member).collect();
        let mut out = DualSet::from_membership(dim, move |x| members.iter().any(|m| m(x)));
        out.window_flagged = flagged;
        out
    }

    /// Hausdorff comparison on the window. In 1D the interval views are
    /// compared exactly; otherwise both sets are rasterised on the dual
    /// window grid and agreement means a gap of at most one grid cell.
    pub fn compare(&self, other: &DualSet, tol: &Tolerances) -> SetComparison {
        if self.dim == 1 && other.dim == 1 {
            let a = self.interval_on_window(tol);
            let b = other.interval_on_window(tol);
            let h = interval_hausdorff_distance(&a, &b, tol.window_radius);
            return SetComparison { hausdorff: h, agree: h <= tol.set_tol };
        }
        let grid = tol.window_grid(self.dim);
        let a = self.raster(&grid);
        let b = other.raster(&grid);
        let h = raster_hausdorff(&grid, &a, &b);
        let cell = grid.max_step() * (self.dim as f64).sqrt();
        SetComparison { hausdorff: h, agree: h <= tol.set_tol.max(cell * (1.0 + 1e-9)) }
    }
}

/// Extract a closed interval from a convex membership predicate on
/// `[-radius, radius]`. A member at a window edge makes that end unbounded.
pub fn extract_interval(member: &dyn Fn(&[f64]) -> bool, radius: f64, seeds: &[f64], cells: usize) -> XInterval {
    let m = |v: f64| member(&[v]);
    let mut inside = seeds.iter().copied().filter(|s| s.abs() <= radius && m(*s)).next();
    if inside.is_none() {
        for i in 0..=cells {
            let v = -radius + 2.0 * radius * i as f64 / cells as f64;
            if m(v) {
                inside = Some(v);
                break;
            }
        }
    }
    let Some(c) = inside else { return XInterval::Empty };
    let step = 2.0 * radius / cells as f64;
    let edge = |dir: f64| -> ExtReal {
        let end = dir * radius;
        if m(end) {
            return if dir > 0.0 { ExtReal::PosInf } else { ExtReal::NegInf };
        }
        // walk outwards to bracket, then bisect
        let mut a = c;
        let mut b = c + dir * step;
        while (b - end) * dir < 0.0 && m(b) {
            a = b;
            b += dir * step;
        }
        if (b - end) * dir >= 0.0 {
            b = end;
        }
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if m(mid) {
                a = mid;
            } else {
                b = mid;
            }
            if (b - a).abs() <= 1e-11 * (1.0 + a.abs()) {
                break;
            }
        }
        ExtReal::Finite(a)
    };
    let hi = edge(1.0);
    let lo = edge(-1.0);
    XInterval::new(lo, hi)
}

/// Hausdorff distance between two rasters, measured in grid steps.
pub fn raster_hausdorff(grid: &Grid, a: &[bool], b: &[bool]) -> f64 {
    let na = a.iter().filter(|v| **v).count();
    let nb = b.iter().filter(|v| **v).count();
    if na == 0 && nb == 0 {
        return 0.0;
    }
    if na == 0 || nb == 0 {
        return f64::INFINITY;
    }
    let da = cell_distance(grid, b);
    let db = cell_distance(grid, a);
    let mut worst = 0usize;
    for k in 0..a.len() {
        if a[k] {
            worst = worst.max(da[k]);
        }
        if b[k] {
            worst = worst.max(db[k]);
        }
    }
    worst as f64 * grid.max_step() * (grid.dim() as f64).sqrt()
}

/// Chebyshev distance in cells from every grid point to the nearest marked point.
fn cell_distance(grid: &Grid, marked: &[bool]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; marked.len()];
    let mut queue = VecDeque::new();
    for (k, m) in marked.iter().enumerate() {
        if *m {
            dist[k] = 0;
            queue.push_back(k);
        }
    }
    let d = grid.dim();
    let lens: Vec<isize> = grid.axes().iter().map(|a| a.len() as isize).collect();
    let offsets: Vec<Vec<isize>> = (0..3usize.pow(d as u32))
        .map(|mut c| {
            (0..d)
                .map(|_| {
                    let o = (c % 3) as isize - 1;
                    c /= 3;
                    o
                })
                .collect::<Vec<isize>>()
        })
        .filter(|o| o.iter().any(|v| *v != 0))
        .collect();
    while let Some(k) = queue.pop_front() {
        let idx = grid.multi_index(k);
        for o in &offsets {
            let mut j = Vec::with_capacity(d);
            let mut ok = true;
            for i in 0..d {
                let v = idx[i] as isize + o[i];
                if v < 0 || v >= lens[i] {
                    ok = false;
                    break;
                }
                j.push(v as usize);
            }
            if !ok {
                continue;
            }
            let n = grid.flat_index(&j);
            if dist[n] == usize::MAX {
                dist[n] = dist[k] + 1;
                queue.push_back(n);
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extract_bounded_and_unbounded() {
        let iv = extract_interval(&|x: &[f64]| x[0] >= -1.25 && x[0] <= 0.5, 10.0, &[], 2000);
        let (lo, hi) = iv.bounds().unwrap();
        assert!((lo.to_f64() + 1.25).abs() < 1e-9 && (hi.to_f64() - 0.5).abs() < 1e-9);
        let ray = extract_interval(&|x: &[f64]| x[0] <= -0.25, 10.0, &[], 2000);
        assert_eq!(ray.bounds().unwrap().0, ExtReal::NegInf);
        assert!((ray.bounds().unwrap().1.to_f64() + 0.25).abs() < 1e-9);
        assert!(extract_interval(&|_: &[f64]| false, 10.0, &[], 100).is_empty());
    }

    #[test]
    fn extract_single_point_from_seed() {
        let iv = extract_interval(&|x: &[f64]| x[0] == 0.3, 10.0, &[0.3], 2000);
        assert_eq!(iv, XInterval::point(0.3));
    }

    #[test]
    fn raster_compare_within_a_cell() {
        let tol = Tolerances::default();
        let a = DualSet::from_membership(2, |x| x[0] * x[0] + x[1] * x[1] <= 1.0);
        let b = DualSet::from_membership(2, |x| x[0] * x[0] + x[1] * x[1] <= 1.0 + 1e-6);
        assert!(a.compare(&b, &tol).agree);
        let c = DualSet::from_membership(2, |x| x[0] * x[0] + x[1] * x[1] <= 4.0);
        let cmp = a.compare(&c, &tol);
        assert!(!cmp.agree && cmp.hausdorff > 0.9);
    }
}
