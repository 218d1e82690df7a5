//! Brute-force reference sets computed straight from their defining
//! inequalities over a primal grid. Nothing here goes through conjugates or
//! support functions; only `ConvexFn::eval` and set membership are shared
//! with the rest of the crate.

use crate::dual::{raster_hausdorff, DualSet};
use crate::error::{check_dim, Error, Result};
use crate::functions::ConvexFn;
use crate::numerics::{dot, interval_hausdorff_distance, ExtReal, Grid, Tolerances, XInterval};
use crate::parametric::ParametricProblem;
use crate::sets::ConvexSetDesc;

#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub primal_grid: Grid,
    pub dual_grid: Grid,
    /// Extra fine grid around `x̄` for the point-based references.
    pub local_grid: Option<Grid>,
    /// Added to the right-hand side of every quantified inequality.
    pub slack: f64,
}

impl OracleConfig {
    pub fn new(primal_grid: Grid, dual_grid: Grid, slack: f64) -> Result<Self> {
        check_dim(primal_grid.dim(), dual_grid.dim())?;
        if !(slack >= 0.0 && slack.is_finite()) {
            return Err(Error::InvalidInput(format!("slack must be finite and >= 0, got {slack}")));
        }
        Ok(OracleConfig { primal_grid, dual_grid, local_grid: None, slack })
    }

    /// Grids sized for the window of `tol`. The primal grid reaches well
    /// past the dual window so that truncating the quantifier stays below
    /// one dual cell in 1D; a fine local grid resolves the geometry near
    /// `x̄`.
    pub fn for_window(dim: usize, tol: &Tolerances) -> Result<Self> {
        let r = tol.window_radius;
        let (primal, local, dual) = match dim {
            1 => (Grid::symmetric(1, 100.0 * r, 400_000)?, Grid::symmetric(1, 1.0, 2000)?, tol.window_grid(1)),
            2 => (Grid::symmetric(2, 4.0 * r, 400)?, Grid::symmetric(2, 2.0, 400)?, Grid::symmetric(2, r, 40)?),
            3 => (Grid::symmetric(3, 2.0 * r, 40)?, Grid::symmetric(3, 1.0, 40)?, Grid::symmetric(3, r, 10)?),
            _ => return Err(Error::InvalidGrid(format!("dimension {dim} is not supported"))),
        };
        let mut cfg = OracleConfig::new(primal, dual, 1e-9)?;
        cfg.local_grid = Some(local);
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.primal_grid.dim()
    }
}

/// Constraints `<x*, a> <= b` collected from the primal grid.
struct Constraints {
    dim: usize,
    rows: Vec<(Vec<f64>, f64)>,
}

impl Constraints {
    fn contains(&self, xs: &[f64]) -> bool {
        self.rows.iter().all(|(a, b)| dot(xs, a) <= *b)
    }

    /// Exact intersection of the half-lines in 1D.
    fn interval(&self) -> XInterval {
        let mut lo = ExtReal::NegInf;
        let mut hi = ExtReal::PosInf;
        for (a, b) in &self.rows {
            let a = a[0];
            if a > 0.0 {
                hi = hi.min(ExtReal::new(b / a));
            } else if a < 0.0 {
                lo = lo.max(ExtReal::new(b / a));
            } else if *b < 0.0 {
                return XInterval::Empty;
            }
        }
        XInterval::new(lo, hi)
    }

    fn into_set(self) -> DualSet {
        if self.dim == 1 {
            let iv = self.interval();
            return DualSet::from_interval(iv);
        }
        let dim = self.dim;
        DualSet::from_membership(dim, move |x| self.contains(x))
    }
}

/// The primal and local grids shifted to `x̄`, plus the finite ends of
/// `dom` in 1D.
fn sample_points(cfg: &OracleConfig, x_bar: &[f64], dom: &ConvexSetDesc) -> Vec<Vec<f64>> {
    let shift = |x: Vec<f64>| -> Vec<f64> { x.iter().zip(x_bar).map(|(a, b)| a + b).collect() };
    let mut pts: Vec<Vec<f64>> = cfg.primal_grid.points().map(shift).collect();
    if let Some(g) = &cfg.local_grid {
        pts.extend(g.points().map(shift));
    }
    if dom.dim() == 1 {
        for d in [1.0, -1.0] {
            if let Some(ExtReal::Finite(h)) = dom.support_exact(&[d]) {
                pts.push(vec![d * h]);
            }
        }
    }
    pts
}

/// `{x* : <x*, x - x̄> <= f(x) - f(x̄) + ε for every sample point x}`, the
/// samples being the primal grid shifted to `x̄` (see [`sample_points`]).
pub fn oracle_eps_subdiff(f: &ConvexFn, x_bar: &[f64], eps: f64, cfg: &OracleConfig) -> Result<DualSet> {
    check_dim(f.dim(), x_bar.len())?;
    check_dim(f.dim(), cfg.dim())?;
    let fx = f
        .eval(x_bar)
        .finite()
        .ok_or_else(|| Error::InvalidInput(format!("f is not finite at {x_bar:?}")))?;
    let mut rows = Vec::new();
    for x in sample_points(cfg, x_bar, &f.effective_domain()) {
        if let ExtReal::Finite(v) = f.eval(&x) {
            let a: Vec<f64> = x.iter().zip(x_bar).map(|(p, q)| p - q).collect();
            rows.push((a, v - fx + eps + cfg.slack));
        }
    }
    Ok(Constraints { dim: f.dim(), rows }.into_set())
}

/// `{x* : <x*, x - x̄> <= ε for every sample point x in C}`.
pub fn oracle_eps_normal(set: &ConvexSetDesc, x_bar: &[f64], eps: f64, cfg: &OracleConfig) -> Result<DualSet> {
    check_dim(set.dim(), x_bar.len())?;
    check_dim(set.dim(), cfg.dim())?;
    let mut rows = Vec::new();
    for x in sample_points(cfg, x_bar, set) {
        if set.contains(&x) {
            let a: Vec<f64> = x.iter().zip(x_bar).map(|(p, q)| p - q).collect();
            rows.push((a, eps + cfg.slack));
        }
    }
    // x̄ itself need not be a grid point
    rows.push((vec![0.0; set.dim()], eps + cfg.slack));
    Ok(Constraints { dim: set.dim(), rows }.into_set())
}

/// `{x* : <x*, x> <= 1 for every primal grid point x in A}`.
pub fn oracle_polar(set: &ConvexSetDesc, cfg: &OracleConfig) -> Result<DualSet> {
    check_dim(set.dim(), cfg.dim())?;
    let rows = cfg.primal_grid.points().filter(|x| set.contains(x)).map(|x| (x, 1.0 + cfg.slack)).collect();
    Ok(Constraints { dim: set.dim(), rows }.into_set())
}

/// `sup_x <x*, x> - f(x)` over the primal grid.
pub fn oracle_conjugate(f: &ConvexFn, xs: &[f64], cfg: &OracleConfig) -> Result<ExtReal> {
    check_dim(f.dim(), xs.len())?;
    let mut best = ExtReal::NegInf;
    for x in cfg.primal_grid.points() {
        if let ExtReal::Finite(v) = f.eval(&x) {
            best = best.max(ExtReal::new(dot(xs, &x) - v));
        }
    }
    Ok(best)
}

/// `min_y phi(x, y)` over feasible decision grid points, for every point of
/// the parameter grid (`+inf` where none is feasible).
pub fn oracle_value_fn(p: &ParametricProblem, x_grid: &Grid, y_grid: &Grid) -> Result<Vec<ExtReal>> {
    check_dim(p.m, x_grid.dim())?;
    check_dim(p.k, y_grid.dim())?;
    let ys: Vec<Vec<f64>> = y_grid.points().collect();
    Ok(x_grid
        .points()
        .map(|x| ys.iter().map(|y| p.objective(&x, y)).fold(ExtReal::PosInf, ExtReal::min))
        .collect())
}

/// Agreement of two sets on a dual grid up to dilation by one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilationReport {
    pub hausdorff: f64,
    pub cell: f64,
    /// Grid points where exactly one of the sets has a member.
    pub mismatches: usize,
    pub agree: bool,
}

/// In 1D with interval views on both sides the intervals are compared
/// directly, so that sets thinner than a cell are not lost between grid
/// points.
pub fn dilation_agree(grid: &Grid, a: &DualSet, b: &DualSet) -> DilationReport {
    let ra = a.raster(grid);
    let rb = b.raster(grid);
    let mismatches = ra.iter().zip(&rb).filter(|(x, y)| x != y).count();
    let cell = grid.max_step() * (grid.dim() as f64).sqrt();
    let hausdorff = match (a.interval(), b.interval()) {
        (Some(ia), Some(ib)) if grid.dim() == 1 => {
            let ax = grid.axes()[0];
            let radius = ax.lo.abs().max(ax.hi.abs());
            interval_hausdorff_distance(&ia, &ib, radius)
        }
        _ if mismatches == 0 => 0.0,
        _ => raster_hausdorff(grid, &ra, &rb),
    };
    DilationReport { hausdorff, cell, mismatches, agree: hausdorff <= cell * (1.0 + 1e-9) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neg_sqrt_reference_set() {
        let tol = Tolerances::default();
        let cfg = OracleConfig::for_window(1, &tol).unwrap();
        let s = oracle_eps_subdiff(&ConvexFn::NegSqrt, &[0.0], 1.0, &cfg).unwrap();
        let (lo, hi) = s.interval().unwrap().bounds().unwrap();
        assert_eq!(lo, ExtReal::NegInf);
        assert!((hi.to_f64() + 0.25).abs() < 1e-6, "{hi}");
    }

    #[test]
    fn abs_left_branch() {
        let tol = Tolerances::default();
        let cfg = OracleConfig::for_window(1, &tol).unwrap();
        let s = oracle_eps_subdiff(&ConvexFn::abs(), &[-1.0], 1.0, &cfg).unwrap();
        let (lo, hi) = s.interval().unwrap().bounds().unwrap();
        assert!((lo.to_f64() + 1.0).abs() < 2e-3 && hi.to_f64().abs() < 1e-8, "{lo} {hi}");
    }

    #[test]
    fn square_polar_is_cross_polytope() {
        let cfg = OracleConfig::new(Grid::symmetric(2, 2.0, 40).unwrap(), Grid::symmetric(2, 2.0, 20).unwrap(), 1e-9).unwrap();
        let sq = ConvexSetDesc::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] };
        let s = oracle_polar(&sq, &cfg).unwrap();
        assert!(s.contains(&[0.5, 0.5]));
        assert!(!s.contains(&[0.6, 0.5]));
    }

    #[test]
    fn infeasible_parameter_has_infinite_value() {
        let phi = ConvexFn::separable(ConvexFn::affine(vec![0.0], 0.0), ConvexFn::abs());
        let g = ConvexSetDesc::halfspaces(2, vec![(vec![1.0, 0.0], 1.0)]);
        let p = ParametricProblem::new(phi, Some(g), 1, 1).unwrap();
        let xs = Grid::interval(0.0, 2.0, 2).unwrap();
        let v = oracle_value_fn(&p, &xs, &Grid::symmetric(1, 1.0, 10).unwrap()).unwrap();
        assert_eq!(v, vec![ExtReal::ZERO, ExtReal::ZERO, ExtReal::PosInf]);
    }
}
