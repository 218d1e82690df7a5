//! Parametric convex programs `min { phi(x, y) : y in G(x) }`: the optimal
//! value function, approximate solution sets, and the formulas expressing
//! `∂_ε μ(x̄)` through `phi` and the graph of `G`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::dual::{DualSet, SetComparison};
use crate::error::{check_dim, Error, Result};
use crate::functions::ConvexFn;
use crate::minkowski::golden_quasi;
use crate::numerics::{interval_hausdorff_distance, ExtReal, Grid, Tolerances, XInterval};
use crate::sets::ConvexSetDesc;
use crate::subdiff::{eps_subdiff_set, support_formula, EpsSubdiffQuery};
use crate::transforms::{conjugate, interior_meets, regularity_of_sets, PreparedConjugate};

/// Cells of the parameter grid on which `μ` is sampled when `m = 1`.
const VALUE_CELLS_1D: usize = 8000;
/// Cells per axis of the parameter grid when `m = 2`.
const VALUE_CELLS_2D: usize = 200;
/// Coarse directions on the circle used to slice `(x*, 0)`-sections.
const SLICE_DIRS: usize = 256;
/// Decision points kept per approximate solution set in the formulas.
const Y_SAMPLES: usize = 9;

const T_POINTS: usize = 241;
const T_MIN: f64 = 1e-6;
const T_MAX: f64 = 1e6;

/// Objective `phi` on `R^(m+k)` and an optional constraint graph
/// `{(x, y) : y in G(x)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricProblem {
    pub phi: ConvexFn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<ConvexSetDesc>,
    pub m: usize,
    pub k: usize,
}

impl ParametricProblem {
    pub fn new(phi: ConvexFn, graph: Option<ConvexSetDesc>, m: usize, k: usize) -> Result<Self> {
        let p = ParametricProblem { phi, graph, m, k };
        p.validate()?;
        Ok(p)
    }

    pub fn unconstrained(phi: ConvexFn, m: usize, k: usize) -> Result<Self> {
        Self::new(phi, None, m, k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 || self.m + self.k > 3 {
            return Err(Error::InvalidInput(format!(
                "need m, k >= 1 and m + k <= 3, got m = {}, k = {}",
                self.m, self.k
            )));
        }
        self.phi.validate()?;
        check_dim(self.m + self.k, self.phi.dim())?;
        if let Some(g) = &self.graph {
            g.validate()?;
            check_dim(self.m + self.k, g.dim())?;
        }
        Ok(())
    }

    fn join(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut z = x.to_vec();
        z.extend_from_slice(y);
        z
    }

    pub fn feasible(&self, x: &[f64], y: &[f64]) -> bool {
        self.graph.as_ref().is_none_or(|g| g.contains(&self.join(x, y)))
    }

    /// `phi(x, y)` on the graph, `+inf` off it.
    pub fn objective(&self, x: &[f64], y: &[f64]) -> ExtReal {
        if !self.feasible(x, y) {
            return ExtReal::PosInf;
        }
        self.phi.eval(&self.join(x, y))
    }

    /// `phi + δ(·; gph G)` as one function.
    pub fn joint(&self) -> ConvexFn {
        match &self.graph {
            Some(g) => ConvexFn::sum(self.phi.clone(), ConvexFn::indicator(g.clone())),
            None => self.phi.clone(),
        }
    }
}

/// `μ(x)` and approximate solutions at one parameter value.
#[derive(Debug, Clone, Serialize)]
pub struct ValueFnResult {
    pub x: Vec<f64>,
    /// Grid minimum improved by a local search around the best grid point.
    pub mu: ExtReal,
    /// Plain minimum over the decision grid.
    pub mu_grid: ExtReal,
    pub argmin: Option<Vec<f64>>,
    /// The grid minimum sits at an interior grid point.
    pub minimizer_found: bool,
    /// The minimizing sequence runs into the window boundary.
    pub window_flagged: bool,
    /// Per ladder value `η`, the grid points with `phi(x, y) <= μ + η`
    /// (the refined minimiser is always included).
    pub m_eta_samples: Vec<(f64, Vec<Vec<f64>>)>,
}

pub fn optimal_value(p: &ParametricProblem, x: &[f64], y_grid: &Grid, tol: &Tolerances) -> Result<ValueFnResult> {
    check_dim(p.m, x.len())?;
    check_dim(p.k, y_grid.dim())?;
    let vals: Vec<ExtReal> = y_grid.points().map(|y| p.objective(x, &y)).collect();
    let mut best = ExtReal::PosInf;
    let mut arg = None;
    for (i, v) in vals.iter().enumerate() {
        if *v < best {
            best = *v;
            arg = Some(i);
        }
    }
    let Some(i) = arg else {
        return Ok(ValueFnResult {
            x: x.to_vec(),
            mu: ExtReal::PosInf,
            mu_grid: ExtReal::PosInf,
            argmin: None,
            minimizer_found: false,
            window_flagged: false,
            m_eta_samples: tol.eta_ladder.iter().map(|e| (*e, Vec::new())).collect(),
        });
    };
    let y0 = y_grid.point(i);
    let (y_ref, v_ref) = refine(&|y: &[f64]| p.objective(x, y).to_f64(), &y0, y_grid.max_step());
    let (mu, y_star) = if ExtReal::new(v_ref) < best { (ExtReal::new(v_ref), y_ref) } else { (best, y0) };
    let interior = !y_grid.on_boundary(&y_grid.multi_index(i));
    let m_eta_samples = tol
        .eta_ladder
        .iter()
        .map(|&eta| {
            let cut = mu.add_upper(ExtReal::new(eta + tol.slack(mu.to_f64())));
            let mut pts: Vec<Vec<f64>> =
                vals.iter().enumerate().filter(|(_, v)| **v <= cut).map(|(j, _)| y_grid.point(j)).collect();
            if !pts.contains(&y_star) {
                pts.push(y_star.clone());
            }
            (eta, pts)
        })
        .collect();
    Ok(ValueFnResult {
        x: x.to_vec(),
        mu,
        mu_grid: best,
        argmin: Some(y_star),
        minimizer_found: interior,
        window_flagged: !interior,
        m_eta_samples,
    })
}

/// Local descent from `start` for a convex function: golden section on the
/// neighbouring cells in 1D, pattern search otherwise.
fn refine(f: &dyn Fn(&[f64]) -> f64, start: &[f64], step: f64) -> (Vec<f64>, f64) {
    if start.len() == 1 {
        let s = start[0];
        let (y, v) = golden_quasi(&|t| f(&[t]), s - step, s + step, s, 80);
        return (vec![y], v);
    }
    let mut best = start.to_vec();
    let mut bv = f(start);
    let mut h = step;
    while h > 1e-11 {
        let mut moved = false;
        for i in 0..best.len() {
            for s in [-1.0, 1.0] {
                let mut c = best.clone();
                c[i] += s * h;
                let v = f(&c);
                if v < bv {
                    bv = v;
                    best = c;
                    moved = true;
                }
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    (best, bv)
}

/// Inner minimisation over the decision window by coarse scan and local
/// refinement. Returns the value, the minimiser, and whether it lies on the
/// window edge.
fn inner_min(p: &ParametricProblem, x: &[f64], tol: &Tolerances) -> (f64, Vec<f64>, bool) {
    let r = tol.window_radius;
    let cells = if p.k == 1 { 256 } else { 32 };
    let coarse = Grid::symmetric(p.k, r, cells).expect("window grid");
    let f = |y: &[f64]| p.objective(x, y).to_f64();
    let scan = |g: &Grid| {
        let mut best = (f64::INFINITY, 0usize);
        for (i, y) in g.points().enumerate() {
            let v = f(&y);
            if v < best.0 {
                best = (v, i);
            }
        }
        best
    };
    let mut grid = coarse;
    let mut best = scan(&grid);
    if best.0 == f64::INFINITY {
        // thin feasible sets can slip between coarse points
        grid = tol.window_grid(p.k);
        best = scan(&grid);
        if best.0 == f64::INFINITY {
            return (f64::INFINITY, vec![0.0; p.k], false);
        }
    }
    let y0 = grid.point(best.1);
    let (y, v) = refine(&f, &y0, grid.max_step());
    let (y, v) = if v < best.0 { (y, v) } else { (y0, best.0) };
    let on_edge = grid.on_boundary(&grid.multi_index(best.1)) && y.iter().any(|c| c.abs() > r - grid.max_step());
    (v, y, on_edge)
}

/// `μ` sampled on the parameter window and continued affinely past it.
#[derive(Debug, Clone)]
pub struct SampledValueFn {
    pub f: ConvexFn,
    /// Some inner minimum was attained only at the decision window edge.
    pub edge_flagged: bool,
}

pub fn sampled_value_function(p: &ParametricProblem, tol: &Tolerances) -> Result<SampledValueFn> {
    p.validate()?;
    let grid = match p.m {
        1 => Grid::symmetric(1, tol.window_radius, VALUE_CELLS_1D)?,
        _ => Grid::symmetric(p.m, tol.window_radius, VALUE_CELLS_2D)?,
    };
    let mut flagged = false;
    let values: Vec<ExtReal> = grid
        .points()
        .map(|x| {
            let (v, _, edge) = inner_min(p, &x, tol);
            flagged |= edge && v.is_finite();
            if v == f64::NEG_INFINITY {
                ExtReal::NegInf
            } else {
                ExtReal::new(v)
            }
        })
        .collect();
    if values.iter().any(|v| v.is_neg_inf()) {
        return Err(Error::NotProper("the value function takes -inf on the window".into()));
    }
    let f = ConvexFn::sampled_extrapolated(grid, values, 1e-7)?;
    Ok(SampledValueFn { f, edge_flagged: flagged })
}

/// `(x*, 0)`-section of `∂_g1 phi(p) + N_g2(p; gph G)` for `m = k = 1`,
/// united over the given splits `(g1, g2)`.
struct SectionSlicer<'a> {
    phi: &'a ConvexFn,
    graph: Option<&'a ConvexSetDesc>,
    p: Vec<f64>,
    fp: f64,
    tol: &'a Tolerances,
    thetas: Vec<f64>,
    /// `phi(p + t d) - phi(p)` per direction and `t`.
    delta: Vec<Vec<f64>>,
    ts: Vec<f64>,
    /// Ray exit from `p` inside the graph, per direction.
    exits: Vec<f64>,
}

impl<'a> SectionSlicer<'a> {
    fn new(phi: &'a ConvexFn, graph: Option<&'a ConvexSetDesc>, p: Vec<f64>, tol: &'a Tolerances) -> Option<Self> {
        let fp = phi.eval(&p).finite()?;
        let thetas: Vec<f64> = (0..SLICE_DIRS).map(|j| -PI + 2.0 * PI * j as f64 / SLICE_DIRS as f64).collect();
        let (l0, l1) = (T_MIN.ln(), T_MAX.ln());
        let ts: Vec<f64> = (0..T_POINTS).map(|i| (l0 + (l1 - l0) * i as f64 / (T_POINTS - 1) as f64).exp()).collect();
        let mut delta = Vec::with_capacity(SLICE_DIRS);
        let mut exits = Vec::with_capacity(SLICE_DIRS);
        for &th in &thetas {
            let d = [th.cos(), th.sin()];
            delta.push(
                ts.iter()
                    .map(|t| {
                        let z = [p[0] + t * d[0], p[1] + t * d[1]];
                        match phi.eval(&z) {
                            ExtReal::Finite(v) => v - fp,
                            ExtReal::PosInf => f64::INFINITY,
                            ExtReal::NegInf => f64::NEG_INFINITY,
                        }
                    })
                    .collect(),
            );
            exits.push(graph.map_or(f64::INFINITY, |g| g.ray_exit(&p, &d, tol)));
        }
        Some(SectionSlicer { phi, graph, p, fp, tol, thetas, delta, ts, exits })
    }

    fn normal_term(exit: f64, g2: f64) -> f64 {
        if exit == f64::INFINITY {
            0.0
        } else if exit <= 1e-12 {
            f64::INFINITY
        } else {
            g2 / exit
        }
    }

    /// Support of the split sum in table direction `j`.
    fn coarse(&self, j: usize, g1: f64, g2: f64) -> f64 {
        let n = Self::normal_term(self.exits[j], g2);
        if n == f64::INFINITY {
            return n;
        }
        let s = self.delta[j].iter().zip(&self.ts).map(|(dl, t)| (dl + g1) / t).fold(f64::INFINITY, f64::min);
        s + n
    }

    /// Support in an arbitrary direction angle, without the table.
    fn exact(&self, th: f64, g1: f64, g2: f64) -> f64 {
        let d = [th.cos(), th.sin()];
        let exit = self.graph.map_or(f64::INFINITY, |g| g.ray_exit(&self.p, &d, self.tol));
        let n = Self::normal_term(exit, g2);
        if n == f64::INFINITY {
            return n;
        }
        support_formula(self.phi, &self.p, self.fp, g1, &d).to_f64() + n
    }

    /// One end of the section: `min_θ H(θ)/|cos θ|` over the half circle
    /// facing `sign`, refined around the best table direction.
    fn end(&self, g1: f64, g2: f64, sign: f64, table: &[f64]) -> f64 {
        // on flat stretches prefer the direction facing `sign` most squarely,
        // where dividing by the cosine amplifies rounding the least
        let mut best = (f64::INFINITY, usize::MAX, 0.0);
        for (j, &th) in self.thetas.iter().enumerate() {
            let c = th.cos() * sign;
            if c <= 1e-12 {
                continue;
            }
            let v = table[j] / c;
            let tie = v.is_finite() && (v - best.0).abs() <= 1e-7 * (1.0 + v.abs());
            if (v < best.0 && !tie) || (tie && c > best.2) {
                best = (v, j, c);
            }
        }
        if best.1 == usize::MAX || best.0 == f64::NEG_INFINITY {
            return best.0;
        }
        let step = 2.0 * PI / SLICE_DIRS as f64;
        let centre = if sign > 0.0 { 0.0 } else { PI };
        // angle relative to the facing direction, kept inside (-π/2, π/2)
        let rel = |th: f64| {
            let mut r = th - centre;
            while r > PI {
                r -= 2.0 * PI;
            }
            while r < -PI {
                r += 2.0 * PI;
            }
            r
        };
        let a0 = rel(self.thetas[best.1]);
        let lim = FRAC_PI_2 - 1e-4;
        let (a, b) = ((a0 - step).max(-lim), (a0 + step).min(lim));
        let g = |r: f64| self.exact(centre + r, g1, g2) / r.cos();
        let (_, v) = golden_quasi(&g, a, b, a0, 60);
        v.min(best.0)
    }

    /// Section interval for one split, from the table only.
    fn coarse_section(&self, g1: f64, g2: f64) -> (Vec<f64>, XInterval) {
        let table: Vec<f64> = (0..SLICE_DIRS).map(|j| self.coarse(j, g1, g2)).collect();
        let slack = self.tol.slack(1.0);
        // directions (0, ±1): the line {y* = 0} must meet the set
        let up = table[3 * SLICE_DIRS / 4];
        let down = table[SLICE_DIRS / 4];
        if up < -slack || down < -slack {
            return (table, XInterval::Empty);
        }
        let hi = self.coarse_end(&table, 1.0);
        let lo = -self.coarse_end(&table, -1.0);
        (table, section_interval(lo, hi, slack))
    }

    fn coarse_end(&self, table: &[f64], sign: f64) -> f64 {
        self.thetas
            .iter()
            .zip(table)
            .filter(|(th, _)| th.cos() * sign > 1e-12)
            .map(|(th, v)| v / (th.cos() * sign))
            .fold(f64::INFINITY, f64::min)
    }

    /// Hull of the sections over all splits. Coarse ends bound the refined
    /// ones from outside, so splits are refined best-first until no coarse
    /// bound can improve the running hull.
    fn section(&self, splits: &[(f64, f64)]) -> XInterval {
        let slack = self.tol.slack(1.0);
        let mut coarse: Vec<(f64, f64, Vec<f64>, XInterval)> = Vec::new();
        for &(g1, g2) in splits {
            let (table, iv) = self.coarse_section(g1, g2);
            if !iv.is_empty() {
                coarse.push((g1, g2, table, iv));
            }
        }
        if coarse.is_empty() {
            return XInterval::Empty;
        }
        let ends = |iv: &XInterval| iv.bounds().map(|(l, h)| (l.to_f64(), h.to_f64())).unwrap();
        let mut order: Vec<usize> = (0..coarse.len()).collect();
        order.sort_by(|a, b| ends(&coarse[*b].3).1.total_cmp(&ends(&coarse[*a].3).1));
        let mut hi = f64::NEG_INFINITY;
        for &i in &order {
            let (g1, g2, ref table, ref iv) = coarse[i];
            if ends(iv).1 <= hi {
                break;
            }
            hi = hi.max(self.end(g1, g2, 1.0, table));
        }
        order.sort_by(|a, b| ends(&coarse[*a].3).0.total_cmp(&ends(&coarse[*b].3).0));
        let mut lo = f64::INFINITY;
        for &i in &order {
            let (g1, g2, ref table, ref iv) = coarse[i];
            if ends(iv).0 >= lo {
                break;
            }
            lo = lo.min(-self.end(g1, g2, -1.0, table));
        }
        section_interval(lo, hi, slack)
    }
}

fn section_interval(lo: f64, hi: f64, slack: f64) -> XInterval {
    if lo > hi {
        if lo - hi <= slack {
            return XInterval::point(0.5 * (lo + hi));
        }
        return XInterval::Empty;
    }
    XInterval::new(lo, hi)
}

/// Intersection that keeps a point when the two ends cross by rounding only.
fn meet(a: &XInterval, b: &XInterval, slack: f64) -> XInterval {
    match (a.bounds(), b.bounds()) {
        (Some((l1, h1)), Some((l2, h2))) => match (l1.max(l2), h1.min(h2)) {
            (ExtReal::Finite(l), ExtReal::Finite(h)) => section_interval(l, h, slack),
            (l, h) => XInterval::new(l, h),
        },
        _ => XInterval::Empty,
    }
}

/// How the partial intersections over the `η` ladder settle.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub eta: f64,
    pub meta: Option<XInterval>,
    pub union: Option<XInterval>,
    /// Hausdorff change of the partial intersection from the previous rung.
    pub meta_change: Option<f64>,
    pub union_change: Option<f64>,
}

/// Which qualification conditions hold for a constrained problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConstrainedRegularity {
    /// The interior of the graph meets `dom phi`.
    pub a: bool,
    /// `phi` is continuous at some point of the graph.
    pub b: bool,
    /// The cone generated by `dom phi - gph G` is a closed subspace.
    pub i: bool,
    /// The origin is interior to `dom phi - gph G`.
    pub ii: bool,
}

impl ConstrainedRegularity {
    pub fn any(&self) -> bool {
        self.a || self.b || self.i || self.ii
    }
}

/// `∂_ε μ(x̄)` computed directly and by the two formula representations.
#[derive(Debug, Clone)]
pub struct FormulaReport {
    pub eps: f64,
    pub x_bar: Vec<f64>,
    pub value: ValueFnResult,
    pub direct: DualSet,
    /// Intersection over `η` and over `y in M_η(x̄)`.
    pub formula_meta: DualSet,
    /// Intersection over `η` of the union over all decision points.
    pub formula_union: DualSet,
    pub convergence: Vec<ConvergenceRow>,
    /// `None` for unconstrained problems and for unsupported shapes.
    pub regularity: Option<ConstrainedRegularity>,
    /// Direct vs meta, direct vs union, meta vs union.
    pub comparisons: [SetComparison; 3],
    pub certified: bool,
}

impl FormulaReport {
    pub fn agree(&self) -> bool {
        self.comparisons.iter().all(|c| c.agree)
    }

    pub fn max_gap(&self) -> f64 {
        self.comparisons.iter().map(|c| c.hausdorff).fold(0.0, f64::max)
    }

    pub fn window_flagged(&self) -> bool {
        self.direct.window_flagged || self.formula_meta.window_flagged || self.formula_union.window_flagged
    }
}

pub fn unconstrained_eps_subdiff(p: &ParametricProblem, x_bar: &[f64], eps: f64, tol: &Tolerances) -> Result<FormulaReport> {
    if p.graph.is_some() {
        return Err(Error::InvalidInput("problem has a constraint graph".into()));
    }
    formula_report(p, x_bar, eps, tol)
}

pub fn constrained_eps_subdiff(p: &ParametricProblem, x_bar: &[f64], eps: f64, tol: &Tolerances) -> Result<FormulaReport> {
    if p.graph.is_none() {
        return Err(Error::InvalidInput("problem has no constraint graph".into()));
    }
    formula_report(p, x_bar, eps, tol)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps must be finite and >= 0, got {eps}")));
    }
    Ok(())
}

/// Regularity of `(phi, gph G)`, or `None` when a shape is not polyhedral.
pub fn constrained_regularity(p: &ParametricProblem, tol: &Tolerances) -> Option<ConstrainedRegularity> {
    let g = p.graph.as_ref()?;
    let dom = p.phi.effective_domain();
    let (pd, pg) = (dom.to_polyhedron()?, g.to_polyhedron()?);
    let r = regularity_of_sets(&dom, g, tol).ok()?;
    Some(ConstrainedRegularity { a: interior_meets(&pg, &pd, tol), b: interior_meets(&pd, &pg, tol), i: r.ab, ii: r.bs })
}

fn formula_report(p: &ParametricProblem, x_bar: &[f64], eps: f64, tol: &Tolerances) -> Result<FormulaReport> {
    p.validate()?;
    tol.validate()?;
    check_eps(eps)?;
    check_dim(p.m, x_bar.len())?;
    let y_grid = tol.window_grid(p.k);
    let value = optimal_value(p, x_bar, &y_grid, tol)?;
    let mu = value.mu.finite().ok_or_else(|| Error::InvalidInput(format!("μ is not finite at {x_bar:?}")))?;
    let sampled = sampled_value_function(p, tol)?;
    let q = EpsSubdiffQuery::new(sampled.f, x_bar.to_vec(), eps, tol.clone())?;
    let direct = eps_subdiff_set(&q)?.flagged(sampled.edge_flagged && eps == 0.0);
    let regularity = constrained_regularity(p, tol);
    let (formula_meta, formula_union, convergence) = if p.m == 1 && p.k == 1 {
        formula_sets_1d(p, x_bar, eps, mu, &value, &y_grid, tol)
    } else if p.graph.is_none() {
        formula_sets_conjugate(p, x_bar, eps, mu, &value, &y_grid, tol)
    } else {
        return Err(Error::InvalidInput("constrained formulas are evaluated for m = k = 1".into()));
    };
    let comparisons =
        [direct.compare(&formula_meta, tol), direct.compare(&formula_union, tol), formula_meta.compare(&formula_union, tol)];
    let certified = match &p.graph {
        None => true,
        Some(_) => regularity.is_some_and(|r| r.any()),
    };
    Ok(FormulaReport {
        eps,
        x_bar: x_bar.to_vec(),
        value,
        direct,
        formula_meta,
        formula_union,
        convergence,
        regularity,
        comparisons,
        certified,
    })
}

/// At most `Y_SAMPLES` evenly spread points of `pts`, plus `keep`.
fn thin(pts: &[Vec<f64>], keep: Option<&Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = if pts.len() <= Y_SAMPLES {
        pts.to_vec()
    } else {
        (0..Y_SAMPLES).map(|i| pts[i * (pts.len() - 1) / (Y_SAMPLES - 1)].clone()).collect()
    };
    if let Some(k) = keep {
        if !out.contains(k) {
            out.push(k.clone());
        }
    }
    out
}

/// Decision points with `phi(x̄, y) <= μ + cut` among the grid.
fn level_points(p: &ParametricProblem, x_bar: &[f64], mu: f64, cut: f64, y_grid: &Grid, tol: &Tolerances) -> Vec<Vec<f64>> {
    let bound = mu + cut + tol.slack(mu);
    y_grid.points().filter(|y| p.objective(x_bar, y) <= ExtReal::new(bound)).collect()
}

type FormulaSets = (DualSet, DualSet, Vec<ConvergenceRow>);

fn formula_sets_1d(
    p: &ParametricProblem,
    x_bar: &[f64],
    eps: f64,
    mu: f64,
    value: &ValueFnResult,
    y_grid: &Grid,
    tol: &Tolerances,
) -> FormulaSets {
    let graph = p.graph.as_ref();
    let mut meta = XInterval::whole();
    let mut union = XInterval::whole();
    let mut rows = Vec::new();
    for (eta, m_eta) in &value.m_eta_samples {
        let total = eps + eta;
        let splits = if graph.is_some() { tol.gamma_pairs(total) } else { vec![(total, 0.0)] };
        // (x*, 0) can only be a γ-subgradient at y when phi(x̄, y) <= μ + γ
        let reach = level_points(p, x_bar, mu, total, y_grid, tol);
        let ys_meta = thin(m_eta, value.argmin.as_ref());
        let ys_union = thin(&reach, value.argmin.as_ref());
        let section_at = |y: &Vec<f64>| -> XInterval {
            let z = p.join(x_bar, y);
            match SectionSlicer::new(&p.phi, graph, z, tol) {
                Some(s) => s.section(&splits),
                None => XInterval::Empty,
            }
        };
        let mut cache: Vec<(Vec<f64>, XInterval)> = Vec::new();
        let mut get = |y: &Vec<f64>| -> XInterval {
            if let Some((_, iv)) = cache.iter().find(|(c, _)| c == y) {
                return *iv;
            }
            let iv = section_at(y);
            cache.push((y.clone(), iv));
            iv
        };
        let slack = tol.slack(1.0);
        let step_meta = ys_meta.iter().fold(XInterval::whole(), |acc, y| meet(&acc, &get(y), slack));
        let step_union = ys_union.iter().fold(XInterval::Empty, |acc, y| acc.hull(&get(y)));
        let (prev_m, prev_u) = (meta, union);
        meta = meet(&meta, &step_meta, slack);
        union = meet(&union, &step_union, slack);
        let r = tol.window_radius;
        rows.push(ConvergenceRow {
            eta: *eta,
            meta: Some(meta),
            union: Some(union),
            meta_change: Some(if rows.is_empty() { 0.0 } else { interval_hausdorff_distance(&prev_m, &meta, r) }),
            union_change: Some(if rows.is_empty() { 0.0 } else { interval_hausdorff_distance(&prev_u, &union, r) }),
        });
    }
    (DualSet::from_interval(meta), DualSet::from_interval(union), rows)
}

/// Unconstrained formulas in higher dimension: `(x*, 0) in ∂_γ phi(x̄, y)`
/// tested through the conjugate of `phi`.
fn formula_sets_conjugate(
    p: &ParametricProblem,
    x_bar: &[f64],
    eps: f64,
    mu: f64,
    value: &ValueFnResult,
    y_grid: &Grid,
    tol: &Tolerances,
) -> FormulaSets {
    let conj = PreparedConjugate::new(&p.phi, tol);
    let flagged = !conj.is_closed_form();
    let mut meta_parts: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut union_parts: Vec<Vec<(f64, f64)>> = Vec::new();
    for (eta, m_eta) in &value.m_eta_samples {
        let total = eps + eta;
        let reach = level_points(p, x_bar, mu, total, y_grid, tol);
        let fy = |y: &Vec<f64>| p.phi.eval(&p.join(x_bar, y)).to_f64();
        // each y contributes the threshold γ - phi(x̄, y)
        meta_parts.push(thin(m_eta, value.argmin.as_ref()).iter().map(|y| (total, fy(y))).collect());
        union_parts.push(thin(&reach, value.argmin.as_ref()).iter().map(|y| (total, fy(y))).collect());
    }
    let (m, k) = (p.m, p.k);
    let xb = x_bar.to_vec();
    let t = tol.clone();
    let test = move |xs: &[f64], g: f64, fy: f64| -> bool {
        let mut z = xs.to_vec();
        z.extend(std::iter::repeat_n(0.0, k));
        let pairing: f64 = xs.iter().zip(&xb).map(|(a, b)| a * b).sum();
        match conj.value(&z) {
            ExtReal::Finite(c) => c + fy - pairing <= g + t.slack(c.abs() + pairing.abs()),
            ExtReal::NegInf => true,
            ExtReal::PosInf => false,
        }
    };
    let t1 = test.clone();
    let meta = DualSet::from_membership(m, move |xs| meta_parts.iter().all(|rung| rung.iter().all(|(g, fy)| t1(xs, *g, *fy))));
    let union =
        DualSet::from_membership(m, move |xs| union_parts.iter().all(|rung| rung.iter().any(|(g, fy)| test(xs, *g, *fy))));
    (meta.flagged(flagged), union.flagged(flagged), Vec::new())
}

/// The single-solution form: `{x* : (x*, 0) in ∂_ε phi(x̄, y_sol)}` against
/// the direct `∂_ε μ(x̄)`.
#[derive(Debug, Clone)]
pub struct SolutionCaseReport {
    pub single: DualSet,
    pub direct: DualSet,
    pub comparison: SetComparison,
}

impl SolutionCaseReport {
    pub fn holds(&self) -> bool {
        self.comparison.agree
    }
}

pub fn unconstrained_solution_case(
    p: &ParametricProblem,
    x_bar: &[f64],
    eps: f64,
    y_sol: &[f64],
    tol: &Tolerances,
) -> Result<SolutionCaseReport> {
    p.validate()?;
    check_eps(eps)?;
    check_dim(p.m, x_bar.len())?;
    check_dim(p.k, y_sol.len())?;
    let value = optimal_value(p, x_bar, &tol.window_grid(p.k), tol)?;
    let mu = value.mu.to_f64();
    let at = p.objective(x_bar, y_sol).to_f64();
    if !(at <= mu + tol.set_tol) {
        return Err(Error::NotASolution { y: y_sol.to_vec(), value: at, mu });
    }
    let sampled = sampled_value_function(p, tol)?;
    let direct = eps_subdiff_set(&EpsSubdiffQuery::new(sampled.f, x_bar.to_vec(), eps, tol.clone())?)?;
    let single = if p.m == 1 && p.k == 1 {
        let z = p.join(x_bar, y_sol);
        let splits = if p.graph.is_some() { tol.gamma_pairs(eps) } else { vec![(eps, 0.0)] };
        let iv = SectionSlicer::new(&p.phi, p.graph.as_ref(), z, tol).map_or(XInterval::Empty, |s| s.section(&splits));
        DualSet::from_interval(iv)
    } else {
        let one = ValueFnResult { m_eta_samples: vec![(0.0, vec![y_sol.to_vec()])], argmin: None, ..value };
        formula_sets_conjugate(p, x_bar, eps, at, &one, &tol.window_grid(p.k), tol).0
    };
    let comparison = direct.compare(&single, tol);
    Ok(SolutionCaseReport { single, direct, comparison })
}

/// `μ*(v*)` from the sampled value function against `(phi + δ_gph)*(v*, 0)`.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub max_gap: f64,
    pub tolerance: f64,
    pub points: usize,
    pub holds: bool,
}

pub fn reduction_identity_check(p: &ParametricProblem, dual_grid: &Grid, tol: &Tolerances) -> Result<ReductionReport> {
    p.validate()?;
    check_dim(p.m, dual_grid.dim())?;
    let sampled = sampled_value_function(p, tol)?;
    let lhs = conjugate(&sampled.f, dual_grid, tol)?;
    let joint = PreparedConjugate::new(&p.joint(), tol);
    let lhs_vals = lhs.guarded();
    // discretisation of both sweeps: one primal step times the dual radius
    let r = dual_grid.axes().iter().map(|a| a.lo.abs().max(a.hi.abs())).fold(0.0, f64::max);
    let primal_step = 2.0 * tol.window_radius / tol.grid_points as f64;
    let tolerance = tol.set_tol.max(2.0 * primal_step * (1.0 + r));
    let mut max_gap: f64 = 0.0;
    let mut points = 0;
    for (i, v) in dual_grid.points().enumerate() {
        let mut z = v.clone();
        z.extend(std::iter::repeat_n(0.0, p.k));
        let a = lhs_vals[i];
        let b = joint.value(&z);
        let gap = match (a, b) {
            (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs(),
            (x, y) if x == y => 0.0,
            _ => f64::INFINITY,
        };
        max_gap = max_gap.max(gap);
        points += 1;
    }
    Ok(ReductionReport { max_gap, tolerance, points, holds: max_gap <= tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq_plus_abs() -> ParametricProblem {
        ParametricProblem::unconstrained(ConvexFn::separable(ConvexFn::square(), ConvexFn::abs()), 1, 1).unwrap()
    }

    fn half_abs_graph() -> ParametricProblem {
        let phi = ConvexFn::separable(ConvexFn::affine(vec![0.0], 0.0), ConvexFn::abs());
        let g = ConvexSetDesc::halfspaces(2, vec![(vec![0.5, -1.0], 0.0), (vec![-0.5, -1.0], 0.0)]);
        ParametricProblem::new(phi, Some(g), 1, 1).unwrap()
    }

    #[test]
    fn value_of_separable_problem() {
        let tol = Tolerances::default();
        let r = optimal_value(&sq_plus_abs(), &[0.5], &tol.window_grid(1), &tol).unwrap();
        assert!((r.mu.to_f64() - 0.25).abs() < 1e-12);
        assert!(r.minimizer_found);
        assert_eq!(r.argmin, Some(vec![0.0]));
    }

    #[test]
    fn value_with_constraint() {
        let tol = Tolerances::default();
        let r = optimal_value(&half_abs_graph(), &[1.0], &tol.window_grid(1), &tol).unwrap();
        assert!((r.mu.to_f64() - 0.5).abs() < 1e-9, "{:?}", r.mu);
    }

    #[test]
    fn unattained_inner_minimum_is_flagged() {
        let tol = Tolerances::default();
        let p = ParametricProblem::unconstrained(ConvexFn::separable(ConvexFn::square(), ConvexFn::Exp), 1, 1).unwrap();
        let r = optimal_value(&p, &[0.0], &tol.window_grid(1), &tol).unwrap();
        assert!(!r.minimizer_found && r.window_flagged);
        assert!(r.mu.to_f64() < 1e-4);
    }

    #[test]
    fn slicer_matches_closed_form() {
        let tol = Tolerances::default();
        let p = sq_plus_abs();
        let s = SectionSlicer::new(&p.phi, None, vec![0.0, 0.0], &tol).unwrap();
        let iv = s.section(&[(0.25, 0.0)]);
        let (lo, hi) = iv.bounds().unwrap();
        assert!((hi.to_f64() - 1.0).abs() < 1e-6, "{iv}");
        assert!((lo.to_f64() + 1.0).abs() < 1e-6, "{iv}");
    }

    #[test]
    fn slicer_with_cone_normals() {
        let tol = Tolerances::default();
        let p = half_abs_graph();
        let s = SectionSlicer::new(&p.phi, p.graph.as_ref(), vec![0.0, 0.0], &tol).unwrap();
        let iv = s.section(&tol.gamma_pairs(0.5));
        let (lo, hi) = iv.bounds().unwrap();
        assert!((hi.to_f64() - 0.5).abs() < 1e-6, "{iv}");
        assert!((lo.to_f64() + 0.5).abs() < 1e-6, "{iv}");
    }

    #[test]
    fn not_a_solution_is_rejected() {
        let tol = Tolerances::default();
        let err = unconstrained_solution_case(&sq_plus_abs(), &[0.0], 0.25, &[0.1], &tol).unwrap_err();
        assert!(matches!(err, Error::NotASolution { .. }));
    }
}
