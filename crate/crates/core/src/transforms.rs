//! Conjugates, infimal convolution, qualification and regularity tests,
//! polars and normal sets.

use std::sync::Arc;

use crate::dual::{extract_interval, DualSet};
use crate::error::{check_dim, Error, Result};
use crate::functions::ConvexFn;
use crate::lp::Polyhedron;
use crate::numerics::{dot, norm, unit_directions, ExtReal, Grid, Tolerances, XInterval};
use crate::sets::ConvexSetDesc;

/// Closed-form value of `f*(x*)`, when the AST admits one.
pub fn closed_conjugate(f: &ConvexFn, xs: &[f64]) -> Option<ExtReal> {
    let near = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + b.abs());
    Some(match f {
        ConvexFn::Affine { a, b } => {
            if xs.iter().zip(a).all(|(s, a)| near(*s, *a)) {
                ExtReal::new(-b)
            } else {
                ExtReal::PosInf
            }
        }
        ConvexFn::QuadDiag { q, shift } => {
            let mut acc = 0.0;
            for ((q, c), s) in q.iter().zip(shift).zip(xs) {
                if *q > 0.0 {
                    acc += s * s / (4.0 * q) + c * s;
                } else if s.abs() > 1e-12 {
                    return Some(ExtReal::PosInf);
                }
            }
            ExtReal::new(acc)
        }
        ConvexFn::AbsNorm { weights } => {
            if xs.iter().zip(weights).all(|(s, w)| s.abs() <= w * (1.0 + 1e-12)) {
                ExtReal::ZERO
            } else {
                ExtReal::PosInf
            }
        }
        ConvexFn::NegSqrt => {
            if xs[0] < 0.0 {
                ExtReal::new(-0.25 / xs[0])
            } else {
                ExtReal::PosInf
            }
        }
        ConvexFn::InvNeg { c } => {
            if xs[0] >= 0.0 {
                ExtReal::new(-2.0 * (c * xs[0]).sqrt())
            } else {
                ExtReal::PosInf
            }
        }
        ConvexFn::Exp => {
            let s = xs[0];
            if s > 0.0 {
                ExtReal::new(s * s.ln() - s)
            } else if s == 0.0 {
                ExtReal::ZERO
            } else {
                ExtReal::PosInf
            }
        }
        ConvexFn::Indicator { set } => set.support_exact(xs)?,
        ConvexFn::Scale { lambda, f } => {
            let y: Vec<f64> = xs.iter().map(|v| v / lambda).collect();
            closed_conjugate(f, &y)?.scale(*lambda)
        }
        ConvexFn::Separable { first, second } => {
            let n = first.dim();
            let a = closed_conjugate(first, &xs[..n])?;
            if a.is_pos_inf() {
                return Some(a);
            }
            a.add_upper(closed_conjugate(second, &xs[n..])?)
        }
        ConvexFn::Sum { f, g } => match (f.as_ref(), g.as_ref()) {
            (ConvexFn::Indicator { set: ConvexSetDesc::FullSpace { .. } }, h)
            | (h, ConvexFn::Indicator { set: ConvexSetDesc::FullSpace { .. } }) => closed_conjugate(h, xs)?,
            (ConvexFn::Affine { a, b }, h) | (h, ConvexFn::Affine { a, b }) => {
                let y: Vec<f64> = xs.iter().zip(a).map(|(s, a)| s - a).collect();
                closed_conjugate(h, &y)?.add_upper(ExtReal::new(-b))
            }
            _ => return None,
        },
        ConvexFn::Sampled { .. } => return None,
    })
}

/// True if [`closed_conjugate`] is available for `f`.
pub fn has_closed_conjugate(f: &ConvexFn) -> bool {
    closed_conjugate(f, &vec![0.0; f.dim()]).is_some()
}

/// The conjugate as an AST, for the cases where it is expressible.
pub fn conjugate_ast(f: &ConvexFn) -> Option<ConvexFn> {
    Some(match f {
        ConvexFn::Affine { a, b } => ConvexFn::sum(
            ConvexFn::indicator(ConvexSetDesc::Singleton { point: a.clone() }),
            ConvexFn::affine(vec![0.0; a.len()], -b),
        ),
        ConvexFn::QuadDiag { q, shift } => {
            if q.iter().any(|v| *v == 0.0) {
                return None;
            }
            let q2: Vec<f64> = q.iter().map(|v| 0.25 / v).collect();
            let s2: Vec<f64> = q.iter().zip(shift).map(|(q, s)| -2.0 * q * s).collect();
            let c: f64 = q.iter().zip(shift).map(|(q, s)| q * s * s).sum();
            if c == 0.0 {
                ConvexFn::quad(q2, s2)
            } else {
                ConvexFn::sum(ConvexFn::quad(q2, s2), ConvexFn::affine(vec![0.0; q.len()], -c))
            }
        }
        ConvexFn::AbsNorm { weights } => ConvexFn::indicator(ConvexSetDesc::Box {
            lo: weights.iter().map(|w| -w).collect(),
            hi: weights.clone(),
        }),
        ConvexFn::NegSqrt => ConvexFn::InvNeg { c: 0.25 },
        ConvexFn::InvNeg { c } => ConvexFn::scale(2.0 * c.sqrt(), ConvexFn::NegSqrt),
        ConvexFn::Indicator { set } => match set {
            ConvexSetDesc::Singleton { point } => ConvexFn::affine(point.clone(), 0.0),
            ConvexSetDesc::FullSpace { dim } => {
                ConvexFn::indicator(ConvexSetDesc::Singleton { point: vec![0.0; *dim] })
            }
            ConvexSetDesc::Box { lo, hi } if lo.iter().zip(hi).all(|(l, h)| *h > 0.0 && (l + h).abs() < 1e-15) => {
                ConvexFn::abs_norm(hi.clone())
            }
            ConvexSetDesc::Interval { lo: ExtReal::Finite(l), hi: ExtReal::Finite(h) } if *h > 0.0 && (l + h).abs() < 1e-15 => {
                ConvexFn::abs_norm(vec![*h])
            }
            _ => return None,
        },
        ConvexFn::Separable { first, second } => ConvexFn::separable(conjugate_ast(first)?, conjugate_ast(second)?),
        _ => return None,
    })
}

/// One evaluation of a conjugate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugatePoint {
    pub value: ExtReal,
    /// Primal maximiser found by the sampled route.
    pub argmax: Option<Vec<f64>>,
    /// The maximiser sits on the window boundary, so the value is only a
    /// lower bound for the true conjugate.
    pub on_window_edge: bool,
}

impl ConjugatePoint {
    /// The value, with window-edge results read as `+inf`.
    pub fn guarded(&self) -> ExtReal {
        if self.on_window_edge {
            ExtReal::PosInf
        } else {
            self.value
        }
    }
}

/// Lower convex hull of 1D samples, queried by slope.
#[derive(Debug, Clone)]
struct LowerHull {
    xs: Vec<f64>,
    fs: Vec<f64>,
    /// `slopes[i]` is the slope between vertices `i` and `i + 1`.
    slopes: Vec<f64>,
    lo_edge: bool,
    hi_edge: bool,
}

impl LowerHull {
    /// `pts` sorted by `x`, values finite.
    fn new(pts: &[(f64, f64)], lo_edge: bool, hi_edge: bool) -> Option<Self> {
        if pts.is_empty() {
            return None;
        }
        let mut hull: Vec<(f64, f64)> = Vec::new();
        for &p in pts {
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                if cross <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        let xs: Vec<f64> = hull.iter().map(|p| p.0).collect();
        let fs: Vec<f64> = hull.iter().map(|p| p.1).collect();
        let slopes = (0..xs.len() - 1).map(|i| (fs[i + 1] - fs[i]) / (xs[i + 1] - xs[i])).collect();
        Some(LowerHull { xs, fs, slopes, lo_edge, hi_edge })
    }

    /// `max_x s x - f(x)` over the hull vertices.
    fn query(&self, s: f64) -> ConjugatePoint {
        // first vertex whose right slope is >= s
        let i = self.slopes.partition_point(|&m| m < s);
        let mut best = i;
        // ties between both ends of an edge: prefer smaller |x|
        if i < self.slopes.len() && (self.slopes[i] - s).abs() <= 1e-12 * (1.0 + s.abs()) && self.xs[i + 1].abs() < self.xs[i].abs() {
            best = i + 1;
        }
        let last = self.xs.len() - 1;
        let edge = (best == 0 && self.lo_edge) || (best == last && self.hi_edge);
        ConjugatePoint {
            value: ExtReal::new(s * self.xs[best] - self.fs[best]),
            argmax: Some(vec![self.xs[best]]),
            on_window_edge: edge,
        }
    }
}

#[derive(Debug, Clone)]
enum ConjKind {
    Closed(ConvexFn),
    Hull(LowerHull),
    Sweep { pts: Vec<Vec<f64>>, vals: Vec<f64>, edge: Vec<bool> },
    Nowhere,
}

/// A conjugate prepared for repeated evaluation.
#[derive(Debug, Clone)]
pub struct PreparedConjugate {
    dim: usize,
    kind: ConjKind,
}

impl PreparedConjugate {
    /// Closed form when available, sampled otherwise.
    pub fn new(f: &ConvexFn, tol: &Tolerances) -> Self {
        if has_closed_conjugate(f) {
            PreparedConjugate { dim: f.dim(), kind: ConjKind::Closed(f.clone()) }
        } else {
            Self::sampled(f, tol)
        }
    }

    /// Always the sampled route: a lower hull in 1D, a grid sweep otherwise.
    /// Sampled functions use their own grid, everything else the window grid.
    pub fn sampled(f: &ConvexFn, tol: &Tolerances) -> Self {
        let dim = f.dim();
        let (grid, window_cut) = match f {
            ConvexFn::Sampled { grid, extrapolate, .. } => (grid.clone(), *extrapolate),
            _ => (tol.window_grid(dim), true),
        };
        if dim == 1 {
            let mut pts = Vec::new();
            let mut lo_edge = false;
            let mut hi_edge = false;
            let n = grid.len();
            for k in 0..n {
                let x = grid.point(k)[0];
                if let ExtReal::Finite(v) = f.eval(&[x]) {
                    if pts.is_empty() {
                        lo_edge = window_cut && k == 0;
                    }
                    hi_edge = window_cut && k == n - 1;
                    pts.push((x, v));
                }
            }
            let kind = match LowerHull::new(&pts, lo_edge, hi_edge) {
                Some(h) => ConjKind::Hull(h),
                None => ConjKind::Nowhere,
            };
            return PreparedConjugate { dim, kind };
        }
        let mut pts = Vec::new();
        let mut vals = Vec::new();
        let mut edge = Vec::new();
        for k in 0..grid.len() {
            let x = grid.point(k);
            if let ExtReal::Finite(v) = f.eval(&x) {
                edge.push(window_cut && grid.on_boundary(&grid.multi_index(k)));
                pts.push(x);
                vals.push(v);
            }
        }
        let kind = if pts.is_empty() { ConjKind::Nowhere } else { ConjKind::Sweep { pts, vals, edge } };
        PreparedConjugate { dim, kind }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.kind, ConjKind::Closed(_))
    }

    pub fn eval(&self, xs: &[f64]) -> ConjugatePoint {
        match &self.kind {
            ConjKind::Closed(f) => ConjugatePoint {
                value: closed_conjugate(f, xs).unwrap_or(ExtReal::PosInf),
                argmax: None,
                on_window_edge: false,
            },
            ConjKind::Hull(h) => h.query(xs[0]),
            ConjKind::Sweep { pts, vals, edge } => {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0usize;
                for (k, (p, v)) in pts.iter().zip(vals).enumerate() {
                    let g = dot(xs, p) - v;
                    if g > best || (g == best && norm(p) < norm(&pts[arg])) {
                        best = g;
                        arg = k;
                    }
                }
                ConjugatePoint { value: ExtReal::new(best), argmax: Some(pts[arg].clone()), on_window_edge: edge[arg] }
            }
            ConjKind::Nowhere => ConjugatePoint { value: ExtReal::NegInf, argmax: None, on_window_edge: false },
        }
    }

    /// Value with window-edge results read as `+inf`.
    pub fn value(&self, xs: &[f64]) -> ExtReal {
        self.eval(xs).guarded()
    }
}

/// `f*(x*)` by the sampled route, window-edge maximisers read as `+inf`.
pub fn numeric_conjugate_value(f: &ConvexFn, xs: &[f64], tol: &Tolerances) -> ExtReal {
    PreparedConjugate::sampled(f, tol).value(xs)
}

/// The conjugate on a dual grid.
#[derive(Debug, Clone)]
pub struct ConjugateResult {
    pub closed_form: Option<ConvexFn>,
    pub grid: Grid,
    /// Sampled-route values, including lower bounds at flagged points.
    pub raw: Vec<ExtReal>,
    pub flagged: Vec<bool>,
    pub attainment: Vec<Option<Vec<f64>>>,
    /// Closed-form values where the AST admits them.
    pub exact: Option<Vec<ExtReal>>,
}

impl ConjugateResult {
    /// Sampled values with flagged points set to `+inf`.
    pub fn guarded(&self) -> Vec<ExtReal> {
        self.raw
            .iter()
            .zip(&self.flagged)
            .map(|(v, f)| if *f { ExtReal::PosInf } else { *v })
            .collect()
    }

    pub fn any_flagged(&self) -> bool {
        self.flagged.iter().any(|f| *f)
    }

    /// Fails with `WindowTooSmall` if any requested dual point was flagged.
    pub fn require_unflagged(&self) -> Result<()> {
        match self.flagged.iter().position(|f| *f) {
            None => Ok(()),
            Some(k) => Err(Error::WindowTooSmall(format!(
                "conjugate maximiser on the window boundary at x* = {:?}",
                self.grid.point(k)
            ))),
        }
    }

    /// Largest gap between closed-form and sampled values at unflagged
    /// points where both are finite; `None` without a closed form.
    pub fn closed_vs_sampled_gap(&self) -> Option<f64> {
        let exact = self.exact.as_ref()?;
        let mut gap = 0.0f64;
        for k in 0..self.raw.len() {
            if self.flagged[k] {
                continue;
            }
            match (exact[k], self.raw[k]) {
                (ExtReal::Finite(a), ExtReal::Finite(b)) => gap = gap.max((a - b).abs()),
                (a, b) if a == b => {}
                (ExtReal::PosInf, _) | (_, ExtReal::PosInf) => {}
                _ => gap = f64::INFINITY,
            }
        }
        Some(gap)
    }
}

/// Legendre–Fenchel conjugate on a dual grid, by both routes when possible.
pub fn conjugate(f: &ConvexFn, dual_grid: &Grid, tol: &Tolerances) -> Result<ConjugateResult> {
    check_dim(f.dim(), dual_grid.dim())?;
    let prepared = PreparedConjugate::sampled(f, tol);
    let mut raw = Vec::with_capacity(dual_grid.len());
    let mut flagged = Vec::with_capacity(dual_grid.len());
    let mut attainment = Vec::with_capacity(dual_grid.len());
    for xs in dual_grid.points() {
        let c = prepared.eval(&xs);
        raw.push(c.value);
        flagged.push(c.on_window_edge);
        attainment.push(c.argmax);
    }
    let exact = if has_closed_conjugate(f) {
        Some(dual_grid.points().map(|xs| closed_conjugate(f, &xs).unwrap()).collect())
    } else {
        None
    };
    Ok(ConjugateResult { closed_form: conjugate_ast(f), grid: dual_grid.clone(), raw, flagged, attainment, exact })
}

/// The biconjugate on a primal grid.
#[derive(Debug, Clone)]
pub struct BiconjugateResult {
    pub grid: Grid,
    pub values: Vec<ExtReal>,
    /// The dual maximiser sits on the dual grid boundary.
    pub flagged: Vec<bool>,
}

/// `f**` on `primal_grid`, from the sampled conjugate on `dual_grid`.
/// Dual points where the conjugate itself was flagged are skipped.
pub fn biconjugate(f: &ConvexFn, primal_grid: &Grid, dual_grid: &Grid, tol: &Tolerances) -> Result<BiconjugateResult> {
    check_dim(f.dim(), primal_grid.dim())?;
    let c = conjugate(f, dual_grid, tol)?;
    let mut pts = Vec::new();
    let mut vals = Vec::new();
    let mut edge = Vec::new();
    for k in 0..dual_grid.len() {
        if c.flagged[k] {
            continue;
        }
        let v = c.exact.as_ref().map_or(c.raw[k], |e| e[k]);
        if let ExtReal::Finite(v) = v {
            pts.push(dual_grid.point(k));
            vals.push(v);
            edge.push(dual_grid.on_boundary(&dual_grid.multi_index(k)));
        }
    }
    let mut values = Vec::with_capacity(primal_grid.len());
    let mut flagged = Vec::with_capacity(primal_grid.len());
    if pts.is_empty() {
        values.resize(primal_grid.len(), ExtReal::NegInf);
        flagged.resize(primal_grid.len(), true);
        return Ok(BiconjugateResult { grid: primal_grid.clone(), values, flagged });
    }
    if f.dim() == 1 {
        let pairs: Vec<(f64, f64)> = pts.iter().map(|p| p[0]).zip(vals.iter().copied()).collect();
        let lo_edge = edge[0];
        let hi_edge = *edge.last().unwrap();
        let hull = LowerHull::new(&pairs, lo_edge, hi_edge).expect("nonempty");
        for x in primal_grid.points() {
            let q = hull.query(x[0]);
            values.push(q.value);
            flagged.push(q.on_window_edge);
        }
    } else {
        for x in primal_grid.points() {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for (k, (p, v)) in pts.iter().zip(&vals).enumerate() {
                let g = dot(&x, p) - v;
                if g > best {
                    best = g;
                    arg = k;
                }
            }
            values.push(ExtReal::new(best));
            flagged.push(edge[arg]);
        }
    }
    Ok(BiconjugateResult { grid: primal_grid.clone(), values, flagged })
}

/// Certificate for an infimal convolution value.
#[derive(Debug, Clone, PartialEq)]
pub struct InfConvolution {
    pub value: ExtReal,
    /// `(u, x - u)` at the best split found.
    pub split: Option<(Vec<f64>, Vec<f64>)>,
    pub attained: bool,
}

/// `(f1 # f2)(x) = inf_u f1(u) + f2(x - u)`.
pub fn inf_convolution(f1: &ConvexFn, f2: &ConvexFn, x: &[f64], tol: &Tolerances) -> Result<InfConvolution> {
    check_dim(f1.dim(), f2.dim())?;
    check_dim(f1.dim(), x.len())?;
    Ok(inf_convolution_with(|u| f1.eval(u), |v| f2.eval(v), x, tol))
}

/// Infimal convolution of two evaluators. The split is searched on the window
/// grid around `x / 2`; a minimiser on the window boundary triggers an
/// outward extrapolation by doubling. A `+inf` value counts as attained.
pub fn inf_convolution_with(
    g1: impl Fn(&[f64]) -> ExtReal,
    g2: impl Fn(&[f64]) -> ExtReal,
    x: &[f64],
    tol: &Tolerances,
) -> InfConvolution {
    let n = x.len();
    let split_val = |u: &[f64]| -> ExtReal {
        let a = g1(u);
        if a.is_pos_inf() {
            return a;
        }
        let v: Vec<f64> = x.iter().zip(u).map(|(x, u)| x - u).collect();
        a.add_upper(g2(&v))
    };
    let grid = tol.window_grid(n);
    let mut best = ExtReal::PosInf;
    let mut arg: Option<(Vec<f64>, bool)> = None;
    // splits with u on the grid, and with x - u on the grid
    for k in 0..grid.len() {
        let p = grid.point(k);
        let edge = grid.on_boundary(&grid.multi_index(k));
        let q: Vec<f64> = x.iter().zip(&p).map(|(x, p)| x - p).collect();
        for u in [p, q] {
            let v = split_val(&u);
            if v < best || (v == best && v.is_finite() && arg.as_ref().is_some_and(|a| norm(&u) < norm(&a.0))) {
                best = v;
                arg = Some((u, edge));
            }
        }
    }
    let Some((mut u, edge)) = arg.filter(|_| best.is_finite()) else {
        if best.is_neg_inf() {
            return InfConvolution { value: best, split: None, attained: false };
        }
        return InfConvolution { value: ExtReal::PosInf, split: None, attained: true };
    };
    let pair = |u: &[f64]| (u.to_vec(), x.iter().zip(u).map(|(x, u)| x - u).collect::<Vec<f64>>());
    if !edge {
        if n == 1 {
            // golden refinement inside the neighbouring cells
            let h = grid.max_step();
            let (t, v) = golden_min(|t| split_val(&[t]).to_f64(), u[0] - h, u[0] + h, 60);
            if v < best.to_f64() {
                best = ExtReal::new(v);
                u = vec![t];
            }
        }
        return InfConvolution { value: best, split: Some(pair(&u)), attained: true };
    }
    // outward extrapolation along the boundary minimiser
    let r0 = norm(&u);
    let dir: Vec<f64> = u.iter().map(|v| v / r0).collect();
    let at = |r: f64| -> Vec<f64> { dir.iter().map(|d| d * r).collect() };
    let mut rs = vec![r0];
    let mut gs = vec![best.to_f64()];
    for i in 1..=10 {
        let r = r0 * 2f64.powi(i);
        let v = split_val(&at(r));
        match v {
            ExtReal::Finite(g) => {
                rs.push(r);
                gs.push(g);
            }
            ExtReal::NegInf => return InfConvolution { value: v, split: None, attained: false },
            ExtReal::PosInf => break,
        }
    }
    let m = gs.len();
    let (imin, gmin) = gs.iter().copied().enumerate().fold((0, f64::INFINITY), |acc, (i, g)| if g < acc.1 { (i, g) } else { acc });
    if imin > 0 && imin + 1 < m {
        // minimum beyond the window but at finite distance
        let (t, v) = golden_min(|t| split_val(&at(t)).to_f64(), rs[imin - 1], rs[imin + 1], 80);
        let (t, v) = if v < gmin { (t, v) } else { (rs[imin], gmin) };
        return InfConvolution { value: ExtReal::new(v), split: Some(pair(&at(t))), attained: true };
    }
    if m < 3 {
        return InfConvolution { value: ExtReal::new(gmin), split: Some(pair(&at(rs[imin]))), attained: imin + 1 < m };
    }
    // strictly decreasing out to the last doubling
    let d1 = gs[m - 3] - gs[m - 2];
    let d2 = gs[m - 2] - gs[m - 1];
    if d1 <= 0.0 || d2 <= 0.0 {
        return InfConvolution { value: ExtReal::new(gmin), split: None, attained: false };
    }
    let ratio = d2 / d1;
    if ratio >= 0.95 {
        return InfConvolution { value: ExtReal::NegInf, split: None, attained: false };
    }
    let limit = gs[m - 1] - d2 * ratio / (1.0 - ratio);
    InfConvolution { value: ExtReal::new(limit), split: None, attained: false }
}

/// Golden-section minimisation on `[a, b]`; returns `(argmin, min)`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Outcome of the sum qualification test at one dual point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionH {
    /// `(f1 + f2)*(x*)` equals `(f1* # f2*)(x*)` within `set_tol`.
    pub holds_as_inf: bool,
    /// The infimum is attained by some split.
    pub attained: bool,
    pub lhs: ExtReal,
    pub rhs: InfConvolution,
}

impl ConditionH {
    pub fn holds(&self) -> bool {
        self.holds_as_inf && self.attained
    }
}

/// Tests `(f1 + f2)*(x*) = min_{x1* + x2* = x*} f1*(x1*) + f2*(x2*)`.
pub fn check_condition_h(f1: &ConvexFn, f2: &ConvexFn, xs: &[f64], tol: &Tolerances) -> Result<ConditionH> {
    check_dim(f1.dim(), f2.dim())?;
    check_dim(f1.dim(), xs.len())?;
    let sum = ConvexFn::sum(f1.clone(), f2.clone());
    let lhs = PreparedConjugate::new(&sum, tol).value(xs);
    let c1 = PreparedConjugate::new(f1, tol);
    let c2 = PreparedConjugate::new(f2, tol);
    let rhs = inf_convolution_with(|u| c1.value(u), |v| c2.value(v), xs, tol);
    let holds_as_inf = match (lhs, rhs.value) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs() <= tol.set_tol,
        (a, b) => a == b,
    };
    Ok(ConditionH { holds_as_inf, attained: rhs.attained, lhs, rhs })
}

/// The three domain regularity conditions for a pair of functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Regularity {
    /// Continuity type: the interior of one domain meets the other domain.
    pub mr: bool,
    /// The cone generated by `dom f1 - dom f2` is a linear subspace.
    pub ab: bool,
    /// The origin is an interior point of `dom f1 - dom f2`.
    pub bs: bool,
}

fn polyhedral_domain(f: &ConvexFn) -> Result<Polyhedron> {
    let d = f.effective_domain();
    d.to_polyhedron()
        .ok_or_else(|| Error::UnsupportedDomainShape(format!("domain {:?} is not polyhedral", kind_name(&d))))
}

fn kind_name(s: &ConvexSetDesc) -> &'static str {
    match s {
        ConvexSetDesc::Ball { .. } => "ball",
        ConvexSetDesc::Epigraph { .. } => "epigraph",
        _ => "set",
    }
}

pub fn check_regularity(f1: &ConvexFn, f2: &ConvexFn, tol: &Tolerances) -> Result<Regularity> {
    check_dim(f1.dim(), f2.dim())?;
    let d1 = polyhedral_domain(f1)?;
    let d2 = polyhedral_domain(f2)?;
    Ok(regularity_of_polyhedra(&d1, &d2, tol))
}

/// Regularity conditions for two polyhedral sets.
pub fn regularity_of_sets(a: &ConvexSetDesc, b: &ConvexSetDesc, tol: &Tolerances) -> Result<Regularity> {
    check_dim(a.dim(), b.dim())?;
    let pa = a.to_polyhedron().ok_or_else(|| Error::UnsupportedDomainShape(kind_name(a).into()))?;
    let pb = b.to_polyhedron().ok_or_else(|| Error::UnsupportedDomainShape(kind_name(b).into()))?;
    Ok(regularity_of_polyhedra(&pa, &pb, tol))
}

/// `int(a)` meets `b` with margin `set_tol`.
pub(crate) fn interior_meets(a: &Polyhedron, b: &Polyhedron, tol: &Tolerances) -> bool {
    a.interior_radius_within(b).is_some_and(|t| t >= tol.set_tol)
}

fn regularity_of_polyhedra(d1: &Polyhedron, d2: &Polyhedron, tol: &Tolerances) -> Regularity {
    let n = d1.dim;
    let mr = interior_meets(d1, d2, tol) || interior_meets(d2, d1, tol);
    let meet = !d1.meet(d2).is_empty();
    let h_diff = |d: &[f64]| -> ExtReal {
        let neg: Vec<f64> = d.iter().map(|v| -v).collect();
        let a = support_of(d1, d);
        let b = support_of(d2, &neg);
        if a.is_neg_inf() || b.is_neg_inf() {
            ExtReal::NegInf
        } else {
            a.add_upper(b)
        }
    };
    let mut dirs = unit_directions(n, tol.support_dirs);
    for row in d1.rows.iter().chain(&d2.rows) {
        let r = norm(row);
        if r > 0.0 {
            dirs.push(row.iter().map(|v| v / r).collect());
            dirs.push(row.iter().map(|v| -v / r).collect());
        }
    }
    if n == 3 {
        let rows: Vec<&Vec<f64>> = d1.rows.iter().chain(&d2.rows).collect();
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let (a, b) = (rows[i], rows[j]);
                let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
                let r = norm(&c);
                if r > 1e-12 {
                    dirs.push(c.iter().map(|v| v / r).collect());
                    dirs.push(c.iter().map(|v| -v / r).collect());
                }
            }
        }
    }
    let bs = meet && dirs.iter().all(|d| h_diff(d) >= ExtReal::new(tol.set_tol));
    let in_polar = |d: &[f64]| h_diff(d) <= ExtReal::new(tol.set_tol);
    let ab = meet
        && dirs.iter().all(|d| {
            let neg: Vec<f64> = d.iter().map(|v| -v).collect();
            in_polar(d) == in_polar(&neg)
        });
    Regularity { mr, ab, bs }
}

fn support_of(p: &Polyhedron, d: &[f64]) -> ExtReal {
    match p.maximize(d) {
        crate::lp::LpOutcome::Infeasible => ExtReal::NegInf,
        crate::lp::LpOutcome::Unbounded => ExtReal::PosInf,
        crate::lp::LpOutcome::Optimal { value, .. } => ExtReal::new(value),
    }
}

/// Support function of a set, shared across closures.
fn support_closure(set: &ConvexSetDesc, tol: &Tolerances) -> Arc<dyn Fn(&[f64]) -> ExtReal + Send + Sync> {
    let s = set.clone();
    let t = tol.clone();
    match set.to_polyhedron() {
        Some(p) => Arc::new(move |d: &[f64]| support_of(&p, d)),
        None => Arc::new(move |d: &[f64]| s.support(d, &t)),
    }
}

/// Polar set `{x* : <x*, x> <= 1 for all x in A}`.
pub fn polar(set: &ConvexSetDesc, tol: &Tolerances) -> Result<DualSet> {
    set.validate()?;
    let h = support_closure(set, tol);
    let slack = tol.slack(1.0);
    let hm = h.clone();
    let member = move |x: &[f64]| hm(x) <= ExtReal::new(1.0 + slack);
    let mut out = DualSet::from_membership(set.dim(), member.clone());
    if set.dim() == 1 {
        out = out.with_interval(extract_interval(&member, tol.window_radius, &[0.0], 2000));
    }
    Ok(out)
}

/// `eps`-normal set `{x* : <x*, x - x_bar> <= eps for all x in C}`.
pub fn eps_normal_set(set: &ConvexSetDesc, x_bar: &[f64], eps: f64, tol: &Tolerances) -> Result<DualSet> {
    set.validate()?;
    check_dim(set.dim(), x_bar.len())?;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps must be >= 0, got {eps}")));
    }
    if !set.contains(x_bar) {
        return Err(Error::InvalidInput(format!("{x_bar:?} is not in the set")));
    }
    let h = support_closure(set, tol);
    let xb = x_bar.to_vec();
    let t = tol.clone();
    let member = move |x: &[f64]| {
        let lhs = h(x).add_upper(ExtReal::new(-dot(x, &xb)));
        lhs <= ExtReal::new(eps + t.slack(dot(x, &xb)))
    };
    let mut out = DualSet::from_membership(set.dim(), member.clone());
    if set.dim() == 1 {
        out = out.with_interval(extract_interval(&member, tol.window_radius, &[0.0], 2000));
    }
    Ok(out)
}

/// Normal cone as the intersection of `eps`-normal sets along the ladder.
pub fn normal_cone(set: &ConvexSetDesc, x_bar: &[f64], tol: &Tolerances) -> Result<DualSet> {
    let mut parts = Vec::new();
    for &eta in &tol.eta_ladder {
        parts.push(eps_normal_set(set, x_bar, eta, tol)?);
    }
    parts.push(eps_normal_set(set, x_bar, 0.0, tol)?);
    Ok(DualSet::intersection(parts))
}

/// `eps`-normals to a cone `K` at `x_bar`: `{x* in K° : <x*, x_bar> >= -eps}`.
pub fn cone_eps_normal_contains(cone: &ConvexSetDesc, x_bar: &[f64], eps: f64, xs: &[f64], tol: &Tolerances) -> bool {
    let in_polar_cone = cone.support(xs, tol) <= ExtReal::new(tol.slack(0.0));
    in_polar_cone && dot(xs, x_bar) >= -eps - tol.slack(dot(xs, x_bar))
}

/// Interval view helper for 1D results.
pub fn interval_of(set: &DualSet, tol: &Tolerances) -> XInterval {
    set.interval_on_window(tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn closed_forms() {
        assert_eq!(closed_conjugate(&ConvexFn::NegSqrt, &[-0.5]), Some(ExtReal::Finite(0.5)));
        assert_eq!(closed_conjugate(&ConvexFn::NegSqrt, &[0.0]), Some(ExtReal::PosInf));
        assert_eq!(closed_conjugate(&ConvexFn::square(), &[2.0]), Some(ExtReal::Finite(1.0)));
        assert_eq!(closed_conjugate(&ConvexFn::abs(), &[0.9]), Some(ExtReal::ZERO));
        assert_eq!(closed_conjugate(&ConvexFn::abs(), &[1.1]), Some(ExtReal::PosInf));
        let scaled = ConvexFn::scale(2.0, ConvexFn::square());
        // (2 x^2)* = y^2 / 8
        assert_eq!(closed_conjugate(&scaled, &[4.0]), Some(ExtReal::Finite(2.0)));
        let e = closed_conjugate(&ConvexFn::Exp, &[1.0]).unwrap().to_f64();
        assert!((e + 1.0).abs() < 1e-15);
    }

    #[test]
    fn ast_round_trip_matches_values() {
        for f in [ConvexFn::NegSqrt, ConvexFn::square(), ConvexFn::quad(vec![2.0], vec![1.0])] {
            let g = conjugate_ast(&f).unwrap();
            for s in [-3.0, -0.7, 0.4] {
                let a = closed_conjugate(&f, &[s]).unwrap();
                let b = g.eval(&[s]);
                match (a, b) {
                    (ExtReal::Finite(a), ExtReal::Finite(b)) => assert!((a - b).abs() < 1e-12, "{f:?} {s}"),
                    (a, b) => assert_eq!(a, b),
                }
            }
        }
    }

    #[test]
    fn sampled_matches_closed_for_square() {
        let g = Grid::interval(-5.0, 5.0, 100).unwrap();
        let r = conjugate(&ConvexFn::square(), &g, &tol()).unwrap();
        assert!(!r.any_flagged());
        assert!(r.closed_vs_sampled_gap().unwrap() < 1e-4);
    }

    #[test]
    fn neg_sqrt_flags_near_zero() {
        let g = Grid::interval(-1.0, 0.0, 10).unwrap();
        let r = conjugate(&ConvexFn::NegSqrt, &g, &tol()).unwrap();
        assert!(r.flagged[10]);
        assert!(!r.flagged[0]);
        assert!(r.require_unflagged().is_err());
    }

    #[test]
    fn biconjugate_of_abs() {
        let p = Grid::interval(-2.0, 2.0, 40).unwrap();
        let d = Grid::interval(-3.0, 3.0, 60).unwrap();
        let b = biconjugate(&ConvexFn::abs(), &p, &d, &tol()).unwrap();
        for (k, x) in p.points().enumerate() {
            assert!((b.values[k].to_f64() - x[0].abs()).abs() < 1e-9);
        }
    }

    #[test]
    fn inf_convolution_of_abs_and_square() {
        // Huber function: x^2 for |x| <= 1/2, |x| - 1/4 beyond
        let r = inf_convolution(&ConvexFn::abs(), &ConvexFn::square(), &[2.0], &tol()).unwrap();
        assert!(r.attained);
        assert!((r.value.to_f64() - 1.75).abs() < 1e-6);
    }

    #[test]
    fn condition_h_fails_by_attainment_for_origin_and_neg_sqrt() {
        let f1 = ConvexFn::indicator(ConvexSetDesc::Singleton { point: vec![0.0] });
        let h = check_condition_h(&f1, &ConvexFn::NegSqrt, &[0.0], &tol()).unwrap();
        assert!(h.holds_as_inf, "{h:?}");
        assert!(!h.attained);
        // the conjugate infimum escapes to x2* -> -inf at every x*
        let h = check_condition_h(&f1, &ConvexFn::NegSqrt, &[1.5], &tol()).unwrap();
        assert!(h.holds_as_inf && !h.attained);
        let h = check_condition_h(&ConvexFn::abs(), &ConvexFn::affine(vec![0.5], 0.0), &[0.7], &tol()).unwrap();
        assert!(h.holds(), "{h:?}");
    }

    #[test]
    fn regularity_line_pairs() {
        let axis_x = ConvexSetDesc::halfspaces(2, vec![(vec![0.0, 1.0], 0.0), (vec![0.0, -1.0], 0.0)]);
        let axis_y = ConvexSetDesc::halfspaces(2, vec![(vec![1.0, 0.0], 0.0), (vec![-1.0, 0.0], 0.0)]);
        let same = regularity_of_sets(&axis_x, &axis_x, &tol()).unwrap();
        assert_eq!(same, Regularity { mr: false, ab: true, bs: false });
        let cross = regularity_of_sets(&axis_x, &axis_y, &tol()).unwrap();
        assert_eq!(cross, Regularity { mr: false, ab: true, bs: true });
    }

    #[test]
    fn polar_of_shifted_disc() {
        let disc = ConvexSetDesc::ball(vec![1.0, 0.0], 1.0);
        let p = polar(&disc, &tol()).unwrap();
        assert!(p.contains(&[0.5, 0.0]));
        assert!(p.contains(&[-3.0, 0.0]));
        assert!(!p.contains(&[0.6, 0.0]));
        assert!(p.contains(&[0.0, 1.0]));
        assert!(!p.contains(&[0.0, 1.1]));
    }

    #[test]
    fn eps_normals_of_interval() {
        let c = ConvexSetDesc::interval(0.0, 1.0);
        let n = eps_normal_set(&c, &[0.0], 0.5, &tol()).unwrap();
        let (lo, hi) = n.interval().unwrap().bounds().unwrap();
        assert_eq!(lo, ExtReal::NegInf);
        assert!((hi.to_f64() - 0.5).abs() < 1e-6);
        let cone = normal_cone(&c, &[0.0], &tol()).unwrap();
        let (_, hi) = cone.interval().unwrap().bounds().unwrap();
        assert!(hi.to_f64().abs() < 1e-6);
    }
}
