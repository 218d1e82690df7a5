//! Symbolic proper convex functions on R^n.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numerics::{dot, ExtReal, Grid};
use crate::sets::ConvexSetDesc;

/// Closed AST of a proper convex extended-real-valued function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConvexFn {
    /// `x -> <a, x> + b`
    Affine { a: Vec<f64>, b: f64 },
    /// `x -> sum q_i (x_i - shift_i)^2`, `q_i >= 0`
    QuadDiag { q: Vec<f64>, shift: Vec<f64> },
    /// `x -> sum w_i |x_i|`, `w_i > 0`
    AbsNorm { weights: Vec<f64> },
    /// `x -> -sqrt(x)` on `x >= 0`, `+inf` otherwise.
    NegSqrt,
    /// `x -> c / (-x)` on `x < 0`, `+inf` otherwise (`c > 0`).
    InvNeg { c: f64 },
    /// `x -> exp(x)`
    Exp,
    Indicator { set: ConvexSetDesc },
    Sum { f: Box<ConvexFn>, g: Box<ConvexFn> },
    /// `x -> lambda f(x)`, `lambda > 0`
    Scale { lambda: f64, f: Box<ConvexFn> },
    /// `(x, y) -> first(x) + second(y)`
    Separable { first: Box<ConvexFn>, second: Box<ConvexFn> },
    /// Grid data, multilinearly interpolated inside the grid. Outside the
    /// grid the value is `+inf`, or with `extrapolate` the edge cells are
    /// continued affinely.
    Sampled {
        grid: Grid,
        values: Vec<ExtReal>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        extrapolate: bool,
    },
}

impl ConvexFn {
    pub fn affine(a: Vec<f64>, b: f64) -> Self {
        ConvexFn::Affine { a, b }
    }

    pub fn quad(q: Vec<f64>, shift: Vec<f64>) -> Self {
        ConvexFn::QuadDiag { q, shift }
    }

    /// `x -> x^2` in one dimension.
    pub fn square() -> Self {
        ConvexFn::quad(vec![1.0], vec![0.0])
    }

    pub fn abs_norm(weights: Vec<f64>) -> Self {
        ConvexFn::AbsNorm { weights }
    }

    pub fn abs() -> Self {
        ConvexFn::abs_norm(vec![1.0])
    }

    pub fn indicator(set: ConvexSetDesc) -> Self {
        ConvexFn::Indicator { set }
    }

    pub fn sum(f: ConvexFn, g: ConvexFn) -> Self {
        ConvexFn::Sum { f: Box::new(f), g: Box::new(g) }
    }

    pub fn scale(lambda: f64, f: ConvexFn) -> Self {
        ConvexFn::Scale { lambda, f: Box::new(f) }
    }

    pub fn separable(first: ConvexFn, second: ConvexFn) -> Self {
        ConvexFn::Separable { first: Box::new(first), second: Box::new(second) }
    }

    /// Grid data with axis-wise convexity certification.
    pub fn sampled(grid: Grid, values: Vec<ExtReal>) -> Result<Self> {
        let f = ConvexFn::Sampled { grid, values, extrapolate: false };
        f.validate()?;
        Ok(f)
    }

    /// Grid data checked with an explicit convexity slack.
    pub fn sampled_with_tol(grid: Grid, values: Vec<ExtReal>, tol: f64) -> Result<Self> {
        check_sampled(&grid, &values, tol)?;
        Ok(ConvexFn::Sampled { grid, values, extrapolate: false })
    }

    /// Grid data continued affinely past the grid, checked with an explicit
    /// convexity slack.
    pub fn sampled_extrapolated(grid: Grid, values: Vec<ExtReal>, tol: f64) -> Result<Self> {
        check_sampled(&grid, &values, tol)?;
        Ok(ConvexFn::Sampled { grid, values, extrapolate: true })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexFn::Affine { a, .. } => a.len(),
            ConvexFn::QuadDiag { q, .. } => q.len(),
            ConvexFn::AbsNorm { weights } => weights.len(),
            ConvexFn::NegSqrt | ConvexFn::InvNeg { .. } | ConvexFn::Exp => 1,
            ConvexFn::Indicator { set } => set.dim(),
            ConvexFn::Sum { f, .. } | ConvexFn::Scale { f, .. } => f.dim(),
            ConvexFn::Separable { first, second } => first.dim() + second.dim(),
            ConvexFn::Sampled { grid, .. } => grid.dim(),
        }
    }

    /// Structural checks: parameter signs, dimension consistency, properness
    /// of primitives, convexity of sampled data.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        match self {
            ConvexFn::Affine { a, b } => {
                if a.is_empty() || !b.is_finite() || a.iter().any(|v| !v.is_finite()) {
                    return bad("affine: empty or non-finite coefficients".into());
                }
            }
            ConvexFn::QuadDiag { q, shift } => {
                if q.is_empty() || q.len() != shift.len() {
                    return bad("quad_diag: q and shift must have the same nonzero length".into());
                }
                if q.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("quad_diag: q_i must be finite and >= 0".into());
                }
            }
            ConvexFn::AbsNorm { weights } => {
                if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return bad("abs_norm: weights must be finite and > 0".into());
                }
            }
            ConvexFn::NegSqrt | ConvexFn::Exp => {}
            ConvexFn::InvNeg { c } => {
                if !(c.is_finite() && *c > 0.0) {
                    return bad("inv_neg: c must be > 0".into());
                }
            }
            ConvexFn::Indicator { set } => {
                set.validate()?;
                if set.is_empty_hint() {
                    return Err(Error::NotProper("indicator of an empty set".into()));
                }
            }
            ConvexFn::Sum { f, g } => {
                f.validate()?;
                g.validate()?;
                check_dim(f.dim(), g.dim())?;
            }
            ConvexFn::Scale { lambda, f } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return bad("scale: lambda must be > 0".into());
                }
                f.validate()?;
            }
            ConvexFn::Separable { first, second } => {
                first.validate()?;
                second.validate()?;
            }
            ConvexFn::Sampled { grid, values, .. } => {
                check_sampled(grid, values, 1e-9)?;
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<ExtReal> {
        check_dim(self.dim(), x.len())?;
        Ok(self.eval(x))
    }

    /// Evaluation without the dimension check.
    pub fn eval(&self, x: &[f64]) -> ExtReal {
        match self {
            ConvexFn::Affine { a, b } => ExtReal::new(dot(a, x) + b),
            ConvexFn::QuadDiag { q, shift } => ExtReal::new(
                q.iter().zip(shift).zip(x).map(|((q, s), v)| q * (v - s) * (v - s)).sum(),
            ),
            ConvexFn::AbsNorm { weights } => {
                ExtReal::new(weights.iter().zip(x).map(|(w, v)| w * v.abs()).sum())
            }
            ConvexFn::NegSqrt => {
                if x[0] >= 0.0 {
                    ExtReal::new(-x[0].sqrt())
                } else {
                    ExtReal::PosInf
                }
            }
            ConvexFn::InvNeg { c } => {
                if x[0] < 0.0 {
                    ExtReal::new(c / -x[0])
                } else {
                    ExtReal::PosInf
                }
            }
            ConvexFn::Exp => ExtReal::new(x[0].exp()),
            ConvexFn::Indicator { set } => {
                if set.contains(x) {
                    ExtReal::ZERO
                } else {
                    ExtReal::PosInf
                }
            }
            ConvexFn::Sum { f, g } => {
                let a = f.eval(x);
                if a.is_pos_inf() {
                    return a;
                }
                a.add_upper(g.eval(x))
            }
            ConvexFn::Scale { lambda, f } => f.eval(x).scale(*lambda),
            ConvexFn::Separable { first, second } => {
                let n = first.dim();
                let a = first.eval(&x[..n]);
                if a.is_pos_inf() {
                    return a;
                }
                a.add_upper(second.eval(&x[n..]))
            }
            ConvexFn::Sampled { grid, values, extrapolate } => interpolate(grid, values, x, *extrapolate),
        }
    }

    /// Symbolic description of `{x : f(x) < +inf}`.
    ///
    /// For `InvNeg` the domain `(-inf, 0)` is open; its closure is returned.
    pub fn effective_domain(&self) -> ConvexSetDesc {
        match self {
            ConvexFn::Affine { .. } | ConvexFn::QuadDiag { .. } | ConvexFn::AbsNorm { .. } => {
                ConvexSetDesc::FullSpace { dim: self.dim() }
            }
            ConvexFn::Exp => ConvexSetDesc::FullSpace { dim: 1 },
            ConvexFn::NegSqrt => ConvexSetDesc::Interval { lo: ExtReal::ZERO, hi: ExtReal::PosInf },
            ConvexFn::InvNeg { .. } => {
                ConvexSetDesc::Interval { lo: ExtReal::NegInf, hi: ExtReal::ZERO }
            }
            ConvexFn::Indicator { set } => set.clone(),
            ConvexFn::Sum { f, g } => {
                let (a, b) = (f.effective_domain(), g.effective_domain());
                match (&a, &b) {
                    (ConvexSetDesc::FullSpace { .. }, _) => b,
                    (_, ConvexSetDesc::FullSpace { .. }) => a,
                    _ => ConvexSetDesc::Intersection { sets: vec![a, b] },
                }
            }
            ConvexFn::Scale { f, .. } => f.effective_domain(),
            ConvexFn::Separable { first, second } => {
                let (a, b) = (first.effective_domain(), second.effective_domain());
                match (&a, &b) {
                    (ConvexSetDesc::FullSpace { .. }, ConvexSetDesc::FullSpace { .. }) => {
                        ConvexSetDesc::FullSpace { dim: self.dim() }
                    }
                    _ => ConvexSetDesc::Product { first: Box::new(a), second: Box::new(b) },
                }
            }
            ConvexFn::Sampled { grid, values, extrapolate } => sampled_domain(grid, values, *extrapolate),
        }
    }

    /// The epigraph `{(x, a) : a >= f(x)}` as a set in R^(n+1).
    pub fn epigraph(&self) -> ConvexSetDesc {
        ConvexSetDesc::Epigraph { f: Box::new(self.clone()) }
    }

    /// True if the function is an indicator (possibly scaled or summed with
    /// other indicators).
    pub fn is_indicator(&self) -> bool {
        match self {
            ConvexFn::Indicator { .. } => true,
            ConvexFn::Scale { f, .. } => f.is_indicator(),
            ConvexFn::Sum { f, g } => f.is_indicator() && g.is_indicator(),
            _ => false,
        }
    }
}

fn check_sampled(grid: &Grid, values: &[ExtReal], tol: f64) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "sampled: {} values for a grid of {} points",
            values.len(),
            grid.len()
        )));
    }
    if values.iter().any(|v| v.is_neg_inf()) {
        return Err(Error::NotProper("sampled value -inf".into()));
    }
    if !values.iter().any(|v| v.is_finite()) {
        return Err(Error::NotProper("sampled function has empty domain".into()));
    }
    let scale = values.iter().filter_map(|v| v.finite()).fold(0.0f64, |m, v| m.max(v.abs()));
    let slack = tol * (1.0 + scale);
    for axis in 0..grid.dim() {
        let n = grid.axes()[axis].len();
        for k in 0..grid.len() {
            let idx = grid.multi_index(k);
            if idx[axis] != 0 {
                continue;
            }
            let line: Vec<ExtReal> = (0..n)
                .map(|i| {
                    let mut j = idx.clone();
                    j[axis] = i;
                    values[grid.flat_index(&j)]
                })
                .collect();
            // finite entries along a line must be contiguous
            let finite: Vec<usize> = (0..n).filter(|&i| line[i].is_finite()).collect();
            if let (Some(&first), Some(&last)) = (finite.first(), finite.last()) {
                if last - first + 1 != finite.len() {
                    return Err(Error::NotConvex(format!("axis {axis}: domain has a gap")));
                }
                for i in first + 1..last {
                    let (l, m, r) = (line[i - 1].to_f64(), line[i].to_f64(), line[i + 1].to_f64());
                    if m > 0.5 * (l + r) + slack {
                        return Err(Error::NotConvex(format!(
                            "axis {axis}: midpoint value {m} above chord {}",
                            0.5 * (l + r)
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

fn interpolate(grid: &Grid, values: &[ExtReal], x: &[f64], extrapolate: bool) -> ExtReal {
    let d = grid.dim();
    let mut base = vec![0usize; d];
    let mut frac = vec![0.0f64; d];
    for (i, a) in grid.axes().iter().enumerate() {
        let v = x[i];
        let eps = 1e-12 * (1.0 + a.lo.abs().max(a.hi.abs()));
        let outside = v < a.lo - eps || v > a.hi + eps;
        if outside && !extrapolate {
            return ExtReal::PosInf;
        }
        let n = a.intervals();
        let raw = (v - a.lo) / a.step;
        let t = raw.clamp(0.0, n as f64);
        let mut c = t.floor() as usize;
        if c >= n {
            c = n.saturating_sub(1);
        }
        let mut fr = t - c as f64;
        if n == 0 {
            fr = 0.0;
        }
        // snap near-grid coordinates so grid points evaluate exactly
        if fr.abs() < 1e-9 {
            fr = 0.0;
        } else if (1.0 - fr).abs() < 1e-9 {
            fr = 1.0;
        }
        if outside && n > 0 {
            fr = raw - c as f64;
        }
        base[i] = c;
        frac[i] = fr;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut idx = base.clone();
        for i in 0..d {
            if corner >> i & 1 == 1 {
                w *= frac[i];
                idx[i] += 1;
            } else {
                w *= 1.0 - frac[i];
            }
        }
        if w == 0.0 {
            continue;
        }
        // weights may be negative when extrapolating
        match values[grid.flat_index(&idx)] {
            ExtReal::Finite(v) => acc += w * v,
            _ => return ExtReal::PosInf,
        }
    }
    ExtReal::new(acc)
}

fn sampled_domain(grid: &Grid, values: &[ExtReal], extrapolate: bool) -> ConvexSetDesc {
    let d = grid.dim();
    if extrapolate && d == 1 {
        let n = values.len();
        let first = values.iter().position(|v| v.is_finite()).unwrap_or(0);
        let last = values.iter().rposition(|v| v.is_finite()).unwrap_or(0);
        let lo = if first == 0 { ExtReal::NegInf } else { ExtReal::new(grid.point(first)[0]) };
        let hi = if last == n - 1 { ExtReal::PosInf } else { ExtReal::new(grid.point(last)[0]) };
        return ConvexSetDesc::Interval { lo, hi };
    }
    if extrapolate && values.iter().all(|v| v.is_finite()) {
        return ConvexSetDesc::FullSpace { dim: d };
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (k, v) in values.iter().enumerate() {
        if v.is_finite() {
            for (i, x) in grid.point(k).into_iter().enumerate() {
                lo[i] = lo[i].min(x);
                hi[i] = hi[i].max(x);
            }
        }
    }
    if d == 1 {
        ConvexSetDesc::Interval { lo: lo[0].into(), hi: hi[0].into() }
    } else {
        ConvexSetDesc::Box { lo, hi }
    }
}

/// Heuristic lower-semicontinuity screen on grid data.
///
/// At every grid point and along every axis, the step from a finite neighbour
/// up to the point is compared with the next two steps further out. A convex
/// continuous function changes gradually between adjacent cells; a step that
/// exceeds four times the larger of the next two (plus `abs_tol`) is taken as
/// a downward jump of the limit, i.e. a failure of lower semicontinuity.
/// This is a necessary-condition screen, not a proof.
pub fn check_lsc_on_grid(f: &ConvexFn, grid: &Grid, abs_tol: f64) -> Result<bool> {
    check_dim(f.dim(), grid.dim())?;
    let values: Vec<ExtReal> = grid.points().map(|p| f.eval(&p)).collect();
    for k in 0..grid.len() {
        let fk = match values[k].finite() {
            Some(v) => v,
            None => continue,
        };
        let idx = grid.multi_index(k);
        for axis in 0..grid.dim() {
            let n = grid.axes()[axis].len() as isize;
            for dir in [-1isize, 1] {
                let at = |s: isize| -> Option<f64> {
                    let i = idx[axis] as isize + dir * s;
                    if i < 0 || i >= n {
                        return None;
                    }
                    let mut j = idx.clone();
                    j[axis] = i as usize;
                    values[grid.flat_index(&j)].finite()
                };
                let (Some(f1), Some(f2)) = (at(1), at(2)) else { continue };
                let step = fk - f1;
                if step <= abs_tol {
                    continue;
                }
                let next = (f1 - f2).abs().max(at(3).map_or(0.0, |f3| (f2 - f3).abs()));
                if step > 4.0 * next + abs_tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Axis;

    #[test]
    fn neg_sqrt_values() {
        let f = ConvexFn::NegSqrt;
        assert_eq!(f.evaluate(&[4.0]).unwrap(), ExtReal::Finite(-2.0));
        assert_eq!(f.evaluate(&[-1.0]).unwrap(), ExtReal::PosInf);
    }

    #[test]
    fn indicator_of_origin() {
        let f = ConvexFn::indicator(ConvexSetDesc::Singleton { point: vec![0.0] });
        assert_eq!(f.evaluate(&[0.0]).unwrap(), ExtReal::ZERO);
        assert_eq!(f.evaluate(&[0.1]).unwrap(), ExtReal::PosInf);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = ConvexFn::abs();
        assert!(matches!(f.evaluate(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn domains() {
        assert_eq!(
            ConvexFn::NegSqrt.effective_domain(),
            ConvexSetDesc::Interval { lo: ExtReal::ZERO, hi: ExtReal::PosInf }
        );
        assert_eq!(
            ConvexFn::affine(vec![1.0, 2.0], 3.0).effective_domain(),
            ConvexSetDesc::FullSpace { dim: 2 }
        );
        let unit = ConvexSetDesc::Interval { lo: 0.0.into(), hi: 1.0.into() };
        let f = ConvexFn::sum(ConvexFn::indicator(unit.clone()), ConvexFn::abs());
        assert_eq!(f.effective_domain(), unit);
    }

    #[test]
    fn epigraph_membership() {
        let e = ConvexFn::abs().epigraph();
        assert!(e.contains(&[0.0, 0.0]));
        assert!(!e.contains(&[1.0, 0.5]));
        assert!(ConvexFn::NegSqrt.epigraph().contains(&[4.0, -2.0]));
    }

    #[test]
    fn sampled_rejects_nonconvex_and_improper() {
        let g = Grid::interval(0.0, 2.0, 2).unwrap();
        let v = |xs: &[f64]| xs.iter().map(|&x| ExtReal::new(x)).collect::<Vec<_>>();
        assert!(matches!(ConvexFn::sampled(g.clone(), v(&[0.0, 1.0, 0.0])), Err(Error::NotConvex(_))));
        assert!(ConvexFn::sampled(g.clone(), v(&[f64::INFINITY; 3])).is_err());
        assert!(ConvexFn::sampled(g.clone(), v(&[0.0, f64::INFINITY, 0.0])).is_err());
        assert!(ConvexFn::sampled(g, v(&[1.0, 0.0, 1.0])).is_ok());
    }

    #[test]
    fn sampled_interpolates() {
        let g = Grid::interval(0.0, 2.0, 2).unwrap();
        let f = ConvexFn::sampled(g, vec![1.0.into(), 0.0.into(), 1.0.into()]).unwrap();
        assert_eq!(f.eval(&[0.5]), ExtReal::Finite(0.5));
        assert_eq!(f.eval(&[2.0]), ExtReal::Finite(1.0));
        assert_eq!(f.eval(&[2.5]), ExtReal::PosInf);
        let g2 = Grid::new(vec![Axis { lo: 0.0, hi: 1.0, step: 1.0 }; 2]).unwrap();
        let f2 = ConvexFn::sampled(g2, vec![0.0.into(), 1.0.into(), 1.0.into(), 2.0.into()]).unwrap();
        assert!((f2.eval(&[0.5, 0.5]).to_f64() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lsc_screen() {
        let g = Grid::interval(0.0, 4.0, 400).unwrap();
        assert!(check_lsc_on_grid(&ConvexFn::NegSqrt, &g, 1e-9).unwrap());
        let unit = ConvexSetDesc::Interval { lo: 0.0.into(), hi: 1.0.into() };
        let gw = Grid::interval(-2.0, 2.0, 400).unwrap();
        assert!(check_lsc_on_grid(&ConvexFn::indicator(unit), &gw, 1e-9).unwrap());
        assert!(check_lsc_on_grid(&ConvexFn::square(), &gw, 1e-9).unwrap());
        // value 1 at the left end of the domain, 0 on the rest: the limit from
        // the right is 0 < 1
        let gj = Grid::interval(0.0, 1.0, 20).unwrap();
        let mut vals = vec![ExtReal::ZERO; 21];
        vals[0] = 1.0.into();
        let jump = ConvexFn::sampled(gj.clone(), vals).unwrap();
        assert!(!check_lsc_on_grid(&jump, &gj, 1e-9).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let f = ConvexFn::separable(ConvexFn::square(), ConvexFn::abs());
        let s = serde_json::to_string(&f).unwrap();
        let back: ConvexFn = serde_json::from_str(&s).unwrap();
        assert_eq!(f, back);
    }
}
