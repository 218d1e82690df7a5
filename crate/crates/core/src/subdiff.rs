//! Epsilon-subdifferentials and their calculus.

use std::sync::Arc;

use crate::dual::{extract_interval, DualSet, SetComparison};
use crate::error::{check_dim, Error, Result};
use crate::functions::ConvexFn;
use crate::minkowski::{golden_quasi, SeparationTest};
use crate::numerics::{dot, interval_hausdorff_distance, norm, ExtReal, Tolerances, XInterval};
use crate::transforms::{check_condition_h, eps_normal_set, PreparedConjugate};

/// Points of the logarithmic `t` grid in the support formula.
const T_POINTS: usize = 241;
const T_MIN: f64 = 1e-6;
const T_MAX: f64 = 1e6;

/// A validated request for `∂_ε f(x̄)`.
#[derive(Debug, Clone)]
pub struct EpsSubdiffQuery {
    pub f: ConvexFn,
    pub x_bar: Vec<f64>,
    pub eps: f64,
    pub tol: Tolerances,
    fx: f64,
}

impl EpsSubdiffQuery {
    pub fn new(f: ConvexFn, x_bar: Vec<f64>, eps: f64, tol: Tolerances) -> Result<Self> {
        f.validate()?;
        tol.validate()?;
        check_dim(f.dim(), x_bar.len())?;
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidInput(format!("eps must be finite and >= 0, got {eps}")));
        }
        let fx = f.eval(&x_bar).finite().ok_or_else(|| {
            Error::InvalidInput(format!("f is not finite at {x_bar:?}"))
        })?;
        Ok(EpsSubdiffQuery { f, x_bar, eps, tol, fx })
    }

    /// `f(x̄)`.
    pub fn value(&self) -> f64 {
        self.fx
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        EpsSubdiffQuery { eps, ..self.clone() }
    }
}

/// Conjugate-based membership test, prepared once per query.
#[derive(Debug, Clone)]
pub struct SubdiffTester {
    conj: PreparedConjugate,
    x_bar: Vec<f64>,
    fx: f64,
    eps: f64,
    tol: Tolerances,
}

impl SubdiffTester {
    pub fn new(q: &EpsSubdiffQuery) -> Self {
        SubdiffTester {
            conj: PreparedConjugate::new(&q.f, &q.tol),
            x_bar: q.x_bar.clone(),
            fx: q.fx,
            eps: q.eps,
            tol: q.tol.clone(),
        }
    }

    /// `f*(x*) + f(x̄) - <x*, x̄> <= ε` up to a relative rounding slack.
    pub fn contains(&self, xs: &[f64]) -> bool {
        let c = self.conj.value(xs);
        let p = dot(xs, &self.x_bar);
        match c {
            ExtReal::Finite(v) => v + self.fx - p <= self.eps + self.tol.slack(p.abs() + self.fx.abs() + v.abs()),
            ExtReal::NegInf => true,
            ExtReal::PosInf => false,
        }
    }

    /// Whether the conjugate is evaluated in closed form.
    pub fn exact(&self) -> bool {
        self.conj.is_closed_form()
    }
}

/// Membership of one dual point.
pub fn eps_subdiff_membership(q: &EpsSubdiffQuery, xs: &[f64]) -> Result<bool> {
    check_dim(q.f.dim(), xs.len())?;
    Ok(SubdiffTester::new(q).contains(xs))
}

/// Support function of `∂_ε f(x̄)` in direction `v`:
/// `inf_{t>0} [f(x̄ + t v) - f(x̄) + ε] / t`, over a logarithmic `t` grid
/// with golden-section refinement around the best grid point.
pub fn support_formula(f: &ConvexFn, x_bar: &[f64], fx: f64, eps: f64, v: &[f64]) -> ExtReal {
    let vn = norm(v);
    if vn == 0.0 {
        return ExtReal::ZERO;
    }
    let q = |lt: f64| -> f64 {
        let t = lt.exp() / vn;
        let x: Vec<f64> = x_bar.iter().zip(v).map(|(a, b)| a + t * b).collect();
        match f.eval(&x) {
            ExtReal::Finite(y) => (y - fx + eps) / t,
            ExtReal::PosInf => f64::INFINITY,
            ExtReal::NegInf => f64::NEG_INFINITY,
        }
    };
    let (l0, l1) = (T_MIN.ln(), T_MAX.ln());
    let step = (l1 - l0) / (T_POINTS - 1) as f64;
    let mut best = f64::INFINITY;
    let mut arg = 0usize;
    for i in 0..T_POINTS {
        let val = q(l0 + step * i as f64);
        if val < best {
            best = val;
            arg = i;
        }
    }
    if best == f64::INFINITY {
        return ExtReal::PosInf;
    }
    if best == f64::NEG_INFINITY {
        return ExtReal::NegInf;
    }
    if eps == 0.0 && arg == 0 {
        // the directional derivative is the limit t -> 0+; decrements that do
        // not shrink across decades below the grid mean the limit is -inf
        let decade = 10f64.ln();
        let vals: Vec<f64> = (0..5).map(|k| q(l0 - decade * k as f64)).collect();
        let dec: Vec<f64> = vals.windows(2).map(|w| w[0] - w[1]).collect();
        if dec.iter().all(|d| *d > 0.0) && dec.windows(2).all(|w| w[1] >= 0.5 * w[0]) {
            return ExtReal::NegInf;
        }
        // below the grid the quotients are dominated by cancellation
        return ExtReal::new(best);
    }
    let anchor = l0 + step * arg as f64;
    let lo = anchor - if arg > 0 { step } else { 0.0 };
    let hi = anchor + if arg + 1 < T_POINTS { step } else { 0.0 };
    if hi > lo {
        let (_, r) = golden_quasi(&q, lo, hi, anchor, 60);
        best = best.min(r);
    }
    // values far below any window scale read as -inf (empty set)
    if best < -1e12 {
        return ExtReal::NegInf;
    }
    ExtReal::new(best)
}

/// Support formula in directions `+1` and `-1`, as an interval.
pub fn support_interval_1d(f: &ConvexFn, x_bar: f64, fx: f64, eps: f64) -> XInterval {
    let hi = support_formula(f, &[x_bar], fx, eps, &[1.0]);
    let lo = support_formula(f, &[x_bar], fx, eps, &[-1.0]).neg();
    if hi.is_neg_inf() || lo.is_pos_inf() {
        return XInterval::Empty;
    }
    if let (ExtReal::Finite(l), ExtReal::Finite(h)) = (lo, hi) {
        // a single point can come out with its ends crossed by rounding
        if l > h && l - h <= 1e-7 * (1.0 + l.abs()) {
            return XInterval::point(0.5 * (l + h));
        }
    }
    XInterval::new(lo, hi)
}

/// `∂_ε f(x̄)` with membership from the conjugate test and interval or
/// support views from the support formula. In 1D the membership-derived
/// interval is compared against the support-formula interval and the gap is
/// stored in `route_gap`.
pub fn eps_subdiff_set(q: &EpsSubdiffQuery) -> Result<DualSet> {
    let tester = SubdiffTester::new(q);
    let exact = tester.exact();
    let dim = q.f.dim();
    let f = q.f.clone();
    let xb = q.x_bar.clone();
    let (fx, eps) = (q.fx, q.eps);
    if dim == 1 {
        let iv = support_interval_1d(&q.f, q.x_bar[0], fx, eps);
        let t = tester.clone();
        let member = move |x: &[f64]| t.contains(x);
        let mut seeds = Vec::new();
        if let Some((a, b)) = iv.clip(q.tol.window_radius) {
            seeds.extend([0.5 * (a + b), a, b]);
        }
        let scanned = extract_interval(&member, q.tol.window_radius, &seeds, 2000);
        let gap = interval_hausdorff_distance(&iv, &scanned, q.tol.window_radius);
        let mut set = DualSet::from_membership(1, member)
            .with_interval(iv)
            .with_support(move |d| support_formula(&f, &xb, fx, eps, d));
        set.route_gap = Some(gap);
        set.window_flagged = !exact && gap > q.tol.set_tol;
        return Ok(set);
    }
    let t = tester;
    Ok(DualSet::from_membership(dim, move |x| t.contains(x))
        .with_support(move |d| support_formula(&f, &xb, fx, eps, d))
        .flagged(!exact))
}

/// `∂_η f(x̄)` along the ladder and their intersection, the ε = 0 limit.
#[derive(Debug, Clone)]
pub struct LadderResult {
    pub steps: Vec<(f64, DualSet)>,
    pub limit: DualSet,
}

pub fn subdiff_via_eps_intersection(f: &ConvexFn, x_bar: &[f64], tol: &Tolerances) -> Result<LadderResult> {
    let base = EpsSubdiffQuery::new(f.clone(), x_bar.to_vec(), 0.0, tol.clone())?;
    let mut steps = Vec::new();
    for &eta in &tol.eta_ladder {
        steps.push((eta, eps_subdiff_set(&base.with_eps(eta))?));
    }
    let limit = DualSet::intersection(steps.iter().map(|(_, s)| s.clone()).collect());
    Ok(LadderResult { steps, limit })
}

/// Both sides of the ε-subdifferential sum rule.
#[derive(Debug, Clone)]
pub struct SumRuleReport {
    pub eps: f64,
    pub lhs: DualSet,
    pub rhs: DualSet,
    /// The qualification condition held (with attainment) at every sampled
    /// dual point.
    pub condition_h: bool,
    pub comparison: SetComparison,
    /// Equality is certified only for ε > 0 under the qualification
    /// condition.
    pub certified: bool,
}

impl SumRuleReport {
    pub fn equal_on_window(&self) -> bool {
        self.comparison.agree
    }
}

/// `∂_ε(f1 + f2)(x̄)` against the union over `ε1 + ε2 = ε` of
/// `∂_ε1 f1(x̄) + ∂_ε2 f2(x̄)`.
pub fn sum_rule_eval(f1: &ConvexFn, f2: &ConvexFn, x_bar: &[f64], eps: f64, tol: &Tolerances) -> Result<SumRuleReport> {
    check_dim(f1.dim(), f2.dim())?;
    let sum = ConvexFn::sum(f1.clone(), f2.clone());
    let lhs = eps_subdiff_set(&EpsSubdiffQuery::new(sum, x_bar.to_vec(), eps, tol.clone())?)?;
    let q1 = EpsSubdiffQuery::new(f1.clone(), x_bar.to_vec(), 0.0, tol.clone())?;
    let q2 = EpsSubdiffQuery::new(f2.clone(), x_bar.to_vec(), 0.0, tol.clone())?;
    let splits = tol.gamma_pairs(eps);
    let dim = f1.dim();
    let rhs = if dim == 1 {
        let mut pieces: Vec<XInterval> = Vec::new();
        for &(e1, e2) in &splits {
            let a = support_interval_1d(f1, x_bar[0], q1.fx, e1);
            let b = support_interval_1d(f2, x_bar[0], q2.fx, e2);
            let s = a.add(&b);
            if !s.is_empty() {
                pieces.push(s);
            }
        }
        let hull = pieces.iter().fold(XInterval::Empty, |acc, p| acc.hull(p));
        let members = pieces.clone();
        DualSet::from_membership(1, move |x| members.iter().any(|p| p.contains(x[0]))).with_interval(hull)
    } else {
        let mut tests = Vec::new();
        for &(e1, e2) in &splits {
            let (g1, g2) = (f1.clone(), f2.clone());
            let (xb, fx1, fx2) = (x_bar.to_vec(), q1.fx, q2.fx);
            let h: Arc<dyn Fn(&[f64]) -> ExtReal + Send + Sync> = Arc::new(move |d: &[f64]| {
                let a = support_formula(&g1, &xb, fx1, e1, d);
                let b = support_formula(&g2, &xb, fx2, e2, d);
                if a.is_neg_inf() || b.is_neg_inf() {
                    ExtReal::NegInf
                } else {
                    a.add_upper(b)
                }
            });
            let test = SeparationTest::new(dim, 4 * tol.support_dirs, &*h, &[]);
            if test.nonempty() {
                tests.push((test, h));
            }
        }
        let slack = tol.member_slack;
        DualSet::from_membership(dim, move |x| tests.iter().any(|(t, h)| t.contains(x, &**h, slack * (1.0 + norm(x)))))
    };
    let r = tol.window_radius;
    let probes: Vec<Vec<f64>> = if dim == 1 {
        let n = tol.support_dirs.max(2);
        (0..n).map(|i| vec![-0.5 * r + r * i as f64 / (n - 1) as f64]).collect()
    } else {
        crate::numerics::unit_directions(dim, 8).into_iter().map(|u| u.iter().map(|v| v * 0.5 * r).collect()).collect()
    };
    let mut condition_h = true;
    for p in &probes {
        if !check_condition_h(f1, f2, p, tol)?.holds() {
            condition_h = false;
            break;
        }
    }
    let comparison = lhs.compare(&rhs, tol);
    Ok(SumRuleReport { eps, lhs, rhs, condition_h, comparison, certified: eps > 0.0 && condition_h && comparison.agree })
}

/// `∂_ε(λ f)(x̄)` against `λ ∂_{ε/λ} f(x̄)` on the window.
pub fn scale_rule_check(f: &ConvexFn, x_bar: &[f64], eps: f64, lambda: f64, tol: &Tolerances) -> Result<bool> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda must be > 0, got {lambda}")));
    }
    let scaled = ConvexFn::scale(lambda, f.clone());
    let lhs = eps_subdiff_set(&EpsSubdiffQuery::new(scaled, x_bar.to_vec(), eps, tol.clone())?)?;
    let inner = eps_subdiff_set(&EpsSubdiffQuery::new(f.clone(), x_bar.to_vec(), eps / lambda, tol.clone())?)?;
    let rhs = if f.dim() == 1 {
        DualSet::from_interval(inner.interval_on_window(tol).scale(lambda))
    } else {
        let m = inner.membership();
        DualSet::from_membership(f.dim(), move |x| {
            let y: Vec<f64> = x.iter().map(|v| v / lambda).collect();
            m(&y)
        })
    };
    Ok(lhs.compare(&rhs, tol).agree)
}

/// The two inclusions for a separable `φ(x, y) = φ1(x) + φ2(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inclusions {
    /// `∂_ε φ(x̄, ȳ) ⊂ ∂_ε φ1(x̄) × ∂_ε φ2(ȳ)`
    pub inner: bool,
    /// `∂_ε φ1(x̄) × ∂_ε φ2(ȳ) ⊂ ∂_{2ε} φ(x̄, ȳ)`
    pub outer: bool,
}

pub fn separable_inclusions_check(
    phi1: &ConvexFn,
    phi2: &ConvexFn,
    x_bar: &[f64],
    y_bar: &[f64],
    eps: f64,
    tol: &Tolerances,
) -> Result<Inclusions> {
    let phi = ConvexFn::separable(phi1.clone(), phi2.clone());
    let mut p = x_bar.to_vec();
    p.extend_from_slice(y_bar);
    let q = EpsSubdiffQuery::new(phi, p, eps, tol.clone())?;
    let joint = SubdiffTester::new(&q);
    let joint2 = SubdiffTester::new(&q.with_eps(2.0 * eps));
    let a = SubdiffTester::new(&EpsSubdiffQuery::new(phi1.clone(), x_bar.to_vec(), eps, tol.clone())?);
    let b = SubdiffTester::new(&EpsSubdiffQuery::new(phi2.clone(), y_bar.to_vec(), eps, tol.clone())?);
    let n = x_bar.len();
    let grid = tol.window_grid(n + y_bar.len());
    let mut inner = true;
    let mut outer = true;
    for z in grid.points() {
        let in_prod = a.contains(&z[..n]) && b.contains(&z[n..]);
        if joint.contains(&z) && !in_prod {
            inner = false;
        }
        if in_prod && !joint2.contains(&z) {
            outer = false;
        }
    }
    Ok(Inclusions { inner, outer })
}

/// `x* ∈ ∂_ε f(x̄)` iff `(x*, -1) ∈ N_ε((x̄, f(x̄)); epi f)`, checked at every
/// point of the dual window grid.
pub fn epigraph_link_check(f: &ConvexFn, x_bar: &[f64], eps: f64, tol: &Tolerances) -> Result<bool> {
    let q = EpsSubdiffQuery::new(f.clone(), x_bar.to_vec(), eps, tol.clone())?;
    let tester = SubdiffTester::new(&q);
    let mut p = x_bar.to_vec();
    p.push(q.fx);
    let normals = eps_normal_set(&f.epigraph(), &p, eps, tol)?;
    let grid = tol.window_grid(f.dim());
    for xs in grid.points() {
        let mut z = xs.clone();
        z.push(-1.0);
        if tester.contains(&xs) != normals.contains(&z) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::ConvexSetDesc;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn set(f: ConvexFn, x: f64, eps: f64) -> DualSet {
        eps_subdiff_set(&EpsSubdiffQuery::new(f, vec![x], eps, tol()).unwrap()).unwrap()
    }

    fn close(iv: XInterval, lo: f64, hi: f64) -> bool {
        interval_hausdorff_distance(&iv, &XInterval::new(lo, hi), 10.0) < 1e-6
    }

    #[test]
    fn neg_sqrt_at_origin() {
        for eps in [0.25, 1.0, 4.0] {
            let s = set(ConvexFn::NegSqrt, 0.0, eps);
            assert!(close(s.interval().unwrap(), f64::NEG_INFINITY, -0.25 / eps), "{eps}: {:?}", s.interval());
            assert!(s.route_gap.unwrap() < 1e-6);
        }
        let q = EpsSubdiffQuery::new(ConvexFn::NegSqrt, vec![0.0], 1.0, tol()).unwrap();
        assert!(eps_subdiff_membership(&q, &[-0.25]).unwrap());
        assert!(!eps_subdiff_membership(&q, &[0.0]).unwrap());
    }

    #[test]
    fn abs_branches() {
        assert!(close(set(ConvexFn::abs(), 1.0, 1.0).interval().unwrap(), 0.0, 1.0));
        assert!(close(set(ConvexFn::abs(), 0.2, 1.0).interval().unwrap(), -1.0, 1.0));
        assert!(close(set(ConvexFn::abs(), -2.0, 1.0).interval().unwrap(), -1.0, -0.5));
    }

    #[test]
    fn square_at_origin() {
        assert!(close(set(ConvexFn::square(), 0.0, 0.25).interval().unwrap(), -1.0, 1.0));
    }

    #[test]
    fn ladder_limits() {
        let r = subdiff_via_eps_intersection(&ConvexFn::NegSqrt, &[0.0], &tol()).unwrap();
        assert!(r.limit.interval().unwrap().clip(10.0).is_none());
        let r = subdiff_via_eps_intersection(&ConvexFn::abs(), &[0.0], &tol()).unwrap();
        assert!(close(r.limit.interval().unwrap(), -1.0, 1.0));
        let r = subdiff_via_eps_intersection(&ConvexFn::square(), &[1.0], &tol()).unwrap();
        let (lo, hi) = r.limit.interval().unwrap().bounds().unwrap();
        assert!((lo.to_f64() - 2.0).abs() < 5e-3 && (hi.to_f64() - 2.0).abs() < 5e-3);
    }

    #[test]
    fn sum_rule_origin_indicator_and_neg_sqrt() {
        let f1 = ConvexFn::indicator(ConvexSetDesc::Singleton { point: vec![0.0] });
        let r = sum_rule_eval(&f1, &ConvexFn::NegSqrt, &[0.0], 1.0, &tol()).unwrap();
        assert!(r.equal_on_window());
        assert_eq!(r.lhs.interval().unwrap(), XInterval::whole());
        assert!(!r.condition_h && !r.certified);
        let r = sum_rule_eval(&f1, &ConvexFn::NegSqrt, &[0.0], 0.0, &tol()).unwrap();
        assert!(!r.equal_on_window());
        assert!(r.rhs.interval().unwrap().is_empty());
    }

    #[test]
    fn sum_rule_abs_plus_affine() {
        let r = sum_rule_eval(&ConvexFn::abs(), &ConvexFn::affine(vec![0.5], 0.0), &[0.0], 0.5, &tol()).unwrap();
        assert!(r.equal_on_window() && r.condition_h && r.certified);
        assert!(close(r.rhs.interval().unwrap(), -0.5, 1.5));
    }

    #[test]
    fn scaling() {
        assert!(scale_rule_check(&ConvexFn::abs(), &[0.0], 1.0, 2.0, &tol()).unwrap());
        assert!(scale_rule_check(&ConvexFn::NegSqrt, &[0.0], 1.0, 4.0, &tol()).unwrap());
    }

    #[test]
    fn separable_pair() {
        let inc = separable_inclusions_check(&ConvexFn::square(), &ConvexFn::abs(), &[0.0], &[0.0], 0.25, &tol()).unwrap();
        assert_eq!(inc, Inclusions { inner: true, outer: true });
    }

    #[test]
    fn epigraph_link() {
        assert!(epigraph_link_check(&ConvexFn::abs(), &[0.0], 0.0, &tol()).unwrap());
        assert!(epigraph_link_check(&ConvexFn::NegSqrt, &[0.0], 1.0, &tol()).unwrap());
        assert!(epigraph_link_check(&ConvexFn::square(), &[1.0], 0.1, &tol()).unwrap());
    }
}
