//! Fixture corpora, generators and property checks shared by the property
//! suite and the acceptance target.

#![allow(dead_code)]

use epsconv::numerics::{ExtReal, Grid, Tolerances, XInterval};
use epsconv::oracle::{dilation_agree, oracle_eps_normal, oracle_eps_subdiff, oracle_polar, OracleConfig};
use epsconv::parametric::{reduction_identity_check, ParametricProblem};
use epsconv::subdiff::{eps_subdiff_set, scale_rule_check, separable_inclusions_check, EpsSubdiffQuery};
use epsconv::transforms::{biconjugate, check_regularity, eps_normal_set, polar};
use epsconv::{ConvexFn, ConvexSetDesc, DualSet};
use proptest::prelude::*;

pub type Check = Result<(), String>;

/// A function together with a point of its domain.
#[derive(Debug, Clone)]
pub struct FnCase {
    pub f: ConvexFn,
    pub x_bar: Vec<f64>,
}

/// A set together with one of its points.
#[derive(Debug, Clone)]
pub struct SetCase {
    pub set: ConvexSetDesc,
    pub x_bar: Vec<f64>,
}

fn interval_set(lo: f64, hi: f64) -> ConvexSetDesc {
    ConvexSetDesc::interval(lo, hi)
}

/// Random one-dimensional functions paired with a domain point.
pub fn arb_fn_case() -> impl Strategy<Value = FnCase> {
    let u = -3.0..3.0f64;
    prop_oneof![
        (0.1..3.0f64, -2.0..2.0f64, u.clone())
            .prop_map(|(q, s, x)| FnCase { f: ConvexFn::quad(vec![q], vec![s]), x_bar: vec![x] }),
        (0.2..3.0f64, u.clone()).prop_map(|(w, x)| FnCase { f: ConvexFn::abs_norm(vec![w]), x_bar: vec![x] }),
        (-2.0..2.0f64, -1.0..1.0f64, u.clone())
            .prop_map(|(a, b, x)| FnCase { f: ConvexFn::affine(vec![a], b), x_bar: vec![x] }),
        (0.0..3.0f64).prop_map(|x| FnCase { f: ConvexFn::NegSqrt, x_bar: vec![x] }),
        (-2.0..1.0f64).prop_map(|x| FnCase { f: ConvexFn::Exp, x_bar: vec![x] }),
        (0.2..2.0f64, 0.3..3.0f64).prop_map(|(c, x)| FnCase { f: ConvexFn::InvNeg { c }, x_bar: vec![-x] }),
        (-2.0..1.0f64, 0.0..3.0f64, 0.0..1.0f64).prop_map(|(lo, len, t)| FnCase {
            f: ConvexFn::indicator(interval_set(lo, lo + len)),
            x_bar: vec![lo + t * len],
        }),
        (0.2..2.0f64, 0.2..2.0f64, u.clone()).prop_map(|(q, w, x)| FnCase {
            f: ConvexFn::sum(ConvexFn::quad(vec![q], vec![0.0]), ConvexFn::abs_norm(vec![w])),
            x_bar: vec![x],
        }),
        (0.3..3.0f64, 0.1..2.0f64, u).prop_map(|(l, q, x)| FnCase {
            f: ConvexFn::scale(l, ConvexFn::quad(vec![q], vec![1.0])),
            x_bar: vec![x],
        }),
    ]
}

/// Positions across a set. Points very close to, but off, a face are left
/// out: the brute-force reference cannot resolve them in 2D.
fn fractions() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.0, 0.25, 0.5, 0.75, 1.0])
}

/// Random sets in one and two dimensions paired with a member.
pub fn arb_set_case() -> impl Strategy<Value = SetCase> {
    prop_oneof![
        (-2.0..1.0f64, 0.0..3.0f64, 0.0..1.0f64)
            .prop_map(|(lo, len, t)| SetCase { set: interval_set(lo, lo + len), x_bar: vec![lo + t * len] }),
        (0.2..2.0f64, 0.2..2.0f64, fractions(), fractions()).prop_map(|(a, b, s, t)| SetCase {
            set: ConvexSetDesc::Box { lo: vec![-a, -b], hi: vec![a, b] },
            x_bar: vec![a * (2.0 * s - 1.0), b * (2.0 * t - 1.0)],
        }),
        (0.3..2.0f64, fractions(), 0.0..std::f64::consts::TAU).prop_map(|(r, s, th)| SetCase {
            set: ConvexSetDesc::ball(vec![0.5, 0.0], r),
            x_bar: vec![0.5 + s * r * th.cos(), s * r * th.sin()],
        }),
        (0.1..2.0f64, 0.0..1.0f64).prop_map(|(k, s)| SetCase {
            set: ConvexSetDesc::halfspaces(2, vec![(vec![k, -1.0], 0.0), (vec![-k, -1.0], 0.0)]),
            x_bar: vec![0.0, s],
        }),
    ]
}

fn contained(a: &XInterval, b: &XInterval) -> bool {
    let Some((alo, ahi)) = a.bounds() else { return true };
    let Some((blo, bhi)) = b.bounds() else { return false };
    let below = |x: ExtReal, y: ExtReal| match (x, y) {
        (ExtReal::Finite(p), ExtReal::Finite(q)) => p <= q + 1e-6 * (1.0 + q.abs()),
        (p, q) => p <= q,
    };
    below(blo, alo) && below(ahi, bhi)
}

fn subdiff(case: &FnCase, eps: f64, tol: &Tolerances) -> Result<DualSet, String> {
    let q = EpsSubdiffQuery::new(case.f.clone(), case.x_bar.clone(), eps, tol.clone()).map_err(|e| e.to_string())?;
    eps_subdiff_set(&q).map_err(|e| e.to_string())
}

/// `ε1 <= ε2` gives `∂_ε1 f(x̄) ⊂ ∂_ε2 f(x̄)`.
pub fn subdiff_monotone(case: &FnCase, e1: f64, e2: f64, tol: &Tolerances) -> Check {
    let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
    let a = subdiff(case, lo, tol)?.interval_on_window(tol);
    let b = subdiff(case, hi, tol)?.interval_on_window(tol);
    if contained(&a, &b) {
        Ok(())
    } else {
        Err(format!("{:?} at {:?}: eps {lo} gives {a}, eps {hi} gives {b}", case.f, case.x_bar))
    }
}

/// `ε1 <= ε2` gives `N_ε1 ⊂ N_ε2`, on the window grid.
pub fn normal_monotone(case: &SetCase, e1: f64, e2: f64, tol: &Tolerances) -> Check {
    let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
    let a = eps_normal_set(&case.set, &case.x_bar, lo, tol).map_err(|e| e.to_string())?;
    let b = eps_normal_set(&case.set, &case.x_bar, hi, tol).map_err(|e| e.to_string())?;
    let grid = Grid::symmetric(case.set.dim(), tol.window_radius, if case.set.dim() == 1 { 400 } else { 40 }).unwrap();
    for p in grid.points() {
        if a.contains(&p) && !b.contains(&p) {
            return Err(format!("{:?}: {p:?} in N_{lo} but not in N_{hi}", case.set));
        }
    }
    Ok(())
}

fn agree(what: &str, grid: &Grid, computed: &DualSet, reference: &DualSet) -> Check {
    let r = dilation_agree(grid, computed, reference);
    if r.agree {
        Ok(())
    } else {
        Err(format!("{what}: gap {} > cell {} ({} mismatches)", r.hausdorff, r.cell, r.mismatches))
    }
}

/// Computed `∂_ε f(x̄)` against the brute-force reference.
pub fn subdiff_matches_oracle(case: &FnCase, eps: f64, tol: &Tolerances) -> Check {
    let cfg = OracleConfig::for_window(case.f.dim(), tol).map_err(|e| e.to_string())?;
    let computed = subdiff(case, eps, tol)?;
    let reference = oracle_eps_subdiff(&case.f, &case.x_bar, eps, &cfg).map_err(|e| e.to_string())?;
    agree(&format!("subdiff {:?} at {:?} eps {eps}", case.f, case.x_bar), &cfg.dual_grid, &computed, &reference)
}

pub fn normal_matches_oracle(case: &SetCase, eps: f64, tol: &Tolerances) -> Check {
    let cfg = OracleConfig::for_window(case.set.dim(), tol).map_err(|e| e.to_string())?;
    let computed = eps_normal_set(&case.set, &case.x_bar, eps, tol).map_err(|e| e.to_string())?;
    let reference = oracle_eps_normal(&case.set, &case.x_bar, eps, &cfg).map_err(|e| e.to_string())?;
    agree(&format!("normal {:?} at {:?} eps {eps}", case.set, case.x_bar), &cfg.dual_grid, &computed, &reference)
}

pub fn polar_matches_oracle(set: &ConvexSetDesc, tol: &Tolerances) -> Check {
    let cfg = OracleConfig::for_window(set.dim(), tol).map_err(|e| e.to_string())?;
    let computed = polar(set, tol).map_err(|e| e.to_string())?;
    let reference = oracle_polar(set, &cfg).map_err(|e| e.to_string())?;
    agree(&format!("polar {set:?}"), &cfg.dual_grid, &computed, &reference)
}

/// Two-dimensional functions for the oracle comparison.
pub fn fn_cases_2d() -> Vec<(FnCase, f64)> {
    vec![
        (FnCase { f: ConvexFn::quad(vec![1.0, 0.5], vec![0.0, 1.0]), x_bar: vec![0.5, 0.0] }, 1.0),
        (FnCase { f: ConvexFn::abs_norm(vec![1.0, 2.0]), x_bar: vec![0.0, 1.0] }, 0.5),
        (FnCase { f: ConvexFn::separable(ConvexFn::square(), ConvexFn::abs()), x_bar: vec![1.0, 0.0] }, 0.25),
        (
            FnCase {
                f: ConvexFn::indicator(ConvexSetDesc::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] }),
                x_bar: vec![1.0, 0.0],
            },
            0.5,
        ),
    ]
}

/// Sets used for the normal-set identity and the polar oracle.
pub fn set_cases() -> Vec<SetCase> {
    vec![
        SetCase { set: interval_set(0.0, 1.0), x_bar: vec![0.0] },
        SetCase { set: interval_set(-1.0, 2.0), x_bar: vec![0.5] },
        SetCase { set: ConvexSetDesc::Box { lo: vec![-1.0, -0.5], hi: vec![1.0, 0.5] }, x_bar: vec![1.0, 0.0] },
        SetCase { set: ConvexSetDesc::ball(vec![1.0, 0.0], 1.0), x_bar: vec![0.0, 0.0] },
        SetCase { set: ConvexSetDesc::ball(vec![0.0, 0.0], 2.0), x_bar: vec![1.0, 1.0] },
        SetCase {
            set: ConvexSetDesc::halfspaces(2, vec![(vec![0.5, -1.0], 0.0), (vec![-0.5, -1.0], 0.0)]),
            x_bar: vec![0.0, 0.0],
        },
        SetCase {
            set: ConvexSetDesc::halfspaces(2, vec![(vec![-1.0, 0.0], 0.0), (vec![0.0, -1.0], 0.0), (vec![1.0, 1.0], 1.0)]),
            x_bar: vec![0.25, 0.25],
        },
    ]
}

/// `N_ε(x̄; C) = ε (C - x̄)°` on the window.
pub fn normal_equals_scaled_polar(case: &SetCase, eps: f64, tol: &Tolerances) -> Check {
    let direct = eps_normal_set(&case.set, &case.x_bar, eps, tol).map_err(|e| e.to_string())?;
    let shifted = ConvexSetDesc::Translate {
        set: Box::new(case.set.clone()),
        offset: case.x_bar.iter().map(|v| -v).collect(),
    };
    let p = polar(&shifted, tol).map_err(|e| e.to_string())?;
    let scaled = DualSet::from_membership(case.set.dim(), move |x| {
        let y: Vec<f64> = x.iter().map(|v| v / eps).collect();
        p.contains(&y)
    });
    let c = direct.compare(&scaled, tol);
    if c.agree {
        Ok(())
    } else {
        Err(format!("{:?} at {:?} eps {eps}: gap {}", case.set, case.x_bar, c.hausdorff))
    }
}

/// `∂_ε(λ f)(x̄) = λ ∂_{ε/λ} f(x̄)`.
pub fn scaling_identity(case: &FnCase, eps: f64, lambda: f64, tol: &Tolerances) -> Check {
    match scale_rule_check(&case.f, &case.x_bar, eps, lambda, tol) {
        Ok(true) => Ok(()),
        Ok(false) => Err(format!("{:?} at {:?}: eps {eps} lambda {lambda}", case.f, case.x_bar)),
        Err(e) => Err(e.to_string()),
    }
}

/// Separable pairs `(phi1, x̄, phi2, ȳ, ε)`.
pub fn separable_cases() -> Vec<(FnCase, FnCase, f64)> {
    let c = |f: ConvexFn, x: f64| FnCase { f, x_bar: vec![x] };
    vec![
        (c(ConvexFn::square(), 0.0), c(ConvexFn::abs(), 0.0), 0.5),
        (c(ConvexFn::square(), 1.0), c(ConvexFn::abs(), -1.0), 1.0),
        (c(ConvexFn::abs(), 0.5), c(ConvexFn::abs(), 0.0), 0.25),
        (c(ConvexFn::quad(vec![2.0], vec![1.0]), 0.0), c(ConvexFn::square(), 0.5), 1.0),
        (c(ConvexFn::Exp, 0.0), c(ConvexFn::square(), 0.0), 0.5),
        (c(ConvexFn::NegSqrt, 1.0), c(ConvexFn::abs(), 1.0), 0.5),
        (c(ConvexFn::affine(vec![1.0], 0.0), 0.0), c(ConvexFn::abs(), 0.0), 1.0),
        (c(ConvexFn::indicator(interval_set(0.0, 1.0)), 0.5), c(ConvexFn::square(), 0.0), 0.5),
        (c(ConvexFn::InvNeg { c: 1.0 }, -1.0), c(ConvexFn::abs(), 0.0), 0.5),
        (c(ConvexFn::scale(2.0, ConvexFn::abs()), 1.0), c(ConvexFn::Exp, -1.0), 0.25),
    ]
}

pub fn separable_double_inclusion(a: &FnCase, b: &FnCase, eps: f64, tol: &Tolerances) -> Check {
    let r = separable_inclusions_check(&a.f, &b.f, &a.x_bar, &b.x_bar, eps, tol).map_err(|e| e.to_string())?;
    if r.inner && r.outer {
        Ok(())
    } else {
        Err(format!("{:?} x {:?} eps {eps}: {r:?}", a.f, b.f))
    }
}

/// The parametric problems of the fixture corpus.
pub fn parametric_problems() -> Vec<(&'static str, ParametricProblem)> {
    let sq_abs = ParametricProblem::unconstrained(ConvexFn::separable(ConvexFn::square(), ConvexFn::abs()), 1, 1).unwrap();
    let sq_exp = ParametricProblem::unconstrained(ConvexFn::separable(ConvexFn::square(), ConvexFn::Exp), 1, 1).unwrap();
    let half_abs = ParametricProblem::new(
        ConvexFn::separable(ConvexFn::affine(vec![0.0], 0.0), ConvexFn::abs()),
        Some(graph_half_abs()),
        1,
        1,
    )
    .unwrap();
    vec![("square_plus_abs", sq_abs), ("square_plus_exp", sq_exp), ("half_abs_constraint", half_abs)]
}

/// `gph G` for `G(x) = {y : y >= |x| / 2}`.
pub fn graph_half_abs() -> ConvexSetDesc {
    ConvexSetDesc::Graph {
        param_dim: 1,
        set: Box::new(ConvexSetDesc::halfspaces(2, vec![(vec![0.5, -1.0], 0.0), (vec![-0.5, -1.0], 0.0)])),
    }
}

/// `μ*(v*) = (phi + δ_gph)*(v*, 0)` on a dual grid.
pub fn reduction_identity(name: &str, p: &ParametricProblem, tol: &Tolerances) -> Check {
    // 50 cells keep the grid off the kinks of the conjugate domains
    let grid = Grid::symmetric(1, 3.0, 50).unwrap();
    let r = reduction_identity_check(p, &grid, tol).map_err(|e| e.to_string())?;
    if r.holds {
        Ok(())
    } else {
        Err(format!("{name}: gap {} > {}", r.max_gap, r.tolerance))
    }
}

/// Closed proper functions for the biconjugate check.
pub fn closed_functions() -> Vec<ConvexFn> {
    vec![
        ConvexFn::square(),
        ConvexFn::quad(vec![0.5], vec![1.0]),
        ConvexFn::abs(),
        ConvexFn::affine(vec![0.5], -1.0),
        ConvexFn::NegSqrt,
        ConvexFn::Exp,
        ConvexFn::InvNeg { c: 1.0 },
        ConvexFn::indicator(interval_set(-1.0, 2.0)),
        ConvexFn::sum(ConvexFn::square(), ConvexFn::abs()),
        ConvexFn::scale(3.0, ConvexFn::abs()),
        ConvexFn::quad(vec![1.0, 2.0], vec![0.0, 0.5]),
        ConvexFn::abs_norm(vec![1.0, 0.5]),
    ]
}

/// `f** = f` wherever the biconjugate is resolved inside the window.
pub fn biconjugate_idempotent(f: &ConvexFn, tol: &Tolerances) -> Check {
    let (primal, dual) = match f.dim() {
        1 => (Grid::symmetric(1, 3.0, 60).unwrap(), tol.window_grid(1)),
        _ => (Grid::symmetric(2, 2.0, 8).unwrap(), Grid::symmetric(2, tol.window_radius, 100).unwrap()),
    };
    let dual_step = dual.max_step();
    let b = biconjugate(f, &primal, &dual, tol).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for (k, x) in primal.points().enumerate() {
        if b.flagged[k] {
            continue;
        }
        let fx = f.eval(&x);
        let ok = match (fx, b.values[k]) {
            // the dual sup misses kinks of f* by up to one dual step
            (ExtReal::Finite(a), ExtReal::Finite(v)) => {
                let l1: f64 = x.iter().map(|t| t.abs()).sum();
                (a - v).abs() <= tol.set_tol * (1.0 + a.abs()) + dual_step * l1
            }
            (a, v) => a == v,
        };
        if !ok {
            return Err(format!("{f:?} at {x:?}: f = {fx}, f** = {}", b.values[k]));
        }
        checked += 1;
    }
    if checked == 0 {
        return Err(format!("{f:?}: no resolved point"));
    }
    Ok(())
}

fn axis_indicator(axis: usize) -> ConvexFn {
    let mut a = vec![0.0, 0.0];
    a[1 - axis] = 1.0;
    let neg: Vec<f64> = a.iter().map(|v| -v).collect();
    ConvexFn::indicator(ConvexSetDesc::halfspaces(2, vec![(a, 0.0), (neg, 0.0)]))
}

/// Two-dimensional functions with polyhedral domains.
pub fn regularity_corpus() -> Vec<ConvexFn> {
    vec![
        ConvexFn::quad(vec![1.0, 1.0], vec![0.0, 0.0]),
        ConvexFn::sum(ConvexFn::quad(vec![1.0, 0.0], vec![0.0, 0.0]), axis_indicator(0)),
        ConvexFn::sum(ConvexFn::quad(vec![0.0, 1.0], vec![0.0, 0.0]), axis_indicator(1)),
        ConvexFn::indicator(ConvexSetDesc::halfspaces(2, vec![(vec![1.0, 0.0], 0.0)])),
        ConvexFn::indicator(ConvexSetDesc::halfspaces(2, vec![(vec![-1.0, 0.0], -1.0)])),
        ConvexFn::indicator(ConvexSetDesc::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] }),
        ConvexFn::indicator(ConvexSetDesc::Singleton { point: vec![0.0, 0.0] }),
        ConvexFn::indicator(ConvexSetDesc::Cone { dim: 2, normals: vec![vec![2.0, 1.0], vec![-2.0, 1.0]] }),
        ConvexFn::abs_norm(vec![1.0, 1.0]),
    ]
}

/// `mr` implies `ab` and `bs` for every pair of the corpus.
pub fn regularity_implication(f1: &ConvexFn, f2: &ConvexFn, tol: &Tolerances) -> Check {
    let r = check_regularity(f1, f2, tol).map_err(|e| e.to_string())?;
    if !r.mr || (r.ab && r.bs) {
        Ok(())
    } else {
        Err(format!("{f1:?} / {f2:?}: {r:?}"))
    }
}
