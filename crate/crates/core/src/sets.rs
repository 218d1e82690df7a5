//! Symbolic closed convex sets.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::functions::ConvexFn;
use crate::lp::{LpOutcome, Polyhedron};
use crate::numerics::{dot, norm, ExtReal, Tolerances};

/// One inequality `<a, x> <= b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConvexSetDesc {
    Interval { lo: ExtReal, hi: ExtReal },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// `{x : <a_i, x> <= b_i for all i}`
    Halfspaces { dim: usize, constraints: Vec<Halfspace> },
    /// `{x : <a_i, x> <= 0 for all i}`
    Cone { dim: usize, normals: Vec<Vec<f64>> },
    Singleton { point: Vec<f64> },
    FullSpace { dim: usize },
    Product { first: Box<ConvexSetDesc>, second: Box<ConvexSetDesc> },
    Translate { set: Box<ConvexSetDesc>, offset: Vec<f64> },
    Intersection { sets: Vec<ConvexSetDesc> },
    Epigraph { f: Box<ConvexFn> },
    /// Graph of a set-valued map `R^param_dim => R^(dim - param_dim)`, given
    /// as a convex subset of the product space.
    Graph { param_dim: usize, set: Box<ConvexSetDesc> },
}

impl ConvexSetDesc {
    pub fn interval(lo: f64, hi: f64) -> Self {
        ConvexSetDesc::Interval { lo: lo.into(), hi: hi.into() }
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        ConvexSetDesc::Ball { center, radius }
    }

    pub fn halfspaces(dim: usize, constraints: Vec<(Vec<f64>, f64)>) -> Self {
        ConvexSetDesc::Halfspaces {
            dim,
            constraints: constraints.into_iter().map(|(a, b)| Halfspace { a, b }).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSetDesc::Interval { .. } => 1,
            ConvexSetDesc::Box { lo, .. } => lo.len(),
            ConvexSetDesc::Ball { center, .. } => center.len(),
            ConvexSetDesc::Halfspaces { dim, .. }
            | ConvexSetDesc::Cone { dim, .. }
            | ConvexSetDesc::FullSpace { dim } => *dim,
            ConvexSetDesc::Singleton { point } => point.len(),
            ConvexSetDesc::Product { first, second } => first.dim() + second.dim(),
            ConvexSetDesc::Translate { offset, .. } => offset.len(),
            ConvexSetDesc::Intersection { sets } => sets.first().map_or(0, |s| s.dim()),
            ConvexSetDesc::Epigraph { f } => f.dim() + 1,
            ConvexSetDesc::Graph { set, .. } => set.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        match self {
            ConvexSetDesc::Interval { lo, hi } => {
                if lo.is_pos_inf() || hi.is_neg_inf() {
                    return bad("interval: lo = +inf or hi = -inf");
                }
            }
            ConvexSetDesc::Box { lo, hi } => {
                check_dim(lo.len(), hi.len())?;
                if lo.is_empty() {
                    return bad("box: empty bounds");
                }
            }
            ConvexSetDesc::Ball { center, radius } => {
                if center.is_empty() || !(radius.is_finite() && *radius >= 0.0) {
                    return bad("ball: empty center or invalid radius");
                }
            }
            ConvexSetDesc::Halfspaces { dim, constraints } => {
                for h in constraints {
                    check_dim(*dim, h.a.len())?;
                }
            }
            ConvexSetDesc::Cone { dim, normals } => {
                for a in normals {
                    check_dim(*dim, a.len())?;
                }
            }
            ConvexSetDesc::Singleton { point } => {
                if point.is_empty() {
                    return bad("singleton: empty point");
                }
            }
            ConvexSetDesc::FullSpace { dim } => {
                if *dim == 0 {
                    return bad("full space of dimension 0");
                }
            }
            ConvexSetDesc::Product { first, second } => {
                first.validate()?;
                second.validate()?;
            }
            ConvexSetDesc::Translate { set, offset } => {
                set.validate()?;
                check_dim(set.dim(), offset.len())?;
            }
            ConvexSetDesc::Intersection { sets } => {
                if sets.is_empty() {
                    return bad("intersection of no sets");
                }
                for s in sets {
                    s.validate()?;
                    check_dim(sets[0].dim(), s.dim())?;
                }
            }
            ConvexSetDesc::Epigraph { f } => f.validate()?,
            ConvexSetDesc::Graph { param_dim, set } => {
                set.validate()?;
                if *param_dim == 0 || *param_dim >= set.dim() {
                    return bad("graph: param_dim must be in 1..dim");
                }
            }
        }
        Ok(())
    }

    /// Cheap emptiness test; exact for polyhedral sets, `false` when unknown.
    pub fn is_empty_hint(&self) -> bool {
        match self {
            ConvexSetDesc::Interval { lo, hi } => lo > hi,
            ConvexSetDesc::Box { lo, hi } => lo.iter().zip(hi).any(|(l, h)| l > h),
            ConvexSetDesc::Product { first, second } => first.is_empty_hint() || second.is_empty_hint(),
            ConvexSetDesc::Translate { set, .. } | ConvexSetDesc::Graph { set, .. } => set.is_empty_hint(),
            _ => self.to_polyhedron().is_some_and(|p| p.is_empty()),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let tiny = |b: f64| 1e-12 * (1.0 + b.abs());
        match self {
            ConvexSetDesc::Interval { lo, hi } => {
                let v = ExtReal::Finite(x[0]);
                let lo_ok = match lo {
                    ExtReal::Finite(l) => x[0] >= l - tiny(*l),
                    _ => true,
                };
                let hi_ok = match hi {
                    ExtReal::Finite(h) => x[0] <= h + tiny(*h),
                    _ => true,
                };
                lo_ok && hi_ok && !v.is_pos_inf()
            }
            ConvexSetDesc::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - tiny(*l) && *v <= h + tiny(*h)),
            ConvexSetDesc::Ball { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
                norm(&d) <= radius + tiny(*radius)
            }
            ConvexSetDesc::Halfspaces { constraints, .. } => constraints
                .iter()
                .all(|h| dot(&h.a, x) <= h.b + 1e-12 * (1.0 + h.b.abs() + norm(&h.a) * norm(x))),
            ConvexSetDesc::Cone { normals, .. } => {
                normals.iter().all(|a| dot(a, x) <= 1e-12 * norm(a) * norm(x))
            }
            ConvexSetDesc::Singleton { point } => {
                x.iter().zip(point).all(|(a, b)| (a - b).abs() <= tiny(*b))
            }
            ConvexSetDesc::FullSpace { .. } => true,
            ConvexSetDesc::Product { first, second } => {
                let n = first.dim();
                first.contains(&x[..n]) && second.contains(&x[n..])
            }
            ConvexSetDesc::Translate { set, offset } => {
                let y: Vec<f64> = x.iter().zip(offset).map(|(a, b)| a - b).collect();
                set.contains(&y)
            }
            ConvexSetDesc::Intersection { sets } => sets.iter().all(|s| s.contains(x)),
            ConvexSetDesc::Epigraph { f } => {
                let n = f.dim();
                match f.eval(&x[..n]) {
                    ExtReal::Finite(v) => x[n] >= v - tiny(v),
                    ExtReal::NegInf => true,
                    ExtReal::PosInf => false,
                }
            }
            ConvexSetDesc::Graph { set, .. } => set.contains(x),
        }
    }

    /// Polyhedral representation, when the set is polyhedral.
    pub fn to_polyhedron(&self) -> Option<Polyhedron> {
        match self {
            ConvexSetDesc::Interval { lo, hi } => {
                let mut rows = Vec::new();
                let mut rhs = Vec::new();
                if let ExtReal::Finite(h) = hi {
                    rows.push(vec![1.0]);
                    rhs.push(*h);
                }
                if let ExtReal::Finite(l) = lo {
                    rows.push(vec![-1.0]);
                    rhs.push(-l);
                }
                Some(Polyhedron::new(1, rows, rhs))
            }
            ConvexSetDesc::Box { lo, hi } => {
                let n = lo.len();
                let mut rows = Vec::new();
                let mut rhs = Vec::new();
                for i in 0..n {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    rows.push(e.clone());
                    rhs.push(hi[i]);
                    e[i] = -1.0;
                    rows.push(e);
                    rhs.push(-lo[i]);
                }
                Some(Polyhedron::new(n, rows, rhs))
            }
            ConvexSetDesc::Singleton { point } => ConvexSetDesc::Box {
                lo: point.clone(),
                hi: point.clone(),
            }
            .to_polyhedron(),
            ConvexSetDesc::Halfspaces { dim, constraints } => Some(Polyhedron::new(
                *dim,
                constraints.iter().map(|h| h.a.clone()).collect(),
                constraints.iter().map(|h| h.b).collect(),
            )),
            ConvexSetDesc::Cone { dim, normals } => {
                Some(Polyhedron::new(*dim, normals.clone(), vec![0.0; normals.len()]))
            }
            ConvexSetDesc::FullSpace { dim } => Some(Polyhedron::whole(*dim)),
            ConvexSetDesc::Product { first, second } => {
                Some(first.to_polyhedron()?.product(&second.to_polyhedron()?))
            }
            ConvexSetDesc::Translate { set, offset } => Some(set.to_polyhedron()?.translate(offset)),
            ConvexSetDesc::Intersection { sets } => {
                let mut acc = sets.first()?.to_polyhedron()?;
                for s in &sets[1..] {
                    acc = acc.meet(&s.to_polyhedron()?);
                }
                Some(acc)
            }
            ConvexSetDesc::Graph { set, .. } => set.to_polyhedron(),
            ConvexSetDesc::Ball { .. } | ConvexSetDesc::Epigraph { .. } => None,
        }
    }

    /// Support function `sup_{x in C} <d, x>` when available without sampling.
    pub fn support_exact(&self, d: &[f64]) -> Option<ExtReal> {
        Some(match self {
            ConvexSetDesc::Interval { lo, hi } => {
                if d[0] > 0.0 {
                    hi.scale(d[0])
                } else if d[0] < 0.0 {
                    lo.neg().scale(-d[0])
                } else {
                    ExtReal::ZERO
                }
            }
            ConvexSetDesc::Box { lo, hi } => ExtReal::new(
                d.iter().zip(lo.iter().zip(hi)).map(|(v, (l, h))| if *v >= 0.0 { v * h } else { v * l }).sum(),
            ),
            ConvexSetDesc::Ball { center, radius } => ExtReal::new(dot(d, center) + radius * norm(d)),
            ConvexSetDesc::Singleton { point } => ExtReal::new(dot(d, point)),
            ConvexSetDesc::FullSpace { .. } => {
                if d.iter().all(|v| *v == 0.0) {
                    ExtReal::ZERO
                } else {
                    ExtReal::PosInf
                }
            }
            ConvexSetDesc::Product { first, second } => {
                let n = first.dim();
                let a = first.support_exact(&d[..n])?;
                let b = second.support_exact(&d[n..])?;
                if a.is_neg_inf() || b.is_neg_inf() {
                    ExtReal::NegInf
                } else {
                    a.add_upper(b)
                }
            }
            ConvexSetDesc::Translate { set, offset } => {
                let s = set.support_exact(d)?;
                s.add_upper(ExtReal::new(dot(d, offset)))
            }
            ConvexSetDesc::Graph { set, .. } => set.support_exact(d)?,
            ConvexSetDesc::Epigraph { f } => {
                let n = f.dim();
                let d0 = d[n];
                if d0 > 0.0 {
                    ExtReal::PosInf
                } else if d0 == 0.0 {
                    f.effective_domain().support_exact(&d[..n])?
                } else {
                    let xs: Vec<f64> = d[..n].iter().map(|v| v / -d0).collect();
                    crate::transforms::closed_conjugate(f, &xs)?.scale(-d0)
                }
            }
            _ => {
                let p = self.to_polyhedron()?;
                match p.maximize(d) {
                    LpOutcome::Infeasible => ExtReal::NegInf,
                    LpOutcome::Unbounded => ExtReal::PosInf,
                    LpOutcome::Optimal { value, .. } => ExtReal::new(value),
                }
            }
        })
    }

    /// Support function, falling back to a sweep over the window grid. A
    /// sweep maximiser on the window boundary is reported as `+inf`.
    pub fn support(&self, d: &[f64], tol: &Tolerances) -> ExtReal {
        if let Some(v) = self.support_exact(d) {
            return v;
        }
        if let ConvexSetDesc::Epigraph { f } = self {
            let n = f.dim();
            let d0 = d[n];
            if d0 < 0.0 {
                let xs: Vec<f64> = d[..n].iter().map(|v| v / -d0).collect();
                let c = crate::transforms::numeric_conjugate_value(f, &xs, tol);
                return c.scale(-d0);
            }
            return f.effective_domain().support(&d[..n], tol);
        }
        let grid = tol.window_grid(self.dim());
        let mut best = ExtReal::NegInf;
        let mut on_edge = false;
        for k in 0..grid.len() {
            let x = grid.point(k);
            if self.contains(&x) {
                let v = ExtReal::new(dot(d, &x));
                if v > best {
                    best = v;
                    on_edge = grid.on_boundary(&grid.multi_index(k));
                }
            }
        }
        if on_edge {
            ExtReal::PosInf
        } else {
            best
        }
    }

    /// Largest `s >= 0` with `p + s d` in the set (`p` assumed inside);
    /// `+inf` if the ray stays inside.
    pub fn ray_exit(&self, p: &[f64], d: &[f64], tol: &Tolerances) -> f64 {
        if let Some(poly) = self.to_polyhedron() {
            return poly.ray_exit(p, d);
        }
        match self {
            ConvexSetDesc::Ball { center, radius } => {
                let q: Vec<f64> = p.iter().zip(center).map(|(a, b)| a - b).collect();
                let a = dot(d, d);
                if a == 0.0 {
                    return f64::INFINITY;
                }
                let b = dot(&q, d);
                let c = (dot(&q, &q) - radius * radius).min(0.0);
                (-b + (b * b - a * c).max(0.0).sqrt()) / a
            }
            ConvexSetDesc::Product { first, second } => {
                let n = first.dim();
                let exit = |s: &ConvexSetDesc, p: &[f64], d: &[f64]| {
                    if d.iter().all(|v| *v == 0.0) {
                        f64::INFINITY
                    } else {
                        s.ray_exit(p, d, tol)
                    }
                };
                exit(first, &p[..n], &d[..n]).min(exit(second, &p[n..], &d[n..]))
            }
            ConvexSetDesc::Translate { set, offset } => {
                let q: Vec<f64> = p.iter().zip(offset).map(|(a, b)| a - b).collect();
                set.ray_exit(&q, d, tol)
            }
            ConvexSetDesc::Intersection { sets } => {
                sets.iter().map(|s| s.ray_exit(p, d, tol)).fold(f64::INFINITY, f64::min)
            }
            ConvexSetDesc::Graph { set, .. } => set.ray_exit(p, d, tol),
            _ => bisect_exit(|x| self.contains(x), p, d, tol.window_radius),
        }
    }
}

/// Ray exit by doubling and bisection on a membership oracle.
pub(crate) fn bisect_exit(member: impl Fn(&[f64]) -> bool, p: &[f64], d: &[f64], radius: f64) -> f64 {
    let dn = norm(d);
    if dn == 0.0 {
        return f64::INFINITY;
    }
    let at = |s: f64| -> Vec<f64> { p.iter().zip(d).map(|(a, b)| a + s * b).collect() };
    let cap = 4.0 * radius / dn;
    let mut lo = 0.0;
    let mut hi = 1e-9 / dn;
    while member(&at(hi)) {
        lo = hi;
        hi *= 2.0;
        if hi > cap {
            return if member(&at(cap)) { f64::INFINITY } else { bisect(&member, &at, lo, cap) };
        }
    }
    bisect(&member, &at, lo, hi)
}

fn bisect(member: &impl Fn(&[f64]) -> bool, at: &impl Fn(f64) -> Vec<f64>, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if member(&at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * (1.0 + hi) {
            break;
        }
    }
    lo
}
