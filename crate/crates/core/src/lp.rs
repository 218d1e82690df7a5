//! Small dense linear programs over polyhedra `{x : A x <= b}`, solved by
//! vertex enumeration. Intended for dimension <= 4 and a handful of rows.

use crate::numerics::{dot, norm};

/// Coordinates are confined to `|x_i| <= BIG` when enumerating vertices.
const BIG: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { value: f64, x: Vec<f64> },
}

impl Polyhedron {
    pub fn new(dim: usize, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Self {
        Polyhedron { dim, rows, rhs }
    }

    pub fn whole(dim: usize) -> Self {
        Polyhedron::new(dim, Vec::new(), Vec::new())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.rows
            .iter()
            .zip(&self.rhs)
            .all(|(a, b)| dot(a, x) <= b + 1e-12 * (1.0 + b.abs() + norm(a) * norm(x)))
    }

    /// Intersection of two polyhedra in the same space.
    pub fn meet(&self, other: &Polyhedron) -> Polyhedron {
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        let mut rhs = self.rhs.clone();
        rhs.extend(other.rhs.iter().copied());
        Polyhedron::new(self.dim, rows, rhs)
    }

    /// Cartesian product.
    pub fn product(&self, other: &Polyhedron) -> Polyhedron {
        let dim = self.dim + other.dim;
        let mut rows = Vec::new();
        for a in &self.rows {
            let mut r = a.clone();
            r.resize(dim, 0.0);
            rows.push(r);
        }
        for a in &other.rows {
            let mut r = vec![0.0; self.dim];
            r.extend_from_slice(a);
            rows.push(r);
        }
        let mut rhs = self.rhs.clone();
        rhs.extend(other.rhs.iter().copied());
        Polyhedron::new(dim, rows, rhs)
    }

    /// `{x + v : x in P}`
    pub fn translate(&self, v: &[f64]) -> Polyhedron {
        let rhs = self.rows.iter().zip(&self.rhs).map(|(a, b)| b + dot(a, v)).collect();
        Polyhedron::new(self.dim, self.rows.clone(), rhs)
    }

    /// `max <c, x>` over the polyhedron.
    pub fn maximize(&self, c: &[f64]) -> LpOutcome {
        let best = match best_vertex(self.dim, &self.rows, &self.rhs, c, BIG) {
            None => return LpOutcome::Infeasible,
            Some(b) => b,
        };
        if c.iter().all(|v| *v == 0.0) {
            return LpOutcome::Optimal { value: 0.0, x: best.1 };
        }
        // recession cone {r : A r <= 0}, normalised by |r_i| <= 1
        let zeros = vec![0.0; self.rows.len()];
        let rec = best_vertex(self.dim, &self.rows, &zeros, c, 1.0).map_or(0.0, |r| r.0);
        if rec > 1e-10 * (1.0 + norm(c)) {
            return LpOutcome::Unbounded;
        }
        LpOutcome::Optimal { value: best.0, x: best.1 }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.maximize(&vec![0.0; self.dim]), LpOutcome::Infeasible)
    }

    /// Largest `s >= 0` with `p + s d` in the polyhedron (`p` assumed inside).
    pub fn ray_exit(&self, p: &[f64], d: &[f64]) -> f64 {
        let mut s = f64::INFINITY;
        for (a, b) in self.rows.iter().zip(&self.rhs) {
            let ad = dot(a, d);
            if ad > 1e-14 * norm(a) * norm(d) {
                s = s.min(((b - dot(a, p)) / ad).max(0.0));
            }
        }
        s
    }

    /// Largest `t` (capped at 1) such that a ball of radius `t` around some
    /// point of `other` fits inside `self`. Negative when no point of `other`
    /// lies in `self`; `None` when `other` is empty.
    pub fn interior_radius_within(&self, other: &Polyhedron) -> Option<f64> {
        let n = self.dim;
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (a, b) in self.rows.iter().zip(&self.rhs) {
            let mut r = a.clone();
            r.push(norm(a));
            rows.push(r);
            rhs.push(*b);
        }
        for (a, b) in other.rows.iter().zip(&other.rhs) {
            let mut r = a.clone();
            r.push(0.0);
            rows.push(r);
            rhs.push(*b);
        }
        let mut cap = vec![0.0; n + 1];
        cap[n] = 1.0;
        rows.push(cap.clone());
        rhs.push(1.0);
        rows.push(cap.iter().map(|v| -v).collect());
        rhs.push(BIG / 10.0);
        best_vertex(n + 1, &rows, &rhs, &cap, BIG).map(|(v, _)| v)
    }
}

/// Best feasible vertex of `{A x <= b, |x_i| <= bound}` for objective `c`.
fn best_vertex(n: usize, rows: &[Vec<f64>], rhs: &[f64], c: &[f64], bound: f64) -> Option<(f64, Vec<f64>)> {
    let mut all_rows: Vec<Vec<f64>> = rows.to_vec();
    let mut all_rhs: Vec<f64> = rhs.to_vec();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        all_rows.push(e.clone());
        all_rhs.push(bound);
        e[i] = -1.0;
        all_rows.push(e);
        all_rhs.push(bound);
    }
    let m = all_rows.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        if let Some(x) = solve_square(&pick.iter().map(|&i| all_rows[i].clone()).collect::<Vec<_>>(),
            &pick.iter().map(|&i| all_rhs[i]).collect::<Vec<_>>())
        {
            let feasible = all_rows.iter().zip(&all_rhs).all(|(a, b)| {
                dot(a, &x) <= b + 1e-9 * (1.0 + b.abs().max(norm(a) * norm(&x)))
            });
            if feasible {
                let v = dot(c, &x);
                if best.as_ref().map_or(true, |(bv, _)| v > *bv) {
                    best = Some((v, x));
                }
            }
        }
        // next n-subset in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < m - n + i {
                pick[i] += 1;
                for j in i + 1..n {
                    pick[j] = pick[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, &v)| {
        let mut r = r.clone();
        r.push(v);
        r
    }).collect();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        let scale = m[p][..n].iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if m[p][col].abs() <= 1e-12 * scale.max(1e-300) {
            return None;
        }
        m.swap(col, p);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        m[r][k] -= f * m[col][k];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Polyhedron {
        Polyhedron::new(
            2,
            vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
            vec![1.0, 1.0, 1.0, 1.0],
        )
    }

    #[test]
    fn square_support() {
        match square().maximize(&[1.0, 2.0]) {
            LpOutcome::Optimal { value, .. } => assert!((value - 3.0).abs() < 1e-12),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn halfplane_unbounded_and_bounded_directions() {
        let p = Polyhedron::new(2, vec![vec![0.0, 1.0]], vec![0.0]);
        assert_eq!(p.maximize(&[1.0, 0.0]), LpOutcome::Unbounded);
        match p.maximize(&[0.0, 2.0]) {
            LpOutcome::Optimal { value, .. } => assert!(value.abs() < 1e-9),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn empty_polyhedron() {
        let p = Polyhedron::new(1, vec![vec![1.0], vec![-1.0]], vec![0.0, -1.0]);
        assert!(p.is_empty());
    }

    #[test]
    fn line_is_not_empty_and_has_no_interior() {
        let line = Polyhedron::new(2, vec![vec![0.0, 1.0], vec![0.0, -1.0]], vec![0.0, 0.0]);
        assert!(!line.is_empty());
        let r = line.interior_radius_within(&Polyhedron::whole(2)).unwrap();
        assert!(r.abs() < 1e-9);
        let r = square().interior_radius_within(&line).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ray_exit_of_square() {
        let s = square().ray_exit(&[0.0, 0.0], &[2.0, 0.0]);
        assert!((s - 0.5).abs() < 1e-12);
        let h = Polyhedron::new(2, vec![vec![0.0, 1.0]], vec![0.0]);
        assert!(h.ray_exit(&[0.0, 0.0], &[1.0, 0.0]).is_infinite());
    }
}
