//! Membership in sets known only through their support function, such as
//! Minkowski sums of epsilon-subdifferentials.

use crate::numerics::{dot, norm, unit_directions, ExtReal};

/// Convex minimisation on `[a, b]` by golden section, tolerating `+inf`
/// plateaus. `anchor` is a point known to have a finite value; when both
/// probes are infinite the bracket moves towards it.
pub(crate) fn golden_quasi(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, anchor: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = (anchor, f(anchor));
    for _ in 0..iters {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        let (fc, fd) = (f(c), f(d));
        for (x, v) in [(c, fc), (d, fd)] {
            if v < best.1 {
                best = (x, v);
            }
        }
        let go_left = if fc == f64::INFINITY && fd == f64::INFINITY {
            best.0 < c
        } else {
            fc <= fd
        };
        if go_left {
            b = d;
        } else {
            a = c;
        }
    }
    best
}

/// Separation test `z in S` iff `<d, z> <= h(d)` for all unit `d`, with a
/// coarse direction table and local refinement near the worst direction.
pub(crate) struct SeparationTest {
    dirs: Vec<Vec<f64>>,
    coarse: Vec<ExtReal>,
    spacing: f64,
}

impl SeparationTest {
    pub(crate) fn new(dim: usize, count: usize, h: &dyn Fn(&[f64]) -> ExtReal, extra: &[Vec<f64>]) -> Self {
        let mut dirs = unit_directions(dim, count);
        for e in extra {
            let r = norm(e);
            if r > 0.0 {
                dirs.push(e.iter().map(|v| v / r).collect());
            }
        }
        let coarse = dirs.iter().map(|d| h(d)).collect();
        let spacing = match dim {
            1 => 0.0,
            2 => 2.0 * std::f64::consts::PI / count as f64,
            _ => (4.0 * std::f64::consts::PI / count as f64).sqrt(),
        };
        SeparationTest { dirs, coarse, spacing }
    }

    /// `true` if no coarse direction is `-inf` (the set is nonempty).
    pub(crate) fn nonempty(&self) -> bool {
        !self.coarse.iter().any(|v| v.is_neg_inf())
    }

    pub(crate) fn contains(&self, z: &[f64], h: &dyn Fn(&[f64]) -> ExtReal, slack: f64) -> bool {
        if !self.nonempty() {
            return false;
        }
        let gap = |d: &[f64], hv: ExtReal| -> f64 {
            match hv {
                ExtReal::Finite(v) => dot(d, z) - v,
                ExtReal::PosInf => f64::NEG_INFINITY,
                ExtReal::NegInf => f64::INFINITY,
            }
        };
        let mut worst = f64::NEG_INFINITY;
        let mut scale = norm(z);
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(self.dirs.len());
        for (i, (d, hv)) in self.dirs.iter().zip(&self.coarse).enumerate() {
            let g = gap(d, *hv);
            if g > slack {
                return false;
            }
            if let ExtReal::Finite(v) = hv {
                scale = scale.max(norm(z) + v.abs());
            }
            worst = worst.max(g);
            order.push((g, i));
        }
        if self.spacing == 0.0 || worst < -scale * self.spacing - slack {
            return true;
        }
        order.sort_by(|a, b| b.0.total_cmp(&a.0));
        for &(_, i) in order.iter().take(3) {
            let mut d = self.dirs[i].clone();
            let mut g = gap(&d, h(&d));
            let mut step = self.spacing;
            let tangents = tangent_basis(&d);
            while step > 1e-9 {
                let mut moved = false;
                for t in &tangents {
                    for s in [-1.0, 1.0] {
                        let mut e: Vec<f64> = d.iter().zip(t).map(|(a, b)| a + s * step * b).collect();
                        let r = norm(&e);
                        e.iter_mut().for_each(|v| *v /= r);
                        let ge = gap(&e, h(&e));
                        if ge > g {
                            g = ge;
                            d = e;
                            moved = true;
                        }
                    }
                }
                if g > slack {
                    return false;
                }
                if !moved {
                    step *= 0.5;
                }
            }
        }
        true
    }
}

fn tangent_basis(d: &[f64]) -> Vec<Vec<f64>> {
    let n = d.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        // Gram-Schmidt against d and previous vectors
        let p = dot(&e, d);
        e.iter_mut().zip(d).for_each(|(a, b)| *a -= p * b);
        for q in &out {
            let p = dot(&e, q);
            e.iter_mut().zip(q).for_each(|(a, b)| *a -= p * b);
        }
        let r = norm(&e);
        if r > 1e-6 {
            e.iter_mut().for_each(|v| *v /= r);
            out.push(e);
        }
        if out.len() == n - 1 {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separation_disc() {
        let h = |d: &[f64]| ExtReal::new(norm(d));
        let t = SeparationTest::new(2, 64, &h, &[]);
        assert!(t.contains(&[0.6, 0.79], &h, 1e-9));
        assert!(!t.contains(&[0.6, 0.81], &h, 1e-9));
        assert!(t.contains(&[0.0, 0.0], &h, 1e-9));
    }
}
