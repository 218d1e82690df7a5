//! Extended reals, closed intervals with unbounded endpoints, uniform grids
//! and the tolerance policy shared by every set computation.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A value in `[-inf, +inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps IEEE infinities onto the corresponding extended values.
    ///
    /// NaN has no extended-real meaning; it is mapped to `+inf` so that a
    /// failed evaluation can never make a point look feasible.
    pub fn new(v: f64) -> Self {
        if v.is_nan() || v == f64::INFINITY {
            ExtReal::PosInf
        } else if v == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(v)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_pos_inf(self) -> bool {
        matches!(self, ExtReal::PosInf)
    }

    pub fn is_neg_inf(self) -> bool {
        matches!(self, ExtReal::NegInf)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    /// Extended addition; `(+inf) + (-inf)` is an error.
    pub fn checked_add(self, other: ExtReal) -> Result<ExtReal> {
        use ExtReal::*;
        match (self, other) {
            (PosInf, NegInf) | (NegInf, PosInf) => Err(Error::OppositeInfinities),
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
            (Finite(a), Finite(b)) => Ok(ExtReal::new(a + b)),
        }
    }

    /// Addition where `+inf` absorbs `-inf`. Used when both operands come
    /// from proper functions, for which `-inf` is never produced.
    pub fn add_upper(self, other: ExtReal) -> ExtReal {
        self.checked_add(other).unwrap_or(ExtReal::PosInf)
    }

    /// Multiplication by a nonnegative scalar with `0 * (+-inf) = 0`.
    pub fn scale(self, lambda: f64) -> ExtReal {
        debug_assert!(lambda >= 0.0);
        if lambda == 0.0 {
            return ExtReal::ZERO;
        }
        match self {
            ExtReal::Finite(v) => ExtReal::new(lambda * v),
            other => other,
        }
    }

    pub fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::Finite(v) => ExtReal::Finite(-v),
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if other > self {
            other
        } else {
            self
        }
    }

    fn rank(self) -> (i8, f64) {
        match self {
            ExtReal::NegInf => (-1, 0.0),
            ExtReal::Finite(v) => (0, v),
            ExtReal::PosInf => (1, 0.0),
        }
    }
}

impl Eq for ExtReal {}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        let (ra, va) = self.rank();
        let (rb, vb) = other.rank();
        ra.cmp(&rb).then_with(|| va.total_cmp(&vb))
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::new(v)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::PosInf => write!(f, "+inf"),
            ExtReal::Finite(v) => write!(f, "{v}"),
        }
    }
}

// JSON has no infinities: finite values are numbers, infinite ones the
// strings "+inf" / "-inf".
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::PosInf => s.serialize_str("+inf"),
            ExtReal::NegInf => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(ExtReal::new(v)),
            Raw::Str(s) => match s.as_str() {
                "inf" | "+inf" | "infinity" | "+infinity" => Ok(ExtReal::PosInf),
                "-inf" | "-infinity" => Ok(ExtReal::NegInf),
                other => Err(serde::de::Error::custom(format!("not an extended real: {other}"))),
            },
        }
    }
}

/// Free-function form of [`ExtReal::checked_add`].
pub fn ext_add(a: ExtReal, b: ExtReal) -> Result<ExtReal> {
    a.checked_add(b)
}

/// A closed interval of extended reals, or the empty set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XInterval {
    Empty,
    Closed { lo: ExtReal, hi: ExtReal },
}

impl XInterval {
    pub fn new(lo: impl Into<ExtReal>, hi: impl Into<ExtReal>) -> Self {
        let (lo, hi) = (lo.into(), hi.into());
        if lo > hi || lo.is_pos_inf() || hi.is_neg_inf() {
            XInterval::Empty
        } else {
            XInterval::Closed { lo, hi }
        }
    }

    pub fn whole() -> Self {
        XInterval::Closed { lo: ExtReal::NegInf, hi: ExtReal::PosInf }
    }

    pub fn point(v: f64) -> Self {
        XInterval::new(v, v)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, XInterval::Empty)
    }

    pub fn bounds(&self) -> Option<(ExtReal, ExtReal)> {
        match *self {
            XInterval::Empty => None,
            XInterval::Closed { lo, hi } => Some((lo, hi)),
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match *self {
            XInterval::Empty => false,
            XInterval::Closed { lo, hi } => lo <= ExtReal::new(v) && ExtReal::new(v) <= hi,
        }
    }

    pub fn intersect(&self, other: &XInterval) -> XInterval {
        match (self.bounds(), other.bounds()) {
            (Some((a, b)), Some((c, d))) => XInterval::new(a.max(c), b.min(d)),
            _ => XInterval::Empty,
        }
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &XInterval) -> XInterval {
        match (self.bounds(), other.bounds()) {
            (Some((a, b)), Some((c, d))) => XInterval::new(a.min(c), b.max(d)),
            (Some(_), None) => *self,
            _ => *other,
        }
    }

    /// Minkowski sum.
    pub fn add(&self, other: &XInterval) -> XInterval {
        match (self.bounds(), other.bounds()) {
            (Some((a, b)), Some((c, d))) => {
                let lo = a.checked_add(c).unwrap_or(ExtReal::NegInf);
                let hi = b.checked_add(d).unwrap_or(ExtReal::PosInf);
                XInterval::new(lo, hi)
            }
            _ => XInterval::Empty,
        }
    }

    /// Multiplication by a positive scalar.
    pub fn scale(&self, lambda: f64) -> XInterval {
        match self.bounds() {
            Some((lo, hi)) => XInterval::new(lo.scale(lambda), hi.scale(lambda)),
            None => XInterval::Empty,
        }
    }

    /// Intersection with `[-radius, radius]`, returned with finite endpoints.
    pub fn clip(&self, radius: f64) -> Option<(f64, f64)> {
        match self.intersect(&XInterval::new(-radius, radius)) {
            XInterval::Empty => None,
            XInterval::Closed { lo, hi } => Some((lo.to_f64(), hi.to_f64())),
        }
    }

    pub fn width(&self) -> f64 {
        match self.bounds() {
            None => 0.0,
            Some((lo, hi)) => (hi.to_f64() - lo.to_f64()).max(0.0),
        }
    }
}

impl fmt::Display for XInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XInterval::Empty => write!(f, "EMPTY"),
            XInterval::Closed { lo, hi } => write!(f, "[{lo}, {hi}]"),
        }
    }
}

/// Hausdorff distance between the two intervals after clipping to the window.
/// Both empty gives 0; exactly one empty gives `+inf`.
pub fn interval_hausdorff_distance(a: &XInterval, b: &XInterval, radius: f64) -> f64 {
    match (a.clip(radius), b.clip(radius)) {
        (None, None) => 0.0,
        (Some((a0, a1)), Some((b0, b1))) => (a0 - b0).abs().max((a1 - b1).abs()),
        _ => f64::INFINITY,
    }
}

pub fn interval_hausdorff_on_window(a: &XInterval, b: &XInterval, tol: &Tolerances) -> bool {
    interval_hausdorff_distance(a, b, tol.window_radius) <= tol.set_tol
}

/// One axis of a uniform grid: `lo, lo + step, ..., hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Axis {
    pub fn intervals(&self) -> usize {
        ((self.hi - self.lo) / self.step).round() as usize
    }

    pub fn len(&self) -> usize {
        self.intervals() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, i: usize) -> f64 {
        if i == self.intervals() {
            self.hi
        } else {
            self.lo + i as f64 * self.step
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }
}

/// Uniform rectangular grid in dimension 1 to 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Axis>", into = "Vec<Axis>")]
pub struct Grid {
    axes: Vec<Axis>,
}

impl TryFrom<Vec<Axis>> for Grid {
    type Error = Error;
    fn try_from(axes: Vec<Axis>) -> Result<Self> {
        Grid::new(axes)
    }
}

impl From<Grid> for Vec<Axis> {
    fn from(g: Grid) -> Self {
        g.axes
    }
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::InvalidGrid(format!("dimension {} not in 1..=3", axes.len())));
        }
        for (i, a) in axes.iter().enumerate() {
            if !(a.lo.is_finite() && a.hi.is_finite() && a.step.is_finite()) || a.step <= 0.0 {
                return Err(Error::InvalidGrid(format!("axis {i}: non-finite bound or step <= 0")));
            }
            let ratio = (a.hi - a.lo) / a.step;
            if ratio < 0.5 || (ratio - ratio.round()).abs() > 1e-6 * ratio.max(1.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {i}: (hi - lo) / step = {ratio} is not a positive integer"
                )));
            }
        }
        Ok(Grid { axes })
    }

    /// `[-radius, radius]^dim` with `intervals` cells per axis.
    pub fn symmetric(dim: usize, radius: f64, intervals: usize) -> Result<Self> {
        let step = 2.0 * radius / intervals as f64;
        Grid::new(vec![Axis { lo: -radius, hi: radius, step }; dim])
    }

    pub fn interval(lo: f64, hi: f64, intervals: usize) -> Result<Self> {
        Grid::new(vec![Axis { lo, hi, step: (hi - lo) / intervals as f64 }])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_step(&self) -> f64 {
        self.axes.iter().map(|a| a.step).fold(0.0, f64::max)
    }

    /// Multi-index of the flat index `k` (first axis varies slowest).
    pub fn multi_index(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (d, a) in self.axes.iter().enumerate().rev() {
            idx[d] = k % a.len();
            k /= a.len();
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.len() + i)
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        self.multi_index(k).iter().zip(&self.axes).map(|(&i, a)| a.value(i)).collect()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |k| self.point(k))
    }

    /// True when the multi-index touches the first or last value of some axis.
    pub fn on_boundary(&self, idx: &[usize]) -> bool {
        idx.iter().zip(&self.axes).any(|(&i, a)| i == 0 || i + 1 == a.len())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.axes).all(|(&v, a)| v >= a.lo - 1e-12 && v <= a.hi + 1e-12)
    }
}

/// Tolerance and window policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Hausdorff tolerance for set comparisons on the window.
    pub set_tol: f64,
    /// All unbounded sets are compared after clipping to `[-R, R]^n`.
    pub window_radius: f64,
    /// Strictly decreasing positive values standing in for `eta -> 0+`.
    pub eta_ladder: Vec<f64>,
    /// Number of `(g1, g2)` samples of `g1 + g2 = const`, endpoints included.
    pub gamma_splits: usize,
    /// Number of dual directions used for support-function sampling in `n >= 2`.
    pub support_dirs: usize,
    /// Slack applied to membership inequalities (not to set comparisons).
    pub member_slack: f64,
    /// Cells per axis of the 1D window sweeps (primal and dual).
    pub grid_points: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            set_tol: 5e-3,
            window_radius: 10.0,
            eta_ladder: vec![1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            gamma_splits: 33,
            support_dirs: 64,
            member_slack: 1e-7,
            grid_points: 4000,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidTolerances(m.to_string()));
        if !(self.set_tol > 0.0) {
            return bad("set_tol must be > 0");
        }
        if !(self.window_radius > 0.0) {
            return bad("window_radius must be > 0");
        }
        if self.eta_ladder.is_empty()
            || self.eta_ladder.iter().any(|&e| !(e > 0.0))
            || self.eta_ladder.windows(2).any(|w| w[1] >= w[0])
        {
            return bad("eta_ladder must be positive and strictly decreasing");
        }
        if self.gamma_splits < 3 {
            return bad("gamma_splits must be >= 3");
        }
        if self.support_dirs < 8 {
            return bad("support_dirs must be >= 8");
        }
        if !(self.member_slack >= 0.0) {
            return bad("member_slack must be >= 0");
        }
        if self.grid_points < 8 {
            return bad("grid_points must be >= 8");
        }
        Ok(())
    }

    /// Primal or dual sweep grid over the window in dimension `dim`.
    ///
    /// The per-axis resolution shrinks with the dimension so that sweeps stay
    /// around a few 10^4 points.
    pub fn window_grid(&self, dim: usize) -> Grid {
        let cells = match dim {
            1 => self.grid_points,
            2 => (self.grid_points / 20).clamp(8, 200),
            _ => (self.grid_points / 100).clamp(8, 40),
        };
        let cells = cells + cells % 2;
        Grid::symmetric(dim, self.window_radius, cells).expect("window grid is valid")
    }

    /// `(g1, g2)` samples with `g1 + g2 = total`, both endpoints included.
    pub fn gamma_pairs(&self, total: f64) -> Vec<(f64, f64)> {
        let k = self.gamma_splits;
        (0..k)
            .map(|i| {
                let g1 = if i + 1 == k { total } else { total * i as f64 / (k - 1) as f64 };
                (g1, total - g1)
            })
            .collect()
    }

    pub fn slack(&self, scale: f64) -> f64 {
        self.member_slack * (1.0 + scale.abs())
    }
}

/// Dot product of equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Evenly spread unit directions: a circle in 2D, a Fibonacci sphere in 3D and
/// the axis directions in higher dimensions as a fallback.
pub fn unit_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * i as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut out = Vec::new();
            for i in 0..dim {
                for s in [1.0, -1.0] {
                    let mut d = vec![0.0; dim];
                    d[i] = s;
                    out.push(d);
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ext_add_cases() {
        assert_eq!(ext_add(ExtReal::PosInf, 3.0.into()).unwrap(), ExtReal::PosInf);
        assert_eq!(ext_add(2.0.into(), (-5.0).into()).unwrap(), ExtReal::Finite(-3.0));
        assert!(matches!(
            ext_add(ExtReal::PosInf, ExtReal::NegInf),
            Err(Error::OppositeInfinities)
        ));
        assert!(matches!(
            ext_add(ExtReal::NegInf, ExtReal::PosInf),
            Err(Error::OppositeInfinities)
        ));
    }

    #[test]
    fn ordering() {
        assert!(ExtReal::NegInf < ExtReal::Finite(-1e300));
        assert!(ExtReal::Finite(1e300) < ExtReal::PosInf);
        assert_eq!(ExtReal::new(f64::INFINITY), ExtReal::PosInf);
    }

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(ExtReal::PosInf.scale(0.0), ExtReal::ZERO);
        assert_eq!(ExtReal::PosInf.scale(2.0), ExtReal::PosInf);
    }

    #[test]
    fn hausdorff_examples() {
        let tol = Tolerances::default();
        let ray = XInterval::new(ExtReal::NegInf, -0.25);
        assert!(interval_hausdorff_on_window(&ray, &ray, &tol));
        let a = XInterval::new(0.0, 1.0);
        let b = XInterval::new(0.0, 1.0 + tol.set_tol / 2.0);
        assert!(interval_hausdorff_on_window(&a, &b, &tol));
        assert!(!interval_hausdorff_on_window(&a, &XInterval::Empty, &tol));
        assert!(interval_hausdorff_on_window(&XInterval::Empty, &XInterval::Empty, &tol));
        // a ray far outside the window clips to empty
        let far = XInterval::new(ExtReal::NegInf, -2500.0);
        assert!(interval_hausdorff_on_window(&far, &XInterval::Empty, &tol));
    }

    #[test]
    fn grid_rejects_non_integer_ratio() {
        assert!(Grid::new(vec![Axis { lo: 0.0, hi: 1.0, step: 0.3 }]).is_err());
        assert!(Grid::new(vec![Axis { lo: 0.0, hi: 1.0, step: -0.5 }]).is_err());
        assert!(Grid::new(vec![]).is_err());
    }

    #[test]
    fn grid_indexing_round_trips() {
        let g = Grid::new(vec![
            Axis { lo: 0.0, hi: 1.0, step: 0.5 },
            Axis { lo: -1.0, hi: 1.0, step: 0.25 },
        ])
        .unwrap();
        assert_eq!(g.len(), 3 * 9);
        for k in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(k)), k);
        }
        assert_eq!(g.point(g.len() - 1), vec![1.0, 1.0]);
    }

    #[test]
    fn gamma_pairs_include_endpoints() {
        let tol = Tolerances::default();
        let p = tol.gamma_pairs(1.5);
        assert_eq!(p.len(), 33);
        assert_eq!(p[0], (0.0, 1.5));
        assert_eq!(p[32], (1.5, 0.0));
        assert!(p.iter().all(|(a, b)| a + b == 1.5 || (a + b - 1.5).abs() < 1e-15));
    }

    #[test]
    fn default_tolerances_validate() {
        Tolerances::default().validate().unwrap();
        let t = Tolerances { eta_ladder: vec![1.0, 1.0], ..Tolerances::default() };
        assert!(t.validate().is_err());
    }
}
