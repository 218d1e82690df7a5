//! Scenario files: one computation described in JSON together with the
//! outcome it is expected to produce.
//!
//! A scenario is an object with a `name`, an optional `label`, an
//! `operation` tag and the fields that operation needs, plus an optional
//! `tolerances` object whose keys override the base [`Tolerances`]. See
//! `fixtures/README.md` for the field list of every operation.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dual::DualSet;
use crate::error::{Error, Result};
use crate::functions::ConvexFn;
use crate::numerics::{ExtReal, Grid, Tolerances, XInterval};
use crate::parametric::{
    constrained_eps_subdiff, constrained_regularity, optimal_value, unconstrained_eps_subdiff,
    unconstrained_solution_case, ConvergenceRow, ParametricProblem,
};
use crate::sets::ConvexSetDesc;
use crate::subdiff::{eps_subdiff_set, subdiff_via_eps_intersection, sum_rule_eval, EpsSubdiffQuery};
use crate::transforms::{check_condition_h, check_regularity, closed_conjugate, eps_normal_set, polar, PreparedConjugate};

/// A dual set given in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExpectedSet {
    Interval { lo: ExtReal, hi: ExtReal },
    Empty {
        #[serde(default = "one")]
        dim: usize,
    },
    /// All of the window.
    Whole {
        #[serde(default = "one")]
        dim: usize,
    },
    Set { set: ConvexSetDesc },
    /// `{x* : f(x*) <= level}`
    Sublevel { f: ConvexFn, level: f64 },
}

fn one() -> usize {
    1
}

impl ExpectedSet {
    pub fn dim(&self) -> usize {
        match self {
            ExpectedSet::Interval { .. } => 1,
            ExpectedSet::Empty { dim } | ExpectedSet::Whole { dim } => *dim,
            ExpectedSet::Set { set } => set.dim(),
            ExpectedSet::Sublevel { f, .. } => f.dim(),
        }
    }

    pub fn to_dual(&self) -> DualSet {
        match self {
            ExpectedSet::Interval { lo, hi } => DualSet::from_interval(XInterval::new(*lo, *hi)),
            ExpectedSet::Empty { dim } if *dim == 1 => DualSet::from_interval(XInterval::Empty),
            ExpectedSet::Empty { dim } => DualSet::empty(*dim),
            ExpectedSet::Whole { dim } if *dim == 1 => DualSet::from_interval(XInterval::whole()),
            ExpectedSet::Whole { dim } => DualSet::from_membership(*dim, |_| true),
            ExpectedSet::Set { set } => {
                let s = set.clone();
                DualSet::from_membership(set.dim(), move |x| s.contains(x))
            }
            ExpectedSet::Sublevel { f, level } => {
                let (g, l) = (f.clone(), *level);
                DualSet::from_membership(f.dim(), move |x| g.eval(x) <= ExtReal::new(l + 1e-12 * (1.0 + l.abs())))
            }
        }
    }

    /// A finite interval end outside the window cannot be checked there.
    fn exceeds_window(&self, radius: f64) -> bool {
        match self {
            ExpectedSet::Interval { lo, hi } => [lo, hi].iter().any(|v| v.finite().is_some_and(|v| v.abs() > radius)),
            _ => false,
        }
    }
}

/// One `ε` (and optionally its own base point) with the expected set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsCase {
    pub eps: f64,
    #[serde(default)]
    pub x_bar: Option<Vec<f64>>,
    pub expected: ExpectedSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionExpectation {
    pub at: Vec<f64>,
    pub holds_as_inf: bool,
    pub attained: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularityExpectation {
    pub mr: bool,
    pub ab: bool,
    pub bs: bool,
}

/// `N_γ(point; gph G)` with its expected shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNormalExpectation {
    pub point: Vec<f64>,
    pub gamma: f64,
    pub expected: ExpectedSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "operation", rename_all = "kebab-case")]
pub enum Operation {
    /// `∂_ε f(x̄)` for each case; `ladder_limit` checks the intersection
    /// over the `η` ladder, i.e. the exact subdifferential.
    Subdiff {
        f: ConvexFn,
        x_bar: Vec<f64>,
        cases: Vec<EpsCase>,
        #[serde(default)]
        ladder_limit: Option<ExpectedSet>,
    },
    /// `f*` at the given dual points by both the closed-form and the
    /// sampled route.
    Conjugate { f: ConvexFn, points: Vec<Vec<f64>>, expected: Vec<ExtReal> },
    Polar { set: ConvexSetDesc, expected: ExpectedSet },
    /// `N_ε(x̄; C)` for each case.
    Normal { set: ConvexSetDesc, x_bar: Vec<f64>, cases: Vec<EpsCase> },
    /// Both sides of the ε-subdifferential sum rule.
    SumRule {
        f1: ConvexFn,
        f2: ConvexFn,
        x_bar: Vec<f64>,
        eps: f64,
        expect_equal: bool,
        #[serde(default)]
        lhs: Option<ExpectedSet>,
        #[serde(default)]
        rhs: Option<ExpectedSet>,
        #[serde(default)]
        condition: Option<ConditionExpectation>,
    },
    /// `μ` at parameter points.
    ValueFn {
        problem: ParametricProblem,
        points: Vec<Vec<f64>>,
        expected: Vec<ExtReal>,
        #[serde(default)]
        minimizer_found: Option<bool>,
    },
    /// `∂_ε μ(x̄)` for an unconstrained problem: direct and by both
    /// formula representations.
    ValueSubdiff {
        problem: ParametricProblem,
        x_bar: Vec<f64>,
        cases: Vec<EpsCase>,
        /// A known solution at `x̄` for the single-solution form.
        #[serde(default)]
        solution: Option<Vec<f64>>,
        #[serde(default)]
        minimizer_found: Option<bool>,
    },
    /// As `value-subdiff` for a problem with a constraint graph.
    ConstrainedValueSubdiff {
        problem: ParametricProblem,
        x_bar: Vec<f64>,
        cases: Vec<EpsCase>,
        #[serde(default)]
        graph_normal: Option<GraphNormalExpectation>,
        /// Regularity conditions that must be certified, among `a`, `b`,
        /// `i`, `ii`.
        #[serde(default)]
        require_regularity: Vec<String>,
    },
    /// The domain regularity conditions for a pair of functions.
    Regularity { f1: ConvexFn, f2: ConvexFn, expected: RegularityExpectation },
}

impl Operation {
    pub fn tag(&self) -> &'static str {
        match self {
            Operation::Subdiff { .. } => "subdiff",
            Operation::Conjugate { .. } => "conjugate",
            Operation::Polar { .. } => "polar",
            Operation::Normal { .. } => "normal",
            Operation::SumRule { .. } => "sum-rule",
            Operation::ValueFn { .. } => "value-fn",
            Operation::ValueSubdiff { .. } => "value-subdiff",
            Operation::ConstrainedValueSubdiff { .. } => "constrained-value-subdiff",
            Operation::Regularity { .. } => "regularity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub label: String,
    #[serde(flatten)]
    pub operation: Operation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Map<String, Value>>,
}

fn schema(msg: String) -> Error {
    Error::Schema(msg)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps >= 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(schema(format!("eps must be finite and >= 0, got {eps}")))
    }
}

fn check_len(what: &str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(schema(format!("{what}: expected dimension {expected}, found {found}")))
    }
}

fn check_cases(dim: usize, x_bar: &[f64], cases: &[EpsCase]) -> Result<()> {
    check_len("x_bar", dim, x_bar.len())?;
    if cases.is_empty() {
        return Err(schema("cases must not be empty".into()));
    }
    for c in cases {
        check_eps(c.eps)?;
        if let Some(x) = &c.x_bar {
            check_len("case x_bar", dim, x.len())?;
        }
        check_len("expected set", dim, c.expected.dim())?;
    }
    Ok(())
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checks the fields the operation tag requires.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(schema(format!("name must be non-empty [A-Za-z0-9_-], got {:?}", self.name)));
        }
        let invalid = |e: Error| schema(e.to_string());
        match &self.operation {
            Operation::Subdiff { f, x_bar, cases, ladder_limit } => {
                f.validate().map_err(invalid)?;
                check_cases(f.dim(), x_bar, cases)?;
                if let Some(l) = ladder_limit {
                    check_len("ladder_limit", f.dim(), l.dim())?;
                }
            }
            Operation::Conjugate { f, points, expected } => {
                f.validate().map_err(invalid)?;
                check_len("expected values", points.len(), expected.len())?;
                for p in points {
                    check_len("dual point", f.dim(), p.len())?;
                }
            }
            Operation::Polar { set, expected } => {
                set.validate().map_err(invalid)?;
                check_len("expected set", set.dim(), expected.dim())?;
            }
            Operation::Normal { set, x_bar, cases } => {
                set.validate().map_err(invalid)?;
                check_cases(set.dim(), x_bar, cases)?;
            }
            Operation::SumRule { f1, f2, x_bar, eps, lhs, rhs, condition, .. } => {
                f1.validate().map_err(invalid)?;
                f2.validate().map_err(invalid)?;
                check_len("f2", f1.dim(), f2.dim())?;
                check_len("x_bar", f1.dim(), x_bar.len())?;
                check_eps(*eps)?;
                for s in [lhs, rhs].into_iter().flatten() {
                    check_len("expected set", f1.dim(), s.dim())?;
                }
                if let Some(c) = condition {
                    check_len("condition point", f1.dim(), c.at.len())?;
                }
            }
            Operation::ValueFn { problem, points, expected, .. } => {
                problem.validate().map_err(invalid)?;
                check_len("expected values", points.len(), expected.len())?;
                for p in points {
                    check_len("parameter point", problem.m, p.len())?;
                }
            }
            Operation::ValueSubdiff { problem, x_bar, cases, solution, .. } => {
                problem.validate().map_err(invalid)?;
                if problem.graph.is_some() {
                    return Err(schema("value-subdiff takes a problem without a constraint graph".into()));
                }
                check_cases(problem.m, x_bar, cases)?;
                if let Some(y) = solution {
                    check_len("solution", problem.k, y.len())?;
                }
            }
            Operation::ConstrainedValueSubdiff { problem, x_bar, cases, graph_normal, require_regularity } => {
                problem.validate().map_err(invalid)?;
                let Some(g) = &problem.graph else {
                    return Err(schema("constrained-value-subdiff needs a constraint graph".into()));
                };
                check_cases(problem.m, x_bar, cases)?;
                if let Some(n) = graph_normal {
                    check_len("graph normal point", g.dim(), n.point.len())?;
                    check_len("graph normal set", g.dim(), n.expected.dim())?;
                    check_eps(n.gamma)?;
                }
                for r in require_regularity {
                    if !["a", "b", "i", "ii"].contains(&r.as_str()) {
                        return Err(schema(format!("unknown regularity condition {r:?}")));
                    }
                }
            }
            Operation::Regularity { f1, f2, .. } => {
                f1.validate().map_err(invalid)?;
                f2.validate().map_err(invalid)?;
                check_len("f2", f1.dim(), f2.dim())?;
            }
        }
        if let Some(t) = &self.tolerances {
            self.tolerances_over(&Tolerances::default()).map_err(|e| schema(format!("tolerances: {e}")))?;
            if t.is_empty() {
                return Err(schema("tolerances must not be an empty object".into()));
            }
        }
        Ok(())
    }

    /// `base` with this scenario's overrides applied.
    pub fn tolerances_over(&self, base: &Tolerances) -> Result<Tolerances> {
        let Some(over) = &self.tolerances else { return Ok(base.clone()) };
        let mut v = serde_json::to_value(base)?;
        let obj = v.as_object_mut().expect("tolerances serialize as an object");
        for (k, x) in over {
            if !obj.contains_key(k) {
                return Err(schema(format!("unknown tolerance {k:?}")));
            }
            obj.insert(k.clone(), x.clone());
        }
        let t: Tolerances = serde_json::from_value(v)?;
        t.validate()?;
        Ok(t)
    }
}

/// One comparison inside a scenario.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub what: String,
    pub computed: String,
    pub expected: String,
    pub hausdorff: f64,
    pub pass: bool,
}

/// A 2D set worth drawing.
#[derive(Clone)]
pub struct Figure {
    pub name: String,
    pub set: DualSet,
    pub expected: Option<DualSet>,
    pub grid: Grid,
}

impl std::fmt::Debug for Figure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Figure").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub label: String,
    pub operation: String,
    pub pass: bool,
    /// Largest Hausdorff gap among the checks that compare sets.
    pub hausdorff_error: f64,
    pub flags: Vec<String>,
    pub millis: u128,
    pub checks: Vec<Check>,
    pub convergence: Vec<ConvergenceRow>,
    #[serde(skip)]
    pub figures: Vec<Figure>,
}

impl RunReport {
    /// A report for a scenario that could not be loaded or run.
    pub fn failed(name: &str, operation: &str, err: &Error) -> Self {
        RunReport {
            scenario: name.to_string(),
            label: String::new(),
            operation: operation.to_string(),
            pass: false,
            hausdorff_error: f64::INFINITY,
            flags: vec![format!("error: {err}")],
            millis: 0,
            checks: Vec::new(),
            convergence: Vec::new(),
            figures: Vec::new(),
        }
    }
}

fn show_set(s: &DualSet, tol: &Tolerances) -> String {
    if s.dim() == 1 {
        s.interval_on_window(tol).to_string()
    } else {
        let g = tol.window_grid(s.dim());
        let n = s.raster(&g).iter().filter(|v| **v).count();
        format!("{n}/{} window points", g.len())
    }
}

fn show_expected(e: &ExpectedSet) -> String {
    match e {
        ExpectedSet::Interval { lo, hi } => XInterval::new(*lo, *hi).to_string(),
        ExpectedSet::Empty { .. } => "EMPTY".into(),
        ExpectedSet::Whole { .. } => "window".into(),
        ExpectedSet::Set { .. } => "set".into(),
        ExpectedSet::Sublevel { .. } => "sublevel set".into(),
    }
}

/// Accumulates checks, flags and figures while a scenario runs.
struct Run<'a> {
    tol: &'a Tolerances,
    checks: Vec<Check>,
    flags: Vec<String>,
    figures: Vec<Figure>,
    convergence: Vec<ConvergenceRow>,
    /// Window flags that an expectation explains.
    window_resolved: bool,
    window_hit: bool,
}

impl<'a> Run<'a> {
    fn new(tol: &'a Tolerances) -> Self {
        Run {
            tol,
            checks: Vec::new(),
            flags: Vec::new(),
            figures: Vec::new(),
            convergence: Vec::new(),
            window_resolved: false,
            window_hit: false,
        }
    }

    fn flag(&mut self, f: &str) {
        if !self.flags.iter().any(|x| x == f) {
            self.flags.push(f.to_string());
        }
    }

    fn set(&mut self, what: String, computed: &DualSet, expected: &ExpectedSet) {
        if computed.window_flagged {
            self.window_hit = true;
        }
        if expected.exceeds_window(self.tol.window_radius) {
            self.window_hit = true;
        }
        let e = expected.to_dual();
        let c = computed.compare(&e, self.tol);
        if computed.dim() == 2 {
            self.figures.push(Figure {
                name: what.clone(),
                set: computed.clone(),
                expected: Some(e),
                grid: self.tol.window_grid(2),
            });
        }
        self.checks.push(Check {
            what,
            computed: show_set(computed, self.tol),
            expected: show_expected(expected),
            hausdorff: c.hausdorff,
            pass: c.agree,
        });
    }

    fn pair(&mut self, what: String, a: &DualSet, b: &DualSet, expect_equal: bool) {
        let c = a.compare(b, self.tol);
        self.checks.push(Check {
            what,
            computed: format!("{} vs {}", show_set(a, self.tol), show_set(b, self.tol)),
            expected: if expect_equal { "equal" } else { "not equal" }.into(),
            hausdorff: if expect_equal { c.hausdorff } else { 0.0 },
            pass: c.agree == expect_equal,
        });
    }

    fn boolean(&mut self, what: &str, computed: bool, expected: bool) {
        self.checks.push(Check {
            what: what.to_string(),
            computed: computed.to_string(),
            expected: expected.to_string(),
            hausdorff: 0.0,
            pass: computed == expected,
        });
    }

    fn value(&mut self, what: String, computed: ExtReal, expected: ExtReal) {
        let (gap, pass) = match (computed, expected) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => {
                let g = (a - b).abs();
                (g, g <= self.tol.set_tol * (1.0 + b.abs()))
            }
            (a, b) => (if a == b { 0.0 } else { f64::INFINITY }, a == b),
        };
        self.checks.push(Check {
            what,
            computed: computed.to_string(),
            expected: expected.to_string(),
            hausdorff: gap,
            pass,
        });
    }

    fn finish(mut self, s: &Scenario, millis: u128) -> RunReport {
        if self.window_hit {
            self.flag(if self.window_resolved { "window-expected" } else { "window-too-small" });
        }
        let unresolved = self.window_hit && !self.window_resolved;
        let pass = !self.checks.is_empty() && self.checks.iter().all(|c| c.pass) && !unresolved;
        let hausdorff_error = self.checks.iter().map(|c| c.hausdorff).fold(0.0, f64::max);
        self.flags.sort();
        RunReport {
            scenario: s.name.clone(),
            label: s.label.clone(),
            operation: s.operation.tag().to_string(),
            pass,
            hausdorff_error,
            flags: self.flags,
            millis,
            checks: self.checks,
            convergence: self.convergence,
            figures: self.figures,
        }
    }
}

/// Runs a parsed scenario against `base` tolerances (after the scenario's
/// own overrides).
pub fn execute(s: &Scenario, base: &Tolerances) -> Result<RunReport> {
    s.validate()?;
    let tol = s.tolerances_over(base)?;
    let start = Instant::now();
    let mut run = Run::new(&tol);
    match &s.operation {
        Operation::Subdiff { f, x_bar, cases, ladder_limit } => {
            for c in cases {
                let xb = c.x_bar.clone().unwrap_or_else(|| x_bar.clone());
                let set = eps_subdiff_set(&EpsSubdiffQuery::new(f.clone(), xb.clone(), c.eps, tol.clone())?)?;
                run.set(format!("subdiff x={xb:?} eps={}", c.eps), &set, &c.expected);
            }
            if let Some(limit) = ladder_limit {
                let lad = subdiff_via_eps_intersection(f, x_bar, &tol)?;
                ladder_rows(&mut run, &lad.steps);
                run.set("ladder limit".into(), &lad.limit, limit);
            }
        }
        Operation::Conjugate { f, points, expected } => {
            let sampled = PreparedConjugate::sampled(f, &tol);
            for (p, e) in points.iter().zip(expected) {
                let c = sampled.eval(p);
                if c.on_window_edge && e.is_finite() {
                    run.window_hit = true;
                }
                run.value(format!("sampled conjugate at {p:?}"), c.guarded(), *e);
                if let Some(v) = closed_conjugate(f, p) {
                    run.value(format!("closed conjugate at {p:?}"), v, *e);
                }
            }
        }
        Operation::Polar { set, expected } => {
            let p = polar(set, &tol)?;
            run.set("polar".into(), &p, expected);
        }
        Operation::Normal { set, x_bar, cases } => {
            for c in cases {
                let xb = c.x_bar.clone().unwrap_or_else(|| x_bar.clone());
                let n = eps_normal_set(set, &xb, c.eps, &tol)?;
                run.set(format!("normal x={xb:?} eps={}", c.eps), &n, &c.expected);
            }
        }
        Operation::SumRule { f1, f2, x_bar, eps, expect_equal, lhs, rhs, condition } => {
            let r = sum_rule_eval(f1, f2, x_bar, *eps, &tol)?;
            if let Some(e) = lhs {
                run.set("lhs".into(), &r.lhs, e);
            }
            if let Some(e) = rhs {
                run.set("rhs".into(), &r.rhs, e);
            }
            run.pair("lhs vs rhs".into(), &r.lhs, &r.rhs, *expect_equal);
            if !r.certified {
                run.flag("uncertified");
            }
            if let Some(c) = condition {
                let h = check_condition_h(f1, f2, &c.at, &tol)?;
                run.boolean("condition holds as infimum", h.holds_as_inf, c.holds_as_inf);
                run.boolean("condition attained", h.attained, c.attained);
            }
        }
        Operation::ValueFn { problem, points, expected, minimizer_found } => {
            let grid = tol.window_grid(problem.k);
            for (x, e) in points.iter().zip(expected) {
                let v = optimal_value(problem, x, &grid, &tol)?;
                run.value(format!("mu at {x:?}"), v.mu, *e);
                note_minimizer(&mut run, v.minimizer_found, v.window_flagged, *minimizer_found);
            }
        }
        Operation::ValueSubdiff { problem, x_bar, cases, solution, minimizer_found } => {
            for c in cases {
                let xb = c.x_bar.clone().unwrap_or_else(|| x_bar.clone());
                let r = unconstrained_eps_subdiff(problem, &xb, c.eps, &tol)?;
                formula_checks(&mut run, &xb, c, &r);
                note_minimizer(&mut run, r.value.minimizer_found, r.value.window_flagged, *minimizer_found);
                if let Some(y) = solution {
                    let sc = unconstrained_solution_case(problem, &xb, c.eps, y, &tol)?;
                    run.set(format!("single solution x={xb:?} eps={}", c.eps), &sc.single, &c.expected);
                }
            }
        }
        Operation::ConstrainedValueSubdiff { problem, x_bar, cases, graph_normal, require_regularity } => {
            for c in cases {
                let xb = c.x_bar.clone().unwrap_or_else(|| x_bar.clone());
                let r = constrained_eps_subdiff(problem, &xb, c.eps, &tol)?;
                formula_checks(&mut run, &xb, c, &r);
                if r.value.window_flagged {
                    run.window_hit = true;
                }
            }
            if let Some(n) = graph_normal {
                let g = problem.graph.as_ref().expect("validated");
                let set = eps_normal_set(g, &n.point, n.gamma, &tol)?;
                run.set(format!("graph normals at {:?} gamma={}", n.point, n.gamma), &set, &n.expected);
            }
            let reg = constrained_regularity(problem, &tol);
            match reg {
                Some(r) => {
                    for (name, v) in [("a", r.a), ("b", r.b), ("i", r.i), ("ii", r.ii)] {
                        if v {
                            run.flag(&format!("regularity-{name}"));
                        }
                    }
                }
                None => run.flag("regularity-unknown"),
            }
            for need in require_regularity {
                let got = reg.is_some_and(|r| match need.as_str() {
                    "a" => r.a,
                    "b" => r.b,
                    "i" => r.i,
                    _ => r.ii,
                });
                run.boolean(&format!("regularity {need}"), got, true);
            }
        }
        Operation::Regularity { f1, f2, expected } => {
            let r = check_regularity(f1, f2, &tol)?;
            run.boolean("mr", r.mr, expected.mr);
            run.boolean("ab", r.ab, expected.ab);
            run.boolean("bs", r.bs, expected.bs);
        }
    }
    let millis = start.elapsed().as_millis();
    Ok(run.finish(s, millis))
}

fn ladder_rows(run: &mut Run, steps: &[(f64, DualSet)]) {
    let mut acc = XInterval::whole();
    let mut prev: Option<XInterval> = None;
    for (eta, set) in steps {
        if set.dim() != 1 {
            return;
        }
        acc = acc.intersect(&set.interval_on_window(run.tol));
        let change = prev.map(|p| crate::numerics::interval_hausdorff_distance(&p, &acc, run.tol.window_radius));
        run.convergence.push(ConvergenceRow { eta: *eta, meta: Some(acc), union: None, meta_change: change, union_change: None });
        prev = Some(acc);
    }
}

fn note_minimizer(run: &mut Run, found: bool, window_flagged: bool, expected: Option<bool>) {
    if !found {
        run.flag("no-minimizer");
    }
    if let Some(e) = expected {
        run.boolean("minimizer found", found, e);
        if !e && window_flagged {
            run.window_resolved = true;
        }
    }
    if window_flagged {
        run.window_hit = true;
    }
}

fn formula_checks(run: &mut Run, xb: &[f64], c: &EpsCase, r: &crate::parametric::FormulaReport) {
    let at = format!("x={xb:?} eps={}", c.eps);
    run.set(format!("direct {at}"), &r.direct, &c.expected);
    run.set(format!("meta formula {at}"), &r.formula_meta, &c.expected);
    run.set(format!("union formula {at}"), &r.formula_union, &c.expected);
    for (name, cmp) in ["direct vs meta", "direct vs union", "meta vs union"].iter().zip(&r.comparisons) {
        run.checks.push(Check {
            what: format!("{name} {at}"),
            computed: format!("{:e}", cmp.hausdorff),
            expected: "equal".into(),
            hausdorff: cmp.hausdorff,
            pass: cmp.agree,
        });
    }
    if !r.certified {
        run.flag("uncertified");
    }
    if run.convergence.is_empty() {
        run.convergence = r.convergence.clone();
    }
}

/// Loads and runs one scenario file.
pub fn run_scenario(path: &Path, base: &Tolerances) -> Result<RunReport> {
    execute(&Scenario::load(path)?, base)
}

/// Runs scenarios in parallel; the reports come back sorted by name.
pub fn run_all(scenarios: &[Scenario], base: &Tolerances) -> Vec<RunReport> {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;
    let next = AtomicUsize::new(0);
    let out = Mutex::new(Vec::with_capacity(scenarios.len()));
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(scenarios.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(s) = scenarios.get(i) else { break };
                let r = execute(s, base).unwrap_or_else(|e| RunReport::failed(&s.name, s.operation.tag(), &e));
                out.lock().unwrap().push(r);
            });
        }
    });
    let mut reports = out.into_inner().unwrap();
    reports.sort_by(|a, b| a.scenario.cmp(&b.scenario));
    reports
}

/// The fixtures shipped with the crate, as `(file name, contents)`.
pub const BUNDLED_FIXTURES: &[(&str, &str)] = &[
    ("abs_value_branches.json", include_str!("../fixtures/abs_value_branches.json")),
    ("constrained_half_abs.json", include_str!("../fixtures/constrained_half_abs.json")),
    ("crossing_axes_regularity.json", include_str!("../fixtures/crossing_axes_regularity.json")),
    ("exp_decision_no_minimizer.json", include_str!("../fixtures/exp_decision_no_minimizer.json")),
    ("neg_sqrt_conjugate.json", include_str!("../fixtures/neg_sqrt_conjugate.json")),
    ("neg_sqrt_origin.json", include_str!("../fixtures/neg_sqrt_origin.json")),
    ("origin_plus_neg_sqrt_eps0.json", include_str!("../fixtures/origin_plus_neg_sqrt_eps0.json")),
    ("origin_plus_neg_sqrt_eps1.json", include_str!("../fixtures/origin_plus_neg_sqrt_eps1.json")),
    ("same_axis_regularity.json", include_str!("../fixtures/same_axis_regularity.json")),
    ("shifted_disc_polar.json", include_str!("../fixtures/shifted_disc_polar.json")),
    ("square_plus_abs_value.json", include_str!("../fixtures/square_plus_abs_value.json")),
    ("square_plus_abs_value_fn.json", include_str!("../fixtures/square_plus_abs_value_fn.json")),
    ("unit_interval_normals.json", include_str!("../fixtures/unit_interval_normals.json")),
];

pub fn bundled_scenarios() -> Result<Vec<Scenario>> {
    BUNDLED_FIXTURES
        .iter()
        .map(|(file, text)| Scenario::from_json(text).map_err(|e| schema(format!("{file}: {e}"))))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SuiteSummary {
    pub reports: Vec<RunReport>,
    pub all_pass: bool,
}

impl SuiteSummary {
    pub fn exit_code(&self) -> i32 {
        if self.all_pass {
            0
        } else {
            1
        }
    }

    /// Plain-text table: scenario, label, verdict.
    pub fn table(&self) -> String {
        let w = self.reports.iter().map(|r| r.scenario.len()).max().unwrap_or(8).max(8);
        let mut s = format!("{:<w$}  {:<4}  {}\n", "scenario", "pass", "label");
        for r in &self.reports {
            let v = if r.pass { "ok" } else { "FAIL" };
            s.push_str(&format!("{:<w$}  {:<4}  {}\n", r.scenario, v, r.label));
        }
        s
    }
}

/// Runs every bundled fixture.
pub fn run_bundled_suite(base: &Tolerances) -> Result<SuiteSummary> {
    let scenarios = bundled_scenarios()?;
    let reports = run_all(&scenarios, base);
    let all_pass = reports.iter().all(|r| r.pass);
    Ok(SuiteSummary { reports, all_pass })
}
