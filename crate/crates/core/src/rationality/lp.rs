//! Linear constraint systems over named real variables and their feasibility.
//!
//! Feasibility is decided by the simplex implementation in `minilp` with a zero
//! objective. Strict inequalities are closed by a fixed margin before solving.

use std::fmt;

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

/// Margin used to close strict inequalities.
pub const DEFAULT_STRICT_EPS: f64 = 1e-7;

/// Tolerance used when re-checking a solution returned by the LP backend.
const VERIFY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    /// `ν^j`: log utility of the realised surplus of observation `j`.
    Utility { obs: usize },
    /// `ν^{k,j}`: log utility at value `θ^k` when bidding `b^j`.
    CrossUtility { k: usize, j: usize },
    /// `ν^k_γ`: log utility at value `θ^k` when paying `γ`.
    GammaUtility { k: usize },
    /// `λ^{k,j}`: supergradient of log utility at `θ^k - b^j`.
    Supergradient { k: usize, j: usize },
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarKind::Utility { obs } => write!(f, "nu[{obs}]"),
            VarKind::CrossUtility { k, j } => write!(f, "nu[{k},{j}]"),
            VarKind::GammaUtility { k } => write!(f, "nu_gamma[{k}]"),
            VarKind::Supergradient { k, j } => write!(f, "lambda[{k},{j}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// Which part of a test a constraint encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Sign restriction on a single variable.
    Bound,
    /// Afriat concavity inequality of the FP test.
    Concavity,
    /// Utility levels ordered like surpluses.
    Ordering,
    /// NCSP row 1: log-concavity between own bid and another bid.
    CrossConcavity,
    /// NCSP row 2: log-concavity towards the `γ` price.
    GammaConcavity,
    /// NCSP row 3: best response when the seller can charge the full bid.
    FirstPriceResponse,
    /// NCSP row 4: best response when the seller overcharges by `γ`.
    OverchargeResponse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    /// `<` / `>` instead of `<=` / `>=`.
    pub strict: bool,
    pub family: Family,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LPSystem {
    vars: Vec<VarKind>,
    index: std::collections::HashMap<VarKind, usize>,
    constraints: Vec<Constraint>,
}

impl LPSystem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index of `kind`, registering it on first use.
    pub fn var(&mut self, kind: VarKind) -> usize {
        if let Some(&i) = self.index.get(&kind) {
            return i;
        }
        self.vars.push(kind);
        self.index.insert(kind, self.vars.len() - 1);
        self.vars.len() - 1
    }

    pub fn lookup(&self, kind: VarKind) -> Option<usize> {
        self.index.get(&kind).copied()
    }

    pub fn variables(&self) -> &[VarKind] {
        &self.vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn count(&self, family: Family) -> usize {
        self.constraints
            .iter()
            .filter(|c| c.family == family)
            .count()
    }

    pub fn push(
        &mut self,
        family: Family,
        terms: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
        strict: bool,
    ) -> Result<()> {
        if !rhs.is_finite()
            || terms
                .iter()
                .any(|(v, c)| !c.is_finite() || *v >= self.vars.len())
        {
            return Err(Error::Domain(format!(
                "malformed {family:?} constraint (rhs {rhs}, terms {terms:?})"
            )));
        }
        self.constraints.push(Constraint {
            terms,
            relation,
            rhs,
            strict,
            family,
        });
        Ok(())
    }

    /// `x <= 0`.
    pub fn nonpositive(&mut self, kind: VarKind) -> Result<()> {
        let v = self.var(kind);
        self.push(Family::Bound, vec![(v, 1.0)], Relation::Le, 0.0, false)
    }

    /// `x > 0`.
    pub fn positive(&mut self, kind: VarKind) -> Result<()> {
        let v = self.var(kind);
        self.push(Family::Bound, vec![(v, 1.0)], Relation::Ge, 0.0, true)
    }

    /// Checks a candidate point against every constraint, with strict rows
    /// closed by `strict_eps` and a slack of `tol`.
    pub fn satisfied_by(&self, point: &[f64], strict_eps: f64, tol: f64) -> bool {
        self.constraints.iter().all(|c| {
            let lhs: f64 = c.terms.iter().map(|&(v, a)| a * point[v]).sum();
            let (lo, hi) = closed_bounds(c, strict_eps);
            lhs >= lo - tol && lhs <= hi + tol
        })
    }
}

/// Closed interval `[lo, hi]` that the constraint's left-hand side must lie in.
fn closed_bounds(c: &Constraint, eps: f64) -> (f64, f64) {
    let margin = if c.strict { eps } else { 0.0 };
    match c.relation {
        Relation::Le => (f64::NEG_INFINITY, c.rhs - margin),
        Relation::Ge => (c.rhs + margin, f64::INFINITY),
        Relation::Eq => (c.rhs, c.rhs),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityOptions {
    pub strict_eps: f64,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        FeasibilityOptions {
            strict_eps: DEFAULT_STRICT_EPS,
        }
    }
}

/// Whether some point satisfies every constraint of `lp`, strict rows being
/// tightened by `strict_eps`. Reentrant.
pub fn check_feasible(lp: &LPSystem, opts: FeasibilityOptions) -> Result<bool> {
    let n = lp.vars.len();
    let mut lower = vec![f64::NEG_INFINITY; n];
    let mut upper = vec![f64::INFINITY; n];
    let mut rows = Vec::new();
    for c in &lp.constraints {
        let (lo, hi) = closed_bounds(c, opts.strict_eps);
        let live: Vec<(usize, f64)> = c.terms.iter().copied().filter(|t| t.1 != 0.0).collect();
        match live.as_slice() {
            [] => {
                if !(lo <= 0.0 && 0.0 <= hi) {
                    return Ok(false);
                }
            }
            [(v, a)] => {
                let (l, h) = if *a > 0.0 {
                    (lo / a, hi / a)
                } else {
                    (hi / a, lo / a)
                };
                lower[*v] = lower[*v].max(l);
                upper[*v] = upper[*v].min(h);
            }
            _ => rows.push((live, c.relation, lo, hi)),
        }
    }
    if lower.iter().zip(&upper).any(|(l, h)| l > h) {
        return Ok(false);
    }
    if rows.is_empty() {
        return Ok(true);
    }

    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..n)
        .map(|i| problem.add_var(0.0, (lower[i], upper[i])))
        .collect();
    for (terms, relation, lo, hi) in &rows {
        let expr: Vec<_> = terms.iter().map(|&(v, a)| (vars[v], a)).collect();
        match relation {
            Relation::Le => problem.add_constraint(expr.as_slice(), ComparisonOp::Le, *hi),
            Relation::Ge => problem.add_constraint(expr.as_slice(), ComparisonOp::Ge, *lo),
            Relation::Eq => problem.add_constraint(expr.as_slice(), ComparisonOp::Eq, *lo),
        }
    }
    match problem.solve() {
        Ok(solution) => {
            let point: Vec<f64> = vars.iter().map(|&v| *solution.var_value(v)).collect();
            if lp.satisfied_by(&point, opts.strict_eps, VERIFY_TOL) {
                Ok(true)
            } else {
                Err(Error::Solver(
                    "simplex returned a point violating the system".into(),
                ))
            }
        }
        Err(minilp::Error::Infeasible) => Ok(false),
        Err(minilp::Error::Unbounded) => Err(Error::Solver(
            "zero-objective problem reported unbounded".into(),
        )),
    }
}
