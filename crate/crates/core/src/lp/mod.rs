//! Linear and mixed-binary programming.
//!
//! Problems are assembled with [`Problem`] and solved either by the bounded
//! revised simplex in [`solve_lp`] or by best-first branch-and-bound over the
//! binary variables in [`solve_milp`]. Every optimal LP solve carries row duals
//! with the convention `dual = d(objective) / d(rhs)`, so the dual of a nodal
//! balance written as `supply = demand` is the marginal cost of demand there.

mod lpfile;
mod lu;
mod milp;
mod simplex;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lpfile::write_lp;
pub use milp::{solve_milp, MilpOptions, DEFAULT_GAP_TOL, DEFAULT_NODE_LIMIT};
pub use simplex::{solve_lp, solve_lp_with, SimplexOptions};

/// Primal feasibility tolerance applied to (scaled) rows and bounds.
pub const PRIMAL_TOL: f64 = 1e-7;
/// Optimality tolerance on reduced costs, relative to the largest cost.
pub const DUAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("variable handle {0} is not registered in this problem")]
    UnknownVariable(usize),
    #[error("variable {var} appears twice in constraint `{tag}`")]
    DuplicateCoefficient { var: usize, tag: String },
    #[error("non-finite coefficient or rhs in constraint `{0}`")]
    NonFinite(String),
    #[error("invalid bounds [{lower}, {upper}]")]
    InvalidBounds { lower: f64, upper: f64 },
    #[error("constraint tag `{0}` is already in use")]
    DuplicateTag(String),
    #[error("unknown constraint tag `{0}`")]
    UnknownTag(String),
    #[error("solution is not optimal ({0})")]
    NotOptimal(Status),
    #[error("problem contains binary variables; use solve_milp")]
    HasBinaries,
}

/// Handle to a variable registered in a [`Problem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarHandle(pub(crate) usize);

impl VarHandle {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Index of a constraint row in a [`Problem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowId(pub(crate) usize);

impl RowId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<(VarHandle, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: String,
}

/// A minimization problem over bounded continuous and binary variables.
#[derive(Debug, Clone, Default)]
pub struct Problem {
    vars: Vec<Variable>,
    rows: Vec<LinearConstraint>,
    objective: Vec<f64>,
    objective_offset: f64,
    tags: HashMap<String, RowId>,
}

impl Problem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a continuous variable with bounds `[lower, upper]`; either may be infinite.
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarHandle, LpError> {
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(LpError::InvalidBounds { lower, upper });
        }
        Ok(self.push_var(Variable { lower, upper, kind: VarKind::Continuous, name: name.into() }))
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarHandle {
        self.push_var(Variable { lower: 0.0, upper: 1.0, kind: VarKind::Binary, name: name.into() })
    }

    fn push_var(&mut self, var: Variable) -> VarHandle {
        self.vars.push(var);
        self.objective.push(0.0);
        VarHandle(self.vars.len() - 1)
    }

    /// Adds `coef` to the objective coefficient of `var`.
    pub fn add_cost(&mut self, var: VarHandle, coef: f64) {
        self.objective[var.0] += coef;
    }

    pub fn set_cost(&mut self, var: VarHandle, coef: f64) {
        self.objective[var.0] = coef;
    }

    /// Adds a constant term to the objective.
    pub fn add_objective_offset(&mut self, value: f64) {
        self.objective_offset += value;
    }

    pub fn add_constraint(
        &mut self,
        coeffs: Vec<(VarHandle, f64)>,
        sense: Sense,
        rhs: f64,
        tag: impl Into<String>,
    ) -> Result<RowId, LpError> {
        let tag = tag.into();
        if !rhs.is_finite() || coeffs.iter().any(|(_, c)| !c.is_finite()) {
            return Err(LpError::NonFinite(tag));
        }
        let mut seen: Vec<usize> = coeffs.iter().map(|(v, _)| v.0).collect();
        seen.sort_unstable();
        for pair in seen.windows(2) {
            if pair[0] == pair[1] {
                return Err(LpError::DuplicateCoefficient { var: pair[0], tag });
            }
        }
        if let Some(&last) = seen.last() {
            if last >= self.vars.len() {
                return Err(LpError::UnknownVariable(last));
            }
        }
        let id = RowId(self.rows.len());
        if !tag.is_empty() {
            if self.tags.contains_key(&tag) {
                return Err(LpError::DuplicateTag(tag));
            }
            self.tags.insert(tag.clone(), id);
        }
        self.rows.push(LinearConstraint { coeffs, sense, rhs, tag });
        Ok(id)
    }

    pub fn set_bounds(&mut self, var: VarHandle, lower: f64, upper: f64) -> Result<(), LpError> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(LpError::InvalidBounds { lower, upper });
        }
        let v = self.vars.get_mut(var.0).ok_or(LpError::UnknownVariable(var.0))?;
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn set_rhs(&mut self, row: RowId, rhs: f64) {
        self.rows[row.0].rhs = rhs;
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var(&self, var: VarHandle) -> &Variable {
        &self.vars[var.0]
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[LinearConstraint] {
        &self.rows
    }

    pub fn row(&self, row: RowId) -> &LinearConstraint {
        &self.rows[row.0]
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    pub fn row_by_tag(&self, tag: &str) -> Option<RowId> {
        self.tags.get(tag).copied()
    }

    /// Copy with every binary turned into a continuous variable on its current bounds.
    pub fn relaxed(&self) -> Problem {
        let mut p = self.clone();
        for v in &mut p.vars {
            v.kind = VarKind::Continuous;
        }
        p
    }

    pub fn has_binaries(&self) -> bool {
        self.vars.iter().any(|v| v.kind == VarKind::Binary)
    }

    pub fn handles(&self) -> impl Iterator<Item = VarHandle> {
        (0..self.vars.len()).map(VarHandle)
    }

    /// Evaluates the objective (including the constant offset) at `x`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Largest violation of any row or bound at `x`, in the problem's own units.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &val) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - val).max(val - v.upper);
        }
        for row in &self.rows {
            let act = row_activity(row, x);
            let viol = match row.sense {
                Sense::Le => act - row.rhs,
                Sense::Ge => row.rhs - act,
                Sense::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}

pub(crate) fn row_activity(row: &LinearConstraint, x: &[f64]) -> f64 {
    row.coeffs.iter().map(|(v, c)| c * x[v.0]).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// The basis could not be factorized even after repair.
    NumericalFailure,
    /// Iteration cap reached before optimality was proven.
    IterationLimit,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::NumericalFailure => "numerical failure",
            Status::IterationLimit => "iteration limit",
        };
        f.write_str(s)
    }
}

/// Branch-and-bound statistics attached to MILP solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipInfo {
    pub nodes: usize,
    pub branches: usize,
    pub best_bound: f64,
    pub gap: f64,
    pub node_limit_hit: bool,
    /// Duals come from the final LP with every binary fixed at its incumbent value.
    pub restricted_duals: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    pub primal: Vec<f64>,
    /// One dual per row, `d(objective) / d(rhs)`.
    pub duals: Vec<f64>,
    /// Reduced cost per variable, `c_j - a_j^T y`.
    pub reduced_costs: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
    pub mip: Option<MipInfo>,
}

impl Solution {
    pub(crate) fn failed(status: Status, n: usize, m: usize, iterations: usize) -> Self {
        Solution {
            status,
            primal: vec![0.0; n],
            duals: vec![0.0; m],
            reduced_costs: vec![0.0; n],
            objective_value: f64::NAN,
            iterations,
            mip: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn value(&self, var: VarHandle) -> f64 {
        self.primal[var.0]
    }

    pub fn dual(&self, row: RowId) -> f64 {
        self.duals[row.0]
    }

    /// Dual objective `b^T y + sum_j d_j x_j`; equals the primal objective at an optimal basis.
    pub fn dual_objective(&self, problem: &Problem) -> f64 {
        let by: f64 = problem.rows.iter().zip(&self.duals).map(|(r, y)| r.rhs * y).sum();
        let dx: f64 = self.reduced_costs.iter().zip(&self.primal).map(|(d, x)| d * x).sum();
        problem.objective_offset + by + dx
    }
}

/// Dual value of the row registered under `tag`.
pub fn dual_of(problem: &Problem, solution: &Solution, tag: &str) -> Result<f64, LpError> {
    if !solution.is_optimal() {
        return Err(LpError::NotOptimal(solution.status));
    }
    let row = problem.row_by_tag(tag).ok_or_else(|| LpError::UnknownTag(tag.to_string()))?;
    Ok(solution.dual(row))
}
