//! LP relaxations of packing programs.
//!
//! [`solve_lp`] handles the node relaxations of the branch-and-bound tree
//! (`Ax <= b`, box bounds, some variables fixed) and [`solve_eq_lp`] the slice
//! programs `max <c,x> s.t. Ax = b', x in [0,1]^n`. Both return an optimal
//! vertex, so at most `m` free coordinates are fractional, together with the
//! row duals `lambda` and the upper-bound duals `mu`.

mod dense;
mod simplex;

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::instance::PackingInstance;
use simplex::{Outcome, Problem, RowSense};

/// Primal feasibility tolerance.
pub const TOL_FEASIBILITY: f64 = 1e-9;
/// Reduced-cost optimality tolerance.
pub const TOL_OPTIMALITY: f64 = 1e-9;
/// A coordinate is fractional iff `min(x_j, 1 - x_j) > TOL_INTEGRALITY`.
pub const TOL_INTEGRALITY: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("simplex exceeded its iteration limit of {limit} pivots")]
    IterationLimit { limit: usize },
    #[error("simplex basis became numerically singular")]
    SingularBasis,
    #[error("LP reported unbounded on a bounded feasible region")]
    Unbounded,
    #[error("invalid fixings: {0}")]
    InvalidFixing(String),
    #[error("right-hand side has {got} entries, expected {expected}")]
    RhsLength { expected: usize, got: usize },
}

/// Variables fixed to 0 (`zero`) and to 1 (`one`) by branching.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct FixedSets {
    pub zero: BTreeSet<usize>,
    pub one: BTreeSet<usize>,
}

impl FixedSets {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_fixed(&self, j: usize) -> bool {
        self.zero.contains(&j) || self.one.contains(&j)
    }

    pub fn len(&self) -> usize {
        self.zero.len() + self.one.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zero.is_empty() && self.one.is_empty()
    }

    /// Copy with `j` fixed to `value` (0 or 1).
    pub fn with(&self, j: usize, value: u8) -> FixedSets {
        let mut out = self.clone();
        if value == 0 {
            out.zero.insert(j);
        } else {
            out.one.insert(j);
        }
        out
    }

    pub fn validate(&self, n: usize) -> Result<(), LpError> {
        if let Some(j) = self.zero.intersection(&self.one).next() {
            return Err(LpError::InvalidFixing(format!(
                "x_{j} fixed to both 0 and 1"
            )));
        }
        if let Some(j) = self.zero.iter().chain(&self.one).find(|&&j| j >= n) {
            return Err(LpError::InvalidFixing(format!(
                "index {j} out of range for n = {n}"
            )));
        }
        Ok(())
    }
}

/// An optimal vertex with its duals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpVertex {
    pub x: Vec<f64>,
    pub value: f64,
    /// Indices with `min(x_j, 1 - x_j) > TOL_INTEGRALITY`, ascending.
    pub fractional: Vec<usize>,
    /// Duals of the knapsack rows.
    pub lambda: Vec<f64>,
    /// Duals of `x_j <= 1` for free variables: `max(0, c_j - <lambda, A^j>)`.
    /// Zero for fixed variables.
    pub mu: Vec<f64>,
    /// `sum over j fixed to 1 of (<lambda, A^j> - c_j)`; with it,
    /// `value = <rhs, lambda> + <1, mu> - fixed_correction` at optimality.
    pub fixed_correction: f64,
    pub iterations: usize,
}

impl LpVertex {
    pub fn is_integral(&self) -> bool {
        self.fractional.is_empty()
    }

    /// `x` rounded to the nearest 0/1 point.
    pub fn rounded(&self) -> Vec<u8> {
        self.x.iter().map(|&v| u8::from(v >= 0.5)).collect()
    }

    /// Dual objective for the right-hand side the LP was solved with.
    pub fn dual_value(&self, rhs: &[f64]) -> f64 {
        rhs.iter()
            .zip(&self.lambda)
            .map(|(b, l)| b * l)
            .sum::<f64>()
            + self.mu.iter().sum::<f64>()
            - self.fixed_correction
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LpSolution {
    Optimal(LpVertex),
    Infeasible,
}

impl LpSolution {
    pub fn vertex(&self) -> Option<&LpVertex> {
        match self {
            LpSolution::Optimal(v) => Some(v),
            LpSolution::Infeasible => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.vertex().map(|v| v.value)
    }

    pub fn is_optimal(&self) -> bool {
        matches!(self, LpSolution::Optimal(_))
    }
}

/// Node relaxation: `max <c,x> s.t. Ax <= b`, `x_j = 0` on `fixed.zero`,
/// `x_j = 1` on `fixed.one`, `x_j in [0,1]` otherwise.
pub fn solve_lp(inst: &PackingInstance, fixed: &FixedSets) -> Result<LpSolution, LpError> {
    solve_lp_from(inst, fixed, None)
}

/// [`solve_lp`] started from a nearby point: free variables with
/// `start_j > 1/2` begin at their upper bound. A child node started from its
/// parent's solution needs a handful of pivots instead of one per item taken.
/// The optimum is the same; only the pivot path changes.
pub fn solve_lp_from(
    inst: &PackingInstance,
    fixed: &FixedSets,
    start: Option<&[f64]>,
) -> Result<LpSolution, LpError> {
    let n = inst.n();
    fixed.validate(n)?;
    let mut lower = vec![0.0; n];
    let mut upper = vec![1.0; n];
    for &j in &fixed.zero {
        upper[j] = 0.0;
    }
    for &j in &fixed.one {
        lower[j] = 1.0;
    }
    let problem = Problem {
        rows: inst.m(),
        cols: n,
        a: inst.matrix(),
        cost: inst.c(),
        rhs: inst.b(),
        lower,
        upper,
        sense: RowSense::LessEq,
        start_upper: start.map_or_else(Vec::new, |x| x.iter().map(|&v| v > 0.5).collect()),
    };
    finish(inst, &problem, fixed)
}

/// Slice LP: `max <c,x> s.t. Ax = bprime, x in [0,1]^n`.
pub fn solve_eq_lp(inst: &PackingInstance, bprime: &[f64]) -> Result<LpSolution, LpError> {
    if bprime.len() != inst.m() {
        return Err(LpError::RhsLength {
            expected: inst.m(),
            got: bprime.len(),
        });
    }
    let n = inst.n();
    let problem = Problem {
        rows: inst.m(),
        cols: n,
        a: inst.matrix(),
        cost: inst.c(),
        rhs: bprime,
        lower: vec![0.0; n],
        upper: vec![1.0; n],
        sense: RowSense::Equal,
        start_upper: Vec::new(),
    };
    finish(inst, &problem, &FixedSets::default())
}

/// Root relaxation value `OPT(LP(b))`. The root is always feasible (`x = 0`).
pub fn lp_value(inst: &PackingInstance) -> Result<f64, LpError> {
    match solve_lp(inst, &FixedSets::default())? {
        LpSolution::Optimal(v) => Ok(v.value),
        LpSolution::Infeasible => unreachable!("x = 0 is feasible when b >= 0"),
    }
}

/// Reduced cost `c_j - <lambda, A^j>`.
pub fn reduced_cost(inst: &PackingInstance, lambda: &[f64], j: usize) -> f64 {
    inst.c()[j] - inst.column(j).zip(lambda).map(|(a, l)| a * l).sum::<f64>()
}

fn finish(
    inst: &PackingInstance,
    problem: &Problem<'_>,
    fixed: &FixedSets,
) -> Result<LpSolution, LpError> {
    let vertex = match simplex::solve(problem)? {
        Outcome::Infeasible => return Ok(LpSolution::Infeasible),
        Outcome::Optimal(v) => v,
    };
    debug_assert!(vertex.basic_structurals.len() <= inst.m());
    let n = inst.n();
    let lambda = vertex.duals;
    let mut mu = vec![0.0; n];
    let mut fixed_correction = 0.0;
    for j in 0..n {
        let d = reduced_cost(inst, &lambda, j);
        if fixed.one.contains(&j) {
            fixed_correction -= d;
        } else if !fixed.zero.contains(&j) {
            mu[j] = d.max(0.0);
        }
    }
    let x = vertex.x;
    let fractional = x
        .iter()
        .enumerate()
        .filter(|(_, &v)| v.min(1.0 - v) > TOL_INTEGRALITY)
        .map(|(j, _)| j)
        .collect();
    Ok(LpSolution::Optimal(LpVertex {
        value: inst.objective(&x),
        x,
        fractional,
        lambda,
        mu,
        fixed_correction,
        iterations: vertex.iterations,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn running_example() -> PackingInstance {
        PackingInstance::new(vec![vec![0.6, 0.5]], vec![0.9, 0.5], vec![0.8]).unwrap()
    }

    #[test]
    fn running_example_root() {
        let inst = running_example();
        let sol = solve_lp(&inst, &FixedSets::new()).unwrap();
        let v = sol.vertex().unwrap();
        assert!((v.x[0] - 1.0).abs() < 1e-12);
        assert!((v.x[1] - 0.4).abs() < 1e-12);
        assert!((v.value - 1.1).abs() < 1e-12);
        assert_eq!(v.fractional, vec![1]);
        // lambda = c_2 / a_2 = 1.0; mu_1 = 0.9 - 0.6.
        assert!((v.lambda[0] - 1.0).abs() < 1e-12);
        assert!((v.mu[0] - 0.3).abs() < 1e-12);
        assert!((v.dual_value(inst.b()) - v.value).abs() < 1e-12);
        assert!((lp_value(&inst).unwrap() - 1.1).abs() < 1e-12);
    }

    #[test]
    fn running_example_slice() {
        let inst = running_example();
        let sol = solve_eq_lp(&inst, &[0.3]).unwrap();
        let v = sol.vertex().unwrap();
        assert!((v.x[0] - 0.5).abs() < 1e-12);
        assert!(v.x[1].abs() < 1e-12);
        assert!((v.value - 0.45).abs() < 1e-12);
        assert!((v.lambda[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn all_ones_fixing_over_capacity_is_infeasible() {
        let inst = running_example();
        let fixed = FixedSets {
            zero: BTreeSet::new(),
            one: [0, 1].into(),
        };
        assert_eq!(solve_lp(&inst, &fixed).unwrap(), LpSolution::Infeasible);
    }

    #[test]
    fn slack_rows_give_all_ones() {
        let base = PackingInstance::generate(2, 8, &[0.25, 0.25], 3).unwrap();
        let rows: Vec<Vec<f64>> = (0..2).map(|i| base.row(i).to_vec()).collect();
        let inst = PackingInstance::new(rows, base.c().to_vec(), vec![8.0, 8.0]).unwrap();
        let v = solve_lp(&inst, &FixedSets::new())
            .unwrap()
            .vertex()
            .cloned()
            .unwrap();
        assert!(v.x.iter().all(|&x| x == 1.0));
        assert!(v.fractional.is_empty());
        assert!((v.value - inst.c().iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn zero_slice_is_the_origin() {
        let inst = PackingInstance::generate(2, 6, &[0.3, 0.3], 11).unwrap();
        let v = solve_eq_lp(&inst, &[0.0, 0.0])
            .unwrap()
            .vertex()
            .cloned()
            .unwrap();
        assert!(v.x.iter().all(|&x| x.abs() < 1e-9));
        assert!(v.value.abs() < 1e-9);
    }

    #[test]
    fn empty_slice_is_infeasible() {
        let inst = running_example();
        // 0.6 + 0.5 = 1.1 is the largest attainable occupation.
        assert_eq!(solve_eq_lp(&inst, &[1.2]).unwrap(), LpSolution::Infeasible);
    }

    #[test]
    fn rejects_bad_fixings() {
        let inst = running_example();
        let both = FixedSets {
            zero: [0].into(),
            one: [0].into(),
        };
        assert!(matches!(
            solve_lp(&inst, &both),
            Err(LpError::InvalidFixing(_))
        ));
        let out_of_range = FixedSets::new().with(7, 1);
        assert!(matches!(
            solve_lp(&inst, &out_of_range),
            Err(LpError::InvalidFixing(_))
        ));
        assert!(matches!(
            solve_eq_lp(&inst, &[0.1, 0.2]),
            Err(LpError::RhsLength { .. })
        ));
    }
}
