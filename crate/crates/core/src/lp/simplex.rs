//! Dense bounded-variable primal simplex for
//!
//! ```text
//! max <cost, x>  s.t.  A x (<= | =) rhs,  lower <= x <= upper
//! ```
//!
//! with a small number of rows. Each row gets a logical column `e_i` (slack in
//! `[0, inf)` for `<=` rows, fixed at 0 for `=` rows). Rows whose logical
//! cannot absorb the initial residual get an artificial column, driven out by a
//! phase-1 that maximizes `-sum(artificials)`.
//!
//! The basis is refactored every iteration; with `m` in the single digits this
//! costs less than pricing and keeps basic values and duals free of drift.

use super::dense::Lu;
use super::{LpError, TOL_FEASIBILITY, TOL_OPTIMALITY};

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
pub(crate) const DEGENERACY_STREAK: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RowSense {
    LessEq,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic(usize),
    AtLower,
    AtUpper,
}

/// Problem data. Structural variables must have finite bounds.
pub(crate) struct Problem<'a> {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows x cols`.
    pub a: &'a [f64],
    pub cost: &'a [f64],
    pub rhs: &'a [f64],
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub sense: RowSense,
    /// Structurals that start at their upper bound; empty means all at lower.
    pub start_upper: Vec<bool>,
}

#[derive(Debug, Clone)]
pub(crate) enum Outcome {
    Optimal(Vertex),
    Infeasible,
}

#[derive(Debug, Clone)]
pub(crate) struct Vertex {
    /// Structural values.
    pub x: Vec<f64>,
    /// Row duals `B^{-T} c_B`.
    pub duals: Vec<f64>,
    /// Structural variables in the final basis.
    pub basic_structurals: Vec<usize>,
    pub iterations: usize,
}

/// Extra column kinds beyond the structurals.
#[derive(Debug, Clone, Copy)]
enum Column {
    Structural(usize),
    /// `e_row`.
    Logical(usize),
    /// `sign * e_row`.
    Artificial(usize, f64),
}

struct Tableau<'a> {
    p: &'a Problem<'a>,
    columns: Vec<Column>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    iterations: usize,
    max_iterations: usize,
}

impl<'a> Tableau<'a> {
    fn column_entry(&self, k: usize, row: usize) -> f64 {
        match self.columns[k] {
            Column::Structural(j) => self.p.a[row * self.p.cols + j],
            Column::Logical(r) => f64::from(u8::from(r == row)),
            Column::Artificial(r, sign) => {
                if r == row {
                    sign
                } else {
                    0.0
                }
            }
        }
    }

    fn column(&self, k: usize) -> Vec<f64> {
        (0..self.p.rows).map(|r| self.column_entry(k, r)).collect()
    }

    fn factor(&self) -> Result<Lu, LpError> {
        let m = self.p.rows;
        let mut mat = vec![0.0; m * m];
        for (pos, &k) in self.basis.iter().enumerate() {
            for r in 0..m {
                mat[r * m + pos] = self.column_entry(k, r);
            }
        }
        Lu::factor(mat, m, 1e-13).ok_or(LpError::SingularBasis)
    }

    /// Recomputes basic values from the nonbasic ones.
    fn update_basics(&mut self, lu: &Lu) {
        let m = self.p.rows;
        let mut residual = self.p.rhs.to_vec();
        for k in 0..self.columns.len() {
            if matches!(self.state[k], State::Basic(_)) || self.value[k] == 0.0 {
                continue;
            }
            let v = self.value[k];
            match self.columns[k] {
                Column::Structural(j) => {
                    for (r, res) in residual.iter_mut().enumerate() {
                        *res -= self.p.a[r * self.p.cols + j] * v;
                    }
                }
                Column::Logical(r) => residual[r] -= v,
                Column::Artificial(r, sign) => residual[r] -= sign * v,
            }
        }
        let xb = lu.solve(&residual);
        for pos in 0..m {
            self.value[self.basis[pos]] = xb[pos];
        }
    }

    fn duals(&self, lu: &Lu, cost: &[f64]) -> Vec<f64> {
        let cb: Vec<f64> = self.basis.iter().map(|&k| cost[k]).collect();
        lu.solve_transpose(&cb)
    }

    fn reduced_cost(&self, k: usize, cost: &[f64], duals: &[f64]) -> f64 {
        match self.columns[k] {
            Column::Structural(j) => {
                let mut d = cost[k];
                for (r, y) in duals.iter().enumerate() {
                    d -= y * self.p.a[r * self.p.cols + j];
                }
                d
            }
            Column::Logical(r) => cost[k] - duals[r],
            Column::Artificial(r, sign) => cost[k] - sign * duals[r],
        }
    }

    /// Runs simplex iterations for `cost` until optimal.
    fn optimize(&mut self, cost: &[f64]) -> Result<Vec<f64>, LpError> {
        let m = self.p.rows;
        let mut bland = false;
        let mut streak = 0usize;
        loop {
            let lu = self.factor()?;
            self.update_basics(&lu);
            let duals = self.duals(&lu, cost);

            // Pricing.
            let mut entering: Option<(usize, f64)> = None;
            for k in 0..self.columns.len() {
                let dir = match self.state[k] {
                    State::Basic(_) => continue,
                    _ if self.upper[k] - self.lower[k] <= 0.0 => continue,
                    State::AtLower => 1.0,
                    State::AtUpper => -1.0,
                };
                let d = self.reduced_cost(k, cost, &duals);
                if d * dir > TOL_OPTIMALITY {
                    if bland {
                        entering = Some((k, d));
                        break;
                    }
                    if entering.is_none_or(|(_, best)| d.abs() > best.abs()) {
                        entering = Some((k, d));
                    }
                }
            }
            let Some((enter, _)) = entering else {
                return Ok(duals);
            };

            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(LpError::IterationLimit {
                    limit: self.max_iterations,
                });
            }

            let dir = if self.state[enter] == State::AtLower {
                1.0
            } else {
                -1.0
            };
            let alpha = lu.solve(&self.column(enter));

            // Ratio test. Basic variable at position `pos` moves by `-dir * alpha[pos] * t`.
            let mut step = self.upper[enter] - self.lower[enter];
            let mut leaving: Option<(usize, bool, f64)> = None; // (pos, to_upper, |alpha|)
            for pos in 0..m {
                let delta = -dir * alpha[pos];
                if delta.abs() <= PIVOT_TOL {
                    continue;
                }
                let k = self.basis[pos];
                let (limit, to_upper) = if delta < 0.0 {
                    (((self.value[k] - self.lower[k]) / -delta).max(0.0), false)
                } else if self.upper[k].is_finite() {
                    (((self.upper[k] - self.value[k]) / delta).max(0.0), true)
                } else {
                    continue;
                };
                let better = match leaving {
                    None => limit < step,
                    Some((best_pos, _, best_mag)) => {
                        if limit < step - 1e-12 {
                            true
                        } else if limit <= step + 1e-12 {
                            if bland {
                                k < self.basis[best_pos]
                            } else {
                                delta.abs() > best_mag
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    step = step.min(limit);
                    leaving = Some((pos, to_upper, delta.abs()));
                }
            }
            if !step.is_finite() {
                return Err(LpError::Unbounded);
            }

            if step <= DEGENERATE_STEP {
                streak += 1;
                if streak > DEGENERACY_STREAK {
                    bland = true;
                }
            } else {
                streak = 0;
            }

            match leaving {
                None => {
                    // Bound flip.
                    self.state[enter] = if dir > 0.0 {
                        self.value[enter] = self.upper[enter];
                        State::AtUpper
                    } else {
                        self.value[enter] = self.lower[enter];
                        State::AtLower
                    };
                }
                Some((pos, to_upper, _)) => {
                    let leave = self.basis[pos];
                    if to_upper {
                        self.state[leave] = State::AtUpper;
                        self.value[leave] = self.upper[leave];
                    } else {
                        self.state[leave] = State::AtLower;
                        self.value[leave] = self.lower[leave];
                    }
                    self.value[enter] += dir * step;
                    self.state[enter] = State::Basic(pos);
                    self.basis[pos] = enter;
                }
            }
        }
    }
}

pub(crate) fn solve(p: &Problem<'_>) -> Result<Outcome, LpError> {
    let (m, n) = (p.rows, p.cols);
    debug_assert_eq!(p.a.len(), m * n);
    let mut columns: Vec<Column> = (0..n).map(Column::Structural).collect();
    columns.extend((0..m).map(Column::Logical));
    let mut lower = p.lower.clone();
    let mut upper = p.upper.clone();
    let logical_upper = match p.sense {
        RowSense::LessEq => f64::INFINITY,
        RowSense::Equal => 0.0,
    };
    lower.extend(std::iter::repeat_n(0.0, m));
    upper.extend(std::iter::repeat_n(logical_upper, m));

    let mut value: Vec<f64> = lower.clone();
    let mut state = vec![State::AtLower; n + m];
    for (j, _) in p.start_upper.iter().enumerate().filter(|(_, &up)| up) {
        if upper[j] > lower[j] {
            value[j] = upper[j];
            state[j] = State::AtUpper;
        }
    }
    let mut residual = p.rhs.to_vec();
    for j in 0..n {
        if value[j] != 0.0 {
            for (r, res) in residual.iter_mut().enumerate() {
                *res -= p.a[r * n + j] * value[j];
            }
        }
    }

    let mut basis = Vec::with_capacity(m);
    let mut artificials = Vec::new();
    for (r, &res) in residual.iter().enumerate() {
        let logical = n + r;
        if res >= 0.0 && res <= upper[logical] {
            state[logical] = State::Basic(r);
            value[logical] = res;
            basis.push(logical);
        } else {
            let k = columns.len();
            let sign = if res >= 0.0 { 1.0 } else { -1.0 };
            columns.push(Column::Artificial(r, sign));
            lower.push(0.0);
            upper.push(f64::INFINITY);
            value.push(res.abs());
            state.push(State::Basic(r));
            basis.push(k);
            artificials.push(k);
        }
    }

    let total = columns.len();
    let mut t = Tableau {
        p,
        columns,
        lower,
        upper,
        value,
        state,
        basis,
        iterations: 0,
        max_iterations: 100 * (n + m),
    };

    if !artificials.is_empty() {
        let mut phase1 = vec![0.0; total];
        for &k in &artificials {
            phase1[k] = -1.0;
        }
        t.optimize(&phase1)?;
        let infeasibility: f64 = artificials.iter().map(|&k| t.value[k]).sum();
        let scale = 1.0 + p.rhs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if infeasibility > TOL_FEASIBILITY * scale {
            return Ok(Outcome::Infeasible);
        }
        for &k in &artificials {
            t.upper[k] = 0.0;
            if !matches!(t.state[k], State::Basic(_)) {
                t.value[k] = 0.0;
            }
        }
    }

    let mut cost = vec![0.0; total];
    cost[..n].copy_from_slice(p.cost);
    let duals = t.optimize(&cost)?;
    // Final basic values for the optimal basis.
    let lu = t.factor()?;
    t.update_basics(&lu);

    let x: Vec<f64> = (0..n)
        .map(|j| t.value[j].clamp(p.lower[j], p.upper[j]))
        .collect();
    let basic_structurals = t.basis.iter().copied().filter(|&k| k < n).collect();
    Ok(Outcome::Optimal(Vertex {
        x,
        duals,
        basic_structurals,
        iterations: t.iterations,
    }))
}
