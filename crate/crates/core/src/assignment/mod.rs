//! Optimal and k-best 2-D assignment, plus ellipsoidal gating.

mod gating;
mod lap;
mod murty;

pub use gating::{gate_measurements, DEFAULT_GATE_CHI2};
pub(crate) use gating::gate_with_innovations;
pub use murty::k_best_assignments;

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Dense `rows x cols` cost matrix. Every row must be assigned to a distinct
/// column; `+∞` marks a forbidden pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentProblem {
    rows: usize,
    cols: usize,
    costs: Vec<f64>,
}

impl AssignmentProblem {
    pub fn new(rows: usize, cols: usize, costs: Vec<f64>) -> Result<Self> {
        if costs.len() != rows * cols {
            return Err(Error::dims("cost matrix", rows * cols, costs.len()));
        }
        if let Some(bad) = costs.iter().find(|c| c.is_nan() || **c == f64::NEG_INFINITY) {
            return Err(Error::config("costs", format!("invalid cost entry {bad}")));
        }
        Ok(Self { rows, cols, costs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::config("costs", "ragged cost matrix"));
        }
        Self::new(rows.len(), cols, rows.iter().flatten().copied().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cost(&self, row: usize, col: usize) -> f64 {
        self.costs[row * self.cols + col]
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.costs
    }

    pub fn total_cost(&self, row_to_col: &[usize]) -> f64 {
        row_to_col.iter().enumerate().map(|(i, &j)| self.cost(i, j)).sum()
    }
}

/// One feasible assignment and its total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub row_to_col: Vec<usize>,
    pub total_cost: f64,
}

impl Assignment {
    /// Orders by cost, then lexicographically by mapping.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        self.total_cost
            .total_cmp(&other.total_cost)
            .then_with(|| self.row_to_col.cmp(&other.row_to_col))
    }
}

fn tie_tolerance(cost: f64) -> f64 {
    1e-10 * (1.0 + cost.abs())
}

/// Minimum-cost assignment. Among optimal assignments the lexicographically
/// smallest `row_to_col` is returned.
pub fn best_assignment(problem: &AssignmentProblem) -> Result<Assignment> {
    let row_to_col = canonical_solve(&problem.costs, problem.rows, problem.cols).ok_or(Error::Infeasible)?;
    let total_cost = problem.total_cost(&row_to_col);
    Ok(Assignment { row_to_col, total_cost })
}

/// Lexicographically smallest optimal assignment of a raw cost matrix.
pub(crate) fn canonical_solve(costs: &[f64], rows: usize, cols: usize) -> Option<Vec<usize>> {
    let solution = lap::solve_with_duals(costs, rows, cols)?;
    let cost_of = |r2c: &[usize]| -> f64 { r2c.iter().enumerate().map(|(i, &j)| costs[i * cols + j]).sum() };
    let optimum = cost_of(&solution.row_to_col);
    let tol = tie_tolerance(optimum);
    let scale = costs.iter().filter(|c| c.is_finite()).fold(0.0f64, |m, c| m.max(c.abs()));
    let slack_tol = 1e-9 * (1.0 + scale);

    // Fix rows in order to the smallest column that still admits an optimum.
    // Only pairs with zero reduced cost can appear in an optimal assignment,
    // and the current solution always completes its own column choice.
    let mut current = solution.row_to_col.clone();
    let mut work = costs.to_vec();
    let mut fixed_cost = 0.0;
    for i in 0..rows {
        for c in 0..current[i] {
            let cost = work[i * cols + c];
            if !cost.is_finite() || cost - solution.row[i] - solution.col[c] > slack_tol {
                continue;
            }
            let sub = restrict(&work, rows, cols, i, c);
            let Some(rest) = lap::solve(&sub, rows - i - 1, cols) else {
                continue;
            };
            let rest_cost: f64 = rest
                .iter()
                .enumerate()
                .map(|(k, &j)| sub[k * cols + j])
                .sum();
            if fixed_cost + cost + rest_cost <= optimum + tol {
                current[i] = c;
                current[i + 1..].copy_from_slice(&rest);
                break;
            }
        }
        let c = current[i];
        fixed_cost += work[i * cols + c];
        for r in i + 1..rows {
            work[r * cols + c] = f64::INFINITY;
        }
    }
    Some(current)
}

/// Rows after `row` of `work` with column `col` forbidden.
fn restrict(work: &[f64], rows: usize, cols: usize, row: usize, col: usize) -> Vec<f64> {
    let mut sub = work[(row + 1) * cols..rows * cols].to_vec();
    for r in 0..rows - row - 1 {
        sub[r * cols + col] = f64::INFINITY;
    }
    sub
}
