//! Murty's partitioning scheme for ranked assignments.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{best_assignment, canonical_solve, Assignment, AssignmentProblem};

struct Node {
    assignment: Assignment,
    /// Cost matrix with this node's force/forbid constraints applied.
    costs: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.assignment.rank_cmp(&self.assignment)
    }
}

/// The `k` cheapest distinct assignments in nondecreasing cost order (fewer
/// when fewer exist; none when the problem is infeasible).
///
/// Each popped solution is split into subproblems: for row `t`, rows before
/// `t` are forced to their columns in the solution and row `t` is forbidden
/// from its column. Forcing in row order keeps the subproblems disjoint.
pub fn k_best_assignments(problem: &AssignmentProblem, k: usize) -> Vec<Assignment> {
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let Ok(root) = best_assignment(problem) else {
        return out;
    };
    let (rows, cols) = (problem.rows(), problem.cols());
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        assignment: root,
        costs: problem.raw().to_vec(),
    });

    while let Some(node) = heap.pop() {
        let solution = node.assignment.row_to_col.clone();
        out.push(node.assignment);
        if out.len() == k {
            break;
        }
        let mut base = node.costs;
        for t in 0..rows {
            let col = solution[t];
            let row = &base[t * cols..(t + 1) * cols];
            let alternatives = row.iter().enumerate().any(|(j, c)| j != col && c.is_finite());
            if alternatives {
                let mut sub = base.clone();
                sub[t * cols + col] = f64::INFINITY;
                if let Some(row_to_col) = canonical_solve(&sub, rows, cols) {
                    let total_cost = problem.total_cost(&row_to_col);
                    heap.push(Node {
                        assignment: Assignment { row_to_col, total_cost },
                        costs: sub,
                    });
                }
            }
            // force (t, col) for the remaining subproblems
            for j in 0..cols {
                if j != col {
                    base[t * cols + j] = f64::INFINITY;
                }
            }
            for r in 0..rows {
                if r != t {
                    base[r * cols + col] = f64::INFINITY;
                }
            }
        }
    }
    out
}
