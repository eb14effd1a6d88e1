//! Shortest-augmenting-path solver for rectangular linear assignment with
//! forbidden (`+∞`) entries.

/// Minimum-cost assignment of every row of a row-major `rows x cols` matrix
/// (`rows <= cols`) to a distinct column. Returns `None` when no assignment
/// avoids the infinite entries.
pub(crate) fn solve(costs: &[f64], rows: usize, cols: usize) -> Option<Vec<usize>> {
    solve_with_duals(costs, rows, cols).map(|s| s.row_to_col)
}

/// Optimal assignment with the dual potentials that certify it: every finite
/// `c[i][j] - row[i] - col[j]` is nonnegative and vanishes on assigned pairs.
pub(crate) struct Solution {
    pub row_to_col: Vec<usize>,
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

pub(crate) fn solve_with_duals(costs: &[f64], rows: usize, cols: usize) -> Option<Solution> {
    debug_assert_eq!(costs.len(), rows * cols);
    if rows == 0 {
        return Some(Solution {
            row_to_col: Vec::new(),
            row: Vec::new(),
            col: vec![0.0; cols],
        });
    }
    if rows > cols {
        return None;
    }
    let at = |i: usize, j: usize| costs[(i - 1) * cols + (j - 1)];
    // 1-based potentials; index 0 is the virtual source column
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; cols + 1];
    let mut matched_row = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    let mut min_slack = vec![f64::INFINITY; cols + 1];
    let mut used = vec![false; cols + 1];

    for i in 1..=rows {
        matched_row[0] = i;
        let mut j0 = 0usize;
        min_slack.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let c = at(i0, j);
                if c.is_finite() {
                    let reduced = c - u[i0] - v[j];
                    if reduced < min_slack[j] {
                        min_slack[j] = reduced;
                        way[j] = j0;
                    }
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            if !delta.is_finite() {
                return None;
            }
            for j in 0..=cols {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; rows];
    for j in 1..=cols {
        if matched_row[j] != 0 {
            row_to_col[matched_row[j] - 1] = j - 1;
        }
    }
    Some(Solution {
        row_to_col,
        row: u[1..].to_vec(),
        col: v[1..].to_vec(),
    })
}
