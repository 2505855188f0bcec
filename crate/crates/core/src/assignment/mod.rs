//! Minimum-cost rectangular assignment and ranked K-best enumeration.
//!
//! Problems are `n x m` cost matrices with `n <= m`; a solution assigns
//! every row to a distinct column. `f64::INFINITY` marks forbidden pairs.
//! Costs in this crate are negative log likelihoods, so totals add across
//! rows and ranking by cost equals ranking by association likelihood.
//!
//! Ties in total cost are broken by lexicographic order of the
//! `row -> column` vector, which makes ranked lists reproducible across
//! runs and platforms. [`hungarian`] therefore returns the
//! lexicographically smallest optimum, and [`murty_kbest`](murty::murty_kbest)
//! preserves that order globally.

pub mod murty;

pub use murty::murty_kbest;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A row-to-column assignment and its total cost (summed in row order).
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub row_to_col: Vec<usize>,
    pub cost: f64,
}

/// Total cost of `rows -> cols`, always summed in row order so equal
/// assignments produce bitwise-equal totals.
pub(crate) fn assignment_cost(cost: &DMatrix<f64>, row_to_col: &[usize]) -> f64 {
    row_to_col.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum()
}

/// Solve the rectangular assignment problem to optimality.
///
/// Among equal-cost optima the lexicographically smallest assignment vector
/// is returned. Errors: more rows than columns, or no feasible assignment
/// (every completion hits a forbidden entry).
pub fn hungarian(cost: &DMatrix<f64>) -> Result<Assignment> {
    let (n, m) = cost.shape();
    if n > m {
        return Err(Error::InvalidParameter(format!(
            "assignment needs rows <= cols, got {n} x {m}"
        )));
    }
    if n == 0 {
        return Ok(Assignment { row_to_col: Vec::new(), cost: 0.0 });
    }

    // Shift to nonnegative entries. A constant per cell moves every total
    // by n * shift, so ranking and ties are untouched, while the duals of
    // the shifted problem satisfy v <= 0. That sign is what makes "zero
    // reduced cost" a sound tie filter below.
    let shift = cost
        .iter()
        .cloned()
        .filter(|c| c.is_finite())
        .fold(f64::INFINITY, f64::min)
        .min(0.0);
    let shifted = if shift < 0.0 { cost.map(|c| c - shift) } else { cost.clone() };

    let (mut row_to_col, u, v) = solve_shifted(&shifted)?;

    // Lexicographic refinement: walk rows in order and try to move each to
    // a smaller column without losing optimality. Only zero-reduced-cost
    // entries can appear in an optimal assignment, so candidates are rare
    // unless the instance genuinely has cost ties.
    let scale = shifted.iter().cloned().filter(|c| c.is_finite()).fold(1.0, f64::max);
    let eps = 1e-12 * scale;
    let best_total = assignment_cost(cost, &row_to_col);
    let mut fixed_cols = vec![false; m];
    for i in 0..n {
        let current = row_to_col[i];
        for j in 0..current {
            if fixed_cols[j] || !cost[(i, j)].is_finite() {
                continue;
            }
            if shifted[(i, j)] - u[i] - v[j] > eps {
                continue;
            }
            if let Some(candidate) = complete_with_prefix(&shifted, &row_to_col[..i], i, j) {
                if assignment_cost(cost, &candidate) == best_total {
                    row_to_col = candidate;
                    break;
                }
            }
        }
        fixed_cols[row_to_col[i]] = true;
    }

    Ok(Assignment { cost: assignment_cost(cost, &row_to_col), row_to_col })
}

/// Shortest-augmenting-path solve with row/column potentials.
/// Requires nonnegative entries. Returns the assignment and the duals,
/// which satisfy `cost[i][j] - u[i] - v[j] >= 0` with equality on matched
/// pairs, and `v <= 0`.
fn solve_shifted(cost: &DMatrix<f64>) -> Result<(Vec<usize>, Vec<f64>, Vec<f64>)> {
    let (n, m) = cost.shape();
    // 1-indexed working arrays; column 0 is the virtual source.
    let mut u = vec![0.0_f64; n + 1];
    let mut v = vec![0.0_f64; m + 1];
    let mut matched_row = vec![0_usize; m + 1];
    let mut way = vec![0_usize; m + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0_usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0_usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if !delta.is_finite() {
                return Err(Error::InfeasibleAssignment);
            }
            for j in 0..=m {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // Augment along the alternating path back to the source.
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![usize::MAX; n];
    for j in 1..=m {
        if matched_row[j] != 0 {
            row_to_col[matched_row[j] - 1] = j - 1;
        }
    }
    debug_assert!(row_to_col.iter().all(|&c| c != usize::MAX));
    Ok((row_to_col, u[1..].to_vec(), v[1..].to_vec()))
}

/// Force rows `0..i` to `prefix`, row `i` to column `j`, and solve the
/// remaining rows over the remaining columns. `None` when infeasible.
fn complete_with_prefix(
    cost: &DMatrix<f64>,
    prefix: &[usize],
    row: usize,
    col: usize,
) -> Option<Vec<usize>> {
    let (n, m) = cost.shape();
    let mut taken = vec![false; m];
    for &c in prefix {
        taken[c] = true;
    }
    if taken[col] {
        return None;
    }
    taken[col] = true;

    let rest_rows: Vec<usize> = (row + 1..n).collect();
    let free_cols: Vec<usize> = (0..m).filter(|&c| !taken[c]).collect();
    if rest_rows.len() > free_cols.len() {
        return None;
    }
    let sub = DMatrix::from_fn(rest_rows.len(), free_cols.len(), |r, c| {
        cost[(rest_rows[r], free_cols[c])]
    });
    let (sub_assign, _, _) = solve_shifted(&sub).ok()?;

    let mut full = Vec::with_capacity(n);
    full.extend_from_slice(prefix);
    full.push(col);
    for &sc in &sub_assign {
        full.push(free_cols[sc]);
    }
    Some(full)
}

/// Association-problem cost layout: measurement columns first, then one
/// "missed detection" pseudo-column per track that only its own row may
/// use.
#[derive(Clone, Debug)]
pub struct CostMatrix {
    matrix: DMatrix<f64>,
    n_meas: usize,
}

impl CostMatrix {
    /// `detection[(i, j)]` is the cost of pairing track `i` with measurement
    /// `j`; `miss[i]` the cost of track `i` going undetected.
    pub fn new(detection: DMatrix<f64>, miss: &[f64]) -> Self {
        let (n, n_meas) = detection.shape();
        assert_eq!(miss.len(), n, "one miss cost per track");
        let mut matrix = DMatrix::from_element(n, n_meas + n, f64::INFINITY);
        matrix.view_mut((0, 0), (n, n_meas)).copy_from(&detection);
        for i in 0..n {
            matrix[(i, n_meas + i)] = miss[i];
        }
        Self { matrix, n_meas }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_measurements(&self) -> usize {
        self.n_meas
    }

    /// Translate a solver column vector into association indices:
    /// 0 for missed, `j + 1` for measurement `j`.
    pub fn association(&self, row_to_col: &[usize]) -> Vec<usize> {
        row_to_col
            .iter()
            .map(|&c| if c < self.n_meas { c + 1 } else { 0 })
            .collect()
    }
}
