//! Comparison of an estimated measure with a reference by minimum-cost assignment.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::scatter::DiscreteMeasure;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MatchReport {
    /// `(truth index, estimate index)`, sorted by truth index. Injective both ways.
    pub pairing: Vec<(usize, usize)>,
    /// Root mean square position error over matched pairs; `None` when nothing matched.
    pub position_rmse: Option<f64>,
    pub amplitude_rmse: Option<f64>,
    pub unmatched_truth: usize,
    pub unmatched_estimate: usize,
    /// `‖Φ μ̂ − y‖ / ‖y‖`, filled in by callers that have the data.
    pub relative_residual: Option<f64>,
}

impl MatchReport {
    pub fn with_residual(mut self, value: f64) -> Self {
        self.relative_residual = Some(value);
        self
    }
}

/// Hungarian method on a `rows × cols` cost matrix with `rows ≤ cols`. Returns the column
/// assigned to each row.
fn assign(cost: &[Vec<f64>], cols: usize) -> Vec<usize> {
    let rows = cost.len();
    debug_assert!(rows <= cols);
    // Potentials and the matching use 1-based indices with column 0 as a sentinel.
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for row in 1..=rows {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            out[owner[j] - 1] = j - 1;
        }
    }
    out
}

/// Matches atoms of `estimate` to atoms of `truth` at distance at most `radius`.
///
/// Pairs beyond the radius cost more than any full set of admissible pairs, so the
/// assignment first maximizes the number of admissible matches and then minimizes the total
/// distance among them. Out-of-radius pairs are dropped afterwards.
pub fn match_measures(truth: &DiscreteMeasure, estimate: &DiscreteMeasure, radius: f64) -> Result<MatchReport> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid("matching radius must be positive and finite"));
    }
    if truth.dim != estimate.dim {
        return Err(Error::invalid("measures live in different dimensions"));
    }
    let (t, e) = (&truth.atoms, &estimate.atoms);
    let penalty = radius * (t.len() + e.len() + 1) as f64;
    let transpose = t.len() > e.len();
    let (rows, cols) = if transpose { (e.len(), t.len()) } else { (t.len(), e.len()) };
    let cost: Vec<Vec<f64>> = (0..rows)
        .map(|i| {
            (0..cols)
                .map(|j| {
                    let (ti, ej) = if transpose { (j, i) } else { (i, j) };
                    let d = t[ti].location.dist(&e[ej].location);
                    if d <= radius {
                        d
                    } else {
                        penalty
                    }
                })
                .collect()
        })
        .collect();
    let mut pairing: Vec<(usize, usize)> = assign(&cost, cols)
        .into_iter()
        .enumerate()
        .map(|(i, j)| if transpose { (j, i) } else { (i, j) })
        .filter(|&(ti, ej)| t[ti].location.dist(&e[ej].location) <= radius)
        .collect();
    pairing.sort_unstable();

    let n = pairing.len();
    let rmse = |sq: f64| if n == 0 { None } else { Some((sq / n as f64).sqrt()) };
    let pos_sq: f64 = pairing.iter().map(|&(i, j)| t[i].location.dist(&e[j].location).powi(2)).sum();
    let amp_sq: f64 = pairing.iter().map(|&(i, j)| (t[i].amplitude - e[j].amplitude).norm_sqr()).sum();
    Ok(MatchReport {
        position_rmse: rmse(pos_sq),
        amplitude_rmse: rmse(amp_sq),
        unmatched_truth: t.len() - n,
        unmatched_estimate: e.len() - n,
        relative_residual: None,
        pairing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_finds_the_cheaper_cross_pairing() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        assert_eq!(assign(&cost, 3), vec![1, 0, 2]);
        let wide = vec![vec![9.0, 1.0, 8.0, 0.5]];
        assert_eq!(assign(&wide, 4), vec![3]);
    }
}
