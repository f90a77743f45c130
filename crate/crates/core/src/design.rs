//! Design matrix construction: turns a network and a treatment vector into
//! the 0/1 regression matrix whose product with the parameter vector equals
//! the per-node expected rewards.
//!
//! Column order is fixed and shared with every consumer that indexes into
//! the parameter vector by position: the direct-effect block (`k` columns,
//! one per group) first, then the indirect-effect block (`cutoff + 1`
//! columns, one per pooled treated-neighbor count).

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::netgen::{treated_neighbor_counts, Graph};
use crate::reward::Theta;
use crate::scalar::Scalar;

/// `n x (k + cutoff + 1)` 0/1 matrix. Every row carries exactly one 1 in
/// the indirect block and, iff the node is treated, one 1 in its group's
/// column of the direct block.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<S> {
    k: usize,
    cutoff: usize,
    m: Matrix<S>,
}

impl<S: Scalar> DesignMatrix<S> {
    pub fn n_rows(&self) -> usize {
        self.m.rows()
    }

    /// Total column count `k + cutoff + 1`.
    pub fn dim(&self) -> usize {
        self.m.cols()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn row(&self, i: usize) -> &[S] {
        self.m.row(i)
    }

    /// The raw matrix, for consumers that feed generic regression rows.
    pub fn as_matrix(&self) -> &Matrix<S> {
        &self.m
    }

    /// `X theta`.
    pub fn mat_vec(&self, theta: &[S]) -> Vec<S> {
        self.m.mat_vec(theta)
    }

    /// Column sums; see [`collapse_to_sum`].
    pub fn col_sums(&self) -> Vec<S> {
        let ones = vec![S::one(); self.n_rows()];
        self.m.t_mat_vec(&ones)
    }
}

/// Builds the design matrix for one round.
///
/// Direct block: `diag(z)` times the group one-hot matrix. Indirect block:
/// row `i` is one-hot at `min(d1_i, cutoff)`.
pub fn build_design<S: Scalar>(
    g: &Graph,
    z: &[bool],
    k: usize,
    cutoff: usize,
) -> Result<DesignMatrix<S>> {
    if let Some(&bad) = g.groups().iter().find(|&&label| label >= k) {
        return Err(Error::Contract(format!(
            "group label {bad} out of range for k = {k}"
        )));
    }
    let counts = treated_neighbor_counts(g, z)?;
    let d = k + cutoff + 1;
    let mut m = Matrix::zeros(g.n(), d);
    for i in 0..g.n() {
        let row = m.row_mut(i);
        if z[i] {
            row[g.group_of(i)] = S::one();
        }
        row[k + counts[i].min(cutoff)] = S::one();
    }
    Ok(DesignMatrix { k, cutoff, m })
}

/// Column sums of the design matrix: the single feature vector of the
/// sum-collapsed linear-bandit formulation, satisfying
/// `<collapse(X), theta> = sum_i expected reward_i`.
pub fn collapse_to_sum<S: Scalar>(x: &DesignMatrix<S>) -> Vec<S> {
    x.col_sums()
}

/// Convenience: `1^T (X theta)` evaluated without materializing products.
pub fn total_predicted<S: Scalar>(x: &DesignMatrix<S>, theta: &Theta<S>) -> S {
    x.mat_vec(&theta.to_vec()).into_iter().sum()
}
