//! Sparse Cholesky backend for Green's function columns.
//!
//! The crack operator is symmetric positive definite on the truncated ball, so
//! one factorization serves every column at a given radius. The factorization
//! is cached keyed on the operator size; repeated solves (symmetry checks, the
//! second-difference diagnostic) then cost a pair of triangular sweeps each.

use faer::prelude::*;
use faer::sparse::SparseColMat;

use antiplane::greens::{CrackOperator, CrackSolveBackend};
use antiplane::{Error, Result, ScalarField};

pub struct FaerBackend {
    cached: Option<Cached>,
}

struct Cached {
    n: usize,
    llt: faer::sparse::linalg::solvers::Cholesky<usize, f64>,
}

impl FaerBackend {
    pub fn new() -> Self {
        FaerBackend { cached: None }
    }

    fn factorize(&mut self, op: &CrackOperator) -> Result<&Cached> {
        let n = op.domain().len();
        let stale = self.cached.as_ref().map(|c| c.n) != Some(n);
        if stale {
            let mut triplets = Vec::new();
            op.for_each_triplet(|i, j, v| triplets.push((i, j, v)));
            let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
                .map_err(|_| Error::SolveFailed("sparse assembly of the crack operator"))?;
            let llt = mat
                .sp_cholesky(faer::Side::Lower)
                .map_err(|_| Error::SolveFailed("sparse Cholesky factorization"))?;
            self.cached = Some(Cached { n, llt });
        }
        Ok(self.cached.as_ref().unwrap())
    }
}

impl Default for FaerBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl CrackSolveBackend for FaerBackend {
    fn solve(&mut self, op: &CrackOperator, rhs: &[f64]) -> Result<ScalarField> {
        let cached = self.factorize(op)?;
        let b = Mat::from_fn(cached.n, 1, |i, _| rhs[i]);
        let x = cached.llt.solve(&b);
        Ok((0..cached.n).map(|i| x[(i, 0)]).collect())
    }
}
