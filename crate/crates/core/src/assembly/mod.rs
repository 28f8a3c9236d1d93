//! Discretizations that turn a case into a [`SparseSystem`](crate::linalg::SparseSystem).

pub mod aligned;
pub mod general;
mod stencil;

pub use aligned::{
    assemble_ap_aligned, assemble_naive_aligned, solve_aligned_limit, AlignedCoeffs, Axis,
};
pub use general::{assemble_ap_general, assemble_naive_general, build_integral_row, IntegralRow};
pub use stencil::Stencil;

use crate::linalg::{CsrMatrix, SparseSystem};

/// Row-by-row accumulator for a square system.
pub(crate) struct SystemBuilder {
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
}

impl SystemBuilder {
    pub(crate) fn new(n: usize, nnz_hint: usize) -> Self {
        Self {
            n,
            triplets: Vec::with_capacity(nnz_hint),
            rhs: vec![0.0; n],
        }
    }

    pub(crate) fn set_row(&mut self, row: usize, st: &Stencil, rhs: f64) {
        for &(c, v) in st.entries() {
            self.triplets.push((row, c, v));
        }
        self.rhs[row] = rhs;
    }

    pub(crate) fn identity_row(&mut self, row: usize, rhs: f64) {
        self.triplets.push((row, row, 1.0));
        self.rhs[row] = rhs;
    }

    pub(crate) fn finish(self) -> crate::error::Result<SparseSystem> {
        SparseSystem::new(CsrMatrix::from_triplets(self.n, self.triplets)?, self.rhs)
    }
}
