//! Uniform Cartesian grid on the rectangle `[0, a] x [0, b]`.
//!
//! Nodes are `(i * hx, j * hy)` for `0 <= i <= I`, `0 <= j <= J`, numbered
//! row-major. The left edge is the inflow Neumann boundary, the right edge the
//! outflow Neumann boundary, and the bottom and top edges (corners included)
//! carry Dirichlet data.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRole {
    Interior,
    NeumannIn,
    NeumannOut,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    ni: usize,
    nj: usize,
    hx: f64,
    hy: f64,
}

impl Grid {
    /// `ni` and `nj` are cell counts; both must be at least 2.
    pub fn new(a: f64, b: f64, ni: usize, nj: usize) -> Result<Self> {
        if ni < 2 || nj < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells per direction, got {ni}x{nj}"
            )));
        }
        if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "domain extents must be positive, got {a} x {b}"
            )));
        }
        Ok(Self {
            a,
            b,
            ni,
            nj,
            hx: a / ni as f64,
            hy: b / nj as f64,
        })
    }

    pub fn unit_square(ni: usize, nj: usize) -> Result<Self> {
        Self::new(1.0, 1.0, ni, nj)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Cell count in x.
    pub fn ni(&self) -> usize {
        self.ni
    }

    /// Cell count in y.
    pub fn nj(&self) -> usize {
        self.nj
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn n_nodes(&self) -> usize {
        (self.ni + 1) * (self.nj + 1)
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x(i), self.y(j))
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i <= self.ni && j <= self.nj
    }

    pub fn lin_index(&self, i: usize, j: usize) -> Result<usize> {
        if !self.contains(i, j) {
            return Err(Error::IndexOutOfRange {
                i,
                j,
                ni: self.ni,
                nj: self.nj,
            });
        }
        Ok(self.idx(i, j))
    }

    /// Unchecked row-major index; callers guarantee `(i, j)` is on the grid.
    #[inline]
    pub(crate) fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(self.contains(i, j));
        j * (self.ni + 1) + i
    }

    /// Inverse of [`Grid::lin_index`].
    pub fn node_of(&self, index: usize) -> Result<(usize, usize)> {
        if index >= self.n_nodes() {
            return Err(Error::ShapeMismatch {
                expected: self.n_nodes(),
                got: index,
            });
        }
        Ok((index % (self.ni + 1), index / (self.ni + 1)))
    }

    pub fn classify(&self, i: usize, j: usize) -> NodeRole {
        if j == 0 || j == self.nj {
            NodeRole::Dirichlet
        } else if i == 0 {
            NodeRole::NeumannIn
        } else if i == self.ni {
            NodeRole::NeumannOut
        } else {
            NodeRole::Interior
        }
    }

    /// The same grid with the roles of x and y exchanged.
    pub fn transposed(&self) -> Grid {
        Grid {
            a: self.b,
            b: self.a,
            ni: self.nj,
            nj: self.ni,
            hx: self.hy,
            hy: self.hx,
        }
    }

    /// Sample `f` at every node, row-major.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_nodes());
        for j in 0..=self.nj {
            for i in 0..=self.ni {
                out.push(f(self.x(i), self.y(j)));
            }
        }
        out
    }
}
