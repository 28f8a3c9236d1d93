//! Linear combinations of nodal unknowns and the finite-difference operators
//! shared by the 9-point assembler.

use crate::anisotropy::Mat2;
use crate::error::Result;
use crate::grid::Grid;

/// Sparse list of `(unknown, coefficient)`; duplicates are allowed and are
/// summed when the row is compressed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stencil {
    entries: Vec<(usize, f64)>,
}

impl Stencil {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn push(&mut self, idx: usize, c: f64) {
        if c != 0.0 {
            self.entries.push((idx, c));
        }
    }

    pub fn add_scaled(&mut self, other: &Stencil, s: f64) {
        if s != 0.0 {
            for &(i, v) in &other.entries {
                self.entries.push((i, s * v));
            }
        }
    }

    pub fn scaled(mut self, s: f64) -> Stencil {
        for e in &mut self.entries {
            e.1 *= s;
        }
        self
    }

    /// Duplicates merged, sorted by unknown.
    pub fn compressed(&self) -> Vec<(usize, f64)> {
        let mut e = self.entries.clone();
        e.sort_by_key(|p| p.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(e.len());
        for (i, v) in e {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => out.push((i, v)),
            }
        }
        out
    }

    pub fn apply(&self, u: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * u[i]).sum()
    }
}

/// Three-point derivative along one axis: centered inside, one-sided
/// second order at the two ends. Returns `(offset, weight)` pairs relative
/// to index `k` on `0..=n`, already divided by `h`.
fn three_point(k: usize, n: usize, h: f64) -> [(isize, f64); 3] {
    let r = 1.0 / (2.0 * h);
    if k == 0 {
        [(0, -3.0 * r), (1, 4.0 * r), (2, -r)]
    } else if k == n {
        [(0, 3.0 * r), (-1, -4.0 * r), (-2, r)]
    } else {
        [(-1, -r), (1, r), (0, 0.0)]
    }
}

fn shift(k: usize, o: isize) -> usize {
    (k as isize + o) as usize
}

pub(crate) fn dx(grid: &Grid, i: usize, j: usize) -> Stencil {
    let mut s = Stencil::new();
    for (o, w) in three_point(i, grid.ni(), grid.hx()) {
        s.push(grid.idx(shift(i, o), j), w);
    }
    s
}

pub(crate) fn dy(grid: &Grid, i: usize, j: usize) -> Stencil {
    let mut s = Stencil::new();
    for (o, w) in three_point(j, grid.nj(), grid.hy()) {
        s.push(grid.idx(i, shift(j, o)), w);
    }
    s
}

/// `T(x, y) grad u` at a node, component `c`.
fn nodal_flux(
    grid: &Grid,
    t: &dyn Fn(f64, f64) -> Result<Mat2>,
    i: usize,
    j: usize,
    c: usize,
) -> Result<Stencil> {
    let (x, y) = grid.node(i, j);
    let m = t(x, y)?;
    let mut s = Stencil::new();
    s.add_scaled(&dx(grid, i, j), m[c][0]);
    s.add_scaled(&dy(grid, i, j), m[c][1]);
    Ok(s)
}

/// Discrete `div(T grad u)` at node `(i, j)`.
///
/// Along an axis where the node has neighbours on both sides this is the
/// flux difference over half points, with `T` evaluated at the half point and
/// the transverse derivative averaged from the two adjacent nodes (the
/// classical 9-point form). On a boundary line the one-sided 3-point
/// difference of nodal fluxes is used instead.
pub(crate) fn div_flux(
    grid: &Grid,
    t: &dyn Fn(f64, f64) -> Result<Mat2>,
    i: usize,
    j: usize,
) -> Result<Stencil> {
    let (hx, hy) = (grid.hx(), grid.hy());
    let (x, y) = grid.node(i, j);
    let here = grid.idx(i, j);
    let mut s = Stencil::new();

    if i > 0 && i < grid.ni() {
        let dy_here = dy(grid, i, j);
        for side in [-1isize, 1] {
            let sf = side as f64;
            let ii = shift(i, side);
            let m = t(x + 0.5 * sf * hx, y)?;
            // side * Q / hx with Q = m00 du/dx + m01 du/dy at the half point
            let a = m[0][0] / (hx * hx);
            s.push(grid.idx(ii, j), a);
            s.push(here, -a);
            let c = sf * 0.5 * m[0][1] / hx;
            s.add_scaled(&dy_here, c);
            s.add_scaled(&dy(grid, ii, j), c);
        }
    } else {
        for (o, w) in three_point(i, grid.ni(), hx) {
            if w != 0.0 {
                s.add_scaled(&nodal_flux(grid, t, shift(i, o), j, 0)?, w);
            }
        }
    }

    if j > 0 && j < grid.nj() {
        let dx_here = dx(grid, i, j);
        for side in [-1isize, 1] {
            let sf = side as f64;
            let jj = shift(j, side);
            let m = t(x, y + 0.5 * sf * hy)?;
            let a = m[1][1] / (hy * hy);
            s.push(grid.idx(i, jj), a);
            s.push(here, -a);
            let c = sf * 0.5 * m[1][0] / hy;
            s.add_scaled(&dx_here, c);
            s.add_scaled(&dx(grid, i, jj), c);
        }
    } else {
        for (o, w) in three_point(j, grid.nj(), hy) {
            if w != 0.0 {
                s.add_scaled(&nodal_flux(grid, t, i, shift(j, o), 1)?, w);
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::rotated_diag;

    fn sample(g: &Grid, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        g.sample(f)
    }

    #[test]
    fn derivatives_exact_on_quadratics() {
        let g = Grid::new(2.0, 1.0, 6, 5).unwrap();
        let u = sample(&g, |x, y| 1.0 + 2.0 * x - y + x * x + 3.0 * x * y - 2.0 * y * y);
        for j in 0..=5 {
            for i in 0..=6 {
                let (x, y) = g.node(i, j);
                assert!((dx(&g, i, j).apply(&u) - (2.0 + 2.0 * x + 3.0 * y)).abs() < 1e-11);
                assert!((dy(&g, i, j).apply(&u) - (-1.0 + 3.0 * x - 4.0 * y)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn divergence_exact_for_constant_tensor_and_quadratic() {
        let g = Grid::unit_square(5, 7).unwrap();
        let m = rotated_diag(0.6, 3.0, 0.5);
        let t = move |_: f64, _: f64| Ok(m);
        let u = sample(&g, |x, y| x * x + 2.0 * x * y - 0.5 * y * y + x);
        // div(M grad u) with grad u = (2x + 2y + 1, 2x - y)
        let want = m[0][0] * 2.0 + m[0][1] * 2.0 + m[1][0] * 2.0 - m[1][1];
        for j in 0..=7 {
            for i in 0..=5 {
                let got = div_flux(&g, &t, i, j).unwrap().apply(&u);
                assert!((got - want).abs() < 1e-9, "({i},{j}) {got} {want}");
            }
        }
    }

    #[test]
    fn interior_cross_terms_match_four_point_average() {
        let g = Grid::unit_square(4, 4).unwrap();
        let m = [[0.0, 1.0], [0.0, 0.0]];
        let t = move |_: f64, _: f64| Ok(m);
        let st = div_flux(&g, &t, 2, 2).unwrap().compressed();
        // d/dx of du/dy only: corners carry +-1/(4 hx hy)
        let c = 1.0 / (4.0 * 0.25 * 0.25);
        let w = |i, j| st.iter().find(|e| e.0 == g.idx(i, j)).map_or(0.0, |e| e.1);
        assert!((w(3, 3) - c).abs() < 1e-12);
        assert!((w(1, 1) - c).abs() < 1e-12);
        assert!((w(3, 1) + c).abs() < 1e-12);
        assert!((w(1, 3) + c).abs() < 1e-12);
        assert!(w(2, 2).abs() < 1e-12);
    }

    #[test]
    fn compressed_merges() {
        let mut s = Stencil::new();
        s.push(3, 1.0);
        s.push(1, 2.0);
        s.push(3, -0.5);
        s.push(2, 0.0);
        assert_eq!(s.compressed(), vec![(1, 2.0), (3, 0.5)]);
    }
}
