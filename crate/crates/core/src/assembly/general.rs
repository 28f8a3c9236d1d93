//! Nine-point scheme for arbitrary field directions.
//!
//! Interior rows discretize `-div(A grad u) = f` in flux form. Inflow rows are
//! the local condition `n . A grad u = phi`. In the AP system each outflow row
//! is replaced by the weighted integral of the equation along the field line
//! ending at that node:
//!
//! `[alpha E r (b_perp . grad u)] - sum w E div(A_perp grad u) ds = sum w E f ds + [E phi / (n . b)]`
//!
//! where `r = (n . b_perp) / (n . b)`, brackets are the difference between the
//! outflow and inflow ends, and `w` are trapezoidal weights.

use rayon::prelude::*;

use crate::anisotropy::{AnisotropyField, Mat2, ScalarFn};
use crate::error::Result;
use crate::fieldline::{trace_all, FieldLine, TraceOptions};
use crate::grid::Grid;
use crate::linalg::SparseSystem;

use super::stencil::{div_flux, dx, dy};
use super::{Stencil, SystemBuilder};

/// A finished outflow row before insertion into the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralRow {
    /// Node `(I, k)`.
    pub row: usize,
    /// Sorted, duplicate-free coefficients.
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

fn tensor_a(field: &AnisotropyField) -> impl Fn(f64, f64) -> Result<Mat2> + '_ {
    move |x, y| field.eval_a(x, y)
}

fn tensor_aperp(field: &AnisotropyField) -> impl Fn(f64, f64) -> Result<Mat2> + '_ {
    move |x, y| field.eval_aperp(x, y)
}

/// `b_perp . grad u` from nodal derivative stencils; `(x, y)` fixes the field.
fn perp_derivative(field: &AnisotropyField, x: f64, y: f64, ddx: &Stencil, ddy: &Stencil) -> Stencil {
    let [px, py] = field.b_perp(x, y);
    let mut s = Stencil::new();
    s.add_scaled(ddx, px);
    s.add_scaled(ddy, py);
    s
}

/// Interpolate a nodal stencil family between rows `k_i` and `k_i + 1`.
fn interpolated(
    grid: &Grid,
    line: &FieldLine,
    i: usize,
    mut at: impl FnMut(usize, usize) -> Result<Stencil>,
) -> Result<Stencil> {
    let (lo, hi) = line.interp_weights(grid, i);
    let k = line.cell_row[i];
    let mut s = Stencil::new();
    s.add_scaled(&at(i, k)?, lo);
    if hi != 0.0 {
        s.add_scaled(&at(i, k + 1)?, hi);
    }
    Ok(s)
}

/// Discrete integral of the equation along `line`, which must carry `E`.
pub fn build_integral_row(
    line: &FieldLine,
    field: &AnisotropyField,
    grid: &Grid,
    f: &ScalarFn,
    phi: Option<&ScalarFn>,
) -> Result<IntegralRow> {
    let ni = grid.ni();
    let hx = grid.hx();
    let aperp = tensor_aperp(field);
    let mut s = Stencil::new();
    let mut rhs = 0.0;

    for i in 0..=ni {
        let w = if i == 0 || i == ni { 0.5 } else { 1.0 };
        let ds = w * line.e[i] * hx / line.cos_theta[i];
        let theta_u = interpolated(grid, line, i, |ii, jj| div_flux(grid, &aperp, ii, jj))?;
        s.add_scaled(&theta_u, -ds);
        let (lo, hi) = line.interp_weights(grid, i);
        let k = line.cell_row[i];
        let mut fi = lo * f(grid.x(i), grid.y(k));
        if hi != 0.0 {
            fi += hi * f(grid.x(i), grid.y(k + 1));
        }
        rhs += ds * fi;
    }

    // Outflow end: the node itself, n = (1, 0).
    let (xo, yo) = (grid.x(ni), line.ybar[ni]);
    let k = line.k;
    let bo = field.b(xo, yo);
    let r_out = -bo[1] / bo[0];
    let alpha_out = field.alpha(xo, yo);
    let d_out = perp_derivative(field, xo, yo, &dx(grid, ni, k), &dy(grid, ni, k));
    s.add_scaled(&d_out, alpha_out * line.e[ni] * r_out);

    // Inflow end: interpolated derivatives at (0, ybar_0), n = (-1, 0).
    let (xi, yi) = (0.0, line.ybar[0]);
    let bi = field.b(xi, yi);
    let r_in = -bi[1] / bi[0];
    let alpha_in = field.alpha(xi, yi);
    let ddx = interpolated(grid, line, 0, |ii, jj| Ok(dx(grid, ii, jj)))?;
    let ddy = interpolated(grid, line, 0, |ii, jj| Ok(dy(grid, ii, jj)))?;
    let d_in = perp_derivative(field, xi, yi, &ddx, &ddy);
    s.add_scaled(&d_in, -alpha_in * line.e[0] * r_in);

    if let Some(g) = phi {
        rhs += line.e[ni] * g(xo, yo) / bo[0] + line.e[0] * g(xi, yi) / bi[0];
    }

    Ok(IntegralRow {
        row: grid.idx(ni, k),
        coeffs: s.compressed(),
        rhs,
    })
}

/// `n . A grad u` at a Neumann node with one-sided normal derivative.
fn local_neumann(field: &AnisotropyField, grid: &Grid, i: usize, j: usize) -> Result<Stencil> {
    let (x, y) = grid.node(i, j);
    let a = field.eval_a(x, y)?;
    let sign = if i == 0 { -1.0 } else { 1.0 };
    let mut s = Stencil::new();
    s.add_scaled(&dx(grid, i, j), sign * a[0][0]);
    s.add_scaled(&dy(grid, i, j), sign * a[0][1]);
    Ok(s)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Outflow {
    Integral,
    Local,
}

fn assemble(
    grid: &Grid,
    field: &AnisotropyField,
    f: &ScalarFn,
    phi: Option<&ScalarFn>,
    opts: &TraceOptions,
    outflow: Outflow,
) -> Result<SparseSystem> {
    let (ni, nj) = (grid.ni(), grid.nj());
    let integral_rows = match outflow {
        Outflow::Integral => {
            let lines = trace_all(field, grid, opts)?;
            lines
                .par_iter()
                .map(|l| build_integral_row(l, field, grid, f, phi))
                .collect::<Result<Vec<_>>>()?
        }
        Outflow::Local => Vec::new(),
    };

    let a = tensor_a(field);
    let flux = |i: usize, j: usize| {
        let (x, y) = grid.node(i, j);
        phi.map_or(0.0, |g| g(x, y))
    };
    let mut sys = SystemBuilder::new(grid.n_nodes(), 9 * grid.n_nodes() + integral_rows.len() * 8 * ni);
    for j in 0..=nj {
        for i in 0..=ni {
            let row = grid.idx(i, j);
            if j == 0 || j == nj {
                sys.identity_row(row, 0.0);
            } else if i == 0 || (i == ni && outflow == Outflow::Local) {
                sys.set_row(row, &local_neumann(field, grid, i, j)?, flux(i, j));
            } else if i < ni {
                let (x, y) = grid.node(i, j);
                sys.set_row(row, &div_flux(grid, &a, i, j)?.scaled(-1.0), f(x, y));
            }
        }
    }
    for r in integral_rows {
        let mut s = Stencil::new();
        for (c, v) in r.coeffs {
            s.push(c, v);
        }
        sys.set_row(r.row, &s, r.rhs);
    }
    sys.finish()
}

/// AP nine-point system with one field-line integral row per outflow node.
pub fn assemble_ap_general(
    grid: &Grid,
    field: &AnisotropyField,
    f: &ScalarFn,
    phi: Option<&ScalarFn>,
    opts: &TraceOptions,
) -> Result<SparseSystem> {
    assemble(grid, field, f, phi, opts, Outflow::Integral)
}

/// Baseline nine-point system with local Neumann rows on both ends.
pub fn assemble_naive_general(
    grid: &Grid,
    field: &AnisotropyField,
    f: &ScalarFn,
    phi: Option<&ScalarFn>,
) -> Result<SparseSystem> {
    assemble(grid, field, f, phi, &TraceOptions::default(), Outflow::Local)
}
