//! Field-line tracing and the integrating factor along each line.
//!
//! Line `l_k` passes through the outflow node `(x_I, y_k)`. It is integrated
//! backwards in its arc-length parameter (towards decreasing `x`) with the
//! explicit midpoint rule, and its crossings with the vertical grid lines
//! `x = x_i` become the quadrature points of the integral boundary row.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::anisotropy::AnisotropyField;
use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    pub substeps_per_cell: usize,
    pub theta_min: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            substeps_per_cell: 20,
            theta_min: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldLine {
    /// Row of the outflow node the line passes through.
    pub k: usize,
    /// `ybar[i]` is the y-coordinate where the line crosses `x = x_i`.
    pub ybar: Vec<f64>,
    /// `cell_row[i]` is the grid row `k_i` with `ybar[i]` in `[y_{k_i}, y_{k_i} + hy)`.
    pub cell_row: Vec<usize>,
    pub cos_theta: Vec<f64>,
    /// Integrating factor at each crossing; empty until [`compute_e`] runs.
    pub e: Vec<f64>,
}

impl FieldLine {
    /// Weights of rows `k_i` and `k_i + 1` in the linear interpolation to `ybar[i]`.
    pub fn interp_weights(&self, grid: &Grid, i: usize) -> (f64, f64) {
        let hy = grid.hy();
        let h_d = grid.y(self.cell_row[i]) + hy - self.ybar[i];
        let lower = (h_d / hy).clamp(0.0, 1.0);
        (lower, 1.0 - lower)
    }

    /// Text rows `i x ybar cell_row cos_theta E`.
    pub fn dump(&self, grid: &Grid) -> String {
        let mut out = String::from("i x ybar cell_row cos_theta E\n");
        for i in 0..self.ybar.len() {
            let e = self.e.get(i).copied().unwrap_or(f64::NAN);
            let _ = writeln!(
                out,
                "{} {:.16e} {:.16e} {} {:.16e} {:.16e}",
                i,
                grid.x(i),
                self.ybar[i],
                self.cell_row[i],
                self.cos_theta[i],
                e
            );
        }
        out
    }
}

/// Row `k` with `y` in `[y_k, y_k + hy)`, clamped to `0..J`. Values within
/// round-off of a grid line snap onto it.
pub fn cell_row(grid: &Grid, y: f64) -> usize {
    let hy = grid.hy();
    let s = y / hy;
    let nearest = s.round();
    let k = if (s - nearest).abs() <= 1e-10 {
        nearest
    } else {
        s.floor()
    };
    (k.max(0.0) as usize).min(grid.nj() - 1)
}

fn direction(field: &AnisotropyField, theta_min: f64, x: f64, y: f64) -> Result<(f64, f64)> {
    let (s, c) = field.theta(x, y).sin_cos();
    if c < theta_min {
        return Err(Error::NearVerticalField { x, y, cos_theta: c });
    }
    Ok((c, s))
}

/// `y` where the line through `(x, y)` meets `x = xi`, by one midpoint step
/// of `dy/dx = tan(theta)`. The step is shorter than an RK2 substep, so the
/// crossing is placed to third order locally.
fn land(field: &AnisotropyField, theta_min: f64, x: f64, y: f64, xi: f64) -> Result<f64> {
    let dx = xi - x;
    let (c1, s1) = direction(field, theta_min, x, y)?;
    let (c2, s2) = direction(field, theta_min, x + 0.5 * dx, y + 0.5 * dx * s1 / c1)?;
    Ok(y + dx * s2 / c2)
}

pub fn trace(
    field: &AnisotropyField,
    grid: &Grid,
    k: usize,
    opts: &TraceOptions,
) -> Result<FieldLine> {
    let (ni, nj) = (grid.ni(), grid.nj());
    if k == 0 || k >= nj {
        return Err(Error::IndexOutOfRange { i: ni, j: k, ni, nj });
    }
    if opts.substeps_per_cell == 0 {
        return Err(Error::Config("substeps_per_cell must be positive".into()));
    }
    let step = grid.hx().min(grid.hy()) / opts.substeps_per_cell as f64;
    let (b, tmin) = (grid.b(), opts.theta_min);

    let mut ybar = vec![0.0; ni + 1];
    ybar[ni] = grid.y(k);
    let (mut x, mut y) = (grid.x(ni), grid.y(k));
    let mut next = ni; // ybar[next..] are known
    let max_steps = ((grid.a() + grid.b()) / (step * tmin.max(1e-3))).ceil() as usize * 4 + 1000;

    for _ in 0..max_steps {
        let (c1, s1) = direction(field, tmin, x, y)?;
        let (xm, ym) = (x - 0.5 * step * c1, y - 0.5 * step * s1);
        let (c2, s2) = direction(field, tmin, xm, ym)?;
        let (xn, yn) = (x - step * c2, y - step * s2);

        while next > 0 && grid.x(next - 1) >= xn {
            let xi = grid.x(next - 1);
            let yi = land(field, tmin, x, y, xi)?;
            if !(0.0..=b).contains(&yi) {
                return Err(Error::UnsupportedGeometry { k, x: xi, y: yi });
            }
            next -= 1;
            ybar[next] = yi;
        }
        if next == 0 {
            break;
        }
        if !(0.0..=b).contains(&yn) {
            return Err(Error::UnsupportedGeometry { k, x: xn, y: yn });
        }
        x = xn;
        y = yn;
    }
    if next > 0 {
        return Err(Error::UnsupportedGeometry { k, x, y });
    }

    let mut cos_theta = Vec::with_capacity(ni + 1);
    for (i, &yi) in ybar.iter().enumerate() {
        let (c, _) = direction(field, tmin, grid.x(i), yi)?;
        cos_theta.push(c);
    }
    let cell_row = ybar.iter().map(|&yi| cell_row(grid, yi)).collect();
    Ok(FieldLine {
        k,
        ybar,
        cell_row,
        cos_theta,
        e: Vec::new(),
    })
}

/// Fill `line.e` with `exp` of the composite trapezoidal approximation of
/// `int div(b) ds` from the inflow end, using `ds = hx / cos(theta)`.
pub fn compute_e(line: &mut FieldLine, field: &AnisotropyField, grid: &Grid, theta_min: f64) -> Result<()> {
    let hx = grid.hx();
    let mut integrand = Vec::with_capacity(line.ybar.len());
    for (i, (&yi, &c)) in line.ybar.iter().zip(&line.cos_theta).enumerate() {
        if c < theta_min {
            return Err(Error::NearVerticalField {
                x: grid.x(i),
                y: yi,
                cos_theta: c,
            });
        }
        integrand.push(field.eval_div_b(grid.x(i), yi) * hx / c);
    }
    let mut e = Vec::with_capacity(integrand.len());
    let mut acc = 0.0;
    e.push(1.0);
    for w in integrand.windows(2) {
        acc += 0.5 * (w[0] + w[1]);
        e.push(acc.exp());
    }
    line.e = e;
    Ok(())
}

/// Trace and weight every line `l_1 .. l_{J-1}`, ordered by `k`.
pub fn trace_all(field: &AnisotropyField, grid: &Grid, opts: &TraceOptions) -> Result<Vec<FieldLine>> {
    (1..grid.nj())
        .into_par_iter()
        .map(|k| {
            let mut line = trace(field, grid, k, opts)?;
            compute_e(&mut line, field, grid, opts.theta_min)?;
            Ok(line)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anisotropy::{constant_fn, scalar_fn};
    use std::f64::consts::PI;

    #[test]
    fn horizontal_field_gives_flat_lines() {
        let g = Grid::unit_square(16, 16).unwrap();
        let f = AnisotropyField::uniform(0.0, 1e-6, 1.0, 1.0);
        for k in [1, 7, 15] {
            let mut line = trace(&f, &g, k, &TraceOptions::default()).unwrap();
            compute_e(&mut line, &f, &g, 1e-8).unwrap();
            assert!(line.ybar.iter().all(|&y| (y - g.y(k)).abs() < 1e-15));
            assert!(line.cell_row.iter().all(|&r| r == k));
            assert!(line.e.iter().all(|&e| e == 1.0));
            let (lo, hi) = line.interp_weights(&g, 3);
            assert!((lo - 1.0).abs() < 1e-12 && hi.abs() < 1e-12);
        }
    }

    #[test]
    fn constant_angle_gives_straight_lines() {
        let g = Grid::unit_square(8, 8).unwrap();
        let f = AnisotropyField::uniform(PI / 6.0, 1.0, 1.0, 1.0);
        let line = trace(&f, &g, 6, &TraceOptions::default()).unwrap();
        for i in 0..=8 {
            let want = 0.75 - (1.0 - g.x(i)) * (PI / 6.0).tan();
            assert!((line.ybar[i] - want).abs() < 1e-13, "{i}");
        }
        assert!((line.ybar[0] - 0.172_649_730_810_374_2).abs() < 1e-13);
        assert_eq!(line.cell_row[0], 1);
    }

    #[test]
    fn exiting_lines_are_reported() {
        let g = Grid::unit_square(8, 8).unwrap();
        let f = AnisotropyField::uniform(PI / 4.0, 1.0, 1.0, 1.0);
        let err = trace(&f, &g, 2, &TraceOptions::default()).unwrap_err();
        assert!(matches!(err, Error::UnsupportedGeometry { k: 2, .. }));
    }

    #[test]
    fn vertical_field_is_rejected() {
        let g = Grid::unit_square(8, 8).unwrap();
        let f = AnisotropyField::new(
            scalar_fn(|x, _| if x < 0.5 { PI / 2.0 } else { 0.0 }),
            constant_fn(1.0),
            constant_fn(1.0),
            1.0,
        );
        let err = trace(&f, &g, 4, &TraceOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NearVerticalField { .. }));
    }

    #[test]
    fn cell_row_convention() {
        let g = Grid::unit_square(4, 4).unwrap();
        assert_eq!(cell_row(&g, 0.0), 0);
        assert_eq!(cell_row(&g, 0.25), 1);
        assert_eq!(cell_row(&g, 0.2499), 0);
        assert_eq!(cell_row(&g, 1.0), 3);
        assert_eq!(cell_row(&g, 0.3 * 0.25 * 10.0 / 3.0), 1);
    }

    #[test]
    fn dump_format() {
        let g = Grid::unit_square(2, 2).unwrap();
        let f = AnisotropyField::uniform(0.0, 1.0, 1.0, 1.0);
        let lines = trace_all(&f, &g, &TraceOptions::default()).unwrap();
        let text = lines[0].dump(&g);
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows[0], "i x ybar cell_row cos_theta E");
        assert_eq!(rows.len(), 4);
        let cols: Vec<&str> = rows[2].split(' ').collect();
        assert_eq!(cols.len(), 6);
        assert_eq!(cols[3], "1");
        assert_eq!(cols[5].parse::<f64>().unwrap(), 1.0);
    }
}
