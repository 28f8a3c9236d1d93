//! Five-point scheme for fields aligned with a coordinate axis.
//!
//! Everything is written in a frame `(p, q)` where `p` runs along the strong
//! axis and `q` across it, so `Axis::X` and `Axis::Y` share one code path.
//! In that frame the Dirichlet lines are `q = 0` and `q = Q`, the inflow
//! line is `p = 0` and the outflow line is `p = P`.
//!
//! Both Neumann ends use the half-cell closure
//! `-(2 k / h_s^2)(u_1 - u_0) - perp_0 = f_0 + 2 phi_0 / h_s`, obtained from a
//! flux balance over the half cell next to the boundary. The AP scheme
//! replaces every outflow row with the trapezoidal sum of all rows along the
//! strong line, in which the `1/eps` fluxes telescope away.

use crate::anisotropy::ScalarFn;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::SparseSystem;

use super::{Stencil, SystemBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Diagonal tensor with `d_par` along `axis` and `d_perp` across it.
/// `d_par` includes the `1/eps` factor.
#[derive(Clone)]
pub struct AlignedCoeffs {
    pub d_par: ScalarFn,
    pub d_perp: ScalarFn,
    pub axis: Axis,
}

impl std::fmt::Debug for AlignedCoeffs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AlignedCoeffs").field("axis", &self.axis).finish()
    }
}

impl AlignedCoeffs {
    pub fn new(d_par: ScalarFn, d_perp: ScalarFn, axis: Axis) -> Self {
        Self {
            d_par,
            d_perp,
            axis,
        }
    }

    /// The diagonal tensor in `(x, y)` components.
    pub fn tensor(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let (s, t) = ((self.d_par)(x, y), (self.d_perp)(x, y));
        match self.axis {
            Axis::X => [[s, 0.0], [0.0, t]],
            Axis::Y => [[t, 0.0], [0.0, s]],
        }
    }
}

struct Frame<'a> {
    grid: &'a Grid,
    axis: Axis,
}

impl Frame<'_> {
    fn np(&self) -> usize {
        match self.axis {
            Axis::X => self.grid.ni(),
            Axis::Y => self.grid.nj(),
        }
    }

    fn nq(&self) -> usize {
        match self.axis {
            Axis::X => self.grid.nj(),
            Axis::Y => self.grid.ni(),
        }
    }

    fn hs(&self) -> f64 {
        match self.axis {
            Axis::X => self.grid.hx(),
            Axis::Y => self.grid.hy(),
        }
    }

    fn ht(&self) -> f64 {
        match self.axis {
            Axis::X => self.grid.hy(),
            Axis::Y => self.grid.hx(),
        }
    }

    fn ij(&self, p: usize, q: usize) -> (usize, usize) {
        match self.axis {
            Axis::X => (p, q),
            Axis::Y => (q, p),
        }
    }

    fn idx(&self, p: usize, q: usize) -> usize {
        let (i, j) = self.ij(p, q);
        self.grid.idx(i, j)
    }

    fn coord(&self, p: usize, q: usize) -> (f64, f64) {
        let (i, j) = self.ij(p, q);
        self.grid.node(i, j)
    }
}

/// Nodal coefficient tables in frame order, validated positive.
struct Tables {
    par: Vec<f64>,
    perp: Vec<f64>,
    width: usize,
}

impl Tables {
    fn new(frame: &Frame, coeffs: &AlignedCoeffs) -> Result<Self> {
        let width = frame.np() + 1;
        let n = width * (frame.nq() + 1);
        let (mut par, mut perp) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for q in 0..=frame.nq() {
            for p in 0..=frame.np() {
                let (x, y) = frame.coord(p, q);
                let (a, b) = ((coeffs.d_par)(x, y), (coeffs.d_perp)(x, y));
                for (v, name) in [(a, "d_par"), (b, "d_perp")] {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(Error::InvalidField {
                            x,
                            y,
                            reason: format!("{name} = {v} must be positive"),
                        });
                    }
                }
                par.push(a);
                perp.push(b);
            }
        }
        Ok(Self { par, perp, width })
    }

    fn par(&self, p: usize, q: usize) -> f64 {
        self.par[q * self.width + p]
    }

    fn perp(&self, p: usize, q: usize) -> f64 {
        self.perp[q * self.width + p]
    }
}

/// `kt+ (u_{q+1} - u_q) - kt- (u_q - u_{q-1})`, the cross-axis difference.
fn perp_term(frame: &Frame, tab: &Tables, p: usize, q: usize) -> Stencil {
    let h2 = frame.ht() * frame.ht();
    let up = 0.5 * (tab.perp(p, q + 1) + tab.perp(p, q)) / h2;
    let dn = 0.5 * (tab.perp(p, q) + tab.perp(p, q - 1)) / h2;
    let mut s = Stencil::new();
    s.push(frame.idx(p, q + 1), up);
    s.push(frame.idx(p, q), -up - dn);
    s.push(frame.idx(p, q - 1), dn);
    s
}

/// Half-point coefficient `k_{p+1/2}` over `h_s^2`.
fn strong_coeff(frame: &Frame, tab: &Tables, p: usize, q: usize) -> f64 {
    0.5 * (tab.par(p + 1, q) + tab.par(p, q)) / (frame.hs() * frame.hs())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Outflow {
    Integral,
    Local,
}

fn assemble(
    grid: &Grid,
    coeffs: &AlignedCoeffs,
    f: &ScalarFn,
    phi: Option<&ScalarFn>,
    outflow: Outflow,
) -> Result<SparseSystem> {
    let frame = Frame {
        grid,
        axis: coeffs.axis,
    };
    let tab = Tables::new(&frame, coeffs)?;
    let (np, nq, hs) = (frame.np(), frame.nq(), frame.hs());
    let flux = |p: usize, q: usize| {
        let (x, y) = frame.coord(p, q);
        phi.map_or(0.0, |g| g(x, y))
    };
    let fv = |p: usize, q: usize| {
        let (x, y) = frame.coord(p, q);
        f(x, y)
    };

    let mut sys = SystemBuilder::new(grid.n_nodes(), 5 * grid.n_nodes() + np * nq * 3);
    for q in 0..=nq {
        if q == 0 || q == nq {
            for p in 0..=np {
                sys.identity_row(frame.idx(p, q), 0.0);
            }
            continue;
        }
        for p in 1..np {
            let (kr, kl) = (strong_coeff(&frame, &tab, p, q), strong_coeff(&frame, &tab, p - 1, q));
            let mut s = perp_term(&frame, &tab, p, q).scaled(-1.0);
            s.push(frame.idx(p + 1, q), -kr);
            s.push(frame.idx(p, q), kr + kl);
            s.push(frame.idx(p - 1, q), -kl);
            sys.set_row(frame.idx(p, q), &s, fv(p, q));
        }

        let k0 = strong_coeff(&frame, &tab, 0, q);
        let mut s = perp_term(&frame, &tab, 0, q).scaled(-1.0);
        s.push(frame.idx(0, q), 2.0 * k0);
        s.push(frame.idx(1, q), -2.0 * k0);
        sys.set_row(frame.idx(0, q), &s, fv(0, q) + 2.0 * flux(0, q) / hs);

        match outflow {
            Outflow::Local => {
                let k = strong_coeff(&frame, &tab, np - 1, q);
                let mut s = perp_term(&frame, &tab, np, q).scaled(-1.0);
                s.push(frame.idx(np, q), 2.0 * k);
                s.push(frame.idx(np - 1, q), -2.0 * k);
                sys.set_row(frame.idx(np, q), &s, fv(np, q) + 2.0 * flux(np, q) / hs);
            }
            Outflow::Integral => {
                let mut s = Stencil::new();
                let mut rhs = flux(0, q) / hs + flux(np, q) / hs;
                for p in 0..=np {
                    let w = if p == 0 || p == np { 0.5 } else { 1.0 };
                    s.add_scaled(&perp_term(&frame, &tab, p, q), -w);
                    rhs += w * fv(p, q);
                }
                sys.set_row(frame.idx(np, q), &s, rhs);
            }
        }
    }
    sys.finish()
}

/// AP five-point system: outflow rows are integrals along the strong axis.
pub fn assemble_ap_aligned(
    grid: &Grid,
    coeffs: &AlignedCoeffs,
    f: &ScalarFn,
    phi: Option<&ScalarFn>,
) -> Result<SparseSystem> {
    assemble(grid, coeffs, f, phi, Outflow::Integral)
}

/// Baseline five-point system with local Neumann rows at both ends.
pub fn assemble_naive_aligned(
    grid: &Grid,
    coeffs: &AlignedCoeffs,
    f: &ScalarFn,
    phi: Option<&ScalarFn>,
) -> Result<SparseSystem> {
    assemble(grid, coeffs, f, phi, Outflow::Local)
}

/// Profile across the strong axis of the `eps -> 0` limit, one value per
/// cross index `q = 0..=Q`.
///
/// The limit is constant along each strong line and satisfies the
/// three-point problem with coefficients and sources integrated along the
/// line by the trapezoidal rule, using only `d_perp`, `f` and `phi`.
pub fn solve_aligned_limit(
    grid: &Grid,
    coeffs: &AlignedCoeffs,
    f: &ScalarFn,
    phi: Option<&ScalarFn>,
) -> Result<Vec<f64>> {
    let frame = Frame {
        grid,
        axis: coeffs.axis,
    };
    let tab = Tables::new(&frame, coeffs)?;
    let (np, nq, hs, ht) = (frame.np(), frame.nq(), frame.hs(), frame.ht());
    let w = |p: usize| if p == 0 || p == np { 0.5 } else { 1.0 };

    // Unknowns q = 1..Q-1; row q: -(K+ (v_{q+1} - v_q) - K- (v_q - v_{q-1})) = F_q.
    let m = nq - 1;
    let (mut lower, mut diag, mut upper, mut rhs) =
        (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    for q in 1..nq {
        let (mut kp, mut km, mut fq) = (0.0, 0.0, 0.0);
        for p in 0..=np {
            kp += w(p) * 0.5 * (tab.perp(p, q + 1) + tab.perp(p, q));
            km += w(p) * 0.5 * (tab.perp(p, q) + tab.perp(p, q - 1));
            let (x, y) = frame.coord(p, q);
            fq += w(p) * f(x, y);
        }
        if let Some(g) = phi {
            let ((x0, y0), (x1, y1)) = (frame.coord(0, q), frame.coord(np, q));
            fq += (g(x0, y0) + g(x1, y1)) / hs;
        }
        let r = q - 1;
        lower[r] = -km / (ht * ht);
        upper[r] = -kp / (ht * ht);
        diag[r] = (kp + km) / (ht * ht);
        rhs[r] = fq;
    }
    let inner = thomas(&lower, &diag, &upper, &rhs)?;
    let mut out = Vec::with_capacity(nq + 1);
    out.push(0.0);
    out.extend(inner);
    out.push(0.0);
    Ok(out)
}

/// Tridiagonal solve without pivoting; `lower[0]` and `upper[n-1]` are unused.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for k in 0..n {
        let den = diag[k] - if k > 0 { lower[k] * c[k - 1] } else { 0.0 };
        if den == 0.0 || !den.is_finite() {
            return Err(Error::Singular(format!("tridiagonal pivot {k} is {den}")));
        }
        c[k] = upper[k] / den;
        d[k] = (rhs[k] - if k > 0 { lower[k] * d[k - 1] } else { 0.0 }) / den;
    }
    for k in (0..n.saturating_sub(1)).rev() {
        d[k] -= c[k] * d[k + 1];
    }
    Ok(d)
}
