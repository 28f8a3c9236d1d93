//! Anisotropy direction, strength and perpendicular diffusivity.
//!
//! The diffusion tensor is `A = R(theta) diag(1/eps, alpha) R(theta)^T`, i.e.
//! `A = (1/eps) b b^T + alpha b_perp b_perp^T` with `b = (cos theta, sin theta)`
//! and `b_perp = (-sin theta, cos theta)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// Symmetric 2x2 tensor stored as a full matrix.
pub type Mat2 = [[f64; 2]; 2];

pub fn scalar_fn(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(f)
}

pub fn constant_fn(c: f64) -> ScalarFn {
    Arc::new(move |_, _| c)
}

#[derive(Clone)]
pub struct AnisotropyField {
    theta: ScalarFn,
    eps: ScalarFn,
    alpha: ScalarFn,
    div_b: Option<ScalarFn>,
    theta_grad: Option<VectorFn>,
    fd_step: f64,
}

impl fmt::Debug for AnisotropyField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnisotropyField")
            .field("div_b", &self.div_b.is_some())
            .field("theta_grad", &self.theta_grad.is_some())
            .field("fd_step", &self.fd_step)
            .finish()
    }
}

impl AnisotropyField {
    /// `extent` is the larger domain side; it fixes the finite-difference step
    /// `1e-6 * extent` used for `div b` when no analytic form is supplied.
    pub fn new(theta: ScalarFn, eps: ScalarFn, alpha: ScalarFn, extent: f64) -> Self {
        Self {
            theta,
            eps,
            alpha,
            div_b: None,
            theta_grad: None,
            fd_step: 1e-6 * extent,
        }
    }

    pub fn uniform(theta: f64, eps: f64, alpha: f64, extent: f64) -> Self {
        Self::new(constant_fn(theta), constant_fn(eps), constant_fn(alpha), extent)
            .with_theta_grad(Arc::new(|_, _| [0.0, 0.0]))
    }

    pub fn with_div_b(mut self, div_b: ScalarFn) -> Self {
        self.div_b = Some(div_b);
        self
    }

    pub fn with_theta_grad(mut self, theta_grad: VectorFn) -> Self {
        self.theta_grad = Some(theta_grad);
        self
    }

    pub fn theta(&self, x: f64, y: f64) -> f64 {
        (self.theta)(x, y)
    }

    pub fn eps(&self, x: f64, y: f64) -> f64 {
        (self.eps)(x, y)
    }

    pub fn alpha(&self, x: f64, y: f64) -> f64 {
        (self.alpha)(x, y)
    }

    pub fn b(&self, x: f64, y: f64) -> [f64; 2] {
        let (s, c) = self.theta(x, y).sin_cos();
        [c, s]
    }

    pub fn b_perp(&self, x: f64, y: f64) -> [f64; 2] {
        let (s, c) = self.theta(x, y).sin_cos();
        [-s, c]
    }

    pub fn has_analytic_div_b(&self) -> bool {
        self.div_b.is_some() || self.theta_grad.is_some()
    }

    fn checked_coefficients(&self, x: f64, y: f64) -> Result<(f64, f64, f64)> {
        let eps = self.eps(x, y);
        let alpha = self.alpha(x, y);
        let theta = self.theta(x, y);
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidField {
                x,
                y,
                reason: format!("eps = {eps} must be positive"),
            });
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidField {
                x,
                y,
                reason: format!("alpha = {alpha} must be positive"),
            });
        }
        if !theta.is_finite() {
            return Err(Error::InvalidField {
                x,
                y,
                reason: "theta is not finite".into(),
            });
        }
        Ok((theta, eps, alpha))
    }

    pub fn eval_a(&self, x: f64, y: f64) -> Result<Mat2> {
        let (theta, eps, alpha) = self.checked_coefficients(x, y)?;
        Ok(rotated_diag(theta, 1.0 / eps, alpha))
    }

    /// `alpha b_perp b_perp^T`.
    pub fn eval_aperp(&self, x: f64, y: f64) -> Result<Mat2> {
        let (theta, _, alpha) = self.checked_coefficients(x, y)?;
        Ok(rotated_diag(theta, 0.0, alpha))
    }

    pub fn eval_div_b(&self, x: f64, y: f64) -> f64 {
        if let Some(div_b) = &self.div_b {
            return div_b(x, y);
        }
        if let Some(grad) = &self.theta_grad {
            let (s, c) = self.theta(x, y).sin_cos();
            let [tx, ty] = grad(x, y);
            return -s * tx + c * ty;
        }
        self.div_b_fd(x, y)
    }

    pub(crate) fn div_b_fd(&self, x: f64, y: f64) -> f64 {
        let h = self.fd_step;
        let bx = |x: f64, y: f64| self.theta(x, y).cos();
        let by = |x: f64, y: f64| self.theta(x, y).sin();
        (bx(x + h, y) - bx(x - h, y)) / (2.0 * h) + (by(x, y + h) - by(x, y - h)) / (2.0 * h)
    }
}

/// `R(theta) diag(d_par, d_perp) R(theta)^T`.
pub fn rotated_diag(theta: f64, d_par: f64, d_perp: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    let off = c * s * (d_par - d_perp);
    [
        [c * c * d_par + s * s * d_perp, off],
        [off, s * s * d_par + c * c * d_perp],
    ]
}

/// `eps(x) = (1 + tanh(a (x0 - x)) + eps_min (1 - tanh(a (x0 - x)))) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TanhEpsProfile {
    pub eps_min: f64,
    pub x0: f64,
    pub a_steep: f64,
}

impl TanhEpsProfile {
    pub fn new(eps_min: f64, x0: f64, a_steep: f64) -> Self {
        Self {
            eps_min,
            x0,
            a_steep,
        }
    }

    /// `(1 + tanh z) / 2` and `(1 - tanh z) / 2` without cancellation.
    fn halves(&self, x: f64) -> (f64, f64) {
        let z = self.a_steep * (self.x0 - x);
        let p = 1.0 / (1.0 + (-2.0 * z).exp());
        let q = 1.0 / (1.0 + (2.0 * z).exp());
        (p, q)
    }

    pub fn value(&self, x: f64) -> f64 {
        let (p, q) = self.halves(x);
        p + self.eps_min * q
    }

    pub fn d1(&self, x: f64) -> f64 {
        let (p, q) = self.halves(x);
        -2.0 * self.a_steep * (1.0 - self.eps_min) * p * q
    }

    pub fn d2(&self, x: f64) -> f64 {
        let (p, q) = self.halves(x);
        -4.0 * self.a_steep * self.a_steep * (1.0 - self.eps_min) * (p - q) * p * q
    }

    pub fn as_fn(&self) -> ScalarFn {
        let prof = *self;
        Arc::new(move |x, _| prof.value(x))
    }
}
