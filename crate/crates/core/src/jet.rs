//! Forward-mode derivative carriers for closed-form source terms.
//!
//! [`Jet`] holds a value with its gradient and Hessian in `(x, y)`, [`Dual`]
//! a value with its gradient. Elementary functions propagate derivatives by
//! the chain rule, so a manufactured solution written once as an expression
//! yields exact (round-off only) derivatives for the source term.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d: [f64; 2],
    pub h: [[f64; 2]; 2],
}

impl Dual {
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; 2] }
    }

    fn chain(self, g: f64, g1: f64) -> Self {
        Self {
            v: g,
            d: [g1 * self.d[0], g1 * self.d[1]],
        }
    }

    pub fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }

    pub fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }

    pub fn recip(self) -> Self {
        self.chain(1.0 / self.v, -1.0 / (self.v * self.v))
    }

    pub fn scale(self, c: f64) -> Self {
        Self {
            v: c * self.v,
            d: [c * self.d[0], c * self.d[1]],
        }
    }

    /// `d/dx (self.x-component) + d/dy (self.y-component)` for a flux pair.
    pub fn divergence(fx: Dual, fy: Dual) -> f64 {
        fx.d[0] + fy.d[1]
    }
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self {
            v,
            d: [0.0; 2],
            h: [[0.0; 2]; 2],
        }
    }

    /// The coordinate function `x` at the point.
    pub fn x(x: f64) -> Self {
        Self {
            v: x,
            d: [1.0, 0.0],
            h: [[0.0; 2]; 2],
        }
    }

    /// The coordinate function `y` at the point.
    pub fn y(y: f64) -> Self {
        Self {
            v: y,
            d: [0.0, 1.0],
            h: [[0.0; 2]; 2],
        }
    }

    /// Apply a scalar function with value `g`, first derivative `g1` and second
    /// derivative `g2` at `self.v`.
    pub fn chain(self, g: f64, g1: f64, g2: f64) -> Self {
        let mut h = [[0.0; 2]; 2];
        for (a, row) in h.iter_mut().enumerate() {
            for (b, e) in row.iter_mut().enumerate() {
                *e = g2 * self.d[a] * self.d[b] + g1 * self.h[a][b];
            }
        }
        Self {
            v: g,
            d: [g1 * self.d[0], g1 * self.d[1]],
            h,
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(self.v.ln(), r, -r * r)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn scale(self, c: f64) -> Self {
        Self {
            v: c * self.v,
            d: [c * self.d[0], c * self.d[1]],
            h: [
                [c * self.h[0][0], c * self.h[0][1]],
                [c * self.h[1][0], c * self.h[1][1]],
            ],
        }
    }

    /// Drop the Hessian.
    pub fn dual(self) -> Dual {
        Dual {
            v: self.v,
            d: self.d,
        }
    }

    /// Gradient components, each carrying its own gradient.
    pub fn grad(self) -> [Dual; 2] {
        [
            Dual {
                v: self.d[0],
                d: self.h[0],
            },
            Dual {
                v: self.d[1],
                d: self.h[1],
            },
        ]
    }
}

macro_rules! impl_arith {
    ($t:ty, $mul:expr) => {
        impl Add for $t {
            type Output = $t;
            fn add(self, o: $t) -> $t {
                let mut r = self;
                r.v += o.v;
                r.d[0] += o.d[0];
                r.d[1] += o.d[1];
                r.add_second(&o, 1.0);
                r
            }
        }

        impl Sub for $t {
            type Output = $t;
            fn sub(self, o: $t) -> $t {
                let mut r = self;
                r.v -= o.v;
                r.d[0] -= o.d[0];
                r.d[1] -= o.d[1];
                r.add_second(&o, -1.0);
                r
            }
        }

        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t {
                self.scale(-1.0)
            }
        }

        impl Mul for $t {
            type Output = $t;
            fn mul(self, o: $t) -> $t {
                $mul(self, o)
            }
        }

        impl Div for $t {
            type Output = $t;
            #[allow(clippy::suspicious_arithmetic_impl)]
            fn div(self, o: $t) -> $t {
                self * o.recip()
            }
        }

        impl Add<f64> for $t {
            type Output = $t;
            fn add(self, c: f64) -> $t {
                let mut r = self;
                r.v += c;
                r
            }
        }

        impl Sub<f64> for $t {
            type Output = $t;
            fn sub(self, c: f64) -> $t {
                let mut r = self;
                r.v -= c;
                r
            }
        }

        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(self, c: f64) -> $t {
                self.scale(c)
            }
        }

        impl Mul<$t> for f64 {
            type Output = $t;
            fn mul(self, j: $t) -> $t {
                j.scale(self)
            }
        }

        impl Add<$t> for f64 {
            type Output = $t;
            fn add(self, j: $t) -> $t {
                j + self
            }
        }

        impl Sub<$t> for f64 {
            type Output = $t;
            fn sub(self, j: $t) -> $t {
                -j + self
            }
        }
    };
}

trait SecondOrder {
    fn add_second(&mut self, o: &Self, sign: f64);
}

impl SecondOrder for Dual {
    fn add_second(&mut self, _o: &Self, _sign: f64) {}
}

impl SecondOrder for Jet {
    fn add_second(&mut self, o: &Self, sign: f64) {
        for a in 0..2 {
            for b in 0..2 {
                self.h[a][b] += sign * o.h[a][b];
            }
        }
    }
}

fn mul_dual(u: Dual, w: Dual) -> Dual {
    Dual {
        v: u.v * w.v,
        d: [
            u.d[0] * w.v + u.v * w.d[0],
            u.d[1] * w.v + u.v * w.d[1],
        ],
    }
}

fn mul_jet(u: Jet, w: Jet) -> Jet {
    let mut h = [[0.0; 2]; 2];
    for (a, row) in h.iter_mut().enumerate() {
        for (b, e) in row.iter_mut().enumerate() {
            *e = u.h[a][b] * w.v + u.d[a] * w.d[b] + u.d[b] * w.d[a] + u.v * w.h[a][b];
        }
    }
    Jet {
        v: u.v * w.v,
        d: [
            u.d[0] * w.v + u.v * w.d[0],
            u.d[1] * w.v + u.v * w.d[1],
        ],
        h,
    }
}

impl_arith!(Dual, mul_dual);
impl_arith!(Jet, mul_jet);

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn product_and_chain_rules() {
        // u = sin(x y) * exp(y) / (1 + x^2)
        let f = |x: f64, y: f64| (x * y).sin() * y.exp() / (1.0 + x * x);
        let (x0, y0) = (0.3, -0.7);
        let x = Jet::x(x0);
        let y = Jet::y(y0);
        let u = (x * y).sin() * y.exp() / (x * x + 1.0);
        assert!(close(u.v, f(x0, y0), 1e-15));
        let h = 1e-4;
        let fx = (f(x0 + h, y0) - f(x0 - h, y0)) / (2.0 * h);
        let fy = (f(x0, y0 + h) - f(x0, y0 - h)) / (2.0 * h);
        let fxx = (f(x0 + h, y0) - 2.0 * f(x0, y0) + f(x0 - h, y0)) / (h * h);
        let fxy = (f(x0 + h, y0 + h) - f(x0 + h, y0 - h) - f(x0 - h, y0 + h)
            + f(x0 - h, y0 - h))
            / (4.0 * h * h);
        assert!(close(u.d[0], fx, 1e-7));
        assert!(close(u.d[1], fy, 1e-7));
        assert!(close(u.h[0][0], fxx, 1e-6));
        assert!(close(u.h[0][1], fxy, 1e-6));
        assert_eq!(u.h[0][1], u.h[1][0]);
    }

    #[test]
    fn sqrt_and_ln() {
        let x = Jet::x(2.0);
        let r = x.sqrt();
        assert!(close(r.d[0], 0.5 / 2f64.sqrt(), 1e-15));
        assert!(close(r.h[0][0], -0.25 * 2f64.powf(-1.5), 1e-15));
        let l = (x * x).ln();
        assert!(close(l.d[0], 1.0, 1e-15));
        assert!(close(l.h[0][0], -0.5, 1e-15));
    }
}
