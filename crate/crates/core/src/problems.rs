//! Manufactured test cases with closed-form solutions and sources.
//!
//! Sources are built with the forward-mode jets in [`crate::jet`], written so
//! that the `1/eps` factor never multiplies an O(eps) quantity: with
//! `u = u0 + eps w` and `b . grad u0 = 0`, the parallel flux is evaluated as
//! `(1/eps) b . grad u = b . grad w + w b . grad(ln eps)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::anisotropy::{constant_fn, scalar_fn, AnisotropyField, Mat2, ScalarFn, TanhEpsProfile};
use crate::assembly::{AlignedCoeffs, Axis};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::jet::{Dual, Jet};

pub const NAMES: [&str; 6] = [
    "example1",
    "example2",
    "example3",
    "example4",
    "example4_test2",
    "example5",
];

/// Transition centre and steepness of the `eps` profile in Examples 3 and 5.
pub const PROFILE_X0: f64 = 0.25;
pub const PROFILE_STEEPNESS: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeHint {
    Aligned5,
    General9,
}

#[derive(Debug, Clone)]
pub enum CaseField {
    Aligned(AlignedCoeffs),
    General(AnisotropyField),
}

#[derive(Clone)]
pub struct CaseDefinition {
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub field: CaseField,
    pub f: ScalarFn,
    pub u_exact: Option<ScalarFn>,
    /// `n . A grad u` on the Neumann edges, `None` meaning zero.
    pub phi: Option<ScalarFn>,
    pub hint: SchemeHint,
}

impl std::fmt::Debug for CaseDefinition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CaseDefinition")
            .field("name", &self.name)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("hint", &self.hint)
            .field("phi", &self.phi.is_some())
            .finish()
    }
}

impl CaseDefinition {
    pub fn grid(&self, ni: usize, nj: usize) -> Result<Grid> {
        Grid::new(self.a, self.b, ni, nj)
    }

    /// The full diffusion tensor.
    pub fn tensor(&self, x: f64, y: f64) -> Result<Mat2> {
        match &self.field {
            CaseField::Aligned(c) => Ok(c.tensor(x, y)),
            CaseField::General(f) => f.eval_a(x, y),
        }
    }

    pub fn with_source(mut self, f: ScalarFn) -> Self {
        self.f = f;
        self
    }
}

/// Build a registered case. For Examples 3 and 5 `eps` is `eps_min`;
/// `profile` overrides the default transition for those two.
pub fn build(name: &str, eps: f64, profile: Option<TanhEpsProfile>) -> Result<CaseDefinition> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!("epsilon must be positive, got {eps}")));
    }
    let prof = profile.unwrap_or(TanhEpsProfile::new(eps, PROFILE_X0, PROFILE_STEEPNESS));
    match name {
        "example1" => Ok(example1(eps)),
        "example2" => Ok(example2(eps)),
        "example3" => Ok(example3_with(prof, true)),
        "example4" => Ok(example4(eps, false)),
        "example4_test2" => Ok(example4(eps, true)),
        "example5" => Ok(example5_with(prof)),
        other => Err(Error::Config(format!(
            "unknown problem '{other}', expected one of {}",
            NAMES.join(", ")
        ))),
    }
}

/// Uniform, x-aligned field on the unit square.
pub fn example1(eps: f64) -> CaseDefinition {
    let pi2 = PI * PI;
    CaseDefinition {
        name: "example1".into(),
        a: 1.0,
        b: 1.0,
        field: CaseField::Aligned(AlignedCoeffs::new(constant_fn(1.0 / eps), constant_fn(1.0), Axis::X)),
        f: scalar_fn(move |x, y| {
            let sy = (PI * y).sin();
            (4.0 + eps) * pi2 * (2.0 * PI * x).cos() * sy + pi2 * sy
        }),
        u_exact: Some(scalar_fn(move |x, y| {
            let sy = (PI * y).sin();
            sy + eps * (2.0 * PI * x).cos() * sy
        })),
        phi: None,
        hint: SchemeHint::Aligned5,
    }
}

/// Variable diagonal tensor on `[0, 10]^2`, strong along y.
pub fn example2(eps: f64) -> CaseDefinition {
    const L: f64 = 10.0;
    const C1: f64 = L;
    const C2: f64 = L;
    let k = 2.0 * PI / L;
    CaseDefinition {
        name: "example2".into(),
        a: L,
        b: L,
        field: CaseField::Aligned(AlignedCoeffs::new(
            scalar_fn(move |x, y| (C2 + x * y) / eps),
            scalar_fn(|x, y| C1 + x * y * y),
            Axis::Y,
        )),
        f: scalar_fn(move |x, y| {
            let (sx, cx) = (k * x).sin_cos();
            let (sy, cy) = (k * y).sin_cos();
            let (p, q) = (C1 + x * y * y, C2 + x * y);
            let g = 1.0 + eps * cy;
            -y * y * k * cx * g + p * k * k * sx * g + k * sx * (x * sy + q * k * cy)
        }),
        u_exact: Some(scalar_fn(move |x, y| (k * x).sin() * (1.0 + eps * (k * y).cos()))),
        phi: None,
        hint: SchemeHint::Aligned5,
    }
}

pub fn example3(eps_min: f64) -> CaseDefinition {
    example3_with(TanhEpsProfile::new(eps_min, PROFILE_X0, PROFILE_STEEPNESS), true)
}

/// x-aligned field with `eps(x)` from `profile`. With `exact_flux` the
/// small boundary flux of the manufactured solution is imposed; otherwise
/// homogeneous Neumann data are used.
pub fn example3_with(profile: TanhEpsProfile, exact_flux: bool) -> CaseDefinition {
    let p = profile;
    // (1/eps) du/dx = sin(pi y) (l1 cos 2 pi x - 2 pi sin 2 pi x), l1 = eps'/eps
    let f = scalar_fn(move |x, y| {
        let v = p.value(x);
        let (l1, r2) = (p.d1(x) / v, p.d2(x) / v);
        let (s2, c2) = (2.0 * PI * x).sin_cos();
        let sy = (PI * y).sin();
        let dflux = (r2 - l1 * l1) * c2 - 2.0 * PI * l1 * s2 - 4.0 * PI * PI * c2;
        -dflux * sy + PI * PI * sy * (1.0 + v * c2)
    });
    let phi = exact_flux.then(|| {
        scalar_fn(move |x, y| {
            let l1 = p.d1(x) / p.value(x);
            let dudx_over_eps = (PI * y).sin() * (l1 * (2.0 * PI * x).cos() - 2.0 * PI * (2.0 * PI * x).sin());
            if x < 0.5 {
                -dudx_over_eps
            } else {
                dudx_over_eps
            }
        })
    });
    CaseDefinition {
        name: "example3".into(),
        a: 1.0,
        b: 1.0,
        field: CaseField::Aligned(AlignedCoeffs::new(
            scalar_fn(move |x, _| 1.0 / p.value(x)),
            constant_fn(1.0),
            Axis::X,
        )),
        f,
        u_exact: Some(scalar_fn(move |x, y| {
            let sy = (PI * y).sin();
            sy + p.value(x) * (2.0 * PI * x).cos() * sy
        })),
        phi,
        hint: SchemeHint::Aligned5,
    }
}

/// `kappa` in the limit solution `sin(pi y + kappa (y^2 - y) cos(pi x))`.
pub const KAPPA: f64 = 2.0;

/// `pi y + kappa (y^2 - y) cos(pi x)`; constant along field lines.
pub fn level_set(x: f64, y: f64) -> f64 {
    PI * y + KAPPA * (y * y - y) * (PI * x).cos()
}

fn psi_jet(x: Jet, y: Jet) -> Jet {
    y.scale(PI) + (y * y - y).scale(KAPPA) * x.scale(PI).cos()
}

/// Unit field `b = B/|B|` with `B = (d psi/dy, -d psi/dx)`.
fn b_jet(x: Jet, y: Jet) -> [Jet; 2] {
    let bx = (y.scale(2.0) - 1.0).scale(KAPPA) * x.scale(PI).cos() + PI;
    let by = (y * y - y).scale(KAPPA * PI) * x.scale(PI).sin();
    let inv = (bx * bx + by * by).sqrt().recip();
    [bx * inv, by * inv]
}

fn raw_b(x: f64, y: f64) -> (f64, f64) {
    (
        KAPPA * (2.0 * y - 1.0) * (PI * x).cos() + PI,
        KAPPA * PI * (y * y - y) * (PI * x).sin(),
    )
}

/// The curved field shared by Examples 4 and 5.
fn curved_field(eps: ScalarFn, extent: f64) -> AnisotropyField {
    AnisotropyField::new(
        scalar_fn(|x, y| {
            let (bx, by) = raw_b(x, y);
            by.atan2(bx)
        }),
        eps,
        constant_fn(1.0),
        extent,
    )
    .with_div_b(scalar_fn(|x, y| {
        let [bx, by] = b_jet(Jet::x(x), Jet::y(y));
        bx.d[0] + by.d[1]
    }))
    .with_theta_grad(Arc::new(|x, y| {
        let (xj, yj) = (Jet::x(x), Jet::y(y));
        let bx = (yj.scale(2.0) - 1.0).scale(KAPPA) * xj.scale(PI).cos() + PI;
        let by = (yj * yj - yj).scale(KAPPA * PI) * xj.scale(PI).sin();
        let n2 = bx.v * bx.v + by.v * by.v;
        [
            (bx.v * by.d[0] - by.v * bx.d[0]) / n2,
            (bx.v * by.d[1] - by.v * bx.d[1]) / n2,
        ]
    }))
}

/// `w = cos(2 pi x) sin(pi y)`, the O(eps) correction.
fn w_jet(x: Jet, y: Jet) -> Jet {
    x.scale(2.0 * PI).cos() * y.scale(PI).sin()
}

/// Parallel flux factor `(1/eps) b . grad u` and the perpendicular
/// derivative `b_perp . grad u` for `u = sin(psi) + eps w`.
///
/// `eps` and `ln_eps` are jets of the (possibly variable) anisotropy.
fn curved_parts(x: f64, y: f64, eps: Jet, ln_eps: Jet) -> ([Dual; 2], Dual, Dual) {
    let (xj, yj) = (Jet::x(x), Jet::y(y));
    let [bx, by] = b_jet(xj, yj);
    let b = [bx.dual(), by.dual()];
    let w = w_jet(xj, yj);
    let gw = w.grad();
    let gl = ln_eps.grad();
    let par = b[0] * gw[0] + b[1] * gw[1] + w.dual() * (b[0] * gl[0] + b[1] * gl[1]);
    let u = psi_jet(xj, yj).sin() + eps * w;
    let gu = u.grad();
    let bp = [-b[1], b[0]];
    let perp = bp[0] * gu[0] + bp[1] * gu[1];
    (b, par, perp)
}

fn curved_source(x: f64, y: f64, eps: Jet, ln_eps: Jet) -> f64 {
    let (b, par, perp) = curved_parts(x, y, eps, ln_eps);
    let bp = [-b[1], b[0]];
    let f_par = Dual::divergence(b[0] * par, b[1] * par);
    let f_perp = Dual::divergence(bp[0] * perp, bp[1] * perp);
    -f_par - f_perp
}

/// `n . A grad u` on the vertical edge containing `x` (left if `x < a/2`).
fn curved_flux(x: f64, y: f64, a: f64, eps: Jet, ln_eps: Jet) -> f64 {
    let (b, par, perp) = curved_parts(x, y, eps, ln_eps);
    let n = if x < 0.5 * a { -1.0 } else { 1.0 };
    // n . b = n bx, n . b_perp = -n by, alpha = 1
    n * b[0].v * par.v - n * b[1].v * perp.v
}

/// Curved field with uniform `eps`; `test_two` widens the domain to
/// `[0, 3/2] x [0, 1]`, where the outflow flux data no longer vanish.
pub fn example4(eps: f64, test_two: bool) -> CaseDefinition {
    let a = if test_two { 1.5 } else { 1.0 };
    let ej = move || (Jet::constant(eps), Jet::constant(eps.ln()));
    CaseDefinition {
        name: if test_two { "example4_test2" } else { "example4" }.into(),
        a,
        b: 1.0,
        field: CaseField::General(curved_field(constant_fn(eps), a)),
        f: scalar_fn(move |x, y| {
            let (e, l) = ej();
            curved_source(x, y, e, l)
        }),
        u_exact: Some(scalar_fn(move |x, y| {
            level_set(x, y).sin() + eps * (2.0 * PI * x).cos() * (PI * y).sin()
        })),
        phi: test_two.then(|| {
            scalar_fn(move |x, y| {
                let (e, l) = ej();
                curved_flux(x, y, a, e, l)
            })
        }),
        hint: SchemeHint::General9,
    }
}

/// Flux `n . A grad u_exact` of Example 4 on either vertical edge.
pub fn example4_boundary_flux(eps: f64, test_two: bool, x: f64, y: f64) -> f64 {
    let a = if test_two { 1.5 } else { 1.0 };
    curved_flux(x, y, a, Jet::constant(eps), Jet::constant(eps.ln()))
}

pub fn example5(eps_min: f64) -> CaseDefinition {
    example5_with(TanhEpsProfile::new(eps_min, PROFILE_X0, PROFILE_STEEPNESS))
}

/// Curved field with the tanh `eps(x)` profile.
pub fn example5_with(profile: TanhEpsProfile) -> CaseDefinition {
    let p = profile;
    let jets = move |x: f64| {
        let (v, d1, d2) = (p.value(x), p.d1(x), p.d2(x));
        let e = Jet::x(x).chain(v, d1, d2);
        let (l1, r2) = (d1 / v, d2 / v);
        let l = Jet::x(x).chain(v.ln(), l1, r2 - l1 * l1);
        (e, l)
    };
    CaseDefinition {
        name: "example5".into(),
        a: 1.0,
        b: 1.0,
        field: CaseField::General(curved_field(p.as_fn(), 1.0)),
        f: scalar_fn(move |x, y| {
            let (e, l) = jets(x);
            curved_source(x, y, e, l)
        }),
        u_exact: Some(scalar_fn(move |x, y| {
            level_set(x, y).sin() + p.value(x) * (2.0 * PI * x).cos() * (PI * y).sin()
        })),
        phi: None,
        hint: SchemeHint::General9,
    }
}

/// Fourth-order central difference of `g` along one coordinate.
fn d4(g: &dyn Fn(f64, f64) -> f64, x: f64, y: f64, h: f64, along_x: bool) -> f64 {
    let at = |t: f64| if along_x { g(x + t, y) } else { g(x, y + t) };
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}

/// Largest deviation of the declared source from a finite-difference
/// evaluation of `-div(A grad u_exact)` at `n_points` random interior points,
/// relative to the largest `|f|` there.
pub fn verify_source(case: &CaseDefinition, n_points: usize, seed: u64) -> Result<f64> {
    let u = case
        .u_exact
        .as_ref()
        .ok_or_else(|| Error::Config(format!("{} has no exact solution", case.name)))?;
    let h = 1e-4 * case.a.min(case.b);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flux = |c: usize| {
        move |x: f64, y: f64| -> f64 {
            let g = [d4(&**u, x, y, h, true), d4(&**u, x, y, h, false)];
            match case.tensor(x, y) {
                Ok(m) => m[c][0] * g[0] + m[c][1] * g[1],
                Err(_) => f64::NAN,
            }
        }
    };
    let (fx, fy) = (flux(0), flux(1));
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for _ in 0..n_points {
        let x = rng.random_range(0.02 * case.a..0.98 * case.a);
        let y = rng.random_range(0.02 * case.b..0.98 * case.b);
        case.tensor(x, y)?;
        let fd = -(d4(&fx, x, y, h, true) + d4(&fy, x, y, h, false));
        let declared = (case.f)(x, y);
        if !fd.is_finite() || !declared.is_finite() {
            return Err(Error::NonFinite(format!("source check of {} at ({x}, {y})", case.name)));
        }
        worst = worst.max((fd - declared).abs());
        scale = scale.max(declared.abs());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_builds_every_case() {
        for name in NAMES {
            let c = build(name, 0.1, None).unwrap();
            assert_eq!(c.name, name);
        }
        assert!(matches!(build("example9", 1.0, None), Err(Error::Config(_))));
        assert!(build("example1", 0.0, None).is_err());
    }

    #[test]
    fn sources_match_finite_differences() {
        for name in NAMES {
            for eps in [10.0, 1.0, 0.1] {
                let c = build(name, eps, None).unwrap();
                let m = verify_source(&c, 100, 42).unwrap();
                assert!(m <= 1e-6, "{name} eps={eps}: {m:e}");
            }
        }
    }

    #[test]
    fn oracle_detects_perturbation_and_handles_zero() {
        let c = example1(1.0);
        let f = c.f.clone();
        let bad = c.clone().with_source(scalar_fn(move |x, y| 1.01 * f(x, y)));
        assert!(verify_source(&bad, 100, 1).unwrap() >= 9e-3);
        let mut zero = example1(1.0);
        zero.u_exact = Some(constant_fn(0.0));
        zero.f = constant_fn(0.0);
        assert_eq!(verify_source(&zero, 20, 1).unwrap(), 0.0);
    }

    #[test]
    fn exact_solutions_meet_dirichlet_data() {
        for eps in [1.0, 1e-6] {
            let c1 = example1(eps);
            let u1 = c1.u_exact.unwrap();
            let c2 = example2(eps);
            let u2 = c2.u_exact.unwrap();
            for k in 0..=10 {
                let t = k as f64 / 10.0;
                assert_eq!(u1(t, 0.0), 0.0);
                assert_eq!(u2(0.0, 10.0 * t), 0.0);
                assert!(u2(10.0, 10.0 * t).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn curved_field_is_tangent_to_level_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = example4(1e-3, false);
        let CaseField::General(field) = &c.field else {
            panic!("general field expected")
        };
        for _ in 0..100 {
            let (x, y) = (rng.random::<f64>(), rng.random::<f64>());
            let b = field.b(x, y);
            let h = 1e-6;
            let gx = (level_set(x + h, y) - level_set(x - h, y)) / (2.0 * h);
            let gy = (level_set(x, y + h) - level_set(x, y - h)) / (2.0 * h);
            assert!((b[0] * gx + b[1] * gy).abs() < 1e-8);
            // exact jet version
            let pj = psi_jet(Jet::x(x), Jet::y(y));
            assert!((b[0] * pj.d[0] + b[1] * pj.d[1]).abs() < 1e-10);
            let fd = field.div_b_fd(x, y);
            assert!((field.eval_div_b(x, y) - fd).abs() <= 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn test_one_flux_vanishes_and_test_two_flux_is_bounded() {
        for k in 1..20 {
            let y = k as f64 / 20.0;
            for x in [0.0, 1.0] {
                assert!(example4_boundary_flux(1e-6, false, x, y).abs() < 1e-10);
            }
            let d = (example4_boundary_flux(1.0, true, 1.5, y) - example4_boundary_flux(1e-6, true, 1.5, y)).abs();
            assert!(d <= 50.0 * 1.0);
            let d = (example4_boundary_flux(1e-6, true, 1.5, y) - example4_boundary_flux(1e-12, true, 1.5, y)).abs();
            assert!(d <= 50.0 * 1e-6);
        }
    }

    #[test]
    fn example5_reduces_to_example4() {
        let (c4, c5) = (example4(1.0, false), example5(1.0));
        for (x, y) in [(0.1, 0.2), (0.5, 0.5), (0.9, 0.7)] {
            assert!(((c4.f)(x, y) - (c5.f)(x, y)).abs() < 1e-12);
            assert!((c4.u_exact.as_ref().unwrap()(x, y) - c5.u_exact.as_ref().unwrap()(x, y)).abs() < 1e-15);
        }
    }

    #[test]
    fn limits_are_eps_close() {
        for name in NAMES {
            let c = build(name, 1e-3, None).unwrap();
            let c0 = build(name, 1e-300, None).unwrap();
            let (u, u0) = (c.u_exact.unwrap(), c0.u_exact.unwrap());
            for (x, y) in [(0.3, 0.4), (0.7, 0.9)] {
                let (x, y) = (x * c.a, y * c.b);
                assert!((u(x, y) - u0(x, y)).abs() <= 1e-3 + 1e-15);
            }
        }
    }

    #[test]
    fn profile_midpoint() {
        let c = example3(1e-9);
        let CaseField::Aligned(co) = &c.field else { panic!() };
        assert!(((co.d_par)(0.25, 0.3) - 2.0 / (1.0 + 1e-9)).abs() < 1e-12);
    }
}
