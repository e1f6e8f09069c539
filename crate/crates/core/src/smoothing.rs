//! Selberg's smoothing toolkit: the weight G(u), the band-limited signum and
//! indicator approximations, the Gaussian-smoothed interval integral, the
//! Fejer identity and error terms, and the smoothed rectangle frequency
//! driven by a characteristic-function provider.

use num_complex::Complex64;

use crate::charfn::CfProvider;
use crate::numeric::{fejer, sinc};
use crate::specfun::{gauss_legendre_01, integrate, Quadrature, Rectangle, DEFAULT_QUAD_TOL};
use crate::{Error, Result};

use std::f64::consts::PI;

/// Selberg's weight G(u) = 2u/pi + 2(1-u)u cot(pi u) on [0, 1].
///
/// The removable singularities at both endpoints are evaluated by the cot
/// series (naive evaluation loses every digit there): near 0,
/// G(u) = 2/pi - 2(1-u)u [pi u/3 + (pi u)^3/45 + 2(pi u)^5/945 + (pi u)^7/4725],
/// and near 1 the mirrored expansion in e = 1-u. G(0) = 2/pi, G(1) = 0.
pub fn selberg_g(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::OutOfRange(format!("G(u) requires u in [0,1], got {u}")));
    }
    const SWITCH: f64 = 1e-3;
    let cot_series_tail = |z: f64| -> f64 {
        // cot(z) = 1/z - (z/3 + z^3/45 + 2 z^5/945 + z^7/4725 + ...)
        let z2 = z * z;
        z / 3.0 + z * z2 / 45.0 + 2.0 * z * z2 * z2 / 945.0 + z * z2 * z2 * z2 / 4725.0
    };
    if u < SWITCH {
        Ok(2.0 / PI - 2.0 * (1.0 - u) * u * cot_series_tail(PI * u))
    } else if u > 1.0 - SWITCH {
        // cot(pi(1-e)) = -cot(pi e); the pole cancels the 2u/pi term exactly,
        // leaving G(1-e) = 2 e (1-e) tail(pi e).
        let e = 1.0 - u;
        Ok(2.0 * e * u * cot_series_tail(PI * e))
    } else {
        Ok(2.0 * u / PI + 2.0 * (1.0 - u) * u / (PI * u).tan())
    }
}

/// f_{alpha,beta}(u) = (e^{-2 pi i alpha u} - e^{-2 pi i beta u}) / 2.
pub fn f_ab(alpha: f64, beta: f64, u: f64) -> Complex64 {
    let a = 2.0 * PI * alpha * u;
    let b = 2.0 * PI * beta * u;
    Complex64::new(
        (a.cos() - b.cos()) / 2.0,
        (b.sin() - a.sin()) / 2.0,
    )
}

/// The stabilized ratio f_{alpha,beta}(u)/u =
/// -i e^{-i pi (alpha+beta) u} pi (alpha-beta) sinc(pi (alpha-beta) u),
/// finite at u = 0.
pub fn f_ab_over_u(alpha: f64, beta: f64, u: f64) -> Complex64 {
    let half_sum = PI * (alpha + beta) * u;
    let half_diff = PI * (alpha - beta);
    let mag = half_diff * sinc(half_diff * u);
    // -i e^{-i t} = -sin t - i cos t
    Complex64::new(-half_sum.sin() * mag, -half_sum.cos() * mag)
}

/// Band-limited approximation to sgn(x):
/// int_0^t G(u/t) sin(2 pi u x) du/u, with the u -> 0 limit 2 pi x G(0)
/// folded into a sinc form so the quadrature sees a smooth integrand.
pub fn sgn_approx(x: f64, t: f64, tol: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::OutOfRange("smoothing parameter t must be positive".into()));
    }
    let q = integrate(
        |u| {
            let g = selberg_g(u / t).expect("u/t in [0,1]");
            g * 2.0 * PI * x * sinc(2.0 * PI * u * x)
        },
        0.0,
        t,
        tol,
    )?;
    Ok(q.value)
}

/// Smoothed indicator of [alpha, beta]:
/// Im int_0^t G(u/t) e^{2 pi i u x} f_{alpha,beta}(u) du/u.
pub fn indicator_approx(x: f64, alpha: f64, beta: f64, t: f64, tol: f64) -> Result<f64> {
    if !(alpha < beta) {
        return Err(Error::Precondition("indicator requires alpha < beta".into()));
    }
    if t <= 0.0 {
        return Err(Error::OutOfRange("smoothing parameter t must be positive".into()));
    }
    let q = integrate(
        |u| {
            let g = selberg_g(u / t).expect("u/t in [0,1]");
            let phase = (2.0 * PI * x - PI * (alpha + beta)) * u;
            g * PI * (beta - alpha) * sinc(PI * (alpha - beta) * u) * phase.cos()
        },
        0.0,
        t,
        tol,
    )?;
    Ok(q.value)
}

/// The Gaussian-smoothed interval mass
/// Im int_0^t G(u/t) e^{-(2 pi u)^2/2} f_{a,b}(u) du/u,
/// which approaches Phi(b) - Phi(a) at rate O(1/t).
pub fn gaussian_smoothed_interval(a: f64, b: f64, t: f64, tol: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::Precondition("interval requires a < b".into()));
    }
    if t < 1.0 {
        return Err(Error::OutOfRange("gaussian smoothing assumes t >= 1".into()));
    }
    let q = integrate(
        |u| {
            let g = selberg_g(u / t).expect("u/t in [0,1]");
            let w = (-(2.0 * PI * u).powi(2) / 2.0).exp();
            g * w * PI * (b - a) * sinc(PI * (a - b) * u) * (PI * (a + b) * u).cos()
        },
        0.0,
        t,
        tol,
    )?;
    Ok(q.value)
}

/// Residual of the Fejer identity
/// (sin(pi t x)/(pi t x))^2 = (2/t^2) int_0^t (t - v) cos(2 pi x v) dv.
pub fn fejer_identity_check(x: f64, t: f64, tol: f64) -> Result<f64> {
    let lhs = fejer(PI * t * x);
    let rhs = integrate(|v| (t - v) * (2.0 * PI * x * v).cos(), 0.0, t, tol)?;
    Ok((lhs - 2.0 / (t * t) * rhs.value).abs())
}

/// Which component the Fejer error term smooths over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Re,
    Im,
}

/// The Fejer error term
/// I(t,l) = Re int_0^t 2(t-v)/t^2 e^{-2 pi i v l} Phi(2 pi v, 0) dv
/// (J(t,l) analogously with Phi(0, 2 pi v)). By the Fejer identity this
/// equals the direct average (1/q) sum_x Fejer(pi t (component - l)).
pub fn fejer_error_term<P: CfProvider>(
    cf: &P,
    t: f64,
    l: f64,
    axis: Axis,
    tol: f64,
) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::OutOfRange("fejer error term requires t > 0".into()));
    }
    let q = integrate(
        |v| {
            let phi = match axis {
                Axis::Re => cf.eval(2.0 * PI * v, 0.0),
                Axis::Im => cf.eval(0.0, 2.0 * PI * v),
            };
            let theta = 2.0 * PI * v * l;
            let weight = 2.0 * (t - v) / (t * t);
            weight * (theta.cos() * phi.re + theta.sin() * phi.im)
        },
        0.0,
        t,
        tol,
    )?;
    Ok(q.value)
}

/// Sum of the four Fejer error terms at the edges of R: the expected scale
/// of |smoothed - direct| for the rectangle frequency.
pub fn fejer_budget<P: CfProvider>(cf: &P, r: &Rectangle, t: f64, tol: f64) -> Result<f64> {
    Ok(fejer_error_term(cf, t, r.a, Axis::Re, tol)?
        + fejer_error_term(cf, t, r.b, Axis::Re, tol)?
        + fejer_error_term(cf, t, r.c, Axis::Im, tol)?
        + fejer_error_term(cf, t, r.d, Axis::Im, tol)?)
}

/// Default tensor-grid size for the double smoothing integral.
pub const DEFAULT_RECT_NODES: usize = 64;

/// The smoothed rectangle frequency: the double integral
/// (1/2) Re int_0^t int_0^t G(u/t) G(v/t)
///   [Phi(2 pi u, -2 pi v) f_ab(u) conj(f_cd(v)) - Phi(2 pi u, 2 pi v) f_ab(u) f_cd(v)]
///   du/u dv/v
/// over a fixed Gauss-Legendre tensor grid, with the CF evaluated in one
/// batched pass.
pub fn smoothed_rect_frequency<P: CfProvider>(
    cf: &P,
    r: &Rectangle,
    t: f64,
    nodes: usize,
) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::OutOfRange("smoothing parameter t must be positive".into()));
    }
    let (x01, w01) = gauss_legendre_01(nodes);
    let us: Vec<f64> = x01.iter().map(|&x| x * t).collect();
    let weights: Vec<f64> = w01.iter().map(|&w| w * t).collect();
    let cf_us: Vec<f64> = us.iter().map(|&u| 2.0 * PI * u).collect();
    let tensor = cf.eval_tensor(&cf_us, &cf_us, true);
    let g: Vec<f64> = us.iter().map(|&u| selberg_g(u / t).unwrap()).collect();
    let k_ab: Vec<Complex64> = us.iter().map(|&u| f_ab_over_u(r.a, r.b, u)).collect();
    let k_cd: Vec<Complex64> = us.iter().map(|&u| f_ab_over_u(r.c, r.d, u)).collect();
    let n = nodes;
    let mut total = 0.0;
    for j in 0..n {
        let row = j * n;
        let gj = g[j] * weights[j];
        for k in 0..n {
            let phi_minus = tensor.minus[row + k];
            let phi_plus = tensor.plus[row + k];
            let term = phi_minus * k_ab[j] * k_cd[k].conj() - phi_plus * k_ab[j] * k_cd[k];
            total += gj * g[k] * weights[k] * term.re;
        }
    }
    Ok(0.5 * total)
}

/// The parameter choices (t, N) used for the end-to-end rate bound:
/// t = min(H^{1/4}, sqrt(log q / log H) / (60 pi)) and N = [(8 pi t)^2],
/// clamped to N >= 1 so the budget formulas stay defined at desk scale.
pub fn paper_preset(q: u64, h: u64) -> (f64, u32) {
    let t = (h as f64)
        .powf(0.25)
        .min(((q as f64).ln() / (h as f64).ln()).sqrt() / (60.0 * PI));
    let n = ((8.0 * PI * t).powi(2).floor() as u32).clamp(1, 8);
    (t, n)
}

/// Direct average of the Fejer kernel over a materialized series: the
/// brute-force oracle for [`fejer_error_term`].
pub fn fejer_direct_average(values: &[[f64; 2]], t: f64, l: f64, axis: Axis) -> f64 {
    let mut acc = crate::numeric::Kahan::default();
    for v in values {
        let comp = match axis {
            Axis::Re => v[0],
            Axis::Im => v[1],
        };
        acc.add(fejer(PI * t * (comp - l)));
    }
    acc.value() / values.len() as f64
}

/// Convenience quadrature wrapper used by tests that need the raw result.
pub fn quad<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<Quadrature> {
    integrate(f, lo, hi, DEFAULT_QUAD_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::GaussianCf;
    use crate::specfun::{gauss_cdf, gauss_rect_prob};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn g_endpoint_and_midpoint_values() {
        assert_relative_eq!(selberg_g(0.0).unwrap(), 2.0 / PI, epsilon = 1e-15);
        assert_eq!(selberg_g(1.0).unwrap(), 0.0);
        assert_relative_eq!(selberg_g(0.5).unwrap(), 1.0 / PI, epsilon = 1e-15);
        assert!(selberg_g(-0.1).is_err());
        assert!(selberg_g(1.1).is_err());
    }

    #[test]
    fn g_series_consistent_with_direct_evaluation() {
        // compare the series branches against direct evaluation just inside
        // the switch radius
        for &u in &[1.1e-3, 2e-3, 0.9985, 0.99889] {
            let direct = 2.0 * u / PI + 2.0 * (1.0 - u) * u / (PI * u).tan();
            assert_relative_eq!(selberg_g(u).unwrap(), direct, epsilon = 1e-10);
        }
    }

    #[test]
    fn g_bounded_on_dense_grid() {
        // 0 <= G <= 2/pi across [0,1]
        let n = 10_000;
        for i in 0..=n {
            let u = i as f64 / n as f64;
            let g = selberg_g(u).unwrap();
            assert!(g >= -1e-15 && g <= 2.0 / PI + 1e-15, "G({u}) = {g}");
        }
    }

    #[test]
    fn f_ab_values_and_bound() {
        assert_eq!(f_ab(0.3, 1.7, 0.0).norm(), 0.0);
        // alpha = -beta: f = i sin(2 pi beta u)
        let beta = 0.8;
        for &u in &[0.1, 0.5, 2.3] {
            let f = f_ab(-beta, beta, u);
            assert_relative_eq!(f.re, 0.0, epsilon = 1e-15);
            assert_relative_eq!(f.im, (2.0 * PI * beta * u).sin(), epsilon = 1e-14);
        }
        // |f| <= pi u |beta - alpha| on random samples
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let a = rng.gen_range(-3.0..3.0);
            let b = rng.gen_range(-3.0..3.0);
            let u = rng.gen_range(0.0..4.0);
            assert!(f_ab(a, b, u).norm() <= PI * u * (b - a).abs() + 1e-12);
        }
        assert!(f_ab(0.0, 1.0, 0.3).norm() <= PI * 0.3);
    }

    #[test]
    fn f_ab_over_u_matches_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let a = rng.gen_range(-3.0..3.0);
            let b = rng.gen_range(-3.0..3.0);
            let u = rng.gen_range(1e-3..4.0);
            let k = f_ab_over_u(a, b, u);
            let direct = f_ab(a, b, u) / u;
            assert!((k - direct).norm() < 1e-10, "a={a} b={b} u={u}");
        }
        // finite limit at 0: -i pi (a - b)
        let k0 = f_ab_over_u(0.25, 1.25, 0.0);
        assert_relative_eq!(k0.re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(k0.im, PI, epsilon = 1e-12);
    }

    #[test]
    fn im_product_identity() {
        // Im(w1) Im(w2) = Re(w1 conj(w2) - w1 w2) / 2
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let w1 = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let w2 = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let lhs = w1.im * w2.im;
            let rhs = 0.5 * (w1 * w2.conj() - w1 * w2).re;
            assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn sgn_approx_behaviour() {
        assert_eq!(sgn_approx(0.0, 10.0, 1e-10).unwrap(), 0.0);
        let v = sgn_approx(1.0, 10.0, 1e-10).unwrap();
        assert!((v - 1.0).abs() <= 2.0 / (10.0 * PI).powi(2) + 1e-8, "v = {v}");
        // antisymmetry
        for &x in &[0.3, 1.7, -2.4] {
            let p = sgn_approx(x, 8.0, 1e-10).unwrap();
            let m = sgn_approx(-x, 8.0, 1e-10).unwrap();
            assert_relative_eq!(p, -m, epsilon = 1e-9);
        }
    }

    #[test]
    fn indicator_matches_sgn_combination() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..40 {
            let alpha = rng.gen_range(-2.0..1.0);
            let beta = alpha + rng.gen_range(0.1..2.0);
            let x = rng.gen_range(-3.0..3.0);
            let t = rng.gen_range(2.0..12.0);
            let ind = indicator_approx(x, alpha, beta, t, 1e-10).unwrap();
            let via_sgn = (sgn_approx(x - alpha, t, 1e-10).unwrap()
                - sgn_approx(x - beta, t, 1e-10).unwrap())
                / 2.0;
            assert!((ind - via_sgn).abs() < 1e-8, "x={x} [{alpha},{beta}] t={t}");
        }
    }

    #[test]
    fn indicator_inside_outside() {
        let t = 20.0;
        let inside = indicator_approx(0.5, 0.0, 1.0, t, 1e-10).unwrap();
        assert!((inside - 1.0).abs() < 0.01, "{inside}");
        let outside = indicator_approx(5.0, 0.0, 1.0, t, 1e-10).unwrap();
        assert!(outside.abs() < 0.01, "{outside}");
    }

    #[test]
    fn gaussian_smoothed_interval_converges() {
        let exact = gauss_cdf(1.0) - gauss_cdf(-1.0);
        let v = gaussian_smoothed_interval(-1.0, 1.0, 20.0, 1e-10).unwrap();
        assert!((v - exact).abs() <= 5.0 / 20.0, "v = {v}");
        assert!((v - exact).abs() < 0.05, "v = {v}");
        // near-total mass
        let big = gaussian_smoothed_interval(-8.0, 8.0, 30.0, 1e-10).unwrap();
        assert!((big - 1.0).abs() < 0.05);
        // rate: error shrinks from t=5 to t=40 on average
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut err5 = 0.0;
        let mut err40 = 0.0;
        for _ in 0..10 {
            let a = rng.gen_range(-3.0..2.0);
            let b = a + rng.gen_range(0.2..2.0);
            let exact = gauss_cdf(b) - gauss_cdf(a);
            err5 += (gaussian_smoothed_interval(a, b, 5.0, 1e-10).unwrap() - exact).abs();
            err40 += (gaussian_smoothed_interval(a, b, 40.0, 1e-10).unwrap() - exact).abs();
        }
        assert!(err40 < err5, "mean err t=40 {err40} vs t=5 {err5}");
    }

    #[test]
    fn fejer_identity_residuals() {
        // tx = 1: both sides vanish
        let r = fejer_identity_check(0.25, 4.0, 1e-12).unwrap();
        assert!(r < 1e-9, "{r}");
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..30 {
            let x = rng.gen_range(-4.0..4.0);
            let t = rng.gen_range(0.5..20.0);
            let r = fejer_identity_check(x, t, 1e-12).unwrap();
            assert!(r <= 1e-9, "x={x} t={t}: {r}");
        }
        // x -> 0: kernel peak is 1
        assert_relative_eq!(fejer(0.0), 1.0);
    }

    #[test]
    fn fejer_error_term_gaussian_provider_decays() {
        // with the Gaussian CF the term is the smoothed Fejer expectation,
        // which decays like 1/t
        let cf = GaussianCf;
        let t_small = fejer_error_term(&cf, 2.0, 0.0, Axis::Re, 1e-10).unwrap();
        let t_big = fejer_error_term(&cf, 8.0, 0.0, Axis::Re, 1e-10).unwrap();
        assert!(t_big < t_small);
        assert!(t_small <= 1.0 / 2.0 * 2.0); // ~ C/t with small C
        // l far away stays bounded by the same envelope
        let far = fejer_error_term(&cf, 8.0, 50.0, Axis::Im, 1e-10).unwrap();
        assert!(far.abs() <= t_big * 2.0 + 1e-6);
    }

    #[test]
    fn smoothed_rect_with_gaussian_cf_recovers_gauss_prob() {
        let cf = GaussianCf;
        let r = Rectangle::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let exact = gauss_rect_prob(&r);
        for &t in &[5.0, 10.0, 20.0] {
            let v = smoothed_rect_frequency(&cf, &r, t, DEFAULT_RECT_NODES).unwrap();
            assert!((v - exact).abs() <= 5.0 / t, "t={t}: {v} vs {exact}");
        }
        // thin rectangle: bounded by pi^2 mu2(R) scale, heads to zero
        let sliver = Rectangle::new(-0.01, 0.01, -0.01, 0.01).unwrap();
        let v = smoothed_rect_frequency(&cf, &sliver, 10.0, DEFAULT_RECT_NODES).unwrap();
        assert!(v.abs() < 0.01, "{v}");
    }

    #[test]
    fn paper_preset_values() {
        let (t, n) = paper_preset(10_000_019, 100);
        // sqrt(ln q / ln H)/(60 pi) ~ 0.0099 < H^{1/4}
        assert!(t < 0.011 && t > 0.008, "t = {t}");
        assert_eq!(n, 1); // clamped
        let (t2, n2) = paper_preset(1_000_003, 4);
        assert!(t2 > t);
        assert!(n2 >= 1);
    }
}
