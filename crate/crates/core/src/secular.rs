//! Analytic functions of the matching problem.
//!
//! In the outer regions the wave function is `B sinh(kappa (L - |x|))` with
//! `kappa (L - ell) = sigma + i tau`; inside it is `C cos(k x) + i D sin(k x)`
//! with `k (L - ell) = R`. Matching at `x = +-ell` gives a real homogeneous
//! 2x2 system for `(C, D)` whose determinant is a positive multiple of
//!
//! ```text
//! D(R) = N(sigma, tau) sin(2 lambda R) + R M(sigma, tau) cos(2 lambda R)
//! M = sigma sinh(2 sigma) + tau sin(2 tau)
//! N = sigma^2 cosh(2 sigma) + tau^2 cos(2 tau)
//! ```
//!
//! subject to `sigma tau = Z` and `tau^2 - sigma^2 = R^2`.
//!
//! `cosh(2 sigma)` overflows near `sigma ~ 355`, so every quantity that
//! contains it is evaluated as `exp(-2 sigma) * (...)`. Those variants carry a
//! `_scaled` suffix; the multiplier is positive and keeps signs and zeros.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ScaledParams;

/// Relative threshold below which the ratio form is flagged singular.
pub const POLE_THRESHOLD: f64 = 1e-10;

/// Residual below which a candidate is accepted as a bound state.
pub const ACCEPT_RESIDUAL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaTau {
    pub sigma: f64,
    pub tau: f64,
}

impl SigmaTau {
    pub fn new(sigma: f64, tau: f64) -> Self {
        SigmaTau { sigma, tau }
    }
}

/// A point `(R, sigma, tau)` on the constraint surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootTriple {
    pub r: f64,
    pub sigma: f64,
    pub tau: f64,
}

impl RootTriple {
    pub fn from_r(r: f64, z: f64) -> Self {
        let st = sigma_tau_of_r(r, z);
        RootTriple { r, sigma: st.sigma, tau: st.tau }
    }

    fn kappa(&self) -> Complex64 {
        Complex64::new(self.sigma, self.tau)
    }
}

/// Amplitudes of the three-piece wave function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchCoefficients {
    pub c: f64,
    pub d: f64,
    pub b_plus: Complex64,
    pub b_minus: Complex64,
}

/// One evaluation of the ratio form at an arbitrary `(sigma, tau, R)`.
///
/// `m_scaled`, `n_scaled` and `d_hat_scaled` are multiplied by
/// `exp(-2 |sigma|)`; `q` and `d_ratio` are scale-free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecularSample {
    pub sigma: f64,
    pub tau: f64,
    pub r: f64,
    pub m_scaled: f64,
    pub n_scaled: f64,
    pub q: f64,
    pub d_ratio: f64,
    pub d_hat_scaled: f64,
    pub singular: bool,
}

// exp(-2|s|) cosh(2s) and exp(-2|s|) sinh(2s)
#[inline]
fn cosh2_scaled(s: f64) -> f64 {
    0.5 * (1.0 + (-4.0 * s.abs()).exp())
}

#[inline]
fn sinh2_scaled(s: f64) -> f64 {
    -0.5 * (-4.0 * s.abs()).exp_m1() * s.signum()
}

pub fn eval_m(st: SigmaTau) -> f64 {
    st.sigma * (2.0 * st.sigma).sinh() + st.tau * (2.0 * st.tau).sin()
}

pub fn eval_n(st: SigmaTau) -> f64 {
    st.sigma * st.sigma * (2.0 * st.sigma).cosh() + st.tau * st.tau * (2.0 * st.tau).cos()
}

pub fn eval_m_scaled(st: SigmaTau) -> f64 {
    let w = (-2.0 * st.sigma.abs()).exp();
    st.sigma * sinh2_scaled(st.sigma) + st.tau * (2.0 * st.tau).sin() * w
}

pub fn eval_n_scaled(st: SigmaTau) -> f64 {
    let w = (-2.0 * st.sigma.abs()).exp();
    st.sigma * st.sigma * cosh2_scaled(st.sigma) + st.tau * st.tau * (2.0 * st.tau).cos() * w
}

/// `tan(2 lambda R) / R` with its limit `2 lambda` at `R = 0`.
fn tan_term(r: f64, lambda: f64) -> f64 {
    if r == 0.0 {
        2.0 * lambda
    } else {
        (2.0 * lambda * r).tan() / r
    }
}

/// Ratio form `Q + tan(2 lambda R)/R` with `Q = M/N`; near-poles are flagged.
pub fn eval_dratio(st: SigmaTau, r: f64, lambda: f64) -> SecularSample {
    let m = eval_m_scaled(st);
    let n = eval_n_scaled(st);
    let w = (-2.0 * st.sigma.abs()).exp();
    let n_scale = st.sigma * st.sigma + st.tau * st.tau * w;
    let (s2, c2) = (2.0 * lambda * r).sin_cos();
    let singular = c2.abs() < POLE_THRESHOLD || !(n.abs() > POLE_THRESHOLD * n_scale);
    let q = m / n;
    SecularSample {
        sigma: st.sigma,
        tau: st.tau,
        r,
        m_scaled: m,
        n_scaled: n,
        q,
        d_ratio: q + tan_term(r, lambda),
        d_hat_scaled: n * s2 + r * m * c2,
        singular,
    }
}

/// Decay rate `sigma(R)` on the constraint curve `sigma tau = Z`,
/// `tau^2 - sigma^2 = R^2`.
pub fn sigma_of_r(r: f64, z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let r2 = r * r;
    (2.0 * z * z / (r2 + r2.hypot(2.0 * z))).sqrt()
}

pub fn tau_of_r(r: f64, z: f64) -> f64 {
    if z == 0.0 {
        r.abs()
    } else {
        z / sigma_of_r(r, z)
    }
}

pub fn sigma_tau_of_r(r: f64, z: f64) -> SigmaTau {
    if z == 0.0 {
        SigmaTau::new(0.0, r.abs())
    } else {
        let s = sigma_of_r(r, z);
        SigmaTau::new(s, z / s)
    }
}

/// Pole-free secular function `exp(-2 sigma(R)) * D(R)` on the constraint curve.
pub fn secular_det_r(r: f64, params: &ScaledParams) -> f64 {
    let st = sigma_tau_of_r(r, params.z);
    let (s2, c2) = (2.0 * params.lambda * r).sin_cos();
    eval_n_scaled(st) * s2 + r * eval_m_scaled(st) * c2
}

/// Analytic `d/dR` of [`secular_det_r`].
pub fn secular_det_r_derivative(r: f64, params: &ScaledParams) -> f64 {
    let lambda = params.lambda;
    let SigmaTau { sigma: s, tau: t } = sigma_tau_of_r(r, params.z);
    let w = (-2.0 * s).exp();
    let (ch, sh) = (cosh2_scaled(s), sinh2_scaled(s));
    let (sin2t, cos2t) = (2.0 * t).sin_cos();
    let (s2, c2) = (2.0 * lambda * r).sin_cos();

    let n = s * s * ch + t * t * cos2t * w;
    let m = s * sh + t * sin2t * w;
    let n_s = 2.0 * s * ch + 2.0 * s * s * sh;
    let n_t = (2.0 * t * cos2t - 2.0 * t * t * sin2t) * w;
    let m_s = sh + 2.0 * s * ch;
    let m_t = (sin2t + 2.0 * t * cos2t) * w;

    let norm = s * s + t * t;
    let (ds, dt) = if norm > 0.0 { (-r * s / norm, r * t / norm) } else { (0.0, 1.0) };

    let d = n * s2 + r * m * c2;
    let dd = (n_s * ds + n_t * dt) * s2 + 2.0 * lambda * n * c2 + m * c2 + r * (m_s * ds + m_t * dt) * c2
        - 2.0 * lambda * r * m * s2;
    dd - 2.0 * ds * d
}

/// Sum of the absolute sizes of the terms of [`secular_det_r`]; the natural
/// unit for deciding whether a value is "small".
pub fn secular_magnitude(r: f64, params: &ScaledParams) -> f64 {
    let SigmaTau { sigma: s, tau: t } = sigma_tau_of_r(r, params.z);
    let w = (-2.0 * s).exp();
    s * s * cosh2_scaled(s) + t * t * w + r * (s * sinh2_scaled(s) + t * w)
}

/// `secular_det_r / R`, continuous at `R = 0`. Used for sign scans because the
/// zero of `D(R)` at `R = 0` is trivial.
pub(crate) fn secular_reduced(r: f64, params: &ScaledParams) -> f64 {
    if r == 0.0 {
        let st = sigma_tau_of_r(0.0, params.z);
        2.0 * params.lambda * eval_n_scaled(st) + eval_m_scaled(st)
    } else {
        secular_det_r(r, params) / r
    }
}

/// The real 2x2 matching matrix acting on `(C, D)`, scaled by
/// `(L - ell) exp(-sigma)`.
pub fn matching_matrix(root: &RootTriple, params: &ScaledParams) -> [[f64; 2]; 2] {
    let (sig, tau, r) = (root.sigma, root.tau, root.r);
    let e2 = (-2.0 * sig).exp();
    let (sh1, ch1) = (-0.5 * (-2.0 * sig).exp_m1(), 0.5 * (1.0 + e2));
    let (st, ct) = tau.sin_cos();
    // exp(-sigma) sinh(sigma + i tau) and exp(-sigma) cosh(sigma + i tau)
    let sinh_k = Complex64::new(sh1 * ct, ch1 * st);
    let cosh_k = Complex64::new(ch1 * ct, sh1 * st);
    let kappa = root.kappa();
    let (sr, cr) = (params.lambda * r).sin_cos();

    let a = sinh_k * (r * sr) - kappa * cosh_k * cr;
    let b = -Complex64::i() * (sinh_k * (r * cr) + kappa * cosh_k * sr);
    [[a.re, b.re], [a.im, b.im]]
}

fn singular_values(m: &[[f64; 2]; 2]) -> (f64, f64) {
    let [[a, b], [c, d]] = *m;
    let frob = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (frob * frob - 4.0 * det * det).max(0.0).sqrt();
    let smax = ((frob + disc) / 2.0).sqrt();
    let smin = if smax > 0.0 { det.abs() / smax } else { 0.0 };
    (smin, smax)
}

/// Ratio of the smallest to the largest singular value of the matching
/// matrix; near zero exactly when `(R, sigma, tau)` is a bound state.
pub fn matching_residual(root: &RootTriple, params: &ScaledParams) -> Result<f64> {
    let m = matching_matrix(root, params);
    let (smin, smax) = singular_values(&m);
    if !(smax > 0.0) || !smax.is_finite() {
        return Err(Error::DegenerateMatrix { r: root.r });
    }
    Ok(smin / smax)
}

/// Solves the matching problem at an accepted root.
///
/// `(C, D)` is the unit null vector with `C > 0` (or `D > 0` when `C` vanishes).
pub fn solve_coefficients(root: &RootTriple, params: &ScaledParams, tolerance: f64) -> Result<MatchCoefficients> {
    let residual = matching_residual(root, params)?;
    if residual > tolerance {
        return Err(Error::NotARoot { r: root.r, residual });
    }
    let m = matching_matrix(root, params);
    // smallest eigenvector of M^T M
    let p = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let q = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let s = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let emin = 0.5 * ((p + s) - ((p - s) * (p - s) + 4.0 * q * q).sqrt());
    let v1 = (q, emin - p);
    let v2 = (emin - s, q);
    let (mut c, mut d) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) { v1 } else { v2 };
    let norm = c.hypot(d);
    if norm == 0.0 {
        // M^T M is a multiple of the identity, so M = 0: any direction is null
        c = 1.0;
        d = 0.0;
    } else {
        c /= norm;
        d /= norm;
    }
    if c < -1e-14 || (c.abs() <= 1e-14 && d < 0.0) {
        c = -c;
        d = -d;
    }

    let b_plus = outer_amplitude(root, params, c, d);
    Ok(MatchCoefficients { c, d, b_plus, b_minus: b_plus.conj() })
}

fn outer_amplitude(root: &RootTriple, params: &ScaledParams, c: f64, d: f64) -> Complex64 {
    let kappa = root.kappa();
    let (sr, cr) = (params.lambda * root.r).sin_cos();
    let sinh_k = kappa.sinh();
    let cosh_k = kappa.cosh();
    if sinh_k.norm() >= 0.5 * cosh_k.norm() {
        // psi_0(ell) = B+ sinh(kappa (L - ell))
        Complex64::new(c * cr, d * sr) / sinh_k
    } else {
        // psi_0'(ell) = -kappa B+ cosh(kappa (L - ell)), in units of 1/(L - ell)
        let dpsi = Complex64::new(-c * sr, d * cr) * root.r;
        -dpsi / (kappa * cosh_k)
    }
}

/// Evaluates the three-piece wave function at a physical coordinate `x`.
pub fn wavefunction_at(
    coeffs: &MatchCoefficients,
    root: &RootTriple,
    params: &ScaledParams,
    x: f64,
) -> Result<Complex64> {
    let d = params.scale;
    let ell = params.lambda * d;
    let l = ell + d;
    if !(x.abs() <= l) {
        return Err(Error::Domain { x, half_width: l });
    }
    let k = root.r / d;
    if x.abs() <= ell {
        let (s, c) = (k * x).sin_cos();
        return Ok(Complex64::new(coeffs.c * c, coeffs.d * s));
    }
    let kappa = root.kappa();
    if x > 0.0 {
        Ok(coeffs.b_plus * (kappa * ((l - x) / d)).sinh())
    } else {
        Ok(coeffs.b_minus * (kappa.conj() * ((l + x) / d)).sinh())
    }
}

/// First derivative of [`wavefunction_at`] in `x`.
pub fn wavefunction_derivative_at(
    coeffs: &MatchCoefficients,
    root: &RootTriple,
    params: &ScaledParams,
    x: f64,
) -> Result<Complex64> {
    let d = params.scale;
    let ell = params.lambda * d;
    let l = ell + d;
    if !(x.abs() <= l) {
        return Err(Error::Domain { x, half_width: l });
    }
    let k = root.r / d;
    if x.abs() <= ell {
        let (s, c) = (k * x).sin_cos();
        return Ok(Complex64::new(-k * coeffs.c * s, k * coeffs.d * c));
    }
    let kappa = root.kappa() / d;
    if x > 0.0 {
        Ok(-kappa * coeffs.b_plus * (kappa * (l - x)).cosh())
    } else {
        Ok(kappa.conj() * coeffs.b_minus * (kappa.conj() * (l + x)).cosh())
    }
}
