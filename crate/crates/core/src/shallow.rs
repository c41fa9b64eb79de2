//! The `L -> infinity` limit: imaginary steps of strength `g = T^2` outside
//! `(-ell, ell)` on the whole line.
//!
//! Level `N` is parametrised by `omega` in `(0, 1)` through
//!
//! ```text
//! k = (2N + 2 - omega) / 4        sqrt(R) = k / T
//! cos(ell omega / 2) = 1 / (R + sqrt(R^2 + 1))
//! ```
//!
//! and the outer decay rate `p + i q` follows from `alpha = ell omega / 2` via
//! `q = T / sqrt(2 cos alpha)`, `p = q cos alpha`, `k = q sin alpha`.
//! The system closes exactly only for `ell = pi`; for other widths the levels
//! are still computed from the same equations.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShallowParams {
    pub ell: f64,
    /// Square root of the step height.
    pub t: f64,
}

impl ShallowParams {
    pub fn new(ell: f64, t: f64) -> Result<Self> {
        if !(ell.is_finite() && ell >= 0.0) {
            return Err(invalid(format!("ell must be finite and >= 0, got {ell}")));
        }
        if !(t.is_finite() && t >= 0.0) {
            return Err(invalid(format!("T must be finite and >= 0, got {t}")));
        }
        Ok(ShallowParams { ell, t })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShallowLevel {
    pub n: u32,
    pub omega: f64,
    /// `1 - omega`.
    pub eta: f64,
    pub k: f64,
    pub energy: f64,
    /// `(k / T)^2`.
    pub r: f64,
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    pub g_plus: f64,
    pub g_minus: f64,
}

impl ShallowLevel {
    /// Boundary slope of the branch this level belongs to: `G+` for even `N`,
    /// `G-` for odd `N`.
    pub fn slope(&self) -> f64 {
        if self.n.is_multiple_of(2) {
            self.g_plus
        } else {
            self.g_minus
        }
    }
}

fn r_of(omega: f64, n: u32, t: f64) -> f64 {
    let s = (2.0 * n as f64 + 2.0 - omega) / (4.0 * t);
    s * s
}

fn rhs(r: f64) -> f64 {
    1.0 / (r + r.hypot(1.0))
}

fn defining(omega: f64, n: u32, sp: &ShallowParams) -> f64 {
    (sp.ell * omega / 2.0).cos() - rhs(r_of(omega, n, sp.t))
}

/// Level `N`, or `None` when the level equation has no root in `(0, 1)`.
pub fn solve_level(sp: &ShallowParams, n: u32) -> Result<Option<ShallowLevel>> {
    if !(sp.t > 0.0) {
        return Err(invalid("T must be positive"));
    }
    let f = |w: f64| defining(w, n, sp);

    const SAMPLES: usize = 256;
    let vals: Vec<f64> = (0..=SAMPLES).map(|i| f(i as f64 / SAMPLES as f64)).collect();
    let changes = vals.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
    if changes > 1 {
        return Err(Error::NoRoot(format!("level equation for N = {n} changes sign {changes} times on (0, 1)")));
    }
    let Some(i) = vals.windows(2).position(|w| (w[0] > 0.0) != (w[1] > 0.0)) else {
        return Ok(None);
    };
    let (mut a, mut b) = (i as f64 / SAMPLES as f64, (i + 1) as f64 / SAMPLES as f64);
    let fa = f(a);
    while b - a > 1e-14 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    let omega = 0.5 * (a + b);
    if !(omega > 0.0 && omega < 1.0) {
        return Ok(None);
    }
    Ok(Some(level_from_omega(sp, n, omega)))
}

fn level_from_omega(sp: &ShallowParams, n: u32, omega: f64) -> ShallowLevel {
    let k = (2.0 * n as f64 + 2.0 - omega) / 4.0;
    let r = r_of(omega, n, sp.t);
    // on a level cos(ell omega / 2) equals rhs(R); the closed form keeps
    // cos(alpha) accurate when it is tiny
    let ca = rhs(r);
    let alpha = ca.acos();
    let q = sp.t / (2.0 * ca).sqrt();
    let p = q * ca;
    ShallowLevel {
        n,
        omega,
        eta: 1.0 - omega,
        k,
        energy: k * k,
        r,
        alpha,
        p,
        q,
        g_plus: -k * k / (q + p),
        g_minus: -k * k / (q - p),
    }
}

/// Levels `0..=n_max` that exist; empty when none do.
pub fn solve_levels(sp: &ShallowParams, n_max: u32) -> Result<Vec<ShallowLevel>> {
    let mut out = Vec::new();
    for n in 0..=n_max {
        if let Some(l) = solve_level(sp, n)? {
            out.push(l);
        }
    }
    Ok(out)
}

/// `1/(2R) - 5/(48 R^3)`, the large-`R` expansion of
/// [`weak_coupling_exact`].
pub fn weak_coupling_eta(r: f64) -> f64 {
    1.0 / (2.0 * r) - 5.0 / (48.0 * r.powi(3))
}

/// `arcsin(1 / (R + sqrt(R^2 + 1)))`.
pub fn weak_coupling_exact(r: f64) -> f64 {
    rhs(r).asin()
}

/// `R/2 - R^2/4`, the small-`R` expansion of [`strong_coupling_exact`].
pub fn strong_coupling_series(r: f64) -> f64 {
    r / 2.0 - r * r / 4.0
}

/// `(R - (sqrt(1 + R^2) - 1)) / 2`, equal to `sin^2(ell omega / 4)` on a level.
pub fn strong_coupling_exact(r: f64) -> f64 {
    0.5 * (r - (r.hypot(1.0) - 1.0))
}

/// `omega` implied by the strong-coupling series for a well of width `ell`.
pub fn strong_coupling_omega(r: f64, ell: f64) -> f64 {
    4.0 / ell * strong_coupling_series(r).max(0.0).sqrt().asin()
}

/// `G+ = -k^2/(q + p)` and `G- = -k^2/(q - p)`.
pub fn slope_parameters(level: &ShallowLevel) -> Result<(f64, f64)> {
    let d = level.q - level.p;
    if !(d.abs() > 1e-15 * level.q.abs()) {
        return Err(invalid(format!("q = p for level {}: G- undefined", level.n)));
    }
    Ok((-level.k * level.k / (level.q + level.p), -level.k * level.k / d))
}

/// `psi(0) = 1`, `psi'(0) = i G`; decays as `exp(-(p + i q)(x - ell))` beyond
/// `ell`. Negative `x` uses `psi(-x) = conj(psi(x))`.
pub fn shallow_wavefunction(level: &ShallowLevel, sp: &ShallowParams, x: f64) -> Complex64 {
    if x < 0.0 {
        return shallow_wavefunction(level, sp, -x).conj();
    }
    let (k, g) = (level.k, level.slope());
    let inner = |x: f64| {
        let (s, c) = (k * x).sin_cos();
        Complex64::new(c, g / k * s)
    };
    if x <= sp.ell {
        inner(x)
    } else {
        let sigma = Complex64::new(level.p, level.q);
        inner(sp.ell) * (-sigma * (x - sp.ell)).exp()
    }
}

/// Derivative of [`shallow_wavefunction`] for `x >= 0`.
pub fn shallow_wavefunction_derivative(level: &ShallowLevel, sp: &ShallowParams, x: f64) -> Complex64 {
    let (k, g) = (level.k, level.slope());
    if x <= sp.ell {
        let (s, c) = (k * x).sin_cos();
        Complex64::new(-k * s, g * c)
    } else {
        let sigma = Complex64::new(level.p, level.q);
        -sigma * shallow_wavefunction(level, sp, x)
    }
}

/// Least-squares slope of `log|y|` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.abs().ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// `(R, G+, G-)` for level `n` at a log-spaced set of `R` values, obtained by
/// choosing `T = k / sqrt(R)` self-consistently.
pub fn slope_samples(ell: f64, n: u32, r_lo: f64, r_hi: f64, count: usize) -> Result<Vec<(f64, f64, f64)>> {
    if !(r_lo > 0.0 && r_hi > r_lo && count >= 2) {
        return Err(invalid("slope samples need 0 < R_lo < R_hi and at least two points"));
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let target = r_lo * (r_hi / r_lo).powf(i as f64 / (count - 1) as f64);
        // k depends weakly on T; two passes pin R to the target
        let mut t = (2.0 * n as f64 + 1.5) / 4.0 / target.sqrt();
        let mut level = None;
        for _ in 0..60 {
            let sp = ShallowParams::new(ell, t)?;
            let l = solve_level(&sp, n)?.ok_or_else(|| Error::NoRoot(format!("no level {n} at T = {t}")))?;
            let next = l.k / target.sqrt();
            level = Some(l);
            if (next - t).abs() <= 1e-14 * t {
                break;
            }
            t = next;
        }
        let l = level.expect("at least one pass");
        out.push((l.r, l.g_plus, l.g_minus));
    }
    Ok(out)
}

/// Width at which the shallow-well equations close exactly.
pub const SELF_CONSISTENT_ELL: f64 = PI;

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(ell: f64, t: f64) -> ShallowParams {
        ShallowParams::new(ell, t).unwrap()
    }

    #[test]
    fn zero_width_has_no_levels() {
        for &t in &[0.01, 0.1, 1.0, 10.0, 100.0] {
            assert!(solve_levels(&sp(0.0, t), 30).unwrap().is_empty());
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ShallowParams::new(-1.0, 1.0).is_err());
        assert!(ShallowParams::new(1.0, f64::NAN).is_err());
        assert!(solve_level(&sp(1.0, 0.0), 0).is_err());
    }

    #[test]
    fn energy_bounds_and_interlacing() {
        for &t in &[0.01, 0.1, 1.0, 10.0, 100.0] {
            let levels = solve_levels(&sp(PI, t), 50).unwrap();
            assert_eq!(levels.len(), 51);
            for l in &levels {
                let n = l.n as f64;
                assert!(l.energy >= (n + 0.5).powi(2) / 4.0 && l.energy <= (n + 1.0).powi(2) / 4.0);
                let m = (l.n / 2) as f64;
                if l.n % 2 == 0 {
                    assert!(l.k > m + 0.25 && l.k < m + 0.5);
                } else {
                    assert!(l.k > m + 0.75 && l.k < m + 1.0);
                }
                assert!((l.p - l.q * l.alpha.cos()).abs() < 1e-12 * l.q);
                assert!((l.k - l.q * l.alpha.sin()).abs() < 1e-12 * l.q.max(1.0), "{l:?}");
                assert!((2.0 * l.p * l.q - t * t).abs() < 1e-12 * t * t);
            }
        }
    }

    #[test]
    fn unit_example_against_weak_coupling() {
        let l = solve_level(&sp(1.0, 1.0), 0).unwrap().unwrap();
        assert!(l.omega > 0.0 && l.omega < 1.0);
        // exact identity between the level equation and the arcsin form
        let exact = PI / 2.0 - l.alpha;
        assert!((exact - weak_coupling_exact(l.r)).abs() < 1e-12);
        let err = (weak_coupling_eta(l.r) - exact).abs();
        assert!(err < 1.0 / l.r.powi(4), "R = {}, err = {err}", l.r);
    }

    #[test]
    fn weak_coupling_series_ordering() {
        assert!((weak_coupling_eta(10.0) - weak_coupling_exact(10.0)).abs() < 1e-6);
        let e2 = (weak_coupling_eta(2.0) - weak_coupling_exact(2.0)).abs();
        let e10 = (weak_coupling_eta(10.0) - weak_coupling_exact(10.0)).abs();
        assert!(e2 > e10);
        assert!(weak_coupling_eta(1e12) < 1e-11);
    }

    #[test]
    fn strong_coupling_series_ordering() {
        assert!((strong_coupling_series(0.01) - strong_coupling_exact(0.01)).abs() < 1e-6);
        let e = |r: f64| (strong_coupling_series(r) - strong_coupling_exact(r)).abs();
        assert!(e(0.5) > e(0.01));
        assert!(strong_coupling_series(1e-12) < 1e-11);
        let l = solve_level(&sp(PI, 50.0), 0).unwrap().unwrap();
        assert!(((PI * l.omega / 4.0).sin().powi(2) - strong_coupling_exact(l.r)).abs() < 1e-12);
        assert!((strong_coupling_omega(l.r, PI) - l.omega).abs() < 10.0 * l.r * l.r);
    }

    #[test]
    fn slopes_symmetric_without_decay() {
        let mut l = solve_level(&sp(PI, 1.0), 2).unwrap().unwrap();
        l.p = 0.0;
        let (gp, gm) = slope_parameters(&l).unwrap();
        assert!((gp - gm).abs() < 1e-15 && (gp + l.k * l.k / l.q).abs() < 1e-15);
        l.p = l.q;
        assert!(slope_parameters(&l).is_err());
    }

    #[test]
    fn wavefunction_normalisation_and_matching() {
        let p = sp(PI, 1.3);
        for n in 0..6 {
            let l = solve_level(&p, n).unwrap().unwrap();
            assert_eq!(shallow_wavefunction(&l, &p, 0.0), Complex64::new(1.0, 0.0));
            let d0 = shallow_wavefunction_derivative(&l, &p, 0.0);
            assert!((d0 - Complex64::new(0.0, l.slope())).norm() < 1e-15);

            let h = 1e-7;
            let jump = shallow_wavefunction(&l, &p, PI + h) - shallow_wavefunction(&l, &p, PI - h);
            assert!(jump.norm() < 1e-6);
            let inner = shallow_wavefunction_derivative(&l, &p, PI);
            let outer = -Complex64::new(l.p, l.q) * shallow_wavefunction(&l, &p, PI);
            assert!((inner - outer).norm() < 1e-10 * inner.norm().max(1.0), "N = {n}: {inner} vs {outer}");

            let x = 40.0;
            let ratio = shallow_wavefunction(&l, &p, x).norm() / shallow_wavefunction(&l, &p, PI).norm();
            assert!((ratio.ln() + l.p * (x - PI)).abs() < 1e-9);
            assert_eq!(shallow_wavefunction(&l, &p, -1.0), shallow_wavefunction(&l, &p, 1.0).conj());
        }
    }

    #[test]
    fn loglog_fit_recovers_power() {
        let pts: Vec<(f64, f64)> = (1..20).map(|i| (i as f64, 3.0 * (i as f64).powf(-0.5))).collect();
        assert!((loglog_slope(&pts) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn slope_samples_hit_targets() {
        let s = slope_samples(PI, 0, 1e-4, 1e-2, 5).unwrap();
        assert!((s[0].0 / 1e-4 - 1.0).abs() < 1e-9 && (s[4].0 / 1e-2 - 1.0).abs() < 1e-9);
        let gm: Vec<(f64, f64)> = s.iter().map(|x| (x.0, x.2)).collect();
        assert!((loglog_slope(&gm) + 0.5).abs() < 0.05);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn defining_function_is_monotone(ell in 0.5f64..std::f64::consts::TAU, t in 0.05f64..50.0, n in 0u32..30) {
                let p = sp(ell, t);
                let vals: Vec<f64> = (0..=200).map(|i| defining(i as f64 / 200.0, n, &p)).collect();
                prop_assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-15));
            }
        }
    }
}
