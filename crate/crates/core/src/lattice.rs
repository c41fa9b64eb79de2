//! Moving-lattice coordinates and bracket generation.
//!
//! Writing `tau = pi (N + t)` and `rho = lambda R = pi (K + r)` splits both
//! angles into an integer band index and a periodic phase. At fixed phases the
//! zero set of the secular function becomes an explicit map `sigma -> R`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::ScaledParams;
use crate::secular::tau_of_r;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeCoords {
    pub n: u32,
    pub t: f64,
    pub k: u32,
    pub r: f64,
}

impl LatticeCoords {
    pub fn new(n: u32, t: f64, k: u32, r: f64) -> Result<Self> {
        check_phase("t", t)?;
        check_phase("r", r)?;
        Ok(LatticeCoords { n, t, k, r })
    }

    pub fn tau(&self) -> f64 {
        PI * (self.n as f64 + self.t)
    }

    pub fn rho(&self) -> f64 {
        PI * (self.k as f64 + self.r)
    }

    pub fn constants(&self) -> Result<TrigConstants> {
        trig_constants(self.t, self.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigConstants {
    pub psi: f64,
    pub phi: f64,
    pub xi: f64,
}

fn check_phase(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(invalid(format!("phase {name} must lie in (0, 1), got {v}")));
    }
    Ok(())
}

/// `Psi = sin 2 pi t`, `Phi = cos 2 pi t`, `Xi = -tan 2 pi r`.
pub fn trig_constants(t: f64, r: f64) -> Result<TrigConstants> {
    check_phase("t", t)?;
    check_phase("r", r)?;
    let (s, c) = (2.0 * PI * r).sin_cos();
    if c.abs() < 1e-12 {
        return Err(invalid(format!("r = {r} sits on a pole of tan(2 pi r)")));
    }
    let (psi, phi) = (2.0 * PI * t).sin_cos();
    Ok(TrigConstants { psi, phi, xi: -s / c })
}

/// Zero curve of the secular function at fixed phases:
/// `R = Xi (sigma^4 cosh 2sigma + Z^2 Phi) / (sigma^3 sinh 2sigma + sigma Z Psi)`.
pub fn lattice_map_r(sigma: f64, consts: &TrigConstants, z: f64) -> Result<f64> {
    let a = sigma.abs();
    let w = (-2.0 * a).exp();
    let ch = 0.5 * (1.0 + w * w);
    let sh = -0.5 * (-4.0 * a).exp_m1() * sigma.signum();
    let num = sigma.powi(4) * ch + z * z * consts.phi * w;
    let den = sigma.powi(3) * sh + sigma * z * consts.psi * w;
    let scale = sigma.powi(4) * ch + (sigma * z).abs() * w;
    if !(den.abs() > 1e-14 * scale) {
        return Err(invalid(format!("lattice map denominator vanishes at sigma = {sigma}")));
    }
    Ok(consts.xi * num / den)
}

/// Ordered, contiguous intervals covering `(0, r_max]`.
///
/// Endpoints include every zero of `sin 2 lambda R` and `cos 2 lambda R` and
/// every point where `tau(R)` crosses a multiple of `pi/2`; no interval is
/// wider than `min(pi, pi/lambda)/16`.
pub fn bracket_hints(params: &ScaledParams, r_max: f64) -> Vec<(f64, f64)> {
    bracket_hints_refined(params, r_max, 1)
}

/// As [`bracket_hints`] with the width bound divided by `refine`.
pub fn bracket_hints_refined(params: &ScaledParams, r_max: f64, refine: usize) -> Vec<(f64, f64)> {
    if !(r_max > 0.0) {
        return Vec::new();
    }
    let refine = refine.max(1) as f64;
    let lambda = params.lambda;
    let z = params.z;
    let mut pts = vec![0.0, r_max];

    if lambda > 0.0 {
        let step = PI / (4.0 * lambda);
        let count = (r_max / step).floor() as usize;
        pts.extend((1..=count).map(|m| m as f64 * step));
    }

    // tau(R)^2 = R^2 + sigma^2 with sigma tau = Z, so R^2 = tau^2 - Z^2/tau^2
    let tau_lo = tau_of_r(0.0, z);
    let tau_hi = tau_of_r(r_max, z);
    let first = (tau_lo / (PI / 2.0)).floor() as usize + 1;
    let last = (tau_hi / (PI / 2.0)).floor() as usize;
    for n in first..=last {
        let tau = n as f64 * PI / 2.0;
        let r2 = tau * tau - (z / tau).powi(2);
        if r2 > 0.0 {
            pts.push(r2.sqrt());
        }
    }

    pts.retain(|&p| p >= 0.0 && p <= r_max);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * r_max);

    let width = PI.min(PI / lambda.max(f64::MIN_POSITIVE)) / 16.0 / refine;
    let mut out = Vec::with_capacity((r_max / width) as usize + pts.len());
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = ((b - a) / width - 1e-9).ceil().max(1.0) as usize;
        for i in 0..pieces {
            let lo = a + (b - a) * i as f64 / pieces as f64;
            let hi = if i + 1 == pieces { b } else { a + (b - a) * (i + 1) as f64 / pieces as f64 };
            out.push((lo, hi));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::secular::{eval_m, eval_n, SigmaTau};

    #[test]
    fn constants_examples() {
        let c = trig_constants(0.25, 0.1).unwrap();
        assert!((c.psi - 1.0).abs() < 1e-15 && c.phi.abs() < 1e-15);
        let c = trig_constants(0.5, 0.1).unwrap();
        assert!(c.psi.abs() < 1e-15 && (c.phi + 1.0).abs() < 1e-15);
        let c = trig_constants(0.3, 0.125).unwrap();
        assert!((c.xi + 1.0).abs() < 1e-15);
        assert!(trig_constants(0.3, 0.25).is_err());
        assert!(trig_constants(0.3, 0.75).is_err());
        assert!(trig_constants(0.0, 0.1).is_err());
        assert!(trig_constants(0.5, 1.0).is_err());
    }

    #[test]
    fn constants_are_periodic_in_band_indices() {
        let base = LatticeCoords::new(0, 0.37, 0, 0.11).unwrap().constants().unwrap();
        for (n, k) in [(1, 0), (0, 3), (7, 2), (40, 40)] {
            let c = LatticeCoords::new(n, 0.37, k, 0.11).unwrap();
            assert_eq!(c.constants().unwrap(), base);
            assert!((c.tau() - PI * (n as f64 + 0.37)).abs() < 1e-12);
            assert!(((2.0 * c.rho()).tan() + base.xi).abs() < 1e-9 * (1.0 + base.xi.abs()));
        }
    }

    #[test]
    fn map_limits() {
        // mpmath: coth 2
        let c = TrigConstants { psi: 0.3, phi: 0.2, xi: 1.0 };
        let r = lattice_map_r(1.0, &c, 0.0).unwrap();
        assert!((r - 1.037_314_720_727_548_1).abs() < 1e-14);

        let c = trig_constants(0.2, 0.1).unwrap();
        let r = lattice_map_r(300.0, &c, 2.0).unwrap();
        assert!((r / (c.xi * 300.0) - 1.0).abs() < 1e-3);
        let r = lattice_map_r(1000.0, &c, 2.0).unwrap();
        assert!(r.is_finite() && (r / (c.xi * 1000.0) - 1.0).abs() < 1e-3);

        let (z, s) = (1.5, 1e-4);
        let r = lattice_map_r(s, &c, z).unwrap();
        let approx = (z / s) * c.phi * c.xi / c.psi;
        assert!((r / approx - 1.0).abs() < 1e-3);

        assert!(lattice_map_r(0.0, &c, 1.0).is_err());
    }

    #[test]
    fn map_agrees_with_ratio_form() {
        let z = 1.7;
        for &rr in &[0.05, 0.3, 0.6, 0.95] {
            for &sigma in &[0.2, 0.8, 1.5, 3.0] {
                let tau = z / sigma;
                let t = (tau / PI).fract();
                let c = trig_constants(t, rr).unwrap();
                let st = SigmaTau::new(sigma, tau);
                let direct = c.xi * eval_n(st) / eval_m(st);
                let mapped = lattice_map_r(sigma, &c, z).unwrap();
                assert!(
                    (mapped - direct).abs() < 1e-10 * direct.abs().max(1e-300),
                    "{rr} {sigma}: {mapped} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn hint_widths() {
        let p = ScaledParams::unit(0.0, 0.0).unwrap();
        let h = bracket_hints(&p, 10.0);
        assert!(h.iter().all(|(a, b)| b - a <= PI / 16.0 + 1e-12));
        assert_eq!(h.first().unwrap().0, 0.0);
        assert_eq!(h.last().unwrap().1, 10.0);
        assert!(h.windows(2).all(|w| w[0].1 == w[1].0));

        let p = ScaledParams::unit(4.0, 1.0).unwrap();
        let h = bracket_hints(&p, 10.0);
        assert!(h.iter().all(|(a, b)| b - a <= PI / 64.0 + 1e-12));

        let h2 = bracket_hints_refined(&p, 10.0, 2);
        assert!(h2.len() > h.len() && h2.iter().all(|(a, b)| b - a <= PI / 128.0 + 1e-12));
        assert!(bracket_hints(&p, 0.0).is_empty());
    }

    #[test]
    fn hints_contain_pole_and_band_points() {
        let p = ScaledParams::unit(1.0, 2.0).unwrap();
        let h = bracket_hints(&p, 8.0);
        let ends: Vec<f64> = h.iter().map(|x| x.1).collect();
        for m in 1..10 {
            let r = m as f64 * PI / 4.0;
            assert!(ends.iter().any(|&e| (e - r).abs() < 1e-12), "missing {r}");
        }
        for n in 2..5 {
            let tau = n as f64 * PI / 2.0;
            let r = (tau * tau - (2.0 / tau).powi(2)).sqrt();
            assert!(ends.iter().any(|&e| (e - r).abs() < 1e-12), "missing tau band {r}");
        }
    }
}
