//! Real bound states at a fixed parameter point.
//!
//! The pole-free secular function is sampled on the lattice brackets, every
//! sign change is bisected and polished, and candidates are kept only if the
//! matching matrix is numerically singular there. A second pass looks for
//! pairs of roots hiding inside one bracket (the situation just before two
//! levels merge).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::lattice::bracket_hints_refined;
use crate::model::ScaledParams;
use crate::secular::{
    matching_residual, secular_det_r, secular_det_r_derivative, secular_magnitude, secular_reduced, sigma_tau_of_r,
    RootTriple, ACCEPT_RESIDUAL,
};

/// Roots closer than this in `R` are the same root.
pub const DEDUP_TOLERANCE: f64 = 1e-9;

/// A same-sign minimum of the secular function below this fraction of its
/// local magnitude is reported as a near-exceptional pair.
pub const TANGENCY_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Robust,
    Fragile,
    #[default]
    Unknown,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::Robust => "robust",
            Stability::Fragile => "fragile",
            Stability::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub r: f64,
    pub sigma: f64,
    pub tau: f64,
    pub energy: f64,
    pub residual: f64,
    /// 1 for the lowest level.
    pub index: usize,
    pub stability: Stability,
    /// Critical coupling of a fragile level, when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_z: Option<f64>,
}

impl Root {
    pub fn triple(&self) -> RootTriple {
        RootTriple { r: self.r, sigma: self.sigma, tau: self.tau }
    }
}

/// A same-sign dip of the secular function that almost touches zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearExceptional {
    pub r: f64,
    /// `|D| / magnitude` at the bottom of the dip.
    pub relative_value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub brackets: usize,
    pub sign_changes: usize,
    pub rejected: usize,
    /// Roots recovered from pairs sharing a single bracket.
    pub tangency_roots: usize,
    pub near_exceptional: Vec<NearExceptional>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub params: ScaledParams,
    pub r_max: f64,
    pub roots: Vec<Root>,
    pub diagnostics: Diagnostics,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn r_values(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.r).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Divides the bracket width bound.
    pub refine: usize,
    pub accept_residual: f64,
    pub probe_tangencies: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { refine: 1, accept_residual: ACCEPT_RESIDUAL, probe_tangencies: true }
    }
}

/// Window wide enough to hold at least eight levels.
pub fn default_r_max(lambda: f64) -> f64 {
    8.5 * PI / lambda.max(1.0)
}

pub fn scan_roots(params: &ScaledParams, r_max: f64) -> Spectrum {
    scan_roots_with(params, r_max, &ScanOptions::default())
}

pub fn scan_roots_with(params: &ScaledParams, r_max: f64, opts: &ScanOptions) -> Spectrum {
    let mut diag = Diagnostics::default();
    let hints = bracket_hints_refined(params, r_max, opts.refine);
    diag.brackets = hints.len();
    if hints.is_empty() {
        return Spectrum { params: *params, r_max, roots: Vec::new(), diagnostics: diag };
    }

    let f = |r: f64| secular_reduced(r, params);
    let xs: Vec<f64> = std::iter::once(hints[0].0).chain(hints.iter().map(|h| h.1)).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();

    let mut candidates = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for (&x, &v) in xs.iter().zip(&fs) {
        if v == 0.0 {
            if x > 0.0 {
                candidates.push(x);
            }
            prev = None;
            continue;
        }
        if let Some((px, pv)) = prev {
            if (pv > 0.0) != (v > 0.0) {
                diag.sign_changes += 1;
                candidates.push(refine_root(params, px, x));
            }
        }
        prev = Some((x, v));
    }

    if opts.probe_tangencies {
        for i in 1..xs.len().saturating_sub(1) {
            let (a, b, c) = (fs[i - 1], fs[i], fs[i + 1]);
            let same = (a > 0.0) == (b > 0.0) && (b > 0.0) == (c > 0.0) && a != 0.0 && b != 0.0 && c != 0.0;
            if !(same && b.abs() < a.abs() && b.abs() < c.abs()) {
                continue;
            }
            let s = b.signum();
            let (lo, hi) = (xs[i - 1], xs[i + 1]);
            let xm = golden_min(|r| s * f(r), lo, hi);
            let vm = f(xm);
            if vm == 0.0 || (vm > 0.0) != (s > 0.0) {
                if vm == 0.0 {
                    candidates.push(xm);
                } else {
                    candidates.push(refine_root(params, lo, xm));
                    candidates.push(refine_root(params, xm, hi));
                }
                diag.tangency_roots += 2;
            } else {
                let rel = (vm * xm).abs() / secular_magnitude(xm, params).max(f64::MIN_POSITIVE);
                if rel < TANGENCY_THRESHOLD {
                    diag.near_exceptional.push(NearExceptional { r: xm, relative_value: rel });
                }
            }
        }
    }

    // a root sitting on the far edge belongs to the next window
    candidates.retain(|&r| r < r_max * (1.0 - 1e-12));
    candidates.sort_by(f64::total_cmp);
    candidates.dedup_by(|a, b| (*a - *b).abs() < DEDUP_TOLERANCE);

    let mut roots = Vec::with_capacity(candidates.len());
    for r in candidates {
        let triple = RootTriple::from_r(r, params.z);
        match matching_residual(&triple, params) {
            Ok(res) if res < opts.accept_residual => roots.push(Root {
                r,
                sigma: triple.sigma,
                tau: triple.tau,
                energy: params.energy(r),
                residual: res,
                index: roots.len() + 1,
                stability: Stability::Unknown,
                critical_z: None,
            }),
            _ => diag.rejected += 1,
        }
    }
    Spectrum { params: *params, r_max, roots, diagnostics: diag }
}

/// The `lambda = 0` problem `sigma sinh 2sigma + tau sin 2tau = 0`.
pub fn solve_nsw(z: f64, r_max: f64) -> crate::error::Result<Vec<Root>> {
    let p = ScaledParams::unit(0.0, z)?;
    Ok(scan_roots(&p, r_max).roots)
}

pub fn count_real_roots(params: &ScaledParams, r_max: f64) -> usize {
    scan_roots(params, r_max).len()
}

/// Bisection on `[a, b]` followed by a safeguarded Newton polish.
pub(crate) fn refine_root(params: &ScaledParams, a: f64, b: f64) -> f64 {
    let f = |r: f64| secular_det_r(r, params);
    let (mut lo, mut hi) = (a, b);
    let mut flo = f(lo);
    if a == 0.0 {
        // D vanishes trivially at R = 0; the reduced function carries the sign
        flo = secular_reduced(0.0, params);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * mid.max(1.0) || mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    let mut fx = f(x).abs();
    for _ in 0..4 {
        let d = secular_det_r_derivative(x, params);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = f(x) / d;
        let next = x - step;
        if !(next >= lo && next <= hi) {
            break;
        }
        let fn_ = f(next).abs();
        if fn_ >= fx {
            break;
        }
        x = next;
        fx = fn_;
        if step.abs() <= 1e-16 * x {
            break;
        }
    }
    x
}

/// Golden-section minimiser of a unimodal function on `[a, b]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-13 * b.abs().max(1.0) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Roots of the secular function as `(sigma, tau)` on the constraint curve,
/// for callers that only hold `R`.
pub fn root_from_r(r: f64, params: &ScaledParams, index: usize) -> Option<Root> {
    let st = sigma_tau_of_r(r, params.z);
    let triple = RootTriple { r, sigma: st.sigma, tau: st.tau };
    let residual = matching_residual(&triple, params).ok()?;
    Some(Root {
        r,
        sigma: st.sigma,
        tau: st.tau,
        energy: params.energy(r),
        residual,
        index,
        stability: Stability::Unknown,
        critical_z: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{scale_params, PhysicalParams};

    #[test]
    fn hermitian_example() {
        let p = scale_params(&PhysicalParams::new(1.0, 0.5, 0.0).unwrap()).unwrap();
        let s = scan_roots(&p, 10.0);
        assert!(s.len() >= 6);
        for (i, root) in s.roots.iter().enumerate() {
            let n = (i + 1) as f64;
            assert_eq!(root.index, i + 1);
            assert!((root.r - n * PI / 4.0).abs() < 1e-12 * root.r);
            assert!((root.energy - n * n * PI * PI / 4.0).abs() < 1e-11 * root.energy);
        }
        assert_eq!(s.len(), (10.0 / (PI / 4.0)) as usize);
    }

    #[test]
    fn nsw_hermitian_limit() {
        let roots = solve_nsw(0.0, 10.0).unwrap();
        assert_eq!(roots.len(), 6);
        for (i, r) in roots.iter().enumerate() {
            assert!((r.tau - (i + 1) as f64 * PI / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nsw_matches_small_lambda() {
        let nsw = solve_nsw(1.0, 12.0).unwrap();
        let s = scan_roots(&ScaledParams::unit(1e-8, 1.0).unwrap(), 12.0);
        assert_eq!(nsw.len(), s.len());
        for (a, b) in nsw.iter().zip(&s.roots) {
            assert!((a.r - b.r).abs() < 1e-6);
        }
        let s = scan_roots(&ScaledParams::unit(1e-6, 1.0).unwrap(), 12.0);
        for (a, b) in nsw.iter().zip(&s.roots) {
            assert!((a.r - b.r).abs() < 1e-4);
        }
    }

    #[test]
    fn nsw_lowest_pair_merges_near_critical_coupling() {
        let below = solve_nsw(2.2, 4.0).unwrap();
        let above = solve_nsw(2.28, 4.0).unwrap();
        assert!(below.len() >= 2);
        assert_eq!(below.len(), above.len() + 2);
        assert!((below[1].r - below[0].r) < 0.6);
    }

    #[test]
    fn counts_across_the_merger() {
        let p = ScaledParams::unit(1.0, 0.0).unwrap();
        assert_eq!(count_real_roots(&p, PI), 3);
        // a pair appears near lambda = 1.3 and another pair merges near 1.5
        let w = 2.9;
        let count = |lambda: f64| count_real_roots(&ScaledParams::unit(lambda, 2.0).unwrap(), w);
        assert_eq!(count(1.25), 2);
        assert_eq!(count(1.45), 4);
        assert_eq!(count(1.55), 2);
    }

    #[test]
    fn tangency_probe_recovers_close_pairs() {
        // a pair just before merging: lambda slightly below its exceptional value
        let p = ScaledParams::unit(1e-6, 2.234).unwrap();
        let s = scan_roots(&p, 4.0);
        assert!(s.len() >= 2);
        assert!(s.roots[1].r - s.roots[0].r < 0.2);
        let coarse = scan_roots_with(&p, 4.0, &ScanOptions { probe_tangencies: false, ..Default::default() });
        assert!(coarse.len() <= s.len());
    }

    #[test]
    fn spectrum_window_and_ordering() {
        let s = scan_roots(&ScaledParams::unit(2.4, 1.0).unwrap(), 6.0);
        assert!(s.roots.windows(2).all(|w| w[1].r - w[0].r > DEDUP_TOLERANCE));
        assert!(s.roots.iter().all(|r| r.r > 0.0 && r.r <= 6.0));
        assert_eq!(scan_roots(&ScaledParams::unit(1.0, 1.0).unwrap(), 0.0).len(), 0);
    }

    #[test]
    fn default_window() {
        assert!((default_r_max(0.0) - 8.5 * PI).abs() < 1e-15);
        assert!((default_r_max(20.0) - 8.5 * PI / 20.0).abs() < 1e-15);
        let p = ScaledParams::unit(20.0, 0.0).unwrap();
        assert!(count_real_roots(&p, default_r_max(20.0)) >= 8);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn accepted_roots_are_consistent(lambda in 0.01f64..5.0, z in 0.01f64..10.0) {
                let p = ScaledParams::unit(lambda, z).unwrap();
                let s = scan_roots(&p, default_r_max(lambda));
                for r in &s.roots {
                    prop_assert!(r.tau > r.sigma && r.sigma > 0.0 && r.energy > 0.0);
                    let scale = 1f64.max(z).max(r.r * r.r);
                    prop_assert!((r.sigma * r.tau - z).abs() < 1e-10 * scale);
                    prop_assert!((r.tau * r.tau - r.sigma * r.sigma - r.r * r.r).abs() < 1e-10 * scale);
                    prop_assert!(r.residual < ACCEPT_RESIDUAL);
                }
            }

            #[test]
            fn refining_never_removes_roots(lambda in 0.0f64..4.0, z in 0.0f64..8.0) {
                let p = ScaledParams::unit(lambda, z).unwrap();
                let r_max = default_r_max(lambda);
                let a = scan_roots(&p, r_max);
                let b = scan_roots_with(&p, r_max, &ScanOptions { refine: 2, ..Default::default() });
                for r in &a.roots {
                    prop_assert!(b.roots.iter().any(|q| (q.r - r.r).abs() < 1e-8), "lost {}", r.r);
                }
            }
        }
    }
}
