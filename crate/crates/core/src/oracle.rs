//! Finite-difference cross-check that shares no code with the analytic solver.
//!
//! The box `(-L, L)` carries `n` interior nodes `x_j = -L + j h`,
//! `h = 2L/(n+1)`, with Dirichlet walls. The characteristic polynomial of the
//! three-point Hamiltonian is evaluated by its three-term recurrence. Because
//! the node set is symmetric and the imaginary potential is odd, reflection
//! maps the matrix to its complex conjugate, so the determinant is real for
//! real `E` and real eigenvalues are ordinary sign changes.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::PhysicalParams;

/// Largest tolerated `|Im det|` relative to the size of the last recurrence terms.
pub const IMAG_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub e_max: f64,
    /// Node counts for extrapolation; empty for none.
    pub refine_levels: Vec<usize>,
}

impl GridSpec {
    pub fn new(n: usize, e_max: f64) -> Result<Self> {
        let g = GridSpec { n, e_max, refine_levels: Vec::new() };
        g.validate()?;
        Ok(g)
    }

    /// Adds the grid with the spacing halved, `n -> 2n + 1`.
    pub fn with_halving(mut self) -> Self {
        self.refine_levels = vec![self.n, 2 * self.n + 1];
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 32 {
            return Err(invalid(format!("grid needs at least 32 nodes, got {}", self.n)));
        }
        if !(self.e_max > 0.0 && self.e_max.is_finite()) {
            return Err(invalid(format!("E_max must be positive, got {}", self.e_max)));
        }
        if let Some(&m) = self.refine_levels.iter().find(|&&m| m < 32) {
            return Err(invalid(format!("refinement level {m} has fewer than 32 nodes")));
        }
        Ok(())
    }

    pub fn spacing(&self, l: f64) -> f64 {
        2.0 * l / (self.n as f64 + 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Worst `|Im det|` ratio seen during the scan.
    pub imag_residual: f64,
    pub h: f64,
    pub n: usize,
    pub extrapolated: Option<Vec<f64>>,
}

/// Determinant in the form `mantissa * 2^exp2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledDet {
    pub mantissa: Complex64,
    pub exp2: i64,
    /// `|Im|` relative to the size of the final recurrence terms.
    pub imag_ratio: f64,
}

impl ScaledDet {
    pub fn value(&self) -> Complex64 {
        self.mantissa * 2f64.powi(self.exp2.clamp(i32::MIN as i64, i32::MAX as i64) as i32)
    }
}

/// Imaginary potential averaged over the cell `[x - h/2, x + h/2]`.
fn cell_potential(p: &PhysicalParams, x: f64, h: f64) -> f64 {
    let (a, b) = (x - h / 2.0, x + h / 2.0);
    let right = (b - a.max(p.ell)).max(0.0);
    let left = (b.min(-p.ell) - a).max(0.0);
    (p.g * (right - left) / h).clamp(-p.g.abs(), p.g.abs())
}

fn potentials(p: &PhysicalParams, n: usize) -> (Vec<f64>, f64) {
    let h = 2.0 * p.l / (n as f64 + 1.0);
    let mut w: Vec<f64> = (1..=n).map(|j| cell_potential(p, -p.l + j as f64 * h, h)).collect();
    // exact antisymmetry regardless of rounding in the node positions
    for j in 0..n / 2 {
        let v = 0.5 * (w[j] - w[n - 1 - j]);
        w[j] = v;
        w[n - 1 - j] = -v;
    }
    if n % 2 == 1 {
        w[n / 2] = 0.0;
    }
    (w, h)
}

fn det_from(w: &[f64], h: f64, e: f64) -> ScaledDet {
    const BIG: f64 = 1.157_920_892_373_162e77; // 2^256
    const SMALL: f64 = 1.0 / BIG;
    let h2 = h * h;
    let mut prev2 = Complex64::new(0.0, 0.0);
    let mut prev = Complex64::new(1.0, 0.0);
    let mut exp2: i64 = 0;
    let mut last_terms = 1.0;
    for &wj in w {
        let d = Complex64::new(2.0 - h2 * e, h2 * wj);
        let a = d * prev;
        let cur = a - prev2;
        last_terms = a.norm() + prev2.norm();
        prev2 = prev;
        prev = cur;
        let m = prev.norm().max(prev2.norm());
        if m > BIG {
            prev *= SMALL;
            prev2 *= SMALL;
            last_terms *= SMALL;
            exp2 += 256;
        } else if m < SMALL && m > 0.0 {
            prev *= BIG;
            prev2 *= BIG;
            last_terms *= BIG;
            exp2 -= 256;
        }
    }
    ScaledDet { mantissa: prev, exp2, imag_ratio: prev.im.abs() / last_terms.max(f64::MIN_POSITIVE) }
}

/// Characteristic determinant of `h^2 (H - E)`, a positive multiple of
/// `det(H - E)`, with its binary exponent split off.
pub fn char_det_scaled(e: f64, params: &PhysicalParams, grid: &GridSpec) -> Result<ScaledDet> {
    params.validate()?;
    grid.validate()?;
    let (w, h) = potentials(params, grid.n);
    Ok(det_from(&w, h, e))
}

/// Characteristic determinant of `h^2 (H - E)`; overflows for large grids, see
/// [`char_det_scaled`].
pub fn char_det(e: f64, params: &PhysicalParams, grid: &GridSpec) -> Result<Complex64> {
    Ok(char_det_scaled(e, params, grid)?.value())
}

fn scan(params: &PhysicalParams, n: usize, e_max: f64) -> Result<(Vec<f64>, f64, f64)> {
    let (w, h) = potentials(params, n);
    let l = params.l;
    // half of the local level spacing, quartered again for margin
    let mut es = vec![0.0];
    let mut e = 0.0;
    while e < e_max {
        let m = (2.0 * l * e.sqrt() / PI).floor();
        let gap = PI * PI * (2.0 * m + 1.0) / (4.0 * l * l);
        e = (e + gap / 8.0).min(e_max);
        es.push(e);
    }
    let dets: Vec<ScaledDet> = es.par_iter().map(|&e| det_from(&w, h, e)).collect();
    let mut worst = 0.0f64;
    for (&e, d) in es.iter().zip(&dets) {
        if d.imag_ratio > IMAG_TOLERANCE {
            return Err(Error::BrokenSymmetry { energy: e, ratio: d.imag_ratio });
        }
        worst = worst.max(d.imag_ratio);
    }

    let brackets: Vec<(f64, f64, f64)> = es
        .windows(2)
        .zip(dets.windows(2))
        .filter(|(_, d)| (d[0].mantissa.re > 0.0) != (d[1].mantissa.re > 0.0))
        .map(|(e, d)| (e[0], e[1], d[0].mantissa.re))
        .collect();
    let eigen: Vec<f64> = brackets
        .par_iter()
        .map(|&(mut a, mut b, fa)| {
            while b - a > 1e-14 * b.max(1.0) {
                let m = 0.5 * (a + b);
                let fm = det_from(&w, h, m).mantissa.re;
                if fm == 0.0 {
                    return m;
                }
                if (fm > 0.0) == (fa > 0.0) {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        })
        .collect();
    Ok((eigen, worst, h))
}

/// Real eigenvalues below `grid.e_max`, with Richardson extrapolation over the
/// two finest refinement levels when any are given.
pub fn oracle_spectrum(params: &PhysicalParams, grid: &GridSpec) -> Result<OracleSpectrum> {
    params.validate()?;
    grid.validate()?;
    let (eigenvalues, mut worst, h) = scan(params, grid.n, grid.e_max)?;

    let mut levels = grid.refine_levels.clone();
    levels.sort_unstable();
    levels.dedup();
    let extrapolated = if levels.len() >= 2 {
        let (n1, n2) = (levels[levels.len() - 2], levels[levels.len() - 1]);
        let (e1, w1, h1) = if n1 == grid.n { (eigenvalues.clone(), worst, h) } else { scan(params, n1, grid.e_max)? };
        let (e2, w2, h2) = if n2 == grid.n { (eigenvalues.clone(), worst, h) } else { scan(params, n2, grid.e_max)? };
        worst = worst.max(w1).max(w2);
        Some(richardson(&e1, h1, &e2, h2))
    } else {
        None
    };
    Ok(OracleSpectrum { eigenvalues, imag_residual: worst, h, n: grid.n, extrapolated })
}

/// Eliminates the `h^2` term from two sequences computed at spacings `h1 > h2`.
pub fn richardson(coarse: &[f64], h1: f64, fine: &[f64], h2: f64) -> Vec<f64> {
    let (a, b) = (h1 * h1, h2 * h2);
    coarse.iter().zip(fine).map(|(&ec, &ef)| (ef * a - ec * b) / (a - b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(l: f64, ell: f64, g: f64) -> PhysicalParams {
        PhysicalParams::new(l, ell, g).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(31, 10.0).is_err());
        assert!(GridSpec::new(64, 0.0).is_err());
        let g = GridSpec { n: 64, e_max: 1.0, refine_levels: vec![8] };
        assert!(g.validate().is_err());
        assert_eq!(GridSpec::new(64, 1.0).unwrap().with_halving().refine_levels, vec![64, 129]);
    }

    #[test]
    fn cell_average_is_antisymmetric() {
        let p = pp(1.0, 0.37, 3.0);
        for n in [33, 64, 101] {
            let (w, _) = potentials(&p, n);
            for j in 0..n {
                assert_eq!(w[j], -w[n - 1 - j]);
            }
            assert!(w.iter().all(|&v| v.abs() <= 3.0));
        }
    }

    #[test]
    fn hermitian_determinant_zeros_are_discrete_laplacian() {
        let p = pp(1.0, 0.5, 0.0);
        let grid = GridSpec::new(63, 60.0).unwrap();
        let h = grid.spacing(1.0);
        let s = oracle_spectrum(&p, &grid).unwrap();
        assert!(s.eigenvalues.len() >= 4);
        for (m, &e) in s.eigenvalues.iter().enumerate() {
            let m = (m + 1) as f64;
            let exact = 2.0 / (h * h) * (1.0 - (m * PI * h / 2.0).cos());
            assert!((e - exact).abs() < 1e-10 * exact, "{e} vs {exact}");
        }
        let d = char_det(3.0, &p, &grid).unwrap();
        assert_eq!(d.im, 0.0);
    }

    #[test]
    fn determinant_is_real_under_pt_symmetry() {
        let p = pp(1.0, 0.3, 5.0);
        let grid = GridSpec::new(200, 80.0).unwrap();
        let mut x = 0.4f64;
        for _ in 0..50 {
            x = (x * 9.7 + 0.13).fract();
            let d = char_det_scaled(80.0 * x, &p, &grid).unwrap();
            assert!(d.imag_ratio < 1e-10, "E = {}: {}", 80.0 * x, d.imag_ratio);
        }
    }

    #[test]
    fn no_sign_change_below_the_spectrum() {
        let p = pp(1.0, 0.5, 4.0);
        let grid = GridSpec::new(100, 1.0).unwrap();
        let signs: Vec<bool> =
            (0..20).map(|i| char_det_scaled(-10.0 + i as f64 * 0.5, &p, &grid).unwrap().mantissa.re > 0.0).collect();
        assert!(signs.iter().all(|&s| s == signs[0]));
    }

    #[test]
    fn large_grids_do_not_overflow() {
        let p = pp(1.0, 0.5, 1.0);
        let grid = GridSpec::new(5000, 10.0).unwrap();
        let d = char_det_scaled(7.0, &p, &grid).unwrap();
        assert!(d.mantissa.norm().is_finite() && d.mantissa.norm() > 0.0);
    }

    #[test]
    fn second_order_convergence_and_extrapolation() {
        let p = pp(1.0, 0.5, 0.0);
        let exact: Vec<f64> = (1..=5).map(|n| (n * n) as f64 * PI * PI / 4.0).collect();
        let grid = GridSpec::new(100, 65.0).unwrap().with_halving();
        let s = oracle_spectrum(&p, &grid).unwrap();
        let coarse = &s.eigenvalues;
        let fine = oracle_spectrum(&p, &GridSpec::new(201, 65.0).unwrap()).unwrap().eigenvalues;
        let ext = s.extrapolated.unwrap();
        for i in 0..5 {
            let e1 = (coarse[i] - exact[i]).abs();
            let e2 = (fine[i] - exact[i]).abs();
            let order = (e1 / e2).log2();
            assert!((1.8..=2.2).contains(&order), "level {i}: order {order}");
            assert!((ext[i] - exact[i]).abs() * 10.0 < e2);
        }
    }

    #[test]
    fn broken_symmetry_is_detected() {
        let p = pp(1.0, 0.3, 5.0);
        let (mut w, h) = potentials(&p, 100);
        w[0] += 1.0;
        assert!(det_from(&w, h, 10.0).imag_ratio > IMAG_TOLERANCE);
    }
}
