//! Self-consistent mean-field steady state.
//!
//! The intracavity amplitudes depend on the static displacement only
//! through the optical shift `u = g·x̄`. The steady state is a real root of
//!
//! ```text
//! F(u) = u − K·(|ā_cw(u)|² + |ā_ccw(u)|²),   K = ħ g² / (m ωm²).
//! ```
//!
//! All roots are bracketed on a scan of `[0, u_max]` and refined with
//! Brent's method; the smallest root is the operating branch.

use num_complex::Complex64;
use roots::{find_root_brent, Convergency};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{drive_amplitudes, Cavity, Drive, HBAR};

const DENOMINATOR_EPS: f64 = 1e-14;
const ROOT_TOLERANCE: f64 = 1e-12;
const MAX_SCAN_POINTS: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub a_cw: Complex64,
    pub a_ccw: Complex64,
    /// Static displacement [m].
    pub x_bar: f64,
    /// Optical shift g·x̄ [rad/s].
    pub u: f64,
    /// Every real root of F found on `[0, u_max]`, ascending.
    pub all_roots: Vec<f64>,
    /// F(u) at the operating root [rad/s].
    pub residual: f64,
}

impl SteadyState {
    pub fn multistable(&self) -> bool {
        self.all_roots.len() > 1
    }

    pub fn intensity(&self) -> f64 {
        self.a_cw.norm_sqr() + self.a_ccw.norm_sqr()
    }
}

/// Radiation-pressure constant K = ħ g² / (m ωm²) [rad/s per photon].
pub fn radiation_pressure_constant(cavity: &Cavity) -> f64 {
    let p = &cavity.params;
    let g = p.g();
    HBAR * g * g / (p.mass * p.omega_m * p.omega_m)
}

/// Mean intracavity amplitudes at a prescribed optical shift `u`.
pub fn intracavity_steady(cavity: &Cavity, drive: &Drive, u: f64) -> Result<(Complex64, Complex64)> {
    let (ec, _) = drive_amplitudes(drive)?;
    amplitudes(cavity, drive, ec, u)
}

fn amplitudes(cavity: &Cavity, drive: &Drive, ec: f64, u: f64) -> Result<(Complex64, Complex64)> {
    let p = &cavity.params;
    let i = Complex64::i();
    let delta = drive.pump_detuning(p) + p.j;
    let d = Complex64::new(cavity.rates.gamma_half, delta - u);
    let s3 = cavity.loop_coupling();
    let j = p.j;
    let den = d * d + s3 * s3 + j * j;
    let scale = d.norm_sqr() + j * j + s3.norm_sqr();
    if den.norm() < DENOMINATOR_EPS * scale {
        return Err(Error::SingularDenominator { u });
    }
    let (r1, r2) = (p.gamma1.sqrt(), p.gamma2.sqrt());
    let t1 = cavity.rates.t1;
    let a_cw = ec * (r1 * d - t1 * r2 * (s3 + i * j)) / den;
    let a_ccw = ec * (t1 * r2 * d + r1 * (s3 - i * j)) / den;
    Ok((a_cw, a_ccw))
}

struct Tolerance {
    f_tol: f64,
    x_tol: f64,
    max_iter: usize,
}

impl Convergency<f64> for Tolerance {
    fn is_root_found(&mut self, y: f64) -> bool {
        y.abs() <= self.f_tol
    }

    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        (x1 - x2).abs() <= self.x_tol
    }

    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter >= self.max_iter
    }
}

/// Upper edge of the bracketing interval: every root satisfies
/// `u = K·I(u) ≤ K·sup I`, and the intensity peaks near the optical
/// resonances `u ≈ Δ`.
fn scan_limit(cavity: &Cavity, drive: &Drive, ec: f64, k: f64, gamma: f64, linewidth: f64) -> Result<f64> {
    let p = &cavity.params;
    let intensity = |u: f64| amplitudes(cavity, drive, ec, u).map(|(a, b)| a.norm_sqr() + b.norm_sqr());
    let delta = drive.pump_detuning(p) + p.j;
    let half_width = p.j + cavity.loop_coupling().norm() + 20.0 * gamma;
    let step = linewidth / 16.0;
    let n = ((2.0 * half_width / step).ceil() as usize).clamp(2, 200_000);
    let mut sup = intensity(0.0)?;
    for idx in 0..=n {
        let u = delta - half_width + 2.0 * half_width * idx as f64 / n as f64;
        if u >= 0.0 {
            sup = sup.max(intensity(u)?);
        }
    }
    let mut u_max = 2.0 * k * sup + gamma;
    let f = |u: f64| intensity(u).map(|i| u - k * i);
    let mut doublings = 0;
    while f(u_max)? <= 0.0 {
        u_max *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::NoConvergence {
                best_residual: f(u_max)?.abs(),
            });
        }
    }
    Ok(u_max)
}

/// Narrowest optical linewidth over all shifts: γ − |Im √(J² + s3²)|, floored at 1e-3 γ.
fn narrowest_linewidth(cavity: &Cavity) -> f64 {
    let s3 = cavity.loop_coupling();
    let j = cavity.params.j;
    let q = (s3 * s3 + j * j).sqrt();
    let gamma = cavity.rates.gamma_half;
    (gamma - q.im.abs()).max(1e-3 * gamma)
}

pub fn solve_steady(cavity: &Cavity, drive: &Drive) -> Result<SteadyState> {
    let p = &cavity.params;
    let (ec, _) = drive_amplitudes(drive)?;
    let k = radiation_pressure_constant(cavity);
    let g = p.g();
    let gamma = cavity.rates.gamma_half;

    if k == 0.0 || ec == 0.0 {
        let (a_cw, a_ccw) = amplitudes(cavity, drive, ec, 0.0)?;
        return Ok(SteadyState {
            a_cw,
            a_ccw,
            x_bar: 0.0,
            u: 0.0,
            all_roots: vec![0.0],
            residual: 0.0,
        });
    }

    let f = |u: f64| -> Result<f64> {
        let (a, b) = amplitudes(cavity, drive, ec, u)?;
        Ok(u - k * (a.norm_sqr() + b.norm_sqr()))
    };

    let linewidth = narrowest_linewidth(cavity);
    let u_max = scan_limit(cavity, drive, ec, k, gamma, linewidth)?;
    let n = ((u_max / (linewidth / 16.0)).ceil() as usize).clamp(256, MAX_SCAN_POINTS);

    let mut brackets = Vec::new();
    let mut prev_u = 0.0;
    let mut prev_f = f(0.0)?;
    for idx in 1..=n {
        let u = u_max * idx as f64 / n as f64;
        let fu = f(u)?;
        if prev_f == 0.0 {
            brackets.push((prev_u, prev_u));
        } else if prev_f.signum() != fu.signum() && fu != 0.0 {
            brackets.push((prev_u, u));
        }
        prev_u = u;
        prev_f = fu;
    }
    if prev_f == 0.0 {
        brackets.push((prev_u, prev_u));
    }

    let mut roots = Vec::with_capacity(brackets.len());
    let mut best_residual = f64::INFINITY;
    for (lo, hi) in brackets {
        let root = if lo == hi {
            lo
        } else {
            let mut tol = Tolerance {
                f_tol: ROOT_TOLERANCE * lo.max(gamma),
                x_tol: 4.0 * f64::EPSILON * hi.max(gamma),
                max_iter: 200,
            };
            let eval = |u: f64| f(u).unwrap_or(f64::NAN);
            find_root_brent(lo, hi, eval, &mut tol).map_err(|_| Error::NoConvergence {
                best_residual: f(lo).map(f64::abs).unwrap_or(f64::INFINITY),
            })?
        };
        let residual = f(root)?;
        best_residual = best_residual.min(residual.abs());
        if residual.abs() > ROOT_TOLERANCE * root.max(gamma) {
            return Err(Error::NoConvergence { best_residual });
        }
        roots.push(root);
    }

    let u = *roots.first().ok_or(Error::NoConvergence { best_residual })?;
    let (a_cw, a_ccw) = amplitudes(cavity, drive, ec, u)?;
    Ok(SteadyState {
        a_cw,
        a_ccw,
        x_bar: u / g,
        u,
        residual: f(u)?,
        all_roots: roots,
    })
}
