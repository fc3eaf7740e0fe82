//! Linearized probe response, transmission and group delay.
//!
//! Fluctuations around the steady state are expanded as
//! `a = ā + δa⁻ e^{−iξt} + δa⁺ e^{iξt}` and `x = x̄ + δx e^{−iξt} + c.c.`.
//! Collecting the `e^{−iξt}` terms of the amplitude and displacement
//! equations gives five linear equations in
//! `(δx, δa⁻_cw, δa⁻_ccw, δa⁺*_cw, δa⁺*_ccw)`:
//!
//! ```text
//! χ⁻¹ δx − ħg Σ_j (ā*_j δa⁻_j + ā_j δa⁺*_j)             = 0
//! f1 δa⁻_cw  + (s3 + iJ) δa⁻_ccw  − i g ā_cw  δx         = √γ1 Ep
//! f1 δa⁻_ccw + (iJ − s3) δa⁻_cw   − i g ā_ccw δx         = t2 √γ2 Ep
//! f2 δa⁺*_cw  + (s3* − iJ) δa⁺*_ccw + i g ā*_cw  δx      = 0
//! f2 δa⁺*_ccw − (s3* + iJ) δa⁺*_cw  + i g ā*_ccw δx      = 0
//! ```
//!
//! with `s3 = √(γ1γ2) t3`, `f1,2 = γ − iξ ± i(Δ − g x̄)` and
//! `χ⁻¹ = m(ωm² − ξ² − iξγm)`. The coupling terms carry √(γ1γ2) t3 as in
//! the amplitude equations, the third row couples δa⁺*_ccw, and the last
//! row is driven by ā*_ccw.

use std::f64::consts::PI;

use log::warn;
use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{drive_amplitudes, Cavity, Drive, SystemParams, HBAR};
use crate::steady::{solve_steady, SteadyState};
use crate::units::FrequencyConvention;

pub type Matrix5 = SMatrix<Complex64, 5, 5>;
pub type Vector5 = SVector<Complex64, 5>;

const PIVOT_EPS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationSystem {
    pub matrix: Matrix5,
    pub rhs: Vector5,
    pub xi: f64,
    pub f1: Complex64,
    pub f2: Complex64,
    pub chi_inv: Complex64,
}

pub fn fluctuation_system(cavity: &Cavity, steady: &SteadyState, drive: &Drive, xi: f64) -> Result<FluctuationSystem> {
    let (_, ep) = drive_amplitudes(drive)?;
    let p = &cavity.params;
    let i = Complex64::i();
    let zero = Complex64::new(0.0, 0.0);
    let g = p.g();
    let gamma = cavity.rates.gamma_half;
    let detuning = drive.pump_detuning(p) + p.j - steady.u;
    let f1 = Complex64::new(gamma, detuning - xi);
    let f2 = Complex64::new(gamma, -detuning - xi);
    let chi_inv = p.mass * Complex64::new(p.omega_m * p.omega_m - xi * xi, -xi * p.gamma_m);
    let s3 = cavity.loop_coupling();
    let j = Complex64::new(p.j, 0.0);
    let (a1, a2) = (steady.a_cw, steady.a_ccw);
    let hg = HBAR * g;

    #[rustfmt::skip]
    let matrix = Matrix5::from_row_slice(&[
        chi_inv,         -hg * a1.conj(), -hg * a2.conj(), -hg * a1,           -hg * a2,
        -i * g * a1,     f1,              s3 + i * j,      zero,               zero,
        -i * g * a2,     i * j - s3,      f1,              zero,               zero,
        i * g * a1.conj(), zero,          zero,            f2,                 s3.conj() - i * j,
        i * g * a2.conj(), zero,          zero,            -(s3.conj() + i * j), f2,
    ]);
    let rhs = Vector5::new(
        zero,
        Complex64::from(p.gamma1.sqrt() * ep),
        cavity.rates.t2 * p.gamma2.sqrt() * ep,
        zero,
        zero,
    );
    Ok(FluctuationSystem {
        matrix,
        rhs,
        xi,
        f1,
        f2,
        chi_inv,
    })
}

/// Solution of the fluctuation system at one probe frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseSolution {
    pub delta_x: Complex64,
    pub da_cw_m: Complex64,
    pub da_ccw_m: Complex64,
    pub da_cw_p: Complex64,
    pub da_ccw_p: Complex64,
    pub f1: Complex64,
    pub f2: Complex64,
    pub chi_inv: Complex64,
    pub xi: f64,
    /// ‖A'x − b'‖ / ‖b'‖ of the equilibrated system.
    pub residual: f64,
}

impl ResponseSolution {
    pub fn unknowns(&self) -> Vector5 {
        Vector5::new(self.delta_x, self.da_cw_m, self.da_ccw_m, self.da_cw_p, self.da_ccw_p)
    }
}

/// Row/column equilibration of a system with wildly different unit scales.
struct Scaling {
    rows: [f64; 5],
    cols: [f64; 5],
}

fn equilibrate(a: &Matrix5) -> Scaling {
    let mut cols = [1.0; 5];
    for (c, scale) in cols.iter_mut().enumerate() {
        let m = a.column(c).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if m > 0.0 {
            *scale = 1.0 / m;
        }
    }
    let mut rows = [1.0; 5];
    for (r, scale) in rows.iter_mut().enumerate() {
        let m = (0..5).map(|c| a[(r, c)].norm() * cols[c]).fold(0.0, f64::max);
        if m > 0.0 {
            *scale = 1.0 / m;
        }
    }
    Scaling { rows, cols }
}

/// Solves the fluctuation system by partial-pivoting LU on the equilibrated matrix.
pub fn solve_system(system: &FluctuationSystem) -> Result<(Vector5, f64)> {
    let scaling = equilibrate(&system.matrix);
    let scaled = Matrix5::from_fn(|r, c| system.matrix[(r, c)] * scaling.rows[r] * scaling.cols[c]);
    let rhs = Vector5::from_fn(|r, _| system.rhs[r] * scaling.rows[r]);
    let norm = scaled.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lu = scaled.lu();
    let u = lu.u();
    if (0..5).any(|k| u[(k, k)].norm() < PIVOT_EPS * norm) {
        return Err(Error::SingularSystem { xi: system.xi });
    }
    let y = lu.solve(&rhs).ok_or(Error::SingularSystem { xi: system.xi })?;
    let r = scaled * y - rhs;
    let rhs_norm = rhs.norm();
    let residual = if rhs_norm > 0.0 { r.norm() / rhs_norm } else { r.norm() };
    let x = Vector5::from_fn(|k, _| y[k] * scaling.cols[k]);
    Ok((x, residual))
}

pub fn solve_response(cavity: &Cavity, steady: &SteadyState, drive: &Drive, xi: f64) -> Result<ResponseSolution> {
    let system = fluctuation_system(cavity, steady, drive, xi)?;
    let (x, residual) = solve_system(&system)?;
    Ok(ResponseSolution {
        delta_x: x[0],
        da_cw_m: x[1],
        da_ccw_m: x[2],
        da_cw_p: x[3],
        da_ccw_p: x[4],
        f1: system.f1,
        f2: system.f2,
        chi_inv: system.chi_inv,
        xi,
        residual,
    })
}

/// Port-2 transmission `t = t2 − (t3√γ1 δa⁻_cw + √γ2 δa⁻_ccw)/Ep`.
pub fn transmission(cavity: &Cavity, drive: &Drive, response: &ResponseSolution) -> Result<Complex64> {
    let (_, ep) = drive_amplitudes(drive)?;
    if ep == 0.0 {
        return Err(Error::ZeroProbe);
    }
    let p = &cavity.params;
    let r = &cavity.rates;
    Ok(r.t2 - (r.t3 * p.gamma1.sqrt() * response.da_cw_m + p.gamma2.sqrt() * response.da_ccw_m) / ep)
}

/// Step-halving settings for the group-delay derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayOptions {
    /// Initial half-step h [rad/s]; `None` selects 1e-4·γ.
    pub step: Option<f64>,
    pub max_halvings: u32,
    /// Relative agreement required between successive steps.
    pub rel_tol: f64,
    /// Absolute agreement floor [s], for delays that are numerically zero.
    pub abs_tol: f64,
}

impl Default for DelayOptions {
    fn default() -> Self {
        DelayOptions {
            step: None,
            max_halvings: 6,
            rel_tol: 0.01,
            abs_tol: 1e-15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupDelay {
    /// τg [s]; positive is slow light.
    pub tau_g: f64,
    /// Estimate at the previous (double) step.
    pub coarse: f64,
    /// Half-step of the accepted estimate [rad/s].
    pub step: f64,
    pub halvings: u32,
}

/// Wraps a phase difference into (−π, π].
pub fn wrap_phase(mut d: f64) -> f64 {
    while d > PI {
        d -= 2.0 * PI;
    }
    while d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Removes 2π jumps between consecutive samples.
pub fn unwrap_phase(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (k, &p) in phases.iter().enumerate() {
        if k > 0 {
            let raw = p - phases[k - 1];
            offset += wrap_phase(raw) - raw;
        }
        out.push(p + offset);
    }
    out
}

fn central_phase_slope<F>(t_of: &F, x: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let plus = t_of(x + h)?;
    let minus = t_of(x - h)?;
    Ok(wrap_phase(plus.arg() - minus.arg()) / (2.0 * h))
}

/// `d arg t / dx` by central differences with step halving.
pub fn phase_derivative<F>(t_of: F, x: f64, step: f64, opts: &DelayOptions) -> Result<GroupDelay>
where
    F: Fn(f64) -> Result<Complex64>,
{
    if !(step > 0.0) {
        return Err(Error::Invalid("group-delay step must be positive".into()));
    }
    let mut h = step;
    let mut prev = central_phase_slope(&t_of, x, h)?;
    for halvings in 1..=opts.max_halvings {
        h /= 2.0;
        let cur = central_phase_slope(&t_of, x, h)?;
        if (cur - prev).abs() <= opts.rel_tol * cur.abs() + opts.abs_tol {
            return Ok(GroupDelay {
                tau_g: cur,
                coarse: prev,
                step: h,
                halvings,
            });
        }
        warn!("group delay at {x} not converged at step {h}: {prev:e} vs {cur:e}");
        prev = cur;
    }
    Err(Error::NonConvergentDerivative {
        delta_p: x,
        halvings: opts.max_halvings,
    })
}

/// Probe response around one solved steady state.
#[derive(Debug, Clone)]
pub struct ProbeResponse {
    pub cavity: Cavity,
    pub drive: Drive,
    pub steady: SteadyState,
}

impl ProbeResponse {
    pub fn new(cavity: Cavity, drive: Drive) -> Result<Self> {
        let steady = solve_steady(&cavity, &drive)?;
        Ok(ProbeResponse { cavity, drive, steady })
    }

    pub fn with_steady(cavity: Cavity, drive: Drive, steady: SteadyState) -> Self {
        ProbeResponse { cavity, drive, steady }
    }

    pub fn params(&self) -> &SystemParams {
        &self.cavity.params
    }

    /// ξ = ωp − ωc for a probe at `omega0 + delta_p`.
    pub fn xi(&self, delta_p: f64) -> f64 {
        delta_p + self.drive.pump_detuning(&self.cavity.params)
    }

    pub fn drive_at(&self, delta_p: f64) -> Drive {
        self.drive.with_probe_detuning(&self.cavity.params, delta_p)
    }

    pub fn solve_at(&self, delta_p: f64) -> Result<ResponseSolution> {
        solve_response(&self.cavity, &self.steady, &self.drive_at(delta_p), self.xi(delta_p))
    }

    pub fn transmission_at(&self, delta_p: f64) -> Result<Complex64> {
        let response = self.solve_at(delta_p)?;
        transmission(&self.cavity, &self.drive_at(delta_p), &response)
    }

    pub fn default_delay_step(&self) -> f64 {
        1e-4 * self.cavity.rates.gamma_half
    }

    pub fn group_delay_at(&self, delta_p: f64, opts: &DelayOptions) -> Result<GroupDelay> {
        let step = opts.step.unwrap_or_else(|| self.default_delay_step());
        phase_derivative(|x| self.transmission_at(x), delta_p, step, opts)
    }

    pub fn row(&self, delta_p: f64, opts: &DelayOptions) -> Result<SpectrumRow> {
        let response = self.solve_at(delta_p)?;
        let t = transmission(&self.cavity, &self.drive_at(delta_p), &response)?;
        let delay = self.group_delay_at(delta_p, opts)?;
        Ok(SpectrumRow {
            delta_p,
            t,
            transmission: t.norm_sqr(),
            tau_g: delay.tau_g,
            tau_g_coarse: delay.coarse,
            residual: response.residual,
        })
    }

    pub fn spectrum(&self, grid: &[f64], opts: &DelayOptions) -> Result<SpectrumTable> {
        check_grid(grid)?;
        let rows = grid
            .par_iter()
            .enumerate()
            .map(|(k, &dp)| self.row(dp, opts).map_err(|e| e.at_row(k)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SpectrumTable {
            rows,
            meta: SpectrumMeta {
                preset: None,
                params: self.cavity.params.clone(),
                drive: self.drive,
                convention: FrequencyConvention::default(),
                reduced: self.cavity.reduced,
                steady_u: self.steady.u,
                steady_x_bar: self.steady.x_bar,
                steady_roots: self.steady.all_roots.clone(),
                notes: Vec::new(),
            },
        })
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadGrid);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    /// δp = ωp − ω0 [rad/s].
    pub delta_p: f64,
    pub t: Complex64,
    /// T = |t|².
    pub transmission: f64,
    /// τg [s].
    pub tau_g: f64,
    /// τg at twice the accepted step.
    pub tau_g_coarse: f64,
    /// Relative residual of the fluctuation solve at this row.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub preset: Option<String>,
    pub params: SystemParams,
    pub drive: Drive,
    pub convention: FrequencyConvention,
    /// True when transmissions were overridden away from `t0·e^{iφ}`.
    pub reduced: bool,
    pub steady_u: f64,
    pub steady_x_bar: f64,
    pub steady_roots: Vec<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub rows: Vec<SpectrumRow>,
    pub meta: SpectrumMeta,
}

impl SpectrumTable {
    pub fn delta_p(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.delta_p).collect()
    }

    pub fn transmission(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.transmission).collect()
    }

    pub fn tau_g(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.tau_g).collect()
    }
}

/// One steady-state solve, then the probe response on every grid point.
pub fn transmission_spectrum(cavity: &Cavity, drive: &Drive, grid: &[f64]) -> Result<SpectrumTable> {
    check_grid(grid)?;
    ProbeResponse::new(cavity.clone(), *drive)?.spectrum(grid, &DelayOptions::default())
}

/// τg at one probe detuning; `step` defaults to 1e-4·γ.
pub fn group_delay(cavity: &Cavity, drive: &Drive, delta_p: f64, step: Option<f64>) -> Result<GroupDelay> {
    let probe = ProbeResponse::new(cavity.clone(), *drive)?;
    probe.group_delay_at(
        delta_p,
        &DelayOptions {
            step,
            ..DelayOptions::default()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{baseline, drive};
    use crate::steady::intracavity_steady;
    use nalgebra::{Matrix2, Vector2};

    const MHZ: f64 = 1e6;

    fn decoupled() -> Cavity {
        Cavity::new(SystemParams {
            g_override: Some(0.0),
            ..baseline()
        })
        .with_t3(Complex64::new(0.0, 0.0))
    }

    fn ep2() -> Cavity {
        Cavity::new(SystemParams { j: MHZ, ..baseline() })
    }

    #[test]
    fn zero_coupling_decouples_the_mechanics() {
        let cav = Cavity::new(SystemParams {
            g_override: Some(0.0),
            j: MHZ,
            ..baseline()
        });
        let probe = ProbeResponse::new(cav, drive(&baseline())).unwrap();
        for dp in [-2.0 * MHZ, 0.0, 0.3 * MHZ] {
            assert_eq!(probe.solve_at(dp).unwrap().delta_x, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn zero_probe_gives_zero_response() {
        let cav = ep2();
        let d = drive(&cav.params).with_probe_power(0.0);
        let probe = ProbeResponse::new(cav.clone(), d).unwrap();
        let r = probe.solve_at(0.1 * MHZ).unwrap();
        assert_eq!(r.unknowns(), Vector5::zeros());
        assert_eq!(transmission(&cav, &probe.drive_at(0.1 * MHZ), &r), Err(Error::ZeroProbe));
    }

    /// Entries expanded by hand from the amplitude and displacement equations.
    #[test]
    fn matrix_entries_match_hand_expansion() {
        let cav = ep2();
        let d = drive(&cav.params);
        let steady = solve_steady(&cav, &d).unwrap();
        let p = &cav.params;
        let delta = d.pump_detuning(p) + p.j;
        let xi = delta;
        let sys = fluctuation_system(&cav, &steady, &d, xi).unwrap();
        let i = Complex64::i();
        let gamma = 1.5 * MHZ;
        let g = p.g();
        let r = (p.gamma1 * p.gamma2).sqrt();
        let t3 = Complex64::new(0.0, -1.0);
        let expect = |row: usize, col: usize, v: Complex64| {
            let got = sys.matrix[(row, col)];
            assert!((got - v).norm() <= 1e-12 * v.norm().max(1e-300), "({row},{col}): {got} vs {v}");
        };
        // f1 = γ − iξ + i(Δ − u) at ξ = Δ.
        expect(1, 1, gamma - i * steady.u);
        expect(3, 3, gamma - 2.0 * i * xi + i * steady.u);
        expect(1, 2, r * t3 + i * p.j);
        expect(2, 1, i * p.j - r * t3);
        expect(3, 4, r * t3.conj() - i * p.j);
        expect(4, 3, -(r * t3.conj() + i * p.j));
        expect(0, 0, p.mass * (p.omega_m * p.omega_m - xi * xi - i * xi * p.gamma_m));
        expect(0, 1, -HBAR * g * steady.a_cw.conj());
        expect(0, 4, -HBAR * g * steady.a_ccw);
        expect(2, 0, -i * g * steady.a_ccw);
        expect(4, 0, i * g * steady.a_ccw.conj());
        for (row, col) in [(1, 3), (1, 4), (2, 3), (2, 4), (3, 1), (3, 2), (4, 1), (4, 2)] {
            assert_eq!(sys.matrix[(row, col)], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn decoupled_response_is_one_by_one() {
        let cav = decoupled();
        let d = drive(&cav.params);
        let probe = ProbeResponse::new(cav.clone(), d).unwrap();
        let (_, ep) = drive_amplitudes(&probe.drive_at(0.4 * MHZ)).unwrap();
        let r = probe.solve_at(0.4 * MHZ).unwrap();
        let expected_cw = MHZ.sqrt() * ep / r.f1;
        let expected_ccw = cav.rates.t2 * MHZ.sqrt() * ep / r.f1;
        assert!((r.da_cw_m - expected_cw).norm() <= 1e-12 * expected_cw.norm());
        assert!((r.da_ccw_m - expected_ccw).norm() <= 1e-12 * expected_ccw.norm());
    }

    #[test]
    fn response_is_linear_in_probe_amplitude() {
        let cav = ep2();
        let d = drive(&cav.params);
        let steady = solve_steady(&cav, &d).unwrap();
        let xi = d.pump_detuning(&cav.params) + 0.2 * MHZ;
        let a = solve_response(&cav, &steady, &d, xi).unwrap();
        let b = solve_response(&cav, &steady, &d.with_probe_power(100.0 * d.probe_power), xi).unwrap();
        let diff = b.unknowns() - a.unknowns() * Complex64::from(10.0);
        for k in 0..5 {
            assert!(diff[k].norm() <= 1e-12 * b.unknowns()[k].norm().max(1e-300));
        }
    }

    #[test]
    fn decoupled_symmetric_point_transmits_one_third() {
        let cav = decoupled();
        let d = drive(&cav.params);
        let steady = solve_steady(&cav, &d).unwrap();
        let delta = d.pump_detuning(&cav.params) + cav.params.j - steady.u;
        let r = solve_response(&cav, &steady, &d, delta).unwrap();
        assert_eq!(r.f1, Complex64::new(1.5 * MHZ, 0.0));
        let t = transmission(&cav, &d, &r).unwrap();
        let expected = cav.rates.t2 / 3.0;
        assert!((t - expected).norm() <= 1e-10 * expected.norm());
    }

    #[test]
    fn vanishing_port_two_coupling_bypasses_the_cavity() {
        let p = SystemParams {
            gamma2: 1e-6,
            ..baseline()
        };
        let cav = Cavity::new(p).with_t3(Complex64::new(0.0, 0.0));
        let probe = ProbeResponse::new(cav.clone(), drive(&cav.params)).unwrap();
        let t = probe.transmission_at(0.1 * MHZ).unwrap();
        assert!((t - cav.rates.t2).norm() < 1e-5);
    }

    #[test]
    fn vanishing_coupling_matches_two_mode_solution() {
        let cav = Cavity::new(SystemParams {
            g_override: Some(0.0),
            j: 0.7 * MHZ,
            ..baseline()
        });
        let probe = ProbeResponse::new(cav.clone(), drive(&cav.params)).unwrap();
        let p = &cav.params;
        let i = Complex64::i();
        let s3 = cav.loop_coupling();
        for dp in [-3.0 * MHZ, -0.5 * MHZ, 0.0, 1.2 * MHZ] {
            let r = probe.solve_at(dp).unwrap();
            let (_, ep) = drive_amplitudes(&probe.drive_at(dp)).unwrap();
            let m = Matrix2::new(r.f1, s3 + i * p.j, i * p.j - s3, r.f1);
            let rhs = Vector2::new(Complex64::from(p.gamma1.sqrt() * ep), cav.rates.t2 * p.gamma2.sqrt() * ep);
            let x = m.lu().solve(&rhs).unwrap();
            assert!((r.da_cw_m - x[0]).norm() <= 1e-10 * x[0].norm());
            assert!((r.da_ccw_m - x[1]).norm() <= 1e-10 * x[1].norm());
        }
    }

    #[test]
    fn residual_is_small_on_the_operating_point() {
        let cav = ep2();
        let probe = ProbeResponse::new(cav, drive(&baseline())).unwrap();
        for k in -20..=20 {
            let r = probe.solve_at(k as f64 * 0.25 * MHZ).unwrap();
            assert!(r.residual <= 1e-10, "residual {}", r.residual);
        }
    }

    #[test]
    fn steady_amplitudes_are_reused() {
        let cav = ep2();
        let d = drive(&cav.params);
        let probe = ProbeResponse::new(cav.clone(), d).unwrap();
        let (a, _) = intracavity_steady(&cav, &d, probe.steady.u).unwrap();
        assert_eq!(a, probe.steady.a_cw);
    }

    /// arg(t2(1 − γ2/f1)) differentiated by hand, with f1 = γ − iδp at g = 0, J = 0.
    fn analytic_delay(gamma: f64, gamma2: f64, dp: f64) -> f64 {
        let a = gamma - gamma2;
        gamma / (gamma * gamma + dp * dp) - a / (a * a + dp * dp)
    }

    #[test]
    fn group_delay_matches_closed_form_derivative() {
        let cav = decoupled();
        let probe = ProbeResponse::new(cav, drive(&baseline())).unwrap();
        for dp in [-2.0 * MHZ, -0.3 * MHZ, 0.0, 0.8 * MHZ, 4.0 * MHZ] {
            let tau = probe.group_delay_at(dp, &DelayOptions::default()).unwrap().tau_g;
            let expected = analytic_delay(1.5 * MHZ, MHZ, dp);
            assert!(((tau - expected) / expected).abs() <= 1e-4, "{dp}: {tau} vs {expected}");
        }
    }

    #[test]
    fn linear_phase_unwraps_across_the_branch_cut() {
        let c = 1e-6;
        // arg wraps from +π to −π at x = π/c.
        let x = PI / c;
        let g = phase_derivative(|x: f64| Ok(Complex64::from_polar(1.0, x * c)), x, 1e3, &DelayOptions::default()).unwrap();
        assert!((g.tau_g - c).abs() <= 1e-9 * c);
    }

    #[test]
    fn non_smooth_phase_fails_to_converge() {
        let f = |x: f64| Ok(Complex64::from_polar(1.0, x.abs().sqrt()));
        let err = phase_derivative(f, 1e-9, 1.0, &DelayOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NonConvergentDerivative { halvings: 6, .. }));
    }

    #[test]
    fn unwrap_removes_jumps() {
        let raw = [3.0, -3.1, -2.9, 3.0];
        let un = unwrap_phase(&raw);
        assert!((un[1] - (-3.1 + 2.0 * PI)).abs() < 1e-15);
        assert!(un.windows(2).all(|w| (w[1] - w[0]).abs() < PI));
    }

    #[test]
    fn spectrum_rejects_bad_grids() {
        let cav = ep2();
        let d = drive(&cav.params);
        assert_eq!(transmission_spectrum(&cav, &d, &[]), Err(Error::BadGrid));
        assert_eq!(transmission_spectrum(&cav, &d, &[1.0, 1.0]), Err(Error::BadGrid));
    }

    #[test]
    fn far_tail_reaches_bare_fiber_transmission() {
        let cav = decoupled();
        let table = transmission_spectrum(&cav, &drive(&cav.params), &[-5e4 * MHZ, 5e4 * MHZ]).unwrap();
        for row in &table.rows {
            assert!((row.transmission - cav.params.t0 * cav.params.t0).abs() < 1e-4);
        }
    }
}
