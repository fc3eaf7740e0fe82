//! Eigenvalue branches of the optical subsystem and exceptional-surface membership.
//!
//! The eigenvalues are `ω± − iκ±` with `ω± = ±√(α+β)` and `κ± = ±√(α−β)`,
//! where
//!
//! ```text
//! α = √(J⁴ + 2J³ s sinφ3 + J² s²) / 2,   β = (J² + J s sinφ3) / 2,   s = t0√(γ1γ2).
//! ```
//!
//! Writing `a = J + s sinφ3`, `b = s cosφ3` and `h = hypot(a, b)` gives
//! `α = J h / 2` and `β = J a / 2`, so `α ± β = J (h ± a) / 2`. The smaller
//! of `h ± a` is recovered from `(h + a)(h − a) = b²` to avoid cancellation
//! next to the exceptional surface.

use serde::{Deserialize, Serialize};

use crate::model::SystemParams;
use crate::units::Phase;

/// Default relative tolerance for phase classification.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// The phase at which the second kind of exceptional surface exists.
pub const ES_PHASE: Phase = Phase::from_pi(1.5);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenSplit {
    pub alpha: f64,
    pub beta: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
}

impl EigenSplit {
    /// `(|ω+ − ω−|, |κ+ − κ−|)`.
    pub fn splittings(&self) -> (f64, f64) {
        (
            (self.omega_plus - self.omega_minus).abs(),
            (self.kappa_plus - self.kappa_minus).abs(),
        )
    }
}

/// `(J(h+a)/2, J(h−a)/2)`, i.e. `(α+β, α−β)`, evaluated without cancellation.
fn sum_and_difference(j: f64, s: f64, phi3: Phase) -> (f64, f64) {
    let (sin, cos) = phi3.sin_cos();
    let a = j + s * sin;
    let b = s * cos;
    let h = a.hypot(b);
    let (plus, minus) = if a >= 0.0 {
        let plus = h + a;
        (plus, if plus > 0.0 { b * b / plus } else { 0.0 })
    } else {
        let minus = h - a;
        (b * b / minus, minus)
    };
    (j * plus / 2.0, j * minus / 2.0)
}

pub fn alpha_beta(j: f64, t0: f64, gamma1: f64, gamma2: f64, phi3: Phase) -> (f64, f64) {
    let s = t0 * (gamma1 * gamma2).sqrt();
    let (sin, cos) = phi3.sin_cos();
    let a = j + s * sin;
    let alpha = j * a.hypot(s * cos) / 2.0;
    let beta = j * a / 2.0;
    (alpha, beta)
}

pub fn eigen_split(j: f64, t0: f64, gamma1: f64, gamma2: f64, phi3: Phase) -> EigenSplit {
    let (alpha, beta) = alpha_beta(j, t0, gamma1, gamma2, phi3);
    let s = t0 * (gamma1 * gamma2).sqrt();
    let (sum, diff) = sum_and_difference(j, s, phi3);
    let omega = sum.max(0.0).sqrt();
    let kappa = diff.max(0.0).sqrt();
    EigenSplit {
        alpha,
        beta,
        omega_plus: omega,
        omega_minus: -omega,
        kappa_plus: kappa,
        kappa_minus: -kappa,
    }
}

pub fn eigen_split_of(params: &SystemParams) -> EigenSplit {
    eigen_split(params.j, params.t0, params.gamma1, params.gamma2, params.phi3)
}

/// Coupling J* = t0√(γ1γ2) at which the second kind of exceptional surface lies.
pub fn es_coupling(t0: f64, gamma1: f64, gamma2: f64) -> f64 {
    t0 * (gamma1 * gamma2).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseKind {
    /// J = 0.
    #[serde(rename = "ES-Kind1")]
    EsKind1,
    /// J = t0√(γ1γ2) at φ3 = 1.5π.
    #[serde(rename = "ES-Kind2")]
    EsKind2,
    /// Purely dissipative splitting.
    #[serde(rename = "Kappa-Split")]
    KappaSplit,
    /// Purely frequency splitting.
    #[serde(rename = "Omega-Split")]
    OmegaSplit,
    #[serde(rename = "Generic-NP")]
    GenericNp,
}

impl PhaseKind {
    pub fn label(self) -> &'static str {
        match self {
            PhaseKind::EsKind1 => "ES-Kind1",
            PhaseKind::EsKind2 => "ES-Kind2",
            PhaseKind::KappaSplit => "Kappa-Split",
            PhaseKind::OmegaSplit => "Omega-Split",
            PhaseKind::GenericNp => "Generic-NP",
        }
    }

    pub fn is_exceptional(self) -> bool {
        matches!(self, PhaseKind::EsKind1 | PhaseKind::EsKind2)
    }
}

impl std::fmt::Display for PhaseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseClass {
    pub kind: PhaseKind,
    /// `(|ω+ − ω−|, |κ+ − κ−|)` in rad/s.
    pub splitting: (f64, f64),
}

pub fn classify_point(params: &SystemParams, tol: f64) -> PhaseClass {
    let split = eigen_split_of(params);
    let splitting = split.splittings();
    let j_star = es_coupling(params.t0, params.gamma1, params.gamma2);
    let scale = params.j.max(j_star);
    let threshold = tol * scale;
    let on_phase = (params.phi3.pi_units() - ES_PHASE.pi_units()).rem_euclid(2.0);
    let phase_offset = on_phase.min(2.0 - on_phase) * std::f64::consts::PI;

    let kind = if params.j <= threshold {
        PhaseKind::EsKind1
    } else if (params.j - j_star).abs() <= threshold && phase_offset <= tol {
        PhaseKind::EsKind2
    } else if splitting.0 < threshold && threshold < splitting.1 {
        PhaseKind::KappaSplit
    } else if splitting.1 < threshold && threshold < splitting.0 {
        PhaseKind::OmegaSplit
    } else {
        PhaseKind::GenericNp
    };
    PhaseClass { kind, splitting }
}

/// Distances to both exceptional surfaces [rad/s].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsDistance {
    /// |J − t0√(γ1γ2)|.
    pub second_kind: f64,
    /// J.
    pub first_kind: f64,
}

pub fn distance_to_es(params: &SystemParams) -> EsDistance {
    EsDistance {
        second_kind: (params.j - es_coupling(params.t0, params.gamma1, params.gamma2)).abs(),
        first_kind: params.j,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::baseline;
    use proptest::prelude::*;

    const MHZ: f64 = 1e6;

    /// Literal evaluation of the closed forms, used as an oracle.
    fn alpha_beta_literal(j: f64, t0: f64, g1: f64, g2: f64, phi3: f64) -> (f64, f64) {
        let r = (g1 * g2).sqrt();
        let alpha = (j.powi(4) + 2.0 * j.powi(3) * t0 * r * phi3.sin() + j * j * t0 * t0 * g1 * g2).sqrt() / 2.0;
        let beta = (j * j + j * t0 * r * phi3.sin()) / 2.0;
        (alpha, beta)
    }

    /// Simplified branches valid at φ3 = 1.5π.
    fn special_phase_branches(j: f64, t0: f64, g1: f64, g2: f64) -> (f64, f64) {
        let d = j * j - j * t0 * (g1 * g2).sqrt();
        ((d.abs() / 2.0 + d / 2.0).sqrt(), (d.abs() / 2.0 - d / 2.0).sqrt())
    }

    #[test]
    fn alpha_beta_examples() {
        assert_eq!(alpha_beta(MHZ, 1.0, MHZ, MHZ, Phase::from_pi(1.5)), (0.0, 0.0));
        let (a, b) = alpha_beta(MHZ, 1.0, MHZ, MHZ, Phase::from_pi(0.5));
        assert!((a / (MHZ * MHZ) - 1.0).abs() < 1e-15);
        assert!((b / (MHZ * MHZ) - 1.0).abs() < 1e-15);
        assert_eq!(alpha_beta(0.0, 0.7, 2.0 * MHZ, 0.3 * MHZ, Phase::from_pi(0.3)), (0.0, 0.0));
    }

    #[test]
    fn eigen_split_examples() {
        let z = eigen_split(0.0, 0.8, 0.4 * MHZ, 1.3 * MHZ, Phase::from_pi(0.2));
        assert_eq!(z.splittings(), (0.0, 0.0));
        let ep = eigen_split(MHZ, 1.0, MHZ, MHZ, ES_PHASE);
        assert_eq!([ep.omega_plus, ep.omega_minus, ep.kappa_plus, ep.kappa_minus], [0.0; 4]);
        let k = eigen_split(0.5 * MHZ, 1.0, MHZ, MHZ, ES_PHASE);
        assert_eq!(k.omega_plus, 0.0);
        assert!((k.kappa_plus - 0.5 * MHZ).abs() < 1e-9);
        assert!((k.kappa_minus + 0.5 * MHZ).abs() < 1e-9);
    }

    #[test]
    fn es_coupling_examples() {
        assert_eq!(es_coupling(1.0, MHZ, MHZ), MHZ);
        assert!((es_coupling(0.9, MHZ, MHZ) - 0.9 * MHZ).abs() < 1e-9);
        let ep5 = es_coupling(1.0, 0.61 * MHZ, 1.11 * MHZ) / MHZ;
        assert!((ep5 - 0.8229).abs() < 5e-5);
        assert_eq!((ep5 * 100.0).round() / 100.0, 0.82);
    }

    fn point(j: f64, g1: f64, g2: f64) -> SystemParams {
        SystemParams {
            j,
            gamma1: g1,
            gamma2: g2,
            ..baseline()
        }
    }

    #[test]
    fn classification_examples() {
        let ep2 = point(MHZ, MHZ, MHZ);
        assert_eq!(classify_point(&ep2, DEFAULT_TOLERANCE).kind, PhaseKind::EsKind2);
        let np1 = point(1.5 * MHZ, 0.5 * MHZ, 0.5 * MHZ);
        assert_eq!(classify_point(&np1, DEFAULT_TOLERANCE).kind, PhaseKind::OmegaSplit);
        let below = point(0.5 * MHZ, MHZ, MHZ);
        assert_eq!(classify_point(&below, DEFAULT_TOLERANCE).kind, PhaseKind::KappaSplit);
        let kind1 = point(0.0, 0.7 * MHZ, 1.26 * MHZ);
        assert_eq!(classify_point(&kind1, DEFAULT_TOLERANCE).kind, PhaseKind::EsKind1);
        let off_phase = SystemParams {
            phi3: Phase::from_pi(1.3),
            ..ep2
        };
        assert_eq!(classify_point(&off_phase, DEFAULT_TOLERANCE).kind, PhaseKind::GenericNp);
    }

    #[test]
    fn distance_examples() {
        let ep2 = distance_to_es(&point(MHZ, MHZ, MHZ));
        assert_eq!((ep2.second_kind, ep2.first_kind), (0.0, MHZ));
        let np1 = distance_to_es(&point(1.5 * MHZ, 0.5 * MHZ, 0.5 * MHZ));
        assert!((np1.second_kind - MHZ).abs() < 1e-9);
        assert_eq!(np1.first_kind, 1.5 * MHZ);
        let base = distance_to_es(&point(0.0, MHZ, MHZ));
        assert_eq!((base.second_kind, base.first_kind), (MHZ, 0.0));
    }

    #[test]
    fn phase_transition_signs() {
        for j in [0.2, 0.5, 0.9, 0.999] {
            let e = eigen_split(j * MHZ, 1.0, MHZ, MHZ, ES_PHASE);
            assert_eq!(e.omega_plus, 0.0);
            assert!(e.kappa_plus > 0.0);
        }
        for j in [1.001, 1.5, 3.0] {
            let e = eigen_split(j * MHZ, 1.0, MHZ, MHZ, ES_PHASE);
            assert_eq!(e.kappa_plus, 0.0);
            assert!(e.omega_plus > 0.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn antisymmetric_branches(j in 0.0f64..5.0, t0 in 0.0f64..=1.0, g1 in 0.1f64..3.0, g2 in 0.1f64..3.0, phi in 0.0f64..2.0) {
            let e = eigen_split(j * MHZ, t0, g1 * MHZ, g2 * MHZ, Phase::from_pi(phi));
            prop_assert_eq!(e.omega_plus + e.omega_minus, 0.0);
            prop_assert_eq!(e.kappa_plus + e.kappa_minus, 0.0);
            prop_assert!(e.alpha >= e.beta.abs() * (1.0 - 1e-15));
        }

        #[test]
        fn matches_literal_closed_forms(j in 0.0f64..5.0, t0 in 0.0f64..=1.0, g1 in 0.1f64..3.0, g2 in 0.1f64..3.0, phi in 0.0f64..2.0) {
            let (a, b) = alpha_beta(j * MHZ, t0, g1 * MHZ, g2 * MHZ, Phase::from_pi(phi));
            let (a0, b0) = alpha_beta_literal(j * MHZ, t0, g1 * MHZ, g2 * MHZ, phi * std::f64::consts::PI);
            let scale = (j * j + j * t0 * (g1 * g2).sqrt()) * MHZ * MHZ + 1.0;
            prop_assert!((a - a0).abs() <= 1e-12 * scale);
            prop_assert!((b - b0).abs() <= 1e-12 * scale);
        }

        #[test]
        fn product_identity(j in 0.01f64..5.0, t0 in 0.05f64..=1.0, g1 in 0.1f64..3.0, g2 in 0.1f64..3.0, phi in 0.0f64..2.0) {
            let phase = Phase::from_pi(phi);
            let e = eigen_split(j * MHZ, t0, g1 * MHZ, g2 * MHZ, phase);
            let (_, cos) = phase.sin_cos();
            let expected = (j * MHZ).powi(2) * t0 * t0 * g1 * g2 * MHZ * MHZ * cos * cos / 4.0;
            let product = (e.omega_plus * e.kappa_plus).powi(2);
            prop_assume!(expected > 0.0);
            prop_assert!(((product - expected) / expected).abs() <= 1e-10);
        }

        #[test]
        fn special_phase_matches_simplified_branches(j in 0.0f64..5.0, t0 in 0.0f64..=1.0, g1 in 0.1f64..3.0, g2 in 0.1f64..3.0) {
            // The simplified form loses accuracy when J² and J·J* nearly cancel.
            prop_assume!((j - t0 * (g1 * g2).sqrt()).abs() > 1e-3 * j);
            let e = eigen_split(j * MHZ, t0, g1 * MHZ, g2 * MHZ, ES_PHASE);
            let (w, k) = special_phase_branches(j * MHZ, t0, g1 * MHZ, g2 * MHZ);
            prop_assert!((e.omega_plus - w).abs() <= 1e-12 * w.max(1.0));
            prop_assert!((e.kappa_plus - k).abs() <= 1e-12 * k.max(1.0));
        }

        #[test]
        fn coalescence_on_the_surface(t0 in 0.05f64..=1.0, g1 in 0.1f64..3.0, g2 in 0.1f64..3.0) {
            let j = es_coupling(t0, g1 * MHZ, g2 * MHZ);
            let e = eigen_split(j, t0, g1 * MHZ, g2 * MHZ, ES_PHASE);
            let (dw, dk) = e.splittings();
            prop_assert!(dw < 1e-9 * j && dk < 1e-9 * j);
        }
    }
}
