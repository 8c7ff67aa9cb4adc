//! Closed-form weak-excitation response of the symmetric crossed cavity.
//!
//! With `g_b = -g_a` the atom sees only the bright mode `(a - b)/√2`, with
//! effective coupling `√2 g`. The dark mode reflects like an empty cavity
//! (`x+`) while the bright mode picks up the atomic response (`x-`). Port
//! reflection and transmission follow as `r = (x+ + x-)/2`,
//! `t = (x+ - x-)/2`. An atom parked in `g2` does not couple, which is the
//! same as setting `g = 0`.

use crate::{AtomLevel, Error, Result, SystemParams, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringCoefficients {
    pub omega: f64,
    pub r: C64,
    pub t: C64,
    pub x_minus: C64,
    pub x_plus: C64,
}

/// A probability together with whether the π-phase mechanism operates at
/// that cooperativity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeValue {
    pub value: f64,
    pub in_regime: bool,
}

fn require_symmetric(params: &SystemParams) -> Result<()> {
    if params.is_symmetric() {
        Ok(())
    } else {
        Err(Error::Unsupported(
            "closed forms need g_b = -g_a and κ_a = κ_b; use the single-excitation or hierarchy solvers".into(),
        ))
    }
}

pub fn scattering_coefficients(params: &SystemParams, omega: f64, atom_level: AtomLevel) -> Result<ScatteringCoefficients> {
    require_symmetric(params)?;
    if !omega.is_finite() {
        return Err(Error::invalid(format!("detuning must be finite, got {omega}")));
    }
    let kappa = params.kappa_a();
    let gamma = params.gamma_total();
    let g2 = match atom_level {
        AtomLevel::G1 => params.g_a().norm_sqr(),
        AtomLevel::G2 => 0.0,
    };
    let iw = C64::new(0.0, omega);
    let num = (kappa + iw) * (gamma - iw) - 2.0 * g2;
    let den = (kappa - iw) * (gamma - iw) + 2.0 * g2;
    let x_plus = (kappa + iw) / (kappa - iw);
    let x_minus = if den == C64::new(0.0, 0.0) {
        // κ = Γ = g = 0 at ω = 0: no coupling at all, behave like x+.
        x_plus
    } else {
        num / den
    };
    Ok(ScatteringCoefficients {
        omega,
        r: 0.5 * (x_plus + x_minus),
        t: 0.5 * (x_plus - x_minus),
        x_minus,
        x_plus,
    })
}

fn check_c(c: f64) {
    debug_assert!(c >= 0.0, "cooperativity must be non-negative");
}

/// `[4C/(1+4C)]²`.
pub fn swap_probability(c: f64) -> f64 {
    check_c(c);
    if c.is_infinite() {
        return 1.0;
    }
    let x = 4.0 * c / (1.0 + 4.0 * c);
    x * x
}

/// On-resonance reflection back into the input port, `[1/(1+4C)]²`.
pub fn wrong_port_probability(c: f64) -> f64 {
    check_c(c);
    let x = 1.0 / (1.0 + 4.0 * c);
    x * x
}

/// `1 - t² - r² = 8C/(1+4C)²`.
pub fn loss_probability(c: f64) -> f64 {
    check_c(c);
    if c.is_infinite() {
        return 0.0;
    }
    8.0 * c / ((1.0 + 4.0 * c) * (1.0 + 4.0 * c))
}

/// `[1+(4C)²]²/(1+4C)⁴`, i.e. `(t² + r²)²`.
pub fn biphoton_survival_probability(c: f64) -> f64 {
    check_c(c);
    if c.is_infinite() {
        return 1.0;
    }
    let f = 4.0 * c;
    let x = (1.0 + f * f) / ((1.0 + f) * (1.0 + f));
    x * x
}

/// Failure probability of the single-sided (Duan-Kimble) scheme,
/// `8C/(1+2C)²`; in regime for `C > 1/2`.
pub fn dk_failure_probability(c: f64) -> RegimeValue {
    check_c(c);
    let value = if c.is_infinite() {
        0.0
    } else {
        8.0 * c / ((1.0 + 2.0 * c) * (1.0 + 2.0 * c))
    };
    RegimeValue {
        value,
        in_regime: c > 0.5,
    }
}

/// Failure probability of the crossed-cavity scheme, `16C/(1+4C)²`; in
/// regime for `C > 1/4`.
pub fn cross_failure_probability(c: f64) -> RegimeValue {
    check_c(c);
    let value = if c.is_infinite() {
        0.0
    } else {
        16.0 * c / ((1.0 + 4.0 * c) * (1.0 + 4.0 * c))
    };
    RegimeValue {
        value,
        in_regime: c > 0.25,
    }
}

/// `t²/(t² + r²) = (4C)²/(1+(4C)²)`.
pub fn post_selected_fidelity(c: f64) -> f64 {
    check_c(c);
    if c.is_infinite() {
        return 1.0;
    }
    let f = 4.0 * c;
    f * f / (1.0 + f * f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn g2_branch_reflects_everything() {
        let p = SystemParams::from_cooperativity(10.0, 0.2).unwrap();
        for w in [-3.0, -0.1, 0.0, 0.4, 5.0] {
            let s = scattering_coefficients(&p, w, AtomLevel::G2).unwrap();
            assert!(s.t.norm() < 1e-15);
            assert!(close(s.r.norm(), 1.0, 1e-14));
        }
    }

    #[test]
    fn resonant_g1_at_c10() {
        let p = SystemParams::from_cooperativity(10.0, 0.2).unwrap();
        let s = scattering_coefficients(&p, 0.0, AtomLevel::G1).unwrap();
        assert!((s.r - C64::new(1.0 / 41.0, 0.0)).norm() < 1e-14);
        assert!((s.t - C64::new(40.0 / 41.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn decoupled_atom_is_empty_cavity() {
        let p = SystemParams::symmetric(0.0, 0.2).unwrap();
        let s = scattering_coefficients(&p, 0.0, AtomLevel::G1).unwrap();
        assert!((s.r - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(s.t.norm() < 1e-15);
    }

    #[test]
    fn asymmetric_parameters_are_rejected() {
        let p = SystemParams::symmetric(0.5, 0.2).unwrap();
        let p = p.with_couplings(C64::new(0.5, 0.0), C64::new(-0.6, 0.0)).unwrap();
        assert!(matches!(
            scattering_coefficients(&p, 0.0, AtomLevel::G1),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn closed_form_values() {
        assert!(close(swap_probability(10.0), (40.0f64 / 41.0).powi(2), 1e-15));
        assert!(close(swap_probability(0.25), 0.25, 1e-15));
        assert_eq!(swap_probability(f64::INFINITY), 1.0);
        assert_eq!(biphoton_survival_probability(0.0), 1.0);
        assert!(close(biphoton_survival_probability(10.0), 1601.0f64.powi(2) / 41.0f64.powi(4), 1e-15));
        assert!(close(biphoton_survival_probability(0.25), 0.25, 1e-15));
        assert!(close(cross_failure_probability(10.0).value, 0.0952, 5e-5));
        assert!(close(dk_failure_probability(10.0).value, 0.1814, 5e-5));
        assert!(close(cross_failure_probability(0.25).value, 1.0, 1e-15));
        assert!(!cross_failure_probability(0.25).in_regime);
        assert!(dk_failure_probability(0.6).in_regime);
        assert!(close(post_selected_fidelity(10.0), 1600.0 / 1601.0, 1e-15));
        assert!(close(post_selected_fidelity(0.25), 0.5, 1e-15));
    }

    #[test]
    fn failure_ratio_tends_to_half() {
        let mut prev = f64::INFINITY;
        for k in 0..40 {
            let c = 0.51 * 1.3f64.powi(k);
            let ratio = cross_failure_probability(c).value / dk_failure_probability(c).value;
            assert!(ratio < prev);
            assert!(ratio > 0.5);
            prev = ratio;
        }
        assert!(prev < 0.505);
    }

    #[test]
    fn resonant_coefficients_match_closed_forms() {
        for c in [0.0, 0.1, 0.25, 1.0, 10.0, 100.0] {
            let p = SystemParams::from_cooperativity(c, 0.2).unwrap();
            let s = scattering_coefficients(&p, 0.0, AtomLevel::G1).unwrap();
            assert!(close(s.t.norm_sqr(), swap_probability(c), 1e-13));
            assert!(close(s.r.norm_sqr(), wrong_port_probability(c), 1e-13));
            let both = (s.t * s.t + s.r * s.r).norm_sqr();
            assert!(close(both, biphoton_survival_probability(c), 1e-13));
        }
    }

    proptest! {
        #[test]
        fn lossless_unitarity(g in 0.0..5.0f64, w in -10.0..10.0f64) {
            let p = SystemParams::symmetric(g, 0.0).unwrap();
            for level in AtomLevel::BOTH {
                let s = scattering_coefficients(&p, w, level).unwrap();
                prop_assert!((s.r.norm_sqr() + s.t.norm_sqr() - 1.0).abs() < 1e-12);
                prop_assert!((s.x_minus.norm() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn x_plus_is_a_phase(g in 0.0..5.0f64, gamma in 0.0..30.0f64, w in -50.0..50.0f64) {
            let p = SystemParams::symmetric(g, gamma).unwrap();
            let s = scattering_coefficients(&p, w, AtomLevel::G1).unwrap();
            prop_assert!((s.x_plus.norm() - 1.0).abs() < 1e-14);
            prop_assert!((s.r - 0.5 * (s.x_plus + s.x_minus)).norm() == 0.0);
            prop_assert!((s.t - 0.5 * (s.x_plus - s.x_minus)).norm() == 0.0);
        }

        #[test]
        fn g2_equals_zero_coupling(g in 0.0..5.0f64, gamma in 0.0..30.0f64, w in -5.0..5.0f64) {
            let p = SystemParams::symmetric(g, gamma).unwrap();
            let s2 = scattering_coefficients(&p, w, AtomLevel::G2).unwrap();
            let s0 = scattering_coefficients(&p.decoupled(), w, AtomLevel::G1).unwrap();
            prop_assert!((s2.r - s0.r).norm() < 1e-15 && (s2.t - s0.t).norm() < 1e-15);
        }

        #[test]
        fn probability_budget(c in 0.0..1e3f64) {
            let total = swap_probability(c) + wrong_port_probability(c) + loss_probability(c);
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(loss_probability(c) >= 0.0);
        }
    }
}
