//! Dark/bright collective modes of the two ports.
//!
//! `X± = (a ± b)/√2`. With the default sign convention `g_b = -g_a` the atom
//! couples only to `X-`, so the single-photon dark state is
//! `(|1>α|0>β + |0>α|1>β)/√2` and the bright state is
//! `(|1>α|0>β - |0>α|1>β)/√2`. The map is its own inverse.

use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectiveMode {
    Dark,
    Bright,
}

impl CollectiveMode {
    /// Port amplitudes `(μa, μb)` of the single-photon collective state.
    pub fn port_amplitudes(self) -> (C64, C64) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            CollectiveMode::Dark => (C64::new(h, 0.0), C64::new(h, 0.0)),
            CollectiveMode::Bright => (C64::new(h, 0.0), C64::new(-h, 0.0)),
        }
    }
}

/// `(α, β) -> ((α + β)/√2, (α - β)/√2)`.
pub fn to_dark_bright(amp_alpha: C64, amp_beta: C64) -> (C64, C64) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ((amp_alpha + amp_beta) * h, (amp_alpha - amp_beta) * h)
}

/// Inverse of [`to_dark_bright`] (the same map).
pub fn from_dark_bright(amp_dark: C64, amp_bright: C64) -> (C64, C64) {
    to_dark_bright(amp_dark, amp_bright)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-15
    }

    #[test]
    fn single_port_photon_is_half_dark_half_bright() {
        let (d, b) = to_dark_bright(c(1.0), c(0.0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(d, c(h)) && close(b, c(h)));
    }

    #[test]
    fn dark_and_bright_states() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (d, b) = to_dark_bright(c(h), c(h));
        assert!(close(d, c(1.0)) && close(b, c(0.0)));
        let (d, b) = to_dark_bright(c(h), c(-h));
        assert!(close(d, c(0.0)) && close(b, c(1.0)));
        let (ma, mb) = CollectiveMode::Bright.port_amplitudes();
        assert!(close(to_dark_bright(ma, mb).1, c(1.0)));
    }

    proptest! {
        #[test]
        fn involution_and_norm(ar in -3.0..3.0f64, ai in -3.0..3.0f64, br in -3.0..3.0f64, bi in -3.0..3.0f64) {
            let (a, b) = (C64::new(ar, ai), C64::new(br, bi));
            let (d, m) = to_dark_bright(a, b);
            let (a2, b2) = from_dark_bright(d, m);
            prop_assert!((a2 - a).norm() < 1e-14 && (b2 - b).norm() < 1e-14);
            let n0 = a.norm_sqr() + b.norm_sqr();
            let n1 = d.norm_sqr() + m.norm_sqr();
            prop_assert!((n0 - n1).abs() <= 1e-14 * n0.max(1.0));
        }
    }
}
