//! Scattering of single- and two-photon pulses on a crossed-cavity system
//! containing a Λ-type three-level atom, and the CNOT and Fredkin gates built
//! on it.
//!
//! All rates are in units of the cavity field decay rate κ (κ = 1 fixes the
//! time unit). By default the two couplings obey `g_b = -g_a`, which makes
//! the antisymmetric collective mode `(a - b)/√2` the *bright* mode (the one
//! the atom couples to) and the symmetric mode `(a + b)/√2` the *dark* mode.
//!
//! Four independent routes to the scattering problem are provided:
//!
//! * [`analytic`]: closed-form frequency-domain response in the weak-excitation
//!   (bosonised atom) limit.
//! * [`semiclassical`]: mean-field equations driven by coherent amplitudes.
//! * [`single_excitation`]: exact non-Hermitian Schrödinger dynamics in the
//!   one-excitation sector.
//! * [`hierarchy`]: Fock-state master equation hierarchy with output fluxes
//!   and a two-time coincidence integral.
//!
//! [`timebin`] is a brute-force collision-model reference used to validate
//! the others, and [`gates`] assembles solver output into truth tables.

pub mod analytic;
pub mod collective;
pub mod error;
pub mod fock;
pub mod gates;
pub mod grid;
pub mod hierarchy;
pub mod initial;
pub mod ode;
pub mod params;
pub mod pulse;
pub mod semiclassical;
pub mod single_excitation;
pub mod sparse;
pub mod timebin;

pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use initial::InitialState;
pub use params::{AtomLevel, SystemParams};
pub use pulse::{Envelope, PulseShape};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

pub(crate) fn trapezoid(dt: f64, values: impl IntoIterator<Item = f64>) -> f64 {
    let mut first = None;
    let mut last = 0.0;
    let mut sum = 0.0;
    for v in values {
        if first.is_none() {
            first = Some(v);
        }
        sum += v;
        last = v;
    }
    match first {
        None => 0.0,
        Some(f) => dt * (sum - 0.5 * (f + last)),
    }
}
