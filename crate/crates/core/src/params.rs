//! Physical rates of the crossed-cavity system.

use crate::{Error, Result, C64};

/// Relative tolerance used when deciding whether a parameter set is in the
/// symmetric configuration.
const SYMMETRY_TOL: f64 = 1e-12;

/// Which metastable ground state the atom occupies.
///
/// Only `G1` couples to the cavity modes (through the `g1 <-> e` transition).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomLevel {
    G1,
    G2,
}

impl AtomLevel {
    pub const BOTH: [AtomLevel; 2] = [AtomLevel::G1, AtomLevel::G2];

    pub fn index(self) -> usize {
        match self {
            AtomLevel::G1 => 0,
            AtomLevel::G2 => 1,
        }
    }
}

/// Rates of the system Hamiltonian and its loss channels, in units of κ.
///
/// `kappa_a`, `kappa_b` are field-amplitude decay rates of the two
/// single-sided cavities. `gamma_1`, `gamma_2` are the amplitude decay rates
/// of the excited state into `|g1>` and `|g2>`; the total is
/// `gamma_total = gamma_1 + gamma_2`.
///
/// The convenience convention is `g_b = -g_a`. With that sign the
/// antisymmetric combination of the two cavity modes is the one coupled to
/// the atom (bright) and the symmetric one is dark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    g_a: C64,
    g_b: C64,
    kappa_a: f64,
    kappa_b: f64,
    gamma_1: f64,
    gamma_2: f64,
}

impl SystemParams {
    pub fn new(
        g_a: C64,
        g_b: C64,
        kappa_a: f64,
        kappa_b: f64,
        gamma_1: f64,
        gamma_2: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("kappa_a", kappa_a),
            ("kappa_b", kappa_b),
            ("gamma_1", gamma_1),
            ("gamma_2", gamma_2),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(g_a.is_finite() && g_b.is_finite()) {
            return Err(Error::invalid("couplings must be finite"));
        }
        Ok(Self {
            g_a,
            g_b,
            kappa_a,
            kappa_b,
            gamma_1,
            gamma_2,
        })
    }

    /// Symmetric configuration: `g_a = g`, `g_b = -g`, `κ_a = κ_b = 1`,
    /// `Γ_1 = Γ_2 = Γ/2`.
    pub fn symmetric(g: f64, gamma_total: f64) -> Result<Self> {
        if g < 0.0 {
            return Err(Error::invalid(format!("coupling must be >= 0, got {g}")));
        }
        Self::new(
            C64::new(g, 0.0),
            C64::new(-g, 0.0),
            1.0,
            1.0,
            0.5 * gamma_total,
            0.5 * gamma_total,
        )
    }

    /// Symmetric configuration with the coupling chosen to give cooperativity
    /// `c` at total decay `gamma_total`: `g = sqrt(2 κ Γ C)`.
    pub fn from_cooperativity(c: f64, gamma_total: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::invalid(format!("cooperativity must be >= 0, got {c}")));
        }
        Self::symmetric((2.0 * gamma_total * c).sqrt(), gamma_total)
    }

    pub fn g_a(&self) -> C64 {
        self.g_a
    }
    pub fn g_b(&self) -> C64 {
        self.g_b
    }
    pub fn kappa_a(&self) -> f64 {
        self.kappa_a
    }
    pub fn kappa_b(&self) -> f64 {
        self.kappa_b
    }
    pub fn gamma_1(&self) -> f64 {
        self.gamma_1
    }
    pub fn gamma_2(&self) -> f64 {
        self.gamma_2
    }
    pub fn gamma_total(&self) -> f64 {
        self.gamma_1 + self.gamma_2
    }

    pub fn with_couplings(&self, g_a: C64, g_b: C64) -> Result<Self> {
        Self::new(g_a, g_b, self.kappa_a, self.kappa_b, self.gamma_1, self.gamma_2)
    }

    pub fn with_kappas(&self, kappa_a: f64, kappa_b: f64) -> Result<Self> {
        Self::new(self.g_a, self.g_b, kappa_a, kappa_b, self.gamma_1, self.gamma_2)
    }

    /// Same rates with the atom decoupled (`g_a = g_b = 0`).
    pub fn decoupled(&self) -> Self {
        Self {
            g_a: C64::new(0.0, 0.0),
            g_b: C64::new(0.0, 0.0),
            ..*self
        }
    }

    /// Parameters seen by a system whose ports are relabelled `a <-> b`.
    pub fn port_swapped(&self) -> Self {
        Self {
            g_a: self.g_b,
            g_b: self.g_a,
            kappa_a: self.kappa_b,
            kappa_b: self.kappa_a,
            ..*self
        }
    }

    /// `|g_a| = |g_b|` and `κ_a = κ_b`.
    pub fn has_symmetric_magnitudes(&self) -> bool {
        close(self.g_a.norm(), self.g_b.norm()) && close(self.kappa_a, self.kappa_b)
    }

    /// `g_b = -g_a` and `κ_a = κ_b`: the configuration the closed forms cover.
    pub fn is_symmetric(&self) -> bool {
        let scale = self.g_a.norm().max(self.g_b.norm());
        (self.g_a + self.g_b).norm() <= SYMMETRY_TOL * scale.max(1.0)
            && close(self.kappa_a, self.kappa_b)
    }

    /// Coupling magnitude `g` in the symmetric configuration.
    pub fn coupling(&self) -> f64 {
        self.g_a.norm()
    }

    /// Cooperativity `C = g² / (2 κ Γ)`.
    pub fn cooperativity(&self) -> Result<f64> {
        cooperativity(self)
    }
}

/// Cooperativity `C = g² / (2 κ Γ)` for the symmetric configuration.
pub fn cooperativity(params: &SystemParams) -> Result<f64> {
    if !params.has_symmetric_magnitudes() {
        return Err(Error::Unsupported(
            "cooperativity is defined for |g_a| = |g_b| and κ_a = κ_b; \
             use the per-branch rates directly"
                .into(),
        ));
    }
    let gamma = params.gamma_total();
    if gamma == 0.0 {
        return Err(Error::invalid("cooperativity diverges for Γ = 0 (division by zero)"));
    }
    let g = params.coupling();
    Ok(g * g / (2.0 * params.kappa_a * gamma))
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= SYMMETRY_TOL * x.abs().max(y.abs()).max(1.0)
}
