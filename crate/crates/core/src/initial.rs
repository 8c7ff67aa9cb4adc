//! Initial product state of atom, cavities and reservoirs.

use crate::{Error, Result, C64};

const NORM_TOL: f64 = 1e-10;

/// Atom in `λ1|g1> + λ2|g2>`, both cavities empty, reservoirs in
/// `μa|1>α|0>β + μb|0>α|1>β + μc|1>α|1>β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub lambda_1: C64,
    pub lambda_2: C64,
    pub mu_a: C64,
    pub mu_b: C64,
    pub mu_c: C64,
}

impl InitialState {
    pub fn new(lambda_1: C64, lambda_2: C64, mu_a: C64, mu_b: C64, mu_c: C64) -> Result<Self> {
        let atom = lambda_1.norm_sqr() + lambda_2.norm_sqr();
        if (atom - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!(
                "atomic amplitudes must satisfy |λ1|²+|λ2|² = 1, got {atom}"
            )));
        }
        let field = mu_a.norm_sqr() + mu_b.norm_sqr() + mu_c.norm_sqr();
        if (field - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!(
                "reservoir amplitudes must satisfy |μa|²+|μb|²+|μc|² = 1, got {field}"
            )));
        }
        Ok(Self {
            lambda_1,
            lambda_2,
            mu_a,
            mu_b,
            mu_c,
        })
    }

    /// Atom superposition with both reservoirs in vacuum.
    pub fn vacuum_reservoir(lambda_1: C64, lambda_2: C64) -> Result<Self> {
        let zero = C64::new(0.0, 0.0);
        let s = Self::new(lambda_1, lambda_2, C64::new(1.0, 0.0), zero, zero)?;
        Ok(Self { mu_a: zero, ..s })
    }

    /// Atom superposition with a single photon in the given port amplitudes.
    pub fn single_photon(lambda_1: C64, lambda_2: C64, mu_a: C64, mu_b: C64) -> Result<Self> {
        Self::new(lambda_1, lambda_2, mu_a, mu_b, C64::new(0.0, 0.0))
    }

    pub fn lambda(&self, level: crate::AtomLevel) -> C64 {
        match level {
            crate::AtomLevel::G1 => self.lambda_1,
            crate::AtomLevel::G2 => self.lambda_2,
        }
    }

    pub fn is_vacuum_reservoir(&self) -> bool {
        self.mu_a == C64::new(0.0, 0.0) && self.mu_b == C64::new(0.0, 0.0) && self.mu_c == C64::new(0.0, 0.0)
    }
}
