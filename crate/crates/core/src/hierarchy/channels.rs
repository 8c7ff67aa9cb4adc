use nalgebra::{DMatrix, Matrix3};

use crate::fock::{AtomState, FockSpace};
use crate::sparse::SparseOp;
use crate::{AtomLevel, Error, Result, SystemParams, C64};

/// Density operator of the bare atom in the basis `(g1, g2, e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomDensity(Matrix3<C64>);

impl AtomDensity {
    pub fn new(rho: Matrix3<C64>) -> Result<Self> {
        let tr = rho.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::invalid(format!("atomic density must have unit trace, got {tr}")));
        }
        if (rho - rho.adjoint()).norm() > 1e-10 {
            return Err(Error::invalid("atomic density must be Hermitian"));
        }
        let eig = rho.symmetric_eigenvalues();
        if eig.iter().any(|&e| e < -1e-10) {
            return Err(Error::invalid(format!("atomic density must be positive, eigenvalues {eig:?}")));
        }
        Ok(Self(rho))
    }

    pub fn level(level: AtomLevel) -> Self {
        Self::pure(match level {
            AtomLevel::G1 => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
            AtomLevel::G2 => (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        })
    }

    /// `|ψ><ψ|` for `ψ = λ1|g1> + λ2|g2>`.
    pub fn superposition(lambda_1: C64, lambda_2: C64) -> Result<Self> {
        let n = lambda_1.norm_sqr() + lambda_2.norm_sqr();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("|λ1|²+|λ2|² must be 1, got {n}")));
        }
        Ok(Self::pure((lambda_1, lambda_2)))
    }

    fn pure((l1, l2): (C64, C64)) -> Self {
        let v = nalgebra::Vector3::new(l1, l2, C64::new(0.0, 0.0));
        Self(v * v.adjoint())
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.0
    }

    /// Index of an atomic level in the `(g1, g2, e)` basis.
    pub fn slot(atom: AtomState) -> usize {
        match atom {
            AtomState::G1 => 0,
            AtomState::G2 => 1,
            AtomState::E => 2,
        }
    }

    /// `ρ_atom ⊗ |0,0><0,0|` on the given space, row-major.
    pub fn embed(&self, space: &FockSpace) -> Vec<C64> {
        let d = space.dim();
        let mut rho = vec![C64::new(0.0, 0.0); d * d];
        let vacuum = vec![0u8; space.n_modes()];
        for a in AtomState::ALL {
            for b in AtomState::ALL {
                let (Some(i), Some(j)) = (space.index_of(a, &vacuum), space.index_of(b, &vacuum)) else {
                    continue;
                };
                rho[i * d + j] = self.0[(Self::slot(a), Self::slot(b))];
            }
        }
        rho
    }
}

/// System Hamiltonian and collapse operators on atom ⊗ cavity a ⊗ cavity b.
#[derive(Debug, Clone)]
pub struct LindbladChannels {
    pub space: FockSpace,
    /// `(g_a a + g_b b) σ+ + h.c.` with `σ+ = |e><g1|`.
    pub hamiltonian: SparseOp,
    /// `√(2κ_a) a`.
    pub l_a: SparseOp,
    /// `√(2κ_b) b`.
    pub l_b: SparseOp,
    /// `√(2Γ1) |g1><e|`.
    pub l_1: SparseOp,
    /// `√(2Γ2) |g2><e|`.
    pub l_2: SparseOp,
}

impl LindbladChannels {
    pub fn new(params: &SystemParams, n_max: u8) -> Self {
        let space = FockSpace::product(&AtomState::ALL, 2, n_max);
        let hamiltonian = space.atom_cavity_coupling(&[(0, params.g_a()), (1, params.g_b())]);
        let r = |x: f64| C64::new(x.sqrt(), 0.0);
        let l_a = space.annihilation(0).scale(r(2.0 * params.kappa_a()));
        let l_b = space.annihilation(1).scale(r(2.0 * params.kappa_b()));
        let l_1 = space.transition(AtomState::G1, AtomState::E).scale(r(2.0 * params.gamma_1()));
        let l_2 = space.transition(AtomState::G2, AtomState::E).scale(r(2.0 * params.gamma_2()));
        Self {
            space,
            hamiltonian,
            l_a,
            l_b,
            l_1,
            l_2,
        }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn jumps(&self) -> [&SparseOp; 4] {
        [&self.l_a, &self.l_b, &self.l_1, &self.l_2]
    }

    /// `H - (i/2) Σ L†L`.
    pub fn effective_hamiltonian(&self) -> SparseOp {
        let mut h = self.hamiltonian.clone();
        for l in self.jumps() {
            h = h.add(&l.adjoint().mul(l).scale(C64::new(0.0, -0.5)));
        }
        h
    }

    pub fn excited_projector(&self) -> SparseOp {
        self.space.transition(AtomState::E, AtomState::E)
    }
}

/// `D[L]ρ = L ρ L† - (L†L ρ + ρ L†L)/2` as a dense matrix, for checks.
pub fn dissipator(l: &SparseOp, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let l = l.to_dense();
    let ldl = l.adjoint() * &l;
    &l * rho * l.adjoint() - (&ldl * rho + rho * &ldl) * C64::new(0.5, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_matrix(d: usize, vals: &[f64]) -> DMatrix<C64> {
        DMatrix::from_fn(d, d, |r, c| {
            let k = (r * d + c) % (vals.len() / 2);
            C64::new(vals[2 * k], vals[2 * k + 1])
        })
    }

    #[test]
    fn atom_density_validation() {
        assert!(AtomDensity::new(Matrix3::identity()).is_err());
        let mut m = Matrix3::zeros();
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(AtomDensity::new(m).is_err());
        let s = AtomDensity::superposition(C64::new(0.6, 0.0), C64::new(0.0, 0.8)).unwrap();
        assert!(AtomDensity::new(*s.matrix()).is_ok());
    }

    #[test]
    fn embedding_preserves_trace() {
        let ch = LindbladChannels::new(&SystemParams::symmetric(0.5, 0.2).unwrap(), 2);
        let s = AtomDensity::superposition(C64::new(0.6, 0.0), C64::new(0.0, 0.8)).unwrap();
        let rho = s.embed(&ch.space);
        assert!((crate::sparse::trace(&rho, ch.dim()) - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn dissipators_are_trace_annihilating(vals in proptest::collection::vec(-1.0..1.0f64, 40)) {
            let params = SystemParams::new(
                C64::new(0.4, 0.1), C64::new(-0.3, 0.0), 1.0, 0.7, 0.15, 0.05,
            ).unwrap();
            let ch = LindbladChannels::new(&params, 2);
            let rho = random_matrix(ch.dim(), &vals);
            for l in ch.jumps() {
                prop_assert!(dissipator(l, &rho).trace().norm() < 1e-12);
            }
        }
    }
}
