//! Sparse operators acting on dense row-major density matrices.
//!
//! Superoperators are never assembled; every Lindblad or hierarchy term is a
//! sequence of left and right multiplications of a dense `d x d` matrix by a
//! sparse operator.

use nalgebra::DMatrix;

use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))).collect(),
        }
    }

    /// Builds an operator from triplets, summing duplicates and dropping
    /// exact zeros.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut map = std::collections::BTreeMap::new();
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dimension {dim}");
            *map.entry((r, c)).or_insert(C64::new(0.0, 0.0)) += v;
        }
        Self {
            dim,
            entries: map
                .into_iter()
                .filter(|(_, v)| *v != C64::new(0.0, 0.0))
                .map(|((r, c), v)| (r, c, v))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_triplets(self.dim, self.entries.iter().map(|&(r, c, v)| (r, c, v * s)))
    }

    pub fn add(&self, other: &SparseOp) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_triplets(self.dim, self.entries.iter().chain(other.entries.iter()).copied())
    }

    /// Operator product `self · other`.
    pub fn mul(&self, other: &SparseOp) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut triplets = Vec::new();
        for &(r, k, v) in &self.entries {
            for &(k2, c, w) in &other.entries {
                if k == k2 {
                    triplets.push((r, c, v * w));
                }
            }
        }
        Self::from_triplets(self.dim, triplets)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// `y += s · A x` for a vector `x`.
    pub fn apply_vec_add(&self, x: &[C64], y: &mut [C64], s: C64) {
        for &(r, c, v) in &self.entries {
            y[r] += s * v * x[c];
        }
    }

    /// `out += s · A ρ` for row-major `ρ`.
    pub fn left_mul_add(&self, rho: &[C64], out: &mut [C64], s: C64) {
        let d = self.dim;
        for &(r, c, v) in &self.entries {
            let f = s * v;
            let src = &rho[c * d..(c + 1) * d];
            let dst = &mut out[r * d..(r + 1) * d];
            for (o, x) in dst.iter_mut().zip(src) {
                *o += f * x;
            }
        }
    }

    /// `out += s · ρ A` for row-major `ρ`.
    pub fn right_mul_add(&self, rho: &[C64], out: &mut [C64], s: C64) {
        let d = self.dim;
        for &(r, c, v) in &self.entries {
            let f = s * v;
            for i in 0..d {
                out[i * d + c] += f * rho[i * d + r];
            }
        }
    }

    /// `out += s · A ρ B` using `scratch` (length `d²`) for the intermediate.
    pub fn sandwich_add(&self, rho: &[C64], right: &SparseOp, out: &mut [C64], s: C64, scratch: &mut [C64]) {
        scratch.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        self.left_mul_add(rho, scratch, C64::new(1.0, 0.0));
        right.right_mul_add(scratch, out, s);
    }

    /// `Tr[ρ† A] = Σ conj(ρ_ij) A_ij`.
    pub fn expectation_dagger(&self, rho: &[C64]) -> C64 {
        let d = self.dim;
        self.entries
            .iter()
            .map(|&(r, c, v)| rho[r * d + c].conj() * v)
            .sum()
    }

    /// `Tr[A ρ]`.
    pub fn trace_with(&self, rho: &[C64]) -> C64 {
        let d = self.dim;
        self.entries.iter().map(|&(r, c, v)| v * rho[c * d + r]).sum()
    }
}

pub fn trace(rho: &[C64], dim: usize) -> C64 {
    (0..dim).map(|i| rho[i * dim + i]).sum()
}
