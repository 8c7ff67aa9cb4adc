use crate::sparse::trace;
use crate::C64;

/// Number of hierarchy components `ρ_{m,n;p,q}`, `m, n, p, q ∈ {0, 1}`.
pub const COMPONENTS: usize = 16;

/// Flat index of `ρ_{m,n;p,q}`.
pub const fn component(m: usize, n: usize, p: usize, q: usize) -> usize {
    m * 8 + n * 4 + p * 2 + q
}

/// `(m, n, p, q)` of a flat component index.
pub const fn indices(k: usize) -> (usize, usize, usize, usize) {
    ((k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1)
}

/// Hermitian partner `ρ_{n,m;q,p}` of component `k`.
pub const fn partner(k: usize) -> usize {
    let (m, n, p, q) = indices(k);
    component(n, m, q, p)
}

pub const PHYSICAL: usize = component(1, 1, 1, 1);

/// The sixteen system operators of the hierarchy, each a row-major `d x d`
/// matrix on atom ⊗ cavity a ⊗ cavity b.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyTensor {
    dim: usize,
    data: Vec<C64>,
}

impl HierarchyTensor {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); COMPONENTS * dim * dim],
        }
    }

    /// `ρ_{m,n;p,q} = ρ_sys` when `m = n` and `p = q`, zero otherwise.
    pub fn initial(rho_sys: &[C64], dim: usize) -> Self {
        assert_eq!(rho_sys.len(), dim * dim);
        let mut t = Self::zeros(dim);
        for k in 0..COMPONENTS {
            let (m, n, p, q) = indices(k);
            if m == n && p == q {
                t.component_mut(k).copy_from_slice(rho_sys);
            }
        }
        t
    }

    pub(crate) fn from_flat(dim: usize, data: &[C64]) -> Self {
        Self {
            dim,
            data: data[..COMPONENTS * dim * dim].to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_flat(&self) -> &[C64] {
        &self.data
    }

    pub fn component(&self, k: usize) -> &[C64] {
        let d2 = self.dim * self.dim;
        &self.data[k * d2..(k + 1) * d2]
    }

    pub fn component_mut(&mut self, k: usize) -> &mut [C64] {
        let d2 = self.dim * self.dim;
        &mut self.data[k * d2..(k + 1) * d2]
    }

    pub fn get(&self, m: usize, n: usize, p: usize, q: usize) -> &[C64] {
        self.component(component(m, n, p, q))
    }

    /// The physical reduced state `ρ_{1,1;1,1}`.
    pub fn physical(&self) -> &[C64] {
        self.component(PHYSICAL)
    }

    pub fn trace_error(&self) -> f64 {
        trace_error(self.physical(), self.dim)
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.data, self.dim)
    }
}

pub(crate) fn trace_error(rho: &[C64], dim: usize) -> f64 {
    (trace(rho, dim) - C64::new(1.0, 0.0)).norm()
}

/// Largest entry of `ρ_{m,n;p,q} - ρ_{n,m;q,p}†` over all components.
pub(crate) fn hermiticity_error(data: &[C64], dim: usize) -> f64 {
    let d2 = dim * dim;
    let mut worst: f64 = 0.0;
    for k in 0..COMPONENTS {
        let j = partner(k);
        if j < k {
            continue;
        }
        let x = &data[k * d2..(k + 1) * d2];
        let y = &data[j * d2..(j + 1) * d2];
        for r in 0..dim {
            for c in 0..dim {
                worst = worst.max((x[r * dim + c] - y[c * dim + r].conj()).norm());
            }
        }
    }
    worst
}
