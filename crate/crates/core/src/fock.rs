//! Truncated Hilbert spaces of the atom and a handful of bosonic modes.
//!
//! A basis state is an atomic level plus an occupation number per mode.
//! Spaces are either a full product with a per-mode cutoff or restricted to
//! a fixed total excitation number (an excited atom counts as one
//! excitation). Operators are assembled by mapping basis states; images that
//! fall outside the space are dropped.

use std::collections::HashMap;

use crate::sparse::SparseOp;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomState {
    G1,
    G2,
    E,
}

impl AtomState {
    pub const ALL: [AtomState; 3] = [AtomState::G1, AtomState::G2, AtomState::E];

    pub fn excitation(self) -> u32 {
        match self {
            AtomState::E => 1,
            _ => 0,
        }
    }
}

impl From<crate::AtomLevel> for AtomState {
    fn from(l: crate::AtomLevel) -> Self {
        match l {
            crate::AtomLevel::G1 => AtomState::G1,
            crate::AtomLevel::G2 => AtomState::G2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    pub atom: AtomState,
    pub occ: Vec<u8>,
}

impl BasisState {
    pub fn new(atom: AtomState, occ: &[u8]) -> Self {
        Self {
            atom,
            occ: occ.to_vec(),
        }
    }

    pub fn excitation(&self) -> u32 {
        self.atom.excitation() + self.occ.iter().map(|&n| n as u32).sum::<u32>()
    }

    pub fn annihilate(&self, mode: usize) -> Option<(BasisState, f64)> {
        let n = self.occ[mode];
        if n == 0 {
            return None;
        }
        let mut s = self.clone();
        s.occ[mode] -= 1;
        Some((s, (n as f64).sqrt()))
    }

    pub fn create(&self, mode: usize) -> Option<(BasisState, f64)> {
        let n = self.occ[mode];
        let mut s = self.clone();
        s.occ[mode] = n.checked_add(1)?;
        Some((s, ((n + 1) as f64).sqrt()))
    }

    /// `|to><from|` on the atom.
    pub fn transition(&self, to: AtomState, from: AtomState) -> Option<BasisState> {
        if self.atom != from {
            return None;
        }
        let mut s = self.clone();
        s.atom = to;
        Some(s)
    }
}

#[derive(Debug, Clone)]
pub struct FockSpace {
    n_modes: usize,
    cutoff: u8,
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

impl FockSpace {
    /// Full product of the given atomic levels and `n_modes` modes with
    /// occupations `0..=cutoff`.
    pub fn product(atom_levels: &[AtomState], n_modes: usize, cutoff: u8) -> Self {
        Self::build(atom_levels, n_modes, cutoff, None)
    }

    /// Subspace with total excitation exactly `excitation`.
    pub fn with_excitation(atom_levels: &[AtomState], n_modes: usize, cutoff: u8, excitation: u32) -> Self {
        Self::build(atom_levels, n_modes, cutoff, Some(excitation))
    }

    fn build(atom_levels: &[AtomState], n_modes: usize, cutoff: u8, excitation: Option<u32>) -> Self {
        let mut states = Vec::new();
        for &atom in atom_levels {
            let mut occ = vec![0u8; n_modes];
            loop {
                let s = BasisState::new(atom, &occ);
                if excitation.map_or(true, |n| s.excitation() == n) {
                    states.push(s);
                }
                // Odometer increment, last mode fastest.
                let mut m = n_modes;
                loop {
                    if m == 0 {
                        break;
                    }
                    m -= 1;
                    if occ[m] < cutoff {
                        occ[m] += 1;
                        break;
                    }
                    occ[m] = 0;
                    if m == 0 {
                        m = usize::MAX;
                        break;
                    }
                }
                if m == usize::MAX || n_modes == 0 {
                    break;
                }
            }
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self {
            n_modes,
            cutoff,
            states,
            index,
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }
    pub fn cutoff(&self) -> u8 {
        self.cutoff
    }
    pub fn states(&self) -> &[BasisState] {
        &self.states
    }
    pub fn state(&self, i: usize) -> &BasisState {
        &self.states[i]
    }

    pub fn index_of(&self, atom: AtomState, occ: &[u8]) -> Option<usize> {
        self.index.get(&BasisState::new(atom, occ)).copied()
    }

    pub fn index_of_state(&self, s: &BasisState) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Operator whose column `j` is `f(state j)`.
    pub fn operator<F>(&self, f: F) -> SparseOp
    where
        F: Fn(&BasisState) -> Vec<(BasisState, C64)>,
    {
        let mut triplets = Vec::new();
        for (j, s) in self.states.iter().enumerate() {
            for (target, amp) in f(s) {
                if let Some(&i) = self.index.get(&target) {
                    triplets.push((i, j, amp));
                }
            }
        }
        SparseOp::from_triplets(self.dim(), triplets)
    }

    pub fn annihilation(&self, mode: usize) -> SparseOp {
        self.operator(|s| {
            s.annihilate(mode)
                .map(|(t, a)| vec![(t, C64::new(a, 0.0))])
                .unwrap_or_default()
        })
    }

    pub fn number(&self, mode: usize) -> SparseOp {
        self.operator(|s| vec![(s.clone(), C64::new(s.occ[mode] as f64, 0.0))])
    }

    pub fn transition(&self, to: AtomState, from: AtomState) -> SparseOp {
        self.operator(|s| {
            s.transition(to, from)
                .map(|t| vec![(t, C64::new(1.0, 0.0))])
                .unwrap_or_default()
        })
    }

    /// `Σ_m (g_m a_m σ+ + g_m* a_m† σ-)` with `σ+ = |e><g1|`, where `modes`
    /// pairs mode indices with couplings. Excitation-preserving, so it can be
    /// built inside fixed-excitation spaces.
    pub fn atom_cavity_coupling(&self, modes: &[(usize, C64)]) -> SparseOp {
        self.operator(|s| {
            let mut out = Vec::new();
            for &(m, g) in modes {
                if let Some((t, a)) = s.annihilate(m) {
                    if let Some(t) = t.transition(AtomState::E, AtomState::G1) {
                        out.push((t, g * a));
                    }
                }
                if let Some(t) = s.transition(AtomState::G1, AtomState::E) {
                    if let Some((t, a)) = t.create(m) {
                        out.push((t, g.conj() * a));
                    }
                }
            }
            out
        })
    }

    /// `a_i† a_j - a_j† a_i` (anti-Hermitian beam-splitter generator).
    pub fn beam_splitter_generator(&self, i: usize, j: usize) -> SparseOp {
        self.operator(|s| {
            let mut out = Vec::new();
            if let Some((t, a)) = s.annihilate(j) {
                if let Some((t, b)) = t.create(i) {
                    out.push((t, C64::new(a * b, 0.0)));
                }
            }
            if let Some((t, a)) = s.annihilate(i) {
                if let Some((t, b)) = t.create(j) {
                    out.push((t, C64::new(-a * b, 0.0)));
                }
            }
            out
        })
    }
}
