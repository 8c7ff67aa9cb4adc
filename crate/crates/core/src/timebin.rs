//! Brute-force collision-model reference for one- and two-photon scattering.
//!
//! Each waveguide is cut into bins of width `Δt`. During step `k` the
//! incoming bin `k` of each waveguide meets its cavity through the beam
//! splitter `exp(θ(a†c - a c†))`, `θ = √(2κΔt)`, sandwiched between two
//! half steps of `exp(-i H_eff Δt/2)` with `H_eff = H - iΓσ_ee`. After the
//! step the bin is an output bin and never interacts again.
//!
//! The two-photon state is kept exactly in the ≤ 2 excitation sector without
//! enumerating every bin pair:
//!
//! ```text
//! |Ψ_k> = |A_k>|B_k> + |A_k> ⊗ φ_b + |B_k> ⊗ φ_a + Ω
//! ```
//!
//! where `|A_k>`, `|B_k>` are the parts of the input wavepackets not yet
//! arrived, `φ_a`, `φ_b` are one-photon evolutions of each wavepacket alone
//! (system amplitudes plus output-bin amplitudes), and `Ω` holds both
//! excitations in the system (`E2`) or one in the system and one in output
//! bin `p` (`E1[p]`). Once both photons sit in output bins their amplitude is
//! final, so only its weight is accumulated by port class.
//!
//! Atomic emission removes norm from the pure state. The photon that
//! survives such an event is followed in a small density matrix over
//! `{one excitation in the system} ⊕ {photon still to arrive}` until it is
//! emitted or lost too.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::fock::{AtomState, FockSpace};
use crate::single_excitation::Port;
use crate::{AtomLevel, Envelope, Error, Result, SystemParams, TimeGrid, C64};

/// Largest allowed `Δt` times the fastest rate of the model.
pub const MAX_RATE_STEP: f64 = 0.5;
/// Unfinished probability (still in the system or not yet arrived) above
/// which a run counts as truncated.
pub const TRUNCATION_TOL: f64 = 1e-4;
/// Allowed drift of the probability bookkeeping over a run.
pub const BOOKKEEPING_TOL: f64 = 1e-6;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub enum TimebinInput {
    /// One photon in `μa|1>α + μb|1>β`, both ports sharing the envelope.
    SinglePhoton { mu_a: C64, mu_b: C64, envelope: Envelope },
    /// One photon in each port.
    Biphoton { envelope_a: Envelope, envelope_b: Envelope },
}

impl TimebinInput {
    pub fn photons(&self) -> usize {
        match self {
            TimebinInput::SinglePhoton { .. } => 1,
            TimebinInput::Biphoton { .. } => 2,
        }
    }

    fn time_scale(&self) -> f64 {
        match self {
            TimebinInput::SinglePhoton { envelope, .. } => envelope.time_scale(),
            TimebinInput::Biphoton { envelope_a, envelope_b } => envelope_a.time_scale().min(envelope_b.time_scale()),
        }
    }
}

/// Photon-counting distribution at the output ports.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputDistribution {
    pub photons_in: usize,
    /// `counts[n_a][n_b]`: probability of detecting `n_a` photons in port a
    /// and `n_b` in port b; missing photons were scattered out by the atom.
    pub counts: [[f64; 3]; 3],
    pub t_start: f64,
    pub dt: f64,
    /// Mean photon number per output bin divided by `Δt`, per port.
    pub flux: [Vec<f64>; 2],
    /// Output amplitude per bin for single-photon inputs, per atomic branch
    /// and port, in the sign convention `z_out = √(2κ) z - z_in`. Empty for
    /// two-photon inputs.
    pub amplitudes: [[Vec<C64>; 2]; 2],
    /// Probability still inside the system or not yet arrived at the end.
    pub unresolved: f64,
    /// Two-photon inputs: `|<e_a e_b|Ψ>|²`, the weight of the output on one
    /// photon per port with the envelopes an empty cavity would return.
    pub pair_overlap: Option<f64>,
}

impl OutputDistribution {
    pub fn both_a(&self) -> f64 {
        self.counts[2][0]
    }
    pub fn one_each(&self) -> f64 {
        self.counts[1][1]
    }
    pub fn both_b(&self) -> f64 {
        self.counts[0][2]
    }
    /// Exactly one photon short of the input.
    pub fn one_lost(&self) -> f64 {
        match self.photons_in {
            2 => self.counts[1][0] + self.counts[0][1],
            _ => self.counts[0][0],
        }
    }
    pub fn both_lost(&self) -> f64 {
        match self.photons_in {
            2 => self.counts[0][0],
            _ => 0.0,
        }
    }
    /// Single-photon input: probability of leaving through `port`.
    pub fn exit(&self, port: Port) -> f64 {
        match port {
            Port::A => self.counts[1][0],
            Port::B => self.counts[0][1],
        }
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().flatten().sum()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.flux[0].len())
            .map(|k| self.t_start + (k as f64 + 0.5) * self.dt)
            .collect()
    }

    fn add_weighted(&mut self, other: &OutputDistribution, w: f64) {
        for (a, b) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            *a += w * b;
        }
        for port in 0..2 {
            for (a, b) in self.flux[port].iter_mut().zip(&other.flux[port]) {
                *a += w * b;
            }
        }
        self.unresolved += w * other.unresolved;
        if let Some(o) = other.pair_overlap {
            *self.pair_overlap.get_or_insert(0.0) += w * o;
        }
    }
}

/// Grid of bins of width close to `dt` covering `[0, t0 + 5η]`.
pub fn timebin_grid(envelope: &Envelope, dt: f64) -> Result<TimeGrid> {
    let (_, end) = envelope.support();
    let t_end = end - envelope.time_scale();
    let m = (t_end / dt).ceil().max(2.0) as usize;
    TimeGrid::new(0.0, t_end, m)
}

/// Bin-averaged input amplitudes `∫_bin u dt / √Δt`, renormalised to unit
/// total weight.
fn bin_amplitudes(envelope: &Envelope, grid: &TimeGrid) -> Vec<C64> {
    // 3-point Gauss-Legendre per bin
    let nodes = [(-(0.6f64).sqrt(), 5.0 / 9.0), (0.0, 8.0 / 9.0), ((0.6f64).sqrt(), 5.0 / 9.0)];
    let dt = grid.dt();
    let mut amps: Vec<C64> = (0..grid.n_steps())
        .map(|k| {
            let mid = grid.t_start() + (k as f64 + 0.5) * dt;
            let avg: C64 = nodes
                .iter()
                .map(|&(x, w)| envelope.amplitude(mid + 0.5 * dt * x) * (0.5 * w))
                .sum();
            avg * dt.sqrt()
        })
        .collect();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        amps.iter_mut().for_each(|a| *a /= norm);
    }
    amps
}

/// `N_k = Σ_{j ≥ k} |ξ_j|²` with a trailing zero.
fn suffix_weights(amps: &[C64]) -> Vec<f64> {
    let mut n = vec![0.0; amps.len() + 1];
    for k in (0..amps.len()).rev() {
        n[k] = n[k + 1] + amps[k].norm_sqr();
    }
    n
}

/// Where a local basis state goes after a step.
#[derive(Debug, Clone, Copy)]
enum Slot {
    /// Both bins empty: index into the system list.
    System(usize),
    /// One photon in the bin of `port`, system part at the given index of
    /// the one-excitation system list.
    OneBin { port: usize, system: usize },
    /// Both photons in bins, counted as `(n_a, n_b)`.
    TwoBins(usize, usize),
    /// A ground atom and one bin photon (one-excitation space).
    Emitted { port: usize },
}

/// Step propagators and index maps of the local spaces
/// atom ⊗ cav_a ⊗ cav_b ⊗ bin_a ⊗ bin_b.
struct Local {
    n1: usize,
    s1: Vec<C64>,
    slots1: Vec<Slot>,
    /// L1 indices of the one-excitation system states (bins empty).
    sys1: Vec<usize>,
    /// L1 index of `|g_j> ⊗ |bin_w>`: `[atom][port]`.
    bin1: [[usize; 2]; 2],
    n2: usize,
    s2: DMatrix<C64>,
    slots2: Vec<Slot>,
    sys2: Vec<usize>,
    /// L2 index of `sys1[i] ⊗ |bin_w>`: `[i][port]`.
    sys1_bin2: Vec<[usize; 2]>,
    /// L2 index of `|g_j> ⊗ |bin_a, bin_b>`.
    both_bins2: [usize; 2],
    /// `√(2Γ_j)|g_j><e|` from L2 to L1, `j = 1, 2`.
    jumps: [DMatrix<C64>; 2],
    gamma_share: [f64; 2],
}

fn ground_slot(level: AtomLevel) -> usize {
    level.index()
}

impl Local {
    fn new(params: &SystemParams, dt: f64) -> Self {
        let l1 = FockSpace::with_excitation(&AtomState::ALL, 4, 1, 1);
        let l2 = FockSpace::with_excitation(&AtomState::ALL, 4, 2, 2);
        let step = |space: &FockSpace| -> DMatrix<C64> {
            let h = space
                .atom_cavity_coupling(&[(0, params.g_a()), (1, params.g_b())])
                .add(&space.transition(AtomState::E, AtomState::E).scale(C64::new(0.0, -params.gamma_total())));
            let half = (h.to_dense() * C64::new(0.0, -0.5 * dt)).exp();
            let gen = space
                .beam_splitter_generator(0, 2)
                .scale(C64::new((2.0 * params.kappa_a() * dt).sqrt(), 0.0))
                .add(&space.beam_splitter_generator(1, 3).scale(C64::new((2.0 * params.kappa_b() * dt).sqrt(), 0.0)));
            let bs = gen.to_dense().exp();
            &half * bs * &half
        };
        let s1 = step(&l1);
        let s2 = step(&l2);

        let sys1: Vec<usize> = (0..l1.dim())
            .filter(|&i| {
                let s = l1.state(i);
                s.occ[2] == 0 && s.occ[3] == 0
            })
            .collect();
        let sys1_pos = |atom: AtomState, ca: u8, cb: u8| {
            sys1.iter()
                .position(|&i| {
                    let s = l1.state(i);
                    s.atom == atom && s.occ[0] == ca && s.occ[1] == cb
                })
                .expect("one-excitation system state")
        };
        let slots1 = (0..l1.dim())
            .map(|i| {
                let s = l1.state(i);
                match (s.occ[2], s.occ[3]) {
                    (0, 0) => Slot::System(sys1.iter().position(|&j| j == i).unwrap()),
                    (1, 0) => Slot::Emitted { port: 0 },
                    _ => Slot::Emitted { port: 1 },
                }
            })
            .collect();
        let idx1 = |atom, occ: [u8; 4]| l1.index_of(atom, &occ).unwrap();
        let bin1 = [
            [idx1(AtomState::G1, [0, 0, 1, 0]), idx1(AtomState::G1, [0, 0, 0, 1])],
            [idx1(AtomState::G2, [0, 0, 1, 0]), idx1(AtomState::G2, [0, 0, 0, 1])],
        ];

        let sys2: Vec<usize> = (0..l2.dim())
            .filter(|&i| {
                let s = l2.state(i);
                s.occ[2] == 0 && s.occ[3] == 0
            })
            .collect();
        let slots2 = (0..l2.dim())
            .map(|i| {
                let s = l2.state(i);
                match (s.occ[2], s.occ[3]) {
                    (0, 0) => Slot::System(sys2.iter().position(|&j| j == i).unwrap()),
                    (1, 0) => Slot::OneBin {
                        port: 0,
                        system: sys1_pos(s.atom, s.occ[0], s.occ[1]),
                    },
                    (0, 1) => Slot::OneBin {
                        port: 1,
                        system: sys1_pos(s.atom, s.occ[0], s.occ[1]),
                    },
                    (na, nb) => Slot::TwoBins(na as usize, nb as usize),
                }
            })
            .collect();
        let sys1_bin2 = sys1
            .iter()
            .map(|&i| {
                let s = l1.state(i);
                let a = l2.index_of(s.atom, &[s.occ[0], s.occ[1], 1, 0]).unwrap();
                let b = l2.index_of(s.atom, &[s.occ[0], s.occ[1], 0, 1]).unwrap();
                [a, b]
            })
            .collect();
        let both_bins2 = [
            l2.index_of(AtomState::G1, &[0, 0, 1, 1]).unwrap(),
            l2.index_of(AtomState::G2, &[0, 0, 1, 1]).unwrap(),
        ];
        let jump = |to: AtomState, rate: f64| {
            let mut m = DMatrix::zeros(l1.dim(), l2.dim());
            for (j, s) in l2.states().iter().enumerate() {
                if let Some(t) = s.transition(to, AtomState::E) {
                    if let Some(i) = l1.index_of_state(&t) {
                        m[(i, j)] = C64::new((2.0 * rate).sqrt(), 0.0);
                    }
                }
            }
            m
        };
        let gamma = params.gamma_total();
        let gamma_share = if gamma > 0.0 {
            [params.gamma_1() / gamma, params.gamma_2() / gamma]
        } else {
            [0.5, 0.5]
        };
        Self {
            n1: l1.dim(),
            s1: (0..l1.dim() * l1.dim()).map(|k| s1[(k / l1.dim(), k % l1.dim())]).collect(),
            slots1,
            sys1,
            bin1,
            n2: l2.dim(),
            s2,
            slots2,
            sys2,
            sys1_bin2,
            both_bins2,
            jumps: [jump(AtomState::G1, params.gamma_1()), jump(AtomState::G2, params.gamma_2())],
            gamma_share,
        }
    }

    /// `S1 v` in the one-excitation local space.
    fn apply1(&self, v: &[C64], out: &mut [C64]) {
        let n = self.n1;
        for (r, o) in out.iter_mut().enumerate().take(n) {
            let row = &self.s1[r * n..(r + 1) * n];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

}

/// One-photon evolution: system amplitudes and output-bin amplitudes
/// (index `2k + port`).
#[derive(Debug, Clone)]
struct OnePhoton {
    sys: Vec<C64>,
    past: Vec<C64>,
}

impl OnePhoton {
    fn new(n_sys: usize, bins: usize) -> Self {
        Self {
            sys: vec![ZERO; n_sys],
            past: Vec::with_capacity(2 * bins),
        }
    }

    fn past_norm(&self) -> f64 {
        self.past.iter().map(|a| a.norm_sqr()).sum()
    }

    fn sys_norm(&self) -> f64 {
        self.sys.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Advances one step with the incoming bin amplitudes `inj = (a, b)`.
    /// Returns the norm lost to atomic emission.
    fn step(&mut self, local: &Local, level: AtomLevel, inj: [C64; 2]) -> f64 {
        let n = local.n1;
        let mut v = vec![ZERO; n];
        for (i, &li) in local.sys1.iter().enumerate() {
            v[li] = self.sys[i];
        }
        let g = ground_slot(level);
        v[local.bin1[g][0]] += inj[0];
        v[local.bin1[g][1]] += inj[1];
        let before: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        let mut out = vec![ZERO; n];
        local.apply1(&v, &mut out);
        let after: f64 = out.iter().map(|a| a.norm_sqr()).sum();
        for (i, &li) in local.sys1.iter().enumerate() {
            self.sys[i] = out[li];
        }
        self.past.push(out[local.bin1[g][0]]);
        self.past.push(out[local.bin1[g][1]]);
        (before - after).max(0.0)
    }
}

/// Survivor of one atomic emission: density matrix over the one-excitation
/// system states followed by "photon a still to arrive" and "photon b still
/// to arrive" for atom `g1` and `g2` (in that order). Future entries are
/// coefficients of the unnormalised remaining wavepacket.
struct Survivor {
    n_sys: usize,
    rho: DMatrix<C64>,
}

impl Survivor {
    fn new(n_sys: usize) -> Self {
        Self {
            n_sys,
            rho: DMatrix::zeros(n_sys + 4, n_sys + 4),
        }
    }

    /// Index of the future state of `port` with the atom in `level`.
    fn future(&self, port: usize, level: usize) -> usize {
        self.n_sys + 2 * level + port
    }

    fn probability(&self, remaining: [f64; 2]) -> f64 {
        let mut p: f64 = (0..self.n_sys).map(|i| self.rho[(i, i)].re).sum();
        for port in 0..2 {
            for level in 0..2 {
                let f = self.future(port, level);
                p += self.rho[(f, f)].re * remaining[port];
            }
        }
        p
    }
}

struct Tallies {
    counts: [[f64; 3]; 3],
    flux: [Vec<f64>; 2],
    /// Both photons scattered out by the atom.
    both_lost: f64,
}

impl Tallies {
    fn new(bins: usize) -> Self {
        Self {
            counts: [[0.0; 3]; 3],
            flux: [vec![0.0; bins], vec![0.0; bins]],
            both_lost: 0.0,
        }
    }

    fn detect(&mut self, port: usize, bin: usize, weight: f64) {
        self.flux[port][bin] += weight;
    }
}

fn fastest_rate(params: &SystemParams) -> f64 {
    params
        .kappa_a()
        .max(params.kappa_b())
        .max(params.gamma_total())
        .max(params.g_a().norm())
        .max(params.g_b().norm())
}

/// Widest bin accepted for these parameters.
pub fn max_bin_width(params: &SystemParams) -> f64 {
    MAX_RATE_STEP / fastest_rate(params)
}

fn check_resolution(params: &SystemParams, dt: f64, input: &TimebinInput) -> Result<()> {
    let rate = fastest_rate(params);
    if rate * dt > MAX_RATE_STEP {
        return Err(Error::Convergence(format!(
            "bin width {dt} is too coarse for rate {rate} (need Δt·rate ≤ {MAX_RATE_STEP})"
        )));
    }
    if dt > 0.25 * input.time_scale() {
        return Err(Error::Convergence(format!(
            "bin width {dt} does not resolve the pulse (time scale {})",
            input.time_scale()
        )));
    }
    Ok(())
}

/// Runs the collision model for an atom starting in `λ1|g1> + λ2|g2>`, with
/// `grid.n_steps()` bins of width `grid.dt()`.
pub fn simulate_timebin(
    params: &SystemParams,
    input: &TimebinInput,
    atom: [C64; 2],
    grid: &TimeGrid,
) -> Result<OutputDistribution> {
    let weights = [atom[0].norm_sqr(), atom[1].norm_sqr()];
    if ((weights[0] + weights[1]) - 1.0).abs() > 1e-10 {
        return Err(Error::invalid("atomic amplitudes must be normalised"));
    }
    let dt = grid.dt();
    check_resolution(params, dt, input)?;
    let local = Local::new(params, dt);
    let bins = grid.n_steps();
    let mut total = OutputDistribution {
        photons_in: input.photons(),
        counts: [[0.0; 3]; 3],
        t_start: grid.t_start(),
        dt,
        flux: [vec![0.0; bins], vec![0.0; bins]],
        amplitudes: Default::default(),
        unresolved: 0.0,
        pair_overlap: None,
    };
    for level in AtomLevel::BOTH {
        let w = weights[level.index()];
        if w == 0.0 {
            continue;
        }
        let branch = match input {
            TimebinInput::SinglePhoton { mu_a, mu_b, envelope } => {
                single_branch(&local, level, [*mu_a, *mu_b], envelope, grid)?
            }
            TimebinInput::Biphoton { envelope_a, envelope_b } => {
                pair_branch(&local, level, [envelope_a, envelope_b], grid)?
            }
        };
        total.add_weighted(&branch, w);
        total.amplitudes[level.index()] = branch.amplitudes[level.index()].clone();
    }
    if total.unresolved > TRUNCATION_TOL {
        return Err(Error::TruncatedGrid(format!(
            "{:.3e} of the probability is still in flight at t = {}",
            total.unresolved,
            grid.t_end()
        )));
    }
    Ok(total)
}

fn single_branch(
    local: &Local,
    level: AtomLevel,
    mu: [C64; 2],
    envelope: &Envelope,
    grid: &TimeGrid,
) -> Result<OutputDistribution> {
    let bins = grid.n_steps();
    let dt = grid.dt();
    let amps = bin_amplitudes(envelope, grid);
    let remaining = suffix_weights(&amps);
    let mu_norm = mu[0].norm_sqr() + mu[1].norm_sqr();
    let mut phi = OnePhoton::new(local.sys1.len(), bins);
    let mut lost = 0.0;
    for k in 0..bins {
        lost += phi.step(local, level, [mu[0] * amps[k], mu[1] * amps[k]]);
        let accounted = mu_norm * remaining[k + 1] + phi.sys_norm() + phi.past_norm() + lost;
        if (accounted - mu_norm).abs() > BOOKKEEPING_TOL {
            return Err(Error::numerical(
                grid.time(k + 1),
                format!("probability bookkeeping drifted to {accounted}"),
            ));
        }
    }
    let mut out = OutputDistribution {
        photons_in: 1,
        counts: [[0.0; 3]; 3],
        t_start: grid.t_start(),
        dt,
        flux: [vec![0.0; bins], vec![0.0; bins]],
        amplitudes: Default::default(),
        unresolved: phi.sys_norm(),
        pair_overlap: None,
    };
    let scale = -1.0 / dt.sqrt();
    let mut amp = [Vec::with_capacity(bins), Vec::with_capacity(bins)];
    for k in 0..bins {
        for port in 0..2 {
            let a = phi.past[2 * k + port];
            out.flux[port][k] = a.norm_sqr() / dt;
            amp[port].push(a * scale);
        }
    }
    out.counts[1][0] = out.flux[0].iter().sum::<f64>() * dt;
    out.counts[0][1] = out.flux[1].iter().sum::<f64>() * dt;
    out.counts[0][0] = lost;
    out.amplitudes[level.index()] = amp;
    Ok(out)
}

fn pair_branch(local: &Local, level: AtomLevel, envelopes: [&Envelope; 2], grid: &TimeGrid) -> Result<OutputDistribution> {
    let bins = grid.n_steps();
    let dt = grid.dt();
    let g = ground_slot(level);
    let xi = [bin_amplitudes(envelopes[0], grid), bin_amplitudes(envelopes[1], grid)];
    let remaining = [suffix_weights(&xi[0]), suffix_weights(&xi[1])];
    let n_sys1 = local.sys1.len();
    let n_sys2 = local.sys2.len();

    // phi[w]: photon w alone (the other one still to arrive)
    let mut phi = [OnePhoton::new(n_sys1, bins), OnePhoton::new(n_sys1, bins)];
    let mut e2 = vec![ZERO; n_sys2];
    // e1[p]: system amplitudes with the other photon in output bin p
    let mut e1: Vec<Vec<C64>> = Vec::with_capacity(2 * bins);
    let mut survivor = Survivor::new(n_sys1);
    let mut t = Tallies::new(bins);

    // empty-cavity output of each photon, the reference for the pair overlap
    let reference: [Vec<C64>; 2] = std::array::from_fn(|w| {
        let mut one = OnePhoton::new(n_sys1, bins);
        for k in 0..bins {
            let mut inj = [ZERO; 2];
            inj[w] = xi[w][k];
            one.step(local, AtomLevel::G2, inj);
        }
        (0..bins).map(|k| one.past[2 * k + w].conj()).collect()
    });
    let mut overlap = ZERO;

    for k in 0..bins {
        let x = [xi[0][k], xi[1][k]];

        // --- Ω: both excitations have arrived -----------------------------
        // two-excitation local vector
        let mut v2 = vec![ZERO; local.n2];
        for (i, &li) in local.sys2.iter().enumerate() {
            v2[li] = e2[i];
        }
        for (i, pair) in local.sys1_bin2.iter().enumerate() {
            // photon a arrives now while photon b is in the system, and vice versa
            v2[pair[0]] += x[0] * phi[1].sys[i];
            v2[pair[1]] += x[1] * phi[0].sys[i];
        }
        v2[local.both_bins2[g]] += x[0] * x[1];
        let v2_before: f64 = v2.iter().map(|a| a.norm_sqr()).sum();
        let v2_in = nalgebra::DVector::from_vec(v2);
        let v2_out = &local.s2 * &v2_in;
        let v2_after: f64 = v2_out.iter().map(|a| a.norm_sqr()).sum();
        let mut new_e1 = [vec![ZERO; n_sys1], vec![ZERO; n_sys1]];
        for (i, slot) in local.slots2.iter().enumerate() {
            let a = v2_out[i];
            match *slot {
                Slot::System(s) => e2[s] = a,
                Slot::OneBin { port, system } => new_e1[port][system] = a,
                Slot::TwoBins(na, nb) => {
                    if na == 1 && nb == 1 {
                        overlap += reference[0][k] * reference[1][k] * a;
                    }
                    let w = a.norm_sqr();
                    t.counts[na][nb] += w;
                    if na > 0 {
                        t.detect(0, k, w * na as f64);
                    }
                    if nb > 0 {
                        t.detect(1, k, w * nb as f64);
                    }
                }
                Slot::Emitted { .. } => unreachable!(),
            }
        }
        // survivors of an emission from the two-excitation vector
        let dropped = (v2_before - v2_after).max(0.0);
        if dropped > 0.0 {
            let mut est = DMatrix::<C64>::zeros(local.n1, local.n1);
            for j in &local.jumps {
                for v in [&v2_in, &v2_out] {
                    let s = j * v;
                    est += &s * s.adjoint();
                }
            }
            let tr: f64 = est.diagonal().iter().map(|z| z.re).sum();
            if tr > 0.0 {
                est *= C64::new(dropped / tr, 0.0);
                for (i, slot) in local.slots1.iter().enumerate() {
                    match *slot {
                        Slot::Emitted { port, .. } => {
                            let w = est[(i, i)].re;
                            t.counts[(port == 0) as usize][(port == 1) as usize] += w;
                            t.detect(port, k, w);
                        }
                        Slot::System(_) => {}
                        _ => unreachable!(),
                    }
                }
                for (r, &ir) in local.sys1.iter().enumerate() {
                    for (c, &ic) in local.sys1.iter().enumerate() {
                        survivor.rho[(r, c)] += est[(ir, ic)];
                    }
                }
            } else {
                t.both_lost += dropped;
            }
        }

        // one excitation in the system, one already emitted into bin p
        let b_past = &phi[1].past;
        let a_past = &phi[0].past;
        let s1 = &local.s1;
        let n1 = local.n1;
        let (inj_a, inj_b) = (local.bin1[g][0], local.bin1[g][1]);
        let sys1 = &local.sys1;
        let slots1 = &local.slots1;
        let partial = e1
            .par_iter_mut()
            .enumerate()
            .map(|(p, s)| {
                let mut v = vec![ZERO; n1];
                for (i, &li) in sys1.iter().enumerate() {
                    v[li] = s[i];
                }
                v[inj_a] += x[0] * b_past[p];
                v[inj_b] += x[1] * a_past[p];
                let before: f64 = v.iter().map(|a| a.norm_sqr()).sum();
                let mut acc = EntryTally::default();
                let mut after = 0.0;
                let port = p % 2;
                for r in 0..n1 {
                    let row = &s1[r * n1..(r + 1) * n1];
                    let a: C64 = row.iter().zip(&v).map(|(m, y)| m * y).sum();
                    after += a.norm_sqr();
                    match slots1[r] {
                        Slot::System(i) => s[i] = a,
                        Slot::Emitted { port: w } => {
                            acc.bin[w] += a.norm_sqr();
                            if w != port {
                                acc.overlap += reference[port][p / 2] * reference[w][k] * a;
                            }
                        }
                        _ => unreachable!(),
                    }
                }
                acc.lost = (before - after).max(0.0);
                acc.port = port;
                acc.p = p;
                acc
            })
            .collect::<Vec<_>>();
        for acc in partial {
            overlap += acc.overlap;
            for w in 0..2 {
                let weight = acc.bin[w];
                let (mut na, mut nb) = (0, 0);
                if acc.port == 0 {
                    na += 1
                } else {
                    nb += 1
                }
                if w == 0 {
                    na += 1
                } else {
                    nb += 1
                }
                t.counts[na][nb] += weight;
                t.detect(w, k, weight);
                t.detect(acc.port, acc.p / 2, weight);
            }
            // the photon in bin p survives the emission
            t.counts[(acc.port == 0) as usize][(acc.port == 1) as usize] += acc.lost;
            t.detect(acc.port, acc.p / 2, acc.lost);
        }
        e1.push(std::mem::take(&mut new_e1[0]));
        e1.push(std::mem::take(&mut new_e1[1]));

        // --- survivors of earlier emissions ----------------------------------
        step_survivor(
            local,
            &mut survivor,
            x,
            [[remaining[0][k], remaining[1][k]], [remaining[0][k + 1], remaining[1][k + 1]]],
            k,
            &mut t,
        );

        // --- one photon arrived, the other still to come ----------------------
        for w in 0..2 {
            let inj = if w == 0 { [x[0], ZERO] } else { [ZERO, x[1]] };
            let lost = phi[w].step(local, level, inj);
            // photon w is lost; the other one has yet to arrive
            if lost > 0.0 {
                let other = 1 - w;
                for j in 0..2 {
                    let f = survivor.future(other, j);
                    survivor.rho[(f, f)] += C64::new(lost * local.gamma_share[j], 0.0);
                }
            }
        }

        // --- bookkeeping -----------------------------------------------------
        let rem = [remaining[0][k + 1], remaining[1][k + 1]];
        let pure = rem[0] * rem[1]
            + rem[0] * (phi[1].sys_norm() + phi[1].past_norm())
            + rem[1] * (phi[0].sys_norm() + phi[0].past_norm())
            + e2.iter().map(|a| a.norm_sqr()).sum::<f64>()
            + e1.iter().flatten().map(|a| a.norm_sqr()).sum::<f64>();
        let tallied: f64 = t.counts.iter().flatten().sum::<f64>() + t.both_lost;
        let accounted = pure + tallied + survivor.probability(rem);
        if (accounted - 1.0).abs() > BOOKKEEPING_TOL {
            return Err(Error::numerical(
                grid.time(k + 1),
                format!("probability bookkeeping drifted to {accounted}"),
            ));
        }
    }
    let rem_pure = e2.iter().map(|a| a.norm_sqr()).sum::<f64>() + e1.iter().flatten().map(|a| a.norm_sqr()).sum::<f64>();
    let unresolved = rem_pure + survivor.probability([remaining[0][bins], remaining[1][bins]]);
    t.counts[0][0] += t.both_lost;
    let mut flux = t.flux;
    for f in flux.iter_mut() {
        f.iter_mut().for_each(|v| *v /= dt);
    }
    Ok(OutputDistribution {
        photons_in: 2,
        counts: t.counts,
        t_start: grid.t_start(),
        dt,
        flux,
        amplitudes: Default::default(),
        unresolved,
        pair_overlap: Some(overlap.norm_sqr()),
    })
}

#[derive(Default)]
struct EntryTally {
    bin: [f64; 2],
    overlap: C64,
    lost: f64,
    port: usize,
    p: usize,
}

/// Advances the survivor density matrix by one step.
/// `rem` holds the not-yet-arrived weights before and after the step.
fn step_survivor(local: &Local, survivor: &mut Survivor, x: [C64; 2], rem: [[f64; 2]; 2], k: usize, t: &mut Tallies) {
    let before = survivor.probability(rem[0]);
    let n_sys = survivor.n_sys;
    let n = n_sys + 4;
    let n_out = local.n1 + 4;
    // Kraus map: survivor basis -> (L1 local space) ⊕ (future states)
    let mut inject = DMatrix::<C64>::zeros(n_out, n);
    for (i, &li) in local.sys1.iter().enumerate() {
        inject[(li, i)] = C64::new(1.0, 0.0);
    }
    for port in 0..2 {
        for level in 0..2 {
            let f = survivor.future(port, level);
            inject[(local.bin1[level][port], f)] = x[port];
            inject[(local.n1 + 2 * level + port, f)] = C64::new(1.0, 0.0);
        }
    }
    let mut step = DMatrix::<C64>::identity(n_out, n_out);
    for r in 0..local.n1 {
        for c in 0..local.n1 {
            step[(r, c)] = local.s1[r * local.n1 + c];
        }
    }
    let kraus = step * inject;
    let out = &kraus * &survivor.rho * kraus.adjoint();
    let mut rho = DMatrix::<C64>::zeros(n, n);
    let mut detected = 0.0;
    for (r, &lr) in local.sys1.iter().enumerate() {
        for (c, &lc) in local.sys1.iter().enumerate() {
            rho[(r, c)] = out[(lr, lc)];
        }
        for f in 0..4 {
            rho[(r, n_sys + f)] = out[(lr, local.n1 + f)];
            rho[(n_sys + f, r)] = out[(local.n1 + f, lr)];
        }
    }
    for f in 0..4 {
        for h in 0..4 {
            rho[(n_sys + f, n_sys + h)] = out[(local.n1 + f, local.n1 + h)];
        }
    }
    for (i, slot) in local.slots1.iter().enumerate() {
        if let Slot::Emitted { port, .. } = *slot {
            let w = out[(i, i)].re;
            t.counts[(port == 0) as usize][(port == 1) as usize] += w;
            t.detect(port, k, w);
            detected += w;
        }
    }
    survivor.rho = rho;
    t.both_lost += (before - detected - survivor.probability(rem[1])).max(0.0);
}

/// Runs at `M`, `2M` and `4M` bins over the same window.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub bins: [usize; 3],
    pub runs: [OutputDistribution; 3],
}

/// One observable across the three resolutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub values: [f64; 3],
    /// `log2(|v_M - v_2M| / |v_2M - v_4M|)`; `None` when the sequence is not
    /// monotone or has already settled to rounding.
    pub order: Option<f64>,
    /// Richardson extrapolation with the observed order, or the finest value
    /// when no order could be measured.
    pub extrapolated: f64,
}

impl Convergence {
    pub fn from_values(values: [f64; 3]) -> Self {
        let d1 = values[0] - values[1];
        let d2 = values[1] - values[2];
        let settled = d2.abs() <= 1e-13 * values[2].abs().max(1.0);
        let order = (!settled && d1 * d2 > 0.0).then(|| (d1 / d2).log2()).filter(|p| *p > 0.0);
        let extrapolated = match order {
            Some(p) => values[2] - d2 / (2f64.powf(p) - 1.0),
            None => values[2],
        };
        Self {
            values,
            order,
            extrapolated,
        }
    }
}

impl ConvergenceReport {
    pub fn observable(&self, f: impl Fn(&OutputDistribution) -> f64) -> Convergence {
        Convergence::from_values([f(&self.runs[0]), f(&self.runs[1]), f(&self.runs[2])])
    }
}

pub fn convergence_report(
    params: &SystemParams,
    input: &TimebinInput,
    atom: [C64; 2],
    grid: &TimeGrid,
) -> Result<ConvergenceReport> {
    let m = grid.n_steps();
    let bins = [m, 2 * m, 4 * m];
    let run = |n: usize| simulate_timebin(params, input, atom, &grid.with_n_steps(n)?);
    Ok(ConvergenceReport {
        bins,
        runs: [run(bins[0])?, run(bins[1])?, run(bins[2])?],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::PulseShape;

    const ONE: C64 = C64::new(1.0, 0.0);

    fn envelope(tau_p: f64) -> Envelope {
        Envelope::Gaussian(PulseShape::centered_for_duration(tau_p).unwrap())
    }

    fn single(env: &Envelope) -> TimebinInput {
        TimebinInput::SinglePhoton {
            mu_a: ONE,
            mu_b: ZERO,
            envelope: env.clone(),
        }
    }

    fn pair(a: &Envelope, b: &Envelope) -> TimebinInput {
        TimebinInput::Biphoton {
            envelope_a: a.clone(),
            envelope_b: b.clone(),
        }
    }

    #[test]
    fn uncoupled_level_reflects_everything() {
        let env = envelope(20.0);
        let grid = timebin_grid(&env, 0.1).unwrap();
        let params = SystemParams::from_cooperativity(10.0, 0.2).unwrap();
        let s = simulate_timebin(&params, &single(&env), [ZERO, ONE], &grid).unwrap();
        assert!((s.exit(Port::A) - 1.0).abs() < 1e-9, "{:?}", s.counts);
        let p = simulate_timebin(&params, &pair(&env, &env), [ZERO, ONE], &grid).unwrap();
        assert!((p.one_each() - 1.0).abs() < 1e-9, "{:?}", p.counts);
        assert!((p.pair_overlap.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_photon_swaps_at_high_cooperativity() {
        let env = envelope(40.0);
        let grid = timebin_grid(&env, 0.05).unwrap();
        let params = SystemParams::from_cooperativity(10.0, 0.2).unwrap();
        let s = simulate_timebin(&params, &single(&env), [ONE, ZERO], &grid).unwrap();
        assert!((s.exit(Port::B) - (40.0f64 / 41.0).powi(2)).abs() < 1e-2);
        assert!((s.total() - 1.0).abs() < 1e-9);
        assert!(s.unresolved < 1e-8);
    }

    #[test]
    fn lossless_atom_keeps_both_photons() {
        let env = envelope(20.0);
        let grid = timebin_grid(&env, 0.1).unwrap();
        let params = SystemParams::symmetric(1.0, 0.0).unwrap();
        let p = simulate_timebin(&params, &pair(&env, &env), [ONE, ZERO], &grid).unwrap();
        assert!(p.one_lost() < 1e-12 && p.both_lost() < 1e-12, "{:?}", p.counts);
        assert!((p.both_a() + p.one_each() + p.both_b() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exchanging_ports_transposes_counts() {
        let a = envelope(20.0);
        let b = Envelope::Gaussian(PulseShape::from_duration(60.0, 15.0).unwrap());
        let grid = TimeGrid::new(0.0, 160.0, 1600).unwrap();
        let params = SystemParams::new(C64::new(0.6, 0.0), C64::new(-0.3, 0.1), 1.0, 0.8, 0.15, 0.05).unwrap();
        let atom = [C64::new(0.8, 0.0), C64::new(0.0, 0.6)];
        let p = simulate_timebin(&params, &pair(&a, &b), atom, &grid).unwrap();
        let q = simulate_timebin(&params.port_swapped(), &pair(&b, &a), atom, &grid).unwrap();
        for na in 0..3 {
            for nb in 0..3 {
                assert!((p.counts[na][nb] - q.counts[nb][na]).abs() < 1e-12);
            }
        }
        assert!((p.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn flux_integrates_to_photon_number() {
        let env = envelope(20.0);
        let grid = timebin_grid(&env, 0.1).unwrap();
        let params = SystemParams::from_cooperativity(2.0, 0.2).unwrap();
        let p = simulate_timebin(&params, &pair(&env, &env), [ONE, ZERO], &grid).unwrap();
        let n_a: f64 = p.flux[0].iter().sum::<f64>() * p.dt;
        let n_b: f64 = p.flux[1].iter().sum::<f64>() * p.dt;
        let expect_a = 2.0 * p.both_a() + p.one_each() + p.counts[1][0];
        let expect_b = 2.0 * p.both_b() + p.one_each() + p.counts[0][1];
        assert!((n_a - expect_a).abs() < 1e-9 && (n_b - expect_b).abs() < 1e-9);
    }

    #[test]
    fn coarse_bins_are_rejected() {
        let env = envelope(40.0);
        let params = SystemParams::from_cooperativity(10.0, 0.2).unwrap();
        let grid = timebin_grid(&env, 1.0).unwrap();
        assert!(matches!(
            simulate_timebin(&params, &single(&env), [ONE, ZERO], &grid),
            Err(Error::Convergence(_))
        ));
    }

    #[test]
    fn richardson_recovers_first_order_limit() {
        let c = Convergence::from_values([1.1, 1.05, 1.025]);
        assert!((c.order.unwrap() - 1.0).abs() < 1e-12);
        assert!((c.extrapolated - 1.0).abs() < 1e-12);
        let flat = Convergence::from_values([0.5, 0.5, 0.5]);
        assert_eq!(flat.order, None);
        let wobble = Convergence::from_values([0.5, 0.6, 0.55]);
        assert_eq!(wobble.order, None);
        assert_eq!(wobble.extrapolated, 0.55);
    }
}
