//! Exact dynamics in the one-excitation sector.
//!
//! The single photon is either still in a reservoir, inside one of the
//! cavities, or stored as an atomic excitation. Conditioned on the atomic
//! ground state `l`, the intracavity amplitudes obey
//!
//! ```text
//! c_a1' = -i g_a* c_e - κ_a c_a1 + √(2κ_a) α_in^1
//! c_b1' = -i g_b* c_e - κ_b c_b1 + √(2κ_b) β_in^1
//! c_e'  = -Γ c_e - i g_a c_a1 - i g_b c_b1
//! c_z2' = -κ_z c_z2 + √(2κ_z) z_in^2
//! ```
//!
//! with `α_in^l = λ_l μ_a u(t)`, `β_in^l = λ_l μ_b u(t)` for the unit
//! envelope `u`, and outputs `z_out^l = √(2κ_z) c_z^l - z_in^l`. The atom
//! only couples through `g1`, so the `g2` set is two independent empty
//! cavities.

use crate::ode::{Dopri5, OdeSystem};
use crate::{trapezoid, AtomLevel, Envelope, Error, InitialState, Result, SystemParams, TimeGrid, C64};

/// Residual energy (still inside the system or not yet injected) above which
/// a run counts as truncated.
pub const TRUNCATION_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AmplitudeState {
    pub c_e: C64,
    pub c_a1: C64,
    pub c_b1: C64,
    pub c_a2: C64,
    pub c_b2: C64,
}

impl AmplitudeState {
    fn to_vec(self) -> Vec<C64> {
        vec![self.c_e, self.c_a1, self.c_b1, self.c_a2, self.c_b2]
    }

    fn from_slice(y: &[C64]) -> Self {
        Self {
            c_e: y[0],
            c_a1: y[1],
            c_b1: y[2],
            c_a2: y[3],
            c_b2: y[4],
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_e.norm_sqr() + self.c_a1.norm_sqr() + self.c_b1.norm_sqr() + self.c_a2.norm_sqr() + self.c_b2.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    A,
    B,
}

impl Port {
    pub const BOTH: [Port; 2] = [Port::A, Port::B];

    pub fn index(self) -> usize {
        match self {
            Port::A => 0,
            Port::B => 1,
        }
    }

    pub fn other(self) -> Port {
        match self {
            Port::A => Port::B,
            Port::B => Port::A,
        }
    }
}

struct Equations<'a> {
    params: &'a SystemParams,
    envelope: &'a Envelope,
    drive: [[C64; 2]; 2],
}

impl OdeSystem for Equations<'_> {
    fn dim(&self) -> usize {
        5
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let p = self.params;
        let i = C64::i();
        let u = self.envelope.amplitude(t);
        let (ka, kb) = (p.kappa_a(), p.kappa_b());
        let (sa, sb) = ((2.0 * ka).sqrt(), (2.0 * kb).sqrt());
        let (ga, gb) = (p.g_a(), p.g_b());
        let s = AmplitudeState::from_slice(y);
        dy[0] = -p.gamma_total() * s.c_e - i * ga * s.c_a1 - i * gb * s.c_b1;
        dy[1] = -i * ga.conj() * s.c_e - ka * s.c_a1 + sa * self.drive[0][0] * u;
        dy[2] = -i * gb.conj() * s.c_e - kb * s.c_b1 + sb * self.drive[0][1] * u;
        dy[3] = -ka * s.c_a2 + sa * self.drive[1][0] * u;
        dy[4] = -kb * s.c_b2 + sb * self.drive[1][1] * u;
    }
}

/// Conditional output fields of a single-excitation run, sampled on the
/// grid.
#[derive(Debug, Clone)]
pub struct SingleExcitationOutput {
    pub initial: InitialState,
    pub times: Vec<f64>,
    pub dt: f64,
    /// Unit input envelope `u(t)` on the grid.
    pub envelope: Vec<C64>,
    /// `[level][port][sample]`.
    pub outputs: [[Vec<C64>; 2]; 2],
    pub trajectory: Vec<AmplitudeState>,
    /// Input energy that arrives after the grid ends.
    pub input_tail: f64,
}

pub fn integrate_single_excitation(
    params: &SystemParams,
    initial: &InitialState,
    envelope: &Envelope,
    grid: &TimeGrid,
) -> Result<SingleExcitationOutput> {
    integrate_from(params, initial, envelope, grid, AmplitudeState::default())
}

/// As [`integrate_single_excitation`] but starting from given intracavity
/// amplitudes instead of an empty system.
pub fn integrate_from(
    params: &SystemParams,
    initial: &InitialState,
    envelope: &Envelope,
    grid: &TimeGrid,
    start: AmplitudeState,
) -> Result<SingleExcitationOutput> {
    if initial.mu_c != C64::new(0.0, 0.0) {
        return Err(Error::Unsupported(
            "a two-photon component (μc ≠ 0) needs the hierarchy or time-bin solvers".into(),
        ));
    }
    let mut drive = [[C64::new(0.0, 0.0); 2]; 2];
    for level in AtomLevel::BOTH {
        let l = initial.lambda(level);
        drive[level.index()] = [l * initial.mu_a, l * initial.mu_b];
    }
    let sys = Equations { params, envelope, drive };
    let solver = Dopri5::default().with_h_max(0.25 * envelope.time_scale());
    let times = grid.times();
    let n = times.len();
    let mut trajectory = Vec::with_capacity(n);
    let mut env = Vec::with_capacity(n);
    let mut outputs: [[Vec<C64>; 2]; 2] = Default::default();
    let (sa, sb) = ((2.0 * params.kappa_a()).sqrt(), (2.0 * params.kappa_b()).sqrt());
    solver.integrate(&sys, start.to_vec(), &times, |_, t, y| {
        let s = AmplitudeState::from_slice(y);
        let u = envelope.amplitude(t);
        env.push(u);
        outputs[0][0].push(sa * s.c_a1 - drive[0][0] * u);
        outputs[0][1].push(sb * s.c_b1 - drive[0][1] * u);
        outputs[1][0].push(sa * s.c_a2 - drive[1][0] * u);
        outputs[1][1].push(sb * s.c_b2 - drive[1][1] * u);
        trajectory.push(s);
        Ok(())
    })?;

    let (_, support_end) = envelope.support();
    let input_tail = if grid.t_end() >= support_end {
        0.0
    } else {
        let m = 2000;
        let h = (support_end - grid.t_end()) / m as f64;
        trapezoid(h, (0..=m).map(|k| envelope.amplitude(grid.t_end() + k as f64 * h).norm_sqr()))
    };

    Ok(SingleExcitationOutput {
        initial: *initial,
        times,
        dt: grid.dt(),
        envelope: env,
        outputs,
        trajectory,
        input_tail,
    })
}

impl SingleExcitationOutput {
    pub fn output(&self, level: AtomLevel, port: Port) -> &[C64] {
        &self.outputs[level.index()][port.index()]
    }

    /// `∫|z_out^l|² dt`.
    pub fn port_energy(&self, level: AtomLevel, port: Port) -> f64 {
        trapezoid(self.dt, self.output(level, port).iter().map(|z| z.norm_sqr()))
    }

    pub fn total_output_energy(&self) -> f64 {
        AtomLevel::BOTH
            .iter()
            .flat_map(|&l| Port::BOTH.map(|p| self.port_energy(l, p)))
            .sum()
    }

    /// Excitation still in the system at the end of the grid plus input
    /// that had not arrived.
    pub fn residual_energy(&self) -> f64 {
        let last = self.trajectory.last().map_or(0.0, |s| s.norm_sqr());
        let weight = self.initial.mu_a.norm_sqr() + self.initial.mu_b.norm_sqr();
        last + weight * self.input_tail
    }

    /// `1 - Σ ∫|out|²`, the probability that the photon was scattered out by
    /// the atom.
    pub fn loss_probability(&self) -> Result<f64> {
        let residual = self.residual_energy();
        if residual > TRUNCATION_TOL {
            return Err(Error::TruncatedGrid(format!(
                "{residual:.3e} of the excitation has not left the system by t = {}",
                self.times.last().copied().unwrap_or(0.0)
            )));
        }
        Ok(1.0 - self.total_output_energy())
    }

    /// Overlap `∫ conj(u) z_out^l dt` of each conditional output with the unit
    /// input envelope.
    pub fn port_overlap(&self, level: AtomLevel, port: Port) -> C64 {
        let out = self.output(level, port);
        let dt = self.dt;
        let vals: Vec<C64> = self.envelope.iter().zip(out).map(|(u, z)| u.conj() * z).collect();
        let n = vals.len();
        if n < 2 {
            return C64::new(0.0, 0.0);
        }
        let sum: C64 = vals.iter().sum();
        dt * (sum - 0.5 * (vals[0] + vals[n - 1]))
    }

    pub fn phase_profile(&self) -> PhaseProfile {
        let mut per_port = [[C64::new(0.0, 0.0); 2]; 2];
        let mut collective = [None; 2];
        let (ma, mb) = (self.initial.mu_a, self.initial.mu_b);
        let weight = ma.norm_sqr() + mb.norm_sqr();
        for level in AtomLevel::BOTH {
            let li = level.index();
            for port in Port::BOTH {
                per_port[li][port.index()] = self.port_overlap(level, port);
            }
            let lam = self.initial.lambda(level);
            let norm = lam.norm_sqr() * weight;
            if norm > 0.0 {
                let proj = (lam * ma).conj() * per_port[li][0] + (lam * mb).conj() * per_port[li][1];
                collective[li] = Some(proj / norm);
            }
        }
        PhaseProfile { per_port, collective }
    }
}

/// Output-input overlaps of a single-excitation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseProfile {
    /// `[level][port]` overlap of the output with the unit envelope.
    pub per_port: [[C64; 2]; 2],
    /// Per atomic level, the amplitude with which the input port
    /// combination reappears, normalised by its input weight. `None` when
    /// that level carries no amplitude.
    pub collective: [Option<C64>; 2],
}
