//! Mean-field dynamics with classical (coherent-amplitude) drives.
//!
//! Operator products are factorised, leaving a closed nonlinear set for
//! `a = <a>`, `b = <b>`, `s = <σ->` (with `σ- = |g1><e|`), `<σ_z>` and
//! `<σ_ee>`. Writing `G = g_a a + g_b b`:
//!
//! ```text
//! a'    = -i g_a* s - κ_a a + √(2κ_a) a_in
//! b'    = -i g_b* s - κ_b b + √(2κ_b) b_in
//! s'    = i G σ_z - Γ s
//! σ_z'  = -2i G s* + 2i G* s - 2(Γ1 + Γ) σ_ee
//! σ_ee' = -i G s* + i G* s - 2Γ σ_ee
//! ```
//!
//! Here `σ_z = σ_ee - σ_11`, so decay into `g1` raises the lower level while
//! decay into `g2` does not; the `σ_z` damping rate `2(Γ1 + Γ)` follows.
//! [`SigmaZDamping::Total`] switches it to `2Γ` for comparison.

use crate::ode::{Dopri5, OdeSystem};
use crate::single_excitation::Port;
use crate::{trapezoid, AtomLevel, Envelope, Error, Result, SystemParams, TimeGrid, C64};

/// Allowed excursion of `σ_z`, `σ_ee` outside their physical ranges.
pub const BOUNDS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaZDamping {
    /// `2(Γ1 + Γ)`.
    #[default]
    AsDerived,
    /// `2Γ`, the same rate as the `σ_ee` equation.
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SemiclassicalOptions {
    pub sigma_z_damping: SigmaZDamping,
}

/// Classical input field `amplitude · envelope(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    pub envelope: Envelope,
    pub amplitude: C64,
}

impl Drive {
    pub fn unit(envelope: impl Into<Envelope>) -> Self {
        Self {
            envelope: envelope.into(),
            amplitude: C64::new(1.0, 0.0),
        }
    }

    pub fn scaled(envelope: impl Into<Envelope>, amplitude: C64) -> Self {
        Self {
            envelope: envelope.into(),
            amplitude,
        }
    }

    pub fn value(&self, t: f64) -> C64 {
        self.amplitude * self.envelope.amplitude(t)
    }
}

/// Initial atomic state. Superpositions are treated as a population-weighted
/// pair of definite-level runs, since mean-field equations cannot carry
/// atom-field entanglement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomInit {
    Level(AtomLevel),
    Superposition { lambda_1: C64, lambda_2: C64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SemiclassicalState {
    pub mean_a: C64,
    pub mean_b: C64,
    pub mean_sigma_minus: C64,
    pub mean_sigma_z: f64,
    pub mean_sigma_ee: f64,
}

impl SemiclassicalState {
    pub fn ground() -> Self {
        Self {
            mean_sigma_z: -1.0,
            ..Default::default()
        }
    }

    fn to_vec(self) -> Vec<C64> {
        vec![
            self.mean_a,
            self.mean_b,
            self.mean_sigma_minus,
            C64::new(self.mean_sigma_z, 0.0),
            C64::new(self.mean_sigma_ee, 0.0),
        ]
    }

    fn from_slice(y: &[C64]) -> Self {
        Self {
            mean_a: y[0],
            mean_b: y[1],
            mean_sigma_minus: y[2],
            mean_sigma_z: y[3].re,
            mean_sigma_ee: y[4].re,
        }
    }

    fn check_bounds(&self, t: f64) -> Result<()> {
        let z = self.mean_sigma_z;
        let e = self.mean_sigma_ee;
        if z < -1.0 - BOUNDS_TOL || z > 1.0 + BOUNDS_TOL {
            return Err(Error::numerical(t, format!("<σ_z> = {z} left [-1, 1]")));
        }
        if e < -BOUNDS_TOL || e > 1.0 + BOUNDS_TOL {
            return Err(Error::numerical(t, format!("<σ_ee> = {e} left [0, 1]")));
        }
        Ok(())
    }
}

struct MeanField<'a> {
    params: SystemParams,
    drive_a: Option<&'a Drive>,
    drive_b: Option<&'a Drive>,
    z_damping: f64,
}

fn drive_at(d: Option<&Drive>, t: f64) -> C64 {
    d.map_or(C64::new(0.0, 0.0), |d| d.value(t))
}

impl OdeSystem for MeanField<'_> {
    fn dim(&self) -> usize {
        5
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let p = &self.params;
        let i = C64::i();
        let (a, b, s) = (y[0], y[1], y[2]);
        let (sz, see) = (y[3].re, y[4].re);
        let (ga, gb) = (p.g_a(), p.g_b());
        let gamma = p.gamma_total();
        let big_g = ga * a + gb * b;
        // -i G s* + i G* s, real by construction
        let pump = 2.0 * (i * big_g.conj() * s).re;
        dy[0] = -i * ga.conj() * s - p.kappa_a() * a + (2.0 * p.kappa_a()).sqrt() * drive_at(self.drive_a, t);
        dy[1] = -i * gb.conj() * s - p.kappa_b() * b + (2.0 * p.kappa_b()).sqrt() * drive_at(self.drive_b, t);
        dy[2] = i * big_g * sz - gamma * s;
        dy[3] = C64::new(2.0 * pump - self.z_damping * see, 0.0);
        dy[4] = C64::new(pump - 2.0 * gamma * see, 0.0);
    }
}

#[derive(Debug, Clone)]
pub struct SemiclassicalTrajectory {
    pub times: Vec<f64>,
    pub dt: f64,
    pub states: Vec<SemiclassicalState>,
    pub a_in: Vec<C64>,
    pub b_in: Vec<C64>,
    pub a_out: Vec<C64>,
    pub b_out: Vec<C64>,
}

impl SemiclassicalTrajectory {
    pub fn output(&self, port: Port) -> &[C64] {
        match port {
            Port::A => &self.a_out,
            Port::B => &self.b_out,
        }
    }

    pub fn input(&self, port: Port) -> &[C64] {
        match port {
            Port::A => &self.a_in,
            Port::B => &self.b_in,
        }
    }

    pub fn output_energy(&self, port: Port) -> f64 {
        trapezoid(self.dt, self.output(port).iter().map(|z| z.norm_sqr()))
    }

    pub fn input_energy(&self, port: Port) -> f64 {
        trapezoid(self.dt, self.input(port).iter().map(|z| z.norm_sqr()))
    }

    /// `max_t |z_out - √(2κ) z + z_in|` over the grid.
    pub fn input_output_residual(&self, params: &SystemParams) -> f64 {
        let (sa, sb) = ((2.0 * params.kappa_a()).sqrt(), (2.0 * params.kappa_b()).sqrt());
        let mut worst: f64 = 0.0;
        for (k, s) in self.states.iter().enumerate() {
            worst = worst.max((self.a_out[k] - sa * s.mean_a + self.a_in[k]).norm());
            worst = worst.max((self.b_out[k] - sb * s.mean_b + self.b_in[k]).norm());
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct SemiclassicalBranch {
    pub level: AtomLevel,
    pub weight: f64,
    pub trajectory: SemiclassicalTrajectory,
}

#[derive(Debug, Clone)]
pub struct SemiclassicalRun {
    pub branches: Vec<SemiclassicalBranch>,
}

impl SemiclassicalRun {
    /// Population-weighted output energy of a port.
    pub fn output_energy(&self, port: Port) -> f64 {
        self.branches.iter().map(|b| b.weight * b.trajectory.output_energy(port)).sum()
    }

    pub fn branch(&self, level: AtomLevel) -> Option<&SemiclassicalTrajectory> {
        self.branches.iter().find(|b| b.level == level).map(|b| &b.trajectory)
    }
}

pub fn integrate_semiclassical(
    params: &SystemParams,
    drive_a: Option<&Drive>,
    drive_b: Option<&Drive>,
    atom: AtomInit,
    grid: &TimeGrid,
    options: &SemiclassicalOptions,
) -> Result<SemiclassicalRun> {
    let levels: Vec<(AtomLevel, f64)> = match atom {
        AtomInit::Level(l) => vec![(l, 1.0)],
        AtomInit::Superposition { lambda_1, lambda_2 } => {
            let (p1, p2) = (lambda_1.norm_sqr(), lambda_2.norm_sqr());
            if ((p1 + p2) - 1.0).abs() > 1e-10 {
                return Err(Error::invalid(format!(
                    "atomic amplitudes must be normalised, got |λ1|²+|λ2|² = {}",
                    p1 + p2
                )));
            }
            [(AtomLevel::G1, p1), (AtomLevel::G2, p2)]
                .into_iter()
                .filter(|&(_, w)| w > 0.0)
                .collect()
        }
    };
    let mut branches = Vec::with_capacity(levels.len());
    for (level, weight) in levels {
        let trajectory = integrate_branch(params, drive_a, drive_b, level, grid, options)?;
        branches.push(SemiclassicalBranch {
            level,
            weight,
            trajectory,
        });
    }
    Ok(SemiclassicalRun { branches })
}

fn integrate_branch(
    params: &SystemParams,
    drive_a: Option<&Drive>,
    drive_b: Option<&Drive>,
    level: AtomLevel,
    grid: &TimeGrid,
    options: &SemiclassicalOptions,
) -> Result<SemiclassicalTrajectory> {
    // An atom in g2 has no population on the driven transition.
    let p = match level {
        AtomLevel::G1 => *params,
        AtomLevel::G2 => params.decoupled(),
    };
    let z_damping = match options.sigma_z_damping {
        SigmaZDamping::AsDerived => 2.0 * (p.gamma_1() + p.gamma_total()),
        SigmaZDamping::Total => 2.0 * p.gamma_total(),
    };
    let sys = MeanField {
        params: p,
        drive_a,
        drive_b,
        z_damping,
    };
    let scale = [drive_a, drive_b]
        .iter()
        .flatten()
        .map(|d| d.envelope.time_scale())
        .fold(f64::INFINITY, f64::min);
    let mut solver = Dopri5::default();
    if scale.is_finite() {
        solver = solver.with_h_max(0.25 * scale);
    }
    let times = grid.times();
    let n = times.len();
    let (sa, sb) = ((2.0 * p.kappa_a()).sqrt(), (2.0 * p.kappa_b()).sqrt());
    let mut tr = SemiclassicalTrajectory {
        times: Vec::new(),
        dt: grid.dt(),
        states: Vec::with_capacity(n),
        a_in: Vec::with_capacity(n),
        b_in: Vec::with_capacity(n),
        a_out: Vec::with_capacity(n),
        b_out: Vec::with_capacity(n),
    };
    solver.integrate(&sys, SemiclassicalState::ground().to_vec(), &times, |_, t, y| {
        let s = SemiclassicalState::from_slice(y);
        s.check_bounds(t)?;
        let (ai, bi) = (drive_at(drive_a, t), drive_at(drive_b, t));
        tr.a_in.push(ai);
        tr.b_in.push(bi);
        tr.a_out.push(sa * s.mean_a - ai);
        tr.b_out.push(sb * s.mean_b - bi);
        tr.states.push(s);
        Ok(())
    })?;
    tr.times = times;
    Ok(tr)
}

/// Energy transferred from port `b` to port `a` for an atom in `g1` driven
/// by a unit-energy coherent pulse on `b`.
pub fn swap_energy(params: &SystemParams, envelope: &Envelope, grid: &TimeGrid, options: &SemiclassicalOptions) -> Result<f64> {
    let drive = Drive::unit(envelope.clone());
    let run = integrate_semiclassical(params, None, Some(&drive), AtomInit::Level(AtomLevel::G1), grid, options)?;
    Ok(run.output_energy(Port::A))
}

/// Mean-field stand-in for two-photon survival: both ports driven by
/// unit-energy pulses in quadrature (`β_in = i α_in`), returning
/// `∫|a_out|² · ∫|b_out|²`. In the linear limit this is `(r² + t²)²`. An
/// in-phase drive would excite only the dark mode and never reach the atom.
pub fn biphoton_analog_product(
    params: &SystemParams,
    envelope: &Envelope,
    grid: &TimeGrid,
    options: &SemiclassicalOptions,
) -> Result<f64> {
    let da = Drive::unit(envelope.clone());
    let db = Drive::scaled(envelope.clone(), C64::i());
    let run = integrate_semiclassical(params, Some(&da), Some(&db), AtomInit::Level(AtomLevel::G1), grid, options)?;
    Ok(run.output_energy(Port::A) * run.output_energy(Port::B))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{analytic, PulseShape};

    fn setup() -> (Envelope, TimeGrid) {
        let p = PulseShape::centered_for_duration(40.0).unwrap();
        (p.into(), TimeGrid::default_for(&p))
    }

    #[test]
    fn decoupled_atom_returns_the_pulse() {
        let (env, grid) = setup();
        let params = SystemParams::from_cooperativity(10.0, 0.2).unwrap();
        let d = Drive::unit(env);
        let run = integrate_semiclassical(
            &params,
            Some(&d),
            None,
            AtomInit::Level(AtomLevel::G2),
            &grid,
            &Default::default(),
        )
        .unwrap();
        assert!((run.output_energy(Port::A) - 1.0).abs() < 1e-4);
        assert!(run.output_energy(Port::B) < 1e-12);
        let tr = run.branch(AtomLevel::G2).unwrap();
        assert!(tr.states.iter().all(|s| s.mean_sigma_minus.norm() == 0.0 && s.mean_sigma_z == -1.0));
        assert!(tr.input_output_residual(&params) < 1e-15);
    }

    #[test]
    fn strong_swap_matches_closed_form() {
        let (env, grid) = setup();
        let params = SystemParams::from_cooperativity(10.0, 0.2).unwrap();
        let e = swap_energy(&params, &env, &grid, &Default::default()).unwrap();
        assert!((e - analytic::swap_probability(10.0)).abs() < 1e-2, "e = {e}");
    }

    #[test]
    fn weak_drive_recovers_linear_response() {
        let (env, grid) = setup();
        let grid = grid.with_n_steps(1000).unwrap();
        let params = SystemParams::from_cooperativity(2.0, 0.2).unwrap();
        let mut ratios = Vec::new();
        for eps in [1e-2, 1e-3] {
            let d = Drive::scaled(env.clone(), C64::new(eps, 0.0));
            let run = integrate_semiclassical(
                &params,
                None,
                Some(&d),
                AtomInit::Level(AtomLevel::G1),
                &grid,
                &Default::default(),
            )
            .unwrap();
            ratios.push(run.output_energy(Port::A) / (eps * eps));
        }
        assert!((ratios[0] - ratios[1]).abs() < 1e-5, "{ratios:?}");
        // finite bandwidth: within a percent of the resonant value
        assert!((ratios[1] - analytic::swap_probability(2.0)).abs() < 1e-2);
    }

    #[test]
    fn populations_stay_physical_and_energy_is_bounded() {
        let (env, grid) = setup();
        for damping in [SigmaZDamping::AsDerived, SigmaZDamping::Total] {
            let params = SystemParams::from_cooperativity(1.0, 0.2).unwrap();
            let opts = SemiclassicalOptions { sigma_z_damping: damping };
            let da = Drive::scaled(env.clone(), C64::new(1.5, 0.0));
            let db = Drive::scaled(env.clone(), C64::new(0.0, 1.5));
            let run = integrate_semiclassical(&params, Some(&da), Some(&db), AtomInit::Level(AtomLevel::G1), &grid, &opts)
                .unwrap();
            let tr = run.branch(AtomLevel::G1).unwrap();
            let e_in = tr.input_energy(Port::A) + tr.input_energy(Port::B);
            let e_out = tr.output_energy(Port::A) + tr.output_energy(Port::B);
            assert!(e_out <= e_in + 1e-6);
        }
    }

    #[test]
    fn biphoton_analog_near_closed_form_at_high_c() {
        let (env, grid) = setup();
        let params = SystemParams::from_cooperativity(10.0, 0.2).unwrap();
        let v = biphoton_analog_product(&params, &env, &grid, &Default::default()).unwrap();
        assert!((v - analytic::biphoton_survival_probability(10.0)).abs() < 1e-2, "v = {v}");
    }

    #[test]
    fn superposition_is_weighted_pair() {
        let (env, grid) = setup();
        let grid = grid.with_n_steps(500).unwrap();
        let params = SystemParams::from_cooperativity(5.0, 0.2).unwrap();
        let d = Drive::unit(env);
        let atom = AtomInit::Superposition {
            lambda_1: C64::new(0.6, 0.0),
            lambda_2: C64::new(0.0, 0.8),
        };
        let run = integrate_semiclassical(&params, None, Some(&d), atom, &grid, &Default::default()).unwrap();
        assert_eq!(run.branches.len(), 2);
        let e1 = run.branch(AtomLevel::G1).unwrap().output_energy(Port::A);
        assert!((run.output_energy(Port::A) - 0.36 * e1).abs() < 1e-12);
    }
}
