//! Master-equation hierarchy for single-photon Fock inputs on each port.
//!
//! A photon in port `a` with envelope `α(t)` and one in port `b` with `β(t)`
//! are handled by sixteen coupled operators `ρ_{m,n;p,q}`:
//!
//! ```text
//! ρ̇_{m,n;p,q} = -i[H, ρ] + Σ_L D[L]ρ
//!             + √m α [ρ_{m-1,n;p,q}, L_a†] + √n α* [L_a, ρ_{m,n-1;p,q}]
//!             + √p β [ρ_{m,n;p-1,q}, L_b†] + √q β* [L_b, ρ_{m,n;p,q-1}]
//! ```
//!
//! with `D[L]ρ = LρL† - {L†L, ρ}/2` over the cavity and atomic collapse
//! operators. `ρ_{1,1;1,1}` is the physical state. An absent pulse is a zero
//! envelope, which makes the corresponding indices inert.
//!
//! Output fluxes are `Tr[J_z(ρ)_{1,1;1,1}]` with the detection map
//!
//! ```text
//! J_a(ρ)_{m,n} = L_a ρ_{m,n} L_a† + √m α ρ_{m-1,n} L_a† + √n α* L_a ρ_{m,n-1}
//!              + √(mn) |α|² ρ_{m-1,n-1}
//! ```
//!
//! (and likewise for `b`). Photon counting statistics follow from quantum
//! regression: `Y_a(t) = ∫_0^t e^{𝓛(t-s)} J_a(s) ρ(s) ds` satisfies
//! `Ẏ_a = 𝓛 Y_a + J_a(t) ρ(t)`, and the time-ordered coincidence density is
//! `Tr[J_b(t) Y_a(t) + J_a(t) Y_b(t)]`. All of this is one linear system that
//! is integrated in a single pass.

mod channels;
mod tensor;

pub use channels::{dissipator, AtomDensity, LindbladChannels};
pub use tensor::{component, indices, partner, HierarchyTensor, COMPONENTS, PHYSICAL};

use crate::ode::{Dopri5, OdeStats, OdeSystem};
use crate::single_excitation::Port;
use crate::sparse::SparseOp;
use crate::{trapezoid, Envelope, Error, Result, SystemParams, TimeGrid, C64};

/// Tolerances on trace and hermiticity during a run. A run fails once
/// either exceeds ten times its value.
pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HierarchyInputs {
    pub pulse_a: Option<Envelope>,
    pub pulse_b: Option<Envelope>,
}

impl HierarchyInputs {
    pub fn both(envelope: impl Into<Envelope>) -> Self {
        let e = envelope.into();
        Self {
            pulse_a: Some(e.clone()),
            pulse_b: Some(e),
        }
    }

    pub fn only(port: Port, envelope: impl Into<Envelope>) -> Self {
        match port {
            Port::A => Self {
                pulse_a: Some(envelope.into()),
                pulse_b: None,
            },
            Port::B => Self {
                pulse_a: None,
                pulse_b: Some(envelope.into()),
            },
        }
    }

    pub fn photon_number(&self) -> usize {
        self.pulse_a.is_some() as usize + self.pulse_b.is_some() as usize
    }

    fn amplitudes(&self, t: f64) -> (C64, C64) {
        let f = |e: &Option<Envelope>| e.as_ref().map_or(C64::new(0.0, 0.0), |e| e.amplitude(t));
        (f(&self.pulse_a), f(&self.pulse_b))
    }

    fn time_scale(&self) -> Option<f64> {
        [&self.pulse_a, &self.pulse_b]
            .iter()
            .filter_map(|e| e.as_ref().map(|e| e.time_scale()))
            .reduce(f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyOptions {
    /// Fock cutoff per cavity mode.
    pub n_max: u8,
    pub rtol: f64,
    pub atol: f64,
    /// Keep the full tensor at every sample (memory heavy).
    pub store_tensors: bool,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        Self {
            n_max: 2,
            rtol: 1e-9,
            atol: 1e-12,
            store_tensors: false,
        }
    }
}

/// Reduced observables at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchySample {
    pub time: f64,
    pub flux_a: f64,
    pub flux_b: f64,
    /// `Tr[σ_ee ρ_{1,1;1,1}]`.
    pub excited_population: f64,
    pub trace_error: f64,
    pub hermiticity_error: f64,
}

#[derive(Debug, Clone)]
pub struct HierarchyTrajectory {
    pub dt: f64,
    pub samples: Vec<HierarchySample>,
    /// Filled only when [`HierarchyOptions::store_tensors`] is set.
    pub tensors: Vec<HierarchyTensor>,
    pub final_state: HierarchyTensor,
    pub gamma_total: f64,
    pub stats: OdeStats,
}

impl HierarchyTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn flux(&self, port: Port) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| match port {
                Port::A => s.flux_a,
                Port::B => s.flux_b,
            })
            .collect()
    }

    /// Mean number of photons leaving through `port`.
    pub fn photon_number(&self, port: Port) -> f64 {
        trapezoid(self.dt, self.flux(port))
    }

    /// Mean number of photons scattered out by the atom, `2Γ ∫<σ_ee>`.
    pub fn scattered_photons(&self) -> f64 {
        2.0 * self.gamma_total * trapezoid(self.dt, self.samples.iter().map(|s| s.excited_population))
    }

    pub fn max_trace_error(&self) -> f64 {
        self.samples.iter().map(|s| s.trace_error).fold(0.0, f64::max)
    }

    pub fn max_hermiticity_error(&self) -> f64 {
        self.samples.iter().map(|s| s.hermiticity_error).fold(0.0, f64::max)
    }

    pub fn min_flux(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| [s.flux_a, s.flux_b])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Sampled output flux `<z_out† z_out>(t)` of a port.
pub fn output_flux(trajectory: &HierarchyTrajectory, port: Port) -> Vec<f64> {
    trajectory.flux(port)
}

/// Photon-counting statistics of a two-photon scattering run.
#[derive(Debug, Clone)]
pub struct CoincidenceResult {
    /// Exactly one photon leaves each port.
    pub one_each: f64,
    pub both_a: f64,
    pub both_b: f64,
    pub trajectory: HierarchyTrajectory,
}

impl CoincidenceResult {
    /// Probability that at least one photon was scattered out by the atom.
    pub fn lost(&self) -> f64 {
        1.0 - self.one_each - self.both_a - self.both_b
    }
}

struct Generator {
    dim: usize,
    heff: SparseOp,
    heff_dag: SparseOp,
    jumps: Vec<(SparseOp, SparseOp)>,
    l: [SparseOp; 2],
    l_dag: [SparseOp; 2],
    ldl: [SparseOp; 2],
}

impl Generator {
    fn new(ch: &LindbladChannels) -> Self {
        let heff = ch.effective_hamiltonian();
        let jumps = ch
            .jumps()
            .into_iter()
            .filter(|l| l.nnz() > 0)
            .map(|l| (l.clone(), l.adjoint()))
            .collect();
        Self {
            dim: ch.dim(),
            heff_dag: heff.adjoint(),
            heff,
            jumps,
            l_dag: [ch.l_a.adjoint(), ch.l_b.adjoint()],
            ldl: [ch.l_a.adjoint().mul(&ch.l_a), ch.l_b.adjoint().mul(&ch.l_b)],
            l: [ch.l_a.clone(), ch.l_b.clone()],
        }
    }

    /// `out += 𝓛(x)` over all sixteen components of `x`, with the drive
    /// amplitudes `drive = (α, β)`.
    fn apply(&self, drive: [C64; 2], x: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let d2 = self.dim * self.dim;
        let one = C64::new(1.0, 0.0);
        let i = C64::i();
        for k in 0..COMPONENTS {
            let (m, n, p, q) = indices(k);
            let xk = &x[k * d2..(k + 1) * d2];
            let ok = &mut out[k * d2..(k + 1) * d2];
            self.heff.left_mul_add(xk, ok, -i);
            self.heff_dag.right_mul_add(xk, ok, i);
            for (l, ld) in &self.jumps {
                l.sandwich_add(xk, ld, ok, one, scratch);
            }
            // (port, raise-left index, raise-right index, lowered components)
            let lowered = [
                (0, m, component(0, n, p, q), n, component(m, 0, p, q)),
                (1, p, component(m, n, 0, q), q, component(m, n, p, 0)),
            ];
            for (port, left, kl, right, kr) in lowered {
                let xi = drive[port];
                if left == 1 {
                    // ξ [x_{..-1..}, L†]
                    let src = &x[kl * d2..(kl + 1) * d2];
                    self.l_dag[port].right_mul_add(src, ok, xi);
                    self.l_dag[port].left_mul_add(src, ok, -xi);
                }
                if right == 1 {
                    // ξ* [L, x_{..,-1}]
                    let src = &x[kr * d2..(kr + 1) * d2];
                    self.l[port].left_mul_add(src, ok, xi.conj());
                    self.l[port].right_mul_add(src, ok, -xi.conj());
                }
            }
        }
    }

    /// `out += J_port(x)`.
    fn detect(&self, port: usize, xi: C64, x: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let d2 = self.dim * self.dim;
        let one = C64::new(1.0, 0.0);
        for k in 0..COMPONENTS {
            let (m, n, p, q) = indices(k);
            let (left, right) = if port == 0 { (m, n) } else { (p, q) };
            let lower = |lm: bool, ln: bool| {
                let (mm, nn, pp, qq) = if port == 0 {
                    (m - lm as usize, n - ln as usize, p, q)
                } else {
                    (m, n, p - lm as usize, q - ln as usize)
                };
                component(mm, nn, pp, qq)
            };
            let ok = &mut out[k * d2..(k + 1) * d2];
            let xk = &x[k * d2..(k + 1) * d2];
            self.l[port].sandwich_add(xk, &self.l_dag[port], ok, one, scratch);
            if left == 1 {
                let j = lower(true, false);
                self.l_dag[port].right_mul_add(&x[j * d2..(j + 1) * d2], ok, xi);
            }
            if right == 1 {
                let j = lower(false, true);
                self.l[port].left_mul_add(&x[j * d2..(j + 1) * d2], ok, xi.conj());
            }
            if left == 1 && right == 1 {
                let j = lower(true, true);
                let w = xi.norm_sqr();
                for (o, v) in ok.iter_mut().zip(&x[j * d2..(j + 1) * d2]) {
                    *o += w * v;
                }
            }
        }
    }

    /// `Tr[J_port(x)_{1,1;1,1}]`.
    fn detected_trace(&self, port: usize, xi: C64, x: &[C64]) -> f64 {
        let d = self.dim;
        let d2 = d * d;
        let comp = |k: usize| &x[k * d2..(k + 1) * d2];
        let (k10, k01, k00) = if port == 0 {
            (component(0, 1, 1, 1), component(1, 0, 1, 1), component(0, 0, 1, 1))
        } else {
            (component(1, 1, 0, 1), component(1, 1, 1, 0), component(1, 1, 0, 0))
        };
        // Tr[L†L ρ11] + ξ Tr[L† ρ01] + ξ* Tr[L ρ10] + |ξ|² Tr[ρ00]
        let v = self.ldl[port].trace_with(comp(PHYSICAL))
            + xi * self.l_dag[port].trace_with(comp(k10))
            + xi.conj() * self.l[port].trace_with(comp(k01))
            + xi.norm_sqr() * crate::sparse::trace(comp(k00), d);
        v.re
    }
}

struct HierarchySystem<'a> {
    gen: Generator,
    inputs: &'a HierarchyInputs,
    /// Also propagate the regression operators and coincidence integrals.
    extended: bool,
}

impl HierarchySystem<'_> {
    fn block(&self) -> usize {
        COMPONENTS * self.gen.dim * self.gen.dim
    }
}

impl OdeSystem for HierarchySystem<'_> {
    fn dim(&self) -> usize {
        if self.extended {
            3 * self.block() + 3
        } else {
            self.block()
        }
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let (alpha, beta) = self.inputs.amplitudes(t);
        let drive = [alpha, beta];
        let nb = self.block();
        let d2 = self.gen.dim * self.gen.dim;
        let mut scratch = vec![C64::new(0.0, 0.0); d2];
        dy.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        let (x, rest) = y.split_at(nb);
        let (dx, drest) = dy.split_at_mut(nb);
        self.gen.apply(drive, x, dx, &mut scratch);
        if !self.extended {
            return;
        }
        let (ya, rest) = rest.split_at(nb);
        let (yb, _) = rest.split_at(nb);
        let (dya, drest) = drest.split_at_mut(nb);
        let (dyb, dg) = drest.split_at_mut(nb);
        self.gen.apply(drive, ya, dya, &mut scratch);
        self.gen.detect(0, alpha, x, dya, &mut scratch);
        self.gen.apply(drive, yb, dyb, &mut scratch);
        self.gen.detect(1, beta, x, dyb, &mut scratch);
        let ab = self.gen.detected_trace(1, beta, ya) + self.gen.detected_trace(0, alpha, yb);
        let aa = self.gen.detected_trace(0, alpha, ya);
        let bb = self.gen.detected_trace(1, beta, yb);
        dg[0] = C64::new(ab, 0.0);
        dg[1] = C64::new(aa, 0.0);
        dg[2] = C64::new(bb, 0.0);
    }
}

fn run(
    params: &SystemParams,
    inputs: &HierarchyInputs,
    atom: &AtomDensity,
    grid: &TimeGrid,
    options: &HierarchyOptions,
    extended: bool,
) -> Result<(HierarchyTrajectory, [f64; 3])> {
    if options.n_max < inputs.photon_number() as u8 {
        return Err(Error::invalid(format!(
            "Fock cutoff {} is below the input photon number {}",
            options.n_max,
            inputs.photon_number()
        )));
    }
    let ch = LindbladChannels::new(params, options.n_max);
    let sigma_ee = ch.excited_projector();
    let dim = ch.dim();
    let sys = HierarchySystem {
        gen: Generator::new(&ch),
        inputs,
        extended,
    };
    let nb = sys.block();
    let mut y0 = vec![C64::new(0.0, 0.0); sys.dim()];
    y0[..nb].copy_from_slice(HierarchyTensor::initial(&atom.embed(&ch.space), dim).as_flat());

    let mut solver = Dopri5::with_tolerances(options.rtol, options.atol);
    if let Some(s) = inputs.time_scale() {
        solver = solver.with_h_max(0.25 * s);
    }
    let times = grid.times();
    let mut samples = Vec::with_capacity(times.len());
    let mut tensors = Vec::new();
    let mut last = Vec::new();
    let mut counts = [0.0; 3];
    let stats = solver.integrate(&sys, y0, &times, |idx, t, y| {
        let x = &y[..nb];
        let (alpha, beta) = inputs.amplitudes(t);
        let phys = &x[PHYSICAL * dim * dim..(PHYSICAL + 1) * dim * dim];
        let sample = HierarchySample {
            time: t,
            flux_a: sys.gen.detected_trace(0, alpha, x),
            flux_b: sys.gen.detected_trace(1, beta, x),
            excited_population: sigma_ee.trace_with(phys).re,
            trace_error: tensor::trace_error(phys, dim),
            hermiticity_error: tensor::hermiticity_error(x, dim),
        };
        if sample.trace_error > 10.0 * TRACE_TOL {
            return Err(Error::numerical(
                t,
                format!("trace of component {PHYSICAL} drifted by {:.3e}", sample.trace_error),
            ));
        }
        if sample.hermiticity_error > 10.0 * HERMITICITY_TOL {
            return Err(Error::numerical(
                t,
                format!("hermiticity pairing broken by {:.3e}", sample.hermiticity_error),
            ));
        }
        samples.push(sample);
        if options.store_tensors {
            tensors.push(HierarchyTensor::from_flat(dim, x));
        }
        if idx + 1 == times.len() {
            last = x.to_vec();
            if extended {
                let g = &y[3 * nb..];
                counts = [g[0].re, g[1].re, g[2].re];
            }
        }
        Ok(())
    })?;
    Ok((
        HierarchyTrajectory {
            dt: grid.dt(),
            samples,
            tensors,
            final_state: HierarchyTensor::from_flat(dim, &last),
            gamma_total: params.gamma_total(),
            stats,
        },
        counts,
    ))
}

pub fn integrate_hierarchy(
    params: &SystemParams,
    inputs: &HierarchyInputs,
    atom: &AtomDensity,
    grid: &TimeGrid,
    options: &HierarchyOptions,
) -> Result<HierarchyTrajectory> {
    run(params, inputs, atom, grid, options, false).map(|(t, _)| t)
}

/// Photon-counting statistics for one photon entering each port.
pub fn biphoton_coincidence(
    params: &SystemParams,
    inputs: &HierarchyInputs,
    atom: &AtomDensity,
    grid: &TimeGrid,
    options: &HierarchyOptions,
) -> Result<CoincidenceResult> {
    let (trajectory, [one_each, both_a, both_b]) = run(params, inputs, atom, grid, options, true)?;
    Ok(CoincidenceResult {
        one_each,
        both_a,
        both_b,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{AtomLevel, PulseShape};

    fn setup(steps: usize) -> (PulseShape, TimeGrid) {
        let p = PulseShape::centered_for_duration(40.0).unwrap();
        (p, TimeGrid::default_for(&p).with_n_steps(steps).unwrap())
    }

    #[test]
    fn vacuum_input_leaves_g2_stationary() {
        let (_, grid) = setup(200);
        let params = SystemParams::from_cooperativity(10.0, 0.2).unwrap();
        let atom = AtomDensity::level(AtomLevel::G2);
        let tr = integrate_hierarchy(&params, &HierarchyInputs::default(), &atom, &grid, &Default::default()).unwrap();
        let init = HierarchyTensor::initial(&atom.embed(&LindbladChannels::new(&params, 2).space), 27);
        let diff = tr
            .final_state
            .as_flat()
            .iter()
            .zip(init.as_flat())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-14);
        assert!(tr.photon_number(Port::A).abs() < 1e-14);
    }

    #[test]
    fn excited_atom_decays_without_drive() {
        let (_, grid) = setup(400);
        let params = SystemParams::symmetric(0.0, 0.2).unwrap();
        let mut m = nalgebra::Matrix3::zeros();
        m[(2, 2)] = C64::new(1.0, 0.0);
        let atom = AtomDensity::new(m).unwrap();
        let tr = integrate_hierarchy(&params, &HierarchyInputs::default(), &atom, &grid, &Default::default()).unwrap();
        for s in tr.samples.iter().step_by(40) {
            assert!((s.excited_population - (-0.4 * s.time).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn g2_passes_both_photons() {
        let (p, grid) = setup(1000);
        let params = SystemParams::from_cooperativity(10.0, 0.2).unwrap();
        let res = biphoton_coincidence(
            &params,
            &HierarchyInputs::both(p),
            &AtomDensity::level(AtomLevel::G2),
            &grid,
            &Default::default(),
        )
        .unwrap();
        assert!((res.one_each - 1.0).abs() < 1e-3, "{}", res.one_each);
        assert!(res.both_a.abs() < 1e-3 && res.both_b.abs() < 1e-3);
        assert!((res.trajectory.photon_number(Port::A) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn single_photon_swap_at_c10() {
        let (p, grid) = setup(1000);
        let params = SystemParams::from_cooperativity(10.0, 0.2).unwrap();
        let tr = integrate_hierarchy(
            &params,
            &HierarchyInputs::only(Port::B, p),
            &AtomDensity::level(AtomLevel::G1),
            &grid,
            &Default::default(),
        )
        .unwrap();
        let na = tr.photon_number(Port::A);
        assert!((na - crate::analytic::swap_probability(10.0)).abs() < 1e-2, "{na}");
        let total = na + tr.photon_number(Port::B) + tr.scattered_photons();
        assert!((total - 1.0).abs() < 1e-4, "{total}");
        assert!(tr.min_flux() > -1e-10);
    }
}
