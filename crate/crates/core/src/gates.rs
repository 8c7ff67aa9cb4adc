//! Gate-level truth tables built from the scattering solvers.
//!
//! Encodings: the atom carries `|1̄>_c = |g1>`, `|0̄>_c = |g2>`; a photon in
//! port α encodes `|1̄>`, in port β `|0̄>`. With light as control the dark
//! photon is `|0̄>_c`, the bright photon `|1̄>_c`, and the atomic target
//! qubit is `|0̄> = (|g2> + |g1>)/√2`, `|1̄> = (|g2> - |g1>)/√2`.
//!
//! Basis rows score the probability of the ideal photon-number outcome.
//! Light-controlled rows score the probability of finding the atom in the
//! ideal target state with the photon still in the input collective mode,
//! whatever its envelope. The two-photon Fredkin row scores the probability
//! of one photon in each port. The `overlap` column additionally asks for the
//! envelope an empty cavity would return.

use rayon::prelude::*;

use crate::collective::{to_dark_bright, CollectiveMode};
use crate::hierarchy::{biphoton_coincidence, AtomDensity, HierarchyInputs, HierarchyOptions};
use crate::single_excitation::{integrate_single_excitation, Port, SingleExcitationOutput};
use crate::timebin::{convergence_report, max_bin_width, timebin_grid, TimebinInput};
use crate::{trapezoid, AtomLevel, Envelope, Error, InitialState, Result, SystemParams, TimeGrid, C64};

/// Tolerance on `success + loss + wrong_port ≤ 1`.
pub const BUDGET_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    CnotAtomControl,
    CnotLightControl,
    Fredkin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateRow {
    pub input: String,
    pub ideal: String,
    pub success: f64,
    pub loss: f64,
    pub wrong_port: f64,
    /// Squared overlap of the ideal output with the empty-cavity envelope;
    /// `None` where the solver does not provide it.
    pub overlap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthTableResult {
    pub kind: GateKind,
    pub rows: Vec<GateRow>,
}

impl TruthTableResult {
    pub fn min_success(&self) -> f64 {
        self.rows.iter().map(|r| r.success).fold(f64::INFINITY, f64::min)
    }

    pub fn row(&self, input: &str) -> Option<&GateRow> {
        self.rows.iter().find(|r| r.input == input)
    }
}

/// How the two-photon rows are computed.
#[derive(Debug, Clone, PartialEq)]
pub enum BiphotonBackend {
    /// Collision model at bin widths `dt`, `dt/2`, `dt/4`, Richardson
    /// extrapolated. `dt` is reduced when the couplings are too fast for it.
    TimeBin { dt: f64 },
    Hierarchy(HierarchyOptions),
    Disabled,
}

impl Default for BiphotonBackend {
    fn default() -> Self {
        BiphotonBackend::TimeBin { dt: 0.1 }
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn require_symmetric(params: &SystemParams) -> Result<()> {
    if params.is_symmetric() {
        Ok(())
    } else {
        Err(Error::Unsupported(
            "truth tables assume g_b = -g_a and κ_a = κ_b; use asymmetry_sweep off symmetry".into(),
        ))
    }
}

fn inner(dt: f64, x: &[C64], y: &[C64]) -> C64 {
    let vals: Vec<C64> = x.iter().zip(y).map(|(a, b)| a.conj() * b).collect();
    let n = vals.len();
    if n < 2 {
        return c(0.0);
    }
    let sum: C64 = vals.iter().sum();
    dt * (sum - 0.5 * (vals[0] + vals[n - 1]))
}

/// Single-photon run with both atomic levels at weight 1/2.
struct PortRun {
    out: SingleExcitationOutput,
    weights: [C64; 2],
    mu: [C64; 2],
}

impl PortRun {
    fn new(params: &SystemParams, lambda: [C64; 2], mu: [C64; 2], envelope: &Envelope, grid: &TimeGrid) -> Result<Self> {
        let init = InitialState::single_photon(lambda[0], lambda[1], mu[0], mu[1])?;
        let out = integrate_single_excitation(params, &init, envelope, grid)?;
        Ok(Self {
            out,
            weights: lambda,
            mu,
        })
    }

    fn both_levels(params: &SystemParams, mu: [C64; 2], envelope: &Envelope, grid: &TimeGrid) -> Result<Self> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(params, [c(h), c(h)], mu, envelope, grid)
    }

    /// Output of `level` in `port` conditioned on that level.
    fn conditional(&self, level: AtomLevel, port: Port) -> Vec<C64> {
        let l = self.weights[level.index()];
        self.out.output(level, port).iter().map(|z| z / l).collect()
    }

    fn energy(&self, level: AtomLevel, port: Port) -> f64 {
        self.out.port_energy(level, port) / self.weights[level.index()].norm_sqr()
    }

    /// Unit-input response of the empty cavity, recovered from the `g2`
    /// branch (which never couples to the atom).
    fn empty_cavity(&self) -> Vec<C64> {
        let (port, mu) = if self.mu[0].norm() >= self.mu[1].norm() {
            (Port::A, self.mu[0])
        } else {
            (Port::B, self.mu[1])
        };
        self.conditional(AtomLevel::G2, port).iter().map(|z| z / mu).collect()
    }

    fn residual_check(&self) -> Result<()> {
        self.out.loss_probability().map(|_| ())
    }
}

fn basis_row(run: &PortRun, level: AtomLevel, input: &str, ideal: &str, ideal_port: Port) -> GateRow {
    let success = run.energy(level, ideal_port);
    let wrong_port = run.energy(level, ideal_port.other());
    let e = run.empty_cavity();
    let norm = trapezoid(run.out.dt, e.iter().map(|z| z.norm_sqr()));
    let overlap = inner(run.out.dt, &e, &run.conditional(level, ideal_port)).norm_sqr() / norm;
    GateRow {
        input: input.into(),
        ideal: ideal.into(),
        success,
        loss: (1.0 - success - wrong_port).max(0.0),
        wrong_port,
        overlap: Some(overlap),
    }
}

fn port_label(port: Port) -> &'static str {
    match port {
        Port::A => "1",
        Port::B => "0",
    }
}

fn level_label(level: AtomLevel) -> &'static str {
    match level {
        AtomLevel::G1 => "g1",
        AtomLevel::G2 => "g2",
    }
}

fn photon_in(port: Port) -> [C64; 2] {
    match port {
        Port::A => [c(1.0), c(0.0)],
        Port::B => [c(0.0), c(1.0)],
    }
}

/// Atom as control: `g1` swaps the photon between the ports, `g2` leaves it.
pub fn evaluate_cnot_atom_control(params: &SystemParams, envelope: &Envelope, grid: &TimeGrid) -> Result<TruthTableResult> {
    require_symmetric(params)?;
    let runs: Vec<PortRun> = [Port::B, Port::A]
        .par_iter()
        .map(|&port| PortRun::both_levels(params, photon_in(port), envelope, grid))
        .collect::<Result<_>>()?;
    runs.iter().try_for_each(PortRun::residual_check)?;
    let mut rows = Vec::with_capacity(4);
    for level in [AtomLevel::G2, AtomLevel::G1] {
        for (run, port) in runs.iter().zip([Port::B, Port::A]) {
            let ideal_port = if level == AtomLevel::G1 { port.other() } else { port };
            let input = format!("{},{}", level_label(level), port_label(port));
            let ideal = format!("{},{}", level_label(level), port_label(ideal_port));
            rows.push(basis_row(run, level, &input, &ideal, ideal_port));
        }
    }
    Ok(TruthTableResult {
        kind: GateKind::CnotAtomControl,
        rows,
    })
}

fn target_amplitudes(bit: u8) -> [C64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // [λ1, λ2]
    match bit {
        0 => [c(h), c(h)],
        _ => [c(-h), c(h)],
    }
}

fn mode_label(mode: CollectiveMode) -> &'static str {
    match mode {
        CollectiveMode::Dark => "D",
        CollectiveMode::Bright => "B",
    }
}

/// One light-controlled row: `mode` photon, atomic target `bit`.
fn light_row(params: &SystemParams, mode: CollectiveMode, bit: u8, envelope: &Envelope, grid: &TimeGrid) -> Result<GateRow> {
    let (ma, mb) = mode.port_amplitudes();
    let mu = [ma, mb];
    let lambda = target_amplitudes(bit);
    let run = PortRun::new(params, lambda, mu, envelope, grid)?;
    run.residual_check()?;
    let ideal_bit = match mode {
        CollectiveMode::Dark => bit,
        CollectiveMode::Bright => 1 - bit,
    };
    let ideal_lambda = target_amplitudes(ideal_bit);
    let e = run.empty_cavity();
    let dt = run.out.dt;
    let n = run.out.times.len();
    // photon in `mode`, atom projected on the ideal target
    let mut projected = vec![c(0.0); n];
    let mut in_mode = 0.0;
    let mut other_mode = 0.0;
    for level in AtomLevel::BOTH {
        let w = ideal_lambda[level.index()].conj();
        let out_a = run.out.output(level, Port::A);
        let out_b = run.out.output(level, Port::B);
        let (dark, bright): (Vec<C64>, Vec<C64>) = out_a.iter().zip(out_b).map(|(&a, &b)| to_dark_bright(a, b)).unzip();
        let (same, other) = match mode {
            CollectiveMode::Dark => (dark, bright),
            CollectiveMode::Bright => (bright, dark),
        };
        for (p, z) in projected.iter_mut().zip(&same) {
            *p += w * z;
        }
        in_mode += trapezoid(dt, same.iter().map(|z| z.norm_sqr()));
        other_mode += trapezoid(dt, other.iter().map(|z| z.norm_sqr()));
    }
    let success = trapezoid(dt, projected.iter().map(|z| z.norm_sqr()));
    let norm = trapezoid(dt, e.iter().map(|z| z.norm_sqr()));
    let overlap = inner(dt, &e, &projected).norm_sqr() / norm;
    Ok(GateRow {
        input: format!("{},{}", mode_label(mode), bit),
        ideal: format!("{},{}", mode_label(mode), ideal_bit),
        success,
        loss: (1.0 - in_mode - other_mode).max(0.0),
        wrong_port: other_mode,
        overlap: Some(overlap),
    })
}

/// Light as control: a bright photon flips the atomic target, a dark one
/// passes without touching it.
pub fn evaluate_cnot_light_control(params: &SystemParams, envelope: &Envelope, grid: &TimeGrid) -> Result<TruthTableResult> {
    require_symmetric(params)?;
    let jobs = [
        (CollectiveMode::Dark, 0),
        (CollectiveMode::Dark, 1),
        (CollectiveMode::Bright, 0),
        (CollectiveMode::Bright, 1),
    ];
    let rows = jobs
        .par_iter()
        .map(|&(mode, bit)| light_row(params, mode, bit, envelope, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(TruthTableResult {
        kind: GateKind::CnotLightControl,
        rows,
    })
}

/// Probabilities of both photons leaving in separate ports, in the same
/// port, and at least one being scattered out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOutcome {
    pub one_each: f64,
    pub same_port: f64,
    pub lost: f64,
    /// Weight on one photon per port with empty-cavity envelopes, when the
    /// backend provides it.
    pub overlap: Option<f64>,
}

/// Photon pair, one per port, on an atom in `g1`.
pub fn pair_outcome(
    params: &SystemParams,
    envelope: &Envelope,
    grid: &TimeGrid,
    backend: &BiphotonBackend,
) -> Result<PairOutcome> {
    match backend {
        BiphotonBackend::TimeBin { dt } => {
            let input = TimebinInput::Biphoton {
                envelope_a: envelope.clone(),
                envelope_b: envelope.clone(),
            };
            let bins = timebin_grid(envelope, dt.min(0.8 * max_bin_width(params)))?;
            let report = convergence_report(params, &input, [c(1.0), c(0.0)], &bins)?;
            let one_each = report.observable(|d| d.one_each()).extrapolated;
            let same_port = report.observable(|d| d.both_a() + d.both_b()).extrapolated;
            let overlap = report.observable(|d| d.pair_overlap.unwrap_or(f64::NAN)).extrapolated;
            Ok(PairOutcome {
                one_each,
                same_port,
                lost: (1.0 - one_each - same_port).max(0.0),
                overlap: overlap.is_finite().then_some(overlap),
            })
        }
        BiphotonBackend::Hierarchy(options) => {
            let inputs = HierarchyInputs::both(envelope.clone());
            let r = biphoton_coincidence(params, &inputs, &AtomDensity::level(AtomLevel::G1), grid, options)?;
            Ok(PairOutcome {
                one_each: r.one_each,
                same_port: r.both_a + r.both_b,
                lost: r.lost(),
                overlap: None,
            })
        }
        BiphotonBackend::Disabled => Err(Error::Config(
            "the two-photon Fredkin row needs a biphoton backend (time-bin or hierarchy)".into(),
        )),
    }
}

/// Atom as control of a swap between the photonic targets in α and β.
/// Target labels list the α bit first.
pub fn evaluate_fredkin(
    params: &SystemParams,
    envelope: &Envelope,
    grid: &TimeGrid,
    backend: &BiphotonBackend,
) -> Result<TruthTableResult> {
    require_symmetric(params)?;
    if matches!(backend, BiphotonBackend::Disabled) {
        return Err(Error::Config(
            "the two-photon Fredkin row needs a biphoton backend (time-bin or hierarchy)".into(),
        ));
    }
    let pair = pair_outcome(params, envelope, grid, backend)?;
    fredkin_with_pair(params, envelope, grid, &pair)
}

/// [`evaluate_fredkin`] with the `g1,11` row taken from an already computed
/// pair run.
pub fn fredkin_with_pair(
    params: &SystemParams,
    envelope: &Envelope,
    grid: &TimeGrid,
    pair: &PairOutcome,
) -> Result<TruthTableResult> {
    require_symmetric(params)?;
    let singles: Vec<PortRun> = [Port::A, Port::B]
        .par_iter()
        .map(|&port| PortRun::both_levels(params, photon_in(port), envelope, grid))
        .collect::<Result<_>>()?;
    singles.iter().try_for_each(PortRun::residual_check)?;

    let bits = |port: Port| match port {
        Port::A => "10",
        Port::B => "01",
    };
    let mut rows = Vec::with_capacity(8);
    for level in [AtomLevel::G2, AtomLevel::G1] {
        let tag = level_label(level);
        rows.push(GateRow {
            input: format!("{tag},00"),
            ideal: format!("{tag},00"),
            success: 1.0,
            loss: 0.0,
            wrong_port: 0.0,
            overlap: Some(1.0),
        });
        for (run, port) in singles.iter().zip([Port::A, Port::B]) {
            let ideal_port = if level == AtomLevel::G1 { port.other() } else { port };
            rows.push(basis_row(
                run,
                level,
                &format!("{tag},{}", bits(port)),
                &format!("{tag},{}", bits(ideal_port)),
                ideal_port,
            ));
        }
        let row = match level {
            // an uncoupled atom leaves the photons independent
            AtomLevel::G2 => {
                let keep = singles[0].energy(level, Port::A) * singles[1].energy(level, Port::B);
                let swap = singles[0].energy(level, Port::B) * singles[1].energy(level, Port::A);
                let same = singles[0].energy(level, Port::A) * singles[1].energy(level, Port::A)
                    + singles[0].energy(level, Port::B) * singles[1].energy(level, Port::B);
                GateRow {
                    input: format!("{tag},11"),
                    ideal: format!("{tag},11"),
                    success: keep + swap,
                    loss: (1.0 - keep - swap - same).max(0.0),
                    wrong_port: same,
                    overlap: None,
                }
            }
            AtomLevel::G1 => GateRow {
                input: format!("{tag},11"),
                ideal: format!("{tag},11"),
                success: pair.one_each,
                loss: pair.lost,
                wrong_port: pair.same_port,
                overlap: pair.overlap,
            },
        };
        rows.push(row);
    }
    Ok(TruthTableResult {
        kind: GateKind::Fredkin,
        rows,
    })
}

/// One point of the coupling-asymmetry sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymmetryPoint {
    /// `g_a / |g_b|`.
    pub ratio: f64,
    /// Worst bright-controlled row.
    pub success: f64,
}

/// Bright-controlled success with `g_a = g√ρ`, `g_b = -g/√ρ`, keeping
/// `|g_a g_b| = g²` fixed.
pub fn asymmetry_sweep(params: &SystemParams, ratios: &[f64], envelope: &Envelope, grid: &TimeGrid) -> Result<Vec<AsymmetryPoint>> {
    require_symmetric(params)?;
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(Error::invalid(format!("coupling ratios must be positive, got {r}")));
    }
    let g = params.coupling();
    ratios
        .par_iter()
        .map(|&ratio| {
            let p = params.with_couplings(c(g * ratio.sqrt()), c(-g / ratio.sqrt()))?;
            let success = [0, 1]
                .iter()
                .map(|&bit| light_row(&p, CollectiveMode::Bright, bit, envelope, grid).map(|r| r.success))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            Ok(AsymmetryPoint { ratio, success })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{analytic, PulseShape};

    fn setup() -> (Envelope, TimeGrid) {
        let p = PulseShape::centered_for_duration(40.0).unwrap();
        (p.into(), TimeGrid::default_for(&p))
    }

    fn check_budget(t: &TruthTableResult) {
        for r in &t.rows {
            assert!(r.success + r.loss + r.wrong_port <= 1.0 + BUDGET_TOL, "{r:?}");
            assert!(r.success >= 0.0 && r.loss >= 0.0 && r.wrong_port >= 0.0, "{r:?}");
        }
    }

    #[test]
    fn atom_control_rows() {
        let (env, grid) = setup();
        let params = SystemParams::from_cooperativity(10.0, 0.2).unwrap();
        let t = evaluate_cnot_atom_control(&params, &env, &grid).unwrap();
        check_budget(&t);
        assert_eq!(t.rows.len(), 4);
        for r in t.rows.iter().filter(|r| r.input.starts_with("g2")) {
            assert!(r.success > 1.0 - 1e-4, "{r:?}");
        }
        let swap = t.row("g1,1").unwrap();
        assert_eq!(swap.ideal, "g1,0");
        assert!((swap.success - analytic::swap_probability(10.0)).abs() < 1e-2);
        assert!((swap.success + swap.wrong_port + swap.loss - 1.0).abs() < 1e-4);
    }

    #[test]
    fn decoupled_atom_never_swaps() {
        let (env, grid) = setup();
        let params = SystemParams::symmetric(0.0, 0.2).unwrap();
        let t = evaluate_cnot_atom_control(&params, &env, &grid).unwrap();
        assert!(t.row("g1,1").unwrap().success < 1e-8);
        assert!(t.row("g1,0").unwrap().wrong_port > 1.0 - 1e-4);
    }

    #[test]
    fn light_control_rows() {
        let (env, grid) = setup();
        for gamma in [0.02, 20.0] {
            let params = SystemParams::from_cooperativity(10.0, gamma).unwrap();
            let t = evaluate_cnot_light_control(&params, &env, &grid).unwrap();
            check_budget(&t);
            for r in t.rows.iter().filter(|r| r.input.starts_with('D')) {
                assert!((r.success - 1.0).abs() < 1e-4, "{r:?}");
            }
            for r in t.rows.iter().filter(|r| r.input.starts_with('B')) {
                assert!(r.success > 0.95 && r.success < 1.0, "Γ = {gamma}: {r:?}");
                assert_ne!(r.input, r.ideal);
            }
        }
    }

    #[test]
    fn asymmetric_params_are_rejected() {
        let (env, grid) = setup();
        let params = SystemParams::from_cooperativity(10.0, 0.2).unwrap();
        let g = params.coupling();
        let skew = params.with_couplings(c(1.1 * g), c(-g)).unwrap();
        assert!(matches!(
            evaluate_cnot_atom_control(&skew, &env, &grid),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn fredkin_needs_a_pair_backend() {
        let (env, grid) = setup();
        let params = SystemParams::from_cooperativity(10.0, 0.2).unwrap();
        assert!(matches!(
            evaluate_fredkin(&params, &env, &grid, &BiphotonBackend::Disabled),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn asymmetry_is_symmetric_under_inversion() {
        let (env, grid) = setup();
        let params = SystemParams::from_cooperativity(10.0, 0.2).unwrap();
        let pts = asymmetry_sweep(&params, &[1.0 / 1.5, 1.0, 1.5], &env, &grid).unwrap();
        assert!((pts[0].success - pts[2].success).abs() < 1e-6);
        assert!(pts[1].success > pts[0].success);
        let sym = evaluate_cnot_light_control(&params, &env, &grid).unwrap();
        let bright_min = sym
            .rows
            .iter()
            .filter(|r| r.input.starts_with('B'))
            .map(|r| r.success)
            .fold(f64::INFINITY, f64::min);
        assert!((pts[1].success - bright_min).abs() < 1e-12);
        assert!(asymmetry_sweep(&params, &[0.0], &env, &grid).is_err());
    }
}
