use crossqed::analytic;
use crossqed::gates::{asymmetry_sweep, evaluate_cnot_atom_control, evaluate_cnot_light_control, evaluate_fredkin, pair_outcome};
use crossqed::hierarchy::{biphoton_coincidence, AtomDensity, HierarchyInputs};
use crossqed::semiclassical::{biphoton_analog_product, swap_energy};
use crossqed::single_excitation::{integrate_single_excitation, Port};
use crossqed::timebin::{convergence_report, max_bin_width, timebin_grid, TimebinInput};
use crossqed::{AtomLevel, Envelope, InitialState, C64};
use rayon::prelude::*;

use crate::config::{Axis, Biphoton, RunConfig, Scale, Sweep};
use crate::error::{CliError, Result};
use crate::table::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Response,
    Fig2,
    Fig3,
    Fredkin,
    CompareDk,
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Response => "response",
            Command::Fig2 => "fig2",
            Command::Fig3 => "fig3",
            Command::Fredkin => "fredkin",
            Command::CompareDk => "compare-dk",
            Command::Oracle => "oracle",
        }
    }
}

/// Runs `command`, completing `cfg` with the defaults it used.
pub fn run(command: Command, cfg: &mut RunConfig) -> Result<Table> {
    match command {
        Command::Response => response(cfg),
        Command::Fig2 => fig2(cfg),
        Command::Fig3 => fig3(cfg),
        Command::Fredkin => fredkin(cfg),
        Command::CompareDk => compare_dk(cfg),
        Command::Oracle => oracle(cfg),
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn level_label(level: AtomLevel) -> &'static str {
    match level {
        AtomLevel::G1 => "g1",
        AtomLevel::G2 => "g2",
    }
}

/// Maps `f` over the sweep in parallel, keeping sweep order.
fn sweep_rows(values: &[f64], f: impl Fn(f64) -> Result<Vec<Vec<Cell>>> + Sync) -> Result<Vec<Vec<Cell>>> {
    let chunks = values.par_iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

fn response(cfg: &mut RunConfig) -> Result<Table> {
    let sweep = cfg.resolve_sweep(
        Sweep {
            axis: Axis::Omega,
            min: -5.0,
            max: 5.0,
            points: 201,
            scale: Scale::Linear,
        },
        &[Axis::Omega],
    )?;
    let params = cfg.params()?;
    let mut table = Table::new(&["omega", "level", "r_abs2", "t_abs2", "arg_r", "arg_t"]);
    for omega in sweep.values() {
        for level in AtomLevel::BOTH {
            let s = analytic::scattering_coefficients(&params, omega, level)?;
            table.push(vec![
                omega.into(),
                level_label(level).into(),
                s.r.norm_sqr().into(),
                s.t.norm_sqr().into(),
                s.r.arg().into(),
                s.t.arg().into(),
            ]);
        }
    }
    Ok(table)
}

fn fig2(cfg: &mut RunConfig) -> Result<Table> {
    let rate = 2.0 * cfg.kappa_a * cfg.gamma_total();
    let g_of = move |coop: f64| (rate * coop).sqrt();
    let sweep = cfg.resolve_sweep(
        Sweep {
            axis: Axis::G,
            min: g_of(0.01),
            max: g_of(100.0),
            points: 30,
            scale: Scale::Log,
        },
        &[Axis::G, Axis::Cooperativity],
    )?;
    let couplings: Vec<f64> = match sweep.axis {
        Axis::Cooperativity => sweep.values().into_iter().map(g_of).collect(),
        _ => sweep.values(),
    };
    let pulse = cfg.pulse()?;
    let env: Envelope = pulse.into();
    let grid = cfg.grid(&pulse)?;
    let cfg = &*cfg;
    let rows = sweep_rows(&couplings, |g| {
        let params = cfg.params_with(g)?;
        let coop = params.cooperativity()?;
        let init = InitialState::single_photon(c(1.0), c(0.0), c(0.0), c(1.0))?;
        let exact = integrate_single_excitation(&params, &init, &env, &grid)?.port_energy(AtomLevel::G1, Port::A);
        let sc = swap_energy(&params, &env, &grid, &Default::default())?;
        let pair_sc = biphoton_analog_product(&params, &env, &grid, &Default::default())?;
        let pair_exact = match cfg.biphoton {
            Biphoton::None => None,
            _ => Some(pair_outcome(&params, &env, &grid, &cfg.backend())?.one_each),
        };
        Ok(vec![vec![
            g.into(),
            coop.into(),
            analytic::swap_probability(coop).into(),
            sc.into(),
            exact.into(),
            analytic::biphoton_survival_probability(coop).into(),
            pair_sc.into(),
            pair_exact.into(),
        ]])
    })?;
    let mut table = Table::new(&[
        "g",
        "cooperativity",
        "swap_analytic",
        "swap_semiclassical",
        "swap_exact",
        "pair_analytic",
        "pair_semiclassical",
        "pair_exact",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

fn fig3(cfg: &mut RunConfig) -> Result<Table> {
    let sweep = cfg.resolve_sweep(
        Sweep {
            axis: Axis::Cooperativity,
            // below this the weakly damped atom outlives the default grid at Γ = 0.02
            min: 1.0,
            max: 100.0,
            points: 31,
            scale: Scale::Log,
        },
        &[Axis::Cooperativity],
    )?;
    if cfg.fig3_gammas.is_empty() {
        return Err(CliError::config("`fig3_gammas` is empty"));
    }
    let pulse = cfg.pulse()?;
    let env: Envelope = pulse.into();
    let grid = cfg.grid(&pulse)?;
    let cfg = &*cfg;
    let mut table = Table::new(&["series", "gamma", "cooperativity", "ratio", "success"]);
    for &gamma in &cfg.fig3_gammas {
        let rows = sweep_rows(&sweep.values(), |coop| {
            let params = cfg.params_at(coop, gamma)?;
            let atom = evaluate_cnot_atom_control(&params, &env, &grid)?.min_success();
            let light = evaluate_cnot_light_control(&params, &env, &grid)?.min_success();
            Ok(vec![
                vec!["atom_control".into(), gamma.into(), coop.into(), 1.0.into(), atom.into()],
                vec!["light_control".into(), gamma.into(), coop.into(), 1.0.into(), light.into()],
            ])
        })?;
        // all atom-control rows first, then light control
        let (atom, light): (Vec<_>, Vec<_>) = rows.into_iter().partition(|r| r[0] == Cell::from("atom_control"));
        atom.into_iter().chain(light).for_each(|r| table.push(r));
    }
    let inset = Sweep {
        axis: Axis::G,
        min: cfg.inset_min,
        max: cfg.inset_max,
        points: cfg.inset_points,
        scale: Scale::Log,
    };
    if inset.points == 0 || !(inset.min > 0.0 && inset.min <= inset.max) {
        return Err(CliError::config("inset needs 0 < inset_min <= inset_max and at least one point"));
    }
    let params = cfg.params()?;
    let coop = params.cooperativity()?;
    for p in asymmetry_sweep(&params, &inset.values(), &env, &grid)? {
        table.push(vec![
            "inset".into(),
            params.gamma_total().into(),
            coop.into(),
            p.ratio.into(),
            p.success.into(),
        ]);
    }
    Ok(table)
}

fn fredkin(cfg: &mut RunConfig) -> Result<Table> {
    cfg.forbid_sweep()?;
    let pulse = cfg.pulse()?;
    let env: Envelope = pulse.into();
    let grid = cfg.grid(&pulse)?;
    let mut table = Table::new(&["cooperativity", "input", "ideal", "success", "loss", "wrong_port", "overlap"]);
    for &coop in &cfg.fredkin_cooperativities {
        let params = cfg.params_at(coop, cfg.gamma_total())?;
        let t = evaluate_fredkin(&params, &env, &grid, &cfg.backend())?;
        for r in t.rows {
            table.push(vec![
                coop.into(),
                r.input.as_str().into(),
                r.ideal.as_str().into(),
                r.success.into(),
                r.loss.into(),
                r.wrong_port.into(),
                r.overlap.into(),
            ]);
        }
    }
    Ok(table)
}

fn compare_dk(cfg: &mut RunConfig) -> Result<Table> {
    let sweep = cfg.resolve_sweep(
        Sweep {
            axis: Axis::Cooperativity,
            min: 0.1,
            max: 1000.0,
            points: 41,
            scale: Scale::Log,
        },
        &[Axis::Cooperativity],
    )?;
    let mut table = Table::new(&["cooperativity", "p_fail", "p_fail_dk", "ratio"]);
    for coop in sweep.values() {
        let cross = analytic::cross_failure_probability(coop).value;
        let dk = analytic::dk_failure_probability(coop).value;
        let ratio = if dk > 0.0 { Some(cross / dk) } else { None };
        table.push(vec![coop.into(), cross.into(), dk.into(), ratio.into()]);
    }
    Ok(table)
}

/// Photon pair on an atom in `g1`: the time-bin runs behind the
/// extrapolated coincidence, next to the hierarchy value.
fn oracle(cfg: &mut RunConfig) -> Result<Table> {
    cfg.forbid_sweep()?;
    let params = cfg.params()?;
    let pulse = cfg.pulse()?;
    let env: Envelope = pulse.into();
    let grid = cfg.grid(&pulse)?;
    let input = TimebinInput::Biphoton {
        envelope_a: env.clone(),
        envelope_b: env.clone(),
    };
    let bins = timebin_grid(&env, cfg.bin_width.min(0.8 * max_bin_width(&params)))?;
    let report = convergence_report(&params, &input, [c(1.0), c(0.0)], &bins)?;
    let mut table = Table::new(&["series", "bin_width", "one_each", "both_a", "both_b", "lost", "order"]);
    for d in &report.runs {
        table.push(vec![
            "timebin".into(),
            d.dt.into(),
            d.one_each().into(),
            d.both_a().into(),
            d.both_b().into(),
            (d.one_lost() + d.both_lost()).into(),
            Cell::Empty,
        ]);
    }
    let one = report.observable(|d| d.one_each());
    let both_a = report.observable(|d| d.both_a()).extrapolated;
    let both_b = report.observable(|d| d.both_b()).extrapolated;
    table.push(vec![
        "extrapolated".into(),
        Cell::Empty,
        one.extrapolated.into(),
        both_a.into(),
        both_b.into(),
        (1.0 - one.extrapolated - both_a - both_b).into(),
        one.order.into(),
    ]);
    let h = biphoton_coincidence(
        &params,
        &HierarchyInputs::both(env.clone()),
        &AtomDensity::level(AtomLevel::G1),
        &grid,
        &cfg.hierarchy_options(),
    )?;
    table.push(vec![
        "hierarchy".into(),
        Cell::Empty,
        h.one_each.into(),
        h.both_a.into(),
        h.both_b.into(),
        h.lost().into(),
        Cell::Empty,
    ]);
    Ok(table)
}
