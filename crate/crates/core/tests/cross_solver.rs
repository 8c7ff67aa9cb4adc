use crossqed::hierarchy::{biphoton_coincidence, integrate_hierarchy, AtomDensity, HierarchyInputs, HierarchyOptions};
use crossqed::semiclassical::{integrate_semiclassical, swap_energy, AtomInit, Drive, SemiclassicalOptions};
use crossqed::single_excitation::{integrate_single_excitation, Port};
use crossqed::timebin::{simulate_timebin, timebin_grid, TimebinInput};
use crossqed::{AtomLevel, Envelope, InitialState, PulseShape, SystemParams, TimeGrid, C64};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn pulse() -> PulseShape {
    PulseShape::centered_for_duration(40.0).unwrap()
}

/// Swap probability from the frequency domain: `∫ p(ω) |t(ω)|² dω` with the
/// Gaussian power spectrum `p(ω) = η/√π exp(-η²ω²)` and
/// `t = (x+ - x-)/2` written out from scratch.
fn spectral_swap(c_coop: f64, gamma: f64, eta: f64) -> f64 {
    let kappa = 1.0;
    let g2 = c_coop * 2.0 * kappa * gamma;
    let n = 4001;
    let w_max = 10.0 / eta;
    let h = 2.0 * w_max / (n - 1) as f64;
    let mut sum = 0.0;
    for k in 0..n {
        let w = -w_max + k as f64 * h;
        let i = C64::new(0.0, 1.0);
        let xp = (kappa + i * w) / (kappa - i * w);
        let xm = ((kappa + i * w) * (gamma - i * w) - 2.0 * g2) / ((kappa - i * w) * (gamma - i * w) + 2.0 * g2);
        let t = (xp - xm) / 2.0;
        let p = eta / std::f64::consts::PI.sqrt() * (-(eta * w).powi(2)).exp();
        let weight = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        sum += weight * p * t.norm_sqr();
    }
    sum * h
}

#[test]
fn time_domain_swap_matches_spectral_oracle() {
    let p = pulse();
    let env: Envelope = p.into();
    let grid = TimeGrid::default_for(&p);
    for coop in [0.01, 0.1, 1.0, 10.0, 100.0] {
        let params = SystemParams::from_cooperativity(coop, 0.2).unwrap();
        let init = InitialState::single_photon(c(1.0), c(0.0), c(0.0), c(1.0)).unwrap();
        let out = integrate_single_excitation(&params, &init, &env, &grid).unwrap();
        let swap = out.port_energy(AtomLevel::G1, Port::A);
        let oracle = spectral_swap(coop, 0.2, p.eta());
        assert!((swap - oracle).abs() < 1e-4, "C = {coop}: {swap} vs {oracle}");
    }
}

#[test]
fn weak_semiclassical_drive_recovers_the_linear_swap() {
    let p = pulse();
    let env: Envelope = p.into();
    let grid = TimeGrid::default_for(&p);
    let eps = 1e-2;
    for coop in [0.1, 0.5, 1.0, 10.0] {
        let params = SystemParams::from_cooperativity(coop, 0.2).unwrap();
        let drive = Drive::scaled(env.clone(), c(eps));
        let run = integrate_semiclassical(&params, None, Some(&drive), AtomInit::Level(AtomLevel::G1), &grid, &Default::default()).unwrap();
        let weak = run.output_energy(Port::A) / (eps * eps);
        let exact = spectral_swap(coop, 0.2, p.eta());
        assert!((weak - exact).abs() < 1e-3, "C = {coop}: {weak} vs {exact}");
    }
}

#[test]
fn unit_coherent_drive_saturates_below_the_single_photon_swap() {
    let p = pulse();
    let env: Envelope = p.into();
    let grid = TimeGrid::default_for(&p);
    for coop in [0.1, 1.0, 10.0] {
        let params = SystemParams::from_cooperativity(coop, 0.2).unwrap();
        let sc = swap_energy(&params, &env, &grid, &SemiclassicalOptions::default()).unwrap();
        let exact = spectral_swap(coop, 0.2, p.eta());
        assert!(sc < exact, "C = {coop}: {sc} vs {exact}");
    }
}

#[test]
fn hierarchy_reproduces_single_photon_scattering() {
    let p = pulse();
    let env: Envelope = p.into();
    let grid = TimeGrid::default_for(&p).with_n_steps(1000).unwrap();
    let params = SystemParams::from_cooperativity(1.0, 0.2).unwrap();
    let traj = integrate_hierarchy(
        &params,
        &HierarchyInputs::only(Port::B, env.clone()),
        &AtomDensity::level(AtomLevel::G1),
        &grid,
        &HierarchyOptions::default(),
    )
    .unwrap();
    let init = InitialState::single_photon(c(1.0), c(0.0), c(0.0), c(1.0)).unwrap();
    let out = integrate_single_excitation(&params, &init, &env, &grid).unwrap();
    let swap = out.port_energy(AtomLevel::G1, Port::A);
    let stay = out.port_energy(AtomLevel::G1, Port::B);
    assert!((traj.photon_number(Port::A) - swap).abs() < 1e-3);
    assert!((traj.photon_number(Port::B) - stay).abs() < 1e-3);
    assert!((traj.scattered_photons() - out.loss_probability().unwrap()).abs() < 1e-3);
}

#[test]
fn binned_envelopes_follow_the_continuous_ones() {
    let p = pulse();
    let env: Envelope = p.into();
    let bins = timebin_grid(&env, 0.02).unwrap();
    let params = SystemParams::from_cooperativity(2.0, 0.2).unwrap();
    let input = TimebinInput::SinglePhoton {
        mu_a: c(0.0),
        mu_b: c(1.0),
        envelope: env.clone(),
    };
    let d = simulate_timebin(&params, &input, [c(1.0), c(0.0)], &bins).unwrap();
    // sample the continuous solution at the bin centres
    let dt = bins.dt();
    let m = bins.n_steps();
    let centres = TimeGrid::new(0.5 * dt, bins.t_end() - 0.5 * dt, m - 1).unwrap();
    let init = InitialState::single_photon(c(1.0), c(0.0), c(0.0), c(1.0)).unwrap();
    let out = integrate_single_excitation(&params, &init, &env, &centres).unwrap();
    for port in Port::BOTH {
        let cont = out.output(AtomLevel::G1, port);
        let binned = &d.amplitudes[0][port.index()];
        let dist: f64 = cont.iter().zip(binned).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * dt;
        assert!(dist.sqrt() < 1e-2, "{port:?}: L2 distance {}", dist.sqrt());
    }
}

#[test]
fn pair_coincidence_agrees_between_hierarchy_and_time_bins() {
    let p = pulse();
    let env: Envelope = p.into();
    let params = SystemParams::from_cooperativity(1.0, 0.2).unwrap();
    let grid = TimeGrid::default_for(&p).with_n_steps(1000).unwrap();
    let h = biphoton_coincidence(
        &params,
        &HierarchyInputs::both(env.clone()),
        &AtomDensity::level(AtomLevel::G1),
        &grid,
        &HierarchyOptions::default(),
    )
    .unwrap();
    let input = TimebinInput::Biphoton {
        envelope_a: env.clone(),
        envelope_b: env.clone(),
    };
    let report = crossqed::timebin::convergence_report(&params, &input, [c(1.0), c(0.0)], &timebin_grid(&env, 0.1).unwrap()).unwrap();
    let tb = report.observable(|d| d.one_each());
    let order = tb.order.unwrap();
    assert!((0.8..=2.2).contains(&order), "order {order}");
    assert!((tb.extrapolated - h.one_each).abs() < 1e-3, "{} vs {}", tb.extrapolated, h.one_each);
    let same = report.observable(|d| d.both_a() + d.both_b()).extrapolated;
    assert!((same - (h.both_a + h.both_b)).abs() < 1e-3);
}
