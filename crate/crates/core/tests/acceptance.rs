//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test --test acceptance`.

mod common;

use std::time::Instant;

use common::*;
use consensus_kit::channel::{ChannelModel, IidChannel, TwoStateChannel};
use consensus_kit::criteria::{self, Decision, Verdict};
use consensus_kit::graph::{Orientation, Topology, TreeRule};
use consensus_kit::linalg::{self, Matrix};
use consensus_kit::lmi::LmiOptions;
use consensus_kit::mjls::{self, AgentModel, GainMatrix};
use consensus_kit::riccati::{self, GAMMA_C_BRACKET};
use consensus_kit::rng::SimRng;
use consensus_kit::sim::{self, SimScenario};
use rayon::prelude::*;

type Outcome = (bool, String);

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 scalar region", scalar_region),
        ("2 analytic region subset", analytic_region),
        ("3 identical experiment", identical_experiment),
        ("4 nonidentical experiment", nonidentical_experiment),
        ("5 gamma_c closed forms", gamma_c_oracle),
        ("6 radius vs Monte Carlo", radius_vs_monte_carlo),
        ("7 implication chain", implication_chain),
        ("8 scalar tightness", scalar_tightness),
        ("9 edge/vertex equivalence", edge_vertex_equivalence),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let (pass, detail) = run();
        println!(
            "{} criterion {name}: {detail} [{:.2}s]",
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
        failed += usize::from(!pass);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

/// Grid values i/100, i = 0..=100.
fn grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

fn scalar_region() -> Outcome {
    let t = Instant::now();
    let (a, spec) = (2.0, spectrum(2.0, 3.0));
    let (mut mismatches, mut unflagged, mut flagged, mut inside) = (0, 0, 0, 0);
    for (i, &p) in grid().iter().enumerate() {
        for (j, &q) in grid().iter().enumerate() {
            // Region q > 3/4, p < 7(q − 3/4), in exact integer arithmetic.
            let (i, j) = (i as i64, j as i64);
            let expected = j > 75 && i < 7 * (j - 75);
            let on_boundary = j == 75 || (j > 75 && i == 7 * (j - 75));
            // The chain needs p, q in (0, 1); the grid edges go through the
            // same two inequalities directly.
            let (holds, boundary) = match TwoStateChannel::new(p, q) {
                Ok(ch) => {
                    let v = criteria::scalar_iff(a, &spec, &ch).unwrap();
                    (v.decision == Decision::Consensusable, v.boundary)
                }
                Err(_) => {
                    let checks = criteria::scalar_region_checks(a, spec.theta(), p, q);
                    (checks.iter().all(|c| c.holds), checks.iter().any(|c| c.boundary))
                }
            };
            inside += usize::from(holds);
            if on_boundary {
                flagged += usize::from(boundary);
                unflagged += usize::from(!boundary);
            } else if holds != expected || boundary {
                mismatches += 1;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = mismatches == 0 && unflagged == 0 && secs < 1.0;
    (
        pass,
        format!(
            "101x101 grid, {inside} consensusable, {mismatches} mismatches, {flagged} boundary points flagged, {unflagged} unflagged, {secs:.3}s < 1s"
        ),
    )
}

fn analytic_region() -> Outcome {
    let model = AgentModel::scalar(2.0).unwrap();
    let spec = spectrum(2.0, 3.0);
    let gc = riccati::gamma_c(&model).unwrap();
    let (mut mismatches, mut analytic, mut scalar_only, mut outside_scalar) = (0, 0, 0, 0);
    let g = grid();
    for &p in &g[1..100] {
        for &q in &g[1..100] {
            let ch = TwoStateChannel::new(p, q).unwrap();
            let v = criteria::markov_identical_analytic_with(&model, &spec, &ch, &gc).unwrap();
            let holds = v.decision == Decision::SufficientHolds;
            // q > 25/32 and p < 7/32; neither boundary lies on the grid.
            let expected = 32.0 * q > 25.0 && 32.0 * p < 7.0;
            mismatches += usize::from(holds != expected);
            let s = criteria::scalar_iff(2.0, &spec, &ch).unwrap().decision == Decision::Consensusable;
            analytic += usize::from(holds);
            scalar_only += usize::from(s && !holds);
            outside_scalar += usize::from(holds && !s);
        }
    }
    let pass = mismatches == 0 && outside_scalar == 0 && scalar_only > 0 && analytic > 0;
    (
        pass,
        format!(
            "99x99 interior grid, analytic region {analytic} points with {mismatches} mismatches vs q>25/32, p<7/32; {outside_scalar} analytic points outside the scalar region, {scalar_only} scalar-only points"
        ),
    )
}

fn identical_experiment() -> Outcome {
    let t = Instant::now();
    let model = example_model();
    let topo = diamond();
    let spec = topo.spectrum().unwrap();
    let ch = TwoStateChannel::new(0.2, 0.7).unwrap();
    let lmi = criteria::markov_identical_synthesis_lmi(&model, &spec, &ch, &LmiOptions::default()).unwrap();
    let a = lmi.decision == Decision::SufficientHolds;
    let printed = gain(2, 3, &IDENTICAL_K);
    let fixed = criteria::markov_identical_fixed_gain(&model, &spec, &ch, &printed).unwrap();
    let radii = fixed.certificate.as_ref().unwrap().radii.clone();
    let b = radii.iter().all(|&r| r < 1.0);
    let run = |k: &GainMatrix| {
        let mut sc = SimScenario::new(model.clone(), topo.clone(), ChannelModel::Markov2(ch), k.clone());
        sc.seed = 1;
        sim::simulate(&sc).unwrap().decay_ratio
    };
    let lmi_decay = lmi.gain().map(run).unwrap_or(f64::NAN);
    let printed_decay = run(&printed);
    let c = lmi_decay < 1e-3 || printed_decay < 1e-3;
    let secs = t.elapsed().as_secs_f64();
    (
        a && b && c && secs < 30.0,
        format!(
            "(a) LMI {:?}; (b) printed gain max radius {:.6} < 1; (c) decay at t=100 over 1000 runs: LMI gain {lmi_decay:.3e}, printed gain {printed_decay:.3e} (need one < 1e-3); {secs:.1}s < 30s",
            lmi.decision,
            radii.iter().copied().fold(0.0, f64::max)
        ),
    )
}

fn nonidentical_experiment() -> Outcome {
    let t = Instant::now();
    let model = example_model();
    let topo = diamond();
    let decomp = topo.edge_decomposition(&Orientation::AsListed, &TreeRule::Bfs).unwrap();
    let ec = example_edge_channel();
    let printed = gain(2, 3, &NONIDENTICAL_K);
    let fixed = criteria::nonidentical_analysis(&model, &decomp, &ec, &printed).unwrap();
    let radius = fixed.certificate.as_ref().unwrap().radii[0];
    let a = fixed.decision == Decision::Consensusable;
    let syn = criteria::nonidentical_kappa_synthesis(&model, &decomp, &ec).unwrap();
    let b = syn.decision == Decision::SufficientHolds;
    let run = |k: &GainMatrix| {
        let mut sc = SimScenario::new(model.clone(), topo.clone(), ChannelModel::MarkovEdge(ec.clone()), k.clone());
        sc.seed = 1;
        sim::simulate_edge(&sc, &decomp).unwrap().decay_ratio
    };
    let syn_decay = syn.gain().map(run).unwrap_or(f64::NAN);
    let printed_decay = run(&printed);
    let c = syn_decay < 1e-3;
    let secs = t.elapsed().as_secs_f64();
    let cert = syn.certificate.as_ref().unwrap();
    (
        a && b && c && secs < 60.0,
        format!(
            "(a) printed gain radius {radius:.6} < 1; (b) kappa synthesis {:?} (kappa {:.4}, gamma {:.4} > gamma_c {:.4}); (c) edge-form decay at t=100 over 1000 runs with the synthesized gain {syn_decay:.3e} < 1e-3 (printed gain, for reference: {printed_decay:.3e}); {secs:.1}s < 60s",
            syn.decision,
            cert.kappa.unwrap_or(f64::NAN),
            cert.values.get("gamma_kappa").copied().unwrap_or(f64::NAN),
            cert.values.get("gamma_c").copied().unwrap_or(f64::NAN),
        ),
    )
}

/// `A = V diag(λ) V⁻¹` with λ in [1, 3], distinct, and `V` well conditioned.
fn model_with_eigenvalues(rng: &mut SimRng, n: usize, m: usize) -> AgentModel {
    loop {
        let mut lambdas: Vec<f64> = (0..n).map(|_| rng.uniform_in(1.0, 3.0)).collect();
        lambdas.sort_by(f64::total_cmp);
        if lambdas.windows(2).any(|w| w[1] - w[0] < 0.05) {
            continue;
        }
        let v = uniform_matrix(rng, n, n, -1.0, 1.0) + Matrix::identity(n, n);
        let sv = v.singular_values();
        if sv.min() < 0.05 * sv.max() {
            continue;
        }
        let a = &v * Matrix::from_diagonal(&nalgebra::DVector::from_vec(lambdas)) * v.clone().try_inverse().unwrap();
        let b = uniform_matrix(rng, n, m, -1.0, 1.0);
        let bs = b.singular_values();
        if bs.min() < 0.05 * bs.max() {
            continue;
        }
        if let Ok(model) = AgentModel::new(a, b) {
            return model;
        }
    }
}

fn gamma_c_oracle() -> Outcome {
    let mut rng = SimRng::new(5);
    let mut models = Vec::new();
    for k in 0..20 {
        let n = 1 + k % 3;
        let m = if k < 10 { 1 } else { n };
        models.push(model_with_eigenvalues(&mut rng, n, m));
    }
    let diffs: Vec<(f64, f64, f64)> = models
        .par_iter()
        .map(|model| {
            let closed = riccati::gamma_c(model).unwrap();
            let bis = riccati::gamma_c_bisection(model, GAMMA_C_BRACKET).unwrap();
            (closed.gamma_c, bis.gamma_c, (closed.gamma_c - bis.gamma_c).abs())
        })
        .collect();
    let worst = diffs.iter().map(|d| d.2).fold(0.0, f64::max);
    let methods_ok = models.iter().enumerate().all(|(k, model)| {
        let method = riccati::gamma_c(model).unwrap().method;
        if k < 10 {
            method == riccati::GammaCMethod::RankOneClosedForm
        } else {
            method != riccati::GammaCMethod::Bisection
        }
    });
    let range = diffs.iter().fold((f64::INFINITY, 0.0f64), |acc, d| (acc.0.min(d.0), acc.1.max(d.0)));
    (
        worst <= 2e-4 && methods_ok,
        format!(
            "10 rank-one and 10 invertible-B models, gamma_c in [{:.4}, {:.4}], worst |closed - bisection| = {worst:.2e} <= 2e-4",
            range.0, range.1
        ),
    )
}

/// Per-step growth rate of log‖δ(t)‖ along one long sample path.
fn lyapunov_exponent(model: &AgentModel, topo: &Topology, channel: &ChannelModel, k: &GainMatrix, seed: u64) -> f64 {
    const STEPS: usize = 4000;
    const CHUNK: usize = 50;
    let mut sc = SimScenario::new(model.clone(), topo.clone(), channel.clone(), k.clone());
    sc.horizon = STEPS;
    sc.seed = seed;
    let path = sc.loss_path(0).unwrap();
    let mut x = sc.initial_states(0);
    let mut log_growth = 0.0;
    for states in path.states.chunks(CHUNK) {
        let traj = sim::vertex_path(model, topo, channel, k, &x, states);
        let (start, end) = (traj[0].norm(), traj[traj.len() - 1].norm());
        if end == 0.0 || start == 0.0 {
            return f64::NEG_INFINITY;
        }
        log_growth += (end / start).ln();
        x = &traj[traj.len() - 1] / end;
    }
    log_growth / STEPS as f64
}

struct McCase {
    label: String,
    radius: f64,
    ratio_200: f64,
    min_ratio: f64,
}

fn radius_vs_monte_carlo() -> Outcome {
    const HORIZON: usize = 400;
    let mut rng = SimRng::new(6);
    let (mut stable, mut unstable) = (Vec::new(), Vec::new());
    let mut drawn = 0;
    let mut rare_event_unstable = 0;
    while (stable.len() < 10 || unstable.len() < 10) && drawn < 200_000 {
        drawn += 1;
        let n = 1 + (rng.uniform() * 2.0) as usize;
        let m = 1 + (rng.uniform() * n as f64) as usize;
        let na = 2 + (rng.uniform() * 3.0) as usize;
        let model = model(&mut rng, n, m, 1.3);
        let topo = connected_graph(&mut rng, na, 0.4);
        let k = GainMatrix::new(uniform_matrix(&mut rng, m, n, -1.0, 1.0)).unwrap();
        let (channel, radius) = if drawn % 2 == 0 {
            let ch = two_state(&mut rng, 0.05, 0.95);
            let r = mjls::ms_stable_identical(&model, &k, &topo.spectrum().unwrap(), &ch).unwrap();
            (ChannelModel::Markov2(ch), r.worst_radius)
        } else {
            let o = 2 + usize::from(topo.n_edges() > 1 && rng.uniform() < 0.5);
            let ec = edge_channel(&mut rng, topo.n_edges(), o);
            let d = topo.edge_decomposition(&Orientation::default(), &TreeRule::Bfs).unwrap();
            let r = mjls::ms_stable_edge(&model, &k, &d, &ec).unwrap();
            (ChannelModel::MarkovEdge(ec), r.worst_radius)
        };
        let bucket = if radius < 0.97 && stable.len() < 10 {
            &mut stable
        } else if radius > 1.05 && unstable.len() < 10 {
            if lyapunov_exponent(&model, &topo, &channel, &k, drawn as u64) <= 0.01 {
                rare_event_unstable += 1;
                continue;
            }
            &mut unstable
        } else {
            continue;
        };
        let label = format!(
            "n={n} m={m} N={na} {} rho={radius:.4}",
            if channel.is_identical() { "markov2" } else { "markov-edge" }
        );
        let mut sc = SimScenario::new(model, topo, channel, k);
        sc.horizon = HORIZON;
        sc.runs = 500;
        sc.seed = drawn as u64;
        bucket.push((label, radius, sc));
    }
    let run = |(label, radius, sc): &(String, f64, SimScenario)| {
        let res = sim::simulate(sc).unwrap();
        let m0 = res.mse_total[0];
        McCase {
            label: label.clone(),
            radius: *radius,
            ratio_200: res.mse_total[200] / m0,
            min_ratio: res.mse_total.iter().map(|v| v / m0).fold(f64::INFINITY, f64::min),
        }
    };
    let stable: Vec<McCase> = stable.par_iter().map(run).collect();
    let unstable: Vec<McCase> = unstable.par_iter().map(run).collect();
    let mut bad = Vec::new();
    for c in &stable {
        if !(c.ratio_200 < 1e-2 && c.min_ratio < 1e-3) {
            bad.push(format!("{} ratio(200)={:.3e} min={:.3e}", c.label, c.ratio_200, c.min_ratio));
        }
    }
    for c in &unstable {
        if !(c.ratio_200 >= 10.0) {
            bad.push(format!("{} ratio(200)={:.3e}", c.label, c.ratio_200));
        }
    }
    let worst_stable = stable.iter().map(|c| c.ratio_200).fold(0.0, f64::max);
    let weakest_unstable = unstable.iter().map(|c| c.ratio_200).fold(f64::INFINITY, f64::min);
    let full = stable.len() == 10 && unstable.len() == 10;
    let rho = |cs: &[McCase]| cs.iter().fold((f64::INFINITY, 0.0f64), |a, c| (a.0.min(c.radius), a.1.max(c.radius)));
    let (rs, ru) = (rho(&stable), rho(&unstable));
    (
        full && bad.is_empty(),
        format!(
            "{} stable (rho {:.3}..{:.3}) and {} unstable (rho {:.3}..{:.3}) instances, 500 runs each; worst stable ratio(200) {worst_stable:.2e} < 1e-2 and each below 1e-3 within {HORIZON} steps; weakest unstable ratio(200) {weakest_unstable:.2e} >= 10; {rare_event_unstable} mean-square unstable draws with non-positive typical growth skipped{}",
            stable.len(),
            rs.0,
            rs.1,
            unstable.len(),
            ru.0,
            ru.1,
            if bad.is_empty() { String::new() } else { format!("; disagreements: {}", bad.join(" | ")) }
        ),
    )
}

#[derive(Default)]
struct ChainStats {
    analytic: usize,
    lmi: usize,
    stable_gain: usize,
    scalar_yes: usize,
    violations: Vec<String>,
}

fn chain_instance(seed: u64) -> ChainStats {
    let mut rng = SimRng::new(seed);
    let scalar = seed % 2 == 0;
    let na = 3 + (rng.uniform() * 2.0) as usize;
    let topo = connected_graph(&mut rng, na, 0.5);
    let spec = topo.spectrum().unwrap();
    let model = if scalar {
        AgentModel::scalar(rng.uniform_in(1.0, 2.5)).unwrap()
    } else {
        let m = 1 + (rng.uniform() * 2.0) as usize;
        model(&mut rng, 2, m, 1.5)
    };
    let ch = two_state(&mut rng, 0.02, 0.98);
    let gc = riccati::gamma_c(&model).unwrap();
    let an = criteria::markov_identical_analytic_with(&model, &spec, &ch, &gc).unwrap();
    let lmi = criteria::markov_identical_synthesis_lmi(&model, &spec, &ch, &LmiOptions::default()).unwrap();
    let mut st = ChainStats::default();
    let tag = format!("seed {seed} (n={}, m={}, p={:.3}, q={:.3})", model.n(), model.m(), ch.p, ch.q);
    let holds = |v: &Verdict| v.decision == Decision::SufficientHolds;
    if holds(&an) {
        st.analytic += 1;
        if !holds(&lmi) {
            st.violations.push(format!("{tag}: analytic holds but LMI {:?}", lmi.decision));
        }
    }
    let mut gains: Vec<GainMatrix> = Vec::new();
    if holds(&lmi) {
        st.lmi += 1;
        let k = lmi.gain().unwrap().clone();
        let v = criteria::markov_identical_fixed_gain(&model, &spec, &ch, &k).unwrap();
        if v.decision != Decision::Consensusable {
            st.violations.push(format!("{tag}: LMI gain fails the radius test"));
        }
        gains.push(k);
    }
    if let Some(k) = an.gain() {
        gains.push(k.clone());
    }
    let scalar_v = scalar.then(|| criteria::scalar_iff_model(&model, &spec, &ch).unwrap());
    if let Some(sv) = &scalar_v {
        if sv.decision == Decision::Consensusable {
            st.scalar_yes += 1;
            gains.push(sv.gain().unwrap().clone());
        } else if holds(&lmi) || holds(&an) {
            st.violations.push(format!("{tag}: a sufficient condition holds but the scalar test says no"));
        }
    }
    for k in &gains {
        let v = criteria::markov_identical_fixed_gain(&model, &spec, &ch, k).unwrap();
        if v.decision != Decision::Consensusable {
            continue;
        }
        st.stable_gain = 1;
        let nec = criteria::markov_identical_necessary(&model, &spec, &ch, Some(k)).unwrap();
        if nec.decision == Decision::NecessaryFails {
            let failed: Vec<&str> = nec.checks.iter().filter(|c| !c.holds).map(|c| c.label.as_str()).collect();
            st.violations.push(format!("{tag}: stable gain exists but necessary check fails: {failed:?}"));
        }
    }
    st
}

fn implication_chain() -> Outcome {
    let stats: Vec<ChainStats> = (0..200u64).into_par_iter().map(|i| chain_instance(7000 + i)).collect();
    let sum = |f: fn(&ChainStats) -> usize| stats.iter().map(f).sum::<usize>();
    let violations: Vec<String> = stats.iter().flat_map(|s| s.violations.clone()).collect();
    (
        violations.is_empty(),
        format!(
            "200 instances (100 scalar, 100 with n=2), analytic holds {}, LMI holds {}, stable gain found {}, scalar consensusable {}; {} violations{}",
            sum(|s| s.analytic),
            sum(|s| s.lmi),
            sum(|s| s.stable_gain),
            sum(|s| s.scalar_yes),
            violations.len(),
            if violations.is_empty() { String::new() } else { format!(": {}", violations.join(" | ")) }
        ),
    )
}

/// Existence of a stabilizing scalar gain from the 2x2 second-moment
/// operator: with b = a + λk, the mode is stable iff α > 0, β > 0 and
/// αβ > q a² p b², where α = 1 − (1−q)a², β = 1 − (1−p)b². The best k
/// makes max_λ b² = a²θ.
fn lp_oracle(a: f64, theta: f64, p: f64, q: f64) -> (bool, f64) {
    let a2 = a * a;
    let b2 = a2 * theta;
    let alpha = 1.0 - (1.0 - q) * a2;
    let beta = 1.0 - (1.0 - p) * b2;
    let slack = (alpha * beta - q * a2 * p * b2).min(alpha).min(beta);
    (slack > 0.0, slack)
}

fn scalar_tightness() -> Outcome {
    let mut rng = SimRng::new(8);
    let (mut mismatches, mut radius_mismatches, mut checked, mut inside) = (0, 0, 0, 0);
    let mut triples = Vec::new();
    for _ in 0..5 {
        let a = rng.uniform_in(1.0, 2.5);
        let l2 = rng.uniform_in(0.5, 3.0);
        let ln = l2 * rng.uniform_in(1.0, 2.5);
        triples.push(format!("({a:.3}, {l2:.3}, {ln:.3})"));
        let spec = spectrum(l2, ln);
        let model = AgentModel::scalar(a).unwrap();
        for i in 0..50 {
            for j in 0..50 {
                let (p, q) = ((i as f64 + 0.5) / 50.0, (j as f64 + 0.5) / 50.0);
                let ch = TwoStateChannel::new(p, q).unwrap();
                let v = criteria::scalar_iff(a, &spec, &ch).unwrap();
                let (oracle, slack) = lp_oracle(a, spec.theta(), p, q);
                if slack.abs() < 1e-9 || v.boundary {
                    continue;
                }
                checked += 1;
                let yes = v.decision == Decision::Consensusable;
                inside += usize::from(yes);
                mismatches += usize::from(yes != oracle);
                // The minimax gain is stabilizing iff any gain is.
                let k = GainMatrix::scalar(-2.0 * a / (l2 + ln));
                let r = mjls::ms_stable_identical(&model, &k, &spec, &ch).unwrap().worst_radius;
                if (r - 1.0).abs() > 1e-9 && (r < 1.0) != yes {
                    radius_mismatches += 1;
                }
            }
        }
    }
    (
        mismatches == 0 && radius_mismatches == 0 && inside > 0 && inside < checked,
        format!(
            "5 triples (a, l2, lN) {}, {checked} grid points off the boundary, {inside} consensusable; {mismatches} mismatches vs the second-moment oracle, {radius_mismatches} vs the radius at the minimax gain",
            triples.join(" ")
        ),
    )
}

fn edge_vertex_equivalence() -> Outcome {
    let mut rng = SimRng::new(9);
    let mut worst = 0.0f64;
    let mut kinds = Vec::new();
    for s in 0..10 {
        let n = 1 + (rng.uniform() * 3.0) as usize;
        let m = 1 + (rng.uniform() * n as f64) as usize;
        let na = 3 + (rng.uniform() * 4.0) as usize;
        let model = model(&mut rng, n, m, 1.2);
        let topo = connected_graph(&mut rng, na, 0.4);
        let channel = match s % 3 {
            0 => ChannelModel::Markov2(two_state(&mut rng, 0.05, 0.95)),
            1 => ChannelModel::Iid(IidChannel::bernoulli(rng.uniform_in(0.05, 0.6)).unwrap()),
            _ => ChannelModel::MarkovEdge(edge_channel(&mut rng, topo.n_edges(), 3.min(1 << topo.n_edges()))),
        };
        let orientation = if s % 2 == 0 { Orientation::AsListed } else { Orientation::LowerIndexFirst };
        let decomp = topo.edge_decomposition(&orientation, &TreeRule::Bfs).unwrap();
        let k = GainMatrix::new(uniform_matrix(&mut rng, m, n, -0.5, 0.5)).unwrap();
        let mut sc = SimScenario::new(model.clone(), topo.clone(), channel.clone(), k.clone());
        sc.horizon = 60;
        sc.seed = 100 + s;
        let x0 = sc.initial_states(0);
        let path = sc.loss_path(0).unwrap();
        let deltas = sim::vertex_path(&model, &topo, &channel, &k, &x0, &path.states);
        let zs = sim::edge_path(&model, &decomp, &channel, &k, &x0, &path.states).unwrap();
        let project = linalg::kron(&decomp.e_tau.transpose(), &Matrix::identity(n, n));
        for (d, z) in deltas.iter().zip(&zs) {
            let from_vertex = &project * d;
            let scale = z.norm_squared().max(1.0);
            worst = worst.max((&from_vertex - z).norm() / scale.sqrt());
            worst = worst.max((from_vertex.norm_squared() - z.norm_squared()).abs() / scale);
        }
        kinds.push(format!("{}x{}/{}", na, n, if channel.is_identical() { "id" } else { "edge" }));
    }
    (
        worst <= 1e-9,
        format!(
            "10 scenarios [{}], 61 steps each; worst relative gap between (E_tau' x I) delta(t) and z_tau(t) {worst:.2e} <= 1e-9",
            kinds.join(" ")
        ),
    )
}
