use std::f64::consts::PI;
use std::io::{self, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use chiralflow::criteria::{check_criteria, CriteriaReport};
use chiralflow::dynamics::{default_grid, eigendecompose, evolve, time_grid, Trajectory};
use chiralflow::experiments::bell::{peak_order, PAIRS};
use chiralflow::experiments::{
    bell_transport, disorder_sweep, ladder_fidelity_curve, optimize_ladder, BellInitial, DisorderConfig, ProfileChoice,
};
use chiralflow::experiments::ladder::{free_parameters, ladder_revival};
use chiralflow::floquet::{coupler_deviation_scan, write_scan_csv};
use chiralflow::format::sig12;
use chiralflow::hilbert::Statistics;
use chiralflow::models::{asgf, ladder, sgf_ring, GaugeChoice, NetworkSpec};
use chiralflow::oracles::*;

use crate::config::{InitialState, ModelConfig, RunConfig, StudyConfig, StudyKind};
use crate::output::{trajectory_svg, write_atomic};
use crate::{Common, Failure};

const ORACLE_TOL: f64 = 1e-9;

struct Loaded {
    cfg: RunConfig,
    /// Whether the model came from the config file or flags rather than the default.
    model_given: bool,
}

fn load(common: &Common) -> Result<Loaded, Failure> {
    let (mut cfg, mut model_given) = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            let cfg = RunConfig::from_json(&text).map_err(Failure::Config)?;
            let has_model = serde_json::from_str::<serde_json::Value>(&text)
                .map(|v| v.get("model").is_some())
                .unwrap_or(false);
            (cfg, has_model)
        }
        None => (RunConfig::default(), false),
    };
    let overrides = common.overrides()?;
    let model = overrides.apply(&cfg.model).map_err(Failure::Config)?;
    model_given |= model != cfg.model || common.model.is_some();
    cfg.model = model;
    if common.spin {
        cfg.statistics = Some(Statistics::Spin);
    }
    if let Some(j) = common.initial {
        cfg.initial = InitialState::Node(j);
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(p) = &common.out {
        cfg.output.csv = Some(p.clone());
    }
    if let Some(p) = &common.svg {
        cfg.output.svg = Some(p.clone());
    }
    if let Some(g) = common.grid {
        cfg.time.points = g;
    }
    if let Some(t) = common.tmax {
        cfg.time.t_max = Some(t);
    }
    if cfg.time.points < 2 {
        return Err(Failure::Config(format!("time grid needs at least 2 points, got {}", cfg.time.points)));
    }
    if let Some(t) = cfg.time.t_max {
        if !(t.is_finite() && t > 0.0) {
            return Err(Failure::Config(format!("tmax must be positive and finite, got {t}")));
        }
    }
    Ok(Loaded { cfg, model_given })
}

fn network(cfg: &RunConfig) -> Result<NetworkSpec, Failure> {
    cfg.network().map_err(|e| Failure::Config(format!("model: {e}")))
}

/// Writes to `path` atomically, or to stdout.
fn emit(path: Option<&Path>, fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    match path {
        Some(p) => write_atomic(p, fill)?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            fill(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn initial_vector(
    cfg: &RunConfig,
    spec: &NetworkSpec,
    basis: &chiralflow::hilbert::SubspaceBasis,
) -> Result<Vec<Complex64>, Failure> {
    match &cfg.initial {
        InitialState::Node(j) => {
            if *j == 0 || *j > spec.n_sites() {
                return Err(Failure::Config(format!("initial node {j} outside 1..={}", spec.n_sites())));
            }
            basis.single_excitation(j - 1).map_err(|e| Failure::Config(format!("initial: {e}")))
        }
        InitialState::Occupation(occ) => {
            if occ.len() != spec.n_sites() {
                return Err(Failure::Config(format!(
                    "initial occupation has {} entries for {} sites",
                    occ.len(),
                    spec.n_sites()
                )));
            }
            basis.basis_vector(occ).map_err(|e| Failure::Config(format!("initial: {e}")))
        }
    }
}

pub fn show_config(common: &Common) -> Result<bool, Failure> {
    let Loaded { cfg, .. } = load(common)?;
    println!("{}", cfg.to_json());
    Ok(true)
}

pub fn simulate(common: &Common) -> Result<bool, Failure> {
    let Loaded { cfg, .. } = load(common)?;
    let spec = network(&cfg)?;
    let (basis, h) = spec
        .hamiltonian(cfg.initial.excitations())
        .map_err(|e| Failure::Config(format!("initial: {e}")))?;
    let psi = initial_vector(&cfg, &spec, &basis)?;
    let t_max = match cfg.time.t_max {
        Some(t) => t,
        None => *default_grid(&eigendecompose(&h)?, 1.0).last().expect("non-empty grid"),
    };
    let traj = evolve(&h, &basis, &psi, &time_grid(t_max, cfg.time.points))?.with_labels_of(&spec);
    emit(cfg.output.csv.as_deref(), |w| traj.write_csv(w))?;
    if let Some(svg) = &cfg.output.svg {
        let title = model_title(&cfg.model);
        write_atomic(svg, |w| w.write_all(trajectory_svg(&traj, &title).as_bytes()))?;
    }
    Ok(true)
}

fn model_title(m: &ModelConfig) -> String {
    match m {
        ModelConfig::Sgf { n, flux, .. } => format!("{n}-node ring, flux {:.4}π", flux.0 / PI),
        ModelConfig::Asgf { n, beta, .. } => format!("{n}-node ring with auxiliary, β = {beta}"),
        ModelConfig::Chiral { n } => format!("{n}-node chiral network"),
        ModelConfig::Ladder { copies, .. } => format!("ladder, {copies} copies"),
        ModelConfig::Custom { .. } => "custom network".into(),
    }
}

pub fn spectrum(common: &Common) -> Result<bool, Failure> {
    let Loaded { cfg, .. } = load(common)?;
    let spec = network(&cfg)?;
    let (_, h) = spec
        .hamiltonian(cfg.initial.excitations())
        .map_err(|e| Failure::Config(format!("initial: {e}")))?;
    let e = eigendecompose(&h)?;
    emit(cfg.output.csv.as_deref(), |w| {
        writeln!(w, "index,energy")?;
        for (i, v) in e.values.iter().enumerate() {
            writeln!(w, "{i},{}", sig12(*v))?;
        }
        Ok(())
    })?;
    Ok(true)
}

fn report_text(r: &CriteriaReport) -> String {
    let mut s = String::new();
    let mut line = |k: &str, v: String| s.push_str(&format!("{k}: {v}\n"));
    line("verdict", r.verdict.to_string());
    line("spectrum_symmetric", r.spectrum_symmetric.to_string());
    line("max_asymmetry", sig12(r.max_asymmetry));
    line("equally_spaced", r.equally_spaced.to_string());
    line("max_spacing_deviation", sig12(r.max_spacing_deviation));
    line("degenerate", r.degenerate.to_string());
    line("chiral_modes_complete", r.chiral_modes_complete.to_string());
    line("unexplained_ring_weight", sig12(r.unexplained_ring_weight));
    line("lock_time", r.lock_time.map_or("none".into(), sig12));
    line("windings", format!("{:?}", r.windings()));
    s.push_str("modes:\n");
    for m in &r.modes {
        s.push_str(&format!(
            "  - energy: {}, winding: {}, uniform_modulus: {}\n",
            sig12(m.energy),
            m.winding,
            m.uniform_modulus
        ));
    }
    s
}

pub fn criteria(common: &Common) -> Result<bool, Failure> {
    let Loaded { cfg, .. } = load(common)?;
    let spec = network(&cfg)?;
    let report = check_criteria(&spec.single_particle(), &spec.ring_nodes(), 1e-9)?;
    print!("{}", report_text(&report));
    if let Some(p) = &cfg.output.csv {
        let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.to_string()))?;
        write_atomic(p, |w| writeln!(w, "{json}"))?;
    }
    Ok(report.verdict)
}

/// One full cycle of the model's flow when it has one, otherwise π.
fn flow_window(spec: &NetworkSpec) -> Result<f64, Failure> {
    let r = check_criteria(&spec.single_particle(), &spec.ring_nodes(), 1e-9)?;
    Ok(r.lock_time.map_or(PI, |t| t * spec.n_network() as f64))
}

pub fn study(common: &Common, kind: StudyKind) -> Result<bool, Failure> {
    let Loaded { cfg, model_given } = load(common)?;
    let study = match &cfg.study {
        Some(s) if s.kind() == kind => s.clone(),
        _ => StudyConfig::defaults(kind),
    };
    let out = cfg.output.csv.as_deref();
    match study {
        StudyConfig::Disorder { samples, amplitudes, kinds } => {
            let base = if model_given { network(&cfg)? } else { asgf(4, 2.0, PI / 2.0)? };
            let window = flow_window(&base)?;
            let mut rows = Vec::new();
            for k in kinds {
                let mut dc = DisorderConfig::new(k, samples, cfg.seed);
                dc.window = window;
                if let Some(g) = common.grid {
                    dc.grid = g;
                }
                for p in disorder_sweep(&base, &dc, &amplitudes)? {
                    rows.push((k, dc.absolute(p.amplitude), p));
                }
            }
            emit(out, |w| {
                writeln!(w, "kind,amplitude,width,mean,std_error")?;
                for (k, width, p) in &rows {
                    let name = serde_json::to_value(k).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                    writeln!(w, "{name},{},{},{},{}", sig12(p.amplitude), sig12(*width), sig12(p.mean), sig12(p.std_error))?;
                }
                Ok(())
            })?;
        }
        StudyConfig::Ladder { copies } => {
            let copies = common.n.map_or(copies, |n| (1..=n).collect());
            let beta = match &cfg.model {
                ModelConfig::Ladder { profile, .. } if model_given && profile.len() == 1 => profile[0],
                _ => 2.0,
            };
            let beta = common.beta.unwrap_or(beta);
            let points = ladder_fidelity_curve(&copies, &ProfileChoice::Uniform(beta))?;
            emit(out, |w| {
                writeln!(w, "copies,beta,period,fidelity")?;
                for p in &points {
                    writeln!(w, "{},{},{},{}", p.copies, sig12(beta), sig12(p.period), sig12(p.fidelity))?;
                }
                Ok(())
            })?;
        }
        StudyConfig::Optimize { copies, budget_per_parameter } => {
            let copies = common.n.map_or(copies, |n| (2..=n).collect());
            if budget_per_parameter < 50 {
                return Err(Failure::Config(format!("budget_per_parameter {budget_per_parameter} below 50")));
            }
            let rows = copies
                .par_iter()
                .map(|&n| {
                    let uniform = ladder_revival(n, &[2.0])?.fidelity;
                    let o = optimize_ladder(n, budget_per_parameter * free_parameters(n).max(1), cfg.seed)?;
                    Ok((n, uniform, o))
                })
                .collect::<chiralflow::Result<Vec<_>>>()?;
            emit(out, |w| {
                writeln!(w, "copies,uniform_fidelity,optimized_fidelity,evaluations,monotone,budget_exhausted,profile")?;
                for (n, u, o) in &rows {
                    let profile: Vec<String> = o.profile.iter().map(|b| sig12(*b)).collect();
                    writeln!(
                        w,
                        "{n},{},{},{},{},{},{}",
                        sig12(*u),
                        sig12(o.fidelity),
                        o.iterations,
                        o.monotone,
                        o.budget_exhausted,
                        profile.join(";")
                    )?;
                }
                Ok(())
            })?;
        }
        StudyConfig::Bell { t_max, points } => {
            let model = if model_given {
                network(&cfg)?
            } else {
                sgf_ring(3, 1.5 * PI, GaugeChoice::Symmetric)?
            }
            .with_statistics(Statistics::Spin);
            let times = time_grid(common.tmax.unwrap_or(t_max), common.grid.unwrap_or(points));
            let runs = [BellInitial::PsiPlus, BellInitial::PhiPlus]
                .into_iter()
                .map(|b| bell_transport(&model, b, &times).map(|r| (b, r)))
                .collect::<chiralflow::Result<Vec<_>>>()?;
            let pair_name = |p: usize| format!("{}{}", PAIRS[p].0 + 1, PAIRS[p].1 + 1);
            for (b, r) in &runs {
                let order: Vec<String> = peak_order(r.carried(*b)).into_iter().map(pair_name).collect();
                eprintln!("{b:?} peak order: {}", order.join(" -> "));
            }
            emit(out, |w| {
                writeln!(w, "initial,t,pair,psi_plus,phi_plus,concurrence")?;
                for (b, r) in &runs {
                    let name = match b {
                        BellInitial::PsiPlus => "psi_plus",
                        BellInitial::PhiPlus => "phi_plus",
                    };
                    for (i, t) in r.times.iter().enumerate() {
                        for p in 0..PAIRS.len() {
                            writeln!(
                                w,
                                "{name},{},{},{},{},{}",
                                sig12(*t),
                                pair_name(p),
                                sig12(r.psi_plus[p][i]),
                                sig12(r.phi_plus[p][i]),
                                sig12(r.concurrence[p][i])
                            )?;
                        }
                    }
                }
                Ok(())
            })?;
        }
        StudyConfig::Floquet { ratios } => {
            if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                return Err(Failure::Config("floquet ratios must be positive".into()));
            }
            let scan = coupler_deviation_scan(&ratios)?;
            emit(out, |w| write_scan_csv(&scan, w))?;
        }
    }
    Ok(true)
}

fn max_error(traj: &Trajectory, nodes: usize, oracle: impl Fn(usize, f64) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for (t, row) in traj.times.iter().zip(&traj.populations) {
        for (j, p) in row.iter().enumerate().take(nodes) {
            worst = worst.max((p - oracle(j, *t)).abs());
        }
    }
    worst
}

fn run_from_first(spec: &NetworkSpec, t_max: f64, points: usize) -> chiralflow::Result<Trajectory> {
    let (basis, h) = spec.hamiltonian(1)?;
    evolve(&h, &basis, &basis.single_excitation(0)?, &time_grid(t_max, points))
}

pub fn oracle_check(common: &Common) -> Result<bool, Failure> {
    let Loaded { cfg, .. } = load(common)?;
    let points = common.grid.unwrap_or(1001).max(2);
    let ring = |n: usize, flux: f64| sgf_ring(n, flux, GaugeChoice::Symmetric);
    let mut rows: Vec<(String, f64)> = Vec::new();
    let tr = run_from_first(&ring(3, PI / 2.0)?, 10.0, points)?;
    rows.push(("ring3".into(), max_error(&tr, 3, |j, t| three_node_sgf_population(j + 1, t))));
    for (label, theta) in [("pi/4", PI / 4.0), ("pi/2", PI / 2.0), ("3pi/8", 3.0 * PI / 8.0)] {
        let tr = run_from_first(&ring(4, 4.0 * theta)?, 12.0, points)?;
        rows.push((format!("ring4_link_{label}"), max_error(&tr, 4, |j, t| four_node_sgf_populations(theta, t)[j])));
    }
    for beta in [1.0, 2.0, 3.0] {
        let tr = run_from_first(&asgf(4, beta, PI / 2.0)?, 4.0 * PI, points)?;
        rows.push((format!("aux4_beta_{beta}"), max_error(&tr, 4, |j, t| four_node_asgf_amplitude(j + 1, beta, t).powi(2))));
    }
    for (label, beta) in [("sqrt2", 2f64.sqrt()), ("2", 2.0), ("3", 3.0)] {
        let tr = run_from_first(&asgf(6, beta, PI / 2.0)?, 20.0, points)?;
        rows.push((format!("aux6_beta_{label}"), max_error(&tr, 6, |j, t| six_node_asgf_populations(beta, t)[j])));
    }
    for n in 3..=8 {
        let tr = run_from_first(&ring(n, n as f64 * PI / 2.0)?, 15.0, points)?;
        rows.push((format!("ring{n}_half_pi"), max_error(&tr, n, |j, t| n_node_sgf_amplitude(n, j + 1, t).powi(2))));
    }
    let tr = run_from_first(&ladder(3, &[2.0])?, 20.0, points)?;
    rows.push(("ladder3_return".into(), max_error(&tr, 1, |_, t| ladder_return_population(t))));
    let ok = rows.iter().all(|(_, e)| *e <= ORACLE_TOL);
    emit(cfg.output.csv.as_deref(), |w| {
        writeln!(w, "case,max_error,pass")?;
        for (name, e) in &rows {
            writeln!(w, "{name},{},{}", sig12(*e), *e <= ORACLE_TOL)?;
        }
        Ok(())
    })?;
    Ok(ok)
}
