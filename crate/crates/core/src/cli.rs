//! Command-line runner: one subcommand per experiment, configured by a TOML
//! file (see [`crate::config`]).
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 configuration
//! error, 3 divergence, 4 statistics refused, 5 any other failure.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, SAMPLE_STREAM, SECOND_START_STREAM};
use crate::coupling::{fp_experiment, n_sweep, shell_boundaries};
use crate::ergodic::{
    ergodic_report, even_windows, mode_activation, required_modes, strong_mixing_probe, two_start_comparison,
};
use crate::error::{Error, Result};
use crate::noise::{lipschitz_check, right_inverse_check, z0_conditions, NoiseModel, NoiseOperator};
use crate::nonlin::{advect, advect_oracle, AdvectionWorkspace, ORACLE_MAX_CUTOFF};
use crate::sde::{energy_balance, simulate, simulate_stokes, SimConfig, TrajectoryRecord, CFL_LIMIT};
use crate::snapshot::write_snapshot;
use crate::spectral::{Space, VorticityField};

/// Relative error accepted by the `oracle` check.
pub const ORACLE_TOLERANCE: f64 = 1e-12;
/// Residual accepted by the right-inverse check of `validate-noise`.
pub const RIGHT_INVERSE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "sns-torus", version, about = "Stochastic 2D Navier-Stokes experiments on the torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML run configuration
    #[arg(long)]
    pub config: PathBuf,
    /// output directory (overrides `out` in the config)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// root seed (overrides `seed` in the config)
    #[arg(long)]
    pub seed: Option<u64>,
    /// replica count for ensemble experiments
    #[arg(long)]
    pub replicas: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Navier-Stokes trajectory (and optional energy balance ensemble)
    Simulate(RunArgs),
    /// exact linear stochastic Stokes trajectory
    Stokes(RunArgs),
    /// nudged coupling and synchronization statistics
    Couple(RunArgs),
    /// time averages, two-start comparison and mixing probe
    Ergodic(RunArgs),
    /// spread of degenerate noise to unforced modes
    Activation(RunArgs),
    /// constants and sampled checks of the noise model
    ValidateNoise(RunArgs),
    /// transform-based advection against the direct sum
    Oracle(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Stokes(_) => "stokes",
            Command::Couple(_) => "couple",
            Command::Ergodic(_) => "ergodic",
            Command::Activation(_) => "activation",
            Command::ValidateNoise(_) => "validate-noise",
            Command::Oracle(_) => "oracle",
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Simulate(a)
            | Command::Stokes(a)
            | Command::Couple(a)
            | Command::Ergodic(a)
            | Command::Activation(a)
            | Command::ValidateNoise(a)
            | Command::Oracle(a) => a,
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Divergence { .. } => 3,
        Error::Statistics(_) => 4,
        _ => 5,
    }
}

/// Collects output files under one directory.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<fs::File>) -> Result<()>,
    {
        let mut w = BufWriter::new(fs::File::create(self.dir.join(name))?);
        body(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
        self.write(name, |w| Ok(writeln!(w, "{text}")?))
    }
}

/// Everything resolved from the config before any output is created.
enum Plan {
    Simulate { cfg: SimConfig, balance: Option<usize> },
    Stokes { cfg: SimConfig },
    Couple { cfg: SimConfig, v0: VorticityField, cc: crate::coupling::CouplingConfig, sweep: Option<Vec<usize>> },
    Ergodic { cfg: SimConfig, rc: RunConfig, second: Option<VorticityField>, replicas: Option<usize> },
    Activation { cfg: SimConfig, burn_in: f64 },
    ValidateNoise { cfg: SimConfig, samples: usize, amplitude: f64 },
    Oracle { cfg: SimConfig, pairs: usize },
}

fn plan(command: &Command, rc: &RunConfig, base: &Path) -> Result<Plan> {
    let args = command.args();
    let cfg = rc.sim_config(base)?;
    let check_replicas = |n: usize| -> Result<usize> {
        if n == 0 {
            Err(Error::Config("replicas must be positive".into()))
        } else {
            Ok(n)
        }
    };
    Ok(match command {
        Command::Simulate(_) => {
            let balance = match (&rc.balance, args.replicas) {
                (Some(_), Some(r)) => Some(check_replicas(r)?),
                (Some(b), None) => Some(check_replicas(b.replicas)?),
                (None, _) => None,
            };
            Plan::Simulate { cfg, balance }
        }
        Command::Stokes(_) => {
            if !cfg.noise.is_additive() {
                return Err(Error::Config("noise: the stokes experiment needs an additive model".into()));
            }
            Plan::Stokes { cfg }
        }
        Command::Couple(_) => {
            let (mut cc, section) = rc.coupling_config()?;
            if let Some(r) = args.replicas {
                cc.replicas = r;
            }
            if cc.n > cfg.grid.len() {
                return Err(Error::Config(format!("coupling.n = {} exceeds {} modes", cc.n, cfg.grid.len())));
            }
            if cc.horizon == 0 {
                return Err(Error::Config("coupling.horizon must be positive".into()));
            }
            let per_unit = (1.0 / cfg.dt).round();
            if (per_unit * cfg.dt - 1.0).abs() > 1e-9 {
                return Err(Error::Config("sim.dt: 1/dt must be an integer for the coupling experiment".into()));
            }
            let sweep = match (&section.sweep, section.sweep_shells) {
                (Some(_), Some(_)) => {
                    return Err(Error::Config("coupling: give either `sweep` or `sweep_shells`, not both".into()))
                }
                (Some(ns), None) => Some(ns.clone()),
                (None, Some(s)) => {
                    Some(std::iter::once(0).chain(shell_boundaries(&cfg.grid).into_iter().take(s)).collect())
                }
                (None, None) => None,
            };
            if let Some(n) = sweep.iter().flatten().find(|&&n| n > cfg.grid.len()) {
                return Err(Error::Config(format!("coupling.sweep: N = {n} exceeds {} modes", cfg.grid.len())));
            }
            let v0 = section.v0.build(&cfg.grid, rc.seed, SECOND_START_STREAM, base)?;
            Plan::Couple { cfg, v0, cc, sweep }
        }
        Command::Ergodic(_) => {
            let e = rc.ergodic.as_ref().ok_or_else(|| Error::Config("missing [ergodic] section".into()))?;
            if e.observables.is_empty() {
                return Err(Error::Config("ergodic.observables is empty".into()));
            }
            if !(0.0..1.0).contains(&e.burn_in) {
                return Err(Error::Config("ergodic.burn_in must lie in [0, 1)".into()));
            }
            if e.windows == 0 {
                return Err(Error::Config("ergodic.windows must be positive".into()));
            }
            for k in required_modes(&e.observables).map_err(|err| Error::Config(err.to_string()))? {
                if cfg.grid.index_of(k).is_none() {
                    return Err(Error::Config(format!("ergodic.observables: mode {k} is not on the grid")));
                }
            }
            let second = match &e.second_start {
                Some(spec) => Some(spec.build(&cfg.grid, rc.seed, SECOND_START_STREAM, base)?),
                None => None,
            };
            if let Some(m) = &e.mixing {
                if second.is_none() {
                    return Err(Error::Config("ergodic.mixing needs ergodic.second_start".into()));
                }
                if m.t_grid.windows(2).any(|w| w[1] <= w[0]) || m.t_grid.iter().any(|t| *t < 0.0) {
                    return Err(Error::Config("ergodic.mixing.t_grid must be nonnegative and increasing".into()));
                }
            }
            let replicas = match (&e.mixing, args.replicas) {
                (Some(_), Some(r)) => Some(check_replicas(r)?),
                (Some(m), None) => Some(check_replicas(m.replicas)?),
                _ => None,
            };
            Plan::Ergodic { cfg, rc: rc.clone(), second, replicas }
        }
        Command::Activation(_) => {
            if !matches!(cfg.noise, NoiseModel::AdditiveDegenerate { .. }) {
                return Err(Error::Config("noise: activation needs kind = \"additive-degenerate\"".into()));
            }
            if cfg.initial.norm_sq(Space::H) != 0.0 || cfg.forcing.norm_sq(Space::H) != 0.0 {
                return Err(Error::Config("activation starts from rest: sim.initial and sim.forcing must be zero".into()));
            }
            let burn_in = rc.activation.as_ref().map_or(0.25, |a| a.burn_in);
            if !(0.0..1.0).contains(&burn_in) {
                return Err(Error::Config("activation.burn_in must lie in [0, 1)".into()));
            }
            Plan::Activation { cfg, burn_in }
        }
        Command::ValidateNoise(_) => {
            let (samples, amplitude) = rc.validation.as_ref().map_or((100, 1.0), |v| (v.samples, v.amplitude));
            if samples < 2 {
                return Err(Error::Config("validation.samples must be at least 2".into()));
            }
            Plan::ValidateNoise { cfg, samples, amplitude }
        }
        Command::Oracle(_) => {
            if cfg.grid.cutoff() > ORACLE_MAX_CUTOFF {
                return Err(Error::Config(format!(
                    "sim.cutoff = {} exceeds the oracle limit {ORACLE_MAX_CUTOFF}",
                    cfg.grid.cutoff()
                )));
            }
            let pairs = rc.oracle.as_ref().map_or(50, |o| o.pairs);
            if pairs == 0 {
                return Err(Error::Config("oracle.pairs must be positive".into()));
            }
            Plan::Oracle { cfg, pairs }
        }
    })
}

fn report_cfl(rec: &TrajectoryRecord) {
    if rec.cfl_warnings > 0 {
        eprintln!(
            "warning: advective CFL number above {CFL_LIMIT} at {} of {} samples (max {:.3})",
            rec.cfl_warnings,
            rec.len(),
            rec.max_cfl
        );
    }
}

fn trajectory_summary(cfg: &SimConfig, rec: &TrajectoryRecord) -> serde_json::Value {
    json!({
        "steps": cfg.n_steps(),
        "samples": rec.len(),
        "final_time": rec.times.last(),
        "final_energy": rec.energy.last(),
        "final_enstrophy": rec.enstrophy.last(),
        "max_cfl": rec.max_cfl,
        "cfl_warnings": rec.cfl_warnings,
    })
}

fn write_trajectory(out: &mut Outputs, rec: &TrajectoryRecord) -> Result<()> {
    out.write("trajectory.csv", |w| rec.write_csv(w))?;
    if !rec.snapshots.is_empty() {
        out.write("snapshots.txt", |w| {
            for (t, psi) in &rec.snapshots {
                write_snapshot(&mut *w, psi, *t)?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

/// Runs a planned experiment; returns whether its built-in check passed.
fn execute(plan: Plan, out: &mut Outputs) -> Result<bool> {
    match plan {
        Plan::Simulate { cfg, balance } => {
            let rec = simulate(&cfg)?;
            report_cfl(&rec);
            write_trajectory(out, &rec)?;
            out.json("summary.json", &trajectory_summary(&cfg, &rec))?;
            println!("final energy {:e} after {} steps", rec.energy.last().unwrap_or(&0.0), cfg.n_steps());
            if let Some(replicas) = balance {
                let rep = energy_balance(&cfg, replicas)?;
                out.write("balance.csv", |w| {
                    writeln!(w, "t,mean_energy,dissipation,forcing_work,noise_input,residual,stderr")?;
                    for i in 0..rep.times.len() {
                        writeln!(
                            w,
                            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                            rep.times[i],
                            rep.mean_energy[i],
                            rep.mean_dissipation[i],
                            rep.mean_forcing_work[i],
                            rep.mean_noise_input[i],
                            rep.residual_mean[i],
                            rep.residual_stderr[i]
                        )?;
                    }
                    Ok(())
                })?;
                out.json(
                    "balance.json",
                    &json!({
                        "replicas": rep.replicas,
                        "max_abs_residual": rep.max_abs_residual,
                        "max_z": rep.max_z,
                        "inequality_holds": rep.inequality_holds(),
                    }),
                )?;
                println!("energy balance: max |residual| {:e}, max z {:.3}", rep.max_abs_residual, rep.max_z);
            }
            Ok(true)
        }
        Plan::Stokes { cfg } => {
            let rec = simulate_stokes(&cfg)?;
            write_trajectory(out, &rec)?;
            out.json("summary.json", &trajectory_summary(&cfg, &rec))?;
            if let Some(stats) = &rec.mode_stats {
                let op = cfg.noise_operator()?;
                let mut expected = vec![0.0; cfg.grid.len()];
                for (mode, gain) in op.driven_modes().into_iter().zip(op.column_gains(&cfg.initial)) {
                    expected[mode] = gain * gain / (2.0 * cfg.nu * cfg.grid.eigenvalue_at(mode));
                }
                let var = stats.variance();
                out.write("mode_variance.csv", |w| {
                    writeln!(w, "k1,k2,variance,stationary")?;
                    for (i, k) in cfg.grid.modes().iter().enumerate() {
                        writeln!(w, "{},{},{:e},{:e}", k.k1, k.k2, var[i], expected[i])?;
                    }
                    Ok(())
                })?;
                let worst = var
                    .iter()
                    .zip(&expected)
                    .filter(|(_, e)| **e > 0.0)
                    .map(|(v, e)| (v / e - 1.0).abs())
                    .fold(0.0, f64::max);
                println!("largest relative deviation from the stationary variance: {worst:.4}");
            }
            Ok(true)
        }
        Plan::Couple { cfg, v0, cc, sweep } => {
            if let Some(ns) = sweep {
                let rep = n_sweep(&cfg, &v0, &cc, &ns)?;
                out.write("fp_sweep.csv", |w| rep.write_csv(w))?;
                out.json("fp_sweep.json", &rep)?;
                match rep.threshold {
                    Some(n) => println!("smallest synchronizing N in the sweep: {n}"),
                    None => println!("no swept N synchronized"),
                }
            }
            let rep = fp_experiment(&cfg, &v0, &cc)?;
            out.write("fp_gap.csv", |w| rep.write_csv(w))?;
            out.write("fp_summary.json", |w| Ok(writeln!(w, "{}", rep.to_json()?)?))?;
            match &rep.fit {
                Some(f) => println!("fit {:?}: rate {:.4}, R^2 {:.4}", f.kind, f.rate, f.line.r_squared),
                None => println!("fit: not enough positive gap samples"),
            }
            match rep.m_star {
                Some(m) => println!("m* = {m}, tail fraction {:.3}", rep.tail_fractions[m as usize - 1]),
                None => println!("m*: no tail fraction above 1/2"),
            }
            Ok(true)
        }
        Plan::Ergodic { cfg, rc, second, replicas } => {
            let e = rc.ergodic.as_ref().expect("checked by plan");
            let mut run = cfg.clone();
            for k in required_modes(&e.observables)? {
                if !run.recorded_modes.contains(&k) {
                    run.recorded_modes.push(k);
                }
            }
            let burn_in = e.burn_in * cfg.horizon;
            if run.stats_from.is_none() {
                run.stats_from = Some(burn_in);
            }
            let rec = simulate(&run)?;
            report_cfl(&rec);
            let windows = even_windows(&rec, e.windows);
            let rep = ergodic_report(&run, &rec, &e.observables, &windows, burn_in, e.bins)?;
            out.write("averages.csv", |w| rep.write_averages_csv(w))?;
            out.write("mode_variance.csv", |w| rep.write_mode_csv(w))?;
            out.write("ergodic.json", |w| Ok(writeln!(w, "{}", rep.to_json()?)?))?;
            for o in &rep.observables {
                println!("{}: average {:e}, cauchy gap {:e}", o.running.observable, o.running.averages.last().unwrap_or(&f64::NAN), o.running.cauchy.unwrap_or(f64::NAN));
            }
            if let Some(b) = &second {
                let d = two_start_comparison(&cfg, &cfg.initial, b, &e.observables, burn_in, (0, 1))?;
                out.write("two_start.json", |w| Ok(writeln!(w, "{}", d.to_json()?)?))?;
                println!("two-start KS distance (max over observables) {:.4}", d.max_ks());
                if let (Some(m), Some(r)) = (&e.mixing, replicas) {
                    let probe = strong_mixing_probe(&cfg, &cfg.initial, b, &m.events, &m.t_grid, r)?;
                    out.json("mixing.json", &probe)?;
                    println!("mixing probe: largest final-time gap {:.4}", probe.max_final_gap());
                }
            }
            Ok(true)
        }
        Plan::Activation { cfg, burn_in } => {
            let rep = mode_activation(&cfg, cfg.horizon, burn_in)?;
            out.write("activation.csv", |w| rep.write_csv(w))?;
            out.json(
                "activation.json",
                &json!({
                    "horizon": rep.horizon,
                    "window_start": rep.window_start,
                    "min_unforced_variance": rep.min_unforced_variance,
                    "max_unforced_variance": rep.max_unforced_variance,
                    "min_unforced_variance_norm_sq_le_4": rep.min_unforced_variance_within(4),
                    "forced_lead_at_first_step": rep.forced_lead_at_first_step,
                }),
            )?;
            println!(
                "unforced variance: min {:e}, min over |k|^2 <= 4 {:e}",
                rep.min_unforced_variance,
                rep.min_unforced_variance_within(4)
            );
            Ok(true)
        }
        Plan::ValidateNoise { cfg, samples, amplitude } => validate_noise(&cfg, samples, amplitude, out),
        Plan::Oracle { cfg, pairs } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(SAMPLE_STREAM);
            let mut ws = AdvectionWorkspace::new(&cfg.grid);
            let mut worst: f64 = 0.0;
            for _ in 0..pairs {
                let a = VorticityField::random(&cfg.grid, &mut rng, 1.0, 0.0);
                let b = VorticityField::random(&cfg.grid, &mut rng, 1.0, 0.0);
                let fast = advect(&a, &b, &mut ws)?;
                let slow = advect_oracle(&a, &b)?;
                let scale = slow.norm(Space::Frac(0.5));
                let err = fast.sub(&slow)?.norm(Space::Frac(0.5));
                worst = worst.max(if scale > 0.0 { err / scale } else { err });
            }
            let pass = worst <= ORACLE_TOLERANCE;
            out.json(
                "oracle.json",
                &json!({ "cutoff": cfg.grid.cutoff(), "pairs": pairs, "max_relative_error": worst, "tolerance": ORACLE_TOLERANCE, "pass": pass }),
            )?;
            println!("advect vs direct sum, K = {}, {pairs} pairs: max relative error {worst:e}", cfg.grid.cutoff());
            Ok(pass)
        }
    }
}

fn validate_noise(cfg: &SimConfig, samples: usize, amplitude: f64, out: &mut Outputs) -> Result<bool> {
    let op = NoiseOperator::new(&cfg.noise, &cfg.grid)?;
    let c = op.constants();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(SAMPLE_STREAM);
    let fields: Vec<VorticityField> =
        (0..samples).map(|_| VorticityField::random(&cfg.grid, &mut rng, amplitude, 0.0)).collect();
    let mut growth_max_ratio: f64 = 0.0;
    let mut growth_max_gap: f64 = 0.0;
    for u in &fields {
        let hs = op.hs_norm_sq(u);
        let bound = c.c1 * u.norm_sq(Space::H) + c.c2;
        if bound > 0.0 {
            growth_max_ratio = growth_max_ratio.max(hs / bound);
            growth_max_gap = growth_max_gap.max((hs - bound).abs() / bound);
        }
    }
    let lip = lipschitz_check(&op, &fields)?;
    let mut pass = growth_max_ratio <= 1.0 + 1e-12 && lip.max_ratio <= lip.bound * (1.0 + 1e-12);
    let mut report = json!({
        "model": cfg.noise,
        "c1": c.c1,
        "c2": c.c2,
        "lipschitz": c.lipschitz,
        "samples": samples,
        "growth_max_ratio": growth_max_ratio,
        "growth_max_relative_gap": growth_max_gap,
        "lipschitz_max_ratio": lip.max_ratio,
    });
    println!("C1 = {:.15e}", c.c1);
    println!("C2 = {:.15e}", c.c2);
    println!("L_G = {:.15e}", c.lipschitz);
    println!("growth bound: max |G(u)|^2 / (C1 |u|^2 + C2) = {growth_max_ratio:.15}");
    println!("sampled Lipschitz ratio max {:.15} (bound {:.15})", lip.max_ratio, lip.bound);
    if let NoiseModel::MultiplicativeLowMode { .. } = cfg.noise {
        let mut residual: f64 = 0.0;
        let mut g_ok = true;
        for pair in fields.chunks(2).filter(|p| p.len() == 2) {
            let r = right_inverse_check(&op, &pair[0], &pair[1])?;
            residual = residual.max(r.residual / r.x_norm.max(1.0));
            g_ok &= r.g_norm <= r.g_bound;
        }
        pass &= residual <= RIGHT_INVERSE_TOLERANCE && g_ok;
        report["right_inverse_residual"] = json!(residual);
        report["right_inverse_norm_bounded"] = json!(g_ok);
        println!("A3 residual |G(u) g(u) x - P_M x| = {residual:e}");
    }
    if let NoiseModel::AdditiveDegenerate { z0, .. } = &cfg.noise {
        let z = z0_conditions(z0)?;
        println!(
            "Z0: symmetric {}, two norms {}, generates Z^2 {} (invariant factors {:?})",
            z.symmetric, z.two_norms, z.generates, z.invariant_factors
        );
        report["z0"] = json!(z);
    }
    report["pass"] = json!(pass);
    out.json("noise.json", &report)?;
    Ok(pass)
}

/// Runs one invocation and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match run_inner(cli) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("error: verification check failed");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run_inner(cli: &Cli) -> Result<bool> {
    let started = Instant::now();
    let args = cli.command.args();
    let (mut rc, hash) = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        rc.seed = seed;
    }
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let dir = match (&args.out, &rc.out) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) if d.is_absolute() => d.clone(),
        (None, Some(d)) => base.join(d),
        (None, None) => return Err(Error::Config("no output directory: pass --out or set `out`".into())),
    };
    let planned = plan(&cli.command, &rc, &base)?;

    let mut out = Outputs::create(&dir)?;
    let pass = execute(planned, &mut out)?;
    let manifest = json!({
        "command": cli.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config": args.config.display().to_string(),
        "config_sha256": hash,
        "seed": rc.seed,
        "replicas_override": args.replicas,
        "files": out.files,
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    out.json("manifest.json", &manifest)?;
    Ok(pass)
}
