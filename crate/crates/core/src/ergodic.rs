//! Time averages along trajectories and distributional diagnostics of the
//! invariant measure.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{NoiseModel, NoiseOperator, WienerStream};
use crate::sde::{check_finite, run_trajectory, ModeStatistics, Scheme, SimConfig, Stepper, TrajectoryRecord};
use crate::spectral::{Space, VorticityField, WaveVector};
use crate::stats::{histogram, ks_distance, moments, Histogram, Moments};

/// Fewest post-burn-in samples accepted by [`two_start_comparison`].
pub const MIN_SAMPLES: usize = 20;

/// Scalar test functions of the state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Observable {
    /// `|u|_H^2`
    Energy,
    /// `|psi|_{L^2}^2`
    Enstrophy,
    /// `|u|_V^2`, equal to the enstrophy on the torus
    VNormSq,
    /// real part of the velocity amplitude `psi_k / |k|`
    ModeReal { k1: i32, k2: i32 },
    /// `|psi_k| / |k|`
    ModeModulus { k1: i32, k2: i32 },
    /// `|psi_k|^2 / |k|^2`
    ModeModulusSq { k1: i32, k2: i32 },
    Constant { value: f64 },
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::Energy => "energy".into(),
            Observable::Enstrophy => "enstrophy".into(),
            Observable::VNormSq => "v_norm_sq".into(),
            Observable::ModeReal { k1, k2 } => format!("mode_real({k1};{k2})"),
            Observable::ModeModulus { k1, k2 } => format!("mode_modulus({k1};{k2})"),
            Observable::ModeModulusSq { k1, k2 } => format!("mode_modulus_sq({k1};{k2})"),
            Observable::Constant { value } => format!("constant({value})"),
        }
    }

    /// The wave vector a single-mode observable reads.
    pub fn mode(&self) -> Result<Option<WaveVector>> {
        match *self {
            Observable::ModeReal { k1, k2 }
            | Observable::ModeModulus { k1, k2 }
            | Observable::ModeModulusSq { k1, k2 } => WaveVector::new(k1, k2).map(Some),
            _ => Ok(None),
        }
    }

    fn from_amplitude(&self, a: num_complex::Complex64) -> f64 {
        match self {
            Observable::ModeReal { .. } => a.re,
            Observable::ModeModulus { .. } => a.norm(),
            _ => a.norm_sqr(),
        }
    }

    pub fn eval(&self, psi: &VorticityField) -> Result<f64> {
        Ok(match self {
            Observable::Energy => psi.norm_sq(Space::H),
            Observable::Enstrophy => psi.enstrophy(),
            Observable::VNormSq => psi.norm_sq(Space::V),
            Observable::Constant { value } => *value,
            _ => {
                let k = self.mode()?.expect("single-mode observable");
                let c = psi
                    .coeff(k)
                    .ok_or_else(|| Error::Domain(format!("mode {k} is not on the grid")))?;
                self.from_amplitude(c / k.norm())
            }
        })
    }

    /// Values at the record's sample times.
    pub fn series(&self, traj: &TrajectoryRecord) -> Result<Vec<f64>> {
        Ok(match self {
            Observable::Energy => traj.energy.clone(),
            Observable::Enstrophy | Observable::VNormSq => traj.enstrophy.clone(),
            Observable::Constant { value } => vec![*value; traj.len()],
            _ => {
                let k = self.mode()?.expect("single-mode observable");
                let i = traj
                    .modes
                    .iter()
                    .position(|m| *m == k)
                    .ok_or_else(|| Error::Domain(format!("mode {k} was not recorded")))?;
                traj.mode_series[i].iter().map(|a| self.from_amplitude(*a)).collect()
            }
        })
    }
}

/// Modes that must be recorded to evaluate `obs` from a record.
pub fn required_modes(obs: &[Observable]) -> Result<Vec<WaveVector>> {
    let mut out = Vec::new();
    for o in obs {
        if let Some(k) = o.mode()? {
            if !out.contains(&k) {
                out.push(k);
            }
        }
    }
    Ok(out)
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let j = times.partition_point(|&s| s <= t);
    if j == 0 {
        return values[0];
    }
    if j == times.len() {
        return values[j - 1];
    }
    let (t0, t1) = (times[j - 1], times[j]);
    values[j - 1] + (values[j] - values[j - 1]) * (t - t0) / (t1 - t0)
}

/// Trapezoidal average of the piecewise-linear interpolant over `[a, b]`.
pub fn interval_average(times: &[f64], values: &[f64], a: f64, b: f64) -> Result<f64> {
    if times.len() != values.len() || times.is_empty() {
        return Err(Error::Domain("times and values must be nonempty and of equal length".into()));
    }
    let (first, last) = (times[0], *times.last().unwrap());
    if !(b > a) || a < first - 1e-12 || b > last + 1e-9 * last.abs().max(1.0) {
        return Err(Error::Domain(format!("window [{a}, {b}] is empty or outside [{first}, {last}]")));
    }
    let b = b.min(last);
    let mut pts = vec![(a, interpolate(times, values, a))];
    for (&t, &v) in times.iter().zip(values) {
        if t > a && t < b {
            pts.push((t, v));
        }
    }
    pts.push((b, interpolate(times, values, b)));
    let integral: f64 = pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    Ok(integral / (b - a))
}

/// Running averages `(1/(t_n - t_0)) int_{t_0}^{t_n} phi` over growing windows.
#[derive(Clone, Debug, Serialize)]
pub struct RunningAverage {
    pub observable: String,
    pub windows: Vec<f64>,
    pub averages: Vec<f64>,
    /// largest difference between successive averages among the last three windows
    pub cauchy: Option<f64>,
}

pub fn time_average(traj: &TrajectoryRecord, obs: &Observable, windows: &[f64]) -> Result<RunningAverage> {
    let values = obs.series(traj)?;
    if traj.is_empty() {
        return Err(Error::Domain("empty trajectory".into()));
    }
    if windows.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("window endpoints must increase".into()));
    }
    let t0 = traj.times[0];
    let averages = windows
        .iter()
        .map(|&t| interval_average(&traj.times, &values, t0, t))
        .collect::<Result<Vec<f64>>>()?;
    let diffs: Vec<f64> = averages.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let cauchy = diffs.iter().rev().take(3).copied().reduce(f64::max);
    Ok(RunningAverage { observable: obs.name(), windows: windows.to_vec(), averages, cauchy })
}

/// Evenly spaced window endpoints `t_0 + (i/count) (T - t_0)`, `i = 1..=count`.
pub fn even_windows(traj: &TrajectoryRecord, count: usize) -> Vec<f64> {
    let (t0, t1) = (traj.times[0], *traj.times.last().unwrap_or(&0.0));
    (1..=count).map(|i| t0 + (t1 - t0) * i as f64 / count as f64).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ObservableSummary {
    pub running: RunningAverage,
    pub moments: Moments,
    pub histogram: Histogram,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeVariance {
    pub k1: i32,
    pub k2: i32,
    pub variance: f64,
}

/// Long-run diagnostics of one trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct ErgodicReport {
    pub burn_in: f64,
    pub observables: Vec<ObservableSummary>,
    /// per-mode variance of the `H` coordinate after burn-in
    pub mode_variances: Vec<ModeVariance>,
}

impl ErgodicReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// CSV of the running averages, one column per observable.
    pub fn write_averages_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t")?;
        for o in &self.observables {
            write!(w, ",{}", o.running.observable)?;
        }
        writeln!(w)?;
        let Some(first) = self.observables.first() else { return Ok(()) };
        for i in 0..first.running.windows.len() {
            write!(w, "{:e}", first.running.windows[i])?;
            for o in &self.observables {
                write!(w, ",{:e}", o.running.averages[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_mode_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k1,k2,variance")?;
        for m in &self.mode_variances {
            writeln!(w, "{},{},{:e}", m.k1, m.k2, m.variance)?;
        }
        Ok(())
    }
}

fn mode_table(cfg: &SimConfig, stats: Option<&ModeStatistics>) -> Vec<ModeVariance> {
    let Some(s) = stats else { return Vec::new() };
    cfg.grid
        .modes()
        .iter()
        .zip(s.variance())
        .map(|(k, variance)| ModeVariance { k1: k.k1, k2: k.k2, variance })
        .collect()
}

/// Builds the report for a trajectory whose record holds every mode `obs` reads.
///
/// `burn_in` is a time; moments and histograms use samples after it.
pub fn ergodic_report(
    cfg: &SimConfig,
    traj: &TrajectoryRecord,
    obs: &[Observable],
    windows: &[f64],
    burn_in: f64,
    bins: usize,
) -> Result<ErgodicReport> {
    let start = traj.times.partition_point(|&t| t < burn_in);
    let mut observables = Vec::new();
    for o in obs {
        let running = time_average(traj, o, windows)?;
        let values = o.series(traj)?;
        let tail = &values[start.min(values.len())..];
        if tail.len() < MIN_SAMPLES {
            return Err(Error::Statistics(format!(
                "{} samples after burn-in, at least {MIN_SAMPLES} required",
                tail.len()
            )));
        }
        observables.push(ObservableSummary {
            running,
            moments: moments(tail),
            histogram: histogram(tail, bins),
            samples: tail.len(),
        });
    }
    Ok(ErgodicReport { burn_in, observables, mode_variances: mode_table(cfg, traj.mode_stats.as_ref()) })
}

#[derive(Clone, Debug, Serialize)]
pub struct ObservableDistance {
    pub observable: String,
    pub ks: f64,
    /// `|difference|` of mean, variance, skewness and excess kurtosis
    pub moment_diffs: [f64; 4],
    pub samples: (usize, usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceReport {
    pub burn_in: f64,
    pub distances: Vec<ObservableDistance>,
    /// no noise acts at either start: the runs are deterministic and need
    /// not approach a common law
    pub deterministic: bool,
}

impl DistanceReport {
    pub fn max_ks(&self) -> f64 {
        self.distances.iter().map(|d| d.ks).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn with_modes(cfg: &SimConfig, obs: &[Observable]) -> Result<SimConfig> {
    let mut c = cfg.clone();
    for k in required_modes(obs)? {
        if !c.recorded_modes.contains(&k) {
            c.recorded_modes.push(k);
        }
    }
    Ok(c)
}

/// Compares the post-burn-in sample distributions of two long runs that
/// differ only in the initial condition, on Wiener streams `streams.0` and
/// `streams.1`.
pub fn two_start_comparison(
    cfg: &SimConfig,
    x0_a: &VorticityField,
    x0_b: &VorticityField,
    obs: &[Observable],
    burn_in: f64,
    streams: (u64, u64),
) -> Result<DistanceReport> {
    let run_cfg = with_modes(cfg, obs)?;
    let a = run_trajectory(&run_cfg, Scheme::NavierStokes, x0_a, streams.0)?;
    let b = run_trajectory(&run_cfg, Scheme::NavierStokes, x0_b, streams.1)?;
    let start = a.times.partition_point(|&t| t < burn_in);
    let count = a.len().saturating_sub(start);
    if count < MIN_SAMPLES {
        return Err(Error::Statistics(format!(
            "{count} samples after burn-in, at least {MIN_SAMPLES} required"
        )));
    }
    let mut distances = Vec::new();
    for o in obs {
        let sa = &o.series(&a)?[start..];
        let sb = &o.series(&b)?[start..];
        let (ma, mb) = (moments(sa), moments(sb));
        distances.push(ObservableDistance {
            observable: o.name(),
            ks: ks_distance(sa, sb)?,
            moment_diffs: [
                (ma.mean - mb.mean).abs(),
                (ma.variance - mb.variance).abs(),
                (ma.skewness - mb.skewness).abs(),
                (ma.kurtosis - mb.kurtosis).abs(),
            ],
            samples: (sa.len(), sb.len()),
        });
    }
    let op = cfg.noise_operator()?;
    let deterministic = op.hs_norm_sq(x0_a) == 0.0 && op.hs_norm_sq(x0_b) == 0.0;
    Ok(DistanceReport { burn_in, distances, deterministic })
}

#[derive(Clone, Debug, Serialize)]
pub struct ActivationRow {
    pub k1: i32,
    pub k2: i32,
    pub forced: bool,
    /// variance of the `H` coordinate over the stationary window
    pub variance: f64,
    /// squared `H` coordinate after the first step
    pub first_step_sq: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ActivationReport {
    pub horizon: f64,
    pub window_start: f64,
    pub rows: Vec<ActivationRow>,
    pub min_unforced_variance: f64,
    pub max_unforced_variance: f64,
    /// mean squared forced coordinate after one step is at least the largest
    /// squared unforced coordinate
    pub forced_lead_at_first_step: bool,
}

impl ActivationReport {
    /// Smallest unforced variance among modes with `|k|^2 <= max_norm_sq`.
    pub fn min_unforced_variance_within(&self, max_norm_sq: i64) -> f64 {
        self.rows
            .iter()
            .filter(|r| !r.forced && (r.k1 * r.k1 + r.k2 * r.k2) as i64 <= max_norm_sq)
            .map(|r| r.variance)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k1,k2,forced,variance")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{:e}", r.k1, r.k2, r.forced, r.variance)?;
        }
        Ok(())
    }
}

/// Per-mode stationary variances of a run driven by degenerate noise from rest.
///
/// Variances are accumulated over `[burn_in * horizon, horizon]`.
pub fn mode_activation(cfg: &SimConfig, horizon: f64, burn_in: f64) -> Result<ActivationReport> {
    if !matches!(cfg.noise, NoiseModel::AdditiveDegenerate { .. }) {
        return Err(Error::Config("mode activation needs the additive-degenerate noise model".into()));
    }
    if cfg.initial.norm_sq(Space::H) != 0.0 || cfg.forcing.norm_sq(Space::H) != 0.0 {
        return Err(Error::Config("mode activation starts from rest without deterministic forcing".into()));
    }
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::Config(format!("burn-in fraction must lie in [0, 1), got {burn_in}")));
    }
    let mut run = cfg.clone();
    run.horizon = horizon;
    let window_start = burn_in * horizon;
    let op = NoiseOperator::new(&cfg.noise, &cfg.grid)?;
    let driven = op.driven_modes();
    let mut stepper = Stepper::new(&run)?;
    let mut stream = WienerStream::new(cfg.seed, 0, cfg.dt, op.active_modes())?;
    let mut dw = vec![0.0; op.active_modes()];
    let mut psi = cfg.initial.clone();
    let mut stats = ModeStatistics::new(cfg.grid.len(), window_start);
    let mut first = Vec::new();
    for step in 1..=run.n_steps() {
        stream.fill(&mut dw);
        psi = stepper.step(&psi, &dw)?;
        check_finite(&psi, step, cfg.dt)?;
        if step == 1 {
            first = psi.h_coords().iter().map(|x| x * x).collect();
        }
        if step as f64 * cfg.dt >= window_start - 0.5 * cfg.dt {
            stats.push(&psi);
        }
    }
    let variance = stats.variance();
    let rows: Vec<ActivationRow> = cfg
        .grid
        .modes()
        .iter()
        .enumerate()
        .map(|(i, k)| ActivationRow {
            k1: k.k1,
            k2: k.k2,
            forced: driven.contains(&i),
            variance: variance[i],
            first_step_sq: first[i],
        })
        .collect();
    let unforced = rows.iter().filter(|r| !r.forced);
    let min_unforced_variance = unforced.clone().map(|r| r.variance).fold(f64::INFINITY, f64::min);
    let max_unforced_variance = unforced.clone().map(|r| r.variance).fold(0.0, f64::max);
    let forced: Vec<f64> = rows.iter().filter(|r| r.forced).map(|r| r.first_step_sq).collect();
    let forced_mean = forced.iter().sum::<f64>() / forced.len().max(1) as f64;
    let unforced_max = unforced.map(|r| r.first_step_sq).fold(0.0, f64::max);
    Ok(ActivationReport {
        horizon,
        window_start,
        rows,
        min_unforced_variance,
        max_unforced_variance,
        forced_lead_at_first_step: forced_mean >= unforced_max,
    })
}

/// A set of states defined through one observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EventSet {
    Whole,
    Empty,
    Below { observable: Observable, threshold: f64 },
    Above { observable: Observable, threshold: f64 },
}

impl EventSet {
    pub fn contains(&self, psi: &VorticityField) -> Result<bool> {
        Ok(match self {
            EventSet::Whole => true,
            EventSet::Empty => false,
            EventSet::Below { observable, threshold } => observable.eval(psi)? <= *threshold,
            EventSet::Above { observable, threshold } => observable.eval(psi)? > *threshold,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MixingReport {
    pub t_grid: Vec<f64>,
    pub replicas: usize,
    /// `traces_a[e][i]`: fraction of replicas from start `a` inside event `e` at `t_grid[i]`
    pub traces_a: Vec<Vec<f64>>,
    pub traces_b: Vec<Vec<f64>>,
    pub final_gaps: Vec<f64>,
}

impl MixingReport {
    pub fn max_final_gap(&self) -> f64 {
        self.final_gaps.iter().copied().fold(0.0, f64::max)
    }
}

/// Ensemble estimates of `P(u(t; x) in event)` on `t_grid` for two starts.
///
/// Replica `r` of start `a` uses Wiener stream `2r`, of start `b` stream `2r + 1`.
pub fn strong_mixing_probe(
    cfg: &SimConfig,
    x0_a: &VorticityField,
    x0_b: &VorticityField,
    events: &[EventSet],
    t_grid: &[f64],
    replicas: usize,
) -> Result<MixingReport> {
    if replicas == 0 {
        return Err(Error::Statistics("mixing probe needs replicas".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Domain("t_grid must be nonnegative and increasing".into()));
    }
    let grid_steps: Vec<usize> = t_grid.iter().map(|t| (t / cfg.dt).round() as usize).collect();
    let last = grid_steps.last().copied().unwrap_or(0);
    let mut run = cfg.clone();
    run.horizon = (last.max(1)) as f64 * cfg.dt;
    let mut stepper = Stepper::new(&run)?;
    let mut counts = [vec![vec![0usize; t_grid.len()]; events.len()], vec![vec![0usize; t_grid.len()]; events.len()]];
    for r in 0..replicas {
        for (side, x0) in [x0_a, x0_b].into_iter().enumerate() {
            let mut stream =
                WienerStream::new(cfg.seed, 2 * r as u64 + side as u64, cfg.dt, stepper.noise().active_modes())?;
            let mut dw = vec![0.0; stream.active_modes()];
            let mut psi = x0.clone();
            let mut step = 0;
            for (i, &target) in grid_steps.iter().enumerate() {
                while step < target {
                    stream.fill(&mut dw);
                    psi = stepper.step(&psi, &dw)?;
                    step += 1;
                    check_finite(&psi, step, cfg.dt)?;
                }
                for (e, ev) in events.iter().enumerate() {
                    if ev.contains(&psi)? {
                        counts[side][e][i] += 1;
                    }
                }
            }
        }
    }
    let n = replicas as f64;
    let frac = |c: &Vec<Vec<usize>>| -> Vec<Vec<f64>> {
        c.iter().map(|row| row.iter().map(|&x| x as f64 / n).collect()).collect()
    };
    let traces_a = frac(&counts[0]);
    let traces_b = frac(&counts[1]);
    let final_gaps = traces_a
        .iter()
        .zip(&traces_b)
        .map(|(a, b)| match (a.last(), b.last()) {
            (Some(x), Some(y)) => (x - y).abs(),
            _ => 0.0,
        })
        .collect();
    Ok(MixingReport { t_grid: t_grid.to_vec(), replicas, traces_a, traces_b, final_gaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ramp_record() -> TrajectoryRecord {
        let g = make_grid(2).unwrap();
        let mut cfg = SimConfig::new(&g, 1.0, 0.1, 1.0, NoiseModel::AdditiveDiagonal { a: 0.0, sigma0: 0.0 });
        cfg.initial = VorticityField::basis_vector(&g, WaveVector::new(1, 0).unwrap(), 1.0).unwrap();
        crate::sde::simulate(&cfg).unwrap()
    }

    #[test]
    fn constant_and_zero_averages() {
        let traj = ramp_record();
        let c = Observable::Constant { value: 2.5 };
        let ra = time_average(&traj, &c, &[0.3, 0.55, 1.0]).unwrap();
        assert!(ra.averages.iter().all(|a| (a - 2.5).abs() < 1e-15));
        assert_eq!(ra.cauchy, Some(ra.averages.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)));

        let g = make_grid(4).unwrap();
        let cfg = SimConfig::new(&g, 1.0, 0.05, 2.0, NoiseModel::AdditiveDiagonal { a: 0.0, sigma0: 0.0 });
        let zero = crate::sde::simulate(&cfg).unwrap();
        let ra = time_average(&zero, &Observable::Energy, &[1.0, 2.0]).unwrap();
        assert_eq!(ra.averages, vec![0.0, 0.0]);
        assert!(matches!(time_average(&zero, &Observable::Energy, &[0.0]), Err(Error::Domain(_))));
        assert!(time_average(&zero, &Observable::ModeReal { k1: 1, k2: 0 }, &[1.0]).is_err());
    }

    #[test]
    fn trapezoid_matches_exponential_integral() {
        // energy decays as e^{-2t}; the average over [0, 1] is (1 - e^{-2}) / 2
        let traj = ramp_record();
        let avg = time_average(&traj, &Observable::Energy, &[1.0]).unwrap().averages[0];
        let exact = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((avg - exact).abs() < 2e-3, "{avg} vs {exact}");
    }

    #[test]
    fn observables_agree_on_fields_and_records() {
        let g = make_grid(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut cfg = SimConfig::new(&g, 0.3, 0.01, 0.2, NoiseModel::default());
        cfg.initial = VorticityField::random(&g, &mut rng, 1.0, 1.0);
        let obs = [
            Observable::Energy,
            Observable::Enstrophy,
            Observable::VNormSq,
            Observable::ModeReal { k1: 1, k2: -2 },
            Observable::ModeModulus { k1: 2, k2: 1 },
            Observable::ModeModulusSq { k1: 0, k2: 1 },
        ];
        cfg.recorded_modes = required_modes(&obs).unwrap();
        cfg.record_every = 20;
        cfg.snapshot_every = Some(1);
        let traj = crate::sde::simulate(&cfg).unwrap();
        for o in &obs {
            let s = o.series(&traj).unwrap();
            for (i, (_, snap)) in traj.snapshots.iter().enumerate() {
                let v = o.eval(snap).unwrap();
                assert!((v - s[i]).abs() <= 1e-13 * v.abs().max(1.0), "{}", o.name());
            }
        }
    }

    #[test]
    fn identical_runs_have_zero_distance_and_order_does_not_matter() {
        let g = make_grid(4).unwrap();
        let mut cfg = SimConfig::new(&g, 0.5, 0.02, 4.0, NoiseModel::default());
        cfg.seed = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = VorticityField::random(&g, &mut rng, 1.0, 0.0);
        let b = VorticityField::zeros(&g);
        let obs = [Observable::Energy, Observable::ModeReal { k1: 1, k2: 0 }];
        let same = two_start_comparison(&cfg, &a, &a, &obs, 1.0, (0, 0)).unwrap();
        assert_eq!(same.max_ks(), 0.0);
        assert!(same.distances.iter().all(|d| d.moment_diffs == [0.0; 4]));
        let ab = two_start_comparison(&cfg, &a, &b, &obs, 1.0, (0, 1)).unwrap();
        let ba = two_start_comparison(&cfg, &b, &a, &obs, 1.0, (1, 0)).unwrap();
        for (x, y) in ab.distances.iter().zip(&ba.distances) {
            assert_eq!(x.ks, y.ks);
            assert_eq!(x.moment_diffs, y.moment_diffs);
        }
        assert!(!ab.deterministic);
        assert!(matches!(
            two_start_comparison(&cfg, &a, &b, &obs, 3.9, (0, 1)),
            Err(Error::Statistics(_))
        ));
    }

    #[test]
    fn deterministic_control_does_not_merge() {
        let g = make_grid(4).unwrap();
        let cfg = SimConfig::new(&g, 0.01, 0.02, 4.0, NoiseModel::AdditiveDiagonal { a: 0.0, sigma0: 0.0 });
        let a = VorticityField::basis_vector(&g, WaveVector::new(1, 0).unwrap(), 1.0).unwrap();
        let b = VorticityField::basis_vector(&g, WaveVector::new(1, 0).unwrap(), 3.0).unwrap();
        let rep = two_start_comparison(&cfg, &a, &b, &[Observable::Energy], 1.0, (0, 1)).unwrap();
        assert!(rep.deterministic);
        assert_eq!(rep.max_ks(), 1.0);
    }

    #[test]
    fn activation_controls() {
        let g = make_grid(4).unwrap();
        let z0: Vec<WaveVector> = [(1, 0), (-1, 0), (1, 1), (-1, -1)]
            .iter()
            .map(|&(a, b)| WaveVector::new(a, b).unwrap())
            .collect();
        let mut cfg = SimConfig::new(&g, 0.5, 0.01, 1.0, NoiseModel::AdditiveDegenerate { z0: z0.clone(), q: vec![0.0] });
        let quiet = mode_activation(&cfg, 2.0, 0.25).unwrap();
        assert!(quiet.rows.iter().all(|r| r.variance <= 1e-12));

        cfg.noise = NoiseModel::AdditiveDegenerate { z0, q: vec![1.0] };
        let mut linear = cfg.clone();
        linear.advection = false;
        let lin = mode_activation(&linear, 5.0, 0.25).unwrap();
        assert!(lin.max_unforced_variance <= 1e-12);
        assert!(lin.rows.iter().filter(|r| r.forced).all(|r| r.variance > 1e-3));

        let full = mode_activation(&cfg, 5.0, 0.25).unwrap();
        assert!(full.forced_lead_at_first_step);
        assert!(full.min_unforced_variance_within(2) > 0.0);
        assert_eq!(full.rows.iter().filter(|r| r.forced).count(), 4);

        let mut bad = cfg.clone();
        bad.noise = NoiseModel::default();
        assert!(matches!(mode_activation(&bad, 1.0, 0.25), Err(Error::Config(_))));
    }

    #[test]
    fn mixing_probe_trivial_events() {
        let g = make_grid(4).unwrap();
        let cfg = SimConfig::new(&g, 0.5, 0.02, 1.0, NoiseModel::default());
        let a = VorticityField::zeros(&g);
        let b = VorticityField::basis_vector(&g, WaveVector::new(1, 1).unwrap(), 2.0).unwrap();
        let events = [
            EventSet::Whole,
            EventSet::Empty,
            EventSet::Below { observable: Observable::Energy, threshold: 1.0 },
        ];
        let rep = strong_mixing_probe(&cfg, &a, &b, &events, &[0.0, 0.5, 1.0], 16).unwrap();
        assert!(rep.traces_a[0].iter().chain(&rep.traces_b[0]).all(|&p| p == 1.0));
        assert!(rep.traces_a[1].iter().chain(&rep.traces_b[1]).all(|&p| p == 0.0));
        assert_eq!(rep.traces_a[2][0], 1.0);
        assert_eq!(rep.traces_b[2][0], 0.0);
        assert_eq!(rep.final_gaps[0], 0.0);
    }
}
