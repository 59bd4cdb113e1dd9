//! Nudged coupling: a reference solution `u` and a solution `v` driven
//! towards it on the low modes, both fed by the same Wiener increments.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{NoiseModel, NoiseOperator, WienerStream};
use crate::sde::{check_finite, viscosity_thresholds, SimConfig, Stepper};
use crate::spectral::{Space, SpectralGrid, VorticityField};
use crate::stats::{linear_fit, mean_stderr, wilson_interval, LineFit};

/// A coupled pair on one grid.
#[derive(Clone, Debug)]
pub struct CoupledState {
    pub u: VorticityField,
    pub v: VorticityField,
    /// number of nudged modes; 0 disables the nudge
    pub n: usize,
    /// accumulated `int |h|_U^2 dt`
    pub drift_integral: f64,
}

impl CoupledState {
    pub fn new(u: VorticityField, v: VorticityField, n: usize) -> Result<Self> {
        if u.grid().cutoff() != v.grid().cutoff() {
            return Err(Error::Domain("coupled fields live on different grids".into()));
        }
        if n > u.grid().len() {
            return Err(Error::Domain(format!("nudge index {n} exceeds {} modes", u.grid().len())));
        }
        Ok(CoupledState { u, v, n, drift_integral: 0.0 })
    }

    /// `|u - v|_H^2`.
    pub fn gap_sq(&self) -> f64 {
        self.u.sub(&self.v).expect("grids checked on construction").norm_sq(Space::H)
    }
}

fn nudge_gain(u: &VorticityField, n: usize, nu: f64) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    Ok(0.5 * nu * u.grid().ordered_eigenvalue(n)?)
}

/// `(nu lambda_N / 2) P_N (u - v)`; zero for `n = 0`.
pub fn nudge_term(u: &VorticityField, v: &VorticityField, n: usize, nu: f64) -> Result<VorticityField> {
    if n > u.grid().len() {
        return Err(Error::Domain(format!("nudge index {n} exceeds {} modes", u.grid().len())));
    }
    let gap = u.sub(v)?;
    if n == 0 {
        return Ok(gap.scaled(0.0));
    }
    let mut out = gap.project_low(n)?;
    out.scale(nudge_gain(u, n, nu)?);
    Ok(out)
}

/// Noise-space direction hitting each of the first `n` modes, or why none exists.
fn shift_columns(op: &NoiseOperator, n: usize) -> Result<Vec<usize>> {
    if let NoiseModel::MultiplicativeLowMode { m } = *op.model() {
        if m < n {
            return Err(Error::Config(format!(
                "shift needs the noise rank M = {m} to be at least the nudge index N = {n}"
            )));
        }
    }
    let driven = op.driven_modes();
    let gains = op.column_gains(&VorticityField::zeros(op.grid()));
    (0..n)
        .map(|mode| {
            driven
                .iter()
                .zip(&gains)
                .position(|(&d, &g)| d == mode && g != 0.0)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "noise does not act on nudged mode {}, no shift exists",
                        op.grid().mode(mode)
                    ))
                })
        })
        .collect()
}

/// `h` with `G(v) h = nudge_term(u, v, n, nu)`, the drift moved into the noise.
///
/// For the multiplicative family this is `(nu lambda_N / 2) g(v) P_N (u - v)`
/// and needs `M >= N`; additive models need every nudged mode driven.
pub fn girsanov_shift(
    u: &VorticityField,
    v: &VorticityField,
    n: usize,
    nu: f64,
    op: &NoiseOperator,
) -> Result<Vec<f64>> {
    let cols = shift_columns(op, n)?;
    shift_with(&cols, u, v, n, nu, op)
}

fn shift_with(
    cols: &[usize],
    u: &VorticityField,
    v: &VorticityField,
    n: usize,
    nu: f64,
    op: &NoiseOperator,
) -> Result<Vec<f64>> {
    let nudge = nudge_term(u, v, n, nu)?;
    let gains = op.column_gains(v);
    let mut h = vec![0.0; op.active_modes()];
    for (mode, &j) in cols.iter().enumerate() {
        h[j] = nudge.h_coord(mode) / gains[j];
    }
    Ok(h)
}

/// Treatment of the nudge term inside one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NudgeScheme {
    /// `dt gamma P_N (u^n - v^n)` added with the other explicit terms
    #[default]
    Explicit,
    /// backward Euler in the nudge: the low-mode gap of the explicit
    /// update is divided by `1 + dt gamma`
    Implicit,
}

/// Advances the pair by one step on the shared increment `dw`.
///
/// `u` receives exactly the update of [`Stepper::step`]. The drift integral
/// is incremented by `|h|^2 dt` when `shift` lists the noise directions of
/// the nudged modes.
pub fn step_coupled(
    cs: &CoupledState,
    stepper: &mut Stepper,
    dw: &[f64],
    scheme: NudgeScheme,
    shift: Option<&[usize]>,
) -> Result<CoupledState> {
    let nu = stepper.nu();
    let dt = stepper.dt();
    let mut drift = cs.drift_integral;
    if let Some(cols) = shift {
        let h = shift_with(cols, &cs.u, &cs.v, cs.n, nu, stepper.noise())?;
        drift += dt * h.iter().map(|x| x * x).sum::<f64>();
    }
    let mut yu = stepper.explicit_part(&cs.u, dw)?;
    let mut yv = stepper.explicit_part(&cs.v, dw)?;
    if cs.n > 0 {
        match scheme {
            NudgeScheme::Explicit => {
                let nudge = nudge_term(&cs.u, &cs.v, cs.n, nu)?;
                yv.axpy(dt, &nudge)?;
            }
            NudgeScheme::Implicit => {
                let g = dt * nudge_gain(&cs.u, cs.n, nu)?;
                let low = yu.sub(&yv)?.project_low(cs.n)?;
                yv.axpy(g / (1.0 + g), &low)?;
            }
        }
    }
    stepper.apply_decay(&mut yu);
    stepper.apply_decay(&mut yv);
    Ok(CoupledState { u: yu, v: yv, n: cs.n, drift_integral: drift })
}

fn default_fit_start() -> f64 {
    0.2
}

/// Parameters of a synchronization experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    /// number of nudged modes (0 runs the uncoupled control)
    pub n: usize,
    pub replicas: usize,
    /// integer time horizon
    pub horizon: u32,
    #[serde(default)]
    pub scheme: NudgeScheme,
    /// fraction of the horizon excluded from rate fits
    #[serde(default = "default_fit_start")]
    pub fit_start: f64,
}

impl CouplingConfig {
    pub fn new(n: usize, replicas: usize, horizon: u32) -> Self {
        CouplingConfig { n, replicas, horizon, scheme: NudgeScheme::Explicit, fit_start: default_fit_start() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    /// `log gap` against `t`, rate `delta`
    Exponential,
    /// `log gap` against `log t`, exponent `p`
    Polynomial,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateFit {
    pub kind: FitKind,
    /// `delta` or `p`, the negated slope
    pub rate: f64,
    pub line: LineFit,
    pub window: (f64, f64),
    /// sample times dropped from the window because the mean gap was zero
    pub dropped: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftStats {
    pub mean: f64,
    pub max: f64,
    pub all_finite: bool,
}

/// Outcome of [`fp_experiment`].
#[derive(Clone, Debug, Serialize)]
pub struct FPReport {
    pub n: usize,
    pub replicas: usize,
    #[serde(skip)]
    pub times: Vec<f64>,
    #[serde(skip)]
    pub mean_sq_gap: Vec<f64>,
    #[serde(skip)]
    pub stderr: Vec<f64>,
    pub fit: Option<RateFit>,
    /// `(0, nu lambda1 / (2 C1) - 3/8)`; the upper end is infinite for bounded noise
    pub p_admissible: (f64, f64),
    /// integer times `n = 1, 2, ...`
    pub event_times: Vec<u32>,
    /// fraction of replicas with `|u(n) - v(n)|^2 <= 1/n^2`
    pub event_fractions: Vec<f64>,
    /// fraction with the event at every integer time from `m` to the horizon, indexed like `event_times`
    pub tail_fractions: Vec<f64>,
    /// smallest `m` whose tail fraction exceeds 1/2
    pub m_star: Option<u32>,
    /// 95% Wilson interval of the tail fraction at `m_star`
    pub m_star_interval: Option<(f64, f64)>,
    pub drift: Option<DriftStats>,
}

impl FPReport {
    /// Mean gap at the sample time closest to `t`.
    pub fn gap_at(&self, t: f64) -> f64 {
        let i = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.mean_sq_gap[i]
    }

    /// Time average of the mean gap (trapezoid rule).
    pub fn time_averaged_gap(&self) -> f64 {
        let span = self.times.last().copied().unwrap_or(0.0) - self.times[0];
        let integral: f64 = self
            .times
            .windows(2)
            .zip(self.mean_sq_gap.windows(2))
            .map(|(t, g)| 0.5 * (t[1] - t[0]) * (g[0] + g[1]))
            .sum();
        integral / span
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,mean_sq_gap,stderr")?;
        for i in 0..self.times.len() {
            writeln!(w, "{:e},{:e},{:e}", self.times[i], self.mean_sq_gap[i], self.stderr[i])?;
        }
        Ok(())
    }

    /// JSON summary; the gap curve itself goes to [`FPReport::write_csv`].
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Monte-Carlo synchronization experiment: replica `r` couples `cfg.initial`
/// with `v0` on Wiener stream `r`.
///
/// The mean-square gap is sampled every `cfg.record_every` steps and at
/// every integer time; `cfg.horizon` is replaced by `cc.horizon`, and `1/dt`
/// must be an integer.
pub fn fp_experiment(cfg: &SimConfig, v0: &VorticityField, cc: &CouplingConfig) -> Result<FPReport> {
    if cc.replicas < 8 {
        return Err(Error::Statistics(format!(
            "synchronization statistics need at least 8 replicas, got {}",
            cc.replicas
        )));
    }
    if cc.horizon == 0 {
        return Err(Error::Config("coupling horizon must be a positive integer".into()));
    }
    if !(0.0..1.0).contains(&cc.fit_start) {
        return Err(Error::Config(format!("fit_start must lie in [0, 1), got {}", cc.fit_start)));
    }
    let per_unit = (1.0 / cfg.dt).round();
    if per_unit < 1.0 || (per_unit * cfg.dt - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("1/dt must be an integer for integer-time events, dt = {}", cfg.dt)));
    }
    let per_unit = per_unit as usize;
    let mut run_cfg = cfg.clone();
    run_cfg.horizon = cc.horizon as f64;
    let mut stepper = Stepper::new(&run_cfg)?;
    let n_steps = per_unit * cc.horizon as usize;
    CoupledState::new(cfg.initial.clone(), v0.clone(), cc.n)?;
    let shift = shift_columns(stepper.noise(), cc.n).ok();
    let gap0 = cfg.initial.sub(v0)?.norm_sq(Space::H);

    let mut times = vec![0.0];
    let mut gaps: Vec<Vec<f64>> = Vec::with_capacity(cc.replicas);
    let mut events: Vec<Vec<bool>> = Vec::with_capacity(cc.replicas);
    let mut drifts = Vec::with_capacity(cc.replicas);
    for r in 0..cc.replicas {
        let mut stream = WienerStream::new(cfg.seed, r as u64, cfg.dt, stepper.noise().active_modes())?;
        let mut dw = vec![0.0; stream.active_modes()];
        let mut cs = CoupledState::new(cfg.initial.clone(), v0.clone(), cc.n)?;
        let mut g = vec![gap0];
        let mut ev = Vec::with_capacity(cc.horizon as usize);
        for step in 1..=n_steps {
            stream.fill(&mut dw);
            cs = step_coupled(&cs, &mut stepper, &dw, cc.scheme, shift.as_deref())?;
            check_finite(&cs.u, step, cfg.dt)?;
            check_finite(&cs.v, step, cfg.dt)?;
            let at_integer = step % per_unit == 0;
            if step % cfg.record_every == 0 || at_integer {
                let gap = cs.gap_sq();
                g.push(gap);
                if r == 0 {
                    times.push(step as f64 * cfg.dt);
                }
                if at_integer {
                    let n = (step / per_unit) as f64;
                    ev.push(gap <= 1.0 / (n * n));
                }
            }
        }
        gaps.push(g);
        events.push(ev);
        drifts.push(cs.drift_integral);
    }

    let mut mean_sq_gap = vec![gap0];
    let mut stderr = vec![0.0];
    for i in 1..times.len() {
        let col: Vec<f64> = gaps.iter().map(|g| g[i]).collect();
        let (m, se) = mean_stderr(&col);
        mean_sq_gap.push(m);
        stderr.push(se);
    }

    let consts = stepper.noise().constants();
    let thresholds = viscosity_thresholds(consts.c1, cfg.grid.ordered_eigenvalue(1)?)?;
    let kind = if thresholds.exponential_regime() { FitKind::Exponential } else { FitKind::Polynomial };
    let t_end = cc.horizon as f64;
    let t_start = cc.fit_start * t_end;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dropped = 0;
    for (&t, &g) in times.iter().zip(&mean_sq_gap) {
        if t < t_start || t <= 0.0 {
            continue;
        }
        if g > 0.0 {
            xs.push(if kind == FitKind::Exponential { t } else { t.ln() });
            ys.push(g.ln());
        } else {
            dropped += 1;
        }
    }
    let fit = linear_fit(&xs, &ys)
        .ok()
        .map(|line| RateFit { kind, rate: -line.slope, line, window: (t_start, t_end), dropped });

    let h = cc.horizon as usize;
    let reps = cc.replicas as f64;
    let event_times: Vec<u32> = (1..=cc.horizon).collect();
    let event_fractions: Vec<f64> =
        (0..h).map(|i| events.iter().filter(|e| e[i]).count() as f64 / reps).collect();
    let tail_counts: Vec<usize> =
        (0..h).map(|i| events.iter().filter(|e| e[i..].iter().all(|&b| b)).count()).collect();
    let tail_fractions: Vec<f64> = tail_counts.iter().map(|&c| c as f64 / reps).collect();
    let m_index = tail_fractions.iter().position(|&f| f > 0.5);
    let m_star = m_index.map(|i| event_times[i]);
    let m_star_interval = m_index.map(|i| wilson_interval(tail_counts[i], cc.replicas, 1.96));

    let drift = shift.as_ref().map(|_| DriftStats {
        mean: drifts.iter().sum::<f64>() / reps,
        max: drifts.iter().copied().fold(0.0, f64::max),
        all_finite: drifts.iter().all(|d| d.is_finite()),
    });

    Ok(FPReport {
        n: cc.n,
        replicas: cc.replicas,
        times,
        mean_sq_gap,
        stderr,
        fit,
        p_admissible: (0.0, thresholds.p_sup(cfg.nu)),
        event_times,
        event_fractions,
        tail_fractions,
        m_star,
        m_star_interval,
        drift,
    })
}

/// Gap reduction `gap(H/10) / gap(H)` at which a run counts as synchronized.
pub const SYNC_FACTOR: f64 = 10.0;

/// Values of `N` that close an eigenvalue shell: the first `N` ordered modes
/// are exactly those with `|k|^2 <= s`, for each shell `s` in turn.
pub fn shell_boundaries(grid: &SpectralGrid) -> Vec<usize> {
    let l = grid.eigenvalues();
    (1..=l.len()).filter(|&n| n == l.len() || l[n] > l[n - 1]).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub n: usize,
    /// `lambda_N`, zero for the disabled nudge
    pub lambda_n: f64,
    pub time_averaged_gap: f64,
    pub final_gap: f64,
    /// `gap(H/10) / gap(H)`
    pub reduction: f64,
    pub synchronized: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// smallest swept `N` whose run synchronized
    pub threshold: Option<usize>,
}

impl SweepReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,lambda_n,time_averaged_gap,final_gap,reduction,synchronized")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{:e},{}",
                r.n, r.lambda_n, r.time_averaged_gap, r.final_gap, r.reduction, r.synchronized
            )?;
        }
        Ok(())
    }
}

/// Runs `fp_experiment` once per entry of `ns` with every other setting of
/// `base` fixed, and locates the empirical synchronization threshold.
pub fn n_sweep(cfg: &SimConfig, v0: &VorticityField, base: &CouplingConfig, ns: &[usize]) -> Result<SweepReport> {
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let cc = CouplingConfig { n, ..base.clone() };
        let rep = fp_experiment(cfg, v0, &cc)?;
        let end = cc.horizon as f64;
        let final_gap = rep.gap_at(end);
        let reduction = rep.gap_at(0.1 * end) / final_gap;
        rows.push(SweepRow {
            n,
            lambda_n: if n == 0 { 0.0 } else { cfg.grid.ordered_eigenvalue(n)? },
            time_averaged_gap: rep.time_averaged_gap(),
            final_gap,
            reduction,
            synchronized: final_gap == 0.0 || reduction >= SYNC_FACTOR,
        });
    }
    let threshold = rows.iter().filter(|r| r.synchronized).map(|r| r.n).min();
    Ok(SweepReport { rows, threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_grid, WaveVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nudge_examples() {
        let g = make_grid(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = VorticityField::random(&g, &mut rng, 1.0, 0.5);
        assert_eq!(nudge_term(&u, &u, 8, 1.0).unwrap().norm_sq(Space::H), 0.0);

        let high = VorticityField::basis_vector(&g, WaveVector::new(3, 1).unwrap(), 1.0).unwrap();
        let v = u.sub(&high).unwrap();
        assert_eq!(nudge_term(&u, &v, 12, 1.0).unwrap().norm_sq(Space::H), 0.0);

        // four |k|^2 = 1 modes, lambda_4 = 1, nu = 2: unit gain
        let z = VorticityField::zeros(&g);
        let low = u.project_low(4).unwrap();
        let d = nudge_term(&low, &z, 4, 2.0).unwrap();
        assert_eq!(d.coeffs(), low.coeffs());
        assert!(matches!(nudge_term(&u, &z, g.len() + 1, 1.0), Err(Error::Domain(_))));
        assert_eq!(nudge_term(&u, &z, 0, 1.0).unwrap().norm_sq(Space::H), 0.0);
    }

    #[test]
    fn shift_reproduces_the_nudge() {
        let g = make_grid(6).unwrap();
        let op = NoiseOperator::new(&NoiseModel::MultiplicativeLowMode { m: 24 }, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let u = VorticityField::random(&g, &mut rng, 1.0, 0.0);
            let v = VorticityField::random(&g, &mut rng, 1.0, 0.0);
            for n in [1, 4, 12, 24] {
                let h = girsanov_shift(&u, &v, n, 0.7, &op).unwrap();
                let nudge = nudge_term(&u, &v, n, 0.7).unwrap();
                let back = op.apply(&v, &h).unwrap();
                let res = back.sub(&nudge).unwrap().norm(Space::H);
                assert!(res <= 1e-12 * nudge.norm(Space::H).max(1.0), "{res}");
                let hn = h.iter().map(|x| x * x).sum::<f64>().sqrt();
                let bound = 0.5 * 0.7 * g.ordered_eigenvalue(n).unwrap() * 25.0
                    * u.sub(&v).unwrap().project_low(n).unwrap().norm(Space::H);
                assert!(hn <= bound * (1.0 + 1e-12));
            }
            assert!(girsanov_shift(&u, &u, 24, 1.0, &op).unwrap().iter().all(|&x| x == 0.0));
        }
        let u = VorticityField::zeros(&g);
        assert!(matches!(girsanov_shift(&u, &u, 25, 1.0, &op), Err(Error::Config(_))));
        let degenerate = NoiseOperator::new(
            &NoiseModel::AdditiveDegenerate { z0: vec![WaveVector::new(1, 0).unwrap()], q: vec![1.0] },
            &g,
        )
        .unwrap();
        assert!(matches!(girsanov_shift(&u, &u, 4, 1.0, &degenerate), Err(Error::Config(_))));
    }

    fn small_cfg(noise: NoiseModel) -> SimConfig {
        let g = make_grid(6).unwrap();
        let mut cfg = SimConfig::new(&g, 0.5, 0.02, 1.0, noise);
        cfg.seed = 11;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        cfg.initial = VorticityField::random(&g, &mut rng, 1.0, 1.0);
        cfg
    }

    #[test]
    fn equal_starts_stay_bit_identical() {
        let cfg = small_cfg(NoiseModel::MultiplicativeLowMode { m: 8 });
        let mut stepper = Stepper::new(&cfg).unwrap();
        let mut stream = WienerStream::new(1, 0, cfg.dt, 8).unwrap();
        for scheme in [NudgeScheme::Explicit, NudgeScheme::Implicit] {
            for n in [0, 8] {
                let mut cs = CoupledState::new(cfg.initial.clone(), cfg.initial.clone(), n).unwrap();
                for _ in 0..50 {
                    let dw = stream.next_increment();
                    let expect_u = stepper.step(&cs.u, &dw).unwrap();
                    cs = step_coupled(&cs, &mut stepper, &dw, scheme, Some(&[0, 1, 2, 3, 4, 5, 6, 7][..n])).unwrap();
                    assert_eq!(cs.u.coeffs(), cs.v.coeffs());
                    assert_eq!(cs.u.coeffs(), expect_u.coeffs());
                }
                assert_eq!(cs.drift_integral, 0.0);
            }
        }
    }

    #[test]
    fn nudging_synchronizes_and_reports() {
        let cfg = small_cfg(NoiseModel::AdditiveDiagonal { a: 0.0, sigma0: 0.3 });
        let v0 = VorticityField::zeros(&cfg.grid);
        let rep = fp_experiment(&cfg, &v0, &CouplingConfig::new(cfg.grid.len(), 8, 4)).unwrap();
        assert_eq!(rep.mean_sq_gap[0], cfg.initial.norm_sq(Space::H));
        assert!(rep.mean_sq_gap.iter().all(|g| *g >= 0.0));
        assert!(rep.gap_at(4.0) < 1e-6 * rep.gap_at(0.0));
        let fit = rep.fit.as_ref().unwrap();
        assert_eq!(fit.kind, FitKind::Exponential);
        assert!(fit.rate > 0.0);
        assert!(rep.event_fractions.iter().all(|f| (0.0..=1.0).contains(f)));
        assert_eq!(rep.m_star, Some(1));
        let d = rep.drift.as_ref().unwrap();
        assert!(d.all_finite && d.mean > 0.0);
        assert!(rep.p_admissible.1.is_infinite());

        let mut csv = Vec::new();
        rep.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), rep.times.len() + 1);
        assert!(rep.to_json().unwrap().contains("\"m_star\": 1"));
    }

    #[test]
    fn gap_shrinks_with_more_nudged_modes() {
        let cfg = small_cfg(NoiseModel::AdditiveDiagonal { a: 0.0, sigma0: 0.3 });
        let v0 = VorticityField::zeros(&cfg.grid);
        let avg: Vec<f64> = [0, 4, 12, 24]
            .iter()
            .map(|&n| fp_experiment(&cfg, &v0, &CouplingConfig::new(n, 8, 3)).unwrap().time_averaged_gap())
            .collect();
        assert!(avg.windows(2).all(|w| w[1] <= w[0]), "{avg:?}");
    }

    #[test]
    fn experiment_rejects_bad_input() {
        let cfg = small_cfg(NoiseModel::default());
        let v0 = VorticityField::zeros(&cfg.grid);
        assert!(matches!(fp_experiment(&cfg, &v0, &CouplingConfig::new(4, 4, 2)), Err(Error::Statistics(_))));
        let mut odd = cfg.clone();
        odd.dt = 0.03;
        assert!(matches!(fp_experiment(&odd, &v0, &CouplingConfig::new(4, 8, 2)), Err(Error::Config(_))));
    }

    #[test]
    fn shells_close_at_eigenvalue_jumps() {
        let g = make_grid(2).unwrap();
        assert_eq!(shell_boundaries(&g), vec![4, 8, 12, 20, 24]);
        let g = make_grid(16).unwrap();
        let b = shell_boundaries(&g);
        assert_eq!(&b[..3], &[4, 8, 12]);
        assert_eq!(*b.last().unwrap(), g.len());
    }
}
