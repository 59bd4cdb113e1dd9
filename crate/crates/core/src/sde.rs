//! Time integration of the stochastic Navier-Stokes system in vorticity form
//! and of the linear stochastic Stokes (Ornstein-Uhlenbeck) equation.
//!
//! The Navier-Stokes update is exponential Euler-Maruyama: advection, forcing
//! and noise are applied explicitly, then every mode is multiplied by the
//! integrating factor `exp(-nu |k|^2 dt)`.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::{NoiseModel, NoiseOperator, WienerStream};
use crate::nonlin::{advect, max_speed, AdvectionWorkspace};
use crate::spectral::{SpectralGrid, Space, VorticityField, WaveVector};

/// Advective CFL number above which a trajectory is flagged.
pub const CFL_LIMIT: f64 = 0.5;

/// Parameters of one stochastic Navier-Stokes run.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub grid: Arc<SpectralGrid>,
    /// kinematic viscosity
    pub nu: f64,
    /// time-independent forcing, given as a vorticity (curl of the velocity forcing)
    pub forcing: VorticityField,
    pub dt: f64,
    pub horizon: f64,
    pub noise: NoiseModel,
    pub seed: u64,
    pub initial: VorticityField,
    /// `false` drops the nonlinear term (linear control runs)
    pub advection: bool,
    /// record observables every this many steps
    pub record_every: usize,
    /// modes whose coefficients are kept in the record
    pub recorded_modes: Vec<WaveVector>,
    /// accumulate per-mode statistics from this time on
    pub stats_from: Option<f64>,
    /// keep a field snapshot every this many records
    pub snapshot_every: Option<usize>,
}

impl SimConfig {
    pub fn new(grid: &Arc<SpectralGrid>, nu: f64, dt: f64, horizon: f64, noise: NoiseModel) -> Self {
        SimConfig {
            grid: Arc::clone(grid),
            nu,
            forcing: VorticityField::zeros(grid),
            dt,
            horizon,
            noise,
            seed: 0,
            initial: VorticityField::zeros(grid),
            advection: true,
            record_every: 1,
            recorded_modes: Vec::new(),
            stats_from: None,
            snapshot_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::Config(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(Error::Config(format!(
                "horizon {} must be finite and at least dt = {}",
                self.horizon, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be >= 1".into()));
        }
        for f in [&self.forcing, &self.initial] {
            if f.grid().cutoff() != self.grid.cutoff() {
                return Err(Error::Config("forcing/initial field on a different grid".into()));
            }
        }
        for k in &self.recorded_modes {
            if self.grid.index_of(*k).is_none() {
                return Err(Error::Config(format!("recorded mode {k} is not on the grid")));
            }
        }
        NoiseOperator::new(&self.noise, &self.grid)?;
        Ok(())
    }

    /// Number of steps, `round(horizon / dt)`.
    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round().max(1.0) as usize
    }

    pub fn noise_operator(&self) -> Result<NoiseOperator> {
        NoiseOperator::new(&self.noise, &self.grid)
    }
}

/// Reusable integrator state for one trajectory.
pub struct Stepper {
    grid: Arc<SpectralGrid>,
    nu: f64,
    dt: f64,
    decay: Vec<f64>,
    forcing: VorticityField,
    noise: NoiseOperator,
    ws: AdvectionWorkspace,
    advection: bool,
}

impl Stepper {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let decay = cfg.grid.eigenvalues().iter().map(|l| (-cfg.nu * l * cfg.dt).exp()).collect();
        Ok(Stepper {
            grid: Arc::clone(&cfg.grid),
            nu: cfg.nu,
            dt: cfg.dt,
            decay,
            forcing: cfg.forcing.clone(),
            noise: cfg.noise_operator()?,
            ws: AdvectionWorkspace::new(&cfg.grid),
            advection: cfg.advection,
        })
    }

    pub fn noise(&self) -> &NoiseOperator {
        &self.noise
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Per-mode integrating factors `exp(-nu lambda_k dt)`.
    pub fn decay(&self) -> &[f64] {
        &self.decay
    }

    /// `psi + dt (f - u.grad psi) + G(psi) dW`, before the integrating factor.
    pub fn explicit_part(&mut self, psi: &VorticityField, dw: &[f64]) -> Result<VorticityField> {
        let mut y = psi.clone();
        y.axpy(self.dt, &self.forcing)?;
        if self.advection {
            let adv = advect(psi, psi, &mut self.ws)?;
            y.axpy(-self.dt, &adv)?;
        }
        self.noise.add_increment(psi, dw, &mut y)?;
        Ok(y)
    }

    pub fn apply_decay(&self, y: &mut VorticityField) {
        for (c, e) in y.coeffs_mut().iter_mut().zip(&self.decay) {
            *c *= *e;
        }
    }

    /// One semi-implicit Euler-Maruyama step of the Navier-Stokes system.
    pub fn step(&mut self, psi: &VorticityField, dw: &[f64]) -> Result<VorticityField> {
        let mut y = self.explicit_part(psi, dw)?;
        self.apply_decay(&mut y);
        Ok(y)
    }

    /// Exact transition of the linear stochastic Stokes equation over `dt`.
    pub fn step_stokes(&self, z: &VorticityField, dw: &[f64]) -> Result<VorticityField> {
        if !self.noise.is_additive() {
            return Err(Error::Unsupported(
                "the exact Ornstein-Uhlenbeck step needs an additive noise model".into(),
            ));
        }
        if dw.len() != self.noise.active_modes() {
            return Err(Error::Domain(format!(
                "noise increment has {} components, model drives {}",
                dw.len(),
                self.noise.active_modes()
            )));
        }
        let mut out = z.clone();
        let forcing = self.forcing.coeffs();
        let eigs = self.grid.eigenvalues();
        for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
            let e = self.decay[i];
            *c = *c * e + forcing[i] * ((1.0 - e) / (self.nu * eigs[i]));
        }
        let gains = self.noise.column_gains(z);
        let inv_sqrt_dt = 1.0 / self.dt.sqrt();
        for ((mode, gain), w) in self.noise.driven_modes().into_iter().zip(gains).zip(dw) {
            let lambda = eigs[mode];
            let e = self.decay[mode];
            let sd = ((1.0 - e * e) / (2.0 * self.nu * lambda)).sqrt();
            let h = sd * gain * w * inv_sqrt_dt;
            out.add_real_coord(mode, h * lambda.sqrt());
        }
        Ok(out)
    }

    /// Advective CFL number `dt max|u| K` of the dealiased velocity.
    pub fn cfl_number(&mut self, psi: &VorticityField) -> Result<f64> {
        Ok(self.dt * max_speed(psi, &mut self.ws)? * self.grid.cutoff() as f64)
    }
}

pub(crate) fn check_finite(psi: &VorticityField, step: usize, dt: f64) -> Result<()> {
    if psi.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence {
            step,
            time: step as f64 * dt,
            detail: "nonfinite spectral coefficient".into(),
        })
    }
}

/// One Navier-Stokes step; builds a fresh [`Stepper`], use that type for loops.
pub fn step_sns(state: &VorticityField, cfg: &SimConfig, dw: &[f64]) -> Result<VorticityField> {
    let next = Stepper::new(cfg)?.step(state, dw)?;
    check_finite(&next, 1, cfg.dt)?;
    Ok(next)
}

/// One exact Ornstein-Uhlenbeck step; builds a fresh [`Stepper`].
pub fn step_stokes(state: &VorticityField, cfg: &SimConfig, dw: &[f64]) -> Result<VorticityField> {
    Stepper::new(cfg)?.step_stokes(state, dw)
}

/// Which dynamics a trajectory integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Scheme {
    NavierStokes,
    Stokes,
}

/// Running mean and variance of every `H` coordinate.
#[derive(Clone, Debug, Serialize)]
pub struct ModeStatistics {
    pub from_time: f64,
    pub samples: usize,
    pub mean: Vec<f64>,
    m2: Vec<f64>,
}

impl ModeStatistics {
    pub fn new(len: usize, from_time: f64) -> Self {
        ModeStatistics { from_time, samples: 0, mean: vec![0.0; len], m2: vec![0.0; len] }
    }

    pub fn push(&mut self, psi: &VorticityField) {
        self.samples += 1;
        let n = self.samples as f64;
        for (i, (m, s)) in self.mean.iter_mut().zip(self.m2.iter_mut()).enumerate() {
            let x = psi.h_coord(i);
            let d = x - *m;
            *m += d / n;
            *s += d * (x - *m);
        }
    }

    /// Sample variance per grid mode (zero with fewer than two samples).
    pub fn variance(&self) -> Vec<f64> {
        if self.samples < 2 {
            return vec![0.0; self.m2.len()];
        }
        let d = (self.samples - 1) as f64;
        self.m2.iter().map(|s| s / d).collect()
    }
}

/// Observables sampled along one trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// `|u|_H^2`
    pub energy: Vec<f64>,
    /// `|psi|_{L^2}^2 = |u|_V^2`
    pub enstrophy: Vec<f64>,
    pub modes: Vec<WaveVector>,
    /// per recorded mode, the velocity amplitude `psi_k / |k|` at each sample
    pub mode_series: Vec<Vec<Complex64>>,
    pub mode_stats: Option<ModeStatistics>,
    pub snapshots: Vec<(f64, VorticityField)>,
    pub max_cfl: f64,
    pub cfl_warnings: usize,
}

impl TrajectoryRecord {
    fn new(modes: &[WaveVector]) -> Self {
        TrajectoryRecord {
            times: Vec::new(),
            energy: Vec::new(),
            enstrophy: Vec::new(),
            modes: modes.to_vec(),
            mode_series: vec![Vec::new(); modes.len()],
            mode_stats: None,
            snapshots: Vec::new(),
            max_cfl: 0.0,
            cfl_warnings: 0,
        }
    }

    fn push(&mut self, t: f64, psi: &VorticityField) {
        self.times.push(t);
        self.energy.push(psi.norm_sq(Space::H));
        self.enstrophy.push(psi.enstrophy());
        for (k, series) in self.modes.iter().zip(self.mode_series.iter_mut()) {
            let c = psi.coeff(*k).expect("recorded modes are validated");
            series.push(c / k.norm());
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with columns `t, energy, enstrophy` and real/imaginary parts of
    /// each recorded mode.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t,energy,enstrophy")?;
        for k in &self.modes {
            write!(w, ",re({};{}),im({};{})", k.k1, k.k2, k.k1, k.k2)?;
        }
        writeln!(w)?;
        for i in 0..self.times.len() {
            write!(w, "{:e},{:e},{:e}", self.times[i], self.energy[i], self.enstrophy[i])?;
            for s in &self.mode_series {
                write!(w, ",{:e},{:e}", s[i].re, s[i].im)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Integrates `scheme` from `initial` on the Wiener stream `stream_id`.
pub fn run_trajectory(
    cfg: &SimConfig,
    scheme: Scheme,
    initial: &VorticityField,
    stream_id: u64,
) -> Result<TrajectoryRecord> {
    let mut stepper = Stepper::new(cfg)?;
    if initial.grid().cutoff() != cfg.grid.cutoff() {
        return Err(Error::Config("initial field on a different grid".into()));
    }
    let n_steps = cfg.n_steps();
    let mut stream = WienerStream::new(cfg.seed, stream_id, cfg.dt, stepper.noise().active_modes())?;
    let mut dw = vec![0.0; stream.active_modes()];
    let mut rec = TrajectoryRecord::new(&cfg.recorded_modes);
    let mut psi = initial.clone();
    let mut stats = cfg.stats_from.map(|t0| ModeStatistics::new(cfg.grid.len(), t0));

    let mut n_records = 0usize;
    let mut observe = |rec: &mut TrajectoryRecord, step: usize, psi: &VorticityField, stepper: &mut Stepper| -> Result<()> {
        let t = step as f64 * cfg.dt;
        rec.push(t, psi);
        if let Some(every) = cfg.snapshot_every {
            if every > 0 && n_records % every == 0 {
                rec.snapshots.push((t, psi.clone()));
            }
        }
        n_records += 1;
        if scheme == Scheme::NavierStokes && cfg.advection {
            let c = stepper.cfl_number(psi)?;
            rec.max_cfl = rec.max_cfl.max(c);
            if c > CFL_LIMIT {
                rec.cfl_warnings += 1;
            }
        }
        Ok(())
    };

    observe(&mut rec, 0, &psi, &mut stepper)?;
    for step in 1..=n_steps {
        stream.fill(&mut dw);
        psi = match scheme {
            Scheme::NavierStokes => stepper.step(&psi, &dw)?,
            Scheme::Stokes => stepper.step_stokes(&psi, &dw)?,
        };
        check_finite(&psi, step, cfg.dt)?;
        let t = step as f64 * cfg.dt;
        if let Some(s) = stats.as_mut() {
            if t >= s.from_time - 0.5 * cfg.dt {
                s.push(&psi);
            }
        }
        if step % cfg.record_every == 0 || step == n_steps {
            observe(&mut rec, step, &psi, &mut stepper)?;
        }
    }
    rec.mode_stats = stats;
    Ok(rec)
}

/// Navier-Stokes trajectory from `cfg.initial` on stream 0.
pub fn simulate(cfg: &SimConfig) -> Result<TrajectoryRecord> {
    run_trajectory(cfg, Scheme::NavierStokes, &cfg.initial, 0)
}

/// Linear stochastic Stokes trajectory from `cfg.initial` on stream 0.
pub fn simulate_stokes(cfg: &SimConfig) -> Result<TrajectoryRecord> {
    run_trajectory(cfg, Scheme::Stokes, &cfg.initial, 0)
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityRow {
    pub t: f64,
    /// `E|u(t)|^2 + nu int E|u|_V^2`
    pub lhs: f64,
    /// `|u0|^2 + (t/nu) |f|_{V'}^2 + t C2`
    pub rhs: f64,
    pub holds: bool,
}

/// Monte-Carlo check of the Ito energy identity
/// `E|u(t)|^2 + 2 nu int E|u|_V^2 = |u0|^2 + 2 int E<f,u> + int E|G(u)|_HS^2`.
#[derive(Clone, Debug, Serialize)]
pub struct BalanceReport {
    pub replicas: usize,
    pub times: Vec<f64>,
    pub mean_energy: Vec<f64>,
    /// `2 nu int E|u|_V^2`
    pub mean_dissipation: Vec<f64>,
    /// `2 int E<f,u>`
    pub mean_forcing_work: Vec<f64>,
    /// `int E|G(u)|_HS^2`
    pub mean_noise_input: Vec<f64>,
    pub residual_mean: Vec<f64>,
    pub residual_stderr: Vec<f64>,
    /// largest `|residual| / stderr` over the sample times with nonzero stderr
    pub max_z: f64,
    pub max_abs_residual: f64,
    /// present when `C1 = 0`
    pub inequality: Option<Vec<InequalityRow>>,
}

impl BalanceReport {
    pub fn inequality_holds(&self) -> Option<bool> {
        self.inequality.as_ref().map(|rows| rows.iter().all(|r| r.holds))
    }
}

/// Runs `n_replicas` Navier-Stokes trajectories and evaluates the discrete
/// energy balance at every record time.
///
/// The dissipation integral is accumulated with the quadrature matched to
/// the integrating factor, `sum_k (1 - e^{-2 nu lambda_k dt}) |y_k|_H^2` per
/// step (`y` the pre-factor state), which converges to `2 nu int |u|_V^2 dt`.
/// The Ito term uses `|G(u^n)|_HS^2 dt` at the left end point.
pub fn energy_balance(cfg: &SimConfig, n_replicas: usize) -> Result<BalanceReport> {
    if n_replicas < 2 {
        return Err(Error::Statistics("energy balance needs at least 2 replicas".into()));
    }
    let mut stepper = Stepper::new(cfg)?;
    let n_steps = cfg.n_steps();
    let damp: Vec<f64> = stepper.decay().iter().map(|e| 1.0 - e * e).collect();
    let eigs: Vec<f64> = cfg.grid.eigenvalues().to_vec();
    let e0 = cfg.initial.norm_sq(Space::H);

    let mut times = Vec::new();
    let mut per_replica: Vec<Vec<[f64; 4]>> = Vec::with_capacity(n_replicas);
    for r in 0..n_replicas {
        let mut stream =
            WienerStream::new(cfg.seed, r as u64, cfg.dt, stepper.noise().active_modes())?;
        let mut dw = vec![0.0; stream.active_modes()];
        let mut psi = cfg.initial.clone();
        let (mut diss, mut work, mut input) = (0.0, 0.0, 0.0);
        let mut rows = vec![[e0, 0.0, 0.0, 0.0]];
        if r == 0 {
            times.push(0.0);
        }
        for step in 1..=n_steps {
            work += 2.0 * cfg.dt * cfg.forcing.inner(&psi, Space::H)?;
            input += cfg.dt * stepper.noise().hs_norm_sq(&psi);
            stream.fill(&mut dw);
            let mut y = stepper.explicit_part(&psi, &dw)?;
            diss += y
                .coeffs()
                .iter()
                .zip(&damp)
                .zip(&eigs)
                .map(|((c, d), l)| d * c.norm_sqr() / l)
                .sum::<f64>();
            stepper.apply_decay(&mut y);
            psi = y;
            check_finite(&psi, step, cfg.dt)?;
            if step % cfg.record_every == 0 || step == n_steps {
                rows.push([psi.norm_sq(Space::H), diss, work, input]);
                if r == 0 {
                    times.push(step as f64 * cfg.dt);
                }
            }
        }
        per_replica.push(rows);
    }

    let n = n_replicas as f64;
    let m = times.len();
    let mut report = BalanceReport {
        replicas: n_replicas,
        times: times.clone(),
        mean_energy: vec![0.0; m],
        mean_dissipation: vec![0.0; m],
        mean_forcing_work: vec![0.0; m],
        mean_noise_input: vec![0.0; m],
        residual_mean: vec![0.0; m],
        residual_stderr: vec![0.0; m],
        max_z: 0.0,
        max_abs_residual: 0.0,
        inequality: None,
    };
    for i in 0..m {
        let res: Vec<f64> = per_replica
            .iter()
            .map(|rows| {
                let [e, d, f, g] = rows[i];
                e + d - e0 - f - g
            })
            .collect();
        let mean = res.iter().sum::<f64>() / n;
        let var = res.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        for (j, slot) in [
            &mut report.mean_energy,
            &mut report.mean_dissipation,
            &mut report.mean_forcing_work,
            &mut report.mean_noise_input,
        ]
        .into_iter()
        .enumerate()
        {
            slot[i] = per_replica.iter().map(|rows| rows[i][j]).sum::<f64>() / n;
        }
        report.residual_mean[i] = mean;
        report.residual_stderr[i] = se;
        report.max_abs_residual = report.max_abs_residual.max(mean.abs());
        if se > 0.0 {
            report.max_z = report.max_z.max(mean.abs() / se);
        }
    }

    let consts = stepper.noise().constants();
    if consts.c1 == 0.0 {
        let f_dual = cfg.forcing.norm_sq(Space::Frac(-0.5));
        let rows = (0..m)
            .map(|i| {
                let t = times[i];
                let lhs = report.mean_energy[i] + 0.5 * report.mean_dissipation[i];
                let rhs = e0 + t * f_dual / cfg.nu + t * consts.c2;
                // round-off slack at t = 0 where both sides equal |u0|^2
                InequalityRow { t, lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-12) }
            })
            .collect();
        report.inequality = Some(rows);
    }
    Ok(report)
}

/// Viscosity thresholds of the synchronization and uniqueness results.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ViscosityThresholds {
    pub c1: f64,
    pub lambda1: f64,
    /// `3 C1 / (4 lambda1)`
    pub fp_threshold: f64,
    /// `11 C1 / (4 lambda1)`
    pub uniq_threshold: f64,
}

impl ViscosityThresholds {
    /// Supremum of admissible decay exponents, `nu lambda1 / (2 C1) - 3/8`;
    /// infinite for bounded noise.
    pub fn p_sup(&self, nu: f64) -> f64 {
        if self.c1 == 0.0 {
            f64::INFINITY
        } else {
            nu * self.lambda1 / (2.0 * self.c1) - 0.375
        }
    }

    /// Bounded noise (`C1 = 0`): the decay is exponential for every `nu`.
    pub fn exponential_regime(&self) -> bool {
        self.c1 == 0.0
    }
}

pub fn viscosity_thresholds(c1: f64, lambda1: f64) -> Result<ViscosityThresholds> {
    if !(lambda1 > 0.0) {
        return Err(Error::Domain(format!("lambda1 must be positive, got {lambda1}")));
    }
    if !(c1 >= 0.0) {
        return Err(Error::Domain(format!("C1 must be nonnegative, got {c1}")));
    }
    Ok(ViscosityThresholds {
        c1,
        lambda1,
        fp_threshold: 3.0 * c1 / (4.0 * lambda1),
        uniq_threshold: 11.0 * c1 / (4.0 * lambda1),
    })
}
