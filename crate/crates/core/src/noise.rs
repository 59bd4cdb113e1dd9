//! Wiener increments and the noise operators `G(u)`.
//!
//! Every supported operator is diagonal in the eigenbasis: direction `f_j`
//! of the noise space is mapped to a multiple of one basis vector `e_n`
//! of `H`, with a scalar gain that may depend on `|u|_H`. Constants of the
//! growth bound `|G(u)|_HS^2 <= C1 |u|^2 + C2` and the Lipschitz constant
//! `L_G` are the tight closed forms for each family.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::invariant_factors;
use crate::spectral::{SpectralGrid, Space, VorticityField, WaveVector};

/// The three supported operator families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseModel {
    /// `G f_n = sigma0 lambda_n^{-a} e_n` on every grid mode (`G = sigma0 A^{-a}`).
    AdditiveDiagonal { a: f64, sigma0: f64 },
    /// Vorticity noise `G h_k = q_k h_k` for `k` in `z0`, zero elsewhere.
    AdditiveDegenerate { z0: Vec<WaveVector>, q: Vec<f64> },
    /// `G(u) f_n = sqrt(|u|_H^2 + 1) / (n + 1) e_n` for `n <= m`.
    MultiplicativeLowMode { m: usize },
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::AdditiveDiagonal { a: 0.45, sigma0: 1.0 }
    }
}

impl NoiseModel {
    pub fn is_additive(&self) -> bool {
        !matches!(self, NoiseModel::MultiplicativeLowMode { .. })
    }

    /// `3/8 < a <= 1/2` for the diagonal family.
    pub fn in_elliptic_window(&self) -> bool {
        matches!(*self, NoiseModel::AdditiveDiagonal { a, .. } if a > 0.375 && a <= 0.5)
    }
}

/// Constants of the growth and Lipschitz bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseConstants {
    pub c1: f64,
    pub c2: f64,
    pub lipschitz: f64,
}

#[derive(Clone, Copy, Debug)]
struct Column {
    mode: usize,
    // H-norm of G f_j, before the state-dependent factor
    gain: f64,
}

/// A [`NoiseModel`] resolved against a grid.
#[derive(Clone, Debug)]
pub struct NoiseOperator {
    model: NoiseModel,
    grid: Arc<SpectralGrid>,
    columns: Vec<Column>,
    constants: NoiseConstants,
}

fn partial_inverse_squares(m: usize) -> f64 {
    (1..=m).map(|n| 1.0 / ((n + 1) as f64).powi(2)).sum()
}

impl NoiseOperator {
    pub fn new(model: &NoiseModel, grid: &Arc<SpectralGrid>) -> Result<Self> {
        let columns: Vec<Column> = match model {
            NoiseModel::AdditiveDiagonal { a, sigma0 } => {
                if !a.is_finite() || !sigma0.is_finite() || *sigma0 < 0.0 {
                    return Err(Error::Config(format!(
                        "noise: additive-diagonal needs finite a and sigma0 >= 0 (a = {a}, sigma0 = {sigma0})"
                    )));
                }
                (0..grid.len())
                    .map(|i| Column { mode: i, gain: sigma0 * grid.eigenvalue_at(i).powf(-a) })
                    .collect()
            }
            NoiseModel::AdditiveDegenerate { z0, q } => {
                if z0.is_empty() {
                    return Err(Error::Config("noise: z0 must be nonempty".into()));
                }
                if q.len() != z0.len() && q.len() != 1 {
                    return Err(Error::Config(format!(
                        "noise: q has {} entries for {} modes in z0",
                        q.len(),
                        z0.len()
                    )));
                }
                let mut seen = std::collections::BTreeSet::new();
                let mut cols = Vec::with_capacity(z0.len());
                for (j, k) in z0.iter().enumerate() {
                    let qk = if q.len() == 1 { q[0] } else { q[j] };
                    if !qk.is_finite() {
                        return Err(Error::Config(format!("noise: q for mode {k} is not finite")));
                    }
                    let mode = grid.index_of(*k).ok_or_else(|| {
                        Error::Config(format!("noise: z0 mode {k} is not on the grid"))
                    })?;
                    if !seen.insert(mode) {
                        return Err(Error::Config(format!("noise: z0 lists mode {k} twice")));
                    }
                    // vorticity amplitude q_k is velocity amplitude q_k / |k|
                    cols.push(Column { mode, gain: qk.abs() / grid.eigenvalue_at(mode).sqrt() });
                }
                cols
            }
            NoiseModel::MultiplicativeLowMode { m } => {
                if *m == 0 || *m > grid.len() {
                    return Err(Error::Config(format!(
                        "noise: multiplicative m = {m} outside 1..={}",
                        grid.len()
                    )));
                }
                (1..=*m).map(|n| Column { mode: n - 1, gain: 1.0 / (n + 1) as f64 }).collect()
            }
        };
        let hs: f64 = columns.iter().map(|c| c.gain * c.gain).sum();
        let constants = match model {
            NoiseModel::MultiplicativeLowMode { m } => {
                let s = partial_inverse_squares(*m);
                NoiseConstants { c1: s, c2: s, lipschitz: s.sqrt() }
            }
            _ => NoiseConstants { c1: 0.0, c2: hs, lipschitz: 0.0 },
        };
        Ok(NoiseOperator { model: model.clone(), grid: Arc::clone(grid), columns, constants })
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn constants(&self) -> NoiseConstants {
        self.constants
    }

    /// Number of driven directions of the noise space.
    pub fn active_modes(&self) -> usize {
        self.columns.len()
    }

    pub fn is_additive(&self) -> bool {
        self.model.is_additive()
    }

    /// Grid index of the basis vector hit by each direction.
    pub fn driven_modes(&self) -> Vec<usize> {
        self.columns.iter().map(|c| c.mode).collect()
    }

    /// `|G(u) f_j|_H` for every direction `j`.
    pub fn column_gains(&self, u: &VorticityField) -> Vec<f64> {
        let s = self.state_factor(u);
        self.columns.iter().map(|c| s * c.gain).collect()
    }

    fn state_factor(&self, u: &VorticityField) -> f64 {
        match self.model {
            NoiseModel::MultiplicativeLowMode { .. } => (u.norm_sq(Space::H) + 1.0).sqrt(),
            _ => 1.0,
        }
    }

    fn check_dim(&self, dw: &[f64]) -> Result<()> {
        if dw.len() != self.columns.len() {
            return Err(Error::Domain(format!(
                "noise increment has {} components, model drives {}",
                dw.len(),
                self.columns.len()
            )));
        }
        Ok(())
    }

    /// `target += G(u) dw`, returns nothing; `u` only matters for multiplicative noise.
    pub fn add_increment(&self, u: &VorticityField, dw: &[f64], target: &mut VorticityField) -> Result<()> {
        self.check_dim(dw)?;
        let s = self.state_factor(u);
        for (c, w) in self.columns.iter().zip(dw) {
            let h = s * c.gain * w;
            target.add_real_coord(c.mode, h * self.grid.eigenvalue_at(c.mode).sqrt());
        }
        Ok(())
    }

    /// `G(u) dw` as a field.
    pub fn apply(&self, u: &VorticityField, dw: &[f64]) -> Result<VorticityField> {
        let mut out = VorticityField::zeros(&self.grid);
        self.add_increment(u, dw, &mut out)?;
        Ok(out)
    }

    /// `|G(u)|_{L_HS(U,H)}^2`.
    pub fn hs_norm_sq(&self, u: &VorticityField) -> f64 {
        let s2 = match self.model {
            NoiseModel::MultiplicativeLowMode { .. } => u.norm_sq(Space::H) + 1.0,
            _ => 1.0,
        };
        s2 * self.columns.iter().map(|c| c.gain * c.gain).sum::<f64>()
    }

    fn low_mode_rank(&self) -> Result<usize> {
        match self.model {
            NoiseModel::MultiplicativeLowMode { m } => Ok(m),
            _ => Err(Error::Unsupported(
                "the right inverse g(u) is defined for the multiplicative low-mode family".into(),
            )),
        }
    }

    /// `g(u) x`: the canonical right inverse with `G(u) g(u) = P_M`.
    pub fn right_inverse(&self, u: &VorticityField, x: &VorticityField) -> Result<Vec<f64>> {
        self.low_mode_rank()?;
        let s = self.state_factor(u);
        Ok(self.columns.iter().map(|c| x.h_coord(c.mode) / (s * c.gain)).collect())
    }

    /// Operator norm of `g(u)`, `max_n (n+1) / sqrt(|u|^2 + 1)`.
    pub fn right_inverse_norm(&self, u: &VorticityField) -> Result<f64> {
        self.low_mode_rank()?;
        let s = self.state_factor(u);
        Ok(self.columns.iter().map(|c| 1.0 / (s * c.gain)).fold(0.0, f64::max))
    }
}

/// `G(u) dW` for a model resolved on the state's grid.
pub fn apply_noise(op: &NoiseOperator, u: &VorticityField, dw: &[f64]) -> Result<VorticityField> {
    op.apply(u, dw)
}

pub fn hs_norm_sq(op: &NoiseOperator, u: &VorticityField) -> f64 {
    op.hs_norm_sq(u)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LipschitzEstimate {
    pub max_ratio: f64,
    pub pairs: usize,
    pub bound: f64,
}

/// Largest sampled `|G(u) - G(v)|_HS / |u - v|_H` over all sample pairs.
///
/// The Hilbert-Schmidt distance is summed column by column from the
/// evaluated gains, independently of the stored constant.
pub fn lipschitz_check(op: &NoiseOperator, samples: &[VorticityField]) -> Result<LipschitzEstimate> {
    if samples.len() < 2 {
        return Err(Error::Domain("lipschitz check needs at least two samples".into()));
    }
    let gains: Vec<Vec<f64>> = samples.iter().map(|u| op.column_gains(u)).collect();
    let mut max_ratio = 0.0f64;
    let mut pairs = 0;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let dist = samples[i].sub(&samples[j])?.norm(Space::H);
            if dist == 0.0 {
                continue;
            }
            let hs: f64 = gains[i].iter().zip(&gains[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            max_ratio = max_ratio.max(hs.sqrt() / dist);
            pairs += 1;
        }
    }
    Ok(LipschitzEstimate { max_ratio, pairs, bound: op.constants().lipschitz })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RightInverseReport {
    /// `|G(u) g(u) x - P_M x|_H`
    pub residual: f64,
    pub x_norm: f64,
    /// operator norm of `g(u)`
    pub g_norm: f64,
    /// `M + 1`, the uniform bound on `|g(u)|`
    pub g_bound: f64,
}

pub fn right_inverse_check(op: &NoiseOperator, u: &VorticityField, x: &VorticityField) -> Result<RightInverseReport> {
    let m = op.low_mode_rank()?;
    let gx = op.right_inverse(u, x)?;
    let back = op.apply(u, &gx)?;
    let residual = back.sub(&x.project_low(m)?)?.norm(Space::H);
    Ok(RightInverseReport {
        residual,
        x_norm: x.norm(Space::H),
        g_norm: op.right_inverse_norm(u)?,
        g_bound: (m + 1) as f64,
    })
}

/// The three lattice conditions on a forcing set `Z0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Z0Report {
    pub symmetric: bool,
    pub two_norms: bool,
    pub generates: bool,
    pub invariant_factors: Vec<i64>,
}

pub fn z0_conditions(z0: &[WaveVector]) -> Result<Z0Report> {
    if z0.is_empty() {
        return Err(Error::Domain("z0 must be nonempty".into()));
    }
    let set: std::collections::BTreeSet<WaveVector> = z0.iter().copied().collect();
    let symmetric = set.iter().all(|k| set.contains(&k.neg()));
    let first = z0[0].norm_sq();
    let two_norms = z0.iter().any(|k| k.norm_sq() != first);
    let rows = vec![
        z0.iter().map(|k| k.k1 as i64).collect::<Vec<_>>(),
        z0.iter().map(|k| k.k2 as i64).collect::<Vec<_>>(),
    ];
    let mut factors = invariant_factors(&rows);
    factors.resize(2, 0);
    let generates = factors.iter().all(|&d| d == 1);
    Ok(Z0Report { symmetric, two_norms, generates, invariant_factors: factors })
}

/// Reproducible Gaussian increments `dW_j ~ N(0, dt)` for one trajectory.
#[derive(Clone, Debug)]
pub struct WienerStream {
    seed: u64,
    stream_id: u64,
    dt: f64,
    active_modes: usize,
    sqrt_dt: f64,
    rng: ChaCha8Rng,
}

impl WienerStream {
    pub fn new(seed: u64, stream_id: u64, dt: f64, active_modes: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Ok(WienerStream { seed, stream_id, dt, active_modes, sqrt_dt: dt.sqrt(), rng })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn active_modes(&self) -> usize {
        self.active_modes
    }

    pub fn fill(&mut self, buf: &mut [f64]) {
        for x in buf.iter_mut() {
            let z: f64 = self.rng.sample(StandardNormal);
            *x = self.sqrt_dt * z;
        }
    }

    pub fn next_increment(&mut self) -> Vec<f64> {
        let mut v = vec![0.0; self.active_modes];
        self.fill(&mut v);
        v
    }
}

pub fn sample_increments(stream: &mut WienerStream, n_steps: usize) -> Vec<Vec<f64>> {
    (0..n_steps).map(|_| stream.next_increment()).collect()
}
