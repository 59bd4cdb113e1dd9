//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//! out = "runs/ou"            # optional, `--out` wins
//!
//! [sim]
//! cutoff = 8
//! nu = 1.0
//! dt = 0.01
//! horizon = 100.0
//! record_every = 10
//! recorded_modes = [[1, 0], [0, 1]]
//! stats_from = 25.0
//!
//! [sim.initial]
//! kind = "random"
//! amplitude = 1.0
//! decay = 1.0
//!
//! [sim.forcing]
//! kind = "modes"
//! modes = [{ k1 = 0, k2 = 4, value = 2000.0 }]
//!
//! [noise]
//! kind = "additive-diagonal"
//! a = 0.45
//! sigma0 = 1.0
//! ```
//!
//! Optional sections `[coupling]`, `[ergodic]`, `[activation]`,
//! `[validation]`, `[oracle]` and `[balance]` parametrize the subcommands
//! that use them. Unknown keys are rejected everywhere.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::coupling::{CouplingConfig, NudgeScheme};
use crate::ergodic::{EventSet, Observable};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::sde::SimConfig;
use crate::snapshot::read_snapshots;
use crate::spectral::{make_grid, SpectralGrid, VorticityField, WaveVector};

/// Random-stream ids reserved for fields drawn from the root seed; the
/// Wiener streams use small ids.
pub const INITIAL_STREAM: u64 = 1 << 40;
pub const FORCING_STREAM: u64 = INITIAL_STREAM + 1;
pub const SECOND_START_STREAM: u64 = INITIAL_STREAM + 2;
pub const SAMPLE_STREAM: u64 = INITIAL_STREAM + 3;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeValue {
    pub k1: i32,
    pub k2: i32,
    /// coordinate along the unit `H` eigenvector of the mode
    pub value: f64,
}

/// How a vorticity field is specified.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    #[default]
    Zero,
    /// Gaussian `H` coordinates with standard deviation `amplitude lambda^{-decay/2}`
    Random { amplitude: f64, #[serde(default)] decay: f64 },
    Modes { modes: Vec<ModeValue> },
    /// the last block of a snapshot file
    Snapshot { path: PathBuf },
}

impl FieldSpec {
    /// Builds the field; random fields draw from `seed` on `stream`,
    /// relative paths resolve against `base`.
    pub fn build(&self, grid: &Arc<SpectralGrid>, seed: u64, stream: u64, base: &Path) -> Result<VorticityField> {
        match self {
            FieldSpec::Zero => Ok(VorticityField::zeros(grid)),
            FieldSpec::Random { amplitude, decay } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0 && decay.is_finite()) {
                    return Err(Error::Config("random field needs a finite amplitude >= 0 and decay".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream);
                Ok(VorticityField::random(grid, &mut rng, *amplitude, *decay))
            }
            FieldSpec::Modes { modes } => {
                let mut h = vec![0.0; grid.len()];
                for m in modes {
                    let k = WaveVector::new(m.k1, m.k2).map_err(|e| Error::Config(e.to_string()))?;
                    let i = grid
                        .index_of(k)
                        .ok_or_else(|| Error::Config(format!("mode {k} is not on the grid")))?;
                    h[i] += m.value;
                }
                VorticityField::from_h_coords(grid, &h)
            }
            FieldSpec::Snapshot { path } => {
                let full = if path.is_absolute() { path.clone() } else { base.join(path) };
                let file = fs::File::open(&full)
                    .map_err(|e| Error::Config(format!("snapshot {}: {e}", full.display())))?;
                let mut all = read_snapshots(BufReader::new(file), Some(grid))
                    .map_err(|e| Error::Config(format!("snapshot {}: {e}", full.display())))?;
                all.pop()
                    .map(|(_, f)| f)
                    .ok_or_else(|| Error::Config(format!("snapshot {} is empty", full.display())))
            }
        }
    }
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub cutoff: usize,
    pub nu: f64,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "yes")]
    pub advection: bool,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default)]
    pub recorded_modes: Vec<[i32; 2]>,
    pub stats_from: Option<f64>,
    pub snapshot_every: Option<usize>,
    #[serde(default)]
    pub initial: FieldSpec,
    #[serde(default)]
    pub forcing: FieldSpec,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    pub n: usize,
    pub replicas: usize,
    pub horizon: u32,
    #[serde(default)]
    pub scheme: NudgeScheme,
    pub fit_start: Option<f64>,
    /// start of the nudged solution
    #[serde(default)]
    pub v0: FieldSpec,
    /// explicit list of `N` values to sweep
    pub sweep: Option<Vec<usize>>,
    /// sweep `N = 0` and the first this many eigenvalue shells
    pub sweep_shells: Option<usize>,
}

fn quarter() -> f64 {
    0.25
}

fn ten() -> usize {
    10
}

fn twenty() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingSection {
    pub events: Vec<EventSet>,
    pub t_grid: Vec<f64>,
    pub replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgodicSection {
    pub observables: Vec<Observable>,
    /// number of evenly spaced averaging windows
    #[serde(default = "ten")]
    pub windows: usize,
    /// burn-in as a fraction of the horizon
    #[serde(default = "quarter")]
    pub burn_in: f64,
    #[serde(default = "twenty")]
    pub bins: usize,
    /// when present, a second run from this start is compared in law
    pub second_start: Option<FieldSpec>,
    pub mixing: Option<MixingSection>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivationSection {
    #[serde(default = "quarter")]
    pub burn_in: f64,
}

fn hundred() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSection {
    #[serde(default = "hundred")]
    pub samples: usize,
    /// standard deviation of the sampled `H` coordinates
    #[serde(default = "unit")]
    pub amplitude: f64,
}

fn unit() -> f64 {
    1.0
}

fn fifty() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "fifty")]
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceSection {
    pub replicas: usize,
}

/// The whole file.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub sim: SimSection,
    #[serde(default)]
    pub noise: NoiseModel,
    pub coupling: Option<CouplingSection>,
    pub ergodic: Option<ErgodicSection>,
    pub activation: Option<ActivationSection>,
    pub validation: Option<ValidationSection>,
    pub oracle: Option<OracleSection>,
    pub balance: Option<BalanceSection>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads the file and returns the config with the SHA-256 of its bytes.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let bytes = fs::read(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))?;
        let hash = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        Ok((Self::parse(&text)?, hash))
    }

    pub fn grid(&self) -> Result<Arc<SpectralGrid>> {
        make_grid(self.sim.cutoff).map_err(|e| Error::Config(format!("sim.cutoff: {e}")))
    }

    /// Resolves `[sim]` and `[noise]` into a validated [`SimConfig`].
    pub fn sim_config(&self, base: &Path) -> Result<SimConfig> {
        let s = &self.sim;
        let grid = self.grid()?;
        let mut cfg = SimConfig::new(&grid, s.nu, s.dt, s.horizon, self.noise.clone());
        cfg.seed = self.seed;
        cfg.advection = s.advection;
        cfg.record_every = s.record_every;
        cfg.stats_from = s.stats_from;
        cfg.snapshot_every = s.snapshot_every;
        cfg.recorded_modes = s
            .recorded_modes
            .iter()
            .map(|&[a, b]| WaveVector::new(a, b).map_err(|e| Error::Config(format!("sim.recorded_modes: {e}"))))
            .collect::<Result<_>>()?;
        cfg.initial = s.initial.build(&grid, self.seed, INITIAL_STREAM, base)?;
        cfg.forcing = s.forcing.build(&grid, self.seed, FORCING_STREAM, base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn coupling_config(&self) -> Result<(CouplingConfig, &CouplingSection)> {
        let c = self.coupling.as_ref().ok_or_else(|| Error::Config("missing [coupling] section".into()))?;
        let mut cc = CouplingConfig::new(c.n, c.replicas, c.horizon);
        cc.scheme = c.scheme;
        if let Some(f) = c.fit_start {
            cc.fit_start = f;
        }
        Ok((cc, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
seed = 5
[sim]
cutoff = 4
nu = 0.5
dt = 0.01
horizon = 1.0
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let rc = RunConfig::parse(BASE).unwrap();
        assert_eq!(rc.noise, NoiseModel::default());
        let cfg = rc.sim_config(Path::new(".")).unwrap();
        assert_eq!(cfg.record_every, 1);
        assert!(cfg.advection);
        assert_eq!(cfg.initial.norm_sq(crate::spectral::Space::H), 0.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = format!("{BASE}viscosity = 2\n");
        assert!(matches!(RunConfig::parse(&bad), Err(Error::Config(_))));
        let bad = BASE.replace("nu = 0.5", "nu = 0.5\nnuu = 1");
        let err = RunConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("nuu"), "{err}");
        let bad = format!("{BASE}[noise]\nkind = \"multiplicative-low-mode\"\nm = 3\nextra = 1\n");
        assert!(RunConfig::parse(&bad).is_err());
    }

    #[test]
    fn sections_parse() {
        let text = format!(
            r#"{BASE}
[sim.initial]
kind = "random"
amplitude = 2.0
decay = 1.0
[sim.forcing]
kind = "modes"
modes = [{{ k1 = 0, k2 = 2, value = 3.0 }}]
[noise]
kind = "additive-degenerate"
z0 = [{{ k1 = 1, k2 = 0 }}, {{ k1 = -1, k2 = 0 }}]
q = [1.0]
[coupling]
n = 4
replicas = 8
horizon = 3
scheme = "implicit"
[coupling.v0]
kind = "zero"
[ergodic]
observables = [{{ kind = "energy" }}, {{ kind = "mode-real", k1 = 1, k2 = 0 }}]
[ergodic.mixing]
events = [{{ kind = "below", observable = {{ kind = "energy" }}, threshold = 1.0 }}]
t_grid = [0.5, 1.0]
replicas = 4
"#
        );
        let rc = RunConfig::parse(&text).unwrap();
        let cfg = rc.sim_config(Path::new(".")).unwrap();
        let again = rc.sim_config(Path::new(".")).unwrap();
        assert_eq!(cfg.initial.coeffs(), again.initial.coeffs());
        let k = WaveVector::new(0, 2).unwrap();
        let i = cfg.grid.index_of(k).unwrap();
        assert!((cfg.forcing.h_coord(i) - 3.0).abs() < 1e-15);
        let (cc, _) = rc.coupling_config().unwrap();
        assert_eq!(cc.scheme, NudgeScheme::Implicit);
        assert_eq!(rc.ergodic.unwrap().burn_in, 0.25);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let rc = RunConfig::parse(&BASE.replace("nu = 0.5", "nu = -1.0")).unwrap();
        assert!(matches!(rc.sim_config(Path::new(".")), Err(Error::Config(_))));
        let rc = RunConfig::parse(&BASE.replace("cutoff = 4", "cutoff = 0")).unwrap();
        assert!(matches!(rc.sim_config(Path::new(".")), Err(Error::Config(_))));
        let text = format!("{BASE}[sim.initial]\nkind = \"snapshot\"\npath = \"missing.txt\"\n");
        let rc = RunConfig::parse(&text).unwrap();
        assert!(matches!(rc.sim_config(Path::new("/nonexistent")), Err(Error::Config(_))));
    }
}
