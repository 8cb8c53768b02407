//! Experiment configuration files (TOML).
//!
//! Every key except `sigma` and `epsilon` is optional; [`parse_config`]
//! fills in the defaults of the named experiment and validates the result.
//! [`ExperimentConfig::to_toml`] writes the fully materialized form, which
//! parses back to an identical value.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{box_length, velocity_bound, Scheme, SimConfig};
use crate::exact::SolitonParams;
use crate::grid::{Complex, Field, Grid1D};
use crate::invariants::TailGuard;
use crate::packets::{ChiKind, PacketConfig};
use crate::NonlinearForm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum ExperimentName {
    /// Dispersive decay of small data (σ ≥ 2 regime).
    #[default]
    E1,
    /// Vector-field bounds and wave-packet diagnostics.
    E2,
    /// Modified scattering and the profile `W`.
    E3,
    /// Solitary waves.
    E4,
    /// Remainder of the asymptotic profile equation.
    E5,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 5] =
        [ExperimentName::E1, ExperimentName::E2, ExperimentName::E3, ExperimentName::E4, ExperimentName::E5];

    fn default_sigma(self) -> f64 {
        match self {
            ExperimentName::E1 => 2.0,
            ExperimentName::E4 => 1.5,
            _ => 1.0,
        }
    }

    /// Experiments that study small data and so require `ε ≤ 0.2`.
    pub fn small_data(self) -> bool {
        self != ExperimentName::E4
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .into_iter()
            .find(|n| n.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config("name", format!("unknown experiment `{s}`, expected E1..E5")))
    }
}

/// Shape of the initial data; every variant is scaled by `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// `e^{−x²}`.
    #[default]
    Gaussian,
    /// `e^{−x² + ix}`.
    Chirped,
    /// `e^{−x²}(1 + a₁x + a₂x²)/4` with complex `a_k` drawn from the seed.
    Perturbed,
    Zero,
}

pub const SMALL_DATA_LIMIT: f64 = 0.2;

impl InitialData {
    fn shape(self, seed: u64) -> impl Fn(f64) -> Complex {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (a1, a2) = (draw(), draw());
        move |x: f64| {
            let g = (-x * x).exp();
            match self {
                InitialData::Gaussian | InitialData::Zero => Complex::new(g, 0.0),
                InitialData::Chirped => Complex::from_polar(g, x),
                InitialData::Perturbed => g * (1.0 + 0.25 * (a1 * x + a2 * x * x)),
            }
        }
    }

    /// `ε·shape` sampled on `grid` at `t = 0`.
    pub fn sample(self, epsilon: f64, seed: u64, grid: Grid1D) -> Result<Field> {
        let amp = if self == InitialData::Zero { 0.0 } else { epsilon };
        let shape = self.shape(seed);
        Field::from_fn(grid, 0.0, |x| amp * shape(x))
    }

    /// Group-velocity bound of the unit-amplitude shape.
    pub fn velocity_bound(self, seed: u64) -> Result<f64> {
        let probe = Grid1D::new(4096, 200.0)?;
        let shape = self.shape(seed);
        velocity_bound(&Field::from_fn(probe, 0.0, shape)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Number of velocities in the profile grid.
    pub velocities: usize,
    /// Half-width of the velocity grid.
    pub v_max: f64,
    /// Analysis times per doubling of `t`.
    pub per_octave: usize,
    /// First analysis time after `t = 0`.
    pub t_min: f64,
    /// Offset of the two extra snapshots used for `∂_t γ`.
    pub stencil: f64,
    pub fit_window: (f64, f64),
    /// Second power run for the boundedness check of E2.
    pub companion_sigma: Option<f64>,
    /// Times at which binary snapshots are written.
    pub snapshot_files: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonSettings {
    pub omega: f64,
    pub c: f64,
    /// Coarsest step of the order study.
    pub order_dt0: f64,
}

impl Default for SolitonSettings {
    fn default() -> Self {
        SolitonSettings { omega: 1.0, c: 1.0, order_dt0: 0.0016 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: ExperimentName,
    pub sim: SimConfig,
    pub epsilon: f64,
    pub d_constant: f64,
    pub packet: PacketConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: InitialData,
    pub analysis: AnalysisConfig,
    pub soliton: SolitonSettings,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGuard {
    fraction: Option<f64>,
    tolerance: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    form: Option<NonlinearForm>,
    scheme: Option<Scheme>,
    n: Option<usize>,
    length: Option<f64>,
    dt: Option<f64>,
    t_end: Option<f64>,
    dealias_fraction: Option<f64>,
    dt_safety: Option<f64>,
    snapshot_times: Option<Vec<f64>>,
    tail_guard: Option<RawGuard>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPacket {
    chi_kind: Option<ChiKind>,
    chi_norm: Option<f64>,
    quadrature_tol: Option<f64>,
    refine: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    velocities: Option<usize>,
    v_max: Option<f64>,
    per_octave: Option<usize>,
    t_min: Option<f64>,
    stencil: Option<f64>,
    fit_window: Option<(f64, f64)>,
    companion_sigma: Option<f64>,
    snapshot_files: Option<Vec<f64>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSoliton {
    omega: Option<f64>,
    c: Option<f64>,
    order_dt0: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    sigma: Option<f64>,
    epsilon: Option<f64>,
    d_constant: Option<f64>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    data: Option<InitialData>,
    sim: Option<RawSim>,
    packet: Option<RawPacket>,
    analysis: Option<RawAnalysis>,
    soliton: Option<RawSoliton>,
}

/// `t_min·2^{k/per_octave}` up to `t_end`, preceded by `t = 0`.
pub fn dyadic_times(t_min: f64, t_end: f64, per_octave: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    if per_octave == 0 || !(t_min > 0.0) {
        return out;
    }
    let mut k = 0;
    loop {
        let t = t_min * 2f64.powf(k as f64 / per_octave as f64);
        if t > t_end * (1.0 + 1e-12) {
            break;
        }
        out.push(t.min(t_end));
        k += 1;
    }
    out
}

fn check_positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {v}")))
    }
}

/// Parse and validate an experiment file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::config("", e.message().to_string()))?;
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        Error::config(if key == "." { String::new() } else { key }, e.into_inner().message().to_string())
    })?;
    resolve(raw)
}

/// Parse `text` after setting dotted keys such as `sim.t_end` to the given
/// TOML values. Keys may name tables that the file does not contain yet.
pub fn parse_config_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<ExperimentConfig> {
    let mut doc: toml::Table = toml::from_str(text).map_err(|e| Error::config("", e.message().to_string()))?;
    for (key, raw) in overrides {
        let value: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => toml::Value::String(raw.clone()),
        };
        let mut parts: Vec<&str> = key.split('.').collect();
        let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::config(key.clone(), "empty key"))?;
        let mut table = &mut doc;
        for part in parts {
            let entry = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry.as_table_mut().ok_or_else(|| Error::config(key.clone(), format!("`{part}` is not a table")))?;
        }
        table.insert(last.to_string(), value);
    }
    parse_config_str(&toml::to_string(&doc).map_err(|e| Error::config("", e.to_string()))?)
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig> {
    let name = match &raw.name {
        Some(s) => s.parse()?,
        None => ExperimentName::default(),
    };
    let sigma = raw.sigma.unwrap_or(name.default_sigma());
    check_positive("sigma", sigma)?;
    let epsilon = raw.epsilon.unwrap_or(0.05);
    check_positive("epsilon", epsilon)?;
    if name.small_data() && epsilon > SMALL_DATA_LIMIT {
        return Err(Error::config(
            "epsilon",
            format!("{name} studies small data and needs epsilon <= {SMALL_DATA_LIMIT}, got {epsilon}"),
        ));
    }
    let d_constant = raw.d_constant.unwrap_or(1.0 / (10.0 * epsilon));
    check_positive("d_constant", d_constant)?;
    let seed = raw.seed.unwrap_or(0);
    let data = raw.data.unwrap_or_default();
    let output_dir = raw.output_dir.unwrap_or_else(|| PathBuf::from(format!("runs/{}", name.to_string().to_lowercase())));

    let rs = raw.sim.unwrap_or_default();
    let soliton_run = name == ExperimentName::E4;
    let t_end = rs.t_end.unwrap_or(if soliton_run { 5.0 } else { 128.0 });
    check_positive("sim.t_end", t_end)?;

    let ra = raw.analysis.unwrap_or_default();
    let bound = data.velocity_bound(seed)?;
    // The profile grid reaches past the box velocity so the uncovered tail
    // does not put a floor under the asymptotic errors.
    let v_max = ra.v_max.unwrap_or(1.5 * bound);
    check_positive("analysis.v_max", v_max)?;
    let n = rs.n.unwrap_or(if soliton_run { 4096 } else { 1 << 15 });
    let length = rs.length.unwrap_or(if soliton_run { 80.0 * PI } else { box_length(bound, t_end) });
    let grid = Grid1D::new(n, length).map_err(|e| Error::config("sim.n", e.to_string()))?;
    let analysis = AnalysisConfig {
        velocities: ra.velocities.unwrap_or(257),
        v_max,
        per_octave: ra.per_octave.unwrap_or(8),
        t_min: ra.t_min.unwrap_or(1.0),
        stencil: ra.stencil.unwrap_or(0.01),
        fit_window: ra.fit_window.unwrap_or(((t_end / 16.0).max(1.0), t_end.max(2.0))),
        companion_sigma: if name == ExperimentName::E2 { ra.companion_sigma.or(Some(1.5)) } else { ra.companion_sigma },
        snapshot_files: ra.snapshot_files.unwrap_or_else(|| vec![0.0, t_end / 4.0, t_end / 2.0, t_end]),
    };
    validate_analysis(&analysis, t_end)?;

    let guard = rs.tail_guard.unwrap_or_default();
    let defaults = TailGuard::default();
    let mut sim = SimConfig::new(sigma, grid, rs.dt.unwrap_or(if soliton_run { 1e-3 } else { 0.01 }), t_end);
    sim.form = rs.form.unwrap_or_default();
    sim.scheme = rs.scheme.unwrap_or_default();
    sim.dealias_fraction = rs.dealias_fraction.unwrap_or(sim.dealias_fraction);
    sim.dt_safety = rs.dt_safety.unwrap_or(sim.dt_safety);
    sim.guard = TailGuard {
        fraction: guard.fraction.unwrap_or(defaults.fraction),
        tolerance: guard.tolerance.unwrap_or(defaults.tolerance),
    };
    sim.snapshot_times = match rs.snapshot_times {
        Some(t) => t,
        None if soliton_run => vec![t_end],
        None => dyadic_times(analysis.t_min, t_end, analysis.per_octave).into_iter().filter(|&t| t > 0.0).collect(),
    };
    sim.validate()?;

    let rp = raw.packet.unwrap_or_default();
    let pd = PacketConfig::default();
    let packet = PacketConfig {
        chi_kind: rp.chi_kind.unwrap_or(pd.chi_kind),
        chi_norm: rp.chi_norm.unwrap_or(pd.chi_norm),
        quadrature_tol: rp.quadrature_tol.unwrap_or(pd.quadrature_tol),
        refine: rp.refine.unwrap_or(pd.refine),
    };
    packet.validate()?;

    let rsol = raw.soliton.unwrap_or_default();
    let sd = SolitonSettings::default();
    let soliton = SolitonSettings {
        omega: rsol.omega.unwrap_or(sd.omega),
        c: rsol.c.unwrap_or(sd.c),
        order_dt0: rsol.order_dt0.unwrap_or(sd.order_dt0),
    };
    check_positive("soliton.order_dt0", soliton.order_dt0)?;
    if soliton_run {
        SolitonParams::with_form(sigma, soliton.omega, soliton.c, sim.form)
            .map_err(|e| Error::config("soliton", e.to_string()))?;
    }

    Ok(ExperimentConfig { name, sim, epsilon, d_constant, packet, seed, output_dir, data, analysis, soliton })
}

fn validate_analysis(a: &AnalysisConfig, t_end: f64) -> Result<()> {
    if a.velocities < 8 {
        return Err(Error::config("analysis.velocities", "need at least 8 velocities"));
    }
    if a.per_octave == 0 {
        return Err(Error::config("analysis.per_octave", "must be at least 1"));
    }
    check_positive("analysis.t_min", a.t_min)?;
    check_positive("analysis.stencil", a.stencil)?;
    let (lo, hi) = a.fit_window;
    if !(lo >= 1.0 && hi > lo) {
        return Err(Error::config("analysis.fit_window", format!("need 1 <= t_min < t_max, got ({lo}, {hi})")));
    }
    if let Some(s) = a.companion_sigma {
        check_positive("analysis.companion_sigma", s)?;
    }
    if a.snapshot_files.iter().any(|&t| !(t >= 0.0 && t <= t_end)) {
        return Err(Error::config("analysis.snapshot_files", "times must lie in [0, t_end]"));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Defaults of the named experiment.
    pub fn defaults(name: ExperimentName) -> Result<Self> {
        resolve(RawConfig { name: Some(name.to_string()), ..RawConfig::default() })
    }

    /// The materialized configuration as TOML.
    pub fn to_toml(&self) -> Result<String> {
        let raw = RawConfig {
            name: Some(self.name.to_string()),
            sigma: Some(self.sim.sigma),
            epsilon: Some(self.epsilon),
            d_constant: Some(self.d_constant),
            seed: Some(self.seed),
            output_dir: Some(self.output_dir.clone()),
            data: Some(self.data),
            sim: Some(RawSim {
                form: Some(self.sim.form),
                scheme: Some(self.sim.scheme),
                n: Some(self.sim.grid.n()),
                length: Some(self.sim.grid.length()),
                dt: Some(self.sim.dt),
                t_end: Some(self.sim.t_end),
                dealias_fraction: Some(self.sim.dealias_fraction),
                dt_safety: Some(self.sim.dt_safety),
                snapshot_times: Some(self.sim.snapshot_times.clone()),
                tail_guard: Some(RawGuard { fraction: Some(self.sim.guard.fraction), tolerance: Some(self.sim.guard.tolerance) }),
            }),
            packet: Some(RawPacket {
                chi_kind: Some(self.packet.chi_kind),
                chi_norm: Some(self.packet.chi_norm),
                quadrature_tol: Some(self.packet.quadrature_tol),
                refine: Some(self.packet.refine),
            }),
            analysis: Some(RawAnalysis {
                velocities: Some(self.analysis.velocities),
                v_max: Some(self.analysis.v_max),
                per_octave: Some(self.analysis.per_octave),
                t_min: Some(self.analysis.t_min),
                stencil: Some(self.analysis.stencil),
                fit_window: Some(self.analysis.fit_window),
                companion_sigma: self.analysis.companion_sigma,
                snapshot_files: Some(self.analysis.snapshot_files.clone()),
            }),
            soliton: Some(RawSoliton {
                omega: Some(self.soliton.omega),
                c: Some(self.soliton.c),
                order_dt0: Some(self.soliton.order_dt0),
            }),
        };
        toml::to_string(&raw).map_err(|e| Error::config("", e.to_string()))
    }

    pub fn initial_data(&self) -> Result<Field> {
        self.data.sample(self.epsilon, self.seed, self.sim.grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_materializes_defaults() {
        let cfg = parse_config_str("sigma = 2.0\nepsilon = 0.05\n").unwrap();
        assert_eq!(cfg.name, ExperimentName::E1);
        assert_eq!(cfg.sim.grid.n(), 1 << 15);
        assert_eq!(cfg.sim.dt, 0.01);
        assert_eq!(cfg.sim.t_end, 128.0);
        assert!((cfg.d_constant - 2.0).abs() < 1e-15);
        assert_eq!(cfg.analysis.velocities, 257);
        assert_eq!(cfg.analysis.fit_window, (8.0, 128.0));
        assert!((1.5 * cfg.sim.grid.length() - 8.0 * cfg.analysis.v_max * 128.0).abs() < 1e-9);
        assert_eq!(cfg.sim.snapshot_times.len(), 57);
        assert_eq!(*cfg.sim.snapshot_times.last().unwrap(), 128.0);
    }

    #[test]
    fn large_epsilon_is_rejected_for_small_data_runs() {
        let err = parse_config_str("name = \"E2\"\nsigma = 1.0\nepsilon = 0.5\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "epsilon"), "{err}");
        assert!(parse_config_str("name = \"E4\"\nepsilon = 0.5\n").is_ok());
    }

    #[test]
    fn errors_carry_key_paths() {
        let err = parse_config_str("sigma = 1.0\n[sim]\ndt = \"fast\"\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "sim.dt"), "{err}");
        let err = parse_config_str("sigma = 1.0\n[sim]\nsteps = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key.starts_with("sim")), "{err}");
        let err = parse_config_str("sigma = 1.0\n[sim]\ndt = 1.0\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "sim.dt"), "{err}");
        let err = parse_config_str("name = \"E9\"\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "name"), "{err}");
    }

    #[test]
    fn round_trip_is_structural_identity() {
        for name in ExperimentName::ALL {
            let cfg = ExperimentConfig::defaults(name).unwrap();
            let text = cfg.to_toml().unwrap();
            let back = parse_config_str(&text).unwrap();
            assert_eq!(cfg, back, "{name}");
        }
        let custom = parse_config_str("name = \"E3\"\nsigma = 1.0\nepsilon = 0.1\ndata = \"perturbed\"\nseed = 7\n[sim]\nn = 4096\nt_end = 16.0\n").unwrap();
        assert_eq!(parse_config_str(&custom.to_toml().unwrap()).unwrap(), custom);
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let o = |k: &str, v: &str| (k.to_string(), v.to_string());
        let cfg = parse_config_with_overrides(
            "sigma = 1.0\n",
            &[o("name", "E3"), o("sim.n", "4096"), o("sim.t_end", "16"), o("data", "chirped")],
        )
        .unwrap();
        assert_eq!(cfg.name, ExperimentName::E3);
        assert_eq!(cfg.sim.grid.n(), 4096);
        assert_eq!(cfg.sim.t_end, 16.0);
        assert_eq!(cfg.data, InitialData::Chirped);
        let err = parse_config_with_overrides("sigma = 1.0\n", &[o("sigma.x", "1")]).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn dyadic_schedule() {
        let t = dyadic_times(1.0, 4.0, 2);
        assert_eq!(t.len(), 6);
        assert_eq!(t[0], 0.0);
        assert!((t[2] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(*t.last().unwrap(), 4.0);
    }

    #[test]
    fn initial_data_variants() {
        let g = Grid1D::new(256, 20.0).unwrap();
        assert_eq!(InitialData::Zero.sample(0.05, 0, g).unwrap().sup_norm(), 0.0);
        let a = InitialData::Perturbed.sample(0.05, 3, g).unwrap();
        let b = InitialData::Perturbed.sample(0.05, 3, g).unwrap();
        assert_eq!(a.samples(), b.samples());
        let c = InitialData::Chirped.sample(0.05, 0, g).unwrap();
        assert!((c.sup_norm() - 0.05).abs() < 1e-12);
    }
}
