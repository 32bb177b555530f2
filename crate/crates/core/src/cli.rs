//! Command-line driver.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::channels::{amplitude_damping_kraus, ChannelSpec, KrausMap};
use crate::dilation::{dilate, dilate_channel, DilatedUnitary, CONTRACTION_TOL};
use crate::elt::{
    combine, single_trajectory, trajectory_populations, uniform_grid, Backend, FamilyMode,
    PopulationSeries, Source, TrajectoryFamily, DEFAULT_FAMILY_SIZE, DEFAULT_GRID_POINTS,
    DEFAULT_KAPPA_MAX, DEFAULT_KAPPA_MIN, DEFAULT_T_MAX,
};
use crate::error::{Error, Result};
use crate::jcref::{exact_populations, JCParams};
use crate::linalg::ComplexMatrix;
use crate::stateprep::{decompose_density, paper_decomposition, VectorEnsemble};
use crate::synthesis::{synthesize_2q, SynthesisReport};
use crate::weights::{fit_global_weights, fit_report, fit_weights, DEFAULT_REG};

pub const OUT_DIR_ENV: &str = "ELTQC_OUT";
/// Physical decay rate used to label the Markovian benchmark, in 1/s.
pub const DEFAULT_PHYSICAL_GAMMA: f64 = 1.52e9;
pub const DEFAULT_SHOTS: u64 = 8192;

#[derive(Debug, Parser)]
#[command(
    name = "eltqc",
    version,
    about = "Ensemble-of-Lindblad-trajectories simulation on dilated circuits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON experiment config; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Shots per circuit; 0 skips the sampled series.
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory (fallback: config `output_dir`, then $ELTQC_OUT, then `.`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub regime: Option<Regime>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Amplitude damping of the mixed benchmark state: exact, statevector and shots.
    Markovian,
    /// Jaynes-Cummings benchmark: oracle, weight fit and ensemble evolution.
    Jc(JcArgs),
    /// Exact Jaynes-Cummings populations only.
    Oracle(JcArgs),
    /// Unitary dilation of a matrix, a Kraus map, or the damping map at `--gamma-t`.
    Dilate(MatrixArgs),
    /// Two-qubit circuit synthesis of a 4x4 unitary or of the damping dilations.
    Synthesize(MatrixArgs),
    /// Fit ensemble weights to a population CSV.
    FitWeights(FitArgs),
}

#[derive(Debug, clap::Args)]
pub struct JcArgs {
    /// Bath width in units of gamma (custom regime).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Detuning in units of gamma (custom regime).
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, clap::Args)]
pub struct MatrixArgs {
    /// JSON matrix literal or Kraus map.
    #[arg(long, conflicts_with = "gamma_t")]
    pub input: Option<PathBuf>,
    /// Use the amplitude-damping map at this damping time.
    #[arg(long)]
    pub gamma_t: Option<f64>,
}

#[derive(Debug, clap::Args)]
pub struct FitArgs {
    /// Reference population CSV.
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub reg: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Strong,
    Detuned,
    Custom,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Strong => "strong",
            Regime::Detuned => "detuned",
            Regime::Custom => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub t_max: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            t_max: DEFAULT_T_MAX,
            points: DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    pub mode: FamilyMode,
    pub count: usize,
    pub kappa_min: f64,
    pub kappa_max: f64,
    /// Explicit rate multipliers; overrides the log grid.
    pub multipliers: Option<Vec<f64>>,
    /// Explicit lags for the lag-shifted mode.
    pub lags: Option<Vec<f64>>,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            mode: FamilyMode::RateScaled,
            count: DEFAULT_FAMILY_SIZE,
            kappa_min: DEFAULT_KAPPA_MIN,
            kappa_max: DEFAULT_KAPPA_MAX,
            multipliers: None,
            lags: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub shots: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            shots: DEFAULT_SHOTS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeConfig {
    pub name: Regime,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub rho11_0: f64,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        Self {
            name: Regime::Strong,
            lambda: None,
            delta: None,
            rho11_0: 1.0,
        }
    }
}

/// Accepts either `"strong"` or a full object for the regime section.
#[derive(Deserialize)]
#[serde(untagged)]
enum RegimeField {
    Name(Regime),
    Full(RegimeConfig),
}

fn regime_field<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<RegimeConfig, D::Error> {
    Ok(match RegimeField::deserialize(d)? {
        RegimeField::Name(name) => RegimeConfig {
            name,
            ..RegimeConfig::default()
        },
        RegimeField::Full(cfg) => cfg,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    PerTime,
    Global,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub reg: f64,
    pub mode: FitMode,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            reg: DEFAULT_REG,
            mode: FitMode::PerTime,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub grid: GridConfig,
    pub family: FamilyConfig,
    pub backend: BackendConfig,
    #[serde(deserialize_with = "regime_field")]
    pub regime: RegimeConfig,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub fit: FitConfig,
    /// Physical decay rate in 1/s, used for labels only.
    pub gamma: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            family: FamilyConfig::default(),
            backend: BackendConfig::default(),
            regime: RegimeConfig::default(),
            seed: 0,
            output_dir: None,
            fit: FitConfig::default(),
            gamma: DEFAULT_PHYSICAL_GAMMA,
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::BadConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::BadConfig(format!("{}: {e}", path.display())))
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        let g = &self.grid;
        if !(g.t_max >= 0.0 && g.t_max.is_finite()) || g.points == 0 {
            return Err(Error::BadConfig(format!(
                "grid needs t_max >= 0 and points > 0, got {} and {}",
                g.t_max, g.points
            )));
        }
        Ok(uniform_grid(g.t_max, g.points))
    }

    pub fn family(&self) -> Result<TrajectoryFamily> {
        let f = &self.family;
        let channel = ChannelSpec::amplitude_damping(1.0)?;
        let family = match (f.mode, &f.multipliers, &f.lags) {
            (FamilyMode::RateScaled, Some(k), _) => TrajectoryFamily::rate_scaled(k, channel)?,
            (FamilyMode::RateScaled, None, _) => {
                TrajectoryFamily::default_rate_scaled(f.count, f.kappa_min, f.kappa_max, channel)?
            }
            (FamilyMode::LagShifted, _, Some(l)) => TrajectoryFamily::lag_shifted(l, channel)?,
            (FamilyMode::LagShifted, _, None) => {
                TrajectoryFamily::lag_shifted(&uniform_grid(self.grid.t_max, f.count), channel)?
            }
        };
        family.check_identity_member(self.grid.t_max)?;
        Ok(family)
    }

    pub fn jc_params(&self) -> Result<JCParams> {
        let r = &self.regime;
        let (lambda, delta) = match r.name {
            Regime::Strong | Regime::Detuned if r.lambda.is_some() || r.delta.is_some() => {
                return Err(Error::BadConfig(format!(
                    "lambda and delta are fixed by the {} regime; use the custom regime",
                    r.name.name()
                )));
            }
            Regime::Strong => (0.2, 0.0),
            Regime::Detuned => (0.3, 2.4),
            Regime::Custom => (
                r.lambda
                    .ok_or_else(|| Error::BadConfig("custom regime needs lambda".into()))?,
                r.delta.unwrap_or(0.0),
            ),
        };
        JCParams::new(1.0, lambda, delta).map_err(|e| Error::BadConfig(e.to_string()))
    }

    /// Initial state `diag(1 - rho11_0, rho11_0)` as an ensemble.
    pub fn jc_ensemble(&self) -> Result<VectorEnsemble> {
        let p = self.regime.rho11_0;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::BadConfig(format!("rho11_0 = {p} is outside [0, 1]")));
        }
        decompose_density(&ComplexMatrix::from_real(2, 2, &[1.0 - p, 0.0, 0.0, p]))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(dir, name, &text)
}

/// Config after applying command-line overrides, plus the output directory.
#[derive(Clone, Debug)]
pub struct Settings {
    pub config: Config,
    pub out_dir: PathBuf,
}

impl Settings {
    pub fn resolve(cli: &Cli) -> Result<Self> {
        let mut config = match &cli.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        if let Some(shots) = cli.shots {
            config.backend.shots = shots;
        }
        if let Some(regime) = cli.regime {
            config.regime.name = regime;
        }
        if let Command::Jc(a) | Command::Oracle(a) = &cli.command {
            if a.lambda.is_some() {
                config.regime.lambda = a.lambda;
            }
            if a.delta.is_some() {
                config.regime.delta = a.delta;
            }
        }
        let out_dir = cli
            .out
            .clone()
            .or_else(|| config.output_dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self { config, out_dir })
    }

    fn shots_backend(&self) -> Option<Backend> {
        let shots = self.config.backend.shots;
        (shots > 0).then_some(Backend::Shots {
            shots,
            seed: self.config.seed,
        })
    }
}

#[derive(Serialize)]
struct MarkovianMeta {
    gamma: f64,
    gamma_unit: &'static str,
    t_max_seconds: f64,
    points: usize,
    shots: u64,
    seed: u64,
}

pub fn cmd_markovian(s: &Settings) -> Result<Vec<PathBuf>> {
    let times = s.config.times()?;
    let gamma = s.config.gamma;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::BadConfig(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let ensemble = paper_decomposition();
    let rho11_0 = ensemble.density()[(1, 1)].re;
    let excited: Vec<f64> = times.iter().map(|t| rho11_0 * (-t).exp()).collect();
    let exact = PopulationSeries::new(
        times.clone(),
        excited.iter().map(|e| 1.0 - e).collect(),
        excited,
        Source::Exact,
    )?;
    let channel = ChannelSpec::amplitude_damping(1.0)?;

    let dir = &s.out_dir;
    let mut files = vec![write(dir, "markovian_exact.csv", &exact.to_csv())?];
    let sv = single_trajectory(&channel, &times, &ensemble, Backend::Statevector)?;
    files.push(write(dir, "markovian_statevector.csv", &sv.to_csv())?);
    if let Some(backend) = s.shots_backend() {
        let shots = single_trajectory(&channel, &times, &ensemble, backend)?;
        files.push(write(dir, "markovian_shots.csv", &shots.to_csv())?);
    }
    let meta = MarkovianMeta {
        gamma,
        gamma_unit: "1/s",
        t_max_seconds: s.config.grid.t_max / gamma,
        points: times.len(),
        shots: s.config.backend.shots,
        seed: s.config.seed,
    };
    files.push(write_json(dir, "markovian_meta.json", &meta)?);
    Ok(files)
}

pub fn cmd_oracle(s: &Settings) -> Result<Vec<PathBuf>> {
    let times = s.config.times()?;
    let oracle = exact_populations(&s.config.jc_params()?, &times, s.config.regime.rho11_0)?;
    let name = format!("jc_{}_exact.csv", s.config.regime.name.name());
    Ok(vec![write(&s.out_dir, &name, &oracle.to_csv())?])
}

fn excited_matrix(pops: &[Vec<(f64, f64)>]) -> Vec<Vec<f64>> {
    pops.iter()
        .map(|row| row.iter().map(|p| p.1).collect())
        .collect()
}

pub fn cmd_jc(s: &Settings) -> Result<Vec<PathBuf>> {
    let cfg = &s.config;
    let times = cfg.times()?;
    let params = cfg.jc_params()?;
    let ensemble = cfg.jc_ensemble()?;
    let family = cfg.family()?;
    let oracle = exact_populations(&params, &times, cfg.regime.rho11_0)?;

    let sv_pops = trajectory_populations(&family, &times, &ensemble, Backend::Statevector)?;
    let excited = excited_matrix(&sv_pops);
    let schedule = match cfg.fit.mode {
        FitMode::PerTime => fit_weights(&excited, &oracle, cfg.fit.reg)?,
        FitMode::Global => fit_global_weights(&excited, &oracle, cfg.fit.reg)?,
    };
    let report = fit_report(&schedule, &excited, &oracle)?;
    let elt_sv = combine(&sv_pops, &schedule, Source::Statevector)?;

    let prefix = format!("jc_{}", cfg.regime.name.name());
    let dir = &s.out_dir;
    let mut files = vec![
        write(dir, &format!("{prefix}_exact.csv"), &oracle.to_csv())?,
        write(
            dir,
            &format!("{prefix}_elt_statevector.csv"),
            &elt_sv.to_csv(),
        )?,
    ];
    if let Some(backend) = s.shots_backend() {
        let shot_pops = trajectory_populations(&family, &times, &ensemble, backend)?;
        let elt_shots = combine(&shot_pops, &schedule, backend.source())?;
        files.push(write(
            dir,
            &format!("{prefix}_elt_shots.csv"),
            &elt_shots.to_csv(),
        )?);
    }
    files.push(write_json(dir, "weights.json", &schedule)?);
    files.push(write_json(dir, "fit_report.json", &report)?);
    Ok(files)
}

/// Matrix-valued inputs accepted by `dilate` and `synthesize`.
#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixInput {
    Dilated(DilatedUnitary),
    Map(KrausMap),
    Matrix(ComplexMatrix),
}

fn parse_matrix_input(path: &Path) -> Result<MatrixInput> {
    let text = read(path)?;
    // Untagged enums hide the position of errors; report the one from the
    // most likely shape instead.
    serde_json::from_str(&text).or_else(|_| {
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::BadConfig(format!("{}: {e}", path.display())))?;
        let err = if value.get("operators").is_some() {
            serde_json::from_str::<KrausMap>(&text).err()
        } else {
            serde_json::from_str::<ComplexMatrix>(&text).err()
        };
        Err(match err {
            Some(e) => Error::BadConfig(format!("{}: {e}", path.display())),
            None => Error::BadConfig(format!("{}: unrecognized matrix input", path.display())),
        })
    })
}

fn damping_map(args: &MatrixArgs) -> Result<Option<KrausMap>> {
    match (args.gamma_t, &args.input) {
        (Some(gt), _) => Ok(Some(amplitude_damping_kraus(gt)?)),
        (None, Some(_)) => Ok(None),
        (None, None) => Err(Error::BadConfig(
            "pass --input PATH or --gamma-t VALUE".into(),
        )),
    }
}

pub fn cmd_dilate(s: &Settings, args: &MatrixArgs) -> Result<Vec<PathBuf>> {
    let path = match damping_map(args)? {
        Some(map) => write_json(&s.out_dir, "dilated.json", &dilate_channel(&map)?)?,
        None => match parse_matrix_input(args.input.as_deref().expect("checked"))? {
            MatrixInput::Map(map) => {
                write_json(&s.out_dir, "dilated.json", &dilate_channel(&map)?)?
            }
            MatrixInput::Matrix(m) => {
                write_json(&s.out_dir, "dilated.json", &dilate(&m, CONTRACTION_TOL)?)?
            }
            MatrixInput::Dilated(u) => write_json(
                &s.out_dir,
                "dilated.json",
                &dilate(&u.matrix, CONTRACTION_TOL)?,
            )?,
        },
    };
    Ok(vec![path])
}

pub fn cmd_synthesize(s: &Settings, args: &MatrixArgs) -> Result<Vec<PathBuf>> {
    let path = match damping_map(args)? {
        Some(map) => {
            let reports = dilate_channel(&map)?
                .iter()
                .map(|u| synthesize_2q(&u.matrix))
                .collect::<Result<Vec<SynthesisReport>>>()?;
            write_json(&s.out_dir, "synthesis.json", &reports)?
        }
        None => {
            let m = match parse_matrix_input(args.input.as_deref().expect("checked"))? {
                MatrixInput::Dilated(u) => u.matrix,
                MatrixInput::Matrix(m) => m,
                MatrixInput::Map(_) => {
                    return Err(Error::BadConfig(
                        "synthesize takes a single 4x4 unitary, not a Kraus map".into(),
                    ));
                }
            };
            write_json(&s.out_dir, "synthesis.json", &synthesize_2q(&m)?)?
        }
    };
    Ok(vec![path])
}

pub fn cmd_fit_weights(s: &Settings, args: &FitArgs) -> Result<Vec<PathBuf>> {
    let reference = PopulationSeries::from_csv(&read(&args.reference)?)?;
    let ensemble = s.config.jc_ensemble()?;
    let mut cfg = s.config.clone();
    cfg.grid.t_max = reference.times.iter().copied().fold(0.0, f64::max);
    let family = cfg.family()?;
    let pops = trajectory_populations(&family, &reference.times, &ensemble, Backend::Statevector)?;
    let excited = excited_matrix(&pops);
    let reg = args.reg.unwrap_or(cfg.fit.reg);
    let schedule = match cfg.fit.mode {
        FitMode::PerTime => fit_weights(&excited, &reference, reg)?,
        FitMode::Global => fit_global_weights(&excited, &reference, reg)?,
    };
    let report = fit_report(&schedule, &excited, &reference)?;
    Ok(vec![
        write_json(&s.out_dir, "weights.json", &schedule)?,
        write_json(&s.out_dir, "fit_report.json", &report)?,
    ])
}

/// Runs a parsed command and returns the files it wrote.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let settings = Settings::resolve(cli)?;
    let run = || match &cli.command {
        Command::Markovian => cmd_markovian(&settings),
        Command::Jc(_) => cmd_jc(&settings),
        Command::Oracle(_) => cmd_oracle(&settings),
        Command::Dilate(a) => cmd_dilate(&settings, a),
        Command::Synthesize(a) => cmd_synthesize(&settings, a),
        Command::FitWeights(a) => cmd_fit_weights(&settings, a),
    };
    match cli.threads {
        Some(0) => Err(Error::BadConfig("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::BadConfig(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

/// 2 for configuration and I/O problems, 3 for numerical or validation failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BadConfig(_) | Error::Io { .. } | Error::Json(_) => 2,
        _ => 3,
    }
}

/// Parses `args`, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
