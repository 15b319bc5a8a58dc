//! Command-line front end: scenario files, the built-in two-dimensional
//! examples, and the `validate`, `reproduce-paper`, `converge`, `simulate`
//! and `diagonalize` commands.
//!
//! A scenario file is TOML with a fixed schema:
//!
//! ```toml
//! name = "skewed"
//! dim = 2
//! # exactly one of the three probability specifications
//! probabilities = [0.5, 0.25, 0.25]
//! # probabilities_affine = [[0.5, 0.0], [0.0, 1.0], [0.5, -1.0]]   # [constant, slope] in h
//! # [planar]
//! # p = 0.5
//! # q = [0.0, 1.0]
//! # r = [0.5, -1.0]
//! h_schedule = [0.1, 0.01, 0.001, 0.0001]
//! horizon = 1.0
//! alpha_grid = [[1.0, 0.0], [0.0, 1.0]]
//! paths = 1000
//! seed = 0
//! output_dir = "out"
//! ```
//!
//! Every CSV written starts with `# config_sha256=<hex> seed=<seed>`, the
//! hash being taken over the effective configuration after command-line
//! overrides.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::{
    decomposition, mult_op, pointwise_mult_oracle, site_op, vacuum_moment, ChainOperator, ChainSpace,
};
use crate::error::{Error, Result};
use crate::limit::{
    convergence_report, extrapolation_schedule, h_limit_tensor, limit_from_tensor,
    sample_limit_paths, Affine, AffineFamily, ConvergenceReport, LimitSpec, ObtuseFamily,
    LIMIT_TENSOR_TOL,
};
use crate::obtuse::{planar_chain_coefficients, ObtuseVariable};
use crate::tensor::{
    classify, diagonalize, reconstruct, structure_residual, tensor_of, Tensor3,
};
use crate::walks::{discrete_structure_residual, sample_walks, Trajectory, WalkScenario};

const DEFAULT_SCHEDULE: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Parser, Debug)]
#[command(name = "obtuse", version, about = "Obtuse random walks and their normal martingale limits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the number of Monte Carlo or simulated paths.
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the numerical tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Largest chain dimension `(n+1)^N` built by any command.
    #[arg(long, global = true)]
    pub max_chain_dim: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the obtuse conditions, tensor symmetries and chain operators.
    Validate(ScenarioArgs),
    /// Recompute the three built-in planar examples and flag every
    /// difference with the published values.
    ReproducePaper,
    /// Exact characteristic-function distance to the limit martingale.
    Converge {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Add empirical characteristic functions of sampled walks.
        #[arg(long)]
        monte_carlo: bool,
    },
    /// Sample walk and/or limit trajectories.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        process: Option<Process>,
    },
    /// Orthogonal family, jumps and Brownian part of a doubly symmetric tensor.
    Diagonalize(ScenarioArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    /// Scenario file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Built-in scenario: example-1, example-2 or example-3.
    #[arg(long, conflicts_with = "config")]
    pub scenario: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    Walk,
    Limit,
    Both,
}

/// A probability given either as a constant or as `[constant, slope]` in h.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AffineValue {
    Constant(f64),
    Affine([f64; 2]),
}

impl From<AffineValue> for Affine {
    fn from(v: AffineValue) -> Self {
        match v {
            AffineValue::Constant(c) => Affine::constant(c),
            AffineValue::Affine([c, s]) => Affine::new(c, s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarConfig {
    pub p: AffineValue,
    pub q: AffineValue,
    pub r: AffineValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities_affine: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planar: Option<PlanarConfig>,
    /// Seed of the random rotation applied to values built from weights;
    /// absent means no rotation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_seed: Option<u64>,
    /// Explicit tensor for `diagonalize`, `dim³` entries, last index fastest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<Vec<f64>>,
    #[serde(default = "default_schedule")]
    pub h_schedule: Vec<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub alpha_grid: Vec<Vec<f64>>,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Largest final `max_α |error|` accepted by `converge`.
    #[serde(default = "default_error_threshold")]
    pub error_threshold: f64,
    /// Time step of simulated paths; walks are sampled at `h = grid_step`.
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default = "default_chain_sites")]
    pub chain_sites: usize,
    #[serde(default = "default_max_chain_dim")]
    pub max_chain_dim: usize,
    #[serde(default = "default_process")]
    pub process: Process,
}

fn default_schedule() -> Vec<f64> {
    DEFAULT_SCHEDULE.to_vec()
}
fn default_horizon() -> f64 {
    1.0
}
fn default_paths() -> usize {
    1000
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_tolerance() -> f64 {
    1e-10
}
fn default_error_threshold() -> f64 {
    1e-2
}
fn default_grid_step() -> f64 {
    0.01
}
fn default_chain_sites() -> usize {
    4
}
fn default_max_chain_dim() -> usize {
    1 << 20
}
fn default_process() -> Process {
    Process::Both
}

fn config_error(field: &str, detail: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        detail: detail.into(),
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario configs serialize")
    }

    /// SHA-256 of the canonical TOML form. The output directory is left
    /// out, so the same scenario written to two places hashes the same.
    pub fn sha256(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        hex::encode(Sha256::digest(canonical.to_toml_string().as_bytes()))
    }

    /// One of the built-in planar scenarios `example-1`, `example-2`,
    /// `example-3`.
    pub fn builtin(name: &str) -> Result<Self> {
        let c = AffineValue::Constant;
        let a = |c0: f64, s: f64| AffineValue::Affine([c0, s]);
        let (planar, grid) = match name {
            "example-1" => (
                PlanarConfig {
                    p: c(0.5),
                    q: c(1.0 / 3.0),
                    r: c(1.0 / 6.0),
                },
                vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            ),
            "example-2" => (
                PlanarConfig {
                    p: c(0.5),
                    q: a(0.0, 1.0),
                    r: a(0.5, -1.0),
                },
                vec![vec![0.0, 1.0], vec![0.0, -1.0], vec![1.0, 1.0]],
            ),
            "example-3" => (
                PlanarConfig {
                    p: a(1.0, -2.0),
                    q: a(0.0, 1.0),
                    r: a(0.0, 1.0),
                },
                vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 1.0]],
            ),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown scenario `{other}` (expected example-1, example-2 or example-3)"
                )))
            }
        };
        Ok(Self {
            name: name.to_string(),
            dim: 2,
            probabilities: None,
            probabilities_affine: None,
            planar: Some(planar),
            rotation_seed: None,
            tensor: None,
            h_schedule: default_schedule(),
            horizon: default_horizon(),
            alpha_grid: grid,
            paths: default_paths(),
            seed: 0,
            output_dir: default_output_dir(),
            tolerance: default_tolerance(),
            error_threshold: default_error_threshold(),
            grid_step: default_grid_step(),
            chain_sites: default_chain_sites(),
            max_chain_dim: default_max_chain_dim(),
            process: default_process(),
        })
    }

    /// Field-level checks that do not need a step size.
    pub fn check(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(config_error("name", "must be a nonempty file-name-safe string"));
        }
        if self.dim == 0 {
            return Err(config_error("dim", "must be at least 1"));
        }
        let specs = [
            self.probabilities.is_some(),
            self.probabilities_affine.is_some(),
            self.planar.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if specs > 1 {
            return Err(config_error(
                "probabilities",
                "give only one of probabilities, probabilities_affine, planar",
            ));
        }
        if specs == 0 && self.tensor.is_none() {
            return Err(config_error(
                "probabilities",
                "missing; give probabilities, probabilities_affine, planar or tensor",
            ));
        }
        if let Some(p) = &self.probabilities {
            if p.len() != self.dim + 1 {
                return Err(config_error(
                    "probabilities",
                    format!("{} entries for dim = {} (need dim + 1)", p.len(), self.dim),
                ));
            }
            check_weights("probabilities", p)?;
        }
        if let Some(p) = &self.probabilities_affine {
            if p.len() != self.dim + 1 {
                return Err(config_error(
                    "probabilities_affine",
                    format!("{} entries for dim = {} (need dim + 1)", p.len(), self.dim),
                ));
            }
        }
        if self.planar.is_some() && self.dim != 2 {
            return Err(config_error("planar", "requires dim = 2"));
        }
        if let Some(t) = &self.tensor {
            if t.len() != self.dim.pow(3) {
                return Err(config_error(
                    "tensor",
                    format!("{} entries for dim = {} (need dim³)", t.len(), self.dim),
                ));
            }
        }
        if self.h_schedule.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return Err(config_error("h_schedule", "entries must be positive"));
        }
        if self.h_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(config_error("h_schedule", "entries must be strictly decreasing"));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(config_error("horizon", "must be a finite nonnegative time"));
        }
        if let Some(a) = self.alpha_grid.iter().find(|a| a.len() != self.dim) {
            return Err(config_error(
                "alpha_grid",
                format!("point of length {} for dim = {}", a.len(), self.dim),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(config_error("tolerance", "must be positive"));
        }
        if !(self.grid_step > 0.0) {
            return Err(config_error("grid_step", "must be positive"));
        }
        if self.paths == 0 {
            return Err(config_error("paths", "must be at least 1"));
        }
        if self.chain_sites == 0 {
            return Err(config_error("chain_sites", "must be at least 1"));
        }
        Ok(())
    }

    /// The family of obtuse variables, with its weights checked at every
    /// step size of the schedule.
    pub fn family(&self) -> Result<AffineFamily> {
        let family = if let Some(p) = &self.probabilities {
            AffineFamily::Weights {
                alphas: p.iter().map(|&c| Affine::constant(c)).collect(),
                seed: self.rotation_seed,
            }
        } else if let Some(p) = &self.probabilities_affine {
            AffineFamily::Weights {
                alphas: p.iter().map(|&[c, s]| Affine::new(c, s)).collect(),
                seed: self.rotation_seed,
            }
        } else if let Some(pl) = &self.planar {
            AffineFamily::Planar {
                p: pl.p.into(),
                q: pl.q.into(),
                r: pl.r.into(),
            }
        } else {
            return Err(config_error("probabilities", "this command needs a probability specification"));
        };
        for &h in &self.h_schedule {
            let (field, weights) = match &family {
                AffineFamily::Weights { alphas, .. } => (
                    if self.probabilities.is_some() { "probabilities" } else { "probabilities_affine" },
                    alphas.iter().map(|a| a.at(h)).collect::<Vec<_>>(),
                ),
                AffineFamily::Planar { p, q, r } => ("planar", vec![p.at(h), q.at(h), r.at(h)]),
            };
            check_weights(field, &weights)
                .map_err(|e| annotate(e, &format!("at h = {h}")))?;
            family.at(h).map_err(|e| config_error(field, format!("at h = {h}: {e}")))?;
        }
        Ok(family)
    }

    /// Step sizes at which the variable is examined: the schedule, or its
    /// first entry (or 1) for families that do not depend on h.
    fn validation_steps(&self, family: &AffineFamily) -> Result<Vec<f64>> {
        if family.depends_on_h() {
            if self.h_schedule.is_empty() {
                return Err(config_error("h_schedule", "is empty but the probabilities depend on h"));
            }
            Ok(self.h_schedule.clone())
        } else {
            Ok(vec![self.h_schedule.first().copied().unwrap_or(1.0)])
        }
    }

    fn alphas(&self) -> Vec<Vec<f64>> {
        if self.alpha_grid.is_empty() {
            (0..self.dim)
                .map(|i| (0..self.dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect()
        } else {
            self.alpha_grid.clone()
        }
    }

    /// Applies the command-line overrides.
    pub fn apply_overrides(&mut self, cli: &Cli) -> Result<()> {
        if let Some(s) = cli.seed {
            self.seed = s;
        }
        if let Some(p) = cli.paths {
            self.paths = p;
        }
        if let Some(o) = &cli.out {
            self.output_dir = o.clone();
        }
        if let Some(t) = cli.tol {
            self.tolerance = t;
        }
        if let Some(m) = cli.max_chain_dim {
            self.max_chain_dim = m;
        }
        self.check()
    }

    /// Largest number of chain sites within `max_chain_dim`, at most `chain_sites`.
    fn chain_space(&self) -> Result<ChainSpace> {
        let mut sites = self.chain_sites;
        while sites > 1 && (self.dim + 1).checked_pow(sites as u32).is_none_or(|d| d > self.max_chain_dim) {
            sites -= 1;
        }
        ChainSpace::with_cap(self.dim, sites, self.max_chain_dim)
    }

    fn csv_comment(&self) -> String {
        format!("# config_sha256={} seed={}\n", self.sha256(), self.seed)
    }

    fn output_path(&self, suffix: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.output_dir)?;
        Ok(self.output_dir.join(format!("{}-{suffix}.csv", self.name)))
    }
}

fn check_weights(field: &str, weights: &[f64]) -> Result<()> {
    if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0 && **w <= 1.0)) {
        return Err(config_error(field, format!("weight {} = {w} is not in (0, 1]", i + 1)));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(config_error(field, format!("weights sum to {sum}, not 1")));
    }
    Ok(())
}

fn annotate(e: Error, context: &str) -> Error {
    match e {
        Error::Config { field, detail } => Error::Config {
            field,
            detail: format!("{context}: {detail}"),
        },
        other => other,
    }
}

fn with_scenario(e: Error, name: &str) -> Error {
    match e {
        Error::Config { .. } | Error::Parse(_) => e,
        other => Error::InvalidParameter(format!("scenario `{name}`: {other}")),
    }
}

/// Resolves `--config` / `--scenario` (default `example-1`) and applies
/// the global overrides.
pub fn resolve_config(args: &ScenarioArgs, cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = match (&args.config, &args.scenario) {
        (Some(path), _) => ScenarioConfig::load(path)?,
        (None, Some(name)) => ScenarioConfig::builtin(name)?,
        (None, None) => ScenarioConfig::builtin("example-1")?,
    };
    cfg.apply_overrides(cli)?;
    Ok(cfg)
}

/// Runs a parsed command line, writing the human-readable report to `out`.
/// Returns the process exit status.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Validate(args) => {
            let cfg = resolve_config(args, cli)?;
            let ok = cmd_validate(&cfg, out).map_err(|e| with_scenario(e, &cfg.name))?;
            Ok(if ok { 0 } else { 1 })
        }
        Command::ReproducePaper => {
            let mut dir = cli.out.clone().unwrap_or_else(default_output_dir);
            if dir.as_os_str().is_empty() {
                dir = default_output_dir();
            }
            cmd_reproduce_paper(&dir, cli.max_chain_dim.unwrap_or(default_max_chain_dim()), out)?;
            Ok(0)
        }
        Command::Converge {
            scenario,
            monte_carlo,
        } => {
            let cfg = resolve_config(scenario, cli)?;
            let ok = cmd_converge(&cfg, *monte_carlo, out).map_err(|e| with_scenario(e, &cfg.name))?;
            Ok(if ok { 0 } else { 1 })
        }
        Command::Simulate { scenario, process } => {
            let mut cfg = resolve_config(scenario, cli)?;
            if let Some(p) = process {
                cfg.process = *p;
            }
            cmd_simulate(&cfg, out).map_err(|e| with_scenario(e, &cfg.name))?;
            Ok(0)
        }
        Command::Diagonalize(args) => {
            let cfg = resolve_config(args, cli)?;
            cmd_diagonalize(&cfg, out).map_err(|e| with_scenario(e, &cfg.name))?;
            Ok(0)
        }
    }
}

/// Parses `args` (program name first) and runs them. Errors are reported
/// on `err` with exit status 2.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

/// One line of the validation report.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub h: f64,
    pub check: String,
    pub residual: f64,
    pub tolerance: f64,
}

impl CheckRow {
    pub fn passes(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// All validation checks of the scenario, at every relevant step size.
///
/// Residuals of quantities built from `v ⊗ v` are compared with the
/// tolerance scaled by `max(1, max_s ‖v_s‖²)`, since the values of an
/// h-dependent family can grow like `1/√h`.
pub fn validation_checks(cfg: &ScenarioConfig) -> Result<Vec<CheckRow>> {
    let family = cfg.family()?;
    let mut rows = Vec::new();
    let space = cfg.chain_space()?;
    for h in cfg.validation_steps(&family)? {
        let x = family.at(h)?;
        let scale = x
            .values()
            .iter()
            .map(|v| v.norm_squared())
            .fold(1.0_f64, f64::max);
        let tol = cfg.tolerance;
        let mut push = |check: &str, residual: f64, tolerance: f64| {
            rows.push(CheckRow {
                h,
                check: check.to_string(),
                residual,
                tolerance,
            })
        };
        let report = x.validate(tol * scale);
        for (name, residual) in report.residuals() {
            push(name, residual, tol * scale);
        }
        let t = tensor_of(&x);
        let class = classify(&t, tol * scale);
        push("tensor_index_symmetry", class.index_symmetry, tol * scale);
        push("tensor_sesqui_symmetry", class.sesqui_residual, tol * scale);
        push("structure_equation", structure_residual(&x, &t), tol * scale);
        push("discrete_structure_equation", discrete_structure_residual(&x, h), tol * scale * h);

        let ops = mult_op(&t, 0, space)?;
        let mut oracle_gap = 0.0_f64;
        for (c, op) in ops.iter().enumerate() {
            for col in 0..space.dim() {
                let want = pointwise_mult_oracle(&x, c, 0, space, col)?;
                let got = op.column(col);
                oracle_gap = oracle_gap.max(column_gap(&got, &want));
            }
        }
        push("chain_operator_oracle", oracle_gap, tol * scale);
        let mut moment_gap = 0.0_f64;
        for (c, op) in ops.iter().enumerate() {
            for k in 1..=4u32 {
                let want = x.expect(|v| v[c].powi(k as i32));
                let got = vacuum_moment(op, k);
                moment_gap = moment_gap.max((want - got).abs() / want.abs().max(1.0));
            }
        }
        push("vacuum_moments", moment_gap, tol * scale);
    }
    Ok(rows)
}

fn column_gap(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let mut dense = std::collections::BTreeMap::<usize, f64>::new();
    for &(r, v) in a {
        *dense.entry(r).or_default() += v;
    }
    for &(r, v) in b {
        *dense.entry(r).or_default() -= v;
    }
    dense.values().fold(0.0, |m, v| m.max(v.abs()))
}

/// `validate`: prints a table of residuals, writes `<name>-validate.csv`
/// (columns `h, check, residual, tolerance, pass`), and returns whether
/// every residual is within its tolerance.
pub fn cmd_validate(cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<bool> {
    let rows = validation_checks(cfg)?;
    writeln!(out, "scenario {} (dim {})", cfg.name, cfg.dim)?;
    for row in &rows {
        writeln!(
            out,
            "  h = {:<8} {:<30} {:>12.3e}  (tol {:.1e})  {}",
            row.h,
            row.check,
            row.residual,
            row.tolerance,
            if row.passes() { "ok" } else { "FAIL" }
        )?;
    }
    let ok = rows.iter().all(CheckRow::passes);
    writeln!(out, "{}", if ok { "all checks passed" } else { "some checks failed" })?;

    let path = cfg.output_path("validate")?;
    let mut file = fs::File::create(&path)?;
    file.write_all(cfg.csv_comment().as_bytes())?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["h", "check", "residual", "tolerance", "pass"])?;
    for row in &rows {
        w.write_record([
            row.h.to_string(),
            row.check.clone(),
            row.residual.to_string(),
            row.tolerance.to_string(),
            row.passes().to_string(),
        ])?;
    }
    w.flush()?;
    writeln!(out, "report written to {}", path.display())?;
    Ok(ok)
}

/// The convergence report of a scenario, with Monte Carlo columns when asked.
pub fn scenario_convergence(cfg: &ScenarioConfig, monte_carlo: bool) -> Result<ConvergenceReport> {
    if cfg.h_schedule.is_empty() {
        return Err(config_error("h_schedule", "is empty"));
    }
    let family = cfg.family()?;
    let mut report = convergence_report(&family, &cfg.h_schedule, &cfg.alphas(), cfg.horizon, cfg.seed)?;
    if monte_carlo {
        report.attach_monte_carlo(&family, cfg.paths, cfg.seed)?;
    }
    Ok(report)
}

/// `converge`: writes `<name>-converge.csv` and returns whether the max
/// error is non-increasing (10% slack) and ends below `error_threshold`.
pub fn cmd_converge(cfg: &ScenarioConfig, monte_carlo: bool, out: &mut dyn Write) -> Result<bool> {
    let report = scenario_convergence(cfg, monte_carlo)?;
    writeln!(out, "scenario {}: t = {}", cfg.name, cfg.horizon)?;
    write_limit_summary(out, &report.limit)?;
    writeln!(out, "  {:<10} {:>14}", "h", "max |error|")?;
    for (h, e) in report.max_errors() {
        writeln!(out, "  {:<10} {:>14.6e}", h, e)?;
    }
    if monte_carlo {
        let worst = report
            .rows
            .iter()
            .filter_map(|r| r.monte_carlo.map(|mc| (mc.value - r.discrete).norm() / mc.stderr.max(f64::MIN_POSITIVE)))
            .fold(0.0, f64::max);
        writeln!(out, "  Monte Carlo ({} paths): worst deviation {:.2} standard errors", cfg.paths, worst)?;
    }
    let ok = report.is_non_increasing(0.1) && report.final_error() <= cfg.error_threshold;
    writeln!(
        out,
        "{}",
        if ok { "converging" } else { "convergence check failed" }
    )?;
    let path = cfg.output_path("converge")?;
    let mut file = fs::File::create(&path)?;
    file.write_all(cfg.csv_comment().as_bytes())?;
    report.write_csv(file)?;
    writeln!(out, "table written to {}", path.display())?;
    Ok(ok)
}

/// Law of the limit of the scenario's rescaled walks.
pub fn scenario_limit(cfg: &ScenarioConfig) -> Result<LimitSpec> {
    let family = cfg.family()?;
    let estimate = h_limit_tensor(&family, &extrapolation_schedule(cfg.grid_step))?;
    if !estimate.classification.doubly_symmetric {
        return Err(Error::NotDoublySymmetric(format!(
            "extrapolated limit tensor: quartic residual {:.3e}",
            estimate.classification.doubly_residual
        )));
    }
    limit_from_tensor(&estimate.tensor, cfg.seed, LIMIT_TENSOR_TOL)
}

fn write_trajectories(cfg: &ScenarioConfig, suffix: &str, paths: &[Trajectory]) -> Result<PathBuf> {
    let path = cfg.output_path(suffix)?;
    let mut file = fs::File::create(&path)?;
    file.write_all(cfg.csv_comment().as_bytes())?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["time".to_string()];
    header.extend((1..=cfg.dim).map(|i| format!("x_{i}")));
    header.push("path_id".into());
    w.write_record(&header)?;
    for (id, tr) in paths.iter().enumerate() {
        for (t, x) in tr.times.iter().zip(&tr.positions) {
            let mut rec = vec![t.to_string()];
            rec.extend(x.iter().map(|v| v.to_string()));
            rec.push(id.to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(path)
}

/// `simulate`: `paths` trajectories on `[0, horizon]` with step
/// `grid_step`, written to `<name>-walk.csv` and/or `<name>-limit.csv`
/// (columns `time, x_1..x_n, path_id`).
pub fn cmd_simulate(cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if matches!(cfg.process, Process::Walk | Process::Both) {
        let family = cfg.family()?;
        let scenario = WalkScenario::new(family.at(cfg.grid_step)?, cfg.grid_step, cfg.horizon)?;
        let paths = sample_walks(&scenario, cfg.seed, cfg.paths);
        let p = write_trajectories(cfg, "walk", &paths)?;
        writeln!(out, "{} walk paths (h = {}) written to {}", cfg.paths, cfg.grid_step, p.display())?;
        written.push(p);
    }
    if matches!(cfg.process, Process::Limit | Process::Both) {
        let spec = scenario_limit(cfg)?;
        write_limit_summary(out, &spec)?;
        let paths = sample_limit_paths(&spec, cfg.horizon, cfg.grid_step, cfg.seed, cfg.paths)?;
        let p = write_trajectories(cfg, "limit", &paths)?;
        writeln!(out, "{} limit paths written to {}", cfg.paths, p.display())?;
        written.push(p);
    }
    Ok(written)
}

/// `diagonalize`: the explicit `tensor` of the config, or else the
/// extrapolated limit tensor of its family. Writes `<name>-diagonalize.csv`
/// with columns `eigenvalue, e_1..e_n, jump, intensity`.
pub fn cmd_diagonalize(cfg: &ScenarioConfig, out: &mut dyn Write) -> Result<()> {
    let (tensor, tol) = match &cfg.tensor {
        Some(coeffs) => (Tensor3::from_flat(cfg.dim, coeffs.clone())?, cfg.tolerance),
        None => {
            let family = cfg.family()?;
            let est = h_limit_tensor(&family, &extrapolation_schedule(cfg.grid_step))?;
            (tidy(&est.tensor, 1e-7), cfg.tolerance.max(LIMIT_TENSOR_TOL))
        }
    };
    let class = classify(&tensor, tol);
    writeln!(out, "tensor T(v):")?;
    write!(out, "{tensor}")?;
    writeln!(
        out,
        "doubly symmetric: {} (residual {:.3e})",
        class.doubly_symmetric, class.doubly_residual
    )?;
    let family = diagonalize(&tensor, cfg.seed, tol)?;
    let spec = limit_from_tensor(&tensor, cfg.seed, tol)?;
    write_limit_summary(out, &spec)?;
    let back = reconstruct(&family);
    writeln!(out, "reconstruction error {:.3e}", back.max_abs_diff(&tensor))?;

    let path = cfg.output_path("diagonalize")?;
    let mut file = fs::File::create(&path)?;
    file.write_all(cfg.csv_comment().as_bytes())?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["eigenvalue".to_string()];
    header.extend((1..=cfg.dim).map(|i| format!("e_{i}")));
    header.extend(["jump", "intensity"].map(String::from));
    w.write_record(&header)?;
    for (e, &lambda) in family.basis.iter().zip(&family.eigenvalues) {
        let jump = lambda != 0.0;
        let mut rec = vec![lambda.to_string()];
        rec.extend(e.iter().map(|v| v.to_string()));
        rec.push(jump.to_string());
        rec.push(if jump { (lambda * lambda).recip().to_string() } else { String::new() });
        w.write_record(&rec)?;
    }
    w.flush()?;
    writeln!(out, "family written to {}", path.display())?;
    Ok(())
}

fn write_limit_summary(out: &mut dyn Write, spec: &LimitSpec) -> std::io::Result<()> {
    writeln!(out, "{}", limit_summary(spec))?;
    for j in &spec.jumps {
        writeln!(out, "  jump x = {}, intensity {}", fmt_vec(&j.vector), fmt_num(j.intensity))?;
    }
    Ok(())
}

/// `"Brownian dimension d, no jumps"` or `"Brownian dimension d, k jump(s)"`.
pub fn limit_summary(spec: &LimitSpec) -> String {
    let d = spec.brownian_dimension();
    match spec.jumps.len() {
        0 => format!("limit: Brownian dimension {d}, no jumps"),
        k => format!("limit: Brownian dimension {d}, {k} jump(s)"),
    }
}

/// Rounds entries within `eps` of an integer and zeroes entries below `eps`.
fn tidy(t: &Tensor3, eps: f64) -> Tensor3 {
    let n = t.dim();
    Tensor3::from_fn(n, |i, j, k| snap(t.get(i, j, k), eps))
}

fn snap(v: f64, eps: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= eps {
        r + 0.0
    } else {
        v
    }
}

fn fmt_num(v: f64) -> String {
    let s = snap(v, 1e-7);
    if s == s.trunc() && s.abs() < 1e15 {
        format!("{}", s as i64)
    } else {
        format!("{s:.6}").trim_end_matches('0').to_string()
    }
}

fn fmt_vec(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_num(*x)).collect();
    format!("({})", parts.join(", "))
}

/// A published number next to its recomputed value.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub example: usize,
    pub quantity: String,
    pub published: String,
    pub computed: String,
    pub agrees: bool,
}

impl Comparison {
    fn numeric(example: usize, quantity: &str, published: f64, computed: f64) -> Self {
        Self {
            example,
            quantity: quantity.to_string(),
            published: fmt_num(published),
            computed: fmt_num(computed),
            agrees: (published - computed).abs() <= 1e-6 * published.abs().max(1.0),
        }
    }

    fn text(example: usize, quantity: &str, published: &str, computed: String) -> Self {
        Self {
            example,
            quantity: quantity.to_string(),
            agrees: published == computed,
            published: published.to_string(),
            computed,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<44} published {:<28} computed {}",
            if self.agrees { "  ok  " } else { "  FLAG" },
            self.quantity,
            self.published,
            self.computed
        )
    }
}

/// Everything `reproduce-paper` prints for one example.
#[derive(Clone, Debug)]
pub struct ExampleReport {
    pub index: usize,
    pub text: String,
    pub comparisons: Vec<Comparison>,
    pub convergence: ConvergenceReport,
}

const SMALL_H: f64 = 1e-10;

/// Recomputes one of the three planar examples; `max_chain_dim` bounds
/// the chain used to check the operator decompositions.
pub fn reproduce_example(index: usize, max_chain_dim: usize) -> Result<ExampleReport> {
    let mut cfg = ScenarioConfig::builtin(&format!("example-{index}"))?;
    cfg.max_chain_dim = max_chain_dim;
    let family = cfg.family()?;
    let mut text = String::new();
    let mut cmp = Vec::new();
    let AffineFamily::Planar { p, q, r } = &family else {
        unreachable!("built-in scenarios are planar")
    };
    let s2 = 0.5f64.sqrt();
    let h = 0.01;

    // Values and tensor at a finite step, plus the limit tensor.
    let coeffs_at = |h: f64| planar_chain_coefficients(p.at(h), q.at(h), r.at(h));
    let x_h = family.at(h)?;
    let t_h = tensor_of(&x_h);
    let est = h_limit_tensor(&family, &extrapolation_schedule(1e-4))?;
    let s = tidy(&est.tensor, 1e-7);
    let spec = limit_from_tensor(&s, 0, LIMIT_TENSOR_TOL)?;

    let _ = writeln!(
        text,
        "== example {index}: p = {}, q = {}, r = {}",
        fmt_affine(p),
        fmt_affine(q),
        fmt_affine(r)
    );
    let (a, b, c, d) = coeffs_at(h)?;
    if family.depends_on_h() {
        let _ = writeln!(text, "values at h = {h}: a = {a:.6}, b = {b:.6}, c = {c:.6}, d = {d:.6}");
    } else {
        let _ = writeln!(
            text,
            "values: a = {}, b = {}, c = {}, d = {}",
            fmt_num(a),
            fmt_num(b),
            fmt_num(c),
            fmt_num(d)
        );
    }
    for (k, v) in x_h.values().iter().enumerate() {
        let _ = writeln!(text, "  v_{} = {}  with probability {:.6}", k + 1, fmt_vec(v), x_h.probs()[k]);
    }
    let _ = writeln!(text, "tensor T(v) at h = {h}:");
    let _ = write!(text, "{t_h}");
    let _ = writeln!(text, "multiplication operators at h = {h}:");
    for coord in 0..2 {
        let _ = writeln!(text, "  X_{} = {}", coord + 1, decomposition(&t_h, coord));
    }
    let space = cfg.chain_space()?;
    let gap = chain_gap(&x_h, space)?;
    let _ = writeln!(
        text,
        "  chain check on {} sites (dimension {}): max deviation from the pointwise product {:.1e}",
        space.sites(),
        space.dim(),
        gap
    );
    let _ = writeln!(text, "limit tensor S = lim √h T(h):");
    let _ = write!(text, "{s}");
    let _ = writeln!(text, "limit operators:");
    for coord in 0..2 {
        let _ = writeln!(text, "  X_{}(t) = {}", coord + 1, decomposition(&s, coord));
    }
    let _ = writeln!(text, "{}", limit_summary(&spec));
    for j in &spec.jumps {
        let _ = writeln!(text, "  jump x = {}, intensity {}", fmt_vec(&j.vector), fmt_num(j.intensity));
    }

    // Leading-order coefficients a, b, c, d as h → 0.
    let (la, lb, lc, ld) = coeffs_at(SMALL_H)?;
    let rt = SMALL_H.sqrt();
    let jump_parallel = |dir: [f64; 2]| {
        let u = DVector::from_vec(dir.to_vec()).normalize();
        spec.jumps.iter().any(|j| (j.vector.normalize() - &u).norm() < 1e-6)
    };
    let lim = |i: usize, j: usize, k: usize| s.get(i - 1, j - 1, k - 1);
    match index {
        1 => {
            for (name, want, got) in [("a", 1.0, a), ("b", -1.0, b), ("c", 1.0, c), ("d", -2.0, d)] {
                cmp.push(Comparison::numeric(1, name, want, got));
            }
            for (ijk, want) in [
                ((1, 1, 1), 0.0),
                ((1, 1, 2), 0.0),
                ((1, 2, 1), 0.0),
                ((1, 2, 2), -1.0),
                ((2, 2, 1), -1.0),
                ((2, 2, 2), -1.0),
            ] {
                let (i, j, k) = ijk;
                cmp.push(Comparison::numeric(1, &format!("T^{{{i}{j}}}_{k}"), want, t_h.get(i - 1, j - 1, k - 1)));
            }
            cmp.push(Comparison::text(1, "T(v)", "((0, -y), (-y, -x - y))", fmt_planar_matrix(&t_h)));
            cmp.push(Comparison::text(1, "X_1", "a^1_0 + a^0_1 - a^2_2", decomposition(&t_h, 0)));
            cmp.push(Comparison::text(
                1,
                "X_2",
                "a^2_0 + a^0_2 - a^1_2 - a^2_1 - a^2_2",
                decomposition(&t_h, 1),
            ));
            cmp.push(Comparison::text(1, "limit", "limit: Brownian dimension 2, no jumps", limit_summary(&spec)));
            let one_site = ChainSpace::new(2, 1)?;
            let published = published_example_one_ops(one_site)?;
            for (coord, (want, got)) in published.iter().zip(mult_op(&t_h, 0, one_site)?).enumerate() {
                let same = want.to_dump_string() == got.to_dump_string();
                cmp.push(Comparison::text(
                    1,
                    &format!("X_{} one-site operator dump", coord + 1),
                    "identical",
                    if same { "identical" } else { "differs" }.to_string(),
                ));
            }
        }
        2 => {
            cmp.push(Comparison::numeric(2, "a", 1.0, la));
            cmp.push(Comparison::numeric(2, "b", -1.0, lb));
            cmp.push(Comparison::numeric(2, "√h·c", 1.0, lc * rt));
            cmp.push(Comparison::numeric(2, "d/√h", -2.0, ld / rt));
            let t0 = rescale_at(&family, SMALL_H)?;
            cmp.push(Comparison::numeric(2, "√h·T^{22}_2 as h → 0 (T(v)_22 ∝ y/√h)", -1.0, t0.get(1, 1, 1)));
            cmp.push(Comparison::numeric(2, "S^{12}_2", 0.0, lim(1, 2, 2)));
            cmp.push(Comparison::numeric(2, "S^{22}_1", 0.0, lim(2, 2, 1)));
            cmp.push(Comparison::numeric(2, "S^{22}_2", -1.0, lim(2, 2, 2)));
            cmp.push(Comparison::text(2, "limit tensor Φ(v)", "((0, 0), (0, -y))", fmt_planar_matrix(&s)));
            cmp.push(Comparison::text(
                2,
                "limit X_2",
                "a^2_0 + a^0_2 - a^2_2",
                decomposition(&s, 1),
            ));
            cmp.push(Comparison::text(2, "limit", "limit: Brownian dimension 1, 1 jump(s)", limit_summary(&spec)));
            cmp.push(Comparison::text(2, "jump direction (0,1)", "true", jump_parallel([0.0, 1.0]).to_string()));
            let intensity = spec.jumps.first().map_or(f64::NAN, |j| j.intensity);
            cmp.push(Comparison::numeric(2, "jump intensity", 1.0, intensity));
        }
        3 => {
            cmp.push(Comparison::numeric(3, "a/√h", 2f64.sqrt(), la / rt));
            cmp.push(Comparison::numeric(3, "√h·b", -s2, lb * rt));
            cmp.push(Comparison::numeric(3, "√h·c", s2, lc * rt));
            cmp.push(Comparison::numeric(3, "√h·d", -s2, ld * rt));
            let t0 = rescale_at(&family, SMALL_H)?;
            cmp.push(Comparison::numeric(3, "√h·T^{11}_1 (coefficient of a^1_1 in X_1)", s2, t0.get(0, 0, 0)));
            cmp.push(Comparison::numeric(3, "√h·T^{22}_1 (coefficient of a^2_2 in X_1)", -s2, t0.get(1, 1, 0)));
            cmp.push(Comparison::numeric(3, "√h·T^{12}_2 (coefficient of a^1_2 in X_2)", -s2, t0.get(0, 1, 1)));
            cmp.push(Comparison::numeric(3, "S^{11}_1 (d[X_1,X_1])", -s2, lim(1, 1, 1)));
            cmp.push(Comparison::numeric(3, "S^{12}_2 (d[X_1,X_2])", -s2, lim(1, 2, 2)));
            cmp.push(Comparison::numeric(3, "S^{22}_1 (d[X_2,X_2])", -s2, lim(2, 2, 1)));
            cmp.push(Comparison::text(3, "limit", "limit: Brownian dimension 0, 2 jump(s)", limit_summary(&spec)));
            cmp.push(Comparison::text(3, "jump direction (-1,1)", "true", jump_parallel([-1.0, 1.0]).to_string()));
            cmp.push(Comparison::text(3, "jump direction (-1,-1)", "true", jump_parallel([-1.0, -1.0]).to_string()));
            for j in &spec.jumps {
                cmp.push(Comparison::numeric(
                    3,
                    &format!("intensity of jump {}", fmt_vec(&j.vector)),
                    2.0,
                    j.intensity,
                ));
            }
        }
        _ => unreachable!(),
    }

    let convergence = convergence_report(&family, &DEFAULT_SCHEDULE, &cfg.alphas(), 1.0, 0)?;
    let grid: Vec<String> = cfg
        .alphas()
        .iter()
        .map(|a| fmt_vec(&DVector::from_column_slice(a)))
        .collect();
    let _ = writeln!(text, "convergence at t = 1, α ∈ {{{}}}:", grid.join(", "));
    for (h, e) in convergence.max_errors() {
        let _ = writeln!(text, "  h = {h:<8} max |E e^{{i⟨α,X_t^h⟩}} − E e^{{i⟨α,X_t⟩}}| = {e:.6e}");
    }
    let _ = writeln!(text, "comparison with the published values:");
    for c in &cmp {
        let _ = writeln!(text, "{}", c.line());
    }
    Ok(ExampleReport {
        index,
        text,
        comparisons: cmp,
        convergence,
    })
}

/// The one-site operators `X_1 = a^1_0 + a^0_1 - a^2_2` and
/// `X_2 = a^2_0 + a^0_2 - a^1_2 - a^2_1 - a^2_2`, assembled from matrix units.
fn published_example_one_ops(space: ChainSpace) -> Result<[ChainOperator; 2]> {
    let sum = |terms: &[(f64, usize, usize)]| -> Result<ChainOperator> {
        let units = terms
            .iter()
            .map(|&(_, i, j)| site_op(i, j, 0, space))
            .collect::<Result<Vec<_>>>()?;
        let weighted: Vec<(f64, &ChainOperator)> = terms.iter().map(|t| t.0).zip(&units).collect();
        ChainOperator::linear_combination(space, &weighted)
    };
    Ok([
        sum(&[(1.0, 1, 0), (1.0, 0, 1), (-1.0, 2, 2)])?,
        sum(&[(1.0, 2, 0), (1.0, 0, 2), (-1.0, 1, 2), (-1.0, 2, 1), (-1.0, 2, 2)])?,
    ])
}

/// Writes `example-<k>-X<c>.dump` (one site, `h = 0.01`) for every
/// coordinate, and for the first example also the operators assembled
/// from the published decompositions as `example-1-X<c>-published.dump`.
fn write_operator_dumps(dir: &Path, index: usize) -> Result<Vec<PathBuf>> {
    let family = ScenarioConfig::builtin(&format!("example-{index}"))?.family()?;
    let t = tensor_of(&family.at(0.01)?);
    let space = ChainSpace::new(t.dim(), 1)?;
    let mut written = Vec::new();
    for (c, op) in mult_op(&t, 0, space)?.iter().enumerate() {
        let path = dir.join(format!("example-{index}-X{}.dump", c + 1));
        op.write_dump(fs::File::create(&path)?)?;
        written.push(path);
    }
    if index == 1 {
        for (c, op) in published_example_one_ops(space)?.iter().enumerate() {
            let path = dir.join(format!("example-1-X{}-published.dump", c + 1));
            op.write_dump(fs::File::create(&path)?)?;
            written.push(path);
        }
    }
    Ok(written)
}

fn rescale_at(family: &AffineFamily, h: f64) -> Result<Tensor3> {
    Ok(tensor_of(&family.at(h)?).scaled(h.sqrt()))
}

fn fmt_affine(a: &Affine) -> String {
    match (a.constant, a.slope) {
        (c, 0.0) => fmt_num(c),
        (0.0, s) => format!("{}h", fmt_coeff(s)),
        (c, s) => format!("{} {} {}h", fmt_num(c), if s < 0.0 { '-' } else { '+' }, fmt_coeff(s.abs())),
    }
}

/// The planar matrix `T(v)` with `v = (x, y)`, e.g. `((0, -y), (-y, -x - y))`.
fn fmt_planar_matrix(t: &Tensor3) -> String {
    let entry = |i: usize, j: usize| {
        let mut s = String::new();
        for (k, var) in ["x", "y"].iter().enumerate() {
            let c = snap(t.get(i, j, k), 1e-7);
            if c == 0.0 {
                continue;
            }
            let mag = if c.abs() == 1.0 { String::new() } else { fmt_num(c.abs()) };
            if s.is_empty() {
                s = format!("{}{mag}{var}", if c < 0.0 { "-" } else { "" });
            } else {
                s = format!("{s} {} {mag}{var}", if c < 0.0 { '-' } else { '+' });
            }
        }
        if s.is_empty() {
            "0".to_string()
        } else {
            s
        }
    };
    format!(
        "(({}, {}), ({}, {}))",
        entry(0, 0),
        entry(0, 1),
        entry(1, 0),
        entry(1, 1)
    )
}

fn fmt_coeff(s: f64) -> String {
    if s == 1.0 {
        String::new()
    } else {
        fmt_num(s)
    }
}

fn chain_gap(x: &ObtuseVariable, space: ChainSpace) -> Result<f64> {
    let t = tensor_of(x);
    let mut gap = 0.0_f64;
    for site in 0..space.sites() {
        let ops = mult_op(&t, site, space)?;
        for (c, op) in ops.iter().enumerate() {
            for col in 0..space.dim() {
                let want = pointwise_mult_oracle(x, c, site, space, col)?;
                gap = gap.max(column_gap(&op.column(col), &want));
            }
        }
    }
    Ok(gap)
}

/// `reproduce-paper`: prints the three example blocks, writes them to
/// `reproduce-paper.txt`, each convergence table to
/// `example-<k>-converge.csv` and the one-site operator dumps to
/// `example-<k>-X<c>.dump` under `dir`.
pub fn cmd_reproduce_paper(dir: &Path, max_chain_dim: usize, out: &mut dyn Write) -> Result<Vec<ExampleReport>> {
    fs::create_dir_all(dir)?;
    let mut full = String::new();
    let mut reports = Vec::new();
    for index in 1..=3 {
        let rep = reproduce_example(index, max_chain_dim)?;
        full.push_str(&rep.text);
        full.push('\n');
        let mut cfg = ScenarioConfig::builtin(&format!("example-{index}"))?;
        cfg.output_dir = dir.to_path_buf();
        cfg.max_chain_dim = max_chain_dim;
        let mut file = fs::File::create(cfg.output_path("converge")?)?;
        file.write_all(cfg.csv_comment().as_bytes())?;
        rep.convergence.write_csv(file)?;
        write_operator_dumps(dir, index)?;
        reports.push(rep);
    }
    let flagged: Vec<&Comparison> = reports
        .iter()
        .flat_map(|r| r.comparisons.iter())
        .filter(|c| !c.agrees)
        .collect();
    let _ = writeln!(full, "== {} flagged difference(s) with the published values", flagged.len());
    for c in flagged {
        let _ = writeln!(full, "example {}: {}", c.example, c.line().trim_start());
    }
    out.write_all(full.as_bytes())?;
    fs::write(dir.join("reproduce-paper.txt"), &full)?;
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse_and_round_trip_through_toml() {
        for name in ["example-1", "example-2", "example-3"] {
            let cfg = ScenarioConfig::builtin(name).unwrap();
            cfg.check().unwrap();
            cfg.family().unwrap();
            let again = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
            assert_eq!(again, cfg);
            assert_eq!(again.sha256(), cfg.sha256());
        }
        assert!(ScenarioConfig::builtin("example-4").is_err());
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let text = "name = \"bad\"\ndim = 2\nprobabilities = [0.3, 0.3, 0.3]\n";
        let err = ScenarioConfig::from_toml_str(text).unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "probabilities"), "{err}");
        assert!(err.to_string().contains("probabilities"));
    }

    #[test]
    fn affine_weights_checked_along_schedule() {
        let text = "name = \"x\"\ndim = 1\nprobabilities_affine = [[0.5, 1.0], [0.5, -1.0]]\nh_schedule = [0.6, 0.1]\n";
        let cfg = ScenarioConfig::from_toml_str(text).unwrap();
        let err = cfg.family().unwrap_err();
        assert!(err.to_string().contains("h = 0.6"), "{err}");
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = ScenarioConfig::from_toml_str("name = \"x\"\ndim = \n").unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = ScenarioConfig::from_toml_str("name = \"x\"\ndim = 1\nprobabilities = [0.5, 0.5]\nbogus = 1\n")
            .unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn schedule_must_decrease() {
        let text = "name = \"x\"\ndim = 1\nprobabilities = [0.5, 0.5]\nh_schedule = [0.1, 0.2]\n";
        let err = ScenarioConfig::from_toml_str(text).unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "h_schedule"));
    }

    #[test]
    fn chain_space_respects_cap() {
        let mut cfg = ScenarioConfig::builtin("example-1").unwrap();
        cfg.chain_sites = 6;
        cfg.max_chain_dim = 100;
        assert_eq!(cfg.chain_space().unwrap().sites(), 4);
    }

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(-1.0000000000001), "-1");
        assert_eq!(fmt_num(0.5f64.sqrt()), "0.707107");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_affine(&Affine::new(0.5, -1.0)), "0.5 - h");
        assert_eq!(fmt_affine(&Affine::new(1.0, -2.0)), "1 - 2h");
        assert_eq!(fmt_affine(&Affine::new(0.0, 1.0)), "h");
        assert_eq!(fmt_affine(&Affine::constant(1.0 / 3.0)), "0.333333");
        let t = tensor_of(&ObtuseVariable::from_planar_chain(0.5, 1.0 / 3.0, 1.0 / 6.0).unwrap());
        assert_eq!(fmt_planar_matrix(&t), "((0, -y), (-y, -x - y))");
        assert_eq!(fmt_planar_matrix(&t.scaled(-0.5)), "((0, 0.5y), (0.5y, 0.5x + 0.5y))");
    }
}
