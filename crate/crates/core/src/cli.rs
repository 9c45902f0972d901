//! The `hjb` command-line front end.
//!
//! Exit codes: 0 converged (or certificate passed), 1 input or model error,
//! 2 budget exhausted, 3 diverged, 4 certificate margin violated.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::certificates::{
    check_mrf, check_sc1, check_sc2, default_controls, Certificate, MarginReport, RateFn, Sampling,
};
use crate::error::{Error, Result};
use crate::fields::{Axis, Grid, ValueField};
use crate::hamiltonians::{ControlMesh, Model};
use crate::problem::expr::{compile, state_control_resolver, Expr};
use crate::problem::spec_file::ProblemFile;
use crate::problem::{builtin, ControlProblem, ControlSet, TargetSet, BUILTIN_NAMES};
use crate::solvers::{
    limit_discounted, limit_finite_horizon, solve_discounted, solve_ergodic, solve_finite_horizon,
    solve_kruzkov, ConvergenceReport, HorizonMode, SolverConfig, Verdict,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_MARGIN: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "hjb",
    version,
    about = "Value functions of deterministic optimal control problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one solver and write the value field, report and manifest.
    Solve(SolveArgs),
    /// Compare the growing-horizon and vanishing-discount limits.
    Limits(LimitsArgs),
    /// Check a restraint, stability or cost-bound certificate on samples.
    Certify(CertifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Finite,
    Discounted,
    Kruzkov,
    Ergodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Physical,
    Extended,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Problem file (TOML) or the name of a built-in problem.
    pub spec: String,
    /// Grid as `min:max:nodes[:periodic]` per axis, comma separated.
    /// Defaults to the `[grid]` section of the problem file.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// `default`, `sphere:RADII:PER_AXIS`, `lattice:PER_AXIS` or `finite`.
    #[arg(long, default_value = "default")]
    pub mesh: String,
    /// Scheme time step.
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 200_000)]
    pub max_iter: usize,
    /// Worker threads for the sweeps (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// `point:X`, `ball:X:R` or `box:LO:HI` with comma separated vectors.
    #[arg(long, allow_hyphen_values = true)]
    pub target: Option<String>,
    #[arg(long, value_enum, default_value = "physical")]
    pub horizon_mode: ModeArg,
    /// Values above this are treated as infinite by the limit drivers.
    #[arg(long, default_value_t = 1e4)]
    pub infinity_threshold: f64,
    #[arg(long, default_value = "hjb-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub solver: SolverKind,
    /// Horizon for the finite-horizon solver.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Discount rate for the discounted solver.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Decreasing discount rates for the ergodic solver (default 2^-1 .. 2^-10).
    #[arg(long, value_delimiter = ',')]
    pub delta_schedule: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LimitsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Increasing horizons for the growing-horizon limit.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64,128")]
    pub horizon_schedule: Vec<f64>,
    /// Decreasing discount rates for the vanishing-discount limit.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.25,0.125,0.0625,0.03125,0.015625,0.0078125"
    )]
    pub delta_schedule: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Certificate file (TOML).
    pub certificate: PathBuf,
}

#[derive(Debug, Serialize)]
struct Manifest<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    problem: &'a str,
    grid: Option<&'a Grid>,
    mesh_points: usize,
    target: Option<String>,
    config: &'a SolverConfig,
    arguments: &'a T,
    seed: u64,
    /// The only field that changes between identical runs.
    created_unix: u64,
}

/// Parses the arguments and runs the command; returns the exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    let threads = match &cli.command {
        Command::Solve(a) => a.common.threads,
        Command::Limits(a) => a.common.threads,
        Command::Certify(a) => a.common.threads,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let result = match builder.build() {
        Ok(pool) => pool.install(|| match &cli.command {
            Command::Solve(a) => solve(a),
            Command::Limits(a) => limits(a),
            Command::Certify(a) => certify(a),
        }),
        Err(e) => Err(Error::Config(format!("cannot start worker threads: {e}"))),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Converged => EXIT_OK,
        Verdict::BudgetExhausted => EXIT_BUDGET,
        Verdict::Diverged => EXIT_DIVERGED,
    }
}

/// Worst of two verdicts (diverged > budget exhausted > converged).
fn worst(a: Verdict, b: Verdict) -> Verdict {
    let rank = |v| match v {
        Verdict::Converged => 0,
        Verdict::BudgetExhausted => 1,
        Verdict::Diverged => 2,
    };
    if rank(a) >= rank(b) {
        a
    } else {
        b
    }
}

/// A loaded problem with the grid declared alongside it, if any.
struct Loaded {
    problem: ControlProblem,
    grid: Option<Grid>,
}

fn load_problem(spec: &str) -> Result<Loaded> {
    let path = Path::new(spec);
    if !path.exists() && BUILTIN_NAMES.contains(&spec) {
        return Ok(Loaded {
            problem: builtin(spec)?,
            grid: None,
        });
    }
    let file = ProblemFile::load(path)?;
    let grid = match &file.grid {
        Some(g) => Some(Grid::new(
            g.axes
                .iter()
                .map(|a| {
                    if a.periodic {
                        Axis::periodic(a.min, a.max, a.nodes)
                    } else {
                        Axis::new(a.min, a.max, a.nodes)
                    }
                })
                .collect(),
        )?),
        None => None,
    };
    Ok(Loaded {
        problem: file.build()?,
        grid,
    })
}

fn parse_vector(text: &str, what: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{what}: `{v}` is not a number")))
        })
        .collect()
}

/// `point:X`, `ball:X:R` or `box:LO:HI`.
pub fn parse_target(text: &str, dim: usize) -> Result<TargetSet> {
    let parts: Vec<&str> = text.split(':').collect();
    let check = |v: &[f64]| -> Result<()> {
        if v.len() != dim {
            return Err(Error::Config(format!(
                "target `{text}`: expected {dim} coordinates"
            )));
        }
        Ok(())
    };
    match parts.as_slice() {
        ["point", x] => {
            let x = parse_vector(x, "target")?;
            check(&x)?;
            Ok(TargetSet::point(x))
        }
        ["ball", x, r] => {
            let x = parse_vector(x, "target")?;
            check(&x)?;
            let r: f64 = r
                .parse()
                .map_err(|_| Error::Config(format!("target radius `{r}`")))?;
            if !(r >= 0.0) {
                return Err(Error::Config(format!("target radius {r} is negative")));
            }
            Ok(TargetSet::ball(x, r))
        }
        ["box", lo, hi] => {
            let (lo, hi) = (parse_vector(lo, "target")?, parse_vector(hi, "target")?);
            check(&lo)?;
            check(&hi)?;
            if lo.iter().zip(&hi).any(|(a, b)| a > b) {
                return Err(Error::Config("target box has lo > hi".into()));
            }
            Ok(TargetSet::cuboid(lo, hi))
        }
        _ => Err(Error::Config(format!(
            "target `{text}`: expected point:X, ball:X:R or box:LO:HI"
        ))),
    }
}

/// `default`, `sphere:RADII:PER_AXIS`, `lattice:PER_AXIS` or `finite`.
pub fn parse_mesh(text: &str, model: &Model) -> Result<ControlMesh> {
    let parts: Vec<&str> = text.split(':').collect();
    let count = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Config(format!("mesh `{text}`: `{s}` is not a count")))
    };
    match (parts.as_slice(), model) {
        (["default"], _) => model.default_mesh(),
        (["sphere", r, k], Model::Extended(e)) => ControlMesh::sphere(e, count(r)?, count(k)?),
        (["lattice", k], Model::Ordinary(p)) => match &p.control_set {
            ControlSet::CompactBox { bounds } => ControlMesh::lattice(bounds, count(k)?),
            _ => Err(Error::Config(
                "lattice meshes need a box control set".into(),
            )),
        },
        (["finite"], Model::Ordinary(p)) => match &p.control_set {
            ControlSet::CompactFinite { points } => Ok(ControlMesh::finite(points.clone())),
            _ => Err(Error::Config(
                "finite meshes need a finite control set".into(),
            )),
        },
        _ => Err(Error::Config(format!(
            "mesh `{text}` is unknown or does not fit the control set"
        ))),
    }
}

/// Problem, model, grid, mesh, target and solver configuration shared by
/// every command.
struct Setup {
    problem: ControlProblem,
    model: Model,
    /// Absent only for commands that do not solve on a grid.
    grid: Option<Grid>,
    mesh: ControlMesh,
    target: Option<TargetSet>,
    config: SolverConfig,
}

fn setup(common: &CommonArgs) -> Result<Setup> {
    let loaded = load_problem(&common.spec)?;
    let problem = loaded.problem;
    let grid = match (&common.grid, loaded.grid) {
        (Some(text), _) => Some(Grid::parse(text)?),
        (None, g) => g,
    };
    let model = Model::new(&problem)?;
    let mesh = parse_mesh(&common.mesh, &model)?;
    let target = match &common.target {
        Some(t) => Some(parse_target(t, problem.state_dim)?),
        None => problem.target.clone(),
    };
    let mut config = SolverConfig::default()
        .with_step(common.dt)
        .with_tolerance(common.tol)
        .with_max_iterations(common.max_iter)
        .with_horizon_mode(match common.horizon_mode {
            ModeArg::Physical => HorizonMode::Physical,
            ModeArg::Extended => HorizonMode::Extended,
        });
    config.infinity_threshold = common.infinity_threshold;
    Ok(Setup {
        problem,
        model,
        grid,
        mesh,
        target,
        config,
    })
}

impl Setup {
    fn grid(&self) -> Result<&Grid> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::Config("no grid: pass --grid or add a [grid] section".into()))
    }
}

fn write_field(dir: &Path, name: &str, field: &ValueField) -> Result<()> {
    let file = fs::File::create(dir.join(name))?;
    field.write_csv(std::io::BufWriter::new(file))
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn write_report(dir: &Path, name: &str, report: &ConvergenceReport) -> Result<()> {
    let mut text = report.to_json()?;
    text.push('\n');
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn write_manifest<T: Serialize>(
    dir: &Path,
    command: &'static str,
    s: &Setup,
    arguments: &T,
    seed: u64,
) -> Result<()> {
    let created_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        problem: &s.problem.name,
        grid: s.grid.as_ref(),
        mesh_points: s.mesh.len(),
        target: s.target.as_ref().map(|t| t.label.clone()),
        config: &s.config,
        arguments,
        seed,
        created_unix,
    };
    write_json(dir, "manifest.json", &manifest)
}

#[derive(Debug, Serialize)]
struct ErgodicSummary {
    lambda: f64,
    flatness: f64,
    corrector_sup: f64,
    corrector_bound: Option<f64>,
    cell_residual: f64,
    means: Vec<(f64, f64)>,
}

fn solve(args: &SolveArgs) -> Result<i32> {
    let s = setup(&args.common)?;
    s.grid()?;
    let dir = &args.common.out_dir;
    fs::create_dir_all(dir)?;
    let verdict = match args.solver {
        SolverKind::Finite => {
            let t = args.horizon.ok_or_else(|| {
                Error::Config("--horizon is required for the finite solver".into())
            })?;
            let sol = solve_finite_horizon(&s.model, &s.mesh, s.grid()?, &s.config, &[t])?;
            if let Some((_, field)) = sol.snapshots.last() {
                write_field(dir, "value.csv", field)?;
            }
            write_report(dir, "report.json", &sol.report)?;
            sol.report.verdict
        }
        SolverKind::Discounted => {
            let delta = args.delta.ok_or_else(|| {
                Error::Config("--delta is required for the discounted solver".into())
            })?;
            let sol = solve_discounted(&s.model, &s.mesh, s.grid()?, &s.config, delta)?;
            write_field(dir, "value.csv", &sol.field)?;
            write_report(dir, "report.json", &sol.report)?;
            sol.report.verdict
        }
        SolverKind::Kruzkov => {
            let target = s.target.as_ref().ok_or_else(|| {
                Error::Config("the Kruzkov solver needs a target (--target)".into())
            })?;
            let sol = solve_kruzkov(&s.model, &s.mesh, s.grid()?, &s.config, target)?;
            write_field(dir, "u.csv", &sol.u)?;
            write_field(dir, "value.csv", &sol.v)?;
            write_report(dir, "report.json", &sol.report)?;
            sol.report.verdict
        }
        SolverKind::Ergodic => {
            let schedule = args
                .delta_schedule
                .clone()
                .unwrap_or_else(|| (1..=10).map(|k| 0.5f64.powi(k)).collect());
            let sol = solve_ergodic(&s.model, &s.mesh, s.grid()?, &s.config, &schedule)?;
            write_field(dir, "corrector.csv", &sol.corrector)?;
            write_field(dir, "scaled_value.csv", &sol.scaled_value)?;
            write_report(dir, "report.json", &sol.report)?;
            write_json(
                dir,
                "ergodic.json",
                &ErgodicSummary {
                    lambda: sol.lambda,
                    flatness: sol.flatness,
                    corrector_sup: sol.corrector_sup,
                    corrector_bound: sol.corrector_bound,
                    cell_residual: sol.cell_residual,
                    means: sol.means.clone(),
                },
            )?;
            println!("lambda = {}", sol.lambda);
            sol.report.verdict
        }
    };
    write_manifest(dir, "solve", &s, args, 0)?;
    println!("verdict: {}", verdict_name(verdict));
    Ok(verdict_code(verdict))
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Converged => "converged",
        Verdict::BudgetExhausted => "budget-exhausted",
        Verdict::Diverged => "diverged",
    }
}

#[derive(Debug, Serialize)]
struct Comparison {
    nodes: usize,
    sup_diff: f64,
    infinity_disagreements: usize,
    inner_half_nodes: usize,
    inner_half_sup_diff: f64,
    inner_half_infinity_disagreements: usize,
    infinite_nodes_finite_horizon: usize,
    infinite_nodes_discounted: usize,
    finite_horizon_verdict: Verdict,
    discounted_verdict: Verdict,
}

fn limits(args: &LimitsArgs) -> Result<i32> {
    let s = setup(&args.common)?;
    s.grid()?;
    let dir = &args.common.out_dir;
    fs::create_dir_all(dir)?;
    let a = limit_finite_horizon(
        &s.model,
        &s.mesh,
        s.grid()?,
        &s.config,
        &args.horizon_schedule,
    )?;
    let b = limit_discounted(
        &s.model,
        &s.mesh,
        s.grid()?,
        &s.config,
        &args.delta_schedule,
    )?;
    write_field(dir, "limit_finite_horizon.csv", &a.field)?;
    write_field(dir, "limit_discounted.csv", &b.field)?;
    write_report(dir, "report_finite_horizon.json", &a.report)?;
    write_report(dir, "report_discounted.json", &b.report)?;
    let (sup, dis) = a.field.sup_diff(&b.field)?;
    let inner = s.grid()?.inner_nodes(0.5);
    let (isup, idis) = a.field.sup_diff_on(&b.field, inner.iter().copied())?;
    let comparison = Comparison {
        nodes: s.grid()?.len(),
        sup_diff: sup,
        infinity_disagreements: dis,
        inner_half_nodes: inner.len(),
        inner_half_sup_diff: isup,
        inner_half_infinity_disagreements: idis,
        infinite_nodes_finite_horizon: a.field.infinite_count(),
        infinite_nodes_discounted: b.field.infinite_count(),
        finite_horizon_verdict: a.report.verdict,
        discounted_verdict: b.report.verdict,
    };
    write_json(dir, "comparison.json", &comparison)?;
    write_manifest(dir, "limits", &s, args, 0)?;
    println!(
        "sup_diff = {sup:.6e} ({dis} infinity disagreements); inner half: {isup:.6e} ({idis})"
    );
    Ok(verdict_code(worst(a.report.verdict, b.report.verdict)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    Mrf,
    Sc1,
    Sc2,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RegionSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

fn default_samples() -> usize {
    10_000
}

fn default_control_radius() -> f64 {
    10.0
}

/// Certificate file. Expressions use `x1..xn` for `U` and its gradient,
/// `r` for the rates `m` and `c1`, and `u` for the radius map.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CertificateFile {
    pub kind: CertificateKind,
    #[serde(rename = "U")]
    pub u: Option<String>,
    pub gradient: Option<Vec<String>>,
    pub k: Option<f64>,
    pub m: Option<String>,
    pub c1: Option<String>,
    pub radius: Option<String>,
    pub region: RegionSpec,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Radius of the control mesh for cone control sets.
    #[serde(default = "default_control_radius")]
    pub control_radius: f64,
}

impl CertificateFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let before = &text[..span.start.min(text.len())];
                    format!("{}:{}", path.display(), before.matches('\n').count() + 1)
                }
                None => path.display().to_string(),
            };
            Error::parse(location, e.message().to_string())
        })
    }

    fn missing(&self, field: &str) -> Error {
        Error::parse(
            format!("certificate ({:?})", self.kind).to_lowercase(),
            format!("missing field `{field}`"),
        )
    }

    fn certificate(&self, n: usize) -> Result<Certificate> {
        let u = self.u.as_ref().ok_or_else(|| self.missing("U"))?;
        let grad = self
            .gradient
            .as_ref()
            .ok_or_else(|| self.missing("gradient"))?;
        if grad.len() != n {
            return Err(Error::parse(
                "certificate gradient",
                format!("has {} components, expected {n}", grad.len()),
            ));
        }
        let resolve = state_control_resolver(n, 0);
        let u = compile(u, &resolve)?;
        let grad: Vec<Expr> = grad
            .iter()
            .map(|g| compile(g, &resolve))
            .collect::<Result<_>>()?;
        Ok(Certificate::new(
            move |x| u.eval(x),
            move |x| grad.iter().map(|g| g.eval(x)).collect(),
        ))
    }

    fn sampling(&self) -> Sampling {
        Sampling {
            lo: self.region.lo.clone(),
            hi: self.region.hi.clone(),
            count: self.samples,
            seed: self.seed,
        }
    }
}

fn rate(source: &str, variable: &'static str) -> Result<RateFn> {
    let e = compile(source, &move |name: &str| (name == variable).then_some(0))?;
    Ok(std::sync::Arc::new(move |r| e.eval(&[r])))
}

pub fn run_certificate(
    file: &CertificateFile,
    s_problem: &ControlProblem,
    model: &Model,
    mesh: &ControlMesh,
    target: &TargetSet,
) -> Result<MarginReport> {
    let n = s_problem.state_dim;
    let sampling = file.sampling();
    match file.kind {
        CertificateKind::Mrf => {
            let cert = file.certificate(n)?;
            let k = file.k.ok_or_else(|| file.missing("k"))?;
            let controls = default_controls(&s_problem.control_set, file.control_radius)?;
            let radius = file.radius.as_deref().map(|r| rate(r, "u")).transpose()?;
            check_mrf(
                s_problem,
                &cert,
                target,
                k,
                &sampling,
                &controls,
                radius.as_ref(),
            )
        }
        CertificateKind::Sc1 => {
            let cert = file.certificate(n)?;
            let m = rate(file.m.as_deref().ok_or_else(|| file.missing("m"))?, "r")?;
            check_sc1(model, mesh, &cert, target, &m, &sampling)
        }
        CertificateKind::Sc2 => {
            let c1 = rate(file.c1.as_deref().ok_or_else(|| file.missing("c1"))?, "r")?;
            let controls = default_controls(&s_problem.control_set, file.control_radius)?;
            check_sc2(s_problem, target, &c1, &sampling, &controls)
        }
    }
}

fn certify(args: &CertifyArgs) -> Result<i32> {
    let s = setup(&args.common)?;
    let file = CertificateFile::load(&args.certificate)?;
    let target = s
        .target
        .as_ref()
        .ok_or_else(|| Error::Config("certificates need a target (--target)".into()))?;
    let report = run_certificate(&file, &s.problem, &s.model, &s.mesh, target)?;
    let dir = &args.common.out_dir;
    fs::create_dir_all(dir)?;
    write_json(dir, "margin.json", &report)?;
    write_manifest(dir, "certify", &s, &(args, &file), file.seed)?;
    println!("{}", report.to_json()?);
    if report.pass {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "margin violated: worst margin {} at {:?}",
            report.worst_margin, report.argmin_point
        );
        Ok(EXIT_MARGIN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets_and_meshes_parse() {
        assert!(parse_target("point:0,0", 2).unwrap().contains(&[0.0, 0.0]));
        assert!(parse_target("ball:0:0.5", 1).unwrap().contains(&[0.4]));
        assert!(parse_target("box:-1,-1:1,1", 2)
            .unwrap()
            .contains(&[1.0, -1.0]));
        assert!(parse_target("point:0", 2).is_err());
        assert!(parse_target("disc:0", 1).is_err());
        assert!(parse_target("box:1:0", 1).is_err());
        let lqr = Model::new(&builtin("lqr-1d").unwrap()).unwrap();
        assert_eq!(parse_mesh("sphere:4:3", &lqr).unwrap().len(), 9);
        assert!(parse_mesh("lattice:5", &lqr).is_err());
        let e41 = Model::new(&builtin("example-4-1").unwrap()).unwrap();
        assert_eq!(parse_mesh("finite", &e41).unwrap().len(), 2);
        assert!(parse_mesh("sphere:x:3", &lqr).is_err());
    }

    #[test]
    fn worst_verdict_orders_by_severity() {
        assert_eq!(
            worst(Verdict::Converged, Verdict::BudgetExhausted),
            Verdict::BudgetExhausted
        );
        assert_eq!(
            worst(Verdict::Diverged, Verdict::BudgetExhausted),
            Verdict::Diverged
        );
        assert_eq!(verdict_code(Verdict::Diverged), EXIT_DIVERGED);
    }
}
