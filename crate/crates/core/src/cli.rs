//! Command-line front end.
//!
//! Every subcommand accepts the same graph/mechanism selection flags, and
//! optionally a TOML run file (`--spec`). Values given as flags override
//! the file. Exit codes: 0 success, 1 verification failure, 2 usage or
//! input error, 3 runtime abort.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::analysis::{
    check_n_list, escape_sweep, run_experiment_with, srw_escape_mc, EscapeReport, InvariantCheck,
    RotorSetup, RunOptions, DEFAULT_MAX_STEPS, INVARIANT_REL_TOL, LOWER_BOUND_SLACK,
};
use crate::edge_list::load_edge_list;
use crate::error::Error;
use crate::experiment::TraceWriter;
use crate::graph::{
    build_bary_tree, build_lattice_ball_with, build_path, build_star, Graph, LatticeBoundary,
};
use crate::harmonic::{mc_green, solve_harmonic, DEFAULT_TOL};
use crate::mechanism::RotorMechanism;
use crate::rotor::{
    random_config, violates_minimizer, weight_increment, weight_increment_identity, RotorConfig,
};

pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_ABORT: u8 = 3;

/// Built-in graph family with parameters, written `path:3`, `star:4`,
/// `lattice:d=3,r=6` (optionally `,boundary=layer`) or `tree:b=2,depth=6`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphSpec {
    Path(usize),
    Star(usize),
    Lattice {
        d: usize,
        r: usize,
        boundary: LatticeBoundary,
    },
    Tree {
        b: usize,
        depth: usize,
    },
}

impl GraphSpec {
    pub fn build(&self) -> crate::Result<Graph> {
        match *self {
            GraphSpec::Path(k) => build_path(k),
            GraphSpec::Star(k) => build_star(k),
            GraphSpec::Lattice { d, r, boundary } => build_lattice_ball_with(d, r, boundary),
            GraphSpec::Tree { b, depth } => build_bary_tree(b, depth),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Path(k) => write!(f, "path:{k}"),
            GraphSpec::Star(k) => write!(f, "star:{k}"),
            GraphSpec::Lattice { d, r, boundary } => {
                write!(f, "lattice:d={d},r={r}")?;
                if *boundary == LatticeBoundary::SinkLayer {
                    write!(f, ",boundary=layer")?;
                }
                Ok(())
            }
            GraphSpec::Tree { b, depth } => write!(f, "tree:b={b},depth={depth}"),
        }
    }
}

fn parse_params(s: &str) -> Result<Vec<(&str, &str)>, String> {
    s.split([',', ' '])
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| format!("expected key=value, got {p:?}"))
        })
        .collect()
}

fn param(params: &[(&str, &str)], key: &str) -> Result<usize, String> {
    let (_, v) = params
        .iter()
        .find(|(k, _)| *k == key)
        .ok_or_else(|| format!("missing parameter {key}"))?;
    v.parse()
        .map_err(|_| format!("{key}: not a non-negative integer: {v:?}"))
}

impl FromStr for GraphSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        let single = || {
            rest.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad size in {s:?}"))
        };
        match family.trim() {
            "path" => Ok(GraphSpec::Path(single()?)),
            "star" => Ok(GraphSpec::Star(single()?)),
            "lattice" => {
                let p = parse_params(rest)?;
                let boundary = match p.iter().find(|(k, _)| *k == "boundary") {
                    None | Some((_, "shared")) => LatticeBoundary::SharedSink,
                    Some((_, "layer")) => LatticeBoundary::SinkLayer,
                    Some((_, other)) => return Err(format!("unknown boundary {other:?}")),
                };
                Ok(GraphSpec::Lattice {
                    d: param(&p, "d")?,
                    r: param(&p, "r")?,
                    boundary,
                })
            }
            "tree" => {
                let p = parse_params(rest)?;
                Ok(GraphSpec::Tree {
                    b: param(&p, "b")?,
                    depth: param(&p, "depth")?,
                })
            }
            other => Err(format!("unknown graph family {other:?}")),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "rotor-escape",
    version,
    about = "Rotor-walk escape experiments on sink-truncated graphs"
)]
pub struct Cli {
    /// TOML run file; flags override its values
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the Green function and print alpha and the residual
    Green(GreenArgs),
    /// Build the weight-minimizing rotor configuration
    RhoMin(RhoMinArgs),
    /// Run the escape experiment for each n
    Run(RunArgs),
    /// Run the built-in verification suite
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Default, Clone)]
pub struct GraphArgs {
    /// Built-in graph, e.g. path:3, lattice:d=3,r=6, tree:b=2,depth=6, star:4
    #[arg(long)]
    pub graph: Option<GraphSpec>,
    /// Path with K vertices
    #[arg(long, value_name = "K")]
    pub path: Option<usize>,
    /// L1 ball in Z^d, e.g. `--lattice d=3 r=8`
    #[arg(long, num_args = 1.., value_name = "KEY=VAL")]
    pub lattice: Option<Vec<String>>,
    /// Complete b-ary tree, e.g. `--tree b=2 depth=6`
    #[arg(long, num_args = 1.., value_name = "KEY=VAL")]
    pub tree: Option<Vec<String>>,
    /// Star with K sink leaves
    #[arg(long, value_name = "K")]
    pub star: Option<usize>,
    /// Edge-list file
    #[arg(long, value_name = "FILE")]
    pub edges: Option<PathBuf>,
    /// Origin label for --edges
    #[arg(long)]
    pub origin: Option<i64>,
    /// Comma-separated sink labels for --edges
    #[arg(long, value_delimiter = ',')]
    pub sinks: Option<Vec<i64>>,
    /// Harmonic solver tolerance (max residual)
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct MechanismArgs {
    /// Rotor mechanism: `default` (adjacency order) or `shuffled`
    #[arg(long, value_name = "KIND")]
    pub mechanism: Option<String>,
    /// Seed for a shuffled mechanism
    #[arg(long)]
    pub mech_seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct GreenArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// CSV output: vertex_label, degree, h, green
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RhoMinArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub mechanism: MechanismArgs,
    /// CSV of edge weights
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
    /// CSV of the rotor configuration (printed to stdout when absent)
    #[arg(long)]
    pub config_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub mechanism: MechanismArgs,
    /// Initial rotors: `rho-min`, `random` or `file`
    #[arg(long, value_name = "KIND")]
    pub config: Option<String>,
    /// Seed for a random configuration (implies --config random)
    #[arg(long)]
    pub seed_config: Option<u64>,
    /// Rotor configuration CSV for --config file
    #[arg(long, value_name = "FILE")]
    pub config_file: Option<PathBuf>,
    /// Comma-separated ascending particle counts
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Invariant checking: off, auto, every, or a step period
    #[arg(long, value_name = "MODE")]
    pub check_invariant: Option<String>,
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// JSON report path (printed to stdout when absent)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// CSV rate table: n, rate, alpha, gap, steps, max_invariant_dev
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Per-step trace CSV; one file per n, suffixed when several n are given
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Smaller fixtures and sample sizes
    #[arg(long)]
    pub quick: bool,
    /// Restrict to one built-in graph
    #[arg(long)]
    pub graph: Option<GraphSpec>,
    /// Perturb one edge weight before checking (negative control)
    #[arg(long)]
    pub inject_corrupt_weights: bool,
}

/// Run file contents. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default)]
    pub graph: GraphSection,
    #[serde(default)]
    pub mechanism: MechanismSection,
    #[serde(default)]
    pub config: ConfigSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub family: Option<String>,
    pub edges: Option<PathBuf>,
    pub origin: Option<i64>,
    pub sinks: Option<Vec<i64>>,
    pub tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismSection {
    pub kind: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSection {
    pub kind: Option<String>,
    pub seed: Option<u64>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub n: Option<Vec<usize>>,
    pub check_invariant: Option<String>,
    pub max_steps: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub green: Option<PathBuf>,
}

impl RunSpec {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } | Error::AbortedMaxSteps { .. } => EXIT_ABORT,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn resolve_graph(args: &GraphArgs, spec: &GraphSection) -> CliResult<Graph> {
    let mut chosen: Vec<GraphSource> = Vec::new();
    if let Some(g) = &args.graph {
        chosen.push(GraphSource::Builtin(g.clone()));
    }
    if let Some(k) = args.path {
        chosen.push(GraphSource::Builtin(GraphSpec::Path(k)));
    }
    if let Some(k) = args.star {
        chosen.push(GraphSource::Builtin(GraphSpec::Star(k)));
    }
    if let Some(p) = &args.lattice {
        chosen.push(GraphSource::Builtin(
            format!("lattice:{}", p.join(","))
                .parse()
                .map_err(CliError::usage)?,
        ));
    }
    if let Some(p) = &args.tree {
        chosen.push(GraphSource::Builtin(
            format!("tree:{}", p.join(","))
                .parse()
                .map_err(CliError::usage)?,
        ));
    }
    if let Some(path) = &args.edges {
        chosen.push(GraphSource::Edges(path.clone()));
    }
    if chosen.len() > 1 {
        return Err(CliError::usage("choose exactly one graph"));
    }
    let source = match chosen.pop() {
        Some(s) => s,
        None => match (&spec.family, &spec.edges) {
            (Some(f), None) => GraphSource::Builtin(f.parse().map_err(CliError::usage)?),
            (None, Some(p)) => GraphSource::Edges(p.clone()),
            (Some(_), Some(_)) => return Err(CliError::usage("run file names two graphs")),
            (None, None) => return Err(CliError::usage("no graph given")),
        },
    };
    match source {
        GraphSource::Builtin(g) => Ok(g.build()?),
        GraphSource::Edges(path) => {
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            let origin = args
                .origin
                .or(spec.origin)
                .ok_or_else(|| CliError::usage("--edges needs --origin"))?;
            let sinks = args
                .sinks
                .clone()
                .or_else(|| spec.sinks.clone())
                .ok_or_else(|| CliError::usage("--edges needs --sinks"))?;
            Ok(load_edge_list(&text, origin, &sinks)?)
        }
    }
}

enum GraphSource {
    Builtin(GraphSpec),
    Edges(PathBuf),
}

fn resolve_mechanism(
    g: &Graph,
    args: &MechanismArgs,
    spec: &MechanismSection,
) -> CliResult<RotorMechanism> {
    let seed = args.mech_seed.or(spec.seed).unwrap_or(0);
    match args
        .mechanism
        .as_deref()
        .or(spec.kind.as_deref())
        .unwrap_or("default")
    {
        "default" => Ok(RotorMechanism::default_for(g)),
        "shuffled" => Ok(RotorMechanism::shuffled(g, seed)),
        other => Err(CliError::usage(format!("unknown mechanism {other:?}"))),
    }
}

fn parse_check(mode: &str) -> CliResult<InvariantCheck> {
    match mode {
        "off" => Ok(InvariantCheck::Off),
        "auto" => Ok(InvariantCheck::Auto),
        "every" => Ok(InvariantCheck::EveryStep),
        k => k
            .parse::<u64>()
            .map(InvariantCheck::Every)
            .map_err(|_| CliError::usage(format!("bad invariant check mode {k:?}"))),
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn tol_of(args: &GraphArgs, spec: &GraphSection) -> f64 {
    args.tol.or(spec.tol).unwrap_or(DEFAULT_TOL)
}

pub fn cmd_green(args: &GreenArgs, spec: &RunSpec, out: &mut dyn Write) -> CliResult {
    let g = resolve_graph(&args.graph, &spec.graph)?;
    let profile = solve_harmonic(&g, tol_of(&args.graph, &spec.graph))?;
    if let Some(path) = args.out.as_ref().or(spec.output.green.as_ref()) {
        profile.write_csv(&g, create(path)?)?;
    }
    writeln!(out, "graph={}", g.descriptor())?;
    writeln!(out, "vertices={}", g.num_vertices())?;
    writeln!(out, "green_origin={}", profile.green(g.origin()))?;
    writeln!(out, "alpha={}", profile.alpha())?;
    writeln!(out, "residual={:e}", profile.residual())?;
    Ok(())
}

pub fn cmd_rho_min(args: &RhoMinArgs, spec: &RunSpec, out: &mut dyn Write) -> CliResult {
    let g = resolve_graph(&args.graph, &spec.graph)?;
    let mech = resolve_mechanism(&g, &args.mechanism, &spec.mechanism)?;
    let setup = RotorSetup::new(g, mech, tol_of(&args.graph, &spec.graph))?;
    let rho = setup.rho_min();
    if let Some(path) = args.weights_out.as_ref().or(spec.output.weights.as_ref()) {
        setup
            .weights
            .write_csv(&setup.graph, &setup.mechanism, create(path)?)?;
    }
    match args.config_out.as_ref().or(spec.output.config.as_ref()) {
        Some(path) => rho.config.write_csv(&setup.graph, create(path)?)?,
        None => rho.config.write_csv(&setup.graph, &mut *out)?,
    }
    writeln!(out, "ties={}", rho.ties)?;
    writeln!(out, "near_ties={}", rho.near_ties)?;
    Ok(())
}

fn trace_path(base: &Path, n: usize, many: bool) -> PathBuf {
    if !many {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let name = match base.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-n{n}.{ext}"),
        None => format!("{stem}-n{n}"),
    };
    base.with_file_name(name)
}

pub fn cmd_run(args: &RunArgs, spec: &RunSpec, out: &mut dyn Write) -> CliResult {
    let g = resolve_graph(&args.graph, &spec.graph)?;
    let mech = resolve_mechanism(&g, &args.mechanism, &spec.mechanism)?;
    let setup = RotorSetup::new(g, mech, tol_of(&args.graph, &spec.graph))?;

    let seed = args.seed_config.or(spec.config.seed);
    let kind = match (args.config.as_deref(), args.seed_config) {
        (Some(k), _) => k,
        (None, Some(_)) => "random",
        (None, None) => spec.config.kind.as_deref().unwrap_or("rho-min"),
    };
    let (rho, descriptor) = match kind {
        "rho-min" => (setup.rho_min().config, "rho-min".to_string()),
        "random" => {
            let s = seed.unwrap_or(0);
            (random_config(&setup.graph, s), format!("random({s})"))
        }
        "file" => {
            let path = args
                .config_file
                .as_ref()
                .or(spec.config.file.as_ref())
                .ok_or_else(|| CliError::usage("--config file needs --config-file"))?;
            let f = File::open(path)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            (
                RotorConfig::read_csv(&setup.graph, f)?,
                format!("file({})", path.display()),
            )
        }
        other => return Err(CliError::usage(format!("unknown config {other:?}"))),
    };

    let n_list = args
        .n
        .clone()
        .or_else(|| spec.run.n.clone())
        .ok_or_else(|| CliError::usage("--n is required"))?;
    let check = parse_check(
        args.check_invariant
            .as_deref()
            .or(spec.run.check_invariant.as_deref())
            .unwrap_or("auto"),
    )?;
    let opts = RunOptions {
        max_steps: args
            .max_steps
            .or(spec.run.max_steps)
            .unwrap_or(DEFAULT_MAX_STEPS),
        invariant_check: check,
    };

    let report = match args.trace.as_ref().or(spec.output.trace.as_ref()) {
        None => escape_sweep(&setup, &rho, &descriptor, &n_list, &opts)?,
        Some(base) => {
            check_n_list(&n_list)?;
            let mut runs = Vec::new();
            for &n in &n_list {
                let mut trace = TraceWriter::new(create(&trace_path(base, n, n_list.len() > 1))?);
                let mut failed = None;
                let run = run_experiment_with(&setup, rho.clone(), n, &opts, |exp, ev, m| {
                    if failed.is_none() {
                        if let Err(e) = trace.record(exp.graph(), ev, exp.survivors(), m) {
                            failed = Some(e);
                        }
                    }
                })
                .map_err(|e| with_n(e, n))?;
                if let Some(e) = failed {
                    return Err(e.into());
                }
                trace.finish()?;
                runs.push(run);
            }
            EscapeReport::from_runs(&setup, &descriptor, &n_list, runs)?
        }
    };

    let json = report.to_json()?;
    match args.report.as_ref().or(spec.output.report.as_ref()) {
        Some(path) => {
            let mut f = create(path)?;
            writeln!(f, "{json}")?;
            for r in &report.runs {
                writeln!(
                    out,
                    "n={} survivors={} rate={} gap={:e}",
                    r.n, r.survivors, r.rate, r.gap
                )?;
            }
            writeln!(out, "alpha={}", report.alpha)?;
        }
        None => writeln!(out, "{json}")?,
    }
    if let Some(path) = args.csv.as_ref().or(spec.output.csv.as_ref()) {
        report.write_csv(create(path)?)?;
    }
    Ok(())
}

fn with_n(e: Error, n: usize) -> CliError {
    let mut c = CliError::from(e);
    c.message = format!("n={n}: {}", c.message);
    c
}

/// One line of the verification table.
#[derive(Clone, Debug)]
pub struct CheckLine {
    pub graph: String,
    pub check: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

fn verify_fixtures(quick: bool) -> Vec<GraphSpec> {
    let mut v = vec![
        GraphSpec::Path(3),
        GraphSpec::Path(6),
        GraphSpec::Star(4),
        GraphSpec::Lattice {
            d: 1,
            r: 5,
            boundary: LatticeBoundary::SharedSink,
        },
        GraphSpec::Lattice {
            d: 2,
            r: 4,
            boundary: LatticeBoundary::SharedSink,
        },
        GraphSpec::Tree { b: 3, depth: 3 },
    ];
    if quick {
        v.push(GraphSpec::Lattice {
            d: 3,
            r: 3,
            boundary: LatticeBoundary::SinkLayer,
        });
        v.push(GraphSpec::Tree { b: 2, depth: 4 });
    } else {
        v.push(GraphSpec::Lattice {
            d: 3,
            r: 6,
            boundary: LatticeBoundary::SharedSink,
        });
        v.push(GraphSpec::Tree { b: 2, depth: 6 });
    }
    v
}

/// Runs the property suite on one graph and returns one line per check.
pub fn verify_graph(spec: &GraphSpec, quick: bool, corrupt: bool) -> crate::Result<Vec<CheckLine>> {
    let g = spec.build()?;
    let name = spec.to_string();
    let mut lines = Vec::new();
    let mut push = |check, value: f64, threshold: f64| {
        lines.push(CheckLine {
            graph: name.clone(),
            check,
            value,
            threshold,
            passed: value <= threshold,
        })
    };
    let extra = if quick { 2 } else { 10 };
    let mechanisms: Vec<RotorMechanism> = std::iter::once(RotorMechanism::default_for(&g))
        .chain((0..extra).map(|s| RotorMechanism::shuffled(&g, s + 1)))
        .collect();

    let (mut residual, mut identity, mut telescope) = (0.0f64, 0.0f64, 0.0f64);
    let mut minimizer_violations = 0usize;
    let mut invariant = 0.0f64;
    let mut lower_bound = 0usize;
    for (mi, mech) in mechanisms.into_iter().enumerate() {
        let mut setup = RotorSetup::new(g.clone(), mech, DEFAULT_TOL)?;
        if corrupt {
            if let Some(x) = setup.graph.non_sinks().find(|&x| setup.graph.degree(x) > 1) {
                let w = setup.weights.weight(x, 0);
                setup.weights.corrupt(x, 0, w + 0.25);
            }
        }
        let s = &setup;
        residual = residual.max(s.profile.residual());
        for x in s.graph.non_sinks() {
            let mut orbit = 0.0;
            for i in 0..s.graph.degree(x) {
                let inc = if corrupt {
                    s.weights.weight(x, s.mechanism.advance(x, i)) - s.weights.weight(x, i)
                } else {
                    weight_increment(&s.graph, &s.mechanism, &s.profile, x, i)?
                };
                let id = weight_increment_identity(&s.graph, &s.mechanism, &s.profile, x, i)?;
                identity = identity.max((inc - id).abs());
                orbit += inc;
            }
            telescope = telescope.max(orbit.abs());
        }
        let rho_min = s.rho_min().config;
        minimizer_violations +=
            violates_minimizer(&s.graph, &s.weights, &rho_min).is_some() as usize;

        let configs: Vec<RotorConfig> = std::iter::once(rho_min.clone())
            .chain((0..extra).map(|k| random_config(&s.graph, 1000 * mi as u64 + k)))
            .collect();
        let opts = RunOptions {
            invariant_check: InvariantCheck::EveryStep,
            ..RunOptions::default()
        };
        for (ci, rho) in configs.into_iter().enumerate() {
            for n in [1usize, 2, 7, 50] {
                let run = crate::analysis::run_experiment(s, rho.clone(), n, &opts)?;
                invariant = invariant.max(run.max_invariant_rel_dev);
                if ci == 0 && run.lower_bound_violation.is_some() {
                    lower_bound += 1;
                }
            }
        }
        if mi == 0 {
            for n in [10usize, 100] {
                let run =
                    crate::analysis::run_experiment(s, rho_min.clone(), n, &RunOptions::default())?;
                lower_bound += run.lower_bound_violation.is_some() as usize;
            }
        }
    }
    push("harmonic residual", residual, DEFAULT_TOL);
    push("weight increment identity", identity, 1e-12);
    push("orbit telescope", telescope, 1e-12);
    push("minimizer violations", minimizer_violations as f64, 0.0);
    push("invariant rel deviation", invariant, INVARIANT_REL_TOL);
    push("lower bound violations", lower_bound as f64, 0.0);

    let trials = if quick { 20_000 } else { 100_000 };
    let profile = solve_harmonic(&g, DEFAULT_TOL)?;
    let est = srw_escape_mc(&g, trials, 7)?;
    let z = if est.stderr > 0.0 {
        (est.p - profile.alpha()).abs() / est.stderr
    } else {
        (est.p - profile.alpha()).abs() / LOWER_BOUND_SLACK
    };
    push("srw escape mc (sigmas)", z, 3.0);
    let green = mc_green(&g, trials, 8)?;
    let o = g.origin().index();
    let z = if green.stderr[o] > 0.0 {
        (green.mean[o] - profile.green_values()[o]).abs() / green.stderr[o]
    } else {
        (green.mean[o] - profile.green_values()[o]).abs() / LOWER_BOUND_SLACK
    };
    push("mc green at origin (sigmas)", z, 3.0);
    Ok(lines)
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> CliResult<bool> {
    let fixtures = match &args.graph {
        Some(g) => vec![g.clone()],
        None => verify_fixtures(args.quick),
    };
    let mut all = true;
    writeln!(
        out,
        "{:<24} {:<30} {:>12} {:>10}  result",
        "graph", "check", "value", "threshold"
    )?;
    for spec in fixtures {
        for line in verify_graph(&spec, args.quick, args.inject_corrupt_weights)? {
            all &= line.passed;
            writeln!(
                out,
                "{:<24} {:<30} {:>12.3e} {:>10.1e}  {}",
                line.graph,
                line.check,
                line.value,
                line.threshold,
                if line.passed { "PASS" } else { "FAIL" }
            )?;
        }
    }
    writeln!(
        out,
        "{}",
        if all {
            "all checks passed"
        } else {
            "verification FAILED"
        }
    )?;
    Ok(all)
}

/// Parses `args` and dispatches, writing normal output to `out`.
pub fn run_cli(cli: Cli, out: &mut dyn Write) -> CliResult<bool> {
    let spec = match &cli.spec {
        Some(p) => RunSpec::load(p)?,
        None => RunSpec::default(),
    };
    match &cli.command {
        Command::Green(a) => cmd_green(a, &spec, out).map(|_| true),
        Command::RhoMin(a) => cmd_rho_min(a, &spec, out).map(|_| true),
        Command::Run(a) => cmd_run(a, &spec, out).map(|_| true),
        Command::Verify(a) => cmd_verify(a, out),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run_cli(cli, &mut out) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFY_FAILED),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
