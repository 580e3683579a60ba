//! The `ldp-hull` command line.
//!
//! Exit codes: `0` on success, `2` when the numerics reject the input
//! (with a JSON error object on stderr), `1` on I/O or parse failures.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Error;
use crate::increments::IncrementModel;
use crate::io::{self as dio, DistSpec};
use crate::levelset::{self, Tau};
use crate::montecarlo::{self, Mode};
use crate::oracle::{self, OracleOptions};
use crate::polyline::{Orientation, PolygonalLine};
use crate::solver::{self, Candidate, CandidateKind, RateOptions, RateResult};
use crate::{legendre, Vec2};

#[derive(Parser, Debug, Clone)]
#[command(name = "ldp-hull", version, about = "Rate functions and optimal trajectories for the hull area of planar random walks")]
pub struct RunConfig {
    /// Worker threads [default: machine parallelism]
    #[arg(long, global = true, env = "LDP_HULL_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    /// Write the main output to this file instead of stdout
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Solve for the rate at a given hull area; prints JSON
    Rate(SolveArgs),
    /// Like `rate`, and also write one CSV per candidate curve
    Trajectory(TrajectoryArgs),
    /// Trace a level set of K (or one arc of it) as CSV
    Levelset(LevelsetArgs),
    /// Convexify a polygonal line read from CSV
    Convexify(ConvexifyArgs),
    /// Brute-force discretized minimization; prints JSON
    Oracle(OracleArgs),
    /// Monte Carlo estimate of the rate; prints JSON
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SolveArgs {
    /// Distribution spec (JSON)
    #[arg(long)]
    pub dist: PathBuf,
    /// Target hull area a > 0
    #[arg(long)]
    pub area: f64,
    /// Directions scanned for non-symmetric laws
    #[arg(long, default_value_t = 256)]
    pub directions: usize,
    /// Trajectory intervals
    #[arg(long, default_value_t = 1024)]
    pub samples: usize,
    /// Gaussian regularization added before solving
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub solve: SolveArgs,
    /// Directory receiving candidate_<i>.csv
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LevelsetArgs {
    #[arg(long)]
    pub dist: PathBuf,
    /// Level alpha > 0
    #[arg(long)]
    pub alpha: f64,
    /// Polygon vertices, or arc intervals with --arc
    #[arg(long, default_value_t = 2048)]
    pub samples: usize,
    /// Emit the arc parametrization (t,gx,gy,dgx,dgy) instead of the polygon
    #[arg(long, requires_all = ["ell", "tau"])]
    pub arc: bool,
    /// Arc direction as X,Y
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub ell: Option<[f64; 2]>,
    /// Arc side: + or -
    #[arg(long, value_parser = parse_tau, allow_hyphen_values = true)]
    pub tau: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationArg {
    Ccw,
    Cw,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ConvexifyArgs {
    /// Polyline CSV with x,y rows
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = OrientationArg::Ccw)]
    pub orientation: OrientationArg,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OracleArgs {
    #[arg(long)]
    pub dist: PathBuf,
    #[arg(long)]
    pub area: f64,
    /// Number of constant-velocity segments
    #[arg(long, default_value_t = 128)]
    pub segments: usize,
    /// Write the minimizing curve here as CSV
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Naive,
    Tilted,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub dist: PathBuf,
    #[arg(long)]
    pub area: f64,
    /// Walk length n; the event is A_n >= a n²
    #[arg(long)]
    pub steps: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Tilted)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Regularization used only to compute the tilts
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected X,Y, got {s:?}"))?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok([p(x)?, p(y)?])
}

fn parse_tau(s: &str) -> Result<String, String> {
    s.parse::<Tau>().map(|t| t.symbol().to_string()).map_err(|e| e.to_string())
}

/// Why a run failed.
#[derive(Debug)]
pub enum Failure {
    Domain(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Domain(_) => 2,
            Failure::Io(_) => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Failure::Io(msg) => json!({"error": "Io", "message": msg}),
            Failure::Domain(e) => {
                let mut v = json!({"error": e.kind(), "message": e.to_string()});
                match e {
                    Error::OutOfRange { a, a_max } => {
                        v["a"] = json!(a);
                        v["a_max"] = json!(a_max);
                    }
                    Error::NoCandidate { a } => v["a"] = json!(a),
                    _ => {}
                }
                v
            }
        }
    }
}

fn load(path: &Path) -> Result<(DistSpec, IncrementModel), Failure> {
    let spec = dio::read_dist(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let spec = spec.map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let model = spec.to_model().map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok((spec, model))
}

fn config_json(cmd: &Command, spec: Option<&DistSpec>) -> Value {
    let mut v = serde_json::to_value(cmd).expect("config serializes");
    if let Some(s) = spec {
        v["distribution"] = serde_json::to_value(s).expect("spec serializes");
    }
    v
}

fn xy(v: Vec2) -> Value {
    json!([v.x, v.y])
}

fn candidate_json(c: &Candidate) -> Value {
    let mut v = match c.kind {
        CandidateKind::Level { alpha, ell } => json!({"kind": "level", "alpha": alpha, "ell": xy(ell)}),
        CandidateKind::Graph { u_a } => json!({"kind": "graph", "u_a": u_a}),
    };
    v["tau"] = json!(c.tau.symbol());
    v["multiplier"] = json!(c.multiplier);
    v["energy"] = json!(c.energy);
    v["hull_area"] = json!(c.hull_area);
    v["end_point"] = xy(c.trajectory.end_point());
    v["minimal"] = json!(c.minimal);
    v
}

fn result_json(r: &RateResult) -> Value {
    json!({
        "a": r.a,
        "j_a": r.j_a,
        "a_max": if r.a_max.is_finite() { json!(r.a_max) } else { Value::Null },
        "eps": r.eps,
        "symmetric": r.symmetric,
        "candidates": r.candidates.iter().map(candidate_json).collect::<Vec<_>>(),
    })
}

fn rate_options(a: &SolveArgs) -> RateOptions {
    RateOptions { directions: a.directions, samples: a.samples, eps: a.eps }
}

fn regularized(model: IncrementModel, eps: f64) -> Result<IncrementModel, Failure> {
    if eps > 0.0 {
        Ok(model.regularize(eps)?)
    } else if eps == 0.0 {
        Ok(model)
    } else {
        Err(Error::InvalidArgument(format!("eps must be >= 0, got {eps}")).into())
    }
}

enum Output {
    Json(Value),
    Csv(Vec<u8>),
}

fn trajectory_csv(model: &IncrementModel, c: &Candidate) -> Result<Vec<u8>, Failure> {
    let t = &c.trajectory;
    let rows = (0..t.len())
        .map(|i| {
            let d = t.derivs[i];
            let rate = legendre::rate_general(model, d)?;
            Ok(vec![t.times[i], t.points[i].x, t.points[i].y, d.x, d.y, rate])
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut buf = Vec::new();
    dio::write_csv(&mut buf, &["t", "h1", "h2", "dh1", "dh2", "I"], rows)?;
    Ok(buf)
}

fn execute(cmd: &Command) -> Result<Output, Failure> {
    match cmd {
        Command::Rate(a) => {
            let (spec, model) = load(&a.dist)?;
            let r = solver::rate_of_area(&model, a.area, &rate_options(a))?;
            let mut v = json!({"config": config_json(cmd, Some(&spec))});
            v["result"] = result_json(&r);
            Ok(Output::Json(v))
        }
        Command::Trajectory(t) => {
            let (spec, model) = load(&t.solve.dist)?;
            let r = solver::rate_of_area(&model, t.solve.area, &rate_options(&t.solve))?;
            let solved = regularized(model, t.solve.eps)?;
            std::fs::create_dir_all(&t.out_dir)?;
            let mut files = Vec::new();
            for (i, c) in r.candidates.iter().enumerate() {
                let path = t.out_dir.join(format!("candidate_{i}.csv"));
                File::create(&path)?.write_all(&trajectory_csv(&solved, c)?)?;
                files.push(path.display().to_string());
            }
            let mut v = json!({"config": config_json(cmd, Some(&spec))});
            v["result"] = result_json(&r);
            v["trajectories"] = json!(files);
            Ok(Output::Json(v))
        }
        Command::Levelset(l) => {
            let (_, model) = load(&l.dist)?;
            let model = regularized(model, l.eps)?;
            let mut buf = Vec::new();
            if l.arc {
                let ell = l.ell.expect("clap enforces --ell");
                let tau: Tau = l.tau.as_deref().expect("clap enforces --tau").parse()?;
                let arc = levelset::arc_parametrization(&model, l.alpha, Vec2::new(ell[0], ell[1]), tau, l.samples)?;
                let rows = (0..arc.times.len()).map(|i| vec![arc.times[i], arc.samples[i].x, arc.samples[i].y, arc.derivs[i].x, arc.derivs[i].y]);
                dio::write_csv(&mut buf, &["t", "gx", "gy", "dgx", "dgy"], rows)?;
            } else {
                let poly = levelset::trace_level(&model, l.alpha, l.samples)?;
                dio::write_points(&mut buf, poly.vertices())?;
            }
            Ok(Output::Csv(buf))
        }
        Command::Convexify(c) => {
            let file = File::open(&c.input).map_err(|e| Failure::Io(format!("{}: {e}", c.input.display())))?;
            let pts = dio::read_points(file).map_err(|e| Failure::Io(format!("{}: {e}", c.input.display())))?;
            let line = PolygonalLine::new(pts)?;
            let orientation = match c.orientation {
                OrientationArg::Ccw => Orientation::Counterclockwise,
                OrientationArg::Cw => Orientation::Clockwise,
            };
            let mut buf = Vec::new();
            dio::write_points(&mut buf, line.convexify(orientation).vertices())?;
            Ok(Output::Csv(buf))
        }
        Command::Oracle(o) => {
            let (spec, model) = load(&o.dist)?;
            let model = regularized(model, o.eps)?;
            let curve = oracle::minimize_discrete(&model, o.area, o.segments, &OracleOptions::default())?;
            if let Some(path) = &o.curve {
                dio::write_points(File::create(path)?, &curve.points())?;
            }
            let hull = curve.hull_area();
            let mut v = json!({"config": config_json(cmd, Some(&spec))});
            v["energy"] = json!(curve.energy);
            v["signed_area"] = json!(curve.area);
            v["hull_area"] = json!(hull);
            v["feasibility"] = json!((curve.area.abs() - o.area).abs());
            v["curve"] = json!(o.curve.as_ref().map(|p| p.display().to_string()));
            Ok(Output::Json(v))
        }
        Command::Simulate(s) => {
            let (spec, model) = load(&s.dist)?;
            let mode = match s.mode {
                ModeArg::Naive => Mode::Naive,
                ModeArg::Tilted => Mode::Tilted,
            };
            let opts = RateOptions { eps: s.eps, ..RateOptions::default() };
            let e = montecarlo::estimate_ldp(&model, s.area, s.steps, s.samples, mode, s.seed, &opts)?;
            let mut v = json!({"config": config_json(cmd, Some(&spec))});
            v["rate_estimate"] = json!(e.rate_estimate);
            v["stderr"] = json!(e.stderr);
            v["hits"] = json!(e.hits);
            v["samples"] = json!(e.samples);
            v["probability"] = json!(e.probability);
            v["probability_stderr"] = json!(e.probability_stderr);
            v["status"] = json!(if e.zero_hits() { "ZeroHits" } else { "ok" });
            Ok(Output::Json(v))
        }
    }
}

/// Execute a parsed configuration and return the process exit code.
pub fn run(config: RunConfig) -> i32 {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = config.threads {
        builder = builder.num_threads(n as usize);
    }
    let outcome = match builder.build() {
        Ok(pool) => pool.install(|| execute(&config.command)),
        Err(e) => Err(Failure::Io(format!("thread pool: {e}"))),
    };
    let written = outcome.and_then(|out| {
        let bytes = match out {
            Output::Json(v) => {
                let mut s = serde_json::to_string_pretty(&v).expect("json serializes");
                s.push('\n');
                s.into_bytes()
            }
            Output::Csv(b) => b,
        };
        match &config.output {
            Some(p) => File::create(p).and_then(|mut f| f.write_all(&bytes)).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
            None => match io::stdout().lock().write_all(&bytes) {
                // reader went away, as in `ldp-hull levelset ... | head`
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(Failure::from),
            },
        }
    });
    match written {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}", f.to_json());
            f.exit_code()
        }
    }
}

/// Parse `args` and run. Usage errors exit with `1`; `--help` and `--version` with `0`.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(cfg) => run(cfg),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
