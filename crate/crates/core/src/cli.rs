//! The `kvgeom` command-line tool.
//!
//! Exit codes: 0 when every check is within tolerance, 1 when a check fails
//! or a computation leaves its domain (the report is still written), 2 for
//! usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bch_cache::{self, BchFile};
use crate::cyclic::CyclicJson;
use crate::flow::{flow_integrate, transport_errors, FlowState};
use crate::free_lie::{BchOrder, CoeffEntry};
use crate::kv::{kv1_residual, kv2_report, solve_kv, KvPair, KvPairJson, Strategy};
use crate::matrix_lie::{self, PointV, QuadraticLieAlgebra};
use crate::report::{geom_run, sample_points, SweepConfig, Tolerances};
use crate::{KvError, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Largest supported truncation degree.
pub const MAX_DEGREE: usize = 10;

#[derive(Parser, Debug)]
#[command(name = "kvgeom", version, about = "Kashiwara-Vergne solver: exact BCH and KV series, Poisson-geometric numerics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Campbell-Hausdorff series in the Lyndon basis, through the given degree.
    Bch(BchArgs),
    /// Solve the KV equations degree by degree over the rationals.
    SolveKv(SolveArgs),
    /// Exact residual of the first KV equation for a pair.
    CheckKv1(CheckArgs),
    /// Necklace residual of the trace equation for a pair.
    CheckKv2(CheckArgs),
    /// Seeded sweep of the geometric construction on a matrix Lie algebra.
    GeomRun(GeomArgs),
    /// Integrate the Moser flow from one point.
    Flow(FlowArgs),
}

fn degree_parser(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if (1..=MAX_DEGREE).contains(&n) => Ok(n),
        Ok(n) => Err(format!("degree {n} outside 1..={MAX_DEGREE}")),
        Err(e) => Err(e.to_string()),
    }
}

fn positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Args, Debug)]
pub struct BchArgs {
    #[arg(long, value_parser = degree_parser)]
    pub degree: usize,
    #[arg(long, default_value = "XY")]
    pub order: BchOrder,
    /// Cache directory (default: $KVGEOM_CACHE_DIR or ./.kvgeom-cache).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Skip the on-disk cache.
    #[arg(long)]
    pub no_cache: bool,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long, value_parser = degree_parser)]
    pub degree: usize,
    #[arg(long, default_value = "eq1-only")]
    pub strategy: Strategy,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long, value_parser = degree_parser)]
    pub degree: usize,
    /// Pair in the `solve-kv` JSON format; solved on the fly when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "eq1-only")]
    pub strategy: Strategy,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AlgebraArgs {
    /// Built-in algebra: so3, sl2 or gl2.
    #[arg(long, default_value = "so3")]
    pub algebra: String,
    /// JSON algebra descriptor; overrides --algebra.
    #[arg(long)]
    pub algebra_file: Option<PathBuf>,
}

impl AlgebraArgs {
    fn load(&self) -> Result<QuadraticLieAlgebra> {
        match &self.algebra_file {
            Some(path) => QuadraticLieAlgebra::from_json(&std::fs::read_to_string(path)?),
            None => matrix_lie::builtin(&self.algebra),
        }
    }
}

#[derive(Args, Debug)]
pub struct TolArgs {
    #[arg(long)]
    pub tol_eq1: Option<f64>,
    #[arg(long)]
    pub tol_eq2: Option<f64>,
    #[arg(long)]
    pub tol_kappa: Option<f64>,
    #[arg(long)]
    pub tol_jacobi: Option<f64>,
    #[arg(long)]
    pub tol_moment: Option<f64>,
    #[arg(long)]
    pub tol_modular: Option<f64>,
    #[arg(long)]
    pub tol_transport_phi: Option<f64>,
    #[arg(long)]
    pub tol_transport_vol: Option<f64>,
    #[arg(long)]
    pub tol_equivariance: Option<f64>,
}

impl TolArgs {
    fn apply(&self, mut t: Tolerances) -> Tolerances {
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut t.eq1, self.tol_eq1);
        set(&mut t.eq2, self.tol_eq2);
        set(&mut t.kappa_vs_lambda, self.tol_kappa);
        set(&mut t.jacobi, self.tol_jacobi);
        set(&mut t.moment_map, self.tol_moment);
        set(&mut t.modular, self.tol_modular);
        set(&mut t.transport_phi, self.tol_transport_phi);
        set(&mut t.transport_vol, self.tol_transport_vol);
        set(&mut t.equivariance, self.tol_equivariance);
        t
    }
}

#[derive(Args, Debug)]
pub struct GeomArgs {
    #[command(flatten)]
    pub algebra: AlgebraArgs,
    #[arg(long, default_value_t = 100, value_parser = positive)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.3)]
    pub radius: f64,
    /// RK4 steps per flow.
    #[arg(long, default_value_t = 200, value_parser = positive)]
    pub steps: usize,
    /// Number of sample points that are also flowed.
    #[arg(long, default_value_t = 2)]
    pub flow_points: usize,
    /// Number of sample points for the Jacobi, moment-map and equivariance checks.
    #[arg(long, default_value_t = 20)]
    pub check_points: usize,
    #[command(flatten)]
    pub tol: TolArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FlowArgs {
    #[command(flatten)]
    pub algebra: AlgebraArgs,
    /// Comma-separated coordinates of X; sampled from --seed when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<String>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.3)]
    pub radius: f64,
    #[arg(long, default_value_t = 200, value_parser = positive)]
    pub steps: usize,
    #[arg(long)]
    pub tol_transport_phi: Option<f64>,
    #[arg(long)]
    pub tol_transport_vol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Outcome {
    json: String,
    text: String,
    pass: bool,
}

fn pretty<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn render_coeffs(entries: &[CoeffEntry]) -> String {
    entries.iter().map(|e| format!("{}: {}\n", e.word, e.c)).collect()
}

fn cmd_bch(a: &BchArgs) -> Result<Outcome> {
    let series = if a.no_cache {
        crate::free_lie::bch(a.degree, a.order)
    } else {
        bch_cache::load_or_compute(&bch_cache::cache_dir(a.cache.as_deref()), a.degree, a.order)?
    };
    let file = BchFile::from_series(&series, a.order);
    let json = file.to_json()?;
    let text = if a.json { json.clone() } else { render_coeffs(&file.coeffs) };
    Ok(Outcome { json, text, pass: true })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Kv2Json {
    raw: CyclicJson,
    modulo_reversal: CyclicJson,
}

#[derive(Serialize)]
struct SolveJson {
    #[serde(flatten)]
    pair: KvPairJson,
    residual1: String,
    residual2_report: Kv2Json,
}

fn residual_string(r: &crate::free_lie::LieSeries) -> String {
    if r.is_zero() {
        "0".into()
    } else {
        r.to_string()
    }
}

fn kv2_json(p: &KvPair, n: usize) -> (Kv2Json, bool) {
    let (raw, reduced) = kv2_report(p, n);
    let pass = reduced.is_zero();
    (Kv2Json { raw: raw.to_json(), modulo_reversal: reduced.to_json() }, pass)
}

fn cmd_solve(a: &SolveArgs) -> Result<Outcome> {
    let pair = solve_kv(a.degree, a.strategy)?;
    let r1 = kv1_residual(&pair, a.degree);
    let (kv2, _) = kv2_json(&pair, a.degree);
    let out = SolveJson { pair: pair.to_json(), residual1: residual_string(&r1), residual2_report: kv2 };
    let json = pretty(&out)?;
    let text = format!(
        "A:\n{}B:\n{}residual1: {}\n",
        render_coeffs(&out.pair.a),
        render_coeffs(&out.pair.b),
        out.residual1
    );
    Ok(Outcome { json, text, pass: r1.is_zero() })
}

fn load_pair(a: &CheckArgs) -> Result<KvPair> {
    match &a.input {
        Some(path) => {
            let j: KvPairJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            KvPair::from_json(&j)
        }
        None => solve_kv(a.degree, a.strategy),
    }
}

#[derive(Serialize)]
struct Check1Json {
    degree: usize,
    residual: String,
    pass: bool,
}

fn cmd_check1(a: &CheckArgs) -> Result<Outcome> {
    let pair = load_pair(a)?;
    let r = kv1_residual(&pair, a.degree);
    let out = Check1Json { degree: a.degree, residual: residual_string(&r), pass: r.is_zero() };
    Ok(Outcome { json: pretty(&out)?, text: format!("residual: {}\n", out.residual), pass: out.pass })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Check2Json {
    degree: usize,
    #[serde(flatten)]
    residual: Kv2Json,
    raw_zero: bool,
    pass: bool,
}

fn cmd_check2(a: &CheckArgs) -> Result<Outcome> {
    let pair = load_pair(a)?;
    let (residual, pass) = kv2_json(&pair, a.degree);
    let raw_zero = residual.raw.necklaces.is_empty() && residual.raw.scalar == "0";
    let out = Check2Json { degree: a.degree, residual, raw_zero, pass };
    let text = format!(
        "raw residual zero: {}\nresidual modulo reversal zero: {}\n",
        out.raw_zero, out.pass
    );
    Ok(Outcome { json: pretty(&out)?, text, pass })
}

fn cmd_geom(a: &GeomArgs) -> Result<Outcome> {
    let alg = a.algebra.load()?;
    let cfg = SweepConfig {
        samples: a.samples,
        seed: a.seed,
        radius: a.radius,
        check_points: a.check_points,
        flow_points: a.flow_points,
        flow_steps: a.steps,
        tolerances: a.tol.apply(Tolerances::default()),
        ..SweepConfig::default()
    };
    let report = geom_run(&alg, &cfg)?;
    let mut text = report.summary_lines().join("\n");
    text.push_str(&format!("\n{}: {}\n", report.algebra, if report.pass { "PASS" } else { "FAIL" }));
    Ok(Outcome { json: report.to_json()?, text, pass: report.pass })
}

fn parse_coords(s: &str, d: usize) -> Result<nalgebra::DVector<f64>> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| KvError::InvalidArgument(format!("bad coordinate '{t}': {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if v.len() != d {
        return Err(KvError::InvalidArgument(format!("expected {d} coordinates, got {}", v.len())));
    }
    Ok(nalgebra::DVector::from_vec(v))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FlowJson {
    algebra: String,
    steps: usize,
    transport_phi: f64,
    transport_vol: f64,
    tolerances: [f64; 2],
    pass: bool,
    states: Vec<FlowState>,
}

fn cmd_flow(a: &FlowArgs) -> Result<Outcome> {
    let alg = a.algebra.load()?;
    let d = alg.dim();
    let p0 = match (&a.x, &a.y) {
        (Some(x), Some(y)) => PointV::new(parse_coords(x, d)?, parse_coords(y, d)?),
        (None, None) => sample_points(&alg, 1, a.radius, a.seed).remove(0),
        _ => return Err(KvError::InvalidArgument("give both --x and --y or neither".into())),
    };
    if !alg.in_domain(&p0) {
        return Err(KvError::InvalidArgument("starting point lies outside the domain".into()));
    }
    let states = flow_integrate(&alg, &p0, a.steps)?;
    let (phi, vol) = transport_errors(&alg, &states)?;
    let defaults = Tolerances::default();
    let tol = [
        a.tol_transport_phi.unwrap_or(defaults.transport_phi),
        a.tol_transport_vol.unwrap_or(defaults.transport_vol),
    ];
    let pass = phi <= tol[0] && vol <= tol[1];
    let text = format!(
        "transportPhi: {phi:.3e} (tol {:.0e})\ntransportVol: {vol:.3e} (tol {:.0e})\n{}\n",
        tol[0],
        tol[1],
        if pass { "PASS" } else { "FAIL" }
    );
    let out = FlowJson { algebra: alg.name().into(), steps: a.steps, transport_phi: phi, transport_vol: vol, tolerances: tol, pass, states };
    Ok(Outcome { json: pretty(&out)?, text, pass })
}

fn exit_code_for(e: &KvError) -> i32 {
    match e {
        KvError::InvalidArgument(_) | KvError::Parse(_) | KvError::InvalidAlgebra(_) => EXIT_USAGE,
        _ => EXIT_CHECK_FAILED,
    }
}

/// Runs the tool on explicit arguments (the first is the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{rendered}") } else { write!(out, "{rendered}") };
            return code;
        }
    };
    let (result, path) = match &cli.command {
        Command::Bch(a) => (cmd_bch(a), a.out.clone()),
        Command::SolveKv(a) => (cmd_solve(a), a.out.clone()),
        Command::CheckKv1(a) => (cmd_check1(a), a.out.clone()),
        Command::CheckKv2(a) => (cmd_check2(a), a.out.clone()),
        Command::GeomRun(a) => (cmd_geom(a), a.out.clone()),
        Command::Flow(a) => (cmd_flow(a), a.out.clone()),
    };
    match result {
        Ok(o) => {
            if let Some(path) = path {
                if let Err(e) = bch_cache::write_atomic(&path, &o.json) {
                    let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
                    return EXIT_CHECK_FAILED;
                }
            }
            let _ = write!(out, "{}", o.text);
            if o.pass {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
