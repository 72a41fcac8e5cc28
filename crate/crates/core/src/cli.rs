//! Command-line front end. One job per invocation, JSON in and JSON out.
//!
//! Exit codes: 0 on success, 1 when a mathematical precondition fails (the
//! output then carries an `error` object), 2 when the input or flags are invalid.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::acceptance::{self, AcceptanceConfig};
use crate::ball::{BallPoint, Sampler};
use crate::classify;
use crate::ensemble::{gen_ensemble, Kind};
use crate::error::Error;
use crate::frostman::{classify_contraction, phi, phi_inv, ContractionKind};
use crate::model::{characteristic_function, theta_function, verify_model};
use crate::numlin::{op_norm, CMat, Tol, C64};
use crate::rowop::RowContraction;
use crate::schur::{coincide, weak_coincidence, SchurFunction};

pub const SCHEMA: &str = "rowcon/1";
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Classify,
    Decompose,
    Charfun,
    Theta,
    Frostman,
    Coincide,
    Verify,
    Gen,
    Selftest,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "rowcon", version, about = "Characteristic functions and models of row contractions")]
pub struct JobSpec {
    #[arg(long, value_enum)]
    pub command: Command,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Written atomically; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub grid_count: usize,
    #[arg(long, env = "ROWCON_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.9)]
    pub ring_radius: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_rank: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_residual: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_psd: f64,
    /// Residual bound for `verify`.
    #[arg(long, default_value_t = 1e-8)]
    pub bound: f64,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value = "generic")]
    pub kind: Kind,
    /// Restrict `selftest` to these criteria.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
}

impl JobSpec {
    pub fn tol(&self) -> Tol {
        Tol { rank_rel: self.tol_rank, residual: self.tol_residual, psd: self.tol_psd }
    }

    pub fn sampler(&self) -> Sampler {
        Sampler { count: self.grid_count, seed: self.seed, ring_radius: self.ring_radius }
    }
}

/// Matrices travel as row-major nested arrays of `[re, im]` pairs.
pub type MatJson = Vec<Vec<[f64; 2]>>;

pub fn mat_to_json(m: &CMat) -> MatJson {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn mat_from_json(rows: &MatJson, cols: usize) -> Result<CMat, String> {
    if rows.iter().any(|r| r.len() != cols) {
        return Err(format!("ragged matrix, expected {cols} columns"));
    }
    Ok(CMat::from_fn(rows.len(), cols, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

fn mat_from_json_any(rows: &MatJson) -> Result<CMat, String> {
    mat_from_json(rows, rows.first().map_or(0, Vec::len))
}

fn point_to_json(z: &BallPoint) -> Vec<[f64; 2]> {
    z.0.iter().map(|c| [c.re, c.im]).collect()
}

fn point_from_json(v: &[[f64; 2]]) -> Result<BallPoint, String> {
    BallPoint::new(v.iter().map(|c| C64::new(c[0], c[1])).collect()).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowContractionJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub n: usize,
    pub d: usize,
    pub blocks: Vec<MatJson>,
}

impl RowContractionJson {
    pub fn from_op(t: &RowContraction) -> Self {
        RowContractionJson { schema: None, n: t.n, d: t.d, blocks: t.blocks.iter().map(mat_to_json).collect() }
    }

    pub fn to_op(&self, tol: Tol) -> Result<RowContraction, String> {
        check_schema(self.schema.as_deref())?;
        if self.blocks.len() != self.d || self.blocks.iter().any(|b| b.len() != self.n) {
            return Err(format!("expected {} blocks of {} rows", self.d, self.n));
        }
        let blocks = self.blocks.iter().map(|b| mat_from_json(b, self.n)).collect::<Result<Vec<_>, _>>()?;
        RowContraction::new(blocks, tol).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableJson {
    pub points: Vec<Vec<[f64; 2]>>,
    pub values: Vec<MatJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl TableJson {
    fn from_values(points: &[BallPoint], values: &[CMat], provenance: &str) -> Self {
        TableJson {
            points: points.iter().map(point_to_json).collect(),
            values: values.iter().map(mat_to_json).collect(),
            provenance: Some(provenance.to_string()),
        }
    }

    fn to_function(&self) -> Result<SchurFunction, String> {
        let points = self.points.iter().map(|p| point_from_json(p)).collect::<Result<Vec<_>, _>>()?;
        let values = self.values.iter().map(mat_from_json_any).collect::<Result<Vec<_>, _>>()?;
        SchurFunction::sampled(points, values).map_err(|e| e.to_string())
    }
}

/// Either an operator (compared through its characteristic function) or a table.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FunctionSource {
    Operator(RowContractionJson),
    Table(TableJson),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoincideInput {
    #[serde(default)]
    schema: Option<String>,
    first: FunctionSource,
    second: FunctionSource,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrostmanInput {
    #[serde(default)]
    schema: Option<String>,
    alpha: MatJson,
    beta: MatJson,
}

fn check_schema(s: Option<&str>) -> Result<(), String> {
    match s {
        None | Some(SCHEMA) => Ok(()),
        Some(other) => Err(format!("unsupported schema {other:?}, expected {SCHEMA:?}")),
    }
}

/// Machine-readable name of an error variant.
pub fn error_code(e: &Error) -> &'static str {
    match e {
        Error::NotPsd { .. } => "not_psd",
        Error::Singular => "singular",
        Error::ShapeMismatch(_) => "shape_mismatch",
        Error::LetterOutOfRange { .. } => "letter_out_of_range",
        Error::NotContraction(_) => "not_contraction",
        Error::NotPartialIsometry(_) => "not_partial_isometry",
        Error::AlphaNotStrict(_) => "alpha_not_strict",
        Error::SingularDenominator => "singular_denominator",
        Error::SamplerExhausted(_) => "sampler_exhausted",
        Error::Unital => "unital",
        Error::RankDeficientGrid(_) => "rank_deficient_grid",
        Error::NotExtension(_) => "not_extension",
        Error::NotCcnc => "not_ccnc",
        Error::DegenerateTriple => "degenerate_triple",
        Error::IllConditioned(_) => "ill_conditioned",
        Error::PreconditionUnmet(_) => "precondition_unmet",
        Error::Invalid(_) => "invalid",
    }
}

/// Outcome of a job before it is wrapped in the reproducibility header.
enum Failure {
    Usage(String),
    Math { code: String, message: String, partial: Option<Value> },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Math { code: error_code(&e).into(), message: e.to_string(), partial: None }
    }
}

struct Input {
    text: String,
    sha256: String,
}

fn read_input(path: Option<&Path>) -> Result<Input, Failure> {
    let path = path.ok_or_else(|| Failure::Usage("this command needs --input".into()))?;
    let bytes = std::fs::read(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let sha256 = Sha256::digest(&bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    });
    let text = String::from_utf8(bytes).map_err(|e| Failure::Usage(format!("input is not UTF-8: {e}")))?;
    Ok(Input { text, sha256 })
}

fn parse<T: for<'de> Deserialize<'de>>(input: &Input) -> Result<T, Failure> {
    serde_json::from_str(&input.text).map_err(|e| Failure::Usage(format!("input does not match the {SCHEMA} schema: {e}")))
}

fn operator(input: &Input, tol: Tol) -> Result<RowContraction, Failure> {
    parse::<RowContractionJson>(input)?.to_op(tol).map_err(Failure::Usage)
}

fn run_classify(t: &RowContraction, job: &JobSpec) -> Result<Value, Failure> {
    let rep = classify::classify(t, &job.sampler())?;
    Ok(serde_json::to_value(&rep).expect("report serializes"))
}

fn run_decompose(t: &RowContraction) -> Result<Value, Failure> {
    let parts = t.iso_pure_decompose()?;
    let isometric = if t.is_partial_isometry() { Some(classify::max_isometric_coinvariant(t)?.dim()) } else { None };
    Ok(json!({
        "v": RowContractionJson::from_op(&parts.v),
        "c": RowContractionJson::from_op(&parts.c),
        "initial_dim": parts.initial_space.dim(),
        "final_dim": parts.final_space.dim(),
        "residual": parts.residual(t),
        "max_isometric_coinvariant_dim": isometric,
    }))
}

fn run_charfun(t: &RowContraction, job: &JobSpec) -> Result<Value, Failure> {
    let data = characteristic_function(t, &job.sampler())?;
    let points = job.sampler().points(t.d);
    let values = data.b_t.eval_many(&points)?;
    let origin = data.bt_eval(&BallPoint::origin(t.d))?;
    Ok(json!({
        "p": data.p(),
        "q": data.q(),
        "delta": mat_to_json(&data.delta),
        "kappa0": mat_to_json(&data.kappa0),
        "at_origin": mat_to_json(&origin),
        "table": TableJson::from_values(&points, &values, "Frostman shift of the partial-isometry characteristic function"),
    }))
}

fn run_theta(t: &RowContraction, job: &JobSpec) -> Result<Value, Failure> {
    let theta = theta_function(t);
    let points = job.sampler().points(t.d);
    let values = theta.eval_many(&points)?;
    Ok(json!({
        "p": theta.p,
        "q": theta.q,
        "table": TableJson::from_values(&points, &values, "Nagy-Foias characteristic function on the defect spaces"),
    }))
}

fn run_frostman(input: &Input, tol: Tol) -> Result<Value, Failure> {
    let inp: FrostmanInput = parse(input)?;
    check_schema(inp.schema.as_deref()).map_err(Failure::Usage)?;
    let alpha = mat_from_json_any(&inp.alpha).map_err(Failure::Usage)?;
    let beta = mat_from_json_any(&inp.beta).map_err(Failure::Usage)?;
    let class = classify_contraction(&alpha, &tol);
    let image = phi(&alpha, &beta, &tol)?;
    let pre = phi_inv(&alpha, &beta, &tol)?;
    let round_trip = op_norm(&(phi_inv(&alpha, &image, &tol)? - &beta));
    let kind = match class.kind {
        ContractionKind::Strict => "strict",
        ContractionKind::Boundary => "boundary",
        ContractionKind::NotContraction => "not_contraction",
    };
    Ok(json!({
        "alpha_kind": kind,
        "alpha_norm": class.norm,
        "phi": mat_to_json(&image),
        "phi_inv": mat_to_json(&pre),
        "round_trip_residual": round_trip,
    }))
}

fn function_of(src: &FunctionSource, job: &JobSpec) -> Result<SchurFunction, Failure> {
    match src {
        FunctionSource::Operator(op) => {
            let t = op.to_op(job.tol()).map_err(Failure::Usage)?;
            Ok(characteristic_function(&t, &job.sampler())?.b_t)
        }
        FunctionSource::Table(t) => t.to_function().map_err(Failure::Usage),
    }
}

fn run_coincide(input: &Input, job: &JobSpec) -> Result<Value, Failure> {
    let inp: CoincideInput = parse(input)?;
    check_schema(inp.schema.as_deref()).map_err(Failure::Usage)?;
    let b1 = function_of(&inp.first, job)?;
    let b2 = function_of(&inp.second, job)?;
    let tol = job.tol();
    // Tables are compared on their own points; operators on the job grid.
    let points = match &b1.body {
        crate::schur::Body::Sampled(t) => t.points.clone(),
        _ => job.sampler().points(b1.d),
    };
    let weak = weak_coincidence(&b1, &b2, &points, &tol)?;
    let strong = if (b1.p, b1.q) == (b2.p, b2.q) { coincide(&b1, &b2, &points, &tol)?.map(|c| c.residual) } else { None };
    Ok(json!({
        "weak": { "residual": weak.residual, "coincide": weak.residual <= 10.0 * tol.residual, "w": mat_to_json(&weak.w) },
        "strong_residual": strong,
        "coincide": strong.is_some(),
    }))
}

fn run_verify(t: &RowContraction, job: &JobSpec) -> Result<Value, Failure> {
    let rep = verify_model(t, &job.sampler(), job.bound)?;
    let value = serde_json::to_value(&rep).expect("report serializes");
    if !rep.is_ccnc {
        return Err(Failure::Math { code: "not_ccnc".into(), message: Error::NotCcnc.to_string(), partial: Some(value) });
    }
    if let Some(c) = rep.checks.iter().find(|c| !c.pass) {
        return Err(Failure::Math {
            code: "check_failed".into(),
            message: format!("{} residual {:e} above {:e}", c.name, c.residual, c.bound),
            partial: Some(value),
        });
    }
    Ok(value)
}

fn run_gen(job: &JobSpec) -> Result<Value, Failure> {
    if job.n == 0 || job.d == 0 || job.count == 0 {
        return Err(Failure::Usage("gen needs n, d, count ≥ 1".into()));
    }
    let ts = gen_ensemble(job.n, job.d, job.count, job.seed, job.kind, job.tol());
    Ok(json!({
        "n": job.n,
        "d": job.d,
        "kind": job.kind,
        "ensemble": ts.iter().map(RowContractionJson::from_op).collect::<Vec<_>>(),
    }))
}

fn run_selftest(job: &JobSpec) -> Result<Value, Failure> {
    let cfg = AcceptanceConfig { tol: job.tol(), seed: job.seed };
    let outcomes = acceptance::run(cfg, &job.only);
    for o in &outcomes {
        eprintln!("{}", o.line());
    }
    let value = json!({ "criteria": outcomes, "pass": outcomes.iter().all(|o| o.pass) });
    match outcomes.iter().find(|o| !o.pass) {
        Some(o) => Err(Failure::Math {
            code: "criterion_failed".into(),
            message: format!("criterion {} ({}) failed", o.id, o.name),
            partial: Some(value),
        }),
        None => Ok(value),
    }
}

fn dispatch(job: &JobSpec, input: Option<&Input>) -> Result<Value, Failure> {
    let need = || input.ok_or_else(|| Failure::Usage("this command needs --input".into()));
    let tol = job.tol();
    match job.command {
        Command::Classify => run_classify(&operator(need()?, tol)?, job),
        Command::Decompose => run_decompose(&operator(need()?, tol)?),
        Command::Charfun => run_charfun(&operator(need()?, tol)?, job),
        Command::Theta => run_theta(&operator(need()?, tol)?, job),
        Command::Frostman => run_frostman(need()?, tol),
        Command::Coincide => run_coincide(need()?, job),
        Command::Verify => run_verify(&operator(need()?, tol)?, job),
        Command::Gen => run_gen(job),
        Command::Selftest => run_selftest(job),
    }
}

fn header(job: &JobSpec, input: Option<&Input>) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(job.command));
    m.insert("seed".into(), json!(job.seed));
    m.insert("tolerances".into(), json!(job.tol()));
    m.insert("grid".into(), json!({ "count": job.grid_count, "seed": job.seed, "ring_radius": job.ring_radius }));
    m.insert("input_sha256".into(), json!(input.map(|i| i.sha256.clone())));
    m
}

/// Writes through a temporary file in the target directory, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map(|_| ()).map_err(|e| e.error)
}

fn validate(job: &JobSpec) -> Result<(), String> {
    job.tol().validate().map_err(|e| e.to_string())?;
    if job.grid_count < 2 {
        return Err("--grid-count must be at least 2".into());
    }
    // Written so that NaN is rejected too.
    let inside = job.ring_radius > 0.0 && job.ring_radius < 1.0;
    if !inside {
        return Err("--ring-radius must lie in (0, 1)".into());
    }
    Ok(())
}

/// Runs one job and returns the process exit code.
pub fn run(job: &JobSpec) -> i32 {
    if let Err(msg) = validate(job) {
        eprintln!("rowcon: {msg}");
        return 2;
    }
    let input = match job.input.as_deref().map(|p| read_input(Some(p))).transpose() {
        Ok(i) => i,
        Err(Failure::Usage(msg)) => {
            eprintln!("rowcon: {msg}");
            return 2;
        }
        Err(Failure::Math { message, .. }) => {
            eprintln!("rowcon: {message}");
            return 2;
        }
    };
    let mut out = header(job, input.as_ref());
    let code = match dispatch(job, input.as_ref()) {
        Ok(result) => {
            out.insert("result".into(), result);
            0
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("rowcon: {msg}");
            return 2;
        }
        Err(Failure::Math { code, message, partial }) => {
            eprintln!("rowcon: {message}");
            out.insert("error".into(), json!({ "code": code, "message": message }));
            if let Some(p) = partial {
                out.insert("result".into(), p);
            }
            1
        }
    };
    let mut text = serde_json::to_string_pretty(&Value::Object(out)).expect("JSON output");
    text.push('\n');
    let written = match &job.output {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("rowcon: cannot write output: {e}");
        return 2;
    }
    code
}

/// Parses `args` (including the program name) and runs the job.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match JobSpec::try_parse_from(args) {
        Ok(job) => run(&job),
        Err(e) => {
            let _ = e.print();
            match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_json_round_trip_is_exact() {
        let m = CMat::from_fn(2, 3, |i, j| C64::new(0.1 * i as f64 + 1.0 / 3.0, -(j as f64) / 7.0));
        let text = serde_json::to_string(&mat_to_json(&m)).unwrap();
        let back: MatJson = serde_json::from_str(&text).unwrap();
        assert_eq!(mat_from_json(&back, 3).unwrap(), m);
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let j = RowContractionJson { schema: Some("rowcon/0".into()), n: 1, d: 1, blocks: vec![vec![vec![[0.5, 0.0]]]] };
        assert!(j.to_op(Tol::default()).is_err());
        let ok = RowContractionJson { schema: Some(SCHEMA.into()), ..j };
        assert!(ok.to_op(Tol::default()).is_ok());
    }

    #[test]
    fn flags_parse_with_defaults() {
        let job = JobSpec::try_parse_from(["rowcon", "--command", "gen", "--seed", "7"]).unwrap();
        assert_eq!(job.command, Command::Gen);
        assert_eq!((job.seed, job.grid_count), (7, 200));
        assert_eq!(job.tol(), Tol::default());
        assert!(JobSpec::try_parse_from(["rowcon", "--command", "nope"]).is_err());
    }

    #[test]
    fn error_codes_are_distinct() {
        let all = [Error::NotCcnc, Error::Unital, Error::Singular, Error::DegenerateTriple];
        let codes: std::collections::HashSet<_> = all.iter().map(error_code).collect();
        assert_eq!(codes.len(), all.len());
    }
}
