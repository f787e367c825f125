//! Command-line runner: config resolution, manifests, atomic artifacts and
//! resumable sweeps.
//!
//! A run is `speclab <command> [--config FILE] [--out DIR] [--seed N]
//! [--threads N|auto] [--key value ...]`. Every `--key value` pair that is
//! not one of the runner's own flags becomes a command parameter and
//! overrides the config file.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use num_bigint::{BigInt, BigUint};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::cocycle::{phase_sample, Cocycle, CocycleKind, JacobiModel};
use crate::diophantine::{beta, default_window, ContinuedFraction};
use crate::duality::duality_checks;
use crate::ehm::{self, AlphaSpec, Thresholds, TransitionConfig};
use crate::error::{Error, Result};
use crate::operator::{gordon_test, ids_with_threshold, GordonSource, DEFAULT_BOUNDARY_THRESHOLD};
use crate::reducibility::{cohomology_residual, dual_eigenvector_from_conjugacy, fit_conjugacy, log_ratio_rhs, phase_coboundary, solve_cohomology, Row};
use crate::symbol::{SymbolJson, TorusSymbol};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Beta,
    Winding,
    Lyapunov,
    Ids,
    Rotation,
    DualityCheck,
    Cohomology,
    Conjugacy,
    Gordon,
    Transition,
    Atlas,
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

/// `auto` or a fixed worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threads {
    #[default]
    Auto,
    Count(usize),
}

impl Threads {
    fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" | "" => Ok(Threads::Auto),
            t => match t.parse::<usize>() {
                Ok(n) if n > 0 => Ok(Threads::Count(n)),
                _ => Err(Error::InvalidParameters(format!("threads must be a positive integer or auto, got {t:?}"))),
            },
        }
    }
}

impl Serialize for Threads {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Threads::Auto => s.serialize_str("auto"),
            Threads::Count(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Threads {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) => Threads::parse(&s).map_err(serde::de::Error::custom),
            Value::Number(n) => match n.as_u64() {
                Some(k) if k > 0 => Ok(Threads::Count(k as usize)),
                _ => Err(serde::de::Error::custom("threads must be positive")),
            },
            _ => Err(serde::de::Error::custom("threads must be a number or \"auto\"")),
        }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub threads: Threads,
}

/// Template plus axes for [`sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub template: RunConfig,
    /// Axis name to the values it takes; the grid is their product in
    /// the order given.
    pub axes: Vec<(String, Vec<Value>)>,
}

// ---------------------------------------------------------------------------
// output

/// JSON text with every non-integer number written with 17 significant
/// digits.
pub fn json_text(v: &Value) -> String {
    let mut s = String::new();
    write_json(&mut s, v, 0);
    s.push('\n');
    s
}

fn write_json(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat(' ').take(n));
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&f17(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                pad(out, indent + 2);
                write_json(out, x, indent + 2);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                pad(out, indent + 2);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_json(out, x, indent + 2);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// 17 significant digits; non-finite values as `NaN`, `inf`, `-inf`.
pub fn f17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

/// Writes through a temporary file in the same directory and renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error.to_string()))?;
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Artifacts produced by a command, relative file name to contents.
type Artifacts = Vec<(String, Vec<u8>)>;

fn json_artifact<T: Serialize>(name: &str, v: &T) -> Result<(String, Vec<u8>)> {
    let v = serde_json::to_value(v).map_err(|e| Error::Contract(e.to_string()))?;
    Ok((name.to_string(), json_text(&v).into_bytes()))
}

/// Big integers as JSON numbers when they fit in 64 bits, strings otherwise.
fn big_u(x: &BigUint) -> Value {
    u64::try_from(x).map(Value::from).unwrap_or_else(|_| Value::String(x.to_string()))
}

fn big_i(x: &BigInt) -> Value {
    i64::try_from(x).map(Value::from).unwrap_or_else(|_| Value::String(x.to_string()))
}

pub fn cf_json(cf: &ContinuedFraction) -> Value {
    json!({
        "integer_part": big_i(&cf.integer_part),
        "quotients": cf.quotients.iter().map(big_u).collect::<Vec<_>>(),
        "p": cf.p.iter().map(big_i).collect::<Vec<_>>(),
        "q": cf.q.iter().map(big_u).collect::<Vec<_>>(),
    })
}

// ---------------------------------------------------------------------------
// parameters

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameters(msg.into())
}

fn typed<P: DeserializeOwned + Serialize>(map: Map<String, Value>) -> Result<(P, Map<String, Value>)> {
    let p: P = serde_json::from_value(Value::Object(map)).map_err(|e| invalid(e.to_string()))?;
    match serde_json::to_value(&p) {
        Ok(Value::Object(m)) => Ok((p, m)),
        _ => Err(Error::Contract("parameters do not serialize to an object".into())),
    }
}

const ALPHA_KEYS: [&str; 5] = ["alpha", "depth", "beta_target", "prefix", "levels"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct AlphaParams {
    /// `golden`, `silver`, `p/q`, a decimal, or `synth`.
    alpha: String,
    depth: usize,
    beta_target: f64,
    prefix: Vec<u64>,
    levels: usize,
}

impl Default for AlphaParams {
    fn default() -> Self {
        AlphaParams { alpha: "golden".into(), depth: 40, beta_target: 1.5, prefix: vec![1, 4], levels: 4 }
    }
}

impl AlphaParams {
    fn spec(&self) -> AlphaSpec {
        match self.alpha.as_str() {
            "golden" => AlphaSpec::Golden { depth: self.depth },
            "synth" => AlphaSpec::Synthesized { beta: self.beta_target, prefix: self.prefix.clone(), levels: self.levels },
            v => AlphaSpec::Value { value: v.to_string(), depth: self.depth },
        }
    }
}

/// Splits the frequency keys off `map`; the rest goes to the command.
fn with_alpha<P: DeserializeOwned + Serialize>(mut map: Map<String, Value>) -> Result<(AlphaParams, P, Map<String, Value>)> {
    let mut am = Map::new();
    for k in ALPHA_KEYS {
        if let Some(v) = map.remove(k) {
            am.insert(k.to_string(), v);
        }
    }
    let (a, mut resolved_a): (AlphaParams, _) = typed(am)?;
    if a.alpha != "synth" {
        for k in ["beta_target", "prefix", "levels"] {
            resolved_a.remove(k);
        }
    } else {
        resolved_a.remove("depth");
    }
    let (p, mut resolved) = typed::<P>(map)?;
    resolved.extend(resolved_a);
    Ok((a, p, resolved))
}

fn lambda_model(lambda: [f64; 3], a: &AlphaParams) -> Result<(JacobiModel, ContinuedFraction)> {
    let cf = a.spec().continued_fraction()?;
    Ok((ehm::model(lambda, cf.clone())?, cf))
}

/// Explicit list, else an even grid, else spectrum-proxy energies.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnergyParams {
    energy: Option<f64>,
    #[serde(default)]
    energies: Vec<f64>,
    e_min: Option<f64>,
    e_max: Option<f64>,
    n_e: Option<usize>,
    #[serde(default = "five")]
    n_spectrum: usize,
}

fn five() -> usize {
    5
}

impl EnergyParams {
    fn resolve(&self, m: &JacobiModel, seed: u64) -> Result<Vec<f64>> {
        if let Some(e) = self.energy {
            return Ok(vec![e]);
        }
        if !self.energies.is_empty() {
            return Ok(self.energies.clone());
        }
        if let Some(n) = self.n_e {
            let b = m.spectral_bound();
            let lo = self.e_min.unwrap_or(-b);
            let hi = self.e_max.unwrap_or(b);
            if n == 0 || !(hi >= lo) {
                return Err(invalid("energy grid needs n_e >= 1 and e_min <= e_max"));
            }
            if n == 1 {
                return Ok(vec![lo]);
            }
            return Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect());
        }
        ehm::spectrum_samples(m, phase_sample(seed, 0), 300, self.n_spectrum)
    }
}

macro_rules! energy_params {
    ($name:ident { $($field:ident : $ty:ty = $default:expr),* $(,)? }) => {
        #[derive(Debug, Clone, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        struct $name {
            lambda: [f64; 3],
            #[serde(default)]
            energy: Option<f64>,
            #[serde(default)]
            energies: Vec<f64>,
            #[serde(default)]
            e_min: Option<f64>,
            #[serde(default)]
            e_max: Option<f64>,
            #[serde(default)]
            n_e: Option<usize>,
            #[serde(default = "five")]
            n_spectrum: usize,
            $(#[serde(default = $default)] $field: $ty,)*
        }

        impl $name {
            fn energy(&self) -> EnergyParams {
                EnergyParams {
                    energy: self.energy,
                    energies: self.energies.clone(),
                    e_min: self.e_min,
                    e_max: self.e_max,
                    n_e: self.n_e,
                    n_spectrum: self.n_spectrum,
                }
            }
        }
    };
}

fn d_million() -> u64 {
    1_000_000
}
fn d_eight() -> usize {
    8
}
fn d_zero_eps() -> Vec<f64> {
    vec![0.0]
}
fn d_kind() -> String {
    "normalized".into()
}
fn d_theta0() -> f64 {
    0.1
}

energy_params!(LyapunovParams {
    n_iter: u64 = "d_million",
    n_phases: usize = "d_eight",
    epsilon: Vec<f64> = "d_zero_eps",
    kind: String = "d_kind",
});

energy_params!(RotationParams {
    n_iter: u64 = "d_million",
    theta0: f64 = "d_theta0",
});

fn cocycle_kind(name: &str) -> Result<CocycleKind> {
    match name {
        "transfer" => Ok(CocycleKind::Transfer),
        "normalized" => Ok(CocycleKind::Normalized),
        k => Err(invalid(format!("unknown cocycle kind {k:?}"))),
    }
}

// ---------------------------------------------------------------------------
// commands

fn cmd_beta(params: Map<String, Value>) -> Result<(Map<String, Value>, Artifacts)> {
    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        #[serde(default)]
        window: Option<usize>,
    }
    let (a, p, resolved): (_, P, _) = with_alpha(params)?;
    let cf = a.spec().continued_fraction()?;
    let window = p.window.unwrap_or_else(|| default_window(&cf));
    let b = beta(&cf, window)?;
    let out = json!({
        "value": b.value,
        "window": b.window,
        "depth": b.depth,
        "per_level": b.per_level,
        "continued_fraction": cf_json(&cf),
    });
    Ok((resolved, vec![("beta.json".into(), json_text(&out).into_bytes())]))
}

fn cmd_winding(params: Map<String, Value>) -> Result<(Map<String, Value>, Artifacts)> {
    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        #[serde(default)]
        lambda: Option<[f64; 3]>,
        /// `c` for the hopping of `λ`, `d` for its dual.
        #[serde(default = "d_c")]
        symbol: String,
        #[serde(default)]
        coeffs: Option<Vec<(i64, f64, f64)>>,
        #[serde(default = "d_grid")]
        grid: usize,
    }
    fn d_c() -> String {
        "c".into()
    }
    fn d_grid() -> usize {
        4096
    }
    let (p, resolved): (P, _) = typed(params)?;
    let a = crate::diophantine::HighPrecisionReal::golden(64).to_f64();
    let s = match (&p.lambda, &p.coeffs) {
        (Some(l), None) => match p.symbol.as_str() {
            "c" => {
                ehm::classify(*l)?;
                ehm::hopping(*l, a)
            }
            "d" => ehm::dual_symbol(*l, a)?.d,
            other => return Err(invalid(format!("symbol must be c or d, got {other:?}"))),
        },
        (None, Some(c)) => TorusSymbol::from_json(&SymbolJson { half_phase: false, alpha: a, strip: None, coeffs: c.clone() })?,
        _ => return Err(invalid("give exactly one of lambda or coeffs")),
    };
    let w = s.winding(p.grid)?;
    let z = s.zeros_on_torus()?;
    let out = json!({
        "winding": w,
        "min_modulus": s.min_modulus(p.grid),
        "roots": z.roots.iter().map(|r| [r.re, r.im]).collect::<Vec<_>>(),
        "on_circle": z.on_circle.len(),
    });
    Ok((resolved, vec![("winding.json".into(), json_text(&out).into_bytes())]))
}

fn cmd_lyapunov(params: Map<String, Value>, seed: u64) -> Result<(Map<String, Value>, Artifacts)> {
    let (a, p, resolved): (_, LyapunovParams, _) = with_alpha(params)?;
    let (m, _) = lambda_model(p.lambda, &a)?;
    let energies = p.energy().resolve(&m, seed)?;
    let kind = cocycle_kind(&p.kind)?;
    let closed = ehm::lyapunov_closed_form(p.lambda).ok();
    let mut rows = Vec::new();
    for &e in &energies {
        let co = Cocycle::new(m.clone(), e, kind.clone());
        let est = co.lyapunov_strip(&p.epsilon, p.n_iter, p.n_phases, seed)?;
        for (eps, r) in p.epsilon.iter().zip(est) {
            rows.push(vec![f17(e), f17(*eps), f17(r.value), f17(r.stderr), closed.map(f17).unwrap_or_default()]);
        }
    }
    let csv = csv_text(&["energy", "epsilon", "lyapunov", "stderr", "closed_form"], &rows)?;
    Ok((resolved, vec![("lyapunov.csv".into(), csv)]))
}

fn cmd_rotation(params: Map<String, Value>, seed: u64) -> Result<(Map<String, Value>, Artifacts)> {
    let (a, p, resolved): (_, RotationParams, _) = with_alpha(params)?;
    let (m, _) = lambda_model(p.lambda, &a)?;
    let energies = p.energy().resolve(&m, seed)?;
    use rayon::prelude::*;
    let rhos: Vec<f64> = energies
        .par_iter()
        .map(|&e| Cocycle::new(m.clone(), e, CocycleKind::Normalized).rotation_number(p.n_iter, p.theta0))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<String>> = energies.iter().zip(&rhos).map(|(e, r)| vec![f17(*e), f17(*r), f17(1.0 - 2.0 * r)]).collect();
    let csv = csv_text(&["energy", "rho", "one_minus_two_rho"], &rows)?;
    Ok((resolved, vec![("rotation.csv".into(), csv)]))
}

fn cmd_ids(params: Map<String, Value>, seed: u64) -> Result<(Map<String, Value>, Artifacts)> {
    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        lambda: [f64; 3],
        #[serde(rename = "N", default = "d_n")]
        n_half: usize,
        #[serde(default = "d_sixteen")]
        n_phases: usize,
        #[serde(default)]
        e_min: Option<f64>,
        #[serde(default)]
        e_max: Option<f64>,
        #[serde(default = "d_fifty")]
        n_e: usize,
        #[serde(default = "d_threshold")]
        boundary_threshold: f64,
    }
    fn d_n() -> usize {
        500
    }
    fn d_sixteen() -> usize {
        16
    }
    fn d_fifty() -> usize {
        50
    }
    fn d_threshold() -> f64 {
        DEFAULT_BOUNDARY_THRESHOLD
    }
    let (a, p, resolved): (_, P, _) = with_alpha(params)?;
    let (m, _) = lambda_model(p.lambda, &a)?;
    let grid = EnergyParams { e_min: p.e_min, e_max: p.e_max, n_e: Some(p.n_e), ..Default::default() }.resolve(&m, seed)?;
    let curve = ids_with_threshold(&m, &grid, p.n_half, p.n_phases, seed, p.boundary_threshold)?;
    let rows: Vec<Vec<String>> = curve.grid.iter().zip(&curve.values).map(|(e, v)| vec![f17(*e), f17(*v)]).collect();
    Ok((resolved, vec![("ids.csv".into(), csv_text(&["energy", "ids"], &rows)?)]))
}

fn cmd_duality(params: Map<String, Value>, seed: u64) -> Result<(Map<String, Value>, Artifacts)> {
    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        lambda: [f64; 3],
        #[serde(rename = "N", default = "d_n")]
        n_half: usize,
        #[serde(default = "d_sixteen")]
        n_phases: usize,
    }
    fn d_n() -> usize {
        500
    }
    fn d_sixteen() -> usize {
        16
    }
    let (a, p, resolved): (_, P, _) = with_alpha(params)?;
    let (m, _) = lambda_model(p.lambda, &a)?;
    let r = duality_checks(p.lambda, &m, p.n_half, p.n_phases, seed)?;
    Ok((resolved, vec![json_artifact("duality.json", &r)?]))
}

fn cmd_cohomology(params: Map<String, Value>) -> Result<(Map<String, Value>, Artifacts)> {
    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        /// The dual hopping `d` of `λ` is the symbol that is solved for.
        lambda: [f64; 3],
        #[serde(default = "d_k")]
        k_out: usize,
        #[serde(default = "d_grid")]
        grid: usize,
    }
    fn d_k() -> usize {
        64
    }
    fn d_grid() -> usize {
        1 << 13
    }
    let (a, p, resolved): (_, P, _) = with_alpha(params)?;
    let cf = a.spec().continued_fraction()?;
    let alpha = cf.frequency().value();
    let d = ehm::dual_symbol(p.lambda, alpha)?.d;
    let rhs = log_ratio_rhs(&d, p.k_out)?;
    let sol = solve_cohomology(&rhs, alpha, p.k_out)?;
    let (f, err) = phase_coboundary(&d, p.k_out)?;
    let out = json!({
        "alpha": alpha,
        "k_out": p.k_out,
        "cohomology_residual": cohomology_residual(&sol.g, &sol.rhs, p.grid),
        "coboundary_residual": err,
        "small_divisor_floor": sol.small_divisor_floor,
        "f": serde_json::to_value(f.to_json()).map_err(|e| Error::Contract(e.to_string()))?,
    });
    Ok((resolved, vec![("cohomology.json".into(), json_text(&out).into_bytes())]))
}

fn cmd_conjugacy(params: Map<String, Value>, seed: u64) -> Result<(Map<String, Value>, Artifacts)> {
    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        /// Parameters of the model whose normalized cocycle is fitted.
        lambda: [f64; 3],
        #[serde(default)]
        energy: Option<f64>,
        /// Spectral quantile used when no energy is given.
        #[serde(default = "d_q")]
        energy_quantile: f64,
        #[serde(rename = "K_B", default = "d_kb")]
        k_b: usize,
        #[serde(default = "d_iter")]
        n_iter: u64,
        #[serde(default = "d_theta0")]
        theta0: f64,
        #[serde(default)]
        regularization: f64,
    }
    fn d_q() -> f64 {
        0.5
    }
    fn d_kb() -> usize {
        64
    }
    fn d_iter() -> u64 {
        2_000_000
    }
    let (a, p, resolved): (_, P, _) = with_alpha(params)?;
    let (m, _) = lambda_model(p.lambda, &a)?;
    let energy = match p.energy {
        Some(e) => e,
        None => {
            if !(0.0..1.0).contains(&p.energy_quantile) {
                return Err(invalid("energy_quantile must lie in [0, 1)"));
            }
            let s = ehm::spectrum_samples(&m, phase_sample(seed, 0), 300, 1000)?;
            s[(p.energy_quantile * s.len() as f64) as usize]
        }
    };
    let co = Cocycle::new(m.clone(), energy, CocycleKind::Normalized);
    let rho = co.rotation_number(p.n_iter, p.theta0)?;
    let cand = fit_conjugacy(&co, rho, p.k_b, 0, p.regularization)?;
    let dual = dual_eigenvector_from_conjugacy(&cand, &co, Row::First).map(|d| d.residual);
    let out = json!({
        "energy": energy,
        "rho": rho,
        "conjugacy": serde_json::to_value(cand.to_json()).map_err(|e| Error::Contract(e.to_string()))?,
        "dual_eigenvector_residual": dual.as_ref().ok(),
        "dual_eigenvector_error": dual.as_ref().err().map(|e| e.to_string()),
    });
    Ok((resolved, vec![("conjugacy.json".into(), json_text(&out).into_bytes())]))
}

fn cmd_gordon(params: Map<String, Value>, seed: u64) -> Result<(Map<String, Value>, Artifacts)> {
    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        lambda: [f64; 3],
        #[serde(default)]
        theta: Option<f64>,
        #[serde(default)]
        energy: f64,
        /// Defaults to the deepest level with `q ≤ q_max`.
        #[serde(default)]
        level: Option<usize>,
        #[serde(default = "d_qmax")]
        q_max: u64,
        #[serde(default = "d_source")]
        source: GordonSource,
    }
    fn d_qmax() -> u64 {
        4001
    }
    fn d_source() -> GordonSource {
        GordonSource::Eigenvectors { margin: 20, count: 8 }
    }
    let (a, p, resolved): (_, P, _) = with_alpha(params)?;
    let (m, cf) = lambda_model(p.lambda, &a)?;
    let level = match p.level {
        Some(l) => l,
        None => (1..cf.q.len())
            .rev()
            .find(|&n| cf.q_u64(n).is_some_and(|q| q >= 2 && q <= p.q_max))
            .ok_or_else(|| invalid("no continued-fraction level with 2 <= q <= q_max"))?,
    };
    let theta = p.theta.unwrap_or_else(|| phase_sample(seed, 0));
    let sing = ehm::singular_phases(p.lambda, m.alpha())?;
    let r = gordon_test(&m, theta, p.energy, &cf, level, &p.source, &sing)?;
    Ok((resolved, vec![json_artifact("gordon.json", &r)?]))
}

fn cmd_transition(params: Map<String, Value>, seed: u64) -> Result<(Map<String, Value>, Artifacts)> {
    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        lambda: [f64; 3],
        #[serde(rename = "N", default = "d_n")]
        n_half: usize,
        #[serde(default)]
        n_phases: Option<usize>,
        #[serde(default)]
        vectors_per_phase: Option<usize>,
        #[serde(default)]
        gordon_phases: Option<usize>,
        #[serde(default)]
        gordon_vectors: Option<usize>,
        #[serde(default)]
        gordon_q_max: Option<u64>,
        #[serde(default)]
        thresholds: Thresholds,
    }
    fn d_n() -> usize {
        2000
    }
    let (a, p, mut resolved): (_, P, _) = with_alpha(params)?;
    let mut cfg = TransitionConfig::new(p.lambda, a.spec(), p.n_half);
    cfg.seed = seed;
    cfg.n_phases = p.n_phases.unwrap_or(cfg.n_phases);
    cfg.vectors_per_phase = p.vectors_per_phase.unwrap_or(cfg.vectors_per_phase);
    cfg.gordon_phases = p.gordon_phases.unwrap_or(cfg.gordon_phases);
    cfg.gordon_vectors = p.gordon_vectors.unwrap_or(cfg.gordon_vectors);
    cfg.gordon_q_max = p.gordon_q_max.unwrap_or(cfg.gordon_q_max);
    resolved.insert("n_phases".into(), cfg.n_phases.into());
    resolved.insert("vectors_per_phase".into(), cfg.vectors_per_phase.into());
    resolved.insert("gordon_phases".into(), cfg.gordon_phases.into());
    resolved.insert("gordon_vectors".into(), cfg.gordon_vectors.into());
    resolved.insert("gordon_q_max".into(), cfg.gordon_q_max.into());
    let r = ehm::transition_experiment(&cfg)?;
    Ok((resolved, vec![json_artifact("transition.json", &r)?]))
}

fn cmd_atlas(params: Map<String, Value>) -> Result<(Map<String, Value>, Artifacts)> {
    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        #[serde(default = "d_l13")]
        lambda1: Vec<f64>,
        #[serde(default = "d_l2")]
        lambda2: Vec<f64>,
        #[serde(default = "d_l13")]
        lambda3: Vec<f64>,
    }
    fn d_l13() -> Vec<f64> {
        (0..=10).map(|i| i as f64 * 0.1).collect()
    }
    fn d_l2() -> Vec<f64> {
        (1..=20).map(|i| i as f64 * 0.1).collect()
    }
    let (p, resolved): (P, _) = typed(params)?;
    let a = crate::diophantine::HighPrecisionReal::golden(64).to_f64();
    let mut rows = Vec::new();
    for &l1 in &p.lambda1 {
        for &l2 in &p.lambda2 {
            for &l3 in &p.lambda3 {
                let l = [l1, l2, l3];
                let pt = ehm::classify(l)?;
                let region = serde_json::to_value(pt.region).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                let case = serde_json::to_value(pt.singular_case).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                let closed = ehm::lyapunov_closed_form(l).ok().map(f17).unwrap_or_default();
                let dual = ehm::dual_symbol(l, a)?;
                let w = dual.winding.map(|w| w.to_string()).unwrap_or_default();
                let strip = if dual.on_circle { 0.0 } else { dual.d.strip };
                rows.push(vec![f17(l1), f17(l2), f17(l3), region, case, closed, w, f17(strip)]);
            }
        }
    }
    let csv = csv_text(&["lambda1", "lambda2", "lambda3", "region", "singular_case", "L_closed_form", "dual_winding", "dual_strip"], &rows)?;
    Ok((resolved, vec![("atlas.csv".into(), csv)]))
}

fn dispatch(cmd: Command, params: Map<String, Value>, seed: u64) -> Result<(Map<String, Value>, Artifacts)> {
    match cmd {
        Command::Beta => cmd_beta(params),
        Command::Winding => cmd_winding(params),
        Command::Lyapunov => cmd_lyapunov(params, seed),
        Command::Ids => cmd_ids(params, seed),
        Command::Rotation => cmd_rotation(params, seed),
        Command::DualityCheck => cmd_duality(params, seed),
        Command::Cohomology => cmd_cohomology(params),
        Command::Conjugacy => cmd_conjugacy(params, seed),
        Command::Gordon => cmd_gordon(params, seed),
        Command::Transition => cmd_transition(params, seed),
        Command::Atlas => cmd_atlas(params),
    }
}

// ---------------------------------------------------------------------------
// runs

fn env_threads() -> Result<Threads> {
    match std::env::var("SPECLAB_THREADS") {
        Ok(s) => Threads::parse(&s),
        Err(_) => Ok(Threads::Auto),
    }
}

fn pool(t: Threads) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Threads::Count(n) = t {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Io(e.to_string()))
}

/// Hash of the inputs that determine a run's results.
pub fn config_hash(cfg: &RunConfig) -> String {
    let key = json!({ "command": cfg.command, "params": cfg.params, "seed": cfg.seed, "version": VERSION });
    sha256_hex(json_text(&key).as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: Value,
    pub config_hash: String,
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
    pub artifacts: Vec<ArtifactEntry>,
}

fn write_manifest(dir: &Path, m: &Manifest) -> Result<()> {
    let v = serde_json::to_value(m).map_err(|e| Error::Contract(e.to_string()))?;
    write_atomic(&dir.join("manifest.json"), json_text(&v).as_bytes())
}

pub fn read_manifest(dir: &Path) -> Option<Manifest> {
    let text = std::fs::read_to_string(dir.join("manifest.json")).ok()?;
    serde_json::from_str(&text).ok()
}

/// Runs one experiment and writes its artifacts and manifest into
/// `cfg.out_dir`. Returns the exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    run_with_manifest(cfg).0
}

pub fn run_with_manifest(cfg: &RunConfig) -> (i32, Manifest) {
    let hash = config_hash(cfg);
    let mut config = serde_json::to_value(cfg).unwrap_or(Value::Null);
    let result = pool(cfg.threads).and_then(|p| p.install(|| dispatch(cfg.command, cfg.params.clone(), cfg.seed)));
    let (code, error, artifacts) = match result {
        Ok((resolved, files)) => {
            config["params"] = Value::Object(resolved);
            let mut entries = Vec::new();
            let mut failure = None;
            for (name, bytes) in &files {
                if let Err(e) = write_atomic(&cfg.out_dir.join(name), bytes) {
                    failure = Some(e);
                    break;
                }
                entries.push(ArtifactEntry { path: name.clone(), sha256: sha256_hex(bytes), bytes: bytes.len() });
            }
            match failure {
                None => (0, None, entries),
                Some(e) => (e.exit_code(), Some(e.to_string()), entries),
            }
        }
        Err(e) => (e.exit_code(), Some(e.to_string()), Vec::new()),
    };
    let m = Manifest {
        version: VERSION.to_string(),
        config,
        config_hash: hash,
        status: if code == 0 { "ok".into() } else { "error".into() },
        exit_code: code,
        error,
        artifacts,
    };
    if let Err(e) = write_manifest(&cfg.out_dir, &m) {
        eprintln!("speclab: cannot write manifest: {e}");
        return (if code == 0 { e.exit_code() } else { code }, m);
    }
    (code, m)
}

/// `v1,v2,...` or `lin:a:b:n`.
pub fn parse_axis(spec: &str) -> Result<(String, Vec<Value>)> {
    let (key, vals) = spec.split_once('=').ok_or_else(|| invalid(format!("axis {spec:?} is not key=values")))?;
    let key = key.trim().replace('-', "_");
    let values = if let Some(rest) = vals.strip_prefix("lin:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let bad = || invalid(format!("bad linear axis {vals:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let a: f64 = parts[0].parse().map_err(|_| bad())?;
        let b: f64 = parts[1].parse().map_err(|_| bad())?;
        let n: usize = parts[2].parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        (0..n).map(|i| json!(if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 })).collect()
    } else {
        vals.split(';').map(parse_value).collect()
    };
    Ok((key, values))
}

/// Seed of sweep point `i`, a splitmix64 step away from the template seed.
pub fn derived_seed(seed: u64, i: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_f64() => f17(n.as_f64().unwrap_or(f64::NAN)),
        other => other.to_string(),
    }
}

/// One sub-run per grid point under `out_dir/runs/<hash>`, an index CSV
/// joining axis values to artifacts, and a top-level manifest. Points whose
/// manifest already records success under the same hash are skipped.
pub fn sweep(sc: &SweepConfig) -> i32 {
    let out = &sc.template.out_dir;
    let mut grid: Vec<Vec<Value>> = vec![Vec::new()];
    for (_, vals) in &sc.axes {
        grid = grid.iter().flat_map(|p| vals.iter().map(move |v| [p.clone(), vec![v.clone()]].concat())).collect();
    }
    if sc.axes.is_empty() || grid.is_empty() {
        eprintln!("speclab: sweep needs at least one non-empty axis");
        return 2;
    }
    let mut rows = Vec::new();
    let (mut ok, mut contract, mut first_err) = (0usize, false, None);
    let mut skipped = 0usize;
    for (i, point) in grid.iter().enumerate() {
        let mut cfg = sc.template.clone();
        cfg.seed = derived_seed(sc.template.seed, i as u64);
        for ((k, _), v) in sc.axes.iter().zip(point) {
            cfg.params.insert(k.clone(), v.clone());
        }
        let hash = config_hash(&cfg);
        let rel = format!("runs/{}", &hash[..16]);
        cfg.out_dir = out.join(&rel);
        let m = match read_manifest(&cfg.out_dir) {
            Some(m) if m.status == "ok" && m.config_hash == hash && artifacts_intact(&cfg.out_dir, &m) => {
                skipped += 1;
                m
            }
            _ => run_with_manifest(&cfg).1,
        };
        match m.exit_code {
            0 => ok += 1,
            3 => contract = true,
            c => {
                first_err.get_or_insert(c);
            }
        }
        let mut row: Vec<String> = vec![i.to_string()];
        row.extend(point.iter().map(cell));
        row.push(cfg.seed.to_string());
        row.push(m.status.clone());
        row.push(m.exit_code.to_string());
        row.push(format!("{rel}/manifest.json"));
        row.push(m.artifacts.iter().map(|a| format!("{rel}/{}", a.path)).collect::<Vec<_>>().join(";"));
        rows.push(row);
    }
    let mut header: Vec<&str> = vec!["point"];
    header.extend(sc.axes.iter().map(|(k, _)| k.as_str()));
    header.extend(["seed", "status", "exit_code", "manifest", "artifacts"]);
    let code = if ok >= 1 && !contract {
        0
    } else if contract {
        3
    } else {
        first_err.unwrap_or(2)
    };
    let index = match csv_text(&header, &rows) {
        Ok(b) => b,
        Err(e) => return e.exit_code(),
    };
    if let Err(e) = write_atomic(&out.join("index.csv"), &index) {
        eprintln!("speclab: {e}");
        return e.exit_code();
    }
    let m = Manifest {
        version: VERSION.into(),
        config: json!({ "sweep": serde_json::to_value(sc).unwrap_or(Value::Null), "points": grid.len(), "skipped": skipped }),
        config_hash: sha256_hex(json_text(&serde_json::to_value(sc).unwrap_or(Value::Null)).as_bytes()),
        status: if code == 0 { "ok".into() } else { "error".into() },
        exit_code: code,
        error: None,
        artifacts: vec![ArtifactEntry { path: "index.csv".into(), sha256: sha256_hex(&index), bytes: index.len() }],
    };
    if let Err(e) = write_manifest(out, &m) {
        eprintln!("speclab: {e}");
        return e.exit_code();
    }
    code
}

fn artifacts_intact(dir: &Path, m: &Manifest) -> bool {
    m.artifacts
        .iter()
        .all(|a| std::fs::read(dir.join(&a.path)).is_ok_and(|b| sha256_hex(&b) == a.sha256))
}

// ---------------------------------------------------------------------------
// argument handling

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliCommand {
    Beta,
    Winding,
    Lyapunov,
    Ids,
    Rotation,
    DualityCheck,
    Cohomology,
    Conjugacy,
    Gordon,
    Transition,
    Atlas,
    Sweep,
}

/// Numerical laboratory for quasiperiodic Jacobi operators.
///
/// Command parameters are passed as `--key value` after the command, for
/// example `speclab transition --lambda 0.1,0.5,0.2 --alpha golden --N 2000`.
#[derive(Debug, Parser)]
#[command(name = "speclab", version)]
struct Cli {
    command: CliCommand,
    /// JSON config; flags override its parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker count or `auto`; falls back to SPECLAB_THREADS.
    #[arg(long)]
    threads: Option<String>,
    /// Sweep axis `key=v1;v2;...` or `key=lin:a:b:n` (repeatable).
    #[arg(long = "axis")]
    axes: Vec<String>,
    /// Command swept over when no config is given.
    #[arg(long)]
    of: Option<Command>,
}

impl CliCommand {
    fn experiment(self) -> Option<Command> {
        Some(match self {
            CliCommand::Beta => Command::Beta,
            CliCommand::Winding => Command::Winding,
            CliCommand::Lyapunov => Command::Lyapunov,
            CliCommand::Ids => Command::Ids,
            CliCommand::Rotation => Command::Rotation,
            CliCommand::DualityCheck => Command::DualityCheck,
            CliCommand::Cohomology => Command::Cohomology,
            CliCommand::Conjugacy => Command::Conjugacy,
            CliCommand::Gordon => Command::Gordon,
            CliCommand::Transition => Command::Transition,
            CliCommand::Atlas => Command::Atlas,
            CliCommand::Sweep => return None,
        })
    }
}

const RUNNER_FLAGS: [&str; 6] = ["config", "out", "seed", "threads", "axis", "of"];

/// JSON literal if it parses, a numeric list if comma-separated numbers,
/// otherwise the raw string.
pub fn parse_value(s: &str) -> Value {
    if let Ok(v) = serde_json::from_str::<Value>(s) {
        return v;
    }
    if s.contains(',') {
        let parts: Option<Vec<Value>> = s
            .split(',')
            .map(|p| serde_json::from_str::<Value>(p.trim()).ok().filter(Value::is_number))
            .collect();
        if let Some(p) = parts {
            return Value::Array(p);
        }
    }
    Value::String(s.to_string())
}

/// Splits argv into the runner's own flags and command parameters.
fn split_args(args: &[String]) -> Result<(Vec<String>, Map<String, Value>)> {
    let mut runner = vec![args.first().cloned().unwrap_or_else(|| "speclab".into())];
    let mut params = Map::new();
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        match a.strip_prefix("--") {
            Some(flag) if !matches!(flag, "help" | "version") => {
                let (key, inline) = match flag.split_once('=') {
                    Some((k, v)) => (k.to_string(), Some(v.to_string())),
                    None => (flag.to_string(), None),
                };
                let value = match inline {
                    Some(v) => v,
                    None => {
                        i += 1;
                        args.get(i).cloned().ok_or_else(|| invalid(format!("--{key} needs a value")))?
                    }
                };
                if RUNNER_FLAGS.contains(&key.as_str()) {
                    runner.push(format!("--{key}"));
                    runner.push(value);
                } else {
                    params.insert(key.replace('-', "_"), parse_value(&value));
                }
            }
            _ => runner.push(a.clone()),
        }
        i += 1;
    }
    Ok((runner, params))
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Entry point shared by the binary and the tests. Returns the exit code.
pub fn run_args(args: &[String]) -> i32 {
    match run_args_inner(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("speclab: {e}");
            e.exit_code()
        }
    }
}

fn run_args_inner(args: &[String]) -> Result<i32> {
    let (runner, params) = split_args(args)?;
    let cli = match Cli::try_parse_from(&runner) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return Ok(code);
        }
    };
    let threads = match &cli.threads {
        Some(t) => Some(Threads::parse(t)?),
        None => None,
    };
    if cli.command == CliCommand::Sweep {
        let mut sc: SweepConfig = match &cli.config {
            Some(p) => load_json(p)?,
            None => {
                let command = cli.of.ok_or_else(|| invalid("sweep needs --config or --of"))?;
                SweepConfig {
                    template: RunConfig { command, params: Map::new(), seed: 0, out_dir: default_out(), threads: Threads::Auto },
                    axes: Vec::new(),
                }
            }
        };
        sc.template.params.extend(params);
        for a in &cli.axes {
            sc.axes.push(parse_axis(a)?);
        }
        apply_runner_flags(&mut sc.template, &cli, threads)?;
        return Ok(sweep(&sc));
    }
    let command = cli.command.experiment().ok_or_else(|| invalid("not an experiment"))?;
    let mut cfg = match &cli.config {
        Some(p) => {
            let c: RunConfig = load_json(p)?;
            if c.command != command {
                return Err(invalid(format!("config is for {}, not {}", c.command.name(), command.name())));
            }
            c
        }
        None => RunConfig { command, params: Map::new(), seed: 0, out_dir: default_out(), threads: Threads::Auto },
    };
    cfg.params.extend(params);
    apply_runner_flags(&mut cfg, &cli, threads)?;
    let code = run(&cfg);
    if code == 0 {
        println!("{}", cfg.out_dir.join("manifest.json").display());
    } else if let Some(m) = read_manifest(&cfg.out_dir) {
        eprintln!("speclab: {}", m.error.unwrap_or_default());
    }
    Ok(code)
}

fn apply_runner_flags(cfg: &mut RunConfig, cli: &Cli, threads: Option<Threads>) -> Result<()> {
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.threads = match threads {
        Some(t) => t,
        None if cfg.threads != Threads::Auto => cfg.threads,
        None => env_threads()?,
    };
    Ok(())
}
