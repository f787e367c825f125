//! Extended Harper's model: parameter regions, the duality map, the
//! closed-form Lyapunov exponent, the dual hopping symbol and the
//! localization experiment driver.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{phase_sample, JacobiModel};
use crate::diophantine::{beta, default_window, expand, synth_alpha_with_prefix, ContinuedFraction, HighPrecisionReal};
use crate::eigen::eigenvectors_with;
use crate::error::{Error, Result};
use crate::operator::{build, decay_rate_of, eigensolve, gordon_test, ipr_of, GordonSource, DEFAULT_BOUNDARY_THRESHOLD};
use crate::symbol::{TorusSymbol, C64};

/// Equalities closer than this count as region boundaries.
pub const REGION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    I,
    II,
    III,
    #[serde(rename = "boundary")]
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularCase {
    Nonsingular,
    /// `λ₁ = λ₃ ≥ λ₂/2`: zeros of `c` at `±arccos(−λ₂/2λ₁)/2π − α/2`.
    TwoZeros,
    /// `λ₁ ≠ λ₃`, `λ₁ + λ₃ = λ₂`: one zero at `1/2 − α/2`.
    OneZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub lambda: [f64; 3],
    pub region: Region,
    pub singular_case: SingularCase,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REGION_TOL * a.abs().max(b.abs()).max(1.0)
}

fn check(l: [f64; 3]) -> Result<()> {
    if l.iter().any(|x| !x.is_finite() || *x < 0.0) || !(l[1] > 0.0) {
        return Err(Error::InvalidParameters("lambda needs nonnegative entries and lambda2 > 0".into()));
    }
    Ok(())
}

pub fn classify(l: [f64; 3]) -> Result<PhasePoint> {
    check(l)?;
    let s = l[0] + l[2];
    let l2 = l[1];
    let region = if close(s, 1.0) || close(l2, 1.0) || close(s, l2) {
        Region::Boundary
    } else if s.max(l2) < 1.0 {
        Region::I
    } else if s.max(1.0) < l2 {
        Region::II
    } else {
        Region::III
    };
    let singular_case = if close(l[0], l[2]) && (l[0] > l2 / 2.0 || close(l[0], l2 / 2.0)) {
        SingularCase::TwoZeros
    } else if !close(l[0], l[2]) && close(s, l2) {
        SingularCase::OneZero
    } else {
        SingularCase::Nonsingular
    };
    Ok(PhasePoint { lambda: l, region, singular_case })
}

/// `σ(λ) = (λ₃/λ₂, 1/λ₂, λ₁/λ₂)`.
pub fn sigma(l: [f64; 3]) -> [f64; 3] {
    [l[2] / l[1], 1.0 / l[1], l[0] / l[1]]
}

/// Zeros of `c` on the torus, following the singular case.
pub fn singular_phases(l: [f64; 3], alpha: f64) -> Result<Vec<f64>> {
    let p = classify(l)?;
    let wrap = |x: f64| x - x.floor();
    Ok(match p.singular_case {
        SingularCase::Nonsingular => Vec::new(),
        SingularCase::OneZero => vec![wrap(0.5 - alpha / 2.0)],
        SingularCase::TwoZeros => {
            let t = (-l[1] / (2.0 * l[0])).clamp(-1.0, 1.0).acos() / (2.0 * PI);
            if t == 0.5 {
                vec![wrap(0.5 - alpha / 2.0)]
            } else {
                vec![wrap(t - alpha / 2.0), wrap(-t - alpha / 2.0)]
            }
        }
    })
}

/// `L(λ)` on region I.
pub fn lyapunov_closed_form(l: [f64; 3]) -> Result<f64> {
    if classify(l)?.region != Region::I {
        return Err(Error::NotRegionOne);
    }
    let m = (l[0] + l[2]).max(l[1]);
    let p = 4.0 * l[0] * l[2];
    Ok(((1.0 + (1.0 - p).sqrt()) / (m + (m * m - p).sqrt())).ln())
}

/// `c(θ) = λ₁e^{−2πi(θ+α/2)} + λ₂ + λ₃e^{2πi(θ+α/2)}`.
pub fn hopping(l: [f64; 3], alpha: f64) -> TorusSymbol {
    let r = |x: f64| C64::new(x, 0.0);
    TorusSymbol::from_modes(&[(-1, r(l[0])), (0, r(l[1])), (1, r(l[2]))], true, alpha, f64::INFINITY)
}

/// EHM with `v = 2cos2πθ`; the hopping strip is certified from its roots.
pub fn model(l: [f64; 3], cf: ContinuedFraction) -> Result<JacobiModel> {
    check(l)?;
    let a = cf.frequency().value();
    let c = hopping(l, a);
    let c = match root_strip(&c)? {
        Some(h) => c.with_strip(h),
        None => c,
    };
    JacobiModel::new(c, TorusSymbol::cosine(a), cf)
}

/// Largest `h` with no zero of the symbol in `|Im θ| < h`, if finite.
fn root_strip(c: &TorusSymbol) -> Result<Option<f64>> {
    let z = c.zeros_on_torus()?;
    let h = z
        .roots
        .iter()
        .map(|r| r.norm().ln().abs() / (2.0 * PI))
        .fold(f64::INFINITY, f64::min);
    Ok(if h.is_finite() { Some(h) } else { None })
}

#[derive(Debug, Clone)]
pub struct DualSymbol {
    pub d: TorusSymbol,
    pub roots: Vec<C64>,
    pub on_circle: bool,
    /// `None` when `d` vanishes on the torus.
    pub winding: Option<i64>,
}

/// `d = c_{σ(λ)}`, the hopping of the dual model.
pub fn dual_symbol(l: [f64; 3], alpha: f64) -> Result<DualSymbol> {
    check(l)?;
    let d = hopping(sigma(l), alpha);
    let z = d.zeros_on_torus()?;
    let on_circle = !z.on_circle.is_empty();
    let winding = if on_circle { None } else { Some(d.winding(4096)?) };
    let d = match root_strip(&d)? {
        Some(h) => d.with_strip(h),
        None => d,
    };
    Ok(DualSymbol { d, roots: z.roots, on_circle, winding })
}

/// Eigenvalues of the truncation at `θ` sampled at `count` evenly spaced
/// quantiles of the interior spectrum.
pub fn spectrum_samples(m: &JacobiModel, theta: f64, n_half: usize, count: usize) -> Result<Vec<f64>> {
    let sd = eigensolve(&build(m, theta, n_half), false)?;
    let inner: Vec<f64> = sd.interior(DEFAULT_BOUNDARY_THRESHOLD).into_iter().map(|i| sd.eigenvalues[i]).collect();
    if inner.is_empty() {
        return Err(Error::Contract("no interior eigenvalues".into()));
    }
    Ok((0..count)
        .map(|j| inner[((j as f64 + 0.5) / count as f64 * inner.len() as f64) as usize])
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaSpec {
    Golden { depth: usize },
    /// Quotients grown so that `q_{n+1} ≈ e^{β q_n}` after `prefix`.
    Synthesized { beta: f64, prefix: Vec<u64>, levels: usize },
    /// Any value accepted by [`HighPrecisionReal::parse`].
    Value { value: String, depth: usize },
}

impl AlphaSpec {
    pub fn continued_fraction(&self) -> Result<ContinuedFraction> {
        match self {
            AlphaSpec::Golden { depth } => expand(&HighPrecisionReal::golden(HighPrecisionReal::DEFAULT_BITS), *depth),
            AlphaSpec::Synthesized { beta, prefix, levels } => synth_alpha_with_prefix(prefix, *beta, *levels),
            AlphaSpec::Value { value, depth } => expand(&HighPrecisionReal::parse(value)?, *depth),
        }
    }
}

/// Experiment conventions; every report echoes them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub decay_band: f64,
    pub r2_min: f64,
    pub gordon_pass: f64,
    /// ipr cutoff is `ipr_factor / (2N+1)`.
    pub ipr_factor: f64,
    pub min_q: u64,
    pub beta_gap: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { decay_band: 0.2, r2_min: 0.9, gordon_pass: 0.9, ipr_factor: 10.0, min_q: 100, beta_gap: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionConfig {
    pub lambda: [f64; 3],
    pub alpha: AlphaSpec,
    #[serde(rename = "N")]
    pub n_half: usize,
    pub n_phases: usize,
    pub seed: u64,
    /// Eigenvectors per phase used for decay and ipr statistics.
    pub vectors_per_phase: usize,
    /// Phases used for each Gordon level.
    pub gordon_phases: usize,
    /// Eigenvectors per phase tested at each Gordon level.
    pub gordon_vectors: usize,
    /// Largest denominator treated as reachable.
    pub gordon_q_max: u64,
    #[serde(default)]
    pub thresholds: Thresholds,
}

impl TransitionConfig {
    pub fn new(lambda: [f64; 3], alpha: AlphaSpec, n_half: usize) -> Self {
        TransitionConfig {
            lambda,
            alpha,
            n_half,
            n_phases: 32,
            seed: 0,
            vectors_per_phase: 16,
            gordon_phases: 4,
            gordon_vectors: 8,
            gordon_q_max: 2 * n_half as u64 + 1,
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    PpSide,
    ScSide,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    pub iqr: f64,
    pub count: usize,
}

impl Spread {
    pub fn of(v: &[f64]) -> Spread {
        if v.is_empty() {
            return Spread { median: f64::NAN, iqr: f64::NAN, count: 0 };
        }
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Spread { median: quantile(&s, 0.5), iqr: quantile(&s, 0.75) - quantile(&s, 0.25), count: s.len() }
    }
}

/// Linear-interpolated quantile of sorted data.
fn quantile(s: &[f64], p: f64) -> f64 {
    let x = p * (s.len() - 1) as f64;
    let i = x.floor() as usize;
    let f = x - i as f64;
    if i + 1 < s.len() { s[i] * (1.0 - f) + s[i + 1] * f } else { s[i] }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub median: f64,
    pub iqr: f64,
    pub r2_median: f64,
    pub count: usize,
    /// Vectors whose peak sat too close to the window edge.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GordonLevel {
    pub level: usize,
    pub q: u64,
    pub pass_rate: f64,
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seeds: Vec<u64>,
    #[serde(rename = "N")]
    pub n_half: usize,
    pub versions: std::collections::BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub lambda: [f64; 3],
    pub region: Region,
    #[serde(rename = "L_lambda")]
    pub l_lambda: f64,
    pub beta: f64,
    pub verdict: Verdict,
    pub decay: DecaySummary,
    pub ipr: Spread,
    /// Summary over all tested levels; `level` and `q` are the largest one.
    pub gordon: GordonLevel,
    pub gordon_levels: Vec<GordonLevel>,
    pub q_levels: Vec<String>,
    pub thresholds: Thresholds,
    pub provenance: Provenance,
}

struct PhaseStats {
    decay: Vec<(f64, f64)>,
    ipr: Vec<f64>,
    skipped: usize,
}

fn phase_stats(m: &JacobiModel, theta: f64, n_half: usize, per_phase: usize) -> Result<PhaseStats> {
    let op = build(m, theta, n_half);
    let sd = eigensolve(&op, false)?;
    let inner = sd.interior(DEFAULT_BOUNDARY_THRESHOLD);
    let mut out = PhaseStats { decay: Vec::new(), ipr: Vec::new(), skipped: 0 };
    if inner.is_empty() {
        return Ok(out);
    }
    let picks: Vec<usize> = (0..per_phase)
        .map(|j| inner[((j as f64 + 0.5) / per_phase as f64 * inner.len() as f64) as usize])
        .collect();
    let mut err = None;
    eigenvectors_with(&op.matrix, &sd.eigenvalues, &picks, |_, v| {
        out.ipr.push(ipr_of(&v));
        match decay_rate_of(&v) {
            Ok(d) => out.decay.push(d),
            Err(Error::PeakNearBoundary { .. }) => out.skipped += 1,
            Err(e) => err = Some(e),
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Runs the localization experiment on one side of the transition.
pub fn transition_experiment(cfg: &TransitionConfig) -> Result<TransitionReport> {
    let point = classify(cfg.lambda)?;
    if point.region != Region::I {
        return Err(Error::NotRegionOne);
    }
    if cfg.n_half < 8 || cfg.n_phases == 0 || cfg.vectors_per_phase == 0 {
        return Err(Error::InvalidParameters("N, n_phases and vectors_per_phase must be positive".into()));
    }
    let l = lyapunov_closed_form(cfg.lambda)?;
    let cf = cfg.alpha.continued_fraction()?;
    let b = beta(&cf, default_window(&cf).min(cf.q.len().saturating_sub(2)).max(1))?.value;
    let m = model(cfg.lambda, cf.clone())?;
    let sing = singular_phases(cfg.lambda, m.alpha())?;
    let phases: Vec<f64> = (0..cfg.n_phases as u64).map(|i| phase_sample(cfg.seed, i)).collect();

    let stats: Vec<PhaseStats> = phases
        .par_iter()
        .map(|&th| phase_stats(&m, th, cfg.n_half, cfg.vectors_per_phase))
        .collect::<Result<_>>()?;
    let rates: Vec<f64> = stats.iter().flat_map(|s| s.decay.iter().map(|d| d.0)).collect();
    let r2s: Vec<f64> = stats.iter().flat_map(|s| s.decay.iter().map(|d| d.1)).collect();
    let iprs: Vec<f64> = stats.iter().flat_map(|s| s.ipr.iter().copied()).collect();
    let ds = Spread::of(&rates);
    let decay = DecaySummary {
        median: ds.median,
        iqr: ds.iqr,
        r2_median: Spread::of(&r2s).median,
        count: ds.count,
        skipped: stats.iter().map(|s| s.skipped).sum(),
    };
    let ipr = Spread::of(&iprs);

    // two largest reachable levels
    let mut levels: Vec<(usize, u64)> = (1..cf.q.len())
        .filter_map(|n| cf.q_u64(n).map(|q| (n, q)))
        .filter(|&(_, q)| q >= 2 && q <= cfg.gordon_q_max)
        .collect();
    levels.dedup_by_key(|x| x.1);
    let levels: Vec<(usize, u64)> = levels.into_iter().rev().take(2).collect();
    let source = GordonSource::Eigenvectors { margin: 20, count: cfg.gordon_vectors };
    let gphases = &phases[..cfg.gordon_phases.min(phases.len())];
    let mut gordon_levels = Vec::new();
    for &(level, q) in &levels {
        let reports: Vec<_> = gphases
            .par_iter()
            .map(|&th| gordon_test(&m, th, 0.0, &cf, level, &source, &sing))
            .collect::<Result<_>>()?;
        let total: usize = reports.iter().map(|r| r.candidates.len()).sum();
        let pass: usize = reports.iter().map(|r| r.candidates.iter().filter(|c| c.max_at_least_quarter).count()).sum();
        gordon_levels.push(GordonLevel { level, q, pass_rate: pass as f64 / total.max(1) as f64, candidates: total });
    }
    let gordon = match gordon_levels.first() {
        Some(top) => {
            let total: usize = gordon_levels.iter().map(|g| g.candidates).sum();
            let pass: f64 = gordon_levels.iter().map(|g| g.pass_rate * g.candidates as f64).sum();
            GordonLevel { level: top.level, q: top.q, pass_rate: pass / total.max(1) as f64, candidates: total }
        }
        None => GordonLevel { level: 0, q: 0, pass_rate: f64::NAN, candidates: 0 },
    };

    let t = &cfg.thresholds;
    let pp = (decay.median - l).abs() <= t.decay_band * l && decay.r2_median > t.r2_min;
    let sc = gordon.pass_rate > t.gordon_pass && ipr.median < t.ipr_factor / (2 * cfg.n_half + 1) as f64;
    let verdict = if gordon.q < t.min_q || (b - l).abs() < t.beta_gap {
        Verdict::Inconclusive
    } else if pp && !sc {
        Verdict::PpSide
    } else if sc && !pp {
        Verdict::ScSide
    } else {
        Verdict::Inconclusive
    };

    let mut versions = std::collections::BTreeMap::new();
    versions.insert("speclab".to_string(), env!("CARGO_PKG_VERSION").to_string());
    Ok(TransitionReport {
        lambda: cfg.lambda,
        region: point.region,
        l_lambda: l,
        beta: b,
        verdict,
        decay,
        ipr,
        gordon,
        gordon_levels,
        q_levels: cf.q.iter().map(|q| q.to_string()).collect(),
        thresholds: t.clone(),
        provenance: Provenance { seeds: vec![cfg.seed], n_half: cfg.n_half, versions },
    })
}
