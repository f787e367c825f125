//! Finite Dirichlet truncations, spectra, integrated density of states and
//! localisation diagnostics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{phase_sample, Cocycle, CocycleKind, JacobiModel};
use crate::diophantine::{delta_c, default_window, ContinuedFraction};
use crate::eigen::{eigenvalues, eigenvectors_with, HermBand};
use crate::error::{Error, Result};
use crate::symbol::{e2pi_re, C64};

/// Fraction of sites, split evenly between the two ends, regarded as boundary.
pub const BOUNDARY_FRACTION: f64 = 0.05;

/// Default cut on boundary mass above which a state is discarded.
pub const DEFAULT_BOUNDARY_THRESHOLD: f64 = 0.25;

/// Hermitian band truncation on sites `−N..=N`.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    pub matrix: HermBand,
    pub half_width: usize,
    pub phase: f64,
}

impl TruncatedOperator {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Matrix index of lattice site `n`.
    pub fn index(&self, n: i64) -> usize {
        (n + self.half_width as i64) as usize
    }
}

/// `H_c(θ)` on `−N..=N`: `(n, n+1) ↦ c(θ+nα)`, `(n, n) ↦ v(θ+nα)`.
pub fn build(model: &JacobiModel, theta: f64, n_half: usize) -> TruncatedOperator {
    let n = 2 * n_half + 1;
    let mut m = HermBand::new(n, 1);
    for i in 0..n {
        let site = i as i64 - n_half as i64;
        let th = model.freq.orbit(theta, site);
        m.set(i, i, model.v.eval_real(th));
        if i + 1 < n {
            m.set(i, i + 1, model.c.eval_real(th));
        }
    }
    TruncatedOperator { matrix: m, half_width: n_half, phase: theta }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Vectors {
    None,
    All,
    Indices(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: BTreeMap<usize, Vec<C64>>,
    /// Mass in the boundary sites per eigenvector; empty when not computed.
    pub boundary_mass: Vec<f64>,
    pub half_width: usize,
    pub phase: f64,
}

impl SpectralData {
    pub fn vector(&self, index: usize) -> Result<&[C64]> {
        self.eigenvectors
            .get(&index)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::InvalidParameters(format!("eigenvector {index} was not computed")))
    }

    /// Indices whose boundary mass is at most `threshold`.
    pub fn interior(&self, threshold: f64) -> Vec<usize> {
        (0..self.eigenvalues.len())
            .filter(|&i| self.boundary_mass.get(i).is_none_or(|&m| m <= threshold))
            .collect()
    }

    /// One row per eigenvalue: `index,eigenvalue,boundary_mass`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,eigenvalue,boundary_mass\r\n");
        for (i, e) in self.eigenvalues.iter().enumerate() {
            let bm = self.boundary_mass.get(i).map_or(String::new(), |m| format!("{m:.17e}"));
            let _ = write!(s, "{i},{e:.17e},{bm}\r\n");
        }
        s
    }
}

fn boundary_sites(n: usize) -> usize {
    ((BOUNDARY_FRACTION / 2.0) * n as f64).ceil() as usize
}

pub fn boundary_mass_of(v: &[C64]) -> f64 {
    let b = boundary_sites(v.len());
    let n = v.len();
    v[..b].iter().chain(&v[n - b..]).map(|z| z.norm_sqr()).sum()
}

/// Eigenvalues, optionally eigenvectors, and boundary masses when
/// `boundary_mass` is set (this needs every eigenvector, which is computed
/// and dropped on the fly).
pub fn eigensolve_with(op: &TruncatedOperator, vectors: Vectors, boundary_mass: bool) -> Result<SpectralData> {
    let vals = eigenvalues(&op.matrix)?;
    let n = vals.len();
    let keep: Box<dyn Fn(usize) -> bool> = match &vectors {
        Vectors::None => Box::new(|_| false),
        Vectors::All => Box::new(|_| true),
        Vectors::Indices(ix) => {
            let set: std::collections::HashSet<usize> = ix.iter().copied().collect();
            Box::new(move |i| set.contains(&i))
        }
    };
    let wanted: Vec<usize> = if boundary_mass {
        (0..n).collect()
    } else {
        (0..n).filter(|&i| keep(i)).collect()
    };
    let mut masses = if boundary_mass { vec![0.0; n] } else { Vec::new() };
    let mut store = BTreeMap::new();
    if !wanted.is_empty() {
        eigenvectors_with(&op.matrix, &vals, &wanted, |i, v| {
            if boundary_mass {
                masses[i] = boundary_mass_of(&v);
            }
            if keep(i) {
                store.insert(i, v);
            }
        })?;
    }
    Ok(SpectralData { eigenvalues: vals, eigenvectors: store, boundary_mass: masses, half_width: op.half_width, phase: op.phase })
}

/// All eigenvalues and boundary masses; every eigenvector when `want_vectors`.
pub fn eigensolve(op: &TruncatedOperator, want_vectors: bool) -> Result<SpectralData> {
    eigensolve_with(op, if want_vectors { Vectors::All } else { Vectors::None }, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdsCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub n_phases: usize,
    pub half_width: usize,
}

impl IdsCurve {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("energy,ids\r\n");
        for (e, v) in self.grid.iter().zip(&self.values) {
            let _ = write!(s, "{e:.17e},{v:.17e}\r\n");
        }
        s
    }
}

/// Interior eigenvalues for each phase in `phases`, using `builder` to make
/// the truncation.
pub fn interior_spectra<F>(builder: F, phases: &[f64], threshold: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64) -> TruncatedOperator + Sync,
{
    phases
        .par_iter()
        .map(|&ph| {
            let sd = eigensolve(&builder(ph), false)?;
            Ok(sd.interior(threshold).into_iter().map(|i| sd.eigenvalues[i]).collect())
        })
        .collect()
}

/// Phase-averaged fraction of interior eigenvalues below each grid energy.
pub fn ids_from_spectra(spectra: &[Vec<f64>], grid: &[f64], half_width: usize) -> IdsCurve {
    let values = grid
        .iter()
        .map(|&e| {
            let s: f64 = spectra
                .iter()
                .map(|sp| {
                    if sp.is_empty() {
                        0.0
                    } else {
                        sp.partition_point(|&x| x < e) as f64 / sp.len() as f64
                    }
                })
                .sum();
            s / spectra.len() as f64
        })
        .collect();
    IdsCurve { grid: grid.to_vec(), values, n_phases: spectra.len(), half_width }
}

/// Integrated density of states of `H_c(θ)` averaged over random phases.
pub fn ids(model: &JacobiModel, grid: &[f64], n_half: usize, n_phases: usize, seed: u64) -> Result<IdsCurve> {
    ids_with_threshold(model, grid, n_half, n_phases, seed, DEFAULT_BOUNDARY_THRESHOLD)
}

pub fn ids_with_threshold(
    model: &JacobiModel,
    grid: &[f64],
    n_half: usize,
    n_phases: usize,
    seed: u64,
    threshold: f64,
) -> Result<IdsCurve> {
    if n_phases == 0 || n_half == 0 {
        return Err(Error::InvalidParameters("ids needs N >= 1 and at least one phase".into()));
    }
    let phases: Vec<f64> = (0..n_phases as u64).map(|i| phase_sample(seed, i)).collect();
    let spectra = interior_spectra(|th| build(model, th, n_half), &phases, threshold)?;
    Ok(ids_from_spectra(&spectra, grid, n_half))
}

/// Decay-rate fit of `ln|u_n|` against `|n − n_peak|`.
pub fn decay_rate(sd: &SpectralData, index: usize) -> Result<(f64, f64)> {
    decay_rate_of(sd.vector(index)?)
}

/// Fit on a raw vector whose middle entry is site 0.
///
/// The decay range on each side runs from the peak to the first site where
/// `|u|` falls below `10⁻¹³·|u_peak|` (or the edge); the fit uses distances
/// in the middle 60% of the shorter range.
pub fn decay_rate_of(u: &[C64]) -> Result<(f64, f64)> {
    let n = u.len();
    let half = (n / 2) as i64;
    let (peak, _) = u
        .iter()
        .enumerate()
        .map(|(i, z)| (i, z.norm()))
        .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
    let site = peak as i64 - half;
    if site.abs() > half / 2 {
        return Err(Error::PeakNearBoundary { peak: site });
    }
    let top = u[peak].norm();
    let floor = 1e-13 * top;
    let reach = |dir: i64| -> usize {
        let mut d = 1usize;
        loop {
            let i = peak as i64 + dir * d as i64;
            if i < 0 || i >= n as i64 || u[i as usize].norm() < floor {
                return d - 1;
            }
            d += 1;
        }
    };
    let range = reach(-1).min(reach(1));
    let lo = (0.2 * range as f64).ceil() as usize;
    let hi = (0.8 * range as f64).floor() as usize;
    let mut pts = Vec::new();
    for d in lo.max(1)..=hi {
        for i in [peak as i64 - d as i64, peak as i64 + d as i64] {
            let a = u[i as usize].norm();
            if a > 0.0 {
                pts.push((d as f64, a.ln()));
            }
        }
    }
    if pts.len() < 3 {
        return Ok((0.0, 0.0));
    }
    let (slope, r2) = linear_fit(&pts);
    Ok((-slope, r2))
}

/// Least-squares slope and coefficient of determination.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

/// `Σ|u_n|⁴` of the normalised vector.
pub fn ipr(sd: &SpectralData, index: usize) -> Result<f64> {
    Ok(ipr_of(sd.vector(index)?))
}

pub fn ipr_of(u: &[C64]) -> f64 {
    let n2: f64 = u.iter().map(|z| z.norm_sqr()).sum();
    u.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() / (n2 * n2)
}

/// Where the Gordon test takes its candidate solutions from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GordonSource {
    /// Eigenvectors of the truncation on `[−2q−margin, 2q+margin]` with the
    /// largest weight on sites `0, −1`.
    Eigenvectors { margin: usize, count: usize },
    /// Solutions of the recurrence at the given energy with
    /// `(u_0, u_{−1}) = (cos φ, sin φ)` for `φ` on a uniform grid of `[0, π)`.
    Transfer { n_phi: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GordonCandidate {
    pub energy: f64,
    pub label: String,
    /// Natural logs of `‖(u_q,u_{q−1})‖`, `‖(u_{2q},u_{2q−1})‖`, `‖(u_{−q},u_{−q−1})‖`.
    pub log_norm_q: f64,
    pub log_norm_2q: f64,
    pub log_norm_minus_q: f64,
    pub log_abs_trace: f64,
    pub max_at_least_quarter: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JyCheck {
    pub log_product: f64,
    pub log_bound: f64,
    pub delta_c: f64,
    pub epsilon: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GordonReport {
    pub q: u64,
    pub theta: f64,
    pub energy: f64,
    pub log_abs_trace: f64,
    pub abs_det: f64,
    pub expected_abs_det: f64,
    pub cayley_hamilton_residual: f64,
    pub jy: Option<JyCheck>,
    pub candidates: Vec<GordonCandidate>,
    pub all_at_least_quarter: bool,
}

/// Cayley–Hamilton residual `‖A² − (Tr A)A + det(A) I‖`, relative to `‖A‖²`
/// (or absolute when `‖A‖ ≤ 1`).
pub fn cayley_hamilton_residual(a: &crate::cocycle::M2, det: C64) -> f64 {
    let tr = a.trace();
    let r = a * a - a * tr + crate::cocycle::M2::identity() * det;
    let na = a.norm();
    r.norm() / na.powi(2).max(1.0)
}

/// Three-block test at level `q = q_level` of `cf`.
pub fn gordon_test(
    model: &JacobiModel,
    theta: f64,
    energy: f64,
    cf: &ContinuedFraction,
    level: usize,
    source: &GordonSource,
    singular_phases: &[f64],
) -> Result<GordonReport> {
    if level >= cf.q.len() {
        return Err(Error::InsufficientDepth { needed: level + 1, have: cf.q.len() });
    }
    let q = cf
        .q_u64(level)
        .filter(|&q| q <= 1 << 24)
        .ok_or(Error::InvalidParameters("denominator too large for the three-block test".into()))?;
    let qi = q as i64;
    let a = model.alpha();

    let co = Cocycle::new(model.clone(), energy, CocycleKind::Transfer);
    let prod = product_with_det(&co, theta, qi)?;
    let expected_abs_det = model.c.eval_real(theta - a).norm() / model.c.eval_real(model.freq.orbit(theta, qi - 1)).norm();

    let jy = if singular_phases.is_empty() {
        None
    } else {
        let mut log_product = 0.0;
        for k in 0..qi {
            let x = model.freq.orbit(theta, k);
            for &tj in singular_phases {
                log_product += (e2pi_re(x) - e2pi_re(tj)).norm().ln();
            }
        }
        let w = default_window(cf).min(cf.q.len().saturating_sub(2)).max(1);
        let d = delta_c(cf, theta, singular_phases, w)?;
        let eps = 0.1;
        let next = if level + 1 < cf.q.len() { crate::diophantine::ln_biguint(&cf.q[level + 1]) } else { f64::INFINITY };
        let log_bound = (d.value - eps) * q as f64 - next;
        Some(JyCheck { log_product, log_bound, delta_c: d.value, epsilon: eps, holds: log_product >= log_bound })
    };

    let quarter = 0.25f64.ln();
    let mut candidates = Vec::new();
    match source {
        GordonSource::Eigenvectors { margin, count } => {
            let m = 2 * q as usize + margin;
            let op = build(model, theta, m);
            let sd = eigensolve_with(&op, Vectors::None, false)?;
            let n = sd.eigenvalues.len();
            let mut weights: Vec<(usize, f64)> = Vec::with_capacity(n);
            let o = op.index(0);
            eigenvectors_with(&op.matrix, &sd.eigenvalues, &(0..n).collect::<Vec<_>>(), |i, v| {
                weights.push((i, v[o].norm_sqr() + v[o - 1].norm_sqr()));
            })?;
            weights.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap());
            let chosen: Vec<usize> = weights.iter().take(*count).map(|w| w.0).collect();
            let mut vecs = Vec::new();
            eigenvectors_with(&op.matrix, &sd.eigenvalues, &chosen, |i, v| vecs.push((i, v)))?;
            for (i, v) in vecs {
                let at = |n: i64| v[op.index(n)];
                let norm0 = (at(0).norm_sqr() + at(-1).norm_sqr()).sqrt();
                let pair = |n: i64| ((at(n).norm_sqr() + at(n - 1).norm_sqr()).sqrt() / norm0).ln();
                let e = sd.eigenvalues[i];
                let tr = product_with_det(&Cocycle::new(model.clone(), e, CocycleKind::Transfer), theta, qi)?.log_abs_trace;
                let (lq, l2q, lmq) = (pair(qi), pair(2 * qi), pair(-qi));
                candidates.push(GordonCandidate {
                    energy: e,
                    label: format!("eigenvector {i}"),
                    log_norm_q: lq,
                    log_norm_2q: l2q,
                    log_norm_minus_q: lmq,
                    log_abs_trace: tr,
                    max_at_least_quarter: lq.max(l2q).max(lmq) >= quarter,
                });
            }
        }
        GordonSource::Transfer { n_phi } => {
            for j in 0..*n_phi {
                let phi = std::f64::consts::PI * j as f64 / *n_phi as f64;
                let start = (C64::new(phi.cos(), 0.0), C64::new(phi.sin(), 0.0));
                let (lq, l2q) = forward_log_norms(model, theta, energy, start, qi)?;
                let lmq = backward_log_norm(model, theta, energy, start, qi)?;
                candidates.push(GordonCandidate {
                    energy,
                    label: format!("phi={phi:.6}"),
                    log_norm_q: lq,
                    log_norm_2q: l2q,
                    log_norm_minus_q: lmq,
                    log_abs_trace: prod.log_abs_trace,
                    max_at_least_quarter: lq.max(l2q).max(lmq) >= quarter,
                });
            }
        }
    }
    let all = candidates.iter().all(|c| c.max_at_least_quarter);
    Ok(GordonReport {
        q,
        theta,
        energy,
        log_abs_trace: prod.log_abs_trace,
        abs_det: prod.abs_det,
        expected_abs_det,
        cayley_hamilton_residual: prod.ch_residual,
        jy,
        candidates,
        all_at_least_quarter: all,
    })
}

struct ProductSummary {
    log_abs_trace: f64,
    abs_det: f64,
    ch_residual: f64,
}

/// `A_q(θ)` in scaled form, with its determinant accumulated factor by factor.
fn product_with_det(co: &Cocycle, theta: f64, q: i64) -> Result<ProductSummary> {
    let (m, s) = co.finite_product_scaled(theta, 0, q - 1)?;
    let mut log_det = 0.0;
    let mut arg_det = C64::new(1.0, 0.0);
    for k in 0..q {
        let d = co.matrix_at(co.model.freq.orbit(theta, k)).map_err(|e| match e {
            Error::SingularHopping { modulus, .. } => Error::SingularHopping { index: k, modulus },
            o => o,
        })?;
        let d = d.determinant();
        log_det += d.norm().ln();
        arg_det *= d / d.norm();
    }
    // det of the scaled matrix is det(A_q)·e^{−2s}
    let det_scaled = arg_det * (log_det - 2.0 * s).exp();
    Ok(ProductSummary {
        log_abs_trace: s + m.trace().norm().ln(),
        abs_det: log_det.exp(),
        ch_residual: cayley_hamilton_residual(&m, det_scaled),
    })
}

fn forward_log_norms(model: &JacobiModel, theta: f64, e: f64, start: (C64, C64), q: i64) -> Result<(f64, f64)> {
    let a = model.alpha();
    let (mut un, mut um) = start; // u_n, u_{n−1}
    let mut log = 0.0;
    let mut out_q = f64::NAN;
    for n in 0..2 * q {
        let th = model.freq.orbit(theta, n);
        let cn = model.c.eval_real(th);
        if cn.norm() < crate::cocycle::HOPPING_FLOOR {
            return Err(Error::SingularHopping { index: n, modulus: cn.norm() });
        }
        let ct = model.c.eval_real(th - a).conj();
        let next = ((e - model.v.eval_real(th)) * un - ct * um) / cn;
        um = un;
        un = next;
        let s = (un.norm_sqr() + um.norm_sqr()).sqrt();
        un /= s;
        um /= s;
        log += s.ln();
        if n + 1 == q {
            out_q = log;
        }
    }
    Ok((out_q, log))
}

fn backward_log_norm(model: &JacobiModel, theta: f64, e: f64, start: (C64, C64), q: i64) -> Result<f64> {
    // from (u_0, u_{−1}) down to (u_{−q}, u_{−q−1})
    let a = model.alpha();
    let (mut up, mut un) = start; // u_{n+1}, u_n with n = −1
    let mut log = 0.0;
    for n in (-q..=-1).rev() {
        let th = model.freq.orbit(theta, n);
        let ct = model.c.eval_real(th - a).conj();
        if ct.norm() < crate::cocycle::HOPPING_FLOOR {
            return Err(Error::SingularHopping { index: n - 1, modulus: ct.norm() });
        }
        let cn = model.c.eval_real(th);
        let prev = ((e - model.v.eval_real(th)) * un - cn * up) / ct;
        up = un;
        un = prev;
        let s = (up.norm_sqr() + un.norm_sqr()).sqrt();
        up /= s;
        un /= s;
        log += s.ln();
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::{expand, HighPrecisionReal};
    use crate::symbol::TorusSymbol;
    use std::f64::consts::PI;

    fn golden() -> ContinuedFraction {
        expand(&HighPrecisionReal::golden(1024), 40).unwrap()
    }

    fn model(l: (f64, f64, f64)) -> JacobiModel {
        let cf = golden();
        let a = cf.frequency().value();
        let c = TorusSymbol::from_modes(
            &[(-1, C64::new(l.0, 0.0)), (0, C64::new(l.1, 0.0)), (1, C64::new(l.2, 0.0))],
            true,
            a,
            f64::INFINITY,
        );
        JacobiModel::new(c, TorusSymbol::cosine(a), cf).unwrap()
    }

    fn free() -> JacobiModel {
        let cf = golden();
        let a = cf.frequency().value();
        JacobiModel::new(
            TorusSymbol::constant(C64::new(1.0, 0.0), true, a),
            TorusSymbol::constant(C64::new(0.0, 0.0), false, a),
            cf,
        )
        .unwrap()
    }

    #[test]
    fn build_examples() {
        let op = build(&free(), 0.2, 1);
        let d = op.matrix.to_dense();
        let expect = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d[(i, j)], C64::new(expect[i][j], 0.0));
            }
        }
        let m = model((0.1, 0.5, 0.2));
        let op = build(&m, 0.3, 5);
        for n in -5..5i64 {
            let th = m.freq.orbit(0.3, n);
            assert!((op.matrix.get(op.index(n), op.index(n + 1)) - m.c.eval_real(th)).norm() < 1e-15);
        }
        let single = build(&model((0.0, 1.0, 0.0)), 0.0, 0);
        assert!((eigenvalues(&single.matrix).unwrap()[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn residual_contract_on_ehm() {
        let m = model((0.1, 0.5, 0.2));
        let op = build(&m, 0.17, 500);
        let sd = eigensolve(&op, true).unwrap();
        let norm = op.matrix.norm_bound();
        for (i, v) in &sd.eigenvectors {
            let hv = op.matrix.matvec(v);
            let r: f64 = hv.iter().zip(v).map(|(a, b)| (a - b * sd.eigenvalues[*i]).norm_sqr()).sum::<f64>().sqrt();
            assert!(r < 1e-8 * norm);
            let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            assert!((nv - 1.0).abs() < 1e-10);
        }
        assert!(sd.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn synthetic_decay() {
        let n = 201;
        let u: Vec<C64> = (0..n).map(|i| C64::new((-0.7 * (i as f64 - 100.0).abs()).exp(), 0.0)).collect();
        let (rate, r2) = decay_rate_of(&u).unwrap();
        assert!((rate - 0.7).abs() < 1e-6);
        assert!(r2 > 0.999);
        let mut shifted = u.clone();
        shifted.rotate_left(80);
        assert!(matches!(decay_rate_of(&shifted), Err(Error::PeakNearBoundary { .. })));
    }

    #[test]
    fn extended_state_fit_is_rejected() {
        let n = 401;
        let k = 37.0;
        let u: Vec<C64> = (1..=n).map(|i| C64::new((k * PI * i as f64 / (n as f64 + 1.0)).sin(), 0.0)).collect();
        let (_, r2) = decay_rate_of(&u).unwrap();
        assert!(r2 < 0.5, "{r2}");
    }

    #[test]
    fn ipr_examples() {
        let mut d = vec![C64::new(0.0, 0.0); 9];
        d[4] = C64::new(1.0, 0.0);
        assert!((ipr_of(&d) - 1.0).abs() < 1e-15);
        let u = vec![C64::new(0.5, 0.0); 4];
        assert!((ipr_of(&u) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn ids_limits() {
        let m = model((0.1, 0.5, 0.2));
        let b = m.spectral_bound();
        let curve = ids(&m, &[-b - 1.0, 0.0, b + 1.0], 100, 2, 1).unwrap();
        assert_eq!(curve.values[0], 0.0);
        assert_eq!(curve.values[2], 1.0);
    }

    #[test]
    fn cayley_hamilton_identity() {
        let a = crate::cocycle::M2::new(C64::new(0.3, 1.0), C64::new(-2.0, 0.1), C64::new(0.7, 0.0), C64::new(1.1, -0.4));
        assert!(cayley_hamilton_residual(&a, a.determinant()) < 1e-12);
    }

    #[test]
    fn gordon_determinant_ratio() {
        let m = model((0.1, 0.5, 0.2));
        let cf = m.cf.clone();
        let r = gordon_test(&m, 0.13, 0.4, &cf, 8, &GordonSource::Transfer { n_phi: 4 }, &[]).unwrap();
        assert!((r.abs_det - r.expected_abs_det).abs() / r.expected_abs_det < 1e-10);
        assert!(r.cayley_hamilton_residual < 1e-12);
        assert_eq!(r.candidates.len(), 4);
    }
}
