//! Truncated Fourier series on the torus.
//!
//! A symbol is `Σ_k ŝ_k e^{2πik(θ+shift)}` with `shift = α/2` for the
//! half-phase basis and `0` otherwise. The strip radius is stored in
//! θ-units, i.e. analyticity on `|Im θ| ≤ strip`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `e^{2πi x}` for complex `x`.
#[inline]
pub fn e2pi(x: C64) -> C64 {
    (2.0 * PI * I * x).exp()
}

/// `e^{2πi x}` for real `x`.
#[inline]
pub fn e2pi_re(x: f64) -> C64 {
    let (s, c) = (2.0 * PI * x).sin_cos();
    C64::new(c, s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusSymbol {
    kmin: i64,
    coeffs: Vec<C64>,
    pub half_phase: bool,
    pub alpha: f64,
    pub strip: f64,
}

/// Roots of the z-polynomial attached to a symbol.
#[derive(Debug, Clone)]
pub struct SymbolZeros {
    pub roots: Vec<C64>,
    pub on_circle: Vec<C64>,
    pub torus_phases: Vec<f64>,
}

impl TorusSymbol {
    /// Coefficients `coeffs[i]` multiply mode `kmin + i`.
    pub fn new(kmin: i64, coeffs: Vec<C64>, half_phase: bool, alpha: f64, strip: f64) -> Self {
        let mut s = TorusSymbol { kmin, coeffs, half_phase, alpha, strip };
        if s.coeffs.is_empty() {
            s.coeffs.push(C64::new(0.0, 0.0));
            s.kmin = 0;
        }
        s
    }

    pub fn from_modes(modes: &[(i64, C64)], half_phase: bool, alpha: f64, strip: f64) -> Self {
        if modes.is_empty() {
            return Self::constant(C64::new(0.0, 0.0), half_phase, alpha);
        }
        let lo = modes.iter().map(|m| m.0).min().unwrap();
        let hi = modes.iter().map(|m| m.0).max().unwrap();
        let mut coeffs = vec![C64::new(0.0, 0.0); (hi - lo + 1) as usize];
        for &(k, c) in modes {
            coeffs[(k - lo) as usize] += c;
        }
        Self::new(lo, coeffs, half_phase, alpha, strip)
    }

    pub fn constant(c: C64, half_phase: bool, alpha: f64) -> Self {
        Self::new(0, vec![c], half_phase, alpha, f64::INFINITY)
    }

    /// `2cos2πθ` in the plain basis.
    pub fn cosine(alpha: f64) -> Self {
        let one = C64::new(1.0, 0.0);
        Self::new(-1, vec![one, C64::new(0.0, 0.0), one], false, alpha, f64::INFINITY)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_strip(mut self, strip: f64) -> Self {
        self.strip = strip;
        self
    }

    pub fn kmin(&self) -> i64 {
        self.kmin
    }

    pub fn kmax(&self) -> i64 {
        self.kmin + self.coeffs.len() as i64 - 1
    }

    /// Largest `|k|` carried.
    pub fn order(&self) -> i64 {
        self.kmin.abs().max(self.kmax().abs())
    }

    pub fn coeff(&self, k: i64) -> C64 {
        let i = k - self.kmin;
        if i < 0 || i >= self.coeffs.len() as i64 {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[i as usize]
        }
    }

    /// `(k, ŝ_k)` in ascending `k`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, &c)| (self.kmin + i as i64, c))
    }

    pub fn shift(&self) -> f64 {
        if self.half_phase { self.alpha / 2.0 } else { 0.0 }
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// Evaluation at complex `θ`, summing in ascending `k`.
    pub fn eval(&self, theta: C64) -> Result<C64> {
        if theta.im.abs() > self.strip * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::OutsideStrip { theta: theta.im, strip: self.strip });
        }
        Ok(self.eval_unchecked(theta))
    }

    pub fn eval_unchecked(&self, theta: C64) -> C64 {
        let phi = theta + self.shift();
        let z = e2pi(phi);
        let mut zk = e2pi(phi * self.kmin as f64);
        let mut acc = C64::new(0.0, 0.0);
        for &c in &self.coeffs {
            acc += c * zk;
            zk *= z;
        }
        acc
    }

    /// Evaluation on the real torus.
    pub fn eval_real(&self, theta: f64) -> C64 {
        let phi = theta + self.shift();
        if self.coeffs.len() <= 8 {
            let mut acc = C64::new(0.0, 0.0);
            for (k, c) in self.modes() {
                acc += c * e2pi_re(k as f64 * phi);
            }
            return acc;
        }
        let z = e2pi_re(phi);
        let mut zk = e2pi_re(self.kmin as f64 * phi);
        let mut acc = C64::new(0.0, 0.0);
        for (i, &c) in self.coeffs.iter().enumerate() {
            acc += c * zk;
            zk *= z;
            // re-anchor periodically to stop phase drift
            if i % 64 == 63 {
                zk = e2pi_re((self.kmin + i as i64 + 1) as f64 * phi);
            }
        }
        acc
    }

    /// Samples at `θ_j = offset + j/n` (offset in θ-units).
    pub fn sample(&self, n: usize, offset: f64) -> Vec<C64> {
        (0..n).map(|j| self.eval_real(offset + j as f64 / n as f64)).collect()
    }

    /// `ŝ_k = conj(ŝ_{−k})`.
    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.modes().all(|(k, c)| (c - self.coeff(-k).conj()).norm() <= tol)
    }

    /// `ŝ_k ∈ R`.
    pub fn is_real_fourier(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.im.abs() <= tol)
    }

    /// `s̃`, equal to `conj(s)` on the real torus: `s̃_k = conj(ŝ_{−k})` in
    /// either basis.
    pub fn tilde(&self) -> Self {
        let coeffs: Vec<C64> = self.coeffs.iter().rev().map(|c| c.conj()).collect();
        TorusSymbol { kmin: -self.kmax(), coeffs, ..self.clone() }
    }

    /// `θ ↦ s(θ + β)`.
    pub fn translated(&self, beta: f64) -> Self {
        let coeffs = self
            .modes()
            .map(|(k, c)| c * e2pi_re(k as f64 * beta))
            .collect();
        TorusSymbol { coeffs, ..self.clone() }
    }

    /// `θ ↦ s(−θ − α)`.
    pub fn reflected(&self) -> Self {
        // half-phase: k ↦ −k; plain: additionally picks up e^{-2πikα} on mode −k
        let coeffs: Vec<C64> = if self.half_phase {
            self.coeffs.iter().rev().copied().collect()
        } else {
            let mut v: Vec<C64> = Vec::with_capacity(self.coeffs.len());
            for k in (self.kmin..=self.kmax()).rev() {
                // new mode −k carries ŝ_k e^{−2πikα}
                v.push(self.coeff(k) * e2pi_re(-(k as f64) * self.alpha));
            }
            v
        };
        TorusSymbol { kmin: -self.kmax(), coeffs, ..self.clone() }
    }

    /// Same function expressed in the other basis.
    pub fn rebased(&self, half_phase: bool) -> Self {
        if half_phase == self.half_phase {
            return self.clone();
        }
        // plain ŝ_k = half ŝ_k e^{πikα}
        let sign = if half_phase { -1.0 } else { 1.0 };
        let coeffs = self
            .modes()
            .map(|(k, c)| c * e2pi_re(sign * k as f64 * self.alpha / 2.0))
            .collect();
        TorusSymbol { coeffs, half_phase, ..self.clone() }
    }

    pub fn scaled(&self, a: C64) -> Self {
        TorusSymbol { coeffs: self.coeffs.iter().map(|c| c * a).collect(), ..self.clone() }
    }

    /// Sum of two symbols in a common basis (the basis of `self`).
    pub fn add(&self, other: &Self) -> Self {
        let o = other.rebased(self.half_phase);
        let lo = self.kmin.min(o.kmin);
        let hi = self.kmax().max(o.kmax());
        let coeffs = (lo..=hi).map(|k| self.coeff(k) + o.coeff(k)).collect();
        TorusSymbol { kmin: lo, coeffs, strip: self.strip.min(o.strip), ..self.clone() }
    }

    /// Product (coefficient convolution) in the basis of `self`.
    pub fn mul(&self, other: &Self) -> Self {
        let o = other.rebased(self.half_phase);
        let mut coeffs = vec![C64::new(0.0, 0.0); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        TorusSymbol {
            kmin: self.kmin + o.kmin,
            coeffs,
            strip: self.strip.min(o.strip),
            ..self.clone()
        }
    }

    /// Drops modes with `|ŝ_k| ≤ tol·max|ŝ|` from both ends.
    pub fn trimmed(&self, tol: f64) -> Self {
        let m = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = tol * m;
        let first = self.coeffs.iter().position(|c| c.norm() > cut);
        let Some(first) = first else {
            return Self::constant(C64::new(0.0, 0.0), self.half_phase, self.alpha);
        };
        let last = self.coeffs.iter().rposition(|c| c.norm() > cut).unwrap();
        TorusSymbol {
            kmin: self.kmin + first as i64,
            coeffs: self.coeffs[first..=last].to_vec(),
            ..self.clone()
        }
    }

    /// Decay rate fitted to the coefficient envelope, in θ-units.
    /// Returns infinity for symbols with too few significant modes to fit.
    pub fn fitted_strip(&self) -> f64 {
        let m = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if m == 0.0 {
            return f64::INFINITY;
        }
        let kabs = self.order();
        let mut pts = Vec::new();
        for k in 1..=kabs {
            let a = self.coeff(k).norm().max(self.coeff(-k).norm());
            if a > 1e-13 * m {
                pts.push((k as f64, a.ln()));
            }
        }
        if pts.len() < 4 {
            return f64::INFINITY;
        }
        // the tail is closer to the pure exponential rate
        let pts = &pts[pts.len() / 2..];
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let slope = sxy / sxx;
        if slope >= 0.0 { 0.0 } else { -slope / (2.0 * PI) }
    }

    /// Accepts a declared strip only when the coefficient decay supports it.
    pub fn with_certified_strip(mut self, declared: f64) -> Result<Self> {
        let fitted = self.fitted_strip();
        if declared > fitted * 1.05 + 1e-12 {
            return Err(Error::StripNotCertified { declared, fitted });
        }
        let bound: f64 = self.modes().map(|(k, c)| c.norm() * (2.0 * PI * k.abs() as f64 * declared).exp()).sum();
        if !bound.is_finite() {
            return Err(Error::StripNotCertified { declared, fitted });
        }
        self.strip = declared;
        Ok(self)
    }

    /// `s(θ)·e^{−2πik₀(θ+α/2)}`.
    pub fn twist(&self, k0: i64) -> Self {
        let mut out = TorusSymbol { kmin: self.kmin - k0, ..self.clone() };
        if !self.half_phase {
            let ph = e2pi_re(-(k0 as f64) * self.alpha / 2.0);
            out.coeffs.iter_mut().for_each(|c| *c *= ph);
        }
        out
    }

    /// Minimum modulus over a uniform real grid.
    pub fn min_modulus(&self, grid: usize) -> f64 {
        self.sample(grid, 0.0).iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min)
    }

    /// Roots of `P(z) = z^{−kmin} Σ ŝ_k z^k` after trimming negligible
    /// leading and trailing modes.
    pub fn zeros_on_torus(&self) -> Result<SymbolZeros> {
        let t = self.trimmed(1e-14);
        let deg = (t.kmax() - t.kmin) as usize;
        let roots = if deg == 0 { Vec::new() } else { poly_roots(&t.coeffs)? };
        let shift = self.shift();
        let mut on_circle = Vec::new();
        let mut torus_phases = Vec::new();
        for &r in &roots {
            if (r.norm() - 1.0).abs() < 1e-8 {
                on_circle.push(r);
                let th = r.arg() / (2.0 * PI) - shift;
                torus_phases.push(th - th.floor());
            }
        }
        Ok(SymbolZeros { roots, on_circle, torus_phases })
    }

    /// Winding number of `s` around the origin as `θ` runs over `[0, 1)`.
    ///
    /// The argument-increment count is cross-checked against the number of
    /// roots of the z-polynomial inside the unit disk.
    pub fn winding(&self, grid: usize) -> Result<i64> {
        if grid < 1024 {
            return Err(Error::InvalidParameters("winding grid must be at least 1024".into()));
        }
        let arg_count = self.winding_by_argument(grid)?;
        let t = self.trimmed(1e-14);
        if t.coeffs.len() > 1 && t.coeffs.len() <= 1024 {
            let roots = poly_roots(&t.coeffs)?;
            let inside = roots.iter().filter(|r| r.norm() < 1.0).count() as i64;
            let by_roots = t.kmin + inside;
            if by_roots != arg_count {
                return Err(Error::WindingMismatch { argument: arg_count, roots: by_roots });
            }
        }
        Ok(arg_count)
    }

    fn winding_by_argument(&self, grid: usize) -> Result<i64> {
        let mut n = grid;
        loop {
            let vals = self.sample(n, 0.0);
            let min = vals.iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min);
            if !(min > 1e-8) {
                return Err(Error::VanishesOnTorus { min_modulus: min });
            }
            let mut total = 0.0;
            let mut coarse = false;
            for j in 0..n {
                let d = (vals[(j + 1) % n] / vals[j]).arg();
                if d.abs() > PI / 2.0 {
                    coarse = true;
                    break;
                }
                total += d;
            }
            if !coarse {
                return Ok((total / (2.0 * PI)).round() as i64);
            }
            if n >= 1 << 22 {
                return Err(Error::Contract("argument increments unresolved at finest grid".into()));
            }
            n *= 2;
        }
    }

    /// Fourier projection of `θ ↦ |s(θ)|` to `|k| ≤ k_out`, in the same
    /// basis as `s`. Also returns the max pointwise error at grid midpoints.
    pub fn modulus_symbol(&self, k_out: usize, grid: usize) -> Result<(TorusSymbol, f64)> {
        self.project_real(k_out, grid, |z| z.norm())
    }

    /// Fourier projection of `f(s(θ))` sampled on the real torus.
    pub fn project_real(&self, k_out: usize, grid: usize, f: impl Fn(C64) -> f64) -> Result<(TorusSymbol, f64)> {
        if grid < 2 * k_out + 1 {
            return Err(Error::InvalidParameters("grid too small for requested modes".into()));
        }
        let min = self.min_modulus(grid);
        if !(min > 1e-8) {
            return Err(Error::VanishesOnTorus { min_modulus: min });
        }
        // sample in the basis variable φ = θ + shift so the FFT gives basis coefficients
        let shift = self.shift();
        let samples: Vec<C64> = (0..grid)
            .map(|j| C64::new(f(self.eval_real(j as f64 / grid as f64 - shift)), 0.0))
            .collect();
        let sym = fourier_project(&samples, k_out, self.half_phase, self.alpha);
        let sym = TorusSymbol { strip: 0.0, ..sym };
        let mut err: f64 = 0.0;
        for j in 0..grid {
            let th = (j as f64 + 0.5) / grid as f64;
            let exact = f(self.eval_real(th));
            err = err.max((sym.eval_real(th) - exact).norm());
        }
        let fitted = sym.fitted_strip();
        let strip = if fitted.is_finite() { 0.9 * fitted } else { self.strip };
        Ok((TorusSymbol { strip, ..sym }, err))
    }

    pub fn to_json(&self) -> SymbolJson {
        SymbolJson {
            half_phase: self.half_phase,
            alpha: self.alpha,
            strip: if self.strip.is_finite() { Some(self.strip) } else { None },
            coeffs: self.modes().map(|(k, c)| (k, c.re, c.im)).collect(),
        }
    }

    pub fn from_json(j: &SymbolJson) -> Result<Self> {
        let modes: Vec<(i64, C64)> = j.coeffs.iter().map(|&(k, re, im)| (k, C64::new(re, im))).collect();
        let mut seen = std::collections::HashSet::new();
        if !modes.iter().all(|m| seen.insert(m.0)) {
            return Err(Error::InvalidParameters("duplicate Fourier mode".into()));
        }
        Ok(Self::from_modes(&modes, j.half_phase, j.alpha, j.strip.unwrap_or(f64::INFINITY)))
    }
}

/// Serialized form: `{half_phase, alpha, strip, coeffs: [[k, re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolJson {
    pub half_phase: bool,
    pub alpha: f64,
    pub strip: Option<f64>,
    pub coeffs: Vec<(i64, f64, f64)>,
}

/// Symbol whose basis coefficients are the DFT of equispaced samples of the
/// basis variable, truncated to `|k| ≤ k_out`.
pub fn fourier_project(samples: &[C64], k_out: usize, half_phase: bool, alpha: f64) -> TorusSymbol {
    let n = samples.len();
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let k_out = k_out.min((n - 1) / 2);
    let coeffs: Vec<C64> = (-(k_out as i64)..=k_out as i64)
        .map(|k| buf[k.rem_euclid(n as i64) as usize] / n as f64)
        .collect();
    TorusSymbol::new(-(k_out as i64), coeffs, half_phase, alpha, f64::INFINITY)
}

/// All roots of `Σ a_i z^i` (ascending coefficients, nonzero ends) from the
/// companion matrix, polished by Newton steps.
pub fn poly_roots(a: &[C64]) -> Result<Vec<C64>> {
    let n = a.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = a[n];
    if lead.norm() == 0.0 {
        return Err(Error::Contract("zero leading coefficient".into()));
    }
    let roots: Vec<C64> = if n == 1 {
        vec![-a[0] / a[1]]
    } else if n == 2 {
        let (c0, c1, c2) = (a[0], a[1], a[2]);
        let disc = (c1 * c1 - 4.0 * c2 * c0).sqrt();
        // pick the sign that avoids cancellation
        let q = if (c1.conj() * disc).re >= 0.0 { -(c1 + disc) / 2.0 } else { -(c1 - disc) / 2.0 };
        if q.norm() == 0.0 {
            vec![C64::new(0.0, 0.0); 2]
        } else {
            vec![q / c2, c0 / q]
        }
    } else {
        let mut m = DMatrix::<C64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = C64::new(1.0, 0.0);
        }
        for i in 0..n {
            m[(i, n - 1)] = -a[i] / lead;
        }
        let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Contract("companion eigenvalues did not converge".into()))?;
        let ev = schur
            .eigenvalues()
            .ok_or_else(|| Error::Contract("companion Schur form not triangular".into()))?;
        ev.iter().copied().collect()
    };
    Ok(roots.into_iter().map(|r| polish(a, r)).collect())
}

fn horner(a: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in a.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn polish(a: &[C64], mut z: C64) -> C64 {
    let (mut p, _) = horner(a, z);
    for _ in 0..5 {
        let (pz, dp) = horner(a, z);
        if dp.norm() == 0.0 {
            break;
        }
        let cand = z - pz / dp;
        let (pc, _) = horner(a, cand);
        if pc.norm() < p.norm() {
            z = cand;
            p = pc;
        } else {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const ALPHA: f64 = 0.618_033_988_749_894_8;

    fn ehm_c(l1: f64, l2: f64, l3: f64) -> TorusSymbol {
        TorusSymbol::from_modes(
            &[(-1, C64::new(l1, 0.0)), (0, C64::new(l2, 0.0)), (1, C64::new(l3, 0.0))],
            true,
            ALPHA,
            f64::INFINITY,
        )
    }

    #[test]
    fn evaluation_examples() {
        let one = TorusSymbol::constant(C64::new(1.0, 0.0), false, ALPHA);
        assert_eq!(one.eval(C64::new(0.3, 0.1)).unwrap(), C64::new(1.0, 0.0));
        let c = ehm_c(0.1, 0.5, 0.2);
        assert_abs_diff_eq!(c.eval(C64::new(-ALPHA / 2.0, 0.0)).unwrap().re, 0.8, epsilon = 1e-14);
        let v = TorusSymbol::cosine(ALPHA);
        assert!(v.eval_real(0.25).norm() < 1e-15);
    }

    #[test]
    fn outside_strip_is_rejected() {
        let c = ehm_c(0.1, 0.5, 0.2);
        let c = TorusSymbol { strip: 0.1, ..c };
        assert!(matches!(c.eval(C64::new(0.0, 0.2)), Err(Error::OutsideStrip { .. })));
    }

    #[test]
    fn winding_examples() {
        let one = TorusSymbol::constant(C64::new(1.0, 0.0), false, ALPHA);
        assert_eq!(one.winding(1024).unwrap(), 0);
        let z = TorusSymbol::from_modes(&[(1, C64::new(1.0, 0.0))], false, ALPHA, f64::INFINITY);
        assert_eq!(z.winding(1024).unwrap(), 1);
        assert_eq!(ehm_c(0.6, 0.2, 0.1).winding(2048).unwrap(), -1);
        assert_eq!(ehm_c(0.2, 0.6, 0.3).winding(2048).unwrap(), 0);
    }

    #[test]
    fn quadratic_roots_match_hand_solution() {
        // λ₃z² + λ₂z + λ₁ for (0.6, 0.2, 0.1): z = −1 ± √5 i
        let zs = ehm_c(0.6, 0.2, 0.1).zeros_on_torus().unwrap();
        let mut r = zs.roots.clone();
        r.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert_abs_diff_eq!(r[0].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1].im, 5f64.sqrt(), epsilon = 1e-12);
        assert!(zs.on_circle.is_empty());
    }

    #[test]
    fn singular_phases_of_critical_symbols() {
        let zs = ehm_c(0.5, 0.5, 0.5).zeros_on_torus().unwrap();
        assert_eq!(zs.torus_phases.len(), 2);
        for target in [1.0 / 3.0 - ALPHA / 2.0, -1.0 / 3.0 - ALPHA / 2.0] {
            assert!(zs
                .torus_phases
                .iter()
                .any(|&t| crate::diophantine::torus_norm(t - target) < 1e-10));
        }
        let zs = ehm_c(0.2, 0.5, 0.3).zeros_on_torus().unwrap();
        assert_eq!(zs.torus_phases.len(), 1);
        assert!(crate::diophantine::torus_norm(zs.torus_phases[0] - (0.5 - ALPHA / 2.0)) < 1e-10);
        assert!(ehm_c(0.1, 0.5, 0.2).zeros_on_torus().unwrap().on_circle.is_empty());
    }

    #[test]
    fn twist_removes_winding() {
        let c = ehm_c(0.6, 0.2, 0.1);
        let t = c.twist(-1);
        assert_eq!(t.winding(2048).unwrap(), 0);
        assert_eq!(c.twist(0), c);
        let z = TorusSymbol::from_modes(&[(1, C64::new(1.0, 0.0))], true, ALPHA, f64::INFINITY);
        let t = z.twist(1);
        assert_eq!(t.kmin(), 0);
        assert_abs_diff_eq!(t.eval_real(0.37).re, 1.0, epsilon = 1e-15);
        // plain basis twist agrees pointwise
        let p = ehm_c(0.6, 0.2, 0.1).rebased(false);
        let th = 0.123;
        let expect = p.eval_real(th) * e2pi_re(ALPHA / 2.0 + th);
        assert!((p.twist(-1).eval_real(th) - expect).norm() < 1e-14);
    }

    #[test]
    fn modulus_examples() {
        let m2 = TorusSymbol::constant(C64::new(-2.0, 0.0), false, ALPHA);
        let (m, _) = m2.modulus_symbol(4, 64).unwrap();
        assert_abs_diff_eq!(m.eval_real(0.3).re, 2.0, epsilon = 1e-14);
        let c = ehm_c(0.1, 0.5, 0.2);
        let (m, err) = c.modulus_symbol(72, 512).unwrap();
        assert!(err < 1e-10, "{err}");
        assert_abs_diff_eq!(m.eval_real(-ALPHA / 2.0).re, 0.8, epsilon = 1e-10);
        assert!(m.is_real_fourier(1e-12));
        for k in 1..=10 {
            assert_abs_diff_eq!(m.coeff(k).re, m.coeff(-k).re, epsilon = 1e-13);
        }
    }

    #[test]
    fn strip_certification() {
        let c = ehm_c(0.1, 0.5, 0.2);
        let (m, _) = c.modulus_symbol(72, 512).unwrap();
        let fitted = m.fitted_strip();
        // |c|² = c·c̃ vanishes at |z| = 2.2808 and its reciprocal: radius ln(2.2808)/2π ≈ 0.1312
        assert!((fitted - 0.1312).abs() < 0.015, "{fitted}");
        assert!(m.clone().with_certified_strip(0.1).is_ok());
        assert!(matches!(m.with_certified_strip(0.5), Err(Error::StripNotCertified { .. })));
    }

    #[test]
    fn tilde_and_reflection() {
        let c = TorusSymbol::from_modes(
            &[(-1, C64::new(0.3, 0.1)), (0, C64::new(0.5, -0.2)), (2, C64::new(0.1, 0.4))],
            true,
            ALPHA,
            f64::INFINITY,
        );
        for th in [0.1, 0.77] {
            assert!((c.tilde().eval_real(th) - c.eval_real(th).conj()).norm() < 1e-14);
            assert!((c.reflected().eval_real(th) - c.eval_real(-th - ALPHA)).norm() < 1e-14);
            let p = c.rebased(false);
            assert!((p.eval_real(th) - c.eval_real(th)).norm() < 1e-14);
            assert!((p.reflected().eval_real(th) - c.eval_real(-th - ALPHA)).norm() < 1e-14);
            assert!((c.translated(0.2).eval_real(th) - c.eval_real(th + 0.2)).norm() < 1e-14);
        }
    }

    #[test]
    fn json_roundtrip() {
        let c = ehm_c(0.1, 0.5, 0.2);
        let j = serde_json::to_string(&c.to_json()).unwrap();
        assert!(j.contains("\"coeffs\":[[-1,0.1,0.0],[0,0.5,0.0],[1,0.2,0.0]]"));
        let back = TorusSymbol::from_json(&serde_json::from_str(&j).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
