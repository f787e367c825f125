//! Aubry duals of Jacobi models, the duality transforms on `L²(T×Z)`
//! fields sampled on grids, and numerical duality checks for the extended
//! Harper's model.

use std::io::{Read, Write};

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::cocycle::{phase_sample, JacobiModel};
use crate::diophantine::Frequency;
use crate::eigen::HermBand;
use crate::error::{Error, Result};
use crate::operator::{build, interior_spectra, TruncatedOperator, DEFAULT_BOUNDARY_THRESHOLD};
use crate::symbol::{e2pi_re, TorusSymbol, C64};

/// The dual family: the lattice element `(m, m−m')` of `H̃(x)` is
/// `d_{m'}(x + mα)` with
/// `d_{m'}(y) = ĉ_{m'} e^{2πi(y−m'α/2)} + v̂_{−m'} + ĉ_{−m'} e^{−2πi(y−m'α/2)}`.
#[derive(Debug, Clone)]
pub struct DualModel {
    /// `d[j]` is `d_{j − bandwidth}` as a plain-basis symbol in `x`.
    pub d: Vec<TorusSymbol>,
    pub bandwidth: usize,
    pub freq: Frequency,
}

impl DualModel {
    pub fn alpha(&self) -> f64 {
        self.freq.value()
    }

    pub fn d(&self, m: i64) -> Option<&TorusSymbol> {
        let j = m + self.bandwidth as i64;
        if j < 0 || j >= self.d.len() as i64 { None } else { Some(&self.d[j as usize]) }
    }

    /// Evaluates `d_{m'}(y)`, zero outside the band.
    pub fn eval(&self, m: i64, y: f64) -> C64 {
        self.d(m).map_or(C64::new(0.0, 0.0), |s| s.eval_real(y))
    }

    /// Truncation of `H̃(x)` on sites `−N..=N`.
    pub fn build(&self, x: f64, n_half: usize) -> TruncatedOperator {
        let n = 2 * n_half + 1;
        let p = self.bandwidth;
        let mut h = HermBand::new(n, p);
        for i in 0..n {
            let m = i as i64 - n_half as i64;
            let y = self.freq.orbit(x, m);
            // row m, column m − m' for m' = 0..=p  (column ≤ row: lower triangle)
            for mp in 0..=p.min(i) {
                h.set(i, i - mp, self.eval(mp as i64, y));
            }
        }
        TruncatedOperator { matrix: h, half_width: n_half, phase: x }
    }

    /// Max violation of `d_{−m'}(y) = conj(d_{m'}(y + m'α))` over a grid.
    pub fn hermiticity_defect(&self, grid: usize) -> f64 {
        let a = self.alpha();
        let p = self.bandwidth as i64;
        let mut worst: f64 = 0.0;
        for j in 0..grid {
            let y = j as f64 / grid as f64;
            for m in -p..=p {
                let lhs = self.eval(-m, y);
                let rhs = self.eval(m, y + m as f64 * a).conj();
                worst = worst.max((lhs - rhs).norm());
            }
        }
        worst
    }
}

/// Builds the dual coefficients from `(c, v)`.
pub fn dualize(model: &JacobiModel) -> DualModel {
    let a = model.alpha();
    let c = model.c.rebased(true);
    let v = model.v.rebased(false);
    let k = c.order().max(v.order()) as usize;
    let mut d = Vec::with_capacity(2 * k + 1);
    for mp in -(k as i64)..=k as i64 {
        let ph = e2pi_re(-(mp as f64) * a / 2.0);
        let modes = [
            (1, c.coeff(mp) * ph),
            (0, v.coeff(-mp)),
            (-1, c.coeff(-mp) * ph.conj()),
        ];
        d.push(TorusSymbol::from_modes(&modes, false, a, f64::INFINITY));
    }
    DualModel { d, bandwidth: k, freq: model.freq }
}

/// Samples `ψ(x_i, n)` with `x_i = i/G`, `n ∈ −N..=N`, stored row-major by `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub g: usize,
    pub n_half: usize,
    pub data: Vec<C64>,
}

impl GridField {
    pub fn zeros(g: usize, n_half: usize) -> Result<Self> {
        if !g.is_power_of_two() || g < 2 {
            return Err(Error::InvalidParameters("grid size must be a power of two".into()));
        }
        Ok(GridField { g, n_half, data: vec![C64::new(0.0, 0.0); g * (2 * n_half + 1)] })
    }

    pub fn width(&self) -> usize {
        2 * self.n_half + 1
    }

    #[inline]
    pub fn at(&self, i: usize, n: i64) -> C64 {
        self.data[i * self.width() + (n + self.n_half as i64) as usize]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, n: i64) -> &mut C64 {
        let w = self.width();
        &mut self.data[i * w + (n + self.n_half as i64) as usize]
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.g as f64
    }

    /// Discrete `L²(T×Z)` norm (`x` averaged, `n` summed).
    pub fn norm(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.g as f64).sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        GridField { data, ..self.clone() }
    }

    /// Builds a field from Fourier coefficients `ψ̂(a, n)` with
    /// `ψ(x, n) = Σ_a ψ̂(a, n) e^{2πiax}`.
    pub fn from_coefficients(g: usize, n_half: usize, coeffs: &[(i64, i64, C64)]) -> Result<Self> {
        let mut f = Self::zeros(g, n_half)?;
        for i in 0..g {
            let x = f.x(i);
            for &(a, n, z) in coeffs {
                *f.at_mut(i, n) += z * e2pi_re(a as f64 * x);
            }
        }
        Ok(f)
    }

    /// Coefficients `ψ̂(a, n)` indexed `[(a mod G) * width + n + N]`.
    fn coefficients(&self) -> Vec<C64> {
        let g = self.g;
        let w = self.width();
        let fft = FftPlanner::new().plan_fft_forward(g);
        let mut out = vec![C64::new(0.0, 0.0); g * w];
        let mut col = vec![C64::new(0.0, 0.0); g];
        for j in 0..w {
            for i in 0..g {
                col[i] = self.data[i * w + j];
            }
            fft.process(&mut col);
            for a in 0..g {
                out[a * w + j] = col[a] / g as f64;
            }
        }
        out
    }

    fn from_coeff_array(g: usize, n_half: usize, coeffs: &[C64]) -> Self {
        let w = 2 * n_half + 1;
        let ifft = FftPlanner::new().plan_fft_inverse(g);
        let mut data = vec![C64::new(0.0, 0.0); g * w];
        let mut col = vec![C64::new(0.0, 0.0); g];
        for j in 0..w {
            for a in 0..g {
                col[a] = coeffs[a * w + j];
            }
            ifft.process(&mut col);
            for i in 0..g {
                data[i * w + j] = col[i];
            }
        }
        GridField { g, n_half, data }
    }

    /// Signed frequency of FFT bin `a`.
    fn signed(&self, a: usize) -> i64 {
        if a < self.g / 2 { a as i64 } else { a as i64 - self.g as i64 }
    }

    fn bin(&self, a: i64) -> usize {
        a.rem_euclid(self.g as i64) as usize
    }

    /// Largest frequency allowed outside the aliasing guard band.
    pub fn max_safe_frequency(&self) -> i64 {
        ((0.45 * self.g as f64).floor() as i64).min(self.g as i64 / 2 - 1)
    }

    /// Rejects fields whose coefficients reach the guard band.
    fn check_band(&self, coeffs: &[C64], lattice_to_frequency: bool) -> Result<()> {
        let w = self.width();
        let total: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
        let limit = self.max_safe_frequency();
        let mut bad = 0.0;
        for a in 0..self.g {
            let fa = self.signed(a);
            for j in 0..w {
                let n = j as i64 - self.n_half as i64;
                let out_of_band = fa.abs() > limit
                    || fa.abs() > self.n_half as i64
                    || (lattice_to_frequency && n.abs() > limit);
                if out_of_band {
                    bad += coeffs[a * w + j].norm_sqr();
                }
            }
        }
        if bad > 1e-24 * total.max(f64::MIN_POSITIVE) {
            return Err(Error::AliasingBudgetExceeded);
        }
        Ok(())
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&(self.g as u64).to_le_bytes())?;
        w.write_all(&(self.n_half as u64).to_le_bytes())?;
        for z in &self.data {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let g = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let n_half = u64::from_le_bytes(b8) as usize;
        let mut f = Self::zeros(g, n_half)?;
        for z in f.data.iter_mut() {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            *z = C64::new(re, f64::from_le_bytes(b8));
        }
        Ok(f)
    }
}

/// `(U_R ψ)(x, n) = ψ̂(n, x + nα)`: the mode `e^{2πiax}δ_b` goes to
/// `e^{−2πiabα} e^{2πibx} δ_{−a}`.
pub fn u_r(psi: &GridField, freq: &Frequency) -> Result<GridField> {
    let c = psi.coefficients();
    psi.check_band(&c, true)?;
    let w = psi.width();
    let mut out = vec![C64::new(0.0, 0.0); psi.g * w];
    for a in 0..psi.g {
        let fa = psi.signed(a);
        if fa.abs() > psi.n_half as i64 {
            continue;
        }
        for j in 0..w {
            let b = j as i64 - psi.n_half as i64;
            let z = c[a * w + j];
            if z == C64::new(0.0, 0.0) {
                continue;
            }
            let ph = e2pi_re(-freq.multiple(fa * b));
            let dst = psi.bin(b) * w + (-fa + psi.n_half as i64) as usize;
            out[dst] += z * ph;
        }
    }
    Ok(GridField::from_coeff_array(psi.g, psi.n_half, &out))
}

/// Inverse of [`u_r`]: `e^{2πiAx}δ_B ↦ e^{−2πiABα} e^{−2πiBx} δ_A`.
pub fn u_r_inv(psi: &GridField, freq: &Frequency) -> Result<GridField> {
    let c = psi.coefficients();
    psi.check_band(&c, true)?;
    let w = psi.width();
    let mut out = vec![C64::new(0.0, 0.0); psi.g * w];
    for a in 0..psi.g {
        let fa = psi.signed(a);
        if fa.abs() > psi.n_half as i64 {
            continue;
        }
        for j in 0..w {
            let b = j as i64 - psi.n_half as i64;
            let z = c[a * w + j];
            if z == C64::new(0.0, 0.0) {
                continue;
            }
            let ph = e2pi_re(-freq.multiple(fa * b));
            let dst = psi.bin(-b) * w + (fa + psi.n_half as i64) as usize;
            out[dst] += z * ph;
        }
    }
    Ok(GridField::from_coeff_array(psi.g, psi.n_half, &out))
}

/// `(U_k ψ)(x, n) = e^{2πink(nα/2 + x)} ψ(x, n)`, pointwise on the grid.
pub fn u_k(psi: &GridField, k: i64, freq: &Frequency) -> GridField {
    let half = Frequency::new(freq.hi / 2.0, freq.lo / 2.0);
    let mut out = psi.clone();
    let nh = psi.n_half as i64;
    for i in 0..psi.g {
        let x = psi.x(i);
        for n in -nh..=nh {
            let ph = half.multiple(k * n * n) + ((n * k) as f64 * x).fract();
            *out.at_mut(i, n) *= e2pi_re(ph);
        }
    }
    out
}

/// `(S_l ψ)(x, n) = ψ(x + lα, n − l)`; the `x`-translation is spectral.
/// Sites shifted out of the window are dropped.
pub fn shift(psi: &GridField, l: i64, freq: &Frequency) -> Result<GridField> {
    let c = psi.coefficients();
    psi.check_band(&c, false)?;
    let w = psi.width();
    let nh = psi.n_half as i64;
    let mut out = vec![C64::new(0.0, 0.0); psi.g * w];
    let t = freq.multiple(l);
    for a in 0..psi.g {
        let fa = psi.signed(a);
        let ph = e2pi_re(fa as f64 * t);
        for n in -nh..=nh {
            let src = n - l;
            if src.abs() > nh {
                continue;
            }
            out[a * w + (n + nh) as usize] = c[a * w + (src + nh) as usize] * ph;
        }
    }
    Ok(GridField::from_coeff_array(psi.g, psi.n_half, &out))
}

/// `H_c` applied fiberwise: `c(x+nα)φ(x,n+1) + c̃(x+(n−1)α)φ(x,n−1) + v(x+nα)φ(x,n)`,
/// Dirichlet at the window edge.
pub fn apply_primal(model: &JacobiModel, phi: &GridField) -> GridField {
    let mut out = phi.clone();
    let nh = phi.n_half as i64;
    let a = model.alpha();
    for i in 0..phi.g {
        let x = phi.x(i);
        for n in -nh..=nh {
            let th = model.freq.orbit(x, n);
            let mut acc = model.v.eval_real(th) * phi.at(i, n);
            if n < nh {
                acc += model.c.eval_real(th) * phi.at(i, n + 1);
            }
            if n > -nh {
                acc += model.c.eval_real(th - a).conj() * phi.at(i, n - 1);
            }
            *out.at_mut(i, n) = acc;
        }
    }
    out
}

/// `H̃` applied fiberwise: `Σ_{m'} d_{m'}(x+mα) ψ(x, m−m')`.
pub fn apply_dual(dual: &DualModel, psi: &GridField) -> GridField {
    let mut out = psi.clone();
    let nh = psi.n_half as i64;
    let p = dual.bandwidth as i64;
    for i in 0..psi.g {
        let x = psi.x(i);
        for m in -nh..=nh {
            let y = dual.freq.orbit(x, m);
            let mut acc = C64::new(0.0, 0.0);
            for mp in -p..=p {
                let src = m - mp;
                if src.abs() <= nh {
                    acc += dual.eval(mp, y) * psi.at(i, src);
                }
            }
            *out.at_mut(i, m) = acc;
        }
    }
    out
}

/// `‖(U_R^{−1} H_c U_R − H̃_c) ψ‖ / ‖ψ‖`.
pub fn duality_residual(model: &JacobiModel, psi: &GridField) -> Result<f64> {
    let dual = dualize(model);
    let lhs = u_r_inv(&apply_primal(model, &u_r(psi, &model.freq)?), &model.freq)?;
    let rhs = apply_dual(&dual, psi);
    Ok(lhs.sub(&rhs).norm() / psi.norm())
}

/// Hausdorff distance between two finite sets of reals.
pub fn hausdorff(a: &[f64], b: &[f64]) -> f64 {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let one_side = |from: &[f64], to: &[f64]| -> f64 {
        from.iter()
            .map(|&x| {
                let k = to.partition_point(|&y| y < x);
                let mut d = f64::INFINITY;
                if k < to.len() {
                    d = d.min(to[k] - x);
                }
                if k > 0 {
                    d = d.min(x - to[k - 1]);
                }
                d
            })
            .fold(0.0, f64::max)
    };
    one_side(&sa, &sb).max(one_side(&sb, &sa))
}

/// Sup distance between two phase-averaged empirical distribution functions.
/// Each inner vector carries total weight `1/len(outer)`.
pub fn kolmogorov(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let weighted = |s: &[Vec<f64>], sign: f64| -> Vec<(f64, f64)> {
        let outer = s.len() as f64;
        s.iter()
            .flat_map(|sp| {
                let w = sign / (outer * sp.len().max(1) as f64);
                sp.iter().map(move |&x| (x, w))
            })
            .collect()
    };
    let mut all = weighted(a, 1.0);
    all.extend(weighted(b, -1.0));
    all.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut acc = 0.0f64;
    let mut best = 0.0f64;
    let mut i = 0;
    while i < all.len() {
        let x = all[i].0;
        while i < all.len() && all[i].0 == x {
            acc += all[i].1;
            i += 1;
        }
        best = best.max(acc.abs());
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityLevel {
    pub half_width: usize,
    pub hausdorff: f64,
    pub kolmogorov: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub lambda: [f64; 3],
    pub lambda_hat: [f64; 3],
    pub n_phases: usize,
    pub seed: u64,
    /// Finest window first, then the half-size window for stability.
    pub levels: Vec<DualityLevel>,
}

/// Spectrum and IDS comparison between `H_λ(θ)` and `λ₂·H_{σ(λ)}(x)`.
///
/// Phases are drawn at random for both families; spectra are unions of
/// interior eigenvalues. The dual side is built from [`dualize`], so the
/// `σ` map only enters through the reported `lambda_hat`.
pub fn duality_checks(
    lambda: [f64; 3],
    primal: &JacobiModel,
    n_half: usize,
    n_phases: usize,
    seed: u64,
) -> Result<DualityReport> {
    if !(lambda[1] > 0.0) {
        return Err(Error::InvalidParameters("lambda2 must be positive".into()));
    }
    let dual = dualize(primal);
    let phases: Vec<f64> = (0..n_phases as u64).map(|i| phase_sample(seed, i)).collect();
    let xs: Vec<f64> = (0..n_phases as u64).map(|i| phase_sample(seed ^ 0xd0a1, i)).collect();
    let mut levels = Vec::new();
    for nh in [n_half, n_half / 2] {
        if nh == 0 {
            continue;
        }
        let sp = interior_spectra(|th| build(primal, th, nh), &phases, DEFAULT_BOUNDARY_THRESHOLD)?;
        let sd = interior_spectra(|x| dual.build(x, nh), &xs, DEFAULT_BOUNDARY_THRESHOLD)?;
        let flat_p: Vec<f64> = sp.iter().flatten().copied().collect();
        let flat_d: Vec<f64> = sd.iter().flatten().copied().collect();
        levels.push(DualityLevel { half_width: nh, hausdorff: hausdorff(&flat_p, &flat_d), kolmogorov: kolmogorov(&sp, &sd) });
    }
    let l2 = lambda[1];
    Ok(DualityReport {
        lambda,
        lambda_hat: [lambda[2] / l2, 1.0 / l2, lambda[0] / l2],
        n_phases,
        seed,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::{expand, HighPrecisionReal};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(l: (f64, f64, f64)) -> JacobiModel {
        let cf = expand(&HighPrecisionReal::golden(1024), 40).unwrap();
        let a = cf.frequency().value();
        let c = TorusSymbol::from_modes(
            &[(-1, C64::new(l.0, 0.0)), (0, C64::new(l.1, 0.0)), (1, C64::new(l.2, 0.0))],
            true,
            a,
            f64::INFINITY,
        );
        JacobiModel::new(c, TorusSymbol::cosine(a), cf).unwrap()
    }

    fn random_field(seed: u64, band: i64, support: i64) -> GridField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = Vec::new();
        for a in -band..=band {
            for n in -support..=support {
                coeffs.push((a, n, C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)));
            }
        }
        GridField::from_coefficients(64, 32, &coeffs).unwrap()
    }

    #[test]
    fn amo_at_coupling_one_is_self_dual() {
        let m = model((0.0, 1.0, 0.0));
        let d = dualize(&m);
        assert_eq!(d.bandwidth, 1);
        for j in 0..50 {
            let x = j as f64 / 50.0;
            assert!((d.eval(0, x).re - 2.0 * (2.0 * std::f64::consts::PI * x).cos()).abs() < 1e-14);
            assert!((d.eval(1, x) - C64::new(1.0, 0.0)).norm() < 1e-14);
            assert!((d.eval(-1, x) - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn ehm_dual_is_scaled_ehm() {
        let l = (0.1, 0.5, 0.2);
        let m = model(l);
        let d = dualize(&m);
        assert!(d.hermiticity_defect(256) < 1e-12);
        let s = model((l.2 / l.1, 1.0 / l.1, l.0 / l.1));
        for x in [0.0, 0.37, 0.81] {
            let a = d.build(x, 10).matrix.to_dense();
            let b = build(&s, x, 10).matrix.to_dense() * C64::new(l.1, 0.0);
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn dual_covariance() {
        let d = dualize(&model((0.1, 0.5, 0.2)));
        let x = 0.29;
        let h0 = d.build(x, 12);
        let h1 = d.build(d.freq.orbit(x, 1), 12);
        for i in 0..24 {
            for j in 0..24 {
                assert!((h1.matrix.get(i, j) - h0.matrix.get(i + 1, j + 1)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn transforms_are_isometric_and_inverse() {
        let f = model((0.1, 0.5, 0.2)).freq;
        for seed in 0..5 {
            let psi = random_field(seed, 8, 8);
            let r = u_r(&psi, &f).unwrap();
            assert!((r.norm() - psi.norm()).abs() < 1e-10 * psi.norm());
            let back = u_r_inv(&r, &f).unwrap();
            assert!(back.sub(&psi).norm() < 1e-10 * psi.norm());
            assert_eq!(u_k(&psi, 0, &f), psi);
            assert!((u_k(&psi, 2, &f).norm() - psi.norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn guard_band_is_enforced() {
        let f = model((0.1, 0.5, 0.2)).freq;
        let psi = GridField::from_coefficients(64, 32, &[(30, 0, C64::new(1.0, 0.0))]).unwrap();
        assert!(matches!(u_r(&psi, &f), Err(Error::AliasingBudgetExceeded)));
    }

    #[test]
    fn shift_identities() {
        let f = model((0.1, 0.5, 0.2)).freq;
        let psi = random_field(9, 6, 6);
        for l in -3..=3 {
            let lhs = u_r(&shift(&psi, l, &f).unwrap(), &f).unwrap();
            let mut rhs = u_r(&psi, &f).unwrap();
            for i in 0..rhs.g {
                let ph = e2pi_re(l as f64 * rhs.x(i));
                for n in -32..=32 {
                    *rhs.at_mut(i, n) *= ph;
                }
            }
            assert!(lhs.sub(&rhs).norm() < 1e-10 * psi.norm());
            for k in -2..=2 {
                let lhs = u_k(&shift(&psi, l, &f).unwrap(), k, &f);
                let mut rhs = shift(&u_k(&psi, k, &f), l, &f).unwrap();
                let half = Frequency::new(f.hi / 2.0, f.lo / 2.0).multiple(l * l * k);
                for i in 0..rhs.g {
                    let ph = e2pi_re((l * k) as f64 * rhs.x(i) + half);
                    for n in -32..=32 {
                        *rhs.at_mut(i, n) *= ph;
                    }
                }
                assert!(lhs.sub(&rhs).norm() < 1e-10 * psi.norm(), "l={l} k={k}");
            }
        }
    }

    #[test]
    fn conjugation_by_duality() {
        for l in [(0.0, 1.0, 0.0), (0.1, 0.5, 0.2), (0.3, 0.6, 0.1)] {
            let m = model(l);
            let psi = random_field(3, 8, 8);
            let r = duality_residual(&m, &psi).unwrap();
            assert!(r < 1e-10, "{l:?}: {r}");
        }
        // free Laplacian: dual is multiplication by 2cos2πx
        let cf = expand(&HighPrecisionReal::golden(1024), 40).unwrap();
        let a = cf.frequency().value();
        let free = JacobiModel::new(
            TorusSymbol::constant(C64::new(1.0, 0.0), true, a),
            TorusSymbol::constant(C64::new(0.0, 0.0), false, a),
            cf,
        )
        .unwrap();
        let d = dualize(&free);
        assert!(d.eval(1, 0.3).norm() < 1e-15);
        assert!(duality_residual(&free, &random_field(4, 8, 8)).unwrap() < 1e-10);
    }

    #[test]
    fn binary_roundtrip() {
        let psi = random_field(1, 3, 3);
        let mut buf = Vec::new();
        psi.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 16 * 64 * 65);
        let back = GridField::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, psi);
    }

    #[test]
    fn distances() {
        assert_eq!(hausdorff(&[0.0, 1.0], &[0.1, 0.9]), 0.1);
        let a = vec![vec![0.0, 1.0]];
        let b = vec![vec![0.5, 1.5]];
        assert!((kolmogorov(&a, &b) - 0.5).abs() < 1e-15);
        assert_eq!(kolmogorov(&a, &a), 0.0);
    }
}
