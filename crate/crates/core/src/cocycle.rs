//! Transfer and normalized cocycles of a Jacobi model, Lyapunov exponents
//! and fibered rotation numbers.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diophantine::{ContinuedFraction, Frequency};
use crate::error::{Error, Result};
use crate::symbol::{TorusSymbol, C64};

pub type M2 = Matrix2<C64>;

/// Hopping below this modulus is treated as vanishing.
pub const HOPPING_FLOOR: f64 = 1e-12;

/// `(H u)_n = c(θ+nα)u_{n+1} + c̃(θ+(n−1)α)u_{n−1} + v(θ+nα)u_n`.
#[derive(Debug, Clone)]
pub struct JacobiModel {
    pub c: TorusSymbol,
    pub c_tilde: TorusSymbol,
    pub v: TorusSymbol,
    pub cf: ContinuedFraction,
    pub freq: Frequency,
    /// Half-width of the zero-free strip of `c`; `None` when `c` vanishes
    /// on the torus.
    c_zero_free: Option<f64>,
}

impl JacobiModel {
    pub fn new(c: TorusSymbol, v: TorusSymbol, cf: ContinuedFraction) -> Result<Self> {
        if cf.depth() < 3 {
            return Err(Error::InvalidParameters("frequency needs at least 3 partial quotients".into()));
        }
        if !v.is_self_adjoint(1e-12) {
            return Err(Error::InvalidParameters("potential coefficients must satisfy v_k = conj(v_-k)".into()));
        }
        if !c.is_real_fourier(1e-12) {
            return Err(Error::InvalidParameters("hopping coefficients must be real".into()));
        }
        let freq = cf.frequency();
        let a = freq.value();
        let c = c.with_alpha(a);
        let v = v.with_alpha(a);
        let c_zero_free = if c.min_modulus(4096) > 1e-8 {
            let z = c.zeros_on_torus()?;
            Some(z.roots.iter().map(|r| r.norm().ln().abs() / (2.0 * PI)).fold(f64::INFINITY, f64::min))
        } else {
            None
        };
        Ok(JacobiModel { c_tilde: c.tilde(), c, v, cf, freq, c_zero_free })
    }

    pub fn alpha(&self) -> f64 {
        self.freq.value()
    }

    /// Strip on which `|c|` continues analytically as `√(c·c̃)` and `v` is
    /// certified.
    pub fn normalized_strip(&self) -> f64 {
        let a = self.c_zero_free.map_or(0.0, |h| h.min(self.c.strip).min(self.c_tilde.strip));
        a.min(self.v.strip)
    }

    /// Continuation of `|c|` to `θ + iε`. The sign of the root is arbitrary;
    /// it cancels in norms of cocycle products.
    fn abs_c_at(&self, th: C64) -> Result<C64> {
        if self.c_zero_free.is_none() {
            return Err(Error::VanishesOnTorus { min_modulus: 0.0 });
        }
        Ok((self.c.eval(th)? * self.c_tilde.eval(th)?).sqrt())
    }

    /// `‖v‖_0 + 2‖c‖_0` on the real torus, bounding the spectrum.
    pub fn spectral_bound(&self) -> f64 {
        self.v.l1_norm() + 2.0 * self.c.l1_norm()
    }
}

#[derive(Debug, Clone)]
pub enum CocycleKind {
    Transfer,
    Normalized,
    /// Entries `[a11, a12, a21, a22]`.
    Custom(Box<[TorusSymbol; 4]>),
}

#[derive(Debug, Clone)]
pub struct Cocycle {
    pub model: JacobiModel,
    pub energy: C64,
    pub kind: CocycleKind,
    /// Imaginary part added to every phase.
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_iter: u64,
    pub n_phases: usize,
    pub method: String,
    pub seed: u64,
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

impl Cocycle {
    pub fn new(model: JacobiModel, energy: f64, kind: CocycleKind) -> Self {
        Cocycle { model, energy: c(energy), kind, epsilon: 0.0 }
    }

    /// Constant-in-θ custom cocycle over the given model's frequency.
    pub fn constant(model: JacobiModel, m: [[f64; 2]; 2]) -> Self {
        let a = model.alpha();
        let s = |x: f64| TorusSymbol::constant(c(x), false, a);
        let entries = [s(m[0][0]), s(m[0][1]), s(m[1][0]), s(m[1][1])];
        Cocycle { model, energy: c(0.0), kind: CocycleKind::Custom(Box::new(entries)), epsilon: 0.0 }
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.epsilon = eps;
        self
    }

    fn kind_name(&self) -> &'static str {
        match self.kind {
            CocycleKind::Transfer => "transfer",
            CocycleKind::Normalized => "normalized",
            CocycleKind::Custom(_) => "custom",
        }
    }

    /// Largest |ε| for which every symbol used by this cocycle is certified.
    pub fn strip(&self) -> f64 {
        let m = &self.model;
        match &self.kind {
            CocycleKind::Transfer => m.c.strip.min(m.v.strip),
            CocycleKind::Normalized => m.normalized_strip(),
            CocycleKind::Custom(e) => e.iter().map(|s| s.strip).fold(f64::INFINITY, f64::min),
        }
    }

    /// The matrix at the phase `θ + iε`.
    pub fn matrix_at(&self, theta: f64) -> Result<M2> {
        let m = &self.model;
        let a = m.alpha();
        let th = C64::new(theta, self.epsilon);
        let real = self.epsilon == 0.0;
        match &self.kind {
            CocycleKind::Transfer => {
                let cv = if real { m.c.eval_real(theta) } else { m.c.eval(th)? };
                if cv.norm() < HOPPING_FLOOR {
                    return Err(Error::SingularHopping { index: 0, modulus: cv.norm() });
                }
                let ct = if real { m.c_tilde.eval_real(theta - a) } else { m.c_tilde.eval(th - a)? };
                let vv = if real { m.v.eval_real(theta) } else { m.v.eval(th)? };
                Ok(transfer(self.energy, vv, cv, ct))
            }
            CocycleKind::Normalized => {
                let (p, q) = if real {
                    (c(m.c.eval_real(theta).norm()), c(m.c.eval_real(theta - a).norm()))
                } else {
                    (m.abs_c_at(th)?, m.abs_c_at(th - a)?)
                };
                if p.norm() < HOPPING_FLOOR || q.norm() < HOPPING_FLOOR {
                    return Err(Error::SingularHopping { index: 0, modulus: p.norm().min(q.norm()) });
                }
                let vv = if real { m.v.eval_real(theta) } else { m.v.eval(th)? };
                Ok(normalized(self.energy, vv, p, q))
            }
            CocycleKind::Custom(e) => {
                let ev = |s: &TorusSymbol| if real { Ok(s.eval_real(theta)) } else { s.eval(th) };
                Ok(M2::new(ev(&e[0])?, ev(&e[1])?, ev(&e[2])?, ev(&e[3])?))
            }
        }
    }

    /// Orbit stepper producing `A(θ + kα)` for consecutive `k`, reusing the
    /// previous hopping value on the real axis.
    fn stepper(&self, theta0: f64, k0: i64) -> Stepper<'_> {
        Stepper { co: self, theta0, k: k0, prev: None }
    }

    /// `A(θ+bα)⋯A(θ+aα)`, returned as `(M, s)` with the product equal to
    /// `e^s·M` and `max|M_ij| = 1` (identity with `s = 0` when `b < a`).
    pub fn finite_product_scaled(&self, theta: f64, a: i64, b: i64) -> Result<(M2, f64)> {
        let mut m = M2::identity();
        let mut log = 0.0;
        if b < a {
            return Ok((m, 0.0));
        }
        let mut st = self.stepper(theta, a);
        for _ in a..=b {
            m = st.next_matrix()? * m;
            let s = max_abs(&m);
            if s == 0.0 || !s.is_finite() {
                return Err(Error::Contract("degenerate product".into()));
            }
            m /= c(s);
            log += s.ln();
        }
        Ok((m, log))
    }

    /// Ordered product `A(θ+bα)⋯A(θ+aα)`.
    pub fn finite_product(&self, theta: f64, a: i64, b: i64) -> Result<M2> {
        let (m, s) = self.finite_product_scaled(theta, a, b)?;
        Ok(m * c(s.exp()))
    }

    /// `(1/n) ln‖A_n(θ)‖` for one phase, with per-step rescaling.
    pub fn log_norm_growth(&self, theta: f64, n_iter: u64) -> Result<f64> {
        let mut m = M2::identity();
        let mut log = 0.0;
        let mut st = self.stepper(theta, 0);
        for _ in 0..n_iter {
            m = st.next_matrix()? * m;
            let s = row_norm_max(&m);
            m /= c(s);
            log += s.ln();
        }
        Ok((log + op_norm(&m).ln()) / n_iter as f64)
    }

    /// Lyapunov exponent averaged over `n_phases` random phases.
    pub fn lyapunov(&self, n_iter: u64, n_phases: usize, seed: u64) -> Result<CocycleEstimate> {
        if n_iter < 1000 || n_phases == 0 {
            return Err(Error::InvalidParameters("lyapunov needs n_iter >= 1000 and n_phases >= 1".into()));
        }
        let vals: Vec<f64> = (0..n_phases)
            .into_par_iter()
            .map(|i| self.log_norm_growth(phase_sample(seed, i as u64), n_iter))
            .collect::<Result<_>>()?;
        let (mean, stderr) = mean_stderr(&vals);
        Ok(CocycleEstimate {
            value: mean,
            stderr,
            n_iter,
            n_phases,
            method: format!("rescaled-product/{}", self.kind_name()),
            seed,
        })
    }

    /// One Lyapunov run per `ε`, with phases complexified to `θ + iε`.
    pub fn lyapunov_strip(&self, eps_list: &[f64], n_iter: u64, n_phases: usize, seed: u64) -> Result<Vec<CocycleEstimate>> {
        let strip = self.strip();
        for &e in eps_list {
            if e.abs() > strip {
                return Err(Error::OutsideStrip { theta: e, strip });
            }
        }
        eps_list
            .iter()
            .map(|&e| self.clone().with_epsilon(e).lyapunov(n_iter, n_phases, seed))
            .collect()
    }

    /// Fibered rotation number in `[0, 1/2]`.
    ///
    /// For Jacobi-form matrices (second row `[positive, 0]`) the lift is
    /// exact: an angle in `(−1/4, 1/4) + k` is mapped into `(0, 1/2) + k`
    /// and one in `(1/4, 3/4) + k` into `(1/2, 1) + k`. Other real cocycles
    /// fold each increment into `(−1/2, 1/2]`.
    pub fn rotation_number(&self, n_iter: u64, theta0: f64) -> Result<f64> {
        if self.energy.im != 0.0 || self.epsilon != 0.0 {
            return Err(Error::InvalidParameters("rotation number needs real energy and phase".into()));
        }
        let jacobi = matches!(self.kind, CocycleKind::Normalized | CocycleKind::Transfer);
        if matches!(self.kind, CocycleKind::Transfer) && !self.model.c.is_real_fourier(0.0) {
            return Err(Error::InvalidParameters("transfer cocycle is not real".into()));
        }
        let mut st = self.stepper(theta0, 0);
        let (mut x, mut y) = (1.0f64, 0.0f64);
        // angle in turns = turns + frac, frac ∈ [−1/4, 3/4)
        let mut turns: i64 = 0;
        let mut frac = 0.0f64;
        let mut fold_sum = 0.0f64;
        let mut fold_comp = 0.0f64;
        for _ in 0..n_iter {
            let m = st.next_matrix()?;
            if m.iter().any(|z| z.im != 0.0) && !jacobi {
                return Err(Error::InvalidParameters("rotation number needs a real cocycle".into()));
            }
            let nx = m[(0, 0)].re * x + m[(0, 1)].re * y;
            let ny = m[(1, 0)].re * x + m[(1, 1)].re * y;
            let r = nx.hypot(ny);
            let (nx, ny) = (nx / r, ny / r);
            let ang = ny.atan2(nx) / (2.0 * PI); // (−1/2, 1/2]
            if jacobi {
                let new_frac = if frac < 0.25 {
                    ang.rem_euclid(1.0).min(0.5)
                } else {
                    let a = ang.rem_euclid(1.0);
                    if a < 0.5 { 0.5 } else { a }
                };
                // renormalise new_frac into [−1/4, 3/4)
                let (t, f) = if new_frac >= 0.75 { (1, new_frac - 1.0) } else { (0, new_frac) };
                turns += t;
                frac = f;
            } else {
                let old = y.atan2(x) / (2.0 * PI);
                let mut d = ang - old;
                d -= d.round();
                if d == -0.5 {
                    d = 0.5;
                }
                // Kahan
                let yk = d - fold_comp;
                let tk = fold_sum + yk;
                fold_comp = (tk - fold_sum) - yk;
                fold_sum = tk;
            }
            x = nx;
            y = ny;
        }
        let total = if jacobi { turns as f64 + frac } else { fold_sum };
        let rho = total / n_iter as f64;
        let rho = rho.rem_euclid(1.0);
        Ok(if rho > 0.5 { 1.0 - rho } else { rho }.clamp(0.0, 0.5))
    }
}

struct Stepper<'a> {
    co: &'a Cocycle,
    theta0: f64,
    k: i64,
    /// Hopping-related value at the previous orbit point (real axis only).
    prev: Option<C64>,
}

impl Stepper<'_> {
    fn next_matrix(&mut self) -> Result<M2> {
        let co = self.co;
        let m = &co.model;
        let theta = m.freq.orbit(self.theta0, self.k);
        let idx = self.k;
        self.k += 1;
        if co.epsilon != 0.0 || matches!(co.kind, CocycleKind::Custom(_)) {
            return co.matrix_at(theta).map_err(|e| reindex(e, idx));
        }
        let a = m.alpha();
        let cv = m.c.eval_real(theta);
        if cv.norm() < HOPPING_FLOOR {
            return Err(Error::SingularHopping { index: idx, modulus: cv.norm() });
        }
        let prev = match self.prev {
            Some(p) => p,
            None => m.c.eval_real(theta - a),
        };
        self.prev = Some(cv);
        let vv = m.v.eval_real(theta);
        match co.kind {
            CocycleKind::Transfer => Ok(transfer(co.energy, vv, cv, prev.conj())),
            CocycleKind::Normalized => {
                let q = prev.norm();
                if q < HOPPING_FLOOR {
                    return Err(Error::SingularHopping { index: idx - 1, modulus: q });
                }
                Ok(normalized(co.energy, vv, c(cv.norm()), c(q)))
            }
            CocycleKind::Custom(_) => unreachable!(),
        }
    }
}

fn reindex(e: Error, idx: i64) -> Error {
    match e {
        Error::SingularHopping { modulus, .. } => Error::SingularHopping { index: idx, modulus },
        other => other,
    }
}

/// `[[(E−v)/c, −c̃(θ−α)/c], [1, 0]]`.
pub fn transfer(e: C64, v: C64, cv: C64, ct_prev: C64) -> M2 {
    M2::new((e - v) / cv, -ct_prev / cv, c(1.0), c(0.0))
}

/// `(|c|(θ)|c|(θ−α))^{−1/2} [[E−v, −|c|(θ−α)], [|c|(θ), 0]]`.
pub fn normalized(e: C64, v: C64, abs_c: C64, abs_c_prev: C64) -> M2 {
    let s = (abs_c * abs_c_prev).sqrt();
    M2::new((e - v) / s, -abs_c_prev / s, abs_c / s, c(0.0))
}

fn max_abs(m: &M2) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn row_norm_max(m: &M2) -> f64 {
    let r0 = (m[(0, 0)].norm_sqr() + m[(0, 1)].norm_sqr()).sqrt();
    let r1 = (m[(1, 0)].norm_sqr() + m[(1, 1)].norm_sqr()).sqrt();
    r0.max(r1)
}

/// Operator 2-norm of a 2×2 complex matrix.
pub fn op_norm(m: &M2) -> f64 {
    let f2: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm();
    let disc = (f2 * f2 - 4.0 * det * det).max(0.0).sqrt();
    ((f2 + disc) / 2.0).sqrt()
}

/// Uniform phase `i` of the stream seeded by `seed`, independent of scheduling.
pub fn phase_sample(seed: u64, i: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng.gen::<f64>()
}

pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Convexity of `L(ε)` on an increasing grid, up to `tol`.
pub fn is_convex(eps: &[f64], vals: &[f64], tol: f64) -> bool {
    eps.windows(3).zip(vals.windows(3)).all(|(e, v)| {
        let t = (e[1] - e[0]) / (e[2] - e[0]);
        v[1] <= (1.0 - t) * v[0] + t * v[2] + tol
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::{expand, HighPrecisionReal};
    use approx::assert_abs_diff_eq;

    fn golden() -> ContinuedFraction {
        expand(&HighPrecisionReal::golden(1024), 40).unwrap()
    }

    fn model(l: (f64, f64, f64)) -> JacobiModel {
        let cf = golden();
        let a = cf.frequency().value();
        let c = TorusSymbol::from_modes(&[(-1, c(l.0)), (0, c(l.1)), (1, c(l.2))], true, a, f64::INFINITY).trimmed(0.0);
        JacobiModel::new(c, TorusSymbol::cosine(a), cf).unwrap()
    }

    fn free() -> JacobiModel {
        let cf = golden();
        let a = cf.frequency().value();
        JacobiModel::new(TorusSymbol::constant(c(1.0), true, a), TorusSymbol::constant(c(0.0), false, a), cf).unwrap()
    }

    #[test]
    fn matrix_examples() {
        let n = Cocycle::new(free(), 0.0, CocycleKind::Normalized).matrix_at(0.3).unwrap();
        assert_eq!(n, M2::new(c(0.0), c(-1.0), c(1.0), c(0.0)));
        let t = Cocycle::new(free(), 0.7, CocycleKind::Transfer).matrix_at(0.3).unwrap();
        assert_eq!(t, M2::new(c(0.7), c(-1.0), c(1.0), c(0.0)));
        let m = model((0.2, 0.5, 0.3));
        let th = 0.5 - m.alpha() / 2.0;
        let co = Cocycle::new(m, 0.0, CocycleKind::Transfer);
        assert!(matches!(co.matrix_at(th), Err(Error::SingularHopping { .. })));
    }

    #[test]
    fn determinants() {
        let m = model((0.1, 0.5, 0.2));
        let a = m.alpha();
        let tr = Cocycle::new(m.clone(), 0.3, CocycleKind::Transfer);
        let nm = Cocycle::new(m.clone(), 0.3, CocycleKind::Normalized);
        for j in 0..4096 {
            let th = j as f64 / 4096.0;
            let d = nm.matrix_at(th).unwrap().determinant();
            assert!((d.norm() - 1.0).abs() < 1e-10);
            let d = tr.matrix_at(th).unwrap().determinant();
            let expect = m.c.eval_real(th - a).conj() / m.c.eval_real(th);
            assert!((d - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_diagonal_growth() {
        let co = Cocycle::constant(free(), [[2.0, 0.0], [0.0, 0.5]]);
        let e = co.lyapunov(1000, 4, 7).unwrap();
        assert_abs_diff_eq!(e.value, 2f64.ln(), epsilon = 1e-12);
        let s = co.lyapunov_strip(&[0.0, 0.3], 1000, 2, 7).unwrap();
        assert_abs_diff_eq!(s[1].value, 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn products() {
        let co = Cocycle::new(model((0.1, 0.5, 0.2)), 0.4, CocycleKind::Normalized);
        assert_eq!(co.finite_product(0.2, 3, 2).unwrap(), M2::identity());
        let p = co.finite_product(0.2, 0, 0).unwrap();
        assert!((p - co.matrix_at(0.2).unwrap()).norm() < 1e-14);
        let p = co.finite_product(0.2, 0, 2).unwrap();
        let f = co.model.freq;
        let q = co.matrix_at(f.orbit(0.2, 2)).unwrap() * co.matrix_at(f.orbit(0.2, 1)).unwrap() * co.matrix_at(0.2).unwrap();
        assert!((p - q).norm() < 1e-12);
    }

    #[test]
    fn rotation_limits() {
        let m = model((0.0, 0.5, 0.0));
        let big = m.spectral_bound() + 1.0;
        let hi = Cocycle::new(m.clone(), big, CocycleKind::Normalized);
        assert!(hi.rotation_number(5000, 0.1).unwrap() < 1e-3);
        let lo = Cocycle::new(m.clone(), -big, CocycleKind::Normalized);
        assert!((lo.rotation_number(5000, 0.1).unwrap() - 0.5).abs() < 1e-3);
        let mid = Cocycle::new(m, 0.0, CocycleKind::Normalized);
        assert_abs_diff_eq!(mid.rotation_number(200_000, 0.1).unwrap(), 0.25, epsilon = 2e-3);
    }

    #[test]
    fn rotation_is_monotone_in_energy() {
        let m = model((0.1, 0.5, 0.2));
        let mut last = 0.5;
        for i in 0..40 {
            let e = -3.5 + 7.0 * i as f64 / 39.0;
            let r = Cocycle::new(m.clone(), e, CocycleKind::Normalized).rotation_number(20_000, 0.0).unwrap();
            assert!(r <= last + 2e-4, "E={e}: {r} > {last}");
            last = r;
        }
    }

    #[test]
    fn submultiplicative_on_matched_phases() {
        let co = Cocycle::new(model((0.1, 0.5, 0.2)), 0.3, CocycleKind::Normalized);
        let n = 500i64;
        let f = co.model.freq;
        for i in 0..16 {
            let th = phase_sample(3, i);
            let (m, s) = co.finite_product_scaled(th, 0, n - 1).unwrap();
            let l_n = s + op_norm(&m).ln();
            let (m, s) = co.finite_product_scaled(f.orbit(th, n), 0, n - 1).unwrap();
            let l_shift = s + op_norm(&m).ln();
            let (m, s) = co.finite_product_scaled(th, 0, 2 * n - 1).unwrap();
            let l_2n = s + op_norm(&m).ln();
            assert!(l_2n <= l_n + l_shift + 1e-9);
        }
    }

    #[test]
    fn complexified_dual_is_flat_then_linear() {
        let l = [0.1, 0.5, 0.2];
        let dual = crate::ehm::model(crate::ehm::sigma(l), golden()).unwrap();
        let kink = crate::ehm::lyapunov_closed_form(l).unwrap() / (2.0 * PI);
        let co = Cocycle::new(dual, 0.6164, CocycleKind::Normalized);
        let eps = [0.0, 0.05, 0.1, kink + 0.03, kink + 0.08];
        let r = co.lyapunov_strip(&eps, 50_000, 2, 1).unwrap();
        for x in &r[..3] {
            assert!(x.value < 5e-3, "{}", x.value);
        }
        let slope = (r[4].value - r[3].value) / 0.05;
        assert!((slope - 2.0 * PI).abs() < 0.2, "{slope}");
        assert!((r[3].value - 2.0 * PI * 0.03).abs() < 0.03);
    }

}
