//! Cohomological equations, the `M_c` conjugation between the raw and the
//! normalized cocycle, least-squares conjugacies to rotations and the dual
//! eigenvectors built from them.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::cocycle::{Cocycle, CocycleKind, JacobiModel, M2};
use crate::duality::dualize;
use crate::error::{Error, Result};
use crate::symbol::{e2pi_re, fourier_project, SymbolJson, TorusSymbol, C64};

const RESIDUAL_GRID: usize = 1 << 13;

#[derive(Debug, Clone)]
pub struct CohomologySolution {
    pub g: TorusSymbol,
    pub rhs: TorusSymbol,
    pub residual_sup: f64,
    /// `min |e^{2πikα} − 1|` over the solved modes.
    pub small_divisor_floor: f64,
}

/// Solves `g(θ+α) − g(θ) = rhs(θ)` by Fourier division with `ĝ_0 = 0`.
pub fn solve_cohomology(rhs: &TorusSymbol, alpha: f64, k_out: usize) -> Result<CohomologySolution> {
    let mean = rhs.coeff(0).norm();
    if mean >= 1e-8 {
        return Err(Error::MeanNotZero { mean });
    }
    let rhs = rhs.clone().with_alpha(alpha);
    let k = k_out as i64;
    let mut floor = f64::INFINITY;
    let mut coeffs = Vec::with_capacity(2 * k_out + 1);
    for j in -k..=k {
        if j == 0 {
            coeffs.push(C64::new(0.0, 0.0));
            continue;
        }
        let div = e2pi_re(j as f64 * alpha) - 1.0;
        floor = floor.min(div.norm());
        let g = rhs.coeff(j) / div;
        if g.norm() > 1e12 {
            return Err(Error::SmallDivisorBlowup { mode: j, magnitude: g.norm() });
        }
        coeffs.push(g);
    }
    let g = TorusSymbol::new(-k, coeffs, rhs.half_phase, alpha, rhs.strip);
    let residual_sup = cohomology_residual(&g, &rhs, RESIDUAL_GRID);
    Ok(CohomologySolution { g, rhs, residual_sup, small_divisor_floor: floor })
}

/// `sup_j |g(θ_j+α) − g(θ_j) − rhs(θ_j)|` on a uniform grid.
pub fn cohomology_residual(g: &TorusSymbol, rhs: &TorusSymbol, grid: usize) -> f64 {
    let a = g.alpha;
    (0..grid)
        .map(|j| {
            let th = j as f64 / grid as f64;
            (g.eval_real(th + a) - g.eval_real(th) - rhs.eval_real(th)).norm()
        })
        .fold(0.0, f64::max)
}

/// `ln s − ln s̃` with `s̃(θ) = s(−θ−α)`, using one continuous branch of
/// `ln s`. Needs `w(s) = 0`.
pub fn log_ratio_rhs(s: &TorusSymbol, k_out: usize) -> Result<TorusSymbol> {
    let grid = (8 * k_out + 64).next_power_of_two().max(1024);
    let w = s.winding(grid)?;
    if w != 0 {
        return Err(Error::InvalidParameters(format!("symbol has winding {w}, expected 0")));
    }
    let shift = s.shift();
    let vals: Vec<C64> = (0..grid).map(|j| s.eval_real(j as f64 / grid as f64 - shift)).collect();
    let args = unwrap_args(&vals);
    let logs: Vec<C64> = vals.iter().zip(&args).map(|(z, &a)| C64::new(z.norm().ln(), a)).collect();
    let l = fourier_project(&logs, k_out, s.half_phase, s.alpha);
    let fitted = l.fitted_strip();
    let strip = if fitted.is_finite() { 0.9 * fitted } else { s.strip };
    let l = l.with_strip(strip);
    Ok(l.add(&l.reflected().scaled(C64::new(-1.0, 0.0))))
}

fn unwrap_args(vals: &[C64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(vals.len());
    let mut acc = vals[0].arg();
    out.push(acc);
    for w in vals.windows(2) {
        acc += (w[1] / w[0]).arg();
        out.push(acc);
    }
    out
}

/// Solution `f = g/2` of `s/|s| = e^{f(θ+α) − f(θ)}` together with the max
/// pointwise error of that identity on a grid.
pub fn phase_coboundary(s: &TorusSymbol, k_out: usize) -> Result<(TorusSymbol, f64)> {
    let rhs = log_ratio_rhs(s, k_out)?;
    let sol = solve_cohomology(&rhs, s.alpha, k_out)?;
    let f = sol.g.scaled(C64::new(0.5, 0.0));
    let a = s.alpha;
    let mut err: f64 = 0.0;
    for j in 0..RESIDUAL_GRID {
        let th = (j as f64 + 0.5) / RESIDUAL_GRID as f64;
        let z = s.eval_real(th);
        let lhs = z / z.norm();
        let rhs = (f.eval_real(th + a) - f.eval_real(th)).exp();
        err = err.max((lhs - rhs).norm());
    }
    Ok((f, err))
}

/// Which cover the branch of `√(c/c̃)` is taken on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lift {
    #[serde(rename = "T")]
    Torus,
    #[serde(rename = "2T")]
    Double,
}

/// Sup-norm over a grid of `D_{c,E}(θ) − M_c(θ+α) D_{|c|,E}(θ) M_c(θ)^{−1}`.
///
/// The branch of `√(c/c̃)` comes from unwrapping `arg(c/c̃)` along the grid
/// and halving; it closes on `T` exactly when `w(c/c̃)/2` is an integer.
/// On the real torus `c/c̃ = c/c̄` winds `2w(c)` times, so the `T` branch
/// always closes and the `2T` lift gives the same residual. The branch is
/// anchored at `c(0)/|c(0)|`.
pub fn mc_conjugation_check(model: &JacobiModel, energy: f64, grid: usize, lift: Lift) -> Result<f64> {
    let c = &model.c;
    let a = model.alpha();
    let min = c.min_modulus(grid);
    if !(min > 1e-8) {
        return Err(Error::VanishesOnTorus { min_modulus: min });
    }
    let periods = if lift == Lift::Torus { 1 } else { 2 };
    let n = grid * periods;
    let ratio: Vec<C64> = (0..=n)
        .map(|j| {
            let th = j as f64 / grid as f64;
            let z = c.eval_real(th);
            z / z.conj()
        })
        .collect();
    let half_args: Vec<f64> = unwrap_args(&ratio).into_iter().map(|x| x / 2.0).collect();
    let turn = (half_args[n] - half_args[0]) / (2.0 * PI);
    if (turn - turn.round()).abs() > 0.25 {
        return Err(Error::BranchObstruction { winding: (2.0 * turn).round() as i64 });
    }
    // the unwrapped branch is ±c/|c|; only the + sign satisfies the identity
    // (the other one flips both off-diagonal entries), so it is anchored there
    let branch = |th: f64| -> C64 {
        let z = c.eval_real(th);
        z / z.norm()
    };
    let e = C64::new(energy, 0.0);
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let th = (j as f64 + 0.37) / grid as f64;
        let v = model.v.eval_real(th);
        let cv = c.eval_real(th);
        let cp = c.eval_real(th - a);
        let raw = M2::new(e - v, -cp.conj(), cv, C64::new(0.0, 0.0));
        let abs = M2::new(e - v, -C64::new(cp.norm(), 0.0), C64::new(cv.norm(), 0.0), C64::new(0.0, 0.0));
        let m_next = M2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), branch(th));
        let m_inv = M2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), branch(th - a).inv());
        let d = raw - m_next * abs * m_inv;
        worst = worst.max(d.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok(worst)
}

/// Real `B = [[Re w₁, Re w₂], [Im w₁, Im w₂]]` solving
/// `B(θ+α) Ã(θ) ≈ R_ρ B(θ)`, stored through the complex row `w`.
#[derive(Debug, Clone)]
pub struct ConjugacyCandidate {
    pub w: [TorusSymbol; 2],
    pub target_rho: f64,
    pub k_b: usize,
    pub residual: f64,
    pub degree: i64,
    pub det_floor: f64,
    /// Residual below `1e-3` while `min |det B|` is below `1e-8`.
    pub near_singular: bool,
    pub singular_values: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyJson {
    pub rho_target: f64,
    #[serde(rename = "K_B")]
    pub k_b: usize,
    pub residual: f64,
    pub degree: i64,
    pub det_floor: f64,
    /// Row-major `B₁₁, B₁₂, B₂₁, B₂₂`, plain basis.
    #[serde(rename = "B_coeffs")]
    pub b_coeffs: Vec<SymbolJson>,
}

fn real_part(s: &TorusSymbol) -> TorusSymbol {
    let k = s.order();
    let coeffs = (-k..=k).map(|j| (s.coeff(j) + s.coeff(-j).conj()) / 2.0).collect();
    TorusSymbol::new(-k, coeffs, false, s.alpha, s.strip)
}

fn imag_part(s: &TorusSymbol) -> TorusSymbol {
    let k = s.order();
    let coeffs = (-k..=k).map(|j| (s.coeff(j) - s.coeff(-j).conj()) / C64::new(0.0, 2.0)).collect();
    TorusSymbol::new(-k, coeffs, false, s.alpha, s.strip)
}

impl ConjugacyCandidate {
    /// The four real entries of `B` as symbols, row-major.
    pub fn b(&self) -> [TorusSymbol; 4] {
        [real_part(&self.w[0]), real_part(&self.w[1]), imag_part(&self.w[0]), imag_part(&self.w[1])]
    }

    pub fn b_at(&self, theta: f64) -> Matrix2<f64> {
        let w1 = self.w[0].eval_real(theta);
        let w2 = self.w[1].eval_real(theta);
        Matrix2::new(w1.re, w2.re, w1.im, w2.im)
    }

    pub fn to_json(&self) -> ConjugacyJson {
        ConjugacyJson {
            rho_target: self.target_rho,
            k_b: self.k_b,
            residual: self.residual,
            degree: self.degree,
            det_floor: self.det_floor,
            b_coeffs: self.b().iter().map(|s| s.to_json()).collect(),
        }
    }
}

/// Least-squares conjugacy of `co` to `R_{ρ_target}` with Fourier order
/// `k_b`, sampled on `grid` points (0 picks a default).
///
/// Minimizes `Σ_θ |w(θ+α)Ã(θ) − e^{2πiρ}w(θ)|²` over unit coefficient
/// vectors, plus `regularization·Σ|k|²|ŵ_k|²`. The phase freedom
/// `w ↦ e^{iφ}w` is fixed by making the largest coefficient of `w₁` real
/// and positive.
pub fn fit_conjugacy(co: &Cocycle, rho_target: f64, k_b: usize, grid: usize, regularization: f64) -> Result<ConjugacyCandidate> {
    if co.energy.im != 0.0 || co.epsilon != 0.0 {
        return Err(Error::InvalidParameters("conjugacy fit needs a real cocycle".into()));
    }
    if !(-0.5..=0.5).contains(&rho_target) {
        return Err(Error::InvalidParameters("rho_target must lie in [-1/2, 1/2]".into()));
    }
    let a = co.model.alpha();
    let nk = 2 * k_b + 1;
    let g = if grid == 0 { (4 * nk).next_power_of_two().max(64) } else { grid };
    if g < 2 * nk {
        return Err(Error::InvalidParameters("grid must have at least 2(2K_B+1) points".into()));
    }
    let lambda = e2pi_re(rho_target);
    let reg_rows = if regularization > 0.0 { 2 * nk } else { 0 };
    let mut m = DMatrix::<C64>::zeros(2 * g + reg_rows, 2 * nk);
    let scale = 1.0 / (g as f64).sqrt();
    for i in 0..g {
        let th = i as f64 / g as f64;
        let at = co.matrix_at(th)?;
        for kk in 0..nk {
            let k = kk as f64 - k_b as f64;
            let now = e2pi_re(k * th) * scale;
            let next = e2pi_re(k * (th + a)) * scale;
            for j in 0..2 {
                for l in 0..2 {
                    let mut z = next * at[(j, l)];
                    if j == l {
                        z -= lambda * now;
                    }
                    m[(2 * i + l, j * nk + kk)] = z;
                }
            }
        }
    }
    for r in 0..reg_rows {
        let k = (r % nk) as f64 - k_b as f64;
        m[(2 * g + r, r)] = C64::new(regularization.sqrt() * k.abs(), 0.0);
    }
    // thin QR first so the SVD runs on a square factor
    let r = m.qr().r();
    let svd = r.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Contract("SVD did not return vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[x].partial_cmp(&svd.singular_values[y]).unwrap());
    let s0 = svd.singular_values[order[0]];
    let s1 = svd.singular_values[order[1]];
    if s1 - s0 < 1e-8 {
        return Err(Error::IllConditioned { s0, s1 });
    }
    let mut v: Vec<C64> = (0..2 * nk).map(|j| vt[(order[0], j)].conj()).collect();
    let lead = (0..nk).max_by(|&x, &y| v[x].norm().partial_cmp(&v[y].norm()).unwrap()).unwrap();
    let ph = v[lead].conj() / v[lead].norm();
    v.iter_mut().for_each(|z| *z *= ph);
    let sym = |off: usize| TorusSymbol::new(-(k_b as i64), v[off..off + nk].to_vec(), false, a, f64::INFINITY);
    let w = [sym(0), sym(nk)];

    let check = 2 * g;
    let mut residual: f64 = 0.0;
    let mut det_floor = f64::INFINITY;
    for i in 0..check {
        let th = (i as f64 + 0.5) / check as f64;
        let at = co.matrix_at(th)?;
        let now = [w[0].eval_real(th), w[1].eval_real(th)];
        let next = [w[0].eval_real(th + a), w[1].eval_real(th + a)];
        let mut err = 0.0;
        for l in 0..2 {
            let z = next[0] * at[(0, l)] + next[1] * at[(1, l)] - lambda * now[l];
            err += z.norm_sqr();
        }
        residual = residual.max(err.sqrt());
        // det B = Im(conj(w₁) w₂)
        det_floor = det_floor.min((now[0].conj() * now[1]).im.abs());
    }
    let mut cand = ConjugacyCandidate {
        w,
        target_rho: rho_target,
        k_b,
        residual,
        degree: 0,
        det_floor,
        near_singular: residual < 1e-3 && det_floor < 1e-8,
        singular_values: [s0, s1],
    };
    if det_floor > 1e-8 {
        cand.degree = degree_of(|th| cand.b_at(th), 1024)?;
    }
    Ok(cand)
}

/// Degree of a real matrix function on `[0, 1)`: winding of the projective
/// angle of `B(θ)e₁`, counted in half turns.
pub fn degree_of(b: impl Fn(f64) -> Matrix2<f64>, grid: usize) -> Result<i64> {
    let mut n = grid.max(16);
    loop {
        let mut total = 0.0;
        let mut coarse = false;
        let mut prev = b(0.0);
        check_singular(&prev)?;
        for j in 1..=n {
            let cur = b(j as f64 / n as f64);
            check_singular(&cur)?;
            let a0 = prev[(1, 0)].atan2(prev[(0, 0)]);
            let a1 = cur[(1, 0)].atan2(cur[(0, 0)]);
            let mut d = (a1 - a0).rem_euclid(PI);
            if d > PI / 2.0 {
                d -= PI;
            }
            if d.abs() > PI / 4.0 {
                coarse = true;
                break;
            }
            total += d;
            prev = cur;
        }
        if !coarse {
            return Ok((total / PI).round() as i64);
        }
        if n >= 1 << 20 {
            return Err(Error::Contract("projective angle unresolved at finest grid".into()));
        }
        n *= 2;
    }
}

fn check_singular(m: &Matrix2<f64>) -> Result<()> {
    let min_sv = m.singular_values().min();
    if !(min_sv > 1e-8) {
        return Err(Error::SingularOnGrid { min_sv });
    }
    Ok(())
}

/// Degree of a symbol matrix `[B₁₁, B₁₂, B₂₁, B₂₂]` (real parts are used).
pub fn degree(b: &[TorusSymbol; 4], grid: usize) -> Result<i64> {
    degree_of(
        |th| Matrix2::new(b[0].eval_real(th).re, b[1].eval_real(th).re, b[2].eval_real(th).re, b[3].eval_real(th).re),
        grid,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Row {
    First,
    Second,
}

#[derive(Debug, Clone)]
pub struct DualEigenvector {
    /// `u[m + half_width]` for `m ∈ −half_width..=half_width`, unit norm.
    pub u: Vec<C64>,
    pub half_width: usize,
    pub energy: f64,
    /// Phase `x` of the dual operator the vector belongs to.
    pub x: f64,
    pub residual: f64,
}

/// Dual eigenvector candidate from a conjugacy of the normalized cocycle.
///
/// With `b = B^{−1}(1, ∓i)ᵀ` the column `Ã b = e^{±2πiρ} b(·+α)`; then
/// `D(θ) = b₁(θ) e^{−f(θ)} / √|s|(θ−α)` solves the second-order equation with
/// hopping `s`, and `u_m = D̂(−m)` is an eigenvector of `H̃_s(∓ρ)` at `E`.
/// The factor `e^{−f}` (not `e^{−f/2}`) is what makes that equation hold
/// when `s/|s| = e^{f(θ+α)−f(θ)}`.
pub fn dual_eigenvector_from_conjugacy(cand: &ConjugacyCandidate, co: &Cocycle, which: Row) -> Result<DualEigenvector> {
    if cand.residual >= 1e-3 {
        return Err(Error::ResidualTooLarge { residual: cand.residual });
    }
    if !matches!(co.kind, CocycleKind::Normalized) {
        return Err(Error::InvalidParameters("dual eigenvectors need the normalized cocycle".into()));
    }
    let model = &co.model;
    let a = model.alpha();
    let k0 = model.c.winding(4096)?;
    let s = model.c.twist(k0);
    let k_out = (4 * cand.k_b).max(64);
    let (f, _) = if s.order() == 0 {
        (TorusSymbol::constant(C64::new(0.0, 0.0), s.half_phase, a), 0.0)
    } else {
        phase_coboundary(&s, k_out)?
    };
    let sign = if which == Row::First { -1.0 } else { 1.0 };
    let grid = (8 * k_out).next_power_of_two();
    let samples: Vec<C64> = (0..grid)
        .map(|j| {
            let th = j as f64 / grid as f64;
            let b = cand.b_at(th);
            let det = b.determinant();
            let b1 = (C64::new(b[(1, 1)], 0.0) - C64::new(0.0, sign) * b[(0, 1)]) / det;
            b1 * (-f.eval_real(th)).exp() / s.eval_real(th - a).norm().sqrt()
        })
        .collect();
    let d = fourier_project(&samples, k_out, false, a);
    let half_width = k_out;
    let mut u: Vec<C64> = (-(half_width as i64)..=half_width as i64).map(|m| d.coeff(-m)).collect();
    let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    u.iter_mut().for_each(|z| *z /= norm);

    let x = sign * cand.target_rho;
    let dual_model = JacobiModel::new(s.clone(), model.v.clone(), model.cf.clone())?;
    let dual = dualize(&dual_model);
    let energy = co.energy.re;
    let op = dual.build(x, half_width);
    let hu = op.matrix.matvec(&u);
    let residual = hu.iter().zip(&u).map(|(h, z)| (h - energy * z).norm_sqr()).sum::<f64>().sqrt();
    Ok(DualEigenvector { u, half_width, energy, x, residual })
}
