//! Hermitian band matrices and their eigenproblems.
//!
//! Tridiagonal matrices are gauged to real off-diagonals and diagonalised by
//! implicit QL; wider bands go through a dense solver when small and through
//! Sturm bisection otherwise. Eigenvectors always come from inverse
//! iteration on the original band with a banded LU.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::symbol::C64;

/// Largest order handed to the dense Hermitian solver for bandwidth > 1.
pub const DENSE_LIMIT: usize = 1200;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct HermBand {
    n: usize,
    p: usize,
    /// `upper[d][i] = H[i, i+d]`, `d = 0..=p`.
    upper: Vec<Vec<C64>>,
}

impl HermBand {
    pub fn new(n: usize, p: usize) -> Self {
        let p = p.min(n.saturating_sub(1));
        let upper = (0..=p).map(|d| vec![ZERO; n - d.min(n)]).collect();
        HermBand { n, p, upper }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.p
    }

    /// Sets `H[i, j]` (and its mirror). Diagonal entries keep only their real part.
    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        if i == j {
            self.upper[0][i] = C64::new(z.re, 0.0);
        } else if j > i {
            self.upper[j - i][i] = z;
        } else {
            self.upper[i - j][j] = z.conj();
        }
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let d = i.abs_diff(j);
        if d > self.p {
            return ZERO;
        }
        if j >= i { self.upper[d][i] } else { self.upper[d][j].conj() }
    }

    pub fn diag(&self) -> &[C64] {
        &self.upper[0]
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.n];
        for i in 0..self.n {
            let mut acc = self.upper[0][i] * x[i];
            for d in 1..=self.p {
                if i + d < self.n {
                    acc += self.upper[d][i] * x[i + d];
                }
                if i >= d {
                    acc += self.upper[d][i - d].conj() * x[i - d];
                }
            }
            y[i] = acc;
        }
        y
    }

    /// Max absolute row sum, an upper bound for the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.p);
                let hi = (i + self.p).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j).norm()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Number of eigenvalues strictly below `sigma` (Sylvester inertia of
    /// a banded LDLᴴ factorisation of `H − σI`).
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.n;
        let p = self.p;
        let tiny = f64::MIN_POSITIVE.sqrt() * (1.0 + self.norm_bound());
        // w[i][q] holds the working entry (i, i−q), q = 0..=p
        let mut w: Vec<Vec<C64>> = (0..n)
            .map(|i| (0..=p).map(|q| if q <= i { self.get(i, i - q) } else { ZERO }).collect())
            .collect();
        for i in 0..n {
            w[i][0] -= sigma;
        }
        let mut count = 0;
        for k in 0..n {
            let mut d = w[k][0].re;
            if d.abs() < tiny {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
            let hi = (k + p).min(n - 1);
            for i in k + 1..=hi {
                let lik = w[i][i - k];
                if lik == ZERO {
                    continue;
                }
                for j in k + 1..=i {
                    let ljk = w[j][j - k];
                    w[i][i - j] -= lik * ljk.conj() / d;
                }
            }
        }
        count
    }
}

/// Banded LU with partial pivoting of a general (non-Hermitian) shift `H − σI`.
struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    h: usize,
    ab: Vec<C64>,
    piv: Vec<usize>,
}

impl BandLu {
    fn factor(m: &HermBand, sigma: f64, tiny: f64) -> Self {
        let n = m.n;
        let kl = m.p;
        let ku = m.p;
        let h = 2 * kl + ku + 1;
        let mut lu = BandLu { n, kl, ku, h, ab: vec![ZERO; n * h], piv: vec![0; n] };
        for c in 0..n {
            let lo = c.saturating_sub(m.p);
            let hi = (c + m.p).min(n - 1);
            for r in lo..=hi {
                let mut z = m.get(r, c);
                if r == c {
                    z -= sigma;
                }
                *lu.at(r, c) = z;
            }
        }
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = j;
            let mut best = lu.get(j, j).norm();
            for r in j + 1..=j + km {
                let v = lu.get(r, j).norm();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            lu.piv[j] = jp;
            let ju = (j + ku + kl).min(n - 1);
            if jp != j {
                for c in j..=ju {
                    let a = lu.get(j, c);
                    let b = lu.get(jp, c);
                    *lu.at(j, c) = b;
                    *lu.at(jp, c) = a;
                }
            }
            if lu.get(j, j).norm() < tiny {
                *lu.at(j, j) = C64::new(tiny, 0.0);
            }
            let pivot = lu.get(j, j);
            for r in j + 1..=j + km {
                let l = lu.get(r, j) / pivot;
                *lu.at(r, j) = l;
                if l == ZERO {
                    continue;
                }
                for c in j + 1..=ju {
                    let u = lu.get(j, c);
                    if u != ZERO {
                        *lu.at(r, c) -= l * u;
                    }
                }
            }
        }
        lu
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        c * self.h + (r + self.ku + self.kl - c)
    }

    #[inline]
    fn get(&self, r: usize, c: usize) -> C64 {
        self.ab[self.idx(r, c)]
    }

    #[inline]
    fn at(&mut self, r: usize, c: usize) -> &mut C64 {
        let i = self.idx(r, c);
        &mut self.ab[i]
    }

    fn solve(&self, b: &mut [C64]) {
        let n = self.n;
        for j in 0..n {
            let jp = self.piv[j];
            if jp != j {
                b.swap(j, jp);
            }
            let km = self.kl.min(n - 1 - j);
            let bj = b[j];
            for r in j + 1..=j + km {
                b[r] -= self.get(r, j) * bj;
            }
        }
        for j in (0..n).rev() {
            let hi = (j + self.ku + self.kl).min(n - 1);
            let mut acc = b[j];
            for c in j + 1..=hi {
                acc -= self.get(j, c) * b[c];
            }
            b[j] = acc / self.get(j, j);
        }
    }
}

/// Eigenvalues of a symmetric tridiagonal matrix (`d` diagonal, `e[i]`
/// coupling `i` and `i+1`) by implicit QL with Wilkinson shifts.
pub fn tridiagonal_eigenvalues(d: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    let mut d = d.to_vec();
    let mut e: Vec<f64> = e.to_vec();
    e.resize(n, 0.0);
    if n > 0 {
        e[n - 1] = 0.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 200 {
                return Err(Error::ConvergenceFailure { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(d)
}

/// All eigenvalues, ascending.
pub fn eigenvalues(m: &HermBand) -> Result<Vec<f64>> {
    let n = m.n;
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.p <= 1 {
        let d: Vec<f64> = m.upper[0].iter().map(|z| z.re).collect();
        let e: Vec<f64> = if m.p == 1 { m.upper[1].iter().map(|z| z.norm()).collect() } else { vec![0.0; n] };
        return tridiagonal_eigenvalues(&d, &e);
    }
    if n <= DENSE_LIMIT {
        let eig = nalgebra::SymmetricEigen::try_new(m.to_dense(), f64::EPSILON, 10_000)
            .ok_or(Error::ConvergenceFailure { index: 0 })?;
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return Ok(v);
    }
    bisection_eigenvalues(m)
}

fn bisection_eigenvalues(m: &HermBand) -> Result<Vec<f64>> {
    let nb = m.norm_bound();
    let (lo, hi) = (-nb - 1.0, nb + 1.0);
    let tol = 4.0 * f64::EPSILON * (1.0 + nb);
    let mut out = vec![0.0; m.n];
    // stack of (a, b, count(a), count(b))
    let mut stack = vec![(lo, hi, 0usize, m.n)];
    while let Some((a, b, ca, cb)) = stack.pop() {
        if ca == cb {
            continue;
        }
        if b - a <= tol {
            let mid = 0.5 * (a + b);
            for k in ca..cb {
                out[k] = mid;
            }
            continue;
        }
        let mid = 0.5 * (a + b);
        let cm = m.count_below(mid);
        stack.push((a, mid, ca, cm));
        stack.push((mid, b, cm, cb));
    }
    Ok(out)
}

/// Eigenvectors for the listed eigenvalue indices via inverse iteration,
/// orthogonalised inside clusters. `values` must be ascending.
///
/// The callback receives `(index, vector)` in ascending index order, so
/// large problems never need to hold all vectors at once.
pub fn eigenvectors_with(
    m: &HermBand,
    values: &[f64],
    indices: &[usize],
    mut sink: impl FnMut(usize, Vec<C64>),
) -> Result<()> {
    let norm = m.norm_bound().max(1e-12);
    let cluster_tol = 1e-8 * norm;
    let n = m.n;
    let tiny = f64::EPSILON * norm;
    let mut cluster: Vec<(f64, Vec<C64>)> = Vec::new();
    let mut last_lambda = f64::NEG_INFINITY;
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &idx in &sorted {
        let lambda = values[idx];
        if lambda - last_lambda > cluster_tol {
            cluster.clear();
        }
        last_lambda = lambda;
        // nudge the shift so that repeated eigenvalues get distinct factorisations
        let shift = lambda + (cluster.len() as f64) * 2.0 * tiny;
        let lu = BandLu::factor(m, shift, tiny);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ idx as u64);
        let mut x: Vec<C64> = (0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        normalize(&mut x);
        let mut ok = false;
        for _ in 0..6 {
            lu.solve(&mut x);
            for (_, q) in &cluster {
                let ov = dot(q, &x);
                for (xi, qi) in x.iter_mut().zip(q) {
                    *xi -= ov * qi;
                }
            }
            if normalize(&mut x) == 0.0 {
                break;
            }
            let hx = m.matvec(&x);
            let res: f64 = hx.iter().zip(&x).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt();
            if res <= 1e-10 * norm {
                ok = true;
                break;
            }
        }
        if !ok {
            let hx = m.matvec(&x);
            let res: f64 = hx.iter().zip(&x).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt();
            if !(res <= 1e-8 * norm) {
                return Err(Error::ConvergenceFailure { index: idx });
            }
        }
        cluster.push((lambda, x.clone()));
        sink(idx, x);
    }
    Ok(())
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn normalize(x: &mut [C64]) -> f64 {
    let s = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if s > 0.0 {
        x.iter_mut().for_each(|z| *z /= s);
    }
    s
}
