//! Continued fractions of the frequency, the growth exponent of their
//! denominators, the phase-dependent refinement of that exponent, and a
//! Diophantine-class scan for rotation numbers.
//!
//! All `‖q α‖` comparisons that must hold exactly are carried out with big
//! integers against the deepest available convergent `p_M / q_M`.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum size of any convergent denominator, in bits.
pub const BIGINT_BUDGET_BITS: u64 = 1 << 22;

/// Tolerance used when deciding membership in a singular orbit.
pub const SINGULAR_ORBIT_TOL: f64 = 1e-12;

/// Largest `|k|` scanned when deciding singular-orbit membership.
pub const SINGULAR_ORBIT_SCAN_CAP: u64 = 1 << 22;

/// Distance to the nearest integer.
pub fn torus_norm(x: f64) -> f64 {
    let f = x - x.round();
    f.abs()
}

/// Natural logarithm of a big unsigned integer (finite for any size).
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn biguint_to_f64_saturating(x: &BigUint) -> f64 {
    if x.bits() > 1023 {
        f64::INFINITY
    } else {
        x.to_f64().unwrap_or(f64::INFINITY)
    }
}

/// A real number known to lie in a closed interval with rational endpoints.
///
/// Quadratic surds are built from exact integer square roots at the
/// requested number of bits, so the interval width is `2^-bits`.
#[derive(Debug, Clone, PartialEq)]
pub struct HighPrecisionReal {
    lo_num: BigInt,
    lo_den: BigInt,
    hi_num: BigInt,
    hi_den: BigInt,
}

impl HighPrecisionReal {
    pub const DEFAULT_BITS: u64 = 768;

    /// Exact rational `p / q`.
    pub fn rational(p: i64, q: i64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameters("zero denominator".into()));
        }
        let (p, q) = if q < 0 { (-p, -q) } else { (p, q) };
        Ok(HighPrecisionReal {
            lo_num: p.into(),
            lo_den: q.into(),
            hi_num: p.into(),
            hi_den: q.into(),
        })
    }

    /// Exact rational from big integers.
    pub fn rational_big(p: BigInt, q: BigInt) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::InvalidParameters("zero denominator".into()));
        }
        let (p, q) = if q.is_negative() { (-p, -q) } else { (p, q) };
        Ok(HighPrecisionReal {
            lo_num: p.clone(),
            lo_den: q.clone(),
            hi_num: p,
            hi_den: q,
        })
    }

    /// `(a + b·√d) / c` enclosed to `bits` bits. `d` must not be a perfect square
    /// for the result to be irrational.
    pub fn quadratic(a: i64, b: i64, d: u64, c: i64, bits: u64) -> Result<Self> {
        if c == 0 {
            return Err(Error::InvalidParameters("zero denominator".into()));
        }
        // floor(√d · 2^bits) = isqrt(d · 4^bits)
        let scaled = BigUint::from(d) << (2 * bits);
        let root = scaled.sqrt();
        let exact = &root * &root == scaled;
        let one = BigUint::one();
        let den = BigInt::from(BigUint::one() << bits);
        let r_lo = BigInt::from(root.clone());
        let r_hi = if exact { r_lo.clone() } else { BigInt::from(root + one) };
        let a_scaled = BigInt::from(a) * &den;
        let b = BigInt::from(b);
        let (s_lo, s_hi) = if b.is_negative() {
            (&a_scaled + &b * &r_hi, &a_scaled + &b * &r_lo)
        } else {
            (&a_scaled + &b * &r_lo, &a_scaled + &b * &r_hi)
        };
        let c = BigInt::from(c);
        let mut lo = (s_lo, &den * &c);
        let mut hi = (s_hi, den * &c);
        if c.is_negative() {
            std::mem::swap(&mut lo, &mut hi);
            lo = (-lo.0, -lo.1);
            hi = (-hi.0, -hi.1);
        }
        Ok(HighPrecisionReal {
            lo_num: lo.0,
            lo_den: lo.1,
            hi_num: hi.0,
            hi_den: hi.1,
        })
    }

    /// The golden mean `(√5 − 1)/2`.
    pub fn golden(bits: u64) -> Self {
        Self::quadratic(-1, 1, 5, 2, bits).expect("valid surd")
    }

    /// `√2 − 1`.
    pub fn sqrt2_minus_one(bits: u64) -> Self {
        Self::quadratic(-1, 1, 2, 1, bits).expect("valid surd")
    }

    /// Parses `golden`, `silver` / `sqrt2-1`, `p/q`, or a decimal literal.
    /// A decimal literal is treated as exact.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        match t {
            "golden" => return Ok(Self::golden(Self::DEFAULT_BITS)),
            "silver" | "sqrt2-1" => return Ok(Self::sqrt2_minus_one(Self::DEFAULT_BITS)),
            _ => {}
        }
        if let Some((p, q)) = t.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| bad_alpha(s))?;
            let q: BigInt = q.trim().parse().map_err(|_| bad_alpha(s))?;
            return Self::rational_big(p, q);
        }
        let (int_part, frac_part) = t.split_once('.').unwrap_or((t, ""));
        if frac_part.chars().any(|c| !c.is_ascii_digit()) {
            return Err(bad_alpha(s));
        }
        let digits = format!("{int_part}{frac_part}");
        let num: BigInt = digits.parse().map_err(|_| bad_alpha(s))?;
        let den = num_traits::pow(BigInt::from(10), frac_part.len());
        Self::rational_big(num, den)
    }

    pub fn is_exact(&self) -> bool {
        &self.lo_num * &self.hi_den == &self.hi_num * &self.lo_den
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.lo_num, &self.lo_den)
    }
}

fn bad_alpha(s: &str) -> Error {
    Error::InvalidParameters(format!("cannot parse frequency '{s}'"))
}

fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    let (hi, lo) = ratio_to_double_double(num, den);
    hi + lo
}

/// `num/den` as an unevaluated sum `hi + lo` carrying ~106 bits.
fn ratio_to_double_double(num: &BigInt, den: &BigInt) -> (f64, f64) {
    const SHIFT: u32 = 110;
    let (int_part, rem) = num.div_mod_floor(den);
    let scaled: BigInt = (rem << SHIFT) / den;
    let scale = 2f64.powi(-(SHIFT as i32));
    let hi_frac = scaled.to_f64().unwrap_or(0.0) * scale;
    let hi_as_int = BigInt::from((hi_frac / scale) as u128);
    let lo_frac = (&scaled - hi_as_int).to_f64().unwrap_or(0.0) * scale;
    let ip = int_part.to_f64().unwrap_or(f64::NAN);
    let s = ip + hi_frac;
    let e = (ip - s) + hi_frac;
    (s, e + lo_frac)
}

/// Where a continued fraction came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfSource {
    Real,
    Synthesized,
    Json,
}

/// Partial quotients `a_1..a_M` and convergents `p_n/q_n` for `n = 0..M`.
///
/// `p_0 = a_0` is the integer part and `q_0 = 1`; `q_n` is strictly
/// increasing from `n = 2` on.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuedFraction {
    pub integer_part: BigInt,
    pub quotients: Vec<BigUint>,
    pub p: Vec<BigInt>,
    pub q: Vec<BigUint>,
    pub source: CfSource,
}

impl ContinuedFraction {
    /// Builds convergents from `a_0` and `a_1..a_M`.
    pub fn from_quotients(integer_part: BigInt, quotients: Vec<BigUint>, source: CfSource) -> Result<Self> {
        if quotients.iter().any(|a| a.is_zero()) {
            return Err(Error::InvalidParameters("partial quotients must be positive".into()));
        }
        let mut p = Vec::with_capacity(quotients.len() + 1);
        let mut q = Vec::with_capacity(quotients.len() + 1);
        let (mut pm2, mut qm2) = (BigInt::one(), BigUint::zero()); // p_{-1}, q_{-1}
        let (mut pm1, mut qm1) = (integer_part.clone(), BigUint::one());
        p.push(pm1.clone());
        q.push(qm1.clone());
        for a in &quotients {
            let pn = BigInt::from(a.clone()) * &pm1 + &pm2;
            let qn = a * &qm1 + &qm2;
            if qn.bits() > BIGINT_BUDGET_BITS {
                return Err(Error::Overflow { bits: qn.bits() });
            }
            p.push(pn.clone());
            q.push(qn.clone());
            pm2 = std::mem::replace(&mut pm1, pn);
            qm2 = std::mem::replace(&mut qm1, qn);
        }
        Ok(ContinuedFraction { integer_part, quotients, p, q, source })
    }

    /// Number of partial quotients `M`.
    pub fn depth(&self) -> usize {
        self.quotients.len()
    }

    /// Keeps the first `depth` partial quotients.
    pub fn truncated(&self, depth: usize) -> Self {
        let d = depth.min(self.depth());
        ContinuedFraction {
            integer_part: self.integer_part.clone(),
            quotients: self.quotients[..d].to_vec(),
            p: self.p[..=d].to_vec(),
            q: self.q[..=d].to_vec(),
            source: self.source.clone(),
        }
    }

    pub fn q_f64(&self, n: usize) -> f64 {
        biguint_to_f64_saturating(&self.q[n])
    }

    pub fn q_u64(&self, n: usize) -> Option<u64> {
        self.q[n].to_u64()
    }

    /// Deepest convergent `p_M / q_M`.
    pub fn last_convergent(&self) -> (&BigInt, &BigUint) {
        (self.p.last().unwrap(), self.q.last().unwrap())
    }

    /// The frequency as a double-double derived from the deepest convergent.
    pub fn frequency(&self) -> Frequency {
        let (p, q) = self.last_convergent();
        let (hi, lo) = ratio_to_double_double(p, &BigInt::from(q.clone()));
        Frequency::new(hi, lo)
    }

    /// `‖q_n α‖_T` against the proxy `α = p_M/q_M`, as the exact pair
    /// `(r, q_M)` with `‖q_n α‖ = r / q_M`.
    pub fn qn_alpha_norm_exact(&self, n: usize) -> (BigUint, BigUint) {
        let (p, qm) = self.last_convergent();
        let qm_int = BigInt::from(qm.clone());
        let prod = BigInt::from(self.q[n].clone()) * p;
        let r = prod.mod_floor(&qm_int);
        let r2 = &qm_int - &r;
        let best = if r <= r2 { r } else { r2 };
        (best.to_biguint().unwrap(), qm.clone())
    }

    /// `‖k α‖_T` against the same proxy.
    pub fn k_alpha_norm_exact(&self, k: &BigInt) -> BigUint {
        let (p, qm) = self.last_convergent();
        let qm_int = BigInt::from(qm.clone());
        let r = (k * p).mod_floor(&qm_int);
        let r2 = &qm_int - &r;
        if r <= r2 { r.to_biguint().unwrap() } else { r2.to_biguint().unwrap() }
    }
}

/// Continued-fraction expansion of the fractional part of `alpha` to `depth`
/// partial quotients.
///
/// The interval enclosing `alpha` is expanded endpoint by endpoint; a
/// quotient is emitted only when both endpoints agree on it.
pub fn expand(alpha: &HighPrecisionReal, depth: usize) -> Result<ContinuedFraction> {
    if depth == 0 {
        return Err(Error::InvalidParameters("depth must be at least 1".into()));
    }
    let (mut ln, mut ld) = (alpha.lo_num.clone(), alpha.lo_den.clone());
    let (mut hn, mut hd) = (alpha.hi_num.clone(), alpha.hi_den.clone());
    let a0 = ln.div_floor(&ld);
    if hn.div_floor(&hd) != a0 {
        return Err(Error::PrecisionExhausted { depth: 0 });
    }
    let mut quotients = Vec::with_capacity(depth);
    for level in 1..=depth {
        let a = if level == 1 { a0.clone() } else { quotients_last_int(&quotients) };
        // subtract the integer part
        ln -= &a * &ld;
        hn -= &a * &hd;
        if ln.is_zero() || hn.is_zero() {
            if ln.is_zero() && hn.is_zero() {
                return Err(Error::RationalInput { depth: quotients.len() });
            }
            return Err(Error::PrecisionExhausted { depth: level });
        }
        // invert: x ∈ [l, h] ⇒ 1/x ∈ [1/h, 1/l]
        let (nln, nld) = (hd.clone(), hn.clone());
        let (nhn, nhd) = (ld.clone(), ln.clone());
        ln = nln;
        ld = nld;
        hn = nhn;
        hd = nhd;
        let a_lo = ln.div_floor(&ld);
        let a_hi = hn.div_floor(&hd);
        if a_lo != a_hi || a_lo.sign() != Sign::Plus {
            return Err(Error::PrecisionExhausted { depth: level });
        }
        quotients.push(a_lo.to_biguint().unwrap());
    }
    ContinuedFraction::from_quotients(a0, quotients, CfSource::Real)
}

fn quotients_last_int(q: &[BigUint]) -> BigInt {
    BigInt::from(q.last().cloned().unwrap_or_default())
}

/// Window maximum of `ln(q_{n+1}) / q_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub value: f64,
    pub depth: usize,
    pub window: usize,
    pub per_level: Vec<f64>,
}

/// Default trailing window: the later half of the available levels.
pub fn default_window(cf: &ContinuedFraction) -> usize {
    (cf.depth() / 2).max(1)
}

fn beta_level(cf: &ContinuedFraction, n: usize, phase_sum: f64) -> f64 {
    let qn = cf.q_f64(n);
    (phase_sum + ln_biguint(&cf.q[n + 1])) / qn
}

/// `β(α)` estimated as the maximum of `ln(q_{n+1})/q_n` over the last
/// `window` levels. `per_level[n]` holds the value at level `n`.
pub fn beta(cf: &ContinuedFraction, window: usize) -> Result<BetaEstimate> {
    if window == 0 || cf.q.len() < window + 2 {
        return Err(Error::InsufficientDepth { needed: window + 2, have: cf.q.len() });
    }
    let per_level: Vec<f64> = (0..cf.q.len() - 1).map(|n| beta_level(cf, n, 0.0)).collect();
    let value = per_level[per_level.len() - window..]
        .iter()
        .copied()
        .fold(0.0_f64, f64::max);
    Ok(BetaEstimate { value, depth: cf.depth(), window, per_level })
}

/// Quotients that realise a prescribed growth exponent.
///
/// `a_{n+1}` is chosen so that `q_{n+1} ≈ e^{β q_n}`; `prefix` fixes the
/// leading quotients (default `[1]`).
pub fn synth_alpha_with_prefix(prefix: &[u64], target_beta: f64, levels: usize) -> Result<ContinuedFraction> {
    if !(target_beta > 0.0) || !target_beta.is_finite() {
        return Err(Error::InvalidParameters(
            "target beta must be positive; use a bounded-quotient frequency for beta = 0".into(),
        ));
    }
    if prefix.is_empty() || prefix.iter().any(|&a| a == 0) {
        return Err(Error::InvalidParameters("prefix quotients must be positive".into()));
    }
    if levels < prefix.len() {
        return Err(Error::InvalidParameters("levels must cover the prefix".into()));
    }
    let mut quotients: Vec<BigUint> = prefix.iter().map(|&a| BigUint::from(a)).collect();
    let mut cf = ContinuedFraction::from_quotients(BigInt::zero(), quotients.clone(), CfSource::Synthesized)?;
    while quotients.len() < levels {
        let n = quotients.len();
        let qn = &cf.q[n];
        let qnm1 = &cf.q[n - 1];
        let exponent = target_beta * biguint_to_f64_saturating(qn);
        let bits_needed = exponent / std::f64::consts::LN_2;
        if !bits_needed.is_finite() || bits_needed > BIGINT_BUDGET_BITS as f64 {
            return Err(Error::Overflow { bits: bits_needed.min(u64::MAX as f64) as u64 });
        }
        let target = exp_biguint(exponent);
        let a = if target > *qnm1 {
            let num = &target - qnm1;
            let (quo, rem) = num.div_rem(qn);
            // round to nearest
            if rem.clone() * 2u32 >= *qn { quo + 1u32 } else { quo }
        } else {
            BigUint::zero()
        };
        let a = if a.is_zero() { BigUint::one() } else { a };
        quotients.push(a);
        cf = ContinuedFraction::from_quotients(BigInt::zero(), quotients.clone(), CfSource::Synthesized)?;
    }
    Ok(cf)
}

/// [`synth_alpha_with_prefix`] with the prefix `[1]`.
pub fn synth_alpha(target_beta: f64, levels: usize) -> Result<ContinuedFraction> {
    synth_alpha_with_prefix(&[1], target_beta, levels)
}

/// `round(e^x)` as a big integer, accurate to about 52 leading bits.
fn exp_biguint(x: f64) -> BigUint {
    let log2 = x / std::f64::consts::LN_2;
    if log2 < 60.0 {
        return BigUint::from(x.exp().round().max(0.0) as u64);
    }
    let k = log2.floor() - 52.0;
    let mant = 2f64.powf(log2 - k);
    BigUint::from(mant.round() as u64) << (k as u64)
}

/// `δ_c(α, θ)` over the last `window` levels: the maximum of
/// `(Σ_j ln‖q_n(θ−θ_j)‖ + ln q_{n+1}) / q_n`.
///
/// Membership of `θ` in `∪_j θ_j + Zα + Z` is semi-decided to
/// [`SINGULAR_ORBIT_TOL`] over `|k| ≤ min(q_M, SINGULAR_ORBIT_SCAN_CAP)`.
pub fn delta_c(cf: &ContinuedFraction, theta: f64, singular_phases: &[f64], window: usize) -> Result<BetaEstimate> {
    if window == 0 || cf.q.len() < window + 2 {
        return Err(Error::InsufficientDepth { needed: window + 2, have: cf.q.len() });
    }
    if !singular_phases.is_empty() {
        let freq = cf.frequency();
        let kmax = cf.q.last().unwrap().to_u64().unwrap_or(u64::MAX).min(SINGULAR_ORBIT_SCAN_CAP) as i64;
        let mut min_dist = f64::INFINITY;
        for &tj in singular_phases {
            let base = theta - tj;
            for k in -kmax..=kmax {
                let d = torus_norm(base - freq.multiple(k));
                min_dist = min_dist.min(d);
            }
        }
        if min_dist < SINGULAR_ORBIT_TOL {
            return Err(Error::ThetaInSingularOrbit { distance: min_dist });
        }
    }
    let per_level: Vec<f64> = (0..cf.q.len() - 1)
        .map(|n| {
            let qn = cf.q_f64(n);
            let s: f64 = singular_phases
                .iter()
                .map(|&tj| torus_norm(qn * (theta - tj)).ln())
                .sum();
            beta_level(cf, n, s)
        })
        .collect();
    let value = per_level[per_level.len() - window..]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BetaEstimate { value, depth: cf.depth(), window, per_level })
}

/// Scan value of the Diophantine condition
/// `min_{0<|m|≤m_max} ‖2φ − mα‖·(1+|m|)^τ`. Zero means the scan found a resonance.
pub fn dc_membership(freq: &Frequency, phi: f64, tau: f64, m_max: u64) -> Result<f64> {
    if !(tau > 1.0) || m_max == 0 {
        return Err(Error::InvalidParameters("need tau > 1 and m_max >= 1".into()));
    }
    let mut best = f64::INFINITY;
    for m in 1..=m_max as i64 {
        let w = (1.0 + m as f64).powf(tau);
        for mm in [m, -m] {
            let d = torus_norm(2.0 * phi - freq.multiple(mm));
            best = best.min(d * w);
        }
    }
    Ok(best)
}

/// A frequency held as an unevaluated double-double `hi + lo`, so that
/// orbit phases `θ + kα mod 1` stay accurate for large `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub hi: f64,
    pub lo: f64,
}

impl Frequency {
    pub fn new(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        let e = lo - (s - hi);
        Frequency { hi: s, lo: e }
    }

    pub fn from_f64(a: f64) -> Self {
        Frequency { hi: a, lo: 0.0 }
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }

    /// `kα mod 1` in `[0, 1)`.
    pub fn multiple(&self, k: i64) -> f64 {
        let kf = k as f64;
        let p = kf * self.hi;
        let e = kf.mul_add(self.hi, -p);
        let pf = p - p.floor();
        let r = pf + (e + kf * self.lo);
        r - r.floor()
    }

    /// `θ + kα mod 1` in `[0, 1)`.
    pub fn orbit(&self, theta: f64, k: i64) -> f64 {
        let t = theta - theta.floor();
        let r = t + self.multiple(k);
        r - r.floor()
    }
}
