//! Acceptance suite: one line per criterion, printed in order.
//!
//! Run with `cargo test --release -p speclab --test acceptance`. The target
//! has no libtest harness, so the lines are never captured.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::Matrix2;
use num_bigint::{BigInt, BigUint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use speclab::cocycle::{phase_sample, Cocycle, CocycleKind};
use speclab::diophantine::{dc_membership, expand, synth_alpha_with_prefix, torus_norm, ContinuedFraction, HighPrecisionReal};
use speclab::duality::{self, duality_checks, u_k, u_r, u_r_inv, GridField};
use speclab::ehm::{self, AlphaSpec, Region, TransitionConfig};
use speclab::operator::ids;
use speclab::reducibility::{cohomology_residual, dual_eigenvector_from_conjugacy, fit_conjugacy, log_ratio_rhs, phase_coboundary, solve_cohomology, Row};
use speclab::symbol::{e2pi_re, TorusSymbol, C64};

const SEED: u64 = 20240611;
const LAMBDA: [f64; 3] = [0.1, 0.5, 0.2];

/// Criteria expected to print FAIL, with the reason recorded in the README.
/// 10: the synthesized frequency is periodic to e^-2709 at the reachable
/// scale, so finite-volume eigenvectors localize and the IPR test fails.
/// 11: the literal lower bound 1/q_(n+1) <= |q_n a| is false at every level;
/// the standard two-sided bound and best approximation are checked as well.
const KNOWN_FAILURES: &[u32] = &[10, 11];

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
}

fn golden() -> ContinuedFraction {
    expand(&HighPrecisionReal::golden(1024), 40).unwrap()
}

fn tdist(a: f64, b: f64) -> f64 {
    torus_norm(a - b)
}

/// Rotation numbers agree up to orientation.
fn rho_gap(rho: f64, predicted: f64) -> f64 {
    tdist(rho, predicted).min(tdist(rho, -predicted))
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    let mut ok = true;
    let mut slowest = 0.0f64;
    for l in [[0.0, 0.5, 0.0], LAMBDA, [0.2, 0.4, 0.1]] {
        let t = Instant::now();
        let m = ehm::model(l, golden()).unwrap();
        let target = ehm::lyapunov_closed_form(l).unwrap();
        let es = ehm::spectrum_samples(&m, phase_sample(SEED, 0), 300, 5).unwrap();
        for e in es {
            let est = Cocycle::new(m.clone(), e, CocycleKind::Normalized).lyapunov(1_000_000, 4, SEED).unwrap();
            let err = (est.value - target).abs();
            worst = worst.max(err);
            ok &= err <= 1e-2f64.max(2.0 * est.stderr);
        }
        slowest = slowest.max(t.elapsed().as_secs_f64());
    }
    let ln2 = ehm::lyapunov_closed_form([0.0, 0.5, 0.0]).unwrap();
    ok &= (ln2 - 2f64.ln()).abs() < 1e-15 && slowest <= 60.0;
    Outcome { id: 1, pass: ok, detail: format!("max |L - closed form| = {worst:.2e}, slowest lambda {slowest:.1}s") }
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for l in [[0.0, 0.5, 0.0], LAMBDA] {
        let m = ehm::model(l, golden()).unwrap();
        let b = m.spectral_bound();
        let grid: Vec<f64> = (0..50).map(|i| -b + 2.0 * b * i as f64 / 49.0).collect();
        let n = ids(&m, &grid, 2000, 8, SEED).unwrap();
        let rho: Vec<f64> = grid
            .par_iter()
            .map(|&e| Cocycle::new(m.clone(), e, CocycleKind::Normalized).rotation_number(1_000_000, 0.1).unwrap())
            .collect();
        for (nv, r) in n.values.iter().zip(&rho) {
            worst = worst.max((nv - (1.0 - 2.0 * r)).abs());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome { id: 2, pass: worst <= 1e-2 && secs <= 300.0, detail: format!("sup |N - (1-2rho)| = {worst:.2e}, {secs:.1}s") }
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let m = ehm::model(LAMBDA, golden()).unwrap();
    let r = duality_checks(LAMBDA, &m, 2000, 8, SEED).unwrap();
    let top = &r.levels[0];
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        id: 3,
        pass: top.kolmogorov <= 2e-2 && top.hausdorff <= 2e-2 && secs <= 600.0,
        detail: format!("N={}: Kolmogorov {:.2e}, Hausdorff {:.2e}, {secs:.1}s", top.half_width, top.kolmogorov, top.hausdorff),
    }
}

fn criterion_4() -> Outcome {
    let l_primal = ehm::lyapunov_closed_form(LAMBDA).unwrap();
    let eps_max = 0.9 * l_primal / (2.0 * PI);
    let eps: Vec<f64> = (0..9).map(|j| eps_max * j as f64 / 8.0).collect();
    let dual = ehm::model(ehm::sigma(LAMBDA), golden()).unwrap();
    let mut worst_dual = 0.0f64;
    let mut failure = None;
    for e in ehm::spectrum_samples(&dual, phase_sample(SEED, 1), 300, 5).unwrap() {
        match Cocycle::new(dual.clone(), e, CocycleKind::Normalized).lyapunov_strip(&eps, 200_000, 4, SEED) {
            Ok(v) => v.iter().for_each(|r| worst_dual = worst_dual.max(r.value)),
            Err(err) => failure = Some(err.to_string()),
        }
    }
    let primal = ehm::model(LAMBDA, golden()).unwrap();
    let mut least_primal = f64::INFINITY;
    for e in ehm::spectrum_samples(&primal, phase_sample(SEED, 1), 300, 5).unwrap() {
        let r = Cocycle::new(primal.clone(), e, CocycleKind::Normalized).lyapunov(200_000, 4, SEED).unwrap();
        least_primal = least_primal.min(r.value);
    }
    let pass = failure.is_none() && worst_dual <= 1e-2 && least_primal >= 0.75;
    Outcome {
        id: 4,
        pass,
        detail: match failure {
            Some(f) => format!("dual strip run failed: {f}"),
            None => format!("dual max L(eps<={eps_max:.4}) = {worst_dual:.2e}, primal min L(0) = {least_primal:.4}"),
        },
    }
}

/// Winding by the argument principle, bisecting until a Lipschitz bound
/// rules out a hidden turn inside every interval.
fn certified_winding(s: &TorusSymbol) -> Option<i64> {
    let lip: f64 = s.modes().map(|(k, c)| 2.0 * PI * (k.abs() as f64) * c.norm()).sum();
    fn walk(s: &TorusSymbol, lip: f64, a: f64, b: f64, za: C64, zb: C64, depth: u32) -> Option<f64> {
        if lip * (b - a) < 0.5 * za.norm().min(zb.norm()) {
            return Some((zb / za).arg());
        }
        if depth > 50 {
            return None;
        }
        let m = 0.5 * (a + b);
        let zm = s.eval_real(m);
        Some(walk(s, lip, a, m, za, zm, depth + 1)? + walk(s, lip, m, b, zm, zb, depth + 1)?)
    }
    let n = 256;
    let mut total = 0.0;
    for j in 0..n {
        let a = j as f64 / n as f64;
        let b = (j + 1) as f64 / n as f64;
        total += walk(s, lip, a, b, s.eval_real(a), s.eval_real(b), 0)?;
    }
    Some((total / (2.0 * PI)).round() as i64)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut tested, mut mismatches) = (0, 0);
    while tested < 1000 {
        let d: i64 = rng.gen_range(0..=6);
        let kmin: i64 = rng.gen_range(-d..=0);
        let modes: Vec<(i64, C64)> =
            (kmin..=kmin + d).map(|k| (k, C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))).collect();
        let s = TorusSymbol::from_modes(&modes, false, 0.0, f64::INFINITY);
        if s.min_modulus(1 << 14) <= 1e-3 {
            continue;
        }
        tested += 1;
        match (s.winding(4096), certified_winding(&s)) {
            (Ok(w), Some(o)) if w == o => {}
            _ => mismatches += 1,
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 5);
    let a = golden().frequency().value();
    let mut region_ok = 0;
    let mut samples = 0;
    while samples < 20 {
        let l = [rng.gen_range(0.0..0.5), rng.gen_range(0.01..1.0), rng.gen_range(0.0..0.5)];
        if ehm::classify(l).unwrap().region != Region::I {
            continue;
        }
        samples += 1;
        if matches!(ehm::dual_symbol(l, a), Ok(d) if d.winding == Some(0)) {
            region_ok += 1;
        }
    }
    Outcome {
        id: 5,
        pass: mismatches == 0 && region_ok == 20,
        detail: format!("{mismatches} mismatches in {tested} polynomials; w(d)=0 on {region_ok}/20 region-I samples"),
    }
}

fn criterion_6() -> Outcome {
    let a = golden().frequency().value();
    let d = ehm::dual_symbol(LAMBDA, a).unwrap().d;
    let rhs = log_ratio_rhs(&d, 64).unwrap();
    let sol = solve_cohomology(&rhs, a, 64).unwrap();
    let g_res = cohomology_residual(&sol.g, &rhs, 1 << 13);
    let (f, _) = phase_coboundary(&d, 64).unwrap();
    let grid = 1 << 13;
    let exp_res = (0..grid)
        .map(|j| {
            let th = j as f64 / grid as f64;
            let s = d.eval_real(th);
            ((f.eval_real(th + a) - f.eval_real(th)).exp() - s / s.norm()).norm()
        })
        .fold(0.0, f64::max);
    Outcome {
        id: 6,
        pass: g_res <= 1e-8 && exp_res <= 1e-8,
        detail: format!("cohomology residual {g_res:.2e}, |e^(f(t+a)-f(t)) - s/|s|| = {exp_res:.2e}"),
    }
}

fn rot(phi: f64) -> Matrix2<f64> {
    let (s, c) = (2.0 * PI * phi).sin_cos();
    Matrix2::new(c, -s, s, c)
}

struct Subcritical {
    residual: f64,
    dual_residuals: [f64; 2],
}

fn criterion_7() -> (Outcome, Option<Subcritical>) {
    // constructed: B(t) = R(kt) C conjugates A = C^-1 R(phi - k a) C to R(phi)
    let base = ehm::model([0.0, 1.0, 0.0], golden()).unwrap();
    let a = base.alpha();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    let mut worst_constructed = 0.0f64;
    let mut worst_rel = 0.0f64;
    for k in [0i64, 1, -1] {
        let mut c: Matrix2<f64> = Matrix2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if c.determinant() < 0.0 {
            c.swap_columns(0, 1);
        }
        c /= c.determinant().sqrt();
        let phi = 0.2113;
        let m = c.try_inverse().unwrap() * rot(phi - k as f64 * a) * c;
        let co = Cocycle::constant(base.clone(), [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]);
        let cand = fit_conjugacy(&co, phi, 4, 0, 0.0).unwrap();
        worst_constructed = worst_constructed.max(cand.residual);
        let rho = co.rotation_number(1_000_000, 0.1).unwrap();
        worst_rel = worst_rel.max(rho_gap(rho, phi - cand.degree as f64 * a / 2.0));
    }

    // subcritical dual of LAMBDA at the most Diophantine of nine spectral energies
    let dual = ehm::model(ehm::sigma(LAMBDA), golden()).unwrap();
    let freq = dual.freq;
    let es = ehm::spectrum_samples(&dual, phase_sample(SEED, 2), 300, 9).unwrap();
    let scored: Vec<(f64, f64, f64)> = es
        .par_iter()
        .map(|&e| {
            let rho = Cocycle::new(dual.clone(), e, CocycleKind::Normalized).rotation_number(2_000_000, 0.1).unwrap();
            (dc_membership(&freq, rho, 2.0, 10_000).unwrap(), e, rho)
        })
        .collect();
    let (gamma, e, rho) = scored.into_iter().fold((f64::NEG_INFINITY, 0.0, 0.0), |b, x| if x.0 > b.0 { x } else { b });
    let co = Cocycle::new(dual.clone(), e, CocycleKind::Normalized);
    let cand = fit_conjugacy(&co, rho, 64, 0, 0.0);
    let (sub_ok, sub_detail, sub) = match cand {
        Ok(c) => {
            let rho_again = co.rotation_number(4_000_000, 0.37).unwrap();
            let gap = rho_gap(rho_again, c.target_rho - c.degree as f64 * a / 2.0);
            worst_rel = worst_rel.max(gap);
            let dr = [Row::First, Row::Second].map(|r| dual_eigenvector_from_conjugacy(&c, &co, r).map(|d| d.residual).unwrap_or(f64::INFINITY));
            (
                c.residual <= 1e-3,
                format!("subcritical E={e:.4} rho={rho:.6} gamma={gamma:.2e} residual {:.2e} degree {}", c.residual, c.degree),
                Some(Subcritical { residual: c.residual, dual_residuals: dr }),
            )
        }
        Err(err) => (false, format!("subcritical fit failed: {err}"), None),
    };
    let pass = worst_constructed <= 1e-10 && sub_ok && worst_rel <= 2e-3;
    let detail = format!("constructed residual {worst_constructed:.2e}; {sub_detail}; rotation relation gap {worst_rel:.2e}");
    (Outcome { id: 7, pass, detail }, sub)
}

fn criterion_8(sub: Option<&Subcritical>) -> Outcome {
    match sub {
        Some(s) => {
            let worst = s.dual_residuals[0].max(s.dual_residuals[1]);
            Outcome {
                id: 8,
                pass: worst <= 10.0 * s.residual,
                detail: format!("dual eigenvector residuals {:.2e}, {:.2e} vs 10 x {:.2e}", s.dual_residuals[0], s.dual_residuals[1], s.residual),
            }
        }
        None => Outcome { id: 8, pass: false, detail: "no subcritical conjugacy from criterion 7".into() },
    }
}

fn random_field(rng: &mut ChaCha8Rng) -> GridField {
    let mut coeffs = Vec::new();
    for a in -8i64..=8 {
        for n in -8i64..=8 {
            coeffs.push((a, n, C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)));
        }
    }
    GridField::from_coefficients(64, 32, &coeffs).unwrap()
}

fn scaled_by(f: &GridField, phase: impl Fn(f64) -> C64) -> GridField {
    let mut out = f.clone();
    for i in 0..out.g {
        let p = phase(out.x(i));
        for n in -(out.n_half as i64)..=out.n_half as i64 {
            *out.at_mut(i, n) *= p;
        }
    }
    out
}

fn criterion_9() -> Outcome {
    let m = ehm::model(LAMBDA, golden()).unwrap();
    let f = m.freq;
    let half = speclab::diophantine::Frequency::new(f.hi / 2.0, f.lo / 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 9);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let psi = random_field(&mut rng);
        let norm = psi.norm();
        let r = u_r(&psi, &f).unwrap();
        worst = worst.max((r.norm() - norm).abs() / norm);
        worst = worst.max(u_r_inv(&r, &f).unwrap().sub(&psi).norm() / norm);
        let l: i64 = rng.gen_range(-3..=3);
        let k: i64 = rng.gen_range(-2..=2);
        let sl = duality::shift(&psi, l, &f).unwrap();
        let urs = u_r(&sl, &f).unwrap();
        worst = worst.max(urs.sub(&scaled_by(&r, |x| e2pi_re(l as f64 * x))).norm() / norm);
        let uris = u_r_inv(&sl, &f).unwrap();
        let uri = u_r_inv(&psi, &f).unwrap();
        worst = worst.max(uris.sub(&scaled_by(&uri, |x| e2pi_re(-(l as f64) * x))).norm() / norm);
        let uks = u_k(&sl, k, &f);
        let sluk = duality::shift(&u_k(&psi, k, &f), l, &f).unwrap();
        let c = half.multiple(l * l * k);
        worst = worst.max(uks.sub(&scaled_by(&sluk, |x| e2pi_re((l * k) as f64 * x + c))).norm() / norm);
        worst = worst.max(duality::duality_residual(&m, &psi).unwrap());
    }
    Outcome { id: 9, pass: worst <= 1e-10, detail: format!("max identity residual {worst:.2e} over 100 fields (G=64, N=32)") }
}

fn criterion_10() -> Outcome {
    let t = Instant::now();
    let n = 2000;
    let mut cfg = TransitionConfig::new(LAMBDA, AlphaSpec::Golden { depth: 40 }, n);
    cfg.seed = SEED;
    let pp = ehm::transition_experiment(&cfg).unwrap();
    let l = pp.l_lambda;
    let a_ok = (pp.decay.median - l).abs() <= 0.2 * l && pp.decay.r2_median > 0.9;
    let mut cfg = TransitionConfig::new(LAMBDA, AlphaSpec::Synthesized { beta: 1.5, prefix: vec![1, 4], levels: 4 }, n);
    cfg.seed = SEED;
    let sc = ehm::transition_experiment(&cfg).unwrap();
    let ipr_cut = 10.0 / (2 * n + 1) as f64;
    let gordon_ok = sc.gordon_levels.len() == 2 && sc.gordon_levels.iter().all(|g| g.pass_rate >= 0.9);
    let b_ok = gordon_ok && sc.ipr.median < ipr_cut;
    let secs = t.elapsed().as_secs_f64();
    let levels: Vec<String> = sc.gordon_levels.iter().map(|g| format!("q={} pass {:.2}", g.q, g.pass_rate)).collect();
    Outcome {
        id: 10,
        pass: a_ok && b_ok && secs <= 1800.0,
        detail: format!(
            "(a) {} decay median {:.4} vs L {:.4}, r2 {:.3}, verdict {:?}; (b) {} beta {:.3}, Gordon [{}], ipr median {:.3e} vs {:.3e}, verdict {:?}; {secs:.0}s",
            if a_ok { "pass" } else { "fail" },
            pp.decay.median,
            l,
            pp.decay.r2_median,
            pp.verdict,
            if b_ok { "pass" } else { "fail" },
            sc.beta,
            levels.join(", "),
            sc.ipr.median,
            ipr_cut,
            sc.verdict
        ),
    }
}

fn criterion_11() -> Outcome {
    let mut cfs = vec![
        ("golden", expand(&HighPrecisionReal::golden(2048), 60).unwrap()),
        ("sqrt2-1", expand(&HighPrecisionReal::sqrt2_minus_one(2048), 60).unwrap()),
        ("synth 1.5", synth_alpha_with_prefix(&[1, 4], 1.5, 4).unwrap()),
    ];
    let mut levels = 4;
    while synth_alpha_with_prefix(&[1], 0.5, levels + 1).is_ok() && levels < 7 {
        levels += 1;
    }
    cfs.push(("synth 0.5", synth_alpha_with_prefix(&[1], 0.5, levels).unwrap()));
    let (mut literal_lower, mut literal_upper, mut standard, mut best, mut checked, mut scanned) = (0, 0, 0, 0, 0, 0);
    let mut standard_at = Vec::new();
    for (name, cf) in &cfs {
        let qm = cf.q.last().unwrap().clone();
        let pm = cf.p.last().unwrap().clone();
        // with the proxy p_M/q_M the tail [0; a_{n+2}, ..., a_M] is exact
        // below 1 only for n ≤ M − 3
        for n in 0..cf.q.len().saturating_sub(3) {
            let (r, _) = cf.qn_alpha_norm_exact(n);
            let qn = &cf.q[n];
            let qn1 = &cf.q[n + 1];
            checked += 1;
            // 1/q_{n+1} ≤ r/q_M ≤ 2/q_{n+1}
            if &qm > &(&r * qn1) {
                literal_lower += 1;
            }
            if &r * qn1 > &qm * 2u32 {
                literal_upper += 1;
            }
            // 1/(q_n + q_{n+1}) < |q_n α − p_n| < 1/q_{n+1}
            let dist = (BigInt::from(qn.clone()) * &pm - &cf.p[n] * BigInt::from(qm.clone())).magnitude().clone();
            if !(&dist * (qn + qn1) > qm && &dist * qn1 < qm) {
                standard += 1;
                standard_at.push(format!("{name} n={n}"));
            }
            if qn1 <= &BigUint::from(100_000u32) {
                let q1: u64 = qn1.try_into().unwrap();
                for k in 1..q1 {
                    scanned += 1;
                    if cf.k_alpha_norm_exact(&BigInt::from(k)) < r {
                        best += 1;
                    }
                }
            }
        }
    }
    Outcome {
        id: 11,
        pass: literal_lower == 0 && literal_upper == 0 && standard == 0 && best == 0,
        detail: format!(
            "{checked} levels over 4 frequencies: 1/q_(n+1) <= |q_n a| violated at {literal_lower}, <= 2/q_(n+1) violated at {literal_upper}; \
             1/(q_n+q_(n+1)) < |q_n a - p_n| < 1/q_(n+1) violated at {standard} {standard_at:?}; best approximation violated at {best} of {scanned} scanned k"
        ),
    }
}

fn criterion_12() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let runs: [(&str, &[&str]); 3] = [
        ("ids.csv", &["ids", "--lambda", "0.1,0.5,0.2", "--N", "300", "--n_phases", "8", "--n_e", "40"]),
        ("lyapunov.csv", &["lyapunov", "--lambda", "0.1,0.5,0.2", "--n_iter", "50000", "--n_phases", "8"]),
        ("index.csv", &["sweep", "--of", "rotation", "--lambda", "0.1,0.5,0.2", "--n_iter", "20000", "--axis", "energy=lin:-2:2:6"]),
    ];
    let mut identical = 0;
    let mut detail = Vec::new();
    for (file, args) in runs {
        let mut bodies = Vec::new();
        for th in ["1", "2", "4"] {
            let out = dir.path().join(format!("{file}-{th}"));
            let mut v: Vec<String> = vec!["speclab".into()];
            v.extend(args.iter().map(|s| s.to_string()));
            v.extend(["--threads".into(), th.into(), "--seed".into(), "17".into(), "--out".into(), out.to_string_lossy().into_owned()]);
            assert_eq!(speclab::cli::run_args(&v), 0);
            bodies.push(std::fs::read(out.join(file)).unwrap());
        }
        let same = bodies.windows(2).all(|w| w[0] == w[1]);
        identical += same as usize;
        detail.push(format!("{file} {}", if same { "identical" } else { "differs" }));
    }
    Outcome { id: 12, pass: identical == 3, detail: format!("threads 1/2/4: {}", detail.join(", ")) }
}

/// `ACCEPTANCE_ONLY=4,7` restricts the run to the listed criteria.
fn selected(id: u32) -> bool {
    match std::env::var("ACCEPTANCE_ONLY") {
        Ok(list) => list.split(',').any(|s| s.trim().parse() == Ok(id)),
        Err(_) => true,
    }
}

fn main() {
    let mut all = Vec::new();
    let mut push = |o: Outcome| {
        println!("criterion {}: {} - {}", o.id, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        all.push(o);
    };
    let simple: [(u32, fn() -> Outcome); 4] = [(1, criterion_1), (2, criterion_2), (3, criterion_3), (4, criterion_4)];
    for (id, f) in simple {
        if selected(id) {
            push(f());
        }
    }
    if selected(5) {
        push(criterion_5());
    }
    if selected(6) {
        push(criterion_6());
    }
    if selected(7) || selected(8) {
        let (c7, sub) = criterion_7();
        if selected(7) {
            push(c7);
        }
        if selected(8) {
            push(criterion_8(sub.as_ref()));
        }
    }
    let rest: [(u32, fn() -> Outcome); 4] = [(9, criterion_9), (10, criterion_10), (11, criterion_11), (12, criterion_12)];
    for (id, f) in rest {
        if selected(id) {
            push(f());
        }
    }
    let unexpected: Vec<u32> = all.iter().filter(|o| !o.pass && !KNOWN_FAILURES.contains(&o.id)).map(|o| o.id).collect();
    let fixed: Vec<u32> = all.iter().filter(|o| o.pass && KNOWN_FAILURES.contains(&o.id)).map(|o| o.id).collect();
    println!("known failures: {KNOWN_FAILURES:?}");
    if !unexpected.is_empty() {
        eprintln!("criteria failing: {unexpected:?}");
        std::process::exit(1);
    }
    if !fixed.is_empty() {
        eprintln!("criteria listed as known failures now pass: {fixed:?}");
        std::process::exit(1);
    }
    println!("acceptance: ok");
}
