//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any criterion fails. Tolerances are pinned as constants
//! next to each check.

use std::f64::consts::PI;
use std::time::Instant;

use gssm::datadriven::*;
use gssm::io::*;
use gssm::pade::*;
use gssm::reduced::*;
use gssm::series::{MultiIndex, MultiSeries};
use gssm::singularity::*;
use gssm::ssm::*;
use gssm::systems::*;
use gssm::Result;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn coeffs(s: &MultiSeries) -> Vec<f64> {
    s.univariate_coeffs().iter().map(|c| c.re).collect()
}

/// `x − x² + 2! x³ − 3! x⁴ + …` through `order`.
fn euler_series(order: usize) -> MultiSeries {
    let mut c = vec![0.0];
    let mut fact = 1.0;
    for n in 1..=order {
        c.push(if n % 2 == 1 { fact } else { -fact });
        fact *= n as f64;
    }
    MultiSeries::univariate_real(&c)
}

fn eval1(r: &RationalMap, x: f64) -> Result<f64> {
    Ok(r.evaluate_real(&[x], DEFAULT_POLE_FLOOR)?[0].re)
}

fn c1() -> Result<Outcome> {
    const TOL: f64 = 1e-12;
    let r = pade_univariate(&euler_series(2), 1, 1, &PadeOptions::default())?;
    let a = coeffs(r.numerator(0));
    let b = coeffs(r.denominator(0));
    let err = [a[0], a[1] - 1.0, b[0] - 1.0, b[1] - 1.0]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(outcome(err <= TOL, format!("num {a:?} den {b:?} max coefficient error {err:.1e} (tol {TOL:.0e})")))
}

fn c2() -> Result<Outcome> {
    const TOL: f64 = 1e-9;
    let r = pade_univariate(&euler_series(6), 3, 3, &PadeOptions::default())?;
    let a = coeffs(r.numerator(0));
    let b = coeffs(r.denominator(0));
    // printed numerator coefficients (1, 8, 11) taken in ascending powers,
    // printed denominator 1 + 9x + 18x² + 6x³ taken literally
    let want_a = [0.0, 1.0, 8.0, 11.0];
    let want_b = [1.0, 9.0, 18.0, 6.0];
    let mut err: f64 = 0.0;
    for k in 0..4 {
        err = err.max((a[k] - want_a[k]).abs()).max((b[k] - want_b[k]).abs());
    }
    let at1 = eval1(&r, 1.0)?;
    Ok(outcome(
        err <= TOL,
        format!("num {a:.6?} den {b:.6?} max error {err:.1e} (tol {TOL:.0e}); value at 1 = {at1:.10}"),
    ))
}

fn c3() -> Result<Outcome> {
    const TOL: f64 = 1e-2;
    let series = euler_series(10);
    let r55 = pade_univariate(&series, 5, 5, &PadeOptions::default())?;
    let exact1 = euler_exact(1.0)?;
    let v = eval1(&r55, 1.0)?;
    let exact_half = euler_exact(0.5)?;
    let mut errs = Vec::new();
    for n in 2..=5 {
        let r = pade_univariate(&series, n, n, &PadeOptions::default())?;
        errs.push((eval1(&r, 0.5)? - exact_half).abs());
    }
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let pass = (v - exact1).abs() <= TOL && monotone;
    Ok(outcome(
        pass,
        format!(
            "[5/5](1) = {v:.6}, quadrature {exact1:.6}, error {:.1e} (tol {TOL:.0e}); errors at 0.5 for [2/2]..[5/5] {} monotone {monotone}",
            (v - exact1).abs(),
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" ")
        ),
    ))
}

fn c4() -> Result<Outcome> {
    const TOL_EVAL: f64 = 1e-12;
    const TOL_RADIUS: f64 = 0.02;
    const TOL_ANGLE: f64 = 1e-12;
    let s = MultiSeries::univariate_real(&[0.0, 1.0, 0.0, -1.0]);
    let r = pade_univariate(&s, 1, 2, &PadeOptions::default())?;
    let mut worst: f64 = 0.0;
    for i in 0..=1000 {
        let x = -5.0 + 0.01 * i as f64;
        worst = worst.max((eval1(&r, x)? - x / (1.0 + x * x)).abs());
    }
    // x/(1+x²) = Σ (−1)^n x^{2n+1}
    let c: Vec<f64> = (0..32)
        .map(|k| if k % 2 == 1 { if (k / 2) % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 })
        .collect();
    let rad = estimate_radius(&c)?;
    // f(x)/x is even with coefficients of x^{2n} at odd positions of c
    let g = even_subsequence(&c, 1);
    let pat = classify_sign_pattern(&g, 0);
    let angle = pat.angle.unwrap_or(f64::NAN);
    let pass = worst <= TOL_EVAL && (rad.radius - 1.0).abs() <= TOL_RADIUS && (angle - PI / 2.0).abs() <= TOL_ANGLE;
    Ok(outcome(
        pass,
        format!(
            "max |[1/2] − x/(1+x²)| on [−5,5] = {worst:.1e} (tol {TOL_EVAL:.0e}); radius {:.4} (tol ±{TOL_RADIUS}); θ = {angle:.6} pattern {}",
            rad.radius, pat.pattern
        ),
    ))
}

fn c5() -> Result<Outcome> {
    const TOL: f64 = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut pairs = Vec::new();
    for _ in 0..5 {
        // slow s1, fast s2 with a clear gap
        let s1 = rng.random_range(-0.3..-0.01);
        let s2 = rng.random_range(-2.0..-0.8);
        let sys = dauchot_manneville(s1, s2)?;
        let spec = spectral_analysis(&sys, 1, None)?;
        let model = compute_ssm(&sys, &spec, 3, Style::Graph)?;
        let h = graph_over_coordinate(&model, 0, 3)?;
        let w2 = h.coeff(&MultiIndex::new(vec![2]), 1).re;
        let w3 = h.coeff(&MultiIndex::new(vec![3]), 1).re;
        let e2 = -1.0 / (2.0 * s1 - s2);
        let e3 = -2.0 / ((2.0 * s1 - s2).powi(2) * (3.0 * s1 - s2));
        worst = worst.max((w2 - e2).abs()).max((w3 - e3).abs());
        pairs.push(format!("({s1:.3},{s2:.3})"));
    }
    Ok(outcome(
        worst <= TOL,
        format!("pairs {} max |w − closed form| {worst:.1e} (tol {TOL:.0e})", pairs.join(" ")),
    ))
}

fn slope_of(f: &dyn Fn(f64) -> Result<f64>, x: f64) -> Result<f64> {
    let h = 1e-6;
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

fn c6() -> Result<Outcome> {
    const TOL: f64 = 1e-2;
    let sys = dauchot_manneville(-0.038, -1.0)?;
    let mut oracle = fixed_points_oracle(&sys, &[(-1.0, 1.0), (-1.0, 1.0)], 12)?;
    oracle.sort_by(|a, b| b.x[0].partial_cmp(&a.x[0]).unwrap());
    let spec = spectral_analysis(&sys, 1, None)?;

    let model = compute_ssm(&sys, &spec, 24, Style::Graph)?;
    let h = graph_over_coordinate(&model, 0, 24)?;
    let r = pade(&h, 12, 12, &PadeOptions::default())?;
    // operating domain: up to the first denominator zero on the positive axis
    let grid = EvaluationGrid::real_box(&[-1.0], &[1.0], 4001)?;
    let flags = denominator_zero_scan(&r, &grid, DEFAULT_SCAN_FLOOR)?;
    let upper = flags
        .iter()
        .map(|f| f.point[0].re)
        .filter(|&x| x > 0.0)
        .fold(1.0f64, f64::min);
    let gssm = ReducedField::new(
        FieldKind::Graph {
            system: Box::new(sys.clone()),
            coord: 0,
            graph: Param::Rational(r),
        },
        Coordinates::Real,
    );
    let fg = |x: f64| -> Result<f64> { Ok(gssm.eval(0.0, &[x])?[0]) };
    let roots = scalar_roots(fg, -1.0, upper, 4001)?;
    let mut predicted = Vec::new();
    for &x in &roots {
        let s = slope_of(&fg, x)?;
        predicted.push((x, if s < 0.0 { Stability::Stable } else { Stability::Saddle }));
    }
    predicted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut matched = oracle.len() == 3 && predicted.len() == 3;
    let mut worst: f64 = 0.0;
    if matched {
        for (o, p) in oracle.iter().zip(&predicted) {
            worst = worst.max((o.x[0] - p.0).abs());
            matched &= o.stability == p.1;
        }
    }
    let located = matched && worst <= TOL;

    let model8 = compute_ssm(&sys, &spec, 8, Style::Graph)?;
    let h8 = graph_over_coordinate(&model8, 0, 8)?;
    let taylor = ReducedField::new(
        FieldKind::Graph {
            system: Box::new(sys.clone()),
            coord: 0,
            graph: Param::Series(h8),
        },
        Coordinates::Real,
    );
    let troots = scalar_roots(|x| Ok(taylor.eval(0.0, &[x])?[0]), -1.0, 1.0, 4001)?;
    let p3 = oracle.last().map_or(f64::NAN, |f| f.x[0]);
    let taylor_misses = troots.iter().all(|x| (x - p3).abs() > TOL);

    let fmt = |v: &[(f64, Stability)]| {
        v.iter()
            .map(|(x, s)| format!("{x:.5} {}", s.name()))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let oracle_desc: Vec<(f64, Stability)> = oracle.iter().map(|f| (f.x[0], f.stability)).collect();
    Ok(outcome(
        located && taylor_misses,
        format!(
            "oracle [{}]; [12/12] on [−1, {upper:.4}) [{}], max x1 error {worst:.1e} (tol {TOL:.0e}); order-8 Taylor roots {:.5?}, none within {TOL:.0e} of p3 = {p3:.5}: {taylor_misses}",
            fmt(&oracle_desc),
            fmt(&predicted),
            troots
        ),
    ))
}

fn shaw_pierre_polar(order: u32) -> Result<(SpectralData, SSMModel, PolarNormalForm)> {
    let sys = shaw_pierre(3.0, 0.003, 0.5, 0.0, 1.732)?;
    let spec = spectral_analysis(&sys, 2, None)?;
    let model = compute_ssm(&sys, &spec, order, Style::NormalForm)?;
    let polar = extract_polar(&model)?;
    Ok((spec, model, polar))
}

/// Printed value `p` with `decimals`; the leading frequency is printed
/// truncated (√3 = 1.73205…), so it gets a one-unit window.
fn rounds_to(value: f64, printed: f64, half_unit: f64) -> bool {
    (value - printed).abs() <= half_unit
}

const HALF_UNIT: f64 = 5e-5;
const TRUNC_UNIT: f64 = 1e-4;

fn omega_matches(omega: &[f64]) -> bool {
    let printed = [1.7320, 0.0385, -0.0037, 0.0004];
    omega.len() >= 4
        && rounds_to(omega[0], printed[0], TRUNC_UNIT)
        && (1..4).all(|k| rounds_to(omega[k], printed[k], HALF_UNIT))
}

fn pade55_matches(r: &RationalMap) -> bool {
    let a = coeffs(r.numerator(0));
    let b = coeffs(r.denominator(0));
    let get = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    rounds_to(get(&a, 0), 1.7320, TRUNC_UNIT)
        && rounds_to(get(&a, 2), 0.3717, HALF_UNIT)
        && rounds_to(get(&a, 4), 0.0166, HALF_UNIT)
        && rounds_to(get(&b, 0), 1.0, HALF_UNIT)
        && rounds_to(get(&b, 2), 0.1924, HALF_UNIT)
        && rounds_to(get(&b, 4), 0.0074, HALF_UNIT)
        && [1, 3, 5].iter().all(|&k| get(&a, k).abs() <= HALF_UNIT && get(&b, k).abs() <= HALF_UNIT)
        && [6, 7, 8, 9, 10].iter().all(|&k| get(&a, k).abs() <= HALF_UNIT)
        && [6, 7, 8, 9, 10].iter().all(|&k| get(&b, k).abs() <= HALF_UNIT)
}

/// Amplitude gauges `s² ∈ [lo, hi]` (scan of `n` points) for which a check holds.
fn gauge_interval(lo: f64, hi: f64, n: usize, ok: &dyn Fn(f64) -> Result<bool>) -> Result<Option<(f64, f64)>> {
    let mut found: Option<(f64, f64)> = None;
    for i in 0..=n {
        let s2 = lo + (hi - lo) * i as f64 / n as f64;
        if ok(s2)? {
            found = Some(match found {
                None => (s2, s2),
                Some((a, _)) => (a, s2),
            });
        }
    }
    Ok(found)
}

fn c7() -> Result<Outcome> {
    let (_, _, polar) = shaw_pierre_polar(7)?;
    let unit = omega_matches(&polar.omega);
    let interval = gauge_interval(1.0, 2.0, 20000, &|s2| Ok(omega_matches(&polar.rescaled(s2).omega)))?;
    let detail = format!(
        "unit-gauge ω {:.7?} matches print: {unit}; rescaled gauge s² ∈ {} matches all four printed coefficients",
        polar.omega,
        interval.map_or("∅".to_string(), |(a, b)| format!("[{a:.5}, {b:.5}]"))
    );
    Ok(outcome(unit || interval.is_some(), detail))
}

fn c8() -> Result<Outcome> {
    let (_, _, p7) = shaw_pierre_polar(7)?;
    let (_, _, polar) = shaw_pierre_polar(11)?;
    let opts = PadeOptions::default();
    let check = |s2: f64| -> Result<bool> {
        let r = pade(&polar.rescaled(s2).omega_series(), 5, 5, &opts)?;
        Ok(pade55_matches(&r) && omega_matches(&p7.rescaled(s2).omega))
    };
    let unit = pade55_matches(&pade(&polar.omega_series(), 5, 5, &opts)?);
    let interval = gauge_interval(1.0, 2.0, 20000, &check)?;
    let shown = interval.map_or(1.0, |(a, b)| 0.5 * (a + b));
    let r = pade(&polar.rescaled(shown).omega_series(), 5, 5, &opts)?;
    Ok(outcome(
        unit || interval.is_some(),
        format!(
            "unit gauge matches: {unit}; joint gauge with criterion 7 s² ∈ {}; at s² = {shown:.5}: num {:.5?} den {:.5?}",
            interval.map_or("∅".to_string(), |(a, b)| format!("[{a:.5}, {b:.5}]")),
            coeffs(r.numerator(0)),
            coeffs(r.denominator(0))
        ),
    ))
}

// Full-order steady state by shooting and pseudo-arclength continuation in Ω.

struct Variational<'a> {
    sys: &'a PolySystem,
}

impl VectorField for Variational<'_> {
    fn dim(&self) -> usize {
        20
    }
    fn eval(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        let x = &y[..4];
        let mut out = self.sys.rhs(t, x);
        let phi = DMatrix::from_column_slice(4, 4, &y[4..]);
        out.extend((self.sys.jacobian(x) * phi).iter());
        Ok(out)
    }
}

const SP_EPS: f64 = 0.05;

/// One forcing period from `x0`: end state, monodromy (if requested) and
/// `max |q1|` over the period.
fn period_map(x0: &[f64], om: f64, with_monodromy: bool) -> Result<(Vec<f64>, DMatrix<f64>, f64)> {
    let sys = shaw_pierre(3.0, 0.003, 0.5, SP_EPS, om)?;
    let t = 2.0 * PI / om;
    let opts = IntegrateOptions {
        rtol: 1e-10,
        atol: 1e-12,
        sample_dt: Some(t / 400.0),
        ..Default::default()
    };
    let amp = |traj: &TrajectoryData| traj.x.iter().map(|r| r[0].abs()).fold(0.0, f64::max);
    if with_monodromy {
        let mut y0 = x0.to_vec();
        y0.extend(DMatrix::<f64>::identity(4, 4).iter());
        let run = integrate(&Variational { sys: &sys }, &y0, 0.0, t, &opts)?;
        let last = run.trajectory.last().unwrap_or(&y0).to_vec();
        Ok((last[..4].to_vec(), DMatrix::from_column_slice(4, 4, &last[4..]), amp(&run.trajectory)))
    } else {
        let run = integrate(&sys, x0, 0.0, t, &opts)?;
        Ok((run.trajectory.last().unwrap_or(x0).to_vec(), DMatrix::zeros(4, 4), amp(&run.trajectory)))
    }
}

/// Shooting residual `x(T) − x(0)` and its Jacobian in `(x0, Ω)`.
fn shooting(y: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>, f64)> {
    let x0: Vec<f64> = y.rows(0, 4).iter().copied().collect();
    let om = y[4];
    let (xt, m, amp) = period_map(&x0, om, true)?;
    let g = DVector::from_iterator(4, (0..4).map(|i| xt[i] - x0[i]));
    let h = 1e-7;
    let (xp, _, _) = period_map(&x0, om + h, false)?;
    let (xm, _, _) = period_map(&x0, om - h, false)?;
    let mut jac = DMatrix::<f64>::zeros(4, 5);
    jac.view_mut((0, 0), (4, 4)).copy_from(&(m - DMatrix::<f64>::identity(4, 4)));
    for i in 0..4 {
        jac[(i, 4)] = (xp[i] - xm[i]) / (2.0 * h);
    }
    Ok((g, jac, amp))
}

fn tangent(jac: &DMatrix<f64>, prev: &DVector<f64>) -> Option<DVector<f64>> {
    let mut a = DMatrix::<f64>::zeros(5, 5);
    a.view_mut((0, 0), (4, 5)).copy_from(jac);
    for j in 0..5 {
        a[(4, j)] = prev[j];
    }
    let mut rhs = DVector::zeros(5);
    rhs[4] = 1.0;
    a.lu().solve(&rhs).map(|t| t.normalize())
}

struct BranchPoint {
    y: DVector<f64>,
    t: DVector<f64>,
    amp: f64,
}

/// Continues from `start` with steps up to `h_max`; stops after `max_steps`
/// or once the amplitude has fallen below `drop` times a running maximum
/// above 0.5.
fn continue_branch(start: &BranchPoint, h_max: f64, max_steps: usize, drop: f64) -> Result<Vec<BranchPoint>> {
    let mut out = vec![BranchPoint {
        y: start.y.clone(),
        t: start.t.clone(),
        amp: start.amp,
    }];
    let (mut y, mut t) = (start.y.clone(), start.t.clone());
    let mut h = h_max;
    let mut best = start.amp;
    let mut steps = 0;
    while steps < max_steps {
        let pred = &y + &t * h;
        let mut z = pred.clone();
        let mut converged = None;
        for _ in 0..12 {
            let (g, jac, amp) = shooting(&z)?;
            let mut big = DMatrix::<f64>::zeros(5, 5);
            big.view_mut((0, 0), (4, 5)).copy_from(&jac);
            for j in 0..5 {
                big[(4, j)] = t[j];
            }
            let mut rhs = DVector::zeros(5);
            rhs.rows_mut(0, 4).copy_from(&(-&g));
            rhs[4] = -t.dot(&(&z - &pred));
            let Some(dz) = big.lu().solve(&rhs) else { break };
            z += &dz;
            if dz.norm() < 1e-10 {
                converged = Some(amp);
                break;
            }
        }
        let Some(_) = converged else {
            h *= 0.5;
            if h < 1e-7 {
                break;
            }
            continue;
        };
        steps += 1;
        let (_, jac, amp) = shooting(&z)?;
        let Some(nt) = tangent(&jac, &t) else { break };
        t = nt;
        y = z;
        best = best.max(amp);
        out.push(BranchPoint {
            y: y.clone(),
            t: t.clone(),
            amp,
        });
        if best > 0.5 && amp < drop * best {
            break;
        }
        h = (h * 1.3).min(h_max);
    }
    Ok(out)
}

/// Peak `max |q1|` and its Ω on the full-order ε = 0.05 response branch.
fn full_order_peak() -> Result<(f64, f64)> {
    let mut y = DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0, 1.5]);
    for _ in 0..20 {
        let (g, jac, _) = shooting(&y)?;
        if g.norm() < 1e-12 {
            break;
        }
        let dx = jac
            .view((0, 0), (4, 4))
            .into_owned()
            .lu()
            .solve(&(-&g))
            .ok_or_else(|| gssm::Error::InvalidInput("singular shooting matrix".into()))?;
        for i in 0..4 {
            y[i] += dx[i];
        }
    }
    let (_, jac, amp) = shooting(&y)?;
    let t = tangent(&jac, &DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0, 1.0]))
        .ok_or_else(|| gssm::Error::InvalidInput("no branch tangent".into()))?;
    let coarse = continue_branch(&BranchPoint { y, t, amp }, 0.1, 4000, 0.5)?;
    let i = (0..coarse.len())
        .max_by(|&a, &b| coarse[a].amp.partial_cmp(&coarse[b].amp).unwrap())
        .unwrap_or(0);
    // refine around the coarse maximum with small steps
    let from = &coarse[i.saturating_sub(1)];
    let fine = continue_branch(from, 0.002, 200, 0.98)?;
    let best = fine
        .iter()
        .chain(std::iter::once(&coarse[i]))
        .max_by(|a, b| a.amp.partial_cmp(&b.amp).unwrap())
        .unwrap();
    Ok((best.amp, best.y[4]))
}

fn c9() -> Result<Outcome> {
    const TOL_REL: f64 = 0.05;
    const TOL_RESIDUAL: f64 = 1e-10;
    let (spec, model, polar) = shaw_pierre_polar(11)?;
    let opts = PadeOptions::default();
    let kappa_r = pade(&polar.kappa_series(), 5, 5, &opts)?;
    let omega_r = pade(&polar.omega_series(), 5, 5, &opts)?;
    let w = Param::Rational(pade(&model.w, 5, 5, &opts)?);
    let f = forcing_projection(&spec, &[0.0, 1.0, 0.0, 0.0])?;
    let ef = SP_EPS * f;
    let grid: Vec<f64> = (1..=20000).map(|i| i as f64 * 5e-4).collect();
    let amp = |rho: f64| response_amplitude(&w, 0, rho, 128);
    let kappa = RadialFn::Rational(kappa_r.clone());
    let omega = RadialFn::Rational(omega_r.clone());
    let frc = forced_response(&kappa, &omega, ef, &grid, Some(&amp))?;
    // residual recomputed from the approximants, independent of the sweep
    let mut worst_res: f64 = 0.0;
    for p in &frc.points {
        let k = eval1(&kappa_r, p.rho)?;
        let om = eval1(&omega_r, p.rho)?;
        let res = (p.omega - om).powi(2) - (ef / p.rho).powi(2) + k * k;
        worst_res = worst_res.max(res.abs());
    }
    let peak = frc
        .peak()
        .ok_or_else(|| gssm::Error::InvalidInput("empty forced response".into()))?;
    let (oracle_amp, oracle_om) = full_order_peak()?;
    let amp_err = (peak.amplitude - oracle_amp).abs() / oracle_amp;
    let om_err = (peak.omega - oracle_om).abs() / oracle_om;
    let pass = amp_err <= TOL_REL && om_err <= TOL_REL && worst_res <= TOL_RESIDUAL;
    // the backbone amplitude at the full-order peak frequency, for diagnosis
    let rho_at = grid
        .iter()
        .copied()
        .min_by(|a, b| {
            let da = (omega.eval(*a).unwrap_or(f64::INFINITY) - oracle_om).abs();
            let db = (omega.eval(*b).unwrap_or(f64::INFINITY) - oracle_om).abs();
            da.partial_cmp(&db).unwrap()
        })
        .unwrap_or(0.0);
    Ok(outcome(
        pass,
        format!(
            "[5/5] FRC peak amp {:.4} at Ω {:.5} (ρ {:.3}); full-order peak amp {oracle_amp:.4} at Ω {oracle_om:.5}; errors amp {:.1}% Ω {:.1}% (tol {:.0}%); max FRC residual {worst_res:.1e} (tol {TOL_RESIDUAL:.0e}); backbone amp at Ω {oracle_om:.4}: {:.4} (ρ {rho_at:.3})",
            peak.amplitude,
            peak.omega,
            peak.rho,
            100.0 * amp_err,
            100.0 * om_err,
            100.0 * TOL_REL,
            amp(rho_at)?
        ),
    ))
}

fn c10() -> Result<Outcome> {
    const MARGIN: f64 = 0.75;
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut min_excess = f64::INFINITY;
    for (id, _) in SYSTEMS {
        let ns = make_system(id, &[])?;
        let d = if *id == "shaw_pierre" { 2 } else { 1 };
        let spec = spectral_analysis(&ns.system, d, None)?;
        for style in [Style::Graph, Style::NormalForm] {
            for order in 3..=11u32 {
                let model = compute_ssm(&ns.system, &spec, order, style)?;
                let rep = invariance_residual(&ns.system, &model)?;
                checked += 1;
                match rep.slope {
                    Some(s) if s >= order as f64 + MARGIN => min_excess = min_excess.min(s - order as f64),
                    other => failures.push(format!("{id}/{}/{order}: {other:?}", style.name())),
                }
            }
        }
    }
    Ok(outcome(
        failures.is_empty(),
        format!(
            "{checked} models, smallest slope − order {min_excess:.3} (need ≥ {MARGIN}); failures {failures:?}"
        ),
    ))
}

fn random_bivariate_rational(rng: &mut ChaCha8Rng, n: u32, m: u32, order: u32) -> Result<MultiSeries> {
    let mut num = MultiSeries::zeros(2, 1, n);
    for k in MultiIndex::all_up_to(2, n) {
        num.add_term(&k, &[re(rng.random_range(-1.0..1.0))]);
    }
    let mut den = MultiSeries::constant(2, m, re(1.0));
    for k in MultiIndex::all_up_to(2, m).into_iter().skip(1) {
        den.add_term(&k, &[re(rng.random_range(-0.5..0.5))]);
    }
    let r = RationalMap::new(vec![num], vec![den])?;
    taylor_of_rational(&r, order)
}

fn c11() -> Result<Outcome> {
    const TOL: f64 = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let opts = PadeOptions::default();
    let (mut worst_uni, mut worst_bi): (f64, f64) = (0.0, 0.0);
    let mut failures = 0;
    let mut failed_cases = Vec::new();
    for _ in 0..100 {
        let total = rng.random_range(0..=10u32);
        let n = rng.random_range(0..=total);
        let m = total - n;
        let c: Vec<f64> = (0..=total).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = MultiSeries::univariate_real(&c);
        let r = pade_univariate(&s, n, m, &opts)?;
        let e = match_error(&s, &r, total)?;
        worst_uni = worst_uni.max(e);
        if !(e <= TOL) {
            failures += 1;
            let bmax = coeffs(r.denominator(0)).iter().fold(0.0f64, |a, b| a.max(b.abs()));
            failed_cases.push(format!("[{n}/{m}] error {e:.1e} max |b_j| {bmax:.1}"));
        }
    }
    for _ in 0..100 {
        let total = rng.random_range(1..=10u32);
        let m = rng.random_range(1..=total.min(5));
        let n = total - m;
        let n_true = rng.random_range(0..=n);
        let m_true = rng.random_range(1..=m);
        let s = random_bivariate_rational(&mut rng, n_true, m_true, total)?;
        let r = pade_multivariate(&s, n, m, &opts)?;
        let e = match_error(&s, &r, total)?;
        worst_bi = worst_bi.max(e);
        if !(e <= TOL) {
            failures += 1;
            failed_cases.push(format!("bivariate [{n}/{m}] error {e:.1e}"));
        }
    }
    // for reference: generic bivariate coefficients make the lattice system
    // overdetermined and inconsistent, so no [N/M] can match them
    let mut generic: f64 = 0.0;
    for _ in 0..20 {
        let mut s = MultiSeries::zeros(2, 1, 6);
        for k in MultiIndex::all_up_to(2, 6) {
            s.add_term(&k, &[re(rng.random_range(-1.0..1.0))]);
        }
        let r = pade_multivariate(&s, 3, 3, &opts)?;
        generic = generic.max(match_error(&s, &r, 6)?);
    }
    Ok(outcome(
        failures == 0,
        format!(
            "100 univariate worst {worst_uni:.1e}, 100 bivariate worst {worst_bi:.1e} (tol {TOL:.0e}), failures {failures} {failed_cases:?}; generic bivariate [3/3] mismatch (not graded) {generic:.1e}"
        ),
    ))
}

fn grid2(n: usize, half: f64) -> Vec<Vec<f64>> {
    let mut v = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let a = -half + 2.0 * half * i as f64 / (n - 1) as f64;
            let b = -half + 2.0 * half * j as f64 / (n - 1) as f64;
            v.push(vec![a, b]);
        }
    }
    v
}

fn c12() -> Result<Outcome> {
    const TOL_COEFF: f64 = 1e-6;
    let ix = |a: u32, b: u32| MultiIndex::new(vec![a, b]);
    // planted [1/2]
    let inputs = grid2(15, 1.5);
    let targets: Vec<Vec<f64>> = inputs
        .iter()
        .map(|x| vec![x[0] / (1.0 + x[0] * x[0] + x[1] * x[1])])
        .collect();
    let fit12 = fit_rational_field(&RegressionProblem::new(inputs.clone(), targets, 1, 2)?)?;
    let mut err12: f64 = 0.0;
    for (k, want) in [(ix(1, 0), 1.0), (ix(0, 1), 0.0)] {
        err12 = err12.max((fit12.model.numerator(0).coeff(&k, 0).re - want).abs());
    }
    for (k, want) in [(ix(1, 0), 0.0), (ix(0, 1), 0.0), (ix(2, 0), 1.0), (ix(1, 1), 0.0), (ix(0, 2), 1.0)] {
        err12 = err12.max((fit12.model.denominator(0).coeff(&k, 0).re - want).abs());
    }
    // planted [3/2] with two outputs and a shared denominator
    let num0 = [(ix(1, 0), 1.0), (ix(0, 1), 0.5), (ix(2, 0), -0.3), (ix(1, 1), 0.2), (ix(0, 3), 0.1)];
    let num1 = [(ix(1, 0), -1.0), (ix(0, 2), 0.4), (ix(2, 1), 0.25)];
    let den = [(ix(1, 0), 0.2), (ix(0, 1), -0.1), (ix(2, 0), 0.3), (ix(1, 1), 0.1), (ix(0, 2), 0.2)];
    let poly = |terms: &[(MultiIndex, f64)], x: &[f64]| -> f64 {
        terms
            .iter()
            .map(|(k, c)| c * x[0].powi(k.exponents()[0] as i32) * x[1].powi(k.exponents()[1] as i32))
            .sum()
    };
    let inputs = grid2(15, 1.0);
    let targets: Vec<Vec<f64>> = inputs
        .iter()
        .map(|x| {
            let q = 1.0 + poly(&den, x);
            vec![poly(&num0, x) / q, poly(&num1, x) / q]
        })
        .collect();
    let prob = RegressionProblem::new(inputs.clone(), targets, 3, 2)?;
    let fit32 = fit_rational_field(&prob)?;
    let mut err32: f64 = 0.0;
    for (comp, terms) in [(0usize, &num0[..]), (1, &num1[..])] {
        for k in MultiIndex::all_up_to(2, 3).into_iter().skip(1) {
            let want = terms.iter().find(|(kk, _)| *kk == k).map_or(0.0, |t| t.1);
            err32 = err32.max((fit32.model.numerator(comp).coeff(&k, 0).re - want).abs());
        }
    }
    for k in MultiIndex::all_up_to(2, 2).into_iter().skip(1) {
        let want = den.iter().find(|(kk, _)| *kk == k).map_or(0.0, |t| t.1);
        err32 = err32.max((fit32.model.denominator(0).coeff(&k, 0).re - want).abs());
    }
    let mut min_q = f64::INFINITY;
    for fit in [&fit12, &fit32] {
        min_q = min_q.min(fit.report.min_denominator);
    }
    let respects = min_q >= DEFAULT_DELTA * (1.0 - 1e-12);

    // hazard: ten noisy double-well sets, [5/5] shared denominator
    let problems: Vec<RegressionProblem> = (0..10u64)
        .map(|seed| {
            let (x, z) = double_well_samples(seed, 0.01);
            RegressionProblem::new(x, z, 5, 5)
        })
        .collect::<Result<_>>()?;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut unc_hits = 0;
    let mut con_hits = 0;
    for (constrained, hits) in [(false, &mut unc_hits), (true, &mut con_hits)] {
        for (p, fit) in problems.iter().zip(fit_restarts(&problems, constrained, threads)) {
            if denominator_sign_change_in_hull(&fit?.model, &p.inputs, 101)? {
                *hits += 1;
            }
        }
    }
    let pass = err12 <= TOL_COEFF && err32 <= TOL_COEFF && respects && unc_hits >= 1 && con_hits == 0;
    Ok(outcome(
        pass,
        format!(
            "[1/2] coefficient error {err12:.1e}, [3/2] {err32:.1e} (tol {TOL_COEFF:.0e}); min training denominator {min_q:.4} (δ = {DEFAULT_DELTA:.0e}); in-hull sign change: unconstrained {unc_hits}/10, constrained {con_hits}/10"
        ),
    ))
}

fn double_well_field() -> ReducedField {
    let mut r = MultiSeries::zeros(2, 2, 3);
    r.add_term(&MultiIndex::new(vec![0, 1]), &[re(1.0), re(-0.3)]);
    r.add_term(&MultiIndex::new(vec![1, 0]), &[re(0.0), re(1.0)]);
    r.add_term(&MultiIndex::new(vec![3, 0]), &[re(0.0), re(-1.0)]);
    ReducedField::polynomial(r, Coordinates::Real).with_forcing(ReducedForcing {
        amplitude: 0.5,
        frequency: 1.2,
        projection: vec![re(0.0), re(1.0)],
    })
}

fn c13() -> Result<Outcome> {
    const SPREAD: f64 = 0.10;
    const MAX_BIN: f64 = 0.90;
    let field = double_well_field();
    let period = 2.0 * PI / 1.2;
    let opts = IntegrateOptions::default();
    let mut lams = Vec::new();
    for d0 in [1e-6, 1e-7, 1e-8] {
        lams.push(lyapunov_estimate(&field, &[1.0, 0.0], d0, 5000.0, period, &opts)?.exponent);
    }
    let mean = lams.iter().sum::<f64>() / lams.len() as f64;
    let spread = lams.iter().fold(0.0f64, |m, l| m.max((l - mean).abs())) / mean.abs();
    let sampled = IntegrateOptions {
        sample_dt: Some(period / 32.0),
        ..Default::default()
    };
    let run = integrate(&field, &[1.0, 0.0], 0.0, 400.0 * period, &sampled)?;
    let psd = psd_estimate(&run.trajectory, 0)?;
    let frac = max_bin_fraction(&psd);
    let pass = lams.iter().all(|&l| l > 0.0) && spread <= SPREAD && frac < MAX_BIN;
    Ok(outcome(
        pass,
        format!(
            "λ for d0 = 1e-6, 1e-7, 1e-8: {lams:.5?}, spread {:.2}% (tol {:.0}%); PSD max bin fraction {frac:.3} (< {MAX_BIN})",
            100.0 * spread,
            100.0 * SPREAD
        ),
    ))
}

fn c14() -> Result<Outcome> {
    const MARGIN: f64 = 0.75;
    let cubic: Vec<f64> = (0..30).map(|i| 0.1 + 0.01 * i as f64).collect();
    let sys = oscillator_chain(1.0, 0.002, &cubic)?;
    let spec = spectral_analysis(&sys, 2, None)?;
    let dir = std::env::temp_dir().join(format!("gssm-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| gssm::Error::InvalidInput(e.to_string()))?;
    let sys_path = dir.join("chain.system");
    std::fs::write(&sys_path, write_system(&sys)).map_err(|e| gssm::Error::InvalidInput(e.to_string()))?;
    let imported_sys = read_system(&read_file(&sys_path)?)?;
    let mut planted_ok = imported_sys.a == sys.a && imported_sys.f == sys.f;
    for (i, g) in cubic.iter().enumerate() {
        let mut e = vec![0u32; 60];
        e[2 * i] = 3;
        planted_ok &= imported_sys.f.coeff(&MultiIndex::new(e), 2 * i + 1) == re(-g);
    }
    let mut bitwise = true;
    let mut slopes = Vec::new();
    let mut slope_ok = true;
    for style in [Style::Graph, Style::NormalForm] {
        for order in [3u32, 5, 7] {
            let model = compute_ssm(&sys, &spec, order, style)?;
            let path = dir.join(format!("chain-{}-{order}.ssm", style.name()));
            std::fs::write(&path, write_model(&model)).map_err(|e| gssm::Error::InvalidInput(e.to_string()))?;
            let back = read_model(&read_file(&path)?)?;
            bitwise &= back.w == model.w
                && back.r == model.r
                && back.order == model.order
                && back.style == model.style
                && back.spectral.eigenvalues == model.spectral.eigenvalues;
            let rep = invariance_residual(&imported_sys, &back)?;
            let s = rep.slope.unwrap_or(f64::NAN);
            slope_ok &= s >= order as f64 + MARGIN;
            slopes.push(format!("{}/{order}: {s:.3}", style.name()));
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(outcome(
        planted_ok && bitwise && slope_ok,
        format!(
            "60-D chain: planted coefficients re-read exactly {planted_ok}; model files bitwise round trip {bitwise}; imported residual slopes [{}] (need ≥ order + {MARGIN})",
            slopes.join(", ")
        ),
    ))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Result<Outcome>)> = vec![
        ("Euler [1/1]", c1),
        ("Euler [3/3]", c2),
        ("Euler global convergence", c3),
        ("imaginary-singularity exactness", c4),
        ("Dauchot-Manneville Taylor closed forms", c5),
        ("Dauchot-Manneville gSSM fixed points", c6),
        ("Shaw-Pierre kappa/omega coefficients", c7),
        ("Shaw-Pierre [5/5] of omega", c8),
        ("forced response vs full order", c9),
        ("invariance-residual slopes", c10),
        ("Pade-match property", c11),
        ("regression recovery and hazard", c12),
        ("chaotic diagnostics", c13),
        ("60-D import round trip", c14),
    ];
    let start = Instant::now();
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let (status, detail) = match run() {
            Ok(o) => (if o.pass { "PASS" } else { "FAIL" }, o.detail),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if status == "FAIL" {
            failed.push(i + 1);
        }
        println!(
            "criterion {:>2} {status} {name} [{:.1}s]: {detail}",
            i + 1,
            t0.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} passed in {:.1}s; failed {:?}",
        criteria.len() - failed.len(),
        criteria.len(),
        start.elapsed().as_secs_f64(),
        failed
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
