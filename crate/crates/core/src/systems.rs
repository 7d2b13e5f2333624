//! Built-in example systems and brute-force oracles.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::{MultiIndex, MultiSeries};
use crate::ssm::{Forcing, PolySystem};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Identifier and default parameters of every built-in system.
pub const SYSTEMS: &[(&str, &[(&str, f64)])] = &[
    ("euler", &[]),
    ("dauchot_manneville", &[("s1", -0.038), ("s2", -1.0)]),
    ("imaginary_sing", &[("taylor_order", 25.0)]),
    (
        "shaw_pierre",
        &[("k", 3.0), ("c", 0.003), ("gamma", 0.5), ("eps", 0.0), ("Omega", 1.732)],
    ),
    (
        "double_well",
        &[("delta", 0.3), ("gamma", 0.5), ("Omega", 1.2)],
    ),
];

#[derive(Clone, Debug)]
pub struct NamedSystem {
    pub id: String,
    pub params: Vec<(String, f64)>,
    pub system: PolySystem,
}

impl NamedSystem {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

/// Resolve defaults and overrides; unknown parameter names are rejected.
fn resolve(id: &str, overrides: &[(String, f64)]) -> Result<Vec<(String, f64)>> {
    let defaults = SYSTEMS
        .iter()
        .find(|(name, _)| *name == id)
        .ok_or_else(|| Error::UnknownSystem(id.to_string()))?
        .1;
    let mut params: Vec<(String, f64)> = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in overrides {
        match params.iter_mut().find(|(name, _)| name == k) {
            Some(slot) => slot.1 = *v,
            None => {
                return Err(Error::InvalidInput(format!(
                    "system '{id}' has no parameter '{k}'"
                )))
            }
        }
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("parameter '{k}' must be finite")));
        }
    }
    Ok(params)
}

pub fn make_system(id: &str, overrides: &[(String, f64)]) -> Result<NamedSystem> {
    let params = resolve(id, overrides)?;
    let get = |name: &str| params.iter().find(|(k, _)| k == name).map(|(_, v)| *v).unwrap();
    let system = match id {
        "euler" => euler(),
        "dauchot_manneville" => dauchot_manneville(get("s1"), get("s2"))?,
        "imaginary_sing" => {
            let order = get("taylor_order");
            if order < 3.0 || order.fract() != 0.0 {
                return Err(Error::InvalidInput("taylor_order must be an integer >= 3".into()));
            }
            imaginary_sing(order as u32)
        }
        "shaw_pierre" => shaw_pierre(get("k"), get("c"), get("gamma"), get("eps"), get("Omega"))?,
        "double_well" => double_well(get("delta"), get("gamma"), get("Omega"))?,
        _ => return Err(Error::UnknownSystem(id.to_string())),
    };
    Ok(NamedSystem {
        id: id.to_string(),
        params,
        system,
    })
}

/// `x' = x²`, `y' = x − y`.
pub fn euler() -> PolySystem {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, -1.0]);
    let mut f = MultiSeries::zeros(2, 2, 2);
    f.add_term(&MultiIndex::new(vec![2, 0]), &[c(1.0), c(0.0)]);
    PolySystem::new(a, f).expect("static system")
}

/// Planar model with linear part `[[s1, 1], [0, s2]]` and nonlinearity
/// `(x1 x2, −x1²)`.
pub fn dauchot_manneville(s1: f64, s2: f64) -> Result<PolySystem> {
    if !(s1 < 0.0 && s2 < 0.0) || s1 == s2 {
        return Err(Error::InvalidInput("dauchot_manneville needs distinct s1, s2 < 0".into()));
    }
    let a = DMatrix::from_row_slice(2, 2, &[s1, 1.0, 0.0, s2]);
    let mut f = MultiSeries::zeros(2, 2, 2);
    f.add_term(&MultiIndex::new(vec![1, 1]), &[c(1.0), c(0.0)]);
    f.add_term(&MultiIndex::new(vec![2, 0]), &[c(0.0), c(-1.0)]);
    PolySystem::new(a, f)
}

fn imaginary_sing_nonlinearity(x: &[Complex64]) -> Vec<Complex64> {
    let u = x[0];
    let q = u * u + 1.0;
    vec![c(0.0), 2.0 * u / (q * q) - 2.0 * u]
}

/// `x' = x`, `y' = −y + 2x/(x²+1)²`, with the rational term carried as a
/// Taylor polynomial of the given order for the series solver and exactly
/// for evaluation.
pub fn imaginary_sing(taylor_order: u32) -> PolySystem {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, -1.0]);
    let mut f = MultiSeries::zeros(2, 2, taylor_order);
    // 2x/(1+x²)² = 2x Σ (n+1)(−x²)^n
    let mut n = 1u32;
    while 2 * n + 1 <= taylor_order {
        let coef = 2.0 * (n as f64 + 1.0) * if n % 2 == 0 { 1.0 } else { -1.0 };
        f.add_term(&MultiIndex::new(vec![2 * n + 1, 0]), &[c(0.0), c(coef)]);
        n += 1;
    }
    let mut sys = PolySystem::new(a, f).expect("static system");
    sys.exact_nonlinearity = Some(imaginary_sing_nonlinearity);
    sys
}

/// Two coupled oscillators in `(q1, q1', q2, q2')`:
/// `q1'' + c(2q1' − q2') + k(2q1 − q2) + γ q1³ = ε cos(Ωt)`,
/// `q2'' + c(2q2' − q1') + k(2q2 − q1) = 0`.
pub fn shaw_pierre(k: f64, cd: f64, gamma: f64, eps: f64, omega: f64) -> Result<PolySystem> {
    if !(k > 0.0 && cd >= 0.0) {
        return Err(Error::InvalidInput("shaw_pierre needs k > 0 and c >= 0".into()));
    }
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        0.0, 1.0, 0.0, 0.0,
        -2.0 * k, -2.0 * cd, k, cd,
        0.0, 0.0, 0.0, 1.0,
        k, cd, -2.0 * k, -2.0 * cd,
    ]);
    let mut f = MultiSeries::zeros(4, 4, 3);
    f.add_term(&MultiIndex::new(vec![3, 0, 0, 0]), &[c(0.0), c(-gamma), c(0.0), c(0.0)]);
    let sys = PolySystem::new(a, f)?;
    sys.with_forcing(Forcing {
        vector: vec![0.0, 1.0, 0.0, 0.0],
        amplitude: eps,
        frequency: omega,
    })
}

/// Forced double-well oscillator `x'' + δ x' − x + x³ = γ cos(Ωt)`.
pub fn double_well(delta: f64, gamma: f64, omega: f64) -> Result<PolySystem> {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, -delta]);
    let mut f = MultiSeries::zeros(2, 2, 3);
    f.add_term(&MultiIndex::new(vec![3, 0]), &[c(0.0), c(-1.0)]);
    let sys = PolySystem::new(a, f)?;
    sys.with_forcing(Forcing {
        vector: vec![0.0, 1.0],
        amplitude: gamma,
        frequency: omega,
    })
}

/// Fixed-fixed chain of unit masses in `(q1, q1', …, qm, qm')`: neighbor
/// springs `k`, stiffness-proportional damping `c K`, and a grounding cubic
/// spring `cubic[i] q_i³` on every mass. Stands in for imported
/// finite-element models.
pub fn oscillator_chain(k: f64, cd: f64, cubic: &[f64]) -> Result<PolySystem> {
    let m = cubic.len();
    if m < 2 || !(k > 0.0 && cd >= 0.0) {
        return Err(Error::InvalidInput("oscillator_chain needs two masses, k > 0 and c >= 0".into()));
    }
    let n = 2 * m;
    let mut stiff = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        stiff[(i, i)] = 2.0 * k;
        if i + 1 < m {
            stiff[(i, i + 1)] = -k;
            stiff[(i + 1, i)] = -k;
        }
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut f = MultiSeries::zeros(n, n, 3);
    for i in 0..m {
        a[(2 * i, 2 * i + 1)] = 1.0;
        for j in 0..m {
            a[(2 * i + 1, 2 * j)] = -stiff[(i, j)];
            a[(2 * i + 1, 2 * j + 1)] = -cd * stiff[(i, j)];
        }
        if cubic[i] != 0.0 {
            let mut e = vec![0u32; n];
            e[2 * i] = 3;
            let mut v = vec![c(0.0); n];
            v[2 * i + 1] = c(-cubic[i]);
            f.add_term(&MultiIndex::new(e), &v);
        }
    }
    PolySystem::new(a, f)
}

/// `h(x) = x ∫_0^∞ e^{−t}/(1 + x t) dt`, the Borel sum of the Euler series
/// `x − x² + 2x³ − 6x⁴ + …`, to about 1e−12 absolute.
pub fn euler_exact(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidInput("euler_exact needs x > 0".into()));
    }
    // t = u/(1−u) maps [0, ∞) to [0, 1)
    let integrand = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let t = u / (1.0 - u);
        (-t).exp() / (1.0 + x * t) / ((1.0 - u) * (1.0 - u))
    };
    Ok(x * adaptive_gauss_kronrod(&integrand, 0.0, 1.0, 1e-13, 40))
}

const GK15_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK15_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut kron = fc * GK15_WEIGHTS[7];
    let mut gauss = fc * G7_WEIGHTS[3];
    for i in 0..7 {
        let dx = half * GK15_NODES[i];
        let s = f(mid - dx) + f(mid + dx);
        kron += GK15_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * s;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

fn adaptive_gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return val;
    }
    let mid = 0.5 * (a + b);
    adaptive_gauss_kronrod(f, a, mid, 0.5 * tol, depth - 1)
        + adaptive_gauss_kronrod(f, mid, b, 0.5 * tol, depth - 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Saddle,
    NonHyperbolic,
}

impl Stability {
    pub fn name(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Saddle => "saddle",
            Stability::NonHyperbolic => "nonhyperbolic",
        }
    }

    pub fn from_eigenvalues(eig: &[Complex64], tol: f64) -> Stability {
        if eig.iter().any(|l| l.re.abs() <= tol) {
            Stability::NonHyperbolic
        } else if eig.iter().all(|l| l.re < 0.0) {
            Stability::Stable
        } else if eig.iter().all(|l| l.re > 0.0) {
            Stability::Unstable
        } else {
            Stability::Saddle
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    pub x: Vec<f64>,
    pub eigenvalues: Vec<Complex64>,
    pub stability: Stability,
}

/// Roots of the autonomous right-hand side found by damped Newton from a
/// uniform seed grid over `bounds`, deduplicated at 1e−8 and sorted
/// lexicographically.
pub fn fixed_points_oracle(sys: &PolySystem, bounds: &[(f64, f64)], seeds_per_axis: usize) -> Result<Vec<FixedPoint>> {
    let n = sys.dim();
    if bounds.len() != n {
        return Err(Error::DimensionMismatch {
            what: "search box",
            expected: n,
            got: bounds.len(),
        });
    }
    let s = seeds_per_axis.max(1);
    let total = s.pow(n as u32);
    let mut found: Vec<Vec<f64>> = Vec::new();
    let residual = |x: &[f64]| -> f64 {
        sys.rhs_autonomous(x).iter().map(|v| v * v).sum::<f64>().sqrt()
    };
    for idx in 0..total {
        let mut seed = vec![0.0; n];
        let mut rem = idx;
        for (i, (lo, hi)) in bounds.iter().enumerate() {
            let k = rem % s;
            rem /= s;
            seed[i] = if s == 1 { 0.5 * (lo + hi) } else { lo + (hi - lo) * k as f64 / (s - 1) as f64 };
        }
        let mut x = seed;
        let mut ok = false;
        // iterate to stagnation rather than to a residual threshold so that
        // degenerate roots (linear Newton convergence) still collapse together
        for it in 0..200 {
            let fx = DVector::from_vec(sys.rhs_autonomous(&x));
            let r0 = fx.norm();
            if r0 == 0.0 || it == 199 {
                ok = r0 < 1e-11;
                break;
            }
            let jac = sys.jacobian(&x);
            let step = match jac.lu().solve(&fx) {
                Some(s) => s,
                None => break,
            };
            let mut lambda = 1.0;
            let mut accepted = false;
            while lambda > 1e-6 {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a - lambda * b).collect();
                if residual(&trial) < r0 {
                    x = trial;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                ok = r0 < 1e-11;
                break;
            }
            if step.norm() * lambda < 1e-15 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                ok = residual(&x) < 1e-11;
                break;
            }
        }
        if !ok || !x.iter().all(|v| v.is_finite()) {
            continue;
        }
        let inside = x
            .iter()
            .zip(bounds)
            .all(|(v, (lo, hi))| *v >= lo - 1e-9 && *v <= hi + 1e-9);
        if !inside {
            continue;
        }
        if !found.iter().any(|p| p.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-8)) {
            found.push(x);
        }
    }
    found.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(found
        .into_iter()
        .map(|x| {
            let eig: Vec<Complex64> = sys.jacobian(&x).complex_eigenvalues().iter().cloned().collect();
            let scale = eig.iter().map(|l| l.norm()).fold(0.0, f64::max).max(1.0);
            FixedPoint {
                stability: Stability::from_eigenvalues(&eig, 1e-12 * scale),
                eigenvalues: eig,
                x,
            }
        })
        .collect())
}

impl PolySystem {
    /// Autonomous right-hand side at a real state.
    pub fn rhs_autonomous(&self, x: &[f64]) -> Vec<f64> {
        let xc: Vec<Complex64> = x.iter().map(|&v| c(v)).collect();
        self.rhs_complex(&xc)
            .expect("state dimension")
            .iter()
            .map(|v| v.re)
            .collect()
    }
}
