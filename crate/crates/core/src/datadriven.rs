//! Data-driven gSSMs: delay embedding, a linear chart from PCA, derivative
//! estimation and positivity-constrained rational regression of the reduced
//! vector field, with a polynomial baseline.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{lsi, lstsq, svd};
use crate::pade::RationalMap;
use crate::reduced::{integrate, Coordinates, IntegrateOptions, ReducedField, Termination, TrajectoryData};
use crate::series::{MultiIndex, MultiSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmbeddingConfig {
    /// Number of delayed copies.
    pub delays: usize,
    /// Lag in samples.
    pub lag: usize,
    /// Column of the trajectory used as the observable.
    pub observable: usize,
}

impl EmbeddingConfig {
    /// Rejects embeddings with `delays <= 2 d`.
    pub fn check_dimension(&self, d: usize) -> Result<()> {
        if self.delays <= 2 * d {
            return Err(Error::InvalidInput(format!(
                "{} delays do not exceed twice the manifold dimension {d}",
                self.delays
            )));
        }
        Ok(())
    }

    pub fn window(&self) -> usize {
        (self.delays - 1) * self.lag + 1
    }
}

/// Sliding-window stack `(y(t), y(t−τ), …, y(t−(q−1)τ))` stamped with `t`.
pub fn delay_embed(series: &TrajectoryData, cfg: &EmbeddingConfig) -> Result<TrajectoryData> {
    if cfg.delays == 0 || cfg.lag == 0 {
        return Err(Error::InvalidInput("delays and lag must be positive".into()));
    }
    if cfg.observable >= series.dim().max(1) {
        return Err(Error::DimensionMismatch {
            what: "observable index",
            expected: series.dim(),
            got: cfg.observable,
        });
    }
    let w = cfg.window();
    if series.len() < w {
        return Err(Error::TooShort {
            required: w,
            available: series.len(),
        });
    }
    if series.len() > 1 {
        series.uniform_step()?;
    }
    let y = series.component(cfg.observable);
    let mut out = TrajectoryData::default();
    for i in (w - 1)..y.len() {
        out.t.push(series.t[i]);
        out.x.push((0..cfg.delays).map(|k| y[i - k * cfg.lag]).collect());
    }
    Ok(out)
}

/// Linear chart `η = Vᵀ(y − c)`, `y = c + V η`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartProjection {
    /// Column-orthonormal `q × d`.
    pub basis: DMatrix<f64>,
    pub center: Vec<f64>,
}

impl ChartProjection {
    pub fn embedding_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        let v = DVector::from_iterator(y.len(), y.iter().zip(&self.center).map(|(a, c)| a - c));
        (self.basis.transpose() * v).iter().copied().collect()
    }

    pub fn reconstruct(&self, eta: &[f64]) -> Vec<f64> {
        let v = &self.basis * DVector::from_column_slice(eta);
        v.iter().zip(&self.center).map(|(a, c)| a + c).collect()
    }

    pub fn project_trajectory(&self, traj: &TrajectoryData) -> TrajectoryData {
        TrajectoryData {
            t: traj.t.clone(),
            x: traj.x.iter().map(|y| self.project(y)).collect(),
        }
    }

    /// `‖VᵀV − I‖_max`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.basis.transpose() * &self.basis;
        (g - DMatrix::identity(self.dim(), self.dim())).amax()
    }
}

/// Top-`d` principal directions of embedded samples about `center`
/// (default: mean of the last tenth of every trajectory).
pub fn tangent_space_pca(trajs: &[TrajectoryData], d: usize, center: Option<&[f64]>) -> Result<ChartProjection> {
    let q = trajs.first().map_or(0, |t| t.dim());
    if q == 0 || d == 0 || d > q {
        return Err(Error::InvalidInput(format!("cannot extract {d} directions from dimension {q}")));
    }
    let center: Vec<f64> = match center {
        Some(c) => {
            if c.len() != q {
                return Err(Error::DimensionMismatch {
                    what: "PCA center",
                    expected: q,
                    got: c.len(),
                });
            }
            c.to_vec()
        }
        None => {
            let mut acc = vec![0.0; q];
            let mut count = 0usize;
            for tr in trajs {
                let start = tr.len() - (tr.len() / 10).max(1);
                for row in &tr.x[start..] {
                    for (a, v) in acc.iter_mut().zip(row) {
                        *a += v;
                    }
                    count += 1;
                }
            }
            acc.iter().map(|a| a / count as f64).collect()
        }
    };
    let rows: usize = trajs.iter().map(|t| t.len()).sum();
    let mut y = DMatrix::<f64>::zeros(rows, q);
    let mut r = 0;
    for tr in trajs {
        if tr.dim() != q {
            return Err(Error::DimensionMismatch {
                what: "embedding dimension",
                expected: q,
                got: tr.dim(),
            });
        }
        for row in &tr.x {
            for j in 0..q {
                y[(r, j)] = row[j] - center[j];
            }
            r += 1;
        }
    }
    let dec = svd(&y);
    let smax = dec.s[0];
    if dec.s.len() < d || !(smax > 0.0) || dec.s[d - 1] <= 1e-10 * smax {
        return Err(Error::RankDeficient(format!("embedded data has rank below {d}")));
    }
    let mut basis = DMatrix::<f64>::zeros(q, d);
    for k in 0..d {
        let mut col = dec.v.column(k).into_owned();
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        basis.set_column(k, &col);
    }
    Ok(ChartProjection { basis, center })
}

/// Centered moving average of half-width `half`, shrinking at the ends.
pub fn moving_average(y: &[f64], half: usize) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|i| {
            let w = half.min(i).min(n - 1 - i);
            let s: f64 = y[i - w..=i + w].iter().sum();
            s / (2 * w + 1) as f64
        })
        .collect()
}

/// Time derivatives by fourth-order finite differences (central inside,
/// one-sided at the two ends), optionally after a moving-average smoothing
/// of half-width `smoothing`.
pub fn estimate_derivatives(traj: &TrajectoryData, smoothing: Option<usize>) -> Result<TrajectoryData> {
    if traj.len() < 5 {
        return Err(Error::TooShort {
            required: 5,
            available: traj.len(),
        });
    }
    let h = traj.uniform_step()?;
    let n = traj.len();
    let mut out = vec![vec![0.0; traj.dim()]; n];
    for c in 0..traj.dim() {
        let raw = traj.component(c);
        let f = match smoothing {
            Some(k) if k > 0 => moving_average(&raw, k),
            _ => raw,
        };
        for i in 0..n {
            let d = if i >= 2 && i + 2 < n {
                -f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]
            } else if i == 0 {
                -25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]
            } else if i == 1 {
                -3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]
            } else if i == n - 2 {
                3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]
            } else {
                25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]
            };
            out[i][c] = d / (12.0 * h);
        }
    }
    Ok(TrajectoryData { t: traj.t.clone(), x: out })
}

/// Samples `ζ_i = f(η_i)` and the orders of a rational fit.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionProblem {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub n: u32,
    pub m: u32,
    /// Lower bound on the denominator at every sample.
    pub delta: f64,
    /// Include a constant term in the numerators.
    pub constant: bool,
}

pub const DEFAULT_DELTA: f64 = 1e-3;
pub const REFINE_MAX_ITER: usize = 500;
pub const REFINE_GRAD_TOL: f64 = 1e-10;

impl RegressionProblem {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>, n: u32, m: u32) -> Result<Self> {
        let p = RegressionProblem {
            inputs,
            targets,
            n,
            m,
            delta: DEFAULT_DELTA,
            constant: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn dim_in(&self) -> usize {
        self.inputs.first().map_or(0, |r| r.len())
    }

    pub fn dim_out(&self) -> usize {
        self.targets.first().map_or(0, |r| r.len())
    }

    fn numerator_basis(&self) -> Vec<MultiIndex> {
        MultiIndex::all_up_to(self.dim_in(), self.n)
            .into_iter()
            .filter(|k| self.constant || k.order() > 0)
            .collect()
    }

    fn denominator_basis(&self) -> Vec<MultiIndex> {
        MultiIndex::all_up_to(self.dim_in(), self.m)
            .into_iter()
            .filter(|k| k.order() > 0)
            .collect()
    }

    pub fn unknowns(&self) -> usize {
        self.dim_out() * self.numerator_basis().len() + self.denominator_basis().len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.targets.len() {
            return Err(Error::DimensionMismatch {
                what: "regression samples",
                expected: self.inputs.len(),
                got: self.targets.len(),
            });
        }
        let (d, o) = (self.dim_in(), self.dim_out());
        if d == 0 || o == 0 {
            return Err(Error::InvalidInput("regression needs nonempty samples".into()));
        }
        if self.inputs.iter().any(|r| r.len() != d) || self.targets.iter().any(|r| r.len() != o) {
            return Err(Error::InvalidInput("ragged regression samples".into()));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidInput("positivity margin must be positive".into()));
        }
        if self.inputs.len() * o < self.unknowns() {
            return Err(Error::TooShort {
                required: self.unknowns(),
                available: self.inputs.len() * o,
            });
        }
        Ok(())
    }
}

fn monomial_real(k: &MultiIndex, x: &[f64]) -> f64 {
    k.exponents().iter().zip(x).map(|(&e, &v)| v.powi(e as i32)).product()
}

fn design(basis: &[MultiIndex], inputs: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(inputs.len(), basis.len(), |i, j| monomial_real(&basis[j], &inputs[i]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    /// `Σ_i |ζ_i − f(η_i)|²` after the linearized stage.
    pub stage1_error: f64,
    /// `Σ_i |ζ_i − f(η_i)|²` of the returned model.
    pub error: f64,
    /// `sqrt(error / Σ_i |ζ_i|²)`.
    pub relative_error: f64,
    /// Samples where the denominator sits on its lower bound.
    pub active_constraints: usize,
    /// Smallest denominator value over the samples.
    pub min_denominator: f64,
    pub iterations: usize,
    /// Refinement failed and the stage-1 model was returned.
    pub refinement_failed: bool,
    pub parameter_count: usize,
}

#[derive(Clone, Debug)]
pub struct FittedRational {
    pub model: RationalMap,
    pub report: FitReport,
}

struct Layout {
    num: Vec<MultiIndex>,
    den: Vec<MultiIndex>,
    outputs: usize,
}

impl Layout {
    fn len(&self) -> usize {
        self.outputs * self.num.len() + self.den.len()
    }

    fn den_offset(&self) -> usize {
        self.outputs * self.num.len()
    }

    fn build(&self, dim_in: usize, x: &DVector<f64>, n: u32, m: u32) -> Result<RationalMap> {
        let mut nums = Vec::with_capacity(self.outputs);
        for j in 0..self.outputs {
            let mut s = MultiSeries::zeros(dim_in, 1, n);
            for (k, idx) in self.num.iter().enumerate() {
                let v = x[j * self.num.len() + k];
                if v != 0.0 {
                    s.add_term(idx, &[Complex64::new(v, 0.0)]);
                }
            }
            nums.push(s);
        }
        let mut den = MultiSeries::constant(dim_in, m, Complex64::new(1.0, 0.0));
        for (k, idx) in self.den.iter().enumerate() {
            let v = x[self.den_offset() + k];
            if v != 0.0 {
                den.add_term(idx, &[Complex64::new(v, 0.0)]);
            }
        }
        RationalMap::new(nums, vec![den])
    }
}

/// Per-sample numerator values `P_j(η_i)` and denominator `Q(η_i)`.
fn evaluate_params(lay: &Layout, a_num: &DMatrix<f64>, a_den: &DMatrix<f64>, x: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let k = a_num.nrows();
    let nn = lay.num.len();
    let mut p = DMatrix::<f64>::zeros(k, lay.outputs);
    for j in 0..lay.outputs {
        let coef = x.rows(j * nn, nn);
        p.set_column(j, &(a_num * coef));
    }
    let q = DVector::from_element(k, 1.0) + a_den * x.rows(lay.den_offset(), lay.den.len());
    (p, q)
}

fn quotient_error(p: &DMatrix<f64>, q: &DVector<f64>, z: &DMatrix<f64>) -> f64 {
    let mut e = 0.0;
    for i in 0..z.nrows() {
        for j in 0..z.ncols() {
            e += (z[(i, j)] - p[(i, j)] / q[i]).powi(2);
        }
    }
    e
}

fn fit_rational_impl(prob: &RegressionProblem, constrained: bool) -> Result<FittedRational> {
    prob.validate()?;
    let lay = Layout {
        num: prob.numerator_basis(),
        den: prob.denominator_basis(),
        outputs: prob.dim_out(),
    };
    let k = prob.inputs.len();
    let o = lay.outputs;
    let nn = lay.num.len();
    let nd = lay.den.len();
    let a_num = design(&lay.num, &prob.inputs);
    let a_den = design(&lay.den, &prob.inputs);
    let z = DMatrix::from_fn(k, o, |i, j| prob.targets[i][j]);

    // stage 1: (1 + Σ b η^k) ζ − Σ a η^k = 0, linear in (a, b)
    let mut e = DMatrix::<f64>::zeros(k * o, lay.len());
    let mut f = DVector::<f64>::zeros(k * o);
    for j in 0..o {
        for i in 0..k {
            let row = j * k + i;
            for c in 0..nn {
                e[(row, j * nn + c)] = a_num[(i, c)];
            }
            for c in 0..nd {
                e[(row, lay.den_offset() + c)] = -z[(i, j)] * a_den[(i, c)];
            }
            f[row] = z[(i, j)];
        }
    }
    let x1 = if nd == 0 || !constrained {
        let mut es = e.clone();
        let scale: Vec<f64> = (0..es.ncols()).map(|c| es.column(c).norm().max(1e-300)).collect();
        for (c, s) in scale.iter().enumerate() {
            es.column_mut(c).unscale_mut(*s);
        }
        let sol = lstsq(&es, &f, 1e-13);
        DVector::from_iterator(lay.len(), sol.x.iter().zip(&scale).map(|(v, s)| v / s))
    } else {
        let mut g = DMatrix::<f64>::zeros(k, lay.len());
        g.view_mut((0, lay.den_offset()), (k, nd)).copy_from(&a_den);
        let h = DVector::from_element(k, prob.delta - 1.0);
        lsi(&e, &f, &g, &h)?
    };
    let (p1, q1) = evaluate_params(&lay, &a_num, &a_den, &x1);
    let err1 = quotient_error(&p1, &q1, &z);

    // stage 2: Levenberg–Marquardt on the quotient objective. Steps that
    // would leave the feasible set are recomputed with the constraints, and
    // steps that do not decrease the objective are rejected.
    let feasible = |q: &DVector<f64>| !constrained || q.iter().all(|&v| v >= prob.delta);
    let mut x = x1.clone();
    let mut err = err1;
    let mut mu = 1e-3;
    let mut iterations = 0;
    let mut failed = false;
    if nd > 0 && err > 0.0 {
        let (mut p, mut q) = (p1.clone(), q1.clone());
        for it in 0..REFINE_MAX_ITER {
            iterations = it + 1;
            let mut jac = DMatrix::<f64>::zeros(k * o, lay.len());
            let mut r = DVector::<f64>::zeros(k * o);
            for j in 0..o {
                for i in 0..k {
                    let row = j * k + i;
                    let qi = q[i];
                    r[row] = z[(i, j)] - p[(i, j)] / qi;
                    for c in 0..nn {
                        jac[(row, j * nn + c)] = -a_num[(i, c)] / qi;
                    }
                    for c in 0..nd {
                        jac[(row, lay.den_offset() + c)] = p[(i, j)] * a_den[(i, c)] / (qi * qi);
                    }
                }
            }
            let grad = jac.transpose() * &r;
            if grad.norm() < REFINE_GRAD_TOL {
                break;
            }
            let jtj = jac.transpose() * &jac;
            let mut improved = false;
            for _ in 0..30 {
                let mut lhs = jtj.clone();
                for d in 0..lay.len() {
                    lhs[(d, d)] += mu * jtj[(d, d)].max(1e-12);
                }
                let mut step = match lhs.cholesky() {
                    Some(ch) => ch.solve(&(-&grad)),
                    None => {
                        mu *= 10.0;
                        continue;
                    }
                };
                if constrained {
                    let dq = &a_den * step.rows(lay.den_offset(), nd);
                    if (0..k).any(|i| q[i] + dq[i] < prob.delta) {
                        // damped subproblem with the linear constraints on the step
                        let np = lay.len();
                        let mut e = DMatrix::<f64>::zeros(k * o + np, np);
                        e.view_mut((0, 0), (k * o, np)).copy_from(&jac);
                        let mut f = DVector::<f64>::zeros(k * o + np);
                        f.rows_mut(0, k * o).copy_from(&(-&r));
                        for d in 0..np {
                            e[(k * o + d, d)] = (mu * jtj[(d, d)].max(1e-12)).sqrt();
                        }
                        let mut g = DMatrix::<f64>::zeros(k, np);
                        g.view_mut((0, lay.den_offset()), (k, nd)).copy_from(&a_den);
                        let h = DVector::from_iterator(k, q.iter().map(|qi| prob.delta - qi));
                        match lsi(&e, &f, &g, &h) {
                            Ok(s) => step = s,
                            Err(_) => {
                                mu *= 10.0;
                                continue;
                            }
                        }
                    }
                }
                let xt = &x + &step;
                let (pt, qt) = evaluate_params(&lay, &a_num, &a_den, &xt);
                let et = quotient_error(&pt, &qt, &z);
                if et.is_finite() && et < err && feasible(&qt) {
                    let small = (err - et) <= 1e-15 * err;
                    x = xt;
                    p = pt;
                    q = qt;
                    err = et;
                    mu = (mu * 0.3).max(1e-12);
                    improved = !small;
                    break;
                }
                mu *= 10.0;
            }
            if !improved {
                break;
            }
        }
        if !err.is_finite() || err > err1 {
            failed = true;
            x = x1;
            err = err1;
        }
    }
    let (_, q) = evaluate_params(&lay, &a_num, &a_den, &x);
    let min_den = q.iter().copied().fold(f64::INFINITY, f64::min);
    if constrained && nd > 0 && min_den < prob.delta * (1.0 - 1e-9) {
        return Err(Error::InvalidInput(format!(
            "constrained fit violates the denominator bound: {min_den:e} < {:e}",
            prob.delta
        )));
    }
    let active = if constrained && nd > 0 {
        q.iter().filter(|&&v| v - prob.delta <= 1e-8 * prob.delta.max(1.0)).count()
    } else {
        0
    };
    let norm_z: f64 = z.iter().map(|v| v * v).sum();
    let model = lay.build(prob.dim_in(), &x, prob.n, prob.m)?;
    let report = FitReport {
        stage1_error: err1,
        error: err,
        relative_error: if norm_z > 0.0 { (err / norm_z).sqrt() } else { err.sqrt() },
        active_constraints: active,
        min_denominator: min_den,
        iterations,
        refinement_failed: failed,
        parameter_count: lay.len(),
    };
    Ok(FittedRational { model, report })
}

/// Shared-denominator rational fit with `Q(η_i) ≥ δ` at every sample:
/// constrained linearized least squares, then feasible quotient refinement.
pub fn fit_rational_field(prob: &RegressionProblem) -> Result<FittedRational> {
    fit_rational_impl(prob, true)
}

/// Same two stages without the positivity constraint.
pub fn fit_rational_field_unconstrained(prob: &RegressionProblem) -> Result<FittedRational> {
    fit_rational_impl(prob, false)
}

/// Fits each problem on its own thread (at most `threads` at a time); the
/// output order follows the input order. Every fit is deterministic.
pub fn fit_restarts(problems: &[RegressionProblem], constrained: bool, threads: usize) -> Vec<Result<FittedRational>> {
    let threads = threads.max(1);
    let mut out: Vec<Option<Result<FittedRational>>> = (0..problems.len()).map(|_| None).collect();
    for (chunk_in, chunk_out) in problems.chunks(threads).zip(out.chunks_mut(threads)) {
        std::thread::scope(|s| {
            let handles: Vec<_> = chunk_in
                .iter()
                .map(|p| s.spawn(move || fit_rational_impl(p, constrained)))
                .collect();
            for (h, slot) in handles.into_iter().zip(chunk_out.iter_mut()) {
                *slot = Some(h.join().unwrap_or_else(|_| Err(Error::InvalidInput("fit thread panicked".into()))));
            }
        });
    }
    out.into_iter().map(|r| r.expect("every slot filled")).collect()
}

/// Samples of the damped double-well field `ζ = (η₂, η₁ − η₁³ − 0.3 η₂)` on
/// six nested ellipses (50 points each), with Gaussian noise of relative
/// size `noise` (of the clean RMS) drawn from a ChaCha8 stream seeded by `seed`.
pub fn double_well_samples(seed: u64, noise: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut inputs = Vec::with_capacity(300);
    for k in 0..6 {
        let r = 0.2 + 0.2 * k as f64;
        for i in 0..50 {
            let th = 2.0 * std::f64::consts::PI * i as f64 / 50.0;
            inputs.push(vec![1.2 * r * th.cos(), 0.8 * r * th.sin()]);
        }
    }
    let clean: Vec<Vec<f64>> = inputs
        .iter()
        .map(|x| vec![x[1], x[0] - x[0].powi(3) - 0.3 * x[1]])
        .collect();
    let rms = (clean.iter().map(|z| z[0] * z[0] + z[1] * z[1]).sum::<f64>() / (2.0 * clean.len() as f64)).sqrt();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let targets = match Normal::new(0.0, noise.abs() * rms) {
        Ok(nd) if noise > 0.0 => clean
            .iter()
            .map(|z| z.iter().map(|v| v + nd.sample(&mut rng)).collect())
            .collect(),
        _ => clean,
    };
    (inputs, targets)
}

#[derive(Clone, Debug)]
pub struct FittedPolynomial {
    pub model: MultiSeries,
    /// `Σ_i |ζ_i − f(η_i)|²`.
    pub error: f64,
    pub rank_deficient: bool,
    pub parameter_count: usize,
}

/// Ordinary least squares over monomials of orders `1..=order` (and the
/// constant when `constant`); rank deficiency yields the minimum-norm fit.
pub fn fit_polynomial_field(
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    order: u32,
    constant: bool,
) -> Result<FittedPolynomial> {
    let prob = RegressionProblem {
        inputs: inputs.to_vec(),
        targets: targets.to_vec(),
        n: order,
        m: 0,
        delta: 1.0,
        constant,
    };
    prob.validate()?;
    let basis = prob.numerator_basis();
    let a = design(&basis, inputs);
    let scale: Vec<f64> = (0..a.ncols()).map(|c| a.column(c).norm().max(1e-300)).collect();
    let mut as_ = a.clone();
    for (c, s) in scale.iter().enumerate() {
        as_.column_mut(c).unscale_mut(*s);
    }
    let (d, o) = (prob.dim_in(), prob.dim_out());
    let mut model = MultiSeries::zeros(d, o, order);
    let mut error = 0.0;
    let mut deficient = false;
    for j in 0..o {
        let b = DVector::from_iterator(inputs.len(), targets.iter().map(|t| t[j]));
        let sol = lstsq(&as_, &b, 1e-13);
        deficient |= sol.rank_deficient();
        let coef: Vec<f64> = sol.x.iter().zip(&scale).map(|(v, s)| v / s).collect();
        let fitted = &a * DVector::from_column_slice(&coef);
        error += (fitted - &b).norm_squared();
        for (k, idx) in basis.iter().enumerate() {
            if coef[k] != 0.0 {
                let mut v = vec![Complex64::new(0.0, 0.0); o];
                v[j] = Complex64::new(coef[k], 0.0);
                model.add_term(idx, &v);
            }
        }
    }
    Ok(FittedPolynomial {
        model,
        error,
        rank_deficient: deficient,
        parameter_count: basis.len() * o,
    })
}

/// Reduced vector field of a fitted model in real coordinates.
pub fn field_of(model: &FittedModel) -> ReducedField {
    match model {
        FittedModel::Rational(r) => ReducedField::rational(r.clone(), Coordinates::Real),
        FittedModel::Polynomial(p) => ReducedField::polynomial(p.clone(), Coordinates::Real),
    }
}

#[derive(Clone, Debug)]
pub enum FittedModel {
    Rational(RationalMap),
    Polynomial(MultiSeries),
}

impl FittedModel {
    pub fn parameter_count(&self) -> usize {
        match self {
            FittedModel::Rational(r) => r.parameter_count(),
            FittedModel::Polynomial(p) => {
                p.dim_out() * (MultiIndex::count_up_to(p.dim_in(), p.order()) - 1)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Prediction {
    /// Reconstructed observable (first embedding coordinate).
    pub observable: TrajectoryData,
    /// Reduced trajectory `η(t)`.
    pub reduced: TrajectoryData,
    pub termination: Termination,
}

/// Embeds the last window of `history` (time-ordered samples of the
/// observable), projects it, integrates the reduced field for `horizon`
/// with output every `dt`, and reconstructs `y = c + V η`.
pub fn predict(
    chart: &ChartProjection,
    cfg: &EmbeddingConfig,
    model: &FittedModel,
    history: &[f64],
    horizon: f64,
    dt: f64,
) -> Result<Prediction> {
    let w = cfg.window();
    if history.len() < w {
        return Err(Error::TooShort {
            required: w,
            available: history.len(),
        });
    }
    if cfg.delays != chart.embedding_dim() {
        return Err(Error::DimensionMismatch {
            what: "embedding dimension",
            expected: chart.embedding_dim(),
            got: cfg.delays,
        });
    }
    let last = history.len() - 1;
    let y0: Vec<f64> = (0..cfg.delays).map(|k| history[last - k * cfg.lag]).collect();
    let eta0 = chart.project(&y0);
    let field = field_of(model);
    let opts = IntegrateOptions {
        sample_dt: Some(dt),
        ..Default::default()
    };
    let run = integrate(&field, &eta0, 0.0, horizon, &opts)?;
    let obs = TrajectoryData {
        t: run.trajectory.t.clone(),
        x: run.trajectory.x.iter().map(|eta| vec![chart.reconstruct(eta)[0]]).collect(),
    };
    Ok(Prediction {
        observable: obs,
        reduced: run.trajectory,
        termination: run.termination,
    })
}

/// Held-out error of rational fits over a grid of orders; no selection rule
/// is applied, the table is returned as computed.
pub fn order_grid_search(
    train: &RegressionProblem,
    validation_inputs: &[Vec<f64>],
    validation_targets: &[Vec<f64>],
    orders: &[(u32, u32)],
) -> Vec<(u32, u32, Result<f64>)> {
    orders
        .iter()
        .map(|&(n, m)| {
            let mut p = train.clone();
            p.n = n;
            p.m = m;
            let res = fit_rational_field(&p).and_then(|fit| held_out_error(&fit.model, validation_inputs, validation_targets));
            (n, m, res)
        })
        .collect()
}

/// Relative RMS error of a rational map on samples.
pub fn held_out_error(model: &RationalMap, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, z) in inputs.iter().zip(targets) {
        let v = model.evaluate_real(x, 0.0)?;
        for (a, b) in v.iter().zip(z) {
            num += (a.re - b).powi(2);
            den += b * b;
        }
    }
    Ok((num / den.max(1e-300)).sqrt())
}

/// Convex hull (counter-clockwise) of planar points.
pub fn convex_hull(points: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let mut p: Vec<[f64; 2]> = points.iter().map(|v| [v[0], v[1]]).collect();
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &pt in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], pt) <= 0.0 {
            lower.pop();
        }
        lower.push(pt);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &pt in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], pt) <= 0.0 {
            upper.pop();
        }
        upper.push(pt);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn in_hull(hull: &[[f64; 2]], x: [f64; 2]) -> bool {
    let n = hull.len();
    n >= 3
        && (0..n).all(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % n]);
            (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]) >= 0.0
        })
}

/// Whether the (shared) denominator of a planar rational field changes sign
/// between axis neighbors of an `n × n` grid, both inside the convex hull
/// of the training inputs.
pub fn denominator_sign_change_in_hull(model: &RationalMap, inputs: &[Vec<f64>], n: usize) -> Result<bool> {
    if model.dim_in() != 2 {
        return Err(Error::InvalidInput("hull scan needs planar inputs".into()));
    }
    let hull = convex_hull(inputs);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &hull {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let den = model.denominator(0);
    let at = |i: usize, j: usize| -> Result<Option<f64>> {
        let x = [
            lo[0] + (hi[0] - lo[0]) * i as f64 / (n - 1) as f64,
            lo[1] + (hi[1] - lo[1]) * j as f64 / (n - 1) as f64,
        ];
        if !in_hull(&hull, x) {
            return Ok(None);
        }
        Ok(Some(den.evaluate_real(&x)?[0].re))
    };
    let mut vals = vec![vec![None; n]; n];
    for (i, row) in vals.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = at(i, j)?;
        }
    }
    for i in 0..n {
        for j in 0..n {
            if let Some(a) = vals[i][j] {
                if a <= 0.0 {
                    return Ok(true);
                }
                for (ii, jj) in [(i + 1, j), (i, j + 1)] {
                    if ii < n && jj < n {
                        if let Some(b) = vals[ii][jj] {
                            if a * b < 0.0 {
                                return Ok(true);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(false)
}
