//! Spectral submanifolds of polynomial ODEs `x' = A x + f(x)`.
//!
//! The invariance equation `A W + f(W) = DW R` is solved order by order in the
//! eigenbasis of `A`. With `U = V^{-1}` and modal parametrization `w`, the
//! order-`k` coefficient of component `j` at multi-index `m` satisfies
//!
//! `(λ_j − ⟨m, λ_E⟩) w_{j,m} = δ_{j∈E} R_{j,m} + [Dw R − U f(V w)]_{k,m}`
//!
//! where the bracket only involves terms of order below `k`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{condition_number, right_singular, to_complex, CMatrix};
use crate::pade::growth_scale;
use crate::series::{compose_truncated, multiply_truncated, revert_univariate, MultiIndex, MultiSeries};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative tolerance below which `|λ_j − ⟨m, λ_E⟩|` counts as resonant.
pub const RESONANCE_TOL: f64 = 1e-8;
/// Eigenvector matrices worse conditioned than this are treated as defective.
pub const DEFECTIVE_COND: f64 = 1e10;

/// Type of the nonlinearity override used for systems with non-polynomial
/// right-hand sides; receives a state and returns `f(x)`.
pub type NonlinearityFn = fn(&[Complex64]) -> Vec<Complex64>;

#[derive(Clone, Debug, PartialEq)]
pub struct Forcing {
    /// Direction `f_ext` of the periodic forcing `ε f_ext cos(Ω t)`.
    pub vector: Vec<f64>,
    pub amplitude: f64,
    pub frequency: f64,
}

/// `x' = A x + f(x) + ε f_ext cos(Ω t)` with polynomial `f = O(|x|^2)`.
#[derive(Clone, Debug)]
pub struct PolySystem {
    pub a: DMatrix<f64>,
    pub f: MultiSeries,
    pub forcing: Option<Forcing>,
    /// Exact nonlinearity when `f` is only a Taylor truncation of it.
    pub exact_nonlinearity: Option<NonlinearityFn>,
}

impl PolySystem {
    pub fn new(a: DMatrix<f64>, f: MultiSeries) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "linear part columns",
                expected: n,
                got: a.ncols(),
            });
        }
        if f.dim_in() != n || f.dim_out() != n {
            return Err(Error::DimensionMismatch {
                what: "nonlinearity dimensions",
                expected: n,
                got: if f.dim_in() != n { f.dim_in() } else { f.dim_out() },
            });
        }
        if let Some(low) = f.lowest_order() {
            if low < 2 {
                return Err(Error::InvalidInput(
                    "nonlinearity must start at quadratic order".into(),
                ));
            }
        }
        Ok(PolySystem {
            a,
            f,
            forcing: None,
            exact_nonlinearity: None,
        })
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Result<Self> {
        if forcing.vector.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "forcing vector",
                expected: self.dim(),
                got: forcing.vector.len(),
            });
        }
        self.forcing = Some(forcing);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn nonlinearity(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        match self.exact_nonlinearity {
            Some(f) => Ok(f(x)),
            None => self.f.evaluate(x),
        }
    }

    /// Autonomous right-hand side at a complex state.
    pub fn rhs_complex(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.dim();
        let mut out = self.nonlinearity(x)?;
        for i in 0..n {
            for j in 0..n {
                out[i] += self.a[(i, j)] * x[j];
            }
        }
        Ok(out)
    }

    /// Right-hand side at a real state and time, forcing included.
    pub fn rhs(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut out: Vec<f64> = self
            .rhs_complex(&xc)
            .expect("state dimension checked by caller")
            .iter()
            .map(|c| c.re)
            .collect();
        if let Some(fc) = &self.forcing {
            let s = fc.amplitude * (fc.frequency * t).cos();
            for (o, v) in out.iter_mut().zip(&fc.vector) {
                *o += s * v;
            }
        }
        out
    }

    /// Jacobian of the autonomous right-hand side at a real state.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut jac = self.a.clone();
        match self.exact_nonlinearity {
            None => {
                let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                let df = self.f.jacobian(&xc).expect("state dimension");
                for i in 0..n {
                    for j in 0..n {
                        jac[(i, j)] += df[i][j].re;
                    }
                }
            }
            Some(f) => {
                // complex-step derivative of the exact nonlinearity
                let h = 1e-30;
                for j in 0..n {
                    let mut xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                    xc[j].im = h;
                    let col = f(&xc);
                    for i in 0..n {
                        jac[(i, j)] += col[i].im / h;
                    }
                }
            }
        }
        jac
    }
}

/// Eigen-decomposition of the linear part with a chosen master subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData {
    /// Sorted by descending real part, then descending imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// Right eigenvectors as columns (unit norm, first nonzero entry real positive).
    pub right: CMatrix,
    /// Left eigenvectors as rows, `left * right = I`.
    pub left: CMatrix,
    /// Indices of the master modes; a conjugate pair is stored as
    /// `[Im > 0, Im < 0]`.
    pub masters: Vec<usize>,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn master_eigenvalues(&self) -> Vec<Complex64> {
        self.masters.iter().map(|&i| self.eigenvalues[i]).collect()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max)
    }

    pub fn resonance_tol(&self) -> f64 {
        RESONANCE_TOL * self.max_abs_eigenvalue().max(f64::MIN_POSITIVE)
    }

    /// Masters form a complex-conjugate pair.
    pub fn is_oscillatory_pair(&self) -> bool {
        if self.masters.len() != 2 {
            return false;
        }
        let (a, b) = (self.eigenvalues[self.masters[0]], self.eigenvalues[self.masters[1]]);
        let tol = self.resonance_tol();
        a.im > tol && (a - b.conj()).norm() <= tol
    }

    /// Build from explicit eigen-data (e.g. imported models). Left
    /// eigenvectors are the inverse of the right eigenvector matrix.
    pub fn from_parts(eigenvalues: Vec<Complex64>, right: CMatrix, masters: Vec<usize>) -> Result<Self> {
        let n = eigenvalues.len();
        if right.nrows() != n || right.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "eigenvector matrix",
                expected: n,
                got: right.ncols(),
            });
        }
        if masters.iter().any(|&m| m >= n) || masters.is_empty() {
            return Err(Error::InvalidInput("master indices out of range".into()));
        }
        let cond = condition_number(&right);
        if !(cond < DEFECTIVE_COND) {
            return Err(Error::Defective(cond));
        }
        let left = right
            .clone()
            .try_inverse()
            .ok_or(Error::Defective(f64::INFINITY))?;
        Ok(SpectralData {
            eigenvalues,
            right,
            left,
            masters,
        })
    }
}

/// Eigenvalues, biorthonormal eigenvectors and master selection.
///
/// Without explicit masters the `d` eigenvalues of smallest `|Re λ|` are taken,
/// keeping conjugate pairs together, and the spectral gap
/// `min Re λ_E > max Re λ_other` is enforced.
pub fn spectral_analysis(sys: &PolySystem, d: usize, masters: Option<&[usize]>) -> Result<SpectralData> {
    let n = sys.dim();
    if !(1..=2).contains(&d) || d > n {
        return Err(Error::InvalidInput(format!("master dimension {d} not supported (1 or 2, at most n)")));
    }
    let eig = eigenvalues_real(&sys.a);
    let right = eigenvectors(&sys.a, &eig)?;
    let cond = condition_number(&right);
    if !(cond < DEFECTIVE_COND) {
        return Err(Error::Defective(cond));
    }
    let left = right.clone().try_inverse().ok_or(Error::Defective(f64::INFINITY))?;
    let scale = eig.iter().map(|l| l.norm()).fold(0.0, f64::max).max(1.0);
    let tol = RESONANCE_TOL * scale;

    let masters: Vec<usize> = match masters {
        Some(m) => {
            if m.len() != d {
                return Err(Error::DimensionMismatch {
                    what: "explicit master indices",
                    expected: d,
                    got: m.len(),
                });
            }
            if m.iter().any(|&i| i >= n) {
                return Err(Error::InvalidInput("master index out of range".into()));
            }
            let mut m = m.to_vec();
            if d == 2 && eig[m[0]].im < eig[m[1]].im {
                m.swap(0, 1);
            }
            m
        }
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&i, &j| {
                eig[i].re.abs().partial_cmp(&eig[j].re.abs()).unwrap().then(i.cmp(&j))
            });
            // on |Re| ties prefer the larger real part, the only choice that
            // can satisfy the gap condition
            let tied = idx
                .iter()
                .take_while(|&&j| (eig[j].re.abs() - eig[idx[0]].re.abs()).abs() <= tol)
                .count();
            idx[..tied].sort_by(|&i, &j| eig[j].re.partial_cmp(&eig[i].re).unwrap().then(i.cmp(&j)));
            let first = idx[0];
            let chosen = if eig[first].im.abs() > tol {
                let partner = (0..n)
                    .find(|&j| j != first && (eig[j] - eig[first].conj()).norm() <= tol)
                    .ok_or_else(|| Error::InvalidInput("unpaired complex eigenvalue".into()))?;
                if d == 1 {
                    return Err(Error::SpectralGap(
                        "slowest mode is oscillatory; a one-dimensional SSM is not available".into(),
                    ));
                }
                let (a, b) = if eig[first].im > 0.0 { (first, partner) } else { (partner, first) };
                vec![a, b]
            } else if d == 1 {
                vec![first]
            } else {
                let second = idx[1];
                if eig[second].im.abs() > tol {
                    return Err(Error::SpectralGap(
                        "two slowest modes split a conjugate pair".into(),
                    ));
                }
                vec![first, second]
            };
            let min_master = chosen.iter().map(|&i| eig[i].re).fold(f64::INFINITY, f64::min);
            let max_other = (0..n)
                .filter(|i| !chosen.contains(i))
                .map(|i| eig[i].re)
                .fold(f64::NEG_INFINITY, f64::max);
            if !(min_master > max_other) {
                return Err(Error::SpectralGap(format!(
                    "master real parts (min {min_master:e}) do not exceed the rest (max {max_other:e})"
                )));
            }
            chosen
        }
    };
    Ok(SpectralData {
        eigenvalues: eig,
        right,
        left,
        masters,
    })
}

/// Eigenvalues of a real matrix with exact conjugate pairing, sorted by
/// descending real part then descending imaginary part.
fn eigenvalues_real(a: &DMatrix<f64>) -> Vec<Complex64> {
    let raw = a.clone().complex_eigenvalues();
    let scale = raw.iter().map(|l| l.norm()).fold(0.0, f64::max).max(1.0);
    let mut out: Vec<Complex64> = Vec::with_capacity(raw.len());
    let mut used = vec![false; raw.len()];
    for i in 0..raw.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let l = raw[i];
        if l.im.abs() <= 1e-12 * scale {
            out.push(Complex64::new(l.re, 0.0));
            continue;
        }
        let partner = (0..raw.len())
            .filter(|&j| !used[j])
            .min_by(|&p, &q| {
                (raw[p] - l.conj())
                    .norm()
                    .partial_cmp(&(raw[q] - l.conj()).norm())
                    .unwrap()
            });
        if let Some(j) = partner {
            used[j] = true;
        }
        let re = l.re;
        let im = l.im.abs();
        out.push(Complex64::new(re, im));
        out.push(Complex64::new(re, -im));
    }
    out.sort_by(|x, y| {
        y.re.partial_cmp(&x.re)
            .unwrap()
            .then(y.im.partial_cmp(&x.im).unwrap())
    });
    out
}

/// Right eigenvectors for sorted eigenvalues; clusters of (numerically)
/// repeated eigenvalues receive an orthonormal basis of the null space.
fn eigenvectors(a: &DMatrix<f64>, eig: &[Complex64]) -> Result<CMatrix> {
    let n = a.nrows();
    let ac = to_complex(a);
    let anorm = a.norm().max(1.0);
    let mut v = CMatrix::zeros(n, n);
    let mut done = vec![false; n];
    for i in 0..n {
        if done[i] {
            continue;
        }
        let lam = eig[i];
        if lam.im < 0.0 {
            continue;
        }
        let cluster: Vec<usize> = (i..n)
            .filter(|&j| !done[j] && eig[j].im >= 0.0 && (eig[j] - lam).norm() <= 1e-8 * anorm)
            .collect();
        let shifted = &ac - CMatrix::identity(n, n) * lam;
        let (s, vecs) = right_singular(&shifted);
        let g = cluster.len();
        if s[n - g] > 1e-6 * anorm {
            return Err(Error::Defective(s[n - g] / anorm));
        }
        for (c, &j) in cluster.iter().enumerate() {
            let col: Vec<Complex64> = vecs.column(n - 1 - c).iter().cloned().collect();
            let col = normalize_eigenvector(col, lam.im == 0.0);
            for r in 0..n {
                v[(r, j)] = col[r];
            }
            done[j] = true;
        }
    }
    // conjugate partners
    for j in 0..n {
        if done[j] {
            continue;
        }
        let target = eig[j].conj();
        let p = (0..n)
            .filter(|&k| done[k] && eig[k].im > 0.0)
            .min_by(|&x, &y| {
                (eig[x] - target)
                    .norm()
                    .partial_cmp(&(eig[y] - target).norm())
                    .unwrap()
            })
            .ok_or_else(|| Error::InvalidInput("eigenvalue without conjugate partner".into()))?;
        for r in 0..n {
            v[(r, j)] = v[(r, p)].conj();
        }
        done[j] = true;
    }
    Ok(v)
}

fn normalize_eigenvector(mut v: Vec<Complex64>, real: bool) -> Vec<Complex64> {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let vmax = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let lead = v
        .iter()
        .position(|c| c.norm() > 1e-10 * vmax)
        .unwrap_or(0);
    let phase = v[lead] / v[lead].norm();
    for c in v.iter_mut() {
        *c /= phase * norm;
    }
    v[lead].im = 0.0;
    if real {
        for c in v.iter_mut() {
            c.im = 0.0;
        }
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Graph,
    NormalForm,
}

impl Style {
    pub fn name(&self) -> &'static str {
        match self {
            Style::Graph => "graph",
            Style::NormalForm => "normal_form",
        }
    }

    pub fn parse(s: &str) -> Result<Style> {
        match s {
            "graph" => Ok(Style::Graph),
            "normal_form" | "normal-form" | "nf" => Ok(Style::NormalForm),
            other => Err(Error::InvalidInput(format!("unknown style '{other}'"))),
        }
    }
}

/// SSM parametrization `x = W(p)` with reduced dynamics `p' = R(p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SSMModel {
    pub spectral: SpectralData,
    pub style: Style,
    pub order: u32,
    /// Ambient parametrization, `d → n`.
    pub w: MultiSeries,
    /// Reduced dynamics, `d → d`.
    pub r: MultiSeries,
}

impl SSMModel {
    pub fn dim(&self) -> usize {
        self.w.dim_out()
    }

    pub fn master_dim(&self) -> usize {
        self.r.dim_out()
    }

    /// Modal coordinates `U W(p)`.
    pub fn modal_w(&self) -> MultiSeries {
        self.w.map_outputs(&matrix_rows(&self.spectral.left))
    }
}

pub(crate) fn matrix_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().cloned().collect())
        .collect()
}

/// Divisor `λ_j − ⟨m, λ_E⟩`.
fn divisor(spec: &SpectralData, j: usize, m: &MultiIndex) -> Complex64 {
    let mut s = spec.eigenvalues[j];
    for (e, &i) in m.exponents().iter().zip(&spec.masters) {
        s -= spec.eigenvalues[i] * (*e as f64);
    }
    s
}

/// Whether the normal-form style keeps the monomial `m` in row `j` of `R`.
fn normal_form_resonant(spec: &SpectralData, j: usize, m: &MultiIndex, tol: f64) -> bool {
    let div = divisor(spec, j, m);
    if div.norm() < tol {
        return true;
    }
    spec.eigenvalues[j].im.abs() > tol && div.im.abs() < tol
}

/// First small divisor in a non-resonant slot through `order`, if any.
pub fn check_nonresonance(spec: &SpectralData, order: u32, style: Style) -> Result<()> {
    let tol = spec.resonance_tol();
    let d = spec.masters.len();
    for k in 2..=order {
        for m in MultiIndex::all_of_order(d, k) {
            for j in 0..spec.dim() {
                let is_master = spec.masters.contains(&j);
                if is_master {
                    // graph style never divides in master rows; the normal form
                    // routes every resonant slot into R
                    let _ = style;
                    continue;
                }
                let div = divisor(spec, j, &m);
                if div.norm() < tol {
                    return Err(Error::Resonance {
                        component: j,
                        index: m.exponents().to_vec(),
                        divisor: div.norm(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Order-by-order solution of the invariance equation.
pub fn compute_ssm(sys: &PolySystem, spec: &SpectralData, order: u32, style: Style) -> Result<SSMModel> {
    let n = sys.dim();
    if spec.dim() != n {
        return Err(Error::DimensionMismatch {
            what: "spectral data",
            expected: n,
            got: spec.dim(),
        });
    }
    if order < 1 {
        return Err(Error::InvalidInput("order must be at least 1".into()));
    }
    let d = spec.masters.len();
    let tol = spec.resonance_tol();
    let lam_e = spec.master_eigenvalues();
    let v_rows = matrix_rows(&spec.right);
    let u_rows = matrix_rows(&spec.left);

    let mut w = MultiSeries::zeros(d, n, order);
    let mut r = MultiSeries::zeros(d, d, order);
    for (i, &j) in spec.masters.iter().enumerate() {
        let mut e = vec![ZERO; n];
        e[j] = ONE;
        w.add_term(&MultiIndex::unit(d, i), &e);
        let mut l = vec![ZERO; d];
        l[i] = lam_e[i];
        r.add_term(&MultiIndex::unit(d, i), &l);
    }

    for k in 2..=order {
        let x = w.with_order(k - 1).map_outputs(&v_rows);
        let fx = compose_truncated(&sys.f, &x, k)?.homogeneous_part(k);
        let g = fx.map_outputs(&u_rows);
        let mut dwr = MultiSeries::zeros(d, n, k);
        for i in 0..d {
            let term = multiply_truncated(&w.derivative(i), &r.component(i), k)?;
            dwr = dwr.add(&term.homogeneous_part(k).with_order(k))?;
        }
        for m in MultiIndex::all_of_order(d, k) {
            let mut wv = vec![ZERO; n];
            let mut rv = vec![ZERO; d];
            for j in 0..n {
                let rhs = dwr.coeff(&m, j) - g.coeff(&m, j);
                let div = divisor(spec, j, &m);
                match spec.masters.iter().position(|&q| q == j) {
                    Some(i) => {
                        let route = match style {
                            Style::Graph => true,
                            Style::NormalForm => normal_form_resonant(spec, j, &m, tol),
                        };
                        if route {
                            rv[i] = -rhs;
                        } else {
                            wv[j] = rhs / div;
                        }
                    }
                    None => {
                        // an exactly vanishing right-hand side is solvable by w = 0
                        if div.norm() < tol && rhs != ZERO {
                            return Err(Error::Resonance {
                                component: j,
                                index: m.exponents().to_vec(),
                                divisor: div.norm(),
                            });
                        }
                        if rhs != ZERO {
                            wv[j] = rhs / div;
                        }
                    }
                }
            }
            w.add_term(&m, &wv);
            r.add_term(&m, &rv);
        }
    }
    Ok(SSMModel {
        spectral: spec.clone(),
        style,
        order,
        w: w.map_outputs(&v_rows),
        r,
    })
}

/// Amplitude-dependent damping and frequency, `ρ' = κ(ρ)ρ`, `θ' = ω(ρ)`,
/// with `κ(ρ) = Σ κ_n ρ^{2n}` and `ω(ρ) = Σ ω_n ρ^{2n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarNormalForm {
    pub kappa: Vec<f64>,
    pub omega: Vec<f64>,
}

impl PolarNormalForm {
    pub fn kappa_at(&self, rho: f64) -> f64 {
        even_poly(&self.kappa, rho)
    }

    pub fn omega_at(&self, rho: f64) -> f64 {
        even_poly(&self.omega, rho)
    }

    /// Coefficients after the amplitude change `ρ → s ρ` with `s² = s2`.
    pub fn rescaled(&self, s2: f64) -> PolarNormalForm {
        let f = |c: &Vec<f64>| c.iter().enumerate().map(|(n, v)| v * s2.powi(n as i32)).collect();
        PolarNormalForm {
            kappa: f(&self.kappa),
            omega: f(&self.omega),
        }
    }

    /// Even series in ρ (zeros at odd powers), suitable for univariate Padé.
    pub fn kappa_series(&self) -> MultiSeries {
        even_series(&self.kappa)
    }

    pub fn omega_series(&self) -> MultiSeries {
        even_series(&self.omega)
    }
}

fn even_poly(c: &[f64], rho: f64) -> f64 {
    let r2 = rho * rho;
    c.iter().rev().fold(0.0, |acc, v| acc * r2 + v)
}

fn even_series(c: &[f64]) -> MultiSeries {
    let mut dense = vec![0.0; 2 * c.len().max(1) - 1];
    for (n, v) in c.iter().enumerate() {
        dense[2 * n] = *v;
    }
    MultiSeries::univariate_real(&dense)
}

/// `κ_n = Re R_{(n+1,n)}`, `ω_n = Im R_{(n+1,n)}` of the first master row.
pub fn extract_polar(model: &SSMModel) -> Result<PolarNormalForm> {
    if model.master_dim() != 2 || !model.spectral.is_oscillatory_pair() {
        return Err(Error::InvalidInput(
            "polar form needs a complex-conjugate master pair".into(),
        ));
    }
    if model.style != Style::NormalForm {
        return Err(Error::InvalidInput("polar form needs a normal-form model".into()));
    }
    let kmax = (model.r.order().saturating_sub(1) / 2) as usize;
    let mut kappa = Vec::with_capacity(kmax + 1);
    let mut omega = Vec::with_capacity(kmax + 1);
    for nn in 0..=kmax {
        let c = model.r.coeff(&MultiIndex::new(vec![nn as u32 + 1, nn as u32]), 0);
        kappa.push(c.re);
        omega.push(c.im);
    }
    Ok(PolarNormalForm { kappa, omega })
}

/// Leading-order forcing amplitude `f = |u_1 · f_ext| / 2` for the polar forced
/// system, with `u_1` the left eigenvector of the first master mode.
pub fn forcing_projection(spec: &SpectralData, f_ext: &[f64]) -> Result<f64> {
    if f_ext.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            what: "forcing vector",
            expected: spec.dim(),
            got: f_ext.len(),
        });
    }
    let u = spec.left.row(spec.masters[0]);
    let s: Complex64 = u.iter().zip(f_ext).map(|(a, b)| a * b).sum();
    let half = if spec.is_oscillatory_pair() { 0.5 } else { 1.0 };
    Ok(s.norm() * half)
}

/// Reduced-coordinate point of modulus `radius` at angle `theta`: conjugate
/// pair `(ρe^{iθ}, ρe^{−iθ})`, a real pair `ρ(cos θ, sin θ)` or `±ρ` for d = 1.
pub fn reduced_point(spec: &SpectralData, radius: f64, theta: f64) -> Vec<Complex64> {
    match spec.masters.len() {
        1 => vec![Complex64::new(radius * theta.cos().signum(), 0.0)],
        _ if spec.is_oscillatory_pair() => {
            let z = Complex64::from_polar(radius, theta);
            vec![z, z.conj()]
        }
        _ => vec![
            Complex64::new(radius * theta.cos(), 0.0),
            Complex64::new(radius * theta.sin(), 0.0),
        ],
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub radii: Vec<f64>,
    /// Largest defect over the sampled angles at each radius.
    pub residuals: Vec<f64>,
    /// Roundoff estimate of the defect evaluation at each radius.
    pub floors: Vec<f64>,
    /// Log-log slope fitted over the usable window, `None` when the defect
    /// never rises above roundoff (e.g. exact models).
    pub slope: Option<f64>,
    /// Indices of the radii used in the fit.
    pub window: Vec<usize>,
}

/// Defect `A W + f(W) − DW R` at one reduced point, with a roundoff scale.
pub fn invariance_defect(sys: &PolySystem, model: &SSMModel, p: &[Complex64]) -> Result<(f64, f64)> {
    let n = sys.dim();
    let w = model.w.evaluate(p)?;
    let fw = sys.nonlinearity(&w)?;
    let jac = model.w.jacobian(p)?;
    let rp = model.r.evaluate(p)?;
    let mut res: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..n {
        let mut aw = ZERO;
        let mut aw_abs = 0.0;
        for j in 0..n {
            aw += sys.a[(i, j)] * w[j];
            aw_abs += (sys.a[(i, j)] * w[j]).norm();
        }
        let mut dwr = ZERO;
        let mut dwr_abs = 0.0;
        for (q, rq) in rp.iter().enumerate() {
            dwr += jac[i][q] * rq;
            dwr_abs += (jac[i][q] * rq).norm();
        }
        res = res.hypot((aw + fw[i] - dwr).norm());
        scale = scale.max(aw_abs + fw[i].norm() + dwr_abs);
    }
    Ok((res, scale))
}

/// Defect on explicit radii (maximum over `n_angles` angles per radius).
pub fn invariance_residual_on(
    sys: &PolySystem,
    model: &SSMModel,
    radii: &[f64],
    n_angles: usize,
) -> Result<ResidualReport> {
    let n_angles = n_angles.max(1);
    let mut residuals = Vec::with_capacity(radii.len());
    let mut floors = Vec::with_capacity(radii.len());
    let order_terms = (model.w.len() + model.r.len()).max(1) as f64;
    for &rad in radii {
        let mut worst: f64 = 0.0;
        let mut floor: f64 = 0.0;
        for a in 0..n_angles {
            let theta = if model.master_dim() == 1 {
                if a % 2 == 0 { 0.0 } else { std::f64::consts::PI }
            } else {
                2.0 * std::f64::consts::PI * (a as f64 + 0.25) / n_angles as f64
            };
            let p = reduced_point(&model.spectral, rad, theta);
            let (res, scale) = invariance_defect(sys, model, &p)?;
            worst = worst.max(res);
            floor = floor.max(scale * f64::EPSILON * order_terms.sqrt() * 8.0);
        }
        residuals.push(worst);
        floors.push(floor);
    }
    let window: Vec<usize> = (0..radii.len())
        .filter(|&i| residuals[i] > 1e3 * floors[i] && residuals[i] > 0.0)
        .collect();
    let slope = fit_slope(radii, &residuals, &window);
    Ok(ResidualReport {
        radii: radii.to_vec(),
        residuals,
        floors,
        slope,
        window,
    })
}

/// Defect on radii chosen from the coefficient growth of the model: a sweep
/// below the estimated convergence radius, fitted only where the defect is
/// well above roundoff and still small relative to the vector field.
pub fn invariance_residual(sys: &PolySystem, model: &SSMModel) -> Result<ResidualReport> {
    let mut profile = model.w.max_abs_by_order();
    for (p, q) in profile.iter_mut().zip(model.r.max_abs_by_order()) {
        *p = p.max(q);
    }
    let rc = growth_scale(&profile).min(1e6);
    let count = 48;
    let radii: Vec<f64> = (0..count)
        .map(|i| rc * 10f64.powf(-7.0 + 7.0 * i as f64 / (count - 1) as f64) * 0.5)
        .collect();
    let mut rep = invariance_residual_on(sys, model, &radii, 8)?;
    // keep the asymptotic regime: defect small against the vector field
    let mut window = Vec::new();
    for &i in &rep.window {
        let p = reduced_point(&model.spectral, radii[i], 0.3);
        let (_, scale) = invariance_defect(sys, model, &p)?;
        if rep.residuals[i] < 1e-4 * scale {
            window.push(i);
        }
    }
    rep.slope = fit_slope(&rep.radii, &rep.residuals, &window);
    rep.window = window;
    Ok(rep)
}

fn fit_slope(x: &[f64], y: &[f64], idx: &[usize]) -> Option<f64> {
    if idx.len() < 4 {
        return None;
    }
    let lx: Vec<f64> = idx.iter().map(|&i| x[i].ln()).collect();
    let ly: Vec<f64> = idx.iter().map(|&i| y[i].ln()).collect();
    let span = lx.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - lx.iter().cloned().fold(f64::INFINITY, f64::min);
    if span < 0.5 {
        return None;
    }
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// For a one-dimensional model, express every ambient coordinate as a graph
/// over coordinate `coord`: returns `h` with `x = h(x_coord)` (so the
/// `coord` component of `h` is the identity).
pub fn graph_over_coordinate(model: &SSMModel, coord: usize, order: u32) -> Result<MultiSeries> {
    if model.master_dim() != 1 {
        return Err(Error::InvalidInput("graph conversion needs a one-dimensional model".into()));
    }
    let wc = model.w.component(coord);
    let inv = revert_univariate(&wc, order)?;
    compose_truncated(&model.w.with_order(order), &inv, order)
}

/// Reduced dynamics of a one-dimensional model expressed in coordinate
/// `coord`: `x_c' = W_c'(p) R(p)` with `p = W_c^{-1}(x_c)`.
pub fn reduced_dynamics_over_coordinate(model: &SSMModel, coord: usize, order: u32) -> Result<MultiSeries> {
    if model.master_dim() != 1 {
        return Err(Error::InvalidInput("graph conversion needs a one-dimensional model".into()));
    }
    let wc = model.w.component(coord).with_order(order);
    let inv = revert_univariate(&wc, order)?;
    let flow = multiply_truncated(&wc.derivative(0), &model.r.with_order(order), order)?;
    compose_truncated(&flow, &inv, order)
}
