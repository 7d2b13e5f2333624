//! Reduced dynamics on (g)SSMs: integration, lifting, backbone and forced
//! response curves, stroboscopic sampling and chaos diagnostics.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::pade::{RationalMap, DEFAULT_POLE_FLOOR};
use crate::series::MultiSeries;
use crate::ssm::{PolarNormalForm, PolySystem, SSMModel};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Time-stamped samples of a (possibly vector-valued) signal.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryData {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
}

impl TrajectoryData {
    pub fn new(t: Vec<f64>, x: Vec<Vec<f64>>) -> Result<Self> {
        if t.len() != x.len() {
            return Err(Error::DimensionMismatch {
                what: "trajectory samples",
                expected: t.len(),
                got: x.len(),
            });
        }
        if let Some(first) = x.first() {
            if x.iter().any(|r| r.len() != first.len()) {
                return Err(Error::InvalidInput("ragged trajectory rows".into()));
            }
        }
        Ok(TrajectoryData { t, x })
    }

    pub fn scalar(t: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::new(t, y.into_iter().map(|v| vec![v]).collect())
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, |r| r.len())
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.x.iter().map(|r| r[i]).collect()
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.x.last().map(|r| r.as_slice())
    }

    /// Uniform time step, or [`Error::NonUniformSampling`].
    pub fn uniform_step(&self) -> Result<f64> {
        if self.t.len() < 2 {
            return Err(Error::TooShort {
                required: 2,
                available: self.t.len(),
            });
        }
        let dt = (self.t[self.t.len() - 1] - self.t[0]) / (self.t.len() - 1) as f64;
        let tol = 1e-6 * dt.abs();
        for w in self.t.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > tol {
                return Err(Error::NonUniformSampling);
            }
        }
        Ok(dt)
    }
}

/// Right-hand side of a real ODE.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>>;
}

impl VectorField for PolySystem {
    fn dim(&self) -> usize {
        PolySystem::dim(self)
    }

    fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.rhs(t, x))
    }
}

/// Scalar function of the amplitude, `κ(ρ)` or `ω(ρ)`.
#[derive(Clone, Debug, PartialEq)]
pub enum RadialFn {
    /// `Σ c_n ρ^{2n}`.
    Even(Vec<f64>),
    /// Univariate rational in `ρ`.
    Rational(RationalMap),
    Constant(f64),
}

impl RadialFn {
    pub fn eval_complex(&self, rho: Complex64) -> Result<Complex64> {
        match self {
            RadialFn::Even(c) => {
                let r2 = rho * rho;
                Ok(c.iter().rev().fold(ZERO, |acc, v| acc * r2 + v))
            }
            RadialFn::Rational(r) => Ok(r.evaluate(&[rho], DEFAULT_POLE_FLOOR)?[0]),
            RadialFn::Constant(v) => Ok(Complex64::new(*v, 0.0)),
        }
    }

    pub fn eval(&self, rho: f64) -> Result<f64> {
        Ok(self.eval_complex(Complex64::new(rho, 0.0))?.re)
    }

    /// Derivative by the complex-step method.
    pub fn derivative(&self, rho: f64) -> Result<f64> {
        let h = 1e-20 * rho.abs().max(1.0);
        Ok(self.eval_complex(Complex64::new(rho, h))?.im / h)
    }
}

/// Ambient parametrization, polynomial or rational.
#[derive(Clone, Debug, PartialEq)]
pub enum Param {
    Series(MultiSeries),
    Rational(RationalMap),
}

impl Param {
    pub fn dim_in(&self) -> usize {
        match self {
            Param::Series(s) => s.dim_in(),
            Param::Rational(r) => r.dim_in(),
        }
    }

    pub fn dim_out(&self) -> usize {
        match self {
            Param::Series(s) => s.dim_out(),
            Param::Rational(r) => r.dim_out(),
        }
    }

    pub fn evaluate(&self, p: &[Complex64]) -> Result<Vec<Complex64>> {
        match self {
            Param::Series(s) => s.evaluate(p),
            Param::Rational(r) => r.evaluate(p, DEFAULT_POLE_FLOOR),
        }
    }
}

/// How the real ODE state maps to the reduced coordinates `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coordinates {
    /// `p` is the real state itself.
    Real,
    /// State `(Re z, Im z)` with `p = (z, z̄)`.
    ConjugatePair,
}

/// Leading-order periodic forcing of a reduced field.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedForcing {
    /// Polar fields: `ε f`. Cartesian fields: scale applied to `projection`.
    pub amplitude: f64,
    pub frequency: f64,
    /// Cartesian fields: coefficient of `cos(Ω t)` in each reduced equation.
    pub projection: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub enum FieldKind {
    Polynomial(MultiSeries),
    Rational(RationalMap),
    /// `ρ' = κ(ρ)ρ (+ εf sin ψ)`, `θ' = ω(ρ)` or, when forced,
    /// `ψ' = ω(ρ) − Ω + εf cos ψ / ρ`. State `(ρ, θ)` or `(ρ, ψ)`.
    Polar { kappa: RadialFn, omega: RadialFn },
    /// Dynamics of coordinate `coord` on the graph `x = graph(x_coord)` of a
    /// one-dimensional invariant manifold of `system`.
    Graph {
        system: Box<PolySystem>,
        coord: usize,
        graph: Param,
    },
}

#[derive(Clone, Debug)]
pub struct ReducedField {
    pub kind: FieldKind,
    pub coords: Coordinates,
    pub forcing: Option<ReducedForcing>,
    /// Pole floor for rational evaluations.
    pub floor: f64,
}

impl ReducedField {
    pub fn new(kind: FieldKind, coords: Coordinates) -> Self {
        ReducedField {
            kind,
            coords,
            forcing: None,
            floor: DEFAULT_POLE_FLOOR,
        }
    }

    pub fn polynomial(r: MultiSeries, coords: Coordinates) -> Self {
        Self::new(FieldKind::Polynomial(r), coords)
    }

    pub fn rational(r: RationalMap, coords: Coordinates) -> Self {
        Self::new(FieldKind::Rational(r), coords)
    }

    pub fn polar(kappa: RadialFn, omega: RadialFn) -> Self {
        Self::new(FieldKind::Polar { kappa, omega }, Coordinates::Real)
    }

    /// Reduced dynamics of an SSM model, real or conjugate-pair coordinates
    /// chosen from its master spectrum.
    pub fn from_model(model: &SSMModel) -> Self {
        let coords = if model.spectral.is_oscillatory_pair() {
            Coordinates::ConjugatePair
        } else {
            Coordinates::Real
        };
        Self::polynomial(model.r.clone(), coords)
    }

    pub fn with_forcing(mut self, forcing: ReducedForcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    /// Reduced coordinates `p` of a real state.
    pub fn reduced_point(&self, x: &[f64]) -> Vec<Complex64> {
        to_reduced(self.coords, x)
    }

    fn eval_reduced(&self, p: &[Complex64]) -> Result<Vec<Complex64>> {
        match &self.kind {
            FieldKind::Polynomial(s) => s.evaluate(p),
            FieldKind::Rational(r) => r.evaluate(p, self.floor),
            _ => unreachable!("cartesian evaluation of a non-cartesian field"),
        }
    }
}

fn to_reduced(coords: Coordinates, x: &[f64]) -> Vec<Complex64> {
    match coords {
        Coordinates::Real => x.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        Coordinates::ConjugatePair => {
            let z = Complex64::new(x[0], x[1]);
            vec![z, z.conj()]
        }
    }
}

impl VectorField for ReducedField {
    fn dim(&self) -> usize {
        match &self.kind {
            FieldKind::Polar { .. } => 2,
            FieldKind::Graph { .. } => 1,
            FieldKind::Polynomial(s) => match self.coords {
                Coordinates::Real => s.dim_out(),
                Coordinates::ConjugatePair => 2,
            },
            FieldKind::Rational(r) => match self.coords {
                Coordinates::Real => r.dim_out(),
                Coordinates::ConjugatePair => 2,
            },
        }
    }

    fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        match &self.kind {
            FieldKind::Polar { kappa, omega } => {
                let rho = x[0];
                let k = kappa.eval(rho)?;
                let w = omega.eval(rho)?;
                match &self.forcing {
                    None => Ok(vec![k * rho, w]),
                    Some(f) => {
                        let ef = f.amplitude;
                        let psi = x[1];
                        Ok(vec![
                            k * rho + ef * psi.sin(),
                            w - f.frequency + ef * psi.cos() / rho,
                        ])
                    }
                }
            }
            FieldKind::Graph { system, coord, graph } => {
                let full = graph.evaluate(&[Complex64::new(x[0], 0.0)])?;
                let rhs = system.rhs_complex(&full)?;
                let mut v = rhs[*coord].re;
                if let Some(f) = &self.forcing {
                    v += f.amplitude * (f.frequency * t).cos() * f.projection[0].re;
                }
                Ok(vec![v])
            }
            _ => {
                let p = self.reduced_point(x);
                let mut r = self.eval_reduced(&p)?;
                if let Some(f) = &self.forcing {
                    let s = f.amplitude * (f.frequency * t).cos();
                    for (ri, pi) in r.iter_mut().zip(&f.projection) {
                        *ri += pi * s;
                    }
                }
                Ok(match self.coords {
                    Coordinates::Real => r.iter().map(|v| v.re).collect(),
                    Coordinates::ConjugatePair => vec![r[0].re, r[0].im],
                })
            }
        }
    }
}

/// Why an integration stopped.
#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Completed,
    /// State norm exceeded the blowup bound.
    Blowup { t: f64, norm: f64 },
    /// A rational right-hand side came within its pole floor.
    Pole { t: f64, point: Vec<f64> },
    /// The step size collapsed (typically an approaching singularity).
    StepUnderflow { t: f64 },
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::Blowup { .. } => "blowup",
            Termination::Pole { .. } => "pole",
            Termination::StepUnderflow { .. } => "step_underflow",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Integration {
    pub trajectory: TrajectoryData,
    pub termination: Termination,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrateOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Blowup when `|x| > blowup_factor * max(|x0|, blowup_reference)`.
    pub blowup_factor: f64,
    pub blowup_reference: f64,
    pub max_steps: usize,
    /// Record samples at this spacing (landing exactly on the sample times);
    /// `None` records every accepted step.
    pub sample_dt: Option<f64>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            rtol: 1e-9,
            atol: 1e-12,
            blowup_factor: 1e6,
            blowup_reference: 0.0,
            max_steps: 5_000_000,
            sample_dt: None,
        }
    }
}

// Dormand–Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        let s = h * c;
        for (o, v) in out.iter_mut().zip(k.iter()) {
            *o += s * v;
        }
    }
    out
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Adaptive Dormand–Prince 5(4) from `t0` to `t1` (backward when `t1 < t0`).
pub fn integrate<F: VectorField + ?Sized>(
    field: &F,
    x0: &[f64],
    t0: f64,
    t1: f64,
    opts: &IntegrateOptions,
) -> Result<Integration> {
    let n = field.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            what: "initial condition",
            expected: n,
            got: x0.len(),
        });
    }
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("initial condition must be finite".into()));
    }
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let reference = norm(x0).max(opts.blowup_reference);
    let bound = opts.blowup_factor * if reference > 0.0 { reference } else { 1.0 };

    let mut traj = TrajectoryData::default();
    traj.t.push(t0);
    traj.x.push(x0.to_vec());
    if span == 0.0 {
        return Ok(Integration {
            trajectory: traj,
            termination: Termination::Completed,
            steps: 0,
        });
    }

    let mut t = t0;
    let mut y = x0.to_vec();
    let pole = |t: f64, y: &[f64]| Termination::Pole { t, point: y.to_vec() };
    let mut k1 = match field.eval(t, &y) {
        Ok(v) => v,
        Err(Error::PoleProximity { .. }) => {
            return Ok(Integration {
                trajectory: traj,
                termination: pole(t, &y),
                steps: 0,
            })
        }
        Err(e) => return Err(e),
    };
    // initial step from the local scale of the solution
    let sc0 = opts.atol + opts.rtol * norm(&y);
    let d0 = norm(&y) / sc0.max(1e-300);
    let d1 = norm(&k1) / sc0.max(1e-300);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(span).max(1e-12 * span);
    if let Some(dt) = opts.sample_dt {
        h = h.min(dt.abs());
    }
    let mut next_sample = opts.sample_dt.map(|dt| t0 + dir * dt.abs());
    let mut steps = 0usize;
    let mut termination = Termination::Completed;
    let hmin = 1e-14 * span.max(t0.abs()).max(1.0);

    while dir * (t1 - t) > 0.0 {
        if steps >= opts.max_steps {
            termination = Termination::StepUnderflow { t };
            break;
        }
        let mut target = t1;
        if let Some(ts) = next_sample {
            if dir * (t1 - ts) > 0.0 {
                target = ts;
            }
        }
        let remaining = (target - t).abs();
        let mut landing = false;
        if h >= remaining {
            h = remaining;
            landing = true;
        }
        let hs = dir * h;
        let stage = |tt: f64, yy: Vec<f64>| field.eval(tt, &yy);
        let result = (|| -> Result<(Vec<f64>, Vec<f64>, f64)> {
            let k2 = stage(t + C2 * hs, axpy(&y, hs, &[(A21, &k1)]))?;
            let k3 = stage(t + C3 * hs, axpy(&y, hs, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = stage(t + C4 * hs, axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = stage(
                t + C5 * hs,
                axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            )?;
            let k6 = stage(
                t + hs,
                axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            )?;
            let y5 = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = stage(t + hs, y5.clone())?;
            let mut err: f64 = 0.0;
            for i in 0..n {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
                err = err.max((e / sc).abs());
            }
            Ok((y5, k7, err))
        })();
        let (y_new, k_new, err) = match result {
            Ok(v) => v,
            Err(Error::PoleProximity { .. }) => {
                // shrink towards the pole and report once the step collapses
                h *= 0.25;
                if h < hmin {
                    termination = pole(t, &y);
                    break;
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            h *= 0.2;
            if h < hmin {
                termination = Termination::Blowup { t, norm: norm(&y) };
                break;
            }
            continue;
        }
        if err <= 1.0 {
            steps += 1;
            t = if landing { target } else { t + hs };
            y = y_new;
            k1 = k_new;
            let nrm = norm(&y);
            let record = match next_sample {
                None => true,
                Some(ts) => landing && target == ts,
            };
            if record || (landing && target == t1) {
                traj.t.push(t);
                traj.x.push(y.clone());
            }
            if landing {
                if let (Some(ts), Some(dt)) = (next_sample, opts.sample_dt) {
                    if target == ts {
                        let k = ((ts - t0) / (dir * dt.abs())).round() + 1.0;
                        next_sample = Some(t0 + dir * dt.abs() * k);
                    }
                }
            }
            if nrm > bound {
                termination = Termination::Blowup { t, norm: nrm };
                break;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = h.max(if landing { 0.0 } else { h }) * fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
        if h < hmin {
            termination = Termination::StepUnderflow { t };
            break;
        }
    }
    // avoid a duplicate final sample when the last landing coincided
    let len = traj.t.len();
    if len >= 2 && traj.t[len - 1] == traj.t[len - 2] {
        traj.t.pop();
        traj.x.pop();
    }
    Ok(Integration {
        trajectory: traj,
        termination,
        steps,
    })
}

/// Ambient trajectory `x = Re W(p)` along a reduced trajectory; samples where
/// a rational parametrization hits its pole floor are reported by index and
/// filled with NaN.
pub fn lift(param: &Param, coords: Coordinates, reduced: &TrajectoryData) -> Result<(TrajectoryData, Vec<usize>)> {
    let mut out = TrajectoryData::default();
    let mut flagged = Vec::new();
    for (i, (t, x)) in reduced.t.iter().zip(&reduced.x).enumerate() {
        let p = to_reduced(coords, x);
        if p.len() != param.dim_in() {
            return Err(Error::DimensionMismatch {
                what: "reduced state for lift",
                expected: param.dim_in(),
                got: p.len(),
            });
        }
        match param.evaluate(&p) {
            Ok(v) => out.x.push(v.iter().map(|z| z.re).collect()),
            Err(Error::PoleProximity { .. }) => {
                flagged.push(i);
                out.x.push(vec![f64::NAN; param.dim_out()]);
            }
            Err(e) => return Err(e),
        }
        out.t.push(*t);
    }
    Ok((out, flagged))
}

/// Ambient point of polar coordinates `(ρ, θ)` on a conjugate-pair
/// parametrization.
pub fn lift_polar(param: &Param, rho: f64, theta: f64) -> Result<Vec<f64>> {
    let z = Complex64::from_polar(rho, theta);
    Ok(param.evaluate(&[z, z.conj()])?.iter().map(|v| v.re).collect())
}

/// Largest `|x_component|` over one revolution of the circle of radius `rho`.
pub fn response_amplitude(param: &Param, component: usize, rho: f64, samples: usize) -> Result<f64> {
    let mut best: f64 = 0.0;
    for k in 0..samples.max(4) {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / samples.max(4) as f64;
        best = best.max(lift_polar(param, rho, theta)?[component].abs());
    }
    Ok(best)
}

/// `(ρ, ω(ρ))` pairs.
pub fn backbone(omega: &RadialFn, rho_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    rho_grid.iter().map(|&r| Ok((r, omega.eval(r)?))).collect()
}

impl From<&PolarNormalForm> for (RadialFn, RadialFn) {
    fn from(p: &PolarNormalForm) -> Self {
        (RadialFn::Even(p.kappa.clone()), RadialFn::Even(p.omega.clone()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FRCPoint {
    pub rho: f64,
    pub omega: f64,
    /// Ambient response amplitude (ρ itself when no lift is supplied).
    pub amplitude: f64,
    pub stable: bool,
    /// `+1` for `Ω = ω + √…`, `−1` for `Ω = ω − √…`.
    pub branch: i8,
    /// Defect of `(Ω − ω)² − ε²f²/ρ² + κ²`.
    pub residual: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FRCBranch {
    pub points: Vec<FRCPoint>,
}

impl FRCBranch {
    /// Point of largest amplitude.
    pub fn peak(&self) -> Option<&FRCPoint> {
        self.points
            .iter()
            .max_by(|a, b| a.amplitude.partial_cmp(&b.amplitude).unwrap())
    }
}

/// Forced response from the polar fixed-point condition, swept in `ρ*`:
/// `Ω = ω(ρ) ± √(ε²f²/ρ² − κ(ρ)²)` wherever the radicand is nonnegative.
pub fn forced_response(
    kappa: &RadialFn,
    omega: &RadialFn,
    ef: f64,
    rho_grid: &[f64],
    amplitude: Option<&dyn Fn(f64) -> Result<f64>>,
) -> Result<FRCBranch> {
    if !(ef > 0.0) {
        return Err(Error::InvalidInput("forcing amplitude must be positive".into()));
    }
    let mut points = Vec::new();
    for &rho in rho_grid {
        if !(rho > 0.0) {
            return Err(Error::InvalidInput("rho grid must be positive".into()));
        }
        let (k, w) = match (kappa.eval(rho), omega.eval(rho)) {
            (Ok(k), Ok(w)) => (k, w),
            (Err(Error::PoleProximity { .. }), _) | (_, Err(Error::PoleProximity { .. })) => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let radicand = (ef / rho).powi(2) - k * k;
        if radicand < 0.0 {
            continue;
        }
        let dk = kappa.derivative(rho)?;
        let dw = omega.derivative(rho)?;
        let amp = match amplitude {
            Some(f) => f(rho)?,
            None => rho,
        };
        let root = radicand.sqrt();
        let signs: &[i8] = if root == 0.0 { &[1] } else { &[-1, 1] };
        for &s in signs {
            let big_omega = w + s as f64 * root;
            let sin_psi = -k * rho / ef;
            let cos_psi = rho * (big_omega - w) / ef;
            let j11 = dk * rho + k;
            let j12 = ef * cos_psi;
            let j21 = dw - ef * cos_psi / (rho * rho);
            let j22 = -ef * sin_psi / rho;
            let trace = j11 + j22;
            let det = j11 * j22 - j12 * j21;
            let residual = (big_omega - w).powi(2) - (ef / rho).powi(2) + k * k;
            points.push(FRCPoint {
                rho,
                omega: big_omega,
                amplitude: amp,
                stable: trace < 0.0 && det > 0.0,
                branch: s,
                residual,
            });
        }
    }
    Ok(FRCBranch { points })
}

/// Stroboscopic samples at `t = k T`, `T = 2π/Ω`, after `skip` periods.
pub fn poincare_sample<F: VectorField + ?Sized>(
    field: &F,
    frequency: f64,
    ic: &[f64],
    n_periods: usize,
    skip: usize,
    opts: &IntegrateOptions,
) -> Result<(Vec<Vec<f64>>, Termination)> {
    if !(frequency > 0.0) {
        return Err(Error::InvalidInput("sampling frequency must be positive".into()));
    }
    let period = 2.0 * std::f64::consts::PI / frequency;
    let mut o = opts.clone();
    o.sample_dt = Some(period);
    let total = (skip + n_periods) as f64 * period;
    let run = integrate(field, ic, 0.0, total, &o)?;
    let pts = run.trajectory.x.into_iter().skip(skip + 1).collect();
    Ok((pts, run.termination))
}

pub const DEFAULT_SKIP_PERIODS: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovEstimate {
    pub exponent: f64,
    /// Standard error of the fitted slope.
    pub fit_error: f64,
    pub times: Vec<f64>,
    /// Cumulative `Σ ln(d_k / d_0)` at the renormalization times.
    pub log_growth: Vec<f64>,
}

/// Largest Lyapunov exponent by repeated renormalization of a nearby
/// trajectory at separation `d0`, sampled every `window` time units over
/// `horizon`.
pub fn lyapunov_estimate<F: VectorField + ?Sized>(
    field: &F,
    ic: &[f64],
    d0: f64,
    horizon: f64,
    window: f64,
    opts: &IntegrateOptions,
) -> Result<LyapunovEstimate> {
    if !(d0 > 0.0 && horizon > 0.0 && window > 0.0) {
        return Err(Error::InvalidInput("perturbation, horizon and window must be positive".into()));
    }
    let n = field.dim();
    let mut dir = vec![1.0 / (n as f64).sqrt(); n];
    let mut x = ic.to_vec();
    let mut y: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + d0 * b).collect();
    let steps = (horizon / window).round().max(1.0) as usize;
    let mut times = vec![0.0];
    let mut growth = vec![0.0];
    let mut acc = 0.0;
    let mut o = opts.clone();
    o.sample_dt = None;
    for k in 0..steps {
        let (ta, tb) = (k as f64 * window, (k + 1) as f64 * window);
        let rx = integrate(field, &x, ta, tb, &o)?;
        let ry = integrate(field, &y, ta, tb, &o)?;
        if !rx.termination.is_completed() || !ry.termination.is_completed() {
            return Err(Error::InvalidInput(format!(
                "trajectory terminated early ({})",
                if rx.termination.is_completed() { ry.termination.label() } else { rx.termination.label() }
            )));
        }
        x = rx.trajectory.last().unwrap().to_vec();
        let yy = ry.trajectory.last().unwrap().to_vec();
        let diff: Vec<f64> = yy.iter().zip(&x).map(|(a, b)| a - b).collect();
        let d = norm(&diff);
        if k == 0 && d > 1e-2 * norm(&x).max(1.0) {
            return Err(Error::HorizonTooLong);
        }
        if d == 0.0 {
            return Err(Error::RankDeficient("trajectories coincided".into()));
        }
        acc += (d / d0).ln();
        times.push(tb);
        growth.push(acc);
        dir = diff.iter().map(|v| v / d).collect();
        y = x.iter().zip(&dir).map(|(a, b)| a + d0 * b).collect();
    }
    let (slope, err) = linear_fit(&times, &growth);
    Ok(LyapunovEstimate {
        exponent: slope,
        fit_error: err,
        times,
        log_growth: growth,
    })
}

/// Least-squares slope and its standard error.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    let err = if x.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (slope, err)
}

/// One-sided periodogram `(frequency, power)` of a uniformly sampled
/// component with the mean removed; frequencies in cycles per time unit.
pub fn psd_estimate(traj: &TrajectoryData, component: usize) -> Result<Vec<(f64, f64)>> {
    let dt = traj.uniform_step()?;
    if component >= traj.dim() {
        return Err(Error::DimensionMismatch {
            what: "PSD component",
            expected: traj.dim(),
            got: component,
        });
    }
    let y = traj.component(component);
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = y.iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let fs = 1.0 / dt.abs();
    let half = n / 2;
    Ok((0..=half)
        .map(|k| {
            let mut p = buf[k].norm_sqr() / (n as f64 * fs);
            if k != 0 && !(n % 2 == 0 && k == half) {
                p *= 2.0;
            }
            (k as f64 * fs / n as f64, p)
        })
        .collect())
}

/// Largest share of total power held by a single bin.
pub fn max_bin_fraction(psd: &[(f64, f64)]) -> f64 {
    let total: f64 = psd.iter().map(|p| p.1).sum();
    if total == 0.0 {
        return 0.0;
    }
    psd.iter().map(|p| p.1).fold(0.0, f64::max) / total
}

/// Real roots of a scalar field on `[a, b]` by sign changes on a grid refined
/// with bisection; samples inside the pole floor are skipped.
pub fn scalar_roots<F: Fn(f64) -> Result<f64>>(f: F, a: f64, b: f64, samples: usize) -> Result<Vec<f64>> {
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=samples {
        let x = a + (b - a) * i as f64 / samples as f64;
        let v = match f(x) {
            Ok(v) if v.is_finite() => v,
            Ok(_) | Err(Error::PoleProximity { .. }) => {
                prev = None;
                continue;
            }
            Err(e) => return Err(e),
        };
        if v == 0.0 {
            roots.push(x);
        } else if let Some((px, pv)) = prev {
            if pv != 0.0 && pv.signum() != v.signum() {
                let (mut lo, mut hi, mut flo) = (px, x, pv);
                let mut pole = false;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = match f(mid) {
                        Ok(v) => v,
                        Err(Error::PoleProximity { .. }) => {
                            pole = true;
                            break;
                        }
                        Err(e) => return Err(e),
                    };
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                    if (hi - lo).abs() <= 1e-15 * (1.0 + mid.abs()) {
                        break;
                    }
                }
                let r = 0.5 * (lo + hi);
                // a sign change across a pole is not a root
                let root = !pole && f(r).map(|fr| fr.abs() < 1e-6 * (pv.abs() + v.abs() + 1.0)).unwrap_or(false);
                if root {
                    roots.push(r);
                }
            }
        }
        prev = Some((x, v));
    }
    Ok(roots)
}
