//! Locating convergence-limiting singularities from Taylor coefficients and
//! scanning rational denominators for zeros.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pade::RationalMap;

/// Coefficients below this fraction of the largest one count as zero.
pub const ZERO_THRESHOLD: f64 = 1e-12;
pub const DEFAULT_SCAN_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct RadiusEstimate {
    /// Extrapolated radius; `f64::INFINITY` for entire-looking series.
    pub radius: f64,
    /// Ratios shrink to zero: a divergent series.
    pub zero_radius: bool,
    /// Step between the coefficients used (2 for series of one parity).
    pub step: usize,
    /// RMS residual of the 1/n fit relative to the radius.
    pub residual: f64,
}

/// Domb–Sykes style radius: the ratios `|c_n / c_{n+s}|^{1/s}` are fitted
/// linearly in `1/n` over the tail and extrapolated to `n → ∞`.
pub fn estimate_radius(coeffs: &[f64]) -> Result<RadiusEstimate> {
    let cmax = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let nz: Vec<usize> = (0..coeffs.len())
        .filter(|&i| coeffs[i].abs() > ZERO_THRESHOLD * cmax)
        .collect();
    if nz.len() < 6 {
        return Err(Error::InsufficientOrder {
            required: 6,
            available: nz.len() as u32,
        });
    }
    let same_parity = nz.iter().all(|i| i % 2 == nz[0] % 2);
    let step = if same_parity { 2 } else { 1 };
    let mut inv_n = Vec::new();
    let mut q = Vec::new();
    for &i in &nz {
        let j = i + step;
        if j < coeffs.len() && coeffs[j].abs() > ZERO_THRESHOLD * cmax {
            inv_n.push(1.0 / j as f64);
            q.push((coeffs[i] / coeffs[j]).abs().powf(1.0 / step as f64));
        }
    }
    if q.len() < 4 {
        return Err(Error::InsufficientOrder {
            required: 4,
            available: q.len() as u32,
        });
    }
    let tail = (q.len() / 2).max(4).min(q.len());
    let xs = &inv_n[q.len() - tail..];
    let ys = &q[q.len() - tail..];

    // ratios growing without bound: entire function
    let growing = ys.windows(2).all(|w| w[1] > w[0]) && ys[ys.len() - 1] > 1.5 * ys[0];
    if growing && q[q.len() - 1] > 2.0 * q[0] {
        return Ok(RadiusEstimate {
            radius: f64::INFINITY,
            zero_radius: false,
            step,
            residual: 0.0,
        });
    }
    let (a, b, rms) = line_fit(xs, ys);
    let shrinking = ys.windows(2).all(|w| w[1] < w[0]);
    let zero = a <= 1e-3 * ys[0] || (shrinking && a < 0.1 * ys[ys.len() - 1]);
    if zero {
        return Ok(RadiusEstimate {
            radius: 0.0,
            zero_radius: true,
            step,
            residual: rms,
        });
    }
    let _ = b;
    Ok(RadiusEstimate {
        radius: a,
        zero_radius: false,
        step,
        residual: rms / a,
    })
}

/// Intercept, slope and RMS residual of `y ≈ a + b x`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - a - b * xi).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (a, b, rms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignPattern {
    /// All nonzero coefficients share one sign.
    SameSign,
    Alternating,
    /// Sign sequence repeating with the given even period (> 2).
    Periodic(usize),
    Irregular,
    /// Fewer than four sign-bearing coefficients.
    Inconclusive,
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignPattern::SameSign => write!(f, "same-sign"),
            SignPattern::Alternating => write!(f, "alternating"),
            SignPattern::Periodic(p) => write!(f, "period-{p}"),
            SignPattern::Irregular => write!(f, "irregular"),
            SignPattern::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularityEstimate {
    /// `None` when no radius was estimated.
    pub radius: Option<f64>,
    /// Angle of the nearest singularity pair, in `[0, π/2]`; `None` when
    /// inconclusive.
    pub angle: Option<f64>,
    pub pattern: SignPattern,
    /// Fraction of coefficients whose sign the fitted angle explains.
    pub confidence: f64,
}

impl fmt::Display for SingularityEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.radius.map_or("nan".to_string(), |r| format!("{r:e}"));
        let a = self.angle.map_or("nan".to_string(), |a| format!("{a:e}"));
        write!(f, "{r} {a} {} {:e}", self.pattern, self.confidence)
    }
}

fn sign0(v: f64, tol: f64) -> i8 {
    if v.abs() <= tol {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

/// Classifies the signs of `g[i]`, the coefficient of `z^{2(first+i)}` in an
/// even series (pass the tail without the constant when it carries no
/// singular information). Same-sign gives θ = 0, alternating θ = π/2;
/// otherwise θ minimizes the sign mismatch against `± cos(2nθ)`.
pub fn classify_sign_pattern(g: &[f64], first: usize) -> SingularityEstimate {
    let gmax = g.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let signs: Vec<i8> = g.iter().map(|&c| sign0(c, ZERO_THRESHOLD * gmax)).collect();
    let bearing: Vec<i8> = signs.iter().copied().filter(|&s| s != 0).collect();
    if bearing.len() < 4 {
        return SingularityEstimate {
            radius: None,
            angle: None,
            pattern: SignPattern::Inconclusive,
            confidence: 0.0,
        };
    }
    if bearing.iter().all(|&s| s == bearing[0]) && !signs.contains(&0) {
        return SingularityEstimate {
            radius: None,
            angle: Some(0.0),
            pattern: SignPattern::SameSign,
            confidence: 1.0,
        };
    }
    if !signs.contains(&0) && signs.windows(2).all(|w| w[0] == -w[1]) {
        return SingularityEstimate {
            radius: None,
            angle: Some(PI / 2.0),
            pattern: SignPattern::Alternating,
            confidence: 1.0,
        };
    }
    let period = (4..=signs.len() / 2)
        .step_by(2)
        .find(|&p| (p..signs.len()).all(|i| signs[i] == signs[i - p]));
    // sign fit over θ ∈ [0, π/2]; both global signs allowed
    let steps = 1440;
    let mut best = (usize::MAX, 0.0);
    for j in 0..=steps {
        let theta = PI / 2.0 * j as f64 / steps as f64;
        for s in [1i8, -1] {
            let cost = signs
                .iter()
                .enumerate()
                .filter(|(i, &sg)| sg != s * sign0((2.0 * (first + i) as f64 * theta).cos(), 1e-9))
                .count();
            if cost < best.0 {
                best = (cost, theta);
            }
        }
    }
    SingularityEstimate {
        radius: None,
        angle: Some(best.1),
        pattern: period.map_or(SignPattern::Irregular, SignPattern::Periodic),
        confidence: 1.0 - best.0 as f64 / signs.len() as f64,
    }
}

/// Every other coefficient starting at `start`.
pub fn even_subsequence(coeffs: &[f64], start: usize) -> Vec<f64> {
    coeffs.iter().skip(start).step_by(2).copied().collect()
}

/// Tensor grid of evaluation points with axis-neighbor structure.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationGrid {
    pub shape: Vec<usize>,
    /// Row-major (last axis fastest).
    pub points: Vec<Vec<Complex64>>,
}

impl EvaluationGrid {
    /// Real tensor grid with `n` points per axis on `[lo, hi]`.
    pub fn real_box(lo: &[f64], hi: &[f64], n: usize) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidInput("grid bounds must be nonempty and matching".into()));
        }
        if n < 2 {
            return Err(Error::InvalidInput("grid needs at least 2 points per axis".into()));
        }
        let axes: Vec<Vec<f64>> = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
            .collect();
        Ok(Self::tensor(&axes, |p| p.iter().map(|&v| Complex64::new(v, 0.0)).collect()))
    }

    /// Polar grid `z = ρ e^{iθ}` mapped to conjugate-pair coordinates `(z, z̄)`.
    pub fn conjugate_disk(rho_max: f64, n_rho: usize, n_theta: usize) -> Result<Self> {
        if !(rho_max > 0.0) || n_rho < 2 || n_theta < 2 {
            return Err(Error::InvalidInput("disk grid needs positive radius and ≥2 points".into()));
        }
        let rho: Vec<f64> = (0..n_rho).map(|i| rho_max * i as f64 / (n_rho - 1) as f64).collect();
        let theta: Vec<f64> = (0..n_theta).map(|i| 2.0 * PI * i as f64 / n_theta as f64).collect();
        Ok(Self::tensor(&[rho, theta], |p| {
            let z = Complex64::from_polar(p[0], p[1]);
            vec![z, z.conj()]
        }))
    }

    fn tensor(axes: &[Vec<f64>], map: impl Fn(&[f64]) -> Vec<Complex64>) -> Self {
        let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        let total: usize = shape.iter().product();
        let mut points = Vec::with_capacity(total);
        let mut idx = vec![0usize; axes.len()];
        for _ in 0..total {
            let p: Vec<f64> = idx.iter().enumerate().map(|(k, &i)| axes[k][i]).collect();
            points.push(map(&p));
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < shape[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        EvaluationGrid { shape, points }
    }

    /// Flat indices of forward neighbors along each axis.
    fn forward_neighbors(&self, flat: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stride = 1;
        for k in (0..self.shape.len()).rev() {
            let i = (flat / stride) % self.shape[k];
            if i + 1 < self.shape[k] {
                out.push(flat + stride);
            }
            stride *= self.shape[k];
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanReason {
    BelowFloor,
    SignChange,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlaggedPoint {
    /// Index of the denominator (0 when shared).
    pub denominator: usize,
    pub index: usize,
    pub point: Vec<Complex64>,
    pub value: Complex64,
    pub reason: ScanReason,
}

/// Grid points where a denominator is below `floor` in modulus or changes
/// the sign of its real part towards an axis neighbor (the smaller-modulus
/// end of the pair is flagged). An empty result certifies the grid only.
pub fn denominator_zero_scan(r: &RationalMap, grid: &EvaluationGrid, floor: f64) -> Result<Vec<FlaggedPoint>> {
    let mut out = Vec::new();
    for (k, den) in r.denominators().iter().enumerate() {
        let values: Vec<Complex64> = grid
            .points
            .iter()
            .map(|p| den.evaluate(p).map(|v| v[0]))
            .collect::<Result<_>>()?;
        let mut flagged = vec![None; values.len()];
        for (i, v) in values.iter().enumerate() {
            if v.norm() < floor {
                flagged[i] = Some(ScanReason::BelowFloor);
            }
        }
        for i in 0..values.len() {
            for j in grid.forward_neighbors(i) {
                let (a, b) = (values[i].re, values[j].re);
                if a * b < 0.0 {
                    let pick = if values[i].norm() <= values[j].norm() { i } else { j };
                    flagged[pick].get_or_insert(ScanReason::SignChange);
                }
            }
        }
        for (i, reason) in flagged.into_iter().enumerate() {
            if let Some(reason) = reason {
                out.push(FlaggedPoint {
                    denominator: k,
                    index: i,
                    point: grid.points[i].clone(),
                    value: values[i],
                    reason,
                });
            }
        }
    }
    Ok(out)
}
