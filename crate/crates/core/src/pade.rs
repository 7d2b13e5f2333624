//! Univariate and homogeneous multivariate Padé approximants.
//!
//! The univariate solver follows the robust SVD approach: the denominator is a
//! null vector of the Toeplitz block of the matching conditions, the degrees
//! are lowered whenever that block is numerically rank deficient, and the
//! numerator follows from the convolution conditions. The multivariate solver
//! matches total orders `N+1..=N+M` in the least-squares sense with `b_0 = 1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{lstsq, right_singular};
use crate::series::{multiply_truncated, MultiIndex, MultiSeries};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub const DEFAULT_SVD_TOL: f64 = 1e-13;
pub const DEFAULT_POLE_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PadeOptions {
    /// Singular values below `svd_tol * s_max` count as zero.
    pub svd_tol: f64,
    /// Rescale the variable so that the coefficients are O(1) before solving.
    pub rescale: bool,
    /// One denominator for all output components.
    pub shared_denominator: bool,
}

impl Default for PadeOptions {
    fn default() -> Self {
        PadeOptions {
            svd_tol: DEFAULT_SVD_TOL,
            rescale: true,
            shared_denominator: false,
        }
    }
}

/// Diagnostics attached to a constructed approximant.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PadeFlags {
    /// Per-component degrees actually returned when rank deficiency forced a
    /// lower type.
    pub reduced: Vec<Option<(u32, u32)>>,
    /// The multivariate least-squares system was rank deficient and the
    /// minimum-norm solution was taken.
    pub min_norm: bool,
    /// Relative least-squares residual of the homogeneous conditions.
    pub lattice_residual: f64,
}

/// Rational map `[N/M]` with per-component numerators over one shared or
/// per-component denominators, each normalized to `b_0 = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMap {
    dim_in: usize,
    numerators: Vec<MultiSeries>,
    denominators: Vec<MultiSeries>,
    pub n: u32,
    pub m: u32,
    pub flags: PadeFlags,
}

impl RationalMap {
    /// Build from explicit coefficient tables. `denominators` has length one
    /// (shared) or one per numerator. Denominators are normalized to `b_0 = 1`.
    pub fn new(numerators: Vec<MultiSeries>, denominators: Vec<MultiSeries>) -> Result<Self> {
        let dim_in = numerators
            .first()
            .ok_or_else(|| Error::InvalidInput("rational map needs a numerator".into()))?
            .dim_in();
        if denominators.len() != 1 && denominators.len() != numerators.len() {
            return Err(Error::DimensionMismatch {
                what: "denominator count",
                expected: numerators.len(),
                got: denominators.len(),
            });
        }
        for s in numerators.iter().chain(&denominators) {
            if s.dim_in() != dim_in {
                return Err(Error::DimensionMismatch {
                    what: "rational map inputs",
                    expected: dim_in,
                    got: s.dim_in(),
                });
            }
            if s.dim_out() != 1 {
                return Err(Error::InvalidInput("rational map parts must be scalar series".into()));
            }
        }
        let mut dens = Vec::with_capacity(denominators.len());
        for d in denominators {
            let b0 = d.constant_term()[0];
            if b0 == ZERO {
                return Err(Error::InvalidInput("denominator has zero constant term".into()));
            }
            dens.push(if b0 == ONE { d } else { d.scale(ONE / b0) });
        }
        let nums: Vec<MultiSeries> = if dens.len() == numerators.len() {
            numerators
                .into_iter()
                .zip(&dens)
                .map(|(a, _)| a)
                .collect()
        } else {
            numerators
        };
        let n = nums.iter().map(|s| s.order()).max().unwrap_or(0);
        let m = dens.iter().map(|s| s.order()).max().unwrap_or(0);
        Ok(RationalMap {
            dim_in,
            numerators: nums,
            denominators: dens,
            n,
            m,
            flags: PadeFlags::default(),
        })
    }

    /// Polynomial map viewed as `[N/0]`.
    pub fn from_polynomial(poly: &MultiSeries) -> Self {
        let nums: Vec<MultiSeries> = (0..poly.dim_out()).map(|i| poly.component(i)).collect();
        let den = MultiSeries::constant(poly.dim_in(), 0, ONE);
        RationalMap {
            dim_in: poly.dim_in(),
            numerators: nums,
            denominators: vec![den],
            n: poly.order(),
            m: 0,
            flags: PadeFlags::default(),
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_shared(&self) -> bool {
        self.denominators.len() == 1
    }

    pub fn numerator(&self, i: usize) -> &MultiSeries {
        &self.numerators[i]
    }

    pub fn numerators(&self) -> &[MultiSeries] {
        &self.numerators
    }

    pub fn denominators(&self) -> &[MultiSeries] {
        &self.denominators
    }

    pub fn denominator(&self, i: usize) -> &MultiSeries {
        if self.is_shared() {
            &self.denominators[0]
        } else {
            &self.denominators[i]
        }
    }

    /// Componentwise quotient; a denominator with modulus below `floor` is a
    /// pole-proximity error.
    pub fn evaluate(&self, point: &[Complex64], floor: f64) -> Result<Vec<Complex64>> {
        let dens: Vec<Complex64> = self
            .denominators
            .iter()
            .map(|d| d.evaluate(point).map(|v| v[0]))
            .collect::<Result<_>>()?;
        for &b in &dens {
            if !(b.norm() >= floor) {
                return Err(Error::PoleProximity {
                    point: point.to_vec(),
                    denominator: b,
                });
            }
        }
        (0..self.dim_out())
            .map(|i| {
                let a = self.numerators[i].evaluate(point)?[0];
                let b = if self.is_shared() { dens[0] } else { dens[i] };
                Ok(a / b)
            })
            .collect()
    }

    pub fn evaluate_real(&self, point: &[f64], floor: f64) -> Result<Vec<Complex64>> {
        let p: Vec<Complex64> = point.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.evaluate(&p, floor)
    }

    /// Value of the denominator of component `i` at a point.
    pub fn denominator_value(&self, i: usize, point: &[Complex64]) -> Result<Complex64> {
        Ok(self.denominator(i).evaluate(point)?[0])
    }

    /// Number of free coefficients, excluding numerator constant terms and the
    /// normalized `b_0` (the convention used for vector-field fits).
    pub fn parameter_count(&self) -> usize {
        let zero = MultiIndex::zero(self.dim_in);
        let nums: usize = self
            .numerators
            .iter()
            .map(|a| MultiIndex::count_up_to(self.dim_in, a.order()) - 1)
            .sum();
        let dens: usize = self
            .denominators
            .iter()
            .map(|b| MultiIndex::count_up_to(self.dim_in, b.order()) - 1)
            .sum();
        let _ = zero;
        nums + dens
    }
}

/// Taylor series of a rational map through `order`, via the truncated
/// reciprocal of each denominator.
pub fn taylor_of_rational(r: &RationalMap, order: u32) -> Result<MultiSeries> {
    let recips: Vec<MultiSeries> = r
        .denominators
        .iter()
        .map(|b| reciprocal(b, order))
        .collect::<Result<_>>()?;
    let parts: Vec<MultiSeries> = (0..r.dim_out())
        .map(|i| {
            let rec = if r.is_shared() { &recips[0] } else { &recips[i] };
            multiply_truncated(&r.numerators[i].with_order(order), rec, order)
        })
        .collect::<Result<_>>()?;
    MultiSeries::from_components(&parts)
}

/// Truncated reciprocal of a scalar series with unit constant term.
pub fn reciprocal(b: &MultiSeries, order: u32) -> Result<MultiSeries> {
    let b0 = b.constant_term()[0];
    if b0 == ZERO {
        return Err(Error::InvalidInput("reciprocal of a series with zero constant term".into()));
    }
    let d = b.dim_in();
    let mut out = MultiSeries::zeros(d, 1, order);
    let inv0 = ONE / b0;
    out.add_term(&MultiIndex::zero(d), &[inv0]);
    let b_terms: Vec<(MultiIndex, Complex64)> = b
        .iter()
        .filter(|(k, _)| k.order() > 0 && k.order() <= order)
        .map(|(k, v)| (k.clone(), v[0]))
        .collect();
    for k in MultiIndex::all_up_to(d, order).into_iter().skip(1) {
        let mut acc = ZERO;
        for (l, bl) in &b_terms {
            if let Some(rest) = k.checked_sub(l) {
                acc += bl * out.coeff(&rest, 0);
            }
        }
        if acc != ZERO {
            out.add_term(&k, &[-acc * inv0]);
        }
    }
    Ok(out)
}

/// Geometric scale `r` such that `|c_n| r^n` is roughly level, fitted over the
/// nonzero orders of a coefficient profile.
pub(crate) fn growth_scale(profile: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &c)| c > 0.0 && c.is_finite())
        .map(|(n, &c)| (n as f64, c.ln()))
        .collect();
    if pts.len() < 2 {
        return 1.0;
    }
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let r = (-slope).exp();
    if r.is_finite() && r > 0.0 {
        r
    } else {
        1.0
    }
}

/// Robust univariate `[N/M]` approximant of each output component.
pub fn pade_univariate(series: &MultiSeries, n: u32, m: u32, opts: &PadeOptions) -> Result<RationalMap> {
    if series.dim_in() != 1 {
        return Err(Error::DimensionMismatch {
            what: "univariate Padé input",
            expected: 1,
            got: series.dim_in(),
        });
    }
    if series.order() < n + m {
        return Err(Error::InsufficientOrder {
            required: n + m,
            available: series.order(),
        });
    }
    let mut nums = Vec::new();
    let mut dens = Vec::new();
    let mut reduced = Vec::new();
    for i in 0..series.dim_out() {
        let c = series.component(i).with_order(n + m).univariate_coeffs();
        let (a, b) = robust_pade_coeffs(&c, n as usize, m as usize, opts);
        let (na, nb) = (a.len().saturating_sub(1) as u32, b.len() - 1);
        reduced.push(if na < n || (nb as u32) < m {
            Some((na, nb as u32))
        } else {
            None
        });
        let mut num = MultiSeries::univariate(if a.is_empty() { &[ZERO] } else { &a });
        num = num.with_order(n);
        nums.push(num);
        dens.push(MultiSeries::univariate(&b).with_order(m));
    }
    Ok(RationalMap {
        dim_in: 1,
        numerators: nums,
        denominators: dens,
        n,
        m,
        flags: PadeFlags {
            reduced,
            min_norm: false,
            lattice_residual: 0.0,
        },
    })
}

/// Coefficients `(a, b)` of the robust approximant with `b_0 = 1`; `a` may be
/// empty for the zero function.
fn robust_pade_coeffs(c: &[Complex64], n: usize, m: usize, opts: &PadeOptions) -> (Vec<Complex64>, Vec<Complex64>) {
    let profile: Vec<f64> = c.iter().map(|x| x.norm()).collect();
    let scale = if opts.rescale { growth_scale(&profile) } else { 1.0 };
    let cs: Vec<Complex64> = c
        .iter()
        .enumerate()
        .map(|(k, x)| x * scale.powi(k as i32))
        .collect();
    let cnorm = cs.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let cmax = cs.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if cmax == 0.0 {
        return (vec![], vec![ONE]);
    }
    if cs[..=n.min(cs.len() - 1)].iter().all(|x| x.norm() <= opts.svd_tol * cmax)
        && cs.iter().all(|x| x.norm() <= opts.svd_tol * cmax)
    {
        return (vec![], vec![ONE]);
    }
    let coef = |k: isize| -> Complex64 {
        if k < 0 || k as usize >= cs.len() {
            ZERO
        } else {
            cs[k as usize]
        }
    };

    let (mut n, mut m) = (n, m);
    // rank reduction of the homogeneous block
    let block = loop {
        if m == 0 {
            break None;
        }
        let mut mat = DMatrix::<Complex64>::zeros(m, m + 1);
        for r in 0..m {
            let row = n + 1 + r;
            for j in 0..=m {
                mat[(r, j)] = coef(row as isize - j as isize);
            }
        }
        let (s, _) = right_singular(&mat);
        let smax = s.first().cloned().unwrap_or(0.0);
        let thresh = opts.svd_tol * smax.max(cnorm);
        let rho = s.iter().take(m).filter(|&&v| v > thresh).count();
        if rho == m {
            break Some(mat);
        }
        n = n.saturating_sub(m - rho);
        m = rho;
    };

    let mut b: Vec<Complex64> = match block {
        None => vec![ONE],
        Some(mat) => {
            let (_, v) = right_singular(&mat);
            let b0: Vec<Complex64> = v.column(m).iter().cloned().collect();
            // reweighted solve sharpens the null vector
            let w: Vec<f64> = b0.iter().map(|x| x.norm() + f64::EPSILON.sqrt()).collect();
            let mut md = mat.clone();
            for (j, wj) in w.iter().enumerate() {
                md.column_mut(j).scale_mut(*wj);
            }
            let (_, vd) = right_singular(&md);
            let y = vd.column(m);
            let mut b: Vec<Complex64> = (0..=m).map(|j| y[j] * w[j]).collect();
            let nb = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            for x in b.iter_mut() {
                *x /= nb;
            }
            b
        }
    };

    let mut a: Vec<Complex64> = (0..=n)
        .map(|k| (0..=k.min(b.len() - 1)).map(|j| coef((k - j) as isize) * b[j]).sum())
        .collect();

    if b.len() > 1 {
        let tol = opts.svd_tol.max(1e-14);
        let lam = b.iter().position(|x| x.norm() > tol).unwrap_or(0);
        b.drain(..lam);
        let drop = lam.min(a.len());
        a.drain(..drop);
        if let Some(last) = b.iter().rposition(|x| x.norm() > tol) {
            b.truncate(last + 1);
        }
    }
    let ts = opts.svd_tol * cnorm;
    match a.iter().rposition(|x| x.norm() > ts) {
        Some(last) => a.truncate(last + 1),
        None => a.clear(),
    }
    let b0 = b[0];
    for x in a.iter_mut() {
        *x /= b0;
    }
    for x in b.iter_mut() {
        *x /= b0;
    }
    b[0] = ONE;
    for (k, x) in a.iter_mut().enumerate() {
        *x /= scale.powi(k as i32);
    }
    for (k, x) in b.iter_mut().enumerate() {
        *x /= scale.powi(k as i32);
    }
    (a, b)
}

/// Homogeneous multivariate `[N/M]` approximant. Output components get
/// independent denominators unless `opts.shared_denominator` is set.
pub fn pade_multivariate(series: &MultiSeries, n: u32, m: u32, opts: &PadeOptions) -> Result<RationalMap> {
    if series.order() < n + m {
        return Err(Error::InsufficientOrder {
            required: n + m,
            available: series.order(),
        });
    }
    let d = series.dim_in();
    let scale = if opts.rescale {
        growth_scale(&series.max_abs_by_order())
    } else {
        1.0
    };
    let scaled = series.with_order(n + m).map_coeffs(|k, v| {
        let f = scale.powi(k.order() as i32);
        v.iter().map(|x| x * f).collect()
    });
    let comps: Vec<MultiSeries> = (0..series.dim_out()).map(|i| scaled.component(i)).collect();

    let den_idx: Vec<MultiIndex> = MultiIndex::all_up_to(d, m).into_iter().skip(1).collect();
    let eq_idx: Vec<MultiIndex> = (n + 1..=n + m)
        .flat_map(|k| MultiIndex::all_of_order(d, k))
        .collect();

    let groups: Vec<Vec<usize>> = if opts.shared_denominator {
        vec![(0..comps.len()).collect()]
    } else {
        (0..comps.len()).map(|i| vec![i]).collect()
    };

    let mut dens = Vec::new();
    let mut min_norm = false;
    let mut worst_residual: f64 = 0.0;
    for group in &groups {
        let rows = eq_idx.len() * group.len();
        let mut mat = DMatrix::<Complex64>::zeros(rows, den_idx.len());
        let mut rhs = DVector::<Complex64>::zeros(rows);
        for (gi, &comp) in group.iter().enumerate() {
            let c = &comps[comp];
            for (ei, k) in eq_idx.iter().enumerate() {
                let row = gi * eq_idx.len() + ei;
                rhs[row] = -c.coeff(k, 0);
                for (j, l) in den_idx.iter().enumerate() {
                    if let Some(rest) = k.checked_sub(l) {
                        mat[(row, j)] = c.coeff(&rest, 0);
                    }
                }
            }
        }
        let mut b = MultiSeries::constant(d, m, ONE);
        if !den_idx.is_empty() && rows > 0 {
            let sol = lstsq(&mat, &rhs, opts.svd_tol);
            if sol.rank < den_idx.len() {
                min_norm = true;
            }
            let res = (&mat * &sol.x - &rhs).norm();
            let rel = res / rhs.norm().max(f64::MIN_POSITIVE);
            if rhs.norm() > 0.0 {
                worst_residual = worst_residual.max(rel);
            }
            for (j, l) in den_idx.iter().enumerate() {
                b.add_term(l, &[sol.x[j]]);
            }
        }
        dens.push(b);
    }

    let mut nums = Vec::new();
    for (i, c) in comps.iter().enumerate() {
        let b = if opts.shared_denominator { &dens[0] } else { &dens[i] };
        let prod = multiply_truncated(c, b, n)?;
        nums.push(prod.with_order(n));
    }

    let unscale = |s: &MultiSeries| {
        s.map_coeffs(|k, v| {
            let f = scale.powi(-(k.order() as i32));
            v.iter().map(|x| x * f).collect()
        })
    };
    let nums: Vec<MultiSeries> = nums.iter().map(unscale).collect();
    let dens: Vec<MultiSeries> = dens.iter().map(unscale).collect();
    let reduced = vec![None; nums.len()];
    Ok(RationalMap {
        dim_in: d,
        numerators: nums,
        denominators: dens,
        n,
        m,
        flags: PadeFlags {
            reduced,
            min_norm,
            lattice_residual: worst_residual,
        },
    })
}

/// Dispatch on input dimension.
pub fn pade(series: &MultiSeries, n: u32, m: u32, opts: &PadeOptions) -> Result<RationalMap> {
    if series.dim_in() == 1 && !opts.shared_denominator {
        pade_univariate(series, n, m, opts)
    } else {
        pade_multivariate(series, n, m, opts)
    }
}

/// Largest relative mismatch between the input coefficients and the Taylor
/// re-expansion of the approximant, through total order `order`.
pub fn match_error(series: &MultiSeries, r: &RationalMap, order: u32) -> Result<f64> {
    let t = taylor_of_rational(r, order)?;
    let mut scale: f64 = 0.0;
    let mut err: f64 = 0.0;
    for k in MultiIndex::all_up_to(series.dim_in(), order) {
        for i in 0..series.dim_out() {
            let c = series.coeff(&k, i);
            scale = scale.max(c.norm());
            err = err.max((c - t.coeff(&k, i)).norm());
        }
    }
    Ok(if scale > 0.0 { err / scale } else { err })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn euler(order: usize) -> MultiSeries {
        let mut c = vec![0.0];
        let mut fact = 1.0;
        for n in 1..=order {
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            c.push(sign * fact);
            fact *= n as f64;
        }
        MultiSeries::univariate_real(&c)
    }

    fn coeffs(s: &MultiSeries) -> Vec<f64> {
        s.univariate_coeffs().iter().map(|c| c.re).collect()
    }

    #[test]
    fn euler_one_one() {
        let r = pade_univariate(&euler(2), 1, 1, &PadeOptions::default()).unwrap();
        let a = coeffs(r.numerator(0));
        let b = coeffs(r.denominator(0));
        assert!(a[0].abs() < 1e-12 && (a[1] - 1.0).abs() < 1e-12);
        assert!((b[0] - 1.0).abs() < 1e-15 && (b[1] - 1.0).abs() < 1e-12);
        let v = r.evaluate_real(&[1.0], DEFAULT_POLE_FLOOR).unwrap()[0];
        assert!((v.re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn euler_three_three() {
        let r = pade_univariate(&euler(6), 3, 3, &PadeOptions::default()).unwrap();
        let a = coeffs(r.numerator(0));
        let b = coeffs(r.denominator(0));
        let want_a = [0.0, 1.0, 8.0, 11.0];
        let want_b = [1.0, 9.0, 18.0, 6.0];
        for k in 0..4 {
            assert!((a[k] - want_a[k]).abs() < 1e-9, "a{k} = {}", a[k]);
            assert!((b[k] - want_b[k]).abs() < 1e-9, "b{k} = {}", b[k]);
        }
        let v = r.evaluate_real(&[1.0], DEFAULT_POLE_FLOOR).unwrap()[0];
        assert!((v.re - 20.0 / 34.0).abs() < 1e-12);
        let t = taylor_of_rational(&r, 6).unwrap();
        for (x, y) in coeffs(&t).iter().zip(coeffs(&euler(6))) {
            assert!((x - y).abs() < 1e-8 * y.abs().max(1.0));
        }
    }

    #[test]
    fn imaginary_pole_pair_is_exact() {
        let s = MultiSeries::univariate_real(&[0.0, 1.0, 0.0, -1.0]);
        let r = pade_univariate(&s, 1, 2, &PadeOptions::default()).unwrap();
        for i in 0..=100 {
            let x = -5.0 + 0.1 * i as f64;
            let v = r.evaluate_real(&[x], DEFAULT_POLE_FLOOR).unwrap()[0].re;
            assert!((v - x / (1.0 + x * x)).abs() < 1e-12);
        }
        let t = taylor_of_rational(&r, 5).unwrap();
        for (x, y) in coeffs(&t).iter().zip([0.0, 1.0, 0.0, -1.0, 0.0, 1.0]) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_input_lowers_degree() {
        // x/(1+x) fitted as [3/3]: the Toeplitz block has rank one
        let s = MultiSeries::univariate_real(&[0.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0]);
        let r = pade_univariate(&s, 3, 3, &PadeOptions::default()).unwrap();
        assert_eq!(r.flags.reduced[0], Some((1, 1)));
        let v = r.evaluate_real(&[2.0], DEFAULT_POLE_FLOOR).unwrap()[0].re;
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_and_polynomial_inputs() {
        let z = MultiSeries::univariate_real(&[0.0; 5]);
        let r = pade_univariate(&z, 2, 2, &PadeOptions::default()).unwrap();
        assert!(r.numerator(0).is_zero());
        let p = MultiSeries::univariate_real(&[1.0, 2.0, 3.0]);
        let r = pade_univariate(&p, 2, 0, &PadeOptions::default()).unwrap();
        assert_eq!(coeffs(r.numerator(0)), vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            pade_univariate(&p, 2, 2, &PadeOptions::default()),
            Err(Error::InsufficientOrder { .. })
        ));
    }

    #[test]
    fn pole_floor_error() {
        let s = MultiSeries::univariate_real(&[0.0, 1.0, 1.0]);
        let r = pade_univariate(&s, 1, 1, &PadeOptions::default()).unwrap();
        match r.evaluate_real(&[1.0], DEFAULT_POLE_FLOOR) {
            Err(Error::PoleProximity { denominator, .. }) => assert!(denominator.norm() < 1e-12),
            other => panic!("expected pole proximity, got {other:?}"),
        }
    }

    #[test]
    fn bivariate_geometric() {
        // 1/(1 - z1 - z2)
        let mut s = MultiSeries::zeros(2, 1, 4);
        for k in MultiIndex::all_up_to(2, 4) {
            let e = k.exponents();
            let binom = (1..=e[1]).fold(1.0, |acc, j| acc * (e[0] + j) as f64 / j as f64);
            s.add_term(&k, &[re(binom)]);
        }
        let r = pade_multivariate(&s, 0, 1, &PadeOptions::default()).unwrap();
        let b = r.denominator(0);
        assert!((b.coeff(&MultiIndex::new(vec![1, 0]), 0) - re(-1.0)).norm() < 1e-12);
        assert!((b.coeff(&MultiIndex::new(vec![0, 1]), 0) - re(-1.0)).norm() < 1e-12);
        assert!((r.numerator(0).coeff(&MultiIndex::zero(2), 0) - ONE).norm() < 1e-12);
    }

    #[test]
    fn bivariate_exact_rational() {
        // (z1 + z2)/(1 + z1 z2)
        let mut num = MultiSeries::zeros(2, 1, 1);
        num.add_term(&MultiIndex::new(vec![1, 0]), &[ONE]);
        num.add_term(&MultiIndex::new(vec![0, 1]), &[ONE]);
        let mut den = MultiSeries::constant(2, 2, ONE);
        den.add_term(&MultiIndex::new(vec![1, 1]), &[ONE]);
        let exact = RationalMap::new(vec![num], vec![den]).unwrap();
        let s = taylor_of_rational(&exact, 5).unwrap();
        let r = pade_multivariate(&s, 1, 2, &PadeOptions::default()).unwrap();
        let b = r.denominator(0);
        for k in MultiIndex::all_up_to(2, 2) {
            let want = if k.exponents() == [1, 1] || k.order() == 0 { ONE } else { ZERO };
            assert!((b.coeff(&k, 0) - want).norm() < 1e-12, "b{k:?}");
        }
        assert!(match_error(&s, &r, 3).unwrap() < 1e-12);
    }

    #[test]
    fn taylor_polynomial_when_no_denominator() {
        let mut s = MultiSeries::zeros(2, 1, 3);
        s.add_term(&MultiIndex::new(vec![1, 2]), &[re(2.0)]);
        s.add_term(&MultiIndex::new(vec![1, 0]), &[re(-1.0)]);
        let r = pade_multivariate(&s, 3, 0, &PadeOptions::default()).unwrap();
        assert_eq!(r.numerator(0), &s);
        assert_eq!(r.denominator(0).len(), 1);
    }

    #[test]
    fn reciprocal_geometric() {
        let b = MultiSeries::univariate_real(&[1.0, 1.0]);
        let r = reciprocal(&b, 4).unwrap();
        assert_eq!(coeffs(&r), vec![1.0, -1.0, 1.0, -1.0, 1.0]);
    }
}
