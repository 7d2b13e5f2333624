//! Dense linear-algebra helpers on top of nalgebra: SVD least squares, null
//! vectors, and a Lawson–Hanson NNLS used for inequality-constrained least
//! squares (LSI → LDP → NNLS).

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Result of an SVD least-squares solve.
#[derive(Clone, Debug)]
pub struct LstsqSolution<T: ComplexField> {
    pub x: DVector<T>,
    pub rank: usize,
    /// Singular values in descending order.
    pub singular_values: Vec<f64>,
}

impl<T: ComplexField<RealField = f64>> LstsqSolution<T> {
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.singular_values.len()
    }
}

/// Thin singular value decomposition `a = u diag(s) vᴴ` with `s` descending.
#[derive(Clone, Debug)]
pub struct Svd<T: ComplexField> {
    pub u: DMatrix<T>,
    pub s: Vec<f64>,
    pub v: DMatrix<T>,
}

/// SVD through nalgebra, checked by reconstruction. nalgebra can lose the
/// factorization on exactly rank-deficient inputs; those fall back to
/// one-sided Jacobi.
pub fn svd<T>(a: &DMatrix<T>) -> Svd<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let (m, n) = a.shape();
    if m < n {
        let t = svd(&a.adjoint());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    if let Some(dec) = bidiagonal_svd(a) {
        let mut us = dec.u.clone();
        for (j, &sj) in dec.s.iter().enumerate() {
            us.column_mut(j).scale_mut(sj);
        }
        let err = (us * dec.v.adjoint() - a).norm();
        if err <= 1e3 * f64::EPSILON * a.norm().max(f64::MIN_POSITIVE) * (n as f64).sqrt() {
            return dec;
        }
    }
    jacobi_svd(a)
}

fn bidiagonal_svd<T>(a: &DMatrix<T>) -> Option<Svd<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let dec = a.clone().try_svd(true, true, f64::EPSILON, 0)?;
    let (u, v_t) = (dec.u?, dec.v_t?);
    let k = dec.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        dec.singular_values[j]
            .partial_cmp(&dec.singular_values[i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let mut us = DMatrix::<T>::zeros(u.nrows(), k);
    let mut vs = DMatrix::<T>::zeros(v_t.ncols(), k);
    let mut s = Vec::with_capacity(k);
    for (c, &i) in order.iter().enumerate() {
        s.push(dec.singular_values[i]);
        us.set_column(c, &u.column(i));
        vs.set_column(c, &v_t.row(i).adjoint());
    }
    Some(Svd { u: us, s, v: vs })
}

/// One-sided (Hestenes) Jacobi SVD for `m ≥ n`.
fn jacobi_svd<T>(a: &DMatrix<T>) -> Svd<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::<T>::identity(n, n);
    let eps = f64::EPSILON;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.modulus();
                if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma.unscale(g).conjugate();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.nrows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] * phase;
                        mat[(i, p)] = xp.scale(c) - xq.scale(sn);
                        mat[(i, q)] = xp.scale(sn) + xq.scale(c);
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));
    let mut u = DMatrix::<T>::zeros(m, n);
    let mut vs = DMatrix::<T>::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (c, &j) in order.iter().enumerate() {
        s.push(norms[j]);
        if norms[j] > 0.0 {
            u.set_column(c, &w.column(j).unscale(norms[j]));
        }
        vs.set_column(c, &v.column(j));
    }
    Svd { u, s, v: vs }
}

/// Minimum-norm least-squares solution of `a x = b` through the SVD, with
/// singular values below `rcond * s_max` treated as zero.
pub fn lstsq<T>(a: &DMatrix<T>, b: &DVector<T>, rcond: f64) -> LstsqSolution<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return LstsqSolution {
            x: DVector::zeros(n),
            rank: 0,
            singular_values: vec![],
        };
    }
    let dec = svd(a);
    let cutoff = rcond * dec.s[0];
    let mut x = DVector::<T>::zeros(n);
    let mut rank = 0;
    for (i, &si) in dec.s.iter().enumerate() {
        if si <= cutoff || si == 0.0 {
            continue;
        }
        rank += 1;
        let coef = dec.u.column(i).dotc(b).unscale(si);
        x += dec.v.column(i) * coef;
    }
    LstsqSolution {
        x,
        rank,
        singular_values: dec.s,
    }
}

/// Singular values (descending) and right singular vectors (as columns, in the
/// same order). Wide inputs are padded with zero rows so that the full right
/// basis, including null vectors, is returned.
pub fn right_singular<T>(a: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>)
where
    T: ComplexField<RealField = f64> + Copy,
{
    let (m, n) = a.shape();
    let padded = if m < n {
        let mut p = DMatrix::<T>::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let dec = svd(&padded);
    (dec.s, dec.v)
}

/// 2-norm condition number.
pub fn condition_number<T>(a: &DMatrix<T>) -> f64
where
    T: ComplexField<RealField = f64> + Copy,
{
    let s = svd(a).s;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

pub fn to_complex(a: &DMatrix<f64>) -> CMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

/// Non-negative least squares `min ||E u - f||, u >= 0` (Lawson–Hanson).
pub fn nnls(e: &DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    let (_, n) = e.shape();
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let tol = 10.0 * f64::EPSILON * e.norm().max(1.0) * (n.max(1) as f64);
    let max_outer = 3 * n + 30;
    for _ in 0..max_outer {
        let w = e.transpose() * (f - e * &x);
        let cand = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap());
        let j = match cand {
            Some(j) if w[j] > tol => j,
            _ => break,
        };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = e.select_columns(&idx);
            let z_sub = lstsq(&sub, f, 1e-14).x;
            if z_sub.iter().all(|&v| v > 0.0) {
                for (k, &col) in idx.iter().enumerate() {
                    x[col] = z_sub[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &col) in idx.iter().enumerate() {
                if z_sub[k] <= 0.0 {
                    let denom = x[col] - z_sub[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[col] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (k, &col) in idx.iter().enumerate() {
                x[col] += alpha * (z_sub[k] - x[col]);
            }
            for &col in &idx {
                if x[col] <= tol {
                    x[col] = 0.0;
                    passive[col] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

/// Least distance programming `min ||z|| s.t. G z >= h`.
///
/// Infeasibility returns [`Error::Infeasible`] carrying the NNLS dual vector
/// `u >= 0`, for which `G^T u ≈ 0` while `h^T u > 0`.
pub fn ldp(g: &DMatrix<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, n) = g.shape();
    if m == 0 {
        return Ok(DVector::zeros(n));
    }
    let mut e = DMatrix::<f64>::zeros(n + 1, m);
    e.view_mut((0, 0), (n, m)).copy_from(&g.transpose());
    for i in 0..m {
        e[(n, i)] = h[i];
    }
    let mut f = DVector::<f64>::zeros(n + 1);
    f[n] = 1.0;
    let u = nnls(&e, &f);
    let r = &e * &u - &f;
    if r.norm() < 1e-12 || r[n].abs() < 1e-14 {
        return Err(Error::Infeasible {
            certificate_norm: u.norm(),
            certificate: u.iter().cloned().collect(),
        });
    }
    Ok(DVector::from_iterator(n, (0..n).map(|i| -r[i] / r[n])))
}

/// Inequality-constrained least squares `min ||E x - f|| s.t. G x >= h`.
///
/// `E` must have full column rank; columns are rescaled internally.
pub fn lsi(
    e: &DMatrix<f64>,
    f: &DVector<f64>,
    g: &DMatrix<f64>,
    h: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = e.ncols();
    // column scaling keeps the SVD well conditioned when monomials differ in size
    let scale: Vec<f64> = (0..n)
        .map(|j| {
            let c = e.column(j).norm();
            if c > 0.0 {
                c
            } else {
                1.0
            }
        })
        .collect();
    let mut es = e.clone();
    let mut gs = g.clone();
    for j in 0..n {
        es.column_mut(j).unscale_mut(scale[j]);
        gs.column_mut(j).unscale_mut(scale[j]);
    }
    let Svd { u, s, v } = svd(&es);
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if s.len() < n || s.iter().any(|&v| v <= 1e-13 * smax) {
        return Err(Error::RankDeficient(
            "least-squares matrix of the constrained fit is rank deficient".into(),
        ));
    }
    // x_s = V S^{-1} (z + U^T f)
    let utf = u.transpose() * f;
    let mut vsinv = v;
    for k in 0..n {
        vsinv.column_mut(k).unscale_mut(s[k]);
    }
    let gt = &gs * &vsinv;
    let ht = h - &gt * &utf;
    let z = ldp(&gt, &ht)?;
    let xs = &vsinv * (z + utf);
    Ok(DVector::from_iterator(n, (0..n).map(|j| xs[j] / scale[j])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstsq_overdetermined() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let sol = lstsq(&a, &b, 1e-14);
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && (sol.x[1] - 2.0).abs() < 1e-12);
        assert_eq!(sol.rank, 2);
    }

    #[test]
    fn lstsq_min_norm() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0]);
        let sol = lstsq(&a, &b, 1e-14);
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
    }

    fn reconstruction_error(a: &DMatrix<Complex64>, dec: &Svd<Complex64>) -> f64 {
        let mut us = dec.u.clone();
        for (j, &sj) in dec.s.iter().enumerate() {
            us.column_mut(j).scale_mut(sj);
        }
        (us * dec.v.adjoint() - a).norm()
    }

    #[test]
    fn jacobi_svd_of_rank_deficient_complex_matrix() {
        let b = DMatrix::from_fn(19, 3, |i, j| Complex64::new(((i * 7 + j * 3) % 11) as f64 - 5.0, (i + 2 * j) as f64 * 0.1));
        let c = DMatrix::from_fn(3, 5, |i, j| Complex64::new((i as f64 + 1.0) / (j as f64 + 2.0), 0.0));
        let a = &b * &c;
        for dec in [jacobi_svd(&a), svd(&a)] {
            assert!(reconstruction_error(&a, &dec) < 1e-12 * a.norm());
            assert!(dec.s.windows(2).all(|w| w[0] >= w[1]));
            assert!(dec.s[3] < 1e-12 * dec.s[0]);
            let vhv = dec.v.adjoint() * &dec.v;
            assert!((vhv - DMatrix::identity(5, 5)).norm() < 1e-12);
        }
    }

    #[test]
    fn wide_svd_goes_through_the_adjoint() {
        let a = DMatrix::from_fn(2, 4, |i, j| Complex64::new((i + j) as f64, (i * j) as f64));
        let dec = svd(&a);
        assert_eq!((dec.u.shape(), dec.v.shape()), ((2, 2), (4, 2)));
        assert!(reconstruction_error(&a, &dec) < 1e-12);
    }

    #[test]
    fn null_vector_of_singular_matrix() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        let (s, v) = right_singular(&a);
        assert!(s[2] < 1e-14);
        let x = v.column(2).into_owned();
        assert!((&a * x).norm() < 1e-14);
    }

    #[test]
    fn nnls_known_solution() {
        let e = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let f = DVector::from_vec(vec![1.0, -2.0, 0.0]);
        let x = nnls(&e, &f);
        assert!(x.iter().all(|&v| v >= 0.0));
        assert!((x[0] - 0.5).abs() < 1e-12 && x[1].abs() < 1e-14);
    }

    #[test]
    fn lsi_active_and_inactive() {
        // min (x-1)^2 + (y-2)^2 with x + y <= 1  ->  (0, 1)
        let e = DMatrix::<f64>::identity(2, 2);
        let f = DVector::from_vec(vec![1.0, 2.0]);
        let g = DMatrix::from_row_slice(1, 2, &[-1.0, -1.0]);
        let h = DVector::from_vec(vec![-1.0]);
        let x = lsi(&e, &f, &g, &h).unwrap();
        assert!((x[0] - 0.0).abs() < 1e-10 && (x[1] - 1.0).abs() < 1e-10);
        // loose constraint leaves the unconstrained solution
        let h = DVector::from_vec(vec![-10.0]);
        let x = lsi(&e, &f, &g, &h).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-10 && (x[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn ldp_infeasible_certificate() {
        // x >= 1 and -x >= 0 cannot both hold
        let g = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let h = DVector::from_vec(vec![1.0, 0.0]);
        match ldp(&g, &h) {
            Err(Error::Infeasible { certificate, .. }) => {
                assert!(certificate.iter().all(|&u| u >= 0.0));
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }
}
