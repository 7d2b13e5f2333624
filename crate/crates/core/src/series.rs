//! Truncated multivariate power series with complex vector coefficients.
//!
//! A [`MultiSeries`] maps `d` inputs to `l` outputs and stores only the
//! nonzero coefficients, keyed by [`MultiIndex`] in graded lexicographic
//! order. Every operation truncates at an explicit total order, so products
//! and compositions never carry terms above it.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Exponent tuple `(k1, ..., kd)` of a monomial `p1^k1 ... pd^kd`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        assert!(!exponents.is_empty(), "multi-index needs at least one variable");
        MultiIndex(exponents)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex::new(vec![0; dim])
    }

    pub fn unit(dim: usize, var: usize) -> Self {
        let mut e = vec![0; dim];
        e[var] = 1;
        MultiIndex::new(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total order `|k|`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn monomial(&self, point: &[Complex64]) -> Complex64 {
        self.0
            .iter()
            .zip(point)
            .fold(ONE, |acc, (&k, z)| acc * z.powu(k))
    }

    /// All indices of total order `k` in `dim` variables, graded-lex ordered.
    pub fn all_of_order(dim: usize, k: u32) -> Vec<MultiIndex> {
        fn rec(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == dim {
                prefix.push(left);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for e in (0..=left).rev() {
                prefix.push(e);
                rec(dim, left - e, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(dim, k, &mut Vec::with_capacity(dim), &mut out);
        out
    }

    /// All indices with total order at most `n`, graded-lex ordered.
    pub fn all_up_to(dim: usize, n: u32) -> Vec<MultiIndex> {
        (0..=n).flat_map(|k| Self::all_of_order(dim, k)).collect()
    }

    /// Number of monomials of total order at most `n` in `dim` variables.
    pub fn count_up_to(dim: usize, n: u32) -> usize {
        // binomial(n + dim, dim)
        let mut c: u128 = 1;
        for i in 1..=dim as u128 {
            c = c * (n as u128 + i) / i;
        }
        c as usize
    }
}

impl Ord for MultiIndex {
    /// Graded lexicographic: lower total order first; within an order the
    /// larger leading exponent comes first, e.g. `(2,0) < (1,1) < (0,2)`.
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Truncated power series `sum_{|k| <= order} c_k p^k` with `c_k` in `C^dim_out`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiSeries {
    dim_in: usize,
    dim_out: usize,
    order: u32,
    coeffs: BTreeMap<MultiIndex, Vec<Complex64>>,
}

impl MultiSeries {
    pub fn zeros(dim_in: usize, dim_out: usize, order: u32) -> Self {
        assert!(dim_in >= 1 && dim_out >= 1, "series dimensions must be positive");
        MultiSeries {
            dim_in,
            dim_out,
            order,
            coeffs: BTreeMap::new(),
        }
    }

    /// Scalar univariate series from a dense coefficient list `c_0, c_1, ...`.
    pub fn univariate(coeffs: &[Complex64]) -> Self {
        let order = coeffs.len().saturating_sub(1) as u32;
        let mut s = MultiSeries::zeros(1, 1, order);
        for (n, c) in coeffs.iter().enumerate() {
            s.add_term(&MultiIndex::new(vec![n as u32]), &[*c]);
        }
        s
    }

    pub fn univariate_real(coeffs: &[f64]) -> Self {
        let c: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::univariate(&c)
    }

    /// Scalar constant series.
    pub fn constant(dim_in: usize, order: u32, value: Complex64) -> Self {
        let mut s = MultiSeries::zeros(dim_in, 1, order);
        s.add_term(&MultiIndex::zero(dim_in), &[value]);
        s
    }

    /// The identity map `p -> p` on `C^dim`.
    pub fn identity(dim: usize, order: u32) -> Self {
        let mut s = MultiSeries::zeros(dim, dim, order);
        for i in 0..dim {
            let mut v = vec![ZERO; dim];
            v[i] = ONE;
            s.add_term(&MultiIndex::unit(dim, i), &v);
        }
        s
    }

    /// Linear map `p -> M p` where `columns[i]` is the image of the i-th unit vector.
    pub fn linear(columns: &[Vec<Complex64>], order: u32) -> Self {
        let dim_in = columns.len();
        let dim_out = columns[0].len();
        let mut s = MultiSeries::zeros(dim_in, dim_out, order);
        for (i, col) in columns.iter().enumerate() {
            s.add_term(&MultiIndex::unit(dim_in, i), col);
        }
        s
    }

    /// Stack scalar series (same `dim_in`) into one vector-valued series.
    pub fn from_components(parts: &[MultiSeries]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("no components to stack".into()))?;
        let order = parts.iter().map(|p| p.order).min().unwrap_or(0);
        let dim_out: usize = parts.iter().map(|p| p.dim_out).sum();
        let mut out = MultiSeries::zeros(first.dim_in, dim_out, order);
        let mut offset = 0;
        for p in parts {
            if p.dim_in != first.dim_in {
                return Err(Error::DimensionMismatch {
                    what: "stacked component inputs",
                    expected: first.dim_in,
                    got: p.dim_in,
                });
            }
            for (k, v) in &p.coeffs {
                let mut full = vec![ZERO; dim_out];
                full[offset..offset + p.dim_out].copy_from_slice(v);
                out.add_term(k, &full);
            }
            offset += p.dim_out;
        }
        Ok(out)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Nonzero terms in graded-lex order.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Vec<Complex64>)> {
        self.coeffs.iter()
    }

    pub fn get(&self, k: &MultiIndex) -> Option<&[Complex64]> {
        self.coeffs.get(k).map(|v| v.as_slice())
    }

    pub fn coeff(&self, k: &MultiIndex, component: usize) -> Complex64 {
        self.coeffs.get(k).map_or(ZERO, |v| v[component])
    }

    /// Overwrite the coefficient vector at `k`. Indices above the truncation
    /// order are rejected.
    pub fn set(&mut self, k: MultiIndex, value: Vec<Complex64>) -> Result<()> {
        self.check_index(&k)?;
        if value.len() != self.dim_out {
            return Err(Error::DimensionMismatch {
                what: "coefficient vector",
                expected: self.dim_out,
                got: value.len(),
            });
        }
        if k.order() > self.order {
            return Err(Error::InvalidInput(format!(
                "index {:?} exceeds truncation order {}",
                k, self.order
            )));
        }
        if value.iter().all(|c| *c == ZERO) {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, value);
        }
        Ok(())
    }

    /// Accumulate `value` into the coefficient at `k`; silently drops terms
    /// above the truncation order.
    pub fn add_term(&mut self, k: &MultiIndex, value: &[Complex64]) {
        debug_assert_eq!(k.dim(), self.dim_in);
        if k.order() > self.order {
            return;
        }
        let dim_out = self.dim_out;
        let entry = self
            .coeffs
            .entry(k.clone())
            .or_insert_with(|| vec![ZERO; dim_out]);
        if value.len() == 1 && dim_out > 1 {
            for e in entry.iter_mut() {
                *e += value[0];
            }
        } else {
            for (e, v) in entry.iter_mut().zip(value) {
                *e += v;
            }
        }
        if entry.iter().all(|c| *c == ZERO) {
            self.coeffs.remove(k);
        }
    }

    fn check_index(&self, k: &MultiIndex) -> Result<()> {
        if k.dim() != self.dim_in {
            return Err(Error::DimensionMismatch {
                what: "multi-index",
                expected: self.dim_in,
                got: k.dim(),
            });
        }
        Ok(())
    }

    /// Lowest total order carrying a nonzero coefficient.
    pub fn lowest_order(&self) -> Option<u32> {
        self.coeffs.keys().next().map(|k| k.order())
    }

    pub fn constant_term(&self) -> Vec<Complex64> {
        self.coeffs
            .get(&MultiIndex::zero(self.dim_in))
            .cloned()
            .unwrap_or_else(|| vec![ZERO; self.dim_out])
    }

    /// Dense coefficient list of a scalar univariate series, length `order + 1`.
    pub fn univariate_coeffs(&self) -> Vec<Complex64> {
        assert_eq!(self.dim_in, 1, "univariate_coeffs on multivariate series");
        let mut out = vec![ZERO; self.order as usize + 1];
        for (k, v) in &self.coeffs {
            out[k.0[0] as usize] = v[0];
        }
        out
    }

    /// Largest coefficient magnitude at each total order `0..=order`.
    pub fn max_abs_by_order(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.order as usize + 1];
        for (k, v) in &self.coeffs {
            let m = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let slot = &mut out[k.order() as usize];
            *slot = slot.max(m);
        }
        out
    }

    pub fn component(&self, i: usize) -> MultiSeries {
        let mut out = MultiSeries::zeros(self.dim_in, 1, self.order);
        for (k, v) in &self.coeffs {
            if v[i] != ZERO {
                out.coeffs.insert(k.clone(), vec![v[i]]);
            }
        }
        out
    }

    /// Terms of total order exactly `k`.
    pub fn homogeneous_part(&self, k: u32) -> MultiSeries {
        let mut out = MultiSeries::zeros(self.dim_in, self.dim_out, self.order);
        for (idx, v) in self.coeffs.iter().filter(|(idx, _)| idx.order() == k) {
            out.coeffs.insert(idx.clone(), v.clone());
        }
        out
    }

    pub fn truncate(&self, order: u32) -> MultiSeries {
        let mut out = MultiSeries::zeros(self.dim_in, self.dim_out, order);
        for (k, v) in self.coeffs.iter().filter(|(k, _)| k.order() <= order) {
            out.coeffs.insert(k.clone(), v.clone());
        }
        out
    }

    /// Same coefficients, different nominal truncation order (higher orders are
    /// implicitly zero).
    pub fn with_order(&self, order: u32) -> MultiSeries {
        let mut out = self.truncate(order);
        out.order = order;
        out
    }

    pub fn scale(&self, factor: Complex64) -> MultiSeries {
        self.map_coeffs(|_, v| v.iter().map(|c| c * factor).collect())
    }

    pub fn map_coeffs<F>(&self, mut f: F) -> MultiSeries
    where
        F: FnMut(&MultiIndex, &[Complex64]) -> Vec<Complex64>,
    {
        let mut out = MultiSeries::zeros(self.dim_in, self.dim_out, self.order);
        for (k, v) in &self.coeffs {
            let nv = f(k, v);
            out.dim_out = nv.len();
            out.add_term(k, &nv);
        }
        if self.coeffs.is_empty() {
            out.dim_out = self.dim_out;
        }
        out
    }

    /// Left-multiply every coefficient vector by the `rows x dim_out` matrix.
    pub fn map_outputs(&self, matrix: &[Vec<Complex64>]) -> MultiSeries {
        let rows = matrix.len();
        let mut out = MultiSeries::zeros(self.dim_in, rows, self.order);
        for (k, v) in &self.coeffs {
            let nv: Vec<Complex64> = matrix
                .iter()
                .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                .collect();
            out.add_term(k, &nv);
        }
        out
    }

    pub fn add(&self, other: &MultiSeries) -> Result<MultiSeries> {
        self.same_shape(other)?;
        let mut out = self.with_order(self.order.min(other.order));
        for (k, v) in &other.coeffs {
            out.add_term(k, v);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &MultiSeries) -> Result<MultiSeries> {
        self.add(&other.scale(-ONE))
    }

    fn same_shape(&self, other: &MultiSeries) -> Result<()> {
        if self.dim_in != other.dim_in {
            return Err(Error::DimensionMismatch {
                what: "series inputs",
                expected: self.dim_in,
                got: other.dim_in,
            });
        }
        if self.dim_out != other.dim_out {
            return Err(Error::DimensionMismatch {
                what: "series outputs",
                expected: self.dim_out,
                got: other.dim_out,
            });
        }
        Ok(())
    }

    /// Evaluate the truncated sum at a complex point.
    pub fn evaluate(&self, point: &[Complex64]) -> Result<Vec<Complex64>> {
        if point.len() != self.dim_in {
            return Err(Error::DimensionMismatch {
                what: "evaluation point",
                expected: self.dim_in,
                got: point.len(),
            });
        }
        let powers = power_table(point, self.order);
        let mut acc = vec![ZERO; self.dim_out];
        for (k, v) in &self.coeffs {
            let mono = k
                .0
                .iter()
                .enumerate()
                .fold(ONE, |m, (j, &e)| m * powers[j][e as usize]);
            for (a, c) in acc.iter_mut().zip(v) {
                *a += c * mono;
            }
        }
        Ok(acc)
    }

    pub fn evaluate_real(&self, point: &[f64]) -> Result<Vec<Complex64>> {
        let p: Vec<Complex64> = point.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.evaluate(&p)
    }

    /// Partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> MultiSeries {
        let mut out = MultiSeries::zeros(self.dim_in, self.dim_out, self.order.saturating_sub(1));
        for (k, v) in &self.coeffs {
            let e = k.0[var];
            if e == 0 {
                continue;
            }
            let mut nk = k.clone();
            nk.0[var] -= 1;
            let f = Complex64::new(e as f64, 0.0);
            let nv: Vec<Complex64> = v.iter().map(|c| c * f).collect();
            out.add_term(&nk, &nv);
        }
        out
    }

    /// Jacobian `dim_out x dim_in` evaluated at a point.
    pub fn jacobian(&self, point: &[Complex64]) -> Result<Vec<Vec<Complex64>>> {
        let mut jac = vec![vec![ZERO; self.dim_in]; self.dim_out];
        for var in 0..self.dim_in {
            let col = self.derivative(var).evaluate(point)?;
            for (row, c) in jac.iter_mut().zip(col) {
                row[var] = c;
            }
        }
        Ok(jac)
    }
}

fn power_table(point: &[Complex64], order: u32) -> Vec<Vec<Complex64>> {
    point
        .iter()
        .map(|z| {
            let mut row = Vec::with_capacity(order as usize + 1);
            let mut acc = ONE;
            for _ in 0..=order {
                row.push(acc);
                acc *= z;
            }
            row
        })
        .collect()
}

/// Cauchy product truncated at `order`. One factor must be scalar-valued; its
/// value multiplies every component of the other.
pub fn multiply_truncated(a: &MultiSeries, b: &MultiSeries, order: u32) -> Result<MultiSeries> {
    if a.dim_in != b.dim_in {
        return Err(Error::DimensionMismatch {
            what: "product inputs",
            expected: a.dim_in,
            got: b.dim_in,
        });
    }
    let dim_out = match (a.dim_out, b.dim_out) {
        (1, n) | (n, 1) => n,
        (x, y) => {
            return Err(Error::DimensionMismatch {
                what: "product outputs (one factor must be scalar)",
                expected: 1,
                got: x.min(y),
            })
        }
    };
    let mut out = MultiSeries::zeros(a.dim_in, dim_out, order);
    let mut buf = vec![ZERO; dim_out];
    for (ka, va) in &a.coeffs {
        let oa = ka.order();
        if oa > order {
            break;
        }
        for (kb, vb) in &b.coeffs {
            if oa + kb.order() > order {
                break;
            }
            for (i, slot) in buf.iter_mut().enumerate() {
                let x = if va.len() == 1 { va[0] } else { va[i] };
                let y = if vb.len() == 1 { vb[0] } else { vb[i] };
                *slot = x * y;
            }
            out.add_term(&ka.add(kb), &buf);
        }
    }
    Ok(out)
}

/// Taylor coefficients of `outer(inner(p))` through `order`.
///
/// `inner` must vanish at the origin so that the composition is again an
/// expansion about the origin.
pub fn compose_truncated(
    outer: &MultiSeries,
    inner: &MultiSeries,
    order: u32,
) -> Result<MultiSeries> {
    if outer.dim_in != inner.dim_out {
        return Err(Error::DimensionMismatch {
            what: "composition (outer inputs vs inner outputs)",
            expected: outer.dim_in,
            got: inner.dim_out,
        });
    }
    if inner.constant_term().iter().any(|c| *c != ZERO) {
        return Err(Error::NonzeroConstantTerm);
    }
    let m = outer.dim_in;
    let d = inner.dim_in;
    let components: Vec<MultiSeries> = (0..m).map(|j| inner.component(j).with_order(order)).collect();

    // powers[j][e] = inner_j^e truncated at `order`
    let mut max_exp = vec![0u32; m];
    for k in outer.coeffs.keys() {
        if k.order() > order {
            continue;
        }
        for (j, &e) in k.0.iter().enumerate() {
            max_exp[j] = max_exp[j].max(e);
        }
    }
    let mut powers: Vec<Vec<MultiSeries>> = Vec::with_capacity(m);
    for j in 0..m {
        let mut row = vec![MultiSeries::constant(d, order, ONE)];
        for e in 1..=max_exp[j] {
            let next = multiply_truncated(&row[e as usize - 1], &components[j], order)?;
            row.push(next);
        }
        powers.push(row);
    }

    let mut out = MultiSeries::zeros(d, outer.dim_out, order);
    for (k, v) in &outer.coeffs {
        if k.order() > order {
            break;
        }
        let mut mono = MultiSeries::constant(d, order, ONE);
        for (j, &e) in k.0.iter().enumerate() {
            if e > 0 {
                mono = multiply_truncated(&mono, &powers[j][e as usize], order)?;
            }
        }
        for (idx, c) in &mono.coeffs {
            let term: Vec<Complex64> = v.iter().map(|x| x * c[0]).collect();
            out.add_term(idx, &term);
        }
    }
    Ok(out)
}

/// Compositional inverse of a scalar univariate series with `c_0 = 0` and
/// `c_1 != 0`, through `order`.
pub fn revert_univariate(series: &MultiSeries, order: u32) -> Result<MultiSeries> {
    if series.dim_in != 1 || series.dim_out != 1 {
        return Err(Error::InvalidInput("reversion needs a scalar univariate series".into()));
    }
    let c = series.with_order(order).univariate_coeffs();
    if c[0] != ZERO {
        return Err(Error::NonzeroConstantTerm);
    }
    if c.len() < 2 || c[1] == ZERO {
        return Err(Error::InvalidInput("reversion needs a nonzero linear coefficient".into()));
    }
    // Fixed-point iteration g <- (x - (f(g) - c1 g)) / c1 gains one order per pass.
    let x = MultiSeries::identity(1, order);
    let nonlinear = {
        let mut s = series.with_order(order);
        s.add_term(&MultiIndex::unit(1, 0), &[-c[1]]);
        s
    };
    let inv_c1 = ONE / c[1];
    let mut g = x.scale(inv_c1);
    for _ in 1..order {
        let fg = compose_truncated(&nonlinear, &g, order)?;
        g = x.sub(&fg)?.scale(inv_c1);
    }
    Ok(g)
}
