//! Triangles `x^m_i` (1 ≤ i ≤ m ≤ n) in log coordinates and the maps between
//! triangles, upper-triangular matrices in the positive cell, unit lower
//! triangular matrices and tridiagonal Lax matrices.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::{self, LowerUnitriangular, PositiveUpper, SquareMatrix};

/// Entries beyond this magnitude would overflow `exp`.
pub const ENTRY_LIMIT: f64 = 700.0;

/// Triangular array `x^m_i`, stored row by row. Indices are 1-based in the
/// accessors to match the usual `m`, `i` labels.
#[derive(Clone, PartialEq)]
pub struct Triangle {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn offset(m: usize) -> usize {
    m * (m - 1) / 2
}

impl Triangle {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "triangle size must be positive");
        Triangle { n, data: vec![0.0; n * (n + 1) / 2] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Invalid("empty triangle".into()));
        }
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for (k, row) in rows.iter().enumerate() {
            if row.len() != k + 1 {
                return Err(Error::Invalid(format!(
                    "row {} has {} entries, expected {}",
                    k + 1,
                    row.len(),
                    k + 1
                )));
            }
            data.extend_from_slice(row);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite triangle entry".into()));
        }
        Ok(Triangle { n, data })
    }

    /// Builds a triangle from its flat row-major entries.
    pub fn from_flat(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * (n + 1) / 2 {
            return Err(Error::Invalid(format!(
                "{} entries do not form a triangle of size {n}",
                data.len()
            )));
        }
        Ok(Triangle { n, data })
    }

    /// Triangle with the given bottom row and interior rows `1..n−1` taken
    /// from the flat vector `interior`.
    pub fn from_interior(bottom: &[f64], interior: &[f64]) -> Self {
        let n = bottom.len();
        assert_eq!(interior.len(), n * (n - 1) / 2);
        let mut data = interior.to_vec();
        data.extend_from_slice(bottom);
        Triangle { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, m: usize, i: usize) -> f64 {
        debug_assert!(i >= 1 && i <= m && m <= self.n);
        self.data[offset(m) + i - 1]
    }

    #[inline]
    pub fn set(&mut self, m: usize, i: usize, v: f64) {
        debug_assert!(i >= 1 && i <= m && m <= self.n);
        self.data[offset(m) + i - 1] = v;
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.data[offset(m)..offset(m) + m]
    }

    pub fn bottom(&self) -> &[f64] {
        self.row(self.n)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (1..=self.n).map(|m| self.row(m).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Entries of rows `1..n−1`, flattened.
    pub fn interior(&self) -> &[f64] {
        &self.data[..offset(self.n)]
    }

    pub fn interior_mut(&mut self) -> &mut [f64] {
        let k = offset(self.n);
        &mut self.data[..k]
    }

    pub fn row_sum(&self, m: usize) -> f64 {
        if m == 0 {
            0.0
        } else {
            self.row(m).iter().sum()
        }
    }

    pub fn max_abs_diff(&self, other: &Triangle) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `self + s·dir`, entrywise.
    pub fn add_scaled(&self, dir: &Triangle, s: f64) -> Triangle {
        Triangle {
            n: self.n,
            data: self.data.iter().zip(&dir.data).map(|(a, b)| a + s * b).collect(),
        }
    }

    /// Rejects non-finite entries and entries with `|x| > ENTRY_LIMIT`.
    pub fn check_range(&self) -> Result<()> {
        match self.data.iter().find(|v| !(v.abs() <= ENTRY_LIMIT)) {
            Some(v) => Err(Error::Overflow(format!("triangle entry {v:e} out of range"))),
            None => Ok(()),
        }
    }
}

impl std::fmt::Debug for Triangle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

#[derive(Serialize, Deserialize)]
struct TriangleJson {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl Serialize for Triangle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TriangleJson { n: self.n, rows: self.rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Triangle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = TriangleJson::deserialize(d)?;
        if raw.rows.len() != raw.n {
            return Err(serde::de::Error::custom("row count does not match n"));
        }
        Triangle::from_rows(&raw.rows).map_err(serde::de::Error::custom)
    }
}

/// Tridiagonal Lax matrix: diagonal `p`, subdiagonal `−q`, superdiagonal 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaxMatrix {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl LaxMatrix {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.is_empty() || q.len() + 1 != p.len() {
            return Err(Error::Invalid(format!(
                "Lax matrix needs |q| = |p| − 1, got {} and {}",
                p.len(),
                q.len()
            )));
        }
        if p.iter().chain(&q).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite Lax entry".into()));
        }
        Ok(LaxMatrix { p, q })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn to_matrix(&self) -> SquareMatrix {
        let n = self.n();
        let mut m = SquareMatrix::diagonal(&self.p);
        for i in 0..n - 1 {
            m[(i, i + 1)] = 1.0;
            m[(i + 1, i)] = -self.q[i];
        }
        m
    }

    /// Reads `p` and `q` back from a matrix, checking the tridiagonal shape
    /// with unit superdiagonal to within `tol`.
    pub fn from_matrix(m: &SquareMatrix, tol: f64) -> Result<Self> {
        let n = m.n();
        let scale = m.max_abs().max(1.0);
        for i in 0..n {
            for j in 0..n {
                let expected_zero = j > i + 1 || i > j + 1;
                if expected_zero && m[(i, j)].abs() > tol * scale {
                    return Err(Error::Numerical(format!(
                        "entry ({}, {}) = {:e} breaks tridiagonal form",
                        i + 1,
                        j + 1,
                        m[(i, j)]
                    )));
                }
                if j == i + 1 && (m[(i, j)] - 1.0).abs() > tol * scale {
                    return Err(Error::Numerical(format!(
                        "superdiagonal entry {} = {} differs from 1",
                        i + 1,
                        m[(i, j)]
                    )));
                }
            }
        }
        let p = (0..n).map(|i| m[(i, i)]).collect();
        let q = (0..n - 1).map(|i| -m[(i + 1, i)]).collect();
        LaxMatrix::new(p, q)
    }

    pub fn max_abs_diff(&self, other: &LaxMatrix) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .chain(self.q.iter().zip(&other.q))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Log of every solid minor: `x^m_1 + … + x^m_k = log Δ^m_k(b)`.
///
/// Fails with a domain error if some minor is not positive.
pub fn f_map(b: &SquareMatrix) -> Result<Triangle> {
    let n = b.n();
    if !b.is_upper_triangular() {
        return Err(Error::Domain("matrix is not upper triangular".into()));
    }
    let mut x = Triangle::zeros(n);
    for m in 1..=n {
        let mut prev = 0.0;
        for k in 1..=m {
            let d = matrix::minor(b, m, k)?;
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Domain(format!("minor Δ^{m}_{k} = {d:e} is not positive")));
            }
            let log_d = d.ln();
            x.set(m, k, log_d - prev);
            prev = log_d;
        }
    }
    Ok(x)
}

/// Positive parameters `w^m_i` of the bidiagonal factorization, `w^m` of length `n−m+1`.
pub fn w_params(x: &Triangle) -> Vec<Vec<f64>> {
    let n = x.n();
    (1..=n)
        .map(|m| {
            (1..=n - m + 1)
                .map(|i| {
                    if i == 1 {
                        x.get(m, 1).exp()
                    } else {
                        (x.get(m + i - 1, i) - x.get(m + i - 2, i - 1)).exp()
                    }
                })
                .collect()
        })
        .collect()
}

/// Inverse of [`f_map`]: `b = E_1(w^1)⋯E_n(w^n)`, each `E_m` bidiagonal on
/// its trailing `n−m+1` block with unit superdiagonal.
pub fn f_inv(x: &Triangle) -> Result<PositiveUpper> {
    x.check_range()?;
    let n = x.n();
    let w = w_params(x);
    let mut b = SquareMatrix::identity(n);
    for (m0, wm) in w.iter().enumerate() {
        let mut e = SquareMatrix::identity(n);
        for (i, &wi) in wm.iter().enumerate() {
            e[(m0 + i, m0 + i)] = wi;
            if m0 + i + 1 < n {
                e[(m0 + i, m0 + i + 1)] = 1.0;
            }
        }
        b = b.matmul(&e);
    }
    if !b.is_finite() {
        return Err(Error::Overflow("f_inv produced non-finite entries".into()));
    }
    Ok(PositiveUpper::new_unchecked(b))
}

/// `u^m_i = e^{x^{m+1}_{i+1} − x^m_i}` for `1 ≤ i ≤ m < n`, and the diagonal `D_ii = e^{x^n_i}`.
pub fn u_params(x: &Triangle) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = x.n();
    let u = (1..n)
        .map(|m| (1..=m).map(|i| (x.get(m + 1, i + 1) - x.get(m, i)).exp()).collect())
        .collect();
    let d = x.bottom().iter().map(|v| v.exp()).collect();
    (u, d)
}

/// Applies `l_i(a) = I + a·f_i` on the right (adds `a`·column `i+1` to column `i`).
fn right_mul_l(mat: &mut SquareMatrix, i: usize, a: f64) {
    for r in 0..mat.n() {
        let v = mat[(r, i)];
        mat[(r, i - 1)] += a * v;
    }
}

/// `L = L_1(u^1)⋯L_{n−1}(u^{n−1})` with `L_m(u) = l_m(u_m)⋯l_1(u_1)`.
pub fn h_map(x: &Triangle) -> LowerUnitriangular {
    let (u, _) = u_params(x);
    h_from_u(x.n(), &u)
}

/// Assembles `L` from its `u` parameters.
pub fn h_from_u(n: usize, u: &[Vec<f64>]) -> LowerUnitriangular {
    let mut l = SquareMatrix::identity(n);
    for um in u {
        for i in (1..=um.len()).rev() {
            right_mul_l(&mut l, i, um[i - 1]);
        }
    }
    LowerUnitriangular::new_unchecked(l)
}

/// The flow field of the geometric RSK dynamics, resolved row by row.
pub(crate) fn rsk_field(x: &Triangle, lambda: &[f64]) -> Triangle {
    let n = x.n();
    let mut v = Triangle::zeros(n);
    v.set(1, 1, lambda[0]);
    for m in 2..=n {
        v.set(m, m, lambda[m - 1] - (x.get(m, m) - x.get(m - 1, m - 1)).exp());
        v.set(m, 1, v.get(m - 1, 1) + (x.get(m, 2) - x.get(m - 1, 1)).exp());
        for i in 2..m {
            let dv = (x.get(m, i + 1) - x.get(m - 1, i)).exp()
                - (x.get(m, i) - x.get(m - 1, i - 1)).exp();
            v.set(m, i, v.get(m - 1, i) + dv);
        }
    }
    v
}

/// Lax matrix with `q_i = e^{x^n_{i+1} − x^n_i}` and `p` the bottom-row
/// velocity of the geometric RSK flow (base value `p^1_1 = λ_1`).
pub fn g_lambda(x: &Triangle, lambda: &[f64]) -> Result<LaxMatrix> {
    let n = x.n();
    if lambda.len() != n {
        return Err(Error::Invalid(format!("λ has length {}, expected {n}", lambda.len())));
    }
    let v = rsk_field(x, lambda);
    let bottom = x.bottom();
    let q = (0..n - 1).map(|i| (bottom[i + 1] - bottom[i]).exp()).collect();
    LaxMatrix::new(v.bottom().to_vec(), q)
}
