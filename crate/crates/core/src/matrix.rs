//! Small dense linear algebra: minors, Gauss (LDU) decomposition, eigenvalues,
//! the matrix exponential and the structured matrices `ε_λ` and `w̄₀`.
//!
//! Everything here is sized for n ≤ ~10 and works in plain `f64`.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Leading principal minors below this multiple of the matrix scale are
/// treated as vanishing by [`gauss_ldu`].
pub const PIVOT_FLOOR: f64 = 1e-13;

/// Dense real n×n matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be positive");
        SquareMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Invalid("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::Invalid(format!(
                    "row of length {} in a {n}x{n} matrix",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite matrix entry".into()));
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: f64) -> Self {
        SquareMatrix { n: self.n, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        SquareMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        SquareMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// Commutator `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self[(i, j)] == 0.0))
    }

    /// Strictly lower triangular part.
    pub fn strictly_lower(&self) -> Self {
        Self::from_fn(self.n, |i, j| if i > j { self[(i, j)] } else { 0.0 })
    }

    /// Square sub-block with the given row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        assert_eq!(rows.len(), cols.len());
        Self::from_fn(rows.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// Determinant by partial-pivoting LU.
    pub fn det(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x * n + k].abs().total_cmp(&a[y * n + k].abs()))
                .unwrap();
            if a[p * n + k] == 0.0 {
                return 0.0;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let piv = a[k * n + k];
            det *= piv;
            for i in k + 1..n {
                let f = a[i * n + k] / piv;
                if f != 0.0 {
                    for j in k + 1..n {
                        a[i * n + j] -= f * a[k * n + j];
                    }
                }
            }
        }
        det
    }

    /// Solve `self · X = rhs` by partial-pivoting LU.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x * n + k].abs().total_cmp(&a[y * n + k].abs()))
                .unwrap();
            if a[p * n + k].abs() <= f64::EPSILON * scale * 1e-3 {
                return Err(Error::Numerical("singular matrix in solve".into()));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                    b.swap(k * n + j, p * n + j);
                }
            }
            let piv = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / piv;
                if f != 0.0 {
                    for j in k..n {
                        a[i * n + j] -= f * a[k * n + j];
                    }
                    for j in 0..n {
                        b[i * n + j] -= f * b[k * n + j];
                    }
                }
            }
        }
        for k in (0..n).rev() {
            let piv = a[k * n + k];
            for j in 0..n {
                let mut s = b[k * n + j];
                for i in k + 1..n {
                    s -= a[k * n + i] * b[i * n + j];
                }
                b[k * n + j] = s / piv;
            }
        }
        Ok(SquareMatrix { n, data: b })
    }

    pub fn inverse(&self) -> Result<Self> {
        self.solve(&Self::identity(self.n))
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &SquareMatrix {
    type Output = SquareMatrix;
    fn mul(self, rhs: &SquareMatrix) -> SquareMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.n)).finish()
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl Serialize for SquareMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson { n: self.n, rows: self.rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SquareMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        if raw.rows.len() != raw.n {
            return Err(serde::de::Error::custom("row count does not match n"));
        }
        SquareMatrix::from_rows(&raw.rows).map_err(serde::de::Error::custom)
    }
}

/// Upper-triangular matrix whose solid minors `Δ^m_k` are all positive.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PositiveUpper(SquareMatrix);

impl PositiveUpper {
    /// Validates upper-triangularity and positivity of every minor.
    pub fn try_new(b: SquareMatrix) -> Result<Self> {
        if !b.is_upper_triangular() {
            return Err(Error::Domain("matrix is not upper triangular".into()));
        }
        let n = b.n();
        for m in 1..=n {
            for k in 1..=m {
                let d = minor(&b, m, k)?;
                if !(d > 0.0) {
                    return Err(Error::Domain(format!(
                        "minor Δ^{m}_{k} = {d:e} is not positive"
                    )));
                }
            }
        }
        Ok(PositiveUpper(b))
    }

    /// Wraps a matrix known to lie in the positive cell by construction.
    pub(crate) fn new_unchecked(b: SquareMatrix) -> Self {
        PositiveUpper(b)
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn into_inner(self) -> SquareMatrix {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }
}

/// Unit lower-triangular matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LowerUnitriangular(SquareMatrix);

impl LowerUnitriangular {
    pub fn try_new(l: SquareMatrix) -> Result<Self> {
        let n = l.n();
        for i in 0..n {
            if l[(i, i)] != 1.0 {
                return Err(Error::Domain("diagonal entry differs from 1".into()));
            }
            for j in i + 1..n {
                if l[(i, j)] != 0.0 {
                    return Err(Error::Domain("non-zero strictly upper entry".into()));
                }
            }
        }
        Ok(LowerUnitriangular(l))
    }

    pub(crate) fn new_unchecked(l: SquareMatrix) -> Self {
        LowerUnitriangular(l)
    }

    pub fn identity(n: usize) -> Self {
        LowerUnitriangular(SquareMatrix::identity(n))
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn into_inner(self) -> SquareMatrix {
        self.0
    }

    /// Inverse by forward substitution; stays unit lower-triangular.
    pub fn inverse(&self) -> Self {
        let n = self.0.n();
        let l = &self.0;
        let mut inv = SquareMatrix::identity(n);
        for j in 0..n {
            for i in j + 1..n {
                let mut s = 0.0;
                for k in j..i {
                    s += l[(i, k)] * inv[(k, j)];
                }
                inv[(i, j)] = -s;
            }
        }
        LowerUnitriangular(inv)
    }
}

/// `ε_λ`: diagonal `λ`, ones on the superdiagonal.
pub fn epsilon(lambda: &[f64]) -> SquareMatrix {
    let n = lambda.len();
    let mut m = SquareMatrix::diagonal(lambda);
    for i in 0..n.saturating_sub(1) {
        m[(i, i + 1)] = 1.0;
    }
    m
}

/// `s̄_i = (I − e_i)(I + f_i)(I − e_i)` for the adjacent transposition `(i, i+1)`, 1-based `i`.
pub fn s_bar(n: usize, i: usize) -> SquareMatrix {
    assert!(i >= 1 && i < n);
    let mut minus_e = SquareMatrix::identity(n);
    minus_e[(i - 1, i)] = -1.0;
    let mut plus_f = SquareMatrix::identity(n);
    plus_f[(i, i - 1)] = 1.0;
    minus_e.matmul(&plus_f).matmul(&minus_e)
}

/// Representative `w̄₀` of the longest permutation, built from the reduced
/// word `1 21 321 …`.
pub fn w0_bar(n: usize) -> SquareMatrix {
    let mut w = SquareMatrix::identity(n);
    for k in 1..n {
        for i in (1..=k).rev() {
            w = w.matmul(&s_bar(n, i));
        }
    }
    w
}

/// Solid minor `Δ^m_k(b)`: determinant of rows `1..k` and columns
/// `m−k+1..m` (1-based). `Δ^m_0 = 1`.
pub fn minor(b: &SquareMatrix, m: usize, k: usize) -> Result<f64> {
    if m > b.n() || k > m {
        return Err(Error::Range(format!(
            "minor Δ^{m}_{k} of a {}x{} matrix",
            b.n(),
            b.n()
        )));
    }
    if k == 0 {
        return Ok(1.0);
    }
    let rows: Vec<usize> = (0..k).collect();
    let cols: Vec<usize> = (m - k..m).collect();
    Ok(b.submatrix(&rows, &cols).det())
}

/// Gauss decomposition `A = L·diag(d)·U`.
#[derive(Clone, Debug)]
pub struct Ldu {
    pub l: LowerUnitriangular,
    pub d: Vec<f64>,
    /// Unit upper-triangular factor.
    pub u: SquareMatrix,
}

impl Ldu {
    /// `R = D·U`, the upper-triangular part of `A = L·R`.
    pub fn r(&self) -> SquareMatrix {
        SquareMatrix::diagonal(&self.d).matmul(&self.u)
    }

    pub fn recompose(&self) -> SquareMatrix {
        self.l.matrix().matmul(&self.r())
    }
}

/// Gauss LDU decomposition without pivoting.
///
/// Fails with [`Error::FactorizationBlowUp`] when a pivot (ratio of consecutive
/// leading principal minors) drops below `PIVOT_FLOOR` times the largest entry.
pub fn gauss_ldu(a: &SquareMatrix) -> Result<Ldu> {
    gauss_ldu_with_floor(a, PIVOT_FLOOR)
}

/// [`gauss_ldu`] with an explicit relative pivot floor.
pub fn gauss_ldu_with_floor(a: &SquareMatrix, pivot_floor: f64) -> Result<Ldu> {
    if !a.is_finite() {
        return Err(Error::Overflow("non-finite entry in gauss_ldu input".into()));
    }
    let n = a.n();
    let floor = pivot_floor * a.max_abs();
    let mut w = a.clone();
    let mut l = SquareMatrix::identity(n);
    let mut d = vec![0.0; n];
    for k in 0..n {
        let piv = w[(k, k)];
        if !(piv.abs() > floor) {
            return Err(Error::FactorizationBlowUp { pivot: k + 1, magnitude: piv.abs() });
        }
        d[k] = piv;
        for i in k + 1..n {
            let f = w[(i, k)] / piv;
            l[(i, k)] = f;
            w[(i, k)] = 0.0;
            for j in k + 1..n {
                let v = w[(k, j)];
                w[(i, j)] -= f * v;
            }
        }
    }
    let mut u = SquareMatrix::identity(n);
    for k in 0..n {
        for j in k + 1..n {
            u[(k, j)] = w[(k, j)] / d[k];
        }
    }
    Ok(Ldu { l: LowerUnitriangular(l), d, u })
}

/// Eigenvalues with multiplicity, via a real Schur decomposition.
pub fn eigenvalues(m: &SquareMatrix) -> Result<Vec<Complex<f64>>> {
    if !m.is_finite() {
        return Err(Error::Numerical("non-finite matrix".into()));
    }
    let schur = nalgebra::linalg::Schur::try_new(m.to_nalgebra(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Real parts of the eigenvalues in ascending order; errors if any imaginary
/// part exceeds `imag_tol`.
pub fn real_eigenvalues_sorted(m: &SquareMatrix, imag_tol: f64) -> Result<Vec<f64>> {
    let ev = eigenvalues(m)?;
    if let Some(z) = ev.iter().find(|z| z.im.abs() > imag_tol) {
        return Err(Error::Numerical(format!("complex eigenvalue {z}")));
    }
    let mut re: Vec<f64> = ev.iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);
    Ok(re)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// `e^{tA}` by scaling and squaring around a degree-13 Padé approximant.
pub fn matrix_exp(a: &SquareMatrix, t: f64) -> Result<SquareMatrix> {
    let n = a.n();
    let ta = a.scale(t);
    if !ta.is_finite() {
        return Err(Error::Overflow("non-finite exponent".into()));
    }
    let norm = ta.norm1();
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let x = ta.scale(2f64.powi(-s));
    let id = SquareMatrix::identity(n);
    let x2 = x.matmul(&x);
    let x4 = x2.matmul(&x2);
    let x6 = x4.matmul(&x2);
    let b = &PADE13;
    let u_inner = x6
        .scale(b[13])
        .add(&x4.scale(b[11]))
        .add(&x2.scale(b[9]));
    let u = x.matmul(
        &x6.matmul(&u_inner)
            .add(&x6.scale(b[7]))
            .add(&x4.scale(b[5]))
            .add(&x2.scale(b[3]))
            .add(&id.scale(b[1])),
    );
    let v_inner = x6
        .scale(b[12])
        .add(&x4.scale(b[10]))
        .add(&x2.scale(b[8]));
    let v = x6
        .matmul(&v_inner)
        .add(&x6.scale(b[6]))
        .add(&x4.scale(b[4]))
        .add(&x2.scale(b[2]))
        .add(&id.scale(b[0]));
    let mut r = v.sub(&u).solve(&v.add(&u))?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    if !r.is_finite() {
        return Err(Error::Overflow(format!("matrix exponential overflow (‖tA‖₁ = {norm:e})")));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_upper(n: usize, rng: &mut impl Rng) -> SquareMatrix {
        SquareMatrix::from_fn(n, |i, j| if j >= i { rng.random_range(-1.0..1.0) } else { 0.0 })
    }

    // Cofactor expansion, independent of the LU determinant.
    fn cofactor_det(m: &SquareMatrix) -> f64 {
        let n = m.n();
        if n == 1 {
            return m[(0, 0)];
        }
        (0..n)
            .map(|j| {
                let rows: Vec<usize> = (1..n).collect();
                let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[(0, j)] * cofactor_det(&m.submatrix(&rows, &cols))
            })
            .sum()
    }

    #[test]
    fn minor_identity_and_conventions() {
        let id = SquareMatrix::identity(4);
        assert_eq!(minor(&id, 4, 4).unwrap(), 1.0);
        assert_eq!(minor(&id, 3, 0).unwrap(), 1.0);
        assert!(matches!(minor(&id, 5, 1), Err(Error::Range(_))));
        assert!(matches!(minor(&id, 2, 3), Err(Error::Range(_))));
    }

    #[test]
    fn minor_of_shear() {
        for t in [0.0, 0.5, 1.0, 2.0] {
            let b = SquareMatrix::from_rows(&[vec![1.0, 1.0 + t], vec![0.0, 1.0]]).unwrap();
            assert!((minor(&b, 2, 1).unwrap() - (1.0 + t)).abs() < 1e-15);
            assert!((minor(&b, 2, 2).unwrap() - 1.0).abs() < 1e-15);
            assert!((minor(&b, 1, 1).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn minor_matches_cofactor_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let b = random_upper(4, &mut rng);
            let block = b.submatrix(&[0, 1], &[1, 2]);
            let want = cofactor_det(&block);
            assert!((minor(&b, 3, 2).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn ldu_of_identity() {
        let f = gauss_ldu(&SquareMatrix::identity(3)).unwrap();
        assert_eq!(f.l.matrix(), &SquareMatrix::identity(3));
        assert_eq!(f.d, vec![1.0; 3]);
        assert_eq!(f.u, SquareMatrix::identity(3));
    }

    #[test]
    fn ldu_of_shear_times_w0() {
        let b = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let a = b.matmul(&w0_bar(2));
        assert_eq!(a, SquareMatrix::from_rows(&[vec![2.0, -1.0], vec![1.0, 0.0]]).unwrap());
        let f = gauss_ldu(&a).unwrap();
        assert!((f.d[0] - 2.0).abs() < 1e-15);
        assert!((f.d[1] - 0.5).abs() < 1e-15);
        assert!((f.l.matrix()[(1, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ldu_recomposes_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a = SquareMatrix::from_fn(5, |i, j| {
                rng.random_range(-1.0..1.0) + if i == j { 4.0 } else { 0.0 }
            });
            let f = gauss_ldu(&a).unwrap();
            let rel = f.recompose().max_abs_diff(&a) / a.max_abs();
            assert!(rel < 1e-10, "relative recomposition error {rel}");
            // D_ii is the ratio of consecutive leading principal minors.
            let mut prev = 1.0;
            for k in 1..=5 {
                let idx: Vec<usize> = (0..k).collect();
                let lead = a.submatrix(&idx, &idx).det();
                assert!((f.d[k - 1] - lead / prev).abs() < 1e-10 * (lead / prev).abs().max(1.0));
                prev = lead;
            }
        }
    }

    #[test]
    fn ldu_detects_vanishing_minor() {
        let a = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(gauss_ldu(&a), Err(Error::FactorizationBlowUp { pivot: 1, .. })));
        let a = SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-15]]).unwrap();
        assert!(matches!(gauss_ldu(&a), Err(Error::FactorizationBlowUp { pivot: 2, .. })));
    }

    #[test]
    fn w0_bar_small_cases() {
        let w2 = w0_bar(2);
        assert_eq!(w2, SquareMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap());
        let w3 = w0_bar(3);
        let want = SquareMatrix::from_rows(&[
            vec![0.0, 0.0, 1.0],
            vec![0.0, -1.0, 0.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(w3, want);
        // The other reduced word gives the same representative.
        let alt = s_bar(3, 2).matmul(&s_bar(3, 1)).matmul(&s_bar(3, 2));
        assert_eq!(alt, want);
        // Antidiagonal permutation pattern for larger n.
        let w5 = w0_bar(5);
        for i in 0..5 {
            for j in 0..5 {
                if i + j == 4 {
                    assert_eq!(w5[(i, j)].abs(), 1.0);
                } else {
                    assert_eq!(w5[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn eigenvalues_of_epsilon() {
        let mut ev = real_eigenvalues_sorted(&epsilon(&[3.0, 1.0, -2.0]), 1e-12).unwrap();
        ev.reverse();
        for (a, b) in ev.iter().zip([3.0, 1.0, -2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_satisfy_characteristic_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let m = SquareMatrix::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let ev = eigenvalues(&m).unwrap();
            for z in [0.3, -1.1, 2.0, 0.7, -0.2] {
                let direct = m.sub(&SquareMatrix::identity(5).scale(z)).det();
                let prod = ev
                    .iter()
                    .fold(Complex::new(1.0, 0.0), |acc, l| acc * (l - Complex::new(z, 0.0)));
                assert!(prod.im.abs() < 1e-8 * direct.abs().max(1.0));
                assert!((prod.re - direct).abs() < 1e-6 * direct.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn exp_of_zero_and_nilpotent() {
        let e = matrix_exp(&SquareMatrix::zeros(3), 1.7).unwrap();
        assert_eq!(e, SquareMatrix::identity(3));
        for t in [0.1, 1.0, 5.0] {
            let e = matrix_exp(&epsilon(&[0.0, 0.0]), t).unwrap();
            assert!((e[(0, 1)] - t).abs() < 1e-13 * t.max(1.0));
            assert!((e[(0, 0)] - 1.0).abs() < 1e-14);
            assert!(e[(1, 0)].abs() < 1e-14);
        }
    }

    #[test]
    fn exp_of_two_by_two_epsilon() {
        for lam in [0.3, 1.0, 2.5] {
            for t in [0.5, 1.0, 3.0] {
                let e = matrix_exp(&epsilon(&[lam, -lam]), t).unwrap();
                let want01 = (lam * t).sinh() / lam;
                assert!(((e[(0, 0)] - (lam * t).exp()) / (lam * t).exp()).abs() < 1e-12);
                assert!(((e[(1, 1)] - (-lam * t).exp()) / (-lam * t).exp()).abs() < 1e-12);
                assert!(((e[(0, 1)] - want01) / want01).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exp_group_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = SquareMatrix::from_fn(4, |_, _| rng.random_range(-1.25..1.25));
            let s = rng.random_range(0.0..2.0);
            let t = rng.random_range(0.0..2.0);
            let lhs = matrix_exp(&a, s + t).unwrap();
            let rhs = matrix_exp(&a, s).unwrap().matmul(&matrix_exp(&a, t).unwrap());
            assert!(lhs.max_abs_diff(&rhs) < 1e-9 * lhs.max_abs().max(1.0));
        }
    }

    #[test]
    fn exp_overflow_is_reported() {
        let a = SquareMatrix::diagonal(&[1.0, 1.0]);
        assert!(matches!(matrix_exp(&a, 1e6), Err(Error::Overflow(_))));
    }

    #[test]
    fn matrix_json_shape() {
        let m = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 3.0]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"n":2,"rows":[[1.0,2.0],[0.0,3.0]]}"#);
        let back: SquareMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<SquareMatrix>(r#"{"n":3,"rows":[[1.0]]}"#).is_err());
    }

    #[test]
    fn positive_upper_validation() {
        let ok = SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(PositiveUpper::try_new(ok).is_ok());
        let zero_corner = SquareMatrix::identity(2);
        assert!(matches!(PositiveUpper::try_new(zero_corner), Err(Error::Domain(_))));
        let lower = SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(PositiveUpper::try_new(lower).is_err());
    }

    #[test]
    fn unit_lower_inverse() {
        let l = SquareMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.5, 1.0, 0.0],
            vec![-2.0, 3.0, 1.0],
        ])
        .unwrap();
        let l = LowerUnitriangular::try_new(l).unwrap();
        let prod = l.matrix().matmul(l.inverse().matrix());
        assert!(prod.max_abs_diff(&SquareMatrix::identity(3)) < 1e-15);
    }
}
