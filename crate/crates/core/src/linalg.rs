//! Dense vector and matrix primitives, least squares restricted to a column
//! subset, and an incrementally extended QR factorization for the growing
//! pursuit support.

use std::ops::Index;

use crate::error::{Error, Result};

/// Relative norm below which a freshly orthogonalized column is treated as
/// linearly dependent on the current support.
pub const DEPENDENCE_THRESHOLD: f64 = 1e-12;

/// A second Gram-Schmidt pass runs when the first one keeps less than this
/// fraction of the column norm.
const REORTHOGONALIZE_BELOW: f64 = 0.5;

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(pos) => Err(Error::NonFinite(pos)),
        None => Ok(()),
    }
}

/// A finite, non-empty real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDimensions("vector must be non-empty".into()));
        }
        check_finite(&entries)?;
        Ok(Vector(entries))
    }

    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    /// Wraps values produced by finite arithmetic on validated inputs.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        Vector(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                context: "vector subtraction",
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(Vector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Returns `Σ u_i v_i`.
pub fn inner_product(u: &Vector, v: &Vector) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            context: "inner product",
            expected: u.len(),
            found: v.len(),
        });
    }
    Ok(dot(&u.0, &v.0))
}

/// Dense real matrix, row-major. A column-major copy is kept alongside so
/// column slices are contiguous; the matrix is immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    col_major: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix entries",
                expected: rows * cols,
                found: data.len(),
            });
        }
        check_finite(&data)?;
        let mut col_major = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                col_major[c * rows + r] = data[r * cols + c];
            }
        }
        Ok(DenseMatrix {
            rows,
            cols,
            data,
            col_major,
        })
    }

    /// Builds a matrix from its columns; all columns must share one length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch {
                context: "matrix column",
                expected: rows,
                found: bad.len(),
            });
        }
        let mut data = vec![0.0; rows * cols];
        for (c, column) in columns.iter().enumerate() {
            for (r, v) in column.iter().enumerate() {
                data[r * cols + c] = *v;
            }
        }
        DenseMatrix::new(rows, cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        DenseMatrix::new(n, n, data).expect("identity is well formed")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, i: usize) -> Result<Vector> {
        if i >= self.cols {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.cols,
            });
        }
        Ok(Vector(self.col(i).to_vec()))
    }

    /// Contiguous view of column `i`. Panics when out of range.
    pub fn col(&self, i: usize) -> &[f64] {
        &self.col_major[i * self.rows..(i + 1) * self.rows]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                found: x.len(),
            });
        }
        let mut out = vec![0.0; self.rows];
        for (c, &xc) in x.iter().enumerate() {
            if xc == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.col(c)) {
                *o += a * xc;
            }
        }
        Ok(Vector(out))
    }

    /// `Φ_S c` for coefficients `c` aligned with `support`.
    pub fn mul_support(&self, support: &[usize], coefficients: &[f64]) -> Vector {
        let mut out = vec![0.0; self.rows];
        for (&c, &xc) in support.iter().zip(coefficients) {
            for (o, a) in out.iter_mut().zip(self.col(c)) {
                *o += a * xc;
            }
        }
        Vector(out)
    }
}

/// Least-squares coefficients on a support together with the residual.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresFit {
    pub support: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub residual: Vector,
}

impl LeastSquaresFit {
    pub fn coefficient(&self, index: usize) -> Option<f64> {
        self.support
            .iter()
            .position(|&s| s == index)
            .map(|p| self.coefficients[p])
    }
}

/// Thin QR factorization of `Φ_Λ` grown one column at a time, together with
/// `Qᵀy` and the projection residual of `y`.
#[derive(Debug, Clone)]
pub struct SupportFactorization<'a> {
    matrix: &'a DenseMatrix,
    support: Vec<usize>,
    q: Vec<Vec<f64>>,
    // r[j] holds column j of the upper-triangular factor (length j + 1).
    r: Vec<Vec<f64>>,
    qty: Vec<f64>,
    residual: Vec<f64>,
}

impl<'a> SupportFactorization<'a> {
    pub fn new(matrix: &'a DenseMatrix, y: &Vector) -> Result<Self> {
        if y.len() != matrix.rows() {
            return Err(Error::DimensionMismatch {
                context: "measurement vector",
                expected: matrix.rows(),
                found: y.len(),
            });
        }
        Ok(SupportFactorization {
            matrix,
            support: Vec::new(),
            q: Vec::new(),
            r: Vec::new(),
            qty: Vec::new(),
            residual: y.as_slice().to_vec(),
        })
    }

    pub fn matrix(&self) -> &'a DenseMatrix {
        self.matrix
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Appends column `index` to the support. On failure the factorization
    /// is left untouched.
    pub fn extend(&mut self, index: usize) -> Result<()> {
        if index >= self.matrix.cols() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.matrix.cols(),
            });
        }
        if self.support.contains(&index) {
            return Err(Error::DuplicateIndex(index));
        }
        let mut v = self.matrix.col(index).to_vec();
        let original = norm(&v);
        let mut coeffs = vec![0.0; self.q.len()];
        if original > 0.0 {
            self.orthogonalize(&mut v, &mut coeffs);
            if norm(&v) < REORTHOGONALIZE_BELOW * original {
                self.orthogonalize(&mut v, &mut coeffs);
            }
        }
        let remaining = norm(&v);
        if original == 0.0 || remaining < DEPENDENCE_THRESHOLD * original {
            let mut support = self.support.clone();
            support.push(index);
            return Err(Error::IllConditioned { support });
        }
        v.iter_mut().for_each(|x| *x /= remaining);
        coeffs.push(remaining);

        let projection = dot(&v, &self.residual);
        for (res, qv) in self.residual.iter_mut().zip(&v) {
            *res -= projection * qv;
        }
        self.qty.push(projection);
        self.q.push(v);
        self.r.push(coeffs);
        self.support.push(index);
        Ok(())
    }

    fn orthogonalize(&self, v: &mut [f64], coeffs: &mut [f64]) {
        for (q, c) in self.q.iter().zip(coeffs.iter_mut()) {
            let proj = dot(q, v);
            for (x, qx) in v.iter_mut().zip(q) {
                *x -= proj * qx;
            }
            *c += proj;
        }
    }

    /// Solves `R c = Qᵀy` by back substitution; coefficients follow the
    /// insertion order of the support.
    pub fn coefficients(&self) -> Vec<f64> {
        let k = self.support.len();
        let mut c = vec![0.0; k];
        for i in (0..k).rev() {
            let acc = self.qty[i] - (i + 1..k).map(|j| self.r[j][i] * c[j]).sum::<f64>();
            c[i] = acc / self.r[i][i];
        }
        c
    }

    /// `y` minus its orthogonal projection onto the span of the support.
    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    pub fn residual_norm(&self) -> f64 {
        norm(&self.residual)
    }

    pub fn fit(&self) -> LeastSquaresFit {
        LeastSquaresFit {
            support: self.support.clone(),
            coefficients: self.coefficients(),
            residual: Vector(self.residual.clone()),
        }
    }
}

/// Consumes `factorization` and returns it grown by `new_index`.
pub fn extend_factorization(
    mut factorization: SupportFactorization<'_>,
    new_index: usize,
) -> Result<SupportFactorization<'_>> {
    factorization.extend(new_index)?;
    Ok(factorization)
}

/// `argmin ‖y − Φz‖` over `z` supported on `support`.
pub fn least_squares_on_support(
    matrix: &DenseMatrix,
    y: &Vector,
    support: &[usize],
) -> Result<LeastSquaresFit> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    if support.len() > matrix.rows() {
        return Err(Error::IllConditioned {
            support: support.to_vec(),
        });
    }
    let mut factorization = SupportFactorization::new(matrix, y)?;
    for &i in support {
        factorization.extend(i).map_err(|e| match e {
            Error::IllConditioned { .. } => Error::IllConditioned {
                support: support.to_vec(),
            },
            other => other,
        })?;
    }
    Ok(factorization.fit())
}

/// Residual of `y` after projecting onto the span of `support`, skipping
/// columns that are numerically dependent on earlier ones. Always defined.
pub fn projection_residual(matrix: &DenseMatrix, y: &Vector, support: &[usize]) -> Result<Vector> {
    let mut factorization = SupportFactorization::new(matrix, y)?;
    for &i in support {
        match factorization.extend(i) {
            Ok(()) | Err(Error::IllConditioned { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(Vector(factorization.residual))
}

/// Eigenvalues of a symmetric `n × n` matrix (row-major), ascending, by
/// cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n, "symmetric_eigenvalues: expected {n}x{n}");
    let mut m = a.to_vec();
    let total: f64 = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOL * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        assert_eq!(inner_product(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(inner_product(&v(&[1.0, 2.0]), &v(&[1.0, 2.0])).unwrap(), 5.0);
        let a = v(&[0.5, -0.5, 0.5, -0.5]);
        let b = v(&[0.5, 0.5, 0.5, 0.5]);
        assert_eq!(inner_product(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn inner_product_rejects_mismatch() {
        let err = inner_product(&v(&[1.0]), &v(&[1.0, 2.0])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn vector_rejects_non_finite() {
        assert!(matches!(Vector::new(vec![1.0, f64::NAN]), Err(Error::NonFinite(1))));
        assert!(Vector::new(vec![]).is_err());
    }

    #[test]
    fn column_examples() {
        let id = DenseMatrix::identity(2);
        assert_eq!(id.column(0).unwrap().as_slice(), &[1.0, 0.0]);
        assert_eq!(id.column(1).unwrap().as_slice(), &[0.0, 1.0]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = DenseMatrix::new(2, 3, vec![1.0, 0.0, h, 0.0, 1.0, h]).unwrap();
        let c = m.column(2).unwrap();
        assert_eq!(c.as_slice(), &[h, h]);
        assert!(matches!(id.column(2), Err(Error::IndexOutOfRange { index: 2, len: 2 })));
    }

    #[test]
    fn matrix_validates_shape_and_values() {
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::new(0, 2, vec![]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn least_squares_orthonormal_examples() {
        let id = DenseMatrix::identity(2);
        let y = v(&[3.0, 4.0]);
        let fit = least_squares_on_support(&id, &y, &[0]).unwrap();
        assert_eq!(fit.coefficient(0), Some(3.0));
        assert_eq!(fit.residual.as_slice(), &[0.0, 4.0]);
        let fit = least_squares_on_support(&id, &y, &[0, 1]).unwrap();
        assert_eq!(fit.coefficients, vec![3.0, 4.0]);
        assert_eq!(fit.residual.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn least_squares_rejects_dependent_columns() {
        let m = DenseMatrix::from_columns(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let err = least_squares_on_support(&m, &v(&[1.0, 1.0]), &[0, 1]).unwrap_err();
        match err {
            Error::IllConditioned { support } => assert_eq!(support, vec![0, 1]),
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(
            least_squares_on_support(&m, &v(&[1.0, 1.0]), &[]),
            Err(Error::EmptySupport)
        ));
    }

    #[test]
    fn extend_examples_over_identity() {
        let id = DenseMatrix::identity(2);
        let y = v(&[3.0, 4.0]);
        let f = SupportFactorization::new(&id, &y).unwrap();
        let f = extend_factorization(f, 0).unwrap();
        assert_eq!(f.coefficients(), vec![3.0]);
        let f = extend_factorization(f, 1).unwrap();
        assert_eq!(f.coefficients(), vec![3.0, 4.0]);
        assert!(f.residual_norm() == 0.0);
    }

    #[test]
    fn extend_rejects_duplicate_and_leaves_state() {
        let id = DenseMatrix::identity(3);
        let y = v(&[1.0, 2.0, 3.0]);
        let mut f = SupportFactorization::new(&id, &y).unwrap();
        f.extend(1).unwrap();
        assert!(matches!(f.extend(1), Err(Error::DuplicateIndex(1))));
        assert_eq!(f.support(), &[1]);
    }

    #[test]
    fn projection_residual_skips_dependent_columns() {
        let m = DenseMatrix::from_columns(&[vec![1.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = projection_residual(&m, &v(&[1.0, 1.0]), &[0, 1]).unwrap();
        assert_eq!(r.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn jacobi_two_by_two() {
        let g = 0.3;
        let eig = symmetric_eigenvalues(&[1.0, g, g, 1.0], 2);
        assert!((eig[0] - 0.7).abs() < 1e-15);
        assert!((eig[1] - 1.3).abs() < 1e-15);
    }

    #[test]
    fn jacobi_matches_characteristic_polynomial() {
        // Tridiagonal [2,-1;-1,2,-1;-1,2] has eigenvalues 2 - √2, 2, 2 + √2.
        let a = [2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0];
        let eig = symmetric_eigenvalues(&a, 3);
        let s = 2f64.sqrt();
        for (got, want) in eig.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }
}
