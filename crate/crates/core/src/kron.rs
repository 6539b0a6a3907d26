//! Explicit Kronecker-product query matrices over small domains.
//!
//! Everything here is deliberately naive: it is the reference the in-axis
//! transforms are checked against and the baseline they are timed against.
//! Vectors are row-major with attributes in ascending index order, so a
//! product over attributes `i < j < …` is `F_i ⊗ F_j ⊗ …`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::{AttrSet, DataTable, Domain, Marginal, NdArray};

/// Largest row or column count of a matrix built by [`build_query`].
pub const MAX_DENSE_DIM: usize = 10_000;

/// Largest domain accepted by [`brute_force_mle`].
pub const MAX_MLE_CELLS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::ShapeMismatch {
                expected: vec![rows, cols],
                found: vec![data.len()],
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Constant `rows × cols` matrix.
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                expected: vec![self.cols],
                found: vec![other.rows],
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let src = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in row.iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::ShapeMismatch {
                expected: vec![self.cols],
                found: vec![x.len()],
            });
        }
        Ok(self
            .data
            .chunks_exact(self.cols.max(1))
            .take(self.rows)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn kron(&self, other: &DenseMatrix) -> DenseMatrix {
        let (rows, cols) = (self.rows * other.rows, self.cols * other.cols);
        let mut out = DenseMatrix::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.data[i * self.cols + j];
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.data[(i * other.rows + k) * cols + j * other.cols + l] = a * other.data[k * other.cols + l];
                    }
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> Result<f64> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::ShapeMismatch {
                expected: vec![self.rows, self.cols],
                found: vec![other.rows, other.cols],
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn from_nalgebra(m: &DMatrix<f64>) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                out.data[r * m.ncols() + c] = m[(r, c)];
            }
        }
        out
    }
}

/// Subtraction matrix `S = [-1 | I]` of shape `(ℓ-1) × ℓ`.
pub fn sub_matrix(l: usize) -> Result<DenseMatrix> {
    if l < 2 {
        return Err(Error::InvalidParameter(format!(
            "subtraction matrix needs ℓ ≥ 2, got {l}"
        )));
    }
    let mut s = DenseMatrix::zeros(l - 1, l);
    for r in 0..l - 1 {
        s.data[r * l] = -1.0;
        s.data[r * l + r + 1] = 1.0;
    }
    Ok(s)
}

/// Pseudo-inverse of [`sub_matrix`]: `[0; I] - (1/ℓ)·ones`, shape `ℓ × (ℓ-1)`.
pub fn sub_pinv(l: usize) -> Result<DenseMatrix> {
    if l < 2 {
        return Err(Error::InvalidParameter(format!(
            "subtraction matrix needs ℓ ≥ 2, got {l}"
        )));
    }
    let mut s = DenseMatrix::filled(l, l - 1, -1.0 / l as f64);
    for c in 0..l - 1 {
        s.data[(c + 1) * (l - 1) + c] += 1.0;
    }
    Ok(s)
}

/// Linear query to build explicitly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryKind {
    /// `M_γ`, data vector to γ-marginal.
    Marginal(AttrSet),
    /// `R_τ`, data vector to τ-residual.
    Residual(AttrSet),
    /// `T_{τ,γ}`, γ-marginal to τ-residual.
    Decomp { tau: AttrSet, gamma: AttrSet },
    /// `T⁺_{τ,γ}`, τ-residual to its component of the γ-marginal.
    Recon { tau: AttrSet, gamma: AttrSet },
}

/// Per-attribute factors of a query, in ascending attribute order.
pub fn query_factors(domain: &Domain, kind: &QueryKind) -> Result<Vec<DenseMatrix>> {
    let check_sub = |tau: &AttrSet, gamma: &AttrSet| -> Result<()> {
        domain.check(gamma)?;
        if tau.is_subset(gamma) {
            Ok(())
        } else {
            Err(Error::NotSubset {
                sub: tau.as_slice().to_vec(),
                sup: gamma.as_slice().to_vec(),
            })
        }
    };
    match kind {
        QueryKind::Marginal(g) => {
            domain.check(g)?;
            (0..domain.len())
                .map(|i| {
                    let n = domain.size(i);
                    Ok(if g.contains(i) {
                        DenseMatrix::identity(n)
                    } else {
                        DenseMatrix::filled(1, n, 1.0)
                    })
                })
                .collect()
        }
        QueryKind::Residual(t) => {
            domain.check(t)?;
            (0..domain.len())
                .map(|i| {
                    let n = domain.size(i);
                    if t.contains(i) {
                        sub_matrix(n)
                    } else {
                        Ok(DenseMatrix::filled(1, n, 1.0))
                    }
                })
                .collect()
        }
        QueryKind::Decomp { tau, gamma } => {
            check_sub(tau, gamma)?;
            gamma
                .iter()
                .map(|i| {
                    let n = domain.size(i);
                    if tau.contains(i) {
                        sub_matrix(n)
                    } else {
                        Ok(DenseMatrix::filled(1, n, 1.0))
                    }
                })
                .collect()
        }
        QueryKind::Recon { tau, gamma } => {
            check_sub(tau, gamma)?;
            gamma
                .iter()
                .map(|i| {
                    let n = domain.size(i);
                    if tau.contains(i) {
                        sub_pinv(n)
                    } else {
                        Ok(DenseMatrix::filled(n, 1, 1.0 / n as f64))
                    }
                })
                .collect()
        }
    }
}

/// Explicit Kronecker product of a list of factors.
pub fn kron_all(factors: &[DenseMatrix]) -> DenseMatrix {
    factors.iter().fold(DenseMatrix::identity(1), |acc, f| acc.kron(f))
}

/// Explicit matrix of a query; each dimension is capped at [`MAX_DENSE_DIM`].
pub fn build_query(domain: &Domain, kind: &QueryKind) -> Result<DenseMatrix> {
    let factors = query_factors(domain, kind)?;
    let rows = factors.iter().try_fold(1usize, |a, f| a.checked_mul(f.rows()));
    let cols = factors.iter().try_fold(1usize, |a, f| a.checked_mul(f.cols()));
    match (rows, cols) {
        (Some(r), Some(c)) if r <= MAX_DENSE_DIM && c <= MAX_DENSE_DIM => Ok(kron_all(&factors)),
        _ => Err(Error::SizeCap(format!(
            "dense query exceeds {MAX_DENSE_DIM} rows or columns"
        ))),
    }
}

/// Multiply `(F_1 ⊗ … ⊗ F_m) x` without forming the product, one mode at a
/// time. `x` is the row-major flattening of a tensor with axis `k` of length
/// `F_k.cols()`. Factors are treated as dense; zero entries are not skipped.
pub fn kron_matvec(factors: &[DenseMatrix], x: &[f64]) -> Result<Vec<f64>> {
    let mut shape: Vec<usize> = factors.iter().map(DenseMatrix::cols).collect();
    let expected: usize = shape.iter().product();
    if expected != x.len() {
        return Err(Error::ShapeMismatch {
            expected: shape,
            found: vec![x.len()],
        });
    }
    let mut cur = x.to_vec();
    for (k, f) in factors.iter().enumerate() {
        let outer: usize = shape[..k].iter().product();
        let inner: usize = shape[k + 1..].iter().product();
        let (r, c) = (f.rows(), f.cols());
        let mut next = vec![0.0; outer * r * inner];
        for o in 0..outer {
            let src = &cur[o * c * inner..(o + 1) * c * inner];
            let dst = &mut next[o * r * inner..(o + 1) * r * inner];
            for i in 0..r {
                let out_row = &mut dst[i * inner..(i + 1) * inner];
                for j in 0..c {
                    let a = f.get(i, j);
                    for (d, s) in out_row.iter_mut().zip(&src[j * inner..(j + 1) * inner]) {
                        *d += a * s;
                    }
                }
            }
        }
        cur = next;
        shape[k] = r;
    }
    Ok(cur)
}

/// Data vector `vec(𝒜)`: record counts over the full domain.
pub fn data_vector(table: &DataTable) -> Result<Vec<f64>> {
    let all = AttrSet::new((0..table.domain().len()).collect());
    Ok(table.marginal(&all)?.into_values().into_data())
}

/// `V_τ = T_{τ,τ} T_{τ,τ}ᵀ`, the covariance of a residual measured from
/// unit-variance iid marginal noise.
pub fn residual_covariance(domain: &Domain, tau: &AttrSet) -> Result<DenseMatrix> {
    let t = build_query(
        domain,
        &QueryKind::Decomp {
            tau: tau.clone(),
            gamma: tau.clone(),
        },
    )?;
    t.matmul(&t.transpose())
}

/// Pseudo-inverse of a symmetric matrix through its eigendecomposition.
/// Eigenvalues below `λ_max · 1e-10` are treated as zero.
pub fn pinv_symmetric(m: &DenseMatrix) -> Result<DenseMatrix> {
    if m.rows() != m.cols() {
        return Err(Error::ShapeMismatch {
            expected: vec![m.rows(), m.rows()],
            found: vec![m.rows(), m.cols()],
        });
    }
    if m.max_abs_diff(&m.transpose())? > 1e-9 * m.data().iter().fold(1.0f64, |a, b| a.max(b.abs())) {
        return Err(Error::InvalidParameter("matrix is not symmetric".into()));
    }
    let eig = m.to_nalgebra().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let cut = lmax * 1e-10;
    let inv = eig.eigenvalues.map(|l| if l.abs() > cut { 1.0 / l } else { 0.0 });
    let q = &eig.eigenvectors;
    let p = q * DMatrix::from_diagonal(&inv) * q.transpose();
    Ok(DenseMatrix::from_nalgebra(&p))
}

/// Noisy observation fed to [`brute_force_mle`].
#[derive(Debug, Clone, PartialEq)]
pub enum OracleMeasurement {
    /// `z ~ N(R_τ x, σ² V_τ)`.
    Residual { tau: AttrSet, z: NdArray, variance: f64 },
    /// `y ~ N(M_γ x, σ² I)`.
    Marginal { gamma: AttrSet, y: NdArray, variance: f64 },
}

/// Generalized least squares over the full data vector: minimize
/// `Σ (1/2σ²) ‖Q x - y‖²_{Σ⁻¹}` by a pseudo-inverse solve of the normal
/// equations and answer each requested marginal as `M_γ x̂`. Of all minimizers the minimum-norm one is
/// used, which sets unmeasured residual directions to zero.
pub fn brute_force_mle(
    measurements: &[OracleMeasurement],
    workload: &[AttrSet],
    domain: &Domain,
) -> Result<BTreeMap<AttrSet, Marginal>> {
    let total = domain.total_size();
    if total > MAX_MLE_CELLS as f64 {
        return Err(Error::SizeCap(format!(
            "brute-force solve limited to {MAX_MLE_CELLS} cells, domain has {total}"
        )));
    }
    let n = total as usize;
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DMatrix::<f64>::zeros(n, 1);
    for m in measurements {
        let (q, cov_inv, y, variance) = match m {
            OracleMeasurement::Residual { tau, z, variance } => {
                let q = build_query(domain, &QueryKind::Residual(tau.clone()))?;
                let v = residual_covariance(domain, tau)?.to_nalgebra();
                let vi = v
                    .try_inverse()
                    .ok_or_else(|| Error::Solver("singular residual covariance".into()))?;
                (q, vi, z, *variance)
            }
            OracleMeasurement::Marginal { gamma, y, variance } => {
                let q = build_query(domain, &QueryKind::Marginal(gamma.clone()))?;
                let k = q.rows();
                (q, DMatrix::identity(k, k), y, *variance)
            }
        };
        if y.len() != q.rows() {
            return Err(Error::ShapeMismatch {
                expected: vec![q.rows()],
                found: vec![y.len()],
            });
        }
        let qa = q.to_nalgebra();
        let ya = DMatrix::from_column_slice(y.len(), 1, y.data());
        let weighted = qa.transpose() * cov_inv / variance;
        gram += &weighted * &qa;
        rhs += weighted * ya;
    }
    let gram = DenseMatrix::from_nalgebra(&gram);
    let x = pinv_symmetric(&gram)?.to_nalgebra() * rhs;
    let x: Vec<f64> = x.iter().cloned().collect();

    let mut out = BTreeMap::new();
    for g in workload {
        let mg = build_query(domain, &QueryKind::Marginal(g.clone()))?;
        let vals = NdArray::new(domain.marginal_shape(g), mg.matvec(&x)?)?;
        out.insert(g.clone(), Marginal::new(domain, g.clone(), vals)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{decomp, recon};

    #[test]
    fn subtraction_matrices() {
        let s = sub_matrix(2).unwrap();
        assert_eq!(s.data(), &[-1.0, 1.0]);
        let sp = sub_pinv(2).unwrap();
        assert_eq!(sp.data(), &[-0.5, 0.5]);
        let s4 = sub_matrix(4).unwrap();
        assert_eq!(s4.matvec(&[14.0, 19.0, 23.0, 44.0]).unwrap(), vec![5.0, 9.0, 30.0]);
        for l in 2..=8 {
            let prod = sub_matrix(l).unwrap().matmul(&sub_pinv(l).unwrap()).unwrap();
            assert!(prod.max_abs_diff(&DenseMatrix::identity(l - 1)).unwrap() < 1e-14);
        }
        assert!(sub_matrix(1).is_err());
        assert!(sub_pinv(0).is_err());
    }

    #[test]
    fn kron_shapes_and_values() {
        let a = DenseMatrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        let b = DenseMatrix::new(2, 1, vec![3.0, 4.0]).unwrap();
        let k = a.kron(&b);
        assert_eq!((k.rows(), k.cols()), (2, 2));
        assert_eq!(k.data(), &[3.0, 6.0, 4.0, 8.0]);
    }

    #[test]
    fn shuffle_matches_explicit_product() {
        let d = Domain::from_sizes(vec![3, 2, 4]).unwrap();
        let kind = QueryKind::Recon {
            tau: AttrSet::new(vec![0, 2]),
            gamma: AttrSet::new(vec![0, 1, 2]),
        };
        let f = query_factors(&d, &kind).unwrap();
        let dense = kron_all(&f);
        let x: Vec<f64> = (0..dense.cols()).map(|i| (i as f64 * 0.7).sin()).collect();
        let a = dense.matvec(&x).unwrap();
        let b = kron_matvec(&f, &x).unwrap();
        assert!(a.iter().zip(&b).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn in_axis_matches_dense() {
        let d = Domain::from_sizes(vec![4, 3]).unwrap();
        let g = AttrSet::new(vec![0, 1]);
        let vals: Vec<f64> = vec![1., 3., 10., 2., 4., 13., 3., 5., 15., 6., 10., 28.];
        let m = Marginal::new(&d, g.clone(), NdArray::new(vec![4, 3], vals.clone()).unwrap()).unwrap();
        for tau in g.subsets().unwrap() {
            let t = build_query(
                &d,
                &QueryKind::Decomp {
                    tau: tau.clone(),
                    gamma: g.clone(),
                },
            )
            .unwrap();
            let z = decomp(&m, &tau).unwrap();
            let dz = t.matvec(&vals).unwrap();
            assert!(z.values().data().iter().zip(&dz).all(|(a, b)| (a - b).abs() < 1e-12));
            let tp = build_query(
                &d,
                &QueryKind::Recon {
                    tau: tau.clone(),
                    gamma: g.clone(),
                },
            )
            .unwrap();
            let r = recon(&z, &g, &d).unwrap();
            let dr = tp.matvec(&dz).unwrap();
            assert!(r.values().data().iter().zip(&dr).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn residual_covariance_form() {
        let d = Domain::from_sizes(vec![3]).unwrap();
        let v = residual_covariance(&d, &AttrSet::singleton(0)).unwrap();
        assert_eq!(v.data(), &[2.0, 1.0, 1.0, 2.0]);
        let e = residual_covariance(&d, &AttrSet::empty()).unwrap();
        assert_eq!(e.data(), &[1.0]);
    }

    #[test]
    fn size_caps() {
        let d = Domain::from_sizes(vec![200, 200]).unwrap();
        assert!(matches!(
            build_query(&d, &QueryKind::Marginal(AttrSet::new(vec![0, 1]))),
            Err(Error::SizeCap(_))
        ));
        assert!(matches!(brute_force_mle(&[], &[], &d), Err(Error::SizeCap(_))));
    }

    #[test]
    fn mle_weighted_average_of_repeats() {
        let d = Domain::from_sizes(vec![2, 2]).unwrap();
        let e = AttrSet::empty();
        let ms = vec![
            OracleMeasurement::Residual {
                tau: e.clone(),
                z: NdArray::scalar(10.0),
                variance: 1.0,
            },
            OracleMeasurement::Residual {
                tau: e.clone(),
                z: NdArray::scalar(20.0),
                variance: 3.0,
            },
        ];
        let out = brute_force_mle(&ms, std::slice::from_ref(&e), &d).unwrap();
        assert!((out[&e].values().data()[0] - 12.5).abs() < 1e-10);
    }
}
