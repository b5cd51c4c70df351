//! Dense complex matrices of dimension at most 8 and the handful of 3×3 real
//! routines needed for correlation matrices.
//!
//! Qubits are labelled from 1 and ordered big-endian: qubit 1 is the most
//! significant bit of a basis index, so `|q1 q2 q3⟩` has index `4·q1 + 2·q2 + q3`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;

/// Largest dimension any matrix in this crate may have (three qubits).
pub const MAX_DIM: usize = 8;

/// Entrywise tolerance for `M == M†`.
pub const HERMITIAN_TOL: f64 = 1e-12;

const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        Ok(m)
    }

    /// Row-major construction; `data.len()` must be a perfect square.
    pub fn from_vec(data: Vec<C64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() {
            return Err(Error::domain(format!(
                "{} entries do not form a square matrix",
                data.len()
            )));
        }
        check_dim(dim)?;
        Ok(Self { dim, data })
    }

    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Result<Self> {
        Self::from_vec(
            rows.iter()
                .flat_map(|r| r.iter().map(|&x| C64::new(x, 0.0)))
                .collect(),
        )
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(values.len())?;
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        Ok(m)
    }

    /// `|v⟩⟨v|`.
    pub fn outer(v: &[C64]) -> Result<Self> {
        let mut m = Self::zeros(v.len())?;
        for i in 0..v.len() {
            for j in 0..v.len() {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn dagger(&self) -> Self {
        self.map_indexed(|m, i, j| m[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        self.map_indexed(|m, i, j| m[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map_indexed(|m, i, j| m[(i, j)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map_indexed(|m, i, j| m[(i, j)] * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<C64> {
        self.check_same(other)?;
        let n = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        Ok(acc)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let n = self.dim;
        let mut out = Self::zeros(n)?;
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `M - M†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITIAN_TOL
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn map_indexed(&self, f: impl Fn(&Self, usize, usize) -> C64) -> Self {
        let n = self.dim;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(self, i, j));
            }
        }
        Self { dim: n, data }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in add");
        self.map_indexed(|m, i, j| m[(i, j)] + rhs[(i, j)])
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in sub");
        self.map_indexed(|m, i, j| m[(i, j)] - rhs[(i, j)])
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("dimension mismatch in mul")
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::UnsupportedDimension(dim));
    }
    Ok(())
}

fn qubit_count(dim: usize) -> Result<usize> {
    match dim {
        2 => Ok(1),
        4 => Ok(2),
        8 => Ok(3),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

pub fn identity2() -> ComplexMatrix {
    ComplexMatrix::identity(2).unwrap()
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows([[0.0, 1.0], [1.0, 0.0]]).unwrap()
}

pub fn pauli_y() -> ComplexMatrix {
    let i = C64::new(0.0, 1.0);
    let zero = C64::new(0.0, 0.0);
    ComplexMatrix::from_vec(vec![zero, -i, i, zero]).unwrap()
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::diag(&[1.0, -1.0]).unwrap()
}

/// `[σx, σy, σz]`.
pub fn paulis() -> [ComplexMatrix; 3] {
    [pauli_x(), pauli_y(), pauli_z()]
}

/// Tensor product `a ⊗ b`, with `a`'s index as the major one.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (na, nb) = (a.dim, b.dim);
    let n = na * nb;
    if n > MAX_DIM {
        return Err(Error::UnsupportedDimension(n));
    }
    let mut out = ComplexMatrix::zeros(n)?;
    for i in 0..na {
        for j in 0..na {
            let aij = a[(i, j)];
            for k in 0..nb {
                for l in 0..nb {
                    out[(i * nb + k, j * nb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Traces out the qubits listed in `drop` (1-based labels).
pub fn partial_trace(rho: &ComplexMatrix, drop: &[usize]) -> Result<ComplexMatrix> {
    let n = qubit_count(rho.dim)?;
    let mut dropped = vec![false; n];
    for &q in drop {
        if q == 0 || q > n {
            return Err(Error::domain(format!(
                "qubit {q} out of range for a {n}-qubit matrix"
            )));
        }
        if dropped[q - 1] {
            return Err(Error::domain(format!("qubit {q} listed twice")));
        }
        dropped[q - 1] = true;
    }
    let keep: Vec<usize> = (0..n).filter(|&k| !dropped[k]).collect();
    let gone: Vec<usize> = (0..n).filter(|&k| dropped[k]).collect();
    if keep.is_empty() {
        return Err(Error::domain("cannot trace out every qubit"));
    }

    // Bit position of 0-based qubit k in an n-qubit index (big-endian).
    let bit = |k: usize| n - 1 - k;
    let compose = |kept_bits: usize, gone_bits: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &k) in keep.iter().enumerate() {
            if (kept_bits >> (keep.len() - 1 - pos)) & 1 == 1 {
                idx |= 1 << bit(k);
            }
        }
        for (pos, &k) in gone.iter().enumerate() {
            if (gone_bits >> (gone.len() - 1 - pos)) & 1 == 1 {
                idx |= 1 << bit(k);
            }
        }
        idx
    };

    let dk = 1usize << keep.len();
    let dg = 1usize << gone.len();
    let mut out = ComplexMatrix::zeros(dk)?;
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = C64::new(0.0, 0.0);
            for g in 0..dg {
                acc += rho[(compose(i, g), compose(j, g))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Transposes the second qubit of a two-qubit matrix.
pub fn partial_transpose(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    if rho.dim != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim,
        });
    }
    let mut out = ComplexMatrix::zeros(4)?;
    for a in 0..2 {
        for b in 0..2 {
            for ap in 0..2 {
                for bp in 0..2 {
                    out[(2 * a + b, 2 * ap + bp)] = rho[(2 * a + bp, 2 * ap + b)];
                }
            }
        }
    }
    Ok(out)
}

/// Eigen-decomposition of a Hermitian matrix; values ascending, eigenvectors in
/// the matching columns of `vectors`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Cyclic complex Jacobi. Each rotation first removes the phase of the pivot
/// `a_pq` and then applies the real symmetric Jacobi rotation.
pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<HermitianEigen> {
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL * h.frobenius_norm().max(1.0) {
        return Err(Error::domain(format!(
            "matrix is not Hermitian (defect {defect:e})"
        )));
    }
    let n = h.dim;
    let mut a = h.clone();
    let mut v = ComplexMatrix::identity(n)?;
    let scale = h.frobenius_norm().max(1.0);

    let off_norm = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&a) <= JACOBI_OFF_TOL * scale;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::numeric(format!(
                "Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (off-diagonal {:e})",
                off_norm(&a)
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g == 0.0 {
                    continue;
                }
                let phase = apq / g;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // U acts on columns p, q: U = diag(1, conj(phase)) · [[c, s], [-s, c]].
                let u_pp = C64::new(c, 0.0);
                let u_pq = C64::new(s, 0.0);
                let u_qp = -phase.conj() * s;
                let u_qq = phase.conj() * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * u_pp + akq * u_qp;
                    a[(k, q)] = akp * u_pq + akq * u_qq;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * u_pp + vkq * u_qp;
                    v[(k, q)] = vkp * u_pq + vkq * u_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
                    a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
        converged = off_norm(&a) <= JACOBI_OFF_TOL * scale;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n)?;
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, col)] = v[(k, src)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// Ascending real eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_eigen(h).map(|e| e.values)
}

pub type Vec3 = [f64; 3];

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `None` for the zero vector.
pub fn normalize(a: &Vec3) -> Option<Vec3> {
    let n = norm(a);
    if n == 0.0 || !n.is_finite() {
        None
    } else {
        Some([a[0] / n, a[1] / n, a[2] / n])
    }
}

fn axpy(alpha: f64, x: &Vec3, y: &Vec3) -> Vec3 {
    [
        alpha * x[0] + y[0],
        alpha * x[1] + y[1],
        alpha * x[2] + y[2],
    ]
}

/// Real 3×3 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RealMatrix3(pub [[f64; 3]; 3]);

impl RealMatrix3 {
    pub const ZERO: Self = Self([[0.0; 3]; 3]);
    pub const IDENTITY: Self = Self([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn diag(d: Vec3) -> Self {
        Self([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]])
    }

    pub fn from_columns(c: [Vec3; 3]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (j, col) in c.iter().enumerate() {
            for i in 0..3 {
                m[i][j] = col[i];
            }
        }
        Self(m)
    }

    pub fn column(&self, j: usize) -> Vec3 {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    pub fn outer(a: &Vec3, b: &Vec3) -> Self {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = a[i] * b[j];
            }
        }
        Self(m)
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Self([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        let m = &self.0;
        [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
    }

    /// `selfᵀ · v`.
    pub fn tr_mul_vec(&self, v: &Vec3) -> Vec3 {
        let m = &self.0;
        let mut out = [0.0; 3];
        for (i, row) in m.iter().enumerate() {
            for j in 0..3 {
                out[j] += row[j] * v[i];
            }
        }
        out
    }

    /// `selfᵀ · self`.
    pub fn gram(&self) -> Self {
        self.transpose() * *self
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_diff(&Self::ZERO)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = self.0;
        m.iter_mut().flatten().for_each(|x| *x *= s);
        Self(m)
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(self.0).expect("3x3 is a supported dimension")
    }
}

impl Mul for RealMatrix3 {
    type Output = RealMatrix3;

    fn mul(self, rhs: RealMatrix3) -> RealMatrix3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        RealMatrix3(m)
    }
}

impl Sub for RealMatrix3 {
    type Output = RealMatrix3;

    fn sub(self, rhs: RealMatrix3) -> RealMatrix3 {
        let mut m = self.0;
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] -= rhs.0[i][j];
            }
        }
        RealMatrix3(m)
    }
}

/// Coefficients `(α1, α2, α3)` of `λ³ + α1λ² + α2λ + α3` for the characteristic
/// polynomial of `m`.
pub fn charpoly3(m: &RealMatrix3) -> [f64; 3] {
    let a = &m.0;
    let minors = a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2] - a[0][2] * a[2][0]
        + a[1][1] * a[2][2]
        - a[1][2] * a[2][1];
    [-m.trace(), minors, -m.det()]
}

/// Eigenpairs of a real symmetric 3×3 matrix, values descending.
#[derive(Clone, Copy, Debug)]
pub struct SymmetricEigen3 {
    pub values: Vec3,
    pub vectors: RealMatrix3,
}

pub fn symmetric_eigen3(m: &RealMatrix3) -> Result<SymmetricEigen3> {
    let eig = hermitian_eigen(&m.to_complex())?;
    // Real symmetric input keeps every rotation real.
    let mut values = [0.0; 3];
    let mut cols = [[0.0; 3]; 3];
    for (dst, src) in (0..3).rev().enumerate() {
        values[dst] = eig.values[src];
        for k in 0..3 {
            cols[dst][k] = eig.vectors[(k, src)].re;
        }
    }
    Ok(SymmetricEigen3 {
        values,
        vectors: RealMatrix3::from_columns(cols),
    })
}

/// `r = u · diag(q) · vᵀ`, `q` non-negative and descending.
#[derive(Clone, Copy, Debug)]
pub struct Svd3 {
    pub u: RealMatrix3,
    pub q: Vec3,
    pub v: RealMatrix3,
}

impl Svd3 {
    pub fn reconstruct(&self) -> RealMatrix3 {
        self.u * RealMatrix3::diag(self.q) * self.v.transpose()
    }
}

/// Unit vector orthogonal to every vector in `basis`, favouring the coordinate
/// axis least aligned with them.
fn complete(basis: &[Vec3]) -> Vec3 {
    let axes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut best = axes[0];
    let mut best_norm = -1.0;
    for e in axes {
        let mut w = e;
        for _ in 0..2 {
            for b in basis {
                w = axpy(-dot(b, &w), b, &w);
            }
        }
        let n = norm(&w);
        if n > best_norm {
            best_norm = n;
            best = w;
        }
    }
    normalize(&best).expect("some axis is outside a span of at most two vectors")
}

fn orthogonalize(w: &Vec3, basis: &[Vec3]) -> Vec3 {
    let mut r = *w;
    for _ in 0..2 {
        for b in basis {
            r = axpy(-dot(b, &r), b, &r);
        }
    }
    r
}

/// SVD from the eigenvectors of `rᵀr`. Right vectors are sign-fixed so their
/// first non-negligible component is positive; left vectors come from a
/// Gram–Schmidt pass over `r·v`, which keeps tiny singular values accurate.
pub fn svd3(r: &RealMatrix3) -> Result<Svd3> {
    let eig = symmetric_eigen3(&r.gram())?;
    let mut vcols = [
        eig.vectors.column(0),
        eig.vectors.column(1),
        eig.vectors.column(2),
    ];
    for v in vcols.iter_mut() {
        if let Some(&lead) = v.iter().find(|x| x.abs() > 1e-12) {
            if lead < 0.0 {
                *v = [-v[0], -v[1], -v[2]];
            }
        }
    }
    let w: Vec<Vec3> = vcols.iter().map(|v| r.mul_vec(v)).collect();

    let mut u = [[0.0; 3]; 3];
    let mut q = [0.0; 3];

    u[0] = match normalize(&w[0]) {
        Some(x) => {
            q[0] = norm(&w[0]);
            x
        }
        None => complete(&[]),
    };
    let r2 = orthogonalize(&w[1], &[u[0]]);
    u[1] = match normalize(&r2) {
        Some(x) => {
            q[1] = dot(&x, &w[1]).max(0.0);
            x
        }
        None => complete(&[u[0]]),
    };
    let mut u3 = cross(&u[0], &u[1]);
    let mut q3 = dot(&u3, &w[2]);
    if q3 < 0.0 {
        u3 = [-u3[0], -u3[1], -u3[2]];
        q3 = -q3;
    }
    u[2] = u3;
    q[2] = q3;

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| q[j].total_cmp(&q[i]));
    Ok(Svd3 {
        u: RealMatrix3::from_columns([u[order[0]], u[order[1]], u[order[2]]]),
        q: [q[order[0]], q[order[1]], q[order[2]]],
        v: RealMatrix3::from_columns([vcols[order[0]], vcols[order[1]], vcols[order[2]]]),
    })
}
