//! Dense symmetric matrices and the spectral kernels built on them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default relative tolerance for PSD checks and eigenvalue clamping.
pub const TOL_PSD: f64 = 1e-10;

const MAX_SWEEPS: usize = 64;
const JACOBI_REL_TOL: f64 = 1e-14;
const LOEWNER_DEGENERATE: f64 = 1e-12;
/// Eigenvalues at or below this fraction of the spectral radius are rounding noise.
pub const EIG_NOISE_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise-summed inner product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= 16 {
        let mut s = 0.0;
        for i in 0..a.len() {
            s += a[i] * b[i];
        }
        return s;
    }
    let mid = a.len() / 2;
    dot(&a[..mid], &b[..mid]) + dot(&a[mid..], &b[mid..])
}

fn pairwise_map(xs: &[f64], f: &impl Fn(f64) -> f64) -> f64 {
    if xs.len() <= 16 {
        let mut s = 0.0;
        for &x in xs {
            s += f(x);
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_map(&xs[..mid], f) + pairwise_map(&xs[mid..], f)
}

pub fn norm1(x: &[f64]) -> f64 {
    pairwise_map(x, &f64::abs)
}

pub fn norm2(x: &[f64]) -> f64 {
    // scale first so tiny and huge vectors survive squaring
    let m = norm_inf(x);
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * pairwise_map(x, &|v| (v / m) * (v / m)).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// Dense symmetric matrix stored row-major. Every constructor symmetrizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "dimension must be positive");
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = c;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = v;
        }
        m
    }

    /// Builds from a row-major buffer, replacing A by (A + Aᵀ)/2.
    pub fn from_row_major(n: usize, mut data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(invalid(format!("expected {n}x{n} entries, got {}", data.len())));
        }
        for i in 0..n {
            for j in i + 1..n {
                let s = 0.5 * (data[i * n + j] + data[j * n + i]);
                data[i * n + j] = s;
                data[j * n + i] = s;
            }
        }
        Ok(SymMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(invalid("rows must form a square matrix"));
        }
        Self::from_row_major(n, rows.concat())
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = f(i, j);
            }
        }
        Self::from_row_major(n, data).expect("square by construction")
    }

    /// x xᵀ
    pub fn outer(x: &[f64]) -> Self {
        let n = x.len();
        let mut m = Self::zeros(n);
        m.add_outer(x, 1.0);
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.get(i, j) == 0.0))
    }

    pub fn trace(&self) -> f64 {
        pairwise_sum(&self.diag())
    }

    pub fn frobenius(&self) -> f64 {
        norm2(&self.data)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.data)
    }

    /// self += w · x xᵀ
    pub fn add_outer(&mut self, x: &[f64], w: f64) {
        assert_eq!(x.len(), self.n);
        let n = self.n;
        for i in 0..n {
            let wi = w * x[i];
            for j in 0..n {
                self.data[i * n + j] += wi * x[j];
            }
        }
    }

    pub fn add_identity(&self, c: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m.data[i * self.n + i] += c;
        }
        m
    }

    pub fn scale(&self, c: f64) -> Self {
        SymMatrix { n: self.n, data: self.data.iter().map(|v| c * v).collect() }
    }

    pub fn scale_in_place(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        assert_eq!(self.n, other.n);
        SymMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// xᵀ A x
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    /// Frobenius inner product ⟨A, B⟩.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        dot(&self.data, &other.data)
    }

    /// B A B for symmetric B (stays symmetric).
    pub fn congruence(&self, b: &SymMatrix) -> SymMatrix {
        let n = self.n;
        let ab = mat_mul(n, &self.data, &b.data);
        let bab = mat_mul(n, &b.data, &ab);
        SymMatrix::from_row_major(n, bab).expect("square")
    }

    /// Symmetrized product (AB + BA)/2.
    pub fn jordan(&self, b: &SymMatrix) -> SymMatrix {
        let n = self.n;
        let ab = mat_mul(n, &self.data, &b.data);
        SymMatrix::from_row_major(n, ab).expect("square")
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMatrix::from_rows(&rows)
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.to_rows()
    }
}

/// Row-major general product of two n×n buffers.
pub(crate) fn mat_mul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let bt = transpose(n, b);
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let ar = &a[i * n..(i + 1) * n];
        for j in 0..n {
            out[i * n + j] = dot(ar, &bt[j * n..(j + 1) * n]);
        }
    }
    out
}

pub(crate) fn transpose(n: usize, a: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

/// Spectral factorization A = Q diag(λ) Qᵀ with λ ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigDecomp {
    values: Vec<f64>,
    /// row-major, column k is the k-th eigenvector
    vectors: Vec<f64>,
}

impl EigDecomp {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// max |λ|
    pub fn op_norm(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }

    /// Eigenvector matrix Q, row-major.
    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| self.vectors[i * n + k]).collect()
    }

    /// Q diag(f(λ)) Qᵀ
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        self.with_values(&fl)
    }

    pub fn with_values(&self, fl: &[f64]) -> SymMatrix {
        let n = self.dim();
        let q = &self.vectors;
        let mut out = vec![0.0; n * n];
        let mut w = vec![0.0; n];
        for i in 0..n {
            for k in 0..n {
                w[k] = q[i * n + k] * fl[k];
            }
            for j in i..n {
                let v = dot(&w, &q[j * n..(j + 1) * n]);
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        SymMatrix { n, data: out }
    }

    /// Same decomposition with eigenvalues at or below the noise floor set to zero.
    pub fn denoised(&self) -> EigDecomp {
        let cut = EIG_NOISE_FLOOR * self.op_norm();
        let values = self.values.iter().map(|&l| if l <= cut { 0.0 } else { l }).collect();
        EigDecomp { values, vectors: self.vectors.clone() }
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.with_values(&self.values.clone())
    }

    /// Qᵀ x
    pub fn to_eigenbasis(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let qt = transpose(n, &self.vectors);
        (0..n).map(|k| dot(&qt[k * n..(k + 1) * n], x)).collect()
    }

    /// Q y
    pub fn from_eigenbasis(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| dot(&self.vectors[i * n..(i + 1) * n], y)).collect()
    }

    /// Q diag(f(λ)) Qᵀ x without forming the matrix.
    pub fn apply_fn(&self, x: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut y = self.to_eigenbasis(x);
        for (yk, &l) in y.iter_mut().zip(&self.values) {
            *yk *= f(l);
        }
        self.from_eigenbasis(&y)
    }
}

fn off_diagonal_norm(n: usize, a: &[f64]) -> f64 {
    let mut off = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off.push(a[i * n + j]);
            }
        }
    }
    if off.is_empty() {
        0.0
    } else {
        norm2(&off)
    }
}

fn sweep(n: usize, m: &mut [f64], v: &mut [f64]) {
    for p in 0..n {
        for q in p + 1..n {
            let apq = m[p * n + q];
            if apq == 0.0 {
                continue;
            }
            let app = m[p * n + p];
            let aqq = m[q * n + q];
            let theta = (aqq - app) / (2.0 * apq);
            let t = if theta.abs() > 1e150 {
                0.5 / theta
            } else {
                theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
            };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let tau = s / (1.0 + c);
            m[p * n + p] = app - t * apq;
            m[q * n + q] = aqq + t * apq;
            m[p * n + q] = 0.0;
            m[q * n + p] = 0.0;
            for r in 0..n {
                if r == p || r == q {
                    continue;
                }
                let arp = m[r * n + p];
                let arq = m[r * n + q];
                let nrp = arp - s * (arq + tau * arp);
                let nrq = arq + s * (arp - tau * arq);
                m[r * n + p] = nrp;
                m[p * n + r] = nrp;
                m[r * n + q] = nrq;
                m[q * n + r] = nrq;
            }
            for r in 0..n {
                let vrp = v[r * n + p];
                let vrq = v[r * n + q];
                v[r * n + p] = vrp - s * (vrq + tau * vrp);
                v[r * n + q] = vrq + s * (vrp - tau * vrq);
            }
        }
    }
}

/// Cyclic Jacobi eigendecomposition.
pub fn eig_sym(a: &SymMatrix) -> Result<EigDecomp> {
    if !a.is_finite() {
        return Err(invalid("matrix has non-finite entries"));
    }
    let n = a.dim();
    let mut m = a.data.clone();
    let mut v = SymMatrix::identity(n).data;
    let target = JACOBI_REL_TOL * a.frobenius();

    // one sweep past the threshold pushes residual mass far below it
    let mut done = false;
    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(n, &m);
        if off == 0.0 || done {
            break;
        }
        done = off <= target;
        sweep(n, &mut m, &mut v);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&k| m[k * n + k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_k, &k) in order.iter().enumerate() {
        for r in 0..n {
            vectors[r * n + new_k] = v[r * n + k];
        }
    }
    Ok(EigDecomp { values, vectors })
}

/// Clamps eigenvalues that are negative within `TOL_PSD·‖A‖_op`; errors otherwise.
pub(crate) fn check_psd_spectrum(e: &EigDecomp) -> Result<()> {
    let allowed = -TOL_PSD * e.op_norm();
    if e.min() < allowed {
        return Err(Error::NotPsd { min_eig: e.min(), allowed });
    }
    Ok(())
}

/// Errors unless `a` is PSD within `TOL_PSD`.
pub fn check_psd(a: &SymMatrix) -> Result<()> {
    check_psd_spectrum(&eig_sym(a)?)
}

pub fn sqrt_psd(a: &SymMatrix) -> Result<SymMatrix> {
    let e = eig_sym(a)?;
    check_psd_spectrum(&e)?;
    Ok(e.denoised().map(|l| l.max(0.0).sqrt()))
}

pub fn log_psd(a: &SymMatrix) -> Result<SymMatrix> {
    let e = eig_sym(a)?;
    if e.min() <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eig: e.min() });
    }
    Ok(e.map(f64::ln))
}

/// Divided difference of log at (a, b).
fn loewner_log(a: f64, b: f64) -> f64 {
    if (a - b).abs() <= LOEWNER_DEGENERATE * a.max(b) {
        1.0 / a
    } else {
        (a.ln() - b.ln()) / (a - b)
    }
}

/// Fréchet derivative of the matrix logarithm at X in direction A.
pub fn dlog(x: &SymMatrix, a: &SymMatrix) -> Result<SymMatrix> {
    if x.dim() != a.dim() {
        return Err(invalid("dimension mismatch"));
    }
    if !a.is_finite() {
        return Err(invalid("direction has non-finite entries"));
    }
    let e = eig_sym(x)?;
    if e.min() <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eig: e.min() });
    }
    let n = x.dim();
    let q = e.vectors();
    let qt = transpose(n, q);
    let mut t = mat_mul(n, &mat_mul(n, &qt, a.as_slice()), q);
    let l = e.values();
    for i in 0..n {
        for j in 0..n {
            t[i * n + j] *= loewner_log(l[i], l[j]);
        }
    }
    SymMatrix::from_row_major(n, mat_mul(n, &mat_mul(n, q, &t), &qt))
}

pub fn op_norm(a: &SymMatrix) -> Result<f64> {
    Ok(eig_sym(a)?.op_norm())
}

/// λ_min(A) ≥ −tol·max(1, ‖A‖_op)
pub fn is_psd(a: &SymMatrix, tol: f64) -> Result<bool> {
    let e = eig_sym(a)?;
    Ok(e.min() >= -tol * e.op_norm().max(1.0))
}

/// A ⪯ B
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(invalid("dimension mismatch"));
    }
    is_psd(&b.sub(a), tol)
}
