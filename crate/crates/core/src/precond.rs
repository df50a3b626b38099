//! Structured preconditioner cones, their projection and the induced norms.
//!
//! Each cone is the PSD part of a matrix subalgebra containing the identity:
//! multiples of the identity, diagonal matrices, all symmetric matrices, and
//! `A ⊗ I_{dR}`. For the Kronecker cone a vector of length `dL·dR` is read as
//! a `dL × dR` matrix with the left index varying slowest.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::symkernels::{
    check_psd_spectrum, dot, eig_sym, norm1, norm2, norm_inf, EigDecomp, SymMatrix,
};

/// Relative cutoff on the square's spectrum below which a direction counts as null.
pub const PINV_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PreconditionerSet {
    Scalar { dim: usize },
    Diagonal { dim: usize },
    Full { dim: usize },
    KronLeft { d_left: usize, d_right: usize },
}

impl PreconditionerSet {
    pub fn dim(&self) -> usize {
        match *self {
            Self::Scalar { dim } | Self::Diagonal { dim } | Self::Full { dim } => dim,
            Self::KronLeft { d_left, d_right } => d_left * d_right,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Scalar { .. } => "scalar",
            Self::Diagonal { .. } => "diagonal",
            Self::Full { .. } => "full",
            Self::KronLeft { .. } => "kron_left",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Scalar { dim } | Self::Diagonal { dim } | Self::Full { dim } => dim >= 1,
            Self::KronLeft { d_left, d_right } => d_left >= 1 && d_right >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("{} set needs positive dimensions", self.name())))
        }
    }

    /// True when every pair of cone members commutes.
    pub fn is_commutative(&self) -> bool {
        matches!(self, Self::Scalar { .. } | Self::Diagonal { .. })
            || matches!(*self, Self::Full { dim: 1 })
            || matches!(*self, Self::KronLeft { d_left: 1, .. })
    }

    pub(crate) fn check_vec(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(invalid(format!(
                "vector has length {}, {} set has dimension {}",
                x.len(),
                self.name(),
                self.dim()
            )));
        }
        Ok(())
    }

    fn check_mat(&self, m: &SymMatrix) -> Result<()> {
        if m.dim() != self.dim() {
            return Err(invalid(format!(
                "matrix has dimension {}, {} set has dimension {}",
                m.dim(),
                self.name(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Whether `h` is PSD and lies in the subalgebra, up to `tol` relative to its largest entry.
    pub fn contains(&self, h: &SymMatrix, tol: f64) -> Result<bool> {
        self.check_mat(h)?;
        let square = project_square(self, h)?;
        let scale = h.max_abs().max(f64::MIN_POSITIVE);
        if h.sub(&square).max_abs() > tol * scale {
            return Ok(false);
        }
        crate::symkernels::is_psd(h, tol)
    }
}

/// Right partial trace of a (dL·dR)² matrix: contracts the right index.
pub fn partial_trace_right(m: &SymMatrix, d_left: usize, d_right: usize) -> Result<SymMatrix> {
    if m.dim() != d_left * d_right {
        return Err(invalid("partial trace dimension mismatch"));
    }
    Ok(SymMatrix::from_fn(d_left, |i, k| {
        let terms: Vec<f64> = (0..d_right).map(|j| m.get(i * d_right + j, k * d_right + j)).collect();
        crate::symkernels::pairwise_sum(&terms)
    }))
}

/// A ⊗ I_r
pub fn kron_identity(a: &SymMatrix, r: usize) -> SymMatrix {
    let dl = a.dim();
    SymMatrix::from_fn(dl * r, |p, q| if p % r == q % r { a.get(p / r, q / r) } else { 0.0 })
}

/// Frobenius projection of `m` onto the set's subalgebra (no PSD check).
pub fn project_square(set: &PreconditionerSet, m: &SymMatrix) -> Result<SymMatrix> {
    set.validate()?;
    set.check_mat(m)?;
    let d = set.dim();
    Ok(match *set {
        PreconditionerSet::Scalar { .. } => SymMatrix::scaled_identity(d, m.trace() / d as f64),
        PreconditionerSet::Diagonal { .. } => SymMatrix::from_diag(&m.diag()),
        PreconditionerSet::Full { .. } => m.clone(),
        PreconditionerSet::KronLeft { d_left, d_right } => {
            let pt = partial_trace_right(m, d_left, d_right)?;
            kron_identity(&pt.scale(1.0 / d_right as f64), d_right)
        }
    })
}

/// The projected preconditioner kept in factored form.
///
/// Stores the spectrum of the square; the root's eigenvalues are the
/// square roots of the (clamped) square eigenvalues.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    set: PreconditionerSet,
    form: Form,
}

#[derive(Debug, Clone)]
enum Form {
    Scalar(f64),
    Diagonal(Vec<f64>),
    Full(EigDecomp),
    /// factor F with square = F ⊗ I
    KronLeft(EigDecomp),
}

impl Preconditioner {
    /// Projects `m` (assumed PSD up to rounding; negative spectrum is clamped).
    pub fn new(set: &PreconditionerSet, m: &SymMatrix) -> Result<Self> {
        set.validate()?;
        set.check_mat(m)?;
        if !m.is_finite() {
            return Err(Error::Numerical("accumulator has non-finite entries".into()));
        }
        let d = set.dim();
        let form = match *set {
            PreconditionerSet::Scalar { .. } => Form::Scalar((m.trace() / d as f64).max(0.0)),
            PreconditionerSet::Diagonal { .. } => {
                Form::Diagonal(m.diag().into_iter().map(|v| v.max(0.0)).collect())
            }
            PreconditionerSet::Full { .. } => Form::Full(eig_sym(m)?.denoised()),
            PreconditionerSet::KronLeft { d_left, d_right } => {
                let pt = partial_trace_right(m, d_left, d_right)?;
                Form::KronLeft(eig_sym(&pt.scale(1.0 / d_right as f64))?.denoised())
            }
        };
        Ok(Preconditioner { set: *set, form })
    }

    pub fn set(&self) -> &PreconditionerSet {
        &self.set
    }

    fn reps(&self) -> usize {
        match self.set {
            PreconditionerSet::KronLeft { d_right, .. } => d_right,
            _ => 1,
        }
    }

    /// Spectrum of the square (with multiplicity), unclamped for Full/KronLeft.
    fn square_spectrum(&self) -> Vec<f64> {
        match &self.form {
            Form::Scalar(c) => vec![*c; self.set.dim()],
            Form::Diagonal(v) => v.clone(),
            Form::Full(e) => e.values().to_vec(),
            Form::KronLeft(e) => {
                let r = self.reps();
                e.values().iter().flat_map(|&l| std::iter::repeat_n(l, r)).collect()
            }
        }
    }

    /// Largest eigenvalue of the root.
    pub fn root_max(&self) -> f64 {
        self.square_spectrum().into_iter().fold(0.0, f64::max).sqrt()
    }

    /// Smallest eigenvalue of the root.
    pub fn root_min(&self) -> f64 {
        self.square_spectrum().into_iter().fold(f64::INFINITY, f64::min).max(0.0).sqrt()
    }

    pub fn trace_root(&self) -> f64 {
        let roots: Vec<f64> = self.square_spectrum().into_iter().map(|l| l.max(0.0).sqrt()).collect();
        crate::symkernels::pairwise_sum(&roots)
    }

    pub fn square(&self) -> SymMatrix {
        self.dense(|l| l)
    }

    pub fn root(&self) -> SymMatrix {
        self.dense(|l| l.max(0.0).sqrt())
    }

    fn dense(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let d = self.set.dim();
        match &self.form {
            Form::Scalar(c) => SymMatrix::scaled_identity(d, f(*c)),
            Form::Diagonal(v) => SymMatrix::from_diag(&v.iter().map(|&l| f(l)).collect::<Vec<_>>()),
            Form::Full(e) => e.map(|l| f(l.max(0.0))),
            Form::KronLeft(e) => kron_identity(&e.map(|l| f(l.max(0.0))), self.reps()),
        }
    }

    /// Applies g(root eigenvalue) spectrally to x.
    fn apply_root_fn(&self, x: &[f64], g: impl Fn(f64) -> f64) -> Vec<f64> {
        match &self.form {
            Form::Scalar(c) => {
                let s = g(c.sqrt());
                x.iter().map(|v| s * v).collect()
            }
            Form::Diagonal(v) => x.iter().zip(v).map(|(xi, l)| g(l.sqrt()) * xi).collect(),
            Form::Full(e) => e.apply_fn(x, |l| g(l.max(0.0).sqrt())),
            Form::KronLeft(e) => {
                let r = self.reps();
                let dl = e.dim();
                let mut out = vec![0.0; x.len()];
                let mut col = vec![0.0; dl];
                for j in 0..r {
                    for i in 0..dl {
                        col[i] = x[i * r + j];
                    }
                    let y = e.apply_fn(&col, |l| g(l.max(0.0).sqrt()));
                    for i in 0..dl {
                        out[i * r + j] = y[i];
                    }
                }
                out
            }
        }
    }

    /// V x
    pub fn apply_root(&self, x: &[f64]) -> Vec<f64> {
        self.apply_root_fn(x, |r| r)
    }

    /// V⁺ x where root eigenvalues at or below `rel_cutoff·max` count as zero.
    pub fn apply_root_pinv(&self, x: &[f64], rel_cutoff: f64) -> Vec<f64> {
        let cut = rel_cutoff * self.root_max();
        self.apply_root_fn(x, |r| if r > cut && r > 0.0 { 1.0 / r } else { 0.0 })
    }
}

/// Root and square of the projection of a PSD matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub root: SymMatrix,
    pub square: SymMatrix,
}

/// Projects a PSD matrix onto the cone: square is the Frobenius projection onto the
/// subalgebra and root its PSD square root.
pub fn project_ph(set: &PreconditionerSet, m: &SymMatrix) -> Result<ProjectionResult> {
    set.validate()?;
    set.check_mat(m)?;
    check_psd_spectrum(&eig_sym(m)?)?;
    let p = Preconditioner::new(set, m)?;
    Ok(ProjectionResult { root: p.root(), square: p.square() })
}

/// √(xᵀHx) for PSD H.
pub fn h_seminorm(h: &SymMatrix, x: &[f64]) -> Result<f64> {
    if h.dim() != x.len() {
        return Err(invalid("dimension mismatch"));
    }
    let q = h.quad_form(x);
    if q < -1e-12 {
        return Err(Error::NotPsd { min_eig: q, allowed: -1e-12 });
    }
    Ok(q.max(0.0).sqrt())
}

/// G Gᵀ for G = mat(x) of shape dL × dR.
fn gram_left(x: &[f64], d_left: usize, d_right: usize) -> SymMatrix {
    SymMatrix::from_fn(d_left, |i, k| {
        dot(&x[i * d_right..(i + 1) * d_right], &x[k * d_right..(k + 1) * d_right])
    })
}

/// Gᵀ G for G = mat(x) of shape dL × dR.
fn gram_right(x: &[f64], d_left: usize, d_right: usize) -> SymMatrix {
    SymMatrix::from_fn(d_right, |j, l| {
        let a: Vec<f64> = (0..d_left).map(|i| x[i * d_right + j]).collect();
        let b: Vec<f64> = (0..d_left).map(|i| x[i * d_right + l]).collect();
        dot(&a, &b)
    })
}

fn singular_values(x: &[f64], d_left: usize, d_right: usize) -> Result<Vec<f64>> {
    let g = if d_left <= d_right { gram_left(x, d_left, d_right) } else { gram_right(x, d_left, d_right) };
    Ok(eig_sym(&g)?.values().iter().map(|l| l.max(0.0).sqrt()).collect())
}

/// ‖x‖ induced by the cone: sup of ‖x‖_H over members with Tr H ≤ 1.
pub fn ch_norm(set: &PreconditionerSet, x: &[f64]) -> Result<f64> {
    set.validate()?;
    set.check_vec(x)?;
    Ok(match *set {
        PreconditionerSet::Scalar { dim } => norm2(x) / (dim as f64).sqrt(),
        PreconditionerSet::Diagonal { .. } => norm_inf(x),
        PreconditionerSet::Full { .. } => norm2(x),
        PreconditionerSet::KronLeft { d_left, d_right } => {
            let sv = singular_values(x, d_left, d_right)?;
            sv.last().copied().unwrap_or(0.0) / (d_right as f64).sqrt()
        }
    })
}

/// Dual of [`ch_norm`].
pub fn dual_norm(set: &PreconditionerSet, x: &[f64]) -> Result<f64> {
    set.validate()?;
    set.check_vec(x)?;
    Ok(match *set {
        PreconditionerSet::Scalar { dim } => (dim as f64).sqrt() * norm2(x),
        PreconditionerSet::Diagonal { .. } => norm1(x),
        PreconditionerSet::Full { .. } => norm2(x),
        PreconditionerSet::KronLeft { d_left, d_right } => {
            let sv = singular_values(x, d_left, d_right)?;
            (d_right as f64).sqrt() * crate::symkernels::pairwise_sum(&sv)
        }
    })
}

/// Tr of the projected root of x xᵀ, computed through the projection itself.
pub fn trace_root_of_outer(set: &PreconditionerSet, x: &[f64]) -> Result<f64> {
    set.check_vec(x)?;
    Ok(Preconditioner::new(set, &SymMatrix::outer(x))?.trace_root())
}

/// Maximizer of ⟨m, u⟩ over the unit ball of [`ch_norm`].
pub fn steepest_direction(set: &PreconditionerSet, m: &[f64]) -> Result<Vec<f64>> {
    set.validate()?;
    set.check_vec(m)?;
    if m.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(match *set {
        PreconditionerSet::Scalar { dim } => {
            let s = (dim as f64).sqrt() / norm2(m);
            m.iter().map(|v| s * v).collect()
        }
        PreconditionerSet::Diagonal { .. } => m
            .iter()
            .map(|&v| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 })
            .collect(),
        PreconditionerSet::Full { .. } => {
            let s = 1.0 / norm2(m);
            m.iter().map(|v| s * v).collect()
        }
        PreconditionerSet::KronLeft { d_left, d_right } => {
            // √dR (GGᵀ)^{+1/2} G
            let e = eig_sym(&gram_left(m, d_left, d_right))?;
            let cut = PINV_CUTOFF * e.max();
            let scale = (d_right as f64).sqrt();
            let mut out = vec![0.0; m.len()];
            let mut col = vec![0.0; d_left];
            for j in 0..d_right {
                for i in 0..d_left {
                    col[i] = m[i * d_right + j];
                }
                let y = e.apply_fn(&col, |l| if l > cut && l > 0.0 { scale / l.sqrt() } else { 0.0 });
                for i in 0..d_left {
                    out[i * d_right + j] = y[i];
                }
            }
            out
        }
    })
}

/// Projection of x onto {y : ‖y‖_cH ≤ radius} in the metric of V.
pub fn project_ball(set: &PreconditionerSet, v: &SymMatrix, x: &[f64], radius: f64) -> Result<Vec<f64>> {
    set.validate()?;
    set.check_vec(x)?;
    set.check_mat(v)?;
    if !(radius > 0.0) {
        return Err(invalid("ball radius must be positive"));
    }
    if let PreconditionerSet::KronLeft { .. } = set {
        return Err(Error::Unsupported("ball projection for the Kronecker set".into()));
    }
    if !set.contains(v, 1e-12)? {
        return Err(invalid("metric must be a member of the cone"));
    }
    if ch_norm(set, x)? <= radius {
        return Ok(x.to_vec());
    }
    match *set {
        PreconditionerSet::Diagonal { .. } => Ok(x.iter().map(|v| v.clamp(-radius, radius)).collect()),
        PreconditionerSet::Scalar { dim } => {
            let s = radius * (dim as f64).sqrt() / norm2(x);
            Ok(x.iter().map(|v| s * v).collect())
        }
        PreconditionerSet::Full { .. } => project_ball_full(v, x, radius),
        PreconditionerSet::KronLeft { .. } => unreachable!(),
    }
}

fn project_ball_full(v: &SymMatrix, x: &[f64], radius: f64) -> Result<Vec<f64>> {
    let e = eig_sym(v)?;
    if e.min() <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eig: e.min() });
    }
    let xt = e.to_eigenbasis(x);
    let lam = e.values().to_vec();
    let y_of = |mu: f64| -> Vec<f64> { xt.iter().zip(&lam).map(|(xk, l)| l / (l + mu) * xk).collect() };
    let mut hi = e.max();
    while norm2(&y_of(hi)) > radius {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numerical("ball projection multiplier diverged".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if norm2(&y_of(mid)) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(e.from_eigenbasis(&y_of(hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernels::{loewner_leq, op_norm, sqrt_psd};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SETS: [PreconditionerSet; 4] = [
        PreconditionerSet::Scalar { dim: 6 },
        PreconditionerSet::Diagonal { dim: 6 },
        PreconditionerSet::Full { dim: 6 },
        PreconditionerSet::KronLeft { d_left: 2, d_right: 3 },
    ];

    fn rvec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn rpsd(rng: &mut impl Rng, n: usize) -> SymMatrix {
        let mut m = SymMatrix::zeros(n);
        for _ in 0..rng.random_range(1..=n) {
            m.add_outer(&rvec(rng, n), 1.0);
        }
        m
    }

    fn close(a: &SymMatrix, b: &SymMatrix, tol: f64) -> bool {
        a.sub(b).max_abs() <= tol
    }

    #[test]
    fn projection_examples() {
        let full = PreconditionerSet::Full { dim: 2 };
        let diag = PreconditionerSet::Diagonal { dim: 2 };
        let scalar = PreconditionerSet::Scalar { dim: 2 };
        let r = project_ph(&full, &SymMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert!(close(&r.root, &SymMatrix::from_diag(&[2.0, 3.0]), 1e-15));
        let m = SymMatrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 9.0]]).unwrap();
        let r = project_ph(&diag, &m).unwrap();
        assert!(close(&r.root, &SymMatrix::from_diag(&[2.0, 3.0]), 1e-15));
        let r = project_ph(&scalar, &SymMatrix::from_diag(&[3.0, 5.0])).unwrap();
        assert!(close(&r.root, &SymMatrix::scaled_identity(2, 2.0), 1e-15));
    }

    #[test]
    fn kron_projection_of_vec_identity() {
        let set = PreconditionerSet::KronLeft { d_left: 2, d_right: 2 };
        let r = project_ph(&set, &SymMatrix::outer(&[1.0, 0.0, 0.0, 1.0])).unwrap();
        assert!(close(&r.square, &SymMatrix::scaled_identity(4, 0.5), 1e-15));
        assert!(close(&r.root, &SymMatrix::scaled_identity(4, 0.5f64.sqrt()), 1e-15));
    }

    #[test]
    fn kron_projection_minimizes_frobenius_distance_on_a_grid() {
        // brute force over symmetric 2x2 A of ‖M − A⊗I‖_F
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let set = PreconditionerSet::KronLeft { d_left: 2, d_right: 2 };
        let m = rpsd(&mut rng, 4);
        let sq = project_square(&set, &m).unwrap();
        let best = sq.sub(&m).frobenius();
        let a = [sq.get(0, 0), sq.get(0, 2), sq.get(2, 2)];
        let mut grid_best = f64::INFINITY;
        let steps = 40;
        for i in 0..=steps {
            for j in 0..=steps {
                for k in 0..=steps {
                    let off = |s: usize| (s as f64 / steps as f64 - 0.5) * 0.2;
                    let cand = SymMatrix::from_rows(&[
                        vec![a[0] + off(i), a[1] + off(j)],
                        vec![a[1] + off(j), a[2] + off(k)],
                    ])
                    .unwrap();
                    grid_best = grid_best.min(kron_identity(&cand, 2).sub(&m).frobenius());
                }
            }
        }
        assert!(best <= grid_best + 1e-12);
    }

    #[test]
    fn projection_rejects_bad_input() {
        let set = PreconditionerSet::Full { dim: 2 };
        assert!(matches!(
            project_ph(&set, &SymMatrix::from_diag(&[1.0, -1.0])),
            Err(Error::NotPsd { .. })
        ));
        let kron = PreconditionerSet::KronLeft { d_left: 2, d_right: 2 };
        assert!(matches!(project_ph(&kron, &SymMatrix::identity(3)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn projection_result_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for set in SETS {
            for _ in 0..50 {
                let m = rpsd(&mut rng, set.dim());
                let r = project_ph(&set, &m).unwrap();
                let scale = op_norm(&r.square).unwrap();
                assert!(close(&r.root.jordan(&r.root), &r.square, 1e-9 * scale));
                assert!(set.contains(&r.square, 1e-12).unwrap());
                assert!(set.contains(&r.root, 1e-9).unwrap());
                assert!(close(&sqrt_psd(&r.square).unwrap(), &r.root, 1e-9 * scale.sqrt()));
            }
        }
    }

    #[test]
    fn seminorm_examples() {
        assert_eq!(h_seminorm(&SymMatrix::identity(2), &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(h_seminorm(&SymMatrix::zeros(2), &[3.0, 4.0]).unwrap(), 0.0);
        assert!(h_seminorm(&SymMatrix::from_diag(&[-1.0, 0.0]), &[1.0, 0.0]).is_err());
    }

    #[test]
    fn norm_examples() {
        let diag = PreconditionerSet::Diagonal { dim: 2 };
        let full = PreconditionerSet::Full { dim: 2 };
        let scalar = PreconditionerSet::Scalar { dim: 4 };
        assert_eq!(ch_norm(&diag, &[3.0, -4.0]).unwrap(), 4.0);
        assert_eq!(ch_norm(&scalar, &[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.5);
        assert_eq!(ch_norm(&full, &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(dual_norm(&diag, &[3.0, -4.0]).unwrap(), 7.0);
        assert_eq!(dual_norm(&scalar, &[1.0, 0.0, 0.0, 0.0]).unwrap(), 2.0);
        assert_eq!(dual_norm(&full, &[3.0, 4.0]).unwrap(), 5.0);
        assert!(ch_norm(&full, &[1.0]).is_err());
    }

    #[test]
    fn scalar_norm_is_sup_over_scaled_identity() {
        // H = cI with Tr H = c·d ≤ 1
        let x = [1.0, 0.0, 0.0, 0.0];
        let best = (1..=1000)
            .map(|k| {
                let c = 0.25 * k as f64 / 1000.0;
                h_seminorm(&SymMatrix::scaled_identity(4, c), &x).unwrap()
            })
            .fold(0.0, f64::max);
        let set = PreconditionerSet::Scalar { dim: 4 };
        assert!((best - ch_norm(&set, &x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn dual_norm_equals_trace_of_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for set in SETS {
            for _ in 0..100 {
                let x = rvec(&mut rng, set.dim());
                let a = dual_norm(&set, &x).unwrap();
                let b = trace_root_of_outer(&set, &x).unwrap();
                assert!((a - b).abs() <= 1e-10 * a.max(1.0), "{set:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn direction_examples() {
        let diag = PreconditionerSet::Diagonal { dim: 2 };
        assert_eq!(steepest_direction(&diag, &[2.0, -5.0]).unwrap(), vec![1.0, -1.0]);
        assert_eq!(steepest_direction(&diag, &[0.0, -5.0]).unwrap(), vec![0.0, -1.0]);
        let full = PreconditionerSet::Full { dim: 2 };
        let u = steepest_direction(&full, &[3.0, 4.0]).unwrap();
        assert!((u[0] - 0.6).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15);
        assert_eq!(steepest_direction(&full, &[0.0, 0.0]), Err(Error::ZeroVector));
    }

    #[test]
    fn diagonal_direction_beats_every_corner() {
        let set = PreconditionerSet::Diagonal { dim: 2 };
        let m = [2.0, -5.0];
        let u = steepest_direction(&set, &m).unwrap();
        let best = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
            .iter()
            .map(|c| dot(c, &m))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(dot(&u, &m), best);
    }

    #[test]
    fn kron_direction_example() {
        let set = PreconditionerSet::KronLeft { d_left: 2, d_right: 2 };
        let m = [2.0, 0.0, 0.0, 1.0];
        let u = steepest_direction(&set, &m).unwrap();
        let s = 2f64.sqrt();
        for (a, b) in u.iter().zip([s, 0.0, 0.0, s]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((ch_norm(&set, &u).unwrap() - 1.0).abs() < 1e-12);
        assert!((dot(&m, &u) - dual_norm(&set, &m).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn direction_is_optimal_on_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for set in SETS {
            for _ in 0..100 {
                let m = rvec(&mut rng, set.dim());
                let u = steepest_direction(&set, &m).unwrap();
                assert!(ch_norm(&set, &u).unwrap() <= 1.0 + 1e-10);
                let dn = dual_norm(&set, &m).unwrap();
                assert!((dot(&m, &u) - dn).abs() <= 1e-10 * dn);
            }
        }
    }

    #[test]
    fn monotone_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for set in SETS {
            for _ in 0..30 {
                let a = rpsd(&mut rng, set.dim());
                let b = a.add(&rpsd(&mut rng, set.dim()));
                let ra = project_ph(&set, &a).unwrap().root;
                let rb = project_ph(&set, &b).unwrap().root;
                assert!(loewner_leq(&ra, &rb, 1e-9).unwrap());
            }
        }
    }

    #[test]
    fn ball_examples() {
        let diag = PreconditionerSet::Diagonal { dim: 2 };
        let y = project_ball(&diag, &SymMatrix::from_diag(&[1.0, 2.0]), &[3.0, -0.5], 1.0).unwrap();
        assert_eq!(y, vec![1.0, -0.5]);
        let full = PreconditionerSet::Full { dim: 2 };
        let y = project_ball(&full, &SymMatrix::identity(2), &[6.0, 8.0], 1.0).unwrap();
        assert!((y[0] - 0.6).abs() < 1e-10 && (y[1] - 0.8).abs() < 1e-10);
        let inside = project_ball(&full, &SymMatrix::identity(2), &[0.3, 0.4], 1.0).unwrap();
        assert_eq!(inside, vec![0.3, 0.4]);
        let kron = PreconditionerSet::KronLeft { d_left: 1, d_right: 2 };
        assert!(matches!(
            project_ball(&kron, &SymMatrix::identity(2), &[3.0, 4.0], 1.0),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            project_ball(&full, &SymMatrix::identity(2), &[3.0, 4.0], 0.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn ball_projection_satisfies_variational_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for set in &SETS[..3] {
            for _ in 0..30 {
                let d = set.dim();
                let v = Preconditioner::new(set, &rpsd(&mut rng, d).add_identity(0.1)).unwrap().root();
                let x: Vec<f64> = rvec(&mut rng, d).iter().map(|t| 5.0 * t).collect();
                let radius = 0.5;
                let y = project_ball(set, &v, &x, radius).unwrap();
                assert!(ch_norm(set, &y).unwrap() <= radius * (1.0 + 1e-10));
                let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
                let vd = v.matvec(&diff);
                for _ in 0..100 {
                    let mut z = rvec(&mut rng, d);
                    let nz = ch_norm(set, &z).unwrap();
                    let s = radius * rng.random_range(0.0..1.0) / nz;
                    z.iter_mut().for_each(|t| *t *= s);
                    let zy: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a - b).collect();
                    assert!(dot(&vd, &zy) <= 1e-9);
                }
            }
        }
    }
}
