//! Random inputs for the property suites.

use adageo::symkernels::{eig_sym, SymMatrix};
use adageo::PreconditionerSet;
use rand::Rng;

pub(crate) fn vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Random orthonormal basis, as the eigenvectors of a random symmetric matrix.
pub(crate) fn with_spectrum(rng: &mut impl Rng, values: &[f64]) -> SymMatrix {
    let d = values.len();
    let g = SymMatrix::from_row_major(d, vec(rng, d * d)).expect("square input");
    eig_sym(&g).expect("finite input").with_values(values)
}

/// PSD matrix of random rank (possibly zero) with entries of order one.
pub(crate) fn psd(rng: &mut impl Rng, d: usize) -> SymMatrix {
    let rank = rng.random_range(0..=d);
    let mut m = SymMatrix::zeros(d);
    for _ in 0..rank {
        m.add_outer(&vec(rng, d), 1.0);
    }
    m
}

/// Positive definite matrix with eigenvalues log-uniform in [lo, hi].
pub(crate) fn pd(rng: &mut impl Rng, d: usize, lo: f64, hi: f64) -> SymMatrix {
    let (a, b) = (lo.ln(), hi.ln());
    let values: Vec<f64> = (0..d).map(|_| rng.random_range(a..=b).exp()).collect();
    with_spectrum(rng, &values)
}

/// One of the four set kinds with total dimension at most `max_d`.
pub(crate) fn set_of_kind(rng: &mut impl Rng, kind: usize, max_d: usize) -> PreconditionerSet {
    match kind {
        0 => PreconditionerSet::Scalar { dim: rng.random_range(1..=max_d) },
        1 => PreconditionerSet::Diagonal { dim: rng.random_range(1..=max_d) },
        2 => PreconditionerSet::Full { dim: rng.random_range(1..=max_d) },
        _ => {
            let d_left = rng.random_range(1..=max_d.min(4));
            let d_right = rng.random_range(1..=(max_d / d_left).max(1));
            PreconditionerSet::KronLeft { d_left, d_right }
        }
    }
}

pub(crate) const KINDS: [&str; 4] = ["scalar", "diagonal", "full", "kron_left"];

/// Random positive definite member of the cone.
pub(crate) fn cone_member(rng: &mut impl Rng, set: &PreconditionerSet) -> SymMatrix {
    let d = set.dim();
    match *set {
        PreconditionerSet::Scalar { .. } => SymMatrix::scaled_identity(d, rng.random_range(0.1..2.0)),
        PreconditionerSet::Diagonal { .. } => {
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..2.0)).collect();
            SymMatrix::from_diag(&v)
        }
        PreconditionerSet::Full { .. } => pd(rng, d, 0.05, 2.0),
        PreconditionerSet::KronLeft { d_left, d_right } => {
            adageo::precond::kron_identity(&pd(rng, d_left, 0.05, 2.0), d_right)
        }
    }
}

/// Singular values of a row-major `rows × cols` matrix by one-sided Jacobi.
/// Kept independent of the eigensolver so it can serve as a norm oracle.
pub(crate) fn singular_values(rows: usize, cols: usize, data: &[f64]) -> Vec<f64> {
    // work on columns of the taller orientation
    let (n, mut a) = if rows >= cols {
        (cols, (0..cols).map(|j| (0..rows).map(|i| data[i * cols + j]).collect::<Vec<f64>>()).collect::<Vec<_>>())
    } else {
        (rows, (0..rows).map(|i| data[i * cols..(i + 1) * cols].to_vec()).collect::<Vec<_>>())
    };
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = a[p].iter().map(|v| v * v).sum();
                let beta: f64 = a[q].iter().map(|v| v * v).sum();
                let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = a.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (u, v) = (*x, *y);
                    *x = c * u - s * v;
                    *y = s * u + c * v;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    a.iter().map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt()).collect()
}
