//! Geometric constants of objectives and noise, plus numerical validators for
//! the matrix inequalities behind the adaptive rates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::precond::{dual_norm, h_seminorm, Preconditioner, PreconditionerSet};
use crate::problems::{NoiseModel, NoiseSampler};
use crate::rng::CounterRng;
use crate::symkernels::{check_psd, dlog, eig_sym, log_psd, SymMatrix};

/// A smoothness constant, either exact or certified to lie in [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    Exact(f64),
    Bracket { lo: f64, hi: f64 },
}

impl Smoothness {
    pub fn upper(&self) -> f64 {
        match *self {
            Smoothness::Exact(v) => v,
            Smoothness::Bracket { hi, .. } => hi,
        }
    }

    pub fn lower(&self) -> f64 {
        match *self {
            Smoothness::Exact(v) => v,
            Smoothness::Bracket { lo, .. } => lo,
        }
    }
}

/// Largest dimension for the Diagonal bracket solver.
const BRACKET_MAX_DIM: usize = 6;
/// Largest dimension for the ∞→1 enumeration.
const ENUM_MAX_DIM: usize = 15;

fn check_square(set: &PreconditionerSet, a: &SymMatrix) -> Result<()> {
    set.validate()?;
    if a.dim() != set.dim() {
        return Err(invalid("matrix dimension does not match the set"));
    }
    if !a.is_finite() {
        return Err(invalid("matrix has non-finite entries"));
    }
    Ok(())
}

/// min Tr H over cone members with −H ⪯ A ⪯ H.
pub fn adaptive_smoothness(set: &PreconditionerSet, a: &SymMatrix) -> Result<Smoothness> {
    check_square(set, a)?;
    let d = a.dim();
    match *set {
        PreconditionerSet::Full { .. } => Ok(Smoothness::Exact(eig_sym(a)?.values().iter().map(|l| l.abs()).sum())),
        PreconditionerSet::Scalar { .. } => Ok(Smoothness::Exact(d as f64 * eig_sym(a)?.op_norm())),
        PreconditionerSet::Diagonal { .. } if a.is_diagonal() => Ok(Smoothness::Exact(a.diag().iter().map(|v| v.abs()).sum())),
        PreconditionerSet::Diagonal { .. } if d <= BRACKET_MAX_DIM => diagonal_bracket(a),
        _ => Err(Error::Unsupported(format!("adaptive smoothness for {} with d = {d}", set.name()))),
    }
}

fn inverse_pd(m: &SymMatrix) -> Option<(SymMatrix, f64)> {
    let e = eig_sym(m).ok()?;
    if e.min() <= 0.0 {
        return None;
    }
    let logdet = e.values().iter().map(|l| l.ln()).sum();
    Some((e.map(|l| 1.0 / l), logdet))
}

/// Log-barrier path following for min Σhᵢ s.t. diag(h) ± A ⪰ 0, with a dual
/// certificate built from the barrier's matrix multipliers.
fn diagonal_bracket(a: &SymMatrix) -> Result<Smoothness> {
    let d = a.dim();
    let shift = |h: &[f64], sign: f64| SymMatrix::from_fn(d, |i, j| if i == j { h[i] } else { 0.0 } - sign * a.get(i, j));
    let barrier = |h: &[f64], mu: f64| -> Option<(f64, SymMatrix, SymMatrix)> {
        let (p, lp) = inverse_pd(&shift(h, 1.0))?;
        let (q, lq) = inverse_pd(&shift(h, -1.0))?;
        Some((h.iter().sum::<f64>() / mu - lp - lq, p, q))
    };
    // strictly diagonally dominant start
    let mut h: Vec<f64> = (0..d).map(|i| (0..d).map(|j| a.get(i, j).abs()).sum::<f64>() + 1e-3 * a.max_abs()).collect();
    let scale = a.max_abs();
    let mut mu = scale;
    let mut best: Option<(f64, f64)> = None;
    for _ in 0..80 {
        for _ in 0..100 {
            let (val, p, q) = barrier(&h, mu).ok_or_else(|| Error::Numerical("barrier left the feasible set".into()))?;
            let grad: Vec<f64> = (0..d).map(|i| 1.0 / mu - p.get(i, i) - q.get(i, i)).collect();
            let hess = SymMatrix::from_fn(d, |i, j| p.get(i, j).powi(2) + q.get(i, j).powi(2));
            let step = eig_sym(&hess)?.apply_fn(&grad, |l| if l > 0.0 { -1.0 / l } else { 0.0 });
            let decrement: f64 = -grad.iter().zip(&step).map(|(g, s)| g * s).sum::<f64>();
            if decrement < 1e-14 {
                break;
            }
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = h.iter().zip(&step).map(|(x, s)| x + t * s).collect();
                if let Some((v, _, _)) = barrier(&trial, mu) {
                    if v <= val - 0.25 * t * decrement {
                        h = trial;
                        break;
                    }
                }
                t *= 0.5;
                if t < 1e-12 {
                    break;
                }
            }
            if t < 1e-12 {
                break;
            }
        }
        let (_, p, q) = barrier(&h, mu).ok_or_else(|| Error::Numerical("barrier left the feasible set".into()))?;
        let hi = h.iter().sum::<f64>();
        let s: Vec<f64> = (0..d).map(|i| mu * (p.get(i, i) + q.get(i, i))).collect();
        let z1 = SymMatrix::from_fn(d, |i, j| mu * p.get(i, j) / (s[i] * s[j]).sqrt());
        let z2 = SymMatrix::from_fn(d, |i, j| mu * q.get(i, j) / (s[i] * s[j]).sqrt());
        let lo = a.inner(&z1) - a.inner(&z2);
        let cand = (lo.max(best.map_or(f64::NEG_INFINITY, |b| b.0)), hi.min(best.map_or(f64::INFINITY, |b| b.1)));
        best = Some(cand);
        if cand.1 - cand.0 <= 1e-10 * cand.1.max(scale) {
            break;
        }
        mu *= 0.2;
    }
    let (lo, hi) = best.expect("at least one barrier stage");
    if hi - lo > 0.01 * hi {
        return Err(Error::Numerical(format!("bracket gap too wide: [{lo}, {hi}]")));
    }
    Ok(Smoothness::Bracket { lo, hi })
}

/// Smoothness of ½xᵀAx with respect to the set's norm.
pub fn standard_smoothness(set: &PreconditionerSet, a: &SymMatrix) -> Result<f64> {
    check_square(set, a)?;
    let d = a.dim();
    match *set {
        PreconditionerSet::Full { .. } => Ok(eig_sym(a)?.op_norm()),
        PreconditionerSet::Scalar { .. } => Ok(d as f64 * eig_sym(a)?.op_norm()),
        PreconditionerSet::Diagonal { .. } if d <= ENUM_MAX_DIM => Ok(inf_to_one(a)),
        _ => Err(Error::Unsupported(format!("standard smoothness for {} with d = {d}", set.name()))),
    }
}

/// max over s ∈ {±1}^d of ‖As‖₁; s and −s agree so the last sign is fixed.
fn inf_to_one(a: &SymMatrix) -> f64 {
    let d = a.dim();
    let mut best: f64 = 0.0;
    for mask in 0u32..(1u32 << (d - 1)) {
        let s: Vec<f64> = (0..d).map(|i| if i + 1 < d && mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
        best = best.max(a.matvec(&s).iter().map(|v| v.abs()).sum());
    }
    best
}

/// σ_H = Tr of the projected root of the covariance.
pub fn adaptive_variance(set: &PreconditionerSet, cov: &SymMatrix) -> Result<f64> {
    check_square(set, cov)?;
    check_psd(cov)?;
    Ok(Preconditioner::new(set, cov)?.trace_root())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Monte-Carlo E‖δ − Eδ‖²_* with a normal 95% interval.
pub fn estimate_dual_variance(set: &PreconditionerSet, noise: &NoiseModel, samples: u64, seed: u64) -> Result<MonteCarloEstimate> {
    set.validate()?;
    if samples < 1000 {
        return Err(invalid("need at least 1000 samples"));
    }
    let sampler = NoiseSampler::new(noise.clone(), set.dim())?;
    let rng = CounterRng::new(seed);
    let (mut s1, mut s2) = (0.0, 0.0);
    for t in 0..samples {
        // every model is mean zero after validation
        let v = dual_norm(set, &sampler.draw(&rng, t))?.powi(2);
        s1 += v;
        s2 += v * v;
    }
    let n = samples as f64;
    let mean = s1 / n;
    let se = ((s2 / n - mean * mean).max(0.0) / n).sqrt();
    Ok(MonteCarloEstimate { estimate: mean, std_error: se, ci_low: mean - 1.96 * se, ci_high: mean + 1.96 * se })
}

/// sup ‖x‖_*/‖x‖₂ · sup ‖x‖₂/‖x‖_*.
pub fn norm_distortion(set: &PreconditionerSet) -> Result<f64> {
    set.validate()?;
    Ok(match *set {
        PreconditionerSet::Scalar { .. } | PreconditionerSet::Full { .. } => 1.0,
        PreconditionerSet::Diagonal { dim } => (dim as f64).sqrt(),
        PreconditionerSet::KronLeft { d_left, d_right } => (d_left.min(d_right) as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityVerdict {
    pub holds: bool,
    /// Smallest eigenvalue of RHS − LHS.
    pub min_eig_residual: f64,
    pub tolerance: f64,
}

fn check_constants(c: f64, big_c: f64) -> Result<()> {
    if !(c > 0.0 && c <= big_c && big_c.is_finite()) {
        return Err(invalid("need 0 < c <= C"));
    }
    Ok(())
}

fn verdict(lhs: &SymMatrix, rhs: &SymMatrix) -> Result<InequalityVerdict> {
    let resid = rhs.sub(lhs);
    let min_eig = eig_sym(&resid)?.min();
    let tolerance = 1e-8 * lhs.frobenius().max(rhs.frobenius());
    Ok(InequalityVerdict { holds: min_eig >= -tolerance, min_eig_residual: min_eig, tolerance })
}

fn inequality_weights(d: usize, lmin: f64, c: f64, big_c: f64) -> (f64, f64) {
    let pi2 = std::f64::consts::PI.powi(2);
    let df = d as f64;
    let log_w = 3.0 * (big_c.ln() - c.ln()) / pi2;
    let trace_w = 12.0 * c * df / (pi2 * lmin * lmin) + 12.0 * df / (big_c * pi2);
    (log_w, trace_w)
}

fn inv_sqrt_pd(x: &SymMatrix) -> Result<(SymMatrix, f64)> {
    let e = eig_sym(x)?;
    if e.min() <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eig: e.min() });
    }
    Ok((e.map(|l| 1.0 / l.sqrt()), e.min()))
}

/// X^{−1/2}(X−Y)X^{−1/2} ⪯ w₁(log X − log Y) + w₂·Tr(X−Y)·I for 0 ≺ Y ⪯ X.
pub fn check_log_inequality(x: &SymMatrix, y: &SymMatrix, c: f64, big_c: f64) -> Result<InequalityVerdict> {
    check_constants(c, big_c)?;
    if x.dim() != y.dim() {
        return Err(invalid("dimension mismatch"));
    }
    let diff = x.sub(y);
    let e = eig_sym(&diff)?;
    if e.min() < -1e-12 * e.op_norm().max(x.max_abs()) {
        return Err(invalid("need Y ⪯ X"));
    }
    let (xm, lmin) = inv_sqrt_pd(x)?;
    let lhs = diff.congruence(&xm);
    let (log_w, trace_w) = inequality_weights(x.dim(), lmin, c, big_c);
    let rhs = log_psd(x)?.sub(&log_psd(y)?).scale(log_w).add_identity(trace_w * diff.trace());
    verdict(&lhs, &rhs)
}

/// X^{−1/2}AX^{−1/2} ⪯ w₁·∂log(X)[A] + w₂·Tr(A)·I for X ≻ 0, A ⪰ 0.
pub fn check_dlog_inequality(x: &SymMatrix, a: &SymMatrix, c: f64, big_c: f64) -> Result<InequalityVerdict> {
    check_constants(c, big_c)?;
    if x.dim() != a.dim() {
        return Err(invalid("dimension mismatch"));
    }
    check_psd(a)?;
    let (xm, lmin) = inv_sqrt_pd(x)?;
    let lhs = a.congruence(&xm);
    let (log_w, trace_w) = inequality_weights(x.dim(), lmin, c, big_c);
    let rhs = dlog(x, a)?.scale(log_w).add_identity(trace_w * a.trace());
    verdict(&lhs, &rhs)
}

/// Roots V_t = (P(M_t) + εI)^{1/2} for M_t = βM_{t−1} + g_t g_tᵀ.
pub fn root_sequence(set: &PreconditionerSet, gs: &[Vec<f64>], beta: f64, eps: f64) -> Result<Vec<SymMatrix>> {
    set.validate()?;
    if !(beta > 0.0 && beta <= 1.0) || !(eps >= 0.0) {
        return Err(invalid("need beta in (0,1] and eps >= 0"));
    }
    let mut m = SymMatrix::zeros(set.dim());
    let mut out = Vec::with_capacity(gs.len());
    for g in gs {
        if g.len() != set.dim() {
            return Err(invalid("gradient dimension mismatch"));
        }
        m.scale_in_place(beta);
        m.add_outer(g, 1.0);
        out.push(Preconditioner::new(set, &m.add_identity(eps))?.root());
    }
    Ok(out)
}

/// Σ_t V_t⁻¹(V_t² − βV_{t−1}²)V_t⁻¹ with V₋₁ = √ε·I.
pub fn compute_s_t(vs: &[SymMatrix], beta: f64, eps: f64) -> Result<SymMatrix> {
    let d = vs.first().map(SymMatrix::dim).ok_or_else(|| invalid("empty sequence"))?;
    if !(eps >= 0.0) || !(beta >= 0.0) {
        return Err(invalid("need eps >= 0 and beta >= 0"));
    }
    let mut prev_sq = SymMatrix::scaled_identity(d, eps);
    let mut s = SymMatrix::zeros(d);
    for v in vs {
        if v.dim() != d {
            return Err(invalid("dimension mismatch in sequence"));
        }
        let e = eig_sym(v)?;
        if e.min() <= 1e-14 * e.op_norm() || e.max() <= 0.0 {
            return Err(Error::SingularPreconditioner);
        }
        let vinv = e.map(|l| 1.0 / l);
        let sq = e.map(|l| l * l);
        s = s.add(&sq.sub(&prev_sq.scale(beta)).congruence(&vinv));
        prev_sq = sq;
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        BoundCheck { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-9) + 1e-12 }
    }
}

/// ‖S_T‖_op ≤ (1−β)T + log‖V_{T−1}²/ε‖_op for commutative sets.
pub fn check_st_bound_commutative(set: &PreconditionerSet, vs: &[SymMatrix], beta: f64, eps: f64) -> Result<BoundCheck> {
    if !set.is_commutative() {
        return Err(Error::Unsupported(format!("commutative bound on the {} set", set.name())));
    }
    if !(eps > 0.0) || !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid("need eps > 0 and beta in (0,1]"));
    }
    for v in vs {
        if !set.contains(v, 1e-12)? {
            return Err(invalid("sequence leaves the set"));
        }
    }
    let s = compute_s_t(vs, beta, eps)?;
    let last = vs.last().expect("nonempty after compute_s_t");
    let top = eig_sym(last)?.op_norm();
    let rhs = (1.0 - beta) * vs.len() as f64 + (top * top / eps).ln();
    Ok(BoundCheck::new(eig_sym(&s)?.op_norm(), rhs))
}

/// Σ‖V_t⁻¹g_t‖²_H ≤ Tr(H)‖S_T‖_op on a gradient stream.
pub fn check_second_order_sum(
    gs: &[Vec<f64>],
    set: &PreconditionerSet,
    beta: f64,
    eps: f64,
    h: &SymMatrix,
) -> Result<BoundCheck> {
    if h.dim() != set.dim() || !set.contains(h, 1e-12)? {
        return Err(invalid("H must belong to the set"));
    }
    let e = eig_sym(h)?;
    if e.min() <= 0.0 {
        return Err(invalid("H must be positive definite"));
    }
    if gs.iter().all(|g| g.iter().all(|&v| v == 0.0)) && eps == 0.0 {
        return Ok(BoundCheck::new(0.0, 0.0));
    }
    let vs = root_sequence(set, gs, beta, eps)?;
    let mut lhs = 0.0;
    for (g, v) in gs.iter().zip(&vs) {
        let step = eig_sym(v)?.apply_fn(g, |l| if l > 0.0 { 1.0 / l } else { 0.0 });
        lhs += h_seminorm(h, &step)?.powi(2);
    }
    let s = compute_s_t(&vs, beta, eps)?;
    Ok(BoundCheck::new(lhs, h.trace() * eig_sym(&s)?.op_norm()))
}

/// Least-squares slope of log y against log t.
pub fn rate_fit(t: &[f64], y: &[f64]) -> Result<f64> {
    if t.len() != y.len() || t.len() < 8 {
        return Err(invalid("need at least 8 paired points"));
    }
    if t.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(invalid("rate fit needs positive finite values"));
    }
    let lx: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("all t values coincide"));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichVerdict {
    pub standard: f64,
    pub adaptive: Smoothness,
    pub dim: usize,
    pub holds: bool,
}

/// standard ≤ adaptive ≤ d·standard.
pub fn smoothness_sandwich_check(set: &PreconditionerSet, a: &SymMatrix) -> Result<SandwichVerdict> {
    let standard = standard_smoothness(set, a)?;
    let adaptive = adaptive_smoothness(set, a)?;
    let d = a.dim();
    let tol = 1e-9;
    let holds = standard <= adaptive.upper() * (1.0 + tol) + tol && adaptive.lower() <= d as f64 * standard * (1.0 + tol) + tol;
    Ok(SandwichVerdict { standard, adaptive, dim: d, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precond::ch_norm;
    use crate::symkernels::is_psd;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rsym(rng: &mut impl Rng, n: usize) -> SymMatrix {
        SymMatrix::from_row_major(n, (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    fn rpd(rng: &mut impl Rng, n: usize, floor: f64) -> SymMatrix {
        let b = rsym(rng, n);
        SymMatrix::from_row_major(n, crate::symkernels::mat_mul(n, b.as_slice(), b.as_slice())).unwrap().add_identity(floor)
    }

    fn diag(d: usize) -> PreconditionerSet {
        PreconditionerSet::Diagonal { dim: d }
    }

    #[test]
    fn smoothness_examples() {
        let a = SymMatrix::from_diag(&[1.0, -2.0]);
        assert_eq!(adaptive_smoothness(&PreconditionerSet::Full { dim: 2 }, &a).unwrap().upper(), 3.0);
        assert_eq!(adaptive_smoothness(&diag(2), &a).unwrap(), Smoothness::Exact(3.0));
        assert_eq!(adaptive_smoothness(&PreconditionerSet::Scalar { dim: 2 }, &a).unwrap(), Smoothness::Exact(4.0));
        assert_eq!(standard_smoothness(&diag(2), &SymMatrix::identity(2)).unwrap(), 2.0);
        let ones = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(standard_smoothness(&diag(2), &ones).unwrap(), 4.0);
        assert!(adaptive_smoothness(&PreconditionerSet::KronLeft { d_left: 1, d_right: 2 }, &a).is_err());
        assert!(standard_smoothness(&diag(16), &SymMatrix::identity(16)).is_err());
        assert!(adaptive_smoothness(&diag(7), &SymMatrix::from_fn(7, |_, _| 1.0)).is_err());
    }

    fn feasible(h: &SymMatrix, a: &SymMatrix) -> bool {
        is_psd(&h.sub(a), 1e-12).unwrap() && is_psd(&h.add(a), 1e-12).unwrap()
    }

    #[test]
    fn full_adaptive_smoothness_matches_grid_search() {
        // grid over (H11, H12); the smallest feasible H22 is found by bisection
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..20 {
            let a = rsym(&mut rng, 2);
            let want = adaptive_smoothness(&PreconditionerSet::Full { dim: 2 }, &a).unwrap().upper();
            let top = 2.0 * a.max_abs() + 0.1;
            let n = 300;
            let mut best = f64::INFINITY;
            for i in 0..=n {
                for k in 0..=n {
                    let p = top * i as f64 / n as f64;
                    let r = -top + 2.0 * top * k as f64 / n as f64;
                    let h = |q: f64| SymMatrix::from_rows(&[vec![p, r], vec![r, q]]).unwrap();
                    let (mut lo, mut hi) = (0.0, 4.0 * top);
                    if !feasible(&h(hi), &a) {
                        continue;
                    }
                    for _ in 0..50 {
                        let mid = 0.5 * (lo + hi);
                        if feasible(&h(mid), &a) {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    best = best.min(p + hi);
                }
            }
            assert!(best >= want * (1.0 - 1e-9), "{best} vs {want}");
            assert!(best <= want * 1.02, "{best} vs {want}");
        }
    }

    #[test]
    fn diagonal_bracket_is_certified() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for d in 2..=4 {
            for _ in 0..5 {
                let a = rsym(&mut rng, d);
                let b = adaptive_smoothness(&diag(d), &a).unwrap();
                let Smoothness::Bracket { lo, hi } = b else { panic!("expected bracket") };
                assert!(lo <= hi && hi - lo <= 0.01 * hi);
                // random feasible diagonal points never beat the lower end
                for _ in 0..2000 {
                    let h: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..2.0 * hi)).collect();
                    let hm = SymMatrix::from_diag(&h);
                    if feasible(&hm, &a) {
                        assert!(h.iter().sum::<f64>() >= lo * (1.0 - 1e-9));
                    }
                }
            }
        }
        // d = 2 grid search lands inside the bracket
        let a = SymMatrix::from_rows(&[vec![0.3, 0.8], vec![0.8, -0.5]]).unwrap();
        let b = adaptive_smoothness(&diag(2), &a).unwrap();
        let mut best = f64::INFINITY;
        let n = 2000;
        for i in 0..=n {
            let h0 = 2.0 * i as f64 / n as f64;
            // for fixed h0 the smallest feasible h1 by bisection
            let (mut lo, mut hi) = (0.0, 10.0);
            if !feasible(&SymMatrix::from_diag(&[h0, hi]), &a) {
                continue;
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if feasible(&SymMatrix::from_diag(&[h0, mid]), &a) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            best = best.min(h0 + hi);
        }
        assert!(best >= b.lower() * (1.0 - 1e-6) && best <= b.upper() * 1.001 + 1e-3, "{best} {b:?}");
    }

    #[test]
    fn inf_to_one_matches_vertex_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for d in 1..=6 {
            let a = rsym(&mut rng, d);
            let l = standard_smoothness(&diag(d), &a).unwrap();
            for _ in 0..500 {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let r = dual_norm(&diag(d), &a.matvec(&x)).unwrap() / ch_norm(&diag(d), &x).unwrap();
                assert!(r <= l * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn sandwich_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for d in 1..=5 {
            let a = rsym(&mut rng, d);
            for set in [diag(d), PreconditionerSet::Full { dim: d }, PreconditionerSet::Scalar { dim: d }] {
                assert!(smoothness_sandwich_check(&set, &a).unwrap().holds);
            }
        }
        let v = smoothness_sandwich_check(&diag(2), &SymMatrix::from_diag(&[1.0, -2.0])).unwrap();
        assert_eq!((v.standard, v.adaptive), (3.0, Smoothness::Exact(3.0)));
    }

    #[test]
    fn variance_examples() {
        let s = SymMatrix::from_diag(&[1.0, 4.0]);
        assert!((adaptive_variance(&diag(2), &s).unwrap() - 3.0).abs() < 1e-14);
        assert!((adaptive_variance(&PreconditionerSet::Scalar { dim: 2 }, &s).unwrap() - 10f64.sqrt()).abs() < 1e-14);
        let f = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!((adaptive_variance(&PreconditionerSet::Full { dim: 2 }, &f).unwrap() - (1.0 + 3f64.sqrt())).abs() < 1e-12);
        assert!(adaptive_variance(&diag(2), &SymMatrix::from_diag(&[1.0, -1.0])).is_err());
    }

    #[test]
    fn diagonal_variance_matches_lagrange_minimum() {
        // min Σ Σᵢᵢ/hᵢ over Σhᵢ ≤ 1 is (Σ√Σᵢᵢ)²; check against a random search
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let s = rpd(&mut rng, 3, 0.1);
        let sigma = adaptive_variance(&diag(3), &s).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..200_000 {
            let w: Vec<f64> = (0..3).map(|_| rng.random_range(1e-3..1.0)).collect();
            let tot: f64 = w.iter().sum();
            let v: f64 = (0..3).map(|i| s.get(i, i) * tot / w[i]).sum();
            best = best.min(v);
        }
        assert!(best >= sigma * sigma * (1.0 - 1e-12));
        assert!(best <= sigma * sigma * 1.001);
    }

    #[test]
    fn dual_variance_estimates() {
        let none = estimate_dual_variance(&PreconditionerSet::Full { dim: 3 }, &NoiseModel::None, 1000, 0).unwrap();
        assert_eq!(none.estimate, 0.0);
        let iso = estimate_dual_variance(&PreconditionerSet::Full { dim: 3 }, &NoiseModel::GaussianIso { variance: 1.0 }, 50_000, 1).unwrap();
        assert!(iso.ci_low <= 3.0 && 3.0 <= iso.ci_high, "{iso:?}");
        let (d, eps, s) = (64usize, 0.05, 1.0);
        let c = s * s / (5.0 * eps);
        let theta = 5.0 * eps * eps / (d as f64 * s * s);
        let spike = estimate_dual_variance(&diag(d), &NoiseModel::centered_spike(c, theta, d), 50_000, 2).unwrap();
        assert!(spike.ci_low <= 5.0 * c * c * d as f64 * theta);
        assert!(estimate_dual_variance(&diag(2), &NoiseModel::None, 10, 0).is_err());
    }

    #[test]
    fn variance_ordering_on_random_covariances() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        for k in 0..50 {
            let d = 2 + k % 4;
            let cov = rpd(&mut rng, d, 0.0);
            for set in [diag(d), PreconditionerSet::Full { dim: d }, PreconditionerSet::Scalar { dim: d }] {
                let sh = adaptive_variance(&set, &cov).unwrap();
                let est = estimate_dual_variance(&set, &NoiseModel::GaussianCov { cov: cov.clone() }, 4000, k as u64).unwrap();
                // 150 comparisons, so a 4-standard-error band rather than 95%
                let (lo, hi) = (est.estimate - 4.0 * est.std_error, est.estimate + 4.0 * est.std_error);
                assert!(lo.max(0.0).sqrt() <= sh * (1.0 + 1e-9), "{} {k}: {est:?} vs {sh}", set.name());
                assert!(sh <= (d as f64).sqrt() * hi.sqrt() * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn distortion_values() {
        assert_eq!(norm_distortion(&diag(16)).unwrap(), 4.0);
        assert_eq!(norm_distortion(&PreconditionerSet::Full { dim: 5 }).unwrap(), 1.0);
        assert_eq!(norm_distortion(&PreconditionerSet::KronLeft { d_left: 3, d_right: 5 }).unwrap(), 3f64.sqrt());
    }

    #[test]
    fn kron_distortion_is_attained() {
        let set = PreconditionerSet::KronLeft { d_left: 3, d_right: 5 };
        let norm2 = crate::symkernels::norm2;
        let mut rank1 = vec![0.0; 15];
        rank1[0] = 1.0;
        let mut full = vec![0.0; 15];
        for i in 0..3 {
            full[i * 5 + i] = 1.0;
        }
        let lo = dual_norm(&set, &rank1).unwrap() / norm2(&rank1);
        let hi = dual_norm(&set, &full).unwrap() / norm2(&full);
        assert!((hi / lo - norm_distortion(&set).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn log_inequality_examples() {
        let x = SymMatrix::from_diag(&[2.0, 3.0]);
        let v = check_log_inequality(&x, &x, 0.1, 10.0).unwrap();
        assert!(v.holds && v.min_eig_residual.abs() < 1e-14);
        assert!(check_log_inequality(&x, &SymMatrix::identity(2), 0.1, 10.0).unwrap().holds);
        assert!(check_log_inequality(&SymMatrix::identity(2), &x, 0.1, 10.0).is_err());
        assert!(check_log_inequality(&x, &x, 0.0, 10.0).is_err());
    }

    #[test]
    fn log_inequality_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        for k in 0..500 {
            let d = 1 + k % 8;
            let y = rpd(&mut rng, d, 0.05);
            let x = y.add(&rpd(&mut rng, d, 0.0).scale(rng.random_range(0.0..2.0)));
            let v = check_log_inequality(&x, &y, 1e-3, 1e3).unwrap();
            assert!(v.holds, "trial {k}: {v:?}");
        }
    }

    #[test]
    fn dlog_inequality_examples() {
        let x = SymMatrix::from_diag(&[0.5, 2.0, 3.0]);
        let v = check_dlog_inequality(&x, &SymMatrix::zeros(3), 1e-3, 1e3).unwrap();
        assert!(v.holds && v.min_eig_residual == 0.0);
        // at X = I the derivative is A itself, so a large log ratio suffices
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let a = rpd(&mut rng, 3, 0.0);
        let c = 1e-2;
        let big_c = c * (std::f64::consts::PI.powi(2) / 3.0).exp();
        assert!(check_dlog_inequality(&SymMatrix::identity(3), &a, c, big_c).unwrap().holds);
        for k in 0..500 {
            let d = 1 + k % 8;
            let x = rpd(&mut rng, d, 0.05);
            let a = rpd(&mut rng, d, 0.0);
            assert!(check_dlog_inequality(&x, &a, 1e-3, 1e3).unwrap().holds, "trial {k}");
        }
    }

    #[test]
    fn s_t_examples() {
        let g = 1.7;
        let vs = root_sequence(&PreconditionerSet::Scalar { dim: 1 }, &[vec![g]], 1.0, 0.4).unwrap();
        let s = compute_s_t(&vs, 1.0, 0.4).unwrap();
        assert!((s.get(0, 0) - g * g / (g * g + 0.4)).abs() < 1e-14);
        let t = 30;
        let gs = vec![vec![1.0]; t];
        let vs = root_sequence(&diag(1), &gs, 1.0, 1.0).unwrap();
        let s = compute_s_t(&vs, 1.0, 1.0).unwrap();
        let want: f64 = (0..t).map(|k| 1.0 / (k as f64 + 2.0)).sum();
        assert!((s.get(0, 0) - want).abs() < 1e-12);
        let b = check_st_bound_commutative(&diag(1), &vs[..1], 1.0, 1.0).unwrap();
        assert!((b.lhs - 0.5).abs() < 1e-14 && (b.rhs - 2f64.ln()).abs() < 1e-14 && b.holds);
    }

    #[test]
    fn s_t_with_zero_beta_counts_steps() {
        let d = 3;
        let vs = vec![SymMatrix::from_diag(&[1.0, 2.0, 0.5]); 5];
        let s = compute_s_t(&vs, 0.0, 0.0).unwrap();
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { 5.0 } else { 0.0 };
                assert!((s.get(i, j) - want).abs() < 1e-14);
            }
        }
        assert!(matches!(compute_s_t(&[SymMatrix::zeros(2)], 1.0, 1.0), Err(Error::SingularPreconditioner)));
    }

    #[test]
    fn st_bound_random_diagonal_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        for k in 0..200 {
            let d = 1 + k % 8;
            let t = 1 + rng.random_range(0..200);
            let beta = if k % 3 == 0 { 1.0 } else { rng.random_range(0.5..1.0) };
            let eps = 10f64.powf(rng.random_range(-4.0..0.0));
            let gs: Vec<Vec<f64>> = (0..t).map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
            let set = if k % 2 == 0 { diag(d) } else { PreconditionerSet::Scalar { dim: d } };
            let vs = root_sequence(&set, &gs, beta, eps).unwrap();
            let b = check_st_bound_commutative(&set, &vs, beta, eps).unwrap();
            assert!(b.holds, "run {k}: {b:?}");
        }
        let vs = vec![SymMatrix::identity(2)];
        assert!(check_st_bound_commutative(&PreconditionerSet::Full { dim: 2 }, &vs, 1.0, 1.0).is_err());
    }

    #[test]
    fn second_order_sum_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let g0 = vec![0.3, -1.2, 0.5];
        let h = SymMatrix::scaled_identity(3, 1.0 / 3.0);
        assert!(check_second_order_sum(&[g0], &PreconditionerSet::Full { dim: 3 }, 1.0, 1e-3, &h).unwrap().holds);
        let gs: Vec<Vec<f64>> = (0..100).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let hd = SymMatrix::from_diag(&[0.1, 0.4, 0.2, 0.3]);
        assert!(check_second_order_sum(&gs, &diag(4), 1.0, 1e-3, &hd).unwrap().holds);
        let z = check_second_order_sum(&[vec![0.0; 4]], &diag(4), 1.0, 0.0, &hd).unwrap();
        assert_eq!((z.lhs, z.rhs, z.holds), (0.0, 0.0, true));
        let off = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        assert!(check_second_order_sum(&[vec![1.0, 0.0]], &diag(2), 1.0, 1e-3, &off).is_err());
    }

    #[test]
    fn rate_fit_recovers_exponents() {
        let t: Vec<f64> = (1..=64).map(|k| k as f64).collect();
        let y: Vec<f64> = t.iter().map(|v| 7.0 / (v * v)).collect();
        assert!((rate_fit(&t, &y).unwrap() + 2.0).abs() < 1e-6);
        let y: Vec<f64> = t.iter().map(|v| 3.0 / v.sqrt()).collect();
        assert!((rate_fit(&t, &y).unwrap() + 0.5).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let y: Vec<f64> = t.iter().map(|v| (1.0 + 0.01 * rng.random_range(-1.0..1.0)) / v).collect();
        assert!((rate_fit(&t, &y).unwrap() + 1.0).abs() < 0.02);
        assert!(rate_fit(&t[..4], &y[..4]).is_err());
        let mut bad = y.clone();
        bad[3] = 0.0;
        assert!(rate_fit(&t, &bad).is_err());
    }
}
