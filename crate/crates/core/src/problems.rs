//! Test objectives with known constants.

mod hard;

pub use hard::{build_p_prime, HardAudit, HardInstance, HardInstanceParams, PiecewiseDerivative};

use serde::{Deserialize, Serialize};

use crate::analysis::{adaptive_smoothness, adaptive_variance, standard_smoothness, Smoothness};
use crate::error::{invalid, Error, Result};
use crate::optimizers::{GradOracle, Objective};
use crate::precond::PreconditionerSet;
use crate::rng::{seeded, uniform_vec, CounterRng, Purpose};
use crate::symkernels::{dot, eig_sym, sqrt_psd, SymMatrix};

/// Additive gradient noise, independent of x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    None,
    GaussianIso { variance: f64 },
    GaussianCov { cov: SymMatrix },
    /// Coordinates −c·Bernoulli(θ) plus a drift that must equal c·θ.
    BernoulliSpike { c: f64, theta: f64, drift: Vec<f64> },
}

impl NoiseModel {
    /// Spike noise with the drift that makes it mean zero.
    pub fn centered_spike(c: f64, theta: f64, d: usize) -> Self {
        NoiseModel::BernoulliSpike { c, theta, drift: vec![c * theta; d] }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            NoiseModel::None => Ok(()),
            NoiseModel::GaussianIso { variance } if *variance >= 0.0 && variance.is_finite() => Ok(()),
            NoiseModel::GaussianIso { .. } => Err(invalid("variance must be finite and nonnegative")),
            NoiseModel::GaussianCov { cov } => {
                if cov.dim() != d {
                    return Err(invalid("covariance dimension mismatch"));
                }
                crate::symkernels::check_psd(cov)
            }
            NoiseModel::BernoulliSpike { c, theta, drift } => {
                if !(c.is_finite() && *c >= 0.0) || !(0.0..=1.0).contains(theta) {
                    return Err(invalid("spike noise needs c >= 0 and theta in [0,1]"));
                }
                if drift.len() != d {
                    return Err(invalid("drift dimension mismatch"));
                }
                let want = c * theta;
                if drift.iter().any(|v| (v - want).abs() > 1e-12 * want.abs().max(f64::MIN_POSITIVE)) {
                    return Err(invalid("drift must equal c*theta so the oracle stays unbiased"));
                }
                Ok(())
            }
        }
    }

    /// Covariance of one draw.
    pub fn covariance(&self, d: usize) -> SymMatrix {
        match self {
            NoiseModel::None => SymMatrix::zeros(d),
            NoiseModel::GaussianIso { variance } => SymMatrix::scaled_identity(d, *variance),
            NoiseModel::GaussianCov { cov } => cov.clone(),
            NoiseModel::BernoulliSpike { c, theta, .. } => SymMatrix::scaled_identity(d, c * c * theta * (1.0 - theta)),
        }
    }

    pub fn is_none(&self) -> bool {
        match self {
            NoiseModel::None => true,
            NoiseModel::GaussianIso { variance } => *variance == 0.0,
            NoiseModel::GaussianCov { cov } => cov.max_abs() == 0.0,
            NoiseModel::BernoulliSpike { c, theta, .. } => *c == 0.0 || *theta == 0.0,
        }
    }
}

/// A validated noise model ready to draw from.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    model: NoiseModel,
    d: usize,
    factor: Option<SymMatrix>,
}

impl NoiseSampler {
    pub fn new(model: NoiseModel, d: usize) -> Result<Self> {
        model.validate(d)?;
        let factor = match &model {
            NoiseModel::GaussianCov { cov } => Some(sqrt_psd(cov)?),
            _ => None,
        };
        Ok(NoiseSampler { model, d, factor })
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    /// Mean-zero draw for step `t`, keyed by (seed, t, coordinate).
    pub fn draw(&self, rng: &CounterRng, t: u64) -> Vec<f64> {
        match &self.model {
            NoiseModel::None => vec![0.0; self.d],
            NoiseModel::GaussianIso { variance } => {
                let s = variance.sqrt();
                rng.normals(Purpose::Noise, t, self.d).into_iter().map(|z| s * z).collect()
            }
            NoiseModel::GaussianCov { .. } => {
                let z = rng.normals(Purpose::Noise, t, self.d);
                self.factor.as_ref().expect("factor built with model").matvec(&z)
            }
            NoiseModel::BernoulliSpike { c, theta, drift } => rng
                .uniforms(Purpose::Noise, t, self.d)
                .into_iter()
                .zip(drift)
                .map(|(u, dr)| if u < *theta { -c + dr } else { *dr })
                .collect(),
        }
    }
}

/// f(x) = ½xᵀAx − bᵀx with additive gradient noise.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    a: SymMatrix,
    b: Vec<f64>,
    x_star: Option<Vec<f64>>,
    f_star: Option<f64>,
    noise: NoiseSampler,
}

impl QuadraticProblem {
    pub fn new(a: SymMatrix, b: Vec<f64>, noise: NoiseModel) -> Result<Self> {
        let d = a.dim();
        if b.len() != d {
            return Err(invalid("linear term dimension mismatch"));
        }
        if !a.is_finite() || b.iter().any(|v| !v.is_finite()) {
            return Err(invalid("quadratic has non-finite coefficients"));
        }
        let noise = NoiseSampler::new(noise, d)?;
        let e = eig_sym(&a)?;
        let top = e.op_norm();
        let cut = 1e-12 * top;
        let xs = e.apply_fn(&b, |l| if l.abs() > cut { 1.0 / l } else { 0.0 });
        let resid: Vec<f64> = a.matvec(&xs).iter().zip(&b).map(|(u, v)| u - v).collect();
        let consistent = crate::symkernels::norm2(&resid) <= 1e-10 * (crate::symkernels::norm2(&b) + top * crate::symkernels::norm2(&xs)).max(f64::MIN_POSITIVE);
        let psd = e.min() >= -crate::symkernels::TOL_PSD * top;
        let x_star = consistent.then_some(xs);
        let f_star = match (&x_star, psd) {
            (Some(xs), true) => Some(-0.5 * dot(&b, xs)),
            _ => None,
        };
        Ok(QuadraticProblem { a, b, x_star, f_star, noise })
    }

    pub fn hessian(&self) -> &SymMatrix {
        &self.a
    }

    pub fn linear(&self) -> &[f64] {
        &self.b
    }

    pub fn minimizer(&self) -> Option<&[f64]> {
        self.x_star.as_deref()
    }

    pub fn noise(&self) -> &NoiseModel {
        self.noise.model()
    }

    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        if x.len() != self.a.dim() {
            return Err(invalid("point dimension mismatch"));
        }
        let ax = self.a.matvec(x);
        let value = 0.5 * dot(x, &ax) - dot(&self.b, x);
        let g: Vec<f64> = ax.iter().zip(&self.b).map(|(u, v)| u - v).collect();
        finite(value, g)
    }
}

fn finite(value: f64, g: Vec<f64>) -> Result<(f64, Vec<f64>)> {
    if value.is_finite() && g.iter().all(|v| v.is_finite()) {
        Ok((value, g))
    } else {
        Err(Error::Numerical("objective produced non-finite output".into()))
    }
}

impl GradOracle for QuadraticProblem {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn sample(&self, x: &[f64], t: u64, rng: &CounterRng) -> Result<(f64, Vec<f64>)> {
        let (value, mut g) = self.eval(x)?;
        if self.is_deterministic() {
            return Ok((value, g));
        }
        let delta = self.noise.draw(rng, t);
        for (gi, di) in g.iter_mut().zip(&delta) {
            *gi += di;
        }
        finite(value + dot(&delta, x), g)
    }

    fn is_deterministic(&self) -> bool {
        self.noise.model().is_none()
    }
}

impl Objective for QuadraticProblem {
    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.eval(x)
    }

    fn optimal_value(&self) -> Option<f64> {
        self.f_star
    }
}

/// Smoothed tent profile: ψ′(u) = u on |u| ≤ 1, sign(u)(2 − |u|) on 1 < |u| ≤ 2, 0 beyond.
fn tent_value(u: f64) -> f64 {
    let a = u.abs();
    if a <= 1.0 {
        0.5 * a * a
    } else if a <= 2.0 {
        0.5 + 2.0 * (a - 1.0) - 0.5 * (a * a - 1.0)
    } else {
        1.0
    }
}

fn tent_slope(u: f64) -> f64 {
    let a = u.abs();
    if a <= 1.0 {
        u
    } else if a <= 2.0 {
        u.signum() * (2.0 - a)
    } else {
        0.0
    }
}

/// Separable nonconvex objective Σ wᵢ sᵢ² ψ((xᵢ − cᵢ)/sᵢ), minimum 0, ℓ∞-smoothness Σ wᵢ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TentProblem {
    pub weights: Vec<f64>,
    pub scales: Vec<f64>,
    pub centers: Vec<f64>,
}

impl TentProblem {
    pub fn new(weights: Vec<f64>, scales: Vec<f64>, centers: Vec<f64>) -> Result<Self> {
        let d = weights.len();
        if d == 0 || scales.len() != d || centers.len() != d {
            return Err(invalid("tent problem needs equal-length nonempty weights, scales, centers"));
        }
        if weights.iter().chain(&scales).any(|v| !(*v > 0.0 && v.is_finite())) || centers.iter().any(|v| !v.is_finite()) {
            return Err(invalid("tent weights and scales must be positive and finite"));
        }
        Ok(TentProblem { weights, scales, centers })
    }

    /// Equal weights 1/d, unit scales, centers in [−1, 1] and a start whose
    /// coordinates sit at |u| ∈ [0.5, 1.9) from their centers.
    pub fn random(d: usize, seed: u64) -> (Self, Vec<f64>) {
        let mut rng = seeded(seed);
        let centers = uniform_vec(&mut rng, d, -1.0, 1.0);
        let offsets = uniform_vec(&mut rng, d, 0.5, 1.9);
        let signs = uniform_vec(&mut rng, d, -1.0, 1.0);
        let x0 = (0..d).map(|i| centers[i] + offsets[i] * signs[i].signum()).collect();
        (TentProblem { weights: vec![1.0 / d as f64; d], scales: vec![1.0; d], centers }, x0)
    }

    pub fn smoothness_linf(&self) -> f64 {
        crate::symkernels::pairwise_sum(&self.weights)
    }

    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        if x.len() != self.weights.len() {
            return Err(invalid("point dimension mismatch"));
        }
        let mut vals = Vec::with_capacity(x.len());
        let mut g = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let (w, s) = (self.weights[i], self.scales[i]);
            let u = (x[i] - self.centers[i]) / s;
            vals.push(w * s * s * tent_value(u));
            g.push(w * s * tent_slope(u));
        }
        finite(crate::symkernels::pairwise_sum(&vals), g)
    }
}

impl GradOracle for TentProblem {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn sample(&self, x: &[f64], _: u64, _: &CounterRng) -> Result<(f64, Vec<f64>)> {
        self.eval(x)
    }

    fn is_deterministic(&self) -> bool {
        true
    }
}

impl Objective for TentProblem {
    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.eval(x)
    }

    fn optimal_value(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// How a quadratic's Hessian is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HessianSpec {
    Dense { matrix: SymMatrix },
    Diagonal { values: Vec<f64> },
    /// Q diag(eigenvalues) Qᵀ with Q drawn from `rotation_seed` (identity when absent).
    Spectrum { eigenvalues: Vec<f64>, rotation_seed: Option<u64> },
}

impl HessianSpec {
    pub fn build(&self) -> Result<SymMatrix> {
        match self {
            HessianSpec::Dense { matrix } => Ok(matrix.clone()),
            HessianSpec::Diagonal { values } if !values.is_empty() => Ok(SymMatrix::from_diag(values)),
            HessianSpec::Spectrum { eigenvalues, rotation_seed } if !eigenvalues.is_empty() => match rotation_seed {
                None => Ok(SymMatrix::from_diag(eigenvalues)),
                Some(seed) => {
                    let d = eigenvalues.len();
                    let mut rng = seeded(*seed);
                    let g = uniform_vec(&mut rng, d * d, -1.0, 1.0);
                    let q = eig_sym(&SymMatrix::from_row_major(d, g)?)?;
                    Ok(q.with_values(eigenvalues))
                }
            },
            _ => Err(invalid("empty Hessian")),
        }
    }
}

/// JSON-describable problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    Quadratic {
        hessian: HessianSpec,
        b: Vec<f64>,
        x0: Vec<f64>,
        noise: NoiseModel,
    },
    Tent {
        #[serde(flatten)]
        problem: TentProblem,
        x0: Vec<f64>,
    },
    HardInstance {
        #[serde(flatten)]
        params: HardInstanceParams,
        /// Only the origin is accepted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<Vec<f64>>,
    },
}

/// A constructed problem together with its starting point.
#[derive(Debug, Clone)]
pub enum Problem {
    Quadratic { problem: QuadraticProblem, x0: Vec<f64> },
    Tent { problem: TentProblem, x0: Vec<f64> },
    Hard(HardInstance),
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem> {
        match self {
            ProblemSpec::Quadratic { hessian, b, x0, noise } => {
                let problem = QuadraticProblem::new(hessian.build()?, b.clone(), noise.clone())?;
                if x0.len() != problem.dim() {
                    return Err(invalid("x0 dimension mismatch"));
                }
                Ok(Problem::Quadratic { problem, x0: x0.clone() })
            }
            ProblemSpec::Tent { problem, x0 } => {
                let problem = TentProblem::new(problem.weights.clone(), problem.scales.clone(), problem.centers.clone())?;
                if x0.len() != problem.dim() {
                    return Err(invalid("x0 dimension mismatch"));
                }
                Ok(Problem::Tent { problem, x0: x0.clone() })
            }
            ProblemSpec::HardInstance { params, x0 } => {
                if let Some(x0) = x0 {
                    if x0.len() != params.d || x0.iter().any(|&v| v != 0.0) {
                        return Err(invalid("the hard instance starts at the origin"));
                    }
                }
                Ok(Problem::Hard(HardInstance::new(*params)?))
            }
        }
    }
}

impl Problem {
    pub fn objective(&self) -> &dyn Objective {
        match self {
            Problem::Quadratic { problem, .. } => problem,
            Problem::Tent { problem, .. } => problem,
            Problem::Hard(h) => h,
        }
    }

    pub fn x0(&self) -> Vec<f64> {
        match self {
            Problem::Quadratic { x0, .. } | Problem::Tent { x0, .. } => x0.clone(),
            Problem::Hard(h) => vec![0.0; h.params().d],
        }
    }

    /// Closed-form constants for the given set; `None` marks unavailable entries.
    pub fn known_constants(&self, set: &PreconditionerSet) -> KnownConstants {
        let mut k = KnownConstants::default();
        match self {
            Problem::Quadratic { problem, x0 } => {
                if let (Some(fs), Ok((f0, _))) = (problem.optimal_value(), problem.value_grad(x0)) {
                    k.delta0 = Some(f0 - fs);
                }
                k.adaptive_smoothness = adaptive_smoothness(set, problem.hessian()).ok();
                k.standard_smoothness = standard_smoothness(set, problem.hessian()).ok();
                let d = problem.dim();
                let cov = problem.noise().covariance(d);
                k.sigma_h = adaptive_variance(set, &cov).ok();
                k.sigma_dual = if problem.noise().is_none() {
                    Some(0.0)
                } else {
                    gaussian_dual_sigma(set, problem.noise(), d)
                };
            }
            Problem::Tent { problem, x0 } => {
                k.delta0 = problem.value_grad(x0).ok().map(|v| v.0);
                if let PreconditionerSet::Diagonal { .. } = set {
                    let l = problem.smoothness_linf();
                    k.standard_smoothness = Some(l);
                    k.adaptive_smoothness = Some(Smoothness::Exact(l));
                }
                k.sigma_h = Some(0.0);
                k.sigma_dual = Some(0.0);
            }
            Problem::Hard(h) => {
                let p = h.params();
                k.delta0 = Some(p.delta0 * h.unit_gap());
                if let PreconditionerSet::Diagonal { .. } = set {
                    k.standard_smoothness = Some(p.smoothness);
                    let g = h.gradient_scale();
                    let (c, th) = (h.spike(), h.theta());
                    let d = p.d as f64;
                    k.sigma_h = Some(g * d * c * (th * (1.0 - th)).sqrt());
                    let var = c * c * (d * th * (1.0 - th) + 4.0 * d * (d - 1.0) * th * th * (1.0 - th) * (1.0 - th));
                    k.sigma_dual = Some(g * var.sqrt());
                }
            }
        }
        k
    }
}

/// √E‖δ‖²_* where it has a closed form.
fn gaussian_dual_sigma(set: &PreconditionerSet, noise: &NoiseModel, d: usize) -> Option<f64> {
    let cov = match noise {
        NoiseModel::GaussianIso { .. } | NoiseModel::GaussianCov { .. } => noise.covariance(d),
        _ => return None,
    };
    let tr = cov.trace();
    match (set, noise) {
        (PreconditionerSet::Full { .. }, _) => Some(tr.sqrt()),
        (PreconditionerSet::Scalar { .. }, _) => Some((d as f64 * tr).sqrt()),
        (PreconditionerSet::Diagonal { .. }, NoiseModel::GaussianIso { variance }) => {
            let dd = d as f64;
            Some((variance * (dd + 2.0 * dd * (dd - 1.0) / std::f64::consts::PI)).sqrt())
        }
        _ => None,
    }
}

/// Constants used by tuning rules.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct KnownConstants {
    pub delta0: Option<f64>,
    pub adaptive_smoothness: Option<Smoothness>,
    pub standard_smoothness: Option<f64>,
    pub sigma_h: Option<f64>,
    pub sigma_dual: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    #[test]
    fn quadratic_example() {
        let p = QuadraticProblem::new(SymMatrix::identity(2), vec![0.0, 0.0], NoiseModel::None).unwrap();
        let (v, g) = p.value_grad(&[1.0, 2.0]).unwrap();
        assert_eq!(v, 2.5);
        assert_eq!(g, vec![1.0, 2.0]);
        let rng = CounterRng::new(1);
        assert_eq!(p.sample(&[1.0, 2.0], 7, &rng).unwrap(), (v, g));
        assert!(p.is_deterministic());
    }

    #[test]
    fn quadratic_minimizer_solves_system() {
        let a = SymMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let p = QuadraticProblem::new(a.clone(), vec![1.0, -1.0], NoiseModel::None).unwrap();
        let xs = p.minimizer().unwrap();
        let r = a.matvec(xs);
        assert!((r[0] - 1.0).abs() < 1e-12 && (r[1] + 1.0).abs() < 1e-12);
        let (fmin, _) = p.value_grad(xs).unwrap();
        assert!((fmin - p.optimal_value().unwrap()).abs() < 1e-14);
        // indefinite: unbounded below
        let q = QuadraticProblem::new(SymMatrix::from_diag(&[1.0, -1.0]), vec![0.0, 0.0], NoiseModel::None).unwrap();
        assert_eq!(q.optimal_value(), None);
        // inconsistent singular system
        let q = QuadraticProblem::new(SymMatrix::from_diag(&[1.0, 0.0]), vec![0.0, 1.0], NoiseModel::None).unwrap();
        assert_eq!(q.minimizer(), None);
    }

    #[test]
    fn gaussian_covariance_moments() {
        let cov = SymMatrix::from_rows(&[vec![2.0, 0.6, 0.0], vec![0.6, 1.0, -0.3], vec![0.0, -0.3, 0.5]]).unwrap();
        let s = NoiseSampler::new(NoiseModel::GaussianCov { cov: cov.clone() }, 3).unwrap();
        let rng = CounterRng::new(9);
        let n = 100_000;
        let mut sum = [0.0; 3];
        let mut prod = [[0.0; 3]; 3];
        let mut prod2 = [[0.0; 3]; 3];
        for t in 0..n {
            let z = s.draw(&rng, t);
            for i in 0..3 {
                sum[i] += z[i];
                for j in 0..3 {
                    prod[i][j] += z[i] * z[j];
                    prod2[i][j] += (z[i] * z[j]).powi(2);
                }
            }
        }
        let nf = n as f64;
        for i in 0..3 {
            let se = (cov.get(i, i) / nf).sqrt();
            assert!((sum[i] / nf).abs() <= 3.0 * se);
            for j in 0..3 {
                let m = prod[i][j] / nf;
                let se = ((prod2[i][j] / nf - m * m) / nf).sqrt();
                assert!((m - cov.get(i, j)).abs() <= 3.0 * se, "({i},{j}) {m} vs {}", cov.get(i, j));
            }
        }
    }

    #[test]
    fn spike_noise_is_unbiased_per_coordinate() {
        let (c, theta, d) = (4.0, 0.05, 4);
        let s = NoiseSampler::new(NoiseModel::centered_spike(c, theta, d), d).unwrap();
        let rng = CounterRng::new(10);
        let n = 100_000;
        let mut sum = vec![0.0; d];
        for t in 0..n {
            for (a, b) in sum.iter_mut().zip(s.draw(&rng, t)) {
                *a += b;
            }
        }
        let se = c * (theta * (1.0 - theta) / n as f64).sqrt();
        for v in sum {
            assert!((v / n as f64).abs() <= 3.0 * se);
        }
        assert!(NoiseSampler::new(NoiseModel::BernoulliSpike { c, theta, drift: vec![0.0; d] }, d).is_err());
    }

    #[test]
    fn noise_reproducible_by_step() {
        let s = NoiseSampler::new(NoiseModel::GaussianIso { variance: 2.0 }, 5).unwrap();
        let rng = CounterRng::new(3);
        assert_eq!(s.draw(&rng, 11), s.draw(&rng, 11));
        assert_ne!(s.draw(&rng, 11), s.draw(&rng, 12));
    }

    #[test]
    fn tent_profile_is_smooth_and_bounded() {
        for k in 0..4000 {
            let u = -3.0 + k as f64 * 1.5e-3;
            let h = 1e-6;
            let fd = (tent_value(u + h) - tent_value(u - h)) / (2.0 * h);
            assert!((fd - tent_slope(u)).abs() < 1e-6);
            assert!((0.0..=1.0).contains(&tent_value(u)));
            let v = u + 1e-3;
            assert!((tent_slope(u) - tent_slope(v)).abs() <= 1e-3 + 1e-15);
        }
    }

    #[test]
    fn tent_problem_gradient_and_constants() {
        let (p, x0) = TentProblem::random(8, 3);
        let (_, g) = p.value_grad(&x0).unwrap();
        let h = 1e-6;
        for i in 0..8 {
            let mut a = x0.clone();
            let mut b = x0.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (p.value_grad(&a).unwrap().0 - p.value_grad(&b).unwrap().0) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8);
        }
        assert!((p.smoothness_linf() - 1.0).abs() < 1e-15);
        let prob = Problem::Tent { problem: p, x0 };
        let k = prob.known_constants(&PreconditionerSet::Diagonal { dim: 8 });
        assert!(k.delta0.unwrap() > 0.0);
    }

    #[test]
    fn rotated_spectrum_has_requested_eigenvalues() {
        let h = HessianSpec::Spectrum { eigenvalues: vec![3.0, 1.0, 2.0], rotation_seed: Some(7) };
        let a = h.build().unwrap();
        let e = eig_sym(&a).unwrap();
        for (x, y) in e.values().iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(!a.is_diagonal());
        assert_eq!(h.build().unwrap(), a);
    }

    #[test]
    fn quadratic_constants() {
        let a = SymMatrix::from_diag(&[1.0, -2.0]);
        let spec = ProblemSpec::Quadratic {
            hessian: HessianSpec::Dense { matrix: a },
            b: vec![0.0, 0.0],
            x0: vec![1.0, 1.0],
            noise: NoiseModel::None,
        };
        let p = spec.build().unwrap();
        let k = p.known_constants(&PreconditionerSet::Full { dim: 2 });
        assert_eq!(k.adaptive_smoothness, Some(Smoothness::Exact(3.0)));
        assert_eq!(k.sigma_h, Some(0.0));
        assert_eq!(k.delta0, None);
    }
}
