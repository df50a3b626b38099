//! Lower-bound construction for momentum NSD under ℓ∞ geometry.
//!
//! h(x) = (1/d)Σ p(xᵢ) where p′ is a periodic chain of tents pinned to −ε on
//! the lattice {0, η, 2η, …} that NSD iterates walk along. Spike noise
//! −C·Bernoulli(θ) plus drift (ε/d)·1 keeps coordinates stuck until a spike
//! arrives. The f-scale instance is f(x) = Δ₀·h(√(L/Δ₀)·x).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::optimizers::{GradOracle, Objective};
use crate::rng::{seeded, CounterRng, Purpose};
use crate::symkernels::pairwise_sum;

use rand::Rng;

/// Trapezoid intervals per period used to recover p from p′.
const TABLE_STEPS: usize = 10_000;
/// Largest breakpoint set we are willing to materialize.
const MAX_BREAKPOINTS: usize = 1 << 22;

/// 1-Lipschitz periodic tent derivative (in h units), with input scale `s`:
/// g(x) = −ε + s(x − y_k) rising to the midpoint, then falling back to −ε.
#[derive(Debug, Clone)]
pub struct PiecewiseDerivative {
    eps: f64,
    scale: f64,
    origin: f64,
    period: f64,
    /// offsets from `origin`, sorted, ending with `period`
    knots: Vec<f64>,
    /// running integral of g over one period, in h units
    table: Vec<f64>,
}

/// Tent derivative through `breakpoints` with period 1/ε.
pub fn build_p_prime(eps: f64, breakpoints: &[f64]) -> Result<PiecewiseDerivative> {
    if breakpoints.windows(2).any(|w| w[0] == w[1]) || {
        let mut s = breakpoints.to_vec();
        s.sort_by(f64::total_cmp);
        s.windows(2).any(|w| w[0] == w[1])
    } {
        return Err(invalid("breakpoints must be distinct"));
    }
    PiecewiseDerivative::new(eps, 1.0, breakpoints)
}

impl PiecewiseDerivative {
    fn new(eps: f64, scale: f64, points: &[f64]) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid("need eps > 0"));
        }
        if points.is_empty() || points.iter().any(|v| !v.is_finite()) {
            return Err(invalid("need finite, nonempty breakpoints"));
        }
        if points.len() as f64 > 1.0 / (4.0 * eps * eps) {
            return Err(Error::ConstructionInfeasible(format!(
                "{} breakpoints exceed 1/(4ε²) = {}",
                points.len(),
                1.0 / (4.0 * eps * eps)
            )));
        }
        let period = 1.0 / (eps * scale);
        let origin = points.iter().copied().fold(f64::INFINITY, f64::min);
        let mut knots: Vec<f64> = points.iter().map(|p| p - origin).collect();
        if knots.iter().any(|&k| k >= period) {
            return Err(invalid("breakpoints must lie within one period of the smallest"));
        }
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        knots.push(period);
        let mut g = PiecewiseDerivative { eps, scale, origin, period, knots, table: Vec::new() };
        g.table = g.build_table();
        Ok(g)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Breakpoints reduced to one period, as absolute positions.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.knots[..self.knots.len() - 1].iter().map(|k| k + self.origin).collect()
    }

    fn wrap(&self, v: f64) -> f64 {
        let r = v - self.period * (v / self.period).floor();
        if r >= self.period { 0.0 } else { r.max(0.0) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.origin {
            return -self.eps;
        }
        let r = self.wrap(x - self.origin);
        let k = self.knots.partition_point(|&y| y <= r) - 1;
        let (y0, y1) = (self.knots[k], self.knots[k + 1]);
        if r <= 0.5 * (y0 + y1) {
            -self.eps + self.scale * (r - y0)
        } else {
            -self.eps - self.scale * (r - y1)
        }
    }

    fn build_table(&self) -> Vec<f64> {
        let h = self.period / TABLE_STEPS as f64;
        let mut table = Vec::with_capacity(TABLE_STEPS + 1);
        table.push(0.0);
        let mut prev = self.eval(self.origin);
        let mut acc = 0.0;
        for k in 1..=TABLE_STEPS {
            let cur = self.eval(self.origin + (k as f64 * h).min(self.period * (1.0 - f64::EPSILON)));
            acc += 0.5 * h * (prev + cur) * self.scale;
            table.push(acc);
            prev = cur;
        }
        table
    }

    /// ∫ g over one period, in h units.
    pub fn period_integral(&self) -> f64 {
        *self.table.last().expect("table is nonempty")
    }

    /// Smallest running integral from the origin over one period.
    pub fn min_running_integral(&self) -> f64 {
        self.table.iter().copied().fold(0.0, f64::min)
    }

    /// p(x) − p(origin) in h units.
    pub fn integral(&self, x: f64) -> f64 {
        if x < self.origin {
            return self.eps * self.scale * (self.origin - x);
        }
        let v = x - self.origin;
        let n = (v / self.period).floor();
        let r = self.wrap(v);
        let h = self.period / TABLE_STEPS as f64;
        let k = ((r / h).floor() as usize).min(TABLE_STEPS - 1);
        let a = k as f64 * h;
        let partial = 0.5 * (r - a) * (self.eval(self.origin + a) + self.eval(self.origin + r)) * self.scale;
        n * self.period_integral() + self.table[k] + partial
    }
}

/// Parameters of the hard instance at f scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardInstanceParams {
    pub d: usize,
    pub horizon: u64,
    pub delta0: f64,
    pub smoothness: f64,
    pub sigma: f64,
    /// Learning rate whose lattice the construction protects.
    pub eta: f64,
}

#[derive(Debug, Clone)]
pub struct HardInstance {
    params: HardInstanceParams,
    eps: f64,
    spike: f64,
    theta: f64,
    n_points: usize,
    g: PiecewiseDerivative,
}

/// Construction checks reported alongside lower-bound runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardAudit {
    pub eps: f64,
    pub spike: f64,
    pub theta: f64,
    pub n_points: usize,
    pub lipschitz_ratio_max: f64,
    pub lattice_exact: bool,
    pub period_integral: f64,
    pub min_running_integral: f64,
    pub unit_gap: f64,
    /// E‖δ − Eδ‖₁² on the h scale against σ′².
    pub noise_l1_second_moment: f64,
    pub sigma_h_scale: f64,
    /// z-score of the coordinate-summed empirical gradient mean.
    pub mean_sum_z: f64,
    /// Average squared per-coordinate z-score (≈ 1 when unbiased).
    pub mean_chi2_per_coord: f64,
    pub passed: bool,
}

impl HardInstance {
    pub fn new(params: HardInstanceParams) -> Result<Self> {
        let HardInstanceParams { d, horizon, delta0, smoothness, sigma, eta } = params;
        if d == 0 || horizon == 0 {
            return Err(invalid("need d >= 1 and T >= 1"));
        }
        if !(delta0 > 0.0) || !(smoothness > 0.0) || !(eta > 0.0) {
            return Err(invalid("need delta0, L, eta > 0"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid("the hard instance needs sigma > 0"));
        }
        let s = sigma / (smoothness * delta0).sqrt();
        let (df, tf) = (d as f64, horizon as f64);
        let eps = (df.powf(0.25) * s.sqrt() / (5f64.powf(0.25) * tf.sqrt())).min(s / 5f64.sqrt());
        let spike = s * s / (5.0 * eps);
        let theta = 5.0 * eps * eps / (df * s * s);
        let n = (1.0 / (4.0 * eps * eps)).floor();
        if n < 1.0 {
            return Err(Error::ConstructionInfeasible("no breakpoint fits: 1/(4ε²) < 1".into()));
        }
        if n > MAX_BREAKPOINTS as f64 {
            return Err(Error::ConstructionInfeasible(format!("{n} breakpoints is too many to materialize")));
        }
        let n_points = n as usize;
        // lattice in f units, built the way NSD iterates accumulate
        let x_scale = (smoothness / delta0).sqrt();
        let period = 1.0 / (eps * x_scale);
        let mut pts = Vec::with_capacity(n_points);
        let mut y = 0.0;
        for _ in 0..n_points {
            pts.push(y - period * (y / period).floor());
            y += eta;
        }
        let g = PiecewiseDerivative::new(eps, x_scale, &pts)?;
        Ok(HardInstance { params, eps, spike, theta, n_points, g })
    }

    pub fn params(&self) -> &HardInstanceParams {
        &self.params
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn spike(&self) -> f64 {
        self.spike
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn derivative(&self) -> &PiecewiseDerivative {
        &self.g
    }

    /// √(LΔ₀): gradient units of f per unit of h.
    pub fn gradient_scale(&self) -> f64 {
        (self.params.smoothness * self.params.delta0).sqrt()
    }

    /// h(0) − inf h.
    pub fn unit_gap(&self) -> f64 {
        -self.g.min_running_integral().min(0.0)
    }

    /// Expected min-gradient floor min(e⁻²5^{−1/4}(dLΔ₀σ²)^{1/4}T^{−1/2}, e⁻²5^{−1/2}σ).
    pub fn floor(&self) -> f64 {
        let p = &self.params;
        let e2 = (-2f64).exp();
        let a = e2 * 5f64.powf(-0.25) * (p.d as f64 * p.smoothness * p.delta0 * p.sigma * p.sigma).powf(0.25)
            / (p.horizon as f64).sqrt();
        a.min(e2 * p.sigma / 5f64.sqrt())
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.params.d {
            return Err(invalid("point dimension mismatch"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite point".into()));
        }
        Ok(())
    }

    /// Spike draws δ_t on the h scale (before drift).
    fn spikes(&self, rng: &CounterRng, t: u64) -> Vec<f64> {
        rng.uniforms(Purpose::Noise, t, self.params.d)
            .into_iter()
            .map(|u| if u < self.theta { -self.spike } else { 0.0 })
            .collect()
    }

    /// Mean gradient plus drift, on the h scale, coordinatewise as (p′/d + ε/d).
    fn h_parts(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let d = self.params.d as f64;
        let drift = self.eps / d;
        let ps: Vec<f64> = x.iter().map(|&v| self.g.integral(v)).collect();
        let mean: Vec<f64> = x.iter().map(|&v| self.g.eval(v) / d).collect();
        let drifted = mean.iter().map(|m| m + drift).collect();
        (pairwise_sum(&ps) / d, mean, drifted)
    }

    /// Runs the construction checks with `draws` noise samples.
    pub fn audit(&self, draws: u64, seed: u64) -> HardAudit {
        let g = &self.g;
        let mut rng = seeded(seed);
        let span = g.period;
        let mut ratio_max: f64 = 0.0;
        for _ in 0..10_000 {
            let a = g.origin + rng.random_range(-0.5..2.5) * span;
            // p′ is piecewise linear, so tighter pairs only add roundoff to the quotient
            let w = span * 10f64.powf(rng.random_range(-4.0..0.0));
            let b = a + rng.random_range(-1.0..1.0) * w;
            if a != b {
                ratio_max = ratio_max.max((g.eval(a) - g.eval(b)).abs() / (g.scale * (a - b).abs()));
            }
        }
        let mut y = 0.0;
        let mut lattice_exact = true;
        for _ in 0..self.n_points {
            lattice_exact &= g.eval(y) == -self.eps;
            y += self.params.eta;
        }

        let d = self.params.d;
        let crng = CounterRng::new(seed);
        let mean_delta = -self.spike * self.theta;
        let mut l1sq = 0.0;
        let mut sums = vec![0.0; d];
        for t in 0..draws {
            let delta = self.spikes(&crng, t);
            let l1: f64 = delta.iter().map(|v| (v - mean_delta).abs()).sum();
            l1sq += l1 * l1;
            for (s, v) in sums.iter_mut().zip(&delta) {
                *s += v - mean_delta;
            }
        }
        let n = draws.max(1) as f64;
        let sd = self.spike * (self.theta * (1.0 - self.theta)).sqrt();
        let se = sd / n.sqrt();
        let total: f64 = sums.iter().sum::<f64>() / n;
        let mean_sum_z = if se > 0.0 { total / (se * (d as f64).sqrt()) } else { 0.0 };
        let chi2 = if se > 0.0 { sums.iter().map(|s| (s / n / se).powi(2)).sum::<f64>() / d as f64 } else { 0.0 };
        let sigma_h = self.params.sigma / self.gradient_scale();
        let noise_l1_second_moment = l1sq / n;
        let unit_gap = self.unit_gap();
        let passed = ratio_max <= 1.0 + 1e-9
            && lattice_exact
            && g.period_integral() >= -1e-12
            && unit_gap <= 1.0 + 1e-12
            && noise_l1_second_moment <= 1.05 * sigma_h * sigma_h
            && mean_sum_z.abs() <= 3.0
            && chi2 <= 1.0 + 3.0 * (2.0 / d as f64).sqrt();
        HardAudit {
            eps: self.eps,
            spike: self.spike,
            theta: self.theta,
            n_points: self.n_points,
            lipschitz_ratio_max: ratio_max,
            lattice_exact,
            period_integral: g.period_integral(),
            min_running_integral: g.min_running_integral(),
            unit_gap,
            noise_l1_second_moment,
            sigma_h_scale: sigma_h,
            mean_sum_z,
            mean_chi2_per_coord: chi2,
            passed,
        }
    }
}

impl GradOracle for HardInstance {
    fn dim(&self) -> usize {
        self.params.d
    }

    fn sample(&self, x: &[f64], t: u64, rng: &CounterRng) -> Result<(f64, Vec<f64>)> {
        self.check(x)?;
        let gs = self.gradient_scale();
        let (h, _, drifted) = self.h_parts(x);
        let delta = self.spikes(rng, t);
        let x_scale = (self.params.smoothness / self.params.delta0).sqrt();
        let mut lin = 0.0;
        let g = drifted
            .iter()
            .zip(&delta)
            .zip(x)
            .map(|((m, dl), xi)| {
                lin += (dl + self.eps / self.params.d as f64) * xi * x_scale;
                gs * (m + dl)
            })
            .collect();
        Ok((self.params.delta0 * (h + lin), g))
    }

    fn is_deterministic(&self) -> bool {
        false
    }
}

impl Objective for HardInstance {
    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check(x)?;
        let (h, mean, _) = self.h_parts(x);
        let gs = self.gradient_scale();
        Ok((self.params.delta0 * h, mean.into_iter().map(|m| gs * m).collect()))
    }

    fn optimal_value(&self) -> Option<f64> {
        Some(-self.params.delta0 * self.unit_gap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::{run, AlgorithmConfig};
    use crate::precond::PreconditionerSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> HardInstanceParams {
        HardInstanceParams { d: 256, horizon: 128, delta0: 1.0, smoothness: 1.0, sigma: 1.0, eta: 0.026 }
    }

    #[test]
    fn breakpoints_pin_to_minus_eps() {
        let g = build_p_prime(0.1, &[0.0, 1.0, 2.5, 7.0]).unwrap();
        for y in [0.0, 1.0, 2.5, 7.0, 10.0, 11.0, 17.0] {
            assert_eq!(g.eval(y), -0.1, "at {y}");
        }
        assert_eq!(g.eval(-3.0), -0.1);
    }

    #[test]
    fn midpoint_value() {
        let g = build_p_prime(0.1, &[0.0, 1.0, 2.5]).unwrap();
        assert!((g.eval(1.75) - (-0.1 + 0.75)).abs() < 1e-15);
        assert!((g.eval(0.5) - (-0.1 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn derivative_is_one_lipschitz() {
        let g = build_p_prime(0.05, &[0.0, 0.3, 4.0, 4.2, 11.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let a = rng.random_range(-10.0..60.0);
            let b = rng.random_range(-10.0..60.0);
            assert!((g.eval(a) - g.eval(b)).abs() <= (a - b).abs() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn too_many_breakpoints_rejected() {
        let pts: Vec<f64> = (0..30).map(|k| k as f64 * 0.01).collect();
        assert!(matches!(build_p_prime(0.1, &pts), Err(Error::ConstructionInfeasible(_))));
        assert!(build_p_prime(0.1, &[0.0, 0.0]).is_err());
        assert!(build_p_prime(0.0, &[0.0]).is_err());
    }

    #[test]
    fn integral_matches_fine_quadrature() {
        let g = build_p_prime(0.1, &[0.0, 1.0, 2.5, 7.0]).unwrap();
        for x in [-2.0, 0.3, 1.0, 5.5, 9.99, 13.7, 31.0] {
            let n = 200_000;
            let (lo, hi) = if x < 0.0 { (x, 0.0) } else { (0.0, x) };
            let h = (hi - lo) / n as f64;
            let mut s = 0.0;
            for k in 0..n {
                s += g.eval(lo + (k as f64 + 0.5) * h) * h;
            }
            let want = if x < 0.0 { -s } else { s };
            assert!((g.integral(x) - want).abs() < 1e-6, "{x}: {} vs {want}", g.integral(x));
        }
        assert!(g.period_integral() >= 0.0);
        assert!(g.min_running_integral() >= -1.0);
    }

    #[test]
    fn instance_constants() {
        let h = HardInstance::new(params()).unwrap();
        let d = 256.0;
        assert!(h.theta() <= 1.0 / d);
        assert!((h.spike() * d * h.theta() - h.eps()).abs() < 1e-12);
        assert!((5.0 * h.spike().powi(2) * d * h.theta() - 1.0).abs() < 1e-12);
        assert_eq!(h.n_points(), (1.0 / (4.0 * h.eps().powi(2))).floor() as usize);
        assert!(h.unit_gap() <= 1.0);
        assert!(h.floor() > 0.0);
    }

    #[test]
    fn sigma_zero_and_tiny_budget_rejected() {
        assert!(HardInstance::new(HardInstanceParams { sigma: 0.0, ..params() }).is_err());
        // ε = σ/√5 > 1/2 leaves no room for a breakpoint
        let p = HardInstanceParams { d: 1_000_000, horizon: 1, sigma: 5.0, ..params() };
        assert!(matches!(HardInstance::new(p), Err(Error::ConstructionInfeasible(_))));
    }

    #[test]
    fn first_coordinate_at_origin_is_pure_noise() {
        let h = HardInstance::new(params()).unwrap();
        let rng = CounterRng::new(3);
        let x = vec![0.0; 256];
        for t in 0..200 {
            let (_, g) = h.sample(&x, t, &rng).unwrap();
            assert_eq!(g[0], h.spikes(&rng, t)[0]);
        }
    }

    #[test]
    fn audit_passes() {
        let h = HardInstance::new(params()).unwrap();
        let a = h.audit(100_000, 1);
        assert!(a.passed, "{a:?}");
    }

    #[test]
    fn rescaled_iterates_agree() {
        let (d0, l, sigma, eta) = (4.0, 2.25, 1.5, 0.03);
        let f = HardInstance::new(HardInstanceParams { d: 16, horizon: 64, delta0: d0, smoothness: l, sigma, eta }).unwrap();
        let eta_h = eta * (l / d0).sqrt();
        let sigma_h = sigma / (l * d0).sqrt();
        let h = HardInstance::new(HardInstanceParams { d: 16, horizon: 64, delta0: 1.0, smoothness: 1.0, sigma: sigma_h, eta: eta_h }).unwrap();
        assert!((f.eps() - h.eps()).abs() < 1e-15);
        let set = PreconditionerSet::Diagonal { dim: 16 };
        let tf = run(&AlgorithmConfig::Nsd { eta, alpha: 0.3 }, &set, &f, &[0.0; 16], 50, 9).unwrap();
        let th = run(&AlgorithmConfig::Nsd { eta: eta_h, alpha: 0.3 }, &set, &h, &[0.0; 16], 50, 9).unwrap();
        let back = (d0 / l).sqrt();
        for (a, b) in tf.final_x.iter().zip(&th.final_x) {
            assert!((a - back * b).abs() <= 1e-10);
        }
        assert!(tf.final_x.iter().any(|&v| v != 0.0));
    }
}
