//! Optimizer state machines and the trajectory driver.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::precond::{ch_norm, dual_norm, project_ball, steepest_direction, Preconditioner, PreconditionerSet};
use crate::rng::CounterRng;
use crate::symkernels::{norm1, norm2, SymMatrix};

/// Root eigenvalues at or below this fraction of the largest are treated as null.
const ROOT_CUTOFF: f64 = 1e-14;

/// Stochastic first-order oracle.
pub trait GradOracle {
    fn dim(&self) -> usize;
    /// Value and gradient of the step-`t` loss at `x`. Deterministic oracles ignore `t` and `rng`.
    fn sample(&self, x: &[f64], t: u64, rng: &CounterRng) -> Result<(f64, Vec<f64>)>;
    fn is_deterministic(&self) -> bool;
}

/// An oracle whose mean objective can be evaluated exactly.
pub trait Objective: GradOracle {
    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
    /// Infimum of the objective when known.
    fn optimal_value(&self) -> Option<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AccumulationMode {
    Cumulative,
    Ema { beta: f64 },
    Weighted { beta: f64 },
}

impl AccumulationMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Cumulative => Ok(()),
            Self::Ema { beta } if beta > 0.0 && beta < 1.0 => Ok(()),
            Self::Weighted { beta } if beta > 0.0 && beta <= 1.0 => Ok(()),
            Self::Ema { beta } => Err(invalid(format!("EMA beta must lie in (0,1), got {beta}"))),
            Self::Weighted { beta } => Err(invalid(format!("weighted beta must lie in (0,1], got {beta}"))),
        }
    }

    fn accumulate(&self, m: &mut SymMatrix, g: &[f64]) {
        match *self {
            Self::Cumulative => m.add_outer(g, 1.0),
            Self::Ema { beta } => {
                m.scale_in_place(beta);
                m.add_outer(g, 1.0 - beta);
            }
            Self::Weighted { beta } => {
                m.scale_in_place(beta);
                m.add_outer(g, 1.0);
            }
        }
    }
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!("{what} has non-finite entries")))
    }
}

fn check_len(v: &[f64], d: usize, what: &str) -> Result<()> {
    if v.len() != d {
        return Err(invalid(format!("{what} has length {}, expected {d}", v.len())));
    }
    Ok(())
}

/// Preconditioned step V⁺g, erroring when the preconditioner vanishes.
fn precondition_step(set: &PreconditionerSet, m: &SymMatrix, eps: f64, g: &[f64]) -> Result<(Preconditioner, Vec<f64>)> {
    let v = Preconditioner::new(set, &m.add_identity(eps))?;
    let top = v.root_max();
    if !(top > 0.0) || top <= ROOT_CUTOFF * norm2(g) {
        return Err(Error::SingularPreconditioner);
    }
    let step = v.apply_root_pinv(g, ROOT_CUTOFF);
    Ok((v, step))
}

/// Adaptive method with accumulator M and preconditioner V = P(M + εI).
#[derive(Debug, Clone)]
pub struct AdaptiveState {
    x: Vec<f64>,
    m: SymMatrix,
    t: u64,
    set: PreconditionerSet,
    mode: AccumulationMode,
    eta: f64,
    eps: f64,
    last: Option<Preconditioner>,
}

impl AdaptiveState {
    pub fn new(set: PreconditionerSet, mode: AccumulationMode, eta: f64, eps: f64, x0: &[f64]) -> Result<Self> {
        set.validate()?;
        mode.validate()?;
        check_len(x0, set.dim(), "initial point")?;
        if !(eta > 0.0) || !(eps >= 0.0) {
            return Err(invalid("need eta > 0 and eps >= 0"));
        }
        Ok(AdaptiveState {
            x: x0.to_vec(),
            m: SymMatrix::zeros(set.dim()),
            t: 0,
            set,
            mode,
            eta,
            eps,
            last: None,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn accumulator(&self) -> &SymMatrix {
        &self.m
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Preconditioner used by the most recent step.
    pub fn preconditioner(&self) -> Option<&Preconditioner> {
        self.last.as_ref()
    }

    /// One step on gradient `g`. On error the state is left untouched.
    pub fn step(&mut self, g: &[f64]) -> Result<()> {
        check_len(g, self.x.len(), "gradient")?;
        check_finite(g, "gradient")?;
        let mut m = self.m.clone();
        self.mode.accumulate(&mut m, g);
        let (v, step) = precondition_step(&self.set, &m, self.eps, g)?;
        for (xi, si) in self.x.iter_mut().zip(&step) {
            *xi -= self.eta * si;
        }
        self.m = m;
        self.last = Some(v);
        self.t += 1;
        Ok(())
    }
}

/// Normalized steepest descent with momentum.
#[derive(Debug, Clone)]
pub struct NsdState {
    x: Vec<f64>,
    m: Option<Vec<f64>>,
    t: u64,
    set: PreconditionerSet,
    eta: f64,
    alpha: f64,
    zero_steps: Vec<u64>,
}

impl NsdState {
    pub fn new(set: PreconditionerSet, eta: f64, alpha: f64, x0: &[f64]) -> Result<Self> {
        set.validate()?;
        check_len(x0, set.dim(), "initial point")?;
        if !(eta > 0.0) || !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid("need eta > 0 and alpha in (0,1]"));
        }
        Ok(NsdState { x: x0.to_vec(), m: None, t: 0, set, eta, alpha, zero_steps: Vec::new() })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn momentum(&self) -> Option<&[f64]> {
        self.m.as_deref()
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Steps at which the momentum was exactly zero and the iterate did not move.
    pub fn zero_direction_steps(&self) -> &[u64] {
        &self.zero_steps
    }

    pub fn step(&mut self, g: &[f64]) -> Result<()> {
        check_len(g, self.x.len(), "gradient")?;
        check_finite(g, "gradient")?;
        let m = match self.m.take() {
            None => g.to_vec(),
            Some(mut m) => {
                for (mi, gi) in m.iter_mut().zip(g) {
                    *mi = (1.0 - self.alpha) * *mi + self.alpha * gi;
                }
                m
            }
        };
        match steepest_direction(&self.set, &m) {
            Ok(u) => {
                for (xi, ui) in self.x.iter_mut().zip(&u) {
                    *xi -= self.eta * ui;
                }
            }
            Err(Error::ZeroVector) => self.zero_steps.push(self.t),
            Err(e) => {
                self.m = Some(m);
                return Err(e);
            }
        }
        self.m = Some(m);
        self.t += 1;
        Ok(())
    }
}

/// (α, η) for momentum NSD from the problem constants and horizon.
pub fn nsd_tuning(delta0: f64, smoothness: f64, sigma: f64, horizon: u64) -> Result<(f64, f64)> {
    if !(delta0 > 0.0) || !(smoothness > 0.0) || !(sigma >= 0.0) || horizon == 0 {
        return Err(invalid("need delta0 > 0, L > 0, sigma >= 0, T >= 1"));
    }
    let t = horizon as f64;
    let a0 = if sigma == 0.0 { f64::INFINITY } else { (delta0 * smoothness).sqrt() / sigma };
    let noisy_eta = || delta0.powf(0.75) * smoothness.powf(-0.25) * sigma.powf(-0.5) * t.powf(-0.75);
    let base = (delta0 / smoothness).sqrt();
    Ok(if a0 < 1.0 {
        if t < a0.powi(-6) {
            (t.powf(-2.0 / 3.0), base * t.powf(-5.0 / 12.0))
        } else {
            (a0 / t.sqrt(), noisy_eta())
        }
    } else if t <= a0 * a0 {
        (1.0, base / t.sqrt())
    } else {
        (a0 / t.sqrt(), noisy_eta())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaSchedule {
    /// α_t = 2/(t+2)
    #[default]
    Harmonic,
    Constant { alpha: f64 },
}

impl AlphaSchedule {
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            Self::Harmonic => 2.0 / (t as f64 + 2.0),
            Self::Constant { alpha } => alpha,
        }
    }
}

/// Accelerated adaptive method, optionally projecting onto a cone-norm ball.
#[derive(Debug, Clone)]
pub struct AcceleratedState {
    x: Vec<f64>,
    anchor: Vec<f64>,
    m: SymMatrix,
    t: u64,
    set: PreconditionerSet,
    eta: f64,
    eps: f64,
    radius: Option<f64>,
    schedule: AlphaSchedule,
}

/// What one accelerated step observed.
#[derive(Debug, Clone)]
pub struct AcceleratedStep {
    pub alpha: f64,
    /// Oracle query point α·x + (1−α)·x̄.
    pub query: Vec<f64>,
    /// Unprojected half point x − ηV⁻¹g.
    pub half: Vec<f64>,
}

impl AcceleratedState {
    pub fn new(set: PreconditionerSet, eta: f64, eps: f64, schedule: AlphaSchedule, x0: &[f64]) -> Result<Self> {
        set.validate()?;
        check_len(x0, set.dim(), "initial point")?;
        if !(eta > 0.0) || !(eps >= 0.0) {
            return Err(invalid("need eta > 0 and eps >= 0"));
        }
        Ok(AcceleratedState {
            x: x0.to_vec(),
            anchor: x0.to_vec(),
            m: SymMatrix::zeros(set.dim()),
            t: 0,
            set,
            eta,
            eps,
            radius: None,
            schedule,
        })
    }

    pub fn new_projected(
        set: PreconditionerSet,
        eta: f64,
        eps: f64,
        radius: f64,
        schedule: AlphaSchedule,
        x0: &[f64],
    ) -> Result<Self> {
        if let PreconditionerSet::KronLeft { .. } = set {
            return Err(Error::Unsupported("projected acceleration for the Kronecker set".into()));
        }
        if !(radius > 0.0) {
            return Err(invalid("radius must be positive"));
        }
        let mut s = Self::new(set, eta, eps, schedule, x0)?;
        s.radius = Some(radius);
        Ok(s)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    /// One step; projects when a radius is set.
    pub fn step(&mut self, oracle: &dyn GradOracle, rng: &CounterRng) -> Result<AcceleratedStep> {
        let alpha = self.schedule.at(self.t);
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid(format!("alpha_{} = {alpha} outside (0,1]", self.t)));
        }
        let query: Vec<f64> = self.x.iter().zip(&self.anchor).map(|(x, a)| alpha * x + (1.0 - alpha) * a).collect();
        let (_, gq) = oracle.sample(&query, self.t, rng)?;
        check_len(&gq, self.x.len(), "gradient")?;
        check_finite(&gq, "gradient")?;
        let g: Vec<f64> = gq.iter().map(|v| v / alpha).collect();
        let mut m = self.m.clone();
        m.add_outer(&g, 1.0);
        let (v, step) = precondition_step(&self.set, &m, self.eps, &g)?;
        let half: Vec<f64> = self.x.iter().zip(&step).map(|(x, s)| x - self.eta * s).collect();
        let next = match self.radius {
            None => half.clone(),
            Some(r) => project_ball(&self.set, &v.root(), &half, r)?,
        };
        for (a, h) in self.anchor.iter_mut().zip(&half) {
            *a = alpha * h + (1.0 - alpha) * *a;
        }
        self.x = next;
        self.m = m;
        self.t += 1;
        Ok(AcceleratedStep { alpha, query, half })
    }
}

/// Serializable description of an algorithm and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgorithmConfig {
    Adaptive {
        mode: AccumulationMode,
        eta: f64,
        eps: f64,
    },
    Nsd {
        eta: f64,
        alpha: f64,
    },
    Accelerated {
        eta: f64,
        eps: f64,
        #[serde(default)]
        schedule: AlphaSchedule,
    },
    AcceleratedProjected {
        eta: f64,
        eps: f64,
        radius: f64,
        #[serde(default)]
        schedule: AlphaSchedule,
    },
}

impl AlgorithmConfig {
    pub fn is_accelerated(&self) -> bool {
        matches!(self, Self::Accelerated { .. } | Self::AcceleratedProjected { .. })
    }
}

/// One trajectory record, taken at iterate x_t.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub loss: f64,
    pub grad_l1: f64,
    pub grad_l2: f64,
    pub grad_dual: f64,
    /// ‖x_t − x_{t−1}‖ in the cone norm; 0 at t = 0.
    pub step_chnorm: f64,
    /// f(x̄_t), accelerated runs only.
    pub xbar_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub step: u64,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub rows: Vec<TraceRow>,
    pub final_x: Vec<f64>,
    pub final_anchor: Option<Vec<f64>>,
    pub failure: Option<RunFailure>,
}

enum Machine {
    Adaptive(AdaptiveState),
    Nsd(NsdState),
    Accelerated(AcceleratedState),
}

impl Machine {
    fn build(alg: &AlgorithmConfig, set: PreconditionerSet, x0: &[f64]) -> Result<Self> {
        Ok(match *alg {
            AlgorithmConfig::Adaptive { mode, eta, eps } => Machine::Adaptive(AdaptiveState::new(set, mode, eta, eps, x0)?),
            AlgorithmConfig::Nsd { eta, alpha } => Machine::Nsd(NsdState::new(set, eta, alpha, x0)?),
            AlgorithmConfig::Accelerated { eta, eps, schedule } => {
                Machine::Accelerated(AcceleratedState::new(set, eta, eps, schedule, x0)?)
            }
            AlgorithmConfig::AcceleratedProjected { eta, eps, radius, schedule } => {
                Machine::Accelerated(AcceleratedState::new_projected(set, eta, eps, radius, schedule, x0)?)
            }
        })
    }

    fn x(&self) -> &[f64] {
        match self {
            Machine::Adaptive(s) => s.x(),
            Machine::Nsd(s) => s.x(),
            Machine::Accelerated(s) => s.x(),
        }
    }

    fn anchor(&self) -> Option<&[f64]> {
        match self {
            Machine::Accelerated(s) => Some(s.anchor()),
            _ => None,
        }
    }

    fn step(&mut self, oracle: &dyn Objective, t: u64, rng: &CounterRng, exact_grad: &[f64]) -> Result<()> {
        match self {
            Machine::Accelerated(s) => s.step(oracle, rng).map(|_| ()),
            Machine::Adaptive(_) | Machine::Nsd(_) => {
                let g = if oracle.is_deterministic() {
                    exact_grad.to_vec()
                } else {
                    oracle.sample(self.x(), t, rng)?.1
                };
                match self {
                    Machine::Adaptive(s) => s.step(&g),
                    Machine::Nsd(s) => s.step(&g),
                    Machine::Accelerated(_) => unreachable!(),
                }
            }
        }
    }
}

fn record(
    problem: &dyn Objective,
    set: &PreconditionerSet,
    t: u64,
    x: &[f64],
    prev: Option<&[f64]>,
    anchor: Option<&[f64]>,
) -> Result<(TraceRow, Vec<f64>)> {
    let (loss, g) = problem.value_grad(x)?;
    let step_chnorm = match prev {
        None => 0.0,
        Some(p) => {
            let dx: Vec<f64> = x.iter().zip(p).map(|(a, b)| a - b).collect();
            ch_norm(set, &dx)?
        }
    };
    let xbar_loss = match anchor {
        Some(a) => Some(problem.value_grad(a)?.0),
        None => None,
    };
    let row = TraceRow {
        t,
        loss,
        grad_l1: norm1(&g),
        grad_l2: norm2(&g),
        grad_dual: dual_norm(set, &g)?,
        step_chnorm,
        xbar_loss,
    };
    let finite = [row.loss, row.grad_l1, row.grad_l2, row.grad_dual, row.step_chnorm, row.xbar_loss.unwrap_or(0.0)]
        .iter()
        .all(|v| v.is_finite());
    if !finite {
        return Err(Error::Numerical(format!("non-finite record at step {t}")));
    }
    Ok((row, g))
}

/// Runs `horizon` steps from `x0`, recording x_0 … x_T.
///
/// Configuration errors are returned directly; failures during the run yield a
/// partial trajectory with `failure` set.
pub fn run(
    alg: &AlgorithmConfig,
    set: &PreconditionerSet,
    problem: &dyn Objective,
    x0: &[f64],
    horizon: u64,
    seed: u64,
) -> Result<Trajectory> {
    if problem.dim() != set.dim() {
        return Err(invalid(format!("problem dimension {} != set dimension {}", problem.dim(), set.dim())));
    }
    let mut machine = Machine::build(alg, *set, x0)?;
    let rng = CounterRng::new(seed);
    let mut rows = Vec::with_capacity(horizon as usize + 1);
    let mut failure = None;
    let mut prev: Option<Vec<f64>> = None;
    for t in 0..=horizon {
        let x = machine.x().to_vec();
        let recorded = record(problem, set, t, &x, prev.as_deref(), machine.anchor());
        let g = match recorded {
            Ok((row, g)) => {
                rows.push(row);
                g
            }
            Err(error) => {
                failure = Some(RunFailure { step: t, error });
                break;
            }
        };
        if t == horizon {
            break;
        }
        if let Err(error) = machine.step(problem, t, &rng, &g) {
            failure = Some(RunFailure { step: t, error });
            break;
        }
        prev = Some(x);
    }
    Ok(Trajectory {
        seed,
        rows,
        final_x: machine.x().to_vec(),
        final_anchor: machine.anchor().map(<[f64]>::to_vec),
        failure,
    })
}
