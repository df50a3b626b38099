//! Property suites behind `adageo validate`.
//!
//! Every property reports its trial count, failure count, the worst ratio of
//! residual to allowance (a property holds while this stays ≤ 1) and the first
//! failing input.

use adageo::analysis::{
    check_dlog_inequality, check_log_inequality, check_second_order_sum, check_st_bound_commutative, root_sequence,
};
use adageo::optimizers::{nsd_tuning, run, AccumulationMode, AdaptiveState, AlgorithmConfig, NsdState};
use adageo::precond::{
    ch_norm, dual_norm, project_ball, project_ph, steepest_direction, trace_root_of_outer, ProjectionResult,
};
use adageo::problems::{HardInstance, HardInstanceParams};
use adageo::rng::seeded;
use adageo::symkernels::{dlog, dot, eig_sym, log_psd, norm1, norm2, norm_inf, op_norm, SymMatrix};
use adageo::PreconditionerSet;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::gen;
use crate::BenchError;

pub const MASTER_SEED: u64 = 20_250_101;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Projections,
    Norms,
    Inequalities,
    Equivalences,
    HardInstance,
    All,
}

impl std::str::FromStr for Suite {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        Ok(match s {
            "projections" => Suite::Projections,
            "norms" => Suite::Norms,
            "inequalities" => Suite::Inequalities,
            "equivalences" => Suite::Equivalences,
            "hard-instance" => Suite::HardInstance,
            "all" => Suite::All,
            other => {
                return Err(BenchError::Config(format!(
                    "unknown suite {other:?}; expected projections, norms, inequalities, equivalences, hard-instance or all"
                )))
            }
        })
    }
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Projections => "projections",
            Suite::Norms => "norms",
            Suite::Inequalities => "inequalities",
            Suite::Equivalences => "equivalences",
            Suite::HardInstance => "hard-instance",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    /// Largest residual / allowance over all trials.
    pub worst_ratio: f64,
    /// Residual at the worst trial.
    pub worst_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.trials > 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub properties: Vec<PropertyReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(PropertyReport::passed)
    }

    pub fn property(&self, name: &str) -> Option<&PropertyReport> {
        self.properties.iter().find(|p| p.name == name)
    }

    /// Properties whose name starts with `prefix`.
    pub fn family<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a PropertyReport> + 'a {
        self.properties.iter().filter(move |p| p.name.starts_with(prefix))
    }
}

/// Accumulates trials of one property.
struct Tracker {
    report: PropertyReport,
}

impl Tracker {
    fn new(name: impl Into<String>) -> Self {
        Tracker {
            report: PropertyReport {
                name: name.into(),
                trials: 0,
                failures: 0,
                worst_ratio: f64::NEG_INFINITY,
                worst_residual: 0.0,
                counterexample: None,
            },
        }
    }

    /// Holds iff `residual <= allowance`.
    fn check(&mut self, residual: f64, allowance: f64, ctx: impl FnOnce() -> Value) {
        let r = &mut self.report;
        r.trials += 1;
        let ratio = if allowance > 0.0 { residual / allowance } else if residual <= 0.0 { 0.0 } else { f64::INFINITY };
        let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
        if ratio > r.worst_ratio {
            r.worst_ratio = ratio;
            r.worst_residual = residual;
        }
        if !(residual <= allowance) {
            r.failures += 1;
            if r.counterexample.is_none() {
                r.counterexample = Some(json!({ "residual": residual, "allowance": allowance, "input": ctx() }));
            }
        }
    }

    fn error(&mut self, e: impl std::fmt::Display, ctx: impl FnOnce() -> Value) {
        let r = &mut self.report;
        r.trials += 1;
        r.failures += 1;
        r.worst_ratio = f64::INFINITY;
        if r.counterexample.is_none() {
            r.counterexample = Some(json!({ "error": e.to_string(), "input": ctx() }));
        }
    }

    fn finish(self) -> PropertyReport {
        let mut r = self.report;
        if r.trials == 0 {
            r.worst_ratio = 0.0;
        }
        r
    }
}

fn rows(m: &SymMatrix) -> Value {
    json!(m.to_rows())
}

fn set_json(set: &PreconditionerSet) -> Value {
    serde_json::to_value(set).expect("set serializes")
}

fn proj(set: &PreconditionerSet, m: &SymMatrix) -> adageo::Result<ProjectionResult> {
    project_ph(set, m)
}

fn fro_diff(a: &SymMatrix, b: &SymMatrix) -> f64 {
    a.sub(b).frobenius()
}

pub const PROJECTION_TRIALS: usize = 300;
pub const PROJECTION_MAX_DIM: usize = 8;
pub const NORM_VECTORS: usize = 500;

/// Eight projection families, [`PROJECTION_TRIALS`] trials per set kind.
pub fn projections(seed: u64) -> Vec<PropertyReport> {
    let mut out = Vec::new();
    for (kind, kname) in gen::KINDS.iter().enumerate() {
        let mut rng = seeded(seed ^ (0x5052 + kind as u64));
        let mut add = Tracker::new(format!("additivity/{kname}"));
        let mut shift = Tracker::new(format!("shift/{kname}"));
        let mut mono = Tracker::new(format!("monotonicity/{kname}"));
        let mut half = Tracker::new(format!("half_power_lipschitz/{kname}"));
        let mut rank1 = Tracker::new(format!("rank_one_perturbation/{kname}"));
        let mut dual = Tracker::new(format!("duality/{kname}"));
        let mut dir = Tracker::new(format!("direction_optimality/{kname}"));
        let mut kkt = (kind != 3).then(|| Tracker::new(format!("ball_kkt/{kname}")));
        for _ in 0..PROJECTION_TRIALS {
            let set = gen::set_of_kind(&mut rng, kind, PROJECTION_MAX_DIM);
            let d = set.dim();
            let a = gen::psd(&mut rng, d);
            let b = gen::psd(&mut rng, d);
            let ctx2 = || json!({ "set": set_json(&set), "a": rows(&a), "b": rows(&b) });

            match (proj(&set, &a), proj(&set, &b), proj(&set, &a.add(&b))) {
                (Ok(pa), Ok(pb), Ok(pab)) => {
                    let want = pa.square.add(&pb.square);
                    add.check(fro_diff(&pab.square, &want), 1e-10 * want.frobenius().max(1.0), ctx2);
                }
                (Err(e), ..) | (_, Err(e), _) | (.., Err(e)) => add.error(e, ctx2),
            }

            let lambda = rng.random_range(0.0..3.0);
            match (proj(&set, &a), proj(&set, &a.add_identity(lambda))) {
                (Ok(pa), Ok(ps)) => {
                    let want = pa.square.add_identity(lambda);
                    shift.check(fro_diff(&ps.square, &want), 1e-10 * want.frobenius().max(1.0), || {
                        json!({ "set": set_json(&set), "a": rows(&a), "lambda": lambda })
                    });
                }
                (Err(e), _) | (_, Err(e)) => shift.error(e, ctx2),
            }

            // A ⪯ A + B
            match (proj(&set, &a), proj(&set, &a.add(&b))) {
                (Ok(pa), Ok(pab)) => match eig_sym(&pab.root.sub(&pa.root)) {
                    Ok(e) => {
                        let scale = op_norm(&pab.root).unwrap_or(1.0).max(1.0);
                        mono.check(-e.min(), 1e-9 * scale, ctx2);
                    }
                    Err(e) => mono.error(e, ctx2),
                },
                (Err(e), _) | (_, Err(e)) => mono.error(e, ctx2),
            }

            let c = gen::psd(&mut rng, d);
            match (proj(&set, &a), proj(&set, &c), op_norm(&c.sub(&a))) {
                (Ok(pa), Ok(pc), Ok(gap)) => match op_norm(&pc.root.sub(&pa.root)) {
                    Ok(lhs) => {
                        let scale = op_norm(&pc.root).unwrap_or(1.0).max(op_norm(&pa.root).unwrap_or(1.0)).max(1.0);
                        half.check(lhs - gap.sqrt(), 1e-9 * scale, || {
                            json!({ "set": set_json(&set), "a": rows(&a), "b": rows(&c) })
                        });
                    }
                    Err(e) => half.error(e, ctx2),
                },
                (Err(e), ..) | (_, Err(e), _) => half.error(e, ctx2),
                (.., Err(e)) => half.error(e, ctx2),
            }

            let x = gen::vec(&mut rng, d);
            let y: Vec<f64> = if rng.random_bool(0.5) {
                x.iter().map(|v| v + 1e-3 * rng.random_range(-1.0..1.0)).collect()
            } else {
                gen::vec(&mut rng, d)
            };
            let mut ax = a.clone();
            ax.add_outer(&x, 1.0);
            let mut ay = a.clone();
            ay.add_outer(&y, 1.0);
            let ctx_xy = || json!({ "set": set_json(&set), "a": rows(&a), "x": x, "y": y });
            match (proj(&set, &ax), proj(&set, &ay)) {
                (Ok(px), Ok(py)) => match op_norm(&px.root.sub(&py.root)) {
                    Ok(lhs) => {
                        let dxy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p - q).collect();
                        let scale = op_norm(&px.root).unwrap_or(1.0).max(1.0);
                        rank1.check(lhs - 2f64.sqrt() * norm2(&dxy), 1e-9 * scale, ctx_xy);
                    }
                    Err(e) => rank1.error(e, ctx_xy),
                },
                (Err(e), _) | (_, Err(e)) => rank1.error(e, ctx_xy),
            }

            // dual norm against the projection trace and 200 cone members of unit trace
            let ctx_x = || json!({ "set": set_json(&set), "x": x });
            match (dual_norm(&set, &x), trace_root_of_outer(&set, &x)) {
                (Ok(dn), Ok(tr)) => {
                    let mut worst: f64 = (dn - tr).abs() - 1e-10 * dn.max(1e-300);
                    for _ in 0..200 {
                        let h = gen::cone_member(&mut rng, &set);
                        let h = h.scale(1.0 / h.trace());
                        let bound = match eig_sym(&h) {
                            Ok(e) => dot(&x, &e.apply_fn(&x, |l| 1.0 / l)).sqrt(),
                            Err(_) => f64::NAN,
                        };
                        worst = worst.max(dn - bound * (1.0 + 1e-10));
                    }
                    dual.check(worst, 0.0, ctx_x);
                }
                (Err(e), _) | (_, Err(e)) => dual.error(e, ctx_x),
            }

            match steepest_direction(&set, &x) {
                Ok(u) => match (ch_norm(&set, &u), dual_norm(&set, &x)) {
                    (Ok(cu), Ok(dn)) => {
                        let r = (cu - 1.0 - 1e-10).max((dot(&x, &u) - dn).abs() - 1e-10 * dn);
                        dir.check(r, 0.0, ctx_x);
                    }
                    (Err(e), _) | (_, Err(e)) => dir.error(e, ctx_x),
                },
                Err(e) => dir.error(e, ctx_x),
            }

            if let Some(kkt) = kkt.as_mut() {
                let v = gen::cone_member(&mut rng, &set);
                let xb: Vec<f64> = x.iter().map(|t| 3.0 * t).collect();
                let radius = rng.random_range(0.1..1.5);
                let ctx_b = || json!({ "set": set_json(&set), "v": rows(&v), "x": xb, "radius": radius });
                match project_ball(&set, &v, &xb, radius) {
                    Ok(yb) => {
                        let cy = ch_norm(&set, &yb).unwrap_or(f64::NAN);
                        let mut worst: f64 = cy - radius * (1.0 + 1e-10);
                        if ch_norm(&set, &xb).unwrap_or(0.0) > radius {
                            let xy: Vec<f64> = xb.iter().zip(&yb).map(|(p, q)| p - q).collect();
                            for _ in 0..100 {
                                let z = gen::vec(&mut rng, d);
                                let cz = ch_norm(&set, &z).unwrap_or(1.0).max(1e-300);
                                let z: Vec<f64> = z.iter().map(|t| t * radius * rng.random_range(0.0..1.0) / cz).collect();
                                let zy: Vec<f64> = z.iter().zip(&yb).map(|(p, q)| p - q).collect();
                                let scale = v.quad_form(&xy).sqrt() * v.quad_form(&zy).sqrt();
                                worst = worst.max(dot(&xy, &v.matvec(&zy)) - 1e-9 * scale.max(1.0));
                            }
                        }
                        kkt.check(worst, 0.0, ctx_b);
                    }
                    Err(e) => kkt.error(e, ctx_b),
                }
            }
        }
        out.extend([add, shift, mono, half, rank1, dual, dir].into_iter().map(Tracker::finish));
        if let Some(k) = kkt {
            out.push(k.finish());
        }
    }
    out
}

/// Nuclear norm of mat(x) (dL × dR) by the Jacobi SVD oracle.
fn nuclear(x: &[f64], d_left: usize, d_right: usize) -> f64 {
    gen::singular_values(d_left, d_right, x).iter().sum()
}

fn spectral(x: &[f64], d_left: usize, d_right: usize) -> f64 {
    gen::singular_values(d_left, d_right, x).into_iter().fold(0.0, f64::max)
}

/// Dual and cone norms against their closed forms, [`NORM_VECTORS`] vectors per set kind.
pub fn norms(seed: u64) -> Vec<PropertyReport> {
    let mut out = Vec::new();
    for (kind, kname) in gen::KINDS.iter().enumerate() {
        let mut rng = seeded(seed ^ (0x4e4f + kind as u64));
        let mut trace = Tracker::new(format!("dual_equals_projection_trace/{kname}"));
        let mut closed = Tracker::new(format!("dual_closed_form/{kname}"));
        let mut ch = Tracker::new(format!("cone_norm_closed_form/{kname}"));
        let mut holder = Tracker::new(format!("holder_pairing/{kname}"));
        for _ in 0..NORM_VECTORS {
            let set = gen::set_of_kind(&mut rng, kind, PROJECTION_MAX_DIM);
            let d = set.dim();
            let scale = 10f64.powf(rng.random_range(-3.0..3.0));
            let x: Vec<f64> = gen::vec(&mut rng, d).into_iter().map(|v| v * scale).collect();
            let y = gen::vec(&mut rng, d);
            let ctx = || json!({ "set": set_json(&set), "x": x });
            let (dn, cn) = match (dual_norm(&set, &x), ch_norm(&set, &x)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    closed.error(e, ctx);
                    continue;
                }
            };
            match trace_root_of_outer(&set, &x) {
                Ok(tr) => trace.check((dn - tr).abs(), 1e-10 * dn.max(f64::MIN_POSITIVE), ctx),
                Err(e) => trace.error(e, ctx),
            }
            let df = d as f64;
            let (want_dual, want_ch) = match set {
                PreconditionerSet::Scalar { .. } => (df.sqrt() * norm2(&x), norm2(&x) / df.sqrt()),
                PreconditionerSet::Diagonal { .. } => (norm1(&x), norm_inf(&x)),
                PreconditionerSet::Full { .. } => (norm2(&x), norm2(&x)),
                PreconditionerSet::KronLeft { d_left, d_right } => {
                    let r = (d_right as f64).sqrt();
                    (r * nuclear(&x, d_left, d_right), spectral(&x, d_left, d_right) / r)
                }
            };
            closed.check((dn - want_dual).abs(), 1e-10 * want_dual.max(f64::MIN_POSITIVE), ctx);
            ch.check((cn - want_ch).abs(), 1e-10 * want_ch.max(f64::MIN_POSITIVE), ctx);
            match (ch_norm(&set, &y), dual_norm(&set, &x)) {
                (Ok(cy), Ok(dx)) => holder.check(dot(&x, &y).abs() - cy * dx, 1e-12 * cy * dx + 1e-300, ctx),
                (Err(e), _) | (_, Err(e)) => holder.error(e, ctx),
            }
        }
        out.extend([trace, closed, ch, holder].into_iter().map(Tracker::finish));
    }
    out
}

pub const INEQ_C: f64 = 1e-3;
pub const INEQ_BIG_C: f64 = 1e3;

/// Matrix logarithm inequalities and the second-order sum bounds.
pub fn inequalities(seed: u64) -> Vec<PropertyReport> {
    let mut rng = seeded(seed ^ 0x494e);
    let mut log_t = Tracker::new("log_inequality");
    let mut dlog_t = Tracker::new("dlog_inequality");
    let mut fd_t = Tracker::new("dlog_finite_difference");
    for k in 0..500 {
        let d = 1 + k % 8;
        // cI ⪯ Y ⪯ X ⪯ CI
        let y = gen::pd(&mut rng, d, 2.0 * INEQ_C, 10.0);
        let x = y.add(&gen::psd(&mut rng, d).scale(rng.random_range(0.0..10.0)));
        let ctx = || json!({ "x": rows(&x), "y": rows(&y) });
        match check_log_inequality(&x, &y, INEQ_C, INEQ_BIG_C) {
            Ok(v) => log_t.check(-v.min_eig_residual, v.tolerance, ctx),
            Err(e) => log_t.error(e, ctx),
        }
        let xd = gen::pd(&mut rng, d, 2.0 * INEQ_C, INEQ_BIG_C / 2.0);
        let a = gen::psd(&mut rng, d);
        let ctx = || json!({ "x": rows(&xd), "a": rows(&a) });
        match check_dlog_inequality(&xd, &a, INEQ_C, INEQ_BIG_C) {
            Ok(v) => dlog_t.check(-v.min_eig_residual, v.tolerance, ctx),
            Err(e) => dlog_t.error(e, ctx),
        }
    }
    for k in 0..200 {
        let d = 1 + k % 8;
        let x = gen::pd(&mut rng, d, 0.1, 10.0);
        let a = SymMatrix::from_row_major(d, gen::vec(&mut rng, d * d)).expect("square");
        let h = 1e-4;
        let ctx = || json!({ "x": rows(&x), "a": rows(&a) });
        match (dlog(&x, &a), log_psd(&x.add(&a.scale(h))), log_psd(&x.sub(&a.scale(h)))) {
            (Ok(dl), Ok(up), Ok(dn)) => {
                let fd = up.sub(&dn).scale(0.5 / h);
                fd_t.check(fro_diff(&fd, &dl), 1e-5 * dl.frobenius().max(f64::MIN_POSITIVE), ctx);
            }
            (Err(e), ..) | (_, Err(e), _) | (.., Err(e)) => fd_t.error(e, ctx),
        }
    }
    let mut out = vec![log_t.finish(), dlog_t.finish(), fd_t.finish()];
    out.extend(second_order(seed));
    out
}

const BETAS: [f64; 4] = [0.5, 0.9, 0.99, 1.0];

fn gradient_stream(rng: &mut ChaCha8Rng, d: usize, t: usize) -> Vec<Vec<f64>> {
    (0..t)
        .map(|_| {
            let s = 10f64.powf(rng.random_range(-2.0..1.0));
            if rng.random_bool(0.05) {
                vec![0.0; d]
            } else {
                gen::vec(rng, d).into_iter().map(|v| v * s).collect()
            }
        })
        .collect()
}

fn second_order(seed: u64) -> Vec<PropertyReport> {
    let mut rng = seeded(seed ^ 0x5354);
    let mut comm = Tracker::new("st_commutative_bound");
    for k in 0..200 {
        let set = gen::set_of_kind(&mut rng, k % 2, 8);
        let t = rng.random_range(1..=200);
        let beta = BETAS[k % 4];
        let eps = 10f64.powf(rng.random_range(-3.0..0.0));
        let gs = gradient_stream(&mut rng, set.dim(), t);
        let ctx = || json!({ "set": set_json(&set), "beta": beta, "eps": eps, "gradients": gs });
        match root_sequence(&set, &gs, beta, eps).and_then(|vs| check_st_bound_commutative(&set, &vs, beta, eps)) {
            Ok(b) => comm.check(b.lhs - b.rhs, 1e-9 * b.rhs.abs() + 1e-12, ctx),
            Err(e) => comm.error(e, ctx),
        }
    }
    let mut out = vec![comm.finish()];
    for (kind, kname) in gen::KINDS.iter().enumerate() {
        let mut tr = Tracker::new(format!("second_order_sum/{kname}"));
        for k in 0..200 {
            let set = gen::set_of_kind(&mut rng, kind, 6);
            let t = rng.random_range(1..=40);
            let beta = BETAS[k % 4];
            let eps = 10f64.powf(rng.random_range(-3.0..0.0));
            let gs = gradient_stream(&mut rng, set.dim(), t);
            let h = gen::cone_member(&mut rng, &set);
            let ctx = || json!({ "set": set_json(&set), "beta": beta, "eps": eps, "h": rows(&h), "gradients": gs });
            match check_second_order_sum(&gs, &set, beta, eps, &h) {
                Ok(b) => tr.check(b.lhs - b.rhs, 1e-9 * b.rhs.abs() + 1e-12, ctx),
                Err(e) => tr.error(e, ctx),
            }
        }
        out.push(tr.finish());
    }
    out
}

/// One-sided Kronecker-factored AdaGrad on mat(x) (dL × dR):
/// L ← L + GGᵀ, X ← X − η(L + εI)^{−1/2}G.
pub fn one_sided_kron_run(d_left: usize, d_right: usize, eta: f64, eps: f64, x0: &[f64], gs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut l = SymMatrix::zeros(d_left);
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(gs.len());
    for g in gs {
        let gram = SymMatrix::from_fn(d_left, |i, k| (0..d_right).map(|j| g[i * d_right + j] * g[k * d_right + j]).sum());
        l = l.add(&gram);
        let inv_root = eig_sym(&l.add_identity(eps)).expect("finite accumulator").map(|v| 1.0 / v.sqrt());
        for j in 0..d_right {
            let col: Vec<f64> = (0..d_left).map(|i| g[i * d_right + j]).collect();
            let step = inv_root.matvec(&col);
            for i in 0..d_left {
                x[i * d_right + j] -= eta * step[i];
            }
        }
        out.push(x.clone());
    }
    out
}

/// Full-matrix AdaGrad written out directly: V = (Σggᵀ + εI)^{1/2}.
pub fn full_adagrad_run(eta: f64, eps: f64, x0: &[f64], gs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = x0.len();
    let mut m = SymMatrix::scaled_identity(d, eps);
    let mut x = x0.to_vec();
    gs.iter()
        .map(|g| {
            m.add_outer(g, 1.0);
            let step = eig_sym(&m).expect("finite accumulator").apply_fn(g, |v| 1.0 / v.sqrt());
            for (xi, s) in x.iter_mut().zip(step) {
                *xi -= eta * s;
            }
            x.clone()
        })
        .collect()
}

fn max_dev(a: &[f64], b: &[f64]) -> (f64, f64) {
    let dev = a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    (dev, norm_inf(b))
}

/// Iterate-level equivalences between algorithm variants.
pub fn equivalences(seed: u64) -> Vec<PropertyReport> {
    let mut rng = seeded(seed ^ 0x4551);
    let mut ema = Tracker::new("ema_vs_weighted");
    for k in 0..40 {
        let set = gen::set_of_kind(&mut rng, k % 4, 8);
        let d = set.dim();
        let beta = [0.5, 0.9, 0.99][k % 3];
        let eta = rng.random_range(0.01..1.0);
        let eps = 10f64.powf(rng.random_range(-4.0..0.0));
        let x0 = gen::vec(&mut rng, d);
        let gs = gradient_stream(&mut rng, d, 100);
        let ctx = || json!({ "set": set_json(&set), "beta": beta, "eta": eta, "eps": eps, "x0": x0, "gradients": gs });
        let a = AdaptiveState::new(set, AccumulationMode::Ema { beta }, eta, eps, &x0);
        let b = AdaptiveState::new(set, AccumulationMode::Weighted { beta }, eta / (1.0 - beta).sqrt(), eps / (1.0 - beta), &x0);
        let (mut a, mut b) = match (a, b) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                ema.error(e, ctx);
                continue;
            }
        };
        let mut worst: f64 = 0.0;
        let mut failed = None;
        for g in &gs {
            if let Err(e) = a.step(g).and_then(|_| b.step(g)) {
                failed = Some(e);
                break;
            }
            worst = worst.max(max_dev(a.x(), b.x()).0);
        }
        match failed {
            Some(e) => ema.error(e, ctx),
            None => ema.check(worst, 1e-10, ctx),
        }
    }

    let mut kron = Tracker::new("kron_left_vs_one_sided");
    for _ in 0..40 {
        let d_left = rng.random_range(1..=4);
        let d_right = rng.random_range(1..=4);
        let set = PreconditionerSet::KronLeft { d_left, d_right };
        let d = set.dim();
        let eta = rng.random_range(0.01..1.0);
        let eps = 10f64.powf(rng.random_range(-4.0..0.0));
        let x0 = gen::vec(&mut rng, d);
        let gs = gradient_stream(&mut rng, d, 50);
        let ctx = || json!({ "d_left": d_left, "d_right": d_right, "eta": eta, "eps": eps, "x0": x0, "gradients": gs });
        let want = one_sided_kron_run(d_left, d_right, eta * (d_right as f64).sqrt(), eps * d_right as f64, &x0, &gs);
        let mut s = match AdaptiveState::new(set, AccumulationMode::Cumulative, eta, eps, &x0) {
            Ok(s) => s,
            Err(e) => {
                kron.error(e, ctx);
                continue;
            }
        };
        let mut worst: f64 = 0.0;
        let mut failed = None;
        for (g, w) in gs.iter().zip(&want) {
            if let Err(e) = s.step(g) {
                failed = Some(e);
                break;
            }
            let (dev, size) = max_dev(s.x(), w);
            worst = worst.max(dev / size.max(1.0));
        }
        match failed {
            Some(e) => kron.error(e, ctx),
            None => kron.check(worst, 1e-9, ctx),
        }
    }

    let mut full = Tracker::new("full_vs_direct_adagrad");
    for _ in 0..40 {
        let d = rng.random_range(1..=8);
        let eta = rng.random_range(0.01..1.0);
        let eps = 10f64.powf(rng.random_range(-4.0..0.0));
        let x0 = gen::vec(&mut rng, d);
        let gs = gradient_stream(&mut rng, d, 100);
        let ctx = || json!({ "d": d, "eta": eta, "eps": eps, "x0": x0, "gradients": gs });
        let want = full_adagrad_run(eta, eps, &x0, &gs);
        let mut s = match AdaptiveState::new(PreconditionerSet::Full { dim: d }, AccumulationMode::Cumulative, eta, eps, &x0) {
            Ok(s) => s,
            Err(e) => {
                full.error(e, ctx);
                continue;
            }
        };
        let mut worst: f64 = 0.0;
        let mut failed = None;
        for (g, w) in gs.iter().zip(&want) {
            if let Err(e) = s.step(g) {
                failed = Some(e);
                break;
            }
            worst = worst.max(max_dev(s.x(), w).0);
        }
        match failed {
            Some(e) => full.error(e, ctx),
            None => full.check(worst, 1e-10, ctx),
        }
    }

    let mut nsd = Tracker::new("nsd_step_length");
    for k in 0..100 {
        let set = gen::set_of_kind(&mut rng, k % 4, 8);
        let d = set.dim();
        let eta = rng.random_range(0.01..1.0);
        let alpha = rng.random_range(0.05..=1.0);
        let gs = gradient_stream(&mut rng, d, 20);
        let ctx = || json!({ "set": set_json(&set), "eta": eta, "alpha": alpha, "gradients": gs });
        let mut s = match NsdState::new(set, eta, alpha, &vec![0.0; d]) {
            Ok(s) => s,
            Err(e) => {
                nsd.error(e, ctx);
                continue;
            }
        };
        let mut worst: f64 = 0.0;
        for g in &gs {
            let before = s.x().to_vec();
            if let Err(e) = s.step(g) {
                nsd.error(e, ctx);
                break;
            }
            let moved = s.momentum().is_some_and(|m| m.iter().any(|&v| v != 0.0));
            let dx: Vec<f64> = s.x().iter().zip(&before).map(|(a, b)| a - b).collect();
            let len = ch_norm(&set, &dx).unwrap_or(f64::NAN);
            let want = if moved { eta } else { 0.0 };
            worst = worst.max((len - want).abs());
        }
        nsd.check(worst, 1e-12 * eta.max(1.0), ctx);
    }
    vec![ema.finish(), kron.finish(), full.finish(), nsd.finish()]
}

/// Lower-bound construction parameters used by the hard-instance suite.
pub fn reference_hard_params() -> HardInstanceParams {
    let (_, eta) = nsd_tuning(1.0, 1.0, 1.0, 128).expect("valid tuning inputs");
    HardInstanceParams { d: 256, horizon: 128, delta0: 1.0, smoothness: 1.0, sigma: 1.0, eta }
}

pub const AUDIT_DRAWS: u64 = 100_000;

/// Audit checks for the lower-bound construction plus the rescaling identity.
pub fn hard_instance(seed: u64) -> Vec<PropertyReport> {
    let mut lip = Tracker::new("derivative_lipschitz");
    let mut lattice = Tracker::new("lattice_exact");
    let mut integral = Tracker::new("period_integral_nonnegative");
    let mut gap = Tracker::new("unit_gap_at_most_one");
    let mut noise = Tracker::new("noise_l1_second_moment");
    let mut unbiased = Tracker::new("noise_unbiased");
    let cases = [
        reference_hard_params(),
        HardInstanceParams { d: 16, horizon: 64, delta0: 2.0, smoothness: 0.5, sigma: 0.7, eta: 0.05 },
        HardInstanceParams { d: 64, horizon: 512, delta0: 1.0, smoothness: 3.0, sigma: 2.0, eta: 0.01 },
    ];
    for p in cases {
        let ctx = || serde_json::to_value(p).expect("params serialize");
        let h = match HardInstance::new(p) {
            Ok(h) => h,
            Err(e) => {
                lip.error(e, ctx);
                continue;
            }
        };
        let a = h.audit(AUDIT_DRAWS, seed);
        lip.check(a.lipschitz_ratio_max - 1.0, 1e-9, ctx);
        lattice.check(if a.lattice_exact { 0.0 } else { 1.0 }, 0.0, ctx);
        integral.check(-a.period_integral, 1e-12, ctx);
        gap.check(a.unit_gap - 1.0, 1e-12, ctx);
        noise.check(a.noise_l1_second_moment - 1.05 * a.sigma_h_scale.powi(2), 0.0, ctx);
        let d = p.d as f64;
        unbiased.check((a.mean_sum_z.abs() - 3.0).max(a.mean_chi2_per_coord - 1.0 - 3.0 * (2.0 / d).sqrt()), 0.0, ctx);
    }

    let mut rescale = Tracker::new("rescaled_iterates");
    let (d0, l, sigma, eta) = (4.0, 2.25, 1.5, 0.03);
    let d = 16;
    let f = HardInstance::new(HardInstanceParams { d, horizon: 64, delta0: d0, smoothness: l, sigma, eta });
    let scale = (l / d0).sqrt();
    let h = HardInstance::new(HardInstanceParams {
        d,
        horizon: 64,
        delta0: 1.0,
        smoothness: 1.0,
        sigma: sigma / (l * d0).sqrt(),
        eta: eta * scale,
    });
    let set = PreconditionerSet::Diagonal { dim: d };
    match (f, h) {
        (Ok(f), Ok(h)) => {
            for s in 0..8 {
                let ctx = || json!({ "seed": seed + s });
                let tf = run(&AlgorithmConfig::Nsd { eta, alpha: 0.3 }, &set, &f, &vec![0.0; d], 50, seed + s);
                let th = run(&AlgorithmConfig::Nsd { eta: eta * scale, alpha: 0.3 }, &set, &h, &vec![0.0; d], 50, seed + s);
                match (tf, th) {
                    (Ok(tf), Ok(th)) => {
                        let dev = tf.final_x.iter().zip(&th.final_x).map(|(a, b)| (a - b / scale).abs()).fold(0.0, f64::max);
                        rescale.check(dev, 1e-10, ctx);
                    }
                    (Err(e), _) | (_, Err(e)) => rescale.error(e, ctx),
                }
            }
        }
        (Err(e), _) | (_, Err(e)) => rescale.error(e, || json!(null)),
    }
    [lip, lattice, integral, gap, noise, unbiased, rescale].into_iter().map(Tracker::finish).collect()
}

pub fn run_suite(suite: Suite, seed: u64) -> SuiteReport {
    let properties = match suite {
        Suite::Projections => projections(seed),
        Suite::Norms => norms(seed),
        Suite::Inequalities => inequalities(seed),
        Suite::Equivalences => equivalences(seed),
        Suite::HardInstance => hard_instance(seed),
        Suite::All => {
            let mut v = projections(seed);
            v.extend(norms(seed));
            v.extend(inequalities(seed));
            v.extend(equivalences(seed));
            v.extend(hard_instance(seed));
            v
        }
    };
    SuiteReport { suite: suite.name().to_owned(), seed, properties }
}
