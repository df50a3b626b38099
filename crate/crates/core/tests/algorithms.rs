use adageo::optimizers::{run, AccumulationMode, AdaptiveState, AlgorithmConfig, AlphaSchedule};
use adageo::precond::ch_norm;
use adageo::problems::{NoiseModel, QuadraticProblem};
use adageo::rng::{seeded, uniform_vec};
use adageo::symkernels::eig_sym;
use adageo::{PreconditionerSet, SymMatrix};

/// One-sided Kronecker-factored AdaGrad on mat(x) (dL × dR): L ← L + GGᵀ, X ← X − η(L + εI)^{−1/2}G.
fn one_sided(d_left: usize, d_right: usize, eta: f64, eps: f64, x0: &[f64], gs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut l = SymMatrix::zeros(d_left);
    let mut x = x0.to_vec();
    let mut out = Vec::new();
    for g in gs {
        l = l.add(&SymMatrix::from_fn(d_left, |i, k| (0..d_right).map(|j| g[i * d_right + j] * g[k * d_right + j]).sum()));
        let inv_root = eig_sym(&l.add_identity(eps)).unwrap().map(|v| 1.0 / v.sqrt());
        for j in 0..d_right {
            let col: Vec<f64> = (0..d_left).map(|i| g[i * d_right + j]).collect();
            for (i, s) in inv_root.matvec(&col).into_iter().enumerate() {
                x[i * d_right + j] -= eta * s;
            }
        }
        out.push(x.clone());
    }
    out
}

#[test]
fn kron_left_matches_one_sided_factorisation() {
    let mut rng = seeded(11);
    for (d_left, d_right) in [(1, 1), (2, 3), (3, 2), (4, 4), (2, 5)] {
        let d = d_left * d_right;
        let (eta, eps) = (0.3, 1e-3);
        let x0 = uniform_vec(&mut rng, d, -1.0, 1.0);
        let gs: Vec<Vec<f64>> = (0..50).map(|_| uniform_vec(&mut rng, d, -1.0, 1.0)).collect();
        let want = one_sided(d_left, d_right, eta * (d_right as f64).sqrt(), eps * d_right as f64, &x0, &gs);
        let set = PreconditionerSet::KronLeft { d_left, d_right };
        let mut s = AdaptiveState::new(set, AccumulationMode::Cumulative, eta, eps, &x0).unwrap();
        for (g, w) in gs.iter().zip(&want) {
            s.step(g).unwrap();
            for (a, b) in s.x().iter().zip(w) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{d_left}x{d_right}: {a} vs {b}");
            }
        }
    }
}

fn quadratic(d: usize, noise: NoiseModel) -> QuadraticProblem {
    let values: Vec<f64> = (0..d).map(|i| 1.0 / (1 + i) as f64).collect();
    QuadraticProblem::new(SymMatrix::from_diag(&values), vec![0.1; d], noise).unwrap()
}

#[test]
fn loose_ball_leaves_the_accelerated_run_unchanged() {
    let d = 5;
    let p = quadratic(d, NoiseModel::GaussianIso { variance: 0.01 });
    let x0 = vec![0.5; d];
    for set in [PreconditionerSet::Diagonal { dim: d }, PreconditionerSet::Full { dim: d }, PreconditionerSet::Scalar { dim: d }] {
        let free = run(&AlgorithmConfig::Accelerated { eta: 0.1, eps: 1e-6, schedule: AlphaSchedule::Harmonic }, &set, &p, &x0, 100, 4).unwrap();
        let radius = 1e6;
        let boxed = run(
            &AlgorithmConfig::AcceleratedProjected { eta: 0.1, eps: 1e-6, radius, schedule: AlphaSchedule::Harmonic },
            &set,
            &p,
            &x0,
            100,
            4,
        )
        .unwrap();
        assert!(free.failure.is_none() && boxed.failure.is_none());
        assert!(ch_norm(&set, &free.final_x).unwrap() < radius);
        assert_eq!(free.rows, boxed.rows, "{}", set.name());
    }
}

#[test]
fn tight_ball_keeps_iterates_feasible() {
    let d = 4;
    let p = quadratic(d, NoiseModel::None);
    let set = PreconditionerSet::Diagonal { dim: d };
    let radius = 0.2;
    let x0 = vec![0.1; d];
    let tr = run(
        &AlgorithmConfig::AcceleratedProjected { eta: 1.0, eps: 1e-6, radius, schedule: AlphaSchedule::Harmonic },
        &set,
        &p,
        &x0,
        60,
        0,
    )
    .unwrap();
    assert!(tr.failure.is_none());
    // the minimizer -A⁻¹b has ℓ∞ norm 0.4, so the constraint binds
    let n = ch_norm(&set, &tr.final_x).unwrap();
    assert!(n <= radius * (1.0 + 1e-10));
    assert!(n >= radius * (1.0 - 1e-6), "{n}");
}

#[test]
fn seeded_runs_repeat_exactly() {
    let d = 6;
    let p = quadratic(d, NoiseModel::GaussianIso { variance: 0.1 });
    let set = PreconditionerSet::Full { dim: d };
    let alg = AlgorithmConfig::Adaptive { mode: AccumulationMode::Ema { beta: 0.9 }, eta: 0.05, eps: 1e-6 };
    let a = run(&alg, &set, &p, &vec![1.0; d], 80, 9).unwrap();
    let b = run(&alg, &set, &p, &vec![1.0; d], 80, 9).unwrap();
    let c = run(&alg, &set, &p, &vec![1.0; d], 80, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.final_x, c.final_x);
}
