//! Acceptance suite: every guarantee the library claims, exercised at desk
//! scale with pinned tolerances. One test per criterion; each prints a
//! PASS line when it holds (run with `--nocapture` to see them).

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use alpha_core::analysis::{bound_accelerated, corollary_bound, BoundInputs, GammaTable};
use alpha_core::blockspace::{
    weighted_norm_sq, BlockMetric, BlockPartition, BlockVector, Weights,
};
use alpha_core::eso;
use alpha_core::objective::{square_losses, SmoothObjective, SparseMatrix};
use alpha_core::regularizer::{soft_threshold, BlockPenalty, Regularizer};
use alpha_core::sampling::{Sampling, DEFAULT_ATOM_CAP};
use alpha_core::solver::{
    preset_config, run_efficient, run_generic, theta_next, Preset, SolverConfig, ThetaSchedule,
};

// ---------------------------------------------------------------- fixtures

/// Random sparse quadratic, N = n = 20 scalar blocks, density 0.3. Columns
/// are patched to stay nonempty; the seed is chosen so the normal matrix is
/// well separated from singular.
fn quadratic_instance() -> (SmoothObjective, BlockVector) {
    let n = 20usize;
    let partition = BlockPartition::scalar(n);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut triplets = Vec::new();
    let mut col_filled = vec![false; n];
    for r in 0..n {
        for (c, filled) in col_filled.iter_mut().enumerate() {
            if rng.random::<f64>() < 0.3 {
                let v = rng.random::<f64>() * 2.0 - 1.0;
                if v != 0.0 {
                    triplets.push((r, c, v));
                    *filled = true;
                }
            }
        }
    }
    for (c, filled) in col_filled.iter().enumerate() {
        if !filled {
            triplets.push((c, c, 1.0));
        }
    }
    let matrix = SparseMatrix::from_triplets(&partition, n, &triplets).unwrap();
    let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let obj = SmoothObjective::new(matrix, square_losses(&b), BlockMetric::identity(&partition))
        .unwrap();
    let xstar = obj.quadratic_minimizer().expect("instance is nonsingular");
    (obj, xstar)
}

/// Dense random least squares, 50 x 20, plus an l1 penalty of 0.1.
fn lasso_instance() -> (SmoothObjective, Regularizer) {
    let (m, n) = (50usize, 20usize);
    let partition = BlockPartition::scalar(n);
    let mut rng = ChaCha8Rng::seed_from_u64(7770);
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
        .collect();
    let xtrue: Vec<f64> = (0..n)
        .map(|i| if i % 3 == 0 { rng.random::<f64>() * 2.0 - 1.0 } else { 0.0 })
        .collect();
    let b: Vec<f64> = rows
        .iter()
        .map(|row| {
            row.iter().zip(&xtrue).map(|(a, x)| a * x).sum::<f64>()
                + 0.05 * (rng.random::<f64>() - 0.5)
        })
        .collect();
    let matrix = SparseMatrix::from_dense_rows(&partition, &rows).unwrap();
    let obj = SmoothObjective::new(matrix, square_losses(&b), BlockMetric::identity(&partition))
        .unwrap();
    let reg = Regularizer::uniform(n, BlockPenalty::L1 { lambda: 0.1 }).unwrap();
    (obj, reg)
}

/// High-accuracy reference minimizer of the composite problem: the
/// accelerated full-sampling proximal preset run for 1e5 iterations.
fn reference_minimizer(obj: &SmoothObjective, reg: &Regularizer) -> (BlockVector, f64) {
    let mut config = preset_config(Preset::AccProxGd, obj, reg, None, None).unwrap();
    config.iterations = 100_000;
    config.log_stride = Some(100_000);
    let x0 = BlockVector::zeros(obj.partition());
    let res = run_generic(obj, reg, &x0, &config).unwrap();
    let fstar = obj.value(&res.x) + reg.value(&res.x);
    (res.x, fstar)
}

fn r2_weighted(x0: &BlockVector, xstar: &BlockVector, w: &Weights, metric: &BlockMetric) -> f64 {
    let mut d = x0.clone();
    d.axpy(-1.0, xstar);
    weighted_norm_sq(&d, w, metric).unwrap()
}

// --------------------------------------------------------------- criteria

/// Constant-step full-sampling bound on the quadratic: for every k,
/// f(x_k) - f* <= ||x0 - x*||_v^2 / (2k), and the objective never rises.
#[test]
fn acceptance_01_gd_bound() {
    let (obj, xstar) = quadratic_instance();
    let fstar = obj.value(&xstar);
    let reg = Regularizer::zero(20);
    let mut config = preset_config(Preset::Gd, &obj, &reg, None, None).unwrap();
    config.iterations = 1000;
    let x0 = BlockVector::zeros(obj.partition());
    let r2 = r2_weighted(&x0, &xstar, &config.v, obj.metric());
    let res = run_generic(&obj, &reg, &x0, &config).unwrap();

    let mut prev = f64::INFINITY;
    let mut worst_ratio = f64::NEG_INFINITY;
    for p in &res.trace.points {
        let gap = p.smooth - fstar;
        let bound = r2 / (2.0 * p.k as f64);
        let ratio = gap / bound;
        worst_ratio = worst_ratio.max(ratio);
        assert!(
            ratio <= 1.0 + 1e-9,
            "k = {}: gap {gap} exceeds bound {bound}",
            p.k
        );
        assert!(p.smooth <= prev + 1e-12 * prev.abs().max(1.0), "objective rose at k = {}", p.k);
        prev = p.smooth;
    }
    println!("acceptance 01 (gd bound, 1000 iters): PASS  worst gap/bound = {worst_ratio:.3e}");
}

/// Accelerated full-sampling bound: f(x_k) - f* <= 2 ||x0 - x*||_v^2 / (k+1)^2.
#[test]
fn acceptance_02_agd_bound() {
    let (obj, xstar) = quadratic_instance();
    let fstar = obj.value(&xstar);
    let reg = Regularizer::zero(20);
    let mut config = preset_config(Preset::Agd, &obj, &reg, None, None).unwrap();
    config.iterations = 1000;
    let x0 = BlockVector::zeros(obj.partition());
    let r2 = r2_weighted(&x0, &xstar, &config.v, obj.metric());
    let res = run_generic(&obj, &reg, &x0, &config).unwrap();

    let mut worst_ratio = f64::NEG_INFINITY;
    for p in &res.trace.points {
        let gap = p.smooth - fstar;
        let kf = p.k as f64;
        let bound = 2.0 * r2 / ((kf + 1.0) * (kf + 1.0));
        let ratio = gap / bound;
        worst_ratio = worst_ratio.max(ratio);
        assert!(ratio <= 1.0 + 1e-9, "k = {}: gap {gap} exceeds bound {bound}", p.k);
    }
    println!("acceptance 02 (agd bound, 1000 iters): PASS  worst gap/bound = {worst_ratio:.3e}");
}

/// Expectation bounds for the randomized serial-uniform presets: the
/// 100-seed mean of f(x_k) - f* stays within 5% of the respective
/// guarantee at every logged k <= 500.
#[test]
fn acceptance_03_randomized_expectation_bounds() {
    let (obj, xstar) = quadratic_instance();
    let fstar = obj.value(&xstar);
    let x0 = BlockVector::zeros(obj.partition());
    let reg = Regularizer::zero(20);
    let iters = 500usize;
    let seeds = 100u64;

    for preset in [Preset::Pcd, Preset::Apcd] {
        let base = preset_config(preset, &obj, &reg, Some(Sampling::serial_uniform(20).unwrap()), None)
            .unwrap();
        let mut mean_gap = vec![0.0f64; iters];
        for seed in 0..seeds {
            let mut config = base.clone();
            config.iterations = iters;
            config.seed = seed;
            let res = run_generic(&obj, &reg, &x0, &config).unwrap();
            for (idx, p) in res.trace.points.iter().enumerate() {
                mean_gap[idx] += (p.smooth - fstar) / seeds as f64;
            }
        }
        let p = base.sampling.probability_vector();
        let vp2 = base.v.div_sq(p.as_slice()).unwrap();
        let inputs = BoundInputs {
            delta0: obj.value(&x0) - fstar,
            r2_v: r2_weighted(&x0, &xstar, &base.v, obj.metric()),
            r2_vp2: r2_weighted(&x0, &xstar, &vp2, obj.metric()),
            min_p: p.min(),
            n: 20,
            tau: Some(1.0),
        };
        let mut worst_ratio = f64::NEG_INFINITY;
        for k in 1..=iters {
            let bound = corollary_bound(preset, &inputs, k).unwrap();
            let ratio = mean_gap[k - 1] / bound;
            worst_ratio = worst_ratio.max(ratio);
            assert!(
                ratio <= 1.05,
                "{}: mean gap at k = {k} is {} vs bound {bound}",
                preset.name(),
                mean_gap[k - 1]
            );
        }
        println!(
            "acceptance 03 ({} expectation bound, 100 seeds): PASS  worst mean/bound = {worst_ratio:.3}",
            preset.name()
        );
    }
}

/// Proximal accelerated expectation bound on the lasso under the
/// importance-sampling preset with serial-uniform sampling.
#[test]
fn acceptance_04_proximal_bounds() {
    let (obj, reg) = lasso_instance();
    let (xstar, fstar) = reference_minimizer(&obj, &reg);
    let x0 = BlockVector::zeros(obj.partition());
    let iters = 500usize;
    let seeds = 100u64;

    let base = preset_config(
        Preset::Approxis,
        &obj,
        &reg,
        Some(Sampling::serial_uniform(20).unwrap()),
        None,
    )
    .unwrap();
    let theta0 = base.schedule.theta0();
    let p = base.sampling.probability_vector();
    let vp2 = base.v.div_sq(p.as_slice()).unwrap();
    let f0 = obj.value(&x0) + reg.value(&x0);
    let c = (1.0 - theta0) * (f0 - fstar)
        + 0.5 * theta0 * theta0 * r2_weighted(&x0, &xstar, &vp2, obj.metric());

    let mut mean_gap = vec![0.0f64; iters];
    for seed in 0..seeds {
        let mut config = base.clone();
        config.iterations = iters;
        config.seed = seed;
        let res = run_generic(&obj, &reg, &x0, &config).unwrap();
        for (idx, pt) in res.trace.points.iter().enumerate() {
            mean_gap[idx] += (pt.objective - fstar) / seeds as f64;
        }
    }
    let mut worst_ratio = f64::NEG_INFINITY;
    for k in 1..=iters {
        let bound = bound_accelerated(c, theta0, k);
        let ratio = mean_gap[k - 1] / bound;
        worst_ratio = worst_ratio.max(ratio);
        assert!(ratio <= 1.05, "mean gap at k = {k} is {} vs bound {bound}", mean_gap[k - 1]);
    }
    println!(
        "acceptance 04 (proximal accelerated bound, lasso, 100 seeds): PASS  worst mean/bound = {worst_ratio:.3}"
    );
}

/// The residual-maintained realization reproduces the reference
/// realization's iterates to 1e-9 relative at every iteration, same seed.
#[test]
fn acceptance_05_generic_efficient_equivalence() {
    let (obj, reg) = lasso_instance();
    let sampling = Sampling::tau_nice(20, 4).unwrap();
    let v = eso::full_eso(&obj); // admissible for every sampling
    let eig = eso::certify_quadratic(&obj, &sampling, &v, DEFAULT_ATOM_CAP).unwrap();
    assert!(eig >= -1e-10, "user-supplied v failed its certificate: {eig}");

    let theta0 = sampling.min_probability();
    let mut config = SolverConfig::new(sampling, v, ThetaSchedule::Accelerated(theta0), 200, 31);
    config.history_cap = Some(200);
    let x0 = BlockVector::zeros(obj.partition());
    let gen = run_generic(&obj, &reg, &x0, &config).unwrap();
    let eff = run_efficient(&obj, &reg, &x0, &config).unwrap();
    let hg = gen.history.unwrap();
    let he = eff.history.unwrap();
    assert_eq!(hg.x.len(), 201);
    let mut worst = 0.0f64;
    for k in 0..hg.x.len() {
        for (a, b) in hg.x[k].values().iter().zip(he.x[k].values()) {
            let dev = (a - b).abs() / a.abs().max(1.0);
            worst = worst.max(dev);
            assert!(dev <= 1e-9, "iterate {k} deviates by {dev}");
        }
    }
    println!("acceptance 05 (two realizations agree, 200 iters): PASS  max rel deviation = {worst:.3e}");
}

/// Per-iteration touched work stays proportional to the sampled column
/// supports: the counter over 1e4 iterations lands within 20% of
/// K * tau * nnz / n, for both realizations.
#[test]
fn acceptance_06_no_full_pass_cost() {
    let n = 40usize;
    let m = 60usize;
    let tau = 4usize;
    let iters = 10_000usize;
    let partition = BlockPartition::scalar(n);
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut triplets = Vec::new();
    for r in 0..m {
        for c in 0..n {
            if rng.random::<f64>() < 0.5 {
                triplets.push((r, c, rng.random::<f64>() + 0.1));
            }
        }
    }
    for c in 0..n {
        triplets.push((c % m, c, 1.0));
    }
    let matrix = SparseMatrix::from_triplets(&partition, m, &triplets).unwrap();
    let nnz = matrix.nonzero_blocks() as f64;
    let b: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    let obj =
        SmoothObjective::new(matrix, square_losses(&b), BlockMetric::identity(&partition)).unwrap();
    let x0 = BlockVector::zeros(&partition);
    let expected = iters as f64 * tau as f64 * nnz / n as f64;

    // residual-maintained realization, accelerated schedule
    let sampling = Sampling::tau_nice(n, tau).unwrap();
    let v = eso::full_eso(&obj);
    let mut config = SolverConfig::new(
        sampling,
        v.clone(),
        ThetaSchedule::Accelerated(1.0),
        iters,
        1,
    );
    config.eval_objective = false;
    config.log_stride = Some(iters);
    let eff = run_efficient(&obj, &Regularizer::zero(n), &x0, &config).unwrap();
    let ratio_eff = eff.touched_nnz as f64 / expected;
    assert!(
        (0.8..=1.2).contains(&ratio_eff),
        "efficient counter {} vs expected {expected}",
        eff.touched_nnz
    );

    // reference realization under the uniform collapse (constant
    // theta = E|S|/n) shows the same scaling
    let mut cgen = SolverConfig::new(
        Sampling::tau_nice(n, tau).unwrap(),
        v,
        ThetaSchedule::Constant(tau as f64 / n as f64),
        iters,
        1,
    );
    cgen.eval_objective = false;
    cgen.log_stride = Some(iters);
    let gen = run_generic(&obj, &Regularizer::zero(n), &x0, &cgen).unwrap();
    let ratio_gen = gen.touched_nnz as f64 / expected;
    assert!(
        (0.8..=1.2).contains(&ratio_gen),
        "generic counter {} vs expected {expected}",
        gen.touched_nnz
    );
    println!(
        "acceptance 06 (touched-nnz cost model, 1e4 iters): PASS  efficient ratio = {ratio_eff:.4}, collapse ratio = {ratio_gen:.4}"
    );
}

/// Stepsize sequence invariants over 1e4 steps from three starts: the
/// defining identity (exact in cleared form, 1e-12 relative in quotient
/// form), the 2/(k + 2/theta0) envelope, and monotonicity.
#[test]
fn acceptance_07_theta_sequence_invariants() {
    for theta0 in [1.0f64, 0.5, 0.1] {
        let mut t = theta0;
        for k in 0..10_000usize {
            let nt = theta_next(t);
            // identity (1 - t')/t'^2 = 1/t^2, cleared of divisions
            let cleared = ((1.0 - nt) * t * t - nt * nt).abs();
            assert!(cleared <= 1e-12, "theta0 {theta0}, k {k}: cleared residual {cleared}");
            // quotient form at 1e-12 relative; the absolute quotient
            // residual is floored by f64 representation of 1/theta^2
            let quotient = ((1.0 - nt) / (nt * nt) - 1.0 / (t * t)).abs();
            let denom = 1.0 / (t * t);
            assert!(quotient <= 1e-12 * denom.max(1.0), "theta0 {theta0}, k {k}: quotient residual {quotient}");
            assert!(nt <= t, "sequence rose at k = {k}");
            assert!(
                nt <= 2.0 / ((k + 1) as f64 + 2.0 / theta0) + 1e-15,
                "envelope violated at k = {k}"
            );
            t = nt;
        }
    }
    println!("acceptance 07 (theta invariants, 3 starts x 1e4 steps): PASS");
}

/// The expectation identity holds exactly (1e-10 relative) over the atoms
/// of every enumerable sampling kind at n = 6.
#[test]
fn acceptance_08_expectation_identity() {
    let n = 6usize;
    let partition = BlockPartition::scalar(n);
    let metric = BlockMetric::identity(&partition);
    let samplings = vec![
        Sampling::full(n).unwrap(),
        Sampling::serial(vec![0.05, 0.1, 0.15, 0.2, 0.24, 0.26]).unwrap(),
        Sampling::tau_nice(n, 3).unwrap(),
        Sampling::distributed(n, 2, 1).unwrap(),
        Sampling::explicit(
            n,
            vec![
                (vec![0, 1, 2], 0.3),
                (vec![3, 4, 5], 0.3),
                (vec![0, 5], 0.2),
                (vec![1, 2, 3, 4], 0.2),
            ],
        )
        .unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst = 0.0f64;
    for sampling in &samplings {
        let p = sampling.probability_vector();
        let atoms = sampling.enumerate_atoms(DEFAULT_ATOM_CAP).unwrap();
        for _ in 0..100 {
            let x = BlockVector::from_values(
                &partition,
                (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect(),
            )
            .unwrap();
            let a = BlockVector::from_values(
                &partition,
                (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect(),
            )
            .unwrap();
            let w =
                Weights::new((0..n).map(|_| 0.05 + rng.random::<f64>() * 3.0).collect()).unwrap();
            let wp = w
                .hadamard(&Weights::new(p.as_slice().to_vec()).unwrap())
                .unwrap();
            let mut expect = 0.0;
            for (set, prob) in &atoms {
                let mut shifted = x.clone();
                shifted.axpy(1.0, &alpha_core::blockspace::restrict(&a, set));
                expect += prob * weighted_norm_sq(&shifted, &w, &metric).unwrap();
            }
            let lhs = weighted_norm_sq(&x, &w, &metric).unwrap() - expect;
            let mut xa = x.clone();
            xa.axpy(1.0, &a);
            let rhs = weighted_norm_sq(&x, &wp, &metric).unwrap()
                - weighted_norm_sq(&xa, &wp, &metric).unwrap();
            let dev = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0);
            worst = worst.max(dev);
            assert!(dev <= 1e-10, "identity off by {dev}");
        }
    }
    println!("acceptance 08 (expectation identity, 5 kinds x 100 draws): PASS  worst rel dev = {worst:.3e}");
}

/// Convex-combination diagnostics along an importance-sampled proximal
/// run: coefficients stay a convex combination, reconstruct the iterate,
/// and upper-bound the penalty.
#[test]
fn acceptance_09_gamma_diagnostics() {
    let (obj, reg) = lasso_instance();
    let n = 20usize;
    let raw: Vec<f64> = (0..n).map(|i| (i + 1) as f64).collect();
    let total: f64 = raw.iter().sum();
    let sampling = Sampling::serial(raw.iter().map(|x| x / total).collect()).unwrap();
    let p = sampling.probability_vector();
    let theta0 = p.min();
    let v = eso::serial_eso(&obj);
    let mut config = SolverConfig::new(sampling, v, ThetaSchedule::Accelerated(theta0), 100, 17);
    config.history_cap = Some(100);
    let x0 = BlockVector::zeros(obj.partition());
    let res = run_generic(&obj, &reg, &x0, &config).unwrap();
    let h = res.history.unwrap();

    let mut table = GammaTable::new(&p, 100);
    let mut worst_sum = 0.0f64;
    let mut worst_rec = 0.0f64;
    for k in 1..=100usize {
        table.step(h.theta[k - 1]).unwrap();
        assert!(table.min_coefficient() >= -1e-12, "negative coefficient at k = {k}");
        for i in 0..n {
            worst_sum = worst_sum.max((table.row_sum(i) - 1.0).abs());
            assert!((table.row_sum(i) - 1.0).abs() <= 1e-10, "row sum off at k = {k}");
        }
        let rebuilt = table.reconstruct_x(&h.z).unwrap();
        for (a, b) in rebuilt.values().iter().zip(h.x[k].values()) {
            let dev = (a - b).abs() / a.abs().max(1.0);
            worst_rec = worst_rec.max(dev);
            assert!(dev <= 1e-8, "reconstruction off by {dev} at k = {k}");
        }
        let psi_hat = table.psi_hat(&h.z, &reg).unwrap();
        let psi_actual = reg.value(&h.x[k]);
        assert!(
            psi_actual <= psi_hat + 1e-10,
            "penalty majorant violated at k = {k}: {psi_actual} > {psi_hat}"
        );
    }
    println!(
        "acceptance 09 (gamma diagnostics, 100 iters): PASS  worst row-sum dev = {worst_sum:.3e}, worst reconstruction = {worst_rec:.3e}"
    );
}

/// The PSD certificate accepts the exact serial weights, rejects them
/// halved, and agrees in sign with the exact-expectation falsifier, on 100
/// random quadratics.
#[test]
fn acceptance_10_eso_certification() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for trial in 0..100u64 {
        let n = 2 + (rng.random::<u32>() as usize) % 7; // 2..=8
        let partition = BlockPartition::scalar(n);
        let m = n + 3;
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
            .collect();
        let matrix = SparseMatrix::from_dense_rows(&partition, &rows).unwrap();
        let obj = SmoothObjective::new(
            matrix,
            square_losses(&vec![0.0; m]),
            BlockMetric::identity(&partition),
        )
        .unwrap();
        let l = eso::serial_eso(&obj);
        let raw: Vec<f64> = (0..n).map(|_| 0.2 + rng.random::<f64>()).collect();
        let tot: f64 = raw.iter().sum();
        let sampling = Sampling::serial(raw.iter().map(|x| x / tot).collect()).unwrap();

        let good = eso::certify_quadratic(&obj, &sampling, &l, DEFAULT_ATOM_CAP).unwrap();
        assert!(good >= -1e-10, "trial {trial}: exact weights rejected ({good})");

        let half = l.scale(0.5).unwrap();
        let bad = eso::certify_quadratic(&obj, &sampling, &half, DEFAULT_ATOM_CAP).unwrap();
        assert!(bad < 0.0, "trial {trial}: halved weights passed ({bad})");

        let rep_good =
            eso::falsify_monte_carlo(&obj, &sampling, &l, 200, trial, DEFAULT_ATOM_CAP).unwrap();
        assert!(rep_good.exact_expectation);
        assert!(
            rep_good.worst_violation <= 1e-10,
            "trial {trial}: falsifier contradicts PSD ({})",
            rep_good.worst_violation
        );
        let rep_bad =
            eso::falsify_monte_carlo(&obj, &sampling, &half, 200, trial, DEFAULT_ATOM_CAP).unwrap();
        assert!(
            rep_bad.worst_violation > 0.0,
            "trial {trial}: falsifier missed an invalid certificate"
        );
    }
    println!("acceptance 10 (certification, 100 random quadratics): PASS");
}

/// The cube-root importance sampling minimizes the accelerated bound
/// constant: never worse than uniform, exactly.
#[test]
fn acceptance_11_importance_sampling_dominance() {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    for _ in 0..100 {
        let n = 3 + (rng.random::<u32>() as usize) % 10;
        // L spans three orders of magnitude
        let l = Weights::new(
            (0..n)
                .map(|_| 10f64.powf(rng.random::<f64>() * 3.0 - 1.5))
                .collect(),
        )
        .unwrap();
        let d: Vec<f64> = (0..n).map(|_| 0.01 + rng.random::<f64>()).collect();
        let pstar = eso::optimal_serial_probabilities(&l, &d).unwrap();
        let constant = |p: &[f64]| -> f64 {
            l.as_slice()
                .iter()
                .zip(&d)
                .zip(p)
                .map(|((&li, &di), &pi)| li * di / (pi * pi))
                .sum()
        };
        let uniform = vec![1.0 / n as f64; n];
        assert!(constant(pstar.as_slice()) <= constant(&uniform));
    }
    println!("acceptance 11 (importance sampling dominance, 100 instances): PASS");
}

/// Collapse identities: full sampling with constant theta = 1 keeps the
/// three sequences bitwise equal; the uniform-collapse preset keeps them
/// within 1e-12; and the deterministic presets reproduce their explicit
/// step formulas on a hand-checkable 2-D instance.
#[test]
fn acceptance_12_collapse_identities() {
    // (a) full sampling + theta = 1: bitwise
    let (obj, _) = quadratic_instance();
    let reg = Regularizer::zero(20);
    let mut config = preset_config(Preset::Gd, &obj, &reg, None, None).unwrap();
    config.iterations = 50;
    config.history_cap = Some(50);
    let x0 = BlockVector::zeros(obj.partition());
    let res = run_generic(&obj, &reg, &x0, &config).unwrap();
    let h = res.history.unwrap();
    for k in 0..h.x.len() {
        for (a, b) in h.x[k].values().iter().zip(h.z[k].values()) {
            assert_eq!(a.to_bits(), b.to_bits(), "x and z differ bitwise at k = {k}");
        }
    }

    // (b) uniform tau-nice with theta0 = tau/n: within 1e-12
    let tn = Sampling::tau_nice(20, 5).unwrap();
    let v = eso::full_eso(&obj);
    let mut cp = preset_config(Preset::Pcdm, &obj, &reg, Some(tn), Some(v)).unwrap();
    cp.iterations = 50;
    cp.seed = 2;
    cp.history_cap = Some(50);
    let resp = run_generic(&obj, &reg, &x0, &cp).unwrap();
    let hp = resp.history.unwrap();
    for k in 0..hp.x.len() {
        let theta = if k < hp.theta.len() { hp.theta[k] } else { *hp.theta.last().unwrap() };
        let mut y = hp.x[k].clone();
        y.convex_combination(theta, &hp.x[k], &hp.z[k]);
        for ((a, b), c) in hp.x[k].values().iter().zip(hp.z[k].values()) .zip(y.values()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "x vs z at k = {k}");
            assert!((a - c).abs() <= 1e-12 * a.abs().max(1.0), "x vs y at k = {k}");
        }
    }

    // (c) explicit 2-D step formulas; dyadic data keeps every operation
    // exact, so the comparison is bitwise with zero slack
    let partition = BlockPartition::scalar(2);
    let rows = vec![vec![1.0, 0.0], vec![0.0, 2.0]];
    let matrix = SparseMatrix::from_dense_rows(&partition, &rows).unwrap();
    let b = [1.0, 2.0];
    let obj2 = SmoothObjective::new(
        matrix,
        square_losses(&b),
        BlockMetric::identity(&partition),
    )
    .unwrap();
    let zero2 = Regularizer::zero(2);
    let v_user = Weights::new(vec![4.0, 4.0]).unwrap(); // = lambda_max exactly
    let mut cg = preset_config(Preset::Gd, &obj2, &zero2, None, Some(v_user.clone())).unwrap();
    cg.history_cap = Some(3);
    cg.iterations = 3;
    let x0_2 = BlockVector::from_values(&partition, vec![0.5, -0.5]).unwrap();
    let resg = run_generic(&obj2, &zero2, &x0_2, &cg).unwrap();
    let hg = resg.history.unwrap();
    // by hand: grad_c = A_cc (A_cc x_c - b_c); x' = x - grad / (1 * v / 1)
    let mut x = [0.5f64, -0.5];
    let a = [1.0f64, 2.0];
    for k in 1..=3usize {
        for c in 0..2 {
            let grad = a[c] * (a[c] * x[c] - b[c]);
            let tau = 1.0 * v_user.get(c) / 1.0;
            x[c] -= grad / tau;
        }
        assert_eq!(hg.x[k].values()[0].to_bits(), x[0].to_bits(), "gd step {k}");
        assert_eq!(hg.x[k].values()[1].to_bits(), x[1].to_bits(), "gd step {k}");
    }

    // prox variant with l1: soft-threshold formula
    let l1 = Regularizer::uniform(2, BlockPenalty::L1 { lambda: 0.25 }).unwrap();
    let mut cpg = preset_config(Preset::ProxGd, &obj2, &l1, None, Some(v_user.clone())).unwrap();
    cpg.history_cap = Some(3);
    cpg.iterations = 3;
    let respg = run_generic(&obj2, &l1, &x0_2, &cpg).unwrap();
    let hpg = respg.history.unwrap();
    let mut xp = [0.5f64, -0.5];
    for k in 1..=3usize {
        for c in 0..2 {
            let grad = a[c] * (a[c] * xp[c] - b[c]);
            let tau = 1.0 * v_user.get(c) / 1.0;
            xp[c] = soft_threshold(xp[c] - grad / tau, 0.25 / tau);
        }
        assert_eq!(hpg.x[k].values()[0].to_bits(), xp[0].to_bits(), "prox gd step {k}");
        assert_eq!(hpg.x[k].values()[1].to_bits(), xp[1].to_bits(), "prox gd step {k}");
    }

    println!("acceptance 12 (collapse identities + explicit step formulas): PASS");
}

// Keep the fixtures honest: the quadratic instance really is solvable and
// the partition is what the criteria assume.
#[test]
fn fixtures_are_wellformed() {
    let (obj, xstar) = quadratic_instance();
    assert_eq!(obj.partition().block_count(), 20);
    assert_eq!(obj.partition().total_dim(), 20);
    let g = obj.gradient(&xstar);
    assert!(g.values().iter().all(|v| v.abs() < 1e-8));
    let (lobj, lreg) = lasso_instance();
    assert_eq!(lobj.matrix().rows(), 50);
    assert!(!lreg.is_zero());
    let _ = Arc::strong_count(obj.partition());
}
