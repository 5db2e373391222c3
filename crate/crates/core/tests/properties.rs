//! Algebraic invariants of the building blocks, checked on randomized
//! inputs.

use std::sync::Arc;

use proptest::prelude::*;

use alpha_core::blockspace::{
    metric_apply, restrict, scale_blocks, weighted_inner, weighted_norm_sq, BlockMetric,
    BlockPartition, BlockVector, Weights,
};
use alpha_core::sampling::{Sampling, DEFAULT_ATOM_CAP};
use alpha_core::solver::theta_next;

fn finite_vec(len: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(lo..hi, len)
}

fn partition_and_dim() -> impl Strategy<Value = (Arc<BlockPartition>, usize)> {
    proptest::collection::vec(1usize..4, 1..6).prop_map(|sizes| {
        let dim = sizes.iter().sum();
        (Arc::new(BlockPartition::new(sizes).unwrap()), dim)
    })
}

proptest! {
    // ||x + y||_w^2 = ||x||_w^2 + 2 <Bx, y>_w + ||y||_w^2
    #[test]
    fn parallelogram_expansion(
        (partition, dim) in partition_and_dim(),
        seedv in proptest::collection::vec(-5.0f64..5.0, 3 * 8 + 8),
    ) {
        let n = partition.block_count();
        let xs: Vec<f64> = (0..dim).map(|c| seedv[c % seedv.len()]).collect();
        let ys: Vec<f64> = (0..dim).map(|c| seedv[(c + 7) % seedv.len()] * 0.5 - 0.25).collect();
        let w = Weights::new((0..n).map(|i| 0.1 + seedv[(i + 3) % seedv.len()].abs()).collect()).unwrap();
        let diag: Vec<f64> = (0..dim).map(|c| 0.2 + seedv[(c + 11) % seedv.len()].abs()).collect();
        let metric = BlockMetric::diagonal(&partition, diag).unwrap();

        let x = BlockVector::from_values(&partition, xs).unwrap();
        let y = BlockVector::from_values(&partition, ys).unwrap();
        let mut xy = x.clone();
        xy.axpy(1.0, &y);

        let lhs = weighted_norm_sq(&xy, &w, &metric).unwrap();
        let bx = metric_apply(&metric, &x);
        let rhs = weighted_norm_sq(&x, &w, &metric).unwrap()
            + 2.0 * weighted_inner(&bx, &y, &w).unwrap()
            + weighted_norm_sq(&y, &w, &metric).unwrap();
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
    }

    // restrict is idempotent, linear, and additive over disjoint sets
    #[test]
    fn restrict_laws(
        (partition, dim) in partition_and_dim(),
        vals in finite_vec(16, -10.0, 10.0),
        mask in proptest::collection::vec(0u8..3, 8),
    ) {
        let n = partition.block_count();
        let h = BlockVector::from_values(
            &partition,
            (0..dim).map(|c| vals[c % vals.len()]).collect(),
        ).unwrap();
        let s1: Vec<usize> = (0..n).filter(|&i| mask[i % mask.len()] == 1).collect();
        let s2: Vec<usize> = (0..n).filter(|&i| mask[i % mask.len()] == 2).collect();

        let r1 = restrict(&h, &s1);
        let r1_again = restrict(&r1, &s1);
        prop_assert_eq!(r1_again.values(), r1.values());

        let mut union: Vec<usize> = s1.iter().chain(&s2).cloned().collect();
        union.sort_unstable();
        let mut sum = restrict(&h, &s1);
        sum.axpy(1.0, &restrict(&h, &s2));
        let r_union = restrict(&h, &union);
        prop_assert_eq!(sum.values(), r_union.values());

        // full set is the identity, empty set the zero vector
        let all: Vec<usize> = (0..n).collect();
        let r_all = restrict(&h, &all);
        prop_assert_eq!(r_all.values(), h.values());
        prop_assert!(restrict(&h, &[]).values().iter().all(|&v| v == 0.0));
    }

    // positive definiteness of the weighted norm
    #[test]
    fn weighted_norm_positive_definite(
        (partition, dim) in partition_and_dim(),
        vals in finite_vec(16, -3.0, 3.0),
        wseed in finite_vec(8, 0.1, 4.0),
    ) {
        let n = partition.block_count();
        let x = BlockVector::from_values(
            &partition,
            (0..dim).map(|c| vals[c % vals.len()]).collect(),
        ).unwrap();
        let w = Weights::new((0..n).map(|i| wseed[i % wseed.len()]).collect()).unwrap();
        let metric = BlockMetric::identity(&partition);
        let norm = weighted_norm_sq(&x, &w, &metric).unwrap();
        if x.values().iter().any(|&v| v != 0.0) {
            prop_assert!(norm > 0.0);
        } else {
            prop_assert_eq!(norm, 0.0);
        }
    }

    // block scaling against the elementwise definition
    #[test]
    fn scale_blocks_matches_definition(
        (partition, dim) in partition_and_dim(),
        vals in finite_vec(16, -3.0, 3.0),
        vseed in finite_vec(8, 0.1, 2.0),
    ) {
        let n = partition.block_count();
        let x = BlockVector::from_values(
            &partition,
            (0..dim).map(|c| vals[c % vals.len()]).collect(),
        ).unwrap();
        let v = Weights::new((0..n).map(|i| vseed[i % vseed.len()]).collect()).unwrap();
        let scaled = scale_blocks(&v, &x).unwrap();
        for i in 0..n {
            for (a, b) in scaled.block(i).iter().zip(x.block(i)) {
                prop_assert_eq!(*a, v.get(i) * b);
            }
        }
    }

    // the theta recursion keeps its invariants from any start
    #[test]
    fn theta_recursion_invariants(theta0 in 0.01f64..1.0) {
        let mut t = theta0;
        for k in 0..500 {
            let nt = theta_next(t);
            prop_assert!(nt > 0.0 && nt <= t);
            // cleared form of (1 - t')/t'^2 = 1/t^2
            prop_assert!(((1.0 - nt) * t * t - nt * nt).abs() <= 1e-14);
            prop_assert!(nt <= 2.0 / (k as f64 + 1.0 + 2.0 / theta0) + 1e-15);
            t = nt;
        }
    }
}

// The expectation identity: for any sampling with enumerable atoms and any
// x, a, w:
//   ||x||_w^2 - E ||x + a_[S]||_w^2 = ||x||_{w o p}^2 - ||x + a||_{w o p}^2
proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn expectation_identity(
        xs in finite_vec(5, -4.0, 4.0),
        as_ in finite_vec(5, -4.0, 4.0),
        ws in finite_vec(5, 0.05, 3.0),
        which in 0usize..4,
    ) {
        let n = 5;
        let partition = BlockPartition::scalar(n);
        let metric = BlockMetric::identity(&partition);
        let sampling = match which {
            0 => Sampling::full(n).unwrap(),
            1 => Sampling::serial(vec![0.1, 0.15, 0.2, 0.25, 0.3]).unwrap(),
            2 => Sampling::tau_nice(n, 2).unwrap(),
            _ => Sampling::explicit(
                n,
                vec![(vec![0, 1], 0.25), (vec![2, 3, 4], 0.35), (vec![0, 2, 4], 0.4)],
            )
            .unwrap(),
        };
        let x = BlockVector::from_values(&partition, xs).unwrap();
        let a = BlockVector::from_values(&partition, as_).unwrap();
        let w = Weights::new(ws).unwrap();
        let p = sampling.probability_vector();
        let wp = w.hadamard(&Weights::new(p.as_slice().to_vec()).unwrap()).unwrap();

        let atoms = sampling.enumerate_atoms(DEFAULT_ATOM_CAP).unwrap();
        let mut expect = 0.0;
        for (set, prob) in &atoms {
            let mut shifted = x.clone();
            shifted.axpy(1.0, &restrict(&a, set));
            expect += prob * weighted_norm_sq(&shifted, &w, &metric).unwrap();
        }
        let lhs = weighted_norm_sq(&x, &w, &metric).unwrap() - expect;

        let mut xa = x.clone();
        xa.axpy(1.0, &a);
        let rhs = weighted_norm_sq(&x, &wp, &metric).unwrap()
            - weighted_norm_sq(&xa, &wp, &metric).unwrap();

        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * scale, "lhs {} rhs {}", lhs, rhs);
    }
}
