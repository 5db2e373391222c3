//! Assignment and certification of the expected separable
//! overapproximation weights `v` for a pair `(f, S)`:
//!
//! ```text
//! E[f(x + h_[S])]  <=  f(x) + <grad f(x), h>_p + (1/2) ||h||^2_{v o p}
//! ```
//!
//! Serial samplings admit `v = L` (the block Lipschitz constants) and the
//! full sampling admits the global constant, both exactly. For other
//! samplings the weights must come from the caller; the certificate
//! machinery below is what makes user-supplied values safe: quadratics get
//! an exact PSD test, everything else a randomized falsifier.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::blockspace::{restrict, weighted_inner, weighted_norm_sq, BlockVector, Weights};
use crate::error::{Error, Result};
use crate::objective::{GlobalEsoMethod, SmoothObjective};
use crate::sampling::{ProbabilityVector, Sampling};

/// Eigenvalue slack allowed by the PSD certificate; symmetric eigensolver
/// noise sits well below this.
pub const CERTIFICATE_EIG_TOL: f64 = -1e-10;

/// Floor given to the sampling weight of a block whose initial distance is
/// zero, so the optimal serial sampling stays proper.
pub const ZERO_DISTANCE_FLOOR: f64 = 1e-6;

/// How a weight vector was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsoMethod {
    SerialExact,
    FullExact,
    UserSupplied,
}

/// What backs the claim that the weights are admissible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Certification {
    /// Exact reduction for quadratics: smallest eigenvalue of `D - P o M`.
    QuadraticPsd { min_eigenvalue: f64 },
    /// Randomized falsification: worst relative violation observed.
    MonteCarlo { trials: usize, worst_violation: f64 },
    None,
}

/// Weights together with their provenance and certification status.
#[derive(Debug, Clone)]
pub struct EsoCertificate {
    pub v: Weights,
    pub method: EsoMethod,
    pub certification: Certification,
}

impl EsoCertificate {
    pub fn passed(&self) -> bool {
        match self.certification {
            Certification::QuadraticPsd { min_eigenvalue } => min_eigenvalue >= CERTIFICATE_EIG_TOL,
            Certification::MonteCarlo { worst_violation, .. } => worst_violation <= 1e-10,
            Certification::None => matches!(self.method, EsoMethod::SerialExact | EsoMethod::FullExact),
        }
    }
}

/// Runs the PSD certificate against the given weights and wraps the
/// outcome. `method` records where the weights came from.
pub fn certificate_psd(
    obj: &SmoothObjective,
    sampling: &Sampling,
    v: Weights,
    method: EsoMethod,
    atom_cap: u128,
) -> Result<EsoCertificate> {
    let min_eigenvalue = certify_quadratic(obj, sampling, &v, atom_cap)?;
    Ok(EsoCertificate {
        v,
        method,
        certification: Certification::QuadraticPsd { min_eigenvalue },
    })
}

/// Runs the randomized falsifier against the given weights and wraps the
/// outcome.
pub fn certificate_monte_carlo(
    obj: &SmoothObjective,
    sampling: &Sampling,
    v: Weights,
    method: EsoMethod,
    trials: usize,
    seed: u64,
    atom_cap: u128,
) -> Result<EsoCertificate> {
    let report = falsify_monte_carlo(obj, sampling, &v, trials, seed, atom_cap)?;
    Ok(EsoCertificate {
        v,
        method,
        certification: Certification::MonteCarlo {
            trials: report.trials,
            worst_violation: report.worst_violation,
        },
    })
}

/// Weights valid for every serial sampling, independent of the probability
/// vector: the block Lipschitz constants.
pub fn serial_eso(obj: &SmoothObjective) -> Weights {
    obj.block_lipschitz_constants()
}

/// Weights valid for the full sampling: the global smoothness constant in
/// every slot.
pub fn full_eso(obj: &SmoothObjective) -> Weights {
    obj.global_lipschitz_weights(GlobalEsoMethod::PowerIteration)
}

/// Exact certificate for quadratic objectives over scalar blocks.
///
/// For `f(x) = (1/2) x^T M x + c^T x + d` the overapproximation inequality
/// holds for all `x, h` iff `D - P o M` is positive semidefinite, where
/// `P` is the pairwise inclusion matrix of the sampling, `o` the Hadamard
/// product and `D = diag(p_i v_i B_i)`. Returns the smallest eigenvalue;
/// admissible iff it is `>= -1e-10`.
pub fn certify_quadratic(
    obj: &SmoothObjective,
    sampling: &Sampling,
    v: &Weights,
    atom_cap: u128,
) -> Result<f64> {
    if !obj.is_quadratic() {
        return Err(Error::InvalidObjective(
            "the PSD certificate needs all-square losses; use the Monte Carlo falsifier".into(),
        ));
    }
    let partition = obj.partition();
    if !partition.is_scalar() {
        return Err(Error::InvalidObjective(
            "the PSD certificate is implemented for scalar blocks".into(),
        ));
    }
    let n = partition.block_count();
    if sampling.n() != n || v.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: sampling.n().max(v.len()) });
    }
    let p = sampling.probability_vector();
    let pairwise = sampling.pairwise_inclusion_matrix(atom_cap)?;

    // M = sum_j gamma_j a_j a_j^T assembled from sparse rows
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); obj.matrix().rows()];
    for i in 0..n {
        for (r, sub) in obj.matrix().block_column(i) {
            rows[r].push((i, sub[0]));
        }
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (j, row) in rows.iter().enumerate() {
        let gamma = obj.losses()[j].curvature();
        for &(c1, v1) in row {
            for &(c2, v2) in row {
                m[(c1, c2)] += gamma * v1 * v2;
            }
        }
    }
    let mut d_minus = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            d_minus[(i, j)] = -pairwise[(i, j)] * m[(i, j)];
        }
        let b_ii = obj.metric().quad_block(i, &[1.0], &[1.0]);
        d_minus[(i, i)] += p.get(i) * v.get(i) * b_ii;
    }
    let sym = (&d_minus + d_minus.transpose()) * 0.5;
    let min_eig = sym
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    Ok(min_eig)
}

/// Outcome of the randomized falsifier.
#[derive(Debug, Clone, Copy)]
pub struct FalsificationReport {
    /// Max over trials of `(lhs - rhs) / max(1, |rhs|)`.
    pub worst_violation: f64,
    /// Whether the expectation side was computed exactly over atoms.
    pub exact_expectation: bool,
    /// Largest standard error of the sampled expectation (zero when exact).
    pub worst_std_error: f64,
    pub trials: usize,
}

/// Tries to break the overapproximation inequality on random Gaussian
/// `(x, h)` pairs. The expectation is exact whenever the sampling's atoms
/// fit under `atom_cap`, otherwise a 1000-draw sample mean is used and its
/// standard error reported.
pub fn falsify_monte_carlo(
    obj: &SmoothObjective,
    sampling: &Sampling,
    v: &Weights,
    trials: usize,
    seed: u64,
    atom_cap: u128,
) -> Result<FalsificationReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("falsification needs at least one trial".into()));
    }
    let partition = obj.partition();
    let n = partition.block_count();
    if sampling.n() != n || v.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: sampling.n().max(v.len()) });
    }
    let p = sampling.probability_vector();
    let p_weights = Weights::new(p.as_slice().to_vec())?;
    let vp = v.hadamard(&p_weights)?;
    let atoms = match sampling.enumerate_atoms(atom_cap) {
        Ok(atoms) => Some(atoms),
        Err(Error::AtomCapExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_se = 0.0f64;
    const INNER_SAMPLES: usize = 1000;

    for _ in 0..trials {
        let mut x = BlockVector::zeros(partition);
        let mut h = BlockVector::zeros(partition);
        for vx in x.values_mut() {
            *vx = normal.sample(&mut rng);
        }
        for vh in h.values_mut() {
            *vh = normal.sample(&mut rng);
        }
        let grad = obj.gradient(&x);
        let rhs = obj.value(&x)
            + weighted_inner(&grad, &h, &p_weights)?
            + 0.5 * weighted_norm_sq(&h, &vp, obj.metric())?;

        let (lhs, se) = match &atoms {
            Some(atoms) => {
                let mut acc = 0.0;
                for (set, prob) in atoms {
                    let mut shifted = x.clone();
                    shifted.axpy(1.0, &restrict(&h, set));
                    acc += prob * obj.value(&shifted);
                }
                (acc, 0.0)
            }
            None => {
                let mut acc = 0.0;
                let mut acc2 = 0.0;
                let mut set = Vec::new();
                for _ in 0..INNER_SAMPLES {
                    sampling.draw_into(&mut rng, &mut set);
                    let mut shifted = x.clone();
                    shifted.axpy(1.0, &restrict(&h, &set));
                    let fv = obj.value(&shifted);
                    acc += fv;
                    acc2 += fv * fv;
                }
                let mean = acc / INNER_SAMPLES as f64;
                let var = (acc2 / INNER_SAMPLES as f64 - mean * mean).max(0.0);
                (mean, (var / INNER_SAMPLES as f64).sqrt())
            }
        };
        let violation = (lhs - rhs) / rhs.abs().max(1.0);
        if violation > worst {
            worst = violation;
            worst_se = se;
        }
    }
    Ok(FalsificationReport {
        worst_violation: worst,
        exact_expectation: atoms.is_some(),
        worst_std_error: worst_se,
        trials,
    })
}

/// The serial sampling minimizing the accelerated bound constant:
/// `p_i` proportional to `(L_i d_i)^{1/3}` where `d_i` is the squared
/// block distance to the reference point. Blocks with `d_i = 0` get the
/// floor weight [`ZERO_DISTANCE_FLOOR`] so the result stays proper.
pub fn optimal_serial_probabilities(l: &Weights, d: &[f64]) -> Result<ProbabilityVector> {
    if l.len() != d.len() {
        return Err(Error::LengthMismatch { expected: l.len(), got: d.len() });
    }
    if d.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidConfig("squared distances must be nonnegative".into()));
    }
    if d.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidConfig(
            "all block distances are zero; the optimal sampling is undefined".into(),
        ));
    }
    let weights: Vec<f64> = l
        .as_slice()
        .iter()
        .zip(d)
        .map(|(&li, &di)| if di == 0.0 { ZERO_DISTANCE_FLOOR } else { (li * di).cbrt() })
        .collect();
    let total: f64 = weights.iter().sum();
    ProbabilityVector::new(weights.into_iter().map(|w| w / total).collect())
}
