//! Samplings: probability distributions over subsets of the block indices
//! `{0, ..., n-1}`, their marginal probability vectors, exact atom
//! enumeration for small `n`, and seeded draws.
//!
//! Every constructor checks properness (each block has positive inclusion
//! probability); nil or improper samplings are rejected outright. Draws go
//! through a ChaCha8 generator so that a seed fixes the whole subset
//! sequence across platforms.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default cap on the number of atoms [`Sampling::enumerate_atoms`] will
/// produce. Overridable per call; the CLI maps `ALPHA_ATOM_CAP` onto it.
pub const DEFAULT_ATOM_CAP: u128 = 1 << 20;

/// Marginal inclusion probabilities `p_i = P(i in S)`, all in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidSampling("empty probability vector".into()));
        }
        if p.iter().any(|&x| !x.is_finite() || x <= 0.0 || x > 1.0 + 1e-12) {
            return Err(Error::InvalidSampling(
                "inclusion probabilities must lie in (0, 1]".into(),
            ));
        }
        Ok(Self(p.into_iter().map(|x| x.min(1.0)).collect()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Full,
    /// Singleton subsets; `q[i]` is the probability of drawing `{i}`.
    Serial(Vec<f64>),
    /// Uniformly random subset of fixed cardinality `tau`.
    TauNice(usize),
    /// Blocks split into `groups` consecutive groups of equal size; each
    /// group independently contributes a uniform `tau`-subset of itself.
    Distributed { groups: usize, tau: usize },
    /// Explicit list of (subset, probability) atoms.
    Explicit(Vec<(Vec<usize>, f64)>),
}

/// A proper sampling over subsets of `{0, ..., n-1}`.
#[derive(Debug, Clone)]
pub struct Sampling {
    n: usize,
    kind: Kind,
}

impl Sampling {
    /// The deterministic sampling that always selects every block.
    pub fn full(n: usize) -> Result<Self> {
        ensure_n(n)?;
        Ok(Self { n, kind: Kind::Full })
    }

    /// Serial sampling: one block per draw, block `i` with probability `q[i]`.
    pub fn serial(q: Vec<f64>) -> Result<Self> {
        let n = q.len();
        ensure_n(n)?;
        if q.iter().any(|&x| !x.is_finite() || x <= 0.0) {
            return Err(Error::InvalidSampling(
                "serial sampling is improper: every block needs positive probability".into(),
            ));
        }
        let total: f64 = q.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSampling(format!(
                "serial probabilities must sum to 1 (got {total})"
            )));
        }
        Ok(Self { n, kind: Kind::Serial(q) })
    }

    pub fn serial_uniform(n: usize) -> Result<Self> {
        ensure_n(n)?;
        Self::serial(vec![1.0 / n as f64; n])
    }

    /// Uniform sampling over all subsets of cardinality `tau`.
    pub fn tau_nice(n: usize, tau: usize) -> Result<Self> {
        ensure_n(n)?;
        if tau == 0 || tau > n {
            return Err(Error::InvalidSampling(format!(
                "tau-nice needs 1 <= tau <= n, got tau={tau}, n={n}"
            )));
        }
        Ok(Self { n, kind: Kind::TauNice(tau) })
    }

    /// `(c, tau)`-distributed sampling over `c` consecutive equal-size groups.
    /// Unequal partitions are rejected, not repaired.
    pub fn distributed(n: usize, groups: usize, tau: usize) -> Result<Self> {
        ensure_n(n)?;
        if groups == 0 || !n.is_multiple_of(groups) {
            return Err(Error::InvalidSampling(format!(
                "distributed sampling needs the group count to divide n (n={n}, c={groups})"
            )));
        }
        let per = n / groups;
        if tau == 0 || tau > per {
            return Err(Error::InvalidSampling(format!(
                "distributed sampling needs 1 <= tau <= n/c = {per}, got tau={tau}"
            )));
        }
        Ok(Self { n, kind: Kind::Distributed { groups, tau } })
    }

    /// Sampling given by an explicit atom list. Probabilities must sum to 1
    /// and every block must appear in some atom (properness).
    pub fn explicit(n: usize, atoms: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        ensure_n(n)?;
        if atoms.is_empty() {
            return Err(Error::InvalidSampling("no atoms".into()));
        }
        let mut covered = vec![false; n];
        let mut total = 0.0;
        let mut cleaned = Vec::with_capacity(atoms.len());
        for (mut set, prob) in atoms {
            if !prob.is_finite() || prob <= 0.0 {
                return Err(Error::InvalidSampling("atom probabilities must be positive".into()));
            }
            set.sort_unstable();
            set.dedup();
            if set.iter().any(|&i| i >= n) {
                return Err(Error::InvalidSampling("atom contains an out-of-range block".into()));
            }
            for &i in &set {
                covered[i] = true;
            }
            total += prob;
            cleaned.push((set, prob));
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSampling(format!(
                "atom probabilities must sum to 1 (got {total})"
            )));
        }
        if covered.iter().any(|&c| !c) {
            return Err(Error::InvalidSampling(
                "sampling is improper: some block never appears".into(),
            ));
        }
        Ok(Self { n, kind: Kind::Explicit(cleaned) })
    }

    /// Parses the CLI sampling syntax: `full`, `serial-uniform`,
    /// `serial:<q1,...,qn>`, `tau-nice:<tau>`, `distributed:<c>,<tau>`.
    pub fn parse(spec: &str, n: usize) -> Result<Self> {
        let spec = spec.trim();
        if spec == "full" {
            return Self::full(n);
        }
        if spec == "serial-uniform" {
            return Self::serial_uniform(n);
        }
        if let Some(rest) = spec.strip_prefix("serial:") {
            let q: Vec<f64> = parse_float_list(rest)?;
            if q.len() != n {
                return Err(Error::InvalidSampling(format!(
                    "serial spec lists {} probabilities but the problem has {} blocks",
                    q.len(),
                    n
                )));
            }
            return Self::serial(q);
        }
        if let Some(rest) = spec.strip_prefix("tau-nice:") {
            let tau: usize = rest.trim().parse().map_err(|_| {
                Error::InvalidSampling(format!("cannot parse tau from `{rest}`"))
            })?;
            return Self::tau_nice(n, tau);
        }
        if let Some(rest) = spec.strip_prefix("distributed:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::InvalidSampling(
                    "distributed spec must be `distributed:<c>,<tau>`".into(),
                ));
            }
            let c: usize = parts[0].trim().parse().map_err(|_| {
                Error::InvalidSampling(format!("cannot parse group count from `{}`", parts[0]))
            })?;
            let tau: usize = parts[1].trim().parse().map_err(|_| {
                Error::InvalidSampling(format!("cannot parse tau from `{}`", parts[1]))
            })?;
            return Self::distributed(n, c, tau);
        }
        Err(Error::InvalidSampling(format!("unknown sampling spec `{spec}`")))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Exact marginal probabilities for each kind.
    pub fn probability_vector(&self) -> ProbabilityVector {
        let p = match &self.kind {
            Kind::Full => vec![1.0; self.n],
            Kind::Serial(q) => q.clone(),
            Kind::TauNice(tau) => vec![*tau as f64 / self.n as f64; self.n],
            Kind::Distributed { groups, tau } => {
                vec![*tau as f64 * *groups as f64 / self.n as f64; self.n]
            }
            Kind::Explicit(atoms) => {
                let mut p = vec![0.0; self.n];
                for (set, prob) in atoms {
                    for &i in set {
                        p[i] += prob;
                    }
                }
                p
            }
        };
        ProbabilityVector::new(p).expect("construction guarantees properness")
    }

    pub fn min_probability(&self) -> f64 {
        self.probability_vector().min()
    }

    /// `E|S| = sum_i p_i`.
    pub fn expected_size(&self) -> f64 {
        self.probability_vector().as_slice().iter().sum()
    }

    pub fn is_serial(&self) -> bool {
        match &self.kind {
            Kind::Serial(_) => true,
            Kind::Explicit(atoms) => atoms.iter().all(|(s, _)| s.len() == 1),
            Kind::TauNice(tau) => *tau == 1 && self.n == 1,
            Kind::Full => self.n == 1,
            Kind::Distributed { .. } => false,
        }
    }

    pub fn is_uniform(&self) -> bool {
        let p = self.probability_vector();
        let first = p.get(0);
        p.as_slice().iter().all(|&x| (x - first).abs() <= 1e-12)
    }

    /// Draws one subset into `out` (sorted ascending).
    pub fn draw_into(&self, rng: &mut ChaCha8Rng, out: &mut Vec<usize>) {
        out.clear();
        match &self.kind {
            Kind::Full => out.extend(0..self.n),
            Kind::Serial(q) => out.push(categorical(rng, q)),
            Kind::TauNice(tau) => {
                let mut idx: Vec<usize> = (0..self.n).collect();
                partial_shuffle(rng, &mut idx, *tau);
                out.extend_from_slice(&idx[..*tau]);
                out.sort_unstable();
            }
            Kind::Distributed { groups, tau } => {
                let per = self.n / groups;
                for g in 0..*groups {
                    let base = g * per;
                    let mut idx: Vec<usize> = (base..base + per).collect();
                    partial_shuffle(rng, &mut idx, *tau);
                    out.extend_from_slice(&idx[..*tau]);
                }
                out.sort_unstable();
            }
            Kind::Explicit(atoms) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = atoms.len() - 1;
                for (k, (_, prob)) in atoms.iter().enumerate() {
                    acc += prob;
                    if u < acc {
                        chosen = k;
                        break;
                    }
                }
                out.extend_from_slice(&atoms[chosen].0);
            }
        }
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut out = Vec::new();
        self.draw_into(rng, &mut out);
        out
    }

    /// Number of atoms the distribution has, or `None` on overflow.
    pub fn atom_count(&self) -> Option<u128> {
        match &self.kind {
            Kind::Full => Some(1),
            Kind::Serial(q) => Some(q.len() as u128),
            Kind::TauNice(tau) => binomial(self.n as u128, *tau as u128),
            Kind::Distributed { groups, tau } => {
                let per = binomial((self.n / groups) as u128, *tau as u128)?;
                let mut acc: u128 = 1;
                for _ in 0..*groups {
                    acc = acc.checked_mul(per)?;
                }
                Some(acc)
            }
            Kind::Explicit(atoms) => Some(atoms.len() as u128),
        }
    }

    /// Lists every atom `(subset, probability)` of the distribution, or
    /// refuses when the count exceeds `cap`.
    pub fn enumerate_atoms(&self, cap: u128) -> Result<Vec<(Vec<usize>, f64)>> {
        let count = self
            .atom_count()
            .ok_or(Error::AtomCapExceeded { atoms: u128::MAX, cap })?;
        if count > cap {
            return Err(Error::AtomCapExceeded { atoms: count, cap });
        }
        let atoms = match &self.kind {
            Kind::Full => vec![((0..self.n).collect(), 1.0)],
            Kind::Serial(q) => q.iter().enumerate().map(|(i, &qi)| (vec![i], qi)).collect(),
            Kind::TauNice(tau) => {
                let prob = 1.0 / count as f64;
                combinations(&(0..self.n).collect::<Vec<_>>(), *tau)
                    .into_iter()
                    .map(|s| (s, prob))
                    .collect()
            }
            Kind::Distributed { groups, tau } => {
                let per = self.n / groups;
                let per_group: Vec<Vec<Vec<usize>>> = (0..*groups)
                    .map(|g| {
                        let base = g * per;
                        combinations(&(base..base + per).collect::<Vec<_>>(), *tau)
                    })
                    .collect();
                let prob = 1.0 / count as f64;
                let mut acc: Vec<Vec<usize>> = vec![Vec::new()];
                for group_sets in &per_group {
                    let mut next = Vec::with_capacity(acc.len() * group_sets.len());
                    for prefix in &acc {
                        for s in group_sets {
                            let mut u = prefix.clone();
                            u.extend_from_slice(s);
                            next.push(u);
                        }
                    }
                    acc = next;
                }
                acc.into_iter().map(|s| (s, prob)).collect()
            }
            Kind::Explicit(atoms) => atoms.clone(),
        };
        Ok(atoms)
    }

    /// The matrix `P` with `P_ij = P(i in S, j in S)`; its diagonal is the
    /// probability vector. Feeds the quadratic ESO certificate.
    pub fn pairwise_inclusion_matrix(&self, cap: u128) -> Result<DMatrix<f64>> {
        let atoms = self.enumerate_atoms(cap)?;
        let mut m = DMatrix::zeros(self.n, self.n);
        for (set, prob) in &atoms {
            for &i in set {
                for &j in set {
                    m[(i, j)] += prob;
                }
            }
        }
        Ok(m)
    }
}

fn ensure_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidSampling("n must be positive".into()));
    }
    Ok(())
}

fn parse_float_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidSampling(format!("cannot parse `{t}` as a float")))
        })
        .collect()
}

/// Inverse-CDF draw from a categorical distribution.
fn categorical(rng: &mut ChaCha8Rng, q: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &qi) in q.iter().enumerate() {
        acc += qi;
        if u < acc {
            return i;
        }
    }
    q.len() - 1
}

/// Partial Fisher-Yates: after the call, `idx[..tau]` is a uniformly random
/// `tau`-subset (in random order).
fn partial_shuffle(rng: &mut ChaCha8Rng, idx: &mut [usize], tau: usize) {
    let n = idx.len();
    for j in 0..tau {
        let r = j + rng.random_range(0..n - j);
        idx.swap(j, r);
    }
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)?;
        acc /= i + 1;
    }
    Some(acc)
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(items: &[usize], k: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        let remaining = k - current.len();
        for i in start..=items.len().saturating_sub(remaining) {
            current.push(items[i]);
            rec(items, k, i + 1, current, out);
            current.pop();
        }
    }
    rec(items, k, 0, &mut current, &mut out);
    out
}
