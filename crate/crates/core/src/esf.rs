//! Ewens sampling formula, Chinese restaurant process and GEM / Poisson-Dirichlet
//! sampling.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Tolerances, ENUMERATION_CAP, MAX_STICKS};
use crate::error::{ensure, Error, Result};
use crate::measures::{
    enumerate_partitions_capped, Atom, AtomicMeasure, LabelAllocator, MassVector,
    PartitionDistribution, SetPartition, TypeLabel,
};
use crate::numeric::{compensated_sum, ln_factorial, ln_rising_factorial};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwensParams {
    pub theta: f64,
    pub n: usize,
}

impl EwensParams {
    pub fn new(theta: f64, n: usize) -> Result<Self> {
        check_theta(theta)?;
        ensure!(n >= 1, Validation, "n must be positive");
        Ok(Self { theta, n })
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    ensure!(
        theta > 0.0 && theta.is_finite(),
        Domain,
        "theta must be positive and finite, got {theta}"
    );
    Ok(())
}

/// Probability of a set partition under the ESF(theta):
/// theta^k prod_i (n_i - 1)! / (theta)_n.
pub fn esf_set_partition_prob(pi: &SetPartition, theta: f64) -> Result<f64> {
    Ok(esf_ln_prob(pi, theta)?.exp())
}

pub fn esf_ln_prob(pi: &SetPartition, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let sizes = pi.block_sizes();
    let k = sizes.len() as f64;
    let ln_blocks = compensated_sum(sizes.iter().map(|&s| ln_factorial(s - 1)));
    Ok(k * theta.ln() + ln_blocks - ln_rising_factorial(theta, pi.n()))
}

/// Exact ESF law over all set partitions of {1..n}.
pub fn esf_distribution(n: usize, theta: f64) -> Result<PartitionDistribution> {
    check_theta(theta)?;
    let all = enumerate_partitions_capped(n, ENUMERATION_CAP)?;
    let mut probs = BTreeMap::new();
    for p in all {
        let pr = esf_set_partition_prob(&p, theta)?;
        probs.insert(p, pr);
    }
    let d = PartitionDistribution::new(n, probs)?;
    let total = d.total();
    ensure!(
        (total - 1.0).abs() <= Tolerances::default().esf_sum,
        Numerical,
        "ESF({theta}) over n = {n} sums to {total}"
    );
    Ok(d)
}

/// Seating state of a one-parameter Chinese restaurant process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrpState {
    pub theta: f64,
    pub step: usize,
    pub table_sizes: Vec<usize>,
    pub table_labels: Vec<TypeLabel>,
    /// Table of each seated customer, in arrival order.
    assignment: Vec<u32>,
}

impl CrpState {
    pub fn new(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(Self {
            theta,
            step: 0,
            table_sizes: Vec::new(),
            table_labels: Vec::new(),
            assignment: Vec::new(),
        })
    }

    /// Seats the next customer: an existing table with probability
    /// proportional to its size, a new table with probability theta / (i - 1 + theta).
    pub fn seat<R: Rng + ?Sized>(&mut self, labels: &mut LabelAllocator, rng: &mut R) -> usize {
        let seated = self.step as f64;
        let u: f64 = rng.random::<f64>() * (seated + self.theta);
        let table = if u < seated {
            // Joining the table of a uniformly chosen earlier customer is
            // size-proportional.
            let c = (u.floor() as usize).min(self.step - 1);
            self.assignment[c] as usize
        } else {
            self.table_sizes.push(0);
            self.table_labels.push(labels.fresh());
            self.table_sizes.len() - 1
        };
        self.table_sizes[table] += 1;
        self.assignment.push(table as u32);
        self.step += 1;
        table
    }

    pub fn partition(&self) -> Result<SetPartition> {
        SetPartition::from_rgs(self.assignment.clone())
    }
}

pub fn crp_run<R: Rng + ?Sized>(n: usize, theta: f64, rng: &mut R) -> Result<CrpState> {
    ensure!(n >= 1, Validation, "n must be positive");
    let mut state = CrpState::new(theta)?;
    let mut labels = LabelAllocator::default();
    for _ in 0..n {
        state.seat(&mut labels, rng);
    }
    Ok(state)
}

/// One ESF-distributed set partition of {1..n}.
pub fn crp_sample<R: Rng + ?Sized>(n: usize, theta: f64, rng: &mut R) -> Result<SetPartition> {
    crp_run(n, theta, rng)?.partition()
}

/// Empirical measure of an n-sample from DP(theta, U[0,1]): one atom per
/// table with mass size / n and a uniform location.
pub fn crp_empirical_measure<R: Rng + ?Sized>(
    n: usize,
    theta: f64,
    rng: &mut R,
) -> Result<AtomicMeasure> {
    let state = crp_run(n, theta, rng)?;
    let atoms = state
        .table_sizes
        .iter()
        .zip(&state.table_labels)
        .map(|(&size, &label)| Atom {
            label,
            location: rng.random::<f64>(),
            mass: size as f64 / n as f64,
        })
        .collect();
    AtomicMeasure::new(atoms)
}

/// Draw from Beta(1, theta) by inversion.
pub fn beta_one_theta<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    1.0 - u.powf(1.0 / theta)
}

/// GEM(theta) sticks in size-biased order, generated until the unassigned
/// remainder drops below `residual_tol`. Returns `(masses, residual)`.
pub fn gem_sticks<R: Rng + ?Sized>(
    theta: f64,
    residual_tol: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    check_theta(theta)?;
    ensure!(
        residual_tol > 0.0 && residual_tol < 1.0,
        Validation,
        "residual tolerance must lie in (0, 1), got {residual_tol}"
    );
    let mut masses = Vec::new();
    let mut remaining = 1.0f64;
    let mut sticks = 0usize;
    while remaining >= residual_tol {
        if sticks == MAX_STICKS {
            return Err(Error::Numerical(format!(
                "stick breaking did not reach residual {residual_tol} within {MAX_STICKS} sticks (theta = {theta})"
            )));
        }
        let v = beta_one_theta(theta, rng);
        let m = v * remaining;
        remaining -= m;
        sticks += 1;
        if m > 0.0 {
            masses.push(m);
        }
    }
    Ok((masses, remaining))
}

/// PD(theta) masses: GEM sticks sorted into non-increasing order.
pub fn gem_stick_breaking<R: Rng + ?Sized>(
    theta: f64,
    residual_tol: f64,
    rng: &mut R,
) -> Result<MassVector> {
    let (mut masses, residual) = gem_sticks(theta, residual_tol, rng)?;
    masses.sort_by(|a, b| b.total_cmp(a));
    MassVector::new(masses, residual)
}

/// Truncated draw from DP(alpha, base). Each stick gets an atom from `base`;
/// atoms with equal labels are merged. The truncation residual (below
/// `residual_tol`) is given to one further base draw so the result is a
/// probability measure; the residual is also returned.
pub fn dp_draw<R, F>(
    alpha: f64,
    residual_tol: f64,
    rng: &mut R,
    mut base: F,
) -> Result<(AtomicMeasure, f64)>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> (TypeLabel, f64),
{
    let (masses, residual) = gem_sticks(alpha, residual_tol, rng)?;
    let mut items = Vec::with_capacity(masses.len() + 1);
    for m in masses {
        let (label, loc) = base(rng);
        items.push((label, loc, m));
    }
    if residual > 0.0 {
        let (label, loc) = base(rng);
        items.push((label, loc, residual));
    }
    Ok((AtomicMeasure::from_merged(items)?, residual))
}

/// DP(theta, U[0,1]) draw with fresh labels from `labels`.
pub fn dp_uniform<R: Rng + ?Sized>(
    theta: f64,
    residual_tol: f64,
    labels: &mut LabelAllocator,
    rng: &mut R,
) -> Result<(AtomicMeasure, f64)> {
    dp_draw(theta, residual_tol, rng, |r| {
        (labels.fresh(), r.random::<f64>())
    })
}

/// E sum_{j != k} P_j P_k for PD(theta): the chance two draws are distinct.
pub fn paintbox_pair_moment(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(theta / (theta + 1.0))
}

/// E sum over distinct (j, k, l) of P_j P_k P_l: the chance three draws are distinct.
pub fn paintbox_triple_moment(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(theta * theta / ((theta + 1.0) * (theta + 2.0)))
}

/// Two draws from Z ~ DP(theta, pi) coincide with probability 1 / (theta + 1).
pub fn match_probability_dp(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(1.0 / (theta + 1.0))
}

/// Match probability for two draws from the empirical measure of an n-sample
/// from DP(theta, pi): 1/n + (n - 1) / (n (theta + 1)).
pub fn match_probability_empirical(n: usize, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    ensure!(n >= 1, Validation, "n must be positive");
    let n = n as f64;
    Ok(1.0 / n + (n - 1.0) / (n * (theta + 1.0)))
}
