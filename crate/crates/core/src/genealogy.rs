//! Backward ancestor-count chain of the Wright-Fisher genealogy.
//!
//! Going one generation back, each of the `j` current ancestors picks a parent
//! uniformly among `N`; the next count is the number of distinct parents, with
//! law `N^{-j} S(j, i) C(N, i) i!`. Traces are simulated by throwing the balls
//! directly; the Stirling form is kept as the exact reference.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::STIRLING_CAP;
use crate::error::{ensure, Result};
use crate::numeric::{ln_add_exp, ln_falling_factorial};

/// Lower-triangular table of ln S(j, i) for 0 <= i <= j <= max_j.
#[derive(Debug, Clone)]
pub struct StirlingTable {
    max_j: usize,
    rows: Vec<Vec<f64>>,
}

impl StirlingTable {
    pub fn new(max_j: usize) -> Self {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(max_j + 1);
        rows.push(vec![0.0]);
        for j in 1..=max_j {
            let prev = &rows[j - 1];
            let mut row = vec![f64::NEG_INFINITY; j + 1];
            for i in 1..=j {
                // S(j, i) = i S(j-1, i) + S(j-1, i-1)
                let stay = if i < j {
                    (i as f64).ln() + prev[i]
                } else {
                    f64::NEG_INFINITY
                };
                row[i] = ln_add_exp(stay, prev[i - 1]);
            }
            rows.push(row);
        }
        Self { max_j, rows }
    }

    pub fn max_j(&self) -> usize {
        self.max_j
    }

    pub fn ln_s(&self, j: usize, i: usize) -> Result<f64> {
        ensure!(i <= j, Domain, "S({j}, {i}) needs i <= j");
        ensure!(
            j <= self.max_j,
            Resource,
            "j = {j} beyond the Stirling cache ({})",
            self.max_j
        );
        Ok(self.rows[j][i])
    }
}

fn shared_table() -> &'static StirlingTable {
    static TABLE: OnceLock<StirlingTable> = OnceLock::new();
    TABLE.get_or_init(|| StirlingTable::new(STIRLING_CAP))
}

/// ln S(j, i), the log Stirling number of the second kind.
pub fn stirling2_log(j: usize, i: usize) -> Result<f64> {
    ensure!(i <= j, Domain, "S({j}, {i}) needs i <= j");
    ensure!(
        j <= STIRLING_CAP,
        Resource,
        "j = {j} beyond the Stirling cache ({STIRLING_CAP})"
    );
    shared_table().ln_s(j, i)
}

fn check_counts(n_pop: usize, j: usize) -> Result<()> {
    ensure!(n_pop >= 1, Domain, "population size must be positive");
    ensure!(
        (1..=n_pop).contains(&j),
        Domain,
        "need 1 <= j <= N, got j = {j}, N = {n_pop}"
    );
    Ok(())
}

/// P(X_{n+1} = i | X_n = j) for a population of size `n_pop`.
pub fn ancestral_transition_prob(n_pop: usize, j: usize, i: usize) -> Result<f64> {
    check_counts(n_pop, j)?;
    ensure!(
        (1..=j).contains(&i),
        Domain,
        "need 1 <= i <= j, got i = {i}, j = {j}"
    );
    let ln_p =
        stirling2_log(j, i)? + ln_falling_factorial(n_pop, i) - j as f64 * (n_pop as f64).ln();
    Ok(ln_p.exp())
}

/// The whole transition row; entry `i - 1` holds P(next = i | current = j).
pub fn ancestral_transition_row(n_pop: usize, j: usize) -> Result<Vec<f64>> {
    check_counts(n_pop, j)?;
    let ln_n = (n_pop as f64).ln();
    let mut ln_falling = 0.0;
    let mut row = Vec::with_capacity(j);
    for i in 1..=j {
        ln_falling += ((n_pop - i + 1) as f64).ln();
        row.push((stirling2_log(j, i)? + ln_falling - j as f64 * ln_n).exp());
    }
    Ok(row)
}

/// Number of occupied bins after throwing `balls` balls uniformly into
/// `bins` bins. O(balls) time, no per-bin storage.
pub fn occupied_bins<R: Rng + ?Sized>(bins: usize, balls: usize, rng: &mut R) -> usize {
    let inv = 1.0 / bins as f64;
    let mut occupied = 0usize;
    for _ in 0..balls {
        if rng.random::<f64>() >= occupied as f64 * inv {
            occupied += 1;
        }
    }
    occupied
}

/// One backward generation: the number of distinct parents of `j` lineages.
pub fn ancestral_step<R: Rng + ?Sized>(n_pop: usize, j: usize, rng: &mut R) -> Result<usize> {
    check_counts(n_pop, j)?;
    Ok(occupied_bins(n_pop, j, rng))
}

/// Path of ancestor counts X_0 = start, X_1, ... down to the first value at
/// or below the floor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncestralTrace {
    pub n_pop: usize,
    pub path: Vec<usize>,
}

impl AncestralTrace {
    /// Number of recorded states, including X_0.
    pub fn generations(&self) -> usize {
        self.path.len()
    }

    /// Number of backward steps taken.
    pub fn steps(&self) -> usize {
        self.path.len() - 1
    }
}

pub fn simulate_trace<R: Rng + ?Sized>(
    n_pop: usize,
    start: usize,
    floor: usize,
    rng: &mut R,
) -> Result<AncestralTrace> {
    check_counts(n_pop, start)?;
    ensure!(floor >= 1, Domain, "floor must be at least 1");
    let mut path = vec![start];
    let mut x = start;
    while x > floor {
        x = occupied_bins(n_pop, x, rng);
        path.push(x);
    }
    Ok(AncestralTrace { n_pop, path })
}

/// Generations spent, and ancestors summed, while the count lies in (x, y].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub x: usize,
    pub y: usize,
    pub tau: u64,
    pub edges: u64,
}

fn check_interval(n_pop: usize, x: usize, y: usize) -> Result<()> {
    ensure!(
        2 <= x && x < y && y <= n_pop,
        Domain,
        "need 2 <= x < y <= N, got x = {x}, y = {y}, N = {n_pop}"
    );
    Ok(())
}

pub fn interval_stats(trace: &AncestralTrace, x: usize, y: usize) -> Result<IntervalStats> {
    check_interval(trace.n_pop, x, y)?;
    let (tau, edges) = trace
        .path
        .iter()
        .filter(|&&v| v > x && v <= y)
        .fold((0u64, 0u64), |(t, e), &v| (t + 1, e + v as u64));
    debug_assert!(edges <= y as u64 * tau);
    Ok(IntervalStats { x, y, tau, edges })
}

/// Upper bound on E[tau_{x,y}^2 | X_0 = N]: 21 + 85 (6N(y-x+1) / (x(x-1)))^2.
pub fn durint_bound(n_pop: usize, x: usize, y: usize) -> Result<f64> {
    check_interval(n_pop, x, y)?;
    let r = 6.0 * n_pop as f64 * (y - x + 1) as f64 / (x as f64 * (x - 1) as f64);
    Ok(21.0 + 85.0 * r * r)
}

/// Upper bound on E[E_{L,N}^2 | X_0 = N]: 6e6 (N ln N)^2.
pub fn numedges_bound(n_pop: usize) -> Result<f64> {
    ensure!(n_pop >= 3, Domain, "needs N >= 3, got {n_pop}");
    let v = n_pop as f64 * (n_pop as f64).ln();
    Ok(6e6 * v * v)
}

/// Expected number of bins holding at least two of x balls thrown into N bins.
pub fn occupancy_ge2_mean(n_pop: usize, x: usize) -> Result<f64> {
    ensure!(
        2 <= x && x <= n_pop,
        Domain,
        "need 2 <= x <= N, got x = {x}, N = {n_pop}"
    );
    let n = n_pop as f64;
    let x = x as f64;
    let q = 1.0 - 1.0 / n;
    Ok(n * (1.0 - (x / n) * q.powf(x - 1.0) - q.powf(x)))
}
