//! Fleming-Viot transition function at time t, sampled through the pure
//! death process coming down from infinity and a Dirichlet-process mixture.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{ensure, Result};
use crate::esf::{check_theta, dp_draw};
use crate::measures::{Atom, AtomicMeasure, LabelAllocator};
use crate::numeric::compensated_sum;

/// Death rate out of level n: n(n - 1 + theta)/2.
pub fn death_rate(n: usize, theta: f64) -> f64 {
    let n = n as f64;
    n * (n - 1.0 + theta) / 2.0
}

/// Upper bound on sum_{m > n} 2/(m(m + theta - 1)), the expected time the
/// process spends above level n, by comparison with an integral.
pub fn tail_time_bound(n: usize, theta: f64) -> f64 {
    let n = n as f64;
    let a = theta - 1.0;
    if a.abs() < 1e-8 {
        2.0 / n
    } else {
        2.0 * (a / n).ln_1p() / a
    }
}

/// Expected time to absorption from level n: sum_{m=1}^{n} 2/(m(m + theta - 1)).
pub fn expected_absorption_time(n: usize, theta: f64) -> f64 {
    compensated_sum((1..=n).map(|m| 1.0 / death_rate(m, theta)))
}

/// Smallest n whose tail bound is below min(trunc_tol, t/100).
pub fn entry_level(theta: f64, t: f64, trunc_tol: f64) -> Result<usize> {
    check_theta(theta)?;
    ensure!(
        t > 0.0 && t.is_finite(),
        Validation,
        "time must be positive, got {t}"
    );
    ensure!(
        trunc_tol > 0.0,
        Validation,
        "truncation tolerance must be positive"
    );
    let target = trunc_tol.min(t / 100.0);
    // The bound is decreasing in n and behaves like 2/n.
    let (mut lo, mut hi) = (1usize, 2usize);
    while tail_time_bound(hi, theta) >= target {
        lo = hi;
        hi = hi
            .checked_mul(2)
            .ok_or_else(|| crate::Error::Resource(format!("entry level overflow for t = {t}")))?;
    }
    if tail_time_bound(lo, theta) < target {
        return Ok(lo);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if tail_time_bound(mid, theta) < target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// A death-process path started at `entry_level` at time 0.
///
/// The true process enters level `entry_level` after a residual time R with
/// E[R] below the truncation target, so the simulated L_t is stochastically at
/// most the true one, shifted by R.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeathProcessPath {
    pub theta: f64,
    pub entry_level: usize,
    /// holding_times[k] is Y_n for n = entry_level - k.
    pub holding_times: Vec<f64>,
}

impl DeathProcessPath {
    pub fn sample<R: Rng + ?Sized>(theta: f64, entry_level: usize, rng: &mut R) -> Result<Self> {
        check_theta(theta)?;
        ensure!(entry_level >= 1, Validation, "entry level must be positive");
        let holding_times = (1..=entry_level)
            .rev()
            .map(|n| {
                let e: f64 = Exp1.sample(rng);
                e / death_rate(n, theta)
            })
            .collect();
        Ok(Self {
            theta,
            entry_level,
            holding_times,
        })
    }

    /// L_t: the level occupied at time t.
    pub fn value_at(&self, t: f64) -> usize {
        let mut elapsed = 0.0;
        for (k, y) in self.holding_times.iter().enumerate() {
            elapsed += y;
            if elapsed > t {
                return self.entry_level - k;
            }
        }
        0
    }

    /// Time to reach 0.
    pub fn absorption_time(&self) -> f64 {
        compensated_sum(self.holding_times.iter().copied())
    }
}

/// Draws L_t without materializing the path below it.
pub fn sample_death_level<R: Rng + ?Sized>(
    theta: f64,
    t: f64,
    trunc_tol: f64,
    rng: &mut R,
) -> Result<usize> {
    let top = entry_level(theta, t, trunc_tol)?;
    let mut elapsed = 0.0;
    for n in (1..=top).rev() {
        let e: f64 = Exp1.sample(rng);
        elapsed += e / death_rate(n, theta);
        if elapsed > t {
            return Ok(n);
        }
    }
    Ok(0)
}

/// Realization of nu_L = (1/(L+theta)) sum_i delta_{X_i} + (theta/(L+theta)) pi:
/// the atoms from mu carry mass 1/(L+theta) each (merged by label) and the
/// uniform part is kept as diffuse mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuSample {
    pub atoms: Vec<Atom>,
    pub diffuse_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionSample {
    pub t: f64,
    pub level: usize,
    pub base: NuSample,
    pub measure: AtomicMeasure,
    /// Stick-breaking mass left when truncation stopped (assigned to one
    /// extra base draw inside `measure`).
    pub residual: f64,
    /// Total mass of `measure` on atoms with labels not present in mu.
    pub fresh_mass: f64,
}

/// One draw of Z_mu(t).
pub fn sample_transition<R: Rng + ?Sized>(
    mu: &AtomicMeasure,
    theta: f64,
    t: f64,
    trunc_tol: f64,
    rng: &mut R,
) -> Result<TransitionSample> {
    let level = sample_death_level(theta, t, trunc_tol, rng)?;
    transition_given_level(mu, theta, t, level, rng)
}

/// Z_mu(t) conditional on L_t = `level`: a DP(level + theta, nu_level) draw.
pub fn transition_given_level<R: Rng + ?Sized>(
    mu: &AtomicMeasure,
    theta: f64,
    t: f64,
    level: usize,
    rng: &mut R,
) -> Result<TransitionSample> {
    check_theta(theta)?;
    let atoms = mu.atoms();
    let pick = WeightedIndex::new(atoms.iter().map(|a| a.mass))
        .map_err(|e| crate::Error::Validation(format!("bad input measure: {e}")))?;
    let total = level as f64 + theta;
    let xs: Vec<usize> = (0..level).map(|_| pick.sample(rng)).collect();

    let mut base_atoms: Vec<Atom> = Vec::new();
    let mut sorted = xs.clone();
    sorted.sort_unstable();
    for chunk in sorted.chunk_by(|a, b| a == b) {
        let a = atoms[chunk[0]];
        base_atoms.push(Atom {
            label: a.label,
            location: a.location,
            mass: chunk.len() as f64 / total,
        });
    }
    let base = NuSample {
        atoms: base_atoms,
        diffuse_mass: theta / total,
    };

    let mut labels = LabelAllocator::after(mu);
    let first_fresh = labels.peek();
    let fresh_prob = theta / total;
    let (measure, residual) = dp_draw(total, Tolerances::default().gem_residual, rng, |r| {
        if r.random::<f64>() < fresh_prob {
            (labels.fresh(), r.random::<f64>())
        } else {
            let a = atoms[xs[r.random_range(0..xs.len())]];
            (a.label, a.location)
        }
    })?;
    let fresh_mass = compensated_sum(
        measure
            .atoms()
            .iter()
            .filter(|a| a.label.0 >= first_fresh)
            .map(|a| a.mass),
    );
    Ok(TransitionSample {
        t,
        level,
        base,
        measure,
        residual,
        fresh_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esf::dp_uniform;
    use crate::measures::TypeLabel;
    use crate::numeric::mean_and_se;
    use crate::rng::{replicate_rng, seeded};

    #[test]
    fn tail_bound_dominates_tail_sum() {
        for &theta in &[0.1, 0.5, 1.0, 2.0, 10.0] {
            for &n in &[1usize, 5, 50, 500] {
                let tail: f64 = (n + 1..n + 2_000_000)
                    .map(|m| 1.0 / death_rate(m, theta))
                    .sum();
                assert!(
                    tail <= tail_time_bound(n, theta) * (1.0 + 1e-9),
                    "theta {theta} n {n}"
                );
            }
        }
    }

    #[test]
    fn entry_level_is_minimal() {
        for &(theta, t) in &[(1.0, 1.0), (0.5, 0.1), (3.0, 10.0), (1.0, 1e-3)] {
            let n = entry_level(theta, t, 1e-3).unwrap();
            let target = 1e-3f64.min(t / 100.0);
            assert!(tail_time_bound(n, theta) < target);
            assert!(n == 1 || tail_time_bound(n - 1, theta) >= target);
        }
        assert!(entry_level(1.0, 0.0, 1e-3).is_err());
        assert!(entry_level(0.0, 1.0, 1e-3).is_err());
    }

    #[test]
    fn absorption_time_mean_bound() {
        for &theta in &[0.2, 1.0, 5.0] {
            let e = expected_absorption_time(1_000_000, theta);
            assert!(e <= 2.0 * (theta + 1.0) / theta);
        }
        assert!((expected_absorption_time(1, 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn path_is_monotone_and_absorbs() {
        let mut rng = seeded(41);
        let path = DeathProcessPath::sample(1.0, 500, &mut rng).unwrap();
        assert!(path.holding_times.iter().all(|&y| y > 0.0));
        let mut last = usize::MAX;
        for k in 0..2000 {
            let l = path.value_at(k as f64 * 0.01);
            assert!(l <= last);
            last = l;
        }
        assert_eq!(path.value_at(path.absorption_time() + 1e-9), 0);
        assert_eq!(path.value_at(0.0), 500);
    }

    #[test]
    fn large_time_level_is_zero() {
        let mut rng = seeded(42);
        let zeros = (0..10_000)
            .filter(|_| sample_death_level(1.0, 100.0, 1e-3, &mut rng).unwrap() == 0)
            .count();
        assert!(zeros >= 9_990, "{zeros}");
    }

    #[test]
    fn small_time_level_is_large() {
        let mut rng = seeded(43);
        for _ in 0..200 {
            assert!(sample_death_level(1.0, 1e-3, 1e-3, &mut rng).unwrap() >= 100);
        }
    }

    #[test]
    fn level_mean_matches_path_value() {
        // Level sampler and path sampler share a law.
        let (theta, t) = (1.0, 0.5);
        let top = entry_level(theta, t, 1e-3).unwrap();
        let mut rng = seeded(44);
        let a: Vec<f64> = (0..20_000)
            .map(|_| sample_death_level(theta, t, 1e-3, &mut rng).unwrap() as f64)
            .collect();
        let b: Vec<f64> = (0..20_000)
            .map(|_| {
                DeathProcessPath::sample(theta, top, &mut rng)
                    .unwrap()
                    .value_at(t) as f64
            })
            .collect();
        let (ma, sa) = mean_and_se(&a);
        let (mb, sb) = mean_and_se(&b);
        assert!((ma - mb).abs() < 5.0 * (sa * sa + sb * sb).sqrt());
    }

    #[test]
    fn level_zero_gives_dp() {
        let mut rng = seeded(45);
        let mu = AtomicMeasure::point_mass(TypeLabel(0), 0.3);
        let reps = 50_000;
        let mut matches = Vec::with_capacity(reps);
        for _ in 0..reps {
            let s = transition_given_level(&mu, 1.0, 1.0, 0, &mut rng).unwrap();
            assert!(s.base.atoms.is_empty());
            assert_eq!(s.base.diffuse_mass, 1.0);
            assert!(s.measure.atoms().iter().all(|a| a.label.0 >= 1));
            matches.push(s.measure.match_probability());
        }
        let (m, se) = mean_and_se(&matches);
        assert!((m - 0.5).abs() < 5.0 * se, "{m} +- {se}");
    }

    #[test]
    fn fresh_mass_mean() {
        // E[fresh mass | L] = theta / (L + theta).
        let mut rng = seeded(46);
        let mu = AtomicMeasure::new(vec![
            Atom {
                label: TypeLabel(0),
                location: 0.1,
                mass: 0.4,
            },
            Atom {
                label: TypeLabel(7),
                location: 0.8,
                mass: 0.6,
            },
        ])
        .unwrap();
        for level in [1usize, 3, 10] {
            let xs: Vec<f64> = (0..40_000)
                .map(|_| {
                    transition_given_level(&mu, 2.0, 1.0, level, &mut rng)
                        .unwrap()
                        .fresh_mass
                })
                .collect();
            let (m, se) = mean_and_se(&xs);
            let expect = 2.0 / (level as f64 + 2.0);
            assert!((m - expect).abs() < 5.0 * se, "L={level}: {m} vs {expect}");
            let s = transition_given_level(&mu, 2.0, 1.0, level, &mut rng).unwrap();
            let base_total: f64 =
                s.base.atoms.iter().map(|a| a.mass).sum::<f64>() + s.base.diffuse_mass;
            assert!((base_total - 1.0).abs() < 1e-12);
            assert!((s.base.diffuse_mass - 2.0 / (level as f64 + 2.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn short_time_preserves_mean() {
        let mut rng = seeded(47);
        let mu = AtomicMeasure::new(vec![
            Atom {
                label: TypeLabel(0),
                location: 0.9,
                mass: 0.7,
            },
            Atom {
                label: TypeLabel(1),
                location: 0.2,
                mass: 0.3,
            },
        ])
        .unwrap();
        let target = mu.integrate(|x| x);
        let xs: Vec<f64> = (0..300)
            .map(|_| {
                sample_transition(&mu, 1.0, 1e-3, 1e-3, &mut rng)
                    .unwrap()
                    .measure
                    .integrate(|x| x)
            })
            .collect();
        let (m, se) = mean_and_se(&xs);
        assert!((m - target).abs() < 5.0 * se + 1e-3, "{m} vs {target}");
    }

    #[test]
    fn stationary_match_probability() {
        let theta = 1.0;
        let reps = 20_000u64;
        for &t in &[0.1, 1.0] {
            let xs: Vec<f64> = (0..reps)
                .map(|r| {
                    let mut rng = replicate_rng(48, 0, r);
                    let mut labels = LabelAllocator::default();
                    let (mu, _) = dp_uniform(theta, 1e-10, &mut labels, &mut rng).unwrap();
                    sample_transition(&mu, theta, t, 1e-3, &mut rng)
                        .unwrap()
                        .measure
                        .match_probability()
                })
                .collect();
            let (m, se) = mean_and_se(&xs);
            assert!((m - 0.5).abs() < 5.0 * se, "t={t}: {m} +- {se}");
        }
    }
}
