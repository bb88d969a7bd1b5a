//! Experiment harness: total-variation estimates between Wright-Fisher
//! sampling partitions and the Ewens sampling formula, and Monte Carlo checks
//! of every explicit bound.
//!
//! Replicate `i` of a stream always draws from `replicate_rng(seed, stream, i)`
//! and results are gathered in index order, so output does not depend on the
//! thread count.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Tolerances, ENUMERATION_CAP};
use crate::error::{ensure, Error, Result};
use crate::esf::{
    crp_sample, dp_uniform, esf_distribution, gem_sticks, match_probability_dp,
    paintbox_pair_moment, paintbox_triple_moment,
};
use crate::fv_dual::{entry_level, expected_absorption_time, sample_transition, DeathProcessPath};
use crate::genealogy::{
    ancestral_transition_row, durint_bound, interval_stats, numedges_bound, occupied_bins,
    simulate_trace,
};
use crate::measures::{
    enumerate_partitions, variation_distance, variation_distance_maps, LabelAllocator,
    PartitionDistribution, SetPartition,
};
use crate::numeric::{compensated_sum, mean_and_se};
use crate::rng::{replicate_rng, seeded, tag, SimRng};
use crate::stein_bounds::{
    binomial_central_fourth, binomial_moment_bounds, corollary_tv_bound, crp_gap_violation,
    crp_proposition_bound, kn2_bound, A3Variant, Exact, K32Source, TestFunctionClass,
    WFBoundInputs,
};
use crate::wright_fisher::{
    default_burn_in, k_moments, pim_lineage_partition, sample_partition, wf_stationary_sample,
    MutationModel, SamplingScheme,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Runs `f` for replicate indices 0..reps on the rayon pool, in index order.
pub fn replicates<T, F>(reps: u64, seed: u64, stream: &str, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut SimRng, u64) -> Result<T> + Sync,
{
    let stream = tag(stream);
    (0..reps)
        .into_par_iter()
        .map(|i| f(&mut replicate_rng(seed, stream, i), i))
        .collect()
}

/// Tallies the outcomes of `reps` replicates without storing them. Counts are
/// integers, so the merge order does not matter.
pub fn count_replicates<K, F>(reps: u64, seed: u64, stream: &str, f: F) -> Result<BTreeMap<K, u64>>
where
    K: Ord + Send,
    F: Fn(&mut SimRng, u64) -> Result<K> + Sync,
{
    let stream = tag(stream);
    (0..reps)
        .into_par_iter()
        .try_fold(BTreeMap::new, |mut acc, i| {
            *acc.entry(f(&mut replicate_rng(seed, stream, i), i)?)
                .or_insert(0) += 1;
            Ok(acc)
        })
        .try_reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            Ok(a)
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub schema_version: u32,
    pub id: String,
    pub seed: u64,
    pub params: Value,
    /// sha256 of the canonical JSON of (schema_version, id, seed, params).
    pub hash: String,
}

impl ExperimentManifest {
    pub fn new(id: &str, seed: u64, params: Value) -> Self {
        let body = json!({
            "schema_version": SCHEMA_VERSION,
            "id": id,
            "seed": seed,
            "params": params,
        });
        let hash = hex::encode(Sha256::digest(serde_json::to_vec(&body).expect("json")));
        Self {
            schema_version: SCHEMA_VERSION,
            id: id.to_string(),
            seed,
            params,
            hash,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TVEstimate {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reps: u64,
    pub support: usize,
    /// sqrt(|support| / (4 reps)): scale of the upward plug-in bias.
    pub plugin_bias_bound: f64,
    pub exact_id: String,
}

fn multinomial<R: Rng + ?Sized>(total: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut out = Vec::with_capacity(probs.len());
    let mut left = total;
    let mut mass = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if i + 1 == probs.len() || left == 0 {
            out.push(left);
            left = 0;
            continue;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = if q >= 1.0 {
            left
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(left, q).expect("valid").sample(rng)
        };
        out.push(k);
        left -= k;
        mass -= p;
    }
    out
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

/// Plug-in TV between empirical counts and an exact law, with a multinomial
/// bootstrap percentile interval widened if needed to contain the estimate.
pub fn tv_with_bootstrap<K: Ord + Clone>(
    counts: &BTreeMap<K, u64>,
    exact: &BTreeMap<K, f64>,
    exact_id: &str,
    seed: u64,
) -> Result<TVEstimate> {
    let reps: u64 = counts.values().sum();
    ensure!(reps > 0, Validation, "no replicates");
    let keys: Vec<K> = counts.keys().cloned().collect();
    let freq = |c: &[u64]| -> BTreeMap<K, f64> {
        keys.iter()
            .cloned()
            .zip(c.iter().map(|&v| v as f64 / reps as f64))
            .collect()
    };
    let observed: Vec<u64> = counts.values().copied().collect();
    let estimate = variation_distance_maps(&freq(&observed), exact);
    let probs: Vec<f64> = observed.iter().map(|&c| c as f64 / reps as f64).collect();
    let mut rng = seeded(seed ^ tag("bootstrap"));
    let mut boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| variation_distance_maps(&freq(&multinomial(reps, &probs, &mut rng)), exact))
        .collect();
    boot.sort_by(f64::total_cmp);
    let support = exact.len().max(counts.len());
    Ok(TVEstimate {
        estimate,
        ci_low: percentile(&boot, 0.025).min(estimate),
        ci_high: percentile(&boot, 0.975).max(estimate),
        reps,
        support,
        plugin_bias_bound: (support as f64 / (4.0 * reps as f64)).sqrt(),
        exact_id: exact_id.to_string(),
    })
}

/// Source of stationary Wright-Fisher samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StationarySource {
    ExactBackward,
    ForwardBurnIn { burn_in: u64 },
}

/// One n-sample partition from an independent stationary PIM population.
pub fn stationary_sample_partition(
    n_pop: usize,
    theta: f64,
    n: usize,
    source: StationarySource,
    rng: &mut SimRng,
) -> Result<SetPartition> {
    let model = MutationModel::pim(n_pop, theta)?;
    let rate = model.pim_rate_value().expect("pim");
    match source {
        // Tracing n lineages is the same as tracing all N and subsampling.
        StationarySource::ExactBackward => {
            Ok(pim_lineage_partition(n_pop, n, rate, rng)?.partition)
        }
        StationarySource::ForwardBurnIn { burn_in } => {
            let (pop, _) = wf_stationary_sample(n_pop, &model, burn_in, rng)?;
            sample_partition(&pop, n, SamplingScheme::WithoutReplacement, rng)
        }
    }
}

/// Number of types in one stationary PIM population.
pub fn stationary_type_count(
    n_pop: usize,
    theta: f64,
    source: StationarySource,
    rng: &mut SimRng,
) -> Result<usize> {
    let model = MutationModel::pim(n_pop, theta)?;
    let rate = model.pim_rate_value().expect("pim");
    match source {
        StationarySource::ExactBackward => {
            Ok(pim_lineage_partition(n_pop, n_pop, rate, rng)?.types)
        }
        StationarySource::ForwardBurnIn { burn_in } => {
            Ok(wf_stationary_sample(n_pop, &model, burn_in, rng)?
                .0
                .num_types())
        }
    }
}

/// d_TV(S_n(W_N), S_n(Z)) by plug-in Monte Carlo.
pub fn estimate_tv_wf_vs_esf(
    n_pop: usize,
    theta: f64,
    n: usize,
    reps: u64,
    seed: u64,
    source: StationarySource,
) -> Result<TVEstimate> {
    ensure!(
        n <= 8,
        Resource,
        "exact sampling-formula side needs n <= 8, got {n}"
    );
    ensure!(
        reps >= 1000,
        Validation,
        "need at least 1000 replicates, got {reps}"
    );
    ensure!(n >= 1 && n <= n_pop, Validation, "need 1 <= n <= N");
    let exact = esf_distribution(n, theta)?;
    let counts = count_replicates(reps, seed, &format!("tv/{n_pop}/{n}"), |rng, _| {
        stationary_sample_partition(n_pop, theta, n, source, rng)
    })?;
    let exact_map: BTreeMap<SetPartition, f64> =
        exact.iter().map(|(p, v)| (p.clone(), v)).collect();
    tv_with_bootstrap(
        &counts,
        &exact_map,
        &format!("esf(n={n}, theta={theta})"),
        seed,
    )
}

/// Law of K_N from each stationary source and the TV between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KLawComparison {
    pub n_pop: usize,
    pub theta: f64,
    pub reps: u64,
    pub burn_in: u64,
    pub forward: BTreeMap<usize, f64>,
    pub backward: BTreeMap<usize, f64>,
    pub tv: f64,
    /// Expected TV between two independent empirical laws of this size drawn
    /// from the pooled law, i.e. the value seen with no real difference.
    pub null_tv: f64,
}

pub fn compare_k_laws(
    n_pop: usize,
    theta: f64,
    reps: u64,
    burn_in: u64,
    seed: u64,
) -> Result<KLawComparison> {
    let law = |source, stream: &str| -> Result<BTreeMap<usize, f64>> {
        let counts = count_replicates(reps, seed, stream, |rng, _| {
            stationary_type_count(n_pop, theta, source, rng)
        })?;
        Ok(counts
            .into_iter()
            .map(|(k, c)| (k, c as f64 / reps as f64))
            .collect())
    };
    let forward = law(StationarySource::ForwardBurnIn { burn_in }, "klaw/forward")?;
    let backward = law(StationarySource::ExactBackward, "klaw/backward")?;
    let tv = variation_distance_maps(&forward, &backward);
    let mut pooled: BTreeMap<usize, f64> = BTreeMap::new();
    for (k, v) in forward.iter().chain(backward.iter()) {
        *pooled.entry(*k).or_default() += v / 2.0;
    }
    // E|X - Y| for independent normals with variance 2p(1-p)/reps each.
    let null_tv = 0.5
        * pooled
            .values()
            .map(|p| (4.0 * p * (1.0 - p) / (std::f64::consts::PI * reps as f64)).sqrt())
            .sum::<f64>();
    Ok(KLawComparison {
        n_pop,
        theta,
        reps,
        burn_in,
        forward,
        backward,
        tv,
        null_tv,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrpRow {
    pub n: u64,
    pub theta: f64,
    pub gap: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrpReport {
    pub rows: Vec<CrpRow>,
    /// Result of the exact rational sweep over 1..=max(n) for each theta that
    /// is exactly representable as a small fraction.
    pub exact_sweep: Vec<(f64, bool)>,
    pub pass: bool,
}

/// Exact two-sample match gap of the CRP empirical measure against the
/// bound with H_2, k = 2, phi_sup = 1.
pub fn verify_proposition_crp(n_list: &[u64], theta_list: &[f64]) -> Result<CrpReport> {
    ensure!(
        !n_list.is_empty() && !theta_list.is_empty(),
        Validation,
        "empty grid"
    );
    let tf = TestFunctionClass::H2 { k: 2, phi_sup: 1.0 };
    let mut rows = Vec::new();
    for &theta in theta_list {
        for &n in n_list {
            let gap = match_probability_dp(theta)?
                - crate::esf::match_probability_empirical(n as usize, theta)?;
            let gap = gap.abs();
            let bound = crp_proposition_bound(n, &tf, theta)?;
            rows.push(CrpRow {
                n,
                theta,
                gap,
                bound,
                pass: gap <= bound,
            });
        }
    }
    let n_max = *n_list.iter().max().unwrap();
    let exact_sweep: Vec<(f64, bool)> = theta_list
        .iter()
        .filter_map(|&theta| {
            let r = Exact::approximate_float(theta)?;
            (*r.numer() as f64 / *r.denom() as f64 == theta && *r.denom() <= 1 << 20)
                .then(|| (theta, crp_gap_violation(n_max, r).is_none()))
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass) && exact_sweep.iter().all(|e| e.1);
    Ok(CrpReport {
        rows,
        exact_sweep,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCell {
    pub n_pop: usize,
    pub x: usize,
    pub y: usize,
    pub mean: f64,
    pub se: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenealogyReport {
    pub reps: u64,
    /// Multiplier applied to tau before squaring (1 except in self-tests).
    pub inflate: f64,
    pub durint: Vec<MomentCell>,
    pub numedges: Vec<MomentCell>,
    pub pass: bool,
}

/// Interval endpoints: absolute, or relative to N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntervalSpec {
    Fixed {
        x: usize,
        y: usize,
    },
    /// (N / x_div, N)
    UpperFraction {
        x_div: usize,
    },
}

impl IntervalSpec {
    pub fn resolve(&self, n_pop: usize) -> (usize, usize) {
        match *self {
            IntervalSpec::Fixed { x, y } => (x, y),
            IntervalSpec::UpperFraction { x_div } => ((n_pop / x_div).max(2), n_pop),
        }
    }
}

pub fn default_intervals() -> Vec<IntervalSpec> {
    vec![
        IntervalSpec::Fixed { x: 2, y: 10 },
        IntervalSpec::Fixed { x: 5, y: 20 },
        IntervalSpec::UpperFraction { x_div: 4 },
    ]
}

/// Second moments of tau_{x,y} and E_{2,N} from traces started at N, each
/// compared with its bound at mean + 3 SE.
pub fn verify_genealogy_bounds(
    n_list: &[usize],
    intervals: &[IntervalSpec],
    reps: u64,
    seed: u64,
    inflate: f64,
) -> Result<GenealogyReport> {
    ensure!(
        reps >= 1000,
        Validation,
        "need at least 1000 replicates, got {reps}"
    );
    let mut durint = Vec::new();
    let mut numedges = Vec::new();
    for &n_pop in n_list {
        let cells: Vec<(usize, usize)> = intervals.iter().map(|s| s.resolve(n_pop)).collect();
        let per_rep = replicates(reps, seed, &format!("genealogy/{n_pop}"), |rng, _| {
            let trace = simulate_trace(n_pop, n_pop, 1, rng)?;
            let mut taus = Vec::with_capacity(cells.len());
            for &(x, y) in &cells {
                let s = interval_stats(&trace, x, y)?;
                taus.push((s.tau as f64 * inflate).powi(2));
            }
            let e = interval_stats(&trace, 2, n_pop)?.edges as f64;
            Ok((taus, e * e))
        })?;
        for (c, &(x, y)) in cells.iter().enumerate() {
            let xs: Vec<f64> = per_rep.iter().map(|r| r.0[c]).collect();
            let (mean, se) = mean_and_se(&xs);
            let bound = durint_bound(n_pop, x, y)?;
            durint.push(MomentCell {
                n_pop,
                x,
                y,
                mean,
                se,
                bound,
                pass: mean + 3.0 * se <= bound,
            });
        }
        if n_pop >= 3 {
            let xs: Vec<f64> = per_rep.iter().map(|r| r.1).collect();
            let (mean, se) = mean_and_se(&xs);
            let bound = numedges_bound(n_pop)?;
            numedges.push(MomentCell {
                n_pop,
                x: 2,
                y: n_pop,
                mean,
                se,
                bound,
                pass: mean + 3.0 * se <= bound,
            });
        }
    }
    let pass = durint.iter().chain(numedges.iter()).all(|c| c.pass);
    Ok(GenealogyReport {
        reps,
        inflate,
        durint,
        numedges,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnRow {
    pub n_pop: usize,
    pub mean_k: f64,
    pub se_k: f64,
    pub mean_k2: f64,
    pub se_k2: f64,
    pub mean_k32: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnReport {
    pub theta: f64,
    pub reps: u64,
    pub rows: Vec<KnRow>,
    /// Least-squares slope of E[K] against ln N (diagnostic).
    pub slope_vs_ln_n: f64,
    pub pass: bool,
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// E[K_N^2] of the exact stationary PIM population against its bound.
/// theta = 0 means no mutation, where K_N = 1.
pub fn verify_kn_moment(n_list: &[usize], theta: f64, reps: u64, seed: u64) -> Result<KnReport> {
    ensure!(
        reps >= 1000,
        Validation,
        "need at least 1000 replicates, got {reps}"
    );
    ensure!(
        theta >= 0.0 && theta.is_finite(),
        Validation,
        "theta must be non-negative"
    );
    let mut rows = Vec::new();
    for &n_pop in n_list {
        let ks = if theta == 0.0 {
            vec![1usize; reps as usize]
        } else {
            replicates(reps, seed, &format!("kn/{n_pop}"), |rng, _| {
                stationary_type_count(n_pop, theta, StationarySource::ExactBackward, rng)
            })?
        };
        let m = k_moments(ks)?;
        let bound = kn2_bound(n_pop, theta / (2.0 * n_pop as f64))?;
        rows.push(KnRow {
            n_pop,
            mean_k: m.mean_k,
            se_k: m.se_k,
            mean_k2: m.mean_k2,
            se_k2: m.se_k2,
            mean_k32: m.mean_k32,
            bound,
            pass: m.mean_k2 + 3.0 * m.se_k2 <= bound,
        });
    }
    let ln_n: Vec<f64> = rows.iter().map(|r| (r.n_pop as f64).ln()).collect();
    let ek: Vec<f64> = rows.iter().map(|r| r.mean_k).collect();
    let slope_vs_ln_n = ls_slope(&ln_n, &ek);
    let pass = rows.iter().all(|r| r.pass);
    Ok(KnReport {
        theta,
        reps,
        rows,
        slope_vs_ln_n,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryRow {
    pub n_pop: usize,
    pub tv: TVEstimate,
    pub bound: f64,
    pub vacuous: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryCheck {
    pub theta: f64,
    pub n: usize,
    pub rows: Vec<CorollaryRow>,
    /// Consecutive rows have disjoint intervals with the larger N lower.
    pub decreasing: bool,
    pub pass: bool,
}

/// Estimated d_TV(S_n(W_N), S_n(Z)) against the sampling-formula bound with
/// E[K^{3/2}] estimated from the same exact sampler.
pub fn verify_corollary(
    n_list: &[usize],
    theta: f64,
    n: usize,
    reps: u64,
    k_reps: u64,
    seed: u64,
) -> Result<CorollaryCheck> {
    let mut rows = Vec::new();
    for &n_pop in n_list {
        let tv =
            estimate_tv_wf_vs_esf(n_pop, theta, n, reps, seed, StationarySource::ExactBackward)?;
        let ks = replicates(k_reps, seed, &format!("k32/{n_pop}"), |rng, _| {
            stationary_type_count(n_pop, theta, StationarySource::ExactBackward, rng)
        })?;
        let m = k_moments(ks)?;
        let inp = WFBoundInputs::pim(
            n_pop,
            theta,
            m.mean_k32.max(1.0),
            K32Source::MonteCarlo {
                se: m.se_k32,
                reps: k_reps as usize,
            },
        )?;
        let c = corollary_tv_bound(n as u64, &inp, A3Variant::Theorem)?;
        let pass = tv.estimate <= c.bound.min(1.0);
        rows.push(CorollaryRow {
            n_pop,
            tv,
            bound: c.bound,
            vacuous: c.vacuous,
            pass,
        });
    }
    let decreasing = rows.windows(2).all(|w| w[1].tv.ci_high < w[0].tv.ci_low);
    let pass = rows.iter().all(|r| r.pass) && decreasing;
    Ok(CorollaryCheck {
        theta,
        n,
        rows,
        decreasing,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FvCheck {
    pub theta: f64,
    pub reps: u64,
    /// (t, mean match probability, SE, pass)
    pub stationarity: Vec<(f64, f64, f64, bool)>,
    pub mean_absorption: f64,
    pub se_absorption: f64,
    pub absorption_bound: f64,
    pub pass: bool,
}

/// Match probability of Z_mu(t) for mu ~ DP(theta), and the absorption time
/// of the death process against 2(theta+1)/theta.
pub fn verify_fv_stationarity(theta: f64, times: &[f64], reps: u64, seed: u64) -> Result<FvCheck> {
    let target = match_probability_dp(theta)?;
    let tol = Tolerances::default();
    let mut stationarity = Vec::new();
    for &t in times {
        let xs = replicates(reps, seed, &format!("fv/{t}"), |rng, _| {
            let mut labels = LabelAllocator::default();
            let (mu, _) = dp_uniform(theta, tol.gem_residual, &mut labels, rng)?;
            Ok(sample_transition(&mu, theta, t, tol.death_truncation, rng)?
                .measure
                .match_probability())
        })?;
        let (m, se) = mean_and_se(&xs);
        stationarity.push((t, m, se, (m - target).abs() <= 5.0 * se));
    }
    let top = entry_level(theta, 1.0, tol.death_truncation)?;
    let ts = replicates(reps, seed, "fv/absorption", |rng, _| {
        Ok(DeathProcessPath::sample(theta, top, rng)?.absorption_time())
    })?;
    let (mean_absorption, se_absorption) = mean_and_se(&ts);
    let absorption_bound = 2.0 * (theta + 1.0) / theta;
    debug_assert!(expected_absorption_time(top, theta) <= absorption_bound);
    let pass = stationarity.iter().all(|s| s.3)
        && mean_absorption <= absorption_bound + 3.0 * se_absorption;
    Ok(FvCheck {
        theta,
        reps,
        stationarity,
        mean_absorption,
        se_absorption,
        absorption_bound,
        pass,
    })
}

/// Moments of a binomial by summing over its pmf.
pub fn binomial_moments_enumerated(n: u64, p: f64) -> [f64; 3] {
    let np = n as f64 * p;
    let (mut c4, mut m3, mut m2) = (0.0, 0.0, 0.0);
    for k in 0..=n {
        let ln_c = crate::numeric::ln_factorial(n as usize)
            - crate::numeric::ln_factorial(k as usize)
            - crate::numeric::ln_factorial((n - k) as usize);
        let w = if p == 0.0 {
            (k == 0) as u8 as f64
        } else if p == 1.0 {
            (k == n) as u8 as f64
        } else {
            (ln_c + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
        };
        let x = k as f64;
        c4 += w * (x - np).powi(4);
        m3 += w * x.powi(3);
        m2 += w * x * x;
    }
    [c4, m3, m2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialCheck {
    pub cells: usize,
    pub max_closed_form_error: f64,
    pub pass: bool,
}

pub fn verify_binomial_moments(n_max: u64) -> Result<BinomialCheck> {
    let mut pass = true;
    let mut max_err = 0.0f64;
    let mut cells = 0;
    for n in 0..=n_max {
        for i in 0..=20 {
            let p = i as f64 / 20.0;
            let e = binomial_moments_enumerated(n, p);
            let b = binomial_moment_bounds(n, p)?;
            pass &= (0..3).all(|j| e[j] <= b[j] * (1.0 + 1e-12) + 1e-12);
            max_err = max_err.max((e[0] - binomial_central_fourth(n, p)).abs());
            cells += 1;
        }
    }
    Ok(BinomialCheck {
        cells,
        max_closed_form_error: max_err,
        pass: pass && max_err <= 1e-12,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleCheck {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub detail: Value,
}

/// Largest |sum of ESF probabilities - 1| over n <= n_max and the theta grid.
pub fn check_esf_sums(n_max: usize, thetas: &[f64]) -> Result<SimpleCheck> {
    ensure!(
        n_max <= ENUMERATION_CAP,
        Resource,
        "enumeration capped at n = {ENUMERATION_CAP}"
    );
    let mut worst = 0.0f64;
    for n in 1..=n_max {
        let parts = enumerate_partitions(n)?;
        for &theta in thetas {
            let s = compensated_sum(
                parts
                    .iter()
                    .map(|p| crate::esf::esf_set_partition_prob(p, theta))
                    .collect::<Result<Vec<_>>>()?,
            );
            worst = worst.max((s - 1.0).abs());
        }
    }
    Ok(SimpleCheck {
        name: "esf_sums".into(),
        value: worst,
        threshold: 1e-10,
        pass: worst <= 1e-10,
        detail: json!({ "n_max": n_max, "thetas": thetas }),
    })
}

/// TV between the empirical CRP law and the sampling formula.
pub fn check_crp_vs_esf(n: usize, theta: f64, reps: u64, seed: u64) -> Result<SimpleCheck> {
    let parts = replicates(reps, seed, "crp", |rng, _| crp_sample(n, theta, rng))?;
    let emp = PartitionDistribution::empirical(n, &parts)?;
    let tv = variation_distance(&emp, &esf_distribution(n, theta)?)?;
    Ok(SimpleCheck {
        name: "crp_vs_esf".into(),
        value: tv,
        threshold: 0.01,
        pass: tv <= 0.01,
        detail: json!({ "n": n, "theta": theta, "reps": reps }),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaintboxRow {
    pub theta: f64,
    pub pair_mean: f64,
    pub pair_se: f64,
    pub pair_exact: f64,
    pub triple_mean: f64,
    pub triple_se: f64,
    pub triple_exact: f64,
    pub pass: bool,
}

/// Stick-breaking estimates of the chance that two (three) draws are distinct.
pub fn check_paintbox(thetas: &[f64], reps: u64, seed: u64) -> Result<Vec<PaintboxRow>> {
    let tol = Tolerances::default().gem_residual;
    thetas
        .iter()
        .map(|&theta| {
            let stats = replicates(reps, seed, &format!("paintbox/{theta}"), |rng, _| {
                let (m, _) = gem_sticks(theta, tol, rng)?;
                let s1 = compensated_sum(m.iter().copied());
                let s2 = compensated_sum(m.iter().map(|v| v * v));
                let s3 = compensated_sum(m.iter().map(|v| v * v * v));
                let pair = s1 * s1 - s2;
                let triple = s1.powi(3) - 3.0 * s1 * s2 + 2.0 * s3;
                Ok((pair, triple))
            })?;
            let pairs: Vec<f64> = stats.iter().map(|s| s.0).collect();
            let triples: Vec<f64> = stats.iter().map(|s| s.1).collect();
            let (pm, ps) = mean_and_se(&pairs);
            let (tm, ts) = mean_and_se(&triples);
            let pe = paintbox_pair_moment(theta)?;
            let te = paintbox_triple_moment(theta)?;
            let pass = (pm - pe).abs() <= 5.0 * ps + 2e-10 && (tm - te).abs() <= 5.0 * ts + 2e-10;
            Ok(PaintboxRow {
                theta,
                pair_mean: pm,
                pair_se: ps,
                pair_exact: pe,
                triple_mean: tm,
                triple_se: ts,
                triple_exact: te,
                pass,
            })
        })
        .collect()
}

/// TV between simulated occupancy counts and the Stirling transition row.
pub fn check_ancestral_law(n_pop: usize, j: usize, reps: u64, seed: u64) -> Result<SimpleCheck> {
    let row = ancestral_transition_row(n_pop, j)?;
    let counts = count_replicates(reps, seed, &format!("occupancy/{n_pop}/{j}"), |rng, _| {
        Ok(occupied_bins(n_pop, j, rng))
    })?;
    let emp: BTreeMap<usize, f64> = counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / reps as f64))
        .collect();
    let exact: BTreeMap<usize, f64> = row.iter().enumerate().map(|(i, p)| (i + 1, *p)).collect();
    let tv = variation_distance_maps(&emp, &exact);
    Ok(SimpleCheck {
        name: format!("ancestral_law/N={n_pop}/j={j}"),
        value: tv,
        threshold: 0.01,
        pass: tv <= 0.01,
        detail: json!({ "reps": reps }),
    })
}

/// Sizes for `verify_all`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub crp_reps: u64,
    pub paintbox_reps: u64,
    pub occupancy_reps: u64,
    pub genealogy_reps: u64,
    pub kn_reps: u64,
    pub klaw_reps: u64,
    pub tv_reps: u64,
    pub fv_reps: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            crp_reps: 200_000,
            paintbox_reps: 20_000,
            occupancy_reps: 200_000,
            genealogy_reps: 2_000,
            kn_reps: 2_000,
            klaw_reps: 2_000,
            tv_reps: 200_000,
            fv_reps: 5_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyAllReport {
    pub manifest: ExperimentManifest,
    pub esf: SimpleCheck,
    pub crp: SimpleCheck,
    pub paintbox: Vec<PaintboxRow>,
    pub ancestral_law: Vec<SimpleCheck>,
    pub genealogy: GenealogyReport,
    pub kn_moment: KnReport,
    pub crp_proposition: CrpReport,
    pub k_law: KLawComparison,
    pub corollary: Vec<TVEstimate>,
    pub corollary_bounds: Vec<f64>,
    pub binomial: BinomialCheck,
    pub fv: FvCheck,
    pub pass: bool,
}

/// Every check at desk scale. Sizes are smaller than the acceptance suite;
/// the point is a quick reproducible report.
pub fn verify_all(seed: u64, cfg: VerifyConfig) -> Result<VerifyAllReport> {
    let manifest = ExperimentManifest::new(
        "verify-all",
        seed,
        serde_json::to_value(cfg).map_err(json_err)?,
    );
    let esf = check_esf_sums(8, &[0.1, 0.5, 1.0, 2.0, 5.0, 10.0])?;
    let crp = check_crp_vs_esf(5, 1.0, cfg.crp_reps, seed)?;
    let paintbox = check_paintbox(&[0.5, 1.0, 2.0], cfg.paintbox_reps, seed)?;
    let ancestral_law = vec![
        check_ancestral_law(10, 5, cfg.occupancy_reps, seed)?,
        check_ancestral_law(50, 20, cfg.occupancy_reps, seed)?,
    ];
    let genealogy = verify_genealogy_bounds(
        &[50, 100],
        &default_intervals(),
        cfg.genealogy_reps,
        seed,
        1.0,
    )?;
    let kn_moment = verify_kn_moment(&[100, 200, 400], 1.0, cfg.kn_reps, seed)?;
    let n_list: Vec<u64> = (1..=10_000).collect();
    let crp_proposition = verify_proposition_crp(&n_list, &[0.5, 1.0, 2.0, 5.0])?;
    let k_law = compare_k_laws(100, 1.0, cfg.klaw_reps, default_burn_in(100), seed)?;
    let mut corollary = Vec::new();
    let mut corollary_bounds = Vec::new();
    for n_pop in [200usize, 800] {
        corollary.push(estimate_tv_wf_vs_esf(
            n_pop,
            1.0,
            3,
            cfg.tv_reps,
            seed,
            StationarySource::ExactBackward,
        )?);
        let inp = WFBoundInputs::pim_theorem_k32(n_pop, 1.0)?;
        corollary_bounds.push(corollary_tv_bound(3, &inp, A3Variant::Theorem)?.bound);
    }
    let binomial = verify_binomial_moments(12)?;
    let fv = verify_fv_stationarity(1.0, &[0.1, 1.0, 10.0], cfg.fv_reps, seed)?;
    let pass = esf.pass
        && crp.pass
        && paintbox.iter().all(|r| r.pass)
        && ancestral_law.iter().all(|c| c.pass)
        && genealogy.pass
        && kn_moment.pass
        && crp_proposition.pass
        && corollary
            .iter()
            .zip(&corollary_bounds)
            .all(|(t, b)| t.estimate <= b.min(1.0))
        && binomial.pass
        && fv.pass;
    Ok(VerifyAllReport {
        manifest,
        esf,
        crp,
        paintbox,
        ancestral_law,
        genealogy,
        kn_moment,
        crp_proposition,
        k_law,
        corollary,
        corollary_bounds,
        binomial,
        fv,
        pass,
    })
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Numerical(format!("serialization failed: {e}"))
}

/// Writes rows as CSV with a header taken from the struct field names.
pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Resource(format!("csv: {e}")))?;
    }
    w.flush()
        .map_err(|e| Error::Resource(format!("csv: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_hash_is_stable() {
        let a = ExperimentManifest::new("x", 7, json!({"b": 1, "a": [1, 2]}));
        let b = ExperimentManifest::new("x", 7, json!({"a": [1, 2], "b": 1}));
        assert_eq!(a.hash, b.hash);
        assert_eq!(a.hash.len(), 64);
        assert_ne!(
            a.hash,
            ExperimentManifest::new("x", 8, json!({"a": [1, 2], "b": 1})).hash
        );
    }

    #[test]
    fn replicates_are_ordered_and_reproducible() {
        let a = replicates(100, 3, "s", |rng, i| Ok((i, rng.random::<u64>()))).unwrap();
        let b = replicates(100, 3, "s", |rng, i| Ok((i, rng.random::<u64>()))).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(k, v)| v.0 == k as u64));
        let c = replicates(100, 3, "t", |rng, i| Ok((i, rng.random::<u64>()))).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn multinomial_preserves_total() {
        let mut rng = seeded(1);
        for _ in 0..100 {
            let v = multinomial(1000, &[0.2, 0.0, 0.5, 0.3], &mut rng);
            assert_eq!(v.iter().sum::<u64>(), 1000);
            assert_eq!(v[1], 0);
        }
    }

    #[test]
    fn bootstrap_interval_contains_estimate() {
        let exact: BTreeMap<u8, f64> = [(0, 0.5), (1, 0.5)].into_iter().collect();
        let counts: BTreeMap<u8, u64> = [(0, 600), (1, 400)].into_iter().collect();
        let t = tv_with_bootstrap(&counts, &exact, "fair coin", 5).unwrap();
        assert!((t.estimate - 0.1).abs() < 1e-12);
        assert!(t.ci_low <= t.estimate && t.estimate <= t.ci_high);
        assert!(t.ci_high - t.ci_low < 0.1);
    }

    #[test]
    fn tv_estimate_small_case() {
        let t = estimate_tv_wf_vs_esf(200, 1.0, 3, 20_000, 11, StationarySource::ExactBackward)
            .unwrap();
        assert!(t.estimate <= 0.03, "{t:?}");
        assert!((0.0..=1.0).contains(&t.estimate));
        assert!(
            estimate_tv_wf_vs_esf(200, 1.0, 9, 20_000, 11, StationarySource::ExactBackward)
                .is_err()
        );
        assert!(
            estimate_tv_wf_vs_esf(10, 21.0, 3, 1000, 11, StationarySource::ExactBackward).is_err()
        );
    }

    #[test]
    fn crp_proposition_grid() {
        let r = verify_proposition_crp(&[1, 10, 100], &[0.5, 1.0, 2.0]).unwrap();
        assert!(r.pass);
        let row = r.rows.iter().find(|r| r.n == 10 && r.theta == 1.0).unwrap();
        assert!((row.gap - 0.05).abs() < 1e-15);
        assert!((row.bound - (1.2 + 4.0 / 3.0)).abs() < 1e-12);
        let one = r.rows.iter().find(|r| r.n == 1 && r.theta == 2.0).unwrap();
        assert!((one.gap - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.exact_sweep.len(), 3);
    }

    #[test]
    fn genealogy_harness_detects_injected_failure() {
        let ok =
            verify_genealogy_bounds(&[100], &[IntervalSpec::Fixed { x: 5, y: 20 }], 1000, 2, 1.0)
                .unwrap();
        assert!(ok.pass);
        let bad =
            verify_genealogy_bounds(&[100], &[IntervalSpec::Fixed { x: 5, y: 20 }], 1000, 2, 1e3)
                .unwrap();
        assert!(!bad.pass);
        let wide =
            verify_genealogy_bounds(&[50], &[IntervalSpec::Fixed { x: 2, y: 50 }], 1000, 2, 1.0)
                .unwrap();
        assert!(wide.pass);
    }

    #[test]
    fn kn_moment_without_mutation() {
        let r = verify_kn_moment(&[50], 0.0, 1000, 1).unwrap();
        assert_eq!(r.rows[0].mean_k2, 1.0);
        assert!(r.pass);
    }

    #[test]
    fn binomial_enumeration_matches_closed_form() {
        let e = binomial_moments_enumerated(10, 0.3);
        assert!((e[0] - 12.684).abs() < 1e-12);
        assert!(verify_binomial_moments(6).unwrap().pass);
    }

    #[test]
    fn csv_output_has_header() {
        let mut buf = Vec::new();
        let rows = vec![CrpRow {
            n: 1,
            theta: 1.0,
            gap: 0.5,
            bound: 9.0,
            pass: true,
        }];
        write_csv(&mut buf, &rows).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("n,theta,gap,bound,pass\n"));
    }
}
