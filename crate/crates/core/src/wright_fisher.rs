//! Forward simulation of the N-individual infinite-alleles Wright-Fisher
//! chain and an exact backward sampler for its stationary type partition
//! under parent-independent mutation.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::esf::check_theta;
use crate::measures::{Atom, AtomicMeasure, LabelAllocator, SetPartition, TypeLabel};
use crate::numeric::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MutationKind {
    /// Parent-independent: constant probability, fresh type every time.
    Pim {
        rate: f64,
    },
    Custom,
}

/// Where a mutant's type comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelMode {
    /// A brand-new label with a uniform location (diffuse kernel).
    FreshType,
    /// With probability `fresh_prob` a new label, otherwise a draw from a
    /// finite weighted table of fixed labels.
    Mixture {
        fresh_prob: f64,
        table: Vec<TableEntry>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub label: TypeLabel,
    pub location: f64,
    pub weight: f64,
}

pub type MutationProb = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Mutation probability p(x) as a function of the parent's location, a mutant
/// kernel, and the suprema the bounds need (supplied by the caller for custom
/// models since they cannot be computed from code).
#[derive(Clone)]
pub struct MutationModel {
    pub kind: MutationKind,
    prob: MutationProb,
    pub kernel: KernelMode,
    /// sup_x p(x)
    pub p_sup: f64,
    /// sup_x |p(x) - theta / 2N|
    pub p_dev_sup: f64,
    /// sup_x || kappa_x - pi ||
    pub kernel_dev_sup: f64,
}

impl fmt::Debug for MutationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MutationModel")
            .field("kind", &self.kind)
            .field("kernel", &self.kernel)
            .field("p_sup", &self.p_sup)
            .field("p_dev_sup", &self.p_dev_sup)
            .field("kernel_dev_sup", &self.kernel_dev_sup)
            .finish()
    }
}

impl MutationModel {
    /// PIM with rate theta / 2N and the diffuse fresh-type kernel.
    pub fn pim(n_pop: usize, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        ensure!(n_pop >= 1, Validation, "population size must be positive");
        let rate = theta / (2.0 * n_pop as f64);
        ensure!(
            rate < 1.0,
            Validation,
            "mutation rate theta / 2N = {rate} must be below 1 (theta <= 2N)"
        );
        Self::pim_rate(rate)
    }

    /// PIM at an arbitrary constant rate. `p_dev_sup` is zero only when the
    /// bounds are evaluated at theta = 2N * rate.
    pub fn pim_rate(rate: f64) -> Result<Self> {
        ensure!(
            (0.0..=1.0).contains(&rate),
            Validation,
            "rate {rate} outside [0, 1]"
        );
        Ok(Self {
            kind: MutationKind::Pim { rate },
            prob: Arc::new(move |_| rate),
            kernel: KernelMode::FreshType,
            p_sup: rate,
            p_dev_sup: 0.0,
            kernel_dev_sup: 0.0,
        })
    }

    pub fn custom(
        prob: MutationProb,
        kernel: KernelMode,
        p_sup: f64,
        p_dev_sup: f64,
        kernel_dev_sup: f64,
    ) -> Result<Self> {
        ensure!(
            (0.0..=1.0).contains(&p_sup),
            Validation,
            "p_sup {p_sup} outside [0, 1]"
        );
        ensure!(
            p_dev_sup >= 0.0,
            Validation,
            "p_dev_sup must be non-negative"
        );
        ensure!(
            kernel_dev_sup >= 0.0,
            Validation,
            "kernel_dev_sup must be non-negative"
        );
        if let KernelMode::Mixture { fresh_prob, table } = &kernel {
            ensure!(
                (0.0..=1.0).contains(fresh_prob),
                Validation,
                "fresh probability {fresh_prob} outside [0, 1]"
            );
            ensure!(
                *fresh_prob == 1.0 || table.iter().any(|e| e.weight > 0.0),
                Validation,
                "mixture kernel needs a table with positive weight"
            );
            ensure!(
                table
                    .iter()
                    .all(|e| e.weight >= 0.0 && (0.0..=1.0).contains(&e.location)),
                Validation,
                "table weights must be non-negative and locations in [0, 1]"
            );
        }
        Ok(Self {
            kind: MutationKind::Custom,
            prob,
            kernel,
            p_sup,
            p_dev_sup,
            kernel_dev_sup,
        })
    }

    pub fn prob(&self, location: f64) -> f64 {
        (self.prob)(location)
    }

    pub fn pim_rate_value(&self) -> Option<f64> {
        match self.kind {
            MutationKind::Pim { rate } => Some(rate),
            MutationKind::Custom => None,
        }
    }

    /// Labels below this value are reserved by the kernel table.
    fn reserved_labels(&self) -> u64 {
        match &self.kernel {
            KernelMode::FreshType => 0,
            KernelMode::Mixture { table, .. } => {
                table.iter().map(|e| e.label.0 + 1).max().unwrap_or(0)
            }
        }
    }

    fn mutant_type<R: Rng + ?Sized>(
        &self,
        labels: &mut LabelAllocator,
        rng: &mut R,
    ) -> (TypeLabel, f64, bool) {
        match &self.kernel {
            KernelMode::FreshType => (labels.fresh(), rng.random(), true),
            KernelMode::Mixture { fresh_prob, table } => {
                if rng.random::<f64>() < *fresh_prob {
                    return (labels.fresh(), rng.random(), true);
                }
                let total = compensated_sum(table.iter().map(|e| e.weight));
                let mut u = rng.random::<f64>() * total;
                let mut pick = table.iter().rfind(|e| e.weight > 0.0).expect("validated");
                for e in table {
                    if u < e.weight {
                        pick = e;
                        break;
                    }
                    u -= e.weight;
                }
                (pick.label, pick.location, false)
            }
        }
    }
}

/// N individuals grouped by type label.
#[derive(Debug, Clone, PartialEq)]
pub struct WFPopulation {
    n_pop: usize,
    counts: BTreeMap<TypeLabel, u32>,
    locations: BTreeMap<TypeLabel, f64>,
    pub generation: u64,
    labels: LabelAllocator,
}

impl WFPopulation {
    /// Every individual of its own fresh type with a uniform location.
    pub fn all_distinct<R: Rng + ?Sized>(
        n_pop: usize,
        model: &MutationModel,
        rng: &mut R,
    ) -> Result<Self> {
        ensure!(n_pop >= 1, Validation, "population size must be positive");
        let mut labels = LabelAllocator::starting_at(model.reserved_labels());
        let mut counts = BTreeMap::new();
        let mut locations = BTreeMap::new();
        for _ in 0..n_pop {
            let l = labels.fresh();
            counts.insert(l, 1);
            locations.insert(l, rng.random());
        }
        Ok(Self {
            n_pop,
            counts,
            locations,
            generation: 0,
            labels,
        })
    }

    /// A population with given `(label, location, count)` types. Fresh labels
    /// are allocated above every label present and every label reserved by
    /// `model`.
    pub fn from_types(types: &[(TypeLabel, f64, u32)], model: &MutationModel) -> Result<Self> {
        ensure!(
            !types.is_empty(),
            Validation,
            "population needs at least one type"
        );
        let mut counts = BTreeMap::new();
        let mut locations = BTreeMap::new();
        for &(label, location, count) in types {
            ensure!(count > 0, Validation, "type {label} has zero count");
            ensure!(
                counts.insert(label, count).is_none(),
                Validation,
                "duplicate label {label}"
            );
            locations.insert(label, location);
        }
        let n_pop = counts.values().map(|&c| c as usize).sum();
        let next = types
            .iter()
            .map(|t| t.0 .0 + 1)
            .max()
            .unwrap_or(0)
            .max(model.reserved_labels());
        Ok(Self {
            n_pop,
            counts,
            locations,
            generation: 0,
            labels: LabelAllocator::starting_at(next),
        })
    }

    pub fn n_pop(&self) -> usize {
        self.n_pop
    }

    pub fn num_types(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &BTreeMap<TypeLabel, u32> {
        &self.counts
    }

    pub fn location(&self, label: TypeLabel) -> Option<f64> {
        self.locations.get(&label).copied()
    }

    /// W_N = (1/N) sum_i N_i delta_{x_i}.
    pub fn empirical_measure(&self) -> Result<AtomicMeasure> {
        let n = self.n_pop as f64;
        AtomicMeasure::new(
            self.counts
                .iter()
                .map(|(&label, &c)| Atom {
                    label,
                    location: self.locations[&label],
                    mass: c as f64 / n,
                })
                .collect(),
        )
    }
}

/// What happened in one generation: offspring per parental type (M_i),
/// mutants per parental type (B_i) and labels founded by fresh mutations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepDetail {
    pub offspring: BTreeMap<TypeLabel, u32>,
    pub mutations: BTreeMap<TypeLabel, u32>,
    pub new_types: Vec<TypeLabel>,
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}

/// One generation forward: multinomial offspring by sequential binomials,
/// binomial mutants per type, and mutant types from the kernel.
pub fn wf_step<R: Rng + ?Sized>(
    pop: &WFPopulation,
    model: &MutationModel,
    rng: &mut R,
) -> (WFPopulation, StepDetail) {
    let mut detail = StepDetail::default();
    let mut labels = pop.labels.clone();
    let mut counts: BTreeMap<TypeLabel, u32> = BTreeMap::new();
    let mut locations: BTreeMap<TypeLabel, f64> = BTreeMap::new();

    let mut left_children = pop.n_pop as u64;
    let mut left_parents = pop.n_pop as u64;
    let mut mutants: Vec<(TypeLabel, f64, bool)> = Vec::new();
    for (&label, &c) in &pop.counts {
        let m = if left_parents == c as u64 {
            left_children
        } else {
            binomial(left_children, c as f64 / left_parents as f64, rng)
        };
        left_children -= m;
        left_parents -= c as u64;
        if m == 0 {
            continue;
        }
        let loc = pop.locations[&label];
        let b = binomial(m, model.prob(loc), rng);
        detail.offspring.insert(label, m as u32);
        detail.mutations.insert(label, b as u32);
        if m > b {
            *counts.entry(label).or_insert(0) += (m - b) as u32;
            locations.insert(label, loc);
        }
        for _ in 0..b {
            mutants.push(model.mutant_type(&mut labels, rng));
        }
    }
    for (label, loc, fresh) in mutants {
        if fresh {
            detail.new_types.push(label);
        }
        *counts.entry(label).or_insert(0) += 1;
        locations.entry(label).or_insert(loc);
    }
    debug_assert_eq!(
        counts.values().map(|&c| c as usize).sum::<usize>(),
        pop.n_pop
    );
    let next = WFPopulation {
        n_pop: pop.n_pop,
        counts,
        locations,
        generation: pop.generation + 1,
        labels,
    };
    (next, detail)
}

pub fn default_burn_in(n_pop: usize) -> u64 {
    20 * n_pop as u64
}

/// Summary of the number-of-types trace recorded during burn-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurnInDiagnostics {
    pub generations: u64,
    pub k_final: usize,
    /// Mean K over the window at 45%-55% of the run.
    pub mean_middle: f64,
    /// Mean K over the final 10% of the run.
    pub mean_last: f64,
    /// Batch-means standard error of `mean_last - mean_middle`.
    pub se_difference: f64,
    pub warning: Option<String>,
}

/// Mean and batch-means standard error of an autocorrelated window.
fn batch_mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let mean = compensated_sum(xs.iter().copied()) / n as f64;
    let batches = 10.min(n);
    if batches < 2 {
        return (mean, 0.0);
    }
    let size = n / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| {
            let w = &xs[b * size..(b + 1) * size];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect();
    let (_, se) = crate::numeric::mean_and_se(&means);
    (mean, se)
}

fn diagnose(trace: &[f64]) -> BurnInDiagnostics {
    let n = trace.len();
    let window = (n / 10).max(1);
    let mid_start = (n * 45 / 100).min(n - window);
    let (mean_middle, se_mid) = batch_mean_se(&trace[mid_start..mid_start + window]);
    let (mean_last, se_last) = batch_mean_se(&trace[n - window..]);
    let se_difference = (se_mid * se_mid + se_last * se_last).sqrt();
    let warning = ((mean_last - mean_middle).abs() > 3.0 * se_difference && se_difference > 0.0)
        .then(|| {
            format!(
                "burn-in may be too short: mean K over the last 10% ({mean_last:.3}) differs from the middle 10% ({mean_middle:.3}) by more than 3 SE ({se_difference:.3})"
            )
        });
    BurnInDiagnostics {
        generations: n as u64 - 1,
        k_final: *trace.last().unwrap() as usize,
        mean_middle,
        mean_last,
        se_difference,
        warning,
    }
}

/// Runs the chain for `burn_in` generations from the all-distinct state.
pub fn wf_stationary_sample<R: Rng + ?Sized>(
    n_pop: usize,
    model: &MutationModel,
    burn_in: u64,
    rng: &mut R,
) -> Result<(WFPopulation, BurnInDiagnostics)> {
    ensure!(
        burn_in >= 1,
        Validation,
        "burn-in must be at least one generation"
    );
    let mut pop = WFPopulation::all_distinct(n_pop, model, rng)?;
    let mut trace = Vec::with_capacity(burn_in as usize + 1);
    trace.push(pop.num_types() as f64);
    for _ in 0..burn_in {
        pop = wf_step(&pop, model, rng).0;
        trace.push(pop.num_types() as f64);
    }
    Ok((pop, diagnose(&trace)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SamplingScheme {
    /// Simple random sample of distinct individuals.
    #[default]
    WithoutReplacement,
    WithReplacement,
}

/// Partition of {1..n} induced by the types of n sampled individuals.
pub fn sample_partition<R: Rng + ?Sized>(
    pop: &WFPopulation,
    n: usize,
    scheme: SamplingScheme,
    rng: &mut R,
) -> Result<SetPartition> {
    ensure!(n >= 1, Validation, "sample size must be positive");
    let indices: Vec<usize> = match scheme {
        SamplingScheme::WithoutReplacement => {
            ensure!(
                n <= pop.n_pop,
                Validation,
                "sample of {n} from a population of {}",
                pop.n_pop
            );
            let mut v = rand::seq::index::sample(rng, pop.n_pop, n).into_vec();
            v.shuffle(rng);
            v
        }
        SamplingScheme::WithReplacement => (0..n).map(|_| rng.random_range(0..pop.n_pop)).collect(),
    };
    let mut cumulative = Vec::with_capacity(pop.counts.len());
    let mut acc = 0usize;
    for &c in pop.counts.values() {
        acc += c as usize;
        cumulative.push(acc);
    }
    let types: Vec<usize> = indices
        .iter()
        .map(|&i| cumulative.partition_point(|&c| c <= i))
        .collect();
    SetPartition::from_assignment(&types)
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = p;
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        self.parent[rb] = ra as u32;
        ra
    }
}

/// Binomial(j, p) conditioned to be at least one; `any` = P(X >= 1).
fn binomial_at_least_one<R: Rng + ?Sized>(j: usize, p: f64, any: f64, rng: &mut R) -> usize {
    if any > 0.25 {
        loop {
            let m = binomial(j as u64, p, rng) as usize;
            if m >= 1 {
                return m;
            }
        }
    }
    let u = rng.random::<f64>() * any;
    let ratio = p / (1.0 - p);
    let mut pmf = j as f64 * p * (1.0 - p).powi(j as i32 - 1);
    let mut cum = 0.0;
    for k in 1..=j {
        cum += pmf;
        if u < cum {
            return k;
        }
        pmf *= (j - k) as f64 / (k + 1) as f64 * ratio;
    }
    j
}

/// Lineages choose parents among `n_pop`; lineages sharing a parent merge.
/// With `force_collision` the choice is conditioned on at least one shared
/// parent. Returns the surviving lineages (union-find roots).
fn choose_parents<R: Rng + ?Sized>(
    lineages: &[usize],
    n_pop: usize,
    force_collision: bool,
    collision_prob: f64,
    uf: &mut UnionFind,
    rng: &mut R,
) -> Vec<usize> {
    let inv = 1.0 / n_pop as f64;
    let j = lineages.len();
    // Position (0-based) of the first lineage to land on an occupied parent.
    let forced_at = if force_collision {
        let u = rng.random::<f64>() * collision_prob;
        let mut distinct_so_far = 1.0;
        let mut cum = 0.0;
        let mut pos = j - 1;
        for r in 1..j {
            cum += distinct_so_far * r as f64 * inv;
            if u < cum {
                pos = r;
                break;
            }
            distinct_so_far *= 1.0 - r as f64 * inv;
        }
        Some(pos)
    } else {
        None
    };
    let mut slots: Vec<usize> = Vec::with_capacity(j);
    for (r, &lin) in lineages.iter().enumerate() {
        let join = match forced_at {
            Some(pos) if r < pos => false,
            Some(pos) if r == pos => true,
            _ => rng.random::<f64>() < slots.len() as f64 * inv,
        };
        if join {
            let s = rng.random_range(0..slots.len());
            slots[s] = uf.union(slots[s], lin);
        } else {
            slots.push(lin);
        }
    }
    slots
}

fn collision_probability(n_pop: usize, j: usize) -> f64 {
    if j > n_pop {
        return 1.0;
    }
    let inv = 1.0 / n_pop as f64;
    let ln_distinct: f64 = (1..j).map(|i| (-(i as f64) * inv).ln_1p()).sum();
    -ln_distinct.exp_m1()
}

/// Outcome of tracing lineages back to their founding mutations.
#[derive(Debug, Clone, PartialEq)]
pub struct LineageOutcome {
    pub partition: SetPartition,
    /// Founding events: mutations plus the final unmutated lineage, if any.
    pub types: usize,
    /// Number of mutation events encountered while more than two lineages
    /// were alive.
    pub mutations_above_two: usize,
}

/// Exact draw of the stationary type partition of `n` distinct individuals
/// of a PIM Wright-Fisher population of size `n_pop`.
///
/// Each lineage mutates with probability `rate` per generation (a mutation
/// founds the type of everything descending through it), then surviving
/// lineages pick parents uniformly. Generations in which nothing happens are
/// skipped, so the cost is proportional to the number of events.
pub fn pim_lineage_partition<R: Rng + ?Sized>(
    n_pop: usize,
    n: usize,
    rate: f64,
    rng: &mut R,
) -> Result<LineageOutcome> {
    ensure!(
        rate > 0.0 && rate < 1.0,
        Validation,
        "mutation rate {rate} outside (0, 1)"
    );
    ensure!(
        (1..=n_pop).contains(&n),
        Validation,
        "need 1 <= n <= N, got n = {n}, N = {n_pop}"
    );
    let mut uf = UnionFind::new(n);
    let mut type_of = vec![u32::MAX; n];
    let mut next_type = 0u32;
    let mut lineages: Vec<usize> = (0..n).collect();
    let mut mutations_above_two = 0usize;
    let ln_keep = (-rate).ln_1p();

    while lineages.len() > 1 {
        let j = lineages.len();
        let any_mutation = -(j as f64 * ln_keep).exp_m1();
        let collision = collision_probability(n_pop, j);
        let event = any_mutation + (1.0 - any_mutation) * collision;
        if rng.random::<f64>() * event < any_mutation {
            let m = binomial_at_least_one(j, rate, any_mutation, rng);
            if j > 2 {
                mutations_above_two += m;
            }
            for k in 0..m {
                let idx = rng.random_range(k..j);
                lineages.swap(k, idx);
                let root = uf.find(lineages[k]);
                type_of[root] = next_type;
                next_type += 1;
            }
            let survivors = lineages.split_off(m);
            lineages = if survivors.len() > 1 {
                let c = collision_probability(n_pop, survivors.len());
                choose_parents(&survivors, n_pop, false, c, &mut uf, rng)
            } else {
                survivors
            };
        } else {
            lineages = choose_parents(&lineages, n_pop, true, collision, &mut uf, rng);
        }
    }
    if let Some(&last) = lineages.first() {
        let root = uf.find(last);
        type_of[root] = next_type;
        next_type += 1;
    }
    let assignment: Vec<u32> = (0..n).map(|i| type_of[uf.find(i)]).collect();
    Ok(LineageOutcome {
        partition: SetPartition::from_assignment(&assignment)?,
        types: next_type as usize,
        mutations_above_two,
    })
}

/// Exact draw of the stationary type partition of the whole population.
pub fn exact_stationary_partition_pim<R: Rng + ?Sized>(
    n_pop: usize,
    mutation_rate: f64,
    rng: &mut R,
) -> Result<SetPartition> {
    Ok(pim_lineage_partition(n_pop, n_pop, mutation_rate, rng)?.partition)
}

/// Plug-in moments of the number of types with jackknife standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMoments {
    pub samples: usize,
    pub mean_k: f64,
    pub mean_k32: f64,
    pub mean_k2: f64,
    pub se_k: f64,
    pub se_k32: f64,
    pub se_k2: f64,
    /// E[K^{3/2}] <= E[K^2]^{3/4} holds for the plug-in estimates.
    pub jensen_consistent: bool,
}

/// Leave-one-out jackknife of a sample mean.
fn jackknife_mean(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let total = compensated_sum(xs.iter().copied());
    let mean = total / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let loo: Vec<f64> = xs.iter().map(|x| (total - x) / (n - 1) as f64).collect();
    let loo_mean = compensated_sum(loo.iter().copied()) / n as f64;
    let ss = compensated_sum(loo.iter().map(|v| (v - loo_mean) * (v - loo_mean)));
    (mean, ((n - 1) as f64 / n as f64 * ss).sqrt())
}

pub fn k_moments<I: IntoIterator<Item = usize>>(ks: I) -> Result<KMoments> {
    let ks: Vec<f64> = ks.into_iter().map(|k| k as f64).collect();
    ensure!(!ks.is_empty(), Validation, "no samples");
    let (mean_k, se_k) = jackknife_mean(&ks);
    let (mean_k32, se_k32) = jackknife_mean(&ks.iter().map(|k| k.powf(1.5)).collect::<Vec<_>>());
    let (mean_k2, se_k2) = jackknife_mean(&ks.iter().map(|k| k * k).collect::<Vec<_>>());
    Ok(KMoments {
        samples: ks.len(),
        mean_k,
        mean_k32,
        mean_k2,
        se_k,
        se_k32,
        se_k2,
        jensen_consistent: mean_k32 <= mean_k2.powf(0.75) * (1.0 + 1e-12),
    })
}

pub fn k_moments_of(pops: &[WFPopulation]) -> Result<KMoments> {
    k_moments(pops.iter().map(WFPopulation::num_types))
}
