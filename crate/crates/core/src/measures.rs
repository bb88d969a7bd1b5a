//! Value types: atomic probability measures, set partitions, block profiles
//! and ordered mass vectors.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{Tolerances, ENUMERATION_CAP};
use crate::error::{ensure, Error, Result};
use crate::numeric::{compensated_sum, KahanSum};

/// Opaque type identity. Fresh mutations always receive a label never used
/// before in the same process, which makes the base measure exactly diffuse
/// as far as partition statistics are concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TypeLabel(pub u64);

impl fmt::Display for TypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Hands out labels that have not been used by anything it has seen.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelAllocator {
    next: u64,
}

impl LabelAllocator {
    pub fn starting_at(next: u64) -> Self {
        Self { next }
    }

    /// An allocator whose labels avoid every atom of `mu`.
    pub fn after(mu: &AtomicMeasure) -> Self {
        let next = mu.atoms.iter().map(|a| a.label.0 + 1).max().unwrap_or(0);
        Self { next }
    }

    pub fn fresh(&mut self) -> TypeLabel {
        let l = TypeLabel(self.next);
        self.next += 1;
        l
    }

    pub fn peek(&self) -> u64 {
        self.next
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub label: TypeLabel,
    /// Realization of a draw from the uniform base measure on [0, 1].
    pub location: f64,
    pub mass: f64,
}

/// A finitely supported probability measure on [0, 1] whose atoms carry
/// distinct type labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        Self::with_tolerance(atoms, Tolerances::default().mass_sum)
    }

    pub fn with_tolerance(atoms: Vec<Atom>, tol: f64) -> Result<Self> {
        ensure!(
            !atoms.is_empty(),
            Validation,
            "atomic measure needs at least one atom"
        );
        let mut seen = HashSet::with_capacity(atoms.len());
        for a in &atoms {
            ensure!(
                a.mass > 0.0 && a.mass <= 1.0 + tol,
                Validation,
                "atom {} has mass {} outside (0, 1]",
                a.label,
                a.mass
            );
            ensure!(
                (0.0..=1.0).contains(&a.location),
                Validation,
                "atom {} location {} outside [0, 1]",
                a.label,
                a.location
            );
            ensure!(
                seen.insert(a.label),
                Validation,
                "duplicate label {}",
                a.label
            );
        }
        let total = compensated_sum(atoms.iter().map(|a| a.mass));
        ensure!(
            (total - 1.0).abs() <= tol,
            Validation,
            "masses sum to {total}, not 1"
        );
        Ok(Self { atoms })
    }

    /// Builds a measure from possibly repeated labels, summing their masses.
    /// The first location seen for a label is kept.
    pub fn from_merged<I>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (TypeLabel, f64, f64)>,
    {
        let mut merged: BTreeMap<TypeLabel, (f64, KahanSum)> = BTreeMap::new();
        for (label, location, mass) in items {
            merged
                .entry(label)
                .or_insert_with(|| (location, KahanSum::new()))
                .1
                .add(mass);
        }
        Self::new(
            merged
                .into_iter()
                .map(|(label, (location, m))| Atom {
                    label,
                    location,
                    mass: m.value(),
                })
                .collect(),
        )
    }

    pub fn point_mass(label: TypeLabel, location: f64) -> Self {
        Self {
            atoms: vec![Atom {
                label,
                location,
                mass: 1.0,
            }],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Probability that two independent draws share a label: sum of squared masses.
    pub fn match_probability(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.mass * a.mass))
    }

    /// <phi, mu> for a test function of the atom location.
    pub fn integrate<F: Fn(f64) -> f64>(&self, phi: F) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.mass * phi(a.location)))
    }
}

impl TryFrom<Vec<Atom>> for AtomicMeasure {
    type Error = Error;

    fn try_from(atoms: Vec<Atom>) -> Result<Self> {
        Self::new(atoms)
    }
}

impl From<AtomicMeasure> for Vec<Atom> {
    fn from(m: AtomicMeasure) -> Self {
        m.atoms
    }
}

/// A set partition of {1, ..., n} in restricted-growth form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SetPartition {
    rgs: Vec<u32>,
}

const RGS_ALPHABET: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";

impl SetPartition {
    pub fn from_rgs(rgs: Vec<u32>) -> Result<Self> {
        ensure!(!rgs.is_empty(), Validation, "partition of the empty set");
        ensure!(
            rgs[0] == 0,
            Validation,
            "restricted-growth string must start at 0"
        );
        let mut max = 0;
        for &b in &rgs[1..] {
            ensure!(
                b <= max + 1,
                Validation,
                "not a restricted-growth string: {rgs:?}"
            );
            max = max.max(b);
        }
        Ok(Self { rgs })
    }

    /// Canonical form of an arbitrary block-id assignment, relabelling block ids
    /// in order of first appearance.
    pub fn from_assignment<T: Eq + std::hash::Hash + Copy>(ids: &[T]) -> Result<Self> {
        ensure!(!ids.is_empty(), Validation, "partition of the empty set");
        let mut map = std::collections::HashMap::with_capacity(ids.len());
        let rgs = ids
            .iter()
            .map(|id| {
                let next = map.len() as u32;
                *map.entry(*id).or_insert(next)
            })
            .collect();
        Ok(Self { rgs })
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            rgs: (0..n as u32).collect(),
        }
    }

    pub fn one_block(n: usize) -> Self {
        Self { rgs: vec![0; n] }
    }

    pub fn n(&self) -> usize {
        self.rgs.len()
    }

    pub fn rgs(&self) -> &[u32] {
        &self.rgs
    }

    pub fn num_blocks(&self) -> usize {
        self.rgs.iter().max().map_or(0, |m| *m as usize + 1)
    }

    /// Blocks as sets of 1-based elements, ordered by smallest element.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.num_blocks()];
        for (i, &b) in self.rgs.iter().enumerate() {
            blocks[b as usize].push(i + 1);
        }
        blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_blocks()];
        for &b in &self.rgs {
            sizes[b as usize] += 1;
        }
        sizes
    }

    /// The partition of {1..n-1} obtained by deleting element n.
    pub fn restrict_last(&self) -> Option<Self> {
        if self.rgs.len() < 2 {
            return None;
        }
        let trimmed = &self.rgs[..self.rgs.len() - 1];
        // Deleting the last element can only empty the block it was alone in,
        // which is necessarily the highest-numbered block.
        Some(Self {
            rgs: trimmed.to_vec(),
        })
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num_blocks() <= RGS_ALPHABET.len() {
            for &b in &self.rgs {
                write!(f, "{}", RGS_ALPHABET[b as usize] as char)?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.rgs.iter().map(|b| b.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

impl FromStr for SetPartition {
    type Err = Error;

    /// Single characters from `0-9a-zA-Z`, or dot-separated decimal block ids
    /// when a partition has more than 62 blocks.
    fn from_str(s: &str) -> Result<Self> {
        let rgs = if s.contains('.') {
            s.split('.')
                .map(|t| {
                    t.parse::<u32>()
                        .map_err(|_| Error::Validation(format!("bad block id {t:?} in {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            s.bytes()
                .map(|c| {
                    RGS_ALPHABET
                        .iter()
                        .position(|&a| a == c)
                        .map(|p| p as u32)
                        .ok_or_else(|| Error::Validation(format!("bad RGS character in {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        };
        Self::from_rgs(rgs)
    }
}

impl Serialize for SetPartition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SetPartition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Canonicalizes a list of blocks over {1..n} into restricted-growth form.
pub fn canonicalize_partition(blocks: &[Vec<usize>]) -> Result<SetPartition> {
    let n: usize = blocks.iter().map(Vec::len).sum();
    ensure!(n > 0, Validation, "no elements");
    let mut owner = vec![usize::MAX; n];
    for (bi, block) in blocks.iter().enumerate() {
        ensure!(!block.is_empty(), Validation, "block {bi} is empty");
        for &e in block {
            ensure!(
                (1..=n).contains(&e),
                Validation,
                "element {e} outside 1..={n}: blocks do not cover {{1..{n}}}"
            );
            ensure!(
                owner[e - 1] == usize::MAX,
                Validation,
                "element {e} appears twice"
            );
            owner[e - 1] = bi;
        }
    }
    SetPartition::from_assignment(&owner)
}

/// All set partitions of {1..n} in lexicographic RGS order.
pub fn enumerate_partitions(n: usize) -> Result<Vec<SetPartition>> {
    enumerate_partitions_capped(n, ENUMERATION_CAP)
}

pub fn enumerate_partitions_capped(n: usize, cap: usize) -> Result<Vec<SetPartition>> {
    ensure!(n >= 1, Validation, "n must be positive");
    ensure!(
        n <= cap,
        Resource,
        "n = {n} exceeds the enumeration cap {cap}"
    );
    let mut out = Vec::new();
    let mut rgs = vec![0u32; n];
    // prefix_max[i] = max(rgs[0..=i])
    let mut prefix_max = vec![0u32; n];
    loop {
        out.push(SetPartition { rgs: rgs.clone() });
        // Find the rightmost position that can be incremented.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            if rgs[i] <= prefix_max[i - 1] {
                break;
            }
            i -= 1;
        }
        rgs[i] += 1;
        prefix_max[i] = prefix_max[i - 1].max(rgs[i]);
        for j in i + 1..n {
            rgs[j] = 0;
            prefix_max[j] = prefix_max[i];
        }
    }
}

/// Counts of blocks by size: `counts[j]` is the number of blocks of size j.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockProfile {
    pub n: usize,
    pub counts: BTreeMap<usize, usize>,
}

impl BlockProfile {
    pub fn new(n: usize, counts: BTreeMap<usize, usize>) -> Result<Self> {
        let total: usize = counts.iter().map(|(j, a)| j * a).sum();
        ensure!(
            total == n,
            Validation,
            "block sizes sum to {total}, not {n}"
        );
        ensure!(!counts.contains_key(&0), Validation, "blocks of size 0");
        Ok(Self { n, counts })
    }

    pub fn num_blocks(&self) -> usize {
        self.counts.values().sum()
    }
}

pub fn block_profile(p: &SetPartition) -> BlockProfile {
    let mut counts = BTreeMap::new();
    for s in p.block_sizes() {
        *counts.entry(s).or_insert(0) += 1;
    }
    BlockProfile { n: p.n(), counts }
}

/// A discrete probability distribution over the set partitions of {1..n}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionDistribution {
    n: usize,
    probs: BTreeMap<SetPartition, f64>,
}

impl PartitionDistribution {
    pub fn new(n: usize, probs: BTreeMap<SetPartition, f64>) -> Result<Self> {
        for (p, &pr) in &probs {
            ensure!(
                p.n() == n,
                Validation,
                "partition {p} is not over {n} elements"
            );
            ensure!(
                pr >= 0.0 && pr.is_finite(),
                Validation,
                "probability {pr} of {p} is not a probability"
            );
        }
        Ok(Self { n, probs })
    }

    pub fn point_mass(p: SetPartition) -> Self {
        let n = p.n();
        Self {
            n,
            probs: BTreeMap::from([(p, 1.0)]),
        }
    }

    /// Empirical law of a sample of partitions.
    pub fn empirical<'a, I>(n: usize, samples: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a SetPartition>,
    {
        let mut counts: BTreeMap<SetPartition, u64> = BTreeMap::new();
        let mut total = 0u64;
        for p in samples {
            ensure!(
                p.n() == n,
                Validation,
                "sample partition {p} is not over {n} elements"
            );
            *counts.entry(p.clone()).or_insert(0) += 1;
            total += 1;
        }
        ensure!(total > 0, Validation, "empty sample");
        Self::from_counts(n, &counts)
    }

    pub fn from_counts(n: usize, counts: &BTreeMap<SetPartition, u64>) -> Result<Self> {
        let total: u64 = counts.values().sum();
        ensure!(total > 0, Validation, "empty sample");
        let probs = counts
            .iter()
            .map(|(p, &c)| (p.clone(), c as f64 / total as f64))
            .collect();
        Self::new(n, probs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, p: &SetPartition) -> f64 {
        self.probs.get(p).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SetPartition, f64)> {
        self.probs.iter().map(|(p, &v)| (p, v))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.probs.values().copied())
    }

    /// Law of the partition of {1..n-1} after deleting element n.
    pub fn marginalize_last(&self) -> Result<Self> {
        ensure!(
            self.n >= 2,
            Validation,
            "cannot restrict a partition of one element"
        );
        let mut acc: BTreeMap<SetPartition, KahanSum> = BTreeMap::new();
        for (p, &pr) in &self.probs {
            let r = p.restrict_last().expect("n >= 2");
            acc.entry(r).or_default().add(pr);
        }
        Self::new(
            self.n - 1,
            acc.into_iter().map(|(p, s)| (p, s.value())).collect(),
        )
    }
}

/// Total variation distance (1/2) sum |p - q| between two partition laws.
pub fn variation_distance(p: &PartitionDistribution, q: &PartitionDistribution) -> Result<f64> {
    ensure!(
        p.n == q.n,
        Validation,
        "distributions over partitions of {} and {} elements",
        p.n,
        q.n
    );
    let tol = Tolerances::default().distribution_sum;
    for (name, d) in [("first", p), ("second", q)] {
        let t = d.total();
        ensure!(
            (t - 1.0).abs() <= tol,
            Validation,
            "{name} distribution sums to {t}"
        );
    }
    Ok(half_l1(
        p.probs.iter().map(|(k, &a)| (a, q.get(k))).chain(
            q.probs
                .iter()
                .filter(|(k, _)| !p.probs.contains_key(*k))
                .map(|(_, &b)| (0.0, b)),
        ),
    ))
}

/// (1/2) sum |a - b| over paired probabilities, clamped to [0, 1].
pub fn half_l1<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> f64 {
    let s = compensated_sum(pairs.into_iter().map(|(a, b)| (a - b).abs()));
    (0.5 * s).clamp(0.0, 1.0)
}

/// Total variation between two laws on a countable set, given as maps.
pub fn variation_distance_maps<K: Ord>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    half_l1(
        p.iter()
            .map(|(k, &a)| (a, q.get(k).copied().unwrap_or(0.0)))
            .chain(
                q.iter()
                    .filter(|(k, _)| !p.contains_key(*k))
                    .map(|(_, &b)| (0.0, b)),
            ),
    )
}

/// Ordered masses of a point in the infinite simplex, truncated with an
/// explicit unassigned residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassVector {
    masses: Vec<f64>,
    residual: f64,
}

impl MassVector {
    pub fn new(masses: Vec<f64>, residual: f64) -> Result<Self> {
        ensure!(residual >= 0.0, Validation, "negative residual {residual}");
        ensure!(
            masses.iter().all(|m| *m > 0.0 && *m <= 1.0),
            Validation,
            "masses must lie in (0, 1]"
        );
        ensure!(
            masses.windows(2).all(|w| w[0] >= w[1]),
            Validation,
            "masses must be non-increasing"
        );
        let total = compensated_sum(masses.iter().copied()) + residual;
        ensure!(
            (total - 1.0).abs() <= Tolerances::default().mass_sum,
            Validation,
            "masses plus residual sum to {total}"
        );
        Ok(Self { masses, residual })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// sum_{j != k} P_j P_k over the assigned masses.
    pub fn pair_moment(&self) -> f64 {
        let s1 = compensated_sum(self.masses.iter().copied());
        let s2 = compensated_sum(self.masses.iter().map(|m| m * m));
        s1 * s1 - s2
    }

    /// sum over distinct (j, k, l) of P_j P_k P_l over the assigned masses.
    pub fn triple_moment(&self) -> f64 {
        let s1 = compensated_sum(self.masses.iter().copied());
        let s2 = compensated_sum(self.masses.iter().map(|m| m * m));
        let s3 = compensated_sum(self.masses.iter().map(|m| m * m * m));
        s1 * s1 * s1 - 3.0 * s1 * s2 + 2.0 * s3
    }

    pub fn sum_of_squares(&self) -> f64 {
        compensated_sum(self.masses.iter().map(|m| m * m))
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn part(s: &str) -> SetPartition {
        s.parse().unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(
            canonicalize_partition(&[vec![1], vec![2], vec![3]])
                .unwrap()
                .to_string(),
            "012"
        );
        assert_eq!(
            canonicalize_partition(&[vec![1, 3], vec![2]])
                .unwrap()
                .to_string(),
            "010"
        );
        assert_eq!(
            canonicalize_partition(&[vec![2, 3], vec![1]])
                .unwrap()
                .to_string(),
            "011"
        );
    }

    #[test]
    fn canonicalize_rejects_overlap_and_gaps() {
        assert!(matches!(
            canonicalize_partition(&[vec![1, 2], vec![2]]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            canonicalize_partition(&[vec![1], vec![3]]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            canonicalize_partition(&[vec![1], vec![]]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn rgs_validation() {
        assert!(SetPartition::from_rgs(vec![1, 0]).is_err());
        assert!(SetPartition::from_rgs(vec![0, 2]).is_err());
        assert!(SetPartition::from_rgs(vec![0, 1, 0, 2]).is_ok());
        assert!("0a".parse::<SetPartition>().is_err());
    }

    fn bell_by_recurrence(n: usize) -> u64 {
        // Bell(m+1) = sum_k C(m, k) Bell(k)
        let mut bell = vec![1u64];
        for m in 0..n {
            let mut c = 1u64;
            let mut next = 0u64;
            for k in 0..=m {
                next += c * bell[k];
                c = c * (m - k) as u64 / (k + 1) as u64;
            }
            bell.push(next);
        }
        bell[n]
    }

    #[test]
    fn enumeration_counts_match_bell_numbers() {
        assert_eq!(enumerate_partitions(1).unwrap().len(), 1);
        assert_eq!(enumerate_partitions(3).unwrap().len(), 5);
        assert_eq!(enumerate_partitions(5).unwrap().len(), 52);
        for n in 1..=10 {
            let all = enumerate_partitions(n).unwrap();
            assert_eq!(all.len() as u64, bell_by_recurrence(n), "n = {n}");
            let distinct: HashSet<_> = all.iter().collect();
            assert_eq!(distinct.len(), all.len());
            assert!(
                all.windows(2).all(|w| w[0] < w[1]),
                "order is deterministic"
            );
        }
    }

    #[test]
    fn enumeration_cap() {
        assert!(matches!(enumerate_partitions(13), Err(Error::Resource(_))));
        assert!(matches!(enumerate_partitions(0), Err(Error::Validation(_))));
    }

    #[test]
    fn block_profiles() {
        let p = |s| {
            block_profile(&part(s))
                .counts
                .into_iter()
                .collect::<Vec<_>>()
        };
        assert_eq!(p("012"), vec![(1, 3)]);
        assert_eq!(p("010"), vec![(1, 1), (2, 1)]);
        assert_eq!(p("000"), vec![(3, 1)]);
    }

    #[test]
    fn variation_distance_examples() {
        let a = PartitionDistribution::point_mass(part("00"));
        let b = PartitionDistribution::point_mass(part("01"));
        assert_eq!(variation_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(variation_distance(&a, &b).unwrap(), 1.0);
        let u =
            PartitionDistribution::new(2, BTreeMap::from([(part("00"), 0.5), (part("01"), 0.5)]))
                .unwrap();
        assert!((variation_distance(&u, &a).unwrap() - 0.5).abs() < 1e-15);
        let c = PartitionDistribution::point_mass(part("000"));
        assert!(matches!(
            variation_distance(&a, &c),
            Err(Error::Validation(_))
        ));
        let bad = PartitionDistribution::new(2, BTreeMap::from([(part("00"), 0.4)])).unwrap();
        assert!(variation_distance(&bad, &a).is_err());
    }

    #[test]
    fn atomic_measure_invariants() {
        let a = |l, m| Atom {
            label: TypeLabel(l),
            location: 0.5,
            mass: m,
        };
        assert!(AtomicMeasure::new(vec![a(0, 0.5), a(1, 0.5)]).is_ok());
        assert!(AtomicMeasure::new(vec![a(0, 0.5), a(0, 0.5)]).is_err());
        assert!(AtomicMeasure::new(vec![a(0, 0.5), a(1, 0.4)]).is_err());
        assert!(AtomicMeasure::new(vec![a(0, 1.0), a(1, 0.0)]).is_err());
        let m = AtomicMeasure::from_merged([
            (TypeLabel(3), 0.1, 0.25),
            (TypeLabel(1), 0.2, 0.5),
            (TypeLabel(3), 0.9, 0.25),
        ])
        .unwrap();
        assert_eq!(m.len(), 2);
        assert!((m.match_probability() - 0.5).abs() < 1e-15);
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.starts_with("[{\"label\":1"));
        let back: AtomicMeasure = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<AtomicMeasure>(
            r#"[{"label":1,"location":0.1,"mass":0.3}]"#
        )
        .is_err());
    }

    #[test]
    fn mass_vector_moments() {
        let v = MassVector::new(vec![0.5, 0.3, 0.2], 0.0).unwrap();
        assert!((v.pair_moment() - (1.0 - 0.38)).abs() < 1e-15);
        let brute: f64 = {
            let m = v.masses();
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        if i != j && j != k && i != k {
                            s += m[i] * m[j] * m[k];
                        }
                    }
                }
            }
            s
        };
        assert!((v.triple_moment() - brute).abs() < 1e-15);
        assert!(MassVector::new(vec![0.2, 0.8], 0.0).is_err());
    }

    #[test]
    fn wide_partitions_round_trip_through_strings() {
        let p = SetPartition::singletons(70);
        let s = p.to_string();
        assert!(s.contains('.'));
        assert_eq!(s.parse::<SetPartition>().unwrap(), p);
    }

    fn arb_distribution(n: usize) -> impl Strategy<Value = PartitionDistribution> {
        let all = enumerate_partitions(n).unwrap();
        let k = all.len();
        proptest::collection::vec(0.0f64..1.0, k).prop_map(move |w| {
            let total: f64 = w.iter().sum::<f64>() + 1e-12;
            let probs = all
                .iter()
                .cloned()
                .zip(w.iter().map(|x| (x + 1e-12 / k as f64) / total))
                .collect();
            PartitionDistribution::new(n, probs).unwrap()
        })
    }

    proptest! {
        #[test]
        fn rgs_round_trip(assign in proptest::collection::vec(0u8..5, 1..12)) {
            let p = SetPartition::from_assignment(&assign).unwrap();
            let again = canonicalize_partition(&p.blocks()).unwrap();
            prop_assert_eq!(&again, &p);
            let parsed: SetPartition = p.to_string().parse().unwrap();
            prop_assert_eq!(parsed, p);
        }

        #[test]
        fn tv_is_a_metric(p in arb_distribution(4), q in arb_distribution(4), r in arb_distribution(4)) {
            let pq = variation_distance(&p, &q).unwrap();
            let qp = variation_distance(&q, &p).unwrap();
            let pr = variation_distance(&p, &r).unwrap();
            let qr = variation_distance(&q, &r).unwrap();
            prop_assert!((pq - qp).abs() < 1e-15);
            prop_assert!(pr <= pq + qr + 1e-12);
            prop_assert!((0.0..=1.0).contains(&pq));
            prop_assert!(variation_distance(&p, &p).unwrap() < 1e-15);
        }
    }
}
