use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use pdwf_core::esf::{crp_sample, dp_uniform, esf_distribution, gem_sticks};
use pdwf_core::fv_dual::sample_transition;
use pdwf_core::genealogy::{ancestral_transition_row, occupied_bins, simulate_trace};
use pdwf_core::measures::LabelAllocator;
use pdwf_core::rng::seeded;
use pdwf_core::stein_bounds::{crp_gap_violation, Exact};
use pdwf_core::wright_fisher::{pim_lineage_partition, wf_step, MutationModel, WFPopulation};

fn esf(c: &mut Criterion) {
    c.bench_function("esf_distribution n=8", |b| {
        b.iter(|| esf_distribution(black_box(8), 1.0).unwrap())
    });
    let mut rng = seeded(1);
    c.bench_function("crp_sample n=100", |b| {
        b.iter(|| crp_sample(100, 1.0, &mut rng).unwrap())
    });
    c.bench_function("gem_sticks theta=1", |b| {
        b.iter(|| gem_sticks(1.0, 1e-10, &mut rng).unwrap())
    });
}

fn genealogy(c: &mut Criterion) {
    let mut rng = seeded(2);
    c.bench_function("occupied_bins 200/100", |b| {
        b.iter(|| occupied_bins(200, 100, &mut rng))
    });
    c.bench_function("ancestral_transition_row N=200 j=100", |b| {
        b.iter(|| ancestral_transition_row(200, black_box(100)).unwrap())
    });
    c.bench_function("simulate_trace N=200", |b| {
        b.iter(|| simulate_trace(200, 200, 1, &mut rng).unwrap())
    });
}

fn wright_fisher(c: &mut Criterion) {
    let mut g = c.benchmark_group("wf");
    for n_pop in [100usize, 400] {
        let model = MutationModel::pim(n_pop, 1.0).unwrap();
        let mut rng = seeded(3);
        let pop = WFPopulation::all_distinct(n_pop, &model, &mut rng).unwrap();
        g.bench_with_input(BenchmarkId::new("wf_step", n_pop), &n_pop, |b, _| {
            b.iter(|| wf_step(&pop, &model, &mut rng))
        });
        let rate = 1.0 / (2.0 * n_pop as f64);
        g.bench_with_input(
            BenchmarkId::new("exact_lineages n=3", n_pop),
            &n_pop,
            |b, &n| b.iter(|| pim_lineage_partition(n, 3, rate, &mut rng).unwrap()),
        );
        g.bench_with_input(
            BenchmarkId::new("exact_lineages n=N", n_pop),
            &n_pop,
            |b, &n| b.iter(|| pim_lineage_partition(n, n, rate, &mut rng).unwrap()),
        );
    }
    g.finish();
}

fn fv(c: &mut Criterion) {
    let mut rng = seeded(4);
    let mut labels = LabelAllocator::default();
    let (mu, _) = dp_uniform(1.0, 1e-10, &mut labels, &mut rng).unwrap();
    for t in [0.1, 1.0] {
        c.bench_function(&format!("sample_transition t={t}"), |b| {
            b.iter(|| sample_transition(&mu, 1.0, t, 1e-3, &mut rng).unwrap())
        });
    }
}

fn exact_bound(c: &mut Criterion) {
    let theta = Exact::new(1, 2);
    c.bench_function("crp_gap_violation n<=1000", |b| {
        b.iter(|| crp_gap_violation(1000, theta))
    });
}

criterion_group!(benches, esf, genealogy, wright_fisher, fv, exact_bound);
criterion_main!(benches);
