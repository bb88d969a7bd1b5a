use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use pdwf_core::esf::{crp_run, esf_distribution};
use pdwf_core::experiments::{
    self, compare_k_laws, count_replicates, estimate_tv_wf_vs_esf, replicates, verify_all,
    write_csv, StationarySource, VerifyConfig, SCHEMA_VERSION,
};
use pdwf_core::fv_dual::{entry_level, sample_transition};
use pdwf_core::genealogy::{durint_bound, interval_stats, numedges_bound, simulate_trace};
use pdwf_core::measures::LabelAllocator;
use pdwf_core::stein_bounds::{
    corollary_tv_bound, k32_from_theorem, kn2_bound, thm_wf_bound, A3Variant, K32Source,
};
use pdwf_core::wright_fisher::{
    default_burn_in, k_moments, sample_partition, wf_stationary_sample, SamplingScheme,
};
use pdwf_core::{Error, MutationModel, Result, TestFunctionClass, Tolerances, WFBoundInputs};

mod schema;

#[derive(Parser, Debug)]
#[command(
    name = "pdwf",
    version,
    about = "Wright-Fisher, Ewens sampling formula and Dirichlet-process tools"
)]
struct Cli {
    /// Root seed; every random stream is derived from it.
    #[arg(long, global = true, env = "PDWF_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "PDWF_THREADS")]
    threads: Option<usize>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write per-replicate rows as CSV (commands that produce them).
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Stick-breaking residual at which Dirichlet draws stop.
    #[arg(long, global = true)]
    gem_residual: Option<f64>,
    /// Death-process truncation tolerance.
    #[arg(long, global = true)]
    death_truncation: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact sampling-formula law of set partitions of {1..n}.
    Esf {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        theta: f64,
    },
    /// Chinese restaurant process partitions.
    CrpSample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 1)]
        reps: u64,
    },
    /// Wright-Fisher simulation.
    #[command(subcommand)]
    Wf(WfCommand),
    /// Ancestral-count chain statistics against their bounds.
    Genealogy {
        #[arg(long = "N")]
        n_pop: usize,
        #[arg(long)]
        x: usize,
        #[arg(long)]
        y: usize,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
    },
    /// Fleming-Viot transition function.
    #[command(subcommand)]
    Fv(FvCommand),
    /// Explicit approximation bounds.
    Bounds(BoundsArgs),
    /// Verification experiments.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Print the machine-readable command schema.
    Schema,
}

#[derive(Subcommand, Debug)]
enum WfCommand {
    /// Stationary PIM populations: number of types and optional n-samples.
    Simulate {
        #[arg(long = "N")]
        n_pop: usize,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 100)]
        reps: u64,
        /// Forward burn-in length (default 20N); ignored by the exact method.
        #[arg(long)]
        burn_in: Option<u64>,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        /// Also draw an n-sample partition from each population.
        #[arg(long)]
        sample: Option<usize>,
    },
    /// TV between the K_N laws of the forward and exact samplers.
    CompareK {
        #[arg(long = "N")]
        n_pop: usize,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long)]
        burn_in: Option<u64>,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Method {
    Exact,
    Forward,
}

#[derive(Subcommand, Debug)]
enum FvCommand {
    /// Z_mu(t) for mu a DP(theta) draw: match-statistic summary.
    Transition {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Preset {
    Pim,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum K32Mode {
    /// Monte Carlo estimate from the exact stationary sampler.
    Mc,
    /// Jensen chain from the K_N second-moment bound.
    Theorem,
    /// Supplied with --k32.
    Value,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum A3Choice {
    Theorem,
    Lemma,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long, value_enum, default_value_t = Preset::Pim)]
    preset: Preset,
    #[arg(long = "N")]
    n_pop: usize,
    #[arg(long)]
    theta: f64,
    /// Sample size for the sampling-formula bound.
    #[arg(long, default_value_t = 2)]
    n: u64,
    /// k for the H_2 test function <phi, mu^k> with sup |phi| = 1.
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long, value_enum, default_value_t = K32Mode::Theorem)]
    k32_mode: K32Mode,
    #[arg(long)]
    k32: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    k32_reps: u64,
    #[arg(long, value_enum, default_value_t = A3Choice::Theorem)]
    a3: A3Choice,
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// Every check at desk scale.
    All {
        #[arg(long)]
        quick: bool,
    },
    /// d_TV(S_n(W_N), S_n(Z)) estimate.
    Tv {
        #[arg(long = "N")]
        n_pop: usize,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
    },
}

struct Ctx {
    seed: u64,
    tol: Tolerances,
    csv: Option<PathBuf>,
}

impl Ctx {
    fn csv<T: Serialize>(&self, rows: &[T]) -> Result<()> {
        if let Some(path) = &self.csv {
            let f = File::create(path).map_err(|e| io_err(path, e))?;
            write_csv(f, rows)?;
        }
        Ok(())
    }
}

fn io_err(path: &std::path::Path, e: io::Error) -> Error {
    Error::Resource(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    }
    let mut tol = Tolerances::default();
    if let Some(v) = cli.gem_residual {
        tol.gem_residual = v;
    }
    if let Some(v) = cli.death_truncation {
        tol.death_truncation = v;
    }
    tol.validate()?;
    let ctx = Ctx {
        seed: cli.seed,
        tol,
        csv: cli.csv,
    };
    let value = dispatch(cli.command, &ctx)?;
    let mut text = serde_json::to_string_pretty(&value)
        .map_err(|e| Error::Numerical(format!("serialization failed: {e}")))?;
    text.push('\n');
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_err(path, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Resource(format!("stdout: {e}"))),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Numerical(format!("serialization failed: {e}")))
}

fn dispatch(cmd: Command, ctx: &Ctx) -> Result<Value> {
    match cmd {
        Command::Esf { n, theta } => {
            let d = esf_distribution(n, theta)?;
            let map: BTreeMap<String, f64> = d.iter().map(|(p, v)| (p.to_string(), v)).collect();
            to_json(&map)
        }
        Command::CrpSample { n, theta, reps } => crp(n, theta, reps, ctx),
        Command::Wf(WfCommand::Simulate {
            n_pop,
            theta,
            reps,
            burn_in,
            method,
            sample,
        }) => wf_simulate(n_pop, theta, reps, burn_in, method, sample, ctx),
        Command::Wf(WfCommand::CompareK {
            n_pop,
            theta,
            reps,
            burn_in,
        }) => {
            let burn_in = burn_in.unwrap_or(default_burn_in(n_pop));
            to_json(&compare_k_laws(n_pop, theta, reps, burn_in, ctx.seed)?)
        }
        Command::Genealogy { n_pop, x, y, reps } => genealogy(n_pop, x, y, reps, ctx),
        Command::Fv(FvCommand::Transition { theta, t, reps }) => fv_transition(theta, t, reps, ctx),
        Command::Bounds(args) => bounds(args, ctx),
        Command::Verify(VerifyCommand::All { quick }) => {
            let cfg = if quick {
                quick_config()
            } else {
                VerifyConfig::default()
            };
            let report = verify_all(ctx.seed, cfg)?;
            if !report.pass {
                eprintln!("warning: at least one verification check failed");
            }
            ctx.csv(&report.genealogy.durint)?;
            to_json(&report)
        }
        Command::Verify(VerifyCommand::Tv {
            n_pop,
            theta,
            n,
            reps,
            method,
        }) => {
            let source = match method {
                Method::Exact => StationarySource::ExactBackward,
                Method::Forward => StationarySource::ForwardBurnIn {
                    burn_in: default_burn_in(n_pop),
                },
            };
            to_json(&estimate_tv_wf_vs_esf(
                n_pop, theta, n, reps, ctx.seed, source,
            )?)
        }
        Command::Schema => Ok(schema::command_schema(&Cli::command())),
    }
}

fn quick_config() -> VerifyConfig {
    VerifyConfig {
        crp_reps: 20_000,
        paintbox_reps: 2_000,
        occupancy_reps: 20_000,
        genealogy_reps: 1_000,
        kn_reps: 1_000,
        klaw_reps: 200,
        tv_reps: 20_000,
        fv_reps: 1_000,
    }
}

fn crp(n: usize, theta: f64, reps: u64, ctx: &Ctx) -> Result<Value> {
    let runs = replicates(reps, ctx.seed, "cli/crp", |rng, _| {
        let st = crp_run(n, theta, rng)?;
        Ok((st.partition()?, st.table_sizes.len()))
    })?;
    #[derive(Serialize)]
    struct Row {
        replicate: u64,
        partition: String,
        tables: usize,
    }
    let rows: Vec<Row> = runs
        .iter()
        .enumerate()
        .map(|(i, (p, k))| Row {
            replicate: i as u64,
            partition: p.to_string(),
            tables: *k,
        })
        .collect();
    ctx.csv(&rows)?;
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for r in &rows {
        *counts.entry(r.partition.clone()).or_default() += 1;
    }
    let mean_tables = rows.iter().map(|r| r.tables as f64).sum::<f64>() / reps.max(1) as f64;
    let mut out = json!({
        "schema_version": SCHEMA_VERSION,
        "n": n,
        "theta": theta,
        "reps": reps,
        "mean_tables": mean_tables,
        "counts": counts,
    });
    if reps <= 1000 {
        out["partitions"] = json!(rows.iter().map(|r| r.partition.clone()).collect::<Vec<_>>());
    }
    Ok(out)
}

fn wf_simulate(
    n_pop: usize,
    theta: f64,
    reps: u64,
    burn_in: Option<u64>,
    method: Method,
    sample: Option<usize>,
    ctx: &Ctx,
) -> Result<Value> {
    let model = MutationModel::pim(n_pop, theta)?;
    let burn_in = burn_in.unwrap_or(default_burn_in(n_pop));
    #[derive(Serialize)]
    struct Row {
        replicate: u64,
        types: usize,
        partition: Option<String>,
        burn_in_warning: bool,
    }
    let rows = replicates(reps, ctx.seed, "cli/wf", |rng, i| match method {
        Method::Forward => {
            let (pop, diag) = wf_stationary_sample(n_pop, &model, burn_in, rng)?;
            let partition = sample
                .map(|n| sample_partition(&pop, n, SamplingScheme::WithoutReplacement, rng))
                .transpose()?;
            Ok(Row {
                replicate: i,
                types: pop.num_types(),
                partition: partition.map(|p| p.to_string()),
                burn_in_warning: diag.warning.is_some(),
            })
        }
        Method::Exact => {
            let source = StationarySource::ExactBackward;
            let types = experiments::stationary_type_count(n_pop, theta, source, rng)?;
            let partition = sample
                .map(|n| experiments::stationary_sample_partition(n_pop, theta, n, source, rng))
                .transpose()?;
            Ok(Row {
                replicate: i,
                types,
                partition: partition.map(|p| p.to_string()),
                burn_in_warning: false,
            })
        }
    })?;
    ctx.csv(&rows)?;
    let warnings = rows.iter().filter(|r| r.burn_in_warning).count();
    if warnings > 0 {
        eprintln!("warning: {warnings} of {reps} runs flagged a possibly short burn-in");
    }
    let m = k_moments(rows.iter().map(|r| r.types))?;
    let mut law: BTreeMap<usize, u64> = BTreeMap::new();
    for r in &rows {
        *law.entry(r.types).or_default() += 1;
    }
    let mut out = json!({
        "schema_version": SCHEMA_VERSION,
        "N": n_pop,
        "theta": theta,
        "reps": reps,
        "method": format!("{method:?}").to_lowercase(),
        "burn_in": matches!(method, Method::Forward).then_some(burn_in),
        "burn_in_warnings": warnings,
        "k_moments": m,
        "k_counts": law,
    });
    if sample.is_some() {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for r in &rows {
            *counts
                .entry(r.partition.clone().unwrap_or_default())
                .or_default() += 1;
        }
        out["sample_partition_counts"] = json!(counts);
    }
    Ok(out)
}

fn genealogy(n_pop: usize, x: usize, y: usize, reps: u64, ctx: &Ctx) -> Result<Value> {
    let bound = durint_bound(n_pop, x, y)?;
    let edge_bound = numedges_bound(n_pop)?;
    let rows = replicates(reps, ctx.seed, "cli/genealogy", |rng, _| {
        let trace = simulate_trace(n_pop, n_pop, 1, rng)?;
        Ok((
            interval_stats(&trace, x, y)?,
            interval_stats(&trace, 2, n_pop)?.edges,
        ))
    })?;
    #[derive(Serialize)]
    struct Row {
        tau: u64,
        edges_in_interval: u64,
        edges_2_n: u64,
    }
    let csv_rows: Vec<Row> = rows
        .iter()
        .map(|(s, e)| Row {
            tau: s.tau,
            edges_in_interval: s.edges,
            edges_2_n: *e,
        })
        .collect();
    ctx.csv(&csv_rows)?;
    let tau2: Vec<f64> = rows.iter().map(|r| (r.0.tau as f64).powi(2)).collect();
    let e2: Vec<f64> = rows.iter().map(|r| (r.1 as f64).powi(2)).collect();
    let (m_tau2, se_tau2) = pdwf_core::numeric::mean_and_se(&tau2);
    let (m_e2, se_e2) = pdwf_core::numeric::mean_and_se(&e2);
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "N": n_pop, "x": x, "y": y, "reps": reps,
        "tau_squared": { "mean": m_tau2, "se": se_tau2, "bound": bound, "pass": m_tau2 + 3.0 * se_tau2 <= bound },
        "edges_squared": { "mean": m_e2, "se": se_e2, "bound": edge_bound, "pass": m_e2 + 3.0 * se_e2 <= edge_bound },
    }))
}

fn fv_transition(theta: f64, t: f64, reps: u64, ctx: &Ctx) -> Result<Value> {
    let tol = ctx.tol;
    let top = entry_level(theta, t, tol.death_truncation)?;
    let rows = replicates(reps, ctx.seed, "cli/fv", |rng, _| {
        let mut labels = LabelAllocator::default();
        let (mu, _) = pdwf_core::esf::dp_uniform(theta, tol.gem_residual, &mut labels, rng)?;
        let s = sample_transition(&mu, theta, t, tol.death_truncation, rng)?;
        Ok((s.level as f64, s.measure.match_probability(), s.fresh_mass))
    })?;
    let col = |f: fn(&(f64, f64, f64)) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let (ml, sl) = pdwf_core::numeric::mean_and_se(&col(|r| r.0));
    let (mm, sm) = pdwf_core::numeric::mean_and_se(&col(|r| r.1));
    let (mf, sf) = pdwf_core::numeric::mean_and_se(&col(|r| r.2));
    let counts = count_replicates(reps, ctx.seed, "cli/fv-level", |rng, _| {
        pdwf_core::fv_dual::sample_death_level(theta, t, tol.death_truncation, rng)
    })?;
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "theta": theta, "t": t, "reps": reps, "entry_level": top,
        "level": { "mean": ml, "se": sl, "zero_fraction": *counts.get(&0).unwrap_or(&0) as f64 / reps as f64 },
        "match_probability": { "mean": mm, "se": sm, "stationary_value": 1.0 / (theta + 1.0) },
        "fresh_mass": { "mean": mf, "se": sf },
    }))
}

fn bounds(a: BoundsArgs, ctx: &Ctx) -> Result<Value> {
    let Preset::Pim = a.preset;
    let p = a.theta / (2.0 * a.n_pop as f64);
    let (k32, source) = match a.k32_mode {
        K32Mode::Theorem => (k32_from_theorem(a.n_pop, p)?, K32Source::Theorem),
        K32Mode::Value => (
            a.k32
                .ok_or_else(|| Error::Validation("--k32-mode value needs --k32".into()))?,
            K32Source::UserSupplied,
        ),
        K32Mode::Mc => {
            let ks = replicates(a.k32_reps, ctx.seed, "cli/k32", |rng, _| {
                experiments::stationary_type_count(
                    a.n_pop,
                    a.theta,
                    StationarySource::ExactBackward,
                    rng,
                )
            })?;
            let m = k_moments(ks)?;
            (
                m.mean_k32.max(1.0),
                K32Source::MonteCarlo {
                    se: m.se_k32,
                    reps: a.k32_reps as usize,
                },
            )
        }
    };
    let variant = match a.a3 {
        A3Choice::Theorem => A3Variant::Theorem,
        A3Choice::Lemma => A3Variant::Lemma,
    };
    let inp = WFBoundInputs::pim(a.n_pop, a.theta, k32, source)?;
    let tf = TestFunctionClass::H2 {
        k: a.k,
        phi_sup: 1.0,
    };
    let report = thm_wf_bound(&tf, &inp, variant)?;
    let corollary = corollary_tv_bound(a.n, &inp, variant)?;
    let kn2 = if a.n_pop >= 3 {
        Some(kn2_bound(a.n_pop, p)?)
    } else {
        None
    };
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "report": report,
        "corollary": corollary,
        "kn2_bound": kn2,
    }))
}
