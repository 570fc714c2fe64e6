use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};

use benchfold::diagnostics::{self, DiagnosticsReport, PointShare};
use benchfold::io::{self, Artifacts, PrefixGroup, PrefixGroupsFile, StudyConfig, UnfoldingFile};
use benchfold::model::{validate_tensor, PerformanceTensor};
use benchfold::multiverse::{self, Choice, RankingTable, Trajectory};
use benchfold::unfolding::{self, UnfoldOptions, UnfoldingSolution};

#[derive(Debug, Parser)]
#[command(name = "benchfold", version, about = "Multiverse analysis of benchmark studies")]
struct Cli {
    /// Study configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Long-format results CSV; overrides the config file.
    #[arg(long, global = true)]
    results: Option<PathBuf>,
    /// Data-set metadata CSV; overrides the config file.
    #[arg(long, global = true)]
    datasets: Option<PathBuf>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the multiverse and diagnostics.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the results and metadata against every structural invariant.
    Validate,
    /// Rank the methods in every universe and write rankings.csv.
    Multiverse,
    /// Greedy option search for the best rank of one or all methods.
    Stepwise {
        /// Target method; every method if omitted.
        #[arg(long)]
        method: Option<String>,
        /// Visiting order, e.g. imputation,aggregation,measure,datasets.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<Choice>>,
    },
    /// Fit the unfolding of the ranking table.
    Unfold {
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        starts: Option<usize>,
    },
    /// Permutation test, stress per point, scree curve and default-option distances.
    Diagnose {
        #[arg(long)]
        permutations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Random prefix groups of data sets, ranked under the default universe.
    SampleDatasets {
        #[arg(long)]
        permutations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Every analysis above, written to the output directory.
    All,
}

struct Study {
    config: StudyConfig,
    tensor: PerformanceTensor,
}

fn input(flag: &Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| configured.clone())
        .ok_or_else(|| anyhow!(benchfold::Error::Config {
            field: what.into(),
            message: format!("no {what} file given (use --{what} or set `{what}` in the config)"),
        }))
}

fn load(cli: &Cli) -> Result<Study> {
    let path = cli.config.as_ref().ok_or_else(|| {
        anyhow!(benchfold::Error::Config {
            field: "config".into(),
            message: "--config is required".into(),
        })
    })?;
    let config = io::parse_config(path)?;
    let datasets = io::parse_datasets(&input(&cli.datasets, &config.datasets, "datasets")?)?;
    let tensor = io::parse_results(&input(&cli.results, &config.results, "results")?, &datasets, &config.measures)?;
    Ok(Study { config, tensor })
}

fn load_valid(cli: &Cli) -> Result<Study> {
    let study = load(cli)?;
    let violations = validate_tensor(&study.tensor);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{v}");
        }
        return Err(anyhow!(benchfold::Error::Structural(format!(
            "{} invariant violation(s) in the input",
            violations.len()
        ))));
    }
    Ok(study)
}

fn out_dir(cli: &Cli, config: &StudyConfig) -> Result<PathBuf> {
    input(&cli.out, &config.out, "out")
}

fn ranking_table(study: &Study) -> Result<RankingTable> {
    let table = multiverse::run_multiverse(&study.tensor, &study.config.multiverse)?;
    for w in &table.warnings {
        eprintln!("warning: skipped universe {w}");
    }
    Ok(table)
}

fn trajectories(study: &Study, method: Option<&str>, order: Option<&[Choice]>) -> Result<Vec<Trajectory>> {
    let mut config = study.config.multiverse.clone();
    if let Some(order) = order {
        config.stepwise_order = order.try_into().map_err(|_| {
            anyhow!(benchfold::Error::Config {
                field: "--order".into(),
                message: "must list datasets, measure, imputation and aggregation once each".into(),
            })
        })?;
    }
    let methods: Vec<String> = match method {
        Some(m) => vec![m.to_string()],
        None => study.tensor.methods().to_vec(),
    };
    methods
        .iter()
        .map(|m| multiverse::stepwise_optimize(&study.tensor, &config, m).map_err(Into::into))
        .collect()
}

fn unfold_options(study: &Study, dim: Option<usize>, seed: Option<u64>, starts: Option<usize>) -> Result<UnfoldOptions> {
    let mut opts = study.config.unfolding.clone();
    opts.seed = io::resolve_seed(seed, study.config.unfolding_seed, 0)?;
    if let Some(d) = dim {
        opts.dim = d;
    }
    if let Some(s) = starts {
        opts.n_starts = s;
    }
    opts.validate()?;
    Ok(opts)
}

fn diagnose(
    study: &Study,
    table: &RankingTable,
    solution: &UnfoldingSolution,
    opts: &UnfoldOptions,
    permutations: Option<usize>,
    seed: Option<u64>,
) -> Result<DiagnosticsReport> {
    let diag = &study.config.diagnostics;
    let delta = table.rank_rows();
    let perm_opts = UnfoldOptions {
        n_starts: diag.permutation_starts,
        ..opts.clone()
    };
    let perm_seed = io::resolve_seed(seed, diag.seed, opts.seed)?;
    let permutation = diagnostics::permutation_test(
        &delta,
        &perm_opts,
        permutations.unwrap_or(diag.permutations),
        perm_seed,
        diag.scheme,
    )?;
    let (rows, cols) = diagnostics::stress_per_point(solution, &delta, opts.weights.as_deref())?;
    let m = table.methods.len();
    let dims = diag.scree_dims.clone().unwrap_or_else(|| (1..=m.min(4)).collect());
    let (scree, scree_warnings) = diagnostics::scree(&delta, opts, &dims)?;
    for w in &scree_warnings {
        eprintln!("warning: {w}");
    }
    Ok(DiagnosticsReport {
        permutation: Some(permutation),
        spp_rows: table
            .rows
            .iter()
            .zip(rows)
            .map(|(r, share)| PointShare {
                id: r.universe.key(),
                share,
            })
            .collect(),
        spp_cols: table
            .methods
            .iter()
            .zip(cols)
            .map(|(id, share)| PointShare { id: id.clone(), share })
            .collect(),
        scree,
        scree_warnings,
        default_distances: diagnostics::default_option_distances(solution, table, &study.config.multiverse)?,
    })
}

fn prefix_groups(study: &Study, permutations: Option<usize>, seed: Option<u64>) -> Result<PrefixGroupsFile> {
    let n_perms = permutations.unwrap_or(study.config.sampling.permutations);
    let seed = io::resolve_seed(seed, study.config.sampling.seed, multiverse::DEFAULT_SAMPLING_SEED)?;
    let ids: Vec<String> = study.tensor.datasets().iter().map(|d| d.id.clone()).collect();
    let groups = multiverse::sample_prefix_groups(&ids, n_perms, seed)?;
    let rankings = multiverse::evaluate_groups(&study.tensor, &groups, &study.config.multiverse.defaults)?;
    Ok(PrefixGroupsFile {
        n_perms,
        seed,
        methods: study.tensor.methods().to_vec(),
        groups: groups
            .into_iter()
            .zip(rankings)
            .map(|(datasets, r)| PrefixGroup { datasets, ranks: r.ranks })
            .collect(),
    })
}

fn fit(table: &RankingTable, opts: &UnfoldOptions) -> Result<UnfoldingSolution> {
    let solution = unfolding::fit(&table.rank_rows(), opts)?;
    println!(
        "unfolding: dim {}, penalized stress {:.6}, raw stress {:.6}, {} iterations{}",
        opts.dim,
        solution.stress_penalized,
        solution.stress_raw,
        solution.iterations,
        if solution.converged { "" } else { " (not converged)" }
    );
    Ok(solution)
}

fn written(dir: &Path, manifest: &io::Manifest) {
    for f in &manifest.files {
        println!("wrote {}", dir.join(&f.name).display());
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Validate => {
            let study = load(cli)?;
            let violations = validate_tensor(&study.tensor);
            for v in &violations {
                println!("{v}");
            }
            if !violations.is_empty() {
                return Err(anyhow!(benchfold::Error::Structural(format!(
                    "{} invariant violation(s)",
                    violations.len()
                ))));
            }
            println!(
                "ok: {} data sets, {} methods, {} measures",
                study.tensor.datasets().len(),
                study.tensor.methods().len(),
                study.tensor.measures().len()
            );
        }
        Command::Multiverse => {
            let study = load_valid(cli)?;
            let dir = out_dir(cli, &study.config)?;
            let table = ranking_table(&study)?;
            println!("multiverse: {} universes ranked", table.len());
            let manifest = io::write_outputs(&dir, &Artifacts { table: Some(&table), ..Default::default() })?;
            written(&dir, &manifest);
        }
        Command::Stepwise { method, order } => {
            let study = load_valid(cli)?;
            let dir = out_dir(cli, &study.config)?;
            let t = trajectories(&study, method.as_deref(), order.as_deref())?;
            for tr in &t {
                println!("{}: rank {} -> {}", tr.method, tr.default_rank, tr.final_rank);
            }
            let manifest = io::write_outputs(&dir, &Artifacts { trajectories: Some(&t), ..Default::default() })?;
            written(&dir, &manifest);
        }
        Command::Unfold { dim, seed, starts } => {
            let study = load_valid(cli)?;
            let dir = out_dir(cli, &study.config)?;
            let opts = unfold_options(&study, *dim, *seed, *starts)?;
            let table = ranking_table(&study)?;
            let solution = fit(&table, &opts)?;
            let file = UnfoldingFile::new(&table, &solution, &opts);
            let manifest = io::write_outputs(
                &dir,
                &Artifacts {
                    table: Some(&table),
                    unfolding: Some(&file),
                    ..Default::default()
                },
            )?;
            written(&dir, &manifest);
        }
        Command::Diagnose { permutations, seed } => {
            let study = load_valid(cli)?;
            let dir = out_dir(cli, &study.config)?;
            let opts = unfold_options(&study, None, None, None)?;
            let table = ranking_table(&study)?;
            let solution = fit(&table, &opts)?;
            let report = diagnose(&study, &table, &solution, &opts, *permutations, *seed)?;
            if let Some(p) = &report.permutation {
                println!("permutation test: p = {:.4} ({} permutations)", p.p_value, p.n_perm);
            }
            let file = UnfoldingFile::new(&table, &solution, &opts);
            let manifest = io::write_outputs(
                &dir,
                &Artifacts {
                    table: Some(&table),
                    unfolding: Some(&file),
                    diagnostics: Some(&report),
                    ..Default::default()
                },
            )?;
            written(&dir, &manifest);
        }
        Command::SampleDatasets { permutations, seed } => {
            let study = load_valid(cli)?;
            let dir = out_dir(cli, &study.config)?;
            let groups = prefix_groups(&study, *permutations, *seed)?;
            println!("sampled {} data-set groups", groups.groups.len());
            let manifest = io::write_outputs(&dir, &Artifacts { prefix_groups: Some(&groups), ..Default::default() })?;
            written(&dir, &manifest);
        }
        Command::All => {
            let study = load_valid(cli)?;
            let dir = out_dir(cli, &study.config)?;
            let table = ranking_table(&study)?;
            println!("multiverse: {} universes ranked", table.len());
            let t = trajectories(&study, None, None)?;
            let opts = unfold_options(&study, None, None, None)?;
            let solution = fit(&table, &opts)?;
            let report = diagnose(&study, &table, &solution, &opts, None, None)?;
            let groups = prefix_groups(&study, None, None)?;
            let file = UnfoldingFile::new(&table, &solution, &opts);
            let manifest = io::write_outputs(
                &dir,
                &Artifacts {
                    table: Some(&table),
                    unfolding: Some(&file),
                    diagnostics: Some(&report),
                    trajectories: Some(&t),
                    prefix_groups: Some(&groups),
                },
            )?;
            written(&dir, &manifest);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<benchfold::Error>().map_or(2, |e| e.exit_code());
            ExitCode::from(code as u8)
        }
    }
}
