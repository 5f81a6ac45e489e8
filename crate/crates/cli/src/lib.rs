//! Command-line front end: `select`, `simulate`, `plot` and `generate`.

pub mod csvio;
pub mod error;
pub mod plot;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use clustersift::blinding::{blind, Location, Strategy};
use clustersift::convergence::{consistency_probe, ProbeConfig, ProbeRow, ProbeStrategy};
use clustersift::data::IndexSubset;
use clustersift::kmeans::{kmeans_fit, KMeansConfig, PartitionModel};
use clustersift::objective::{allocation_mask, Evaluator, Threshold};
use clustersift::par;
use clustersift::search::{search_with, SearchConfig, SearchMode};
use clustersift::simgen::{self, monte_carlo, Design, MonteCarloConfig, MonteCarloTable, ScaleConvention};
use clustersift::Error as CoreError;

use crate::error::CliError;
use crate::report::{fingerprint, parse_strategy, KMeansSection, Manifest, Report, SelectParams, SelectionSection};

#[derive(Debug, Parser)]
#[command(
    name = "clustersift",
    version,
    about = "Variable selection for cluster partitions by blinding"
)]
pub struct Cli {
    /// Worker threads (output does not depend on this).
    #[arg(long, global = true, env = "CLUSTERSIFT_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit k-means on a CSV file and search minimal variable subsets.
    Select(SelectArgs),
    /// Monte Carlo studies on the synthetic designs.
    Simulate(SimulateArgs),
    /// Render SVG plots for a previous select report.
    Plot(PlotArgs),
    /// Write a synthetic data set as CSV.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exhaustive,
    Fba,
}

#[derive(Debug, clap::Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub has_header: bool,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    /// Target efficiency in (0, 1]; repeat for several.
    #[arg(long = "threshold", required = true)]
    pub thresholds: Vec<String>,
    /// mean, median, cond-mean or cond-median.
    #[arg(long, default_value = "mean")]
    pub strategy: String,
    /// Neighbour count for conditional strategies.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 100)]
    pub permutations: usize,
    #[arg(long)]
    pub max_subset_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for report.json and report.csv.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DesignArg {
    Case1,
    Case2,
    Tsv05,
    Probe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Sd,
    Variance,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub design: DesignArg,
    /// Noise standard deviation (case1 and probe).
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "mean")]
    pub strategy: String,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long = "threshold", default_values_t = ["1.0".to_string(), "0.95".to_string(), "0.9".to_string()])]
    pub thresholds: Vec<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, value_enum, default_value_t = ConventionArg::Sd)]
    pub scale_convention: ConventionArg,
    /// Sample sizes for the probe design.
    #[arg(long, value_delimiter = ',', default_values_t = [50usize, 100, 400])]
    pub n_grid: Vec<usize>,
    /// Subset size examined by the probe.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Probe neighbour schedule r(n) = ceil(n^e).
    #[arg(long, default_value_t = 0.6)]
    pub r_exponent: f64,
    /// Directory for simulation.json and simulation.csv.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub has_header: bool,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenDesignArg {
    Case1,
    Case2,
    Tsv05,
    Curves,
}

#[derive(Debug, clap::Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub design: GenDesignArg,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 0.2)]
    pub sigma: f64,
    /// Extra standard-normal columns (tsv05).
    #[arg(long, default_value_t = 0)]
    pub noise_dims: usize,
    /// Grid points (curves).
    #[arg(long, default_value_t = 96)]
    pub dims: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub output: PathBuf,
    /// Optional file for the generating component of each row (1-based).
    #[arg(long)]
    pub labels_output: Option<PathBuf>,
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let threads = cli.threads;
    let result = par::with_threads(threads, move || match cli.command {
        Command::Select(a) => cmd_select(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Plot(a) => cmd_plot(&a),
        Command::Generate(a) => cmd_generate(&a),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn parse_thresholds(raw: &[String]) -> Result<Vec<Threshold>, CliError> {
    raw.iter()
        .map(|t| t.parse::<Threshold>().map_err(|e| CliError::Usage(e.to_string())))
        .collect()
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

pub fn cmd_select(a: &SelectArgs) -> Result<i32, CliError> {
    let strategy = parse_strategy(&a.strategy, a.r).map_err(CliError::Usage)?;
    let thresholds = parse_thresholds(&a.thresholds)?;
    if a.mode == ModeArg::Fba && a.permutations == 0 {
        return Err(CliError::Usage("--permutations must be at least 1".into()));
    }
    let (data, bytes) = csvio::read_matrix(&a.input, a.has_header)?;
    let km = KMeansConfig {
        k: a.k,
        restarts: a.restarts,
        max_iter: a.max_iter,
        tol: 1e-9,
        seed: a.seed,
    };
    let (model, labels) = kmeans_fit(&data, &km)?;
    let ev = Evaluator::new(&data, &model, &labels, strategy)?;
    let mode = match a.mode {
        ModeArg::Exhaustive => SearchMode::Exhaustive,
        ModeArg::Fba => SearchMode::ForwardBackward {
            permutations: a.permutations,
        },
    };
    let mut failed = false;
    let mut selections = Vec::new();
    for &threshold in &thresholds {
        let cfg = SearchConfig {
            threshold,
            strategy,
            mode,
            seed: a.seed,
            max_subset_size: a.max_subset_size,
        };
        match search_with(&ev, &cfg) {
            Ok(rep) => selections.push(SelectionSection::from_report(&rep)),
            Err(CoreError::ThresholdUnreachable { .. }) => {
                failed = true;
                selections.push(SelectionSection::failed(threshold.value(), "threshold_unreachable"));
            }
            Err(CoreError::TooManySubsets { .. }) => {
                failed = true;
                selections.push(SelectionSection::failed(threshold.value(), "too_many_subsets"));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let params = SelectParams {
        input: a.input.display().to_string(),
        has_header: a.has_header,
        k: a.k,
        restarts: a.restarts,
        max_iter: a.max_iter,
        thresholds: thresholds.iter().map(Threshold::value).collect(),
        strategy: strategy.name().to_string(),
        r: strategy.neighbors(),
        mode: match a.mode {
            ModeArg::Exhaustive => "exhaustive",
            ModeArg::Fba => "fba",
        }
        .into(),
        permutations: a.permutations,
        max_subset_size: a.max_subset_size,
    };
    let report = Report {
        schema_version: report::SCHEMA_VERSION,
        manifest: Manifest {
            command: "select".into(),
            tool_version: report::TOOL_VERSION.into(),
            seed: a.seed,
            input_fingerprint: Some(fingerprint(&bytes)),
            parameters: serde_json::to_value(&params).expect("params serialize"),
        },
        kmeans: KMeansSection::new(&model, &labels),
        selections,
        warnings: ev.warnings().iter().map(ToString::to_string).collect(),
    };
    write_file(&a.output, "report.json", &report.to_json())?;
    write_file(&a.output, "report.csv", &report.to_csv())?;
    if !a.quiet {
        print!("{}", report.to_table());
    }
    Ok(if failed { 3 } else { 0 })
}

#[derive(Debug, Serialize)]
struct SimulationOutput<'a, T: Serialize> {
    schema_version: u32,
    manifest: Manifest,
    result: &'a T,
}

fn convention(a: ConventionArg) -> ScaleConvention {
    match a {
        ConventionArg::Sd => ScaleConvention::StdDev,
        ConventionArg::Variance => ScaleConvention::Variance,
    }
}

fn sim_manifest(a: &SimulateArgs, parameters: serde_json::Value) -> Manifest {
    Manifest {
        command: "simulate".into(),
        tool_version: report::TOOL_VERSION.into(),
        seed: a.seed,
        input_fingerprint: None,
        parameters,
    }
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<i32, CliError> {
    if a.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    if let Some(s) = a.sigma {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::Usage("--sigma must be positive".into()));
        }
    }
    if a.design == DesignArg::Probe {
        return simulate_probe(a);
    }
    let design = match a.design {
        DesignArg::Case1 => Design::Case1 {
            sigma: a
                .sigma
                .ok_or_else(|| CliError::Usage("case1 requires --sigma".into()))?,
        },
        DesignArg::Case2 => Design::Case2,
        DesignArg::Tsv05 => Design::Tsv05,
        DesignArg::Probe => unreachable!(),
    };
    let strategy = parse_strategy(&a.strategy, a.r).map_err(CliError::Usage)?;
    let mut cfg = MonteCarloConfig::new(design, a.reps, a.seed);
    cfg.thresholds = parse_thresholds(&a.thresholds)?;
    cfg.strategy = strategy;
    cfg.restarts = a.restarts;
    cfg.convention = convention(a.scale_convention);
    if let Some(n) = a.n {
        if design == Design::Tsv05 && n != 15 {
            return Err(CliError::Usage("the tsv05 design always has 15 rows".into()));
        }
        cfg.n = n;
    }
    if let Some(k) = a.k {
        cfg.k = k;
    }
    let table = monte_carlo(&cfg)?;
    let manifest = sim_manifest(a, serde_json::to_value(&cfg).expect("config serializes"));
    let out = SimulationOutput {
        schema_version: report::SCHEMA_VERSION,
        manifest,
        result: &table,
    };
    write_file(
        &a.output,
        "simulation.json",
        &(serde_json::to_string_pretty(&out)? + "\n"),
    )?;
    write_file(&a.output, "simulation.csv", &table_csv(&table))?;
    print!("{}", table_text(&table));
    Ok(0)
}

fn table_csv(t: &MonteCarloTable) -> String {
    let mut s = String::from("threshold,cardinality,count,proportion\n");
    for row in &t.rows {
        for (i, (c, p)) in row.counts.iter().zip(&row.proportions).enumerate() {
            s.push_str(&format!("{},{},{c},{p}\n", row.threshold.value(), i + 1));
        }
    }
    s
}

fn table_text(t: &MonteCarloTable) -> String {
    let mut s = format!("{:?}, {} replications\nefficiency", t.config.design, t.config.reps);
    for d in 1..=t.p {
        s.push_str(&format!("  {:>6}", format!("d={d}")));
    }
    s.push('\n');
    for row in &t.rows {
        s.push_str(&format!("{:>9.0}%", 100.0 * row.threshold.value()));
        for p in &row.proportions {
            s.push_str(&format!("  {p:>6.3}"));
        }
        s.push('\n');
    }
    s
}

fn simulate_probe(a: &SimulateArgs) -> Result<i32, CliError> {
    let strategy = match a.strategy.as_str() {
        "mean" => ProbeStrategy::Marginal {
            location: Location::Mean,
        },
        "median" => ProbeStrategy::Marginal {
            location: Location::Median,
        },
        "cond-mean" | "cond-median" => {
            if a.r.is_some() {
                return Err(CliError::Usage("the probe schedules r itself; use --r-exponent".into()));
            }
            let location = if a.strategy == "cond-mean" {
                Location::Mean
            } else {
                Location::Median
            };
            ProbeStrategy::Conditional {
                location,
                exponent: a.r_exponent,
            }
        }
        other => return Err(CliError::Usage(format!("unknown strategy '{other}'"))),
    };
    let mut cfg = ProbeConfig::new(a.sigma.unwrap_or(0.2), a.n_grid.clone(), a.reps, a.d, strategy, a.seed);
    cfg.restarts = a.restarts;
    let rows: Vec<ProbeRow> = consistency_probe(&cfg)?;
    let manifest = sim_manifest(a, serde_json::to_value(&cfg).expect("config serializes"));
    let out = SimulationOutput {
        schema_version: report::SCHEMA_VERSION,
        manifest,
        result: &rows,
    };
    write_file(
        &a.output,
        "simulation.json",
        &(serde_json::to_string_pretty(&out)? + "\n"),
    )?;
    let mut csv = String::from("n,r,successes,reps,fraction,neighbor_warnings\n");
    let mut text = format!("consistency probe, d = {}\n", cfg.d);
    for r in &rows {
        let rr = r.r.map(|v| v.to_string()).unwrap_or_default();
        csv.push_str(&format!(
            "{},{rr},{},{},{},{}\n",
            r.n, r.successes, r.reps, r.fraction, r.neighbor_warnings
        ));
        text.push_str(&format!("n = {:>5}  fraction = {:.3}\n", r.n, r.fraction));
    }
    write_file(&a.output, "simulation.csv", &csv)?;
    print!("{text}");
    Ok(0)
}

pub fn cmd_plot(a: &PlotArgs) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&a.report)
        .map_err(|e| CliError::Input(format!("cannot read report {}: {e}", a.report.display())))?;
    let report: Report = serde_json::from_str(&text)?;
    let params = report.select_params()?;
    let (data, bytes) = csvio::read_matrix(&a.input, a.has_header)?;
    if report.manifest.input_fingerprint.as_deref() != Some(fingerprint(&bytes).as_str()) {
        return Err(CliError::Input(
            "input file does not match the report fingerprint".into(),
        ));
    }
    let model = PartitionModel::new(report.kmeans.centers.clone(), report.kmeans.inertia)?;
    let labels = model.label_all(&data)?;
    let strategy: Strategy = params.strategy().map_err(CliError::Input)?;
    write_file(
        &a.output,
        "scatter_matrix.svg",
        &plot::scatter_matrix(&data, labels.labels()),
    )?;
    for (t, sel) in report.selections.iter().enumerate() {
        let name = format!("allocation_{}.svg", t + 1);
        let svg = match sel.solutions.first() {
            None => plot::allocation_map(
                &data,
                labels.labels(),
                &[],
                &[],
                &format!("threshold {:.2}%: {}", 100.0 * sel.threshold, sel.status),
            ),
            Some(sol) => {
                let subset = IndexSubset::from_one_based(data.p(), sol.indices.iter().copied())?;
                let (blinded, _) = blind(&data, &subset, strategy, labels.smallest_cluster())?;
                let kept = allocation_mask(&model, &labels, &blinded)?;
                plot::allocation_map(
                    &data,
                    labels.labels(),
                    subset.indices(),
                    &kept,
                    &format!("threshold {:.2}%: {subset}", 100.0 * sel.threshold),
                )
            }
        };
        write_file(&a.output, &name, &svg)?;
    }
    Ok(0)
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<i32, CliError> {
    let sample = match a.design {
        GenDesignArg::Case1 => simgen::gen_case1(a.n, a.sigma, a.seed)?,
        GenDesignArg::Case2 => simgen::gen_case2(a.n, a.seed)?,
        GenDesignArg::Tsv05 => simgen::gen_tsv05(a.seed, 3, a.noise_dims)?,
        GenDesignArg::Curves => simgen::gen_two_cluster_curves(a.n, a.dims, a.seed)?,
    };
    if let Some(dir) = a.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = std::fs::File::create(&a.output)?;
    csvio::write_matrix(std::io::BufWriter::new(file), &sample.data, a.header)?;
    if let Some(path) = &a.labels_output {
        let body: String = sample.components.iter().map(|c| format!("{}\n", c + 1)).collect();
        std::fs::write(path, body)?;
    }
    Ok(0)
}
