//! Command-line front end: `build` (CSV → tree → artifacts), `verify`
//! (re-check artifacts against a table), `bench` (comparison table on the
//! bundled synthetic suite), and `synth` (generate controller CSVs).

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::export::{
    compute_stats, emit_c, emit_dot_named, extract_quantizer, read_dot_named, write_artifacts,
    QuantizerTables, TreeStats,
};
use crate::ingest::{generate_synthetic, read_csv_file, write_csv_file, SyntheticSpec};
use crate::learner::{build, Aggregation, Determinizer, LearnerConfig, SplitStrategy};
use crate::model::{ControllerTable, DecisionTree, Label};
use crate::verify::{
    bundled_suite, check_exact, method_matrix, render_benchmark_json, render_benchmark_text,
    BenchConfig,
};

#[derive(Debug, Parser)]
#[command(
    name = "dtc",
    version,
    about = "Compile symbolic-controller lookup tables into exact decision trees"
)]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a decision tree from a controller CSV and write the
    /// .dot/.c/.stats.json/.quantizer.json artifacts.
    Build(BuildArgs),
    /// Re-check previously built artifacts against a controller CSV.
    Verify(VerifyArgs),
    /// Run the eight-method comparison table on the bundled synthetic suite.
    Bench(BenchArgs),
    /// Generate a synthetic controller CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredicatesArg {
    Axis,
    Oc1,
    Logreg,
    Linsvm,
}

impl From<PredicatesArg> for SplitStrategy {
    fn from(v: PredicatesArg) -> Self {
        match v {
            PredicatesArg::Axis => SplitStrategy::Axis,
            PredicatesArg::Oc1 => SplitStrategy::Oc1,
            PredicatesArg::Logreg => SplitStrategy::LogReg,
            PredicatesArg::Linsvm => SplitStrategy::LinSvm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DeterminizeArg {
    None,
    Maxfreq,
    Minnorm,
    Random,
}

impl From<DeterminizeArg> for Determinizer {
    fn from(v: DeterminizeArg) -> Self {
        match v {
            DeterminizeArg::None => Determinizer::None,
            DeterminizeArg::Maxfreq => Determinizer::MaxFreq,
            DeterminizeArg::Minnorm => Determinizer::MinNorm,
            DeterminizeArg::Random => Determinizer::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregationArg {
    Sum,
    Weighted,
}

impl From<AggregationArg> for Aggregation {
    fn from(v: AggregationArg) -> Self {
        match v {
            AggregationArg::Sum => Aggregation::Sum,
            AggregationArg::Weighted => Aggregation::Weighted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Collapsible,
    Random,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Controller CSV in the `#dtc-csv v1` format.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = PredicatesArg::Axis)]
    pub predicates: PredicatesArg,
    #[arg(long, value_enum, default_value_t = DeterminizeArg::None)]
    pub determinize: DeterminizeArg,
    /// Reference action vector for `--determinize minnorm`, comma-separated
    /// (defaults to the origin).
    #[arg(long)]
    pub minnorm_reference: Option<String>,
    #[arg(long, value_enum, default_value_t = AggregationArg::Sum)]
    pub aggregation: AggregationArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    /// Artifact base name; defaults to the input file stem.
    #[arg(long)]
    pub name: Option<String>,
    /// File with one feature name per line, used for DOT labels.
    #[arg(long)]
    pub feature_names: Option<PathBuf>,
    /// Print the stats as JSON instead of the one-line summary.
    #[arg(long)]
    pub json: bool,
    /// Value to record as `seconds` in stats.json instead of the measured
    /// wall time (for byte-reproducible artifacts).
    #[arg(long)]
    pub stats_seconds: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Controller CSV the artifacts were built from.
    pub input: PathBuf,
    /// Directory holding the artifacts.
    #[arg(long, default_value = ".")]
    pub artifacts: PathBuf,
    /// Artifact base name; defaults to the input file stem.
    #[arg(long)]
    pub name: Option<String>,
    /// Feature-names file the artifacts were built with, if any.
    #[arg(long)]
    pub feature_names: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Per-build wall-clock budget in seconds; 0 disables the timeout.
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub seeds_per_cell: usize,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json_out: Option<PathBuf>,
    /// Also write the plain-text report.
    #[arg(long)]
    pub text_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Destination CSV path.
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FamilyArg::Collapsible)]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn env_workers() -> Option<usize> {
    std::env::var("DTC_WORKERS").ok()?.parse().ok()
}

/// Sizes the global worker pool from `DTC_WORKERS` when set. Safe to call
/// more than once; later calls are no-ops.
fn init_workers() {
    if let Some(n) = env_workers() {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

pub fn run(cfg: CliConfig) -> Result<()> {
    init_workers();
    match cfg.command {
        Command::Build(args) => run_build(&args),
        Command::Verify(args) => run_verify(&args),
        Command::Bench(args) => run_bench(&args),
        Command::Synth(args) => run_synth(&args),
    }
}

fn artifact_name(input: &Path, name: Option<&str>) -> Result<String> {
    match name {
        Some(n) => Ok(n.to_string()),
        None => input
            .file_stem()
            .and_then(|s| s.to_str())
            .map(str::to_string)
            .ok_or_else(|| Error::Config(format!("cannot derive a name from {}", input.display()))),
    }
}

fn parse_reference(text: Option<&str>) -> Result<Option<Vec<f64>>> {
    let Some(text) = text else { return Ok(None) };
    let parts: Result<Vec<f64>> = text
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad minnorm reference component `{p}`")))
        })
        .collect();
    Ok(Some(parts?))
}

fn parse_timeout(secs: Option<f64>) -> Result<Option<Duration>> {
    match secs {
        None => Ok(None),
        Some(s) if s.is_finite() && s > 0.0 => Ok(Some(Duration::from_secs_f64(s))),
        Some(s) => Err(Error::Config(format!("timeout must be positive, got {s}"))),
    }
}

fn load_feature_names(path: Option<&Path>) -> Result<Option<Vec<String>>> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path)?;
    Ok(Some(
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect(),
    ))
}

fn stats_line(name: &str, table: &ControllerTable, stats: &TreeStats) -> String {
    format!(
        "{name}: states={} nodes={} inner={} paths={} bits={} seconds={:.3}",
        table.num_states(),
        stats.nodes,
        stats.inner_nodes,
        stats.paths,
        stats.bits,
        stats.seconds
    )
}

fn run_build(args: &BuildArgs) -> Result<()> {
    let table = read_csv_file(&args.input)?;
    let cfg = LearnerConfig {
        split_strategy: args.predicates.into(),
        determinizer: args.determinize.into(),
        aggregation: args.aggregation.into(),
        seed: args.seed,
        max_depth: args.max_depth,
        minnorm_reference: parse_reference(args.minnorm_reference.as_deref())?,
        timeout: parse_timeout(args.timeout)?,
        ..LearnerConfig::default()
    };
    let started = Instant::now();
    let result = build(&table, &cfg)?;
    let elapsed = started.elapsed();

    // every artifact written by `build` must pass verification right away
    let report = check_exact(&result.tree, &table, &result.labeling);
    if !report.passed() {
        return Err(Error::Verify(format!(
            "internal error: built tree disagrees with the table on {} of {} rows",
            report.violations.len(),
            report.rows_checked
        )));
    }

    let name = artifact_name(&args.input, args.name.as_deref())?;
    let mut stats = compute_stats(&result.tree, elapsed);
    if let Some(s) = args.stats_seconds {
        stats.seconds = s;
    }
    let names = load_feature_names(args.feature_names.as_deref())?;
    write_artifacts(
        &result.tree,
        &table,
        &args.output_dir,
        &name,
        &stats,
        names.as_deref(),
    )?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&stats).expect("stats"));
    } else {
        println!("{}", stats_line(&name, &table, &stats));
    }
    Ok(())
}

/// Replays the table rows through a tree parsed back from the artifacts:
/// set leaves must decode to exactly the row's admissible set, action
/// leaves must return an admissible action.
fn recheck_rows(tree: &DecisionTree, table: &ControllerTable) -> std::result::Result<(), String> {
    let mut bad = 0usize;
    let mut first = None;
    for row in 0..table.num_states() {
        let ok = match tree.evaluate(table.state(row)) {
            Ok(Label::Set(s)) => s == table.set_label(row),
            Ok(Label::Action(a)) => table.admissible(row).contains(a),
            Err(_) => false,
        };
        if !ok {
            bad += 1;
            first.get_or_insert(row);
        }
    }
    if bad == 0 {
        Ok(())
    } else {
        Err(format!(
            "{bad} of {} rows disagree with the tree (first at row {})",
            table.num_states(),
            first.unwrap_or_default()
        ))
    }
}

fn run_verify(args: &VerifyArgs) -> Result<()> {
    let table = read_csv_file(&args.input)?;
    let name = artifact_name(&args.input, args.name.as_deref())?;
    let names = load_feature_names(args.feature_names.as_deref())?;
    let dot_path = args.artifacts.join(format!("{name}.dot"));
    let dot_text = std::fs::read_to_string(&dot_path)?;
    let tree = read_dot_named(&dot_text, &table, names.as_deref())?;

    let mut problems: Vec<String> = Vec::new();
    if emit_dot_named(&tree, &table, names.as_deref()) != dot_text {
        problems.push(format!("{}: not the canonical emission", dot_path.display()));
    }

    let c_path = args.artifacts.join(format!("{name}.c"));
    match std::fs::read_to_string(&c_path) {
        Ok(c_text) if c_text == emit_c(&tree, &table) => {}
        Ok(_) => problems.push(format!("{}: does not match the tree", c_path.display())),
        Err(e) => problems.push(format!("{}: {e}", c_path.display())),
    }

    let stats_path = args.artifacts.join(format!("{name}.stats.json"));
    match std::fs::read_to_string(&stats_path) {
        Ok(text) => match serde_json::from_str::<TreeStats>(&text) {
            Ok(stats) => {
                let expected = compute_stats(&tree, Duration::from_secs_f64(stats.seconds.max(0.0)));
                if (
                    stats.nodes,
                    stats.inner_nodes,
                    stats.paths,
                    stats.bits,
                ) != (
                    expected.nodes,
                    expected.inner_nodes,
                    expected.paths,
                    expected.bits,
                ) {
                    problems.push(format!(
                        "{}: size fields do not match the tree",
                        stats_path.display()
                    ));
                }
            }
            Err(e) => problems.push(format!("{}: {e}", stats_path.display())),
        },
        Err(e) => problems.push(format!("{}: {e}", stats_path.display())),
    }

    let quant_path = args.artifacts.join(format!("{name}.quantizer.json"));
    match std::fs::read_to_string(&quant_path) {
        Ok(text) => match serde_json::from_str::<QuantizerTables>(&text) {
            Ok(tables) if tables == extract_quantizer(&tree, &table) => {}
            Ok(_) => problems.push(format!("{}: does not match the tree", quant_path.display())),
            Err(e) => problems.push(format!("{}: {e}", quant_path.display())),
        },
        Err(e) => problems.push(format!("{}: {e}", quant_path.display())),
    }

    if let Err(msg) = recheck_rows(&tree, &table) {
        problems.push(msg);
    }

    if problems.is_empty() {
        println!(
            "verify: {name}: OK ({} rows, 4 artifacts)",
            table.num_states()
        );
        Ok(())
    } else {
        for p in &problems {
            eprintln!("verify: {name}: {p}");
        }
        Err(Error::Verify(format!("{} problem(s)", problems.len())))
    }
}

fn run_bench(args: &BenchArgs) -> Result<()> {
    let timeout = if args.timeout == 0.0 {
        None
    } else {
        parse_timeout(Some(args.timeout))?
    };
    let cfg = BenchConfig {
        timeout,
        base_seed: args.seed,
        seeds_per_cell: args.seeds_per_cell,
        workers: env_workers(),
    };
    let suite = bundled_suite();
    let rows = crate::verify::run_benchmark(&suite, &method_matrix(), &cfg);
    let text = render_benchmark_text(&rows);
    print!("{text}");
    if let Some(path) = &args.text_out {
        std::fs::write(path, &text)?;
    }
    if let Some(path) = &args.json_out {
        std::fs::write(path, render_benchmark_json(&rows))?;
    }
    Ok(())
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let spec = match args.family {
        FamilyArg::Collapsible => SyntheticSpec::collapsible(),
        FamilyArg::Random => SyntheticSpec::random_family(args.seed),
    };
    let table = generate_synthetic(&spec, args.seed)?;
    write_csv_file(&table, &args.out)?;
    println!(
        "synth: wrote {} states ({} actions) to {}",
        table.num_states(),
        table.num_actions(),
        args.out.display()
    );
    Ok(())
}
