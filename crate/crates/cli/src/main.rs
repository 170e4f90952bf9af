//! Command-line front end: CSV ingestion, pipeline configuration, index
//! lifecycle, queries, clustering, evaluation, and benchmarks.
//!
//! Results are JSON on standard output; diagnostics go to standard error.
//! Exit codes are a stable contract for scripting: 0 success, 1 usage error,
//! 2 data error, 3 internal error.

mod ingest;

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use baire::codec::DigitCode;
use baire::gridcluster::{self, Assignment};
use baire::project::ProjectionSpec;
use baire::{encode, eval, normalize, Error as BaireError, MadicIndex, NormalizationBounds};

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<BaireError> for CliError {
    fn from(err: BaireError) -> Self {
        use BaireError as E;
        match err {
            // Parameter mistakes a caller can correct on the command line.
            E::BaseOutOfRange(_)
            | E::PrecisionOutOfRange(..)
            | E::LevelOutOfRange { .. }
            | E::KOutOfRange { .. }
            | E::ParameterTooSmall(_)
            | E::TruncateBeyondPrecision { .. }
            | E::DimensionMismatch { .. }
            | E::SizesNotAscending
            | E::TooFewPoints { .. } => CliError::Usage(err.to_string()),
            // Plumbing misuse that no command line should be able to reach.
            E::LabelLengthMismatch(..) | E::CenterLevelMismatch { .. } => {
                CliError::Internal(err.to_string())
            }
            _ => CliError::Data(err.to_string()),
        }
    }
}

type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(
    name = "baire",
    version,
    about = "Ultrametric indexing and clustering over m-adic digit codes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a CSV file, encode it, and save an index + projection spec.
    Build(BuildArgs),
    /// Query a saved index.
    Query(QueryArgs),
    /// Grid-cluster the bins of one level and write labelings.
    Cluster(ClusterArgs),
    /// Score the grid labeling against a k-means baseline on the raw rows.
    Compare(CompareArgs),
    /// Measure index build time over seeded data of growing sizes.
    Bench(BenchArgs),
    /// Re-encode a saved index at a coarser precision.
    Truncate(TruncateArgs),
}

#[derive(Args)]
struct CsvArgs {
    /// Input CSV file (comma-delimited; header auto-detected).
    #[arg(long)]
    input: PathBuf,
    /// Id column, by header name or 0-based index; row numbers by default.
    #[arg(long)]
    id_col: Option<String>,
    /// Value columns, by header name or 0-based index (comma-separated);
    /// all non-id columns by default.
    #[arg(long, value_delimiter = ',')]
    value_cols: Vec<String>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    csv: CsvArgs,
    /// Digit base of the encoding.
    #[arg(long, default_value_t = 10)]
    base: u32,
    /// Number of digits kept per record.
    #[arg(long, default_value_t = 4)]
    precision: usize,
    /// Seed for the projection axes.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of random projection axes (multi-column data only).
    #[arg(long, default_value_t = 1)]
    axis_count: usize,
    /// Output path for the index file.
    #[arg(long, default_value = "index.madic")]
    index: PathBuf,
    /// Output path for the projection spec file.
    #[arg(long, default_value = "index.proj")]
    spec: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    /// Index file written by `build`.
    #[arg(long)]
    index: PathBuf,
    /// Projection spec file; required for --value queries.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[command(subcommand)]
    what: QueryCommand,
}

#[derive(Subcommand)]
enum QueryCommand {
    /// Nearest neighbor of a member record (--id) or external row (--value).
    Nn {
        #[arg(long, conflicts_with = "value")]
        id: Option<String>,
        /// Raw (pre-projection) components, comma-separated.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        value: Option<Vec<f64>>,
    },
    /// Ultrametric distance between two member records: --id A --id B.
    Dist {
        #[arg(long = "id", required = true)]
        ids: Vec<String>,
    },
    /// All non-empty bins at a level (1-based).
    Bins {
        #[arg(long)]
        level: usize,
    },
    /// Index-wide statistics.
    Stats,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    index: PathBuf,
    /// Tree level whose bins form the grid (1-based).
    #[arg(long)]
    level: usize,
    /// Minimum member count for a bin to seed a cluster.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    min_density: u64,
    /// Output path for the JSON labeling.
    #[arg(long, default_value = "labels.json")]
    labels_json: PathBuf,
    /// Output path for the `id<TAB>cluster` labeling.
    #[arg(long, default_value = "labels.tsv")]
    labels_tsv: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    index: PathBuf,
    #[command(flatten)]
    csv: CsvArgs,
    #[arg(long)]
    level: usize,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    min_density: u64,
    /// Number of k-means clusters.
    #[arg(long)]
    k: usize,
    /// Seed for the k-means initialization.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// Ascending record counts, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    base: u32,
    #[arg(long, default_value_t = 4)]
    precision: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct TruncateArgs {
    #[arg(long)]
    index: PathBuf,
    /// New precision; must not exceed the index's current precision.
    #[arg(long)]
    precision: usize,
    /// Output path for the truncated index.
    #[arg(long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = u8::from(err.use_stderr());
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Build(args) => cmd_build(args),
        Command::Query(args) => cmd_query(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Truncate(args) => cmd_truncate(args),
    }
}

fn emit(value: &serde_json::Value) {
    println!("{value}");
}

fn load_index(path: &PathBuf) -> Result<MadicIndex, CliError> {
    Ok(MadicIndex::load(path)?)
}

fn bins_per_level(index: &MadicIndex) -> Result<Vec<usize>, CliError> {
    (1..=index.precision())
        .map(|level| Ok(index.bins_at_level(level)?.len()))
        .collect()
}

fn cmd_build(args: BuildArgs) -> CliResult {
    let set = ingest::read_dataset(&args.csv.input, args.csv.id_col.as_deref(), &args.csv.value_cols)?;
    let dim = set.dim();

    let mut spec = if dim == 1 {
        ProjectionSpec::identity(args.seed)
    } else {
        ProjectionSpec::random(dim, args.axis_count, args.seed)?
    };
    let projected: Vec<f64> = set
        .rows
        .iter()
        .map(|row| spec.project(row))
        .collect::<Result<_, _>>()?;
    // Data already in the unit interval encodes at face value (digits stay
    // hand-checkable); anything else is min-max mapped into it.
    if projected.iter().all(|v| (0.0..=1.0).contains(v)) {
        spec.set_bounds(NormalizationBounds::new(0.0, 1.0).expect("constant bounds"));
    } else {
        spec.fit_bounds(&projected)?;
    }
    let unit = normalize(&projected, spec.bounds().expect("bounds were just set"))?;

    let records = set
        .ids
        .iter()
        .zip(&unit)
        .map(|(id, &value)| Ok((id.clone(), encode(value, args.base, args.precision)?)))
        .collect::<Result<Vec<(String, DigitCode)>, BaireError>>()?;
    let index = MadicIndex::build(records, args.base, args.precision)?;
    index.save(&args.index)?;
    spec.save(&args.spec)?;

    eprintln!(
        "indexed {} records of {dim} column(s) from {} ({} projection)",
        index.count(),
        args.csv.input.display(),
        if dim == 1 { "identity" } else { "random-axis" }
    );
    emit(&json!({
        "count": index.count(),
        "base": index.base(),
        "precision": index.precision(),
        "dim": dim,
        "depth_stats": index.depth_stats()?,
        "bins_per_level": bins_per_level(&index)?,
        "index_file": args.index,
        "spec_file": args.spec,
    }));
    Ok(())
}

fn cmd_query(args: QueryArgs) -> CliResult {
    let index = load_index(&args.index)?;
    match args.what {
        QueryCommand::Nn { id: Some(id), .. } => {
            let (neighbor, proximity, stats) = index.nearest_neighbor_stats(&id)?;
            emit(&json!({
                "neighbor": neighbor,
                "distance": proximity.value(),
                "lcp": proximity.lcp(),
                "bin_probes": stats.bin_probes,
            }));
            Ok(())
        }
        QueryCommand::Nn {
            id: None,
            value: Some(value),
        } => {
            if value.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Usage("malformed value vector: non-finite component".into()));
            }
            let spec_path = args.spec.ok_or_else(|| {
                CliError::Usage("--value queries require --spec (written by build)".into())
            })?;
            let spec = ProjectionSpec::load(spec_path)?;
            let (unit, clamped) = spec.unit_scalar(&value)?;
            if clamped {
                eprintln!("note: query value outside the fitted range; clamped before encoding");
            }
            let code = encode(unit, index.base(), index.precision())?;
            let (neighbor, proximity, stats) = index.nearest_neighbor_code_stats(&code)?;
            emit(&json!({
                "neighbor": neighbor,
                "distance": proximity.value(),
                "lcp": proximity.lcp(),
                "bin_probes": stats.bin_probes,
            }));
            Ok(())
        }
        QueryCommand::Nn { id: None, value: None } => {
            Err(CliError::Usage("nn requires --id or --value".into()))
        }
        QueryCommand::Dist { ids } => {
            let [a, b] = ids.as_slice() else {
                return Err(CliError::Usage("dist requires exactly two --id flags".into()));
            };
            let proximity = index.um_distance(a, b)?;
            emit(&json!({"distance": proximity.value(), "lcp": proximity.lcp()}));
            Ok(())
        }
        QueryCommand::Bins { level } => {
            let bins: Vec<serde_json::Value> = index
                .bins_at_level(level)?
                .iter()
                .map(|bin| {
                    json!({
                        "prefix": bin.prefix_label(),
                        "density": bin.density(),
                        "members": bin.members(),
                    })
                })
                .collect();
            emit(&json!({"level": level, "bins": bins}));
            Ok(())
        }
        QueryCommand::Stats => {
            emit(&json!({
                "count": index.count(),
                "base": index.base(),
                "precision": index.precision(),
                "records_scanned": index.records_scanned(),
                "depth_stats": index.depth_stats()?,
                "bins_per_level": bins_per_level(&index)?,
            }));
            Ok(())
        }
    }
}

fn labeling_for(
    index: &MadicIndex,
    level: usize,
    min_density: usize,
) -> Result<gridcluster::ClusterLabeling, CliError> {
    let sorted = gridcluster::sort_by_density(gridcluster::cell_densities(index, level)?);
    let centers = gridcluster::identify_centers(&sorted, min_density);
    Ok(gridcluster::merge_neighbors(index, level, &centers, min_density)?)
}

fn cmd_cluster(args: ClusterArgs) -> CliResult {
    let index = load_index(&args.index)?;
    let labeling = labeling_for(&index, args.level, args.min_density as usize)?;

    let json_text = serde_json::to_string_pretty(&labeling)
        .map_err(|e| CliError::Internal(format!("cannot serialize labeling: {e}")))?;
    std::fs::write(&args.labels_json, json_text + "\n")
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", args.labels_json.display())))?;

    let mut tsv = String::new();
    for (id, assignment) in labeling.labels() {
        let label = match assignment {
            Assignment::Cluster(c) => c.to_string(),
            Assignment::Noise => "noise".to_string(),
        };
        tsv.push_str(&format!("{id}\t{label}\n"));
    }
    std::fs::write(&args.labels_tsv, tsv)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", args.labels_tsv.display())))?;

    eprintln!(
        "level {} at min density {}: {} cluster(s), {} noise record(s)",
        args.level,
        args.min_density,
        labeling.cluster_count(),
        labeling.noise_count()
    );
    emit(&json!({
        "level": labeling.level(),
        "min_density": args.min_density,
        "clusters": labeling.cluster_count(),
        "noise": labeling.noise_count(),
        "labels_json": args.labels_json,
        "labels_tsv": args.labels_tsv,
    }));
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> CliResult {
    let index = load_index(&args.index)?;
    let labeling = labeling_for(&index, args.level, args.min_density as usize)?;

    let set = ingest::read_dataset(&args.csv.input, args.csv.id_col.as_deref(), &args.csv.value_cols)?;
    let mut row_of: HashMap<&str, &Vec<f64>> = HashMap::with_capacity(set.ids.len());
    for (id, row) in set.ids.iter().zip(&set.rows) {
        if row_of.insert(id, row).is_some() {
            return Err(CliError::Data(format!("duplicate id {id:?} in input")));
        }
    }

    // Align raw rows and grid labels to the index's record order; k-means
    // sees the original (pre-projection) coordinates.
    let mut raw = Vec::with_capacity(index.count());
    let mut grid_labels: Vec<i64> = Vec::with_capacity(index.count());
    for id in index.ids() {
        let row = row_of.get(id).ok_or_else(|| {
            CliError::Data(format!("indexed id {id:?} not found in the input file"))
        })?;
        raw.push((*row).clone());
        grid_labels.push(match labeling.assignment(id).expect("labeling covers the index") {
            Assignment::Cluster(c) => c as i64,
            Assignment::Noise => -1,
        });
    }

    let fit = eval::kmeans(&raw, args.k, args.seed, args.max_iters)?;
    let kmeans_labels: Vec<i64> = fit.labels().iter().map(|&l| l as i64).collect();
    let score = eval::rand_index(&grid_labels, &kmeans_labels)?;

    eprintln!(
        "grid: {} cluster(s), {} noise; k-means: k={} converged in {} iteration(s), inertia {:.6}",
        labeling.cluster_count(),
        labeling.noise_count(),
        args.k,
        fit.iterations(),
        fit.inertia()
    );
    emit(
        &serde_json::to_value(score)
            .map_err(|e| CliError::Internal(format!("cannot serialize score: {e}")))?,
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> CliResult {
    let rows = eval::scaling_benchmark(&args.sizes, args.base, args.precision, args.seed)?;
    eprintln!("{:>12} {:>12} {:>12}", "n", "seconds", "reads");
    for row in &rows {
        eprintln!("{:>12} {:>12.6} {:>12}", row.n, row.seconds, row.reads);
    }
    emit(
        &serde_json::to_value(&rows)
            .map_err(|e| CliError::Internal(format!("cannot serialize table: {e}")))?,
    );
    Ok(())
}

fn cmd_truncate(args: TruncateArgs) -> CliResult {
    let index = load_index(&args.index)?;
    let truncated = index.truncated(args.precision)?;
    truncated.save(&args.output)?;
    eprintln!(
        "re-encoded {} records at precision {} (was {})",
        truncated.count(),
        truncated.precision(),
        index.precision()
    );
    emit(&json!({
        "count": truncated.count(),
        "base": truncated.base(),
        "precision": truncated.precision(),
        "output": args.output,
    }));
    Ok(())
}
