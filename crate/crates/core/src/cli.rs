//! The `skycube` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{self, GeneratorConfig};
use crate::emerging::{
    abridge, closed_emerging, closed_emerging_l, emerging_by_block, emerging_skycube, l_border,
    merge_materializations, EmergingCell, MergedRelation, ThresholdSpec,
};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::materialize::build_skyline_lattice;
use crate::persist;
use crate::relation::{load_relation_path, split_by_property, Relation};
use crate::schema::Schema;
use crate::skyline::{full_skycube, SkycubeLimits};

/// Environment variable giving the default worker-thread count.
pub const THREADS_ENV: &str = "SKYCUBE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "skycube", version, about = "Skylines, Skycubes and emerging Skycubes")]
pub struct Cli {
    #[command(flatten)]
    pub schema: SchemaArgs,

    /// Worker threads (defaults to $SKYCUBE_THREADS, then the CPU count).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SchemaArgs {
    /// Schema file (TOML).
    #[arg(long, global = true)]
    pub schema: Option<PathBuf>,
    /// Dimension columns, comma separated (when no schema file is given).
    #[arg(long, global = true, value_delimiter = ',')]
    pub dims: Vec<String>,
    /// Criterion as `name[:min|max[:symbol]]`; repeatable.
    #[arg(long = "criterion", global = true)]
    pub criteria: Vec<String>,
    /// Split property as `column:first:second`.
    #[arg(long, global = true)]
    pub split: Option<String>,
    /// Measure pair labels as `name:side1:side2`; repeatable.
    #[arg(long = "measure", global = true)]
    pub measures: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SideArg {
    First,
    Second,
}

#[derive(Debug, Args)]
pub struct RelationInput {
    /// Relation as comma-separated text with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Use one class of the schema's split property instead of all rows.
    #[arg(long, value_enum)]
    pub side: Option<SideArg>,
}

#[derive(Debug, Args)]
pub struct PairInput {
    /// Materialization document of the first relation.
    #[arg(long, requires = "second", conflicts_with = "input")]
    pub first: Option<PathBuf>,
    /// Materialization document of the second relation.
    #[arg(long, requires = "first")]
    pub second: Option<PathBuf>,
    /// One relation split on the schema's split property.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BorderKind {
    L,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BenchKind {
    Size,
    Query,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full Skycube of a relation.
    Skycube {
        #[command(flatten)]
        relation: RelationInput,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Skyline-concept materialization of a relation.
    Materialize {
        #[command(flatten)]
        relation: RelationInput,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Skyline of one subspace answered from a materialization.
    Query {
        #[arg(long)]
        materialization: PathBuf,
        /// Criterion symbols, e.g. `DL`.
        #[arg(long)]
        subspace: String,
    },
    /// Merge two materializations into one relation padded with ALL.
    Merge {
        #[command(flatten)]
        pair: PairInput,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Abridge a merged relation.
    Abridge {
        #[arg(long)]
        merged: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Emerging Skycube and its reduced representations.
    Emerge {
        #[command(flatten)]
        pair: PairInput,
        /// Merged (or abridged) relation document instead of a pair.
        #[arg(long, conflicts_with_all = ["first", "input"])]
        merged: Option<PathBuf>,
        /// First-side threshold `Measure=value`; repeatable.
        #[arg(long = "t1")]
        t1: Vec<String>,
        /// Second-side threshold `Measure=value`; repeatable.
        #[arg(long = "t2")]
        t2: Vec<String>,
        #[arg(long, value_enum)]
        borders: Option<BorderKind>,
        #[arg(long)]
        closed: bool,
        #[arg(long = "closed-l")]
        closed_l: bool,
        /// Evaluate each origin-subspace block of the unabridged relation.
        #[arg(long = "per-block")]
        per_block: bool,
        /// Measures evaluated in per-block mode (default: all with thresholds).
        #[arg(long = "only")]
        only: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Synthetic experiments; prints comma-separated report rows.
    Bench {
        #[arg(value_enum)]
        kind: BenchKind,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        d: usize,
        /// Criterion cardinalities; comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [100u32, 1000, 10000])]
        k: Vec<u32>,
        /// Number of generator seeds (0..seeds).
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Sampled queries per point.
        #[arg(long, default_value_t = 100)]
        queries: usize,
        /// Seed of the query sampler.
        #[arg(long, default_value_t = 0)]
        query_seed: u64,
    },
    /// Write a worked example and its expected outputs.
    Fixtures {
        #[arg(long, value_enum)]
        case: FixtureCase,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FixtureCase {
    Pokemon,
}

/// An error tagged with the pipeline stage that raised it.
#[derive(Debug)]
pub struct Failure {
    pub stage: &'static str,
    pub error: Error,
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, Failure>;
}

impl<T> Stage<T> for Result<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, Failure> {
        self.map_err(|error| Failure { stage, error })
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` and runs the command, writing primary output to `stdout`
/// and diagnostics to `stderr`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "skycube: {}: {}", f.stage, f.error);
            match f.error {
                Error::Usage(_) => 2,
                _ => 1,
            }
        }
    }
}

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    let threads = match threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| Failure {
                stage: "configuration",
                error: Error::Usage(format!("{THREADS_ENV} must be a positive integer")),
            })?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(Failure {
                stage: "configuration",
                error: Error::Usage("thread count must be at least 1".into()),
            });
        }
        // The global pool can only be set once per process; later calls keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(())
}

fn load_schema(args: &SchemaArgs) -> Result<Arc<Schema>> {
    let schema = match &args.schema {
        Some(path) => {
            if !args.criteria.is_empty() || !args.dims.is_empty() || args.split.is_some() || !args.measures.is_empty() {
                return Err(Error::Usage("--schema cannot be combined with schema flags".into()));
            }
            Schema::from_toml(&fs::read_to_string(path)?)?
        }
        None if args.criteria.is_empty() => {
            return Err(Error::Usage("give --schema FILE or at least one --criterion".into()))
        }
        None => Schema::from_flags(&args.dims, &args.criteria, args.split.as_deref(), &args.measures)?,
    };
    Ok(Arc::new(schema))
}

fn load_input(schema: &SchemaArgs, input: &RelationInput) -> Result<Relation> {
    let r = load_relation_path(&input.input, load_schema(schema)?)?;
    match input.side {
        None => Ok(r),
        Some(side) => {
            let s = split_by_property(&r)?;
            Ok(match side {
                SideArg::First => s.first,
                SideArg::Second => s.second,
            })
        }
    }
}

fn emit(output: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn merged_from_pair(schema: &SchemaArgs, pair: &PairInput) -> CliResult<MergedRelation> {
    let limits = SkycubeLimits::default();
    match (&pair.first, &pair.second, &pair.input) {
        (Some(a), Some(b), None) => {
            let m1 = read(a).and_then(|t| persist::parse_materialization(&t)).stage("load first")?;
            let m2 = read(b).and_then(|t| persist::parse_materialization(&t)).stage("load second")?;
            merge_materializations(&m1.skycube, &m2.skycube, &m1.relation, &m2.relation).stage("merge")
        }
        (None, None, Some(input)) => {
            let r = load_relation_path(input, load_schema(schema).stage("schema")?).stage("ingest")?;
            let s = split_by_property(&r).stage("split")?;
            let m1 = build_skyline_lattice(&s.first, limits).stage("materialize first")?;
            let m2 = build_skyline_lattice(&s.second, limits).stage("materialize second")?;
            merge_materializations(&m1, &m2, &s.first, &s.second).stage("merge")
        }
        _ => Err(Failure {
            stage: "arguments",
            error: Error::Usage("give --first and --second, or --input".into()),
        }),
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    configure_threads(cli.threads)?;
    let limits = SkycubeLimits::default();
    match cli.command {
        Command::Skycube { relation, output } => {
            let r = load_input(&cli.schema, &relation).stage("ingest")?;
            let cube = full_skycube(&r, limits).stage("skycube")?;
            let text = persist::write_skycube(&cube, r.schema()).stage("write")?;
            emit(output.as_deref(), &text, stdout).stage("write")
        }
        Command::Materialize { relation, output } => {
            let r = load_input(&cli.schema, &relation).stage("ingest")?;
            let m = build_skyline_lattice(&r, limits).stage("materialize")?;
            let text = persist::write_materialization(&m, &r).stage("write")?;
            emit(output.as_deref(), &text, stdout).stage("write")
        }
        Command::Query {
            materialization,
            subspace,
        } => {
            let stored = read(&materialization)
                .and_then(|t| persist::parse_materialization(&t))
                .stage("load")?;
            let set = stored.relation.schema().parse_set(&subspace).stage("arguments")?;
            let answer =
                crate::materialize::query_skyline(&stored.skycube, &stored.relation, set).stage("query")?;
            let text = persist::write_query_answer(&stored.relation, set, &answer.members).stage("write")?;
            emit(None, &text, stdout).stage("write")
        }
        Command::Merge { pair, output } => {
            let mr = merged_from_pair(&cli.schema, &pair)?;
            let text = persist::write_merged(&mr).stage("write")?;
            emit(output.as_deref(), &text, stdout).stage("write")
        }
        Command::Abridge { merged, output } => {
            let mr = read(&merged).and_then(|t| persist::parse_merged(&t)).stage("load")?;
            let text = persist::write_merged(&abridge(&mr)).stage("write")?;
            emit(output.as_deref(), &text, stdout).stage("write")
        }
        Command::Emerge {
            pair,
            merged,
            t1,
            t2,
            borders,
            closed,
            closed_l,
            per_block,
            only,
            output,
        } => {
            let thresholds = ThresholdSpec::from_pairs(&t1, &t2).stage("arguments")?;
            let mr = match merged {
                Some(path) => read(&path).and_then(|t| persist::parse_merged(&t)).stage("load")?,
                None => merged_from_pair(&cli.schema, &pair)?,
            };
            let text = if per_block {
                emerge_per_block(&mr, &thresholds, &only)?
            } else {
                let options = EmergeOptions {
                    border: borders == Some(BorderKind::L),
                    closed,
                    closed_l,
                };
                emerge_text(&mr, &thresholds, options)?
            };
            emit(output.as_deref(), &text, stdout).stage("write")
        }
        Command::Bench {
            kind,
            n,
            d,
            k,
            seeds,
            queries,
            query_seed,
        } => {
            let mut text = String::new();
            match kind {
                BenchKind::Size => {
                    text.push_str(bench::SIZE_REPORT_HEADER);
                    text.push('\n');
                    for &k in &k {
                        for seed in 0..seeds {
                            let p = bench::bench_size_point(GeneratorConfig { n, d, k, seed }).stage("bench")?;
                            text.push_str(&bench::size_report_line(&p));
                            text.push('\n');
                        }
                    }
                }
                BenchKind::Query => {
                    text.push_str(bench::QUERY_REPORT_HEADER);
                    text.push('\n');
                    for &k in &k {
                        for seed in 0..seeds {
                            let p = bench::bench_query(GeneratorConfig { n, d, k, seed }, queries, query_seed)
                                .stage("bench")?;
                            text.push_str(&bench::query_report_line(&p));
                            text.push('\n');
                        }
                    }
                }
            }
            emit(None, &text, stdout).stage("write")
        }
        Command::Fixtures { case, out } => match case {
            FixtureCase::Pokemon => write_pokemon_fixtures(&out),
        },
    }
}

/// Sections printed by `emerge`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmergeOptions {
    pub border: bool,
    pub closed: bool,
    pub closed_l: bool,
}

/// Abridges `mr` when it still has shared columns, then renders the
/// emerging Skycube and the requested representations.
pub fn emerge_text(mr: &MergedRelation, thresholds: &ThresholdSpec, options: EmergeOptions) -> CliResult<String> {
    let ab = if mr.shared.is_empty() { mr.clone() } else { abridge(mr) };
    let cells = emerging_skycube(&ab, thresholds).stage("emerge")?;
    let mut sections: Vec<(&str, Vec<EmergingCell>)> = vec![("emerging", cells.clone())];
    if options.border {
        sections.push(("l-border", l_border(&cells)));
    }
    if options.closed {
        sections.push(("closed", closed_emerging(&ab, &cells).stage("closure")?));
    }
    if options.closed_l {
        sections.push(("closed-l", closed_emerging_l(&ab, &cells).stage("closure")?));
    }
    persist::write_emerging(&ab.schema, &sections).stage("write")
}

fn emerge_per_block(mr: &MergedRelation, thresholds: &ThresholdSpec, only: &[String]) -> CliResult<String> {
    let schema = &mr.schema;
    let measures = if only.is_empty() {
        thresholds
            .thresholds
            .keys()
            .map(|name| {
                schema
                    .criterion_index(name)
                    .ok_or_else(|| Error::config(format!("`{name}` is not a criterion")))
            })
            .collect::<Result<Vec<_>>>()
    } else {
        only.iter()
            .map(|name| {
                schema
                    .criterion_index(name)
                    .ok_or_else(|| Error::Usage(format!("`{name}` is not a criterion")))
            })
            .collect::<Result<Vec<_>>>()
    }
    .stage("arguments")?;
    let mut measures = measures;
    measures.sort_unstable();
    let blocks = emerging_by_block(mr, thresholds, &measures).stage("emerge")?;
    let titles: Vec<String> = blocks
        .iter()
        .map(|(b, _)| format!("block {}", schema.format_set(*b)))
        .collect();
    let sections: Vec<(&str, Vec<EmergingCell>)> = titles
        .iter()
        .zip(blocks)
        .map(|(t, (_, cells))| (t.as_str(), cells))
        .collect();
    persist::write_emerging(schema, &sections).stage("write")
}

/// Thresholds of the worked example.
pub fn pokemon_thresholds() -> ThresholdSpec {
    ThresholdSpec::new([
        ("Duration".to_string(), (35.0, 35.0)),
        ("Loss".to_string(), (45.0, 45.0)),
    ])
    .expect("valid thresholds")
}

fn write_pokemon_fixtures(out: &Path) -> CliResult<()> {
    let io = |r: std::io::Result<()>| r.map_err(Error::from).stage("write");
    io(fs::create_dir_all(out))?;
    let limits = SkycubeLimits::default();
    let split = fixtures::pokemon_split().stage("split")?;
    let mut files: Vec<(String, String)> = vec![
        ("pokemon.toml".into(), fixtures::POKEMON_SCHEMA.to_string()),
        ("pokemon.csv".into(), fixtures::POKEMON_CSV.to_string()),
    ];
    let mut materialized = Vec::new();
    for (name, r) in [("pokemon1", &split.first), ("pokemon2", &split.second)] {
        let mut csv = Vec::new();
        r.write_csv(&mut csv).stage("write")?;
        files.push((format!("{name}.csv"), String::from_utf8(csv).expect("csv output is UTF-8")));
        let cube = full_skycube(r, limits).stage("skycube")?;
        files.push((format!("{name}.skycube"), persist::write_skycube(&cube, r.schema()).stage("write")?));
        let m = build_skyline_lattice(r, limits).stage("materialize")?;
        files.push((format!("{name}.materialization"), persist::write_materialization(&m, r).stage("write")?));
        materialized.push(m);
    }
    let mr = merge_materializations(&materialized[0], &materialized[1], &split.first, &split.second)
        .stage("merge")?;
    files.push(("merged.txt".into(), persist::write_merged(&mr).stage("write")?));
    files.push(("abridged.txt".into(), persist::write_merged(&abridge(&mr)).stage("write")?));
    let options = EmergeOptions {
        border: true,
        closed: true,
        closed_l: true,
    };
    files.push(("emerging.txt".into(), emerge_text(&mr, &pokemon_thresholds(), options)?));
    let loss = ThresholdSpec::new([("Loss".to_string(), (45.0, 45.0))]).expect("valid thresholds");
    files.push(("emerging-loss-per-block.txt".into(), emerge_per_block(&mr, &loss, &[])?));
    for (name, text) in files {
        io(fs::write(out.join(name), text))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn bad_flags_are_usage_errors() {
        let (code, _, err) = run_capture(&["skycube", "query", "--bogus"]);
        assert_eq!(code, 2);
        assert!(!err.is_empty());
        let (code, _, _) = run_capture(&["skycube", "emerge", "--t1", "Loss"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn missing_files_are_semantic_failures() {
        let (code, _, err) = run_capture(&["skycube", "query", "--materialization", "/nonexistent", "--subspace", "R"]);
        assert_eq!(code, 1);
        assert!(err.contains("load"));
    }

    #[test]
    fn help_exits_cleanly() {
        let (code, out, _) = run_capture(&["skycube", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("materialize"));
    }
}
