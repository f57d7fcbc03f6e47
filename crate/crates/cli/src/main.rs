//! Command line front end: ingest records, build preference matrices, rank,
//! evaluate, correlate, and run the axiom checks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use prefrank::pipeline::{
    self, grid_to_json, render_eval, render_grid, render_kendall, render_ranking, render_stats,
    ErrorCategory, PipelineError, RunConfig, Stage,
};
use prefrank::prefmodel::Granularity;
use prefrank::scoring::{Method, SolveOptions};

#[derive(Parser)]
#[command(
    name = "prefrank",
    version,
    about = "Rank objects from the pairwise preferences revealed by ranked application lists"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse application records and report per-year statistics
    Ingest(CommonArgs),
    /// Build preference matrices and save them (triplet CSV or dense JSON)
    Build(CommonArgs),
    /// Score the compared objects and emit strict rankings
    Rank(CommonArgs),
    /// Count the preferences contradicting each ranking
    Eval(CommonArgs),
    /// Kendall rank correlations between all rankings of a year
    Kendall(CommonArgs),
    /// Check the four scoring axioms and emit the verdict grid
    Axioms(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Input record files (comma- or tab-delimited, with a header row)
    #[arg(value_name = "FILE")]
    inputs: Vec<PathBuf>,

    /// Prebuilt preference matrix instead of raw records
    #[arg(long, value_name = "FILE")]
    matrix_in: Option<PathBuf>,

    /// Compared objects: faculty, course, institution, or programme
    #[arg(long, default_value = "faculty")]
    granularity: String,

    /// Weighting schemes: uw, w, mw, auw, aw, amw (comma separated)
    #[arg(long, value_delimiter = ',', default_value = "uw")]
    scheme: Vec<String>,

    /// Scoring methods: rs, nrs, ls (comma separated)
    #[arg(long, value_delimiter = ',', default_value = "rs,nrs,ls")]
    method: Vec<String>,

    /// Only process these years (comma separated)
    #[arg(long, value_delimiter = ',')]
    year: Vec<i32>,

    /// Output directory; tables print to stdout when omitted
    #[arg(long, short)]
    out: Option<PathBuf>,

    /// Object roster file fixing the matrix order (one key per line)
    #[arg(long)]
    roster: Option<PathBuf>,

    /// Alias file merging renamed object keys (`from,to` rows)
    #[arg(long)]
    alias_map: Option<PathBuf>,

    /// Seed for the randomized axiom trials
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Randomized trials per axiom-grid cell
    #[arg(long, default_value_t = 200)]
    trials: usize,

    /// Relative residual tolerance of the least-squares solver
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,

    /// Score-equality tolerance in axiom checks (exact inputs compare exactly)
    #[arg(long, default_value_t = 1e-9)]
    equality_tolerance: f64,

    /// Largest exact denominator before weights degrade to floating point
    #[arg(long, default_value_t = 1_000_000_000_000)]
    denominator_bound: u64,

    /// Skip exact arithmetic and aggregate in floating point
    #[arg(long)]
    float: bool,

    /// Abort when more than this fraction of rows is malformed
    #[arg(long, default_value_t = 0.01)]
    max_bad_ratio: f64,

    /// Emit structured JSON instead of delimited text
    #[arg(long)]
    json: bool,

    /// Save matrices as dense JSON (at most 64 objects)
    #[arg(long)]
    dense_json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 = parse, 3 = validate, 4 = solve, 5 = io.
fn exit_code(error: &PipelineError) -> u8 {
    match error.category() {
        ErrorCategory::Parse => 2,
        ErrorCategory::Validate => 3,
        ErrorCategory::Solve => 4,
        ErrorCategory::Io => 5,
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let (args, stages): (&CommonArgs, &[Stage]) = match &cli.command {
        Command::Ingest(a) => (a, &[Stage::Ingest]),
        Command::Build(a) => (a, &[Stage::Build]),
        Command::Rank(a) => (a, &[Stage::Rank]),
        Command::Eval(a) => (a, &[Stage::Eval]),
        Command::Kendall(a) => (a, &[Stage::Kendall]),
        Command::Axioms(a) => (a, &[Stage::Axioms]),
    };
    if matches!(cli.command, Command::Build(_)) && args.out.is_none() {
        return Err(PipelineError::Config("build requires --out".into()));
    }

    let config = to_config(args)?;
    let bundle = pipeline::run_stages(&config, stages)?;

    for warning in &bundle.warnings {
        eprintln!("warning: {warning}");
    }
    for diagnostic in &bundle.diagnostics {
        eprintln!("diagnostic: {diagnostic}");
    }

    if config.output_dir.is_some() {
        eprintln!("wrote {} file(s)", bundle.written.len());
        return Ok(());
    }

    // stdout rendering
    match cli.command {
        Command::Ingest(_) => {
            if config.json {
                print_json(serde_json::json!({
                    "stats": bundle.stats,
                    "diagnostics": bundle.diagnostics,
                }));
            } else {
                print!("{}", render_stats(&bundle.stats));
            }
        }
        Command::Build(_) => unreachable!("build always writes files"),
        Command::Rank(_) => {
            if config.json {
                let rankings: Vec<serde_json::Value> = bundle
                    .years
                    .iter()
                    .flat_map(|y| {
                        y.rankings.iter().map(move |a| {
                            serde_json::json!({
                                "year": y.label(),
                                "scheme": a.scheme,
                                "method": a.method.label(),
                                "ranking": a.table,
                            })
                        })
                    })
                    .collect();
                print_json(serde_json::json!({ "rankings": rankings }));
            } else {
                for year in &bundle.years {
                    for artifact in &year.rankings {
                        println!(
                            "# year {} scheme {} method {}",
                            year.label(),
                            artifact.scheme,
                            artifact.method.label()
                        );
                        print!("{}", render_ranking(&artifact.table));
                    }
                }
            }
        }
        Command::Eval(_) => {
            if config.json {
                let reports: Vec<serde_json::Value> = bundle
                    .years
                    .iter()
                    .flat_map(|y| {
                        y.rankings.iter().filter_map(move |a| {
                            a.contradictions.as_ref().map(|r| {
                                serde_json::json!({
                                    "year": y.label(),
                                    "scheme": a.scheme,
                                    "method": a.method.label(),
                                    "report": r,
                                })
                            })
                        })
                    })
                    .collect();
                print_json(serde_json::json!({ "eval": reports }));
            } else {
                for year in &bundle.years {
                    print!("{}", render_eval(year));
                }
            }
        }
        Command::Kendall(_) => {
            if config.json {
                let tables: Vec<serde_json::Value> = bundle
                    .years
                    .iter()
                    .filter_map(|y| {
                        y.kendall.as_ref().map(|t| {
                            serde_json::json!({
                                "year": y.label(),
                                "labels": t.labels,
                                "taus": t.taus,
                            })
                        })
                    })
                    .collect();
                print_json(serde_json::json!({ "kendall": tables }));
            } else {
                for year in &bundle.years {
                    if let Some(table) = &year.kendall {
                        println!("# year {}", year.label());
                        print!("{}", render_kendall(table));
                    }
                }
            }
        }
        Command::Axioms(_) => {
            let grid = bundle
                .grid
                .as_ref()
                .expect("axioms stage computes the grid");
            if config.json {
                print_json(grid_to_json(grid));
            } else {
                print!("{}", render_grid(grid));
            }
        }
    }
    Ok(())
}

fn print_json(doc: serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).expect("serializable document")
    );
}

fn to_config(args: &CommonArgs) -> Result<RunConfig, PipelineError> {
    let validate = |e: String| PipelineError::Config(e);
    let granularity: Granularity = args
        .granularity
        .parse()
        .map_err(|e| validate(format!("{e}")))?;
    let schemes = args
        .scheme
        .iter()
        .map(|s| s.parse().map_err(|e| validate(format!("{e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let methods = args
        .method
        .iter()
        .map(|m| m.parse::<Method>().map_err(|e| validate(format!("{e}"))))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(RunConfig {
        inputs: args.inputs.clone(),
        matrix_in: args.matrix_in.clone(),
        granularity,
        schemes,
        methods,
        years: if args.year.is_empty() {
            None
        } else {
            Some(args.year.clone())
        },
        output_dir: args.out.clone(),
        roster: args.roster.clone(),
        alias_map: args.alias_map.clone(),
        seed: args.seed,
        trials: args.trials,
        solve: SolveOptions {
            tolerance: args.tolerance,
            ..SolveOptions::default()
        },
        equality_tolerance: args.equality_tolerance,
        denominator_bound: args.denominator_bound,
        force_approx: args.float,
        max_bad_ratio: args.max_bad_ratio,
        json: args.json,
        dense_json: args.dense_json,
    })
}
