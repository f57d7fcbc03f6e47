//! End-to-end orchestration: ingest records, build matrices per scheme,
//! score, rank, evaluate, and emit tables, per year.
//!
//! Every artifact is reproducible: outputs depend only on the configuration
//! and inputs, files carry a configuration digest in their header, and the
//! single timestamp is confined to one header line. Years are processed
//! independently (and in parallel with the `parallel` feature).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::axiomlab::{axiom_grid, Axiom, AxiomError, GridReport, Outcome, TrialConfig, Violation};
use crate::graphcore::{components, derive, GraphError, RankingProblem};
use crate::ingest::{ingest, Cohort, CohortStats, Diagnostic, IngestError, IngestOptions};
use crate::matrixio::{self, MatrixIoError};
use crate::metrics::{contradictions, kendall, ContradictionReport, MetricsError};
use crate::prefmodel::{
    aggregate, AggregateOptions, Granularity, ObjectKey, ObjectUniverse, PrefError, WeightingScheme,
};
use crate::scoring::{
    least_squares, normalized_row_sum, rank, row_sum, Method, RankingTable, ScoringError,
    SolveOptions,
};
use crate::value::Value;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Pref(#[from] PrefError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Axiom(#[from] AxiomError),
    #[error(transparent)]
    MatrixIo(#[from] MatrixIoError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Failure categories, mapped to process exit codes by the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCategory {
    Parse,
    Validate,
    Solve,
    Io,
}

impl PipelineError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            PipelineError::Ingest(IngestError::Io { .. }) => ErrorCategory::Io,
            PipelineError::Ingest(_) | PipelineError::MatrixIo(_) => ErrorCategory::Parse,
            PipelineError::Scoring(ScoringError::NonConvergence { .. }) => ErrorCategory::Solve,
            PipelineError::Config(_)
            | PipelineError::Pref(_)
            | PipelineError::Graph(_)
            | PipelineError::Scoring(_)
            | PipelineError::Metrics(_)
            | PipelineError::Axiom(_) => ErrorCategory::Validate,
            PipelineError::Io { .. } => ErrorCategory::Io,
        }
    }
}

/// Pipeline stages; each writes only its own artifacts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Build,
    Rank,
    Eval,
    Kendall,
    Axioms,
}

/// Full run configuration, mirrored by the CLI flags.
#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Delimited record files.
    pub inputs: Vec<PathBuf>,
    /// Prebuilt preference matrix instead of raw records.
    pub matrix_in: Option<PathBuf>,
    pub granularity: Granularity,
    pub schemes: Vec<WeightingScheme>,
    pub methods: Vec<Method>,
    /// Restrict processing to these years.
    pub years: Option<Vec<i32>>,
    /// Where artifacts are written; in-memory only when `None`.
    pub output_dir: Option<PathBuf>,
    /// Explicit object roster fixing the matrix order.
    pub roster: Option<PathBuf>,
    /// Faculty-key alias file (`from,to` rows).
    pub alias_map: Option<PathBuf>,
    pub seed: u64,
    /// Randomized trials per axiom-grid cell.
    pub trials: usize,
    pub solve: SolveOptions,
    /// Score-equality tolerance in axiom checks.
    pub equality_tolerance: f64,
    pub denominator_bound: u64,
    pub force_approx: bool,
    pub max_bad_ratio: f64,
    /// Structured JSON artifacts instead of delimited text.
    pub json: bool,
    /// Dense JSON matrix files instead of sparse triplets.
    pub dense_json: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: Vec::new(),
            matrix_in: None,
            granularity: Granularity::Faculty,
            schemes: vec!["uw".parse().expect("valid scheme")],
            methods: Method::ALL.to_vec(),
            years: None,
            output_dir: None,
            roster: None,
            alias_map: None,
            seed: 0,
            trials: 200,
            solve: SolveOptions::default(),
            equality_tolerance: 1e-9,
            denominator_bound: AggregateOptions::default().denominator_bound,
            force_approx: false,
            max_bad_ratio: 0.01,
            json: false,
            dense_json: false,
        }
    }
}

impl RunConfig {
    fn validate(&self, stages: &[Stage]) -> Result<(), PipelineError> {
        if self.schemes.is_empty() {
            return Err(PipelineError::Config(
                "at least one scheme is required".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(PipelineError::Config(
                "at least one method is required".into(),
            ));
        }
        let needs_input = stages.iter().any(|s| !matches!(s, Stage::Axioms));
        if needs_input && self.inputs.is_empty() && self.matrix_in.is_none() {
            return Err(PipelineError::Config(
                "no input: pass record files or a prebuilt matrix".into(),
            ));
        }
        Ok(())
    }

    /// Digest of everything that determines the outputs, for the file
    /// headers.
    pub fn digest(&self) -> String {
        let mut text = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(text, "{k}={v}");
        };
        put(
            "inputs",
            self.inputs
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(";"),
        );
        put(
            "matrix_in",
            self.matrix_in
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        put("granularity", self.granularity.to_string());
        put(
            "schemes",
            self.schemes
                .iter()
                .map(|s| s.label().to_string())
                .collect::<Vec<_>>()
                .join(";"),
        );
        put(
            "methods",
            self.methods
                .iter()
                .map(|m| m.label().to_string())
                .collect::<Vec<_>>()
                .join(";"),
        );
        put(
            "years",
            self.years
                .as_ref()
                .map(|y| y.iter().map(i32::to_string).collect::<Vec<_>>().join(";"))
                .unwrap_or_default(),
        );
        put(
            "roster",
            self.roster
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        put(
            "alias_map",
            self.alias_map
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        put("seed", self.seed.to_string());
        put("trials", self.trials.to_string());
        put("tolerance", format!("{:e}", self.solve.tolerance));
        put(
            "equality_tolerance",
            format!("{:e}", self.equality_tolerance),
        );
        put("denominator_bound", self.denominator_bound.to_string());
        put("force_approx", self.force_approx.to_string());
        put("max_bad_ratio", self.max_bad_ratio.to_string());
        put("json", self.json.to_string());
        put("dense_json", self.dense_json.to_string());
        let hash = Sha256::digest(text.as_bytes());
        hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    fn aggregate_options(&self) -> AggregateOptions {
        AggregateOptions {
            denominator_bound: self.denominator_bound,
            force_approx: self.force_approx,
        }
    }

    fn trial_config(&self) -> TrialConfig {
        TrialConfig {
            trials: self.trials,
            seed: self.seed,
            tolerance: self.equality_tolerance,
            solve: self.solve.clone(),
        }
    }
}

/// Matrices built for one year, labeled by scheme.
type SchemeMatrices = Vec<(String, RankingProblem)>;

/// Scored, ranked, and evaluated output for one (scheme, method) pair.
#[derive(Clone, Debug)]
pub struct RankingArtifact {
    pub scheme: String,
    pub method: Method,
    pub table: RankingTable,
    pub contradictions: Option<ContradictionReport>,
}

/// Kendall correlations between all rankings of one year, upper triangle.
#[derive(Clone, Debug)]
pub struct KendallTable {
    pub labels: Vec<String>,
    pub taus: Vec<Vec<Option<f64>>>,
}

/// Artifacts of one year (or of the single prebuilt matrix).
#[derive(Clone, Debug)]
pub struct YearArtifacts {
    /// `None` for a prebuilt matrix run.
    pub year: Option<i32>,
    pub rankings: Vec<RankingArtifact>,
    pub kendall: Option<KendallTable>,
}

impl YearArtifacts {
    pub fn label(&self) -> String {
        match self.year {
            Some(y) => y.to_string(),
            None => "matrix".to_string(),
        }
    }
}

/// Everything a run produced.
#[derive(Clone, Debug, Default)]
pub struct ArtifactBundle {
    pub stats: Vec<CohortStats>,
    pub diagnostics: Vec<Diagnostic>,
    pub warnings: Vec<String>,
    pub years: Vec<YearArtifacts>,
    pub grid: Option<GridReport>,
    pub written: Vec<PathBuf>,
}

/// Runs the full pipeline: ingest, rank, evaluate, correlate, and check
/// axioms. Matrices are written only by the dedicated build stage.
pub fn run_pipeline(config: &RunConfig) -> Result<ArtifactBundle, PipelineError> {
    run_stages(
        config,
        &[
            Stage::Ingest,
            Stage::Rank,
            Stage::Eval,
            Stage::Kendall,
            Stage::Axioms,
        ],
    )
}

/// Runs the requested stages (dependencies are computed as needed but only
/// requested stages write files).
pub fn run_stages(config: &RunConfig, stages: &[Stage]) -> Result<ArtifactBundle, PipelineError> {
    config.validate(stages)?;
    let mut bundle = ArtifactBundle::default();
    let digest = config.digest();

    let wants = |stage: Stage| stages.contains(&stage);
    let needs_matrices =
        wants(Stage::Build) || wants(Stage::Rank) || wants(Stage::Eval) || wants(Stage::Kendall);

    // ingest (or matrix load)
    let mut years: Vec<(Option<i32>, SchemeMatrices)> = Vec::new();
    if let Some(matrix_path) = &config.matrix_in {
        let problem = matrixio::load_matrix(matrix_path, config.granularity)?;
        let (problem, dropped) = problem.drop_isolated();
        warn_dropped(&mut bundle.warnings, "matrix", "in", &dropped);
        match problem {
            Some(problem) => years.push((None, vec![("matrix".to_string(), problem)])),
            None => bundle
                .warnings
                .push("matrix/in: no object has any preference; nothing to rank".into()),
        }
    } else if !config.inputs.is_empty() {
        let mut options = IngestOptions {
            granularity: config.granularity,
            max_bad_ratio: config.max_bad_ratio,
            ..Default::default()
        };
        if let Some(alias_path) = &config.alias_map {
            options.aliases = crate::ingest::load_aliases(alias_path)?;
        }
        let ingested = ingest(&config.inputs, &options)?;
        bundle.diagnostics = ingested.diagnostics.clone();
        let roster = match &config.roster {
            Some(path) => Some(load_roster(path, config.granularity)?),
            None => None,
        };
        for (&year, cohort) in &ingested.cohorts {
            if let Some(filter) = &config.years {
                if !filter.contains(&year) {
                    continue;
                }
            }
            bundle.stats.push(cohort.stats(year));
            if needs_matrices {
                let mut built = Vec::new();
                for scheme in &config.schemes {
                    let problem = build_matrix(config, cohort, *scheme, roster.clone())?;
                    let (problem, dropped) = problem.drop_isolated();
                    warn_dropped(
                        &mut bundle.warnings,
                        &year.to_string(),
                        scheme.label(),
                        &dropped,
                    );
                    match problem {
                        Some(problem) => built.push((scheme.label().to_string(), problem)),
                        None => bundle.warnings.push(format!(
                            "{year}/{}: no object has any preference; scheme skipped",
                            scheme.label()
                        )),
                    }
                }
                years.push((Some(year), built));
            }
        }
    }

    // per-year scoring, evaluation, and correlation
    if needs_matrices {
        let rank_years: Vec<Result<YearArtifacts, PipelineError>> = {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                years
                    .par_iter()
                    .map(|(year, built)| score_year(config, *year, built, wants(Stage::Kendall)))
                    .collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                years
                    .iter()
                    .map(|(year, built)| score_year(config, *year, built, wants(Stage::Kendall)))
                    .collect()
            }
        };
        for artifacts in rank_years {
            let artifacts = artifacts?;
            if wants(Stage::Kendall) && artifacts.kendall.is_none() && artifacts.rankings.len() > 1
            {
                bundle.warnings.push(format!(
                    "{}: rankings cover different object sets after dropping \
                     preference-less objects; no correlation table",
                    artifacts.label()
                ));
            }
            bundle.years.push(artifacts);
        }
    }

    if wants(Stage::Axioms) {
        bundle.grid = Some(axiom_grid(&config.trial_config())?);
    }

    // write requested artifacts
    if let Some(dir) = &config.output_dir {
        fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
            path: dir.clone(),
            source,
        })?;
        let stamp = timestamp_line();
        let mut written = Vec::new();
        if wants(Stage::Ingest) && config.matrix_in.is_none() {
            written.push(write_stats(config, dir, &digest, &stamp, &bundle)?);
        }
        if wants(Stage::Build) {
            for (year, built) in &years {
                let label = year
                    .map(|y| y.to_string())
                    .unwrap_or_else(|| "matrix".into());
                for (scheme, problem) in built {
                    written.extend(write_matrix(
                        config, dir, &digest, &stamp, &label, scheme, problem,
                    )?);
                }
            }
        }
        for artifacts in &bundle.years {
            if wants(Stage::Rank) {
                for artifact in &artifacts.rankings {
                    written.push(write_ranking(
                        config, dir, &digest, &stamp, artifacts, artifact,
                    )?);
                }
            }
            if wants(Stage::Eval) {
                written.push(write_eval(config, dir, &digest, &stamp, artifacts)?);
            }
            if wants(Stage::Kendall) {
                if let Some(kendall_table) = &artifacts.kendall {
                    written.push(write_kendall(
                        config,
                        dir,
                        &digest,
                        &stamp,
                        &artifacts.label(),
                        kendall_table,
                    )?);
                }
            }
        }
        if wants(Stage::Axioms) {
            if let Some(grid) = &bundle.grid {
                written.push(write_grid(config, dir, &digest, &stamp, grid)?);
            }
        }
        bundle.written = written;
    }

    Ok(bundle)
}

fn build_matrix(
    config: &RunConfig,
    cohort: &Cohort,
    scheme: WeightingScheme,
    roster: Option<Vec<ObjectKey>>,
) -> Result<RankingProblem, PipelineError> {
    let lists = cohort.lists_for(scheme.adjusted);
    let universe = match roster {
        Some(keys) => ObjectUniverse::from_ordered(keys)?,
        None => ObjectUniverse::from_lists(lists.iter()),
    };
    Ok(aggregate(
        &lists,
        scheme,
        &universe,
        &config.aggregate_options(),
    )?)
}

fn score_year(
    config: &RunConfig,
    year: Option<i32>,
    built: &[(String, RankingProblem)],
    with_kendall: bool,
) -> Result<YearArtifacts, PipelineError> {
    let mut rankings = Vec::new();
    for (scheme, problem) in built {
        let derived = derive(problem);
        let partition = components(&derived);
        for &method in &config.methods {
            let scores = match method {
                Method::RowSum => row_sum(&derived),
                Method::NormalizedRowSum => normalized_row_sum(&derived)?,
                Method::LeastSquares => least_squares(&derived, &partition, &config.solve)?,
            };
            let table = rank(&scores, &derived);
            let report = contradictions(problem, &table)?;
            rankings.push(RankingArtifact {
                scheme: scheme.clone(),
                method,
                table,
                contradictions: Some(report),
            });
        }
    }
    let kendall_table = if with_kendall && rankings.len() > 1 && same_objects(&rankings) {
        Some(kendall_matrix(&rankings)?)
    } else {
        None
    };
    Ok(YearArtifacts {
        year,
        rankings,
        kendall: kendall_table,
    })
}

/// Kendall comparisons need one object set; schemes can disagree after
/// isolated-object dropping.
fn same_objects(rankings: &[RankingArtifact]) -> bool {
    let reference: std::collections::BTreeSet<&str> = rankings[0]
        .table
        .rows()
        .iter()
        .map(|r| r.object.key.as_str())
        .collect();
    rankings.iter().all(|a| {
        a.table.len() == reference.len()
            && a.table
                .rows()
                .iter()
                .all(|r| reference.contains(r.object.key.as_str()))
    })
}

fn kendall_matrix(rankings: &[RankingArtifact]) -> Result<KendallTable, MetricsError> {
    // method-major ordering: all schemes of one method group together
    let mut order: Vec<usize> = (0..rankings.len()).collect();
    order.sort_by_key(|&i| (Method::ALL.iter().position(|m| *m == rankings[i].method), i));
    let labels: Vec<String> = order
        .iter()
        .map(|&i| format!("{}:{}", rankings[i].method.label(), rankings[i].scheme))
        .collect();
    let mut taus = vec![vec![None; order.len()]; order.len()];
    for (row, &a) in order.iter().enumerate() {
        for (col, &b) in order.iter().enumerate().skip(row + 1) {
            let report = kendall(&rankings[a].table, &rankings[b].table)?;
            taus[row][col] = Some(report.tau);
        }
    }
    Ok(KendallTable { labels, taus })
}

fn load_roster(path: &Path, granularity: Granularity) -> Result<Vec<ObjectKey>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let keys: Vec<ObjectKey> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#') && *l != "key")
        .map(|l| ObjectKey::new(granularity, l))
        .collect();
    Ok(keys)
}

fn warn_dropped(warnings: &mut Vec<String>, year: &str, scheme: &str, dropped: &[ObjectKey]) {
    if dropped.is_empty() {
        return;
    }
    let mut shown: Vec<&str> = dropped.iter().take(8).map(|k| k.key.as_str()).collect();
    if dropped.len() > shown.len() {
        shown.push("...");
    }
    warnings.push(format!(
        "{year}/{scheme}: dropped {} object(s) without preferences: {}",
        dropped.len(),
        shown.join(", ")
    ));
}

// ---------------------------------------------------------------------------
// rendering
// ---------------------------------------------------------------------------

fn timestamp_line() -> String {
    let epoch = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("generated_at_epoch {epoch}")
}

fn header_lines(kind: &str, digest: &str, stamp: &str, extra: &[String]) -> Vec<String> {
    let mut lines = vec![format!("prefrank {kind}"), format!("config {digest}")];
    lines.extend_from_slice(extra);
    lines.push(stamp.to_string());
    lines
}

fn prefix_hash_headers(lines: &[String]) -> String {
    lines.iter().map(|l| format!("# {l}\n")).collect()
}

/// Scores print with six decimals; weights print exactly when integer.
fn format_weight(v: &Value) -> String {
    match v.as_exact() {
        Some(r) if r.is_integer() => v.to_string(),
        _ => format!("{:.6}", v.to_f64()),
    }
}

fn format_score(v: &Value) -> String {
    format!("{:.6}", v.to_f64())
}

pub fn render_stats(stats: &[CohortStats]) -> String {
    let mut out = String::from("year,students,contributing_students,objects,uw,w,mw,auw,aw,amw\n");
    for s in stats {
        let totals = ["uw", "w", "mw", "auw", "aw", "amw"]
            .iter()
            .map(|k| format_weight(&s.totals[*k]))
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(
            out,
            "{},{},{},{},{totals}",
            s.year, s.students, s.contributing_students, s.objects
        );
    }
    out
}

pub fn render_ranking(table: &RankingTable) -> String {
    let mut out = String::from("rank,object,score,preference_count,component\n");
    for row in table.rows() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.rank,
            csv_field(&row.object.key),
            format_score(&row.score),
            format_weight(&row.preference_count),
            row.component
        );
    }
    out
}

pub fn render_eval(artifacts: &YearArtifacts) -> String {
    let mut out = String::from("year,scheme,method,contradictory,total,ratio\n");
    for artifact in &artifacts.rankings {
        if let Some(report) = &artifact.contradictions {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6}",
                artifacts.label(),
                artifact.scheme,
                artifact.method.label(),
                format_weight(&report.count),
                format_weight(&report.total),
                report.ratio
            );
        }
    }
    out
}

pub fn render_kendall(table: &KendallTable) -> String {
    let mut out = String::from("ranking");
    for label in &table.labels {
        let _ = write!(out, ",{label}");
    }
    out.push('\n');
    for (row, label) in table.labels.iter().enumerate() {
        let _ = write!(out, "{label}");
        for col in 0..table.labels.len() {
            match table.taus[row][col] {
                Some(tau) => {
                    let _ = write!(out, ",{tau:.6}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

pub fn render_grid(grid: &GridReport) -> String {
    let mut out = String::from("axiom,rs,nrs,ls\n");
    for axiom in Axiom::ALL {
        let _ = write!(out, "{}", axiom.label());
        for method in Method::ALL {
            let cell = grid.cell(axiom, method);
            let verdict = if cell.verdict.is_satisfied() {
                "satisfied"
            } else {
                "violated"
            };
            let _ = write!(out, ",{verdict}");
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Structured form of the grid, witness matrices inlined for small
/// instances.
pub fn grid_to_json(grid: &GridReport) -> serde_json::Value {
    let cells: Vec<serde_json::Value> = grid
        .cells
        .iter()
        .map(|cell| {
            let mut doc = serde_json::json!({
                "axiom": cell.axiom.label(),
                "method": cell.method.label(),
                "satisfied": cell.verdict.is_satisfied(),
            });
            match &cell.verdict.outcome {
                Outcome::Satisfied { trials } => {
                    doc["trials"] = serde_json::json!(trials);
                }
                Outcome::Violated { violation } => {
                    doc["witness"] = violation_to_json(violation);
                }
            }
            doc
        })
        .collect();
    serde_json::json!({
        "trials": grid.trials,
        "seed": grid.seed,
        "cells": cells,
    })
}

fn violation_to_json(violation: &Violation) -> serde_json::Value {
    const INLINE_MAX: usize = 10;
    let problem_json = |p: &RankingProblem| -> serde_json::Value {
        let mut doc = serde_json::json!({
            "objects": p.objects().iter().map(|o| o.key.clone()).collect::<Vec<_>>(),
        });
        if p.len() <= INLINE_MAX {
            doc["matrix"] = serde_json::json!(p.matrix().to_dense());
        }
        doc
    };
    let mut doc = serde_json::json!({
        "objects": [violation.objects.0.key, violation.objects.1.key],
        "scores_before": [violation.scores_before.0, violation.scores_before.1],
        "base": problem_json(&violation.base),
    });
    if let Some(after) = &violation.scores_after {
        doc["scores_after"] = serde_json::json!([after.0, after.1]);
    }
    if let Some(perturbed) = &violation.perturbed {
        doc["perturbed"] = problem_json(perturbed);
    }
    doc
}

// ---------------------------------------------------------------------------
// file writing
// ---------------------------------------------------------------------------

fn write_text(path: &Path, contents: &str) -> Result<PathBuf, PipelineError> {
    fs::write(path, contents).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}

fn write_document(
    config: &RunConfig,
    path_csv: PathBuf,
    path_json: PathBuf,
    headers: &[String],
    csv_body: String,
    json_body: serde_json::Value,
) -> Result<PathBuf, PipelineError> {
    if config.json {
        let doc = serde_json::json!({
            "headers": headers,
            "data": json_body,
        });
        write_text(
            &path_json,
            &(serde_json::to_string_pretty(&doc).expect("serializable") + "\n"),
        )
    } else {
        write_text(&path_csv, &(prefix_hash_headers(headers) + &csv_body))
    }
}

fn write_stats(
    config: &RunConfig,
    dir: &Path,
    digest: &str,
    stamp: &str,
    bundle: &ArtifactBundle,
) -> Result<PathBuf, PipelineError> {
    let headers = header_lines("ingest-stats", digest, stamp, &[]);
    write_document(
        config,
        dir.join("stats.csv"),
        dir.join("stats.json"),
        &headers,
        render_stats(&bundle.stats),
        serde_json::json!({
            "stats": bundle.stats,
            "diagnostics": bundle.diagnostics,
        }),
    )
}

fn write_matrix(
    config: &RunConfig,
    dir: &Path,
    digest: &str,
    stamp: &str,
    year_label: &str,
    scheme: &str,
    problem: &RankingProblem,
) -> Result<Vec<PathBuf>, PipelineError> {
    let extra = vec![format!("scheme {scheme}"), format!("year {year_label}")];
    let headers = header_lines("matrix", digest, stamp, &extra);
    if config.dense_json {
        let path = dir.join(format!("matrix_{scheme}_{year_label}.json"));
        matrixio::save_dense_json(problem, &path, &headers)?;
        Ok(vec![path])
    } else {
        let path = dir.join(format!("matrix_{scheme}_{year_label}.csv"));
        matrixio::save_triplets(problem, &path, &headers)?;
        Ok(vec![path.clone(), matrixio::index_path(&path)])
    }
}

fn write_ranking(
    config: &RunConfig,
    dir: &Path,
    digest: &str,
    stamp: &str,
    artifacts: &YearArtifacts,
    artifact: &RankingArtifact,
) -> Result<PathBuf, PipelineError> {
    let label = artifacts.label();
    let extra = vec![
        format!(
            "scheme {} method {}",
            artifact.scheme,
            artifact.method.label()
        ),
        format!("year {label}"),
        format!("tie_break {}", RankingTable::tie_break_descriptor()),
    ];
    let headers = header_lines("ranking", digest, stamp, &extra);
    write_document(
        config,
        dir.join(format!(
            "ranking_{}_{}_{label}.csv",
            artifact.scheme,
            artifact.method.label()
        )),
        dir.join(format!(
            "ranking_{}_{}_{label}.json",
            artifact.scheme,
            artifact.method.label()
        )),
        &headers,
        render_ranking(&artifact.table),
        serde_json::to_value(&artifact.table).expect("serializable ranking"),
    )
}

fn write_eval(
    config: &RunConfig,
    dir: &Path,
    digest: &str,
    stamp: &str,
    artifacts: &YearArtifacts,
) -> Result<PathBuf, PipelineError> {
    let label = artifacts.label();
    let headers = header_lines("contradictions", digest, stamp, &[format!("year {label}")]);
    let json_rows: Vec<serde_json::Value> = artifacts
        .rankings
        .iter()
        .filter_map(|a| {
            a.contradictions.as_ref().map(|r| {
                serde_json::json!({
                    "scheme": a.scheme,
                    "method": a.method.label(),
                    "report": r,
                })
            })
        })
        .collect();
    write_document(
        config,
        dir.join(format!("eval_{label}.csv")),
        dir.join(format!("eval_{label}.json")),
        &headers,
        render_eval(artifacts),
        serde_json::json!(json_rows),
    )
}

fn write_kendall(
    config: &RunConfig,
    dir: &Path,
    digest: &str,
    stamp: &str,
    label: &str,
    table: &KendallTable,
) -> Result<PathBuf, PipelineError> {
    let headers = header_lines("kendall", digest, stamp, &[format!("year {label}")]);
    write_document(
        config,
        dir.join(format!("kendall_{label}.csv")),
        dir.join(format!("kendall_{label}.json")),
        &headers,
        render_kendall(table),
        serde_json::json!({
            "labels": table.labels,
            "taus": table.taus,
        }),
    )
}

fn write_grid(
    config: &RunConfig,
    dir: &Path,
    digest: &str,
    stamp: &str,
    grid: &GridReport,
) -> Result<PathBuf, PipelineError> {
    let headers = header_lines("axioms", digest, stamp, &[]);
    write_document(
        config,
        dir.join("axioms.csv"),
        dir.join("axioms.json"),
        &headers,
        render_grid(grid),
        grid_to_json(grid),
    )
}
