//! Delimited-text ingestion of application records.
//!
//! Input is comma- or tab-delimited UTF-8 with a header row naming the
//! columns `year, student_id, position, faculty, course, level, form,
//! financing` (any order, extra columns ignored). Records group per
//! `(year, student)`; each group yields the student's plain preference list
//! and the financing-split pair, so every weighting scheme can be served
//! from one pass.
//!
//! Malformed rows become line-numbered diagnostics; the run aborts when the
//! bad-row ratio passes the configured limit.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::prefmodel::{
    derive_preferences, derive_preferences_adjusted, AdjustedLists, ApplicationRecord, Financing,
    Granularity, ObjectKey, PrefError, StudentPreferenceList, Weighting,
};
use crate::value::Value;

const REQUIRED_COLUMNS: [&str; 8] = [
    "year",
    "student_id",
    "position",
    "faculty",
    "course",
    "level",
    "form",
    "financing",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: missing required columns: {}", .missing.join(", "))]
    MissingColumns { path: PathBuf, missing: Vec<String> },
    #[error("{bad} of {total} rows are malformed ({ratio:.2}% > limit {limit:.2}%)")]
    TooManyBadRows {
        bad: usize,
        total: usize,
        ratio: f64,
        limit: f64,
    },
    #[error("{path}: bad alias row {line}: expected `from,to`")]
    BadAliasRow { path: PathBuf, line: usize },
}

/// A skipped row or student group, with its location.
#[derive(Clone, Debug, Serialize)]
pub struct Diagnostic {
    pub file: String,
    pub line: u64,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.file, self.line, self.message)
    }
}

#[derive(Clone, Debug)]
pub struct IngestOptions {
    pub granularity: Granularity,
    /// Abort when more than this fraction of data rows is malformed.
    pub max_bad_ratio: f64,
    /// Key rewrites applied to the faculty column before key derivation,
    /// e.g. to merge renamed institutions.
    pub aliases: BTreeMap<String, String>,
    /// Field delimiter; sniffed from the header line when `None`.
    pub delimiter: Option<u8>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            granularity: Granularity::Faculty,
            max_bad_ratio: 0.01,
            aliases: BTreeMap::new(),
            delimiter: None,
        }
    }
}

/// One student's derived preferences: the plain list and the
/// financing-split pair.
#[derive(Clone, Debug)]
pub struct StudentLists {
    pub plain: StudentPreferenceList,
    pub adjusted: AdjustedLists,
}

/// All students of one year.
#[derive(Clone, Debug, Default)]
pub struct Cohort {
    pub students: Vec<StudentLists>,
}

impl Cohort {
    /// Lists feeding aggregation: the plain list per student, or the two
    /// financing partitions per student for adjusted schemes.
    pub fn lists_for(&self, adjusted: bool) -> Vec<StudentPreferenceList> {
        if adjusted {
            self.students
                .iter()
                .flat_map(|s| s.adjusted.both().map(Clone::clone))
                .collect()
        } else {
            self.students.iter().map(|s| s.plain.clone()).collect()
        }
    }

    /// Union of observed object keys in lexicographic order.
    pub fn roster(&self) -> Vec<ObjectKey> {
        let mut keys: Vec<ObjectKey> = self
            .students
            .iter()
            .flat_map(|s| s.plain.objects().iter().cloned())
            .collect();
        keys.sort();
        keys.dedup();
        keys
    }

    pub fn stats(&self, year: i32) -> CohortStats {
        let mut stats = CohortStats {
            year,
            students: self.students.len(),
            contributing_students: 0,
            objects: self.roster().len(),
            totals: BTreeMap::new(),
        };
        let mut add = |label: &str, value: Value| {
            let slot = stats
                .totals
                .entry(label.to_string())
                .or_insert_with(Value::zero);
            *slot = &*slot + &value;
        };
        // a list of k pairs adds k * weight to its scheme's matrix mass
        let mut tally = |list: &StudentPreferenceList, uw: &str, w: &str, mw: &str| {
            let pairs = Value::from_int(list.pair_count() as i64);
            add(uw, pairs.clone());
            if let Some(weight) = Weighting::Weighted.weight_for(list) {
                add(w, &weight * &pairs);
            }
            if let Some(weight) = Weighting::ModeratelyWeighted.weight_for(list) {
                add(mw, &weight * &pairs);
            }
        };
        for student in &self.students {
            if student.plain.pair_count() > 0 {
                stats.contributing_students += 1;
            }
            tally(&student.plain, "uw", "w", "mw");
            for list in student.adjusted.both() {
                tally(list, "auw", "aw", "amw");
            }
        }
        for label in ["uw", "w", "mw", "auw", "aw", "amw"] {
            stats
                .totals
                .entry(label.to_string())
                .or_insert_with(Value::zero);
        }
        stats
    }
}

/// Per-year ingestion summary: applicant counts, roster size, and total
/// revealed preference weight under every scheme.
#[derive(Clone, Debug, Serialize)]
pub struct CohortStats {
    pub year: i32,
    pub students: usize,
    /// Students revealing at least one pair.
    pub contributing_students: usize,
    pub objects: usize,
    /// Total matrix weight per scheme label (uw, w, mw, auw, aw, amw).
    pub totals: BTreeMap<String, Value>,
}

/// Everything one ingestion pass produces.
#[derive(Clone, Debug, Default)]
pub struct Ingested {
    pub cohorts: BTreeMap<i32, Cohort>,
    pub diagnostics: Vec<Diagnostic>,
    pub rows_total: usize,
    pub rows_bad: usize,
}

impl Ingested {
    pub fn stats(&self) -> Vec<CohortStats> {
        self.cohorts
            .iter()
            .map(|(&year, cohort)| cohort.stats(year))
            .collect()
    }
}

/// Reads and parses the alias mapping file (`from,to` per line, `#` comments).
pub fn load_aliases(path: &Path) -> Result<BTreeMap<String, String>, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.into(),
        source,
    })?;
    let mut aliases = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == "from,to" {
            continue;
        }
        let (from, to) = line.split_once(',').ok_or(IngestError::BadAliasRow {
            path: path.into(),
            line: idx + 1,
        })?;
        aliases.insert(from.trim().to_string(), to.trim().to_string());
    }
    Ok(aliases)
}

/// Parses the input files into per-year cohorts of preference lists.
///
/// Rows that fail to parse and student groups with duplicate positions are
/// reported as diagnostics and skipped; the whole run fails only past the
/// bad-row limit.
pub fn ingest(paths: &[PathBuf], options: &IngestOptions) -> Result<Ingested, IngestError> {
    let mut groups: BTreeMap<(i32, String), GroupRows> = BTreeMap::new();
    let mut result = Ingested::default();

    for path in paths {
        parse_file(path, options, &mut groups, &mut result)?;
    }

    for ((year, _student), group) in groups {
        match derive_student(&group.records, options.granularity) {
            Ok(lists) => {
                result.cohorts.entry(year).or_default().students.push(lists);
            }
            Err(e) => {
                result.rows_bad += group.records.len();
                result.diagnostics.push(Diagnostic {
                    file: group.file,
                    line: group.line,
                    message: format!("student group skipped: {e}"),
                });
            }
        }
    }

    let ratio = if result.rows_total == 0 {
        0.0
    } else {
        result.rows_bad as f64 / result.rows_total as f64
    };
    if ratio > options.max_bad_ratio {
        return Err(IngestError::TooManyBadRows {
            bad: result.rows_bad,
            total: result.rows_total,
            ratio: ratio * 100.0,
            limit: options.max_bad_ratio * 100.0,
        });
    }
    if result.rows_total == 0 {
        result.diagnostics.push(Diagnostic {
            file: paths
                .first()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            line: 0,
            message: "no data rows found".into(),
        });
    }
    Ok(result)
}

fn derive_student(
    records: &[ApplicationRecord],
    granularity: Granularity,
) -> Result<StudentLists, PrefError> {
    Ok(StudentLists {
        plain: derive_preferences(records, granularity)?,
        adjusted: derive_preferences_adjusted(records, granularity)?,
    })
}

/// Rows of one `(year, student)` group, remembering where the group starts.
#[derive(Debug)]
struct GroupRows {
    file: String,
    line: u64,
    records: Vec<ApplicationRecord>,
}

fn parse_file(
    path: &Path,
    options: &IngestOptions,
    groups: &mut BTreeMap<(i32, String), GroupRows>,
    result: &mut Ingested,
) -> Result<(), IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.into(),
        source,
    })?;
    if text.trim().is_empty() {
        return Ok(());
    }
    let delimiter = options.delimiter.unwrap_or_else(|| sniff_delimiter(&text));
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|source| IngestError::Csv {
            path: path.into(),
            source,
        })?
        .clone();
    let mut columns = Vec::with_capacity(REQUIRED_COLUMNS.len());
    let mut missing = Vec::new();
    for name in REQUIRED_COLUMNS {
        match headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
        {
            Some(idx) => columns.push(idx),
            None => missing.push(name.to_string()),
        }
    }
    if !missing.is_empty() {
        return Err(IngestError::MissingColumns {
            path: path.into(),
            missing,
        });
    }

    let file_name = path.display().to_string();
    for record in reader.records() {
        let record = record.map_err(|source| IngestError::Csv {
            path: path.into(),
            source,
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        result.rows_total += 1;
        match parse_row(&record, &columns, options) {
            Ok((year, app)) => {
                groups
                    .entry((year, app.student_id.clone()))
                    .or_insert_with(|| GroupRows {
                        file: file_name.clone(),
                        line,
                        records: Vec::new(),
                    })
                    .records
                    .push(app);
            }
            Err(message) => {
                result.rows_bad += 1;
                result.diagnostics.push(Diagnostic {
                    file: file_name.clone(),
                    line,
                    message,
                });
            }
        }
    }
    Ok(())
}

fn parse_row(
    record: &csv::StringRecord,
    columns: &[usize],
    options: &IngestOptions,
) -> Result<(i32, ApplicationRecord), String> {
    let field = |slot: usize| -> Result<&str, String> {
        record
            .get(columns[slot])
            .ok_or_else(|| format!("missing {} field", REQUIRED_COLUMNS[slot]))
    };
    let year: i32 = field(0)?
        .parse()
        .map_err(|_| format!("bad year {:?}", field(0).unwrap_or("")))?;
    let student_id = field(1)?.to_string();
    if student_id.is_empty() {
        return Err("empty student_id".into());
    }
    let position: u32 = field(2)?.parse().ok().filter(|&p| p >= 1).ok_or_else(|| {
        format!(
            "bad position {:?} (must be a positive integer)",
            field(2).unwrap_or("")
        )
    })?;
    let mut faculty = field(3)?.to_string();
    if faculty.is_empty() {
        return Err("empty faculty".into());
    }
    if let Some(renamed) = options.aliases.get(&faculty) {
        faculty = renamed.clone();
    }
    let financing: Financing = field(7)?.parse().map_err(|e| format!("{e}"))?;
    Ok((
        year,
        ApplicationRecord {
            student_id,
            position,
            faculty,
            course: field(4)?.to_string(),
            level: field(5)?.to_string(),
            form: field(6)?.to_string(),
            financing,
        },
    ))
}

fn sniff_delimiter(text: &str) -> u8 {
    match text.lines().next() {
        Some(first) if first.contains('\t') => b'\t',
        _ => b',',
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use tempfile::NamedTempFile;

    fn write_file(contents: &str) -> NamedTempFile {
        let mut f = NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    const FIVE_ROWS: &str = "\
year,student_id,position,faculty,course,level,form,financing
2016,158,1,SE-AOK,Medicine,O,N,A
2016,158,2,PTE-AOK,Medicine,O,N,A
2016,158,3,DE-AOK,Medicine,O,N,K
2016,158,4,SE-AOK,Medicine,O,N,A
2016,158,5,SE-FOK,Dentistry,O,N,K
";

    #[test]
    fn ingest_five_row_fixture() {
        let f = write_file(FIVE_ROWS);
        let ingested = ingest(&[f.path().to_path_buf()], &IngestOptions::default()).unwrap();
        assert_eq!(ingested.rows_total, 5);
        assert_eq!(ingested.rows_bad, 0);
        let cohort = &ingested.cohorts[&2016];
        assert_eq!(cohort.students.len(), 1);
        let stats = cohort.stats(2016);
        assert_eq!(stats.students, 1);
        assert_eq!(stats.objects, 4);
        assert_eq!(stats.totals["uw"], Value::from_int(6));
        assert_eq!(stats.totals["auw"], Value::from_int(2));
        assert_eq!(stats.totals["w"], Value::from_int(1));
    }

    #[test]
    fn header_order_is_free_and_extra_columns_are_ignored() {
        let contents = "note,financing,form,level,course,faculty,position,student_id,year,extra\n\
                        x,A,N,O,Med,SE-AOK,1,s,2016,y\n\
                        x,A,N,O,Med,DE-AOK,2,s,2016,y\n";
        let f = write_file(contents);
        let ingested = ingest(&[f.path().to_path_buf()], &IngestOptions::default()).unwrap();
        assert_eq!(ingested.cohorts[&2016].stats(2016).totals["uw"], Value::from_int(1));
    }

    #[test]
    fn tab_delimited_input_is_sniffed() {
        let tabbed = FIVE_ROWS.replace(',', "\t");
        let f = write_file(&tabbed);
        let ingested = ingest(&[f.path().to_path_buf()], &IngestOptions::default()).unwrap();
        assert_eq!(ingested.cohorts[&2016].students.len(), 1);
    }

    #[test]
    fn empty_file_warns_but_succeeds() {
        let f = write_file("");
        let ingested = ingest(&[f.path().to_path_buf()], &IngestOptions::default()).unwrap();
        assert!(ingested.cohorts.is_empty());
        assert_eq!(ingested.diagnostics.len(), 1);
    }

    #[test]
    fn bad_rows_become_diagnostics_below_the_limit() {
        let mut contents =
            String::from("year,student_id,position,faculty,course,level,form,financing\n");
        for i in 0..999 {
            contents.push_str(&format!("2016,s{i},1,F{},c,O,N,A\n", i % 7));
        }
        contents.push_str("2016,bad,1,F0,c,O,N,X\n"); // unknown financing token
        let f = write_file(&contents);
        let options = IngestOptions {
            max_bad_ratio: 0.01,
            ..Default::default()
        };
        let ingested = ingest(&[f.path().to_path_buf()], &options).unwrap();
        assert_eq!(ingested.rows_total, 1000);
        assert_eq!(ingested.rows_bad, 1);
        assert_eq!(ingested.diagnostics.len(), 1);
        assert!(ingested.diagnostics[0].message.contains("financing"));
        assert_eq!(ingested.cohorts[&2016].students.len(), 999);
    }

    #[test]
    fn too_many_bad_rows_abort() {
        let contents = "year,student_id,position,faculty,course,level,form,financing\n\
                        2016,s,0,F,c,O,N,A\n\
                        2016,t,1,F,c,O,N,A\n";
        let f = write_file(contents);
        let err = ingest(&[f.path().to_path_buf()], &IngestOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            IngestError::TooManyBadRows {
                bad: 1,
                total: 2,
                ..
            }
        ));
    }

    #[test]
    fn duplicate_positions_skip_the_student_group() {
        let contents = "year,student_id,position,faculty,course,level,form,financing\n\
                        2016,s,1,F1,c,O,N,A\n\
                        2016,s,1,F2,c,O,N,A\n\
                        2016,t,1,F1,c,O,N,A\n\
                        2016,t,2,F2,c,O,N,A\n";
        let f = write_file(contents);
        let options = IngestOptions {
            max_bad_ratio: 0.9,
            ..Default::default()
        };
        let ingested = ingest(&[f.path().to_path_buf()], &options).unwrap();
        assert_eq!(ingested.cohorts[&2016].students.len(), 1);
        assert!(ingested.diagnostics[0]
            .message
            .contains("duplicate position"));
    }

    #[test]
    fn aliases_merge_faculty_keys() {
        let contents = "year,student_id,position,faculty,course,level,form,financing\n\
                        2016,s,1,OLD-NAME,c,O,N,A\n\
                        2016,s,2,NEW-NAME,c,O,N,A\n";
        let f = write_file(contents);
        let mut options = IngestOptions::default();
        options.aliases.insert("OLD-NAME".into(), "NEW-NAME".into());
        let ingested = ingest(&[f.path().to_path_buf()], &options).unwrap();
        let cohort = &ingested.cohorts[&2016];
        // both rows collapse to one object, no pair revealed
        assert_eq!(cohort.roster().len(), 1);
        assert_eq!(cohort.stats(2016).totals["uw"], Value::zero());
    }

    #[test]
    fn missing_columns_are_named() {
        let f = write_file("year,student_id,position\n2016,s,1\n");
        let err = ingest(&[f.path().to_path_buf()], &IngestOptions::default()).unwrap_err();
        match err {
            IngestError::MissingColumns { missing, .. } => {
                assert!(missing.contains(&"faculty".to_string()));
                assert!(missing.contains(&"financing".to_string()));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
