//! Recovery of partial pairwise preferences from ranked application lists
//! and their aggregation into preference matrices.
//!
//! Each applicant's list reveals `X_i > X_j` for every object `i` listed
//! before object `j`, and nothing about objects missing from the list. An
//! object appearing more than once (e.g. state- and student-financed forms of
//! the same course) keeps only its first appearance, so any two objects are
//! related at most once per applicant.
//!
//! Aggregation sums per-student contributions under one of three weights:
//! `1` (unweighted), `1/k` where `k` is the number of revealed pairs
//! (weighted), or `1/(l-1)` where `l` is the deduplicated list length
//! (moderately weighted). The adjusted variants derive preferences for
//! state-financed and student-financed applications separately and sum the
//! two matrices.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::graphcore::{RankingProblem, SparseMatrix};
use crate::value::Value;

#[derive(Debug, Error)]
pub enum PrefError {
    #[error("student {student_id}: duplicate position {position}")]
    DuplicatePosition { student_id: String, position: u32 },
    #[error("records mix students {0} and {1}")]
    MixedStudents(String, String),
    #[error("student {student_id}: position must be at least 1")]
    InvalidPosition { student_id: String },
    #[error("unknown financing token {0:?} (expected state/A or student/K)")]
    UnknownFinancing(String),
    #[error("unknown weighting scheme {0:?}")]
    UnknownScheme(String),
    #[error("unknown granularity {0:?}")]
    UnknownGranularity(String),
    #[error("object universe is missing keys: {}", .keys.join(", "))]
    UnknownObjects { keys: Vec<String> },
    #[error("duplicate key {0:?} in object roster")]
    DuplicateRosterKey(String),
}

/// Who pays the tuition for an application.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Financing {
    State,
    Student,
}

impl FromStr for Financing {
    type Err = PrefError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" | "state" | "state-financed" => Ok(Financing::State),
            "k" | "student" | "student-financed" => Ok(Financing::Student),
            other => Err(PrefError::UnknownFinancing(other.to_string())),
        }
    }
}

/// One row of an applicant's ranked list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApplicationRecord {
    pub student_id: String,
    /// 1 = most preferred.
    pub position: u32,
    pub faculty: String,
    pub course: String,
    pub level: String,
    pub form: String,
    pub financing: Financing,
}

/// The kind of object being compared in one aggregation run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Granularity {
    Faculty,
    Course,
    Institution,
    Programme,
}

impl Granularity {
    /// Object key of a record at this granularity. Courses are identified
    /// within their faculty; institutions are the faculty-key prefix before
    /// the first dash; programmes are the full attribute tuple.
    pub fn key_of(self, record: &ApplicationRecord) -> String {
        match self {
            Granularity::Faculty => record.faculty.clone(),
            Granularity::Course => format!("{}/{}", record.faculty, record.course),
            Granularity::Institution => record
                .faculty
                .split(['-', '\u{2013}'])
                .next()
                .unwrap_or(&record.faculty)
                .trim()
                .to_string(),
            Granularity::Programme => format!(
                "{}/{}/{}/{}/{}",
                record.faculty,
                record.course,
                record.level,
                record.form,
                match record.financing {
                    Financing::State => "state",
                    Financing::Student => "student",
                }
            ),
        }
    }
}

impl FromStr for Granularity {
    type Err = PrefError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "faculty" => Ok(Granularity::Faculty),
            "course" => Ok(Granularity::Course),
            "institution" => Ok(Granularity::Institution),
            "programme" | "program" => Ok(Granularity::Programme),
            other => Err(PrefError::UnknownGranularity(other.to_string())),
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Granularity::Faculty => "faculty",
            Granularity::Course => "course",
            Granularity::Institution => "institution",
            Granularity::Programme => "programme",
        };
        f.write_str(s)
    }
}

/// A compared object: a string key at a fixed granularity.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ObjectKey {
    pub granularity: Granularity,
    pub key: String,
}

impl ObjectKey {
    pub fn new(granularity: Granularity, key: impl Into<String>) -> Self {
        ObjectKey {
            granularity,
            key: key.into(),
        }
    }
}

impl fmt::Display for ObjectKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key)
    }
}

/// One applicant's ordered, deduplicated object list. Every earlier object
/// is preferred to every later one; nothing else is known.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StudentPreferenceList {
    pub student_id: String,
    objects: Vec<ObjectKey>,
}

impl StudentPreferenceList {
    pub fn new(student_id: impl Into<String>, objects: Vec<ObjectKey>) -> Self {
        debug_assert!(
            objects
                .iter()
                .enumerate()
                .all(|(i, o)| !objects[..i].contains(o)),
            "preference list must not repeat objects"
        );
        StudentPreferenceList {
            student_id: student_id.into(),
            objects,
        }
    }

    pub fn objects(&self) -> &[ObjectKey] {
        &self.objects
    }

    /// Deduplicated list length.
    pub fn list_len(&self) -> usize {
        self.objects.len()
    }

    /// Number of revealed pairwise preferences: `l(l-1)/2`.
    pub fn pair_count(&self) -> usize {
        let l = self.objects.len();
        l * (l.saturating_sub(1)) / 2
    }

    /// All revealed ordered pairs (preferred, less preferred).
    pub fn pairs(&self) -> impl Iterator<Item = (&ObjectKey, &ObjectKey)> {
        self.objects
            .iter()
            .enumerate()
            .flat_map(move |(i, a)| self.objects[i + 1..].iter().map(move |b| (a, b)))
    }
}

/// Per-student weight applied to each revealed pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Weighting {
    Unweighted,
    Weighted,
    ModeratelyWeighted,
}

impl Weighting {
    /// Weight of one student's pairs, or `None` when the list reveals no
    /// pair at all (fewer than two objects).
    pub fn weight_for(self, list: &StudentPreferenceList) -> Option<Value> {
        let l = list.list_len();
        if l < 2 {
            return None;
        }
        Some(match self {
            Weighting::Unweighted => Value::from_int(1),
            Weighting::Weighted => Value::ratio(1, list.pair_count() as i64),
            Weighting::ModeratelyWeighted => Value::ratio(1, (l - 1) as i64),
        })
    }
}

/// Weighting plus the adjusted flag (derive preferences per financing class
/// and sum the class matrices).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct WeightingScheme {
    pub weighting: Weighting,
    pub adjusted: bool,
}

impl WeightingScheme {
    pub const ALL: [WeightingScheme; 6] = [
        WeightingScheme {
            weighting: Weighting::Unweighted,
            adjusted: false,
        },
        WeightingScheme {
            weighting: Weighting::Weighted,
            adjusted: false,
        },
        WeightingScheme {
            weighting: Weighting::ModeratelyWeighted,
            adjusted: false,
        },
        WeightingScheme {
            weighting: Weighting::Unweighted,
            adjusted: true,
        },
        WeightingScheme {
            weighting: Weighting::Weighted,
            adjusted: true,
        },
        WeightingScheme {
            weighting: Weighting::ModeratelyWeighted,
            adjusted: true,
        },
    ];

    pub fn label(&self) -> &'static str {
        match (self.weighting, self.adjusted) {
            (Weighting::Unweighted, false) => "uw",
            (Weighting::Weighted, false) => "w",
            (Weighting::ModeratelyWeighted, false) => "mw",
            (Weighting::Unweighted, true) => "auw",
            (Weighting::Weighted, true) => "aw",
            (Weighting::ModeratelyWeighted, true) => "amw",
        }
    }
}

impl FromStr for WeightingScheme {
    type Err = PrefError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        let (adjusted, base) = match norm.strip_prefix("adjusted") {
            Some(rest) => (true, rest),
            None => match norm.strip_prefix('a') {
                // "auw", "aw", "amw"
                Some(rest) if matches!(rest, "uw" | "w" | "mw") => (true, rest),
                _ => (false, norm.as_str()),
            },
        };
        let weighting = match base {
            "uw" | "unweighted" => Weighting::Unweighted,
            "w" | "weighted" => Weighting::Weighted,
            "mw" | "moderatelyweighted" | "moderate" => Weighting::ModeratelyWeighted,
            _ => return Err(PrefError::UnknownScheme(s.to_string())),
        };
        Ok(WeightingScheme {
            weighting,
            adjusted,
        })
    }
}

impl fmt::Display for WeightingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Derives one student's preference list at the given granularity: sort by
/// position, map to object keys, keep only the first appearance of each
/// object.
pub fn derive_preferences(
    records: &[ApplicationRecord],
    granularity: Granularity,
) -> Result<StudentPreferenceList, PrefError> {
    let student_id = match records.first() {
        Some(r) => r.student_id.clone(),
        None => return Ok(StudentPreferenceList::new("", Vec::new())),
    };
    let mut sorted: Vec<&ApplicationRecord> = records.iter().collect();
    for r in &sorted {
        if r.student_id != student_id {
            return Err(PrefError::MixedStudents(student_id, r.student_id.clone()));
        }
        if r.position == 0 {
            return Err(PrefError::InvalidPosition { student_id });
        }
    }
    sorted.sort_by_key(|r| r.position);
    for pair in sorted.windows(2) {
        if pair[0].position == pair[1].position {
            return Err(PrefError::DuplicatePosition {
                student_id,
                position: pair[0].position,
            });
        }
    }
    let mut objects: Vec<ObjectKey> = Vec::new();
    for r in sorted {
        let key = ObjectKey::new(granularity, granularity.key_of(r));
        if !objects.contains(&key) {
            objects.push(key);
        }
    }
    Ok(StudentPreferenceList::new(student_id, objects))
}

/// Preference lists of one student split by financing class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjustedLists {
    pub state: StudentPreferenceList,
    pub student: StudentPreferenceList,
}

impl AdjustedLists {
    pub fn both(&self) -> [&StudentPreferenceList; 2] {
        [&self.state, &self.student]
    }
}

/// Derives preferences separately for state-financed and student-financed
/// applications. Deduplication and pair derivation run independently within
/// each partition.
pub fn derive_preferences_adjusted(
    records: &[ApplicationRecord],
    granularity: Granularity,
) -> Result<AdjustedLists, PrefError> {
    let state: Vec<ApplicationRecord> = records
        .iter()
        .filter(|r| r.financing == Financing::State)
        .cloned()
        .collect();
    let student: Vec<ApplicationRecord> = records
        .iter()
        .filter(|r| r.financing == Financing::Student)
        .cloned()
        .collect();
    Ok(AdjustedLists {
        state: derive_preferences(&state, granularity)?,
        student: derive_preferences(&student, granularity)?,
    })
}

/// The ordered set of objects a matrix is indexed by.
#[derive(Clone, Debug)]
pub struct ObjectUniverse {
    keys: Vec<ObjectKey>,
    index: HashMap<ObjectKey, usize>,
}

impl ObjectUniverse {
    /// Union of all keys observed in the lists, in lexicographic key order.
    pub fn from_lists<'a>(lists: impl IntoIterator<Item = &'a StudentPreferenceList>) -> Self {
        let mut keys: Vec<ObjectKey> = lists
            .into_iter()
            .flat_map(|l| l.objects().iter().cloned())
            .collect();
        keys.sort();
        keys.dedup();
        Self::from_ordered(keys).expect("sorted deduplicated keys")
    }

    /// Explicit roster: the given order becomes the matrix order.
    pub fn from_ordered(keys: Vec<ObjectKey>) -> Result<Self, PrefError> {
        let mut index = HashMap::with_capacity(keys.len());
        for (i, k) in keys.iter().enumerate() {
            if index.insert(k.clone(), i).is_some() {
                return Err(PrefError::DuplicateRosterKey(k.key.clone()));
            }
        }
        Ok(ObjectUniverse { keys, index })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[ObjectKey] {
        &self.keys
    }

    pub fn index_of(&self, key: &ObjectKey) -> Option<usize> {
        self.index.get(key).copied()
    }
}

/// Knobs for matrix aggregation.
#[derive(Clone, Debug)]
pub struct AggregateOptions {
    /// Largest exact denominator tolerated before the whole matrix degrades
    /// to floating point.
    pub denominator_bound: u64,
    /// Skip exact arithmetic entirely.
    pub force_approx: bool,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        AggregateOptions {
            denominator_bound: 1_000_000_000_000,
            force_approx: false,
        }
    }
}

/// Sums per-student contributions into a preference matrix. Entry `(i, j)`
/// accumulates the weight of every student who revealed `i` over `j`.
///
/// For adjusted schemes pass the per-financing-class lists (two per student);
/// weights are computed within each class independently, which is exactly
/// what summing the class matrices does.
///
/// Uses rayon when the `parallel` feature is enabled; chunked deterministic
/// merging keeps the result identical to [`aggregate_sequential`].
pub fn aggregate(
    lists: &[StudentPreferenceList],
    scheme: WeightingScheme,
    universe: &ObjectUniverse,
    options: &AggregateOptions,
) -> Result<RankingProblem, PrefError> {
    #[cfg(feature = "parallel")]
    {
        aggregate_parallel(lists, scheme, universe, options)
    }
    #[cfg(not(feature = "parallel"))]
    {
        aggregate_sequential(lists, scheme, universe, options)
    }
}

/// Single-threaded aggregation; the reference the parallel path must match.
pub fn aggregate_sequential(
    lists: &[StudentPreferenceList],
    scheme: WeightingScheme,
    universe: &ObjectUniverse,
    options: &AggregateOptions,
) -> Result<RankingProblem, PrefError> {
    let matrix = accumulate(lists, scheme.weighting, universe, options.force_approx)?;
    Ok(finish(matrix, universe, options))
}

#[cfg(feature = "parallel")]
fn aggregate_parallel(
    lists: &[StudentPreferenceList],
    scheme: WeightingScheme,
    universe: &ObjectUniverse,
    options: &AggregateOptions,
) -> Result<RankingProblem, PrefError> {
    use rayon::prelude::*;

    let matrix = if options.force_approx {
        // Float addition is order sensitive: merge the partial matrices in
        // fixed chunk order so the result is bit-identical to the
        // sequential path.
        const CHUNK: usize = 512;
        let partials: Vec<Result<SparseMatrix, PrefError>> = lists
            .par_chunks(CHUNK)
            .map(|chunk| accumulate(chunk, scheme.weighting, universe, true))
            .collect();
        let mut matrix = SparseMatrix::new(universe.len());
        for partial in partials {
            matrix.merge(&partial?);
        }
        matrix
    } else {
        // Exact arithmetic is associative, so rayon may group the
        // per-student contributions however it balances best; the reduced
        // matrix is identical either way. Few large jobs keep the merge
        // cost (proportional to distinct entries per partial) low.
        let min_len = (lists.len() / (4 * rayon::current_num_threads().max(1))).max(512);
        lists
            .par_iter()
            .with_min_len(min_len)
            .try_fold(
                || SparseMatrix::new(universe.len()),
                |mut acc, list| {
                    contribute(&mut acc, list, scheme.weighting, universe, false)?;
                    Ok(acc)
                },
            )
            .try_reduce(
                || SparseMatrix::new(universe.len()),
                |mut acc, partial| {
                    if acc.nnz() < partial.nnz() {
                        return Ok({
                            let mut partial = partial;
                            partial.merge(&acc);
                            partial
                        });
                    }
                    acc.merge(&partial);
                    Ok(acc)
                },
            )?
    };
    Ok(finish(matrix, universe, options))
}

fn accumulate(
    lists: &[StudentPreferenceList],
    weighting: Weighting,
    universe: &ObjectUniverse,
    force_approx: bool,
) -> Result<SparseMatrix, PrefError> {
    let mut matrix = SparseMatrix::new(universe.len());
    for list in lists {
        contribute(&mut matrix, list, weighting, universe, force_approx)?;
    }
    Ok(matrix)
}

fn contribute(
    matrix: &mut SparseMatrix,
    list: &StudentPreferenceList,
    weighting: Weighting,
    universe: &ObjectUniverse,
    force_approx: bool,
) -> Result<(), PrefError> {
    let Some(weight) = weighting.weight_for(list) else {
        return Ok(());
    };
    let weight = if force_approx {
        weight.to_approx()
    } else {
        weight
    };
    for (a, b) in list.pairs() {
        let i = lookup(universe, list, a)?;
        let j = lookup(universe, list, b)?;
        matrix.add_to(i, j, &weight);
    }
    Ok(())
}

fn lookup(
    universe: &ObjectUniverse,
    list: &StudentPreferenceList,
    key: &ObjectKey,
) -> Result<usize, PrefError> {
    universe
        .index_of(key)
        .ok_or_else(|| PrefError::UnknownObjects {
            keys: list
                .objects()
                .iter()
                .filter(|o| universe.index_of(o).is_none())
                .map(|o| o.key.clone())
                .collect(),
        })
}

fn finish(
    mut matrix: SparseMatrix,
    universe: &ObjectUniverse,
    options: &AggregateOptions,
) -> RankingProblem {
    let within_bound = matrix_denominators_within(&matrix, options.denominator_bound);
    if !within_bound {
        matrix.degrade_to_approx();
    }
    RankingProblem::from_matrix(universe.keys().to_vec(), matrix)
}

fn matrix_denominators_within(matrix: &SparseMatrix, bound: u64) -> bool {
    matrix.iter().all(|(_, _, v)| v.denominator_within(bound))
}
