//! Executable checks of four axiomatic properties of scoring methods.
//!
//! * Size invariance: two objects with the same preference structure against
//!   third parties, one scaled by `alpha`, must tie.
//! * Bridge set independence: the order within one side of a bridge set must
//!   not react to preference changes on the other side.
//! * Bridge set autonomy: the order within the bridge and the far side must
//!   not react to changes inside the near side.
//! * Bridge player independence: with a single bridge object, the order over
//!   the near side plus the bridge must not react to far-side changes.
//!
//! Violations are established exactly, with a replayable witness. Satisfied
//! verdicts are sample-based: randomized structured instances and
//! perturbations, generated from a fixed seed, all entries exact rationals so
//! score comparisons carry no floating-point doubt.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graphcore::{components, derive, DerivedMatrices, GraphError, RankingProblem};
use crate::prefmodel::{Granularity, ObjectKey};
use crate::scoring::{
    least_squares_sequential, normalized_row_sum, row_sum, Method, ScoringError, SolveOptions,
};
use crate::value::Value;

#[derive(Debug, Error)]
pub enum AxiomError {
    #[error("bridge witness subsets must be disjoint")]
    OverlappingSubsets,
    #[error("bridge witness subsets must cover every object")]
    IncompleteCover,
    #[error("bridge set must not be empty")]
    EmptyBridge,
    #[error("bridge player checks need a single-object bridge set")]
    BridgeNotSingleton,
    #[error("objects {0} and {1} are not a scaled clone pair")]
    NotAClonePair(usize, usize),
    #[error("scaling factor must be positive")]
    InvalidAlpha,
    #[error("object index {0} out of bounds")]
    IndexOutOfBounds(usize),
    #[error("edit ({i}, {j}) touches an entry the axiom protects")]
    ProtectedEntry { i: usize, j: usize },
    #[error("edit ({i}, {j}) must be a nonnegative off-diagonal entry")]
    InvalidEdit { i: usize, j: usize },
    #[error("perturbation kind does not fit the axiom")]
    SpecMismatch,
    #[error("the bridge witness does not hold on the base problem")]
    WitnessDoesNotHold,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

/// The four checked properties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Axiom {
    SizeInvariance,
    BridgeSetIndependence,
    BridgeSetAutonomy,
    BridgePlayerIndependence,
}

impl Axiom {
    pub const ALL: [Axiom; 4] = [
        Axiom::SizeInvariance,
        Axiom::BridgeSetIndependence,
        Axiom::BridgeSetAutonomy,
        Axiom::BridgePlayerIndependence,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Axiom::SizeInvariance => "size-invariance",
            Axiom::BridgeSetIndependence => "bridge-set-independence",
            Axiom::BridgeSetAutonomy => "bridge-set-autonomy",
            Axiom::BridgePlayerIndependence => "bridge-player-independence",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A bridge decomposition: `bridge` separates `near` from `far` (no
/// comparisons cross), and every near-side object has the same total
/// comparison weight against each bridge member.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BridgeWitness {
    pub near: Vec<usize>,
    pub bridge: Vec<usize>,
    pub far: Vec<usize>,
}

impl BridgeWitness {
    fn validate_shape(&self, n: usize) -> Result<(), AxiomError> {
        if self.bridge.is_empty() {
            return Err(AxiomError::EmptyBridge);
        }
        let mut seen = vec![false; n];
        for &i in self.near.iter().chain(&self.bridge).chain(&self.far) {
            if i >= n {
                return Err(AxiomError::IndexOutOfBounds(i));
            }
            if seen[i] {
                return Err(AxiomError::OverlappingSubsets);
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(AxiomError::IncompleteCover);
        }
        Ok(())
    }
}

/// Checks both bridge-set conditions exactly: no matches between `near` and
/// `far`, and uniform match weight from each near object into the bridge.
pub fn verify_bridge_witness(
    derived: &DerivedMatrices,
    witness: &BridgeWitness,
) -> Result<bool, AxiomError> {
    witness.validate_shape(derived.len())?;
    for &i in &witness.near {
        for &j in &witness.far {
            if !derived.matches().get(i, j).is_zero() {
                return Ok(false);
            }
        }
        let first = witness.bridge[0];
        let reference = derived.matches().get(i, first);
        for &k in &witness.bridge[1..] {
            if derived.matches().get(i, k) != reference {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Extends a problem with a new object whose preferences against every third
/// party are `alpha` times those of `object`; the two are not compared with
/// each other. The clone's key is derived from the original's.
pub fn make_scaled_clone(
    problem: &RankingProblem,
    object: usize,
    alpha: &Value,
) -> Result<RankingProblem, AxiomError> {
    if !alpha.is_positive() {
        return Err(AxiomError::InvalidAlpha);
    }
    let n = problem.len();
    if object >= n {
        return Err(AxiomError::IndexOutOfBounds(object));
    }
    let mut objects = problem.objects().to_vec();
    let base_key = &problem.objects()[object].key;
    let mut clone_key = format!("{base_key}~clone");
    while objects.iter().any(|o| o.key == clone_key) {
        clone_key.push('+');
    }
    objects.push(ObjectKey::new(
        problem.objects()[object].granularity,
        clone_key,
    ));

    let mut triplets: Vec<(usize, usize, Value)> = problem
        .matrix()
        .iter()
        .map(|(i, j, v)| (i, j, v.clone()))
        .collect();
    for k in 0..n {
        if k == object {
            continue;
        }
        let out = problem.intensity(object, k);
        if !out.is_zero() {
            triplets.push((n, k, alpha * &out));
        }
        let inc = problem.intensity(k, object);
        if !inc.is_zero() {
            triplets.push((k, n, alpha * &inc));
        }
    }
    Ok(RankingProblem::from_triplets(objects, triplets)?)
}

/// One matrix entry replacement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EntryEdit {
    pub i: usize,
    pub j: usize,
    pub value: Value,
}

/// What to check an axiom against.
#[derive(Clone, Debug)]
pub enum Perturbation {
    /// Size invariance: the two objects that must tie. The clone structure
    /// is verified before scoring.
    ClonePair { original: usize, clone: usize },
    /// Bridge axioms: entry edits applied to the base problem. Every edit
    /// must keep its endpoints inside the region the axiom lets change.
    Edits {
        witness: BridgeWitness,
        edits: Vec<EntryEdit>,
    },
}

/// Outcome of one axiom check.
#[derive(Clone, Debug)]
pub enum Outcome {
    /// No violation found over this many checked instances.
    Satisfied {
        trials: usize,
    },
    Violated {
        violation: Box<Violation>,
    },
}

/// Replayable evidence of a violation: the problems involved and the object
/// pair whose order flipped (or failed to tie).
#[derive(Clone, Debug)]
pub struct Violation {
    pub base: RankingProblem,
    pub perturbed: Option<RankingProblem>,
    pub objects: (ObjectKey, ObjectKey),
    pub scores_before: (Value, Value),
    pub scores_after: Option<(Value, Value)>,
}

#[derive(Clone, Debug)]
pub struct AxiomVerdict {
    pub axiom: Axiom,
    pub method: Method,
    pub outcome: Outcome,
}

impl AxiomVerdict {
    pub fn is_satisfied(&self) -> bool {
        matches!(self.outcome, Outcome::Satisfied { .. })
    }
}

/// Configuration of randomized satisfied-side checks.
#[derive(Clone, Debug)]
pub struct TrialConfig {
    /// Randomized instances per (axiom, method) cell.
    pub trials: usize,
    pub seed: u64,
    /// Score-equality tolerance when scores are not exact.
    pub tolerance: f64,
    pub solve: SolveOptions,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            trials: 200,
            seed: 0,
            tolerance: 1e-9,
            solve: SolveOptions::default(),
        }
    }
}

fn scores_for(
    method: Method,
    problem: &RankingProblem,
    solve: &SolveOptions,
) -> Result<Vec<Value>, ScoringError> {
    let derived = derive(problem);
    match method {
        Method::RowSum => Ok(row_sum(&derived).values),
        Method::NormalizedRowSum => Ok(normalized_row_sum(&derived)?.values),
        Method::LeastSquares => {
            let partition = components(&derived);
            Ok(least_squares_sequential(&derived, &partition, solve)?.values)
        }
    }
}

fn relation(a: &Value, b: &Value, tolerance: f64) -> std::cmp::Ordering {
    if a.approx_eq(b, tolerance) {
        std::cmp::Ordering::Equal
    } else {
        a.cmp(b)
    }
}

/// Checks one axiom for one method on an explicit instance. Violations are
/// found by comparing the method's pairwise order over the protected object
/// set before and after the perturbation; any change is a violation and is
/// returned with a replayable witness.
pub fn check_axiom(
    axiom: Axiom,
    method: Method,
    base: &RankingProblem,
    perturbation: &Perturbation,
    config: &TrialConfig,
) -> Result<AxiomVerdict, AxiomError> {
    let outcome = match (axiom, perturbation) {
        (Axiom::SizeInvariance, Perturbation::ClonePair { original, clone }) => {
            check_clone_pair(method, base, *original, *clone, config)?
        }
        (_, Perturbation::Edits { witness, edits }) if axiom != Axiom::SizeInvariance => {
            check_bridge_axiom(axiom, method, base, witness, edits, config)?
        }
        _ => return Err(AxiomError::SpecMismatch),
    };
    Ok(AxiomVerdict {
        axiom,
        method,
        outcome,
    })
}

fn check_clone_pair(
    method: Method,
    base: &RankingProblem,
    original: usize,
    clone: usize,
    config: &TrialConfig,
) -> Result<Outcome, AxiomError> {
    verify_clone_pair(base, original, clone)?;
    let scores = scores_for(method, base, &config.solve)?;
    let (a, b) = (&scores[original], &scores[clone]);
    if relation(a, b, config.tolerance) != std::cmp::Ordering::Equal {
        return Ok(Outcome::Violated {
            violation: Box::new(Violation {
                base: base.clone(),
                perturbed: None,
                objects: (
                    base.objects()[original].clone(),
                    base.objects()[clone].clone(),
                ),
                scores_before: (a.clone(), b.clone()),
                scores_after: None,
            }),
        });
    }
    Ok(Outcome::Satisfied { trials: 1 })
}

/// Confirms that `clone`'s preferences against every third party are a
/// positive multiple of `original`'s, and that the pair itself is not
/// compared.
fn verify_clone_pair(
    problem: &RankingProblem,
    original: usize,
    clone: usize,
) -> Result<(), AxiomError> {
    let n = problem.len();
    if original >= n || clone >= n {
        return Err(AxiomError::IndexOutOfBounds(original.max(clone)));
    }
    if original == clone
        || !problem.intensity(original, clone).is_zero()
        || !problem.intensity(clone, original).is_zero()
    {
        return Err(AxiomError::NotAClonePair(original, clone));
    }
    let mut alpha: Option<Value> = None;
    let mut check = |from_original: Value, from_clone: Value| -> Result<(), AxiomError> {
        match (from_original.is_zero(), from_clone.is_zero()) {
            (true, true) => Ok(()),
            (true, false) | (false, true) => Err(AxiomError::NotAClonePair(original, clone)),
            (false, false) => {
                let ratio = &from_clone / &from_original;
                match &alpha {
                    Some(existing) if *existing != ratio => {
                        Err(AxiomError::NotAClonePair(original, clone))
                    }
                    Some(_) => Ok(()),
                    None => {
                        alpha = Some(ratio);
                        Ok(())
                    }
                }
            }
        }
    };
    for k in 0..n {
        if k == original || k == clone {
            continue;
        }
        check(problem.intensity(original, k), problem.intensity(clone, k))?;
        check(problem.intensity(k, original), problem.intensity(k, clone))?;
    }
    Ok(())
}

fn check_bridge_axiom(
    axiom: Axiom,
    method: Method,
    base: &RankingProblem,
    witness: &BridgeWitness,
    edits: &[EntryEdit],
    config: &TrialConfig,
) -> Result<Outcome, AxiomError> {
    let derived = derive(base);
    if !verify_bridge_witness(&derived, witness)? {
        return Err(AxiomError::WitnessDoesNotHold);
    }
    if axiom == Axiom::BridgePlayerIndependence && witness.bridge.len() != 1 {
        return Err(AxiomError::BridgeNotSingleton);
    }

    let editable = editable_region(axiom, witness, base.len());
    let protected = protected_set(axiom, witness);

    let mut triplets: Vec<(usize, usize, Value)> = base
        .matrix()
        .iter()
        .map(|(i, j, v)| (i, j, v.clone()))
        .collect();
    for edit in edits {
        if edit.i == edit.j || edit.value.is_negative() {
            return Err(AxiomError::InvalidEdit {
                i: edit.i,
                j: edit.j,
            });
        }
        if !editable[edit.i] || !editable[edit.j] {
            return Err(AxiomError::ProtectedEntry {
                i: edit.i,
                j: edit.j,
            });
        }
        triplets.retain(|&(i, j, _)| (i, j) != (edit.i, edit.j));
        triplets.push((edit.i, edit.j, edit.value.clone()));
    }
    let perturbed = RankingProblem::from_triplets(base.objects().to_vec(), triplets)?;

    let before = scores_for(method, base, &config.solve)?;
    let after = scores_for(method, &perturbed, &config.solve)?;
    for (idx, &x) in protected.iter().enumerate() {
        for &y in &protected[idx + 1..] {
            let rel_before = relation(&before[x], &before[y], config.tolerance);
            let rel_after = relation(&after[x], &after[y], config.tolerance);
            if rel_before != rel_after {
                return Ok(Outcome::Violated {
                    violation: Box::new(Violation {
                        base: base.clone(),
                        perturbed: Some(perturbed),
                        objects: (base.objects()[x].clone(), base.objects()[y].clone()),
                        scores_before: (before[x].clone(), before[y].clone()),
                        scores_after: Some((after[x].clone(), after[y].clone())),
                    }),
                });
            }
        }
    }
    Ok(Outcome::Satisfied { trials: 1 })
}

/// Objects whose mutual entries the axiom allows to change.
fn editable_region(axiom: Axiom, witness: &BridgeWitness, n: usize) -> Vec<bool> {
    let mut editable = vec![false; n];
    match axiom {
        // everything not touching the near side may change
        Axiom::BridgeSetIndependence | Axiom::BridgePlayerIndependence => {
            for &i in witness.bridge.iter().chain(&witness.far) {
                editable[i] = true;
            }
        }
        // only the inside of the near side may change
        Axiom::BridgeSetAutonomy => {
            for &i in &witness.near {
                editable[i] = true;
            }
        }
        Axiom::SizeInvariance => unreachable!("size invariance takes no edits"),
    }
    editable
}

/// Objects whose pairwise order the axiom protects, in index order.
fn protected_set(axiom: Axiom, witness: &BridgeWitness) -> Vec<usize> {
    let mut set: Vec<usize> = match axiom {
        Axiom::BridgeSetIndependence => witness.near.clone(),
        Axiom::BridgeSetAutonomy => witness.bridge.iter().chain(&witness.far).copied().collect(),
        Axiom::BridgePlayerIndependence => witness
            .near
            .iter()
            .chain(&witness.bridge)
            .copied()
            .collect(),
        Axiom::SizeInvariance => unreachable!("size invariance takes no edits"),
    };
    set.sort_unstable();
    set
}

/// Randomized satisfied-side check: `config.trials` structured random
/// instances with valid perturbations. Trials run in parallel with the
/// `parallel` feature; per-trial RNG streams make the verdict independent of
/// scheduling.
pub fn check_axiom_random(
    axiom: Axiom,
    method: Method,
    config: &TrialConfig,
) -> Result<AxiomVerdict, AxiomError> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let first_violation = (0..config.trials)
            .into_par_iter()
            .map(|trial| run_trial(axiom, method, config, trial as u64))
            .find_first(|r| !matches!(r, Ok(None)));
        match first_violation {
            None => Ok(AxiomVerdict {
                axiom,
                method,
                outcome: Outcome::Satisfied {
                    trials: config.trials,
                },
            }),
            Some(Ok(Some(violation))) => Ok(AxiomVerdict {
                axiom,
                method,
                outcome: Outcome::Violated {
                    violation: Box::new(violation),
                },
            }),
            Some(Ok(None)) => unreachable!(),
            Some(Err(e)) => Err(e),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        check_axiom_random_sequential(axiom, method, config)
    }
}

/// Single-threaded twin of [`check_axiom_random`].
pub fn check_axiom_random_sequential(
    axiom: Axiom,
    method: Method,
    config: &TrialConfig,
) -> Result<AxiomVerdict, AxiomError> {
    for trial in 0..config.trials {
        if let Some(violation) = run_trial(axiom, method, config, trial as u64)? {
            return Ok(AxiomVerdict {
                axiom,
                method,
                outcome: Outcome::Violated {
                    violation: Box::new(violation),
                },
            });
        }
    }
    Ok(AxiomVerdict {
        axiom,
        method,
        outcome: Outcome::Satisfied {
            trials: config.trials,
        },
    })
}

fn run_trial(
    axiom: Axiom,
    method: Method,
    config: &TrialConfig,
    trial: u64,
) -> Result<Option<Violation>, AxiomError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial);
    let verdict = match axiom {
        Axiom::SizeInvariance => {
            let n = rng.gen_range(3..=6);
            let base = random_connected_problem(&mut rng, n);
            let object = rng.gen_range(0..n);
            let alpha = random_alpha(&mut rng);
            let extended = make_scaled_clone(&base, object, &alpha)?;
            let perturbation = Perturbation::ClonePair {
                original: object,
                clone: n,
            };
            check_axiom(axiom, method, &extended, &perturbation, config)?
        }
        _ => {
            let (base, witness) = random_bridge_problem(&mut rng, axiom);
            let edits = random_edits(&mut rng, axiom, &witness);
            let perturbation = Perturbation::Edits { witness, edits };
            check_axiom(axiom, method, &base, &perturbation, config)?
        }
    };
    match verdict.outcome {
        Outcome::Satisfied { .. } => Ok(None),
        Outcome::Violated { violation } => Ok(Some(*violation)),
    }
}

fn trial_key(i: usize) -> ObjectKey {
    ObjectKey::new(Granularity::Faculty, format!("T{i}"))
}

/// Random integer-weighted problem kept connected by a chain, so every
/// object has comparisons and every method is defined.
fn random_connected_problem(rng: &mut ChaCha8Rng, n: usize) -> RankingProblem {
    let objects: Vec<ObjectKey> = (0..n).map(trial_key).collect();
    let mut triplets = Vec::new();
    for i in 0..n - 1 {
        triplets.push((i, i + 1, Value::from_int(rng.gen_range(1..=9))));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(0.4) {
                triplets.push((i, j, Value::from_int(rng.gen_range(0..=9))));
            }
        }
    }
    RankingProblem::from_triplets(objects, triplets).expect("generated instance is valid")
}

fn random_alpha(rng: &mut ChaCha8Rng) -> Value {
    const CHOICES: [(i64, i64); 6] = [(1, 2), (2, 3), (1, 1), (3, 2), (2, 1), (5, 3)];
    let (n, d) = CHOICES[rng.gen_range(0..CHOICES.len())];
    Value::ratio(n, d)
}

/// Random instance with a valid bridge decomposition: a chain inside each
/// region for connectivity, uniform totals from the near side into the
/// bridge, and no near-far comparisons.
fn random_bridge_problem(rng: &mut ChaCha8Rng, axiom: Axiom) -> (RankingProblem, BridgeWitness) {
    let near_size = rng.gen_range(2..=3);
    let bridge_size = if axiom == Axiom::BridgePlayerIndependence {
        1
    } else {
        rng.gen_range(1..=2)
    };
    let far_size = rng.gen_range(1..=2);
    let n = near_size + bridge_size + far_size;
    let witness = BridgeWitness {
        near: (0..near_size).collect(),
        bridge: (near_size..near_size + bridge_size).collect(),
        far: (near_size + bridge_size..n).collect(),
    };

    let objects: Vec<ObjectKey> = (0..n).map(trial_key).collect();
    let mut triplets = Vec::new();
    // chains keep both regions free of isolated objects
    for w in witness.near.windows(2) {
        triplets.push((w[0], w[1], Value::from_int(rng.gen_range(1..=9))));
    }
    let outer: Vec<usize> = witness.bridge.iter().chain(&witness.far).copied().collect();
    for w in outer.windows(2) {
        triplets.push((w[0], w[1], Value::from_int(rng.gen_range(1..=9))));
    }
    // random extras inside each region
    for &i in &witness.near {
        for &j in &witness.near {
            if i != j && rng.gen_bool(0.5) {
                triplets.push((i, j, Value::from_int(rng.gen_range(0..=9))));
            }
        }
    }
    for &i in &outer {
        for &j in &outer {
            if i != j && rng.gen_bool(0.5) {
                triplets.push((i, j, Value::from_int(rng.gen_range(0..=9))));
            }
        }
    }
    // uniform totals from each near object into every bridge member
    for &i in &witness.near {
        let total = rng.gen_range(1..=10);
        for &k in &witness.bridge {
            let toward = rng.gen_range(0..=total);
            if toward > 0 {
                triplets.push((i, k, Value::from_int(toward)));
            }
            if total - toward > 0 {
                triplets.push((k, i, Value::from_int(total - toward)));
            }
        }
    }
    let problem =
        RankingProblem::from_triplets(objects, triplets).expect("generated instance is valid");
    debug_assert!(matches!(
        verify_bridge_witness(&derive(&problem), &witness),
        Ok(true)
    ));
    (problem, witness)
}

fn random_edits(rng: &mut ChaCha8Rng, axiom: Axiom, witness: &BridgeWitness) -> Vec<EntryEdit> {
    let region: Vec<usize> = match axiom {
        Axiom::BridgeSetAutonomy => witness.near.clone(),
        _ => witness.bridge.iter().chain(&witness.far).copied().collect(),
    };
    let mut edits = Vec::new();
    for _ in 0..rng.gen_range(1..=4) {
        let i = region[rng.gen_range(0..region.len())];
        let j = region[rng.gen_range(0..region.len())];
        if i == j {
            continue;
        }
        edits.push(EntryEdit {
            i,
            j,
            value: Value::from_int(rng.gen_range(0..=9)),
        });
    }
    // keep the region's chain alive so no object loses all comparisons
    let chain: Vec<usize> = region.clone();
    for w in chain.windows(2) {
        edits.push(EntryEdit {
            i: w[0],
            j: w[1],
            value: Value::from_int(rng.gen_range(1..=9)),
        });
    }
    edits
}

/// The five-object instance behind the canonical witnesses: two small
/// objects against two strong ones, plus a fifth compared only with one of
/// them.
pub fn reference_problem() -> RankingProblem {
    let rows: [[i64; 5]; 5] = [
        [0, 0, 6, 6, 0],
        [0, 0, 10, 10, 0],
        [12, 20, 0, 6, 7],
        [12, 20, 6, 0, 0],
        [0, 0, 5, 0, 0],
    ];
    let objects: Vec<ObjectKey> = (1..=5)
        .map(|i| ObjectKey::new(Granularity::Faculty, format!("X{i}")))
        .collect();
    let mut triplets = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, &a) in row.iter().enumerate() {
            if a != 0 {
                triplets.push((i, j, Value::from_int(a)));
            }
        }
    }
    RankingProblem::from_triplets(objects, triplets).expect("reference instance is valid")
}

/// Canonical explicit checks for one axiom on the reference problem. The
/// bridge-player pair deliberately includes the far-side weakening and
/// strengthening that expose row sum and normalized row sum.
fn canonical_perturbations(axiom: Axiom) -> Vec<Perturbation> {
    let two_sided = BridgeWitness {
        near: vec![0, 1],
        bridge: vec![2, 3],
        far: vec![4],
    };
    let player = BridgeWitness {
        near: vec![0, 1, 3],
        bridge: vec![2],
        far: vec![4],
    };
    match axiom {
        Axiom::SizeInvariance => {
            vec![Perturbation::ClonePair {
                original: 0,
                clone: 1,
            }]
        }
        Axiom::BridgeSetIndependence => vec![Perturbation::Edits {
            witness: two_sided,
            edits: vec![
                EntryEdit {
                    i: 2,
                    j: 3,
                    value: Value::from_int(1),
                },
                EntryEdit {
                    i: 3,
                    j: 2,
                    value: Value::from_int(9),
                },
                EntryEdit {
                    i: 2,
                    j: 4,
                    value: Value::from_int(2),
                },
                EntryEdit {
                    i: 4,
                    j: 2,
                    value: Value::from_int(6),
                },
            ],
        }],
        Axiom::BridgeSetAutonomy => vec![Perturbation::Edits {
            witness: two_sided,
            edits: vec![
                EntryEdit {
                    i: 0,
                    j: 1,
                    value: Value::from_int(5),
                },
                EntryEdit {
                    i: 1,
                    j: 0,
                    value: Value::from_int(3),
                },
            ],
        }],
        Axiom::BridgePlayerIndependence => vec![
            Perturbation::Edits {
                witness: player.clone(),
                edits: vec![EntryEdit {
                    i: 2,
                    j: 4,
                    value: Value::from_int(3),
                }],
            },
            Perturbation::Edits {
                witness: player,
                edits: vec![EntryEdit {
                    i: 2,
                    j: 4,
                    value: Value::from_int(10),
                }],
            },
        ],
    }
}

/// One cell of the axiom/method verdict grid.
#[derive(Clone, Debug)]
pub struct GridCell {
    pub axiom: Axiom,
    pub method: Method,
    pub verdict: AxiomVerdict,
}

/// Verdicts for all four axioms against all three methods.
#[derive(Clone, Debug)]
pub struct GridReport {
    pub cells: Vec<GridCell>,
    pub trials: usize,
    pub seed: u64,
}

impl GridReport {
    pub fn cell(&self, axiom: Axiom, method: Method) -> &GridCell {
        self.cells
            .iter()
            .find(|c| c.axiom == axiom && c.method == method)
            .expect("grid covers every axiom/method pair")
    }
}

/// Runs every axiom against every method: the canonical explicit witnesses
/// first, then the randomized trials. A cell is satisfied only if nothing
/// flips anywhere.
pub fn axiom_grid(config: &TrialConfig) -> Result<GridReport, AxiomError> {
    grid_impl(config, check_axiom_random)
}

/// Single-threaded twin of [`axiom_grid`].
pub fn axiom_grid_sequential(config: &TrialConfig) -> Result<GridReport, AxiomError> {
    grid_impl(config, check_axiom_random_sequential)
}

fn grid_impl(
    config: &TrialConfig,
    random_check: fn(Axiom, Method, &TrialConfig) -> Result<AxiomVerdict, AxiomError>,
) -> Result<GridReport, AxiomError> {
    let reference = reference_problem();
    let mut cells = Vec::with_capacity(Axiom::ALL.len() * Method::ALL.len());
    for axiom in Axiom::ALL {
        for method in Method::ALL {
            let mut verdict = None;
            for perturbation in canonical_perturbations(axiom) {
                let v = check_axiom(axiom, method, &reference, &perturbation, config)?;
                if !v.is_satisfied() {
                    verdict = Some(v);
                    break;
                }
            }
            let verdict = match verdict {
                Some(v) => v,
                None => random_check(axiom, method, config)?,
            };
            cells.push(GridCell {
                axiom,
                method,
                verdict,
            });
        }
    }
    Ok(GridReport {
        cells,
        trials: config.trials,
        seed: config.seed,
    })
}
