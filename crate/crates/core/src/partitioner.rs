//! Leaky and template-coordinated (sanitized) partitioning, plus nested
//! training-fraction subsampling.
//!
//! All shuffles go through [`crate::shuffle`], so results depend only on the
//! rng seed and record ids.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;

use crate::attribution::{template_matches_seed, AttributionIndex};
use crate::corpus::{Keyed, Seed, SplitName};
use crate::shuffle;
use crate::synthesis::Template;

pub const DEFAULT_RATIOS: [f64; 3] = [0.8, 0.1, 0.1];
/// Share of the sanitized train pool held out for validation.
pub const POOL_VALID_RATIO: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PartitionError {
    #[error("invalid ratio: {0}")]
    RatioError(String),
    #[error("duplicate record id {0}")]
    DuplicateId(String),
}

const EPS: f64 = 1e-9;

/// `⌊x⌋`, tolerant to representation error just below an integer.
pub fn floor_count(x: f64) -> usize {
    (x + EPS * x.abs().max(1.0)).floor().max(0.0) as usize
}

/// `⌈x⌉`, tolerant to representation error just above an integer.
pub fn ceil_count(x: f64) -> usize {
    (x - EPS * x.abs().max(1.0)).ceil().max(0.0) as usize
}

pub fn validate_ratios(ratios: [f64; 3]) -> Result<(), PartitionError> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(PartitionError::RatioError(format!(
            "{ratios:?} has a negative or non-finite entry"
        )));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > EPS {
        return Err(PartitionError::RatioError(format!("{ratios:?} sums to {sum}, not 1")));
    }
    Ok(())
}

/// Split sizes `(train, valid, test)` for `n` records: valid rounds down,
/// test rounds up, train takes the rest.
pub fn split_counts(n: usize, ratios: [f64; 3]) -> Result<[usize; 3], PartitionError> {
    validate_ratios(ratios)?;
    let n_valid = floor_count(ratios[1] * n as f64).min(n);
    let n_test = ceil_count(ratios[2] * n as f64).min(n - n_valid);
    Ok([n - n_valid - n_test, n_valid, n_test])
}

/// Three disjoint record lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split3<T> {
    pub train: Vec<T>,
    pub valid: Vec<T>,
    pub test: Vec<T>,
}

impl<T> Default for Split3<T> {
    fn default() -> Self {
        Self {
            train: Vec::new(),
            valid: Vec::new(),
            test: Vec::new(),
        }
    }
}

impl<T> Split3<T> {
    pub fn get(&self, name: SplitName) -> &[T] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Valid => &self.valid,
            SplitName::Test => &self.test,
        }
    }

    pub fn get_mut(&mut self, name: SplitName) -> &mut Vec<T> {
        match name {
            SplitName::Train => &mut self.train,
            SplitName::Valid => &mut self.valid,
            SplitName::Test => &mut self.test,
        }
    }

    pub fn counts(&self) -> [usize; 3] {
        [self.train.len(), self.valid.len(), self.test.len()]
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.valid.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every record tagged with its split, train first.
    pub fn iter(&self) -> impl Iterator<Item = (SplitName, &T)> {
        SplitName::ALL
            .into_iter()
            .flat_map(move |n| self.get(n).iter().map(move |r| (n, r)))
    }
}

impl<T: Keyed> Split3<T> {
    pub fn ids(&self, name: SplitName) -> Vec<&str> {
        self.get(name).iter().map(Keyed::key).collect()
    }
}

fn check_unique<T: Keyed>(items: &[T]) -> Result<(), PartitionError> {
    let mut seen = HashSet::with_capacity(items.len());
    match items.iter().find(|i| !seen.insert(i.key())) {
        Some(dup) => Err(PartitionError::DuplicateId(dup.key().to_string())),
        None => Ok(()),
    }
}

fn ranked<'a, T: Keyed>(items: &'a [T], seed: u64, stream: &str) -> Vec<&'a T> {
    shuffle::order(seed, stream, items.iter().map(Keyed::key))
        .into_iter()
        .map(|i| &items[i])
        .collect()
}

/// Uniform random split: shuffled order is cut into train, valid and test
/// blocks of the sizes given by [`split_counts`].
pub fn leaky_partition<T: Keyed + Clone>(
    items: &[T],
    ratios: [f64; 3],
    rng_seed: u64,
) -> Result<Split3<T>, PartitionError> {
    let [n_train, n_valid, _] = split_counts(items.len(), ratios)?;
    check_unique(items)?;
    let order = ranked(items, rng_seed, "leaky");
    Ok(Split3 {
        train: order[..n_train].iter().map(|r| (*r).clone()).collect(),
        valid: order[n_train..n_train + n_valid].iter().map(|r| (*r).clone()).collect(),
        test: order[n_train + n_valid..].iter().map(|r| (*r).clone()).collect(),
    })
}

/// Template partition induced by a seed partition.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TemplateSplit {
    pub train_template_ids: BTreeSet<String>,
    pub test_template_ids: BTreeSet<String>,
    /// Fraction of seeds in the seed test split.
    pub source_ratio: f64,
    /// Test templates that also match some train seed.
    pub conflicted_template_ids: BTreeSet<String>,
}

/// A template goes to test iff it matches at least one test seed.
pub fn split_templates(templates: &[Template], seeds: &[Seed], seed_test_ids: &BTreeSet<String>) -> TemplateSplit {
    let mut out = TemplateSplit {
        source_ratio: if seeds.is_empty() {
            0.0
        } else {
            seeds.iter().filter(|s| seed_test_ids.contains(&s.id)).count() as f64 / seeds.len() as f64
        },
        ..TemplateSplit::default()
    };
    for t in templates {
        let (test_seeds, train_seeds): (Vec<&Seed>, Vec<&Seed>) =
            seeds.iter().partition(|s| seed_test_ids.contains(&s.id));
        if test_seeds.iter().any(|s| template_matches_seed(t, s)) {
            out.test_template_ids.insert(t.id.clone());
            if train_seeds.iter().any(|s| template_matches_seed(t, s)) {
                out.conflicted_template_ids.insert(t.id.clone());
            }
        } else {
            out.train_template_ids.insert(t.id.clone());
        }
    }
    out
}

/// Seeded choice of `⌈fraction·|seeds|⌉` seed ids for the seed test split.
/// Smaller fractions under the same seed select subsets of larger ones.
pub fn select_seed_test_ids(seeds: &[Seed], fraction: f64, rng_seed: u64) -> Result<BTreeSet<String>, PartitionError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(PartitionError::RatioError(format!(
            "seed test fraction {fraction} outside [0, 1]"
        )));
    }
    let n = ceil_count(fraction * seeds.len() as f64).min(seeds.len());
    Ok(ranked(seeds, rng_seed, "seed-test")
        .into_iter()
        .take(n)
        .map(|s| s.id.clone())
        .collect())
}

/// Moves half (rounded down) of the seed test ids back to train; the kept
/// half is the leading half of the seeded order used for selection.
pub fn halve_seed_test_ids(ids: &BTreeSet<String>, rng_seed: u64) -> BTreeSet<String> {
    let keep = ids.len() - ids.len() / 2;
    shuffle::order(rng_seed, "seed-test", ids.iter().map(String::as_str))
        .into_iter()
        .take(keep)
        .map(|i| ids.iter().nth(i).expect("index in range").clone())
        .collect()
}

/// Counts kept alongside a sanitized split.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SanitizeDiagnostics {
    /// Instances attributed to both a train and a test template.
    pub ambiguous_count: usize,
    pub unattributed_count: usize,
    /// Test-only instances moved to the train pool because another
    /// pool instance shares one of their templates.
    pub demoted_count: usize,
    pub conflicted_template_count: usize,
    /// Split name -> template id -> attributed instance count.
    pub template_histograms: BTreeMap<String, BTreeMap<String, usize>>,
}

impl SanitizeDiagnostics {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("diagnostics serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sanitized<T> {
    pub split: Split3<T>,
    pub diagnostics: SanitizeDiagnostics,
}

/// Template-coordinated split.
///
/// Test receives instances whose attributed templates are all test
/// templates (and at least one). Everything else, ambiguous and
/// unattributed instances included, forms the train pool. A test candidate
/// sharing any attributed template with a pool member joins the pool, until
/// no such candidate remains; this keeps attributed template sets of test
/// and train/valid disjoint. The pool is then split into valid
/// (`⌊0.1·pool⌋`) and train by seeded shuffle.
pub fn sanitized_partition<T: Keyed + Clone>(
    items: &[T],
    tsplit: &TemplateSplit,
    index: &AttributionIndex,
    rng_seed: u64,
) -> Result<Sanitized<T>, PartitionError> {
    check_unique(items)?;
    let mut diag = SanitizeDiagnostics {
        conflicted_template_count: tsplit.conflicted_template_ids.len(),
        ..SanitizeDiagnostics::default()
    };
    let mut is_candidate = vec![false; items.len()];
    for (i, item) in items.iter().enumerate() {
        let attributed = index.get(item.key());
        let in_test = attributed
            .iter()
            .filter(|t| tsplit.test_template_ids.contains(*t))
            .count();
        if attributed.is_empty() {
            diag.unattributed_count += 1;
        } else if in_test == attributed.len() {
            is_candidate[i] = true;
        } else if in_test > 0 {
            diag.ambiguous_count += 1;
        }
    }
    let mut pool_templates: HashSet<&str> = items
        .iter()
        .zip(&is_candidate)
        .filter(|(_, c)| !**c)
        .flat_map(|(item, _)| index.get(item.key()).iter().map(String::as_str))
        .collect();
    loop {
        let mut moved = false;
        for (i, item) in items.iter().enumerate() {
            if is_candidate[i]
                && index
                    .get(item.key())
                    .iter()
                    .any(|t| pool_templates.contains(t.as_str()))
            {
                is_candidate[i] = false;
                diag.demoted_count += 1;
                pool_templates.extend(index.get(item.key()).iter().map(String::as_str));
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }

    let (test, pool): (Vec<T>, Vec<T>) = {
        let mut test = Vec::new();
        let mut pool = Vec::new();
        for (item, c) in items.iter().zip(&is_candidate) {
            if *c {
                test.push(item.clone());
            } else {
                pool.push(item.clone());
            }
        }
        (test, pool)
    };
    let n_valid = floor_count(POOL_VALID_RATIO * pool.len() as f64);
    let pool_order = ranked(&pool, rng_seed, "sanitized-valid");
    let split = Split3 {
        train: pool_order[n_valid..].iter().map(|r| (*r).clone()).collect(),
        valid: pool_order[..n_valid].iter().map(|r| (*r).clone()).collect(),
        test: ranked(&test, rng_seed, "sanitized-test").into_iter().cloned().collect(),
    };
    for (name, item) in split.iter() {
        let hist = diag.template_histograms.entry(name.to_string()).or_default();
        for t in index.get(item.key()) {
            *hist.entry(t.clone()).or_insert(0) += 1;
        }
    }
    Ok(Sanitized {
        split,
        diagnostics: diag,
    })
}

/// Replaces train by its seeded `⌊fraction·|train|⌋` sample, keeping the
/// original relative order. Samples under one seed are nested across
/// fractions.
pub fn subsample_train<T: Keyed + Clone>(
    split: &Split3<T>,
    fraction: f64,
    rng_seed: u64,
) -> Result<Split3<T>, PartitionError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(PartitionError::RatioError(format!(
            "fraction {fraction} outside (0, 1]"
        )));
    }
    let n = floor_count(fraction * split.train.len() as f64).min(split.train.len());
    let mut keep: Vec<usize> = shuffle::order(rng_seed, "subsample", split.train.iter().map(Keyed::key))
        .into_iter()
        .take(n)
        .collect();
    keep.sort_unstable();
    Ok(Split3 {
        train: keep.into_iter().map(|i| split.train[i].clone()).collect(),
        valid: split.valid.clone(),
        test: split.test.clone(),
    })
}
