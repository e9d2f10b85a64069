//! Seeded train/validation/test assignment.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::SplitConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// One line of the split artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitEntry {
    pub claim_id: String,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitAssignment {
    pub assignment: BTreeMap<String, Split>,
}

impl SplitAssignment {
    pub fn get(&self, claim_id: &str) -> Option<Split> {
        self.assignment.get(claim_id).copied()
    }

    pub fn count(&self, split: Split) -> usize {
        self.assignment.values().filter(|s| **s == split).count()
    }

    pub fn entries(&self) -> Vec<SplitEntry> {
        self.assignment
            .iter()
            .map(|(id, s)| SplitEntry {
                claim_id: id.clone(),
                split: *s,
            })
            .collect()
    }

    pub fn from_entries(entries: Vec<SplitEntry>) -> Self {
        SplitAssignment {
            assignment: entries.into_iter().map(|e| (e.claim_id, e.split)).collect(),
        }
    }
}

/// Largest-remainder apportionment of `n` items to `fractions`. Ties in the
/// remainder go to the earlier bucket.
pub fn apportion(n: usize, fractions: &[f64]) -> Vec<usize> {
    let raw: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (raw[a] - raw[a].floor(), raw[b] - raw[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

fn assign(ids: &mut [String], sizes: &[usize], rng: &mut ChaCha8Rng, out: &mut BTreeMap<String, Split>) {
    ids.sort();
    ids.shuffle(rng);
    let splits = [Split::Train, Split::Validation, Split::Test];
    let mut it = ids.iter();
    for (split, &size) in splits.iter().zip(sizes) {
        for id in it.by_ref().take(size) {
            out.insert(id.clone(), *split);
        }
    }
}

/// Sorts ids, shuffles them with a ChaCha8 generator seeded by `seed`, and
/// cuts at the configured proportions. `labels`, when given, is used only
/// for stratified splitting and must align with `claim_ids`.
pub fn split(
    claim_ids: &[String],
    labels: Option<&[crate::corpus::VeracityLabel]>,
    config: &SplitConfig,
    seed: u64,
) -> Result<SplitAssignment> {
    if claim_ids.is_empty() {
        return Err(Error::InvalidInput("cannot split an empty corpus".into()));
    }
    let fractions = [config.train, config.validation, config.test];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = BTreeMap::new();
    match (config.stratify, labels) {
        (true, Some(labels)) => {
            if labels.len() != claim_ids.len() {
                return Err(Error::InvalidInput("labels do not align with claim ids".into()));
            }
            let mut groups: BTreeMap<_, Vec<String>> = BTreeMap::new();
            for (id, l) in claim_ids.iter().zip(labels) {
                groups.entry(*l).or_default().push(id.clone());
            }
            for ids in groups.values_mut() {
                let sizes = apportion(ids.len(), &fractions);
                assign(ids, &sizes, &mut rng, &mut assignment);
            }
        }
        _ => {
            let mut ids = claim_ids.to_vec();
            let sizes = apportion(ids.len(), &fractions);
            assign(&mut ids, &sizes, &mut rng, &mut assignment);
        }
    }
    if assignment.len() != claim_ids.len() {
        return Err(Error::InvalidInput("claim ids are not unique".into()));
    }
    let result = SplitAssignment { assignment };
    for s in [Split::Train, Split::Validation, Split::Test] {
        if result.count(s) == 0 {
            return Err(Error::InvalidInput(format!(
                "{s:?} split would be empty for {} records",
                claim_ids.len()
            )));
        }
    }
    Ok(result)
}
