//! Hard-negative targets drawn from other samples.

use std::collections::BTreeSet;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SampleRecord;
use crate::rewards::Task;

/// Appends 1 to 3 negative targets to every OVD record.
///
/// Candidates are the ground-truth labels of the other records, minus this
/// record's own targets. When fewer candidates exist than drawn, all of them
/// are used (possibly none). REC records pass through unchanged.
pub fn sample_negatives(records: &[SampleRecord], seed: u64) -> Vec<SampleRecord> {
    let positives: Vec<Vec<String>> = records.iter().map(SampleRecord::positive_labels).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut out = r.clone();
            if r.task != Task::Ovd {
                return out;
            }
            let k = rng.random_range(1..=3usize);
            let targets = out.targets.get_or_insert_with(Vec::new);
            let pool: Vec<&String> = positives
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .flat_map(|(_, p)| p)
                .filter(|l| !positives[i].contains(l) && !targets.contains(l))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let take = k.min(pool.len());
            for idx in sample_indices(&mut rng, pool.len(), take) {
                targets.push(pool[idx].clone());
            }
            out
        })
        .collect()
}
