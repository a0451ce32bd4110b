use std::collections::HashMap;
use std::hash::Hash;

use super::{AlbumRecord, Source};

/// Source preference for collisions; earlier wins.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourcePriority(Vec<Source>);

impl Default for SourcePriority {
    fn default() -> Self {
        Self(vec![
            Source::MuMu,
            Source::MsdI,
            Source::Billboard,
            Source::Other,
        ])
    }
}

impl SourcePriority {
    pub fn new(order: Vec<Source>) -> Self {
        Self(order)
    }

    /// Lower is preferred; sources missing from the order rank last.
    pub fn rank(&self, source: Source) -> usize {
        self.0
            .iter()
            .position(|&s| s == source)
            .unwrap_or(self.0.len())
    }
}

/// Case-folded, trimmed, whitespace-collapsed form used for matching.
pub fn normalize_key(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Keeps one record per key: the best-ranked source, earliest on ties.
/// Survivors stay in input order.
fn collapse<K: Hash + Eq>(
    records: Vec<AlbumRecord>,
    priority: &SourcePriority,
    key: impl Fn(&AlbumRecord) -> K,
) -> Vec<AlbumRecord> {
    let mut winner: HashMap<K, usize> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        winner
            .entry(key(r))
            .and_modify(|w| {
                if priority.rank(r.source) < priority.rank(records[*w].source) {
                    *w = i;
                }
            })
            .or_insert(i);
    }
    let mut keep = vec![false; records.len()];
    for i in winner.into_values() {
        keep[i] = true;
    }
    records
        .into_iter()
        .zip(keep)
        .filter_map(|(r, k)| k.then_some(r))
        .collect()
}

/// Identifier collisions, then normalized (artist, title) collisions, then a
/// stable sort by (year, album_id).
pub fn dedupe(records: Vec<AlbumRecord>, priority: &SourcePriority) -> Vec<AlbumRecord> {
    let by_id = collapse(records, priority, |r| r.album_id.clone());
    let mut out = collapse(by_id, priority, |r| {
        (normalize_key(&r.artist), normalize_key(&r.title))
    });
    out.sort_by(|a, b| (a.year, &a.album_id).cmp(&(b.year, &b.album_id)));
    out
}
