use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AlbumRecord, CorpusError};

pub const DEFAULT_PERIOD_THRESHOLD: usize = 3000;

/// Inclusive range of whole years.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Period {
    pub start_year: i32,
    pub end_year: i32,
    pub album_count: usize,
}

impl Period {
    pub fn contains(&self, year: i32) -> bool {
        (self.start_year..=self.end_year).contains(&year)
    }

    pub fn label(&self) -> String {
        if self.start_year == self.end_year {
            self.start_year.to_string()
        } else {
            format!("{}-{}", self.start_year, self.end_year)
        }
    }
}

pub fn bin_periods(records: &[AlbumRecord], threshold: usize) -> Result<Vec<Period>, CorpusError> {
    let mut counts = BTreeMap::new();
    for r in records {
        *counts.entry(r.year).or_insert(0usize) += 1;
    }
    bin_year_counts(&counts, threshold)
}

/// Accumulates whole years in ascending order until a period holds at least
/// `threshold` albums; the last period keeps the remainder. Each period
/// starts the year after the previous one ends, so empty years are absorbed
/// and the periods tile the year range.
pub fn bin_year_counts(
    counts: &BTreeMap<i32, usize>,
    threshold: usize,
) -> Result<Vec<Period>, CorpusError> {
    if threshold == 0 {
        return Err(CorpusError::InvalidThreshold);
    }
    let mut periods = Vec::new();
    let mut start = None;
    let mut acc = 0;
    for (&year, &count) in counts.iter().filter(|(_, &c)| c > 0) {
        let begin = *start.get_or_insert(year);
        acc += count;
        if acc >= threshold {
            periods.push(Period {
                start_year: begin,
                end_year: year,
                album_count: acc,
            });
            start = Some(year + 1);
            acc = 0;
        }
    }
    if acc > 0 {
        let last_year = *counts
            .iter()
            .rev()
            .find(|(_, &c)| c > 0)
            .map(|(y, _)| y)
            .expect("non-empty accumulator");
        periods.push(Period {
            start_year: start.expect("set on first year"),
            end_year: last_year,
            album_count: acc,
        });
    }
    if periods.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(periods)
}

/// Position of the period containing `year`.
pub fn period_index(periods: &[Period], year: i32) -> Option<usize> {
    let i = periods.partition_point(|p| p.end_year < year);
    (i < periods.len() && periods[i].contains(year)).then_some(i)
}
