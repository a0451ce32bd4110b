use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{period_index, Period, Supergenre};

pub const DEFAULT_MIN_GENRE_COUNT: usize = 50;

/// Linear interpolation between order statistics of an ascending slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; zero for a single value.
    pub standard_error: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

impl Summary {
    pub fn from_values(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let standard_error = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q1 = quantile(&sorted, 0.25);
        let q3 = quantile(&sorted, 0.75);
        Some(Summary {
            n,
            mean,
            standard_error,
            median: quantile(&sorted, 0.5),
            q1,
            q3,
            iqr: q3 - q1,
        })
    }
}

/// One album's value for some metric.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub year: i32,
    pub genres: BTreeSet<Supergenre>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateStats {
    pub period: Period,
    /// `None` for the all-albums group of the period.
    pub genre: Option<Supergenre>,
    pub summary: Summary,
}

impl AggregateStats {
    pub fn genre_label(&self) -> &'static str {
        self.genre.map_or("ALL", Supergenre::name)
    }
}

/// Per-period (or per period and genre) summaries. Albums with several
/// genres count once in each; genre groups smaller than `min_genre_count`
/// are dropped. Rows are ordered by period, then genre name.
pub fn aggregate(
    observations: &[Observation],
    periods: &[Period],
    group_by_genre: bool,
    min_genre_count: usize,
) -> Vec<AggregateStats> {
    let mut groups: BTreeMap<(usize, Option<Supergenre>), Vec<f64>> = BTreeMap::new();
    for obs in observations {
        let Some(pi) = period_index(periods, obs.year) else {
            continue;
        };
        if group_by_genre {
            for &g in &obs.genres {
                groups.entry((pi, Some(g))).or_default().push(obs.value);
            }
        } else {
            groups.entry((pi, None)).or_default().push(obs.value);
        }
    }
    let mut out: Vec<AggregateStats> = groups
        .into_iter()
        .filter(|((_, genre), values)| genre.is_none() || values.len() >= min_genre_count.max(1))
        .filter_map(|((pi, genre), values)| {
            Summary::from_values(&values).map(|summary| AggregateStats {
                period: periods[pi],
                genre,
                summary,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        (a.period.start_year, a.genre.map(Supergenre::name))
            .cmp(&(b.period.start_year, b.genre.map(Supergenre::name)))
    });
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EcObservation {
    pub year: i32,
    pub h: f64,
    pub c: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub period: Period,
    pub n: usize,
    pub mean_h: f64,
    pub se_h: f64,
    pub mean_c: f64,
    pub se_c: f64,
}

/// Mean entropy-complexity point per period, in chronological order.
/// Periods without observations are skipped.
pub fn trajectory(observations: &[EcObservation], periods: &[Period]) -> Vec<TrajectoryPoint> {
    let mut hs = vec![Vec::new(); periods.len()];
    let mut cs = vec![Vec::new(); periods.len()];
    for obs in observations {
        if let Some(pi) = period_index(periods, obs.year) {
            hs[pi].push(obs.h);
            cs[pi].push(obs.c);
        }
    }
    periods
        .iter()
        .zip(hs.iter().zip(&cs))
        .filter_map(|(period, (h, c))| {
            let (h, c) = (Summary::from_values(h)?, Summary::from_values(c)?);
            Some(TrajectoryPoint {
                period: *period,
                n: h.n,
                mean_h: h.mean,
                se_h: h.standard_error,
                mean_c: c.mean,
                se_c: c.standard_error,
            })
        })
        .collect()
}
