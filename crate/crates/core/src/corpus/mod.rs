//! Album metadata: ingest, deduplication, genre standardization, dynamic
//! period binning and the aggregate statistics behind the reports.

mod dedupe;
mod genres;
mod ingest;
mod periods;
mod stats;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dedupe::{dedupe, normalize_key, SourcePriority};
pub use genres::{
    apply_imputation, load_genre_map, load_imputation, map_genres, GenreMap, GenreMapping,
    GenreReport, Imputation,
};
pub use ingest::{ingest_metadata, CleaningReport, RowError, REQUIRED_COLUMNS};
pub use periods::{bin_periods, bin_year_counts, period_index, Period, DEFAULT_PERIOD_THRESHOLD};
pub use stats::{
    aggregate, quantile, trajectory, AggregateStats, EcObservation, Observation, Summary,
    TrajectoryPoint, DEFAULT_MIN_GENRE_COUNT,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing required column {0:?}")]
    SchemaError(String),
    #[error("unknown supergenre {0:?}")]
    UnknownSupergenre(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("no records to bin")]
    EmptyCorpus,
    #[error("period threshold must be at least 1")]
    InvalidThreshold,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The eleven target genre categories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Supergenre {
    Pop,
    Rock,
    Speciality,
    JazzBlues,
    Electronic,
    WorldMusic,
    CountryFolk,
    Metal,
    RnB,
    HipHop,
    Classical,
}

impl Supergenre {
    pub const ALL: [Supergenre; 11] = [
        Supergenre::Pop,
        Supergenre::Rock,
        Supergenre::Speciality,
        Supergenre::JazzBlues,
        Supergenre::Electronic,
        Supergenre::WorldMusic,
        Supergenre::CountryFolk,
        Supergenre::Metal,
        Supergenre::RnB,
        Supergenre::HipHop,
        Supergenre::Classical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Supergenre::Pop => "Pop",
            Supergenre::Rock => "Rock",
            Supergenre::Speciality => "Speciality",
            Supergenre::JazzBlues => "Jazz & Blues",
            Supergenre::Electronic => "Electronic",
            Supergenre::WorldMusic => "World Music",
            Supergenre::CountryFolk => "Country & Folk",
            Supergenre::Metal => "Metal",
            Supergenre::RnB => "R&B",
            Supergenre::HipHop => "Hip Hop",
            Supergenre::Classical => "Classical",
        }
    }
}

impl fmt::Display for Supergenre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Supergenre {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = normalize_key(s);
        Supergenre::ALL
            .into_iter()
            .find(|g| normalize_key(g.name()) == wanted)
            .ok_or_else(|| CorpusError::UnknownSupergenre(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    MuMu,
    MsdI,
    Billboard,
    Other,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::MuMu => "MuMu",
            Source::MsdI => "MSD-I",
            Source::Billboard => "Billboard",
            Source::Other => "Other",
        }
    }

    /// Unrecognised labels map to [`Source::Other`].
    pub fn parse(s: &str) -> Source {
        match normalize_key(s).replace(['-', '_'], "").as_str() {
            "mumu" => Source::MuMu,
            "msdi" => Source::MsdI,
            "billboard" => Source::Billboard,
            _ => Source::Other,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlbumRecord {
    pub album_id: String,
    pub artist: String,
    pub title: String,
    pub year: i32,
    pub raw_genres: Vec<String>,
    pub supergenres: BTreeSet<Supergenre>,
    pub image_ref: String,
    /// Content hash of the cover, when the metadata already carries it.
    pub image_hash: Option<String>,
    pub source: Source,
}

#[cfg(test)]
pub(crate) fn album(id: &str, artist: &str, title: &str, year: i32, source: Source) -> AlbumRecord {
    AlbumRecord {
        album_id: id.into(),
        artist: artist.into(),
        title: title.into(),
        year,
        raw_genres: vec![],
        supergenres: BTreeSet::new(),
        image_ref: format!("{id}.png"),
        image_hash: None,
        source,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supergenre_names_round_trip() {
        for g in Supergenre::ALL {
            assert_eq!(g.name().parse::<Supergenre>().unwrap(), g);
        }
        assert_eq!(
            " world   music ".parse::<Supergenre>().unwrap(),
            Supergenre::WorldMusic
        );
        assert!("Polka".parse::<Supergenre>().is_err());
    }

    #[test]
    fn source_parsing() {
        assert_eq!(Source::parse("MSD-I"), Source::MsdI);
        assert_eq!(Source::parse("mumu"), Source::MuMu);
        assert_eq!(Source::parse(" Billboard"), Source::Billboard);
        assert_eq!(Source::parse("discogs"), Source::Other);
    }
}
