use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;

use serde::Serialize;

use super::ingest::split_list;
use super::{normalize_key, AlbumRecord, CorpusError, Supergenre};

const DISCARD: &str = "DISCARD";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GenreMapping {
    Genres(BTreeSet<Supergenre>),
    Discard,
}

/// Raw genre label to supergenres, keyed by normalized label.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GenreMap {
    entries: HashMap<String, GenreMapping>,
}

impl GenreMap {
    pub fn insert(&mut self, raw_label: &str, mapping: GenreMapping) {
        self.entries.insert(normalize_key(raw_label), mapping);
    }

    pub fn get(&self, raw_label: &str) -> Option<&GenreMapping> {
        self.entries.get(&normalize_key(raw_label))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Reads `raw_label,supergenres` rows; `supergenres` is `|`-separated or `DISCARD`.
pub fn load_genre_map<R: Read>(reader: R) -> Result<GenreMap, CorpusError> {
    let mut csv = csv::Reader::from_reader(reader);
    let headers = csv.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CorpusError::SchemaError(name.to_string()))
    };
    let (label_col, genres_col) = (col("raw_label")?, col("supergenres")?);
    let mut map = GenreMap::default();
    for (i, row) in csv.records().enumerate() {
        let row = row?;
        let label = row.get(label_col).unwrap_or("").trim();
        let value = row.get(genres_col).unwrap_or("").trim();
        let mapping = if value.eq_ignore_ascii_case(DISCARD) {
            GenreMapping::Discard
        } else {
            let genres = split_list(value)
                .iter()
                .map(|g| g.parse::<Supergenre>())
                .collect::<Result<BTreeSet<_>, _>>()?;
            if genres.is_empty() {
                return Err(CorpusError::Malformed {
                    line: i + 2,
                    message: format!("label {label:?} maps to nothing; use {DISCARD}"),
                });
            }
            GenreMapping::Genres(genres)
        };
        map.insert(label, mapping);
    }
    Ok(map)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GenreReport {
    /// Raw labels absent from the map, with occurrence counts.
    pub unmapped: BTreeMap<String, usize>,
    /// Albums left without any supergenre.
    pub unlabeled: Vec<String>,
}

/// Fills `supergenres` from `raw_genres`; discarded labels contribute nothing.
pub fn map_genres(records: &mut [AlbumRecord], map: &GenreMap) -> GenreReport {
    let mut report = GenreReport::default();
    for record in records.iter_mut() {
        for label in &record.raw_genres {
            match map.get(label) {
                Some(GenreMapping::Genres(genres)) => record.supergenres.extend(genres),
                Some(GenreMapping::Discard) => {}
                None => *report.unmapped.entry(normalize_key(label)).or_insert(0) += 1,
            }
        }
        if record.supergenres.is_empty() {
            report.unlabeled.push(record.album_id.clone());
        }
    }
    report
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Imputation {
    pub album_id: String,
    pub genre: Supergenre,
    pub sure: bool,
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

/// Reads `album_id,genre,sure` rows.
pub fn load_imputation<R: Read>(reader: R) -> Result<Vec<Imputation>, CorpusError> {
    let mut csv = csv::Reader::from_reader(reader);
    let headers = csv.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CorpusError::SchemaError(name.to_string()))
    };
    let (id_col, genre_col, sure_col) = (col("album_id")?, col("genre")?, col("sure")?);
    let mut out = Vec::new();
    for (i, row) in csv.records().enumerate() {
        let row = row?;
        let field = |c: usize| row.get(c).unwrap_or("").trim();
        let sure = parse_bool(field(sure_col)).ok_or_else(|| CorpusError::Malformed {
            line: i + 2,
            message: format!("invalid sure flag {:?}", field(sure_col)),
        })?;
        out.push(Imputation {
            album_id: field(id_col).to_string(),
            genre: field(genre_col).parse()?,
            sure,
        });
    }
    Ok(out)
}

/// Fills empty supergenre sets from confident imputations. Returns the
/// number of records filled; labelled records are never touched.
pub fn apply_imputation(records: &mut [AlbumRecord], imputed: &[Imputation]) -> usize {
    let mut confident: HashMap<&str, BTreeSet<Supergenre>> = HashMap::new();
    for row in imputed.iter().filter(|r| r.sure) {
        confident
            .entry(row.album_id.as_str())
            .or_default()
            .insert(row.genre);
    }
    let mut filled = 0;
    for record in records.iter_mut().filter(|r| r.supergenres.is_empty()) {
        if let Some(genres) = confident.get(record.album_id.as_str()) {
            record.supergenres = genres.clone();
            filled += 1;
        }
    }
    filled
}
