use std::collections::BTreeSet;
use std::io::Read;

use serde::Serialize;

use super::{AlbumRecord, CorpusError, Source};

pub const REQUIRED_COLUMNS: [&str; 7] = [
    "album_id",
    "artist",
    "title",
    "year",
    "raw_genres",
    "image_ref",
    "source",
];

/// Separator between labels inside the `raw_genres` column.
pub const LIST_SEPARATOR: char = '|';

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RowError {
    /// 1-based data row (header excluded).
    pub row: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CleaningReport {
    pub rows_read: usize,
    pub missing_date: usize,
    pub row_errors: Vec<RowError>,
}

pub(crate) fn split_list(field: &str) -> Vec<String> {
    field
        .split(LIST_SEPARATOR)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Reads the metadata CSV. Rows without a year are dropped and counted;
/// other malformed rows are collected as [`RowError`]s.
pub fn ingest_metadata<R: Read>(
    reader: R,
) -> Result<(Vec<AlbumRecord>, CleaningReport), CorpusError> {
    let mut csv = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = csv.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let mut idx = [0usize; 7];
    for (slot, name) in idx.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = column(name).ok_or_else(|| CorpusError::SchemaError(name.to_string()))?;
    }
    let [id_col, artist_col, title_col, year_col, genres_col, image_col, source_col] = idx;
    let hash_col = column("image_hash");

    let mut records = Vec::new();
    let mut report = CleaningReport::default();
    for (i, row) in csv.records().enumerate() {
        let row_no = i + 1;
        report.rows_read += 1;
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                report.row_errors.push(RowError {
                    row: row_no,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let field = |c: usize| row.get(c).unwrap_or("").trim();
        if field(id_col).is_empty() {
            report.row_errors.push(RowError {
                row: row_no,
                message: "empty album_id".into(),
            });
            continue;
        }
        let year_text = field(year_col);
        if year_text.is_empty() {
            report.missing_date += 1;
            continue;
        }
        let year = match year_text.parse::<i32>() {
            Ok(y) => y,
            Err(_) => {
                report.row_errors.push(RowError {
                    row: row_no,
                    message: format!("invalid year {year_text:?}"),
                });
                continue;
            }
        };
        records.push(AlbumRecord {
            album_id: field(id_col).to_string(),
            artist: field(artist_col).to_string(),
            title: field(title_col).to_string(),
            year,
            raw_genres: split_list(field(genres_col)),
            supergenres: BTreeSet::new(),
            image_ref: field(image_col).to_string(),
            image_hash: hash_col
                .map(field)
                .filter(|h| !h.is_empty())
                .map(str::to_string),
            source: Source::parse(field(source_col)),
        });
    }
    Ok((records, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "album_id,artist,title,year,raw_genres,image_ref,source\n";

    #[test]
    fn parses_well_formed_rows() {
        let data =
            format!("{HEADER}mb1,\"Sinatra, Frank\",Songs,1956,jazz|vocal,covers/1.jpg,MuMu\n");
        let (recs, report) = ingest_metadata(data.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].artist, "Sinatra, Frank");
        assert_eq!(recs[0].raw_genres, vec!["jazz", "vocal"]);
        assert_eq!(recs[0].source, Source::MuMu);
        assert_eq!(report.rows_read, 1);
        assert!(report.row_errors.is_empty());
    }

    #[test]
    fn missing_year_is_dropped_and_counted() {
        let data = format!("{HEADER}a,x,y,,rock,a.jpg,Billboard\nb,x,z,1999,rock,b.jpg,Billboard\nc,x,w,soon,rock,c.jpg,Other\n");
        let (recs, report) = ingest_metadata(data.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(report.missing_date, 1);
        assert_eq!(report.row_errors.len(), 1);
        assert_eq!(report.row_errors[0].row, 3);
    }

    #[test]
    fn empty_file_gives_empty_report() {
        let (recs, report) = ingest_metadata(HEADER.as_bytes()).unwrap();
        assert!(recs.is_empty());
        assert_eq!(report, CleaningReport::default());
    }

    #[test]
    fn missing_column_is_schema_error() {
        let err = ingest_metadata("album_id,artist,title\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CorpusError::SchemaError(c) if c == "year"));
    }

    #[test]
    fn optional_hash_column() {
        let data = "album_id,artist,title,year,raw_genres,image_ref,source,image_hash\na,x,y,2001,,a.jpg,MSD-I,abc\n";
        let (recs, _) = ingest_metadata(data.as_bytes()).unwrap();
        assert_eq!(recs[0].image_hash.as_deref(), Some("abc"));
        assert!(recs[0].raw_genres.is_empty());
    }
}
