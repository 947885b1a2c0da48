use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::{Column, ColumnKind, ColumnValues, RawTable};
use crate::error::{Error, Result};

struct Grid {
    header: Vec<String>,
    cells: Vec<Vec<String>>,
}

fn read_grid<R: Read>(reader: R) -> Result<Grid> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut cells = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::InvalidData(format!(
                "ragged row {}: {len} fields, expected {expected_len}",
                i + 1
            )),
            _ => Error::Csv(e),
        })?;
        cells.push(record.iter().map(|c| c.trim().to_string()).collect());
    }
    Ok(Grid { header, cells })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn build_column(name: &str, raw: Vec<String>, kind: Option<ColumnKind>) -> Result<Column> {
    let parsed: Vec<Option<Option<f64>>> = raw
        .iter()
        .map(|c| {
            if c.is_empty() {
                Some(None)
            } else {
                c.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some)
            }
        })
        .collect();
    let all_numeric = parsed.iter().all(Option::is_some);
    let kind = kind.unwrap_or(if all_numeric {
        ColumnKind::Numeric
    } else {
        ColumnKind::Categorical
    });
    let values = match kind {
        ColumnKind::Numeric => {
            if !all_numeric {
                return Err(Error::InvalidData(format!(
                    "column `{name}` is declared numeric but has non-numeric cells"
                )));
            }
            ColumnValues::Numeric(parsed.into_iter().map(Option::unwrap).collect())
        }
        ColumnKind::Categorical => ColumnValues::Categorical(
            raw.into_iter()
                .map(|c| if c.is_empty() { None } else { Some(c) })
                .collect(),
        ),
    };
    Ok(Column {
        name: name.to_string(),
        values,
    })
}

fn split_columns(grid: Grid) -> Vec<(String, Vec<String>)> {
    let Grid { header, cells } = grid;
    let mut cols: Vec<(String, Vec<String>)> = header
        .into_iter()
        .map(|h| (h, Vec::with_capacity(cells.len())))
        .collect();
    for row in cells {
        for (col, cell) in cols.iter_mut().zip(row) {
            col.1.push(cell);
        }
    }
    cols
}

/// Parses a labeled CSV from any reader. Empty cells are missing values;
/// a column is numeric iff every non-missing cell parses as a finite number,
/// unless `kinds` overrides it.
pub fn parse_csv<R: Read>(
    reader: R,
    label_column: &str,
    kinds: &HashMap<String, ColumnKind>,
) -> Result<RawTable> {
    let grid = read_grid(reader)?;
    if !grid.header.iter().any(|h| h == label_column) {
        return Err(Error::UnknownColumn(label_column.to_string()));
    }
    if grid.cells.is_empty() {
        return Err(Error::InvalidData("zero data rows".into()));
    }
    let mut labels = None;
    let mut columns = Vec::new();
    for (name, raw) in split_columns(grid) {
        if name == label_column {
            if let Some(i) = raw.iter().position(String::is_empty) {
                return Err(Error::InvalidData(format!(
                    "label column `{name}` has a missing value in row {}",
                    i + 1
                )));
            }
            labels = Some(raw);
        } else {
            let kind = kinds.get(&name).copied();
            columns.push(build_column(&name, raw, kind)?);
        }
    }
    RawTable::new(columns, label_column, labels.expect("label column present"))
}

pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    kinds: &HashMap<String, ColumnKind>,
) -> Result<RawTable> {
    parse_csv(open(path.as_ref())?, label_column, kinds)
}

/// Loads feature columns only, skipping any column named in `ignore`.
/// A header-only or completely empty file yields a zero-row table.
pub fn load_unlabeled_csv(
    path: impl AsRef<Path>,
    ignore: &[&str],
    kinds: &HashMap<String, ColumnKind>,
) -> Result<RawTable> {
    let path = path.as_ref();
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return RawTable::unlabeled(Vec::new(), 0);
    }
    let grid = read_grid(text.as_bytes())?;
    let n = grid.cells.len();
    let mut columns = Vec::new();
    for (name, raw) in split_columns(grid) {
        if ignore.contains(&name.as_str()) {
            continue;
        }
        let kind = kinds.get(&name).copied();
        columns.push(build_column(&name, raw, kind)?);
    }
    RawTable::unlabeled(columns, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, label: &str) -> Result<RawTable> {
        parse_csv(text.as_bytes(), label, &HashMap::new())
    }

    #[test]
    fn three_row_numeric_table() {
        let t = parse("a,y\n1,p\n2,q\n3,p", "y").unwrap();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(
            t.column("a").unwrap().values,
            ColumnValues::Numeric(vec![Some(1.0), Some(2.0), Some(3.0)])
        );
        let labels = t.labels().unwrap();
        assert_eq!(labels.classes, vec!["p", "q"]);
        assert_eq!(labels.values, vec![0, 1, 0]);
    }

    #[test]
    fn empty_cell_is_missing() {
        let t = parse("c,y\nred,a\n,b\nblue,a", "y").unwrap();
        assert_eq!(
            t.column("c").unwrap().values,
            ColumnValues::Categorical(vec![Some("red".into()), None, Some("blue".into())])
        );
    }

    #[test]
    fn header_only_is_rejected() {
        let err = parse("a,y\n", "y").unwrap_err();
        assert!(err.to_string().contains("zero data rows"), "{err}");
    }

    #[test]
    fn unknown_label_column() {
        assert!(matches!(
            parse("a,y\n1,p\n", "species"),
            Err(Error::UnknownColumn(c)) if c == "species"
        ));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = parse("a,b,y\n1,2,p\n3,q\n", "y").unwrap_err();
        assert!(err.to_string().contains("ragged"), "{err}");
    }

    #[test]
    fn missing_label_is_rejected() {
        assert!(parse("a,y\n1,p\n2,\n3,q\n", "y").is_err());
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(parse("a,y\n1,p\n2,p\n", "y").is_err());
    }

    #[test]
    fn kind_override() {
        let mut kinds = HashMap::new();
        kinds.insert("a".to_string(), ColumnKind::Categorical);
        let t = parse_csv("a,y\n1,p\n2,q".as_bytes(), "y", &kinds).unwrap();
        assert_eq!(t.column("a").unwrap().values.kind(), ColumnKind::Categorical);
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let t = parse("a,y\n1,10\n2,2\n3,10", "y").unwrap();
        assert_eq!(t.labels().unwrap().classes, vec!["2", "10"]);
    }
}
