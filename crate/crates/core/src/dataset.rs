//! CSV ingestion.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::point::Point;

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    /// Skip the first non-comment line.
    pub header: bool,
    /// Column holding an integer label; removed from the coordinates.
    pub label_column: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub rows: Vec<Point>,
    pub labels: Option<Vec<i64>>,
    pub source: Option<PathBuf>,
    pub dim: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows whose label equals `label`.
    pub fn with_label(&self, label: i64) -> Vec<Point> {
        match &self.labels {
            Some(ls) => self
                .rows
                .iter()
                .zip(ls)
                .filter(|(_, &l)| l == label)
                .map(|(p, _)| p.clone())
                .collect(),
            None => Vec::new(),
        }
    }
}

pub fn load_csv(path: &Path, opts: &CsvOptions) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut ds = parse_csv(&text, opts)?;
    ds.source = Some(path.to_path_buf());
    Ok(ds)
}

/// Parses comma- or whitespace-delimited numeric rows. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_csv(text: &str, opts: &CsvOptions) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    let mut header_pending = opts.header;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let cells: Vec<&str> = if line.contains(',') {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(Error::parse(
                    lineno,
                    None,
                    format!("ragged row: {} fields, expected {w}", cells.len()),
                ));
            }
            _ => {}
        }
        let mut coords = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::parse(lineno, Some(c + 1), format!("`{cell}` is not a number"))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(lineno, Some(c + 1), "non-finite value"));
            }
            if Some(c) == opts.label_column {
                if v.fract() != 0.0 {
                    return Err(Error::parse(
                        lineno,
                        Some(c + 1),
                        "label must be an integer",
                    ));
                }
                labels.push(v as i64);
            } else {
                coords.push(v);
            }
        }
        if let Some(lc) = opts.label_column {
            if lc >= cells.len() {
                return Err(Error::parse(
                    lineno,
                    Some(lc + 1),
                    "label column out of range",
                ));
            }
        }
        rows.push(Point::new(coords).map_err(|e| Error::parse(lineno, None, e.to_string()))?);
    }
    if rows.is_empty() {
        return Err(Error::Empty("no data rows"));
    }
    let dim = rows[0].dim();
    Ok(Dataset {
        rows,
        labels: opts.label_column.map(|_| labels),
        source: None,
        dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comma_and_whitespace() {
        let ds = parse_csv("# comment\n1,2\n\n3, 4\n", &CsvOptions::default()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim, 2);
        assert_eq!(ds.rows[1].coords(), &[3.0, 4.0]);
        let ds = parse_csv("1 2 3\n4\t5 6\n", &CsvOptions::default()).unwrap();
        assert_eq!(ds.dim, 3);
    }

    #[test]
    fn header_and_labels() {
        let opts = CsvOptions {
            header: true,
            label_column: Some(0),
        };
        let ds = parse_csv("label,x,y\n1,0.5,0.5\n0,1,1\n1,2,2\n", &opts).unwrap();
        assert_eq!(ds.dim, 2);
        assert_eq!(ds.labels.as_deref(), Some(&[1, 0, 1][..]));
        assert_eq!(ds.with_label(1).len(), 2);
        assert_eq!(ds.with_label(0)[0].coords(), &[1.0, 1.0]);
    }

    #[test]
    fn reports_locations() {
        let err = parse_csv("1,2\n3\n", &CsvOptions::default()).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Parse {
                    line: 2,
                    column: None,
                    ..
                }
            ),
            "{err}"
        );
        let err = parse_csv("1,2\n3,x\n", &CsvOptions::default()).unwrap_err();
        assert!(
            matches!(
                err,
                Error::Parse {
                    line: 2,
                    column: Some(2),
                    ..
                }
            ),
            "{err}"
        );
        let err = parse_csv("1,nan\n", &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let opts = CsvOptions {
            header: false,
            label_column: Some(0),
        };
        assert!(parse_csv("0.5,1\n", &opts).is_err());
        assert!(matches!(
            parse_csv("# only\n\n", &CsvOptions::default()),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn loads_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "0,0\n1,1\n").unwrap();
        let ds = load_csv(&path, &CsvOptions::default()).unwrap();
        assert_eq!(ds.source.as_deref(), Some(path.as_path()));
        assert!(matches!(
            load_csv(&dir.path().join("missing"), &CsvOptions::default()),
            Err(Error::Io(_))
        ));
    }
}
