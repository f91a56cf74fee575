use std::fs;
use std::path::Path;

use histomil::signature::{SampleLabel, TissueClass};
use histomil::{Error, Result};

/// Minimal comma-separated table with a header row. Values never contain
/// commas in this pipeline's formats.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Argument(format!("missing column `{name}`")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<&str>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(line, r)| {
                r[i].parse::<f64>().map_err(|_| Error::Parse {
                    line: line + 2,
                    msg: format!("column `{name}` has non-numeric value `{}`", r[i]),
                })
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            msg: "empty table".into(),
        })?;
        let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
            if row.len() != columns.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("row has {} of {} columns", row.len(), columns.len()),
                });
            }
            rows.push(row);
        }
        Ok(Table { columns, rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse { line, msg } => Error::Parse {
                line,
                msg: format!("{}: {msg}", path.display()),
            },
            other => other,
        })
    }
}

/// labels CSV: sample_id,score,label
pub fn write_labels(labels: &[SampleLabel], path: &Path) -> Result<()> {
    let mut t = Table::new(&["sample_id", "score", "label"]);
    for l in labels {
        t.push(vec![
            l.sample_id.clone(),
            l.score.to_string(),
            l.label.as_str().to_string(),
        ]);
    }
    t.save(path)
}

pub fn read_labels(path: &Path) -> Result<Vec<SampleLabel>> {
    let t = Table::load(path)?;
    let ids = t.column("sample_id")?;
    let scores = t.numeric_column("score")?;
    let classes = t.column("label")?;
    ids.iter()
        .zip(scores)
        .zip(classes)
        .map(|((id, score), class)| {
            Ok(SampleLabel {
                sample_id: id.to_string(),
                score,
                label: TissueClass::parse(class)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["x".into(), "1.5".into()]);
        t.push(vec!["y".into(), "-2".into()]);
        let parsed = Table::parse(&t.to_csv()).unwrap();
        assert_eq!(parsed, t);
        assert_eq!(parsed.numeric_column("b").unwrap(), vec![1.5, -2.0]);
        assert!(parsed.column("c").is_err());
    }

    #[test]
    fn labels_round_trip() {
        let dir = std::env::temp_dir().join("histomil_tables");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("labels.csv");
        let labels = vec![
            SampleLabel {
                sample_id: "s1".into(),
                score: 0.25,
                label: TissueClass::Hypoxic,
            },
            SampleLabel {
                sample_id: "s2".into(),
                score: -1.0,
                label: TissueClass::Normoxic,
            },
        ];
        write_labels(&labels, &path).unwrap();
        assert_eq!(read_labels(&path).unwrap(), labels);
    }

    #[test]
    fn ragged_row_is_a_parse_error() {
        assert!(matches!(
            Table::parse("a,b\n1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
