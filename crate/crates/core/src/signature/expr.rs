use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};

use crate::error::{Error, Result};

/// Genes-by-samples expression values. Rows are genes, columns samples, as
/// in the TSV export shape: first column gene ids, first row sample ids.
#[derive(Debug, Clone)]
pub struct ExpressionMatrix {
    gene_ids: Vec<String>,
    sample_ids: Vec<String>,
    gene_index: HashMap<String, usize>,
    /// genes x samples, row-major
    values: Vec<f64>,
}

impl ExpressionMatrix {
    pub fn new(gene_ids: Vec<String>, sample_ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != gene_ids.len() * sample_ids.len() {
            return Err(Error::Shape(format!(
                "expression matrix {}x{} needs {} values, got {}",
                gene_ids.len(),
                sample_ids.len(),
                gene_ids.len() * sample_ids.len(),
                values.len()
            )));
        }
        let mut gene_index = HashMap::with_capacity(gene_ids.len());
        for (i, g) in gene_ids.iter().enumerate() {
            if gene_index.insert(g.clone(), i).is_some() {
                return Err(Error::Argument(format!("duplicate gene id `{g}`")));
            }
        }
        let mut seen = HashMap::with_capacity(sample_ids.len());
        for s in &sample_ids {
            if seen.insert(s.clone(), ()).is_some() {
                return Err(Error::Argument(format!("duplicate sample id `{s}`")));
            }
        }
        Ok(ExpressionMatrix {
            gene_ids,
            sample_ids,
            gene_index,
            values,
        })
    }

    pub fn from_tsv(reader: impl Read) -> Result<Self> {
        let mut lines = BufReader::new(reader).lines().enumerate();
        let header = match lines.next() {
            Some((_, Ok(h))) => h,
            Some((_, Err(e))) => {
                return Err(Error::Parse {
                    line: 1,
                    msg: e.to_string(),
                })
            }
            None => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "empty expression file".into(),
                })
            }
        };
        let sample_ids: Vec<String> = header
            .split('\t')
            .skip(1)
            .map(|s| s.trim().to_string())
            .collect();
        if sample_ids.is_empty() {
            return Err(Error::Parse {
                line: 1,
                msg: "header has no sample columns".into(),
            });
        }
        let mut gene_ids = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let gene = fields.next().unwrap_or("").trim().to_string();
            if gene.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "missing gene id".into(),
                });
            }
            let row: Vec<f64> = fields
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|_| Error::Parse {
                        line: i + 1,
                        msg: format!("bad expression value `{}`", f.trim()),
                    })
                })
                .collect::<Result<_>>()?;
            if row.len() != sample_ids.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!(
                        "row has {} values for {} samples",
                        row.len(),
                        sample_ids.len()
                    ),
                });
            }
            gene_ids.push(gene);
            values.extend(row);
        }
        ExpressionMatrix::new(gene_ids, sample_ids, values)
    }

    pub fn to_tsv(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        write!(out, "gene_id")?;
        for s in &self.sample_ids {
            write!(out, "\t{s}")?;
        }
        writeln!(out)?;
        for (gi, g) in self.gene_ids.iter().enumerate() {
            write!(out, "{g}")?;
            for si in 0..self.sample_ids.len() {
                write!(out, "\t{}", self.values[gi * self.sample_ids.len() + si])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn gene_row(&self, gene: &str) -> Option<&[f64]> {
        self.gene_index.get(gene).map(|&gi| {
            let n = self.sample_ids.len();
            &self.values[gi * n..(gi + 1) * n]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_round_trip() {
        let tsv = "gene_id\tS1\tS2\nVEGFA\t1.5\t2\nACTB\t-0.25\t0\n";
        let m = ExpressionMatrix::from_tsv(tsv.as_bytes()).unwrap();
        assert_eq!(m.sample_ids(), &["S1", "S2"]);
        assert_eq!(m.gene_row("VEGFA").unwrap(), &[1.5, 2.0]);
        assert!(m.gene_row("MISSING").is_none());

        let mut out = Vec::new();
        m.to_tsv(&mut out).unwrap();
        let again = ExpressionMatrix::from_tsv(out.as_slice()).unwrap();
        assert_eq!(again.gene_row("ACTB").unwrap(), m.gene_row("ACTB").unwrap());
    }

    #[test]
    fn ragged_row_is_a_parse_error_with_line() {
        let tsv = "gene_id\tS1\tS2\nVEGFA\t1.5\n";
        match ExpressionMatrix::from_tsv(tsv.as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let tsv = "gene_id\tS1\tS1\nVEGFA\t1\t2\n";
        assert!(ExpressionMatrix::from_tsv(tsv.as_bytes()).is_err());
        let tsv = "gene_id\tS1\tS2\nVEGFA\t1\t2\nVEGFA\t3\t4\n";
        assert!(ExpressionMatrix::from_tsv(tsv.as_bytes()).is_err());
    }
}
