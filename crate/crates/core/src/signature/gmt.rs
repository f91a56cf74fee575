use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read};

use crate::error::{Error, Result};

/// Named gene set from a GMT file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneSet {
    pub name: String,
    pub genes: BTreeSet<String>,
}

/// Parse the MSigDB GMT distribution format: one set per tab-separated
/// line, `name<TAB>description<TAB>gene...`. The description is discarded
/// and duplicate genes collapse.
pub fn parse_gmt(reader: impl Read) -> Result<Vec<GeneSet>> {
    let mut sets = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!(
                    "GMT line has {} fields, need name, description, genes",
                    fields.len()
                ),
            });
        }
        let genes: BTreeSet<String> = fields[2..]
            .iter()
            .map(|g| g.trim().to_string())
            .filter(|g| !g.is_empty())
            .collect();
        if genes.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                msg: "gene set without genes".into(),
            });
        }
        sets.push(GeneSet {
            name: fields[0].to_string(),
            genes,
        });
    }
    Ok(sets)
}
