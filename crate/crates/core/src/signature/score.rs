use crate::error::{Error, Result};
use crate::signature::expr::ExpressionMatrix;
use crate::signature::gmt::GeneSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TissueClass {
    Normoxic,
    Hypoxic,
}

impl TissueClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            TissueClass::Normoxic => "normoxic",
            TissueClass::Hypoxic => "hypoxic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "normoxic" => Ok(TissueClass::Normoxic),
            "hypoxic" => Ok(TissueClass::Hypoxic),
            other => Err(Error::Argument(format!("unknown class `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleScore {
    pub sample_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleLabel {
    pub sample_id: String,
    pub score: f64,
    pub label: TissueClass,
}

/// Mean across-sample z-score of the signature genes, per sample.
/// Standardization uses the population SD; a zero-variance gene contributes
/// zero. Returned in the matrix's sample order.
pub fn signature_scores(expr: &ExpressionMatrix, gene_set: &GeneSet) -> Result<Vec<SampleScore>> {
    let present: Vec<&str> = gene_set
        .genes
        .iter()
        .map(|g| g.as_str())
        .filter(|g| expr.gene_row(g).is_some())
        .collect();
    if present.is_empty() {
        return Err(Error::Argument(format!(
            "no gene of set `{}` is present in the expression matrix",
            gene_set.name
        )));
    }
    let n = expr.sample_ids().len();
    let mut acc = vec![0.0f64; n];
    for gene in &present {
        let row = expr.gene_row(gene).unwrap();
        let mean = row.iter().sum::<f64>() / n as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        if sd == 0.0 {
            continue;
        }
        for (a, v) in acc.iter_mut().zip(row) {
            *a += (v - mean) / sd;
        }
    }
    let k = present.len() as f64;
    Ok(expr
        .sample_ids()
        .iter()
        .zip(acc)
        .map(|(s, a)| SampleScore {
            sample_id: s.clone(),
            score: a / k,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StratifyMode {
    /// Above the median hypoxic, below normoxic; ties at the median are
    /// assigned in ascending sample-id order so the split stays balanced.
    MedianSplit,
    /// Highest k hypoxic, lowest k normoxic, middle samples unlabeled.
    TopBottomK(usize),
}

pub fn stratify(scores: &[SampleScore], mode: StratifyMode) -> Result<Vec<SampleLabel>> {
    if scores.len() < 2 {
        return Err(Error::Argument(format!(
            "stratify needs at least 2 samples, got {}",
            scores.len()
        )));
    }
    match mode {
        StratifyMode::MedianSplit => {
            let n = scores.len();
            let mut sorted: Vec<f64> = scores.iter().map(|s| s.score).collect();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
            let median = if n % 2 == 1 {
                sorted[n / 2]
            } else {
                0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
            };

            let mut labels: Vec<SampleLabel> = Vec::with_capacity(n);
            let mut ties: Vec<&SampleScore> = Vec::new();
            let mut n_below = 0usize;
            for s in scores {
                if s.score > median {
                    labels.push(SampleLabel {
                        sample_id: s.sample_id.clone(),
                        score: s.score,
                        label: TissueClass::Hypoxic,
                    });
                } else if s.score < median {
                    n_below += 1;
                    labels.push(SampleLabel {
                        sample_id: s.sample_id.clone(),
                        score: s.score,
                        label: TissueClass::Normoxic,
                    });
                } else {
                    ties.push(s);
                }
            }
            // fill normoxic up to ceil(n/2) with the smallest tied ids
            ties.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
            let normoxic_target = n.div_ceil(2);
            let to_normoxic = normoxic_target.saturating_sub(n_below).min(ties.len());
            for (i, s) in ties.into_iter().enumerate() {
                labels.push(SampleLabel {
                    sample_id: s.sample_id.clone(),
                    score: s.score,
                    label: if i < to_normoxic {
                        TissueClass::Normoxic
                    } else {
                        TissueClass::Hypoxic
                    },
                });
            }
            labels.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
            Ok(labels)
        }
        StratifyMode::TopBottomK(k) => {
            if k == 0 {
                return Err(Error::Argument("top_bottom_k: k must be positive".into()));
            }
            if 2 * k > scores.len() {
                return Err(Error::Argument(format!(
                    "top_bottom_k: 2k = {} exceeds sample count {}",
                    2 * k,
                    scores.len()
                )));
            }
            let mut order: Vec<&SampleScore> = scores.iter().collect();
            // ties broken by ascending sample id for determinism
            order.sort_by(|a, b| {
                a.score
                    .partial_cmp(&b.score)
                    .expect("finite scores")
                    .then(a.sample_id.cmp(&b.sample_id))
            });
            let mut labels = Vec::with_capacity(2 * k);
            for s in &order[..k] {
                labels.push(SampleLabel {
                    sample_id: s.sample_id.clone(),
                    score: s.score,
                    label: TissueClass::Normoxic,
                });
            }
            for s in &order[order.len() - k..] {
                labels.push(SampleLabel {
                    sample_id: s.sample_id.clone(),
                    score: s.score,
                    label: TissueClass::Hypoxic,
                });
            }
            labels.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
            Ok(labels)
        }
    }
}
