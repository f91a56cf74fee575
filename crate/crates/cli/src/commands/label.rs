use std::fs::File;
use std::path::PathBuf;

use clap::Args;
use histomil::signature::{parse_gmt, signature_scores, stratify, ExpressionMatrix, StratifyMode};
use histomil::{Error, Result};

use crate::config::{echo_run, PipelineConfig};
use crate::tables::write_labels;

/// Score samples against a gene signature and stratify them into weak
/// hypoxic/normoxic labels.
#[derive(Debug, Args)]
pub struct LabelArgs {
    /// expression TSV (genes as rows, samples as columns)
    #[arg(long)]
    pub expression: PathBuf,
    /// GMT gene set file
    #[arg(long = "gene-set")]
    pub gene_set: PathBuf,
    /// which set to use when the GMT holds several (default: first)
    #[arg(long = "set-name")]
    pub set_name: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// median | top-bottom-k
    #[arg(long, default_value = "median")]
    pub mode: String,
    #[arg(long)]
    pub k: Option<usize>,
}

pub fn run(args: &LabelArgs) -> Result<()> {
    let expr_file = File::open(&args.expression).map_err(|e| Error::io(&args.expression, e))?;
    let expr = ExpressionMatrix::from_tsv(expr_file)?;
    let gmt_file = File::open(&args.gene_set).map_err(|e| Error::io(&args.gene_set, e))?;
    let sets = parse_gmt(gmt_file)?;
    let set = match &args.set_name {
        Some(name) => sets
            .iter()
            .find(|s| &s.name == name)
            .ok_or_else(|| Error::Argument(format!("gene set `{name}` not found")))?,
        None => sets
            .first()
            .ok_or_else(|| Error::Argument("gene set file contains no sets".into()))?,
    };

    let scores = signature_scores(&expr, set)?;
    let mode = match args.mode.as_str() {
        "median" => StratifyMode::MedianSplit,
        "top-bottom-k" => StratifyMode::TopBottomK(
            args.k
                .ok_or_else(|| Error::Argument("--k is required for top-bottom-k".into()))?,
        ),
        other => return Err(Error::Argument(format!("unknown stratify mode `{other}`"))),
    };
    let labels = stratify(&scores, mode)?;

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let labels_path = args.out.join("labels.csv");
    write_labels(&labels, &labels_path)?;
    echo_run(
        &args.out,
        "label",
        &[&args.expression, &args.gene_set],
        &PipelineConfig::default(),
    )?;

    let hypoxic = labels
        .iter()
        .filter(|l| l.label.as_str() == "hypoxic")
        .count();
    println!(
        "scored {} samples with `{}`: {hypoxic} hypoxic / {} normoxic -> {}",
        scores.len(),
        set.name,
        labels.len() - hypoxic,
        labels_path.display()
    );
    Ok(())
}
