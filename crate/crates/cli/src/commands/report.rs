use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use histomil::stats::{boxplot_summary, mann_whitney, TestResult};
use histomil::{Error, Result};

use crate::config::{echo_run, PipelineConfig};
use crate::svg::{boxplot_svg, BoxplotGroup};
use crate::tables::Table;

/// Compare every numeric feature between two groups: boxplot SVGs with
/// significance stars plus a summary CSV.
#[derive(Debug, Args)]
pub struct ReportArgs {
    /// feature table: an id column plus numeric feature columns
    #[arg(long)]
    pub features: PathBuf,
    /// group table assigning each id to a group
    #[arg(long)]
    pub groups: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long = "id-col", default_value = "id")]
    pub id_col: String,
    #[arg(long = "group-id-col", default_value = "path")]
    pub group_id_col: String,
    #[arg(long = "group-col", default_value = "class")]
    pub group_col: String,
}

#[derive(Debug)]
pub struct FeatureComparison {
    pub feature: String,
    pub groups: (String, String),
    pub n: (usize, usize),
    pub medians: (f64, f64),
    pub result: TestResult,
}

/// Feature ids match a group id exactly or by their prefix before `/`
/// (instance descriptors inherit their mask's group).
fn group_of<'a>(id: &str, groups: &'a BTreeMap<String, String>) -> Option<&'a str> {
    if let Some(g) = groups.get(id) {
        return Some(g);
    }
    id.rsplit_once('/')
        .and_then(|(prefix, _)| groups.get(prefix))
        .map(|s| s.as_str())
}

pub fn compare_features(
    features: &Table,
    id_col: &str,
    group_map: &BTreeMap<String, String>,
) -> Result<Vec<FeatureComparison>> {
    let ids = features.column(id_col)?;
    let mut group_names: Vec<String> = group_map.values().cloned().collect();
    group_names.sort();
    group_names.dedup();
    if group_names.len() != 2 {
        return Err(Error::Argument(format!(
            "need exactly 2 groups, found {:?}",
            group_names
        )));
    }
    // normoxic/hypoxic keep their conventional order, else alphabetical
    let (a, b) = if group_names.contains(&"normoxic".to_string())
        && group_names.contains(&"hypoxic".to_string())
    {
        ("normoxic".to_string(), "hypoxic".to_string())
    } else {
        (group_names[0].clone(), group_names[1].clone())
    };

    let mut out = Vec::new();
    for feature in &features.columns {
        if feature == id_col {
            continue;
        }
        let idx = features.column_index(feature)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (row, id) in features.rows.iter().zip(&ids) {
            let value = &row[idx];
            if value == "undefined" {
                continue;
            }
            let v: f64 = value.parse().map_err(|_| {
                Error::Argument(format!(
                    "feature `{feature}` has non-numeric value `{value}`"
                ))
            })?;
            match group_of(id, group_map) {
                Some(g) if g == a => xs.push(v),
                Some(g) if g == b => ys.push(v),
                _ => {}
            }
        }
        if xs.is_empty() || ys.is_empty() {
            continue;
        }
        let result = mann_whitney(&xs, &ys)?;
        let median = |v: &[f64]| boxplot_summary(v).map(|s| s.median);
        out.push(FeatureComparison {
            feature: feature.clone(),
            groups: (a.clone(), b.clone()),
            n: (xs.len(), ys.len()),
            medians: (median(&xs)?, median(&ys)?),
            result,
        });
    }
    Ok(out)
}

pub fn run(args: &ReportArgs) -> Result<()> {
    let features = Table::load(&args.features)?;
    let groups_table = Table::load(&args.groups)?;
    let gids = groups_table.column(&args.group_id_col)?;
    let gvals = groups_table.column(&args.group_col)?;
    let group_map: BTreeMap<String, String> = gids
        .iter()
        .zip(&gvals)
        .map(|(i, g)| (i.to_string(), g.to_string()))
        .collect();

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let comparisons = compare_features(&features, &args.id_col, &group_map)?;
    if comparisons.is_empty() {
        return Err(Error::Argument(
            "no feature had members in both groups".into(),
        ));
    }

    let ids = features.column(&args.id_col)?;
    let mut summary = Table::new(&[
        "feature", "group_a", "n_a", "median_a", "group_b", "n_b", "median_b", "u", "p", "stars",
    ]);
    for cmp in &comparisons {
        // regroup the raw values for the figure
        let idx = features.column_index(&cmp.feature)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (row, id) in features.rows.iter().zip(&ids) {
            if row[idx] == "undefined" {
                continue;
            }
            let v: f64 = row[idx].parse().unwrap();
            match group_of(id, &group_map) {
                Some(g) if g == cmp.groups.0 => xs.push(v),
                Some(g) if g == cmp.groups.1 => ys.push(v),
                _ => {}
            }
        }
        let sa = boxplot_summary(&xs)?;
        let sb = boxplot_summary(&ys)?;
        let svg = boxplot_svg(
            &cmp.feature,
            &[
                BoxplotGroup {
                    name: &cmp.groups.0,
                    color: "#7fa8d9",
                    summary: &sa,
                },
                BoxplotGroup {
                    name: &cmp.groups.1,
                    color: "#e8a26b",
                    summary: &sb,
                },
            ],
            cmp.result.stars,
        );
        let svg_path = args.out.join(format!("{}_boxplot.svg", cmp.feature));
        std::fs::write(&svg_path, svg).map_err(|e| Error::io(&svg_path, e))?;

        summary.push(vec![
            cmp.feature.clone(),
            cmp.groups.0.clone(),
            cmp.n.0.to_string(),
            cmp.medians.0.to_string(),
            cmp.groups.1.clone(),
            cmp.n.1.to_string(),
            cmp.medians.1.to_string(),
            cmp.result.u.to_string(),
            cmp.result.p.to_string(),
            cmp.result.stars.as_str().to_string(),
        ]);
    }
    summary.save(&args.out.join("summary.csv"))?;
    echo_run(
        &args.out,
        "report",
        &[&args.features, &args.groups],
        &PipelineConfig::load(None)?,
    )?;
    println!(
        "compared {} features -> {}",
        comparisons.len(),
        args.out.join("summary.csv").display()
    );
    Ok(())
}
