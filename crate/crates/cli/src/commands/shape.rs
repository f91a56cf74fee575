use std::fs::File;
use std::path::{Path, PathBuf};

use clap::Args;
use histomil::shape::{parse_cell_types, shape_descriptors, LabelMask};
use histomil::{Error, Result};

use crate::config::{echo_run, PipelineConfig};
use crate::tables::Table;

/// Compute binary shape descriptors for every instance in a label mask.
#[derive(Debug, Args)]
pub struct ShapeArgs {
    /// 16-bit instance-id mask PNG, or a directory of them
    #[arg(long)]
    pub mask: PathBuf,
    /// optional CSV mapping instance_id,cell_type
    #[arg(long = "cell-types")]
    pub cell_types: Option<PathBuf>,
    /// keep only instances of this cell type (needs --cell-types)
    #[arg(long)]
    pub only: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

const COLUMNS: [&str; 12] = [
    "id",
    "area",
    "major_axis",
    "minor_axis",
    "eccentricity",
    "extent",
    "equivalent_diameter",
    "perimeter",
    "circularity",
    "solidity",
    "centroid_row",
    "centroid_col",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string())
        .unwrap_or_else(|| "undefined".into())
}

fn process_mask(
    path: &Path,
    filter: Option<(&std::collections::BTreeMap<u32, String>, &str)>,
    table: &mut Table,
) -> Result<usize> {
    let mask = LabelMask::load_png(path)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut n = 0;
    for region in mask.regions() {
        if let Some((types, only)) = filter {
            match types.get(&region.id) {
                Some(ty) if ty == only => {}
                _ => continue,
            }
        }
        let p = shape_descriptors(&region)?;
        table.push(vec![
            format!("{stem}/{}", region.id),
            p.area.to_string(),
            p.major_axis.to_string(),
            p.minor_axis.to_string(),
            p.eccentricity.to_string(),
            p.extent.to_string(),
            p.equivalent_diameter.to_string(),
            opt(p.perimeter),
            opt(p.circularity),
            opt(p.solidity),
            p.centroid.0.to_string(),
            p.centroid.1.to_string(),
        ]);
        n += 1;
    }
    Ok(n)
}

pub fn run(args: &ShapeArgs) -> Result<()> {
    if args.only.is_some() && args.cell_types.is_none() {
        return Err(Error::Argument("--only requires --cell-types".into()));
    }
    let types = match &args.cell_types {
        Some(p) => Some(parse_cell_types(
            File::open(p).map_err(|e| Error::io(p, e))?,
        )?),
        None => None,
    };
    let filter = match (&types, &args.only) {
        (Some(t), Some(only)) => Some((t, only.as_str())),
        _ => None,
    };

    let mut table = Table::new(&COLUMNS);
    let mut instances = 0;
    if args.mask.is_dir() {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&args.mask)
            .map_err(|e| Error::io(&args.mask, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("png"))
            .collect();
        paths.sort();
        for p in paths {
            instances += process_mask(&p, filter, &mut table)?;
        }
    } else {
        instances += process_mask(&args.mask, filter, &mut table)?;
    }

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let path = args.out.join("shape_descriptors.csv");
    table.save(&path)?;
    echo_run(
        &args.out,
        "shape",
        &[&args.mask],
        &PipelineConfig::load(None)?,
    )?;
    println!("measured {instances} instances -> {}", path.display());
    Ok(())
}
