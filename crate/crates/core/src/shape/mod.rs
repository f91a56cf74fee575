//! Region extraction from instance label masks and binary shape
//! descriptors: area, axes, eccentricity, perimeter, circularity, extent,
//! equivalent diameter, solidity.

mod labels;
mod props;

pub use labels::{label_binary, parse_cell_types, LabelMask, Region};
pub use props::{eccentricity_from_axes, shape_descriptors, RegionProps};
