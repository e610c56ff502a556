//! From the merged orientation field to scalp-rooted strands.

mod connect;
mod trace;

pub use connect::{connect_strands, ConnectConfig, ConnectResult};
pub use trace::{
    dedupe_segments, interpolate_direction, stratified_seeds, trace_from, trace_segments,
    TraceConfig,
};

use crate::error::{Error, Result};
use crate::grid::OrientationGrid;
use crate::Vec3;

/// Final geometry: every exterior voxel, plus interior-only voxels that the
/// `invisible` predicate accepts (all of them when it is `None`).
pub fn merge_geometry(
    exterior: &OrientationGrid,
    interior: &OrientationGrid,
    invisible: Option<&(dyn Fn(&Vec3) -> bool + Sync)>,
) -> Result<OrientationGrid> {
    if !exterior.spec().same_as(interior.spec()) {
        return Err(Error::GridSpecMismatch(format!(
            "exterior {:?} vs interior {:?}",
            exterior.spec(),
            interior.spec()
        )));
    }
    let spec = *exterior.spec();
    let mut out = OrientationGrid::empty(spec);
    for i in 0..spec.len() {
        if let Some(d) = exterior.direction_linear(i) {
            out.set_linear(i, d, true);
        } else if let Some(d) = interior.direction_linear(i) {
            let keep = match invisible {
                Some(f) => f(&spec.center(spec.unlinear(i))),
                None => true,
            };
            if keep {
                out.set_linear(i, d, interior.is_exterior_linear(i));
            }
        }
    }
    Ok(out)
}
