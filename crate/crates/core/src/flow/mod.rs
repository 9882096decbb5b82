//! Flow fields, their file format, and direction-similarity metrics.

mod field;
mod sim;

pub use field::{
    fill_holes, flow_from_warp, flow_from_warp_with_mask, read_flo, write_flo, FlowField, FLO_MAGIC,
};
pub use sim::{
    distortion_flow_at, distortsim, distortsim_clip, flowsim, flowsim_clip, focus_area, theoretical_distortion_flow,
    theoretical_zoom_flow, zoom_flow_at, zoomsim, zoomsim_clip, FlowSimConfig, FlowSimResult, FrameScore,
    MetricReport, FOCUS_THRESHOLD,
};
