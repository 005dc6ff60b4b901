//! Building blocks for a path-aggregation detector study: box geometry,
//! regression and quality-focal losses, NMS and cascade assignment, feature
//! pyramids, COCO-style evaluation, learning-rate schedules and dataset I/O.

pub mod assign;
pub mod cli;
pub mod dataio;
pub mod eval;
pub mod geometry;
pub mod gradcheck;
pub mod losses;
pub mod pyramid;
pub mod schedule;
