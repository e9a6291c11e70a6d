//! Support library for the `kaze` command line tool: image loading, the
//! versioned feature file format, the timed pipeline runner, and keypoint
//! overlay rendering.

pub mod draw;
pub mod features_file;
pub mod input;
pub mod pipeline;
