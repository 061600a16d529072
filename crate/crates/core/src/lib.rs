pub mod geometry;
pub mod homography;
pub mod io;
pub mod matching;
pub mod pipeline;
pub mod planar;
pub mod synth;
