//! Finds casualties lying on the floor in depth-camera point clouds.
//!
//! The pipeline fits the ground plane with RANSAC, removes the floor points,
//! projects everything that remains orthogonally onto the plane, rasterizes
//! the projections into a binary occupancy grid, and slides a rotated body
//! template across the grid to locate matches:
//!
//! ```text
//! cloud -> ground plane -> off-plane points -> 2D grid -> detections
//! ```
//!
//! [`synth`] renders seeded test scenes with known ground truth, and
//! [`eval`] scores the pipeline against them.

pub mod eval;
pub mod geometry;
pub mod gridmap;
pub mod io;
pub mod matcher;
pub mod pipeline;
pub mod ransac;
pub mod synth;
