//! Everything downstream of a maritime object detector with a distance head:
//! distance normalization, detection/ground-truth matching and metrics,
//! SORT-style tracking with running-average distance smoothing, geometric
//! baselines (triangulation, depth-median, chart ranging), and a deterministic
//! scene simulator for desk-scale pipeline experiments.

pub mod geometry;
pub mod hungarian;
pub mod io;
pub mod kalman;
pub mod matching;
pub mod metrics;
pub mod norm;
pub mod report;
pub mod sim;
pub mod tracker;
pub mod types;
