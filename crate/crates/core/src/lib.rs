//! Ricci and Ricci–DeTurck flow on flat periodic grids, with tools for
//! studying scalar curvature lower bounds of rough metrics.

pub mod diffeo;
pub mod duhamel;
pub mod error;
pub mod fd;
pub mod field;
pub mod flow;
pub mod geometry;
pub mod gfb;
pub mod grid;
pub mod interp;
pub mod initial_data;
pub mod linalg;
pub mod par;
pub mod spectral;
pub mod stats;
pub mod weak_bound;

pub use error::{Error, Result};
pub use field::{MetricField, TensorField};
pub use grid::GridSpec;
