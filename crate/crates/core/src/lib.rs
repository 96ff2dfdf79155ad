//! Toolkit for measuring the perception gap between real and neurally
//! rendered driving data.

pub mod agreement;
pub mod analysis;
pub mod augment;
pub mod det_eval;
pub mod error;
pub mod geom;
pub mod img_metrics;
pub mod map_eval;
pub mod model;

pub use error::{Error, Result};
