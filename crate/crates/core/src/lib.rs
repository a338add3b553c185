pub mod cubical;
pub mod cut;
pub mod error;
pub mod fmm;
pub mod front;
pub mod mesh;
pub mod metrics;
pub mod pipeline;
pub mod ridge;
pub mod svol;
pub mod synth;
pub mod valley;
pub mod volume;

pub use error::{Error, Result};
