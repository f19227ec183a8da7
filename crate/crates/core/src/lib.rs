//! Counting paths in finite directed graphs by their edge-occurrence vectors.
//!
//! The numeric layers are generic over [`scalar::Real`] (`f32` or `f64`); the
//! lattice layer is exact. Aliases below fix the scalar to `f64`.

pub mod calculus;
pub mod counting;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod growth;
pub mod lattice;
pub mod linalg;
pub mod report;
pub mod scalar;
pub mod transfer;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{DirectedGraph, Graph, LabelledGraph, OccurrenceVector, PeriodData, Word};
pub use scalar::Real;

pub type SpectralData64 = transfer::SpectralData<f64>;
pub type SpectralData32 = transfer::SpectralData<f32>;
pub type Growth64<'g> = growth::Growth<'g, f64>;
pub type SoficGrowth64<'g> = growth::SoficGrowth<'g, f64>;
pub type GrowthProfile64 = growth::GrowthProfile<f64>;
pub type HessianForm64 = calculus::HessianForm<f64>;
pub type Predictor64<'g> = counting::Predictor<'g, f64>;
pub type CountReport64 = counting::CountReport<f64>;
pub type ConvergenceReport64 = counting::ConvergenceReport<f64>;
pub type Growth32<'g> = growth::Growth<'g, f32>;
