//! Cell-grid destination and arrival-time prediction for AIS record streams.
//!
//! Training records are bucketed into cells of a lat/lon grid. A coarse grid
//! holds destination counters keyed by course, ship type, speed interval and
//! departure port; a fine grid holds running arrival-time statistics per
//! destination. Prediction matches each unlabeled record against its cell (or
//! the nearest trained one), smooths the destination stream per ship, and
//! can optionally relabel finished trips and learn from them.
//!
//! All models are generic over the [`Scalar`] type. The aliases at the crate
//! root fix it to `f64`; [`single`] has the `f32` equivalents.

pub mod config;
pub mod dest;
pub mod engine;
pub mod error;
pub mod eta;
pub mod evaluation;
pub mod geo;
pub mod manifest;
pub mod ports;
pub mod record;
pub mod robustness;
pub mod scalar;
pub mod semi;
pub mod synth;

pub use config::{EtaDimension, TieBreak};
pub use dest::{DestCounters, TrainOutcome};
pub use engine::{CommittedTrip, Prediction, RunStats};
pub use error::{Error, Result};
pub use evaluation::{EvalReport, ScoredTrip, TruthRow};
pub use geo::CellId;
pub use record::Schema;
pub use robustness::ShipHistory;
pub use scalar::Scalar;

pub type Coord = geo::Coord<f64>;
pub type GridSpec = geo::GridSpec<f64>;
pub type AisRecord = record::AisRecord<f64>;
pub type Port = ports::Port<f64>;
pub type PortRegistry = ports::PortRegistry<f64>;
pub type EngineConfig = config::EngineConfig<f64>;
pub type DestGridModel = dest::DestGridModel<f64>;
pub type EtaGridModel = eta::EtaGridModel<f64>;
pub type TimeStats = eta::TimeStats<f64>;
pub type Engine = engine::Engine<f64>;
pub type ModelSnapshot = engine::ModelSnapshot<f64>;
pub type TripBuffer = semi::TripBuffer<f64>;
pub type TripTruth = evaluation::TripTruth<f64>;
pub type SynthConfig = synth::SynthConfig<f64>;
pub type SynthDataset = synth::SynthDataset<f64>;

/// Single-precision aliases.
pub mod single {
    pub type Coord = crate::geo::Coord<f32>;
    pub type GridSpec = crate::geo::GridSpec<f32>;
    pub type AisRecord = crate::record::AisRecord<f32>;
    pub type PortRegistry = crate::ports::PortRegistry<f32>;
    pub type EngineConfig = crate::config::EngineConfig<f32>;
    pub type Engine = crate::engine::Engine<f32>;
    pub type SynthConfig = crate::synth::SynthConfig<f32>;
}
