//! Contracts for difference for renewable plants under market uncertainty.
//!
//! The crate covers the whole analytical chain:
//!
//! * [`model`]: domain types and per-scenario plant metrics (generation,
//!   cost, LCOE, market values, revenues per capacity).
//! * [`scenario_sim`]: a merit-order market simulator that turns capacity
//!   mixes, weather years and fuel price levels into a scenario ensemble.
//! * [`strike`]: zero-expected-profit strike prices for the basic, 2way and
//!   financial CfD, deterministic and over an ensemble.
//! * [`cfd`]: ex-post CfD payments.
//! * [`expost`]: cost recovery, consumer prices with levy pass-through and
//!   volatility statistics.
//!
//! All numerics are generic over [`Scalar`] (`f64` and `f32`). The aliases
//! at the crate root fix the scalar to `f64`, which is what the CLI uses.

pub mod cfd;
pub mod error;
pub mod expost;
pub mod model;
pub mod scalar;
pub mod scenario_sim;
pub mod strike;
pub mod toy;

pub use cfd::{CfdContract, CfdType, PaymentRecord};
pub use error::{Error, Result};
pub use expost::{ConsumerPriceResult, DistributionSummary, ExPostResult};
pub use model::{
    BiddingZone, CostParameters, Fleet, PlantProfile, ProfileLabel, ReferenceFleet, Scenario,
    ScenarioEnsemble, TimeGrid,
};
pub use scalar::Scalar;
pub use scenario_sim::{
    Clearing, DemandSegment, DispatchableUnit, FuelLevel, InvestVariant, MarketConfig,
    PlantCapacity, UnitCost, UnitSpec, WeatherVariant,
};
pub use strike::{StrikeEstimate, StrikeOptions, TaylorDiagnostic};

pub type CostParametersF64 = model::CostParameters<f64>;
pub type PlantProfileF64 = model::PlantProfile<f64>;
pub type ScenarioF64 = model::Scenario<f64>;
pub type ScenarioEnsembleF64 = model::ScenarioEnsemble<f64>;
pub type MarketConfigF64 = scenario_sim::MarketConfig<f64>;
pub type CfdContractF64 = cfd::CfdContract<f64>;
pub type StrikeEstimateF64 = strike::StrikeEstimate<f64>;
pub type ExPostResultF64 = expost::ExPostResult<f64>;
pub type ConsumerPriceResultF64 = expost::ConsumerPriceResult<f64>;

pub type CostParametersF32 = model::CostParameters<f32>;
pub type PlantProfileF32 = model::PlantProfile<f32>;
pub type ScenarioF32 = model::Scenario<f32>;
pub type ScenarioEnsembleF32 = model::ScenarioEnsemble<f32>;
pub type MarketConfigF32 = scenario_sim::MarketConfig<f32>;
pub type CfdContractF32 = cfd::CfdContract<f32>;
pub type StrikeEstimateF32 = strike::StrikeEstimate<f32>;
