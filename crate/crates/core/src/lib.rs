//! Day-ahead hourly pricing for thermostatic demand response.
//!
//! A retailer posts 24 hourly prices one day ahead; consumers run an optimal
//! HVAC controller against those prices and their aggregate mean demand is
//! affine in the price vector. This crate builds that affine model from
//! physical parameters, evaluates expected consumer surplus and retail profit
//! in closed form, traces the surplus/profit trade-off front, and extends the
//! pricing problem to retailer-owned renewables and consumer-side batteries.
//!
//! Module map:
//!
//! - [`model`]: per-consumer and aggregate affine demand models.
//! - [`sim`]: Monte Carlo consumer simulator (Kalman-filtered optimal control
//!   and a thermostat baseline).
//! - [`pricing`]: expected surplus/profit, optimal prices, trade-off front,
//!   constrained pricing and benchmark schemes.
//! - [`renewable`]: pricing with uniformly distributed renewable supply.
//! - [`storage`]: battery arbitrage and the retailer objective with storage.
//! - [`optim`]: shared numerical kernels.

pub mod error;
pub mod model;
pub mod optim;
pub mod pricing;
pub mod renewable;
pub mod sim;
pub mod storage;

mod price;

pub use error::{Error, Result};
pub use model::{
    aggregate, build_consumer_model, AffineDemandModel, AffineResponse, ConsumerDemandModel,
    ConsumerParams, MeanDemand,
};
pub use price::PriceVector;
pub use pricing::{TradeoffPoint, WholesaleCost};
pub use renewable::{BenefitSplit, RenewableModel};
pub use sim::DayResult;
pub use storage::{ArbitragePlan, BatteryGroup, BatteryParams, BatteryPopulation};

pub use nalgebra::{DMatrix, DVector};

/// Number of hourly slots in a pricing day.
pub const HORIZON: usize = 24;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
