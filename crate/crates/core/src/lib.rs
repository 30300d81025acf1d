//! Indoor visible-light channel simulation and learned radio environment
//! maps.
//!
//! - [`scene`]: rooms, LEDs, receiver optics and preset configurations.
//! - [`channel`]: line-of-sight and single-bounce wall gains, received power.
//! - [`dataset`]: seeded position/RSS datasets, noise, splits, normalization.
//! - [`mlp`]: a feed-forward regressor trained with Adam.
//! - [`forest`]: CART, Extra Trees and AdaBoost.R2 baselines.
//! - [`evalmap`]: metrics, maps, profiles, timing and campaigns.
//!
//! The numeric modules are generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod channel;
pub mod dataset;
pub mod error;
pub mod evalmap;
pub mod forest;
pub mod mlp;
pub mod num;
pub mod scene;

pub use error::{Error, Result};
pub use num::Real;

pub type Point3 = scene::Point3<f64>;
pub type Room = scene::Room<f64>;
pub type Transmitter = scene::Transmitter<f64>;
pub type Receiver = scene::Receiver<f64>;
pub type Scene = scene::Scene<f64>;
pub type ChannelModel = channel::ChannelModel<f64>;
pub type PowerBreakdown = channel::PowerBreakdown<f64>;
pub type NormStats = dataset::NormStats<f64>;
pub type MlpConfig = mlp::MlpConfig<f64>;
pub type MlpModel = mlp::MlpModel<f64>;
pub type AdamState = mlp::AdamState<f64>;
pub type Tree = forest::Tree<f64>;
pub type Forest = forest::Forest<f64>;
pub type RadioMap = evalmap::RadioMap<f64>;

pub type Scene32 = scene::Scene<f32>;
pub type MlpModel32 = mlp::MlpModel<f32>;
pub type Forest32 = forest::Forest<f32>;
pub type RadioMap32 = evalmap::RadioMap<f32>;
