// Validation uses `!(x > y)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod association;
pub mod calibration;
pub mod cli;
pub mod detection;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod scalar;
pub mod simulator;
pub mod tracking;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Point2f = geometry::Point2<f64>;
pub type Point2f32 = geometry::Point2<f32>;
pub type Homography64 = geometry::Homography<f64>;
pub type Homography32 = geometry::Homography<f32>;
pub type RansacConfig64 = geometry::RansacConfig<f64>;
pub type KalmanState64 = tracking::KalmanState<f64>;
pub type KalmanState32 = tracking::KalmanState<f32>;
pub type CostMatrix64 = association::CostMatrix<f64>;
