//! Lap-time planning on low-friction tracks with a hybrid-A* search that
//! switches between steady-state drifting and near-linear grip driving.

pub mod dynamics;
pub mod error;
pub mod esm;
pub mod planner;
pub mod sim;
pub mod track;

pub use error::{Error, Result};
