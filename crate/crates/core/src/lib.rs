//! Handle placement for a support robot, from a planar seven-link body model
//! and the static force a two-link arm can deliver toward the body's centre
//! of mass.
//!
//! The pipeline runs [`body_model`] (kinematics and COM trajectory), then
//! [`arm_kinetics`] (arm force from joint torques), then [`placement_opt`]
//! (grid search). [`scenario_io`] and [`reporting`] handle the file formats.

// `!(x >= bound)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arm_kinetics;
pub mod body_model;
pub mod error;
pub mod geometry;
pub mod placement_opt;
pub mod reporting;
pub mod scenario_io;

pub use error::{Error, Result};
pub use geometry::Vec2;
