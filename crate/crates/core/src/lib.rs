//! Balance control of the variable-height inverted pendulum (VHIP).
//!
//! `model` holds the dynamics and the fixed-step integrator, `indicators`
//! the instantaneous capture input (ICI) and related quantities,
//! `capturability` the inner and outer region tests, `control` the ICI
//! controller with ICP and DCM baselines, and `harness` scenarios, Monte
//! Carlo runs and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capturability;
pub mod cli;
pub mod control;
pub mod error;
pub mod harness;
pub mod indicators;
pub mod model;
