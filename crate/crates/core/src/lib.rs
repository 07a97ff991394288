//! Event-driven trading research toolkit.
//!
//! The crate is organised along the pipeline it implements:
//!
//! * [`marketdata`]: price/event/metadata ingestion, the trading calendar and
//!   a seeded synthetic universe with a ground-truth ledger.
//! * [`riskfactors`]: price/volume style exposures plus industry dummies and
//!   daily cross-sectional factor premia.
//! * [`eventstudy`]: market-model fits, market-adjusted and factor-neutral
//!   abnormal returns, and per-event cumulative abnormal return (CAR).
//! * [`labeling`]: direction/strength labels, the event dataset format and
//!   per-type CAR statistics.
//! * [`hgrm`]: the hierarchical gated reward model.
//! * [`policylab`]: group-relative policy optimisation on a toy policy.
//! * [`backtest`]: the long-short event protocol and its metric suite.
//! * [`app`]: command-line dispatch.
//!
//! Data-parallel loops go through [`exec::Exec`]; with the `parallel` feature
//! (on by default) they run on rayon, otherwise sequentially.

// Negated float comparisons reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod app;
pub mod backtest;
pub mod eventstudy;
pub mod exec;
pub mod hgrm;
pub mod labeling;
pub mod marketdata;
pub mod policylab;
pub mod riskfactors;

pub use exec::Exec;
