//! Deterministic multi-bank transaction economy with labeled laundering.
//!
//! The crate simulates individuals, companies, and banks exchanging
//! payments at minute resolution, embeds criminal placement, layering
//! patterns, and integration spending, tracks illicit funds through a
//! per-account taint ledger, and exports the result as labeled CSV plus
//! ground-truth sidecars. Everything is a pure function of the seed and
//! the configuration.

pub mod analyze;
pub mod calibrate;
pub mod config;
pub mod engine;
pub mod export;
pub mod laundering;
pub mod model;
pub mod money;
pub mod patterns;
pub mod population;
pub mod presets;
pub mod rng;
pub mod taint;

pub use config::{ConfigError, WorldConfig};
pub use model::{Account, Entity, EntityKind, PatternKind, PaymentFormat, Transaction};
pub use money::{CurrencyId, CurrencySpec, CurrencyTable};
pub use rng::{rng_stream, RngStream};
