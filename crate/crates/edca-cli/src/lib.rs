//! IO companion to `edca-core`: TOML config ingestion, scenario
//! orchestration, CSV emission and the closed-loop driver.

pub mod commands;
pub mod csvout;
pub mod error;
pub mod schema;
