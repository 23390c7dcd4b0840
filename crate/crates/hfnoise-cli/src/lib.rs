//! Command-line plumbing for the `hfnoise` estimators: raw tick
//! ingestion/cleaning and the Monte Carlo benchmark harness.

pub mod bench;
pub mod ingest;

pub use hfnoise::bandwidth::break_ties;
