//! Command line and HTTP service for the dialogue game benchmark.

pub mod cli;
pub mod service;
