//! Experiment orchestration: configuration, runs, and CSV artifacts.

pub mod config;
