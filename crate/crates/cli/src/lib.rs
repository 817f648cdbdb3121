//! Command-line orchestration for topicrec: dataset preparation, training,
//! evaluation, ablations, model bundles and the prediction service.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod service;
