//! Corpus files, model gateway, batch runner, evaluation and reporting
//! on top of [`ground_eval_core`].

pub use ground_eval_core as core;

pub mod cli;
pub mod config;
pub mod corpus_io;
pub mod evaluate;
pub mod gateway;
pub mod manifest;
pub mod report;
pub mod runner;
