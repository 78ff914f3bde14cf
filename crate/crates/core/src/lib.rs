pub mod textmetrics;
pub mod divergence;
pub mod corpus;
pub mod jsonl;
pub mod partition;
pub mod seeds;
pub mod promptgen;
pub mod inference;
pub mod evaluation;
pub mod config;
pub mod cli;
