//! Corpus generation, experiment suites and reports.

pub mod config;
pub mod corpus;
pub mod dscan;
pub mod run;

pub use config::{demo_corpus, CorpusEntry, ExperimentConfig, Generator};
pub use corpus::{generate_corpus, Corpus, GridSample, Sample};
pub use dscan::{scan_d_delta, DRow, DScan};
pub use run::{run_experiment, run_on_corpus, Command, RunReport, Suite, Witness};
