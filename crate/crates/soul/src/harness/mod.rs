//! Experiment plumbing: configuration files, data loading, generators and
//! the command-line interface.

pub mod cli;
pub mod config;
pub mod data;

pub use cli::{cli, run_gradient_suite, write_trace_csv};
pub use config::{Experiment, ExperimentConfig};
pub use data::{
    gen_audio_problem, gen_audio_problem_default, gen_logistic_dataset,
    gen_random_effects_problem, load_csv_dataset, sinusoid_dictionary, support_count,
};
