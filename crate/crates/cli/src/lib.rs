//! File formats, the suggest-and-improve pipeline runner and the commands
//! behind the `qcqp` binary.

pub mod commands;
pub mod io;
pub mod pipeline;
pub mod timing;

pub use io::{load_problem, parse_problem, problem_to_json, save_problem, ParseError};
pub use pipeline::{run_pipeline, PipelineConfig, RunReport};
