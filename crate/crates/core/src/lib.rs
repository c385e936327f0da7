//! Confidence-gated argument classification.
//!
//! A compact base classifier labels every argument; the least certain
//! fraction, chosen by an uncertainty order statistic, is re-classified by a
//! chat-style LLM. The crate ingests Args.me, UKP and US2016, runs the
//! cascade and reports top-1 accuracy, per-class and macro F1, and
//! delegation cost.
//!
//! Modules, bottom-up:
//!
//! * [`corpus`]: parsers, interchange format, splits.
//! * [`base_model`]: probability vectors, prediction files, HTTP inference.
//! * [`calibration`]: uncertainty scores and the delegation threshold.
//! * [`refiner`]: prompts, reply parsing, chat client, response cache.
//! * [`cascade`]: routing and result assembly.
//! * [`metrics`]: evaluation reports.
//! * [`cli`]: the `argcascade` command line.

pub mod base_model;
pub mod calibration;
pub mod cascade;
pub mod cli;
pub mod corpus;
pub mod http;
pub mod metrics;
pub mod mock_server;
pub mod refiner;

pub use base_model::{load_predictions, save_predictions, BaseModel, PredictionFile, PredictionRecord, ProbabilityVector};
pub use calibration::{calibrate, route, uncertainty, CalibrationProfile, Route};
pub use cascade::{run_cascade, run_full, CascadeOutput, CascadeResult, Source};
pub use corpus::{ArgumentSample, LabelScheme, SplitSpec};
pub use metrics::{compare, evaluate, EvaluationReport};
pub use refiner::{parse_verdict, render_prompt, LlmVerdict, Refiner};
