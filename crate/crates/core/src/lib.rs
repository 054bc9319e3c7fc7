//! Rich job-shop scheduling: fixed routings, designated machines, machine
//! calendars with maintenance, sequence-dependent cleaning and due dates.
//!
//! The pipeline is [`io`] (documents) → [`instance`] → [`preprocess`]
//! (machine assignment, setup matrices) → [`solver`] (exact anytime
//! branch-and-bound) → [`validate`] and [`report`].

pub mod cli;
pub mod error;
pub mod instance;
pub mod io;
pub mod oracle;
pub mod preprocess;
pub mod report;
pub mod solver;
pub mod validate;

pub use error::{Error, Result};
