//! Movie profitability prediction from who/what/when features.

pub mod collab;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod labeling;
pub mod learners;
pub mod service;
pub mod synthetic;
pub mod text;
pub mod topic;

pub use error::{Error, Result};
