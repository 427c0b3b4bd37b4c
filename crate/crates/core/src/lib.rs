pub mod cli;
pub mod dataset;
pub mod error;
pub mod global;
pub mod impute;
pub mod linalg;
pub mod local;
pub mod metrics;
pub mod models;
pub mod plot;
pub mod regress;
pub mod smooth;
pub mod stats;
