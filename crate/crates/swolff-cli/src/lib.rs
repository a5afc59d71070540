//! Command-line front end: JSON configs in, JSON reports out, plus seeded
//! verification suites over the core library.

pub mod config;
pub mod report;
pub mod suites;
pub mod tasks;
