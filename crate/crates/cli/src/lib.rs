//! Command-line tools and HTTP service for the kanapad input engine.

pub mod commands;
pub mod service;
