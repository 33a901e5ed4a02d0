pub mod app;
pub mod commands;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod plot;
pub mod presets;
