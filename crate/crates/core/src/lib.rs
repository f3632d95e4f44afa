pub mod brace;
pub mod classify;
pub mod cli;
pub mod construct;
pub mod fpalg;
pub mod group;
pub mod holo;
pub mod ybe;
