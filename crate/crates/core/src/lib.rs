pub mod builder;
pub mod cli;
pub mod geometry;
pub mod limitset;
pub mod moebius;
pub mod presentation;
