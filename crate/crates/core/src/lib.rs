pub mod combinatorics;
pub mod dynamics;
pub mod ray;
pub mod param_rays;
pub mod variation;
pub mod render;
pub mod io;
pub mod config;
pub mod verify;
