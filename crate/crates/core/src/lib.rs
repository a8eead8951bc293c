//! An interpreter and concurrency checker for a core of CUDA-C.

pub mod deadlock;
pub mod device;
pub mod diag;
pub mod explore;
pub mod frontend;
pub mod machine;
pub mod memory;
pub mod program;
pub mod racecheck;
pub mod runtime_api;
pub mod streams;
pub mod types;
pub mod value;
