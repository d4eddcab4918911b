pub mod bem;
pub mod bench;
pub mod cli;
pub mod error;
pub mod eval;
pub mod flux;
pub mod fmm;
pub mod poly;
pub mod quad;
pub mod panel;
pub mod series;
