pub mod annotation;
pub mod derivation;
pub mod ratio;
pub mod lp_model;
pub mod lp_solver;
pub mod search;
pub mod cli;
