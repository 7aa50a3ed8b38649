pub mod assignment;
pub mod gen;
pub mod market;
pub mod mechanism;
pub mod model;
pub mod reveal;
pub mod verifier;
