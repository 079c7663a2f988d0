pub mod bb;
pub mod geometry;
pub mod harness;
pub mod instance;
pub mod lp;
pub mod oracle;
pub mod rng;
