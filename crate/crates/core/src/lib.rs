pub mod averaging;
pub mod facpow;
pub mod harness;
pub mod identities;
pub mod optimizers;
pub mod problems;
