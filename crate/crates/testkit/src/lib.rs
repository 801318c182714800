//! Test support: random input generators and brute-force oracles.

pub mod checks;
pub mod gen;
pub mod oracle;
