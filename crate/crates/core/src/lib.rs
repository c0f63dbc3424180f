//! Moments and cumulants of multiple stochastic integrals over free Poisson,
//! free semicircular and classical Poisson measures, computed by diagram
//! formulas over constrained partition classes and cross-checked against a
//! Fock-space operator oracle.

pub mod diagrams;
pub mod fock;
pub mod kernels;
pub mod limits;
pub mod partitions;
pub mod polynomials;
pub mod summation;
pub mod verify;
