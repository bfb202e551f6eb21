//! Exact tautological intersection numbers on moduli spaces of stable curves and
//! certified bounds for Weil-Petersson volumes.

pub mod asym;
pub mod bounds;
pub mod cache;
pub mod cli;
pub mod error;
pub mod intersect;
pub mod moduli;
pub mod rational;
pub mod verify;

pub use error::{Error, Result};
pub use intersect::{Engine, RemovalOrder};
pub use moduli::{IntersectionKey, KappaExponents, ModuliPoint, PsiExponents};
pub use rational::BigRational;
