//! Differentiable inverse design of AlGaAs Bragg-reflection waveguides for counterpropagating
//! parametric down-conversion.

pub mod analysis;
pub mod design;
pub mod grad;
pub mod materials;
pub mod modes;
pub mod parallel;
pub mod pump;
pub mod quad;
pub mod stack;
pub mod surrogate;
