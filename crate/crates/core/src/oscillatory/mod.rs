//! Smooth weights, the delta-method kernel, Bessel functions and the
//! oscillatory integrals of the circle-method pipeline.

pub mod bessel;
pub mod bump;
pub mod delta;
pub mod integrals;
pub mod quadrature;

pub use bump::BumpFunction;
pub use quadrature::OscillatoryValue;
