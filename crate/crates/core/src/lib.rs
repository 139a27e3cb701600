//! Zeros of random polynomials under the backward heat flow.
//!
//! * [`numerics`]: extended-range complex numbers.
//! * [`poly`]: polynomials, heat flow, Hermite polynomials.
//! * [`ensembles`]: coefficient profiles and random generators.
//! * [`limits`]: limiting log potentials, Stieltjes transforms, critical times.
//! * [`transport`]: transport maps pushing the initial root law forward.
//! * [`roots`]: Aberth-Ehrlich solver and trajectory tracking.
//! * [`analysis`]: statistics comparing root clouds with limit predictions.

pub mod numerics;
pub mod poly;
pub mod ensembles;
pub mod limits;
pub mod transport;
pub mod roots;
pub mod analysis;
