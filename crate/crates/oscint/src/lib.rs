//! Numerical laboratory for degenerate and singular oscillatory integral
//! operators
//! `Tf(x) = int e^{i lambda S(x,y)} K(x,y) psi(x,y) f(y) dy`
//! with homogeneous polynomial phases and kernels carrying an integrable
//! power singularity on the diagonal.
//!
//! The crate evaluates the operator and its standard decompositions
//! (near/far diagonal, dyadic pieces, X/Delta/Y scale groups, damped
//! families), estimates discretized `L^p -> L^p` operator norms, and runs
//! lambda-sweep experiments that fit the decay exponents and check the
//! endpoint and counterexample bounds.
//!
//! All numerics are generic over the scalar type via [`real::Real`]
//! (`f32` or `f64`); the aliases below fix the default `f64` precision.

pub mod experiments;
pub mod norms;
pub mod operator;
pub mod phase;
pub mod quad;
pub mod real;
pub mod weights;

pub use real::{Cplx, Real};

/// Double-precision phase.
pub type Phase = phase::HomogeneousPhase<f64>;
/// Double-precision kernel.
pub type Kernel = weights::SingularKernel<f64>;
/// Double-precision operator instance.
pub type Config = operator::OperatorConfig<f64>;
/// Double-precision test function.
pub type TestFunction = operator::SampledFunction<f64>;
/// Double-precision complex value.
pub type Complex = num_complex::Complex64;
