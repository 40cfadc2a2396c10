//! Chain algebra, boundary operators and `ℓ^p` minimal-flow quotient norms on
//! finite graphs, together with hyperbolicity diagnostics and a harness that
//! checks the inequalities behind proper affine actions of hyperbolic groups
//! on quotients of `ℓ^p` spaces.

pub mod certify;
pub mod chains;
pub mod flow;
pub mod graph;
pub mod hyperbolicity;
