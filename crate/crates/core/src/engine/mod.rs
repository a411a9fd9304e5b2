//! Interior-point engine for the two convex problem classes used by the
//! solver: slacked convex QCQPs and small dense complex SDPs.

mod barrier;
pub mod sdp;
pub mod subproblem;

pub use barrier::BarrierSettings;
pub use sdp::{rank_one_extract, SdpProblem, SdpSolution, SdpStatus, RANK_ONE_RATIO};
pub use subproblem::{ConvexQcqpSubproblem, SlackedConstraint, SubproblemSolution, SubproblemStatus};
