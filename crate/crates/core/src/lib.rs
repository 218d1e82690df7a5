//! Epsilon-subdifferentials, conjugates, polar and normal sets, and optimal
//! value functions of small parametric convex programs.

pub mod dual;
pub mod error;
pub mod functions;
pub mod lp;
mod minkowski;
pub mod numerics;
pub mod oracle;
pub mod parametric;
pub mod report;
pub mod scenario;
pub mod sets;
pub mod subdiff;
pub mod transforms;

pub use dual::DualSet;
pub use error::{Error, Result};
pub use functions::ConvexFn;
pub use numerics::{ExtReal, Grid, Tolerances, XInterval};
pub use sets::ConvexSetDesc;
