//! Moments of the empirical correlation between two independent Wiener
//! processes, computed analytically and by Monte Carlo simulation.

pub mod error;
pub mod kernel;
pub mod moments;
pub mod montecarlo;
pub mod quadrature;
pub mod specialfun;
pub mod sum;

pub use error::{Error, Result};
pub use moments::{even_moment, even_moments, MomentMethod, MomentResult, SeriesTable};
pub use montecarlo::{MomentTable, SimConfig, StepDist};
pub use quadrature::{generating_rhs, second_moment, IntegralResult, QuadratureSpec};
pub use specialfun::MgfPoint;
