//! Direct sums, the dual-side identities, the Cauchy-Poisson step, the
//! exponential sums `T(R)` and the bound report.

pub mod bound;
pub mod direct;
pub mod duals;
pub mod expsum;
pub mod params;
pub mod theta;

pub use bound::{bound_report, BoundReport, DepthPrediction};
pub use direct::{cancellation_scan, direct_s, DirectSum, ScanRow};
pub use expsum::{exponent_fit, tr_scan, tr_sum, tr_sum_by_classes, ExponentFit, ExponentSumSpec, TrRow, TrValue};
pub use duals::{poisson_verify, voronoi_verify, DualComparison};
pub use params::PipelineParams;
pub use theta::{theta_direct, theta_dual, theta_zero_bound_check, ThetaInstance, ThetaValue, ThetaZeroReport};
