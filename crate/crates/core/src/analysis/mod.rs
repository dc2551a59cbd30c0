//! Density curves, monotone quantities, BL distances, blow-ups, tangent
//! cones and the compactness experiment.

mod bl;
mod compactness;
mod cone;
mod density;

pub use bl::{bl_distance, bl_distance_varifold, boundary_points, varifold_points, BlDistanceReport, DEFAULT_SCALES};
pub use compactness::{compactness_experiment, CompactnessParams, CompactnessReport, MemberReport};
pub use cone::{
    barrier_angle_check, barrier_normal, blow_up, boundary_orthogonality, fit_tangent_cone, fitted_conormal,
    half_plane_model, BarrierReport, BlowUpSequence, ConeClass, ConeFitParams, TangentConeFit,
};
pub use density::{
    boundary_monotone_quantity, calibrate_lambda, cutoff, density_curve, geometric_grid, interior_monotonicity_check,
    max_drop, smoothed_density_curve, DensityCurve, LambdaCalibration, MonotonicitySlack, ScalarWeight, UnitWeight,
    LAMBDA_EXPONENTS,
};
