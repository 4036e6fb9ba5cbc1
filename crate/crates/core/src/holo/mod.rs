//! Holomorphic self-maps of the ball, analytic function families, Bergman
//! quasi-norms and the joint pull-back measure of a pair of maps.

mod functions;
mod maps;
pub mod sweeps;

pub use functions::{
    apalpha_norm, dilate, fn_eval, monomial_norm, multi_indices, normalized_monomials,
    special_points, test_fn, unitary_to_axis, AnalyticFn, KernelPower, TestFn, TestFnParams,
    DEFAULT_N, DEFAULT_R0,
};
pub use maps::{
    map_eval, pair_images, pullback_measure, rho_gap, validate_self_map, HoloMap, PairImages,
    PolyTerm, ValidatedMap, DEFAULT_DIRECTIONS, DEFAULT_SHELLS, SELF_MAP_MARGIN,
};
