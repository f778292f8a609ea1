//! Eigenvalue bounds, spectral treatment effects and randomization tests for
//! pairwise outcome matrices observed under two treatment arms.
//!
//! Every numerical routine is generic over the float type through
//! [`Scalar`]; the `*F64` / `*F32` aliases below fix the common choices.

pub mod assignment;
pub mod bipartite;
pub mod bounds;
pub mod error;
pub mod hetero;
pub mod io;
pub mod oracle;
pub mod randtest;
pub mod scalar;
pub mod scalar_baseline;
pub mod smooth;
pub mod spectra;
pub mod ste;
pub mod synth;

pub use bounds::{
    binary_cell_bounds, dpo_bounds, dte_bounds, dte_curve, weighted_average_bounds,
    BoundOptions, CellBounds, DteCurve, IntervalBound, LowerBinding, UpperBinding,
};
pub use bipartite::{bipartite_cell_unmap, bipartite_dpo_bounds, symmetrize, BipartiteMatrix};
pub use error::{Error, Result};
pub use hetero::{
    decompose_additive, dpo_bounds_hetero, dte_bounds_hetero, ste_hetero, AdditiveDecomposition,
    HeteroMode,
};
pub use oracle::{bipartite_sharp_dpo, brute_dte_sharp, qap_sharp_dpo, SharpInterval};
pub use randtest::{
    censored_test, conjunctive_test, eig_distance_stat, matched_pair_test, Design, TestReport,
};
pub use scalar_baseline::{binned_cate, fh_bounds, makarov_bounds, qte, CateSample, OutcomeVector};
pub use smooth::{smoothed_dpo_bounds, smoothed_eig_product, smoothed_ste_cdf, SmoothKernel};
pub use ste::{
    counterfactual_weights, hw_gap, matrix_lift, non_extrapolative_weights,
    rank_invariance_check, ste, stt, stu, BasisTag, RankInvarianceReport, SteMatrix,
    WeightsResult,
};
pub use synth::{gen_diffusion, gen_factor, gen_linkformation, gen_social, GeneratedExperiment};
pub use scalar::Scalar;
pub use spectra::{
    eig_dot, eig_sorted, indicator, threshold_grid, Arm, IndicatorMatrix, OutcomeMatrix,
    Pairing, Spectrum,
};

pub type OutcomeMatrixF64 = OutcomeMatrix<f64>;
pub type OutcomeMatrixF32 = OutcomeMatrix<f32>;
pub type SpectrumF64 = Spectrum<f64>;
pub type SpectrumF32 = Spectrum<f32>;
pub type IntervalBoundF64 = IntervalBound<f64>;
pub type IntervalBoundF32 = IntervalBound<f32>;
pub type BipartiteMatrixF64 = BipartiteMatrix<f64>;
pub type BipartiteMatrixF32 = BipartiteMatrix<f32>;
pub type SteMatrixF64 = SteMatrix<f64>;
pub type SteMatrixF32 = SteMatrix<f32>;
pub type TestReportF64 = TestReport<f64>;
pub type TestReportF32 = TestReport<f32>;
pub type GeneratedExperimentF64 = GeneratedExperiment<f64>;
pub type GeneratedExperimentF32 = GeneratedExperiment<f32>;
