//! Design and evaluation of comparison-limited vector quantizers.
//!
//! A quantizer here is built from `k` one-bit comparators: input `x ∈ R^d`
//! maps to the sign vector of `Vx + t`, where the rows of `V` and entries
//! of `t` define `k` affine hyperplanes. The sign vector names the
//! arrangement cell containing `x`, and the decoder returns that cell's
//! centroid. The crate provides:
//!
//! - [`geometry`]: hyperplane arrangements, region labels, region-count
//!   bounds, general-position checks, and sampled region enumeration;
//! - [`source`]: reproducible iid Gaussian/uniform sources on independent
//!   counter-derived random streams;
//! - [`estimation`]: Monte Carlo centroid and distortion estimation;
//! - [`optimizer`]: alternating centroid/configuration search with annealed
//!   global moves, coordinate-local moves, and random restarts;
//! - [`baseline`]: scalar Lloyd-Max and generalized Lloyd benchmarks with
//!   matched point or comparator budgets;
//! - [`quantizer`]: the validated design artifact and its JSON schema;
//! - [`experiments`]: sweep runner, CSV emission, and config parsing for
//!   the `cmplq` binary.
//!
//! ```
//! use cmplq::{
//!     optimize, EstimationParams, OptimizerParams, RngStream, SourceKind, SourceModel,
//! };
//!
//! let source = SourceModel::new(SourceKind::GaussianStd, 1)?;
//! let params = OptimizerParams {
//!     total_iterations: 10,
//!     candidates_per_iteration: 3,
//!     restarts: 1,
//!     estimation: EstimationParams {
//!         n_points_centroids: 2000,
//!         n_points_mse: 2000,
//!         min_points_per_region: 10,
//!         max_topup_rounds: 1,
//!     },
//!     ..OptimizerParams::default()
//! };
//! let (design, trace) = optimize(&source, 1, &params, &RngStream::new(42, 0))?;
//! assert!(trace.is_nonincreasing());
//! let reconstruction = design.quantize(&[0.9])?;
//! assert_eq!(reconstruction.len(), 1);
//! # Ok::<(), cmplq::Error>(())
//! ```

pub mod baseline;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod geometry;
pub mod optimizer;
pub mod quantizer;
pub mod source;

pub use crate::baseline::{
    evaluate_codebook_mse, generalized_lloyd_vector, lloyd_max_scalar,
    matched_comparator_baseline, ProductQuantizer, ScalarQuantizer, VectorCodebook,
};
pub use crate::error::{Error, Result};
pub use crate::estimation::{
    estimate_centroids, estimate_mse, estimate_mse_paired, EstimationParams, MseEstimate,
};
pub use crate::experiments::{
    emit_csv, load_design, parse_file_config, parse_k_list, parse_results_csv_str, params_hash,
    read_file_config, read_results_csv, render_csv, run_experiment, save_design, sweep_cell,
    ExperimentResult, ExperimentSpec, FileConfig, SweepCell, SweepRecord, RESULTS_CSV_HEADER,
};
pub use crate::geometry::{
    enumerate_regions_sampled, is_general_position, region_count_upper_bound, separation_matrix,
    CombinerConfig, Hyperplane, RegionLabel, SeparationMatrix, MAX_COMPARATORS,
};
pub use crate::optimizer::{
    global_update, local_update, multi_restart, optimize, random_configuration, IterationRecord,
    MultiRestartOutcome, OptimizationTrace, OptimizerParams, RestartRecord, UpdateKind,
};
pub use crate::quantizer::{Codebook, CodebookEntry, Provenance, QuantizerDesign};
pub use crate::source::{RngStream, SourceKind, SourceModel};
