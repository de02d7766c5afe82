//! Experiment runner and artifact plumbing: comparator-count sweeps against
//! both Lloyd-Max baselines, CSV emission/parsing, design file I/O, and the
//! JSON config format shared with the CLI.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baseline::{
    evaluate_codebook_mse, generalized_lloyd_vector, matched_comparator_baseline,
};
use crate::error::{Error, Result};
use crate::estimation::{estimate_mse, MseEstimate};
use crate::geometry::MAX_COMPARATORS;
use crate::optimizer::{multi_restart, OptimizerParams};
use crate::quantizer::QuantizerDesign;
use crate::source::{RngStream, SourceKind, SourceModel};

/// Column header of `results.csv`.
pub const RESULTS_CSV_HEADER: &str =
    "k,mse_ours,stderr_ours,regions,mse_lloyd_points,mse_lloyd_comparators,ratio";

/// Iterations granted to the matched-points codebook training.
const LLOYD_TRAIN_MAX_ITER: usize = 100;

/// A full sweep request: which source, which comparator counts, and how
/// hard to optimize.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub source: SourceKind,
    pub dim: usize,
    /// Comparator counts to sweep, strictly increasing, all ≥ 1.
    pub k_list: Vec<usize>,
    /// Optimization knobs, including the embedded estimation budgets.
    pub optimizer: OptimizerParams,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidSpec("dimension must be at least 1".into()));
        }
        if self.k_list.is_empty() {
            return Err(Error::InvalidSpec("k_list must be nonempty".into()));
        }
        for &k in &self.k_list {
            if k == 0 {
                return Err(Error::InvalidSpec("k_list entries must be at least 1".into()));
            }
            if k > MAX_COMPARATORS {
                return Err(Error::InvalidSpec(format!(
                    "k_list entry {k} exceeds the supported maximum of {MAX_COMPARATORS}"
                )));
            }
        }
        if self.k_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSpec(
                "k_list must be strictly increasing".into(),
            ));
        }
        self.optimizer.validate()
    }
}

/// One row of the sweep: our design against both baselines at a fixed `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub k: usize,
    pub mse_ours: f64,
    pub stderr_ours: f64,
    /// Occupied regions of the returned design; also the point budget the
    /// matched-points baseline received.
    pub regions: usize,
    pub mse_lloyd_points: f64,
    pub mse_lloyd_comparators: f64,
    /// `mse_ours / mse_lloyd_comparators`.
    pub ratio: f64,
}

/// Everything a sweep produced, keyed by the reproducibility fingerprint.
///
/// Identical specs yield identical results — there is deliberately no
/// wall-clock field anywhere in the output path.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub seed: u64,
    pub params_hash: u64,
    pub records: Vec<SweepRecord>,
}

/// 64-bit FNV-1a.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Stable fingerprint of everything that determines a sweep's numbers.
/// Hashes a canonical JSON rendering, so it is reproducible across runs,
/// platforms, and compiler versions (unlike the stdlib's `DefaultHasher`).
pub fn params_hash(spec: &ExperimentSpec) -> u64 {
    #[derive(Serialize)]
    struct HashView<'a> {
        source: SourceKind,
        dim: usize,
        k_list: &'a [usize],
        optimizer: &'a OptimizerParams,
        seed: u64,
    }
    let view = HashView {
        source: spec.source,
        dim: spec.dim,
        k_list: &spec.k_list,
        optimizer: &spec.optimizer,
        seed: spec.seed,
    };
    let text = serde_json::to_string(&view).expect("spec serialization cannot fail");
    fnv1a(text.as_bytes())
}

/// Everything one sweep entry computes: the designed quantizer and the
/// three distortion estimates scored on a common evaluation stream.
#[derive(Clone, Debug)]
pub struct SweepCell {
    pub k: usize,
    pub design: QuantizerDesign,
    /// Occupied regions of the best design; the matched-points baseline
    /// trains exactly this many reconstruction points.
    pub regions: usize,
    pub ours: MseEstimate,
    pub lloyd_points: MseEstimate,
    pub lloyd_comparators: MseEstimate,
    /// Quadrature distortion of the product baseline — a noise-free
    /// reference for the Monte Carlo `lloyd_comparators` value.
    pub product_analytic: f64,
}

/// One sweep entry at `k` comparators: multi-restart design, a Lloyd
/// codebook matched to the design's occupied regions, and the best product
/// quantizer with the same comparator budget.
///
/// All three are evaluated with common random numbers (fresh copies of one
/// evaluation substream of `root`), so differences and ratios are nearly
/// noise-free. Streams are derived per `k`, making entries independent of
/// the order they are computed in.
pub fn sweep_cell(
    source: &SourceModel,
    k: usize,
    params: &OptimizerParams,
    root: &RngStream,
) -> Result<SweepCell> {
    let kk = k as u64;
    let design_stream = root.substream(kk * 16 + 1);
    let eval_root = root.substream(kk * 16 + 2);
    let mut lloyd_stream = root.substream(kk * 16 + 3);
    let est = &params.estimation;
    let eval_params = est.scaled(4);

    let outcome = multi_restart(source, k, params, &design_stream)?;
    let design = outcome.best;
    let regions = design.codebook().len();

    let ours = estimate_mse(&design, &eval_params, &mut eval_root.substream(0))?;
    let train_samples = (100 * regions).max(est.n_points_centroids);
    let matched_points = generalized_lloyd_vector(
        source,
        regions,
        train_samples,
        LLOYD_TRAIN_MAX_ITER,
        &mut lloyd_stream,
    )?;
    let lloyd_points =
        evaluate_codebook_mse(&matched_points, source, &eval_params, &mut eval_root.substream(0))?;
    let product = matched_comparator_baseline(source, k)?;
    let lloyd_comparators = evaluate_codebook_mse(
        &product.codebook,
        source,
        &eval_params,
        &mut eval_root.substream(0),
    )?;
    Ok(SweepCell {
        k,
        design,
        regions,
        ours,
        lloyd_points,
        lloyd_comparators,
        product_analytic: product.analytic_mse,
    })
}

/// Run the full sweep: one [`sweep_cell`] per requested comparator count.
/// Writes `results.csv` and one `design_k<k>.json` per sweep entry into the
/// output directory before returning.
///
/// The output directory is created and probed for writability first, so an
/// unusable destination fails before any computation starts.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    fs::create_dir_all(&spec.out_dir).map_err(|source| Error::Io {
        path: spec.out_dir.clone(),
        source,
    })?;
    let csv_path = spec.out_dir.join("results.csv");
    fs::write(&csv_path, []).map_err(|source| Error::Io {
        path: csv_path.clone(),
        source,
    })?;

    let source = SourceModel::new(spec.source, spec.dim)?;
    let root = RngStream::new(spec.seed, 0);

    let mut records = Vec::with_capacity(spec.k_list.len());
    let mut designs: Vec<(usize, QuantizerDesign)> = Vec::with_capacity(spec.k_list.len());
    // Each k gets disjoint child streams, so entries are independent and
    // could run in any order (or in parallel) without changing a digit.
    for &k in &spec.k_list {
        let cell = sweep_cell(&source, k, &spec.optimizer, &root)?;
        let ratio = cell.ours.value / cell.lloyd_comparators.value;
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "distortion ratio at k={k} is not finite and positive"
            )));
        }
        records.push(SweepRecord {
            k,
            mse_ours: cell.ours.value,
            stderr_ours: cell.ours.std_error,
            regions: cell.regions,
            mse_lloyd_points: cell.lloyd_points.value,
            mse_lloyd_comparators: cell.lloyd_comparators.value,
            ratio,
        });
        designs.push((k, cell.design));
    }

    let result = ExperimentResult {
        seed: spec.seed,
        params_hash: params_hash(spec),
        records,
    };
    emit_csv(&result, &csv_path)?;
    for (k, design) in &designs {
        save_design(design, &spec.out_dir.join(format!("design_k{k}.json")))?;
    }
    Ok(result)
}

/// Render the sweep as CSV text: fixed header, one row per `k`, floats at 9
/// significant digits, LF line endings.
pub fn render_csv(result: &ExperimentResult) -> String {
    let mut out = String::with_capacity(64 * (result.records.len() + 1));
    out.push_str(RESULTS_CSV_HEADER);
    out.push('\n');
    for r in &result.records {
        out.push_str(&format!(
            "{},{:.8e},{:.8e},{},{:.8e},{:.8e},{:.8e}\n",
            r.k,
            r.mse_ours,
            r.stderr_ours,
            r.regions,
            r.mse_lloyd_points,
            r.mse_lloyd_comparators,
            r.ratio,
        ));
    }
    out
}

/// Write [`render_csv`] output to `path`.
pub fn emit_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    fs::write(path, render_csv(result)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_err(line: usize, message: impl Into<String>) -> Error {
    Error::CsvParse {
        line,
        message: message.into(),
    }
}

fn parse_float(line: usize, field: &str, value: &str) -> Result<f64> {
    let parsed: f64 = value
        .parse()
        .map_err(|_| csv_err(line, format!("field `{field}` is not a number: `{value}`")))?;
    if !parsed.is_finite() {
        return Err(csv_err(line, format!("field `{field}` must be finite")));
    }
    Ok(parsed)
}

fn parse_count(line: usize, field: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| csv_err(line, format!("field `{field}` is not a count: `{value}`")))
}

/// Parse `results.csv` text back into records. Strict: the header, the
/// column count, and every field must be well-formed.
pub fn parse_results_csv_str(text: &str) -> Result<Vec<SweepRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == RESULTS_CSV_HEADER => {}
        Some((_, header)) => {
            return Err(csv_err(1, format!("unexpected header `{header}`")));
        }
        None => return Err(csv_err(1, "empty input")),
    }
    let mut records = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.is_empty() {
            return Err(csv_err(line, "empty row"));
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 7 {
            return Err(csv_err(
                line,
                format!("expected 7 columns, found {}", fields.len()),
            ));
        }
        let record = SweepRecord {
            k: parse_count(line, "k", fields[0])?,
            mse_ours: parse_float(line, "mse_ours", fields[1])?,
            stderr_ours: parse_float(line, "stderr_ours", fields[2])?,
            regions: parse_count(line, "regions", fields[3])?,
            mse_lloyd_points: parse_float(line, "mse_lloyd_points", fields[4])?,
            mse_lloyd_comparators: parse_float(line, "mse_lloyd_comparators", fields[5])?,
            ratio: parse_float(line, "ratio", fields[6])?,
        };
        if !(record.ratio > 0.0) {
            return Err(csv_err(line, "field `ratio` must be positive"));
        }
        records.push(record);
    }
    Ok(records)
}

/// Read and parse a `results.csv` file.
pub fn read_results_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_results_csv_str(&text)
}

/// Write a design to `path` in the documented JSON schema.
pub fn save_design(design: &QuantizerDesign, path: &Path) -> Result<()> {
    fs::write(path, design.to_json()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Load a design from `path`, revalidating every invariant.
pub fn load_design(path: &Path) -> Result<QuantizerDesign> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    QuantizerDesign::from_json(&text)
}

/// Parse a comparator-count list: comma-separated counts and inclusive
/// ranges, e.g. `5`, `1..6`, or `1..3,5`. The result must be strictly
/// increasing with every entry ≥ 1.
pub fn parse_k_list(text: &str) -> Result<Vec<usize>> {
    let bad = |msg: String| Error::InvalidSpec(format!("comparator list `{text}`: {msg}"));
    let parse_end = |s: &str| -> Result<usize> {
        s.trim()
            .parse()
            .map_err(|_| bad(format!("`{s}` is not a count")))
    };
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if let Some((lo, hi)) = part.split_once("..") {
            let lo = parse_end(lo)?;
            let hi = parse_end(hi)?;
            if lo > hi {
                return Err(bad(format!("range {lo}..{hi} is descending")));
            }
            out.extend(lo..=hi);
        } else {
            out.push(parse_end(part)?);
        }
    }
    if out.is_empty() {
        return Err(bad("no entries".into()));
    }
    if out.contains(&0) {
        return Err(bad("entries must be at least 1".into()));
    }
    if out.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("entries must be strictly increasing".into()));
    }
    Ok(out)
}

/// JSON config file accepted by every CLI subcommand; any field may be
/// omitted, and explicit command-line flags win over config values.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub source: Option<String>,
    pub dim: Option<usize>,
    pub comparators: Option<usize>,
    /// Same syntax as `--k`, e.g. `"1..6"`.
    pub k: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub design: Option<PathBuf>,
    pub baseline: Option<String>,
    pub regions: Option<usize>,
    pub iterations: Option<usize>,
    pub candidates: Option<usize>,
    pub restarts: Option<usize>,
    pub initial_step: Option<f64>,
    pub step_decay: Option<f64>,
    pub global_prob_decay: Option<f64>,
    pub points_centroids: Option<usize>,
    pub points_mse: Option<usize>,
    pub min_region_points: Option<usize>,
    pub max_topup_rounds: Option<usize>,
}

/// Parse the JSON config format. Unknown fields are rejected so a typo
/// cannot silently fall back to a default.
pub fn parse_file_config(text: &str) -> Result<FileConfig> {
    Ok(serde_json::from_str(text)?)
}

/// Read and parse a JSON config file.
pub fn read_file_config(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_file_config(&text)
}
