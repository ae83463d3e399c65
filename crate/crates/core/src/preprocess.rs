//! Interval feature extraction.
//!
//! Each episode goes through percentile truncation, binning into
//! equal-length intervals, per-interval summary statistics, two-level
//! mean imputation, static appending and z-scoring. Everything that is
//! fitted (bounds, means, standard deviations) is fitted on a training
//! split only and then applied unchanged to any episode.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::Tensor;
use crate::ingest::{
    RawEpisode, StaticKind, NUM_SERIES, NUM_STATICS, SERIES_NAMES, STATIC_NAMES, WINDOW_MINUTES,
};

/// Statistics collected per parameter and interval.
pub const STAT_NAMES: [&str; 5] = ["min", "max", "mean", "median", "std"];
pub const NUM_STATS: usize = STAT_NAMES.len();

/// Width of one interval's feature vector: 36 × 5 statistics + 5 statics.
pub const FEATURE_DIM: usize = NUM_SERIES * NUM_STATS + NUM_STATICS;

pub const LOWER_PERCENT: u32 = 1;
pub const UPPER_PERCENT: u32 = 99;

pub const DEFAULT_INTERVAL_MINUTES: u32 = 180;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PreprocessError {
    #[error("interval length must be positive")]
    InvalidInterval,
    #[error("cannot fit preprocessing statistics on an empty training split")]
    EmptyTrainingSet,
    #[error("feature file: {0}")]
    FeatureFile(String),
}

/// Column names in layout order: `<param>_<stat>` for the 36 series, then
/// the 5 statics.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_DIM);
    for p in SERIES_NAMES {
        for s in STAT_NAMES {
            names.push(format!("{p}_{s}"));
        }
    }
    names.extend(STATIC_NAMES.iter().map(|s| s.to_string()));
    names
}

/// Column of statistic `stat` of time-series parameter `parameter`.
pub fn series_column(parameter: usize, stat: usize) -> usize {
    parameter * NUM_STATS + stat
}

pub fn static_column(kind: StaticKind) -> usize {
    NUM_SERIES * NUM_STATS + kind as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

/// Per-parameter clamping range. `None` marks a parameter with no training
/// observations; it is left unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationBounds {
    pub per_parameter: Vec<Option<Bounds>>,
}

impl TruncationBounds {
    pub fn range(&self, parameter: usize) -> (f64, f64) {
        match self.per_parameter[parameter] {
            Some(b) => (b.lower, b.upper),
            None => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Parameters that fell back to (−∞, +∞).
    pub fn unbounded_parameters(&self) -> Vec<&'static str> {
        self.per_parameter
            .iter()
            .enumerate()
            .filter(|(_, b)| b.is_none())
            .map(|(i, _)| SERIES_NAMES[i])
            .collect()
    }
}

/// Nearest-rank percentile of an ascending slice: the value at 1-based rank
/// `⌈percent · n / 100⌉`, clamped to `[1, n]`.
pub fn nearest_rank(sorted: &[f64], percent: u32) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "nearest_rank on empty slice");
    let rank = (percent as usize * n).div_ceil(100).clamp(1, n);
    sorted[rank - 1]
}

fn values_by_parameter(episodes: &[RawEpisode]) -> Vec<Vec<f64>> {
    let mut values = vec![Vec::new(); NUM_SERIES];
    for ep in episodes {
        for m in &ep.measurements {
            values[m.parameter.index()].push(m.value);
        }
    }
    values
}

pub fn fit_truncation(train: &[RawEpisode]) -> TruncationBounds {
    let per_parameter = values_by_parameter(train)
        .into_iter()
        .map(|mut v| {
            if v.is_empty() {
                return None;
            }
            v.sort_by(f64::total_cmp);
            Some(Bounds {
                lower: nearest_rank(&v, LOWER_PERCENT),
                upper: nearest_rank(&v, UPPER_PERCENT),
            })
        })
        .collect();
    TruncationBounds { per_parameter }
}

pub fn apply_truncation(episode: &RawEpisode, bounds: &TruncationBounds) -> RawEpisode {
    let mut out = episode.clone();
    for m in &mut out.measurements {
        let (lo, hi) = bounds.range(m.parameter.index());
        m.value = m.value.max(lo).min(hi);
    }
    out
}

/// Measurement values grouped by interval and parameter:
/// `bins[interval][parameter]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBins {
    pub bins: Vec<Vec<Vec<f64>>>,
}

impl IntervalBins {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn total_values(&self) -> usize {
        self.bins.iter().flatten().map(Vec::len).sum()
    }
}

/// Bins for half-open intervals `[k·L, (k+1)·L)`; the 48-hour endpoint
/// belongs to the last interval. The number of bins stops at the interval
/// holding the last measurement (at least one bin).
pub fn bin_intervals(
    episode: &RawEpisode,
    interval_minutes: u32,
) -> Result<IntervalBins, PreprocessError> {
    if interval_minutes == 0 {
        return Err(PreprocessError::InvalidInterval);
    }
    let max_bins = WINDOW_MINUTES.div_ceil(interval_minutes) as usize;
    let bin_of = |minute: u32| ((minute / interval_minutes) as usize).min(max_bins - 1);
    let count = episode
        .measurements
        .last()
        .map_or(1, |m| bin_of(m.minutes_since_admission) + 1);
    let mut bins = vec![vec![Vec::new(); NUM_SERIES]; count];
    for m in &episode.measurements {
        bins[bin_of(m.minutes_since_admission)][m.parameter.index()].push(m.value);
    }
    Ok(IntervalBins { bins })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl IntervalStats {
    pub fn to_array(self) -> [f64; NUM_STATS] {
        [self.min, self.max, self.mean, self.median, self.std]
    }
}

/// Summary of one bin; `None` for an empty bin.
pub fn interval_stats(values: &[f64]) -> Option<IntervalStats> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    Some(IntervalStats {
        min: sorted[0],
        max: sorted[n - 1],
        mean,
        median,
        std: var.sqrt(),
    })
}

fn mean_of(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Mean of every value the patient has for each parameter.
pub fn patient_means(episode: &RawEpisode) -> [Option<f64>; NUM_SERIES] {
    let mut sums = [(0.0, 0usize); NUM_SERIES];
    for m in &episode.measurements {
        let s = &mut sums[m.parameter.index()];
        s.0 += m.value;
        s.1 += 1;
    }
    sums.map(|(s, n)| (n > 0).then(|| s / n as f64))
}

/// Static descriptors, with the admission weight falling back to the mean of
/// later weight rows.
pub fn episode_statics(episode: &RawEpisode) -> [Option<f64>; NUM_STATICS] {
    let mut statics = episode.statics.0;
    let w = StaticKind::Weight as usize;
    if statics[w].is_none() {
        statics[w] = mean_of(episode.later_weights.iter().map(|o| o.value));
    }
    statics
}

/// Population-level fill values, fitted on the (truncated) training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationStats {
    pub population_means: Vec<f64>,
    pub static_means: Vec<f64>,
}

/// Fits imputation means. Parameters or statics never observed in training
/// get 0.
pub fn fit_imputation(train_truncated: &[RawEpisode]) -> ImputationStats {
    let population_means = values_by_parameter(train_truncated)
        .into_iter()
        .map(|v| mean_of(v).unwrap_or(0.0))
        .collect();
    let statics: Vec<_> = train_truncated.iter().map(episode_statics).collect();
    let static_means = (0..NUM_STATICS)
        .map(|k| mean_of(statics.iter().filter_map(|s| s[k])).unwrap_or(0.0))
        .collect();
    ImputationStats {
        population_means,
        static_means,
    }
}

/// Interval rows with gaps, `FEATURE_DIM` wide.
pub type PartialRows = Vec<Vec<Option<f64>>>;

/// Summarizes bins and appends statics, leaving gaps as `None`.
pub fn summarize(bins: &IntervalBins, statics: &[Option<f64>; NUM_STATICS]) -> PartialRows {
    bins.bins
        .iter()
        .map(|bin| {
            let mut row = Vec::with_capacity(FEATURE_DIM);
            for values in bin {
                match interval_stats(values) {
                    Some(s) => row.extend(s.to_array().map(Some)),
                    None => row.extend([None; NUM_STATS]),
                }
            }
            row.extend_from_slice(statics);
            row
        })
        .collect()
}

/// Fills gaps. A missing interval of parameter `p` takes the patient's mean
/// of `p` for min, max, mean and median, or the population mean when the
/// patient never measured `p`; its std becomes 0. Missing statics take the
/// population static means.
pub fn impute(
    rows: &PartialRows,
    patient_means: &[Option<f64>; NUM_SERIES],
    stats: &ImputationStats,
) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|row| {
            let mut out = Vec::with_capacity(row.len());
            for (col, entry) in row.iter().enumerate() {
                let value = entry.unwrap_or_else(|| {
                    if col >= NUM_SERIES * NUM_STATS {
                        stats.static_means[col - NUM_SERIES * NUM_STATS]
                    } else if col % NUM_STATS == NUM_STATS - 1 {
                        0.0
                    } else {
                        let p = col / NUM_STATS;
                        patient_means[p].unwrap_or(stats.population_means[p])
                    }
                });
                out.push(value);
            }
            out
        })
        .collect()
}

/// Per-feature z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormalizationStats {
    /// Features with zero spread on the training split.
    pub fn constant_features(&self) -> Vec<usize> {
        (0..self.std.len()).filter(|&i| self.std[i] == 0.0).collect()
    }
}

/// Mean and population std of every column over all rows of all matrices.
pub fn fit_normalization(matrices: &[Vec<Vec<f64>>]) -> NormalizationStats {
    let width = matrices
        .iter()
        .flatten()
        .next()
        .map_or(FEATURE_DIM, Vec::len);
    let rows: Vec<&Vec<f64>> = matrices.iter().flatten().collect();
    let n = rows.len().max(1) as f64;
    let mean: Vec<f64> = (0..width)
        .map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n)
        .collect();
    let std = (0..width)
        .map(|c| {
            let var = rows.iter().map(|r| (r[c] - mean[c]).powi(2)).sum::<f64>() / n;
            var.sqrt()
        })
        .collect();
    NormalizationStats { mean, std }
}

/// `(x − mean) / std`, with zero-spread features mapped to 0.
pub fn normalize(rows: &[Vec<f64>], stats: &NormalizationStats) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(c, &x)| {
                    if stats.std[c] == 0.0 {
                        0.0
                    } else {
                        (x - stats.mean[c]) / stats.std[c]
                    }
                })
                .collect()
        })
        .collect()
}

/// Model input for one episode: `T × FEATURE_DIM`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeFeatures {
    pub record_id: u64,
    pub matrix: Tensor,
    pub label: Option<bool>,
}

impl EpisodeFeatures {
    pub fn intervals(&self) -> usize {
        self.matrix.rows()
    }
}

/// All statistics fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPreprocessor {
    pub interval_minutes: u32,
    pub truncation: TruncationBounds,
    pub imputation: ImputationStats,
    pub normalization: NormalizationStats,
}

impl FittedPreprocessor {
    /// Fits truncation, imputation and normalization, in that order, on
    /// `train` only.
    pub fn fit(train: &[RawEpisode], interval_minutes: u32) -> Result<Self, PreprocessError> {
        if interval_minutes == 0 {
            return Err(PreprocessError::InvalidInterval);
        }
        if train.is_empty() {
            return Err(PreprocessError::EmptyTrainingSet);
        }
        let truncation = fit_truncation(train);
        let truncated: Vec<RawEpisode> = train
            .iter()
            .map(|ep| apply_truncation(ep, &truncation))
            .collect();
        let imputation = fit_imputation(&truncated);
        let mut fitted = Self {
            interval_minutes,
            truncation,
            imputation,
            normalization: NormalizationStats {
                mean: vec![0.0; FEATURE_DIM],
                std: vec![1.0; FEATURE_DIM],
            },
        };
        let imputed = truncated
            .iter()
            .map(|ep| fitted.imputed_rows_of_truncated(ep))
            .collect::<Result<Vec<_>, _>>()?;
        fitted.normalization = fit_normalization(&imputed);
        Ok(fitted)
    }

    fn imputed_rows_of_truncated(&self, ep: &RawEpisode) -> Result<Vec<Vec<f64>>, PreprocessError> {
        let bins = bin_intervals(ep, self.interval_minutes)?;
        let rows = summarize(&bins, &episode_statics(ep));
        Ok(impute(&rows, &patient_means(ep), &self.imputation))
    }

    /// Truncate → bin → summarize → impute → append statics → normalize.
    pub fn transform(&self, episode: &RawEpisode) -> Result<EpisodeFeatures, PreprocessError> {
        let truncated = apply_truncation(episode, &self.truncation);
        let rows = normalize(&self.imputed_rows_of_truncated(&truncated)?, &self.normalization);
        let matrix = Tensor::from_rows(&rows).map_err(|e| PreprocessError::FeatureFile(e.to_string()))?;
        Ok(EpisodeFeatures {
            record_id: episode.record_id,
            matrix,
            label: episode.label,
        })
    }
}

/// Renders a feature matrix as CSV: a header of feature names, then one row
/// per interval.
pub fn write_feature_matrix(features: &EpisodeFeatures) -> String {
    let mut out = feature_names().join(",");
    out.push('\n');
    for t in 0..features.matrix.rows() {
        let row: Vec<String> = features.matrix.row(t).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses the output of [`write_feature_matrix`].
pub fn read_feature_matrix(text: &str) -> Result<Tensor, PreprocessError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| PreprocessError::FeatureFile("empty file".into()))?;
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| PreprocessError::FeatureFile(format!("row {}: {e}", i + 1)))?;
        if row.len() != width {
            return Err(PreprocessError::FeatureFile(format!(
                "row {} has {} values, header has {width}",
                i + 1,
                row.len()
            )));
        }
        rows.push(row);
    }
    Tensor::from_rows(&rows).map_err(|e| PreprocessError::FeatureFile(e.to_string()))
}
