//! On-disk feature store written by `preprocess`.
//!
//! ```text
//! <store>/
//!   episodes/<record_id>.txt   canonical record files, used for per-fold refitting
//!   features/<record_id>.csv   185-column interval matrices
//!   labels.csv                 record_id,label,intervals
//!   stats.json                 fitted preprocessing statistics
//!   manifest.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use icu_attend::ingest::{join_labels, parse_outcomes, parse_record, serialize_record, RawEpisode};
use icu_attend::preprocess::write_feature_matrix;
use icu_attend::{EpisodeFeatures, FittedPreprocessor};

use crate::{read_text, write_text, CliError, Result};

pub const EPISODES_DIR: &str = "episodes";
pub const FEATURES_DIR: &str = "features";
pub const LABELS_FILE: &str = "labels.csv";
pub const STATS_FILE: &str = "stats.json";

/// Record files (`*.txt`) in a directory, sorted by file name.
pub fn record_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_record(path: &Path) -> Result<RawEpisode> {
    parse_record(&read_text(path)?).map_err(|source| CliError::Ingest {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses every record in `data_dir` and attaches outcome labels.
pub fn load_labeled(data_dir: &Path, outcomes: &Path) -> Result<Vec<RawEpisode>> {
    let episodes = record_files(data_dir)?
        .iter()
        .map(|p| load_record(p))
        .collect::<Result<Vec<_>>>()?;
    let labels = parse_outcomes(&read_text(outcomes)?).map_err(|source| CliError::Ingest {
        path: outcomes.to_path_buf(),
        source,
    })?;
    join_labels(episodes, &labels).map_err(|source| CliError::Ingest {
        path: outcomes.to_path_buf(),
        source,
    })
}

/// Writes a complete store for `episodes` transformed with `fitted`.
pub fn write_store(out: &Path, episodes: &[RawEpisode], fitted: &FittedPreprocessor) -> Result<Vec<EpisodeFeatures>> {
    let mut labels = String::from("record_id,label,intervals\n");
    let mut all = Vec::with_capacity(episodes.len());
    for ep in episodes {
        let features = fitted.transform(ep)?;
        write_text(&out.join(EPISODES_DIR).join(format!("{}.txt", ep.record_id)), &serialize_record(ep))?;
        write_text(
            &out.join(FEATURES_DIR).join(format!("{}.csv", ep.record_id)),
            &write_feature_matrix(&features),
        )?;
        labels.push_str(&format!(
            "{},{},{}\n",
            ep.record_id,
            u8::from(ep.label.unwrap_or(false)),
            features.intervals()
        ));
        all.push(features);
    }
    write_text(&out.join(LABELS_FILE), &labels)?;
    let stats = serde_json::to_string_pretty(fitted).map_err(CliError::Json)?;
    write_text(&out.join(STATS_FILE), &stats)?;
    Ok(all)
}

fn parse_labels(text: &str, path: &Path) -> Result<BTreeMap<u64, bool>> {
    let mut labels = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let parsed = match fields.as_slice() {
            [id, label, _] => id.parse::<u64>().ok().zip(match *label {
                "0" => Some(false),
                "1" => Some(true),
                _ => None,
            }),
            _ => None,
        };
        let (id, y) = parsed.ok_or_else(|| CliError::Store(format!("{}: bad line {}", path.display(), i + 1)))?;
        labels.insert(id, y);
    }
    Ok(labels)
}

/// Labeled raw episodes and the store's fitted statistics.
pub fn read_store(store: &Path) -> Result<(Vec<RawEpisode>, FittedPreprocessor)> {
    let stats_path = store.join(STATS_FILE);
    let fitted: FittedPreprocessor = serde_json::from_str(&read_text(&stats_path)?).map_err(CliError::Json)?;
    let labels_path = store.join(LABELS_FILE);
    let labels = parse_labels(&read_text(&labels_path)?, &labels_path)?;
    let mut episodes = record_files(&store.join(EPISODES_DIR))?
        .iter()
        .map(|p| load_record(p))
        .collect::<Result<Vec<_>>>()?;
    episodes.sort_by_key(|e| e.record_id);
    let episodes = join_labels(episodes, &labels).map_err(|source| CliError::Ingest {
        path: labels_path,
        source,
    })?;
    Ok((episodes, fitted))
}
