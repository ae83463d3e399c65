//! Parsing of PhysioNet-2012-style record and outcome files.
//!
//! A record file starts with the header `Time,Parameter,Value` followed by
//! rows `HH:MM,<parameter>,<value>`, where `HH` runs up to 48. The
//! `RecordID` row and the time-00:00 static rows (Age, Gender, Height,
//! ICUType, Weight) describe the patient; all other rows are time-series
//! measurements.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

/// Length of the observation window in minutes (48 hours).
pub const WINDOW_MINUTES: u32 = 48 * 60;

/// Number of time-series parameters in the registry.
pub const NUM_SERIES: usize = 36;

/// Number of static descriptors in the registry.
pub const NUM_STATICS: usize = 5;

pub const RECORD_HEADER: &str = "Time,Parameter,Value";

/// Time-series parameter names, in feature-layout order.
pub const SERIES_NAMES: [&str; NUM_SERIES] = [
    "Albumin",
    "ALP",
    "ALT",
    "AST",
    "Bilirubin",
    "BUN",
    "Cholesterol",
    "Creatinine",
    "DiasABP",
    "FiO2",
    "GCS",
    "Glucose",
    "HCO3",
    "HCT",
    "HR",
    "K",
    "Lactate",
    "Mg",
    "MAP",
    "MechVent",
    "Na",
    "NIDiasABP",
    "NIMAP",
    "NISysABP",
    "PaCO2",
    "PaO2",
    "pH",
    "Platelets",
    "RespRate",
    "SaO2",
    "SysABP",
    "Temp",
    "TroponinI",
    "TroponinT",
    "Urine",
    "WBC",
];

/// Static descriptor names, in feature-layout order.
pub const STATIC_NAMES: [&str; NUM_STATICS] = ["Age", "Gender", "Height", "ICUType", "Weight"];

/// Index of each static descriptor within [`Statics`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaticKind {
    Age = 0,
    Gender = 1,
    Height = 2,
    IcuType = 3,
    Weight = 4,
}

impl StaticKind {
    pub const ALL: [StaticKind; NUM_STATICS] = [
        StaticKind::Age,
        StaticKind::Gender,
        StaticKind::Height,
        StaticKind::IcuType,
        StaticKind::Weight,
    ];

    pub fn name(self) -> &'static str {
        STATIC_NAMES[self as usize]
    }

    /// Gender, Height and Weight use −1 to mean "not recorded".
    fn uses_sentinel(self) -> bool {
        matches!(self, StaticKind::Gender | StaticKind::Height | StaticKind::Weight)
    }
}

/// Index into [`SERIES_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(u8);

impl ParamId {
    pub fn new(index: usize) -> Option<Self> {
        (index < NUM_SERIES).then_some(Self(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        SERIES_NAMES[self.index()]
    }
}

/// Resolved meaning of a parameter name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    RecordId,
    Static(StaticKind),
    Series(ParamId),
}

/// The fixed list of 36 time-series and 5 static parameter names.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParameterRegistry;

impl ParameterRegistry {
    pub fn series_names(&self) -> &'static [&'static str] {
        &SERIES_NAMES
    }

    pub fn static_names(&self) -> &'static [&'static str] {
        &STATIC_NAMES
    }

    pub fn len(&self) -> usize {
        NUM_SERIES + NUM_STATICS
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lookup(&self, name: &str) -> Option<ParamKind> {
        if name == "RecordID" {
            return Some(ParamKind::RecordId);
        }
        if let Some(i) = STATIC_NAMES.iter().position(|&n| n == name) {
            return Some(ParamKind::Static(StaticKind::ALL[i]));
        }
        SERIES_NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| ParamKind::Series(ParamId(i as u8)))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("record has no RecordID row")]
    MissingRecordId,
    #[error("line {line}: unknown parameter `{name}`")]
    UnknownParameter { line: usize, name: String },
    #[error("outcomes header lacks the `{0}` column")]
    MissingColumn(&'static str),
    #[error("record {0} appears more than once in the outcomes file")]
    DuplicateRecord(u64),
    #[error("line {line}: label `{value}` is not 0 or 1")]
    InvalidLabel { line: usize, value: String },
    #[error("no label for record(s) {0:?}")]
    Unlabeled(Vec<u64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub minutes_since_admission: u32,
    pub parameter: ParamId,
    pub value: f64,
}

/// Static descriptors; `None` means not recorded.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Statics(pub [Option<f64>; NUM_STATICS]);

impl Statics {
    pub fn get(&self, kind: StaticKind) -> Option<f64> {
        self.0[kind as usize]
    }

    pub fn set(&mut self, kind: StaticKind, value: Option<f64>) {
        self.0[kind as usize] = value;
    }
}

/// One weight observation recorded after the admission row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightObservation {
    pub minutes_since_admission: u32,
    pub value: f64,
}

/// One patient's parsed record.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEpisode {
    pub record_id: u64,
    pub statics: Statics,
    /// Sorted non-decreasing by time; equal times keep file order.
    pub measurements: Vec<Measurement>,
    /// Weight rows beyond the admission (time 00:00) row.
    pub later_weights: Vec<WeightObservation>,
    pub label: Option<bool>,
}

fn parse_time(field: &str, line: usize) -> Result<u32, IngestError> {
    let bad = |reason: &str| IngestError::Malformed {
        line,
        reason: format!("{reason}: `{field}`"),
    };
    let (h, m) = field.split_once(':').ok_or_else(|| bad("expected HH:MM"))?;
    let hours: u32 = h.parse().map_err(|_| bad("invalid hours"))?;
    let minutes: u32 = m.parse().map_err(|_| bad("invalid minutes"))?;
    if minutes >= 60 || m.len() != 2 {
        return Err(bad("invalid minutes"));
    }
    let total = hours * 60 + minutes;
    if total > WINDOW_MINUTES {
        return Err(bad("time beyond the 48-hour window"));
    }
    Ok(total)
}

fn parse_value(field: &str, line: usize) -> Result<f64, IngestError> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IngestError::Malformed {
            line,
            reason: format!("invalid value `{field}`"),
        }),
    }
}

/// Parses one record file.
pub fn parse_record(text: &str) -> Result<RawEpisode, IngestError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, header)) if header == RECORD_HEADER => {}
        _ => {
            return Err(IngestError::Malformed {
                line: 1,
                reason: format!("expected header `{RECORD_HEADER}`"),
            })
        }
    }

    let registry = ParameterRegistry;
    let mut record_id = None;
    let mut statics = Statics::default();
    let mut admission_weight_seen = false;
    let mut measurements = Vec::new();
    let mut later_weights = Vec::new();

    for (line, row) in lines {
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 3 {
            return Err(IngestError::Malformed {
                line,
                reason: format!("expected 3 comma-separated fields, found {}", fields.len()),
            });
        }
        let minutes = parse_time(fields[0], line)?;
        let name = fields[1];
        let value = parse_value(fields[2], line)?;
        match registry.lookup(name) {
            None => {
                return Err(IngestError::UnknownParameter {
                    line,
                    name: name.to_string(),
                })
            }
            Some(ParamKind::RecordId) => {
                if value <= 0.0 || value.fract() != 0.0 {
                    return Err(IngestError::Malformed {
                        line,
                        reason: format!("RecordID must be a positive integer, got `{}`", fields[2]),
                    });
                }
                record_id = Some(value as u64);
            }
            Some(ParamKind::Static(StaticKind::Weight)) => {
                if minutes == 0 && !admission_weight_seen {
                    admission_weight_seen = true;
                    statics.set(StaticKind::Weight, (value != -1.0).then_some(value));
                } else {
                    later_weights.push(WeightObservation {
                        minutes_since_admission: minutes,
                        value,
                    });
                }
            }
            Some(ParamKind::Static(kind)) => {
                let missing = kind.uses_sentinel() && value == -1.0;
                statics.set(kind, (!missing).then_some(value));
            }
            Some(ParamKind::Series(parameter)) => measurements.push(Measurement {
                minutes_since_admission: minutes,
                parameter,
                value,
            }),
        }
    }

    // Stable: equal timestamps keep file order.
    measurements.sort_by_key(|m| m.minutes_since_admission);
    later_weights.sort_by_key(|w| w.minutes_since_admission);

    Ok(RawEpisode {
        record_id: record_id.ok_or(IngestError::MissingRecordId)?,
        statics,
        measurements,
        later_weights,
        label: None,
    })
}

fn format_time(minutes: u32) -> String {
    format!("{:02}:{:02}", minutes / 60, minutes % 60)
}

/// Writes an episode back in record-file format. Reparsing the output
/// yields an identical episode (labels are not part of the format).
pub fn serialize_record(episode: &RawEpisode) -> String {
    let mut out = String::new();
    out.push_str(RECORD_HEADER);
    out.push('\n');
    let _ = writeln!(out, "00:00,RecordID,{}", episode.record_id);
    for kind in StaticKind::ALL {
        match episode.statics.get(kind) {
            Some(v) => {
                let _ = writeln!(out, "00:00,{},{}", kind.name(), v);
            }
            None if kind.uses_sentinel() => {
                let _ = writeln!(out, "00:00,{},-1", kind.name());
            }
            None => {}
        }
    }
    let mut weights = episode.later_weights.iter().peekable();
    for m in &episode.measurements {
        while let Some(w) = weights.next_if(|w| w.minutes_since_admission <= m.minutes_since_admission) {
            let _ = writeln!(out, "{},Weight,{}", format_time(w.minutes_since_admission), w.value);
        }
        let _ = writeln!(
            out,
            "{},{},{}",
            format_time(m.minutes_since_admission),
            m.parameter.name(),
            m.value
        );
    }
    for w in weights {
        let _ = writeln!(out, "{},Weight,{}", format_time(w.minutes_since_admission), w.value);
    }
    out
}

/// Parses an outcomes file into `record_id → died in hospital`.
pub fn parse_outcomes(text: &str) -> Result<BTreeMap<u64, bool>, IngestError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let header: Vec<&str> = match lines.next() {
        Some((_, h)) => h.split(',').map(str::trim).collect(),
        None => return Err(IngestError::MissingColumn("RecordID")),
    };
    let id_col = header
        .iter()
        .position(|&c| c == "RecordID")
        .ok_or(IngestError::MissingColumn("RecordID"))?;
    let label_col = header
        .iter()
        .position(|&c| c == "In-hospital_death")
        .ok_or(IngestError::MissingColumn("In-hospital_death"))?;

    let mut labels = BTreeMap::new();
    for (line, row) in lines {
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        let (Some(id), Some(label)) = (fields.get(id_col), fields.get(label_col)) else {
            return Err(IngestError::Malformed {
                line,
                reason: "row has fewer columns than the header".into(),
            });
        };
        let id: u64 = id.parse().map_err(|_| IngestError::Malformed {
            line,
            reason: format!("invalid RecordID `{id}`"),
        })?;
        let label = match *label {
            "0" => false,
            "1" => true,
            other => {
                return Err(IngestError::InvalidLabel {
                    line,
                    value: other.to_string(),
                })
            }
        };
        if labels.insert(id, label).is_some() {
            return Err(IngestError::DuplicateRecord(id));
        }
    }
    Ok(labels)
}

/// Attaches labels to episodes; every episode must have one.
pub fn join_labels(
    mut episodes: Vec<RawEpisode>,
    labels: &BTreeMap<u64, bool>,
) -> Result<Vec<RawEpisode>, IngestError> {
    let mut missing = Vec::new();
    for ep in &mut episodes {
        match labels.get(&ep.record_id) {
            Some(&y) => ep.label = Some(y),
            None => missing.push(ep.record_id),
        }
    }
    if missing.is_empty() {
        Ok(episodes)
    } else {
        Err(IngestError::Unlabeled(missing))
    }
}

/// Checks the registry invariants (41 unique names).
pub fn registry_is_consistent() -> bool {
    let all: HashSet<&str> = SERIES_NAMES.iter().chain(STATIC_NAMES.iter()).copied().collect();
    all.len() == NUM_SERIES + NUM_STATICS && NUM_SERIES + NUM_STATICS == 41
}
