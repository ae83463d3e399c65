//! Synthetic corpus in the record-file format, for tests and demos.
//!
//! Patients get a random admission profile and a handful of irregularly
//! timed measurements. Positive patients drift toward abnormal values over
//! the stay (falling GCS, rising lactate and heart rate), so the label is
//! learnable but not trivially separable.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{Measurement, ParamId, RawEpisode, StaticKind, Statics, WeightObservation, SERIES_NAMES};

fn param(name: &str) -> ParamId {
    let idx = SERIES_NAMES.iter().position(|&n| n == name).expect("registered name");
    ParamId::new(idx).expect("in range")
}

/// `(name, healthy mean, spread, drift per hour when positive, mean gap in minutes)`
const PROFILE: [(&str, f64, f64, f64, f64); 8] = [
    ("HR", 85.0, 12.0, 0.5, 60.0),
    ("Temp", 37.0, 0.6, 0.01, 120.0),
    ("GCS", 13.0, 2.0, -0.12, 180.0),
    ("Lactate", 1.8, 0.8, 0.06, 360.0),
    ("BUN", 25.0, 10.0, 0.3, 480.0),
    ("SysABP", 120.0, 18.0, -0.4, 90.0),
    ("Urine", 120.0, 80.0, -1.5, 90.0),
    ("WBC", 11.0, 4.0, 0.05, 600.0),
];

/// `n` labeled episodes with roughly `positive_rate` positives. Record ids
/// start at 100000.
pub fn generate(n: usize, positive_rate: f64, seed: u64) -> Vec<RawEpisode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = rng.gen_bool(positive_rate);
            episode(100_000 + i as u64, label, &mut rng)
        })
        .collect()
}

fn round(v: f64, places: i32) -> f64 {
    let f = 10f64.powi(places);
    (v * f).round() / f
}

fn episode(record_id: u64, label: bool, rng: &mut ChaCha8Rng) -> RawEpisode {
    let mut statics = Statics::default();
    let age: f64 = rng.gen_range(16.0..90.0);
    statics.set(StaticKind::Age, Some(round(age, 0)));
    statics.set(StaticKind::Gender, rng.gen_bool(0.95).then(|| f64::from(rng.gen_bool(0.56) as u8)));
    statics.set(StaticKind::Height, rng.gen_bool(0.5).then(|| round(rng.gen_range(150.0..195.0), 1)));
    statics.set(StaticKind::IcuType, Some(f64::from(rng.gen_range(1..=4u8))));
    let weight = round(rng.gen_range(50.0..120.0), 1);
    statics.set(StaticKind::Weight, rng.gen_bool(0.9).then_some(weight));

    let horizon: u32 = if rng.gen_bool(0.85) { 2880 } else { rng.gen_range(600..2880) };
    let severity = if label { rng.gen_range(0.5..1.5) } else { rng.gen_range(-0.3..0.4) };
    let mut measurements = Vec::new();
    for (name, mean, spread, drift, gap) in PROFILE {
        if rng.gen_bool(0.1) {
            continue;
        }
        let id = param(name);
        let base = mean + rng.gen_range(-1.0..1.0) * spread * 0.5;
        let mut t = rng.gen_range(0.0..gap);
        while (t as u32) <= horizon {
            let hours = t / 60.0;
            let noise: f64 = rng.gen_range(-1.0..1.0) * spread * 0.6;
            let value = base + severity * drift * hours + noise;
            measurements.push(Measurement {
                minutes_since_admission: t as u32,
                parameter: id,
                value: round(value, 2),
            });
            t += rng.gen_range(0.3..1.7) * gap;
        }
    }
    measurements.sort_by_key(|m| m.minutes_since_admission);

    let later_weights = if rng.gen_bool(0.2) {
        vec![WeightObservation {
            minutes_since_admission: rng.gen_range(60..horizon),
            value: round(weight + rng.gen_range(-3.0..3.0), 1),
        }]
    } else {
        Vec::new()
    };

    RawEpisode {
        record_id,
        statics,
        measurements,
        later_weights,
        label: Some(label),
    }
}

/// Outcomes-file text for labeled episodes.
pub fn outcomes_text(episodes: &[RawEpisode]) -> String {
    let labels: BTreeMap<u64, bool> = episodes
        .iter()
        .filter_map(|e| e.label.map(|y| (e.record_id, y)))
        .collect();
    let mut out = String::from("RecordID,SAPS-I,SOFA,Length_of_stay,Survival,In-hospital_death\n");
    for (id, y) in labels {
        out.push_str(&format!("{id},-1,-1,-1,-1,{}\n", u8::from(y)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_record, serialize_record};

    #[test]
    fn deterministic_and_round_trips() {
        let a = generate(20, 0.3, 7);
        assert_eq!(a, generate(20, 0.3, 7));
        for ep in &a {
            let mut back = parse_record(&serialize_record(ep)).unwrap();
            back.label = ep.label;
            assert_eq!(&back, ep);
        }
    }
}
