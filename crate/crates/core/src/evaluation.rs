//! Accuracy metrics over completed prediction runs and the single-dimension
//! correlation diagnostic.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::dest::DestCounters;
use crate::engine::Prediction;
use crate::error::{Error, Result};
use crate::record::{course_key_of, speed_bucket_of, AisRecord};
use crate::scalar::Scalar;

/// One ground-truth trip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripTruth<T> {
    pub ship_id: String,
    pub trip_id: u64,
    pub records: Vec<AisRecord<T>>,
    pub true_destination: String,
    pub true_arrival: i64,
}

/// Row of the truth file: `SHIP_ID,TRIP_ID,ARRIVAL_PORT,ARRIVAL_TIME`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthRow {
    pub ship_id: String,
    pub trip_id: u64,
    pub arrival_port: String,
    pub arrival_time: i64,
}

pub const TRUTH_HEADER: &str = "SHIP_ID,TRIP_ID,ARRIVAL_PORT,ARRIVAL_TIME";

impl<T: Scalar> From<&TripTruth<T>> for TruthRow {
    fn from(t: &TripTruth<T>) -> Self {
        TruthRow {
            ship_id: t.ship_id.clone(),
            trip_id: t.trip_id,
            arrival_port: t.true_destination.clone(),
            arrival_time: t.true_arrival,
        }
    }
}

impl TruthRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{}",
            self.ship_id, self.trip_id, self.arrival_port, self.arrival_time
        )
    }
}

/// Predictions of one trip next to its truth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScoredTrip {
    pub true_destination: String,
    pub true_arrival: i64,
    pub predictions: Vec<Prediction>,
}

impl ScoredTrip {
    /// Pairs a trip's records with the predictions made for them, in order.
    pub fn pair<T: Scalar>(truth: &TripTruth<T>, predictions: Vec<Prediction>) -> Result<Self> {
        if predictions.len() != truth.records.len() {
            return Err(Error::LengthMismatch(format!(
                "trip {} has {} records but {} predictions",
                truth.trip_id,
                truth.records.len(),
                predictions.len()
            )));
        }
        Ok(ScoredTrip {
            true_destination: truth.true_destination.clone(),
            true_arrival: truth.true_arrival,
            predictions,
        })
    }
}

fn read_csv_rows<R: Read>(source: R, header: &str) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);
    let got = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
    if !got.eq_ignore_ascii_case(header) {
        return Err(Error::MalformedLine {
            line: 1,
            reason: format!("expected header {header}, got {got}"),
        });
    }
    let arity = header.split(',').count();
    let mut rows = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() != arity {
            return Err(Error::MalformedLine {
                line,
                reason: format!("expected {arity} fields, got {}", row.len()),
            });
        }
        rows.push((line, row));
    }
    Ok(rows)
}

fn field<V: std::str::FromStr>(row: &csv::StringRecord, i: usize, line: usize) -> Result<V> {
    row[i].parse().map_err(|_| Error::MalformedLine {
        line,
        reason: format!("bad value {:?} in column {}", &row[i], i + 1),
    })
}

pub fn read_truth<R: Read>(source: R) -> Result<Vec<TruthRow>> {
    read_csv_rows(source, TRUTH_HEADER)?
        .into_iter()
        .map(|(line, row)| {
            Ok(TruthRow {
                ship_id: row[0].to_string(),
                trip_id: field(&row, 1, line)?,
                arrival_port: row[2].to_uppercase(),
                arrival_time: field(&row, 3, line)?,
            })
        })
        .collect()
}

pub fn read_predictions<R: Read>(source: R) -> Result<Vec<Prediction>> {
    read_csv_rows(source, Prediction::HEADER)?
        .into_iter()
        .map(|(line, row)| {
            Ok(Prediction {
                ship_id: row[0].to_string(),
                timestamp: field(&row, 1, line)?,
                port: row[2].to_uppercase(),
                arrival: field(&row, 3, line)?,
            })
        })
        .collect()
}

/// Assigns predictions to truth trips.
///
/// A ship's trips are ordered by arrival; a prediction belongs to the first
/// trip whose arrival is not earlier than its timestamp. Predictions that fit
/// no trip are returned as the skipped count. A trip without predictions is a
/// [`Error::LengthMismatch`]. The result is independent of input row order.
pub fn group_by_trip(
    predictions: &[Prediction],
    truth: &[TruthRow],
) -> Result<(Vec<ScoredTrip>, usize)> {
    let mut by_ship: BTreeMap<&str, Vec<&TruthRow>> = BTreeMap::new();
    for t in truth {
        by_ship.entry(&t.ship_id).or_default().push(t);
    }
    for trips in by_ship.values_mut() {
        trips.sort_by_key(|t| (t.arrival_time, t.trip_id));
    }

    let mut preds: Vec<&Prediction> = predictions.iter().collect();
    preds.sort_by(|a, b| {
        (a.ship_id.as_str(), a.timestamp, a.port.as_str(), a.arrival).cmp(&(
            b.ship_id.as_str(),
            b.timestamp,
            b.port.as_str(),
            b.arrival,
        ))
    });

    let mut buckets: BTreeMap<(&str, usize), Vec<Prediction>> = BTreeMap::new();
    let mut skipped = 0;
    for p in preds {
        let slot = by_ship
            .get(p.ship_id.as_str())
            .and_then(|trips| trips.iter().position(|t| p.timestamp <= t.arrival_time));
        match slot {
            Some(i) => buckets
                .entry((by_ship.get_key_value(p.ship_id.as_str()).unwrap().0, i))
                .or_default()
                .push(p.clone()),
            None => skipped += 1,
        }
    }

    let mut out = Vec::with_capacity(truth.len());
    for (ship, trips) in &by_ship {
        for (i, t) in trips.iter().enumerate() {
            let predictions = buckets.remove(&(*ship, i)).ok_or_else(|| {
                Error::LengthMismatch(format!(
                    "trip {} of ship {ship} has no predictions",
                    t.trip_id
                ))
            })?;
            out.push(ScoredTrip {
                true_destination: t.arrival_port.clone(),
                true_arrival: t.arrival_time,
                predictions,
            });
        }
    }
    Ok((out, skipped))
}

/// Fraction of records whose reported destination is correct, over all trips.
pub fn route_accuracy(trips: &[ScoredTrip]) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for t in trips {
        hit += t
            .predictions
            .iter()
            .filter(|p| p.port == t.true_destination)
            .count();
        total += t.predictions.len();
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

/// Fraction of sailing time covered by a correct destination. Each prediction
/// holds until the ship's next report, the last one until arrival.
pub fn time_weighted_accuracy(trips: &[ScoredTrip]) -> f64 {
    let (mut hit, mut total) = (0i128, 0i128);
    for t in trips {
        let mut ps: Vec<&Prediction> = t.predictions.iter().collect();
        ps.sort_by_key(|p| p.timestamp);
        for (i, p) in ps.iter().enumerate() {
            let until = ps.get(i + 1).map_or(t.true_arrival, |n| n.timestamp);
            let span = (until - p.timestamp).max(0) as i128;
            total += span;
            if p.port == t.true_destination {
                hit += span;
            }
        }
    }
    if total == 0 {
        route_accuracy(trips)
    } else {
        hit as f64 / total as f64
    }
}

/// Mean and median absolute arrival error, minutes.
pub fn eta_error(trips: &[ScoredTrip]) -> (f64, f64) {
    let mut errs: Vec<f64> = trips
        .iter()
        .flat_map(|t| {
            t.predictions
                .iter()
                .map(move |p| (p.arrival - t.true_arrival).abs() as f64 / 60.0)
        })
        .collect();
    if errs.is_empty() {
        return (0.0, 0.0);
    }
    errs.sort_by(f64::total_cmp);
    let mean = errs.iter().sum::<f64>() / errs.len() as f64;
    let mid = errs.len() / 2;
    let median = if errs.len() % 2 == 1 {
        errs[mid]
    } else {
        (errs[mid - 1] + errs[mid]) / 2.0
    };
    (mean, median)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub route_accuracy: f64,
    pub tuple_accuracy: f64,
    pub eta_mean_abs_error_min: f64,
    pub eta_median_abs_error_min: f64,
    pub trips: usize,
    pub skipped: usize,
}

impl EvalReport {
    pub fn from_trips(trips: &[ScoredTrip], skipped: usize) -> Self {
        let (mean, median) = eta_error(trips);
        EvalReport {
            route_accuracy: route_accuracy(trips),
            tuple_accuracy: time_weighted_accuracy(trips),
            eta_mean_abs_error_min: mean,
            eta_median_abs_error_min: median,
            trips: trips.len(),
            skipped,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "trips evaluated      {}", self.trips)?;
        writeln!(f, "predictions skipped  {}", self.skipped)?;
        writeln!(
            f,
            "route accuracy       {:.2}%",
            self.route_accuracy * 100.0
        )?;
        writeln!(
            f,
            "time-weighted acc.   {:.2}%",
            self.tuple_accuracy * 100.0
        )?;
        writeln!(
            f,
            "ETA mean abs error   {:.1} min",
            self.eta_mean_abs_error_min
        )?;
        write!(
            f,
            "ETA median abs error {:.1} min",
            self.eta_median_abs_error_min
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dimension {
    Type,
    Speed,
    Departure,
    Draught,
    Course,
    Heading,
}

impl Dimension {
    pub const ALL: [Dimension; 6] = [
        Dimension::Type,
        Dimension::Speed,
        Dimension::Departure,
        Dimension::Draught,
        Dimension::Course,
        Dimension::Heading,
    ];

    fn key<T: Scalar>(self, r: &AisRecord<T>, speed_bucket: T) -> Option<String> {
        match self {
            Dimension::Type => Some(r.ship_type.to_string()),
            Dimension::Speed => Some(speed_bucket_of(r.speed, speed_bucket).to_string()),
            Dimension::Departure => Some(r.departure_port.clone()),
            // decimetre resolution
            Dimension::Draught => r.draught.map(|d| format!("{:.1}", d.as_f64())),
            Dimension::Course => Some(course_key_of(r.course).to_string()),
            Dimension::Heading => r.heading.map(|h| course_key_of(h).to_string()),
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::Type => "Type",
            Dimension::Speed => "Speed",
            Dimension::Departure => "Departure",
            Dimension::Draught => "Draught",
            Dimension::Course => "Course",
            Dimension::Heading => "Heading",
        })
    }
}

/// Error rate of predicting each labeled record's destination from a single
/// dimension value, fitted and scored on the same records.
///
/// Each value maps to its most frequent destination (ties to the smaller
/// name). Records lacking the dimension are left out of its row; a row with
/// no usable records is `None`.
pub fn dimension_diagnostic<T: Scalar>(
    records: &[AisRecord<T>],
    speed_bucket: T,
) -> BTreeMap<Dimension, Option<f64>> {
    let labeled: Vec<(&AisRecord<T>, &str)> = records
        .iter()
        .filter_map(|r| r.label_destination.as_deref().map(|d| (r, d)))
        .collect();
    let mut out = BTreeMap::new();
    for dim in Dimension::ALL {
        let mut table: BTreeMap<String, DestCounters> = BTreeMap::new();
        for (r, dest) in &labeled {
            if let Some(k) = dim.key(r, speed_bucket) {
                table.entry(k).or_default().increment(dest);
            }
        }
        let winner: BTreeMap<&str, &str> = table
            .iter()
            .map(|(k, c)| {
                let best = c
                    .iter()
                    .fold(None::<(&str, u64)>, |acc, (d, n)| match acc {
                        Some((_, m)) if m >= n => acc,
                        _ => Some((d, n)),
                    })
                    .map(|(d, _)| d)
                    .unwrap_or("");
                (k.as_str(), best)
            })
            .collect();
        let (mut wrong, mut seen) = (0usize, 0usize);
        for (r, dest) in &labeled {
            if let Some(k) = dim.key(r, speed_bucket) {
                seen += 1;
                if winner[k.as_str()] != *dest {
                    wrong += 1;
                }
            }
        }
        out.insert(dim, (seen > 0).then(|| wrong as f64 / seen as f64));
    }
    out
}

/// Two-column text table of a diagnostic result.
pub fn format_diagnostic(rows: &BTreeMap<Dimension, Option<f64>>) -> String {
    let mut s = format!("{:<12}{}\n", "Dimension", "Error rate percentage");
    for dim in Dimension::ALL {
        let cell = match rows.get(&dim).copied().flatten() {
            Some(rate) => format!("{:.1}%", rate * 100.0),
            None => "n/a".to_string(),
        };
        s.push_str(&format!("{:<12}{}\n", dim.to_string(), cell));
    }
    s
}
