//! AIS records and their CSV wire format.
//!
//! Evaluation rows carry ten columns:
//! `SHIP_ID,SHIPTYPE,SPEED,LON,LAT,COURSE,HEADING,TIMESTAMP,DEPARTURE_PORT_NAME,DRAUGHT`.
//! Training rows append `ARRIVAL_PORT,ARRIVAL_TIME`. A heading of `511` and
//! an empty draught both mean "not available".

use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::Coord;
use crate::scalar::Scalar;

pub const EVAL_HEADER: [&str; 10] = [
    "SHIP_ID",
    "SHIPTYPE",
    "SPEED",
    "LON",
    "LAT",
    "COURSE",
    "HEADING",
    "TIMESTAMP",
    "DEPARTURE_PORT_NAME",
    "DRAUGHT",
];
pub const TRAIN_EXTRA: [&str; 2] = ["ARRIVAL_PORT", "ARRIVAL_TIME"];

/// AIS convention for "heading not available".
pub const HEADING_UNAVAILABLE: u32 = 511;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schema {
    Train,
    Eval,
}

impl Schema {
    pub fn arity(self) -> usize {
        match self {
            Schema::Train => EVAL_HEADER.len() + TRAIN_EXTRA.len(),
            Schema::Eval => EVAL_HEADER.len(),
        }
    }

    pub fn header(self) -> Vec<&'static str> {
        let mut cols = EVAL_HEADER.to_vec();
        if self == Schema::Train {
            cols.extend(TRAIN_EXTRA);
        }
        cols
    }

    pub fn header_line(self) -> String {
        self.header().join(",")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AisRecord<T> {
    pub ship_id: String,
    pub ship_type: u32,
    /// Knots.
    pub speed: T,
    pub pos: Coord<T>,
    /// Course over ground, degrees in [0, 360).
    pub course: T,
    pub heading: Option<T>,
    /// Event time, epoch seconds.
    pub timestamp: i64,
    pub departure_port: String,
    /// Meters.
    pub draught: Option<T>,
    pub label_destination: Option<String>,
    pub label_arrival: Option<i64>,
}

impl<T: Scalar> AisRecord<T> {
    pub fn is_labeled(&self) -> bool {
        self.label_destination.is_some() && self.label_arrival.is_some()
    }

    /// Same record with its labels dropped.
    pub fn unlabeled(&self) -> Self {
        AisRecord {
            label_destination: None,
            label_arrival: None,
            ..self.clone()
        }
    }

    /// Serializes to one CSV row (no trailing newline). Labeled records
    /// produce the training layout, unlabeled ones the evaluation layout.
    pub fn to_csv_line(&self) -> String {
        let mut s = String::with_capacity(96);
        let heading = match self.heading {
            Some(h) => h.to_string(),
            None => HEADING_UNAVAILABLE.to_string(),
        };
        let draught = self.draught.map(|d| d.to_string()).unwrap_or_default();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            self.ship_id,
            self.ship_type,
            self.speed,
            self.pos.lon,
            self.pos.lat,
            self.course,
            heading,
            self.timestamp,
            self.departure_port,
            draught
        );
        if let (Some(dest), Some(arrival)) = (&self.label_destination, self.label_arrival) {
            let _ = write!(s, ",{dest},{arrival}");
        }
        s
    }
}

fn malformed(line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedLine {
        line,
        reason: reason.into(),
    }
}

fn num<T: Scalar>(field: &str, name: &str, line: usize) -> Result<T> {
    field
        .parse::<T>()
        .map_err(|e| malformed(line, format!("{name}: {e} ({field:?})")))
}

fn int<I: std::str::FromStr>(field: &str, name: &str, line: usize) -> Result<I>
where
    I::Err: std::fmt::Display,
{
    field
        .parse::<I>()
        .map_err(|e| malformed(line, format!("{name}: {e} ({field:?})")))
}

/// Parses already-split CSV fields. `line` is only used for error messages.
pub fn parse_fields<T: Scalar>(
    fields: &[&str],
    schema: Schema,
    line: usize,
) -> Result<AisRecord<T>> {
    let n = fields.len();
    match schema {
        Schema::Eval if n != EVAL_HEADER.len() => {
            return Err(malformed(line, format!("expected 10 fields, got {n}")));
        }
        Schema::Train if n == EVAL_HEADER.len() => return Err(Error::MissingLabel { line }),
        Schema::Train if n != schema.arity() => {
            return Err(malformed(line, format!("expected 12 fields, got {n}")));
        }
        _ => {}
    }
    let f: Vec<&str> = fields.iter().map(|s| s.trim()).collect();

    let ship_id = f[0].to_string();
    if ship_id.is_empty() {
        return Err(malformed(line, "empty SHIP_ID"));
    }
    let ship_type: u32 = int(f[1], "SHIPTYPE", line)?;
    let speed: T = num(f[2], "SPEED", line)?;
    if !speed.is_finite() || speed < T::zero() {
        return Err(malformed(line, "SPEED must be finite and >= 0"));
    }
    let lon: T = num(f[3], "LON", line)?;
    let lat: T = num(f[4], "LAT", line)?;
    let pos = Coord::new(lat, lon).map_err(|e| malformed(line, e.to_string()))?;
    let course: T = num(f[5], "COURSE", line)?;
    if !(course >= T::zero() && course < T::lit(360.0)) {
        return Err(malformed(line, "COURSE must be in [0, 360)"));
    }
    let heading = if f[6].is_empty() {
        None
    } else {
        let h: T = num(f[6], "HEADING", line)?;
        if h == T::lit(HEADING_UNAVAILABLE as f64) {
            None
        } else if h >= T::zero() && h < T::lit(360.0) {
            Some(h)
        } else {
            return Err(malformed(line, "HEADING must be in [0, 360) or 511"));
        }
    };
    let timestamp: i64 = int(f[7], "TIMESTAMP", line)?;
    let departure_port = f[8].to_uppercase();
    let draught = if f[9].is_empty() {
        None
    } else {
        Some(num::<T>(f[9], "DRAUGHT", line)?)
    };

    let (label_destination, label_arrival) = match schema {
        Schema::Eval => (None, None),
        Schema::Train => {
            if f[10].is_empty() || f[11].is_empty() {
                return Err(Error::MissingLabel { line });
            }
            (
                Some(f[10].to_uppercase()),
                Some(int::<i64>(f[11], "ARRIVAL_TIME", line)?),
            )
        }
    };

    Ok(AisRecord {
        ship_id,
        ship_type,
        speed,
        pos,
        course,
        heading,
        timestamp,
        departure_port,
        draught,
        label_destination,
        label_arrival,
    })
}

/// Parses a single CSV row (no header).
pub fn parse_record<T: Scalar>(line: &str, schema: Schema) -> Result<AisRecord<T>> {
    let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split(',').collect();
    parse_fields(&fields, schema, 1)
}

/// Streams records from a CSV source with a header row.
pub struct RecordReader<R: Read, T> {
    inner: csv::Reader<R>,
    schema: Schema,
    row: csv::StringRecord,
    _scalar: std::marker::PhantomData<T>,
}

impl<R: Read, T: Scalar> RecordReader<R, T> {
    pub fn new(source: R, schema: Schema) -> Result<Self> {
        let mut inner = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(source);
        let header = inner.headers()?.clone();
        let got: Vec<String> = header.iter().map(|h| h.to_uppercase()).collect();
        // Training files may be read with the evaluation schema: labels are ignored.
        let ok = match schema {
            Schema::Train => got == Schema::Train.header(),
            Schema::Eval => got == Schema::Eval.header() || got == Schema::Train.header(),
        };
        if !ok && !(got.is_empty() || got == [""]) {
            return Err(malformed(
                1,
                format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
            ));
        }
        Ok(RecordReader {
            inner,
            schema,
            row: csv::StringRecord::new(),
            _scalar: std::marker::PhantomData,
        })
    }
}

impl<R: Read, T: Scalar> Iterator for RecordReader<R, T> {
    type Item = Result<AisRecord<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.inner.read_record(&mut self.row) {
            Ok(false) => None,
            Err(e) => Some(Err(e.into())),
            Ok(true) => {
                let line = self.row.position().map_or(0, |p| p.line() as usize);
                let mut fields: Vec<&str> = self.row.iter().collect();
                if self.schema == Schema::Eval && fields.len() == Schema::Train.arity() {
                    fields.truncate(EVAL_HEADER.len());
                }
                Some(parse_fields(&fields, self.schema, line))
            }
        }
    }
}

/// Reads every record, stopping at the first error.
pub fn read_records<R: Read, T: Scalar>(source: R, schema: Schema) -> Result<Vec<AisRecord<T>>> {
    RecordReader::new(source, schema)?.collect()
}

/// Speed interval index for a bucket width in knots.
pub fn speed_bucket_of<T: Scalar>(speed: T, bucket: T) -> i64 {
    (speed / bucket).floor().to_i64().unwrap_or(0)
}

/// Integer-degree course key in [0, 359].
pub fn course_key_of<T: Scalar>(course: T) -> u16 {
    let k = course.round().to_i64().unwrap_or(0).rem_euclid(360);
    k as u16
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRAIN_LINE: &str = "V1,70,12.3,-5.5,35.5,130.0,129,1000,TANGER,7.5,CEUTA,5000";

    #[test]
    fn parses_training_line() {
        let r: AisRecord<f64> = parse_record(TRAIN_LINE, Schema::Train).unwrap();
        assert_eq!(r.ship_id, "V1");
        assert_eq!(r.ship_type, 70);
        assert_eq!(r.speed, 12.3);
        assert_eq!(
            r.pos,
            Coord {
                lat: 35.5,
                lon: -5.5
            }
        );
        assert_eq!(r.course, 130.0);
        assert_eq!(r.heading, Some(129.0));
        assert_eq!(r.timestamp, 1000);
        assert_eq!(r.departure_port, "TANGER");
        assert_eq!(r.draught, Some(7.5));
        assert_eq!(r.label_destination.as_deref(), Some("CEUTA"));
        assert_eq!(r.label_arrival, Some(5000));
    }

    #[test]
    fn heading_sentinel_is_absent() {
        let line = "V1,70,12.3,-5.5,35.5,130.0,511,1000,TANGER,";
        let r: AisRecord<f64> = parse_record(line, Schema::Eval).unwrap();
        assert_eq!(r.heading, None);
        assert_eq!(r.draught, None);
    }

    #[test]
    fn train_schema_requires_labels() {
        let line = "V1,70,12.3,-5.5,35.5,130.0,129,1000,TANGER,7.5";
        assert!(matches!(
            parse_record::<f64>(line, Schema::Train),
            Err(Error::MissingLabel { .. })
        ));
        let line = "V1,70,12.3,-5.5,35.5,130.0,129,1000,TANGER,7.5,,";
        assert!(matches!(
            parse_record::<f64>(line, Schema::Train),
            Err(Error::MissingLabel { .. })
        ));
        let nine = "V1,70,12.3,-5.5,35.5,130.0,129,1000,TANGER";
        assert!(parse_record::<f64>(nine, Schema::Train).is_err());
    }

    #[test]
    fn eval_schema_rejects_labels_and_garbage() {
        assert!(matches!(
            parse_record::<f64>(TRAIN_LINE, Schema::Eval),
            Err(Error::MalformedLine { .. })
        ));
        let bad = "V1,70,fast,-5.5,35.5,130.0,129,1000,TANGER,7.5";
        assert!(matches!(
            parse_record::<f64>(bad, Schema::Eval),
            Err(Error::MalformedLine { .. })
        ));
        let neg = "V1,70,-1,-5.5,35.5,130.0,129,1000,TANGER,7.5";
        assert!(parse_record::<f64>(neg, Schema::Eval).is_err());
        let course = "V1,70,1,-5.5,35.5,360.0,129,1000,TANGER,7.5";
        assert!(parse_record::<f64>(course, Schema::Eval).is_err());
        let lat = "V1,70,1,-5.5,95.5,36.0,129,1000,TANGER,7.5";
        assert!(parse_record::<f64>(lat, Schema::Eval).is_err());
    }

    #[test]
    fn csv_line_roundtrip() {
        let r: AisRecord<f64> = parse_record(TRAIN_LINE, Schema::Train).unwrap();
        assert_eq!(r.to_csv_line(), TRAIN_LINE.replace("130.0", "130"));
        let back: AisRecord<f64> = parse_record(&r.to_csv_line(), Schema::Train).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn reader_checks_header_and_lines() {
        let text = format!("{}\n{}\n", Schema::Train.header_line(), TRAIN_LINE);
        let recs: Vec<AisRecord<f64>> = read_records(text.as_bytes(), Schema::Train).unwrap();
        assert_eq!(recs.len(), 1);
        // labels are dropped when a training file is read as an evaluation stream
        let recs: Vec<AisRecord<f64>> = read_records(text.as_bytes(), Schema::Eval).unwrap();
        assert!(!recs[0].is_labeled());

        let bad = format!("A,B,C\n{TRAIN_LINE}\n");
        assert!(read_records::<_, f64>(bad.as_bytes(), Schema::Train).is_err());
        let short = format!("{}\nV1,70\n", Schema::Train.header_line());
        let err = read_records::<_, f64>(short.as_bytes(), Schema::Train).unwrap_err();
        assert!(
            matches!(err, Error::MalformedLine { line: 2, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn speed_buckets() {
        assert_eq!(speed_bucket_of(12.3, 0.5), 24);
        assert_eq!(speed_bucket_of(0.0, 0.5), 0);
        assert_eq!(speed_bucket_of(0.49999, 0.5), 0);
    }

    #[test]
    fn course_keys() {
        assert_eq!(course_key_of(259.7), 260);
        assert_eq!(course_key_of(359.8), 0);
        assert_eq!(course_key_of(130.0), 130);
        assert_eq!(course_key_of(0.2f32), 0);
    }
}
