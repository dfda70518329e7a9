//! Engine configuration and the flat `key = value` file format.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GridSpec;
use crate::scalar::Scalar;

/// Dimension consulted when picking arrival-time statistics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EtaDimension {
    Course,
    Speed,
    Departure,
}

impl FromStr for EtaDimension {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "course" => Ok(EtaDimension::Course),
            "speed" => Ok(EtaDimension::Speed),
            "departure" => Ok(EtaDimension::Departure),
            other => Err(Error::Config(format!("unknown eta_dimension {other:?}"))),
        }
    }
}

impl fmt::Display for EtaDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EtaDimension::Course => "course",
            EtaDimension::Speed => "speed",
            EtaDimension::Departure => "departure",
        })
    }
}

/// Criteria that break ties between destinations with equal counter sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieBreak {
    /// Port best aligned with the record's course.
    GeoCourse,
    /// Nearest port.
    GeoDistance,
    /// Most arrivals from the record's departure port.
    DepartureFreq,
    /// Most arrivals of the record's ship type.
    TypeFreq,
}

impl TieBreak {
    pub const ALL: [TieBreak; 4] = [
        TieBreak::GeoCourse,
        TieBreak::GeoDistance,
        TieBreak::DepartureFreq,
        TieBreak::TypeFreq,
    ];
}

impl FromStr for TieBreak {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geo_course" => Ok(TieBreak::GeoCourse),
            "geo_distance" => Ok(TieBreak::GeoDistance),
            "departure_freq" => Ok(TieBreak::DepartureFreq),
            "type_freq" => Ok(TieBreak::TypeFreq),
            other => Err(Error::Config(format!("unknown tie-break {other:?}"))),
        }
    }
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieBreak::GeoCourse => "geo_course",
            TieBreak::GeoDistance => "geo_distance",
            TieBreak::DepartureFreq => "departure_freq",
            TieBreak::TypeFreq => "type_freq",
        })
    }
}

/// Bounding box shared by both grids.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bbox<T> {
    pub lat_min: T,
    pub lat_max: T,
    pub lon_min: T,
    pub lon_max: T,
}

impl<T: Scalar> Bbox<T> {
    pub fn grid(&self, granularity: T) -> Result<GridSpec<T>> {
        GridSpec::new(
            self.lat_min,
            self.lat_max,
            self.lon_min,
            self.lon_max,
            granularity,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig<T> {
    /// Destination grid cell size, degrees.
    pub dest_granularity: T,
    /// Arrival-time grid cell size, degrees.
    pub eta_granularity: T,
    pub bbox: Bbox<T>,
    /// Degrees around the record's course within which course keys match.
    pub course_tolerance: T,
    /// Speed interval width, knots.
    pub speed_bucket: T,
    pub max_ring_radius: u32,
    pub robustness_k: usize,
    pub robustness_window: usize,
    pub eta_dimension: EtaDimension,
    pub time_adjustment: bool,
    pub semi_supervised: bool,
    /// Event-time seconds without reports, inside a port radius, that end a trip.
    pub quiet_period: i64,
    pub tie_break_order: Vec<TieBreak>,
}

impl<T: Scalar> Default for EngineConfig<T> {
    fn default() -> Self {
        EngineConfig {
            dest_granularity: T::lit(1.0),
            eta_granularity: T::lit(0.005),
            bbox: Bbox {
                lat_min: T::lit(30.0),
                lat_max: T::lit(46.0),
                lon_min: T::lit(-6.0),
                lon_max: T::lit(36.5),
            },
            course_tolerance: T::lit(15.0),
            speed_bucket: T::lit(0.5),
            max_ring_radius: 10,
            robustness_k: 1,
            robustness_window: 64,
            eta_dimension: EtaDimension::Course,
            time_adjustment: true,
            semi_supervised: false,
            quiet_period: 1800,
            tie_break_order: TieBreak::ALL.to_vec(),
        }
    }
}

/// Splits a `key = value` file into entries. `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected `key = value`",
                i + 1
            )));
        };
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub(crate) fn parse_value<V: FromStr>(line: usize, key: &str, v: &str) -> Result<V>
where
    V::Err: fmt::Display,
{
    v.parse::<V>()
        .map_err(|e| Error::Config(format!("line {line}: {key}: {e}")))
}

pub(crate) fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "line {line}: {key}: expected a boolean, got {v:?}"
        ))),
    }
}

impl<T: Scalar> EngineConfig<T> {
    /// Parses a config file over the defaults. Unknown keys are errors.
    pub fn from_config_text(text: &str) -> Result<Self> {
        let mut cfg = EngineConfig::default();
        for (line, key, v) in parse_key_values(text)? {
            match key.as_str() {
                "dest_granularity" => cfg.dest_granularity = parse_value(line, &key, &v)?,
                "eta_granularity" => cfg.eta_granularity = parse_value(line, &key, &v)?,
                "bbox" => {
                    let parts: Vec<T> = v
                        .split(',')
                        .map(|p| parse_value(line, &key, p.trim()))
                        .collect::<Result<_>>()?;
                    let [lat_min, lat_max, lon_min, lon_max] = parts[..] else {
                        return Err(Error::Config(format!(
                            "line {line}: bbox expects lat_min,lat_max,lon_min,lon_max"
                        )));
                    };
                    cfg.bbox = Bbox {
                        lat_min,
                        lat_max,
                        lon_min,
                        lon_max,
                    };
                }
                "course_tolerance" => cfg.course_tolerance = parse_value(line, &key, &v)?,
                "speed_bucket" => cfg.speed_bucket = parse_value(line, &key, &v)?,
                "max_ring_radius" => cfg.max_ring_radius = parse_value(line, &key, &v)?,
                "robustness_k" => cfg.robustness_k = parse_value(line, &key, &v)?,
                "robustness_window" => cfg.robustness_window = parse_value(line, &key, &v)?,
                "eta_dimension" => cfg.eta_dimension = v.parse()?,
                "time_adjustment" => cfg.time_adjustment = parse_bool(line, &key, &v)?,
                "semi_supervised" => cfg.semi_supervised = parse_bool(line, &key, &v)?,
                "quiet_period" => cfg.quiet_period = parse_value(line, &key, &v)?,
                "tie_break_order" => {
                    cfg.tie_break_order = v
                        .split(',')
                        .map(|p| p.trim().parse())
                        .collect::<Result<_>>()?;
                }
                other => return Err(Error::Config(format!("line {line}: unknown key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_config_text(&self) -> String {
        let order: Vec<String> = self.tie_break_order.iter().map(|t| t.to_string()).collect();
        let b = &self.bbox;
        format!(
            "dest_granularity = {}\n\
             eta_granularity = {}\n\
             bbox = {},{},{},{}\n\
             course_tolerance = {}\n\
             speed_bucket = {}\n\
             max_ring_radius = {}\n\
             robustness_k = {}\n\
             robustness_window = {}\n\
             eta_dimension = {}\n\
             time_adjustment = {}\n\
             semi_supervised = {}\n\
             quiet_period = {}\n\
             tie_break_order = {}\n",
            self.dest_granularity,
            self.eta_granularity,
            b.lat_min,
            b.lat_max,
            b.lon_min,
            b.lon_max,
            self.course_tolerance,
            self.speed_bucket,
            self.max_ring_radius,
            self.robustness_k,
            self.robustness_window,
            self.eta_dimension,
            self.time_adjustment,
            self.semi_supervised,
            self.quiet_period,
            order.join(","),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.dest_granularity > T::zero()) || !(self.eta_granularity > T::zero()) {
            return bad("granularities must be > 0");
        }
        if !(self.course_tolerance >= T::zero() && self.course_tolerance <= T::lit(180.0)) {
            return bad("course_tolerance must be in [0, 180]");
        }
        if !(self.speed_bucket > T::zero()) {
            return bad("speed_bucket must be > 0");
        }
        if self.robustness_k == 0 || self.robustness_window == 0 {
            return bad("robustness_k and robustness_window must be >= 1");
        }
        if self.quiet_period < 0 {
            return bad("quiet_period must be >= 0");
        }
        let mut seen = self.tie_break_order.clone();
        seen.sort_by_key(|t| *t as u8);
        seen.dedup();
        if self.tie_break_order.len() != TieBreak::ALL.len() || seen.len() != TieBreak::ALL.len() {
            return bad("tie_break_order must list each criterion exactly once");
        }
        self.dest_grid()?;
        self.eta_grid()?;
        Ok(())
    }

    pub fn dest_grid(&self) -> Result<GridSpec<T>> {
        self.bbox.grid(self.dest_granularity)
    }

    pub fn eta_grid(&self) -> Result<GridSpec<T>> {
        self.bbox.grid(self.eta_granularity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = EngineConfig::<f64>::default();
        assert_eq!(c.dest_granularity, 1.0);
        assert_eq!(c.eta_granularity, 0.005);
        assert_eq!(c.course_tolerance, 15.0);
        assert_eq!(c.speed_bucket, 0.5);
        assert_eq!(c.max_ring_radius, 10);
        assert_eq!((c.robustness_k, c.robustness_window), (1, 64));
        assert_eq!(c.eta_dimension, EtaDimension::Course);
        assert!(c.time_adjustment && !c.semi_supervised);
        assert_eq!(c.quiet_period, 1800);
        assert_eq!(c.tie_break_order, TieBreak::ALL.to_vec());
        assert_eq!(c.eta_grid().unwrap().capacity(), 27_200_000);
        c.validate().unwrap();
    }

    #[test]
    fn text_roundtrip() {
        let mut c = EngineConfig::<f64>::default();
        c.eta_granularity = 0.05;
        c.semi_supervised = true;
        c.eta_dimension = EtaDimension::Departure;
        c.tie_break_order.reverse();
        let back = EngineConfig::<f64>::from_config_text(&c.to_config_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = EngineConfig::<f64>::from_config_text("# comment\n\nrobustness_k = 3\n").unwrap();
        assert_eq!(c.robustness_k, 3);
        assert_eq!(c.dest_granularity, 1.0);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(EngineConfig::<f64>::from_config_text("colour = blue").is_err());
        assert!(EngineConfig::<f64>::from_config_text("dest_granularity = 0").is_err());
        assert!(EngineConfig::<f64>::from_config_text("course_tolerance = 200").is_err());
        assert!(EngineConfig::<f64>::from_config_text(
            "tie_break_order = geo_course,geo_course,type_freq,departure_freq"
        )
        .is_err());
        assert!(EngineConfig::<f64>::from_config_text("bbox = 1,2,3").is_err());
        assert!(EngineConfig::<f64>::from_config_text("time_adjustment = maybe").is_err());
        assert!(EngineConfig::<f64>::from_config_text("no equals sign").is_err());
    }
}
