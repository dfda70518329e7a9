//! Seeded synthetic AIS traces with known destinations and arrival times.
//!
//! Ports are scattered uniformly over the bounding box and linked to their
//! nearest neighbours; every link is a shipping lane sailed in both
//! directions. A lane has a service speed and a dominant ship type. Trips pick
//! a lane at random and sail the great circle at a constant speed, reporting
//! every `report_interval` seconds with Gaussian position and course noise
//! (truncated at 3 sigma).

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{parse_bool, parse_key_values, parse_value, Bbox, EngineConfig};
use crate::error::{Error, Result};
use crate::evaluation::{TripTruth, TruthRow, TRUTH_HEADER};
use crate::geo::{bearing_deg, haversine_nm, interpolate, Coord};
use crate::ports::{Port, PortRegistry};
use crate::record::{AisRecord, Schema};
use crate::scalar::Scalar;

const SHIP_TYPES: [u32; 5] = [30, 60, 70, 80, 89];
const MIN_PORT_SEPARATION_DEG: f64 = 0.5;
const PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig<T> {
    pub seed: u64,
    pub n_ports: usize,
    pub n_train_trips: usize,
    pub n_eval_trips: usize,
    /// Range of lane service speeds, knots.
    pub speed_min: T,
    pub speed_max: T,
    /// Per-trip deviation from the lane speed, uniform in +/- this, knots.
    pub speed_jitter: T,
    pub report_interval: i64,
    pub pos_noise_sigma: T,
    pub course_noise_sigma: T,
    pub bbox: Bbox<T>,
    pub routes_per_port: usize,
    pub port_radius: T,
    pub start_time: i64,
    /// Trip departures are spread uniformly over this many seconds.
    pub time_span: i64,
    pub missing_heading: bool,
}

impl<T: Scalar> Default for SynthConfig<T> {
    fn default() -> Self {
        SynthConfig {
            seed: 2018,
            n_ports: 20,
            n_train_trips: 500,
            n_eval_trips: 100,
            speed_min: T::lit(10.0),
            speed_max: T::lit(18.0),
            speed_jitter: T::lit(0.25),
            report_interval: 600,
            pos_noise_sigma: T::lit(0.01),
            course_noise_sigma: T::lit(5.0),
            bbox: EngineConfig::<T>::default().bbox,
            routes_per_port: 3,
            port_radius: T::lit(2.0),
            // 2018-05-01T00:00:00Z
            start_time: 1_525_132_800,
            time_span: 30 * 86_400,
            missing_heading: false,
        }
    }
}

impl<T: Scalar> SynthConfig<T> {
    pub fn from_config_text(text: &str) -> Result<Self> {
        let mut c = SynthConfig::default();
        for (line, key, v) in parse_key_values(text)? {
            match key.as_str() {
                "seed" => c.seed = parse_value(line, &key, &v)?,
                "n_ports" => c.n_ports = parse_value(line, &key, &v)?,
                "n_train_trips" => c.n_train_trips = parse_value(line, &key, &v)?,
                "n_eval_trips" => c.n_eval_trips = parse_value(line, &key, &v)?,
                "speed_min" => c.speed_min = parse_value(line, &key, &v)?,
                "speed_max" => c.speed_max = parse_value(line, &key, &v)?,
                "speed_jitter" => c.speed_jitter = parse_value(line, &key, &v)?,
                "report_interval" => c.report_interval = parse_value(line, &key, &v)?,
                "pos_noise_sigma" => c.pos_noise_sigma = parse_value(line, &key, &v)?,
                "course_noise_sigma" => c.course_noise_sigma = parse_value(line, &key, &v)?,
                "bbox" => {
                    let text = format!("bbox = {v}");
                    c.bbox = EngineConfig::<T>::from_config_text(&text)?.bbox;
                }
                "routes_per_port" => c.routes_per_port = parse_value(line, &key, &v)?,
                "port_radius" => c.port_radius = parse_value(line, &key, &v)?,
                "start_time" => c.start_time = parse_value(line, &key, &v)?,
                "time_span" => c.time_span = parse_value(line, &key, &v)?,
                "missing_heading" => c.missing_heading = parse_bool(line, &key, &v)?,
                other => return Err(Error::Config(format!("line {line}: unknown key {other:?}"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_ports < 2 || self.n_train_trips == 0 || self.n_eval_trips == 0 {
            return bad("need at least 2 ports and 1 trip of each kind");
        }
        if self.routes_per_port == 0 {
            return bad("routes_per_port must be >= 1");
        }
        if !(self.speed_min > T::zero()) || self.speed_max < self.speed_min {
            return bad("speed range must be positive and ordered");
        }
        if self.speed_jitter < T::zero()
            || self.pos_noise_sigma < T::zero()
            || self.course_noise_sigma < T::zero()
        {
            return bad("jitter and noise sigmas must be >= 0");
        }
        if self.report_interval <= 0 || self.time_span < 0 {
            return bad("report_interval must be > 0 and time_span >= 0");
        }
        if !(self.port_radius > T::zero()) {
            return bad("port_radius must be > 0");
        }
        self.bbox.grid(T::one())?;
        Ok(())
    }
}

/// Generated ports, lanes and trips.
#[derive(Clone, Debug)]
pub struct SynthDataset<T> {
    pub ports: PortRegistry<T>,
    pub lanes: Vec<Lane>,
    pub train: Vec<TripTruth<T>>,
    pub eval: Vec<TripTruth<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lane {
    pub from: usize,
    pub to: usize,
    pub service_speed: f64,
    pub ship_type: u32,
}

/// Per-trip identity and timing.
#[derive(Clone, Debug)]
pub struct TripMeta {
    pub ship_id: String,
    pub trip_id: u64,
    pub ship_type: u32,
    pub draught: f64,
    pub start: i64,
    pub labeled: bool,
}

fn truncated<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let n = Normal::new(0.0, sigma).expect("sigma > 0");
    loop {
        let x: f64 = n.sample(rng);
        if x.abs() <= 3.0 * sigma {
            return x;
        }
    }
}

fn round_to(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

pub fn gen_ports<T: Scalar, R: Rng>(cfg: &SynthConfig<T>, rng: &mut R) -> Result<PortRegistry<T>> {
    let b = &cfg.bbox;
    let (lat_span, lon_span) = (
        (b.lat_max - b.lat_min).as_f64(),
        (b.lon_max - b.lon_min).as_f64(),
    );
    // keep lanes and position noise clear of the edges
    let lat_inset = (0.1 * lat_span).min(1.0);
    let lon_inset = (0.1 * lon_span).min(1.0);
    let mut placed: Vec<(f64, f64)> = Vec::with_capacity(cfg.n_ports);
    let mut attempts = 0;
    while placed.len() < cfg.n_ports {
        if attempts == PLACEMENT_ATTEMPTS * cfg.n_ports {
            return Err(Error::PlacementFailure {
                placed: placed.len(),
                wanted: cfg.n_ports,
            });
        }
        attempts += 1;
        let lat = round_to(
            b.lat_min.as_f64() + lat_inset + rng.random::<f64>() * (lat_span - 2.0 * lat_inset),
            1e-4,
        );
        let lon = round_to(
            b.lon_min.as_f64() + lon_inset + rng.random::<f64>() * (lon_span - 2.0 * lon_inset),
            1e-4,
        );
        let clear = placed.iter().all(|&(a, o)| {
            ((a - lat).powi(2) + (o - lon).powi(2)).sqrt() >= MIN_PORT_SEPARATION_DEG
        });
        if clear {
            placed.push((lat, lon));
        }
    }
    PortRegistry::from_ports(placed.into_iter().enumerate().map(|(i, (lat, lon))| Port {
        name: format!("PORT{:02}", i + 1),
        pos: Coord {
            lat: T::lit(lat),
            lon: T::lit(lon),
        },
        radius: cfg.port_radius,
    }))
}

/// Lanes linking each port to its nearest neighbours, both directions.
pub fn gen_lanes<T: Scalar, R: Rng>(
    ports: &PortRegistry<T>,
    cfg: &SynthConfig<T>,
    rng: &mut R,
) -> Vec<Lane> {
    let list: Vec<&Port<T>> = ports.iter().collect();
    let mut links = BTreeSet::new();
    for (i, p) in list.iter().enumerate() {
        let mut near: Vec<(f64, usize)> = list
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(j, q)| (haversine_nm(p.pos, q.pos).as_f64(), j))
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in near.iter().take(cfg.routes_per_port) {
            links.insert((i.min(j), i.max(j)));
        }
    }
    let (lo, hi) = (cfg.speed_min.as_f64(), cfg.speed_max.as_f64());
    let mut lanes = Vec::with_capacity(links.len() * 2);
    for (a, b) in links {
        for (from, to) in [(a, b), (b, a)] {
            lanes.push(Lane {
                from,
                to,
                service_speed: lo + rng.random::<f64>() * (hi - lo),
                ship_type: SHIP_TYPES[rng.random_range(0..SHIP_TYPES.len())],
            });
        }
    }
    lanes
}

/// Sails `from` to `to` at constant `speed` knots.
///
/// One report every `report_interval` seconds from departure, plus a final
/// report at the destination itself (no noise), whose timestamp is the
/// arrival time.
pub fn gen_trip<T: Scalar, R: Rng>(
    from: &Port<T>,
    to: &Port<T>,
    speed: T,
    meta: &TripMeta,
    cfg: &SynthConfig<T>,
    rng: &mut R,
) -> TripTruth<T> {
    let distance = haversine_nm(from.pos, to.pos).as_f64();
    let speed_kn = speed.as_f64();
    let duration = distance / speed_kn * 3600.0;
    let arrival = meta.start + duration.round() as i64;
    let interval = cfg.report_interval as f64;
    let (pos_sigma, course_sigma) = (
        cfg.pos_noise_sigma.as_f64(),
        cfg.course_noise_sigma.as_f64(),
    );

    let mut elapsed_marks: Vec<f64> = Vec::new();
    let mut k = 0u64;
    // the last periodic report must precede the arrival by at least a second
    while (k as f64) * interval < duration - 1.0 {
        elapsed_marks.push(k as f64 * interval);
        k += 1;
    }
    elapsed_marks.push(duration);

    let mut records = Vec::with_capacity(elapsed_marks.len());
    let mut last_bearing = bearing_deg(from.pos, to.pos)
        .map(|b| b.as_f64())
        .unwrap_or(0.0);
    for (i, &elapsed) in elapsed_marks.iter().enumerate() {
        let final_report = i + 1 == elapsed_marks.len();
        let truth_pos = if final_report {
            to.pos
        } else {
            interpolate(from.pos, to.pos, T::lit(elapsed / duration))
        };
        if !final_report {
            last_bearing = bearing_deg(truth_pos, to.pos)
                .map(|b| b.as_f64())
                .unwrap_or(last_bearing);
        }
        let (dlat, dlon) = if final_report {
            (0.0, 0.0)
        } else {
            (truncated(rng, pos_sigma), truncated(rng, pos_sigma))
        };
        let pos = Coord {
            lat: T::lit(round_to(truth_pos.lat.as_f64() + dlat, 1e-6)),
            lon: T::lit(round_to(truth_pos.lon.as_f64() + dlon, 1e-6)),
        };
        let mut course = round_to(
            (last_bearing + truncated(rng, course_sigma)).rem_euclid(360.0),
            0.1,
        );
        if course >= 360.0 {
            course = 0.0;
        }
        let heading = if cfg.missing_heading {
            None
        } else {
            Some(T::lit(
                (last_bearing + truncated(rng, 2.0))
                    .round()
                    .rem_euclid(360.0),
            ))
        };
        records.push(AisRecord {
            ship_id: meta.ship_id.clone(),
            ship_type: meta.ship_type,
            speed,
            pos,
            course: T::lit(course),
            heading,
            timestamp: meta.start + elapsed.round() as i64,
            departure_port: from.name.clone(),
            draught: Some(T::lit(meta.draught)),
            label_destination: meta.labeled.then(|| to.name.clone()),
            label_arrival: meta.labeled.then_some(arrival),
        });
    }
    TripTruth {
        ship_id: meta.ship_id.clone(),
        trip_id: meta.trip_id,
        records,
        true_destination: to.name.clone(),
        true_arrival: arrival,
    }
}

/// Whole dataset, fully determined by `cfg` (including its seed).
pub fn gen_dataset<T: Scalar>(cfg: &SynthConfig<T>) -> Result<SynthDataset<T>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ports = gen_ports(cfg, &mut rng)?;
    let lanes = gen_lanes(&ports, cfg, &mut rng);
    let list: Vec<&Port<T>> = ports.iter().collect();

    let total = cfg.n_train_trips + cfg.n_eval_trips;
    let mut train = Vec::with_capacity(cfg.n_train_trips);
    let mut eval = Vec::with_capacity(cfg.n_eval_trips);
    let jitter = cfg.speed_jitter.as_f64();
    for trip_id in 0..total {
        let lane = &lanes[rng.random_range(0..lanes.len())];
        let speed = round_to(
            (lane.service_speed + (rng.random::<f64>() * 2.0 - 1.0) * jitter).max(1.0),
            0.1,
        );
        let ship_type = if rng.random::<f64>() < 0.8 {
            lane.ship_type
        } else {
            SHIP_TYPES[rng.random_range(0..SHIP_TYPES.len())]
        };
        let labeled = trip_id < cfg.n_train_trips;
        let meta = TripMeta {
            ship_id: if labeled {
                format!("TR{trip_id:05}")
            } else {
                format!("EV{:05}", trip_id - cfg.n_train_trips)
            },
            trip_id: trip_id as u64,
            ship_type,
            draught: round_to(4.0 + rng.random::<f64>() * 8.0, 0.1),
            start: cfg.start_time + rng.random_range(0..=cfg.time_span),
            labeled,
        };
        let trip = gen_trip(
            list[lane.from],
            list[lane.to],
            T::lit(speed),
            &meta,
            cfg,
            &mut rng,
        );
        if labeled {
            train.push(trip);
        } else {
            eval.push(trip);
        }
    }
    Ok(SynthDataset {
        ports,
        lanes,
        train,
        eval,
    })
}

fn stream_csv<T: Scalar>(trips: &[TripTruth<T>], schema: Schema) -> String {
    let mut rows: Vec<&AisRecord<T>> = trips.iter().flat_map(|t| t.records.iter()).collect();
    rows.sort_by(|a, b| (a.timestamp, &a.ship_id).cmp(&(b.timestamp, &b.ship_id)));
    let mut out = schema.header_line();
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

impl<T: Scalar> SynthDataset<T> {
    /// Labeled training stream, ordered by event time.
    pub fn train_csv(&self) -> String {
        stream_csv(&self.train, Schema::Train)
    }

    /// Unlabeled evaluation stream, ordered by event time.
    pub fn eval_csv(&self) -> String {
        stream_csv(&self.eval, Schema::Eval)
    }

    pub fn truth_csv(&self) -> String {
        let mut out = format!("{TRUTH_HEADER}\n");
        for t in &self.eval {
            out.push_str(&TruthRow::from(t).to_csv_line());
            out.push('\n');
        }
        out
    }

    pub fn ports_csv(&self) -> String {
        self.ports.to_csv()
    }

    pub fn train_records(&self) -> Vec<AisRecord<T>> {
        let mut rows: Vec<AisRecord<T>> =
            self.train.iter().flat_map(|t| t.records.clone()).collect();
        rows.sort_by(|a, b| (a.timestamp, &a.ship_id).cmp(&(b.timestamp, &b.ship_id)));
        rows
    }

    pub fn eval_records(&self) -> Vec<AisRecord<T>> {
        let mut rows: Vec<AisRecord<T>> =
            self.eval.iter().flat_map(|t| t.records.clone()).collect();
        rows.sort_by(|a, b| (a.timestamp, &a.ship_id).cmp(&(b.timestamp, &b.ship_id)));
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::EARTH_RADIUS_NM;

    fn quiet() -> SynthConfig<f64> {
        SynthConfig {
            pos_noise_sigma: 0.0,
            course_noise_sigma: 0.0,
            ..SynthConfig::default()
        }
    }

    fn port(name: &str, lat: f64, lon: f64) -> Port<f64> {
        Port {
            name: name.into(),
            pos: Coord { lat, lon },
            radius: 2.0,
        }
    }

    fn meta() -> TripMeta {
        TripMeta {
            ship_id: "S".into(),
            trip_id: 7,
            ship_type: 70,
            draught: 8.0,
            start: 1000,
            labeled: true,
        }
    }

    #[test]
    fn sixty_miles_at_twelve_knots() {
        let a = port("A", 35.0, 10.0);
        let b = port("B", 35.0 + (60.0 / EARTH_RADIUS_NM).to_degrees(), 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trip = gen_trip(&a, &b, 12.0, &meta(), &quiet(), &mut rng);
        assert_eq!(trip.records.len(), 31);
        assert_eq!(trip.true_arrival, 1000 + 18_000);
        assert_eq!(trip.records.last().unwrap().timestamp, trip.true_arrival);
        let lats: Vec<f64> = trip.records.iter().map(|r| r.pos.lat).collect();
        assert!(lats.windows(2).all(|w| w[1] > w[0]), "monotone positions");
        let last = trip.records.last().unwrap();
        assert!(haversine_nm(last.pos, b.pos) <= b.radius);
    }

    #[test]
    fn zero_noise_course_tracks_bearing() {
        let a = port("A", 36.0, 3.0);
        let b = port("B", 38.5, 8.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trip = gen_trip(&a, &b, 14.0, &meta(), &quiet(), &mut rng);
        let n = trip.records.len();
        for r in &trip.records[..n - 1] {
            let want = bearing_deg(r.pos, b.pos).unwrap();
            assert!(
                crate::geo::angular_diff(r.course, want) <= 0.5,
                "{} vs {want}",
                r.course
            );
        }
        let d: Vec<f64> = trip
            .records
            .iter()
            .map(|r| haversine_nm(r.pos, b.pos))
            .collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]), "strictly approaching");
    }

    #[test]
    fn same_seed_same_trip() {
        let a = port("A", 36.0, 3.0);
        let b = port("B", 37.0, 5.0);
        let cfg = SynthConfig::<f64>::default();
        let t1 = gen_trip(
            &a,
            &b,
            12.0,
            &meta(),
            &cfg,
            &mut ChaCha8Rng::seed_from_u64(9),
        );
        let t2 = gen_trip(
            &a,
            &b,
            12.0,
            &meta(),
            &cfg,
            &mut ChaCha8Rng::seed_from_u64(9),
        );
        assert_eq!(t1, t2);
    }

    #[test]
    fn port_placement() {
        let cfg = SynthConfig::<f64> {
            n_ports: 2,
            ..SynthConfig::default()
        };
        let p1 = gen_ports(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let p2 = gen_ports(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(p1, p2);
        let v: Vec<_> = p1.iter().collect();
        let sep =
            ((v[0].pos.lat - v[1].pos.lat).powi(2) + (v[0].pos.lon - v[1].pos.lon).powi(2)).sqrt();
        assert!(sep >= 0.5);

        let cramped = SynthConfig::<f64> {
            n_ports: 50,
            bbox: Bbox {
                lat_min: 35.0,
                lat_max: 36.0,
                lon_min: 0.0,
                lon_max: 1.0,
            },
            ..SynthConfig::default()
        };
        let err = gen_ports(&cramped, &mut ChaCha8Rng::seed_from_u64(5)).unwrap_err();
        assert!(matches!(err, Error::PlacementFailure { wanted: 50, .. }));
    }

    #[test]
    fn dataset_shape() {
        let cfg = SynthConfig::<f64> {
            n_train_trips: 10,
            n_eval_trips: 2,
            ..SynthConfig::default()
        };
        let ds = gen_dataset(&cfg).unwrap();
        assert_eq!(ds.train.len() + ds.eval.len(), 12);
        assert_eq!(ds.truth_csv().lines().count(), 1 + 2);
        let header = ds.eval_csv().lines().next().unwrap().to_string();
        assert_eq!(header, Schema::Eval.header_line());
        assert!(ds
            .eval_csv()
            .lines()
            .skip(1)
            .all(|l| l.split(',').count() == 10));
        assert!(ds
            .train_csv()
            .lines()
            .skip(1)
            .all(|l| l.split(',').count() == 12));
    }

    #[test]
    fn config_text() {
        let c = SynthConfig::<f64>::from_config_text("seed = 7\nn_ports = 5\nbbox = 35,40,0,10\n")
            .unwrap();
        assert_eq!((c.seed, c.n_ports), (7, 5));
        assert_eq!(c.bbox.lat_max, 40.0);
        assert!(SynthConfig::<f64>::from_config_text("colour = red").is_err());
        assert!(SynthConfig::<f64>::from_config_text("n_ports = 1").is_err());
    }
}
