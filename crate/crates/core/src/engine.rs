//! Engine lifecycle: supervised training, streaming prediction with the
//! robustness filter, and optional self-labelling of finished trips.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::dest::{DestGridModel, TrainOutcome};
use crate::error::{Error, Result};
use crate::eta::{seconds, EtaGridModel};
use crate::ports::PortRegistry;
use crate::record::AisRecord;
use crate::robustness::ShipHistory;
use crate::scalar::Scalar;
use crate::semi::{TripBuffer, TripLabel};

const SNAPSHOT_MAGIC: &[u8; 8] = b"CGRIDAIS";
pub const SNAPSHOT_VERSION: u32 = 1;

/// One output row of the prediction stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prediction {
    pub ship_id: String,
    pub timestamp: i64,
    pub port: String,
    pub arrival: i64,
}

impl Prediction {
    pub const HEADER: &'static str = "SHIP_ID,TIMESTAMP,PREDICTED_PORT,PREDICTED_ARRIVAL";

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{}",
            self.ship_id, self.timestamp, self.port, self.arrival
        )
    }
}

/// A trip labeled and learned during prediction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommittedTrip {
    pub ship_id: String,
    pub destination: String,
    pub arrival: i64,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub trained: u64,
    pub skipped: u64,
    pub rejected: u64,
    pub predicted: u64,
    pub discarded_trips: u64,
}

/// Trained state persisted between `train` and `predict` runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot<T> {
    pub config: EngineConfig<T>,
    pub ports: PortRegistry<T>,
    pub dest: DestGridModel<T>,
    pub eta: EtaGridModel<T>,
}

impl<T: Scalar> ModelSnapshot<T> {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        bincode::serialize_into(&mut out, self).map_err(|e| Error::Snapshot(e.to_string()))?;
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = SNAPSHOT_MAGIC.len() + 4;
        if bytes.len() < header || &bytes[..SNAPSHOT_MAGIC.len()] != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("not a model snapshot".into()));
        }
        let version = u32::from_le_bytes(bytes[SNAPSHOT_MAGIC.len()..header].try_into().unwrap());
        if version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "unsupported snapshot version {version}"
            )));
        }
        let mut snap: ModelSnapshot<T> =
            bincode::deserialize(&bytes[header..]).map_err(|e| Error::Snapshot(e.to_string()))?;
        snap.ports.reindex();
        Ok(snap)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes()?)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

pub struct Engine<T> {
    cfg: EngineConfig<T>,
    ports: PortRegistry<T>,
    dest: DestGridModel<T>,
    eta: EtaGridModel<T>,
    histories: HashMap<String, ShipHistory>,
    buffers: HashMap<String, TripBuffer<T>>,
    in_port: BTreeSet<String>,
    watermark: i64,
    committed: Vec<CommittedTrip>,
    stats: RunStats,
}

impl<T: Scalar> Engine<T> {
    pub fn new(cfg: EngineConfig<T>, ports: PortRegistry<T>) -> Result<Self> {
        cfg.validate()?;
        let dest = DestGridModel::new(cfg.dest_grid()?);
        let eta = EtaGridModel::new(cfg.eta_grid()?);
        Ok(Self::assemble(cfg, ports, dest, eta))
    }

    /// Restores a trained engine. Grids come from the snapshot; every other
    /// setting comes from `cfg` when given.
    pub fn from_snapshot(snap: ModelSnapshot<T>, cfg: Option<EngineConfig<T>>) -> Result<Self> {
        let cfg = cfg.unwrap_or(snap.config);
        cfg.validate()?;
        Ok(Self::assemble(cfg, snap.ports, snap.dest, snap.eta))
    }

    fn assemble(
        cfg: EngineConfig<T>,
        ports: PortRegistry<T>,
        dest: DestGridModel<T>,
        eta: EtaGridModel<T>,
    ) -> Self {
        Engine {
            cfg,
            ports,
            dest,
            eta,
            histories: HashMap::new(),
            buffers: HashMap::new(),
            in_port: BTreeSet::new(),
            watermark: i64::MIN,
            committed: Vec::new(),
            stats: RunStats::default(),
        }
    }

    pub fn snapshot(&self) -> ModelSnapshot<T> {
        ModelSnapshot {
            config: self.cfg.clone(),
            ports: self.ports.clone(),
            dest: self.dest.clone(),
            eta: self.eta.clone(),
        }
    }

    /// Serialized models only, for byte-level state comparisons.
    pub fn model_bytes(&self) -> Result<Vec<u8>> {
        let mut out = bincode::serialize(&self.dest).map_err(|e| Error::Snapshot(e.to_string()))?;
        out.extend(bincode::serialize(&self.eta).map_err(|e| Error::Snapshot(e.to_string()))?);
        Ok(out)
    }

    pub fn config(&self) -> &EngineConfig<T> {
        &self.cfg
    }

    pub fn ports(&self) -> &PortRegistry<T> {
        &self.ports
    }

    pub fn dest_model(&self) -> &DestGridModel<T> {
        &self.dest
    }

    pub fn eta_model(&self) -> &EtaGridModel<T> {
        &self.eta
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn committed_trips(&self) -> &[CommittedTrip] {
        &self.committed
    }

    /// Learns one labeled record in both models.
    ///
    /// Records whose arrival precedes their timestamp are rejected from both
    /// models so the two record counts stay equal.
    pub fn train(&mut self, rec: &AisRecord<T>) -> Result<TrainOutcome> {
        let (Some(_), Some(arrival)) = (&rec.label_destination, rec.label_arrival) else {
            return Err(Error::MissingLabel { line: 0 });
        };
        if arrival < rec.timestamp {
            self.stats.rejected += 1;
            return Err(Error::NegativeRemaining {
                timestamp: rec.timestamp,
                arrival,
            });
        }
        let outcome = self.dest.train(rec, self.cfg.speed_bucket)?;
        if outcome == TrainOutcome::Learned {
            self.eta.train(rec, self.cfg.speed_bucket)?;
            self.stats.trained += 1;
        } else {
            self.stats.skipped += 1;
        }
        Ok(outcome)
    }

    /// Trains over a batch, counting skipped and rejected records instead of
    /// stopping on them.
    pub fn train_all<'a, I>(&mut self, records: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a AisRecord<T>>,
    {
        for rec in records {
            match self.train(rec) {
                Ok(_) | Err(Error::NegativeRemaining { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    /// Predicts destination and arrival for one unlabeled record.
    pub fn predict(&mut self, rec: &AisRecord<T>) -> Result<Prediction> {
        if self.cfg.semi_supervised {
            self.watermark = self.watermark.max(rec.timestamp);
            self.commit_quiet_trips(self.watermark)?;
        }

        let raw = self.dest.predict_raw(rec, &self.ports, &self.cfg)?;
        let window = self.cfg.robustness_window;
        let history = self
            .histories
            .entry(rec.ship_id.clone())
            .or_insert_with(|| ShipHistory::new(rec.ship_id.clone(), window));
        let port = history.filter_prediction(&raw, self.cfg.robustness_k);

        let arrival = match self.eta.predict(rec, &port, &self.cfg) {
            Ok(t) => t,
            Err(Error::NoEtaModel(_)) => {
                rec.timestamp + self.eta.global_mean_remaining().map_or(0, seconds)
            }
            Err(e) => return Err(e),
        };

        if self.cfg.semi_supervised {
            let buf = self
                .buffers
                .entry(rec.ship_id.clone())
                .or_insert_with(|| TripBuffer::new(rec.ship_id.clone()));
            buf.observe(rec, &port, &self.ports);
            if buf.in_port.is_some() {
                self.in_port.insert(rec.ship_id.clone());
            } else {
                self.in_port.remove(&rec.ship_id);
            }
        }
        self.stats.predicted += 1;
        Ok(Prediction {
            ship_id: rec.ship_id.clone(),
            timestamp: rec.timestamp,
            port,
            arrival,
        })
    }

    /// Ends the stream: every ship still inside a port radius closes its trip.
    pub fn finish(&mut self) -> Result<()> {
        if self.cfg.semi_supervised {
            self.commit_quiet_trips(i64::MAX)?;
        }
        Ok(())
    }

    fn commit_quiet_trips(&mut self, now: i64) -> Result<()> {
        let mut due: Vec<(String, Option<TripLabel>)> = Vec::new();
        for ship in &self.in_port {
            let buf = &self.buffers[ship];
            match buf.check_trip_end(now, self.cfg.quiet_period) {
                Ok(Some(label)) => due.push((ship.clone(), Some(label))),
                Ok(None) => {}
                Err(Error::MissingPrediction) => due.push((ship.clone(), None)),
                Err(e) => return Err(e),
            }
        }
        for (ship, label) in due {
            self.in_port.remove(&ship);
            match label {
                Some(label) => self.commit_trip(&ship, &label)?,
                None => {
                    self.buffers.remove(&ship);
                    self.stats.discarded_trips += 1;
                }
            }
        }
        Ok(())
    }

    /// Labels a ship's buffered trip, learns it and resets its history.
    pub fn commit_trip(&mut self, ship_id: &str, label: &TripLabel) -> Result<()> {
        let Some(buf) = self.buffers.get_mut(ship_id) else {
            return Ok(());
        };
        let records = buf.take_labeled(label);
        if records.is_empty() {
            return Ok(());
        }
        let (mut accepted, mut rejected) = (0, 0);
        for rec in &records {
            match self.train(rec) {
                Ok(TrainOutcome::Learned) => accepted += 1,
                Ok(TrainOutcome::Skipped) | Err(Error::NegativeRemaining { .. }) => rejected += 1,
                Err(e) => return Err(e),
            }
        }
        if let Some(h) = self.histories.get_mut(ship_id) {
            h.reset();
        }
        self.committed.push(CommittedTrip {
            ship_id: ship_id.to_string(),
            destination: label.destination.clone(),
            arrival: label.arrival,
            accepted,
            rejected,
        });
        Ok(())
    }

    /// Allocated cells per grid: (destination, arrival time).
    pub fn allocated_cells(&self) -> (usize, usize) {
        (self.dest.allocated_cells(), self.eta.allocated_cells())
    }

    /// Trained records per destination across both models, for summaries.
    pub fn destination_counts(&self) -> BTreeMap<String, u64> {
        self.eta
            .global
            .iter()
            .map(|(k, s)| (k.clone(), s.count))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Coord;
    use crate::ports::Port;

    fn ports() -> PortRegistry<f64> {
        PortRegistry::from_ports([
            Port {
                name: "A".into(),
                pos: Coord {
                    lat: 35.0,
                    lon: 0.0,
                },
                radius: 2.0,
            },
            Port {
                name: "B".into(),
                pos: Coord {
                    lat: 36.0,
                    lon: 0.0,
                },
                radius: 2.0,
            },
        ])
        .unwrap()
    }

    fn rec(ship: &str, lat: f64, ts: i64, label: Option<(&str, i64)>) -> AisRecord<f64> {
        AisRecord {
            ship_id: ship.into(),
            ship_type: 70,
            speed: 12.0,
            pos: Coord { lat, lon: 0.0 },
            course: 0.0,
            heading: None,
            timestamp: ts,
            departure_port: "A".into(),
            draught: None,
            label_destination: label.map(|l| l.0.to_string()),
            label_arrival: label.map(|l| l.1),
        }
    }

    fn trained_engine(cfg: EngineConfig<f64>) -> Engine<f64> {
        let mut e = Engine::new(cfg, ports()).unwrap();
        for i in 0..30 {
            let lat = 35.0 + i as f64 / 30.0;
            e.train(&rec("T", lat, i * 600, Some(("B", 18000))))
                .unwrap();
        }
        e
    }

    #[test]
    fn train_counts_and_rejects() {
        let mut e = trained_engine(EngineConfig::default());
        assert_eq!(e.stats().trained, 30);
        assert!(e.train(&rec("T", 35.5, 100, Some(("B", 50)))).is_err());
        assert_eq!(e.stats().rejected, 1);
        assert_eq!(
            e.train(&rec("T", 20.0, 100, Some(("B", 500)))).unwrap(),
            TrainOutcome::Skipped
        );
        assert_eq!(e.dest_model().trained, e.eta_model().trained);
    }

    #[test]
    fn predicts_destination_and_arrival() {
        let mut e = trained_engine(EngineConfig::default());
        let p = e.predict(&rec("Q", 35.5, 9000, None)).unwrap();
        assert_eq!(p.port, "B");
        assert!((p.arrival - 18000).abs() < 120, "{p:?}");
    }

    #[test]
    fn empty_model_cannot_predict() {
        let mut e = Engine::new(EngineConfig::<f64>::default(), ports()).unwrap();
        assert!(matches!(
            e.predict(&rec("Q", 35.5, 0, None)),
            Err(Error::NoModel)
        ));
    }

    #[test]
    fn snapshot_roundtrip() {
        let e = trained_engine(EngineConfig::default());
        let bytes = e.snapshot().to_bytes().unwrap();
        let back = ModelSnapshot::<f64>::from_bytes(&bytes).unwrap();
        assert_eq!(back, e.snapshot());
        assert_eq!(back.ports.get("B").unwrap().radius, 2.0);
        assert!(ModelSnapshot::<f64>::from_bytes(b"garbage").is_err());
        let mut wrong = bytes.clone();
        wrong[8] = 9;
        assert!(ModelSnapshot::<f64>::from_bytes(&wrong).is_err());
    }

    #[test]
    fn semi_supervised_commits_trip_at_port() {
        let mut cfg = EngineConfig::default();
        cfg.semi_supervised = true;
        let mut e = trained_engine(cfg);
        let before = e.dest_model().trained;
        for i in 0..31 {
            let lat = 35.0 + i as f64 / 30.0;
            e.predict(&rec("Q", lat, 100_000 + i * 600, None)).unwrap();
        }
        assert!(e.committed_trips().is_empty());
        // another ship's report advances event time past the quiet period
        e.predict(&rec("R", 35.3, 100_000 + 30 * 600 + 1800, None))
            .unwrap();
        let trips = e.committed_trips();
        assert_eq!(trips.len(), 1);
        assert_eq!(trips[0].destination, "B");
        assert_eq!(trips[0].accepted, 31);
        assert_eq!(e.dest_model().trained, before + 31);
        assert_eq!(e.eta_model().trained, before + 31);
    }

    #[test]
    fn commit_of_unknown_ship_is_noop() {
        let mut e = trained_engine(EngineConfig::default());
        let label = TripLabel {
            destination: "B".into(),
            arrival: 0,
        };
        e.commit_trip("nobody", &label).unwrap();
        assert!(e.committed_trips().is_empty());
    }
}
