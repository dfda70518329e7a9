//! Trip buffering for self-labelling during prediction.
//!
//! Unlabeled records are kept per ship. Once a ship has stayed silent for a
//! quiet period (in event time) while inside a port radius, its trip is
//! labeled with the last reported destination and the time it first entered
//! that radius.

use crate::error::{Error, Result};
use crate::geo::haversine_nm;
use crate::ports::PortRegistry;
use crate::record::AisRecord;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripLabel {
    pub destination: String,
    pub arrival: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripBuffer<T> {
    pub ship_id: String,
    pub records: Vec<AisRecord<T>>,
    pub last_reported_dest: Option<String>,
    pub in_port: Option<String>,
    pub first_in_radius_ts: Option<i64>,
}

impl<T: Scalar> TripBuffer<T> {
    pub fn new(ship_id: impl Into<String>) -> Self {
        TripBuffer {
            ship_id: ship_id.into(),
            records: Vec::new(),
            last_reported_dest: None,
            in_port: None,
            first_in_radius_ts: None,
        }
    }

    pub fn last_timestamp(&self) -> Option<i64> {
        self.records.last().map(|r| r.timestamp)
    }

    /// Buffers `rec` and tracks port-radius entry and exit.
    pub fn observe(&mut self, rec: &AisRecord<T>, reported_dest: &str, ports: &PortRegistry<T>) {
        let rec = rec.unlabeled();
        // keep the buffer ordered when reports arrive late
        let at = self
            .records
            .partition_point(|r| r.timestamp <= rec.timestamp);
        self.records.insert(at, rec);
        let rec = &self.records[at];
        self.last_reported_dest = Some(reported_dest.to_string());

        if let Some(name) = &self.in_port {
            let still_inside = ports
                .get(name)
                .is_some_and(|p| haversine_nm(rec.pos, p.pos) <= p.radius);
            if !still_inside {
                self.in_port = None;
                self.first_in_radius_ts = None;
            }
        }
        if self.in_port.is_none() {
            if let Some(port) = ports.port_at(rec.pos) {
                self.in_port = Some(port.name.clone());
                self.first_in_radius_ts = Some(rec.timestamp);
            }
        }
    }

    /// Label for a finished trip, if the ship has been quiet inside a port
    /// radius for at least `quiet_period` seconds as of `now`. Pass
    /// `i64::MAX` at end of stream.
    pub fn check_trip_end(&self, now: i64, quiet_period: i64) -> Result<Option<TripLabel>> {
        let (Some(_), Some(arrival)) = (&self.in_port, self.first_in_radius_ts) else {
            return Ok(None);
        };
        let Some(last) = self.last_timestamp() else {
            return Ok(None);
        };
        if now.saturating_sub(last) < quiet_period {
            return Ok(None);
        }
        match &self.last_reported_dest {
            Some(dest) => Ok(Some(TripLabel {
                destination: dest.clone(),
                arrival,
            })),
            None => Err(Error::MissingPrediction),
        }
    }

    /// Drains the buffer into labeled records and resets the trip state.
    pub fn take_labeled(&mut self, label: &TripLabel) -> Vec<AisRecord<T>> {
        let records = std::mem::take(&mut self.records);
        self.last_reported_dest = None;
        self.in_port = None;
        self.first_in_radius_ts = None;
        records
            .into_iter()
            .map(|mut r| {
                r.label_destination = Some(label.destination.clone());
                r.label_arrival = Some(label.arrival);
                r
            })
            .collect()
    }
}
