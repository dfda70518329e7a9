//! Arrival-time model on the fine grid.
//!
//! Each trained cell keeps, per destination port, running statistics of the
//! remaining sailing time at cell level and under the course, speed-interval
//! and departure keys. Every statistic also remembers a reference record: the
//! record whose remaining time sits closest to the running mean.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::{EngineConfig, EtaDimension};
use crate::dest::TrainOutcome;
use crate::error::{Error, Result};
use crate::geo::{angular_diff, bearing_deg, haversine_nm, nearest_trained_cell, CellId, GridSpec};
use crate::record::{course_key_of, speed_bucket_of, AisRecord};
use crate::scalar::Scalar;

/// Below this speed (knots) the travel-time adjustment is skipped.
pub const MIN_ADJUST_SPEED_KN: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeStats<T> {
    pub count: u64,
    /// Running mean of seconds left until arrival.
    pub mean_remaining: T,
    pub ref_record: AisRecord<T>,
    pub ref_remaining: T,
}

impl<T: Scalar> TimeStats<T> {
    pub fn new(rec: &AisRecord<T>, remaining: T) -> Self {
        TimeStats {
            count: 1,
            mean_remaining: remaining,
            ref_record: rec.clone(),
            ref_remaining: remaining,
        }
    }

    /// Folds one observation into the mean, then swaps the reference record
    /// when the new one is strictly closer to the updated mean.
    pub fn update(&mut self, rec: &AisRecord<T>, remaining: T) {
        self.count += 1;
        let n = T::lit(self.count as f64);
        self.mean_remaining = self.mean_remaining + (remaining - self.mean_remaining) / n;
        let mean = self.mean_remaining;
        if (remaining - mean).abs() < (self.ref_remaining - mean).abs() {
            self.ref_record = rec.clone();
            self.ref_remaining = remaining;
        }
    }
}

fn observe<T: Scalar>(slot: &mut Option<TimeStats<T>>, rec: &AisRecord<T>, remaining: T) {
    match slot {
        Some(s) => s.update(rec, remaining),
        None => *slot = Some(TimeStats::new(rec, remaining)),
    }
}

fn observe_in<K: Ord, T: Scalar>(
    map: &mut BTreeMap<K, TimeStats<T>>,
    key: K,
    rec: &AisRecord<T>,
    remaining: T,
) {
    map.entry(key)
        .and_modify(|s| s.update(rec, remaining))
        .or_insert_with(|| TimeStats::new(rec, remaining));
}

/// Statistics for one destination inside one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DestTimeTables<T> {
    pub overall: TimeStats<T>,
    pub by_course: BTreeMap<u16, TimeStats<T>>,
    pub by_speed: BTreeMap<i64, TimeStats<T>>,
    pub by_departure: BTreeMap<String, TimeStats<T>>,
}

impl<T: Scalar> DestTimeTables<T> {
    /// Statistic selected by `dim`, or the destination-level one on a key miss.
    pub fn select(&self, dim: EtaDimension, rec: &AisRecord<T>, speed_bucket: T) -> &TimeStats<T> {
        let hit = match dim {
            EtaDimension::Course => self.by_course.get(&course_key_of(rec.course)),
            EtaDimension::Speed => self.by_speed.get(&speed_bucket_of(rec.speed, speed_bucket)),
            EtaDimension::Departure => self.by_departure.get(&rec.departure_port),
        };
        hit.unwrap_or(&self.overall)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EtaCellModel<T> {
    pub dests: BTreeMap<String, DestTimeTables<T>>,
    pub trained_count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaGridModel<T> {
    pub grid: GridSpec<T>,
    pub cells: BTreeMap<CellId, EtaCellModel<T>>,
    pub global: BTreeMap<String, TimeStats<T>>,
    pub trained: u64,
    pub skipped: u64,
}

/// Where the statistic behind a prediction came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EtaSource {
    Dimension,
    Destination,
    Global,
}

impl<T: Scalar> EtaGridModel<T> {
    pub fn new(grid: GridSpec<T>) -> Self {
        EtaGridModel {
            grid,
            cells: BTreeMap::new(),
            global: BTreeMap::new(),
            trained: 0,
            skipped: 0,
        }
    }

    pub fn allocated_cells(&self) -> usize {
        self.cells.len()
    }

    /// Learns the remaining time `label_arrival - timestamp` of one record.
    pub fn train(&mut self, rec: &AisRecord<T>, speed_bucket: T) -> Result<TrainOutcome> {
        let (Some(dest), Some(arrival)) = (rec.label_destination.as_deref(), rec.label_arrival)
        else {
            return Err(Error::MissingLabel { line: 0 });
        };
        if arrival < rec.timestamp {
            return Err(Error::NegativeRemaining {
                timestamp: rec.timestamp,
                arrival,
            });
        }
        let cell = match self.grid.cell_of(rec.pos) {
            Ok(c) => c,
            Err(Error::OutOfBounds { .. }) => {
                self.skipped += 1;
                return Ok(TrainOutcome::Skipped);
            }
            Err(e) => return Err(e),
        };
        let remaining = T::lit((arrival - rec.timestamp) as f64);

        let model = self.cells.entry(cell).or_default();
        match model.dests.get_mut(dest) {
            Some(t) => t.overall.update(rec, remaining),
            None => {
                model.dests.insert(
                    dest.to_string(),
                    DestTimeTables {
                        overall: TimeStats::new(rec, remaining),
                        by_course: BTreeMap::new(),
                        by_speed: BTreeMap::new(),
                        by_departure: BTreeMap::new(),
                    },
                );
            }
        }
        let tables = model.dests.get_mut(dest).expect("inserted above");
        observe_in(
            &mut tables.by_course,
            course_key_of(rec.course),
            rec,
            remaining,
        );
        observe_in(
            &mut tables.by_speed,
            speed_bucket_of(rec.speed, speed_bucket),
            rec,
            remaining,
        );
        observe_in(
            &mut tables.by_departure,
            rec.departure_port.clone(),
            rec,
            remaining,
        );
        model.trained_count += 1;

        let mut slot = self.global.remove(dest);
        observe(&mut slot, rec, remaining);
        self.global
            .insert(dest.to_string(), slot.expect("just observed"));
        self.trained += 1;
        Ok(TrainOutcome::Learned)
    }

    /// Cell used for `dest`: the record's own cell when it holds statistics for
    /// `dest`, else the best course-aligned one on the nearest ring.
    pub fn find_cell(&self, rec: &AisRecord<T>, dest: &str, max_radius: u32) -> Option<CellId> {
        let center = self.grid.cell_of(rec.pos).ok()?;
        nearest_trained_cell(&self.grid, center, rec.course, max_radius, |c| {
            self.cells
                .get(&c)
                .and_then(|m| m.dests.get(dest))
                .map(|t| t.overall.count)
        })
    }

    /// Statistic used for a prediction and its provenance.
    pub fn lookup(
        &self,
        rec: &AisRecord<T>,
        dest: &str,
        cfg: &EngineConfig<T>,
    ) -> Result<(&TimeStats<T>, EtaSource)> {
        if let Some(cell) = self.find_cell(rec, dest, cfg.max_ring_radius) {
            let tables = &self.cells[&cell].dests[dest];
            let stats = tables.select(cfg.eta_dimension, rec, cfg.speed_bucket);
            let source = if std::ptr::eq(stats, &tables.overall) {
                EtaSource::Destination
            } else {
                EtaSource::Dimension
            };
            return Ok((stats, source));
        }
        self.global
            .get(dest)
            .map(|s| (s, EtaSource::Global))
            .ok_or_else(|| Error::NoEtaModel(dest.to_string()))
    }

    /// Predicted arrival, epoch seconds.
    ///
    /// The travel-time adjustment is only applied to cell-level statistics;
    /// the global reference record lies on an arbitrary route.
    pub fn predict(&self, rec: &AisRecord<T>, dest: &str, cfg: &EngineConfig<T>) -> Result<i64> {
        let (stats, source) = self.lookup(rec, dest, cfg)?;
        let mut remaining = stats.mean_remaining;
        if cfg.time_adjustment
            && source != EtaSource::Global
            && rec.speed > T::lit(MIN_ADJUST_SPEED_KN)
        {
            remaining = adjust_eta(remaining, rec, &stats.ref_record)?;
        }
        Ok(rec.timestamp + seconds(remaining))
    }

    /// Count-weighted mean remaining time over all destinations.
    pub fn global_mean_remaining(&self) -> Option<T> {
        let n: u64 = self.global.values().map(|s| s.count).sum();
        if n == 0 {
            return None;
        }
        let sum = self.global.values().fold(T::zero(), |acc, s| {
            acc + s.mean_remaining * T::lit(s.count as f64)
        });
        Some(sum / T::lit(n as f64))
    }
}

pub(crate) fn seconds<T: Scalar>(t: T) -> i64 {
    t.max(T::zero()).round().to_i64().unwrap_or(0)
}

/// Corrects a cell-average remaining time by the sailing time between the
/// current record and the reference record.
///
/// When the reference lies ahead along the current course (within 90°), the
/// ship still has to reach it and the time is added; otherwise the ship is
/// past it and the time is subtracted. Never negative.
pub fn adjust_eta<T: Scalar>(base: T, rec: &AisRecord<T>, reference: &AisRecord<T>) -> Result<T> {
    if !(rec.speed > T::zero()) {
        return Err(Error::ZeroSpeed);
    }
    let d = haversine_nm(rec.pos, reference.pos);
    if d == T::zero() {
        return Ok(base.max(T::zero()));
    }
    let t = d / rec.speed * T::lit(3600.0);
    let ahead = bearing_deg(rec.pos, reference.pos)
        .map(|b| angular_diff(b, rec.course) < T::lit(90.0))
        .unwrap_or(false);
    let adjusted = if ahead { base + t } else { base - t };
    Ok(adjusted.max(T::zero()))
}
