//! Destination model: per-cell course tables fanning out into ship-type,
//! speed-interval and departure-port tables, each holding destination counters.
//!
//! ```text
//! cell ──► course key ──┬─► ship type     ──► {dest: count}
//!                       ├─► speed bucket  ──► {dest: count}
//!                       └─► departure     ──► {dest: count}
//! ```
//!
//! Every learned record bumps exactly one counter in each of the three
//! dimension tables under its course key.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::{EngineConfig, TieBreak};
use crate::error::{Error, Result};
use crate::geo::{angular_diff, bearing_deg, haversine_nm, nearest_trained_cell, CellId, GridSpec};
use crate::ports::PortRegistry;
use crate::record::{course_key_of, speed_bucket_of, AisRecord};
use crate::scalar::Scalar;

/// Per-destination arrival counters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DestCounters(BTreeMap<String, u64>);

impl DestCounters {
    pub fn new() -> Self {
        DestCounters::default()
    }

    pub fn increment(&mut self, dest: &str) {
        *self.0.entry(dest.to_string()).or_insert(0) += 1;
    }

    pub fn get(&self, dest: &str) -> u64 {
        self.0.get(dest).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<(S, u64)> for DestCounters {
    fn from_iter<I: IntoIterator<Item = (S, u64)>>(iter: I) -> Self {
        DestCounters(
            iter.into_iter()
                .filter(|(_, c)| *c > 0)
                .map(|(k, c)| (k.into(), c))
                .collect(),
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimTables {
    pub by_type: BTreeMap<u32, DestCounters>,
    pub by_speed: BTreeMap<i64, DestCounters>,
    pub by_departure: BTreeMap<String, DestCounters>,
}

impl DimTables {
    fn all_counters(&self) -> impl Iterator<Item = &DestCounters> {
        self.by_type
            .values()
            .chain(self.by_speed.values())
            .chain(self.by_departure.values())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DestCellModel {
    pub course_table: BTreeMap<u16, DimTables>,
    pub trained_count: u64,
}

impl DestCellModel {
    /// Counter sets selected by the record's dimensions under every course key
    /// within `tolerance` of its course. Closest course keys come first; under
    /// one key the order is type, speed, departure.
    pub fn candidate_sets<T: Scalar>(
        &self,
        rec: &AisRecord<T>,
        tolerance: T,
        speed_bucket: T,
    ) -> Vec<&DestCounters> {
        let mut keys: Vec<(T, u16)> = self
            .course_table
            .keys()
            .map(|&k| (angular_diff(T::lit(k as f64), rec.course), k))
            .filter(|(d, _)| *d <= tolerance)
            .collect();
        keys.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });

        let bucket = speed_bucket_of(rec.speed, speed_bucket);
        let mut out = Vec::new();
        for (_, key) in keys {
            let dims = &self.course_table[&key];
            out.extend(dims.by_type.get(&rec.ship_type));
            out.extend(dims.by_speed.get(&bucket));
            out.extend(dims.by_departure.get(&rec.departure_port));
        }
        out
    }

    /// Every counter set stored in the cell, regardless of dimensions.
    pub fn all_counters(&self) -> Vec<&DestCounters> {
        self.course_table
            .values()
            .flat_map(DimTables::all_counters)
            .collect()
    }
}

/// Grid-wide arrival frequencies used by tie-breaks and fallbacks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalFreqs {
    pub from_departure: BTreeMap<String, DestCounters>,
    pub by_type: BTreeMap<u32, DestCounters>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainOutcome {
    Learned,
    /// Position outside the grid; the model is unchanged.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DestGridModel<T> {
    pub grid: GridSpec<T>,
    pub cells: BTreeMap<CellId, DestCellModel>,
    pub globals: GlobalFreqs,
    pub trained: u64,
    pub skipped: u64,
}

impl<T: Scalar> DestGridModel<T> {
    pub fn new(grid: GridSpec<T>) -> Self {
        DestGridModel {
            grid,
            cells: BTreeMap::new(),
            globals: GlobalFreqs::default(),
            trained: 0,
            skipped: 0,
        }
    }

    pub fn allocated_cells(&self) -> usize {
        self.cells.len()
    }

    /// Learns one labeled record.
    pub fn train(&mut self, rec: &AisRecord<T>, speed_bucket: T) -> Result<TrainOutcome> {
        let dest = rec
            .label_destination
            .as_deref()
            .ok_or(Error::MissingLabel { line: 0 })?;
        let cell = match self.grid.cell_of(rec.pos) {
            Ok(c) => c,
            Err(Error::OutOfBounds { .. }) => {
                self.skipped += 1;
                return Ok(TrainOutcome::Skipped);
            }
            Err(e) => return Err(e),
        };
        let model = self.cells.entry(cell).or_default();
        let dims = model
            .course_table
            .entry(course_key_of(rec.course))
            .or_default();
        dims.by_type
            .entry(rec.ship_type)
            .or_default()
            .increment(dest);
        dims.by_speed
            .entry(speed_bucket_of(rec.speed, speed_bucket))
            .or_default()
            .increment(dest);
        dims.by_departure
            .entry(rec.departure_port.clone())
            .or_default()
            .increment(dest);
        model.trained_count += 1;

        self.globals
            .from_departure
            .entry(rec.departure_port.clone())
            .or_default()
            .increment(dest);
        self.globals
            .by_type
            .entry(rec.ship_type)
            .or_default()
            .increment(dest);
        self.trained += 1;
        Ok(TrainOutcome::Learned)
    }

    /// `cell` itself when trained, otherwise the best course-aligned trained
    /// cell on the nearest non-empty ring within `max_radius`.
    pub fn find_trained_cell(&self, cell: CellId, course: T, max_radius: u32) -> Option<CellId> {
        nearest_trained_cell(&self.grid, cell, course, max_radius, |c| {
            self.cells.get(&c).map(|m| m.trained_count)
        })
    }

    /// Raw destination for one unlabeled record, before robustness filtering.
    ///
    /// Falls back, in order, to: all counters of the resolved cell; the most
    /// frequent destination from the record's departure port; the port best
    /// aligned with the record's course.
    pub fn predict_raw(
        &self,
        rec: &AisRecord<T>,
        ports: &PortRegistry<T>,
        cfg: &EngineConfig<T>,
    ) -> Result<String> {
        if ports.is_empty() {
            return Err(Error::EmptyRegistry);
        }
        if self.trained == 0 {
            return Err(Error::NoModel);
        }
        let order = &cfg.tie_break_order;
        let resolved = self
            .grid
            .cell_of(rec.pos)
            .ok()
            .and_then(|c| self.find_trained_cell(c, rec.course, cfg.max_ring_radius))
            .map(|c| &self.cells[&c]);

        if let Some(cell) = resolved {
            let cands = cell.candidate_sets(rec, cfg.course_tolerance, cfg.speed_bucket);
            if let Some(p) = aggregate(&cands, rec, ports, order, &self.globals)? {
                return Ok(p);
            }
            if let Some(p) = aggregate(&cell.all_counters(), rec, ports, order, &self.globals)? {
                return Ok(p);
            }
        }
        if let Some(from_dep) = self.globals.from_departure.get(&rec.departure_port) {
            if let Some(p) = aggregate(&[from_dep], rec, ports, order, &self.globals)? {
                return Ok(p);
            }
        }
        ports
            .best_by_course(rec.pos, rec.course)
            .map(|p| p.name.clone())
            .ok_or(Error::EmptyRegistry)
    }
}

/// Sums counters per destination across `cands` and returns the maximum.
///
/// Equal sums are settled by `order`, then by name. `None` iff `cands` holds
/// no counts.
pub fn aggregate<T: Scalar>(
    cands: &[&DestCounters],
    rec: &AisRecord<T>,
    ports: &PortRegistry<T>,
    order: &[TieBreak],
    globals: &GlobalFreqs,
) -> Result<Option<String>> {
    let mut sums: BTreeMap<&str, u64> = BTreeMap::new();
    for set in cands {
        for (dest, n) in set.iter() {
            *sums.entry(dest).or_insert(0) += n;
        }
    }
    for dest in sums.keys() {
        if ports.get(dest).is_none() {
            return Err(Error::UnknownPort(dest.to_string()));
        }
    }
    let Some(&best) = sums.values().max() else {
        return Ok(None);
    };
    let mut tied: Vec<&str> = sums
        .iter()
        .filter(|(_, &n)| n == best)
        .map(|(d, _)| *d)
        .collect();

    for criterion in order {
        if tied.len() <= 1 {
            break;
        }
        // lower score wins
        let score = |dest: &str| -> f64 {
            let port = ports.get(dest).expect("checked above");
            match criterion {
                TieBreak::GeoCourse => bearing_deg(rec.pos, port.pos)
                    .map(|b| angular_diff(b, rec.course).as_f64())
                    .unwrap_or(0.0),
                TieBreak::GeoDistance => haversine_nm(rec.pos, port.pos).as_f64(),
                TieBreak::DepartureFreq => {
                    -(globals
                        .from_departure
                        .get(&rec.departure_port)
                        .map_or(0, |c| c.get(dest)) as f64)
                }
                TieBreak::TypeFreq => {
                    -(globals
                        .by_type
                        .get(&rec.ship_type)
                        .map_or(0, |c| c.get(dest)) as f64)
                }
            }
        };
        let scored: Vec<(f64, &str)> = tied.iter().map(|d| (score(d), *d)).collect();
        let min = scored.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        tied = scored
            .into_iter()
            .filter(|s| s.0 == min)
            .map(|s| s.1)
            .collect();
    }
    // BTreeMap order leaves the lexicographically smallest name first.
    Ok(tied.first().map(|d| d.to_string()))
}
