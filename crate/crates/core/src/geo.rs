//! Spherical geodesy and the lat/lon cell grid shared by both prediction models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mean Earth radius in nautical miles.
pub const EARTH_RADIUS_NM: f64 = 3440.065;

/// A point on the sphere, in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coord<T> {
    pub lat: T,
    pub lon: T,
}

impl<T: Scalar> Coord<T> {
    pub fn new(lat: T, lon: T) -> Result<Self> {
        let c = Coord { lat, lon };
        if c.is_valid() {
            Ok(c)
        } else {
            Err(Error::InvalidCoord {
                lat: lat.as_f64(),
                lon: lon.as_f64(),
            })
        }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && self.lat.abs() <= T::lit(90.0)
            && self.lon.abs() <= T::lit(180.0)
    }
}

/// Discrete cell address inside a [`GridSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub row: u32,
    pub col: u32,
}

impl CellId {
    pub const fn new(row: u32, col: u32) -> Self {
        CellId { row, col }
    }

    /// Chebyshev distance in cells.
    pub fn chebyshev(self, other: CellId) -> u32 {
        self.row
            .abs_diff(other.row)
            .max(self.col.abs_diff(other.col))
    }
}

/// Rectangular lat/lon grid anchored at `(lat_min, lon_min)`.
///
/// Storage is never sized from [`GridSpec::capacity`]; models keep only the
/// cells they have actually trained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub lat_min: T,
    pub lat_max: T,
    pub lon_min: T,
    pub lon_max: T,
    pub granularity: T,
}

fn axis_len<T: Scalar>(min: T, max: T, g: T) -> u32 {
    let span = (max - min) / g;
    let nearest = span.round();
    // (46 - 30) / 0.005 is not exactly 3200 in binary floating point.
    let n = if (span - nearest).abs() <= T::lit(1e-9) * nearest.max(T::one()) {
        nearest
    } else {
        span.ceil()
    };
    n.to_u32().unwrap_or(u32::MAX).max(1)
}

// Index of the half-open interval [min + i*g, min + (i+1)*g) containing v,
// clamped into 0..n. The floor estimate is corrected against the same
// boundary expressions used by `cell_bounds`.
fn axis_index<T: Scalar>(v: T, min: T, g: T, n: u32) -> u32 {
    let mut i = ((v - min) / g).floor().to_u32().unwrap_or(0).min(n - 1);
    while i > 0 && v < min + g * T::lit(i as f64) {
        i -= 1;
    }
    while i + 1 < n && v >= min + g * T::lit((i + 1) as f64) {
        i += 1;
    }
    i
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(lat_min: T, lat_max: T, lon_min: T, lon_max: T, granularity: T) -> Result<Self> {
        let g = GridSpec {
            lat_min,
            lat_max,
            lon_min,
            lon_max,
            granularity,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.lat_min,
            self.lat_max,
            self.lon_min,
            self.lon_max,
            self.granularity,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidGrid("non-finite bound".into()));
        }
        if !(self.granularity > T::zero()) {
            return Err(Error::InvalidGrid("granularity must be > 0".into()));
        }
        if !(self.lat_min < self.lat_max) || !(self.lon_min < self.lon_max) {
            return Err(Error::InvalidGrid("empty bounding box".into()));
        }
        if self.lat_min < T::lit(-90.0)
            || self.lat_max > T::lit(90.0)
            || self.lon_min < T::lit(-180.0)
            || self.lon_max > T::lit(180.0)
        {
            return Err(Error::InvalidGrid("bounds exceed the globe".into()));
        }
        Ok(())
    }

    /// Same bounds, different cell size.
    pub fn with_granularity(&self, granularity: T) -> Result<Self> {
        GridSpec::new(
            self.lat_min,
            self.lat_max,
            self.lon_min,
            self.lon_max,
            granularity,
        )
    }

    pub fn rows(&self) -> u32 {
        axis_len(self.lat_min, self.lat_max, self.granularity)
    }

    pub fn cols(&self) -> u32 {
        axis_len(self.lon_min, self.lon_max, self.granularity)
    }

    /// Number of addressable cells. Derived only; never allocated.
    pub fn capacity(&self) -> u64 {
        self.rows() as u64 * self.cols() as u64
    }

    pub fn contains(&self, pos: Coord<T>) -> bool {
        pos.lat >= self.lat_min
            && pos.lat <= self.lat_max
            && pos.lon >= self.lon_min
            && pos.lon <= self.lon_max
    }

    pub fn contains_cell(&self, cell: CellId) -> bool {
        cell.row < self.rows() && cell.col < self.cols()
    }

    /// Maps a position onto its cell. The box is closed: points on the
    /// maximum edges fall into the last row or column.
    pub fn cell_of(&self, pos: Coord<T>) -> Result<CellId> {
        if !self.contains(pos) {
            return Err(Error::OutOfBounds {
                lat: pos.lat.as_f64(),
                lon: pos.lon.as_f64(),
            });
        }
        Ok(CellId {
            row: axis_index(pos.lat, self.lat_min, self.granularity, self.rows()),
            col: axis_index(pos.lon, self.lon_min, self.granularity, self.cols()),
        })
    }

    /// Lower-left and upper-right corners of a cell.
    pub fn cell_bounds(&self, cell: CellId) -> (Coord<T>, Coord<T>) {
        let g = self.granularity;
        let lo = Coord {
            lat: self.lat_min + g * T::lit(cell.row as f64),
            lon: self.lon_min + g * T::lit(cell.col as f64),
        };
        let hi = Coord {
            lat: self.lat_min + g * T::lit((cell.row + 1) as f64),
            lon: self.lon_min + g * T::lit((cell.col + 1) as f64),
        };
        (lo, hi)
    }

    pub fn cell_center(&self, cell: CellId) -> Coord<T> {
        let half = T::lit(0.5);
        Coord {
            lat: self.lat_min + self.granularity * (T::lit(cell.row as f64) + half),
            lon: self.lon_min + self.granularity * (T::lit(cell.col as f64) + half),
        }
    }
}

/// Great-circle distance in nautical miles.
pub fn haversine_nm<T: Scalar>(a: Coord<T>, b: Coord<T>) -> T {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let half = T::lit(0.5);
    let s_lat = (dlat * half).sin();
    let s_lon = (dlon * half).sin();
    let h = (s_lat * s_lat + lat1.cos() * lat2.cos() * s_lon * s_lon)
        .max(T::zero())
        .min(T::one());
    let central = T::lit(2.0) * h.sqrt().atan2((T::one() - h).sqrt());
    T::lit(EARTH_RADIUS_NM) * central
}

fn normalize_deg<T: Scalar>(deg: T) -> T {
    let full = T::lit(360.0);
    let mut d = deg % full;
    if d < T::zero() {
        d = d + full;
    }
    if d >= full {
        d = d - full;
    }
    d
}

/// Initial great-circle bearing from `a` to `b`, clockwise from north, in [0, 360).
pub fn bearing_deg<T: Scalar>(a: Coord<T>, b: Coord<T>) -> Result<T> {
    if a == b {
        return Err(Error::UndefinedBearing);
    }
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlon = (b.lon - a.lon).to_radians();
    let y = dlon.sin() * lat2.cos();
    let x = lat1.cos() * lat2.sin() - lat1.sin() * lat2.cos() * dlon.cos();
    Ok(normalize_deg(y.atan2(x).to_degrees()))
}

/// Smallest angle between two directions, in [0, 180].
pub fn angular_diff<T: Scalar>(a: T, b: T) -> T {
    let full = T::lit(360.0);
    let d = (a - b).abs() % full;
    if d > T::lit(180.0) {
        full - d
    } else {
        d
    }
}

/// Point at fraction `f` of the great-circle path from `a` to `b`.
pub fn interpolate<T: Scalar>(a: Coord<T>, b: Coord<T>, f: T) -> Coord<T> {
    let delta = haversine_nm(a, b) / T::lit(EARTH_RADIUS_NM);
    if delta <= T::lit(1e-12) {
        return a;
    }
    let (lat1, lon1) = (a.lat.to_radians(), a.lon.to_radians());
    let (lat2, lon2) = (b.lat.to_radians(), b.lon.to_radians());
    let sd = delta.sin();
    let wa = ((T::one() - f) * delta).sin() / sd;
    let wb = (f * delta).sin() / sd;
    let x = wa * lat1.cos() * lon1.cos() + wb * lat2.cos() * lon2.cos();
    let y = wa * lat1.cos() * lon1.sin() + wb * lat2.cos() * lon2.sin();
    let z = wa * lat1.sin() + wb * lat2.sin();
    Coord {
        lat: z.atan2((x * x + y * y).sqrt()).to_degrees(),
        lon: y.atan2(x).to_degrees(),
    }
}

/// In-bounds cells at Chebyshev distance exactly `radius` from `center`,
/// in row-major order.
pub fn ring_cells<T: Scalar>(center: CellId, radius: u32, grid: &GridSpec<T>) -> Vec<CellId> {
    if radius == 0 {
        return vec![center];
    }
    let (rows, cols) = (grid.rows() as i64, grid.cols() as i64);
    let (cr, cc, r) = (center.row as i64, center.col as i64, radius as i64);
    let mut out = Vec::with_capacity(8 * radius as usize);
    for row in (cr - r).max(0)..=(cr + r).min(rows - 1) {
        let edge_row = (row - cr).abs() == r;
        let mut push = |col: i64| {
            if (0..cols).contains(&col) {
                out.push(CellId::new(row as u32, col as u32));
            }
        };
        if edge_row {
            for col in (cc - r)..=(cc + r) {
                push(col);
            }
        } else {
            push(cc - r);
            push(cc + r);
        }
    }
    out
}

/// Searches rings of growing radius around `center` for trained cells.
///
/// `trained` returns the trained record count of a cell, or `None` when the
/// cell holds nothing usable. A trained `center` is returned as-is. On the
/// first non-empty ring the cell whose direction from `center` best matches
/// `course` wins; equal alignments go to the larger count, then to ring order.
pub fn nearest_trained_cell<T, F>(
    grid: &GridSpec<T>,
    center: CellId,
    course: T,
    max_radius: u32,
    trained: F,
) -> Option<CellId>
where
    T: Scalar,
    F: Fn(CellId) -> Option<u64>,
{
    if trained(center).is_some() {
        return Some(center);
    }
    let origin = grid.cell_center(center);
    for radius in 1..=max_radius {
        let mut best: Option<(T, u64, CellId)> = None;
        for cell in ring_cells(center, radius, grid) {
            let Some(count) = trained(cell) else { continue };
            let dir = bearing_deg(origin, grid.cell_center(cell)).unwrap_or(T::zero());
            let misalign = angular_diff(dir, course);
            let better = match best {
                None => true,
                Some((m, c, _)) => misalign < m || (misalign == m && count > c),
            };
            if better {
                best = Some((misalign, count, cell));
            }
        }
        if let Some((_, _, cell)) = best {
            return Some(cell);
        }
    }
    None
}
