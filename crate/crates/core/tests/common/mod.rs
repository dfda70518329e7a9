#![allow(dead_code)]

use cellgrid::{AisRecord, Coord, GridSpec, Port, PortRegistry};

pub fn med_grid(g: f64) -> GridSpec {
    GridSpec::new(30.0, 46.0, -6.0, 36.5, g).unwrap()
}

pub fn record(lat: f64, lon: f64, course: f64) -> AisRecord {
    AisRecord {
        ship_id: "S1".into(),
        ship_type: 70,
        speed: 12.0,
        pos: Coord { lat, lon },
        course,
        heading: None,
        timestamp: 1_000,
        departure_port: "TANGER".into(),
        draught: Some(8.5),
        label_destination: None,
        label_arrival: None,
    }
}

pub fn labeled(mut r: AisRecord, dest: &str, arrival: i64) -> AisRecord {
    r.label_destination = Some(dest.into());
    r.label_arrival = Some(arrival);
    r
}

pub fn ports(names: &[(&str, f64, f64)]) -> PortRegistry {
    PortRegistry::from_ports(names.iter().map(|&(n, lat, lon)| Port {
        name: n.into(),
        pos: Coord { lat, lon },
        radius: 2.0,
    }))
    .unwrap()
}

/// Unit vector on the sphere.
pub fn unit(c: Coord) -> [f64; 3] {
    let (la, lo) = (c.lat.to_radians(), c.lon.to_radians());
    [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
}

pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Great-circle distance from the angle between position vectors.
pub fn vector_distance_nm(a: Coord, b: Coord) -> f64 {
    let (u, v) = (unit(a), unit(b));
    let c = cross(u, v);
    dot(c, c).sqrt().atan2(dot(u, v)) * cellgrid::geo::EARTH_RADIUS_NM
}

/// Initial bearing from the local north/east frame at `a`.
pub fn vector_bearing_deg(a: Coord, b: Coord) -> f64 {
    let (la, lo) = (a.lat.to_radians(), a.lon.to_radians());
    let north = [-la.sin() * lo.cos(), -la.sin() * lo.sin(), la.cos()];
    let east = [-lo.sin(), lo.cos(), 0.0];
    let v = unit(b);
    dot(east, v)
        .atan2(dot(north, v))
        .to_degrees()
        .rem_euclid(360.0)
}

/// Cell found by testing every row band and column band of the grid.
pub fn brute_force_cell(g: &GridSpec, p: Coord) -> Option<(u32, u32)> {
    let band = |v: f64, min: f64, n: u32| {
        (0..n).find(|&i| {
            let lo = min + g.granularity * i as f64;
            let hi = min + g.granularity * (i + 1) as f64;
            v >= lo && (v < hi || i + 1 == n)
        })
    };
    if p.lat < g.lat_min || p.lat > g.lat_max || p.lon < g.lon_min || p.lon > g.lon_max {
        return None;
    }
    Some((
        band(p.lat, g.lat_min, g.rows())?,
        band(p.lon, g.lon_min, g.cols())?,
    ))
}
