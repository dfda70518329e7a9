use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{angular_diff, bearing_deg, haversine_nm, Coord};
use crate::scalar::Scalar;

pub const PORTS_HEADER: [&str; 4] = ["NAME", "LON", "LAT", "RADIUS_NM"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Port<T> {
    pub name: String,
    pub pos: Coord<T>,
    /// Nautical miles.
    pub radius: T,
}

/// Ports in file order, with exact-match lookup on the uppercase name.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PortRegistry<T> {
    ports: Vec<Port<T>>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl<T: Scalar> PortRegistry<T> {
    pub fn new() -> Self {
        PortRegistry {
            ports: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn from_ports(ports: impl IntoIterator<Item = Port<T>>) -> Result<Self> {
        let mut reg = PortRegistry::new();
        for p in ports {
            reg.insert(p)?;
        }
        Ok(reg)
    }

    pub fn insert(&mut self, mut port: Port<T>) -> Result<()> {
        port.name = port.name.trim().to_uppercase();
        if self.index.contains_key(&port.name) {
            return Err(Error::DuplicatePort(port.name));
        }
        self.index.insert(port.name.clone(), self.ports.len());
        self.ports.push(port);
        Ok(())
    }

    /// Rebuilds the lookup table after deserialization.
    pub(crate) fn reindex(&mut self) {
        self.index = self
            .ports
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), i))
            .collect();
    }

    pub fn get(&self, name: &str) -> Option<&Port<T>> {
        self.index.get(name).map(|&i| &self.ports[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Port<T>> {
        self.ports.iter()
    }

    pub fn len(&self) -> usize {
        self.ports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ports.is_empty()
    }

    /// First port whose radius contains `pos`, preferring the closest.
    pub fn port_at(&self, pos: Coord<T>) -> Option<&Port<T>> {
        self.ports
            .iter()
            .map(|p| (haversine_nm(pos, p.pos), p))
            .filter(|(d, p)| *d <= p.radius)
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(_, p)| p)
    }

    /// Port best aligned with `course` from `pos`; ties go to the nearer port,
    /// then to the lexicographically smaller name.
    pub fn best_by_course(&self, pos: Coord<T>, course: T) -> Option<&Port<T>> {
        let score = |p: &Port<T>| {
            let misalign = bearing_deg(pos, p.pos)
                .map(|b| angular_diff(b, course))
                .unwrap_or(T::zero());
            (misalign, haversine_nm(pos, p.pos))
        };
        self.ports.iter().min_by(|a, b| {
            let (sa, sb) = (score(a), score(b));
            sa.0.partial_cmp(&sb.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(sa.1.partial_cmp(&sb.1).unwrap_or(std::cmp::Ordering::Equal))
                .then_with(|| a.name.cmp(&b.name))
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = PORTS_HEADER.join(",");
        out.push('\n');
        for p in &self.ports {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.name, p.pos.lon, p.pos.lat, p.radius
            ));
        }
        out
    }
}

/// Loads a `NAME,LON,LAT,RADIUS_NM` file. An empty file yields an empty registry.
pub fn load_ports<R: Read, T: Scalar>(source: R) -> Result<PortRegistry<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut reg = PortRegistry::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 1;
        let fields: Vec<&str> = row.iter().collect();
        if i == 0
            && fields
                .first()
                .is_some_and(|f| f.eq_ignore_ascii_case("NAME"))
        {
            continue;
        }
        if fields.len() != 4 {
            return Err(Error::MalformedLine {
                line,
                reason: format!("expected 4 port fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<T> {
            s.parse::<T>().map_err(|e| Error::MalformedLine {
                line,
                reason: format!("{what}: {e}"),
            })
        };
        let pos = Coord::new(parse(fields[2], "LAT")?, parse(fields[1], "LON")?).map_err(|e| {
            Error::MalformedLine {
                line,
                reason: e.to_string(),
            }
        })?;
        let radius = parse(fields[3], "RADIUS_NM")?;
        if !(radius > T::zero()) || fields[0].is_empty() {
            return Err(Error::MalformedLine {
                line,
                reason: "port needs a name and a positive radius".into(),
            });
        }
        reg.insert(Port {
            name: fields[0].to_string(),
            pos,
            radius,
        })?;
    }
    Ok(reg)
}
