//! Settlements, major voting centers and distance distributions.

mod centers;
mod distribution;

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use centers::{place_voting_centers, Placement, VotingCenters};
pub use distribution::{distance_distribution, nearest_center_distances, DistanceDistribution};

/// Mean Earth radius used for all great-circle distances.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// A point in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }

    pub(crate) fn unit_vector(&self) -> [f64; 3] {
        let (lat, lon) = (self.lat.to_radians(), self.lon.to_radians());
        [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    }

    pub(crate) fn from_vector(v: [f64; 3]) -> Option<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm < 1e-12 {
            return None;
        }
        let lat = (v[2] / norm).clamp(-1.0, 1.0).asin().to_degrees();
        let lon = v[1].atan2(v[0]).to_degrees();
        Some(Self { lat, lon })
    }
}

/// Great-circle distance in km between two points.
pub fn haversine_distance(a: LatLon, b: LatLon) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.clamp(0.0, 1.0).sqrt().asin()
}

/// One geolocated population atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settlement {
    pub id: String,
    pub name: String,
    pub region_id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub population: u64,
}

impl Settlement {
    pub fn location(&self) -> LatLon {
        LatLon::new(self.latitude, self.longitude)
    }
}

/// A first-level administrative region and its settlements.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: String,
    pub name: String,
    pub settlements: Vec<Settlement>,
}

impl Region {
    pub fn population(&self) -> u64 {
        self.settlements.iter().map(|s| s.population).sum()
    }
}

/// Settlements grouped into regions, ordered by region id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Geodata {
    pub regions: Vec<Region>,
}

impl Geodata {
    pub fn region(&self, id: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    pub fn settlements(&self) -> impl Iterator<Item = &Settlement> {
        self.regions.iter().flat_map(|r| r.settlements.iter())
    }

    pub fn settlement_count(&self) -> usize {
        self.regions.iter().map(|r| r.settlements.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Settlements below this population are dropped after validation.
    pub min_population: u64,
}

#[derive(Debug, Deserialize)]
struct SettlementRecord {
    id: String,
    name: String,
    region_id: String,
    latitude: f64,
    longitude: f64,
    population: i64,
}

/// Reads the settlements CSV (`id,name,region_id,latitude,longitude,population`).
///
/// Region names default to the region id; the CSV carries no separate
/// region table.
pub fn load_settlements<R: Read>(source: R, options: LoadOptions) -> Result<Geodata> {
    let mut seen = HashSet::new();
    let mut regions: BTreeMap<String, Vec<Settlement>> = BTreeMap::new();
    let mut rows = 0usize;

    for item in crate::csvio::records::<_, SettlementRecord>(source)? {
        let (line, record) = item?;
        rows += 1;
        if record.population < 0 {
            return Err(Error::Parse { line, message: format!("population {} is negative", record.population) });
        }
        let at = LatLon::new(record.latitude, record.longitude);
        if !at.is_valid() {
            return Err(Error::Parse { line, message: format!("coordinates ({}, {}) out of range", at.lat, at.lon) });
        }
        if record.id.is_empty() || record.region_id.is_empty() {
            return Err(Error::Parse { line, message: "empty id or region_id".into() });
        }
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId { id: record.id, line });
        }
        let population = record.population as u64;
        if population < options.min_population {
            continue;
        }
        regions.entry(record.region_id.clone()).or_default().push(Settlement {
            id: record.id,
            name: record.name,
            region_id: record.region_id,
            latitude: at.lat,
            longitude: at.lon,
            population,
        });
    }

    if rows == 0 {
        return Err(Error::Empty("settlements file"));
    }

    let regions = regions
        .into_iter()
        .map(|(id, settlements)| {
            if settlements.iter().all(|s| s.population == 0) {
                return Err(Error::NoMass(format!("region `{id}` has no population")));
            }
            Ok(Region { name: id.clone(), id, settlements })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Geodata { regions })
}

/// Writes settlements in the same CSV schema `load_settlements` reads.
pub fn write_settlements<W: Write>(data: &Geodata, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    for s in data.settlements() {
        writer.serialize(s)?;
    }
    writer.flush()?;
    Ok(())
}
