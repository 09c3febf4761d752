//! Writes the synthetic Honduras-shaped fixture:
//! `fixtures/honduras_settlements.csv` and `fixtures/honduras_tallies.csv`.
//!
//! Eighteen departments around their approximate centroids. Fifteen are
//! "dense": people cluster around a few towns, and the incumbent's share
//! falls off with distance. Three are sparse and remote (Gracias a Dios,
//! Islas de la Bahía, Olancho): settlements are scattered and the
//! incumbent's share climbs with distance.
//!
//! Usage: `cargo run --example make_fixture [-- <out_dir>]`

use std::f64::consts::PI;
use std::fs::File;
use std::path::PathBuf;

use latecount::ballots::{write_tallies, TallyRow};
use latecount::geodata::{write_settlements, Geodata, Region, Settlement};
use latecount::inference::{replicate_rng, uniform_f64, ReplicateRng};

const KM_PER_DEGREE: f64 = 111.2;

struct Department {
    id: &'static str,
    name: &'static str,
    lat: f64,
    lon: f64,
    population: f64,
    /// Weight of the main town in sparse departments; `None` when dense.
    sparse: Option<f64>,
}

const DEPARTMENTS: [Department; 18] = [
    Department { id: "HN-AT", name: "Atlantida", lat: 15.67, lon: -87.14, population: 470_000.0, sparse: None },
    Department { id: "HN-CH", name: "Choluteca", lat: 13.30, lon: -87.19, population: 460_000.0, sparse: None },
    Department { id: "HN-CL", name: "Colon", lat: 15.64, lon: -85.52, population: 320_000.0, sparse: None },
    Department { id: "HN-CM", name: "Comayagua", lat: 14.45, lon: -87.64, population: 510_000.0, sparse: None },
    Department { id: "HN-CP", name: "Copan", lat: 14.84, lon: -88.87, population: 380_000.0, sparse: None },
    Department { id: "HN-CR", name: "Cortes", lat: 15.50, lon: -88.03, population: 1_620_000.0, sparse: None },
    Department { id: "HN-EP", name: "El Paraiso", lat: 13.98, lon: -86.50, population: 450_000.0, sparse: None },
    Department {
        id: "HN-FM",
        name: "Francisco Morazan",
        lat: 14.07,
        lon: -87.19,
        population: 1_550_000.0,
        sparse: None,
    },
    Department {
        id: "HN-GD",
        name: "Gracias a Dios",
        lat: 15.26,
        lon: -84.00,
        population: 95_000.0,
        sparse: Some(0.10),
    },
    Department { id: "HN-IN", name: "Intibuca", lat: 14.31, lon: -88.18, population: 240_000.0, sparse: None },
    Department {
        id: "HN-IB",
        name: "Islas de la Bahia",
        lat: 16.32,
        lon: -86.53,
        population: 65_000.0,
        sparse: Some(0.10),
    },
    Department { id: "HN-LP", name: "La Paz", lat: 14.32, lon: -87.68, population: 200_000.0, sparse: None },
    Department { id: "HN-LE", name: "Lempira", lat: 14.43, lon: -88.58, population: 330_000.0, sparse: None },
    Department { id: "HN-OC", name: "Ocotepeque", lat: 14.43, lon: -89.18, population: 150_000.0, sparse: None },
    Department { id: "HN-OL", name: "Olancho", lat: 14.80, lon: -86.00, population: 540_000.0, sparse: Some(0.10) },
    Department { id: "HN-SB", name: "Santa Barbara", lat: 14.92, lon: -88.24, population: 430_000.0, sparse: None },
    Department { id: "HN-VA", name: "Valle", lat: 13.45, lon: -87.60, population: 180_000.0, sparse: None },
    Department { id: "HN-YO", name: "Yoro", lat: 15.14, lon: -87.13, population: 570_000.0, sparse: None },
];

fn normal(rng: &mut ReplicateRng) -> f64 {
    let u = 1.0 - uniform_f64(rng);
    let v = uniform_f64(rng);
    (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
}

fn offset(lat: f64, lon: f64, km: f64, bearing: f64) -> (f64, f64) {
    let dlat = km * bearing.cos() / KM_PER_DEGREE;
    let dlon = km * bearing.sin() / (KM_PER_DEGREE * lat.to_radians().cos());
    (lat + dlat, lon + dlon)
}

struct Place {
    settlement: Settlement,
    /// Distance to the department's main town.
    km: f64,
}

fn push(d: &Department, rng: &mut ReplicateRng, places: &mut Vec<Place>, km: f64, weight: f64) {
    let bearing = 2.0 * PI * uniform_f64(rng);
    let (lat, lon) = offset(d.lat, d.lon, km, bearing);
    let n = places.len();
    places.push(Place {
        settlement: Settlement {
            id: format!("{}-{:03}", d.id, n),
            name: format!("{} {}", d.name, n),
            region_id: d.id.into(),
            latitude: (lat * 1e4).round() / 1e4,
            longitude: (lon * 1e4).round() / 1e4,
            // relative weight for now, scaled to people below
            population: (weight * 1e9) as u64,
        },
        km,
    });
}

fn department(d: &Department, index: u64) -> Vec<Place> {
    let mut rng = replicate_rng(2017, index);
    let mut places = Vec::new();

    if let Some(town) = d.sparse {
        // a modest main town and scattered villages out to ~150 km
        push(d, &mut rng, &mut places, 0.0, town);
        for _ in 0..159 {
            let km = 150.0 * uniform_f64(&mut rng).sqrt();
            let w = 0.006 * (0.4 * normal(&mut rng)).exp();
            push(d, &mut rng, &mut places, km, w);
        }
    } else {
        // a dominant city, a few satellite towns, villages thinning out
        push(d, &mut rng, &mut places, 0.0, 0.55);
        for _ in 0..4 {
            let km = 4.0 + 10.0 * uniform_f64(&mut rng);
            let w = 0.05 * (0.3 * normal(&mut rng)).exp();
            push(d, &mut rng, &mut places, km, w);
        }
        for _ in 0..175 {
            let km = -12.0 * (1.0 - uniform_f64(&mut rng)).ln();
            let w = 0.0012 * (-km / 25.0).exp() * (0.5 * normal(&mut rng)).exp();
            push(d, &mut rng, &mut places, km.min(90.0), w);
        }
    }
    let total: f64 = places.iter().map(|p| p.settlement.population as f64).sum();
    for p in &mut places {
        let scaled = p.settlement.population as f64 / total * d.population;
        p.settlement.population = scaled.round().max(1.0) as u64;
    }
    places
}

fn tallies(d: &Department, index: u64, places: &[Place]) -> Vec<TallyRow> {
    let mut rng = replicate_rng(1126, index);
    let far = places.iter().map(|p| p.km).fold(0.0, f64::max).max(1.0);
    let mut rows = Vec::new();
    for p in places {
        let voters = 0.57 * p.settlement.population as f64 * (0.9 + 0.2 * uniform_f64(&mut rng));
        let share_h = if d.sparse.is_some() {
            0.38 + 0.0016 * p.km + 0.02 * normal(&mut rng)
        } else {
            0.47 - 0.0015 * p.km + 0.03 * normal(&mut rng)
        }
        .clamp(0.05, 0.95);
        let other = 0.13;
        let votes_h = (voters * (1.0 - other) * share_h).round() as u64;
        let votes_n = (voters * (1.0 - other) * (1.0 - share_h)).round() as u64;
        let votes_other = (voters * other).round() as u64;
        // nearby tally sheets reach the count first; the main town always does
        let counted = p.km == 0.0 || uniform_f64(&mut rng) < 0.85 - 0.8 * p.km / far;
        rows.push(TallyRow {
            region_id: d.id.into(),
            unit_id: format!("M-{}", p.settlement.id),
            votes_h,
            votes_n,
            votes_other,
            counted_by_halftime: counted,
            settlement_id: Some(p.settlement.id.clone()),
        });
    }
    rows
}

fn main() -> latecount::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    std::fs::create_dir_all(&out)?;
    let mut regions = Vec::new();
    let mut rows = Vec::new();
    for (i, d) in DEPARTMENTS.iter().enumerate() {
        let places = department(d, i as u64);
        rows.extend(tallies(d, i as u64, &places));
        regions.push(Region {
            id: d.id.into(),
            name: d.id.into(),
            settlements: places.into_iter().map(|p| p.settlement).collect(),
        });
    }
    regions.sort_by(|a, b| a.id.cmp(&b.id));
    write_settlements(&Geodata { regions }, File::create(out.join("honduras_settlements.csv"))?)?;
    write_tallies(&rows, File::create(out.join("honduras_tallies.csv"))?)?;
    eprintln!("wrote {} tally rows to {}", rows.len(), out.display());
    Ok(())
}
