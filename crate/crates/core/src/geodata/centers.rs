use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{haversine_distance, LatLon, Region};
use crate::{Error, Result};

const KMEANS_MAX_ITERATIONS: usize = 100;

/// How major voting centers are located inside a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// The most populous settlements, ties broken by ascending id.
    #[default]
    TopPopulation,
    /// Population-weighted k-means on great-circle distance, initialised
    /// from `TopPopulation` and snapped to settlements.
    WeightedKMeans,
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Placement::TopPopulation => "top-population",
            Placement::WeightedKMeans => "weighted-k-means",
        })
    }
}

impl FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "top-population" | "top" => Ok(Placement::TopPopulation),
            "weighted-k-means" | "kmeans" => Ok(Placement::WeightedKMeans),
            other => Err(Error::Config(format!("unknown placement `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VotingCenters {
    pub region_id: String,
    /// Ids of the settlements serving as centers.
    pub settlement_ids: Vec<String>,
    pub centers: Vec<LatLon>,
    pub nvc: usize,
    pub strategy: Placement,
}

/// Places `min(nvc, settlements)` centers in a region.
pub fn place_voting_centers(region: &Region, nvc: usize, strategy: Placement) -> Result<VotingCenters> {
    if nvc == 0 {
        return Err(Error::Config("nvc must be at least 1".into()));
    }
    if region.settlements.is_empty() {
        return Err(Error::NoMass(format!("region `{}` has no settlements", region.id)));
    }
    let chosen = match strategy {
        Placement::TopPopulation => top_population(region, nvc),
        Placement::WeightedKMeans => weighted_kmeans(region, nvc),
    };
    Ok(VotingCenters {
        region_id: region.id.clone(),
        settlement_ids: chosen.iter().map(|&i| region.settlements[i].id.clone()).collect(),
        centers: chosen.iter().map(|&i| region.settlements[i].location()).collect(),
        nvc,
        strategy,
    })
}

fn top_population(region: &Region, nvc: usize) -> Vec<usize> {
    let s = &region.settlements;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].population.cmp(&s[a].population).then_with(|| s[a].id.cmp(&s[b].id)));
    order.truncate(nvc.min(s.len()));
    order
}

fn nearest(point: LatLon, centers: &[LatLon]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, &c) in centers.iter().enumerate() {
        let d = haversine_distance(point, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn weighted_kmeans(region: &Region, nvc: usize) -> Vec<usize> {
    let s = &region.settlements;
    let mut chosen = top_population(region, nvc);
    let k = chosen.len();
    if k == s.len() {
        return chosen;
    }
    let points: Vec<LatLon> = s.iter().map(|x| x.location()).collect();
    let vectors: Vec<[f64; 3]> = points.iter().map(|p| p.unit_vector()).collect();
    let mut assignment: Option<Vec<usize>> = None;

    for _ in 0..KMEANS_MAX_ITERATIONS {
        let centers: Vec<LatLon> = chosen.iter().map(|&i| points[i]).collect();
        let next: Vec<usize> = points.iter().map(|&p| nearest(p, &centers)).collect();
        if assignment.as_ref() == Some(&next) {
            break;
        }

        // clusters snap in order; a settlement already taken by an earlier
        // cluster is skipped so the centers stay distinct
        let mut updated: Vec<usize> = Vec::with_capacity(k);
        for (j, &previous) in chosen.iter().enumerate() {
            let mut acc = [0.0; 3];
            let mut mass = 0.0;
            for (i, _) in next.iter().enumerate().filter(|&(_, &c)| c == j) {
                let w = s[i].population as f64;
                mass += w;
                for (a, v) in acc.iter_mut().zip(vectors[i]) {
                    *a += w * v;
                }
            }
            let target =
                if mass > 0.0 { LatLon::from_vector(acc).unwrap_or(points[previous]) } else { points[previous] };
            let snapped = (0..s.len())
                .filter(|i| !updated.contains(i))
                .min_by(|&a, &b| {
                    haversine_distance(points[a], target)
                        .total_cmp(&haversine_distance(points[b], target))
                        .then_with(|| s[a].id.cmp(&s[b].id))
                })
                .expect("fewer centers than settlements");
            updated.push(snapped);
        }
        chosen = updated;
        assignment = Some(next);
    }
    chosen
}
