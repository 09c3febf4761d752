use super::{haversine_distance, Region, VotingCenters};
use crate::numeric::CompensatedSum;
use crate::{Error, Result};

/// Population-weighted empirical law of voter-to-nearest-center distance.
///
/// Atoms carry strictly positive weights summing to one. `x_max` is the
/// upper end of the support: the largest atom for distributions built from
/// data, or the parent territory's maximum for resampled replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceDistribution {
    xs: Vec<f64>,
    ws: Vec<f64>,
    x_max: f64,
    total_population: u64,
}

impl DistanceDistribution {
    /// Builds a distribution from `(distance_km, weight)` pairs. Zero-weight
    /// atoms are dropped; the remaining weights are normalised.
    pub fn from_weighted<I>(samples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut xs = Vec::new();
        let mut raw = Vec::new();
        for (x, w) in samples {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::NoMass(format!("invalid distance {x}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::NoMass(format!("invalid weight {w}")));
            }
            if w > 0.0 {
                xs.push(x);
                raw.push(w);
            }
        }
        let total = raw.iter().copied().collect::<CompensatedSum>().total();
        if xs.is_empty() || total <= 0.0 {
            return Err(Error::NoMass("all weights are zero".into()));
        }
        let ws = raw.into_iter().map(|w| w / total).collect();
        let x_max = xs.iter().copied().fold(0.0, f64::max);
        Ok(Self { xs, ws, x_max, total_population: 0 })
    }

    /// Builds a distribution from `(distance_km, population)` pairs.
    pub fn from_population<I>(samples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, u64)>,
    {
        let samples: Vec<(f64, u64)> = samples.into_iter().collect();
        let total_population = samples.iter().map(|&(_, p)| p).sum();
        let mut dist = Self::from_weighted(samples.into_iter().map(|(x, p)| (x, p as f64)))?;
        dist.total_population = total_population;
        Ok(dist)
    }

    /// Pools several population-based distributions into one, weighting each
    /// part by its total population.
    pub fn pooled(parts: &[&DistanceDistribution]) -> Result<Self> {
        if parts.iter().any(|p| p.total_population == 0) {
            return Err(Error::NoMass("pooling needs population-based parts".into()));
        }
        let total_population: u64 = parts.iter().map(|p| p.total_population).sum();
        let mut dist = Self::from_weighted(parts.iter().flat_map(|p| {
            let share = p.total_population as f64;
            p.xs.iter().zip(&p.ws).map(move |(&x, &w)| (x, w * share))
        }))?;
        dist.x_max = parts.iter().map(|p| p.x_max).fold(0.0, f64::max);
        dist.total_population = total_population;
        Ok(dist)
    }

    /// Replaces the support maximum, which must not fall below any atom.
    pub fn with_support_max(mut self, x_max: f64) -> Result<Self> {
        let largest = self.xs.iter().copied().fold(0.0, f64::max);
        if !(x_max >= largest) || !x_max.is_finite() {
            return Err(Error::Degenerate("support maximum below the largest atom"));
        }
        self.x_max = x_max;
        Ok(self)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn weights(&self) -> &[f64] {
        &self.ws
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn total_population(&self) -> u64 {
        self.total_population
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ws.iter().copied())
    }

    /// `E[f(X)]` as a compensated weighted sum over the atoms.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).collect::<CompensatedSum>().total()
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }
}

/// Distance from every settlement of `region` to its nearest center, in
/// settlement order.
pub fn nearest_center_distances(region: &Region, centers: &VotingCenters) -> Vec<f64> {
    region
        .settlements
        .iter()
        .map(|s| centers.centers.iter().map(|&c| haversine_distance(s.location(), c)).fold(f64::INFINITY, f64::min))
        .collect()
}

/// Pools the settlements of one or many regions into a single distance law.
/// Every region needs an entry in `centers`.
pub fn distance_distribution(regions: &[&Region], centers: &[VotingCenters]) -> Result<DistanceDistribution> {
    let mut samples = Vec::new();
    for region in regions {
        let vc =
            centers.iter().find(|c| c.region_id == region.id).ok_or_else(|| Error::Linkage(vec![region.id.clone()]))?;
        let distances = nearest_center_distances(region, vc);
        samples.extend(distances.into_iter().zip(region.settlements.iter().map(|s| s.population)));
    }
    DistanceDistribution::from_population(samples)
}

#[cfg(test)]
mod tests {
    use super::super::{place_voting_centers, LatLon, Placement, Settlement};
    use super::*;
    use proptest::prelude::*;

    fn region(id: &str, rows: &[(f64, f64, u64)]) -> Region {
        Region {
            id: id.into(),
            name: id.into(),
            settlements: rows
                .iter()
                .enumerate()
                .map(|(i, &(lat, lon, population))| Settlement {
                    id: format!("{id}-{i}"),
                    name: String::new(),
                    region_id: id.into(),
                    latitude: lat,
                    longitude: lon,
                    population,
                })
                .collect(),
        }
    }

    #[test]
    fn single_center_settlement_is_point_mass_at_zero() {
        let r = region("R", &[(14.0, -87.0, 50)]);
        let vc = place_voting_centers(&r, 1, Placement::TopPopulation).unwrap();
        let d = distance_distribution(&[&r], &[vc]).unwrap();
        assert_eq!(d.xs(), &[0.0]);
        assert_eq!(d.x_max(), 0.0);
    }

    #[test]
    fn two_atom_weights_and_mean() {
        let d = DistanceDistribution::from_population([(10.0, 300), (20.0, 700)]).unwrap();
        assert_eq!(d.weights(), &[0.3, 0.7]);
        assert_eq!(d.x_max(), 20.0);
        assert!((d.mean() - 17.0).abs() < 1e-12);
        assert_eq!(d.total_population(), 1000);
    }

    #[test]
    fn zero_population_is_dropped_and_all_zero_rejected() {
        let d = DistanceDistribution::from_population([(5.0, 0), (3.0, 10)]).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.x_max(), 3.0);
        assert!(DistanceDistribution::from_population([(5.0, 0), (3.0, 0)]).is_err());
    }

    #[test]
    fn pooled_regions_normalise() {
        let a = region("A", &[(14.0, -87.0, 100), (14.3, -87.0, 40)]);
        let b = region("B", &[(15.0, -88.0, 10), (15.9, -88.0, 5)]);
        let centers: Vec<_> =
            [&a, &b].iter().map(|r| place_voting_centers(r, 1, Placement::TopPopulation).unwrap()).collect();
        let da = distance_distribution(&[&a], &centers).unwrap();
        let db = distance_distribution(&[&b], &centers).unwrap();
        let both = distance_distribution(&[&a, &b], &centers).unwrap();
        let total: f64 = both.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(both.x_max(), da.x_max().max(db.x_max()));

        let pooled = DistanceDistribution::pooled(&[&da, &db]).unwrap();
        assert_eq!(pooled.total_population(), 155);
        for ((x1, w1), (x2, w2)) in pooled.iter().zip(both.iter()) {
            assert_eq!(x1, x2);
            assert!((w1 - w2).abs() < 1e-15);
        }
    }

    #[test]
    fn missing_centers_is_an_error() {
        let a = region("A", &[(14.0, -87.0, 100)]);
        assert!(distance_distribution(&[&a], &[]).is_err());
    }

    #[test]
    fn support_max_cannot_shrink() {
        let d = DistanceDistribution::from_weighted([(1.0, 1.0), (4.0, 1.0)]).unwrap();
        assert!(d.clone().with_support_max(3.0).is_err());
        assert_eq!(d.with_support_max(10.0).unwrap().x_max(), 10.0);
    }

    #[test]
    fn all_settlements_as_centers_gives_zero_distances() {
        let r = region("R", &[(14.0, -87.0, 5), (14.5, -87.2, 10), (13.8, -86.9, 3)]);
        let vc = place_voting_centers(&r, 3, Placement::TopPopulation).unwrap();
        assert!(nearest_center_distances(&r, &vc).iter().all(|&d| d == 0.0));
    }

    proptest! {
        #[test]
        fn more_centers_never_increase_distance(
            rows in prop::collection::vec((13.0f64..16.0, -89.0f64..-84.0, 0u64..10_000), 1..40),
            nvc in 1usize..8,
        ) {
            let r = region("R", &rows);
            let fewer = place_voting_centers(&r, nvc, Placement::TopPopulation).unwrap();
            let more = place_voting_centers(&r, nvc + 1, Placement::TopPopulation).unwrap();
            for (a, b) in nearest_center_distances(&r, &fewer).iter().zip(nearest_center_distances(&r, &more)) {
                prop_assert!(b <= *a);
            }
        }

        #[test]
        fn weights_normalised_and_mean_in_support(
            atoms in prop::collection::vec((0.0f64..500.0, 1u64..1_000_000), 1..200),
        ) {
            let d = DistanceDistribution::from_population(atoms).unwrap();
            let total: f64 = d.weights().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            let m = d.mean();
            prop_assert!(m >= 0.0 && m <= d.x_max() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn latlon_vector_round_trip() {
        let p = LatLon::new(14.5, -87.25);
        let q = LatLon::from_vector(p.unit_vector()).unwrap();
        assert!((p.lat - q.lat).abs() < 1e-12 && (p.lon - q.lon).abs() < 1e-12);
    }
}
