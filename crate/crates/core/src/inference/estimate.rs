use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{replicate_rng, replicate_seed};
use super::sampler::{replicate_distribution, weight_units, Sampler};
use super::{ResampleMode, ResamplePlan};
use crate::geodata::DistanceDistribution;
use crate::model::{all_geo_signs, moment_fair_win, moment_halftime_lead};
use crate::Result;

/// Largest atom count for which subsets are enumerated exactly.
pub const EXACT_MAX_ATOMS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    MonteCarlo,
    /// Every subsample enumerated with its draw probability.
    Exact,
}

/// Share of replicates meeting both all-geodemographics conditions, and
/// each condition on its own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllGeoEstimate {
    pub fraction: f64,
    pub fraction_fair_win: f64,
    pub fraction_halftime_lead: f64,
    pub replicates: usize,
    pub method: Estimator,
}

impl AllGeoEstimate {
    /// Estimate for a law on which no condition can hold (`x_M = 0`).
    pub fn none_met() -> Self {
        AllGeoEstimate {
            fraction: 0.0,
            fraction_fair_win: 0.0,
            fraction_halftime_lead: 0.0,
            replicates: 0,
            method: Estimator::Exact,
        }
    }

    /// Binomial Monte Carlo standard error of `fraction`; zero when exact.
    pub fn standard_error(&self) -> f64 {
        match self.method {
            Estimator::Exact => 0.0,
            Estimator::MonteCarlo => (self.fraction * (1.0 - self.fraction) / self.replicates as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    both: u64,
    first: u64,
    second: u64,
}

impl Tally {
    fn of((a, b): (bool, bool)) -> Self {
        Tally { both: (a && b) as u64, first: a as u64, second: b as u64 }
    }

    fn merge(self, o: Self) -> Self {
        Tally { both: self.both + o.both, first: self.first + o.first, second: self.second + o.second }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// Probability of every `size`-subset under successive weighted draws
/// without replacement, by dynamic programming over bitmasks:
/// `P(S) = Σ_{i∈S} P(S∖i) · w_i / (1 - w(S∖i))`.
fn subset_probabilities(weights: &[f64], size: usize) -> Vec<(u32, f64)> {
    let n = weights.len();
    let mut prob = vec![0.0f64; 1 << n];
    let mut mass = vec![0.0f64; 1 << n];
    prob[0] = 1.0;
    for mask in 1usize..1 << n {
        let low = mask.trailing_zeros() as usize;
        mass[mask] = mass[mask & (mask - 1)] + weights[low];
    }
    let mut by_size: Vec<Vec<u32>> = vec![Vec::new(); size + 1];
    for mask in 0u32..1 << n {
        let k = mask.count_ones() as usize;
        if k <= size {
            by_size[k].push(mask);
        }
    }
    for masks in &by_size[1..] {
        for &mask in masks {
            let mut p = 0.0;
            let mut rest = mask;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let prev = (mask & !(1 << i)) as usize;
                if prob[prev] > 0.0 {
                    p += prob[prev] * weights[i] / (1.0 - mass[prev]);
                }
            }
            prob[mask as usize] = p;
        }
    }
    by_size[size].iter().map(|&m| (m, prob[m as usize])).collect()
}

fn exact_applies(dist: &DistanceDistribution, plan: &ResamplePlan) -> bool {
    plan.mode == ResampleMode::Subsample
        && dist.len() <= EXACT_MAX_ATOMS
        && binomial(dist.len(), plan.sample_size) <= plan.replicates as u128
}

/// Fraction of replicates of `dist` for which `condition` holds, where the
/// condition returns the two sign tests whose conjunction is the target.
///
/// For subsampling plans with no more distinct subsets than replicates
/// (and at most 20 atoms) the draw law is enumerated exactly instead.
pub fn probability_all_geo_with<F>(
    dist: &DistanceDistribution,
    plan: &ResamplePlan,
    condition: F,
) -> Result<AllGeoEstimate>
where
    F: Fn(&DistanceDistribution) -> (bool, bool) + Sync,
{
    let mut sampler = Sampler::new(weight_units(dist.weights()), plan)?;

    if exact_applies(dist, plan) {
        let (mut both, mut first, mut second) = (0.0, 0.0, 0.0);
        let mut idx = Vec::with_capacity(plan.sample_size);
        for (mask, p) in subset_probabilities(dist.weights(), plan.sample_size) {
            idx.clear();
            idx.extend((0..dist.len()).filter(|i| mask & (1 << i) != 0));
            let (a, b) = condition(&replicate_distribution(dist, &idx));
            both += p * (a && b) as u8 as f64;
            first += p * a as u8 as f64;
            second += p * b as u8 as f64;
        }
        return Ok(AllGeoEstimate {
            fraction: both.min(1.0),
            fraction_fair_win: first.min(1.0),
            fraction_halftime_lead: second.min(1.0),
            replicates: binomial(dist.len(), plan.sample_size) as usize,
            method: Estimator::Exact,
        });
    }

    let one = |sampler: &mut Sampler, buf: &mut Vec<usize>, i: u64| {
        sampler.draw(&mut replicate_rng(plan.seed, i), buf);
        Tally::of(condition(&replicate_distribution(dist, buf)))
    };
    let tally = if plan.parallel {
        (0..plan.replicates as u64)
            .into_par_iter()
            .map_init(|| (sampler.clone(), Vec::with_capacity(plan.sample_size)), |(s, buf), i| one(s, buf, i))
            .reduce(Tally::default, Tally::merge)
    } else {
        let mut buf = Vec::with_capacity(plan.sample_size);
        (0..plan.replicates as u64).map(|i| one(&mut sampler, &mut buf, i)).fold(Tally::default(), Tally::merge)
    };
    let b = plan.replicates as f64;
    Ok(AllGeoEstimate {
        fraction: tally.both as f64 / b,
        fraction_fair_win: tally.first as f64 / b,
        fraction_halftime_lead: tally.second as f64 / b,
        replicates: plan.replicates,
        method: Estimator::MonteCarlo,
    })
}

/// Fraction of resampled distributions on which both the fair-win moment
/// `E(X - x_M/2)` and the half-time-lead moment `E[(X - x_M/2)(X - x_M)]`
/// are strictly positive.
pub fn probability_all_geo(dist: &DistanceDistribution, plan: &ResamplePlan) -> Result<AllGeoEstimate> {
    probability_all_geo_with(dist, plan, all_geo_signs)
}

/// Per-replicate moments, for plotting their histograms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateDiagnostic {
    pub replicate: u64,
    pub seed: u64,
    pub fair_win: Option<f64>,
    pub halftime_lead: Option<f64>,
    pub conjecture: bool,
}

pub fn replicate_diagnostics(dist: &DistanceDistribution, plan: &ResamplePlan) -> Result<Vec<ReplicateDiagnostic>> {
    let sampler = Sampler::new(weight_units(dist.weights()), plan)?;
    let one = |(s, buf): &mut (Sampler, Vec<usize>), i: u64| {
        s.draw(&mut replicate_rng(plan.seed, i), buf);
        let r = replicate_distribution(dist, buf);
        let (a, b) = all_geo_signs(&r);
        ReplicateDiagnostic {
            replicate: i,
            seed: replicate_seed(plan.seed, i),
            fair_win: moment_fair_win(&r).ok(),
            halftime_lead: moment_halftime_lead(&r).ok(),
            conjecture: a && b,
        }
    };
    let range = 0..plan.replicates as u64;
    Ok(if plan.parallel {
        range.into_par_iter().map_init(|| (sampler.clone(), Vec::new()), one).collect()
    } else {
        let mut state = (sampler, Vec::new());
        range.map(|i| one(&mut state, i)).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::conjecture_all_geo;

    fn dist(pairs: &[(f64, f64)]) -> DistanceDistribution {
        DistanceDistribution::from_weighted(pairs.iter().copied()).unwrap()
    }

    /// Sums over ordered draw sequences, independent of the bitmask DP.
    fn ordered_oracle(d: &DistanceDistribution, size: usize) -> f64 {
        fn go(d: &DistanceDistribution, size: usize, taken: &mut Vec<usize>, p: f64, left: f64) -> f64 {
            if taken.len() == size {
                let r = replicate_distribution(d, taken);
                return if conjecture_all_geo(&r) { p } else { 0.0 };
            }
            let mut total = 0.0;
            for i in 0..d.len() {
                if taken.contains(&i) {
                    continue;
                }
                let w = d.weights()[i];
                taken.push(i);
                total += go(d, size, taken, p * w / left, left - w);
                taken.pop();
            }
            total
        }
        go(d, size, &mut Vec::new(), 1.0, 1.0)
    }

    fn far_heavy() -> DistanceDistribution {
        // 0.7 of the mass around 0.95 x_M, the rest spread near zero
        let mut atoms: Vec<(f64, f64)> = (0..4).map(|i| (93.0 + i as f64, 0.7 / 4.0)).collect();
        atoms.extend((0..6).map(|i| (0.5 + i as f64, 0.3 / 6.0)));
        dist(&atoms).with_support_max(100.0).unwrap()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 5), 252);
        assert_eq!(binomial(20, 10), 184_756);
        assert_eq!(binomial(7, 0), 1);
    }

    #[test]
    fn subset_law_sums_to_one() {
        let w = [0.1, 0.05, 0.3, 0.2, 0.15, 0.2];
        for k in 1..=6 {
            let total: f64 = subset_probabilities(&w, k).iter().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_matches_ordered_enumeration() {
        let d = far_heavy();
        let plan = ResamplePlan::new(ResampleMode::Subsample, 5, 10_000, 1);
        let est = probability_all_geo(&d, &plan).unwrap();
        assert_eq!(est.method, Estimator::Exact);
        assert_eq!(est.replicates, 252);
        let want = ordered_oracle(&d, 5);
        assert!((est.fraction - want).abs() < 1e-12, "{} vs {want}", est.fraction);
        assert!(want > 0.0 && want < 1.0);
    }

    #[test]
    fn monte_carlo_converges_to_exact() {
        let d = far_heavy();
        let exact = probability_all_geo(&d, &ResamplePlan::new(ResampleMode::Subsample, 5, 300, 1)).unwrap();
        let mc = probability_all_geo(&d, &ResamplePlan::new(ResampleMode::Subsample, 5, 200, 3)).unwrap();
        assert_eq!(mc.method, Estimator::MonteCarlo);
        let big = ResamplePlan::new(ResampleMode::Subsample, 5, 251, 3);
        assert_eq!(probability_all_geo(&d, &big).unwrap().method, Estimator::MonteCarlo);
        let se = (exact.fraction * (1.0 - exact.fraction) / 200.0).sqrt();
        assert!((mc.fraction - exact.fraction).abs() < 4.0 * se + 1e-9);
    }

    #[test]
    fn point_mass_never_qualifies() {
        let d = dist(&[(7.0, 1.0)]);
        let est = probability_all_geo(&d, &ResamplePlan::new(ResampleMode::Bootstrap, 20, 500, 0)).unwrap();
        assert_eq!(est.fraction, 0.0);
    }

    #[test]
    fn serial_equals_parallel() {
        let atoms: Vec<(f64, f64)> = (0..200).map(|i| ((i * 37 % 101) as f64, 1.0 + (i % 5) as f64)).collect();
        let d = dist(&atoms);
        for mode in [ResampleMode::Bootstrap, ResampleMode::Subsample] {
            let plan = ResamplePlan::new(mode, 20, 3_000, 77);
            let a = probability_all_geo(&d, &plan).unwrap();
            let b = probability_all_geo(&d, &plan.serial()).unwrap();
            assert_eq!(a, b);
            assert_eq!(replicate_diagnostics(&d, &plan).unwrap(), replicate_diagnostics(&d, &plan.serial()).unwrap());
        }
    }

    #[test]
    fn diagnostics_agree_with_estimate() {
        let d = far_heavy();
        let plan = ResamplePlan::new(ResampleMode::Bootstrap, 5, 400, 8);
        let est = probability_all_geo(&d, &plan).unwrap();
        let diag = replicate_diagnostics(&d, &plan).unwrap();
        let hits = diag.iter().filter(|r| r.conjecture).count();
        assert_eq!(hits as f64 / 400.0, est.fraction);
        assert_eq!(diag[3].seed, replicate_seed(8, 3));
    }

    #[test]
    fn halves_agree() {
        let atoms: Vec<(f64, f64)> = (0..40).map(|i| (i as f64, if i > 35 { 3.0 } else { 1.0 })).collect();
        let d = dist(&atoms);
        let a = probability_all_geo(&d, &ResamplePlan::new(ResampleMode::Subsample, 5, 5_000, 100)).unwrap();
        let b = probability_all_geo(&d, &ResamplePlan::new(ResampleMode::Subsample, 5, 5_000, 200)).unwrap();
        let p = 0.5 * (a.fraction + b.fraction);
        assert!((a.fraction - b.fraction).abs() <= 2.0 * (2.0 * p * (1.0 - p) / 5000.0).sqrt() + 1e-12);
    }
}
