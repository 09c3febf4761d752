use super::rng::{below, replicate_rng, ReplicateRng};
use super::{ResampleMode, ResamplePlan};
use crate::geodata::DistanceDistribution;
use crate::Result;

/// Weights are drawn on an integer lattice of 2^53 units so that removal and
/// restoration in the subsample tree are exact.
const UNIT_SCALE: f64 = (1u64 << 53) as f64;

pub(crate) fn weight_units(weights: &[f64]) -> Vec<u64> {
    weights.iter().map(|w| ((w * UNIT_SCALE).round() as u64).max(1)).collect()
}

/// Binary indexed tree over nonnegative integer masses.
#[derive(Debug, Clone)]
struct Fenwick {
    tree: Vec<u64>,
    top: usize,
}

impl Fenwick {
    fn new(values: &[u64]) -> Self {
        let n = values.len();
        let mut tree = vec![0u64; n + 1];
        for (i, &v) in values.iter().enumerate() {
            let j = i + 1;
            tree[j] += v;
            let parent = j + (j & j.wrapping_neg());
            if parent <= n {
                tree[parent] += tree[j];
            }
        }
        let top = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        Fenwick { tree, top }
    }

    fn add(&mut self, index: usize, delta: u64, subtract: bool) {
        let mut j = index + 1;
        while j < self.tree.len() {
            self.tree[j] = if subtract { self.tree[j] - delta } else { self.tree[j] + delta };
            j += j & j.wrapping_neg();
        }
    }

    /// Index whose cumulative interval contains `target`.
    fn find(&self, mut target: u64) -> usize {
        let mut pos = 0;
        let mut step = self.top;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

/// Draws index samples for one plan. Cloned once per worker.
#[derive(Debug, Clone)]
pub(crate) struct Sampler {
    mode: ResampleMode,
    size: usize,
    units: Vec<u64>,
    cumulative: Vec<u64>,
    total: u64,
    tree: Option<Fenwick>,
}

impl Sampler {
    pub(crate) fn new(units: Vec<u64>, plan: &ResamplePlan) -> Result<Self> {
        plan.validate(units.len())?;
        let mut cumulative = Vec::with_capacity(units.len());
        let mut running = 0u64;
        for &u in &units {
            running += u;
            cumulative.push(running);
        }
        let tree = (plan.mode == ResampleMode::Subsample).then(|| Fenwick::new(&units));
        Ok(Sampler { mode: plan.mode, size: plan.sample_size, units, cumulative, total: running, tree })
    }

    pub(crate) fn draw(&mut self, rng: &mut ReplicateRng, out: &mut Vec<usize>) {
        out.clear();
        match self.mode {
            ResampleMode::Bootstrap => {
                for _ in 0..self.size {
                    let r = below(rng, self.total);
                    out.push(self.cumulative.partition_point(|&c| c <= r));
                }
            }
            ResampleMode::Subsample => {
                let tree = self.tree.as_mut().expect("subsample tree");
                let mut remaining = self.total;
                for _ in 0..self.size {
                    let r = below(rng, remaining);
                    let i = tree.find(r);
                    tree.add(i, self.units[i], true);
                    remaining -= self.units[i];
                    out.push(i);
                }
                for &i in out.iter() {
                    tree.add(i, self.units[i], false);
                }
            }
        }
    }
}

/// Atom indices of every replicate, in replicate order.
///
/// Atoms are picked with probability proportional to their weight.
pub fn resample_indices(dist: &DistanceDistribution, plan: &ResamplePlan) -> Result<Vec<Vec<usize>>> {
    let mut sampler = Sampler::new(weight_units(dist.weights()), plan)?;
    Ok((0..plan.replicates as u64)
        .map(|i| {
            let mut out = Vec::with_capacity(plan.sample_size);
            sampler.draw(&mut replicate_rng(plan.seed, i), &mut out);
            out
        })
        .collect())
}

pub(crate) fn replicate_distribution(dist: &DistanceDistribution, indices: &[usize]) -> DistanceDistribution {
    let share = 1.0 / indices.len() as f64;
    DistanceDistribution::from_weighted(indices.iter().map(|&i| (dist.xs()[i], share)))
        .and_then(|d| d.with_support_max(dist.x_max()))
        .expect("replicate atoms come from a valid distribution")
}

/// Lazily yields the replicate distributions of `plan`.
///
/// Each replicate gives its atoms equal weight `1/N` and keeps the parent's
/// support maximum `x_M`: the farthest voter in the territory does not move
/// because a sample missed them.
pub fn resample<'a>(
    dist: &'a DistanceDistribution,
    plan: &ResamplePlan,
) -> Result<impl Iterator<Item = DistanceDistribution> + 'a> {
    let mut sampler = Sampler::new(weight_units(dist.weights()), plan)?;
    let plan = *plan;
    let mut buf = Vec::with_capacity(plan.sample_size);
    Ok((0..plan.replicates as u64).map(move |i| {
        sampler.draw(&mut replicate_rng(plan.seed, i), &mut buf);
        replicate_distribution(dist, &buf)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist(pairs: &[(f64, f64)]) -> DistanceDistribution {
        DistanceDistribution::from_weighted(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn fenwick_matches_linear_scan() {
        let values = [3u64, 0, 5, 1, 7, 2, 9];
        let mut tree = Fenwick::new(&values);
        let mut live = values.to_vec();
        for (remove, _) in [(4usize, ()), (0, ()), (6, ())] {
            for target in 0..live.iter().sum::<u64>() {
                let mut acc = 0;
                let want = live.iter().position(|&v| {
                    acc += v;
                    acc > target
                });
                assert_eq!(Some(tree.find(target)), want);
            }
            tree.add(remove, live[remove], true);
            live[remove] = 0;
        }
    }

    #[test]
    fn restores_tree_after_each_replicate() {
        let units = vec![1u64 << 50, 3, 1 << 40, 77, 12345];
        let plan = ResamplePlan::new(ResampleMode::Subsample, 4, 1, 9);
        let mut sampler = Sampler::new(units.clone(), &plan).unwrap();
        let before = sampler.tree.clone().unwrap().tree;
        let mut out = Vec::new();
        for i in 0..50 {
            sampler.draw(&mut replicate_rng(9, i), &mut out);
            assert_eq!(sampler.tree.as_ref().unwrap().tree, before);
        }
    }

    #[test]
    fn deterministic() {
        let d = dist(&[(1.0, 0.2), (4.0, 0.3), (9.0, 0.5)]);
        for mode in [ResampleMode::Bootstrap, ResampleMode::Subsample] {
            let plan = ResamplePlan::new(mode, 3, 100, 5);
            let a: Vec<_> = resample(&d, &plan).unwrap().collect();
            let b: Vec<_> = resample(&d, &plan).unwrap().collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn full_subsample_is_permutation() {
        let d = dist(&[(1.0, 0.1), (2.0, 0.2), (3.0, 0.3), (4.0, 0.4)]);
        let plan = ResamplePlan::new(ResampleMode::Subsample, 4, 200, 1);
        for mut idx in resample_indices(&d, &plan).unwrap() {
            idx.sort_unstable();
            assert_eq!(idx, vec![0, 1, 2, 3]);
        }
        for r in resample(&d, &plan).unwrap() {
            let mut xs = r.xs().to_vec();
            xs.sort_by(f64::total_cmp);
            assert_eq!(xs, d.xs());
            assert_eq!(r.x_max(), d.x_max());
        }
    }

    #[test]
    fn oversized_subsample_rejected() {
        let d = dist(&[(1.0, 0.5), (2.0, 0.5)]);
        assert!(resample(&d, &ResamplePlan::new(ResampleMode::Subsample, 3, 1, 0)).is_err());
        assert!(resample(&d, &ResamplePlan::new(ResampleMode::Bootstrap, 3, 1, 0)).is_ok());
        assert!(resample(&d, &ResamplePlan::new(ResampleMode::Bootstrap, 1, 1, 0)).is_err());
        assert!(resample(&d, &ResamplePlan::new(ResampleMode::Bootstrap, 2, 0, 0)).is_err());
    }

    #[test]
    fn bootstrap_mean_is_unbiased() {
        let atoms: Vec<(f64, f64)> = (0..50).map(|i| (i as f64, 1.0 + (i % 7) as f64)).collect();
        let d = dist(&atoms);
        let n = 30;
        let b = 10_000;
        let plan = ResamplePlan::new(ResampleMode::Bootstrap, n, b, 2024);
        let means: Vec<f64> = resample(&d, &plan).unwrap().map(|r| r.mean()).collect();
        let grand = means.iter().sum::<f64>() / b as f64;
        let mu = d.mean();
        let var = d.expect(|x| (x - mu) * (x - mu));
        let se = (var / n as f64 / b as f64).sqrt();
        assert!((grand - mu).abs() < 3.0 * se, "{grand} vs {mu} (se {se})");
    }

    #[test]
    fn subsample_first_draw_follows_weights() {
        let d = dist(&[(1.0, 0.1), (2.0, 0.6), (3.0, 0.3)]);
        let plan = ResamplePlan::new(ResampleMode::Subsample, 2, 20_000, 11);
        let mut counts = [0usize; 3];
        for idx in resample_indices(&d, &plan).unwrap() {
            counts[idx[0]] += 1;
        }
        for (c, w) in counts.iter().zip([0.1, 0.6, 0.3]) {
            let p = *c as f64 / 20_000.0;
            assert!((p - w).abs() < 4.0 * (w * (1.0 - w) / 20_000.0f64).sqrt());
        }
    }

    proptest! {
        #[test]
        fn subsample_draws_are_distinct(
            weights in prop::collection::vec(1e-9f64..1.0, 2..60),
            size in 2usize..60,
            seed in any::<u64>(),
        ) {
            let atoms: Vec<(f64, f64)> = weights.iter().enumerate().map(|(i, &w)| (i as f64, w)).collect();
            let d = dist(&atoms);
            let size = size.min(d.len());
            let plan = ResamplePlan::new(ResampleMode::Subsample, size, 5, seed);
            for mut idx in resample_indices(&d, &plan).unwrap() {
                prop_assert_eq!(idx.len(), size);
                idx.sort_unstable();
                idx.dedup();
                prop_assert_eq!(idx.len(), size);
                prop_assert!(idx.iter().all(|&i| i < d.len()));
            }
        }
    }
}
