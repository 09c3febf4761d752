use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::replicate_rng;
use super::sampler::Sampler;
use super::ResamplePlan;
use crate::{Error, Result};

/// Slopes smaller than this in magnitude leave `c/m` undefined.
pub const MIN_SLOPE: f64 = 1e-15;

/// Incumbent share observed at one tally unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharePoint {
    pub x: f64,
    pub share: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    /// Each point weighted by its two-candidate vote total.
    #[default]
    VoteTotals,
    Unweighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub c_hat: f64,
    pub m_hat: f64,
    /// `c_hat / m_hat`, absent for a flat fit.
    pub ratio: Option<f64>,
    pub weight_scheme: WeightScheme,
}

/// Weighted least squares of share on distance. `c_hat` is the fitted share
/// at `x = 0` and `m_hat` the slope.
pub fn fit_h_linear(points: &[SharePoint], scheme: WeightScheme) -> Result<FitResult> {
    let first = points.first().ok_or(Error::Empty("share points"))?;
    for p in points {
        if !p.x.is_finite() || !p.share.is_finite() || !p.weight.is_finite() || p.weight < 0.0 {
            return Err(Error::InvalidSpec(format!("bad share point {p:?}")));
        }
    }
    if points.iter().all(|p| p.x == first.x) {
        return Err(Error::Degenerate("share fit needs at least two distinct distances"));
    }
    // single-pass weighted means and co-moments (West's update)
    let (mut total, mut x_bar, mut y_bar, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let w = match scheme {
            WeightScheme::VoteTotals => p.weight,
            WeightScheme::Unweighted => 1.0,
        };
        if w == 0.0 {
            continue;
        }
        total += w;
        let dx = p.x - x_bar;
        let dy = p.share - y_bar;
        let r = w / total;
        x_bar += r * dx;
        y_bar += r * dy;
        sxx += w * dx * (p.x - x_bar);
        sxy += w * dx * (p.share - y_bar);
    }
    if !(total > 0.0) {
        return Err(Error::Degenerate("share fit has no weight"));
    }
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("share fit needs weight on two distinct distances"));
    }
    let m_hat = sxy / sxx;
    let c_hat = y_bar - m_hat * x_bar;
    let ratio = (m_hat.abs() >= MIN_SLOPE).then(|| c_hat / m_hat);
    Ok(FitResult { c_hat, m_hat, ratio, weight_scheme: scheme })
}

/// Bootstrapped `c/m` ratios in replicate order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    /// `None` where the replicate fit was flat or impossible.
    pub ratios: Vec<Option<f64>>,
}

impl RatioSample {
    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.ratios.iter().flatten().copied()
    }

    pub fn undefined(&self) -> usize {
        self.ratios.iter().filter(|r| r.is_none()).count()
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }
}

/// Refits the share line to `plan.replicates` resamples of the tally units
/// and collects `c_hat / m_hat`.
///
/// Units are drawn uniformly; population weighting enters through the fit.
pub fn bootstrap_c_over_m(points: &[SharePoint], plan: &ResamplePlan, scheme: WeightScheme) -> Result<RatioSample> {
    let sampler = Sampler::new(vec![1; points.len()], plan)?;
    let one = |(s, buf, picked): &mut (Sampler, Vec<usize>, Vec<SharePoint>), i: u64| {
        s.draw(&mut replicate_rng(plan.seed, i), buf);
        picked.clear();
        picked.extend(buf.iter().map(|&j| points[j]));
        fit_h_linear(picked, scheme).ok().and_then(|f| f.ratio)
    };
    let init = || (sampler.clone(), Vec::with_capacity(plan.sample_size), Vec::with_capacity(plan.sample_size));
    let range = 0..plan.replicates as u64;
    let ratios = if plan.parallel {
        range.into_par_iter().map_init(init, one).collect()
    } else {
        let mut state = init();
        range.map(|i| one(&mut state, i)).collect()
    };
    Ok(RatioSample { ratios })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowEstimate {
    pub fraction: f64,
    /// False when the half-time margin is not negative, so there is no
    /// turnaround to explain.
    pub applicable: bool,
    pub considered: usize,
    pub undefined: usize,
}

/// Fraction of ratios `ρ` with `lower < ρ·delta < 0`.
///
/// `lower` is the window's lower bound (nonpositive) and `delta` the
/// normalised half-time margin.
pub fn probability_gip_window(ratios: &RatioSample, lower: f64, delta: f64) -> WindowEstimate {
    let considered = ratios.len() - ratios.undefined();
    if !(delta < 0.0) {
        return WindowEstimate { fraction: 0.0, applicable: false, considered, undefined: ratios.undefined() };
    }
    let inside = ratios
        .defined()
        .filter(|rho| {
            let middle = rho * delta;
            lower < middle && middle < 0.0
        })
        .count();
    let fraction = if considered == 0 { 0.0 } else { inside as f64 / considered as f64 };
    WindowEstimate { fraction, applicable: true, considered, undefined: ratios.undefined() }
}
