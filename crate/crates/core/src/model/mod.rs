//! Preference and counting models, closed-form moment conditions and the
//! geodemography-independent preference (GIP).
//!
//! Expectations are exact weighted sums over a [`DistanceDistribution`].
//! All conditions are strict inequalities; exact ties count as "not met".

mod forms;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::ballots::BallotSummary;
use crate::geodata::DistanceDistribution;
use crate::{Error, Result};

pub use forms::{BoundModel, FormKind, FormParams, ModelSpec, VALIDATION_GRID};
pub use sweep::{default_grid, sweep_model_params, SweepRow};

fn support(dist: &DistanceDistribution) -> Result<f64> {
    let x_max = dist.x_max();
    if x_max > 0.0 {
        Ok(x_max)
    } else {
        Err(Error::Degenerate("support maximum x_M is zero"))
    }
}

/// `E(X − x_M/2)`; positive when the population alone hands H a fair win in
/// the all-geodemographics extreme.
pub fn moment_fair_win(dist: &DistanceDistribution) -> Result<f64> {
    let half = support(dist)? / 2.0;
    Ok(dist.expect(|x| x - half))
}

/// `E[(X − x_M/2)(X − x_M)]`; positive when N can lead at half-time in the
/// all-geodemographics extreme.
pub fn moment_halftime_lead(dist: &DistanceDistribution) -> Result<f64> {
    let x_max = support(dist)?;
    let half = x_max / 2.0;
    Ok(dist.expect(|x| (x - half) * (x - x_max)))
}

/// Both all-geodemographics conditions hold (strictly). Degenerate
/// distributions fail.
pub fn conjecture_all_geo(dist: &DistanceDistribution) -> bool {
    all_geo_signs(dist) == (true, true)
}

/// `(fair win, half-time lead)` condition outcomes.
pub fn all_geo_signs(dist: &DistanceDistribution) -> (bool, bool) {
    match (moment_fair_win(dist), moment_halftime_lead(dist)) {
        (Ok(a), Ok(b)) => (a > 0.0, b > 0.0),
        _ => (false, false),
    }
}

/// Lower end of the GIP window,
/// `E[(X − x_M/2)(X − x_M)] / E(X − x_M) − E(X − x_M/2)`, which equals
/// `Var(X)/(E[X] − x_M) ≤ 0`.
pub fn gip_lower_bound(dist: &DistanceDistribution) -> Result<f64> {
    let x_max = support(dist)?;
    let below = dist.expect(|x| x - x_max);
    if below == 0.0 {
        return Err(Error::Degenerate("all mass sits at x_M"));
    }
    Ok(moment_halftime_lead(dist)? / below - moment_fair_win(dist)?)
}

/// The three moment summaries reported per analysis cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub x_max: f64,
    pub fair_win: Option<f64>,
    pub halftime_lead: Option<f64>,
    pub gip_lower_bound: Option<f64>,
}

impl Moments {
    pub fn of(dist: &DistanceDistribution) -> Self {
        Self {
            mean: dist.mean(),
            x_max: dist.x_max(),
            fair_win: moment_fair_win(dist).ok(),
            halftime_lead: moment_halftime_lead(dist).ok(),
            gip_lower_bound: gip_lower_bound(dist).ok(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.gip_lower_bound.is_none()
    }
}

/// Half-time vote shares `(E[f_H g], E[f_N g])`.
pub fn eval_halftime_shares(spec: &ModelSpec, dist: &DistanceDistribution) -> Result<(f64, f64)> {
    let m = spec.bind(support(dist)?)?;
    Ok((dist.expect(|x| m.f_h(x) * m.g(x)), dist.expect(|x| m.f_n(x) * m.g(x))))
}

/// Final vote shares `(E[f_H], E[f_N])`.
pub fn eval_final_shares(spec: &ModelSpec, dist: &DistanceDistribution) -> Result<(f64, f64)> {
    let m = spec.bind(support(dist)?)?;
    Ok((dist.expect(|x| m.f_h(x)), dist.expect(|x| m.f_n(x))))
}

/// Expectations of the model components under `dist`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentMoments {
    pub e_h: f64,
    pub e_g: f64,
    pub e_gh: f64,
}

impl ComponentMoments {
    pub fn of(model: &BoundModel, dist: &DistanceDistribution) -> Self {
        Self {
            e_h: dist.expect(|x| model.h(x)),
            e_g: dist.expect(|x| model.g(x)),
            e_gh: dist.expect(|x| model.g(x) * model.h(x)),
        }
    }

    /// General all-geodemographics turnaround: `E[h] > 0` and `E[g h] < 0`.
    pub fn turnaround(&self) -> bool {
        self.e_h > 0.0 && self.e_gh < 0.0
    }
}

/// GIP implied by the half-time margin: `ε = c Δ − E[h g]/E[g]`.
pub fn gip_estimate(spec: &ModelSpec, dist: &DistanceDistribution, summary: &BallotSummary) -> Result<f64> {
    let m = spec.bind(support(dist)?)?;
    let cm = ComponentMoments::of(&m, dist);
    if cm.e_g == 0.0 {
        return Err(Error::Degenerate("E[g(X)] is zero"));
    }
    Ok(spec.c * summary.delta - cm.e_gh / cm.e_g)
}

/// General fair-win condition given the half-time margin:
/// `c Δ E[g] > E[h g] − E[h] E[g]`, valid for any `h`, `g`.
pub fn general_win_condition(spec: &ModelSpec, dist: &DistanceDistribution, summary: &BallotSummary) -> Result<bool> {
    general_win_condition_delta(spec, dist, summary.delta)
}

pub fn general_win_condition_delta(spec: &ModelSpec, dist: &DistanceDistribution, delta: f64) -> Result<bool> {
    let m = spec.bind(support(dist)?)?;
    let cm = ComponentMoments::of(&m, dist);
    Ok(spec.c * delta * cm.e_g > cm.e_gh - cm.e_h * cm.e_g)
}

/// Lower end of the window `L < (c/m) Δ < 0` for fits of share on the
/// form's [`BoundModel::regressor`]: `Cov(ψ(X), g(X)) / E[g(X)]`.
///
/// For `Linear` this is [`gip_lower_bound`].
pub fn window_lower_bound(spec: &ModelSpec, dist: &DistanceDistribution) -> Result<f64> {
    if let FormParams::Linear { .. } = spec.params {
        if spec.g_vanishes_at_xm {
            return gip_lower_bound(dist);
        }
    }
    let m = spec.bind(support(dist)?)?;
    let e_g = dist.expect(|x| m.g(x));
    if e_g == 0.0 {
        return Err(Error::Degenerate("E[g(X)] is zero"));
    }
    let e_psi = dist.expect(|x| m.regressor(x));
    Ok(dist.expect(|x| (m.regressor(x) - e_psi) * m.g(x)) / e_g)
}

#[cfg(test)]
mod tests;
