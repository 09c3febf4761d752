use serde::{Deserialize, Serialize};

use super::{ComponentMoments, FormKind, FormParams, ModelSpec};
use crate::geodata::DistanceDistribution;
use crate::numeric::linspace;
use crate::Result;

/// One grid point of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub form: FormKind,
    pub param1: f64,
    pub param2: Option<f64>,
    pub e_h: f64,
    pub e_gh: f64,
    /// `E[h] > 0` and `E[g h] < 0`: the turnaround is possible.
    pub flag: bool,
}

/// Evaluates `E[h(X)]` and `E[g(X)h(X)]` for every spec on the grid.
pub fn sweep_model_params(grid: &[ModelSpec], dist: &DistanceDistribution) -> Result<Vec<SweepRow>> {
    grid.iter()
        .map(|spec| {
            let model = spec.bind(dist.x_max())?;
            let cm = ComponentMoments::of(&model, dist);
            let (param1, param2) = spec.params.params();
            Ok(SweepRow { form: spec.params.kind(), param1, param2, e_h: cm.e_h, e_gh: cm.e_gh, flag: cm.turnaround() })
        })
        .collect()
}

/// Default sweep grids.
///
/// * `Linear`: 41 slopes whose total rise `m x_M` spans `[−1, 1]`.
/// * `Exp1`: 31 rates with `log10 r ∈ [0, 3]` (1 km to 1000 km).
/// * `Exp2`: 16 × 16 rates over the same range for `r_h` and `r_g`.
/// * `Logarithmic`: 21 scales with `log10 s ∈ [−1, 3]`.
/// * `PowerLaw`: 21 exponents with `log10 k ∈ [−1, 1]`.
///
/// Non-linear forms use the largest `|h|` that `base.c` and `base.epsilon`
/// allow; the sign of the conditions does not depend on it.
pub fn default_grid(kind: FormKind, x_max: f64, base: &ModelSpec) -> Vec<ModelSpec> {
    let with = |params| ModelSpec { params, ..*base };
    let pow10 = |lo, hi, n| linspace(lo, hi, n).into_iter().map(|e: f64| 10f64.powf(e)).collect::<Vec<_>>();
    match kind {
        FormKind::Linear => {
            // a rise of 1 over [0, x_M] needs |h| = 1/2, which fits only when
            // the amplitude allows it
            let reach = (2.0 * base.amplitude()).min(1.0);
            linspace(-reach, reach, 41)
                .into_iter()
                .map(|rise| with(FormParams::Linear { m: rise / x_max, d: None }))
                .collect()
        }
        FormKind::Exp1 => pow10(0.0, 3.0, 31).into_iter().map(|rate| with(FormParams::Exp1 { rate })).collect(),
        FormKind::Exp2 => {
            let rates = pow10(0.0, 3.0, 16);
            rates
                .iter()
                .flat_map(|&rate_h| rates.iter().map(move |&rate_g| (rate_h, rate_g)))
                .map(|(rate_h, rate_g)| with(FormParams::Exp2 { rate_h, rate_g }))
                .collect()
        }
        FormKind::Logarithmic => {
            pow10(-1.0, 3.0, 21).into_iter().map(|scale| with(FormParams::Logarithmic { scale })).collect()
        }
        FormKind::PowerLaw => {
            pow10(-1.0, 1.0, 21).into_iter().map(|exponent| with(FormParams::PowerLaw { exponent })).collect()
        }
    }
}
