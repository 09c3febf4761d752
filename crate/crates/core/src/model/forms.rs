use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::numeric::linspace;
use crate::{Error, Result};

/// Points used to validate ranges of `f_H`, `f_N` and `g`.
pub const VALIDATION_GRID: usize = 1024;
const RANGE_SLACK: f64 = 1e-12;

fn default_slope() -> f64 {
    1e-3
}

/// Functional form of the geodemography component `h` and the half-time
/// counting probability `g`, with form-specific parameters.
///
/// Distances and rates are in km; the linear slope `m` is in share per km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum FormParams {
    /// `h(x) = m (x − x_M/2)`, `g(x) = 1 − x/x_M` (or `1 − d x`).
    Linear {
        #[serde(default = "default_slope")]
        m: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<f64>,
    },
    /// Core `ln(1 + x/scale)`.
    Logarithmic { scale: f64 },
    /// Core `(x/x_M)^exponent`.
    PowerLaw { exponent: f64 },
    /// Core `exp(x/rate)` for `h`, `exp(−x/rate)` for `g`.
    Exp1 { rate: f64 },
    /// As `Exp1` with separate rates for `h` and `g`.
    Exp2 { rate_h: f64, rate_g: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormKind {
    Linear,
    Logarithmic,
    PowerLaw,
    Exp1,
    Exp2,
}

impl FormKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FormKind::Linear => "linear",
            FormKind::Logarithmic => "logarithmic",
            FormKind::PowerLaw => "power-law",
            FormKind::Exp1 => "exp1",
            FormKind::Exp2 => "exp2",
        }
    }
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "linear" => FormKind::Linear,
            "logarithmic" | "log" => FormKind::Logarithmic,
            "power-law" | "power" => FormKind::PowerLaw,
            "exp1" => FormKind::Exp1,
            "exp2" => FormKind::Exp2,
            other => return Err(Error::Config(format!("unknown form `{other}`"))),
        })
    }
}

impl FormParams {
    pub fn kind(&self) -> FormKind {
        match self {
            FormParams::Linear { .. } => FormKind::Linear,
            FormParams::Logarithmic { .. } => FormKind::Logarithmic,
            FormParams::PowerLaw { .. } => FormKind::PowerLaw,
            FormParams::Exp1 { .. } => FormKind::Exp1,
            FormParams::Exp2 { .. } => FormKind::Exp2,
        }
    }

    /// `(param1, param2)` as reported in sweep tables.
    pub fn params(&self) -> (f64, Option<f64>) {
        match *self {
            FormParams::Linear { m, .. } => (m, None),
            FormParams::Logarithmic { scale } => (scale, None),
            FormParams::PowerLaw { exponent } => (exponent, None),
            FormParams::Exp1 { rate } => (rate, None),
            FormParams::Exp2 { rate_h, rate_g } => (rate_h, Some(rate_g)),
        }
    }

    /// Stable label used in reports, e.g. `exp2(50,20)`.
    pub fn label(&self) -> String {
        match *self {
            FormParams::Linear { .. } => "linear".to_string(),
            FormParams::Logarithmic { scale } => format!("logarithmic({scale})"),
            FormParams::PowerLaw { exponent } => format!("power-law({exponent})"),
            FormParams::Exp1 { rate } => format!("exp1({rate})"),
            FormParams::Exp2 { rate_h, rate_g } => format!("exp2({rate_h},{rate_g})"),
        }
    }
}

/// Parses `linear[:m]`, `log:<scale>`, `power:<k>`, `exp1:<r>`, `exp2:<rh>:<rg>`.
impl FromStr for FormParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let kind: FormKind = parts.next().unwrap_or_default().parse()?;
        let nums: Vec<f64> = parts
            .map(|p| p.parse::<f64>().map_err(|_| Error::Config(format!("bad number `{p}` in form `{s}`"))))
            .collect::<Result<_>>()?;
        let need = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!("form `{s}` expects {n} parameter(s)")))
            }
        };
        Ok(match kind {
            FormKind::Linear => match nums.as_slice() {
                [] => FormParams::Linear { m: default_slope(), d: None },
                [m] => FormParams::Linear { m: *m, d: None },
                _ => return Err(Error::Config(format!("form `{s}` expects at most 1 parameter"))),
            },
            FormKind::Logarithmic => {
                need(1)?;
                FormParams::Logarithmic { scale: nums[0] }
            }
            FormKind::PowerLaw => {
                need(1)?;
                FormParams::PowerLaw { exponent: nums[0] }
            }
            FormKind::Exp1 => {
                need(1)?;
                FormParams::Exp1 { rate: nums[0] }
            }
            FormKind::Exp2 => {
                need(2)?;
                FormParams::Exp2 { rate_h: nums[0], rate_g: nums[1] }
            }
        })
    }
}

fn default_c() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

/// Complete preference/counting model: `f_H = c + ε + h`, `f_N = c − ε − h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub params: FormParams,
    /// Axis of reflection between `f_H` and `f_N`.
    #[serde(default = "default_c")]
    pub c: f64,
    /// Geodemography-independent preference; negative favours N.
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_true")]
    pub g_vanishes_at_xm: bool,
}

impl ModelSpec {
    pub fn new(params: FormParams) -> Self {
        Self { params, c: default_c(), epsilon: 0.0, g_vanishes_at_xm: true }
    }

    pub fn linear(m: f64) -> Self {
        Self::new(FormParams::Linear { m, d: None })
    }

    /// Linear model from the lower and upper bounds of `f_H`/`f_N`:
    /// `f_H = a + m x`, `f_N = b − m x` with `m = (b − a)/x_M`, `c = (a + b)/2`.
    pub fn linear_from_bounds(a: f64, b: f64, x_max: f64) -> Self {
        Self { c: (a + b) / 2.0, ..Self::linear((b - a) / x_max) }
    }

    /// Largest `|h|` keeping both `f_H` and `f_N` inside `[0, 1]`.
    pub fn amplitude(&self) -> f64 {
        let (c, e) = (self.c, self.epsilon);
        (c + e).min(1.0 - c - e).min(c - e).min(1.0 - c + e)
    }

    /// Binds the model to a support maximum, validating every range
    /// constraint on a uniform grid.
    pub fn bind(&self, x_max: f64) -> Result<BoundModel> {
        if !(x_max > 0.0) || !x_max.is_finite() {
            return Err(Error::Degenerate("support maximum x_M is zero"));
        }
        if !(self.c > 0.0 && self.c < 1.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidSpec(format!("c = {} must lie in (0, 1)", self.c)));
        }
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} = {v} must be positive")))
            }
        };
        let kernel = match self.params {
            FormParams::Linear { m, d } => {
                if !m.is_finite() {
                    return Err(Error::InvalidSpec("slope must be finite".into()));
                }
                let d = if self.g_vanishes_at_xm { 1.0 / x_max } else { d.unwrap_or(0.0) };
                if !(d >= 0.0 && d * x_max <= 1.0 + RANGE_SLACK) {
                    return Err(Error::InvalidSpec(format!("g slope d = {d} leaves [0, 1] on [0, x_M]")));
                }
                Kernel::Linear { m, d }
            }
            FormParams::Logarithmic { scale } => {
                positive(scale, "scale")?;
                Kernel::shaped(Core::Log { scale }, Core::Log { scale }, x_max, self.amplitude())?
            }
            FormParams::PowerLaw { exponent } => {
                positive(exponent, "exponent")?;
                Kernel::shaped(Core::Power { exponent }, Core::Power { exponent }, x_max, self.amplitude())?
            }
            FormParams::Exp1 { rate } => {
                positive(rate, "rate")?;
                Kernel::shaped(Core::Exp { rate }, Core::Exp { rate }, x_max, self.amplitude())?
            }
            FormParams::Exp2 { rate_h, rate_g } => {
                positive(rate_h, "rate_h")?;
                positive(rate_g, "rate_g")?;
                Kernel::shaped(Core::Exp { rate: rate_h }, Core::Exp { rate: rate_g }, x_max, self.amplitude())?
            }
        };
        let bound = BoundModel { spec: *self, x_max, kernel };
        bound.validate_ranges()?;
        Ok(bound)
    }
}

/// Monotone increasing core shapes behind the non-linear forms.
#[derive(Debug, Clone, Copy)]
enum Core {
    Log { scale: f64 },
    Power { exponent: f64 },
    Exp { rate: f64 },
}

impl Core {
    /// `φ(x) − φ(0)`: the core anchored at zero.
    fn anchored(&self, x: f64, x_max: f64) -> f64 {
        match *self {
            Core::Log { scale } => (x / scale).ln_1p(),
            Core::Power { exponent } => (x / x_max).powf(exponent),
            // exp((x − x_M)/r) − exp(−x_M/r), scaled by exp(−x_M/r) to stay finite
            Core::Exp { rate } => ((x - x_max) / rate).exp_m1() - (-x_max / rate).exp_m1(),
        }
    }

    /// `φ(x) − (1/x_M)∫₀^{x_M} φ`: the zero-mean shift, in closed form.
    fn centered(&self, x: f64, x_max: f64) -> f64 {
        match *self {
            Core::Log { scale } => {
                let t = x_max / scale;
                let mean = if t < 1e-3 {
                    t / 2.0 - t * t / 6.0 + t.powi(3) / 12.0 - t.powi(4) / 20.0
                } else {
                    (1.0 + 1.0 / t) * t.ln_1p() - 1.0
                };
                (x / scale).ln_1p() - mean
            }
            Core::Power { exponent } => (x / x_max).powf(exponent) - 1.0 / (exponent + 1.0),
            Core::Exp { rate } => {
                // expm1((x − x_M)/r) + (1 − (1 − e^{−u})/u), u = x_M/r
                let u = x_max / rate;
                let shortfall = if u < 1e-3 {
                    u / 2.0 - u * u / 6.0 + u.powi(3) / 24.0 - u.powi(4) / 120.0
                } else {
                    1.0 + (-u).exp_m1() / u
                };
                ((x - x_max) / rate).exp_m1() + shortfall
            }
        }
    }

    /// Decreasing counting probability with `g(0) = 1`; vanishes at `x_M`
    /// when `vanish` is set.
    fn counting(&self, x: f64, x_max: f64, vanish: bool) -> f64 {
        match (*self, vanish) {
            (Core::Log { scale }, true) => 1.0 - (x / scale).ln_1p() / (x_max / scale).ln_1p(),
            (Core::Log { scale }, false) => 1.0 / (1.0 + (x / scale).ln_1p()),
            (Core::Power { exponent }, true) => 1.0 - (x / x_max).powf(exponent),
            (Core::Power { exponent }, false) => 1.0 / (1.0 + (x / x_max).powf(exponent)),
            (Core::Exp { rate }, true) => {
                let tail = (-x_max / rate).exp_m1();
                ((-x / rate).exp_m1() - tail) / -tail
            }
            (Core::Exp { rate }, false) => (-x / rate).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Kernel {
    Linear { m: f64, d: f64 },
    Shaped { h: Core, g: Core, scale: f64 },
}

impl Kernel {
    fn shaped(h: Core, g: Core, x_max: f64, amplitude: f64) -> Result<Self> {
        if !(amplitude > 0.0) {
            return Err(Error::InvalidSpec(format!("c and epsilon leave no room for h (amplitude {amplitude})")));
        }
        let span = h.centered(0.0, x_max).abs().max(h.centered(x_max, x_max).abs());
        if !(span > 0.0) || !span.is_finite() {
            return Err(Error::InvalidSpec("h core is flat on [0, x_M]".into()));
        }
        Ok(Kernel::Shaped { h, g, scale: amplitude / span })
    }
}

/// A [`ModelSpec`] evaluated against a concrete support `[0, x_M]`.
#[derive(Debug, Clone, Copy)]
pub struct BoundModel {
    spec: ModelSpec,
    x_max: f64,
    kernel: Kernel,
}

impl BoundModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Geodemography component: zero mean on `[0, x_M]`, net increasing.
    pub fn h(&self, x: f64) -> f64 {
        match self.kernel {
            Kernel::Linear { m, .. } => m * (x - self.x_max / 2.0),
            Kernel::Shaped { h, scale, .. } => scale * h.centered(x, self.x_max),
        }
    }

    /// Probability that a vote cast at distance `x` was counted by half-time.
    pub fn g(&self, x: f64) -> f64 {
        match self.kernel {
            Kernel::Linear { d, .. } => 1.0 - d * x,
            Kernel::Shaped { g, .. } => g.counting(x, self.x_max, self.spec.g_vanishes_at_xm),
        }
    }

    pub fn f_h(&self, x: f64) -> f64 {
        self.spec.c + self.spec.epsilon + self.h(x)
    }

    pub fn f_n(&self, x: f64) -> f64 {
        self.spec.c - self.spec.epsilon - self.h(x)
    }

    /// Shape of `h` anchored at zero, in the form's natural units; the
    /// regressor for share-vs-distance fits (plain distance for `Linear`).
    pub fn regressor(&self, x: f64) -> f64 {
        match self.kernel {
            Kernel::Linear { .. } => x,
            Kernel::Shaped { h, .. } => h.anchored(x, self.x_max),
        }
    }

    fn validate_ranges(&self) -> Result<()> {
        let inside = |v: f64| (-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v);
        for x in linspace(0.0, self.x_max, VALIDATION_GRID) {
            let (fh, fn_, g) = (self.f_h(x), self.f_n(x), self.g(x));
            if !(inside(fh) && inside(fn_) && inside(g)) {
                return Err(Error::InvalidSpec(format!(
                    "{} leaves [0, 1] at x = {x:.3} km (f_H = {fh:.4}, f_N = {fn_:.4}, g = {g:.4})",
                    self.spec.params.label()
                )));
            }
        }
        Ok(())
    }
}
