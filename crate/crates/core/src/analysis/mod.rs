//! End-to-end runs: load data, place centers for every requested count,
//! evaluate the three prongs per region and country-wide, and emit reports.

mod report;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::ballots::{load_tallies, summarize, BallotSummary, Scope, TallyRow};
use crate::fair_win::{fair_win_probability, fair_win_probability_shares, LogProb};
use crate::geodata::{
    distance_distribution, load_settlements, nearest_center_distances, place_voting_centers, DistanceDistribution,
    Geodata, LoadOptions, Placement, VotingCenters,
};
use crate::inference::{
    bootstrap_c_over_m, fit_h_linear, probability_all_geo, probability_gip_window, AllGeoEstimate, FitResult,
    RatioSample, ResampleMode, ResamplePlan, SharePoint, WeightScheme, WindowEstimate,
};
use crate::model::{default_grid, sweep_model_params, window_lower_bound, FormKind, ModelSpec, Moments, SweepRow};
use crate::{Error, Result};

pub use report::{emit_choropleth, emit_ratios, emit_replicates, emit_sweep, ChoroplethLayer};

/// Bumped whenever the JSON report layout changes.
pub const REPORT_VERSION: u32 = 1;

/// Unit id used for country-wide rows.
pub const COUNTRY: &str = "country";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScopeSelection {
    PerRegion,
    Country,
    #[default]
    Both,
}

impl ScopeSelection {
    fn regions(&self) -> bool {
        matches!(self, ScopeSelection::PerRegion | ScopeSelection::Both)
    }

    fn country(&self) -> bool {
        matches!(self, ScopeSelection::Country | ScopeSelection::Both)
    }
}

impl std::str::FromStr for ScopeSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "per-region" | "region" | "regions" => Ok(ScopeSelection::PerRegion),
            "country" => Ok(ScopeSelection::Country),
            "both" => Ok(ScopeSelection::Both),
            other => Err(Error::Config(format!("unknown scope {other:?}"))),
        }
    }
}

fn default_nvc() -> Vec<usize> {
    vec![1, 3, 5]
}

fn default_forms() -> Vec<ModelSpec> {
    vec![ModelSpec::linear(1e-3)]
}

fn default_c() -> f64 {
    0.5
}

/// Everything a run needs besides the data itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settlements_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tallies_path: Option<PathBuf>,
    #[serde(default = "default_nvc")]
    pub nvc: Vec<usize>,
    #[serde(default)]
    pub placement: Placement,
    #[serde(default = "default_forms", alias = "form")]
    pub forms: Vec<ModelSpec>,
    #[serde(default)]
    pub scope: ScopeSelection,
    #[serde(default)]
    pub plan: ResamplePlan,
    /// Axis of reflection `c`, applied to every form.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub min_population: u64,
    #[serde(default)]
    pub weighting: WeightScheme,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            settlements_path: None,
            tallies_path: None,
            nvc: default_nvc(),
            placement: Placement::default(),
            forms: default_forms(),
            scope: ScopeSelection::default(),
            plan: ResamplePlan::default(),
            c: default_c(),
            min_population: 0,
            weighting: WeightScheme::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.nvc.is_empty() || self.nvc.contains(&0) {
            return Err(Error::Config("nvc values must be at least 1".into()));
        }
        if self.forms.is_empty() {
            return Err(Error::Config("at least one form is required".into()));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::Config(format!("c must lie in (0, 1), got {}", self.c)));
        }
        if self.plan.sample_size < 2 || self.plan.replicates == 0 {
            return Err(Error::InvalidPlan(format!(
                "sample size {} / replicates {} out of range",
                self.plan.sample_size, self.plan.replicates
            )));
        }
        Ok(())
    }

    fn specs(&self) -> Vec<ModelSpec> {
        self.forms.iter().map(|f| ModelSpec { c: self.c, ..*f }).collect()
    }

    fn sorted_nvc(&self) -> Vec<usize> {
        self.nvc.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }
}

/// Prong 1 under both share conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prong1 {
    /// Two-candidate shares over `v = v_H + v_N`.
    pub normalized: LogProb,
    /// Shares of all counted ballots, third parties included.
    pub raw: LogProb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prong3 {
    pub fraction: f64,
    pub applicable: bool,
    pub considered: usize,
    pub undefined_ratios: usize,
    pub share_points: usize,
    /// Fit to all share points of the unit.
    pub fit: Option<FitResult>,
}

/// One (unit, nvc, form) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Region id, or `"country"`.
    pub unit: String,
    pub nvc: usize,
    pub form: String,
    pub model: ModelSpec,
    pub v_h: u64,
    pub v_n: u64,
    pub delta: f64,
    pub prong1: Prong1,
    pub prong2: AllGeoEstimate,
    /// Absent when the unit has fewer than two distinct linked distances
    /// or a degenerate distance law.
    pub prong3: Option<Prong3>,
    pub moments: Moments,
    pub window_lower_bound: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub version: u32,
    pub seed: u64,
    pub placement: Placement,
    pub scope: ScopeSelection,
    pub plan: ResamplePlan,
    pub c: f64,
    pub min_population: u64,
    pub weighting: WeightScheme,
    pub rows: Vec<ReportRow>,
}

impl AnalysisReport {
    pub fn degenerate_cells(&self) -> usize {
        self.rows.iter().filter(|r| r.degenerate).count()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn row(&self, unit: &str, nvc: usize, form: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.unit == unit && r.nvc == nvc && r.form == form)
    }
}

/// Loads both input files named in `config` and runs the analysis.
pub fn run_analysis(config: &RunConfig) -> Result<AnalysisReport> {
    let (geodata, tallies) = load_inputs(config)?;
    run_analysis_on(&geodata, &tallies, config)
}

pub fn load_inputs(config: &RunConfig) -> Result<(Geodata, Vec<TallyRow>)> {
    let settlements =
        config.settlements_path.as_ref().ok_or_else(|| Error::Config("no settlements file given".into()))?;
    let tallies = config.tallies_path.as_ref().ok_or_else(|| Error::Config("no tallies file given".into()))?;
    let geodata = load_settlements(
        BufReader::new(File::open(settlements)?),
        LoadOptions { min_population: config.min_population },
    )?;
    let rows = load_tallies(BufReader::new(File::open(tallies)?))?;
    Ok((geodata, rows))
}

/// Every tally region must exist in the geodata and vice versa, and every
/// linked settlement must exist in the row's region.
fn check_linkage(geodata: &Geodata, tallies: &[TallyRow]) -> Result<()> {
    let mut unmatched = BTreeSet::new();
    let with_tallies: BTreeSet<&str> = tallies.iter().map(|r| r.region_id.as_str()).collect();
    for row in tallies {
        match geodata.region(&row.region_id) {
            None => {
                unmatched.insert(format!("tally region {}", row.region_id));
            }
            Some(region) => {
                if let Some(sid) = &row.settlement_id {
                    if !region.settlements.iter().any(|s| &s.id == sid) {
                        unmatched.insert(format!("settlement {sid} in region {}", row.region_id));
                    }
                }
            }
        }
    }
    for region in &geodata.regions {
        if !with_tallies.contains(region.id.as_str()) {
            unmatched.insert(format!("region {} has no tallies", region.id));
        }
    }
    if unmatched.is_empty() {
        Ok(())
    } else {
        Err(Error::Linkage(unmatched.into_iter().collect()))
    }
}

/// Distances and placement for one center count.
struct Layout {
    centers: Vec<VotingCenters>,
    /// settlement id -> nearest-center distance
    distance: HashMap<String, f64>,
}

fn layout(geodata: &Geodata, nvc: usize, placement: Placement) -> Result<Layout> {
    let mut centers = Vec::with_capacity(geodata.regions.len());
    let mut distance = HashMap::new();
    for region in &geodata.regions {
        let vc = place_voting_centers(region, nvc, placement)?;
        for (s, d) in region.settlements.iter().zip(nearest_center_distances(region, &vc)) {
            distance.insert(s.id.clone(), d);
        }
        centers.push(vc);
    }
    Ok(Layout { centers, distance })
}

fn share_points<'a>(
    rows: impl Iterator<Item = &'a TallyRow>,
    distance: &HashMap<String, f64>,
) -> Vec<(f64, SharePoint)> {
    rows.filter_map(|row| {
        let x = *distance.get(row.settlement_id.as_ref()?)?;
        let votes = row.two_candidate_votes();
        (votes > 0).then(|| (x, SharePoint { x, share: row.votes_h as f64 / votes as f64, weight: votes as f64 }))
    })
    .collect()
}

struct Unit<'a> {
    id: String,
    scope: Scope,
    regions: Vec<&'a crate::geodata::Region>,
}

fn prong1(summary: &BallotSummary) -> Result<Prong1> {
    Ok(Prong1 {
        normalized: fair_win_probability(summary.v_h, summary.v_n)?,
        raw: fair_win_probability_shares(
            summary.raw_share_h,
            summary.raw_share_n,
            (summary.v + summary.v_other) as f64,
        )?,
    })
}

fn prong3(
    spec: &ModelSpec,
    dist: &DistanceDistribution,
    points: &[(f64, SharePoint)],
    summary: &BallotSummary,
    config: &RunConfig,
) -> Result<(Option<Prong3>, Option<f64>, Option<RatioSample>)> {
    let lower = match window_lower_bound(spec, dist) {
        Ok(l) => l,
        Err(Error::Degenerate(_)) => return Ok((None, None, None)),
        Err(e) => return Err(e),
    };
    let model = spec.bind(dist.x_max())?;
    let points: Vec<SharePoint> = points.iter().map(|&(x, p)| SharePoint { x: model.regressor(x), ..p }).collect();
    let first = points.first().map(|p| p.x);
    if points.len() < 2 || points.iter().all(|p| Some(p.x) == first) {
        return Ok((None, Some(lower), None));
    }
    let fit = fit_h_linear(&points, config.weighting).ok();
    let plan = ResamplePlan { mode: ResampleMode::Bootstrap, sample_size: points.len(), ..config.plan };
    let ratios = bootstrap_c_over_m(&points, &plan, config.weighting)?;
    let WindowEstimate { fraction, applicable, considered, undefined } =
        probability_gip_window(&ratios, lower, summary.delta);
    Ok((
        Some(Prong3 { fraction, applicable, considered, undefined_ratios: undefined, share_points: points.len(), fit }),
        Some(lower),
        Some(ratios),
    ))
}

/// Runs every configured cell on already-loaded data.
///
/// Rows are ordered by unit (regions by id, then the country), then center
/// count ascending, then form in configuration order.
pub fn run_analysis_on(geodata: &Geodata, tallies: &[TallyRow], config: &RunConfig) -> Result<AnalysisReport> {
    config.validate()?;
    check_linkage(geodata, tallies)?;

    let mut units = Vec::new();
    if config.scope.regions() {
        for region in &geodata.regions {
            units.push(Unit { id: region.id.clone(), scope: Scope::Region(region.id.clone()), regions: vec![region] });
        }
    }
    if config.scope.country() {
        units.push(Unit { id: COUNTRY.into(), scope: Scope::Country, regions: geodata.regions.iter().collect() });
    }

    let nvcs = config.sorted_nvc();
    let layouts: BTreeMap<usize, Layout> =
        nvcs.iter().map(|&n| Ok((n, layout(geodata, n, config.placement)?))).collect::<Result<_>>()?;
    let specs = config.specs();

    let mut rows = Vec::new();
    for unit in &units {
        let summary = summarize(tallies, &unit.scope)?;
        let p1 = prong1(&summary)?;
        for &nvc in &nvcs {
            let layout = &layouts[&nvc];
            let dist = distance_distribution(&unit.regions, &layout.centers)?;
            // no geography to exploit: every condition fails without resampling
            let prong2 =
                if dist.x_max() > 0.0 { probability_all_geo(&dist, &config.plan)? } else { AllGeoEstimate::none_met() };
            let moments = Moments::of(&dist);
            let points = share_points(tallies.iter().filter(|r| unit.scope.contains(r)), &layout.distance);
            for spec in &specs {
                let (p3, lower, _) = prong3(spec, &dist, &points, &summary, config)?;
                rows.push(ReportRow {
                    unit: unit.id.clone(),
                    nvc,
                    form: spec.params.label(),
                    model: *spec,
                    v_h: summary.v_h,
                    v_n: summary.v_n,
                    delta: summary.delta,
                    prong1: p1,
                    prong2,
                    prong3: p3,
                    moments,
                    window_lower_bound: lower,
                    degenerate: moments.is_degenerate() || lower.is_none(),
                });
            }
        }
    }

    Ok(AnalysisReport {
        version: REPORT_VERSION,
        seed: config.plan.seed,
        placement: config.placement,
        scope: config.scope,
        plan: config.plan,
        c: config.c,
        min_population: config.min_population,
        weighting: config.weighting,
        rows,
    })
}

/// Distance law of one unit (`"country"` or a region id) at `nvc` centers.
pub fn unit_distribution(
    geodata: &Geodata,
    unit: &str,
    nvc: usize,
    placement: Placement,
) -> Result<DistanceDistribution> {
    let layout = layout(geodata, nvc, placement)?;
    let regions: Vec<_> = if unit == COUNTRY {
        geodata.regions.iter().collect()
    } else {
        vec![geodata.region(unit).ok_or_else(|| Error::Linkage(vec![format!("region {unit}")]))?]
    };
    distance_distribution(&regions, &layout.centers)
}

/// Bootstrapped `c/m` ratios of one unit, for histogram dumps.
pub fn unit_ratios(
    geodata: &Geodata,
    tallies: &[TallyRow],
    unit: &str,
    nvc: usize,
    spec: &ModelSpec,
    config: &RunConfig,
) -> Result<Option<RatioSample>> {
    let layout = layout(geodata, nvc, config.placement)?;
    let dist = unit_distribution(geodata, unit, nvc, config.placement)?;
    let scope = if unit == COUNTRY { Scope::Country } else { Scope::Region(unit.into()) };
    let summary = summarize(tallies, &scope)?;
    let points = share_points(tallies.iter().filter(|r| scope.contains(r)), &layout.distance);
    Ok(prong3(&ModelSpec { c: config.c, ..*spec }, &dist, &points, &summary, config)?.2)
}

/// Default-grid parameter sweeps of the given forms on one unit's law.
pub fn run_sweep(
    geodata: &Geodata,
    unit: &str,
    nvc: usize,
    placement: Placement,
    kinds: &[FormKind],
    base: &ModelSpec,
) -> Result<Vec<SweepRow>> {
    let dist = unit_distribution(geodata, unit, nvc, placement)?;
    let mut rows = Vec::new();
    for &kind in kinds {
        rows.extend(sweep_model_params(&default_grid(kind, dist.x_max(), base), &dist)?);
    }
    Ok(rows)
}
