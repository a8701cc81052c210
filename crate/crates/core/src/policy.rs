//! Irrigation, pruning and planting policies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::garden::{GardenState, LifecycleStage, PlantInstance, PlantTypeSpec};
use crate::light::light_allocation;
use crate::metrics::{max_radii, normalized_coverage, per_type_coverage_from};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrrigationKind {
    /// Fixed dose to every planted, non-dead plant every day.
    BaselineFixed,
    /// Fixed dose or nothing, depending on soil moisture vs. stage target.
    BinaryAnalytic,
    /// Exact deficit volume, capped at `max_dose`.
    ContinuousVariable,
    /// Deficit rounded up onto `discrete_levels`.
    DiscreteVariable,
    /// Sensor-driven threshold controller.
    ClosedLoop,
}

impl IrrigationKind {
    pub const ALL: [IrrigationKind; 5] = [
        IrrigationKind::BaselineFixed,
        IrrigationKind::BinaryAnalytic,
        IrrigationKind::ContinuousVariable,
        IrrigationKind::DiscreteVariable,
        IrrigationKind::ClosedLoop,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            IrrigationKind::BaselineFixed => "baseline",
            IrrigationKind::BinaryAnalytic => "binary",
            IrrigationKind::ContinuousVariable => "continuous",
            IrrigationKind::DiscreteVariable => "discrete",
            IrrigationKind::ClosedLoop => "closed_loop",
        }
    }
}

impl fmt::Display for IrrigationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for IrrigationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "baseline" | "baseline_fixed" => IrrigationKind::BaselineFixed,
            "binary" | "binary_analytic" => IrrigationKind::BinaryAnalytic,
            "continuous" | "continuous_variable" => IrrigationKind::ContinuousVariable,
            "discrete" | "discrete_variable" => IrrigationKind::DiscreteVariable,
            "closed_loop" => IrrigationKind::ClosedLoop,
            other => return Err(Error::config(format!("unknown policy '{other}'"))),
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyBundle {
    pub irrigation: IrrigationKind,
    pub discrete_levels: Vec<f64>,
    pub binary_dose: f64,
    pub max_dose: f64,
    /// Days between pruning sessions; 0 disables pruning.
    pub prune_interval: u32,
    pub prune_start_day: u32,
    pub prune_tolerance: f64,
}

impl Default for PolicyBundle {
    fn default() -> Self {
        Self {
            irrigation: IrrigationKind::BinaryAnalytic,
            discrete_levels: vec![0.0, 66.0, 132.0, 200.0, 266.0, 332.0, 400.0],
            binary_dose: 200.0,
            max_dose: 400.0,
            prune_interval: 3,
            prune_start_day: 0,
            prune_tolerance: 0.2,
        }
    }
}

impl PolicyBundle {
    pub fn validate(&self) -> Result<()> {
        if self.discrete_levels.first() != Some(&0.0) {
            return Err(Error::config("policy.discrete_levels must start at 0"));
        }
        if self.discrete_levels.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config(
                "policy.discrete_levels must be strictly ascending",
            ));
        }
        if !(self.binary_dose > 0.0) {
            return Err(Error::config("policy.binary_dose must be > 0"));
        }
        if !(self.max_dose >= 0.0) {
            return Err(Error::config("policy.max_dose must be >= 0"));
        }
        if !(self.prune_tolerance >= 0.0) {
            return Err(Error::config("policy.prune_tolerance must be >= 0"));
        }
        Ok(())
    }

    pub fn with_irrigation(&self, irrigation: IrrigationKind) -> Self {
        Self {
            irrigation,
            ..self.clone()
        }
    }

    pub fn is_prune_day(&self, day: u32) -> bool {
        self.prune_interval > 0
            && day >= self.prune_start_day
            && (day - self.prune_start_day).is_multiple_of(self.prune_interval)
    }

    /// Per-plant irrigation volumes (mL) for today under an open-loop policy.
    pub fn irrigation_amounts(&self, state: &GardenState) -> Result<Vec<f64>> {
        match self.irrigation {
            IrrigationKind::BaselineFixed => Ok(baseline_fixed(state, self.binary_dose)),
            IrrigationKind::BinaryAnalytic => binary_analytic(state, self.binary_dose),
            IrrigationKind::ContinuousVariable => continuous_variable(state, self.max_dose),
            IrrigationKind::DiscreteVariable => {
                discrete_variable(state, self.max_dose, &self.discrete_levels)
            }
            IrrigationKind::ClosedLoop => Err(Error::config(
                "closed-loop irrigation has no per-plant daily amounts",
            )),
        }
    }

    pub fn prune_selection(&self, state: &GardenState) -> Vec<usize> {
        prune_selection(state, self.prune_tolerance)
    }
}

/// Plants that accept water: seeded and not dead.
fn waterable(plant: &PlantInstance) -> bool {
    plant.planted && plant.stage != LifecycleStage::Death
}

pub fn baseline_fixed(state: &GardenState, dose: f64) -> Vec<f64> {
    state
        .plants
        .iter()
        .map(|p| if waterable(p) { dose } else { 0.0 })
        .collect()
}

pub fn binary_analytic(state: &GardenState, dose: f64) -> Result<Vec<f64>> {
    state
        .plants
        .iter()
        .map(|p| {
            if !waterable(p) {
                return Ok(0.0);
            }
            let local = state.local_vwc(p.id)?;
            Ok(if local < p.stage.target_vwc() {
                dose
            } else {
                0.0
            })
        })
        .collect()
}

/// Water needed to lift a plant's zone to its stage target, mL.
pub fn deficit(state: &GardenState, plant_id: usize) -> Result<f64> {
    let plant = state.plant(plant_id)?;
    let zone = state.zone_of(plant_id)?;
    let local = state.soil.mean_over(&zone);
    Ok((plant.stage.target_vwc() - local).max(0.0) * zone.len() as f64 * state.soil.cell_volume())
}

pub fn continuous_variable(state: &GardenState, max_dose: f64) -> Result<Vec<f64>> {
    state
        .plants
        .iter()
        .map(|p| {
            if !waterable(p) {
                return Ok(0.0);
            }
            Ok(deficit(state, p.id)?.clamp(0.0, max_dose))
        })
        .collect()
}

pub fn discrete_variable(state: &GardenState, max_dose: f64, levels: &[f64]) -> Result<Vec<f64>> {
    continuous_variable(state, max_dose)?
        .into_iter()
        .map(|amount| quantize(amount, levels))
        .collect()
}

/// Smallest level that meets `amount`; saturates at the largest level.
pub fn quantize(amount: f64, levels: &[f64]) -> Result<f64> {
    let max = *levels
        .last()
        .ok_or_else(|| Error::domain("empty irrigation level list"))?;
    Ok(levels.iter().copied().find(|&l| l >= amount).unwrap_or(max))
}

/// Normalized per-type canopy shares `q_k = v_k / Σ v`; all zero if bare.
pub fn type_shares(state: &GardenState) -> Vec<f64> {
    let light = light_allocation(state);
    let v = normalized_coverage(&per_type_coverage_from(state, &light), &max_radii(state));
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter().map(|x| x / total).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// For each type whose share exceeds `(1 + τ) / k`, its largest living plant
/// (lowest id on ties).
pub fn prune_selection(state: &GardenState, tolerance: f64) -> Vec<usize> {
    let shares = type_shares(state);
    let k = shares.len();
    if k == 0 {
        return Vec::new();
    }
    let threshold = (1.0 + tolerance) / k as f64;
    shares
        .iter()
        .enumerate()
        .filter(|(_, &q)| q > threshold)
        .filter_map(|(t, _)| {
            state
                .plants
                .iter()
                .filter(|p| p.type_ref == t && p.is_living() && p.radius > 0.0)
                .fold(None::<&PlantInstance>, |best, p| match best {
                    Some(b) if b.radius >= p.radius => Some(b),
                    _ => Some(p),
                })
                .map(|p| p.id)
        })
        .collect()
}

/// Delays the planting of `fast_types` by `offset` days.
pub fn staggered_schedule(
    types: &[PlantTypeSpec],
    fast_types: &[String],
    offset: u32,
) -> Result<Vec<PlantTypeSpec>> {
    if let Some(unknown) = fast_types
        .iter()
        .find(|f| !types.iter().any(|t| &t.name == *f))
    {
        return Err(Error::config(format!(
            "stagger.fast_types: unknown plant type '{unknown}'"
        )));
    }
    Ok(types
        .iter()
        .map(|t| PlantTypeSpec {
            plant_day: if fast_types.contains(&t.name) {
                offset
            } else {
                0
            },
            ..t.clone()
        })
        .collect())
}
