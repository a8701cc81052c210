//! Domain types and the garden state container.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::GrowthParams;
use crate::error::{Error, Result};
use crate::soil::{SoilGrid, SoilSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WaterGroup {
    Group1,
    Group2,
}

/// Per-species growth parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantTypeSpec {
    pub name: String,
    /// Days from planting until emergence.
    pub germination_time: u32,
    /// Days from planting until the end of radial growth.
    pub maturation_time: u32,
    /// Maximum canopy radius in cm.
    pub max_radius: f64,
    pub water_group: WaterGroup,
    #[serde(default)]
    pub plant_day: u32,
    #[serde(default = "default_reproductive_duration")]
    pub reproductive_duration: u32,
    #[serde(default = "default_senescence_duration")]
    pub senescence_duration: u32,
    #[serde(default = "default_germination_probability")]
    pub germination_probability: f64,
}

fn default_reproductive_duration() -> u32 {
    20
}

fn default_senescence_duration() -> u32 {
    15
}

fn default_germination_probability() -> f64 {
    1.0
}

impl PlantTypeSpec {
    /// A type with default lifecycle durations, planted on day 0.
    pub fn new(
        name: impl Into<String>,
        germination_time: u32,
        maturation_time: u32,
        max_radius: f64,
        water_group: WaterGroup,
    ) -> Self {
        Self {
            name: name.into(),
            germination_time,
            maturation_time,
            max_radius,
            water_group,
            plant_day: 0,
            reproductive_duration: default_reproductive_duration(),
            senescence_duration: default_senescence_duration(),
            germination_probability: default_germination_probability(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |msg: &str| Error::config(format!("plant type '{}': {msg}", self.name));
        if self.name.is_empty() {
            return Err(Error::config("plant type name must not be empty"));
        }
        if self.germination_time >= self.maturation_time {
            return Err(ctx("germination_time must be < maturation_time"));
        }
        if !(self.max_radius > 0.0) {
            return Err(ctx("max_radius must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.germination_probability) {
            return Err(ctx("germination_probability must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Radial growth rate under full water and light, cm/day.
    pub fn growth_rate(&self) -> f64 {
        ((self.max_radius - 1.0) / f64::from(self.maturation_time - self.germination_time)).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LifecycleStage {
    Germination,
    Vegetative,
    Reproductive,
    Senescence,
    Death,
}

impl LifecycleStage {
    /// Target soil VWC assigned to each stage for irrigation.
    pub fn target_vwc(self) -> f64 {
        match self {
            LifecycleStage::Germination => 0.2,
            LifecycleStage::Vegetative => 0.2,
            LifecycleStage::Reproductive => 0.3,
            LifecycleStage::Senescence => 0.2,
            LifecycleStage::Death => 0.1,
        }
    }

    /// Stages with an emerged canopy that draws water and competes for light.
    pub fn is_living(self) -> bool {
        matches!(
            self,
            LifecycleStage::Vegetative | LifecycleStage::Reproductive | LifecycleStage::Senescence
        )
    }
}

/// One plant on the bed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantInstance {
    pub id: usize,
    /// Index into [`GardenState::types`].
    pub type_ref: usize,
    pub center: (f64, f64),
    pub radius: f64,
    pub stage: LifecycleStage,
    pub germinated: bool,
    pub age_since_planting: u32,
    /// Seed is in the ground (day ≥ plant_day).
    pub planted: bool,
    /// Pre-drawn germination outcome.
    pub viable: bool,
    pub emerged_day: Option<u32>,
    /// Days spent in the current Reproductive or Senescence stage.
    pub stage_days: u32,
    pub f_water: f64,
    pub f_light: f64,
}

impl PlantInstance {
    pub fn is_living(&self) -> bool {
        self.stage.is_living()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    #[serde(rename = "type")]
    pub plant_type: String,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<usize>,
}

impl Placement {
    pub fn new(plant_type: impl Into<String>, x: f64, y: f64) -> Self {
        Self {
            plant_type: plant_type.into(),
            x,
            y,
            id: None,
        }
    }
}

/// Reflects placements across the vertical line `x = w/2`.
pub fn mirror_placement(placements: &[Placement], bed_width: f64) -> Result<Vec<Placement>> {
    placements
        .iter()
        .map(|p| {
            if !(0.0..=bed_width).contains(&p.x) {
                return Err(Error::domain(format!(
                    "x = {} outside [0, {bed_width}]",
                    p.x
                )));
            }
            Ok(Placement {
                x: bed_width - p.x,
                ..p.clone()
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bed {
    pub width: f64,
    pub height: f64,
}

impl Bed {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width).contains(&x) && (0.0..=self.height).contains(&y)
    }
}

/// Cumulative water accounting in mL.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct WaterLedger {
    pub irrigation_in: f64,
    pub uptake: f64,
    pub evaporation: f64,
    pub drainage: f64,
}

impl WaterLedger {
    /// Water that left the soil by any route.
    pub fn outflow(&self) -> f64 {
        self.uptake + self.evaporation + self.drainage
    }

    pub fn delta(&self, earlier: &WaterLedger) -> WaterLedger {
        WaterLedger {
            irrigation_in: self.irrigation_in - earlier.irrigation_in,
            uptake: self.uptake - earlier.uptake,
            evaporation: self.evaporation - earlier.evaporation,
            drainage: self.drainage - earlier.drainage,
        }
    }
}

/// Relative imbalance of `inflow = Δstorage + outflow`.
pub fn balance_error(ledger_delta: &WaterLedger, storage_delta: f64, initial_storage: f64) -> f64 {
    let residual = ledger_delta.irrigation_in - storage_delta - ledger_delta.outflow();
    let scale = ledger_delta
        .irrigation_in
        .abs()
        .max(storage_delta.abs())
        .max(ledger_delta.outflow())
        .max(initial_storage.abs() * f64::EPSILON)
        .max(1.0);
    residual.abs() / scale
}

/// Full garden state on one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GardenState {
    pub day: u32,
    pub bed: Bed,
    pub types: Vec<PlantTypeSpec>,
    pub plants: Vec<PlantInstance>,
    pub soil: SoilGrid,
    pub params: GrowthParams,
    /// mL applied since day 0.
    pub water_total: f64,
    pub ledger: WaterLedger,
    pub rng_state: ChaCha8Rng,
}

impl GardenState {
    /// Builds a day-0 garden from resolved placements.
    ///
    /// Germination outcomes are drawn here, once per plant in id order, so two
    /// gardens with the same seed and placements see the same failures.
    pub fn new(
        bed: Bed,
        soil: &SoilSpec,
        types: Vec<PlantTypeSpec>,
        placements: &[Placement],
        params: GrowthParams,
        seed: u64,
    ) -> Result<Self> {
        Self::with_rng(
            bed,
            soil,
            types,
            placements,
            params,
            ChaCha8Rng::seed_from_u64(seed),
        )
    }

    pub(crate) fn with_rng(
        bed: Bed,
        soil: &SoilSpec,
        types: Vec<PlantTypeSpec>,
        placements: &[Placement],
        params: GrowthParams,
        mut rng: ChaCha8Rng,
    ) -> Result<Self> {
        if !(bed.width > 0.0 && bed.height > 0.0) {
            return Err(Error::config("bed width and height must be > 0"));
        }
        params.validate(soil.cell_size)?;
        for (i, t) in types.iter().enumerate() {
            t.validate()?;
            if types[..i].iter().any(|u| u.name == t.name) {
                return Err(Error::config(format!("duplicate plant type '{}'", t.name)));
            }
        }
        let soil = SoilGrid::new(bed.width, bed.height, soil)?;

        let ids = assign_ids(placements)?;
        let mut plants: Vec<Option<PlantInstance>> = vec![None; placements.len()];
        for (p, id) in placements.iter().zip(ids) {
            let type_ref = types
                .iter()
                .position(|t| t.name == p.plant_type)
                .ok_or_else(|| {
                    Error::config(format!(
                        "placements[{id}]: unknown plant type '{}'",
                        p.plant_type
                    ))
                })?;
            if !bed.contains(p.x, p.y) {
                return Err(Error::config(format!(
                    "placements[{id}]: center ({}, {}) outside bed {}x{}",
                    p.x, p.y, bed.width, bed.height
                )));
            }
            plants[id] = Some(PlantInstance {
                id,
                type_ref,
                center: (p.x, p.y),
                radius: 0.0,
                stage: LifecycleStage::Germination,
                germinated: false,
                age_since_planting: 0,
                planted: false,
                viable: true,
                emerged_day: None,
                stage_days: 0,
                f_water: 1.0,
                f_light: 1.0,
            });
        }
        let mut plants: Vec<PlantInstance> = plants.into_iter().flatten().collect();
        for plant in &mut plants {
            let u: f64 = rng.random();
            plant.viable = u < types[plant.type_ref].germination_probability;
        }

        Ok(Self {
            day: 0,
            bed,
            types,
            plants,
            soil,
            params,
            water_total: 0.0,
            ledger: WaterLedger::default(),
            rng_state: rng,
        })
    }

    pub fn plant(&self, id: usize) -> Result<&PlantInstance> {
        self.plants.get(id).ok_or(Error::UnknownPlant(id))
    }

    pub fn plant_type(&self, plant: &PlantInstance) -> &PlantTypeSpec {
        &self.types[plant.type_ref]
    }

    pub fn type_names(&self) -> Vec<String> {
        self.types.iter().map(|t| t.name.clone()).collect()
    }
}

/// Explicit ids must be all-or-nothing and form a permutation of `0..n`.
fn assign_ids(placements: &[Placement]) -> Result<Vec<usize>> {
    let n = placements.len();
    let explicit = placements.iter().filter(|p| p.id.is_some()).count();
    if explicit == 0 {
        return Ok((0..n).collect());
    }
    if explicit != n {
        return Err(Error::config(
            "placements: either every placement has an id or none does",
        ));
    }
    let mut seen = vec![false; n];
    let mut ids = Vec::with_capacity(n);
    for p in placements {
        let id = p.id.unwrap();
        if id >= n {
            return Err(Error::config(format!(
                "placements: id {id} out of range 0..{n}"
            )));
        }
        if std::mem::replace(&mut seen[id], true) {
            return Err(Error::config(format!(
                "placements: overlapping plant id {id}"
            )));
        }
        ids.push(id);
    }
    Ok(ids)
}
