//! Experiment configuration: a single JSON document.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::closed_loop::{ClosedLoopConfig, ClosedLoopController};
use crate::engine::GrowthParams;
use crate::error::{Error, Result};
use crate::garden::{Bed, GardenState, Placement, PlantTypeSpec};
use crate::policy::{staggered_schedule, IrrigationKind, PolicyBundle};
use crate::soil::SoilSpec;

/// Seeds scattered uniformly at random inside the bed, `per_type` of each type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPlacement {
    pub per_type: usize,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub min_spacing: f64,
}

fn default_margin() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Placements {
    Explicit(Vec<Placement>),
    Random(RandomPlacement),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaggerSpec {
    pub fast_types: Vec<String>,
    pub offset: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub bed: Bed,
    #[serde(default)]
    pub soil: SoilSpec,
    pub plant_types: Vec<PlantTypeSpec>,
    pub placements: Placements,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stagger: Option<StaggerSpec>,
    #[serde(default)]
    pub policy: PolicyBundle,
    #[serde(default)]
    pub growth: GrowthParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_loop: Option<ClosedLoopConfig>,
    pub cycle_length: u32,
    pub metric_window: (u32, u32),
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u32,
}

fn default_trials() -> u32 {
    1
}

/// Reads and validates a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        Error::config(format!("field `{field}`: {inner}"))
    })?;
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bed.width > 0.0 && self.bed.height > 0.0) {
            return Err(Error::config("bed: width and height must be > 0"));
        }
        self.soil.validate()?;
        self.growth.validate(self.soil.cell_size)?;
        self.policy.validate()?;
        if self.plant_types.is_empty() {
            return Err(Error::config("plant_types must not be empty"));
        }
        for (i, t) in self.plant_types.iter().enumerate() {
            t.validate()?;
            if self.plant_types[..i].iter().any(|u| u.name == t.name) {
                return Err(Error::config(format!(
                    "plant_types: duplicate type '{}'",
                    t.name
                )));
            }
        }
        match &self.placements {
            Placements::Explicit(list) => {
                for (i, p) in list.iter().enumerate() {
                    if !self.plant_types.iter().any(|t| t.name == p.plant_type) {
                        return Err(Error::config(format!(
                            "placements[{i}].type: unknown plant type '{}'",
                            p.plant_type
                        )));
                    }
                    if !self.bed.contains(p.x, p.y) {
                        return Err(Error::config(format!(
                            "placements[{i}]: center ({}, {}) outside bed",
                            p.x, p.y
                        )));
                    }
                }
            }
            Placements::Random(r) => {
                if !(r.margin >= 0.0)
                    || 2.0 * r.margin > self.bed.width
                    || 2.0 * r.margin > self.bed.height
                {
                    return Err(Error::config("placements.random.margin leaves no room"));
                }
                if !(r.min_spacing >= 0.0) {
                    return Err(Error::config("placements.random.min_spacing must be >= 0"));
                }
            }
        }
        if let Some(s) = &self.stagger {
            staggered_schedule(&self.plant_types, &s.fast_types, s.offset)?;
        }
        if self.cycle_length == 0 {
            return Err(Error::config("cycle_length must be > 0"));
        }
        let (lo, hi) = self.metric_window;
        if lo > hi || hi >= self.cycle_length {
            return Err(Error::config(format!(
                "metric_window [{lo}, {hi}] must satisfy lo <= hi < cycle_length ({})",
                self.cycle_length
            )));
        }
        if self.trials == 0 {
            return Err(Error::config("trials must be >= 1"));
        }
        if let Some(cl) = &self.closed_loop {
            cl.validate()?;
            for s in &cl.sensors {
                if !self.bed.contains(s.x, s.y) {
                    return Err(Error::config(format!(
                        "closed_loop.sensors '{}': position outside bed",
                        s.id
                    )));
                }
            }
        } else if self.policy.irrigation == IrrigationKind::ClosedLoop {
            return Err(Error::config(
                "policy.irrigation is closed_loop but no closed_loop section is present",
            ));
        }
        Ok(())
    }

    /// Plant types with the stagger schedule applied.
    pub fn resolved_types(&self) -> Result<Vec<PlantTypeSpec>> {
        match &self.stagger {
            Some(s) => staggered_schedule(&self.plant_types, &s.fast_types, s.offset),
            None => Ok(self.plant_types.clone()),
        }
    }

    pub fn with_stagger_offset(&self, offset: u32) -> Result<Self> {
        let stagger = self.stagger.as_ref().ok_or_else(|| {
            Error::config("stagger experiment needs a `stagger` section naming the fast types")
        })?;
        Ok(Self {
            stagger: Some(StaggerSpec {
                offset,
                ..stagger.clone()
            }),
            ..self.clone()
        })
    }

    pub fn with_policy(&self, irrigation: IrrigationKind) -> Self {
        Self {
            policy: self.policy.with_irrigation(irrigation),
            ..self.clone()
        }
    }

    pub fn plant_count(&self) -> usize {
        match &self.placements {
            Placements::Explicit(list) => list.len(),
            Placements::Random(r) => r.per_type * self.plant_types.len(),
        }
    }

    /// Day-0 garden (and controller, if configured) for one seed.
    ///
    /// Random placements and germination outcomes are both drawn from the
    /// seed, so arms that share a seed share a layout.
    pub fn build(&self, seed: u64) -> Result<(GardenState, Option<ClosedLoopController>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let placements = match &self.placements {
            Placements::Explicit(list) => list.clone(),
            Placements::Random(r) => random_placements(&mut rng, self.bed, &self.plant_types, r)?,
        };
        let state = GardenState::with_rng(
            self.bed,
            &self.soil,
            self.resolved_types()?,
            &placements,
            self.growth,
            rng,
        )?;
        let controller = self
            .closed_loop
            .as_ref()
            .map(|cl| ClosedLoopController::new(cl.clone(), &state))
            .transpose()?;
        Ok((state, controller))
    }
}

const PLACEMENT_ATTEMPTS: usize = 10_000;

fn random_placements(
    rng: &mut ChaCha8Rng,
    bed: Bed,
    types: &[PlantTypeSpec],
    spec: &RandomPlacement,
) -> Result<Vec<Placement>> {
    let mut out: Vec<Placement> = Vec::new();
    let spacing2 = spec.min_spacing * spec.min_spacing;
    for _ in 0..spec.per_type {
        for t in types {
            let mut placed = false;
            for _ in 0..PLACEMENT_ATTEMPTS {
                let x = rng.random_range(spec.margin..=bed.width - spec.margin);
                let y = rng.random_range(spec.margin..=bed.height - spec.margin);
                let clear = out.iter().all(|p| {
                    let (dx, dy) = (p.x - x, p.y - y);
                    dx * dx + dy * dy >= spacing2
                });
                if clear {
                    out.push(Placement::new(t.name.clone(), x, y));
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::config(format!(
                    "placements.random: could not place '{}' with min_spacing {}",
                    t.name, spec.min_spacing
                )));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "bed": {"width": 150, "height": 150},
        "plant_types": [
            {"name": "kale", "germination_time": 5, "maturation_time": 30,
             "max_radius": 20, "water_group": "Group1"}
        ],
        "placements": {"explicit": [{"type": "kale", "x": 75, "y": 75}]},
        "cycle_length": 30,
        "metric_window": [5, 20]
    }"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = parse_config_str(MINIMAL).unwrap();
        assert_eq!(c.soil, SoilSpec::default());
        assert_eq!(c.policy, PolicyBundle::default());
        assert_eq!(c.trials, 1);
        assert_eq!(c.plant_types[0].reproductive_duration, 20);
    }

    #[test]
    fn negative_x_rejected() {
        let text = MINIMAL.replace(r#""x": 75"#, r#""x": -5"#);
        let err = parse_config_str(&text).unwrap_err();
        assert!(
            matches!(err, Error::Config(ref m) if m.contains("placements[0]")),
            "{err}"
        );
    }

    #[test]
    fn unknown_type_names_field() {
        let text = MINIMAL.replace(r#""type": "kale""#, r#""type": "okra""#);
        let err = parse_config_str(&text).unwrap_err().to_string();
        assert!(
            err.contains("placements[0].type") && err.contains("okra"),
            "{err}"
        );
    }

    #[test]
    fn missing_field_reported() {
        let text = MINIMAL.replace(r#""cycle_length": 30,"#, "");
        let err = parse_config_str(&text).unwrap_err().to_string();
        assert!(err.contains("cycle_length"), "{err}");
    }

    #[test]
    fn malformed_number_has_location() {
        let text = MINIMAL.replace(r#""max_radius": 20"#, r#""max_radius": "twenty""#);
        let err = parse_config_str(&text).unwrap_err().to_string();
        assert!(
            err.contains("plant_types[0].max_radius") && err.contains("line"),
            "{err}"
        );
    }

    #[test]
    fn window_must_fit_cycle() {
        let text = MINIMAL.replace("[5, 20]", "[5, 30]");
        assert!(matches!(parse_config_str(&text), Err(Error::Config(_))));
    }

    #[test]
    fn random_placement_is_seeded() {
        let text = MINIMAL.replace(
            r#"{"explicit": [{"type": "kale", "x": 75, "y": 75}]}"#,
            r#"{"random": {"per_type": 4, "min_spacing": 20}}"#,
        );
        let c = parse_config_str(&text).unwrap();
        let (a, _) = c.build(9).unwrap();
        let (b, _) = c.build(9).unwrap();
        let (d, _) = c.build(10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.plants[0].center, d.plants[0].center);
        assert_eq!(a.plants.len(), 4);
    }
}
