//! Daily (and half-hourly) garden dynamics.
//!
//! One day runs in a fixed order: planting, irrigation, uptake, evaporation,
//! light allocation, plant updates, pruning and finally the metrics snapshot.
//! Every millilitre that enters or leaves the soil is booked in the state's
//! [`WaterLedger`](crate::garden::WaterLedger).

use std::io::Write;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::closed_loop::{ClosedLoopController, TICKS_PER_DAY, TICK_MINUTES};
use crate::error::{Error, Result};
use crate::garden::{GardenState, LifecycleStage};
use crate::light::light_allocation;
use crate::metrics::{self, DayRecord};
use crate::policy::{IrrigationKind, PolicyBundle};
use crate::soil::CellIndex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthParams {
    /// Fraction of canopy area removed by one prune.
    pub prune_delta: f64,
    /// Daily retention of above-residual soil moisture.
    pub decay_retain: f64,
    /// Fraction of radius lost per day in senescence.
    pub senescence_decay: f64,
    /// Radius (cm) of the soil zone a plant waters from and drinks from.
    pub influence_radius: f64,
    /// Edge (cm) of the raster used for light and coverage.
    pub raster_resolution: f64,
}

impl Default for GrowthParams {
    fn default() -> Self {
        Self {
            prune_delta: 0.15,
            decay_retain: 0.7,
            senescence_decay: 0.03,
            influence_radius: 10.0,
            raster_resolution: 1.0,
        }
    }
}

impl GrowthParams {
    pub fn validate(&self, cell_size: f64) -> Result<()> {
        if !(self.decay_retain > 0.0 && self.decay_retain < 1.0) {
            return Err(Error::config("growth.decay_retain must lie in (0, 1)"));
        }
        if !(0.0..1.0).contains(&self.prune_delta) {
            return Err(Error::config("growth.prune_delta must lie in [0, 1)"));
        }
        if !(self.senescence_decay > 0.0 && self.senescence_decay < 1.0) {
            return Err(Error::config("growth.senescence_decay must lie in (0, 1)"));
        }
        if !(self.influence_radius >= cell_size / 2.0) {
            return Err(Error::config(
                "growth.influence_radius must be >= soil.cell_size / 2",
            ));
        }
        if !(self.raster_resolution > 0.0) {
            return Err(Error::config("growth.raster_resolution must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Planting,
    GerminationFailure,
    Irrigation,
    Prune,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Planting => "planting",
            EventKind::GerminationFailure => "germination_failure",
            EventKind::Irrigation => "irrigation",
            EventKind::Prune => "prune",
        }
    }
}

/// One row of `events.csv`. `value` is mL for irrigation and the new radius
/// (cm) for prunes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub day: u32,
    pub tick: u32,
    pub kind: EventKind,
    pub plant_id: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn push(&mut self, day: u32, tick: u32, kind: EventKind, plant_id: usize, value: f64) {
        self.events.push(Event {
            day,
            tick,
            kind,
            plant_id,
            value,
        });
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "day",
            "tick",
            "event_type",
            "plant_id",
            "value_mL_or_radius",
        ])?;
        for e in &self.events {
            w.write_record([
                e.day.to_string(),
                e.tick.to_string(),
                e.kind.as_str().to_string(),
                e.plant_id.to_string(),
                format!("{:.6}", e.value),
            ])?;
        }
        w.flush().map_err(|e| Error::io("events.csv", e))?;
        Ok(())
    }
}

impl GardenState {
    /// Soil cells a plant waters and drinks from.
    pub fn zone_of(&self, plant_id: usize) -> Result<Vec<CellIndex>> {
        let plant = self.plant(plant_id)?;
        Ok(self
            .soil
            .zone(plant.center.0, plant.center.1, self.params.influence_radius))
    }

    /// Mean VWC over a plant's zone.
    pub fn local_vwc(&self, plant_id: usize) -> Result<f64> {
        Ok(self.soil.mean_over(&self.zone_of(plant_id)?))
    }

    /// Spreads `volume` mL evenly over a plant's zone. Water that would push a
    /// cell past saturation drains away. Returns the drained volume.
    pub fn apply_irrigation(&mut self, plant_id: usize, volume: f64) -> Result<f64> {
        if !(volume >= 0.0) {
            return Err(Error::domain(format!("irrigation volume {volume} < 0")));
        }
        let zone = self.zone_of(plant_id)?;
        self.water_total += volume;
        self.ledger.irrigation_in += volume;
        if volume == 0.0 || zone.is_empty() {
            self.ledger.drainage += if zone.is_empty() { volume } else { 0.0 };
            return Ok(0.0);
        }
        let cell_volume = self.soil.cell_volume();
        let share = volume / zone.len() as f64;
        let saturation = self.soil.saturation_vwc;
        let mut drained = 0.0;
        for cell in zone {
            let before = self.soil.get(cell);
            let room = ((saturation - before) * cell_volume).max(0.0);
            if share >= room {
                drained += share - room;
                self.soil.set(cell, saturation.max(before));
            } else {
                self.soil.set(cell, before + share / cell_volume);
            }
        }
        self.ledger.drainage += drained;
        Ok(drained)
    }

    /// Living plants draw water toward their stage target.
    ///
    /// Each plant asks for `(target − local VWC) × zone volume`, limited by the
    /// above-residual water in its zone, and spreads the request over its cells
    /// in proportion to their above-residual content. Where overlapping zones
    /// ask a cell for more than it holds, every request on that cell is scaled
    /// down alike, so the result does not depend on plant order.
    pub fn uptake(&mut self) -> f64 {
        let cell_volume = self.soil.cell_volume();
        let cols = self.soil.cols;
        let mut requests: Vec<Vec<(CellIndex, f64)>> = vec![Vec::new(); self.plants.len()];
        let mut demand = vec![0.0; self.plants.len()];
        let mut cell_requested = vec![0.0; self.soil.cols * self.soil.rows];

        for plant in self.plants.iter().filter(|p| p.is_living()) {
            let zone = self
                .soil
                .zone(plant.center.0, plant.center.1, self.params.influence_radius);
            let local = self.soil.mean_over(&zone);
            let d = (plant.stage.target_vwc() - local).max(0.0) * zone.len() as f64 * cell_volume;
            demand[plant.id] = d;
            if d <= 0.0 {
                continue;
            }
            let available: f64 = zone.iter().map(|&c| self.soil.available(c)).sum();
            if available <= 0.0 {
                continue;
            }
            let take = d.min(available);
            for &cell in &zone {
                let amount = take * self.soil.available(cell) / available;
                if amount > 0.0 {
                    requests[plant.id].push((cell, amount));
                    cell_requested[cell.1 * cols + cell.0] += amount;
                }
            }
        }

        let scale: Vec<f64> = self
            .soil
            .iter_cells()
            .map(|cell| {
                let asked = cell_requested[cell.1 * cols + cell.0];
                let held = self.soil.available(cell);
                if asked > held {
                    held / asked
                } else {
                    1.0
                }
            })
            .collect();

        let mut total = 0.0;
        for plant in self.plants.iter_mut() {
            if !plant.is_living() {
                plant.f_water = 1.0;
                continue;
            }
            let mut removed = 0.0;
            for &(cell, amount) in &requests[plant.id] {
                let idx = cell.1 * cols + cell.0;
                let before = self.soil.get(cell);
                let after =
                    (before - amount * scale[idx] / cell_volume).max(self.soil.residual_vwc);
                self.soil.set(cell, after);
                removed += (before - after) * cell_volume;
            }
            plant.f_water = if demand[plant.id] > 0.0 {
                (removed / demand[plant.id]).clamp(0.0, 1.0)
            } else {
                1.0
            };
            total += removed;
        }
        self.ledger.uptake += total;
        total
    }

    /// One day of exponential decay toward residual moisture.
    pub fn evaporate(&mut self) -> f64 {
        self.evaporate_fraction(1.0)
    }

    /// Decay over `fraction` of a day: factor `ρ^fraction`.
    pub fn evaporate_fraction(&mut self, fraction: f64) -> f64 {
        let retain = self.params.decay_retain.powf(fraction);
        let residual = self.soil.residual_vwc;
        let cell_volume = self.soil.cell_volume();
        let mut lost = 0.0;
        for v in self.soil.vwc.iter_mut().flatten() {
            let next = residual + retain * (*v - residual);
            lost += (*v - next) * cell_volume;
            *v = next;
        }
        self.ledger.evaporation += lost;
        lost
    }

    /// Advances one plant's lifecycle by a day, using its current `f_water`
    /// and `f_light`.
    pub fn update_plant(&mut self, plant_id: usize) -> Result<()> {
        let day = self.day;
        let decay = self.params.senescence_decay;
        let spec = self.types[self.plant(plant_id)?.type_ref].clone();
        let plant = &mut self.plants[plant_id];
        if !plant.planted || plant.stage == LifecycleStage::Death {
            return Ok(());
        }
        plant.age_since_planting += 1;
        match plant.stage {
            LifecycleStage::Germination => {
                if plant.age_since_planting >= spec.germination_time {
                    plant.stage = LifecycleStage::Vegetative;
                    plant.germinated = true;
                    plant.emerged_day = Some(day);
                    plant.radius = spec.max_radius.min(1.0);
                }
            }
            LifecycleStage::Vegetative => {
                let growth = spec.growth_rate() * plant.f_water * plant.f_light;
                plant.radius = (plant.radius + growth).min(spec.max_radius);
                if plant.age_since_planting >= spec.maturation_time {
                    plant.stage = LifecycleStage::Reproductive;
                    plant.stage_days = 0;
                }
            }
            LifecycleStage::Reproductive => {
                plant.stage_days += 1;
                if plant.stage_days >= spec.reproductive_duration {
                    plant.stage = LifecycleStage::Senescence;
                    plant.stage_days = 0;
                }
            }
            LifecycleStage::Senescence => {
                plant.radius *= 1.0 - decay;
                plant.stage_days += 1;
                if plant.stage_days >= spec.senescence_duration {
                    plant.stage = LifecycleStage::Death;
                    plant.radius = 0.0;
                }
            }
            LifecycleStage::Death => {}
        }
        Ok(())
    }

    /// Removes `prune_delta` of a plant's canopy area. Returns the new radius,
    /// or `None` when the plant has no canopy to prune.
    pub fn apply_prune(&mut self, plant_id: usize) -> Result<Option<f64>> {
        let delta = self.params.prune_delta;
        self.plant(plant_id)?;
        let plant = &mut self.plants[plant_id];
        if !plant.is_living() || plant.radius <= 0.0 {
            warn!(
                "prune of plant {plant_id} in stage {:?} ignored",
                plant.stage
            );
            return Ok(None);
        }
        plant.radius *= (1.0 - delta).sqrt();
        Ok(Some(plant.radius))
    }

    /// Plants whose planting day is today go into the ground; seeds that
    /// drew a germination failure die at once.
    fn plant_due(&mut self, log: &mut EventLog) {
        let day = self.day;
        for plant in self.plants.iter_mut() {
            if plant.planted || self.types[plant.type_ref].plant_day != day {
                continue;
            }
            plant.planted = true;
            plant.age_since_planting = 0;
            if plant.viable {
                log.push(day, 0, EventKind::Planting, plant.id, 0.0);
            } else {
                plant.stage = LifecycleStage::Death;
                log.push(day, 0, EventKind::GerminationFailure, plant.id, 0.0);
            }
        }
    }
}

/// Advances the garden by one day and returns that day's metrics.
///
/// `controller` must be present when the bundle selects closed-loop
/// irrigation; it then replaces the daily policy with 48 half-hour ticks,
/// each followed by that tick's share of evaporation.
pub fn step_day(
    state: &mut GardenState,
    policy: &PolicyBundle,
    controller: Option<&mut ClosedLoopController>,
    log: &mut EventLog,
) -> Result<DayRecord> {
    let day = state.day;
    let water_before = state.water_total;

    state.plant_due(log);

    let closed_loop = policy.irrigation == IrrigationKind::ClosedLoop;
    if closed_loop {
        let controller = controller.ok_or_else(|| {
            Error::config("closed-loop irrigation selected but no closed_loop section configured")
        })?;
        for tick in 0..TICKS_PER_DAY {
            controller.tick(state, day, tick * TICK_MINUTES, log)?;
            state.evaporate_fraction(1.0 / f64::from(TICKS_PER_DAY));
        }
    } else {
        let amounts = policy.irrigation_amounts(state)?;
        for (id, volume) in amounts.into_iter().enumerate() {
            if volume > 0.0 {
                state.apply_irrigation(id, volume)?;
                log.push(day, 0, EventKind::Irrigation, id, volume);
            }
        }
    }

    state.uptake();
    if !closed_loop {
        state.evaporate();
    }

    let light = light_allocation(state);
    for plant in state.plants.iter_mut() {
        plant.f_light = light.f_light(plant.id);
    }
    for id in 0..state.plants.len() {
        state.update_plant(id)?;
    }

    if policy.is_prune_day(day) {
        for id in policy.prune_selection(state) {
            if let Some(r) = state.apply_prune(id)? {
                log.push(day, 0, EventKind::Prune, id, r);
            }
        }
    }

    let record = metrics::snapshot(state, state.water_total - water_before);
    state.day += 1;
    Ok(record)
}
