//! Simulated soil-moisture sensors and the threshold irrigation controller.
//!
//! The controller wakes every 30 minutes, reads every due sensor, averages
//! the latest reading of each sensor and, if that mean is below a rule's
//! threshold and the rule has been quiet for its minimum interval, opens the
//! single zone valve: every emitter runs for the rule's duration.

use std::collections::BTreeMap;
use std::io::Write;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::engine::{EventKind, EventLog};
use crate::error::{Error, Result};
use crate::garden::{GardenState, WaterGroup};

pub const TICK_MINUTES: u32 = 30;
pub const TICKS_PER_DAY: u32 = 24 * 60 / TICK_MINUTES;

const PLACEHOLDER_TEMPERATURE_C: f64 = 20.0;
const PLACEHOLDER_HUMIDITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp {
    pub day: u32,
    pub minute: u32,
}

impl Timestamp {
    pub fn new(day: u32, minute: u32) -> Self {
        Self { day, minute }
    }

    pub fn minutes(self) -> u64 {
        u64::from(self.day) * 1440 + u64::from(self.minute)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    pub id: String,
    pub x: f64,
    pub y: f64,
    #[serde(default = "default_cadence")]
    pub cadence: u32,
}

fn default_cadence() -> u32 {
    TICK_MINUTES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub sensor_id: String,
    pub timestamp: Timestamp,
    pub vwc: f64,
    pub temperature: f64,
    pub humidity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrrigationRule {
    /// VWC fraction below which the rule wants to fire.
    pub threshold: f64,
    /// Valve-open time, seconds.
    pub duration: f64,
    /// Minimum time between two firings of this rule, hours.
    pub min_interval: f64,
}

impl IrrigationRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::config("rule threshold must lie in (0, 1)"));
        }
        if !(self.duration > 0.0) {
            return Err(Error::config("rule duration must be > 0"));
        }
        if !(self.min_interval > 0.0) {
            return Err(Error::config("rule min_interval must be > 0"));
        }
        Ok(())
    }

    fn interval_minutes(&self) -> f64 {
        self.min_interval * 60.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterSpec {
    pub plant_id: usize,
    pub group: WaterGroup,
    pub turns: u32,
}

/// Emitter flow in mL per 60 s, keyed by the number of head turns.
pub type FlowTable = BTreeMap<u32, f64>;

pub fn default_flow_table() -> FlowTable {
    BTreeMap::from([(6, 191.0), (7, 284.0), (8, 383.0)])
}

pub fn duration_to_volume(emitter: &EmitterSpec, duration: f64, flow: &FlowTable) -> Result<f64> {
    if !(duration >= 0.0) {
        return Err(Error::domain(format!("duration {duration} < 0")));
    }
    let rate = flow.get(&emitter.turns).ok_or_else(|| {
        Error::config(format!(
            "emitter for plant {}: {} turns not in flow table",
            emitter.plant_id, emitter.turns
        ))
    })?;
    Ok(rate * duration / 60.0)
}

/// Rules in force from `from_day` until the next period begins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulePeriod {
    pub from_day: u32,
    pub rules: Vec<IrrigationRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedLoopConfig {
    pub sensors: Vec<SensorSpec>,
    /// When absent, one emitter per plant: 7 turns for Group1, 6 for Group2.
    #[serde(default)]
    pub emitters: Option<Vec<EmitterSpec>>,
    #[serde(default = "default_flow_table")]
    pub flow_table: FlowTable,
    pub periods: Vec<RulePeriod>,
    /// Standard deviation of additive Gaussian sensor noise.
    #[serde(default)]
    pub noise_sigma: f64,
}

impl ClosedLoopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sensors.is_empty() {
            return Err(Error::config("closed_loop.sensors must not be empty"));
        }
        for s in &self.sensors {
            if s.cadence == 0 || s.cadence % TICK_MINUTES != 0 {
                return Err(Error::config(format!(
                    "closed_loop.sensors '{}': cadence must be a positive multiple of {TICK_MINUTES}",
                    s.id
                )));
            }
        }
        if self.periods.is_empty() {
            return Err(Error::config("closed_loop.periods must not be empty"));
        }
        for (i, p) in self.periods.iter().enumerate() {
            if p.rules.is_empty() {
                return Err(Error::config(format!(
                    "closed_loop.periods[{i}].rules is empty"
                )));
            }
            for (j, r) in p.rules.iter().enumerate() {
                r.validate().map_err(|e| {
                    Error::config(format!("closed_loop.periods[{i}].rules[{j}]: {e}"))
                })?;
            }
            if i > 0 && self.periods[i - 1].from_day >= p.from_day {
                return Err(Error::config(
                    "closed_loop.periods must have strictly increasing from_day",
                ));
            }
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::config("closed_loop.noise_sigma must be >= 0"));
        }
        Ok(())
    }
}

/// Reads every sensor due at `tick`. Noise draws come from the garden's
/// generator and happen only when `sigma > 0`.
pub fn sample_sensors(
    state: &mut GardenState,
    sensors: &[SensorSpec],
    tick: Timestamp,
    sigma: f64,
) -> Result<Vec<SensorReading>> {
    let noise = if sigma > 0.0 {
        Some(Normal::new(0.0, sigma).map_err(|e| Error::config(e.to_string()))?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(sensors.len());
    for s in sensors {
        if !state.bed.contains(s.x, s.y) {
            return Err(Error::config(format!(
                "sensor '{}' at ({}, {}) outside bed",
                s.id, s.x, s.y
            )));
        }
        if !tick.minute.is_multiple_of(s.cadence) {
            continue;
        }
        let cell = state
            .soil
            .cell_containing(s.x, s.y)
            .ok_or_else(|| Error::config(format!("sensor '{}' outside soil grid", s.id)))?;
        let mut vwc = state.soil.get(cell);
        if let Some(n) = &noise {
            vwc += n.sample(&mut state.rng_state);
        }
        out.push(SensorReading {
            sensor_id: s.id.clone(),
            timestamp: tick,
            vwc: vwc.clamp(0.0, 1.0),
            temperature: PLACEHOLDER_TEMPERATURE_C,
            humidity: PLACEHOLDER_HUMIDITY,
        });
    }
    Ok(out)
}

/// Mean VWC over the latest reading of each sensor.
pub fn mean_latest(readings: &[SensorReading]) -> Option<f64> {
    let mut latest: BTreeMap<&str, &SensorReading> = BTreeMap::new();
    for r in readings {
        match latest.get(r.sensor_id.as_str()) {
            Some(prev) if prev.timestamp > r.timestamp => {}
            _ => {
                latest.insert(&r.sensor_id, r);
            }
        }
    }
    if latest.is_empty() {
        return None;
    }
    Some(latest.values().map(|r| r.vwc).sum::<f64>() / latest.len() as f64)
}

/// Picks the rule to fire, if any.
///
/// Rules are scanned from the lowest threshold up; the first one whose
/// threshold exceeds the mean and whose interval has elapsed fires. A rule
/// blocked by its interval does not block the rules above it.
pub fn evaluate_rules(
    readings: &[SensorReading],
    rules: &[IrrigationRule],
    last_fired: &[Option<Timestamp>],
    now: Timestamp,
) -> Result<Option<(usize, f64)>> {
    if rules.is_empty() {
        return Err(Error::config("no irrigation rules configured"));
    }
    let Some(mean) = mean_latest(readings) else {
        return Ok(None);
    };
    let mut order: Vec<usize> = (0..rules.len()).collect();
    order.sort_by(|&a, &b| rules[a].threshold.total_cmp(&rules[b].threshold));
    for i in order {
        let rule = &rules[i];
        if !(mean < rule.threshold) {
            continue;
        }
        let ready = match last_fired.get(i).copied().flatten() {
            None => true,
            Some(t) => (now.minutes() - t.minutes()) as f64 >= rule.interval_minutes(),
        };
        if ready {
            return Ok(Some((i, rule.duration)));
        }
    }
    Ok(None)
}

/// One valve opening.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Firing {
    pub timestamp: Timestamp,
    pub period: usize,
    pub rule_index: usize,
    pub duration_s: f64,
    pub volume_ml: f64,
}

#[derive(Debug, Clone)]
pub struct ClosedLoopController {
    pub config: ClosedLoopConfig,
    pub emitters: Vec<EmitterSpec>,
    active_period: Option<usize>,
    last_fired: Vec<Option<Timestamp>>,
    latest: Vec<SensorReading>,
    pub readings: Vec<SensorReading>,
    pub firings: Vec<Firing>,
}

impl ClosedLoopController {
    pub fn new(config: ClosedLoopConfig, state: &GardenState) -> Result<Self> {
        config.validate()?;
        for s in &config.sensors {
            if !state.bed.contains(s.x, s.y) {
                return Err(Error::config(format!(
                    "sensor '{}' at ({}, {}) outside bed",
                    s.id, s.x, s.y
                )));
            }
        }
        let emitters = match &config.emitters {
            Some(list) => list.clone(),
            None => state
                .plants
                .iter()
                .map(|p| {
                    let group = state.types[p.type_ref].water_group;
                    EmitterSpec {
                        plant_id: p.id,
                        group,
                        turns: match group {
                            WaterGroup::Group1 => 7,
                            WaterGroup::Group2 => 6,
                        },
                    }
                })
                .collect(),
        };
        for e in &emitters {
            state.plant(e.plant_id).map_err(|_| {
                Error::config(format!("emitter references unknown plant {}", e.plant_id))
            })?;
            duration_to_volume(e, 0.0, &config.flow_table)?;
        }
        Ok(Self {
            config,
            emitters,
            active_period: None,
            last_fired: Vec::new(),
            latest: Vec::new(),
            readings: Vec::new(),
            firings: Vec::new(),
        })
    }

    pub fn rules(&self) -> &[IrrigationRule] {
        self.active_period
            .map_or(&[][..], |p| &self.config.periods[p].rules)
    }

    fn select_period(&mut self, day: u32) {
        let period = self.config.periods.iter().rposition(|p| p.from_day <= day);
        if period != self.active_period {
            self.active_period = period;
            self.last_fired = vec![None; self.rules().len()];
        }
    }

    /// Volume one firing of `duration` seconds delivers across all emitters.
    pub fn firing_volume(&self, duration: f64) -> Result<f64> {
        self.emitters
            .iter()
            .map(|e| duration_to_volume(e, duration, &self.config.flow_table))
            .sum()
    }

    /// One controller wake-up: sample, decide, actuate.
    pub fn tick(
        &mut self,
        state: &mut GardenState,
        day: u32,
        minute: u32,
        log: &mut EventLog,
    ) -> Result<Option<Firing>> {
        let now = Timestamp::new(day, minute);
        self.select_period(day);
        let fresh = sample_sensors(state, &self.config.sensors, now, self.config.noise_sigma)?;
        for r in &fresh {
            match self.latest.iter_mut().find(|l| l.sensor_id == r.sensor_id) {
                Some(slot) => *slot = r.clone(),
                None => self.latest.push(r.clone()),
            }
        }
        self.readings.extend(fresh);
        let Some(period) = self.active_period else {
            return Ok(None);
        };
        let rules = &self.config.periods[period].rules;
        let Some((rule_index, duration)) =
            evaluate_rules(&self.latest, rules, &self.last_fired, now)?
        else {
            return Ok(None);
        };
        let mut total = 0.0;
        let tick = minute / TICK_MINUTES;
        for e in &self.emitters {
            let volume = duration_to_volume(e, duration, &self.config.flow_table)?;
            state.apply_irrigation(e.plant_id, volume)?;
            log.push(day, tick, EventKind::Irrigation, e.plant_id, volume);
            total += volume;
        }
        self.last_fired[rule_index] = Some(now);
        let firing = Firing {
            timestamp: now,
            period,
            rule_index,
            duration_s: duration,
            volume_ml: total,
        };
        self.firings.push(firing.clone());
        Ok(Some(firing))
    }

    pub fn write_readings_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["day", "minute", "sensor_id", "vwc"])?;
        for r in &self.readings {
            w.write_record([
                r.timestamp.day.to_string(),
                r.timestamp.minute.to_string(),
                r.sensor_id.clone(),
                format!("{:.6}", r.vwc),
            ])?;
        }
        w.flush().map_err(|e| Error::io("sensors.csv", e))?;
        Ok(())
    }

    pub fn write_firings_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["day", "minute", "rule_index", "duration_s", "volume_mL"])?;
        for f in &self.firings {
            w.write_record([
                f.timestamp.day.to_string(),
                f.timestamp.minute.to_string(),
                f.rule_index.to_string(),
                format!("{:.6}", f.duration_s),
                format!("{:.6}", f.volume_ml),
            ])?;
        }
        w.flush().map_err(|e| Error::io("firings.csv", e))?;
        Ok(())
    }
}
