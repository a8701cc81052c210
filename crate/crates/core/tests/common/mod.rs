#![allow(dead_code)]

use std::path::PathBuf;

use polysim::config::{parse_config, ExperimentConfig};
use polysim::engine::GrowthParams;
use polysim::garden::{Bed, GardenState, Placement, PlantTypeSpec, WaterGroup};
use polysim::soil::SoilSpec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn preset_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../presets")
        .join(name)
}

pub fn preset(name: &str) -> ExperimentConfig {
    parse_config(preset_path(name)).expect("preset parses")
}

pub fn kale() -> PlantTypeSpec {
    PlantTypeSpec::new("kale", 5, 30, 25.0, WaterGroup::Group1)
}

pub fn cilantro() -> PlantTypeSpec {
    PlantTypeSpec::new("cilantro", 8, 45, 14.0, WaterGroup::Group2)
}

pub fn garden(width: f64, height: f64, placements: &[Placement]) -> GardenState {
    GardenState::new(
        Bed { width, height },
        &SoilSpec::default(),
        vec![kale(), cilantro()],
        placements,
        GrowthParams::default(),
        11,
    )
    .unwrap()
}

/// Marks a plant as emerged with the given radius.
pub fn emerge(g: &mut GardenState, id: usize, radius: f64, emerged_day: u32) {
    let p = &mut g.plants[id];
    p.planted = true;
    p.germinated = true;
    p.stage = polysim::LifecycleStage::Vegetative;
    p.radius = radius;
    p.emerged_day = Some(emerged_day);
}

/// Per-cell argmax over every living plant, written without the rasterizer.
pub fn brute_force_owner(g: &GardenState, res: f64) -> Vec<Option<usize>> {
    let cols = (g.bed.width / res).ceil() as usize;
    let rows = (g.bed.height / res).ceil() as usize;
    let mut out = Vec::with_capacity(cols * rows);
    for row in 0..rows {
        for col in 0..cols {
            let cx = (col as f64 + 0.5) * res;
            let cy = (row as f64 + 0.5) * res;
            let mut best: Option<usize> = None;
            for p in &g.plants {
                if !p.stage.is_living() || p.radius <= 0.0 {
                    continue;
                }
                let (dx, dy) = (cx - p.center.0, cy - p.center.1);
                if dx * dx + dy * dy > p.radius * p.radius {
                    continue;
                }
                best = match best {
                    None => Some(p.id),
                    Some(b) => {
                        let q = &g.plants[b];
                        let key = |x: &polysim::PlantInstance| {
                            (
                                x.radius,
                                std::cmp::Reverse(x.emerged_day.unwrap()),
                                std::cmp::Reverse(x.id),
                            )
                        };
                        if key(p) > key(q) {
                            Some(p.id)
                        } else {
                            Some(b)
                        }
                    }
                };
            }
            out.push(best);
        }
    }
    out
}

pub fn random_garden(rng: &mut ChaCha8Rng) -> GardenState {
    let n = rng.random_range(1..=5);
    let w = rng.random_range(40.0..120.0_f64).round();
    let h = rng.random_range(40.0..120.0_f64).round();
    let placements: Vec<Placement> = (0..n)
        .map(|i| {
            Placement::new(
                if i % 2 == 0 { "kale" } else { "cilantro" },
                rng.random_range(0.0..=w),
                rng.random_range(0.0..=h),
            )
        })
        .collect();
    let mut g = garden(w, h, &placements);
    g.params.raster_resolution = [1.0, 2.0, 2.5][rng.random_range(0..3)];
    for id in 0..n {
        // coarse radii and emergence days force exact ties
        let radius = f64::from(rng.random_range(0..8u32)) * 2.5;
        emerge(&mut g, id, radius, rng.random_range(0..3));
        if rng.random_bool(0.15) {
            g.plants[id].stage = polysim::LifecycleStage::Death;
            g.plants[id].radius = 0.0;
        }
    }
    g
}
