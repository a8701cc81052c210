//! Acceptance checks. Prints one verdict line per criterion and exits
//! non-zero if any fails.
//!
//! Run with `cargo test -p polysim --test acceptance`.

mod common;

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polysim::closed_loop::{default_flow_table, duration_to_volume, EmitterSpec, TICKS_PER_DAY};
use polysim::engine::EventKind;
use polysim::harness::{run_single, RunArtifacts, STAGGER_REPORT_DAY};
use polysim::light::light_allocation;
use polysim::metrics::{max_water_bound, normalized_entropy};
use polysim::policy::quantize;
use polysim::{IrrigationKind, LifecycleStage, PolicyBundle, WaterGroup};

type Outcome = Result<String, String>;

/// Worst balance error seen by any run made here.
#[derive(Default)]
struct Audit {
    max_balance_error: f64,
    runs: usize,
}

impl Audit {
    fn record(&mut self, run: &RunArtifacts) {
        self.max_balance_error = self.max_balance_error.max(run.summary.max_balance_error);
        self.runs += 1;
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: polysim::Error) -> String {
    format!("error: {e}")
}

fn c1_irrigation(audit: &mut Audit) -> Outcome {
    let cfg = common::preset("fig5_irrigation.json");
    let mut arms = HashMap::new();
    let mut slowest = Duration::ZERO;
    for kind in [
        IrrigationKind::BaselineFixed,
        IrrigationKind::ContinuousVariable,
        IrrigationKind::DiscreteVariable,
    ] {
        let start = Instant::now();
        let run = run_single(&cfg.with_policy(kind), cfg.seed).map_err(err)?;
        slowest = slowest.max(start.elapsed());
        audit.record(&run);
        arms.insert(kind, run.summary);
    }
    let base = &arms[&IrrigationKind::BaselineFixed];
    let mut ok = slowest <= Duration::from_secs(60);
    let mut parts = vec![format!("baseline {:.1} L", base.total_water_ml / 1000.0)];
    for kind in [
        IrrigationKind::ContinuousVariable,
        IrrigationKind::DiscreteVariable,
    ] {
        let s = &arms[&kind];
        let saving = 1.0 - s.total_water_ml / base.total_water_ml;
        let dc = (s.mean_coverage - base.mean_coverage).abs();
        let dd = (s.mean_diversity - base.mean_diversity).abs();
        ok &= saving >= 0.30 && dc <= 0.08 && dd <= 0.05;
        parts.push(format!(
            "{} saves {:.1}% (dcov {dc:.3}, ddiv {dd:.3})",
            kind.short_name(),
            saving * 100.0
        ));
    }
    parts.push(format!("slowest arm {:.2} s", slowest.as_secs_f64()));
    check(ok, parts.join(", "))
}

fn c2_staggering(audit: &mut Audit) -> Outcome {
    let cfg = common::preset("fig3_stagger.json");
    let offset = cfg.stagger.as_ref().map(|s| s.offset).unwrap_or(0);
    let normal = cfg.with_stagger_offset(0).map_err(err)?;
    let staggered = cfg.with_stagger_offset(offset).map_err(err)?;
    let day = STAGGER_REPORT_DAY as usize;
    let (mut wins, mut gap, mut div_n, mut div_s) = (0, 0.0, 0.0, 0.0);
    let trials = cfg.trials;
    for i in 0..trials {
        let seed = cfg.seed + u64::from(i);
        let a = run_single(&normal, seed).map_err(err)?;
        let b = run_single(&staggered, seed).map_err(err)?;
        audit.record(&a);
        audit.record(&b);
        let (ca, cb) = (a.records()[day].coverage, b.records()[day].coverage);
        wins += usize::from(cb > ca);
        gap += cb - ca;
        div_n += a.summary.mean_diversity;
        div_s += b.summary.mean_diversity;
    }
    let n = f64::from(trials);
    let (gap, div_n, div_s) = (gap / n, div_n / n, div_s / n);
    check(
        trials == 5 && offset == 10 && wins >= 4 && gap >= 0.05 && (div_n - div_s).abs() <= 0.05,
        format!(
            "staggered ahead in {wins}/{trials} trials, mean day-50 gap {gap:.3}, diversity {div_n:.3} vs {div_s:.3}"
        ),
    )
}

fn c3_max_water(audit: &mut Audit) -> Outcome {
    let full = common::preset("fig5_irrigation.json");
    let n = full.plant_count();

    // short enough that nothing reaches Death
    let mut short = full.with_policy(IrrigationKind::BaselineFixed);
    short.cycle_length = 40;
    let run = run_single(&short, short.seed).map_err(err)?;
    audit.record(&run);
    let deaths = run
        .simulation
        .state
        .plants
        .iter()
        .filter(|p| p.stage == LifecycleStage::Death)
        .count();
    let bound = max_water_bound(n, short.cycle_length as usize);
    let exact = deaths == 0 && run.summary.total_water_ml == bound;

    let full_bound = max_water_bound(n, full.cycle_length as usize);
    let mut within = true;
    let mut worst: f64 = 0.0;
    for kind in [
        IrrigationKind::BaselineFixed,
        IrrigationKind::BinaryAnalytic,
        IrrigationKind::ContinuousVariable,
        IrrigationKind::DiscreteVariable,
    ] {
        let r = run_single(&full.with_policy(kind), full.seed).map_err(err)?;
        audit.record(&r);
        within &= r.summary.total_water_ml <= full_bound;
        worst = worst.max(r.summary.total_water_ml);
    }
    check(
        exact && within,
        format!(
            "no-death baseline {} mL == {bound} mL; largest {}-day total {worst} mL <= {full_bound} mL",
            run.summary.total_water_ml, full.cycle_length
        ),
    )
}

fn c4_conservation(audit: &Audit) -> Outcome {
    check(
        audit.runs > 0 && audit.max_balance_error <= 1e-6,
        format!(
            "worst relative balance error {:.2e} over every step of {} runs",
            audit.max_balance_error, audit.runs
        ),
    )
}

fn c5_diversity() -> Outcome {
    let single = normalized_entropy(&[0.0, 3.0, 0.0, 0.0]);
    let uniform = normalized_entropy(&[2.0, 2.0, 2.0, 2.0]);
    let half = normalized_entropy(&[1.0, 1.0, 0.0, 0.0]);
    let mut ok = single == 0.0 && (uniform - 1.0).abs() < 1e-12 && (half - 0.5).abs() < 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(2..=8);
        let v: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..10.0)).collect();
        let d = normalized_entropy(&v);
        let mut shuffled = v.clone();
        for i in (1..k).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let scale = rng.random_range(1e-3..1e3);
        let scaled: Vec<f64> = v.iter().map(|x| x * scale).collect();
        worst = worst
            .max((normalized_entropy(&shuffled) - d).abs())
            .max((normalized_entropy(&scaled) - d).abs());
        ok &= (0.0..=1.0 + 1e-12).contains(&d);
    }
    ok &= worst <= 1e-9;
    check(
        ok,
        format!("single {single}, uniform {uniform:.6}, two-of-four {half:.6}; 1000 vectors, worst drift {worst:.1e}"),
    )
}

fn c6_quantizer() -> Outcome {
    let levels = PolicyBundle::default().discrete_levels;
    let top = *levels.last().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let x = rng.random_range(0.0..=500.0);
        let got = quantize(x, &levels).map_err(err)?;
        let oracle = levels
            .iter()
            .copied()
            .filter(|&l| l >= x.min(top))
            .fold(f64::INFINITY, f64::min);
        if got != oracle || !levels.contains(&got) || got < x.min(top) {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("1000 inputs in [0, 500], {mismatches} mismatches against scan"),
    )
}

fn c7_closed_loop(audit: &mut Audit) -> Outcome {
    let cfg = common::preset("cycle2_closed_loop.json");
    let run = run_single(&cfg, cfg.seed).map_err(err)?;
    audit.record(&run);
    let ctl = run.simulation.controller.as_ref().ok_or("no controller")?;
    let rules = ctl.rules();

    let mut ok = cfg.cycle_length == 10;
    let mut last: HashMap<usize, u64> = HashMap::new();
    let mut violations = 0;
    for f in &ctl.firings {
        let now = f.timestamp.minutes();
        if let Some(prev) = last.insert(f.rule_index, now) {
            if ((now - prev) as f64) < rules[f.rule_index].min_interval * 60.0 {
                violations += 1;
            }
        }
    }
    // the event log must agree with the firing list
    let logged: f64 = run
        .simulation
        .log
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Irrigation)
        .map(|e| e.value)
        .sum();
    let fired: f64 = ctl.firings.iter().map(|f| f.volume_ml).sum();
    ok &= violations == 0 && (logged - fired).abs() < 1e-6;

    let burn_in = 3;
    let mut per_tick: HashMap<(u32, u32), (f64, usize)> = HashMap::new();
    for r in ctl.readings.iter().filter(|r| r.timestamp.day >= burn_in) {
        let e = per_tick
            .entry((r.timestamp.day, r.timestamp.minute))
            .or_default();
        e.0 += r.vwc;
        e.1 += 1;
    }
    let expected_ticks = ((cfg.cycle_length - burn_in) * TICKS_PER_DAY) as usize;
    let mean = per_tick.values().map(|(s, n)| s / *n as f64).sum::<f64>() / per_tick.len() as f64;
    ok &= per_tick.len() == expected_ticks && mean >= 0.21;

    let flows: Vec<f64> = [6, 7, 8]
        .iter()
        .map(|&turns| {
            let e = EmitterSpec {
                plant_id: 0,
                group: WaterGroup::Group1,
                turns,
            };
            duration_to_volume(&e, 60.0, &default_flow_table())
        })
        .collect::<polysim::Result<_>>()
        .map_err(err)?;
    ok &= flows == [191.0, 284.0, 383.0];

    check(
        ok,
        format!(
            "{} firings, {violations} interval violations, mean sensor VWC after day {burn_in} {mean:.4}, flows {flows:?} mL",
            ctl.firings.len()
        ),
    )
}

fn c8_determinism(audit: &mut Audit) -> Outcome {
    let presets = [
        "fig5_irrigation.json",
        "fig3_stagger.json",
        "cycle2_closed_loop.json",
        "cycle2_schedule.json",
        "small_golden.json",
    ];
    let mut differing = Vec::new();
    for name in presets {
        let cfg = common::preset(name);
        let a = run_single(&cfg, cfg.seed).map_err(err)?;
        let b = run_single(&cfg, cfg.seed).map_err(err)?;
        audit.record(&a);
        audit.record(&b);
        if a.timeseries_csv().map_err(err)? != b.timeseries_csv().map_err(err)? {
            differing.push(name);
        }
    }
    let cfg = common::preset("small_golden.json");
    let small = run_single(&cfg, cfg.seed).map_err(err)?;
    let golden = include_str!("golden/small_timeseries.csv");
    let golden_ok = small.timeseries_csv().map_err(err)? == golden.as_bytes();
    check(
        differing.is_empty() && golden_ok && cfg.plant_count() == 4 && cfg.cycle_length == 30,
        format!(
            "{} presets identical across runs (differing: {differing:?}), golden match {golden_ok}",
            presets.len() - differing.len()
        ),
    )
}

fn c9_light() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = 0;
    for _ in 0..200 {
        let g = common::random_garden(&mut rng);
        if light_allocation(&g).owner != common::brute_force_owner(&g, g.params.raster_resolution) {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("200 random gardens of <= 5 plants, {mismatches} mismatches"),
    )
}

fn main() -> ExitCode {
    let mut audit = Audit::default();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("C1 irrigation comparison", c1_irrigation(&mut audit)),
        ("C2 staggered planting", c2_staggering(&mut audit)),
        ("C3 max-water bound", c3_max_water(&mut audit)),
    ];
    let c7 = c7_closed_loop(&mut audit);
    let c8 = c8_determinism(&mut audit);
    results.push(("C4 water conservation", c4_conservation(&audit)));
    results.push(("C5 diversity metric", c5_diversity()));
    results.push(("C6 quantizer", c6_quantizer()));
    results.push(("C7 closed-loop controller", c7));
    results.push(("C8 determinism", c8));
    results.push(("C9 light allocation", c9_light()));

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
