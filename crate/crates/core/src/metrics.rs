//! Coverage, diversity and water metrics.

use std::io::Write;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::garden::GardenState;
use crate::light::{light_allocation, LightAllocation};

/// Daily irrigation dose of the binary analytic policy, mL.
pub const BINARY_DOSE_ML: f64 = 200.0;

/// One row of the emitted time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub day: u32,
    pub coverage: f64,
    pub diversity: f64,
    pub per_type_coverage: IndexMap<String, f64>,
    pub water_day: f64,
    pub water_total: f64,
}

/// Fraction of the bed won by each plant type, in type order.
pub fn per_type_coverage_from(state: &GardenState, light: &LightAllocation) -> Vec<f64> {
    let mut cells = vec![0usize; state.types.len()];
    for id in light.owner.iter().flatten() {
        cells[state.plants[*id].type_ref] += 1;
    }
    let total = light.raster.len().max(1) as f64;
    cells.into_iter().map(|c| c as f64 / total).collect()
}

pub fn per_type_coverage(state: &GardenState) -> IndexMap<String, f64> {
    let light = light_allocation(state);
    state
        .type_names()
        .into_iter()
        .zip(per_type_coverage_from(state, &light))
        .collect()
}

/// Coverage rescaled by `(R̄ / R_k)²` so small species weigh like large ones.
pub fn normalized_coverage(coverage: &[f64], max_radii: &[f64]) -> Vec<f64> {
    if coverage.is_empty() {
        return Vec::new();
    }
    let mean_r = max_radii.iter().sum::<f64>() / max_radii.len() as f64;
    coverage
        .iter()
        .zip(max_radii)
        .map(|(c, r)| c * (mean_r / r).powi(2))
        .collect()
}

/// Normalized Shannon entropy of a non-negative vector: `H(p) / ln k`.
///
/// Returns 0 for an all-zero vector and for `k ≤ 1`.
pub fn normalized_entropy(weights: &[f64]) -> f64 {
    let k = weights.len();
    let total: f64 = weights.iter().sum();
    if k <= 1 || !(total > 0.0) {
        return 0.0;
    }
    let h: f64 = weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| w / total)
        .fold(0.0, |h, p| h - p * p.ln());
    (h / (k as f64).ln()).clamp(0.0, 1.0)
}

pub fn diversity_of(coverage: &[f64], max_radii: &[f64]) -> f64 {
    normalized_entropy(&normalized_coverage(coverage, max_radii))
}

pub fn diversity(state: &GardenState) -> f64 {
    let cov: Vec<f64> = per_type_coverage(state).into_values().collect();
    diversity_of(&cov, &max_radii(state))
}

pub(crate) fn max_radii(state: &GardenState) -> Vec<f64> {
    state.types.iter().map(|t| t.max_radius).collect()
}

/// Upper bound on water used by daily fixed dosing: `N · 200 mL · L`.
pub fn max_water_bound(n_plants: usize, days: usize) -> f64 {
    n_plants as f64 * BINARY_DOSE_ML * days as f64
}

pub fn snapshot(state: &GardenState, water_day: f64) -> DayRecord {
    let light = light_allocation(state);
    let cov = per_type_coverage_from(state, &light);
    let diversity = diversity_of(&cov, &max_radii(state));
    DayRecord {
        day: state.day,
        coverage: cov.iter().sum(),
        diversity,
        per_type_coverage: state.type_names().into_iter().zip(cov).collect(),
        water_day,
        water_total: state.water_total,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean_coverage: f64,
    pub mean_diversity: f64,
    pub total_water_ml: f64,
    pub window: (u32, u32),
    pub window_days: usize,
}

/// Window means over records with `day_lo ≤ day ≤ day_hi`.
pub fn summarize(records: &[DayRecord], window: (u32, u32)) -> Result<Summary> {
    let (lo, hi) = window;
    let picked: Vec<&DayRecord> = records
        .iter()
        .filter(|r| (lo..=hi).contains(&r.day))
        .collect();
    if picked.is_empty() {
        return Err(Error::domain(format!("empty metric window {lo}..={hi}")));
    }
    let n = picked.len() as f64;
    Ok(Summary {
        mean_coverage: picked.iter().map(|r| r.coverage).sum::<f64>() / n,
        mean_diversity: picked.iter().map(|r| r.diversity).sum::<f64>() / n,
        total_water_ml: records.last().map_or(0.0, |r| r.water_total),
        window,
        window_days: picked.len(),
    })
}

/// Writes the time series with fixed 6-decimal formatting.
pub fn write_timeseries<W: Write>(
    records: &[DayRecord],
    type_names: &[String],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "day",
        "coverage",
        "diversity",
        "water_day_mL",
        "water_total_mL",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(type_names.iter().cloned());
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.day.to_string(),
            format!("{:.6}", r.coverage),
            format!("{:.6}", r.diversity),
            format!("{:.6}", r.water_day),
            format!("{:.6}", r.water_total),
        ];
        row.extend(
            type_names
                .iter()
                .map(|t| format!("{:.6}", r.per_type_coverage.get(t).copied().unwrap_or(0.0))),
        );
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("timeseries.csv", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn record(day: u32, coverage: f64, water_total: f64) -> DayRecord {
        DayRecord {
            day,
            coverage,
            diversity: 0.5,
            per_type_coverage: IndexMap::new(),
            water_day: 0.0,
            water_total,
        }
    }

    #[test]
    fn entropy_special_cases() {
        assert_eq!(normalized_entropy(&[0.4, 0.0, 0.0]), 0.0);
        assert_abs_diff_eq!(normalized_entropy(&[0.2; 5]), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            normalized_entropy(&[1.0, 1.0, 0.0, 0.0]),
            0.5,
            epsilon = 1e-12
        );
        assert_eq!(normalized_entropy(&[0.0; 4]), 0.0);
        assert_eq!(normalized_entropy(&[]), 0.0);
    }

    #[test]
    fn radius_weight() {
        // R̄ = 30 over radii 10 and 50; weight for R = 50 is (30/50)²
        let v = normalized_coverage(&[0.0, 1.0], &[10.0, 50.0]);
        assert_abs_diff_eq!(v[1], 0.36, epsilon = 1e-12);
        assert_abs_diff_eq!(v[0], 0.0);
    }

    #[test]
    fn water_bound() {
        assert_eq!(max_water_bound(16, 100), 320_000.0);
        assert_eq!(max_water_bound(0, 100), 0.0);
        assert_eq!(max_water_bound(9, 100), 180_000.0);
    }

    #[test]
    fn summarize_window() {
        let recs: Vec<DayRecord> = (0..100).map(|d| record(d, 0.6, d as f64 * 10.0)).collect();
        let s = summarize(&recs, (20, 70)).unwrap();
        assert_eq!(s.window_days, 51);
        assert_abs_diff_eq!(s.mean_coverage, 0.6, epsilon = 1e-12);
        assert_eq!(s.total_water_ml, 990.0);
        assert!(matches!(
            summarize(&recs, (150, 160)),
            Err(Error::Domain(_))
        ));
    }
}
