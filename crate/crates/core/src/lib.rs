//! Deterministic polyculture garden simulator.
//!
//! A garden is a rectangular bed holding a fixed set of plants over a soil
//! moisture grid. Each simulated day the chosen irrigation policy waters the
//! plants, plants drink and compete for light, canopies grow or decay through
//! their lifecycle, and the harness records coverage, diversity and water use.
//!
//! ```
//! use polysim::config::parse_config_str;
//! use polysim::harness::run_single;
//!
//! let config = parse_config_str(r#"{
//!     "bed": {"width": 100, "height": 100},
//!     "plant_types": [{"name": "kale", "germination_time": 5,
//!                      "maturation_time": 30, "max_radius": 20,
//!                      "water_group": "Group1"}],
//!     "placements": {"explicit": [{"type": "kale", "x": 50, "y": 50}]},
//!     "cycle_length": 40,
//!     "metric_window": [10, 30]
//! }"#).unwrap();
//! let run = run_single(&config, 1).unwrap();
//! assert_eq!(run.records().len(), 40);
//! assert!(run.summary.mean_coverage > 0.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_loop;
pub mod config;
pub mod engine;
pub mod error;
pub mod garden;
pub mod harness;
pub mod light;
pub mod metrics;
pub mod policy;
pub mod soil;

pub use error::{Error, Result};
pub use garden::{
    GardenState, LifecycleStage, Placement, PlantInstance, PlantTypeSpec, WaterGroup,
};
pub use policy::{IrrigationKind, PolicyBundle};
