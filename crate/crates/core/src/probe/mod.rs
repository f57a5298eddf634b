//! Linear probing classifiers, weighted-F1 and layer sweeps.

mod linear;
mod metrics;
mod sweep;

pub use linear::{init_params, loss_and_grad, Dataset, HyperParams, LinearProbe, Params, TrainOutcome};
pub use metrics::{majority_baseline, weighted_f1};
pub use sweep::{
    format_best, format_last, layer_sweep, render_table, write_layer_csv, BestLayerBy, LayerScore, ProbeReport,
    SweepTask, TaskSummary,
};
