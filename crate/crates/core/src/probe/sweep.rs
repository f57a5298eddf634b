use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::{HyperParams, LinearProbe};
use crate::embeddings::{open_embeddings, slice_many};
use crate::tasks::{TaskExample, TaskKind};
use crate::{Error, Result};

/// Which split picks the reported best layer. The reported score is always
/// the test score of that layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BestLayerBy {
    #[default]
    Test,
    Dev,
}

/// One task's three splits.
#[derive(Clone, Debug)]
pub struct SweepTask {
    pub task: TaskKind,
    pub train: Vec<TaskExample>,
    pub dev: Vec<TaskExample>,
    pub test: Vec<TaskExample>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerScore {
    pub task: TaskKind,
    pub layer: usize,
    pub train_f1: f64,
    pub dev_f1: Option<f64>,
    pub test_f1: f64,
    pub epochs: usize,
    pub best_epoch: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task: TaskKind,
    pub last_layer: usize,
    pub last_f1: f64,
    pub best_layer: usize,
    pub best_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub treebank: String,
    pub model: String,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub best_by: BestLayerBy,
    pub scores: Vec<LayerScore>,
    pub summaries: Vec<TaskSummary>,
}

pub fn format_last(f1: f64) -> String {
    format!("{f1:.4}")
}

pub fn format_best(f1: f64, layer: usize) -> String {
    format!("{f1:.4} ({layer})")
}

fn summarize(task: TaskKind, scores: &[LayerScore], best_by: BestLayerBy) -> Option<TaskSummary> {
    let rows: Vec<&LayerScore> = scores.iter().filter(|s| s.task == task).collect();
    let last = *rows.iter().max_by_key(|s| s.layer)?;
    let key = |s: &LayerScore| match best_by {
        BestLayerBy::Test => s.test_f1,
        BestLayerBy::Dev => s.dev_f1.unwrap_or(f64::NEG_INFINITY),
    };
    let mut best = rows[0];
    for s in &rows[1..] {
        if key(s) > key(best) || (key(s) == key(best) && s.layer < best.layer) {
            best = s;
        }
    }
    Some(TaskSummary {
        task,
        last_layer: last.layer,
        last_f1: last.test_f1,
        best_layer: best.layer,
        best_f1: best.test_f1,
    })
}

/// Train one probe per (task, layer) on the embeddings in `files` and
/// collect train/dev/test weighted-F1. `layers` defaults to every layer.
pub fn layer_sweep(
    treebank: &str,
    files: &[PathBuf],
    tasks: &[SweepTask],
    layers: Option<&[usize]>,
    hyper: &HyperParams,
    best_by: BestLayerBy,
) -> Result<ProbeReport> {
    let first = files
        .first()
        .ok_or_else(|| Error::Config("layer sweep needs at least one embedding file".into()))?;
    let header = open_embeddings(first)?.header().clone();
    let layers: Vec<usize> = match layers {
        Some(l) => l.to_vec(),
        None => (0..header.num_layers).collect(),
    };
    if let Some(&bad) = layers.iter().find(|&&l| l >= header.num_layers) {
        return Err(Error::Config(format!(
            "layer {bad} requested but the embeddings have {} layers",
            header.num_layers
        )));
    }
    for t in tasks {
        if t.train.is_empty() || t.test.is_empty() {
            return Err(Error::Data(format!("{} has an empty train or test split", t.task)));
        }
    }

    let mut scores = Vec::new();
    for &layer in &layers {
        let sets: Vec<&[TaskExample]> = tasks
            .iter()
            .flat_map(|t| [t.train.as_slice(), t.dev.as_slice(), t.test.as_slice()])
            .collect();
        let datasets = slice_many(files, &sets, layer)?;
        let layer_scores: Vec<Result<LayerScore>> = tasks
            .par_iter()
            .zip(datasets.par_chunks(3))
            .map(|(task, data)| {
                let started = Instant::now();
                let out = LinearProbe::train(&data[0], &data[1], hyper)?;
                let score = LayerScore {
                    task: task.task,
                    layer,
                    train_f1: out.probe.score(&data[0])?,
                    dev_f1: out.dev_f1,
                    test_f1: out.probe.score(&data[2])?,
                    epochs: out.epochs,
                    best_epoch: out.best_epoch,
                };
                log::info!(
                    "{} layer {layer}: test weighted-F1 {:.4} after {} epochs ({:.1?})",
                    task.task,
                    score.test_f1,
                    score.epochs,
                    started.elapsed()
                );
                Ok(score)
            })
            .collect();
        for s in layer_scores {
            scores.push(s?);
        }
    }
    scores.sort_by_key(|s| (s.task, s.layer));

    let mut kinds: Vec<TaskKind> = tasks.iter().map(|t| t.task).collect();
    kinds.sort();
    kinds.dedup();
    let summaries = kinds
        .into_iter()
        .filter_map(|k| summarize(k, &scores, best_by))
        .collect();

    Ok(ProbeReport {
        treebank: treebank.to_owned(),
        model: header.model_name,
        num_layers: header.num_layers,
        hidden_dim: header.hidden_dim,
        best_by,
        scores,
        summaries,
    })
}

/// `task,layer,split,weighted_f1`, one row per split per probe.
pub fn write_layer_csv(report: &ProbeReport) -> String {
    let mut out = String::from("task,layer,split,weighted_f1\n");
    for s in &report.scores {
        let splits = [("train", Some(s.train_f1)), ("dev", s.dev_f1), ("test", Some(s.test_f1))];
        for (split, f1) in splits {
            if let Some(f1) = f1 {
                out.push_str(&format!("{},{},{split},{f1:.6}\n", s.task, s.layer));
            }
        }
    }
    out
}

/// Rows are treebank x task; columns are each model's last-layer score,
/// then each model's best-layer score with its layer index.
pub fn render_table(reports: &[ProbeReport]) -> String {
    let mut models: Vec<&str> = Vec::new();
    let mut rows: Vec<(&str, TaskKind)> = Vec::new();
    for r in reports {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
        for s in &r.summaries {
            if !rows.contains(&(r.treebank.as_str(), s.task)) {
                rows.push((&r.treebank, s.task));
            }
        }
    }
    let cell = |treebank: &str, task: TaskKind, model: &str| {
        reports
            .iter()
            .filter(|r| r.treebank == treebank && r.model == model)
            .flat_map(|r| &r.summaries)
            .find(|s| s.task == task)
    };

    let mut out = String::from("treebank\ttask");
    for m in &models {
        out.push_str(&format!("\t{m} last"));
    }
    for m in &models {
        out.push_str(&format!("\t{m} best"));
    }
    out.push('\n');
    for (treebank, task) in rows {
        out.push_str(&format!("{treebank}\t{task}"));
        for m in &models {
            let text = cell(treebank, task, m).map_or("-".to_owned(), |s| format_last(s.last_f1));
            out.push_str(&format!("\t{text}"));
        }
        for m in &models {
            let text = cell(treebank, task, m).map_or("-".to_owned(), |s| format_best(s.best_f1, s.best_layer));
            out.push_str(&format!("\t{text}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(task: TaskKind, layer: usize, dev: f64, test: f64) -> LayerScore {
        LayerScore {
            task,
            layer,
            train_f1: 1.0,
            dev_f1: Some(dev),
            test_f1: test,
            epochs: 3,
            best_epoch: 2,
        }
    }

    #[test]
    fn cell_formats() {
        assert_eq!(format_last(0.886), "0.8860");
        assert_eq!(format_best(0.8955, 5), "0.8955 (5)");
    }

    #[test]
    fn best_layer_selection() {
        let scores = vec![
            score(TaskKind::Pos, 0, 0.9, 0.5),
            score(TaskKind::Pos, 1, 0.6, 0.8),
            score(TaskKind::Pos, 2, 0.7, 0.8),
        ];
        let by_test = summarize(TaskKind::Pos, &scores, BestLayerBy::Test).unwrap();
        assert_eq!((by_test.best_layer, by_test.best_f1), (1, 0.8));
        assert_eq!((by_test.last_layer, by_test.last_f1), (2, 0.8));
        let by_dev = summarize(TaskKind::Pos, &scores, BestLayerBy::Dev).unwrap();
        assert_eq!((by_dev.best_layer, by_dev.best_f1), (0, 0.5));
        assert!(summarize(TaskKind::Sva, &scores, BestLayerBy::Test).is_none());
    }

    #[test]
    fn table_shape() {
        let mk = |model: &str, f: f64| ProbeReport {
            treebank: "HDTB".into(),
            model: model.into(),
            num_layers: 7,
            hidden_dim: 4,
            best_by: BestLayerBy::Test,
            scores: vec![],
            summaries: vec![TaskSummary {
                task: TaskKind::Pos,
                last_layer: 6,
                last_f1: f,
                best_layer: 5,
                best_f1: f + 0.01,
            }],
        };
        let table = render_table(&[mk("a", 0.5), mk("b", 0.6)]);
        assert_eq!(
            table,
            "treebank\ttask\ta last\tb last\ta best\tb best\nHDTB\tPOS\t0.5000\t0.6000\t0.5100 (5)\t0.6100 (5)\n"
        );
    }
}
