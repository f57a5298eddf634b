//! The four probing datasets: POS, STDP (tree depth), GCM (case) and SVA
//! (subject-verb agreement).
//!
//! Builders are pure functions of a treebank. Token indices are 1-based
//! CoNLL-U ids.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conllu::{Sentence, Split, Treebank};
use crate::schema::{Gender, Number};
use crate::{Error, Result};

const DEFAULT_CASE_MAP: &str = include_str!("../data/case_map.tsv");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TaskKind {
    Pos,
    Stdp,
    Gcm,
    Sva,
}

impl TaskKind {
    pub const ALL: [TaskKind; 4] = [TaskKind::Pos, TaskKind::Stdp, TaskKind::Gcm, TaskKind::Sva];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Pos => "POS",
            TaskKind::Stdp => "STDP",
            TaskKind::Gcm => "GCM",
            TaskKind::Sva => "SVA",
        }
    }

    /// Token-level tasks read token vectors; the others read sentence vectors.
    pub fn is_token_level(self) -> bool {
        matches!(self, TaskKind::Pos | TaskKind::Gcm)
    }

    pub fn file_name(self, split: Split) -> String {
        format!("{}-{}.jsonl", self.as_str().to_lowercase(), split)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "POS" => Ok(TaskKind::Pos),
            "STDP" => Ok(TaskKind::Stdp),
            "GCM" => Ok(TaskKind::Gcm),
            "SVA" => Ok(TaskKind::Sva),
            _ => Err(Error::Config(format!("unknown task `{s}`"))),
        }
    }
}

/// One labelled probing unit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskExample {
    pub task: TaskKind,
    pub split: Split,
    pub sent_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_index: Option<usize>,
    /// SVA only: number of tokens before the target verb.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix_len: Option<usize>,
    pub label: String,
    /// Space-joined forms of the model input.
    pub text: String,
}

impl TaskExample {
    /// Key of the embedding record this example reads from.
    pub fn record_key(&self) -> String {
        match (self.task, self.prefix_len) {
            (TaskKind::Sva, Some(len)) => format!("{}#{}", self.sent_id, len),
            _ => self.sent_id.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    /// Also use AUX tokens as SVA target verbs.
    pub sva_include_aux: bool,
    /// Count nodes instead of edges on the deepest path.
    pub depth_counts_nodes: bool,
}

/// UD case literal -> GCM label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseMap {
    labels: BTreeMap<String, String>,
}

impl Default for CaseMap {
    fn default() -> Self {
        CaseMap::from_tsv(DEFAULT_CASE_MAP).expect("bundled case map is valid")
    }
}

impl CaseMap {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CaseMap::from_tsv(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut labels = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (ud, label) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(idx + 1, "expected `ud_case<TAB>label`"))?;
            if labels.insert(ud.to_owned(), label.to_owned()).is_some() {
                return Err(Error::parse(idx + 1, format!("duplicate case `{ud}`")));
            }
        }
        Ok(CaseMap { labels })
    }

    pub fn label(&self, ud_case: &str) -> Option<&str> {
        self.labels.get(ud_case).map(String::as_str)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.labels.values().map(String::as_str)
    }
}

/// Examples of one task over one treebank split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskBuild {
    pub task: TaskKind,
    pub split: Split,
    pub examples: Vec<TaskExample>,
    /// Candidates rejected by the task's filter (GCM: case outside the map;
    /// SVA: verbs without gender/number label or with an empty prefix).
    pub skipped: usize,
}

fn natural_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.cmp(b),
    }
}

impl TaskBuild {
    /// Label counts, numeric labels in numeric order.
    pub fn histogram(&self) -> Vec<(String, usize)> {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for example in &self.examples {
            *counts.entry(example.label.as_str()).or_default() += 1;
        }
        let mut hist: Vec<(String, usize)> = counts.into_iter().map(|(l, c)| (l.to_owned(), c)).collect();
        hist.sort_by(|a, b| natural_cmp(&a.0, &b.0));
        hist
    }
}

fn joined_forms(sentence: &Sentence, upto: usize) -> String {
    sentence.tokens[..upto]
        .iter()
        .map(|t| t.form.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn build_pos(tb: &Treebank) -> TaskBuild {
    let mut examples = Vec::with_capacity(tb.token_count());
    for sentence in &tb.sentences {
        let text = joined_forms(sentence, sentence.len());
        for token in &sentence.tokens {
            examples.push(TaskExample {
                task: TaskKind::Pos,
                split: tb.split,
                sent_id: sentence.sent_id.clone(),
                token_index: Some(token.id),
                prefix_len: None,
                label: token.upos.clone(),
                text: text.clone(),
            });
        }
    }
    TaskBuild {
        task: TaskKind::Pos,
        split: tb.split,
        examples,
        skipped: 0,
    }
}

/// Number of head edges on the longest path from a root to any token.
pub fn tree_depth(sentence: &Sentence) -> Result<usize> {
    let n = sentence.len();
    let mut depth: Vec<Option<usize>> = vec![None; n + 1];
    depth[0] = Some(0);
    let mut deepest = 0;
    for start in 1..=n {
        let mut path = Vec::new();
        let mut cur = start;
        while depth[cur].is_none() {
            if path.len() > n {
                return Err(Error::Data(format!("cyclic heads in sentence `{}`", sentence.sent_id)));
            }
            path.push(cur);
            cur = sentence
                .token(cur)
                .map(|t| t.head)
                .filter(|&h| h <= n)
                .ok_or_else(|| Error::Data(format!("head out of range in sentence `{}`", sentence.sent_id)))?;
        }
        let mut d = depth[cur].unwrap();
        for &node in path.iter().rev() {
            // roots (head 0) sit at depth 0
            d = if sentence.tokens[node - 1].head == 0 { 0 } else { d + 1 };
            depth[node] = Some(d);
        }
        deepest = deepest.max(depth[start].unwrap());
    }
    Ok(deepest)
}

pub fn build_stdp(tb: &Treebank, config: &TaskConfig) -> Result<TaskBuild> {
    let examples = tb
        .sentences
        .iter()
        .map(|sentence| {
            let depth = tree_depth(sentence)? + usize::from(config.depth_counts_nodes);
            Ok(TaskExample {
                task: TaskKind::Stdp,
                split: tb.split,
                sent_id: sentence.sent_id.clone(),
                token_index: None,
                prefix_len: None,
                label: depth.to_string(),
                text: joined_forms(sentence, sentence.len()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TaskBuild {
        task: TaskKind::Stdp,
        split: tb.split,
        examples,
        skipped: 0,
    })
}

pub fn build_gcm(tb: &Treebank, cases: &CaseMap) -> TaskBuild {
    let mut examples = Vec::new();
    let mut skipped = 0;
    for sentence in &tb.sentences {
        let mut text = None;
        for token in &sentence.tokens {
            let Some(case) = token.feats.get("Case") else {
                continue;
            };
            let Some(label) = cases.label(case) else {
                skipped += 1;
                continue;
            };
            let text = text.get_or_insert_with(|| joined_forms(sentence, sentence.len()));
            examples.push(TaskExample {
                task: TaskKind::Gcm,
                split: tb.split,
                sent_id: sentence.sent_id.clone(),
                token_index: Some(token.id),
                prefix_len: None,
                label: label.to_owned(),
                text: text.clone(),
            });
        }
    }
    TaskBuild {
        task: TaskKind::Gcm,
        split: tb.split,
        examples,
        skipped,
    }
}

pub fn sva_label(gender: Gender, number: Number) -> &'static str {
    match (gender, number) {
        (Gender::Masc, Number::Sing) => "masculine-singular",
        (Gender::Masc, Number::Plur) => "masculine-plural",
        (Gender::Fem, Number::Sing) => "feminine-singular",
        (Gender::Fem, Number::Plur) => "feminine-plural",
    }
}

pub fn build_sva(tb: &Treebank, config: &TaskConfig) -> TaskBuild {
    let mut examples = Vec::new();
    let mut skipped = 0;
    for sentence in &tb.sentences {
        for token in &sentence.tokens {
            let is_target = token.upos == "VERB" || (config.sva_include_aux && token.upos == "AUX");
            if !is_target {
                continue;
            }
            let gender = token.feats.get("Gender").and_then(Gender::from_ud);
            let number = token.feats.get("Number").and_then(Number::from_ud);
            let prefix_len = token.id - 1;
            let (Some(gender), Some(number)) = (gender, number) else {
                skipped += 1;
                continue;
            };
            if prefix_len == 0 {
                skipped += 1;
                continue;
            }
            examples.push(TaskExample {
                task: TaskKind::Sva,
                split: tb.split,
                sent_id: sentence.sent_id.clone(),
                token_index: Some(token.id),
                prefix_len: Some(prefix_len),
                label: sva_label(gender, number).to_owned(),
                text: joined_forms(sentence, prefix_len),
            });
        }
    }
    TaskBuild {
        task: TaskKind::Sva,
        split: tb.split,
        examples,
        skipped,
    }
}

pub fn build_task(task: TaskKind, tb: &Treebank, config: &TaskConfig, cases: &CaseMap) -> Result<TaskBuild> {
    Ok(match task {
        TaskKind::Pos => build_pos(tb),
        TaskKind::Stdp => build_stdp(tb, config)?,
        TaskKind::Gcm => build_gcm(tb, cases),
        TaskKind::Sva => build_sva(tb, config),
    })
}

pub fn write_jsonl(path: &Path, examples: &[TaskExample]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for example in examples {
        serde_json::to_writer(&mut out, example)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<TaskExample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut examples = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let example = serde_json::from_str(&line).map_err(|e| Error::FileParse {
            path: path.to_owned(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        examples.push(example);
    }
    Ok(examples)
}

/// Count summary: one total row (`*`) and one row per label for every build.
pub fn summary_tsv(builds: &[TaskBuild]) -> String {
    let mut out = String::from("task\tsplit\tlabel\tcount\n");
    for build in builds {
        out.push_str(&format!("{}\t{}\t*\t{}\n", build.task, build.split, build.examples.len()));
        if build.skipped > 0 {
            out.push_str(&format!("{}\t{}\t(skipped)\t{}\n", build.task, build.split, build.skipped));
        }
        for (label, count) in build.histogram() {
            out.push_str(&format!("{}\t{}\t{label}\t{count}\n", build.task, build.split));
        }
    }
    out
}
