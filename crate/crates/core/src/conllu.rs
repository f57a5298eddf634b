//! CoNLL-U reading and writing.
//!
//! Only basic word lines (integer ids) become [`Token`]s. Multiword ranges
//! (`3-4`) and empty nodes (`3.1`) are kept verbatim as [`ExtraLine`]s so that
//! serializing a canonical file reproduces it byte for byte. Unicode is never
//! normalized.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Treebank split identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    /// Guess the split from a UD-style file name such as `hi_hdtb-ud-dev.conllu`.
    pub fn from_file_name(path: &Path) -> Option<Split> {
        let name = path.file_name()?.to_str()?.to_ascii_lowercase();
        if name.contains("train") {
            Some(Split::Train)
        } else if name.contains("dev") {
            Some(Split::Dev)
        } else if name.contains("test") {
            Some(Split::Test)
        } else {
            None
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

/// The FEATS column: unique `Key=Value` pairs kept in CoNLL-U order
/// (case-insensitive by key).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct MorphFeatures(Vec<(String, String)>);

fn feature_order(a: &str, b: &str) -> std::cmp::Ordering {
    a.to_lowercase()
        .cmp(&b.to_lowercase())
        .then_with(|| a.cmp(b))
}

impl MorphFeatures {
    pub fn new() -> Self {
        MorphFeatures(Vec::new())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Insert or replace a feature, returning the previous value.
    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) -> Option<String> {
        let key = key.into();
        let value = value.into();
        match self
            .0
            .binary_search_by(|(k, _)| feature_order(k, &key))
        {
            Ok(idx) => Some(std::mem::replace(&mut self.0[idx].1, value)),
            Err(idx) => {
                self.0.insert(idx, (key, value));
                None
            }
        }
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        let idx = self.0.iter().position(|(k, _)| k == key)?;
        Some(self.0.remove(idx).1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for MorphFeatures {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut feats = MorphFeatures::new();
        if s == "_" {
            return Ok(feats);
        }
        for pair in s.split('|') {
            let (key, value) = pair
                .split_once('=')
                .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                .ok_or_else(|| format!("malformed feature `{pair}`"))?;
            if feats.insert(key, value).is_some() {
                return Err(format!("duplicate feature `{key}`"));
            }
        }
        Ok(feats)
    }
}

impl fmt::Display for MorphFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("_");
        }
        for (idx, (k, v)) in self.0.iter().enumerate() {
            if idx > 0 {
                f.write_str("|")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// One basic word line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    /// 1-based position in the sentence.
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: MorphFeatures,
    /// 0 for roots.
    pub head: usize,
    pub deprel: String,
    /// Enhanced dependencies, carried as opaque text.
    pub deps: String,
    pub misc: String,
}

impl Token {
    fn write_line(&self, out: &mut String) {
        use std::fmt::Write;
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.id,
            self.form,
            self.lemma,
            self.upos,
            self.xpos,
            self.feats,
            self.head,
            self.deprel,
            self.deps,
            self.misc
        );
    }

    fn space_after(&self) -> bool {
        !self.misc.split('|').any(|m| m == "SpaceAfter=No")
    }
}

/// A sentence-level comment line, in file order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CommentLine {
    /// Rendered from [`Sentence::sent_id`].
    SentId,
    /// Rendered from [`Sentence::text`] (omitted when that is `None`).
    Text,
    /// Any other comment, verbatim including the leading `#`.
    Raw(String),
}

/// A multiword-range or empty-node line, kept verbatim.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtraLine {
    /// Number of basic tokens that precede this line.
    pub after: usize,
    pub line: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub sent_id: String,
    pub text: Option<String>,
    pub comments: Vec<CommentLine>,
    pub tokens: Vec<Token>,
    pub extra_lines: Vec<ExtraLine>,
}

impl Sentence {
    /// A sentence with `# sent_id` and `# text` comments and no extra lines.
    pub fn new(sent_id: impl Into<String>, tokens: Vec<Token>) -> Self {
        let mut sentence = Sentence {
            sent_id: sent_id.into(),
            text: None,
            comments: vec![CommentLine::SentId, CommentLine::Text],
            tokens,
            extra_lines: Vec::new(),
        };
        sentence.text = Some(sentence.render_text());
        sentence
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token by 1-based id.
    pub fn token(&self, id: usize) -> Option<&Token> {
        id.checked_sub(1).and_then(|idx| self.tokens.get(idx))
    }

    /// Surface text rebuilt from the token forms, honoring `SpaceAfter=No`.
    pub fn render_text(&self) -> String {
        let mut text = String::new();
        for (idx, token) in self.tokens.iter().enumerate() {
            text.push_str(&token.form);
            if idx + 1 < self.tokens.len() && token.space_after() {
                text.push(' ');
            }
        }
        text
    }

    /// Check ids, head range and acyclicity.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.tokens.len();
        if n == 0 {
            return Err("sentence has no tokens".to_owned());
        }
        for (idx, token) in self.tokens.iter().enumerate() {
            if token.id != idx + 1 {
                return Err(format!("token ids not contiguous at id {}", token.id));
            }
            if token.head > n {
                return Err(format!("token {} has head {} outside 0..={n}", token.id, token.head));
            }
            if token.head == token.id {
                return Err(format!("token {} is its own head", token.id));
            }
        }
        if !self.tokens.iter().any(|t| t.head == 0) {
            return Err("no root token (head = 0)".to_owned());
        }
        // 0 = unvisited, 1 = on current path, 2 = reaches a root
        let mut state = vec![0u8; n + 1];
        state[0] = 2;
        for start in 1..=n {
            let mut path = Vec::new();
            let mut cur = start;
            while state[cur] == 0 {
                state[cur] = 1;
                path.push(cur);
                cur = self.tokens[cur - 1].head;
            }
            if state[cur] == 1 {
                return Err(format!("cyclic heads through token {cur}"));
            }
            for node in path {
                state[node] = 2;
            }
        }
        Ok(())
    }

    fn write(&self, out: &mut String) {
        for comment in &self.comments {
            match comment {
                CommentLine::SentId => {
                    out.push_str("# sent_id = ");
                    out.push_str(&self.sent_id);
                    out.push('\n');
                }
                CommentLine::Text => {
                    if let Some(text) = &self.text {
                        out.push_str("# text = ");
                        out.push_str(text);
                        out.push('\n');
                    }
                }
                CommentLine::Raw(line) => {
                    out.push_str(line);
                    out.push('\n');
                }
            }
        }
        let mut extras = self.extra_lines.iter().peekable();
        for (idx, token) in self.tokens.iter().enumerate() {
            while let Some(extra) = extras.next_if(|e| e.after <= idx) {
                out.push_str(&extra.line);
                out.push('\n');
            }
            token.write_line(out);
        }
        for extra in extras {
            out.push_str(&extra.line);
            out.push('\n');
        }
        out.push('\n');
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Treebank {
    pub split: Split,
    pub sentences: Vec<Sentence>,
    pub source_path: String,
}

impl Treebank {
    pub fn new(split: Split) -> Self {
        Treebank {
            split,
            sentences: Vec::new(),
            source_path: String::new(),
        }
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }
}

/// A sentence dropped by lenient parsing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkippedSentence {
    /// First line of the sentence block (1-based).
    pub line: usize,
    pub sent_id: String,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct Parsed {
    pub treebank: Treebank,
    pub skipped: Vec<SkippedSentence>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Skip sentences whose tree is invalid (bad ids, heads out of range,
    /// cycles, no root, duplicate `sent_id`) instead of failing. Column-level
    /// errors are always fatal.
    pub lenient: bool,
}

/// Strict parse: any invalid sentence is an error.
pub fn parse_conllu(text: &str, split: Split) -> Result<Treebank> {
    parse_conllu_with(text, split, ParseOptions::default()).map(|p| p.treebank)
}

pub fn parse_conllu_with(text: &str, split: Split, options: ParseOptions) -> Result<Parsed> {
    let mut parser = BlockParser::default();
    let mut treebank = Treebank::new(split);
    let mut skipped = Vec::new();
    let mut seen_ids = HashSet::new();

    let mut finish = |block: Block, treebank: &mut Treebank| -> Result<()> {
        let first_line = block.first_line;
        let sent_id = block
            .sent_id
            .clone()
            .unwrap_or_else(|| format!("{}-{}", split, treebank.sentences.len() + skipped.len() + 1));
        let sentence = Sentence {
            sent_id,
            text: block.text,
            comments: block.comments,
            tokens: block.tokens,
            extra_lines: block.extra_lines,
        };
        let problem = match sentence.validate() {
            Err(reason) => Some(reason),
            Ok(()) if seen_ids.contains(&sentence.sent_id) => {
                Some(format!("duplicate sent_id `{}`", sentence.sent_id))
            }
            Ok(()) => None,
        };
        match problem {
            None => {
                seen_ids.insert(sentence.sent_id.clone());
                treebank.sentences.push(sentence);
                Ok(())
            }
            Some(reason) if options.lenient => {
                log::warn!(
                    "skipping sentence `{}` at line {first_line}: {reason}",
                    sentence.sent_id
                );
                skipped.push(SkippedSentence {
                    line: first_line,
                    sent_id: sentence.sent_id,
                    reason,
                });
                Ok(())
            }
            Some(reason) => Err(Error::parse(
                first_line,
                format!("sentence `{}`: {reason}", sentence.sent_id),
            )),
        }
    };

    for (idx, line) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        if line.is_empty() {
            if let Some(block) = parser.take() {
                finish(block, &mut treebank)?;
            }
            continue;
        }
        parser.push_line(line_no, line)?;
    }
    if let Some(block) = parser.take() {
        finish(block, &mut treebank)?;
    }

    Ok(Parsed { treebank, skipped })
}

#[derive(Default)]
struct Block {
    first_line: usize,
    sent_id: Option<String>,
    text: Option<String>,
    comments: Vec<CommentLine>,
    tokens: Vec<Token>,
    extra_lines: Vec<ExtraLine>,
}

#[derive(Default)]
struct BlockParser {
    block: Option<Block>,
}

impl BlockParser {
    fn take(&mut self) -> Option<Block> {
        self.block.take()
    }

    fn push_line(&mut self, line_no: usize, line: &str) -> Result<()> {
        let block = self.block.get_or_insert_with(|| Block {
            first_line: line_no,
            ..Block::default()
        });

        if line.starts_with('#') {
            if !block.tokens.is_empty() || !block.extra_lines.is_empty() {
                return Err(Error::parse(line_no, "comment line inside a token block"));
            }
            if let Some(id) = line.strip_prefix("# sent_id = ") {
                if block.sent_id.is_some() {
                    return Err(Error::parse(line_no, "second sent_id comment"));
                }
                block.sent_id = Some(id.to_owned());
                block.comments.push(CommentLine::SentId);
            } else if let Some(text) = line.strip_prefix("# text = ").filter(|_| block.text.is_none()) {
                block.text = Some(text.to_owned());
                block.comments.push(CommentLine::Text);
            } else {
                block.comments.push(CommentLine::Raw(line.to_owned()));
            }
            return Ok(());
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(
                line_no,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }

        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            let sep = if id.contains('-') { '-' } else { '.' };
            let ok = id
                .split_once(sep)
                .map(|(a, b)| a.parse::<usize>().is_ok() && b.parse::<usize>().is_ok())
                .unwrap_or(false);
            if !ok {
                return Err(Error::parse(line_no, format!("malformed token id `{id}`")));
            }
            block.extra_lines.push(ExtraLine {
                after: block.tokens.len(),
                line: line.to_owned(),
            });
            return Ok(());
        }

        let id: usize = id
            .parse()
            .ok()
            .filter(|&id| id > 0)
            .ok_or_else(|| Error::parse(line_no, format!("malformed token id `{id}`")))?;
        let head: usize = cols[6]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("non-integer head `{}`", cols[6])))?;
        let feats = cols[5]
            .parse::<MorphFeatures>()
            .map_err(|e| Error::parse(line_no, e))?;

        block.tokens.push(Token {
            id,
            form: cols[1].to_owned(),
            lemma: cols[2].to_owned(),
            upos: cols[3].to_owned(),
            xpos: cols[4].to_owned(),
            feats,
            head,
            deprel: cols[7].to_owned(),
            deps: cols[8].to_owned(),
            misc: cols[9].to_owned(),
        });
        Ok(())
    }
}

pub fn serialize(treebank: &Treebank) -> String {
    let mut out = String::new();
    for sentence in &treebank.sentences {
        sentence.write(&mut out);
    }
    out
}

/// Read a treebank file; `lenient` skips invalid sentences with a warning.
pub fn read_treebank(path: &Path, split: Split, lenient: bool) -> Result<Parsed> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })?;
    let mut parsed = parse_conllu_with(&text, split, ParseOptions { lenient }).map_err(|e| e.in_file(path))?;
    parsed.treebank.source_path = path.display().to_string();
    Ok(parsed)
}

pub fn write_treebank(path: &Path, treebank: &Treebank) -> Result<()> {
    fs::write(path, serialize(treebank)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "# sent_id = s1\n# text = राम गया\n1\tराम\tराम\tPROPN\tNNP\tCase=Nom|Gender=Masc|Number=Sing|Person=3\t2\tnsubj\t_\t_\n2\tगया\tजा\tVERB\tVM\tGender=Masc|Number=Sing\t0\troot\t_\t_\n\n";

    #[test]
    fn minimal_sentence() {
        let tb = parse_conllu(MINIMAL, Split::Train).unwrap();
        assert_eq!(tb.sentences.len(), 1);
        let s = &tb.sentences[0];
        assert_eq!(s.sent_id, "s1");
        assert_eq!(s.len(), 2);
        assert_eq!(s.tokens[1].head, 0);
        assert_eq!(s.tokens[0].feats.get("Gender"), Some("Masc"));
        assert_eq!(serialize(&tb), MINIMAL);
    }

    #[test]
    fn empty_input() {
        let tb = parse_conllu("", Split::Dev).unwrap();
        assert!(tb.sentences.is_empty());
        assert_eq!(serialize(&tb), "");
    }

    #[test]
    fn extra_lines_round_trip() {
        let text = "# newdoc id = d1\n# sent_id = a\n1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n1\tde\tde\tADP\t_\t_\t3\tcase\t_\t_\n2\tel\tel\tDET\t_\t_\t3\tdet\t_\t_\n3\tmar\tmar\tNOUN\t_\t_\t0\troot\t_\t_\n3.1\tx\tx\tNOUN\t_\t_\t_\t_\t3:conj\t_\n\n";
        let tb = parse_conllu(text, Split::Train).unwrap();
        let s = &tb.sentences[0];
        assert_eq!(s.len(), 3);
        assert_eq!(s.extra_lines.len(), 2);
        assert_eq!(s.extra_lines[0].after, 0);
        assert_eq!(s.extra_lines[1].after, 3);
        assert_eq!(serialize(&tb), text);
    }

    #[test]
    fn column_count_error_cites_line() {
        let err = parse_conllu("# sent_id = a\n1\tx\tx\n\n", Split::Train).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn non_integer_head() {
        let err = parse_conllu("1\tx\tx\tNOUN\t_\t_\tzero\troot\t_\t_\n", Split::Train).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn cyclic_heads_strict_and_lenient() {
        let text = "# sent_id = bad\n1\ta\ta\tNOUN\t_\t_\t2\tdep\t_\t_\n2\tb\tb\tNOUN\t_\t_\t1\tdep\t_\t_\n\n# sent_id = good\n1\tc\tc\tNOUN\t_\t_\t0\troot\t_\t_\n\n";
        let err = parse_conllu(text, Split::Train).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");

        let parsed = parse_conllu_with(text, Split::Train, ParseOptions { lenient: true }).unwrap();
        assert_eq!(parsed.treebank.sentences.len(), 1);
        assert_eq!(parsed.treebank.sentences[0].sent_id, "good");
        assert_eq!(parsed.skipped.len(), 1);
        assert_eq!(parsed.skipped[0].sent_id, "bad");
    }

    #[test]
    fn missing_root_rejected() {
        // 1 -> 2 -> 3 -> 1
        let text = "1\ta\ta\tX\t_\t_\t2\tdep\t_\t_\n2\tb\tb\tX\t_\t_\t3\tdep\t_\t_\n3\tc\tc\tX\t_\t_\t1\tdep\t_\t_\n";
        assert!(parse_conllu(text, Split::Train).is_err());
    }

    #[test]
    fn duplicate_sent_id_rejected() {
        let one = "# sent_id = a\n1\tc\tc\tNOUN\t_\t_\t0\troot\t_\t_\n\n";
        let text = format!("{one}{one}");
        assert!(parse_conllu(&text, Split::Train).is_err());
    }

    #[test]
    fn features_sorted_case_insensitively() {
        let mut f = MorphFeatures::new();
        f.insert("Number", "Sing");
        f.insert("AdpType", "Post");
        f.insert("case", "Nom");
        assert_eq!(f.to_string(), "AdpType=Post|case=Nom|Number=Sing");
        assert_eq!(f.insert("Number", "Plur").as_deref(), Some("Sing"));
        assert_eq!("_".parse::<MorphFeatures>().unwrap(), MorphFeatures::new());
        assert!("Gender".parse::<MorphFeatures>().is_err());
        assert!("A=1|A=2".parse::<MorphFeatures>().is_err());
    }

    #[test]
    fn split_from_file_name() {
        assert_eq!(Split::from_file_name(Path::new("x/hi_hdtb-ud-dev.conllu")), Some(Split::Dev));
        assert_eq!(Split::from_file_name(Path::new("foo.conllu")), None);
    }

    #[test]
    fn render_text_respects_space_after() {
        let tb = parse_conllu(
            "1\tनमस्ते\t_\tINTJ\t_\t_\t0\troot\t_\tSpaceAfter=No\n2\t।\t_\tPUNCT\t_\t_\t1\tpunct\t_\t_\n",
            Split::Train,
        )
        .unwrap();
        assert_eq!(tb.sentences[0].render_text(), "नमस्ते।");
    }
}
