//! LDC-style corpus ingestion, subset cataloging, depth-stratified sampling and fine-tuning
//! record output.
//!
//! A corpus file is a sequence of blank-line separated blocks, each a run of `# ::key value`
//! header lines followed by one Penman graph.

use crate::analysis::depth;
use crate::extraction::{Extractor, TemplateFamily};
use crate::penman::{parse, parse_metadata_line, StructuralReport};
use crate::seed;
use indexmap::IndexMap;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Read;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{origin}: {source}")]
    Io {
        origin: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}: duplicate id {id}")]
    DuplicateId { origin: String, line: usize, id: String },
    #[error("{origin}:{line}: entry has no ::id")]
    MissingId { origin: String, line: usize },
    #[error("{origin}:{line}: entry {id} has no ::snt")]
    MissingSentence { origin: String, line: usize, id: String },
    #[error("{origin}:{line}: gold AMR for {id} does not parse: {report}")]
    GoldParse {
        origin: String,
        line: usize,
        id: String,
        report: StructuralReport,
    },
    #[error("per-depth sample size must be at least 1")]
    EmptySample,
}

/// Provenance of an entry. The six named subsets are those of the test split.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum Subset {
    Bolt,
    Consensus,
    Dfa,
    Lorelei,
    ProxyReports,
    XinhuaMt,
    Other(String),
}

impl Subset {
    pub const NAMED: [Subset; 6] = [
        Subset::Bolt,
        Subset::Consensus,
        Subset::Dfa,
        Subset::Lorelei,
        Subset::ProxyReports,
        Subset::XinhuaMt,
    ];

    pub fn name(&self) -> &str {
        match self {
            Self::Bolt => "Bolt",
            Self::Consensus => "Consensus",
            Self::Dfa => "DFA",
            Self::Lorelei => "Lorelei",
            Self::ProxyReports => "ProxyReports",
            Self::XinhuaMt => "XinhuaMT",
            Self::Other(name) => name,
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<String> for Subset {
    fn from(s: String) -> Self {
        Self::NAMED
            .iter()
            .find(|n| n.name().eq_ignore_ascii_case(&s))
            .cloned()
            .unwrap_or(Self::Other(s))
    }
}

impl From<Subset> for String {
    fn from(s: Subset) -> Self {
        s.name().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    fn from_token(token: &str) -> Option<Self> {
        match token.to_ascii_lowercase().as_str() {
            "train" | "training" => Some(Self::Train),
            "dev" | "development" => Some(Self::Dev),
            "test" => Some(Self::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Train => "train",
            Self::Dev => "dev",
            Self::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_token(s).ok_or_else(|| format!("unknown split {s:?} (expected train, dev or test)"))
    }
}

/// One gold sentence/graph pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub sentence: String,
    /// The graph lines of the block, without the header.
    pub amr_text: String,
    pub subset: Subset,
    pub split: Split,
    pub depth: usize,
    pub metadata: IndexMap<String, String>,
}

/// How subsets are recognised: first by a token of the file name, then by id prefix.
///
/// File names are split on `-`, `_` and `.`; a pattern matches when it equals one of the
/// tokens (ignoring case). Id prefixes match case-insensitively; the longest one wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetRules {
    pub file_tokens: BTreeMap<String, Subset>,
    pub id_prefixes: BTreeMap<String, Subset>,
}

impl Default for SubsetRules {
    fn default() -> Self {
        let other = |s: &str| Subset::Other(s.to_string());
        let file_tokens = [
            ("bolt", Subset::Bolt),
            ("consensus", Subset::Consensus),
            ("dfa", Subset::Dfa),
            ("lorelei", Subset::Lorelei),
            ("proxy", Subset::ProxyReports),
            ("xinhua", Subset::XinhuaMt),
            ("cctv", other("BroadcastConversation")),
            ("dfb", other("DeftDfEnglish")),
            ("fables", other("AesopFables")),
            ("guidelines", other("Guidelines")),
            ("mt09sdl", other("OpenMt2009")),
            ("wb", other("Weblog")),
            ("wiki", other("Wikipedia")),
        ];
        let id_prefixes = [
            ("bolt", Subset::Bolt),
            ("nw.wsj", Subset::Consensus),
            ("df-", Subset::Dfa),
            ("lorelei", Subset::Lorelei),
            ("proxy", Subset::ProxyReports),
            ("nw.xin", Subset::XinhuaMt),
            ("xin_", Subset::XinhuaMt),
        ];
        Self {
            file_tokens: file_tokens.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            id_prefixes: id_prefixes.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

pub const UNKNOWN_SUBSET: &str = "Unknown";

impl SubsetRules {
    pub fn classify(&self, origin: &str, id: &str) -> Subset {
        let file = Path::new(origin)
            .file_name()
            .map(|f| f.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        for token in file.split(['-', '_', '.']) {
            if let Some((_, s)) = self.file_tokens.iter().find(|(k, _)| k.eq_ignore_ascii_case(token)) {
                return s.clone();
            }
        }
        let id = id.to_ascii_lowercase();
        self.id_prefixes
            .iter()
            .filter(|(p, _)| id.starts_with(&p.to_ascii_lowercase()))
            .max_by_key(|(p, _)| p.len())
            .map(|(_, s)| s.clone())
            .unwrap_or_else(|| Subset::Other(UNKNOWN_SUBSET.into()))
    }
}

/// Split named by a path component or file-name token, if any.
pub fn split_from_path(origin: &str) -> Option<Split> {
    let path = Path::new(origin);
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    file.split(['-', '_', '.'])
        .find_map(Split::from_token)
        .or_else(|| {
            path.components()
                .rev()
                .skip(1)
                .find_map(|c| Split::from_token(&c.as_os_str().to_string_lossy()))
        })
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub subset_rules: SubsetRules,
    /// Used when the path does not name a split.
    pub default_split: Split,
    /// Skip entries whose graph does not parse instead of aborting (for silver data).
    pub relaxed: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            subset_rules: SubsetRules::default(),
            default_split: Split::Test,
            relaxed: false,
        }
    }
}

/// An entry dropped by a relaxed load.
#[derive(Debug, Clone, PartialEq)]
pub struct Skipped {
    pub origin: String,
    pub line: usize,
    pub id: String,
    pub report: StructuralReport,
}

#[derive(Debug, Clone, Default)]
pub struct Loaded {
    pub entries: Vec<CorpusEntry>,
    pub skipped: Vec<Skipped>,
}

/// Reads one corpus stream. `origin` names it in errors and drives subset and split inference.
pub fn load_blocks(mut reader: impl Read, origin: &str, options: &LoadOptions) -> Result<Loaded, CorpusError> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|source| CorpusError::Io { origin: origin.into(), source })?;
    load_str(&text, origin, options)
}

pub fn load_str(text: &str, origin: &str, options: &LoadOptions) -> Result<Loaded, CorpusError> {
    let split = split_from_path(origin).unwrap_or(options.default_split);
    let mut loaded = Loaded::default();
    let mut seen = HashSet::new();
    for (line, block) in blocks(text) {
        let mut metadata = IndexMap::new();
        let mut graph_lines = Vec::new();
        for l in block.lines() {
            if graph_lines.is_empty() && l.trim_start().starts_with('#') {
                parse_metadata_line(l, &mut metadata);
            } else {
                graph_lines.push(l);
            }
        }
        if graph_lines.is_empty() {
            continue; // comment-only block, e.g. a file banner
        }
        let Some(id) = metadata.get("id").filter(|id| !id.is_empty()).cloned() else {
            return Err(CorpusError::MissingId { origin: origin.into(), line });
        };
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { origin: origin.into(), line, id });
        }
        let Some(sentence) = metadata.get("snt").cloned() else {
            return Err(CorpusError::MissingSentence { origin: origin.into(), line, id });
        };
        let amr_text = graph_lines.join("\n");
        let graph = match parse(&amr_text) {
            Ok(g) => g,
            Err(report) if options.relaxed => {
                log::warn!("{origin}:{line}: skipping {id}: {report}");
                loaded.skipped.push(Skipped { origin: origin.into(), line, id, report });
                continue;
            }
            Err(report) => {
                return Err(CorpusError::GoldParse { origin: origin.into(), line, id, report });
            }
        };
        loaded.entries.push(CorpusEntry {
            subset: options.subset_rules.classify(origin, &id),
            id,
            sentence,
            amr_text,
            split,
            depth: depth(&graph),
            metadata,
        });
    }
    Ok(loaded)
}

/// Non-blank blocks with their 1-based starting line.
fn blocks(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut current: Option<(usize, Vec<&str>)> = None;
    for (i, l) in text.lines().enumerate() {
        if l.trim().is_empty() {
            if let Some((start, lines)) = current.take() {
                out.push((start, lines.join("\n")));
            }
        } else {
            current.get_or_insert_with(|| (i + 1, Vec::new())).1.push(l);
        }
    }
    if let Some((start, lines)) = current {
        out.push((start, lines.join("\n")));
    }
    out
}

/// Loads a file, or every regular file under a directory (recursively, in path order).
/// Files load concurrently; ids must be unique across all of them.
pub fn load_path(path: &Path, options: &LoadOptions) -> Result<Loaded, CorpusError> {
    let files = corpus_files(path)?;
    let parts: Vec<Loaded> = files
        .par_iter()
        .map(|f| {
            let origin = f.display().to_string();
            let file = std::fs::File::open(f).map_err(|source| CorpusError::Io { origin: origin.clone(), source })?;
            load_blocks(std::io::BufReader::new(file), &origin, options)
        })
        .collect::<Result<_, _>>()?;
    let mut out = Loaded::default();
    let mut seen = HashSet::new();
    for part in parts {
        for e in &part.entries {
            if !seen.insert(e.id.clone()) {
                return Err(CorpusError::DuplicateId {
                    origin: path.display().to_string(),
                    line: 0,
                    id: e.id.clone(),
                });
            }
        }
        out.entries.extend(part.entries);
        out.skipped.extend(part.skipped);
    }
    Ok(out)
}

fn corpus_files(path: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let io = |source| CorpusError::Io { origin: path.display().to_string(), source };
    if !path.is_dir() {
        std::fs::metadata(path).map_err(io)?;
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    let mut stack = vec![path.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(io)? {
            let p = entry.map_err(io)?.path();
            let hidden = p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.'));
            if hidden {
                continue;
            }
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push(p);
            }
        }
    }
    files.sort();
    Ok(files)
}

/// Expected entry counts per (subset, split).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SubsetCatalog {
    cells: BTreeMap<(Subset, Split), usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellDiff {
    pub subset: Subset,
    pub split: Split,
    pub expected: usize,
    pub observed: usize,
}

impl fmt::Display for CellDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}: expected {}, found {}", self.subset, self.split, self.expected, self.observed)
    }
}

impl SubsetCatalog {
    /// The AMR 3.0 release (LDC2020T02).
    pub fn amr3() -> Self {
        let other = |s: &str| Subset::Other(s.to_string());
        let rows: [(Subset, [usize; 3]); 13] = [
            (Subset::Bolt, [1061, 133, 133]),
            (other("BroadcastConversation"), [214, 0, 0]),
            (Subset::Consensus, [0, 100, 100]),
            (Subset::Dfa, [7379, 210, 229]),
            (other("DeftDfEnglish"), [32915, 0, 0]),
            (other("AesopFables"), [49, 0, 0]),
            (other("Guidelines"), [970, 0, 0]),
            (Subset::Lorelei, [4441, 354, 527]),
            (other("OpenMt2009"), [204, 0, 0]),
            (Subset::ProxyReports, [6603, 826, 823]),
            (other("Weblog"), [866, 0, 0]),
            (other("Wikipedia"), [192, 0, 0]),
            (Subset::XinhuaMt, [741, 99, 86]),
        ];
        let mut cells = BTreeMap::new();
        for (subset, counts) in rows {
            for (split, n) in Split::ALL.into_iter().zip(counts) {
                if n > 0 {
                    cells.insert((subset.clone(), split), n);
                }
            }
        }
        Self { cells }
    }

    pub fn observe(entries: &[CorpusEntry]) -> Self {
        let mut cells = BTreeMap::new();
        for e in entries {
            *cells.entry((e.subset.clone(), e.split)).or_insert(0) += 1;
        }
        Self { cells }
    }

    pub fn count(&self, subset: &Subset, split: Split) -> usize {
        self.cells.get(&(subset.clone(), split)).copied().unwrap_or(0)
    }

    pub fn total(&self, split: Split) -> usize {
        self.cells.iter().filter(|((_, s), _)| *s == split).map(|(_, n)| n).sum()
    }

    /// Cells whose counts differ, restricted to the splits present in `observed`.
    pub fn diff(&self, observed: &SubsetCatalog) -> Vec<CellDiff> {
        let splits: HashSet<Split> = observed.cells.keys().map(|(_, s)| *s).collect();
        let keys: std::collections::BTreeSet<&(Subset, Split)> = self
            .cells
            .keys()
            .chain(observed.cells.keys())
            .filter(|(_, s)| splits.contains(s))
            .collect();
        keys.into_iter()
            .filter_map(|(subset, split)| {
                let expected = self.count(subset, *split);
                let found = observed.count(subset, *split);
                (expected != found).then(|| CellDiff {
                    subset: subset.clone(),
                    split: *split,
                    expected,
                    observed: found,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Shortfall {
    pub depth: usize,
    pub requested: usize,
    pub available: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Sample {
    pub entries: Vec<CorpusEntry>,
    pub shortfalls: Vec<Shortfall>,
}

/// Draws `per_depth` entries uniformly without replacement from each depth in `depths`.
///
/// Each depth uses its own generator derived from `seed`, so changing the range does not
/// change the draw at a given depth. Output is ordered by depth, then by position in
/// `entries`. Depths with fewer entries contribute all of them and are listed as shortfalls.
pub fn stratified_sample(
    entries: &[CorpusEntry],
    per_depth: usize,
    depths: RangeInclusive<usize>,
    seed: u64,
) -> Result<Sample, CorpusError> {
    if per_depth == 0 {
        return Err(CorpusError::EmptySample);
    }
    let mut out = Sample::default();
    for d in depths {
        let pool: Vec<&CorpusEntry> = entries.iter().filter(|e| e.depth == d).collect();
        let mut chosen: Vec<usize> = if pool.len() <= per_depth {
            (0..pool.len()).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(seed, d as u64));
            sample(&mut rng, pool.len(), per_depth).into_vec()
        };
        chosen.sort_unstable();
        if pool.len() < per_depth {
            out.shortfalls.push(Shortfall { depth: d, requested: per_depth, available: pool.len() });
        }
        out.entries.extend(chosen.into_iter().map(|i| pool[i].clone()));
    }
    Ok(out)
}

pub const DEFAULT_SYSTEM_PROMPT: &str = "You are an AMR parser. Convert English sentences into Abstract Meaning Representation (AMR) graphs. Use proper AMR notation and formatting.";

/// One line of a fine-tuning dataset: the three messages and the rendered conversation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRecord {
    pub system: String,
    pub user: String,
    pub assistant: String,
    pub text: String,
}

/// One line of an inference prompt file: the conversation up to the open assistant turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub id: String,
    pub system: String,
    pub user: String,
    pub text: String,
}

/// Renders a conversation in the layout of `family`. With `assistant = None` the text ends
/// with an open assistant turn.
pub fn render_chat(
    extractor: &Extractor,
    family: TemplateFamily,
    system: &str,
    user: &str,
    assistant: Option<&str>,
) -> String {
    let d = extractor.delimiters(family);
    let (start, end) = (d.assistant_start.as_str(), d.turn_end.as_str());
    let mut text = match family {
        TemplateFamily::Llama32 | TemplateFamily::DeepSeekR1LlamaDistilled => format!(
            "<|begin_of_text|><|start_header_id|>system<|end_header_id|>\n\n{system}{end}\
             <|start_header_id|>user<|end_header_id|>\n\n{user}{end}{start}\n\n"
        ),
        TemplateFamily::Phi35 => format!("<|system|>\n{system}{end}\n<|user|>\n{user}{end}\n{start}\n"),
        // Gemma has no system role; the system prompt opens the user turn.
        TemplateFamily::Gemma2 => format!("<bos><start_of_turn>user\n{system}\n\n{user}{end}\n{start}\n"),
        TemplateFamily::Plain => format!("{system}\n\n{user}\n\n"),
    };
    if let Some(a) = assistant {
        text.push_str(a);
        text.push_str(end);
        if family != TemplateFamily::Llama32 && family != TemplateFamily::DeepSeekR1LlamaDistilled {
            text.push('\n');
        }
    }
    text
}

pub fn format_finetune(
    entries: &[CorpusEntry],
    extractor: &Extractor,
    family: TemplateFamily,
    system_prompt: &str,
) -> Vec<ChatRecord> {
    entries
        .iter()
        .map(|e| ChatRecord {
            system: system_prompt.to_string(),
            user: e.sentence.clone(),
            assistant: e.amr_text.clone(),
            text: render_chat(extractor, family, system_prompt, &e.sentence, Some(&e.amr_text)),
        })
        .collect()
}

pub fn format_prompts(
    entries: &[CorpusEntry],
    extractor: &Extractor,
    family: TemplateFamily,
    system_prompt: &str,
) -> Vec<PromptRecord> {
    entries
        .iter()
        .map(|e| PromptRecord {
            id: e.id.clone(),
            system: system_prompt.to_string(),
            user: e.sentence.clone(),
            text: render_chat(extractor, family, system_prompt, &e.sentence, None),
        })
        .collect()
}

/// Serializes records as JSON lines.
pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// The `::id` of the header preceding a graph, if any.
pub fn header_id(text: &str) -> Option<String> {
    let mut md = IndexMap::new();
    for line in text.lines().take_while(|l| l.trim_start().starts_with('#')) {
        parse_metadata_line(line, &mut md);
    }
    md.get("id").cloned()
}
