//! Recovers the AMR string from raw model generations that still carry chat-template tokens.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateFamily {
    Llama32,
    #[serde(rename = "deepseek-r1-llama-distilled", alias = "deep-seek-r1-llama-distilled")]
    DeepSeekR1LlamaDistilled,
    Phi35,
    Gemma2,
    Plain,
}

impl TemplateFamily {
    pub const ALL: [TemplateFamily; 5] = [
        TemplateFamily::Llama32,
        TemplateFamily::DeepSeekR1LlamaDistilled,
        TemplateFamily::Phi35,
        TemplateFamily::Gemma2,
        TemplateFamily::Plain,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Llama32 => "llama32",
            Self::DeepSeekR1LlamaDistilled => "deepseek-r1-llama-distilled",
            Self::Phi35 => "phi35",
            Self::Gemma2 => "gemma2",
            Self::Plain => "plain",
        }
    }
}

impl fmt::Display for TemplateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TemplateFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "llama32" | "llama" => Ok(Self::Llama32),
            "deepseekr1llamadistilled" | "deepseek" => Ok(Self::DeepSeekR1LlamaDistilled),
            "phi35" | "phi" => Ok(Self::Phi35),
            "gemma2" | "gemma" => Ok(Self::Gemma2),
            "plain" | "none" => Ok(Self::Plain),
            _ => Err(format!("unknown template family {s:?}")),
        }
    }
}

/// The token that opens the assistant turn and the one that closes a turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delimiters {
    pub assistant_start: String,
    pub turn_end: String,
}

impl Delimiters {
    fn new(assistant_start: &str, turn_end: &str) -> Self {
        Self {
            assistant_start: assistant_start.into(),
            turn_end: turn_end.into(),
        }
    }
}

/// Built-in delimiter pair of a family.
pub fn delimiters(family: TemplateFamily) -> Delimiters {
    match family {
        TemplateFamily::Llama32 | TemplateFamily::DeepSeekR1LlamaDistilled => {
            Delimiters::new("<|start_header_id|>assistant<|end_header_id|>", "<|eot_id|>")
        }
        TemplateFamily::Phi35 => Delimiters::new("<|assistant|>", "<|end|>"),
        TemplateFamily::Gemma2 => Delimiters::new("<start_of_turn>model", "<end_of_turn>"),
        TemplateFamily::Plain => Delimiters::new("", ""),
    }
}

/// Delimiter table with per-family overrides and the reasoning-block switch.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extractor {
    #[serde(default)]
    pub overrides: BTreeMap<TemplateFamily, Delimiters>,
    /// Drop a leading `<think>...</think>` block from DeepSeek outputs.
    #[serde(default = "default_true")]
    pub strip_think: bool,
}

fn default_true() -> bool {
    true
}

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";

impl Extractor {
    pub fn new() -> Self {
        Self {
            overrides: BTreeMap::new(),
            strip_think: true,
        }
    }

    pub fn delimiters(&self, family: TemplateFamily) -> Delimiters {
        self.overrides
            .get(&family)
            .cloned()
            .unwrap_or_else(|| delimiters(family))
    }

    /// Text after the last assistant-start delimiter, cut at the first turn-end delimiter that
    /// follows it, trimmed.
    ///
    /// Without an assistant-start delimiter the whole input is used, still cut at the first
    /// turn-end delimiter, so no delimiter of the family survives in the output. `Plain`
    /// only trims.
    pub fn extract(&self, raw: &str, family: TemplateFamily) -> String {
        let Delimiters {
            assistant_start,
            turn_end,
        } = self.delimiters(family);
        let mut text = raw;
        if !assistant_start.is_empty() {
            if let Some(at) = text.rfind(&assistant_start) {
                text = &text[at + assistant_start.len()..];
            }
        }
        if !turn_end.is_empty() {
            if let Some(at) = text.find(&turn_end) {
                text = &text[..at];
            }
        }
        let mut text = text.trim();
        if self.strip_think && family == TemplateFamily::DeepSeekR1LlamaDistilled {
            if let Some(rest) = text.strip_prefix(THINK_OPEN) {
                if let Some(at) = rest.find(THINK_CLOSE) {
                    text = rest[at + THINK_CLOSE.len()..].trim();
                }
            }
        }
        text.to_string()
    }
}

/// [`Extractor::extract`] with the built-in delimiter table.
pub fn extract_amr(raw: &str, family: TemplateFamily) -> String {
    Extractor::new().extract(raw, family)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LLAMA_RAW: &str = "<|begin_of_text|><|start_header_id|>system<|end_header_id|>\n\nYou are an AMR parser.<|eot_id|><|start_header_id|>user<|end_header_id|>\n\nThe boy wants to go.<|eot_id|><|start_header_id|>assistant<|end_header_id|>\n\n(w / want-01\n    :arg0 (b / boy))<|eot_id|>";

    #[test]
    fn llama_generation() {
        assert_eq!(
            extract_amr(LLAMA_RAW, TemplateFamily::Llama32),
            "(w / want-01\n    :arg0 (b / boy))"
        );
    }

    #[test]
    fn gemma_generation() {
        assert_eq!(
            extract_amr("<start_of_turn>model\n(b / boy)<end_of_turn>", TemplateFamily::Gemma2),
            "(b / boy)"
        );
    }

    #[test]
    fn phi_generation_keeps_last_assistant_turn() {
        let raw = "<|system|>\nsys<|end|>\n<|user|>\nu<|end|>\n<|assistant|>\n(x / first)<|end|>\n<|user|>\nagain<|end|>\n<|assistant|>\n(y / second)<|end|><|endoftext|>";
        assert_eq!(extract_amr(raw, TemplateFamily::Phi35), "(y / second)");
    }

    #[test]
    fn fallback_and_plain() {
        assert_eq!(extract_amr("  (b / boy)\n", TemplateFamily::Plain), "(b / boy)");
        assert_eq!(extract_amr("  (b / boy)\n", TemplateFamily::Llama32), "(b / boy)");
        assert_eq!(extract_amr("(b / boy)<|eot_id|>junk", TemplateFamily::Llama32), "(b / boy)");
    }

    #[test]
    fn delimiter_table() {
        assert_eq!(
            delimiters(TemplateFamily::Llama32),
            Delimiters::new("<|start_header_id|>assistant<|end_header_id|>", "<|eot_id|>")
        );
        assert_eq!(delimiters(TemplateFamily::DeepSeekR1LlamaDistilled), delimiters(TemplateFamily::Llama32));
        assert_eq!(delimiters(TemplateFamily::Phi35), Delimiters::new("<|assistant|>", "<|end|>"));
        assert_eq!(delimiters(TemplateFamily::Gemma2), Delimiters::new("<start_of_turn>model", "<end_of_turn>"));
        assert_eq!(delimiters(TemplateFamily::Plain), Delimiters::new("", ""));
    }

    #[test]
    fn overrides_replace_the_table() {
        let mut ex = Extractor::new();
        ex.overrides.insert(TemplateFamily::Phi35, Delimiters::new("<|im_start|>assistant", "<|im_end|>"));
        assert_eq!(ex.extract("<|im_start|>assistant\n(b / boy)<|im_end|>", TemplateFamily::Phi35), "(b / boy)");
    }

    #[test]
    fn reasoning_block_is_dropped_for_deepseek() {
        let raw = "<|start_header_id|>assistant<|end_header_id|>\n<think>\nlet me see\n</think>\n\n(b / boy)<|eot_id|>";
        assert_eq!(extract_amr(raw, TemplateFamily::DeepSeekR1LlamaDistilled), "(b / boy)");
        let keep = Extractor {
            strip_think: false,
            ..Extractor::new()
        };
        assert!(keep.extract(raw, TemplateFamily::DeepSeekR1LlamaDistilled).starts_with("<think>"));
    }

    #[test]
    fn family_names_parse() {
        for f in TemplateFamily::ALL {
            assert_eq!(f.name().parse::<TemplateFamily>().unwrap(), f);
            assert_eq!(serde_json::to_string(&f).unwrap(), format!("\"{}\"", f.name()));
        }
        assert_eq!("LLaMA-3.2".parse::<TemplateFamily>().unwrap(), TemplateFamily::Llama32);
        assert!("mistral".parse::<TemplateFamily>().is_err());
    }

    fn family() -> impl Strategy<Value = TemplateFamily> {
        prop::sample::select(TemplateFamily::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn extraction_is_idempotent(raw in any::<String>(), f in family()) {
            let once = extract_amr(&raw, f);
            prop_assert_eq!(extract_amr(&once, TemplateFamily::Plain), once);
        }
    }
}
