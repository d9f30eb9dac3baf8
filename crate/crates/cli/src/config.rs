//! Pipeline configuration: defaults, overlaid by a TOML file, overlaid by flags.

use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use soliclone_core::corpus::{parse_timestamp, DEFAULT_MIN_TX};
use soliclone_core::embed::EmbedderSpec;
use soliclone_core::extractor::DEFAULT_MIN_COMMENT_TOKENS;
use soliclone_core::hashing::sha256_hex;
use soliclone_core::llmdoc::{LlmProviderSpec, PromptStyle, DEFAULT_MIN_WORDS};
use soliclone_core::pairs::{PairingPolicy, SetLabel, Thresholds};
use soliclone_core::sampling::{
    SampleSize, SamplingParams, DEFAULT_CONFIDENCE, DEFAULT_MARGIN, DEFAULT_PROPORTION,
};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Locations only; excluded from the config hash.
    pub paths: PathsConfig,
    pub corpus: CorpusConfig,
    pub extract: ExtractConfig,
    pub embed: EmbedConfig,
    pub pairs: PairsConfig,
    pub sample: SampleConfig,
    pub llm: LlmConfig,
    pub review: ReviewConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub out_dir: PathBuf,
    /// Address/activity CSV export.
    pub addresses: Option<PathBuf>,
    /// Directory of `<address>.sol` / `<address>/*.sol` sources.
    pub sources: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub min_tx: u64,
    /// `YYYY-MM-DD` (midnight UTC) or RFC 3339.
    pub cutoff: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub min_comment_tokens: usize,
    pub keep_all_visibilities: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub code: EmbedderSpec,
    pub comment: EmbedderSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairsConfig {
    pub policy: PairingPolicy,
    pub code_threshold: f64,
    pub comment_threshold: f64,
    /// Count `cd_s == code_threshold` as high instead of low.
    pub code_boundary_high: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub set: SetLabel,
    /// `auto` or a fixed count.
    pub n: String,
    pub confidence: f64,
    pub margin: f64,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub provider: LlmProviderSpec,
    pub style: PromptStyle,
    pub min_words: usize,
    pub code_threshold: f64,
    /// Generated-summary similarity must exceed this.
    pub threshold: f64,
    pub top_contracts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReviewConfig {
    pub port: u16,
    pub raters: Vec<String>,
    pub static_dir: Option<PathBuf>,
    /// Environment variable holding the static bearer token.
    pub token_env: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: DEFAULT_SEED,
            paths: PathsConfig::default(),
            corpus: CorpusConfig::default(),
            extract: ExtractConfig::default(),
            embed: EmbedConfig::default(),
            pairs: PairsConfig::default(),
            sample: SampleConfig::default(),
            llm: LlmConfig::default(),
            review: ReviewConfig::default(),
        }
    }
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            out_dir: PathBuf::from("out"),
            addresses: None,
            sources: None,
        }
    }
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            min_tx: DEFAULT_MIN_TX,
            cutoff: "2024-01-01".into(),
        }
    }
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            min_comment_tokens: DEFAULT_MIN_COMMENT_TOKENS,
            keep_all_visibilities: false,
        }
    }
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            code: EmbedderSpec::code_baseline(),
            comment: EmbedderSpec::comment_baseline(),
        }
    }
}

impl Default for PairsConfig {
    fn default() -> Self {
        let t = Thresholds::default();
        PairsConfig {
            policy: PairingPolicy::AllPairs,
            code_threshold: t.code,
            comment_threshold: t.comment,
            code_boundary_high: t.code_boundary_high,
        }
    }
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            set: SetLabel::Candidate,
            n: "auto".into(),
            confidence: DEFAULT_CONFIDENCE,
            margin: DEFAULT_MARGIN,
            proportion: DEFAULT_PROPORTION,
        }
    }
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            provider: LlmProviderSpec::default(),
            style: PromptStyle::Base,
            min_words: DEFAULT_MIN_WORDS,
            code_threshold: 0.8,
            threshold: 0.8,
            top_contracts: 100,
        }
    }
}

impl Default for ReviewConfig {
    fn default() -> Self {
        ReviewConfig {
            port: 8080,
            raters: vec!["rater1".into(), "rater2".into()],
            static_dir: None,
            token_env: None,
        }
    }
}

fn unit_interval(name: &str, v: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{name} must lie in [0, 1], got {v}"
        )))
    }
}

impl PipelineConfig {
    /// Defaults overlaid with `path`, when given.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Rejects out-of-range values before any stage runs.
    pub fn validate(&self) -> Result<(), CliError> {
        self.cutoff()?;
        self.sample_size()?;
        unit_interval("pairs.code_threshold", self.pairs.code_threshold)?;
        unit_interval("pairs.comment_threshold", self.pairs.comment_threshold)?;
        unit_interval("llm.code_threshold", self.llm.code_threshold)?;
        unit_interval("llm.threshold", self.llm.threshold)?;
        if !(self.sample.confidence > 0.0 && self.sample.confidence < 1.0) {
            return Err(CliError::Config(format!(
                "sample.confidence must lie in (0, 1), got {}",
                self.sample.confidence
            )));
        }
        if !(self.sample.margin > 0.0 && self.sample.margin < 1.0) {
            return Err(CliError::Config(format!(
                "sample.margin must lie in (0, 1), got {}",
                self.sample.margin
            )));
        }
        unit_interval("sample.proportion", self.sample.proportion)?;
        if self.embed.code.dim == 0 || self.embed.comment.dim == 0 {
            return Err(CliError::Config("embedding dims must be positive".into()));
        }
        if self.llm.style == PromptStyle::DirectClassification {
            return Err(CliError::Config(
                "llm.style must be `base` or `structured`".into(),
            ));
        }
        Ok(())
    }

    pub fn cutoff(&self) -> Result<DateTime<Utc>, CliError> {
        let raw = self.corpus.cutoff.trim();
        if let Ok(d) = NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
            return Ok(Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).expect("midnight exists")));
        }
        parse_timestamp(raw)
            .ok_or_else(|| CliError::Config(format!("corpus.cutoff `{raw}` is not a date")))
    }

    pub fn sample_size(&self) -> Result<SampleSize, CliError> {
        self.sample
            .n
            .parse()
            .map_err(|e: soliclone_core::Error| CliError::Config(e.to_string()))
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            code: self.pairs.code_threshold,
            comment: self.pairs.comment_threshold,
            code_boundary_high: self.pairs.code_boundary_high,
        }
    }

    pub fn sampling(&self) -> Result<SamplingParams, CliError> {
        Ok(SamplingParams {
            confidence: self.sample.confidence,
            margin: self.sample.margin,
            proportion: self.sample.proportion,
            size: self.sample_size()?,
            seed: self.seed,
        })
    }

    /// The parameters without locations: what determines artifact content.
    pub fn parameters(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config is plain data");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("paths");
        }
        v
    }

    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_vec(&self.parameters()).expect("config is plain data"))
    }
}
