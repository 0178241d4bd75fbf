//! Flat `key = value` pipeline configuration.

use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use paracomp::{DiscoveryConfig, ModelKind, PolicyChoice, PolicyMode, RetrievalConfig};

/// Which generator fills missing cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorKind {
    Neural(ModelKind),
    /// Apply each slot's edit trees; no training.
    Tree,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Neural(k) => k.name(),
            GeneratorKind::Tree => "tree",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub lemmas: Option<PathBuf>,
    pub work_dir: PathBuf,
    pub gold: Option<PathBuf>,
    pub lowercase: bool,
    pub min_count: u64,
    pub retrieval: RetrievalConfig,
    pub discovery: DiscoveryConfig,
    pub dev_fraction: f64,
    pub model: GeneratorKind,
    pub policy: PolicyChoice,
    pub seed: u64,
    pub beam: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            lemmas: None,
            work_dir: PathBuf::from("work"),
            gold: None,
            lowercase: true,
            min_count: 1,
            retrieval: RetrievalConfig::default(),
            discovery: DiscoveryConfig::default(),
            dev_fraction: 0.1,
            model: GeneratorKind::Neural(ModelKind::PointerGenerator),
            policy: PolicyChoice::Select,
            seed: 1,
            beam: 1,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| anyhow!("config field `{key}`: cannot parse {value:?}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => bail!("config field `{key}`: expected true or false, got {value:?}"),
    }
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty() && value != "none").then(|| PathBuf::from(value))
}

impl PipelineConfig {
    /// Parse a config file body on top of the defaults. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            cfg.set_pair(line).with_context(|| format!("config line {}", n + 1))?;
        }
        Ok(cfg)
    }

    /// Read a config file; relative paths in it are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::from_text(&text).with_context(|| format!("config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut cfg.corpus, &mut cfg.lemmas, &mut cfg.gold].into_iter().flatten() {
            rebase(p);
        }
        if text.lines().any(|l| l.trim_start().starts_with("work_dir")) {
            rebase(&mut cfg.work_dir);
        }
        Ok(cfg)
    }

    /// Apply one `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("expected key=value, got {pair:?}"))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "corpus" => self.corpus = opt_path(value),
            "lemmas" => self.lemmas = opt_path(value),
            "work_dir" => self.work_dir = PathBuf::from(value),
            "gold" => self.gold = opt_path(value),
            "lowercase" => self.lowercase = parse_bool(key, value)?,
            "min_count" => self.min_count = parse_num(key, value)?,
            "min_lcs_abs" => self.retrieval.min_lcs_abs = parse_num(key, value)?,
            "min_lcs_ratio" => self.retrieval.min_lcs_ratio = parse_num(key, value)?,
            "tree_min_lemmas" => self.retrieval.tree_min_lemmas = parse_num(key, value)?,
            "pseudo_lemma_min_hits" => self.retrieval.pseudo_lemma_min_hits = parse_num(key, value)?,
            "max_form_len_delta" => {
                self.retrieval.max_form_len_delta = match value {
                    "none" => None,
                    v => Some(parse_num(key, v)?),
                }
            }
            "min_slot_coverage" => self.discovery.min_slot_coverage = parse_num(key, value)?,
            "similarity_floor" => self.discovery.similarity_floor = parse_num(key, value)?,
            "dev_fraction" => self.dev_fraction = parse_num(key, value)?,
            "model" => {
                self.model = match value {
                    "tree" => GeneratorKind::Tree,
                    v => GeneratorKind::Neural(
                        v.parse()
                            .map_err(|_| anyhow!("config field `model`: expected pgen, seq2seq or tree, got {v:?}"))?,
                    ),
                }
            }
            "policy" => {
                self.policy = match value {
                    "S" | "s" => PolicyChoice::Fixed(PolicyMode::S),
                    "V" | "v" => PolicyChoice::Fixed(PolicyMode::V),
                    "auto" => PolicyChoice::Select,
                    v => bail!("config field `policy`: expected S, V or auto, got {v:?}"),
                }
            }
            "seed" => self.seed = parse_num(key, value)?,
            "beam" => self.beam = parse_num(key, value)?,
            _ => bail!("unknown config field `{key}`"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.retrieval.validate().context("config field in retrieval settings")?;
        self.discovery.validate().context("config field in discovery settings")?;
        if !(0.0..1.0).contains(&self.dev_fraction) {
            bail!("config field `dev_fraction`: {} outside [0, 1)", self.dev_fraction);
        }
        if self.beam == 0 {
            bail!("config field `beam`: must be >= 1");
        }
        Ok(())
    }

    /// Canonical `key = value` rendering; parses back to the same config.
    pub fn to_text(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("none".to_owned(), |p| p.display().to_string());
        let r = &self.retrieval;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("corpus", path(&self.corpus));
        kv("lemmas", path(&self.lemmas));
        kv("work_dir", self.work_dir.display().to_string());
        kv("gold", path(&self.gold));
        kv("lowercase", self.lowercase.to_string());
        kv("min_count", self.min_count.to_string());
        kv("min_lcs_abs", r.min_lcs_abs.to_string());
        kv("min_lcs_ratio", format!("{:?}", r.min_lcs_ratio));
        kv("tree_min_lemmas", r.tree_min_lemmas.to_string());
        kv("pseudo_lemma_min_hits", r.pseudo_lemma_min_hits.to_string());
        kv(
            "max_form_len_delta",
            r.max_form_len_delta.map_or("none".to_owned(), |d| d.to_string()),
        );
        kv("min_slot_coverage", format!("{:?}", self.discovery.min_slot_coverage));
        kv("similarity_floor", format!("{:?}", self.discovery.similarity_floor));
        kv("dev_fraction", format!("{:?}", self.dev_fraction));
        kv("model", self.model.name().to_owned());
        kv(
            "policy",
            match self.policy {
                PolicyChoice::Fixed(m) => m.to_string(),
                PolicyChoice::Select => "auto".to_owned(),
            },
        );
        kv("seed", self.seed.to_string());
        kv("beam", self.beam.to_string());
        out
    }
}
