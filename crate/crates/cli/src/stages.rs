//! Pipeline stages. Each reads its inputs from the configured paths and the
//! work directory, writes its outputs plus `<stage>.manifest` there, and
//! fails with an error tagged by the stage name.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use paracomp::dataset::{examples_from_tsv, examples_to_tsv, queries_to_tsv};
use paracomp::generators::ModelGenerator;
use paracomp::synthetic::SuffixLanguage;
use paracomp::{
    bmacc, build_splits, complete_paradigms, discover, load_corpus, load_lemmas, retrieve_additional_lemmas,
    retrieve_candidates, train_with_policy, CandidateTable, Corpus, DataSplit, FormGenerator, InflectionModel,
    LemmaList, ParadigmTable, SlotSystem, TreeGenerator,
};
use sha2::{Digest, Sha256};

use crate::config::{GeneratorKind, PipelineConfig};

pub const CANDIDATES: &str = "candidates.tsv";
pub const PSEUDO_LEMMAS: &str = "pseudo_lemmas.txt";
pub const SLOTS: &str = "slots.tsv";
pub const COVERAGE: &str = "coverage.tsv";
pub const TRAIN: &str = "train.tsv";
pub const DEV: &str = "dev.tsv";
pub const TEST: &str = "test.tsv";
pub const TRAIN_LOG: &str = "train_log.tsv";
pub const PREDICTIONS: &str = "predictions.tsv";
pub const REPORT: &str = "report.tsv";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Retrieve,
    Discover,
    BuildData,
    Train,
    Generate,
    Evaluate,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Retrieve => "retrieve",
            Stage::Discover => "discover",
            Stage::BuildData => "build-data",
            Stage::Train => "train",
            Stage::Generate => "generate",
            Stage::Evaluate => "evaluate",
        }
    }
}

/// What a stage wrote, plus human-readable notes.
#[derive(Clone, Debug, Default)]
pub struct StageReport {
    pub outputs: Vec<PathBuf>,
    pub notes: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn hash_file(path: &Path) -> String {
    fs::read(path).map_or_else(|_| "missing".to_owned(), |b| sha256_hex(&b))
}

/// Model file name for a neural generator.
pub fn model_file(kind: GeneratorKind) -> String {
    format!("model.{}", kind.name())
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    inputs: Vec<PathBuf>,
    report: StageReport,
}

impl<'a> Ctx<'a> {
    fn work(&self, name: &str) -> PathBuf {
        self.cfg.work_dir.join(name)
    }

    fn input_path(&mut self, field: &str, path: &Option<PathBuf>) -> Result<PathBuf> {
        let p = path
            .clone()
            .ok_or_else(|| anyhow!("config field `{field}` is not set"))?;
        if !p.is_file() {
            bail!("config field `{field}`: {} does not exist", p.display());
        }
        self.inputs.push(p.clone());
        Ok(p)
    }

    /// Read a work-directory artifact written by `producer`.
    fn artifact(&mut self, name: &str, producer: Stage) -> Result<String> {
        let p = self.work(name);
        let text = fs::read_to_string(&p).map_err(|_| {
            anyhow!(
                "missing {} in {}; run the {} stage first",
                name,
                self.cfg.work_dir.display(),
                producer.name()
            )
        })?;
        self.inputs.push(p);
        Ok(text)
    }

    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.work(name);
        fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
        self.report.outputs.push(p);
        Ok(())
    }

    fn corpus(&mut self) -> Result<Corpus> {
        let p = self.input_path("corpus", &self.cfg.corpus.clone())?;
        Ok(load_corpus(&p, self.cfg.lowercase, self.cfg.min_count)?)
    }

    fn lemmas(&mut self) -> Result<LemmaList> {
        let p = self.input_path("lemmas", &self.cfg.lemmas.clone())?;
        let list = load_lemmas(&p)?;
        Ok(if self.cfg.lowercase {
            LemmaList::new(list.iter().map(str::to_lowercase))
        } else {
            list
        })
    }

    fn slots(&mut self) -> Result<SlotSystem> {
        let slots = self.artifact(SLOTS, Stage::Discover)?;
        let coverage = self.artifact(COVERAGE, Stage::Discover)?;
        Ok(SlotSystem::from_tsv(&slots, &coverage)?)
    }

    fn split(&mut self) -> Result<DataSplit> {
        let paradigm_size = self.slots()?.paradigm_size();
        Ok(DataSplit {
            train: examples_from_tsv(&self.artifact(TRAIN, Stage::BuildData)?)?,
            dev: examples_from_tsv(&self.artifact(DEV, Stage::BuildData)?)?,
            test: examples_from_tsv(&self.artifact(TEST, Stage::BuildData)?)?,
            paradigm_size,
        })
    }
}

/// Run one stage: validate the config, execute, write the manifest.
pub fn run_stage(stage: Stage, cfg: &PipelineConfig) -> Result<StageReport> {
    let result = (|| -> Result<StageReport> {
        cfg.validate()?;
        fs::create_dir_all(&cfg.work_dir)
            .with_context(|| format!("creating work directory {}", cfg.work_dir.display()))?;
        let start = Instant::now();
        let mut ctx = Ctx {
            cfg,
            inputs: Vec::new(),
            report: StageReport::default(),
        };
        match stage {
            Stage::Retrieve => retrieve(&mut ctx)?,
            Stage::Discover => discover_stage(&mut ctx)?,
            Stage::BuildData => build_data(&mut ctx)?,
            Stage::Train => train_stage(&mut ctx)?,
            Stage::Generate => generate(&mut ctx)?,
            Stage::Evaluate => evaluate(&mut ctx)?,
        }
        write_manifest(stage, &ctx, start)?;
        Ok(ctx.report)
    })();
    result.with_context(|| format!("stage {}", stage.name()))
}

fn write_manifest(stage: Stage, ctx: &Ctx, start: Instant) -> Result<()> {
    let mut m = String::new();
    let _ = writeln!(m, "stage\t{}", stage.name());
    for p in &ctx.inputs {
        let _ = writeln!(m, "input\t{}\t{}", p.display(), hash_file(p));
    }
    for p in &ctx.report.outputs {
        let _ = writeln!(m, "output\t{}\t{}", p.display(), hash_file(p));
    }
    for line in ctx.cfg.to_text().lines() {
        let _ = writeln!(m, "config\t{line}");
    }
    for note in &ctx.report.notes {
        let _ = writeln!(m, "note\t{note}");
    }
    let _ = writeln!(m, "elapsed_ms\t{}", start.elapsed().as_millis());
    let p = ctx.work(&format!("{}.manifest", stage.name()));
    fs::write(&p, m).with_context(|| format!("writing {}", p.display()))
}

fn retrieve(ctx: &mut Ctx) -> Result<()> {
    let corpus = ctx.corpus()?;
    let lemmas = ctx.lemmas()?;
    let rc = &ctx.cfg.retrieval;
    let table = retrieve_candidates(&corpus, &lemmas, rc);
    let (pseudo, table) = retrieve_additional_lemmas(&corpus, &table, &lemmas, rc);
    ctx.report.notes.push(format!(
        "{} candidates, {} trees, {} pseudo-lemmas",
        table.len(),
        table.tree_counts().len(),
        pseudo.len()
    ));
    ctx.write(CANDIDATES, &table.to_tsv())?;
    let mut body = pseudo.join("\n");
    if !body.is_empty() {
        body.push('\n');
    }
    ctx.write(PSEUDO_LEMMAS, &body)
}

fn discover_stage(ctx: &mut Ctx) -> Result<()> {
    let table = CandidateTable::from_tsv(&ctx.artifact(CANDIDATES, Stage::Retrieve)?)?;
    let corpus = ctx.corpus()?;
    let sys = discover(&table, |w| corpus.count(w), &ctx.cfg.discovery);
    ctx.report.notes.push(format!("paradigm size {}", sys.paradigm_size()));
    ctx.write(SLOTS, &sys.to_tsv())?;
    ctx.write(COVERAGE, &sys.coverage_tsv())
}

fn build_data(ctx: &mut Ctx) -> Result<()> {
    let sys = ctx.slots()?;
    let lemmas = ctx.lemmas()?;
    let out = build_splits(&sys, &lemmas, ctx.cfg.dev_fraction, ctx.cfg.seed)?;
    if let Some(w) = out.warning {
        ctx.report.notes.push(format!("warning: {w}"));
    }
    let s = &out.split;
    ctx.report.notes.push(format!(
        "{} train, {} dev, {} test queries",
        s.train.len(),
        s.dev.len(),
        s.test.len()
    ));
    ctx.write(TRAIN, &examples_to_tsv(&s.train))?;
    ctx.write(DEV, &examples_to_tsv(&s.dev))?;
    ctx.write(TEST, &queries_to_tsv(&s.test))
}

fn train_stage(ctx: &mut Ctx) -> Result<()> {
    let split = ctx.split()?;
    if split.train.is_empty() {
        bail!(
            "{TRAIN} is empty: the {} stage produced no training examples",
            Stage::BuildData.name()
        );
    }
    let kind = match ctx.cfg.model {
        GeneratorKind::Tree => {
            ctx.report.notes.push("tree generator: nothing to train".to_owned());
            return Ok(());
        }
        GeneratorKind::Neural(k) => k,
    };
    let out = train_with_policy(kind, ctx.cfg.policy, &split, ctx.cfg.seed)?;
    for (mode, acc) in &out.variants {
        ctx.report.notes.push(format!("variant {mode}: best accuracy {acc:.4}"));
    }
    ctx.report.notes.push(format!(
        "selected {} at epoch {} ({} epochs run, accuracy on {})",
        out.config.mode,
        out.log.best_epoch,
        out.log.records.len(),
        if out.log.on_dev { "dev" } else { "train" }
    ));
    ctx.write(&model_file(ctx.cfg.model), &out.model.to_text())?;
    ctx.write(TRAIN_LOG, &out.log.to_tsv())
}

fn generate(ctx: &mut Ctx) -> Result<()> {
    let split = ctx.split()?;
    let lemmas = ctx.lemmas()?;
    let table = match ctx.cfg.model {
        GeneratorKind::Tree => {
            let sys = ctx.slots()?;
            complete_paradigms(&split, &lemmas, &TreeGenerator::new(&sys))?
        }
        GeneratorKind::Neural(_) => {
            let text = ctx.artifact(&model_file(ctx.cfg.model), Stage::Train)?;
            let model = InflectionModel::from_text(&text)?;
            let generator = ModelGenerator {
                model: &model,
                beam: ctx.cfg.beam,
            };
            complete_paradigms(&split, &lemmas, &generator as &dyn FormGenerator)?
        }
    };
    ctx.report.notes.push(format!("{} cells", table.cell_count()));
    ctx.write(PREDICTIONS, &table.to_tsv())
}

fn evaluate(ctx: &mut Ctx) -> Result<()> {
    let predicted: ParadigmTable<usize> = ParadigmTable::from_tsv(&ctx.artifact(PREDICTIONS, Stage::Generate)?)?;
    let gold_path = ctx.input_path("gold", &ctx.cfg.gold.clone())?;
    let text = fs::read_to_string(&gold_path).with_context(|| format!("reading {}", gold_path.display()))?;
    let text = if ctx.cfg.lowercase { lowercase_entries(&text) } else { text };
    let gold: ParadigmTable<String> = ParadigmTable::from_tsv(&text)?;
    let report = bmacc(&predicted, &gold)?;
    ctx.report.notes.push(format!(
        "macro BMAcc {:.2}, micro BMAcc {:.2}",
        100.0 * report.macro_accuracy,
        100.0 * report.micro_accuracy
    ));
    ctx.write(REPORT, &report.to_tsv())
}

/// Lowercase the lemma and form columns; feature bundles keep their case.
fn lowercase_entries(tsv: &str) -> String {
    let mut out = String::with_capacity(tsv.len());
    for line in tsv.lines() {
        let mut fields: Vec<String> = line.split('\t').map(str::to_owned).collect();
        for f in fields.iter_mut().take(2) {
            *f = f.to_lowercase();
        }
        out.push_str(&fields.join("\t"));
        out.push('\n');
    }
    out
}

/// Every stage in order; evaluation only when gold is configured.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Vec<(Stage, StageReport)>> {
    let mut stages = vec![
        Stage::Retrieve,
        Stage::Discover,
        Stage::BuildData,
        Stage::Train,
        Stage::Generate,
    ];
    if cfg.gold.is_some() {
        stages.push(Stage::Evaluate);
    }
    stages
        .into_iter()
        .map(|s| run_stage(s, cfg).map(|r| (s, r)))
        .collect()
}

/// Parameters of a generated suffixing language.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub stems: usize,
    pub lemmas: usize,
    pub coverage: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            stems: 300,
            lemmas: 100,
            coverage: 0.8,
            seed: 1,
        }
    }
}

/// Write `corpus.txt`, `lemmas.txt` and `gold.tsv` for a synthetic
/// language with suffixes +a, +it, +on.
pub fn write_synthetic(dir: &Path, params: &SynthParams) -> Result<Vec<PathBuf>> {
    if params.lemmas > params.stems {
        bail!("lemmas ({}) exceeds stems ({})", params.lemmas, params.stems);
    }
    if !(0.0..=1.0).contains(&params.coverage) {
        bail!("coverage {} outside [0, 1]", params.coverage);
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let lang = SuffixLanguage::standard(params.stems, params.seed);
    let lemmas = lang.input_lemmas(params.lemmas);
    let mut lemma_text = String::new();
    for l in lemmas.iter() {
        let _ = writeln!(lemma_text, "{l}");
    }
    let files = [
        ("corpus.txt", lang.corpus_text(params.coverage, params.seed)),
        ("lemmas.txt", lemma_text),
        ("gold.tsv", lang.gold(&lemmas).to_tsv()),
    ];
    let mut out = Vec::new();
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn stage_names() {
        assert_eq!(Stage::BuildData.name(), "build-data");
        assert_eq!(model_file(GeneratorKind::Neural(paracomp::ModelKind::PointerGenerator)), "model.pgen");
    }
}
