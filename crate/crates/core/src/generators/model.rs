use std::fmt::Write;

use rand::Rng;

use super::hyper::ModelKind;
use super::pgen::PointerGeneratorModel;
use super::seq2seq::Seq2SeqModel;
use super::transducer::{ModelDims, Noise, Transducer};
use super::vocab::{CharVocab, BOS, EOS};
use crate::error::{Error, Result};
use crate::neural::{Graph, ParamStore};

/// A trained (or freshly initialized) inflection generator.
#[derive(Clone, Debug)]
pub enum InflectionModel {
    Seq2Seq(Box<Seq2SeqModel>),
    PointerGenerator(Box<PointerGeneratorModel>),
}

/// A decoded form and its model log-probability.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub form: String,
    pub ids: Vec<usize>,
    pub log_prob: f64,
}

impl InflectionModel {
    pub fn new(kind: ModelKind, vocab: CharVocab, dims: ModelDims, rng: &mut impl Rng) -> Self {
        match kind {
            ModelKind::Seq2Seq => InflectionModel::Seq2Seq(Box::new(Seq2SeqModel::new(vocab, dims, rng))),
            ModelKind::PointerGenerator => {
                InflectionModel::PointerGenerator(Box::new(PointerGeneratorModel::new(vocab, dims, rng)))
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            InflectionModel::Seq2Seq(_) => ModelKind::Seq2Seq,
            InflectionModel::PointerGenerator(_) => ModelKind::PointerGenerator,
        }
    }

    pub fn vocab(&self) -> &CharVocab {
        match self {
            InflectionModel::Seq2Seq(m) => m.vocab(),
            InflectionModel::PointerGenerator(m) => m.vocab(),
        }
    }

    pub fn dims(&self) -> ModelDims {
        match self {
            InflectionModel::Seq2Seq(m) => m.dims(),
            InflectionModel::PointerGenerator(m) => m.dims(),
        }
    }

    pub fn store(&self) -> &ParamStore {
        match self {
            InflectionModel::Seq2Seq(m) => m.store(),
            InflectionModel::PointerGenerator(m) => m.store(),
        }
    }

    /// Decode a form for `(lemma, slot)`; `beam == 1` is greedy.
    pub fn generate(&self, lemma: &str, slot: usize, beam: usize) -> Result<String> {
        Ok(self.generate_scored(lemma, slot, beam)?.form)
    }

    pub fn generate_scored(&self, lemma: &str, slot: usize, beam: usize) -> Result<Decoded> {
        match self {
            InflectionModel::Seq2Seq(m) => decode(m.as_ref(), lemma, slot, beam),
            InflectionModel::PointerGenerator(m) => decode(m.as_ref(), lemma, slot, beam),
        }
    }

    /// Log-probability the model assigns to producing `form`.
    pub fn score(&self, lemma: &str, slot: usize, form: &str) -> Result<f64> {
        fn run<T: Transducer>(m: &T, lemma: &str, slot: usize, form: &str) -> Result<f64> {
            let src = m.source(lemma, slot)?;
            let target = src.target(m.vocab(), form);
            let mut g = Graph::new(m.store());
            let loss = m.loss(&mut g, &src, &target, &mut Noise::off())?;
            Ok(-g.scalar(loss))
        }
        match self {
            InflectionModel::Seq2Seq(m) => run(m.as_ref(), lemma, slot, form),
            InflectionModel::PointerGenerator(m) => run(m.as_ref(), lemma, slot, form),
        }
    }

    /// Versioned text serialization.
    pub fn to_text(&self) -> String {
        let dims = self.dims();
        let mut out = String::new();
        let _ = writeln!(out, "{}-model v1", self.kind().name());
        let _ = writeln!(out, "embed {}", dims.embed);
        let _ = writeln!(out, "hidden {}", dims.hidden);
        let _ = writeln!(out, "dropout {:?}", dims.dropout);
        let _ = writeln!(out, "vocab {}", self.vocab().to_line());
        self.store().write_text(&mut out);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let kind = match lines.next() {
            Some("pgen-model v1") => ModelKind::PointerGenerator,
            Some("seq2seq-model v1") => ModelKind::Seq2Seq,
            other => return Err(Error::parse("model file", format!("unknown header {other:?}"))),
        };
        let mut field = |name: &str| -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| Error::parse("model file", format!("missing {name}")))?;
            line.strip_prefix(name)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(str::to_owned)
                .ok_or_else(|| Error::parse("model file", format!("expected {name}, found {line:?}")))
        };
        let num = |s: String, name: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::parse("model file", format!("bad {name} {s:?}")))
        };
        let embed = num(field("embed")?, "embed")? as usize;
        let hidden = num(field("hidden")?, "hidden")? as usize;
        let dropout = num(field("dropout")?, "dropout")?;
        let vocab = CharVocab::from_line(&field("vocab")?)?;
        let dims = ModelDims { embed, hidden, dropout };
        let mut rng = rand::rngs::mock::StepRng::new(0, 0);
        let mut model = InflectionModel::new(kind, vocab, dims, &mut rng);
        let store = match &mut model {
            InflectionModel::Seq2Seq(m) => m.store_mut(),
            InflectionModel::PointerGenerator(m) => m.store_mut(),
        };
        store.read_text(&mut lines)?;
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::parse("model file", "trailing content"));
        }
        Ok(model)
    }
}

/// Upper bound on decoded length.
pub fn length_cap(lemma: &str) -> usize {
    2 * lemma.chars().count() + 10
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn greedy<T: Transducer>(model: &T, lemma: &str, slot: usize) -> Result<Decoded> {
    let src = model.source(lemma, slot)?;
    let mut g = Graph::new(model.store());
    let mut noise = Noise::off();
    let (enc, mut state) = model.encode(&mut g, &src, &mut noise)?;
    let mut prev = BOS;
    let mut ids = Vec::new();
    let mut log_prob = 0.0;
    for _ in 0..length_cap(lemma) {
        let (dist, next) = model.step(&mut g, &enc, &state, prev, &mut noise)?;
        let p = g.value(dist);
        let id = argmax(p);
        log_prob += p[id].ln();
        if id == EOS {
            break;
        }
        ids.push(id);
        prev = id;
        state = next;
    }
    Ok(Decoded {
        form: src.render(model.vocab(), &ids),
        ids,
        log_prob,
    })
}

struct Hypothesis<S> {
    ids: Vec<usize>,
    log_prob: f64,
    state: S,
}

/// Beam search. The greedy hypothesis is also scored, and the better of the
/// two is returned, so a wider beam never yields a less probable output.
pub(crate) fn decode<T: Transducer>(model: &T, lemma: &str, slot: usize, beam: usize) -> Result<Decoded> {
    let greedy_out = greedy(model, lemma, slot)?;
    if beam <= 1 {
        return Ok(greedy_out);
    }
    let src = model.source(lemma, slot)?;
    let mut g = Graph::new(model.store());
    let mut noise = Noise::off();
    let (enc, state) = model.encode(&mut g, &src, &mut noise)?;
    let mut alive = vec![Hypothesis {
        ids: Vec::new(),
        log_prob: 0.0,
        state,
    }];
    let mut finished: Vec<(Vec<usize>, f64)> = Vec::new();
    for _ in 0..length_cap(lemma) {
        let mut candidates: Vec<(f64, usize, usize, T::State)> = Vec::new();
        for (h, hyp) in alive.iter().enumerate() {
            let prev = hyp.ids.last().copied().unwrap_or(BOS);
            let (dist, next) = model.step(&mut g, &enc, &hyp.state, prev, &mut noise)?;
            for (id, &p) in g.value(dist).iter().enumerate() {
                if p > 0.0 {
                    candidates.push((hyp.log_prob + p.ln(), h, id, next.clone()));
                }
            }
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        candidates.truncate(beam);
        let mut next_alive = Vec::new();
        for (lp, h, id, st) in candidates {
            if id == EOS {
                finished.push((alive[h].ids.clone(), lp));
            } else {
                let mut ids = alive[h].ids.clone();
                ids.push(id);
                next_alive.push(Hypothesis {
                    ids,
                    log_prob: lp,
                    state: st,
                });
            }
        }
        alive = next_alive;
        let best_finished = finished.iter().map(|f| f.1).fold(f64::NEG_INFINITY, f64::max);
        let best_alive = alive.iter().map(|h| h.log_prob).fold(f64::NEG_INFINITY, f64::max);
        if alive.is_empty() || best_finished >= best_alive {
            break;
        }
    }
    finished.extend(alive.into_iter().map(|h| (h.ids, h.log_prob)));
    let best = finished
        .into_iter()
        .fold(None::<(Vec<usize>, f64)>, |acc, f| match acc {
            Some(a) if a.1 >= f.1 => Some(a),
            _ => Some(f),
        });
    match best {
        Some((ids, log_prob)) if log_prob > greedy_out.log_prob => Ok(Decoded {
            form: src.render(model.vocab(), &ids),
            ids,
            log_prob,
        }),
        _ => Ok(greedy_out),
    }
}
