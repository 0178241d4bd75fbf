use std::fmt::Write;

use rand::Rng;

use crate::error::{Error, Result};

/// Dense row-major array of doubles.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Dimension {
                context: "tensor construction",
                expected,
                actual: data.len(),
            });
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    pub fn cols(&self) -> usize {
        if self.shape.len() >= 2 {
            self.shape[1..].iter().product()
        } else {
            self.shape.first().copied().unwrap_or(1)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
}

/// Named parameter tensors of one model.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.params.push(Param {
            name: name.into(),
            value,
        });
        ParamId(self.params.len() - 1)
    }

    /// Add a parameter drawn from uniform(-scale, scale).
    pub fn add_uniform(&mut self, name: impl Into<String>, shape: &[usize], scale: f64, rng: &mut impl Rng) -> ParamId {
        let mut t = Tensor::zeros(shape);
        for v in &mut t.data {
            *v = rng.gen_range(-scale..scale);
        }
        self.add(name, t)
    }

    pub fn add_zeros(&mut self, name: impl Into<String>, shape: &[usize]) -> ParamId {
        self.add(name, Tensor::zeros(shape))
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_values(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_grads(&self) -> Grads {
        Grads {
            data: self.params.iter().map(|p| vec![0.0; p.value.len()]).collect(),
        }
    }

    /// Overwrite values from a store with identical layout.
    pub fn copy_values_from(&mut self, other: &ParamStore) {
        for (p, q) in self.params.iter_mut().zip(&other.params) {
            p.value.data.copy_from_slice(&q.value.data);
        }
    }

    /// Text blocks: `name d1xd2` then the values on one line.
    pub fn write_text(&self, out: &mut String) {
        for p in &self.params {
            let shape: Vec<String> = p.value.shape.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{} {}", p.name, shape.join("x"));
            let mut first = true;
            for v in &p.value.data {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{v:?}");
            }
            out.push('\n');
        }
    }

    /// Load values written by [`ParamStore::write_text`] into a store that
    /// already has the expected layout.
    pub fn read_text<'a>(&mut self, lines: &mut impl Iterator<Item = &'a str>) -> Result<()> {
        for p in &mut self.params {
            let header = lines
                .next()
                .ok_or_else(|| Error::parse("model file", format!("missing parameter {}", p.name)))?;
            let (name, shape) = header
                .split_once(' ')
                .ok_or_else(|| Error::parse("model file", format!("bad header {header:?}")))?;
            let shape_str: Vec<String> = p.value.shape.iter().map(usize::to_string).collect();
            if name != p.name || shape != shape_str.join("x") {
                return Err(Error::parse(
                    "model file",
                    format!("expected {} {}, found {header:?}", p.name, shape_str.join("x")),
                ));
            }
            let values = lines
                .next()
                .ok_or_else(|| Error::parse("model file", format!("missing values for {}", p.name)))?;
            let mut n = 0;
            for (slot, tok) in p.value.data.iter_mut().zip(values.split_ascii_whitespace()) {
                *slot = tok
                    .parse()
                    .map_err(|_| Error::parse("model file", format!("bad value {tok:?} in {}", p.name)))?;
                n += 1;
            }
            if n != p.value.len() || values.split_ascii_whitespace().count() != n {
                return Err(Error::parse("model file", format!("wrong value count for {}", p.name)));
            }
        }
        Ok(())
    }
}

/// Gradient buffers mirroring a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Grads {
    pub data: Vec<Vec<f64>>,
}

impl Grads {
    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.data[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.data[id.0]
    }

    pub fn add_assign(&mut self, other: &Grads) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.data.iter_mut().flatten() {
            *g *= factor;
        }
    }

    pub fn fill_zero(&mut self) {
        for g in self.data.iter_mut().flatten() {
            *g = 0.0;
        }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().flatten().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// Rescale so the global L2 norm does not exceed `max_norm`.
    pub fn clip_norm(&mut self, max_norm: f64) {
        let norm = self.norm();
        if norm > max_norm && norm > 0.0 {
            self.scale(max_norm / norm);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().flatten().all(|g| g.is_finite())
    }
}
