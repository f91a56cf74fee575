use std::collections::HashMap;

use crate::autograd::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Ordered collection of named parameter tensors. Iteration follows
/// insertion order, which fixes every RNG and accumulation order downstream.
#[derive(Debug, Clone)]
pub struct ParamStore<E: Scalar> {
    entries: Vec<(String, Tensor<E>)>,
    index: HashMap<String, usize>,
}

impl<E: Scalar> ParamStore<E> {
    pub fn new() -> Self {
        ParamStore {
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor<E>) -> Result<()> {
        if self.index.contains_key(name) {
            return Err(Error::Argument(format!(
                "duplicate parameter name `{name}`"
            )));
        }
        self.index.insert(name.to_string(), self.entries.len());
        self.entries.push((name.to_string(), tensor));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<E>> {
        self.index.get(name).map(|&i| &self.entries[i].1)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<E>> {
        self.index
            .get(name)
            .copied()
            .map(move |i| &mut self.entries[i].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<E>)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor<E>)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn to_f64(&self) -> ParamStore<f64> {
        let mut out = ParamStore::new();
        for (name, t) in self.iter() {
            out.insert(name, t.to_f64())
                .expect("names unique by construction");
        }
        out
    }
}

impl<E: Scalar> Default for ParamStore<E> {
    fn default() -> Self {
        Self::new()
    }
}
