use std::ops::Index;

use crate::diff::tape::{Gradients, Tape, Var};
use crate::diff::tensor::Tensor;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Param<S> {
    pub name: String,
    pub value: Tensor<S>,
    /// Filled by [`ParamStore::store_grads`].
    pub grad: Option<Tensor<S>>,
    /// Receives the optimizer's L2 weight decay.
    pub decay: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

/// Named registry of the trainable tensors of one component.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<S> {
    params: Vec<Param<S>>,
}

impl<S: Scalar> Default for ParamStore<S> {
    fn default() -> Self {
        ParamStore { params: Vec::new() }
    }
}

impl<S: Scalar> ParamStore<S> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Panics on a duplicate name.
    pub fn add(&mut self, name: impl Into<String>, value: Tensor<S>, decay: bool) -> ParamId {
        let name = name.into();
        assert!(self.find(&name).is_none(), "duplicate parameter {name}");
        self.params.push(Param { name, value, grad: None, decay });
        ParamId(self.params.len() - 1)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Tensor<S> {
        &self.params[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<S> {
        &mut self.params[id.0].value
    }

    pub fn param(&self, id: ParamId) -> &Param<S> {
        &self.params[id.0]
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param<S>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param<S>> {
        self.params.iter_mut()
    }

    pub fn names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    /// Total number of scalar values.
    pub fn num_values(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Places every parameter on `tape`; frozen stores bind as constants so
    /// no gradient can reach them.
    pub fn bind(&self, tape: &mut Tape<S>, trainable: bool) -> Bound {
        let vars = self
            .params
            .iter()
            .map(|p| if trainable { tape.param(p.value.clone()) } else { tape.constant(p.value.clone()) })
            .collect();
        Bound { vars }
    }

    /// Moves gradients out of `grads` into the slots; parameters that did not
    /// influence the output get zeros.
    pub fn store_grads(&mut self, grads: &mut Gradients<S>, bound: &Bound) {
        for (p, &v) in self.params.iter_mut().zip(&bound.vars) {
            let [r, c] = p.value.shape();
            p.grad = Some(grads.take(v).unwrap_or_else(|| Tensor::zeros(r, c)));
        }
    }

    pub fn clear_grads(&mut self) {
        for p in &mut self.params {
            p.grad = None;
        }
    }

    /// Copies values from a store with the same registry.
    pub fn load_values(&mut self, other: &ParamStore<S>) {
        assert_eq!(self.names(), other.names(), "registry mismatch");
        for (p, q) in self.params.iter_mut().zip(&other.params) {
            p.value = q.value.clone();
        }
    }

    /// Bitwise equality of every value.
    pub fn values_equal(&self, other: &ParamStore<S>) -> bool {
        self.params.len() == other.params.len()
            && self.params.iter().zip(&other.params).all(|(p, q)| {
                p.name == q.name
                    && p.value.shape() == q.value.shape()
                    && p.value.data().iter().zip(q.value.data()).all(|(a, b)| a.to_bits_eq(*b))
            })
    }
}

/// Tape handles of a bound [`ParamStore`], indexed by [`ParamId`].
#[derive(Debug, Clone)]
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    /// Handles created elsewhere, one per parameter in registry order.
    pub fn from_vars(vars: Vec<Var>) -> Self {
        Bound { vars }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

impl Index<ParamId> for Bound {
    type Output = Var;

    fn index(&self, id: ParamId) -> &Var {
        &self.vars[id.0]
    }
}

trait BitsEq {
    fn to_bits_eq(self, other: Self) -> bool;
}

impl<S: Scalar> BitsEq for S {
    fn to_bits_eq(self, other: Self) -> bool {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        self.write_le(&mut a);
        other.write_le(&mut b);
        a == b
    }
}
