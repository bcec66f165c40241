use std::collections::HashMap;

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Index of a parameter inside its [`ParamStore`].
#[derive(Clone, Copy, Debug, Eq, PartialEq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
struct Entry<T> {
    name: String,
    value: Tensor<T>,
    grad: Tensor<T>,
    m: Tensor<T>,
    v: Tensor<T>,
}

/// Named trainable tensors with their gradients and Adam moments.
#[derive(Clone, Debug)]
pub struct ParamStore<T = f32> {
    entries: Vec<Entry<T>>,
    index: HashMap<String, usize>,
    step: u64,
}

impl<T: Scalar> Default for ParamStore<T> {
    fn default() -> Self {
        ParamStore {
            entries: Vec::new(),
            index: HashMap::new(),
            step: 0,
        }
    }
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor<T>) -> Result<ParamId> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::Data(format!("duplicate parameter `{}`", name)));
        }
        let zeros = Tensor::zeros(value.shape());
        self.index.insert(name.clone(), self.entries.len());
        self.entries.push(Entry {
            name,
            grad: zeros.clone(),
            m: zeros.clone(),
            v: zeros,
            value,
        });
        Ok(ParamId(self.entries.len() - 1))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).map(|&i| ParamId(i))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn value(&self, id: ParamId) -> &Tensor<T> {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.entries[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Tensor<T> {
        &self.entries[id.0].grad
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Total number of scalar parameters.
    pub fn n_values(&self) -> usize {
        self.entries.iter().map(|e| e.value.len()).sum()
    }

    /// Adds `grads` into the stored gradients.
    pub fn accumulate(&mut self, grads: &Gradients<T>) {
        for (entry, g) in self.entries.iter_mut().zip(&grads.grads) {
            if let Some(g) = g {
                entry.grad.add_assign(g);
            }
        }
    }

    pub fn zero_grad(&mut self) {
        for e in &mut self.entries {
            e.grad.data_mut().iter_mut().for_each(|g| *g = T::zero());
        }
    }

    pub fn grad_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.grad.sum_sq()).sum::<f64>().sqrt()
    }

    /// Rescales gradients so their global norm is at most `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip_grad_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.grad_norm();
        if norm > max_norm && norm > 0.0 {
            let s = T::of(max_norm / norm);
            for e in &mut self.entries {
                e.grad.scale_assign(s);
            }
        }
        norm
    }

    /// One Adam update from the stored gradients, which are then zeroed.
    pub fn adam_step(&mut self, lr: f64, beta1: f64, beta2: f64, eps: f64) {
        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);
        for e in &mut self.entries {
            let Entry { value, grad, m, v, .. } = e;
            for (((w, g), m), v) in value
                .data_mut()
                .iter_mut()
                .zip(grad.data_mut())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                let gf = g.f64();
                let mf = beta1 * m.f64() + (1.0 - beta1) * gf;
                let vf = beta2 * v.f64() + (1.0 - beta2) * gf * gf;
                *m = T::of(mf);
                *v = T::of(vf);
                let update = lr * (mf / bias1) / ((vf / bias2).sqrt() + eps);
                *w = T::of(w.f64() - update);
                *g = T::zero();
            }
        }
    }

    /// Copy of the parameter values in another precision; gradients and
    /// moments start at zero.
    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        let mut out = ParamStore::new();
        for e in &self.entries {
            out.add(e.name.clone(), e.value.cast()).expect("names are unique");
        }
        out
    }

    /// Empty gradient buffer shaped for this store.
    pub fn gradients(&self) -> Gradients<T> {
        Gradients {
            grads: vec![None; self.entries.len()],
            shapes: self.entries.iter().map(|e| e.value.shape().to_vec()).collect(),
        }
    }
}

/// Gradient buffer filled by [`super::Graph::backward`]; tensors are
/// allocated on first touch.
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
    shapes: Vec<Vec<usize>>,
}

impl<T: Scalar> Gradients<T> {
    pub(crate) fn slot(&mut self, id: ParamId) -> &mut Tensor<T> {
        let shape = &self.shapes[id.0];
        self.grads[id.0].get_or_insert_with(|| Tensor::zeros(shape))
    }

    pub fn get(&self, id: ParamId) -> Option<&Tensor<T>> {
        self.grads[id.0].as_ref()
    }

    pub fn scale(&mut self, s: T) {
        for g in self.grads.iter_mut().flatten() {
            g.scale_assign(s);
        }
    }

    pub fn merge(&mut self, other: &Gradients<T>) {
        for (i, g) in other.grads.iter().enumerate() {
            if let Some(g) = g {
                match &mut self.grads[i] {
                    Some(mine) => mine.add_assign(g),
                    slot @ None => *slot = Some(g.clone()),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_store(w: f64) -> (ParamStore<f64>, ParamId) {
        let mut store = ParamStore::new();
        let id = store.add("w", Tensor::scalar(w)).unwrap();
        (store, id)
    }

    fn set_grad(store: &mut ParamStore<f64>, id: ParamId, g: f64) {
        let mut grads = store.gradients();
        *grads.slot(id) = Tensor::scalar(g);
        store.accumulate(&grads);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let (mut store, id) = scalar_store(0.7);
        store.adam_step(0.002, 0.9, 0.999, 1e-8);
        assert_eq!(store.value(id).item(), 0.7);
        assert_eq!(store.step(), 1);
    }

    #[test]
    fn constant_positive_gradient_descends() {
        let (mut store, id) = scalar_store(1.0);
        let mut prev = 1.0;
        for _ in 0..20 {
            set_grad(&mut store, id, 1.0);
            store.adam_step(0.01, 0.9, 0.999, 1e-8);
            let w = store.value(id).item();
            assert!(w < prev);
            prev = w;
            assert_eq!(store.grad(id).item(), 0.0);
        }
    }

    #[test]
    fn first_step_on_quadratic_moves_by_lr() {
        // f(w) = w², f'(1) = 2; the bias-corrected first step is lr·g/(|g| + eps).
        let (mut store, id) = scalar_store(1.0);
        set_grad(&mut store, id, 2.0);
        store.adam_step(0.002, 0.9, 0.999, 1e-8);
        let w = store.value(id).item();
        assert!((1.0 - w - 0.002).abs() < 1e-10, "{}", w);
    }

    #[test]
    fn clipping_bounds_global_norm() {
        let mut store = ParamStore::<f64>::new();
        let a = store.add("a", Tensor::row(vec![0.0, 0.0])).unwrap();
        let mut grads = store.gradients();
        *grads.slot(a) = Tensor::row(vec![30.0, 40.0]);
        store.accumulate(&grads);
        assert_eq!(store.clip_grad_norm(5.0), 50.0);
        assert!((store.grad_norm() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_names_rejected() {
        let (mut store, _) = scalar_store(1.0);
        assert!(store.add("w", Tensor::scalar(0.0)).is_err());
    }
}
