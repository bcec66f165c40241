use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Gradients, ParamId, ParamStore, Scalar, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, Eq, PartialEq)]
pub struct Var(usize);

enum Value<T> {
    Owned(Tensor<T>),
    Param(ParamId),
}

enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    MatMulBT(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    GatherRows(Var, Vec<usize>),
    MaxRows(Var, Vec<usize>),
    Dropout(Var, Vec<T>),
    CrossEntropy(Var, Vec<usize>, Vec<T>),
    PairBilinear(Var, Var, Var),
    Sum(Vec<Var>),
}

struct Node<T> {
    value: Value<T>,
    op: Op<T>,
}

/// Records a computation over tensors and parameters for one forward pass.
///
/// Shape mismatches are programming errors and panic. Non-finite values
/// are recorded and reported by [`Graph::ensure_finite`].
pub struct Graph<'a, T: Scalar = f32> {
    store: &'a ParamStore<T>,
    nodes: Vec<Node<T>>,
    dropout_rng: Option<ChaCha8Rng>,
    non_finite: Option<usize>,
}

impl<'a, T: Scalar> Graph<'a, T> {
    /// Inference graph: dropout is the identity.
    pub fn new(store: &'a ParamStore<T>) -> Self {
        Graph {
            store,
            nodes: Vec::new(),
            dropout_rng: None,
            non_finite: None,
        }
    }

    /// Training graph: dropout masks are drawn from a generator seeded with
    /// `seed`.
    pub fn training(store: &'a ParamStore<T>, seed: u64) -> Self {
        Graph {
            dropout_rng: Some(ChaCha8Rng::seed_from_u64(seed)),
            ..Graph::new(store)
        }
    }

    pub fn is_training(&self) -> bool {
        self.dropout_rng.is_some()
    }

    pub fn store(&self) -> &'a ParamStore<T> {
        self.store
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        match &self.nodes[v.0].value {
            Value::Owned(t) => t,
            Value::Param(id) => self.store.value(*id),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Var {
        if self.non_finite.is_none() && !value.is_finite() {
            self.non_finite = Some(self.nodes.len());
        }
        self.nodes.push(Node {
            value: Value::Owned(value),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self.non_finite {
            None => Ok(()),
            Some(node) => Err(Error::NonFinite(format!("forward pass (node {})", node))),
        }
    }

    /// Constant input.
    pub fn input(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node {
            value: Value::Param(id),
            op: Op::Leaf,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    /// `a · bᵀ`
    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul_bt(self.value(b));
        self.push(v, Op::MatMulBT(a, b))
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(T, T) -> T) -> Tensor<T> {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.shape(), y.shape(), "shape mismatch");
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| f(p, q)).collect();
        Tensor::new(x.shape().to_vec(), data).expect("same shape")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.zip_with(a, b, |p, q| p + q);
        self.push(v, Op::Add(a, b))
    }

    /// Adds the `1 × n` row `b` to every row of `a`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Var {
        let (x, r) = (self.value(a), self.value(b));
        let n = x.cols();
        assert_eq!(r.len(), n, "shape mismatch: row of {} added to {} columns", r.len(), n);
        let data = x
            .data()
            .iter()
            .enumerate()
            .map(|(i, &p)| p + r.data()[i % n])
            .collect();
        let v = Tensor::matrix(x.rows(), n, data);
        self.push(v, Op::AddRow(a, b))
    }

    /// `x · w + b`
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Var {
        let xw = self.matmul(x, w);
        self.add_row(xw, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.zip_with(a, b, |p, q| p * q);
        self.push(v, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let s = T::of(s);
        let v = self.value(a).map(|x| x * s);
        self.push(v, Op::Scale(a, s))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.tanh());
        self.push(v, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| T::one() / (T::one() + (-x).exp()));
        self.push(v, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(T::zero()));
        self.push(v, Op::Relu(a))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat of nothing");
        let rows = self.value(parts[0]).rows();
        let total: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                let t = self.value(p);
                assert_eq!(t.rows(), rows, "shape mismatch in concat_cols");
                data.extend_from_slice(t.row_slice(r));
            }
        }
        self.push(Tensor::matrix(rows, total, data), Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat of nothing");
        let cols = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            assert_eq!(t.cols(), cols, "shape mismatch in concat_rows");
            data.extend_from_slice(t.data());
            rows += t.rows();
        }
        self.push(Tensor::matrix(rows, cols, data), Op::ConcatRows(parts.to_vec()))
    }

    /// Columns `start..end`.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Var {
        let t = self.value(a);
        assert!(start <= end && end <= t.cols(), "shape mismatch in slice_cols");
        let mut data = Vec::with_capacity(t.rows() * (end - start));
        for r in 0..t.rows() {
            data.extend_from_slice(&t.row_slice(r)[start..end]);
        }
        let v = Tensor::matrix(t.rows(), end - start, data);
        self.push(v, Op::SliceCols(a, start))
    }

    /// Rows `start..end`.
    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Var {
        let t = self.value(a);
        assert!(start <= end && end <= t.rows(), "shape mismatch in slice_rows");
        let c = t.cols();
        let v = Tensor::matrix(end - start, c, t.data()[start * c..end * c].to_vec());
        self.push(v, Op::SliceRows(a, start))
    }

    /// Rows of `a` selected by `indices` (embedding lookup).
    pub fn gather_rows(&mut self, a: Var, indices: &[usize]) -> Var {
        let t = self.value(a);
        let c = t.cols();
        let mut data = Vec::with_capacity(indices.len() * c);
        for &i in indices {
            data.extend_from_slice(t.row_slice(i));
        }
        let v = Tensor::matrix(indices.len(), c, data);
        self.push(v, Op::GatherRows(a, indices.to_vec()))
    }

    /// Column-wise maximum over rows, as a `1 × n` row.
    pub fn max_rows(&mut self, a: Var) -> Var {
        let t = self.value(a);
        assert!(t.rows() > 0, "max over zero rows");
        let n = t.cols();
        let mut best = t.row_slice(0).to_vec();
        let mut arg = vec![0; n];
        for r in 1..t.rows() {
            for (j, &x) in t.row_slice(r).iter().enumerate() {
                if x > best[j] {
                    best[j] = x;
                    arg[j] = r;
                }
            }
        }
        self.push(Tensor::row(best), Op::MaxRows(a, arg))
    }

    /// Inverted dropout: in training graphs each value is zeroed with
    /// probability `p` and survivors are scaled by `1 / (1 - p)`. The
    /// identity otherwise.
    pub fn dropout(&mut self, a: Var, p: f64) -> Var {
        if p <= 0.0 {
            return a;
        }
        let Some(rng) = self.dropout_rng.as_mut() else {
            return a;
        };
        let keep = T::of(1.0 / (1.0 - p));
        let n = match &self.nodes[a.0].value {
            Value::Owned(t) => t.len(),
            Value::Param(id) => self.store.value(*id).len(),
        };
        let mask: Vec<T> = (0..n)
            .map(|_| if rng.gen::<f64>() < p { T::zero() } else { keep })
            .collect();
        let t = self.value(a);
        let data = t.data().iter().zip(&mask).map(|(&x, &m)| x * m).collect();
        let v = Tensor::new(t.shape().to_vec(), data).expect("same shape");
        self.push(v, Op::Dropout(a, mask))
    }

    /// Summed softmax cross-entropy of each row of `logits` against
    /// `gold[row]`. With a mask (row-major, `true` = candidate) the softmax
    /// runs over candidates only; the gold entry must be a candidate.
    pub fn cross_entropy(&mut self, logits: Var, gold: &[usize], mask: Option<&[bool]>) -> Var {
        let t = self.value(logits);
        let (m, n) = (t.rows(), t.cols());
        assert_eq!(gold.len(), m, "shape mismatch: {} gold entries for {} rows", gold.len(), m);
        if let Some(mask) = mask {
            assert_eq!(mask.len(), m * n, "shape mismatch in cross-entropy mask");
        }
        let mut probs = vec![T::zero(); m * n];
        let mut loss = 0.0f64;
        for r in 0..m {
            let row = t.row_slice(r);
            let allowed = |j: usize| mask.is_none_or(|mk| mk[r * n + j]);
            assert!(allowed(gold[r]), "gold index is masked out");
            let max = (0..n)
                .filter(|&j| allowed(j))
                .map(|j| row[j].f64())
                .fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = (0..n)
                .filter(|&j| allowed(j))
                .map(|j| (row[j].f64() - max).exp())
                .sum();
            for j in (0..n).filter(|&j| allowed(j)) {
                probs[r * n + j] = T::of((row[j].f64() - max).exp() / z);
            }
            loss += max + z.ln() - row[gold[r]].f64();
        }
        self.push(
            Tensor::scalar(T::of(loss)),
            Op::CrossEntropy(logits, gold.to_vec(), probs),
        )
    }

    /// Per-row bilinear forms: `out[i][l] = left[i] · W[l] · right[i]ᵀ`,
    /// with `weight` shaped `L × p × q`.
    pub fn pair_bilinear(&mut self, left: Var, weight: Var, right: Var) -> Var {
        let (x, w, y) = (self.value(left), self.value(weight), self.value(right));
        let (m, p, q) = (x.rows(), x.cols(), y.cols());
        let labels = w.rows();
        assert_eq!(y.rows(), m, "shape mismatch in pair_bilinear rows");
        assert_eq!(w.cols(), p * q, "shape mismatch in pair_bilinear weight");
        let mut out = Vec::with_capacity(m * labels);
        for i in 0..m {
            let xi = x.row_slice(i);
            let yi = y.row_slice(i);
            for l in 0..labels {
                let wl = w.row_slice(l);
                let mut acc = T::zero();
                for (a, &xa) in xi.iter().enumerate() {
                    if xa == T::zero() {
                        continue;
                    }
                    let wrow = &wl[a * q..(a + 1) * q];
                    let inner = wrow.iter().zip(yi).fold(T::zero(), |s, (&wv, &yv)| s + wv * yv);
                    acc += xa * inner;
                }
                out.push(acc);
            }
        }
        self.push(Tensor::matrix(m, labels, out), Op::PairBilinear(left, weight, right))
    }

    /// Element-wise sum of same-shaped values.
    pub fn sum(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "sum of nothing");
        let mut acc = self.value(parts[0]).clone();
        for &p in &parts[1..] {
            acc.add_assign(self.value(p));
        }
        self.push(acc, Op::Sum(parts.to_vec()))
    }

    /// Back-propagates the scalar `loss` and adds parameter gradients into
    /// `grads`.
    pub fn backward(&self, loss: Var, grads: &mut Gradients<T>) {
        assert_eq!(self.value(loss).len(), 1, "backward from a non-scalar");
        let mut adj: Vec<Option<Tensor<T>>> = Vec::with_capacity(loss.0 + 1);
        adj.resize_with(loss.0 + 1, || None);
        adj[loss.0] = Some(Tensor::scalar(T::one()));

        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {
                    if let Value::Param(id) = node.value {
                        grads.slot(id).add_assign(&g);
                    }
                }
                Op::MatMul(a, b) => {
                    let ga = g.matmul_bt(self.value(*b));
                    let gb = self.value(*a).matmul_at(&g);
                    accumulate(&mut adj, *a, ga);
                    accumulate(&mut adj, *b, gb);
                }
                Op::MatMulBT(a, b) => {
                    let ga = g.matmul(self.value(*b));
                    let gb = g.matmul_at(self.value(*a));
                    accumulate(&mut adj, *a, ga);
                    accumulate(&mut adj, *b, gb);
                }
                Op::Add(a, b) => {
                    accumulate(&mut adj, *b, g.clone());
                    accumulate(&mut adj, *a, g);
                }
                Op::AddRow(a, b) => {
                    let n = g.cols();
                    let mut gb = vec![T::zero(); n];
                    for (k, &x) in g.data().iter().enumerate() {
                        gb[k % n] += x;
                    }
                    let shape = self.value(*b).shape().to_vec();
                    accumulate(&mut adj, *b, Tensor::new(shape, gb).expect("row shape"));
                    accumulate(&mut adj, *a, g);
                }
                Op::Mul(a, b) => {
                    let ga = elementwise(&g, self.value(*b), |x, y| x * y);
                    let gb = elementwise(&g, self.value(*a), |x, y| x * y);
                    accumulate(&mut adj, *a, ga);
                    accumulate(&mut adj, *b, gb);
                }
                Op::Scale(a, s) => {
                    let s = *s;
                    accumulate(&mut adj, *a, g.map(|x| x * s));
                }
                Op::Tanh(a) => {
                    let ga = elementwise(&g, self.value(Var(i)), |x, y| x * (T::one() - y * y));
                    accumulate(&mut adj, *a, ga);
                }
                Op::Sigmoid(a) => {
                    let ga = elementwise(&g, self.value(Var(i)), |x, y| x * y * (T::one() - y));
                    accumulate(&mut adj, *a, ga);
                }
                Op::Relu(a) => {
                    let ga = elementwise(&g, self.value(*a), |x, y| if y > T::zero() { x } else { T::zero() });
                    accumulate(&mut adj, *a, ga);
                }
                Op::ConcatCols(parts) => {
                    let rows = g.rows();
                    let mut offset = 0;
                    for &p in parts {
                        let c = self.value(p).cols();
                        let mut data = Vec::with_capacity(rows * c);
                        for r in 0..rows {
                            data.extend_from_slice(&g.row_slice(r)[offset..offset + c]);
                        }
                        offset += c;
                        let shape = self.value(p).shape().to_vec();
                        accumulate(&mut adj, p, Tensor::new(shape, data).expect("part shape"));
                    }
                }
                Op::ConcatRows(parts) => {
                    let c = g.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let r = self.value(p).rows();
                        let data = g.data()[offset * c..(offset + r) * c].to_vec();
                        offset += r;
                        let shape = self.value(p).shape().to_vec();
                        accumulate(&mut adj, p, Tensor::new(shape, data).expect("part shape"));
                    }
                }
                Op::SliceCols(a, start) => {
                    let src = self.value(*a);
                    let mut ga = Tensor::zeros(src.shape());
                    let (n, w) = (src.cols(), g.cols());
                    for r in 0..g.rows() {
                        ga.data_mut()[r * n + start..r * n + start + w].copy_from_slice(g.row_slice(r));
                    }
                    accumulate(&mut adj, *a, ga);
                }
                Op::SliceRows(a, start) => {
                    let src = self.value(*a);
                    let mut ga = Tensor::zeros(src.shape());
                    let c = src.cols();
                    ga.data_mut()[start * c..start * c + g.len()].copy_from_slice(g.data());
                    accumulate(&mut adj, *a, ga);
                }
                Op::GatherRows(a, indices) => {
                    let c = g.cols();
                    let target = match self.nodes[a.0].value {
                        Value::Param(id) if matches!(self.nodes[a.0].op, Op::Leaf) => Some(id),
                        _ => None,
                    };
                    match target {
                        // Scatter straight into the parameter gradient.
                        Some(id) => {
                            let slot = grads.slot(id);
                            for (r, &idx) in indices.iter().enumerate() {
                                let dst = &mut slot.data_mut()[idx * c..(idx + 1) * c];
                                for (d, &x) in dst.iter_mut().zip(g.row_slice(r)) {
                                    *d += x;
                                }
                            }
                        }
                        None => {
                            let mut ga = Tensor::zeros(self.value(*a).shape());
                            for (r, &idx) in indices.iter().enumerate() {
                                let dst = &mut ga.data_mut()[idx * c..(idx + 1) * c];
                                for (d, &x) in dst.iter_mut().zip(g.row_slice(r)) {
                                    *d += x;
                                }
                            }
                            accumulate(&mut adj, *a, ga);
                        }
                    }
                }
                Op::MaxRows(a, arg) => {
                    let src = self.value(*a);
                    let n = src.cols();
                    let mut ga = Tensor::zeros(src.shape());
                    for (j, &r) in arg.iter().enumerate() {
                        ga.data_mut()[r * n + j] += g.data()[j];
                    }
                    accumulate(&mut adj, *a, ga);
                }
                Op::Dropout(a, mask) => {
                    let data = g.data().iter().zip(mask).map(|(&x, &m)| x * m).collect();
                    let ga = Tensor::new(g.shape().to_vec(), data).expect("same shape");
                    accumulate(&mut adj, *a, ga);
                }
                Op::CrossEntropy(logits, gold, probs) => {
                    let scale = g.item();
                    let src = self.value(*logits);
                    let n = src.cols();
                    let mut data: Vec<T> = probs.iter().map(|&p| p * scale).collect();
                    for (r, &k) in gold.iter().enumerate() {
                        data[r * n + k] -= scale;
                    }
                    let ga = Tensor::new(src.shape().to_vec(), data).expect("same shape");
                    accumulate(&mut adj, *logits, ga);
                }
                Op::PairBilinear(left, weight, right) => {
                    let (x, w, y) = (self.value(*left), self.value(*weight), self.value(*right));
                    let (m, p, q) = (x.rows(), x.cols(), y.cols());
                    let labels = w.rows();
                    let mut gx = Tensor::zeros(x.shape());
                    let mut gy = Tensor::zeros(y.shape());
                    let mut gw = Tensor::zeros(w.shape());
                    for i in 0..m {
                        let xi = x.row_slice(i);
                        let yi = y.row_slice(i);
                        for l in 0..labels {
                            let go = g.data()[i * labels + l];
                            if go == T::zero() {
                                continue;
                            }
                            let wl = w.row_slice(l);
                            for a in 0..p {
                                let wrow = &wl[a * q..(a + 1) * q];
                                let xa = xi[a];
                                let mut inner = T::zero();
                                for b in 0..q {
                                    inner += wrow[b] * yi[b];
                                    gy.data_mut()[i * q + b] += go * xa * wrow[b];
                                }
                                gx.data_mut()[i * p + a] += go * inner;
                                let gwl = &mut gw.data_mut()[l * p * q + a * q..l * p * q + (a + 1) * q];
                                for b in 0..q {
                                    gwl[b] += go * xa * yi[b];
                                }
                            }
                        }
                    }
                    accumulate(&mut adj, *left, gx);
                    accumulate(&mut adj, *weight, gw);
                    accumulate(&mut adj, *right, gy);
                }
                Op::Sum(parts) => {
                    for &p in parts {
                        accumulate(&mut adj, p, g.clone());
                    }
                }
            }
        }
    }
}

fn elementwise<T: Scalar>(g: &Tensor<T>, other: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    let data = g.data().iter().zip(other.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(g.shape().to_vec(), data).expect("same shape")
}

fn accumulate<T: Scalar>(adj: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
    match &mut adj[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::grad_check;
    use rand::Rng;

    fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor<f64> {
        Tensor::matrix(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    #[test]
    fn softmax_cross_entropy_uniform() {
        let store = ParamStore::<f64>::new();
        let mut g = Graph::new(&store);
        let logits = g.input(Tensor::row(vec![0.0, 0.0]));
        let loss = g.cross_entropy(logits, &[0], None);
        assert!((g.value(loss).item() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn masked_cross_entropy_ignores_masked_entries() {
        let store = ParamStore::<f64>::new();
        let mut g = Graph::new(&store);
        let logits = g.input(Tensor::row(vec![0.0, 100.0, 0.0]));
        let loss = g.cross_entropy(logits, &[0], Some(&[true, false, true]));
        assert!((g.value(loss).item() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn dropout_identity_cases() {
        let store = ParamStore::<f64>::new();
        let x = Tensor::row(vec![1.0, -2.0, 3.0]);
        let mut eval = Graph::new(&store);
        let a = eval.input(x.clone());
        let d = eval.dropout(a, 0.5);
        assert_eq!(eval.value(d), &x);
        let mut train = Graph::training(&store, 3);
        let a = train.input(x.clone());
        let d = train.dropout(a, 0.0);
        assert_eq!(train.value(d), &x);
    }

    #[test]
    fn dropout_preserves_expectation() {
        let store = ParamStore::<f64>::new();
        let mut g = Graph::training(&store, 11);
        let n = 100_000;
        let a = g.input(Tensor::row(vec![1.0; n]));
        let d = g.dropout(a, 0.33);
        let mean: f64 = g.value(d).data().iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {}", mean);
    }

    /// Every kernel's backward against central differences.
    #[test]
    fn kernels_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParamStore::<f64>::new();
        let a = store.add("a", random(&mut rng, 3, 4)).unwrap();
        let b = store.add("b", random(&mut rng, 4, 5)).unwrap();
        let c = store.add("c", random(&mut rng, 3, 5)).unwrap();
        let row = store.add("row", random(&mut rng, 1, 5)).unwrap();
        let w = store.add("w", Tensor::new(vec![2, 4, 5], random(&mut rng, 2, 20).into_data()).unwrap()).unwrap();
        let emb = store.add("emb", random(&mut rng, 6, 4)).unwrap();

        let check = grad_check(
            &store,
            |g| {
                let (a, b, c, row, w, emb) = (g.param(a), g.param(b), g.param(c), g.param(row), g.param(w), g.param(emb));
                let ab = g.matmul(a, b);
                let abc = g.add(ab, c);
                let shifted = g.add_row(abc, row);
                let t = g.tanh(shifted);
                let s = g.sigmoid(abc);
                let m = g.mul(t, s);
                let r = g.relu(m);
                let sc = g.scale(r, 1.5);
                let bt = g.matmul_bt(sc, c);
                let cat = g.concat_cols(&[bt, a]);
                let stacked = g.concat_rows(&[cat, cat]);
                let sl = g.slice_cols(stacked, 1, 6);
                let sr = g.slice_rows(sl, 2, 5);
                let mx = g.max_rows(sr);
                let rows = g.gather_rows(emb, &[1, 4, 1]);
                let rows2 = g.gather_rows(a, &[2, 0, 2]);
                let pb = g.pair_bilinear(rows, w, sr);
                let pb2 = g.pair_bilinear(rows2, w, sr);
                let both = g.sum(&[pb, pb2]);
                let ce1 = g.cross_entropy(both, &[0, 1, 1], None);
                let ce2 = g.cross_entropy(mx, &[3], Some(&[true, false, true, true, true]));
                g.sum(&[ce1, ce2])
            },
            1e-5,
        );
        assert!(check.max_relative_error < 1e-4, "{:?}", check);
    }

    #[test]
    fn non_finite_values_reported() {
        let store = ParamStore::<f64>::new();
        let mut g = Graph::new(&store);
        let a = g.input(Tensor::row(vec![f64::MAX]));
        let _ = g.scale(a, 10.0);
        assert!(g.ensure_finite().is_err());
    }

    #[test]
    fn identical_seeds_are_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random(&mut rng, 4, 8);
        let run = |seed| {
            let store = ParamStore::<f32>::new();
            let mut g = Graph::training(&store, seed);
            let a = g.input(x.cast());
            let d = g.dropout(a, 0.33);
            g.value(d).clone()
        };
        assert_eq!(run(1), run(1));
        assert_ne!(run(1), run(2));
    }
}
