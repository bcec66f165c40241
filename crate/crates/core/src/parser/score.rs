use rand::Rng;

use crate::config::ModelConfig;
use crate::encoder::{glorot, uniform};
use crate::error::{Error, Result};
use crate::label::LabelInventory;
use crate::num::{Graph, ParamId, ParamStore, Scalar, Tensor, Var};
use crate::tree::DependencyGraph;

/// Arc and label scores for one sentence over `{Global} ∪ tokens`.
///
/// `arc(d, h)` scores head `h` for dependent `d`; row 0 is unused.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrices {
    n: usize,
    n_labels: usize,
    arc: Vec<f64>,
    label: Vec<f64>,
}

impl ScoreMatrices {
    pub fn zeros(n_nodes: usize, n_labels: usize) -> Self {
        ScoreMatrices {
            n: n_nodes,
            n_labels,
            arc: vec![0.0; n_nodes * n_nodes],
            label: vec![0.0; n_nodes * n_nodes * n_labels],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn arc(&self, dependent: usize, head: usize) -> f64 {
        self.arc[dependent * self.n + head]
    }

    pub fn set_arc(&mut self, dependent: usize, head: usize, score: f64) {
        self.arc[dependent * self.n + head] = score;
    }

    pub fn label(&self, dependent: usize, head: usize, label: usize) -> f64 {
        self.label[(dependent * self.n + head) * self.n_labels + label]
    }

    pub fn set_label(&mut self, dependent: usize, head: usize, label: usize, score: f64) {
        self.label[(dependent * self.n + head) * self.n_labels + label] = score;
    }

    pub fn is_finite(&self) -> bool {
        self.arc.iter().chain(&self.label).all(|x| x.is_finite())
    }
}

/// Parameter handles of the biaffine scorer.
#[derive(Clone, Copy, Debug)]
pub struct Scorer {
    arc_dep: (ParamId, ParamId),
    arc_head: (ParamId, ParamId),
    arc_u: ParamId,
    arc_bias: ParamId,
    label_dep: (ParamId, ParamId),
    label_head: (ParamId, ParamId),
    label_w: ParamId,
    label_v: ParamId,
    label_c: ParamId,
    dropout: f64,
}

/// Graph values produced by [`Scorer::forward`].
#[derive(Clone, Copy, Debug)]
pub struct ScoreVars {
    /// Arc scores, `nodes × nodes`.
    pub arc: Var,
    label_dep: Var,
    label_head: Var,
    label_w: Var,
    label_v: Var,
    label_c: Var,
}

fn lookup<T: Scalar>(store: &ParamStore<T>, name: &str) -> Result<ParamId> {
    store
        .id(name)
        .ok_or_else(|| Error::Format(format!("missing parameter `{}`", name)))
}

impl Scorer {
    /// Registers freshly initialized scorer parameters over encoder states
    /// of width `input`.
    pub fn init(
        store: &mut ParamStore<f32>,
        config: &ModelConfig,
        input: usize,
        n_labels: usize,
        rng: &mut impl Rng,
    ) -> Result<Scorer> {
        let (a, l) = (config.arc_mlp_dim, config.label_mlp_dim);
        for (name, dim) in [("arc_dep", a), ("arc_head", a), ("label_dep", l), ("label_head", l)] {
            store.add(format!("{}.w", name), glorot(input, dim, rng))?;
            store.add(format!("{}.b", name), Tensor::zeros(&[1, dim]))?;
        }
        // A zero bilinear term would leave arc scores flat at the start.
        store.add("arc_u", glorot(a, a, rng))?;
        store.add("arc_bias", Tensor::zeros(&[1, a]))?;
        let bound = (6.0 / (l * l + n_labels) as f64).sqrt();
        store.add("label_w", uniform(n_labels, l * l, bound, rng))?;
        store.add("label_v", glorot(2 * l, n_labels, rng))?;
        store.add("label_c", Tensor::zeros(&[1, n_labels]))?;
        Scorer::bind(store, config)
    }

    pub fn bind<T: Scalar>(store: &ParamStore<T>, config: &ModelConfig) -> Result<Scorer> {
        let pair = |name: &str| -> Result<(ParamId, ParamId)> {
            Ok((lookup(store, &format!("{}.w", name))?, lookup(store, &format!("{}.b", name))?))
        };
        Ok(Scorer {
            arc_dep: pair("arc_dep")?,
            arc_head: pair("arc_head")?,
            arc_u: lookup(store, "arc_u")?,
            arc_bias: lookup(store, "arc_bias")?,
            label_dep: pair("label_dep")?,
            label_head: pair("label_head")?,
            label_w: lookup(store, "label_w")?,
            label_v: lookup(store, "label_v")?,
            label_c: lookup(store, "label_c")?,
            dropout: config.dropout,
        })
    }

    fn mlp<T: Scalar>(&self, g: &mut Graph<T>, h: Var, (w, b): (ParamId, ParamId)) -> Var {
        let w = g.param(w);
        let b = g.param(b);
        let z = g.affine(h, w, b);
        let z = g.relu(z);
        g.dropout(z, self.dropout)
    }

    /// Records the arc scores and the label representations for states `h`.
    pub fn forward<T: Scalar>(&self, g: &mut Graph<T>, h: Var) -> ScoreVars {
        let rd = self.mlp(g, h, self.arc_dep);
        let rh = self.mlp(g, h, self.arc_head);
        let u = g.param(self.arc_u);
        let du = g.matmul(rd, u);
        let bilinear = g.matmul_bt(du, rh);
        let bias = g.param(self.arc_bias);
        let head_bias = g.matmul_bt(bias, rh);
        let arc = g.add_row(bilinear, head_bias);
        let label_dep = self.mlp(g, h, self.label_dep);
        let label_head = self.mlp(g, h, self.label_head);
        ScoreVars {
            arc,
            label_dep,
            label_head,
            label_w: g.param(self.label_w),
            label_v: g.param(self.label_v),
            label_c: g.param(self.label_c),
        }
    }
}

impl ScoreVars {
    /// Label scores for the given (dependent, head) pairs, one row each.
    pub fn pair_labels<T: Scalar>(&self, g: &mut Graph<T>, pairs: &[(usize, usize)]) -> Var {
        let deps: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let heads: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let qd = g.gather_rows(self.label_dep, &deps);
        let qh = g.gather_rows(self.label_head, &heads);
        let bilinear = g.pair_bilinear(qd, self.label_w, qh);
        let both = g.concat_cols(&[qd, qh]);
        let linear = g.affine(both, self.label_v, self.label_c);
        g.add(bilinear, linear)
    }

    /// Dense score matrices from the recorded values.
    pub fn matrices<T: Scalar>(&self, g: &Graph<T>) -> ScoreMatrices {
        let arc = g.value(self.arc);
        let n = arc.rows();
        let qd = g.value(self.label_dep);
        let qh = g.value(self.label_head);
        let w = g.value(self.label_w);
        let v = g.value(self.label_v);
        let c = g.value(self.label_c);
        let (labels, p) = (w.rows(), qd.cols());
        let q = qh.cols();
        let mut out = ScoreMatrices::zeros(n, labels);
        out.arc = arc.data().iter().map(|x| x.f64()).collect();
        let vd = Tensor::matrix(p, labels, v.data()[..p * labels].to_vec());
        let vh = Tensor::matrix(q, labels, v.data()[p * labels..].to_vec());
        let lin_d = qd.matmul(&vd);
        let lin_h = qh.matmul(&vh);
        for l in 0..labels {
            let wl = Tensor::matrix(p, q, w.row_slice(l).to_vec());
            let s = qd.matmul(&wl).matmul_bt(qh);
            for d in 0..n {
                for h in 0..n {
                    let x = s.get(d, h) + lin_d.get(d, l) + lin_h.get(h, l) + c.data()[l];
                    out.set_label(d, h, l, x.f64());
                }
            }
        }
        out
    }
}

/// Training objective for one sentence: head cross-entropy of every token
/// over all other nodes plus label cross-entropy at the gold arcs, averaged
/// over tokens.
pub fn loss<T: Scalar>(
    g: &mut Graph<T>,
    scores: &ScoreVars,
    gold: &DependencyGraph,
    inventory: &LabelInventory,
) -> Result<Var> {
    let n = gold.n_nodes();
    if g.value(scores.arc).rows() != n {
        return Err(Error::Shape(format!(
            "scores cover {} nodes, gold graph has {}",
            g.value(scores.arc).rows(),
            n
        )));
    }
    let mut heads = Vec::with_capacity(n - 1);
    let mut labels = Vec::with_capacity(n - 1);
    let mut pairs = Vec::with_capacity(n - 1);
    let mut mask = vec![true; (n - 1) * n];
    for d in 1..n {
        let h = gold
            .head(d)
            .ok_or_else(|| Error::Data(format!("gold graph has no head for node {}", d)))?;
        let name = gold.label(d).expect("arc has a label");
        let l = inventory
            .index_of(name)
            .ok_or_else(|| Error::UnknownLabel(name.to_owned()))?;
        heads.push(h);
        labels.push(l);
        pairs.push((d, h));
        mask[(d - 1) * n + d] = false;
    }
    let rows = g.slice_rows(scores.arc, 1, n);
    let head_loss = g.cross_entropy(rows, &heads, Some(&mask));
    let label_scores = scores.pair_labels(g, &pairs);
    let label_loss = g.cross_entropy(label_scores, &labels, None);
    let total = g.add(head_loss, label_loss);
    Ok(g.scale(total, 1.0 / (n - 1) as f64))
}
