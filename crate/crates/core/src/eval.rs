//! Span metrics, exact match, component-count buckets, global-span
//! accuracy and throughput.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::sentence::Sentence;
use crate::tree::{tree_to_spans, SpanTuple};

/// Largest component count that gets its own bucket.
pub const MAX_BUCKET: usize = 10;

/// Span analysis of one compound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompoundSpans {
    pub id: String,
    pub n_components: usize,
    pub spans: Vec<SpanTuple>,
}

/// Gold span sets of every compound, in corpus order.
pub fn gold_spans(sentences: &[Sentence]) -> Result<Vec<CompoundSpans>> {
    let mut out = Vec::new();
    for s in sentences {
        for c in s.compounds() {
            let tree = c
                .gold_tree()
                .ok_or_else(|| Error::Data(format!("compound {} has no gold tree", c.id)))?;
            out.push(CompoundSpans {
                id: c.id.clone(),
                n_components: c.n_components(),
                spans: tree_to_spans(tree),
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Scores from counts. With nothing predicted and nothing to find the
    /// result is perfect.
    pub fn from_counts(tp: usize, n_pred: usize, n_gold: usize) -> Prf {
        if n_pred == 0 && n_gold == 0 {
            return Prf {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            };
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let (p, r) = (ratio(tp, n_pred), ratio(tp, n_gold));
        let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        Prf {
            precision: p,
            recall: r,
            f1,
        }
    }
}

#[derive(Clone, Copy, Debug, Eq, PartialEq)]
pub enum Average {
    Micro,
    Macro,
}

impl FromStr for Average {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(Average::Micro),
            "macro" => Ok(Average::Macro),
            other => Err(Error::Config(format!("average must be `micro` or `macro`, got `{}`", other))),
        }
    }
}

type Labeled<'a> = BTreeSet<(usize, usize, &'a str)>;
type Unlabeled = BTreeSet<(usize, usize)>;

struct Pair<'a> {
    n_components: usize,
    pred: Labeled<'a>,
    gold: Labeled<'a>,
}

impl Pair<'_> {
    fn unlabeled(set: &Labeled) -> Unlabeled {
        set.iter().map(|&(s, e, _)| (s, e)).collect()
    }

    fn lss_counts(&self) -> (usize, usize, usize) {
        (self.pred.intersection(&self.gold).count(), self.pred.len(), self.gold.len())
    }

    fn uss_counts(&self) -> (usize, usize, usize) {
        let (p, g) = (Self::unlabeled(&self.pred), Self::unlabeled(&self.gold));
        (p.intersection(&g).count(), p.len(), g.len())
    }
}

fn labeled(spans: &[SpanTuple]) -> Labeled<'_> {
    spans.iter().map(|s| (s.start, s.end, s.label.as_str())).collect()
}

/// Pairs predictions with gold analyses by compound id, in gold order.
fn align<'a>(pred: &'a [CompoundSpans], gold: &'a [CompoundSpans]) -> Result<Vec<Pair<'a>>> {
    let mut by_id: HashMap<&str, &CompoundSpans> = HashMap::with_capacity(pred.len());
    for p in pred {
        if by_id.insert(p.id.as_str(), p).is_some() {
            return Err(Error::Data(format!("duplicate predicted compound {}", p.id)));
        }
    }
    if pred.len() != gold.len() {
        return Err(Error::Data(format!(
            "unaligned compound ids: {} predicted, {} gold",
            pred.len(),
            gold.len()
        )));
    }
    gold.iter()
        .map(|g| {
            let p = by_id
                .get(g.id.as_str())
                .ok_or_else(|| Error::Data(format!("unaligned compound ids: no prediction for {}", g.id)))?;
            Ok(Pair {
                n_components: g.n_components,
                pred: labeled(&p.spans),
                gold: labeled(&g.spans),
            })
        })
        .collect()
}

fn pooled<'a>(pairs: &[Pair<'a>], counts: impl Fn(&Pair<'a>) -> (usize, usize, usize)) -> Prf {
    let (mut tp, mut np, mut ng) = (0, 0, 0);
    for p in pairs {
        let (a, b, c) = counts(p);
        tp += a;
        np += b;
        ng += c;
    }
    Prf::from_counts(tp, np, ng)
}

fn averaged<'a>(pairs: &[Pair<'a>], counts: impl Fn(&Pair<'a>) -> (usize, usize, usize)) -> Prf {
    if pairs.is_empty() {
        return Prf::from_counts(0, 0, 0);
    }
    let mut sum = Prf::default();
    for p in pairs {
        let (a, b, c) = counts(p);
        let s = Prf::from_counts(a, b, c);
        sum.precision += s.precision;
        sum.recall += s.recall;
        sum.f1 += s.f1;
    }
    let n = pairs.len() as f64;
    Prf {
        precision: sum.precision / n,
        recall: sum.recall / n,
        f1: sum.f1 / n,
    }
}

/// Unlabeled and labeled span scores `(uss, lss)`. Micro averaging pools
/// `(compound, start, end, label)` tuples over all compounds; macro
/// averaging scores each compound separately and takes the mean.
pub fn span_scores(pred: &[CompoundSpans], gold: &[CompoundSpans], average: Average) -> Result<(Prf, Prf)> {
    let pairs = align(pred, gold)?;
    Ok(match average {
        Average::Micro => (pooled(&pairs, Pair::uss_counts), pooled(&pairs, Pair::lss_counts)),
        Average::Macro => (averaged(&pairs, Pair::uss_counts), averaged(&pairs, Pair::lss_counts)),
    })
}

/// Fraction of compounds whose labeled span set is exactly right.
pub fn exact_match(pred: &[CompoundSpans], gold: &[CompoundSpans]) -> Result<f64> {
    let pairs = align(pred, gold)?;
    if pairs.is_empty() {
        return Ok(0.0);
    }
    Ok(pairs.iter().filter(|p| p.pred == p.gold).count() as f64 / pairs.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bucket {
    pub lss_f1: f64,
    pub count: usize,
}

/// Micro LSS F1 per component count for `2..=MAX_BUCKET`. Larger
/// compounds are left out; empty buckets are absent.
pub fn bucket_by_components(pred: &[CompoundSpans], gold: &[CompoundSpans]) -> Result<BTreeMap<usize, Bucket>> {
    let pairs = align(pred, gold)?;
    let mut groups: BTreeMap<usize, Vec<&Pair>> = BTreeMap::new();
    for p in &pairs {
        if (2..=MAX_BUCKET).contains(&p.n_components) {
            groups.entry(p.n_components).or_default().push(p);
        }
    }
    Ok(groups
        .into_iter()
        .map(|(n, group)| {
            let (mut tp, mut np, mut ng) = (0, 0, 0);
            for p in &group {
                let (a, b, c) = p.lss_counts();
                tp += a;
                np += b;
                ng += c;
            }
            let bucket = Bucket {
                lss_f1: Prf::from_counts(tp, np, ng).f1,
                count: group.len(),
            };
            (n, bucket)
        })
        .collect())
}

/// Fraction of compounds whose prediction contains the full span `(1, N)`.
pub fn global_span_accuracy(pred: &[CompoundSpans], gold: &[CompoundSpans]) -> Result<f64> {
    let pairs = align(pred, gold)?;
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let hits = pairs
        .iter()
        .filter(|p| p.pred.iter().any(|&(s, e, _)| s == 1 && e == p.n_components))
        .count();
    Ok(hits as f64 / pairs.len() as f64)
}

/// Timed throughput passes, in sentences per second.
#[derive(Clone, Debug, PartialEq)]
pub struct Throughput {
    pub rates: Vec<f64>,
}

impl Throughput {
    pub fn median(&self) -> f64 {
        let mut r = self.rates.clone();
        r.sort_by(|a, b| a.partial_cmp(b).expect("finite rates"));
        let m = r.len() / 2;
        if r.len() % 2 == 1 {
            r[m]
        } else {
            (r[m - 1] + r[m]) / 2.0
        }
    }

    /// `(max - min) / median` over the timed passes.
    pub fn spread(&self) -> f64 {
        let max = self.rates.iter().copied().fold(f64::MIN, f64::max);
        let min = self.rates.iter().copied().fold(f64::MAX, f64::min);
        (max - min) / self.median()
    }
}

pub const MIN_PASSES: usize = 3;

/// Runs `f` over `sentences` once untimed, then `passes` timed times.
pub fn measure_throughput<F>(sentences: &[Sentence], passes: usize, mut f: F) -> Result<Throughput>
where
    F: FnMut(&[Sentence]) -> Result<()>,
{
    if sentences.is_empty() {
        return Err(Error::Data("throughput needs at least one sentence".to_owned()));
    }
    if passes < MIN_PASSES {
        return Err(Error::Config(format!("at least {} timed passes are required", MIN_PASSES)));
    }
    f(sentences)?;
    let mut rates = Vec::with_capacity(passes);
    for _ in 0..passes {
        let start = Instant::now();
        f(sentences)?;
        let secs = start.elapsed().as_secs_f64().max(1e-9);
        rates.push(sentences.len() as f64 / secs);
    }
    Ok(Throughput { rates })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub average: Average,
    pub uss: Prf,
    pub lss: Prf,
    pub em: f64,
    pub buckets: BTreeMap<usize, Bucket>,
    pub global_span_accuracy: f64,
    pub n_compounds: usize,
    pub sentences_per_second: Option<f64>,
}

impl EvalReport {
    pub fn compute(pred: &[CompoundSpans], gold: &[CompoundSpans], average: Average) -> Result<EvalReport> {
        let (uss, lss) = span_scores(pred, gold, average)?;
        Ok(EvalReport {
            average,
            uss,
            lss,
            em: exact_match(pred, gold)?,
            buckets: bucket_by_components(pred, gold)?,
            global_span_accuracy: global_span_accuracy(pred, gold)?,
            n_compounds: gold.len(),
            sentences_per_second: None,
        })
    }

    /// Human-readable summary.
    pub fn render_table(&self) -> String {
        let avg = match self.average {
            Average::Micro => "micro",
            Average::Macro => "macro",
        };
        let mut s = String::new();
        writeln!(s, "compounds: {}  ({}-averaged)", self.n_compounds, avg).unwrap();
        writeln!(s, "{:<6} {:>9} {:>9} {:>9}", "", "P", "R", "F1").unwrap();
        for (name, p) in [("USS", self.uss), ("LSS", self.lss)] {
            writeln!(
                s,
                "{:<6} {:>9.2} {:>9.2} {:>9.2}",
                name,
                100.0 * p.precision,
                100.0 * p.recall,
                100.0 * p.f1
            )
            .unwrap();
        }
        writeln!(s, "EM      {:>8.2}", 100.0 * self.em).unwrap();
        writeln!(s, "global span accuracy {:.2}", 100.0 * self.global_span_accuracy).unwrap();
        if let Some(r) = self.sentences_per_second {
            writeln!(s, "sentences/s {:.1}", r).unwrap();
        }
        if !self.buckets.is_empty() {
            writeln!(s, "LSS F1 by component count:").unwrap();
            for (n, b) in &self.buckets {
                writeln!(s, "  N={:<3} {:>7.2}  ({} compounds)", n, 100.0 * b.lss_f1, b.count).unwrap();
            }
        }
        s
    }

    /// One `key<TAB>value` line per metric.
    pub fn render_kv(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: f64| writeln!(s, "{}\t{:.6}", k, v).unwrap();
        kv("uss_precision", self.uss.precision);
        kv("uss_recall", self.uss.recall);
        kv("uss_f1", self.uss.f1);
        kv("lss_precision", self.lss.precision);
        kv("lss_recall", self.lss.recall);
        kv("lss_f1", self.lss.f1);
        kv("em", self.em);
        kv("global_span_accuracy", self.global_span_accuracy);
        if let Some(r) = self.sentences_per_second {
            kv("sentences_per_second", r);
        }
        writeln!(s, "compounds\t{}", self.n_compounds).unwrap();
        s
    }

    /// Bucket data as CSV with a header row.
    pub fn buckets_csv(&self) -> String {
        let mut s = String::from("components,lss_f1,count\n");
        for (n, b) in &self.buckets {
            writeln!(s, "{},{:.6},{}", n, b.lss_f1, b.count).unwrap();
        }
        s
    }
}
