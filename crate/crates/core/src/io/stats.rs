use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::sentence::Sentence;

/// Corpus counts: records, compounds, component-count histogram and
/// relation label frequencies over gold trees.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetStats {
    pub n_records: usize,
    pub n_compounds: usize,
    pub histogram: BTreeMap<usize, usize>,
    pub labels: BTreeMap<String, usize>,
}

pub fn corpus_stats(sentences: &[Sentence]) -> DatasetStats {
    let mut stats = DatasetStats {
        n_records: sentences.len(),
        ..Default::default()
    };
    for s in sentences {
        for c in s.compounds() {
            stats.n_compounds += 1;
            *stats.histogram.entry(c.n_components()).or_default() += 1;
            if let Some(t) = c.gold_tree() {
                for l in t.labels() {
                    *stats.labels.entry(l.to_owned()).or_default() += 1;
                }
            }
        }
    }
    stats
}

impl DatasetStats {
    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "records\t{}", self.n_records).unwrap();
        writeln!(s, "compounds\t{}", self.n_compounds).unwrap();
        for (n, c) in &self.histogram {
            writeln!(s, "components={}\t{}", n, c).unwrap();
        }
        for (l, c) in &self.labels {
            writeln!(s, "label={}\t{}", l, c).unwrap();
        }
        s
    }

    /// `kind,key,count` rows for the histogram and label frequencies.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,key,count\n");
        for (n, c) in &self.histogram {
            writeln!(s, "components,{},{}", n, c).unwrap();
        }
        for (l, c) in &self.labels {
            writeln!(s, "label,{},{}", l, c).unwrap();
        }
        s
    }
}
