use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use compound_nesting::encoder::{ContextualVectors, PretrainedVectors, Vocabulary};
use compound_nesting::eval::{self, gold_spans, CompoundSpans, EvalReport};
use compound_nesting::io::{corpus_stats, load_corpus, parse_conll, render_corpus, write_conll, ContextMode};
use compound_nesting::label::{is_structural_name, DEFAULT_HEAD_SIDE};
use compound_nesting::parser::{predicted_spans, train as train_model, Dataset, Model, Parse};
use compound_nesting::tree::{
    catalan, dependency_to_tree, enumerate_parses, gold_graph, render_unlabeled, tree_to_spans,
};
use compound_nesting::{HeadRules, LabelInventory, LabelMode, ModelConfig, Sentence};

use crate::{
    Average, BenchArgs, ConvertArgs, EnumerateArgs, EvalArgs, InputFormat, Mode, OutputFormat, ParseArgs,
    StatsArgs, TrainArgs, UsageError,
};

fn label_mode(mode: Mode) -> LabelMode {
    match mode {
        Mode::Coarse => LabelMode::Coarse,
        Mode::Fine => LabelMode::Fine,
    }
}

fn context_mode(config: &ModelConfig) -> ContextMode {
    if config.use_context {
        ContextMode::WithContext
    } else {
        ContextMode::WithoutContext
    }
}

fn read_corpus(path: &Path, mode: ContextMode) -> Result<Vec<Sentence>> {
    load_corpus(path, mode).with_context(|| format!("reading corpus {}", path.display()))
}

fn read_contextual(path: Option<&PathBuf>) -> Result<Option<ContextualVectors>> {
    path.map(|p| ContextualVectors::load(p).with_context(|| format!("reading contextual vectors {}", p.display())))
        .transpose()
}

fn read_model(path: &Path) -> Result<Model> {
    Model::load(path).with_context(|| format!("reading model {}", path.display()))
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// One line per compound: its id followed by its span tuples.
fn render_spans(compounds: &[CompoundSpans]) -> String {
    let mut out = String::new();
    for c in compounds {
        let spans: Vec<String> = c.spans.iter().map(ToString::to_string).collect();
        out.push_str(&c.id);
        out.push('\t');
        out.push_str(&spans.join(" "));
        out.push('\n');
    }
    out
}

fn with_predicted_trees(sentences: &[Sentence], parses: &[Parse]) -> Result<Vec<Sentence>> {
    sentences
        .iter()
        .zip(parses)
        .map(|(s, p)| Ok(s.with_trees(p.compounds.iter().map(|c| Some(c.tree.clone())).collect())?))
        .collect()
}

pub fn train(a: TrainArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => ModelConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => ModelConfig::default(),
    };
    for kv in &a.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| UsageError(format!("`--set` expects KEY=VALUE, got `{}`", kv)))?;
        config.set(k, v).map_err(|e| UsageError(e.to_string()))?;
    }
    if a.no_context {
        config.use_context = false;
    }
    if a.no_span_encoding {
        config.use_span_encoding = false;
    }
    if a.no_pretrained {
        config.use_pretrained_vectors = false;
    }
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    let contextual = read_contextual(a.contextual.as_ref())?;
    if let Some(cv) = &contextual {
        config.use_contextual_vectors = true;
        config.contextual_dim = cv.dim();
    }
    if a.dev_contextual.is_some() && contextual.is_none() {
        return Err(UsageError("`--dev-contextual` requires `--contextual`".to_owned()).into());
    }
    config.validate().map_err(|e| UsageError(e.to_string()))?;

    let mode = context_mode(&config);
    let data = read_corpus(&a.data, mode)?;
    let dev = a.dev.as_ref().map(|p| read_corpus(p, mode)).transpose()?;
    let dev_contextual = read_contextual(a.dev_contextual.as_ref())?;
    if contextual.is_some() && dev.is_some() && dev_contextual.is_none() {
        return Err(UsageError("a contextual model needs `--dev-contextual` for `--dev`".to_owned()).into());
    }
    let inventory = match &a.labels {
        Some(p) => LabelInventory::load(p, label_mode(a.mode))
            .with_context(|| format!("reading label inventory {}", p.display()))?,
        None => LabelInventory::collect_from_data(&data, label_mode(a.mode))?,
    };
    let vocab = Vocabulary::build(&data, config.min_count);
    let pretrained = match (&a.vectors, config.use_pretrained_vectors) {
        (Some(p), true) => {
            Some(PretrainedVectors::load(p).with_context(|| format!("reading vectors {}", p.display()))?)
        }
        _ => None,
    };

    let mut model = Model::new(config, inventory, vocab, pretrained.as_ref())?;
    let train_set = Dataset::with_contextual(&data, contextual.as_ref());
    let dev_set = dev.as_deref().map(|d| Dataset::with_contextual(d, dev_contextual.as_ref()));
    let stats = train_model(&mut model, train_set, dev_set, |e| match e.dev {
        Some(d) => eprintln!(
            "epoch {:>3}  loss {:.4}  dev USS {:.2}  LSS {:.2}  EM {:.2}",
            e.epoch,
            e.loss,
            100.0 * d.uss_f1,
            100.0 * d.lss_f1,
            100.0 * d.em
        ),
        None => eprintln!("epoch {:>3}  loss {:.4}", e.epoch, e.loss),
    })?;
    model.save(&a.out).with_context(|| format!("writing model {}", a.out.display()))?;

    let mut log = String::from("epoch\tloss\tdev_uss_f1\tdev_lss_f1\tdev_em\n");
    for e in &stats.epochs {
        let dev = e.dev.map_or_else(
            || "-\t-\t-".to_owned(),
            |d| format!("{:.6}\t{:.6}\t{:.6}", d.uss_f1, d.lss_f1, d.em),
        );
        log.push_str(&format!("{}\t{:.6}\t{}\n", e.epoch, e.loss, dev));
    }
    log.push_str(&format!("# best_epoch\t{}\n", stats.best().epoch));
    let log_path = a.log.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".log");
        p.into()
    });
    fs::write(&log_path, log).with_context(|| format!("writing {}", log_path.display()))?;
    println!("best_epoch\t{}", stats.best().epoch);
    if let Some(d) = stats.best().dev {
        println!("dev_lss_f1\t{:.6}", d.lss_f1);
    }
    Ok(())
}

pub fn parse(a: ParseArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let contextual = read_contextual(a.contextual.as_ref())?;
    let sentences = read_corpus(&a.input, context_mode(model.config()))?;
    let parses = model.parse(&sentences, contextual.as_ref())?;
    let text = match a.format {
        OutputFormat::Spans => render_spans(&predicted_spans(&parses)),
        OutputFormat::Brackets => render_corpus(&with_predicted_trees(&sentences, &parses)?),
        OutputFormat::Conll => {
            let items: Vec<_> = sentences.into_iter().zip(parses.into_iter().map(|p| p.graph)).collect();
            write_conll(&items)?
        }
    };
    write_output(a.output.as_ref(), &text)
}

/// Predicted span sets, keyed by position: the k-th compound of `pred`
/// must have the same components as the k-th compound of `gold` and takes
/// its id. Compounds without an analysis get no spans.
fn align_by_position(pred: &[Sentence], gold: &[Sentence]) -> Result<Vec<CompoundSpans>> {
    let gold_compounds: Vec<(&Sentence, &compound_nesting::Compound)> =
        gold.iter().flat_map(|s| s.compounds().iter().map(move |c| (s, c))).collect();
    let pred_compounds: Vec<(&Sentence, &compound_nesting::Compound)> =
        pred.iter().flat_map(|s| s.compounds().iter().map(move |c| (s, c))).collect();
    if gold_compounds.len() != pred_compounds.len() {
        bail!(
            "unaligned compound ids: {} predicted compounds, {} gold",
            pred_compounds.len(),
            gold_compounds.len()
        );
    }
    gold_compounds
        .iter()
        .zip(&pred_compounds)
        .map(|((gs, gc), (ps, pc))| {
            if gs.surfaces(gc) != ps.surfaces(pc) {
                bail!(
                    "unaligned compound ids: gold {} is `{}`, prediction has `{}`",
                    gc.id,
                    gs.surfaces(gc).join("-"),
                    ps.surfaces(pc).join("-")
                );
            }
            Ok(CompoundSpans {
                id: gc.id.clone(),
                n_components: gc.n_components(),
                spans: pc.gold_tree().map(tree_to_spans).unwrap_or_default(),
            })
        })
        .collect()
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let average = match a.average {
        Average::Micro => eval::Average::Micro,
        Average::Macro => eval::Average::Macro,
    };
    let (pred, gold) = match (&a.gold, &a.pred, &a.model, &a.data) {
        (Some(g), Some(p), None, None) => {
            let gold = read_corpus(g, ContextMode::WithContext)?;
            let pred = read_corpus(p, ContextMode::WithContext)?;
            (align_by_position(&pred, &gold)?, gold_spans(&gold)?)
        }
        (None, None, Some(m), Some(d)) => {
            let model = read_model(m)?;
            let contextual = read_contextual(a.contextual.as_ref())?;
            let gold = read_corpus(d, context_mode(model.config()))?;
            let parses = model.parse(&gold, contextual.as_ref())?;
            (predicted_spans(&parses), gold_spans(&gold)?)
        }
        _ => return Err(UsageError("use either `--gold` with `--pred` or `--model` with `--data`".to_owned()).into()),
    };
    let report = EvalReport::compute(&pred, &gold, average)?;
    print!("{}", report.render_table());
    if let Some(p) = &a.report {
        fs::write(p, report.render_kv()).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &a.buckets {
        fs::write(p, report.buckets_csv()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

pub fn enumerate(a: EnumerateArgs) -> Result<()> {
    let names: Vec<String> = if a.components.is_empty() {
        let n = a.n.expect("clap requires --n without --components");
        (1..=n).map(|i| i.to_string()).collect()
    } else {
        a.components.clone()
    };
    let n = names.len();
    if n < 2 {
        return Err(UsageError(format!("a compound needs at least 2 components, got {}", n)).into());
    }
    if a.count_only {
        println!("{}", catalan(n as u64 - 1));
        return Ok(());
    }
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for tree in enumerate_parses(n, "X")? {
        if writeln!(out, "{}", render_unlabeled(&tree, &names)).is_err() {
            // Closed pipe: the reader has seen enough.
            return Ok(());
        }
    }
    out.flush().ok();
    Ok(())
}

fn rules_for(path: Option<&PathBuf>, mode: Mode, labels: impl Iterator<Item = String>) -> Result<HeadRules> {
    match path {
        Some(p) => Ok(LabelInventory::load(p, label_mode(mode))
            .with_context(|| format!("reading label inventory {}", p.display()))?
            .head_rules()
            .clone()),
        None => Ok(HeadRules::uniform(labels, DEFAULT_HEAD_SIDE)),
    }
}

pub fn convert(a: ConvertArgs) -> Result<()> {
    let sentences: Vec<Sentence> = match a.from {
        InputFormat::Brackets => read_corpus(&a.input, ContextMode::WithContext)?,
        InputFormat::Conll => {
            let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
            let items = parse_conll(&text).with_context(|| format!("reading {}", a.input.display()))?;
            let labels = items
                .iter()
                .flat_map(|(_, g)| g.arcs())
                .map(|arc| arc.label)
                .filter(|l| !is_structural_name(l));
            let rules = rules_for(a.rules.as_ref(), a.mode, labels)?;
            items
                .iter()
                .map(|(s, g)| {
                    let trees = s
                        .compounds()
                        .iter()
                        .map(|c| {
                            dependency_to_tree(&g.compound_arcs(c), c.token_start, &rules)
                                .map(Some)
                                .with_context(|| format!("compound {}", c.id))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(s.with_trees(trees)?)
                })
                .collect::<Result<_>>()?
        }
    };
    let text = match a.to {
        OutputFormat::Brackets => render_corpus(&sentences),
        OutputFormat::Spans => render_spans(&gold_spans(&sentences)?),
        OutputFormat::Conll => {
            let labels = sentences
                .iter()
                .flat_map(|s| s.compounds())
                .filter_map(|c| c.gold_tree())
                .flat_map(|t| t.labels().into_iter().map(str::to_owned).collect::<Vec<_>>());
            let rules = rules_for(a.rules.as_ref(), a.mode, labels)?;
            let items = sentences
                .into_iter()
                .map(|s| {
                    let g = gold_graph(&s, &rules).with_context(|| format!("sentence {}", s.id()))?;
                    Ok((s, g))
                })
                .collect::<Result<Vec<_>>>()?;
            write_conll(&items)?
        }
    };
    write_output(a.output.as_ref(), &text)
}

pub fn stats(a: StatsArgs) -> Result<()> {
    let sentences = read_corpus(&a.data, ContextMode::WithContext)?;
    let stats = corpus_stats(&sentences);
    print!("{}", stats.render());
    if let Some(p) = &a.csv {
        fs::write(p, stats.to_csv()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

pub fn bench(a: BenchArgs) -> Result<()> {
    if a.passes < eval::MIN_PASSES {
        return Err(UsageError(format!("`--passes` must be at least {}", eval::MIN_PASSES)).into());
    }
    let model = read_model(&a.model)?;
    let contextual = read_contextual(a.contextual.as_ref())?;
    let sentences = read_corpus(&a.data, context_mode(model.config()))?;
    if sentences.is_empty() {
        return Err(anyhow!("no sentences in {}", a.data.display()));
    }
    let t = eval::measure_throughput(&sentences, a.passes, |s| model.parse(s, contextual.as_ref()).map(|_| ()))?;
    println!("sentences\t{}", sentences.len());
    println!("passes\t{}", t.rates.len());
    println!("median_sentences_per_second\t{:.3}", t.median());
    println!("spread\t{:.4}", t.spread());
    for (i, r) in t.rates.iter().enumerate() {
        println!("pass_{}\t{:.3}", i + 1, r);
    }
    Ok(())
}
