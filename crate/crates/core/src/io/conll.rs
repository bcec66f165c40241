//! Tab-separated dependency export: `ID FORM HEAD DEPREL COMPOUND_ID`,
//! one token per line, a `# sent_id = …` comment before each sentence and
//! a blank line after it. Plain words have compound id `_`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::sentence::{Compound, Sentence, Token};
use crate::tree::{validate_graph, DependencyGraph};

/// Renders sentences with their graphs; every graph must be valid.
pub fn write_conll(items: &[(Sentence, DependencyGraph)]) -> Result<String> {
    let mut out = String::new();
    for (s, g) in items {
        let problems = validate_graph(g, s);
        if !problems.is_empty() {
            return Err(Error::Structure(format!(
                "invalid graph for sentence {}: {}",
                s.id(),
                problems.join("; ")
            )));
        }
        writeln!(out, "# sent_id = {}", s.id()).unwrap();
        for (i, t) in s.tokens().iter().enumerate() {
            let node = i + 1;
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                node,
                t.surface,
                g.head(node).expect("valid graphs are complete"),
                g.label(node).expect("valid graphs are complete"),
                t.compound_id().unwrap_or("_")
            )
            .unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

struct Row {
    line: usize,
    form: String,
    head: usize,
    label: String,
    compound: Option<String>,
}

fn finish(id: Option<String>, rows: Vec<Row>, ordinal: usize) -> Result<(Sentence, DependencyGraph)> {
    let first = rows[0].line;
    let id = id.unwrap_or_else(|| ordinal.to_string());
    let mut tokens = Vec::with_capacity(rows.len());
    let mut compounds: Vec<Compound> = Vec::new();
    let mut graph = DependencyGraph::new(rows.len());
    for (i, row) in rows.iter().enumerate() {
        match &row.compound {
            None => tokens.push(Token::word(row.form.clone())),
            Some(cid) => {
                let continues = compounds.last().is_some_and(|c| c.id == *cid && c.token_end + 1 == i);
                if continues {
                    let c = compounds.last_mut().expect("checked");
                    c.token_end = i;
                } else {
                    if compounds.iter().any(|c| c.id == *cid) {
                        return Err(Error::parse(row.line, format!("compound {} is not contiguous", cid)));
                    }
                    compounds.push(Compound {
                        id: cid.clone(),
                        token_start: i,
                        token_end: i,
                        gold_tree: None,
                    });
                }
                let c = compounds.last().expect("pushed");
                tokens.push(Token::component(row.form.clone(), cid.clone(), i - c.token_start + 1));
            }
        }
        if row.head > rows.len() {
            return Err(Error::parse(row.line, format!("head {} outside the sentence", row.head)));
        }
        graph.set_arc(i + 1, row.head, row.label.clone());
    }
    let sentence = Sentence::new(id, tokens, compounds).map_err(|e| Error::parse(first, e.to_string()))?;
    Ok((sentence, graph))
}

/// Reads the export format back. Compounds come without gold trees.
pub fn parse_conll(text: &str) -> Result<Vec<(Sentence, DependencyGraph)>> {
    let mut out = Vec::new();
    let mut rows: Vec<Row> = Vec::new();
    let mut id: Option<String> = None;
    let lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    for (lineno, line) in lines.chain(std::iter::once((0, ""))) {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !rows.is_empty() {
                out.push(finish(id.take(), std::mem::take(&mut rows), out.len() + 1)?);
            }
            id = None;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("sent_id") {
                let v = v.trim_start().strip_prefix('=').unwrap_or(v).trim();
                id = Some(v.to_owned());
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(Error::parse(lineno, format!("expected 5 tab-separated fields, got {}", fields.len())));
        }
        let idx: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad token id `{}`", fields[0])))?;
        if idx != rows.len() + 1 {
            return Err(Error::parse(lineno, format!("token id {} out of sequence", idx)));
        }
        let head: usize = fields[2]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad head `{}`", fields[2])))?;
        rows.push(Row {
            line: lineno,
            form: fields[1].to_owned(),
            head,
            label: fields[3].to_owned(),
            compound: (fields[4] != "_").then(|| fields[4].to_owned()),
        });
    }
    Ok(out)
}
