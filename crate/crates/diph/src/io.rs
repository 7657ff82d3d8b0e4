//! Data ingestion, model persistence, and report serialization.
//!
//! Hyperedge files are plain UTF-8 text, one hyperedge per line, node labels
//! separated by a delimiter (comma by default). Ingestion builds the
//! vocabulary in first-appearance order, dedupes repeated labels within a
//! line (with a warning), and drops nodes that appear in fewer than
//! `min_node_count` hyperedges, matching the usual minimum-frequency
//! preprocessing of co-occurrence data.
//!
//! Model files are a line-oriented, diff-friendly text format with floats at
//! 17 significant digits (lossless for f64) and an FNV-1a checksum trailer;
//! write → read → write is byte-identical.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{BatchSize, FitOptions, FitResult};
use crate::kernel::{validate_config, Hypergraph, LatentConfig};
use crate::simgen::ExperimentReport;

/// Options for [`parse_hyperedges`].
#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub delimiter: char,
    /// Nodes appearing in fewer hyperedges than this are removed everywhere.
    pub min_node_count: usize,
    /// Treat blank lines as empty hyperedges instead of skipping them.
    pub blank_as_empty: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            delimiter: ',',
            min_node_count: 2,
            blank_as_empty: false,
        }
    }
}

/// A non-fatal ingestion irregularity, with its 1-based source line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

/// Parses a hyperedge list from text.
///
/// The vocabulary is built in first-appearance order; after the frequency
/// filter, surviving nodes are re-indexed compactly in that same order.
/// Edges that lose every node stay in the list as empty hyperedges.
pub fn parse_hyperedges<R: BufRead>(
    reader: R,
    opts: &ParseOptions,
) -> Result<(Hypergraph, Vec<ParseWarning>)> {
    let mut vocab: Vec<String> = Vec::new();
    let mut index_of = std::collections::HashMap::<String, usize>::new();
    let mut raw_edges: Vec<Vec<usize>> = Vec::new();
    let mut warnings = Vec::new();

    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|e| Error::Data(format!("line {line_no}: {e}")))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            if opts.blank_as_empty {
                raw_edges.push(Vec::new());
            }
            continue;
        }
        let mut edge: Vec<usize> = Vec::new();
        for token in trimmed.split(opts.delimiter) {
            let token = token.trim();
            if token.is_empty() {
                warnings.push(ParseWarning {
                    line: line_no,
                    message: "empty token skipped".into(),
                });
                continue;
            }
            let idx = *index_of.entry(token.to_string()).or_insert_with(|| {
                vocab.push(token.to_string());
                vocab.len() - 1
            });
            if edge.contains(&idx) {
                warnings.push(ParseWarning {
                    line: line_no,
                    message: format!("duplicate token '{token}' ignored"),
                });
            } else {
                edge.push(idx);
            }
        }
        edge.sort_unstable();
        raw_edges.push(edge);
    }

    // Frequency filter: appearance count is the number of edges containing
    // the node (after within-line dedup).
    let mut counts = vec![0usize; vocab.len()];
    for edge in &raw_edges {
        for &i in edge {
            counts[i] += 1;
        }
    }
    let mut remap = vec![usize::MAX; vocab.len()];
    let mut surviving_vocab = Vec::new();
    for (i, label) in vocab.iter().enumerate() {
        if counts[i] >= opts.min_node_count {
            remap[i] = surviving_vocab.len();
            surviving_vocab.push(label.clone());
        }
    }
    if surviving_vocab.is_empty() {
        return Err(Error::Data(format!(
            "no nodes appear in at least {} hyperedge(s)",
            opts.min_node_count
        )));
    }
    let edges: Vec<Vec<usize>> = raw_edges
        .into_iter()
        .map(|edge| {
            let mut mapped: Vec<usize> = edge
                .into_iter()
                .filter_map(|i| (remap[i] != usize::MAX).then(|| remap[i]))
                .collect();
            mapped.sort_unstable();
            mapped
        })
        .collect();
    let n_v = surviving_vocab.len();
    let h = Hypergraph::new(n_v, edges)?.with_vocab(surviving_vocab)?;
    Ok((h, warnings))
}

const MODEL_MAGIC: &str = "diph-model";
const MODEL_VERSION: u32 = 1;

/// Fit provenance embedded in a model file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Provenance {
    pub seed: u64,
    pub objective: f64,
    pub aic: f64,
    pub max_iters: usize,
    pub step_size: f64,
    pub backtrack_factor: f64,
    pub tol: f64,
    pub batch_size: String,
    pub n_inits: usize,
    pub floor_eps: f64,
    /// Unix seconds; taken from `SOURCE_DATE_EPOCH` when set, so seeded runs
    /// can be byte-reproducible.
    pub timestamp_unix: u64,
}

impl Provenance {
    pub fn from_fit(result: &FitResult, opts: &FitOptions) -> Self {
        Self {
            seed: opts.seed,
            objective: result.final_objective,
            aic: result.aic,
            max_iters: opts.max_iters,
            step_size: opts.step_size,
            backtrack_factor: opts.backtrack_factor,
            tol: opts.tol,
            batch_size: match opts.batch_size {
                BatchSize::Full => "full".into(),
                BatchSize::Size(s) => s.to_string(),
            },
            n_inits: opts.n_inits,
            floor_eps: opts.floor_eps,
            timestamp_unix: timestamp(),
        }
    }
}

fn timestamp() -> u64 {
    if let Ok(value) = std::env::var("SOURCE_DATE_EPOCH") {
        if let Ok(parsed) = value.trim().parse::<u64>() {
            return parsed;
        }
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// A latent configuration with optional vocabulary and provenance, as stored
/// on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub config: LatentConfig,
    pub vocab: Option<Vec<String>>,
    pub provenance: Option<Provenance>,
}

impl ModelFile {
    pub fn new(config: LatentConfig) -> Self {
        Self {
            config,
            vocab: None,
            provenance: None,
        }
    }

    pub fn label(&self, i: usize) -> String {
        match &self.vocab {
            Some(v) => v[i].clone(),
            None => i.to_string(),
        }
    }

    /// Index of a label: vocabulary lookup when labels exist, otherwise the
    /// label must be a bare node index.
    pub fn resolve_label(&self, label: &str) -> Result<usize> {
        if let Some(vocab) = &self.vocab {
            vocab
                .iter()
                .position(|v| v == label)
                .ok_or_else(|| Error::Data(format!("unknown node label '{label}'")))
        } else {
            let idx: usize = label
                .parse()
                .map_err(|_| Error::Data(format!("unknown node label '{label}'")))?;
            if idx >= self.config.n_nodes() {
                return Err(Error::Data(format!("unknown node label '{label}'")));
            }
            Ok(idx)
        }
    }
}

/// 17-significant-digit scientific notation; lossless for f64.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn render_model(model: &ModelFile) -> Result<String> {
    let violations = validate_config(&model.config);
    if !violations.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "refusing to write invalid model ({} violation(s))",
            violations.len()
        )));
    }
    let n_v = model.config.n_nodes();
    let d = model.config.dim();
    let mut out = String::new();
    writeln!(out, "{MODEL_MAGIC} v{MODEL_VERSION}").unwrap();
    writeln!(out, "n_v {n_v}").unwrap();
    writeln!(out, "d {d}").unwrap();
    writeln!(out, "beta {}", fmt_float(model.config.beta)).unwrap();
    for i in 0..n_v {
        writeln!(out, "alpha {i} {}", fmt_float(model.config.alpha[i])).unwrap();
    }
    for i in 0..n_v {
        let row: Vec<String> = (0..d)
            .map(|j| fmt_float(model.config.directions[(i, j)]))
            .collect();
        writeln!(out, "v {i} {}", row.join(" ")).unwrap();
    }
    if let Some(vocab) = &model.vocab {
        if vocab.len() != n_v {
            return Err(Error::DimensionMismatch {
                expected: n_v,
                got: vocab.len(),
            });
        }
        for (i, label) in vocab.iter().enumerate() {
            if label.contains('\n') || label.contains('\r') {
                return Err(Error::Data(format!(
                    "label for node {i} contains a line break"
                )));
            }
            writeln!(out, "vocab {i} {label}").unwrap();
        }
    }
    if let Some(prov) = &model.provenance {
        let json = serde_json::to_string(prov)
            .map_err(|e| Error::Data(format!("provenance serialization: {e}")))?;
        writeln!(out, "provenance {json}").unwrap();
    }
    writeln!(out, "checksum {:016x}", fnv1a64(out.as_bytes())).unwrap();
    Ok(out)
}

pub fn write_model(model: &ModelFile, path: &Path) -> Result<()> {
    let text = render_model(model)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    parse_model(&text)
}

fn parse_model(text: &str) -> Result<ModelFile> {
    // Checksum covers everything up to and including the newline before the
    // checksum line.
    let body_end = text
        .rfind("checksum ")
        .ok_or_else(|| Error::Data("model file has no checksum trailer (truncated?)".into()))?;
    let stated = text[body_end..]
        .trim_start_matches("checksum ")
        .trim()
        .to_string();
    let actual = format!("{:016x}", fnv1a64(text[..body_end].as_bytes()));
    if stated != actual {
        return Err(Error::Data(format!(
            "model file checksum mismatch: stated {stated}, computed {actual}"
        )));
    }

    let mut lines = text[..body_end].lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data("empty model file".into()))?;
    let Some(version_str) = header.strip_prefix(&format!("{MODEL_MAGIC} v")) else {
        return Err(Error::Data(format!(
            "not a model file (header '{header}')"
        )));
    };
    let version: u32 = version_str
        .trim()
        .parse()
        .map_err(|_| Error::Data(format!("malformed version '{version_str}'")))?;
    if version != MODEL_VERSION {
        return Err(Error::Data(format!(
            "unsupported model file version {version} (this build reads v{MODEL_VERSION})"
        )));
    }

    let mut n_v: Option<usize> = None;
    let mut d: Option<usize> = None;
    let mut beta: Option<f64> = None;
    let mut alpha: Vec<Option<f64>> = Vec::new();
    let mut rows: Vec<Option<Vec<f64>>> = Vec::new();
    let mut vocab: Vec<Option<String>> = Vec::new();
    let mut has_vocab = false;
    let mut provenance = None;

    for (line_no, line) in lines.enumerate() {
        let line_no = line_no + 2;
        let bad = |msg: &str| Error::Data(format!("model file line {line_no}: {msg}"));
        let mut parts = line.splitn(2, ' ');
        let key = parts.next().unwrap_or("");
        let rest = parts.next().unwrap_or("").trim();
        match key {
            "n_v" => {
                let v = rest.parse().map_err(|_| bad("bad n_v"))?;
                alpha = vec![None; v];
                rows = vec![None; v];
                vocab = vec![None; v];
                n_v = Some(v);
            }
            "d" => d = Some(rest.parse().map_err(|_| bad("bad d"))?),
            "beta" => beta = Some(rest.parse().map_err(|_| bad("bad beta"))?),
            "alpha" => {
                let mut it = rest.splitn(2, ' ');
                let i: usize = it
                    .next()
                    .unwrap_or("")
                    .parse()
                    .map_err(|_| bad("bad alpha index"))?;
                let value: f64 = it
                    .next()
                    .unwrap_or("")
                    .trim()
                    .parse()
                    .map_err(|_| bad("bad alpha value"))?;
                *alpha.get_mut(i).ok_or_else(|| bad("alpha index out of range"))? = Some(value);
            }
            "v" => {
                let mut it = rest.splitn(2, ' ');
                let i: usize = it
                    .next()
                    .unwrap_or("")
                    .parse()
                    .map_err(|_| bad("bad row index"))?;
                let values: Vec<f64> = it
                    .next()
                    .unwrap_or("")
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("bad row value"))?;
                *rows.get_mut(i).ok_or_else(|| bad("row index out of range"))? = Some(values);
            }
            "vocab" => {
                has_vocab = true;
                let mut it = rest.splitn(2, ' ');
                let i: usize = it
                    .next()
                    .unwrap_or("")
                    .parse()
                    .map_err(|_| bad("bad vocab index"))?;
                let label = it.next().unwrap_or("").to_string();
                *vocab.get_mut(i).ok_or_else(|| bad("vocab index out of range"))? = Some(label);
            }
            "provenance" => {
                provenance = Some(
                    serde_json::from_str::<Provenance>(rest)
                        .map_err(|e| bad(&format!("bad provenance json: {e}")))?,
                );
            }
            other => return Err(bad(&format!("unknown field '{other}'"))),
        }
    }

    let n_v = n_v.ok_or_else(|| Error::Data("model file missing n_v".into()))?;
    let d = d.ok_or_else(|| Error::Data("model file missing d".into()))?;
    let beta = beta.ok_or_else(|| Error::Data("model file missing beta".into()))?;
    let alpha: Vec<f64> = alpha
        .into_iter()
        .enumerate()
        .map(|(i, a)| a.ok_or_else(|| Error::Data(format!("missing alpha {i}"))))
        .collect::<Result<_>>()?;
    let mut directions = DMatrix::zeros(n_v, d);
    for (i, row) in rows.into_iter().enumerate() {
        let row = row.ok_or_else(|| Error::Data(format!("missing direction row {i}")))?;
        if row.len() != d {
            return Err(Error::Data(format!(
                "direction row {i} has {} entries, expected {d}",
                row.len()
            )));
        }
        for (j, value) in row.into_iter().enumerate() {
            directions[(i, j)] = value;
        }
    }
    let config = LatentConfig {
        directions,
        beta,
        alpha: DVector::from_vec(alpha),
    };
    let violations = validate_config(&config);
    if !violations.is_empty() {
        return Err(Error::Data(format!(
            "model file config violates {} invariant(s)",
            violations.len()
        )));
    }
    let vocab = if has_vocab {
        Some(
            vocab
                .into_iter()
                .enumerate()
                .map(|(i, l)| l.ok_or_else(|| Error::Data(format!("missing vocab entry {i}"))))
                .collect::<Result<Vec<String>>>()?,
        )
    } else {
        None
    };
    Ok(ModelFile {
        config,
        vocab,
        provenance,
    })
}

const REPORT_SCHEMA: &str = "diph-report v1";

fn csv_quote(text: &str) -> String {
    format!("\"{}\"", text.replace('"', "\"\""))
}

/// Writes an [`ExperimentReport`] as CSV with a schema-version header line.
///
/// `include_timings = false` writes zeros in the wall-clock column so that
/// seeded runs produce byte-identical files.
pub fn write_report_csv<W: Write>(
    report: &ExperimentReport,
    mut w: W,
    include_timings: bool,
) -> Result<()> {
    writeln!(w, "# {REPORT_SCHEMA}")?;
    writeln!(
        w,
        "sim,n_v,d,n_e,replicate,seed,rel_err_v,rel_err_beta,rel_err_alpha,rel_err_l,acc_line_kmeans,acc_nsc,acc_score,wall_clock_secs,failure"
    )?;
    for r in &report.records {
        let err = |f: fn(&crate::metrics::RelativeErrors) -> f64| -> String {
            r.errors.as_ref().map(|e| f(e).to_string()).unwrap_or_default()
        };
        let acc = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let wall = if include_timings {
            r.wall_clock_secs.to_string()
        } else {
            "0".to_string()
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.sim,
            r.n_v,
            r.d,
            r.n_e,
            r.replicate,
            r.seed,
            err(|e| e.v),
            err(|e| e.beta),
            err(|e| e.alpha),
            err(|e| e.l),
            acc(r.accuracy_line_kmeans),
            acc(r.accuracy_nsc),
            acc(r.accuracy_score),
            wall,
            r.failure.as_deref().map(csv_quote).unwrap_or_default()
        )?;
    }
    Ok(())
}

/// Writes an [`ExperimentReport`] as JSON with embedded schema name and
/// version. Timings are zeroed unless requested, as in the CSV writer.
pub fn write_report_json<W: Write>(
    report: &ExperimentReport,
    w: W,
    include_timings: bool,
) -> Result<()> {
    let mut records = report.records.clone();
    if !include_timings {
        for r in &mut records {
            r.wall_clock_secs = 0.0;
        }
    }
    let doc = serde_json::json!({
        "schema": "diph-report",
        "version": 1,
        "records": records,
    });
    serde_json::to_writer_pretty(w, &doc).map_err(|e| Error::Data(format!("json write: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str, opts: &ParseOptions) -> (Hypergraph, Vec<ParseWarning>) {
        parse_hyperedges(Cursor::new(text.as_bytes()), opts).unwrap()
    }

    #[test]
    fn parses_simple_edges_without_filtering() {
        let opts = ParseOptions {
            min_node_count: 1,
            ..Default::default()
        };
        let (h, warnings) = parse("a,b,c\na,b\n", &opts);
        assert!(warnings.is_empty());
        assert_eq!(h.n_nodes(), 3);
        assert_eq!(h.edges(), &[vec![0, 1, 2], vec![0, 1]]);
        assert_eq!(h.vocab().unwrap(), ["a", "b", "c"]);
    }

    #[test]
    fn frequency_filter_drops_rare_nodes() {
        let opts = ParseOptions {
            min_node_count: 2,
            ..Default::default()
        };
        let (h, _) = parse("a,b,c\na,b\n", &opts);
        assert_eq!(h.n_nodes(), 2);
        assert_eq!(h.edges(), &[vec![0, 1], vec![0, 1]]);
        assert_eq!(h.vocab().unwrap(), ["a", "b"]);
    }

    #[test]
    fn duplicate_tokens_warn_and_dedupe() {
        let opts = ParseOptions {
            min_node_count: 1,
            ..Default::default()
        };
        let (h, warnings) = parse("a,a,b\n", &opts);
        assert_eq!(h.edges(), &[vec![0, 1]]);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].message.contains("duplicate"));
        assert_eq!(warnings[0].line, 1);
    }

    #[test]
    fn blank_lines_are_skipped_unless_requested() {
        let base = ParseOptions {
            min_node_count: 1,
            ..Default::default()
        };
        let (h, _) = parse("a,b\n\nb,c\n", &base);
        assert_eq!(h.n_edges(), 2);

        let blank = ParseOptions {
            blank_as_empty: true,
            ..base
        };
        let (h, _) = parse("a,b\n\nb,c\n", &blank);
        assert_eq!(h.n_edges(), 3);
        assert_eq!(h.edges()[1], Vec::<usize>::new());
    }

    #[test]
    fn zero_survivors_is_an_error() {
        let opts = ParseOptions {
            min_node_count: 2,
            ..Default::default()
        };
        let err = parse_hyperedges(Cursor::new(b"a,b\n".as_slice()), &opts).unwrap_err();
        assert!(err.to_string().contains("no nodes"));
    }

    fn sample_model() -> ModelFile {
        let config = LatentConfig::new(
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.6, 0.8]),
            0.75,
            DVector::from_vec(vec![0.1, 0.25, 0.5]),
        )
        .unwrap();
        ModelFile {
            config,
            vocab: Some(vec!["soy sauce".into(), "ginger".into(), "rice".into()]),
            provenance: Some(Provenance {
                seed: 7,
                objective: -2.5,
                aic: 100.0,
                max_iters: 500,
                step_size: 0.05,
                backtrack_factor: 0.5,
                tol: 1e-7,
                batch_size: "full".into(),
                n_inits: 3,
                floor_eps: 1e-8,
                timestamp_unix: 1_700_000_000,
            }),
        }
    }

    #[test]
    fn model_round_trip_is_lossless_and_byte_stable() {
        let model = sample_model();
        let text = render_model(&model).unwrap();
        let parsed = parse_model(&text).unwrap();
        assert_eq!(parsed, model);
        assert_eq!(render_model(&parsed).unwrap(), text);
    }

    #[test]
    fn truncated_model_fails_checksum() {
        let model = sample_model();
        let text = render_model(&model).unwrap();
        // Cut a line out of the middle.
        let mangled: Vec<&str> = text.lines().filter(|l| !l.starts_with("alpha 1")).collect();
        let err = parse_model(&(mangled.join("\n") + "\n")).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");
    }

    #[test]
    fn future_version_is_a_version_error() {
        let model = sample_model();
        let mut text = render_model(&model).unwrap();
        text = text.replace("diph-model v1", "diph-model v2");
        // Re-stamp the checksum so only the version differs.
        let body_end = text.rfind("checksum ").unwrap();
        let body = text[..body_end].to_string();
        let text = format!("{body}checksum {:016x}\n", fnv1a64(body.as_bytes()));
        let err = parse_model(&text).unwrap_err();
        assert!(err.to_string().contains("version 2"), "{err}");
    }

    #[test]
    fn label_resolution() {
        let model = sample_model();
        assert_eq!(model.resolve_label("ginger").unwrap(), 1);
        assert!(model.resolve_label("cumin").is_err());
        let unlabeled = ModelFile::new(model.config.clone());
        assert_eq!(unlabeled.resolve_label("2").unwrap(), 2);
        assert!(unlabeled.resolve_label("9").is_err());
    }

    #[test]
    fn report_csv_has_schema_header() {
        let report = ExperimentReport { records: vec![] };
        let mut buf = Vec::new();
        write_report_csv(&report, &mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# diph-report v1\n"));
        assert!(text.contains("rel_err_l"));
    }

    #[test]
    fn report_json_embeds_schema_version() {
        let report = ExperimentReport { records: vec![] };
        let mut buf = Vec::new();
        write_report_json(&report, &mut buf, false).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(value["schema"], "diph-report");
        assert_eq!(value["version"], 1);
    }
}
