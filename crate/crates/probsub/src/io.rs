//! Line-oriented text formats for graphs, models, labelings, and delimited
//! reports. Floats are serialized at full round-trip precision; parsers
//! reject every invariant violation with the offending line number.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::constraints::ConstraintRegime;
use crate::error::{Error, Result};
use crate::model::{GraphInstance, LabelSet, Labeling, ModelDims, WeightVector};

/// A graph plus the label alphabet its file header declared.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedGraph {
    pub instance: GraphInstance,
    pub labels: LabelSet,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))
}

fn parse_f64(tok: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite {what} '{tok}'")));
    }
    Ok(v)
}

fn push_floats(out: &mut String, values: &[f64]) {
    for v in values {
        let _ = write!(out, " {v}");
    }
}

/// Serializes a graph:
///
/// ```text
/// # id <id>
/// crfgraph 1 <|V|> <|E|> <d_u> <d_p> <|L|>
/// v <idx> <d_u floats>
/// e <k> <l> <d_p floats>
/// y <|V| labels>            (only when ground truth is present)
/// ```
pub fn serialize_graph(x: &GraphInstance, labels: &LabelSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# id {}", x.id());
    let _ = writeln!(
        out,
        "crfgraph 1 {} {} {} {} {}",
        x.vertex_count(),
        x.edges().len(),
        x.d_u(),
        x.d_p(),
        labels.count()
    );
    for (k, feats) in x.vertices().iter().enumerate() {
        let _ = write!(out, "v {k}");
        push_floats(&mut out, feats);
        out.push('\n');
    }
    for e in x.edges() {
        let _ = write!(out, "e {} {}", e.k, e.l);
        push_floats(&mut out, &e.features);
        out.push('\n');
    }
    if let Some(y) = x.ground_truth() {
        out.push('y');
        for v in y.iter() {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

/// Parses [`serialize_graph`] output. The id comes from a leading
/// `# id …` comment when present, else from `fallback_id`.
pub fn parse_graph(text: &str, fallback_id: &str) -> Result<ParsedGraph> {
    let mut id = fallback_id.to_string();
    let mut header: Option<(usize, usize, usize, usize, usize)> = None;
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut edges: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    let mut ground_truth: Option<Labeling> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(name) = rest.trim().strip_prefix("id ") {
                id = name.trim().to_string();
            }
            continue;
        }
        let mut tokens = line.split_ascii_whitespace();
        let tag = tokens.next().unwrap();
        let rest: Vec<&str> = tokens.collect();
        match tag {
            "crfgraph" => {
                if header.is_some() {
                    return Err(parse_err(line_no, "duplicate header"));
                }
                if rest.len() != 6 || rest[0] != "1" {
                    return Err(parse_err(
                        line_no,
                        "header must be 'crfgraph 1 <V> <E> <d_u> <d_p> <L>'",
                    ));
                }
                let nums: Vec<usize> = rest[1..]
                    .iter()
                    .map(|t| parse_usize(t, line_no, "header field"))
                    .collect::<Result<_>>()?;
                header = Some((nums[0], nums[1], nums[2], nums[3], nums[4]));
            }
            "v" => {
                let (nv, _, d_u, _, _) =
                    header.ok_or_else(|| parse_err(line_no, "vertex before header"))?;
                if !edges.is_empty() || ground_truth.is_some() {
                    return Err(parse_err(line_no, "vertex lines must precede edge lines"));
                }
                if rest.len() != 1 + d_u {
                    return Err(parse_err(
                        line_no,
                        format!("vertex line needs index plus {d_u} features, got {} fields", rest.len()),
                    ));
                }
                let k = parse_usize(rest[0], line_no, "vertex index")?;
                if k != vertices.len() {
                    return Err(parse_err(
                        line_no,
                        format!("vertex index {k} out of order (expected {})", vertices.len()),
                    ));
                }
                if k >= nv {
                    return Err(parse_err(line_no, format!("vertex index {k} exceeds |V|={nv}")));
                }
                vertices.push(
                    rest[1..]
                        .iter()
                        .map(|t| parse_f64(t, line_no, "unary feature"))
                        .collect::<Result<_>>()?,
                );
            }
            "e" => {
                let (nv, ne, _, d_p, _) =
                    header.ok_or_else(|| parse_err(line_no, "edge before header"))?;
                if ground_truth.is_some() {
                    return Err(parse_err(line_no, "edge lines must precede the y line"));
                }
                if rest.len() != 2 + d_p {
                    return Err(parse_err(
                        line_no,
                        format!("edge line needs two endpoints plus {d_p} features, got {} fields", rest.len()),
                    ));
                }
                let k = parse_usize(rest[0], line_no, "edge endpoint")?;
                let l = parse_usize(rest[1], line_no, "edge endpoint")?;
                if k == l {
                    return Err(parse_err(line_no, format!("self-loop on vertex {k}")));
                }
                if k >= nv || l >= nv {
                    return Err(parse_err(line_no, format!("edge ({k}, {l}) exceeds |V|={nv}")));
                }
                let (a, b) = if k < l { (k, l) } else { (l, k) };
                if edges.iter().any(|(x, y, _)| (*x, *y) == (a, b)) {
                    return Err(parse_err(line_no, format!("duplicate undirected edge ({a}, {b})")));
                }
                if edges.len() >= ne {
                    return Err(parse_err(line_no, format!("more than |E|={ne} edge lines")));
                }
                let feats: Vec<f64> = rest[2..]
                    .iter()
                    .map(|t| parse_f64(t, line_no, "pairwise feature"))
                    .collect::<Result<_>>()?;
                if let Some(bad) = feats.iter().find(|v| **v < 0.0) {
                    return Err(parse_err(
                        line_no,
                        format!("negative pairwise feature {bad}; features must be nonnegative"),
                    ));
                }
                edges.push((a, b, feats));
            }
            "y" => {
                let (nv, _, _, _, nl) =
                    header.ok_or_else(|| parse_err(line_no, "labeling before header"))?;
                if ground_truth.is_some() {
                    return Err(parse_err(line_no, "duplicate y line"));
                }
                if rest.len() != nv {
                    return Err(parse_err(
                        line_no,
                        format!("y line needs {nv} labels, got {}", rest.len()),
                    ));
                }
                let labels: Vec<usize> = rest
                    .iter()
                    .map(|t| parse_usize(t, line_no, "label"))
                    .collect::<Result<_>>()?;
                if let Some(bad) = labels.iter().find(|v| **v >= nl) {
                    return Err(parse_err(line_no, format!("label {bad} outside 0..{nl}")));
                }
                ground_truth = Some(Labeling::new(labels));
            }
            other => return Err(parse_err(line_no, format!("unknown line tag '{other}'"))),
        }
    }

    let (nv, ne, d_u, d_p, nl) = header.ok_or_else(|| parse_err(1, "missing header"))?;
    if vertices.len() != nv {
        return Err(parse_err(1, format!("header declares {nv} vertices, found {}", vertices.len())));
    }
    if edges.len() != ne {
        return Err(parse_err(1, format!("header declares {ne} edges, found {}", edges.len())));
    }
    let labels = LabelSet::new(nl).map_err(|e| parse_err(1, e.to_string()))?;
    let instance = GraphInstance::new(id, vertices, edges, d_u, d_p, ground_truth)
        .map_err(|e| parse_err(1, e.to_string()))?;
    Ok(ParsedGraph { instance, labels })
}

/// Serializes a model:
///
/// ```text
/// crfmodel 1 <d_u> <d_p> <|L|> <regime>
/// <one weight coordinate per line, block order as in the weight layout>
/// ```
pub fn serialize_model(w: &WeightVector, regime: ConstraintRegime) -> String {
    let mut out = String::new();
    let d = w.dims();
    let _ = writeln!(out, "crfmodel 1 {} {} {} {}", d.d_u, d.d_p, d.labels, regime);
    for v in w.as_slice() {
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn parse_model(text: &str) -> Result<(WeightVector, ConstraintRegime)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .ok_or_else(|| parse_err(1, "missing model header"))?;
    let tokens: Vec<&str> = header.split_ascii_whitespace().collect();
    if tokens.len() != 6 || tokens[0] != "crfmodel" || tokens[1] != "1" {
        return Err(parse_err(1, "header must be 'crfmodel 1 <d_u> <d_p> <L> <regime>'"));
    }
    let d_u = parse_usize(tokens[2], 1, "d_u")?;
    let d_p = parse_usize(tokens[3], 1, "d_p")?;
    let labels = parse_usize(tokens[4], 1, "label count")?;
    let regime = ConstraintRegime::parse(tokens[5]).map_err(|e| parse_err(1, e.to_string()))?;
    let dims = ModelDims { labels, d_u, d_p };
    let mut data = Vec::with_capacity(dims.total_len());
    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        data.push(parse_f64(line, idx + 1, "weight coordinate")?);
    }
    if data.len() != dims.total_len() {
        return Err(parse_err(
            1,
            format!("model needs {} coordinates, found {}", dims.total_len(), data.len()),
        ));
    }
    let w = WeightVector::from_flat(dims, data).map_err(|e| parse_err(1, e.to_string()))?;
    Ok((w, regime))
}

/// Writes via a temporary file and rename, so readers never see partial
/// output.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_graph_file(path: &Path, x: &GraphInstance, labels: &LabelSet) -> Result<()> {
    write_atomic(path, &serialize_graph(x, labels))
}

pub fn read_graph_file(path: &Path) -> Result<ParsedGraph> {
    let text = std::fs::read_to_string(path)?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("graph");
    parse_graph(&text, stem)
}

pub fn write_model_file(path: &Path, w: &WeightVector, regime: ConstraintRegime) -> Result<()> {
    write_atomic(path, &serialize_model(w, regime))
}

pub fn read_model_file(path: &Path) -> Result<(WeightVector, ConstraintRegime)> {
    parse_model(&std::fs::read_to_string(path)?)
}

/// Loads every `*.crfgraph` in a directory whose file name starts with
/// `prefix`, sorted by file name. All files must agree on the label count.
pub fn load_graph_dir(dir: &Path, prefix: &str) -> Result<Vec<(PathBuf, ParsedGraph)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().and_then(|e| e.to_str()) == Some("crfgraph")
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with(prefix))
        })
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        let parsed = read_graph_file(&p)?;
        if let Some((_, first)) = out.first() {
            let first: &ParsedGraph = first;
            if parsed.labels != first.labels {
                return Err(Error::InvalidConfig(format!(
                    "label count mismatch in {}: {} vs {}",
                    p.display(),
                    parsed.labels.count(),
                    first.labels.count()
                )));
            }
        }
        out.push((p, parsed));
    }
    Ok(out)
}

/// Writes a delimited report: one tab-separated header line, then rows.
pub fn write_report(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    write_atomic(path, &out)
}
