//! File formats: observation CSV (header row), truth edge lists and dense
//! 0/1 adjacency CSV, JSON reports. All readers validate dimensions,
//! finiteness and acyclicity; all writers round-trip bit-exactly.

use crate::error::{DasError, Result};
use crate::graph::Dag;
use crate::synth::Dataset;

/// Parse a plain-text edge list, one `i j` pair per line (0-based). Blank
/// lines and `#` comments are ignored. When `d` is not given the node count
/// is inferred as max index + 1.
pub fn parse_edge_list(text: &str, d: Option<usize>) -> Result<Dag> {
    let mut edges = Vec::new();
    let mut max_node = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize> {
            tok.ok_or_else(|| DasError::Parse {
                line: lineno + 1,
                msg: "expected two indices".into(),
            })?
            .parse::<usize>()
            .map_err(|e| DasError::Parse {
                line: lineno + 1,
                msg: e.to_string(),
            })
        };
        let i = parse(parts.next())?;
        let j = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(DasError::Parse {
                line: lineno + 1,
                msg: "expected exactly two indices".into(),
            });
        }
        max_node = max_node.max(i).max(j);
        edges.push((i, j));
    }
    let d = d.unwrap_or(if edges.is_empty() { 0 } else { max_node + 1 });
    Dag::from_edges(d, &edges)
}

pub fn write_edge_list(dag: &Dag) -> String {
    let mut out = String::new();
    for (i, j) in dag.edges() {
        out.push_str(&format!("{i} {j}\n"));
    }
    out
}

/// Parse a dense 0/1 adjacency matrix, one comma-separated row per line.
pub fn parse_adjacency_csv(text: &str) -> Result<Dag> {
    let mut rows: Vec<Vec<bool>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for tok in line.split(',') {
            match tok.trim() {
                "0" => row.push(false),
                "1" => row.push(true),
                other => {
                    return Err(DasError::Parse {
                        line: lineno + 1,
                        msg: format!("expected 0 or 1, got {other:?}"),
                    })
                }
            }
        }
        rows.push(row);
    }
    let d = rows.len();
    let mut edges = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(DasError::DimensionMismatch(format!(
                "adjacency row {i} has {} entries, expected {d}",
                row.len()
            )));
        }
        for (j, &on) in row.iter().enumerate() {
            if on {
                edges.push((i, j));
            }
        }
    }
    Dag::from_edges(d, &edges)
}

pub fn write_adjacency_csv(dag: &Dag) -> String {
    let d = dag.d();
    let mut out = String::new();
    for i in 0..d {
        let row: Vec<&str> = (0..d)
            .map(|j| if dag.has_edge(i, j) { "1" } else { "0" })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parse a truth graph from either format: dense 0/1 CSV when the content
/// looks like a square matrix, otherwise an edge list.
pub fn parse_truth(text: &str, d: Option<usize>) -> Result<Dag> {
    let looks_like_matrix = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .map(|l| l.contains(','))
        .unwrap_or(false);
    if looks_like_matrix {
        let g = parse_adjacency_csv(text)?;
        if let Some(d) = d {
            if g.d() != d {
                return Err(DasError::DimensionMismatch(format!(
                    "truth has {} nodes, expected {d}",
                    g.d()
                )));
            }
        }
        Ok(g)
    } else {
        parse_edge_list(text, d)
    }
}

fn parse_dataset_delim(text: &str, delim: char) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(DasError::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let names: Vec<String> = header
        .split(delim)
        .map(|s| s.trim().to_string())
        .collect();
    let d = names.len();
    if d == 0 || names.iter().any(|n| n.is_empty()) {
        return Err(DasError::Parse {
            line: 1,
            msg: "malformed header".into(),
        });
    }
    let mut values = Vec::new();
    let mut n = 0usize;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(delim).collect();
        if fields.len() != d {
            return Err(DasError::Parse {
                line: lineno + 1,
                msg: format!("expected {d} fields, got {}", fields.len()),
            });
        }
        for (col, tok) in fields.iter().enumerate() {
            let v: f64 = tok.trim().parse().map_err(|_| DasError::Parse {
                line: lineno + 1,
                msg: format!("bad number {tok:?} in column {col}"),
            })?;
            if !v.is_finite() {
                return Err(DasError::NonFinite { row: n, col });
            }
            values.push(v);
        }
        n += 1;
    }
    Dataset::from_rows(values, n, d, names)
}

/// Observations CSV with a header row of column names.
pub fn parse_dataset_csv(text: &str) -> Result<Dataset> {
    parse_dataset_delim(text, ',')
}

/// Tab-separated export with a header row (SynTReN-style dumps).
pub fn parse_dataset_tsv(text: &str) -> Result<Dataset> {
    parse_dataset_delim(text, '\t')
}

pub fn write_dataset_csv(ds: &Dataset) -> String {
    let mut out = ds.names.join(",");
    out.push('\n');
    for i in 0..ds.n() {
        let row: Vec<String> = ds.row(i).iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestFormat {
    CsvHeader,
    SyntrenExport,
}

impl std::str::FromStr for IngestFormat {
    type Err = DasError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv-header" => Ok(IngestFormat::CsvHeader),
            "syntren-export" => Ok(IngestFormat::SyntrenExport),
            other => Err(DasError::InvalidParameter(format!(
                "unknown ingest format {other:?}"
            ))),
        }
    }
}

/// Load an external observations file plus ground-truth graph, validating
/// finiteness, dimension agreement and acyclicity.
pub fn ingest_external(
    data_text: &str,
    truth_text: &str,
    format: IngestFormat,
) -> Result<(Dataset, Dag)> {
    let ds = match format {
        IngestFormat::CsvHeader => parse_dataset_csv(data_text)?,
        IngestFormat::SyntrenExport => parse_dataset_tsv(data_text)?,
    };
    let truth = parse_truth(truth_text, Some(ds.d()))?;
    Ok((ds, truth))
}
