//! Text formats: expression and design matrices, edge lists and flat
//! `key = value` configuration files. Parsers take the file contents and a
//! source name used in error messages.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, PriorGraph, ReciprocalGraph};
use crate::model::data::ExpressionDataset;
use crate::model::matrix::RowMatrix;

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Invalid(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-empty lines that are not `#` comments, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn parse_value(raw: &str, source: &str, line: usize) -> Result<f64> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| Error::parse(source, line, format!("`{raw}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(source, line, format!("`{raw}` is missing or not finite")));
    }
    Ok(v)
}

/// The expression matrix as parsed from its TSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionTable {
    pub gene_ids: Vec<String>,
    pub sample_ids: Vec<String>,
    pub values: RowMatrix,
}

/// Parses `gene_id<TAB>sample...` followed by one row per gene.
pub fn parse_expression(text: &str, source: &str) -> Result<ExpressionTable> {
    let mut lines = content_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(source, 1, "empty expression file"))?;
    let mut cols = header.split('\t');
    cols.next();
    let sample_ids: Vec<String> = cols.map(|s| s.trim().to_string()).collect();
    if sample_ids.is_empty() {
        return Err(Error::parse(source, hline, "header names no samples"));
    }
    check_unique(&sample_ids, "sample", source, hline)?;
    let mut gene_ids = Vec::new();
    let mut data = Vec::new();
    let mut seen = HashMap::new();
    for (line, row) in lines {
        let fields: Vec<&str> = row.split('\t').collect();
        if fields.len() != sample_ids.len() + 1 {
            return Err(Error::parse(
                source,
                line,
                format!("expected {} columns, found {}", sample_ids.len() + 1, fields.len()),
            ));
        }
        let id = fields[0].trim().to_string();
        if id.is_empty() {
            return Err(Error::parse(source, line, "empty gene id"));
        }
        if seen.insert(id.clone(), line).is_some() {
            return Err(Error::parse(source, line, format!("duplicate gene id `{id}`")));
        }
        for raw in &fields[1..] {
            data.push(parse_value(raw, source, line)?);
        }
        gene_ids.push(id);
    }
    if gene_ids.is_empty() {
        return Err(Error::parse(source, hline, "no gene rows"));
    }
    let values = RowMatrix::from_vec(gene_ids.len(), sample_ids.len(), data);
    Ok(ExpressionTable {
        gene_ids,
        sample_ids,
        values,
    })
}

fn check_unique(ids: &[String], what: &str, source: &str, line: usize) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for id in ids {
        if id.is_empty() {
            return Err(Error::parse(source, line, format!("empty {what} id")));
        }
        if !seen.insert(id) {
            return Err(Error::parse(source, line, format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(())
}

/// Design matrix as parsed from its TSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignTable {
    pub sample_ids: Vec<String>,
    pub covariate_names: Vec<String>,
    /// `n x d`, rows in file order.
    pub values: RowMatrix,
}

/// Parses a header `sample_id<TAB>covariate...` and one row per sample.
/// The first covariate must be an intercept column of ones.
pub fn parse_design(text: &str, source: &str) -> Result<DesignTable> {
    let mut lines = content_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(source, 1, "empty design file"))?;
    let mut cols = header.split('\t');
    cols.next();
    let covariate_names: Vec<String> = cols.map(|s| s.trim().to_string()).collect();
    if covariate_names.is_empty() {
        return Err(Error::parse(source, hline, "design has no covariate columns"));
    }
    let d = covariate_names.len();
    let mut sample_ids = Vec::new();
    let mut data = Vec::new();
    for (line, row) in lines {
        let fields: Vec<&str> = row.split('\t').collect();
        if fields.len() != d + 1 {
            return Err(Error::parse(
                source,
                line,
                format!("expected {} columns, found {}", d + 1, fields.len()),
            ));
        }
        let first = parse_value(fields[1], source, line)?;
        if first != 1.0 {
            return Err(Error::parse(source, line, "first covariate must be an intercept of 1"));
        }
        data.push(first);
        for raw in &fields[2..] {
            data.push(parse_value(raw, source, line)?);
        }
        sample_ids.push(fields[0].trim().to_string());
    }
    if sample_ids.is_empty() {
        return Err(Error::parse(source, hline, "no sample rows"));
    }
    check_unique(&sample_ids, "sample", source, hline)?;
    Ok(DesignTable {
        values: RowMatrix::from_vec(sample_ids.len(), d, data),
        sample_ids,
        covariate_names,
    })
}

/// Combines an expression table with a design table, matching samples by
/// id and ordering design rows like the expression columns.
pub fn assemble_dataset(expr: ExpressionTable, design: &DesignTable) -> Result<ExpressionDataset> {
    let index: HashMap<&str, usize> = design
        .sample_ids
        .iter()
        .enumerate()
        .map(|(k, s)| (s.as_str(), k))
        .collect();
    if design.sample_ids.len() != expr.sample_ids.len() {
        return Err(Error::Dimension(format!(
            "design has {} samples but the expression matrix has {}",
            design.sample_ids.len(),
            expr.sample_ids.len()
        )));
    }
    let d = design.values.cols();
    let mut x = RowMatrix::zeros(expr.sample_ids.len(), d);
    for (j, id) in expr.sample_ids.iter().enumerate() {
        let k = *index
            .get(id.as_str())
            .ok_or_else(|| Error::Dimension(format!("sample `{id}` has no design row")))?;
        x.row_mut(j).copy_from_slice(design.values.row(k));
    }
    ExpressionDataset::new(expr.values, x, expr.gene_ids, expr.sample_ids)
}

/// Parses `src<TAB>dst` lines, resolving names against `gene_ids`. Edge
/// indices follow line order.
pub fn parse_edge_list(text: &str, source: &str, gene_ids: &[String]) -> Result<PriorGraph> {
    let index: HashMap<&str, usize> = gene_ids.iter().enumerate().map(|(k, g)| (g.as_str(), k)).collect();
    let mut graph = ReciprocalGraph::empty(gene_ids.len());
    for (line, row) in content_lines(text) {
        let fields: Vec<&str> = row.split('\t').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::parse(source, line, "expected `src<TAB>dst`"));
        }
        let resolve = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::parse(source, line, format!("unknown gene `{name}`")))
        };
        let e = DirectedEdge::new(resolve(fields[0])?, resolve(fields[1])?);
        if e.src == e.dst {
            return Err(Error::parse(source, line, format!("self-loop on `{}`", fields[0])));
        }
        if !graph
            .insert(e)
            .map_err(|err| Error::parse(source, line, err.to_string()))?
        {
            return Err(Error::parse(
                source,
                line,
                format!("duplicate edge {} -> {}", fields[0], fields[1]),
            ));
        }
    }
    Ok(PriorGraph::new(graph))
}

pub fn format_expression(data: &ExpressionDataset) -> String {
    let mut out = String::from("gene_id");
    for s in data.sample_ids() {
        out.push('\t');
        out.push_str(s);
    }
    out.push('\n');
    for (i, g) in data.gene_ids().iter().enumerate() {
        out.push_str(g);
        for v in data.y().row(i) {
            out.push_str(&format!("\t{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn format_design(data: &ExpressionDataset, covariate_names: &[String]) -> String {
    let mut out = String::from("sample_id");
    for c in covariate_names {
        out.push('\t');
        out.push_str(c);
    }
    out.push('\n');
    for (j, s) in data.sample_ids().iter().enumerate() {
        out.push_str(s);
        for v in data.design().row(j) {
            out.push_str(&format!("\t{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn format_edge_list<'a>(edges: impl IntoIterator<Item = &'a DirectedEdge>, gene_ids: &[String]) -> String {
    let mut out = String::new();
    for e in edges {
        out.push_str(&format!("{}\t{}\n", gene_ids[e.src.0], gene_ids[e.dst.0]));
    }
    out
}

/// Parses flat `key = value` lines; `#` starts a comment. Keys are
/// lower-cased with `-` normalized to `_`; a repeated key is an error.
pub fn parse_config(text: &str, source: &str) -> Result<IndexMap<String, String>> {
    let mut out = IndexMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::parse(source, line, "expected `key = value`"))?;
        let key = normalize_key(key);
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::parse(source, line, format!("invalid key `{}`", key)));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::parse(source, line, format!("duplicate key `{key}`")));
        }
    }
    Ok(out)
}

pub fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

pub fn format_config(entries: &IndexMap<String, String>) -> String {
    entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expression_roundtrip_and_errors() {
        let text = "gene_id\ts1\ts2\n# comment\ng1\t1.5\t-2\ng2\t0\t3e-1\n";
        let t = parse_expression(text, "expr").unwrap();
        assert_eq!(t.gene_ids, ["g1", "g2"]);
        assert_eq!(t.values[(1, 1)], 0.3);
        let err = parse_expression("gene_id\ts1\ng1\tNA\n", "expr").unwrap_err();
        assert!(err.to_string().starts_with("expr:2:"), "{err}");
        let err = parse_expression("gene_id\ts1\ts2\ng1\t1\n", "expr").unwrap_err();
        assert!(err.to_string().contains("expected 3 columns"));
        assert!(parse_expression("gene_id\ts1\ng1\t1\ng1\t2\n", "e").is_err());
    }

    #[test]
    fn design_requires_intercept_and_matches_by_id() {
        let expr = parse_expression("gene_id\ta\tb\ng\t1\t2\n", "e").unwrap();
        let design = parse_design("sample_id\tintercept\tgroup\nb\t1\t1\na\t1\t0\n", "d").unwrap();
        let data = assemble_dataset(expr, &design).unwrap();
        assert_eq!(data.design().row(0), &[1.0, 0.0]);
        assert_eq!(data.design().row(1), &[1.0, 1.0]);
        let err = parse_design("sample_id\tg\na\t0\n", "d").unwrap_err();
        assert!(err.to_string().contains("intercept"));
    }

    #[test]
    fn edge_list_resolves_names_in_line_order() {
        let genes: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let g = parse_edge_list("# pathway\nz\tx\nx\ty\n", "edges", &genes).unwrap();
        assert_eq!(g.edge(0), DirectedEdge::new(2, 0));
        assert_eq!(g.edge(1), DirectedEdge::new(0, 1));
        assert!(parse_edge_list("x\tq\n", "edges", &genes).is_err());
        assert!(parse_edge_list("x\tx\n", "edges", &genes).is_err());
        let err = parse_edge_list("x\ty\nx\ty\n", "edges", &genes).unwrap_err();
        assert!(err.to_string().starts_with("edges:2:"));
        let text = format_edge_list(g.edges(), &genes);
        assert_eq!(parse_edge_list(&text, "again", &genes).unwrap(), g);
    }

    #[test]
    fn config_lines() {
        let c = parse_config("# run\nn-iter = 10  # short\nseed=3\n", "cfg").unwrap();
        assert_eq!(c["n_iter"], "10");
        assert_eq!(c["seed"], "3");
        assert!(parse_config("seed = 1\nseed = 2\n", "cfg").is_err());
        assert!(parse_config("just words\n", "cfg").is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
