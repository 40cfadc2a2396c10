use std::fmt::Write as _;

use super::{Graph, GraphError, Result};

/// Parses the plain-text format: a header line `n m` followed by `m` lines `u v`.
/// Blank lines and lines starting with `#` are ignored.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| GraphError::Parse("missing header".into()))?;
    let (n, m) = parse_pair(header).map_err(|e| GraphError::Parse(format!("header: {e}")))?;
    let mut edges = Vec::with_capacity(m);
    for (lineno, line) in lines {
        let pair = parse_pair(line).map_err(|e| GraphError::Parse(format!("line {}: {e}", lineno + 1)))?;
        edges.push(pair);
    }
    if edges.len() != m {
        return Err(GraphError::Parse(format!("header declares {m} edges, found {}", edges.len())));
    }
    Graph::new(n, &edges)
}

fn parse_pair(line: &str) -> std::result::Result<(usize, usize), String> {
    let mut it = line.split_whitespace();
    let mut next = || -> std::result::Result<usize, String> {
        let tok = it.next().ok_or("expected two integers")?;
        tok.parse::<usize>().map_err(|_| format!("not a vertex index: {tok:?}"))
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err("trailing tokens".into());
    }
    Ok((a, b))
}

/// Serializes in the format read by [`parse_graph`].
pub fn write_graph(g: &Graph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", g.vertex_count(), g.edge_count());
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let g = parse_graph("4 4\n0 1\n1 2\n2 3\n3 0\n").unwrap();
        assert_eq!(g.vertex_count(), 4);
        let again = parse_graph(&write_graph(&g)).unwrap();
        assert_eq!(again.edges(), g.edges());
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(parse_graph(""), Err(GraphError::Parse(_))));
        assert!(matches!(parse_graph("3 2\n0 1\n"), Err(GraphError::Parse(_))));
        assert!(matches!(parse_graph("3 2\n0 1\n1 x\n"), Err(GraphError::Parse(_))));
        assert!(matches!(parse_graph("3 1\n0 1\n"), Err(GraphError::Disconnected(2))));
        assert!(matches!(parse_graph("2 1\n0 5\n"), Err(GraphError::InvalidVertex { .. })));
    }

    #[test]
    fn single_vertex() {
        let g = parse_graph("1 0\n").unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }
}
