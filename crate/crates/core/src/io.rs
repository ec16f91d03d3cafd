//! Graph files and `kind:args` graph descriptions.
//!
//! Edge lists hold one `u v w` edge per line (weight optional, default 1),
//! whitespace separated, with `#` comments. A `# nodes: N` comment fixes the
//! node count so that trailing isolated nodes survive a round trip. The JSON
//! form is `{"n": N, "edges": [[u, v, w], ...]}`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::{Error, Result};
use crate::graph::{cycle, path, perfect_tree, Graph};
use crate::scalar::Scalar;

fn parse_error(position: impl Into<String>, message: impl Into<String>) -> Error {
    Error::ParseError {
        position: position.into(),
        message: message.into(),
    }
}

pub fn parse_edge_list<T: Scalar>(text: &str) -> Result<Graph<T>> {
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let at = |col: usize| format!("line {}, column {}", lineno + 1, col + 1);
        let (body, comment) = match raw.find('#') {
            Some(i) => (&raw[..i], Some((i, &raw[i + 1..]))),
            None => (raw, None),
        };
        if let Some((col, c)) = comment {
            if let Some(rest) = c.trim().strip_prefix("nodes:") {
                let n = rest
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| parse_error(at(col), "bad node count directive"))?;
                declared = Some(n);
            }
        }
        let tokens: Vec<(usize, &str)> = body
            .split_whitespace()
            .map(|t| (t.as_ptr() as usize - body.as_ptr() as usize, t))
            .collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() > 3 || tokens.len() < 2 {
            return Err(parse_error(at(tokens[0].0), "expected `u v [w]`"));
        }
        let id = |(col, t): (usize, &str)| {
            t.parse::<usize>()
                .map_err(|_| parse_error(at(col), format!("bad node id `{t}`")))
        };
        let u = id(tokens[0])?;
        let v = id(tokens[1])?;
        let w = match tokens.get(2) {
            Some(&(col, t)) => T::parse_literal(t)
                .ok_or_else(|| parse_error(at(col), format!("bad weight `{t}`")))?,
            None => T::one(),
        };
        edges.push((u, v, w));
    }
    match declared {
        Some(n) => Graph::with_nodes(n, edges),
        None => Graph::from_edges(edges),
    }
}

/// Edge-list text that [`parse_edge_list`] reads back to an equal graph.
pub fn write_edge_list<T: Scalar>(g: &Graph<T>) -> String {
    let mut out = format!("# nodes: {}\n", g.node_count());
    for e in g.edges() {
        let _ = writeln!(out, "{} {} {}", e.u, e.v, e.weight);
    }
    out
}

pub fn parse_json_graph<T: Scalar>(text: &str) -> Result<Graph<T>> {
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        parse_error(
            format!("line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let n = doc
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| parse_error("n", "missing or non-integer `n`"))?;
    let list = doc
        .get("edges")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_error("edges", "missing `edges` array"))?;
    let mut edges = Vec::with_capacity(list.len());
    for (i, item) in list.iter().enumerate() {
        let at = format!("edges[{i}]");
        let triple = item
            .as_array()
            .filter(|a| a.len() == 3 || a.len() == 2)
            .ok_or_else(|| parse_error(&at, "expected [u, v, w]"))?;
        let id = |x: &Value| {
            x.as_u64()
                .map(|v| v as usize)
                .ok_or_else(|| parse_error(&at, "node ids must be nonnegative integers"))
        };
        let w = match triple.get(2) {
            Some(Value::Number(num)) => T::parse_literal(&num.to_string())
                .ok_or_else(|| parse_error(&at, format!("bad weight {num}")))?,
            Some(Value::String(s)) => {
                T::parse_literal(s).ok_or_else(|| parse_error(&at, format!("bad weight `{s}`")))?
            }
            Some(_) => return Err(parse_error(&at, "weight must be a number")),
            None => T::one(),
        };
        edges.push((id(&triple[0])?, id(&triple[1])?, w));
    }
    Graph::with_nodes(n as usize, edges)
}

pub fn write_json_graph<T: Scalar>(g: &Graph<T>) -> Value {
    let edges: Vec<Value> = g
        .edges()
        .iter()
        .map(|e| serde_json::json!([e.u.0, e.v.0, e.weight.to_f64()]))
        .collect();
    serde_json::json!({ "n": g.node_count(), "edges": edges })
}

/// Reads an edge list or, for `.json` files and documents starting with
/// `{`, the JSON form.
pub fn read_graph_file<T: Scalar>(path: &Path) -> Result<Graph<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        },
    })?;
    let is_json =
        path.extension().is_some_and(|x| x == "json") || text.trim_start().starts_with('{');
    let parsed = if is_json {
        parse_json_graph(&text)
    } else {
        parse_edge_list(&text)
    };
    parsed.map_err(|e| match e {
        Error::ParseError { position, message } => Error::ParseError {
            position: format!("{}: {position}", path.display()),
            message,
        },
        other => other,
    })
}

/// `cycle:n`, `path:n`, `tree:M:h` or `file:PATH`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphSpec {
    Cycle(usize),
    Path(usize),
    Tree { arity: usize, height: u32 },
    File(PathBuf),
}

impl GraphSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| parse_error("column 1", format!("expected `kind:...`, got `{spec}`")))?;
        let offset = kind.len() + 1;
        let number = |s: &str, col: usize| {
            s.parse::<usize>().map_err(|_| {
                parse_error(
                    format!("column {}", col + 1),
                    format!("expected an integer, got `{s}`"),
                )
            })
        };
        match kind {
            "cycle" => Ok(GraphSpec::Cycle(number(rest, offset)?)),
            "path" => Ok(GraphSpec::Path(number(rest, offset)?)),
            "tree" => {
                let (m, h) = rest.split_once(':').ok_or_else(|| {
                    parse_error(format!("column {}", offset + 1), "expected `tree:M:h`")
                })?;
                let arity = number(m, offset)?;
                let height = number(h, offset + m.len() + 1)?;
                let height = u32::try_from(height).map_err(|_| {
                    parse_error(
                        format!("column {}", offset + m.len() + 2),
                        "height too large",
                    )
                })?;
                Ok(GraphSpec::Tree { arity, height })
            }
            "file" if !rest.is_empty() => Ok(GraphSpec::File(PathBuf::from(rest))),
            "file" => Err(parse_error(
                format!("column {}", offset + 1),
                "missing path",
            )),
            other => Err(parse_error(
                "column 1",
                format!("unknown graph kind `{other}` (use cycle, path, tree or file)"),
            )),
        }
    }

    pub fn build<T: Scalar>(&self) -> Result<Graph<T>> {
        match self {
            GraphSpec::Cycle(n) => cycle(*n),
            GraphSpec::Path(n) => path(*n),
            GraphSpec::Tree { arity, height } => Ok(perfect_tree(*arity, *height)?.graph),
            GraphSpec::File(p) => read_graph_file(p),
        }
    }
}

pub fn parse_graph_spec<T: Scalar>(spec: &str) -> Result<Graph<T>> {
    GraphSpec::parse(spec)?.build()
}
