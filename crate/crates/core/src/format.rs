//! Line-oriented text formats.
//!
//! ```text
//! metric-space v1 <N>      N rows of N distances, then optional `# label <i> <text>`
//! graph v1 <N> <E>         E lines `i j w`
//! metric-map v1 <N>        N target indices
//! potential v1 <N>         N values
//! measure v1 <N>           N weights
//! ```
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! write followed by a read reproduces every value bit for bit.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::hopf_lax::Potential;
use crate::kantorovich::Measure;
use crate::maps::MetricMap;
use crate::metric::{FiniteMetricSpace, GraphSpec, SpaceRef};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate(),
        }
    }

    /// Next non-blank line that is not a comment, with its 1-based number.
    fn next_data(&mut self) -> Option<(usize, &'a str)> {
        for (k, l) in self.inner.by_ref() {
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Some((k + 1, t));
            }
        }
        None
    }

    fn expect_data(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next_data().ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("unexpected end of input, expected {what}"),
        })
    }
}

fn parse_num<T: FromStr>(line: usize, tok: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {tok:?}"),
    })
}

fn header<'a>(lines: &mut Lines<'a>, magic: &str, counts: usize) -> Result<Vec<usize>> {
    let (ln, h) = lines.expect_data("a header")?;
    let toks: Vec<&str> = h.split_whitespace().collect();
    if toks.len() != 2 + counts || toks[0] != magic || toks[1] != "v1" {
        return Err(Error::Parse {
            line: ln,
            msg: format!("expected header `{magic} v1` with {counts} count(s), found {h:?}"),
        });
    }
    toks[2..].iter().map(|t| parse_num(ln, t)).collect()
}

fn values(lines: &mut Lines<'_>, n: usize, what: &str) -> Result<Vec<f64>> {
    (0..n)
        .map(|_| {
            let (ln, l) = lines.expect_data(what)?;
            parse_num(ln, l)
        })
        .collect()
}

fn trailing(lines: &mut Lines<'_>) -> Result<()> {
    match lines.next_data() {
        None => Ok(()),
        Some((ln, l)) => Err(Error::Parse {
            line: ln,
            msg: format!("unexpected trailing data {l:?}"),
        }),
    }
}

pub fn write_space(space: &FiniteMetricSpace) -> String {
    let n = space.len();
    let mut out = format!("metric-space v1 {n}\n");
    for i in 0..n {
        let row: Vec<String> = space.row(i).iter().map(|d| d.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    if let Some(labels) = space.labels() {
        for (i, l) in labels.iter().enumerate() {
            let _ = writeln!(out, "# label {i} {l}");
        }
    }
    out
}

/// Parses a space file and validates it at `tol_metric`.
pub fn read_space(text: &str, tol_metric: f64) -> Result<FiniteMetricSpace> {
    let mut lines = Lines::new(text);
    let n = header(&mut lines, "metric-space", 1)?[0];
    if n == 0 {
        return Err(Error::Malformed("space with zero points".into()));
    }
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, l) = lines.expect_data("a distance row")?;
        let row: Vec<f64> = l
            .split_whitespace()
            .map(|t| parse_num(ln, t))
            .collect::<Result<_>>()?;
        if row.len() != n {
            return Err(Error::Malformed(format!(
                "line {ln}: {} distances, expected {n}",
                row.len()
            )));
        }
        rows.push(row);
    }
    trailing(&mut lines)?;
    let space = FiniteMetricSpace::from_matrix(&rows, tol_metric)?;

    let mut labels: Vec<Option<String>> = vec![None; n];
    let mut any = false;
    for (k, l) in text.lines().enumerate() {
        if let Some(rest) = l.trim().strip_prefix("# label ") {
            let (idx, name) = rest.split_once(' ').unwrap_or((rest, ""));
            let i: usize = parse_num(k + 1, idx)?;
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, len: n });
            }
            labels[i] = Some(name.to_string());
            any = true;
        }
    }
    if any {
        let labels = labels.into_iter().map(Option::unwrap_or_default).collect();
        space.with_labels(labels)
    } else {
        Ok(space)
    }
}

pub fn write_graph(g: &GraphSpec) -> String {
    let mut out = format!("graph v1 {} {}\n", g.n_vertices, g.edges.len());
    for &(i, j, w) in &g.edges {
        let _ = writeln!(out, "{i} {j} {w}");
    }
    out
}

pub fn read_graph(text: &str) -> Result<GraphSpec> {
    let mut lines = Lines::new(text);
    let h = header(&mut lines, "graph", 2)?;
    let (n, e) = (h[0], h[1]);
    let mut edges = Vec::with_capacity(e);
    for _ in 0..e {
        let (ln, l) = lines.expect_data("an edge")?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::Parse {
                line: ln,
                msg: format!("edge line needs `i j w`, found {l:?}"),
            });
        }
        edges.push((parse_num(ln, toks[0])?, parse_num(ln, toks[1])?, parse_num(ln, toks[2])?));
    }
    trailing(&mut lines)?;
    GraphSpec::new(n, edges)
}

pub fn write_map(f: &MetricMap) -> String {
    let mut out = format!("metric-map v1 {}\n", f.assign().len());
    for j in f.assign() {
        let _ = writeln!(out, "{j}");
    }
    out
}

pub fn read_map(text: &str, source: SpaceRef, target: SpaceRef) -> Result<MetricMap> {
    let mut lines = Lines::new(text);
    let n = header(&mut lines, "metric-map", 1)?[0];
    let assign = (0..n)
        .map(|_| {
            let (ln, l) = lines.expect_data("a target index")?;
            parse_num(ln, l)
        })
        .collect::<Result<Vec<usize>>>()?;
    trailing(&mut lines)?;
    MetricMap::new(source, target, assign)
}

fn write_vector(magic: &str, v: &[f64]) -> String {
    let mut out = format!("{magic} v1 {}\n", v.len());
    for x in v {
        let _ = writeln!(out, "{x}");
    }
    out
}

pub fn write_potential(p: &Potential) -> String {
    write_vector("potential", p.values())
}

pub fn read_potential(text: &str, space: SpaceRef) -> Result<Potential> {
    let mut lines = Lines::new(text);
    let n = header(&mut lines, "potential", 1)?[0];
    let v = values(&mut lines, n, "a value")?;
    trailing(&mut lines)?;
    Potential::new(space, v)
}

pub fn write_measure(m: &Measure) -> String {
    write_vector("measure", m.weights())
}

pub fn read_measure(text: &str, space: SpaceRef) -> Result<Measure> {
    let mut lines = Lines::new(text);
    let n = header(&mut lines, "measure", 1)?[0];
    let v = values(&mut lines, n, "a weight")?;
    trailing(&mut lines)?;
    Measure::new(space, v)
}
