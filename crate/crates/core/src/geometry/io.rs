//! Line-oriented text format for rate graphs.
//!
//! ```text
//! n L gamma topology R_c seed
//! # points <count>
//! id x1 ... xn
//! # edges <count>
//! src dst rate
//! ```
//!
//! Section markers are `#` lines, so both point and edge rows stay
//! unambiguous when `n = 2`. An optional `# palm <id>` line restores the
//! Palm flag; a `# percolation <kind>` line is informational. Numbers are
//! written in shortest round-trip form, so `f64` values survive exactly.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::cloud::{PointCloud, Topology};
use crate::geometry::graph::RateGraph;
use crate::scalar::Scalar;

/// Serializes the graph (and its cloud) to the text format.
pub fn write_graph<T: Scalar, W: Write>(graph: &RateGraph<T>, mut out: W) -> std::io::Result<()> {
    let cloud = graph.cloud();
    writeln!(
        out,
        "{} {} {} {} {} {}",
        cloud.dim(),
        cloud.side(),
        cloud.intensity(),
        cloud.topology().as_str(),
        graph.cutoff(),
        cloud.seed()
    )?;
    if let Some(p) = cloud.palm_index() {
        writeln!(out, "# palm {p}")?;
    }
    writeln!(out, "# percolation {}", graph.percolation().name())?;
    writeln!(out, "# points {}", cloud.len())?;
    let mut line = String::new();
    for i in 0..cloud.len() {
        line.clear();
        write!(line, "{i}").unwrap();
        for x in cloud.point(i) {
            write!(line, " {x}").unwrap();
        }
        writeln!(out, "{line}")?;
    }
    writeln!(out, "# edges {}", graph.edge_count())?;
    for x in 0..graph.len() {
        for e in graph.edges(x) {
            writeln!(out, "{x} {} {}", e.target, e.rate)?;
        }
    }
    Ok(())
}

pub fn save_graph<T: Scalar>(graph: &RateGraph<T>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_graph(graph, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_graph<T: Scalar>(path: &Path) -> Result<RateGraph<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_graph(std::io::BufReader::new(file))
}

#[derive(PartialEq)]
enum Section {
    Header,
    Points,
    Edges,
}

/// Parses the text format; rates are taken from the file, totals and samplers rebuilt.
pub fn read_graph<T: Scalar, R: BufRead>(input: R) -> Result<RateGraph<T>> {
    let mut section = Section::Header;
    let mut header: Option<(usize, T, T, Topology, T, u64)> = None;
    let mut palm = None;
    let mut coords = Vec::new();
    let mut next_id = 0usize;
    let mut edges = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            match it.next() {
                Some("points") => section = Section::Points,
                Some("edges") => section = Section::Edges,
                Some("palm") => palm = Some(num::<usize>(it.next(), lineno, "palm index")?),
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::Header => {
                if header.is_some() {
                    return Err(parse_err(lineno, "data line before `# points` marker"));
                }
                if fields.len() != 6 {
                    return Err(parse_err(lineno, "header needs `n L gamma topology R_c seed`"));
                }
                let topo: Topology = fields[3].parse().map_err(|e: Error| parse_err(lineno, e.to_string()))?;
                header = Some((
                    num(Some(fields[0]), lineno, "n")?,
                    real(fields[1], lineno)?,
                    real(fields[2], lineno)?,
                    topo,
                    real(fields[4], lineno)?,
                    num(Some(fields[5]), lineno, "seed")?,
                ));
            }
            Section::Points => {
                let dim = header.as_ref().ok_or_else(|| parse_err(lineno, "missing header"))?.0;
                if fields.len() != dim + 1 {
                    return Err(parse_err(lineno, format!("point row needs id and {dim} coordinates")));
                }
                let id: usize = num(Some(fields[0]), lineno, "point id")?;
                if id != next_id {
                    return Err(parse_err(lineno, format!("expected point id {next_id}, found {id}")));
                }
                next_id += 1;
                for f in &fields[1..] {
                    coords.push(real::<T>(f, lineno)?);
                }
            }
            Section::Edges => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "edge row needs `src dst rate`"));
                }
                edges.push((
                    num(Some(fields[0]), lineno, "src")?,
                    num(Some(fields[1]), lineno, "dst")?,
                    real::<T>(fields[2], lineno)?,
                ));
            }
        }
    }
    let (dim, side, gamma, topo, cutoff, seed) = header.ok_or_else(|| parse_err(1, "empty graph file"))?;
    let cloud = PointCloud::from_coords(dim, side, gamma, topo, coords)?.with_provenance(seed, palm)?;
    RateGraph::from_edges(cloud, cutoff, edges)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn num<N: std::str::FromStr>(field: Option<&str>, line: usize, what: &str) -> Result<N> {
    field
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| parse_err(line, format!("bad or missing {what}")))
}

fn real<T: Scalar>(field: &str, line: usize) -> Result<T> {
    field
        .parse::<f64>()
        .map(T::of)
        .map_err(|_| parse_err(line, format!("`{field}` is not a number")))
}
