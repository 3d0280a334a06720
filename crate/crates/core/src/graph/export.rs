use std::io::{BufRead, Write};
use std::path::Path;

use super::{CommunityAssignment, LayoutResult, SimilarityGraph};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphFormat {
    Graphml,
    Dot,
}

impl GraphFormat {
    pub fn extension(self) -> &'static str {
        match self {
            GraphFormat::Graphml => "graphml",
            GraphFormat::Dot => "dot",
        }
    }
}

fn check(
    graph: &SimilarityGraph,
    communities: Option<&CommunityAssignment>,
    layout: Option<&LayoutResult>,
) -> Result<()> {
    if communities.is_some_and(|c| c.community.len() != graph.num_nodes) {
        return Err(Error::invalid("community assignment does not match the graph"));
    }
    if layout.is_some_and(|l| l.positions.len() != graph.num_nodes) {
        return Err(Error::invalid("layout does not match the graph"));
    }
    Ok(())
}

pub fn write_graphml<W: Write>(
    graph: &SimilarityGraph,
    communities: Option<&CommunityAssignment>,
    layout: Option<&LayoutResult>,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        out,
        r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" xsi:schemaLocation="http://graphml.graphdrawing.org/xmlns http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd">"#
    )?;
    let mut keys = vec![("radius", "node", "int")];
    if graph.popularity_rank.is_some() {
        keys.push(("popularity_rank", "node", "int"));
    }
    if communities.is_some() {
        keys.push(("community", "node", "int"));
    }
    if layout.is_some() {
        keys.push(("x", "node", "double"));
        keys.push(("y", "node", "double"));
    }
    keys.push(("weight", "edge", "double"));
    for (id, domain, ty) in keys {
        writeln!(
            out,
            r#"  <key id="{id}" for="{domain}" attr.name="{id}" attr.type="{ty}"/>"#
        )?;
    }
    writeln!(out, r#"  <graph id="{}" edgedefault="undirected">"#, graph.side.name())?;
    for i in 0..graph.num_nodes {
        write!(out, r#"    <node id="n{i}"><data key="radius">{}</data>"#, graph.radius[i])?;
        if let Some(ranks) = &graph.popularity_rank {
            write!(out, r#"<data key="popularity_rank">{}</data>"#, ranks[i])?;
        }
        if let Some(c) = communities {
            write!(out, r#"<data key="community">{}</data>"#, c.community[i])?;
        }
        if let Some(l) = layout {
            let [x, y] = l.positions[i];
            write!(out, r#"<data key="x">{x}</data><data key="y">{y}</data>"#)?;
        }
        writeln!(out, "</node>")?;
    }
    for (e, &(a, b, w)) in graph.edges.iter().enumerate() {
        writeln!(
            out,
            r#"    <edge id="e{e}" source="n{a}" target="n{b}"><data key="weight">{w}</data></edge>"#
        )?;
    }
    writeln!(out, "  </graph>")?;
    writeln!(out, "</graphml>")
}

pub fn write_dot<W: Write>(
    graph: &SimilarityGraph,
    communities: Option<&CommunityAssignment>,
    layout: Option<&LayoutResult>,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "graph {} {{", graph.side.name())?;
    for i in 0..graph.num_nodes {
        let mut attrs = vec![format!("radius={}", graph.radius[i])];
        if let Some(ranks) = &graph.popularity_rank {
            attrs.push(format!("popularity_rank={}", ranks[i]));
        }
        if let Some(c) = communities {
            attrs.push(format!("community={}", c.community[i]));
        }
        if let Some(l) = layout {
            let [x, y] = l.positions[i];
            attrs.push(format!("pos=\"{x},{y}!\""));
        }
        writeln!(out, "  n{i} [{}];", attrs.join(", "))?;
    }
    for &(a, b, w) in &graph.edges {
        writeln!(out, "  n{a} -- n{b} [weight={w}];")?;
    }
    writeln!(out, "}}")
}

pub fn export_graph(
    graph: &SimilarityGraph,
    communities: Option<&CommunityAssignment>,
    layout: Option<&LayoutResult>,
    format: GraphFormat,
    path: &Path,
) -> Result<()> {
    check(graph, communities, layout)?;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    match format {
        GraphFormat::Graphml => write_graphml(graph, communities, layout, &mut out),
        GraphFormat::Dot => write_dot(graph, communities, layout, &mut out),
    }
    .and_then(|_| out.flush())
    .map_err(|e| Error::io(path, e))
}

/// One row per node: `node,x,y,community,radius`.
pub fn write_layout_csv<W: Write>(
    graph: &SimilarityGraph,
    communities: &CommunityAssignment,
    layout: &LayoutResult,
    mut out: W,
) -> std::io::Result<()> {
    out.write_all(b"node,x,y,community,radius\n")?;
    for i in 0..graph.num_nodes {
        let [x, y] = layout.positions[i];
        writeln!(out, "{i},{x},{y},{},{}", communities.community[i], graph.radius[i])?;
    }
    Ok(())
}

/// A layout CSV row: `(x, y, community, radius)`.
pub type LayoutRow = (f64, f64, usize, usize);

pub fn read_layout_csv<R: BufRead>(reader: R, context: &str) -> Result<Vec<LayoutRow>> {
    let mut rows = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(context, e))?;
        if n == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = (f.len() == 5).then(|| {
            Some((f[1].parse().ok()?, f[2].parse().ok()?, f[3].parse().ok()?, f[4].parse().ok()?))
        });
        match parsed.flatten() {
            Some(row) => rows.push(row),
            None => {
                return Err(Error::parse(
                    context,
                    format!("line {}: expected node,x,y,community,radius", n + 1),
                ))
            }
        }
    }
    Ok(rows)
}
