use std::fmt::Write;

use super::Graph;
use crate::scalar::Scalar;

/// Rendering options for [`to_dot`].
#[derive(Clone, Debug, Default)]
pub struct DotStyle<'a> {
    pub name: Option<&'a str>,
    /// Cluster index per node; nodes sharing a cluster share a fill color.
    pub cluster_of: Option<&'a [usize]>,
}

/// Hue spread by the golden ratio so neighbouring cluster ids get distant colors.
fn cluster_color(c: usize) -> String {
    let hue = (c as f64 * 0.618_033_988_749_895).fract();
    format!("{hue:.3} 0.45 0.95")
}

/// Renders a graph in the DOT language.
///
/// Reciprocal edge pairs are drawn once as an undirected line; one-way edges
/// get an arrow.
pub fn to_dot<T: Scalar>(graph: &Graph<T>, style: &DotStyle<'_>) -> String {
    let mut out = String::new();
    let name = style.name.unwrap_or("G");
    writeln!(out, "graph \"{name}\" {{").unwrap();
    writeln!(out, "  node [shape=circle];").unwrap();
    for i in 0..graph.num_nodes() {
        match style.cluster_of {
            Some(c) => writeln!(
                out,
                "  {i} [style=filled, fillcolor=\"{}\", label=\"{i}\\n{}\"];",
                cluster_color(c[i]),
                c[i]
            )
            .unwrap(),
            None => writeln!(out, "  {i};").unwrap(),
        }
    }
    let topo = graph.topology();
    for &(s, d) in graph.edges() {
        let reverse = topo.edge_index(d, s).is_some();
        if reverse && s > d {
            continue;
        }
        if reverse {
            writeln!(out, "  {s} -- {d};").unwrap();
        } else {
            writeln!(out, "  {s} -- {d} [dir=forward];").unwrap();
        }
    }
    out.push_str("}\n");
    out
}
