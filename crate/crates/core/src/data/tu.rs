//! TU benchmark collection format.
//!
//! `{name}_A.txt` holds 1-indexed `i, j` edge lines over the global node
//! numbering, `{name}_graph_indicator.txt` the 1-indexed graph of every node,
//! and `{name}_graph_labels.txt` one label per graph. Optional
//! `{name}_node_labels.txt` and `{name}_node_attributes.txt` supply node
//! features (attributes, then one-hot labels).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::GraphDataset;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

fn file(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

/// Non-empty lines with their 1-based line numbers.
fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    Ok(fs::read_to_string(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect())
}

fn parse_fields<V: std::str::FromStr>(path: &Path, line: usize, text: &str) -> Result<Vec<V>> {
    text.split(',')
        .map(|f| {
            f.trim().parse::<V>().map_err(|_| Error::Parse {
                file: path.to_path_buf(),
                line,
                msg: format!("not a number: {:?}", f.trim()),
            })
        })
        .collect()
}

fn parse_ints(path: &Path) -> Result<Vec<i64>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, text)| {
            let v: Vec<i64> = parse_fields(path, line, &text)?;
            match v.as_slice() {
                [x] => Ok(*x),
                _ => Err(Error::Parse { file: path.to_path_buf(), line, msg: "expected one integer".into() }),
            }
        })
        .collect()
}

/// Loads a TU dataset. Graph labels are remapped to `0..C` in sorted order of
/// the original values; edges are symmetrized and deduplicated. Self-loops
/// are dropped. Datasets without node labels or attributes get a constant
/// feature of 1.
pub fn load_tu<T: Scalar>(dir: &Path, name: &str) -> Result<GraphDataset<T>> {
    let a_path = file(dir, name, "A");
    let ind_path = file(dir, name, "graph_indicator");
    let lab_path = file(dir, name, "graph_labels");
    for p in [&a_path, &ind_path, &lab_path] {
        if !p.exists() {
            return Err(Error::MissingFile(p.clone()));
        }
    }

    let indicator = parse_ints(&ind_path)?;
    let raw_labels = parse_ints(&lab_path)?;
    let num_graphs = raw_labels.len();
    let num_nodes = indicator.len();
    let mut graph_of = Vec::with_capacity(num_nodes);
    for (k, &g) in indicator.iter().enumerate() {
        if g < 1 || g as usize > num_graphs {
            return Err(Error::Parse {
                file: ind_path.clone(),
                line: k + 1,
                msg: format!("graph id {g} outside 1..={num_graphs}"),
            });
        }
        graph_of.push(g as usize - 1);
    }
    let mut local = vec![0usize; num_nodes];
    let mut sizes = vec![0usize; num_graphs];
    for (v, &g) in graph_of.iter().enumerate() {
        local[v] = sizes[g];
        sizes[g] += 1;
    }

    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_graphs];
    for (line, text) in read_lines(&a_path)? {
        let v: Vec<i64> = parse_fields(&a_path, line, &text)?;
        let [i, j] = v.as_slice() else {
            return Err(Error::Parse { file: a_path, line, msg: "expected `i, j`".into() });
        };
        let bad = |x: i64| x < 1 || x as usize > num_nodes;
        if bad(*i) || bad(*j) {
            return Err(Error::Parse { file: a_path, line, msg: format!("node outside 1..={num_nodes}") });
        }
        let (i, j) = (*i as usize - 1, *j as usize - 1);
        if graph_of[i] != graph_of[j] {
            return Err(Error::Parse {
                file: a_path,
                line,
                msg: format!("edge joins graphs {} and {}", graph_of[i] + 1, graph_of[j] + 1),
            });
        }
        if i == j {
            continue;
        }
        let (li, lj) = (local[i], local[j]);
        edges[graph_of[i]].push((li, lj));
        edges[graph_of[i]].push((lj, li));
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); num_nodes];
    let attr_path = file(dir, name, "node_attributes");
    if attr_path.exists() {
        let lines = read_lines(&attr_path)?;
        if lines.len() != num_nodes {
            return Err(Error::dims(format!("{} attribute lines for {num_nodes} nodes", lines.len())));
        }
        let mut width = None;
        for (v, (line, text)) in lines.into_iter().enumerate() {
            let vals: Vec<f64> = parse_fields(&attr_path, line, &text)?;
            if *width.get_or_insert(vals.len()) != vals.len() {
                return Err(Error::Parse { file: attr_path, line, msg: "ragged attribute row".into() });
            }
            columns[v].extend(vals);
        }
    }
    let nl_path = file(dir, name, "node_labels");
    if nl_path.exists() {
        let labels = parse_ints(&nl_path)?;
        if labels.len() != num_nodes {
            return Err(Error::dims(format!("{} node labels for {num_nodes} nodes", labels.len())));
        }
        let distinct: BTreeMap<i64, usize> =
            labels.iter().copied().collect::<BTreeSet<_>>().into_iter().zip(0..).collect();
        for (v, l) in labels.iter().enumerate() {
            let mut onehot = vec![0.0; distinct.len()];
            onehot[distinct[l]] = 1.0;
            columns[v].extend(onehot);
        }
    }
    if !attr_path.exists() && !nl_path.exists() {
        columns.iter_mut().for_each(|c| c.push(1.0));
    }
    let width = columns.first().map_or(1, Vec::len);

    let mut node_rows: Vec<Vec<Vec<T>>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    for (v, row) in columns.into_iter().enumerate() {
        node_rows[graph_of[v]].push(row.into_iter().map(T::lit).collect());
    }

    let distinct: BTreeMap<i64, usize> =
        raw_labels.iter().copied().collect::<BTreeSet<_>>().into_iter().zip(0..).collect();
    let labels: Vec<usize> = raw_labels.iter().map(|l| distinct[l]).collect();

    let mut graphs = Vec::with_capacity(num_graphs);
    for (g, mut e) in edges.into_iter().enumerate() {
        e.sort_unstable();
        e.dedup();
        let feats = Matrix::from_rows(&node_rows[g], width)?;
        graphs.push(Graph::build(sizes[g], &e, feats, None)?);
    }
    GraphDataset::new(name, graphs, labels, distinct.len())
}

/// Writes a dataset in TU format. All node features go to
/// `{name}_node_attributes.txt`; labels are written as `0..C`.
pub fn write_tu<T: Scalar>(dataset: &GraphDataset<T>, dir: &Path, name: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (mut a, mut ind, mut labels, mut attrs) = (String::new(), String::new(), String::new(), String::new());
    let mut offset = 0;
    for (g, graph) in dataset.graphs.iter().enumerate() {
        for &(s, d) in graph.edges() {
            writeln!(a, "{}, {}", s + offset + 1, d + offset + 1).unwrap();
        }
        for v in 0..graph.num_nodes() {
            writeln!(ind, "{}", g + 1).unwrap();
            let row: Vec<String> = graph.node_features().row(v).iter().map(|x| x.acc().to_string()).collect();
            writeln!(attrs, "{}", row.join(", ")).unwrap();
        }
        writeln!(labels, "{}", dataset.labels[g]).unwrap();
        offset += graph.num_nodes();
    }
    fs::write(file(dir, name, "A"), a)?;
    fs::write(file(dir, name, "graph_indicator"), ind)?;
    fs::write(file(dir, name, "graph_labels"), labels)?;
    fs::write(file(dir, name, "node_attributes"), attrs)?;
    Ok(())
}
