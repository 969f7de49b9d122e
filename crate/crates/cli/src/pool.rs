use std::fs;
use std::path::{Path, PathBuf};

use edgepool::data::load_tu;
use edgepool::pool::{pool_hierarchy, HierarchyLevel, PoolParamsFile};
use edgepool::rng::{derive_indexed, rng_from};
use edgepool::{to_dot, DotStyle, ForwardOptions, Graph64, GraphRecord, PoolParams};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::manifest::{write_json, DatasetIdentity, RunManifest};

#[derive(clap::Args, Debug, Serialize)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "tu"]))]
pub struct Args {
    /// Graph JSON file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// TU dataset directory and name.
    #[arg(long, num_args = 2, value_names = ["DIR", "NAME"])]
    pub tu: Option<Vec<String>>,
    /// Graph index within the TU dataset.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long, default_value_t = 1)]
    pub levels: usize,
    /// Score parameters: one `{weight, bias}` object, or a list with one per level.
    #[arg(long, conflicts_with = "random_seed")]
    pub params: Option<PathBuf>,
    /// Draw score parameters at random from this seed (the default, with seed 0).
    #[arg(long, alias = "seed")]
    pub random_seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Hierarchy {
    original: GraphRecord,
    levels: Vec<HierarchyLevel>,
}

fn load(args: &Args) -> CliResult<(Graph64, DatasetIdentity)> {
    if let Some(path) = &args.input {
        let graph = GraphRecord::read(path)?.to_graph()?;
        let id = DatasetIdentity::from_files("json", &path.display().to_string(), path, std::slice::from_ref(path))?;
        return Ok((graph, id));
    }
    let (dir, name) = crate::tu_pair(&args.tu).expect("clap requires a source");
    let ds = load_tu::<f64>(&dir, &name)?;
    let graph = ds.graphs.get(args.index).cloned().ok_or_else(|| {
        CliError::Input(format!("graph index {} out of range ({} graphs)", args.index, ds.len()))
    })?;
    let id = DatasetIdentity::from_files("tu", &name, &dir, &tu_files(&dir, &name)?)?
        .with_summary(serde_json::json!({ "index": args.index, "num_graphs": ds.len() }));
    Ok((graph, id))
}

/// Files belonging to TU dataset `name` inside `dir`.
pub fn tu_files(dir: &Path, name: &str) -> CliResult<Vec<PathBuf>> {
    let prefix = format!("{name}_");
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let fname = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        if fname.starts_with(&prefix) && fname.ends_with(".txt") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn run(args: &Args) -> CliResult<()> {
    let seed = args.random_seed.unwrap_or(0);
    let mut manifest = RunManifest::start("pool", seed, serde_json::to_value(args)?);
    let (graph, id) = load(args)?;
    manifest.dataset = Some(id);
    let file = args.params.as_deref().map(PoolParamsFile::read).transpose()?;
    let (f, ew) = (graph.feature_width(), graph.edge_feature_width());
    let levels = pool_hierarchy(
        &graph,
        args.levels,
        |level| match &file {
            Some(file) => file.for_level(level, f, ew),
            None => Ok(PoolParams::random(f, ew, &mut rng_from(derive_indexed(seed, "pool_params", level as u64)))),
        },
        &ForwardOptions::default(),
    )?;

    fs::create_dir_all(&args.out)?;
    let hierarchy = Hierarchy {
        original: GraphRecord::from_graph(&graph),
        levels: levels.iter().map(|(g, info)| HierarchyLevel::new(info, g)).collect(),
    };
    let hpath = args.out.join("hierarchy.json");
    write_json(&hpath, &hierarchy)?;
    manifest.output(&hpath);

    let graphs: Vec<&Graph64> = std::iter::once(&graph).chain(levels.iter().map(|(g, _)| g)).collect();
    for (k, g) in graphs.iter().enumerate() {
        // color each level by the clusters the next level forms
        let name = format!("level_{k}");
        let style = DotStyle {
            name: Some(&name),
            cluster_of: levels.get(k).map(|(_, info)| info.cluster_of.as_slice()),
        };
        let path = args.out.join(format!("{name}.dot"));
        fs::write(&path, to_dot(*g, &style))?;
        manifest.output(&path);
        println!(
            "level {k}: {} nodes, {} edges{}",
            g.num_nodes(),
            g.num_edges(),
            levels.get(k).map_or(String::new(), |(_, i)| format!(", {} contractions", i.matched_edges.len()))
        );
    }
    manifest.finish(&args.out)?;
    Ok(())
}
