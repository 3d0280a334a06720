use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::commands::{community_summary, write_popularity, write_value_frequency};
use super::manifest::Outputs;
use crate::data::{
    entity_counts, load_ratings, parse_ratings, rating_value_frequency, split, write_canonical,
    InputFormat, RatingScale, RatingsDataset, Side,
};
use crate::embedding::{cloud_stats, takens_embed, write_cloud_csv};
use crate::error::{Error, Result};
use crate::graph::{build_graph, layout, louvain, write_dot, write_graphml, write_layout_csv, LayoutConfig};
use crate::recommend::{mae_grid, Algorithm, GridMode, ModelSettings, SeriesTrace};
use crate::recurrence::{epsilon_from_fraction, recurrence_plot, recurrence_rate};
use crate::similarity::{
    heatmap_data, radius_vs_popularity, similarity_matrix, similarity_radius, write_heatmap_csv,
    write_pairs_csv, write_radius_csv, HeatmapOrder, DENSE_CUTOFF,
};
use crate::viz::{plot_file_name, render, Payload, PlotKind, PlotSpec};

/// The bundled synthetic dataset (canonical CSV).
pub const BUNDLED_MINI_CSV: &str = include_str!("../../data/mini.csv");

/// Pipeline settings; every key is optional in the JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Rating file, relative to the working directory. The bundled mini
    /// dataset is used when absent.
    pub dataset: Option<PathBuf>,
    /// Prefix for plot file names.
    pub dataset_name: String,
    pub format: InputFormat,
    pub scale_min: f64,
    pub scale_max: f64,
    pub split_ratio: f64,
    pub split_seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub grid_mode: GridMode,
    pub grid: Vec<f64>,
    pub model: ModelSettings,
    pub embed_tau: usize,
    pub recurrence_fraction: f64,
    pub min_support: usize,
    pub heatmap_order: HeatmapOrder,
    pub heatmap_top_n: Option<usize>,
    pub graph_threshold: f64,
    pub layout: LayoutConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            dataset_name: "mini".into(),
            format: InputFormat::ComodaCsv,
            scale_min: 1.0,
            scale_max: 5.0,
            split_ratio: 0.8,
            split_seed: 42,
            algorithms: vec![
                Algorithm::Mf,
                Algorithm::Random,
                Algorithm::Zeromat,
                Algorithm::Dotmat,
                Algorithm::DotmatHybrid,
            ],
            grid_mode: GridMode::Rate,
            grid: (1..=30).map(|i| i as f64 / 1000.0).collect(),
            model: ModelSettings {
                iterations: 20_000,
                iters_pre: 10_000,
                ..ModelSettings::default()
            },
            embed_tau: 1,
            recurrence_fraction: crate::recurrence::DEFAULT_FRACTION,
            min_support: 1,
            heatmap_order: HeatmapOrder::ByPopularity,
            heatmap_top_n: None,
            graph_threshold: 0.0,
            layout: LayoutConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
    }

    pub fn seeds(&self) -> Vec<u64> {
        vec![self.split_seed, self.model.seed, self.layout.seed]
    }
}

struct Stage<'a> {
    cfg: &'a PipelineConfig,
    out: &'a mut Outputs,
    warnings: Vec<String>,
}

impl Stage<'_> {
    fn svg(&mut self, analysis: &str, algo: &str, spec: &PlotSpec, payload: Payload<'_>) -> Result<()> {
        let rendered = render(spec, payload)?;
        for w in rendered.warnings {
            self.warn(format!("{analysis}: {w}"));
        }
        let name = plot_file_name(&self.cfg.dataset_name, analysis, algo);
        self.out.write(&name, rendered.svg.as_bytes())?;
        Ok(())
    }

    fn warn(&mut self, message: String) {
        eprintln!("warning: {message}");
        self.warnings.push(message);
    }
}

fn load_dataset(cfg: &PipelineConfig, out: &mut Outputs) -> Result<(RatingsDataset, crate::data::IngestReport)> {
    let scale = RatingScale::new(cfg.scale_min, cfg.scale_max)?;
    match &cfg.dataset {
        Some(path) => {
            out.input(path)?;
            load_ratings(path, cfg.format, scale)
        }
        None => {
            out.input_bytes("bundled:mini.csv", BUNDLED_MINI_CSV.as_bytes());
            parse_ratings(BUNDLED_MINI_CSV.as_bytes(), InputFormat::ComodaCsv, scale, "bundled:mini.csv")
        }
    }
}

/// Runs every stage and writes all figure families into `out`.
pub fn run_pipeline(cfg: &PipelineConfig, out: &mut Outputs) -> Result<serde_json::Value> {
    if cfg.algorithms.is_empty() {
        return Err(Error::invalid("pipeline needs at least one algorithm"));
    }
    let (dataset, report) = load_dataset(cfg, out)?;
    let mut st = Stage {
        cfg,
        out,
        warnings: Vec::new(),
    };
    st.out.write_json("ingest_report.json", &report)?;
    st.out.write_with("rating_values.csv", |w| write_value_frequency(&dataset, w))?;

    let pair = split(&dataset, cfg.split_ratio, cfg.split_seed)?;
    st.out.write_with("train.csv", |w| write_canonical(&pair.train, w))?;
    st.out.write_with("test.csv", |w| write_canonical(&pair.test, w))?;

    let mae = mae_stage(&mut st, &pair.train, &pair.test)?;
    let (embedding, recurrence) = trace_stages(&mut st, &mae)?;
    let popularity = popularity_stage(&mut st, &dataset)?;
    let mut sides = serde_json::Map::new();
    for side in [Side::User, Side::Item] {
        sides.insert(side.name().into(), side_stage(&mut st, &dataset, side)?);
    }

    let summary = json!({
        "dataset": {
            "users": dataset.num_users(),
            "items": dataset.num_items(),
            "ratings": dataset.len(),
            "train": pair.train.len(),
            "test": pair.test.len(),
        },
        "best_test_mae": mae
            .iter()
            .map(|(alg, t)| (alg.name(), t.ys.iter().copied().fold(f64::INFINITY, f64::min)))
            .collect::<std::collections::BTreeMap<_, _>>(),
        "embedding": embedding,
        "recurrence": recurrence,
        "popularity": popularity,
        "similarity": sides,
        "warnings": st.warnings,
    });
    st.out.write_json("summary.json", &summary)?;
    Ok(summary)
}

fn mae_stage(
    st: &mut Stage<'_>,
    train: &RatingsDataset,
    test: &RatingsDataset,
) -> Result<Vec<(Algorithm, SeriesTrace)>> {
    let cfg = st.cfg;
    let mut traces = Vec::new();
    for &alg in &cfg.algorithms {
        let outcome = mae_grid(alg, train, test, &cfg.grid, cfg.grid_mode, &cfg.model)?;
        st.out.write_with(&format!("grid_{}.csv", alg.name()), |w| outcome.write_csv(w))?;
        for p in &outcome.points {
            if let Some(e) = &p.error {
                st.warn(format!("{} grid point {}: {e}", alg.name(), p.x));
            }
        }
        match outcome.trace {
            Some(t) => traces.push((alg, t)),
            None => st.warn(format!("{}: every grid point failed", alg.name())),
        }
    }
    if traces.is_empty() {
        return Err(Error::Compute("no algorithm produced an MAE curve".into()));
    }
    let series: Vec<SeriesTrace> = traces.iter().map(|(_, t)| t.clone()).collect();
    let x_label = match cfg.grid_mode {
        GridMode::Rate => "learning rate",
        GridMode::Steps => "SGD steps",
    };
    let spec = PlotSpec::new(PlotKind::Line, "Test MAE").labels(x_label, "MAE");
    st.svg("mae", "", &spec, Payload::Series(&series))?;
    Ok(traces)
}

fn trace_stages(
    st: &mut Stage<'_>,
    traces: &[(Algorithm, SeriesTrace)],
) -> Result<(serde_json::Value, serde_json::Value)> {
    let cfg = st.cfg;
    let mut embedding = serde_json::Map::new();
    let mut recurrence = serde_json::Map::new();
    for (alg, trace) in traces {
        let name = alg.name();
        let mut stats = serde_json::Map::new();
        for dim in [2usize, 3] {
            let cloud = match takens_embed(trace, dim, cfg.embed_tau) {
                Ok(c) => c,
                Err(e) => {
                    st.warn(format!("{name}: {dim}-D embedding skipped: {e}"));
                    continue;
                }
            };
            st.out.write_with(&format!("cloud{dim}d_{name}.csv"), |w| write_cloud_csv(&cloud, w))?;
            let spec = PlotSpec::new(PlotKind::Scatter2d, format!("{name} MAE curve, {dim}-D delay embedding"));
            let spec = if dim == 3 { spec.size(1080, 400) } else { spec };
            st.svg(&format!("embed{dim}d"), name, &spec, Payload::Cloud(&cloud))?;
            stats.insert(format!("{dim}d"), serde_json::to_value(cloud_stats(&cloud)?).unwrap_or_default());
        }
        embedding.insert(name.into(), stats.into());

        let eps = match epsilon_from_fraction(trace, cfg.recurrence_fraction) {
            Ok(e) => e,
            Err(e) => {
                st.warn(format!("{name}: recurrence plot skipped: {e}"));
                continue;
            }
        };
        let grid = recurrence_plot(trace, eps)?;
        st.out.write_with(&format!("recurrence_{name}.pbm"), |w| grid.write_pbm(w))?;
        st.out.write_with(&format!("recurrence_{name}.pgm"), |w| grid.write_pgm(w))?;
        let spec = PlotSpec::new(PlotKind::Recurrence, format!("Recurrence plot, {name}"))
            .labels("grid index", "grid index");
        st.svg("recurrence", name, &spec, Payload::Recurrence(&grid))?;
        recurrence.insert(name.into(), json!({ "epsilon": eps, "rate": recurrence_rate(&grid) }));
    }
    Ok((embedding.into(), recurrence.into()))
}

fn popularity_stage(st: &mut Stage<'_>, dataset: &RatingsDataset) -> Result<serde_json::Value> {
    let mut result = serde_json::Map::new();
    for side in [Side::Item, Side::User] {
        let mut counts: Vec<usize> = entity_counts(dataset, side).into_iter().filter(|&c| c > 0).collect();
        counts.sort_unstable_by(|a, b| b.cmp(a));
        st.out.write_with(&format!("popularity_{}.csv", side.name()), |w| write_popularity(dataset, side, w))?;
        let series = [SeriesTrace {
            label: format!("{}s", side.name()),
            xs: (1..=counts.len()).map(|r| r as f64).collect(),
            ys: counts.iter().map(|&c| c as f64).collect(),
        }];
        let spec = PlotSpec::new(PlotKind::Loglog, format!("{} popularity", side.name()))
            .labels("popularity rank", "number of ratings");
        st.svg(&format!("popularity_{}", side.name()), "", &spec, Payload::Series(&series))?;
        let median = counts.get(counts.len() / 2).copied().unwrap_or(0);
        result.insert(
            side.name().into(),
            json!({ "top": counts.first(), "median": median }),
        );
    }
    let freq = rating_value_frequency(dataset);
    let series = [SeriesTrace {
        label: "ratings".into(),
        xs: freq.iter().map(|f| f.0).collect(),
        ys: freq.iter().map(|f| f.1 as f64).collect(),
    }];
    let spec = PlotSpec::new(PlotKind::Loglog, "Rating value frequency").labels("rating value", "number of ratings");
    st.svg("rating_values", "", &spec, Payload::Series(&series))?;
    Ok(result.into())
}

fn side_stage(st: &mut Stage<'_>, dataset: &RatingsDataset, side: Side) -> Result<serde_json::Value> {
    let cfg = st.cfg;
    let name = side.name();
    let sim = similarity_matrix(dataset, side, cfg.min_support)?;
    let radii = similarity_radius(&sim);
    let curve = radius_vs_popularity(dataset, &radii)?;
    let counts = entity_counts(dataset, side);
    let heat = heatmap_data(&sim, cfg.heatmap_order, &counts, DENSE_CUTOFF, cfg.heatmap_top_n)?;
    st.out.write_with(&format!("similarity_{name}.csv"), |w| write_pairs_csv(&sim, w))?;
    st.out.write_with(&format!("radius_{name}.csv"), |w| write_radius_csv(&curve, w))?;
    st.out.write_with(&format!("heatmap_{name}.csv"), |w| write_heatmap_csv(&heat, w))?;

    let spec = PlotSpec::new(PlotKind::Heatmap, format!("{name}-{name} similarity"))
        .labels(format!("{name}s by popularity"), "");
    st.svg("heatmap", name, &spec, Payload::Grid(&heat.values))?;

    let points = curve.points();
    let series = [SeriesTrace {
        label: format!("{name}s"),
        xs: points.iter().map(|p| p.0 as f64).collect(),
        ys: points.iter().map(|p| p.1 as f64).collect(),
    }];
    let spec = PlotSpec::new(PlotKind::Scatter2d, format!("{name} similarity radius"))
        .labels("popularity rank", "similarity radius");
    st.svg("radius", name, &spec, Payload::Series(&series))?;

    let mut ranks = vec![0usize; sim.size()];
    for &(e, rank, _) in &curve.rows {
        ranks[e] = rank;
    }
    let graph = build_graph(&sim, cfg.graph_threshold, &radii, Some(ranks))?;
    let communities = louvain(&graph, cfg.layout.seed);
    let placed = layout(&graph, &cfg.layout);
    st.out.write_with(&format!("graph_{name}.graphml"), |w| {
        write_graphml(&graph, Some(&communities), Some(&placed), w)
    })?;
    st.out.write_with(&format!("graph_{name}.dot"), |w| {
        write_dot(&graph, Some(&communities), Some(&placed), w)
    })?;
    st.out.write_with(&format!("layout_{name}.csv"), |w| {
        write_layout_csv(&graph, &communities, &placed, w)
    })?;
    let nodes: Vec<_> = (0..graph.num_nodes)
        .map(|i| (placed.positions[i][0], placed.positions[i][1], communities.community[i], graph.radius[i]))
        .collect();
    let spec = PlotSpec::new(PlotKind::Graph, format!("{name} similarity graph")).size(800, 640);
    st.svg(
        "graph",
        name,
        &spec,
        Payload::Graph {
            nodes: &nodes,
            edges: &graph.edges,
        },
    )?;
    let summary = community_summary(&graph, &communities);
    st.out.write_json(&format!("communities_{name}.json"), &summary)?;
    Ok(json!({
        "pairs": sim.num_pairs(),
        "radius_skewness": curve.skewness,
        "graph": summary,
    }))
}
