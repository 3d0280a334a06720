use std::io::{BufReader, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::manifest::Outputs;
use super::pipeline::{run_pipeline, PipelineConfig};
use super::*;
use crate::data::{
    entity_counts, load_ratings, popularity_curve, rating_value_frequency, split, unify,
    write_canonical, RatingsDataset,
};
use crate::embedding::{cloud_stats, read_cloud_csv, takens_embed, write_cloud_csv};
use crate::graph::{
    build_graph, layout, louvain, read_layout_csv, write_dot, write_graphml, write_layout_csv,
    LayoutConfig,
};
use crate::recommend::{evaluate_mae, fit, mae_grid, Checkpoints, SeriesTrace};
use crate::recurrence::{epsilon_from_fraction, recurrence_plot, recurrence_rate, RecurrenceGrid};
use crate::similarity::{
    dpp_diversity, heatmap_data, radius_vs_popularity, read_pairs_csv, read_radius_csv,
    similarity_matrix, similarity_radius, write_heatmap_csv, write_pairs_csv, write_radius_csv,
    RadiusVector, SimilarityMatrix, DENSE_CUTOFF,
};
use crate::viz::{render, Payload, PlotSpec};
use crate::Result;

type CliResult = std::result::Result<(), CliError>;

pub(super) fn dispatch(command: Command, argv: Vec<String>, threads: Option<usize>) -> CliResult {
    let name = command.name();
    let (out_dir, config, seeds) = match &command {
        Command::Ingest(a) => (&a.out.out_dir, to_json(a), vec![]),
        Command::Split(a) => (&a.out.out_dir, to_json(a), vec![a.seed]),
        Command::Train(a) => (&a.out.out_dir, to_json(a), vec![a.model.seed]),
        Command::Grid(a) => (&a.out.out_dir, to_json(a), vec![a.model.seed]),
        Command::Embed(a) => (&a.out.out_dir, to_json(a), vec![]),
        Command::Recur(a) => (&a.out.out_dir, to_json(a), vec![]),
        Command::Sim(a) => (&a.out.out_dir, to_json(a), vec![]),
        Command::Dpp(a) => (&a.out.out_dir, to_json(a), vec![]),
        Command::Graph(a) => (&a.out.out_dir, to_json(a), vec![a.seed]),
        Command::Plot(a) => (&a.out.out_dir, to_json(a), vec![]),
        Command::Pipeline(a) => (&a.out.out_dir, to_json(a), vec![]),
    };
    if let Command::Train(a) = &command {
        if a.train.is_none() && a.algo.needs_ratings() {
            return Err(CliError::Usage(format!(
                "--algo {} requires --train",
                a.algo.name()
            )));
        }
    }
    let mut out = Outputs::create(&out_dir.clone())?;
    let (mut config, mut seeds) = (config, seeds);
    match command {
        Command::Ingest(a) => ingest(&a, &mut out)?,
        Command::Split(a) => split_cmd(&a, &mut out)?,
        Command::Train(a) => train(&a, &mut out)?,
        Command::Grid(a) => grid(&a, &mut out)?,
        Command::Embed(a) => embed(&a, &mut out)?,
        Command::Recur(a) => recur(&a, &mut out)?,
        Command::Sim(a) => sim(&a, &mut out)?,
        Command::Dpp(a) => dpp(&a, &mut out)?,
        Command::Graph(a) => graph(&a, &mut out)?,
        Command::Plot(a) => plot(&a, &mut out)?,
        Command::Pipeline(a) => {
            let cfg = match &a.config {
                Some(path) => {
                    out.input(path)?;
                    PipelineConfig::load(path)?
                }
                None => PipelineConfig::default(),
            };
            run_pipeline(&cfg, &mut out)?;
            config = json!({ "args": config, "pipeline": to_json(&cfg) });
            seeds = cfg.seeds();
        }
    }
    out.finish(name, argv, config, seeds, threads)?;
    Ok(())
}

fn to_json(value: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(value).unwrap_or(serde_json::Value::Null)
}

fn load(path: &Path, format: &FormatArgs, out: &mut Outputs) -> Result<(RatingsDataset, crate::data::IngestReport)> {
    out.input(path)?;
    load_ratings(path, format.format, format.scale()?)
}

fn open(path: &Path, out: &mut Outputs) -> Result<BufReader<std::fs::File>> {
    out.input(path)?;
    let file = std::fs::File::open(path).map_err(|e| crate::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(BufReader::new(file))
}

fn label_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn ingest(a: &IngestArgs, out: &mut Outputs) -> Result<()> {
    let (ds, report) = load(&a.input, &a.format, out)?;
    out.write_with("ratings.csv", |w| write_canonical(&ds, w))?;
    out.write_with("rating_values.csv", |w| write_value_frequency(&ds, w))?;
    let summary = json!({
        "report": report,
        "users": ds.num_users(),
        "items": ds.num_items(),
        "mean_rating": ds.mean_rating(),
    });
    out.write_json("ingest_report.json", &summary)?;
    println!(
        "{} triplets ({} users, {} items); {} duplicates, {} malformed, {} out of range",
        report.triplets,
        ds.num_users(),
        ds.num_items(),
        report.duplicates,
        report.malformed,
        report.out_of_range
    );
    Ok(())
}

pub(super) fn write_value_frequency(ds: &RatingsDataset, mut w: impl std::io::Write) -> std::io::Result<()> {
    w.write_all(b"value,count\n")?;
    for (v, c) in rating_value_frequency(ds) {
        writeln!(w, "{v},{c}")?;
    }
    Ok(())
}

pub(super) fn write_popularity(ds: &RatingsDataset, side: Side, mut w: impl std::io::Write) -> std::io::Result<()> {
    w.write_all(b"rank,count\n")?;
    let curve = match side {
        Side::Item => popularity_curve(ds),
        Side::User => {
            let mut counts: Vec<usize> = entity_counts(ds, Side::User).into_iter().filter(|&c| c > 0).collect();
            counts.sort_unstable_by(|a, b| b.cmp(a));
            counts.into_iter().enumerate().map(|(k, c)| (k + 1, c)).collect()
        }
    };
    for (rank, count) in curve {
        writeln!(w, "{rank},{count}")?;
    }
    Ok(())
}

fn split_cmd(a: &SplitArgs, out: &mut Outputs) -> Result<()> {
    let (ds, _) = load(&a.input, &a.format, out)?;
    let pair = split(&ds, a.ratio, a.seed)?;
    out.write_with("train.csv", |w| write_canonical(&pair.train, w))?;
    out.write_with("test.csv", |w| write_canonical(&pair.test, w))?;
    println!("{} train, {} test", pair.train.len(), pair.test.len());
    Ok(())
}

fn train(a: &TrainArgs, out: &mut Outputs) -> Result<()> {
    let scale = a.format.scale()?;
    let (train, test) = match (&a.train, &a.test) {
        (Some(tp), Some(sp)) => {
            let (tr, _) = load(tp, &a.format, out)?;
            let (te, _) = load(sp, &a.format, out)?;
            let (tr, te) = unify(&tr, &te)?;
            (tr, Some(te))
        }
        (Some(tp), None) => (load(tp, &a.format, out)?.0, None),
        (None, test) => {
            if a.users == 0 || a.items == 0 {
                return Err(crate::Error::Invalid("--users and --items must be positive".into()));
            }
            let empty = RatingsDataset::from_indexed(a.users, a.items, Vec::new(), scale)?;
            match test {
                Some(sp) => {
                    let (te, _) = load(sp, &a.format, out)?;
                    let (tr, te) = unify(&empty, &te)?;
                    (tr, Some(te))
                }
                None => (empty, None),
            }
        }
    };
    let settings = a.model.settings();
    let eval_set = test.as_ref().unwrap_or(&train);

    let mut trace: Vec<(f64, f64)> = Vec::new();
    let mut trace_error = None;
    let fitted = match a.trace_every {
        Some(every) => {
            if eval_set.is_empty() {
                return Err(crate::Error::Invalid("--trace-every needs ratings to evaluate".into()));
            }
            let mut callback = |step: u64, model: &crate::recommend::FactorModel| {
                match evaluate_mae(model, eval_set) {
                    Ok(mae) => trace.push((step as f64, mae)),
                    Err(e) => trace_error = Some(e),
                }
            };
            let mut checkpoints = Checkpoints {
                every,
                callback: &mut callback,
            };
            fit(a.algo, &train, &settings, Some(&mut checkpoints))?
        }
        None => fit(a.algo, &train, &settings, None)?,
    };
    if let Some(e) = trace_error {
        return Err(e);
    }
    if let Some(model) = fitted.factor_model() {
        out.write("model.json", model.to_json().as_bytes())?;
    }
    if !trace.is_empty() {
        let (xs, ys): (Vec<f64>, Vec<f64>) = trace.into_iter().unzip();
        let t = SeriesTrace::new(a.algo.name(), xs, ys)?;
        out.write_with(&format!("trace_{}.csv", a.algo.name()), |w| {
            w.write_all(b"x,mae\n")?;
            for (x, y) in t.xs.iter().zip(&t.ys) {
                writeln!(w, "{x},{y}")?;
            }
            Ok(())
        })?;
    }
    let train_mae = if train.is_empty() {
        None
    } else {
        Some(evaluate_mae(fitted.predictor(), &train)?)
    };
    let test_mae = test.as_ref().map(|t| evaluate_mae(fitted.predictor(), t)).transpose()?;
    out.write_json(
        "metrics.json",
        &json!({
            "algorithm": a.algo.name(),
            "users": train.num_users(),
            "items": train.num_items(),
            "train_mae": train_mae,
            "test_mae": test_mae,
        }),
    )?;
    match (train_mae, test_mae) {
        (_, Some(m)) => println!("{} test MAE {m:.6}", a.algo.name()),
        (Some(m), None) => println!("{} train MAE {m:.6}", a.algo.name()),
        _ => println!("{} trained", a.algo.name()),
    }
    Ok(())
}

fn grid(a: &GridArgs, out: &mut Outputs) -> Result<()> {
    let (tr, _) = load(&a.train, &a.format, out)?;
    let (te, _) = load(&a.test, &a.format, out)?;
    let (tr, te) = unify(&tr, &te)?;
    let outcome = mae_grid(a.algo, &tr, &te, &a.values, a.mode, &a.model.settings())?;
    out.write_with(&format!("grid_{}.csv", a.algo.name()), |w| outcome.write_csv(w))?;
    for p in &outcome.points {
        match (&p.mae, &p.error) {
            (Some(m), _) => println!("{} {m:.6}", p.x),
            (None, Some(e)) => eprintln!("warning: grid point {} failed: {e}", p.x),
            _ => {}
        }
    }
    if outcome.trace.is_none() {
        return Err(crate::Error::Compute("every grid point failed".into()));
    }
    Ok(())
}

fn embed(a: &EmbedArgs, out: &mut Outputs) -> Result<()> {
    let trace = SeriesTrace::read_csv(open(&a.trace, out)?, &label_of(&a.trace))?;
    let cloud = takens_embed(&trace, a.dim, a.tau)?;
    let stats = cloud_stats(&cloud)?;
    out.write_with(&format!("cloud_{}d.csv", a.dim), |w| write_cloud_csv(&cloud, w))?;
    out.write_json(&format!("cloud_{}d_stats.json", a.dim), &stats)?;
    println!("{} points, diameter {:.6}", cloud.points.len(), stats.diameter);
    Ok(())
}

fn recur(a: &RecurArgs, out: &mut Outputs) -> Result<()> {
    let trace = SeriesTrace::read_csv(open(&a.trace, out)?, &label_of(&a.trace))?;
    let eps = match a.epsilon {
        Some(e) => e,
        None => epsilon_from_fraction(&trace, a.fraction)?,
    };
    let grid = recurrence_plot(&trace, eps)?;
    out.write_with("recurrence.pbm", |w| grid.write_pbm(w))?;
    out.write_with("recurrence.pgm", |w| grid.write_pgm(w))?;
    let rate = recurrence_rate(&grid);
    out.write_json(
        "recurrence.json",
        &json!({ "n": grid.n(), "epsilon": eps, "rate": rate }),
    )?;
    println!("epsilon {eps:.6}, recurrence rate {rate:.6}");
    Ok(())
}

fn sim(a: &SimArgs, out: &mut Outputs) -> Result<()> {
    let (ds, _) = load(&a.input, &a.format, out)?;
    let side = a.side.name();
    let sim = similarity_matrix(&ds, a.side, a.min_support)?;
    let radii = similarity_radius(&sim);
    let curve = radius_vs_popularity(&ds, &radii)?;
    let counts = entity_counts(&ds, a.side);
    let heat = heatmap_data(&sim, a.heatmap_order, &counts, DENSE_CUTOFF, a.top_n)?;
    out.write_with(&format!("similarity_{side}.csv"), |w| write_pairs_csv(&sim, w))?;
    out.write_with(&format!("radius_{side}.csv"), |w| write_radius_csv(&curve, w))?;
    out.write_with(&format!("heatmap_{side}.csv"), |w| write_heatmap_csv(&heat, w))?;
    out.write_with(&format!("popularity_{side}.csv"), |w| write_popularity(&ds, a.side, w))?;
    out.write_json(
        &format!("similarity_{side}.json"),
        &json!({
            "entities": sim.size(),
            "pairs": sim.num_pairs(),
            "max_similarity": sim.max_similarity(),
            "radius_skewness": curve.skewness,
        }),
    )?;
    println!("{} entities, {} positive pairs", sim.size(), sim.num_pairs());
    Ok(())
}

fn pairs_matrix(pairs: &[(usize, usize, f64)], side: Side, min_size: usize) -> Result<SimilarityMatrix> {
    let size = pairs
        .iter()
        .map(|&(a, b, _)| a.max(b) + 1)
        .max()
        .unwrap_or(0)
        .max(min_size);
    SimilarityMatrix::from_pairs(side, size, pairs)
}

fn dpp(a: &DppArgs, out: &mut Outputs) -> Result<()> {
    let pairs = read_pairs_csv(open(&a.pairs, out)?, &a.pairs.display().to_string())?;
    let needed = a.select.iter().map(|&i| i + 1).max().unwrap_or(0);
    let sim = pairs_matrix(&pairs, a.side, needed)?;
    let score = dpp_diversity(&sim, &a.select)?;
    out.write_json("dpp.json", &json!({ "selection": a.select, "score": score }))?;
    println!("{score}");
    Ok(())
}

fn graph(a: &GraphArgs, out: &mut Outputs) -> Result<()> {
    let pairs = read_pairs_csv(open(&a.pairs, out)?, &a.pairs.display().to_string())?;
    let rows = read_radius_csv(open(&a.radius, out)?, &a.radius.display().to_string())?;
    let size = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let mut radius = vec![0usize; size];
    let mut rank = vec![0usize; size];
    for &(e, k, r) in &rows {
        radius[e] = r;
        rank[e] = k;
    }
    let sim = pairs_matrix(&pairs, a.side, size)?;
    if sim.size() != size {
        return Err(crate::Error::Invalid(format!(
            "pairs reference entity {} but the radius file covers {size}",
            sim.size() - 1
        )));
    }
    let radii = RadiusVector { side: a.side, radii: radius };
    let g = build_graph(&sim, a.threshold, &radii, Some(rank))?;
    let communities = louvain(&g, a.seed);
    let cfg = LayoutConfig {
        iterations: a.iterations,
        seed: a.seed,
        repulsion: a.repulsion,
        gravity: a.gravity,
        ..LayoutConfig::default()
    };
    let placed = layout(&g, &cfg);
    let side = a.side.name();
    for &format in &a.formats {
        let name = format!("graph_{side}.{}", format.extension());
        out.write_with(&name, |w| match format {
            GraphFormat::Graphml => write_graphml(&g, Some(&communities), Some(&placed), w),
            GraphFormat::Dot => write_dot(&g, Some(&communities), Some(&placed), w),
        })?;
    }
    out.write_with(&format!("layout_{side}.csv"), |w| write_layout_csv(&g, &communities, &placed, w))?;
    out.write_json(&format!("communities_{side}.json"), &community_summary(&g, &communities))?;
    println!(
        "{} nodes, {} edges, {} communities, modularity {:.6}",
        g.num_nodes,
        g.edges.len(),
        communities.num_communities(),
        communities.modularity
    );
    Ok(())
}

pub(super) fn community_summary(
    g: &crate::graph::SimilarityGraph,
    c: &crate::graph::CommunityAssignment,
) -> serde_json::Value {
    json!({
        "nodes": g.num_nodes,
        "edges": g.edges.len(),
        "threshold": g.threshold,
        "communities": c.num_communities(),
        "sizes": c.sizes(),
        "modularity": c.modularity,
        "pass_modularity": c.pass_modularity,
    })
}

/// Reads two numeric columns of a CSV with a header row.
fn read_xy(path: &Path, x_col: Option<&str>, y_col: Option<&str>, out: &mut Outputs) -> Result<SeriesTrace> {
    use std::io::BufRead;
    let context = path.display().to_string();
    let mut lines = open(path, out)?.lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| crate::Error::Io { path: path.to_path_buf(), source: e })?,
        None => return Err(crate::Error::Parse { context, message: "empty file".into() }),
    };
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let column = |want: Option<&str>, default: usize| -> Result<usize> {
        match want {
            None if default < names.len() => Ok(default),
            None => Err(crate::Error::Parse {
                context: context.clone(),
                message: "expected at least two columns".into(),
            }),
            Some(w) => names.iter().position(|n| *n == w).ok_or_else(|| crate::Error::Parse {
                context: context.clone(),
                message: format!("no column named {w:?}"),
            }),
        }
    };
    let (xi, yi) = (column(x_col, 0)?, column(y_col, 1)?);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line.map_err(|e| crate::Error::Io { path: path.to_path_buf(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| fields.get(i).and_then(|f| f.parse::<f64>().ok());
        match (get(xi), get(yi)) {
            (Some(x), Some(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if fields.get(yi).is_some_and(|f| f.is_empty()) => continue,
            _ => {
                return Err(crate::Error::Parse {
                    context,
                    message: format!("line {}: expected numbers in columns {xi} and {yi}", n + 2),
                })
            }
        }
    }
    Ok(SeriesTrace { label: label_of(path), xs, ys })
}

fn read_grid_csv(path: &Path, out: &mut Outputs) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::Error::Io { path: path.to_path_buf(), source: e })?;
    out.input(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(r, line)| {
            line.split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| crate::Error::Parse {
                        context: path.display().to_string(),
                        message: format!("row {r}: bad value {v:?}"),
                    })
                })
                .collect()
        })
        .collect()
}

fn series_plot(a: &PlotArgs, spec: &PlotSpec, out: &mut Outputs) -> Result<crate::viz::Rendered> {
    let mut series = Vec::new();
    for (i, path) in a.input.iter().enumerate() {
        let mut s = read_xy(path, a.x_col.as_deref(), a.y_col.as_deref(), out)?;
        if let Some(l) = a.label.get(i) {
            s.label = l.clone();
        }
        series.push(s);
    }
    render(spec, Payload::Series(&series))
}

fn plot(a: &PlotArgs, out: &mut Outputs) -> Result<()> {
    let mut spec = PlotSpec::new(a.kind, a.title.clone())
        .labels(a.x_label.clone(), a.y_label.clone())
        .size(a.width, a.height);
    if let Some(p) = a.palette {
        spec.palette = p;
    }
    spec.log_x |= a.log_x;
    spec.log_y |= a.log_y;
    let first = &a.input[0];
    let rendered = match a.kind {
        PlotKind::Line | PlotKind::Loglog => series_plot(a, &spec, out)?,
        PlotKind::Scatter2d if !a.cloud => series_plot(a, &spec, out)?,
        PlotKind::Scatter2d => {
            let cloud = read_cloud_csv(open(first, out)?, &label_of(first))?;
            render(&spec, Payload::Cloud(&cloud))?
        }
        PlotKind::Heatmap => {
            let grid = read_grid_csv(first, out)?;
            render(&spec, Payload::Grid(&grid))?
        }
        PlotKind::Recurrence => {
            let text = std::fs::read_to_string(first)
                .map_err(|e| crate::Error::Io { path: first.clone(), source: e })?;
            out.input(first)?;
            let grid = RecurrenceGrid::read_pbm(&text, &first.display().to_string())?;
            render(&spec, Payload::Recurrence(&grid))?
        }
        PlotKind::Graph => {
            let nodes = read_layout_csv(open(first, out)?, &first.display().to_string())?;
            let edges: Vec<(usize, usize, f64)> = match &a.edges {
                Some(p) => read_pairs_csv(open(p, out)?, &p.display().to_string())?
                    .into_iter()
                    .filter(|e| e.2 > a.threshold)
                    .collect(),
                None => Vec::new(),
            };
            render(&spec, Payload::Graph { nodes: &nodes, edges: &edges })?
        }
    };
    for w in &rendered.warnings {
        eprintln!("warning: {w}");
    }
    let name = a.output.clone().unwrap_or_else(|| {
        let kind = serde_json::to_value(a.kind).ok();
        format!("{}.svg", kind.as_ref().and_then(|k| k.as_str()).unwrap_or("plot"))
    });
    out.write(&name, rendered.svg.as_bytes())?;
    Ok(())
}
