//! `chainclust` command-line driver.
//!
//! `autopilot` runs every stage; `reorder`, `profile`, `cut`, `merge` and `expand` run one
//! stage each, reading the previous stage's artifacts from `--out-dir`, so the chain of
//! stage commands writes the same files as one autopilot run.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use chainclust::export::{self, ArtifactPaths};
use chainclust::io::{load_matrix, read_labels, MATRIX_MAGIC};
use chainclust::pipeline::{self, Config};
use chainclust::evaluate::{auto_reorder_columns, confusion_matrix};
use chainclust::{
    compute_delta_profile, generate_toy, load_data, score_labeling, DistanceMatrix, Execution, LoadOptions,
    MergeOrder, Precision, ScoreCard, ScoreFunction, StartStrategy, ToySpec,
};

#[derive(Parser)]
#[command(name = "chainclust", version, about = "Noise-aware clustering of distance matrices")]
struct Cli {
    /// Worker threads for the multi-start search (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every stage and write all artifacts.
    Autopilot(StageArgs),
    /// Choose the best chain ordering and write `<project>_order.txt`.
    Reorder(StageArgs),
    /// Compute the stencil profile along the saved order.
    Profile(StageArgs),
    /// Scan cutoffs (or apply `--cutoff`) and cut clusters.
    Cut(StageArgs),
    /// Propose and apply merges.
    Merge(StageArgs),
    /// Attach noise elements to nearby clusters and write labels and index files.
    Expand(StageArgs),
    /// Score predicted labels against true labels.
    Eval(EvalArgs),
    /// Write the nine-blob benchmark table and its labels.
    Synth(SynthArgs),
    /// Serve the interactive session API.
    Serve(ServeArgs),
}

#[derive(Args, Clone)]
struct StageArgs {
    /// Feature table, distance matrix (text) or binary matrix file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value = "run")]
    project: String,
    /// TOML file with `[run]` and `[load]` tables; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    load: LoadFlags,
    #[command(flatten)]
    run: RunFlags,
}

#[derive(Args, Clone, Default)]
struct LoadFlags {
    #[arg(long)]
    delimiter: Option<char>,
    /// Zero-based columns to keep, comma separated.
    #[arg(long, value_delimiter = ',')]
    use_columns: Option<Vec<usize>>,
    /// `f32` (default) or `f64` distance storage.
    #[arg(long)]
    precision: Option<Precision>,
    /// Standardize feature columns before computing distances.
    #[arg(long)]
    standardize: bool,
}

#[derive(Args, Clone, Default)]
struct RunFlags {
    /// Stencil size, percent of n.
    #[arg(long)]
    stencil_pct: Option<f64>,
    /// `all`, `first`, `centroids`, `evenly:K`, `random:K[:SEED]` or `explicit:I,J,...`.
    #[arg(long)]
    starts: Option<StartStrategy>,
    /// Smallest cluster, percent of n.
    #[arg(long)]
    min_size_pct: Option<f64>,
    #[arg(long)]
    n_candidates: Option<usize>,
    /// Exclude the lowest tenth of the profile range from the cutoff scan.
    #[arg(long)]
    skip_low_cutoffs: bool,
    /// `size_over_var` or `inverse_var`.
    #[arg(long)]
    score_function: Option<ScoreFunction>,
    /// Use this cutoff instead of the scanned one.
    #[arg(long, allow_hyphen_values = true)]
    cutoff: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// `smallest_first`, `largest_first`, `most_neighbors_first`, `fewest_neighbors_first` (or 1-4).
    #[arg(long)]
    merge_order: Option<MergeOrder>,
    /// Merge pairs to apply instead of the proposal, e.g. `0:3,1:2`; empty for none.
    #[arg(long)]
    merge_edits: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    /// Attach every noise element to its closest cluster.
    #[arg(long)]
    keep_no_noise: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = 0)]
    truth_column: usize,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, default_value_t = 1)]
    pred_column: usize,
    /// Row name in the printed table.
    #[arg(long, default_value = "prediction")]
    name: String,
    /// Also print the confusion matrix with aligned columns.
    #[arg(long)]
    confusion: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Feature table output (CSV).
    #[arg(long)]
    out: PathBuf,
    /// True labels output, one per line.
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
}

#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    run: Config,
    load: LoadOptions,
    standardize: bool,
}

struct Settings {
    load: LoadOptions,
    standardize: bool,
    run: Config,
}

fn settings(args: &StageArgs) -> Result<Settings, String> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => FileConfig::default(),
    };
    let (l, r) = (&args.load, &args.run);
    let mut load = file.load;
    if let Some(d) = l.delimiter {
        load.delimiter = d;
    }
    if let Some(c) = &l.use_columns {
        load.use_columns = Some(c.clone());
    }
    if let Some(p) = l.precision {
        load.precision = p;
    }
    let mut run = file.run;
    macro_rules! set {
        ($($field:ident),*) => {$(if let Some(v) = r.$field.clone() { run.$field = v; })*};
    }
    set!(stencil_pct, starts, min_size_pct, n_candidates, score_function, alpha, merge_order, beta);
    if r.cutoff.is_some() {
        run.cutoff = r.cutoff;
    }
    if r.skip_low_cutoffs {
        run.use_all_cutoff = false;
    }
    if r.keep_no_noise {
        run.keep_no_noise = true;
    }
    if let Some(edits) = &r.merge_edits {
        run.merge_edits = Some(parse_pairs(edits)?);
    }
    Ok(Settings {
        load,
        standardize: file.standardize || l.standardize,
        run,
    })
}

fn parse_pairs(text: &str) -> Result<Vec<(usize, usize)>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (a, b) = p.split_once(':').ok_or_else(|| format!("merge pair {p:?} is not `A:B`"))?;
            let id = |s: &str| s.trim().parse().map_err(|_| format!("bad cluster id in {p:?}"));
            Ok((id(a)?, id(b)?))
        })
        .collect()
}

fn load_input(path: &Path, s: &Settings) -> chainclust::Result<DistanceMatrix> {
    let mut head = [0u8; 4];
    let is_binary = std::fs::File::open(path)
        .and_then(|mut f| std::io::Read::read_exact(&mut f, &mut head))
        .is_ok()
        && &head == MATRIX_MAGIC;
    let m = if is_binary {
        load_matrix(path)?
    } else {
        load_data(path, &s.load)?.into_matrix(s.standardize, s.load.precision)?
    };
    Ok(m.with_precision(s.load.precision))
}

/// Failure of one stage; printed as `error in <stage>: <message>`.
struct StageError {
    stage: &'static str,
    message: String,
}

fn in_stage<E: ToString>(stage: &'static str) -> impl FnOnce(E) -> StageError {
    move |e| StageError {
        stage,
        message: e.to_string(),
    }
}

type StageResult<T = ()> = Result<T, StageError>;

struct Context {
    paths: ArtifactPaths,
    matrix: DistanceMatrix,
    run: Config,
}

impl Context {
    fn new(args: &StageArgs) -> StageResult<Self> {
        let s = settings(args).map_err(in_stage("config"))?;
        let matrix = load_input(&args.input, &s).map_err(in_stage("load"))?;
        Ok(Context {
            paths: ArtifactPaths::new(&args.out_dir, &args.project),
            matrix,
            run: s.run,
        })
    }

    fn write(&self, stage: &'static str, path: PathBuf, text: &str) -> StageResult {
        export::write_text(&path, text).map_err(in_stage(stage))
    }

    fn read(&self, stage: &'static str, path: PathBuf) -> StageResult<String> {
        export::read_text(&path).map_err(in_stage(stage))
    }
}

fn reorder(cx: &Context) -> StageResult<Vec<usize>> {
    let r = pipeline::choose_reordering(&cx.matrix, &cx.run, Execution::Parallel).map_err(in_stage("reorder"))?;
    cx.write("reorder", cx.paths.order(), &export::order_text(&r.order))?;
    println!("reorder: best start {} (integral {})", r.start, r.delta_integral);
    Ok(r.order)
}

fn profile(cx: &Context, order: &[usize]) -> StageResult<(DistanceMatrix, chainclust::DeltaProfile)> {
    let stage = "profile";
    let permuted = cx.matrix.permuted(order).map_err(in_stage(stage))?;
    let stencil = cx.run.stencil(cx.matrix.n()).map_err(in_stage(stage))?;
    let profile = compute_delta_profile(&permuted, stencil).map_err(in_stage(stage))?;
    cx.write(stage, cx.paths.delta(), &export::delta_csv(&profile))?;
    println!("profile: half-width {}, integral {}", profile.half_width(), profile.integral());
    Ok((permuted, profile))
}

fn cut(
    cx: &Context,
    permuted: DistanceMatrix,
    order: &[usize],
    profile: chainclust::DeltaProfile,
) -> StageResult<pipeline::Segmentation> {
    let stage = "cut";
    let seg = pipeline::cut(permuted, order, profile, &cx.run).map_err(in_stage(stage))?;
    cx.write(stage, cx.paths.scan(), &export::scan_csv(&seg.scan))?;
    let json = export::cluster_set_json(&seg.clusters).map_err(in_stage(stage))?;
    cx.write(stage, cx.paths.cut(), &json)?;
    println!(
        "cut: cutoff {}{}, {} clusters, {:.1}% noise",
        seg.scan.chosen,
        if seg.scan.overridden { " (user)" } else { "" },
        seg.clusters.n_clusters(),
        100.0 * seg.clusters.noise_fraction()
    );
    Ok(seg)
}

fn merge(cx: &Context, permuted: &DistanceMatrix, cs: &chainclust::ClusterSet) -> StageResult<chainclust::ClusterSet> {
    let stage = "merge";
    let (plan, merged) = pipeline::merge(permuted, cs, &cx.run).map_err(in_stage(stage))?;
    let zones = chainclust::refine::zone_table(permuted, cs).map_err(in_stage(stage))?;
    cx.write(stage, cx.paths.merge_plan(), &export::merge_plan_json(&plan).map_err(in_stage(stage))?)?;
    cx.write(stage, cx.paths.zones(), &zones.to_csv())?;
    cx.write(stage, cx.paths.merged(), &export::cluster_set_json(&merged).map_err(in_stage(stage))?)?;
    println!(
        "merge: {} pairs {}, {} clusters",
        plan.pairs.len(),
        if cx.run.merge_edits.is_some() { "proposed (edited list applied)" } else { "applied" },
        merged.n_clusters()
    );
    Ok(merged)
}

fn expand(cx: &Context, permuted: &DistanceMatrix, merged: &chainclust::ClusterSet) -> StageResult {
    let stage = "expand";
    let (_, expanded) =
        pipeline::expand(&cx.matrix, permuted, merged, cx.run.expansion()).map_err(in_stage(stage))?;
    cx.write(stage, cx.paths.expanded(), &export::cluster_set_json(&expanded).map_err(in_stage(stage))?)?;
    cx.write(stage, cx.paths.labels(), &export::labels_csv(expanded.labels()))?;
    cx.write(stage, cx.paths.ndx(), &export::ndx(&expanded))?;
    println!(
        "expand: {:.1}% noise before, {:.1}% after",
        100.0 * merged.noise_fraction(),
        100.0 * expanded.noise_fraction()
    );
    Ok(())
}

fn read_order(cx: &Context, stage: &'static str) -> StageResult<Vec<usize>> {
    let order = export::parse_order(&cx.read(stage, cx.paths.order())?).map_err(in_stage(stage))?;
    if order.len() != cx.matrix.n() {
        return Err(in_stage(stage)(format!(
            "saved order has {} elements but the input has {}",
            order.len(),
            cx.matrix.n()
        )));
    }
    Ok(order)
}

fn read_clusters(cx: &Context, stage: &'static str, path: PathBuf) -> StageResult<(DistanceMatrix, chainclust::ClusterSet)> {
    let cs = export::parse_cluster_set(&cx.read(stage, path)?).map_err(in_stage(stage))?;
    if cs.n() != cx.matrix.n() {
        return Err(in_stage(stage)(format!(
            "saved clusters cover {} elements but the input has {}",
            cs.n(),
            cx.matrix.n()
        )));
    }
    let permuted = cx.matrix.permuted(cs.order()).map_err(in_stage(stage))?;
    Ok((permuted, cs))
}

fn run_stage(cmd: &Cmd, args: &StageArgs) -> StageResult {
    let cx = Context::new(args)?;
    match cmd {
        Cmd::Autopilot(_) => {
            let order = reorder(&cx)?;
            let (permuted, prof) = profile(&cx, &order)?;
            let seg = cut(&cx, permuted, &order, prof)?;
            let merged = merge(&cx, &seg.permuted, &seg.clusters)?;
            expand(&cx, &seg.permuted, &merged)
        }
        Cmd::Reorder(_) => reorder(&cx).map(drop),
        Cmd::Profile(_) => {
            let order = read_order(&cx, "profile")?;
            profile(&cx, &order).map(drop)
        }
        Cmd::Cut(_) => {
            let order = read_order(&cx, "cut")?;
            let prof = export::parse_delta_csv(&cx.read("cut", cx.paths.delta())?).map_err(in_stage("cut"))?;
            let permuted = cx.matrix.permuted(&order).map_err(in_stage("cut"))?;
            cut(&cx, permuted, &order, prof).map(drop)
        }
        Cmd::Merge(_) => {
            let (permuted, cs) = read_clusters(&cx, "merge", cx.paths.cut())?;
            merge(&cx, &permuted, &cs).map(drop)
        }
        Cmd::Expand(_) => {
            let (permuted, merged) = read_clusters(&cx, "expand", cx.paths.merged())?;
            expand(&cx, &permuted, &merged)
        }
        _ => unreachable!("not a pipeline stage"),
    }
}

fn eval(args: &EvalArgs) -> StageResult {
    let opts = LoadOptions::default();
    let truth = read_labels(&args.truth, args.truth_column, &opts).map_err(in_stage("eval"))?;
    let pred = read_labels(&args.pred, args.pred_column, &opts).map_err(in_stage("eval"))?;
    let card = score_labeling(&truth, &pred).map_err(in_stage("eval"))?;
    println!("{}", ScoreCard::TABLE_HEADER);
    println!("{}", card.table_row(&args.name));
    if args.confusion {
        let table = confusion_matrix(&truth, &pred).map_err(in_stage("eval"))?;
        let (aligned, _) = auto_reorder_columns(&table);
        print!("{}", aligned.to_csv());
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> StageResult {
    let (points, truth) = generate_toy(&ToySpec::with_seed(args.seed)).map_err(in_stage("synth"))?;
    export::write_text(&args.out, &export::features_csv(&points)).map_err(in_stage("synth"))?;
    let labels: String = truth.iter().map(|l| format!("{l}\n")).collect();
    export::write_text(&args.labels, &labels).map_err(in_stage("synth"))?;
    println!("synth: {} points written to {}", points.n_rows(), args.out.display());
    Ok(())
}

fn serve(args: &ServeArgs) -> StageResult {
    let runtime = tokio::runtime::Runtime::new().map_err(in_stage("serve"))?;
    println!("serving on http://{}", args.addr);
    runtime
        .block_on(chainclust_server::serve(args.addr))
        .map_err(in_stage("serve"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error in setup: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Cmd::Autopilot(a) | Cmd::Reorder(a) | Cmd::Profile(a) | Cmd::Cut(a) | Cmd::Merge(a) | Cmd::Expand(a) => {
            run_stage(&cli.command, a)
        }
        Cmd::Eval(a) => eval(a),
        Cmd::Synth(a) => synth(a),
        Cmd::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error in {}: {}", e.stage, e.message);
            ExitCode::from(2)
        }
    }
}
