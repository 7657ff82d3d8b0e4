//! Command-line interface for the determinantal hypergraph model.
//!
//! Subcommands cover the whole workflow: `fit` and `select-d` estimate a
//! model from a hyperedge file, `sample`/`complete`/`probe` query a fitted
//! model, `cluster` groups nodes, `simulate` runs the synthetic-experiment
//! harness, and `eval` compares two models with gauge-aligned relative
//! errors.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use diph::clustering::{clique_expansion, line_kmeans, nsc, score, LineKmeansOptions};
use diph::dpp;
use diph::estimation::{fit, select_dimension, BatchSize, FitOptions};
use diph::io::{
    parse_hyperedges, read_model, write_model, write_report_csv, write_report_json, ModelFile,
    ParseOptions, Provenance,
};
use diph::kernel::{build_kernel, Hypergraph, KernelMatrix};
use diph::metrics::relative_errors;
use diph::simgen::{run_sim1, run_sim2, SimGrid};
use diph::Error;

#[derive(Parser)]
#[command(
    name = "diph",
    about = "Determinantal hypergraph model: fit, sample, probe, cluster, simulate",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct EdgeFileArgs {
    /// Hyperedge file: one edge per line, labels separated by the delimiter.
    edges: PathBuf,

    /// Token delimiter.
    #[arg(long, default_value = ",")]
    delimiter: char,

    /// Drop nodes appearing in fewer hyperedges than this.
    #[arg(long, default_value_t = 2)]
    min_count: usize,

    /// Treat blank lines as empty hyperedges instead of skipping them.
    #[arg(long)]
    blank_as_empty: bool,
}

impl EdgeFileArgs {
    fn load(&self) -> Result<Hypergraph, Error> {
        let file = File::open(&self.edges)
            .map_err(|e| Error::Data(format!("{}: {e}", self.edges.display())))?;
        let opts = ParseOptions {
            delimiter: self.delimiter,
            min_node_count: self.min_count,
            blank_as_empty: self.blank_as_empty,
        };
        let (h, warnings) = parse_hyperedges(BufReader::new(file), &opts)?;
        for w in warnings {
            eprintln!("warning: line {}: {}", w.line, w.message);
        }
        Ok(h)
    }
}

#[derive(Args, Clone)]
struct FitArgs {
    /// Maximum number of epochs.
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,

    /// Mini-batch size, or "full".
    #[arg(long, default_value = "256")]
    batch_size: String,

    /// Number of random restarts.
    #[arg(long, default_value_t = 5)]
    n_inits: usize,

    /// Initial gradient step size.
    #[arg(long, default_value_t = 0.05)]
    step_size: f64,

    /// Relative objective-change stopping threshold.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl FitArgs {
    fn to_options(&self, d: usize) -> Result<FitOptions, Error> {
        let batch_size = if self.batch_size.eq_ignore_ascii_case("full") {
            BatchSize::Full
        } else {
            let size: usize = self.batch_size.parse().map_err(|_| {
                Error::InvalidArgument(format!(
                    "--batch-size must be a positive integer or 'full', got '{}'",
                    self.batch_size
                ))
            })?;
            BatchSize::Size(size)
        };
        Ok(FitOptions {
            max_iters: self.max_iters,
            batch_size,
            n_inits: self.n_inits,
            step_size: self.step_size,
            tol: self.tol,
            seed: self.seed,
            ..FitOptions::new(d)
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model to a hyperedge file and write a model file.
    Fit {
        #[command(flatten)]
        edges: EdgeFileArgs,

        /// Latent dimension.
        #[arg(long)]
        d: usize,

        #[command(flatten)]
        fit: FitArgs,

        /// Output model file.
        #[arg(long)]
        out: PathBuf,
    },

    /// Fit a range of latent dimensions and report the AIC table.
    SelectD {
        #[command(flatten)]
        edges: EdgeFileArgs,

        #[arg(long)]
        d_min: usize,

        #[arg(long)]
        d_max: usize,

        #[command(flatten)]
        fit: FitArgs,
    },

    /// Draw hyperedges from a fitted model.
    Sample {
        model: PathBuf,

        /// Number of hyperedges to draw.
        #[arg(long)]
        n: usize,

        /// Draw hyperedges of exactly this size.
        #[arg(long)]
        size: Option<usize>,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Rank completions of a partial hyperedge.
    Complete {
        model: PathBuf,

        /// Comma-separated node labels already in the edge.
        #[arg(long)]
        given: String,

        #[arg(long, default_value_t = 5)]
        top: usize,
    },

    /// Report the probability of an edge, its nodes' marginals, and the
    /// expected edge size.
    Probe {
        model: PathBuf,

        /// Comma-separated node labels.
        #[arg(long)]
        edge: String,
    },

    /// Cluster nodes of a fitted model.
    Cluster {
        model: PathBuf,

        #[arg(long)]
        k: usize,

        /// line-kmeans (on latent directions), nsc or score (on the clique
        /// expansion of --edges).
        #[arg(long)]
        method: String,

        /// Hyperedge file; required by nsc and score, rejected by line-kmeans.
        #[arg(long)]
        edges: Option<PathBuf>,

        /// Regularization for nsc.
        #[arg(long, default_value_t = 0.1)]
        tau: f64,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        #[arg(long, default_value = ",")]
        delimiter: char,

        #[arg(long, default_value_t = 2)]
        min_count: usize,

        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Run a simulation design and write its report.
    Simulate {
        /// Which design: sim1 (uniform directions) or sim2 (three clusters).
        design: String,

        #[arg(long, default_value_t = 100)]
        n_v: usize,

        /// Latent dimensions for sim1.
        #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3, 4])]
        d_list: Vec<usize>,

        /// Hyperedge counts.
        #[arg(long, value_delimiter = ',', default_values_t = vec![500, 1000, 2000, 3000])]
        ne_list: Vec<usize>,

        #[arg(long, default_value_t = 10)]
        replicates: usize,

        /// Master seed for the grid (per-replicate seeds are derived from it;
        /// shared with the fit options).
        #[command(flatten)]
        fit: FitArgs,

        /// Report CSV path.
        #[arg(long)]
        out: PathBuf,

        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,

        /// Record wall-clock timings (makes output non-reproducible).
        #[arg(long)]
        timings: bool,
    },

    /// Gauge-aligned relative errors between two model files.
    Eval {
        #[arg(long)]
        model_hat: PathBuf,

        #[arg(long)]
        model_star: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Data(_) | Error::Io(_) => 2,
        Error::Numerical(_) | Error::NotPositiveDefinite | Error::FitFailed(_) => 3,
        _ => 1,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Fit { edges, d, fit: fit_args, out } => cmd_fit(edges, d, fit_args, out),
        Command::SelectD {
            edges,
            d_min,
            d_max,
            fit: fit_args,
        } => cmd_select_d(edges, d_min, d_max, fit_args),
        Command::Sample {
            model,
            n,
            size,
            seed,
            out,
        } => cmd_sample(model, n, size, seed, out),
        Command::Complete { model, given, top } => cmd_complete(model, given, top),
        Command::Probe { model, edge } => cmd_probe(model, edge),
        Command::Cluster {
            model,
            k,
            method,
            edges,
            tau,
            seed,
            delimiter,
            min_count,
            out,
        } => cmd_cluster(model, k, method, edges, tau, seed, delimiter, min_count, out),
        Command::Simulate {
            design,
            n_v,
            d_list,
            ne_list,
            replicates,
            fit: fit_args,
            out,
            json,
            timings,
        } => cmd_simulate(
            design, n_v, d_list, ne_list, replicates, fit_args, out, json, timings,
        ),
        Command::Eval {
            model_hat,
            model_star,
        } => cmd_eval(model_hat, model_star),
    }
}

fn cmd_fit(edges: EdgeFileArgs, d: usize, fit_args: FitArgs, out: PathBuf) -> Result<(), Error> {
    let h = edges.load()?;
    let opts = fit_args.to_options(d)?;
    let result = fit(&h, &opts)?;
    let model = ModelFile {
        config: result.config.clone(),
        vocab: h.vocab().map(|v| v.to_vec()),
        provenance: Some(Provenance::from_fit(&result, &opts)),
    };
    write_model(&model, &out)?;
    println!("n_v {}", h.n_nodes());
    println!("n_e {}", h.n_edges());
    println!("final_objective {}", result.final_objective);
    println!("aic {}", result.aic);
    println!("converged {}", result.converged);
    println!("iterations {}", result.iterations_used);
    Ok(())
}

fn cmd_select_d(
    edges: EdgeFileArgs,
    d_min: usize,
    d_max: usize,
    fit_args: FitArgs,
) -> Result<(), Error> {
    if d_min == 0 || d_min > d_max {
        return Err(Error::InvalidArgument(format!(
            "need 0 < d_min <= d_max, got {d_min}..{d_max}"
        )));
    }
    let h = edges.load()?;
    let candidates: Vec<usize> = (d_min..=d_max).collect();
    let opts = fit_args.to_options(d_min)?;
    let selection = select_dimension(&h, &candidates, &opts)?;
    println!("d,aic,objective,converged");
    for (d, result) in &selection.fits {
        println!(
            "{d},{},{},{}",
            result.aic, result.final_objective, result.converged
        );
    }
    for (d, failure) in &selection.failures {
        eprintln!("warning: d={d} failed: {failure}");
    }
    println!("best_d {}", selection.best_d);
    Ok(())
}

fn load_kernel(model: &ModelFile) -> Result<KernelMatrix, Error> {
    build_kernel(&model.config)
}

fn cmd_sample(
    model_path: PathBuf,
    n: usize,
    size: Option<usize>,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<(), Error> {
    let model = read_model(&model_path)?;
    let kernel = load_kernel(&model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut writer = output_writer(out.as_deref())?;
    for _ in 0..n {
        let edge = match size {
            Some(k) => dpp::sample_k(&kernel, k, &mut rng)?,
            None => dpp::sample(&kernel, &mut rng)?,
        };
        let labels: Vec<String> = edge.iter().map(|&i| model.label(i)).collect();
        writeln!(writer, "{}", labels.join(","))?;
    }
    Ok(())
}

fn parse_label_list(model: &ModelFile, list: &str) -> Result<Vec<usize>, Error> {
    let mut nodes = Vec::new();
    for token in list.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let idx = model.resolve_label(token)?;
        if nodes.contains(&idx) {
            return Err(Error::InvalidArgument(format!(
                "node '{token}' listed twice"
            )));
        }
        nodes.push(idx);
    }
    nodes.sort_unstable();
    Ok(nodes)
}

fn cmd_complete(model_path: PathBuf, given: String, top: usize) -> Result<(), Error> {
    let model = read_model(&model_path)?;
    let kernel = load_kernel(&model)?;
    let given_nodes = parse_label_list(&model, &given)?;
    let ranked = dpp::complete_edge(&kernel, &given_nodes, top)?;
    println!("node,conditional_log_prob");
    for (node, log_prob) in ranked {
        println!("{},{log_prob}", model.label(node));
    }
    Ok(())
}

fn cmd_probe(model_path: PathBuf, edge: String) -> Result<(), Error> {
    let model = read_model(&model_path)?;
    let kernel = load_kernel(&model)?;
    let nodes = parse_label_list(&model, &edge)?;
    let log_prob = dpp::log_prob(&kernel, &nodes)?;
    let marginal = dpp::marginal_kernel(&kernel)?;
    println!("log_probability {log_prob}");
    println!("probability {}", log_prob.exp());
    for &i in &nodes {
        println!("marginal {} {}", model.label(i), marginal.inclusion_prob(i));
    }
    println!("expected_size {}", dpp::expected_size(&kernel)?);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_cluster(
    model_path: PathBuf,
    k: usize,
    method: String,
    edges: Option<PathBuf>,
    tau: f64,
    seed: u64,
    delimiter: char,
    min_count: usize,
    out: Option<PathBuf>,
) -> Result<(), Error> {
    let model = read_model(&model_path)?;
    let labels = match method.as_str() {
        "line-kmeans" => {
            if edges.is_some() {
                return Err(Error::InvalidArgument(
                    "--edges is only used by nsc and score".into(),
                ));
            }
            line_kmeans(
                &model.config.directions,
                k,
                &LineKmeansOptions {
                    seed,
                    ..Default::default()
                },
            )?
        }
        "nsc" | "score" => {
            let Some(edges_path) = edges else {
                return Err(Error::InvalidArgument(format!(
                    "method '{method}' needs --edges"
                )));
            };
            let h = EdgeFileArgs {
                edges: edges_path,
                delimiter,
                min_count,
                blank_as_empty: false,
            }
            .load()?;
            if h.n_nodes() != model.config.n_nodes() {
                return Err(Error::Data(format!(
                    "edge file has {} nodes after filtering but the model has {}",
                    h.n_nodes(),
                    model.config.n_nodes()
                )));
            }
            let adjacency = clique_expansion(&h);
            if method == "nsc" {
                nsc(&adjacency, k, tau, seed)?
            } else {
                score(&adjacency, k, seed)?
            }
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown method '{other}' (expected line-kmeans, nsc or score)"
            )));
        }
    };
    let mut writer = output_writer(out.as_deref())?;
    writeln!(writer, "# diph-labels v1")?;
    writeln!(writer, "node,label,cluster")?;
    for (i, cluster) in labels.iter().enumerate() {
        writeln!(writer, "{i},{},{cluster}", model.label(i))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    design: String,
    n_v: usize,
    d_list: Vec<usize>,
    ne_list: Vec<usize>,
    replicates: usize,
    fit_args: FitArgs,
    out: PathBuf,
    json: Option<PathBuf>,
    timings: bool,
) -> Result<(), Error> {
    let grid = SimGrid {
        n_v,
        d_values: d_list,
        n_e_values: ne_list,
        replicates,
        seed: fit_args.seed,
    };
    let fit_opts = fit_args.to_options(2)?;
    let report = match design.as_str() {
        "sim1" => run_sim1(&grid, &fit_opts)?,
        "sim2" => run_sim2(&grid, &fit_opts)?,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown design '{other}' (expected sim1 or sim2)"
            )));
        }
    };
    let file = File::create(&out)?;
    write_report_csv(&report, BufWriter::new(file), timings)?;
    if let Some(json_path) = json {
        let file = File::create(&json_path)?;
        write_report_json(&report, BufWriter::new(file), timings)?;
    }
    let failures = report.records.iter().filter(|r| r.failure.is_some()).count();
    println!("records {}", report.records.len());
    println!("failures {failures}");
    Ok(())
}

fn cmd_eval(model_hat: PathBuf, model_star: PathBuf) -> Result<(), Error> {
    let hat = read_model(&model_hat)?;
    let star = read_model(&model_star)?;
    let errors = relative_errors(&hat.config, &star.config)?;
    println!("rel_err_v {}", errors.v);
    println!("rel_err_beta {}", errors.beta);
    println!("rel_err_alpha {}", errors.alpha);
    println!("rel_err_l {}", errors.l);
    Ok(())
}

fn output_writer(path: Option<&std::path::Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}
