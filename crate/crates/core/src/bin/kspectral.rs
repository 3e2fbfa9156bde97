use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use kspectral::clustering::{label_errors, pipeline_kernel, separation};
use kspectral::markov::{diffusion_matrix, tv_matrix};
use kspectral::output::{fmt_f64, matrix_csv, points_csv, profile_csv, spectrum_csv};
use kspectral::spectral::SIGMA;
use kspectral::{
    build_m, calibrate_beta, cluster_pipeline, degrees, diffusion_profile, eig_sym, embedding, extract_windows,
    load_points, parse_pgm, select_m, spectrum_report, squared_distances, stochastic_matrix, Error, GenSpec,
    PipelineConfig, PointSet, Result, Strategy,
};

/// Kernel spectral clustering with automatic bandwidth, iteration count and
/// cluster count.
#[derive(Debug, Parser)]
#[command(name = "kspectral", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write clustering.json, spectrum.csv, embedding.csv and stats.json.
    Cluster {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Embedding dimension written to embedding.csv.
        #[arg(long, default_value_t = 2)]
        embed_k: usize,
        /// Also write the final kernel matrix as CSV.
        #[arg(long)]
        kernel_csv: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Solve the bandwidth equation F(beta) = h on the input.
    Calibrate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.005)]
        h: f64,
        /// Print the bracket/bisection trace as JSON.
        #[arg(long)]
        trace: bool,
    },
    /// Eigenvalues of M, M^m and C / n as CSV.
    Spectrum {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Number of rows (defaults to p).
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Row-normalized leading coordinates of the iterated representation.
    Embed {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Flatten every translated subwindow of a PGM image into a point CSV.
    Windows {
        pgm: PathBuf,
        #[arg(long, default_value_t = 8)]
        window: usize,
        #[arg(long, default_value_t = 4)]
        stride: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diffusion profile of one point and total-variation distances between all m-step profiles.
    Diffuse {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Starting point of the profile.
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Number of steps; defaults to the automatically selected m.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        m: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write synthetic points as CSV.
    Generate {
        /// `blobs:k:n_per:center_sep:spread` or `rings:r1,r2,...:n_per:noise`.
        #[arg(long)]
        gen: GenSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the generating component of each point, one per line.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "gen", "pgm"])))]
struct InputArgs {
    /// CSV file, one point per line, no header.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Synthetic data, see `generate --help`.
    #[arg(long)]
    gen: Option<GenSpec>,
    /// PGM image whose translated subwindows form the points.
    #[arg(long)]
    pgm: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    window: usize,
    #[arg(long, default_value_t = 4)]
    stride: usize,
    /// Seed for the generator and for the random seeding strategy.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    LowestIndex,
    Random,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// Target mean squared affinity for the bandwidth.
    #[arg(long, default_value_t = 0.005)]
    h: f64,
    /// Degree clamp.
    #[arg(long, default_value_t = SIGMA)]
    sigma: f64,
    /// Residual weight of the p-th eigenvalue after m iterations.
    #[arg(long, default_value_t = 0.01)]
    zeta: f64,
    /// Upper bound on the number of clusters, used to pick m.
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u64).range(2..))]
    p: u64,
    /// Threshold on C for the greedy extraction.
    #[arg(long, default_value_t = 0.1)]
    s: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::LowestIndex)]
    strategy: StrategyArg,
    /// Number of kernel composition levels before the final kernel.
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u64).range(0..=2))]
    compose_levels: u64,
    /// Per-level calibration targets (comma separated); missing levels use h.
    #[arg(long, value_delimiter = ',')]
    level_h: Vec<f64>,
}

impl PipelineArgs {
    fn config(&self, seed: u64) -> PipelineConfig {
        PipelineConfig {
            h: self.h,
            sigma: self.sigma,
            zeta: self.zeta,
            p: self.p as usize,
            s: self.s,
            strategy: match self.strategy {
                StrategyArg::LowestIndex => Strategy::LowestIndex,
                StrategyArg::Random => Strategy::Random { seed },
            },
            compose_levels: self.compose_levels as usize,
            level_h: self.level_h.clone(),
        }
    }
}

impl InputArgs {
    fn load(&self) -> Result<PointSet> {
        if let Some(path) = &self.input {
            load_points(&read_text(path)?)
        } else if let Some(spec) = &self.gen {
            spec.generate(self.seed)
        } else if let Some(path) = &self.pgm {
            extract_windows(&parse_pgm(&read_bytes(path)?)?, self.window, self.stride)
        } else {
            Err(Error::Param("no input given".into()))
        }
    }

    fn truth(&self) -> Option<Vec<usize>> {
        self.gen.as_ref().map(GenSpec::labels)
    }
}

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| with_path(path, e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| with_path(path, e))
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Cluster { input, pipeline, embed_k, kernel_csv, out } => {
            let ps = input.load()?;
            let cfg = pipeline.config(input.seed);
            let res = cluster_pipeline(&ps, &cfg)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("clustering.json"), res.clustering.to_json() + "\n")?;
            let rows = spectrum_report(&res.decomposition, &res.affinity, cfg.p)?;
            fs::write(out.join("spectrum.csv"), spectrum_csv(&rows))?;
            let emb = embedding(&res.decomposition, res.m, embed_k.min(ps.n()))?;
            fs::write(out.join("embedding.csv"), matrix_csv(&emb.coords))?;
            if let Some(path) = &kernel_csv {
                fs::write(path, matrix_csv(res.kernel.matrix()))?;
            }
            let sep = separation(&res.affinity, &res.clustering.labels);
            let truth_errors = input.truth().map(|t| label_errors(&res.clustering.labels, &t));
            let stats = json!({
                "n": ps.n(),
                "d": ps.d(),
                "c": res.clustering.c,
                "m": res.m,
                "beta": res.calibration.beta,
                "achieved_f": res.calibration.achieved_f,
                "cluster_sizes": res.clustering.cluster_sizes(),
                "min_within_c": sep.min_within,
                "max_across_c": sep.max_across,
                "clamped_degrees": res.degrees.clamped_indices(),
                "degenerate_embedding_rows": emb.degenerate.iter().filter(|&&d| d).count(),
                "truth_label_errors": truth_errors,
                "warnings": res.warnings,
            });
            fs::write(out.join("stats.json"), serde_json::to_string_pretty(&stats).unwrap() + "\n")?;
            println!(
                "c = {}  m = {}  beta = {}  max across-cluster C = {}",
                res.clustering.c,
                res.m,
                fmt_f64(res.calibration.beta),
                sep.max_across.map_or_else(|| "n/a".to_string(), fmt_f64)
            );
        }
        Command::Calibrate { input, h, trace } => {
            let ps = input.load()?;
            let cal = calibrate_beta(&squared_distances(&ps)?, h)?;
            if trace {
                println!("{}", serde_json::to_string_pretty(&cal).unwrap());
            } else {
                println!("beta = {}", fmt_f64(cal.beta));
                println!("achieved_F = {}", fmt_f64(cal.achieved_f));
            }
        }
        Command::Spectrum { input, pipeline, rows, out } => {
            let ps = input.load()?;
            let cfg = pipeline.config(input.seed);
            let res = cluster_pipeline(&ps, &cfg)?;
            let table = spectrum_report(&res.decomposition, &res.affinity, rows.unwrap_or(cfg.p))?;
            write_out(out.as_deref(), &spectrum_csv(&table))?;
        }
        Command::Embed { input, pipeline, k, out } => {
            let ps = input.load()?;
            let res = cluster_pipeline(&ps, &pipeline.config(input.seed))?;
            let emb = embedding(&res.decomposition, res.m, k)?;
            write_out(out.as_deref(), &matrix_csv(&emb.coords))?;
        }
        Command::Windows { pgm, window, stride, out } => {
            let img = parse_pgm(&read_bytes(&pgm)?)?;
            let ps = extract_windows(&img, window, stride)?;
            write_out(out.as_deref(), &points_csv(&ps))?;
        }
        Command::Diffuse { input, pipeline, index, m, out } => {
            let ps = input.load()?;
            let cfg = pipeline.config(input.seed);
            let (kernel, _, _) = pipeline_kernel(&ps, &cfg)?;
            let m = match m {
                Some(m) => m as usize,
                None => {
                    let dec = eig_sym(&build_m(&kernel, &degrees(&kernel, cfg.sigma)?))?;
                    select_m(&dec.eigenvalues, cfg.p.min(ps.n()), cfg.zeta)?
                }
            };
            let p = stochastic_matrix(&kernel);
            let profile = diffusion_profile(&p, m, index)?;
            let tv = tv_matrix(&diffusion_matrix(&p, m)?);
            fs::create_dir_all(&out)?;
            fs::write(out.join("profile.csv"), profile_csv(&profile))?;
            fs::write(out.join("tv.csv"), matrix_csv(&tv))?;
            println!("m = {m}");
        }
        Command::Generate { gen, seed, out, labels } => {
            let ps = gen.generate(seed)?;
            write_out(out.as_deref(), &points_csv(&ps))?;
            if let Some(path) = labels {
                let text: String = gen.labels().iter().map(|l| format!("{l}\n")).collect();
                fs::write(path, text)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
