use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gram_spectra::pipeline::{self, Config};
use gram_spectra::report::{Doc, QuarticInput};
use gram_spectra::spectra::{self, SliceBox};
use gram_spectra::{Error, Result};

/// Gram spectrahedra of ternary quartics.
#[derive(Parser)]
#[command(name = "gram-spectra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML file with a `[coefficients]` table keyed by exponent strings.
    input: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_rank: Option<f64>,
    #[arg(long)]
    tol_cert: Option<f64>,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Full analysis report.
    Analyze(Common),
    Bitangents(Common),
    /// Steiner complexes and rank-3 Gram tensors.
    Steiner(Common),
    Graph(Common),
    /// One-dimensional faces and extreme points of two-dimensional faces.
    Faces(Common),
    /// Extreme points from random linear objectives.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = pipeline::DEFAULT_SAMPLES)]
        n: usize,
    },
    /// Determinant and smallest eigenvalue on a grid in the affine span of
    /// four psd rank-3 tensors.
    Slice {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 21)]
        grid: usize,
        /// Lower and upper bound of the cube of slice parameters.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
        bounds: Option<Vec<f64>>,
    },
}

fn load(common: &Common) -> Result<(QuarticInput, Config)> {
    let text = std::fs::read_to_string(&common.input)
        .map_err(|e| Error::Io(format!("{}: {e}", common.input.display())))?;
    let input = QuarticInput::parse(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", common.input.display())))?;
    let mut cfg = Config { tol: input.tolerances, ..Config::default() };
    cfg.seed = common.seed.or(input.seed).unwrap_or(pipeline::DEFAULT_SEED);
    if let Some(t) = common.tol_rank {
        cfg.tol.rank = t;
    }
    if let Some(t) = common.tol_cert {
        cfg.tol.cert = t;
    }
    Ok((input, cfg))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let (common, text) = match &cli.command {
        Command::Analyze(c) => {
            let (input, cfg) = load(c)?;
            (c, pipeline::analyze(&input.form(), &cfg)?.report().render())
        }
        Command::Bitangents(c) => {
            let (input, cfg) = load(c)?;
            (c, pipeline::bitangents_doc(&pipeline::bitangent_stage(&input.form(), &cfg)?).render())
        }
        Command::Steiner(c) => {
            let (input, cfg) = load(c)?;
            let f = input.form();
            let b = pipeline::bitangent_stage(&f, &cfg)?;
            (c, pipeline::steiner_doc(&pipeline::steiner_stage(&f, &b, &cfg)?).render())
        }
        Command::Graph(c) => {
            let (input, cfg) = load(c)?;
            let f = input.form();
            let b = pipeline::bitangent_stage(&f, &cfg)?;
            let s = pipeline::steiner_stage(&f, &b, &cfg)?;
            (c, pipeline::graph_doc(&pipeline::graph_stage(&s, &cfg)?).render())
        }
        Command::Faces(c) => {
            let (input, cfg) = load(c)?;
            let f = input.form();
            let b = pipeline::bitangent_stage(&f, &cfg)?;
            let s = pipeline::steiner_stage(&f, &b, &cfg)?;
            let fs = pipeline::face_stage(&f, &b, &s, &cfg)?;
            let doc = Doc::map([("graph", pipeline::graph_doc(&fs.graph)), ("faces", pipeline::faces_doc(&fs))]);
            (c, doc.render())
        }
        Command::Sample { common, n } => {
            let (input, cfg) = load(common)?;
            let f = input.form();
            spectra::interior_point(&gram_spectra::gram::gram_pencil(&f))?;
            let run = spectra::sample_extreme_points_with(&f, *n, cfg.seed, cfg.tol.solver_rank);
            (common, pipeline::sampling_doc(&run, cfg.seed).render())
        }
        Command::Slice { common, grid, bounds } => {
            let (input, cfg) = load(common)?;
            let f = input.form();
            let b = pipeline::bitangent_stage(&f, &cfg)?;
            let s = pipeline::steiner_stage(&f, &b, &cfg)?;
            let g = pipeline::graph_stage(&s, &cfg)?;
            let bx = match bounds.as_deref() {
                Some([lo, hi]) => SliceBox { lo: [*lo; 3], hi: [*hi; 3] },
                _ => SliceBox::default(),
            };
            let slice = spectra::pencil_determinant_slice(&pipeline::slice_tensors(&s, &g), *grid, &bx)?;
            (common, pipeline::slice_table(&slice))
        }
    };
    emit(common.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
