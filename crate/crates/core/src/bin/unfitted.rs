use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use unfitted::problems::{Geometry, Problem};
use unfitted::solver::SolverMethod;
use unfitted::{run_study, StudyConfig};

#[derive(Parser)]
#[command(name = "unfitted", version, about = "Higher-order unfitted FEM convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study and write CSV/SVG reports.
    Study(StudyArgs),
    /// Write the mesh of a given level as plain text.
    Mesh {
        #[arg(long)]
        geometry: Geometry,
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct StudyArgs {
    /// key = value file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    geometry: Option<Geometry>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    no_deformation: bool,
    #[arg(long)]
    lambda_scale: Option<f64>,
    #[arg(long)]
    gamma_scale: Option<f64>,
    #[arg(long)]
    quad_order: Option<usize>,
    #[arg(long)]
    solver: Option<SolverMethod>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl StudyArgs {
    fn into_config(self) -> unfitted::Result<StudyConfig> {
        let mut c = match &self.config {
            Some(p) => StudyConfig::from_file(p)?,
            None => StudyConfig::default(),
        };
        if let Some(g) = self.geometry {
            c.geometry = g;
        }
        if let Some(k) = self.order {
            c.order = k;
        }
        if let Some(l) = self.levels {
            c.levels = l;
        }
        if self.no_deformation {
            c.deformation = false;
        }
        if let Some(v) = self.lambda_scale {
            c.lambda_scale = v;
        }
        if let Some(v) = self.gamma_scale {
            c.gamma_scale = v;
        }
        if self.quad_order.is_some() {
            c.quad_order = self.quad_order;
        }
        if let Some(s) = self.solver {
            c.solver = s;
        }
        if let Some(t) = self.tol {
            c.tol = t;
        }
        if self.out.is_some() {
            c.out_dir = self.out;
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> unfitted::Result<bool> {
    match cli.command {
        Command::Study(args) => {
            let config = args.into_config()?;
            let report = run_study(&config)?;
            print!("{}", report.summary());
            if let Some(dir) = &config.out_dir {
                println!("wrote {}/{}.{{csv,svg}}", dir.display(), config.tag());
            }
            Ok(report.failure.is_none())
        }
        Command::Mesh { geometry, level, out } => {
            let chain = Problem::new(geometry).mesh_chain(level + 1)?;
            let file = std::fs::File::create(&out)?;
            chain[level].write_text(std::io::BufWriter::new(file))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
