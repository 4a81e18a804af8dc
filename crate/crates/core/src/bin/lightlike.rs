use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lightlike::mesh::import_mesh;
use lightlike::pipeline::{run_pipeline, solve_polygon, write_meshes, write_outputs, Mode, PipelineConfig, Stage};
use lightlike::tessellate::{assign_heights, classify, js_check};
use lightlike::verify::ImplicitSurface;

/// Maximal graphs over polygons with lightlike boundary data, and their periodic extensions.
#[derive(Parser)]
#[command(name = "lightlike", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the classification of the polygon.
    Classify(Common),
    /// Check the balance and subdomain conditions.
    CheckJs(Common),
    /// Solve for the jump points and print the solver report.
    Solve(Common),
    /// Run the whole pipeline and write meshes and reports.
    Build(Common),
    /// Run the whole pipeline and print the verification report, writing nothing.
    Verify(Common),
    /// Run the whole pipeline and write only the meshes and their annotation sidecars.
    Export(Common),
    /// Evaluate an implicit surface on the vertices of an exported mesh.
    CheckMesh {
        mesh: PathBuf,
        #[arg(long)]
        surface: ImplicitSurface,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    copies: Option<usize>,
    #[arg(long)]
    sheets: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    tol_newton: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
}

impl Common {
    fn load(&self) -> lightlike::Result<PipelineConfig> {
        let mut c: PipelineConfig = serde_json::from_str(&std::fs::read_to_string(&self.config)?)?;
        if let Some(m) = self.mode {
            c.mode = m;
        }
        if self.radius.is_some() {
            c.radius = self.radius;
        }
        if self.copies.is_some() {
            c.copies = self.copies;
        }
        if self.sheets.is_some() {
            c.sheets = self.sheets;
        }
        if let Some(r) = self.resolution {
            c.sampling.resolution = r;
        }
        if let Some(t) = self.tol_newton {
            c.tolerances.tol_newton = t;
        }
        if self.out_dir.is_some() {
            c.output.dir = self.out_dir.clone();
        }
        if self.name.is_some() {
            c.output.name = self.name.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

fn print_json<T: Serialize>(v: &T) {
    match serde_json::to_string_pretty(v) {
        Ok(s) => println!("{s}"),
        Err(e) => eprintln!("error: {e}"),
    }
}

fn failure(stage: Stage, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error [{stage}]: {msg}");
    ExitCode::from(stage.exit_code() as u8)
}

fn run(cli: Cli) -> ExitCode {
    let common = match &cli.command {
        Command::CheckMesh { mesh, surface, tol } => {
            let m = match import_mesh(mesh) {
                Ok(m) => m,
                Err(e) => return failure(Stage::Config, e),
            };
            let worst = m.vertices.iter().map(|p| surface.residual(p).abs()).fold(0.0, f64::max);
            println!(
                "{{\"surface\": \"{surface}\", \"vertices\": {}, \"max_residual\": {worst:e}, \"tolerance\": {tol:e}}}",
                m.vertices.len()
            );
            return if worst < *tol {
                ExitCode::SUCCESS
            } else {
                failure(Stage::Verify, format!("residual {worst:e} exceeds {tol:e}"))
            };
        }
        Command::Classify(c)
        | Command::CheckJs(c)
        | Command::Solve(c)
        | Command::Build(c)
        | Command::Verify(c)
        | Command::Export(c) => c,
    };
    let cfg = match common.load() {
        Ok(c) => c,
        Err(e) => return failure(Stage::Config, e),
    };
    let vertices = cfg.vertices();
    let labels = cfg.labels_or_default();
    match cli.command {
        Command::Classify(_) => match classify(&vertices) {
            Ok(c) => {
                print_json(&c);
                if c.in_class {
                    ExitCode::SUCCESS
                } else {
                    failure(Stage::Classify, c.reason.unwrap_or_default())
                }
            }
            Err(e) => failure(Stage::Classify, e),
        },
        Command::CheckJs(_) => match js_check(&vertices, &labels) {
            Ok(r) => {
                print_json(&r);
                if r.passes {
                    ExitCode::SUCCESS
                } else {
                    failure(Stage::JsCheck, r.reason.unwrap_or_default())
                }
            }
            Err(e) => failure(Stage::JsCheck, e),
        },
        Command::Solve(_) => {
            let poly = match assign_heights(&vertices, &labels) {
                Ok(p) => p,
                Err(e) => return failure(Stage::Heights, e),
            };
            match solve_polygon(&poly, &cfg.solver_options()) {
                Ok(r) => {
                    print_json(&r);
                    if r.converged {
                        ExitCode::SUCCESS
                    } else {
                        failure(Stage::Solve, "did not converge")
                    }
                }
                Err(e) => failure(Stage::Solve, e),
            }
        }
        Command::Build(_) | Command::Verify(_) | Command::Export(_) => match run_pipeline(&cfg) {
            Ok(out) => {
                if matches!(cli.command, Command::Verify(_)) {
                    print_json(&out.verification);
                    return ExitCode::SUCCESS;
                }
                let dir = cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("."));
                let name = cfg.output.name.clone().unwrap_or_else(|| "surface".into());
                let written = if matches!(cli.command, Command::Export(_)) {
                    write_meshes(&out, &dir, &name)
                } else {
                    write_outputs(&out, &dir, &name)
                };
                match written {
                    Ok(files) => {
                        for f in files {
                            println!("{}", f.display());
                        }
                        ExitCode::SUCCESS
                    }
                    Err(e) => failure(Stage::Export, e),
                }
            }
            Err(f) => {
                if let Some(v) = &f.reports.verification {
                    for c in v.checks.iter().filter(|c| !c.passed) {
                        eprintln!("FAIL {} = {:e} (tolerance {:e})", c.name, c.value, c.tolerance);
                    }
                }
                failure(f.stage, f.message)
            }
        },
        Command::CheckMesh { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    run(Cli::parse())
}
