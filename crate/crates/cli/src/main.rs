use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cube_blowup::blowup::BlowupError;
use cube_blowup::dipath::{count_lifts, lift_path, PathError};
use cube_blowup::export::{blowup_document, to_dot, to_off};
use cube_blowup::hda::{geometric_model, interpret_program, parse};
use cube_blowup::pcs::{tensor, PcsError};
use cube_blowup::{build_blowup, fiber, subdivide, BlowupComplex, CubePath, PrecubicalSet};

/// Precubical sets, subdivisions and combinatorial blowups.
#[derive(Parser)]
#[command(name = "cube-blowup", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a precubical set file.
    Validate { input: PathBuf },
    /// Tensor product of two precubical sets.
    Tensor {
        left: PathBuf,
        right: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// The s-subdivision of a precubical set.
    Subdivide {
        #[arg(short = 's', long = "factor", value_parser = clap::value_parser!(u32).range(1..))]
        s: u32,
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fibers and restrictions of the n-blowup, with a summary of fiber sizes.
    Blowup {
        #[arg(short)]
        n: usize,
        input: PathBuf,
        /// Write the blowup JSON here.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print the blowup JSON instead of the summary.
        #[arg(long)]
        json: bool,
    },
    /// The germs over one cube.
    Fibers {
        #[arg(short)]
        n: usize,
        #[arg(long)]
        cube: String,
        input: PathBuf,
    },
    /// All lifts of a cube path.
    Lift {
        #[arg(short)]
        n: usize,
        #[arg(long)]
        path: PathBuf,
        input: PathBuf,
    },
    /// Geometric model of a program given as a file or as inline text.
    Model {
        #[arg(long)]
        program: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render the n-blowup as a DOT graph or an OFF mesh.
    Export {
        #[arg(long, value_enum)]
        format: Format,
        #[arg(short)]
        n: usize,
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Off,
}

enum Failure {
    Validation(String),
    Io(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Io(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Io(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<BlowupError> for Failure {
    fn from(e: BlowupError) -> Self {
        Failure::Internal(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<PrecubicalSet, Failure> {
    let text = read(path)?;
    PrecubicalSet::from_json(&text).map_err(|e| match e {
        PcsError::Malformed(m) => Failure::Io(format!("{}: {m}", path.display())),
        other => Failure::Validation(format!("{}: {other}", path.display())),
    })
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_line(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("values serialize");
    s.push('\n');
    s
}

fn summary(b: &BlowupComplex) -> String {
    let p = b.base();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}-blowup: {} germs over {} cubes",
        b.n(),
        b.total(),
        p.len()
    );
    let _ = writeln!(out, "{:>6}  {:>6}  examples", "fiber", "cubes");
    for (size, cubes) in b.size_classes() {
        let examples: Vec<&str> = cubes.iter().take(3).map(|&c| p.key(c)).collect();
        let more = if cubes.len() > 3 { " ..." } else { "" };
        let _ = writeln!(
            out,
            "{size:>6}  {:>6}  {}{more}",
            cubes.len(),
            examples.join(" ")
        );
    }
    out
}

fn configure_threads() -> Result<(), Failure> {
    let threads = match std::env::var("CUBE_BLOWUP_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Failure::Io(format!("CUBE_BLOWUP_THREADS must be a number, got `{v}`")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Internal(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { input } => {
            let p = load(&input)?;
            println!("ok: {} cubes, counts {:?}", p.len(), p.counts());
        }
        Command::Tensor {
            left,
            right,
            output,
        } => {
            let t = tensor(&load(&left)?, &load(&right)?);
            emit(&t.to_json(), output.as_deref())?;
        }
        Command::Subdivide { s, input, output } => {
            let sub = subdivide(&load(&input)?, s);
            emit(&sub.set().to_json(), output.as_deref())?;
        }
        Command::Blowup {
            n,
            input,
            output,
            json,
        } => {
            let b = build_blowup(&load(&input)?, n)?;
            let doc = blowup_document(&b).to_json();
            if let Some(path) = output.as_deref() {
                emit(&doc, Some(path))?;
            }
            if json {
                print!("{doc}");
            } else {
                print!("{}", summary(&b));
            }
        }
        Command::Fibers { n, cube, input } => {
            let p = load(&input)?;
            let c = p
                .cell(&cube)
                .ok_or_else(|| Failure::Validation(format!("unknown cube `{cube}`")))?;
            let germs: Vec<_> = fiber(&p, c, n)?.iter().map(|q| q.record()).collect();
            let value = serde_json::json!({ "cube": cube, "n": n, "germs": germs });
            print!("{}", json_line(&value));
        }
        Command::Lift { n, path, input } => {
            let p = load(&input)?;
            let cube_path = CubePath::from_json(&read(&path)?).map_err(|e| match e {
                PathError::Json(e) => Failure::Io(format!("{}: {e}", path.display())),
                other => Failure::Validation(other.to_string()),
            })?;
            let b = build_blowup(&p, n)?;
            let lift_err = |e: PathError| match e {
                PathError::Blowup(e) => Failure::from(e),
                other => Failure::Validation(other.to_string()),
            };
            let count = count_lifts(&b, &cube_path).map_err(lift_err)?;
            let lifts: Vec<Vec<usize>> = lift_path(&b, &cube_path)
                .map_err(lift_err)?
                .iter()
                .map(|l| l.indices())
                .collect();
            let value = serde_json::json!({ "count": count as u64, "lifts": lifts });
            print!("{}", json_line(&value));
        }
        Command::Model { program, output } => {
            let path = Path::new(&program);
            let text = if path.is_file() {
                read(path)?
            } else {
                program.clone()
            };
            let prog = parse(&text).map_err(|e| Failure::Validation(format!("program: {e}")))?;
            let hda = interpret_program(&prog);
            hda.check().map_err(Failure::Internal)?;
            let model = geometric_model(&hda);
            emit(&model.set.to_json(), output.as_deref())?;
            eprintln!(
                "program: counts {:?}; model: counts {:?}; {} cells removed, {} restored by the span",
                hda.set.counts(),
                model.set.counts(),
                model.removed.len(),
                model.restored.len()
            );
        }
        Command::Export {
            format,
            n,
            input,
            output,
        } => {
            let b = build_blowup(&load(&input)?, n)?;
            let text = match format {
                Format::Dot => to_dot(&b),
                Format::Off => to_off(&b),
            };
            emit(&text, output.as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = configure_threads().and_then(|()| run(cli)) {
        eprintln!("error: {}", f.message());
        return ExitCode::from(f.code());
    }
    ExitCode::SUCCESS
}
