use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cotlift::verify::{decompose, Verdict};
use cotlift::workbench::{
    bracket, build_lift, catalog, catalog_entry, catalog_source, in_frame, render_components,
    render_decomposition, run_check, run_suite, BivectorBlocks, Condition, FrameChoice, GeometryManifest,
    LiftKind, Lifted, CATALOG_NAMES,
};
use cotlift::{Error, Result};

#[derive(Parser)]
#[command(name = "cotlift", version, about = "Lifts of Poisson structures to cotangent bundles, decided exactly")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a condition for a lift of the manifest's data.
    Check {
        /// Manifest path, or `catalog:<name>` for a shipped entry.
        manifest: String,
        #[arg(long, default_value = "none")]
        lift: LiftKind,
        #[arg(long)]
        condition: Condition,
        #[arg(long, default_value = "text")]
        report: ReportFormat,
    },
    /// Build a lifted bivector and write its blocks.
    Lift {
        manifest: String,
        #[arg(long)]
        kind: LiftKind,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "natural")]
        frame: FrameChoice,
    },
    /// Split a polynomially graded lift into its coefficient families.
    Decompose {
        manifest: String,
        #[arg(long)]
        lift: LiftKind,
        #[arg(long, default_value = "text")]
        report: ReportFormat,
    },
    /// Schouten bracket of two named bivectors (`w0`, `pullback`, or a lift).
    Bracket {
        manifest: String,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long, default_value = "natural")]
        frame: FrameChoice,
    },
    /// The shipped example catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
    /// Run every expectation and compare with the shipped verdict table.
    Run {
        #[arg(long, default_value = "text")]
        report: ReportFormat,
    },
    /// Print or write an entry's manifest.
    Export {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(source: &str) -> Result<GeometryManifest> {
    match source.strip_prefix("catalog:") {
        Some(name) => catalog_entry(name),
        None => GeometryManifest::load(Path::new(source)),
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Pass => 0,
        Verdict::Fail | Verdict::NotApplicable => 1,
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check {
            manifest,
            lift,
            condition,
            report,
        } => {
            let m = load(&manifest)?;
            let r = run_check(&m, lift, condition)?;
            match report {
                ReportFormat::Text => print!("{}", r.to_text()),
                ReportFormat::Structured => println!("{}", r.to_json()),
            }
            Ok(verdict_code(r.verdict))
        }
        Command::Lift {
            manifest,
            kind,
            out,
            frame,
        } => {
            let m = load(&manifest)?;
            let text = match build_lift(&m, kind)? {
                Lifted::Base(w) => format!("# bivector on the base\n{}\n", w),
                Lifted::Phase(w) => BivectorBlocks::new(&in_frame(&m, kind, &w, frame)?).to_toml(),
            };
            write_or_print(out.as_deref(), &text)?;
            Ok(0)
        }
        Command::Decompose { manifest, lift, report } => {
            let m = load(&manifest)?;
            let w = match build_lift(&m, lift)? {
                Lifted::Phase(w) => w,
                Lifted::Base(_) => return Err(Error::Manifest("decompose needs a lift other than `none`".into())),
            };
            let d = decompose(&w)?;
            match report {
                ReportFormat::Text => print!("{}", render_decomposition(&d)),
                ReportFormat::Structured => {
                    let mut doc: BTreeMap<&str, BTreeMap<String, String>> = BTreeMap::new();
                    for (name, t) in [("w", &d.w), ("phi", &d.phi), ("a", &d.a), ("eta", &d.eta), ("b", &d.b), ("c", &d.c)] {
                        let entries = t
                            .entries()
                            .filter(|(_, v)| !v.is_zero())
                            .map(|(idx, v)| {
                                let idx: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
                                (idx.join(","), v.to_string())
                            })
                            .collect();
                        doc.insert(name, entries);
                    }
                    println!("{}", serde_json::to_string_pretty(&doc).expect("serializes"));
                }
            }
            Ok(0)
        }
        Command::Bracket {
            manifest,
            left,
            right,
            frame,
        } => {
            let m = load(&manifest)?;
            let b = bracket(&m, &left, &right)?;
            let shown = match frame {
                FrameChoice::Natural => b,
                FrameChoice::Adapted => in_frame(&m, LiftKind::Horizontal, &b, frame)?,
            };
            print!("{}", render_components(&shown));
            Ok(0)
        }
        Command::Catalog { action } => match action {
            CatalogAction::List => {
                for m in catalog() {
                    println!("{:<24} n={}  {}", m.name, m.n, m.description);
                }
                Ok(0)
            }
            CatalogAction::Run { report } => {
                let suite = run_suite(&catalog())?;
                match report {
                    ReportFormat::Text => {
                        print!("{}", suite.to_text());
                        println!("elapsed: {} ms", suite.elapsed_ms);
                    }
                    ReportFormat::Structured => {
                        println!("{}", serde_json::to_string_pretty(&suite).expect("serializes"))
                    }
                }
                Ok(if suite.regressions().is_empty() { 0 } else { 1 })
            }
            CatalogAction::Export { name, out } => {
                if !CATALOG_NAMES.contains(&name.as_str()) {
                    return Err(Error::Unknown {
                        kind: "catalog entry".into(),
                        name,
                    });
                }
                write_or_print(out.as_deref(), catalog_source(&name)?)?;
                Ok(0)
            }
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
