//! `rexpand`: strengthen PNmatrices by axioms, generate analytic calculi and
//! search proofs in them.
//!
//! Exit codes: 0 success, 1 the consequence fails or no proof exists (or
//! the verification found disagreements), 2 bad input, 3 a resource cap.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rexpand::{
    axiom_consequence_oracle, calculus_for, find_separators, parse_calculus, parse_formula_list, parse_spec, prove,
    render_dot, render_text, sharp_construct, verify_equivalence, write_calculus, write_spec, Countermodel,
    Discriminator, OracleOptions, OracleVerdict, PNMatrix, ProofOptions, SearchOutcome, Sequent, Sharp, Signature,
    SpecFile, StrengthenOptions, SuiteBounds, Verdict,
};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Input {
        path: PathBuf,
        source: rexpand::Error,
    },
    #[error(transparent)]
    Core(#[from] rexpand::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(rexpand::Error::Resource(_)) => 3,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "rexpand", version, about = "Axiom strengthening for PNmatrices and analytic calculi")]
struct Cli {
    /// Worker threads for the parallel parts (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Strengthen a matrix by the axioms in its file.
    Strengthen {
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Cap on good-set search nodes.
        #[arg(long, default_value_t = StrengthenOptions::default().max_nodes)]
        max_nodes: usize,
    },
    /// Decide whether Γ entails Δ in the file's matrix.
    Consequence {
        input: PathBuf,
        #[arg(long, default_value = "")]
        gamma: String,
        #[arg(long, default_value = "")]
        delta: String,
        /// Decide against valuations designating every axiom instance, over a
        /// bounded universe, instead of the matrix alone.
        #[arg(long)]
        axioms_oracle: bool,
        /// Rounds of look-ahead application for the oracle universe.
        #[arg(long, default_value_t = 1)]
        depth: usize,
    },
    /// Generate an analytic calculus (strengthening first if the file has axioms).
    Calculus {
        input: PathBuf,
        /// Maximum separator depth searched when the file lists none.
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Search for an analytic proof.
    Prove {
        calculus: PathBuf,
        #[arg(long, default_value = "")]
        gamma: String,
        #[arg(long, default_value = "")]
        delta: String,
        #[arg(long, value_enum, default_value_t = Render::Text)]
        render: Render,
        #[arg(long, default_value_t = ProofOptions::default().max_nodes)]
        max_nodes: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare the strengthened matrix with the bounded axiom oracle on every
    /// small sequent.
    Verify {
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        vars: u32,
        /// Maximum formula depth.
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = 2)]
        max_side: usize,
        /// Cap on the summed depth of a sequent's formulas.
        #[arg(long, default_value_t = 2)]
        max_total_depth: usize,
        /// Look-ahead rounds of the oracle universe.
        #[arg(long, default_value_t = 1)]
        oracle_depth: usize,
    },
    /// List the maximal total simple refinements.
    Refinements { input: PathBuf },
    /// Find separators and print the partition table.
    Separators {
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Render {
    Text,
    Dot,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Strengthen { input, out, max_nodes } => {
            let spec = read_spec(&input)?;
            let sharp = strengthen(&spec, StrengthenOptions { max_nodes })?;
            emit(out.as_deref(), &write_spec(&strengthened_spec(&spec, &sharp)?, &profile_comments(&spec, &sharp)))?;
            Ok(0)
        }
        Command::Consequence { input, gamma, delta, axioms_oracle, depth } => {
            let spec = read_spec(&input)?;
            let s = sequent(spec.sig(), &gamma, &delta)?;
            let m = &spec.matrix;
            let mut out = String::new();
            let holds = if axioms_oracle {
                match axiom_consequence_oracle(m, &spec.axioms, &s, depth)? {
                    OracleVerdict::Holds => {
                        out.push_str("holds\n");
                        true
                    }
                    OracleVerdict::Candidate(cm) => {
                        out.push_str("fails (candidate countermodel over the bounded universe)\n");
                        write_countermodel(&mut out, m, &cm);
                        false
                    }
                }
            } else {
                match m.consequence(&s) {
                    Verdict::Holds { vacuous } => {
                        out.push_str(if vacuous { "holds (the matrix has no valuations)\n" } else { "holds\n" });
                        true
                    }
                    Verdict::Fails(cm) => {
                        out.push_str("fails\n");
                        write_countermodel(&mut out, m, &cm);
                        false
                    }
                }
            };
            print!("{out}");
            Ok(if holds { 0 } else { 1 })
        }
        Command::Calculus { input, depth, out } => {
            let (m, disc) = discriminated(&input, depth)?;
            let calc = calculus_for(&m, &disc)?;
            let mut comments = vec![format!("generated from {}", input.display())];
            comments.extend(disc.table(&m).lines().map(str::to_string));
            emit(out.as_deref(), &write_calculus(&calc, &comments))?;
            Ok(0)
        }
        Command::Prove { calculus, gamma, delta, render, max_nodes, out } => {
            let text = read(&calculus)?;
            let calc = parse_calculus(&text).map_err(|source| CliError::Input { path: calculus.clone(), source })?;
            let s = sequent(&calc.sig, &gamma, &delta)?;
            match prove(&calc, &s, ProofOptions { max_nodes })? {
                SearchOutcome::Proved(tree) => {
                    let shown = match render {
                        Render::Text => render_text(&tree, &calc.sig),
                        Render::Dot => render_dot(&tree, &s, &calc.sig),
                    };
                    emit(out.as_deref(), &shown)?;
                    Ok(0)
                }
                SearchOutcome::Saturated(state) => {
                    let shown: Vec<String> = state.iter().map(|f| f.display(&calc.sig).to_string()).collect();
                    println!("no proof; saturated branch: {{{}}}", shown.join(", "));
                    Ok(1)
                }
            }
        }
        Command::Verify { input, vars, depth, max_side, max_total_depth, oracle_depth } => {
            let spec = read_spec(&input)?;
            let sharp = strengthen(&spec, StrengthenOptions::default())?;
            let bounds = SuiteBounds { vars, max_depth: depth, max_side, max_total_depth };
            let opts = OracleOptions { depth: oracle_depth, ..OracleOptions::default() };
            let report = verify_equivalence(&spec.matrix, &spec.axioms, &sharp, bounds, opts)?;
            println!("checked {}", report.checked);
            println!("both hold {}", report.both_hold);
            println!("both fail {}", report.both_fail);
            println!("inconclusive {}", report.inconclusive);
            println!("disagreements {}", report.disagreements.len());
            for d in &report.disagreements {
                println!("  {}: {}", d.sequent.display(spec.sig()), d.reason);
            }
            Ok(if report.ok() { 0 } else { 1 })
        }
        Command::Refinements { input } => {
            let m = read_spec(&input)?.matrix;
            for r in m.total_refinements() {
                let labels: Vec<&str> = r.iter().map(|&x| m.label(x)).collect();
                println!("{{{}}}", labels.join(", "));
            }
            Ok(0)
        }
        Command::Separators { input, depth } => {
            let (m, disc) = discriminated(&input, depth)?;
            print!("{}", disc.table(&m));
            Ok(0)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn read_spec(path: &Path) -> Result<SpecFile> {
    parse_spec(&read(path)?).map_err(|source| CliError::Input { path: path.to_path_buf(), source })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sequent(sig: &Signature, gamma: &str, delta: &str) -> Result<Sequent> {
    let g = parse_formula_list(gamma, sig).map_err(|e| CliError::Usage(format!("--gamma: {e}")))?;
    let d = parse_formula_list(delta, sig).map_err(|e| CliError::Usage(format!("--delta: {e}")))?;
    Ok(Sequent::new(g, d))
}

fn strengthen(spec: &SpecFile, opts: StrengthenOptions) -> Result<Sharp> {
    Ok(sharp_construct(&spec.matrix, spec.projection.as_ref(), &spec.axioms, opts)?)
}

/// The strengthened matrix, named by the file's display strings if any.
fn strengthened_matrix(spec: &SpecFile, sharp: &Sharp) -> Result<PNMatrix> {
    if spec.display.is_empty() {
        return Ok(sharp.matrix.clone());
    }
    let labels = sharp.display_labels(&spec.matrix, &spec.display)?;
    Ok(sharp.matrix.clone().with_labels(labels)?)
}

fn strengthened_spec(spec: &SpecFile, sharp: &Sharp) -> Result<SpecFile> {
    let mut out = SpecFile::new(strengthened_matrix(spec, sharp)?);
    out.separators = spec.separators.clone();
    out.projection = Some(sharp.projection.clone());
    Ok(out)
}

fn profile_comments(spec: &SpecFile, sharp: &Sharp) -> Vec<String> {
    let sig = spec.sig();
    let m = &spec.matrix;
    let strings: Vec<String> = sharp.theta.iter().map(|w| w.display(sig).to_string()).collect();
    let mut out = vec![format!("look-aheads: {}", strings.join(" "))];
    let labels = strengthened_matrix(spec, sharp).map(|s| s.labels().to_vec()).unwrap_or_default();
    for (y, profile) in sharp.profiles.iter().enumerate() {
        let mut line = format!("value {} =", labels.get(y).map_or("?", String::as_str));
        for (w, &x) in strings.iter().zip(profile) {
            let _ = write!(line, " {w}:{}", m.label(x));
        }
        out.push(line);
    }
    out.extend(sharp.warnings.iter().map(|w| format!("warning: {w}")));
    out
}

/// The matrix a calculus is built for, with its discriminator: the file's
/// separators when listed, else the first ones found up to `depth`.
fn discriminated(input: &Path, depth: usize) -> Result<(PNMatrix, Discriminator)> {
    let spec = read_spec(input)?;
    let m = if spec.axioms.is_empty() {
        spec.matrix.clone()
    } else {
        strengthened_matrix(&spec, &strengthen(&spec, StrengthenOptions::default())?)?
    };
    let disc = if spec.separators.is_empty() {
        find_separators(&m, depth)
    } else {
        Discriminator::from_separators(&m, &spec.separators)
    };
    let disc = disc.map_err(|pairs| {
        let shown: Vec<String> = pairs.iter().map(|&(x, y)| format!("{}/{}", m.label(x), m.label(y))).collect();
        CliError::Core(rexpand::Error::Discriminator(format!("no separator for {}", shown.join(", "))))
    })?;
    Ok((m, disc))
}

fn write_countermodel(out: &mut String, m: &PNMatrix, cm: &Countermodel) {
    let sig = m.signature();
    for (f, &y) in &cm.assignment {
        let _ = writeln!(out, "  {} = {}", f.display(sig), m.label(y));
    }
}
