//! Command line surface. Exit codes follow one convention everywhere:
//! 0 answers yes (or the operation plainly succeeded), 1 answers no,
//! 2 means the search or sweep gave up before reaching an answer, 64 is
//! a usage error, 65 malformed data, 66 an unreadable input file.

use std::fmt::Display;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::diagram::Diagram;
use crate::formulas::{
    parse_dimacs, parse_graph, FormulaError, DEFAULT_MAX_ASSIGNMENTS, DEFAULT_MAX_HAM_VERTICES,
};
use crate::moves::{
    bounded_search, certify_unlink, CertifyParams, RMoveKind, SearchParams, ALL_KINDS,
};
use crate::reductions::{
    build_alternating_sublink, build_reidemeister_pair, build_splitting_number,
    build_unlink_sublink, build_unlinking_number, structural_checks, verify_assignment, Instance,
    ProblemTag,
};
use crate::render::render_svg;

pub const EXIT_YES: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NOINPUT: i32 = 66;

#[derive(Parser)]
#[command(name = "knotforge", version, about = "Compile formulas and graphs to link diagrams, and verify them")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompileTarget {
    /// Hopf row plus clause loops; is some n+m-component sublink an unlink?
    SatUnlinkSublink,
    /// Everything Whitehead doubled; do n crossing changes unlink it?
    SatUnlinking,
    /// Doubled circles, product loop, threading cable; splitting number n?
    SatSplitting,
    /// Doubled diagram again; does some n+m-sublink have an alternating diagram?
    SatAlternating,
    /// Graph and chain diagrams; 2(m-n+1) moves between them iff a spanning path exists.
    HamReidemeister,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Sat,
    Hampath,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindsArg {
    /// Only crossing-removing R2 moves.
    R2minus,
    /// All five move kinds.
    All,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a DIMACS formula or an edge list into an instance file.
    Compile {
        target: CompileTarget,
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check an instance: structure by default, or a specific assignment,
    /// or sweep all assignments (all spanning paths for graph instances).
    Verify {
        instance: PathBuf,
        /// Bit string, one character per variable, x_1 first.
        #[arg(long, conflicts_with = "all")]
        assignment: Option<String>,
        #[arg(long)]
        all: bool,
    },
    /// Look for a move sequence: to the paired target diagram for
    /// reidemeister-pair instances, to a crossing-free diagram otherwise.
    Search {
        instance: PathBuf,
        /// Move budget; defaults to the instance parameter.
        #[arg(short, long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value = "all")]
        kinds: KindsArg,
        #[arg(long, default_value_t = 200_000)]
        max_states: usize,
    },
    /// Brute-force the source problem directly.
    Oracle {
        kind: OracleKind,
        input: PathBuf,
    },
    /// Report counts, writhe, linking matrix, alternation, split pieces.
    Invariants { diagram: PathBuf },
    /// Draw a diagram (or an instance's first diagram) to SVG.
    Render {
        diagram: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Search for a move sequence to a crossing-free diagram.
    CertifyUnlink {
        diagram: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl Display) -> Failure {
    Failure { code, message: message.to_string() }
}

type CmdResult = Result<i32, Failure>;

fn read_input(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_NOINPUT, format!("{}: {e}", path.display())))
}

fn write_output(path: &PathBuf, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| fail(EXIT_NOINPUT, format!("{}: {e}", path.display())))
}

fn load_instance(path: &PathBuf) -> Result<Instance, Failure> {
    let text = read_input(path)?;
    Instance::import_json(&text).map_err(|e| fail(EXIT_DATA, format!("{}: {e}", path.display())))
}

/// Diagram file, or instance file from which the indexed diagram is taken.
fn load_diagrams(path: &PathBuf) -> Result<Vec<Diagram>, Failure> {
    let text = read_input(path)?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| fail(EXIT_DATA, format!("{}: {e}", path.display())))?;
    if v.get("problem").is_some() {
        let inst = Instance::from_json_value(&v)
            .map_err(|e| fail(EXIT_DATA, format!("{}: {e}", path.display())))?;
        Ok(inst.diagrams)
    } else {
        let d = Diagram::from_json_value(&v)
            .map_err(|e| fail(EXIT_DATA, format!("{}: {e}", path.display())))?;
        Ok(vec![d])
    }
}

fn cmd_compile(target: CompileTarget, input: &PathBuf, output: &PathBuf) -> CmdResult {
    let text = read_input(input)?;
    let inst = match target {
        CompileTarget::HamReidemeister => {
            let g = parse_graph(&text).map_err(|e| fail(EXIT_DATA, e))?;
            build_reidemeister_pair(&g).map_err(|e| fail(EXIT_DATA, e))?
        }
        _ => {
            let f = parse_dimacs(&text).map_err(|e| fail(EXIT_DATA, e))?;
            let built = match target {
                CompileTarget::SatUnlinkSublink => build_unlink_sublink(&f),
                CompileTarget::SatUnlinking => build_unlinking_number(&f),
                CompileTarget::SatSplitting => build_splitting_number(&f),
                CompileTarget::SatAlternating => build_alternating_sublink(&f),
                CompileTarget::HamReidemeister => unreachable!(),
            };
            built.map_err(|e| fail(EXIT_DATA, e))?
        }
    };
    write_output(output, &inst.export_json())?;
    let d = &inst.diagrams[0];
    println!(
        "{}: parameter {}, {} diagram(s), {} components, {} crossings -> {}",
        inst.problem,
        inst.parameter,
        inst.diagrams.len(),
        d.components.len(),
        d.crossings.len(),
        output.display(),
    );
    if let Some(reason) = &inst.trivially_negative {
        println!("note: trivially negative: {reason}");
    }
    Ok(EXIT_YES)
}

fn parse_bits(s: &str) -> Result<Vec<bool>, Failure> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(fail(EXIT_USAGE, format!("assignment must be 0/1 bits, found {other:?}"))),
        })
        .collect()
}

fn cmd_verify(path: &PathBuf, assignment: Option<&str>, all: bool) -> CmdResult {
    let inst = load_instance(path)?;

    if let Some(bits) = assignment {
        if inst.problem == ProblemTag::ReidemeisterPair {
            return Err(fail(EXIT_USAGE, "--assignment applies to formula instances only"));
        }
        let a = parse_bits(bits)?;
        let want = inst.formula.as_ref().map(|f| f.n_vars as usize).unwrap_or(0);
        if a.len() != want {
            return Err(fail(
                EXIT_USAGE,
                format!("assignment has {} bits, formula has {} variables", a.len(), want),
            ));
        }
        let report = verify_assignment(&inst, &a).map_err(|e| fail(EXIT_DATA, e))?;
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        return Ok(if report.verdict { EXIT_YES } else { EXIT_NO });
    }

    if all {
        return match inst.problem {
            ProblemTag::ReidemeisterPair => {
                let g = inst
                    .graph
                    .as_ref()
                    .ok_or_else(|| fail(EXIT_DATA, "instance carries no graph"))?;
                match g.brute_force_ham_path(DEFAULT_MAX_HAM_VERTICES) {
                    Ok(Some(p)) => {
                        println!("spanning path: {:?}", p);
                        Ok(EXIT_YES)
                    }
                    Ok(None) => {
                        println!("no spanning path");
                        Ok(EXIT_NO)
                    }
                    Err(FormulaError::CutoffExceeded(msg)) => {
                        eprintln!("gave up: {msg}");
                        Ok(EXIT_INCONCLUSIVE)
                    }
                    Err(e) => Err(fail(EXIT_DATA, e)),
                }
            }
            _ => {
                let f = inst
                    .formula
                    .as_ref()
                    .ok_or_else(|| fail(EXIT_DATA, "instance carries no formula"))?;
                if f.n_vars >= 63 || (1u64 << f.n_vars) > DEFAULT_MAX_ASSIGNMENTS {
                    eprintln!("gave up: 2^{} assignments exceed the sweep limit", f.n_vars);
                    return Ok(EXIT_INCONCLUSIVE);
                }
                match crate::reductions::exhaustive_verify(&inst).map_err(|e| fail(EXIT_DATA, e))? {
                    Some(report) => {
                        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                        Ok(EXIT_YES)
                    }
                    None => {
                        println!("unsatisfiable: every assignment leaves some clause word alive");
                        Ok(EXIT_NO)
                    }
                }
            }
        };
    }

    let checks = structural_checks(&inst).map_err(|e| fail(EXIT_DATA, e))?;
    let mut ok = true;
    for c in &checks {
        ok &= c.pass;
        println!("{} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(reason) = &inst.trivially_negative {
        println!("note: trivially negative: {reason}");
    }
    Ok(if ok { EXIT_YES } else { EXIT_NO })
}

fn cmd_search(path: &PathBuf, k: Option<usize>, kinds: KindsArg, max_states: usize) -> CmdResult {
    let inst = load_instance(path)?;
    let kinds: Vec<RMoveKind> = match kinds {
        KindsArg::R2minus => vec![RMoveKind::R2Down],
        KindsArg::All => ALL_KINDS.to_vec(),
    };
    let budget = k.unwrap_or(inst.parameter.max(0) as usize);
    let (target_crossings, target_canonical, goal) = match inst.problem {
        ProblemTag::ReidemeisterPair => {
            let d2 = match inst.diagrams.get(1) {
                Some(d2) => d2,
                None => {
                    println!("instance has no target diagram (trivially negative)");
                    return Ok(EXIT_NO);
                }
            };
            (d2.crossings.len(), Some(d2.canonical_bytes()), "the paired target diagram")
        }
        _ => (0, None, "a crossing-free diagram"),
    };
    let params = SearchParams {
        kinds,
        max_moves: budget,
        target_crossings,
        target_canonical,
        max_states,
    };
    let outcome = bounded_search(&inst.diagrams[0], &params).map_err(|e| fail(EXIT_DATA, e))?;
    eprintln!(
        "searched {} states for {goal} within {budget} moves",
        outcome.states_seen
    );
    match outcome.sequence {
        Some(seq) => {
            println!("{}", serde_json::to_string_pretty(&seq).expect("sequence serializes"));
            Ok(EXIT_YES)
        }
        None if outcome.complete => Ok(EXIT_NO),
        None => Ok(EXIT_INCONCLUSIVE),
    }
}

fn cmd_oracle(kind: OracleKind, input: &PathBuf) -> CmdResult {
    let text = read_input(input)?;
    match kind {
        OracleKind::Sat => {
            let f = parse_dimacs(&text).map_err(|e| fail(EXIT_DATA, e))?;
            match f.brute_force_sat(DEFAULT_MAX_ASSIGNMENTS) {
                Ok(solutions) => {
                    if let Some(first) = solutions.first() {
                        let bits: String =
                            first.iter().map(|&b| if b { '1' } else { '0' }).collect();
                        println!("satisfiable: {} assignment(s), first {}", solutions.len(), bits);
                        Ok(EXIT_YES)
                    } else {
                        println!("unsatisfiable");
                        Ok(EXIT_NO)
                    }
                }
                Err(FormulaError::CutoffExceeded(msg)) => {
                    eprintln!("gave up: {msg}");
                    Ok(EXIT_INCONCLUSIVE)
                }
                Err(e) => Err(fail(EXIT_DATA, e)),
            }
        }
        OracleKind::Hampath => {
            let g = parse_graph(&text).map_err(|e| fail(EXIT_DATA, e))?;
            match g.brute_force_ham_path(DEFAULT_MAX_HAM_VERTICES) {
                Ok(Some(p)) => {
                    println!("spanning path: {:?}", p);
                    Ok(EXIT_YES)
                }
                Ok(None) => {
                    println!("no spanning path");
                    Ok(EXIT_NO)
                }
                Err(FormulaError::CutoffExceeded(msg)) => {
                    eprintln!("gave up: {msg}");
                    Ok(EXIT_INCONCLUSIVE)
                }
                Err(e) => Err(fail(EXIT_DATA, e)),
            }
        }
    }
}

fn invariants_json(d: &Diagram) -> serde_json::Value {
    let stats = d.stats();
    let lm = d.linking_matrix();
    let (alternating, per_comp_alt) = d.is_alternating();
    serde_json::json!({
        "crossings": stats.crossing_count,
        "components": stats.component_count,
        "free_circles": stats.free_circles,
        "writhe": stats.writhe,
        "alternating": alternating,
        "alternating_per_component": per_comp_alt,
        "per_component": stats.per_component.iter().map(|(c, s)| {
            (c.to_string(), serde_json::json!({
                "role": d.components[c].role,
                "over_passes": s.over_passes,
                "under_passes": s.under_passes,
                "self_crossings": s.self_crossings,
            }))
        }).collect::<serde_json::Map<_, _>>(),
        "linking_matrix": {
            "components": lm.comps,
            "entries": lm.entries,
        },
        "split_pieces": d.component_groups(),
        "canonical_sha256": d.canonical_sha256(),
    })
}

fn cmd_invariants(path: &PathBuf) -> CmdResult {
    let diagrams = load_diagrams(path)?;
    let values: Vec<serde_json::Value> = diagrams.iter().map(invariants_json).collect();
    let out = if values.len() == 1 {
        values.into_iter().next().expect("one value")
    } else {
        serde_json::Value::Array(values)
    };
    println!("{}", serde_json::to_string_pretty(&out).expect("invariants serialize"));
    Ok(EXIT_YES)
}

fn cmd_render(path: &PathBuf, output: &PathBuf) -> CmdResult {
    let diagrams = load_diagrams(path)?;
    if diagrams.len() > 1 {
        eprintln!("note: instance has {} diagrams, rendering the first", diagrams.len());
    }
    let svg = render_svg(&diagrams[0]).map_err(|e| fail(EXIT_DATA, e))?;
    write_output(output, &svg)?;
    println!("wrote {}", output.display());
    Ok(EXIT_YES)
}

fn cmd_certify_unlink(path: &PathBuf, budget: usize) -> CmdResult {
    let diagrams = load_diagrams(path)?;
    let d = &diagrams[0];
    let lm = d.linking_matrix();
    for (i, &a) in lm.comps.iter().enumerate() {
        for &b in &lm.comps[i + 1..] {
            if lm.get(a, b) != 0 {
                println!("not an unlink: lk({a}, {b}) = {}", lm.get(a, b));
                return Ok(EXIT_NO);
            }
        }
    }
    let params = CertifyParams { max_states: budget, headrooms: vec![2, 4] };
    match certify_unlink(d, &params).map_err(|e| fail(EXIT_DATA, e))? {
        Some(seq) => {
            println!("{}", serde_json::to_string_pretty(&seq).expect("sequence serializes"));
            Ok(EXIT_YES)
        }
        None => {
            eprintln!("no certificate within budget; the diagram may still be an unlink");
            Ok(EXIT_INCONCLUSIVE)
        }
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_YES };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.cmd {
        Cmd::Compile { target, input, output } => cmd_compile(*target, input, output),
        Cmd::Verify { instance, assignment, all } => {
            cmd_verify(instance, assignment.as_deref(), *all)
        }
        Cmd::Search { instance, k, kinds, max_states } => {
            cmd_search(instance, *k, *kinds, *max_states)
        }
        Cmd::Oracle { kind, input } => cmd_oracle(*kind, input),
        Cmd::Invariants { diagram } => cmd_invariants(diagram),
        Cmd::Render { diagram, output } => cmd_render(diagram, output),
        Cmd::CertifyUnlink { diagram, budget } => cmd_certify_unlink(diagram, *budget),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
