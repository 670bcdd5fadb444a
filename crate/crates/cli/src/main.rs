//! Command-line frontend: classify, decide, witness, verify, reduce, lemma
//! and subgroup, all emitting machine-readable JSON on stdout.
//!
//! Exit codes: 0 affirmative/valid, 1 negative/invalid (well-formed input,
//! negative answer), 2 input error (parse or validation), 3 internal error.

use std::fmt::Display;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use kurosh_core::{
    build_gog_cover, build_torsion_removal, build_witness, decide, format_group, parse_group,
    step_to_cover, verify_witness, BuildError, Certificate, GraphOfGroupsSpec, Presentation,
    QIClass, StepFactor, WitnessCertificate, WitnessChain,
};

#[derive(Parser)]
#[command(name = "kurosh", version)]
#[command(about = "Commensurability of free products of finitely generated abelian groups")]
struct Cli {
    /// Pretty-print JSON output
    #[arg(long, global = true)]
    pretty: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a group expression by its coarse geometric type
    Classify {
        /// Group expression, e.g. "Z^2 * Z/4" or "(Z x Z/2) * Z"
        expr: String,
    },
    /// Decide commensurability and quasi-isometry of two groups
    Decide { left: String, right: String },
    /// Build a machine-checkable commensurability witness
    Witness {
        left: String,
        right: String,
        /// Write the witness certificate JSON here ("-" for stdout)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Verify a witness certificate file ("-" for stdin)
    Verify { path: PathBuf },
    /// Pass to a torsion-free finite-index subgroup, with certificate
    Reduce { expr: String },
    /// Free a graph of groups (JSON file, "-" for stdin) into a free product
    Lemma {
        path: PathBuf,
        /// Also emit the covering graph as DOT ("-" replaces the summary)
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Kurosh decomposition of the subgroup given by a cover action file
    Subgroup {
        expr: String,
        /// JSON file with {"degree": d, "factors": [{"index", "perms"}]}
        action: PathBuf,
    },
}

const OK: u8 = 0;
const NEGATIVE: u8 = 1;
const INPUT_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(code) => ExitCode::from(code),
        Err(_) => {
            eprintln!("error: internal invariant violated (this is a bug)");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> u8 {
    let emit = |value: &Value| {
        if cli.pretty {
            println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
        } else {
            println!("{}", serde_json::to_string(value).expect("serializable"));
        }
    };
    match cli.command {
        Command::Classify { expr } => cmd_classify(&expr, &emit),
        Command::Decide { left, right } => cmd_decide(&left, &right, &emit),
        Command::Witness {
            left,
            right,
            output,
        } => cmd_witness(&left, &right, output.as_deref(), &emit, cli.pretty),
        Command::Verify { path } => cmd_verify(&path, &emit),
        Command::Reduce { expr } => cmd_reduce(&expr, &emit),
        Command::Lemma { path, dot } => cmd_lemma(&path, dot.as_deref(), &emit),
        Command::Subgroup { expr, action } => cmd_subgroup(&expr, &action, &emit),
    }
}

fn input_error(context: &str, e: impl Display) -> u8 {
    eprintln!("error: {context}: {e}");
    INPUT_ERROR
}

fn class_json(class: &QIClass) -> Value {
    match class {
        QIClass::Finite => json!({"class": "finite"}),
        QIClass::TwoEnded => json!({"class": "two_ended"}),
        QIClass::OneEnded(rank) => json!({"class": "one_ended", "rank": rank}),
        QIClass::InfEnds(signature) => {
            let ranks: Vec<usize> = signature.iter().copied().collect();
            json!({"class": "inf_ends", "signature": ranks})
        }
    }
}

fn parse_or_report(expr: &str) -> Result<Presentation, u8> {
    parse_group(expr).map_err(|e| input_error("cannot parse group expression", e))
}

fn cmd_classify(expr: &str, emit: &dyn Fn(&Value)) -> u8 {
    match parse_or_report(expr) {
        Ok(p) => {
            emit(&class_json(&p.classify()));
            OK
        }
        Err(code) => code,
    }
}

fn cmd_decide(left: &str, right: &str, emit: &dyn Fn(&Value)) -> u8 {
    let (l, r) = match (parse_or_report(left), parse_or_report(right)) {
        (Ok(l), Ok(r)) => (l, r),
        (Err(code), _) | (_, Err(code)) => return code,
    };
    let verdict = decide(&l, &r);
    emit(&json!({
        "commensurable": verdict.commensurable,
        "quasi_isometric": verdict.quasi_isometric,
        "left": class_json(&verdict.left_class),
        "right": class_json(&verdict.right_class),
    }));
    if verdict.commensurable {
        OK
    } else {
        NEGATIVE
    }
}

fn cmd_witness(
    left: &str,
    right: &str,
    output: Option<&Path>,
    emit: &dyn Fn(&Value),
    pretty: bool,
) -> u8 {
    let (l, r) = match (parse_or_report(left), parse_or_report(right)) {
        (Ok(l), Ok(r)) => (l, r),
        (Err(code), _) | (_, Err(code)) => return code,
    };
    let (chain_left, chain_right) = match build_witness(&l, &r) {
        Ok(chains) => chains,
        Err(BuildError::ClassMismatch { left, right }) => {
            emit(&json!({
                "commensurable": false,
                "left": class_json(&left),
                "right": class_json(&right),
            }));
            return NEGATIVE;
        }
        Err(other) => panic!("witness construction failed unexpectedly: {other}"),
    };
    let certificate = WitnessCertificate::from_chains(&chain_left, &chain_right);
    let cert_json = serde_json::to_value(&certificate).expect("serializable");
    let mut wrote_to_stdout = false;
    if let Some(path) = output {
        let text = if pretty {
            serde_json::to_string_pretty(&cert_json).expect("serializable")
        } else {
            serde_json::to_string(&cert_json).expect("serializable")
        };
        if path == Path::new("-") {
            println!("{text}");
            wrote_to_stdout = true;
        } else if let Err(e) = fs::write(path, text + "\n") {
            return input_error("cannot write certificate", e);
        }
    }
    if !wrote_to_stdout {
        emit(&json!({
            "commensurable": true,
            "final": format_group(&chain_left.final_presentation),
            "left_index": chain_left.total_index,
            "right_index": chain_right.total_index,
        }));
    }
    OK
}

fn read_input(path: &Path) -> std::io::Result<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        Ok(text)
    } else {
        fs::read_to_string(path)
    }
}

fn cmd_verify(path: &Path, emit: &dyn Fn(&Value)) -> u8 {
    let text = match read_input(path) {
        Ok(text) => text,
        Err(e) => return input_error("cannot read certificate", e),
    };
    let witness: WitnessCertificate = match serde_json::from_str(&text) {
        Ok(w) => w,
        Err(e) => return input_error("malformed certificate JSON", e),
    };
    match verify_witness(&witness) {
        Ok(summary) => {
            emit(&json!({
                "ok": true,
                "final": format_group(&summary.final_presentation),
                "left_index": summary.left_index,
                "right_index": summary.right_index,
            }));
            OK
        }
        Err(failure) => {
            emit(&json!({"ok": false, "error": failure.to_string()}));
            NEGATIVE
        }
    }
}

fn cmd_reduce(expr: &str, emit: &dyn Fn(&Value)) -> u8 {
    let p = match parse_or_report(expr) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let mut chain = WitnessChain::identity(p.clone());
    chain.push(build_torsion_removal(&p));
    let certificate = Certificate::from_chain(&chain);
    emit(&json!({
        "presentation": format_group(&chain.final_presentation),
        "index": chain.total_index,
        "certificate": serde_json::to_value(&certificate).expect("serializable"),
    }));
    OK
}

fn cmd_lemma(path: &Path, dot: Option<&Path>, emit: &dyn Fn(&Value)) -> u8 {
    let text = match read_input(path) {
        Ok(text) => text,
        Err(e) => return input_error("cannot read graph of groups", e),
    };
    let spec = match GraphOfGroupsSpec::from_json(&text) {
        Ok(spec) => spec,
        Err(e) => return input_error("invalid graph of groups", e),
    };
    let cover = match build_gog_cover(&spec) {
        Ok(cover) => cover,
        Err(e) => return input_error("cannot build cover", e),
    };
    let mut dot_on_stdout = false;
    if let Some(dot_path) = dot {
        let rendered = cover.graph.to_dot(&spec);
        if dot_path == Path::new("-") {
            print!("{rendered}");
            dot_on_stdout = true;
        } else if let Err(e) = fs::write(dot_path, rendered) {
            return input_error("cannot write DOT file", e);
        }
    }
    if !dot_on_stdout {
        emit(&json!({
            "presentation": format_group(&cover.presentation),
            "index": cover.index,
            "vertices": cover.graph.vertex_count(),
            "edges": cover.graph.edge_count(),
            "cycle_rank": cover.graph.cycle_rank(),
        }));
    }
    OK
}

/// Cover action file: one certificate step without the result claim.
#[derive(Deserialize)]
struct ActionFile {
    degree: usize,
    #[serde(default)]
    factors: Vec<StepFactor>,
}

fn cmd_subgroup(expr: &str, action_path: &Path, emit: &dyn Fn(&Value)) -> u8 {
    let base = match parse_or_report(expr) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let text = match read_input(action_path) {
        Ok(text) => text,
        Err(e) => return input_error("cannot read action file", e),
    };
    let action: ActionFile = match serde_json::from_str(&text) {
        Ok(a) => a,
        Err(e) => return input_error("malformed action JSON", e),
    };
    let step = kurosh_core::CertificateStep {
        degree: action.degree,
        factors: action.factors,
        result: String::new(),
    };
    let cover = match step_to_cover(&base, &step) {
        Ok(cover) => cover,
        Err(kind) => {
            let failure = kurosh_core::VerifyFailure {
                side: None,
                step: None,
                kind,
            };
            emit(&json!({"ok": false, "violation": failure.to_string()}));
            return NEGATIVE;
        }
    };
    if let Err(violation) = cover.validate() {
        emit(&json!({"ok": false, "violation": violation.to_string()}));
        return NEGATIVE;
    }
    let subgroup = cover.subgroup_presentation();
    emit(&json!({
        "presentation": format_group(&subgroup),
        "index": cover.degree,
        "chi_base": base.chi().to_string(),
        "chi_subgroup": subgroup.chi().to_string(),
        "chi_ok": true,
    }));
    OK
}
