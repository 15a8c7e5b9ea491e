//! `leakcover`: leakage paths, cover properties, program-derived
//! assumptions and checking from the command line.
//!
//! Exit status: 1 when some path is covered, otherwise 2 on errors or
//! undecided paths, otherwise 0.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use leakcover::hdl::FlatNetlist;
use leakcover::mc::{check_cover, compile_ts, CheckOptions, Verdict};
use leakcover::pipeline::{
    load_design, paths_and_properties, run_config, RunConfig, RunInputs, RunLimits, RunMode,
};
use leakcover::ifa::{LabelConfig, PathReport};
use leakcover::property::{emit_file, emit_psl, manifest_entry, parse_psl_file, PropKind};
use leakcover::software::{assemble_with, generate, CoreInterface, Mode, ProgramImage};

#[derive(Parser)]
#[command(name = "leakcover", version, about = "Hardware/software confidentiality co-verification")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List leakage paths from sensitive sources to untrusted sinks.
    Paths {
        #[command(flatten)]
        design: DesignArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Write the JSON report here instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Write one PSL cover property per leakage path.
    Props {
        #[command(flatten)]
        design: DesignArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Output directory for `<path>.psl`, `all.psl` and `manifest.json`.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Print the assume properties of a verification mode.
    Assume {
        #[command(flatten)]
        design: DesignArgs,
        #[command(flatten)]
        program: ProgramArgs,
        #[arg(long, default_value = "used")]
        mode: Mode,
    },
    /// Check the cover properties of a PSL file.
    Check {
        #[command(flatten)]
        design: DesignArgs,
        #[command(flatten)]
        program: ProgramArgs,
        /// PSL file with cover (and optionally assume) directives.
        #[arg(long)]
        psl: PathBuf,
        #[arg(long, default_value = "none")]
        mode: Mode,
        #[arg(long, default_value_t = 20)]
        max_k: usize,
        /// Directory for witness tables of covered properties.
        #[arg(long)]
        witnesses: Option<PathBuf>,
    },
    /// Run the whole flow from a TOML configuration.
    Run {
        config: PathBuf,
        #[arg(long)]
        mode: Option<RunMode>,
        #[arg(long)]
        max_k: Option<usize>,
        #[arg(short, long)]
        jobs: Option<usize>,
        /// Output directory, relative to the working directory.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Assemble a MiniRV program into a hex image and metadata sidecar.
    Asm {
        source: PathBuf,
        /// Hex output; the metadata goes next to it with extension `.json`.
        #[arg(short, long)]
        out: PathBuf,
        /// `NAME=VALUE` constants overriding `.equ`.
        #[arg(short = 'D', long = "define", value_parser = parse_define)]
        defines: Vec<(String, i64)>,
    },
}

#[derive(Args)]
struct DesignArgs {
    /// Verilog sources.
    #[arg(long, required = true, num_args = 1..)]
    rtl: Vec<PathBuf>,
    #[arg(long)]
    top: Option<String>,
    /// Top-level parameter override `NAME=VALUE`.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, u64)>,
    /// Label configuration (TOML).
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    max_paths: Option<usize>,
    #[arg(long)]
    max_edges: Option<usize>,
}

#[derive(Args)]
struct ProgramArgs {
    /// Core interface description (TOML).
    #[arg(long)]
    interface: Option<PathBuf>,
    /// Assembly source or hex image.
    #[arg(long)]
    program: Option<PathBuf>,
    /// Metadata sidecar of a hex image.
    #[arg(long)]
    metadata: Option<PathBuf>,
    #[arg(short = 'D', long = "define", value_parser = parse_define)]
    defines: Vec<(String, i64)>,
    #[arg(long)]
    stack_depth: Option<usize>,
}

fn parse_param(s: &str) -> Result<(String, u64), String> {
    let (k, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let v = match v.strip_prefix("0x") {
        Some(h) => u64::from_str_radix(h, 16),
        None => v.parse(),
    }
    .map_err(|e| e.to_string())?;
    Ok((k.to_string(), v))
}

fn parse_define(s: &str) -> Result<(String, i64), String> {
    let (k, v) = parse_param(s)?;
    Ok((k, v as i64))
}

fn read(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn design(args: &DesignArgs) -> Result<FlatNetlist> {
    let files = args
        .rtl
        .iter()
        .map(|p| Ok((p.display().to_string(), read(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let params: BTreeMap<String, u64> = args.params.iter().cloned().collect();
    Ok(load_design(&files, args.top.as_deref(), &params)?)
}

fn inputs(d: &DesignArgs, p: Option<&ProgramArgs>) -> Result<RunInputs> {
    let netlist = design(d)?;
    let labels = match &d.labels {
        Some(l) => LabelConfig::from_toml(&read(l)?)?.resolve(&netlist)?,
        None => leakcover::ifa::Labels {
            sources: Vec::new(),
            sinks: Vec::new(),
            declassifiers: Default::default(),
        },
    };
    let (interface, program) = match p {
        None => (None, None),
        Some(p) => {
            let iface = p
                .interface
                .as_ref()
                .map(|f| Ok::<_, anyhow::Error>(CoreInterface::from_toml(&read(f)?)?))
                .transpose()?;
            let prog = match &p.program {
                None => None,
                Some(f) if f.extension().is_some_and(|e| e == "s") => {
                    let defs: Vec<(&str, i64)> = p.defines.iter().map(|(k, v)| (k.as_str(), *v)).collect();
                    Some(assemble_with(&read(f)?, &defs)?)
                }
                Some(f) => {
                    let meta = match &p.metadata {
                        Some(m) => read(m)?,
                        None => read(&f.with_extension("json"))?,
                    };
                    Some(ProgramImage::load(&read(f)?, &meta)?)
                }
            };
            (iface, prog)
        }
    };
    Ok(RunInputs {
        netlist,
        labels,
        interface,
        program,
    })
}

fn limits(s: &SearchArgs) -> RunLimits {
    let mut l = RunLimits::default();
    if let Some(n) = s.max_paths {
        l.max_paths = n;
    }
    if let Some(n) = s.max_edges {
        l.max_edges = n;
    }
    l
}

fn write(p: &Path, text: &str) -> Result<()> {
    std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
}

fn exec(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Paths { design, search, out } => {
            if design.labels.is_none() {
                bail!("--labels is required");
            }
            let inp = inputs(&design, None)?;
            let (set, _) = paths_and_properties(&inp, &limits(&search));
            let json = serde_json::to_string_pretty(&PathReport::new(&inp.netlist, &set))? + "\n";
            match out {
                Some(p) => write(&p, &json)?,
                None => print!("{json}"),
            }
            eprintln!("{} paths{}", set.paths.len(), if set.limits_hit() { " (limits hit)" } else { "" });
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Props { design, search, out } => {
            if design.labels.is_none() {
                bail!("--labels is required");
            }
            let inp = inputs(&design, None)?;
            let (set, props) = paths_and_properties(&inp, &limits(&search));
            std::fs::create_dir_all(&out)?;
            let mut manifest = Vec::new();
            for (path, prop) in set.paths.iter().zip(&props) {
                write(&out.join(format!("{}.psl", path.id)), &emit_file(&inp.netlist, std::slice::from_ref(prop)))?;
                manifest.push(manifest_entry(&inp.netlist, path, prop));
            }
            write(&out.join("all.psl"), &emit_file(&inp.netlist, &props))?;
            write(&out.join("manifest.json"), &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
            eprintln!("{} properties written to {}", props.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Assume { design, program, mode } => {
            let inp = inputs(&design, Some(&program))?;
            let set = assumptions(&inp, mode, program.stack_depth)?;
            let net = set.design(&inp.netlist);
            for p in &set.constraints {
                print!("{}", emit_psl(net, p));
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Check {
            design,
            program,
            psl,
            mode,
            max_k,
            witnesses,
        } => {
            let inp = inputs(&design, Some(&program))?;
            let set = assumptions(&inp, mode, program.stack_depth)?;
            let net = set.design(&inp.netlist);
            let props = parse_psl_file(net, &read(&psl)?)?;
            let mut inv = set.invariants();
            inv.extend(props.iter().filter_map(|p| p.invariant().cloned()));
            let base = compile_ts(net, &inv)?;
            let opts = CheckOptions {
                max_k,
                ..CheckOptions::default()
            };
            if let Some(w) = &witnesses {
                std::fs::create_dir_all(w)?;
            }
            let (mut covered, mut unknown) = (0, 0);
            for p in props.iter().filter(|p| p.kind == PropKind::Cover) {
                let r = check_cover(net, &base, p, &opts);
                let detail = match &r.verdict {
                    Verdict::Covered { depth, witness } => {
                        covered += 1;
                        if let Some(w) = &witnesses {
                            write(&w.join(format!("{}.txt", p.name)), &witness.to_table())?;
                        }
                        format!("depth {depth}")
                    }
                    Verdict::Uncoverable { method, depth } => format!("{method:?} at {depth}"),
                    Verdict::Unknown { bound } => {
                        unknown += 1;
                        format!("bound {bound}")
                    }
                };
                println!("{:<24} {:<12} {detail} ({} SAT queries, {} ms)", p.name, r.verdict.name(), r.sat_queries, r.millis);
            }
            Ok(exit_code(covered, unknown))
        }
        Cmd::Run {
            config,
            mode,
            max_k,
            jobs,
            out,
        } => {
            let mut cfg = RunConfig::from_toml(&read(&config)?)?;
            let base = config.parent().unwrap_or(Path::new(".")).to_path_buf();
            if let Some(m) = mode {
                cfg.mode = m;
            }
            if max_k.is_some() {
                cfg.limits.max_k = max_k;
            }
            if let Some(j) = jobs {
                cfg.limits.jobs = j;
            }
            if let Some(o) = out {
                cfg.output = Some(std::env::current_dir()?.join(o));
            }
            match run_config(&cfg, &base) {
                Ok(r) => {
                    print!("{}", r.summary_table());
                    Ok(exit_code(r.summary.covered, r.summary.unknown))
                }
                Err(f) => {
                    if let Some(p) = &f.partial {
                        print!("{}", p.summary_table());
                    }
                    Err(anyhow!(f.error))
                }
            }
        }
        Cmd::Asm { source, out, defines } => {
            let defs: Vec<(&str, i64)> = defines.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            let img = assemble_with(&read(&source)?, &defs)?;
            write(&out, &img.to_hex())?;
            write(&out.with_extension("json"), &(img.metadata_json() + "\n"))?;
            eprintln!("{} words, {} call sites, {} hardware loops", img.words.len(), img.call_sites.len(), img.hwloops.len());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn assumptions(inp: &RunInputs, mode: Mode, depth: Option<usize>) -> Result<leakcover::software::AssumptionSet> {
    if mode == Mode::None {
        return Ok(leakcover::software::AssumptionSet::empty(Mode::None));
    }
    let iface = inp
        .interface
        .as_ref()
        .ok_or_else(|| anyhow!("mode {mode} needs --interface"))?;
    Ok(generate(mode, &inp.netlist, iface, inp.program.as_ref(), depth)?)
}

fn exit_code(covered: usize, unknown: usize) -> ExitCode {
    if covered > 0 {
        ExitCode::from(1)
    } else if unknown > 0 {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    match exec(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
