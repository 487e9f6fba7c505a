use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use streamcode_core::channel::{apply_mask, corrupt, export_mask, AttackStrategy};
use streamcode_core::codec_repeat::{errcount_property_probe, errors_per_copy, estimate_block_targets};
use streamcode_core::experiment::{run_experiment, verify_code_tables};
use streamcode_core::profile::{parse_bit_hex, Codec};
use streamcode_core::{LinearFunctional, Profile, RepeatCodec, StreamFile, SymbolStream, TensorCodec};

#[derive(Parser)]
#[command(name = "streamcode", version, about = "Stream-decodable codes: encode, corrupt, decode and run experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random message of n bits.
    GenMessage {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode a message with the repetition codec.
    RepeatEncode {
        #[arg(long)]
        profile: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a (possibly corrupted) repetition codeword in one pass.
    RepeatDecode {
        #[arg(long)]
        profile: String,
        /// Memory budget in bits; defaults to the profile's accounting bound.
        #[arg(long)]
        budget_bits: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Clean message; enables the error-count probe and an output check.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Where to write the decoded message.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode a message with the tensor codec.
    LinearEncode {
        #[arg(long)]
        profile: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a linear function of the message from a tensor codeword.
    LinearDecode {
        #[arg(long)]
        profile: String,
        /// File holding the functional as hex, bits packed least significant first.
        #[arg(long)]
        functional: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Corrupt a codeword with the profile's strategy and rate.
    Corrupt {
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the flip mask, for replay.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Apply this mask instead of drawing a new corruption.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Clean message, needed by blockzero_window to aim its attack.
        #[arg(long)]
        message: Option<PathBuf>,
    },
    /// Encode, corrupt and decode every trial of a profile.
    Run {
        #[arg(long)]
        profile: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Re-run an earlier report from its profile echo and seeds and compare.
    Rerun {
        #[arg(long)]
        report: PathBuf,
    },
    /// Check claimed code distances by enumeration.
    VerifyTables {
        #[arg(long)]
        profile: String,
        #[arg(long)]
        report: PathBuf,
    },
    /// Print a built-in profile, or list them.
    Profiles { name: Option<String> },
}

fn load_profile(spec: &str) -> Result<Profile> {
    if let Some(p) = Profile::builtin(spec) {
        return Ok(p);
    }
    let text = fs::read_to_string(spec).with_context(|| format!("{spec} is neither a built-in profile nor a readable file"))?;
    Ok(Profile::parse(&text)?)
}

fn read_stream(path: &Path) -> Result<StreamFile> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    StreamFile::from_bytes(&data).with_context(|| format!("parsing {}", path.display()))
}

fn read_bits(path: &Path, expected: usize) -> Result<Vec<u8>> {
    let bits = read_stream(path)?.to_bits();
    if bits.len() != expected {
        bail!("{} holds {} bits, expected {expected}", path.display(), bits.len());
    }
    Ok(bits)
}

fn write_bits(path: &Path, n: usize, bits: &[u8]) -> Result<()> {
    fs::write(path, StreamFile::bits(n, bits).to_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn repeat_codec(profile: &Profile) -> Result<RepeatCodec> {
    if profile.codec != Codec::Repeat {
        bail!("profile {} is for the {} codec", profile.name, profile.codec);
    }
    let (params, _) = profile.repeat_params()?;
    Ok(RepeatCodec::new(params)?)
}

fn tensor_codec(profile: &Profile) -> Result<TensorCodec> {
    if profile.codec != Codec::Tensor {
        bail!("profile {} is for the {} codec", profile.name, profile.codec);
    }
    let (params, _) = profile.tensor_params()?;
    Ok(TensorCodec::new(params)?)
}

/// Returns whether any deterministic invariant fired.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::GenMessage { n, seed, out } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            write_bits(&out, n, &bits)?;
        }
        Command::RepeatEncode { profile, input, out } => {
            let codec = repeat_codec(&load_profile(&profile)?)?;
            let x = read_bits(&input, codec.msg_len())?;
            write_bits(&out, codec.msg_len(), &codec.encode(&x)?)?;
        }
        Command::RepeatDecode { profile, budget_bits, seed, input, report, reference, out } => {
            let profile = load_profile(&profile)?;
            let codec = repeat_codec(&profile)?;
            let budget = match budget_bits {
                Some(b) => b,
                None => profile.budget_bits(&codec).map_err(|e| anyhow!(e))?,
            };
            let word = read_bits(&input, codec.code_len())?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let run = codec.decode(&mut SymbolStream::new(word.clone()), budget, &mut rng);
            let message = run.tape.bits(codec.msg_len());
            let mut violations = Vec::new();
            if run.ledger.exceeded {
                violations.push(format!("memory ledger peak {} exceeded budget {budget}", run.ledger.peak_bits));
            }
            let mut errcount = serde_json::Value::Null;
            let mut matches = serde_json::Value::Null;
            if let Some(path) = reference {
                let x = read_bits(&path, codec.msg_len())?;
                let clean = codec.encode(&x)?;
                let planted = errors_per_copy(&clean, &word, codec.copy_len());
                errcount = json!(errcount_property_probe(codec.params(), codec.copy_len(), &run, &planted));
                matches = json!(message.as_deref() == Some(x.as_slice()));
                if run.success() && message.as_deref() != Some(x.as_slice()) {
                    violations.push("accepted run wrote a wrong message".into());
                }
            }
            if let (Some(path), Some(m)) = (&out, &message) {
                write_bits(path, codec.msg_len(), m)?;
            }
            write_json(
                &report,
                &json!({
                    "success": run.success(),
                    "error": run.outcome.as_ref().err().map(|e| e.to_string()),
                    "copies_used": run.copies_used,
                    "phase1_copies": run.phase1_copies,
                    "peak_bits": run.ledger.peak_bits,
                    "budget_bits": budget,
                    "violations": violations,
                    "errcount_violations": errcount,
                    "matches_reference": matches,
                    "per_copy_c": run.per_copy_c,
                    "bits_written": run.tape.len(),
                    "symbols_read": run.symbols_read,
                    "seed": seed,
                    "profile": profile.to_text(),
                }),
            )?;
            return Ok(!violations.is_empty());
        }
        Command::LinearEncode { profile, input, out } => {
            let codec = tensor_codec(&load_profile(&profile)?)?;
            let x = read_bits(&input, codec.msg_len())?;
            write_bits(&out, codec.msg_len(), &codec.encode_linear(&x)?)?;
        }
        Command::LinearDecode { profile, functional, seed, input, report } => {
            let profile = load_profile(&profile)?;
            let codec = tensor_codec(&profile)?;
            let hex = fs::read_to_string(&functional).with_context(|| format!("reading {}", functional.display()))?;
            let ell = parse_bit_hex(&hex, codec.msg_len()).map_err(|e| anyhow!(e))?;
            let word = read_bits(&input, codec.code_len())?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let run = codec.linear_dec(&mut SymbolStream::new(word), &LinearFunctional::from_bits(&ell), &mut rng)?;
            write_json(
                &report,
                &json!({
                    "bit": run.bit,
                    "values": run.values,
                    "bottoms": run.values.iter().filter(|v| v.is_none()).count(),
                    "max_live": run.max_live,
                    "live_cap": run.cap,
                    "symbols_read": run.symbols_read,
                    "seed": seed,
                    "profile": profile.to_text(),
                }),
            )?;
        }
        Command::Corrupt { profile, seed, input, out, mask, replay, message } => {
            let profile = load_profile(&profile)?;
            let file = read_stream(&input)?;
            let word = file.to_bits();
            let corrupted = if let Some(path) = replay {
                let m = read_bits(&path, word.len())?;
                apply_mask(&word, &m)
            } else {
                let rho = profile.rho().map_err(|e| anyhow!(e))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let (copy_len, repeat) = match profile.codec {
                    Codec::Repeat => {
                        let c = repeat_codec(&profile)?;
                        (c.copy_len(), Some(c))
                    }
                    Codec::Tensor => (word.len(), None),
                };
                let mut strategy = profile.strategy(0, copy_len).map_err(|e| anyhow!(e))?;
                if let AttackStrategy::BlockzeroWindow { targets, .. } = &mut strategy {
                    let (Some(codec), Some(path)) = (&repeat, &message) else {
                        bail!("blockzero_window needs a repeat profile and --message");
                    };
                    let x = read_bits(path, codec.msg_len())?;
                    let samples = profile.blockzero_samples().map_err(|e| anyhow!(e))?;
                    *targets = estimate_block_targets(codec, &x, samples, &mut rng)?;
                }
                let c = corrupt(&word, &strategy, rho, &mut rng);
                eprintln!("{} flips of at most {}", c.flips, c.limit);
                c.word
            };
            if let Some(path) = mask {
                let m: Vec<u8> = word.iter().zip(&corrupted).map(|(a, b)| a ^ b).collect();
                fs::write(&path, export_mask(&m)).with_context(|| format!("writing {}", path.display()))?;
            }
            write_bits(&out, file.n as usize, &corrupted)?;
        }
        Command::Run { profile, trials, seed, report } => {
            let mut profile = load_profile(&profile)?;
            if let Some(t) = trials {
                profile.values.insert("trials".into(), t.to_string());
            }
            if let Some(s) = seed {
                profile.values.insert("seed".into(), s.to_string());
            }
            let seeds = profile.seeds().map_err(|e| anyhow!(e))?;
            let r = run_experiment(&profile, &seeds)?;
            fs::write(&report, r.to_json() + "\n").with_context(|| format!("writing {}", report.display()))?;
            let a = &r.aggregates;
            eprintln!("{}: {}/{} succeeded ({:.3})", r.profile.name, a.successes, a.trials, a.success_rate);
            for f in &r.invariant_failures {
                eprintln!("invariant: {f}");
            }
            return Ok(!r.invariant_failures.is_empty());
        }
        Command::Rerun { report } => {
            let text = fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?;
            let old: streamcode_core::Report = serde_json::from_str(&text)?;
            let new = old.rerun()?;
            if new.to_json() != old.to_json() {
                bail!("re-run of {} differs from the stored report", report.display());
            }
            eprintln!("re-run matches");
        }
        Command::VerifyTables { profile, report } => {
            let t = verify_code_tables(&load_profile(&profile)?)?;
            write_json(&report, &serde_json::to_value(&t)?)?;
            for e in &t.entries {
                let status = match (e.pass, &e.skipped) {
                    (Some(true), _) => "pass".to_string(),
                    (Some(false), _) => "FAIL".to_string(),
                    (None, Some(why)) => format!("skipped: {why}"),
                    (None, None) => "skipped".to_string(),
                };
                eprintln!("{} [{}]: {status}", e.claim, e.code);
            }
            if !t.all_pass {
                bail!("some distance claims failed");
            }
        }
        Command::Profiles { name } => match name {
            Some(n) => print!("{}", Profile::builtin(&n).ok_or_else(|| anyhow!("no built-in profile {n}"))?.to_text()),
            None => {
                for n in Profile::builtin_names() {
                    println!("{n}");
                }
            }
        },
    }
    Ok(false)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
