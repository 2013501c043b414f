//! Command-line front end for building and evaluating coarse sense
//! inventories.
//!
//! Subcommands cover the full pipeline: `build-inventory` groups WordNet
//! senses under dictionary senses via judged definition matching,
//! `inventory-stats` reports coverage, `eval-cohesion` runs the seeded
//! sense-recognition experiments, `wsd-rescore` scores predictions fine and
//! coarse, and `judge-cache` inspects the judgment cache.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for unreadable or
//! malformed inputs, 3 when judging aborts (INVALID ceiling exceeded or a
//! replay cache miss). All logging goes to stderr; artifacts are written
//! atomically and embed the seed and judge configuration digest they were
//! produced with.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use senseforge::evalharness::{
    load_tagged_corpus, run_experiment, CohesionReport, EvalError, ExperimentConfig,
    ExperimentMode,
};
use senseforge::grouper::{
    build_groups, coverage_stats, load_inventory, persist_inventory, run_matching, BuildParams,
    GrouperError, MatchingOptions,
};
use senseforge::judge::{Judge, JudgeCache, JudgeConfig, JudgeError, API_KEY_ENV};
use senseforge::lexicon::{load_dictionary, load_vocabulary};
use senseforge::util::atomic_write;
use senseforge::wordnet::load_wordnet;
use senseforge::wsdscore::{filter_by_vocab, load_wsd_data, score_report};

#[derive(Parser)]
#[command(
    name = "senseforge",
    version,
    about = "Build and evaluate coarse-grained word sense inventories"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Group WordNet senses under the dictionary senses they match.
    BuildInventory(BuildInventoryArgs),
    /// Print group and coverage statistics for a stored inventory.
    InventoryStats(InventoryStatsArgs),
    /// Run a within/across/self sense-recognition experiment.
    EvalCohesion(EvalCohesionArgs),
    /// Score WSD predictions fine-grained and against inventories.
    WsdRescore(WsdRescoreArgs),
    /// Summarize the contents of a judge cache file.
    JudgeCache(JudgeCacheArgs),
}

#[derive(Args)]
struct BuildInventoryArgs {
    /// Directory with index.sense and the data.* files.
    #[arg(long, value_name = "DIR")]
    wordnet: PathBuf,
    /// Dictionary senses, one JSON record per line.
    #[arg(long, value_name = "FILE")]
    dict: PathBuf,
    /// Vocabulary list, one word per line.
    #[arg(long, value_name = "FILE")]
    words: PathBuf,
    /// Judge configuration (JSON). The API credential is never read from
    /// this file; set it in the environment instead.
    #[arg(long, value_name = "FILE")]
    judge: PathBuf,
    /// Where to write the inventory.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Identifier stored in the inventory; defaults to the source
    /// dictionary id in lowercase.
    #[arg(long, value_name = "ID")]
    inventory_id: Option<String>,
    /// Highest scale value still counted as a match.
    #[arg(long, default_value_t = 2)]
    match_threshold: u8,
    /// Drop groups with fewer members.
    #[arg(long, default_value_t = 2)]
    min_group_size: usize,
    #[arg(long, default_value = "3.0")]
    wordnet_version: String,
    /// Abort when the INVALID fraction of judgments exceeds this.
    #[arg(long, default_value_t = 0.05)]
    invalid_ceiling: f64,
    /// Also write every pair judgment as NDJSON.
    #[arg(long, value_name = "FILE")]
    judgment_log: Option<PathBuf>,
}

#[derive(Args)]
struct InventoryStatsArgs {
    #[arg(long, value_name = "FILE")]
    inventory: PathBuf,
    #[arg(long, value_name = "DIR")]
    wordnet: PathBuf,
    #[arg(long, value_name = "FILE")]
    words: PathBuf,
}

#[derive(Args)]
struct EvalCohesionArgs {
    /// within, across, or self.
    #[arg(long)]
    mode: ExperimentMode,
    #[arg(long, value_name = "FILE")]
    inventory: PathBuf,
    #[arg(long, value_name = "DIR")]
    wordnet: PathBuf,
    /// Sense-tagged corpus (XML).
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Gold keys for the corpus instances.
    #[arg(long, value_name = "FILE")]
    gold: PathBuf,
    /// Judge configuration (JSON). The API credential is never read from
    /// this file; set it in the environment instead.
    #[arg(long, value_name = "FILE")]
    judge: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Items per repetition.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Reuse the first repetition's group selection for all repetitions.
    #[arg(long)]
    fixed_groups: bool,
    /// Where to write the NDJSON report.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct WsdRescoreArgs {
    /// Gold keys: `instance_id sense_key [sense_key ...]` per line.
    #[arg(long, value_name = "FILE")]
    gold: PathBuf,
    /// Predictions: `instance_id sense_key` per line.
    #[arg(long, value_name = "FILE")]
    pred: PathBuf,
    /// Optional vocabulary filter applied to instance lemmas.
    #[arg(long, value_name = "FILE")]
    words: Option<PathBuf>,
    /// Inventory file; repeat for several coarse columns.
    #[arg(long, value_name = "FILE")]
    inventory: Vec<PathBuf>,
    /// Optional NDJSON report destination (the table always goes to
    /// stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct JudgeCacheArgs {
    #[arg(long, value_name = "FILE")]
    cache: PathBuf,
    /// List every record digest instead of only the summary.
    #[arg(long)]
    list: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version are not usage errors.
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };

    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::BuildInventory(args) => build_inventory(args),
        Command::InventoryStats(args) => inventory_stats(args),
        Command::EvalCohesion(args) => eval_cohesion(args),
        Command::WsdRescore(args) => wsd_rescore(args),
        Command::JudgeCache(args) => judge_cache(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// Map an error chain to the documented exit codes: 3 for judge-side
/// aborts, 2 for anything else (bad or missing inputs).
///
/// The library wraps judge errors transparently, so the chain never yields a
/// bare [`JudgeError`] — match through the wrapper variants as well.
fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(judge_err) = cause.downcast_ref::<JudgeError>() {
            if matches!(judge_err, JudgeError::ReplayMiss { .. }) {
                return 3;
            }
        }
        if let Some(grouper_err) = cause.downcast_ref::<GrouperError>() {
            match grouper_err {
                GrouperError::InvalidCeilingExceeded { .. }
                | GrouperError::Judge(JudgeError::ReplayMiss { .. }) => return 3,
                _ => {}
            }
        }
        if let Some(eval_err) = cause.downcast_ref::<EvalError>() {
            if matches!(eval_err, EvalError::Judge(JudgeError::ReplayMiss { .. })) {
                return 3;
            }
        }
    }
    2
}

/// Load a judge configuration, enforcing that credentials stay out of it.
fn load_judge_config(path: &Path) -> anyhow::Result<JudgeConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading judge config {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing judge config {}", path.display()))?;
    for credential_key in ["api_key", "apiKey", "credential", "token"] {
        if value.get(credential_key).is_some() {
            anyhow::bail!(
                "judge config {} contains {credential_key:?}; the API credential comes only \
                 from the {API_KEY_ENV} environment variable, never from the file",
                path.display()
            );
        }
    }
    let config: JudgeConfig = serde_json::from_value(value)
        .with_context(|| format!("parsing judge config {}", path.display()))?;
    Ok(config)
}

fn build_inventory(args: BuildInventoryArgs) -> anyhow::Result<()> {
    let db = load_wordnet(&args.wordnet)?;
    let dict = load_dictionary(&args.dict)?;
    let words = load_vocabulary(&args.words)?;
    let judge_config = load_judge_config(&args.judge)?;
    let judge = Judge::new(judge_config.clone())?;

    let options = MatchingOptions {
        invalid_ceiling: args.invalid_ceiling,
    };
    let judgments = run_matching(&words, &db, &dict, &judge, options)?;

    let source_dictionary = dict
        .records()
        .first()
        .map(|r| r.dictionary_id.clone())
        .unwrap_or_else(|| "unknown".to_string());
    let inventory_id = args
        .inventory_id
        .unwrap_or_else(|| source_dictionary.to_lowercase());
    let params = BuildParams {
        wordnet_version: args.wordnet_version,
        match_threshold: args.match_threshold,
        min_group_size: args.min_group_size,
        judge_config_digest: judge_config.digest(),
        ..BuildParams::new(&inventory_id, &source_dictionary)
    };
    let inventory = build_groups(&judgments, &params);
    persist_inventory(&inventory, &args.out)?;

    if let Some(log_path) = &args.judgment_log {
        let mut body = String::new();
        for judgment in &judgments {
            body.push_str(&serde_json::to_string(judgment).expect("judgment serializes"));
            body.push('\n');
        }
        atomic_write(log_path, body.as_bytes())
            .with_context(|| format!("writing judgment log {}", log_path.display()))?;
    }

    let invalid = judgments.iter().filter(|j| j.judgment.is_invalid()).count();
    println!(
        "inventory {}: {} groups from {} pair judgments ({} INVALID) -> {}",
        inventory.inventory_id,
        inventory.groups.len(),
        judgments.len(),
        invalid,
        args.out.display()
    );
    Ok(())
}

fn inventory_stats(args: InventoryStatsArgs) -> anyhow::Result<()> {
    let inventory = load_inventory(&args.inventory)?;
    let db = load_wordnet(&args.wordnet)?;
    let words = load_vocabulary(&args.words)?;
    let stats = coverage_stats(&inventory, &db, &words)?;

    let multi_member = inventory
        .groups
        .iter()
        .filter(|g| g.members.len() >= 2)
        .count();
    println!("inventory            {}", inventory.inventory_id);
    println!("source dictionary    {}", inventory.source_dictionary);
    println!("wordnet version      {}", inventory.wordnet_version);
    println!(
        "match threshold      {}",
        inventory.creation_params.match_threshold
    );
    println!(
        "min group size       {}",
        inventory.creation_params.min_group_size
    );
    println!(
        "judge digest         {}",
        if inventory.creation_params.judge_config_digest.is_empty() {
            "(none)"
        } else {
            &inventory.creation_params.judge_config_digest
        }
    );
    println!("groups               {}", stats.group_count);
    println!("groups with >1 sense {multi_member}");
    println!("covered sense keys   {}", stats.covered_sense_keys);
    println!("total sense keys     {}", stats.total_sense_keys);
    println!("coverage             {:.4}", stats.coverage_rate);
    Ok(())
}

fn eval_cohesion(args: EvalCohesionArgs) -> anyhow::Result<()> {
    let inventory = load_inventory(&args.inventory)?;
    let db = load_wordnet(&args.wordnet)?;
    let index = load_tagged_corpus(&args.corpus, &args.gold)?;
    let judge_config = load_judge_config(&args.judge)?;

    let config = ExperimentConfig {
        mode: args.mode,
        n: args.n,
        reps: args.reps,
        seed: args.seed,
        fixed_groups: args.fixed_groups,
        judge: judge_config,
    };
    let result = run_experiment(&config, &inventory, &db, &index)?;
    let report = CohesionReport::new(&config, &inventory.inventory_id, result);
    atomic_write(&args.out, report.to_ndjson().as_bytes())
        .with_context(|| format!("writing report {}", args.out.display()))?;

    println!(
        "{} on {}: ratio_yes {:.4}, ratio_no {:.4} (n={}, reps={}, seed={}) -> {}",
        report.mode,
        report.inventory_id,
        report.result.ratio_yes,
        report.result.ratio_no,
        report.n,
        report.reps,
        report.seed,
        args.out.display()
    );
    Ok(())
}

fn wsd_rescore(args: WsdRescoreArgs) -> anyhow::Result<()> {
    let (instances, mut predictions) = load_wsd_data(&args.gold, &args.pred)?;
    let instances = match &args.words {
        Some(words_path) => {
            let words = load_vocabulary(words_path)?;
            let instances = filter_by_vocab(instances, &words);
            // Keep only predictions for the retained instances; the rest
            // cover out-of-vocabulary targets by construction.
            let kept: std::collections::HashSet<&str> =
                instances.iter().map(|i| i.instance_id.as_str()).collect();
            predictions.retain(|p| kept.contains(p.instance_id.as_str()));
            instances
        }
        None => instances,
    };
    let inventories = args
        .inventory
        .iter()
        .map(load_inventory)
        .collect::<Result<Vec<_>, _>>()?;
    let inventory_refs: Vec<_> = inventories.iter().collect();
    let report = score_report(&instances, &predictions, &inventory_refs)?;

    if let Some(out) = &args.out {
        atomic_write(out, report.to_ndjson().as_bytes())
            .with_context(|| format!("writing report {}", out.display()))?;
    }
    print!("{}", report.to_table());
    Ok(())
}

fn judge_cache(args: JudgeCacheArgs) -> anyhow::Result<()> {
    let cache = JudgeCache::load(&args.cache)?;
    let records = cache.records_sorted();

    let mut by_template: std::collections::BTreeMap<&str, usize> = Default::default();
    let mut invalid = 0usize;
    for record in &records {
        *by_template.entry(record.template_id.as_str()).or_default() += 1;
        if record.parsed == "INVALID" {
            invalid += 1;
        }
    }
    println!("cache    {}", args.cache.display());
    println!("records  {}", records.len());
    for (template, count) in &by_template {
        println!("  {template:<10} {count}");
    }
    println!("invalid  {invalid}");
    if args.list {
        for record in &records {
            println!(
                "{} {} {} -> {}",
                record.digest, record.template_id, record.word, record.parsed
            );
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn replay_miss() -> JudgeError {
        JudgeError::ReplayMiss {
            word: "say".to_string(),
            digest: "xyz".to_string(),
            cache_path: PathBuf::from("cache.ndjson"),
        }
    }

    #[test]
    fn classify_sees_replay_miss_through_wrappers() {
        assert_eq!(classify(&anyhow::Error::new(replay_miss())), 3);
        assert_eq!(
            classify(&anyhow::Error::new(GrouperError::Judge(replay_miss()))),
            3
        );
        assert_eq!(
            classify(&anyhow::Error::new(EvalError::Judge(replay_miss()))),
            3
        );
        // Context layers on top must not hide it.
        let wrapped = anyhow::Error::new(GrouperError::Judge(replay_miss()))
            .context("building the inventory");
        assert_eq!(classify(&wrapped), 3);
    }

    #[test]
    fn classify_sees_invalid_ceiling() {
        let err = GrouperError::InvalidCeilingExceeded {
            invalid: 4,
            total: 10,
            ceiling: 0.05,
        };
        assert_eq!(classify(&anyhow::Error::new(err)), 3);
    }

    #[test]
    fn classify_defaults_to_input_error() {
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "missing");
        assert_eq!(classify(&anyhow::Error::new(io)), 2);
        assert_eq!(classify(&anyhow::anyhow!("anything else")), 2);
    }

    #[test]
    fn judge_config_with_credential_is_refused() {
        let tmp = tempfile::tempdir().unwrap();
        for key in ["api_key", "apiKey", "credential", "token"] {
            let path = tmp.path().join(format!("{key}.json"));
            std::fs::write(
                &path,
                format!(r#"{{"backend":"baseline","cache_path":"c.ndjson","{key}":"s3cret"}}"#),
            )
            .unwrap();
            let err = load_judge_config(&path).unwrap_err();
            let message = format!("{err:#}");
            assert!(message.contains(API_KEY_ENV), "{message}");
            assert!(!message.contains("s3cret"), "must not echo the credential");
        }
    }

    #[test]
    fn judge_config_without_credential_loads() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("judge.json");
        std::fs::write(
            &path,
            r#"{"backend":"baseline","cache_path":"c.ndjson"}"#,
        )
        .unwrap();
        let config = load_judge_config(&path).unwrap();
        assert_eq!(config.backend, senseforge::judge::BackendKind::Baseline);
        assert_eq!(config.cache_path, PathBuf::from("c.ndjson"));
    }
}
