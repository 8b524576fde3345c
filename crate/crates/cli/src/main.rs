mod campaign;
mod learn;
mod pipeline;
mod settings;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use settings::Settings;

#[derive(Parser)]
#[command(name = "foundry", version, about = "Build, annotate, map and train on a distant-supervision NLI corpus")]
struct Cli {
    /// key=value defaults; `command.key` entries win over bare `key`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Where to write the run manifest (default: next to the main output).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream a dump into cleaned, split sentences.
    Ingest(pipeline::IngestArgs),
    /// Turn sentences into labeled pairs using the linking-phrase table.
    Label(pipeline::LabelArgs),
    /// Stratified train/val/test assignment.
    Split(pipeline::SplitArgs),
    /// Per-split, per-class corpus statistics.
    Stats(pipeline::StatsArgs),
    /// Class-balanced id pool drawn from the training split.
    Oversample(pipeline::OversampleArgs),
    /// Manual re-annotation campaigns.
    #[command(subcommand)]
    Annotate(campaign::AnnotateCommand),
    /// Data map from training dynamics.
    Carto(learn::CartoArgs),
    /// Batch schedule for one training strategy.
    Schedule(learn::ScheduleArgs),
    /// Train a shallow classifier over a schedule.
    Train(learn::TrainArgs),
    /// Predict labels with a trained model.
    Predict(learn::PredictArgs),
    /// Classification report, or significance tests with `eval compare`.
    Eval(EvalCommand),
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct EvalCommand {
    #[command(subcommand)]
    compare: Option<EvalSub>,
    #[command(flatten)]
    report: learn::EvalArgs,
}

#[derive(Subcommand)]
enum EvalSub {
    /// Compare two prediction files on the same gold labels.
    Compare(learn::CompareArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let settings = |section: &str| Settings::load(cli.config.as_deref(), section, cli.manifest.clone());
    match cli.command {
        Command::Ingest(a) => pipeline::ingest(a, settings("ingest")?),
        Command::Label(a) => pipeline::label(a, settings("label")?),
        Command::Split(a) => pipeline::split(a, settings("split")?),
        Command::Stats(a) => pipeline::stats(a, settings("stats")?),
        Command::Oversample(a) => pipeline::oversample(a, settings("oversample")?),
        Command::Annotate(c) => campaign::run(c, &settings),
        Command::Carto(a) => learn::carto(a, settings("carto")?),
        Command::Schedule(a) => learn::schedule(a, settings("schedule")?),
        Command::Train(a) => learn::train(a, settings("train")?),
        Command::Predict(a) => learn::predict(a, settings("predict")?),
        Command::Eval(EvalCommand { compare: Some(EvalSub::Compare(a)), .. }) => learn::compare(a, settings("eval")?),
        Command::Eval(EvalCommand { compare: None, report }) => learn::eval(report, settings("eval")?),
    }
}
