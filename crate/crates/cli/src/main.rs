use clap::{Parser, Subcommand};
use histomil_cli::commands;

const EXIT_CODE_HELP: &str = "EXIT CODES:
  0  success
  2  command line usage error
  3  missing or unreadable file
  4  malformed CSV/TSV/GMT input
  5  configuration or argument violation (including bad checkpoints)
  6  non-finite numeric state

The HISTOMIL_CONFIG environment variable names a default pipeline config
JSON; --config and individual flags override it.";

/// Weakly supervised histology pipeline: tiling, weak labels, MIL training
/// and evaluation, single-tile scoring, activation maps, texture and shape
/// statistics.
#[derive(Parser)]
#[command(name = "histomil", version, after_help = EXIT_CODE_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the deterministic synthetic benchmark dataset
    Synth(commands::synth::SynthArgs),
    /// Cut slides into tissue tiles and write a manifest
    Tile(commands::tile::TileArgs),
    /// Compute signature scores and stratify samples into weak labels
    Label(commands::label::LabelArgs),
    /// Train the MIL classifier
    Train(commands::train::TrainArgs),
    /// Run the repeated split protocol, or evaluate a checkpoint
    Eval(commands::eval::EvalArgs),
    /// Score single tiles and keep the confident ones
    ScoreTiles(commands::score::ScoreArgs),
    /// Render a class activation map overlay for one tile
    Cam(commands::cam::CamArgs),
    /// Extract co-occurrence texture features per tile
    Texture(commands::texture::TextureArgs),
    /// Compute shape descriptors from instance label masks
    Shape(commands::shape::ShapeArgs),
    /// Compare features between groups: boxplots, U tests, stars
    Report(commands::report::ReportArgs),
    /// Finite-difference check of the full model gradients
    Gradcheck(commands::gradcheck::GradcheckArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(args) => commands::synth::run(args),
        Command::Tile(args) => commands::tile::run(args),
        Command::Label(args) => commands::label::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::ScoreTiles(args) => commands::score::run(args),
        Command::Cam(args) => commands::cam::run(args),
        Command::Texture(args) => commands::texture::run(args),
        Command::Shape(args) => commands::shape::run(args),
        Command::Report(args) => commands::report::run(args),
        Command::Gradcheck(args) => commands::gradcheck::run(args),
    };
    if let Err(err) = result {
        eprintln!("{}", histomil_cli::error_line(&err));
        std::process::exit(histomil_cli::exit_code(&err));
    }
}
