//! Command line pipeline around the `cfdkit` library.
//!
//! `simulate` builds the scenario ensemble, `strike` computes strike prices,
//! `expost` settles them in every scenario and `report` writes distribution
//! and volatility tables. Each stage reads the files of the previous one.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod store;
pub mod table;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{Overrides, Study, StudyConfig};
pub use error::{CliError, Result};
pub use ingest::ingest_timeseries;

#[derive(Debug, Parser)]
#[command(name = "cfdkit", version, about = "CfD strike prices and ex-post risk analysis over scenario ensembles")]
pub struct Cli {
    /// Study configuration file.
    #[arg(long, global = true, default_value = "study.toml")]
    pub config: PathBuf,

    /// Output directory, overriding `output_dir` of the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Simulate without the price cap.
    #[arg(long, global = true)]
    pub no_price_cap: bool,

    /// Leave a weather year out of the ensemble; repeatable.
    #[arg(long = "drop-weather-year", global = true, value_name = "LABEL")]
    pub drop_weather_year: Vec<String>,

    /// Keep the `Cov[w, f p]` term in fleet expectations.
    #[arg(long, global = true)]
    pub keep_last_cov: bool,

    /// `zone`, `exclude-contracted` or `plants:a,b,...`.
    #[arg(long, global = true, value_name = "MODE")]
    pub reference_fleet: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the scenario ensemble.
    Simulate,
    /// Compute strike prices.
    Strike,
    /// Settle contracts and compute cost recovery and consumer prices.
    Expost,
    /// Write summary and CV tables.
    Report,
    /// simulate, strike, expost and report in sequence.
    Run,
    /// Write the bundled toy study into a directory.
    InitToy {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 8760)]
        hours: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            no_price_cap: self.no_price_cap,
            drop_weather_years: self.drop_weather_year.clone(),
            keep_last_cov: self.keep_last_cov,
            reference_fleet: self.reference_fleet.clone(),
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Command::InitToy { dir, hours, seed } = &cli.command {
        let path = commands::init_toy(dir, *hours, *seed)?;
        println!("wrote {}", path.display());
        return Ok(());
    }
    let study = Study::load(&cli.config, &cli.overrides())?;
    match cli.command {
        Command::Simulate => {
            let n = commands::simulate(&study)?;
            println!("simulated {n} scenarios");
        }
        Command::Strike => {
            let strikes = commands::strike(&study)?;
            println!("computed {} strikes", strikes.len());
        }
        Command::Expost => commands::expost(&study)?,
        Command::Report => {
            let dir = commands::report(&study)?;
            println!("report written to {}", dir.display());
        }
        Command::Run => {
            commands::simulate(&study)?;
            commands::strike(&study)?;
            commands::expost(&study)?;
            let dir = commands::report(&study)?;
            println!("report written to {}", dir.display());
        }
        Command::InitToy { .. } => unreachable!(),
    }
    Ok(())
}
