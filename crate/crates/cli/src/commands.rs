//! The pipeline stages: simulate, strike, expost, report.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use cfdkit::expost::{coefficient_of_variation, distribution_summary, evaluate_ensemble, scheme_label};
use cfdkit::scenario_sim::build_ensemble;
use cfdkit::strike::{strike_det, strike_unc, strike_2way_unc_with_diagnostic};
use cfdkit::toy::{contracted_plants, toy_study};
use cfdkit::{CfdType, DistributionSummary, ScenarioEnsemble, StrikeEstimate};

use crate::config::{config_from_market, Study};
use crate::error::{CliError, Result};
use crate::ingest::write_timeseries;
use crate::store::{self, require};
use crate::table::{num, write_table};

/// Simulates every scenario and writes the ensemble.
pub fn simulate(study: &Study) -> Result<usize> {
    let market = study.market_config()?;
    let ensemble = build_ensemble(&market)?;
    let dir = store::scenarios_dir(&study.out_dir);
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    }
    store::write_ensemble(&study.out_dir, &ensemble)?;
    log::info!("simulated {} scenarios into {}", ensemble.len(), dir.display());
    Ok(ensemble.len())
}

pub fn load_ensemble(study: &Study) -> Result<ScenarioEnsemble<f64>> {
    store::read_ensemble(&study.out_dir, study.config.hours, study.costs, study.dropped_weather())
}

/// Strikes for every contracted plant and CfD type.
pub fn strike(study: &Study) -> Result<Vec<StrikeEstimate<f64>>> {
    let ensemble = load_ensemble(study)?;
    let opts = study.strike_options();
    let mut strikes = Vec::new();
    let mut diagnostics = Vec::new();
    for id in &study.config.contracts.plants {
        for &ty in &study.cfd_types {
            if ty == CfdType::TwoWay {
                let (k, d) = strike_2way_unc_with_diagnostic(id, &study.reference, &ensemble, &opts)?;
                strikes.push(k);
                diagnostics.push(d);
            } else {
                strikes.push(strike_unc(ty, id, &study.reference, &ensemble, &opts)?);
            }
        }
    }
    store::write_strikes(&store::strikes_path(&study.out_dir), &strikes)?;
    store::write_taylor(&store::taylor_path(&study.out_dir), &diagnostics)?;
    log::info!("wrote {} strikes over {} scenarios", strikes.len(), ensemble.len());
    Ok(strikes)
}

/// Settles the strikes in every scenario.
pub fn expost(study: &Study) -> Result<()> {
    let strikes_file = store::strikes_path(&study.out_dir);
    require(&store::index_path(&study.out_dir), "simulate")?;
    require(&strikes_file, "strike")?;
    let strikes = store::read_strikes(&strikes_file)?;
    let ensemble = load_ensemble(study)?;
    let outcome = evaluate_ensemble(&strikes, &study.reference, &ensemble)?;
    store::write_payments(&store::payments_path(&study.out_dir), &outcome.payments)?;
    store::write_expost(&store::expost_path(&study.out_dir), &outcome.results)?;
    store::write_consumer(&store::consumer_path(&study.out_dir), &outcome.consumer)?;
    log::info!("settled {} contracts in {} scenarios", strikes.len(), ensemble.len());
    Ok(())
}

fn summary_row(mut keys: Vec<String>, summary: &DistributionSummary<f64>) -> Vec<String> {
    keys.push(summary.count.to_string());
    keys.extend(summary.values().iter().map(|&v| num(v)));
    keys
}

fn summary_header(keys: &[&'static str]) -> Vec<&'static str> {
    keys.iter().chain(DistributionSummary::<f64>::COLUMNS.iter()).copied().collect()
}

fn schemes(types: &[CfdType]) -> Vec<Option<CfdType>> {
    std::iter::once(None).chain(types.iter().copied().map(Some)).collect()
}

/// Distribution and CV tables over the scenarios of the current ensemble.
pub fn report(study: &Study) -> Result<PathBuf> {
    let out = &study.out_dir;
    require(&store::index_path(out), "simulate")?;
    require(&store::strikes_path(out), "strike")?;
    require(&store::expost_path(out), "expost")?;
    require(&store::consumer_path(out), "expost")?;
    let ensemble = load_ensemble(study)?;
    let ids: BTreeSet<&str> = ensemble.scenarios().iter().map(|s| s.id.as_str()).collect();
    let strikes = store::read_strikes(&store::strikes_path(out))?;
    let results: Vec<_> = store::read_expost(&store::expost_path(out))?
        .into_iter()
        .filter(|r| ids.contains(r.scenario_id.as_str()))
        .collect();
    let consumer: Vec<_> = store::read_consumer(&store::consumer_path(out))?
        .into_iter()
        .filter(|r| ids.contains(r.scenario_id.as_str()))
        .collect();
    for id in &ids {
        if !results.iter().any(|r| r.scenario_id == *id) {
            return Err(CliError::Prerequisite {
                missing: store::expost_path(out).join(id),
                command: "expost",
            });
        }
    }

    let mut types: Vec<CfdType> = strikes.iter().map(|k| k.cfd_type).collect();
    types.sort();
    types.dedup();
    let dir = store::report_dir(out);
    let mut plants: Vec<(String, String)> = Vec::new();
    for k in &strikes {
        if !plants.iter().any(|(p, _)| p == &k.plant_id) {
            plants.push((k.plant_id.clone(), k.zone.clone()));
        }
    }
    let mut zones: Vec<String> = plants.iter().map(|(_, z)| z.clone()).collect();
    zones.sort();
    zones.dedup();

    // Cost recovery.
    let mut rows = Vec::new();
    let mut cv_rows = Vec::new();
    for (plant, zone) in &plants {
        let mut cvs = vec![plant.clone(), zone.clone()];
        for scheme in schemes(&types) {
            let psi: Vec<f64> = results
                .iter()
                .filter(|r| &r.plant_id == plant && r.cfd_type == scheme)
                .map(|r| r.cost_recovery)
                .collect();
            let summary = distribution_summary(&psi)?;
            rows.push(summary_row(vec![plant.clone(), zone.clone(), scheme_label(scheme).into()], &summary));
            cvs.push(num(coefficient_of_variation(&psi)?));
        }
        cv_rows.push(cvs);
    }
    write_table(&dir.join("summary_cost_recovery.csv"), &summary_header(&["plant", "zone", "scheme"]), rows)?;
    let cv_header: Vec<&str> = ["plant", "zone"]
        .into_iter()
        .chain(schemes(&types).into_iter().map(scheme_label))
        .collect();
    write_table(&dir.join("cv_cost_recovery.csv"), &cv_header, cv_rows)?;

    // Consumer prices.
    let mut rows = Vec::new();
    let mut cv_rows = Vec::new();
    for zone in &zones {
        let mut cvs = vec![zone.clone()];
        for scheme in schemes(&types) {
            let phi: Vec<f64> = consumer
                .iter()
                .filter(|r| &r.zone == zone && r.cfd_type == scheme)
                .map(|r| r.total)
                .collect();
            let summary = distribution_summary(&phi)?;
            rows.push(summary_row(vec![zone.clone(), scheme_label(scheme).into()], &summary));
            cvs.push(num(coefficient_of_variation(&phi)?));
        }
        cv_rows.push(cvs);
    }
    write_table(&dir.join("summary_consumer.csv"), &summary_header(&["zone", "scheme"]), rows)?;
    let cv_header: Vec<&str> = ["zone"]
        .into_iter()
        .chain(schemes(&types).into_iter().map(scheme_label))
        .collect();
    write_table(&dir.join("cv_consumer.csv"), &cv_header, cv_rows)?;

    // Hourly prices pooled over scenarios.
    let mut rows = Vec::new();
    let all_zones: BTreeSet<&str> = ensemble.scenarios().iter().flat_map(|s| s.zones()).collect();
    for zone in all_zones {
        let pooled: Vec<f64> = ensemble
            .scenarios()
            .iter()
            .flat_map(|s| s.price(zone).map(|p| p.to_vec()).unwrap_or_default())
            .collect();
        rows.push(summary_row(vec![zone.to_string()], &distribution_summary(&pooled)?));
    }
    write_table(&dir.join("summary_prices.csv"), &summary_header(&["zone"]), rows)?;

    // Strikes next to the spread of their per-scenario deterministic values.
    let mut rows = Vec::new();
    for k in &strikes {
        let per_scenario = ensemble
            .scenarios()
            .iter()
            .map(|s| {
                let plant = s.plant(&k.plant_id)?;
                let fleet = s.reference_fleet(&k.plant_id, &study.reference)?;
                Ok(strike_det(k.cfd_type, plant, &fleet, s)?.value)
            })
            .collect::<Result<Vec<f64>>>()?;
        let summary = distribution_summary(&per_scenario)?;
        rows.push(vec![
            k.plant_id.clone(),
            k.zone.clone(),
            k.cfd_type.as_str().to_string(),
            k.unit().to_string(),
            num(k.cost_base),
            num(k.markup),
            num(k.value),
            num(summary.mean),
            num(summary.min),
            num(summary.median),
            num(summary.max),
        ]);
    }
    write_table(
        &dir.join("summary_strike_components.csv"),
        &[
            "plant",
            "zone",
            "cfd_type",
            "unit",
            "cost_base",
            "markup",
            "value",
            "scenario_mean",
            "scenario_min",
            "scenario_median",
            "scenario_max",
        ],
        rows,
    )?;
    log::info!("report over {} scenarios written to {}", ensemble.len(), dir.display());
    Ok(dir)
}

/// Writes the bundled three-zone toy study (config plus weather CSVs) into
/// `dir` and returns the config path.
pub fn init_toy(dir: &Path, hours: usize, seed: u64) -> Result<PathBuf> {
    let market = toy_study::<f64>(hours, seed).map_err(|e| CliError::Config(e.to_string()))?;
    let mut paths = BTreeMap::new();
    for w in &market.weather_variants {
        let rel = PathBuf::from("weather").join(&w.label);
        let cf = rel.join("capacity_factors.csv");
        let demand = rel.join("demand.csv");
        write_timeseries(&dir.join(&cf), "plant", &w.capacity_factors)?;
        write_timeseries(&dir.join(&demand), "zone", &w.demand)?;
        paths.insert(w.label.clone(), (cf, demand));
    }
    let config = config_from_market(&market, &paths, contracted_plants())?;
    let path = dir.join("study.toml");
    let text = format!(
        "# Synthetic three-zone study: 4 capacity mixes x 3 weather years x 3 hydrogen prices.\n# seed = {seed}\n\n{}",
        config.to_toml()?
    );
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
