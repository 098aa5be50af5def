//! On-disk layout of the pipeline artifacts.
//!
//! ```text
//! <out>/scenarios/index.csv                   scenario,invest,weather,fuel,weight
//! <out>/scenarios/<id>/prices.csv             hour,zone,value
//! <out>/scenarios/<id>/demand.csv             hour,zone,value
//! <out>/scenarios/<id>/capacity_factors.csv   hour,plant,value
//! <out>/scenarios/<id>/capacities.csv         plant,zone,label,capacity
//! <out>/strikes.csv
//! <out>/taylor_diagnostics.csv
//! <out>/payments.csv, expost.csv, consumer.csv
//! <out>/report/*.csv
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cfdkit::expost::scheme_label;
use cfdkit::scenario_sim::{META_FUEL, META_INVEST, META_WEATHER};
use cfdkit::{
    CfdType, ConsumerPriceResult, CostParameters, ExPostResult, PaymentRecord, PlantProfile, ProfileLabel, Scenario,
    ScenarioEnsemble, StrikeEstimate, TaylorDiagnostic, TimeGrid,
};

use crate::error::{CliError, Result};
use crate::ingest::{ingest_timeseries, write_timeseries};
use crate::table::{num, read_table, write_table, Table};

pub const INDEX_HEADER: [&str; 5] = ["scenario", "invest", "weather", "fuel", "weight"];
pub const CAPACITY_HEADER: [&str; 4] = ["plant", "zone", "label", "capacity"];
pub const STRIKE_HEADER: [&str; 7] = ["plant", "zone", "cfd_type", "cost_base", "markup", "value", "unit"];
pub const TAYLOR_HEADER: [&str; 7] = [
    "plant",
    "check",
    "ratio_of_means",
    "correction",
    "relative",
    "threshold",
    "flagged",
];
pub const PAYMENT_HEADER: [&str; 6] = ["scenario", "plant", "cfd_type", "payment", "reference_price", "reference_unit"];
pub const EXPOST_HEADER: [&str; 8] = [
    "scenario",
    "plant",
    "zone",
    "scheme",
    "market_revenue",
    "payment",
    "cost",
    "cost_recovery",
];
pub const CONSUMER_HEADER: [&str; 6] = ["scenario", "zone", "scheme", "energy_price", "levy", "total"];

pub fn scenarios_dir(out: &Path) -> PathBuf {
    out.join("scenarios")
}

pub fn index_path(out: &Path) -> PathBuf {
    scenarios_dir(out).join("index.csv")
}

pub fn strikes_path(out: &Path) -> PathBuf {
    out.join("strikes.csv")
}

pub fn taylor_path(out: &Path) -> PathBuf {
    out.join("taylor_diagnostics.csv")
}

pub fn payments_path(out: &Path) -> PathBuf {
    out.join("payments.csv")
}

pub fn expost_path(out: &Path) -> PathBuf {
    out.join("expost.csv")
}

pub fn consumer_path(out: &Path) -> PathBuf {
    out.join("consumer.csv")
}

pub fn report_dir(out: &Path) -> PathBuf {
    out.join("report")
}

/// Fails with a prerequisite error naming `command` when `path` is absent.
pub fn require(path: &Path, command: &'static str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Prerequisite {
            missing: path.to_path_buf(),
            command,
        })
    }
}

fn meta<'s>(s: &'s Scenario<f64>, key: &str) -> &'s str {
    s.metadata.get(key).map(String::as_str).unwrap_or("")
}

pub fn write_ensemble(out: &Path, ensemble: &ScenarioEnsemble<f64>) -> Result<()> {
    for s in ensemble.scenarios() {
        let dir = scenarios_dir(out).join(&s.id);
        write_timeseries(&dir.join("prices.csv"), "zone", s.prices())?;
        write_timeseries(&dir.join("demand.csv"), "zone", s.demands())?;
        let factors: BTreeMap<String, Vec<f64>> = s
            .plants()
            .iter()
            .map(|p| (p.id.clone(), p.capacity_factors().to_vec()))
            .collect();
        write_timeseries(&dir.join("capacity_factors.csv"), "plant", &factors)?;
        let rows = s.plants().iter().map(|p| {
            vec![p.id.clone(), p.zone.clone(), p.label.as_str().to_string(), num(p.capacity())]
        });
        write_table(&dir.join("capacities.csv"), &CAPACITY_HEADER, rows)?;
    }
    let rows = ensemble.iter().map(|(s, w)| {
        vec![
            s.id.clone(),
            meta(s, META_INVEST).to_string(),
            meta(s, META_WEATHER).to_string(),
            meta(s, META_FUEL).to_string(),
            num(w),
        ]
    });
    write_table(&index_path(out), &INDEX_HEADER, rows)
}

struct IndexRow {
    id: String,
    invest: String,
    weather: String,
    fuel: String,
    weight: f64,
}

fn read_index(path: &Path) -> Result<Vec<IndexRow>> {
    let table = read_table(path, &INDEX_HEADER)?;
    let mut rows = Vec::with_capacity(table.rows.len());
    for (i, r) in table.rows.iter().enumerate() {
        rows.push(IndexRow {
            id: table.text(i, r, 0)?.to_string(),
            invest: table.text(i, r, 1)?.to_string(),
            weather: table.text(i, r, 2)?.to_string(),
            fuel: table.text(i, r, 3)?.to_string(),
            weight: table.number(i, r, 4, "weight")?,
        });
    }
    if rows.is_empty() {
        return Err(CliError::data(path, "no scenarios"));
    }
    Ok(rows)
}

/// Reads the simulated ensemble, leaving out the dropped weather years and
/// renormalising the remaining weights.
pub fn read_ensemble(
    out: &Path,
    hours: usize,
    costs: CostParameters<f64>,
    drop_weather: &[String],
) -> Result<ScenarioEnsemble<f64>> {
    let index_file = index_path(out);
    require(&index_file, "simulate")?;
    let index = read_index(&index_file)?;
    // A dropped year may already be absent when simulate ran with the same flag.
    let kept: Vec<&IndexRow> = index.iter().filter(|r| !drop_weather.contains(&r.weather)).collect();
    if kept.is_empty() {
        return Err(CliError::Config("no scenario left after dropping weather years".into()));
    }
    let grid = TimeGrid::new(hours)?;
    let mut scenarios = Vec::with_capacity(kept.len());
    for row in &kept {
        scenarios.push(read_scenario(&scenarios_dir(out).join(&row.id), row, grid, costs)?);
    }
    let weights = if kept.len() == index.len() {
        kept.iter().map(|r| r.weight).collect()
    } else {
        let total: f64 = kept.iter().map(|r| r.weight).sum();
        kept.iter().map(|r| r.weight / total).collect()
    };
    Ok(ScenarioEnsemble::with_weights(scenarios, weights)?)
}

fn read_scenario(dir: &Path, row: &IndexRow, grid: TimeGrid, costs: CostParameters<f64>) -> Result<Scenario<f64>> {
    let hours = grid.hours();
    let prices = ingest_timeseries(&dir.join("prices.csv"), hours)?;
    let demand = ingest_timeseries(&dir.join("demand.csv"), hours)?;
    let factors_path = dir.join("capacity_factors.csv");
    let mut factors = ingest_timeseries(&factors_path, hours)?;
    let capacities = read_table(&dir.join("capacities.csv"), &CAPACITY_HEADER)?;
    let mut plants = Vec::with_capacity(capacities.rows.len());
    for (i, r) in capacities.rows.iter().enumerate() {
        let id = capacities.text(i, r, 0)?;
        let label: ProfileLabel = capacities
            .text(i, r, 2)?
            .parse()
            .map_err(|e: cfdkit::Error| CliError::data(&capacities.path, format!("line {}: {e}", capacities.line(i))))?;
        let f = factors
            .remove(id)
            .ok_or_else(|| CliError::data(&factors_path, format!("no capacity factors for plant `{id}`")))?;
        let plant = PlantProfile::new(
            id,
            capacities.text(i, r, 1)?,
            capacities.number(i, r, 3, "capacity")?,
            f,
            costs,
            label,
        )
        .map_err(|e| CliError::data(&capacities.path, e.to_string()))?;
        plants.push(plant);
    }
    let metadata = BTreeMap::from([
        (META_INVEST.to_string(), row.invest.clone()),
        (META_WEATHER.to_string(), row.weather.clone()),
        (META_FUEL.to_string(), row.fuel.clone()),
    ]);
    Scenario::new(row.id.clone(), grid, prices, demand, plants, metadata)
        .map_err(|e| CliError::data(dir, e.to_string()))
}

pub fn write_strikes(path: &Path, strikes: &[StrikeEstimate<f64>]) -> Result<()> {
    let rows = strikes.iter().map(|k| {
        vec![
            k.plant_id.clone(),
            k.zone.clone(),
            k.cfd_type.as_str().to_string(),
            num(k.cost_base),
            num(k.markup),
            num(k.value),
            k.unit().to_string(),
        ]
    });
    write_table(path, &STRIKE_HEADER, rows)
}

fn cfd_type(table: &Table, row: usize, record: &csv::StringRecord, col: usize) -> Result<CfdType> {
    table
        .text(row, record, col)?
        .parse()
        .map_err(|e: cfdkit::Error| CliError::data(&table.path, format!("line {}: {e}", table.line(row))))
}

fn scheme(table: &Table, row: usize, record: &csv::StringRecord, col: usize) -> Result<Option<CfdType>> {
    if table.text(row, record, col)? == scheme_label(None) {
        Ok(None)
    } else {
        cfd_type(table, row, record, col).map(Some)
    }
}

pub fn read_strikes(path: &Path) -> Result<Vec<StrikeEstimate<f64>>> {
    let table = read_table(path, &STRIKE_HEADER)?;
    let mut out = Vec::with_capacity(table.rows.len());
    for (i, r) in table.rows.iter().enumerate() {
        let k = StrikeEstimate {
            plant_id: table.text(i, r, 0)?.to_string(),
            zone: table.text(i, r, 1)?.to_string(),
            cfd_type: cfd_type(&table, i, r, 2)?,
            cost_base: table.number(i, r, 3, "cost_base")?,
            markup: table.number(i, r, 4, "markup")?,
            value: table.number(i, r, 5, "value")?,
        };
        if table.text(i, r, 6)? != k.unit() {
            return Err(CliError::data(
                path,
                format!("line {}: unit of a {} strike must be {}", table.line(i), k.cfd_type, k.unit()),
            ));
        }
        out.push(k);
    }
    Ok(out)
}

pub fn write_taylor(path: &Path, diagnostics: &[TaylorDiagnostic<f64>]) -> Result<()> {
    let rows = diagnostics.iter().flat_map(|d| {
        d.checks.iter().map(move |c| {
            vec![
                d.plant_id.clone(),
                c.name.to_string(),
                num(c.ratio_of_means),
                num(c.correction),
                num(c.relative),
                num(d.threshold),
                (c.relative > d.threshold).to_string(),
            ]
        })
    });
    write_table(path, &TAYLOR_HEADER, rows)
}

pub fn write_payments(path: &Path, payments: &[PaymentRecord<f64>]) -> Result<()> {
    let rows = payments.iter().map(|p| {
        vec![
            p.scenario_id.clone(),
            p.plant_id.clone(),
            p.cfd_type.as_str().to_string(),
            num(p.payment),
            num(p.reference_price),
            p.reference_unit.to_string(),
        ]
    });
    write_table(path, &PAYMENT_HEADER, rows)
}

pub fn read_payments(path: &Path) -> Result<Vec<PaymentRecord<f64>>> {
    let table = read_table(path, &PAYMENT_HEADER)?;
    let mut out = Vec::with_capacity(table.rows.len());
    for (i, r) in table.rows.iter().enumerate() {
        let cfd_type = cfd_type(&table, i, r, 2)?;
        out.push(PaymentRecord {
            scenario_id: table.text(i, r, 0)?.to_string(),
            plant_id: table.text(i, r, 1)?.to_string(),
            cfd_type,
            payment: table.number(i, r, 3, "payment")?,
            reference_price: table.number(i, r, 4, "reference_price")?,
            reference_unit: cfd_type.unit(),
        });
    }
    Ok(out)
}

pub fn write_expost(path: &Path, results: &[ExPostResult<f64>]) -> Result<()> {
    let rows = results.iter().map(|r| {
        vec![
            r.scenario_id.clone(),
            r.plant_id.clone(),
            r.zone.clone(),
            scheme_label(r.cfd_type).to_string(),
            num(r.market_revenue),
            num(r.payment),
            num(r.cost),
            num(r.cost_recovery),
        ]
    });
    write_table(path, &EXPOST_HEADER, rows)
}

pub fn read_expost(path: &Path) -> Result<Vec<ExPostResult<f64>>> {
    let table = read_table(path, &EXPOST_HEADER)?;
    let mut out = Vec::with_capacity(table.rows.len());
    for (i, r) in table.rows.iter().enumerate() {
        out.push(ExPostResult {
            scenario_id: table.text(i, r, 0)?.to_string(),
            plant_id: table.text(i, r, 1)?.to_string(),
            zone: table.text(i, r, 2)?.to_string(),
            cfd_type: scheme(&table, i, r, 3)?,
            market_revenue: table.number(i, r, 4, "market_revenue")?,
            payment: table.number(i, r, 5, "payment")?,
            cost: table.number(i, r, 6, "cost")?,
            cost_recovery: table.number(i, r, 7, "cost_recovery")?,
        });
    }
    Ok(out)
}

pub fn write_consumer(path: &Path, results: &[ConsumerPriceResult<f64>]) -> Result<()> {
    let rows = results.iter().map(|r| {
        vec![
            r.scenario_id.clone(),
            r.zone.clone(),
            scheme_label(r.cfd_type).to_string(),
            num(r.energy_price_component),
            num(r.levy),
            num(r.total),
        ]
    });
    write_table(path, &CONSUMER_HEADER, rows)
}

pub fn read_consumer(path: &Path) -> Result<Vec<ConsumerPriceResult<f64>>> {
    let table = read_table(path, &CONSUMER_HEADER)?;
    let mut out = Vec::with_capacity(table.rows.len());
    for (i, r) in table.rows.iter().enumerate() {
        out.push(ConsumerPriceResult {
            scenario_id: table.text(i, r, 0)?.to_string(),
            zone: table.text(i, r, 1)?.to_string(),
            cfd_type: scheme(&table, i, r, 2)?,
            energy_price_component: table.number(i, r, 3, "energy_price")?,
            levy: table.number(i, r, 4, "levy")?,
            total: table.number(i, r, 5, "total")?,
        });
    }
    Ok(out)
}
