//! TOML study configuration.
//!
//! Relative paths are resolved against the directory of the config file.
//! Unknown keys are rejected so that a misspelt toggle cannot silently fall
//! back to its default.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cfdkit::scenario_sim::{DEFAULT_PRICE_CAP, DEFAULT_SHED_PRICE};
use cfdkit::{
    BiddingZone, CfdType, CostParameters, DemandSegment, FuelLevel, InvestVariant, MarketConfig, PlantCapacity,
    ProfileLabel, ReferenceFleet, StrikeOptions, TimeGrid, UnitCost, UnitSpec, WeatherVariant,
};

use crate::error::{CliError, Result};
use crate::ingest::ingest_timeseries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Length of every series.
    pub hours: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub market: MarketSection,
    pub costs: CostSection,
    pub zones: Vec<ZoneSection>,
    pub fuel_levels: Vec<FuelSection>,
    pub weather_years: Vec<WeatherSection>,
    pub invest_variants: Vec<InvestSection>,
    pub contracts: ContractSection,
    #[serde(default)]
    pub options: Options,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    #[serde(default = "default_price_cap")]
    pub price_cap: f64,
    #[serde(default = "default_shed_price")]
    pub shed_price: f64,
}

fn default_price_cap() -> f64 {
    DEFAULT_PRICE_CAP
}

fn default_shed_price() -> f64 {
    DEFAULT_SHED_PRICE
}

impl Default for MarketSection {
    fn default() -> Self {
        Self {
            price_cap: DEFAULT_PRICE_CAP,
            shed_price: DEFAULT_SHED_PRICE,
        }
    }
}

/// Either `annuity_factor` or both `interest_rate` and `lifetime_years`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub variable_cost: f64,
    pub invest_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annuity_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interest_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime_years: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneSection {
    pub id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub demand_segments: Vec<SegmentSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSection {
    pub value_of_lost_load: f64,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuelSection {
    pub label: String,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherSection {
    pub label: String,
    /// `hour,plant,value`.
    pub capacity_factors: PathBuf,
    /// `hour,zone,value`.
    pub demand: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvestSection {
    pub label: String,
    pub plants: Vec<PlantSection>,
    #[serde(default)]
    pub units: Vec<UnitSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub id: String,
    pub zone: String,
    pub capacity: f64,
    #[serde(default = "default_label")]
    pub label: String,
}

fn default_label() -> String {
    ProfileLabel::Other.as_str().to_string()
}

/// A dispatchable unit with either a fixed `marginal_cost` or a fuel-linked
/// offer `fuel_price / efficiency + adder`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitSection {
    pub id: String,
    pub zone: String,
    pub capacity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginal_cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adder: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractSection {
    pub plants: Vec<String>,
    #[serde(default = "all_types")]
    pub types: Vec<String>,
}

fn all_types() -> Vec<String> {
    CfdType::ALL.iter().map(|t| t.as_str().to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default = "yes")]
    pub price_cap: bool,
    #[serde(default)]
    pub drop_weather_years: Vec<String>,
    #[serde(default = "yes")]
    pub drop_last_cov: bool,
    #[serde(default = "default_reference")]
    pub reference_fleet: String,
    #[serde(default = "default_threshold")]
    pub taylor_threshold: f64,
}

fn yes() -> bool {
    true
}

fn default_reference() -> String {
    ReferenceFleet::Zone.to_string()
}

fn default_threshold() -> f64 {
    0.01
}

impl Default for Options {
    fn default() -> Self {
        Self {
            price_cap: true,
            drop_weather_years: Vec::new(),
            drop_last_cov: true,
            reference_fleet: default_reference(),
            taylor_threshold: default_threshold(),
        }
    }
}

/// Command line settings that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub no_price_cap: bool,
    pub drop_weather_years: Vec<String>,
    pub keep_last_cov: bool,
    pub reference_fleet: Option<String>,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// A loaded study with overrides applied and every toggle parsed.
#[derive(Debug, Clone)]
pub struct Study {
    pub config: StudyConfig,
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
    pub costs: CostParameters<f64>,
    pub reference: ReferenceFleet,
    pub cfd_types: Vec<CfdType>,
}

impl Study {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config = StudyConfig::from_toml(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(config, base_dir, overrides)
    }

    pub fn new(mut config: StudyConfig, base_dir: PathBuf, overrides: &Overrides) -> Result<Self> {
        if overrides.no_price_cap {
            config.options.price_cap = false;
        }
        for label in &overrides.drop_weather_years {
            if !config.options.drop_weather_years.contains(label) {
                config.options.drop_weather_years.push(label.clone());
            }
        }
        if overrides.keep_last_cov {
            config.options.drop_last_cov = false;
        }
        if let Some(mode) = &overrides.reference_fleet {
            config.options.reference_fleet = mode.clone();
        }
        let out_dir = match &overrides.out {
            Some(dir) => dir.clone(),
            None => base_dir.join(&config.output_dir),
        };

        let config_err = |e: cfdkit::Error| CliError::Config(e.to_string());
        let reference: ReferenceFleet = config.options.reference_fleet.parse().map_err(config_err)?;
        let cfd_types = config
            .contracts
            .types
            .iter()
            .map(|t| t.parse::<CfdType>())
            .collect::<cfdkit::Result<Vec<_>>>()
            .map_err(config_err)?;
        if cfd_types.is_empty() {
            return Err(CliError::Config("contracts.types is empty".into()));
        }
        if !(config.options.taylor_threshold > 0.0) {
            return Err(CliError::Config("options.taylor_threshold must be > 0".into()));
        }
        let costs = resolve_costs(&config.costs)?;
        TimeGrid::new(config.hours).map_err(config_err)?;

        let study = Self {
            config,
            base_dir,
            out_dir,
            costs,
            reference,
            cfd_types,
        };
        study.check_references()?;
        Ok(study)
    }

    fn check_references(&self) -> Result<()> {
        let weather: Vec<&str> = self.config.weather_years.iter().map(|w| w.label.as_str()).collect();
        for label in &self.config.options.drop_weather_years {
            if !weather.contains(&label.as_str()) {
                return Err(CliError::Config(format!(
                    "cannot drop weather year `{label}`: the study has {}",
                    weather.join(", ")
                )));
            }
        }
        if self.config.options.drop_weather_years.len() >= weather.len() {
            return Err(CliError::Config("every weather year is dropped".into()));
        }
        for w in &self.config.weather_years {
            for path in [&w.capacity_factors, &w.demand] {
                let full = self.resolve(path);
                if !full.is_file() {
                    return Err(CliError::Config(format!(
                        "weather year `{}` refers to missing file {}",
                        w.label,
                        full.display()
                    )));
                }
            }
        }
        if self.config.contracts.plants.is_empty() {
            return Err(CliError::Config("contracts.plants is empty".into()));
        }
        for id in &self.config.contracts.plants {
            for mix in &self.config.invest_variants {
                if !mix.plants.iter().any(|p| &p.id == id) {
                    return Err(CliError::Config(format!(
                        "contracted plant `{id}` is missing from investment variant `{}`",
                        mix.label
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    pub fn strike_options(&self) -> StrikeOptions<f64> {
        StrikeOptions {
            drop_last_cov: self.config.options.drop_last_cov,
            taylor_threshold: self.config.options.taylor_threshold,
        }
    }

    pub fn dropped_weather(&self) -> &[String] {
        &self.config.options.drop_weather_years
    }

    /// Market description with the weather series read from disk and the
    /// sensitivity toggles applied.
    pub fn market_config(&self) -> Result<MarketConfig<f64>> {
        let c = &self.config;
        let config_err = |e: cfdkit::Error| CliError::Config(e.to_string());
        let zones = c.zones.iter().map(|z| BiddingZone::new(z.id.clone(), z.name.clone())).collect();
        let segments = c
            .zones
            .iter()
            .flat_map(|z| {
                z.demand_segments.iter().map(move |s| DemandSegment {
                    zone: z.id.clone(),
                    value_of_lost_load: s.value_of_lost_load,
                    share: s.share,
                })
            })
            .collect();
        let fuel_price_levels = c
            .fuel_levels
            .iter()
            .map(|f| FuelLevel {
                label: f.label.clone(),
                price: f.price,
            })
            .collect();
        let invest_variants = c.invest_variants.iter().map(invest_variant).collect::<Result<Vec<_>>>()?;

        let mut weather_variants = Vec::new();
        for w in c.weather_years.iter().filter(|w| !self.dropped_weather().contains(&w.label)) {
            weather_variants.push(WeatherVariant {
                label: w.label.clone(),
                capacity_factors: ingest_timeseries(&self.resolve(&w.capacity_factors), c.hours)?,
                demand: ingest_timeseries(&self.resolve(&w.demand), c.hours)?,
            });
        }

        let market = MarketConfig {
            zones,
            grid: TimeGrid::new(c.hours).map_err(config_err)?,
            plant_costs: self.costs,
            price_cap: c.options.price_cap.then_some(c.market.price_cap),
            shed_price: c.market.shed_price,
            segments,
            fuel_price_levels,
            weather_variants,
            invest_variants,
        };
        market.validate()?;
        Ok(market)
    }
}

fn resolve_costs(c: &CostSection) -> Result<CostParameters<f64>> {
    let config_err = |e: cfdkit::Error| CliError::Config(format!("costs: {e}"));
    let annuity = match (c.annuity_factor, c.interest_rate, c.lifetime_years) {
        (Some(a), None, None) => a,
        (None, Some(r), Some(n)) => CostParameters::annuity_factor_from(r, n).map_err(config_err)?,
        _ => {
            return Err(CliError::Config(
                "costs: give either annuity_factor or both interest_rate and lifetime_years".into(),
            ))
        }
    };
    CostParameters::new(c.variable_cost, annuity, c.invest_cost).map_err(config_err)
}

fn invest_variant(mix: &InvestSection) -> Result<InvestVariant<f64>> {
    let plants = mix
        .plants
        .iter()
        .map(|p| {
            let label = p
                .label
                .parse::<ProfileLabel>()
                .map_err(|e| CliError::Config(format!("plant `{}`: {e}", p.id)))?;
            Ok(PlantCapacity {
                plant_id: p.id.clone(),
                zone: p.zone.clone(),
                capacity: p.capacity,
                label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let units = mix
        .units
        .iter()
        .map(|u| {
            let cost = match (u.marginal_cost, u.efficiency, u.adder) {
                (Some(c), None, None) => UnitCost::Fixed(c),
                (None, Some(efficiency), adder) => UnitCost::Fuel {
                    efficiency,
                    adder: adder.unwrap_or(0.0),
                },
                _ => {
                    return Err(CliError::Config(format!(
                        "unit `{}`: give either marginal_cost or efficiency (with optional adder)",
                        u.id
                    )))
                }
            };
            Ok(UnitSpec {
                id: u.id.clone(),
                zone: u.zone.clone(),
                capacity: u.capacity,
                cost,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InvestVariant {
        label: mix.label.clone(),
        plants,
        units,
    })
}

/// Config sections describing `market`, with weather files at the given
/// relative paths.
pub fn config_from_market(
    market: &MarketConfig<f64>,
    weather_paths: &BTreeMap<String, (PathBuf, PathBuf)>,
    contracted: Vec<String>,
) -> Result<StudyConfig> {
    let zones = market
        .zones
        .iter()
        .map(|z| ZoneSection {
            id: z.id.clone(),
            name: z.name.clone(),
            demand_segments: market
                .segments
                .iter()
                .filter(|s| s.zone == z.id)
                .map(|s| SegmentSection {
                    value_of_lost_load: s.value_of_lost_load,
                    share: s.share,
                })
                .collect(),
        })
        .collect();
    let weather_years = market
        .weather_variants
        .iter()
        .map(|w| {
            let (cf, demand) = weather_paths
                .get(&w.label)
                .ok_or_else(|| CliError::Config(format!("no file paths for weather `{}`", w.label)))?;
            Ok(WeatherSection {
                label: w.label.clone(),
                capacity_factors: cf.clone(),
                demand: demand.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let invest_variants = market
        .invest_variants
        .iter()
        .map(|mix| InvestSection {
            label: mix.label.clone(),
            plants: mix
                .plants
                .iter()
                .map(|p| PlantSection {
                    id: p.plant_id.clone(),
                    zone: p.zone.clone(),
                    capacity: p.capacity,
                    label: p.label.as_str().to_string(),
                })
                .collect(),
            units: mix
                .units
                .iter()
                .map(|u| {
                    let (marginal_cost, efficiency, adder) = match u.cost {
                        UnitCost::Fixed(c) => (Some(c), None, None),
                        UnitCost::Fuel { efficiency, adder } => (None, Some(efficiency), Some(adder)),
                    };
                    UnitSection {
                        id: u.id.clone(),
                        zone: u.zone.clone(),
                        capacity: u.capacity,
                        marginal_cost,
                        efficiency,
                        adder,
                    }
                })
                .collect(),
        })
        .collect();
    Ok(StudyConfig {
        hours: market.grid.hours(),
        output_dir: default_output_dir(),
        market: MarketSection {
            price_cap: market.price_cap.unwrap_or(DEFAULT_PRICE_CAP),
            shed_price: market.shed_price,
        },
        costs: CostSection {
            variable_cost: market.plant_costs.variable_cost,
            invest_cost: market.plant_costs.invest_cost,
            annuity_factor: Some(market.plant_costs.annuity_factor),
            interest_rate: None,
            lifetime_years: None,
        },
        zones,
        fuel_levels: market
            .fuel_price_levels
            .iter()
            .map(|f| FuelSection {
                label: f.label.clone(),
                price: f.price,
            })
            .collect(),
        weather_years,
        invest_variants,
        contracts: ContractSection {
            plants: contracted,
            types: all_types(),
        },
        options: Options {
            price_cap: market.price_cap.is_some(),
            ..Options::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
hours = 2

[costs]
variable_cost = 1.0
invest_cost = 100.0
annuity_factor = 0.1

[[zones]]
id = "DK"

[[fuel_levels]]
label = "low"
price = 40.0

[[weather_years]]
label = "2019"
capacity_factors = "cf.csv"
demand = "demand.csv"

[[invest_variants]]
label = "base"
plants = [{ id = "w", zone = "DK", capacity = 10.0, label = "HighFLH" }]
units = [{ id = "gas", zone = "DK", capacity = 100.0, efficiency = 0.5, adder = 2.0 }]

[contracts]
plants = ["w"]
"#;

    #[test]
    fn defaults_fill_in() {
        let c = StudyConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.market.price_cap, 617.0);
        assert_eq!(c.market.shed_price, 4000.0);
        assert!(c.options.price_cap && c.options.drop_last_cov);
        assert_eq!(c.contracts.types, vec!["basic", "2way", "financial"]);
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let typo = MINIMAL.replace("[contracts]", "[options]\nprice_capp = false\n\n[contracts]");
        let err = StudyConfig::from_toml(&typo).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("price_capp"), "{err}");
    }

    #[test]
    fn toml_round_trip() {
        let c = StudyConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(StudyConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
    }

    #[test]
    fn overrides_and_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("cf.csv"), "hour,plant,value\n0,w,0.5\n1,w,0.2\n").unwrap();
        fs::write(dir.path().join("demand.csv"), "hour,zone,value\n0,DK,5\n1,DK,6\n").unwrap();
        let c = StudyConfig::from_toml(MINIMAL).unwrap();
        let overrides = Overrides {
            no_price_cap: true,
            keep_last_cov: true,
            reference_fleet: Some("exclude-contracted".into()),
            ..Overrides::default()
        };
        let study = Study::new(c.clone(), dir.path().to_path_buf(), &overrides).unwrap();
        assert!(!study.strike_options().drop_last_cov);
        assert_eq!(study.reference, ReferenceFleet::ExcludeContracted);
        let market = study.market_config().unwrap();
        assert_eq!(market.price_cap, None);
        assert_eq!(market.weather_variants[0].demand["DK"], vec![5.0, 6.0]);

        let bad_drop = Overrides {
            drop_weather_years: vec!["2010".into()],
            ..Overrides::default()
        };
        assert!(matches!(Study::new(c.clone(), dir.path().to_path_buf(), &bad_drop), Err(CliError::Config(_))));
        let elsewhere = tempfile::tempdir().unwrap();
        let err = Study::new(c, elsewhere.path().to_path_buf(), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("missing file"));
    }

    #[test]
    fn cost_forms() {
        let mut c = StudyConfig::from_toml(MINIMAL).unwrap().costs;
        c.annuity_factor = None;
        c.interest_rate = Some(0.0);
        c.lifetime_years = Some(20.0);
        assert_eq!(resolve_costs(&c).unwrap().annuity_factor, 0.05);
        c.annuity_factor = Some(0.1);
        assert!(resolve_costs(&c).is_err());
    }
}
