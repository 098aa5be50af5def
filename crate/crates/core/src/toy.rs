//! A small, fully deterministic three-zone study used for demos and tests.
//!
//! Three bidding zones (`DK`, `ES`, `FR`) each host an existing wind fleet
//! plus two candidate plants: a high full-load-hours profile that moves
//! with the zonal fleet and a system-friendly high market value profile
//! that partly follows an independent weather driver. Four capacity mixes,
//! three weather years and three hydrogen price levels give 36 scenarios.
//!
//! The weather series are synthetic (seeded AR(1) drivers through a logistic
//! link). They only need to produce realistic dispersion of prices and
//! volumes across scenarios, not match any real year.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{BiddingZone, CostParameters, ProfileLabel, TimeGrid};
use crate::scalar::Scalar;
use crate::scenario_sim::{
    DemandSegment, FuelLevel, InvestVariant, MarketConfig, PlantCapacity, UnitCost, UnitSpec, WeatherVariant,
    DEFAULT_PRICE_CAP, DEFAULT_SHED_PRICE,
};

pub const ZONES: [(&str, &str); 3] = [("DK", "Denmark"), ("ES", "Spain"), ("FR", "France")];
pub const WEATHER_YEARS: [&str; 3] = ["2010", "2015", "2019"];
pub const H2_PRICE_LEVELS: [(&str, f64); 3] = [("H2Price--", 45.07), ("H2Price+", 116.90), ("H2Price++", 188.73)];
pub const INVEST_VARIANTS: [&str; 4] = [
    "H2Price--PVcost--",
    "H2Price--PVcost+",
    "H2Price+PVcost--",
    "H2Price+PVcost+",
];

/// Wind cost assumptions: 2.0 M€/MW over 25 years at 7 %, 1.5 €/MWh O&M.
pub const INVEST_COST: f64 = 2_000_000.0;
pub const VARIABLE_COST: f64 = 1.5;
pub const INTEREST_RATE: f64 = 0.07;
pub const LIFETIME_YEARS: f64 = 25.0;

pub fn plant_id(zone: &str, label: ProfileLabel) -> String {
    match label {
        ProfileLabel::HighFlh => format!("{zone}_HighFLH"),
        ProfileLabel::HighMv => format!("{zone}_HighMV"),
        _ => format!("{zone}_Existing"),
    }
}

/// The contracted candidate plants: both profiles in every zone.
pub fn contracted_plants() -> Vec<String> {
    ZONES
        .iter()
        .flat_map(|(z, _)| [plant_id(z, ProfileLabel::HighFlh), plant_id(z, ProfileLabel::HighMv)])
        .collect()
}

struct ZoneShape {
    demand_mw: f64,
    existing_wind_mw: f64,
    baseload: (f64, f64),
    h2_turbine_mw: f64,
    peaker_mw: f64,
    wind_bias: f64,
}

fn zone_shape(zone: &str) -> ZoneShape {
    match zone {
        "DK" => ZoneShape {
            demand_mw: 6_000.0,
            existing_wind_mw: 9_000.0,
            baseload: (1_500.0, 55.0),
            h2_turbine_mw: 5_000.0,
            peaker_mw: 1_800.0,
            wind_bias: 0.15,
        },
        "ES" => ZoneShape {
            demand_mw: 30_000.0,
            existing_wind_mw: 30_000.0,
            baseload: (9_000.0, 22.0),
            h2_turbine_mw: 24_000.0,
            peaker_mw: 8_000.0,
            wind_bias: -0.05,
        },
        _ => ZoneShape {
            demand_mw: 50_000.0,
            existing_wind_mw: 35_000.0,
            baseload: (30_000.0, 12.0),
            h2_turbine_mw: 28_000.0,
            peaker_mw: 10_000.0,
            wind_bias: -0.15,
        },
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn ar1(rng: &mut ChaCha8Rng, hours: usize, phi: f64) -> Vec<f64> {
    let innovation = (1.0 - phi * phi).sqrt();
    let mut x = normal(rng);
    let raw: Vec<f64> = (0..hours)
        .map(|_| {
            x = phi * x + innovation * normal(rng);
            x
        })
        .collect();
    // Standardise so that the year shifts, not sampling noise, set the means.
    let n = hours as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let sd = (raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    raw.into_iter().map(|v| (v - mean) / sd).collect()
}

fn seasonal(t: usize) -> f64 {
    (2.0 * PI * t as f64 / TimeGrid::HOURS_PER_YEAR as f64).cos()
}

fn diurnal(t: usize) -> f64 {
    (2.0 * PI * ((t % 24) as f64 - 18.0) / 24.0).cos()
}

fn weather_year<T: Scalar>(label: &str, year_index: usize, hours: usize, seed: u64) -> WeatherVariant<T> {
    // 2010: weak wind, high load; 2015: strong wind, low load; 2019: average.
    let (wind_shift, load_factor) = match label {
        "2010" => (-0.30, 1.05),
        "2015" => (0.18, 0.97),
        _ => (0.0, 1.0),
    };
    let mut capacity_factors = BTreeMap::new();
    let mut demand = BTreeMap::new();
    for (zone_index, (zone, _)) in ZONES.iter().enumerate() {
        let shape = zone_shape(zone);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((year_index as u64) << 32) ^ ((zone_index as u64) << 16));
        let fleet_driver = ar1(&mut rng, hours, 0.97);
        let local_driver = ar1(&mut rng, hours, 0.95);
        let load_noise = ar1(&mut rng, hours, 0.9);

        let existing: Vec<f64> = (0..hours)
            .map(|t| logistic(-0.9 + shape.wind_bias + wind_shift + 0.35 * seasonal(t) + 1.5 * fleet_driver[t]))
            .collect();
        let high_flh: Vec<f64> = (0..hours)
            .map(|t| logistic(-0.35 + shape.wind_bias + wind_shift + 0.35 * seasonal(t) + 4.0 * fleet_driver[t]))
            .collect();
        let high_mv: Vec<f64> = (0..hours)
            .map(|t| {
                let driver = 0.75 * fleet_driver[t] + 0.66 * local_driver[t];
                logistic(-0.7 + shape.wind_bias + wind_shift + 0.3 * seasonal(t) + 0.15 * diurnal(t) + 1.5 * driver)
            })
            .collect();
        for (label, series) in [
            (ProfileLabel::Reference, existing),
            (ProfileLabel::HighFlh, high_flh),
            (ProfileLabel::HighMv, high_mv),
        ] {
            capacity_factors.insert(plant_id(zone, label), series.into_iter().map(T::lit).collect());
        }

        let load: Vec<T> = (0..hours)
            .map(|t| {
                let shape_factor = 1.0 + 0.12 * diurnal(t) + 0.10 * seasonal(t) + 0.05 * load_noise[t];
                T::lit((shape.demand_mw * load_factor * shape_factor).max(0.0))
            })
            .collect();
        demand.insert(zone.to_string(), load);
    }
    WeatherVariant {
        label: label.to_string(),
        capacity_factors,
        demand,
    }
}

fn invest_variant<T: Scalar>(label: &str) -> InvestVariant<T> {
    let cheap_h2 = label.starts_with("H2Price--");
    let dear_pv = label.ends_with("PVcost+");
    // Dear imports and dear PV both shift investment towards wind.
    let wind_scale = 1.0 + if cheap_h2 { 0.0 } else { 0.25 } + if dear_pv { 0.12 } else { 0.0 };
    let h2_scale = if cheap_h2 { 1.05 } else { 0.95 };
    let mut plants = Vec::new();
    let mut units = Vec::new();
    for (zone, _) in ZONES {
        let shape = zone_shape(zone);
        plants.push(PlantCapacity {
            plant_id: plant_id(zone, ProfileLabel::Reference),
            zone: zone.to_string(),
            capacity: T::lit(shape.existing_wind_mw * wind_scale),
            label: ProfileLabel::Reference,
        });
        for label in [ProfileLabel::HighFlh, ProfileLabel::HighMv] {
            plants.push(PlantCapacity {
                plant_id: plant_id(zone, label),
                zone: zone.to_string(),
                capacity: T::lit(0.04 * shape.existing_wind_mw * wind_scale),
                label,
            });
        }
        units.push(UnitSpec {
            id: format!("{zone}_baseload"),
            zone: zone.to_string(),
            capacity: T::lit(shape.baseload.0),
            cost: UnitCost::Fixed(T::lit(shape.baseload.1)),
        });
        units.push(UnitSpec {
            id: format!("{zone}_h2_turbine"),
            zone: zone.to_string(),
            capacity: T::lit(shape.h2_turbine_mw * h2_scale),
            cost: UnitCost::Fuel {
                efficiency: T::lit(0.55),
                adder: T::lit(3.0),
            },
        });
        units.push(UnitSpec {
            id: format!("{zone}_peaker"),
            zone: zone.to_string(),
            capacity: T::lit(shape.peaker_mw),
            cost: UnitCost::Fixed(T::lit(if dear_pv { 420.0 } else { 380.0 })),
        });
    }
    InvestVariant {
        label: label.to_string(),
        plants,
        units,
    }
}

/// The 4 x 3 x 3 toy study on `hours` hours.
///
/// The annuity factor is scaled by `hours / 8760` so that costs refer to the
/// simulated period when it is shorter than a year.
pub fn toy_study<T: Scalar>(hours: usize, seed: u64) -> Result<MarketConfig<T>> {
    let grid = TimeGrid::new(hours)?;
    let annuity = CostParameters::<f64>::annuity_factor_from(INTEREST_RATE, LIFETIME_YEARS)?
        * hours as f64
        / TimeGrid::HOURS_PER_YEAR as f64;
    let plant_costs = CostParameters::new(T::lit(VARIABLE_COST), T::lit(annuity), T::lit(INVEST_COST))?;
    let segments = ZONES
        .iter()
        .flat_map(|(zone, _)| {
            [(DEFAULT_SHED_PRICE, 0.96), (DEFAULT_PRICE_CAP, 0.02), (300.0, 0.02)].map(|(voll, share)| {
                DemandSegment {
                    zone: zone.to_string(),
                    value_of_lost_load: T::lit(voll),
                    share: T::lit(share),
                }
            })
        })
        .collect();
    let config = MarketConfig {
        zones: ZONES.iter().map(|(id, name)| BiddingZone::new(*id, *name)).collect(),
        grid,
        plant_costs,
        price_cap: Some(T::lit(DEFAULT_PRICE_CAP)),
        shed_price: T::lit(DEFAULT_SHED_PRICE),
        segments,
        fuel_price_levels: H2_PRICE_LEVELS
            .iter()
            .map(|(label, price)| FuelLevel {
                label: label.to_string(),
                price: T::lit(*price),
            })
            .collect(),
        weather_variants: WEATHER_YEARS
            .iter()
            .enumerate()
            .map(|(k, y)| weather_year(y, k, hours, seed))
            .collect(),
        invest_variants: INVEST_VARIANTS.iter().map(|l| invest_variant(l)).collect(),
    };
    config.validate()?;
    Ok(config)
}
