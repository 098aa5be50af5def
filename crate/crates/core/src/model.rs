//! Domain types and the elementary per-scenario plant metrics.
//!
//! Energy quantities are MWh, capacities MW and money €. Every timestep is
//! one hour, so a capacity factor `f` on a plant of capacity `Q` yields
//! `f * Q` MWh in that hour.
//!
//! Metrics whose denominator is zero (no generation, no capacity) evaluate
//! to zero rather than failing. Strike computations that need a strictly
//! positive expected generation check for it themselves.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

/// Hourly time index shared by every series of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeGrid {
    hours: usize,
}

impl TimeGrid {
    pub const HOURS_PER_YEAR: usize = 8760;
    /// Length of one timestep in hours.
    pub const HOUR_DURATION: f64 = 1.0;

    pub fn new(hours: usize) -> Result<Self> {
        if hours == 0 {
            return Err(Error::invalid("time grid needs at least one hour"));
        }
        Ok(Self { hours })
    }

    pub fn hours(&self) -> usize {
        self.hours
    }

    pub(crate) fn check(&self, what: &str, len: usize) -> Result<()> {
        if len != self.hours {
            return Err(Error::dimension(what, self.hours, len));
        }
        Ok(())
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            hours: Self::HOURS_PER_YEAR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BiddingZone {
    pub id: String,
    pub name: String,
}

impl BiddingZone {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
        }
    }
}

/// Homogeneous cost assumptions of the considered technology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParameters<T> {
    /// `c`, €/MWh.
    pub variable_cost: T,
    /// `A`, per year.
    pub annuity_factor: T,
    /// `M`, €/MW.
    pub invest_cost: T,
}

impl<T: Scalar> CostParameters<T> {
    pub fn new(variable_cost: T, annuity_factor: T, invest_cost: T) -> Result<Self> {
        if !(variable_cost.is_finite() && variable_cost >= T::zero()) {
            return Err(Error::invalid("variable cost must be finite and >= 0"));
        }
        if !(annuity_factor.is_finite() && annuity_factor > T::zero()) {
            return Err(Error::invalid("annuity factor must be finite and > 0"));
        }
        if !(invest_cost.is_finite() && invest_cost >= T::zero()) {
            return Err(Error::invalid("investment cost must be finite and >= 0"));
        }
        Ok(Self {
            variable_cost,
            annuity_factor,
            invest_cost,
        })
    }

    /// Standard annuity factor `r / (1 - (1 + r)^-n)`; `1 / n` at zero rate.
    pub fn annuity_factor_from(interest_rate: T, lifetime_years: T) -> Result<T> {
        if !(lifetime_years.is_finite() && lifetime_years > T::zero()) {
            return Err(Error::invalid("lifetime must be > 0 years"));
        }
        if !(interest_rate.is_finite() && interest_rate > -T::one()) {
            return Err(Error::invalid("interest rate must be > -1"));
        }
        if interest_rate == T::zero() {
            return Ok(T::one() / lifetime_years);
        }
        let discount = (T::one() + interest_rate).powf(-lifetime_years);
        Ok(interest_rate / (T::one() - discount))
    }

    /// `A * M`, annualised fixed cost per MW.
    pub fn fixed_cost_per_capacity(&self) -> T {
        self.annuity_factor * self.invest_cost
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProfileLabel {
    HighFlh,
    HighMv,
    Reference,
    Other,
}

impl ProfileLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProfileLabel::HighFlh => "HighFLH",
            ProfileLabel::HighMv => "HighMV",
            ProfileLabel::Reference => "Reference",
            ProfileLabel::Other => "Other",
        }
    }
}

impl fmt::Display for ProfileLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['_', '-', ' '], "").as_str() {
            "highflh" => Ok(ProfileLabel::HighFlh),
            "highmv" => Ok(ProfileLabel::HighMv),
            "reference" => Ok(ProfileLabel::Reference),
            "other" => Ok(ProfileLabel::Other),
            _ => Err(Error::invalid(format!("unknown profile label `{s}`"))),
        }
    }
}

/// A renewable plant as realised in one scenario: capacity and hourly
/// capacity factors.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantProfile<T> {
    pub id: String,
    pub zone: String,
    capacity: T,
    capacity_factors: Vec<T>,
    pub costs: CostParameters<T>,
    pub label: ProfileLabel,
}

impl<T: Scalar> PlantProfile<T> {
    pub fn new(
        id: impl Into<String>,
        zone: impl Into<String>,
        capacity: T,
        capacity_factors: Vec<T>,
        costs: CostParameters<T>,
        label: ProfileLabel,
    ) -> Result<Self> {
        let id = id.into();
        if !(capacity.is_finite() && capacity > T::zero()) {
            return Err(Error::invalid(format!("plant `{id}`: capacity must be > 0")));
        }
        if capacity_factors.is_empty() {
            return Err(Error::invalid(format!("plant `{id}`: empty capacity factors")));
        }
        if let Some(t) = capacity_factors
            .iter()
            .position(|&f| !(f >= T::zero() && f <= T::one()))
        {
            return Err(Error::invalid(format!(
                "plant `{id}`: capacity factor at hour {t} outside [0, 1]"
            )));
        }
        Ok(Self {
            id,
            zone: zone.into(),
            capacity,
            capacity_factors,
            costs,
            label,
        })
    }

    /// Installed capacity `Q`, MW.
    pub fn capacity(&self) -> T {
        self.capacity
    }

    pub fn capacity_factors(&self) -> &[T] {
        &self.capacity_factors
    }

    /// Hourly generation `q_t = f_t * Q`, MWh.
    pub fn generation(&self) -> Vec<T> {
        self.capacity_factors
            .iter()
            .map(|&f| f * self.capacity)
            .collect()
    }

    /// Same plant with a different capacity factor series.
    pub fn with_capacity_factors(&self, capacity_factors: Vec<T>) -> Result<Self> {
        Self::new(
            self.id.clone(),
            self.zone.clone(),
            self.capacity,
            capacity_factors,
            self.costs,
            self.label,
        )
    }

    pub fn with_capacity(&self, capacity: T) -> Result<Self> {
        Self::new(
            self.id.clone(),
            self.zone.clone(),
            capacity,
            self.capacity_factors.clone(),
            self.costs,
            self.label,
        )
    }
}

/// The plants that define a zonal reference price, with capacity weights
/// `w_i = Q_i / sum_j Q_j`.
#[derive(Debug, Clone)]
pub struct Fleet<'a, T> {
    pub zone: String,
    plants: Vec<&'a PlantProfile<T>>,
    weights: Vec<T>,
}

impl<'a, T: Scalar> Fleet<'a, T> {
    pub fn new(zone: impl Into<String>, plants: Vec<&'a PlantProfile<T>>) -> Result<Self> {
        let zone = zone.into();
        if plants.is_empty() {
            return Err(Error::invalid(format!("empty fleet in zone `{zone}`")));
        }
        let total: T = plants.iter().map(|p| p.capacity()).sum();
        let weights = plants.iter().map(|p| p.capacity() / total).collect();
        Ok(Self {
            zone,
            plants,
            weights,
        })
    }

    pub fn plants(&self) -> &[&'a PlantProfile<T>] {
        &self.plants
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn total_capacity(&self) -> T {
        self.plants.iter().map(|p| p.capacity()).sum()
    }

    pub fn weight_of(&self, plant_id: &str) -> Option<T> {
        self.plants
            .iter()
            .position(|p| p.id == plant_id)
            .map(|k| self.weights[k])
    }
}

/// Which plants form the reference for the 2way and financial CfD.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ReferenceFleet {
    /// Every plant in the contracted plant's zone, itself included.
    #[default]
    Zone,
    /// Every plant in the zone except the contracted one.
    ExcludeContracted,
    /// An explicit list of reference plants.
    Plants(Vec<String>),
}

impl fmt::Display for ReferenceFleet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferenceFleet::Zone => f.write_str("zone"),
            ReferenceFleet::ExcludeContracted => f.write_str("exclude-contracted"),
            ReferenceFleet::Plants(ids) => write!(f, "plants:{}", ids.join(",")),
        }
    }
}

impl FromStr for ReferenceFleet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zone" => Ok(ReferenceFleet::Zone),
            "exclude-contracted" => Ok(ReferenceFleet::ExcludeContracted),
            _ => match s.strip_prefix("plants:") {
                Some(list) => {
                    let ids: Vec<String> = list
                        .split(',')
                        .map(str::trim)
                        .filter(|id| !id.is_empty())
                        .map(String::from)
                        .collect();
                    if ids.is_empty() {
                        return Err(Error::invalid("reference plant list is empty"));
                    }
                    Ok(ReferenceFleet::Plants(ids))
                }
                None => Err(Error::invalid(format!(
                    "unknown reference fleet `{s}` (expected zone, exclude-contracted or plants:ID,...)"
                ))),
            },
        }
    }
}

/// One market realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub id: String,
    grid: TimeGrid,
    prices: BTreeMap<String, Vec<T>>,
    demand: BTreeMap<String, Vec<T>>,
    plants: Vec<PlantProfile<T>>,
    pub metadata: BTreeMap<String, String>,
}

impl<T: Scalar> Scenario<T> {
    pub fn new(
        id: impl Into<String>,
        grid: TimeGrid,
        prices: BTreeMap<String, Vec<T>>,
        demand: BTreeMap<String, Vec<T>>,
        plants: Vec<PlantProfile<T>>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let id = id.into();
        for (zone, series) in &prices {
            grid.check(&format!("prices of zone `{zone}`"), series.len())?;
            if series.iter().any(|p| !p.is_finite()) {
                return Err(Error::invalid(format!(
                    "scenario `{id}`: non-finite price in zone `{zone}`"
                )));
            }
        }
        for (zone, series) in &demand {
            grid.check(&format!("demand of zone `{zone}`"), series.len())?;
            if series.iter().any(|d| !(d.is_finite() && *d >= T::zero())) {
                return Err(Error::invalid(format!(
                    "scenario `{id}`: demand must be finite and >= 0 in zone `{zone}`"
                )));
            }
        }
        let mut seen = BTreeSet::new();
        for plant in &plants {
            grid.check(
                &format!("capacity factors of plant `{}`", plant.id),
                plant.capacity_factors().len(),
            )?;
            if !prices.contains_key(&plant.zone) {
                return Err(Error::UnknownZone(plant.zone.clone()));
            }
            if !seen.insert(plant.id.as_str()) {
                return Err(Error::invalid(format!(
                    "scenario `{id}`: duplicate plant `{}`",
                    plant.id
                )));
            }
        }
        Ok(Self {
            id,
            grid,
            prices,
            demand,
            plants,
            metadata,
        })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn zones(&self) -> impl Iterator<Item = &str> {
        self.prices.keys().map(String::as_str)
    }

    pub fn prices(&self) -> &BTreeMap<String, Vec<T>> {
        &self.prices
    }

    pub fn demands(&self) -> &BTreeMap<String, Vec<T>> {
        &self.demand
    }

    pub fn plants(&self) -> &[PlantProfile<T>] {
        &self.plants
    }

    pub fn price(&self, zone: &str) -> Result<&[T]> {
        self.prices
            .get(zone)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownZone(zone.to_string()))
    }

    pub fn demand(&self, zone: &str) -> Result<&[T]> {
        self.demand
            .get(zone)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownZone(zone.to_string()))
    }

    pub fn plant(&self, id: &str) -> Result<&PlantProfile<T>> {
        self.plants
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| Error::UnknownPlant(id.to_string()))
    }

    pub fn plants_in_zone<'s, 'z>(&'s self, zone: &'z str) -> impl Iterator<Item = &'s PlantProfile<T>> + 'z
    where
        's: 'z,
    {
        self.plants.iter().filter(move |p| p.zone == zone)
    }

    /// All plants of `zone`.
    pub fn fleet(&self, zone: &str) -> Result<Fleet<'_, T>> {
        Fleet::new(zone, self.plants_in_zone(zone).collect())
    }

    /// The reference fleet for a contract on `plant_id`.
    pub fn reference_fleet(&self, plant_id: &str, mode: &ReferenceFleet) -> Result<Fleet<'_, T>> {
        let plant = self.plant(plant_id)?;
        match mode {
            ReferenceFleet::Zone => self.fleet(&plant.zone),
            ReferenceFleet::ExcludeContracted => Fleet::new(
                plant.zone.clone(),
                self.plants_in_zone(&plant.zone)
                    .filter(|p| p.id != plant_id)
                    .collect(),
            ),
            ReferenceFleet::Plants(ids) => Fleet::new(
                plant.zone.clone(),
                ids.iter()
                    .map(|id| self.plant(id))
                    .collect::<Result<Vec<_>>>()?,
            ),
        }
    }
}

/// Scenarios with probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioEnsemble<T> {
    scenarios: Vec<Scenario<T>>,
    weights: Vec<T>,
}

impl<T: Scalar> ScenarioEnsemble<T> {
    /// Equal weight `1/S` on every scenario.
    pub fn uniform(scenarios: Vec<Scenario<T>>) -> Result<Self> {
        let n = scenarios.len();
        if n == 0 {
            return Err(Error::invalid("ensemble needs at least one scenario"));
        }
        let w = T::one() / T::lit(n as f64);
        Self::with_weights(scenarios, vec![w; n])
    }

    pub fn with_weights(scenarios: Vec<Scenario<T>>, weights: Vec<T>) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(Error::invalid("ensemble needs at least one scenario"));
        }
        if weights.len() != scenarios.len() {
            return Err(Error::dimension("scenario weights", scenarios.len(), weights.len()));
        }
        check_weights(&weights)?;
        let mut ids = BTreeSet::new();
        for s in &scenarios {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::invalid(format!("duplicate scenario id `{}`", s.id)));
            }
        }
        Ok(Self { scenarios, weights })
    }

    /// Keeps the scenarios matching `keep`, renormalising their weights.
    pub fn retain(self, mut keep: impl FnMut(&Scenario<T>) -> bool) -> Result<Self> {
        let (scenarios, weights): (Vec<_>, Vec<_>) = self
            .scenarios
            .into_iter()
            .zip(self.weights)
            .filter(|(s, _)| keep(s))
            .unzip();
        if scenarios.is_empty() {
            return Err(Error::invalid("no scenario left after filtering"));
        }
        let total: T = weights.iter().copied().sum();
        if total <= T::zero() {
            return Err(Error::invalid("remaining scenarios carry zero weight"));
        }
        let n = weights.len();
        let uniform = T::one() / T::lit(n as f64);
        let weights = if weights.iter().all(|&w| w == weights[0]) {
            vec![uniform; n]
        } else {
            weights.into_iter().map(|w| w / total).collect()
        };
        Self::with_weights(scenarios, weights)
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn scenarios(&self) -> &[Scenario<T>] {
        &self.scenarios
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Scenario<T>, T)> {
        self.scenarios.iter().zip(self.weights.iter().copied())
    }
}

pub(crate) fn check_weights<T: Scalar>(weights: &[T]) -> Result<()> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= T::zero())) {
        return Err(Error::invalid("scenario weights must be finite and >= 0"));
    }
    let total: T = weights.iter().copied().sum();
    if (total - T::one()).abs() > T::unit_sum_tolerance(weights.len()) {
        return Err(Error::invalid(format!(
            "scenario weights sum to {total}, expected 1"
        )));
    }
    Ok(())
}

fn plant_series<'s, T: Scalar>(plant: &PlantProfile<T>, s: &'s Scenario<T>) -> Result<&'s [T]> {
    s.grid.check(
        &format!("capacity factors of plant `{}`", plant.id),
        plant.capacity_factors().len(),
    )?;
    s.price(&plant.zone)
}

/// `sum_t q_t`, MWh.
pub fn total_generation<T: Scalar>(plant: &PlantProfile<T>, s: &Scenario<T>) -> Result<T> {
    s.grid.check(
        &format!("capacity factors of plant `{}`", plant.id),
        plant.capacity_factors().len(),
    )?;
    Ok(plant.capacity_factors().iter().copied().sum::<T>() * plant.capacity())
}

/// Spot market revenue `sum_t q_t p_t`, €.
pub fn market_revenue<T: Scalar>(plant: &PlantProfile<T>, s: &Scenario<T>) -> Result<T> {
    let prices = plant_series(plant, s)?;
    Ok(dot(plant.capacity_factors(), prices) * plant.capacity())
}

/// Annual cost `C = c * sum_t q_t + A * M * Q`, €.
pub fn annual_cost<T: Scalar>(plant: &PlantProfile<T>, s: &Scenario<T>) -> Result<T> {
    let generation = total_generation(plant, s)?;
    Ok(plant.costs.variable_cost * generation
        + plant.costs.fixed_cost_per_capacity() * plant.capacity())
}

/// Levelised cost `C / sum_t q_t`, €/MWh; zero without generation.
pub fn lcoe<T: Scalar>(plant: &PlantProfile<T>, s: &Scenario<T>) -> Result<T> {
    let generation = total_generation(plant, s)?;
    if generation <= T::zero() {
        return Ok(T::zero());
    }
    Ok(annual_cost(plant, s)? / generation)
}

/// Generation-weighted price earned by the plant, `v_i`, €/MWh.
pub fn market_value_plant<T: Scalar>(plant: &PlantProfile<T>, s: &Scenario<T>) -> Result<T> {
    let generation = total_generation(plant, s)?;
    if generation <= T::zero() {
        return Ok(T::zero());
    }
    Ok(market_revenue(plant, s)? / generation)
}

/// Pooled generation-weighted price over the whole fleet, `v_n`, €/MWh.
pub fn market_value_zone<T: Scalar>(fleet: &Fleet<'_, T>, s: &Scenario<T>) -> Result<T> {
    let mut revenue = T::zero();
    let mut generation = T::zero();
    for plant in fleet.plants() {
        revenue = revenue + market_revenue(plant, s)?;
        generation = generation + total_generation(plant, s)?;
    }
    if generation <= T::zero() {
        return Ok(T::zero());
    }
    Ok(revenue / generation)
}

/// Market revenue per installed MW, `r_i`, €/MW.
pub fn revenue_per_capacity_plant<T: Scalar>(
    plant: &PlantProfile<T>,
    s: &Scenario<T>,
) -> Result<T> {
    Ok(market_revenue(plant, s)? / plant.capacity())
}

/// Fleet market revenue per installed MW, `r_n`, €/MW.
pub fn revenue_per_capacity_zone<T: Scalar>(fleet: &Fleet<'_, T>, s: &Scenario<T>) -> Result<T> {
    let mut revenue = T::zero();
    for plant in fleet.plants() {
        revenue = revenue + market_revenue(plant, s)?;
    }
    Ok(revenue / fleet.total_capacity())
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    pub fn costs(c: f64, fixed_per_mw: f64) -> CostParameters<f64> {
        CostParameters::new(c, 1.0, fixed_per_mw).unwrap()
    }

    pub fn plant(id: &str, q: f64, f: Vec<f64>, costs: CostParameters<f64>) -> PlantProfile<f64> {
        PlantProfile::new(id, "Z", q, f, costs, ProfileLabel::Other).unwrap()
    }

    pub fn scenario(prices: Vec<f64>, plants: Vec<PlantProfile<f64>>) -> Scenario<f64> {
        let grid = TimeGrid::new(prices.len()).unwrap();
        let demand = vec![1.0; prices.len()];
        Scenario::new(
            "s",
            grid,
            BTreeMap::from([("Z".to_string(), prices)]),
            BTreeMap::from([("Z".to_string(), demand)]),
            plants,
            BTreeMap::new(),
        )
        .unwrap()
    }
}
