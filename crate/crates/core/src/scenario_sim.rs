//! Desk-scale merit-order market simulator.
//!
//! Zones clear independently, hour by hour, with no storage and no
//! transmission. Renewables bid zero and always produce `f * Q`; surplus
//! only shows up as a zero price. Dispatchable units follow in ascending
//! marginal cost, equal-cost units share load pro rata to capacity. Demand
//! is split into tiers with a willingness to pay (value of lost load); a
//! tier whose value is below the next supply offer is shed.
//!
//! An ensemble is the Cartesian product of capacity mixes (investment
//! variants) with weather years and fuel price levels (dispatch variants).

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{BiddingZone, CostParameters, PlantProfile, ProfileLabel, Scenario, ScenarioEnsemble, TimeGrid};
use crate::scalar::Scalar;

pub const DEFAULT_SHED_PRICE: f64 = 4000.0;
pub const DEFAULT_PRICE_CAP: f64 = 617.0;

/// Metadata keys every simulated scenario carries.
pub const META_INVEST: &str = "invest";
pub const META_WEATHER: &str = "weather";
pub const META_FUEL: &str = "fuel";

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchableUnit<T> {
    pub id: String,
    pub zone: String,
    /// MW.
    pub capacity: T,
    /// €/MWh.
    pub marginal_cost: T,
}

/// A slice of hourly demand with its willingness to pay.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandSegment<T> {
    pub zone: String,
    /// €/MWh.
    pub value_of_lost_load: T,
    /// Fraction of hourly demand.
    pub share: T,
}

/// Result of clearing one zone for one hour.
#[derive(Debug, Clone, PartialEq)]
pub struct Clearing<T> {
    /// €/MWh, after the cap.
    pub price: T,
    /// Renewable energy absorbed by demand, MWh.
    pub renewables_used: T,
    /// Dispatch per unit, same order as the input units, MWh.
    pub dispatch: Vec<T>,
    /// Demand not served, MWh.
    pub shed: T,
}

fn check_segments<T: Scalar>(segments: &[DemandSegment<T>]) -> Result<()> {
    if segments.is_empty() {
        return Err(Error::invalid("at least one demand segment required"));
    }
    if segments
        .iter()
        .any(|s| !(s.share.is_finite() && s.share >= T::zero() && s.value_of_lost_load.is_finite()))
    {
        return Err(Error::invalid("demand segment shares must be >= 0 and values finite"));
    }
    let total: T = segments.iter().map(|s| s.share).sum();
    if (total - T::one()).abs() > T::unit_sum_tolerance(segments.len()) {
        return Err(Error::invalid(format!("demand segment shares sum to {total}, expected 1")));
    }
    let mut vals: Vec<T> = segments.iter().map(|s| s.value_of_lost_load).collect();
    vals.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    if vals.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("demand segment values of lost load must be distinct"));
    }
    Ok(())
}

/// Clears one hour of one zone.
///
/// The price is the offer of the marginal supply block when all demand is
/// served (zero if renewables suffice). When demand is shed the highest
/// curtailed tier sets the price, but never below the offer of the last
/// dispatched unit. The cap, if any, applies to the price only.
pub fn clear_hour<T: Scalar>(
    renewable_supply: T,
    units: &[DispatchableUnit<T>],
    demand: T,
    segments: &[DemandSegment<T>],
    price_cap: Option<T>,
) -> Result<Clearing<T>> {
    if !(demand.is_finite() && demand >= T::zero()) {
        return Err(Error::invalid(format!("demand must be >= 0, got {demand}")));
    }
    if !(renewable_supply.is_finite() && renewable_supply >= T::zero()) {
        return Err(Error::invalid("renewable supply must be >= 0"));
    }
    if units.iter().any(|u| {
        !(u.capacity.is_finite()
            && u.capacity >= T::zero()
            && u.marginal_cost.is_finite()
            && u.marginal_cost >= T::zero())
    }) {
        return Err(Error::invalid("unit capacities and marginal costs must be finite and >= 0"));
    }
    check_segments(segments)?;

    // Supply stack: renewables first, then units grouped by equal cost.
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.sort_by(|&a, &b| {
        units[a]
            .marginal_cost
            .partial_cmp(&units[b].marginal_cost)
            .expect("finite costs")
    });
    let mut groups: Vec<(T, T, Vec<usize>)> = vec![(T::zero(), renewable_supply, Vec::new())];
    for k in order {
        let u = &units[k];
        match groups.last_mut() {
            Some((cost, cap, members)) if !members.is_empty() && *cost == u.marginal_cost => {
                *cap = *cap + u.capacity;
                members.push(k);
            }
            _ => groups.push((u.marginal_cost, u.capacity, vec![k])),
        }
    }
    let mut used = vec![T::zero(); groups.len()];

    let mut tiers: Vec<(T, T)> = segments
        .iter()
        .map(|s| (s.value_of_lost_load, s.share * demand))
        .collect();
    tiers.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite"));

    let mut g = 0usize;
    let mut last_cost: Option<T> = None;
    let mut curtailed_value: Option<T> = None;
    let mut shed = T::zero();
    for &(value, quantity) in &tiers {
        let mut need = quantity;
        if curtailed_value.is_none() {
            while need > T::zero() {
                while g < groups.len() && groups[g].1 - used[g] <= T::zero() {
                    g += 1;
                }
                if g == groups.len() || groups[g].0 > value {
                    break;
                }
                let take = need.min(groups[g].1 - used[g]);
                used[g] = used[g] + take;
                need = need - take;
                last_cost = Some(groups[g].0);
            }
        }
        if need > T::zero() {
            curtailed_value.get_or_insert(value);
            shed = shed + need;
        }
    }

    let mut price = match (curtailed_value, last_cost) {
        (Some(v), Some(c)) => v.max(c),
        (Some(v), None) => v,
        (None, Some(c)) => c,
        (None, None) => T::zero(),
    };
    if let Some(cap) = price_cap {
        price = price.min(cap);
    }

    let mut dispatch = vec![T::zero(); units.len()];
    for ((_, cap, members), &u) in groups.iter().zip(&used).skip(1) {
        if u > T::zero() {
            for &k in members {
                dispatch[k] = u * units[k].capacity / *cap;
            }
        }
    }
    Ok(Clearing {
        price,
        renewables_used: used[0],
        dispatch,
        shed,
    })
}

/// How a unit's offer is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnitCost<T> {
    /// Constant offer, €/MWh.
    Fixed(T),
    /// Fuel-linked offer `fuel_price / efficiency + adder`.
    Fuel { efficiency: T, adder: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitSpec<T> {
    pub id: String,
    pub zone: String,
    pub capacity: T,
    pub cost: UnitCost<T>,
}

impl<T: Scalar> UnitSpec<T> {
    pub fn resolve(&self, fuel_price: T) -> DispatchableUnit<T> {
        let marginal_cost = match self.cost {
            UnitCost::Fixed(c) => c,
            UnitCost::Fuel { efficiency, adder } => fuel_price / efficiency + adder,
        };
        DispatchableUnit {
            id: self.id.clone(),
            zone: self.zone.clone(),
            capacity: self.capacity,
            marginal_cost,
        }
    }
}

/// Installed capacity of one renewable plant in an investment variant.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantCapacity<T> {
    pub plant_id: String,
    pub zone: String,
    pub capacity: T,
    pub label: ProfileLabel,
}

/// A capacity mix.
#[derive(Debug, Clone, PartialEq)]
pub struct InvestVariant<T> {
    pub label: String,
    pub plants: Vec<PlantCapacity<T>>,
    pub units: Vec<UnitSpec<T>>,
}

/// A weather year: capacity factors per plant and demand per zone.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherVariant<T> {
    pub label: String,
    pub capacity_factors: BTreeMap<String, Vec<T>>,
    pub demand: BTreeMap<String, Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuelLevel<T> {
    pub label: String,
    /// €/MWh of fuel.
    pub price: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketConfig<T> {
    pub zones: Vec<BiddingZone>,
    pub grid: TimeGrid,
    pub plant_costs: CostParameters<T>,
    pub price_cap: Option<T>,
    pub shed_price: T,
    /// Demand tiers; zones without any get a single tier at `shed_price`.
    pub segments: Vec<DemandSegment<T>>,
    pub fuel_price_levels: Vec<FuelLevel<T>>,
    pub weather_variants: Vec<WeatherVariant<T>>,
    pub invest_variants: Vec<InvestVariant<T>>,
}

impl<T: Scalar> MarketConfig<T> {
    pub fn segments_for(&self, zone: &str) -> Vec<DemandSegment<T>> {
        let own: Vec<_> = self.segments.iter().filter(|s| s.zone == zone).cloned().collect();
        if own.is_empty() {
            vec![DemandSegment {
                zone: zone.to_string(),
                value_of_lost_load: self.shed_price,
                share: T::one(),
            }]
        } else {
            own
        }
    }

    pub fn without_price_cap(mut self) -> Self {
        self.price_cap = None;
        self
    }

    /// Drops the named weather variants. Unknown labels are errors.
    pub fn without_weather(mut self, labels: &[String]) -> Result<Self> {
        for label in labels {
            if !self.weather_variants.iter().any(|w| &w.label == label) {
                return Err(Error::Config(format!("unknown weather variant `{label}`")));
            }
        }
        self.weather_variants.retain(|w| !labels.contains(&w.label));
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(cap) = self.price_cap {
            if !(cap.is_finite() && cap <= self.shed_price) {
                return Err(Error::Config(format!(
                    "price cap {cap} must not exceed shed price {}",
                    self.shed_price
                )));
            }
        }
        if self.invest_variants.is_empty() {
            return Err(Error::Config("no investment variant".into()));
        }
        if self.weather_variants.is_empty() {
            return Err(Error::Config("no weather variant".into()));
        }
        if self.fuel_price_levels.is_empty() {
            return Err(Error::Config("no fuel price level".into()));
        }
        let zone_ids: BTreeSet<&str> = self.zones.iter().map(|z| z.id.as_str()).collect();
        if zone_ids.len() != self.zones.len() {
            return Err(Error::Config("duplicate bidding zone id".into()));
        }
        for seg in &self.segments {
            if !zone_ids.contains(seg.zone.as_str()) {
                return Err(Error::Config(format!("demand segment for unknown zone `{}`", seg.zone)));
            }
        }
        for zone in &zone_ids {
            check_segments(&self.segments_for(zone)).map_err(|e| Error::Config(format!("zone `{zone}`: {e}")))?;
        }
        unique_labels("investment", self.invest_variants.iter().map(|v| &v.label))?;
        unique_labels("weather", self.weather_variants.iter().map(|v| &v.label))?;
        unique_labels("fuel", self.fuel_price_levels.iter().map(|v| &v.label))?;
        for mix in &self.invest_variants {
            for p in &mix.plants {
                if !zone_ids.contains(p.zone.as_str()) {
                    return Err(Error::Config(format!("plant `{}` in unknown zone `{}`", p.plant_id, p.zone)));
                }
                for w in &self.weather_variants {
                    if !w.capacity_factors.contains_key(&p.plant_id) {
                        return Err(Error::Config(format!(
                            "weather `{}` has no capacity factors for plant `{}`",
                            w.label, p.plant_id
                        )));
                    }
                }
            }
            for u in &mix.units {
                if !zone_ids.contains(u.zone.as_str()) {
                    return Err(Error::Config(format!("unit `{}` in unknown zone `{}`", u.id, u.zone)));
                }
                if let UnitCost::Fuel { efficiency, .. } = u.cost {
                    if !(efficiency > T::zero()) {
                        return Err(Error::Config(format!("unit `{}`: efficiency must be > 0", u.id)));
                    }
                }
            }
        }
        for w in &self.weather_variants {
            for zone in &zone_ids {
                if !w.demand.contains_key(*zone) {
                    return Err(Error::Config(format!("weather `{}` has no demand for zone `{zone}`", w.label)));
                }
            }
        }
        Ok(())
    }
}

fn unique_labels<'a>(axis: &str, labels: impl Iterator<Item = &'a String>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(Error::Config(format!("duplicate {axis} variant `{l}`")));
        }
    }
    Ok(())
}

pub fn scenario_id(invest: &str, weather: &str, fuel: &str) -> String {
    format!("{invest}__{weather}__{fuel}")
}

/// Simulates one full scenario hour by hour.
pub fn simulate_scenario<T: Scalar>(
    mix: &InvestVariant<T>,
    weather: &WeatherVariant<T>,
    fuel: &FuelLevel<T>,
    config: &MarketConfig<T>,
) -> Result<Scenario<T>> {
    let grid = config.grid;
    let hours = grid.hours();

    let plants = mix
        .plants
        .iter()
        .map(|pc| {
            let f = weather
                .capacity_factors
                .get(&pc.plant_id)
                .ok_or_else(|| Error::UnknownPlant(pc.plant_id.clone()))?;
            grid.check(&format!("capacity factors of `{}` in weather `{}`", pc.plant_id, weather.label), f.len())?;
            PlantProfile::new(pc.plant_id.clone(), pc.zone.clone(), pc.capacity, f.clone(), config.plant_costs, pc.label)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut prices = BTreeMap::new();
    let mut demand = BTreeMap::new();
    for zone in &config.zones {
        let load = weather
            .demand
            .get(&zone.id)
            .ok_or_else(|| Error::UnknownZone(zone.id.clone()))?;
        grid.check(&format!("demand of `{}` in weather `{}`", zone.id, weather.label), load.len())?;
        let units: Vec<DispatchableUnit<T>> = mix
            .units
            .iter()
            .filter(|u| u.zone == zone.id)
            .map(|u| u.resolve(fuel.price))
            .collect();
        let segments = config.segments_for(&zone.id);
        let zonal: Vec<&PlantProfile<T>> = plants.iter().filter(|p| p.zone == zone.id).collect();

        let mut series = Vec::with_capacity(hours);
        for (t, &d) in load.iter().enumerate() {
            let renewables: T = zonal
                .iter()
                .map(|p| p.capacity_factors()[t] * p.capacity())
                .sum();
            let cleared = clear_hour(renewables, &units, d, &segments, config.price_cap)?;
            series.push(cleared.price);
        }
        prices.insert(zone.id.clone(), series);
        demand.insert(zone.id.clone(), load.clone());
    }

    let metadata = BTreeMap::from([
        (META_INVEST.to_string(), mix.label.clone()),
        (META_WEATHER.to_string(), weather.label.clone()),
        (META_FUEL.to_string(), fuel.label.clone()),
    ]);
    Scenario::new(
        scenario_id(&mix.label, &weather.label, &fuel.label),
        grid,
        prices,
        demand,
        plants,
        metadata,
    )
}

/// Every investment variant crossed with every weather year and fuel level,
/// uniformly weighted. Scenarios are simulated in parallel; the output order
/// is investment, then weather, then fuel.
pub fn build_ensemble<T: Scalar>(config: &MarketConfig<T>) -> Result<ScenarioEnsemble<T>> {
    config.validate()?;
    let combos: Vec<_> = config
        .invest_variants
        .iter()
        .flat_map(|mix| {
            config.weather_variants.iter().flat_map(move |w| {
                config.fuel_price_levels.iter().map(move |f| (mix, w, f))
            })
        })
        .collect();
    let scenarios = combos
        .into_par_iter()
        .map(|(mix, w, f)| simulate_scenario(mix, w, f, config))
        .collect::<Result<Vec<_>>>()?;
    ScenarioEnsemble::uniform(scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(cap: f64, cost: f64) -> DispatchableUnit<f64> {
        DispatchableUnit {
            id: format!("u{cost}"),
            zone: "Z".into(),
            capacity: cap,
            marginal_cost: cost,
        }
    }

    fn inelastic(voll: f64) -> Vec<DemandSegment<f64>> {
        vec![DemandSegment {
            zone: "Z".into(),
            value_of_lost_load: voll,
            share: 1.0,
        }]
    }

    #[test]
    fn zero_demand_clears_at_zero() {
        let c = clear_hour(3.0, &[unit(5.0, 30.0)], 0.0, &inelastic(4000.0), None).unwrap();
        assert_eq!(c.price, 0.0);
        assert_eq!(c.dispatch, vec![0.0]);
        assert_eq!(c.shed, 0.0);
    }

    #[test]
    fn renewable_surplus_clears_at_zero() {
        let c = clear_hour(10.0, &[unit(5.0, 30.0)], 5.0, &inelastic(4000.0), None).unwrap();
        assert_eq!(c.price, 0.0);
        assert_eq!(c.shed, 0.0);
        assert_eq!(c.renewables_used, 5.0);
    }

    #[test]
    fn merit_order_by_hand() {
        let units = [unit(5.0, 80.0), unit(5.0, 30.0)];
        let c = clear_hour(0.0, &units, 7.0, &inelastic(4000.0), None).unwrap();
        assert_eq!(c.price, 80.0);
        assert_eq!(c.dispatch, vec![2.0, 5.0]);
        assert_eq!(c.shed, 0.0);
    }

    #[test]
    fn scarcity_sets_shed_price_then_cap() {
        let units = [unit(5.0, 30.0)];
        let c = clear_hour(1.0, &units, 10.0, &inelastic(4000.0), None).unwrap();
        assert_eq!(c.price, 4000.0);
        assert_eq!(c.shed, 4.0);
        let capped = clear_hour(1.0, &units, 10.0, &inelastic(4000.0), Some(617.0)).unwrap();
        assert_eq!(capped.price, 617.0);
        assert_eq!(capped.dispatch, c.dispatch);
    }

    #[test]
    fn equal_cost_units_share_pro_rata() {
        let units = [unit(1.0, 50.0), unit(3.0, 50.0), unit(10.0, 90.0)];
        let c = clear_hour(0.0, &units, 2.0, &inelastic(4000.0), None).unwrap();
        assert_eq!(c.price, 50.0);
        assert_eq!(c.dispatch, vec![0.5, 1.5, 0.0]);
    }

    #[test]
    fn flexible_tier_is_shed_before_expensive_unit() {
        let segments = vec![
            DemandSegment { zone: "Z".into(), value_of_lost_load: 4000.0, share: 0.9 },
            DemandSegment { zone: "Z".into(), value_of_lost_load: 300.0, share: 0.1 },
        ];
        // 90 MWh inflexible, 10 MWh willing to pay 300; peaker at 500.
        let units = [unit(80.0, 50.0), unit(50.0, 500.0)];
        let c = clear_hour(0.0, &units, 100.0, &segments, None).unwrap();
        assert_eq!(c.dispatch, vec![80.0, 10.0]);
        assert_eq!(c.shed, 10.0);
        assert_eq!(c.price, 500.0);

        // Without the peaker the flexible tier sets the price.
        let c = clear_hour(0.0, &units[..1], 85.0, &segments, None).unwrap();
        assert_eq!(c.dispatch, vec![80.0]);
        assert!((c.shed - 5.0).abs() < 1e-12);
        assert_eq!(c.price, 300.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(clear_hour(0.0, &[], -1.0, &inelastic(4000.0), None).is_err());
        assert!(clear_hour(0.0, &[], 1.0, &[], None).is_err());
        let dup = vec![
            DemandSegment { zone: "Z".into(), value_of_lost_load: 300.0, share: 0.5 },
            DemandSegment { zone: "Z".into(), value_of_lost_load: 300.0, share: 0.5 },
        ];
        assert!(clear_hour(0.0, &[], 1.0, &dup, None).is_err());
    }

    #[test]
    fn fuel_linked_offer() {
        let spec = UnitSpec {
            id: "h2".into(),
            zone: "Z".into(),
            capacity: 1.0,
            cost: UnitCost::Fuel { efficiency: 1.0, adder: 0.0 },
        };
        assert_eq!(spec.resolve(116.90).marginal_cost, 116.90);
        let ccgt = UnitSpec { cost: UnitCost::Fuel { efficiency: 0.5, adder: 2.0 }, ..spec };
        assert_eq!(ccgt.resolve(45.0).marginal_cost, 92.0);
    }

    fn tiny_config(hours: usize, demand: f64, cf: f64) -> MarketConfig<f64> {
        let grid = TimeGrid::new(hours).unwrap();
        MarketConfig {
            zones: vec![BiddingZone::new("Z", "Zone")],
            grid,
            plant_costs: CostParameters::new(0.0, 0.1, 1000.0).unwrap(),
            price_cap: None,
            shed_price: DEFAULT_SHED_PRICE,
            segments: vec![],
            fuel_price_levels: vec![FuelLevel { label: "f".into(), price: 50.0 }],
            weather_variants: vec![WeatherVariant {
                label: "w".into(),
                capacity_factors: BTreeMap::from([("wind".to_string(), vec![cf; hours])]),
                demand: BTreeMap::from([("Z".to_string(), vec![demand; hours])]),
            }],
            invest_variants: vec![InvestVariant {
                label: "i".into(),
                plants: vec![PlantCapacity {
                    plant_id: "wind".into(),
                    zone: "Z".into(),
                    capacity: 10.0,
                    label: ProfileLabel::Reference,
                }],
                units: vec![UnitSpec {
                    id: "gas".into(),
                    zone: "Z".into(),
                    capacity: 100.0,
                    cost: UnitCost::Fuel { efficiency: 1.0, adder: 0.0 },
                }],
            }],
        }
    }

    #[test]
    fn constant_residual_demand_gives_constant_price() {
        let cfg = tiny_config(24, 20.0, 0.5);
        let s = simulate_scenario(&cfg.invest_variants[0], &cfg.weather_variants[0], &cfg.fuel_price_levels[0], &cfg).unwrap();
        assert!(s.price("Z").unwrap().iter().all(|&p| p == 50.0));
        assert_eq!(s.metadata[META_WEATHER], "w");
        assert_eq!(s.plant("wind").unwrap().generation()[0], 5.0);
    }

    #[test]
    fn cap_bounds_simulated_prices() {
        let mut cfg = tiny_config(4, 500.0, 0.0);
        cfg.price_cap = Some(DEFAULT_PRICE_CAP);
        let s = simulate_scenario(&cfg.invest_variants[0], &cfg.weather_variants[0], &cfg.fuel_price_levels[0], &cfg).unwrap();
        assert!(s.price("Z").unwrap().iter().all(|&p| p <= 617.0));
        assert_eq!(s.price("Z").unwrap()[0], 617.0);
    }

    #[test]
    fn inconsistent_grid_is_rejected() {
        let mut cfg = tiny_config(4, 20.0, 0.5);
        cfg.weather_variants[0].demand.insert("Z".into(), vec![1.0; 3]);
        let r = simulate_scenario(&cfg.invest_variants[0], &cfg.weather_variants[0], &cfg.fuel_price_levels[0], &cfg);
        assert!(matches!(r, Err(Error::Dimension { .. })));
    }

    #[test]
    fn ensemble_counts() {
        let base = tiny_config(2, 20.0, 0.5);
        assert_eq!(build_ensemble(&base).unwrap().len(), 1);

        let mut cfg = base.clone();
        cfg.invest_variants = (0..2)
            .map(|k| InvestVariant { label: format!("i{k}"), ..base.invest_variants[0].clone() })
            .collect();
        cfg.weather_variants = (0..3)
            .map(|k| WeatherVariant { label: format!("w{k}"), ..base.weather_variants[0].clone() })
            .collect();
        cfg.fuel_price_levels = [45.07, 116.90, 188.73]
            .iter()
            .enumerate()
            .map(|(k, &p)| FuelLevel { label: format!("f{k}"), price: p })
            .collect();
        let e = build_ensemble(&cfg).unwrap();
        assert_eq!(e.len(), 18);
        assert!(e.weights().iter().all(|&w| w == 1.0 / 18.0));

        cfg.fuel_price_levels.clear();
        assert!(matches!(build_ensemble(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn cap_above_shed_price_is_config_error() {
        let mut cfg = tiny_config(2, 20.0, 0.5);
        cfg.price_cap = Some(5000.0);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    fn arb_stack() -> impl Strategy<Value = (Vec<DispatchableUnit<f64>>, Vec<DemandSegment<f64>>)> {
        let units = prop::collection::vec((0.0..50.0f64, 0.0..300.0f64), 0..6).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(k, (cap, cost))| DispatchableUnit {
                    id: format!("u{k}"),
                    zone: "Z".into(),
                    capacity: cap,
                    marginal_cost: cost.round(),
                })
                .collect()
        });
        let tiers = prop::collection::vec(1.0..10.0f64, 1..4).prop_map(|raw| {
            let total: f64 = raw.iter().sum();
            let n = raw.len();
            raw.into_iter()
                .enumerate()
                .map(|(k, r)| DemandSegment {
                    zone: "Z".into(),
                    value_of_lost_load: DEFAULT_SHED_PRICE - 1000.0 * k as f64,
                    share: if k + 1 == n { 0.0 } else { r / total },
                })
                .collect::<Vec<_>>()
        });
        (units, tiers).prop_map(|(u, mut t)| {
            let rest: f64 = t.iter().map(|s| s.share).sum();
            let last = t.len() - 1;
            t[last].share = 1.0 - rest;
            (u, t)
        })
    }

    proptest! {
        #[test]
        fn energy_balance_holds(
            (units, tiers) in arb_stack(),
            ren in 0.0..100.0f64,
            demand in 0.0..300.0f64,
        ) {
            let c = clear_hour(ren, &units, demand, &tiers, Some(617.0)).unwrap();
            let served = c.renewables_used + c.dispatch.iter().sum::<f64>() + c.shed;
            prop_assert!((served - demand).abs() <= 1e-9 * demand.max(1.0));
            prop_assert!(c.renewables_used <= ren + 1e-12);
            for (d, u) in c.dispatch.iter().zip(&units) {
                prop_assert!(*d <= u.capacity * (1.0 + 1e-12) + 1e-12);
            }
        }

        #[test]
        fn price_monotone_in_residual_demand(
            (units, tiers) in arb_stack(),
            ren in 0.0..100.0f64,
            a in 0.0..300.0f64,
            b in 0.0..300.0f64,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let p_lo = clear_hour(ren, &units, lo, &tiers, None).unwrap().price;
            let p_hi = clear_hour(ren, &units, hi, &tiers, None).unwrap().price;
            prop_assert!(p_lo <= p_hi);
        }

        #[test]
        fn cap_is_pointwise_min(
            (units, tiers) in arb_stack(),
            ren in 0.0..100.0f64,
            demand in 0.0..300.0f64,
            cap in 0.0..4000.0f64,
        ) {
            let free = clear_hour(ren, &units, demand, &tiers, None).unwrap();
            let capped = clear_hour(ren, &units, demand, &tiers, Some(cap)).unwrap();
            prop_assert_eq!(capped.price, free.price.min(cap));
            prop_assert_eq!(capped.dispatch, free.dispatch);
        }
    }
}
