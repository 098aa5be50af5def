//! Ex-post cost recovery, consumer prices and volatility statistics.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::cfd::{payment, CfdContract, CfdType, PaymentRecord};
use crate::error::{Error, Result};
use crate::model::{annual_cost, market_revenue, Fleet, PlantProfile, ReferenceFleet, Scenario, ScenarioEnsemble};
use crate::scalar::Scalar;
use crate::strike::StrikeEstimate;

/// Outcome for one plant in one scenario under one support scheme
/// (`cfd_type == None` is the no-CfD baseline).
#[derive(Debug, Clone, PartialEq)]
pub struct ExPostResult<T> {
    pub plant_id: String,
    pub zone: String,
    pub scenario_id: String,
    pub cfd_type: Option<CfdType>,
    pub market_revenue: T,
    pub payment: T,
    pub cost: T,
    /// `(market_revenue + payment) / cost`.
    pub cost_recovery: T,
}

pub fn scheme_label(cfd_type: Option<CfdType>) -> &'static str {
    cfd_type.map_or("none", |t| t.as_str())
}

pub fn cost_recovery<T: Scalar>(
    plant: &PlantProfile<T>,
    contract: Option<&CfdContract<T>>,
    fleet: &Fleet<'_, T>,
    s: &Scenario<T>,
) -> Result<ExPostResult<T>> {
    let cost = annual_cost(plant, s)?;
    if cost <= T::zero() {
        return Err(Error::UndefinedRatio(format!(
            "cost recovery of `{}` in `{}`: annual cost is zero",
            plant.id, s.id
        )));
    }
    let revenue = market_revenue(plant, s)?;
    let paid = match contract {
        Some(c) => payment(c, plant, fleet, s)?.payment,
        None => T::zero(),
    };
    Ok(ExPostResult {
        plant_id: plant.id.clone(),
        zone: plant.zone.clone(),
        scenario_id: s.id.clone(),
        cfd_type: contract.map(|c| c.cfd_type),
        market_revenue: revenue,
        payment: paid,
        cost,
        cost_recovery: (revenue + paid) / cost,
    })
}

/// Population mean and standard deviation.
pub fn mean_and_std<T: Scalar>(values: &[T]) -> Result<(T, T)> {
    if values.is_empty() {
        return Err(Error::invalid("statistics of an empty sample"));
    }
    let n = T::lit(values.len() as f64);
    let mean = values.iter().copied().sum::<T>() / n;
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    Ok((mean, var.sqrt()))
}

/// Population standard deviation over mean.
pub fn coefficient_of_variation<T: Scalar>(values: &[T]) -> Result<T> {
    let (mean, std) = mean_and_std(values)?;
    if mean == T::zero() {
        return Err(Error::UndefinedRatio("coefficient of variation with zero mean".into()));
    }
    Ok(std / mean)
}

/// Net CfD payments to all contracted plants located in `zone`.
pub fn zone_payments<T: Scalar>(
    zone: &str,
    contracts: &[CfdContract<T>],
    reference: &ReferenceFleet,
    s: &Scenario<T>,
) -> Result<T> {
    let mut total = T::zero();
    for c in contracts {
        let plant = s.plant(&c.plant_id)?;
        if plant.zone != zone {
            continue;
        }
        let fleet = s.reference_fleet(&c.plant_id, reference)?;
        total = total + payment(c, plant, &fleet, s)?.payment;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsumerPriceResult<T> {
    pub zone: String,
    pub scenario_id: String,
    pub cfd_type: Option<CfdType>,
    /// Demand-weighted spot price, €/MWh.
    pub energy_price_component: T,
    /// Uniform levy, €/MWh (negative when plants pay back).
    pub levy: T,
    pub total: T,
}

/// Demand-weighted price plus a uniform levy that passes the zone's net
/// CfD payments on to consumers.
pub fn consumer_price<T: Scalar>(
    zone: &str,
    contracts: &[CfdContract<T>],
    reference: &ReferenceFleet,
    s: &Scenario<T>,
) -> Result<ConsumerPriceResult<T>> {
    let cfd_type = match contracts.first() {
        None => None,
        Some(first) => {
            if contracts.iter().any(|c| c.cfd_type != first.cfd_type) {
                return Err(Error::invalid("consumer price needs contracts of a single CfD type"));
            }
            Some(first.cfd_type)
        }
    };
    let demand = s.demand(zone)?;
    let prices = s.price(zone)?;
    let total_demand: T = demand.iter().copied().sum();
    if total_demand <= T::zero() {
        return Err(Error::UndefinedRatio(format!(
            "consumer price in `{zone}`, scenario `{}`: total demand is zero",
            s.id
        )));
    }
    let energy = crate::scalar::dot(prices, demand) / total_demand;
    let levy = zone_payments(zone, contracts, reference, s)? / total_demand;
    Ok(ConsumerPriceResult {
        zone: zone.to_string(),
        scenario_id: s.id.clone(),
        cfd_type,
        energy_price_component: energy,
        levy,
        total: energy + levy,
    })
}

/// Levy revenue `sum_t levy * d_t` actually raised from consumers.
pub fn levy_revenue<T: Scalar>(result: &ConsumerPriceResult<T>, s: &Scenario<T>) -> Result<T> {
    Ok(s.demand(&result.zone)?.iter().map(|&d| result.levy * d).sum())
}

/// Letter-value style percentile table.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSummary<T> {
    pub count: usize,
    pub mean: T,
    pub min: T,
    pub p06_25: T,
    pub p12_5: T,
    pub p25: T,
    pub median: T,
    pub p75: T,
    pub p87_5: T,
    pub p93_75: T,
    pub max: T,
}

impl<T: Scalar> DistributionSummary<T> {
    pub const COLUMNS: [&'static str; 11] = [
        "count", "mean", "min", "p6.25", "p12.5", "p25", "median", "p75", "p87.5", "p93.75", "max",
    ];

    pub fn values(&self) -> [T; 10] {
        [
            self.mean, self.min, self.p06_25, self.p12_5, self.p25, self.median, self.p75, self.p87_5,
            self.p93_75, self.max,
        ]
    }
}

/// Percentile of sorted data by linear interpolation between order
/// statistics at rank `q (n - 1)`.
pub fn percentile<T: Scalar>(sorted: &[T], q: f64) -> T {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let rank = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = T::lit(rank - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn distribution_summary<T: Scalar>(values: &[T]) -> Result<DistributionSummary<T>> {
    if values.is_empty() {
        return Err(Error::invalid("distribution of an empty sample"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("distribution contains NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let (mean, _) = mean_and_std(&sorted)?;
    Ok(DistributionSummary {
        count: sorted.len(),
        mean,
        min: sorted[0],
        p06_25: percentile(&sorted, 0.0625),
        p12_5: percentile(&sorted, 0.125),
        p25: percentile(&sorted, 0.25),
        median: percentile(&sorted, 0.5),
        p75: percentile(&sorted, 0.75),
        p87_5: percentile(&sorted, 0.875),
        p93_75: percentile(&sorted, 0.9375),
        max: sorted[sorted.len() - 1],
    })
}

/// Everything the ex-post stage produces for one ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ExPostOutcome<T> {
    pub results: Vec<ExPostResult<T>>,
    pub payments: Vec<PaymentRecord<T>>,
    pub consumer: Vec<ConsumerPriceResult<T>>,
}

/// Settles contracts at the given strikes in every scenario.
///
/// Each contracted plant is evaluated without a CfD and under every CfD
/// type it has a strike for. Consumer prices are computed per zone for the
/// baseline and for each CfD type, with all plants of that type contracted.
/// Rows are ordered by scenario, then plant or zone, then type.
pub fn evaluate_ensemble<T: Scalar>(
    strikes: &[StrikeEstimate<T>],
    reference: &ReferenceFleet,
    ensemble: &ScenarioEnsemble<T>,
) -> Result<ExPostOutcome<T>> {
    let contracts: Vec<CfdContract<T>> = strikes
        .iter()
        .map(|k| CfdContract::new(k.plant_id.clone(), k.cfd_type, k.value))
        .collect::<Result<_>>()?;
    let mut plants: Vec<&str> = Vec::new();
    for c in &contracts {
        if !plants.contains(&c.plant_id.as_str()) {
            plants.push(&c.plant_id);
        }
    }
    let mut by_type: BTreeMap<CfdType, Vec<CfdContract<T>>> = BTreeMap::new();
    for c in &contracts {
        by_type.entry(c.cfd_type).or_default().push(c.clone());
    }

    let per_scenario = ensemble
        .scenarios()
        .par_iter()
        .map(|s| -> Result<ExPostOutcome<T>> {
            let mut out = ExPostOutcome {
                results: Vec::new(),
                payments: Vec::new(),
                consumer: Vec::new(),
            };
            for &id in &plants {
                let plant = s.plant(id)?;
                let fleet = s.reference_fleet(id, reference)?;
                out.results.push(cost_recovery(plant, None, &fleet, s)?);
                for c in contracts.iter().filter(|c| c.plant_id == id) {
                    out.results.push(cost_recovery(plant, Some(c), &fleet, s)?);
                    out.payments.push(payment(c, plant, &fleet, s)?);
                }
            }
            let mut zones: Vec<&str> = Vec::new();
            for &id in &plants {
                let z = s.plant(id)?.zone.as_str();
                if !zones.contains(&z) {
                    zones.push(z);
                }
            }
            zones.sort_unstable();
            for zone in zones {
                out.consumer.push(consumer_price(zone, &[], reference, s)?);
                for group in by_type.values() {
                    out.consumer.push(consumer_price(zone, group, reference, s)?);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut all = ExPostOutcome {
        results: Vec::new(),
        payments: Vec::new(),
        consumer: Vec::new(),
    };
    for part in per_scenario {
        all.results.extend(part.results);
        all.payments.extend(part.payments);
        all.consumer.extend(part.consumer);
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testing::*;
    use crate::model::{total_generation, ScenarioEnsemble};
    use crate::strike::{strike_det, strike_unc, StrikeOptions};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    #[test]
    fn cv_examples() {
        assert_eq!(coefficient_of_variation(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(coefficient_of_variation(&[1.0, 3.0]).unwrap(), 0.5);
        let scaled = coefficient_of_variation(&[7.0, 21.0]).unwrap();
        assert_relative_eq!(scaled, 0.5, max_relative = 1e-12);
        assert!(matches!(coefficient_of_variation(&[-1.0, 1.0]), Err(Error::UndefinedRatio(_))));
        assert!(coefficient_of_variation::<f64>(&[]).is_err());
    }

    #[test]
    fn percentile_examples() {
        let one = distribution_summary(&[4.2]).unwrap();
        assert!(one.values().iter().all(|&v| v == 4.2));

        let eight: Vec<f64> = (1..=8).map(f64::from).collect();
        let d = distribution_summary(&eight).unwrap();
        assert_eq!(d.median, 4.5);
        assert_eq!(d.p25, 2.75);
        assert_eq!((d.min, d.max), (1.0, 8.0));

        let shuffled = [5.0, 2.0, 8.0, 1.0, 7.0, 3.0, 6.0, 4.0];
        assert_eq!(distribution_summary(&shuffled).unwrap(), d);
    }

    #[test]
    fn zero_cost_is_undefined() {
        let s = scenario(vec![10.0], vec![plant("a", 1.0, vec![0.0], costs(0.0, 0.0))]);
        let a = s.plant("a").unwrap();
        assert!(matches!(
            cost_recovery(a, None, &s.fleet("Z").unwrap(), &s),
            Err(Error::UndefinedRatio(_))
        ));
    }

    #[test]
    fn recovery_by_hand() {
        // Two scenarios; plant earns 10*1 + 30*0.5 = 25 in s1 and 20*1 + 0 = 20 in s2.
        // Cost = 1 * gen + 10 (fixed).
        let c = costs(1.0, 10.0);
        let s1 = scenario(vec![10.0, 30.0], vec![plant("a", 1.0, vec![1.0, 0.5], c)]);
        let s2 = scenario(vec![20.0, 40.0], vec![plant("a", 1.0, vec![1.0, 0.0], c)]);
        let strike = 16.0;
        let c1 = CfdContract::new("a", CfdType::Basic, strike).unwrap();
        let r1 = cost_recovery(s1.plant("a").unwrap(), Some(&c1), &s1.fleet("Z").unwrap(), &s1).unwrap();
        let r2 = cost_recovery(s2.plant("a").unwrap(), Some(&c1), &s2.fleet("Z").unwrap(), &s2).unwrap();
        // basic: revenue + payment = S * gen
        assert_relative_eq!(r1.cost_recovery, 16.0 * 1.5 / 11.5, max_relative = 1e-9);
        assert_relative_eq!(r2.cost_recovery, 16.0 * 1.0 / 11.0, max_relative = 1e-9);
        let none = cost_recovery(s1.plant("a").unwrap(), None, &s1.fleet("Z").unwrap(), &s1).unwrap();
        assert_relative_eq!(none.cost_recovery, 25.0 / 11.5, max_relative = 1e-9);
        assert_eq!(none.cfd_type, None);
    }

    #[test]
    fn perfect_foresight_recovers_cost_exactly() {
        let c = costs(2.0, 60.0);
        let s = scenario(
            vec![5.0, 80.0, 33.0],
            vec![plant("a", 2.0, vec![0.9, 0.1, 0.4], c), plant("b", 1.0, vec![0.2, 0.8, 0.5], c)],
        );
        for id in ["a", "b"] {
            let p = s.plant(id).unwrap();
            let fleet = s.fleet("Z").unwrap();
            for ty in CfdType::ALL {
                let k = strike_det(ty, p, &fleet, &s).unwrap();
                let contract = CfdContract::new(id, ty, k.value).unwrap();
                let r = cost_recovery(p, Some(&contract), &fleet, &s).unwrap();
                assert_relative_eq!(r.cost_recovery, 1.0, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn zone_payment_and_levy_examples() {
        let c = costs(0.0, 0.0);
        let s = scenario(vec![50.0, 50.0], vec![plant("a", 1.0, vec![0.1, 0.1], c), plant("b", 1.0, vec![0.1, 0.1], c)]);
        assert_eq!(zone_payments("Z", &[], &ReferenceFleet::Zone, &s).unwrap(), 0.0);

        // basic payments: a gets (100-50)*0.2 = +10, b gets (30-50)*0.2 = -4
        let contracts = vec![
            CfdContract::new("a", CfdType::Basic, 100.0).unwrap(),
            CfdContract::new("b", CfdType::Basic, 30.0).unwrap(),
        ];
        assert_relative_eq!(zone_payments("Z", &contracts, &ReferenceFleet::Zone, &s).unwrap(), 6.0, max_relative = 1e-12);
        let at_ref = vec![CfdContract::new("a", CfdType::Basic, 50.0).unwrap()];
        assert_eq!(zone_payments("Z", &at_ref, &ReferenceFleet::Zone, &s).unwrap(), 0.0);

        // demand is one MWh per hour in the test scenario
        let cp = consumer_price("Z", &contracts, &ReferenceFleet::Zone, &s).unwrap();
        assert_relative_eq!(cp.levy, 3.0, max_relative = 1e-12);
        assert_relative_eq!(cp.total, 53.0, max_relative = 1e-12);
        let base = consumer_price("Z", &[], &ReferenceFleet::Zone, &s).unwrap();
        assert_eq!((base.levy, base.total, base.cfd_type), (0.0, 50.0, None));

        let refund = vec![CfdContract::new("a", CfdType::Basic, 20.0).unwrap()];
        let cp = consumer_price("Z", &refund, &ReferenceFleet::Zone, &s).unwrap();
        assert_relative_eq!(cp.levy, -3.0, max_relative = 1e-12);
        assert_relative_eq!(cp.total, 47.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_demand_consumer_price_errors() {
        let mut s = scenario(vec![1.0], vec![]);
        s = Scenario::new(
            "s",
            s.grid(),
            s.prices().clone(),
            BTreeMap::from([("Z".to_string(), vec![0.0])]),
            vec![],
            BTreeMap::new(),
        )
        .unwrap();
        assert!(matches!(consumer_price("Z", &[], &ReferenceFleet::Zone, &s), Err(Error::UndefinedRatio(_))));
    }

    #[test]
    fn ensemble_evaluation_shapes() {
        let c = costs(1.0, 40.0);
        let mk = |id: &str, p: Vec<f64>, fa: Vec<f64>, fb: Vec<f64>| {
            let mut s = scenario(p, vec![plant("a", 1.0, fa, c), plant("b", 2.0, fb, c)]);
            s.id = id.into();
            s
        };
        let e = ScenarioEnsemble::uniform(vec![
            mk("s1", vec![10.0, 90.0], vec![0.9, 0.2], vec![0.4, 0.6]),
            mk("s2", vec![30.0, 20.0], vec![0.5, 0.5], vec![0.7, 0.1]),
        ])
        .unwrap();
        let opts = StrikeOptions::default();
        let strikes: Vec<_> = ["a", "b"]
            .iter()
            .flat_map(|id| CfdType::ALL.map(|ty| strike_unc(ty, id, &ReferenceFleet::Zone, &e, &opts).unwrap()))
            .collect();
        let out = evaluate_ensemble(&strikes, &ReferenceFleet::Zone, &e).unwrap();
        assert_eq!(out.results.len(), 2 * 2 * 4);
        assert_eq!(out.payments.len(), 2 * 2 * 3);
        assert_eq!(out.consumer.len(), 2 * 4);
        for cp in &out.consumer {
            let s = e.scenarios().iter().find(|s| s.id == cp.scenario_id).unwrap();
            let raised = levy_revenue(cp, s).unwrap();
            let owed: f64 = out
                .payments
                .iter()
                .filter(|p| p.scenario_id == cp.scenario_id && Some(p.cfd_type) == cp.cfd_type)
                .map(|p| p.payment)
                .sum();
            assert!((raised - owed).abs() <= 1e-9 * owed.abs().max(1.0));
        }
        let _ = total_generation(e.scenarios()[0].plant("a").unwrap(), &e.scenarios()[0]).unwrap();
    }

    proptest! {
        #[test]
        fn cv_scale_invariant(values in prop::collection::vec(0.1..100.0f64, 1..30), lambda in 0.01..100.0f64) {
            let base = coefficient_of_variation(&values).unwrap();
            let scaled: Vec<f64> = values.iter().map(|v| v * lambda).collect();
            let cv = coefficient_of_variation(&scaled).unwrap();
            prop_assert!((cv - base).abs() <= 1e-9 * base.max(1e-12) + 1e-12);
        }

        #[test]
        fn summary_ordered_and_permutation_invariant(mut values in prop::collection::vec(-1e3..1e3f64, 1..40)) {
            let d = distribution_summary(&values).unwrap();
            let v = d.values();
            prop_assert!(v[1..].windows(2).all(|w| w[0] <= w[1]));
            values.reverse();
            prop_assert_eq!(distribution_summary(&values).unwrap(), d);
        }
    }
}
