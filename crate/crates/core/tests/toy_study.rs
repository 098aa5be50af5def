use cfdkit::expost::{coefficient_of_variation, evaluate_ensemble};
use cfdkit::model::{lcoe, market_value_plant, market_value_zone, revenue_per_capacity_plant, revenue_per_capacity_zone};
use cfdkit::scenario_sim::build_ensemble;
use cfdkit::strike::{strike_2way_unc_with_diagnostic, strike_fin_unc, strike_unc};
use cfdkit::toy::{contracted_plants, toy_study};
use cfdkit::{CfdType, ReferenceFleet, ScenarioEnsemble, StrikeOptions};

fn ensemble(hours: usize) -> ScenarioEnsemble<f64> {
    build_ensemble(&toy_study::<f64>(hours, 42).unwrap()).unwrap()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn two_way_strike_close_to_scenario_mean() {
    let e = ensemble(2190);
    let reference = ReferenceFleet::Zone;
    let opts = StrikeOptions::default();
    for id in contracted_plants() {
        let (k, diag) = strike_2way_unc_with_diagnostic(&id, &reference, &e, &opts).unwrap();
        let oracle = mean(e.iter().map(|(s, _)| {
            let p = s.plant(&id).unwrap();
            let fleet = s.reference_fleet(&id, &reference).unwrap();
            lcoe(p, s).unwrap() + market_value_zone(&fleet, s).unwrap() - market_value_plant(p, s).unwrap()
        }));
        let rel = (k.value - oracle).abs() / oracle.abs();
        eprintln!("{id}: 2way {:.3} oracle {:.3} rel {:.4} taylor {:.4}", k.value, oracle, rel, diag.worst_relative());
        assert!(rel < 0.05, "{id}: {rel}");
    }
}

#[test]
fn financial_strike_matches_oracle_with_constant_weights() {
    // Every capacity mix scales the zonal wind fleet uniformly, so the
    // capacity shares are the same in all scenarios.
    let e = ensemble(1000);
    let reference = ReferenceFleet::Zone;
    for id in contracted_plants() {
        let k = strike_fin_unc(&id, &reference, &e, &StrikeOptions::default()).unwrap();
        let oracle = mean(e.iter().map(|(s, _)| {
            let p = s.plant(&id).unwrap();
            let fleet = s.reference_fleet(&id, &reference).unwrap();
            let cost = p.costs.variable_cost * p.capacity_factors().iter().sum::<f64>() + p.costs.fixed_cost_per_capacity();
            cost + revenue_per_capacity_zone(&fleet, s).unwrap() - revenue_per_capacity_plant(p, s).unwrap()
        }));
        assert!((k.value - oracle).abs() <= 1e-9 * oracle.abs(), "{id}: {} vs {oracle}", k.value);
    }
}

#[test]
fn contracts_narrow_cost_recovery_spread() {
    let e = ensemble(8760);
    assert_eq!(e.len(), 36);
    let reference = ReferenceFleet::Zone;
    let opts = StrikeOptions::default();
    let mut strikes = Vec::new();
    for id in contracted_plants() {
        for ty in CfdType::ALL {
            strikes.push(strike_unc(ty, &id, &reference, &e, &opts).unwrap());
        }
    }
    let out = evaluate_ensemble(&strikes, &reference, &e).unwrap();
    for id in contracted_plants() {
        let cv = |ty: Option<CfdType>| {
            let psi: Vec<f64> = out
                .results
                .iter()
                .filter(|r| r.plant_id == id && r.cfd_type == ty)
                .map(|r| r.cost_recovery)
                .collect();
            assert_eq!(psi.len(), 36);
            coefficient_of_variation(&psi).unwrap()
        };
        let none = cv(None);
        let [basic, two, fin] = CfdType::ALL.map(|t| cv(Some(t)));
        eprintln!("{id}: none {none:.4} basic {basic:.4} 2way {two:.4} financial {fin:.4}");
        assert!(basic <= none && two <= none && fin <= none);
    }
}

#[test]
fn high_mv_gets_markdown_and_high_flh_markup() {
    let e = ensemble(4380);
    let reference = ReferenceFleet::Zone;
    let opts = StrikeOptions::default();
    for zone in ["DK", "ES", "FR"] {
        let flh = strike_unc(CfdType::TwoWay, &format!("{zone}_HighFLH"), &reference, &e, &opts).unwrap();
        let mv = strike_unc(CfdType::TwoWay, &format!("{zone}_HighMV"), &reference, &e, &opts).unwrap();
        eprintln!("{zone}: HighFLH markup {:.3}, HighMV markup {:.3}", flh.markup, mv.markup);
        assert!(flh.markup > 0.0);
        assert!(mv.markup < 0.0);
        assert!(mv.cost_base > flh.cost_base);
    }
}

#[test]
fn f32_pipeline_tracks_f64() {
    let e64 = ensemble(500);
    let e32 = build_ensemble(&toy_study::<f32>(500, 42).unwrap()).unwrap();
    let opts64 = StrikeOptions::default();
    let opts32 = StrikeOptions::default();
    for ty in CfdType::ALL {
        let a = strike_unc(ty, "ES_HighFLH", &ReferenceFleet::Zone, &e64, &opts64).unwrap();
        let b = strike_unc(ty, "ES_HighFLH", &ReferenceFleet::Zone, &e32, &opts32).unwrap();
        assert!(((b.value as f64) - a.value).abs() <= 1e-3 * a.value.abs(), "{ty}");
    }
}
