//! Zero-expected-profit strike prices.
//!
//! A risk-neutral bidder in a pay-as-bid auction offers the strike that
//! sets expected profit to zero. With perfect foresight that is
//!
//! * basic: `lcoe_i`
//! * 2way: `lcoe_i + v_n - v_i`
//! * financial (€/MW): `C_i / Q_i + r_n - r_i`
//!
//! Over a scenario ensemble the cost parameters are known and the capacity
//! factors, prices and capacity shares are uncertain. Expectations of
//! products are expanded into means and covariances; the ratios in the 2way
//! strike are replaced by ratios of expectations (first term of a Taylor
//! expansion), whose neglected terms [`taylor_diagnostic_2way`] reports.

pub mod estimators;

use std::collections::BTreeMap;

use crate::cfd::CfdType;
use crate::error::{Error, Result};
use crate::model::{
    annual_cost, lcoe, market_value_plant, market_value_zone, revenue_per_capacity_plant,
    revenue_per_capacity_zone, total_generation, CostParameters, Fleet, PlantProfile, ReferenceFleet,
    Scenario, ScenarioEnsemble,
};
use crate::scalar::{dot, Scalar};

use estimators::{cov, expect, expect_product2, expect_product3, variance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrikeOptions<T> {
    /// Omit `Cov[w, f p]` (and `Cov[w, f]`) in fleet expectations.
    pub drop_last_cov: bool,
    /// Relative size of the neglected Taylor terms above which the 2way
    /// strike is flagged.
    pub taylor_threshold: T,
}

impl<T: Scalar> Default for StrikeOptions<T> {
    fn default() -> Self {
        Self {
            drop_last_cov: true,
            taylor_threshold: T::lit(0.01),
        }
    }
}

/// A strike with its split into expected cost and markup (negative:
/// markdown).
#[derive(Debug, Clone, PartialEq)]
pub struct StrikeEstimate<T> {
    pub plant_id: String,
    pub zone: String,
    pub cfd_type: CfdType,
    /// €/MWh for basic and 2way, €/MW for financial.
    pub value: T,
    pub cost_base: T,
    pub markup: T,
}

impl<T: Scalar> StrikeEstimate<T> {
    fn new(plant_id: &str, zone: &str, cfd_type: CfdType, cost_base: T, markup: T) -> Self {
        Self {
            plant_id: plant_id.to_string(),
            zone: zone.to_string(),
            cfd_type,
            value: cost_base + markup,
            cost_base,
            markup,
        }
    }

    pub fn unit(&self) -> &'static str {
        self.cfd_type.unit()
    }
}

/// The per-scenario quantities a strike is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrikeComponents<T> {
    pub lcoe: T,
    pub market_value: T,
    pub zone_market_value: T,
    pub cost_per_capacity: T,
    pub revenue_per_capacity: T,
    pub zone_revenue_per_capacity: T,
}

pub fn strike_components<T: Scalar>(
    plant: &PlantProfile<T>,
    fleet: &Fleet<'_, T>,
    s: &Scenario<T>,
) -> Result<StrikeComponents<T>> {
    Ok(StrikeComponents {
        lcoe: lcoe(plant, s)?,
        market_value: market_value_plant(plant, s)?,
        zone_market_value: market_value_zone(fleet, s)?,
        cost_per_capacity: annual_cost(plant, s)? / plant.capacity(),
        revenue_per_capacity: revenue_per_capacity_plant(plant, s)?,
        zone_revenue_per_capacity: revenue_per_capacity_zone(fleet, s)?,
    })
}

fn require_generation<T: Scalar>(plant: &PlantProfile<T>, s: &Scenario<T>) -> Result<()> {
    if total_generation(plant, s)? <= T::zero() {
        return Err(Error::UndefinedStrike {
            plant: plant.id.clone(),
            reason: format!("no generation in scenario `{}`", s.id),
        });
    }
    Ok(())
}

pub fn strike_basic_det<T: Scalar>(plant: &PlantProfile<T>, s: &Scenario<T>) -> Result<StrikeEstimate<T>> {
    require_generation(plant, s)?;
    Ok(StrikeEstimate::new(&plant.id, &plant.zone, CfdType::Basic, lcoe(plant, s)?, T::zero()))
}

pub fn strike_2way_det<T: Scalar>(
    plant: &PlantProfile<T>,
    fleet: &Fleet<'_, T>,
    s: &Scenario<T>,
) -> Result<StrikeEstimate<T>> {
    require_generation(plant, s)?;
    let fleet_generation = fleet
        .plants()
        .iter()
        .map(|p| total_generation(p, s))
        .sum::<Result<T>>()?;
    if fleet_generation <= T::zero() {
        return Err(Error::UndefinedStrike {
            plant: plant.id.clone(),
            reason: format!("reference fleet has no generation in scenario `{}`", s.id),
        });
    }
    let markup = market_value_zone(fleet, s)? - market_value_plant(plant, s)?;
    Ok(StrikeEstimate::new(&plant.id, &plant.zone, CfdType::TwoWay, lcoe(plant, s)?, markup))
}

pub fn strike_fin_det<T: Scalar>(
    plant: &PlantProfile<T>,
    fleet: &Fleet<'_, T>,
    s: &Scenario<T>,
) -> Result<StrikeEstimate<T>> {
    let cost_base = annual_cost(plant, s)? / plant.capacity();
    let markup = revenue_per_capacity_zone(fleet, s)? - revenue_per_capacity_plant(plant, s)?;
    Ok(StrikeEstimate::new(&plant.id, &plant.zone, CfdType::Financial, cost_base, markup))
}

pub fn strike_det<T: Scalar>(
    cfd_type: CfdType,
    plant: &PlantProfile<T>,
    fleet: &Fleet<'_, T>,
    s: &Scenario<T>,
) -> Result<StrikeEstimate<T>> {
    match cfd_type {
        CfdType::Basic => strike_basic_det(plant, s),
        CfdType::TwoWay => strike_2way_det(plant, fleet, s),
        CfdType::Financial => strike_fin_det(plant, fleet, s),
    }
}

/// Hourly moments of a capacity factor series and its zone price.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyMoments<T> {
    pub mean_f: Vec<T>,
    pub mean_p: Vec<T>,
    pub cov_fp: Vec<T>,
}

impl<T: Scalar> HourlyMoments<T> {
    /// `E[f_t p_t] = E[f_t] E[p_t] + Cov[f_t, p_t]`.
    pub fn expected_product(&self, t: usize) -> T {
        self.mean_f[t] * self.mean_p[t] + self.cov_fp[t]
    }
}

/// Moments of one reference fleet member, including its capacity share.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberMoments<T> {
    pub plant_id: String,
    pub hourly: HourlyMoments<T>,
    pub mean_w: T,
    pub cov_w_f: Vec<T>,
    pub cov_w_fp: Vec<T>,
}

impl<T: Scalar> MemberMoments<T> {
    /// `E[w f_t p_t]`.
    pub fn expected_triple(&self, t: usize, drop_last_cov: bool) -> T {
        let h = &self.hourly;
        let base = self.mean_w * h.mean_f[t] * h.mean_p[t] + self.mean_w * h.cov_fp[t];
        if drop_last_cov {
            base
        } else {
            base + self.cov_w_fp[t]
        }
    }

    /// `E[w f_t]`.
    pub fn expected_share_energy(&self, t: usize, drop_last_cov: bool) -> T {
        let base = self.mean_w * self.hourly.mean_f[t];
        if drop_last_cov {
            base
        } else {
            base + self.cov_w_f[t]
        }
    }
}

/// Scenario moments a plant needs for its strikes under uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorStats<T> {
    pub plant_id: String,
    pub zone: String,
    pub costs: CostParameters<T>,
    pub own: HourlyMoments<T>,
    pub fleet: Vec<MemberMoments<T>>,
}

/// Per-scenario views of the plant and its reference fleet.
struct Panel<'e, T> {
    plant_id: String,
    zone: String,
    costs: CostParameters<T>,
    weights: &'e [T],
    own_f: Vec<&'e [T]>,
    own_p: Vec<&'e [T]>,
    /// plant id -> per-scenario (w, f, p)
    members: BTreeMap<String, Vec<(T, &'e [T], &'e [T])>>,
    hours: usize,
}

impl<'e, T: Scalar> Panel<'e, T> {
    fn collect(
        plant_id: &str,
        reference: Option<&ReferenceFleet>,
        ensemble: &'e ScenarioEnsemble<T>,
    ) -> Result<Self> {
        let first = &ensemble.scenarios()[0];
        let head = first.plant(plant_id)?;
        let hours = first.grid().hours();
        let mut panel = Panel {
            plant_id: plant_id.to_string(),
            zone: head.zone.clone(),
            costs: head.costs,
            weights: ensemble.weights(),
            own_f: Vec::with_capacity(ensemble.len()),
            own_p: Vec::with_capacity(ensemble.len()),
            members: BTreeMap::new(),
            hours,
        };
        for s in ensemble.scenarios() {
            s.grid().check(&format!("time grid of scenario `{}`", s.id), hours)?;
            let plant = s.plant(plant_id)?;
            if plant.zone != panel.zone {
                return Err(Error::invalid(format!(
                    "plant `{plant_id}` changes zone in scenario `{}`",
                    s.id
                )));
            }
            if plant.costs != panel.costs {
                return Err(Error::invalid(format!(
                    "plant `{plant_id}` has scenario-dependent cost parameters in `{}`",
                    s.id
                )));
            }
            panel.own_f.push(plant.capacity_factors());
            panel.own_p.push(s.price(&plant.zone)?);

            if let Some(mode) = reference {
                let fleet = s.reference_fleet(plant_id, mode)?;
                if panel.members.is_empty() {
                    for p in fleet.plants() {
                        panel.members.insert(p.id.clone(), Vec::with_capacity(ensemble.len()));
                    }
                }
                if fleet.plants().len() != panel.members.len() {
                    return Err(Error::invalid(format!(
                        "reference fleet of `{plant_id}` changes composition in scenario `{}`",
                        s.id
                    )));
                }
                for (p, &w) in fleet.plants().iter().zip(fleet.weights()) {
                    let slot = panel.members.get_mut(&p.id).ok_or_else(|| {
                        Error::invalid(format!(
                            "reference fleet of `{plant_id}` changes composition in scenario `{}`",
                            s.id
                        ))
                    })?;
                    slot.push((w, p.capacity_factors(), s.price(&p.zone)?));
                }
            }
        }
        Ok(panel)
    }

    fn column(series: &[&[T]], t: usize, buf: &mut Vec<T>) {
        buf.clear();
        buf.extend(series.iter().map(|x| x[t]));
    }

    fn moments(&self, f: &[&[T]], p: &[&[T]]) -> Result<HourlyMoments<T>> {
        let mut fc = Vec::with_capacity(f.len());
        let mut pc = Vec::with_capacity(p.len());
        let mut out = HourlyMoments {
            mean_f: Vec::with_capacity(self.hours),
            mean_p: Vec::with_capacity(self.hours),
            cov_fp: Vec::with_capacity(self.hours),
        };
        for t in 0..self.hours {
            Self::column(f, t, &mut fc);
            Self::column(p, t, &mut pc);
            out.mean_f.push(expect(&fc, self.weights)?);
            out.mean_p.push(expect(&pc, self.weights)?);
            out.cov_fp.push(cov(&fc, &pc, self.weights)?);
        }
        Ok(out)
    }

    fn stats(&self) -> Result<EstimatorStats<T>> {
        let own = self.moments(&self.own_f, &self.own_p)?;
        let mut fleet = Vec::with_capacity(self.members.len());
        for (id, rows) in &self.members {
            let w: Vec<T> = rows.iter().map(|r| r.0).collect();
            let f: Vec<&[T]> = rows.iter().map(|r| r.1).collect();
            let p: Vec<&[T]> = rows.iter().map(|r| r.2).collect();
            let hourly = self.moments(&f, &p)?;
            let mut cov_w_f = Vec::with_capacity(self.hours);
            let mut cov_w_fp = Vec::with_capacity(self.hours);
            let mut fc = Vec::new();
            let mut fp = Vec::new();
            for t in 0..self.hours {
                Self::column(&f, t, &mut fc);
                fp.clear();
                fp.extend(f.iter().zip(&p).map(|(a, b)| a[t] * b[t]));
                cov_w_f.push(cov(&w, &fc, self.weights)?);
                cov_w_fp.push(cov(&w, &fp, self.weights)?);
            }
            fleet.push(MemberMoments {
                plant_id: id.clone(),
                hourly,
                mean_w: expect(&w, self.weights)?,
                cov_w_f,
                cov_w_fp,
            });
        }
        Ok(EstimatorStats {
            plant_id: self.plant_id.clone(),
            zone: self.zone.clone(),
            costs: self.costs,
            own,
            fleet,
        })
    }

    fn expected_full_load_hours(&self) -> Result<T> {
        let mut fc = Vec::with_capacity(self.own_f.len());
        let mut total = T::zero();
        for t in 0..self.hours {
            Self::column(&self.own_f, t, &mut fc);
            total = total + expect(&fc, self.weights)?;
        }
        Ok(total)
    }
}

impl<T: Scalar> EstimatorStats<T> {
    pub fn collect(
        plant_id: &str,
        reference: &ReferenceFleet,
        ensemble: &ScenarioEnsemble<T>,
    ) -> Result<Self> {
        Panel::collect(plant_id, Some(reference), ensemble)?.stats()
    }

    /// `sum_t E[f_t]`, expected full-load hours.
    pub fn expected_full_load_hours(&self) -> T {
        self.own.mean_f.iter().copied().sum()
    }

    /// `sum_t E[f_t p_t]`, expected revenue per MW.
    pub fn expected_revenue_per_capacity(&self) -> T {
        (0..self.own.mean_f.len()).map(|t| self.own.expected_product(t)).sum()
    }

    /// `sum_j sum_t E[w_j f_jt p_t]`, expected fleet revenue per fleet MW.
    pub fn expected_fleet_revenue_per_capacity(&self, drop_last_cov: bool) -> T {
        self.fleet
            .iter()
            .map(|m| {
                (0..m.hourly.mean_f.len())
                    .map(|t| m.expected_triple(t, drop_last_cov))
                    .sum::<T>()
            })
            .sum()
    }

    /// `sum_j sum_t E[w_j f_jt]`, expected fleet energy per fleet MW.
    pub fn expected_fleet_full_load_hours(&self, drop_last_cov: bool) -> T {
        self.fleet
            .iter()
            .map(|m| {
                (0..m.hourly.mean_f.len())
                    .map(|t| m.expected_share_energy(t, drop_last_cov))
                    .sum::<T>()
            })
            .sum()
    }

    fn positive_full_load_hours(&self) -> Result<T> {
        let flh = self.expected_full_load_hours();
        if flh <= T::zero() {
            return Err(Error::UndefinedStrike {
                plant: self.plant_id.clone(),
                reason: "expected generation is zero".into(),
            });
        }
        Ok(flh)
    }

    fn expected_lcoe(&self) -> Result<T> {
        let flh = self.positive_full_load_hours()?;
        Ok(self.costs.variable_cost + self.costs.fixed_cost_per_capacity() / flh)
    }

    pub fn strike_2way(&self, opts: &StrikeOptions<T>) -> Result<StrikeEstimate<T>> {
        let cost_base = self.expected_lcoe()?;
        let flh = self.positive_full_load_hours()?;
        let fleet_flh = self.expected_fleet_full_load_hours(opts.drop_last_cov);
        if fleet_flh <= T::zero() {
            return Err(Error::UndefinedStrike {
                plant: self.plant_id.clone(),
                reason: "expected reference fleet generation is zero".into(),
            });
        }
        let zone_value = self.expected_fleet_revenue_per_capacity(opts.drop_last_cov) / fleet_flh;
        let own_value = self.expected_revenue_per_capacity() / flh;
        Ok(StrikeEstimate::new(
            &self.plant_id,
            &self.zone,
            CfdType::TwoWay,
            cost_base,
            zone_value - own_value,
        ))
    }

    pub fn strike_fin(&self, opts: &StrikeOptions<T>) -> StrikeEstimate<T> {
        let cost_base = self.costs.variable_cost * self.expected_full_load_hours()
            + self.costs.fixed_cost_per_capacity();
        let markup = self.expected_fleet_revenue_per_capacity(opts.drop_last_cov)
            - self.expected_revenue_per_capacity();
        StrikeEstimate::new(&self.plant_id, &self.zone, CfdType::Financial, cost_base, markup)
    }
}

/// `c + A M / sum_t E[f_t]`.
pub fn strike_basic_unc<T: Scalar>(plant_id: &str, ensemble: &ScenarioEnsemble<T>) -> Result<StrikeEstimate<T>> {
    let panel = Panel::collect(plant_id, None, ensemble)?;
    let flh = panel.expected_full_load_hours()?;
    if flh <= T::zero() {
        return Err(Error::UndefinedStrike {
            plant: plant_id.to_string(),
            reason: "expected generation is zero".into(),
        });
    }
    let cost_base = panel.costs.variable_cost + panel.costs.fixed_cost_per_capacity() / flh;
    Ok(StrikeEstimate::new(plant_id, &panel.zone, CfdType::Basic, cost_base, T::zero()))
}

/// 2way strike from ratios of expectations. Logs a warning when the
/// neglected Taylor terms exceed the configured threshold.
pub fn strike_2way_unc<T: Scalar>(
    plant_id: &str,
    reference: &ReferenceFleet,
    ensemble: &ScenarioEnsemble<T>,
    opts: &StrikeOptions<T>,
) -> Result<StrikeEstimate<T>> {
    strike_2way_unc_with_diagnostic(plant_id, reference, ensemble, opts).map(|(s, _)| s)
}

pub fn strike_2way_unc_with_diagnostic<T: Scalar>(
    plant_id: &str,
    reference: &ReferenceFleet,
    ensemble: &ScenarioEnsemble<T>,
    opts: &StrikeOptions<T>,
) -> Result<(StrikeEstimate<T>, TaylorDiagnostic<T>)> {
    let panel = Panel::collect(plant_id, Some(reference), ensemble)?;
    let strike = panel.stats()?.strike_2way(opts)?;
    let diagnostic = panel_taylor(&panel, opts)?;
    if diagnostic.flagged {
        log::warn!(
            "2way strike of `{plant_id}`: neglected Taylor terms reach {:.3}% of the estimate (threshold {:.3}%)",
            diagnostic.worst_relative().to_f64_lossy() * 100.0,
            opts.taylor_threshold.to_f64_lossy() * 100.0
        );
    }
    Ok((strike, diagnostic))
}

/// `c sum_t E[f_t] + A M + sum_j sum_t E[w_j f_jt p_t] - sum_t E[f_t p_t]`, €/MW.
pub fn strike_fin_unc<T: Scalar>(
    plant_id: &str,
    reference: &ReferenceFleet,
    ensemble: &ScenarioEnsemble<T>,
    opts: &StrikeOptions<T>,
) -> Result<StrikeEstimate<T>> {
    Ok(EstimatorStats::collect(plant_id, reference, ensemble)?.strike_fin(opts))
}

pub fn strike_unc<T: Scalar>(
    cfd_type: CfdType,
    plant_id: &str,
    reference: &ReferenceFleet,
    ensemble: &ScenarioEnsemble<T>,
    opts: &StrikeOptions<T>,
) -> Result<StrikeEstimate<T>> {
    match cfd_type {
        CfdType::Basic => strike_basic_unc(plant_id, ensemble),
        CfdType::TwoWay => strike_2way_unc(plant_id, reference, ensemble, opts),
        CfdType::Financial => strike_fin_unc(plant_id, reference, ensemble, opts),
    }
}

/// Size of the second-order terms dropped when `E[X/Y]` is replaced by
/// `E[X]/E[Y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioCheck<T> {
    pub name: &'static str,
    /// `E[X] / E[Y]`.
    pub ratio_of_means: T,
    /// `-Cov(X, Y) / E[Y]^2 + E[X] Var(Y) / E[Y]^3`.
    pub correction: T,
    /// `|correction| / |E[X] / E[Y]|`.
    pub relative: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorDiagnostic<T> {
    pub plant_id: String,
    pub checks: Vec<RatioCheck<T>>,
    pub threshold: T,
    pub flagged: bool,
}

impl<T: Scalar> TaylorDiagnostic<T> {
    pub fn worst_relative(&self) -> T {
        self.checks
            .iter()
            .map(|c| c.relative)
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Sum of corrections as they enter the 2way strike, €/MWh.
    pub fn strike_correction(&self) -> T {
        let mut total = T::zero();
        for c in &self.checks {
            total = match c.name {
                "own_market_value" => total - c.correction,
                _ => total + c.correction,
            };
        }
        total
    }
}

fn ratio_check<T: Scalar>(name: &'static str, x: &[T], y: &[T], weights: &[T]) -> Result<RatioCheck<T>> {
    let ex = expect(x, weights)?;
    let ey = expect(y, weights)?;
    if ey <= T::zero() {
        return Err(Error::UndefinedRatio(format!("{name}: expected denominator is zero")));
    }
    let correction = -cov(x, y, weights)? / (ey * ey) + ex * variance(y, weights)? / (ey * ey * ey);
    let ratio_of_means = ex / ey;
    let relative = if ratio_of_means == T::zero() {
        if correction == T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        correction.abs() / ratio_of_means.abs()
    };
    Ok(RatioCheck {
        name,
        ratio_of_means,
        correction,
        relative,
    })
}

fn panel_taylor<T: Scalar>(panel: &Panel<'_, T>, opts: &StrikeOptions<T>) -> Result<TaylorDiagnostic<T>> {
    let scenarios = panel.own_f.len();
    let own_flh: Vec<T> = panel.own_f.iter().map(|f| f.iter().copied().sum()).collect();
    let own_rev: Vec<T> = panel.own_f.iter().zip(&panel.own_p).map(|(f, p)| dot(f, p)).collect();
    let fixed = vec![panel.costs.fixed_cost_per_capacity(); scenarios];
    let mut fleet_rev = vec![T::zero(); scenarios];
    let mut fleet_flh = vec![T::zero(); scenarios];
    for rows in panel.members.values() {
        for (s, &(w, f, p)) in rows.iter().enumerate() {
            fleet_rev[s] = fleet_rev[s] + w * dot(f, p);
            fleet_flh[s] = fleet_flh[s] + w * f.iter().copied().sum::<T>();
        }
    }
    let checks = vec![
        ratio_check("fixed_cost_per_energy", &fixed, &own_flh, panel.weights)?,
        ratio_check("zone_market_value", &fleet_rev, &fleet_flh, panel.weights)?,
        ratio_check("own_market_value", &own_rev, &own_flh, panel.weights)?,
    ];
    let flagged = checks.iter().any(|c| c.relative > opts.taylor_threshold);
    Ok(TaylorDiagnostic {
        plant_id: panel.plant_id.clone(),
        checks,
        threshold: opts.taylor_threshold,
        flagged,
    })
}

/// Neglected Taylor terms of the 2way strike for `plant_id`.
pub fn taylor_diagnostic_2way<T: Scalar>(
    plant_id: &str,
    reference: &ReferenceFleet,
    ensemble: &ScenarioEnsemble<T>,
    opts: &StrikeOptions<T>,
) -> Result<TaylorDiagnostic<T>> {
    let panel = Panel::collect(plant_id, Some(reference), ensemble)?;
    panel_taylor(&panel, opts)
}

/// Products of the moments equal the estimator functions they stand for.
#[doc(hidden)]
pub fn check_moment_identities<T: Scalar>(
    plant_id: &str,
    reference: &ReferenceFleet,
    ensemble: &ScenarioEnsemble<T>,
) -> Result<T> {
    let panel = Panel::collect(plant_id, Some(reference), ensemble)?;
    let stats = panel.stats()?;
    let mut worst = T::zero();
    let mut fc = Vec::new();
    let mut pc = Vec::new();
    for t in 0..panel.hours {
        Panel::column(&panel.own_f, t, &mut fc);
        Panel::column(&panel.own_p, t, &mut pc);
        let direct = expect_product2(&fc, &pc, panel.weights)?;
        worst = worst.max((direct - stats.own.expected_product(t)).abs());
    }
    for m in &stats.fleet {
        let rows = &panel.members[&m.plant_id];
        let w: Vec<T> = rows.iter().map(|r| r.0).collect();
        for t in 0..panel.hours {
            fc.clear();
            fc.extend(rows.iter().map(|r| r.1[t]));
            pc.clear();
            pc.extend(rows.iter().map(|r| r.2[t]));
            for drop in [true, false] {
                let direct = expect_product3(&w, &fc, &pc, panel.weights, drop)?;
                worst = worst.max((direct - m.expected_triple(t, drop)).abs());
            }
        }
    }
    Ok(worst)
}
