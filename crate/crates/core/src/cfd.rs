//! Ex-post CfD payments, settled once per year.
//!
//! A positive payment flows from the government to the plant.
//!
//! | type      | unit   | reference price                        |
//! |-----------|--------|----------------------------------------|
//! | basic     | €/MWh  | hourly spot price                      |
//! | 2way      | €/MWh  | yearly market value of the fleet `v_n` |
//! | financial | €/MW   | fleet revenue per capacity `r_n`       |

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{
    market_revenue, market_value_plant, market_value_zone, revenue_per_capacity_zone, total_generation,
    Fleet, PlantProfile, Scenario,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CfdType {
    Basic,
    TwoWay,
    Financial,
}

impl CfdType {
    pub const ALL: [CfdType; 3] = [CfdType::Basic, CfdType::TwoWay, CfdType::Financial];

    pub fn as_str(&self) -> &'static str {
        match self {
            CfdType::Basic => "basic",
            CfdType::TwoWay => "2way",
            CfdType::Financial => "financial",
        }
    }

    /// Unit of the strike and reference price.
    pub fn unit(&self) -> &'static str {
        match self {
            CfdType::Basic | CfdType::TwoWay => "EUR/MWh",
            CfdType::Financial => "EUR/MW",
        }
    }

    pub fn is_capacity_based(&self) -> bool {
        matches!(self, CfdType::Financial)
    }
}

impl fmt::Display for CfdType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CfdType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "basic" => Ok(CfdType::Basic),
            "2way" | "twoway" | "two-way" => Ok(CfdType::TwoWay),
            "financial" | "fin" => Ok(CfdType::Financial),
            _ => Err(Error::invalid(format!("unknown CfD type `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfdContract<T> {
    pub plant_id: String,
    pub cfd_type: CfdType,
    /// €/MWh, or €/MW for the financial CfD.
    pub strike: T,
    /// Contract length in years, informational.
    pub duration_years: Option<u32>,
}

impl<T: Scalar> CfdContract<T> {
    pub fn new(plant_id: impl Into<String>, cfd_type: CfdType, strike: T) -> Result<Self> {
        if !strike.is_finite() {
            return Err(Error::invalid("strike must be finite"));
        }
        Ok(Self {
            plant_id: plant_id.into(),
            cfd_type,
            strike,
            duration_years: None,
        })
    }

    pub fn unit(&self) -> &'static str {
        self.cfd_type.unit()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PaymentRecord<T> {
    pub plant_id: String,
    pub scenario_id: String,
    pub cfd_type: CfdType,
    /// €, positive when the government pays.
    pub payment: T,
    /// For the basic CfD the plant's own market value, the generation
    /// weighted mean of the hourly reference.
    pub reference_price: T,
    pub reference_unit: &'static str,
}

fn check_contract<T>(contract: &CfdContract<T>, plant: &PlantProfile<T>, expected: CfdType) -> Result<()> {
    if contract.cfd_type != expected {
        return Err(Error::invalid(format!(
            "contract on `{}` is {}, expected {expected}",
            contract.plant_id, contract.cfd_type
        )));
    }
    if contract.plant_id != plant.id {
        return Err(Error::invalid(format!(
            "contract is for `{}`, not `{}`",
            contract.plant_id, plant.id
        )));
    }
    Ok(())
}

fn record<T>(contract: &CfdContract<T>, s: &Scenario<T>, payment: T, reference_price: T) -> PaymentRecord<T> {
    PaymentRecord {
        plant_id: contract.plant_id.clone(),
        scenario_id: s.id.clone(),
        cfd_type: contract.cfd_type,
        payment,
        reference_price,
        reference_unit: contract.cfd_type.unit(),
    }
}

/// `P = sum_t (S - p_t) q_t`.
pub fn payment_basic<T: Scalar>(
    contract: &CfdContract<T>,
    plant: &PlantProfile<T>,
    s: &Scenario<T>,
) -> Result<PaymentRecord<T>> {
    check_contract(contract, plant, CfdType::Basic)?;
    let payment = contract.strike * total_generation(plant, s)? - market_revenue(plant, s)?;
    Ok(record(contract, s, payment, market_value_plant(plant, s)?))
}

/// `P = (S - v_n) sum_t q_t`.
pub fn payment_2way<T: Scalar>(
    contract: &CfdContract<T>,
    plant: &PlantProfile<T>,
    fleet: &Fleet<'_, T>,
    s: &Scenario<T>,
) -> Result<PaymentRecord<T>> {
    check_contract(contract, plant, CfdType::TwoWay)?;
    let reference = market_value_zone(fleet, s)?;
    let payment = (contract.strike - reference) * total_generation(plant, s)?;
    Ok(record(contract, s, payment, reference))
}

/// `P = Q (S - r_n)`, independent of the plant's own output.
pub fn payment_financial<T: Scalar>(
    contract: &CfdContract<T>,
    plant: &PlantProfile<T>,
    fleet: &Fleet<'_, T>,
    s: &Scenario<T>,
) -> Result<PaymentRecord<T>> {
    check_contract(contract, plant, CfdType::Financial)?;
    let reference = revenue_per_capacity_zone(fleet, s)?;
    let payment = plant.capacity() * (contract.strike - reference);
    Ok(record(contract, s, payment, reference))
}

pub fn payment<T: Scalar>(
    contract: &CfdContract<T>,
    plant: &PlantProfile<T>,
    fleet: &Fleet<'_, T>,
    s: &Scenario<T>,
) -> Result<PaymentRecord<T>> {
    match contract.cfd_type {
        CfdType::Basic => payment_basic(contract, plant, s),
        CfdType::TwoWay => payment_2way(contract, plant, fleet, s),
        CfdType::Financial => payment_financial(contract, plant, fleet, s),
    }
}
