//! Scenario-weighted expectations and population covariances.
//!
//! Every estimator takes the per-scenario values and the scenario weights.
//! With uniform weights `1/S` the covariance is the population covariance
//! `(1/S) sum_s (x_s - E[x]) (y_s - E[y])`.

use crate::error::{Error, Result};
use crate::model::check_weights;
use crate::scalar::Scalar;

fn check<T: Scalar>(what: &str, xs: &[T], weights: &[T]) -> Result<()> {
    if xs.len() != weights.len() {
        return Err(Error::dimension(what, weights.len(), xs.len()));
    }
    check_weights(weights)
}

fn weighted_mean<T: Scalar>(xs: &[T], weights: &[T]) -> T {
    xs.iter().zip(weights).map(|(&x, &w)| w * x).sum()
}

fn weighted_cov<T: Scalar>(xs: &[T], ys: &[T], weights: &[T]) -> T {
    let mx = weighted_mean(xs, weights);
    let my = weighted_mean(ys, weights);
    xs.iter()
        .zip(ys)
        .zip(weights)
        .map(|((&x, &y), &w)| w * (x - mx) * (y - my))
        .sum()
}

/// `E[x]`.
pub fn expect<T: Scalar>(xs: &[T], weights: &[T]) -> Result<T> {
    check("values", xs, weights)?;
    Ok(weighted_mean(xs, weights))
}

/// `Cov[x, y]`.
pub fn cov<T: Scalar>(xs: &[T], ys: &[T], weights: &[T]) -> Result<T> {
    check("first series", xs, weights)?;
    check("second series", ys, weights)?;
    Ok(weighted_cov(xs, ys, weights))
}

pub fn variance<T: Scalar>(xs: &[T], weights: &[T]) -> Result<T> {
    cov(xs, xs, weights)
}

/// `E[f p] = E[f] E[p] + Cov[f, p]`.
pub fn expect_product2<T: Scalar>(f: &[T], p: &[T], weights: &[T]) -> Result<T> {
    check("first factor", f, weights)?;
    check("second factor", p, weights)?;
    Ok(weighted_mean(f, weights) * weighted_mean(p, weights) + weighted_cov(f, p, weights))
}

/// `E[w f p] = E[w] E[f] E[p] + E[w] Cov[f, p] + Cov[w, f p]`.
///
/// With `drop_last_cov` the final term is omitted, which is exact when `w`
/// is independent of `f p`.
pub fn expect_product3<T: Scalar>(
    w: &[T],
    f: &[T],
    p: &[T],
    weights: &[T],
    drop_last_cov: bool,
) -> Result<T> {
    check("first factor", w, weights)?;
    check("second factor", f, weights)?;
    check("third factor", p, weights)?;
    let ew = weighted_mean(w, weights);
    let base = ew * weighted_mean(f, weights) * weighted_mean(p, weights) + ew * weighted_cov(f, p, weights);
    if drop_last_cov {
        return Ok(base);
    }
    let fp: Vec<T> = f.iter().zip(p).map(|(&a, &b)| a * b).collect();
    Ok(base + weighted_cov(w, &fp, weights))
}
