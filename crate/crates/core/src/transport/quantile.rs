//! Exact 1D Wasserstein distance by sweeping the merged quantile breakpoints
//! of the two piecewise-constant inverse CDFs. The monotone coupling this
//! produces is optimal for every convex ground cost.

use super::{check_pair, TransportPlan};
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;

/// W_m(mu, nu) on a 1D domain, computed exactly.
pub fn wasserstein_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure, m: f64) -> Result<f64> {
    wasserstein_1d_plan(mu, nu, m).map(|(d, _)| d)
}

/// 1D distance together with the monotone (quantile) optimal plan.
pub fn wasserstein_1d_plan(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    m: f64,
) -> Result<(f64, TransportPlan)> {
    check_pair(mu, nu, m)?;
    if mu.dim() != 1 {
        return Err(Error::DimensionMismatch(mu.dim(), 1));
    }

    let sorted = |mm: &DiscreteMeasure| -> Vec<usize> {
        let mut order: Vec<usize> = (0..mm.len()).collect();
        order.sort_by(|a, b| {
            mm.position(*a)[0]
                .partial_cmp(&mm.position(*b)[0])
                .expect("finite positions")
        });
        order
    };
    let oa = sorted(mu);
    let ob = sorted(nu);

    let mut ia = 0usize;
    let mut ib = 0usize;
    let mut rem_a = mu.weight(oa[0]);
    let mut rem_b = nu.weight(ob[0]);
    let mut cost = 0.0;
    let mut entries = Vec::with_capacity(mu.len() + nu.len());
    loop {
        let take = rem_a.min(rem_b);
        let xa = mu.position(oa[ia])[0];
        let xb = nu.position(ob[ib])[0];
        if take > 0.0 {
            cost += take * (xa - xb).abs().powf(m);
            entries.push((oa[ia] as u32, ob[ib] as u32, take));
        }
        rem_a -= take;
        rem_b -= take;
        let a_done = rem_a <= 0.0;
        let b_done = rem_b <= 0.0;
        if a_done && ia + 1 < oa.len() {
            ia += 1;
            rem_a = mu.weight(oa[ia]);
        }
        if b_done && ib + 1 < ob.len() {
            ib += 1;
            rem_b = nu.weight(ob[ib]);
        }
        if (a_done && ia + 1 >= oa.len() && rem_a <= 0.0)
            || (b_done && ib + 1 >= ob.len() && rem_b <= 0.0)
        {
            break;
        }
    }

    let plan = TransportPlan::new(mu.clone(), nu.clone(), entries, m)?;
    Ok((cost.powf(1.0 / m), plan))
}
