use super::{DemandSnapshot, MinShares};

/// Relative tolerance for treating a residual demand or airtime as exhausted.
const EXHAUSTED: f64 = 1e-12;

/// Max-min fair minimum shares by water-filling over the per-direction
/// demands `λ·T`, with every opportunity costing `t_bar_s` of airtime.
///
/// Each round grants every unserved demand the smaller of the smallest
/// residual demand and an equal split of the remaining airtime. Stops when
/// all demands are met or the epoch is fully booked.
pub fn min_fair_shares(demands: &DemandSnapshot, t_bar_s: f64) -> MinShares {
    let n = demands.lambda_d.len();
    let mut shares = MinShares::zeros(n.saturating_sub(1));
    if !(t_bar_s > 0.0) || !(demands.epoch_s > 0.0) {
        return shares;
    }
    let epoch = demands.epoch_s;

    // (client, is_uplink, residual demand)
    let mut open: Vec<(usize, bool, f64)> = Vec::with_capacity(2 * n);
    for k in 1..n {
        let d = demands.lambda_d[k] * epoch;
        if d > 0.0 {
            open.push((k, false, d));
        }
        let u = demands.lambda_u[k] * epoch;
        if u > 0.0 {
            open.push((k, true, u));
        }
    }
    let total_demand: f64 = open.iter().map(|d| d.2).sum();
    let scale = total_demand.max(epoch / t_bar_s);

    let mut granted_total = 0.0;
    while !open.is_empty() {
        let left = (epoch - granted_total * t_bar_s) / (t_bar_s * open.len() as f64);
        let smallest = open.iter().map(|d| d.2).fold(f64::INFINITY, f64::min);
        let step = smallest.min(left);
        if step <= EXHAUSTED * scale {
            break;
        }
        for (k, up, d) in open.iter_mut() {
            if *up {
                shares.eta_u[*k] += step;
            } else {
                shares.eta_d[*k] += step;
            }
            *d -= step;
            granted_total += step;
        }
        open.retain(|&(_, _, d)| d > EXHAUSTED * scale);
    }

    // Clamp against round-off so the invariants hold exactly.
    for k in 1..n {
        shares.eta_d[k] = shares.eta_d[k].min(demands.lambda_d[k] * epoch).max(0.0);
        shares.eta_u[k] = shares.eta_u[k].min(demands.lambda_u[k] * epoch).max(0.0);
    }
    let used: f64 = shares.total() * t_bar_s;
    if used > epoch {
        let s = epoch / used;
        shares.eta_d.iter_mut().chain(shares.eta_u.iter_mut()).for_each(|e| *e *= s);
    }
    shares
}
