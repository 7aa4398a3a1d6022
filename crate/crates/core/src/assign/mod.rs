//! Epoch-start access assignment: minimum fair shares, the airtime LP, and
//! conversion of the optimal opportunity counts into contention parameters.

mod fairness;
pub mod simplex;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::debug;

use crate::channel::{LinkState, PowerConfig};
use crate::error::{invalid, Error, Result};
use crate::pairing::{build_candidate_pairs, CandidatePairs, FrameLengths, PairKey, PairingParams, RateEstimate};
use crate::phy::RateTable;

pub use fairness::min_fair_shares;
use simplex::{LinearProgram, LpStatus, Relation};

/// Per-client arrival rates (frames/s) and mean frame lengths, indexed by
/// node id with entry 0 unused.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandSnapshot {
    pub lambda_d: Vec<f64>,
    pub lambda_u: Vec<f64>,
    pub l_d_bits: Vec<f64>,
    pub l_u_bits: Vec<f64>,
    pub epoch_s: f64,
}

impl DemandSnapshot {
    /// Every client offers `lambda` frames/s of `bits`-bit frames both ways.
    pub fn uniform(n_clients: usize, lambda: f64, bits: f64, epoch_s: f64) -> Self {
        let mut l = vec![lambda; n_clients + 1];
        l[0] = 0.0;
        Self {
            lambda_d: l.clone(),
            lambda_u: l,
            l_d_bits: vec![bits; n_clients + 1],
            l_u_bits: vec![bits; n_clients + 1],
            epoch_s,
        }
    }

    pub fn n_clients(&self) -> usize {
        self.lambda_d.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lambda_d.len();
        if n < 2 {
            return Err(invalid("demand snapshot needs at least one client"));
        }
        if [self.lambda_u.len(), self.l_d_bits.len(), self.l_u_bits.len()].iter().any(|&k| k != n) {
            return Err(invalid("demand vectors differ in length"));
        }
        if !(self.epoch_s > 0.0) || !self.epoch_s.is_finite() {
            return Err(invalid("epoch duration must be positive"));
        }
        let all = self.lambda_d.iter().chain(&self.lambda_u).chain(&self.l_d_bits).chain(&self.l_u_bits);
        if all.clone().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(invalid("rates and frame lengths must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn frame_lengths(&self) -> FrameLengths {
        FrameLengths {
            down_bits: self.l_d_bits.clone(),
            up_bits: self.l_u_bits.clone(),
        }
    }

    /// Mean time to send one frame at the lowest rate, over every client and
    /// both directions.
    pub fn t_bar_s(&self, rates: &RateTable) -> f64 {
        let c = self.n_clients();
        if c == 0 {
            return 0.0;
        }
        let sum: f64 = (1..=c).map(|k| self.l_d_bits[k] + self.l_u_bits[k]).sum();
        sum / (2 * c) as f64 / (rates.lowest_rate_mbps() * 1e6)
    }
}

/// Minimum transmission-opportunity counts per client and direction.
#[derive(Debug, Clone, PartialEq)]
pub struct MinShares {
    pub eta_d: Vec<f64>,
    pub eta_u: Vec<f64>,
}

impl MinShares {
    pub fn zeros(n_clients: usize) -> Self {
        Self {
            eta_d: vec![0.0; n_clients + 1],
            eta_u: vec![0.0; n_clients + 1],
        }
    }

    pub fn total(&self) -> f64 {
        self.eta_d.iter().chain(&self.eta_u).sum()
    }
}

/// Optimal opportunity counts per candidate pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub n: BTreeMap<PairKey, f64>,
    /// Expected delivered bits per second.
    pub objective_bps: f64,
    /// The minimum shares the solution honors (after any relaxation).
    pub shares: MinShares,
    pub relaxed: bool,
}

impl Allocation {
    pub fn total(&self) -> f64 {
        self.n.values().sum()
    }
}

fn lp_tolerance(scale: f64) -> f64 {
    1e-9 * (1.0 + scale)
}

/// Solves the airtime LP: maximize delivered bits per second subject to the
/// per-client minimum shares, per-client demand caps and the epoch budget.
///
/// Variables whose demand cap is zero are fixed at zero. Returns
/// `Error::Infeasible` when the minimum shares cannot all be served.
pub fn solve_assignment(pairs: &CandidatePairs, demands: &DemandSnapshot, shares: &MinShares) -> Result<Allocation> {
    demands.validate()?;
    let c = demands.n_clients();
    if shares.eta_d.len() != c + 1 || shares.eta_u.len() != c + 1 {
        return Err(invalid("minimum shares do not match the client count"));
    }
    if pairs.iter().any(|(k, _)| k.down > c || k.up > c) {
        return Err(invalid("pair references a client outside the demand snapshot"));
    }
    let epoch = demands.epoch_s;
    let cap_d: Vec<f64> = demands.lambda_d.iter().map(|l| l * epoch).collect();
    let cap_u: Vec<f64> = demands.lambda_u.iter().map(|l| l * epoch).collect();

    let vars: Vec<(PairKey, f64, f64)> = pairs
        .iter()
        .filter(|(k, _)| (k.down == 0 || cap_d[k.down] > 0.0) && (k.up == 0 || cap_u[k.up] > 0.0))
        .map(|(k, m)| (*k, m.bits(), m.t_s))
        .collect();

    let mut lp = LinearProgram::new(vars.len());
    for (v, &(_, bits, _)) in vars.iter().enumerate() {
        lp.objective[v] = bits / epoch / 1e6;
    }
    let mut by_down: Vec<Vec<(usize, f64)>> = vec![Vec::new(); c + 1];
    let mut by_up: Vec<Vec<(usize, f64)>> = vec![Vec::new(); c + 1];
    let mut min_t_d = vec![f64::INFINITY; c + 1];
    let mut min_t_u = vec![f64::INFINITY; c + 1];
    for (v, &(k, _, t)) in vars.iter().enumerate() {
        if k.down != 0 {
            by_down[k.down].push((v, 1.0));
            min_t_d[k.down] = min_t_d[k.down].min(t);
        }
        if k.up != 0 {
            by_up[k.up].push((v, 1.0));
            min_t_u[k.up] = min_t_u[k.up].min(t);
        }
    }
    for k in 1..=c {
        for (rows, eta, cap, min_t, dir) in [
            (&by_down[k], shares.eta_d[k], cap_d[k], min_t_d[k], "downlink"),
            (&by_up[k], shares.eta_u[k], cap_u[k], min_t_u[k], "uplink"),
        ] {
            if eta > 0.0 {
                if rows.is_empty() {
                    return Err(Error::Infeasible(format!("client {k} has a {dir} share but no usable pair")));
                }
                lp.add_row(rows.clone(), Relation::Ge, eta);
            }
            if !rows.is_empty() && cap * min_t < epoch {
                lp.add_row(rows.clone(), Relation::Le, cap);
            }
        }
    }
    lp.add_row(
        vars.iter().enumerate().map(|(v, &(_, _, t))| (v, t / epoch)).collect(),
        Relation::Le,
        1.0,
    );

    let sol = simplex::solve(&lp);
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible("minimum shares exceed the epoch".into())),
        other => return Err(Error::Infeasible(format!("solver stopped with {other:?}"))),
    }
    let scale = cap_d.iter().chain(&cap_u).fold(1.0, |a: f64, &b| a.max(b));
    let tol = lp_tolerance(scale);
    let mut n: BTreeMap<PairKey, f64> = pairs.iter().map(|(k, _)| (*k, 0.0)).collect();
    for (v, &(k, _, _)) in vars.iter().enumerate() {
        let x = sol.x[v];
        n.insert(k, if x > tol * 1e-3 { x } else { 0.0 });
    }
    let objective_bps = vars.iter().map(|(k, bits, _)| n[k] * bits).sum::<f64>() / epoch;
    Ok(Allocation {
        n,
        objective_bps,
        shares: shares.clone(),
        relaxed: false,
    })
}

/// `solve_assignment` with the fallback used at run time: shares of clients
/// without a half-duplex pair are dropped, and if the rest still cannot fit
/// they are scaled down until the pure half-duplex allocation fits.
pub fn solve_with_relaxation(pairs: &CandidatePairs, demands: &DemandSnapshot, shares: &MinShares) -> Result<Allocation> {
    match solve_assignment(pairs, demands, shares) {
        Ok(a) => return Ok(a),
        Err(Error::Infeasible(msg)) => debug!("assignment infeasible ({msg}); relaxing minimum shares"),
        Err(e) => return Err(e),
    }
    let c = demands.n_clients();
    let mut relaxed = shares.clone();
    let mut hd_time = 0.0;
    for k in 1..=c {
        match pairs.get(&PairKey::down_only(k)) {
            Some(m) => hd_time += relaxed.eta_d[k] * m.t_s,
            None if relaxed.eta_d[k] > 0.0 => {
                debug!("client {k} has no usable downlink; dropping its minimum share");
                relaxed.eta_d[k] = 0.0;
            }
            None => {}
        }
        match pairs.get(&PairKey::up_only(k)) {
            Some(m) => hd_time += relaxed.eta_u[k] * m.t_s,
            None if relaxed.eta_u[k] > 0.0 => {
                debug!("client {k} has no usable uplink; dropping its minimum share");
                relaxed.eta_u[k] = 0.0;
            }
            None => {}
        }
    }
    // Leave a little slack so the rescaled shares are strictly feasible.
    let budget = demands.epoch_s * (1.0 - 1e-9);
    if hd_time > budget {
        let s = budget / hd_time;
        debug!("minimum shares need {:.3} ms of a {:.3} ms epoch; scaling by {s:.4}", hd_time * 1e3, demands.epoch_s * 1e3);
        relaxed.eta_d.iter_mut().chain(relaxed.eta_u.iter_mut()).for_each(|e| *e *= s);
    }
    let mut a = solve_assignment(pairs, demands, &relaxed)?;
    a.relaxed = true;
    Ok(a)
}

/// Normalizes opportunity counts into access probabilities. An empty map
/// means the epoch is idle.
pub fn to_probabilities(n: &BTreeMap<PairKey, f64>) -> BTreeMap<PairKey, f64> {
    let total: f64 = n.values().filter(|v| **v > 0.0).sum();
    if !(total > 0.0) {
        return BTreeMap::new();
    }
    n.iter()
        .filter(|(_, v)| **v > 1e-12 * total)
        .map(|(k, v)| (*k, v / total))
        .collect()
}

/// Probability that the AP picks each downlink endpoint (0 reserves the
/// channel for a half-duplex uplink).
pub fn downlink_marginals(p: &BTreeMap<PairKey, f64>) -> BTreeMap<usize, f64> {
    let mut m = BTreeMap::new();
    for (k, v) in p {
        *m.entry(k.down).or_insert(0.0) += v;
    }
    m
}

/// Probability of each uplink endpoint given the chosen downlink endpoint;
/// uplink 0 is the AP's virtual client.
pub fn conditional_uplink(p: &BTreeMap<PairKey, f64>, p_d: &BTreeMap<usize, f64>) -> Result<BTreeMap<PairKey, f64>> {
    let mut out = BTreeMap::new();
    for (k, v) in p {
        let d = p_d.get(&k.down).copied().unwrap_or(0.0);
        if !(d > 0.0) {
            return Err(Error::UndefinedConditional(k.down));
        }
        out.insert(*k, v / d);
    }
    Ok(out)
}

/// `min(⌈1/p_u⌉, cw_max)`; `None` when `p_u` is zero (never contends).
pub fn contention_window(p_u: f64, cw_max: u32) -> Result<Option<u32>> {
    if !(0.0..=1.0 + 1e-12).contains(&p_u) {
        return Err(invalid(format!("conditional probability {p_u} outside [0, 1]")));
    }
    if cw_max == 0 {
        return Err(invalid("cw_max must be at least 1"));
    }
    if p_u == 0.0 {
        return Ok(None);
    }
    let w = (1.0 / p_u - 1e-9).ceil().max(1.0);
    Ok(Some(if w >= cw_max as f64 { cw_max } else { w as u32 }))
}

/// One uplink option for a given downlink endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UplinkEntry {
    pub up: usize,
    pub p_u: f64,
    pub cw: u32,
}

/// Announced access parameters for one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessTable {
    pub n_clients: usize,
    pub p: BTreeMap<PairKey, f64>,
    /// Indexed by downlink endpoint `0..=n_clients`.
    pub p_d: Vec<f64>,
    pub p_u: BTreeMap<PairKey, f64>,
    pub cw: BTreeMap<PairKey, u32>,
    groups: Vec<Vec<UplinkEntry>>,
}

impl AccessTable {
    pub fn idle(n_clients: usize) -> Self {
        Self {
            n_clients,
            p: BTreeMap::new(),
            p_d: vec![0.0; n_clients + 1],
            p_u: BTreeMap::new(),
            cw: BTreeMap::new(),
            groups: vec![Vec::new(); n_clients + 1],
        }
    }

    pub fn from_probabilities(n_clients: usize, p: BTreeMap<PairKey, f64>, cw_max: u32) -> Result<Self> {
        if p.keys().any(|k| k.down > n_clients || k.up > n_clients) {
            return Err(invalid("probability table references an unknown client"));
        }
        let marg = downlink_marginals(&p);
        let p_u = conditional_uplink(&p, &marg)?;
        let mut table = Self::idle(n_clients);
        for (i, v) in &marg {
            table.p_d[*i] = *v;
        }
        for (k, &pu) in &p_u {
            let pu = pu.min(1.0);
            if let Some(w) = contention_window(pu, cw_max)? {
                table.cw.insert(*k, w);
                table.groups[k.down].push(UplinkEntry { up: k.up, p_u: pu, cw: w });
            }
        }
        table.p = p;
        table.p_u = p_u;
        Ok(table)
    }

    pub fn is_idle(&self) -> bool {
        self.p.is_empty()
    }

    /// Uplink options for downlink endpoint `i`, ordered by client id with the
    /// virtual client (0) first when present.
    pub fn uplinks(&self, i: usize) -> &[UplinkEntry] {
        self.groups.get(i).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Window of the virtual client for downlink `i`, if `(i, 0)` has mass.
    pub fn virtual_cw(&self, i: usize) -> Option<u32> {
        self.uplinks(i).first().filter(|e| e.up == 0).map(|e| e.cw)
    }

    pub fn dump(&self, n: Option<&BTreeMap<PairKey, f64>>) -> String {
        let mut s = String::from("# pair n p p_d p_u cw\n");
        for (k, p) in &self.p {
            let nv = n.and_then(|m| m.get(k)).copied().unwrap_or(f64::NAN);
            let _ = writeln!(
                s,
                "{k} {nv:.4} {p:.6} {:.6} {:.6} {}",
                self.p_d[k.down],
                self.p_u[k],
                self.cw.get(k).copied().unwrap_or(0)
            );
        }
        s
    }
}

/// Inputs shared by every epoch's assignment.
#[derive(Debug, Clone, Copy)]
pub struct AssignConfig<'a> {
    pub rates: &'a RateTable,
    pub power: &'a PowerConfig,
    pub delta_db: f64,
    pub epsilon_mbps: f64,
    pub estimate: RateEstimate,
    pub cw_max: u32,
}

impl AssignConfig<'_> {
    pub fn pairing(&self) -> PairingParams<'_> {
        PairingParams {
            rates: self.rates,
            power: self.power,
            delta_db: self.delta_db,
            epsilon_mbps: self.epsilon_mbps,
            estimate: self.estimate,
        }
    }
}

/// Everything computed at an epoch start.
#[derive(Debug, Clone)]
pub struct EpochAssignment {
    pub pairs: CandidatePairs,
    pub shares: MinShares,
    pub allocation: Allocation,
    pub table: AccessTable,
}

/// Minimum shares, LP and probability conversion for one epoch.
pub fn assign_epoch(demands: &DemandSnapshot, links: &LinkState, cfg: &AssignConfig<'_>) -> Result<EpochAssignment> {
    demands.validate()?;
    if demands.n_clients() != links.n_clients() {
        return Err(invalid("demand snapshot and link state disagree on the client count"));
    }
    let pairs = build_candidate_pairs(links, &cfg.pairing(), &demands.frame_lengths())?;
    assign_with_pairs(demands, pairs, cfg.rates, cfg.cw_max)
}

/// The assignment pipeline for an already built candidate set.
pub fn assign_with_pairs(
    demands: &DemandSnapshot,
    pairs: CandidatePairs,
    rates: &RateTable,
    cw_max: u32,
) -> Result<EpochAssignment> {
    let shares = min_fair_shares(demands, demands.t_bar_s(rates));
    let allocation = solve_with_relaxation(&pairs, demands, &shares)?;
    let p = to_probabilities(&allocation.n);
    let table = AccessTable::from_probabilities(demands.n_clients(), p, cw_max)?;
    Ok(EpochAssignment {
        pairs,
        shares,
        allocation,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::PairMetrics;

    fn metrics(r_d: f64, r_u: f64, bits: f64) -> PairMetrics {
        let l_d = if r_d > 0.0 { bits } else { 0.0 };
        let l_u = if r_u > 0.0 { bits } else { 0.0 };
        PairMetrics {
            r_d_mbps: r_d,
            r_u_mbps: r_u,
            r_total_mbps: r_d + r_u,
            t_s: crate::pairing::pair_airtime(l_d, l_u, r_d, r_u).unwrap(),
            l_d_bits: l_d,
            l_u_bits: l_u,
        }
    }

    fn hd_pairs(c: usize, rate: f64) -> CandidatePairs {
        let mut pairs = BTreeMap::new();
        for k in 1..=c {
            pairs.insert(PairKey::down_only(k), metrics(rate, 0.0, 12000.0));
            pairs.insert(PairKey::up_only(k), metrics(0.0, rate, 12000.0));
        }
        CandidatePairs { pairs }
    }

    #[test]
    fn half_duplex_backlogged_fills_epoch_equally() {
        let pairs = hd_pairs(2, 12.0);
        let d = DemandSnapshot::uniform(2, 2000.0, 12000.0, 0.1);
        let shares = min_fair_shares(&d, d.t_bar_s(&RateTable::default()));
        let a = solve_assignment(&pairs, &d, &shares).unwrap();
        let busy: f64 = a.n.iter().map(|(k, n)| n * pairs.get(k).unwrap().t_s).sum();
        assert!((busy - 0.1).abs() < 1e-9);
        // 1 ms per frame: 100 opportunities over the epoch.
        assert!((a.total() - 100.0).abs() < 1e-6);
        assert!((a.objective_bps - 12e6).abs() < 1e-3);
        for k in 1..=2 {
            let down = a.n[&PairKey::down_only(k)];
            let up = a.n[&PairKey::up_only(k)];
            assert!(down >= shares.eta_d[k] - 1e-9 && up >= shares.eta_u[k] - 1e-9);
        }
    }

    #[test]
    fn dominant_full_duplex_pair_takes_residual() {
        let mut pairs = hd_pairs(2, 12.0);
        pairs.pairs.insert(PairKey::full(1, 2), metrics(24.0, 24.0, 12000.0));
        let d = DemandSnapshot::uniform(2, 2000.0, 12000.0, 0.1);
        let shares = MinShares {
            eta_d: vec![0.0, 5.0, 5.0],
            eta_u: vec![0.0, 5.0, 5.0],
        };
        let a = solve_assignment(&pairs, &d, &shares).unwrap();
        // The FD pair covers the minimums of downlink 1 and uplink 2; the other
        // two need 10 ms of HD time, leaving 90 ms at 0.5 ms per FD txop.
        assert!((a.n[&PairKey::full(1, 2)] - 180.0).abs() < 1e-6, "{a:?}");
        assert!((a.n[&PairKey::down_only(2)] - 5.0).abs() < 1e-6);
        assert!((a.n[&PairKey::up_only(1)] - 5.0).abs() < 1e-6);
        assert_eq!(a.n[&PairKey::down_only(1)], 0.0);
    }

    #[test]
    fn zero_demand_gives_zero_allocation() {
        let pairs = hd_pairs(3, 12.0);
        let d = DemandSnapshot::uniform(3, 0.0, 12000.0, 0.1);
        let shares = min_fair_shares(&d, 0.002);
        let a = solve_assignment(&pairs, &d, &shares).unwrap();
        assert_eq!(a.total(), 0.0);
        assert_eq!(a.objective_bps, 0.0);
        assert!(to_probabilities(&a.n).is_empty());
    }

    #[test]
    fn missing_half_duplex_pair_is_relaxed() {
        let mut pairs = hd_pairs(2, 12.0);
        pairs.pairs.remove(&PairKey::up_only(2));
        let d = DemandSnapshot::uniform(2, 2000.0, 12000.0, 0.1);
        let shares = min_fair_shares(&d, 0.002);
        assert!(matches!(solve_assignment(&pairs, &d, &shares), Err(Error::Infeasible(_))));
        let a = solve_with_relaxation(&pairs, &d, &shares).unwrap();
        assert!(a.relaxed);
        assert_eq!(a.shares.eta_u[2], 0.0);
        assert!(a.shares.eta_d[2] > 0.0);
    }

    #[test]
    fn slow_links_scale_shares_into_the_epoch() {
        // Effective yield below the lowest nominal rate: each frame takes 4 ms.
        let pairs = hd_pairs(3, 3.0);
        let d = DemandSnapshot::uniform(3, 2000.0, 12000.0, 0.1);
        let shares = min_fair_shares(&d, d.t_bar_s(&RateTable::default()));
        let a = solve_with_relaxation(&pairs, &d, &shares).unwrap();
        assert!(a.relaxed);
        let busy: f64 = a.n.iter().map(|(k, n)| n * pairs.get(k).unwrap().t_s).sum();
        assert!(busy <= 0.1 + 1e-9);
    }

    #[test]
    fn probabilities_and_marginals() {
        let mut n = BTreeMap::new();
        n.insert(PairKey::full(1, 2), 4.0);
        n.insert(PairKey::down_only(2), 6.0);
        let p = to_probabilities(&n);
        assert!((p[&PairKey::full(1, 2)] - 0.4).abs() < 1e-15);
        assert!((p[&PairKey::down_only(2)] - 0.6).abs() < 1e-15);

        let mut p = BTreeMap::new();
        p.insert(PairKey::full(1, 2), 0.2);
        p.insert(PairKey::down_only(1), 0.1);
        p.insert(PairKey::up_only(3), 0.7);
        let m = downlink_marginals(&p);
        assert!((m[&1] - 0.3).abs() < 1e-15);
        assert!((m[&0] - 0.7).abs() < 1e-15);
        let u = conditional_uplink(&p, &m).unwrap();
        assert!((u[&PairKey::full(1, 2)] - 2.0 / 3.0).abs() < 1e-12);
        assert!((u[&PairKey::up_only(3)] - 1.0).abs() < 1e-12);

        let mut m = m;
        m.insert(1, 0.0);
        assert!(matches!(conditional_uplink(&p, &m), Err(Error::UndefinedConditional(1))));
    }

    #[test]
    fn contention_window_examples() {
        assert_eq!(contention_window(1.0, 1024).unwrap(), Some(1));
        assert_eq!(contention_window(0.25, 1024).unwrap(), Some(4));
        assert_eq!(contention_window(1e-6, 1024).unwrap(), Some(1024));
        assert_eq!(contention_window(0.3, 1024).unwrap(), Some(4));
        assert_eq!(contention_window(0.0, 1024).unwrap(), None);
        assert!(contention_window(-0.1, 1024).is_err());
        assert!(contention_window(1.5, 1024).is_err());
    }

    #[test]
    fn access_table_groups_uplinks() {
        let mut p = BTreeMap::new();
        p.insert(PairKey::full(1, 2), 0.2);
        p.insert(PairKey::down_only(1), 0.1);
        p.insert(PairKey::up_only(2), 0.7);
        let t = AccessTable::from_probabilities(2, p, 1024).unwrap();
        assert_eq!(t.virtual_cw(1), Some(3));
        let ups: Vec<_> = t.uplinks(1).iter().map(|e| (e.up, e.cw)).collect();
        assert_eq!(ups, vec![(0, 3), (2, 2)]);
        assert_eq!(t.virtual_cw(0), None);
        assert_eq!(t.uplinks(0)[0].up, 2);
        assert!((t.p_d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(t.dump(None).lines().count() == 4);
    }

    #[test]
    fn single_client_downlink_only() {
        let mut pairs = BTreeMap::new();
        pairs.insert(PairKey::down_only(1), metrics(12.0, 0.0, 12000.0));
        pairs.insert(PairKey::up_only(1), metrics(0.0, 12.0, 12000.0));
        let pairs = CandidatePairs { pairs };
        let mut d = DemandSnapshot::uniform(1, 2000.0, 12000.0, 0.1);
        d.lambda_u[1] = 0.0;
        let e = assign_with_pairs(&d, pairs, &RateTable::default(), 1024).unwrap();
        assert_eq!(e.table.p.len(), 1);
        assert!((e.table.p[&PairKey::down_only(1)] - 1.0).abs() < 1e-12);
    }
}
