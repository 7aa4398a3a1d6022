//! Shared instance generators and brute-force reference solutions.
#![allow(dead_code)]

use std::collections::BTreeMap;

use fdmac::assign::{min_fair_shares, DemandSnapshot, MinShares};
use fdmac::channel::{generate_topology, LinkState};
use fdmac::pairing::{build_candidate_pairs, CandidatePairs, PairKey, PairMetrics, PairingParams};
use fdmac::{run_simulation, SchemeId, SimConfig, SimReport, Simulation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EPOCH_S: f64 = 0.1;

/// A random assignment instance whose half-duplex pairs all run at 6 Mb/s
/// or faster, so the minimum shares always fit.
pub struct LpInstance {
    pub pairs: CandidatePairs,
    pub demands: DemandSnapshot,
    pub shares: MinShares,
}

fn metrics(r_d: f64, r_u: f64, l_d: f64, l_u: f64) -> PairMetrics {
    let l_d = if r_d > 0.0 { l_d } else { 0.0 };
    let l_u = if r_u > 0.0 { l_u } else { 0.0 };
    let mut t: f64 = 0.0;
    if l_d > 0.0 {
        t = t.max(l_d / (r_d * 1e6));
    }
    if l_u > 0.0 {
        t = t.max(l_u / (r_u * 1e6));
    }
    PairMetrics {
        r_d_mbps: r_d,
        r_u_mbps: r_u,
        r_total_mbps: r_d + r_u,
        t_s: t,
        l_d_bits: l_d,
        l_u_bits: l_u,
    }
}

/// `max_clients` bounds the client count; `max_vars` (if set) bounds the
/// number of pairs by dropping random full-duplex pairs.
pub fn lp_instance(seed: u64, max_clients: usize, max_vars: Option<usize>) -> LpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = rng.gen_range(2..=max_clients);
    let bits = if rng.gen_bool(0.5) { 12_000.0 } else { rng.gen_range(2_000.0..16_000.0) };
    let mut lambda_d = vec![0.0; c + 1];
    let mut lambda_u = vec![0.0; c + 1];
    for k in 1..=c {
        for l in [&mut lambda_d[k], &mut lambda_u[k]] {
            *l = match rng.gen_range(0..4) {
                0 => 0.0,
                1 => 2000.0,
                _ => rng.gen_range(1.0..400.0),
            };
        }
    }
    let demands = DemandSnapshot {
        lambda_d,
        lambda_u,
        l_d_bits: vec![bits; c + 1],
        l_u_bits: vec![bits; c + 1],
        epoch_s: EPOCH_S,
    };
    let mut pairs = BTreeMap::new();
    for k in 1..=c {
        let hd = rng.gen_range(6.0..54.0);
        pairs.insert(PairKey::down_only(k), metrics(hd, 0.0, bits, bits));
        let hu = rng.gen_range(6.0..54.0);
        pairs.insert(PairKey::up_only(k), metrics(0.0, hu, bits, bits));
    }
    let mut fd = Vec::new();
    for i in 1..=c {
        for j in 1..=c {
            if i != j && rng.gen_bool(0.6) {
                fd.push(PairKey::full(i, j));
            }
        }
    }
    if let Some(m) = max_vars {
        let keep = m.saturating_sub(pairs.len());
        while fd.len() > keep {
            let k = rng.gen_range(0..fd.len());
            fd.swap_remove(k);
        }
    }
    for k in fd {
        let rd = rng.gen_range(1.0..54.0);
        let ru = rng.gen_range(1.0..54.0);
        pairs.insert(k, metrics(rd, ru, bits, bits));
    }
    let t_bar = demands.t_bar_s(&fdmac::phy::RateTable::default());
    let shares = min_fair_shares(&demands, t_bar);
    LpInstance {
        pairs: CandidatePairs { pairs },
        demands,
        shares,
    }
}

/// Constraint `a·x ≤ b`.
pub struct Halfspace {
    pub a: Vec<f64>,
    pub b: f64,
}

/// The assignment constraints written out directly: shares, caps, the
/// epoch budget and non-negativity, over `keys` in order.
pub fn constraint_system(inst: &LpInstance, keys: &[PairKey]) -> Vec<Halfspace> {
    let d = &inst.demands;
    let c = d.n_clients();
    let n = keys.len();
    let mut out = Vec::new();
    for k in 1..=c {
        for up in [false, true] {
            let a: Vec<f64> = keys
                .iter()
                .map(|p| if (up && p.up == k) || (!up && p.down == k) { 1.0 } else { 0.0 })
                .collect();
            let (eta, cap) = if up {
                (inst.shares.eta_u[k], d.lambda_u[k] * d.epoch_s)
            } else {
                (inst.shares.eta_d[k], d.lambda_d[k] * d.epoch_s)
            };
            if eta > 0.0 {
                out.push(Halfspace {
                    a: a.iter().map(|v| -v).collect(),
                    b: -eta,
                });
            }
            out.push(Halfspace { a, b: cap });
        }
    }
    out.push(Halfspace {
        a: keys.iter().map(|p| inst.pairs.pairs[p].t_s).collect(),
        b: d.epoch_s,
    });
    for v in 0..n {
        let mut a = vec![0.0; n];
        a[v] = -1.0;
        out.push(Halfspace { a, b: 0.0 });
    }
    out
}

fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for k in col..n {
                        m[r][k] -= f * m[col][k];
                    }
                    rhs[r] -= f * rhs[col];
                }
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

/// Maximum of `obj·x` over the polytope by enumerating every basis.
/// Returns `None` if no vertex is feasible.
pub fn vertex_enumeration_max(cons: &[Halfspace], obj: &[f64]) -> Option<f64> {
    let n = obj.len();
    let m = cons.len();
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    if n == 0 {
        return Some(0.0);
    }
    if n > m {
        return None;
    }
    loop {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| cons[i].a.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| cons[i].b).collect();
        if let Some(x) = solve_square(a, b) {
            let feasible = cons.iter().all(|h| {
                let lhs: f64 = h.a.iter().zip(&x).map(|(p, q)| p * q).sum();
                lhs <= h.b + 1e-7 * (1.0 + h.b.abs())
            });
            if feasible {
                let v: f64 = obj.iter().zip(&x).map(|(p, q)| p * q).sum();
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        // Next combination in lexicographic order.
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < m - n + i {
                idx[i] += 1;
                for k in i + 1..n {
                    idx[k] = idx[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Max-min shares by bisection on the water level.
pub fn water_level_shares(demands: &DemandSnapshot, t_bar: f64) -> MinShares {
    let c = demands.n_clients();
    let caps: Vec<f64> = (1..=c)
        .flat_map(|k| [demands.lambda_d[k] * demands.epoch_s, demands.lambda_u[k] * demands.epoch_s])
        .collect();
    let used = |level: f64| caps.iter().map(|&cap| cap.min(level)).sum::<f64>() * t_bar;
    let top = caps.iter().cloned().fold(0.0, f64::max);
    let level = if used(top) <= demands.epoch_s {
        top
    } else {
        let (mut lo, mut hi) = (0.0, top);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if used(mid) > demands.epoch_s {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    };
    let mut s = MinShares::zeros(c);
    for k in 1..=c {
        s.eta_d[k] = caps[2 * (k - 1)].min(level);
        s.eta_u[k] = caps[2 * (k - 1) + 1].min(level);
    }
    s
}

pub fn config(scheme: SchemeId, seed: u64) -> SimConfig {
    SimConfig {
        scheme,
        seed,
        ..SimConfig::default()
    }
}

pub fn run(cfg: &SimConfig) -> SimReport {
    run_simulation(cfg).expect("simulation runs")
}

/// Clients with a usable half-duplex uplink in the topology drawn for `cfg`.
pub fn clients_with_uplink(cfg: &SimConfig) -> Vec<usize> {
    let sim = Simulation::new(cfg.clone()).unwrap();
    let params = PairingParams {
        rates: &cfg.rates,
        power: &cfg.power,
        delta_db: cfg.delta_db,
        epsilon_mbps: cfg.epsilon_mbps,
        estimate: cfg.scheme.rate_estimate().unwrap_or(fdmac::pairing::RateEstimate::Margin),
    };
    let frames = fdmac::pairing::FrameLengths::uniform(cfg.n_clients, cfg.frame_bits());
    let pairs = build_candidate_pairs(sim.links(), &params, &frames).unwrap();
    (1..=cfg.n_clients)
        .filter(|&k| pairs.contains(&PairKey::up_only(k)))
        .collect()
}

/// A link state built from explicit positions without fading.
pub fn flat_links(n_clients: usize, seed: u64) -> LinkState {
    let topo = generate_topology(n_clients, 100.0, seed).unwrap();
    LinkState::without_fading(&topo, &fdmac::channel::PathLoss::default(), fdmac::channel::PowerConfig::default().noise_w(), 110.0)
}
