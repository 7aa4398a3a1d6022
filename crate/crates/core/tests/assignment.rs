mod common;

use std::collections::BTreeMap;

use common::*;
use fdmac::assign::{
    assign_epoch, contention_window, min_fair_shares, solve_assignment, AccessTable, AssignConfig, DemandSnapshot,
};
use fdmac::channel::{LinkState, PowerConfig};
use fdmac::pairing::{PairKey, RateEstimate};
use fdmac::phy::RateTable;
use proptest::prelude::*;

fn check_feasible(inst: &LpInstance, n: &BTreeMap<PairKey, f64>, shares: &fdmac::assign::MinShares) {
    let d = &inst.demands;
    let c = d.n_clients();
    let mut air = 0.0;
    let mut down = vec![0.0; c + 1];
    let mut up = vec![0.0; c + 1];
    for (k, &v) in n {
        assert!(v >= -1e-9, "{k} negative: {v}");
        air += v * inst.pairs.pairs[k].t_s;
        down[k.down] += v;
        up[k.up] += v;
    }
    assert!(air <= d.epoch_s + 1e-6, "airtime {air}");
    for k in 1..=c {
        assert!(down[k] >= shares.eta_d[k] - 1e-6, "client {k} down {} < {}", down[k], shares.eta_d[k]);
        assert!(up[k] >= shares.eta_u[k] - 1e-6, "client {k} up {} < {}", up[k], shares.eta_u[k]);
        assert!(down[k] <= d.lambda_d[k] * d.epoch_s + 1e-6);
        assert!(up[k] <= d.lambda_u[k] * d.epoch_s + 1e-6);
    }
}

#[test]
fn lp_solutions_are_feasible_and_beat_the_shares() {
    for seed in 0..100 {
        let inst = lp_instance(seed, 8, None);
        let a = solve_assignment(&inst.pairs, &inst.demands, &inst.shares).unwrap();
        check_feasible(&inst, &a.n, &inst.shares);
        let d = &inst.demands;
        let floor: f64 = (1..=d.n_clients())
            .map(|k| inst.shares.eta_d[k] * d.l_d_bits[k] + inst.shares.eta_u[k] * d.l_u_bits[k])
            .sum::<f64>()
            / d.epoch_s;
        assert!(a.objective_bps >= floor - 1e-6 * (1.0 + floor), "seed {seed}");
    }
}

#[test]
fn lp_matches_vertex_enumeration() {
    let mut checked = 0;
    for seed in 1000..1060 {
        let inst = lp_instance(seed, 3, Some(8));
        let keys: Vec<PairKey> = inst.pairs.pairs.keys().copied().collect();
        let d = &inst.demands;
        let obj: Vec<f64> = keys.iter().map(|k| inst.pairs.pairs[k].bits() / d.epoch_s).collect();
        let cons = constraint_system(&inst, &keys);
        let want = vertex_enumeration_max(&cons, &obj).expect("feasible by construction");
        let got = solve_assignment(&inst.pairs, d, &inst.shares).unwrap();
        assert!(
            (got.objective_bps - want).abs() <= 1e-6 * want.max(1.0),
            "seed {seed}: simplex {} vs vertices {want}",
            got.objective_bps
        );
        checked += 1;
    }
    assert_eq!(checked, 60);
}

#[test]
fn shares_match_water_level_oracle() {
    let rates = RateTable::default();
    for seed in 0..200 {
        let inst = lp_instance(seed, 30, Some(0));
        let t_bar = inst.demands.t_bar_s(&rates);
        let got = min_fair_shares(&inst.demands, t_bar);
        let want = water_level_shares(&inst.demands, t_bar);
        for k in 1..=inst.demands.n_clients() {
            assert!((got.eta_d[k] - want.eta_d[k]).abs() <= 1e-6, "seed {seed} client {k} down");
            assert!((got.eta_u[k] - want.eta_u[k]).abs() <= 1e-6, "seed {seed} client {k} up");
        }
    }
}

/// No unilateral increase of a smaller share keeps the budget without
/// lowering some other share that is no larger.
#[test]
fn shares_are_max_min_optimal() {
    let rates = RateTable::default();
    for seed in 0..50 {
        let inst = lp_instance(seed, 12, Some(0));
        let d = &inst.demands;
        let t_bar = d.t_bar_s(&rates);
        let s = min_fair_shares(d, t_bar);
        let all: Vec<(f64, f64)> = (1..=d.n_clients())
            .flat_map(|k| [(s.eta_d[k], d.lambda_d[k] * d.epoch_s), (s.eta_u[k], d.lambda_u[k] * d.epoch_s)])
            .collect();
        let used: f64 = all.iter().map(|a| a.0).sum::<f64>() * t_bar;
        assert!(used <= d.epoch_s + 1e-9);
        let slack = d.epoch_s - used;
        for (v, cap) in &all {
            // A share below its cap may only grow by taking from a larger one.
            if *v < cap - 1e-6 {
                assert!(slack / t_bar < 1e-6, "seed {seed}: unused budget while a share is capped below demand");
                let level = all.iter().map(|a| a.0).fold(0.0, f64::max);
                assert!((v - level).abs() < 1e-6, "seed {seed}: unsaturated share {v} below the level {level}");
            }
        }
    }
}

#[test]
fn uniform_backlog_gets_equal_shares() {
    let d = DemandSnapshot::uniform(5, 2000.0, 12_000.0, 0.1);
    let t_bar = 12_000.0 / 6e6;
    let s = min_fair_shares(&d, t_bar);
    // 10 directions share 50 transmissions of 2 ms.
    for k in 1..=5 {
        assert!((s.eta_d[k] - 5.0).abs() < 1e-9);
        assert!((s.eta_u[k] - 5.0).abs() < 1e-9);
    }
}

#[test]
fn scaling_frame_bits_scales_objective_only() {
    for seed in 0..30 {
        let inst = lp_instance(seed, 6, None);
        let a = solve_assignment(&inst.pairs, &inst.demands, &inst.shares).unwrap();
        let mut scaled = inst.pairs.clone();
        for m in scaled.pairs.values_mut() {
            m.l_d_bits *= 3.0;
            m.l_u_bits *= 3.0;
        }
        let b = solve_assignment(&scaled, &inst.demands, &inst.shares).unwrap();
        assert!((b.objective_bps - 3.0 * a.objective_bps).abs() <= 1e-6 * b.objective_bps.max(1.0));
        // The optimum may not be unique; the scaled solution must still be
        // optimal for the original objective.
        check_feasible(&inst, &b.n, &inst.shares);
        let value: f64 = b.n.iter().map(|(k, v)| v * inst.pairs.pairs[k].bits()).sum::<f64>() / inst.demands.epoch_s;
        assert!((value - a.objective_bps).abs() <= 1e-6 * a.objective_bps.max(1.0), "seed {seed}");
    }
}

fn table_invariants(t: &AccessTable, cw_max: u32) {
    if t.is_idle() {
        return;
    }
    let total: f64 = t.p.values().sum();
    assert!((total - 1.0).abs() < 1e-9);
    for (i, &pd) in t.p_d.iter().enumerate() {
        if pd > 0.0 {
            let s: f64 = t.p_u.iter().filter(|(k, _)| k.down == i).map(|(_, v)| v).sum();
            assert!((s - 1.0).abs() < 1e-9, "conditional sum {s} for downlink {i}");
        }
    }
    for (k, &w) in &t.cw {
        assert!((1..=cw_max).contains(&w), "{k} window {w}");
    }
}

fn random_links(n: usize, seed: u64) -> LinkState {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let topo = fdmac::channel::generate_topology(n, 100.0, seed).unwrap();
    LinkState::realize(&topo, &Default::default(), PowerConfig::default().noise_w(), 110.0, &mut rng)
}

fn assign_cfg<'a>(rates: &'a RateTable, power: &'a PowerConfig, estimate: RateEstimate) -> AssignConfig<'a> {
    AssignConfig {
        rates,
        power,
        delta_db: 5.0,
        epsilon_mbps: 0.5,
        estimate,
        cw_max: 1024,
    }
}

#[test]
fn oracle_rates_never_lose_to_margin_rates() {
    let rates = RateTable::default();
    let power = PowerConfig::default();
    for seed in 0..20 {
        let n = 4 + (seed as usize % 8);
        let links = random_links(n, seed);
        let d = DemandSnapshot::uniform(n, 2000.0, 12_000.0, 0.1);
        let margin = assign_epoch(&d, &links, &assign_cfg(&rates, &power, RateEstimate::Margin)).unwrap();
        let oracle = assign_epoch(&d, &links, &assign_cfg(&rates, &power, RateEstimate::Exact)).unwrap();
        table_invariants(&margin.table, 1024);
        table_invariants(&oracle.table, 1024);
        if margin.allocation.relaxed || oracle.allocation.relaxed {
            continue;
        }
        let (a, b) = (margin.allocation.objective_bps, oracle.allocation.objective_bps);
        assert!(b >= a * (1.0 - 1e-9), "seed {seed}: oracle {b} < margin {a}");
    }
}

/// Two clients that cannot hear each other: the assignment should put more
/// mass on full duplex than either half-duplex marginal.
#[test]
fn hidden_pair_prefers_full_duplex() {
    let noise = PowerConfig::default().noise_w();
    let g = 1e-9; // about 60 dB above noise at 15 dBm
    let gains = vec![0.0, g, g, g, 0.0, 0.0, g, 0.0, 0.0];
    let links = LinkState::from_gains(3, gains, noise, 110.0).unwrap();
    let rates = RateTable::default();
    let power = PowerConfig::default();
    let d = DemandSnapshot::uniform(2, 2000.0, 12_000.0, 0.1);
    let a = assign_epoch(&d, &links, &assign_cfg(&rates, &power, RateEstimate::Margin)).unwrap();
    let fd: f64 = a.table.p.iter().filter(|(k, _)| k.is_full_duplex()).map(|(_, v)| v).sum();
    for k in [PairKey::down_only(1), PairKey::down_only(2), PairKey::up_only(1), PairKey::up_only(2)] {
        let hd = a.table.p.get(&k).copied().unwrap_or(0.0);
        assert!(fd > hd, "full duplex {fd} vs {k} {hd}");
    }
}

#[test]
fn windows_follow_inverse_probability() {
    assert_eq!(contention_window(1.0, 1024).unwrap(), Some(1));
    assert_eq!(contention_window(0.5, 1024).unwrap(), Some(2));
    assert_eq!(contention_window(0.3, 1024).unwrap(), Some(4));
    assert_eq!(contention_window(1e-6, 1024).unwrap(), Some(1024));
    assert_eq!(contention_window(0.0, 1024).unwrap(), None);
    assert!(contention_window(1.5, 1024).is_err());
}

proptest! {
    #[test]
    fn probability_tables_are_consistent(weights in prop::collection::vec(0.0f64..1.0, 1..16), seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let c = 4;
        let mut p = BTreeMap::new();
        for w in &weights {
            let down = rng.gen_range(0..=c);
            let up = rng.gen_range(0..=c);
            if let Ok(k) = PairKey::new(down, up) {
                *p.entry(k).or_insert(0.0) += w + 1e-3;
            }
        }
        let total: f64 = p.values().sum();
        prop_assume!(total > 0.0);
        p.values_mut().for_each(|v| *v /= total);
        let t = AccessTable::from_probabilities(c, p, 64).unwrap();
        table_invariants(&t, 64);
    }

    #[test]
    fn lp_is_feasible_on_random_instances(seed in 0u64..10_000) {
        let inst = lp_instance(seed, 10, None);
        let a = solve_assignment(&inst.pairs, &inst.demands, &inst.shares).unwrap();
        check_feasible(&inst, &a.n, &inst.shares);
    }
}
