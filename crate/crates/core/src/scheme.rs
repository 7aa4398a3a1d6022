//! The access schemes: the probabilistic Down-Up protocol (with estimated or
//! exact rates) and the comparison baselines.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::assign::{assign_with_pairs, AccessTable, DemandSnapshot, EpochAssignment};
use crate::channel::{linear_to_db, sinr_downlink, sinr_uplink};
use crate::error::{invalid, Error, Result};
use crate::mac::contention::{uplink_contest, Dcf, UplinkContest};
use crate::mac::engine::{DownFrame, Transmission, UpFrame, World};
use crate::mac::SimConfig;
use crate::pairing::{build_candidate_pairs, CandidatePairs, PairKey, PairingParams, RateEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeId {
    Proposed,
    Oracle,
    MaxRate,
    Greedy,
    Random,
    HalfDuplex,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] = [
        SchemeId::Proposed,
        SchemeId::Oracle,
        SchemeId::MaxRate,
        SchemeId::Greedy,
        SchemeId::Random,
        SchemeId::HalfDuplex,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SchemeId::Proposed => "proposed",
            SchemeId::Oracle => "oracle",
            SchemeId::MaxRate => "max-rate",
            SchemeId::Greedy => "greedy",
            SchemeId::Random => "random",
            SchemeId::HalfDuplex => "half-duplex",
        }
    }

    /// How rates are estimated when this scheme solves an assignment.
    pub fn rate_estimate(&self) -> Option<RateEstimate> {
        match self {
            SchemeId::Proposed => Some(RateEstimate::QuantizedFeedback),
            SchemeId::Oracle => Some(RateEstimate::Exact),
            _ => None,
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.trim().to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        match norm.as_str() {
            "proposed" => Ok(SchemeId::Proposed),
            "oracle" => Ok(SchemeId::Oracle),
            "maxrate" => Ok(SchemeId::MaxRate),
            "greedy" => Ok(SchemeId::Greedy),
            "random" => Ok(SchemeId::Random),
            "halfduplex" | "hd" => Ok(SchemeId::HalfDuplex),
            _ => Err(invalid(format!("unknown scheme '{s}'"))),
        }
    }
}

/// Maximal pairing by repeatedly taking the most valuable remaining pair
/// `(i, j)` and discarding every other pair with downlink `i` or uplink `j`.
/// Equal values go to the smaller key.
pub fn greedy_pairing(values: &BTreeMap<PairKey, f64>) -> Vec<PairKey> {
    let mut order: Vec<(&PairKey, &f64)> = values.iter().filter(|(k, _)| k.is_full_duplex()).collect();
    order.sort_by(|a, b| b.1.total_cmp(a.1).then(a.0.cmp(b.0)));
    let mut downs = std::collections::BTreeSet::new();
    let mut ups = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for (k, _) in order {
        if downs.contains(&k.down) || ups.contains(&k.up) {
            continue;
        }
        downs.insert(k.down);
        ups.insert(k.up);
        out.push(*k);
    }
    out
}

/// Full-power, interference-aware yield of every full-duplex pair whose two
/// directions both exceed `epsilon_mbps`.
pub fn full_power_pair_values(
    links: &crate::channel::LinkState,
    cfg: &SimConfig,
) -> BTreeMap<PairKey, f64> {
    let p = cfg.power.max_tx_w();
    let c = links.n_clients();
    let mut out = BTreeMap::new();
    for i in 1..=c {
        for j in 1..=c {
            if i == j {
                continue;
            }
            let sd = sinr_downlink(p, p, links.gain(0, i), links.gain(j, i), links.noise_w[i]);
            let su = sinr_uplink(p, p, links.gain(j, 0), links.self_gain, links.noise_w[0]);
            let rd = cfg.rates.effective_throughput_linear(sd).throughput_mbps;
            let ru = cfg.rates.effective_throughput_linear(su).throughput_mbps;
            if rd > cfg.epsilon_mbps && ru > cfg.epsilon_mbps {
                out.insert(PairKey::full(i, j), rd + ru);
            }
        }
    }
    out
}

/// Greedy pairs plus a half-duplex unit for every client direction the
/// pairs leave uncovered.
pub fn greedy_units(links: &crate::channel::LinkState, cfg: &SimConfig) -> Vec<PairKey> {
    let pairs = greedy_pairing(&full_power_pair_values(links, cfg));
    let c = links.n_clients();
    let mut down_done = vec![false; c + 1];
    let mut up_done = vec![false; c + 1];
    for k in &pairs {
        down_done[k.down] = true;
        up_done[k.up] = true;
    }
    let mut units = pairs;
    for k in 1..=c {
        if !down_done[k] {
            units.push(PairKey::down_only(k));
        }
        if !up_done[k] {
            units.push(PairKey::up_only(k));
        }
    }
    units
}

pub(crate) struct AssignedState {
    estimate: RateEstimate,
    fixed: bool,
    pairs: Option<(u64, CandidatePairs)>,
    cached: Option<(DemandSnapshot, EpochAssignment)>,
    table: AccessTable,
    /// Downlink endpoints whose table rows include a full-duplex partner.
    fd_down: Vec<bool>,
}

pub(crate) enum Policy {
    Assigned(Box<AssignedState>),
    MaxRate,
    Greedy { version: Option<u64>, units: Vec<PairKey>, dcf: Dcf },
    Random { dcf: Dcf },
    HalfDuplex { dcf: Dcf },
}

fn fd_rows(table: &AccessTable) -> Vec<bool> {
    (0..=table.n_clients).map(|i| table.uplinks(i).iter().any(|e| e.up != 0)).collect()
}

impl Policy {
    pub fn new(cfg: &SimConfig) -> Self {
        let c = cfg.n_clients;
        match cfg.scheme {
            SchemeId::Proposed | SchemeId::Oracle => Policy::Assigned(Box::new(AssignedState {
                estimate: cfg.scheme.rate_estimate().unwrap(),
                fixed: false,
                pairs: None,
                cached: None,
                table: AccessTable::idle(c),
                fd_down: vec![false; c + 1],
            })),
            SchemeId::MaxRate => Policy::MaxRate,
            SchemeId::Greedy => Policy::Greedy {
                version: None,
                units: Vec::new(),
                dcf: Dcf::new(0, cfg.cw_min, cfg.cw_max),
            },
            SchemeId::Random => Policy::Random {
                dcf: Dcf::new(c + 1, cfg.cw_min, cfg.cw_max),
            },
            SchemeId::HalfDuplex => Policy::HalfDuplex {
                dcf: Dcf::new(c + 1, cfg.cw_min, cfg.cw_max),
            },
        }
    }

    pub fn fixed(table: AccessTable) -> Self {
        let fd_down = fd_rows(&table);
        Policy::Assigned(Box::new(AssignedState {
            estimate: RateEstimate::Margin,
            fixed: true,
            pairs: None,
            cached: None,
            table,
            fd_down,
        }))
    }

    pub fn epoch_start(&mut self, w: &mut World<'_>, demand: &DemandSnapshot) -> Result<()> {
        match self {
            Policy::Assigned(st) => {
                if st.fixed {
                    return Ok(());
                }
                let cfg = w.cfg;
                if st.pairs.as_ref().map(|p| p.0) != Some(w.links_version) {
                    let params = PairingParams {
                        rates: &cfg.rates,
                        power: &cfg.power,
                        delta_db: cfg.delta_db,
                        epsilon_mbps: cfg.epsilon_mbps,
                        estimate: st.estimate,
                    };
                    let pairs = build_candidate_pairs(&w.links, &params, &demand.frame_lengths())?;
                    st.pairs = Some((w.links_version, pairs));
                    st.cached = None;
                }
                let reuse = st.cached.as_ref().is_some_and(|(d, _)| d == demand);
                if !reuse {
                    let pairs = st.pairs.as_ref().unwrap().1.clone();
                    let a = assign_with_pairs(demand, pairs, &cfg.rates, cfg.cw_max)?;
                    debug!("assignment: {} pairs, objective {:.2} Mb/s", a.table.p.len(), a.allocation.objective_bps / 1e6);
                    st.fd_down = fd_rows(&a.table);
                    st.table = a.table.clone();
                    st.cached = Some((demand.clone(), a));
                }
                let a = &st.cached.as_ref().unwrap().1;
                w.cur.lp_objective_bps = Some(a.allocation.objective_bps);
                w.cur.relaxed = a.allocation.relaxed;
            }
            Policy::Greedy { version, units, dcf } => {
                if *version != Some(w.links_version) {
                    *units = greedy_units(&w.links, w.cfg);
                    *dcf = Dcf::new(units.len(), w.cfg.cw_min, w.cfg.cw_max);
                    *version = Some(w.links_version);
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn epoch_end(&mut self, w: &mut World<'_>) {
        if let Policy::Assigned(st) = self {
            w.credit_assigned(&st.table);
        }
    }

    pub fn txop(&mut self, w: &mut World<'_>) -> Transmission {
        match self {
            Policy::Assigned(st) => assigned_txop(st, w),
            Policy::MaxRate => max_rate_txop(w),
            Policy::Greedy { units, dcf, .. } => greedy_txop(units, dcf, w),
            Policy::Random { dcf } => random_txop(dcf, w),
            Policy::HalfDuplex { dcf } => half_duplex_txop(dcf, w),
        }
    }
}

/// Serves whatever is queued when the table offers nothing that can send.
fn fallback_txop(w: &mut World<'_>) -> Transmission {
    let downs: Vec<usize> = w.queues.nonempty_down().collect();
    let mut tx = if let Some(i) = w.pick_uniform(&downs) {
        let r = w.downlink_rate(i, false);
        Transmission::new(Some(DownFrame { client: i, rate_idx: r.index }), Vec::new())
    } else {
        let ups: Vec<usize> = w.queues.nonempty_up().collect();
        let j = w.pick_uniform(&ups).expect("fallback needs a queued frame");
        let r = w.uplink_rate(j, w.p_max, false);
        Transmission::new(
            None,
            vec![UpFrame {
                client: j,
                power_w: w.p_max,
                rate_idx: r.index,
            }],
        )
    };
    tx.fallback = true;
    tx
}

fn assigned_txop(st: &mut AssignedState, w: &mut World<'_>) -> Transmission {
    let table = &st.table;
    let c = w.n_clients();
    // Downlink endpoint drawn from the marginals restricted to endpoints
    // that have something to send.
    let mut total = 0.0;
    let mut weights = Vec::with_capacity(c + 1);
    for i in 0..=c {
        let ok = if i == 0 {
            table.uplinks(0).iter().any(|e| !w.queues.up[e.up].is_empty())
        } else {
            !w.queues.down[i].is_empty()
        };
        let v = if ok { table.p_d[i] } else { 0.0 };
        total += v;
        weights.push(v);
    }
    if !(total > 0.0) {
        return fallback_txop(w);
    }
    let mut x = rand::Rng::gen::<f64>(&mut w.rng) * total;
    let mut i = c + 1;
    for (k, v) in weights.iter().enumerate() {
        if *v > 0.0 {
            i = k;
            if x < *v {
                break;
            }
            x -= v;
        }
    }

    let candidates: Vec<(usize, u32)> = table
        .uplinks(i)
        .iter()
        .filter(|e| e.up != 0 && !w.queues.up[e.up].is_empty())
        .map(|e| (e.up, e.cw))
        .collect();
    let virtual_cw = if i == 0 { None } else { table.virtual_cw(i) };
    let idle_wait = table.uplinks(i).iter().filter(|e| e.up != 0).map(|e| e.cw).max().unwrap_or(0);
    let contest = uplink_contest(&candidates, virtual_cw, idle_wait, &mut w.rng);

    let down = (i != 0).then(|| {
        let r = w.downlink_rate(i, st.fd_down[i]);
        DownFrame { client: i, rate_idx: r.index }
    });
    let uplink = |w: &mut World<'_>, j: usize| {
        let (p, r) = if i == 0 {
            (w.p_max, w.uplink_rate(j, w.p_max, false))
        } else {
            w.controlled_uplink(j, i)
        };
        UpFrame {
            client: j,
            power_w: p,
            rate_idx: r.index,
        }
    };
    let (ups, contended) = match &contest {
        UplinkContest::NoUplink { .. } => (Vec::new(), false),
        UplinkContest::Winner { client, .. } => (vec![uplink(w, *client)], true),
        UplinkContest::Collision { clients, .. } => (clients.iter().map(|&j| uplink(w, j)).collect(), true),
    };
    let mut tx = Transmission::new(down, ups);
    tx.contention_slots = contest.slots();
    tx.contended = contended;
    tx.power_controlled = i != 0;
    tx
}

fn max_rate_txop(w: &mut World<'_>) -> Transmission {
    let downs: Vec<usize> = w.queues.nonempty_down().collect();
    let Some(i) = w.pick_uniform(&downs) else {
        // No downlink traffic: the best queued uplink goes alone.
        let best = w
            .queues
            .nonempty_up()
            .map(|j| (j, w.uplink_rate(j, w.p_max, false)))
            .max_by(|a, b| a.1.throughput_mbps.total_cmp(&b.1.throughput_mbps).then(b.0.cmp(&a.0)))
            .expect("called with a queued frame");
        return Transmission::new(
            None,
            vec![UpFrame {
                client: best.0,
                power_w: w.p_max,
                rate_idx: best.1.index,
            }],
        );
    };
    let ups: Vec<usize> = w.queues.nonempty_up().filter(|&j| j != i).collect();
    // (frame, yield, uplink SINR)
    let mut best: Option<(UpFrame, f64, f64)> = None;
    for j in ups {
        let g = w.estimated_cross_gain(j, i);
        let p = crate::phy::uplink_power_cap(g, w.links.noise_w[i], w.cfg.delta_db, w.p_max);
        let l = &w.links;
        let sinr = sinr_uplink(p, w.p_max, l.gain(j, 0), l.self_gain, l.noise_w[0]);
        let r = w.cfg.rates.effective_throughput_linear(sinr);
        let better = match best {
            None => true,
            Some((_, bt, bs)) => r.throughput_mbps > bt || (r.throughput_mbps == bt && sinr > bs),
        };
        if better {
            let frame = UpFrame {
                client: j,
                power_w: p,
                rate_idx: r.index,
            };
            best = Some((frame, r.throughput_mbps, sinr));
        }
    }
    let chosen = best.filter(|b| b.1 > w.cfg.epsilon_mbps).map(|b| b.0);
    let down_rate = w.downlink_rate(i, chosen.is_some());
    let down = Some(DownFrame {
        client: i,
        rate_idx: down_rate.index,
    });
    let ups: Vec<UpFrame> = chosen.into_iter().collect();
    let mut tx = Transmission::new(down, ups);
    tx.power_controlled = true;
    tx
}

/// Genie rates for a full-power transmission at the channel it will see.
fn genie_frames(w: &World<'_>, down: Option<usize>, ups: &[usize]) -> (Option<DownFrame>, Vec<UpFrame>) {
    let l = w.now();
    let p = w.p_max;
    let rates = &w.cfg.rates;
    // A client cannot foresee a collision, so it adapts to the AP's
    // self-interference alone.
    let up_sinr = |j: usize, ap_on: bool| {
        let p_ap = if ap_on { p } else { 0.0 };
        linear_to_db(sinr_uplink(p, p_ap, l.gain(j, 0), l.self_gain, l.noise_w[0]))
    };
    let up_frame = |j: usize, ap_on: bool| UpFrame {
        client: j,
        power_w: p,
        rate_idx: rates.effective_throughput(up_sinr(j, ap_on)).index,
    };
    let Some(i) = down else {
        return (None, ups.iter().map(|&j| up_frame(j, false)).collect());
    };
    let up_frames: Vec<UpFrame> = ups.iter().map(|&j| up_frame(j, true)).collect();
    // The AP cannot foresee a collision either: it adapts to the first
    // uplink as if it were alone.
    let Some(u) = up_frames.first() else {
        let snr = linear_to_db(p * l.gain(0, i) / l.noise_w[i]);
        return (Some(DownFrame { client: i, rate_idx: rates.effective_throughput(snr).index }), up_frames);
    };
    let sinr = linear_to_db(p * l.gain(0, i) / (l.noise_w[i] + p * l.gain(u.client, i)));
    let up_pdr = rates.pdr_at(u.rate_idx, up_sinr(u.client, true));
    let (rate_idx, fd_score) = txop_downlink_rate(w, sinr, u.rate_idx, up_pdr);
    let alone = up_frame(u.client, false);
    let alone_pdr = rates.pdr_at(alone.rate_idx, up_sinr(u.client, false));
    if txop_score(w, 0.0, alone_pdr, 0.0, airtime_us(w, alone.rate_idx)) > fd_score {
        // The downlink would cost more than it delivers; hold it.
        return (None, ups.iter().map(|&j| up_frame(j, false)).collect());
    }
    (Some(DownFrame { client: i, rate_idx }), up_frames)
}

fn airtime_us(w: &World<'_>, rate_idx: usize) -> f64 {
    w.cfg.frame_bits() / w.cfg.rates.rates_mbps()[rate_idx]
}

/// Expected delivered frames per microsecond of one exchange.
fn txop_score(w: &World<'_>, down_pdr: f64, up_pdr: f64, down_us: f64, up_us: f64) -> f64 {
    let t = &w.cfg.timing;
    let fixed_us = t.difs_us + t.header_us + t.sifs_us + t.ack_us;
    (down_pdr + up_pdr) / (fixed_us + down_us.max(up_us))
}

/// Downlink rate that maximizes the expected delivered frames per unit of
/// exchange time when the frame overlaps a known uplink frame, with its
/// score. A slow downlink that is likely lost would otherwise stretch the
/// whole exchange.
fn txop_downlink_rate(w: &World<'_>, sinr_db: f64, up_idx: usize, up_pdr: f64) -> (usize, f64) {
    let rates = &w.cfg.rates;
    let up_us = airtime_us(w, up_idx);
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..rates.len() {
        let score = txop_score(w, rates.pdr_at(k, sinr_db), up_pdr, airtime_us(w, k), up_us);
        if score > best.1 {
            best = (k, score);
        }
    }
    best
}

fn greedy_txop(units: &[PairKey], dcf: &mut Dcf, w: &mut World<'_>) -> Transmission {
    let has_down = |w: &World<'_>, k: &PairKey| k.down != 0 && !w.queues.down[k.down].is_empty();
    let has_up = |w: &World<'_>, k: &PairKey| k.up != 0 && !w.queues.up[k.up].is_empty();
    let active: Vec<usize> = (0..units.len()).filter(|&u| has_down(w, &units[u]) || has_up(w, &units[u])).collect();
    let Some(round) = dcf.contend(&active, &mut w.rng) else {
        return fallback_txop(w);
    };
    dcf.finish(&round);
    let collided = round.winners.len() > 1;
    let mut down = None;
    let mut ups = Vec::new();
    for &u in &round.winners {
        let k = units[u];
        if has_down(w, &k) && down.is_none() {
            down = Some(k.down);
        }
        if has_up(w, &k) {
            ups.push(k.up);
        }
    }
    let (d, u) = genie_frames(w, down, &ups);
    let mut tx = Transmission::new(d, u);
    tx.dcf_collision = collided;
    tx.contention_slots = round.slots;
    tx.contended = true;
    tx.with_tone = false;
    tx
}

fn random_txop(dcf: &mut Dcf, w: &mut World<'_>) -> Transmission {
    let downs: Vec<usize> = w.queues.nonempty_down().collect();
    let i = w.pick_uniform(&downs);
    let active: Vec<usize> = w.queues.nonempty_up().filter(|&j| Some(j) != i).collect();
    let round = dcf.contend(&active, &mut w.rng);
    let (ups, slots) = match &round {
        Some(r) => (r.winners.clone(), r.slots),
        None => (Vec::new(), 0),
    };
    if let Some(r) = &round {
        dcf.finish(r);
    }
    let (d, u) = genie_frames(w, i, &ups);
    let mut tx = Transmission::new(d, u);
    tx.contention_slots = slots;
    tx.contended = round.is_some();
    tx.dcf_collision = i.is_none() && ups.len() > 1;
    tx
}

fn half_duplex_txop(dcf: &mut Dcf, w: &mut World<'_>) -> Transmission {
    let mut active = Vec::new();
    if w.queues.any_down() {
        active.push(0);
    }
    active.extend(w.queues.nonempty_up());
    let round = dcf.contend(&active, &mut w.rng).expect("called with a queued frame");
    dcf.finish(&round);
    let ap_wins = round.winners.contains(&0);
    let down = if ap_wins {
        let downs: Vec<usize> = w.queues.nonempty_down().collect();
        w.pick_uniform(&downs)
    } else {
        None
    };
    let ups: Vec<usize> = round.winners.iter().copied().filter(|&s| s != 0).collect();
    let collided = round.winners.len() > 1;
    // Half-duplex stations pick rates from the interference-free SNR.
    let rates = &w.cfg.rates;
    let l = &w.links;
    let d = down.map(|i| DownFrame {
        client: i,
        rate_idx: rates.effective_throughput_linear(l.snr_down(i, w.p_max)).index,
    });
    let u = ups
        .iter()
        .map(|&j| UpFrame {
            client: j,
            power_w: w.p_max,
            rate_idx: rates.effective_throughput_linear(l.snr_up(j, w.p_max)).index,
        })
        .collect();
    let mut tx = Transmission::new(d, u);
    tx.dcf_collision = collided;
    tx.contention_slots = round.slots;
    tx.contended = true;
    tx.with_tone = false;
    tx
}
