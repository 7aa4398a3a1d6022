//! Candidate downlink/uplink pairs and their per-pair rates and airtime.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::channel::{linear_to_db, sinr_downlink, sinr_uplink, LinkState, PowerConfig};
use crate::error::{invalid, Result};
use crate::phy::{uplink_power_cap, RateTable};

/// A downlink client and an uplink client; 0 on either side means that
/// direction is absent, so `(i, 0)` is half-duplex downlink to `i` and
/// `(0, j)` is half-duplex uplink from `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairKey {
    pub down: usize,
    pub up: usize,
}

impl PairKey {
    pub fn new(down: usize, up: usize) -> Result<Self> {
        if down == 0 && up == 0 {
            return Err(invalid("pair (0,0) is not a transmission"));
        }
        if down != 0 && down == up {
            return Err(invalid(format!("client {down} cannot send and receive at once")));
        }
        Ok(Self { down, up })
    }

    pub const fn full(down: usize, up: usize) -> Self {
        Self { down, up }
    }

    pub const fn down_only(client: usize) -> Self {
        Self { down: client, up: 0 }
    }

    pub const fn up_only(client: usize) -> Self {
        Self { down: 0, up: client }
    }

    pub fn is_full_duplex(&self) -> bool {
        self.down != 0 && self.up != 0
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.down, self.up)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMetrics {
    pub r_d_mbps: f64,
    pub r_u_mbps: f64,
    pub r_total_mbps: f64,
    /// Channel time of one transmission of this pair, seconds.
    pub t_s: f64,
    pub l_d_bits: f64,
    pub l_u_bits: f64,
}

impl PairMetrics {
    /// Bits carried by one transmission opportunity.
    pub fn bits(&self) -> f64 {
        self.l_d_bits + self.l_u_bits
    }
}

/// Mean frame lengths per client, indexed by node id (entry 0 unused).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLengths {
    pub down_bits: Vec<f64>,
    pub up_bits: Vec<f64>,
}

impl FrameLengths {
    pub fn uniform(n_clients: usize, bits: f64) -> Self {
        Self {
            down_bits: vec![bits; n_clients + 1],
            up_bits: vec![bits; n_clients + 1],
        }
    }
}

/// How the AP learns the per-pair rates it feeds into the assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateEstimate {
    /// Downlink from `SNR − δ`, uplink from the power-capped uplink SINR.
    Margin,
    /// As `Margin`, but the uplink figure is the bit-rate index reported by
    /// the client (no delivery-ratio weighting).
    QuantizedFeedback,
    /// True yields at the SINRs the pair will actually see.
    Exact,
}

/// Airtime `max(l_d / r_d, l_u / r_u)` over the directions present.
pub fn pair_airtime(l_d_bits: f64, l_u_bits: f64, r_d_mbps: f64, r_u_mbps: f64) -> Result<f64> {
    let mut t: f64 = 0.0;
    let mut any = false;
    for (l, r) in [(l_d_bits, r_d_mbps), (l_u_bits, r_u_mbps)] {
        if l > 0.0 {
            if !(r > 0.0) {
                return Err(invalid("a direction with traffic needs a positive rate"));
            }
            t = t.max(l / (r * 1e6));
            any = true;
        }
    }
    if !any {
        return Err(invalid("pair carries no traffic"));
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy)]
pub struct PairingParams<'a> {
    pub rates: &'a RateTable,
    pub power: &'a PowerConfig,
    pub delta_db: f64,
    pub epsilon_mbps: f64,
    pub estimate: RateEstimate,
}

/// The candidate set `P_full ∪ P_half`, ordered by pair key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidatePairs {
    pub pairs: BTreeMap<PairKey, PairMetrics>,
}

impl CandidatePairs {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, key: &PairKey) -> Option<&PairMetrics> {
        self.pairs.get(key)
    }

    pub fn contains(&self, key: &PairKey) -> bool {
        self.pairs.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PairKey, &PairMetrics)> {
        self.pairs.iter()
    }

    pub fn full_duplex(&self) -> impl Iterator<Item = (&PairKey, &PairMetrics)> {
        self.pairs.iter().filter(|(k, _)| k.is_full_duplex())
    }

    pub fn half_duplex(&self) -> impl Iterator<Item = (&PairKey, &PairMetrics)> {
        self.pairs.iter().filter(|(k, _)| !k.is_full_duplex())
    }

    pub fn dump(&self) -> String {
        let mut s = String::from("# pair r_d_mbps r_u_mbps t_us\n");
        for (k, m) in &self.pairs {
            let _ = writeln!(s, "{k} {:.3} {:.3} {:.1}", m.r_d_mbps, m.r_u_mbps, m.t_s * 1e6);
        }
        s
    }
}

/// Per-direction yields of a full-duplex pair `(i, j)` under interference-limited
/// power control. Returns `(r_d_margin, r_u, r_d_exact)`.
pub(crate) fn full_duplex_yields(
    links: &LinkState,
    params: &PairingParams<'_>,
    i: usize,
    j: usize,
) -> (f64, f64, f64, usize) {
    let p_max = params.power.max_tx_w();
    let snr_d = links.snr_down(i, p_max);
    let down = params.rates.select_downlink_rate(linear_to_db(snr_d), params.delta_db);
    let p_up = uplink_power_cap(links.gain(j, i), links.noise_w[i], params.delta_db, p_max);
    let sinr_u = sinr_uplink(p_up, p_max, links.gain(j, 0), links.self_gain, links.noise_w[0]);
    let up = params.rates.effective_throughput_linear(sinr_u);
    let sinr_d = sinr_downlink(p_max, p_up, links.gain(0, i), links.gain(j, i), links.noise_w[i]);
    let exact_d = down.rate_mbps * params.rates.pdr_at(down.index, linear_to_db(sinr_d));
    (down.throughput_mbps, up.throughput_mbps, exact_d, up.index)
}

/// Builds the candidate pairs whose yields exceed `epsilon_mbps` in every
/// direction they use.
pub fn build_candidate_pairs(
    links: &LinkState,
    params: &PairingParams<'_>,
    frames: &FrameLengths,
) -> Result<CandidatePairs> {
    if !(params.epsilon_mbps >= 0.0) {
        return Err(invalid("epsilon must be non-negative"));
    }
    let c = links.n_clients();
    if frames.down_bits.len() <= c || frames.up_bits.len() <= c {
        return Err(invalid("frame lengths must cover every client"));
    }
    let eps = params.epsilon_mbps;
    let p_max = params.power.max_tx_w();
    let mut pairs = BTreeMap::new();

    let mut hd_down = vec![0.0; c + 1];
    let mut hd_up = vec![0.0; c + 1];
    for k in 1..=c {
        hd_down[k] = params.rates.effective_throughput_linear(links.snr_down(k, p_max)).throughput_mbps;
        hd_up[k] = params.rates.effective_throughput_linear(links.snr_up(k, p_max)).throughput_mbps;
    }

    for i in 0..=c {
        for j in 0..=c {
            if (i == 0 && j == 0) || (i != 0 && i == j) {
                continue;
            }
            let key = PairKey { down: i, up: j };
            let (r_d, r_u) = if i == 0 {
                if hd_up[j] <= eps {
                    continue;
                }
                (0.0, hd_up[j])
            } else if j == 0 {
                if hd_down[i] <= eps {
                    continue;
                }
                (hd_down[i], 0.0)
            } else {
                let (r_d, r_u, exact_d, up_idx) = full_duplex_yields(links, params, i, j);
                if r_d <= eps || r_u <= eps {
                    continue;
                }
                match params.estimate {
                    RateEstimate::Margin => (r_d, r_u),
                    RateEstimate::QuantizedFeedback => (r_d, params.rates.rates_mbps()[up_idx]),
                    RateEstimate::Exact => (exact_d, r_u),
                }
            };
            let l_d = if i == 0 { 0.0 } else { frames.down_bits[i] };
            let l_u = if j == 0 { 0.0 } else { frames.up_bits[j] };
            let t_s = pair_airtime(l_d, l_u, r_d, r_u)?;
            pairs.insert(
                key,
                PairMetrics {
                    r_d_mbps: r_d,
                    r_u_mbps: r_u,
                    r_total_mbps: r_d + r_u,
                    t_s,
                    l_d_bits: l_d,
                    l_u_bits: l_u,
                },
            );
        }
    }
    Ok(CandidatePairs { pairs })
}
