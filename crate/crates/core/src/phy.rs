//! Bit-rate set, packet delivery ratio, rate selection and uplink power control.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, linear_to_db, sinr_uplink};
use crate::error::{invalid, Result};

pub const DEFAULT_RATES_MBPS: [f64; 8] = [6.0, 9.0, 12.0, 18.0, 24.0, 36.0, 48.0, 54.0];
pub const DEFAULT_THRESHOLDS_DB: [f64; 8] = [5.0, 6.0, 8.0, 11.0, 15.0, 19.0, 23.0, 25.0];
pub const DEFAULT_STEEPNESS_PER_DB: f64 = 2.0;

/// Available bit-rates with a logistic PDR curve per rate:
/// `PDR(γ, s) = 1 / (1 + exp(-k·(s - threshold(γ))))`, `s` in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RateTableSpec", into = "RateTableSpec")]
pub struct RateTable {
    rates_mbps: Vec<f64>,
    threshold_db: Vec<f64>,
    steepness_per_db: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RateTableSpec {
    rates_mbps: Vec<f64>,
    threshold_db: Vec<f64>,
    steepness_per_db: f64,
}

impl TryFrom<RateTableSpec> for RateTable {
    type Error = crate::Error;

    fn try_from(s: RateTableSpec) -> Result<Self> {
        RateTable::new(s.rates_mbps, s.threshold_db, s.steepness_per_db)
    }
}

impl From<RateTable> for RateTableSpec {
    fn from(t: RateTable) -> Self {
        Self {
            rates_mbps: t.rates_mbps,
            threshold_db: t.threshold_db,
            steepness_per_db: t.steepness_per_db,
        }
    }
}

impl Default for RateTable {
    fn default() -> Self {
        Self {
            rates_mbps: DEFAULT_RATES_MBPS.to_vec(),
            threshold_db: DEFAULT_THRESHOLDS_DB.to_vec(),
            steepness_per_db: DEFAULT_STEEPNESS_PER_DB,
        }
    }
}

/// Outcome of picking the throughput-maximizing rate for a given SINR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateChoice {
    pub index: usize,
    pub rate_mbps: f64,
    /// `rate × PDR(rate, sinr)`.
    pub throughput_mbps: f64,
}

impl RateTable {
    pub fn new(rates_mbps: Vec<f64>, threshold_db: Vec<f64>, steepness_per_db: f64) -> Result<Self> {
        if rates_mbps.is_empty() || rates_mbps.len() != threshold_db.len() {
            return Err(invalid("rate table needs one threshold per rate"));
        }
        if rates_mbps.windows(2).any(|w| !(w[0] < w[1])) || !(rates_mbps[0] > 0.0) {
            return Err(invalid("rates must be positive and strictly increasing"));
        }
        if threshold_db.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("thresholds must be strictly increasing"));
        }
        if !(steepness_per_db > 0.0) {
            return Err(invalid("PDR steepness must be positive"));
        }
        Ok(Self {
            rates_mbps,
            threshold_db,
            steepness_per_db,
        })
    }

    pub fn len(&self) -> usize {
        self.rates_mbps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates_mbps.is_empty()
    }

    pub fn rates_mbps(&self) -> &[f64] {
        &self.rates_mbps
    }

    pub fn thresholds_db(&self) -> &[f64] {
        &self.threshold_db
    }

    pub fn steepness_per_db(&self) -> f64 {
        self.steepness_per_db
    }

    pub fn lowest_rate_mbps(&self) -> f64 {
        self.rates_mbps[0]
    }

    pub fn highest_rate_mbps(&self) -> f64 {
        self.rates_mbps[self.rates_mbps.len() - 1]
    }

    pub fn index_of(&self, rate_mbps: f64) -> Option<usize> {
        self.rates_mbps.iter().position(|&r| r == rate_mbps)
    }

    pub fn pdr_at(&self, index: usize, sinr_db: f64) -> f64 {
        let x = -self.steepness_per_db * (sinr_db - self.threshold_db[index]);
        1.0 / (1.0 + x.exp())
    }

    pub fn pdr(&self, rate_mbps: f64, sinr_db: f64) -> Result<f64> {
        let idx = self
            .index_of(rate_mbps)
            .ok_or_else(|| invalid(format!("{rate_mbps} Mb/s is not in the rate table")))?;
        Ok(self.pdr_at(idx, sinr_db))
    }

    /// Rate maximizing `γ·PDR(γ, sinr_db)`; ties go to the lower rate.
    pub fn effective_throughput(&self, sinr_db: f64) -> RateChoice {
        let mut best = RateChoice {
            index: 0,
            rate_mbps: self.rates_mbps[0],
            throughput_mbps: self.rates_mbps[0] * self.pdr_at(0, sinr_db),
        };
        for (idx, &rate) in self.rates_mbps.iter().enumerate().skip(1) {
            let r = rate * self.pdr_at(idx, sinr_db);
            if r > best.throughput_mbps {
                best = RateChoice {
                    index: idx,
                    rate_mbps: rate,
                    throughput_mbps: r,
                };
            }
        }
        best
    }

    /// Same as [`effective_throughput`](Self::effective_throughput) on a linear SINR.
    pub fn effective_throughput_linear(&self, sinr: f64) -> RateChoice {
        self.effective_throughput(linear_to_db(sinr))
    }

    /// Highest-yield downlink rate that still decodes when inter-client
    /// interference costs up to `delta_db` of SINR.
    pub fn select_downlink_rate(&self, snr_d_db: f64, delta_db: f64) -> RateChoice {
        self.effective_throughput(snr_d_db - delta_db)
    }

    /// Uplink rate chosen from the uplink SINR at the AP, including residual
    /// self-interference when the AP is transmitting.
    pub fn select_uplink_rate(
        &self,
        p_up_w: f64,
        gain_j0: f64,
        self_gain: f64,
        p_ap_w: f64,
        noise_ap_w: f64,
    ) -> RateChoice {
        self.effective_throughput_linear(sinr_uplink(p_up_w, p_ap_w, gain_j0, self_gain, noise_ap_w))
    }

    /// Bits per feedback entry: `ceil(log2 |R|)`, at least one.
    pub fn index_width_bits(&self) -> usize {
        let n = self.rates_mbps.len();
        (usize::BITS - (n - 1).leading_zeros()).max(1) as usize
    }
}

/// Maximum uplink power keeping the interference at downlink client `i`
/// within `(10^(δ/10) − 1)·σ_i²`, capped at `max_tx_w`. A zero cross gain
/// (hidden node) allows full power.
pub fn uplink_power_cap(gain_ji: f64, noise_i_w: f64, delta_db: f64, max_tx_w: f64) -> f64 {
    if gain_ji <= 0.0 {
        return max_tx_w;
    }
    let allowed = (db_to_linear(delta_db) - 1.0) * noise_i_w / gain_ji;
    allowed.clamp(0.0, max_tx_w)
}

/// Packed rate-index feedback, `width` bits per entry, most significant bit first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackBits {
    bits: Vec<bool>,
}

impl FeedbackBits {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn as_bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], len_bits: usize) -> Result<Self> {
        if bytes.len() * 8 < len_bits {
            return Err(invalid("not enough bytes for the requested bit length"));
        }
        let bits = (0..len_bits).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect();
        Ok(Self { bits })
    }
}

impl fmt::Display for FeedbackBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub fn encode_rate_feedback(indices: &[usize], table: &RateTable) -> Result<FeedbackBits> {
    let width = table.index_width_bits();
    let mut bits = Vec::with_capacity(indices.len() * width);
    for &idx in indices {
        if idx >= table.len() {
            return Err(invalid(format!("rate index {idx} out of range for {} rates", table.len())));
        }
        for shift in (0..width).rev() {
            bits.push((idx >> shift) & 1 == 1);
        }
    }
    Ok(FeedbackBits { bits })
}

pub fn decode_rate_feedback(bits: &FeedbackBits, table: &RateTable) -> Result<Vec<usize>> {
    let width = table.index_width_bits();
    if !bits.len().is_multiple_of(width) {
        return Err(invalid(format!("{} bits is not a multiple of the {width}-bit entry width", bits.len())));
    }
    bits.bits
        .chunks(width)
        .map(|chunk| {
            let idx = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            if idx >= table.len() {
                Err(invalid(format!("decoded rate index {idx} out of range")))
            } else {
                Ok(idx)
            }
        })
        .collect()
}
