use std::collections::BTreeMap;

use crate::pairing::PairKey;
use crate::scheme::SchemeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeCategory {
    FullDuplex,
    HalfDuplexDown,
    HalfDuplexUp,
    Contention,
    Overhead,
    Collision,
    Idle,
}

/// Channel time per category, nanoseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TimeBreakdown {
    pub fd_ns: u64,
    pub hd_down_ns: u64,
    pub hd_up_ns: u64,
    pub contention_ns: u64,
    pub overhead_ns: u64,
    pub collision_ns: u64,
    pub idle_ns: u64,
}

impl TimeBreakdown {
    pub fn add(&mut self, cat: TimeCategory, ns: u64) {
        let slot = match cat {
            TimeCategory::FullDuplex => &mut self.fd_ns,
            TimeCategory::HalfDuplexDown => &mut self.hd_down_ns,
            TimeCategory::HalfDuplexUp => &mut self.hd_up_ns,
            TimeCategory::Contention => &mut self.contention_ns,
            TimeCategory::Overhead => &mut self.overhead_ns,
            TimeCategory::Collision => &mut self.collision_ns,
            TimeCategory::Idle => &mut self.idle_ns,
        };
        *slot += ns;
    }

    pub fn merge(&mut self, o: &TimeBreakdown) {
        self.fd_ns += o.fd_ns;
        self.hd_down_ns += o.hd_down_ns;
        self.hd_up_ns += o.hd_up_ns;
        self.contention_ns += o.contention_ns;
        self.overhead_ns += o.overhead_ns;
        self.collision_ns += o.collision_ns;
        self.idle_ns += o.idle_ns;
    }

    pub fn total_ns(&self) -> u64 {
        self.data_ns() + self.contention_ns + self.overhead_ns + self.collision_ns + self.idle_ns
    }

    /// Time spent carrying data frames that were not lost to collisions.
    pub fn data_ns(&self) -> u64 {
        self.fd_ns + self.hd_down_ns + self.hd_up_ns
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpochStats {
    pub time: TimeBreakdown,
    pub bits_down: u64,
    pub bits_up: u64,
    pub txops: u64,
    /// Transmission opportunities in which at least one station contended.
    pub contended: u64,
    pub collisions: u64,
    pub fd_txops: u64,
    /// Expected throughput of the epoch's assignment, if one was solved.
    pub lp_objective_bps: Option<f64>,
    pub relaxed: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClientStats {
    pub bits_down: u64,
    pub bits_up: u64,
    pub downlink_tx: u64,
    pub downlink_ok: u64,
    /// Uplink frames put on the air, collided ones included.
    pub uplink_tx: u64,
    pub uplink_ok: u64,
    pub uplink_collided: u64,
    pub arrivals_down: u64,
    pub arrivals_up: u64,
    pub drops: u64,
}

/// Assigned versus realized use of one pair.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairStats {
    /// `Σ_epochs p(i,j) · txops`, the expected count under the announced tables.
    pub assigned: f64,
    /// Transmission opportunities in which exactly this pair transmitted.
    pub realized: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyStats {
    /// Power-controlled full-duplex transmissions with a single uplink.
    pub fd_checked: u64,
    /// Of those, how many left the downlink below `SNR − δ`.
    pub violations: u64,
    /// Smallest `SINR_d − (SNR_d − δ)` seen, dB.
    pub worst_margin_db: f64,
    /// Power-controlled downlinks that overlapped an uplink collision.
    pub collided_fd: u64,
    /// Of those, how many ended below `SNR − δ` (several capped uplinks add up).
    pub collided_violations: u64,
    /// Transmissions above the maximum power.
    pub power_violations: u64,
}

impl Default for SafetyStats {
    fn default() -> Self {
        Self {
            fd_checked: 0,
            violations: 0,
            worst_margin_db: f64::INFINITY,
            collided_fd: 0,
            collided_violations: 0,
            power_violations: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub scheme: SchemeId,
    pub n_clients: usize,
    pub seed: u64,
    pub epoch_s: f64,
    pub epochs: Vec<EpochStats>,
    /// Indexed by client id; entry 0 unused.
    pub clients: Vec<ClientStats>,
    pub pairs: BTreeMap<PairKey, PairStats>,
    /// Transmission opportunities lost or degraded by an uplink collision.
    pub collided_txops: u64,
    /// Transmission opportunities served outside the announced table.
    pub fallback_txops: u64,
    pub safety: SafetyStats,
}

impl SimReport {
    pub fn duration_s(&self) -> f64 {
        self.epochs.len() as f64 * self.epoch_s
    }

    pub fn time(&self) -> TimeBreakdown {
        let mut t = TimeBreakdown::default();
        for e in &self.epochs {
            t.merge(&e.time);
        }
        t
    }

    fn sum(&self, f: impl Fn(&EpochStats) -> u64) -> u64 {
        self.epochs.iter().map(f).sum()
    }

    pub fn bits_down(&self) -> u64 {
        self.sum(|e| e.bits_down)
    }

    pub fn bits_up(&self) -> u64 {
        self.sum(|e| e.bits_up)
    }

    pub fn txops(&self) -> u64 {
        self.sum(|e| e.txops)
    }

    pub fn throughput_down_mbps(&self) -> f64 {
        self.bits_down() as f64 / self.duration_s() / 1e6
    }

    pub fn throughput_up_mbps(&self) -> f64 {
        self.bits_up() as f64 / self.duration_s() / 1e6
    }

    pub fn throughput_total_mbps(&self) -> f64 {
        (self.bits_down() + self.bits_up()) as f64 / self.duration_s() / 1e6
    }

    /// Collisions over transmission opportunities that had a contender.
    pub fn collision_prob(&self) -> f64 {
        let c = self.sum(|e| e.contended);
        if c == 0 {
            0.0
        } else {
            self.sum(|e| e.collisions) as f64 / c as f64
        }
    }

    /// Share of data airtime spent in full-duplex transmissions.
    pub fn fd_time_frac(&self) -> f64 {
        let t = self.time();
        if t.data_ns() == 0 {
            0.0
        } else {
            t.fd_ns as f64 / t.data_ns() as f64
        }
    }

    /// Share of data airtime spent in half-duplex transmissions.
    pub fn hd_time_frac(&self) -> f64 {
        let t = self.time();
        if t.data_ns() == 0 {
            0.0
        } else {
            (t.hd_down_ns + t.hd_up_ns) as f64 / t.data_ns() as f64
        }
    }

    /// Mean backoff time per transmission opportunity, microseconds.
    pub fn mean_contention_us(&self) -> f64 {
        let n = self.txops();
        if n == 0 {
            0.0
        } else {
            self.time().contention_ns as f64 / n as f64 / 1e3
        }
    }

    /// Each client's share of all uplink transmissions.
    pub fn uplink_shares(&self) -> Vec<f64> {
        let total: u64 = self.clients.iter().skip(1).map(|c| c.uplink_tx).sum();
        self.clients
            .iter()
            .skip(1)
            .map(|c| if total == 0 { 0.0 } else { c.uplink_tx as f64 / total as f64 })
            .collect()
    }

    /// Clients (ids) that never transmitted an uplink frame.
    pub fn uplink_starved(&self) -> Vec<usize> {
        (1..self.clients.len()).filter(|&k| self.clients[k].uplink_tx == 0).collect()
    }

    /// `(pair, assigned frequency, realized frequency)` over all transmission
    /// opportunities.
    pub fn realization(&self) -> Vec<(PairKey, f64, f64)> {
        let n = self.txops() as f64;
        if n == 0.0 {
            return Vec::new();
        }
        self.pairs
            .iter()
            .map(|(k, s)| (*k, s.assigned / n, s.realized as f64 / n))
            .collect()
    }

    /// Mean of the per-epoch assignment objectives, bits per second.
    pub fn mean_lp_objective_bps(&self) -> Option<f64> {
        let v: Vec<f64> = self.epochs.iter().filter_map(|e| e.lp_objective_bps).collect();
        if v.is_empty() {
            None
        } else {
            Some(v.iter().sum::<f64>() / v.len() as f64)
        }
    }
}
