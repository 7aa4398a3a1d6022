use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{FadingMode, PathLoss, PowerConfig};
use crate::error::{invalid, Error, Result};
use crate::phy::RateTable;
use crate::scheme::SchemeId;

/// Arrival rate that makes every arrival interval enqueue a frame.
pub const BACKLOGGED_FPS: f64 = 2000.0;

/// Offered load per client and direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrivalSpec {
    /// Every client offers this many frames per second in each direction.
    Fixed(f64),
    /// Each client and direction draws its rate uniformly from `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// One arrival per interval, every interval.
    Backlogged,
}

impl ArrivalSpec {
    /// Nominal rate used for reporting; the midpoint for ranges.
    pub fn nominal_fps(&self) -> f64 {
        match *self {
            ArrivalSpec::Fixed(v) => v,
            ArrivalSpec::Uniform { lo, hi } => 0.5 * (lo + hi),
            ArrivalSpec::Backlogged => BACKLOGGED_FPS,
        }
    }

    /// Per-client `(λ_d, λ_u)` vectors indexed by node id (entry 0 unused).
    pub fn draw<R: Rng + ?Sized>(&self, n_clients: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let mut d = vec![0.0; n_clients + 1];
        let mut u = vec![0.0; n_clients + 1];
        for k in 1..=n_clients {
            match *self {
                ArrivalSpec::Fixed(v) => {
                    d[k] = v;
                    u[k] = v;
                }
                ArrivalSpec::Backlogged => {
                    d[k] = BACKLOGGED_FPS;
                    u[k] = BACKLOGGED_FPS;
                }
                ArrivalSpec::Uniform { lo, hi } => {
                    d[k] = rng.gen_range(lo..=hi);
                    u[k] = rng.gen_range(lo..=hi);
                }
            }
        }
        (d, u)
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ArrivalSpec::Fixed(v) => v >= 0.0 && v.is_finite(),
            ArrivalSpec::Uniform { lo, hi } => lo >= 0.0 && hi >= lo && hi.is_finite(),
            ArrivalSpec::Backlogged => true,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("bad arrival rate {self}")))
        }
    }
}

impl fmt::Display for ArrivalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArrivalSpec::Fixed(v) => write!(f, "{v}"),
            ArrivalSpec::Uniform { lo, hi } => write!(f, "{lo}:{hi}"),
            ArrivalSpec::Backlogged => f.write_str("backlogged"),
        }
    }
}

impl FromStr for ArrivalSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("backlogged") {
            return Ok(ArrivalSpec::Backlogged);
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| invalid(format!("bad arrival rate '{s}'")));
        let spec = match s.split_once(':') {
            Some((a, b)) => ArrivalSpec::Uniform { lo: num(a)?, hi: num(b)? },
            None => ArrivalSpec::Fixed(num(s)?),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ArrivalRepr {
    Number(f64),
    Text(String),
}

impl Serialize for ArrivalSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ArrivalSpec::Fixed(v) => ArrivalRepr::Number(*v),
            other => ArrivalRepr::Text(other.to_string()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ArrivalSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ArrivalRepr::deserialize(d)? {
            ArrivalRepr::Number(v) => ArrivalSpec::from_str(&v.to_string()),
            ArrivalRepr::Text(t) => ArrivalSpec::from_str(&t),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// MAC timing constants in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Timing {
    pub difs_us: f64,
    pub sifs_us: f64,
    pub slot_us: f64,
    pub tone_us: f64,
    pub header_us: f64,
    pub ack_us: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            difs_us: 34.0,
            sifs_us: 16.0,
            slot_us: 9.0,
            tone_us: 20.0,
            header_us: 44.0,
            ack_us: 44.0,
        }
    }
}

/// Everything one simulation replica needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub scheme: SchemeId,
    pub n_clients: usize,
    pub epochs: usize,
    pub epoch_ms: f64,
    pub arrival_interval_ms: f64,
    pub arrival_fps: ArrivalSpec,
    pub frame_bytes: u32,
    pub delta_db: f64,
    pub sic_db: f64,
    pub epsilon_mbps: f64,
    pub cw_min: u32,
    pub cw_max: u32,
    /// Retransmissions allowed per frame; `None` retries forever.
    pub retry_limit: Option<u32>,
    pub area_side_m: f64,
    pub fading: FadingMode,
    /// Standard deviation of the log-normal error on the client's estimate
    /// of its gain towards the downlink client, in dB. Zero disables it.
    pub estimation_noise_db: f64,
    pub seed: u64,
    pub timing: Timing,
    pub power: PowerConfig,
    pub path_loss: PathLoss,
    pub rates: RateTable,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeId::Proposed,
            n_clients: 30,
            epochs: 1000,
            epoch_ms: 100.0,
            arrival_interval_ms: 0.5,
            arrival_fps: ArrivalSpec::Backlogged,
            frame_bytes: 1500,
            delta_db: 5.0,
            sic_db: 110.0,
            epsilon_mbps: 0.5,
            cw_min: 16,
            cw_max: 1024,
            retry_limit: None,
            area_side_m: 100.0,
            fading: FadingMode::PerTopology,
            estimation_noise_db: 0.0,
            seed: 1,
            timing: Timing::default(),
            power: PowerConfig::default(),
            path_loss: PathLoss::default(),
            rates: RateTable::default(),
        }
    }
}

impl SimConfig {
    /// Checks every field and reports all offending ones at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                bad.push(msg.to_string());
            }
        };
        need(self.n_clients >= 1, "n_clients must be at least 1");
        need(self.epochs >= 1, "epochs must be at least 1");
        need(self.epoch_ms > 0.0 && self.epoch_ms.is_finite(), "epoch_ms must be positive");
        need(
            self.arrival_interval_ms > 0.0 && self.arrival_interval_ms <= self.epoch_ms,
            "arrival_interval_ms must be positive and at most epoch_ms",
        );
        need(self.arrival_fps.validate().is_ok(), "arrival_fps must be non-negative");
        need(self.frame_bytes >= 1, "frame_bytes must be positive");
        need(self.delta_db >= 0.0 && self.delta_db.is_finite(), "delta_db must be non-negative");
        need(self.sic_db.is_finite(), "sic_db must be finite");
        need(self.epsilon_mbps >= 0.0, "epsilon_mbps must be non-negative");
        need(self.cw_min >= 1 && self.cw_min <= self.cw_max, "need 1 <= cw_min <= cw_max");
        need(self.area_side_m > 0.0 && self.area_side_m.is_finite(), "area_side_m must be positive");
        need(self.estimation_noise_db >= 0.0, "estimation_noise_db must be non-negative");
        let t = &self.timing;
        for (v, name) in [
            (t.difs_us, "timing.difs_us"),
            (t.sifs_us, "timing.sifs_us"),
            (t.slot_us, "timing.slot_us"),
            (t.tone_us, "timing.tone_us"),
            (t.header_us, "timing.header_us"),
            (t.ack_us, "timing.ack_us"),
        ] {
            need(v > 0.0 && v.is_finite(), &format!("{name} must be positive"));
        }
        need(t.slot_us * 10.0 <= self.epoch_ms * 1e3, "epoch_ms must be much longer than a slot");
        need(self.power.validate().is_ok(), "power.max_tx_dbm must exceed power.noise_dbm");
        need(
            self.path_loss.exponent > 0.0 && self.path_loss.ref_loss_db.is_finite(),
            "path_loss must have a positive exponent",
        );
        let ratio = self.epoch_ms / self.arrival_interval_ms;
        need(
            (ratio - ratio.round()).abs() < 1e-9,
            "epoch_ms must be a whole number of arrival intervals",
        );
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(bad))
        }
    }

    pub fn frame_bits(&self) -> f64 {
        self.frame_bytes as f64 * 8.0
    }

    pub fn epoch_s(&self) -> f64 {
        self.epoch_ms * 1e-3
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config always serializes")
    }
}
