//! Node placement, path loss with Rayleigh fading, and SINR evaluation.
//!
//! Node 0 is always the access point; clients are numbered `1..=C`. Channel
//! gains are linear power gains `|h|²` and are reciprocal.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Free-space loss at 1 m for a 2.4 GHz carrier.
pub const DEFAULT_REF_LOSS_DB: f64 = 40.05;
pub const DEFAULT_PATH_LOSS_EXPONENT: f64 = 3.0;
/// Distances below this are clamped before evaluating path loss.
pub const MIN_DISTANCE_M: f64 = 1.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerConfig {
    pub max_tx_dbm: f64,
    pub noise_dbm: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            max_tx_dbm: 15.0,
            noise_dbm: -95.0,
        }
    }
}

impl PowerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_tx_dbm > self.noise_dbm) {
            return Err(invalid("max_tx_dbm must exceed noise_dbm"));
        }
        Ok(())
    }

    pub fn max_tx_w(&self) -> f64 {
        dbm_to_watts(self.max_tx_dbm)
    }

    pub fn noise_w(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }
}

/// When small-scale fading is redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FadingMode {
    /// One draw per topology, held for the whole run.
    PerTopology,
    /// Redrawn at every epoch boundary.
    PerEpoch,
    /// Redrawn before every transmission opportunity.
    PerPacket,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathLoss {
    pub ref_loss_db: f64,
    pub exponent: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        Self {
            ref_loss_db: DEFAULT_REF_LOSS_DB,
            exponent: DEFAULT_PATH_LOSS_EXPONENT,
        }
    }
}

impl PathLoss {
    pub fn loss_db(&self, distance_m: f64) -> f64 {
        let d = distance_m.max(MIN_DISTANCE_M);
        self.ref_loss_db + 10.0 * self.exponent * d.log10()
    }

    /// Linear gain for a link at `distance_m` whose fading draw has power
    /// `fading_power = |g|²`.
    pub fn gain(&self, distance_m: f64, fading_power: f64) -> Result<f64> {
        if !(distance_m > 0.0) || !distance_m.is_finite() {
            return Err(invalid(format!("distance must be positive, got {distance_m}")));
        }
        if !(fading_power >= 0.0) {
            return Err(invalid(format!("fading power must be non-negative, got {fading_power}")));
        }
        Ok(fading_power * db_to_linear(-self.loss_db(distance_m)))
    }
}

/// Link gain under the default log-distance model (exponent 3, 40.05 dB at 1 m).
pub fn link_gain(distance_m: f64, fading_power: f64) -> Result<f64> {
    PathLoss::default().gain(distance_m, fading_power)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub area_side_m: f64,
    /// Index 0 is the access point.
    pub positions: Vec<[f64; 2]>,
}

impl Topology {
    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn n_clients(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let [xa, ya] = self.positions[a];
        let [xb, yb] = self.positions[b];
        (xa - xb).hypot(ya - yb)
    }

    /// Writes the topology as a whitespace-separated table.
    pub fn write_table<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# area_side_m {}", self.area_side_m)?;
        writeln!(w, "# node_id x_m y_m")?;
        for (id, [x, y]) in self.positions.iter().enumerate() {
            writeln!(w, "{id} {x} {y}")?;
        }
        Ok(())
    }

    /// Reads a table produced by [`Topology::write_table`]. Node ids must
    /// appear in order starting from 0.
    pub fn read_table<R: BufRead>(r: R) -> Result<Self> {
        let mut area = None;
        let mut positions = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                let mut parts = rest.split_whitespace();
                if parts.next() == Some("area_side_m") {
                    let v = parts.next().and_then(|s| s.parse::<f64>().ok()).ok_or(Error::Parse {
                        line: lineno,
                        msg: "bad area_side_m".into(),
                    })?;
                    area = Some(v);
                }
                continue;
            }
            let cols: Vec<&str> = trimmed.split_whitespace().collect();
            let parse_err = |msg: &str| Error::Parse {
                line: lineno,
                msg: msg.to_string(),
            };
            if cols.len() != 3 {
                return Err(parse_err("expected 3 columns: node_id x_m y_m"));
            }
            let id: usize = cols[0].parse().map_err(|_| parse_err("bad node_id"))?;
            if id != positions.len() {
                return Err(parse_err("node ids must be consecutive from 0"));
            }
            let x: f64 = cols[1].parse().map_err(|_| parse_err("bad x_m"))?;
            let y: f64 = cols[2].parse().map_err(|_| parse_err("bad y_m"))?;
            positions.push([x, y]);
        }
        if positions.len() < 2 {
            return Err(invalid("topology needs an AP and at least one client"));
        }
        let area_side_m = area.unwrap_or_else(|| {
            positions
                .iter()
                .flat_map(|p| p.iter().copied())
                .fold(0.0, f64::max)
        });
        Ok(Self {
            area_side_m,
            positions,
        })
    }
}

/// Places an AP and `n_clients` clients uniformly in a square of side `area_side_m`.
pub fn generate_topology(n_clients: usize, area_side_m: f64, seed: u64) -> Result<Topology> {
    if n_clients == 0 {
        return Err(invalid("at least one client is required"));
    }
    if !(area_side_m > 0.0) || !area_side_m.is_finite() {
        return Err(invalid(format!("area side must be positive, got {area_side_m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..=n_clients)
        .map(|_| {
            [
                rng.gen_range(0.0..=area_side_m),
                rng.gen_range(0.0..=area_side_m),
            ]
        })
        .collect();
    Ok(Topology {
        area_side_m,
        positions,
    })
}

/// Channel state for one realization of the fading process.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    n: usize,
    gain: Vec<f64>,
    path_gain: Vec<f64>,
    pub noise_w: Vec<f64>,
    pub sic_db: f64,
    /// Residual self-interference gain `10^(-sic_db/10)`.
    pub self_gain: f64,
}

impl LinkState {
    /// Path-loss-only gains (unit fading) for `topology`.
    pub fn without_fading(topology: &Topology, path_loss: &PathLoss, noise_w: f64, sic_db: f64) -> Self {
        let n = topology.node_count();
        let mut path_gain = vec![0.0; n * n];
        for a in 0..n {
            for b in (a + 1)..n {
                let d = topology.distance(a, b).max(MIN_DISTANCE_M);
                let g = db_to_linear(-path_loss.loss_db(d));
                path_gain[a * n + b] = g;
                path_gain[b * n + a] = g;
            }
        }
        Self {
            n,
            gain: path_gain.clone(),
            path_gain,
            noise_w: vec![noise_w; n],
            sic_db,
            self_gain: db_to_linear(-sic_db),
        }
    }

    /// Builds a link state and draws one Rayleigh fading realization.
    pub fn realize<R: Rng + ?Sized>(
        topology: &Topology,
        path_loss: &PathLoss,
        noise_w: f64,
        sic_db: f64,
        rng: &mut R,
    ) -> Self {
        let mut ls = Self::without_fading(topology, path_loss, noise_w, sic_db);
        ls.redraw_fading(rng);
        ls
    }

    /// Builds a link state directly from a symmetric gain matrix (row-major,
    /// `n × n`). Diagonal entries are ignored.
    pub fn from_gains(n: usize, gains: Vec<f64>, noise_w: f64, sic_db: f64) -> Result<Self> {
        if gains.len() != n * n {
            return Err(invalid("gain matrix must be n × n"));
        }
        for a in 0..n {
            for b in 0..n {
                let g = gains[a * n + b];
                if a != b && (!(g >= 0.0) || g != gains[b * n + a]) {
                    return Err(invalid(format!("gain ({a},{b}) must be non-negative and reciprocal")));
                }
            }
        }
        Ok(Self {
            n,
            path_gain: gains.clone(),
            gain: gains,
            noise_w: vec![noise_w; n],
            sic_db,
            self_gain: db_to_linear(-sic_db),
        })
    }

    /// Draws fresh i.i.d. unit-variance complex Gaussian fading for every
    /// unordered node pair. Path loss is kept.
    pub fn redraw_fading<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.n;
        for a in 0..n {
            for b in (a + 1)..n {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let fading = 0.5 * (re * re + im * im);
                let g = fading * self.path_gain[a * n + b];
                self.gain[a * n + b] = g;
                self.gain[b * n + a] = g;
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn n_clients(&self) -> usize {
        self.n - 1
    }

    pub fn gain(&self, a: usize, b: usize) -> f64 {
        self.gain[a * self.n + b]
    }

    pub fn set_gain(&mut self, a: usize, b: usize, g: f64) {
        self.gain[a * self.n + b] = g;
        self.gain[b * self.n + a] = g;
    }

    pub fn set_sic_db(&mut self, sic_db: f64) {
        self.sic_db = sic_db;
        self.self_gain = db_to_linear(-sic_db);
    }

    /// Interference-free SNR (linear) of the link between the AP and `client`
    /// at transmit power `p_w`. Reciprocity makes it direction independent
    /// up to the receiver noise.
    pub fn snr_down(&self, client: usize, p_w: f64) -> f64 {
        p_w * self.gain(0, client) / self.noise_w[client]
    }

    pub fn snr_up(&self, client: usize, p_w: f64) -> f64 {
        p_w * self.gain(client, 0) / self.noise_w[0]
    }

    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# sic_db {} self_gain {:e}", self.sic_db, self.self_gain);
        let _ = writeln!(s, "# a b gain_db");
        for a in 0..self.n {
            for b in (a + 1)..self.n {
                let _ = writeln!(s, "{a} {b} {:.3}", linear_to_db(self.gain(a, b)));
            }
        }
        s
    }
}

/// Downlink SINR at client `i` while client `j` transmits uplink:
/// `P_ap·|h_0i|² / (σ_i² + P_j·|h_ji|²)`.
pub fn sinr_downlink(p_ap_w: f64, p_up_w: f64, gain_0i: f64, gain_ji: f64, noise_i_w: f64) -> f64 {
    p_ap_w * gain_0i / (noise_i_w + p_up_w * gain_ji)
}

/// Uplink SINR at the AP while it transmits downlink:
/// `P_j·|h_j0|² / (σ_0² + P_ap·|h_00|²)`.
pub fn sinr_uplink(p_up_w: f64, p_ap_w: f64, gain_j0: f64, self_gain: f64, noise_ap_w: f64) -> f64 {
    p_up_w * gain_j0 / (noise_ap_w + p_ap_w * self_gain)
}
