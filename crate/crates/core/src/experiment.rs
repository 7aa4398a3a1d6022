//! Scenario sweeps over seeds and one configuration axis, run in parallel,
//! with CSV output.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::mac::{SimConfig, SimReport};
use crate::scheme::SchemeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Clients,
    ArrivalRate,
    Delta,
    Sic,
    Scheme,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Clients => "clients",
            SweepAxis::ArrivalRate => "arrival_rate",
            SweepAxis::Delta => "delta",
            SweepAxis::Sic => "sic",
            SweepAxis::Scheme => "scheme",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "clients" | "n_clients" => Ok(SweepAxis::Clients),
            "arrival_rate" | "arrival" | "arrival_fps" | "fps" => Ok(SweepAxis::ArrivalRate),
            "delta" | "delta_db" => Ok(SweepAxis::Delta),
            "sic" | "sic_db" => Ok(SweepAxis::Sic),
            "scheme" => Ok(SweepAxis::Scheme),
            other => Err(invalid(format!("unknown sweep axis `{other}`"))),
        }
    }
}

/// One axis and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<String>,
}

impl Sweep {
    /// Applies the `k`-th value to `cfg`.
    fn apply(&self, k: usize, cfg: &mut SimConfig) -> Result<()> {
        let v = self.values[k].as_str();
        let num = || v.parse::<f64>().map_err(|_| invalid(format!("`{v}` is not a number")));
        match self.axis {
            SweepAxis::Clients => {
                cfg.n_clients = v.parse().map_err(|_| invalid(format!("`{v}` is not a client count")))?;
            }
            SweepAxis::ArrivalRate => cfg.arrival_fps = v.parse()?,
            SweepAxis::Delta => cfg.delta_db = num()?,
            SweepAxis::Sic => cfg.sic_db = num()?,
            SweepAxis::Scheme => cfg.scheme = v.parse()?,
        }
        Ok(())
    }
}

/// Accepts `axis=v1,v2,...` where a numeric item may also be a range
/// `start..end` (inclusive, step 1) or `start..end..step`.
impl FromStr for Sweep {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (axis, rest) = s
            .split_once('=')
            .ok_or_else(|| invalid(format!("sweep `{s}` must look like axis=values")))?;
        let axis: SweepAxis = axis.parse()?;
        let mut values = Vec::new();
        for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if axis != SweepAxis::Scheme && item.contains("..") {
                values.extend(expand_range(item)?);
            } else {
                values.push(item.to_string());
            }
        }
        if values.is_empty() {
            return Err(invalid(format!("sweep `{s}` has no values")));
        }
        Ok(Self { axis, values })
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.axis.name(), self.values.join(","))
    }
}

fn expand_range(item: &str) -> Result<Vec<String>> {
    let parts: Vec<&str> = item.split("..").collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| invalid(format!("bad range `{item}`")));
    let (start, end, step) = match parts.as_slice() {
        [a, b] => (num(a)?, num(b)?, 1.0),
        [a, b, c] => (num(a)?, num(b)?, num(c)?),
        _ => return Err(invalid(format!("bad range `{item}`"))),
    };
    if !(step > 0.0) || end < start {
        return Err(invalid(format!("bad range `{item}`")));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| format_number(start + k as f64 * step)).collect())
}

fn format_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

/// A base configuration crossed with schemes, seeds and an optional sweep.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub base: SimConfig,
    pub schemes: Vec<SchemeId>,
    pub seeds: Vec<u64>,
    pub sweep: Option<Sweep>,
}

impl Scenario {
    pub fn new(base: SimConfig) -> Self {
        let schemes = vec![base.scheme];
        Self {
            base,
            schemes,
            seeds: (1..=5).collect(),
            sweep: None,
        }
    }

    /// Every configuration to run, ordered by sweep value, scheme, then seed.
    pub fn configs(&self) -> Result<Vec<SimConfig>> {
        if self.seeds.is_empty() {
            return Err(invalid("a scenario needs at least one seed"));
        }
        let points = self.sweep.as_ref().map_or(1, |s| s.values.len());
        let schemes: &[SchemeId] = match &self.sweep {
            Some(s) if s.axis == SweepAxis::Scheme => &[SchemeId::Proposed],
            _ => &self.schemes,
        };
        let mut out = Vec::new();
        for k in 0..points {
            for &scheme in schemes {
                for &seed in &self.seeds {
                    let mut cfg = self.base.clone();
                    cfg.scheme = scheme;
                    cfg.seed = seed;
                    if let Some(s) = &self.sweep {
                        s.apply(k, &mut cfg)?;
                    }
                    cfg.validate()?;
                    out.push(cfg);
                }
            }
        }
        Ok(out)
    }
}

/// A finished replica.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: SimConfig,
    pub report: SimReport,
}

/// Runs every configuration of the scenario on the rayon pool. Output order
/// matches [`Scenario::configs`].
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<RunOutput>> {
    let configs = scenario.configs()?;
    configs
        .into_par_iter()
        .map(|config| {
            let report = crate::mac::run_simulation(&config)?;
            log::info!(
                "{} clients={} seed={} total={:.3} Mb/s",
                config.scheme,
                config.n_clients,
                config.seed,
                report.throughput_total_mbps()
            );
            Ok(RunOutput { config, report })
        })
        .collect()
}

/// One line of the main results file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scheme: String,
    pub n_clients: usize,
    pub arrival_fps: f64,
    pub delta_db: f64,
    pub sic_db: f64,
    pub seed: u64,
    pub tput_total_mbps: f64,
    pub tput_down_mbps: f64,
    pub tput_up_mbps: f64,
    pub collision_prob: f64,
    pub fd_time_frac: f64,
    pub hd_time_frac: f64,
    pub mean_contention_us: f64,
}

impl SummaryRow {
    pub fn new(run: &RunOutput) -> Self {
        let (c, r) = (&run.config, &run.report);
        Self {
            scheme: c.scheme.name().to_string(),
            n_clients: c.n_clients,
            arrival_fps: c.arrival_fps.nominal_fps(),
            delta_db: c.delta_db,
            sic_db: c.sic_db,
            seed: c.seed,
            tput_total_mbps: r.throughput_total_mbps(),
            tput_down_mbps: r.throughput_down_mbps(),
            tput_up_mbps: r.throughput_up_mbps(),
            collision_prob: r.collision_prob(),
            fd_time_frac: r.fd_time_frac(),
            hd_time_frac: r.hd_time_frac(),
            mean_contention_us: r.mean_contention_us(),
        }
    }
}

/// Per-client uplink access, for the uplink-share distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClientRow {
    pub scheme: String,
    pub n_clients: usize,
    pub arrival_fps: f64,
    pub delta_db: f64,
    pub sic_db: f64,
    pub seed: u64,
    pub client: usize,
    pub uplink_share: f64,
    pub uplink_tx: u64,
    pub uplink_ok: u64,
    pub downlink_tx: u64,
    pub downlink_ok: u64,
    pub tput_down_mbps: f64,
    pub tput_up_mbps: f64,
}

impl ClientRow {
    pub fn rows(run: &RunOutput) -> Vec<Self> {
        let (c, r) = (&run.config, &run.report);
        let shares = r.uplink_shares();
        let secs = r.duration_s();
        (1..r.clients.len())
            .map(|k| {
                let s = &r.clients[k];
                Self {
                    scheme: c.scheme.name().to_string(),
                    n_clients: c.n_clients,
                    arrival_fps: c.arrival_fps.nominal_fps(),
                    delta_db: c.delta_db,
                    sic_db: c.sic_db,
                    seed: c.seed,
                    client: k,
                    uplink_share: shares[k - 1],
                    uplink_tx: s.uplink_tx,
                    uplink_ok: s.uplink_ok,
                    downlink_tx: s.downlink_tx,
                    downlink_ok: s.downlink_ok,
                    tput_down_mbps: s.bits_down as f64 / secs / 1e6,
                    tput_up_mbps: s.bits_up as f64 / secs / 1e6,
                }
            })
            .collect()
    }
}

/// Assigned versus realized frequency of one pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRow {
    pub scheme: String,
    pub n_clients: usize,
    pub arrival_fps: f64,
    pub delta_db: f64,
    pub sic_db: f64,
    pub seed: u64,
    pub down: usize,
    pub up: usize,
    pub assigned_prob: f64,
    pub realized_prob: f64,
}

impl PairRow {
    pub fn rows(run: &RunOutput) -> Vec<Self> {
        let c = &run.config;
        run.report
            .realization()
            .into_iter()
            .map(|(k, assigned, realized)| Self {
                scheme: c.scheme.name().to_string(),
                n_clients: c.n_clients,
                arrival_fps: c.arrival_fps.nominal_fps(),
                delta_db: c.delta_db,
                sic_db: c.sic_db,
                seed: c.seed,
                down: k.down,
                up: k.up,
                assigned_prob: assigned,
                realized_prob: realized,
            })
            .collect()
    }
}

/// Writes rows with a header line.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn summary_rows(runs: &[RunOutput]) -> Vec<SummaryRow> {
    runs.iter().map(SummaryRow::new).collect()
}

pub fn client_rows(runs: &[RunOutput]) -> Vec<ClientRow> {
    runs.iter().flat_map(ClientRow::rows).collect()
}

pub fn pair_rows(runs: &[RunOutput]) -> Vec<PairRow> {
    runs.iter().flat_map(PairRow::rows).collect()
}

/// Parses a seed list such as `1,2,7` or `1..5`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((a, b)) = item.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| invalid(format!("bad seed range `{item}`")))?;
            let b: u64 = b.trim().parse().map_err(|_| invalid(format!("bad seed range `{item}`")))?;
            if b < a {
                return Err(invalid(format!("bad seed range `{item}`")));
            }
            out.extend(a..=b);
        } else {
            out.push(item.parse().map_err(|_| invalid(format!("bad seed `{item}`")))?);
        }
    }
    if out.is_empty() {
        return Err(invalid("no seeds given"));
    }
    Ok(out)
}

/// Parses `all` or a comma-separated list of scheme names.
pub fn parse_schemes(s: &str) -> Result<Vec<SchemeId>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(SchemeId::ALL.to_vec());
    }
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::parse).collect()
}

/// Mean of `f` over runs sharing a key.
pub fn mean_by<K: PartialEq + Clone>(runs: &[RunOutput], key: impl Fn(&RunOutput) -> K, f: impl Fn(&SimReport) -> f64) -> Vec<(K, f64)> {
    let mut acc: Vec<(K, f64, usize)> = Vec::new();
    for r in runs {
        let k = key(r);
        let v = f(&r.report);
        match acc.iter_mut().find(|(kk, _, _)| *kk == k) {
            Some(e) => {
                e.1 += v;
                e.2 += 1;
            }
            None => acc.push((k, v, 1)),
        }
    }
    acc.into_iter().map(|(k, s, n)| (k, s / n as f64)).collect()
}
