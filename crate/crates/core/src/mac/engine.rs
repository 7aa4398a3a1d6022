use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::assign::{AccessTable, DemandSnapshot};
use crate::channel::{db_to_linear, generate_topology, linear_to_db, FadingMode, LinkState};
use crate::error::Result;
use crate::pairing::PairKey;
use crate::phy::{uplink_power_cap, RateChoice};
use crate::scheme::Policy;

use super::config::SimConfig;
use super::queue::{arrival_probabilities, step_arrivals, QueueState};
use super::report::{ClientStats, EpochStats, SimReport, TimeBreakdown, TimeCategory};

const STREAM_FADING: u64 = 1;
const STREAM_ARRIVALS: u64 = 2;
const STREAM_MAC: u64 = 3;
const STREAM_DEMAND: u64 = 4;

pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn us_to_ns(us: f64) -> u64 {
    (us * 1e3).round() as u64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DownFrame {
    pub client: usize,
    pub rate_idx: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct UpFrame {
    pub client: usize,
    pub power_w: f64,
    pub rate_idx: usize,
}

/// What a scheme decided to put on the air in one transmission opportunity.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Transmission {
    pub down: Option<DownFrame>,
    pub ups: Vec<UpFrame>,
    /// A DCF collision: every frame in the opportunity is lost.
    pub dcf_collision: bool,
    pub contention_slots: u32,
    pub contended: bool,
    /// Whether the opportunity starts with the AP's tone and header.
    pub with_tone: bool,
    /// Whether uplink power was set by the interference cap.
    pub power_controlled: bool,
    pub fallback: bool,
}

impl Transmission {
    pub fn new(down: Option<DownFrame>, ups: Vec<UpFrame>) -> Self {
        Self {
            down,
            ups,
            dcf_collision: false,
            contention_slots: 0,
            contended: false,
            with_tone: true,
            power_controlled: false,
            fallback: false,
        }
    }
}

/// Mutable state of one simulation replica shared by all schemes.
pub(crate) struct World<'a> {
    pub cfg: &'a SimConfig,
    /// Channel state at the start of the epoch; the basis of every estimate.
    pub links: LinkState,
    /// Channel state during the current opportunity when fading changes per packet.
    pub live: Option<LinkState>,
    /// Bumped every time `links` changes.
    pub links_version: u64,
    pub queues: QueueState,
    pub rng: ChaCha8Rng,
    pub p_max: f64,
    fade_rng: ChaCha8Rng,
    arrival_rng: ChaCha8Rng,
    est_noise: Option<Normal<f64>>,
    clock_ns: u64,
    epoch_end_ns: u64,
    next_arrival_ns: u64,
    arrival_interval_ns: u64,
    p_arr_d: Vec<f64>,
    p_arr_u: Vec<f64>,
    mark_d: Vec<u64>,
    mark_u: Vec<u64>,
    prev_arrivals: (Vec<u64>, Vec<u64>),
    pub cur: EpochStats,
    carry: TimeBreakdown,
    pub report: SimReport,
}

impl<'a> World<'a> {
    fn new(cfg: &'a SimConfig, links: LinkState, lambda_d: &[f64], lambda_u: &[f64]) -> Self {
        let c = cfg.n_clients;
        let interval_s = cfg.arrival_interval_ms * 1e-3;
        let live = (cfg.fading == FadingMode::PerPacket).then(|| links.clone());
        Self {
            cfg,
            links,
            live,
            links_version: 0,
            queues: QueueState::new(c),
            rng: stream(cfg.seed, STREAM_MAC),
            p_max: cfg.power.max_tx_w(),
            fade_rng: stream(cfg.seed, STREAM_FADING),
            arrival_rng: stream(cfg.seed, STREAM_ARRIVALS),
            est_noise: (cfg.estimation_noise_db > 0.0).then(|| Normal::new(0.0, cfg.estimation_noise_db).unwrap()),
            clock_ns: 0,
            epoch_end_ns: 0,
            next_arrival_ns: 0,
            arrival_interval_ns: us_to_ns(cfg.arrival_interval_ms * 1e3),
            p_arr_d: arrival_probabilities(lambda_d, interval_s),
            p_arr_u: arrival_probabilities(lambda_u, interval_s),
            mark_d: vec![0; c + 1],
            mark_u: vec![0; c + 1],
            prev_arrivals: (vec![0; c + 1], vec![0; c + 1]),
            cur: EpochStats::default(),
            carry: TimeBreakdown::default(),
            report: SimReport {
                scheme: cfg.scheme,
                n_clients: c,
                seed: cfg.seed,
                epoch_s: cfg.epoch_s(),
                epochs: Vec::with_capacity(cfg.epochs),
                clients: vec![ClientStats::default(); c + 1],
                pairs: Default::default(),
                collided_txops: 0,
                fallback_txops: 0,
                safety: Default::default(),
            },
        }
    }

    pub fn n_clients(&self) -> usize {
        self.cfg.n_clients
    }

    /// Channel state the current transmission actually sees.
    pub fn now(&self) -> &LinkState {
        self.live.as_ref().unwrap_or(&self.links)
    }

    pub fn snr_down_db(&self, client: usize) -> f64 {
        linear_to_db(self.links.snr_down(client, self.p_max))
    }

    /// Rate for a downlink whose uplink partner is unknown when the header
    /// goes out: with the interference margin, or at the plain SNR.
    pub fn downlink_rate(&self, client: usize, with_margin: bool) -> RateChoice {
        let delta = if with_margin { self.cfg.delta_db } else { 0.0 };
        self.cfg.rates.select_downlink_rate(self.snr_down_db(client), delta)
    }

    /// Cross gain from `up` to `down` as the uplink client estimates it.
    pub fn estimated_cross_gain(&mut self, up: usize, down: usize) -> f64 {
        let g = self.links.gain(up, down);
        match self.est_noise {
            Some(n) => g * db_to_linear(n.sample(&mut self.rng)),
            None => g,
        }
    }

    /// Capped uplink power and the rate the client picks for it.
    pub fn controlled_uplink(&mut self, up: usize, down: usize) -> (f64, RateChoice) {
        let g = self.estimated_cross_gain(up, down);
        let p = uplink_power_cap(g, self.links.noise_w[down], self.cfg.delta_db, self.p_max);
        (p, self.uplink_rate(up, p, true))
    }

    /// Rate for an uplink at power `p` from the epoch-start channel.
    pub fn uplink_rate(&self, up: usize, p: f64, ap_transmitting: bool) -> RateChoice {
        let l = &self.links;
        let p_ap = if ap_transmitting { self.p_max } else { 0.0 };
        self.cfg.rates.select_uplink_rate(p, l.gain(up, 0), l.self_gain, p_ap, l.noise_w[0])
    }

    pub fn pick_uniform(&mut self, v: &[usize]) -> Option<usize> {
        if v.is_empty() {
            None
        } else {
            Some(v[self.rng.gen_range(0..v.len())])
        }
    }

    pub fn demand_snapshot(&self, first_epoch: bool, declared: (&[f64], &[f64])) -> DemandSnapshot {
        let c = self.n_clients();
        let bits = self.cfg.frame_bits();
        let epoch_s = self.cfg.epoch_s();
        let (d, u) = if first_epoch {
            (declared.0.to_vec(), declared.1.to_vec())
        } else {
            (
                self.prev_arrivals.0.iter().map(|&a| a as f64 / epoch_s).collect(),
                self.prev_arrivals.1.iter().map(|&a| a as f64 / epoch_s).collect(),
            )
        };
        DemandSnapshot {
            lambda_d: d,
            lambda_u: u,
            l_d_bits: vec![bits; c + 1],
            l_u_bits: vec![bits; c + 1],
            epoch_s,
        }
    }

    fn spend(&mut self, cat: TimeCategory, ns: u64) {
        let rem = self.epoch_end_ns.saturating_sub(self.clock_ns);
        let here = ns.min(rem);
        self.cur.time.add(cat, here);
        self.carry.add(cat, ns - here);
        self.clock_ns += ns;
    }

    /// Runs every arrival interval boundary at or before `limit_ns`.
    fn process_arrivals(&mut self, limit_ns: u64) {
        while self.next_arrival_ns <= limit_ns {
            step_arrivals(&mut self.queues, &self.p_arr_d, &self.p_arr_u, &mut self.arrival_rng);
            self.next_arrival_ns += self.arrival_interval_ns;
        }
    }

    /// Arrivals since the last call, per client and direction.
    fn take_epoch_arrivals(&mut self) -> (Vec<u64>, Vec<u64>) {
        let now_d: Vec<u64> = self.queues.down.iter().map(|q| q.arrivals).collect();
        let now_u: Vec<u64> = self.queues.up.iter().map(|q| q.arrivals).collect();
        let d = now_d.iter().zip(&self.mark_d).map(|(a, b)| a - b).collect();
        let u = now_u.iter().zip(&self.mark_u).map(|(a, b)| a - b).collect();
        self.mark_d = now_d;
        self.mark_u = now_u;
        (d, u)
    }

    fn airtime_ns(&self, rate_idx: usize) -> u64 {
        let rate = self.cfg.rates.rates_mbps()[rate_idx];
        (self.cfg.frame_bits() * 1e3 / rate).round() as u64
    }

    /// Plays out one transmission: timing, success draws, queues and stats.
    pub(crate) fn execute(&mut self, tx: &Transmission) {
        let t = self.cfg.timing;
        let mut pre = t.difs_us + t.header_us;
        if tx.with_tone {
            pre += t.tone_us;
        }
        self.spend(TimeCategory::Overhead, us_to_ns(pre));
        self.spend(TimeCategory::Contention, us_to_ns(tx.contention_slots as f64 * t.slot_us));

        let uplink_collision = tx.ups.len() > 1;
        let ap_tx = tx.down.is_some();
        let live = self.live.as_ref().unwrap_or(&self.links);
        let rates = &self.cfg.rates;

        for u in &tx.ups {
            if u.power_w > self.p_max * (1.0 + 1e-12) {
                self.report.safety.power_violations += 1;
            }
        }

        let mut down_ok = false;
        if let Some(d) = tx.down {
            let i = d.client;
            let ici: f64 = tx.ups.iter().map(|u| u.power_w * live.gain(u.client, i)).sum();
            let sinr = self.p_max * live.gain(0, i) / (live.noise_w[i] + ici);
            let sinr_db = linear_to_db(sinr);
            if tx.power_controlled && tx.ups.len() == 1 && !tx.dcf_collision {
                let snr_db = linear_to_db(self.p_max * live.gain(0, i) / live.noise_w[i]);
                let margin = sinr_db - (snr_db - self.cfg.delta_db);
                let s = &mut self.report.safety;
                s.fd_checked += 1;
                if margin < -1e-9 {
                    s.violations += 1;
                }
                s.worst_margin_db = s.worst_margin_db.min(margin);
            }
            if tx.power_controlled && uplink_collision {
                let snr_db = linear_to_db(self.p_max * live.gain(0, i) / live.noise_w[i]);
                let s = &mut self.report.safety;
                s.collided_fd += 1;
                if sinr_db < snr_db - self.cfg.delta_db - 1e-9 {
                    s.collided_violations += 1;
                }
            }
            let pdr = rates.pdr_at(d.rate_idx, sinr_db);
            let draw: f64 = self.rng.gen();
            down_ok = !tx.dcf_collision && draw < pdr;
        }

        let mut up_ok = vec![false; tx.ups.len()];
        if tx.ups.len() == 1 && !tx.dcf_collision {
            let u = tx.ups[0];
            let p_ap = if ap_tx { self.p_max } else { 0.0 };
            let live = self.live.as_ref().unwrap_or(&self.links);
            let sinr = crate::channel::sinr_uplink(u.power_w, p_ap, live.gain(u.client, 0), live.self_gain, live.noise_w[0]);
            let pdr = self.cfg.rates.pdr_at(u.rate_idx, linear_to_db(sinr));
            let draw: f64 = self.rng.gen();
            up_ok[0] = draw < pdr;
        }

        let mut data_ns = 0;
        if let Some(d) = tx.down {
            data_ns = data_ns.max(self.airtime_ns(d.rate_idx));
        }
        for u in &tx.ups {
            data_ns = data_ns.max(self.airtime_ns(u.rate_idx));
        }
        let cat = if tx.dcf_collision || (uplink_collision && !ap_tx) {
            TimeCategory::Collision
        } else if ap_tx && tx.ups.len() == 1 {
            TimeCategory::FullDuplex
        } else if ap_tx {
            TimeCategory::HalfDuplexDown
        } else {
            TimeCategory::HalfDuplexUp
        };
        self.spend(cat, data_ns);
        self.spend(TimeCategory::Overhead, us_to_ns(t.sifs_us + t.ack_us));

        let bits = self.cfg.frame_bits() as u64;
        let retry = self.cfg.retry_limit;
        if let Some(d) = tx.down {
            let c = &mut self.report.clients[d.client];
            c.downlink_tx += 1;
            if down_ok {
                c.downlink_ok += 1;
                c.bits_down += bits;
                self.cur.bits_down += bits;
            }
            self.queues.down[d.client].head_sent(down_ok, retry);
        }
        for (u, ok) in tx.ups.iter().zip(&up_ok) {
            let c = &mut self.report.clients[u.client];
            c.uplink_tx += 1;
            if uplink_collision || tx.dcf_collision {
                c.uplink_collided += 1;
            }
            if *ok {
                c.uplink_ok += 1;
                c.bits_up += bits;
                self.cur.bits_up += bits;
            }
            self.queues.up[u.client].head_sent(*ok, retry);
        }

        self.cur.txops += 1;
        if tx.contended {
            self.cur.contended += 1;
        }
        let collided = tx.dcf_collision || uplink_collision;
        if collided {
            self.cur.collisions += 1;
            self.report.collided_txops += 1;
        } else {
            let key = PairKey {
                down: tx.down.map_or(0, |d| d.client),
                up: tx.ups.first().map_or(0, |u| u.client),
            };
            self.report.pairs.entry(key).or_default().realized += 1;
        }
        if cat == TimeCategory::FullDuplex {
            self.cur.fd_txops += 1;
        }
        if tx.fallback {
            self.report.fallback_txops += 1;
        }
    }

    /// Adds `p · txops` of the finished epoch to every pair's assigned count.
    pub fn credit_assigned(&mut self, table: &AccessTable) {
        let n = self.cur.txops as f64;
        for (k, p) in &table.p {
            self.report.pairs.entry(*k).or_default().assigned += p * n;
        }
    }
}

/// One replica: a topology, a channel, traffic and a scheme.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SimConfig,
    links: LinkState,
    lambda_d: Vec<f64>,
    lambda_u: Vec<f64>,
    fixed_table: Option<AccessTable>,
}

impl Simulation {
    /// Draws the topology, fading and per-client rates from `cfg.seed`.
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let topo = generate_topology(cfg.n_clients, cfg.area_side_m, cfg.seed)?;
        let mut fade = stream(cfg.seed, STREAM_FADING);
        let links = LinkState::realize(&topo, &cfg.path_loss, cfg.power.noise_w(), cfg.sic_db, &mut fade);
        let mut demand_rng = stream(cfg.seed, STREAM_DEMAND);
        let (lambda_d, lambda_u) = cfg.arrival_fps.draw(cfg.n_clients, &mut demand_rng);
        Ok(Self {
            cfg,
            links,
            lambda_d,
            lambda_u,
            fixed_table: None,
        })
    }

    /// Uses the given channel instead of drawing one.
    pub fn with_links(cfg: SimConfig, links: LinkState) -> Result<Self> {
        cfg.validate()?;
        if links.n_clients() != cfg.n_clients {
            return Err(crate::error::invalid("link state does not match n_clients"));
        }
        let mut demand_rng = stream(cfg.seed, STREAM_DEMAND);
        let (lambda_d, lambda_u) = cfg.arrival_fps.draw(cfg.n_clients, &mut demand_rng);
        Ok(Self {
            cfg,
            links,
            lambda_d,
            lambda_u,
            fixed_table: None,
        })
    }

    /// Replaces the per-client offered loads (frames/s, entry 0 unused).
    pub fn set_arrival_rates(&mut self, lambda_d: Vec<f64>, lambda_u: Vec<f64>) -> Result<()> {
        let n = self.cfg.n_clients + 1;
        if lambda_d.len() != n || lambda_u.len() != n || lambda_d.iter().chain(&lambda_u).any(|v| !(*v >= 0.0)) {
            return Err(crate::error::invalid("arrival rates must be non-negative, one per client"));
        }
        self.lambda_d = lambda_d;
        self.lambda_u = lambda_u;
        Ok(())
    }

    /// Runs the probabilistic access scheme with this table in every epoch
    /// instead of solving for one.
    pub fn with_fixed_table(mut self, table: AccessTable) -> Self {
        self.fixed_table = Some(table);
        self
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn links(&self) -> &LinkState {
        &self.links
    }

    pub fn arrival_rates(&self) -> (&[f64], &[f64]) {
        (&self.lambda_d, &self.lambda_u)
    }

    pub fn run(&self) -> Result<SimReport> {
        let cfg = &self.cfg;
        let mut w = World::new(cfg, self.links.clone(), &self.lambda_d, &self.lambda_u);
        let mut policy = match &self.fixed_table {
            Some(t) => Policy::fixed(t.clone()),
            None => Policy::new(cfg),
        };
        let epoch_ns = us_to_ns(cfg.epoch_ms * 1e3);
        for e in 0..cfg.epochs {
            w.epoch_end_ns = (e as u64 + 1) * epoch_ns;
            w.cur = EpochStats {
                time: std::mem::take(&mut w.carry),
                ..Default::default()
            };
            if e > 0 && cfg.fading == FadingMode::PerEpoch {
                w.links.redraw_fading(&mut w.fade_rng);
                w.links_version += 1;
            }
            let demand = w.demand_snapshot(e == 0, (&self.lambda_d, &self.lambda_u));
            policy.epoch_start(&mut w, &demand)?;

            while w.clock_ns < w.epoch_end_ns {
                w.process_arrivals(w.clock_ns);
                if w.queues.is_idle() {
                    let until = w.next_arrival_ns.min(w.epoch_end_ns).max(w.clock_ns + 1);
                    w.spend(TimeCategory::Idle, until - w.clock_ns);
                    continue;
                }
                if let Some(live) = w.live.as_mut() {
                    live.redraw_fading(&mut w.fade_rng);
                }
                let tx = policy.txop(&mut w);
                w.execute(&tx);
            }
            // Arrivals before the boundary belong to this epoch's demand.
            w.process_arrivals(w.epoch_end_ns - 1);
            w.prev_arrivals = w.take_epoch_arrivals();
            policy.epoch_end(&mut w);
            let done = std::mem::take(&mut w.cur);
            w.report.epochs.push(done);
        }
        for k in 1..=cfg.n_clients {
            let c = &mut w.report.clients[k];
            c.arrivals_down = w.queues.down[k].arrivals;
            c.arrivals_up = w.queues.up[k].arrivals;
            c.drops = w.queues.down[k].drops + w.queues.up[k].drops;
        }
        Ok(w.report)
    }
}

/// Draws everything from `cfg.seed` and runs the configured scheme.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimReport> {
    Simulation::new(cfg.clone())?.run()
}
