//! Backoff machinery: 802.11-style binary exponential backoff, the
//! probability-driven uplink backoff, and multi-AP tone contention.

use rand::Rng;

/// Persistent DCF backoff state for a set of stations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dcf {
    cw_min: u32,
    cw_max: u32,
    cw: Vec<u32>,
    counter: Vec<Option<u32>>,
}

/// Result of one DCF round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DcfRound {
    /// Idle slots before the first transmission.
    pub slots: u32,
    /// Stations whose counter expired first; more than one is a collision.
    pub winners: Vec<usize>,
}

impl Dcf {
    pub fn new(stations: usize, cw_min: u32, cw_max: u32) -> Self {
        Self {
            cw_min,
            cw_max,
            cw: vec![cw_min; stations],
            counter: vec![None; stations],
        }
    }

    pub fn cw(&self, station: usize) -> u32 {
        self.cw[station]
    }

    /// Counts down among `active` stations. Stations without a pending
    /// counter draw one from `[0, cw − 1]`; the others resume theirs.
    pub fn contend<R: Rng + ?Sized>(&mut self, active: &[usize], rng: &mut R) -> Option<DcfRound> {
        if active.is_empty() {
            return None;
        }
        for &s in active {
            if self.counter[s].is_none() {
                self.counter[s] = Some(rng.gen_range(0..self.cw[s]));
            }
        }
        let slots = active.iter().map(|&s| self.counter[s].unwrap()).min().unwrap();
        let mut winners = Vec::new();
        for &s in active {
            let c = self.counter[s].as_mut().unwrap();
            *c -= slots;
            if *c == 0 {
                winners.push(s);
            }
        }
        Some(DcfRound { slots, winners })
    }

    /// Applies the outcome of a round: a lone winner resets its window, every
    /// station in a collision doubles it.
    pub fn finish(&mut self, round: &DcfRound) {
        let collided = round.winners.len() > 1;
        for &s in &round.winners {
            self.cw[s] = if collided {
                (self.cw[s].saturating_mul(2)).min(self.cw_max)
            } else {
                self.cw_min
            };
            self.counter[s] = None;
        }
    }
}

/// Outcome of the probability-driven uplink backoff for one downlink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UplinkContest {
    /// Nobody contended (the virtual client's timer expired first or no
    /// client was eligible).
    NoUplink { slots: u32 },
    Winner { client: usize, slots: u32 },
    Collision { clients: Vec<usize>, slots: u32 },
}

impl UplinkContest {
    pub fn slots(&self) -> u32 {
        match self {
            UplinkContest::NoUplink { slots }
            | UplinkContest::Winner { slots, .. }
            | UplinkContest::Collision { slots, .. } => *slots,
        }
    }
}

/// Each candidate `(client, cw)` draws a backoff uniform on `[1, cw]` and
/// contends if it is not larger than the virtual client's draw `w0` (drawn
/// from `[1, virtual_cw]`, infinite when absent). The unique smallest
/// backoff wins; equal smallest backoffs collide. `idle_wait` is charged
/// when nobody contends and there is no virtual timer.
pub fn uplink_contest<R: Rng + ?Sized>(
    candidates: &[(usize, u32)],
    virtual_cw: Option<u32>,
    idle_wait: u32,
    rng: &mut R,
) -> UplinkContest {
    let w0 = virtual_cw.map(|cw| rng.gen_range(1..=cw.max(1)));
    let mut best = u32::MAX;
    let mut at_best: Vec<usize> = Vec::new();
    for &(client, cw) in candidates {
        let w = rng.gen_range(1..=cw.max(1));
        if w0.is_some_and(|w0| w > w0) {
            continue;
        }
        if w < best {
            best = w;
            at_best.clear();
            at_best.push(client);
        } else if w == best {
            at_best.push(client);
        }
    }
    match at_best.len() {
        0 => UplinkContest::NoUplink {
            slots: w0.unwrap_or(idle_wait),
        },
        1 => UplinkContest::Winner {
            client: at_best[0],
            slots: best,
        },
        _ => UplinkContest::Collision {
            clients: at_best,
            slots: best,
        },
    }
}

/// Tone contention among access points: each picks a sub-channel uniformly
/// and the unique lowest pick wins; equal lowest picks retry. Returns the
/// winner and the number of rounds used.
pub fn tone_contention<R: Rng + ?Sized>(n_aps: usize, n_subchannels: u32, rng: &mut R) -> Option<(usize, u32)> {
    if n_aps == 0 || n_subchannels == 0 {
        return None;
    }
    if n_aps == 1 {
        return Some((0, 1));
    }
    let mut rounds = 0;
    let mut alive: Vec<usize> = (0..n_aps).collect();
    loop {
        rounds += 1;
        let picks: Vec<u32> = alive.iter().map(|_| rng.gen_range(0..n_subchannels)).collect();
        let low = *picks.iter().min().unwrap();
        let lowest: Vec<usize> = alive.iter().zip(&picks).filter(|(_, &p)| p == low).map(|(&a, _)| a).collect();
        if lowest.len() == 1 {
            return Some((lowest[0], rounds));
        }
        alive = lowest;
    }
}
