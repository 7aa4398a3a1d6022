use rand::Rng;

/// One FIFO of identical frames. Only the head frame's retry count matters,
/// so the queue is kept as counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Fifo {
    pub len: u64,
    pub head_retries: u32,
    pub arrivals: u64,
    pub departures: u64,
    pub drops: u64,
}

impl Fifo {
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self) {
        self.len += 1;
        self.arrivals += 1;
    }

    /// Records the outcome of sending the head frame.
    pub fn head_sent(&mut self, delivered: bool, retry_limit: Option<u32>) {
        if self.len == 0 {
            return;
        }
        if delivered {
            self.len -= 1;
            self.departures += 1;
            self.head_retries = 0;
            return;
        }
        self.head_retries += 1;
        if retry_limit.is_some_and(|r| self.head_retries > r) {
            self.len -= 1;
            self.drops += 1;
            self.head_retries = 0;
        }
    }
}

/// Downlink queues at the AP and uplink queues at the clients, indexed by
/// client id (entry 0 unused).
#[derive(Debug, Clone, PartialEq)]
pub struct QueueState {
    pub down: Vec<Fifo>,
    pub up: Vec<Fifo>,
}

impl QueueState {
    pub fn new(n_clients: usize) -> Self {
        Self {
            down: vec![Fifo::default(); n_clients + 1],
            up: vec![Fifo::default(); n_clients + 1],
        }
    }

    pub fn n_clients(&self) -> usize {
        self.down.len() - 1
    }

    pub fn any_down(&self) -> bool {
        self.down[1..].iter().any(|q| !q.is_empty())
    }

    pub fn any_up(&self) -> bool {
        self.up[1..].iter().any(|q| !q.is_empty())
    }

    pub fn is_idle(&self) -> bool {
        !self.any_down() && !self.any_up()
    }

    pub fn nonempty_down(&self) -> impl Iterator<Item = usize> + '_ {
        (1..self.down.len()).filter(|&k| !self.down[k].is_empty())
    }

    pub fn nonempty_up(&self) -> impl Iterator<Item = usize> + '_ {
        (1..self.up.len()).filter(|&k| !self.up[k].is_empty())
    }
}

/// Per-interval arrival probabilities `λ·interval`, clamped to `[0, 1]`.
pub fn arrival_probabilities(lambda: &[f64], interval_s: f64) -> Vec<f64> {
    lambda.iter().map(|l| (l * interval_s).clamp(0.0, 1.0)).collect()
}

/// One arrival interval: each client direction enqueues a frame with its
/// probability. Returns the number of frames added.
pub fn step_arrivals<R: Rng + ?Sized>(queues: &mut QueueState, p_d: &[f64], p_u: &[f64], rng: &mut R) -> u64 {
    let mut added = 0;
    for k in 1..queues.down.len() {
        for (q, p) in [(&mut queues.down[k], p_d[k]), (&mut queues.up[k], p_u[k])] {
            let hit = if p >= 1.0 {
                true
            } else if p <= 0.0 {
                false
            } else {
                rng.gen::<f64>() < p
            };
            if hit {
                q.push();
                added += 1;
            }
        }
    }
    added
}
