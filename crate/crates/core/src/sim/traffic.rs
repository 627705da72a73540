//! FTP-style file traffic feeding the source queues.

use std::collections::VecDeque;

use rand::Rng;

use crate::config::{TrafficConfig, TrafficModel};
use crate::scheduler::QueueState;

/// Probability that an exponential timer with mean `mean_s` fires within
/// one slot.
pub fn per_slot_probability(mean_s: f64, slot_s: f64) -> f64 {
    -(-slot_s / mean_s).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Dl,
    Ul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub ue: usize,
    pub direction: Direction,
    pub bits: u64,
}

/// One UE's request process in one direction.
#[derive(Debug, Clone, Default)]
struct FlowSource {
    /// `(end offset in the flow's byte stream, arrival slot)` of every
    /// file not yet fully delivered.
    files: VecDeque<(u64, u64)>,
    arrived: u64,
    delivered: u64,
}

#[derive(Debug, Clone)]
pub struct TrafficState {
    cfg: TrafficConfig,
    slot_s: f64,
    p_request: f64,
    dl: Vec<FlowSource>,
    ul: Vec<FlowSource>,
}

impl TrafficState {
    pub fn new(cfg: TrafficConfig, n_ues: usize, slot_s: f64) -> Self {
        let mean = match cfg.model {
            TrafficModel::FtpPoisson => cfg.mean_interarrival_s,
            _ => cfg.mean_reading_time_s,
        };
        Self {
            cfg,
            slot_s,
            p_request: per_slot_probability(mean, slot_s),
            dl: vec![FlowSource::default(); n_ues],
            ul: vec![FlowSource::default(); n_ues],
        }
    }

    fn file_bits(&self, dir: Direction) -> u64 {
        8 * match dir {
            Direction::Dl => self.cfg.dl_file_bytes,
            Direction::Ul => self.cfg.ul_file_bytes,
        }
    }

    fn source_mut(&mut self, dir: Direction, ue: usize) -> &mut FlowSource {
        match dir {
            Direction::Dl => &mut self.dl[ue],
            Direction::Ul => &mut self.ul[ue],
        }
    }

    fn enqueue(&mut self, dir: Direction, ue: usize, slot: u64, queues: &mut QueueState, out: &mut Vec<Arrival>) {
        let bits = self.file_bits(dir);
        let src = self.source_mut(dir, ue);
        src.arrived += bits;
        src.files.push_back((src.arrived, slot));
        match dir {
            Direction::Dl => queues.dl_macro[ue] += bits,
            Direction::Ul => queues.ul_ue[ue] += bits,
        }
        out.push(Arrival { ue, direction: dir, bits });
    }

    /// New file arrivals of `slot`, already added to the source queues
    /// (macro BS for downlink, UE for uplink).
    ///
    /// The FTP models draw one uniform per flow every slot whatever the
    /// queue state, so runs that differ only in scheduling see the same
    /// random stream.
    pub fn generate_arrivals(&mut self, rng: &mut impl Rng, slot: u64, queues: &mut QueueState) -> Vec<Arrival> {
        let mut out = Vec::new();
        if !self.cfg.enabled {
            return out;
        }
        let n = self.dl.len();
        for dir in [Direction::Dl, Direction::Ul] {
            for ue in 0..n {
                match self.cfg.model {
                    TrafficModel::FullBuffer => {
                        let target = self.cfg.full_buffer_files * self.file_bits(dir);
                        loop {
                            let q = match dir {
                                Direction::Dl => queues.dl_macro[ue],
                                Direction::Ul => queues.ul_ue[ue],
                            };
                            if q >= target {
                                break;
                            }
                            self.enqueue(dir, ue, slot, queues, &mut out);
                        }
                    }
                    TrafficModel::Ftp => {
                        let fire = rng.random::<f64>() < self.p_request;
                        let reading = match dir {
                            Direction::Dl => self.dl[ue].files.is_empty(),
                            Direction::Ul => self.ul[ue].files.is_empty(),
                        };
                        if fire && reading {
                            self.enqueue(dir, ue, slot, queues, &mut out);
                        }
                    }
                    TrafficModel::FtpPoisson => {
                        if rng.random::<f64>() < self.p_request {
                            self.enqueue(dir, ue, slot, queues, &mut out);
                        }
                    }
                }
            }
        }
        out
    }

    /// Accounts `bits` delivered to the final destination during `slot` and
    /// returns the latency of every file it completed, in seconds.
    pub fn record_delivery(&mut self, dir: Direction, ue: usize, bits: u64, slot: u64) -> Vec<f64> {
        let slot_s = self.slot_s;
        let src = self.source_mut(dir, ue);
        src.delivered += bits;
        let mut done = Vec::new();
        while let Some(&(end, start)) = src.files.front() {
            if end > src.delivered {
                break;
            }
            src.files.pop_front();
            done.push((slot + 1 - start) as f64 * slot_s);
        }
        done
    }

    /// Files requested but not yet completed in direction `dir`.
    pub fn outstanding(&self, dir: Direction) -> usize {
        match dir {
            Direction::Dl => self.dl.iter().map(|s| s.files.len()).sum(),
            Direction::Ul => self.ul.iter().map(|s| s.files.len()).sum(),
        }
    }
}
