use serde::{Deserialize, Serialize};

use crate::radio::Link;

/// Per-UE flow backlogs in bits. A downlink flow crosses macro -> small ->
/// UE, an uplink flow UE -> small -> macro; the final hop's destination
/// holds no queue.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QueueState {
    pub dl_macro: Vec<u64>,
    pub dl_small: Vec<u64>,
    pub ul_ue: Vec<u64>,
    pub ul_small: Vec<u64>,
}

/// Back-pressure weight of a link and the flow that attains it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkWeight {
    pub weight: u64,
    pub flow: usize,
}

impl QueueState {
    pub fn new(n_ues: usize) -> Self {
        Self { dl_macro: vec![0; n_ues], dl_small: vec![0; n_ues], ul_ue: vec![0; n_ues], ul_small: vec![0; n_ues] }
    }

    pub fn n_ues(&self) -> usize {
        self.dl_macro.len()
    }

    pub fn total(&self) -> u64 {
        [&self.dl_macro, &self.dl_small, &self.ul_ue, &self.ul_small].iter().flat_map(|v| v.iter()).sum()
    }

    pub fn total_dl(&self) -> u64 {
        self.dl_macro.iter().chain(&self.dl_small).sum()
    }

    pub fn total_ul(&self) -> u64 {
        self.ul_ue.iter().chain(&self.ul_small).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Backlog of `flow` at the transmitter of `link`.
    pub fn source_backlog(&self, link: Link, flow: usize) -> u64 {
        match link {
            Link::BackhaulDl => self.dl_macro[flow],
            Link::AccessDl(_) => self.dl_small[flow],
            Link::AccessUl(_) => self.ul_ue[flow],
            Link::BackhaulUl => self.ul_small[flow],
        }
    }

    /// Maximum backlog differential over the flows crossing `link`, clamped
    /// at zero. Ties go to the lowest UE index.
    pub fn link_weight(&self, link: Link) -> LinkWeight {
        match link {
            Link::BackhaulDl => argmax((0..self.n_ues()).map(|n| self.dl_macro[n].saturating_sub(self.dl_small[n]))),
            Link::BackhaulUl => argmax(self.ul_small.iter().copied()),
            Link::AccessDl(d) => LinkWeight { weight: self.dl_small[d], flow: d },
            Link::AccessUl(u) => LinkWeight { weight: self.ul_ue[u].saturating_sub(self.ul_small[u]), flow: u },
        }
    }

    /// Moves `bits` of `flow` across `link`. Returns true when the bits
    /// reached the flow's final destination.
    pub(crate) fn transfer(&mut self, link: Link, flow: usize, bits: u64) -> bool {
        match link {
            Link::BackhaulDl => {
                self.dl_macro[flow] -= bits;
                self.dl_small[flow] += bits;
                false
            }
            Link::AccessDl(_) => {
                self.dl_small[flow] -= bits;
                true
            }
            Link::AccessUl(_) => {
                self.ul_ue[flow] -= bits;
                self.ul_small[flow] += bits;
                false
            }
            Link::BackhaulUl => {
                self.ul_small[flow] -= bits;
                true
            }
        }
    }
}

pub fn link_weight(queues: &QueueState, link: Link) -> LinkWeight {
    queues.link_weight(link)
}

fn argmax(values: impl Iterator<Item = u64>) -> LinkWeight {
    let mut best = LinkWeight { weight: 0, flow: 0 };
    for (n, v) in values.enumerate() {
        if v > best.weight {
            best = LinkWeight { weight: v, flow: n };
        }
    }
    best
}
