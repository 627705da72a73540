//! Back-pressure schedule selection over the FD and HD transmission modes.
//!
//! Each slot every link gets the largest backlog differential of the flows
//! crossing it as its weight, and the scheduler picks the mode maximizing
//! `sum_l W_l R_l`. For the FD modes the search is two-stage: transmit
//! powers solved once per channel with equal link weights rank the
//! candidates of each FD family, then only the family winners are
//! re-solved with the actual weights. The four FD winners are compared with
//! the best HD schedule at maximum power.

mod queues;

pub use queues::{link_weight, LinkWeight, QueueState};

use std::fmt::Write as _;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelState;
use crate::config::{SchedulerVariant, SimConfig, SolverConfig};
use crate::power::{solve_sp, LinkParams, PowerProblem, SolveOptions};
use crate::radio::{spectral_efficiency, Link, LinkRate, LinkRates, ModeFamily, PowerVector, TransmissionMode, SPECTRAL_EFFICIENCY_CAP};

/// Every schedule of a cell with `n_ues` UEs.
pub fn enumerate_schedules(n_ues: usize) -> Vec<TransmissionMode> {
    TransmissionMode::enumerate(n_ues)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    pub variant: SchedulerVariant,
    /// Power-optimize every FD schedule instead of only the family winners.
    pub exact: bool,
    pub solver: SolverConfig,
    pub bandwidth_hz: f64,
    pub slot_s: f64,
}

impl SchedulerConfig {
    pub fn from_sim(cfg: &SimConfig, variant: SchedulerVariant) -> Self {
        Self { variant, exact: cfg.run.exact, solver: cfg.solver, bandwidth_hz: cfg.bandwidth_hz, slot_s: cfg.slot_s }
    }

    fn se_cap(&self) -> Option<f64> {
        self.solver.cap_aware.then_some(SPECTRAL_EFFICIENCY_CAP)
    }

    fn solve_options(&self, init: Option<[f64; 2]>) -> SolveOptions {
        SolveOptions {
            epsilon: self.solver.epsilon,
            max_iters: self.solver.max_iters,
            init,
            multi_start: self.solver.multi_start,
            ..SolveOptions::default()
        }
    }

    fn bits(&self, sinr: f64) -> f64 {
        spectral_efficiency(sinr) * self.bandwidth_hz * self.slot_s
    }
}

#[derive(Debug, Clone, PartialEq)]
struct FdEntry {
    mode: TransmissionMode,
    links: [LinkParams; 2],
    powers: [f64; 2],
    rates: [f64; 2],
    /// Rates with both transmitters at maximum power.
    max_rates: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
struct HdEntry {
    mode: TransmissionMode,
    link: Link,
    sinr: f64,
    rate: f64,
}

/// Equal-weight FD powers and max-power HD rates for one channel
/// realization. Rebuilt only when the channel or configuration changes.
#[derive(Debug, Clone, Default)]
pub struct PowerCache {
    key: Option<(ChannelState, SchedulerConfig)>,
    fd: [Vec<FdEntry>; 4],
    hd: Vec<HdEntry>,
    solves: usize,
}

impl PowerCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Power solves performed so far.
    pub fn solves(&self) -> usize {
        self.solves
    }

    /// Fills the cache for `channel`. Returns false on a cache hit.
    pub fn precompute_equal_weight_powers(&mut self, channel: &ChannelState, cfg: &SchedulerConfig) -> bool {
        if let Some((c, k)) = &self.key {
            if c == channel && k == cfg {
                return false;
            }
        }
        for f in &mut self.fd {
            f.clear();
        }
        self.hd.clear();
        let maxp = PowerVector::max(channel);
        for mode in enumerate_schedules(channel.n_ues()) {
            let family = mode.family();
            if family == ModeFamily::Hd {
                let link = mode.links()[0];
                let s = maxp.of(link.tx()) * channel.gain(link.tx(), link.rx()) / channel.noise_w(link.rx());
                self.hd.push(HdEntry { mode, link, sinr: s, rate: cfg.bits(s) });
                continue;
            }
            if cfg.variant == SchedulerVariant::Hd {
                continue;
            }
            let links = PowerProblem::link_params(mode, channel, [1.0, 1.0]).expect("FD mode has two links");
            let problem = PowerProblem { mode, links, se_cap: cfg.se_cap() };
            let powers = match cfg.variant {
                SchedulerVariant::FdPa => {
                    self.solves += 1;
                    solve_sp(&problem, &cfg.solve_options(None)).p
                }
                _ => problem.max_powers(),
            };
            let s = problem.sinrs(powers);
            let sm = problem.sinrs(problem.max_powers());
            let entry = FdEntry {
                mode,
                links,
                powers,
                rates: [cfg.bits(s[0]), cfg.bits(s[1])],
                max_rates: [cfg.bits(sm[0]), cfg.bits(sm[1])],
            };
            self.fd[fd_slot(family)].push(entry);
        }
        self.key = Some((channel.clone(), *cfg));
        true
    }

    /// Cached equal-weight powers of an FD `mode`.
    pub fn equal_weight_powers(&self, mode: TransmissionMode) -> Option<PowerVector> {
        if !mode.is_full_duplex() {
            return None;
        }
        let e = self.fd[fd_slot(mode.family())].iter().find(|e| e.mode == mode)?;
        let mut v = PowerVector::default();
        for (l, &p) in mode.links().iter().zip(&e.powers) {
            v.set(l.tx(), p);
        }
        Some(v)
    }
}

fn fd_slot(f: ModeFamily) -> usize {
    match f {
        ModeFamily::Fdd => 0,
        ModeFamily::Fdu => 1,
        ModeFamily::Fdb => 2,
        ModeFamily::Fda => 3,
        ModeFamily::Hd => unreachable!("HD has no FD slot"),
    }
}

/// Link weights of one slot.
#[derive(Debug, Clone)]
struct SlotWeights {
    bdl: LinkWeight,
    bul: LinkWeight,
    adl: Vec<LinkWeight>,
    aul: Vec<LinkWeight>,
}

impl SlotWeights {
    fn new(q: &QueueState) -> Self {
        let n = q.n_ues();
        Self {
            bdl: q.link_weight(Link::BackhaulDl),
            bul: q.link_weight(Link::BackhaulUl),
            adl: (0..n).map(|d| q.link_weight(Link::AccessDl(d))).collect(),
            aul: (0..n).map(|u| q.link_weight(Link::AccessUl(u))).collect(),
        }
    }

    fn of(&self, link: Link) -> LinkWeight {
        match link {
            Link::BackhaulDl => self.bdl,
            Link::BackhaulUl => self.bul,
            Link::AccessDl(d) => self.adl[d],
            Link::AccessUl(u) => self.aul[u],
        }
    }

    fn all_zero(&self) -> bool {
        self.bdl.weight == 0
            && self.bul.weight == 0
            && self.adl.iter().all(|w| w.weight == 0)
            && self.aul.iter().all(|w| w.weight == 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledLink {
    pub link: Link,
    pub flow: usize,
    pub weight: u64,
    pub power_w: f64,
    pub rate: LinkRate,
}

/// Outcome of one scheduling step. `mode` is `None` for an idle slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleDecision {
    pub mode: Option<TransmissionMode>,
    pub powers: PowerVector,
    pub links: ArrayVec<ScheduledLink, 2>,
    /// `sum_l W_l R_l` with `R_l` in bits per slot.
    pub weighted_value: f64,
}

pub const DECISION_CSV_HEADER: &str = "slot,mode,flow_dl,flow_ul,p_macro,p_small,p_ue,rate_link1,rate_link2,weighted_value";

impl ScheduleDecision {
    pub fn idle() -> Self {
        Self { mode: None, powers: PowerVector::default(), links: ArrayVec::new(), weighted_value: 0.0 }
    }

    pub fn is_idle(&self) -> bool {
        self.mode.is_none()
    }

    pub fn family(&self) -> Option<ModeFamily> {
        self.mode.map(TransmissionMode::family)
    }

    pub fn rates(&self) -> LinkRates {
        LinkRates { links: self.links.iter().map(|l| l.rate).collect() }
    }

    fn build(mode: TransmissionMode, powers: [f64; 2], sinrs: &[f64], w: &SlotWeights, cfg: &SchedulerConfig) -> Self {
        let mut pv = PowerVector::default();
        let mut links = ArrayVec::new();
        let mut value = 0.0;
        for (i, link) in mode.links().into_iter().enumerate() {
            let lw = w.of(link);
            let se = spectral_efficiency(sinrs[i]);
            let rate = LinkRate { link, sinr: sinrs[i], spectral_efficiency: se, rate_bits: se * cfg.bandwidth_hz * cfg.slot_s };
            pv.set(link.tx(), powers[i]);
            value += lw.weight as f64 * rate.rate_bits;
            links.push(ScheduledLink { link, flow: lw.flow, weight: lw.weight, power_w: powers[i], rate });
        }
        Self { mode: Some(mode), powers: pv, links, weighted_value: value }
    }

    /// One row of the decision log, without a trailing newline.
    pub fn csv_row(&self, slot: u64) -> String {
        let Some(mode) = self.mode else {
            return format!("{slot},idle,,,0,0,0,0,0,0");
        };
        let flows = |dl: bool| {
            self.links
                .iter()
                .filter(|l| matches!(l.link, Link::BackhaulDl | Link::AccessDl(_)) == dl)
                .map(|l| l.flow.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        let rate = |i: usize| self.links.get(i).map_or(0.0, |l| l.rate.rate_bits);
        let mut s = String::new();
        let _ = write!(
            s,
            "{slot},{mode},{},{},{:.6e},{:.6e},{:.6e},{:.1},{:.1},{:.6e}",
            flows(true),
            flows(false),
            self.powers.macro_w,
            self.powers.small_w,
            self.powers.ue_w,
            rate(0),
            rate(1),
            self.weighted_value
        );
        s
    }
}

fn weighted(weights: [u64; 2], rates: [f64; 2]) -> f64 {
    weights[0] as f64 * rates[0] + weights[1] as f64 * rates[1]
}

/// Power-optimized decision for one FD entry under the actual weights, or
/// `None` when the optimum switches a link off (the HD candidate covers
/// that case at least as well).
fn optimize_entry(e: &FdEntry, ww: [u64; 2], w: &SlotWeights, cfg: &SchedulerConfig) -> Option<ScheduleDecision> {
    let powers = match cfg.variant {
        SchedulerVariant::FdPa => {
            let mut links = e.links;
            links[0].weight = ww[0] as f64;
            links[1].weight = ww[1] as f64;
            let problem = PowerProblem { mode: e.mode, links, se_cap: cfg.se_cap() };
            let p = solve_sp(&problem, &cfg.solve_options(Some(e.powers))).p;
            // The cached point is feasible too.
            if weighted(ww, problem.sinrs(e.powers).map(|s| cfg.bits(s))) > weighted(ww, problem.sinrs(p).map(|s| cfg.bits(s))) {
                e.powers
            } else {
                p
            }
        }
        _ => e.powers,
    };
    if powers[0] <= 0.0 || powers[1] <= 0.0 {
        return None;
    }
    let links = e.links;
    let sinrs = [links[0].sinr(powers[0], powers[1]), links[1].sinr(powers[1], powers[0])];
    Some(ScheduleDecision::build(e.mode, powers, &sinrs, w, cfg))
}

/// Max-weight schedule for the current backlogs.
pub fn select_schedule(queues: &QueueState, channel: &ChannelState, cache: &mut PowerCache, cfg: &SchedulerConfig) -> ScheduleDecision {
    cache.precompute_equal_weight_powers(channel, cfg);
    let w = SlotWeights::new(queues);
    if w.all_zero() {
        return ScheduleDecision::idle();
    }
    let mut best = ScheduleDecision::idle();
    let mut solves = 0;
    let consider = |d: ScheduleDecision, best: &mut ScheduleDecision| {
        if d.weighted_value > best.weighted_value {
            *best = d;
        }
    };
    for family in &cache.fd {
        let weights_of = |e: &FdEntry| {
            let l = e.mode.links();
            [w.of(l[0]).weight, w.of(l[1]).weight]
        };
        if cfg.exact && cfg.variant == SchedulerVariant::FdPa {
            let mut fam_best = ScheduleDecision::idle();
            for e in family {
                let ww = weights_of(e);
                if ww[0] == 0 || ww[1] == 0 {
                    continue;
                }
                solves += 1;
                if let Some(d) = optimize_entry(e, ww, &w, cfg) {
                    consider(d, &mut fam_best);
                }
            }
            if !fam_best.is_idle() {
                consider(fam_best, &mut best);
            }
            continue;
        }
        if cfg.variant == SchedulerVariant::FdPa {
            // Whatever the fixed-power scheduler would pick stays available.
            let fixed = family
                .iter()
                .map(|e| (e, weighted(weights_of(e), e.max_rates)))
                .fold(None, |acc: Option<(&FdEntry, f64)>, x| if x.1 > acc.map_or(0.0, |a| a.1) { Some(x) } else { acc });
            if let Some((e, _)) = fixed {
                let ww = weights_of(e);
                if ww[0] > 0 && ww[1] > 0 {
                    let p = [e.links[0].max_power, e.links[1].max_power];
                    let sinrs = [e.links[0].sinr(p[0], p[1]), e.links[1].sinr(p[1], p[0])];
                    consider(ScheduleDecision::build(e.mode, p, &sinrs, &w, cfg), &mut best);
                }
            }
        }
        let mut winner: Option<(&FdEntry, [u64; 2], f64)> = None;
        for e in family {
            let ww = weights_of(e);
            let v = weighted(ww, e.rates);
            if v > winner.map_or(0.0, |x| x.2) {
                winner = Some((e, ww, v));
            }
        }
        let Some((e, ww, _)) = winner else { continue };
        if ww[0] == 0 || ww[1] == 0 {
            continue;
        }
        if cfg.variant == SchedulerVariant::FdPa {
            solves += 1;
        }
        if let Some(d) = optimize_entry(e, ww, &w, cfg) {
            consider(d, &mut best);
        }
    }
    let mut hd_best: Option<(&HdEntry, f64)> = None;
    for e in &cache.hd {
        let v = w.of(e.link).weight as f64 * e.rate;
        if v > hd_best.map_or(0.0, |x| x.1) {
            hd_best = Some((e, v));
        }
    }
    if let Some((e, _)) = hd_best {
        let d = ScheduleDecision::build(e.mode, [channel.max_power_w(e.link.tx()), 0.0], &[e.sinr], &w, cfg);
        consider(d, &mut best);
    }
    cache.solves += solves;
    best
}

/// Bits moved over one link in a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServedLink {
    pub link: Link,
    pub flow: usize,
    pub bits: u64,
    /// True when the bits reached the flow's final destination.
    pub delivered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Served {
    pub links: ArrayVec<ServedLink, 2>,
}

impl Served {
    pub fn delivered_dl(&self) -> u64 {
        self.links.iter().filter(|l| l.delivered && matches!(l.link, Link::AccessDl(_))).map(|l| l.bits).sum()
    }

    pub fn delivered_ul(&self) -> u64 {
        self.links.iter().filter(|l| l.delivered && l.link == Link::BackhaulUl).map(|l| l.bits).sum()
    }
}

/// Serves each active link `min(floor(rate), backlog)` bits of its flow,
/// with backlogs taken at the start of the slot: bits relayed into the
/// small BS are not forwarded again within the same slot.
pub fn apply_schedule(queues: &mut QueueState, decision: &ScheduleDecision) -> Served {
    let amounts: ArrayVec<u64, 2> = decision
        .links
        .iter()
        .map(|l| (l.rate.rate_bits.floor() as u64).min(queues.source_backlog(l.link, l.flow)))
        .collect();
    let mut served = Served::default();
    for (l, &bits) in decision.links.iter().zip(&amounts) {
        let delivered = queues.transfer(l.link, l.flow, bits);
        served.links.push(ServedLink { link: l.link, flow: l.flow, bits, delivered });
    }
    served
}
