//! Slotted Monte Carlo driver.
//!
//! For each backhaul bin and drop: place nodes, draw the channel, then per
//! slot generate arrivals, select and apply a schedule, and record what
//! reached its final destination. Topology, channel, fading and traffic use
//! separate random streams keyed by `(seed, drop)`, so every variant and
//! every backhaul bin sees the same UE layout and the same arrival draws.

mod metrics;
mod traffic;

pub use metrics::{
    gain_pct, mode_usage_csv, queues_csv, report, summarize, throughput_csv, trend_test, Estimate, Metrics, Report, Summary,
    TrendTest, THROUGHPUT_CSV_HEADER,
};
pub use traffic::{per_slot_probability, Arrival, Direction, TrafficState};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{realize_channel, ChannelState};
use crate::config::{SchedulerVariant, SimConfig};
use crate::error::Result;
use crate::radio::{Link, ModeFamily};
use crate::scheduler::{apply_schedule, select_schedule, PowerCache, QueueState, ScheduleDecision, SchedulerConfig, DECISION_CSV_HEADER};
use crate::topology::{drop_topology, Node, Placement};
use crate::units::linear_to_db;

const STREAM_TOPOLOGY: u64 = 1;
const STREAM_CHANNEL: u64 = 2;
const STREAM_TRAFFIC: u64 = 3;
const STREAM_FADING: u64 = 4;

/// Seed of one random stream of one drop.
pub fn stream_seed(seed: u64, drop: usize, stream: u64) -> u64 {
    // splitmix64 finalizer over the packed key
    let mut z = seed
        .wrapping_add((drop as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Large-scale channel of a drop.
pub fn drop_channel(cfg: &SimConfig, placement: Placement, drop: usize) -> Result<ChannelState> {
    let topo = drop_topology(stream_seed(cfg.seed, drop, STREAM_TOPOLOGY), cfg.n_ues, cfg, placement)?;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, drop, STREAM_CHANNEL));
    Ok(realize_channel(&topo, &mut rng, cfg))
}

/// Result of one drop, plus its decision log when requested.
#[derive(Debug, Clone)]
pub struct DropRun {
    pub metrics: Metrics,
    pub decisions_csv: Option<String>,
}

/// Observes every slot of a run; used by tests to check per-slot
/// invariants.
pub trait SlotObserver {
    fn observe(&mut self, slot: u64, before: &QueueState, decision: &ScheduleDecision, after: &QueueState, arrived: u64);
}

impl SlotObserver for () {
    fn observe(&mut self, _: u64, _: &QueueState, _: &ScheduleDecision, _: &QueueState, _: u64) {}
}

pub fn run_drop(cfg: &SimConfig, placement: Placement, drop: usize, variant: SchedulerVariant, log_decisions: bool) -> Result<DropRun> {
    run_drop_observed(cfg, placement, drop, variant, log_decisions, &mut ())
}

pub fn run_drop_observed(
    cfg: &SimConfig,
    placement: Placement,
    drop: usize,
    variant: SchedulerVariant,
    log_decisions: bool,
    observer: &mut impl SlotObserver,
) -> Result<DropRun> {
    cfg.validate()?;
    let base = drop_channel(cfg, placement, drop)?;
    let mut fade_rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, drop, STREAM_FADING));
    let mut traffic_rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, drop, STREAM_TRAFFIC));
    let scfg = SchedulerConfig::from_sim(cfg, variant);
    let n = cfg.n_ues;
    let n_slots = cfg.n_slots();
    let warmup = cfg.warmup_slots();
    let mut channel = base.clone();
    let mut cache = PowerCache::new();
    let mut queues = QueueState::new(n);
    let mut traffic = TrafficState::new(cfg.traffic, n, cfg.slot_s);
    let mut m = Metrics {
        placement,
        drop,
        variant,
        backhaul_loss_db: -linear_to_db(base.gain(Node::MacroBs, Node::SmallBs)),
        slots: n_slots - warmup,
        duration_s: (n_slots - warmup) as f64 * cfg.slot_s,
        served_dl_bits: 0,
        served_ul_bits: 0,
        delivered_bits: 0,
        mode_slots: [0; 5],
        idle_slots: 0,
        per_ue_dl_bits: vec![0; n],
        per_ue_ul_bits: vec![0; n],
        backlog: Vec::new(),
        latencies_dl_s: Vec::new(),
        latencies_ul_s: Vec::new(),
        arrived_bits: 0,
        final_backlog_bits: 0,
        power_solves: 0,
    };
    let mut log = log_decisions.then(|| format!("{DECISION_CSV_HEADER}\n"));
    let sample = cfg.run.queue_sample_slots.max(1);
    for slot in 0..n_slots {
        if cfg.fading.enabled && slot % cfg.fading.block_slots == 0 {
            channel = base.faded(&mut fade_rng);
        }
        let arrived: u64 = traffic.generate_arrivals(&mut traffic_rng, slot, &mut queues).iter().map(|a| a.bits).sum();
        m.arrived_bits += arrived;
        let before = queues.clone();
        let decision = select_schedule(&queues, &channel, &mut cache, &scfg);
        let served = apply_schedule(&mut queues, &decision);
        let measured = slot >= warmup;
        if measured {
            match decision.family() {
                None => m.idle_slots += 1,
                Some(f) => m.mode_slots[ModeFamily::ALL.iter().position(|&x| x == f).expect("known family")] += 1,
            }
        }
        for s in served.links.iter().filter(|s| s.delivered && s.bits > 0) {
            let dir = if matches!(s.link, Link::AccessDl(_)) { Direction::Dl } else { Direction::Ul };
            let lat = traffic.record_delivery(dir, s.flow, s.bits, slot);
            m.delivered_bits += s.bits;
            if !measured {
                continue;
            }
            match dir {
                Direction::Dl => {
                    m.served_dl_bits += s.bits;
                    m.per_ue_dl_bits[s.flow] += s.bits;
                    m.latencies_dl_s.extend(lat);
                }
                Direction::Ul => {
                    m.served_ul_bits += s.bits;
                    m.per_ue_ul_bits[s.flow] += s.bits;
                    m.latencies_ul_s.extend(lat);
                }
            }
        }
        observer.observe(slot, &before, &decision, &queues, arrived);
        if slot % sample == 0 {
            m.backlog.push((slot, queues.total()));
        }
        if let Some(l) = log.as_mut() {
            l.push_str(&decision.csv_row(slot));
            l.push('\n');
        }
    }
    m.final_backlog_bits = queues.total();
    m.power_solves = cache.solves();
    Ok(DropRun { metrics: m, decisions_csv: log })
}

/// All drops of every backhaul bin for each variant.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Vec<Metrics>,
    /// Decision log of the first drop of the first bin, per variant.
    pub decisions_csv: Vec<(SchedulerVariant, String)>,
}

pub fn run(cfg: &SimConfig, variants: &[SchedulerVariant]) -> Result<RunOutput> {
    cfg.validate()?;
    let mut out = RunOutput { metrics: Vec::new(), decisions_csv: Vec::new() };
    for (pi, placement) in cfg.placements().into_iter().enumerate() {
        for &variant in variants {
            for drop in 0..cfg.run.n_drops {
                let log = cfg.run.log_decisions && pi == 0 && drop == 0;
                let r = run_drop(cfg, placement, drop, variant, log)?;
                if let Some(csv) = r.decisions_csv {
                    out.decisions_csv.push((variant, csv));
                }
                out.metrics.push(r.metrics);
            }
        }
    }
    Ok(out)
}
