//! Per-drop metrics, cross-drop aggregation and the summary tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::SchedulerVariant;
use crate::error::{Error, Result};
use crate::radio::ModeFamily;
use crate::topology::Placement;

/// Outcome of one (drop, variant) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub placement: Placement,
    pub drop: usize,
    pub variant: SchedulerVariant,
    /// Path loss of the backhaul link in this drop, in dB.
    pub backhaul_loss_db: f64,
    /// Slots after warm-up.
    pub slots: u64,
    /// Observation time after warm-up.
    pub duration_s: f64,
    /// Bits delivered to final destinations after warm-up.
    pub served_dl_bits: u64,
    pub served_ul_bits: u64,
    /// Bits delivered over the whole run, warm-up included.
    pub delivered_bits: u64,
    /// Slots per mode family, in [`ModeFamily::ALL`] order.
    pub mode_slots: [u64; 5],
    pub idle_slots: u64,
    pub per_ue_dl_bits: Vec<u64>,
    pub per_ue_ul_bits: Vec<u64>,
    /// `(slot, total backlog in bits)` samples.
    pub backlog: Vec<(u64, u64)>,
    pub latencies_dl_s: Vec<f64>,
    pub latencies_ul_s: Vec<f64>,
    pub arrived_bits: u64,
    pub final_backlog_bits: u64,
    pub power_solves: usize,
}

impl Metrics {
    pub fn served_dl_bps(&self) -> f64 {
        self.served_dl_bits as f64 / self.duration_s
    }

    pub fn served_ul_bps(&self) -> f64 {
        self.served_ul_bits as f64 / self.duration_s
    }

    pub fn served_total_bps(&self) -> f64 {
        self.served_dl_bps() + self.served_ul_bps()
    }

    /// Usage share of each mode family over the non-idle slots.
    pub fn mode_fractions(&self) -> [f64; 5] {
        fractions(&self.mode_slots)
    }

    /// Arrived bits equal queued plus delivered bits.
    pub fn is_conserved(&self) -> bool {
        self.arrived_bits == self.final_backlog_bits + self.delivered_bits
    }

    /// Jain's index over per-UE delivered bits (both directions).
    pub fn jain_fairness(&self) -> f64 {
        let x: Vec<f64> = self.per_ue_dl_bits.iter().zip(&self.per_ue_ul_bits).map(|(&d, &u)| (d + u) as f64).collect();
        let s: f64 = x.iter().sum();
        let s2: f64 = x.iter().map(|v| v * v).sum();
        if s2 == 0.0 {
            return 1.0;
        }
        s * s / (x.len() as f64 * s2)
    }
}

fn fractions(counts: &[u64; 5]) -> [f64; 5] {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return [0.0; 5];
    }
    counts.map(|c| c as f64 / total as f64)
}

/// Sample mean with a 95% Student-t half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(x: &[f64]) -> Self {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n.max(1) as f64;
        if n < 2 {
            return Self { mean, ci95: f64::NAN, n };
        }
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("df positive").inverse_cdf(0.975);
        Self { mean, ci95: t * (var / n as f64).sqrt(), n }
    }
}

/// Aggregate of all drops of one (backhaul bin, variant) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub backhaul: String,
    pub variant: SchedulerVariant,
    pub dl_mbps: Estimate,
    pub ul_mbps: Estimate,
    pub total_mbps: Estimate,
    /// Pooled over all slots of all drops.
    pub mode_fractions: [f64; 5],
    /// `(fd - hd) / hd * 100` against the HD variant of the same bin.
    pub gain_vs_hd_pct: Option<f64>,
}

fn summarize_group(group: &[&Metrics]) -> Summary {
    let col = |f: &dyn Fn(&Metrics) -> f64| Estimate::from_samples(&group.iter().map(|m| f(m) / 1e6).collect::<Vec<_>>());
    let mut counts = [0u64; 5];
    for m in group {
        for (c, s) in counts.iter_mut().zip(&m.mode_slots) {
            *c += s;
        }
    }
    Summary {
        backhaul: group[0].placement.label(),
        variant: group[0].variant,
        dl_mbps: col(&Metrics::served_dl_bps),
        ul_mbps: col(&Metrics::served_ul_bps),
        total_mbps: col(&Metrics::served_total_bps),
        mode_fractions: fractions(&counts),
        gain_vs_hd_pct: None,
    }
}

/// Groups `metrics` by backhaul bin and variant (first-seen order) and
/// computes the throughput gain of every variant over HD in each bin.
pub fn summarize(metrics: &[Metrics]) -> Result<Vec<Summary>> {
    if metrics.is_empty() {
        return Err(Error::EmptyReport("no completed runs".into()));
    }
    let mut keys: Vec<(String, SchedulerVariant)> = Vec::new();
    for m in metrics {
        let k = (m.placement.label(), m.variant);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut out: Vec<Summary> = keys
        .iter()
        .map(|(b, v)| {
            let g: Vec<&Metrics> = metrics.iter().filter(|m| &m.placement.label() == b && m.variant == *v).collect();
            summarize_group(&g)
        })
        .collect();
    let hd: Vec<(String, f64)> =
        out.iter().filter(|s| s.variant == SchedulerVariant::Hd).map(|s| (s.backhaul.clone(), s.total_mbps.mean)).collect();
    for s in &mut out {
        if let Some((_, base)) = hd.iter().find(|(b, _)| *b == s.backhaul) {
            s.gain_vs_hd_pct = Some(gain_pct(s.total_mbps.mean, *base));
        }
    }
    Ok(out)
}

pub fn gain_pct(fd: f64, hd: f64) -> f64 {
    (fd - hd) / hd * 100.0
}

pub const THROUGHPUT_CSV_HEADER: &str =
    "backhaul,variant,n_drops,served_dl_mbps,served_ul_mbps,served_total_mbps,ci95_total_mbps,gain_vs_hd_pct";

pub fn throughput_csv(summaries: &[Summary]) -> String {
    let mut s = format!("{THROUGHPUT_CSV_HEADER}\n");
    for r in summaries {
        let gain = r.gain_vs_hd_pct.map_or(String::new(), |g| format!("{g:.2}"));
        let _ = writeln!(
            s,
            "{},{},{},{:.4},{:.4},{:.4},{:.4},{}",
            r.backhaul, r.variant, r.total_mbps.n, r.dl_mbps.mean, r.ul_mbps.mean, r.total_mbps.mean, r.total_mbps.ci95, gain
        );
    }
    s
}

pub fn mode_usage_csv(summaries: &[Summary]) -> String {
    let mut s = String::from("backhaul,variant");
    for f in ModeFamily::ALL {
        let _ = write!(s, ",{}", f.name().to_lowercase());
    }
    s.push('\n');
    for r in summaries {
        let _ = write!(s, "{},{}", r.backhaul, r.variant);
        for f in r.mode_fractions {
            let _ = write!(s, ",{:.4}", f);
        }
        s.push('\n');
    }
    s
}

pub fn queues_csv(metrics: &[Metrics]) -> String {
    let mut s = String::from("backhaul,variant,drop,slot,backlog_bits\n");
    for m in metrics {
        let b = m.placement.label();
        for (slot, q) in &m.backlog {
            let _ = writeln!(s, "{b},{},{},{slot},{q}", m.variant, m.drop);
        }
    }
    s
}

/// Summary tables of a set of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summaries: Vec<Summary>,
    pub throughput_csv: String,
    pub mode_usage_csv: String,
    pub queues_csv: String,
}

pub fn report(metrics: &[Metrics]) -> Result<Report> {
    let summaries = summarize(metrics)?;
    Ok(Report {
        throughput_csv: throughput_csv(&summaries),
        mode_usage_csv: mode_usage_csv(&summaries),
        queues_csv: queues_csv(metrics),
        summaries,
    })
}

/// One-sided test for a positive linear trend in a backlog series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendTest {
    pub slope: f64,
    pub t_stat: f64,
    /// `P(T >= t)` under zero slope.
    pub p_value: f64,
    pub n_batches: usize,
}

/// Ordinary least squares slope of batch means of `(t, y)` samples, batches
/// of `batch` consecutive samples. `None` with fewer than three batches.
pub fn trend_test(samples: &[(f64, f64)], batch: usize) -> Option<TrendTest> {
    let batch = batch.max(1);
    let means: Vec<(f64, f64)> = samples
        .chunks_exact(batch)
        .map(|c| {
            let n = c.len() as f64;
            (c.iter().map(|p| p.0).sum::<f64>() / n, c.iter().map(|p| p.1).sum::<f64>() / n)
        })
        .collect();
    let n = means.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mx = means.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = means.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = means.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = means.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = means.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let se = (rss / (nf - 2.0) / sxx).sqrt();
    let t_stat = if se > 0.0 {
        slope / se
    } else if slope > 0.0 {
        f64::INFINITY
    } else if slope < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    };
    let dist = StudentsT::new(0.0, 1.0, nf - 2.0).expect("df positive");
    let p_value = 1.0 - dist.cdf(t_stat);
    Some(TrendTest { slope, t_stat, p_value, n_batches: n })
}
