//! Structured-text (TOML) configuration.
//!
//! Every key has a default matching the reference deployment: 10 MHz
//! bandwidth, 800 m macro cell, 40 m small cell, 46/24/23 dBm maximum
//! powers, 5/13/9 dB noise figures and 120 dB of self-interference
//! cancellation at both base stations. A minimal config file may therefore be
//! empty.
//!
//! ```toml
//! seed = 7
//! n_ues = 10
//! bandwidth_hz = 1e7
//! sic_db = 120.0
//!
//! [power_dbm]
//! macro_bs = 46.0
//! small_bs = 24.0
//! ue = 23.0
//!
//! [backhaul]
//! placement = "fixed-loss"
//! loss_db = [74.0, 100.0, 119.0]
//!
//! [antenna]
//! mode = "directional"
//! beamwidth_deg = 60.0
//!
//! [traffic]
//! model = "ftp"
//! dl_file_bytes = 1250000
//! ul_file_bytes = 250000
//!
//! [run]
//! duration_s = 50.0
//! n_drops = 20
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::LinkClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub n_ues: usize,
    pub macro_radius_m: f64,
    pub small_radius_m: f64,
    pub bandwidth_hz: f64,
    pub slot_s: f64,
    /// Self-interference cancellation at both base stations.
    pub sic_db: f64,
    /// Distances below this are clamped before path loss is evaluated.
    pub min_distance_m: f64,
    /// Reject drops whose small-cell disc leaves the macro disc.
    pub require_containment: bool,
    pub power_dbm: PerKind,
    pub noise_figure_db: PerKind,
    pub shadowing_db: ShadowingConfig,
    pub los: LosProfile,
    pub antenna: AntennaConfig,
    pub backhaul: BackhaulConfig,
    pub fading: FadingConfig,
    pub traffic: TrafficConfig,
    pub run: RunConfig,
    pub solver: SolverConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_ues: 10,
            macro_radius_m: 800.0,
            small_radius_m: 40.0,
            bandwidth_hz: 10e6,
            slot_s: 1e-3,
            sic_db: 120.0,
            min_distance_m: 1.0,
            require_containment: false,
            power_dbm: PerKind { macro_bs: 46.0, small_bs: 24.0, ue: 23.0 },
            noise_figure_db: PerKind { macro_bs: 5.0, small_bs: 13.0, ue: 9.0 },
            shadowing_db: ShadowingConfig::default(),
            los: LosProfile::default(),
            antenna: AntennaConfig::default(),
            backhaul: BackhaulConfig::default(),
            fading: FadingConfig::default(),
            traffic: TrafficConfig::default(),
            run: RunConfig::default(),
            solver: SolverConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("macro_radius_m", self.macro_radius_m),
            ("small_radius_m", self.small_radius_m),
            ("bandwidth_hz", self.bandwidth_hz),
            ("slot_s", self.slot_s),
            ("min_distance_m", self.min_distance_m),
            ("run.duration_s", self.run.duration_s),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{key} must be positive, got {v}")));
            }
        }
        if self.n_ues == 0 {
            return Err(Error::Config("n_ues must be at least 1".into()));
        }
        if self.run.n_drops == 0 {
            return Err(Error::Config("run.n_drops must be at least 1".into()));
        }
        let slots = self.run.duration_s / self.slot_s;
        if (slots - slots.round()).abs() > 1e-6 * slots.max(1.0) {
            return Err(Error::Config(format!(
                "run.duration_s ({}) must be an integral number of slots ({} s)",
                self.run.duration_s, self.slot_s
            )));
        }
        if !(self.run.warmup_s >= 0.0 && self.run.warmup_s < self.run.duration_s) {
            return Err(Error::Config("run.warmup_s must lie in [0, duration_s)".into()));
        }
        self.traffic.validate()?;
        self.backhaul.validate()?;
        if self.fading.enabled && self.fading.block_slots == 0 {
            return Err(Error::Config("fading.block_slots must be at least 1".into()));
        }
        if !(self.solver.epsilon > 0.0) {
            return Err(Error::Config("solver.epsilon must be positive".into()));
        }
        Ok(())
    }

    pub fn n_slots(&self) -> u64 {
        (self.run.duration_s / self.slot_s).round() as u64
    }

    pub fn warmup_slots(&self) -> u64 {
        (self.run.warmup_s / self.slot_s).round() as u64
    }
}

/// A value per node kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerKind {
    pub macro_bs: f64,
    pub small_bs: f64,
    pub ue: f64,
}

/// Log-normal shadowing standard deviations (dB) per link class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShadowingConfig {
    pub sbs_ue_los: f64,
    pub sbs_ue_nlos: f64,
    pub mbs_ue: f64,
    pub mbs_sbs: f64,
    /// Not tabulated for UE-UE links; off by default.
    pub ue_ue: f64,
}

impl Default for ShadowingConfig {
    fn default() -> Self {
        Self { sbs_ue_los: 3.0, sbs_ue_nlos: 4.0, mbs_ue: 8.0, mbs_sbs: 6.0, ue_ue: 0.0 }
    }
}

impl ShadowingConfig {
    pub fn std_db(&self, class: LinkClass, los: bool) -> f64 {
        match class {
            LinkClass::SbsUe if los => self.sbs_ue_los,
            LinkClass::SbsUe => self.sbs_ue_nlos,
            LinkClass::MbsUe => self.mbs_ue,
            LinkClass::MbsSbs => self.mbs_sbs,
            LinkClass::UeUe => self.ue_ue,
        }
    }

    pub fn zero() -> Self {
        Self { sbs_ue_los: 0.0, sbs_ue_nlos: 0.0, mbs_ue: 0.0, mbs_sbs: 0.0, ue_ue: 0.0 }
    }
}

/// Line-of-sight probability model.
///
/// `exponential` draws LOS with probability `exp(-d / decay_m)` using a
/// per-class decay length; the default decay lengths are assumptions, not
/// calibrated values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LosProfile {
    #[default]
    AlwaysNlos,
    AlwaysLos,
    Exponential {
        #[serde(default = "default_decay_mbs_sbs")]
        mbs_sbs_decay_m: f64,
        #[serde(default = "default_decay_mbs_ue")]
        mbs_ue_decay_m: f64,
        #[serde(default = "default_decay_sbs_ue")]
        sbs_ue_decay_m: f64,
    },
}

fn default_decay_mbs_sbs() -> f64 {
    150.0
}
fn default_decay_mbs_ue() -> f64 {
    100.0
}
fn default_decay_sbs_ue() -> f64 {
    30.0
}

impl LosProfile {
    pub fn exponential_default() -> Self {
        LosProfile::Exponential {
            mbs_sbs_decay_m: default_decay_mbs_sbs(),
            mbs_ue_decay_m: default_decay_mbs_ue(),
            sbs_ue_decay_m: default_decay_sbs_ue(),
        }
    }

    /// Probability that a link of `class` at `distance_m` is LOS.
    pub fn probability(&self, class: LinkClass, distance_m: f64) -> f64 {
        match *self {
            LosProfile::AlwaysNlos => 0.0,
            LosProfile::AlwaysLos => 1.0,
            LosProfile::Exponential { mbs_sbs_decay_m, mbs_ue_decay_m, sbs_ue_decay_m } => {
                let decay = match class {
                    LinkClass::MbsSbs => mbs_sbs_decay_m,
                    LinkClass::MbsUe => mbs_ue_decay_m,
                    LinkClass::SbsUe => sbs_ue_decay_m,
                    // UE-UE path loss has no LOS distinction.
                    LinkClass::UeUe => return 0.0,
                };
                (-distance_m / decay).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AntennaMode {
    #[default]
    Omni,
    Directional,
}

/// Backhaul antenna at both the macro and small BS. UE links always use an
/// omni pattern at every node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaConfig {
    pub mode: AntennaMode,
    pub beamwidth_deg: f64,
    /// Boresight gain per end. When absent: 3 dB for 90 degree beams,
    /// 5 dB for 60 degree beams (assumed values).
    pub boresight_gain_db: Option<f64>,
}

impl Default for AntennaConfig {
    fn default() -> Self {
        Self { mode: AntennaMode::Omni, beamwidth_deg: 60.0, boresight_gain_db: None }
    }
}

impl AntennaConfig {
    pub fn directional(beamwidth_deg: f64) -> Self {
        Self { mode: AntennaMode::Directional, beamwidth_deg, boresight_gain_db: None }
    }

    /// Gain added at each end of the MBS-SBS link.
    pub fn backhaul_gain_db(&self) -> f64 {
        match self.mode {
            AntennaMode::Omni => 0.0,
            AntennaMode::Directional => self.boresight_gain_db.unwrap_or(if self.beamwidth_deg <= 60.0 {
                5.0
            } else {
                3.0
            }),
        }
    }
}

/// How the small BS is placed relative to the macro BS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "placement", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BackhaulConfig {
    /// Uniform over the macro disc.
    #[default]
    Uniform,
    /// Fixed MBS-SBS distance, random bearing.
    FixedDistance { distance_m: f64 },
    /// Fixed backhaul channel loss (BCL). Each listed value is one sweep bin.
    /// The distance is recovered by inverting the MBS-SBS path-loss formula
    /// (LOS branch when that fits inside the macro cell, NLOS otherwise) and
    /// the link carries exactly the stated loss, without shadowing.
    FixedLoss { loss_db: Vec<f64> },
}

impl BackhaulConfig {
    fn validate(&self) -> Result<()> {
        match self {
            BackhaulConfig::Uniform => Ok(()),
            BackhaulConfig::FixedDistance { distance_m } if !(*distance_m > 0.0) => Err(Error::Geometry(
                format!("fixed backhaul distance must be positive, got {distance_m}"),
            )),
            BackhaulConfig::FixedDistance { .. } => Ok(()),
            BackhaulConfig::FixedLoss { loss_db } if loss_db.is_empty() => {
                Err(Error::Config("backhaul.loss_db must list at least one value".into()))
            }
            BackhaulConfig::FixedLoss { loss_db } => {
                if loss_db.iter().all(|l| l.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::Config("backhaul.loss_db values must be finite".into()))
                }
            }
        }
    }
}

/// Optional per-slot small-scale fading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FadingConfig {
    pub enabled: bool,
    /// Slots per fading block; the power cache is rebuilt once per block.
    pub block_slots: u64,
}

impl Default for FadingConfig {
    fn default() -> Self {
        Self { enabled: false, block_slots: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TrafficModel {
    /// Closed loop: one outstanding file per UE and direction, next request
    /// after an exponential reading time following completion.
    #[default]
    Ftp,
    /// Open loop: file requests arrive as a Poisson process.
    FtpPoisson,
    /// Source queues are topped up every slot (saturated load).
    FullBuffer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub model: TrafficModel,
    pub mean_reading_time_s: f64,
    pub dl_file_bytes: u64,
    pub ul_file_bytes: u64,
    /// Mean inter-arrival time per UE and direction for `ftp-poisson`.
    pub mean_interarrival_s: f64,
    /// Source backlog maintained by `full-buffer`, in files.
    pub full_buffer_files: u64,
    /// When false no traffic is generated at all.
    pub enabled: bool,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            model: TrafficModel::Ftp,
            mean_reading_time_s: 1.0,
            dl_file_bytes: 1_250_000,
            ul_file_bytes: 1_250_000,
            mean_interarrival_s: 1.0,
            full_buffer_files: 2,
            enabled: true,
        }
    }
}

impl TrafficConfig {
    pub fn asymmetric() -> Self {
        Self { ul_file_bytes: 250_000, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.dl_file_bytes == 0 || self.ul_file_bytes == 0 {
            return Err(Error::Config("file sizes must be positive".into()));
        }
        if !(self.mean_reading_time_s > 0.0) || !(self.mean_interarrival_s > 0.0) {
            return Err(Error::Config("traffic time constants must be positive".into()));
        }
        if self.full_buffer_files == 0 {
            return Err(Error::Config("traffic.full_buffer_files must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerVariant {
    /// Hybrid FD/HD with power allocation.
    #[default]
    FdPa,
    /// Hybrid FD/HD with every transmitter at maximum power.
    FdFixed,
    /// Half-duplex modes only.
    Hd,
}

impl SchedulerVariant {
    pub const ALL: [SchedulerVariant; 3] = [SchedulerVariant::FdPa, SchedulerVariant::FdFixed, SchedulerVariant::Hd];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerVariant::FdPa => "fd-pa",
            SchedulerVariant::FdFixed => "fd-fixed",
            SchedulerVariant::Hd => "hd",
        }
    }
}

impl std::str::FromStr for SchedulerVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fd-pa" => Ok(SchedulerVariant::FdPa),
            "fd-fixed" => Ok(SchedulerVariant::FdFixed),
            "hd" => Ok(SchedulerVariant::Hd),
            other => Err(Error::Config(format!("unknown scheduler variant {other:?}"))),
        }
    }
}

impl std::fmt::Display for SchedulerVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub duration_s: f64,
    /// Initial part of every run excluded from throughput and mode-usage
    /// statistics.
    pub warmup_s: f64,
    pub n_drops: usize,
    pub variant: SchedulerVariant,
    /// Power-optimize every FD schedule each slot instead of the two-stage
    /// procedure. Only sensible for small UE counts.
    pub exact: bool,
    /// Sampling period of the backlog time series, in slots.
    pub queue_sample_slots: u64,
    /// Write the per-slot decision log for the first drop.
    pub log_decisions: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            duration_s: 50.0,
            warmup_s: 0.0,
            n_drops: 20,
            variant: SchedulerVariant::FdPa,
            exact: false,
            queue_sample_slots: 100,
            log_decisions: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub max_iters: usize,
    /// Optimize the capped rate (`min(log2(1+SINR), cap)`) inside the
    /// scheduler rather than the raw Shannon rate.
    pub cap_aware: bool,
    /// Restart the solver from near-corner points and keep the best.
    pub multi_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { epsilon: 1e-4, max_iters: 50, cap_aware: true, multi_start: true }
    }
}
