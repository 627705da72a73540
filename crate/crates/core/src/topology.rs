//! Node layout for one drop and the path-loss table.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{AntennaConfig, BackhaulConfig, PerKind, SimConfig};
use crate::error::{Error, Result};
use crate::units::dbm_to_watts;

/// A radio node. `Ue(n)` is zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    MacroBs,
    SmallBs,
    Ue(usize),
}

impl Node {
    /// Dense index: macro 0, small 1, UE n at n + 2.
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Node::MacroBs => 0,
            Node::SmallBs => 1,
            Node::Ue(n) => n + 2,
        }
    }

    pub fn from_index(i: usize) -> Node {
        match i {
            0 => Node::MacroBs,
            1 => Node::SmallBs,
            n => Node::Ue(n - 2),
        }
    }

    pub fn is_ue(self) -> bool {
        matches!(self, Node::Ue(_))
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::MacroBs => f.write_str("macro"),
            Node::SmallBs => f.write_str("small"),
            Node::Ue(n) => write!(f, "ue{n}"),
        }
    }
}

/// Path-loss class of a node pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkClass {
    MbsSbs,
    MbsUe,
    SbsUe,
    UeUe,
}

impl LinkClass {
    pub fn between(a: Node, b: Node) -> Option<LinkClass> {
        use Node::*;
        match (a, b) {
            (MacroBs, SmallBs) | (SmallBs, MacroBs) => Some(LinkClass::MbsSbs),
            (MacroBs, Ue(_)) | (Ue(_), MacroBs) => Some(LinkClass::MbsUe),
            (SmallBs, Ue(_)) | (Ue(_), SmallBs) => Some(LinkClass::SbsUe),
            (Ue(x), Ue(y)) if x != y => Some(LinkClass::UeUe),
            _ => None,
        }
    }
}

/// UE-UE breakpoint between the two branches of the table.
pub const UE_UE_BREAKPOINT_KM: f64 = 0.05;

/// Smallest distance accepted by [`path_loss_db`]; shorter distances are
/// clamped (1 m).
pub const MIN_DISTANCE_KM: f64 = 1e-3;

/// Path loss in dB for a link class at `distance_km`.
///
/// The UE-UE far branch (`55.78 + 40 log10 R`) takes R in metres, which gives
/// a jump of roughly 51 dB at the 50 m breakpoint.
pub fn path_loss_db(class: LinkClass, distance_km: f64, los: bool) -> f64 {
    let r = distance_km.max(MIN_DISTANCE_KM);
    let lg = r.log10();
    match (class, los) {
        (LinkClass::MbsSbs, true) => 100.7 + 23.5 * lg,
        (LinkClass::MbsSbs, false) => 125.2 + 36.3 * lg,
        (LinkClass::MbsUe, true) => 103.4 + 24.2 * lg,
        (LinkClass::MbsUe, false) => 131.1 + 42.8 * lg,
        (LinkClass::SbsUe, true) => 103.8 + 20.9 * lg,
        (LinkClass::SbsUe, false) => 145.4 + 37.5 * lg,
        (LinkClass::UeUe, _) if r <= UE_UE_BREAKPOINT_KM => 98.45 + 20.0 * lg,
        (LinkClass::UeUe, _) => 55.78 + 40.0 * (r * 1e3).log10(),
    }
}

/// MBS-SBS distance (m) yielding `loss_db`, and whether the LOS branch was
/// used. Prefers LOS when the result lies inside `max_distance_m`; the NLOS
/// result is clamped to `max_distance_m`.
pub fn backhaul_distance_for_loss(loss_db: f64, max_distance_m: f64) -> (f64, bool) {
    let los_m = 1e3 * 10f64.powf((loss_db - 100.7) / 23.5);
    if los_m <= max_distance_m {
        return (los_m, true);
    }
    let nlos_m = 1e3 * 10f64.powf((loss_db - 125.2) / 36.3);
    (nlos_m.min(max_distance_m), false)
}

/// One backhaul bin of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Placement {
    Uniform,
    Distance(f64),
    Loss(f64),
}

impl Placement {
    /// Label used for the throughput/mode-usage reports.
    pub fn label(&self) -> String {
        match self {
            Placement::Uniform => "uniform".to_string(),
            Placement::Distance(d) => format!("{d}m"),
            Placement::Loss(l) => format!("{l}"),
        }
    }
}

impl SimConfig {
    /// The backhaul bins this config sweeps over.
    pub fn placements(&self) -> Vec<Placement> {
        match &self.backhaul {
            BackhaulConfig::Uniform => vec![Placement::Uniform],
            BackhaulConfig::FixedDistance { distance_m } => vec![Placement::Distance(*distance_m)],
            BackhaulConfig::FixedLoss { loss_db } => loss_db.iter().map(|&l| Placement::Loss(l)).collect(),
        }
    }
}

pub type Point = [f64; 2];

pub fn distance_m(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub macro_pos: Point,
    pub small_pos: Point,
    pub ue_pos: Vec<Point>,
    pub max_power_w: PerKind,
    pub noise_figure_db: PerKind,
    pub antenna: AntennaConfig,
    /// Set when the backhaul loss is pinned rather than derived from geometry.
    pub backhaul_loss_db: Option<f64>,
    /// LOS branch used to place a pinned-loss small BS.
    pub backhaul_los: Option<bool>,
}

impl Topology {
    pub fn n_ues(&self) -> usize {
        self.ue_pos.len()
    }

    pub fn position(&self, node: Node) -> Point {
        match node {
            Node::MacroBs => self.macro_pos,
            Node::SmallBs => self.small_pos,
            Node::Ue(n) => self.ue_pos[n],
        }
    }

    pub fn distance_m(&self, a: Node, b: Node) -> f64 {
        distance_m(self.position(a), self.position(b))
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> {
        [Node::MacroBs, Node::SmallBs].into_iter().chain((0..self.n_ues()).map(Node::Ue))
    }
}

fn uniform_in_disc(rng: &mut impl Rng, center: Point, radius: f64) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    [center[0] + r * theta.cos(), center[1] + r * theta.sin()]
}

fn at_bearing(rng: &mut impl Rng, center: Point, r: f64) -> Point {
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    [center[0] + r * theta.cos(), center[1] + r * theta.sin()]
}

/// Places the macro BS at the origin, the small BS per `placement` and
/// `n_ues` UEs uniformly in the small-cell disc. Deterministic in `seed`.
pub fn drop_topology(seed: u64, n_ues: usize, config: &SimConfig, placement: Placement) -> Result<Topology> {
    if n_ues == 0 {
        return Err(Error::Config("a drop needs at least one UE".into()));
    }
    if !(config.macro_radius_m > 0.0 && config.small_radius_m > 0.0) {
        return Err(Error::Config("cell radii must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let macro_pos = [0.0, 0.0];
    let mut backhaul_loss_db = None;
    let mut backhaul_los = None;
    let backhaul_m = match placement {
        Placement::Uniform => {
            let radius = if config.require_containment {
                config.macro_radius_m - config.small_radius_m
            } else {
                config.macro_radius_m
            };
            if radius <= 0.0 {
                return Err(Error::Geometry("small cell does not fit inside the macro cell".into()));
            }
            None
        }
        Placement::Distance(d) => {
            if !(d > 0.0) {
                return Err(Error::Geometry(format!("backhaul distance must be positive, got {d}")));
            }
            Some(d)
        }
        Placement::Loss(l) => {
            let (d, los) = backhaul_distance_for_loss(l, config.macro_radius_m);
            backhaul_loss_db = Some(l);
            backhaul_los = Some(los);
            Some(d)
        }
    };
    let small_pos = match backhaul_m {
        None => {
            let radius = if config.require_containment {
                config.macro_radius_m - config.small_radius_m
            } else {
                config.macro_radius_m
            };
            uniform_in_disc(&mut rng, macro_pos, radius)
        }
        Some(d) => {
            if config.require_containment && d + config.small_radius_m > config.macro_radius_m {
                return Err(Error::Geometry(format!(
                    "small cell at {d:.1} m with radius {} m leaves the macro disc",
                    config.small_radius_m
                )));
            }
            at_bearing(&mut rng, macro_pos, d)
        }
    };
    let ue_pos = (0..n_ues).map(|_| uniform_in_disc(&mut rng, small_pos, config.small_radius_m)).collect();
    let p = config.power_dbm;
    Ok(Topology {
        macro_pos,
        small_pos,
        ue_pos,
        max_power_w: PerKind {
            macro_bs: dbm_to_watts(p.macro_bs),
            small_bs: dbm_to_watts(p.small_bs),
            ue: dbm_to_watts(p.ue),
        },
        noise_figure_db: config.noise_figure_db,
        antenna: config.antenna,
        backhaul_loss_db,
        backhaul_los,
    })
}
