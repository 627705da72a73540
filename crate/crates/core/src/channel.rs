//! Per-drop channel realization: linear power gains between all node pairs,
//! residual self-interference factors and receiver noise powers.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::config::{PerKind, SimConfig};
use crate::topology::{path_loss_db, LinkClass, Node, Topology};
use crate::units::{db_to_linear, linear_to_db, noise_power_w};

/// Large-scale description of one unordered node pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkRecord {
    pub a: Node,
    pub b: Node,
    pub distance_m: f64,
    pub los: bool,
    pub path_loss_db: f64,
    pub shadowing_db: f64,
    pub antenna_gain_db: f64,
}

impl LinkRecord {
    pub fn gain_db(&self) -> f64 {
        -self.path_loss_db - self.shadowing_db + self.antenna_gain_db
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    n_ues: usize,
    /// Row-major `[src][dst]` linear power gains.
    gain: Vec<f64>,
    sic_macro: f64,
    sic_small: f64,
    noise_w: PerKind,
    max_power_w: PerKind,
    records: Vec<LinkRecord>,
}

impl ChannelState {
    /// Channel with every gain set to `default_gain`. Intended for tests and
    /// hand-built scenarios; adjust with [`ChannelState::set_gain`].
    pub fn uniform(n_ues: usize, default_gain: f64, sic: f64, noise_w: PerKind, max_power_w: PerKind) -> Self {
        let n = n_ues + 2;
        let mut gain = vec![default_gain; n * n];
        for i in 0..n {
            gain[i * n + i] = 0.0;
        }
        Self { n_ues, gain, sic_macro: sic, sic_small: sic, noise_w, max_power_w, records: Vec::new() }
    }

    pub fn n_ues(&self) -> usize {
        self.n_ues
    }

    fn n_nodes(&self) -> usize {
        self.n_ues + 2
    }

    #[inline]
    pub fn gain(&self, src: Node, dst: Node) -> f64 {
        self.gain[src.index() * self.n_nodes() + dst.index()]
    }

    pub fn set_gain(&mut self, src: Node, dst: Node, g: f64) {
        let n = self.n_nodes();
        self.gain[src.index() * n + dst.index()] = g;
    }

    /// Sets both directions of a pair.
    pub fn set_pair_gain(&mut self, a: Node, b: Node, g: f64) {
        self.set_gain(a, b, g);
        self.set_gain(b, a, g);
    }

    /// Residual self-interference factor (linear) at a base station; UEs are
    /// half duplex and have none.
    #[inline]
    pub fn sic(&self, node: Node) -> f64 {
        match node {
            Node::MacroBs => self.sic_macro,
            Node::SmallBs => self.sic_small,
            Node::Ue(_) => 0.0,
        }
    }

    pub fn set_sic(&mut self, macro_factor: f64, small_factor: f64) {
        self.sic_macro = macro_factor;
        self.sic_small = small_factor;
    }

    #[inline]
    pub fn noise_w(&self, node: Node) -> f64 {
        match node {
            Node::MacroBs => self.noise_w.macro_bs,
            Node::SmallBs => self.noise_w.small_bs,
            Node::Ue(_) => self.noise_w.ue,
        }
    }

    pub fn set_noise_w(&mut self, noise: PerKind) {
        self.noise_w = noise;
    }

    #[inline]
    pub fn max_power_w(&self, node: Node) -> f64 {
        match node {
            Node::MacroBs => self.max_power_w.macro_bs,
            Node::SmallBs => self.max_power_w.small_bs,
            Node::Ue(_) => self.max_power_w.ue,
        }
    }

    pub fn max_powers(&self) -> PerKind {
        self.max_power_w
    }

    pub fn records(&self) -> &[LinkRecord] {
        &self.records
    }

    /// Same large-scale channel with independent unit-mean exponential power
    /// fading on every ordered pair.
    pub fn faded(&self, rng: &mut impl Rng) -> ChannelState {
        let mut out = self.clone();
        let n = self.n_nodes();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let h: f64 = Exp1.sample(rng);
                    out.gain[i * n + j] *= h;
                }
            }
        }
        out
    }

    /// `src,dst,distance_m,los,path_loss_db,gain_db` for every ordered pair
    /// that has a large-scale record.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("src,dst,distance_m,los,path_loss_db,gain_db\n");
        for r in &self.records {
            for (src, dst) in [(r.a, r.b), (r.b, r.a)] {
                let _ = writeln!(
                    s,
                    "{src},{dst},{:.3},{},{:.3},{:.3}",
                    r.distance_m,
                    u8::from(r.los),
                    r.path_loss_db,
                    linear_to_db(self.gain(src, dst))
                );
            }
        }
        s
    }
}

/// Draws LOS states and shadowing for every node pair of `topology` and
/// returns the linear channel. Gains are reciprocal.
pub fn realize_channel(topology: &Topology, rng: &mut impl Rng, config: &SimConfig) -> ChannelState {
    let n_ues = topology.n_ues();
    let n = n_ues + 2;
    let mut gain = vec![0.0; n * n];
    let mut records = Vec::with_capacity(n * (n - 1) / 2);
    let nodes: Vec<Node> = topology.nodes().collect();
    let backhaul_gain_db = 2.0 * topology.antenna.backhaul_gain_db();
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            let class = LinkClass::between(a, b).expect("distinct nodes");
            let distance_m = topology.distance_m(a, b).max(config.min_distance_m);
            let pinned = class == LinkClass::MbsSbs && topology.backhaul_loss_db.is_some();
            let (los, loss_db, shadowing_db) = if pinned {
                (topology.backhaul_los.unwrap_or(false), topology.backhaul_loss_db.unwrap(), 0.0)
            } else {
                let p_los = config.los.probability(class, distance_m);
                let los = p_los > 0.0 && rng.random::<f64>() < p_los;
                let std = config.shadowing_db.std_db(class, los);
                let z: f64 = StandardNormal.sample(rng);
                (los, path_loss_db(class, distance_m / 1e3, los), std * z)
            };
            let antenna_gain_db = if class == LinkClass::MbsSbs { backhaul_gain_db } else { 0.0 };
            let rec = LinkRecord { a, b, distance_m, los, path_loss_db: loss_db, shadowing_db, antenna_gain_db };
            let g = db_to_linear(rec.gain_db());
            gain[a.index() * n + b.index()] = g;
            gain[b.index() * n + a.index()] = g;
            records.push(rec);
        }
    }
    let nf = topology.noise_figure_db;
    let bw = config.bandwidth_hz;
    let sic = db_to_linear(-config.sic_db);
    ChannelState {
        n_ues,
        gain,
        sic_macro: sic,
        sic_small: sic,
        noise_w: PerKind {
            macro_bs: noise_power_w(bw, nf.macro_bs),
            small_bs: noise_power_w(bw, nf.small_bs),
            ue: noise_power_w(bw, nf.ue),
        },
        max_power_w: topology.max_power_w,
        records,
    }
}
