//! Transmission modes, per-link SINR and the capped rate mapping.
//!
//! Every mode activates one or two directed links. For an active link `l`
//! with transmitter `t` and receiver `r`, the SINR is
//!
//! ```text
//! p_t G[t][r] / (I + N_r)
//! ```
//!
//! where `I` is contributed by the other active link's transmitter `o`:
//! `p_o * gamma_r` if `o == r` (the receiver itself is transmitting, so only
//! the residual self-interference remains) and `p_o * G[o][r]` otherwise.
//! This single rule yields the FDD, FDU, FDB and FDA pairs and, with no
//! second link, the half-duplex SNRs.

use std::fmt;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::topology::Node;

/// Peak spectral efficiency of the practical modulation and coding set.
pub const SPECTRAL_EFFICIENCY_CAP: f64 = 7.0;

/// A directed hop. UE indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Link {
    BackhaulDl,
    BackhaulUl,
    AccessDl(usize),
    AccessUl(usize),
}

impl Link {
    #[inline]
    pub fn tx(self) -> Node {
        match self {
            Link::BackhaulDl => Node::MacroBs,
            Link::BackhaulUl | Link::AccessDl(_) => Node::SmallBs,
            Link::AccessUl(u) => Node::Ue(u),
        }
    }

    #[inline]
    pub fn rx(self) -> Node {
        match self {
            Link::BackhaulDl | Link::AccessUl(_) => Node::SmallBs,
            Link::BackhaulUl => Node::MacroBs,
            Link::AccessDl(d) => Node::Ue(d),
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Link::BackhaulDl => f.write_str("macro->small"),
            Link::BackhaulUl => f.write_str("small->macro"),
            Link::AccessDl(d) => write!(f, "small->ue{d}"),
            Link::AccessUl(u) => write!(f, "ue{u}->small"),
        }
    }
}

/// Mode family, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModeFamily {
    Fdd,
    Fdu,
    Fdb,
    Fda,
    Hd,
}

impl ModeFamily {
    pub const FD: [ModeFamily; 4] = [ModeFamily::Fdd, ModeFamily::Fdu, ModeFamily::Fdb, ModeFamily::Fda];
    pub const ALL: [ModeFamily; 5] =
        [ModeFamily::Fdd, ModeFamily::Fdu, ModeFamily::Fdb, ModeFamily::Fda, ModeFamily::Hd];

    pub fn name(self) -> &'static str {
        match self {
            ModeFamily::Fdd => "fdd",
            ModeFamily::Fdu => "fdu",
            ModeFamily::Fdb => "fdb",
            ModeFamily::Fda => "fda",
            ModeFamily::Hd => "hd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransmissionMode {
    /// Macro to small BS plus small BS to downlink UE `dl`.
    Fdd { dl: usize },
    /// Uplink UE `ul` to small BS plus small BS to macro.
    Fdu { ul: usize },
    /// Both backhaul directions.
    Fdb,
    /// Uplink UE `ul` to small BS plus small BS to downlink UE `dl`, `ul != dl`.
    Fda { ul: usize, dl: usize },
    HdBackhaulDl,
    HdBackhaulUl,
    HdAccessDl { dl: usize },
    HdAccessUl { ul: usize },
}

impl TransmissionMode {
    /// Active links. For FD modes the order fixes which link is "link 1" in
    /// the two-link power problem.
    pub fn links(self) -> ArrayVec<Link, 2> {
        use TransmissionMode::*;
        let mut v = ArrayVec::new();
        match self {
            Fdd { dl } => {
                v.push(Link::BackhaulDl);
                v.push(Link::AccessDl(dl));
            }
            Fdu { ul } => {
                v.push(Link::AccessUl(ul));
                v.push(Link::BackhaulUl);
            }
            Fdb => {
                v.push(Link::BackhaulDl);
                v.push(Link::BackhaulUl);
            }
            Fda { ul, dl } => {
                v.push(Link::AccessDl(dl));
                v.push(Link::AccessUl(ul));
            }
            HdBackhaulDl => v.push(Link::BackhaulDl),
            HdBackhaulUl => v.push(Link::BackhaulUl),
            HdAccessDl { dl } => v.push(Link::AccessDl(dl)),
            HdAccessUl { ul } => v.push(Link::AccessUl(ul)),
        }
        v
    }

    pub fn family(self) -> ModeFamily {
        use TransmissionMode::*;
        match self {
            Fdd { .. } => ModeFamily::Fdd,
            Fdu { .. } => ModeFamily::Fdu,
            Fdb => ModeFamily::Fdb,
            Fda { .. } => ModeFamily::Fda,
            _ => ModeFamily::Hd,
        }
    }

    pub fn is_full_duplex(self) -> bool {
        self.family() != ModeFamily::Hd
    }

    pub fn validate(self, n_ues: usize) -> Result<()> {
        let bad = |reason: String| Err(Error::Mode { mode: self.to_string(), reason });
        if let TransmissionMode::Fda { ul, dl } = self {
            if ul == dl {
                return bad("a UE cannot transmit and receive in the same slot".into());
            }
        }
        for l in self.links() {
            for node in [l.tx(), l.rx()] {
                if let Node::Ue(n) = node {
                    if n >= n_ues {
                        return bad(format!("UE index {n} out of range for {n_ues} UEs"));
                    }
                }
            }
        }
        Ok(())
    }

    /// The feasible schedule set for `n_ues` UEs: HD modes first
    /// (`2 + 2N`), then FDD, FDU, FDB and FDA (`2N + 1 + N(N-1)`).
    pub fn enumerate(n_ues: usize) -> Vec<TransmissionMode> {
        use TransmissionMode::*;
        let mut v = vec![HdBackhaulDl, HdBackhaulUl];
        v.extend((0..n_ues).map(|dl| HdAccessDl { dl }));
        v.extend((0..n_ues).map(|ul| HdAccessUl { ul }));
        v.extend((0..n_ues).map(|dl| Fdd { dl }));
        v.extend((0..n_ues).map(|ul| Fdu { ul }));
        v.push(Fdb);
        for ul in 0..n_ues {
            for dl in (0..n_ues).filter(|&d| d != ul) {
                v.push(Fda { ul, dl });
            }
        }
        v
    }
}

impl fmt::Display for TransmissionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TransmissionMode::*;
        match self {
            Fdd { dl } => write!(f, "FDD(d={dl})"),
            Fdu { ul } => write!(f, "FDU(u={ul})"),
            Fdb => f.write_str("FDB"),
            Fda { ul, dl } => write!(f, "FDA(u={ul},d={dl})"),
            HdBackhaulDl => f.write_str("HD-BDL"),
            HdBackhaulUl => f.write_str("HD-BUL"),
            HdAccessDl { dl } => write!(f, "HD-ADL(d={dl})"),
            HdAccessUl { ul } => write!(f, "HD-AUL(u={ul})"),
        }
    }
}

/// Transmit powers in watts. Only entries of active transmitters matter;
/// `ue_w` is the power of the scheduled uplink UE.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerVector {
    pub macro_w: f64,
    pub small_w: f64,
    pub ue_w: f64,
}

impl PowerVector {
    pub fn max(channel: &ChannelState) -> Self {
        let p = channel.max_powers();
        Self { macro_w: p.macro_bs, small_w: p.small_bs, ue_w: p.ue }
    }

    #[inline]
    pub fn of(&self, node: Node) -> f64 {
        match node {
            Node::MacroBs => self.macro_w,
            Node::SmallBs => self.small_w,
            Node::Ue(_) => self.ue_w,
        }
    }

    #[inline]
    pub fn set(&mut self, node: Node, p: f64) {
        match node {
            Node::MacroBs => self.macro_w = p,
            Node::SmallBs => self.small_w = p,
            Node::Ue(_) => self.ue_w = p,
        }
    }

    /// Every active transmitter of `mode` within `[0, max]`.
    pub fn within_bounds(&self, mode: TransmissionMode, channel: &ChannelState) -> bool {
        mode.links().iter().all(|l| {
            let p = self.of(l.tx());
            (0.0..=channel.max_power_w(l.tx()) * (1.0 + 1e-12)).contains(&p)
        })
    }
}

/// Coefficient multiplying the other transmitter's power at `rx`.
#[inline]
pub(crate) fn coupling(channel: &ChannelState, other_tx: Node, rx: Node) -> f64 {
    if other_tx == rx {
        channel.sic(rx)
    } else {
        channel.gain(other_tx, rx)
    }
}

/// SINR of each active link, no validation.
pub(crate) fn sinr_unchecked(mode: TransmissionMode, powers: &PowerVector, channel: &ChannelState) -> ArrayVec<(Link, f64), 2> {
    let links = mode.links();
    let mut out = ArrayVec::new();
    for (i, &l) in links.iter().enumerate() {
        let (tx, rx) = (l.tx(), l.rx());
        let signal = powers.of(tx) * channel.gain(tx, rx);
        let mut denom = channel.noise_w(rx);
        if links.len() == 2 {
            let other = links[1 - i].tx();
            denom += powers.of(other) * coupling(channel, other, rx);
        }
        out.push((l, signal / denom));
    }
    out
}

/// Per-link SINR (linear) for `mode` at `powers`.
pub fn sinr(mode: TransmissionMode, powers: &PowerVector, channel: &ChannelState) -> Result<ArrayVec<(Link, f64), 2>> {
    mode.validate(channel.n_ues())?;
    Ok(sinr_unchecked(mode, powers, channel))
}

/// `min(log2(1 + sinr), 7)` in bits/s/Hz.
#[inline]
pub fn spectral_efficiency(sinr: f64) -> f64 {
    shannon_efficiency(sinr).min(SPECTRAL_EFFICIENCY_CAP)
}

/// Uncapped `log2(1 + sinr)`.
#[inline]
pub fn shannon_efficiency(sinr: f64) -> f64 {
    sinr.max(0.0).ln_1p() / std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkRate {
    pub link: Link,
    pub sinr: f64,
    pub spectral_efficiency: f64,
    /// Bits deliverable in one slot.
    pub rate_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkRates {
    pub links: ArrayVec<LinkRate, 2>,
}

impl LinkRates {
    pub fn rate_of(&self, link: Link) -> Option<f64> {
        self.links.iter().find(|r| r.link == link).map(|r| r.rate_bits)
    }

    pub(crate) fn from_sinrs(sinrs: &[(Link, f64)], bandwidth_hz: f64, slot_s: f64) -> Self {
        let links = sinrs
            .iter()
            .map(|&(link, s)| {
                let se = spectral_efficiency(s);
                LinkRate { link, sinr: s, spectral_efficiency: se, rate_bits: se * bandwidth_hz * slot_s }
            })
            .collect();
        Self { links }
    }
}

/// Capped rate of every active link in bits per slot.
pub fn link_rate(
    mode: TransmissionMode,
    powers: &PowerVector,
    channel: &ChannelState,
    bandwidth_hz: f64,
    slot_s: f64,
) -> Result<LinkRates> {
    let s = sinr(mode, powers, channel)?;
    Ok(LinkRates::from_sinrs(&s, bandwidth_hz, slot_s))
}

/// Debug dump `mode,link,sinr_db,spectral_efficiency` of every schedule at
/// maximum power.
pub fn sinr_table_csv(channel: &ChannelState) -> String {
    let mut s = String::from("mode,link,sinr_db,spectral_efficiency\n");
    let p = PowerVector::max(channel);
    for mode in TransmissionMode::enumerate(channel.n_ues()) {
        for (link, v) in sinr_unchecked(mode, &p, channel) {
            s.push_str(&format!("{mode},{link},{:.3},{:.4}\n", 10.0 * v.log10(), spectral_efficiency(v)));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PerKind;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const UNIT: PerKind = PerKind { macro_bs: 1.0, small_bs: 1.0, ue: 1.0 };

    /// Unit noise and unit max powers so gains read directly as SNRs.
    fn snr_channel(n_ues: usize) -> ChannelState {
        ChannelState::uniform(n_ues, 0.0, 0.0, UNIT, UNIT)
    }

    fn unit_powers() -> PowerVector {
        PowerVector { macro_w: 1.0, small_w: 1.0, ue_w: 1.0 }
    }

    #[test]
    fn fdd_without_self_interference() {
        let mut c = snr_channel(1);
        c.set_pair_gain(Node::MacroBs, Node::SmallBs, 15.85);
        let s = sinr(TransmissionMode::Fdd { dl: 0 }, &unit_powers(), &c).unwrap();
        assert_eq!(s[0].0, Link::BackhaulDl);
        assert_relative_eq!(s[0].1, 15.85, epsilon = 1e-12);
    }

    #[test]
    fn fdd_with_self_interference() {
        let mut c = snr_channel(1);
        c.set_pair_gain(Node::MacroBs, Node::SmallBs, 15.85);
        c.set_sic(0.0, 3.98);
        let s = sinr(TransmissionMode::Fdd { dl: 0 }, &unit_powers(), &c).unwrap();
        assert_relative_eq!(s[0].1, 15.85 / 4.98, epsilon = 1e-12);
        assert_relative_eq!(s[0].1, 3.18, epsilon = 5e-3);
    }

    #[test]
    fn each_fd_mode_matches_its_closed_form() {
        let mut c = snr_channel(3);
        let (m, s, u, d) = (Node::MacroBs, Node::SmallBs, Node::Ue(0), Node::Ue(1));
        let g = |i: u32| 1.0 + i as f64;
        c.set_gain(m, s, g(1));
        c.set_gain(s, m, g(2));
        c.set_gain(s, d, g(3));
        c.set_gain(u, s, g(4));
        c.set_gain(m, d, g(5));
        c.set_gain(u, m, g(6));
        c.set_gain(u, d, g(7));
        c.set_sic(0.3, 0.2);
        c.set_noise_w(PerKind { macro_bs: 0.5, small_bs: 0.7, ue: 0.9 });
        let p = PowerVector { macro_w: 2.0, small_w: 0.5, ue_w: 0.25 };
        let (pm, ps, pu) = (p.macro_w, p.small_w, p.ue_w);
        let (nm, ns, nd) = (0.5, 0.7, 0.9);
        let check = |mode, expect: [f64; 2]| {
            let got = sinr(mode, &p, &c).unwrap();
            assert_relative_eq!(got[0].1, expect[0], max_relative = 1e-12);
            assert_relative_eq!(got[1].1, expect[1], max_relative = 1e-12);
        };
        check(TransmissionMode::Fdd { dl: 1 }, [pm * g(1) / (ps * 0.2 + ns), ps * g(3) / (pm * g(5) + nd)]);
        check(TransmissionMode::Fdu { ul: 0 }, [pu * g(4) / (ps * 0.2 + ns), ps * g(2) / (pu * g(6) + nm)]);
        check(TransmissionMode::Fdb, [pm * g(1) / (ps * 0.2 + ns), ps * g(2) / (pm * 0.3 + nm)]);
        // Uplink noise is the small BS's own noise.
        check(TransmissionMode::Fda { ul: 0, dl: 1 }, [ps * g(3) / (pu * g(7) + nd), pu * g(4) / (ps * 0.2 + ns)]);
        assert_relative_eq!(sinr(TransmissionMode::HdBackhaulDl, &p, &c).unwrap()[0].1, pm * g(1) / ns);
        assert_relative_eq!(sinr(TransmissionMode::HdBackhaulUl, &p, &c).unwrap()[0].1, ps * g(2) / nm);
        assert_relative_eq!(sinr(TransmissionMode::HdAccessDl { dl: 1 }, &p, &c).unwrap()[0].1, ps * g(3) / nd);
        assert_relative_eq!(sinr(TransmissionMode::HdAccessUl { ul: 0 }, &p, &c).unwrap()[0].1, pu * g(4) / ns);
    }

    #[test]
    fn zero_transmit_power_zero_sinr() {
        let mut c = snr_channel(2);
        c.set_pair_gain(Node::MacroBs, Node::SmallBs, 10.0);
        let p = PowerVector { macro_w: 0.0, small_w: 1.0, ue_w: 1.0 };
        let s = sinr(TransmissionMode::Fdd { dl: 1 }, &p, &c).unwrap();
        assert_eq!(s[0].1, 0.0);
        let r = link_rate(TransmissionMode::HdBackhaulDl, &p, &c, 1e7, 1e-3).unwrap();
        assert_eq!(r.links[0].rate_bits, 0.0);
    }

    #[test]
    fn fda_same_ue_rejected() {
        let c = snr_channel(2);
        assert!(matches!(
            sinr(TransmissionMode::Fda { ul: 1, dl: 1 }, &unit_powers(), &c),
            Err(Error::Mode { .. })
        ));
        assert!(sinr(TransmissionMode::Fdd { dl: 2 }, &unit_powers(), &c).is_err());
    }

    #[test]
    fn spectral_efficiency_values() {
        assert_eq!(spectral_efficiency(0.0), 0.0);
        assert_relative_eq!(spectral_efficiency(15.849), 4.0746, epsilon = 1e-3);
        assert_eq!(spectral_efficiency(1e6), 7.0);
    }

    #[test]
    fn rate_per_slot() {
        let mut c = snr_channel(1);
        c.set_pair_gain(Node::MacroBs, Node::SmallBs, 15.0); // log2(16) = 4
        let r = link_rate(TransmissionMode::HdBackhaulDl, &unit_powers(), &c, 1e7, 1e-3).unwrap();
        assert_relative_eq!(r.links[0].rate_bits, 40_000.0, epsilon = 1e-6);
        c.set_pair_gain(Node::MacroBs, Node::SmallBs, 1e9);
        let r = link_rate(TransmissionMode::HdBackhaulDl, &unit_powers(), &c, 1e7, 1e-3).unwrap();
        assert_relative_eq!(r.links[0].rate_bits, 70_000.0, epsilon = 1e-6);
    }

    #[test]
    fn schedule_counts() {
        let count = |n, fam| TransmissionMode::enumerate(n).into_iter().filter(|m| m.family() == fam).count();
        assert_eq!(count(1, ModeFamily::Fda), 0);
        assert_eq!(count(2, ModeFamily::Fda), 2);
        assert_eq!(count(2, ModeFamily::Fdd), 2);
        assert_eq!(count(2, ModeFamily::Fdu), 2);
        assert_eq!(TransmissionMode::enumerate(10).len(), 133);
        assert_eq!(count(10, ModeFamily::Hd), 22);
        for n in 1..6 {
            assert_eq!(TransmissionMode::enumerate(n).len(), 2 + 2 * n + 2 * n + 1 + n * (n - 1));
        }
    }

    #[test]
    fn hd_sub_modes_are_single_link() {
        for m in TransmissionMode::enumerate(4) {
            assert_eq!(m.links().len(), if m.is_full_duplex() { 2 } else { 1 });
            m.validate(4).unwrap();
        }
    }

    #[test]
    fn sinr_table_lists_every_link() {
        let c = snr_channel(2);
        let csv = sinr_table_csv(&c);
        // 6 HD single links + 2+2+1+2 FD modes with two links each
        assert_eq!(csv.lines().count(), 1 + 6 + 2 * 7);
    }

    fn random_channel(g: &[f64; 10]) -> ChannelState {
        let mut c = snr_channel(2);
        let (m, s, u, d) = (Node::MacroBs, Node::SmallBs, Node::Ue(0), Node::Ue(1));
        c.set_gain(m, s, g[0]);
        c.set_gain(s, m, g[1]);
        c.set_gain(s, d, g[2]);
        c.set_gain(u, s, g[3]);
        c.set_gain(m, d, g[4]);
        c.set_gain(u, m, g[5]);
        c.set_gain(u, d, g[6]);
        c.set_sic(g[7], g[8]);
        c.set_noise_w(PerKind { macro_bs: g[9], small_bs: g[9] * 2.0, ue: g[9] * 0.5 });
        c
    }

    fn fd_modes() -> [TransmissionMode; 4] {
        [
            TransmissionMode::Fdd { dl: 1 },
            TransmissionMode::Fdu { ul: 0 },
            TransmissionMode::Fdb,
            TransmissionMode::Fda { ul: 0, dl: 1 },
        ]
    }

    proptest! {
        #[test]
        fn se_is_monotone_and_capped(a in 0.0f64..1e9, b in 0.0f64..1e9) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(spectral_efficiency(lo) <= spectral_efficiency(hi));
            prop_assert!(spectral_efficiency(hi) <= 7.0);
        }

        #[test]
        fn sinr_monotone_in_serving_and_interfering_power(
            g in prop::array::uniform10(0.01f64..10.0),
            p in prop::array::uniform3(0.1f64..1.0),
            k in 1.01f64..3.0,
        ) {
            let c = random_channel(&g);
            for mode in fd_modes() {
                let base = PowerVector { macro_w: p[0], small_w: p[1], ue_w: p[2] };
                let s0 = sinr(mode, &base, &c).unwrap();
                let links = mode.links();
                for i in 0..2 {
                    let mut up = base;
                    up.set(links[i].tx(), base.of(links[i].tx()) * k);
                    let s1 = sinr(mode, &up, &c).unwrap();
                    prop_assert!(s1[i].1 > s0[i].1, "serving power increase must increase SINR");
                    prop_assert!(s1[1 - i].1 < s0[1 - i].1, "interferer power increase must decrease SINR");
                }
            }
        }

        #[test]
        fn fd_reduces_to_hd_without_coupling(g in prop::array::uniform10(0.01f64..10.0), p in prop::array::uniform3(0.0f64..1.0)) {
            let mut c = random_channel(&g);
            c.set_sic(0.0, 0.0);
            let (m, d, u) = (Node::MacroBs, Node::Ue(1), Node::Ue(0));
            c.set_gain(m, d, 0.0);
            c.set_gain(u, m, 0.0);
            c.set_gain(u, d, 0.0);
            let pw = PowerVector { macro_w: p[0], small_w: p[1], ue_w: p[2] };
            for mode in fd_modes() {
                for (link, v) in sinr(mode, &pw, &c).unwrap() {
                    let hd = match link {
                        Link::BackhaulDl => TransmissionMode::HdBackhaulDl,
                        Link::BackhaulUl => TransmissionMode::HdBackhaulUl,
                        Link::AccessDl(dl) => TransmissionMode::HdAccessDl { dl },
                        Link::AccessUl(ul) => TransmissionMode::HdAccessUl { ul },
                    };
                    prop_assert_eq!(v, sinr(hd, &pw, &c).unwrap()[0].1);
                }
            }
        }

        #[test]
        fn hd_snr_ignores_other_powers(g in prop::array::uniform10(0.01f64..10.0), p in prop::array::uniform3(0.0f64..1.0), q in prop::array::uniform3(0.0f64..1.0)) {
            let c = random_channel(&g);
            let a = PowerVector { macro_w: p[0], small_w: p[1], ue_w: p[2] };
            for mode in [TransmissionMode::HdBackhaulDl, TransmissionMode::HdBackhaulUl, TransmissionMode::HdAccessDl { dl: 1 }, TransmissionMode::HdAccessUl { ul: 0 }] {
                let tx = mode.links()[0].tx();
                let mut b = PowerVector { macro_w: q[0], small_w: q[1], ue_w: q[2] };
                b.set(tx, a.of(tx));
                prop_assert_eq!(sinr(mode, &a, &c).unwrap()[0].1, sinr(mode, &b, &c).unwrap()[0].1);
            }
        }
    }
}
