//! Joint spectral efficiency of a bufferless relay: half duplex versus the
//! two FD pairings (mode 1 = FDD + FDU, mode 2 = FDB + FDA).
//!
//! All quantities are normalized by receiver noise, so an input such as
//! `ms` is `G_MS / N_S` and `si_small` is `gamma_S / N_S`. Rates here are
//! uncapped `log2(1 + x)`.

use std::fmt::Write as _;

use crate::units::db_to_linear;

#[inline]
fn log2_1p(x: f64) -> f64 {
    x.max(0.0).ln_1p() / std::f64::consts::LN_2
}

/// Single-hop half-duplex SNRs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HdSnrs {
    /// Macro to small BS.
    pub s_hdd: f64,
    /// Small BS to downlink UE.
    pub d_hdd: f64,
    /// Uplink UE to small BS.
    pub s_hdu: f64,
    /// Small BS to macro.
    pub m_hdu: f64,
}

/// FDD and FDU link SINRs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode1Sinrs {
    pub s_fdd: f64,
    pub d_fdd: f64,
    pub s_fdu: f64,
    pub m_fdu: f64,
}

/// FDB and FDA link SINRs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode2Sinrs {
    pub s_fdb: f64,
    pub m_fdb: f64,
    pub d_fda: f64,
    pub s_fda: f64,
}

/// Channel time is split evenly between downlink and uplink.
pub fn c_hd(s: &HdSnrs) -> f64 {
    0.5 * log2_1p(s.s_hdd.min(s.d_hdd)) + 0.5 * log2_1p(s.s_hdu.min(s.m_hdu))
}

pub fn c_fd_mode1(s: &Mode1Sinrs) -> f64 {
    log2_1p(s.s_fdd.min(s.d_fdd)) + log2_1p(s.s_fdu.min(s.m_fdu))
}

/// Downlink and uplink terms of mode 2, returned separately.
pub fn c_fd_mode2_terms(s: &Mode2Sinrs) -> (f64, f64) {
    (log2_1p(s.s_fdb.min(s.d_fda)), log2_1p(s.s_fda.min(s.m_fdb)))
}

pub fn c_fd_mode2(s: &Mode2Sinrs) -> f64 {
    let (dl, ul) = c_fd_mode2_terms(s);
    dl + ul
}

/// Noise-normalized link and interference levels (linear) plus the fixed
/// transmit powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub ms: f64,
    pub sm: f64,
    pub sd: f64,
    pub us: f64,
    /// `G_MD / N_D`.
    pub md: f64,
    /// `G_UM / N_M`.
    pub um: f64,
    /// `G_UD / N_D`.
    pub ud: f64,
    pub si_small: f64,
    pub si_macro: f64,
    pub p_macro: f64,
    pub p_small: f64,
    pub p_ue: f64,
}

impl Scenario {
    /// Every single-hop SNR at `snr_db`, no interference, unit powers.
    pub fn symmetric(snr_db: f64) -> Self {
        let s = db_to_linear(snr_db);
        Self {
            ms: s,
            sm: s,
            sd: s,
            us: s,
            md: 0.0,
            um: 0.0,
            ud: 0.0,
            si_small: 0.0,
            si_macro: 0.0,
            p_macro: 1.0,
            p_small: 1.0,
            p_ue: 1.0,
        }
    }

    pub fn hd(&self) -> HdSnrs {
        HdSnrs {
            s_hdd: self.p_macro * self.ms,
            d_hdd: self.p_small * self.sd,
            s_hdu: self.p_ue * self.us,
            m_hdu: self.p_small * self.sm,
        }
    }

    pub fn mode1(&self) -> Mode1Sinrs {
        Mode1Sinrs {
            s_fdd: self.p_macro * self.ms / (self.p_small * self.si_small + 1.0),
            d_fdd: self.p_small * self.sd / (self.p_macro * self.md + 1.0),
            s_fdu: self.p_ue * self.us / (self.p_small * self.si_small + 1.0),
            m_fdu: self.p_small * self.sm / (self.p_ue * self.um + 1.0),
        }
    }

    pub fn mode2(&self) -> Mode2Sinrs {
        Mode2Sinrs {
            s_fdb: self.p_macro * self.ms / (self.p_small * self.si_small + 1.0),
            m_fdb: self.p_small * self.sm / (self.p_macro * self.si_macro + 1.0),
            d_fda: self.p_small * self.sd / (self.p_ue * self.ud + 1.0),
            s_fda: self.p_ue * self.us / (self.p_small * self.si_small + 1.0),
        }
    }

    pub fn capacities(&self) -> (f64, f64, f64) {
        (c_hd(&self.hd()), c_fd_mode1(&self.mode1()), c_fd_mode2(&self.mode2()))
    }
}

/// Which interference level the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParam {
    /// Macro-UE coupling `G_MD/N_D = G_UM/N_M`.
    Direct,
    /// Self-interference `gamma_S/N_S = gamma_M/N_M`.
    SelfInterference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// `G_MS/N_S, G_SM/N_M, G_SD/N_D, G_US/N_S` in dB.
    pub base_snr_db: [f64; 4],
    pub swept: SweptParam,
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
    /// Linear level of whichever of direct / self-interference is not swept.
    pub fixed_level: f64,
    /// UE-to-UE coupling for the three mode-2 cases, as dB offsets from the
    /// swept parameter (below, equal, above).
    pub u2d_offsets_db: [f64; 3],
    pub power_w: f64,
}

impl SweepConfig {
    /// No self-interference, sweep the macro-UE coupling.
    pub fn fig3() -> Self {
        Self {
            base_snr_db: [12.0; 4],
            swept: SweptParam::Direct,
            start_db: -10.0,
            stop_db: 30.0,
            step_db: 0.5,
            fixed_level: 0.0,
            u2d_offsets_db: [-6.0, 0.0, 6.0],
            power_w: 1.0,
        }
    }

    /// No macro-UE coupling, sweep the self-interference.
    pub fn fig4() -> Self {
        Self { swept: SweptParam::SelfInterference, ..Self::fig3() }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "fig3" => Some(Self::fig3()),
            "fig4" => Some(Self::fig4()),
            _ => None,
        }
    }

    /// Grid of swept values in dB; empty when `start > stop`.
    pub fn grid(&self) -> Vec<f64> {
        if !(self.step_db > 0.0) || self.start_db > self.stop_db {
            return Vec::new();
        }
        let n = ((self.stop_db - self.start_db) / self.step_db + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start_db + i as f64 * self.step_db).collect()
    }

    /// Scenario at swept value `x_db` with UE-to-UE level `ud` (linear).
    pub fn scenario(&self, x_db: f64, ud: f64) -> Scenario {
        let [ms, sm, sd, us] = self.base_snr_db.map(db_to_linear);
        let x = db_to_linear(x_db);
        let (direct, si) = match self.swept {
            SweptParam::Direct => (x, self.fixed_level),
            SweptParam::SelfInterference => (self.fixed_level, x),
        };
        Scenario {
            ms,
            sm,
            sd,
            us,
            md: direct,
            um: direct,
            ud,
            si_small: si,
            si_macro: si,
            p_macro: self.power_w,
            p_small: self.power_w,
            p_ue: self.power_w,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub param_db: f64,
    pub c_hd: f64,
    pub c_fd1: f64,
    pub c_fd2: [f64; 3],
}

/// First swept value at which each FD curve drops below HD, linearly
/// interpolated between grid points. `None` if it never does.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Crossovers {
    pub fd1: Option<f64>,
    pub fd2: [Option<f64>; 3],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub crossovers: Crossovers,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("param_db,c_hd,c_fd1,c_fd2_case1,c_fd2_case2,c_fd2_case3\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                r.param_db, r.c_hd, r.c_fd1, r.c_fd2[0], r.c_fd2[1], r.c_fd2[2]
            );
        }
        s
    }
}

fn crossover(rows: &[SweepRow], fd: impl Fn(&SweepRow) -> f64) -> Option<f64> {
    let gap = |r: &SweepRow| fd(r) - r.c_hd;
    let first = rows.iter().position(|r| gap(r) < 0.0)?;
    if first == 0 {
        return Some(rows[0].param_db);
    }
    let (a, b) = (&rows[first - 1], &rows[first]);
    let (ga, gb) = (gap(a), gap(b));
    Some(a.param_db + (b.param_db - a.param_db) * ga / (ga - gb))
}

pub fn sweep(config: &SweepConfig) -> SweepTable {
    let rows: Vec<SweepRow> = config
        .grid()
        .into_iter()
        .map(|x| {
            let base = config.scenario(x, 0.0);
            let (c_hd, c_fd1, _) = base.capacities();
            let c_fd2 = config.u2d_offsets_db.map(|off| c_fd_mode2(&config.scenario(x, db_to_linear(x + off)).mode2()));
            SweepRow { param_db: x, c_hd, c_fd1, c_fd2 }
        })
        .collect();
    let crossovers = Crossovers {
        fd1: crossover(&rows, |r| r.c_fd1),
        fd2: [0, 1, 2].map(|k| crossover(&rows, |r| r.c_fd2[k])),
    };
    SweepTable { rows, crossovers }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn hd_anchor_at_12_db() {
        let s = Scenario::symmetric(12.0);
        assert_relative_eq!(c_hd(&s.hd()), (1.0 + db_to_linear(12.0)).log2(), max_relative = 1e-12);
        assert_relative_eq!(c_hd(&s.hd()), 4.075, epsilon = 1e-3);
    }

    #[test]
    fn hd_zero_and_one_sided() {
        let zero = HdSnrs { s_hdd: 0.0, d_hdd: 0.0, s_hdu: 0.0, m_hdu: 0.0 };
        assert_eq!(c_hd(&zero), 0.0);
        let s = db_to_linear(12.0);
        let dl_only = HdSnrs { s_hdd: s, d_hdd: s, s_hdu: 0.0, m_hdu: s };
        assert_relative_eq!(c_hd(&dl_only), 2.0373, epsilon = 1e-3);
    }

    #[test]
    fn fd_anchors_without_interference() {
        let s = Scenario::symmetric(12.0);
        let (hd, fd1, fd2) = s.capacities();
        assert_relative_eq!(fd1, 2.0 * hd, max_relative = 1e-12);
        assert_relative_eq!(fd2, 2.0 * hd, max_relative = 1e-12);
        assert_relative_eq!(fd1, 8.15, epsilon = 1e-2);
    }

    #[test]
    fn direct_interference_at_signal_level() {
        let mut s = Scenario::symmetric(12.0);
        s.md = db_to_linear(12.0);
        s.um = s.md;
        let fd1 = c_fd_mode1(&s.mode1());
        let per_dir = (1.0 + s.ms / (1.0 + s.md)).log2();
        assert_relative_eq!(fd1, 2.0 * per_dir, max_relative = 1e-12);
        assert_relative_eq!(per_dir, 1.94f64.log2(), epsilon = 2e-3);
    }

    #[test]
    fn zero_hop_kills_direction() {
        let mut s = Scenario::symmetric(12.0);
        s.sd = 0.0;
        let m1 = s.mode1();
        assert_relative_eq!(c_fd_mode1(&m1), log2_1p(m1.s_fdu.min(m1.m_fdu)), max_relative = 1e-12);
    }

    #[test]
    fn mode2_uplink_equals_hd_with_symmetric_access() {
        let base = Scenario::symmetric(12.0);
        for ud_db in [-20.0, 0.0, 12.0, 40.0] {
            let mut s = base;
            s.ud = db_to_linear(ud_db);
            let (_, ul) = c_fd_mode2_terms(&s.mode2());
            assert_relative_eq!(ul, c_hd(&s.hd()), max_relative = 1e-12);
        }
    }

    #[test]
    fn huge_u2d_kills_mode2_downlink_only() {
        let mut s = Scenario::symmetric(12.0);
        let (_, ul0) = c_fd_mode2_terms(&s.mode2());
        s.ud = 1e15;
        let (dl, ul) = c_fd_mode2_terms(&s.mode2());
        assert!(dl < 1e-12);
        assert_eq!(ul, ul0);
    }

    #[test]
    fn fig3_shape() {
        let t = sweep(&SweepConfig::fig3());
        assert_eq!(t.rows.len(), 81);
        for w in t.rows.windows(2) {
            assert!(w[1].c_fd1 <= w[0].c_fd1 + 1e-12);
        }
        let x = t.crossovers.fd1.expect("mode 1 falls below HD");
        // log2(1 + s/(1+x)) = C_HD / 2  ->  x = s / (sqrt(1+s) - 1) - 1
        let s = db_to_linear(12.0);
        let exact = 10.0 * (s / ((1.0 + s).sqrt() - 1.0) - 1.0).log10();
        assert!((x - exact).abs() < 0.1, "crossover {x} vs {exact}");
        // Cases 1-2 (u2d <= direct): mode 2 at least as good as mode 1.
        for r in &t.rows {
            assert!(r.c_fd2[0] >= r.c_fd1 - 1e-12);
            assert!(r.c_fd2[1] >= r.c_fd1 - 1e-12);
            assert!(r.c_fd2[0] >= r.c_hd);
        }
        // Case 3: mode 1 ahead at low coupling, behind later.
        assert!(t.rows[0].c_fd1 > t.rows[0].c_fd2[2]);
        assert!(t.rows.last().unwrap().c_fd1 < t.rows.last().unwrap().c_fd2[2]);
    }

    #[test]
    fn fig4_shape() {
        let t = sweep(&SweepConfig::fig4());
        for w in t.rows.windows(2) {
            assert!(w[1].c_fd1 <= w[0].c_fd1 + 1e-12);
            for k in 0..3 {
                assert!(w[1].c_fd2[k] <= w[0].c_fd2[k] + 1e-12);
            }
        }
        assert!(t.crossovers.fd1.is_some());
        assert!(t.crossovers.fd2.iter().all(Option::is_some));
        for r in &t.rows {
            assert_relative_eq!(r.c_fd2[0], r.c_fd1, max_relative = 1e-12);
            assert_relative_eq!(r.c_fd2[1], r.c_fd1, max_relative = 1e-12);
            assert!(r.c_fd2[2] <= r.c_fd1 + 1e-12);
        }
    }

    #[test]
    fn empty_range_empty_table() {
        let cfg = SweepConfig { start_db: 5.0, stop_db: 0.0, ..SweepConfig::fig3() };
        let t = sweep(&cfg);
        assert!(t.rows.is_empty());
        assert_eq!(t.crossovers, Crossovers::default());
        assert_eq!(t.to_csv().lines().count(), 1);
    }

    #[test]
    fn csv_schema() {
        let t = sweep(&SweepConfig { stop_db: -9.0, ..SweepConfig::fig3() });
        let csv = t.to_csv();
        assert!(csv.starts_with("param_db,c_hd,c_fd1,c_fd2_case1,c_fd2_case2,c_fd2_case3\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    proptest! {
        #[test]
        fn fd_nonincreasing_in_interference(base in 0.0f64..30.0, a in -20.0f64..40.0, b in -20.0f64..40.0, ud in -20.0f64..40.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let mut s = Scenario::symmetric(base);
            s.ud = db_to_linear(ud);
            let with = |direct: f64, si: f64| {
                let mut x = s;
                x.md = direct; x.um = direct; x.si_small = si; x.si_macro = si;
                x
            };
            let (l, h) = (db_to_linear(lo), db_to_linear(hi));
            prop_assert!(c_fd_mode1(&with(h, 0.0).mode1()) <= c_fd_mode1(&with(l, 0.0).mode1()) + 1e-12);
            prop_assert!(c_fd_mode1(&with(0.0, h).mode1()) <= c_fd_mode1(&with(0.0, l).mode1()) + 1e-12);
            prop_assert!(c_fd_mode2(&with(0.0, h).mode2()) <= c_fd_mode2(&with(0.0, l).mode2()) + 1e-12);
        }

        #[test]
        fn modes_coincide_when_u2d_below_si(base in 0.0f64..30.0, si_db in -20.0f64..40.0, below in 0.0f64..30.0) {
            let mut s = Scenario::symmetric(base);
            s.si_small = db_to_linear(si_db);
            s.si_macro = s.si_small;
            s.ud = db_to_linear(si_db - below);
            prop_assert!((c_fd_mode1(&s.mode1()) - c_fd_mode2(&s.mode2())).abs() < 1e-12);
        }
    }
}
