//! Link-level simulator and optimization library for a full-duplex (FD)
//! self-backhauled small cell.
//!
//! A single macro BS wirelessly backhauls one small-cell BS serving `N` UEs.
//! Both base stations are FD capable; UEs are half duplex. Each slot the
//! scheduler picks one of four FD modes (FDD, FDU, FDB, FDA) or one of the
//! half-duplex modes using back-pressure link weights, with FD transmit
//! powers chosen by successive geometric programming.
//!
//! Module map:
//!
//! - [`topology`]: random drops and the path-loss table
//! - [`channel`]: per-drop linear gains, SIC factors and noise powers
//! - [`radio`]: transmission modes, SINR per mode, capped spectral efficiency
//! - [`capacity`]: bufferless joint spectral-efficiency comparison of HD and FD
//! - [`power`]: two-link weighted sum-rate power allocation and a grid oracle
//! - [`scheduler`]: queues, back-pressure weights, schedule selection
//! - [`sim`]: FTP traffic, slotted Monte Carlo driver, metrics and reports
//!
//! UE indices are zero-based throughout.

pub mod capacity;
pub mod channel;
pub mod config;
pub mod error;
pub mod power;
pub mod radio;
pub mod scheduler;
pub mod sim;
pub mod topology;
pub mod units;

pub use channel::{realize_channel, ChannelState};
pub use config::SimConfig;
pub use error::{Error, Result};
pub use radio::{Link, PowerVector, TransmissionMode};
pub use topology::{drop_topology, Node, Topology};
