//! Virtual topology reconfiguration laboratory for wavelength-routed
//! optical networks.
//!
//! [`graph`] holds the fiber plant, [`traffic`] the demand matrices,
//! [`netstate`] the live lightpath set and its resources. Two controllers
//! reconfigure it: the attractor-selection controller in [`asb`] and the
//! greedy heuristic in [`hlda`]. [`harness`] runs seeded experiments and
//! writes CSV results.

pub mod asb;
pub mod graph;
pub mod harness;
pub mod hlda;
pub mod metrics;
pub mod netstate;
pub mod traffic;
