//! Competition harness for geometry automated theorem provers.
//!
//! The pipeline is a sequence of independent stages:
//!
//! * [`geoform`] reads and writes problems in the construction language, the
//!   exchange document and the GeoGebra script dialect;
//! * [`corpus`] validates and selects the problem set of an edition;
//! * [`adapters`] describes how each prover is invoked and how its output is
//!   turned into a [`adapters::Verdict`];
//! * [`runner`] executes the problem × prover matrix under resource limits and
//!   appends every outcome to an event log;
//! * [`scoring`] adjudicates verdicts against ground truth and ranks provers;
//! * [`report`] renders leaderboards;
//! * [`service`] serves live status from the event log, and polls it.

pub mod adapters;
pub mod config;
pub mod corpus;
pub mod geoform;
pub mod report;
pub mod runner;
pub mod scoring;
pub mod service;

/// Version string recorded in run manifests.
pub const TOOL_VERSION: &str = concat!("gasc ", env!("CARGO_PKG_VERSION"));
