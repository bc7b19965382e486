//! CI gamification engine.
//!
//! After every build the engine ingests coverage, mutation, static-analysis
//! and test reports together with commit metadata, then verifies and tops up
//! per-developer test challenges, advances quests, unlocks achievements and
//! keeps a points leaderboard.

pub mod model;
pub mod scoring;
pub mod service;
pub mod sim;
pub mod store;
pub mod generate;
pub mod ingest;
pub mod rng;
pub mod vcs;
pub mod verify;
