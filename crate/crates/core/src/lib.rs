//! Cost-aware tool orchestration: tools with reliability costs, plan
//! selection by minimum cost, plan execution with traces, and a benchmark
//! harness with independent ground truth.

pub mod benchmark;
pub mod calculator;
pub mod chat;
pub mod classify;
pub mod cost;
pub mod executor;
pub mod forecast;
pub mod plan;
pub mod planner;
pub mod script;
pub mod table;
pub mod value;
