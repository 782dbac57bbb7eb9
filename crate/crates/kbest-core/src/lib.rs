//! Lattice-reduction-aided complex K-best MIMO detection.
//!
//! The crate is organized around the receive chain: [`linalg`] provides the
//! channel preprocessing (MMSE extension, shifting/scaling, complex LLL
//! reduction, QR), [`detector`] runs the level-by-level K-best search with
//! Schnorr-Euchner on-demand child expansion truncated by the `rlimit`
//! budget, [`fixedpoint`] supplies the saturating Q-format arithmetic the
//! hardware-faithful datapath runs on, [`pipeline`] re-times detector traces
//! onto the per-level FSM / inter-level pipeline schedule and evaluates the
//! throughput/latency/NHE arithmetic, and [`simkit`] is the Monte-Carlo
//! link-level harness (Gray-mapped QAM, i.i.d. Rayleigh channels, BER sweeps,
//! brute-force ML oracle, fixed-vs-floating degradation measurement).
//!
//! The `kbest` binary in `src/bin` exposes the detection, sweep, pipeline
//! and degradation commands; [`cli`] holds its config/manifest machinery.

pub mod cli;
pub mod detector;
pub mod fixedpoint;
pub mod linalg;
pub mod pipeline;
pub mod simkit;
