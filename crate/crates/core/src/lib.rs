//! Energy demand modeling for hardware video decoders from software profiling.
//!
//! Profiles of software decoders (callgrind processor events, `perf stat`
//! counters, decoding time) are regressed onto measured decoding energies.
//! Models trained on codecs with hardware measurements predict the hardware
//! energy of another codec, and the relative expected hardware energy demand
//! compares two software decoders through such a model.

pub mod benchgen;
pub mod cli;
pub mod crosscodec;
pub mod evaluation;
pub mod ingest;
pub mod regression;
pub mod rehwed;
pub mod types;
