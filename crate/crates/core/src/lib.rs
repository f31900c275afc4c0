//! Ergodic rate and outage analysis of simultaneous access (SA) and
//! selection diversity access (SDA) in symbiotic radio.
//!
//! Backscatter strengths are handled in units of their mean `λ = λ_h λ_g`.

pub mod error;
pub mod specfun;
pub mod channel;
pub mod distfit;
pub mod rates;
pub mod outage;
pub mod montecarlo;
pub mod cli;
