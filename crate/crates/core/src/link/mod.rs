//! Coded link: QAM mapping, rate-1/3 convolutional coding, one-tap
//! equalization, the end-to-end trial, and the closed-form SINR and UFMC
//! noise-enhancement expressions.

mod analysis;
mod equalizer;
mod fec;
mod qam;
mod trial;

pub use analysis::{db_to_linear, sinr_analytical, sinr_monte_carlo, sinr_monte_carlo_taps, ufmc_snr_loss};
pub use equalizer::{equalize_one_tap, Equalized, EqualizerScheme, ERASURE_THRESHOLD};
pub use fec::{coded_len, fec_decode, fec_encode, info_len_for, CodedBlock, CONSTRAINT_LEN, GENERATORS};
pub use qam::{hard_decisions, qam_demap_llr, qam_map, Modulation};
pub use trial::{run_link_trial, ChannelModel, LinkParams, TrialResult};
