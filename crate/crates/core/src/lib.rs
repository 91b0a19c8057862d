//! Solver library and batch-simulation harness for RIS-aided secure
//! integrated radar and communication systems.
//!
//! The library covers two transmitter architectures: a radar/communication
//! co-existence (RCCE) link where separate radar and communication signals
//! share the spectrum, and a dual-functional radar and communication (DFRC)
//! link where a single waveform serves both roles. For each it provides
//! secrecy-rate maximisation under a radar detection constraint, plus a
//! worst-case robust variant under bounded channel-state uncertainty.
//!
//! Modules:
//! - [`channels`]: propagation channels, steering vectors, path loss and
//!   CSI-uncertainty bounds.
//! - [`metrics`]: rates, radar SINR/SNR and the lifted quadratic forms the
//!   optimizers consume.
//! - [`sdp`]: a dense primal-dual interior-point solver for small complex
//!   Hermitian SDPs, plus Gaussian randomization for rank-one recovery.
//! - [`manifold`]: Riemannian conjugate-gradient kernel on the complex unit
//!   sphere and the oblique (unit-modulus) manifold.
//! - [`rcce`]: ZF-based block coordinate descent for the RCCE system.
//! - [`dfrc`]: Dinkelbach-method and RCG alternating optimization for the
//!   DFRC system.
//! - [`robust`]: worst-case secure design under bounded cascaded-channel and
//!   angle uncertainty, via S-procedure LMIs.
//! - [`harness`]: scenario configuration, Monte Carlo experiments and result
//!   serialization.

pub mod channels;
pub mod dfrc;
pub mod manifold;
pub mod rcce;
pub mod metrics;
pub mod sdp;

use num_complex::Complex;

/// Complex scalar used throughout.
pub type C64 = Complex<f64>;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
/// Dense complex row vector.
pub type CRow = nalgebra::RowDVector<C64>;
/// Dense real matrix.
pub type RMat = nalgebra::DMatrix<f64>;
/// Dense real vector.
pub type RVec = nalgebra::DVector<f64>;

/// Convert a power quantity in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert a linear power quantity to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Convert a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}
