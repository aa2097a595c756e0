//! Frequency-unit bookkeeping.
//!
//! Every user-facing number — config fields, CSV columns, report values — is a
//! *regular* frequency in hertz (magnetic fields in gauss, times in seconds).
//! Internally every generator runs in angular units: each Hz quantity is
//! multiplied by 2π exactly once, at the API boundary, and every reported
//! frequency is divided by 2π on the way out.
//!
//! The same factor is applied to Hamiltonian frequencies *and* to Lindblad
//! rates. Mixing conventions (angular Hamiltonian, regular rates) would make
//! the pump-induced rate formulas inhomogeneous — their Lorentzian
//! denominators Γ² + Δ² only make sense with Γ and Δ in the same units — and
//! would silently skew every full-versus-effective comparison. Because all
//! closed-form rate expressions are homogeneous of degree one in frequency,
//! steady-state observables computed this way agree bit-for-bit with
//! evaluating the printed formulas in plain Hz; only the wall-clock scale of
//! time integration depends on the convention.

/// The one place the 2π lives.
pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Regular frequency in Hz → angular frequency in rad/s.
#[inline]
pub fn to_angular(hz: f64) -> f64 {
    TWO_PI * hz
}

/// Angular frequency in rad/s → regular frequency in Hz.
#[inline]
pub fn to_hz(angular: f64) -> f64 {
    angular / TWO_PI
}
