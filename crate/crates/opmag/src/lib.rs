//! Master-equation simulation of optically pumped alkali-metal-vapor
//! magnetometers on the D1 line.
//!
//! The crate models a spin-polarized alkali vapor driven by a circularly
//! polarized pump beam and probed by a weak transverse RF field. Two levels
//! of description are provided and kept mutually consistent:
//!
//! * the **full** Lindblad master equation on the combined ²S₁/₂ ⊕ ²P₁/₂
//!   hyperfine space (dimension 8I + 4), including optical pumping,
//!   spontaneous decay, collisional quenching, spin-destruction and
//!   spin-exchange collisions, and Zeeman precession;
//! * the **eliminated** equation on the ground manifold alone (dimension
//!   4I + 2), obtained by adiabatically removing the short-lived excited
//!   states; pumping appears through frequency-dependent rate tables and the
//!   pump's light shift.
//!
//! Spin-exchange enters as a mean-field nonlinearity: the generator depends
//! on ⟨S_z⟩ and ⟨S_±⟩ of the state it acts on. Steady states are found by a
//! damped self-consistency iteration, and the magnetic-resonance response is
//! taken from the linearization around that steady state.
//!
//! The top-level workflow (also exposed by the `opmag` CLI) sweeps the pump
//! detuning and records the resonance frequency shift (light shift) and
//! linewidth (light narrowing / broadening) of the driven Zeeman resonance.
//!
//! # Units
//!
//! Every public interface speaks Hz (and gauss for fields); see [`units`]
//! for the conversion convention used internally.

pub mod analytics;
pub mod basis;
pub mod config;
pub mod effective;
mod error;
pub mod full;
pub mod ode;
pub mod params;
pub mod response;
pub mod steady;
pub mod superop;
pub mod sweep;
pub mod units;

pub use error::{io_err, Error, Result};
