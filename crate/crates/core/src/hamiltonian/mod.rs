//! Hamiltonian families along a closed loop: analytic toy models and
//! molecular active-space Hamiltonians built from integral bundles.

mod active;
mod bundle;
mod families;
mod loops;

pub use active::{build_active_hamiltonian, ActiveHamiltonian, ActiveSpaceSpec, MoIntegrals};
pub use bundle::{load_bundle, save_bundle, IntegralBundle};
pub use families::{effective_ci_hamiltonian, DenseFourier, EffectiveCiParams, QubitFamily};
pub use loops::{LoopKind, LoopPoint, LoopSpec, BUILTIN_LOOPS};
