//! Analytic machinery evaluated on live traces: effectual heights and
//! family partitions, per-node potentials, the per-cycle potential and its
//! delivery inequality, the network-potential ledger, and delivery
//! classification for dual runs.

pub mod classify;
pub mod family;
pub mod phi;
pub mod psi;

pub use classify::{classify_deliveries, Classification, DeliveryClass};
pub use family::{
    effectual_heights, node_potentials, partition_families, Family, LabelOrder, PotentialSnapshot,
};
pub use phi::{phi_evolution, PotentialLedger};
pub use psi::{check_cycle_inequality, cycle_potential, CycleCheck, PsiSnapshot};
