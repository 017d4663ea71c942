//! Random walks on semidirect extensions `F_d ⋊_θ A` of a free group, their
//! boundary behaviour, and the inner-tree geometry of free-by-cyclic groups.

pub mod boundary;
pub mod error;
pub mod fixtures;
pub mod groups;
pub mod harmonic;
pub mod morphisms;
pub mod tree;
pub mod walk;
pub mod words;

pub use boundary::{ConvergenceTrace, CylinderDistribution, HittingOptions};
pub use error::{Error, Result};
pub use groups::{ActingGroup, ActingKind, ActingPart, ExtElement, SublatticeSpec, ThetaCache};
pub use morphisms::{Automorphism, GrowthKind, GrowthReport, LinearFit};
pub use walk::{GenerationCheck, PathBatch, StepMeasure, Storage};
pub use words::{BoundaryRay, Letter, ReducedWord};
