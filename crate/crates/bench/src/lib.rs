//! Shared inputs for the pipeline benchmarks.

use clotseg::phantom::{generate, Phantom, PhantomKind, PhantomSpec};

/// Default-geometry phantom of the given kind with mild noise.
pub fn phantom(kind: PhantomKind) -> Phantom {
    generate(&PhantomSpec::default_for(kind, 1)).expect("default spec is valid")
}
