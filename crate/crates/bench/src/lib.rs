//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use cantor_dpp::{CantorSet, CantorSpec, KernelHandle, USequence, Which};

/// Target-measure set with `m(C) = 1/2`, `δ = 1/2`, geometric `u`.
pub fn theorem2_half() -> CantorSet {
    CantorSet::build(&CantorSpec::theorem2(0.5, 0.5, USequence::Geometric))
        .expect("valid fixture")
}

pub fn middle_thirds(depth: usize) -> CantorSet {
    CantorSet::build(&CantorSpec::middle_thirds(depth)).expect("valid fixture")
}

pub fn kernel(set: CantorSet, which: Which) -> KernelHandle {
    KernelHandle::new(Arc::new(set), which)
}
