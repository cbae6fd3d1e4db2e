//! Symbolic workbench for minimal-subtraction renormalization of ladder-type
//! topologies, with the companion braid/skein calculus and Euler-sum
//! counting machinery.
//!
//! All values are immutable after construction and every operation is a
//! pure function over exact rationals, so independent computations can run
//! on any number of workers and always sum to the same result.

pub mod braid;
pub mod cli;
pub mod eulersums;
pub mod numerics;
pub mod oneloop;
pub mod overlap;
pub mod rationality;
pub mod renorm;
pub mod symexpr;

#[cfg(test)]
mod tests {
    fn is_shareable<T: Send + Sync>() {}

    #[test]
    fn core_values_are_shareable_across_workers() {
        is_shareable::<crate::symexpr::LaurentSeries>();
        is_shareable::<crate::symexpr::ZetaPoly>();
        is_shareable::<crate::oneloop::DeltaSpec>();
        is_shareable::<crate::oneloop::DeltaMatrix>();
        is_shareable::<crate::renorm::LadderFamily>();
        is_shareable::<crate::renorm::ZResult>();
        is_shareable::<crate::braid::BraidWord>();
        is_shareable::<crate::numerics::PrecisionFloat>();
    }
}
