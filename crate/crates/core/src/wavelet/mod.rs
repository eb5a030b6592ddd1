//! Daubechies filter banks, the single-level DWT and the stationary wavelet
//! transform with component reconstruction.

mod filters;
mod transform;

pub use filters::{daubechies_filters, FilterPair, MAX_ORDER, MIN_ORDER};
pub use transform::{
    dwt_single_level, idwt_single_level, iswt, reconstruct_components, swt, ComponentSet, Extension,
    SwtCoefficients, MAX_LEVEL,
};
