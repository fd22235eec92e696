//! Thin wrappers over `libm` so the crate builds without `std`. Using the
//! same software implementations in test and non-test builds also keeps
//! trajectories bit-identical across build configurations.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
