//! Physical constants (CODATA 2018), full published precision.
//!
//! | symbol  | value                       | unit  | note                    |
//! |---------|-----------------------------|-------|-------------------------|
//! | ħ       | 1.054 571 817e-34           | J·s   | exact (from h)          |
//! | k_B     | 1.380 649e-23               | J/K   | exact                   |
//! | e       | 1.602 176 634e-19           | C     | exact                   |
//! | a₀      | 5.291 772 109 03e-11        | m     | Bohr radius             |
//! | u       | 1.660 539 066 60e-27        | kg    | atomic mass constant    |
//! | c       | 2.997 924 58e8              | m/s   | exact                   |
//! | D       | 1e-21/c ≈ 3.335 640 952e-30 | C·m   | debye                   |

use crate::scalar::Real;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Bohr radius, m.
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
/// Atomic mass constant, kg.
pub const ATOMIC_MASS: f64 = 1.660_539_066_60e-27;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;
/// One debye in C·m (1e-21/c exactly).
pub const DEBYE: f64 = 1e-21 / SPEED_OF_LIGHT;

/// ħ as the crate scalar.
pub fn hbar<T: Real>() -> T {
    T::of(HBAR)
}

/// k_B as the crate scalar.
pub fn boltzmann<T: Real>() -> T {
    T::of(BOLTZMANN)
}
