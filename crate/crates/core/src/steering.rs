//! Uniform linear array steering vectors.
//!
//! A steering vector for an `N`-element X-axis ULA has entries
//! `exp(j m k d sin(theta) cos(phi)) / sqrt(N)`, `m = 0..N`. Two such vectors
//! have a closed-form inner product (a Dirichlet kernel in the difference of
//! their phase increments), which vanishes when the spatial frequencies are
//! separated by a nonzero multiple of `2 / N` at half-wavelength spacing.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ArrayAxis {
    #[default]
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    num_elements: usize,
    spacing_wavelengths: f64,
    #[serde(default)]
    axis: ArrayAxis,
}

impl ArrayGeometry {
    pub const DEFAULT_SPACING: f64 = 0.5;

    pub fn new(num_elements: usize, spacing_wavelengths: f64) -> Result<Self> {
        if num_elements == 0 {
            return Err(Error::InvalidArgument(
                "array needs at least one element".into(),
            ));
        }
        if !(spacing_wavelengths.is_finite() && spacing_wavelengths > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "element spacing must be positive, got {spacing_wavelengths}"
            )));
        }
        Ok(Self {
            num_elements,
            spacing_wavelengths,
            axis: ArrayAxis::X,
        })
    }

    /// Half-wavelength ULA.
    pub fn ula(num_elements: usize) -> Result<Self> {
        Self::new(num_elements, Self::DEFAULT_SPACING)
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn spacing_wavelengths(&self) -> f64 {
        self.spacing_wavelengths
    }

    pub fn axis(&self) -> ArrayAxis {
        self.axis
    }

    /// `k * d = 2 pi d / lambda`.
    pub fn wave_number_spacing(&self) -> f64 {
        TAU * self.spacing_wavelengths
    }

    /// Per-element phase increment for a plane wave from `angle`.
    pub fn phase_increment(&self, angle: AngleSpec) -> f64 {
        self.wave_number_spacing() * angle.spatial_frequency()
    }
}

/// Azimuth/elevation pair in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleSpec {
    azimuth_rad: f64,
    elevation_rad: f64,
}

impl AngleSpec {
    pub fn new(azimuth_rad: f64, elevation_rad: f64) -> Result<Self> {
        if !azimuth_rad.is_finite() {
            return Err(Error::InvalidArgument("azimuth must be finite".into()));
        }
        if !(elevation_rad > 0.0 && elevation_rad <= PI) {
            return Err(Error::InvalidArgument(format!(
                "elevation must lie in (0, pi], got {elevation_rad}"
            )));
        }
        Ok(Self {
            azimuth_rad: azimuth_rad.rem_euclid(TAU),
            elevation_rad,
        })
    }

    /// Azimuth-only angle in the horizontal plane (elevation 90 degrees).
    pub fn azimuth(azimuth_rad: f64) -> Self {
        Self {
            azimuth_rad: azimuth_rad.rem_euclid(TAU),
            elevation_rad: FRAC_PI_2,
        }
    }

    pub fn azimuth_deg(azimuth_deg: f64) -> Self {
        Self::azimuth(azimuth_deg.to_radians())
    }

    /// Angle whose spatial frequency `cos(azimuth)` equals `freq`, `freq` in [-1, 1].
    pub fn from_spatial_frequency(freq: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&freq) {
            return Err(Error::InvalidArgument(format!(
                "spatial frequency {freq} outside [-1, 1]"
            )));
        }
        Ok(Self::azimuth(freq.acos()))
    }

    pub fn azimuth_rad(&self) -> f64 {
        self.azimuth_rad
    }

    pub fn elevation_rad(&self) -> f64 {
        self.elevation_rad
    }

    /// `sin(elevation) * cos(azimuth)`.
    pub fn spatial_frequency(&self) -> f64 {
        self.elevation_rad.sin() * self.azimuth_rad.cos()
    }
}

/// Unit-norm constant-phase-offset vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(DVector<Complex64>);

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<Complex64> {
        self.0
    }
}

pub fn steering_vector(geom: &ArrayGeometry, angle: AngleSpec) -> SteeringVector {
    let n = geom.num_elements();
    let amplitude = 1.0 / (n as f64).sqrt();
    let step = geom.phase_increment(angle);
    SteeringVector(DVector::from_fn(n, |m, _| {
        Complex64::from_polar(amplitude, m as f64 * step)
    }))
}

/// `a^H b` by direct summation.
pub fn inner_product(a: &SteeringVector, b: &SteeringVector) -> Result<Complex64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.0.dotc(&b.0))
}

/// Closed-form `a^H b` for two `n`-element CPO vectors whose phase increments
/// differ by `delta` (increment of `b` minus increment of `a`):
/// `exp(j (n-1) delta / 2) * sin(n delta / 2) / (n sin(delta / 2))`.
pub fn dirichlet_inner_product(n: usize, delta: f64) -> Complex64 {
    // The kernel is 2*pi periodic in delta; reduce so the only pole is at 0.
    let reduced = delta - TAU * (delta / TAU).round();
    let half = 0.5 * reduced;
    if half.abs() < 1e-15 {
        return Complex64::new(1.0, 0.0);
    }
    let nf = n as f64;
    let magnitude = (nf * half).sin() / (nf * half.sin());
    Complex64::from_polar(magnitude, (nf - 1.0) * half)
}

/// Closed-form inner product of the steering vectors for two angles.
pub fn steering_inner_product(geom: &ArrayGeometry, a: AngleSpec, b: AngleSpec) -> Complex64 {
    let delta = geom.phase_increment(b) - geom.phase_increment(a);
    dirichlet_inner_product(geom.num_elements(), delta)
}

pub fn electrically_orthogonal(
    geom: &ArrayGeometry,
    angle1: AngleSpec,
    angle2: AngleSpec,
    tol: f64,
) -> bool {
    debug_assert!(tol > 0.0);
    let a = steering_vector(geom, angle1);
    let b = steering_vector(geom, angle2);
    // Equal lengths by construction.
    a.0.dotc(&b.0).norm() < tol
}
