//! Two-path (`L = 2`) closed forms.
//!
//! A two-path channel is summarized by the path powers `a = |alpha_1|^2`,
//! `b = |alpha_2|^2`, the transmit and receive steering inner products
//! `v_1^H v_2`, `u_1^H u_2`, and the gain phase difference. Beams are restricted
//! to `f = beta v_1 + exp(j theta) sqrt(1 - beta^2) v_2` (which contains the
//! optimum) with a matched-filter receiver. Everything is reported as a
//! normalized SNR, i.e. received SNR over `rho Nt Nr`.
//!
//! Special cases with exact answers:
//! * `v_1 ⟂ v_2`: [`beta_opt_v_orth`], [`delta_snr_v_orth`];
//! * `u_1 ⟂ u_2`: [`beta_opt_u_orth`], [`delta_snr_u_orth`];
//! * `v_1 ∥ v_2`: every beam in the family is optimal, [`delta_snr_v_parallel`];
//! * `u_1 ∥ u_2`: [`beta_opt_u_parallel`], [`delta_snr_u_parallel`].

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::PathComponent;
use crate::error::{Error, Result};
use crate::steering::{dirichlet_inner_product, steering_inner_product, AngleSpec, ArrayGeometry};

const L: f64 = 2.0;

/// Inner products below this magnitude count as orthogonal, above `1 - REGIME_TOL`
/// as parallel.
pub const REGIME_TOL: f64 = 1e-9;

/// Wraps an angle to (-pi, pi].
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPathParams {
    /// `|alpha_1|`
    pub mag_a1: f64,
    /// `|alpha_2|`
    pub mag_a2: f64,
    /// `arg alpha_1 - arg alpha_2`
    pub phase_diff: f64,
    pub uu_mag: f64,
    pub uu_phase: f64,
    pub vv_mag: f64,
    pub vv_phase: f64,
}

impl TwoPathParams {
    pub fn new(
        mag_a1: f64,
        mag_a2: f64,
        phase_diff: f64,
        uu: Complex64,
        vv: Complex64,
    ) -> Result<Self> {
        Self {
            mag_a1,
            mag_a2,
            phase_diff,
            uu_mag: uu.norm(),
            uu_phase: uu.arg(),
            vv_mag: vv.norm(),
            vv_phase: vv.arg(),
        }
        .validated()
    }

    /// Checks field ranges. Magnitudes a hair above 1 from rounding are clamped.
    pub fn validated(mut self) -> Result<Self> {
        let finite = [
            self.mag_a1,
            self.mag_a2,
            self.phase_diff,
            self.uu_mag,
            self.uu_phase,
            self.vv_mag,
            self.vv_phase,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidArgument(
                "two-path parameters must be finite".into(),
            ));
        }
        if self.mag_a1 < 0.0 || self.mag_a2 < 0.0 {
            return Err(Error::InvalidArgument(
                "gain magnitudes must be nonnegative".into(),
            ));
        }
        for (name, m) in [("uu_mag", &mut self.uu_mag), ("vv_mag", &mut self.vv_mag)] {
            if !(0.0..=1.0 + 1e-12).contains(m) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {m} outside [0, 1]"
                )));
            }
            *m = m.min(1.0);
        }
        Ok(self)
    }

    /// Parameters of an actual two-path channel.
    pub fn from_paths(
        paths: &[PathComponent],
        tx: &ArrayGeometry,
        rx: &ArrayGeometry,
    ) -> Result<Self> {
        let [p1, p2] = paths else {
            return Err(Error::Unsupported(format!(
                "need exactly 2 paths, got {}",
                paths.len()
            )));
        };
        Self::new(
            p1.gain.norm(),
            p2.gain.norm(),
            p1.gain.arg() - p2.gain.arg(),
            steering_inner_product(rx, p1.aoa, p2.aoa),
            steering_inner_product(tx, p1.aod, p2.aod),
        )
    }

    pub fn a(&self) -> f64 {
        self.mag_a1 * self.mag_a1
    }

    pub fn b(&self) -> f64 {
        self.mag_a2 * self.mag_a2
    }

    /// Phase misalignment `arg v_1^H v_2 - arg u_1^H u_2 + arg alpha_1 - arg alpha_2`,
    /// in (-pi, pi]. Zero means the paths add coherently.
    pub fn nu(&self) -> f64 {
        wrap_phase(self.vv_phase - self.uu_phase + self.phase_diff)
    }

    /// The same channel with the path labels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            mag_a1: self.mag_a2,
            mag_a2: self.mag_a1,
            phase_diff: -self.phase_diff,
            uu_mag: self.uu_mag,
            uu_phase: -self.uu_phase,
            vv_mag: self.vv_mag,
            vv_phase: -self.vv_phase,
        }
    }

    fn ordered(&self) -> (Self, bool) {
        if self.mag_a1 >= self.mag_a2 {
            (*self, false)
        } else {
            (self.swapped(), true)
        }
    }

    fn require_gain(&self) -> Result<()> {
        if self.a() + self.b() == 0.0 {
            return Err(Error::Undefined("both path gains are zero".into()));
        }
        Ok(())
    }
}

/// A point in the beam family: `beta` on path 1, phase `theta` on path 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationPoint {
    pub beta: f64,
    pub theta: f64,
}

impl AllocationPoint {
    pub fn new(beta: f64, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) || !theta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "invalid allocation beta={beta}, theta={theta}"
            )));
        }
        Ok(Self {
            beta,
            theta: theta.rem_euclid(TAU),
        })
    }

    fn from_beta_sq(beta_sq: f64, theta: f64) -> Self {
        Self {
            beta: beta_sq.clamp(0.0, 1.0).sqrt(),
            theta: theta.rem_euclid(TAU),
        }
    }

    pub fn beta_sq(&self) -> f64 {
        self.beta * self.beta
    }
}

/// SNR ratio optimal / dominant-path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaSnr {
    /// Linear ratio, at least 1; `+inf` when the dominant-path beam is fully cancelled.
    pub ratio: f64,
    /// The inputs had `|alpha_1| < |alpha_2|` and were relabelled.
    pub swapped: bool,
    /// The dominant-path SNR vanished by destructive combining.
    pub destructive: bool,
}

impl DeltaSnr {
    fn plain(ratio: f64, swapped: bool) -> Self {
        Self {
            ratio,
            swapped,
            destructive: false,
        }
    }

    pub fn db(&self) -> f64 {
        10.0 * self.ratio.log10()
    }
}

fn require(cond: bool, what: &str, p: &TwoPathParams) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::WrongRegime(format!(
            "{what} (|u1^H u2| = {}, |v1^H v2| = {})",
            p.uu_mag, p.vv_mag
        )))
    }
}

/// Normalized SNR of the beam `alloc` with a matched filter:
/// `||H f||^2 / (Nt Nr f^H f)` written in terms of the two-path parameters.
pub fn two_path_objective(p: &TwoPathParams, alloc: AllocationPoint) -> Result<f64> {
    let (a, b) = (p.a(), p.b());
    let (uu, vv, nu) = (p.uu_mag, p.vv_mag, p.nu());
    let beta = alloc.beta;
    let q = (1.0 - beta * beta).max(0.0).sqrt();
    let phi = alloc.theta + p.vv_phase;
    let bq = beta * q;
    let ff = 1.0 + 2.0 * bq * vv * phi.cos();
    if ff <= 1e-15 {
        return Err(Error::Undefined("beam has zero norm".into()));
    }
    let sab = (a * b).sqrt();
    let num = beta * beta * a
        + q * q * b
        + (beta * beta * b + q * q * a) * vv * vv
        + 2.0 * sab * vv * uu * nu.cos()
        + 2.0 * bq * (a + b) * vv * phi.cos()
        + 2.0 * bq * sab * uu * (vv * vv * (nu + phi).cos() + (nu - phi).cos());
    Ok(num.max(0.0) / (L * ff))
}

/// Normalized SNR when transmitting along the stronger path with a matched
/// filter.
pub fn snr_dominant_path(p: &TwoPathParams) -> f64 {
    let (a, b, vv) = (p.a(), p.b(), p.vv_mag);
    let main = (a + b * vv * vv).max(b + a * vv * vv);
    ((main + 2.0 * (a * b).sqrt() * vv * p.uu_mag * p.nu().cos()) / L).max(0.0)
}

/// Normalized SNR of equal power on both paths when they combine coherently
/// (`nu = 0`, beam phase aligned).
pub fn snr_equal_power_coherent(p: &TwoPathParams) -> f64 {
    let (a, b) = (p.a(), p.b());
    (1.0 + p.vv_mag) * (a + b + 2.0 * (a * b).sqrt() * p.uu_mag) / (2.0 * L)
}

/// Optimal allocation for electrically orthogonal transmit directions.
pub fn beta_opt_v_orth(p: &TwoPathParams) -> Result<AllocationPoint> {
    require(
        p.vv_mag < REGIME_TOL,
        "transmit directions are not orthogonal",
        p,
    )?;
    p.require_gain()?;
    let (a, b, uu) = (p.a(), p.b(), p.uu_mag);
    let theta = p.phase_diff - p.uu_phase;
    let disc = ((a - b).powi(2) + 4.0 * a * b * uu * uu).sqrt();
    // disc = 0 only for a = b with uu = 0 (or a zero gain alongside uu = 0 when
    // both vanish), where every allocation is equally good.
    let beta_sq = if a == b || disc == 0.0 {
        0.5
    } else {
        0.5 * (1.0 + (a - b) / disc)
    };
    Ok(AllocationPoint::from_beta_sq(beta_sq, theta))
}

pub fn delta_snr_v_orth(p: &TwoPathParams) -> Result<DeltaSnr> {
    require(
        p.vv_mag < REGIME_TOL,
        "transmit directions are not orthogonal",
        p,
    )?;
    p.require_gain()?;
    let (a, b, uu) = (p.a(), p.b(), p.uu_mag);
    let root = (a * a + b * b + 2.0 * a * b * (2.0 * uu * uu - 1.0))
        .max(0.0)
        .sqrt();
    let ratio = (a + b + root) / (2.0 * a.max(b));
    Ok(DeltaSnr::plain(ratio.max(1.0), a < b))
}

/// Optimal allocation for electrically orthogonal receive directions and
/// non-orthogonal transmit directions.
pub fn beta_opt_u_orth(p: &TwoPathParams) -> Result<AllocationPoint> {
    require(
        p.uu_mag < REGIME_TOL,
        "receive directions are not orthogonal",
        p,
    )?;
    require(
        p.vv_mag >= REGIME_TOL,
        "transmit directions are orthogonal as well; use the v-orthogonal solution",
        p,
    )?;
    p.require_gain()?;
    let (a, b) = (p.a(), p.b());
    let v2 = p.vv_mag * p.vv_mag;
    // The textbook coefficients all carry 1/|v1^H v2|^2; scaling it out keeps
    // them finite for nearly orthogonal transmit directions.
    let d = a - b;
    let big_a = d * d + 2.0 * a * (a + b) * v2;
    let root_b = d.abs() * (d * d + 4.0 * a * b * v2).sqrt();
    let big_c = (1.0 + v2) * (a + b).powi(2) - 4.0 * a * b;
    let beta_sq = if a >= b {
        (big_a + root_b) / (2.0 * big_c)
    } else {
        (big_a - root_b) / (2.0 * big_c)
    };
    Ok(AllocationPoint::from_beta_sq(beta_sq, -p.vv_phase))
}

pub fn delta_snr_u_orth(p: &TwoPathParams) -> Result<DeltaSnr> {
    require(
        p.uu_mag < REGIME_TOL,
        "receive directions are not orthogonal",
        p,
    )?;
    p.require_gain()?;
    let (q, swapped) = p.ordered();
    let (a, b, vv) = (q.a(), q.b(), q.vv_mag);
    if vv < REGIME_TOL {
        return Ok(DeltaSnr::plain(1.0, swapped));
    }
    let beta_sq = beta_opt_u_orth(&q)?.beta_sq();
    let cross = (beta_sq * (1.0 - beta_sq)).sqrt();
    let optimal =
        a + b - (1.0 - vv * vv) * (beta_sq * b + (1.0 - beta_sq) * a) / (1.0 + 2.0 * cross * vv);
    let dominant = a + b * vv * vv;
    Ok(DeltaSnr::plain((optimal / dominant).max(1.0), swapped))
}

/// Equal-gain special case of [`delta_snr_u_orth`]: `(1 + vv) / (1 + vv^2)`,
/// largest at `vv = sqrt(2) - 1`.
pub fn delta_snr_u_orth_equal_gain(vv_mag: f64) -> f64 {
    (1.0 + vv_mag) / (1.0 + vv_mag * vv_mag)
}

/// Parallel transmit directions: the beam family collapses to one direction,
/// so dominant-path transmission is optimal.
pub fn delta_snr_v_parallel(p: &TwoPathParams) -> Result<DeltaSnr> {
    require(
        p.vv_mag > 1.0 - REGIME_TOL,
        "transmit directions are not parallel",
        p,
    )?;
    Ok(DeltaSnr::plain(1.0, p.mag_a1 < p.mag_a2))
}

/// Normalized SNR shared by every beam when the transmit directions coincide.
pub fn snr_v_parallel(p: &TwoPathParams) -> Result<f64> {
    require(
        p.vv_mag > 1.0 - REGIME_TOL,
        "transmit directions are not parallel",
        p,
    )?;
    let (a, b) = (p.a(), p.b());
    Ok(((a + b + 2.0 * (a * b).sqrt() * p.uu_mag * p.nu().cos()) / L).max(0.0))
}

/// Parallel receive directions: allocate power in proportion to path power,
/// aligned so the paths add in phase.
pub fn beta_opt_u_parallel(p: &TwoPathParams) -> Result<AllocationPoint> {
    require(
        p.uu_mag > 1.0 - REGIME_TOL,
        "receive directions are not parallel",
        p,
    )?;
    p.require_gain()?;
    let (a, b) = (p.a(), p.b());
    Ok(AllocationPoint::from_beta_sq(
        a / (a + b),
        p.phase_diff - p.uu_phase,
    ))
}

/// Optimal normalized SNR for parallel receive directions.
pub fn snr_u_parallel(p: &TwoPathParams) -> Result<f64> {
    require(
        p.uu_mag > 1.0 - REGIME_TOL,
        "receive directions are not parallel",
        p,
    )?;
    let (a, b) = (p.a(), p.b());
    Ok(((a + b + 2.0 * (a * b).sqrt() * p.vv_mag * p.nu().cos()) / L).max(0.0))
}

pub fn delta_snr_u_parallel(p: &TwoPathParams) -> Result<DeltaSnr> {
    require(
        p.uu_mag > 1.0 - REGIME_TOL,
        "receive directions are not parallel",
        p,
    )?;
    p.require_gain()?;
    let (q, swapped) = p.ordered();
    let (a, b, vv) = (q.a(), q.b(), q.vv_mag);
    let excess = b * (1.0 - vv * vv);
    if excess == 0.0 {
        return Ok(DeltaSnr::plain(1.0, swapped));
    }
    let den = a + vv * vv * b + 2.0 * (a * b).sqrt() * vv * q.nu().cos();
    if den <= 1e-15 * (a + b) {
        return Ok(DeltaSnr {
            ratio: f64::INFINITY,
            swapped,
            destructive: true,
        });
    }
    Ok(DeltaSnr::plain(1.0 + excess / den, swapped))
}

/// Phase-increment separation `delta` in [0, 2 pi / n] at which the `n`-element
/// inner-product magnitude equals `target`.
fn separation_for_magnitude(n: usize, target: f64) -> f64 {
    let upper = TAU / n as f64;
    if target >= 1.0 {
        return 0.0;
    }
    if target <= 0.0 {
        return upper;
    }
    // The magnitude falls monotonically from 1 to 0 over the main lobe.
    let (mut lo, mut hi) = (0.0, upper);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dirichlet_inner_product(n, mid).norm() > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * upper {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Builds a concrete half-wavelength ULA channel whose inner-product
/// magnitudes, gains and phase misalignment match `target`.
///
/// Inner-product phases are fixed by the array geometry, so the returned
/// parameters carry the realized phases; `phase_diff` is chosen so that `nu`
/// matches the target.
pub fn realize_two_path(
    target: &TwoPathParams,
    nt: usize,
    nr: usize,
) -> Result<(
    Vec<PathComponent>,
    ArrayGeometry,
    ArrayGeometry,
    TwoPathParams,
)> {
    if nt < 2 || nr < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 antennas per side".into(),
        ));
    }
    let tx = ArrayGeometry::ula(nt)?;
    let rx = ArrayGeometry::ula(nr)?;
    // Half-wavelength spacing: phase increment = pi * spatial frequency.
    let freq_for = |n: usize, mag: f64| separation_for_magnitude(n, mag) / PI;
    let aod2 = AngleSpec::from_spatial_frequency(freq_for(nt, target.vv_mag))?;
    let aoa2 = AngleSpec::from_spatial_frequency(freq_for(nr, target.uu_mag))?;
    let broadside = AngleSpec::from_spatial_frequency(0.0)?;
    let vv = steering_inner_product(&tx, broadside, aod2);
    let uu = steering_inner_product(&rx, broadside, aoa2);
    let phase_diff = target.nu() - vv.arg() + uu.arg();
    let paths = vec![
        PathComponent::new(Complex64::new(target.mag_a1, 0.0), broadside, broadside),
        PathComponent::new(
            Complex64::from_polar(target.mag_a2, -phase_diff),
            aod2,
            aoa2,
        ),
    ];
    let realized = TwoPathParams::new(target.mag_a1, target.mag_a2, phase_diff, uu, vv)?;
    Ok((paths, tx, rx, realized))
}
