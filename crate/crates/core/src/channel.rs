//! Sparse geometric channel: `H = sqrt(Nr Nt / L) * sum_l alpha_l u_l v_l^H`.
//!
//! Rows index receive antennas, columns index transmit antennas. Each path is a
//! single ray; there is no intra-cluster angular spread.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::steering::{steering_vector, AngleSpec, ArrayGeometry, SteeringVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub gain: Complex64,
    /// Angle of departure (transmit side).
    pub aod: AngleSpec,
    /// Angle of arrival (receive side).
    pub aoa: AngleSpec,
}

impl PathComponent {
    pub fn new(gain: Complex64, aod: AngleSpec, aoa: AngleSpec) -> Self {
        Self { gain, aod, aoa }
    }
}

/// Draws `z ~ CN(0, 1)`: independent real and imaginary parts with variance 1/2.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: DMatrix<Complex64>,
    num_paths: usize,
}

impl ChannelMatrix {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn num_paths(&self) -> usize {
        self.num_paths
    }

    pub fn nr(&self) -> usize {
        self.entries.nrows()
    }

    pub fn nt(&self) -> usize {
        self.entries.ncols()
    }

    /// Build directly from a dense matrix, for channels not produced by the
    /// path model.
    pub fn from_matrix(entries: DMatrix<Complex64>, num_paths: usize) -> Self {
        Self { entries, num_paths }
    }
}

/// Transmit (`v_l`) and receive (`u_l`) steering vectors of every path.
pub fn path_steering(
    paths: &[PathComponent],
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
) -> (Vec<SteeringVector>, Vec<SteeringVector>) {
    paths
        .iter()
        .map(|p| {
            (
                steering_vector(tx_geom, p.aod),
                steering_vector(rx_geom, p.aoa),
            )
        })
        .unzip()
}

pub fn assemble_channel(
    paths: &[PathComponent],
    tx_geom: &ArrayGeometry,
    rx_geom: &ArrayGeometry,
) -> Result<ChannelMatrix> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument(
            "channel needs at least one path".into(),
        ));
    }
    if let Some(p) = paths
        .iter()
        .find(|p| !(p.gain.re.is_finite() && p.gain.im.is_finite()))
    {
        return Err(Error::InvalidArgument(format!(
            "non-finite path gain {}",
            p.gain
        )));
    }
    let nt = tx_geom.num_elements();
    let nr = rx_geom.num_elements();
    let scale = ((nr * nt) as f64 / paths.len() as f64).sqrt();
    let (vs, us) = path_steering(paths, tx_geom, rx_geom);

    let mut entries = DMatrix::<Complex64>::zeros(nr, nt);
    for ((p, v), u) in paths.iter().zip(&vs).zip(&us) {
        let weight = p.gain * scale;
        let u = u.as_vector();
        let v = v.as_vector();
        for j in 0..nt {
            let vj = v[j].conj() * weight;
            for i in 0..nr {
                entries[(i, j)] += u[i] * vj;
            }
        }
    }
    Ok(ChannelMatrix {
        entries,
        num_paths: paths.len(),
    })
}

/// Squared Frobenius norm.
pub fn channel_power(h: &ChannelMatrix) -> f64 {
    h.entries.iter().map(|z| z.norm_sqr()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureGeometry {
    pub nt: usize,
    pub nr: usize,
    pub spacing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixturePath {
    pub gain_re: f64,
    pub gain_im: f64,
    pub aod_deg: f64,
    pub aoa_deg: f64,
}

/// JSON form of a channel realization (azimuth-only angles, in degrees).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFixture {
    pub geometry: FixtureGeometry,
    pub paths: Vec<FixturePath>,
}

impl ChannelFixture {
    pub fn from_paths(
        paths: &[PathComponent],
        tx_geom: &ArrayGeometry,
        rx_geom: &ArrayGeometry,
    ) -> Result<Self> {
        if tx_geom.spacing_wavelengths() != rx_geom.spacing_wavelengths() {
            return Err(Error::Unsupported(
                "fixtures carry a single element spacing for both ends".into(),
            ));
        }
        let horizontal =
            |a: &AngleSpec| (a.elevation_rad() - std::f64::consts::FRAC_PI_2).abs() < 1e-12;
        if !paths
            .iter()
            .all(|p| horizontal(&p.aod) && horizontal(&p.aoa))
        {
            return Err(Error::Unsupported(
                "fixtures store azimuth-only angles".into(),
            ));
        }
        Ok(Self {
            geometry: FixtureGeometry {
                nt: tx_geom.num_elements(),
                nr: rx_geom.num_elements(),
                spacing: tx_geom.spacing_wavelengths(),
            },
            paths: paths
                .iter()
                .map(|p| FixturePath {
                    gain_re: p.gain.re,
                    gain_im: p.gain.im,
                    aod_deg: p.aod.azimuth_rad().to_degrees(),
                    aoa_deg: p.aoa.azimuth_rad().to_degrees(),
                })
                .collect(),
        })
    }

    pub fn geometries(&self) -> Result<(ArrayGeometry, ArrayGeometry)> {
        Ok((
            ArrayGeometry::new(self.geometry.nt, self.geometry.spacing)?,
            ArrayGeometry::new(self.geometry.nr, self.geometry.spacing)?,
        ))
    }

    pub fn path_components(&self) -> Vec<PathComponent> {
        self.paths
            .iter()
            .map(|p| PathComponent {
                gain: Complex64::new(p.gain_re, p.gain_im),
                aod: AngleSpec::azimuth_deg(p.aod_deg),
                aoa: AngleSpec::azimuth_deg(p.aoa_deg),
            })
            .collect()
    }

    pub fn assemble(&self) -> Result<ChannelMatrix> {
        let (tx, rx) = self.geometries()?;
        assemble_channel(&self.path_components(), &tx, &rx)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixture serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s)
            .map_err(|e| Error::InvalidArgument(format!("bad channel fixture: {e}")))
    }
}
