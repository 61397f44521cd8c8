//! Spatial-domain channel synthesis between two planar arrays.
//!
//! The channel is a spherical-wave line-of-sight term plus a sum of
//! scatterer-bounced components. The phase convention is `exp(-j k r)`
//! everywhere.

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, SystemParams};

/// Element pairs closer than this are rejected.
pub const MIN_DISTANCE_M: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Scatterer {
    pub position_m: Vector3<f64>,
    pub complex_gain: Complex64,
}

/// `N_R × N_T` complex gains together with the arrays they connect.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: DMatrix<Complex64>,
    tx: ArrayGeometry,
    rx: ArrayGeometry,
}

impl ChannelMatrix {
    pub fn new(entries: DMatrix<Complex64>, tx: ArrayGeometry, rx: ArrayGeometry) -> Result<Self> {
        let expected = (rx.num_elements(), tx.num_elements());
        if entries.shape() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                got: entries.shape(),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("channel entries"));
        }
        Ok(Self { entries, tx, rx })
    }

    pub fn zeros(tx: ArrayGeometry, rx: ArrayGeometry) -> Self {
        let entries = DMatrix::zeros(rx.num_elements(), tx.num_elements());
        Self { entries, tx, rx }
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn tx(&self) -> &ArrayGeometry {
        &self.tx
    }

    pub fn rx(&self) -> &ArrayGeometry {
        &self.rx
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    /// Sum of two channels between the same arrays.
    pub fn add(&self, other: &ChannelMatrix) -> Result<ChannelMatrix> {
        if self.entries.shape() != other.entries.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.entries.shape(),
                got: other.entries.shape(),
            });
        }
        Ok(ChannelMatrix {
            entries: &self.entries + &other.entries,
            tx: self.tx.clone(),
            rx: self.rx.clone(),
        })
    }
}

/// Zero-mean circularly-symmetric complex Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexGaussian {
    pub variance: f64,
}

impl ComplexGaussian {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let s = (self.variance / 2.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    }
}

/// Where scatterers are dropped, relative to the Tx array frame.
///
/// Radius is drawn uniformly in volume over `[min_radius_m, max_radius_m]`
/// (the Tx–Rx distance when `max_radius_m` is `None`); azimuth is measured
/// from the Tx boresight in the horizontal (local xz) plane and elevation
/// towards local +y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScattererRegion {
    #[serde(default = "default_min_radius")]
    pub min_radius_m: f64,
    #[serde(default)]
    pub max_radius_m: Option<f64>,
    #[serde(default = "default_azimuth")]
    pub azimuth_deg: [f64; 2],
    #[serde(default)]
    pub elevation_deg: [f64; 2],
}

fn default_min_radius() -> f64 {
    1.0
}

fn default_azimuth() -> [f64; 2] {
    [-60.0, 60.0]
}

impl Default for ScattererRegion {
    fn default() -> Self {
        Self {
            min_radius_m: default_min_radius(),
            max_radius_m: None,
            azimuth_deg: default_azimuth(),
            elevation_deg: [0.0, 0.0],
        }
    }
}

impl ScattererRegion {
    fn sample<R: Rng + ?Sized>(&self, tx: &ArrayGeometry, link_distance_m: f64, rng: &mut R) -> Vector3<f64> {
        let a = self.min_radius_m;
        let b = self.max_radius_m.unwrap_or(link_distance_m);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let u: f64 = rng.random();
        let radius = (lo.powi(3) + u * (hi.powi(3) - lo.powi(3))).cbrt();
        let az = lerp(self.azimuth_deg, rng.random()).to_radians();
        // Uniform on the sphere band: sine of elevation is uniform.
        let [e0, e1] = self.elevation_deg;
        let s = lerp([e0.to_radians().sin(), e1.to_radians().sin()], rng.random());
        let el = s.asin();
        let local = Vector3::new(el.cos() * az.sin(), el.sin(), el.cos() * az.cos()) * radius;
        tx.center_position_m() + tx.orientation() * local
    }
}

fn lerp([a, b]: [f64; 2], t: f64) -> f64 {
    a + (b - a) * t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    #[serde(default = "default_los")]
    pub los_gain: ComplexGaussian,
    #[serde(default = "default_nlos")]
    pub nlos_gain: ComplexGaussian,
    #[serde(default = "default_num_scatterers")]
    pub num_scatterers: usize,
    #[serde(default)]
    pub scatterer_region: ScattererRegion,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_los() -> ComplexGaussian {
    ComplexGaussian { variance: 1.0 }
}

fn default_nlos() -> ComplexGaussian {
    ComplexGaussian { variance: 0.01 }
}

fn default_num_scatterers() -> usize {
    2
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            los_gain: default_los(),
            nlos_gain: default_nlos(),
            num_scatterers: default_num_scatterers(),
            scatterer_region: ScattererRegion::default(),
            rng_seed: 0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.los_gain.variance >= 0.0 && self.los_gain.variance.is_finite()) {
            return Err(Error::invalid("los_gain.variance", "must be nonnegative"));
        }
        if !(self.nlos_gain.variance >= 0.0 && self.nlos_gain.variance.is_finite()) {
            return Err(Error::invalid("nlos_gain.variance", "must be nonnegative"));
        }
        let r = &self.scatterer_region;
        if !(r.min_radius_m > 0.0 && r.min_radius_m.is_finite()) {
            return Err(Error::invalid("scatterer_region.min_radius_m", "must be positive"));
        }
        if let Some(m) = r.max_radius_m {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::invalid("scatterer_region.max_radius_m", "must be positive"));
            }
        }
        if r.elevation_deg.iter().any(|e| e.abs() > 90.0) {
            return Err(Error::invalid(
                "scatterer_region.elevation_deg",
                "must lie in [-90, 90]",
            ));
        }
        Ok(())
    }
}

/// Spherical-wave LoS channel: `g0 · exp(-j k r) / r` per element pair.
pub fn synthesize_los(
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    params: &SystemParams,
    g0: Complex64,
) -> Result<ChannelMatrix> {
    let k = params.wavenumber_rad_per_m();
    let tp = tx.element_positions();
    let rp = rx.element_positions();
    let mut h = DMatrix::zeros(rp.len(), tp.len());
    for (i, r_pos) in rp.iter().enumerate() {
        for (j, t_pos) in tp.iter().enumerate() {
            let r = (r_pos - t_pos).norm();
            if r < MIN_DISTANCE_M {
                return Err(Error::ZeroDistance { distance_m: r });
            }
            h[(i, j)] = g0 * Complex64::from_polar(1.0 / r, -k * r);
        }
    }
    Ok(ChannelMatrix {
        entries: h,
        tx: tx.clone(),
        rx: rx.clone(),
    })
}

/// Unit-norm phase-only response of `array` to a point at `source`,
/// referenced to the array center.
fn steering(array: &ArrayGeometry, source: &Vector3<f64>, k: f64) -> Result<Vec<Complex64>> {
    let ref_d = (source - array.center_position_m()).norm();
    let scale = 1.0 / (array.num_elements() as f64).sqrt();
    array
        .element_positions()
        .iter()
        .map(|p| {
            let d = (source - p).norm();
            if d < MIN_DISTANCE_M {
                return Err(Error::ZeroDistance { distance_m: d });
            }
            Ok(Complex64::from_polar(scale, -k * (d - ref_d)))
        })
        .collect()
}

/// Scatterer-bounced component `Σ_q g_q · a_R(q) · a_T(q)ᵀ`.
///
/// Both steering vectors carry `exp(-j k Δd)` so every bounce accumulates
/// phase along its whole path and the channel is reciprocal.
pub fn synthesize_nlos(
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    params: &SystemParams,
    scatterers: &[Scatterer],
) -> Result<ChannelMatrix> {
    let k = params.wavenumber_rad_per_m();
    let mut h = DMatrix::zeros(rx.num_elements(), tx.num_elements());
    for s in scatterers {
        let a_r = steering(rx, &s.position_m, k)?;
        let a_t = steering(tx, &s.position_m, k)?;
        for (i, ar) in a_r.iter().enumerate() {
            for (j, at) in a_t.iter().enumerate() {
                // ar * at first keeps the product symmetric under a role swap.
                h[(i, j)] += s.complex_gain * (ar * at);
            }
        }
    }
    Ok(ChannelMatrix {
        entries: h,
        tx: tx.clone(),
        rx: rx.clone(),
    })
}

/// Draws the LoS gain and scatterers from `cfg` and returns `H_LoS + H_NLoS`.
///
/// Draw order is fixed (LoS gain, then position and gain per scatterer) so a
/// seed reproduces the same matrix bit for bit.
pub fn synthesize_channel(
    cfg: &ChannelConfig,
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    params: &SystemParams,
) -> Result<ChannelMatrix> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let g0 = cfg.los_gain.sample(&mut rng);
    let link = (rx.center_position_m() - tx.center_position_m()).norm();
    let scatterers = draw_scatterers(cfg, tx, rx, link, &mut rng);
    let los = synthesize_los(tx, rx, params, g0)?;
    if scatterers.is_empty() {
        return Ok(los);
    }
    los.add(&synthesize_nlos(tx, rx, params, &scatterers)?)
}

fn draw_scatterers<R: Rng + ?Sized>(
    cfg: &ChannelConfig,
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    link: f64,
    rng: &mut R,
) -> Vec<Scatterer> {
    let elements: Vec<_> = tx
        .element_positions()
        .into_iter()
        .chain(rx.element_positions())
        .collect();
    (0..cfg.num_scatterers)
        .map(|_| {
            // A draw landing on an element has probability zero; redraw if it happens.
            let position_m = loop {
                let p = cfg.scatterer_region.sample(tx, link, rng);
                if elements.iter().all(|e| (e - p).norm() >= MIN_DISTANCE_M) {
                    break p;
                }
            };
            Scatterer {
                position_m,
                complex_gain: cfg.nlos_gain.sample(rng),
            }
        })
        .collect()
}
