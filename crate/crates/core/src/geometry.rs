//! Uniform planar arrays and the carrier/system constants shared by every
//! other module.
//!
//! Elements are indexed by `(i_x, i_y)` with zero-based indices centered on
//! the array centroid. Flattening is row-major with `i_y` fastest, i.e. the
//! flat index is `i_x * n_y + i_y`. The channel synthesizer and the Fourier
//! dictionary both rely on this order.

use nalgebra::{Rotation3, Vector3};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a power in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Carrier, power and hardware constants of a narrow-band link.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    carrier_frequency_hz: f64,
    wavelength_m: f64,
    wavenumber_rad_per_m: f64,
    noise_power_w: f64,
    total_tx_power_w: f64,
    num_rf_chains_tx: Option<usize>,
    num_rf_chains_rx: Option<usize>,
}

impl SystemParams {
    pub fn new(carrier_frequency_hz: f64, total_tx_power_w: f64, noise_power_w: f64) -> Result<Self> {
        positive("carrier_frequency_hz", carrier_frequency_hz)?;
        positive("total_tx_power_w", total_tx_power_w)?;
        positive("noise_power_w", noise_power_w)?;
        let wavelength_m = SPEED_OF_LIGHT / carrier_frequency_hz;
        Ok(Self {
            carrier_frequency_hz,
            wavelength_m,
            wavenumber_rad_per_m: 2.0 * std::f64::consts::PI / wavelength_m,
            noise_power_w,
            total_tx_power_w,
            num_rf_chains_tx: None,
            num_rf_chains_rx: None,
        })
    }

    /// Same as [`SystemParams::new`] with powers given in dBm.
    pub fn from_dbm(carrier_frequency_hz: f64, total_tx_power_dbm: f64, noise_power_dbm: f64) -> Result<Self> {
        Self::new(
            carrier_frequency_hz,
            dbm_to_watts(total_tx_power_dbm),
            dbm_to_watts(noise_power_dbm),
        )
    }

    /// Caps the number of RF chains on each side. Without a cap the hybrid
    /// precoder may use as many streams as the codebook offers.
    pub fn with_rf_chains(mut self, tx: usize, rx: usize) -> Result<Self> {
        if tx == 0 || rx == 0 {
            return Err(Error::invalid("num_rf_chains", "must be at least 1"));
        }
        self.num_rf_chains_tx = Some(tx);
        self.num_rf_chains_rx = Some(rx);
        Ok(self)
    }

    pub fn carrier_frequency_hz(&self) -> f64 {
        self.carrier_frequency_hz
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }

    /// `k = 2π / λ`.
    pub fn wavenumber_rad_per_m(&self) -> f64 {
        self.wavenumber_rad_per_m
    }

    pub fn noise_power_w(&self) -> f64 {
        self.noise_power_w
    }

    pub fn total_tx_power_w(&self) -> f64 {
        self.total_tx_power_w
    }

    pub fn num_rf_chains_tx(&self) -> Option<usize> {
        self.num_rf_chains_tx
    }

    pub fn num_rf_chains_rx(&self) -> Option<usize> {
        self.num_rf_chains_rx
    }

    /// Half-wavelength element spacing.
    pub fn half_wavelength(&self) -> f64 {
        self.wavelength_m / 2.0
    }
}

/// A uniform planar array placed in 3-D space.
///
/// The array lies in the local xy-plane and radiates along local +z. The
/// `orientation` rotation maps local axes to world axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    n_x: usize,
    n_y: usize,
    spacing_m: f64,
    center_position_m: Vector3<f64>,
    orientation: Rotation3<f64>,
}

impl ArrayGeometry {
    /// An array centered at the origin with identity orientation.
    pub fn new(n_x: usize, n_y: usize, spacing_m: f64) -> Result<Self> {
        if n_x == 0 {
            return Err(Error::invalid("n_x", "must be at least 1"));
        }
        if n_y == 0 {
            return Err(Error::invalid("n_y", "must be at least 1"));
        }
        positive("spacing_m", spacing_m)?;
        Ok(Self {
            n_x,
            n_y,
            spacing_m,
            center_position_m: Vector3::zeros(),
            orientation: Rotation3::identity(),
        })
    }

    pub fn with_center(mut self, center: Vector3<f64>) -> Self {
        self.center_position_m = center;
        self
    }

    pub fn with_orientation(mut self, orientation: Rotation3<f64>) -> Self {
        self.orientation = orientation;
        self
    }

    /// The array that faces `self` across `distance_m` along its boresight.
    ///
    /// The returned array is centered on `self`'s boresight and is rotated by
    /// π about `self`'s local y-axis (the vertical axis), so the two
    /// broadsides point at each other.
    pub fn facing(&self, n_x: usize, n_y: usize, distance_m: f64) -> Result<Self> {
        positive("distance_m", distance_m)?;
        let boresight = self.orientation * Vector3::z();
        let flip = Rotation3::from_axis_angle(&Vector3::y_axis(), std::f64::consts::PI);
        Ok(Self::new(n_x, n_y, self.spacing_m)?
            .with_center(self.center_position_m + boresight * distance_m)
            .with_orientation(self.orientation * flip))
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    /// Total element count `n_x · n_y`.
    pub fn num_elements(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_m
    }

    /// `L_x = n_x · δ`.
    pub fn aperture_x_m(&self) -> f64 {
        self.n_x as f64 * self.spacing_m
    }

    /// `L_y = n_y · δ`.
    pub fn aperture_y_m(&self) -> f64 {
        self.n_y as f64 * self.spacing_m
    }

    /// Aperture diagonal, the `D` of the Rayleigh distance `2D²/λ`.
    pub fn aperture_diagonal_m(&self) -> f64 {
        self.aperture_x_m().hypot(self.aperture_y_m())
    }

    pub fn center_position_m(&self) -> Vector3<f64> {
        self.center_position_m
    }

    pub fn orientation(&self) -> &Rotation3<f64> {
        &self.orientation
    }

    /// Flat index of element `(i_x, i_y)`.
    #[inline]
    pub fn flat_index(&self, i_x: usize, i_y: usize) -> usize {
        i_x * self.n_y + i_y
    }

    /// World coordinates of every element in flattening order.
    pub fn element_positions(&self) -> Vec<Vector3<f64>> {
        let off_x = (self.n_x as f64 - 1.0) / 2.0;
        let off_y = (self.n_y as f64 - 1.0) / 2.0;
        let mut out = Vec::with_capacity(self.num_elements());
        for i_x in 0..self.n_x {
            for i_y in 0..self.n_y {
                let local = Vector3::new(
                    (i_x as f64 - off_x) * self.spacing_m,
                    (i_y as f64 - off_y) * self.spacing_m,
                    0.0,
                );
                out.push(self.center_position_m + self.orientation * local);
            }
        }
        out
    }
}

/// Rayleigh distance `2 D² / λ` of the larger of two arrays.
pub fn rayleigh_distance_m(a: &ArrayGeometry, b: &ArrayGeometry, params: &SystemParams) -> f64 {
    let d = a.aperture_diagonal_m().max(b.aperture_diagonal_m());
    2.0 * d * d / params.wavelength_m()
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
    }
}
