//! Wavenumber-domain representation of a channel.
//!
//! A planar array of `n_x × n_y` elements at spacing `δ` observes spatial
//! harmonics `exp(j 2π (l_x i_x / n_x + l_y i_y / n_y))`. The harmonics whose
//! spatial frequency lies inside the ellipse
//!
//! ```text
//! (2π l_x / L_x)² + (2π l_y / L_y)² ≤ β k²
//! ```
//!
//! form the wavenumber support. With `β = 1` only propagating waves are kept;
//! `β > 1` admits part of the evanescent spectrum. The support is clipped per
//! axis to the half-open range `⌈-n/2⌉ ..= ⌈n/2⌉ - 1` so that no two indices
//! alias to the same DFT column, which keeps the dictionary orthonormal.
//!
//! Nothing here depends on the Tx–Rx distance: the same codebook serves
//! near-field and far-field placements.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, SystemParams};

/// Relative slack on the ellipse test so lattice points that sit exactly on
/// the boundary are not lost to rounding.
const BOUNDARY_SLACK: f64 = 1e-12;

/// Sorted, alias-free set of integer harmonic indices `(l_x, l_y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavenumberSupport {
    indices: Vec<(i64, i64)>,
    beta: f64,
    geom: ArrayGeometry,
}

impl WavenumberSupport {
    pub fn indices(&self) -> &[(i64, i64)] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geom
    }

    pub fn position(&self, index: (i64, i64)) -> Option<usize> {
        self.indices.binary_search(&index).ok()
    }

    /// Index list in a serializable form for reports.
    pub fn to_report(&self) -> SupportReport {
        SupportReport {
            n_x: self.geom.n_x(),
            n_y: self.geom.n_y(),
            beta: self.beta,
            indices: self.indices.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SupportReport {
    pub n_x: usize,
    pub n_y: usize,
    pub beta: f64,
    pub indices: Vec<(i64, i64)>,
}

/// Alias-free integer range for an axis with `n` samples.
pub fn axis_range(n: usize) -> std::ops::RangeInclusive<i64> {
    let n = n as i64;
    -(n / 2)..=(n + 1) / 2 - 1
}

/// Enumerates the wavenumber support of `geom`.
pub fn enumerate_support(geom: &ArrayGeometry, params: &SystemParams, beta: f64) -> Result<WavenumberSupport> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid("beta", format!("must be positive, got {beta}")));
    }
    // Divide the inequality through by k²: (l_x λ / L_x)² + (l_y λ / L_y)² ≤ β.
    let lambda = params.wavelength_m();
    let sx = lambda / geom.aperture_x_m();
    let sy = lambda / geom.aperture_y_m();
    let limit = beta * (1.0 + BOUNDARY_SLACK);
    let mut indices = Vec::new();
    for lx in axis_range(geom.n_x()) {
        let ux = lx as f64 * sx;
        for ly in axis_range(geom.n_y()) {
            let uy = ly as f64 * sy;
            if ux * ux + uy * uy <= limit {
                indices.push((lx, ly));
            }
        }
    }
    if indices.is_empty() {
        return Err(Error::EmptySupport);
    }
    // Nested ascending loops already produce lexicographic order.
    Ok(WavenumberSupport {
        indices,
        beta,
        geom: geom.clone(),
    })
}

/// Fourier codebook `Ψ` (`N × |ξ|`) whose columns are equal-norm harmonics.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    matrix: DMatrix<Complex64>,
    support: WavenumberSupport,
}

impl Dictionary {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn support(&self) -> &WavenumberSupport {
        &self.support
    }

    pub fn num_elements(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_codewords(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn column(&self, j: usize) -> nalgebra::DVectorView<'_, Complex64> {
        self.matrix.column(j)
    }
}

/// `exp(j 2π num / den)` with the fraction reduced first, so the argument
/// handed to sin/cos stays in `[0, 2π)`.
fn unit_phasor(num: i64, den: usize) -> Complex64 {
    let den = den as i64;
    let r = num.rem_euclid(den);
    let theta = 2.0 * std::f64::consts::PI * r as f64 / den as f64;
    Complex64::new(theta.cos(), theta.sin())
}

pub fn build_dictionary(support: &WavenumberSupport) -> Dictionary {
    let g = &support.geom;
    let (nx, ny) = (g.n_x(), g.n_y());
    let scale = 1.0 / (g.num_elements() as f64).sqrt();
    let mut m = DMatrix::zeros(g.num_elements(), support.len());
    for (col, &(lx, ly)) in support.indices.iter().enumerate() {
        for ix in 0..nx {
            let px = lx * ix as i64;
            for iy in 0..ny {
                // Sum the two reduced fractions over a common denominator.
                let num = px.rem_euclid(nx as i64) * ny as i64 + (ly * iy as i64).rem_euclid(ny as i64) * nx as i64;
                m[(g.flat_index(ix, iy), col)] = unit_phasor(num, nx * ny) * scale;
            }
        }
    }
    Dictionary {
        matrix: m,
        support: support.clone(),
    }
}

/// Channel coefficients `H_a` over the Rx × Tx harmonic pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct WavenumberChannel {
    entries: DMatrix<Complex64>,
    rx_support: WavenumberSupport,
    tx_support: WavenumberSupport,
}

impl WavenumberChannel {
    pub fn new(entries: DMatrix<Complex64>, rx_dict: &Dictionary, tx_dict: &Dictionary) -> Result<Self> {
        let expected = (rx_dict.num_codewords(), tx_dict.num_codewords());
        if entries.shape() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                got: entries.shape(),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("wavenumber channel"));
        }
        Ok(Self {
            entries,
            rx_support: rx_dict.support.clone(),
            tx_support: tx_dict.support.clone(),
        })
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn rx_support(&self) -> &WavenumberSupport {
        &self.rx_support
    }

    pub fn tx_support(&self) -> &WavenumberSupport {
        &self.tx_support
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.shape()
    }
}

/// `H_a = Ψ_Rᴴ · H · Ψ_T`.
///
/// The columns of each dictionary are orthonormal, so this is the
/// least-squares coefficient matrix of `H ≈ Ψ_R H_a Ψ_Tᴴ`.
pub fn to_wavenumber(h: &ChannelMatrix, rx_dict: &Dictionary, tx_dict: &Dictionary) -> Result<WavenumberChannel> {
    let (nr, nt) = h.entries().shape();
    if rx_dict.num_elements() != nr || tx_dict.num_elements() != nt {
        return Err(Error::ShapeMismatch {
            expected: (rx_dict.num_elements(), tx_dict.num_elements()),
            got: (nr, nt),
        });
    }
    let ht = h.entries() * tx_dict.matrix();
    let entries = rx_dict.matrix().ad_mul(&ht);
    Ok(WavenumberChannel {
        entries,
        rx_support: rx_dict.support.clone(),
        tx_support: tx_dict.support.clone(),
    })
}

/// `H = Ψ_R · H_a · Ψ_Tᴴ`.
pub fn from_wavenumber(h_a: &WavenumberChannel, rx_dict: &Dictionary, tx_dict: &Dictionary) -> Result<ChannelMatrix> {
    let expected = (rx_dict.num_codewords(), tx_dict.num_codewords());
    if h_a.shape() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            got: h_a.shape(),
        });
    }
    let left = rx_dict.matrix() * h_a.entries();
    let h = left * tx_dict.matrix().adjoint();
    ChannelMatrix::new(h, tx_dict.support.geom.clone(), rx_dict.support.geom.clone())
}
