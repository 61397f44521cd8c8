//! Capacity of the benchmark schemes and the hybrid precoder realizing the
//! wavenumber-domain streams.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, SystemParams};
use crate::power::{
    allocate_dc, allocate_iwf, allocate_pso, allocate_waterfill, waterfill, CouplingMatrix, PowerAllocation,
    SolverOptions,
};
use crate::selection::{gain_matrix, select_hungarian, StreamAssignment};
use crate::wavenumber::{build_dictionary, enumerate_support, to_wavenumber, Dictionary, WavenumberChannel};

/// Singular values below `RANK_TOL · σ₁` do not count towards the rank.
pub const RANK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "WD_DC")]
    WdDc,
    #[serde(rename = "WD_WF")]
    WdWf,
    #[serde(rename = "WD_IWF")]
    WdIwf,
    #[serde(rename = "WD_PSO")]
    WdPso,
    #[serde(rename = "SVD_BOUND")]
    SvdBound,
    #[serde(rename = "SPATIAL_DIVISION")]
    SpatialDivision,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::SvdBound,
        Scheme::SpatialDivision,
        Scheme::WdDc,
        Scheme::WdWf,
        Scheme::WdIwf,
        Scheme::WdPso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::WdDc => "WD_DC",
            Scheme::WdWf => "WD_WF",
            Scheme::WdIwf => "WD_IWF",
            Scheme::WdPso => "WD_PSO",
            Scheme::SvdBound => "SVD_BOUND",
            Scheme::SpatialDivision => "SPATIAL_DIVISION",
        }
    }

    pub fn is_wavenumber(self) -> bool {
        matches!(self, Scheme::WdDc | Scheme::WdWf | Scheme::WdIwf | Scheme::WdPso)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

/// Power allocator used for the wavenumber-domain streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Allocator {
    Dc,
    Waterfill,
    Iwf,
    Pso,
}

impl Allocator {
    pub fn scheme(self) -> Scheme {
        match self {
            Allocator::Dc => Scheme::WdDc,
            Allocator::Waterfill => Scheme::WdWf,
            Allocator::Iwf => Scheme::WdIwf,
            Allocator::Pso => Scheme::WdPso,
        }
    }

    pub fn for_scheme(s: Scheme) -> Option<Allocator> {
        match s {
            Scheme::WdDc => Some(Allocator::Dc),
            Scheme::WdWf => Some(Allocator::Waterfill),
            Scheme::WdIwf => Some(Allocator::Iwf),
            Scheme::WdPso => Some(Allocator::Pso),
            _ => None,
        }
    }

    pub fn allocate(self, coupling: &CouplingMatrix, opts: &SolverOptions) -> Result<PowerAllocation> {
        match self {
            Allocator::Dc => allocate_dc(coupling, opts),
            Allocator::Waterfill => Ok(allocate_waterfill(coupling)),
            Allocator::Iwf => allocate_iwf(coupling, opts),
            Allocator::Pso => allocate_pso(coupling, opts),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub distance_m: Option<f64>,
    pub n_x: Option<usize>,
    pub n_y: Option<usize>,
    pub seed: Option<u64>,
}

impl ReportMetadata {
    pub fn for_channel(h: &ChannelMatrix) -> Self {
        let d = (h.rx().center_position_m() - h.tx().center_position_m()).norm();
        Self {
            distance_m: Some(d),
            n_x: Some(h.tx().n_x()),
            n_y: Some(h.tx().n_y()),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityReport {
    pub scheme: Scheme,
    pub per_stream_sinr: Vec<f64>,
    pub capacity_bits: f64,
    pub num_streams: usize,
    pub metadata: ReportMetadata,
}

fn rate_bits(sinr: &[f64]) -> f64 {
    sinr.iter().map(|s| s.ln_1p()).sum::<f64>() / std::f64::consts::LN_2
}

/// `H = U D Vᴴ` with singular values in descending order.
#[derive(Debug, Clone)]
pub struct SvdDecomposition {
    pub left_vectors: DMatrix<Complex64>,
    pub singular_values: Vec<f64>,
    pub right_vectors: DMatrix<Complex64>,
    pub rank_effective: usize,
}

impl SvdDecomposition {
    pub fn compute(h: &ChannelMatrix) -> Self {
        let svd = h.entries().clone().svd(true, true);
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested Vᴴ");
        let left = DMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
        let right = DMatrix::from_fn(v_t.ncols(), order.len(), |i, j| v_t[(order[j], i)].conj());
        let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        Self {
            rank_effective: effective_rank(&singular_values),
            left_vectors: left,
            singular_values,
            right_vectors: right,
        }
    }
}

/// Singular values of `h`, descending.
pub fn singular_values(h: &ChannelMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = h.entries().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn effective_rank(sorted_sv: &[f64]) -> usize {
    match sorted_sv.first() {
        Some(&top) if top > 0.0 => sorted_sv.iter().filter(|s| **s > RANK_TOL * top).count(),
        _ => 0,
    }
}

/// Fully-digital SVD capacity with water-filling over the top modes.
pub fn svd_capacity(h: &ChannelMatrix, params: &SystemParams, max_streams: Option<usize>) -> CapacityReport {
    svd_capacity_from_spectrum(&singular_values(h), params, max_streams, ReportMetadata::for_channel(h))
}

pub fn svd_capacity_from_spectrum(
    sorted_sv: &[f64],
    params: &SystemParams,
    max_streams: Option<usize>,
    metadata: ReportMetadata,
) -> CapacityReport {
    let modes = effective_rank(sorted_sv).min(max_streams.unwrap_or(usize::MAX));
    let eig: Vec<f64> = sorted_sv[..modes].iter().map(|s| s * s).collect();
    let noise = params.noise_power_w();
    let p = waterfill(&eig, params.total_tx_power_w(), noise);
    let sinr: Vec<f64> = eig.iter().zip(&p).map(|(l, p)| p * l / noise).collect();
    CapacityReport {
        scheme: Scheme::SvdBound,
        capacity_bits: rate_bits(&sinr),
        num_streams: p.iter().filter(|p| **p > 0.0).count(),
        per_stream_sinr: sinr,
        metadata,
    }
}

/// Single-direction transmission with the whole budget on the strongest
/// eigenmode.
pub fn spatial_division_capacity(h: &ChannelMatrix, params: &SystemParams) -> CapacityReport {
    spatial_division_from_spectrum(&singular_values(h), params, ReportMetadata::for_channel(h))
}

pub fn spatial_division_from_spectrum(
    sorted_sv: &[f64],
    params: &SystemParams,
    metadata: ReportMetadata,
) -> CapacityReport {
    let top = sorted_sv.first().copied().unwrap_or(0.0);
    let sinr = params.total_tx_power_w() * top * top / params.noise_power_w();
    CapacityReport {
        scheme: Scheme::SpatialDivision,
        capacity_bits: rate_bits(&[sinr]),
        per_stream_sinr: vec![sinr],
        num_streams: 1,
        metadata,
    }
}

/// Per-stream SINR of the selected pairs at powers `p`.
pub fn wd_sinr(h_a: &WavenumberChannel, assign: &StreamAssignment, p: &[f64], noise: f64) -> Result<Vec<f64>> {
    if p.len() != assign.len() {
        return Err(Error::ShapeMismatch {
            expected: (assign.len(), 1),
            got: (p.len(), 1),
        });
    }
    let gains = gain_matrix(h_a);
    // Budget only matters to the solvers; any positive value works here.
    let coupling = CouplingMatrix::from_assignment(&gains, assign, noise, 1.0)?;
    Ok(coupling.sinr(p))
}

/// Analog precoder/combiner built from dictionary codewords plus the
/// diagonal digital stage `diag(√p_k)`.
#[derive(Debug, Clone)]
pub struct HybridPrecoder {
    pub analog_tx: DMatrix<Complex64>,
    pub digital_tx: DMatrix<Complex64>,
    pub analog_rx: DMatrix<Complex64>,
}

impl HybridPrecoder {
    /// `‖F_A F_D‖_F²`.
    pub fn transmit_power(&self) -> f64 {
        (&self.analog_tx * &self.digital_tx).norm_squared()
    }

    /// `C_A H F_A`, the `K × K` channel seen between RF chains.
    pub fn effective_channel(&self, h: &ChannelMatrix) -> DMatrix<Complex64> {
        &self.analog_rx * (h.entries() * &self.analog_tx)
    }
}

pub fn assemble_hybrid(
    tx_dict: &Dictionary,
    rx_dict: &Dictionary,
    assign: &StreamAssignment,
    p: &[f64],
    params: &SystemParams,
) -> Result<HybridPrecoder> {
    let k = assign.len();
    if let (Some(tx), Some(rx)) = (params.num_rf_chains_tx(), params.num_rf_chains_rx()) {
        if k > tx.min(rx) {
            return Err(Error::RfChainLimit { streams: k, tx, rx });
        }
    }
    if p.len() != k {
        return Err(Error::ShapeMismatch {
            expected: (k, 1),
            got: (p.len(), 1),
        });
    }
    let (rows, cols) = (rx_dict.num_codewords(), tx_dict.num_codewords());
    for &(r, c) in &assign.pairs {
        if r >= rows || c >= cols {
            return Err(Error::IndexOutOfRange {
                row: r,
                col: c,
                rows,
                cols,
            });
        }
    }
    let tx = tx_dict.matrix();
    let rx = rx_dict.matrix();
    let analog_tx = DMatrix::from_fn(tx.nrows(), k, |i, j| tx[(i, assign.pairs[j].1)]);
    let analog_rx = DMatrix::from_fn(k, rx.nrows(), |i, j| rx[(j, assign.pairs[i].0)].conj());
    let digital_tx = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            Complex64::new(p[i].max(0.0).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(HybridPrecoder {
        analog_tx,
        digital_tx,
        analog_rx,
    })
}

/// Largest deviation between `C_A H F_A` and the matching `H_a` entries.
pub fn keystone_deviation(
    h: &ChannelMatrix,
    h_a: &WavenumberChannel,
    assign: &StreamAssignment,
    hybrid: &HybridPrecoder,
) -> f64 {
    let eff = hybrid.effective_channel(h);
    let mut worst = 0.0f64;
    for (k, &(r, _)) in assign.pairs.iter().enumerate() {
        for (m, &(_, c)) in assign.pairs.iter().enumerate() {
            worst = worst.max((eff[(k, m)] - h_a.entries()[(r, c)]).norm());
        }
    }
    worst
}

/// Supports and dictionaries for one Tx/Rx geometry pair. They depend only
/// on the arrays, so one pipeline serves every channel drawn between them.
#[derive(Debug, Clone)]
pub struct WdPipeline {
    pub tx_dict: Dictionary,
    pub rx_dict: Dictionary,
    params: SystemParams,
    max_streams: Option<usize>,
    verify_keystone: bool,
}

/// Selection stage output, shared by every allocator.
#[derive(Debug, Clone)]
pub struct WdSelection {
    pub h_a: WavenumberChannel,
    pub gains: DMatrix<f64>,
    pub assignment: StreamAssignment,
    pub coupling: CouplingMatrix,
}

#[derive(Debug, Clone)]
pub struct WdOutcome {
    pub report: CapacityReport,
    pub allocation: PowerAllocation,
}

impl WdPipeline {
    pub fn new(tx: &ArrayGeometry, rx: &ArrayGeometry, params: &SystemParams, beta: f64) -> Result<Self> {
        Ok(Self {
            tx_dict: build_dictionary(&enumerate_support(tx, params, beta)?),
            rx_dict: build_dictionary(&enumerate_support(rx, params, beta)?),
            params: params.clone(),
            max_streams: None,
            verify_keystone: false,
        })
    }

    /// Keeps at most `m` of the selected pairs.
    pub fn with_max_streams(mut self, m: Option<usize>) -> Self {
        self.max_streams = m;
        self
    }

    /// Checks `C_A H F_A` against `H_a` on every evaluation.
    pub fn with_keystone_check(mut self, on: bool) -> Self {
        self.verify_keystone = on;
        self
    }

    pub fn select(&self, h: &ChannelMatrix) -> Result<WdSelection> {
        let h_a = to_wavenumber(h, &self.rx_dict, &self.tx_dict)?;
        let gains = gain_matrix(&h_a);
        let mut assignment = select_hungarian(&gains);
        if let Some(m) = self.max_streams {
            assignment = assignment.truncated(m, &gains);
        }
        let coupling = CouplingMatrix::from_assignment(
            &gains,
            &assignment,
            self.params.noise_power_w(),
            self.params.total_tx_power_w(),
        )?;
        Ok(WdSelection {
            h_a,
            gains,
            assignment,
            coupling,
        })
    }

    pub fn allocate(
        &self,
        h: &ChannelMatrix,
        sel: &WdSelection,
        allocator: Allocator,
        opts: &SolverOptions,
    ) -> Result<WdOutcome> {
        let allocation = allocator.allocate(&sel.coupling, opts)?;
        let sinr = wd_sinr(
            &sel.h_a,
            &sel.assignment,
            &allocation.powers_w,
            self.params.noise_power_w(),
        )?;
        if self.verify_keystone {
            let hybrid = assemble_hybrid(
                &self.tx_dict,
                &self.rx_dict,
                &sel.assignment,
                &allocation.powers_w,
                &self.params,
            )?;
            let dev = keystone_deviation(h, &sel.h_a, &sel.assignment, &hybrid);
            if dev > 1e-10 {
                return Err(Error::Keystone(dev));
            }
        }
        let report = CapacityReport {
            scheme: allocator.scheme(),
            capacity_bits: rate_bits(&sinr),
            num_streams: allocation.active_streams(),
            per_stream_sinr: sinr,
            metadata: ReportMetadata::for_channel(h),
        };
        Ok(WdOutcome { report, allocation })
    }

    pub fn evaluate(&self, h: &ChannelMatrix, allocator: Allocator, opts: &SolverOptions) -> Result<WdOutcome> {
        let sel = self.select(h)?;
        self.allocate(h, &sel, allocator, opts)
    }
}

/// Full wavenumber-domain pipeline: support, dictionaries, transform,
/// selection, allocation and rate.
pub fn wd_capacity_report(
    h: &ChannelMatrix,
    params: &SystemParams,
    beta: f64,
    allocator: Allocator,
    opts: &SolverOptions,
) -> Result<CapacityReport> {
    let pipeline = WdPipeline::new(h.tx(), h.rx(), params, beta)?;
    Ok(pipeline.evaluate(h, allocator, opts)?.report)
}

/// `10 log10(C_WD / C_SD)`, logged alongside sweep summaries.
pub fn capacity_ratio_db(wd_bits: f64, sd_bits: f64) -> f64 {
    10.0 * (wd_bits / sd_bits).log10()
}
