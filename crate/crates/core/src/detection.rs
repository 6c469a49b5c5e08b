//! Displacement stage and detector figures of merit.
//!
//! After the medium the probe is displaced by `-alpha_p` and sent to an
//! on/off detector with unit efficiency. With a signal photon present the
//! probe has been phase-flipped, so the detector sees roughly
//! `|-2 alpha_p>` and clicks; without one it sees vacuum. The detector
//! misses the photon with probability equal to the vacuum weight of the
//! displaced probe.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{displacement, partial_trace, DensityOperator, Mode};
use crate::linalg::{self, Matrix, C64};

/// Default target for the cascaded miss probability.
pub const DEFAULT_CASCADE_THRESHOLD: f64 = 0.05;

/// Weight in the top two Fock levels above which a displacement is flagged.
pub const TRUNCATION_WARNING: f64 = 1e-6;

/// How the `-alpha_p` displacement is realised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BeamSplitterModel {
    /// Exact `D(-alpha_p)`.
    #[default]
    IdealDisplacement,
    /// A beam splitter of reflectivity `eta` for the probe, whose other input
    /// carries the coherent field `-xi alpha_p` with `xi = 1/sqrt(1 - eta)`.
    FiniteEta { eta: f64 },
}

impl BeamSplitterModel {
    /// Injected-amplitude scale `xi` that makes the transmitted ancilla equal
    /// to `-alpha_p`.
    pub fn xi(&self) -> f64 {
        match self {
            Self::IdealDisplacement => f64::INFINITY,
            Self::FiniteEta { eta } => 1.0 / (1.0 - eta).sqrt(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Self::FiniteEta { eta } = self {
            if !(*eta > 0.0 && *eta < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "beam-splitter reflectivity must lie in (0, 1), got {eta}"
                )));
            }
        }
        Ok(())
    }
}

/// Figures of merit for one probe amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub alpha_p: C64,
    /// Click probability with a signal photon present.
    pub p_click: f64,
    pub p_err_numeric: f64,
    pub p_err_analytic: f64,
    pub signal_fidelity: f64,
    /// Smallest cascade length bringing the numeric miss probability below
    /// the threshold; `None` if no cascade within [`MAX_CASCADE_UNITS`] does.
    pub cascade_n: Option<u32>,
    pub cascade_p_err: Option<f64>,
    /// Cascade length computed from the analytic miss probability.
    pub cascade_n_analytic: Option<u32>,
    pub cascade_threshold: f64,
    /// Click probability for a vacuum signal, when that branch was run.
    pub p_click_vacuum: Option<f64>,
}

impl DetectionReport {
    /// Scores the end-of-medium state for a single-photon signal input.
    pub fn from_state(rho_t: &DensityOperator, alpha_p: C64, threshold: f64) -> Result<Self> {
        Self::from_state_with(
            rho_t,
            alpha_p,
            threshold,
            BeamSplitterModel::IdealDisplacement,
        )
    }

    /// As [`DetectionReport::from_state`] with the displacement realised by
    /// `model`.
    pub fn from_state_with(
        rho_t: &DensityOperator,
        alpha_p: C64,
        threshold: f64,
        model: BeamSplitterModel,
    ) -> Result<Self> {
        let detected = displaced_state_with(rho_t, alpha_p, model)?;
        let vacuum = detected.population(0)?;
        let p_err_numeric = vacuum;
        let p_err_analytic = p_err_analytic(alpha_p.norm());
        let cascade_n = reachable_cascade(p_err_numeric, threshold)?;
        Ok(Self {
            alpha_p,
            p_click: 1.0 - vacuum,
            p_err_numeric,
            p_err_analytic,
            signal_fidelity: signal_fidelity(rho_t)?,
            cascade_n,
            cascade_p_err: cascade_n.map(|n| p_err_numeric.powi(n as i32)),
            cascade_n_analytic: reachable_cascade(p_err_analytic, threshold)?,
            cascade_threshold: threshold,
            p_click_vacuum: None,
        })
    }

    pub fn with_vacuum_branch(mut self, rho_vacuum: &DensityOperator) -> Result<Self> {
        self.p_click_vacuum = Some(p_click(rho_vacuum, self.alpha_p)?);
        Ok(self)
    }

    /// Column names matching [`DetectionReport::csv_record`].
    pub const CSV_HEADER: [&'static str; 12] = [
        "alpha_re",
        "alpha_im",
        "alpha_sq",
        "p_click",
        "p_err_numeric",
        "p_err_analytic",
        "signal_fidelity",
        "cascade_n",
        "cascade_p_err",
        "cascade_n_analytic",
        "cascade_threshold",
        "p_click_vacuum",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.alpha_p.re.to_string(),
            self.alpha_p.im.to_string(),
            self.alpha_p.norm_sqr().to_string(),
            self.p_click.to_string(),
            self.p_err_numeric.to_string(),
            self.p_err_analytic.to_string(),
            self.signal_fidelity.to_string(),
            optional(self.cascade_n),
            optional(self.cascade_p_err),
            optional(self.cascade_n_analytic),
            self.cascade_threshold.to_string(),
            optional(self.p_click_vacuum),
        ]
    }
}

fn optional<T: ToString>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn probe_state(rho: &DensityOperator) -> Result<DensityOperator> {
    if rho.space().n_modes() == 1 {
        Ok(rho.clone())
    } else {
        partial_trace(rho, &[Mode::Probe.index()])
    }
}

/// `D(-alpha) rho D(-alpha)^dag` on the probe mode (reducing first if needed).
pub fn displaced_state(rho_t: &DensityOperator, alpha: C64) -> Result<DensityOperator> {
    displaced_state_with(rho_t, alpha, BeamSplitterModel::IdealDisplacement)
}

pub fn displaced_state_with(
    rho_t: &DensityOperator,
    alpha: C64,
    model: BeamSplitterModel,
) -> Result<DensityOperator> {
    model.validate()?;
    let probe = probe_state(rho_t)?;
    let dim = probe.space().dims()[0];
    let input = match model {
        BeamSplitterModel::IdealDisplacement => probe.matrix().clone(),
        BeamSplitterModel::FiniteEta { eta } => pure_loss(probe.matrix(), eta),
    };
    let d = displacement(-alpha, dim)?;
    let out = d
        .matrix()
        .dot(&input)
        .dot(&linalg::dagger(&d.matrix().view()));
    let out = DensityOperator::new(out, probe.space().clone(), probe.tail())?;
    let edge = out.top_level_weight(2)?;
    if edge > TRUNCATION_WARNING {
        log::warn!(
            "displacement by {alpha} leaves {edge:.2e} of weight in the top two Fock levels; \
             increase the probe truncation"
        );
    }
    Ok(out)
}

/// Pure-loss channel keeping amplitude fraction `sqrt(eta)`.
///
/// A coherent ancilla mixed on a beam splitter and traced out acts on the
/// reflected port as this channel followed by a displacement, which is how
/// [`BeamSplitterModel::FiniteEta`] is evaluated.
pub fn pure_loss(rho: &Matrix, eta: f64) -> Matrix {
    let dim = rho.nrows();
    let mut out = Matrix::zeros((dim, dim));
    // Kraus K_k|n> = sqrt(C(n,k) eta^(n-k) (1-eta)^k) |n-k>
    let kraus = |n: usize, k: usize| -> f64 {
        let mut binom = 1.0;
        for i in 0..k {
            binom *= (n - i) as f64 / (i + 1) as f64;
        }
        (binom * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32)).sqrt()
    };
    for k in 0..dim {
        for m in k..dim {
            for n in k..dim {
                out[[m - k, n - k]] += rho[[m, n]] * kraus(m, k) * kraus(n, k);
            }
        }
    }
    out
}

/// `e^{-4 alpha_p^2}`: the vacuum weight of `|-2 alpha_p>`.
pub fn p_err_analytic(alpha_p: f64) -> f64 {
    (-4.0 * alpha_p * alpha_p).exp()
}

/// Vacuum probability of the displaced transmitted probe.
pub fn p_err_numeric(rho_t: &DensityOperator, alpha_p: C64) -> Result<f64> {
    displaced_state(rho_t, alpha_p)?.population(0)
}

/// `1 - <0| rho_D |0>`.
pub fn p_click(rho_t: &DensityOperator, alpha_p: C64) -> Result<f64> {
    Ok(1.0 - p_err_numeric(rho_t, alpha_p)?)
}

/// Population of `|1>` in the reduced signal mode.
pub fn signal_fidelity(rho: &DensityOperator) -> Result<f64> {
    if rho.space().n_modes() != 3 {
        return Err(Error::InvalidParameter(
            "signal fidelity needs the full three-mode state".into(),
        ));
    }
    partial_trace(rho, &[Mode::Signal.index()])?.population(1)
}

/// Longest cascade [`cascade_count`] will report.
pub const MAX_CASCADE_UNITS: u32 = 1000;

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "cascade threshold must lie in (0, 1), got {threshold}"
        )));
    }
    Ok(())
}

/// Smallest `N >= 1` with `p_err^N < threshold`.
pub fn cascade_count(p_err: f64, threshold: f64) -> Result<u32> {
    if !(p_err > 0.0 && p_err < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "cascade needs 0 < p_err < 1, got {p_err}"
        )));
    }
    check_threshold(threshold)?;
    let estimate = (threshold.ln() / p_err.ln()).floor() + 1.0;
    if estimate > f64::from(MAX_CASCADE_UNITS) + 1.0 {
        return Err(Error::Domain(format!(
            "p_err = {p_err} needs more than {MAX_CASCADE_UNITS} cascaded units"
        )));
    }
    let mut n = (estimate as u32).max(1);
    // Guard the logarithm against rounding at the boundary.
    while n > 1 && p_err.powi(n as i32 - 1) < threshold {
        n -= 1;
    }
    while p_err.powi(n as i32) >= threshold {
        n += 1;
    }
    if n > MAX_CASCADE_UNITS {
        return Err(Error::Domain(format!(
            "p_err = {p_err} needs more than {MAX_CASCADE_UNITS} cascaded units"
        )));
    }
    Ok(n)
}

/// [`cascade_count`], or `None` when no cascade of at most
/// [`MAX_CASCADE_UNITS`] reaches the threshold.
pub fn reachable_cascade(p_err: f64, threshold: f64) -> Result<Option<u32>> {
    check_threshold(threshold)?;
    if p_err >= 1.0 {
        return Ok(None);
    }
    match cascade_count(p_err, threshold) {
        Ok(n) => Ok(Some(n)),
        Err(Error::Domain(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `F / P_err` for one detection unit.
pub fn efficiency_ratio(report: &DetectionReport) -> f64 {
    report.signal_fidelity / report.p_err_numeric
}

/// `F^N / P_err^N` for a cascade of `n` units.
pub fn cascade_efficiency_ratio(report: &DetectionReport, n: u32) -> f64 {
    efficiency_ratio(report).powi(n as i32)
}
