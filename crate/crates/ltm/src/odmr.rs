//! ODMR spectra: synthesis through the steady-state solver and
//! multi-Lorentzian fitting of measured or synthetic spectra.
//!
//! The fitted model is I(ν) = I0·(1 − Σ_k C_k·Δν_k²/(Δν_k² + 4(ν−ν_k)²)),
//! with I in photons/s so the sensitivity module can consume fits directly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::levenberg_marquardt;
use crate::params::{photon_energy_with, ModelParams};
use crate::steady::{multi_family_steady_state, output_power, Family};

/// A spin resonance the microwave sweep passes over: its center frequency
/// and the fraction of the NV ensemble it addresses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    /// Resonance center, Hz
    pub center: f64,
    /// Ensemble fraction, weights over all lines sum to 1
    pub weight: f64,
}

/// Sampled laser output versus microwave frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdmrSpectrum {
    /// (frequency Hz, output W), strictly ascending in frequency.
    pub points: Vec<(f64, f64)>,
    pub params_snapshot: Option<ModelParams>,
    pub label: String,
}

impl OdmrSpectrum {
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty()
            || self.points.windows(2).any(|w| w[1].0 <= w[0].0)
            || self.points.iter().any(|p| p.1 < 0.0)
        {
            return Err(Error::InvalidFrequencyGrid);
        }
        Ok(())
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn outputs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }
}

/// One fitted resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    /// Center ν_k, Hz
    pub center: f64,
    /// FWHM Δν_k, Hz
    pub fwhm: f64,
    /// Dip depth C_k relative to the baseline, in [0, 1]
    pub contrast: f64,
}

/// Multi-Lorentzian fit of an ODMR spectrum, in photon-rate units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    /// Shared baseline I0, photons/s
    pub baseline: f64,
    /// Resonances in ascending center order
    pub resonances: Vec<Resonance>,
    /// RMS residual of the fit, photons/s
    pub residual_rms: f64,
    /// Covariance over the natural parameters, ordered
    /// [I0, center_1, fwhm_1, contrast_1, center_2, ...]. Empty when the
    /// normal matrix was singular or the fit was constructed by hand.
    pub covariance: Vec<Vec<f64>>,
    /// Per-resonance flag: contrast converged onto its upper bound of 1.
    pub contrast_pinned: Vec<bool>,
    /// Per-resonance flag: fitted center left the grid span by more than one
    /// linewidth.
    pub centers_outside_span: Vec<bool>,
    pub iterations: usize,
}

impl LorentzianFit {
    /// Builds a fit object directly from known parameters (no covariance).
    pub fn from_parts(baseline: f64, resonances: Vec<Resonance>) -> Self {
        let n = resonances.len();
        Self {
            baseline,
            resonances,
            residual_rms: 0.0,
            covariance: Vec::new(),
            contrast_pinned: vec![false; n],
            centers_outside_span: vec![false; n],
            iterations: 0,
        }
    }

    /// Model photon rate I(ν).
    pub fn value(&self, nu: f64) -> f64 {
        let mut dip = 0.0;
        for r in &self.resonances {
            let offset = nu - r.center;
            dip += r.contrast * r.fwhm * r.fwhm / (r.fwhm * r.fwhm + 4.0 * offset * offset);
        }
        self.baseline * (1.0 - dip)
    }

    /// Analytic derivative dI/dν.
    pub fn derivative(&self, nu: f64) -> f64 {
        let mut slope = 0.0;
        for r in &self.resonances {
            let offset = nu - r.center;
            let denom = r.fwhm * r.fwhm + 4.0 * offset * offset;
            slope += r.contrast * r.fwhm * r.fwhm * 8.0 * offset / (denom * denom);
        }
        self.baseline * slope
    }
}

/// Synthesizes an ODMR spectrum: at each grid frequency every line becomes an
/// NV family with detuning `f − center`, and the coupled steady state is
/// solved at the common photon number.
pub fn synthesize_odmr(
    params: &ModelParams,
    freq_grid: &[f64],
    lines: &[SpectralLine],
) -> Result<OdmrSpectrum> {
    if freq_grid.is_empty() || freq_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidFrequencyGrid);
    }
    let lo = freq_grid[0];
    let hi = *freq_grid.last().unwrap();
    let span = hi - lo;
    for line in lines {
        if line.center < lo - span || line.center > hi + span {
            return Err(Error::ResonanceOutsideGrid {
                center_hz: line.center,
            });
        }
    }
    let mut points = Vec::with_capacity(freq_grid.len());
    for &f in freq_grid {
        let families: Vec<Family> = lines
            .iter()
            .map(|l| Family {
                weight: l.weight,
                delta: f - l.center,
            })
            .collect();
        let solution = multi_family_steady_state(params, &families)?;
        points.push((f, output_power(solution.n_photons, params)?));
    }
    Ok(OdmrSpectrum {
        points,
        params_snapshot: Some(*params),
        label: "odmr sweep".to_string(),
    })
}

/// Initial guess for one dip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakGuess {
    pub center: f64,
    pub fwhm: f64,
    pub contrast: f64,
}

fn baseline_estimate(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let quartile = &sorted[..(sorted.len() + 3) / 4];
    let m = quartile.len();
    if m % 2 == 1 {
        quartile[m / 2]
    } else {
        0.5 * (quartile[m / 2 - 1] + quartile[m / 2])
    }
}

/// Finds local minima deeper than `min_depth` × baseline and guesses their
/// width from the half-depth crossings. Returns guesses in center order; an
/// empty list when nothing crosses the depth cut.
pub fn detect_peaks(spectrum: &OdmrSpectrum, min_depth: f64) -> Result<Vec<PeakGuess>> {
    spectrum.validate()?;
    if spectrum.points.len() < 5 {
        return Err(Error::TooFewSpectrumPoints {
            needed: 5,
            found: spectrum.points.len(),
        });
    }
    let freqs = spectrum.frequencies();
    let ys = spectrum.outputs();
    let n = ys.len();
    let baseline = baseline_estimate(&ys);
    if baseline <= 0.0 {
        return Ok(Vec::new());
    }

    let mut guesses = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        // treat a run of equal values as a single candidate minimum
        let run_start = i;
        let mut run_end = i;
        while run_end + 1 < n - 1 && ys[run_end + 1] == ys[run_start] {
            run_end += 1;
        }
        let is_minimum = ys[run_start] <= ys[run_start - 1]
            && ys[run_end] <= ys[run_end + 1]
            && (ys[run_start] < ys[run_start - 1] || ys[run_end] < ys[run_end + 1]);
        if is_minimum {
            let y_min = ys[run_start];
            let depth = baseline - y_min;
            if depth > min_depth * baseline {
                let center = 0.5 * (freqs[run_start] + freqs[run_end]);
                let level = y_min + 0.5 * depth;
                // half-depth crossing on the left
                let mut left = freqs[0];
                for j in (0..run_start).rev() {
                    if ys[j] >= level {
                        let t = (level - ys[j + 1]) / (ys[j] - ys[j + 1]);
                        left = freqs[j + 1] + t * (freqs[j] - freqs[j + 1]);
                        break;
                    }
                }
                // and on the right
                let mut right = freqs[n - 1];
                for j in run_end + 1..n {
                    if ys[j] >= level {
                        let t = (level - ys[j - 1]) / (ys[j] - ys[j - 1]);
                        right = freqs[j - 1] + t * (freqs[j] - freqs[j - 1]);
                        break;
                    }
                }
                let fwhm = (right - left).max(freqs[1] - freqs[0]);
                guesses.push(PeakGuess {
                    center,
                    fwhm,
                    contrast: (depth / baseline).min(1.0),
                });
            }
        }
        i = run_end + 1;
    }
    guesses.sort_by(|a, b| a.center.total_cmp(&b.center));
    Ok(guesses)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(y: f64) -> f64 {
    let y = y.clamp(1e-9, 1.0 - 1e-9);
    (y / (1.0 - y)).ln()
}

fn model_from_theta(theta: &[f64], span: f64) -> LorentzianFit {
    let k = (theta.len() - 1) / 3;
    let mut resonances = Vec::with_capacity(k);
    for j in 0..k {
        resonances.push(Resonance {
            center: theta[1 + 3 * j],
            fwhm: span * sigmoid(theta[2 + 3 * j]),
            contrast: sigmoid(theta[3 + 3 * j]),
        });
    }
    LorentzianFit {
        baseline: theta[0].exp(),
        resonances,
        residual_rms: 0.0,
        covariance: Vec::new(),
        contrast_pinned: Vec::new(),
        centers_outside_span: Vec::new(),
        iterations: 0,
    }
}

/// Fits `k` Lorentzian dips plus a shared baseline to a spectrum.
///
/// The spectrum is converted from watts to photon rates with the photon
/// energy at `wavelength_m` before fitting. Bounds are enforced through the
/// parameterization: contrast by a logistic transform, linewidth by a
/// logistic transform scaled to the grid span. Without explicit guesses the
/// `k` deepest detected dips seed the fit.
pub fn fit_lorentzians(
    spectrum: &OdmrSpectrum,
    k: usize,
    guesses: Option<&[PeakGuess]>,
    wavelength_m: f64,
) -> Result<LorentzianFit> {
    spectrum.validate()?;
    if k == 0 {
        return Err(Error::TooFewPeaks {
            requested: 0,
            detected: 0,
        });
    }
    let constants = spectrum
        .params_snapshot
        .map(|p| p.constants)
        .unwrap_or_default();
    let e_ph = photon_energy_with(wavelength_m, &constants)?;
    let freqs = spectrum.frequencies();
    let rates: Vec<f64> = spectrum.points.iter().map(|p| p.1 / e_ph).collect();
    let span = freqs.last().unwrap() - freqs[0];

    let seeds: Vec<PeakGuess> = match guesses {
        Some(g) => {
            if g.len() < k {
                return Err(Error::TooFewPeaks {
                    requested: k,
                    detected: g.len(),
                });
            }
            let mut sorted = g.to_vec();
            sorted.sort_by(|a, b| b.contrast.total_cmp(&a.contrast));
            sorted.truncate(k);
            sorted.sort_by(|a, b| a.center.total_cmp(&b.center));
            sorted
        }
        None => {
            let detected = detect_peaks(spectrum, 0.02)?;
            if detected.len() < k {
                return Err(Error::TooFewPeaks {
                    requested: k,
                    detected: detected.len(),
                });
            }
            let mut sorted = detected;
            sorted.sort_by(|a, b| b.contrast.total_cmp(&a.contrast));
            sorted.truncate(k);
            sorted.sort_by(|a, b| a.center.total_cmp(&b.center));
            sorted
        }
    };

    let baseline0 = baseline_estimate(&rates).max(1e-300);
    let mut theta = Vec::with_capacity(1 + 3 * k);
    theta.push(baseline0.ln());
    for seed in &seeds {
        theta.push(seed.center);
        theta.push(logit((seed.fwhm / span).clamp(1e-9, 0.999_999)));
        theta.push(logit(seed.contrast));
    }

    let fit = levenberg_marquardt(
        |t, out| {
            let model = model_from_theta(t, span);
            for (i, (&f, &y)) in freqs.iter().zip(rates.iter()).enumerate() {
                out[i] = model.value(f) - y;
            }
        },
        &theta,
        freqs.len(),
        500,
    )?;

    let mut result = model_from_theta(&fit.params, span);
    result.iterations = fit.iterations;
    result.resonances.sort_by(|a, b| a.center.total_cmp(&b.center));
    let sse = 2.0 * fit.cost;
    result.residual_rms = (sse / freqs.len() as f64).sqrt();
    result.contrast_pinned = result
        .resonances
        .iter()
        .map(|r| r.contrast > 1.0 - 1e-6)
        .collect();
    let (lo, hi) = (freqs[0], *freqs.last().unwrap());
    result.centers_outside_span = result
        .resonances
        .iter()
        .map(|r| r.center < lo - r.fwhm || r.center > hi + r.fwhm)
        .collect();

    result.covariance = natural_covariance(&result, &freqs, sse).unwrap_or_default();
    Ok(result)
}

/// Covariance over the natural parameters from the Jacobian at the optimum.
fn natural_covariance(
    fit: &LorentzianFit,
    freqs: &[f64],
    sse: f64,
) -> Option<Vec<Vec<f64>>> {
    let p = 1 + 3 * fit.resonances.len();
    let n = freqs.len();
    if n <= p {
        return None;
    }
    let pack = |fit: &LorentzianFit| {
        let mut v = vec![fit.baseline];
        for r in &fit.resonances {
            v.extend_from_slice(&[r.center, r.fwhm, r.contrast]);
        }
        v
    };
    let unpack = |v: &[f64]| {
        let mut f = fit.clone();
        f.baseline = v[0];
        for (j, r) in f.resonances.iter_mut().enumerate() {
            r.center = v[1 + 3 * j];
            r.fwhm = v[2 + 3 * j];
            r.contrast = v[3 + 3 * j];
        }
        f
    };
    let nat = pack(fit);
    let base: Vec<f64> = freqs.iter().map(|&f| fit.value(f)).collect();
    let mut jac = DMatrix::<f64>::zeros(n, p);
    for j in 0..p {
        let h = 1e-7 * nat[j].abs().max(1e-3);
        let mut shifted = nat.clone();
        shifted[j] += h;
        let model = unpack(&shifted);
        for i in 0..n {
            jac[(i, j)] = (model.value(freqs[i]) - base[i]) / h;
        }
    }
    let jtj = jac.transpose() * &jac;
    let inv = jtj.try_inverse()?;
    let s2 = sse / (n - p) as f64;
    Some(
        (0..p)
            .map(|i| (0..p).map(|j| s2 * inv[(i, j)]).collect())
            .collect(),
    )
}

/// Per-resonance (center, contrast, fwhm) summary, deepest contrast first.
pub fn contrast_report(fit: &LorentzianFit) -> Vec<(f64, f64, f64)> {
    let mut rows: Vec<(f64, f64, f64)> = fit
        .resonances
        .iter()
        .map(|r| (r.center, r.contrast, r.fwhm))
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1));
    rows
}

/// Evaluates the fitted model back in watts on the spectrum's grid (plot aid).
pub fn model_in_watts(fit: &LorentzianFit, freqs: &[f64], wavelength_m: f64) -> Result<Vec<f64>> {
    let e_ph = photon_energy_with(wavelength_m, &Default::default())?;
    Ok(freqs.iter().map(|&f| fit.value(f) * e_ph).collect())
}
