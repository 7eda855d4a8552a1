//! File formats: power-curve and ODMR CSVs, the sensor registry, JSON
//! reports, and gnuplot-style column files.
//!
//! All writers are deterministic: no timestamps, fixed column orders, values
//! in the shortest form that round-trips.

use sha2::{Digest, Sha256};

use crate::calibration::CalibrationResult;
use crate::config::emit_config;
use crate::error::{Error, Result};
use crate::laser::{PowerCurve, SweptAxis};
use crate::odmr::{LorentzianFit, OdmrSpectrum};
use crate::params::ModelParams;
use crate::sensitivity::{SensitivityReport, SensorPoint, TradeoffAnalysis};
use serde::{Deserialize, Serialize};

/// SHA-256 of the canonical config emission; identifies a parameter set in
/// file metadata.
pub fn params_hash(params: &ModelParams) -> String {
    let mut hasher = Sha256::new();
    hasher.update(emit_config(params).as_bytes());
    hex_string(&hasher.finalize())
}

/// SHA-256 of raw input bytes (dataset provenance in calibration reports).
pub fn data_hash(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Serializes a power curve. `with_meta` controls the `#` comment header.
pub fn write_power_curve_csv(curve: &PowerCurve, with_meta: bool) -> String {
    let mut out = String::new();
    if with_meta {
        out.push_str(&format!("# label: {}\n", curve.label));
        out.push_str(&format!("# swept_axis: {}\n", curve.swept_axis));
        if let Some(params) = &curve.fixed_params {
            out.push_str(&format!("# params_sha256: {}\n", params_hash(params)));
        }
    }
    out.push_str("pump_w,output_w\n");
    for &(pump, output) in &curve.points {
        out.push_str(&format!("{pump},{output}\n"));
    }
    out
}

fn split_data_line(line: &str, line_no: usize, columns: usize) -> Result<Vec<f64>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != columns {
        return Err(Error::CsvParse {
            line: line_no,
            message: format!("expected {columns} columns, got {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.trim().parse::<f64>().map_err(|_| Error::CsvParse {
                line: line_no,
                message: format!("`{f}` is not a number"),
            })
        })
        .collect()
}

/// Parses a power-curve CSV (header `pump_w,output_w`, `#` comments allowed).
pub fn parse_power_curve_csv(text: &str) -> Result<PowerCurve> {
    let mut label = String::from("ingested");
    let mut axis = SweptAxis::MecselPump;
    let mut points = Vec::new();
    let mut header_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(value) = comment.strip_prefix("label:") {
                label = value.trim().to_string();
            } else if let Some(value) = comment.strip_prefix("swept_axis:") {
                axis = match value.trim() {
                    "mecsel_pump" => SweptAxis::MecselPump,
                    "nv_pump" => SweptAxis::NvPump,
                    other => {
                        return Err(Error::CsvParse {
                            line: line_no,
                            message: format!("unknown swept_axis `{other}`"),
                        })
                    }
                };
            }
            continue;
        }
        if !header_seen {
            if line != "pump_w,output_w" {
                return Err(Error::CsvParse {
                    line: line_no,
                    message: format!("expected header `pump_w,output_w`, got `{line}`"),
                });
            }
            header_seen = true;
            continue;
        }
        let fields = split_data_line(line, line_no, 2)?;
        points.push((fields[0], fields[1]));
    }
    if !header_seen {
        return Err(Error::CsvParse {
            line: 1,
            message: "missing header `pump_w,output_w`".to_string(),
        });
    }
    let curve = PowerCurve {
        swept_axis: axis,
        points,
        fixed_params: None,
        label,
    };
    curve.validate()?;
    Ok(curve)
}

/// Serializes an ODMR spectrum (header `frequency_hz,output_w`).
pub fn write_odmr_csv(spectrum: &OdmrSpectrum, with_meta: bool) -> String {
    let mut out = String::new();
    if with_meta {
        out.push_str(&format!("# label: {}\n", spectrum.label));
        if let Some(params) = &spectrum.params_snapshot {
            out.push_str(&format!("# params_sha256: {}\n", params_hash(params)));
        }
    }
    out.push_str("frequency_hz,output_w\n");
    for &(freq, output) in &spectrum.points {
        out.push_str(&format!("{freq},{output}\n"));
    }
    out
}

/// Parses an ODMR CSV.
pub fn parse_odmr_csv(text: &str) -> Result<OdmrSpectrum> {
    let mut label = String::from("ingested");
    let mut points = Vec::new();
    let mut header_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(value) = comment.trim().strip_prefix("label:") {
                label = value.trim().to_string();
            }
            continue;
        }
        if !header_seen {
            if line != "frequency_hz,output_w" {
                return Err(Error::CsvParse {
                    line: line_no,
                    message: format!("expected header `frequency_hz,output_w`, got `{line}`"),
                });
            }
            header_seen = true;
            continue;
        }
        let fields = split_data_line(line, line_no, 2)?;
        points.push((fields[0], fields[1]));
    }
    if !header_seen {
        return Err(Error::CsvParse {
            line: 1,
            message: "missing header `frequency_hz,output_w`".to_string(),
        });
    }
    let spectrum = OdmrSpectrum {
        points,
        params_snapshot: None,
        label,
    };
    spectrum.validate()?;
    Ok(spectrum)
}

/// Sensor registry header.
pub const SENSOR_REGISTRY_HEADER: &str =
    "name,sensitivity_t_sqrthz,dynamic_range_t,flux_concentrator,closed_loop";

/// Serializes the sensor registry.
pub fn write_sensor_registry_csv(points: &[SensorPoint]) -> String {
    let mut out = String::from(SENSOR_REGISTRY_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.name, p.sensitivity, p.dynamic_range, p.flux_concentrator, p.closed_loop
        ));
    }
    out
}

fn parse_bool(field: &str, line_no: usize) -> Result<bool> {
    match field.trim() {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        other => Err(Error::CsvParse {
            line: line_no,
            message: format!("`{other}` is not a boolean"),
        }),
    }
}

/// Parses the sensor registry CSV.
pub fn parse_sensor_registry_csv(text: &str) -> Result<Vec<SensorPoint>> {
    let mut points = Vec::new();
    let mut header_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != SENSOR_REGISTRY_HEADER {
                return Err(Error::CsvParse {
                    line: line_no,
                    message: format!("expected header `{SENSOR_REGISTRY_HEADER}`"),
                });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::CsvParse {
                line: line_no,
                message: format!("expected 5 columns, got {}", fields.len()),
            });
        }
        let parse_num = |f: &str| -> Result<f64> {
            f.trim().parse().map_err(|_| Error::CsvParse {
                line: line_no,
                message: format!("`{f}` is not a number"),
            })
        };
        points.push(SensorPoint {
            name: fields[0].trim().to_string(),
            sensitivity: parse_num(fields[1])?,
            dynamic_range: parse_num(fields[2])?,
            flux_concentrator: parse_bool(fields[3], line_no)?,
            closed_loop: parse_bool(fields[4], line_no)?,
        });
    }
    if !header_seen {
        return Err(Error::CsvParse {
            line: 1,
            message: format!("missing header `{SENSOR_REGISTRY_HEADER}`"),
        });
    }
    Ok(points)
}

/// JSON shape of an ODMR fit report.
#[derive(Debug, Serialize, Deserialize)]
pub struct FitReport {
    pub baseline_photons_per_s: f64,
    pub resonances: Vec<FitReportResonance>,
    pub residual_rms: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FitReportResonance {
    pub center_hz: f64,
    pub fwhm_hz: f64,
    pub contrast: f64,
}

impl From<&LorentzianFit> for FitReport {
    fn from(fit: &LorentzianFit) -> Self {
        FitReport {
            baseline_photons_per_s: fit.baseline,
            resonances: fit
                .resonances
                .iter()
                .map(|r| FitReportResonance {
                    center_hz: r.center,
                    fwhm_hz: r.fwhm,
                    contrast: r.contrast,
                })
                .collect(),
            residual_rms: fit.residual_rms,
        }
    }
}

impl FitReport {
    /// Rebuilds a fit object (no covariance) from a stored report.
    pub fn into_fit(self) -> LorentzianFit {
        LorentzianFit::from_parts(
            self.baseline_photons_per_s,
            self.resonances
                .into_iter()
                .map(|r| crate::odmr::Resonance {
                    center: r.center_hz,
                    fwhm: r.fwhm_hz,
                    contrast: r.contrast,
                })
                .collect(),
        )
    }
}

/// Fit report JSON text.
pub fn fit_report_json(fit: &LorentzianFit) -> String {
    serde_json::to_string_pretty(&FitReport::from(fit)).expect("fit report serializes")
}

/// Sensitivity report JSON text.
pub fn sensitivity_report_json(report: &SensitivityReport) -> String {
    serde_json::to_string_pretty(report).expect("sensitivity report serializes")
}

/// Calibration report JSON: fitted values, std errors, sse, dataset hash.
#[derive(Debug, Serialize)]
pub struct CalibrationReport<'a> {
    #[serde(flatten)]
    pub result: &'a CalibrationResult,
    pub dataset_sha256: String,
    /// Point weighting of the objective (recorded with every report).
    pub loss: &'static str,
}

pub fn calibration_report_json(result: &CalibrationResult, dataset: &[u8]) -> String {
    let report = CalibrationReport {
        result,
        dataset_sha256: data_hash(dataset),
        loss: "unweighted SSE over lasing points",
    };
    serde_json::to_string_pretty(&report).expect("calibration report serializes")
}

/// Trade-off analysis JSON text.
pub fn tradeoff_report_json(analysis: &TradeoffAnalysis) -> String {
    #[derive(Serialize)]
    struct Row<'a> {
        name: &'a str,
        deviation_factor: f64,
    }
    #[derive(Serialize)]
    struct Report<'a> {
        intercept_log10: f64,
        deviation_factors: Vec<Row<'a>>,
    }
    let report = Report {
        intercept_log10: analysis.intercept_log10,
        deviation_factors: analysis
            .deviation_factors
            .iter()
            .map(|(name, factor)| Row {
                name,
                deviation_factor: *factor,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&report).expect("tradeoff report serializes")
}

/// Two-column gnuplot file for a power curve.
pub fn power_curve_plot_data(curve: &PowerCurve) -> String {
    let mut out = String::from("# pump_w output_w\n");
    for &(pump, output) in &curve.points {
        out.push_str(&format!("{pump} {output}\n"));
    }
    out
}

/// Three-column gnuplot file for a spectrum and its fitted model (in watts).
pub fn odmr_plot_data(spectrum: &OdmrSpectrum, model_watts: Option<&[f64]>) -> String {
    let mut out = String::new();
    match model_watts {
        Some(model) => {
            out.push_str("# frequency_hz output_w model_w\n");
            for (&(freq, output), &m) in spectrum.points.iter().zip(model.iter()) {
                out.push_str(&format!("{freq} {output} {m}\n"));
            }
        }
        None => {
            out.push_str("# frequency_hz output_w\n");
            for &(freq, output) in &spectrum.points {
                out.push_str(&format!("{freq} {output}\n"));
            }
        }
    }
    out
}

/// Two-column gnuplot file for a pointwise sensitivity sweep.
pub fn sensitivity_plot_data(points: &[(f64, f64)]) -> String {
    let mut out = String::from("# frequency_hz eta_t_per_sqrthz\n");
    for &(freq, eta) in points {
        out.push_str(&format!("{freq} {eta}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_curve_round_trips() {
        let curve = PowerCurve {
            swept_axis: SweptAxis::NvPump,
            points: vec![(0.0, 0.047), (1.0, 0.036), (2.5, 0.02)],
            fixed_params: Some(ModelParams::default()),
            label: "demo".to_string(),
        };
        let text = write_power_curve_csv(&curve, true);
        let parsed = parse_power_curve_csv(&text).unwrap();
        assert_eq!(parsed.points, curve.points);
        assert_eq!(parsed.label, "demo");
        assert_eq!(parsed.swept_axis, SweptAxis::NvPump);
    }

    #[test]
    fn bad_header_reports_line() {
        match parse_power_curve_csv("pump,out\n1,2\n").unwrap_err() {
            Error::CsvParse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bad_number_reports_line() {
        let text = "pump_w,output_w\n0,0\nx,1\n";
        match parse_power_curve_csv(text).unwrap_err() {
            Error::CsvParse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unsorted_points_are_rejected() {
        let text = "pump_w,output_w\n1,0\n0.5,0\n";
        assert!(matches!(
            parse_power_curve_csv(text).unwrap_err(),
            Error::InvalidPumpGrid
        ));
    }

    #[test]
    fn sensor_registry_round_trips() {
        let points = vec![
            SensorPoint {
                name: "ltm".into(),
                sensitivity: 6.7e-13,
                dynamic_range: 2.8e-4,
                flux_concentrator: false,
                closed_loop: false,
            },
            SensorPoint {
                name: "boosted".into(),
                sensitivity: 1e-15,
                dynamic_range: 1e-6,
                flux_concentrator: true,
                closed_loop: false,
            },
        ];
        let text = write_sensor_registry_csv(&points);
        let parsed = parse_sensor_registry_csv(&text).unwrap();
        assert_eq!(parsed, points);
    }

    #[test]
    fn params_hash_is_stable_and_sensitive() {
        let a = ModelParams::default();
        let mut b = a;
        assert_eq!(params_hash(&a), params_hash(&b));
        b.nv.omega = 0.84e6;
        assert_ne!(params_hash(&a), params_hash(&b));
    }
}
