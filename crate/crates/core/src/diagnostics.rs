//! Adiabaticity verdicts and the measurements behind them.
//!
//! Dropping a coupling term `A(t)·exp(iΦ(t))` is safe when its magnitude is
//! small compared to how fast it oscillates. In the eigenframe of `h` the
//! term carries the dynamical phase `exp(i∫(ε_n − ε_m))`, so it oscillates
//! near the gap frequency. In the dual frame the phase is absent and the term
//! oscillates only as fast as `A` itself, which is why the same slow driving
//! can be adiabatic for `h` and resonant for its dual.

use std::fmt;

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, ComplexMatrix, ComplexVector, C64};
use crate::models::RotatingModelParams;
use crate::propagation::{dual_hamiltonian_at, HamiltonianSource, Method, PropagatorTrace, TimeGrid};
use crate::spectral_flow::{coupling_matrix, state_fidelity, EigenFrame};

pub const MIN_SPECTRAL_SAMPLES: usize = 64;
/// Zero padding applied before the FFT, as a multiple of the signal length.
pub const ZERO_PAD_FACTOR: usize = 8;
/// A secondary local maximum at least this fraction of the main peak's power
/// marks the spectrum as multi-peaked.
pub const SECONDARY_PEAK_POWER: f64 = 0.1;
/// Default ratio `coupling / detuning` at or below which a term is negligible.
pub const DEFAULT_RATIO_THRESHOLD: f64 = 0.1;
/// Relative slack on `detuning ≤ coupling`, so that exact resonance survives
/// the frequency estimate's own error.
pub const RESONANCE_REL_TOL: f64 = 1e-3;
/// Couplings below this are treated as absent.
pub const NEGLIGIBLE_COUPLING: f64 = 1e-14;

/// Strongest component of a sampled complex signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeak {
    /// Signed angular frequency in `(−π/dt, π/dt]`.
    pub frequency: f64,
    /// Resolution `2π/(N·dt)`.
    pub bin_width: f64,
    /// Amplitude of the tone at the peak, corrected for the window gain.
    pub amplitude: f64,
    /// Another local maximum outside the main lobe carries at least
    /// [`SECONDARY_PEAK_POWER`] of the peak power.
    pub multi_peak: bool,
}

/// Hann-windowed, zero-padded periodogram peak, refined by a parabola through
/// the log-power of the three bins around the maximum.
pub fn spectral_peak(signal: &[C64], dt: f64) -> Result<SpectralPeak> {
    let n = signal.len();
    if n < MIN_SPECTRAL_SAMPLES {
        return Err(Error::TooFewSamples { required: MIN_SPECTRAL_SAMPLES, found: n });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParams(format!("sample spacing must be positive, got {dt}")));
    }
    if signal.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }

    let m = (n * ZERO_PAD_FACTOR).next_power_of_two();
    let window: Vec<f64> =
        (0..n).map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()).collect();
    let window_sum: f64 = window.iter().sum();
    let mut buffer: Vec<Complex<f64>> = signal.iter().zip(&window).map(|(z, w)| z * w).collect();
    buffer.resize(m, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(m).process(&mut buffer);
    let power: Vec<f64> = buffer.iter().map(|z| z.norm_sqr()).collect();

    let (peak, &peak_power) = power.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty spectrum");
    let bin_width = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    if peak_power == 0.0 {
        return Ok(SpectralPeak { frequency: 0.0, bin_width, amplitude: 0.0, multi_peak: false });
    }

    let log = |j: usize| power[j].max(peak_power * 1e-300).ln();
    let (a, b, c) = (log((peak + m - 1) % m), log(peak), log((peak + 1) % m));
    let curvature = a - 2.0 * b + c;
    let offset = if curvature < 0.0 { (0.5 * (a - c) / curvature).clamp(-0.5, 0.5) } else { 0.0 };

    let mut index = peak as f64 + offset;
    if index > m as f64 / 2.0 {
        index -= m as f64;
    }
    let frequency = 2.0 * std::f64::consts::PI * index / (m as f64 * dt);

    // The Hann main lobe spans ±2 unpadded bins.
    let lobe = 3 * m / n;
    let multi_peak = (0..m).any(|j| {
        let distance = (j + m - peak) % m;
        let distance = distance.min(m - distance);
        distance > lobe
            && power[j] >= SECONDARY_PEAK_POWER * peak_power
            && power[j] >= power[(j + m - 1) % m]
            && power[j] >= power[(j + 1) % m]
    });

    Ok(SpectralPeak { frequency, bin_width, amplitude: peak_power.sqrt() / window_sum, multi_peak })
}

/// Signed angular frequency of the strongest spectral component.
pub fn dominant_frequency(signal: &[C64], dt: f64) -> Result<f64> {
    spectral_peak(signal, dt).map(|p| p.frequency)
}

/// Which adiabatic expansion a report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameMode {
    /// Eigenframe of `h`: the neglected term is `A_nm·exp(i∫(ε_n − ε_m))`.
    HFrame,
    /// Eigenframe of the dual `H`: the neglected term is `A_nm` alone.
    DualFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// `coupling / detuning` at or below the threshold.
    Adiabatic,
    /// Neither negligible nor resonant.
    Marginal,
    /// The term oscillates no faster than its own magnitude.
    Resonant,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Adiabatic => "adiabatic",
            Verdict::Marginal => "marginal",
            Verdict::Resonant => "resonant",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub ratio: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { ratio: DEFAULT_RATIO_THRESHOLD }
    }
}

/// Analysis of one coupled pair `n < m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub n: usize,
    pub m: usize,
    /// Rabi frequency of the term, `2·max_k |A_nm|`.
    pub coupling_magnitude: f64,
    /// `min_k |ε_n − ε_m|`.
    pub gap: f64,
    /// Signed dominant frequency of the analyzed signal.
    pub dominant_frequency: f64,
    /// `|dominant_frequency|`: how far the term is from standing still.
    pub detuning: f64,
    /// `coupling_magnitude / detuning`; `None` when the detuning vanishes.
    pub verdict_ratio: Option<f64>,
    pub verdict: Verdict,
    pub multi_peak: bool,
}

/// The least adiabatic pair, repeated at the top level, plus every pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub mode: FrameMode,
    pub coupling_magnitude: f64,
    pub gap: f64,
    pub dominant_frequency: f64,
    pub detuning: f64,
    pub verdict_ratio: Option<f64>,
    pub verdict: Verdict,
    pub multi_peak: bool,
    pub pairs: Vec<PairReport>,
}

fn classify(coupling: f64, detuning: f64, thresholds: Thresholds) -> (Option<f64>, Verdict) {
    if coupling < NEGLIGIBLE_COUPLING {
        return (Some(0.0), Verdict::Adiabatic);
    }
    let ratio = (detuning > 0.0).then(|| coupling / detuning);
    let verdict = if detuning <= coupling * (1.0 + RESONANCE_REL_TOL) {
        Verdict::Resonant
    } else if ratio.is_some_and(|r| r <= thresholds.ratio) {
        Verdict::Adiabatic
    } else {
        Verdict::Marginal
    };
    (ratio, verdict)
}

/// Measures, for every pair of levels, the neglected coupling term's size
/// and dominant frequency over the interior of the frame's grid.
pub fn resonance_report(frame: &EigenFrame, mode: FrameMode, thresholds: Thresholds) -> Result<ResonanceReport> {
    if let Some((k, &gap)) = frame.min_gap.iter().enumerate().find(|(_, &g)| !(g > 0.0)) {
        return Err(Error::DegenerateSpectrum { t: frame.grid.time(k), gap });
    }
    let couplings: Vec<ComplexMatrix> =
        (1..frame.grid.steps).map(|k| coupling_matrix(frame, k).map(|c| c.entries)).collect::<Result<_>>()?;

    let levels = frame.levels();
    let mut pairs = Vec::new();
    for n in 0..levels {
        for m in n + 1..levels {
            let signal: Vec<C64> = couplings
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let k = i + 1;
                    match mode {
                        FrameMode::HFrame => a[(n, m)] * cis(frame.phase_integrals[n][k] - frame.phase_integrals[m][k]),
                        FrameMode::DualFrame => a[(n, m)],
                    }
                })
                .collect();
            let coupling = 2.0 * signal.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let gap =
                (0..frame.grid.len()).map(|k| (frame.eps[n][k] - frame.eps[m][k]).abs()).fold(f64::INFINITY, f64::min);
            let peak = spectral_peak(&signal, frame.grid.dt)?;
            let detuning = peak.frequency.abs();
            let (verdict_ratio, verdict) = classify(coupling, detuning, thresholds);
            pairs.push(PairReport {
                n,
                m,
                coupling_magnitude: coupling,
                gap,
                dominant_frequency: peak.frequency,
                detuning,
                verdict_ratio,
                verdict,
                multi_peak: peak.multi_peak,
            });
        }
    }

    let worst = pairs
        .iter()
        .max_by(|a, b| {
            a.verdict
                .cmp(&b.verdict)
                .then(a.verdict_ratio.unwrap_or(f64::INFINITY).total_cmp(&b.verdict_ratio.unwrap_or(f64::INFINITY)))
        })
        .cloned()
        .ok_or_else(|| Error::InvalidParams("a resonance report needs at least two levels".into()))?;
    Ok(ResonanceReport {
        mode,
        coupling_magnitude: worst.coupling_magnitude,
        gap: worst.gap,
        dominant_frequency: worst.dominant_frequency,
        detuning: worst.detuning,
        verdict_ratio: worst.verdict_ratio,
        verdict: worst.verdict,
        multi_peak: pairs.iter().any(|p| p.multi_peak),
        pairs,
    })
}

/// `(t_k, |⟨U(t_k)ψ0, approx(k)ψ0⟩|²)` along the trace's grid.
pub fn fidelity_trace<F>(exact: &PropagatorTrace, mut approx: F, psi0: &ComplexVector) -> Result<Vec<(f64, f64)>>
where
    F: FnMut(usize) -> Result<ComplexMatrix>,
{
    if !psi0.is_normalized(crate::spectral_flow::NORMALIZATION_TOL) {
        return Err(Error::NotNormalized { norm: psi0.norm() });
    }
    if psi0.dim() != exact.dim() {
        return Err(Error::DimensionMismatch { expected: exact.dim(), found: psi0.dim() });
    }
    (0..exact.grid.len())
        .map(|k| {
            let a = approx(k)?;
            if a.dim() != exact.dim() {
                return Err(Error::GridMismatch);
            }
            let f = state_fidelity(&exact.u[k].apply(psi0), &a.apply(psi0))?;
            Ok((exact.grid.time(k), f))
        })
        .collect()
}

/// Outcome of comparing the oscillation of a dual-Hamiltonian matrix element
/// with the rotating model's prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuCheck {
    /// `|dominant frequency|` of the element after removing its mean.
    pub measured: f64,
    /// `√(ω0² + ω² + 2ω0ω·cosθ)` when the scenario is the rotating model.
    pub predicted: Option<f64>,
    pub bin_width: f64,
    /// Within one bin of the prediction; `None` without a prediction or when
    /// the element is constant.
    pub pass: Option<bool>,
    /// The element does not oscillate at all.
    pub dc_only: bool,
}

/// Dominant oscillation frequency of `H(t)[i][j]` sampled on the trace grid.
pub fn nu_check<S>(
    src: &S,
    trace: &PropagatorTrace,
    element: (usize, usize),
    rotating: Option<&RotatingModelParams>,
) -> Result<NuCheck>
where
    S: HamiltonianSource + ?Sized,
{
    let dim = trace.dim();
    if element.0 >= dim || element.1 >= dim {
        return Err(Error::IndexOutOfRange { index: element.0.max(element.1), valid: format!("0..{dim}") });
    }
    let series: Vec<C64> =
        (0..trace.grid.len()).map(|k| dual_hamiltonian_at(src, trace, k).map(|h| h[element])).collect::<Result<_>>()?;
    let mean = series.iter().sum::<C64>() / series.len() as f64;
    let centered: Vec<C64> = series.iter().map(|z| z - mean).collect();
    let spread = centered.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let predicted = rotating.map(RotatingModelParams::nu);
    let bin_width = 2.0 * std::f64::consts::PI / (series.len() as f64 * trace.grid.dt);
    if spread <= 1e-12 * mean.norm().max(1.0) {
        return Ok(NuCheck { measured: 0.0, predicted, bin_width, pass: None, dc_only: true });
    }
    let peak = spectral_peak(&centered, trace.grid.dt)?;
    let measured = peak.frequency.abs();
    let pass = predicted.map(|p| (measured - p).abs() <= peak.bin_width);
    Ok(NuCheck { measured, predicted, bin_width: peak.bin_width, pass, dc_only: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityPoint {
    pub t: f64,
    pub h: Option<f64>,
    pub dual: Option<f64>,
}

/// Largest residual of each invariant over the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub unitarity: f64,
    pub duality: Option<f64>,
    pub equivalence: Option<f64>,
}

/// Everything a scenario run measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    /// `"rotating"` or the path of a sampled file.
    pub model: String,
    pub rotating: Option<RotatingModelParams>,
    pub grid: TimeGrid,
    pub method: Method,
    pub analyses: Vec<String>,
    pub min_fidelity_h: Option<f64>,
    pub min_fidelity_dual: Option<f64>,
    pub fidelity: Vec<FidelityPoint>,
    pub residuals: ResidualSummary,
    /// `‖U_adia·V† − I‖_F` at the final node.
    pub inconsistency_distance: Option<f64>,
    /// `‖V† − U_adia†‖_F` at the final node.
    pub v_dagger_distance: Option<f64>,
    /// `‖W† − U†‖_F` at the final node.
    pub w_dagger_distance: Option<f64>,
    pub resonance_h: Option<ResonanceReport>,
    pub resonance_dual: Option<ResonanceReport>,
    pub nu: Option<NuCheck>,
}

impl ScenarioReport {
    /// Fidelities within `[0, 1 + 1e−10]` and non-negative residuals.
    pub fn validate(&self) -> Result<()> {
        let fidelity_ok = |f: f64| (0.0..=1.0 + 1e-10).contains(&f);
        let bad_fidelity = self.fidelity.iter().flat_map(|p| [p.h, p.dual]).flatten().find(|&f| !fidelity_ok(f));
        if let Some(f) = bad_fidelity {
            return Err(Error::InvalidParams(format!("fidelity {f} outside [0, 1]")));
        }
        let r = &self.residuals;
        let residuals = [Some(r.unitarity), r.duality, r.equivalence];
        if residuals.iter().flatten().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidParams("negative or undefined residual".into()));
        }
        Ok(())
    }

    /// Plain-text summary.
    pub fn render(&self) -> String {
        use fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "model: {}", self.model);
        if let Some(p) = &self.rotating {
            let _ = writeln!(out, "  omega0 = {}, omega = {}, theta = {}", p.omega0, p.omega, p.theta);
        }
        let _ = writeln!(
            out,
            "grid: t in [{}, {}], dt = {}, {} steps, {}",
            self.grid.t_start,
            self.grid.t_end(),
            self.grid.dt,
            self.grid.steps,
            self.method
        );
        let _ = writeln!(out, "analyses: {}", self.analyses.join(", "));
        let _ = writeln!(out, "max unitarity residual: {:.3e}", self.residuals.unitarity);
        let optional = [
            ("max duality residual", self.residuals.duality),
            ("max equivalence residual", self.residuals.equivalence),
            ("min adiabatic fidelity (h)", self.min_fidelity_h),
            ("min adiabatic fidelity (dual)", self.min_fidelity_dual),
            ("|U_adia V† - I| at end", self.inconsistency_distance),
            ("|V† - U_adia†| at end", self.v_dagger_distance),
            ("|W† - U†| at end", self.w_dagger_distance),
        ];
        for (label, value) in optional {
            if let Some(v) = value {
                let _ = writeln!(out, "{label}: {v:.6e}");
            }
        }
        for report in [&self.resonance_h, &self.resonance_dual].into_iter().flatten() {
            let mode = match report.mode {
                FrameMode::HFrame => "h frame",
                FrameMode::DualFrame => "dual frame",
            };
            let ratio = report.verdict_ratio.map_or_else(|| "inf".to_string(), |r| format!("{r:.4e}"));
            let _ = writeln!(
                out,
                "resonance ({mode}): {} (coupling {:.4e}, detuning {:.4e}, ratio {ratio}{})",
                report.verdict,
                report.coupling_magnitude,
                report.detuning,
                if report.multi_peak { ", multi-peak" } else { "" }
            );
        }
        if let Some(nu) = &self.nu {
            if nu.dc_only {
                let _ = writeln!(out, "nu: constant element, no oscillation");
            } else {
                let predicted = nu.predicted.map_or_else(|| "n/a".to_string(), |p| format!("{p:.6}"));
                let pass = nu.pass.map_or("n/a", |p| if p { "pass" } else { "fail" });
                let _ = writeln!(
                    out,
                    "nu: measured {:.6}, predicted {predicted}, bin {:.2e}, {pass}",
                    nu.measured, nu.bin_width
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::w_dagger;
    use crate::models::{rotating_coupling, rotating_hamiltonian};
    use crate::propagation::{propagate, ConstantSource};
    use crate::spectral_flow::{adiabatic_propagator, build_eigenframe};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn tone(freq: f64, dt: f64, n: usize) -> Vec<C64> {
        (0..n).map(|k| cis(freq * k as f64 * dt)).collect()
    }

    #[test]
    fn pure_tone_is_found_within_a_bin() {
        let dt = 0.01;
        let peak = spectral_peak(&tone(-3.0, dt, 4096), dt).unwrap();
        assert!((peak.frequency + 3.0).abs() <= peak.bin_width);
        assert!((peak.frequency + 3.0).abs() <= 1e-3 * peak.bin_width);
        assert!((peak.amplitude - 1.0).abs() < 0.01);
        assert!(!peak.multi_peak);
    }

    #[test]
    fn too_few_samples() {
        assert_eq!(
            dominant_frequency(&tone(1.0, 0.1, 63), 0.1).unwrap_err(),
            Error::TooFewSamples { required: 64, found: 63 }
        );
        assert!(dominant_frequency(&tone(1.0, 0.1, 64), 0.0).is_err());
    }

    #[test]
    fn two_tones_flag_multi_peak_and_report_the_stronger() {
        let dt = 0.05;
        let signal: Vec<C64> = tone(1.0, dt, 2048).iter().zip(tone(-2.5, dt, 2048)).map(|(a, b)| a * 0.5 + b).collect();
        let peak = spectral_peak(&signal, dt).unwrap();
        assert!((peak.frequency + 2.5).abs() <= peak.bin_width);
        assert!(peak.multi_peak);
    }

    #[test]
    fn rotating_model_neglected_terms() {
        let p = RotatingModelParams::new(1.0, 0.1, FRAC_PI_4).unwrap();
        let dt = 0.01;
        let n = 8192;
        let bin = 2.0 * PI / (n as f64 * dt);
        let h_term: Vec<C64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                rotating_coupling(&p, t).unwrap() * cis(p.omega0 * t)
            })
            .collect();
        let f = dominant_frequency(&h_term, dt).unwrap();
        assert!((f - (p.omega0 - p.omega * p.theta.cos())).abs() <= bin);
        let dual_term: Vec<C64> = (0..n).map(|k| rotating_coupling(&p, k as f64 * dt).unwrap()).collect();
        let f = dominant_frequency(&dual_term, dt).unwrap();
        assert!((f + p.omega * p.theta.cos()).abs() <= bin);
    }

    proptest! {
        #[test]
        fn peak_ignores_global_phase_and_scale(
            freq in -20.0f64..20.0,
            phase in 0.0f64..std::f64::consts::TAU,
            scale in 0.01f64..100.0,
        ) {
            let dt = 0.1;
            let signal = tone(freq, dt, 512);
            let base = spectral_peak(&signal, dt).unwrap();
            let moved: Vec<C64> = signal.iter().map(|z| z * cis(phase) * scale).collect();
            let other = spectral_peak(&moved, dt).unwrap();
            prop_assert!((base.frequency - other.frequency).abs() <= base.bin_width);
            prop_assert!((base.frequency - freq).abs() <= base.bin_width);
        }
    }

    fn frame(omega: f64, theta: f64, periods: f64, dt: f64) -> EigenFrame {
        let p = RotatingModelParams::new(1.0, omega, theta).unwrap();
        let grid = TimeGrid::covering(periods * 2.0 * PI / omega, dt).unwrap();
        build_eigenframe(&rotating_hamiltonian(p).unwrap(), grid).unwrap()
    }

    #[test]
    fn slow_rotation_is_adiabatic_for_h_and_resonant_for_dual() {
        let f = frame(0.01, FRAC_PI_4, 10.0, 0.05);
        let h = resonance_report(&f, FrameMode::HFrame, Thresholds::default()).unwrap();
        assert_eq!(h.verdict, Verdict::Adiabatic);
        let ratio = h.verdict_ratio.unwrap();
        let expected = 0.01 * FRAC_PI_4.sin() / (1.0 + 0.01 * FRAC_PI_4.cos());
        assert!((ratio - expected).abs() < 1e-3 * expected, "{ratio}");
        assert!((h.dominant_frequency + 1.0 + 0.01 * FRAC_PI_4.cos()).abs() < 1e-3);
        assert!((h.gap - 1.0).abs() < 1e-12);

        let d = resonance_report(&f, FrameMode::DualFrame, Thresholds::default()).unwrap();
        assert_eq!(d.verdict, Verdict::Resonant);
        let ratio = d.verdict_ratio.unwrap();
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
        assert!((d.dominant_frequency + 0.01 * FRAC_PI_4.cos()).abs() < 1e-5);
    }

    #[test]
    fn small_angle_dual_frame_is_adiabatic() {
        let f = frame(0.01, 0.01, 10.0, 0.05);
        let d = resonance_report(&f, FrameMode::DualFrame, Thresholds::default()).unwrap();
        assert_eq!(d.verdict, Verdict::Adiabatic);
        assert!((d.verdict_ratio.unwrap() - 0.01f64.tan()).abs() < 1e-4);
    }

    #[test]
    fn theta_sweep_reproduces_the_dichotomy() {
        let mut crossed = false;
        for theta in [0.01, 0.05, 0.09, 0.11, 0.3, 0.6, 1.0, 1.4] {
            let f = frame(0.01, theta, 10.0, 0.1);
            let h = resonance_report(&f, FrameMode::HFrame, Thresholds::default()).unwrap();
            assert_eq!(h.verdict, Verdict::Adiabatic, "θ = {theta}");
            let d = resonance_report(&f, FrameMode::DualFrame, Thresholds::default()).unwrap();
            let expected = if theta.tan() <= 0.1 { Verdict::Adiabatic } else { Verdict::Marginal };
            if theta < FRAC_PI_4 {
                assert_eq!(d.verdict, expected, "θ = {theta}");
            } else {
                assert_eq!(d.verdict, Verdict::Resonant, "θ = {theta}");
            }
            crossed |= d.verdict != Verdict::Adiabatic;
        }
        assert!(crossed);
    }

    #[test]
    fn uncoupled_frame_is_adiabatic() {
        let f = frame(0.01, 0.0, 2.0, 0.5);
        for mode in [FrameMode::HFrame, FrameMode::DualFrame] {
            let r = resonance_report(&f, mode, Thresholds::default()).unwrap();
            assert_eq!(r.verdict, Verdict::Adiabatic);
            assert_eq!(r.verdict_ratio, Some(0.0));
        }
    }

    #[test]
    fn identical_propagators_have_unit_fidelity() {
        let p = RotatingModelParams::new(1.0, 0.1, 1.0).unwrap();
        let grid = TimeGrid::covering(10.0, 0.01).unwrap();
        let trace = propagate(&rotating_hamiltonian(p).unwrap(), grid, Method::Midpoint2).unwrap();
        let psi0 = ComplexVector::basis(2, 0);
        let f = fidelity_trace(&trace, |k| Ok(trace.u[k].clone()), &psi0).unwrap();
        assert!(f.iter().all(|&(_, x)| (x - 1.0).abs() < 1e-12));
        let bad = ComplexVector::new(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(matches!(fidelity_trace(&trace, |k| Ok(trace.u[k].clone()), &bad), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn adiabatic_fidelity_for_h_stays_high() {
        let omega = 0.01;
        let p = RotatingModelParams::new(1.0, omega, FRAC_PI_4).unwrap();
        let src = rotating_hamiltonian(p).unwrap();
        let grid = TimeGrid::covering(2.0 * PI / omega, 0.01).unwrap();
        let trace = propagate(&src, grid, Method::Midpoint2).unwrap();
        let f = build_eigenframe(&src, grid).unwrap();
        let psi0 = f.vector(0, 0).clone();
        let fid = fidelity_trace(&trace, |k| adiabatic_propagator(&f, k), &psi0).unwrap();
        let min = fid.iter().map(|x| x.1).fold(1.0, f64::min);
        assert!(min >= 0.999, "{min}");
    }

    fn min_dual_fidelity(theta: f64) -> f64 {
        let omega = 0.05;
        let p = RotatingModelParams::new(1.0, omega, theta).unwrap();
        let src = rotating_hamiltonian(p).unwrap();
        let grid = TimeGrid::covering(2.0 * PI / omega, 0.01).unwrap();
        let trace = propagate(&src, grid, Method::Midpoint2).unwrap();
        let f = build_eigenframe(&src, grid).unwrap();
        // Ground state of H(0) = −h(0) is the upper level of h(0).
        let psi0 = f.vector(1, 0).clone();
        let fid = fidelity_trace(&trace.adjoint_trace(), |k| w_dagger(&trace, &f, k), &psi0).unwrap();
        fid.iter().map(|x| x.1).fold(1.0, f64::min)
    }

    #[test]
    fn dual_adiabatic_fidelity_follows_rabi_transfer() {
        let theta = PI / 3.0;
        assert!((min_dual_fidelity(theta) - theta.cos().powi(2)).abs() <= 0.02);
        assert!(min_dual_fidelity(0.01) >= 0.999);
        let (a, b, c) = (min_dual_fidelity(0.1), min_dual_fidelity(0.3), min_dual_fidelity(0.6));
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    fn nu_matches_prediction() {
        let p = RotatingModelParams::new(1.0, 0.1, FRAC_PI_4).unwrap();
        let src = rotating_hamiltonian(p).unwrap();
        let grid = TimeGrid::covering(40.0 * PI, 0.01).unwrap();
        let trace = propagate(&src, grid, Method::Midpoint2).unwrap();
        let check = nu_check(&src, &trace, (0, 0), Some(&p)).unwrap();
        assert_eq!(check.pass, Some(true), "{check:?}");
        assert!((check.predicted.unwrap() - 1.07304).abs() < 1e-5);

        let slow = RotatingModelParams::new(1.0, 0.01, FRAC_PI_4).unwrap();
        let src = rotating_hamiltonian(slow).unwrap();
        let grid = TimeGrid::covering(400.0 * PI, 0.05).unwrap();
        let trace = propagate(&src, grid, Method::Midpoint2).unwrap();
        let check = nu_check(&src, &trace, (0, 0), Some(&slow)).unwrap();
        assert!((check.measured - 1.0).abs() <= 0.011, "{check:?}");
    }

    #[test]
    fn static_hamiltonian_has_no_nu_peak() {
        let p = RotatingModelParams::new(1.0, 0.0, 1.0).unwrap();
        let src = rotating_hamiltonian(p).unwrap();
        let grid = TimeGrid::covering(50.0, 0.05).unwrap();
        let trace = propagate(&src, grid, Method::Midpoint2).unwrap();
        let check = nu_check(&src, &trace, (0, 1), Some(&p)).unwrap();
        assert!(check.dc_only);
        assert_eq!(check.pass, None);

        let c = ConstantSource(crate::linalg::sigma_x());
        let trace = propagate(&c, grid, Method::Midpoint2).unwrap();
        let check = nu_check(&c, &trace, (1, 1), None).unwrap();
        assert!(check.dc_only && check.predicted.is_none());
        assert!(nu_check(&c, &trace, (2, 0), None).is_err());
    }

    #[test]
    fn report_validation_and_round_trip() {
        let report = ScenarioReport {
            model: "rotating".into(),
            rotating: Some(RotatingModelParams::new(1.0, 0.1, 0.5).unwrap()),
            grid: TimeGrid::new(0.0, 0.1, 10).unwrap(),
            method: Method::Magnus4,
            analyses: vec!["duality".into()],
            min_fidelity_h: Some(0.99),
            min_fidelity_dual: None,
            fidelity: vec![FidelityPoint { t: 0.0, h: Some(1.0), dual: None }],
            residuals: ResidualSummary { unitarity: 1e-15, duality: Some(1e-7), equivalence: None },
            inconsistency_distance: None,
            v_dagger_distance: None,
            w_dagger_distance: None,
            resonance_h: None,
            resonance_dual: None,
            nu: None,
        };
        report.validate().unwrap();
        assert!(report.render().contains("max duality residual"));
        let mut broken = report.clone();
        broken.fidelity[0].h = Some(1.5);
        assert!(broken.validate().is_err());
    }
}
