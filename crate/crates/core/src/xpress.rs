//! Expressibility descriptors: pair-fidelity sampling, the Haar reference
//! histogram, KL divergence and a Monte-Carlo frame potential.
//!
//! Phase mode first maps every state to the uniform-magnitude state carrying
//! the same per-component phases.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize, Serializer};

use crate::ansatz::{build_ansatz, AnsatzSpec};
use crate::error::{Error, Result};
use crate::simcore::{apply_circuit, CircuitProgram, Statevector};

pub const DEFAULT_BINS: usize = 150;
pub const DEFAULT_SAMPLES: usize = 5000;
/// Reference bin masses below this count as empty.
pub const UNDERFLOW: f64 = 1e-300;
/// Components smaller than this get phase 0 in [`pseudo_project`].
pub const ZERO_AMPLITUDE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Raw,
    Phase,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Raw => "raw",
            Mode::Phase => "phase",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Mode::Raw),
            "phase" => Ok(Mode::Phase),
            other => Err(Error::InvalidArgument(format!("unknown mode '{other}' (raw|phase)"))),
        }
    }
}

/// `Σ_k e^{i arg ψ_k} |k⟩ / √d`, with `arg` of a vanishing component taken as 0.
pub fn pseudo_project(psi: &Statevector) -> Statevector {
    let d = psi.dim();
    let mag = 1.0 / (d as f64).sqrt();
    let amps = psi
        .amplitudes()
        .iter()
        .map(|a| {
            if a.norm() <= ZERO_AMPLITUDE {
                Complex64::new(mag, 0.0)
            } else {
                a * (mag / a.norm())
            }
        })
        .collect();
    Statevector::from_amplitudes(amps).expect("uniform magnitudes are normalised")
}

/// Mass of each of `n_bins` equal bins on `[0, 1]` under the Haar fidelity
/// law with CDF `1 - (1 - F)^{d-1}`, evaluated as CDF differences.
pub fn haar_bin_probabilities(n_qubits: usize, n_bins: usize) -> Result<Vec<f64>> {
    if n_bins == 0 {
        return Err(Error::InvalidArgument("n_bins must be at least 1".into()));
    }
    if n_qubits == 0 {
        let mut p = vec![0.0; n_bins];
        p[n_bins - 1] = 1.0;
        return Ok(p);
    }
    let exponent = i32::try_from((1u64 << n_qubits) - 1)
        .map_err(|_| Error::InvalidArgument(format!("{n_qubits} qubits is too wide")))?;
    let cdf = |f: f64| 1.0 - (1.0 - f).powi(exponent);
    Ok((0..n_bins)
        .map(|b| {
            let lo = b as f64 / n_bins as f64;
            let hi = if b + 1 == n_bins {
                1.0
            } else {
                (b + 1) as f64 / n_bins as f64
            };
            (cdf(hi) - cdf(lo)).max(0.0)
        })
        .collect())
}

/// Normalised complex Gaussian vector, which is Haar distributed.
pub fn haar_random_state<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Statevector {
    let amps: Vec<Complex64> = (0..1usize << n_qubits)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    Statevector::normalized(amps).expect("a Gaussian vector is nonzero almost surely")
}

/// Generator for sample `i`: stream `i` of the seeded ChaCha8 cipher, so each
/// sample is reproducible regardless of scheduling.
fn sample_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

fn pair_fidelity(a: Statevector, b: Statevector, mode: Mode) -> f64 {
    let (a, b) = match mode {
        Mode::Raw => (a, b),
        Mode::Phase => (pseudo_project(&a), pseudo_project(&b)),
    };
    a.inner(&b).expect("same register width").norm_sqr().clamp(0.0, 1.0)
}

fn collect_samples<F>(n_samples: usize, seed: u64, draw: F) -> Result<Vec<f64>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let one = |i: usize| draw(&mut sample_rng(seed, i));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n_samples).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_samples).map(one).collect()
    }
}

/// Fidelities of `n_samples` state pairs from independent parameter draws
/// uniform in `[-π, π)ᵖ`.
pub fn sample_fidelities(spec: &AnsatzSpec, n_samples: usize, mode: Mode, seed: u64) -> Result<Vec<f64>> {
    sample_program_fidelities(&build_ansatz(spec)?, n_samples, mode, seed)
}

pub fn sample_program_fidelities(
    program: &CircuitProgram,
    n_samples: usize,
    mode: Mode,
    seed: u64,
) -> Result<Vec<f64>> {
    let p = program.n_params();
    collect_samples(n_samples, seed, |rng| {
        let theta: Vec<f64> = (0..p).map(|_| rng.random_range(-PI..PI)).collect();
        let phi: Vec<f64> = (0..p).map(|_| rng.random_range(-PI..PI)).collect();
        Ok(pair_fidelity(
            apply_circuit(program, &theta)?,
            apply_circuit(program, &phi)?,
            mode,
        ))
    })
}

/// Fidelities of independent Haar-random state pairs.
pub fn haar_fidelities(n_qubits: usize, n_samples: usize, mode: Mode, seed: u64) -> Result<Vec<f64>> {
    collect_samples(n_samples, seed, |rng| {
        let a = haar_random_state(n_qubits, rng);
        let b = haar_random_state(n_qubits, rng);
        Ok(pair_fidelity(a, b, mode))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityHistogram {
    pub n_bins: usize,
    pub counts: Vec<u64>,
    pub n_samples: usize,
    pub empirical_probs: Vec<f64>,
}

impl FidelityHistogram {
    /// Bins values in `[0, 1]`; `F = 1` falls in the last bin.
    pub fn from_fidelities(fidelities: &[f64], n_bins: usize) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::InvalidArgument("n_bins must be at least 1".into()));
        }
        if fidelities.is_empty() {
            return Err(Error::InvalidArgument("no fidelities to bin".into()));
        }
        let mut counts = vec![0u64; n_bins];
        for &f in fidelities {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidArgument(format!("fidelity {f} outside [0, 1]")));
            }
            let b = ((f * n_bins as f64) as usize).min(n_bins - 1);
            counts[b] += 1;
        }
        let n = fidelities.len() as f64;
        let empirical_probs = counts.iter().map(|&c| c as f64 / n).collect();
        Ok(Self {
            n_bins,
            counts,
            n_samples: fidelities.len(),
            empirical_probs,
        })
    }

    /// `[lower, upper)` of bin `b`.
    pub fn bin_edges(&self, b: usize) -> (f64, f64) {
        let w = 1.0 / self.n_bins as f64;
        (
            b as f64 * w,
            if b + 1 == self.n_bins { 1.0 } else { (b + 1) as f64 * w },
        )
    }
}

/// A KL divergence that may be infinite because the reference puts no mass
/// where the sample does.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KlValue {
    Finite(f64),
    Overflow,
}

impl KlValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            KlValue::Finite(v) => Some(v),
            KlValue::Overflow => None,
        }
    }

    pub fn is_overflow(self) -> bool {
        self == KlValue::Overflow
    }
}

impl fmt::Display for KlValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KlValue::Finite(v) => write!(f, "{v}"),
            KlValue::Overflow => f.write_str("OVERFLOW"),
        }
    }
}

impl Serialize for KlValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            KlValue::Finite(v) => s.serialize_f64(*v),
            KlValue::Overflow => s.serialize_str("OVERFLOW"),
        }
    }
}

/// `Σ p̂ log(p̂ / p)` over bins with `p̂ > 0`.
pub fn kl_divergence(empirical: &[f64], reference: &[f64]) -> Result<KlValue> {
    if empirical.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            got: empirical.len(),
        });
    }
    if empirical.iter().chain(reference).any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(Error::InvalidArgument(
            "probabilities must be finite and nonnegative".into(),
        ));
    }
    let mut kl = 0.0;
    for (&p_hat, &p) in empirical.iter().zip(reference) {
        if p_hat > 0.0 {
            if p < UNDERFLOW {
                return Ok(KlValue::Overflow);
            }
            kl += p_hat * (p_hat / p).ln();
        }
    }
    Ok(KlValue::Finite(kl.max(0.0)))
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpressibilityReport {
    pub mode: Mode,
    pub kl_value: KlValue,
    pub histogram: FidelityHistogram,
    pub haar_probs: Vec<f64>,
    pub spec: AnsatzSpec,
    pub seed: u64,
}

/// KL divergence of the sampled pair-fidelity histogram from the Haar
/// reference; lower means more expressive.
pub fn expressibility(
    spec: &AnsatzSpec,
    mode: Mode,
    n_samples: usize,
    n_bins: usize,
    seed: u64,
) -> Result<ExpressibilityReport> {
    let fidelities = sample_fidelities(spec, n_samples, mode, seed)?;
    report_from_fidelities(spec, mode, &fidelities, n_bins, seed)
}

pub fn report_from_fidelities(
    spec: &AnsatzSpec,
    mode: Mode,
    fidelities: &[f64],
    n_bins: usize,
    seed: u64,
) -> Result<ExpressibilityReport> {
    let histogram = FidelityHistogram::from_fidelities(fidelities, n_bins)?;
    let haar_probs = haar_bin_probabilities(spec.n_qubits, n_bins)?;
    let kl_value = kl_divergence(&histogram.empirical_probs, &haar_probs)?;
    Ok(ExpressibilityReport {
        mode,
        kl_value,
        histogram,
        haar_probs,
        spec: spec.clone(),
        seed,
    })
}

/// Standard deviation of the KL estimate over bootstrap resamples of the
/// fidelities. `None` if any resample overflows.
pub fn bootstrap_kl_std(
    fidelities: &[f64],
    n_qubits: usize,
    n_bins: usize,
    resamples: usize,
    seed: u64,
) -> Result<Option<f64>> {
    if resamples < 2 {
        return Err(Error::InvalidArgument("need at least two bootstrap resamples".into()));
    }
    let haar = haar_bin_probabilities(n_qubits, n_bins)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(resamples);
    let mut draw = vec![0.0; fidelities.len()];
    for _ in 0..resamples {
        for d in draw.iter_mut() {
            *d = fidelities[rng.random_range(0..fidelities.len())];
        }
        let h = FidelityHistogram::from_fidelities(&draw, n_bins)?;
        match kl_divergence(&h.empirical_probs, &haar)? {
            KlValue::Finite(v) => values.push(v),
            KlValue::Overflow => return Ok(None),
        }
    }
    Ok(Some(crate::evalmetrics::mean_std(&values).1))
}

/// Monte-Carlo estimate of `E[F^t]` over sampled pairs.
pub fn frame_potential(spec: &AnsatzSpec, t: u32, n_samples: usize, mode: Mode, seed: u64) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidArgument(
            "frame potential order must be at least 1".into(),
        ));
    }
    let f = sample_fidelities(spec, n_samples, mode, seed)?;
    Ok(moment(&f, t))
}

/// `mean(F^t)`.
pub fn moment(fidelities: &[f64], t: u32) -> f64 {
    fidelities.iter().map(|f| f.powi(t as i32)).sum::<f64>() / fidelities.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::{GateKind, GateOp};
    use approx::assert_abs_diff_eq;

    fn sv(amps: &[(f64, f64)]) -> Statevector {
        Statevector::from_amplitudes(amps.iter().map(|&(r, i)| Complex64::new(r, i)).collect()).unwrap()
    }

    #[test]
    fn pseudo_project_examples() {
        let p = pseudo_project(&Statevector::zero(2));
        for a in p.amplitudes() {
            assert_abs_diff_eq!(a.re, 0.5, epsilon = 1e-15);
            assert_eq!(a.im, 0.0);
        }
        let h = 0.5f64.sqrt();
        let minus = sv(&[(h, 0.0), (-h, 0.0)]);
        let p = pseudo_project(&minus);
        assert_abs_diff_eq!(p.amplitudes()[0].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(p.amplitudes()[1].re, -h, epsilon = 1e-15);
        let p = pseudo_project(&sv(&[(0.8, 0.0), (0.0, 0.6)]));
        assert_abs_diff_eq!(p.amplitudes()[0].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(p.amplitudes()[1].im, h, epsilon = 1e-15);
        assert_abs_diff_eq!(p.amplitudes()[1].re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn haar_bins_examples() {
        let p = haar_bin_probabilities(1, 150).unwrap();
        assert!(p.iter().all(|&x| (x - 1.0 / 150.0).abs() < 1e-14));
        let p = haar_bin_probabilities(2, 2).unwrap();
        assert_abs_diff_eq!(p[0], 0.875, epsilon = 1e-15);
        for n in 1..=7 {
            let s: f64 = haar_bin_probabilities(n, 150).unwrap().iter().sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
        assert!(haar_bin_probabilities(3, 0).is_err());
    }

    #[test]
    fn upper_bins_vanish_for_wide_registers() {
        let p = haar_bin_probabilities(7, 150).unwrap();
        assert!(p[0] > 0.5);
        assert_eq!(p[149], 0.0);
        assert!(p.iter().filter(|&&x| x < UNDERFLOW).count() > 100);
    }

    #[test]
    fn kl_examples() {
        let r = [0.25, 0.25, 0.5];
        assert_eq!(kl_divergence(&r, &r).unwrap(), KlValue::Finite(0.0));
        let kl = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap().finite().unwrap();
        assert_abs_diff_eq!(kl, 2f64.ln(), epsilon = 1e-15);
        assert!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap().is_overflow());
        assert!(kl_divergence(&[1.0], &[0.5, 0.5]).is_err());
        assert!(kl_divergence(&[-0.1, 1.1], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn kl_serialises_overflow_marker() {
        assert_eq!(serde_json::to_string(&KlValue::Overflow).unwrap(), "\"OVERFLOW\"");
        assert_eq!(serde_json::to_string(&KlValue::Finite(0.5)).unwrap(), "0.5");
    }

    #[test]
    fn histogram_binning() {
        let h = FidelityHistogram::from_fidelities(&[0.0, 0.5, 1.0, 1.0], 4).unwrap();
        assert_eq!(h.counts, vec![1, 0, 1, 2]);
        assert_abs_diff_eq!(h.empirical_probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_eq!(h.bin_edges(3), (0.75, 1.0));
        assert!(FidelityHistogram::from_fidelities(&[1.5], 4).is_err());
    }

    fn h_rz() -> CircuitProgram {
        CircuitProgram::new(
            1,
            vec![GateOp::plain(GateKind::H, &[0]), GateOp::param(GateKind::Rz, &[0], 0)],
        )
        .unwrap()
    }

    #[test]
    fn zero_parameter_circuit_is_degenerate() {
        let fixed = CircuitProgram::new(2, vec![GateOp::plain(GateKind::H, &[0])]).unwrap();
        let f = sample_program_fidelities(&fixed, 20, Mode::Raw, 1).unwrap();
        assert!(f.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        let h = FidelityHistogram::from_fidelities(&f, 150).unwrap();
        let kl = kl_divergence(&h.empirical_probs, &haar_bin_probabilities(1, 150).unwrap()).unwrap();
        assert_abs_diff_eq!(kl.finite().unwrap(), (150f64).ln(), epsilon = 1e-9);
        let f = sample_program_fidelities(&fixed, 10, Mode::Phase, 0).unwrap();
        assert_abs_diff_eq!(moment(&f, 3), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn phase_fidelity_closed_form_on_one_qubit() {
        let f = sample_program_fidelities(&h_rz(), 50, Mode::Phase, 4).unwrap();
        for (i, &fi) in f.iter().enumerate() {
            let mut rng = sample_rng(4, i);
            let a = rng.random_range(-PI..PI);
            let b = rng.random_range(-PI..PI);
            // H then RZ: phases -θ/2, +θ/2, relative phase difference Δ = b - a
            let want = ((b - a) / 2.0).cos().powi(2);
            assert_abs_diff_eq!(fi, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn raw_real_circuit_fidelities_in_range() {
        let f = sample_fidelities(&AnsatzSpec::new("B", 3, 2), 100, Mode::Raw, 2).unwrap();
        assert!(f.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = AnsatzSpec::new("C", 3, 2);
        let a = expressibility(&spec, Mode::Phase, 200, 50, 17).unwrap();
        let b = expressibility(&spec, Mode::Phase, 200, 50, 17).unwrap();
        assert_eq!(a.histogram, b.histogram);
        assert_eq!(a.kl_value, b.kl_value);
    }

    #[test]
    fn haar_moments_at_two_qubits() {
        let f = haar_fidelities(2, 20000, Mode::Raw, 3).unwrap();
        assert!((moment(&f, 1) - 0.25).abs() < 0.01);
        assert!((moment(&f, 2) - 0.1).abs() < 0.01);
    }

    #[test]
    fn bootstrap_spread_is_small_and_positive() {
        let f = haar_fidelities(3, 2000, Mode::Raw, 5).unwrap();
        let s = bootstrap_kl_std(&f, 3, 50, 20, 1).unwrap().unwrap();
        assert!(s > 0.0 && s < 0.05);
    }

    #[test]
    fn rz_program_sanity() {
        let psi = apply_circuit(&h_rz(), &[0.4]).unwrap();
        let q = pseudo_project(&psi);
        assert_abs_diff_eq!(psi.inner(&q).unwrap().norm_sqr(), 1.0, epsilon = 1e-12);
    }
}
