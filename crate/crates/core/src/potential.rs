//! Lattice-periodic potentials stored as truncated Fourier series.
//!
//! A stored coefficient `c_G` is the plane-wave matrix element
//! `⟨e_{G'}, V e_{G''}⟩` for `G' − G'' = G`, with `e_G = |Ω|^{-1/2} e^{iG·x}`.
//! The potential itself is therefore `V(x) = Σ c_G e^{iG·x}`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::lattice::{dot, norm, GIndex, Lattice, Vector};
use crate::num::{abs, cos, powf, sin, sqrt};

/// Relative tolerance on `c_{−G} = conj(c_G)`.
const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FourierPotential {
    lattice: Lattice,
    coeffs: BTreeMap<GIndex, Complex64>,
    real_valued: bool,
}

impl FourierPotential {
    /// `V ≡ 0`.
    pub fn zero(lattice: &Lattice) -> Self {
        FourierPotential {
            lattice: lattice.clone(),
            coeffs: BTreeMap::new(),
            real_valued: true,
        }
    }

    /// Collects coefficients, summing duplicates. With `real_valued` the
    /// collection must satisfy `c_{−G} = conj(c_G)`.
    pub fn from_coeffs<I>(lattice: &Lattice, entries: I, real_valued: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (GIndex, Complex64)>,
    {
        let dim = lattice.dim();
        let mut coeffs: BTreeMap<GIndex, Complex64> = BTreeMap::new();
        for (g, c) in entries {
            if !g.fits_dim(dim) {
                return Err(Error::InvalidParameter(
                    "G-index has components beyond the lattice dimension".into(),
                ));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::NonFiniteCoefficient(g));
            }
            *coeffs.entry(g).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        if real_valued {
            let offending: Vec<GIndex> = coeffs
                .iter()
                .filter(|(g, c)| {
                    let partner = coeffs.get(&-**g).copied().unwrap_or_default();
                    let scale = c.norm().max(partner.norm()).max(f64::MIN_POSITIVE);
                    (partner - c.conj()).norm() > HERMITIAN_TOL * scale
                })
                .map(|(g, _)| *g)
                .collect();
            if !offending.is_empty() {
                return Err(Error::BrokenHermitianSymmetry { offending });
            }
        }
        Ok(FourierPotential {
            lattice: lattice.clone(),
            coeffs,
            real_valued,
        })
    }

    /// `c_{±1} = amplitude` along each reciprocal direction: a sum of cosines.
    pub fn cosine(lattice: &Lattice, amplitude: f64) -> Result<Self> {
        let mut entries = Vec::new();
        for i in 0..lattice.dim() {
            let mut g = GIndex::ZERO;
            g.0[i] = 1;
            entries.push((g, Complex64::new(amplitude, 0.0)));
            entries.push((-g, Complex64::new(amplitude, 0.0)));
        }
        Self::from_coeffs(lattice, entries, true)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    pub fn coeffs(&self) -> &BTreeMap<GIndex, Complex64> {
        &self.coeffs
    }

    /// Stored coefficient, zero when absent.
    pub fn coeff(&self, g: GIndex) -> Complex64 {
        self.coeffs.get(&g).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// `Σ |c_G|`, a bound on `sup |V|`.
    pub fn sup_norm_bound(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// The same coefficients attached to another lattice of equal dimension.
    pub fn with_lattice(&self, lattice: &Lattice) -> Result<Self> {
        if lattice.dim() != self.lattice.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.lattice.dim(),
                found: lattice.dim(),
            });
        }
        Ok(FourierPotential {
            lattice: lattice.clone(),
            coeffs: self.coeffs.clone(),
            real_valued: self.real_valued,
        })
    }

    /// `V(x) = Σ c_G e^{iG·x}` at a Cartesian point `x`.
    pub fn evaluate(&self, x: &Vector) -> Complex64 {
        let x = self.lattice.project(x);
        self.coeffs
            .iter()
            .map(|(g, c)| {
                let phase = dot(&self.lattice.cartesian(*g), &x);
                c * Complex64::new(cos(phase), sin(phase))
            })
            .sum()
    }

    /// Real part of [`FourierPotential::evaluate`].
    pub fn evaluate_real(&self, x: &Vector) -> f64 {
        self.evaluate(x).re
    }

    /// `‖V‖_{H^s}` computed from the stored coefficients:
    /// `Σ (1 + |G|²)^s |c_G|²`, square-rooted.
    pub fn sobolev_norm(&self, s: f64) -> SobolevReport {
        let sum: f64 = self
            .coeffs
            .iter()
            .map(|(g, c)| {
                let gc = self.lattice.cartesian(*g);
                powf(1.0 + dot(&gc, &gc), s) * c.norm_sqr()
            })
            .sum();
        SobolevReport { s, norm: sqrt(sum) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevReport {
    pub s: f64,
    pub norm: f64,
}

/// Random-phase power-law potential `c_G = A |G|^{−t} e^{iθ_G}` for
/// `0 < shell(G) ≤ gmax`, Hermitian-symmetrized, `c_0 = 0`.
///
/// Such a potential lies in `H^s` for every `s < t − d/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawSynth {
    pub t: f64,
    pub gmax: u32,
    pub seed: u64,
    pub amplitude: f64,
}

impl PowerLawSynth {
    pub fn new(t: f64, gmax: u32, seed: u64) -> Self {
        PowerLawSynth {
            t,
            gmax,
            seed,
            amplitude: 1.0,
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// Sobolev order just below the regularity threshold `t − d/2`.
    pub fn regularity(&self, dim: usize) -> f64 {
        self.t - 0.5 * dim as f64
    }

    pub fn build(&self, lattice: &Lattice) -> Result<FourierPotential> {
        let dim = lattice.dim();
        if !(self.t > 0.5 * dim as f64) || !self.t.is_finite() {
            return Err(Error::InvalidParameter("power-law exponent must exceed d/2".into()));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidParameter("amplitude must be finite".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let r = self.gmax as i32;
        let span = |i: usize| if i < dim { r } else { 0 };
        let mut entries = Vec::new();
        for n0 in -span(0)..=span(0) {
            for n1 in -span(1)..=span(1) {
                for n2 in -span(2)..=span(2) {
                    let g = GIndex([n0, n1, n2]);
                    if !g.is_positive_half() {
                        continue;
                    }
                    let theta = 2.0 * PI * unit_f64(&mut rng);
                    let len = norm(&lattice.cartesian(g));
                    let c = Complex64::new(cos(theta), sin(theta)) * (self.amplitude * powf(len, -self.t));
                    entries.push((g, c));
                    entries.push((-g, c.conj()));
                }
            }
        }
        FourierPotential::from_coeffs(lattice, entries, true)
    }
}

/// Uniform draw in `[0, 1)` from the top 53 bits.
fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Largest `|Im V|` over a uniform real-space sample, for diagnostics.
pub fn max_imaginary_part(v: &FourierPotential, samples_per_dim: usize) -> f64 {
    let lat = v.lattice();
    let n = samples_per_dim.max(1);
    let count = n.pow(lat.dim() as u32);
    let mut worst: f64 = 0.0;
    for flat in 0..count {
        let mut frac = [0.0; 3];
        let mut rest = flat;
        for f in frac.iter_mut().take(lat.dim()) {
            *f = (rest % n) as f64 / n as f64;
            rest /= n;
        }
        worst = worst.max(abs(v.evaluate(&lat.frac_to_real(&frac)).im));
    }
    worst
}
