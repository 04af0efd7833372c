//! Numerical studies built on band computations: convergence in the cutoff,
//! finite-difference regularity probes, periodicity checks and lattice
//! parameter scans.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::blowup::{BlowupFunction, BlowupSpec};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::fiber::{Scheme, SchemeTag};
use crate::lattice::{BasisMode, GIndex, KPointKind, KPointSet, Lattice, Vector};
use crate::num::{ceil, floor, ln, sqrt};
use crate::observables::{fermi_level, idoe};
use crate::potential::FourierPotential;
use crate::spectra::{compute_bands, BandStructure};

/// Errors below this are treated as having reached the reference precision.
pub const ERROR_FLOOR: f64 = 1e-16;

/// Reference solutions for convergence measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub ec: f64,
    pub scheme: Scheme,
}

impl Reference {
    pub fn uniform(ec: f64) -> Self {
        Reference {
            ec,
            scheme: Scheme::Uniform,
        }
    }
}

/// How the error of band `n` against the reference is measured.
#[derive(Clone, Debug, PartialEq)]
pub enum ErrorMeasure {
    /// `|mean_k (ε_n(k) − ε_n^ref(k))|` over fixed quasi-momenta.
    Pointwise { kpoints: Vec<Vector> },
    /// Grid average of `|(ε_n − μ_F) − (ε_n^ref − μ_F^ref)|`.
    FermiAdjusted { grid: usize, n_electrons: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceStudy {
    pub ec_ladder: Vec<f64>,
    pub errors: Vec<f64>,
    /// Entries that hit [`ERROR_FLOOR`] and were clamped.
    pub clamped: Vec<bool>,
    /// `−slope` of `log error` against `log Ec` on the upper half of the ladder.
    pub fitted_rate: f64,
    /// Same fit over the whole ladder.
    pub full_rate: f64,
    pub r_potential: f64,
    pub predicted_rate: f64,
    /// Number of trailing ladder entries used by `fitted_rate`.
    pub fit_points: usize,
}

impl ConvergenceStudy {
    /// False when the fitted slope rests on clamped errors.
    pub fn is_meaningful(&self) -> bool {
        let n = self.clamped.len();
        !self.clamped[n - self.fit_points..].iter().any(|c| *c)
    }
}

/// Least-squares slope of `y` against `x`.
pub fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn check_band(band: usize) -> Result<usize> {
    if band == 0 {
        return Err(Error::InvalidParameter("bands are numbered from 1".into()));
    }
    Ok(band - 1)
}

/// Grid average of `|(ε_n − μ) − (ε_n^ref − μ^ref)|` for two band structures
/// on the same grid.
pub fn fermi_adjusted_difference(
    bands: &BandStructure,
    mu: f64,
    reference: &BandStructure,
    mu_ref: f64,
    band: usize,
) -> Result<f64> {
    let b = check_band(band)?;
    if !bands.kset().is_uniform_grid() || bands.kset() != reference.kset() {
        return Err(Error::GridMismatch);
    }
    if b >= bands.n_bands() || b >= reference.n_bands() {
        return Err(Error::InvalidParameter("band index beyond computed bands".into()));
    }
    let n = bands.n_kpoints();
    let total: f64 = (0..n)
        .map(|k| ((bands.energy(k, b) - mu) - (reference.energy(k, b) - mu_ref)).abs())
        .sum();
    Ok(total / n as f64)
}

fn filling_bands(n_electrons: f64, band: usize) -> usize {
    (ceil(n_electrons) as usize + 1).max(band)
}

/// Fermi-shifted band error at cutoff `ec` against a precomputed reference
/// band structure and Fermi level on the same grid.
pub fn fermi_adjusted_band_error<E: Executor>(
    v: &FourierPotential,
    ec: f64,
    scheme: &Scheme,
    reference: &BandStructure,
    mu_ref: f64,
    n_electrons: f64,
    band: usize,
    exec: &E,
) -> Result<f64> {
    if !reference.kset().is_uniform_grid() {
        return Err(Error::GridMismatch);
    }
    let bands = compute_bands(v, reference.kset(), ec, scheme, reference.n_bands(), exec)?;
    let mu = fermi_level(&bands, n_electrons)?.mu;
    fermi_adjusted_difference(&bands, mu, reference, mu_ref, band)
}

/// Errors of band `band` (numbered from 1) along an ascending cutoff ladder,
/// with fitted convergence rates.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study<E: Executor>(
    v: &FourierPotential,
    band: usize,
    measure: &ErrorMeasure,
    ladder: &[f64],
    scheme: &Scheme,
    reference: &Reference,
    r_potential: f64,
    exec: &E,
) -> Result<ConvergenceStudy> {
    let b = check_band(band)?;
    if ladder.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            found: ladder.len(),
        });
    }
    if ladder.windows(2).any(|w| !(w[0] < w[1])) || !(ladder[0] > 0.0) {
        return Err(Error::InvalidParameter("cutoff ladder must be positive and strictly ascending".into()));
    }
    let top = ladder[ladder.len() - 1];
    if top > reference.ec / 8.0 {
        return Err(Error::InvalidParameter(alloc::format!(
            "reference cutoff {} must be at least 8× the largest ladder cutoff {top}",
            reference.ec
        )));
    }
    let lat = v.lattice();
    let raw: Vec<f64> = match measure {
        ErrorMeasure::Pointwise { kpoints } => {
            if kpoints.is_empty() {
                return Err(Error::TooFewPoints { needed: 1, found: 0 });
            }
            let ks = KPointSet::from_points(lat.dim(), kpoints.clone());
            let refb = compute_bands(v, &ks, reference.ec, &reference.scheme, band, exec)?;
            let mut out = Vec::with_capacity(ladder.len());
            for &ec in ladder {
                let bs = compute_bands(v, &ks, ec, scheme, band, exec)?;
                let mean = (0..ks.len()).map(|k| bs.energy(k, b) - refb.energy(k, b)).sum::<f64>()
                    / ks.len() as f64;
                out.push(mean.abs());
            }
            out
        }
        ErrorMeasure::FermiAdjusted { grid, n_electrons } => {
            let ks = lat.uniform_grid(*grid)?;
            let nb = filling_bands(*n_electrons, band);
            let refb = compute_bands(v, &ks, reference.ec, &reference.scheme, nb, exec)?;
            let mu_ref = fermi_level(&refb, *n_electrons)?.mu;
            let mut out = Vec::with_capacity(ladder.len());
            for &ec in ladder {
                out.push(fermi_adjusted_band_error(v, ec, scheme, &refb, mu_ref, *n_electrons, band, exec)?);
            }
            out
        }
    };
    let clamped: Vec<bool> = raw.iter().map(|e| !(*e > ERROR_FLOOR)).collect();
    let errors: Vec<f64> = raw.iter().map(|e| e.max(ERROR_FLOOR)).collect();
    let lx: Vec<f64> = ladder.iter().map(|e| ln(*e)).collect();
    let ly: Vec<f64> = errors.iter().map(|e| ln(*e)).collect();
    let n = ladder.len();
    let fit_points = ((n + 2) / 2).max(2).min(n);
    let fitted_rate = -linear_slope(&lx[n - fit_points..], &ly[n - fit_points..]);
    let full_rate = -linear_slope(&lx, &ly);
    Ok(ConvergenceStudy {
        ec_ladder: ladder.to_vec(),
        errors,
        clamped,
        fitted_rate,
        full_rate,
        r_potential,
        predicted_rate: r_potential + 1.0 - lat.dim() as f64 / 4.0,
        fit_points,
    })
}

/// Finite-difference derivative of band `band` (numbered from 1) along a
/// uniformly spaced path. Central second-order stencils inside, one-sided
/// second-order stencils at both ends.
pub fn band_derivative_trace(bands: &BandStructure, band: usize, order: u32) -> Result<Vec<f64>> {
    let b = check_band(band)?;
    if b >= bands.n_bands() {
        return Err(Error::InvalidParameter("band index beyond computed bands".into()));
    }
    let h = match (bands.kset().kind(), bands.kset().mesh_width()) {
        (KPointKind::Path, Some(h)) => h,
        _ => return Err(Error::NonUniformPath),
    };
    finite_difference(&bands.band(b), h, order)
}

/// Derivative of order 1 or 2 of equally spaced samples.
pub fn finite_difference(f: &[f64], h: f64, order: u32) -> Result<Vec<f64>> {
    let n = f.len();
    if n < 5 {
        return Err(Error::TooFewPoints { needed: 5, found: n });
    }
    match order {
        1 => {
            let mut d = vec![0.0; n];
            d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
            d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
            for i in 1..n - 1 {
                d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
            }
            Ok(d)
        }
        2 => {
            let h2 = h * h;
            let mut d = vec![0.0; n];
            d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
            d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
            for i in 1..n - 1 {
                d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
            }
            Ok(d)
        }
        o => Err(Error::OrderTooHigh { order: o as usize, max: 2 }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    BoundedDerivative,
    UnboundedDerivative,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::BoundedDerivative => "bounded",
            Verdict::UnboundedDerivative => "unbounded",
        }
    }

    /// Unbounded iff the three last peaks strictly increase and grow by at
    /// least 1.5 overall.
    pub fn classify(peaks: &[f64]) -> Result<Verdict> {
        let n = peaks.len();
        if n < 3 {
            return Err(Error::TooFewPoints { needed: 3, found: n });
        }
        let (a, b, c) = (peaks[n - 3], peaks[n - 2], peaks[n - 1]);
        Ok(if a < b && b < c && c >= 1.5 * a {
            Verdict::UnboundedDerivative
        } else {
            Verdict::BoundedDerivative
        })
    }
}

/// Segment of k-space scanned by [`regularity_probe`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeLine {
    pub start: Vector,
    pub end: Vector,
    /// Half-width of the sampled window around each basis change, in k units.
    pub half_width: f64,
    /// Degree of the polynomial removed from the derivative before peaks are read.
    pub fit_degree: usize,
}

impl ProbeLine {
    /// The segment from `−b₁/2` to `b₁/2`.
    pub fn first_zone_axis(lat: &Lattice) -> Self {
        let b = lat.reciprocal(0);
        ProbeLine {
            start: [-0.5 * b[0], -0.5 * b[1], -0.5 * b[2]],
            end: [0.5 * b[0], 0.5 * b[1], 0.5 * b[2]],
            half_width: 0.1,
            fit_degree: 4,
        }
    }

    fn length(&self) -> f64 {
        let d: f64 = (0..3).map(|i| (self.end[i] - self.start[i]) * (self.end[i] - self.start[i])).sum();
        sqrt(d)
    }

    fn at(&self, s: f64) -> Vector {
        let l = self.length();
        let mut k = [0.0; 3];
        for i in 0..3 {
            k[i] = self.start[i] + (self.end[i] - self.start[i]) * s / l;
        }
        k
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularityProbe {
    pub band_index: usize,
    pub derivative_order: u32,
    pub mesh_widths: Vec<f64>,
    pub peak_magnitudes: Vec<f64>,
    /// Arc-length positions along the probe line where the basis changes.
    pub change_points: Vec<f64>,
    pub verdict: Verdict,
}

/// Positions `s` along `line` where the cutoff-`ec` basis changes size.
pub fn basis_change_points(lat: &Lattice, ec: f64, line: &ProbeLine, scan: usize) -> Result<Vec<f64>> {
    let len = line.length();
    let size = |s: f64| lat.basis_size(&line.at(s), ec, BasisMode::KDependent);
    let mut out = Vec::new();
    let mut prev_s = 0.0;
    let mut prev = size(0.0)?;
    for i in 1..=scan {
        let s = len * i as f64 / scan as f64;
        let cur = size(s)?;
        if cur != prev {
            let (mut lo, mut hi) = (prev_s, s);
            while hi - lo > 1e-13 * len.max(1.0) {
                let mid = 0.5 * (lo + hi);
                if size(mid)? == prev {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        prev = cur;
        prev_s = s;
    }
    Ok(out)
}

/// Classifies the smoothness of a modified band across basis changes.
///
/// For every mesh width `Δ` the band is sampled at `s* + (j + ½)Δ` in a window
/// around each basis change `s*`, differentiated by finite differences, and a
/// polynomial fitted on the outer half of the window is subtracted. The peak
/// is the largest remaining magnitude within a quarter window of `s*`; peaks
/// that keep growing under refinement indicate an unbounded derivative.
#[allow(clippy::too_many_arguments)]
pub fn regularity_probe<E: Executor>(
    v: &FourierPotential,
    ec: f64,
    spec: &BlowupSpec,
    band: usize,
    order: u32,
    deltas: &[f64],
    line: &ProbeLine,
    exec: &E,
) -> Result<RegularityProbe> {
    let b = check_band(band)?;
    if order == 0 || order > 2 {
        return Err(Error::OrderTooHigh { order: order as usize, max: 2 });
    }
    if deltas.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            found: deltas.len(),
        });
    }
    if deltas.windows(2).any(|w| !(w[1] > 0.0 && w[0] >= 2.0 * w[1] * (1.0 - 1e-12))) {
        return Err(Error::InvalidParameter("mesh widths must descend by a factor ≥ 2".into()));
    }
    let w = line.half_width;
    if !(w > 0.0) || deltas[0] * 8.0 > w {
        return Err(Error::InvalidParameter("probe window must hold at least 8 samples per side".into()));
    }
    let scheme = Scheme::Modified(BlowupFunction::build(*spec)?);
    let lat = v.lattice();
    let changes = basis_change_points(lat, ec, line, 4096)?;
    if changes.is_empty() {
        return Err(Error::NoBasisChangeOnPath);
    }
    let mut peaks = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let half = floor(w / delta + 1e-9) as i64;
        let mut peak: f64 = 0.0;
        for &s0 in &changes {
            let offsets: Vec<f64> = (-half..=half).map(|j| (j as f64 + 0.5) * delta).collect();
            let points: Vec<Vector> = offsets.iter().map(|o| line.at(s0 + o)).collect();
            let ks = KPointSet::from_parts(lat.dim(), points, KPointKind::Path, Vec::new(), Some(delta));
            let bands = compute_bands(v, &ks, ec, &scheme, band, exec)?;
            let e = bands.band(b);
            let d = finite_difference(&e, delta, order)?;
            // interior stencils only
            let xs = &offsets[1..offsets.len() - 1];
            let ds = &d[1..d.len() - 1];
            let (fx, fy): (Vec<f64>, Vec<f64>) = xs
                .iter()
                .zip(ds)
                .filter(|(x, _)| x.abs() > 0.5 * w)
                .map(|(x, y)| (x / w, *y))
                .unzip();
            let coef = polyfit(&fx, &fy, line.fit_degree)?;
            for (x, y) in xs.iter().zip(ds) {
                if x.abs() <= 0.25 * w {
                    peak = peak.max((y - polyval(&coef, x / w)).abs());
                }
            }
        }
        peaks.push(peak);
    }
    Ok(RegularityProbe {
        band_index: band,
        derivative_order: order,
        mesh_widths: deltas.to_vec(),
        verdict: Verdict::classify(&peaks)?,
        peak_magnitudes: peaks,
        change_points: changes,
    })
}

/// Least-squares polynomial coefficients (lowest degree first) by modified
/// Gram-Schmidt on the Vandermonde columns.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>> {
    let m = degree + 1;
    if x.len() < m {
        return Err(Error::TooFewPoints { needed: m, found: x.len() });
    }
    let rows = x.len();
    let mut q: Vec<Vec<f64>> = (0..m).map(|j| x.iter().map(|xi| libm::pow(*xi, j as f64)).collect()).collect();
    let mut r = vec![vec![0.0; m]; m];
    for j in 0..m {
        for i in 0..j {
            let dot: f64 = (0..rows).map(|t| q[i][t] * q[j][t]).sum();
            r[i][j] = dot;
            for t in 0..rows {
                q[j][t] -= dot * q[i][t];
            }
        }
        let nrm = sqrt(q[j].iter().map(|a| a * a).sum());
        if !(nrm > 0.0) {
            return Err(Error::InvalidParameter("degenerate polynomial fit".into()));
        }
        r[j][j] = nrm;
        for t in 0..rows {
            q[j][t] /= nrm;
        }
    }
    let qty: Vec<f64> = (0..m).map(|j| (0..rows).map(|t| q[j][t] * y[t]).sum()).collect();
    let mut c = vec![0.0; m];
    for j in (0..m).rev() {
        let s: f64 = (j + 1..m).map(|i| r[j][i] * c[i]).sum();
        c[j] = (qty[j] - s) / r[j][j];
    }
    Ok(c)
}

pub fn polyval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicityEntry {
    pub scheme: SchemeTag,
    pub max_violation: f64,
    pub worst_k: Vector,
    pub worst_shift: GIndex,
}

/// Largest `|ε_n(k) − ε_n(k + G)|` over samples, shifts and the first
/// `n_bands` bands, per scheme.
pub fn periodicity_report<E: Executor>(
    v: &FourierPotential,
    ec: f64,
    schemes: &[Scheme],
    samples: &KPointSet,
    shifts: &[GIndex],
    n_bands: usize,
    exec: &E,
) -> Result<Vec<PeriodicityEntry>> {
    let lat = v.lattice();
    let mut out = Vec::with_capacity(schemes.len());
    for scheme in schemes {
        let base = compute_bands(v, samples, ec, scheme, n_bands, exec)?;
        let mut entry = PeriodicityEntry {
            scheme: scheme.tag(),
            max_violation: 0.0,
            worst_k: [0.0; 3],
            worst_shift: GIndex::ZERO,
        };
        for &g in shifts {
            let moved: Vec<Vector> = samples.points().iter().map(|k| lat.shifted(k, g)).collect();
            let ks = KPointSet::from_points(lat.dim(), moved);
            let other = compute_bands(v, &ks, ec, scheme, n_bands, exec)?;
            for i in 0..samples.len() {
                for n in 0..n_bands {
                    let d = (base.energy(i, n) - other.energy(i, n)).abs();
                    if d > entry.max_violation {
                        entry.max_violation = d;
                        entry.worst_k = samples.points()[i];
                        entry.worst_shift = g;
                    }
                }
            }
        }
        out.push(entry);
    }
    Ok(out)
}

/// A potential for every lattice parameter `a`; the lattice travels with it.
pub type PotentialFamily<'a> = dyn Fn(f64) -> Result<FourierPotential> + Sync + 'a;

#[derive(Clone, Debug, PartialEq)]
pub struct CellScan {
    pub a_ladder: Vec<f64>,
    /// Energy per unit volume `ℰ(μ_F)/|Ω|` for each scheme along the ladder.
    pub columns: Vec<(SchemeTag, Vec<f64>)>,
    /// Smallest and largest basis size seen on the grid at each `a`.
    pub basis_bounds: Vec<(usize, usize)>,
}

impl CellScan {
    pub fn column(&self, tag: SchemeTag) -> Option<&[f64]> {
        self.columns.iter().find(|c| c.0 == tag).map(|c| c.1.as_slice())
    }
}

/// Band energy per unit volume at `n_electrons` on an `n`-point grid, for each
/// lattice parameter in `a_ladder` and each scheme.
#[allow(clippy::too_many_arguments)]
pub fn energy_vs_cell_parameter<E: Executor>(
    family: &PotentialFamily<'_>,
    ec: f64,
    schemes: &[Scheme],
    a_ladder: &[f64],
    n_electrons: f64,
    grid: usize,
    exec: &E,
) -> Result<CellScan> {
    let nb = filling_bands(n_electrons, 1);
    let mut columns: Vec<(SchemeTag, Vec<f64>)> =
        schemes.iter().map(|s| (s.tag(), Vec::with_capacity(a_ladder.len()))).collect();
    let mut bounds = Vec::with_capacity(a_ladder.len());
    for &a in a_ladder {
        let v = family(a)?;
        let lat = v.lattice();
        let ks = lat.uniform_grid(grid)?;
        bounds.push(lat.basis_cardinality_bounds(ec, &ks)?);
        for (scheme, col) in schemes.iter().zip(columns.iter_mut()) {
            let bands = compute_bands(&v, &ks, ec, scheme, nb, exec)?;
            let mu = fermi_level(&bands, n_electrons)?.mu;
            col.1.push(idoe(&bands, mu)?.value / lat.cell_volume());
        }
    }
    Ok(CellScan {
        a_ladder: a_ladder.to_vec(),
        columns,
        basis_bounds: bounds,
    })
}

/// `max_i |f_{i+1} − 2f_i + f_{i−1}|`.
pub fn max_second_difference(values: &[f64]) -> f64 {
    values
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs())
        .fold(0.0, f64::max)
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Ready-made systems used by the studies and the command line.
pub mod presets {
    use super::*;
    use crate::potential::PowerLawSynth;

    /// `V(x) = 2A cos(2πx)` on the unit chain.
    pub fn cosine_1d(amplitude: f64) -> Result<FourierPotential> {
        FourierPotential::cosine(&Lattice::chain(1.0)?, amplitude)
    }

    /// Rough 1D potential with `|V̂(G)| = (|G| / 2π)^{−1.6}`, 64 shells.
    pub fn toy_power_law_1d() -> Result<FourierPotential> {
        let t = 1.6;
        PowerLawSynth::new(t, 64, 7)
            .with_amplitude(libm::pow(2.0 * core::f64::consts::PI, t))
            .build(&Lattice::chain(1.0)?)
    }

    /// Fixed Fourier coefficients on a hexagonal lattice of parameter `a`.
    pub fn hexagonal_family(amplitude: f64, seed: u64) -> Result<Box<PotentialFamily<'static>>> {
        let t = 2.0;
        let base = PowerLawSynth::new(t, 2, seed)
            .with_amplitude(amplitude * libm::pow(2.0 * core::f64::consts::PI, t))
            .build(&Lattice::hexagonal(1.0)?)?;
        Ok(Box::new(move |a: f64| base.with_lattice(&Lattice::hexagonal(a)?)))
    }
}
