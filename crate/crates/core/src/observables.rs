//! Brillouin-zone averages over uniform grids: integrated density of states,
//! integrated density of energy and the Fermi level.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::spectra::BandStructure;

/// A grid average together with a flag raised when the highest computed band
/// reaches `μ` somewhere, so unseen bands could have contributed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub truncation_warning: bool,
}

/// Band edges around the filling, present for insulating fillings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapInfo {
    /// Highest occupied level `max_k ε_N(k)`.
    pub lower: f64,
    /// Lowest empty level `min_k ε_{N+1}(k)`.
    pub upper: f64,
}

impl GapInfo {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FermiLevel {
    pub mu: f64,
    /// Interval of chemical potentials at which the grid filling equals `N`.
    /// Degenerates to a point when the filling jumps over `N`.
    pub bracket: (f64, f64),
    pub gap: Option<GapInfo>,
}

fn require_grid(bands: &BandStructure) -> Result<()> {
    if bands.kset().is_uniform_grid() {
        Ok(())
    } else {
        Err(Error::NotUniformGrid)
    }
}

fn truncated(bands: &BandStructure, mu: f64) -> bool {
    let top = bands.n_bands() - 1;
    (0..bands.n_kpoints()).any(|k| bands.energy(k, top) <= mu)
}

/// `𝒩(μ)`: occupied states per cell.
pub fn idos(bands: &BandStructure, mu: f64) -> Result<Quadrature> {
    require_grid(bands)?;
    let count = bands.energies().iter().filter(|e| **e <= mu).count();
    Ok(Quadrature {
        value: count as f64 / bands.n_kpoints() as f64,
        truncation_warning: truncated(bands, mu),
    })
}

/// `ℰ(μ)`: energy of the occupied states per cell.
pub fn idoe(bands: &BandStructure, mu: f64) -> Result<Quadrature> {
    require_grid(bands)?;
    let sum: f64 = bands.energies().iter().filter(|e| **e <= mu).sum();
    Ok(Quadrature {
        value: sum / bands.n_kpoints() as f64,
        truncation_warning: truncated(bands, mu),
    })
}

/// Chemical potential at which the grid filling reaches `n_electrons`.
///
/// The grid `𝒩` is a step function, so the solution set is an interval of
/// the sorted level list; its midpoint is returned. Searches are confined to
/// `[min ε − 1, max ε + 1]`.
pub fn fermi_level(bands: &BandStructure, n_electrons: f64) -> Result<FermiLevel> {
    require_grid(bands)?;
    let nb = bands.n_bands() as f64;
    if !(n_electrons > 0.0) || !n_electrons.is_finite() || n_electrons > nb {
        return Err(Error::UnreachableFilling {
            requested: n_electrons,
            available: bands.n_bands(),
        });
    }
    let nk = bands.n_kpoints();
    let mut levels: Vec<f64> = bands.energies().to_vec();
    levels.sort_by(f64::total_cmp);
    let upper_limit = levels[levels.len() - 1] + 1.0;

    let target = n_electrons * nk as f64;
    let nearest = libm::round(target);
    let integral = (target - nearest).abs() <= 1e-9 * target.max(1.0);
    // smallest count c with c / nk ≥ N
    let c = if integral { nearest as usize } else { libm::ceil(target) as usize };
    let lo = levels[c - 1];
    let bracket = if integral {
        let hi = levels.get(c).copied().unwrap_or(upper_limit);
        (lo, hi)
    } else {
        (lo, lo)
    };
    let mu = 0.5 * (bracket.0 + bracket.1);

    let whole = libm::round(n_electrons);
    let gap = if (n_electrons - whole).abs() <= 1e-12 && (whole as usize) < bands.n_bands() {
        let n = whole as usize;
        let lower = bands.band(n - 1).into_iter().fold(f64::NEG_INFINITY, f64::max);
        let upper = bands.band(n).into_iter().fold(f64::INFINITY, f64::min);
        (lower < upper).then_some(GapInfo { lower, upper })
    } else {
        None
    };
    Ok(FermiLevel { mu, bracket, gap })
}

/// `ℰ(μ_F)` for `n_electrons`, the total band energy per cell.
pub fn band_energy(bands: &BandStructure, n_electrons: f64) -> Result<f64> {
    let mu = fermi_level(bands, n_electrons)?.mu;
    Ok(idoe(bands, mu)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;
    use crate::fiber::{Scheme, SchemeTag};
    use crate::lattice::{KPointSet, Lattice};
    use crate::potential::FourierPotential;
    use crate::spectra::compute_bands;
    use core::f64::consts::PI;
    use std::vec;

    fn free_grid(n: usize, bands: usize) -> BandStructure {
        let lat = Lattice::chain(1.0).unwrap();
        let grid = lat.uniform_grid(n).unwrap();
        compute_bands(&FourierPotential::zero(&lat), &grid, 200.0, &Scheme::KDependent, bands, &Serial)
            .unwrap()
    }

    fn flat(c: f64, nk: usize) -> BandStructure {
        let lat = Lattice::chain(1.0).unwrap();
        let grid = lat.uniform_grid(nk).unwrap();
        BandStructure::from_parts(grid, 1, vec![c; nk], SchemeTag::KDependentGalerkin, 1.0).unwrap()
    }

    #[test]
    fn idos_limits() {
        let b = free_grid(40, 2);
        assert_eq!(idos(&b, -1.0).unwrap().value, 0.0);
        let top = idos(&b, 1e3).unwrap();
        assert_eq!(top.value, 2.0);
        assert!(top.truncation_warning);
        assert!(!idos(&b, 1.0).unwrap().truncation_warning);
    }

    #[test]
    fn half_filled_parabola() {
        let n = 200;
        let b = free_grid(n, 2);
        let v = idos(&b, PI * PI / 2.0).unwrap().value;
        assert!((v - 1.0).abs() <= 2.0 / n as f64);
    }

    #[test]
    fn flat_band_energy() {
        let b = flat(0.7, 16);
        assert_eq!(idoe(&b, 0.0).unwrap().value, 0.0);
        assert!((idoe(&b, 1.0).unwrap().value - 0.7).abs() < 1e-15);
    }

    /// Oracle: (1/2π) ∫_{−π}^{π} ½k² dk = π²/6.
    #[test]
    fn free_electron_energy_integral() {
        let b = free_grid(400, 2);
        let f = fermi_level(&b, 1.0).unwrap();
        assert!((f.mu - PI * PI / 2.0).abs() < 0.05);
        let e = idoe(&b, f.mu).unwrap().value;
        assert!((e - PI * PI / 6.0).abs() < 1e-4);
    }

    #[test]
    fn unreachable_filling() {
        let b = free_grid(8, 2);
        assert!(matches!(fermi_level(&b, 2.5), Err(Error::UnreachableFilling { .. })));
        assert!(fermi_level(&b, 0.0).is_err());
    }

    #[test]
    fn path_rejected() {
        let lat = Lattice::chain(1.0).unwrap();
        let path = KPointSet::from_points(1, vec![[0.0; 3], [1.0, 0.0, 0.0]]);
        let b = compute_bands(&FourierPotential::zero(&lat), &path, 50.0, &Scheme::KDependent, 1, &Serial)
            .unwrap();
        assert_eq!(idos(&b, 0.0), Err(Error::NotUniformGrid));
    }

    #[test]
    fn cosine_gap_brackets_fermi_level() {
        let lat = Lattice::chain(1.0).unwrap();
        let v = FourierPotential::cosine(&lat, 1.0).unwrap();
        let grid = lat.uniform_grid(64).unwrap();
        let b = compute_bands(&v, &grid, 200.0, &Scheme::KDependent, 3, &Serial).unwrap();
        let f = fermi_level(&b, 1.0).unwrap();
        let top1 = b.band(0).into_iter().fold(f64::NEG_INFINITY, f64::max);
        let bot2 = b.band(1).into_iter().fold(f64::INFINITY, f64::min);
        let gap = f.gap.expect("cosine opens a gap at the zone edge");
        assert_eq!((gap.lower, gap.upper), (top1, bot2));
        assert!(top1 <= f.mu && f.mu <= bot2);
        assert_eq!(f.bracket, (top1, bot2));
        let n = idos(&b, f.mu).unwrap().value;
        assert_eq!(n, 1.0);
    }

    #[test]
    fn fractional_filling_lands_on_a_level() {
        let b = free_grid(10, 2);
        let f = fermi_level(&b, 0.55).unwrap();
        assert_eq!(f.bracket.0, f.bracket.1);
        assert!(idos(&b, f.mu).unwrap().value >= 0.55);
        assert!(idos(&b, f.mu - 1e-12).unwrap().value < 0.55);
        assert!(f.gap.is_none());
    }

    #[test]
    fn idos_and_idoe_monotone() {
        let b = free_grid(32, 3);
        let mut last = (0.0, 0.0);
        for i in 0..200 {
            let mu = -1.0 + 0.5 * i as f64;
            let n = idos(&b, mu).unwrap().value;
            let e = idoe(&b, mu).unwrap().value;
            assert!(n >= last.0 && e >= last.1);
            last = (n, e);
        }
    }
}
