//! Eigenvalues of fiber matrices and band structures over k-point sets.

use alloc::string::String;
use alloc::vec::Vec;

use crate::blowup::BlowupSpec;
use crate::digest::{lattice_digest, potential_digest};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::fiber::{assemble, FiberMatrix, Scheme, SchemeTag};
use crate::lattice::KPointSet;
use crate::linalg::{jacobi_eigh, CMatrix};
use crate::potential::FourierPotential;
use num_complex::Complex64;

/// Eigenpairs of one fiber, eigenvalues ascending with multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSolution {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per value, in the fiber's basis order.
    pub vectors: Option<Vec<Vec<Complex64>>>,
    /// Largest `‖Hv − λv‖ / (1 + |λ|)` over returned pairs when vectors are
    /// computed; otherwise the a-priori bound `n·ε·max|H_ij|`.
    pub residual_bound: f64,
}

/// The `n_lowest` smallest eigenpairs (all when `None`).
pub fn eigh(h: &FiberMatrix, n_lowest: Option<usize>, want_vectors: bool) -> Result<EigenSolution> {
    eigh_matrix(h.matrix(), n_lowest, want_vectors)
}

pub fn eigh_matrix(h: &CMatrix, n_lowest: Option<usize>, want_vectors: bool) -> Result<EigenSolution> {
    let n = h.dim();
    let keep = n_lowest.unwrap_or(n);
    if keep > n {
        return Err(Error::InvalidParameter(alloc::format!(
            "asked for {keep} eigenpairs of a {n}×{n} matrix"
        )));
    }
    let full = jacobi_eigh(h, want_vectors)?;
    let values: Vec<f64> = full.values[..keep].to_vec();
    let vectors: Option<Vec<Vec<Complex64>>> = full
        .vectors
        .map(|v| (0..keep).map(|j| (0..n).map(|i| v.get(i, j)).collect()).collect());
    let residual_bound = match &vectors {
        Some(v) => v
            .iter()
            .enumerate()
            .map(|(col, x)| {
                let hx = h.mul_vec(x);
                let r: f64 = hx
                    .iter()
                    .zip(x.iter())
                    .map(|(a, b)| (a - b * values[col]).norm_sqr())
                    .sum();
                crate::num::sqrt(r) / (1.0 + values[col].abs())
            })
            .fold(0.0, f64::max),
        None => n as f64 * f64::EPSILON * h.max_abs(),
    };
    Ok(EigenSolution {
        values,
        vectors,
        residual_bound,
    })
}

/// Energies `ε_n(k)` for `n = 1..=n_bands` over an ordered k-set.
#[derive(Clone, Debug, PartialEq)]
pub struct BandStructure {
    kset: KPointSet,
    n_bands: usize,
    energies: Vec<f64>,
    scheme: SchemeTag,
    blowup: Option<BlowupSpec>,
    ec: f64,
    lattice_digest: String,
    potential_digest: String,
}

impl BandStructure {
    /// Wraps precomputed energies (row-major, one row of `n_bands` per k).
    pub fn from_parts(
        kset: KPointSet,
        n_bands: usize,
        energies: Vec<f64>,
        scheme: SchemeTag,
        ec: f64,
    ) -> Result<Self> {
        if energies.len() != kset.len() * n_bands {
            return Err(Error::DimensionMismatch {
                expected: kset.len() * n_bands,
                found: energies.len(),
            });
        }
        Ok(BandStructure {
            kset,
            n_bands,
            energies,
            scheme,
            blowup: None,
            ec,
            lattice_digest: String::new(),
            potential_digest: String::new(),
        })
    }

    pub fn kset(&self) -> &KPointSet {
        &self.kset
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    pub fn n_kpoints(&self) -> usize {
        self.kset.len()
    }

    pub fn scheme(&self) -> SchemeTag {
        self.scheme
    }

    pub fn blowup(&self) -> Option<&BlowupSpec> {
        self.blowup.as_ref()
    }

    pub fn ec(&self) -> f64 {
        self.ec
    }

    pub fn lattice_digest(&self) -> &str {
        &self.lattice_digest
    }

    pub fn potential_digest(&self) -> &str {
        &self.potential_digest
    }

    /// `ε_{band+1}(k_index)` (bands are zero-based here).
    pub fn energy(&self, k_index: usize, band: usize) -> f64 {
        self.energies[k_index * self.n_bands + band]
    }

    pub fn row(&self, k_index: usize) -> &[f64] {
        &self.energies[k_index * self.n_bands..(k_index + 1) * self.n_bands]
    }

    /// One band across the whole k-set.
    pub fn band(&self, band: usize) -> Vec<f64> {
        (0..self.n_kpoints()).map(|k| self.energy(k, band)).collect()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn min_energy(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_energy(&self) -> f64 {
        self.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Assembles and diagonalizes every fiber of `kset`, one row per k.
pub fn compute_bands<E: Executor>(
    v: &FourierPotential,
    kset: &KPointSet,
    ec: f64,
    scheme: &Scheme,
    n_bands: usize,
    exec: &E,
) -> Result<BandStructure> {
    if n_bands == 0 {
        return Err(Error::InvalidParameter("n_bands must be ≥ 1".into()));
    }
    if kset.dim() != v.lattice().dim() {
        return Err(Error::DimensionMismatch {
            expected: v.lattice().dim(),
            found: kset.dim(),
        });
    }
    let rows = exec.map(kset.len(), |i| -> Result<Vec<f64>> {
        let k = kset.points()[i];
        let fiber = assemble(v, &k, ec, scheme)?;
        if fiber.dim() < n_bands {
            return Err(Error::BandCountExceedsBasis {
                index: i,
                k,
                requested: n_bands,
                available: fiber.dim(),
            });
        }
        Ok(eigh(&fiber, Some(n_bands), false)?.values)
    });
    let mut energies = Vec::with_capacity(kset.len() * n_bands);
    for row in rows {
        energies.extend(row?);
    }
    Ok(BandStructure {
        kset: kset.clone(),
        n_bands,
        energies,
        scheme: scheme.tag(),
        blowup: scheme.blowup().map(|g| *g.spec()),
        ec,
        lattice_digest: lattice_digest(v.lattice()),
        potential_digest: potential_digest(v),
    })
}
