//! Assembly of the Galerkin matrices of one Bloch fiber.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::blowup::BlowupFunction;
use crate::error::{Error, Result};
use crate::lattice::{BasisMode, GIndex, Vector};
use crate::linalg::CMatrix;
use crate::num::sqrt;
use crate::potential::FourierPotential;

/// Discretization scheme of a fiber.
#[derive(Clone, Debug, PartialEq)]
pub enum Scheme {
    /// Uniform basis `{G : ½|G|² < Ec}` with kinetic entries `½|k + G|²`.
    Uniform,
    /// Basis `{G : ½|k + G|² < Ec}` with kinetic entries `½|k + G|²`.
    KDependent,
    /// k-dependent basis with kinetic entries `Ec·𝒢(|k + G| / √(2Ec))`.
    Modified(BlowupFunction),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SchemeTag {
    UniformGalerkin,
    KDependentGalerkin,
    Modified,
}

impl SchemeTag {
    /// Short name used on the command line and in output files.
    pub fn name(&self) -> &'static str {
        match self {
            SchemeTag::UniformGalerkin => "uniform",
            SchemeTag::KDependentGalerkin => "kdep",
            SchemeTag::Modified => "modified",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "uniform" => Some(SchemeTag::UniformGalerkin),
            "kdep" => Some(SchemeTag::KDependentGalerkin),
            "modified" => Some(SchemeTag::Modified),
            _ => None,
        }
    }
}

impl Scheme {
    pub fn tag(&self) -> SchemeTag {
        match self {
            Scheme::Uniform => SchemeTag::UniformGalerkin,
            Scheme::KDependent => SchemeTag::KDependentGalerkin,
            Scheme::Modified(_) => SchemeTag::Modified,
        }
    }

    pub fn basis_mode(&self) -> BasisMode {
        match self {
            Scheme::Uniform => BasisMode::Uniform,
            _ => BasisMode::KDependent,
        }
    }

    pub fn name(&self) -> &'static str {
        self.tag().name()
    }

    pub fn blowup(&self) -> Option<&BlowupFunction> {
        match self {
            Scheme::Modified(g) => Some(g),
            _ => None,
        }
    }

    /// Kinetic diagonal entry for a plane wave with `½|k + G|² = kinetic`.
    pub fn kinetic_entry(&self, kinetic: f64, ec: f64) -> Result<f64> {
        match self {
            Scheme::Modified(g) => {
                let x = sqrt(kinetic / ec);
                if x <= 0.5 {
                    // Ec·x² written without the round trip through x.
                    Ok(kinetic)
                } else {
                    Ok(ec * g.eval(x)?)
                }
            }
            _ => Ok(kinetic),
        }
    }
}

/// Galerkin matrix of one fiber in its ordered plane-wave basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberMatrix {
    k: Vector,
    ec: f64,
    basis: Vec<GIndex>,
    matrix: CMatrix,
    tag: SchemeTag,
}

impl FiberMatrix {
    pub fn k(&self) -> &Vector {
        &self.k
    }

    pub fn ec(&self) -> f64 {
        self.ec
    }

    pub fn basis(&self) -> &[GIndex] {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn tag(&self) -> SchemeTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Assembles the fiber matrix at `k` for cutoff `ec`.
///
/// Off-diagonal entries are `c_{G_i − G_j}`; the potential is scattered
/// coefficient by coefficient, so the cost is `O(M · #coeffs · log M)`.
pub fn assemble(v: &FourierPotential, k: &Vector, ec: f64, scheme: &Scheme) -> Result<FiberMatrix> {
    if !v.is_real_valued() {
        return Err(Error::ComplexPotential);
    }
    let lat = v.lattice();
    let k = lat.project(k);
    let basis = lat.enumerate_basis(&k, ec, scheme.basis_mode())?;
    let n = basis.len();
    let index: BTreeMap<GIndex, usize> = basis.iter().enumerate().map(|(i, g)| (*g, i)).collect();

    let mut diag = Vec::with_capacity(n);
    for g in &basis {
        diag.push(scheme.kinetic_entry(lat.kinetic(&k, *g), ec)?);
    }
    let mut m = CMatrix::zeros(n);
    for (delta, c) in v.coeffs() {
        for (j, gj) in basis.iter().enumerate() {
            if let Some(&i) = index.get(&(*gj + *delta)) {
                if i < j {
                    m.set(i, j, *c);
                } else if i == j {
                    diag[i] += c.re;
                }
            }
        }
    }
    for i in 0..n {
        m.set(i, i, Complex64::new(diag[i], 0.0));
        for j in 0..i {
            let upper = m.get(j, i);
            m.set(i, j, upper.conj());
        }
    }
    Ok(FiberMatrix {
        k,
        ec,
        basis,
        matrix: m,
        tag: scheme.tag(),
    })
}

/// Restricts the modified matrix at cutoff `4·ec` to the plane waves with
/// `½|k + G|² < ec` and compares it with the k-dependent matrix at `ec`.
/// Returns the largest absolute entry of the difference.
pub fn project_modified_identity_check(
    v: &FourierPotential,
    k: &Vector,
    ec: f64,
    blowup: &BlowupFunction,
) -> Result<f64> {
    let big = assemble(v, k, 4.0 * ec, &Scheme::Modified(blowup.clone()))?;
    let small = assemble(v, k, ec, &Scheme::KDependent)?;
    let position: BTreeMap<GIndex, usize> =
        big.basis().iter().enumerate().map(|(i, g)| (*g, i)).collect();
    let idx: Vec<usize> = small
        .basis()
        .iter()
        .map(|g| position[g])
        .collect();
    let projected = big.matrix().submatrix(&idx);
    let mut worst: f64 = 0.0;
    for i in 0..idx.len() {
        for j in 0..idx.len() {
            worst = worst.max((projected.get(i, j) - small.matrix().get(i, j)).norm());
        }
    }
    Ok(worst)
}

/// Largest `|entry|` of a fiber, the scale for relative comparisons.
pub fn matrix_scale(f: &FiberMatrix) -> f64 {
    f.matrix().max_abs()
}

/// Kinetic diagonal of a fiber with the potential's `c_0` removed.
pub fn kinetic_diagonal(f: &FiberMatrix, v: &FourierPotential) -> Vec<f64> {
    let v0 = v.coeff(GIndex::ZERO).re;
    (0..f.dim()).map(|i| f.matrix().get(i, i).re - v0).collect()
}
