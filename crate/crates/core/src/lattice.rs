//! Direct and reciprocal lattices, plane-wave index sets and k-point sets.
//!
//! Vectors are stored padded to three components; components beyond the
//! lattice dimension are always zero.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};
use crate::num::{abs, ceil, floor, sqrt};

/// Cartesian vector, zero-padded beyond the lattice dimension.
pub type Vector = [f64; 3];

const TWO_PI: f64 = 2.0 * PI;

/// Integer coordinates `n` of a reciprocal lattice vector `G = Σ nᵢ bᵢ`.
///
/// Ordering is lexicographic on the coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GIndex(pub [i32; 3]);

impl GIndex {
    pub const ZERO: GIndex = GIndex([0; 3]);

    pub fn new(coords: &[i32]) -> Result<Self> {
        if coords.len() > 3 {
            return Err(Error::InvalidDimension(coords.len()));
        }
        let mut c = [0; 3];
        c[..coords.len()].copy_from_slice(coords);
        Ok(GIndex(c))
    }

    pub fn coords(&self, dim: usize) -> &[i32] {
        &self.0[..dim]
    }

    /// Sup-norm of the integer coordinates.
    pub fn shell(&self) -> u32 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    /// True for the half of `L* \ {0}` whose first nonzero coordinate is positive.
    pub fn is_positive_half(&self) -> bool {
        self.0.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
    }

    pub(crate) fn fits_dim(&self, dim: usize) -> bool {
        self.0[dim..].iter().all(|&c| c == 0)
    }
}

impl Add for GIndex {
    type Output = GIndex;
    fn add(self, rhs: GIndex) -> GIndex {
        GIndex([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
    }
}

impl Sub for GIndex {
    type Output = GIndex;
    fn sub(self, rhs: GIndex) -> GIndex {
        GIndex([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

impl Neg for GIndex {
    type Output = GIndex;
    fn neg(self) -> GIndex {
        GIndex([-self.0[0], -self.0[1], -self.0[2]])
    }
}

/// Which plane waves enter a basis set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisMode {
    /// `{G : ½|G|² < Ec}`, the same for every k.
    Uniform,
    /// `{G : ½|k + G|² < Ec}`.
    KDependent,
}

/// A Bravais lattice `L` with its reciprocal lattice `L*`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    dim: usize,
    primitive: [Vector; 3],
    reciprocal: [Vector; 3],
    cell_volume: f64,
    bz_volume: f64,
}

impl Lattice {
    /// Builds a lattice from its primitive vectors `a₁..a_d`.
    pub fn from_vectors<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Self> {
        let dim = vectors.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidDimension(dim));
        }
        let mut primitive = [[0.0; 3]; 3];
        for (i, v) in vectors.iter().enumerate() {
            let v = v.as_ref();
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter("non-finite lattice vector".into()));
            }
            primitive[i][..dim].copy_from_slice(v);
        }
        Self::from_padded(dim, primitive)
    }

    /// Builds a lattice from the row-major `d×d` matrix whose columns are `aᵢ`.
    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidDimension(dim));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        let vectors: Vec<Vec<f64>> = (0..dim)
            .map(|col| (0..dim).map(|row| entries[row * dim + col]).collect())
            .collect();
        Self::from_vectors(&vectors)
    }

    /// Row-major `d×d` matrix with columns `aᵢ` (the inverse of [`Lattice::from_row_major`]).
    pub fn to_row_major(&self) -> Vec<f64> {
        let d = self.dim;
        let mut out = Vec::with_capacity(d * d);
        for row in 0..d {
            for col in 0..d {
                out.push(self.primitive[col][row]);
            }
        }
        out
    }

    pub fn chain(a: f64) -> Result<Self> {
        Self::from_vectors(&[[a]])
    }

    /// 2D hexagonal lattice with `a₁ = (a, 0)`, `a₂ = (−a/2, a√3/2)`.
    pub fn hexagonal(a: f64) -> Result<Self> {
        Self::from_vectors(&[[a, 0.0], [-0.5 * a, 0.5 * a * sqrt(3.0)]])
    }

    pub fn cubic(a: f64) -> Result<Self> {
        Self::from_vectors(&[[a, 0.0, 0.0], [0.0, a, 0.0], [0.0, 0.0, a]])
    }

    /// Face-centred cubic lattice with conventional cube edge `a`.
    pub fn fcc(a: f64) -> Result<Self> {
        let h = 0.5 * a;
        Self::from_vectors(&[[0.0, h, h], [h, 0.0, h], [h, h, 0.0]])
    }

    fn from_padded(dim: usize, primitive: [Vector; 3]) -> Result<Self> {
        let scale = primitive
            .iter()
            .flat_map(|v| v[..dim].iter())
            .fold(0.0_f64, |m, x| m.max(abs(*x)));
        // Unused dimensions get unit vectors so that the 3×3 algebra below
        // reduces to the d×d block.
        let mut full = primitive;
        for (i, v) in full.iter_mut().enumerate().skip(dim) {
            v[i] = 1.0;
        }
        let det = det3(&full);
        if !(abs(det) > 1e-14 * scale.powi_d(dim)) {
            return Err(Error::SingularLattice { det });
        }
        // b_j = 2π (Aᵀ)⁻¹ e_j, i.e. b₁ = 2π (a₂ × a₃) / det, cyclically.
        let mut reciprocal = [[0.0; 3]; 3];
        for j in 0..3 {
            let c = cross(&full[(j + 1) % 3], &full[(j + 2) % 3]);
            for r in 0..3 {
                reciprocal[j][r] = TWO_PI * c[r] / det;
            }
        }
        for b in reciprocal.iter_mut().skip(dim) {
            *b = [0.0; 3];
        }
        for b in reciprocal.iter_mut().take(dim) {
            for x in b.iter_mut().skip(dim) {
                *x = 0.0;
            }
        }
        let cell_volume = abs(det);
        let bz_volume = TWO_PI.powi_d(dim) / cell_volume;
        Ok(Lattice {
            dim,
            primitive,
            reciprocal,
            cell_volume,
            bz_volume,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Primitive vector `aᵢ`.
    pub fn primitive(&self, i: usize) -> Vector {
        self.primitive[i]
    }

    /// Reciprocal vector `bᵢ`, with `aᵢ·bⱼ = 2πδᵢⱼ`.
    pub fn reciprocal(&self, i: usize) -> Vector {
        self.reciprocal[i]
    }

    /// `|Ω|`, the volume of the unit cell.
    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// `|Ω*| = (2π)^d / |Ω|`.
    pub fn bz_volume(&self) -> f64 {
        self.bz_volume
    }

    /// The same lattice with every primitive vector multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let mut p = self.primitive;
        for v in p.iter_mut() {
            for x in v.iter_mut() {
                *x *= s;
            }
        }
        Self::from_padded(self.dim, p)
    }

    /// Cartesian coordinates of `G = Σ nᵢ bᵢ`.
    pub fn cartesian(&self, g: GIndex) -> Vector {
        let mut out = [0.0; 3];
        for i in 0..self.dim {
            let n = g.0[i] as f64;
            for (o, b) in out.iter_mut().zip(self.reciprocal[i].iter()) {
                *o += n * b;
            }
        }
        out
    }

    /// `k = Σ fᵢ bᵢ`.
    pub fn frac_to_cart(&self, frac: &[f64]) -> Vector {
        let mut out = [0.0; 3];
        for (i, f) in frac.iter().enumerate().take(self.dim) {
            for (o, b) in out.iter_mut().zip(self.reciprocal[i].iter()) {
                *o += f * b;
            }
        }
        out
    }

    /// Fractional coordinates `fᵢ = aᵢ·k / 2π`.
    pub fn cart_to_frac(&self, k: &Vector) -> Vector {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = dot(&self.primitive[i], k) / TWO_PI;
        }
        out
    }

    /// Real-space point `x = Σ fᵢ aᵢ`.
    pub fn frac_to_real(&self, frac: &[f64]) -> Vector {
        let mut out = [0.0; 3];
        for (i, f) in frac.iter().enumerate().take(self.dim) {
            for (o, a) in out.iter_mut().zip(self.primitive[i].iter()) {
                *o += f * a;
            }
        }
        out
    }

    /// Copies the first `d` components of `k` and zeroes the rest.
    pub fn project(&self, k: &[f64]) -> Vector {
        let mut out = [0.0; 3];
        for (o, x) in out.iter_mut().zip(k.iter()).take(self.dim) {
            *o = *x;
        }
        out
    }

    /// `k + G` in Cartesian coordinates.
    pub fn shifted(&self, k: &Vector, g: GIndex) -> Vector {
        let gc = self.cartesian(g);
        [k[0] + gc[0], k[1] + gc[1], k[2] + gc[2]]
    }

    /// `½|k + G|²`.
    pub fn kinetic(&self, k: &Vector, g: GIndex) -> f64 {
        let q = self.shifted(k, g);
        0.5 * dot(&q, &q)
    }

    /// Plane waves below the cutoff, sorted by kinetic value and then by index.
    pub fn enumerate_basis(&self, k: &Vector, ec: f64, mode: BasisMode) -> Result<Vec<GIndex>> {
        if !(ec > 0.0) || !ec.is_finite() {
            return Err(Error::InvalidParameter("cutoff must be positive and finite".into()));
        }
        let k = match mode {
            BasisMode::Uniform => [0.0; 3],
            BasisMode::KDependent => self.project(k),
        };
        let kn = norm(&k);
        let reach = sqrt(2.0 * ec) + kn;
        let mut radius = [0i32; 3];
        for (i, r) in radius.iter_mut().enumerate().take(self.dim) {
            *r = ceil(reach * norm(&self.primitive[i]) / TWO_PI) as i32;
        }
        let mut found: Vec<(f64, GIndex)> = Vec::new();
        for n0 in -radius[0]..=radius[0] {
            for n1 in -radius[1]..=radius[1] {
                for n2 in -radius[2]..=radius[2] {
                    let g = GIndex([n0, n1, n2]);
                    let t = self.kinetic(&k, g);
                    if t < ec {
                        found.push((t, g));
                    }
                }
            }
        }
        if found.is_empty() {
            return Err(Error::EmptyBasis { ec });
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(found.into_iter().map(|(_, g)| g).collect())
    }

    /// Basis size `M_Ec(k)`, zero when the basis would be empty.
    pub fn basis_size(&self, k: &Vector, ec: f64, mode: BasisMode) -> Result<usize> {
        match self.enumerate_basis(k, ec, mode) {
            Ok(b) => Ok(b.len()),
            Err(Error::EmptyBasis { .. }) => Ok(0),
            Err(e) => Err(e),
        }
    }

    /// Estimates `(M⁻, M⁺)` as the extreme k-dependent basis sizes over `probe`.
    pub fn basis_cardinality_bounds(&self, ec: f64, probe: &KPointSet) -> Result<(usize, usize)> {
        if probe.is_empty() {
            return Err(Error::InvalidParameter("empty probe grid".into()));
        }
        let mut lo = usize::MAX;
        let mut hi = 0;
        for k in probe.points() {
            let m = self.basis_size(k, ec, BasisMode::KDependent)?;
            lo = lo.min(m);
            hi = hi.max(m);
        }
        Ok((lo, hi))
    }

    /// Piecewise-linear path through `nodes` (Cartesian), each segment split
    /// into `samples_per_segment` steps. Shared endpoints appear once.
    pub fn kpath<S: Into<String> + Clone>(
        &self,
        nodes: &[(S, Vector)],
        samples_per_segment: usize,
    ) -> Result<KPointSet> {
        if nodes.len() < 2 {
            return Err(Error::InvalidParameter("a path needs at least two nodes".into()));
        }
        if samples_per_segment == 0 {
            return Err(Error::InvalidParameter("samples_per_segment must be ≥ 1".into()));
        }
        let s = samples_per_segment;
        let mut points = Vec::with_capacity((nodes.len() - 1) * s + 1);
        let mut labels = BTreeMap::new();
        for (seg, pair) in nodes.windows(2).enumerate() {
            let from = self.project(&pair[0].1);
            let to = self.project(&pair[1].1);
            labels.insert(seg * s, pair[0].0.clone().into());
            for j in 0..s {
                let t = j as f64 / s as f64;
                points.push([
                    from[0] + t * (to[0] - from[0]),
                    from[1] + t * (to[1] - from[1]),
                    from[2] + t * (to[2] - from[2]),
                ]);
            }
        }
        let last = nodes.last().expect("checked above");
        labels.insert(points.len(), last.0.clone().into());
        points.push(self.project(&last.1));

        let steps: Vec<f64> = points.windows(2).map(|w| distance(&w[0], &w[1])).collect();
        let h = steps[0];
        let uniform = h > 0.0 && steps.iter().all(|x| abs(x - h) <= 1e-9 * h);
        Ok(KPointSet {
            dim: self.dim,
            points,
            kind: KPointKind::Path,
            labels: labels.into_iter().collect(),
            mesh_width: uniform.then_some(h),
        })
    }

    /// Monkhorst-Pack grid with `n` points per reciprocal direction, at
    /// fractional coordinates `(2r − n − 1)/(2n)`, `r = 1..=n`. The grid is
    /// symmetric under k → −k, contains Γ for odd `n` and never touches the
    /// zone boundary.
    pub fn uniform_grid(&self, n: usize) -> Result<KPointSet> {
        if n == 0 {
            return Err(Error::InvalidParameter("grid needs n ≥ 1".into()));
        }
        let fr = |j: usize| (2 * j as i64 + 1 - n as i64) as f64 / (2 * n) as f64;
        let count = n.pow(self.dim as u32);
        let mut points = Vec::with_capacity(count);
        for flat in 0..count {
            let mut frac = [0.0; 3];
            let mut rest = flat;
            for i in (0..self.dim).rev() {
                frac[i] = fr(rest % n);
                rest /= n;
            }
            points.push(self.frac_to_cart(&frac));
        }
        let mesh_width = (0..self.dim)
            .map(|i| norm(&self.reciprocal[i]))
            .fold(f64::INFINITY, f64::min)
            / n as f64;
        Ok(KPointSet {
            dim: self.dim,
            points,
            kind: KPointKind::UniformGrid { n_per_dim: n },
            labels: Vec::new(),
            mesh_width: Some(mesh_width),
        })
    }

    /// Maps a Cartesian k into the fractional parallelepiped `[−½, ½)^d`.
    pub fn wrap_to_zone(&self, k: &Vector) -> Vector {
        let f = self.cart_to_frac(k);
        let mut w = [0.0; 3];
        for i in 0..self.dim {
            w[i] = f[i] - floor(f[i] + 0.5);
        }
        self.frac_to_cart(&w)
    }
}

trait PowD {
    fn powi_d(self, d: usize) -> f64;
}

impl PowD for f64 {
    fn powi_d(self, d: usize) -> f64 {
        (0..d).fold(1.0, |acc, _| acc * self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KPointKind {
    Path,
    UniformGrid { n_per_dim: usize },
}

/// An ordered set of quasi-momenta (Cartesian, inverse length units).
#[derive(Clone, Debug, PartialEq)]
pub struct KPointSet {
    dim: usize,
    points: Vec<Vector>,
    kind: KPointKind,
    labels: Vec<(usize, String)>,
    mesh_width: Option<f64>,
}

impl KPointSet {
    /// An unlabelled path through explicit points.
    pub fn from_points(dim: usize, points: Vec<Vector>) -> Self {
        let steps: Vec<f64> = points.windows(2).map(|w| distance(&w[0], &w[1])).collect();
        let mesh_width = steps.first().copied().filter(|&h| {
            h > 0.0 && steps.iter().all(|x| abs(x - h) <= 1e-9 * h)
        });
        KPointSet {
            dim,
            points,
            kind: KPointKind::Path,
            labels: Vec::new(),
            mesh_width,
        }
    }

    /// Rebuilds a set from serialized parts (used by the file formats).
    pub fn from_parts(
        dim: usize,
        points: Vec<Vector>,
        kind: KPointKind,
        labels: Vec<(usize, String)>,
        mesh_width: Option<f64>,
    ) -> Self {
        KPointSet {
            dim,
            points,
            kind,
            labels,
            mesh_width,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn kind(&self) -> &KPointKind {
        &self.kind
    }

    pub fn labels(&self) -> &[(usize, String)] {
        &self.labels
    }

    /// Grid spacing `Δ` for uniform grids; the step of a uniformly spaced path.
    pub fn mesh_width(&self) -> Option<f64> {
        self.mesh_width
    }

    pub fn is_uniform_grid(&self) -> bool {
        matches!(self.kind, KPointKind::UniformGrid { .. })
    }
}

pub(crate) fn dot(a: &Vector, b: &Vector) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &Vector) -> f64 {
    sqrt(dot(a, a))
}

pub(crate) fn distance(a: &Vector, b: &Vector) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    norm(&d)
}

fn cross(a: &Vector, b: &Vector) -> Vector {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn det3(m: &[Vector; 3]) -> f64 {
    dot(&m[0], &cross(&m[1], &m[2]))
}
