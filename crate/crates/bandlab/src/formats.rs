//! JSON and CSV file formats.

use std::io::Write;
use std::path::Path;

use bandlab_core::fiber::FiberMatrix;
use bandlab_core::{
    BandStructure, BlowupSpec, Complex64, FourierPotential, GIndex, KPointKind, KPointSet, Lattice,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// `{ "dim": d, "primitive": [row-major d×d, columns are the aᵢ] }`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeFile {
    pub dim: usize,
    pub primitive: Vec<f64>,
}

impl LatticeFile {
    pub fn from_lattice(lat: &Lattice) -> Self {
        LatticeFile {
            dim: lat.dim(),
            primitive: lat.to_row_major(),
        }
    }

    pub fn to_lattice(&self) -> Result<Lattice, CliError> {
        Ok(Lattice::from_row_major(self.dim, &self.primitive)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffEntry {
    pub g: Vec<i32>,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialFile {
    pub lattice: LatticeFile,
    pub real_valued: bool,
    pub coeffs: Vec<CoeffEntry>,
}

impl PotentialFile {
    pub fn from_potential(v: &FourierPotential) -> Self {
        let d = v.lattice().dim();
        PotentialFile {
            lattice: LatticeFile::from_lattice(v.lattice()),
            real_valued: v.is_real_valued(),
            coeffs: v
                .coeffs()
                .iter()
                .map(|(g, c)| CoeffEntry {
                    g: g.coords(d).to_vec(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }

    pub fn to_potential(&self) -> Result<FourierPotential, CliError> {
        let lat = self.lattice.to_lattice()?;
        let mut entries = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            if c.g.len() != lat.dim() {
                return Err(CliError::validation(format!(
                    "coefficient index {:?} has {} components, lattice dimension is {}",
                    c.g,
                    c.g.len(),
                    lat.dim()
                )));
            }
            entries.push((GIndex::new(&c.g)?, Complex64::new(c.re, c.im)));
        }
        Ok(FourierPotential::from_coeffs(&lat, entries, self.real_valued)?)
    }
}

/// `{ "m": int, "p": float, "C": float, "a": float, "msmooth": int }`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupFile {
    pub m: u32,
    pub p: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub a: f64,
    pub msmooth: u32,
}

impl From<&BlowupSpec> for BlowupFile {
    fn from(s: &BlowupSpec) -> Self {
        BlowupFile {
            m: s.m,
            p: s.p,
            c: s.c,
            a: s.a,
            msmooth: s.msmooth,
        }
    }
}

impl BlowupFile {
    pub fn to_spec(&self) -> BlowupSpec {
        BlowupSpec::new(self.m, self.p, self.c, self.a).with_msmooth(self.msmooth)
    }
}

/// A k-point set with fractional coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KPointFile {
    pub dim: usize,
    /// `"path"` or `"grid"`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_per_dim: Option<usize>,
    #[serde(default)]
    pub labels: Vec<(usize, String)>,
    pub mesh_width: Option<f64>,
    pub points_frac: Vec<Vec<f64>>,
}

impl KPointFile {
    pub fn from_kset(lat: &Lattice, ks: &KPointSet) -> Self {
        let (kind, n_per_dim) = match ks.kind() {
            KPointKind::Path => ("path", None),
            KPointKind::UniformGrid { n_per_dim } => ("grid", Some(*n_per_dim)),
        };
        KPointFile {
            dim: ks.dim(),
            kind: kind.into(),
            n_per_dim,
            labels: ks.labels().to_vec(),
            mesh_width: ks.mesh_width(),
            points_frac: ks
                .points()
                .iter()
                .map(|k| lat.cart_to_frac(k)[..ks.dim()].to_vec())
                .collect(),
        }
    }

    pub fn to_kset(&self, lat: &Lattice) -> Result<KPointSet, CliError> {
        if self.dim != lat.dim() {
            return Err(CliError::validation(format!(
                "k-point file has dimension {}, lattice has {}",
                self.dim,
                lat.dim()
            )));
        }
        let kind = match (self.kind.as_str(), self.n_per_dim) {
            ("path", _) => KPointKind::Path,
            ("grid", Some(n)) => KPointKind::UniformGrid { n_per_dim: n },
            _ => return Err(CliError::validation("k-point kind must be \"path\" or \"grid\" with n_per_dim")),
        };
        let mut points = Vec::with_capacity(self.points_frac.len());
        for f in &self.points_frac {
            if f.len() != self.dim {
                return Err(CliError::validation("k-point with wrong number of coordinates"));
            }
            points.push(lat.frac_to_cart(f));
        }
        Ok(KPointSet::from_parts(self.dim, points, kind, self.labels.clone(), self.mesh_width))
    }
}

/// Basis list plus row-major matrix entries of one fiber.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub k: Vec<f64>,
    pub ec: f64,
    pub scheme: String,
    pub basis: Vec<Vec<i32>>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixDump {
    pub fn from_fiber(f: &FiberMatrix, dim: usize) -> Self {
        let entries = f.matrix().as_slice();
        MatrixDump {
            k: f.k()[..dim].to_vec(),
            ec: f.ec(),
            scheme: f.tag().name().into(),
            basis: f.basis().iter().map(|g| g.coords(dim).to_vec()).collect(),
            re: entries.iter().map(|c| c.re).collect(),
            im: entries.iter().map(|c| c.im).collect(),
        }
    }
}

/// 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::output)?;
    text.push('\n');
    std::fs::write(path, text).map_err(CliError::output)
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(CliError::output)
}

/// Band structure CSV: `k_frac_1..k_frac_d, band_1..band_n`.
pub fn write_bands_csv<W: Write>(out: W, lat: &Lattice, bands: &BandStructure) -> Result<(), CliError> {
    let d = lat.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=d).map(|i| format!("k_frac_{i}")).collect();
    header.extend((1..=bands.n_bands()).map(|n| format!("band_{n}")));
    w.write_record(&header).map_err(CliError::output)?;
    for (i, k) in bands.kset().points().iter().enumerate() {
        let f = lat.cart_to_frac(k);
        let mut row: Vec<String> = f[..d].iter().map(|x| fmt17(*x)).collect();
        row.extend(bands.row(i).iter().map(|e| fmt17(*e)));
        w.write_record(&row).map_err(CliError::output)?;
    }
    w.flush().map_err(CliError::output)
}

/// Contents of a band structure CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct BandsTable {
    pub dim: usize,
    pub k_frac: Vec<Vec<f64>>,
    pub energies: Vec<Vec<f64>>,
}

pub fn read_bands_csv(path: &Path) -> Result<BandsTable, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::validation(e.to_string()))?;
    let header = r.headers().map_err(|e| CliError::validation(e.to_string()))?.clone();
    let d = header.iter().filter(|h| h.starts_with("k_frac_")).count();
    let mut ks = Vec::new();
    let mut es = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::validation(e.to_string()))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| CliError::validation(e.to_string())))
            .collect::<Result<_, _>>()?;
        ks.push(vals[..d].to_vec());
        es.push(vals[d..].to_vec());
    }
    Ok(BandsTable {
        dim: d,
        k_frac: ks,
        energies: es,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use bandlab_core::{PowerLawSynth, Scheme, Serial};

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.0, 1.0 / 3.0, -2.5e-300, std::f64::consts::PI * 1e12] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn potential_round_trip() {
        let lat = Lattice::hexagonal(1.3).unwrap();
        let v = PowerLawSynth::new(1.7, 3, 5).build(&lat).unwrap();
        let file = PotentialFile::from_potential(&v);
        let text = serde_json::to_string(&file).unwrap();
        let back: PotentialFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_potential().unwrap(), v);
    }

    #[test]
    fn potential_file_validation() {
        let text = r#"{"lattice":{"dim":1,"primitive":[1.0]},"real_valued":true,
            "coeffs":[{"g":[1],"re":0.5,"im":0.1}]}"#;
        let f: PotentialFile = serde_json::from_str(text).unwrap();
        assert!(f.to_potential().is_err()); // missing conjugate partner
        let text = r#"{"lattice":{"dim":1,"primitive":[1.0]},"real_valued":true,
            "coeffs":[{"g":[1,0],"re":0.5,"im":0.0}]}"#;
        let f: PotentialFile = serde_json::from_str(text).unwrap();
        assert!(f.to_potential().is_err());
    }

    #[test]
    fn blowup_file_uses_capital_c() {
        let f: BlowupFile = serde_json::from_str(r#"{"m":1,"p":1.5,"C":2.0,"a":0.75,"msmooth":1}"#).unwrap();
        assert_eq!(f.to_spec().c, 2.0);
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.contains("\"C\":2.0"));
    }

    #[test]
    fn kpoints_round_trip() {
        let lat = Lattice::hexagonal(1.0).unwrap();
        let ks = lat.uniform_grid(3).unwrap();
        let file = KPointFile::from_kset(&lat, &ks);
        assert!(file.points_frac[0].iter().all(|x| (x + 1.0 / 3.0).abs() < 1e-15));
        let back = file.to_kset(&lat).unwrap();
        assert_eq!(back.len(), ks.len());
        for (a, b) in back.points().iter().zip(ks.points()) {
            for i in 0..2 {
                assert!((a[i] - b[i]).abs() < 1e-14);
            }
        }
        assert!(back.is_uniform_grid());
    }

    #[test]
    fn bands_csv_layout() {
        let lat = Lattice::chain(1.0).unwrap();
        let v = FourierPotential::zero(&lat);
        let ks = lat.uniform_grid(4).unwrap();
        let b = bandlab_core::spectra::compute_bands(&v, &ks, 50.0, &Scheme::KDependent, 2, &Serial).unwrap();
        let mut buf = Vec::new();
        write_bands_csv(&mut buf, &lat, &b).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "k_frac_1,band_1,band_2");
        assert_eq!(lines.count(), 4);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bands.csv");
        std::fs::write(&path, &text).unwrap();
        let table = read_bands_csv(&path).unwrap();
        assert_eq!(table.dim, 1);
        assert_eq!(table.k_frac[0], vec![-0.375]);
        for (i, row) in table.energies.iter().enumerate() {
            assert_eq!(row.as_slice(), b.row(i));
        }
    }
}
