//! Run configuration: a JSON file merged with command-line overrides.
//!
//! Every field is optional in the file. Flags win over file values, and the
//! fully resolved configuration is written next to the outputs as
//! `resolved_config.json`, which re-runs to identical results.

use std::path::{Path, PathBuf};

use bandlab_core::{BlowupFunction, BlowupSpec, FourierPotential, Lattice, PowerLawSynth, Scheme, SchemeTag};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::formats::{read_json, LatticeFile, PotentialFile};

/// Either an explicit `{dim, primitive}` lattice or a named preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LatticeSpec {
    Explicit(LatticeFile),
    Preset {
        /// `chain`, `square`, `hexagonal`, `cubic` or `fcc`.
        preset: String,
        a: f64,
    },
}

impl LatticeSpec {
    pub fn build(&self) -> Result<Lattice, CliError> {
        match self {
            LatticeSpec::Explicit(f) => f.to_lattice(),
            LatticeSpec::Preset { preset, a } => {
                check_finite("lattice.a", *a)?;
                let lat = match preset.as_str() {
                    "chain" => Lattice::chain(*a),
                    "square" => Lattice::from_vectors(&[[*a, 0.0], [0.0, *a]]),
                    "hexagonal" => Lattice::hexagonal(*a),
                    "cubic" => Lattice::cubic(*a),
                    "fcc" => Lattice::fcc(*a),
                    other => {
                        return Err(CliError::validation(format!(
                            "unknown lattice preset {other:?} (chain, square, hexagonal, cubic, fcc)"
                        )))
                    }
                };
                Ok(lat?)
            }
        }
    }
}

/// Where the potential comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSource {
    Zero,
    /// `V(x) = Σᵢ 2A cos(bᵢ·x)`.
    Cosine { amplitude: f64 },
    /// Random phases, `|V̂(G)| = A |G|^{−t}` for shells up to `gmax`.
    Synth {
        t: f64,
        gmax: u32,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// A potential file; its lattice is used.
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupConfig {
    #[serde(default)]
    pub m: Option<u32>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default, rename = "C")]
    pub c: Option<f64>,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub msmooth: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathNode {
    pub label: String,
    /// Fractional coordinates in the reciprocal basis.
    pub frac: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub nodes: Vec<PathNode>,
    /// Steps per segment.
    pub samples: usize,
}

impl PathConfig {
    /// Parses `G=0,0;M=0.5,0;K=0.333,0.333@40` (steps per segment after `@`).
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let (nodes_text, samples) = match text.rsplit_once('@') {
            Some((n, s)) => (
                n,
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::validation(format!("--path: bad sample count {s:?}")))?,
            ),
            None => (text, 50),
        };
        let mut nodes = Vec::new();
        for part in nodes_text.split(';').filter(|p| !p.trim().is_empty()) {
            let (label, coords) = part
                .split_once('=')
                .ok_or_else(|| CliError::validation(format!("--path: expected LABEL=f1,f2,… in {part:?}")))?;
            let frac = parse_list(coords, "--path")?;
            nodes.push(PathNode {
                label: label.trim().to_string(),
                frac,
            });
        }
        Ok(PathConfig { nodes, samples })
    }
}

fn path_either<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<PathConfig>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Either {
        Text(String),
        Full(PathConfig),
    }
    match Option::<Either>::deserialize(d)? {
        None => Ok(None),
        Some(Either::Full(p)) => Ok(Some(p)),
        Some(Either::Text(t)) => PathConfig::parse(&t).map(Some).map_err(serde::de::Error::custom),
    }
}

/// Lattice-parameter scan: the configured lattice is scaled by each factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub scale_min: f64,
    pub scale_max: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup: Option<BlowupConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ec: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ec_ladder: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_ec: Option<f64>,
    /// Either `{nodes, samples}` or the `--path` text form.
    #[serde(default, skip_serializing_if = "Option::is_none", deserialize_with = "path_either")]
    pub path: Option<PathConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbands: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub electrons: Option<f64>,
    /// Band studied by `converge` and `regularity` (numbered from 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<usize>,
    /// Fractional k-points for pointwise convergence errors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kpoints: Option<Vec<Vec<f64>>>,
    /// `pointwise` or `fermi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<String>,
    /// Sobolev order used for the predicted convergence rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_potential: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    /// Number of k samples for `periodicity`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Number of chemical potentials in the `dos` sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dos_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<CellConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

/// Values given on the command line; each one replaces the config field.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub ec: Option<f64>,
    pub ec_ladder: Option<Vec<f64>>,
    pub scheme: Option<String>,
    pub blowup_m: Option<u32>,
    pub blowup_p: Option<f64>,
    pub blowup_c: Option<f64>,
    pub blowup_a: Option<f64>,
    pub nbands: Option<usize>,
    pub grid: Option<usize>,
    pub path: Option<String>,
    pub electrons: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

pub fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::validation(format!("{what}: {s:?} is not a number")))
        })
        .collect()
}

fn check_finite(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(CliError::validation(format!("{name} must be finite")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = read_json(path)?;
        // relative potential paths are taken from the config's directory
        if let Some(PotentialSource::File { path: p }) = &mut cfg.potential {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(x) = o.ec {
            self.ec = Some(x);
        }
        if let Some(x) = &o.ec_ladder {
            self.ec_ladder = Some(x.clone());
        }
        if let Some(x) = &o.scheme {
            self.scheme = Some(x.clone());
        }
        if o.blowup_m.is_some() || o.blowup_p.is_some() || o.blowup_c.is_some() || o.blowup_a.is_some() {
            let b = self.blowup.get_or_insert_with(BlowupConfig::default);
            if let Some(m) = o.blowup_m {
                b.m = Some(m);
                // the bridge smoothness follows m unless set explicitly in the file
                if b.msmooth.is_some_and(|s| s < m) {
                    b.msmooth = Some(m);
                }
            }
            b.p = o.blowup_p.or(b.p);
            b.c = o.blowup_c.or(b.c);
            b.a = o.blowup_a.or(b.a);
        }
        if let Some(x) = o.nbands {
            self.nbands = Some(x);
        }
        if let Some(x) = o.grid {
            self.grid = Some(x);
            if o.path.is_none() {
                self.path = None;
            }
        }
        if let Some(x) = &o.path {
            self.path = Some(PathConfig::parse(x)?);
            if o.grid.is_none() {
                self.grid = None;
            }
        }
        if let Some(x) = o.electrons {
            self.electrons = Some(x);
        }
        if let Some(x) = &o.out {
            self.out = Some(x.clone());
        }
        if let Some(x) = o.seed {
            self.seed = Some(x);
        }
        if let Some(x) = o.threads {
            self.threads = Some(x);
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("bandlab-out"))
    }

    /// The lattice of the run: from the potential file when there is one,
    /// otherwise from `lattice` (default: unit chain).
    pub fn resolve_lattice(&mut self) -> Result<Lattice, CliError> {
        let from_file = match &self.potential {
            Some(PotentialSource::File { path }) => {
                let f: PotentialFile = read_json(path)?;
                Some(f.lattice.to_lattice()?)
            }
            _ => None,
        };
        let configured = match &self.lattice {
            Some(spec) => Some(spec.build()?),
            None => None,
        };
        let lat = match (from_file, configured) {
            (Some(a), Some(b)) => {
                if a != b {
                    return Err(CliError::Core(bandlab_core::Error::LatticeMismatch));
                }
                a
            }
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => Lattice::chain(1.0)?,
        };
        self.lattice = Some(LatticeSpec::Explicit(LatticeFile::from_lattice(&lat)));
        Ok(lat)
    }

    pub fn resolve_potential(&mut self, lat: &Lattice) -> Result<FourierPotential, CliError> {
        let seed = self.seed;
        let src = self.potential.get_or_insert(PotentialSource::Zero);
        let v = match src {
            PotentialSource::Zero => FourierPotential::zero(lat),
            PotentialSource::Cosine { amplitude } => {
                check_finite("potential.amplitude", *amplitude)?;
                FourierPotential::cosine(lat, *amplitude)?
            }
            PotentialSource::Synth {
                t,
                gmax,
                seed: s,
                amplitude,
            } => {
                check_finite("potential.t", *t)?;
                check_finite("potential.amplitude", *amplitude)?;
                if seed.is_some() {
                    *s = seed;
                }
                let s = s.get_or_insert(0);
                PowerLawSynth::new(*t, *gmax, *s).with_amplitude(*amplitude).build(lat)?
            }
            PotentialSource::File { path } => {
                let f: PotentialFile = read_json(path)?;
                f.to_potential()?
            }
        };
        Ok(v)
    }

    /// The Sobolev order of the potential: `t − d/2` for synthetic ones,
    /// infinite for trigonometric polynomials, unless set explicitly.
    pub fn potential_regularity(&self, lat: &Lattice) -> f64 {
        if let Some(r) = self.r_potential {
            return r;
        }
        match &self.potential {
            Some(PotentialSource::Synth { t, .. }) => t - lat.dim() as f64 / 2.0,
            _ => f64::INFINITY,
        }
    }

    pub fn resolve_scheme(&mut self) -> Result<Scheme, CliError> {
        let name = self.scheme.get_or_insert_with(|| "kdep".into()).clone();
        let tag = SchemeTag::from_name(&name).ok_or_else(|| {
            CliError::validation(format!("unknown scheme {name:?} (uniform, kdep, modified)"))
        })?;
        Ok(match tag {
            SchemeTag::UniformGalerkin => Scheme::Uniform,
            SchemeTag::KDependentGalerkin => Scheme::KDependent,
            SchemeTag::Modified => Scheme::Modified(BlowupFunction::build(self.resolve_blowup()?)?),
        })
    }

    /// Blow-up spec with defaults `m = 1`, `p = m + ½`, `a = 0.75`,
    /// `msmooth = m` and the smallest passing `C ∈ {1, 2, 4, …}`.
    pub fn resolve_blowup(&mut self) -> Result<BlowupSpec, CliError> {
        let b = self.blowup.get_or_insert_with(BlowupConfig::default);
        let m = *b.m.get_or_insert(1);
        let p = *b.p.get_or_insert(m as f64 + 0.5);
        let a = *b.a.get_or_insert(0.75);
        let msmooth = *b.msmooth.get_or_insert(m);
        check_finite("blowup.p", p)?;
        check_finite("blowup.a", a)?;
        let spec = match b.c {
            Some(c) => {
                check_finite("blowup.C", c)?;
                BlowupSpec::new(m, p, c, a).with_msmooth(msmooth)
            }
            None => BlowupSpec::with_default_c(m, p, a, msmooth)?,
        };
        b.c = Some(spec.c);
        Ok(spec)
    }

    pub fn require_ec(&self) -> Result<f64, CliError> {
        let ec = self
            .ec
            .ok_or_else(|| CliError::validation("a cutoff is required (--ec or \"ec\")"))?;
        if !(ec.is_finite() && ec > 0.0) {
            return Err(CliError::validation("the cutoff must be positive and finite"));
        }
        Ok(ec)
    }

    pub fn require_electrons(&self) -> Result<f64, CliError> {
        let n = self
            .electrons
            .ok_or_else(|| CliError::validation("an electron count is required (--electrons)"))?;
        if !(n.is_finite() && n > 0.0) {
            return Err(CliError::validation("--electrons must be positive and finite"));
        }
        Ok(n)
    }

    pub fn require_grid(&self) -> Result<usize, CliError> {
        if self.path.is_some() {
            return Err(CliError::validation("this command integrates over the zone: use --grid, not --path"));
        }
        match self.grid {
            Some(n) if n > 0 => Ok(n),
            Some(_) => Err(CliError::validation("--grid must be positive")),
            None => Err(CliError::validation("a k-point grid is required (--grid)")),
        }
    }

    pub fn nbands_or(&mut self, default: usize) -> Result<usize, CliError> {
        let n = *self.nbands.get_or_insert(default);
        if n == 0 {
            return Err(CliError::validation("--nbands must be at least 1"));
        }
        Ok(n)
    }
}

/// Loads `--config` (if any) and applies flag overrides.
pub fn assemble(config: Option<&Path>, o: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(o)?;
    Ok(cfg)
}

/// The cell-scan potential family: configured coefficients on the scaled lattice.
pub fn scaled_family(
    v: &FourierPotential,
) -> impl Fn(f64) -> bandlab_core::Result<FourierPotential> + Sync + '_ {
    move |s: f64| v.with_lattice(&v.lattice().scaled(s)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_flag() {
        let p = PathConfig::parse("G=0,0;M=0.5,0;K=0.3333,0.3333@40").unwrap();
        assert_eq!(p.nodes.len(), 3);
        assert_eq!(p.samples, 40);
        assert_eq!(p.nodes[1].frac, vec![0.5, 0.0]);
        assert_eq!(PathConfig::parse("A=-0.5;B=0.5").unwrap().samples, 50);
        assert!(PathConfig::parse("A:0").is_err());
        assert!(PathConfig::parse("A=x").is_err());
    }

    #[test]
    fn flags_win() {
        let text = r#"{"ec": 10.0, "scheme": "uniform", "grid": 8, "blowup": {"m": 2, "p": 2.5}}"#;
        let mut cfg: RunConfig = serde_json::from_str(text).unwrap();
        let o = Overrides {
            ec: Some(20.0),
            path: Some("A=0;B=0.5@4".into()),
            blowup_p: Some(3.5),
            ..Default::default()
        };
        cfg.apply(&o).unwrap();
        assert_eq!(cfg.ec, Some(20.0));
        assert_eq!(cfg.grid, None);
        assert_eq!(cfg.scheme.as_deref(), Some("uniform"));
        assert_eq!(cfg.blowup.unwrap().p, Some(3.5));
        assert_eq!(cfg.blowup.unwrap().m, Some(2));
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"ecut": 3}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"potential": {"kind": "wavy"}}"#).is_err());
    }

    #[test]
    fn lattice_forms() {
        let explicit: LatticeSpec = serde_json::from_str(r#"{"dim": 1, "primitive": [2.0]}"#).unwrap();
        assert_eq!(explicit.build().unwrap(), Lattice::chain(2.0).unwrap());
        let preset: LatticeSpec = serde_json::from_str(r#"{"preset": "hexagonal", "a": 1.0}"#).unwrap();
        assert_eq!(preset.build().unwrap().dim(), 2);
        let bad: LatticeSpec = serde_json::from_str(r#"{"preset": "kagome", "a": 1.0}"#).unwrap();
        assert!(bad.build().is_err());
    }

    #[test]
    fn blowup_defaults_are_recorded() {
        let mut cfg = RunConfig {
            scheme: Some("modified".into()),
            ..Default::default()
        };
        let s = cfg.resolve_scheme().unwrap();
        assert_eq!(s.tag(), SchemeTag::Modified);
        let b = cfg.blowup.unwrap();
        assert_eq!((b.m, b.p, b.c, b.a, b.msmooth), (Some(1), Some(1.5), Some(1.0), Some(0.75), Some(1)));
    }

    #[test]
    fn seed_flag_reaches_synth() {
        let mut cfg: RunConfig =
            serde_json::from_str(r#"{"potential": {"kind": "synth", "t": 1.5, "gmax": 4}}"#).unwrap();
        cfg.seed = Some(9);
        let lat = cfg.resolve_lattice().unwrap();
        cfg.resolve_potential(&lat).unwrap();
        match cfg.potential.unwrap() {
            PotentialSource::Synth { seed, .. } => assert_eq!(seed, Some(9)),
            other => panic!("{other:?}"),
        }
    }
}
