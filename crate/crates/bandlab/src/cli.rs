//! The `bandlab` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use bandlab_core::analysis::{self, ErrorMeasure, ProbeLine, Reference};
use bandlab_core::fiber::assemble;
use bandlab_core::observables::{fermi_level, idoe, idos};
use bandlab_core::spectra::compute_bands;
use bandlab_core::{
    BlowupFunction, BlowupSpec, FourierPotential, GIndex, KPointSet, Lattice, PowerLawSynth, Scheme, SchemeTag,
    Vector,
};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::{self, CellConfig, Overrides, PathConfig, PotentialSource, RunConfig};
use crate::error::CliError;
use crate::formats::{self, csv_writer, fmt17, write_json, BlowupFile, KPointFile, MatrixDump, PotentialFile};
use crate::parallel::RayonExecutor;

#[derive(Parser, Debug)]
#[command(name = "bandlab", version, about = "Plane-wave band structures with blow-up modified kinetic energies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Kinetic energy cutoff.
    #[arg(long)]
    ec: Option<f64>,
    /// Comma-separated ascending cutoffs.
    #[arg(long = "ec-ladder", value_name = "LIST")]
    ec_ladder: Option<String>,
    #[arg(long, value_parser = ["uniform", "kdep", "modified"])]
    scheme: Option<String>,
    #[arg(long = "blowup-m")]
    blowup_m: Option<u32>,
    #[arg(long = "blowup-p")]
    blowup_p: Option<f64>,
    #[arg(long = "blowup-c")]
    blowup_c: Option<f64>,
    #[arg(long = "blowup-a")]
    blowup_a: Option<f64>,
    #[arg(long)]
    nbands: Option<usize>,
    /// Points per reciprocal direction of a uniform grid.
    #[arg(long)]
    grid: Option<usize>,
    /// Path through fractional nodes, e.g. `G=0,0;M=0.5,0@40`.
    #[arg(long)]
    path: Option<String>,
    #[arg(long)]
    electrons: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Energy bands along a path or on a grid.
    Bands {
        #[command(flatten)]
        common: Common,
        /// Also write the fiber matrix at the first k-point.
        #[arg(long = "dump-matrix")]
        dump_matrix: bool,
    },
    /// Integrated density of states and energy over a chemical potential sweep.
    Dos {
        #[command(flatten)]
        common: Common,
    },
    /// Fermi level for a given electron count.
    Fermi {
        #[command(flatten)]
        common: Common,
    },
    /// Band error against a large-cutoff reference along a cutoff ladder.
    Converge {
        #[command(flatten)]
        common: Common,
    },
    /// Smoothness of a modified band across basis changes.
    Regularity {
        #[command(flatten)]
        common: Common,
    },
    /// Band differences between k and k + G for every scheme.
    Periodicity {
        #[command(flatten)]
        common: Common,
    },
    /// Band energy per unit volume against the lattice parameter.
    Cellscan {
        #[command(flatten)]
        common: Common,
    },
    /// Potential files.
    Potential {
        #[command(subcommand)]
        action: PotentialAction,
    },
    /// Blow-up functions.
    Blowup {
        #[command(subcommand)]
        action: BlowupAction,
    },
}

#[derive(Subcommand, Debug)]
enum PotentialAction {
    /// Random-phase potential with power-law Fourier decay.
    Synth {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        gmax: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Configuration supplying the lattice (default: unit chain).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file, or directory for `potential.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum BlowupAction {
    /// Builds and validates a blow-up function.
    Check {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = 0.75)]
        a: f64,
        #[arg(long)]
        msmooth: Option<u32>,
        /// Output file, or directory for `blowup.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(e) => {
            eprintln!("bandlab: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<String, CliError> {
    match cmd {
        Command::Bands { common, dump_matrix } => Session::open(&common)?.bands(dump_matrix),
        Command::Dos { common } => Session::open(&common)?.dos(),
        Command::Fermi { common } => Session::open(&common)?.fermi(),
        Command::Converge { common } => Session::open(&common)?.converge(),
        Command::Regularity { common } => Session::open(&common)?.regularity(),
        Command::Periodicity { common } => Session::open(&common)?.periodicity(),
        Command::Cellscan { common } => Session::open_cellscan(&common)?.cellscan(),
        Command::Potential {
            action:
                PotentialAction::Synth {
                    t,
                    gmax,
                    seed,
                    amplitude,
                    config,
                    out,
                },
        } => potential_synth(t, gmax, seed, amplitude, config.as_deref(), out),
        Command::Blowup {
            action: BlowupAction::Check { m, p, c, a, msmooth, out },
        } => blowup_check(m, p, c, a, msmooth, out),
    }
}

fn overrides(c: &Common) -> Result<Overrides, CliError> {
    Ok(Overrides {
        ec: c.ec,
        ec_ladder: c.ec_ladder.as_deref().map(|s| config::parse_list(s, "--ec-ladder")).transpose()?,
        scheme: c.scheme.clone(),
        blowup_m: c.blowup_m,
        blowup_p: c.blowup_p,
        blowup_c: c.blowup_c,
        blowup_a: c.blowup_a,
        nbands: c.nbands,
        grid: c.grid,
        path: c.path.clone(),
        electrons: c.electrons,
        out: c.out.clone(),
        seed: c.seed,
        threads: c.threads,
    })
}

/// A resolved configuration with its lattice, potential and executor.
struct Session {
    cfg: RunConfig,
    lat: Lattice,
    v: FourierPotential,
    exec: RayonExecutor,
    out: PathBuf,
}

impl Session {
    fn open(common: &Common) -> Result<Self, CliError> {
        let cfg = config::assemble(common.config.as_deref(), &overrides(common)?)?;
        Self::from_config(cfg)
    }

    /// Without a lattice or potential, cell scans default to a synthetic
    /// hexagonal system.
    fn open_cellscan(common: &Common) -> Result<Self, CliError> {
        let mut cfg = config::assemble(common.config.as_deref(), &overrides(common)?)?;
        if cfg.lattice.is_none() && cfg.potential.is_none() {
            cfg.lattice = Some(config::LatticeSpec::Preset {
                preset: "hexagonal".into(),
                a: 1.0,
            });
            cfg.potential = Some(PotentialSource::Synth {
                t: 2.0,
                gmax: 2,
                seed: Some(11),
                amplitude: 3.0 * (2.0 * std::f64::consts::PI).powi(2),
            });
        }
        Self::from_config(cfg)
    }

    fn from_config(mut cfg: RunConfig) -> Result<Self, CliError> {
        let lat = cfg.resolve_lattice()?;
        let v = cfg.resolve_potential(&lat)?;
        if cfg.threads == Some(0) {
            return Err(CliError::validation("--threads must be at least 1"));
        }
        let exec = RayonExecutor::new(cfg.threads).map_err(|e| CliError::validation(e.to_string()))?;
        let out = cfg.out_dir();
        cfg.out = Some(out.clone());
        Ok(Session { cfg, lat, v, exec, out })
    }

    fn prepare_out(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out).map_err(CliError::output)
    }

    fn file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Writes the summary and the resolved configuration.
    fn finish(&self, name: &str, mut summary: Value) -> Result<(), CliError> {
        summary["lattice_digest"] = json!(bandlab_core::digest::lattice_digest(&self.lat));
        summary["potential_digest"] = json!(bandlab_core::digest::potential_digest(&self.v));
        write_json(&self.file(name), &summary)?;
        write_json(&self.file("resolved_config.json"), &self.cfg)
    }

    fn kset(&mut self) -> Result<KPointSet, CliError> {
        if self.cfg.path.is_some() && self.cfg.grid.is_some() {
            return Err(CliError::validation("give either a path or a grid, not both"));
        }
        if let Some(n) = self.cfg.grid {
            if n == 0 {
                return Err(CliError::validation("--grid must be positive"));
            }
            return Ok(self.lat.uniform_grid(n)?);
        }
        let d = self.lat.dim();
        let path = self.cfg.path.get_or_insert_with(|| {
            let mut lo = vec![0.0; d];
            let mut hi = vec![0.0; d];
            lo[0] = -0.5;
            hi[0] = 0.5;
            PathConfig {
                nodes: vec![
                    config::PathNode { label: "-X".into(), frac: lo },
                    config::PathNode { label: "X".into(), frac: hi },
                ],
                samples: 100,
            }
        });
        let mut nodes: Vec<(String, Vector)> = Vec::with_capacity(path.nodes.len());
        for n in &path.nodes {
            if n.frac.len() != d {
                return Err(CliError::validation(format!(
                    "path node {} has {} coordinates, lattice dimension is {d}",
                    n.label,
                    n.frac.len()
                )));
            }
            nodes.push((n.label.clone(), self.lat.frac_to_cart(&n.frac)));
        }
        Ok(self.lat.kpath(&nodes, path.samples)?)
    }

    /// Configured band count, or `min(default, smallest basis on the k-set)`.
    fn nbands(&mut self, ks: &KPointSet, ec: f64, default: usize) -> Result<usize, CliError> {
        if self.cfg.nbands.is_none() {
            let (lo, _) = self.lat.basis_cardinality_bounds(ec, ks)?;
            self.cfg.nbands = Some(default.min(lo).max(1));
        }
        self.cfg.nbands_or(1)
    }

    fn bands(mut self, dump_matrix: bool) -> Result<String, CliError> {
        let ec = self.cfg.require_ec()?;
        let scheme = self.cfg.resolve_scheme()?;
        let ks = self.kset()?;
        let nb = self.nbands(&ks, ec, 4)?;
        let bands = compute_bands(&self.v, &ks, ec, &scheme, nb, &self.exec)?;
        self.prepare_out()?;
        let f = std::fs::File::create(self.file("bands.csv")).map_err(CliError::output)?;
        formats::write_bands_csv(std::io::BufWriter::new(f), &self.lat, &bands)?;
        write_json(&self.file("kpoints.json"), &KPointFile::from_kset(&self.lat, &ks))?;
        if dump_matrix {
            let fiber = assemble(&self.v, &ks.points()[0], ec, &scheme)?;
            write_json(&self.file("matrix.json"), &MatrixDump::from_fiber(&fiber, self.lat.dim()))?;
        }
        let summary = json!({
            "command": "bands",
            "scheme": scheme.name(),
            "blowup": scheme.blowup().map(|g| BlowupFile::from(g.spec())),
            "ec": ec,
            "n_bands": nb,
            "n_kpoints": ks.len(),
            "min_energy": bands.min_energy(),
            "max_energy": bands.max_energy(),
        });
        self.finish("summary.json", summary)?;
        Ok(format!(
            "bands: {} k-points x {} bands ({}, Ec={}) -> {}",
            ks.len(),
            nb,
            scheme.name(),
            ec,
            self.file("bands.csv").display()
        ))
    }

    fn dos(mut self) -> Result<String, CliError> {
        let ec = self.cfg.require_ec()?;
        let scheme = self.cfg.resolve_scheme()?;
        self.cfg.require_grid()?;
        let ks = self.kset()?;
        let default = self.cfg.electrons.map(|n| n.ceil() as usize + 1).unwrap_or(4);
        let nb = self.nbands(&ks, ec, default)?;
        let points = *self.cfg.dos_points.get_or_insert(201);
        if points < 2 {
            return Err(CliError::validation("dos_points must be at least 2"));
        }
        let bands = compute_bands(&self.v, &ks, ec, &scheme, nb, &self.exec)?;
        let (lo, hi) = (bands.min_energy() - 1.0, bands.max_energy() + 1.0);
        self.prepare_out()?;
        let mut w = csv_writer(&self.file("dos.csv"))?;
        w.write_record(["mu", "idos", "idoe", "truncation_warning"]).map_err(CliError::output)?;
        let mut first_truncated = None;
        for mu in analysis::linspace(lo, hi, points) {
            let n = idos(&bands, mu)?;
            let e = idoe(&bands, mu)?;
            if n.truncation_warning && first_truncated.is_none() {
                first_truncated = Some(mu);
            }
            w.write_record([fmt17(mu), fmt17(n.value), fmt17(e.value), n.truncation_warning.to_string()])
                .map_err(CliError::output)?;
        }
        w.flush().map_err(CliError::output)?;
        let summary = json!({
            "command": "dos",
            "scheme": scheme.name(),
            "ec": ec,
            "grid": self.cfg.grid,
            "n_bands": nb,
            "mu_range": [lo, hi],
            "points": points,
            "truncation_from_mu": first_truncated,
        });
        self.finish("dos.json", summary)?;
        Ok(format!(
            "dos: {points} chemical potentials on [{lo:.6}, {hi:.6}] -> {}",
            self.file("dos.csv").display()
        ))
    }

    fn fermi(mut self) -> Result<String, CliError> {
        let ec = self.cfg.require_ec()?;
        let scheme = self.cfg.resolve_scheme()?;
        let n = self.cfg.require_electrons()?;
        self.cfg.require_grid()?;
        let ks = self.kset()?;
        let nb = self.nbands(&ks, ec, n.ceil() as usize + 1)?;
        let bands = compute_bands(&self.v, &ks, ec, &scheme, nb, &self.exec)?;
        let f = fermi_level(&bands, n)?;
        let energy = idoe(&bands, f.mu)?;
        self.prepare_out()?;
        let mut w = csv_writer(&self.file("fermi.csv"))?;
        w.write_record(["electrons", "mu_f", "bracket_lo", "bracket_hi", "gap_lower", "gap_upper", "idoe"])
            .map_err(CliError::output)?;
        let opt = |x: Option<f64>| x.map(fmt17).unwrap_or_default();
        w.write_record([
            fmt17(n),
            fmt17(f.mu),
            fmt17(f.bracket.0),
            fmt17(f.bracket.1),
            opt(f.gap.map(|g| g.lower)),
            opt(f.gap.map(|g| g.upper)),
            fmt17(energy.value),
        ])
        .map_err(CliError::output)?;
        w.flush().map_err(CliError::output)?;
        let summary = json!({
            "command": "fermi",
            "scheme": scheme.name(),
            "ec": ec,
            "grid": self.cfg.grid,
            "electrons": n,
            "n_bands": nb,
            "mu_f": f.mu,
            "bracket": [f.bracket.0, f.bracket.1],
            "gap": f.gap.map(|g| json!({"lower": g.lower, "upper": g.upper, "width": g.width()})),
            "idoe": energy.value,
            "truncation_warning": energy.truncation_warning,
        });
        self.finish("fermi.json", summary)?;
        let gap = f
            .gap
            .map(|g| format!(" gap=[{}, {}]", g.lower, g.upper))
            .unwrap_or_default();
        Ok(format!("mu_F={} bracket=[{}, {}]{gap}", f.mu, f.bracket.0, f.bracket.1))
    }

    fn converge(mut self) -> Result<String, CliError> {
        let scheme = self.cfg.resolve_scheme()?;
        let ladder = self
            .cfg
            .ec_ladder
            .clone()
            .ok_or_else(|| CliError::validation("a cutoff ladder is required (--ec-ladder)"))?;
        if ladder.iter().any(|e| !e.is_finite()) || ladder.is_empty() {
            return Err(CliError::validation("--ec-ladder must hold finite cutoffs"));
        }
        let top = ladder.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let reference_ec = *self.cfg.reference_ec.get_or_insert(16.0 * top);
        let band = *self.cfg.band.get_or_insert(1);
        let d = self.lat.dim();
        let measure_name = self
            .cfg
            .measure
            .get_or_insert_with(|| if self.cfg.grid.is_some() { "fermi" } else { "pointwise" }.into())
            .clone();
        let measure = match measure_name.as_str() {
            "pointwise" => {
                let frac = self.cfg.kpoints.get_or_insert_with(|| vec![vec![0.1; d]]).clone();
                let mut kpoints = Vec::with_capacity(frac.len());
                for f in &frac {
                    if f.len() != d {
                        return Err(CliError::validation("kpoints must have one coordinate per dimension"));
                    }
                    kpoints.push(self.lat.frac_to_cart(f));
                }
                ErrorMeasure::Pointwise { kpoints }
            }
            "fermi" => {
                let grid = self.cfg.require_grid()?;
                let n_electrons = *self.cfg.electrons.get_or_insert(1.0);
                ErrorMeasure::FermiAdjusted { grid, n_electrons }
            }
            other => return Err(CliError::validation(format!("unknown measure {other:?} (pointwise, fermi)"))),
        };
        let r = self.cfg.potential_regularity(&self.lat);
        let study = analysis::convergence_study(
            &self.v,
            band,
            &measure,
            &ladder,
            &scheme,
            &Reference::uniform(reference_ec),
            r,
            &self.exec,
        )?;
        self.prepare_out()?;
        let mut w = csv_writer(&self.file("converge.csv"))?;
        w.write_record(["ec", "error", "clamped"]).map_err(CliError::output)?;
        for i in 0..ladder.len() {
            w.write_record([fmt17(study.ec_ladder[i]), fmt17(study.errors[i]), study.clamped[i].to_string()])
                .map_err(CliError::output)?;
        }
        w.flush().map_err(CliError::output)?;
        let finite = |x: f64| if x.is_finite() { json!(x) } else { Value::Null };
        let summary = json!({
            "command": "converge",
            "scheme": scheme.name(),
            "blowup": scheme.blowup().map(|g| BlowupFile::from(g.spec())),
            "band": band,
            "measure": measure_name,
            "ec_ladder": study.ec_ladder,
            "errors": study.errors,
            "clamped": study.clamped,
            "reference_ec": reference_ec,
            "fitted_rate": study.fitted_rate,
            "full_rate": study.full_rate,
            "fit_points": study.fit_points,
            "r_potential": finite(study.r_potential),
            "predicted_rate": finite(study.predicted_rate),
            "meaningful": study.is_meaningful(),
        });
        self.finish("converge.json", summary)?;
        let flag = if study.is_meaningful() { "" } else { " (errors at precision floor)" };
        let predicted = if study.predicted_rate.is_finite() {
            format!("{:.3}", study.predicted_rate)
        } else {
            "n/a".to_string()
        };
        Ok(format!(
            "converge: fitted rate {:.3}, predicted {predicted}, over {} cutoffs{flag}",
            study.fitted_rate,
            ladder.len()
        ))
    }

    fn regularity(mut self) -> Result<String, CliError> {
        let ec = self.cfg.require_ec()?;
        let spec = self.cfg.resolve_blowup()?;
        self.cfg.scheme = Some("modified".into());
        let band = *self.cfg.band.get_or_insert(1);
        let orders = self.cfg.orders.get_or_insert_with(|| vec![1, 2]).clone();
        let deltas = self
            .cfg
            .deltas
            .get_or_insert_with(|| vec![1e-2, 5e-3, 2.5e-3, 1.25e-3])
            .clone();
        let line = ProbeLine::first_zone_axis(&self.lat);
        let mut probes = Vec::with_capacity(orders.len());
        for &o in &orders {
            probes.push(analysis::regularity_probe(&self.v, ec, &spec, band, o, &deltas, &line, &self.exec)?);
        }
        self.prepare_out()?;
        let mut w = csv_writer(&self.file("regularity.csv"))?;
        w.write_record(["order", "delta", "peak"]).map_err(CliError::output)?;
        for p in &probes {
            for (d, peak) in p.mesh_widths.iter().zip(&p.peak_magnitudes) {
                w.write_record([p.derivative_order.to_string(), fmt17(*d), fmt17(*peak)])
                    .map_err(CliError::output)?;
            }
        }
        w.flush().map_err(CliError::output)?;
        let summary = json!({
            "command": "regularity",
            "ec": ec,
            "band": band,
            "blowup": BlowupFile::from(&spec),
            "change_points": probes.first().map(|p| p.change_points.clone()),
            "probes": probes.iter().map(|p| json!({
                "order": p.derivative_order,
                "mesh_widths": p.mesh_widths,
                "peaks": p.peak_magnitudes,
                "verdict": p.verdict.name(),
            })).collect::<Vec<_>>(),
        });
        self.finish("regularity.json", summary)?;
        let verdicts: Vec<String> = probes
            .iter()
            .map(|p| format!("order {}: {}", p.derivative_order, p.verdict.name()))
            .collect();
        Ok(format!("regularity (m={}, p={}): {}", spec.m, spec.p, verdicts.join(", ")))
    }

    fn periodicity(mut self) -> Result<String, CliError> {
        let ec = self.cfg.require_ec()?;
        let spec = self.cfg.resolve_blowup()?;
        let samples = *self.cfg.samples.get_or_insert(50);
        let nb = self.cfg.nbands_or(1)?;
        if samples == 0 {
            return Err(CliError::validation("samples must be at least 1"));
        }
        let d = self.lat.dim();
        // a slanted, irrational-offset line through the zone
        let points: Vec<Vector> = (0..samples)
            .map(|i| {
                let t = (i as f64 + 0.5) / samples as f64 - 0.5;
                let frac: Vec<f64> = (0..d).map(|j| t / (j + 1) as f64 + 0.0123 * j as f64).collect();
                self.lat.frac_to_cart(&frac)
            })
            .collect();
        let ks = KPointSet::from_points(d, points);
        let mut shifts = Vec::with_capacity(2 * d);
        for i in 0..d {
            let mut g = [0i32; 3];
            g[i] = 1;
            shifts.push(GIndex(g));
            shifts.push(-GIndex(g));
        }
        let schemes = [Scheme::Uniform, Scheme::KDependent, Scheme::Modified(BlowupFunction::build(spec)?)];
        let report = analysis::periodicity_report(&self.v, ec, &schemes, &ks, &shifts, nb, &self.exec)?;
        self.prepare_out()?;
        let mut w = csv_writer(&self.file("periodicity.csv"))?;
        let mut header = vec!["scheme".to_string(), "max_violation".to_string()];
        header.extend((1..=d).map(|i| format!("worst_k_frac_{i}")));
        header.extend((1..=d).map(|i| format!("shift_{i}")));
        w.write_record(&header).map_err(CliError::output)?;
        for e in &report {
            let mut row = vec![e.scheme.name().to_string(), fmt17(e.max_violation)];
            row.extend(self.lat.cart_to_frac(&e.worst_k)[..d].iter().map(|x| fmt17(*x)));
            row.extend(e.worst_shift.coords(d).iter().map(|x| x.to_string()));
            w.write_record(&row).map_err(CliError::output)?;
        }
        w.flush().map_err(CliError::output)?;
        let periodic_ok = report
            .iter()
            .filter(|e| e.scheme != SchemeTag::UniformGalerkin)
            .all(|e| e.max_violation <= 1e-9);
        let summary = json!({
            "command": "periodicity",
            "ec": ec,
            "samples": samples,
            "n_bands": nb,
            "blowup": BlowupFile::from(&spec),
            "violations": report.iter().map(|e| json!({
                "scheme": e.scheme.name(),
                "max_violation": e.max_violation,
            })).collect::<Vec<_>>(),
            "kdep_and_modified_periodic": periodic_ok,
        });
        self.finish("periodicity.json", summary)?;
        let parts: Vec<String> = report
            .iter()
            .map(|e| format!("{} {:.3e}", e.scheme.name(), e.max_violation))
            .collect();
        Ok(format!("periodicity: {}", parts.join(", ")))
    }

    fn cellscan(mut self) -> Result<String, CliError> {
        let ec = self.cfg.require_ec()?;
        let spec = self.cfg.resolve_blowup()?;
        let n = *self.cfg.electrons.get_or_insert(1.0);
        if !(n.is_finite() && n > 0.0) {
            return Err(CliError::validation("--electrons must be positive and finite"));
        }
        let grid = *self.cfg.grid.get_or_insert(6);
        if self.cfg.path.is_some() {
            return Err(CliError::validation("cellscan integrates over the zone: use --grid, not --path"));
        }
        let cell = self
            .cfg
            .cell
            .get_or_insert(CellConfig {
                scale_min: 0.95,
                scale_max: 1.05,
                count: 50,
            })
            .clone();
        if !(cell.scale_min > 0.0 && cell.scale_max > cell.scale_min && cell.count >= 3) {
            return Err(CliError::validation("cell scan needs 0 < scale_min < scale_max and count ≥ 3"));
        }
        let scales = analysis::linspace(cell.scale_min, cell.scale_max, cell.count);
        let schemes = [Scheme::KDependent, Scheme::Modified(BlowupFunction::build(spec)?)];
        let family = config::scaled_family(&self.v);
        let scan = analysis::energy_vs_cell_parameter(&family, ec, &schemes, &scales, n, grid, &self.exec)?;
        let a0 = (0..3).map(|i| self.lat.primitive(0)[i].powi(2)).sum::<f64>().sqrt();
        self.prepare_out()?;
        let mut w = csv_writer(&self.file("cellscan.csv"))?;
        w.write_record(["scale", "a", "energy_kdep", "energy_modified", "basis_min", "basis_max"])
            .map_err(CliError::output)?;
        let kd = scan.column(SchemeTag::KDependentGalerkin).unwrap_or_default();
        let md = scan.column(SchemeTag::Modified).unwrap_or_default();
        for i in 0..scales.len() {
            w.write_record([
                fmt17(scales[i]),
                fmt17(scales[i] * a0),
                fmt17(kd[i]),
                fmt17(md[i]),
                scan.basis_bounds[i].0.to_string(),
                scan.basis_bounds[i].1.to_string(),
            ])
            .map_err(CliError::output)?;
        }
        w.flush().map_err(CliError::output)?;
        let (sk, sm) = (analysis::max_second_difference(kd), analysis::max_second_difference(md));
        let summary = json!({
            "command": "cellscan",
            "ec": ec,
            "electrons": n,
            "grid": grid,
            "blowup": BlowupFile::from(&spec),
            "max_second_difference": {"kdep": sk, "modified": sm},
            "smoothness_ratio": sk / sm,
        });
        self.finish("cellscan.json", summary)?;
        Ok(format!(
            "cellscan: {} lattice parameters, max second difference kdep {sk:.3e} vs modified {sm:.3e} (ratio {:.1})",
            scales.len(),
            sk / sm
        ))
    }
}

fn output_file(out: Option<PathBuf>, default_name: &str) -> PathBuf {
    match out {
        Some(p) if p.is_dir() => p.join(default_name),
        Some(p) => p,
        None => PathBuf::from(default_name),
    }
}

fn potential_synth(
    t: f64,
    gmax: u32,
    seed: u64,
    amplitude: f64,
    config: Option<&Path>,
    out: Option<PathBuf>,
) -> Result<String, CliError> {
    if !(t.is_finite() && amplitude.is_finite()) {
        return Err(CliError::validation("--t and --amplitude must be finite"));
    }
    let lat = match config {
        Some(p) => RunConfig::load(p)?.resolve_lattice()?,
        None => Lattice::chain(1.0)?,
    };
    let synth = PowerLawSynth::new(t, gmax, seed).with_amplitude(amplitude);
    let v = synth.build(&lat)?;
    let path = output_file(out, "potential.json");
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(CliError::output)?;
    }
    write_json(&path, &PotentialFile::from_potential(&v))?;
    Ok(format!(
        "potential: {} coefficients, in H^s for s < {} -> {}",
        v.coeffs().len(),
        synth.regularity(lat.dim()),
        path.display()
    ))
}

fn blowup_check(
    m: u32,
    p: f64,
    c: Option<f64>,
    a: f64,
    msmooth: Option<u32>,
    out: Option<PathBuf>,
) -> Result<String, CliError> {
    let msmooth = msmooth.unwrap_or(m);
    let spec = match c {
        Some(c) => BlowupSpec::new(m, p, c, a).with_msmooth(msmooth),
        None => BlowupSpec::with_default_c(m, p, a, msmooth)?,
    };
    let g = BlowupFunction::build(spec)?;
    if let Some(o) = out {
        let path = output_file(Some(o), "blowup.json");
        write_json(&path, &BlowupFile::from(&spec))?;
    }
    let val = g.validation();
    Ok(format!(
        "blowup ok: m={} p={} C={} a={} msmooth={}, min margin {:.3e} over {} samples, junction mismatch {:.1e}",
        spec.m, spec.p, spec.c, spec.a, spec.msmooth, val.min_margin, val.samples, val.junction_mismatch
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_exit_two() {
        assert_eq!(run(["bandlab", "bands", "--scheme", "fancy"]), 2);
        assert_eq!(run(["bandlab", "nonsense"]), 2);
        assert_eq!(run(["bandlab", "bands", "--ec", "abc"]), 2);
    }

    #[test]
    fn ill_posed_blowup() {
        assert_eq!(run(["bandlab", "blowup", "check", "--m", "1", "--p", "0.5"]), 2);
        assert_eq!(run(["bandlab", "blowup", "check", "--m", "1", "--p", "1.5"]), 0);
    }

    #[test]
    fn cellscan_default_is_the_hexagonal_preset() {
        let s = Session::open_cellscan(&Common::default()).unwrap();
        let preset = bandlab_core::analysis::presets::hexagonal_family(3.0, 11).unwrap()(1.0).unwrap();
        assert_eq!(s.v, preset);
    }

    #[test]
    fn output_file_resolution() {
        let dir = std::env::temp_dir();
        assert_eq!(output_file(Some(dir.clone()), "x.json"), dir.join("x.json"));
        assert_eq!(output_file(None, "x.json"), PathBuf::from("x.json"));
    }
}
