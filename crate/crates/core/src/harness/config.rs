//! Flat `section.key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Lists are comma separated, and `lo:hi:n` expands to `n` evenly spaced
//! points including both ends.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::geometry::BlackHoleParams;
use crate::modifiers::ExpansionForm;
use crate::potential::AngularMode;

/// Experiments in dependency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiment {
    GeometryTable,
    PotentialTable,
    SmatrixSweep,
    HighEnergyCheck,
    Evolve,
    ModifierDefect,
    CompareFout,
    Reconstruct,
    EndToEnd,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::GeometryTable,
        Experiment::PotentialTable,
        Experiment::SmatrixSweep,
        Experiment::HighEnergyCheck,
        Experiment::Evolve,
        Experiment::ModifierDefect,
        Experiment::CompareFout,
        Experiment::Reconstruct,
        Experiment::EndToEnd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::GeometryTable => "geometry-table",
            Experiment::PotentialTable => "potential-table",
            Experiment::SmatrixSweep => "smatrix-sweep",
            Experiment::HighEnergyCheck => "high-energy-check",
            Experiment::Evolve => "evolve",
            Experiment::ModifierDefect => "modifier-defect",
            Experiment::CompareFout => "compare-fout",
            Experiment::Reconstruct => "reconstruct",
            Experiment::EndToEnd => "end-to-end",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }
}

/// How `compare-fout` obtains the long-time limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitMethod {
    /// Generalized eigenfunctions: the `T -> inf` limit taken exactly.
    Stationary,
    /// Strang propagation to a finite horizon.
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub coordinate: f64,
    pub roundtrip: f64,
    pub integral: f64,
    pub unitarity: f64,
    pub phase: f64,
    pub richardson: f64,
    pub norm_drift: f64,
    pub free_exact: f64,
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    pub ablation_drift: f64,
    pub mass: f64,
    pub charge_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketSpec {
    pub xi_min: f64,
    pub xi_max: f64,
    /// Translation of the second packet of a pair.
    pub shift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveSpec {
    pub lambda: f64,
    /// Fourier support of the evolved packet.
    pub xi_min: f64,
    pub xi_max: f64,
    pub half_width: f64,
    pub points: usize,
    pub dt: f64,
    pub time: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mass: f64,
    pub charge: f64,
    pub l: f64,
    pub free_override: bool,
    pub x_grid: Vec<f64>,
    pub energies: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub high_energy_lambdas: Vec<f64>,
    pub inverse_lambdas: Vec<f64>,
    pub tolerances: Tolerances,
    pub stationary_rtol: f64,
    pub stationary_atol: f64,
    pub packet: PacketSpec,
    pub evolve: EvolveSpec,
    pub compare_method: LimitMethod,
    pub compare_form: ExpansionForm,
    pub spatial_half_width: f64,
    pub chebyshev_nodes: usize,
    pub cutoff_margin: f64,
    pub reconstruct_input: Option<PathBuf>,
    pub experiments: Vec<Experiment>,
    pub noise_seed: u64,
    pub noise_level: f64,
    pub output_dir: PathBuf,
    /// Every key with its effective value, for the manifest.
    pub echo: BTreeMap<String, String>,
}

const DEFAULTS: &[(&str, &str)] = &[
    ("geometry.mass", "1.0"),
    ("geometry.charge", "0.0"),
    ("mode.l", "0.5"),
    ("potential.free_override", "false"),
    ("grid.x", "-50:50:101"),
    ("grid.energies", "0.1:3.1:31"),
    ("grid.lambdas", "20,40,80"),
    ("high_energy.lambdas", "25,50,100"),
    ("inverse.lambdas", "3:40:38"),
    ("tolerance.coordinate", "1e-6"),
    ("tolerance.roundtrip", "1e-9"),
    ("tolerance.integral", "1e-8"),
    ("tolerance.unitarity", "1e-6"),
    ("tolerance.phase", "2e-2"),
    ("tolerance.richardson", "1e-3"),
    ("tolerance.norm_drift", "1e-8"),
    ("tolerance.free_exact", "1e-12"),
    ("tolerance.ratio_lo", "0.5"),
    ("tolerance.ratio_hi", "2.0"),
    ("tolerance.ablation_drift", "4.0"),
    ("tolerance.mass", "1e-2"),
    ("tolerance.charge_sq", "2e-2"),
    ("stationary.rtol", "1e-11"),
    ("stationary.atol", "1e-13"),
    ("packet.xi_min", "0.25"),
    ("packet.xi_max", "1.0"),
    ("packet.shift", "2.0"),
    ("evolve.lambda", "2.0"),
    ("evolve.xi_min", "-1.0"),
    ("evolve.xi_max", "3.0"),
    ("evolve.half_width", "1000"),
    ("evolve.points", "16384"),
    ("evolve.dt", "0.05"),
    ("evolve.time", "100"),
    ("evolve.samples", "5"),
    ("compare.method", "stationary"),
    ("compare.expansion", "corrected"),
    ("images.half_width", "500"),
    ("images.chebyshev_nodes", "16"),
    ("modifier.cutoff_margin", "0.1"),
    ("reconstruct.input", ""),
    ("experiment", "geometry-table"),
    ("noise.seed", "0"),
    ("noise.level", "0"),
    ("output.dir", "rn-dirac-out"),
];

/// Key-value pairs as read, before typing and validation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parses the text form. Unknown keys, duplicates and malformed lines are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            if raw.entries.contains_key(k) {
                return Err(Error::Config(format!("line {}: duplicate key {k}", n + 1)));
            }
            raw.set(k, v.trim())?;
        }
        Ok(raw)
    }

    /// Sets one key, replacing any earlier value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !DEFAULTS.iter().any(|(k, _)| *k == key) {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies `--key=value` or `key=value` overrides.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, args: &[S]) -> Result<()> {
        let mut it = args.iter().map(|s| s.as_ref());
        while let Some(a) = it.next() {
            let body = a.strip_prefix("--").unwrap_or(a);
            match body.split_once('=') {
                Some((k, v)) => self.set(k.trim(), v.trim())?,
                None => {
                    let v = it
                        .next()
                        .ok_or_else(|| Error::Config(format!("missing value for {a}")))?;
                    self.set(body, v)?
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.entries
            .get(key)
            .map(String::as_str)
            .or_else(|| DEFAULTS.iter().find(|(k, _)| *k == key).map(|(_, v)| *v))
            .expect("every key has a default")
    }

    /// Types and validates every field.
    pub fn resolve(&self) -> Result<RunConfig> {
        let f = |k: &str| parse_f64(k, self.get(k));
        let pos = |k: &str| -> Result<f64> {
            let v = f(k)?;
            if v > 0.0 {
                Ok(v)
            } else {
                Err(Error::Config(format!("{k} must be positive, got {v}")))
            }
        };
        let count = |k: &str| -> Result<usize> {
            self.get(k)
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("{k}: expected a count, got {:?}", self.get(k))))
        };
        let grid = |k: &str| parse_grid(k, self.get(k));

        let mass = f("geometry.mass")?;
        let charge = f("geometry.charge")?;
        BlackHoleParams::new(mass, charge).map_err(|e| Error::Config(format!("geometry: {e}")))?;
        let l = f("mode.l")?;
        AngularMode::from_l(l).map_err(|e| Error::Config(format!("mode.l: {e}")))?;
        let free_override = parse_bool(
            "potential.free_override",
            self.get("potential.free_override"),
        )?;

        let energies = grid("grid.energies")?;
        if energies.iter().any(|&e| e == 0.0) {
            return Err(Error::Config("grid.energies must not contain 0".into()));
        }
        let lambdas = grid("grid.lambdas")?;
        let high_energy_lambdas = grid("high_energy.lambdas")?;
        let inverse_lambdas = grid("inverse.lambdas")?;
        for (k, g) in [
            ("grid.lambdas", &lambdas),
            ("high_energy.lambdas", &high_energy_lambdas),
            ("inverse.lambdas", &inverse_lambdas),
        ] {
            if g[0] <= 0.0 {
                return Err(Error::Config(format!("{k} must be positive")));
            }
        }

        let tolerances = Tolerances {
            coordinate: pos("tolerance.coordinate")?,
            roundtrip: pos("tolerance.roundtrip")?,
            integral: pos("tolerance.integral")?,
            unitarity: pos("tolerance.unitarity")?,
            phase: pos("tolerance.phase")?,
            richardson: pos("tolerance.richardson")?,
            norm_drift: pos("tolerance.norm_drift")?,
            free_exact: pos("tolerance.free_exact")?,
            ratio_lo: pos("tolerance.ratio_lo")?,
            ratio_hi: pos("tolerance.ratio_hi")?,
            ablation_drift: pos("tolerance.ablation_drift")?,
            mass: pos("tolerance.mass")?,
            charge_sq: pos("tolerance.charge_sq")?,
        };
        if tolerances.ratio_lo >= tolerances.ratio_hi {
            return Err(Error::Config(
                "tolerance.ratio_lo must be below tolerance.ratio_hi".into(),
            ));
        }

        let packet = PacketSpec {
            xi_min: f("packet.xi_min")?,
            xi_max: f("packet.xi_max")?,
            shift: f("packet.shift")?,
        };
        if !(packet.xi_min < packet.xi_max) {
            return Err(Error::Config(
                "packet.xi_min must be below packet.xi_max".into(),
            ));
        }
        let evolve = EvolveSpec {
            lambda: f("evolve.lambda")?,
            xi_min: f("evolve.xi_min")?,
            xi_max: f("evolve.xi_max")?,
            half_width: pos("evolve.half_width")?,
            points: count("evolve.points")?,
            dt: pos("evolve.dt")?,
            time: pos("evolve.time")?,
            samples: count("evolve.samples")?,
        };
        if !(evolve.xi_min < evolve.xi_max) {
            return Err(Error::Config(
                "evolve.xi_min must be below evolve.xi_max".into(),
            ));
        }
        if evolve.lambda < 0.0 {
            return Err(Error::Config("evolve.lambda must be non-negative".into()));
        }
        if evolve.points < 16 || !evolve.points.is_power_of_two() {
            return Err(Error::Config(
                "evolve.points must be a power of two >= 16".into(),
            ));
        }
        if evolve.samples == 0 {
            return Err(Error::Config("evolve.samples must be at least 1".into()));
        }
        let compare_method = match self.get("compare.method") {
            "stationary" => LimitMethod::Stationary,
            "time" => LimitMethod::Time,
            v => {
                return Err(Error::Config(format!(
                    "compare.method: expected stationary or time, got {v:?}"
                )))
            }
        };
        let compare_form = match self.get("compare.expansion") {
            "corrected" => ExpansionForm::Corrected,
            "printed" => ExpansionForm::Printed,
            v => {
                return Err(Error::Config(format!(
                    "compare.expansion: expected corrected or printed, got {v:?}"
                )))
            }
        };
        let chebyshev_nodes = count("images.chebyshev_nodes")?;
        if chebyshev_nodes < 2 {
            return Err(Error::Config(
                "images.chebyshev_nodes must be at least 2".into(),
            ));
        }

        let reconstruct_input = match self.get("reconstruct.input") {
            "" => None,
            p => Some(PathBuf::from(p)),
        };
        let mut experiments = Vec::new();
        for name in self.get("experiment").split(',').map(str::trim) {
            let e = Experiment::from_name(name)
                .ok_or_else(|| Error::Config(format!("unknown experiment {name:?}")))?;
            if !experiments.contains(&e) {
                experiments.push(e);
            }
        }
        experiments.sort();
        if experiments.contains(&Experiment::Reconstruct) && reconstruct_input.is_none() {
            return Err(Error::Config("reconstruct needs reconstruct.input".into()));
        }
        if experiments.contains(&Experiment::EndToEnd) && free_override {
            return Err(Error::Config(
                "end-to-end needs a black-hole background, not the free override".into(),
            ));
        }
        let noise_seed = self.get("noise.seed").parse::<u64>().map_err(|_| {
            Error::Config(format!(
                "noise.seed: expected an unsigned integer, got {:?}",
                self.get("noise.seed")
            ))
        })?;
        let noise_level = f("noise.level")?;
        if noise_level < 0.0 {
            return Err(Error::Config("noise.level must be non-negative".into()));
        }
        let output_dir = PathBuf::from(self.get("output.dir"));
        if self.get("output.dir").is_empty() {
            return Err(Error::Config("output.dir must not be empty".into()));
        }

        let echo = DEFAULTS
            .iter()
            .map(|(k, _)| (k.to_string(), self.get(k).to_string()))
            .collect();
        Ok(RunConfig {
            mass,
            charge,
            l,
            free_override,
            x_grid: grid("grid.x")?,
            energies,
            lambdas,
            high_energy_lambdas,
            inverse_lambdas,
            tolerances,
            stationary_rtol: pos("stationary.rtol")?,
            stationary_atol: pos("stationary.atol")?,
            packet,
            evolve,
            compare_method,
            compare_form,
            spatial_half_width: pos("images.half_width")?,
            chebyshev_nodes,
            cutoff_margin: pos("modifier.cutoff_margin")?,
            reconstruct_input,
            experiments,
            noise_seed,
            noise_level,
            output_dir,
            echo,
        })
    }
}

impl RunConfig {
    /// Parses and validates a configuration text with command-line overrides.
    pub fn from_text<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self> {
        let mut raw = RawConfig::parse(text)?;
        raw.apply_overrides(overrides)?;
        raw.resolve()
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Config(format!(
            "{key}: expected a finite number, got {s:?}"
        ))),
    }
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected true or false, got {s:?}"
        ))),
    }
}

/// A non-empty, strictly increasing grid: `a, b, c` or `lo:hi:n`.
pub fn parse_grid(key: &str, s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let values = match parts.as_slice() {
        [lo, hi, n] => {
            let (lo, hi) = (parse_f64(key, lo)?, parse_f64(key, hi)?);
            let n: usize = n
                .parse()
                .map_err(|_| Error::Config(format!("{key}: bad point count {n:?}")))?;
            if n == 0 || n > 1_000_000 {
                return Err(Error::Config(format!(
                    "{key}: point count must be in 1..=1000000"
                )));
            }
            if n == 1 {
                if lo != hi {
                    return Err(Error::Config(format!(
                        "{key}: a single point needs lo == hi"
                    )));
                }
                vec![lo]
            } else {
                (0..n)
                    .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
                    .collect()
            }
        }
        [list] => list
            .split(',')
            .map(|v| parse_f64(key, v))
            .collect::<Result<Vec<f64>>>()?,
        _ => {
            return Err(Error::Config(format!(
                "{key}: expected a list or lo:hi:n, got {s:?}"
            )))
        }
    };
    if values.is_empty() {
        return Err(Error::Config(format!("{key}: empty grid")));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config(format!(
            "{key}: grid must be strictly increasing"
        )));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let c = RunConfig::from_text::<&str>("", &[]).unwrap();
        assert_eq!(c.mass, 1.0);
        assert_eq!(c.energies.len(), 31);
        assert_eq!(c.experiments, vec![Experiment::GeometryTable]);
        assert_eq!(c.echo.len(), DEFAULTS.len());
    }

    #[test]
    fn comments_and_overrides() {
        let text =
            "# run\ngeometry.mass = 2.0  # heavier\n\nexperiment = end-to-end, geometry-table\n";
        let c = RunConfig::from_text(text, &["--geometry.charge=0.5", "--mode.l", "1.5"]).unwrap();
        assert_eq!((c.mass, c.charge, c.l), (2.0, 0.5, 1.5));
        assert_eq!(
            c.experiments,
            vec![Experiment::GeometryTable, Experiment::EndToEnd]
        );
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "geometry.mass = 1\ngeometry.charge = 2",
            "mode.l = 1.0",
            "grid.energies = 3,2,1",
            "grid.lambdas = ",
            "nonsense = 1",
            "geometry.mass",
            "geometry.mass = 1\ngeometry.mass = 2",
            "experiment = reconstruct",
            "experiment = end-to-end\npotential.free_override = true",
            "evolve.points = 1000",
            "geometry.mass = nan",
        ] {
            assert!(
                matches!(
                    RunConfig::from_text::<&str>(text, &[]),
                    Err(Error::Config(_))
                ),
                "{text}"
            );
        }
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("g", "0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("g", "1, 2,5").unwrap(), vec![1.0, 2.0, 5.0]);
        assert!(parse_grid("g", "0:1:0").is_err());
        assert!(parse_grid("g", "1:2").is_err());
    }
}
