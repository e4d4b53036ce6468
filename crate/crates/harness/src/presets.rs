//! Named model presets addressable from configs and the CLI.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use projdiff_core::linalg::diag;
use projdiff_core::models::{
    build_finite_pair, build_krein, build_krein_spectral, build_schrodinger_1d, build_schrodinger_momentum,
    random_pair, KreinDiscretization, MomentumGrid, OperatorPair, PotentialSpec, RandomPairOptions,
};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Krein's pair on `[0, L]`; size is the number of cells.
    Krein,
    /// Krein's pair on a momentum grid graded toward the probe; size is nodes per side.
    /// The graded sum resolves the principal value so well that `H` has an
    /// eigenvalue within about 1e-13 of the probe, so `D` there is not defined.
    KreinSpectral,
    /// Box-discretized square well; size is the number of interior grid points.
    SquareWell,
    /// Box-discretized `-v sech^2(x)`; size as for the square well.
    Sech2,
    /// `-v sech^2(x)` on a momentum grid graded toward the probe; size is nodes per segment.
    Sech2Momentum,
    /// `H0 = 0`, `G = 1`, `V0 = 0` on a one-dimensional space.
    Lorentzian,
    /// Random gapped pair; size is the dimension. `None` takes the config seed.
    Random(Option<u64>),
}

/// Parameter names accepted by each preset, with defaults.
type Defaults = &'static [(&'static str, f64)];

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Krein,
        Preset::KreinSpectral,
        Preset::SquareWell,
        Preset::Sech2,
        Preset::Sech2Momentum,
        Preset::Lorentzian,
        Preset::Random(None),
    ];

    pub fn describe(&self) -> &'static str {
        match self {
            Preset::Krein => "Krein's rank-one pair, Galerkin cells on [0, length]",
            Preset::KreinSpectral => "Krein's pair in the sine representation, graded toward the probe (densities only)",
            Preset::SquareWell => "-depth on |x| < width, finite differences on [-box, box]",
            Preset::Sech2 => "-amplitude sech^2(x), finite differences on [-box, box]",
            Preset::Sech2Momentum => "-amplitude sech^2(x), momentum grid graded toward +-sqrt(probe)",
            Preset::Lorentzian => "scalar H0 = 0 with G = 1 and no coupling",
            Preset::Random(_) => "random gapped pair: diagonal H0, Gaussian G, +-1 diagonal V0",
        }
    }

    pub fn defaults(&self) -> Defaults {
        match self {
            Preset::Krein => &[("length", 40.0), ("nystrom", 0.0)],
            Preset::KreinSpectral => &[("min_offset", 1e-12)],
            Preset::SquareWell => &[("depth", 1.0), ("width", 1.0), ("box", 20.0)],
            Preset::Sech2 => &[("amplitude", 1.0), ("box", 20.0)],
            Preset::Sech2Momentum => &[
                ("amplitude", 1.0),
                ("box", 18.0),
                ("min_offset", 1e-12),
                ("cutoff", 12.0),
                ("position_nodes", 300.0),
            ],
            Preset::Lorentzian => &[],
            Preset::Random(_) => &[("rank", 3.0), ("coupling", 0.3), ("min_gap", 1e-2)],
        }
    }

    pub fn default_size(&self) -> usize {
        match self {
            Preset::Krein => 200,
            Preset::KreinSpectral => 150,
            Preset::SquareWell | Preset::Sech2 => 400,
            Preset::Sech2Momentum => 100,
            Preset::Lorentzian => 1,
            Preset::Random(_) => 8,
        }
    }

    pub fn default_probes(&self) -> Vec<f64> {
        match self {
            Preset::Krein | Preset::KreinSpectral => vec![0.5],
            Preset::SquareWell | Preset::Sech2 | Preset::Sech2Momentum => vec![1.0],
            Preset::Lorentzian | Preset::Random(_) => vec![0.0],
        }
    }

    pub fn default_ladder(&self) -> Vec<f64> {
        match self {
            // below ~0.05 the smoothing resolves the level spacing of the n = 200..400 cells
            Preset::Krein => vec![0.2, 0.1, 0.05],
            _ => projdiff_core::scattering::DEFAULT_LADDER.to_vec(),
        }
    }

    /// Whether the operators depend on the probe (graded grids).
    pub fn probe_dependent(&self) -> bool {
        matches!(self, Preset::KreinSpectral | Preset::Sech2Momentum)
    }

    /// Rejects probes the preset cannot be built or evaluated at.
    pub fn check_probe(&self, probe: f64) -> std::result::Result<(), String> {
        if !probe.is_finite() {
            return Err(format!("probe {probe} is not finite"));
        }
        match self {
            Preset::KreinSpectral if !(probe > 0.0 && probe < 1.0) => {
                Err(format!("probe {probe} must lie inside the band (0, 1)"))
            }
            Preset::Sech2Momentum if !(probe > 0.0) => Err(format!("probe {probe} must be positive")),
            _ => Ok(()),
        }
    }

    /// Fills in defaults and rejects unknown parameter names.
    pub fn resolve_parameters(&self, given: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
        let defaults = self.defaults();
        let mut out: BTreeMap<String, f64> = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (key, value) in given {
            if !defaults.iter().any(|(k, _)| k == key) {
                let known: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
                return Err(HarnessError::invalid(
                    format!("parameters.{key}"),
                    format!("unknown parameter for {self}; expected one of {known:?}"),
                ));
            }
            if !value.is_finite() {
                return Err(HarnessError::invalid(format!("parameters.{key}"), "must be finite"));
            }
            out.insert(key.clone(), *value);
        }
        Ok(out)
    }

    /// Builds the pair at the given size. `probe` is used by graded presets and
    /// as the gap point of random pairs.
    pub fn build(
        &self,
        size: usize,
        params: &BTreeMap<String, f64>,
        probes: &[f64],
        seed: u64,
    ) -> projdiff_core::Result<OperatorPair> {
        let p = |key: &str| params.get(key).copied().unwrap_or(f64::NAN);
        let probe = probes.first().copied().unwrap_or(0.0);
        match self {
            Preset::Krein => {
                let scheme = if p("nystrom") != 0.0 {
                    KreinDiscretization::Nystrom
                } else {
                    KreinDiscretization::CellAverage
                };
                build_krein(size, p("length"), scheme)
            }
            Preset::KreinSpectral => build_krein_spectral(size, p("min_offset"), probe),
            Preset::SquareWell => {
                let spec = PotentialSpec {
                    half_width: p("box"),
                    grid_size: size,
                    ..PotentialSpec::square_well(p("depth"), p("width"))
                };
                build_schrodinger_1d(&spec)
            }
            Preset::Sech2 => {
                let spec = PotentialSpec { half_width: p("box"), grid_size: size, ..PotentialSpec::sech2(p("amplitude")) };
                build_schrodinger_1d(&spec)
            }
            Preset::Sech2Momentum => {
                let spec = self.potential(params).expect("sech2 preset has a potential");
                let grid = MomentumGrid {
                    nodes_per_segment: size,
                    min_offset: p("min_offset"),
                    cutoff: p("cutoff"),
                    position_nodes: p("position_nodes") as usize,
                    ..MomentumGrid::new(probe)
                };
                build_schrodinger_momentum(&spec, &grid)
            }
            Preset::Lorentzian => build_finite_pair(diag(&[0.0]), diag(&[1.0]), diag(&[0.0])),
            Preset::Random(fixed) => {
                let options = RandomPairOptions {
                    dim: size,
                    rank: (p("rank") as usize).min(size),
                    probes: probes.to_vec(),
                    min_gap: p("min_gap"),
                    coupling: p("coupling"),
                };
                random_pair(fixed.unwrap_or(seed), &options)
            }
        }
    }

    /// The continuum potential behind a Schrodinger preset, for the transfer-matrix oracle.
    pub fn potential(&self, params: &BTreeMap<String, f64>) -> Option<PotentialSpec> {
        let p = |key: &str| params.get(key).copied().unwrap_or(f64::NAN);
        match self {
            Preset::SquareWell => {
                Some(PotentialSpec { half_width: p("box"), ..PotentialSpec::square_well(p("depth"), p("width")) })
            }
            Preset::Sech2 | Preset::Sech2Momentum => {
                Some(PotentialSpec { half_width: p("box"), ..PotentialSpec::sech2(p("amplitude")) })
            }
            _ => None,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Krein => f.write_str("krein"),
            Preset::KreinSpectral => f.write_str("krein:spectral"),
            Preset::SquareWell => f.write_str("schrodinger:square-well"),
            Preset::Sech2 => f.write_str("schrodinger:sech2"),
            Preset::Sech2Momentum => f.write_str("schrodinger:sech2:momentum"),
            Preset::Lorentzian => f.write_str("finite:lorentzian"),
            Preset::Random(None) => f.write_str("finite:random"),
            Preset::Random(Some(seed)) => write!(f, "finite:random({seed})"),
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("finite:random") {
            if rest.is_empty() {
                return Ok(Preset::Random(None));
            }
            let inner = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| format!("expected finite:random(<seed>), got `{s}`"))?;
            let seed = inner.trim().parse::<u64>().map_err(|e| format!("bad seed `{inner}`: {e}"))?;
            return Ok(Preset::Random(Some(seed)));
        }
        Preset::ALL
            .iter()
            .find(|p| p.to_string() == s)
            .copied()
            .ok_or_else(|| {
                let names: Vec<String> = Preset::ALL.iter().map(|p| p.to_string()).collect();
                format!("unknown preset `{s}`; known: {}", names.join(", "))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.to_string().parse::<Preset>().unwrap(), p);
        }
        assert_eq!("finite:random(7)".parse::<Preset>().unwrap(), Preset::Random(Some(7)));
        assert!("finite:random(x)".parse::<Preset>().is_err());
        assert!("krein:other".parse::<Preset>().is_err());
    }

    #[test]
    fn unknown_parameter_names_the_field() {
        let mut given = BTreeMap::new();
        given.insert("lenght".to_string(), 40.0);
        let err = Preset::Krein.resolve_parameters(&given).unwrap_err();
        assert!(err.to_string().contains("parameters.lenght"), "{err}");
    }

    #[test]
    fn random_preset_honours_probes() {
        let params = Preset::Random(Some(3)).resolve_parameters(&BTreeMap::new()).unwrap();
        let pair = Preset::Random(Some(3)).build(10, &params, &[0.25], 0).unwrap();
        let eig = projdiff_core::linalg::herm_eigenvalues(&pair.h).unwrap();
        assert!(eig.iter().all(|e| (e - 0.25).abs() >= 1e-2));
    }
}
