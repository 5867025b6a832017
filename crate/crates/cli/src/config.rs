//! Command-line flags and the validated run configuration.

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;

use cslb::characters::make_character;
use cslb::modarith::{gcd, is_prime};
use cslb::oscillatory::delta::DEFAULT_C_EPS;
use cslb::pipeline::{ExponentSumSpec, PipelineParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyLemma32,
    VerifyPostnikov,
    VerifyQuadgauss,
    VerifyNonzeroCharsum,
    VerifySplitIdentity,
    VerifyDelta,
    VerifyPoisson,
    VerifyVoronoi,
    VerifyTheta,
    ScanS,
    ScanTr,
    BoundReport,
}

impl Command {
    pub fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Verification and measurement harness for twisted GL(2) sums of prime-power conductor.
#[derive(Debug, Parser)]
#[command(name = "cslb", version)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub r: Option<u32>,
    #[arg(long)]
    pub ell: Option<u32>,
    /// One or more sub-depths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ell1: Vec<u32>,
    /// Scale N, or a comma-separated grid of scales.
    #[arg(long = "N", value_delimiter = ',')]
    pub n_grid: Vec<f64>,
    #[arg(long)]
    pub c_eps: Option<f64>,
    /// Character index relative to the fixed generator.
    #[arg(long, default_value_t = 1)]
    pub chi: i64,
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<u64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
    /// Depths s for the expansion and quadratic Gauss checks.
    #[arg(long, value_delimiter = ',')]
    pub s: Vec<u32>,
    /// Frequencies n for the split identity and non-zero frequency checks.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub freq: Vec<i64>,
    /// Length L of the delta expansion.
    #[arg(long = "L")]
    pub big_l: Option<f64>,
    /// Largest |n| in the delta reconstruction.
    #[arg(long)]
    pub n_max: Option<i64>,
    #[arg(long)]
    pub r1: Option<i64>,
    #[arg(long)]
    pub q1: Option<u64>,
    #[arg(long)]
    pub q2: Option<u64>,
    #[arg(long)]
    pub kappa: Option<u32>,
    /// Dyadic range 2^j-min ..= 2^j-max for the T(R) scan.
    #[arg(long)]
    pub j_min: Option<u32>,
    #[arg(long)]
    pub j_max: Option<u32>,
    #[arg(long)]
    pub x_cut: Option<f64>,
    #[arg(long)]
    pub max_terms: Option<u64>,
    #[arg(long)]
    pub tol_delta: Option<f64>,
    #[arg(long)]
    pub tol_identity: Option<f64>,
    #[arg(long)]
    pub tol_dual: Option<f64>,
    /// Relative change allowed when a dual truncation is doubled.
    #[arg(long)]
    pub tol_tail: Option<f64>,
    /// Harness ceiling for measured ratios and fitted slopes.
    #[arg(long)]
    pub ceiling: Option<f64>,
    /// Random samples per grid cell where a command samples.
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Coefficient cache directory; overrides CSLB_CACHE_DIR.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Report file; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub tol_delta: f64,
    pub tol_identity: f64,
    pub tol_dual: f64,
    pub tol_tail: f64,
    pub ceiling: f64,
}

/// Fully resolved configuration. Worker count and output path are left out
/// of the serialized form so reports do not depend on them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub p: u64,
    pub r: u32,
    pub ell: u32,
    pub ell1: Vec<u32>,
    pub n_grid: Vec<f64>,
    pub c_eps: f64,
    pub chi: i64,
    pub q: Vec<u64>,
    pub x: Vec<f64>,
    pub s: Vec<u32>,
    pub freq: Vec<i64>,
    pub big_l: f64,
    pub n_max: i64,
    pub r1: i64,
    pub q1: u64,
    pub q2: u64,
    pub kappa: u32,
    pub j_min: u32,
    pub j_max: u32,
    pub x_cut: Option<f64>,
    pub max_terms: u64,
    pub tolerances: Tolerances,
    pub samples: usize,
    pub seed: u64,
    pub cache_dir: Option<PathBuf>,
    pub format: Format,
    #[serde(skip)]
    pub workers: Option<usize>,
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn or<T: Clone>(v: &[T], d: &[T]) -> Vec<T> {
    if v.is_empty() {
        d.to_vec()
    } else {
        v.to_vec()
    }
}

fn coprime_upto(n: u64, p: u64) -> Vec<u64> {
    (1..=n).filter(|q| gcd(*q, p) == 1).collect()
}

struct Defaults {
    p: u64,
    r: u32,
    ell: u32,
    ell1: &'static [u32],
    c_eps: f64,
    tol_dual: f64,
    tol_tail: f64,
}

fn defaults(cmd: Command) -> Defaults {
    use Command::*;
    let d = |p, r, ell, ell1, c_eps| Defaults {
        p,
        r,
        ell,
        ell1,
        c_eps,
        tol_dual: 1e-6,
        tol_tail: 1e-8,
    };
    match cmd {
        VerifyLemma32 => d(5, 2, 1, &[0], 0.0),
        VerifyPostnikov | VerifyQuadgauss | VerifyNonzeroCharsum => d(7, 6, 2, &[0], 0.0),
        VerifySplitIdentity => d(5, 3, 2, &[0, 1, 2], 0.0),
        VerifyDelta => d(5, 2, 1, &[0], DEFAULT_C_EPS),
        VerifyPoisson => d(5, 3, 1, &[0], 2.0),
        VerifyVoronoi => Defaults {
            tol_dual: 1e-3,
            tol_tail: 1e-6,
            ..d(5, 3, 2, &[0, 1], 4.5)
        },
        VerifyTheta => d(7, 4, 2, &[0], 0.0),
        ScanS => d(7, 4, 1, &[0], 0.0),
        ScanTr => d(7, 6, 4, &[0], 0.0),
        BoundReport => d(7, 20, 1, &[0], 0.0),
    }
}

impl RunConfig {
    pub fn resolve(cli: &Cli) -> Result<Self, ConfigError> {
        use Command::*;
        let cmd = cli.command;
        let d = defaults(cmd);
        let p = cli.p.unwrap_or(d.p);
        let r = cli.r.unwrap_or(d.r);
        if !is_prime(p) || p == 2 {
            return Err(ConfigError(format!("p = {p} must be an odd prime")));
        }
        if r == 0 {
            return Err(ConfigError("r must be positive".into()));
        }
        let pf = p as f64;
        let rf = r as f64;
        let default_n: Vec<f64> = match cmd {
            VerifyLemma32 => vec![pf.powi(r as i32)],
            VerifyPoisson => vec![250.0],
            VerifyVoronoi => vec![500.0],
            VerifyTheta => vec![343.0],
            ScanS => (0..8).map(|i| pf.powf(rf / 2.0 + i as f64 * rf / 14.0).round()).collect(),
            BoundReport => vec![pf.powf(4.0 * rf / 5.0)],
            _ => vec![],
        };
        let (q_default, x_default, s_default, freq_default): (Vec<u64>, Vec<f64>, Vec<u32>, Vec<i64>) = match cmd {
            VerifyLemma32 => (coprime_upto(12, p), vec![], vec![], vec![]),
            VerifyPostnikov | VerifyQuadgauss => (vec![], vec![], (1..=4.min(r)).collect(), vec![]),
            VerifyNonzeroCharsum => (vec![1, 2, 3], vec![], vec![2], vec![1, -1, 2, -2]),
            VerifySplitIdentity => (coprime_upto(6, p), vec![], vec![], (-5..=5).collect()),
            VerifyPoisson => (vec![1, 2, 3], vec![0.0, 0.3, -0.7], vec![], vec![]),
            VerifyVoronoi => (vec![1, 3], vec![0.3, -0.7], vec![], vec![]),
            _ => (vec![], vec![], vec![], vec![]),
        };
        let cfg = RunConfig {
            command: cmd,
            p,
            r,
            ell: cli.ell.unwrap_or(d.ell),
            ell1: or(&cli.ell1, d.ell1),
            n_grid: or(&cli.n_grid, &default_n),
            c_eps: cli.c_eps.unwrap_or(d.c_eps),
            chi: cli.chi,
            q: or(&cli.q, &q_default),
            x: or(&cli.x, &x_default),
            s: or(&cli.s, &s_default),
            freq: or(&cli.freq, &freq_default),
            big_l: cli.big_l.unwrap_or(1e4),
            n_max: cli.n_max.unwrap_or(50),
            r1: cli.r1.unwrap_or(3),
            q1: cli.q1.unwrap_or(2),
            q2: cli.q2.unwrap_or(5),
            kappa: cli.kappa.unwrap_or(2),
            j_min: cli.j_min.unwrap_or(6),
            j_max: cli.j_max.unwrap_or(12),
            x_cut: cli.x_cut.or(if cmd == VerifyTheta { Some(8.0) } else { None }),
            max_terms: cli.max_terms.unwrap_or(cslb::pipeline::theta::DEFAULT_MAX_TERMS),
            tolerances: Tolerances {
                tol_delta: cli.tol_delta.unwrap_or(1e-2),
                tol_identity: cli.tol_identity.unwrap_or(1e-8),
                tol_dual: cli.tol_dual.unwrap_or(d.tol_dual),
                tol_tail: cli.tol_tail.unwrap_or(d.tol_tail),
                ceiling: cli.ceiling.unwrap_or(match cmd {
                    ScanTr => 0.9,
                    VerifyQuadgauss => 10.0,
                    _ => 100.0,
                }),
            },
            samples: cli.samples,
            seed: cli.seed,
            cache_dir: cli.cache_dir.clone(),
            format: cli.format,
            workers: cli.workers,
            output: cli.output.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Pipeline parameters at scale `n` and sub-depth `ell1`.
    pub fn params(&self, n: f64, ell1: u32) -> Result<PipelineParams, ConfigError> {
        let pp = PipelineParams::new(n, self.p, self.r, self.ell, ell1, self.c_eps).map_err(|e| ConfigError(e.to_string()))?;
        Ok(match self.x_cut {
            Some(x) => pp.with_x_cut(x),
            None => pp,
        })
    }

    pub fn exponent_spec(&self) -> Result<ExponentSumSpec, ConfigError> {
        let n = self.freq.first().copied().unwrap_or(1);
        ExponentSumSpec::new(self.p, self.r, self.ell - self.ell1[0], self.r1, self.q1, self.q2, n, self.kappa)
            .map_err(|e| ConfigError(e.to_string()))
    }

    fn validate(&self) -> Result<(), ConfigError> {
        use Command::*;
        let t = &self.tolerances;
        for (name, v) in [
            ("tol_delta", t.tol_delta),
            ("tol_identity", t.tol_identity),
            ("tol_dual", t.tol_dual),
            ("tol_tail", t.tol_tail),
            ("ceiling", t.ceiling),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError(format!("{name} must be positive, got {v}")));
            }
        }
        if self.ell > self.r {
            return Err(ConfigError(format!("need l <= r, got l={}, r={}", self.ell, self.r)));
        }
        if let Some(&l1) = self.ell1.iter().find(|&&l1| l1 > self.ell) {
            return Err(ConfigError(format!("need l1 <= l, got l1={l1}, l={}", self.ell)));
        }
        if self.workers == Some(0) {
            return Err(ConfigError("workers must be positive".into()));
        }
        if self.q.iter().any(|&q| q == 0 || q % self.p == 0) {
            return Err(ConfigError(format!("every q must be positive and prime to p = {}", self.p)));
        }
        if !(self.c_eps >= 0.0) {
            return Err(ConfigError("c_eps must be nonnegative".into()));
        }
        make_character(self.p, self.r, self.chi).map_err(|e| ConfigError(e.to_string()))?;
        let nonempty = |name: &str, len: usize| {
            if len == 0 {
                Err(ConfigError(format!("{name} grid is empty")))
            } else {
                Ok(())
            }
        };
        match self.command {
            VerifyLemma32 => {
                nonempty("q", self.q.len())?;
                nonempty("N", self.n_grid.len())?;
                if self.ell == 0 || self.ell >= self.r {
                    return Err(ConfigError(format!("need 1 <= l < r, got l={}", self.ell)));
                }
            }
            VerifyPostnikov | VerifyQuadgauss => {
                nonempty("s", self.s.len())?;
                if self.s.iter().any(|&s| s == 0 || s > self.r) {
                    return Err(ConfigError(format!("need 1 <= s <= r = {}", self.r)));
                }
            }
            VerifyNonzeroCharsum => {
                nonempty("q", self.q.len())?;
                nonempty("freq", self.freq.len())?;
                if self.s.iter().any(|&s| s < 2 || s % 2 == 1 || 3 * s > 2 * self.r) {
                    return Err(ConfigError("each s must be even, at least 2 and at most 2r/3".into()));
                }
                if self.freq.iter().any(|&n| n.rem_euclid(self.p as i64) == 0) {
                    return Err(ConfigError("frequencies must be prime to p".into()));
                }
            }
            VerifySplitIdentity => {
                nonempty("q", self.q.len())?;
                nonempty("freq", self.freq.len())?;
            }
            VerifyDelta => {
                if !(self.big_l > 1.0) || self.n_max < 0 || self.n_max as f64 > 2.0 * self.big_l {
                    return Err(ConfigError(format!("need L > 1 and 0 <= n_max <= 2L, got L={}, n_max={}", self.big_l, self.n_max)));
                }
            }
            VerifyPoisson | VerifyVoronoi => {
                nonempty("q", self.q.len())?;
                nonempty("x", self.x.len())?;
                nonempty("N", self.n_grid.len())?;
                for &n in &self.n_grid {
                    for &l1 in &self.ell1 {
                        self.params(n, l1)?;
                    }
                }
            }
            VerifyTheta => {
                nonempty("N", self.n_grid.len())?;
                self.params(self.n_grid[0], self.ell1[0])?;
            }
            ScanS | BoundReport => {
                nonempty("N", self.n_grid.len())?;
                if self.n_grid.iter().any(|&n| !(n > 1.0) || !n.is_finite()) {
                    return Err(ConfigError("every N must be finite and greater than 1".into()));
                }
            }
            ScanTr => {
                self.exponent_spec()?;
                if self.j_min > self.j_max || self.j_max > 40 {
                    return Err(ConfigError(format!("need j_min <= j_max <= 40, got {}..={}", self.j_min, self.j_max)));
                }
            }
        }
        Ok(())
    }
}
