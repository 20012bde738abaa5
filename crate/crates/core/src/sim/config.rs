use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernel::log2_exact;
use crate::sc::CheckRule;
use crate::st2d::CodingMode;

pub const DEFAULT_MAX_FRAMES: u64 = 10_000_000;
pub const DEFAULT_TARGET_FRAME_ERRORS: u64 = 100;
pub const DEFAULT_SEED: u64 = 1;

/// Keys accepted in a configuration file (and as CLI flags).
pub const CONFIG_KEYS: [&str; 15] = [
    "n",
    "s",
    "t",
    "k",
    "mode",
    "channel",
    "l",
    "gamma",
    "snr_db",
    "design_mean",
    "design_rule",
    "max_frames",
    "target_frame_errors",
    "seed",
    "out",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    /// Real BPSK over additive white Gaussian noise.
    Awgn,
    /// Quasi-static Rayleigh with `l` receive antennas and MMSE detection.
    Mimo { l: usize },
}

impl ChannelKind {
    /// Receive antennas; 0 for AWGN.
    pub fn receive_antennas(self) -> usize {
        match self {
            ChannelKind::Awgn => 0,
            ChannelKind::Mimo { l } => l,
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelKind::Awgn => f.write_str("awgn"),
            ChannelKind::Mimo { l } => write!(f, "mimo(L={l})"),
        }
    }
}

/// How the GA design mean is chosen at each SNR point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DesignRule {
    /// The same design mean at every point.
    Fixed(f64),
    /// AWGN: `2/σ²`. MIMO: the LLR mean at the pooled pilot SINR.
    #[default]
    Auto,
}

impl FromStr for DesignRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" | "sinr" | "snr" => Ok(DesignRule::Auto),
            other => parse_positive(other, "design_mean").map(DesignRule::Fixed),
        }
    }
}

/// A validated simulation setup.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub s: usize,
    pub t: usize,
    pub k: usize,
    pub mode: CodingMode,
    pub channel: ChannelKind,
    pub snr_db: Vec<f64>,
    pub design: DesignRule,
    pub max_frames: u64,
    pub target_frame_errors: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Worker threads; `None` uses all cores. Never changes the results.
    pub workers: Option<usize>,
    pub check_rule: CheckRule,
}

impl SimConfig {
    pub fn n(&self) -> usize {
        self.s * self.t
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n() as f64
    }

    /// Loads and validates a configuration file.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        ConfigLayer::from_file(path)?.build()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("S", self.s), ("T", self.t)] {
            if log2_exact(v).is_none() {
                return Err(Error::InvalidParameter(format!("{name} = {v} is not a power of two")));
            }
        }
        let n = self.n();
        if self.k == 0 || self.k > n {
            return Err(Error::InvalidParameter(format!("K = {} must lie in 1..={n}", self.k)));
        }
        if self.snr_db.is_empty() {
            return Err(Error::InvalidParameter("snr_db list is empty".into()));
        }
        if let Some(bad) = self.snr_db.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("snr_db value {bad} is not finite")));
        }
        if let ChannelKind::Mimo { l } = self.channel {
            if l < self.s {
                return Err(Error::InvalidParameter(format!("L = {l} must be at least S = {}", self.s)));
            }
        }
        if let DesignRule::Fixed(m) = self.design {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidParameter(format!("design_mean must be positive, got {m}")));
            }
        }
        if self.max_frames == 0 || self.target_frame_errors == 0 {
            return Err(Error::InvalidParameter("max_frames and target_frame_errors must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("workers must be positive".into()));
        }
        Ok(())
    }
}

/// Receive antennas for a load factor `gamma = S/L`, rounded to the nearest
/// integer when `S/gamma` is fractional.
pub fn antennas_for_gamma(s: usize, gamma: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    Ok((s as f64 / gamma).round() as usize)
}

/// One source of settings (a config file or the command line). Unset keys
/// fall through to the layer below when merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigLayer {
    pub n: Option<usize>,
    pub s: Option<usize>,
    pub t: Option<usize>,
    pub k: Option<usize>,
    pub mode: Option<CodingMode>,
    /// `"awgn"` or `"mimo"`.
    pub channel: Option<String>,
    pub l: Option<usize>,
    pub gamma: Option<f64>,
    pub snr_db: Option<Vec<f64>>,
    pub design: Option<DesignRule>,
    pub max_frames: Option<u64>,
    pub target_frame_errors: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

fn parse_num<T: FromStr>(value: &str, key: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Config(format!("invalid value for {key}: '{}'", value.trim())))
}

fn parse_positive(value: &str, key: &str) -> Result<f64> {
    let v: f64 = parse_num(value, key)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{key} must be a positive number, got '{value}'")))
    }
}

/// Parses a comma-separated list of SNR values in dB.
pub fn parse_snr_list(value: &str) -> Result<Vec<f64>> {
    let list = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num::<f64>(s, "snr_db"))
        .collect::<Result<Vec<_>>>()?;
    if list.is_empty() {
        return Err(Error::Config("snr_db list is empty".into()));
    }
    Ok(list)
}

impl ConfigLayer {
    /// Parses `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut layer = ConfigLayer::default();
        let mut seen: Vec<&str> = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", no + 1)))?;
            let key = key.trim();
            let canonical = CONFIG_KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| Error::Config(format!("line {}: unknown key '{key}'", no + 1)))?;
            if seen.contains(canonical) {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", no + 1)));
            }
            seen.push(canonical);
            layer.set(key, value)?;
        }
        Ok(layer)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "n" => self.n = Some(parse_num(v, key)?),
            "s" => self.s = Some(parse_num(v, key)?),
            "t" => self.t = Some(parse_num(v, key)?),
            "k" => self.k = Some(parse_num(v, key)?),
            "mode" => self.mode = Some(v.parse()?),
            "channel" => {
                let c = v.to_ascii_lowercase();
                if c != "awgn" && c != "mimo" {
                    return Err(Error::Config(format!("channel must be 'awgn' or 'mimo', got '{v}'")));
                }
                self.channel = Some(c);
            }
            "l" => self.l = Some(parse_num(v, key)?),
            "gamma" => self.gamma = Some(parse_positive(v, key)?),
            "snr_db" => self.snr_db = Some(parse_snr_list(v)?),
            "design_mean" => self.design = Some(DesignRule::Fixed(parse_positive(v, key)?)),
            "design_rule" => self.design = Some(v.parse()?),
            "max_frames" => self.max_frames = Some(parse_num(v, key)?),
            "target_frame_errors" => self.target_frame_errors = Some(parse_num(v, key)?),
            "seed" => self.seed = Some(parse_num(v, key)?),
            "out" => self.out = Some(PathBuf::from(v)),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        if self.l.is_some() && self.gamma.is_some() {
            return Err(Error::Config("'gamma' and 'l' are mutually exclusive".into()));
        }
        Ok(())
    }

    /// Keys set here win over `base`. `l` and `gamma` travel together so a
    /// higher layer can switch from one to the other.
    pub fn over(self, base: ConfigLayer) -> ConfigLayer {
        let (l, gamma) = if self.l.is_some() || self.gamma.is_some() {
            (self.l, self.gamma)
        } else {
            (base.l, base.gamma)
        };
        ConfigLayer {
            n: self.n.or(base.n),
            s: self.s.or(base.s),
            t: self.t.or(base.t),
            k: self.k.or(base.k),
            mode: self.mode.or(base.mode),
            channel: self.channel.or(base.channel),
            l,
            gamma,
            snr_db: self.snr_db.or(base.snr_db),
            design: self.design.or(base.design),
            max_frames: self.max_frames.or(base.max_frames),
            target_frame_errors: self.target_frame_errors.or(base.target_frame_errors),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
        }
    }

    /// Resolves defaults and validates.
    ///
    /// Geometry: any two of `n`, `s`, `t` fix the third; `n` alone means a
    /// 1-D code. `k` defaults to `N/2`.
    pub fn build(self) -> Result<SimConfig> {
        let (s, t) = match (self.n, self.s, self.t) {
            (_, Some(s), Some(t)) => {
                if let Some(n) = self.n.filter(|&n| n != s * t) {
                    return Err(Error::InvalidParameter(format!("n = {n} differs from s*t = {}", s * t)));
                }
                (s, t)
            }
            (Some(n), Some(s), None) => {
                if s == 0 || n % s != 0 {
                    return Err(Error::InvalidParameter(format!("s = {s} does not divide n = {n}")));
                }
                (s, n / s)
            }
            (Some(n), None, Some(t)) => {
                if t == 0 || n % t != 0 {
                    return Err(Error::InvalidParameter(format!("t = {t} does not divide n = {n}")));
                }
                (n / t, t)
            }
            (Some(n), None, None) => (1, n),
            _ => return Err(Error::InvalidParameter("code length missing: set n, or s and t".into())),
        };
        let channel = match self.channel.as_deref().unwrap_or("awgn") {
            "awgn" => {
                if self.l.is_some() || self.gamma.is_some() {
                    return Err(Error::InvalidParameter("'l' and 'gamma' apply only to the mimo channel".into()));
                }
                ChannelKind::Awgn
            }
            _ => {
                let l = match (self.l, self.gamma) {
                    (Some(l), _) => l,
                    (None, Some(g)) => antennas_for_gamma(s, g)?,
                    (None, None) => {
                        return Err(Error::InvalidParameter("mimo channel needs 'l' or 'gamma'".into()));
                    }
                };
                ChannelKind::Mimo { l }
            }
        };
        let cfg = SimConfig {
            s,
            t,
            k: self.k.unwrap_or(s * t / 2),
            mode: self.mode.unwrap_or_default(),
            channel,
            snr_db: self.snr_db.ok_or_else(|| Error::InvalidParameter("snr_db is required".into()))?,
            design: self.design.unwrap_or_default(),
            max_frames: self.max_frames.unwrap_or(DEFAULT_MAX_FRAMES),
            target_frame_errors: self.target_frame_errors.unwrap_or(DEFAULT_TARGET_FRAME_ERRORS),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            out: self.out,
            workers: None,
            check_rule: CheckRule::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# 2-D code over MIMO
s = 8
t = 32
k = 128
mode = space-time
channel = mimo
gamma = 0.5
snr_db = 0, 2.5, 5
design_rule = auto
max_frames = 1000
target_frame_errors = 50
seed = 42
out = results.csv
";

    #[test]
    fn parses_full_file() {
        let cfg = ConfigLayer::parse(SAMPLE).unwrap().build().unwrap();
        assert_eq!((cfg.s, cfg.t, cfg.k, cfg.n()), (8, 32, 128, 256));
        assert_eq!(cfg.mode, CodingMode::SpaceTime);
        assert_eq!(cfg.channel, ChannelKind::Mimo { l: 16 });
        assert_eq!(cfg.snr_db, vec![0.0, 2.5, 5.0]);
        assert_eq!(cfg.design, DesignRule::Auto);
        assert_eq!((cfg.max_frames, cfg.target_frame_errors, cfg.seed), (1000, 50, 42));
        assert_eq!(cfg.out.as_deref(), Some(Path::new("results.csv")));
    }

    #[test]
    fn defaults() {
        let cfg = ConfigLayer::parse("n = 64\nsnr_db = 1").unwrap().build().unwrap();
        assert_eq!((cfg.s, cfg.t, cfg.k), (1, 64, 32));
        assert_eq!(cfg.channel, ChannelKind::Awgn);
        assert_eq!(cfg.max_frames, DEFAULT_MAX_FRAMES);
        assert_eq!(cfg.target_frame_errors, DEFAULT_TARGET_FRAME_ERRORS);
        assert_eq!(cfg.design, DesignRule::Auto);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ConfigLayer::parse("n = 8\nfoo = 1").is_err());
        assert!(ConfigLayer::parse("l = 8\ngamma = 0.5").is_err());
        assert!(ConfigLayer::parse("n = 8\nn = 16").is_err());
        assert!(ConfigLayer::parse("n 8").is_err());
        assert!(ConfigLayer::parse("channel = rayleigh").is_err());
        assert!(ConfigLayer::parse("design_mean = -1").is_err());
        for text in [
            "n = 8\nk = 0\nsnr_db = 1",
            "n = 8\nk = 9\nsnr_db = 1",
            "n = 12\nsnr_db = 1",
            "n = 8",
            "s = 4\nt = 4\nchannel = mimo\nl = 2\nsnr_db = 1",
            "s = 4\nt = 4\nchannel = mimo\nsnr_db = 1",
            "n = 8\nl = 8\nsnr_db = 1",
            "n = 16\ns = 4\nt = 8\nsnr_db = 1",
        ] {
            let r = ConfigLayer::parse(text).and_then(ConfigLayer::build);
            assert!(r.is_err(), "{text}");
            assert!(r.unwrap_err().is_validation());
        }
    }

    #[test]
    fn upper_layer_wins() {
        let base = ConfigLayer::parse(SAMPLE).unwrap();
        let mut flags = ConfigLayer::default();
        flags.set("seed", "7").unwrap();
        flags.set("l", "32").unwrap();
        let cfg = flags.over(base).build().unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.channel, ChannelKind::Mimo { l: 32 });
        assert_eq!(cfg.k, 128);
    }

    #[test]
    fn gamma_rounding() {
        assert_eq!(antennas_for_gamma(16, 0.25).unwrap(), 64);
        assert_eq!(antennas_for_gamma(16, 0.75).unwrap(), 21);
        assert!(antennas_for_gamma(16, 1.5).is_err());
    }

    #[test]
    fn design_rule_text() {
        assert_eq!("auto".parse::<DesignRule>().unwrap(), DesignRule::Auto);
        assert_eq!("3.5".parse::<DesignRule>().unwrap(), DesignRule::Fixed(3.5));
        assert!("x".parse::<DesignRule>().is_err());
    }
}
