//! Flat `key = value` configuration files: one setting per line, `#`
//! comments, UTF-8. Unknown keys are rejected; presets fill defaults that
//! explicit keys may override regardless of their position in the file.

use crate::{RunError, RunResult};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Eoc,
    Geomcheck,
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Custom,
    Ex61,
    Ex62,
    Ex63,
    Ex64,
    Ex65,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Laplace,
    /// a fixed smooth anisotropic example with a reaction term, for
    /// exercising variable-coefficient assembly from the command line
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GammaKind {
    Segment,
    Circle,
    Spiral,
    Spokes,
    Polyline(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataKind {
    Sin3PiX1,
    JumpLiteral,
    JumpMidflip,
    Const(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Direct,
    Krylov,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub command: Command,
    pub preset: Preset,
    pub operator: OperatorKind,
    pub gamma: GammaKind,
    pub g: DataKind,
    pub method: u8,
    pub nu: f64,
    pub bound_a: f64,
    pub bound_b: f64,
    pub n: usize,
    pub sigma: Option<f64>,
    pub levels: Vec<usize>,
    pub ref_factor: usize,
    pub solver: SolverChoice,
    pub newton_tol: f64,
    pub seed: u64,
    pub outdir: PathBuf,
    /// set by the point-control preset: that many unweighted, evenly
    /// spaced points along the curve replace the line fidelity term
    pub point_count: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            command: Command::Solve,
            preset: Preset::Custom,
            operator: OperatorKind::Laplace,
            gamma: GammaKind::Segment,
            g: DataKind::Const(1.0),
            method: 2,
            nu: 1e-2,
            bound_a: f64::NEG_INFINITY,
            bound_b: f64::INFINITY,
            n: 32,
            sigma: None,
            levels: vec![4, 8, 16, 32, 64, 128],
            ref_factor: 4,
            solver: SolverChoice::Direct,
            newton_tol: 1e-8,
            seed: 0,
            outdir: PathBuf::from("out"),
            point_count: None,
        }
    }
}

const KNOWN_KEYS: [&str; 16] = [
    "command",
    "preset",
    "operator",
    "gamma",
    "g",
    "method",
    "nu",
    "bound_a",
    "bound_b",
    "n",
    "sigma",
    "levels",
    "ref_factor",
    "solver",
    "newton_tol",
    "seed",
];
// `outdir` is also accepted; it holds a path, not a physical parameter
const PATH_KEYS: [&str; 1] = ["outdir"];

fn bad(key: &str, value: &str, expect: &str) -> RunError {
    RunError::Config(format!("key {key:?}: cannot read {value:?}, expected {expect}"))
}

fn parse_f64(key: &str, value: &str) -> RunResult<f64> {
    match value {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => value.parse().map_err(|_| bad(key, value, "a number")),
    }
}

/// Parse configuration text. Later occurrences of a key override earlier
/// ones; the preset applies before all explicit keys.
pub fn parse_config(text: &str) -> RunResult<Config> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(RunError::Config(format!(
                "line {}: expected key = value, found {line:?}",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) && !PATH_KEYS.contains(&key.as_str()) {
            return Err(RunError::Config(format!("unknown key {key:?}")));
        }
        pairs.push((key, value));
    }
    let map: BTreeMap<String, String> = pairs.into_iter().collect();

    let Some(command_str) = map.get("command") else {
        return Err(RunError::Config("key \"command\" is required".into()));
    };
    let command = match command_str.as_str() {
        "solve" => Command::Solve,
        "eoc" => Command::Eoc,
        "geomcheck" => Command::Geomcheck,
        "compare" => Command::Compare,
        other => return Err(bad("command", other, "solve|eoc|geomcheck|compare")),
    };

    let preset = match map.get("preset").map(String::as_str) {
        None | Some("custom") => Preset::Custom,
        Some("ex61") => Preset::Ex61,
        Some("ex62") => Preset::Ex62,
        Some("ex63") => Preset::Ex63,
        Some("ex64") => Preset::Ex64,
        Some("ex65") => Preset::Ex65,
        Some(other) => return Err(bad("preset", other, "ex61..ex65|custom")),
    };

    let mut cfg = Config {
        command,
        preset,
        ..Config::default()
    };
    apply_preset(&mut cfg);

    for (key, value) in &map {
        match key.as_str() {
            "command" | "preset" => {}
            "operator" => {
                cfg.operator = match value.as_str() {
                    "laplace" => OperatorKind::Laplace,
                    "custom" => OperatorKind::Custom,
                    other => return Err(bad(key, other, "laplace|custom")),
                }
            }
            "gamma" => {
                cfg.gamma = match value.as_str() {
                    "segment" => GammaKind::Segment,
                    "circle" => GammaKind::Circle,
                    "spiral" => GammaKind::Spiral,
                    "spokes" => GammaKind::Spokes,
                    other => match other.strip_prefix("polyline:") {
                        Some(path) if !path.is_empty() => GammaKind::Polyline(PathBuf::from(path)),
                        _ => {
                            return Err(bad(
                                key,
                                other,
                                "segment|circle|spiral|spokes|polyline:<path>",
                            ))
                        }
                    },
                }
            }
            "g" => {
                cfg.g = match value.as_str() {
                    "sin3pix" => DataKind::Sin3PiX1,
                    "jump_literal" => DataKind::JumpLiteral,
                    "jump_midflip" => DataKind::JumpMidflip,
                    other => match other.strip_prefix("const:") {
                        Some(v) => DataKind::Const(parse_f64(key, v)?),
                        None => {
                            return Err(bad(
                                key,
                                other,
                                "sin3pix|jump_literal|jump_midflip|const:<v>",
                            ))
                        }
                    },
                }
            }
            "method" => {
                cfg.method = match value.as_str() {
                    "1" => 1,
                    "2" => 2,
                    other => return Err(bad(key, other, "1|2")),
                }
            }
            "nu" => cfg.nu = parse_f64(key, value)?,
            "bound_a" => cfg.bound_a = parse_f64(key, value)?,
            "bound_b" => cfg.bound_b = parse_f64(key, value)?,
            "n" => {
                cfg.n = value
                    .parse()
                    .map_err(|_| bad(key, value, "a positive integer"))?
            }
            "sigma" => cfg.sigma = Some(parse_f64(key, value)?),
            "levels" => {
                let mut levels = Vec::new();
                for item in value.split(',') {
                    let item = item.trim();
                    levels.push(
                        item.parse::<usize>()
                            .map_err(|_| bad(key, item, "a comma-separated list of integers"))?,
                    );
                }
                cfg.levels = levels;
            }
            "ref_factor" => {
                cfg.ref_factor = value
                    .parse()
                    .map_err(|_| bad(key, value, "an integer"))?
            }
            "solver" => {
                cfg.solver = match value.as_str() {
                    "direct" => SolverChoice::Direct,
                    "krylov" => SolverChoice::Krylov,
                    other => return Err(bad(key, other, "direct|krylov")),
                }
            }
            "newton_tol" => cfg.newton_tol = parse_f64(key, value)?,
            "seed" => {
                cfg.seed = value
                    .parse()
                    .map_err(|_| bad(key, value, "an unsigned integer"))?
            }
            "outdir" => cfg.outdir = PathBuf::from(value),
            _ => unreachable!("key list checked above"),
        }
    }

    validate(&cfg)?;
    Ok(cfg)
}

fn apply_preset(cfg: &mut Config) {
    match cfg.preset {
        Preset::Custom => {}
        Preset::Ex61 => {
            cfg.gamma = GammaKind::Segment;
            cfg.g = DataKind::Sin3PiX1;
            cfg.nu = 1e-2;
            cfg.bound_a = f64::NEG_INFINITY;
            cfg.bound_b = f64::INFINITY;
            cfg.method = 2;
        }
        Preset::Ex62 => {
            cfg.gamma = GammaKind::Segment;
            cfg.g = DataKind::JumpMidflip;
            cfg.nu = 1e-2;
            cfg.bound_a = -5.0;
            cfg.bound_b = 5.0;
            cfg.method = 1;
        }
        Preset::Ex63 => {
            cfg.gamma = GammaKind::Spiral;
            cfg.g = DataKind::Const(1.0);
            cfg.nu = 1e-4;
            cfg.bound_a = f64::NEG_INFINITY;
            cfg.bound_b = f64::INFINITY;
            cfg.method = 2;
        }
        Preset::Ex64 => {
            cfg.gamma = GammaKind::Spokes;
            cfg.g = DataKind::Const(1.0);
            cfg.nu = 1e-4;
            cfg.bound_a = f64::NEG_INFINITY;
            cfg.bound_b = f64::INFINITY;
            cfg.method = 1;
        }
        Preset::Ex65 => {
            cfg.gamma = GammaKind::Spiral;
            cfg.g = DataKind::Const(1.0);
            cfg.nu = 1e-4;
            cfg.bound_a = f64::NEG_INFINITY;
            cfg.bound_b = f64::INFINITY;
            cfg.method = 2;
            cfg.point_count = Some(41);
        }
    }
}

fn validate(cfg: &Config) -> RunResult<()> {
    if !(cfg.nu > 0.0) {
        return Err(RunError::Config(format!(
            "key \"nu\": must be positive, got {}",
            cfg.nu
        )));
    }
    if !(cfg.bound_a < cfg.bound_b) {
        return Err(RunError::Config(format!(
            "keys \"bound_a\"/\"bound_b\": need bound_a < bound_b, got [{}, {}]",
            cfg.bound_a, cfg.bound_b
        )));
    }
    if cfg.n < 1 {
        return Err(RunError::Config("key \"n\": must be at least 1".into()));
    }
    if let Some(sigma) = cfg.sigma {
        if !(sigma > 0.0) {
            return Err(RunError::Config(format!(
                "key \"sigma\": must be positive, got {sigma}"
            )));
        }
    }
    if !(cfg.newton_tol > 0.0) {
        return Err(RunError::Config(format!(
            "key \"newton_tol\": must be positive, got {}",
            cfg.newton_tol
        )));
    }
    if cfg.command == Command::Eoc {
        if cfg.levels.is_empty() {
            return Err(RunError::Config("key \"levels\": must not be empty".into()));
        }
        for w in cfg.levels.windows(2) {
            if w[1] != 2 * w[0] {
                return Err(RunError::Config(format!(
                    "key \"levels\": entries must double, found {} after {}",
                    w[1], w[0]
                )));
            }
        }
        if cfg.levels[0] < 1 {
            return Err(RunError::Config("key \"levels\": entries must be positive".into()));
        }
        if cfg.ref_factor < 4 {
            return Err(RunError::Config(format!(
                "key \"ref_factor\": reference must be at least 4x the finest level, got {}",
                cfg.ref_factor
            )));
        }
        if !cfg.ref_factor.is_power_of_two() {
            return Err(RunError::Config(
                "key \"ref_factor\": must be a power of two for nested meshes".into(),
            ));
        }
    }
    if matches!(cfg.gamma, GammaKind::Polyline(_)) {
        if cfg.method == 1 {
            return Err(RunError::Config(
                "key \"method\": polyline curves carry no smooth description; use method = 2".into(),
            ));
        }
        if cfg.command == Command::Geomcheck || cfg.command == Command::Compare {
            return Err(RunError::Config(
                "key \"gamma\": geomcheck and compare need a curve with a known smooth form".into(),
            ));
        }
    }
    if cfg.command == Command::Compare && !matches!(cfg.gamma, GammaKind::Spiral) {
        return Err(RunError::Config(
            "key \"gamma\": compare is defined for the spiral".into(),
        ));
    }
    Ok(())
}

/// Render the resolved configuration as sorted `key = value` lines for the
/// metadata record.
pub fn render_config(cfg: &Config) -> Vec<(String, String)> {
    let gamma = match &cfg.gamma {
        GammaKind::Segment => "segment".to_string(),
        GammaKind::Circle => "circle".to_string(),
        GammaKind::Spiral => "spiral".to_string(),
        GammaKind::Spokes => "spokes".to_string(),
        GammaKind::Polyline(p) => format!("polyline:{}", p.display()),
    };
    let g = match cfg.g {
        DataKind::Sin3PiX1 => "sin3pix".to_string(),
        DataKind::JumpLiteral => "jump_literal".to_string(),
        DataKind::JumpMidflip => "jump_midflip".to_string(),
        DataKind::Const(v) => format!("const:{v}"),
    };
    let mut out = vec![
        (
            "command".to_string(),
            match cfg.command {
                Command::Solve => "solve",
                Command::Eoc => "eoc",
                Command::Geomcheck => "geomcheck",
                Command::Compare => "compare",
            }
            .to_string(),
        ),
        (
            "preset".to_string(),
            match cfg.preset {
                Preset::Custom => "custom",
                Preset::Ex61 => "ex61",
                Preset::Ex62 => "ex62",
                Preset::Ex63 => "ex63",
                Preset::Ex64 => "ex64",
                Preset::Ex65 => "ex65",
            }
            .to_string(),
        ),
        (
            "operator".to_string(),
            match cfg.operator {
                OperatorKind::Laplace => "laplace",
                OperatorKind::Custom => "custom",
            }
            .to_string(),
        ),
        ("gamma".to_string(), gamma),
        ("g".to_string(), g),
        ("method".to_string(), cfg.method.to_string()),
        ("nu".to_string(), format!("{}", cfg.nu)),
        ("bound_a".to_string(), format!("{}", cfg.bound_a)),
        ("bound_b".to_string(), format!("{}", cfg.bound_b)),
        ("n".to_string(), cfg.n.to_string()),
        (
            "levels".to_string(),
            cfg.levels
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(","),
        ),
        ("ref_factor".to_string(), cfg.ref_factor.to_string()),
        (
            "solver".to_string(),
            match cfg.solver {
                SolverChoice::Direct => "direct",
                SolverChoice::Krylov => "krylov",
            }
            .to_string(),
        ),
        ("newton_tol".to_string(), format!("{}", cfg.newton_tol)),
        ("seed".to_string(), cfg.seed.to_string()),
        ("outdir".to_string(), cfg.outdir.display().to_string()),
    ];
    if let Some(sigma) = cfg.sigma {
        out.push(("sigma".to_string(), format!("{sigma}")));
    }
    if let Some(count) = cfg.point_count {
        out.push(("point_count".to_string(), count.to_string()));
    }
    out.sort();
    out
}
