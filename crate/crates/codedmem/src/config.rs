//! `key = value` configuration files with `[layout]`, `[engine]` and
//! `[dynamic]` sections. Every key is optional; missing keys keep the
//! defaults of [`SimConfig`].
//!
//! ```text
//! [layout]
//! scheme = I
//! alpha = 0.15
//!
//! [engine]
//! access_ratio = 4
//!
//! [dynamic]
//! enabled = true
//! r = 0.05
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use codedmem_core::codes::Scheme;
use codedmem_core::dynamic::DynamicConfig;
use codedmem_core::engine::SimConfig;
use ini::Ini;

use crate::error::{Error, Result};

fn value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected true or false, found `{v}`"))),
    }
}

fn optional<T: FromStr>(key: &str, v: &str) -> Result<Option<T>> {
    match v.trim() {
        "" | "none" => Ok(None),
        s => value(key, s).map(Some),
    }
}

pub fn parse_config(text: &str) -> Result<SimConfig> {
    let ini = Ini::load_from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
    let mut cfg = SimConfig::default();
    let mut dynamic = false;
    let mut dcfg = DynamicConfig::default();
    for (section, props) in ini.iter() {
        for (k, v) in props.iter() {
            let key = format!("{}.{k}", section.unwrap_or(""));
            match (section, k) {
                (Some("layout"), "scheme") => {
                    cfg.scheme = Scheme::from_str(v).map_err(|e| Error::config(&key, e.to_string()))?
                }
                (Some("layout"), "alpha") => cfg.alpha = value(&key, v)?,
                (Some("layout"), "banks") => cfg.banks = value(&key, v)?,
                (Some("layout"), "rows") => cfg.rows = value(&key, v)?,
                (Some("layout"), "words") => cfg.words = value(&key, v)?,
                (Some("layout"), "coded_rows") => cfg.coded_rows = optional(&key, v)?,
                (Some("engine"), "access_ratio") => cfg.access_ratio = value(&key, v)?,
                (Some("engine"), "core_cycle_ns") => cfg.core_cycle_ns = value(&key, v)?,
                (Some("engine"), "queue_depth") => cfg.controller.queue_depth = value(&key, v)?,
                (Some("engine"), "write_threshold") => cfg.controller.write_threshold = value(&key, v)?,
                (Some("engine"), "write_cap") => cfg.controller.write_cap_per_bank = optional(&key, v)?,
                (Some("engine"), "idle_write_drain") => cfg.controller.idle_write_drain = flag(&key, v)?,
                (Some("engine"), "burst") => cfg.burst = value(&key, v)?,
                (Some("engine"), "seed") => cfg.seed = value(&key, v)?,
                (Some("engine"), "verify") => cfg.verify = flag(&key, v)?,
                (Some("dynamic"), "enabled") => dynamic = flag(&key, v)?,
                (Some("dynamic"), "r") => dcfg.r = value(&key, v)?,
                (Some("dynamic"), "period") => dcfg.period = value(&key, v)?,
                _ => return Err(Error::config(key, "unknown key")),
            }
        }
    }
    cfg.dynamic = dynamic.then_some(dcfg);
    check(&cfg)?;
    Ok(cfg)
}

/// Full validation, including the layout, so that bad files fail before a run.
pub fn check(cfg: &SimConfig) -> Result<()> {
    cfg.validate()?;
    cfg.build_layout()?;
    if let Some(d) = cfg.dynamic {
        codedmem_core::dynamic::DynamicUnit::new(cfg.rows, cfg.alpha, d)?;
    }
    Ok(())
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Renders a config that [`parse_config`] reads back unchanged.
pub fn render_config(cfg: &SimConfig) -> String {
    let mut s = String::new();
    let opt = |o: Option<usize>| o.map_or("none".to_string(), |v| v.to_string());
    let _ = writeln!(s, "[layout]");
    let _ = writeln!(s, "scheme = {}", cfg.scheme);
    let _ = writeln!(s, "alpha = {}", cfg.alpha);
    let _ = writeln!(s, "banks = {}", cfg.banks);
    let _ = writeln!(s, "rows = {}", cfg.rows);
    let _ = writeln!(s, "words = {}", cfg.words);
    let _ = writeln!(s, "coded_rows = {}", opt(cfg.coded_rows));
    let _ = writeln!(s, "\n[engine]");
    let _ = writeln!(s, "access_ratio = {}", cfg.access_ratio);
    let _ = writeln!(s, "core_cycle_ns = {}", cfg.core_cycle_ns);
    let _ = writeln!(s, "queue_depth = {}", cfg.controller.queue_depth);
    let _ = writeln!(s, "write_threshold = {}", cfg.controller.write_threshold);
    let _ = writeln!(s, "write_cap = {}", opt(cfg.controller.write_cap_per_bank));
    let _ = writeln!(s, "idle_write_drain = {}", cfg.controller.idle_write_drain);
    let _ = writeln!(s, "burst = {}", cfg.burst);
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "verify = {}", cfg.verify);
    let d = cfg.dynamic.unwrap_or_default();
    let _ = writeln!(s, "\n[dynamic]");
    let _ = writeln!(s, "enabled = {}", cfg.dynamic.is_some());
    let _ = writeln!(s, "r = {}", d.r);
    let _ = writeln!(s, "period = {}", d.period);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use codedmem_core::controller::ControllerConfig;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse_config("").unwrap(), SimConfig::default());
    }

    #[test]
    fn sections_fill_fields() {
        let c = parse_config(
            "[layout]\nscheme = III\nbanks = 9\nalpha = 0.5\n\n[engine]\naccess_ratio = 6\nwrite_cap = 2\n\n[dynamic]\nenabled = yes\nr = 0.1\nperiod = 500\n",
        )
        .unwrap();
        assert_eq!(c.scheme, Scheme::SchemeIII);
        assert_eq!(c.banks, 9);
        assert_eq!(c.alpha, 0.5);
        assert_eq!(c.access_ratio, 6);
        assert_eq!(c.controller.write_cap_per_bank, Some(2));
        assert_eq!(c.dynamic, Some(DynamicConfig { r: 0.1, period: 500 }));
    }

    #[test]
    fn render_round_trips() {
        let c = SimConfig {
            scheme: Scheme::SchemeII,
            alpha: 0.3,
            coded_rows: Some(4),
            dynamic: None,
            controller: ControllerConfig {
                idle_write_drain: false,
                ..ControllerConfig::default()
            },
            ..SimConfig::default()
        };
        assert_eq!(parse_config(&render_config(&c)).unwrap(), c);
        let d = SimConfig {
            dynamic: Some(DynamicConfig { r: 0.05, period: 77 }),
            ..SimConfig::default()
        };
        assert_eq!(parse_config(&render_config(&d)).unwrap(), d);
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse_config("[layout]\nalpha = 1.5\n").unwrap_err();
        assert!(e.to_string().contains("alpha"), "{e}");
        assert_eq!(e.exit_code(), 2);
        let e = parse_config("[engine]\naccess_ratio = fast\n").unwrap_err();
        assert!(e.to_string().contains("engine.access_ratio"), "{e}");
        let e = parse_config("[engine]\ncolour = red\n").unwrap_err();
        assert!(e.to_string().contains("engine.colour"), "{e}");
        let e = parse_config("[layout]\nscheme = V\n").unwrap_err();
        assert!(e.to_string().contains("layout.scheme"), "{e}");
        let e = parse_config("[dynamic]\nenabled = true\nr = 0.5\n").unwrap_err();
        assert!(e.to_string().contains('r'), "{e}");
    }
}
