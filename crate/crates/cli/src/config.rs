//! `key = value` configuration files mirroring [`PipelineConfig`].

use std::path::Path;

use poi_core::PipelineConfig;

use crate::error::{Error, Result};

/// Applies one `key = value` setting.
pub fn set(cfg: &mut PipelineConfig, key: &str, value: &str) -> Result<()> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
    }
    match key {
        "theta_t_min_stay" => cfg.theta_t_min_stay = num(key, value)?,
        "theta_t_gap" => cfg.theta_t_gap = num(key, value)?,
        "theta_d_valid" => cfg.theta_d_valid = num(key, value)?,
        "theta_l_eps_cap" => cfg.theta_l_eps_cap = num(key, value)?,
        "th_g" => cfg.th_g = num(key, value)?,
        "th_n" => cfg.th_n = num(key, value)?,
        "th_l" => cfg.th_l = num(key, value)?,
        "slot_len" => cfg.slot_len = num(key, value)?,
        "earth_radius" => cfg.earth_radius = num(key, value)?,
        "label_margin_warn" => cfg.label_margin_warn = num(key, value)?,
        "min_pts" => cfg.min_pts = num(key, value)?,
        "noise_window" => cfg.noise_window = num(key, value)?,
        _ => return Err(Error::Config(format!("unknown key {key:?}"))),
    }
    Ok(())
}

/// Parses config text on top of the defaults. Blank lines and `#` comments
/// are ignored.
pub fn parse(text: &str) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
        set(&mut cfg, key.trim(), value.trim())?;
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse(&text)
}

/// Renders every field in `key = value` form, readable by [`parse`].
pub fn render(cfg: &PipelineConfig) -> String {
    format!(
        "theta_t_min_stay = {}\ntheta_t_gap = {}\ntheta_d_valid = {}\ntheta_l_eps_cap = {}\n\
         th_g = {}\nth_n = {}\nth_l = {}\nslot_len = {}\nearth_radius = {}\n\
         label_margin_warn = {}\nmin_pts = {}\nnoise_window = {}\n",
        cfg.theta_t_min_stay,
        cfg.theta_t_gap,
        cfg.theta_d_valid,
        cfg.theta_l_eps_cap,
        cfg.th_g,
        cfg.th_n,
        cfg.th_l,
        cfg.slot_len,
        cfg.earth_radius,
        cfg.label_margin_warn,
        cfg.min_pts,
        cfg.noise_window,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_overrides_defaults() {
        let cfg = parse("# thresholds\ntheta_t_min_stay = 600\n\nth_g=25.5 # tuned\n").unwrap();
        assert_eq!(cfg.theta_t_min_stay, 600);
        assert_eq!(cfg.th_g, 25.5);
        assert_eq!(cfg.th_n, 5.0);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(matches!(parse("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(parse("th_g: 1"), Err(Error::Config(_))));
        assert!(matches!(parse("slot_len = 2.5"), Err(Error::Config(_))));
        assert_eq!(parse("th_g = x").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn render_round_trips() {
        let cfg = PipelineConfig {
            th_l: 750.0,
            min_pts: 2,
            ..PipelineConfig::default()
        };
        assert_eq!(parse(&render(&cfg)).unwrap(), cfg);
    }
}
