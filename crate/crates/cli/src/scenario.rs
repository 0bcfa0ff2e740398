//! Scenario files: one `key = value` per line, `#` starts a comment.

use std::collections::BTreeMap;
use std::path::Path;

use fxduo::{Gbm, Market};

use crate::error::CliError;

const MARKET_KEYS: [&str; 8] = ["alpha_e", "alpha_i", "phi", "theta", "c_e", "c_i", "s", "u"];
const RATE_KEYS: [&str; 4] = ["i0", "mu", "sigma", "t"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub market: Market,
    pub rate: Gbm,
    pub discount: f64,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, f64> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| CliError::Parse { line: n + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let canon = key.to_ascii_lowercase();
            if !MARKET_KEYS.contains(&canon.as_str()) && !RATE_KEYS.contains(&canon.as_str()) && canon != "discount" {
                return Err(bad(format!("unknown key `{key}`")));
            }
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| bad(format!("{key}: `{}` is not a number", value.trim())))?;
            if values.insert(canon, value).is_some() {
                return Err(bad(format!("{key} given twice")));
            }
        }
        let get = |k: &str| values.get(k).copied().ok_or_else(|| CliError::Missing(display_key(k)));
        let market = Market {
            alpha_e: get("alpha_e")?,
            alpha_i: get("alpha_i")?,
            phi: get("phi")?,
            theta: get("theta")?,
            c_e: get("c_e")?,
            c_i: get("c_i")?,
            s: get("s")?,
            u: get("u")?,
        };
        market.validate()?;
        let rate = Gbm::new(get("i0")?, get("mu")?, get("sigma")?, get("t")?)?;
        let discount = values.get("discount").copied().unwrap_or(1.0);
        if !(discount > 0.0) || !discount.is_finite() {
            return Err(CliError::Model(fxduo::Error::Domain {
                name: "discount",
                requirement: "positive and finite",
                value: discount,
            }));
        }
        Ok(Self { market, rate, discount })
    }
}

fn display_key(k: &str) -> String {
    match k {
        "c_e" => "C_e".into(),
        "c_i" => "C_i".into(),
        "i0" => "I0".into(),
        other => other.into(),
    }
}
