//! Line-oriented custom schedule files.
//!
//! ```text
//! # comment
//! name=squares
//! kind=density            # or pointmass
//! alpha=(1-t)^2
//! beta=t^2
//! alpha_dot=-2*(1-t)
//! beta_dot=2*t
//! ```

use std::path::Path;

use super::{Expr, Schedule, ScheduleKind};
use crate::error::{Error, Result};

pub fn load_schedule_file(path: impl AsRef<Path>) -> Result<Schedule> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_schedule(&text)
}

pub fn parse_schedule(text: &str) -> Result<Schedule> {
    let mut name = None;
    let mut kind = None;
    let mut exprs: [Option<Expr>; 4] = Default::default();
    const KEYS: [&str; 4] = ["alpha", "beta", "alpha_dot", "beta_dot"];

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: line_no, message };
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key=value, got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "name" => {
                if value.is_empty() {
                    return Err(err("empty name".into()));
                }
                name = Some(value.to_string());
            }
            "kind" => {
                kind = Some(match value {
                    "density" => ScheduleKind::DensityAdmitting,
                    "pointmass" => ScheduleKind::PointMass,
                    other => return Err(err(format!("kind must be density or pointmass, got '{other}'"))),
                });
            }
            k => {
                let slot = KEYS
                    .iter()
                    .position(|&x| x == k)
                    .ok_or_else(|| err(format!("unknown key '{k}'")))?;
                let e = Expr::parse(value).map_err(|e| err(format!("{k}: {e}")))?;
                exprs[slot] = Some(e);
            }
        }
    }

    let missing = |what: &str| Error::Parse { line: text.lines().count(), message: format!("missing '{what}'") };
    let name = name.ok_or_else(|| missing("name"))?;
    let kind = kind.ok_or_else(|| missing("kind"))?;
    let [a, b, ad, bd] = exprs;
    let a = a.ok_or_else(|| missing("alpha"))?;
    let b = b.ok_or_else(|| missing("beta"))?;
    let ad = ad.ok_or_else(|| missing("alpha_dot"))?;
    let bd = bd.ok_or_else(|| missing("beta_dot"))?;
    Ok(Schedule::custom(name, kind, move |t| a.eval(t), move |t| b.eval(t), move |t| ad.eval(t), move |t| bd.eval(t)))
}
