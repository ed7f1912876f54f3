//! INI protocol files. Unknown sections and keys, duplicates and missing
//! required keys are errors.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use ini::Ini;

/// Key/value pairs of one section, in sorted key order.
#[derive(Clone, Debug, Default)]
pub struct Section {
    pub name: String,
    values: BTreeMap<String, String>,
    taken: std::cell::RefCell<Vec<String>>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.taken.borrow_mut().push(key.to_string());
        self.values
            .get(key)
            .map(String::as_str)
            .filter(|v| !v.is_empty())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| anyhow!("[{}] is missing the required key '{key}'", self.name))
    }

    /// Fails on keys that no accessor asked for.
    pub fn finish(&self) -> Result<()> {
        let taken = self.taken.borrow();
        if let Some(k) = self.values.keys().find(|k| !taken.contains(k)) {
            bail!("[{}] has unknown key '{k}'", self.name);
        }
        Ok(())
    }
}

/// Parsed configuration file.
#[derive(Debug)]
pub struct ConfigFile {
    pub sections: Vec<Section>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| anyhow!("malformed INI: {e}"))?;
        let mut sections: Vec<Section> = Vec::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if props.iter().next().is_some() {
                    bail!("key/value pairs must appear inside a [section]");
                }
                continue;
            };
            let name = name.trim().to_string();
            if sections.iter().any(|s| s.name == name) {
                bail!("section [{name}] appears twice");
            }
            let mut values = BTreeMap::new();
            for (k, v) in props.iter() {
                if values
                    .insert(k.trim().to_string(), v.trim().to_string())
                    .is_some()
                {
                    bail!("[{name}] sets '{k}' twice");
                }
            }
            sections.push(Section {
                name,
                values,
                taken: Default::default(),
            });
        }
        Ok(ConfigFile { sections })
    }

    pub fn section(&self, name: &str) -> Result<&Section> {
        self.sections
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| anyhow!("missing section [{name}]"))
    }

    /// Only the named sections (and sections starting with one of `prefixes`) may appear.
    pub fn allow_only(&self, names: &[&str], prefixes: &[&str]) -> Result<()> {
        for s in &self.sections {
            let ok =
                names.contains(&s.name.as_str()) || prefixes.iter().any(|p| s.name.starts_with(p));
            if !ok {
                bail!("unknown section [{}]", s.name);
            }
        }
        Ok(())
    }
}

/// Comma-separated values.
pub fn list(value: &str) -> Vec<&str> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

/// Integers as a comma list, or a range `a..b` / `a..b:step` (inclusive).
pub fn int_grid(key: &str, value: &str) -> Result<Vec<usize>> {
    let parse = |s: &str| -> Result<usize> {
        s.trim()
            .parse()
            .map_err(|_| anyhow!("'{key}': '{s}' is not a non-negative integer"))
    };
    if let Some((a, rest)) = value.split_once("..") {
        let (b, step) = match rest.split_once(':') {
            Some((b, s)) => (b, parse(s)?),
            None => (rest, 1),
        };
        let (a, b) = (parse(a)?, parse(b)?);
        if step == 0 || a > b {
            bail!("'{key}': range {value} must have start <= end and a positive step");
        }
        return Ok((a..=b).step_by(step).collect());
    }
    let v = list(value)
        .into_iter()
        .map(parse)
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        bail!("'{key}' is empty");
    }
    Ok(v)
}

pub fn real_list(key: &str, value: &str) -> Result<Vec<f64>> {
    let v = list(value)
        .into_iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| anyhow!("'{key}': '{s}' is not a number"))
        })
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        bail!("'{key}' is empty");
    }
    Ok(v)
}

pub fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .trim()
        .parse()
        .map_err(|_| anyhow!("'{key}': '{value}' is not a non-negative integer"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_fail() {
        let c = ConfigFile::parse("[sweep]\nn = 10\nbogus = 1\n").unwrap();
        let s = c.section("sweep").unwrap();
        assert_eq!(s.get("n"), Some("10"));
        let e = s.finish().unwrap_err().to_string();
        assert!(e.contains("bogus"), "{e}");
    }

    #[test]
    fn duplicates_fail() {
        assert!(ConfigFile::parse("[a]\nx = 1\nx = 2\n").is_err());
        assert!(ConfigFile::parse("[a]\nx = 1\n[a]\ny = 2\n").is_err());
        assert!(ConfigFile::parse("x = 1\n[a]\n").is_err());
    }

    #[test]
    fn semicolons_stay_in_values() {
        let c = ConfigFile::parse("# comment\n[a]\nfitness = onemax;noise=gauss:1\n").unwrap();
        assert_eq!(
            c.section("a").unwrap().get("fitness"),
            Some("onemax;noise=gauss:1")
        );
    }

    #[test]
    fn grids() {
        assert_eq!(int_grid("l", "14..30:8").unwrap(), vec![14, 22, 30]);
        assert_eq!(int_grid("l", "1..3").unwrap(), vec![1, 2, 3]);
        assert_eq!(int_grid("l", "5, 7").unwrap(), vec![5, 7]);
        assert_eq!(int_grid("l", "14..350:2").unwrap().len(), 169);
        assert!(int_grid("l", "3..1").is_err());
        assert!(int_grid("l", "1..3:0").is_err());
        assert!(int_grid("l", "x").is_err());
        assert_eq!(real_list("r", "0.1, 1").unwrap(), vec![0.1, 1.0]);
    }
}
