//! Flat `key = value` config files. Flags override file values; unknown keys
//! are rejected before any computation starts.

use std::path::Path;
use std::str::FromStr;

pub struct ConfigMap {
    entries: Vec<(String, String)>,
}

impl ConfigMap {
    pub fn empty() -> ConfigMap {
        ConfigMap { entries: Vec::new() }
    }

    pub fn load(path: &Path) -> Result<ConfigMap, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {}", path.display(), e))?;
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {} is not `key = value`: {:?}", lineno + 1, raw))?;
            entries.push((key.trim().to_string(), value.trim().to_string()));
        }
        Ok(ConfigMap { entries })
    }

    fn take_raw(&mut self, key: &str) -> Option<String> {
        let pos = self.entries.iter().position(|(k, _)| k == key)?;
        Some(self.entries.remove(pos).1)
    }

    /// Fill `slot` from the config when the flag was not given.
    pub fn fill<T: FromStr>(&mut self, key: &str, slot: &mut Option<T>) -> Result<(), String> {
        if let Some(raw) = self.take_raw(key) {
            if slot.is_none() {
                let parsed = raw
                    .parse::<T>()
                    .map_err(|_| format!("config key {} has unparsable value {:?}", key, raw))?;
                *slot = Some(parsed);
            }
        }
        Ok(())
    }

    /// Fill a repeatable flag from a comma-separated config value.
    pub fn fill_list<T: FromStr>(&mut self, key: &str, slot: &mut Vec<T>) -> Result<(), String> {
        if let Some(raw) = self.take_raw(key) {
            if slot.is_empty() {
                for part in raw.split(',') {
                    let parsed = part.trim().parse::<T>().map_err(|_| {
                        format!("config key {} has unparsable entry {:?}", key, part)
                    })?;
                    slot.push(parsed);
                }
            }
        }
        Ok(())
    }

    /// Reject leftovers: every config key must be a known flag.
    pub fn finish(self) -> Result<(), String> {
        if let Some((key, _)) = self.entries.first() {
            return Err(format!("unknown config key {:?}", key));
        }
        Ok(())
    }
}
