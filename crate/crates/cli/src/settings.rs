use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context};
use foundry::config::{Config, Manifest};

/// Flag values resolved against the config file: an explicit flag wins,
/// then `section.key`, then bare `key`, then the built-in default.
pub struct Settings {
    config: Config,
    section: String,
    manifest_path: Option<PathBuf>,
    pub manifest: Manifest,
}

impl Settings {
    pub fn load(path: Option<&Path>, section: &str, manifest_path: Option<PathBuf>) -> anyhow::Result<Settings> {
        let config = match path {
            Some(p) => Config::load(p).with_context(|| format!("reading config {}", p.display()))?,
            None => Config::default(),
        };
        let mut manifest = Manifest::new(section);
        if let Some(p) = path {
            manifest.input(p)?;
        }
        Ok(Settings { config, section: section.to_string(), manifest_path, manifest })
    }

    pub fn opt<T: FromStr>(&self, cli: Option<T>, key: &str) -> anyhow::Result<Option<T>>
    where
        T::Err: Display,
    {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.config.get(&self.section, key) {
            Some(v) => v.parse().map(Some).map_err(|e| anyhow!("config value for {}.{key} ({v:?}): {e}", self.section)),
            None => Ok(None),
        }
    }

    pub fn or<T: FromStr>(&self, cli: Option<T>, key: &str, default: T) -> anyhow::Result<T>
    where
        T::Err: Display,
    {
        Ok(self.opt(cli, key)?.unwrap_or(default))
    }

    pub fn req<T: FromStr>(&self, cli: Option<T>, key: &str) -> anyhow::Result<T>
    where
        T::Err: Display,
    {
        self.opt(cli, key)?.ok_or_else(|| anyhow!("--{key} is required (flag or config key {}.{key})", self.section))
    }

    pub fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        self.manifest.input(path).with_context(|| format!("hashing {}", path.display()))?;
        Ok(())
    }

    /// Records the parameter and passes it through.
    pub fn param<T: ToString>(&mut self, name: &str, value: T) -> T {
        self.manifest.param(name, value.to_string());
        value
    }

    /// Writes the manifest next to `main_output` unless `--manifest` was given.
    pub fn finish(mut self, main_output: &Path) -> anyhow::Result<()> {
        self.manifest.output(main_output);
        let path = self.manifest_path.clone().unwrap_or_else(|| {
            let mut name = main_output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
            name.push(".manifest.json");
            main_output.with_file_name(name)
        });
        self.manifest.write(&path).with_context(|| format!("writing manifest {}", path.display()))
    }
}

/// Comma-separated list value for flags such as `--ratios 0.9,0.05,0.05`.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|x| x.trim().parse::<T>().map_err(|e| format!("{x:?}: {e}")))
            .collect::<Result<_, _>>()
            .map(List)
    }
}

impl<T: Display> Display for List<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}
