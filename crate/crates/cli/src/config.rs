use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dangspeech_core::heuristics::{RuleEngine, RuleId};
use dangspeech_core::resources::{DataPaths, Resources};
use serde::Deserialize;

use crate::error::CliError;

/// Contents of a `--config` TOML file. Relative paths resolve against the
/// file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub paths: PathOverrides,
    #[serde(default)]
    pub rules: BTreeMap<RuleId, bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathOverrides {
    pub lexicon: Option<PathBuf>,
    pub seed_rules: Option<PathBuf>,
    pub published_seeds: Option<PathBuf>,
    pub emoji_pleasant: Option<PathBuf>,
    pub emoji_unpleasant: Option<PathBuf>,
    pub conditional_markers: Option<PathBuf>,
    pub modal_markers: Option<PathBuf>,
    pub body_parts: Option<PathBuf>,
    pub sports: Option<PathBuf>,
    pub rules_config: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(v) = p.as_mut() {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        };
        fix(&mut cfg.data_dir);
        fix(&mut cfg.out);
        let o = &mut cfg.paths;
        for p in [
            &mut o.lexicon,
            &mut o.seed_rules,
            &mut o.published_seeds,
            &mut o.emoji_pleasant,
            &mut o.emoji_unpleasant,
            &mut o.conditional_markers,
            &mut o.modal_markers,
            &mut o.body_parts,
            &mut o.sports,
            &mut o.rules_config,
        ] {
            fix(p);
        }
        Ok(cfg)
    }
}

/// Effective settings: command-line flags win over the config file, which
/// wins over defaults.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub data_dir: PathBuf,
    pub paths: DataPaths,
    pub seed: u64,
    pub out: PathBuf,
    pub rule_toggles: BTreeMap<RuleId, bool>,
}

impl CliConfig {
    pub fn resolve(
        data_dir: Option<PathBuf>,
        seed: Option<u64>,
        out: Option<PathBuf>,
        config: Option<&Path>,
    ) -> Result<Self, CliError> {
        let file = match config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let data_dir = data_dir.or(file.data_dir).unwrap_or_else(|| PathBuf::from("data"));
        let mut paths = DataPaths::in_dir(&data_dir);
        let o = file.paths;
        let set = |slot: &mut PathBuf, v: Option<PathBuf>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut paths.lexicon, o.lexicon);
        set(&mut paths.seed_rules, o.seed_rules);
        set(&mut paths.published_seeds, o.published_seeds);
        set(&mut paths.emoji_pleasant, o.emoji_pleasant);
        set(&mut paths.emoji_unpleasant, o.emoji_unpleasant);
        set(&mut paths.conditional_markers, o.conditional_markers);
        set(&mut paths.modal_markers, o.modal_markers);
        set(&mut paths.body_parts, o.body_parts);
        set(&mut paths.sports, o.sports);
        set(&mut paths.rules_config, o.rules_config);
        Ok(CliConfig {
            data_dir,
            paths,
            seed: seed.or(file.seed).unwrap_or(0),
            out: out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            rule_toggles: file.rules,
        })
    }

    /// Loads every data file (validating all paths first) and applies the
    /// rule toggles.
    pub fn resources(&self) -> Result<Resources, CliError> {
        let mut res = Resources::load(&self.paths)?;
        if !self.rule_toggles.is_empty() {
            let cfg = res.engine.config().with_toggles(&self.rule_toggles)?;
            res.engine = RuleEngine::new(cfg, res.engine.sports().clone());
        }
        Ok(res)
    }

    /// Path under the output directory, creating the directory.
    pub fn out_file(&self, name: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out).map_err(|e| CliError::io(&self.out, e))?;
        Ok(self.out.join(name))
    }
}
