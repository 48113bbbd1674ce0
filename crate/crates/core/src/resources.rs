//! Loads the shipped data directory into ready-to-use handles.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::heuristics::{RuleConfig, RuleEngine, RuleVerdict};
use crate::lexicon::Lexicon;
use crate::seedgen::{generate_all, RuleSet, SeedSet};
use crate::textproc::{analyze, Analysis, EmojiLexicon, MarkerLexicons, MatchMode, Matcher, WordList};

/// File locations; defaults are the names used under `data/`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPaths {
    pub lexicon: PathBuf,
    pub seed_rules: PathBuf,
    pub published_seeds: PathBuf,
    pub emoji_pleasant: PathBuf,
    pub emoji_unpleasant: PathBuf,
    pub conditional_markers: PathBuf,
    pub modal_markers: PathBuf,
    pub body_parts: PathBuf,
    pub sports: PathBuf,
    pub rules_config: PathBuf,
}

impl DataPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let d = dir.as_ref();
        DataPaths {
            lexicon: d.join("lexicon.tsv"),
            seed_rules: d.join("seed_rules.tsv"),
            published_seeds: d.join("seeds_286.txt"),
            emoji_pleasant: d.join("emoji_pleasant.txt"),
            emoji_unpleasant: d.join("emoji_unpleasant.txt"),
            conditional_markers: d.join("conditional_markers.txt"),
            modal_markers: d.join("modal_markers.txt"),
            body_parts: d.join("body_parts.txt"),
            sports: d.join("sports.txt"),
            rules_config: d.join("rules.toml"),
        }
    }

    /// Fails on the first path that does not exist.
    pub fn validate(&self) -> Result<()> {
        for p in [
            &self.lexicon,
            &self.seed_rules,
            &self.published_seeds,
            &self.emoji_pleasant,
            &self.emoji_unpleasant,
            &self.conditional_markers,
            &self.modal_markers,
            &self.body_parts,
            &self.sports,
            &self.rules_config,
        ] {
            if !p.is_file() {
                return Err(Error::io(
                    p.clone(),
                    std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
                ));
            }
        }
        Ok(())
    }
}

/// Repository root `data/` directory, for tests and examples.
pub fn default_data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

#[derive(Debug, Clone)]
pub struct Resources {
    pub lexicon: Lexicon,
    pub rules: RuleSet,
    pub seeds: SeedSet,
    pub matcher: Matcher,
    pub emoji: EmojiLexicon,
    pub markers: MarkerLexicons,
    pub engine: RuleEngine,
}

impl Resources {
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        Self::load(&DataPaths::in_dir(dir))
    }

    pub fn load(paths: &DataPaths) -> Result<Self> {
        paths.validate()?;
        let lexicon = Lexicon::load(&paths.lexicon)?;
        let rules = RuleSet::load(&paths.seed_rules)?;
        let seeds = generate_all(&lexicon, &rules)?;
        let matcher = Matcher::new(seeds.texts())?;
        let emoji = EmojiLexicon::load(&paths.emoji_pleasant, &paths.emoji_unpleasant)?;
        let markers = MarkerLexicons {
            conditional: WordList::load(&paths.conditional_markers, MatchMode::Exact)?,
            modal: WordList::load(&paths.modal_markers, MatchMode::Exact)?,
            body_parts: WordList::load(&paths.body_parts, MatchMode::Affixed)?,
        };
        let engine = RuleEngine::new(
            RuleConfig::load(&paths.rules_config)?,
            WordList::load(&paths.sports, MatchMode::Affixed)?,
        );
        Ok(Resources {
            lexicon,
            rules,
            seeds,
            matcher,
            emoji,
            markers,
            engine,
        })
    }

    pub fn analyze(&self, text: &str) -> Analysis {
        analyze(text, &self.matcher, &self.emoji, &self.markers)
    }

    /// Rule verdict for a text, or `None` when it carries no seed.
    pub fn judge(&self, text: &str) -> Option<RuleVerdict> {
        let a = self.analyze(text);
        self.engine.judge_analysis(&a).ok()
    }
}
