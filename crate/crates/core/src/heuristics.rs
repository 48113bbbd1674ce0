//! Ordered, traceable rule engine for seed-bearing tweets.
//!
//! Rules are evaluated in the configured order and the first one whose
//! condition holds decides the label. The verdict records which rule fired.
//!
//! | id | condition | label |
//! |----|-----------|-------|
//! | R1 | sports vocabulary present | safe |
//! | R2 | pleasant emoji and no unpleasant emoji | safe |
//! | R3 | laughter and no unpleasant emoji | safe |
//! | R4 | unpleasant emoji | dangerous |
//! | R5 | question mark or modal marker | dangerous |
//! | R6 | nothing but seed words once mentions and punctuation are dropped | dangerous |
//! | R7 | always | dangerous |

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, Error, Result};
use crate::label::Label;
use crate::textproc::{Analysis, FeatureVector, SeedMatch, Token, TokenKind, WordList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleId {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
}

impl RuleId {
    pub const ALL: [RuleId; 7] = [
        RuleId::R1,
        RuleId::R2,
        RuleId::R3,
        RuleId::R4,
        RuleId::R5,
        RuleId::R6,
        RuleId::R7,
    ];

    pub fn label(self) -> Label {
        match self {
            RuleId::R1 | RuleId::R2 | RuleId::R3 => Label::Safe,
            _ => Label::Dangerous,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            RuleId::R1 => "threat in a sports context is not dangerous",
            RuleId::R2 => "threat softened by a pleasant emoji is not dangerous",
            RuleId::R3 => "threat softened by laughter is not dangerous",
            RuleId::R4 => "threat combined with an unpleasant emoji is dangerous",
            RuleId::R5 => "threat mitigated by a question or modal is still dangerous",
            RuleId::R6 => "bare one-phrase threat is dangerous",
            RuleId::R7 => "default: a direct threat is dangerous",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    /// Decided by an explicit guideline rule.
    Guideline,
    /// Fell through to the default rule.
    Default,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleVerdict {
    pub label: Label,
    pub fired_rules: Vec<RuleId>,
    pub confidence: Confidence,
}

/// Rule order and toggles, read from a TOML file:
///
/// ```toml
/// order = ["R1", "R2", "R3", "R4", "R5", "R6", "R7"]
/// [enabled]
/// R3 = false
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    pub order: Vec<RuleId>,
    pub enabled: BTreeMap<RuleId, bool>,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            order: RuleId::ALL.to_vec(),
            enabled: RuleId::ALL.iter().map(|&r| (r, true)).collect(),
        }
    }
}

impl RuleConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_to_string(path)?)
    }

    pub fn parse(content: &str) -> Result<Self> {
        let cfg: RuleConfig = toml::from_str(content).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for r in &self.order {
            if !seen.insert(*r) {
                return Err(Error::Config(format!("rule {r} listed twice in order")));
            }
        }
        if self.order.last() != Some(&RuleId::R7) {
            return Err(Error::Config("R7 must be the last rule in order".into()));
        }
        if self.enabled.get(&RuleId::R7) == Some(&false) {
            return Err(Error::Config("R7 (default) cannot be disabled".into()));
        }
        Ok(())
    }

    /// Copy with the given rules switched on or off.
    pub fn with_toggles(&self, toggles: &BTreeMap<RuleId, bool>) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.enabled.extend(toggles.iter().map(|(&r, &on)| (r, on)));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn is_enabled(&self, rule: RuleId) -> bool {
        self.enabled.get(&rule).copied().unwrap_or(true)
    }
}

/// True iff some word or hashtag token is in the sports vocabulary.
pub fn detect_sports_context(tokens: &[Token], sports: &WordList) -> bool {
    tokens.iter().any(|t| match t.kind {
        TokenKind::Word => sports.matches(&t.text),
        TokenKind::Hashtag => t.text[1..]
            .split('_')
            .any(|part| !part.is_empty() && sports.matches(part)),
        _ => false,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleStep {
    pub rule: RuleId,
    pub description: String,
    pub enabled: bool,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct RuleEngine {
    config: RuleConfig,
    sports: WordList,
}

impl RuleEngine {
    pub fn new(config: RuleConfig, sports: WordList) -> Self {
        RuleEngine { config, sports }
    }

    pub fn config(&self) -> &RuleConfig {
        &self.config
    }

    pub fn sports(&self) -> &WordList {
        &self.sports
    }

    fn holds(rule: RuleId, f: &FeatureVector, matches: &[SeedMatch], sports: bool) -> bool {
        match rule {
            RuleId::R1 => sports,
            RuleId::R2 => f.emoji_pleasant > 0 && f.emoji_unpleasant == 0,
            RuleId::R3 => f.has_laughter && f.emoji_unpleasant == 0,
            RuleId::R4 => f.emoji_unpleasant > 0,
            RuleId::R5 => f.is_question || f.has_modal,
            RuleId::R6 => {
                let seed_tokens: usize = matches.iter().map(|m| m.token_span.len()).sum();
                f.token_count as usize == seed_tokens
            }
            RuleId::R7 => true,
        }
    }

    /// Judges a seed-bearing tweet. `sports_context` of `None` means unknown
    /// and is treated as no sports context.
    pub fn judge(
        &self,
        features: &FeatureVector,
        matches: &[SeedMatch],
        sports_context: Option<bool>,
    ) -> Result<RuleVerdict> {
        if matches.is_empty() {
            return Err(Error::NoSeed);
        }
        let sports = sports_context.unwrap_or(false);
        let fired = self
            .config
            .order
            .iter()
            .copied()
            .filter(|&r| self.config.is_enabled(r))
            .find(|&r| Self::holds(r, features, matches, sports))
            .unwrap_or(RuleId::R7);
        Ok(RuleVerdict {
            label: fired.label(),
            fired_rules: vec![fired],
            confidence: if fired == RuleId::R7 {
                Confidence::Default
            } else {
                Confidence::Guideline
            },
        })
    }

    /// Judges an analyzed text, detecting sports context from its tokens.
    pub fn judge_analysis(&self, analysis: &Analysis) -> Result<RuleVerdict> {
        let sports = detect_sports_context(&analysis.tokens, &self.sports);
        self.judge(&analysis.features, &analysis.matches, Some(sports))
    }

    /// Every rule in evaluation order with whether it is enabled and whether
    /// its condition holds for `analysis`.
    pub fn trace(&self, analysis: &Analysis) -> Vec<RuleStep> {
        let sports = detect_sports_context(&analysis.tokens, &self.sports);
        self.config
            .order
            .iter()
            .map(|&rule| RuleStep {
                rule,
                description: rule.description().to_string(),
                enabled: self.config.is_enabled(rule),
                holds: Self::holds(rule, &analysis.features, &analysis.matches, sports),
            })
            .collect()
    }
}
