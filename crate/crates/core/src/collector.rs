//! Two-phase collection against an abstract tweet source: seed search inside
//! a time window, then timeline crawls of every author found. Every kept
//! tweet is re-checked locally with the seed matcher.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{ingest, Corpus, Tweet};
use crate::error::{Error, Result};
use crate::textproc::{normalize_str, Matcher};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SourceError {
    #[error("transient: {0}")]
    Transient(String),
    #[error("permanent: {0}")]
    Permanent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl Window {
    /// Half-open: `start <= t < end`.
    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end
    }
}

pub trait TweetSource {
    fn search(&mut self, query: &str, window: &Window) -> Result<Vec<Tweet>, SourceError>;
    fn timeline(&mut self, user_id: &str) -> Result<Vec<Tweet>, SourceError>;
}

/// Seconds on a clock that only moves when told to.
pub trait Clock {
    fn now(&self) -> f64;
    fn sleep(&mut self, secs: f64);
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimClock {
    now: f64,
}

impl SimClock {
    pub fn at(now: f64) -> Self {
        SimClock { now }
    }
}

impl Clock for SimClock {
    fn now(&self) -> f64 {
        self.now
    }

    fn sleep(&mut self, secs: f64) {
        if secs > 0.0 {
            self.now += secs;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateLimit {
    pub requests: u32,
    pub per_secs: f64,
}

impl RateLimit {
    pub fn per_second(requests: u32) -> Self {
        RateLimit {
            requests,
            per_secs: 1.0,
        }
    }

    fn rate(&self) -> f64 {
        self.requests as f64 / self.per_secs
    }
}

/// Token bucket holding at most one token, so requests are evenly spaced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenBucket {
    limit: RateLimit,
    tokens: f64,
    updated: f64,
}

impl TokenBucket {
    pub fn new(limit: RateLimit, now: f64) -> Self {
        TokenBucket {
            limit,
            tokens: 1.0,
            updated: now,
        }
    }

    fn refill(&mut self, now: f64) {
        self.tokens = (self.tokens + (now - self.updated) * self.limit.rate()).min(1.0);
        self.updated = now;
    }

    /// Blocks (on `clock`) until a request may be sent.
    pub fn acquire(&mut self, clock: &mut impl Clock) {
        self.refill(clock.now());
        if self.tokens < 1.0 {
            clock.sleep((1.0 - self.tokens) / self.limit.rate());
            self.refill(clock.now());
            self.tokens = self.tokens.max(1.0);
        }
        self.tokens -= 1.0;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectorConfig {
    pub window: Window,
    pub rate_limit: RateLimit,
    /// Attempts per request, including the first.
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles afterwards.
    pub base_backoff_secs: f64,
}

impl CollectorConfig {
    pub fn new(window: Window) -> Self {
        CollectorConfig {
            window,
            rate_limit: RateLimit::per_second(2),
            max_attempts: 5,
            base_backoff_secs: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Searching,
    CrawlingTimelines,
    Done,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub requests: u64,
    pub retries: u64,
    pub tweets_searched: u64,
    pub users_found: u64,
    pub timeline_tweets: u64,
    pub seed_bearing_timeline_tweets: u64,
    pub failed_users: u64,
}

/// Everything needed to resume a job besides the collected tweets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobState {
    pub phase: Phase,
    /// Seed queries finished (in sorted seed order).
    pub seeds_done: usize,
    pub users: BTreeSet<String>,
    /// Timelines finished (in sorted user order).
    pub users_done: usize,
    pub counters: Counters,
    pub clock: f64,
    pub bucket: TokenBucket,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectionResult {
    /// Sorted by (author, id).
    pub tweets: Vec<Tweet>,
    pub users: BTreeSet<String>,
    pub counters: Counters,
    pub elapsed_secs: f64,
}

pub struct Collector<'a, S, C> {
    source: S,
    clock: C,
    matcher: &'a Matcher,
    seeds: Vec<String>,
    config: CollectorConfig,
    state: JobState,
    collected: BTreeMap<String, Tweet>,
}

const STATE_FILE: &str = "state.json";
const IDS_FILE: &str = "collected_ids.txt";
const TWEETS_FILE: &str = "collected.jsonl";

impl<'a, S: TweetSource, C: Clock> Collector<'a, S, C> {
    pub fn new(source: S, clock: C, matcher: &'a Matcher, config: CollectorConfig) -> Self {
        let now = clock.now();
        let bucket = TokenBucket::new(config.rate_limit, now);
        Collector {
            source,
            clock,
            matcher,
            seeds: matcher.patterns().to_vec(),
            config,
            state: JobState {
                phase: Phase::Searching,
                seeds_done: 0,
                users: BTreeSet::new(),
                users_done: 0,
                counters: Counters::default(),
                clock: now,
                bucket,
            },
            collected: BTreeMap::new(),
        }
    }

    pub fn state(&self) -> &JobState {
        &self.state
    }

    pub fn clock(&self) -> &C {
        &self.clock
    }

    fn request<T>(
        &mut self,
        what: &str,
        mut call: impl FnMut(&mut S) -> Result<T, SourceError>,
    ) -> Result<T, SourceError> {
        let mut attempt = 1;
        loop {
            self.state.bucket.acquire(&mut self.clock);
            self.state.counters.requests += 1;
            match call(&mut self.source) {
                Ok(v) => return Ok(v),
                Err(SourceError::Transient(msg)) if attempt < self.config.max_attempts => {
                    log::debug!("{what}: attempt {attempt} failed ({msg}), retrying");
                    self.clock
                        .sleep(self.config.base_backoff_secs * f64::from(1u32 << (attempt - 1)));
                    self.state.counters.retries += 1;
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn keep(&mut self, tweet: Tweet) -> bool {
        if self.collected.contains_key(&tweet.id) {
            return false;
        }
        self.collected.insert(tweet.id.clone(), tweet);
        true
    }

    /// Performs one unit of work (one seed query or one timeline). Returns
    /// false once the job is done.
    pub fn step(&mut self) -> Result<bool> {
        match self.state.phase {
            Phase::Searching => {
                if let Some(seed) = self.seeds.get(self.state.seeds_done).cloned() {
                    let window = self.config.window;
                    let found = self
                        .request(&format!("search `{seed}`"), |s| s.search(&seed, &window))
                        .map_err(|e| Error::Source(format!("search `{seed}`: {e}")))?;
                    for t in found {
                        self.state.counters.tweets_searched += 1;
                        let in_window = t.created_at.is_some_and(|c| window.contains(c));
                        if in_window && !self.matcher.find(&t.text).is_empty() {
                            self.state.users.insert(t.author_id.clone());
                            self.keep(t);
                        }
                    }
                    self.state.counters.users_found = self.state.users.len() as u64;
                    self.state.seeds_done += 1;
                } else {
                    self.state.phase = Phase::CrawlingTimelines;
                }
            }
            Phase::CrawlingTimelines => {
                if let Some(user) = self.state.users.iter().nth(self.state.users_done).cloned() {
                    match self.request(&format!("timeline {user}"), |s| s.timeline(&user)) {
                        Ok(tweets) => {
                            for t in tweets {
                                self.state.counters.timeline_tweets += 1;
                                if !self.matcher.find(&t.text).is_empty() {
                                    self.state.counters.seed_bearing_timeline_tweets += 1;
                                    self.keep(t);
                                }
                            }
                        }
                        Err(e) => {
                            log::warn!("timeline of {user} skipped: {e}");
                            self.state.counters.failed_users += 1;
                        }
                    }
                    self.state.users_done += 1;
                } else {
                    self.state.phase = Phase::Done;
                }
            }
            Phase::Done => return Ok(false),
        }
        self.state.clock = self.clock.now();
        Ok(self.state.phase != Phase::Done)
    }

    /// Runs at most `units` steps; returns whether work remains.
    pub fn run_for(&mut self, units: usize) -> Result<bool> {
        for _ in 0..units {
            if !self.step()? {
                return Ok(false);
            }
        }
        Ok(self.state.phase != Phase::Done)
    }

    pub fn run(mut self) -> Result<CollectionResult> {
        while self.step()? {}
        Ok(self.finish())
    }

    pub fn finish(self) -> CollectionResult {
        let mut tweets: Vec<Tweet> = self.collected.into_values().collect();
        tweets.sort_by(|a, b| (&a.author_id, &a.id).cmp(&(&b.author_id, &b.id)));
        CollectionResult {
            tweets,
            users: self.state.users,
            counters: self.state.counters,
            elapsed_secs: self.clock.now(),
        }
    }

    /// Writes the job state, the collected id set and the collected tweets.
    pub fn checkpoint(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let state_path = dir.join(STATE_FILE);
        let json = serde_json::to_string_pretty(&self.state)?;
        std::fs::write(&state_path, json).map_err(|e| Error::io(&state_path, e))?;

        let ids_path = dir.join(IDS_FILE);
        let mut ids = String::new();
        for id in self.collected.keys() {
            ids.push_str(id);
            ids.push('\n');
        }
        std::fs::write(&ids_path, ids).map_err(|e| Error::io(&ids_path, e))?;

        Corpus::from_tweets(self.collected.values().cloned())
            .0
            .save(dir.join(TWEETS_FILE))
    }

    /// Restores a job from [`Collector::checkpoint`] output. The clock is
    /// moved to the saved time via `sleep`.
    pub fn resume(
        source: S,
        mut clock: C,
        matcher: &'a Matcher,
        config: CollectorConfig,
        dir: impl AsRef<Path>,
    ) -> Result<Self> {
        let dir = dir.as_ref();
        let state_path = dir.join(STATE_FILE);
        let state: JobState = serde_json::from_str(&crate::error::read_to_string(&state_path)?)?;
        let tweets = ingest(dir.join(TWEETS_FILE))?.corpus;

        let ids_path = dir.join(IDS_FILE);
        let file = std::fs::File::open(&ids_path).map_err(|e| Error::io(&ids_path, e))?;
        let mut ids = BTreeSet::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(&ids_path, e))?;
            if !line.is_empty() {
                ids.insert(line);
            }
        }
        let tweet_ids: BTreeSet<String> = tweets.tweets().iter().map(|t| t.id.clone()).collect();
        if ids != tweet_ids {
            return Err(Error::Config(format!(
                "checkpoint in {} is inconsistent: id set and tweets differ",
                dir.display()
            )));
        }
        clock.sleep(state.clock - clock.now());
        let mut c = Collector::new(source, clock, matcher, config);
        c.collected = tweets.tweets().iter().map(|t| (t.id.clone(), t.clone())).collect();
        c.state = state;
        Ok(c)
    }
}

/// In-memory source with phrase-containment search and injectable failures.
#[derive(Debug, Clone)]
pub struct SyntheticSource {
    tweets: Vec<Tweet>,
    normalized: Vec<String>,
    by_user: BTreeMap<String, Vec<usize>>,
    failures: FailurePlan,
    attempts: BTreeMap<String, u32>,
}

/// Deterministic failure injection keyed by request, so a resumed job sees
/// the same failures as an uninterrupted one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FailurePlan {
    /// Probability that a request key starts with transient failures.
    pub transient_rate: f64,
    /// Transient failures before success for an affected key.
    pub transient_failures: u32,
    /// Users whose timeline always fails.
    pub broken_users: BTreeSet<String>,
    pub seed: u64,
}

fn fnv1a(seed: u64, key: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for b in key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl FailurePlan {
    fn failures_for(&self, key: &str) -> u32 {
        let u = (fnv1a(self.seed, key) >> 11) as f64 / (1u64 << 53) as f64;
        if u < self.transient_rate {
            self.transient_failures
        } else {
            0
        }
    }
}

impl SyntheticSource {
    pub fn new(tweets: Vec<Tweet>) -> Self {
        Self::with_failures(tweets, FailurePlan::default())
    }

    pub fn with_failures(tweets: Vec<Tweet>, failures: FailurePlan) -> Self {
        let normalized = tweets.iter().map(|t| normalize_str(&t.text)).collect();
        let mut by_user: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, t) in tweets.iter().enumerate() {
            by_user.entry(t.author_id.clone()).or_default().push(i);
        }
        SyntheticSource {
            tweets,
            normalized,
            by_user,
            failures,
            attempts: BTreeMap::new(),
        }
    }

    fn gate(&mut self, key: String) -> Result<(), SourceError> {
        let n = self.attempts.entry(key.clone()).or_insert(0);
        *n += 1;
        if *n <= self.failures.failures_for(&key) {
            return Err(SourceError::Transient(format!("simulated outage for {key}")));
        }
        Ok(())
    }
}

impl TweetSource for SyntheticSource {
    fn search(&mut self, query: &str, window: &Window) -> Result<Vec<Tweet>, SourceError> {
        self.gate(format!("search:{query}"))?;
        let q = normalize_str(query);
        Ok(self
            .tweets
            .iter()
            .zip(&self.normalized)
            .filter(|(t, n)| n.contains(&q) && t.created_at.is_some_and(|c| window.contains(c)))
            .map(|(t, _)| t.clone())
            .collect())
    }

    fn timeline(&mut self, user_id: &str) -> Result<Vec<Tweet>, SourceError> {
        if self.failures.broken_users.contains(user_id) {
            return Err(SourceError::Permanent(format!("timeline of {user_id} unavailable")));
        }
        self.gate(format!("timeline:{user_id}"))?;
        Ok(self
            .by_user
            .get(user_id)
            .map(|ix| ix.iter().map(|&i| self.tweets[i].clone()).collect())
            .unwrap_or_default())
    }
}

pub fn write_result(result: &CollectionResult, mut out: impl Write) -> Result<()> {
    Corpus::from_tweets(result.tweets.iter().cloned())
        .0
        .write_jsonl(&mut out)
}
