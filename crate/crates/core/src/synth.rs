//! Deterministic synthetic data: an annotated tweet corpus with a chosen
//! class and agreement structure, matcher stress texts, and a tweet world
//! for simulated collection.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::{DateTime, Duration, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{strip_seeds, Corpus, Tweet};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::resources::Resources;
use crate::textproc::{tokenize, Matcher, TokenKind};

const FILLERS: &[&str] = &[
    "والله",
    "يا",
    "بس",
    "شو",
    "هذا",
    "هاد",
    "كده",
    "الحين",
    "اليوم",
    "بكره",
    "امس",
    "الناس",
    "الدنيا",
    "كلام",
    "حلو",
    "زين",
    "مره",
    "كثير",
    "شويه",
    "ليش",
    "وين",
    "متي",
    "كيف",
    "انت",
    "انتم",
    "احنا",
    "هو",
    "هي",
    "عندي",
    "عندك",
    "صاحبي",
    "خويا",
    "ولد",
    "بنت",
    "البيت",
    "الشغل",
    "الفلوس",
    "الوقت",
    "الحياه",
    "القهوه",
    "الشاي",
    "السياره",
    "الطريق",
    "الجو",
    "حر",
    "برد",
    "خلاص",
    "طيب",
    "يعني",
    "اصلا",
    "عشان",
    "علشان",
    "لان",
    "من",
    "في",
    "مع",
    "عن",
    "الي",
    "قبل",
    "بعد",
    "فوق",
    "تحت",
    "كل",
    "شي",
    "حاجه",
    "زي",
    "مثل",
    "واجد",
    "برشا",
    "ياسر",
    "هلا",
    "مرحبا",
    "تعال",
    "شوف",
    "اسمع",
    "قال",
    "قلت",
    "نقول",
    "صار",
    "كان",
    "جا",
    "خلي",
    "معاك",
    "معي",
    "الصبح",
    "الليل",
    "المدرسه",
    "الجامعه",
    "الاكل",
    "الماي",
];

const CONDITIONALS: &[&str] = &["لو", "اذا", "لحسن"];
const MODALS: &[&str] = &["ودي", "ممكن", "شكلي"];
const BODY_PARTS: &[&str] = &["وجهك", "قفاك", "عينك", "وجوهكم"];
const SPORTS: &[&str] = &["الهلال", "الملعب", "جمهوركم", "المباراه", "الدوري"];
const PLEASANT: &[&str] = &["🙂", "😂", "😘", "❤️", "😅"];
const UNPLEASANT: &[&str] = &["🔪", "😡", "🤬", "💣", "🔥"];
const NEUTRAL_EMOJI: &[&str] = &["👀", "🌹", "☕"];
const LAUGHTER: &[&str] = &["ههههه", "هههههههه", "hahaha"];

/// Seeds and seed-free filler words drawn from the loaded resources.
#[derive(Debug, Clone)]
pub struct Vocab {
    seeds: Vec<String>,
    multiword: Vec<String>,
    fillers: Vec<String>,
    matcher: Matcher,
}

impl Vocab {
    pub fn new(res: &Resources) -> Self {
        let seeds: Vec<String> = res.seeds.texts().map(str::to_string).collect();
        let seed_tokens: HashSet<&str> = seeds.iter().flat_map(|s| s.split_whitespace()).collect();
        let fillers = FILLERS
            .iter()
            .filter(|w| {
                !seed_tokens.contains(**w)
                    && !res.markers.conditional.matches(w)
                    && !res.markers.modal.matches(w)
                    && !res.markers.body_parts.matches(w)
                    && !res.engine.sports().matches(w)
            })
            .map(|w| w.to_string())
            .collect();
        let multiword = seeds.iter().filter(|s| s.contains(' ')).cloned().collect();
        Vocab {
            seeds,
            multiword,
            fillers,
            matcher: res.matcher.clone(),
        }
    }

    pub fn seeds(&self) -> &[String] {
        &self.seeds
    }

    pub fn fillers(&self) -> &[String] {
        &self.fillers
    }

    fn seed(&self, rng: &mut ChaCha8Rng) -> String {
        self.seeds.choose(rng).unwrap().clone()
    }

    fn filler(&self, rng: &mut ChaCha8Rng) -> String {
        self.fillers.choose(rng).unwrap().clone()
    }

    fn fillers_n(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
        (0..n).map(|_| self.filler(rng)).collect()
    }
}

fn pick(rng: &mut ChaCha8Rng, items: &[&str]) -> String {
    items.choose(rng).unwrap().to_string()
}

fn mention(rng: &mut ChaCha8Rng) -> String {
    format!("@user{}", rng.gen_range(1..500))
}

/// Sizes for [`annotated_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusShape {
    pub safe: usize,
    pub dangerous: usize,
    /// Tweets per class left with fewer than two words once seeds are removed.
    pub short_safe: usize,
    pub short_dangerous: usize,
    /// Annotator A × annotator B label counts (safe first).
    pub agreement: [[u64; 2]; 2],
}

impl CorpusShape {
    /// 5,011 tweets: 3,636 safe and 1,375 dangerous, 411 and 155 of them
    /// short, annotated with agreement counts [[3570, 52], [70, 1319]].
    pub const REFERENCE: CorpusShape = CorpusShape {
        safe: 3636,
        dangerous: 1375,
        short_safe: 411,
        short_dangerous: 155,
        agreement: [[3570, 52], [70, 1319]],
    };

    pub fn total(&self) -> usize {
        self.safe + self.dangerous
    }
}

struct Profile {
    mention: f64,
    question: f64,
    pleasant: f64,
    unpleasant: f64,
    neutral_emoji: f64,
    conditional: f64,
    modal: f64,
    body: f64,
    laughter: f64,
    sports: f64,
}

const SAFE_PROFILE: Profile = Profile {
    mention: 0.55,
    question: 0.12,
    pleasant: 0.15,
    unpleasant: 0.03,
    neutral_emoji: 0.05,
    conditional: 0.04,
    modal: 0.05,
    body: 0.04,
    laughter: 0.12,
    sports: 0.10,
};

const DANGEROUS_PROFILE: Profile = Profile {
    mention: 0.65,
    question: 0.07,
    pleasant: 0.03,
    unpleasant: 0.18,
    neutral_emoji: 0.04,
    conditional: 0.10,
    modal: 0.08,
    body: 0.09,
    laughter: 0.02,
    sports: 0.01,
};

fn word_count(text: &str) -> usize {
    tokenize(text).iter().filter(|t| t.kind == TokenKind::Word).count()
}

fn short_text(v: &Vocab, rng: &mut ChaCha8Rng) -> (String, usize) {
    let s = v.seed(rng);
    match rng.gen_range(0..7) {
        0 => (s, 1),
        1 => (format!("{} {s}", mention(rng)), 1),
        2 => (format!("{s} {}", v.filler(rng)), 1),
        3 => (format!("{} {s} {}", mention(rng), pick(rng, UNPLEASANT)), 1),
        4 => (format!("{s} {}", v.seed(rng)), 2),
        5 => (format!("{} {s}", v.filler(rng)), 1),
        _ => (format!("#{} {s}!", v.filler(rng)), 1),
    }
}

fn long_text(v: &Vocab, rng: &mut ChaCha8Rng, p: &Profile) -> (String, usize) {
    let n = rng.gen_range(2..12);
    let mut parts = v.fillers_n(rng, n);
    let seeds = if rng.gen_bool(0.15) { 2 } else { 1 };
    for _ in 0..seeds {
        let at = rng.gen_range(0..=parts.len());
        parts.insert(at, v.seed(rng));
    }
    let mut insert = |rng: &mut ChaCha8Rng, prob: f64, words: &[&str]| {
        if rng.gen_bool(prob) {
            let at = rng.gen_range(0..=parts.len());
            parts.insert(at, pick(rng, words));
        }
    };
    insert(rng, p.conditional, CONDITIONALS);
    insert(rng, p.modal, MODALS);
    insert(rng, p.body, BODY_PARTS);
    insert(rng, p.sports, SPORTS);
    insert(rng, p.laughter, LAUGHTER);
    if rng.gen_bool(p.mention) {
        for _ in 0..rng.gen_range(1..4) {
            parts.insert(0, mention(rng));
        }
    }
    for (prob, set) in [
        (p.pleasant, PLEASANT),
        (p.unpleasant, UNPLEASANT),
        (p.neutral_emoji, NEUTRAL_EMOJI),
    ] {
        if rng.gen_bool(prob) {
            parts.push(pick(rng, set));
        }
    }
    let mut text = parts.join(" ");
    if rng.gen_bool(p.question) {
        text.push_str(if rng.gen_bool(0.5) { "؟" } else { " ?" });
    }
    (text, seeds)
}

/// Builds a labeled corpus of `shape.total()` tweets. Every tweet carries at
/// least one seed; exactly `short_*` tweets per class drop below two words
/// once their seeds are removed. Annotator labels from "A" and "B" follow
/// `shape.agreement`; gold labels follow agreement, with disputed tweets
/// resolved so that the class totals match `shape`.
pub fn annotated_corpus(res: &Resources, shape: &CorpusShape, seed: u64) -> Result<Corpus> {
    let m = shape.agreement;
    let total: u64 = m.iter().flatten().sum();
    if total as usize != shape.total() {
        return Err(Error::Config(format!(
            "agreement counts sum to {total}, expected {}",
            shape.total()
        )));
    }
    let disputed = (m[0][1] + m[1][0]) as usize;
    let safe_from_disputed = shape.safe.checked_sub(m[0][0] as usize).filter(|s| *s <= disputed);
    let Some(safe_from_disputed) = safe_from_disputed else {
        return Err(Error::Config(
            "class totals are incompatible with the agreement counts".into(),
        ));
    };
    if shape.short_safe > shape.safe || shape.short_dangerous > shape.dangerous {
        return Err(Error::Config("more short tweets than tweets in a class".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s, d) = (Label::Safe, Label::Dangerous);
    let mut disputed_gold: Vec<Label> = (0..disputed)
        .map(|i| if i < safe_from_disputed { s } else { d })
        .collect();
    disputed_gold.shuffle(&mut rng);
    let mut rows: Vec<(Label, Label, Label)> = Vec::with_capacity(shape.total());
    rows.extend((0..m[0][0]).map(|_| (s, s, s)));
    rows.extend((0..m[1][1]).map(|_| (d, d, d)));
    let pairs = (0..m[0][1]).map(|_| (s, d)).chain((0..m[1][0]).map(|_| (d, s)));
    rows.extend(pairs.zip(disputed_gold).map(|((a, b), g)| (a, b, g)));
    rows.shuffle(&mut rng);

    let v = Vocab::new(res);
    let mut short_left = BTreeMap::from([(s, shape.short_safe), (d, shape.short_dangerous)]);
    let base = DateTime::from_timestamp(1_583_020_800, 0).unwrap();
    let mut tweets = Vec::with_capacity(rows.len());
    for (i, (a, b, gold)) in rows.into_iter().enumerate() {
        let left = short_left.get_mut(&gold).unwrap();
        let short = *left > 0;
        if short {
            *left -= 1;
        }
        let text = loop {
            let (text, seeds) = if short {
                short_text(&v, &mut rng)
            } else {
                let p = if gold == d { &DANGEROUS_PROFILE } else { &SAFE_PROFILE };
                long_text(&v, &mut rng, p)
            };
            let (rest, removed) = strip_seeds(&text, &v.matcher);
            if removed == seeds && (word_count(&rest) < 2) == short {
                break text;
            }
        };
        let mut t = Tweet::new(format!("t{i:05}"), text)
            .with_label(gold)
            .with_author(format!("u{:04}", rng.gen_range(0..1500)));
        t.created_at = Some(base + Duration::seconds(rng.gen_range(0..14 * 86_400)));
        t.annotator_labels = BTreeMap::from([("A".to_string(), a), ("B".to_string(), b)]);
        tweets.push(t);
    }
    Ok(Corpus::from_tweets(tweets).0)
}

/// Writes `seed` with diacritics, tatweel or hamza forms that normalize back to it.
pub fn noisy_variant(seed: &str, rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    let mut word_start = true;
    for c in seed.chars() {
        if c == ' ' {
            out.push(c);
            word_start = true;
            continue;
        }
        if word_start && c == 'ا' && rng.gen_bool(0.5) {
            out.push(if rng.gen_bool(0.5) { 'أ' } else { 'إ' });
        } else {
            out.push(c);
        }
        if !word_start && rng.gen_bool(0.15) {
            out.push('\u{0640}');
        }
        match rng.gen_range(0..6) {
            0 => out.push('\u{064E}'),
            1 => out.push('\u{0651}'),
            _ => {}
        }
        word_start = false;
    }
    out
}

/// Stress texts for the seed matcher: planted seeds (plain and noisy),
/// adjacent seeds, truncated multiword seeds, hashtags, near-miss decoys,
/// punctuation and emoji.
pub fn matcher_texts(res: &Resources, n: usize, seed: u64) -> Vec<String> {
    let v = Vocab::new(res);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let units = rng.gen_range(1..16);
            let mut parts = Vec::with_capacity(units);
            for _ in 0..units {
                let unit = match rng.gen_range(0..100) {
                    0..=44 => v.filler(&mut rng),
                    45..=64 => v.seed(&mut rng),
                    65..=74 => {
                        let s = v.seed(&mut rng);
                        noisy_variant(&s, &mut rng)
                    }
                    75..=79 => {
                        let s = v.multiword.choose(&mut rng).unwrap();
                        s.split_whitespace().next().unwrap().to_string()
                    }
                    80..=82 => format!("#{}", v.seed(&mut rng).replace(' ', "_")),
                    83..=86 => format!("{}{}", v.seed(&mut rng), pick(&mut rng, &["!", "،", "...", "؟"])),
                    87..=89 => format!("ت{}", v.seed(&mut rng)),
                    90..=93 => pick(&mut rng, &[PLEASANT, UNPLEASANT].concat()),
                    94..=96 => mention(&mut rng),
                    _ => format!("{}{}", v.seed(&mut rng), pick(&mut rng, UNPLEASANT)),
                };
                parts.push(unit);
            }
            let sep = if rng.gen_bool(0.1) { "  \n" } else { " " };
            parts.join(sep)
        })
        .collect()
}

/// A synthetic platform: timelines for every user plus the ground truth.
#[derive(Debug, Clone)]
pub struct World {
    /// Sorted by (author, id).
    pub tweets: Vec<Tweet>,
    pub window_start: DateTime<Utc>,
    pub window_end: DateTime<Utc>,
    /// Ids of tweets carrying at least one seed.
    pub planted: BTreeSet<String>,
    /// Authors of planted tweets.
    pub threat_users: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorldShape {
    pub users: usize,
    pub tweets_per_user: usize,
    pub threat_users: usize,
    pub planted: usize,
    /// Seed-free tweets that contain a seed as a substring.
    pub decoys: usize,
    pub window_days: i64,
    pub history_days: i64,
}

impl Default for WorldShape {
    /// 1,000 tweets from 100 users; 100 seed-bearing tweets by 20 users.
    fn default() -> Self {
        WorldShape {
            users: 100,
            tweets_per_user: 10,
            threat_users: 20,
            planted: 100,
            decoys: 40,
            window_days: 14,
            history_days: 60,
        }
    }
}

/// Builds a world in which every planted tweet's author has at least one
/// planted tweet inside the search window, so the search and timeline
/// phases together can recover every planted tweet.
pub fn collector_world(res: &Resources, shape: &WorldShape, seed: u64) -> Result<World> {
    let total = shape.users * shape.tweets_per_user;
    if shape.threat_users > shape.users
        || shape.planted < shape.threat_users
        || shape.planted > shape.threat_users * shape.tweets_per_user
        || shape.planted + shape.decoys > total
        || shape.window_days <= 0
        || shape.history_days < shape.window_days
    {
        return Err(Error::Config(format!("inconsistent world shape {shape:?}")));
    }
    let v = Vocab::new(res);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window_end = DateTime::from_timestamp(1_584_230_400, 0).unwrap();
    let window_start = window_end - Duration::days(shape.window_days);
    let history_start = window_end - Duration::days(shape.history_days);

    let users: Vec<String> = (0..shape.users).map(|u| format!("u{u:04}")).collect();
    let mut threat: Vec<usize> = (0..shape.users).collect();
    threat.shuffle(&mut rng);
    threat.truncate(shape.threat_users);
    threat.sort_unstable();

    // planted slots: first slot of each threat user, then round robin
    let mut planted_slots: BTreeSet<(usize, usize)> = threat.iter().map(|&u| (u, 0)).collect();
    let mut k = 1;
    while planted_slots.len() < shape.planted {
        for &u in &threat {
            if planted_slots.len() < shape.planted {
                planted_slots.insert((u, k));
            }
        }
        k += 1;
    }
    let mut free: Vec<(usize, usize)> = (0..shape.users)
        .flat_map(|u| (0..shape.tweets_per_user).map(move |j| (u, j)))
        .filter(|s| !planted_slots.contains(s))
        .collect();
    free.shuffle(&mut rng);
    let decoy_slots: BTreeSet<(usize, usize)> = free.into_iter().take(shape.decoys).collect();

    let secs = |from: DateTime<Utc>, to: DateTime<Utc>| (to - from).num_seconds();
    let mut tweets = Vec::with_capacity(total);
    let mut planted = BTreeSet::new();
    let mut threat_users = BTreeSet::new();
    for (u, user) in users.iter().enumerate() {
        for j in 0..shape.tweets_per_user {
            let slot = (u, j);
            let is_planted = planted_slots.contains(&slot);
            let in_window = (is_planted && j == 0) || rng.gen_bool(0.3);
            let created = if in_window {
                window_start + Duration::seconds(rng.gen_range(0..secs(window_start, window_end)))
            } else {
                history_start + Duration::seconds(rng.gen_range(0..secs(history_start, window_end)))
            };
            let text = loop {
                let n = rng.gen_range(2..10);
                let mut parts = v.fillers_n(&mut rng, n);
                if is_planted {
                    let at = rng.gen_range(0..=parts.len());
                    let s = v.seed(&mut rng);
                    parts.insert(
                        at,
                        if rng.gen_bool(0.3) {
                            noisy_variant(&s, &mut rng)
                        } else {
                            s
                        },
                    );
                } else if decoy_slots.contains(&slot) {
                    let at = rng.gen_range(0..=parts.len());
                    let s = v.seed(&mut rng);
                    parts.insert(at, format!("ت{s}"));
                }
                let text = parts.join(" ");
                if v.matcher.find(&text).is_empty() != is_planted {
                    break text;
                }
            };
            let id = format!("{:07}", u * shape.tweets_per_user + j + 1_000_000);
            if is_planted {
                planted.insert(id.clone());
                threat_users.insert(user.clone());
            }
            let mut t = Tweet::new(id, text).with_author(user.clone());
            t.created_at = Some(created);
            tweets.push(t);
        }
    }
    Ok(World {
        tweets,
        window_start,
        window_end,
        planted,
        threat_users,
    })
}
