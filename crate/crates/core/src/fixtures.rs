//! Deterministic synthetic corpora with planted ground truth.
//!
//! The generator builds a small world of typed entities (people, places,
//! companies, teams, lowercase substances), untyped concepts that are linked
//! often enough to count as non-entities, and rare untyped topics. Documents
//! are written from sentence templates in the style of encyclopedia articles:
//! the first mention of a related entity is usually linked, later mentions
//! mostly are not. Noise is planted on purpose: mentions of entities the
//! document never links, names missing from the KB, links to obscure topics,
//! and non-referential anchors such as "the club".
//!
//! Gold mentions are the planted entity mentions with in-scope labels,
//! linked or not. Non-referential anchors, concepts and unknown names are
//! never gold.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bundled::FIGER_TYPES;
use crate::emit::{JsonlWriter, MentionRecord, SentenceRecord};
use crate::error::{Error, Result};
use crate::ingest::document_to_line;
use crate::io::AtomicWriter;
use crate::model::{Document, EntityId, KnowledgeBase, TokenSpan};
use crate::pos::BuiltinTagger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Mostly clean documents; most sentences survive selection.
    #[default]
    Default,
    /// Heavier noise, closer to the rejection rate seen on real articles.
    RealisticMix,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Preset::Default),
            "realistic-mix" => Ok(Preset::RealisticMix),
            other => Err(Error::Config(format!(
                "unknown preset {other:?} (expected default or realistic-mix)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Rates {
    /// Entity slot filled by an entity the document never links.
    foreign: f64,
    /// Person slot filled by a name absent from the KB.
    stranger: f64,
    /// Organization slot filled by a linked untyped topic.
    obscure: f64,
    /// Linked mention whose surface is a description instead of a name.
    non_referential: f64,
    link_first: f64,
    link_again: f64,
    link_concept: f64,
}

impl Preset {
    fn rates(self) -> Rates {
        match self {
            Preset::Default => Rates {
                foreign: 0.04,
                stranger: 0.04,
                obscure: 0.03,
                non_referential: 0.03,
                link_first: 0.9,
                link_again: 0.12,
                link_concept: 0.7,
            },
            Preset::RealisticMix => Rates {
                foreign: 0.3,
                stranger: 0.35,
                obscure: 0.3,
                non_referential: 0.03,
                link_first: 0.8,
                link_again: 0.1,
                link_concept: 0.7,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureConfig {
    pub seed: u64,
    pub documents: usize,
    pub preset: Preset,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            seed: 7,
            documents: 200,
            preset: Preset::Default,
        }
    }
}

/// Raw KB type → hierarchy path. Raw types missing here stay untyped.
pub const TYPE_MAPPING: &[(&str, &str)] = &[
    ("/people/person", "/person"),
    ("/sports/pro_athlete", "/person/athlete"),
    ("/music/group_member", "/person/musician"),
    ("/government/politician", "/person/politician"),
    ("/film/actor", "/person/actor"),
    ("/book/author", "/person/author"),
    ("/location/location", "/location"),
    ("/location/citytown", "/location/city"),
    ("/location/country", "/location/country"),
    ("/organization/organization", "/organization"),
    ("/business/business_operation", "/organization/company"),
    ("/sports/sports_team", "/organization/sports_team"),
    ("/chemistry/chemical_compound", "/chemistry"),
    ("/medicine/disease", "/medicine/disease"),
    ("/food/food", "/food"),
];

const OCCUPATIONS: &[&str] = &[
    "/sports/pro_athlete",
    "/music/group_member",
    "/government/politician",
    "/film/actor",
    "/book/author",
];

const SYLLABLES: &[&str] = &[
    "ka", "lo", "ven", "ri", "ta", "mor", "sel", "vi", "dan", "tor", "el", "ma", "nu", "ris", "ko", "ber", "len", "sa",
    "quin", "ho", "dra", "mi", "zel", "po", "run", "ga", "fe", "lin", "os", "tav", "bre", "ni", "cas", "vo",
];

const CONCEPTS: &[&str] = &[
    "striker",
    "goalkeeper",
    "harbour",
    "sonata",
    "vineyard",
    "referee",
    "tramway",
    "novelist",
    "glacier",
    "chorus",
];

const SUBSTANCE_KINDS: &[(&str, &str)] = &[
    ("acid", "/chemistry/chemical_compound"),
    ("oxide", "/chemistry/chemical_compound"),
    ("fever", "/medicine/disease"),
    ("syndrome", "/medicine/disease"),
    ("bread", "/food/food"),
    ("cheese", "/food/food"),
];

const COMPANY_SUFFIXES: &[&str] = &["Group", "Industries", "Holdings"];
const TEAM_SUFFIXES: &[&str] = &["United", "Rovers", "Athletic"];
const OBSCURE_SUFFIXES: &[&str] = &["Cup", "Prize", "Festival"];
const ADJECTIVES: &[&str] = &[
    "Finnish",
    "American",
    "German",
    "Swedish",
    "Italian",
    "Norwegian",
    "Japanese",
];
const TITLES: &[&str] = &["President", "Dr.", "Prime Minister", "Captain", "Senator", "General"];
const DAYS: &[&str] = &[
    "Monday",
    "Tuesday",
    "Wednesday",
    "Thursday",
    "Friday",
    "Saturday",
    "Sunday",
];
const MONTHS: &[&str] = &[
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

const INTRO_PERSON: &str = "{SELF} ( born {Y} ) is a {A} {N} from {C} .";
const INTRO_ORG: &str = "{SELF} is a {A} organization based in {C} .";
const INTRO_CITY: &str = "{SELF} is a town in {K} .";

const BODY: &[&str] = &[
    "{P} was born in {C} in {M} {Y} .",
    "In {Y} , {P} joined {O} as a {N} .",
    "{S} signed for {O} in {M} {Y} .",
    "The {N} was built near {C} in {Y} .",
    "{T} {P} visited {C} on {D} .",
    "{P} met {P} in {C} .",
    "He later played for {O} and {O} .",
    "She studied the {N} with {P} .",
    "{P} was treated for {L} in {C} .",
    "It is rich in {L} and the {N} is popular .",
    "During {M} , {S} toured {K} with {P} .",
    "A {A} {N} from {C} praised {S} .",
    "{O} announced a deal with {O} on {D} .",
    "The {L} outbreak reached {C} in {Y} .",
    "{S} won the title again in {Y} .",
    "However , {P} left {O} after the {N} resigned .",
    "Many residents of {C} prefer {L} .",
    "There were reports of {L} near the {N} .",
    "Her father was a {N} in {C} .",
    "They moved to {K} in {Y} .",
    "{N} numbers grew in {C} after {Y} .",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Class {
    Person,
    City,
    Country,
    Company,
    Team,
    Substance,
    Concept,
    Obscure,
}

#[derive(Debug, Clone)]
struct Ent {
    id: EntityId,
    class: Class,
    /// Aliases, the preferred full name first.
    names: Vec<Vec<String>>,
    raw_types: Vec<&'static str>,
    labels: Vec<String>,
}

impl Ent {
    fn short_name(&self) -> &[String] {
        self.names.last().expect("entities have names")
    }
}

/// Counts of planted phenomena, for checking fixture assumptions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedCounts {
    pub documents: usize,
    pub sentences: usize,
    pub anchors: usize,
    pub non_referential_anchors: usize,
    pub concept_anchors: usize,
    pub obscure_anchors: usize,
    pub gold_mentions: usize,
    pub unlinked_gold_mentions: usize,
    pub foreign_mentions: usize,
    pub unknown_names: usize,
}

/// A generated corpus with its KB and gold annotations.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub config: FixtureConfig,
    pub documents: Vec<Document>,
    /// `(entity, raw type)` pairs.
    pub kb_types: Vec<(String, String)>,
    /// `(entity, alias)` pairs.
    pub kb_aliases: Vec<(String, String)>,
    /// Gold record for every sentence of every document.
    pub gold: Vec<SentenceRecord>,
    pub planted: PlantedCounts,
}

struct World {
    ents: Vec<Ent>,
    by_class: BTreeMap<Class, Vec<usize>>,
    first_names: Vec<String>,
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn reserved_words() -> BTreeSet<String> {
    let mut out: BTreeSet<String> = BTreeSet::new();
    let lists: [&[&str]; 8] = [
        CONCEPTS,
        COMPANY_SUFFIXES,
        TEAM_SUFFIXES,
        OBSCURE_SUFFIXES,
        ADJECTIVES,
        TITLES,
        DAYS,
        MONTHS,
    ];
    for list in lists {
        for w in list {
            out.extend(w.split_whitespace().map(|t| t.to_lowercase()));
        }
    }
    for template in BODY.iter().chain([&INTRO_PERSON, &INTRO_ORG, &INTRO_CITY]) {
        out.extend(template.split_whitespace().map(str::to_lowercase));
    }
    out
}

struct Coiner {
    used: BTreeSet<String>,
}

impl Coiner {
    fn coin(&mut self, rng: &mut ChaCha8Rng) -> String {
        loop {
            let n = rng.gen_range(2..=3);
            let word: String = (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect();
            if word.len() >= 4 && BuiltinTagger.tag_token(&word, false) == "NN" && self.used.insert(word.clone()) {
                return word;
            }
        }
    }
}

fn labels_for(raw_types: &[&str]) -> Vec<String> {
    let mapping: BTreeMap<&str, &str> = TYPE_MAPPING.iter().copied().collect();
    let set: BTreeSet<String> = raw_types
        .iter()
        .filter_map(|r| mapping.get(r))
        .map(|p| p.to_string())
        .collect();
    set.into_iter().collect()
}

fn split(name: &str) -> Vec<String> {
    name.split_whitespace().map(str::to_string).collect()
}

impl World {
    fn build(rng: &mut ChaCha8Rng, documents: usize) -> World {
        let mut coiner = Coiner { used: reserved_words() };
        let mut ents: Vec<Ent> = Vec::new();
        let push = |ents: &mut Vec<Ent>, id: String, class, names: Vec<Vec<String>>, raw_types: Vec<&'static str>| {
            let labels = labels_for(&raw_types);
            ents.push(Ent {
                id: EntityId::new(id),
                class,
                names,
                raw_types,
                labels,
            });
        };

        let first_names: Vec<String> = (0..80).map(|_| capitalize(&coiner.coin(rng))).collect();
        let mut surnames: Vec<String> = Vec::new();
        let mut people = BTreeSet::new();
        while people.len() < (2 * documents).max(60) {
            let first = first_names.choose(rng).unwrap().clone();
            let last = if !surnames.is_empty() && rng.gen_bool(0.06) {
                surnames.choose(rng).unwrap().clone()
            } else {
                let s = capitalize(&coiner.coin(rng));
                surnames.push(s.clone());
                s
            };
            if !people.insert((first.clone(), last.clone())) {
                continue;
            }
            let occupation = *OCCUPATIONS.choose(rng).unwrap();
            push(
                &mut ents,
                format!("{first}_{last}"),
                Class::Person,
                vec![vec![first, last.clone()], vec![last]],
                vec!["/people/person", occupation],
            );
        }

        let mut city_names = Vec::new();
        for _ in 0..(documents / 2).max(20) {
            let name = capitalize(&coiner.coin(rng));
            city_names.push(name.clone());
            push(
                &mut ents,
                name.clone(),
                Class::City,
                vec![vec![name]],
                vec!["/location/location", "/location/citytown"],
            );
        }
        for _ in 0..12 {
            let name = capitalize(&coiner.coin(rng));
            push(
                &mut ents,
                name.clone(),
                Class::Country,
                vec![vec![name]],
                vec!["/location/location", "/location/country"],
            );
        }
        for _ in 0..(documents / 4).max(15) {
            let base = capitalize(&coiner.coin(rng));
            let suffix = COMPANY_SUFFIXES.choose(rng).unwrap();
            push(
                &mut ents,
                format!("{base}_{suffix}"),
                Class::Company,
                vec![vec![base.clone(), suffix.to_string()], vec![base]],
                vec!["/organization/organization", "/business/business_operation"],
            );
        }
        // teams share their first word with a city, which exercises longest matching
        let team_count = (documents / 5).max(10).min(city_names.len());
        for city in city_names.choose_multiple(rng, team_count).cloned().collect::<Vec<_>>() {
            let suffix = TEAM_SUFFIXES.choose(rng).unwrap();
            push(
                &mut ents,
                format!("{city}_{suffix}"),
                Class::Team,
                vec![vec![city, suffix.to_string()]],
                vec!["/organization/organization", "/sports/sports_team"],
            );
        }
        for _ in 0..20 {
            let (kind, raw) = *SUBSTANCE_KINDS.choose(rng).unwrap();
            let base = coiner.coin(rng);
            push(
                &mut ents,
                format!("{}_{kind}", capitalize(&base)),
                Class::Substance,
                vec![vec![base, kind.to_string()]],
                vec![raw],
            );
        }
        for concept in CONCEPTS {
            push(
                &mut ents,
                capitalize(concept),
                Class::Concept,
                vec![vec![concept.to_string()]],
                vec!["/common/topic"],
            );
        }
        for _ in 0..30 {
            let base = capitalize(&coiner.coin(rng));
            let suffix = OBSCURE_SUFFIXES.choose(rng).unwrap();
            push(
                &mut ents,
                format!("{base}_{suffix}"),
                Class::Obscure,
                vec![vec![base, suffix.to_string()]],
                vec!["/base/misc/topic"],
            );
        }

        let mut by_class: BTreeMap<Class, Vec<usize>> = BTreeMap::new();
        for (i, e) in ents.iter().enumerate() {
            by_class.entry(e.class).or_default().push(i);
        }
        World {
            ents,
            by_class,
            first_names,
        }
    }

    fn pick(&self, rng: &mut ChaCha8Rng, class: Class) -> usize {
        *self.by_class[&class].choose(rng).unwrap()
    }
}

fn description(class: Class, rng: &mut ChaCha8Rng) -> &'static [&'static str] {
    let options: &[&[&str]] = match class {
        Class::Person => &[&["the", "player"], &["his", "father"], &["the", "singer"]],
        Class::Team => &[&["the", "club"], &["the", "side"]],
        Class::Company => &[&["the", "firm"], &["the", "company"]],
        _ => &[&["the", "town"], &["the", "area"]],
    };
    options.choose(rng).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokenRole {
    Plain,
    Name,
    Lowercase,
    Adjective,
}

/// Per-document generation state.
struct DocBuilder<'w> {
    world: &'w World,
    rates: Rates,
    self_ent: usize,
    pool: BTreeMap<Class, Vec<usize>>,
    seen: BTreeSet<usize>,
    foreign: BTreeSet<usize>,
    planted: PlantedCounts,
}

struct SentenceOut {
    tokens: Vec<String>,
    roles: Vec<TokenRole>,
    anchors: Vec<(TokenSpan, EntityId)>,
    gold: Vec<MentionRecord>,
}

impl<'w> DocBuilder<'w> {
    fn new(world: &'w World, rates: Rates, rng: &mut ChaCha8Rng) -> Self {
        let self_class = match rng.gen_range(0..100) {
            0..=54 => Class::Person,
            55..=69 => Class::Company,
            70..=84 => Class::Team,
            _ => Class::City,
        };
        let self_ent = world.pick(rng, self_class);
        let mut pool: BTreeMap<Class, Vec<usize>> = BTreeMap::new();
        let wanted = [
            (Class::Person, rng.gen_range(3..=5)),
            (Class::City, rng.gen_range(2..=3)),
            (Class::Country, 1),
            (Class::Company, rng.gen_range(1..=2)),
            (Class::Team, rng.gen_range(1..=2)),
            (Class::Substance, rng.gen_range(1..=2)),
        ];
        for (class, n) in wanted {
            let chosen: Vec<usize> = world.by_class[&class]
                .choose_multiple(rng, n)
                .copied()
                .filter(|&i| i != self_ent)
                .collect();
            pool.insert(class, chosen);
        }
        DocBuilder {
            world,
            rates,
            self_ent,
            pool,
            seen: BTreeSet::from([self_ent]),
            foreign: BTreeSet::new(),
            planted: PlantedCounts::default(),
        }
    }

    fn ent(&self, i: usize) -> &'w Ent {
        &self.world.ents[i]
    }

    /// Picks an entity of one of `classes` for a slot; the flag marks a
    /// foreign pick.
    fn choose(&mut self, rng: &mut ChaCha8Rng, classes: &[Class]) -> (usize, bool) {
        let class = *classes.choose(rng).unwrap();
        if rng.gen_bool(self.rates.foreign) {
            for _ in 0..20 {
                let i = self.world.pick(rng, class);
                let in_pool = self.pool.values().any(|v| v.contains(&i));
                if i != self.self_ent && !in_pool && !self.seen.contains(&i) {
                    self.foreign.insert(i);
                    return (i, true);
                }
            }
        }
        let candidates = &self.pool[&class];
        if candidates.is_empty() {
            return (self.self_ent, false);
        }
        (*candidates.choose(rng).unwrap(), false)
    }

    fn push_tokens(out: &mut SentenceOut, words: &[String], role: TokenRole) -> (usize, usize) {
        let b = out.tokens.len();
        out.tokens.extend(words.iter().cloned());
        out.roles.extend(std::iter::repeat_n(role, words.len()));
        (b, out.tokens.len())
    }

    fn mention(
        &mut self,
        rng: &mut ChaCha8Rng,
        out: &mut SentenceOut,
        sentence: usize,
        i: usize,
        foreign: bool,
        is_self: bool,
    ) {
        let ent = self.ent(i);
        let first = !self.seen.contains(&i);
        let linked = !is_self
            && !foreign
            && !self.foreign.contains(&i)
            && rng.gen_bool(if first {
                self.rates.link_first
            } else {
                self.rates.link_again
            });
        if linked && ent.class != Class::Substance && rng.gen_bool(self.rates.non_referential) {
            let words: Vec<String> = description(ent.class, rng).iter().map(|s| s.to_string()).collect();
            let (b, e) = Self::push_tokens(out, &words, TokenRole::Plain);
            out.anchors.push((TokenSpan::new(sentence, b, e), ent.id.clone()));
            self.planted.anchors += 1;
            self.planted.non_referential_anchors += 1;
            self.seen.insert(i);
            return;
        }
        let mut words: Vec<String> = if first || foreign || rng.gen_bool(0.3) {
            ent.names[0].clone()
        } else {
            ent.short_name().to_vec()
        };
        let role = if ent.class == Class::Substance {
            if out.tokens.is_empty() {
                words[0] = capitalize(&words[0]);
            }
            TokenRole::Lowercase
        } else {
            TokenRole::Name
        };
        let (b, e) = Self::push_tokens(out, &words, role);
        if linked {
            out.anchors.push((TokenSpan::new(sentence, b, e), ent.id.clone()));
            self.planted.anchors += 1;
        }
        if !ent.labels.is_empty() {
            out.gold.push(MentionRecord {
                b,
                e,
                entity: ent.id.0.clone(),
                labels: ent.labels.clone(),
            });
            self.planted.gold_mentions += 1;
            self.planted.unlinked_gold_mentions += usize::from(!linked);
        }
        self.planted.foreign_mentions += usize::from(foreign);
        self.seen.insert(i);
    }

    fn sentence(&mut self, rng: &mut ChaCha8Rng, template: &str, sentence: usize) -> SentenceOut {
        let mut out = SentenceOut {
            tokens: Vec::new(),
            roles: Vec::new(),
            anchors: Vec::new(),
            gold: Vec::new(),
        };
        for piece in template.split_whitespace() {
            match piece {
                "{SELF}" => {
                    let words = self.ent(self.self_ent).names[0].clone();
                    let ent = self.ent(self.self_ent);
                    let (b, e) = Self::push_tokens(&mut out, &words, TokenRole::Name);
                    if !ent.labels.is_empty() {
                        out.gold.push(MentionRecord {
                            b,
                            e,
                            entity: ent.id.0.clone(),
                            labels: ent.labels.clone(),
                        });
                        self.planted.gold_mentions += 1;
                        self.planted.unlinked_gold_mentions += 1;
                    }
                }
                "{S}" => {
                    let i = self.self_ent;
                    self.mention(rng, &mut out, sentence, i, false, true);
                }
                "{P}" => {
                    if rng.gen_bool(self.rates.stranger) {
                        let name = self.world.first_names.choose(rng).unwrap().clone();
                        Self::push_tokens(&mut out, &[name], TokenRole::Name);
                        self.planted.unknown_names += 1;
                    } else {
                        let (i, foreign) = self.choose(rng, &[Class::Person]);
                        self.mention(rng, &mut out, sentence, i, foreign, i == self.self_ent);
                    }
                }
                "{C}" | "{K}" | "{O}" | "{L}" => {
                    let classes: &[Class] = match piece {
                        "{C}" => &[Class::City, Class::City, Class::Country],
                        "{K}" => &[Class::Country],
                        "{O}" => &[Class::Company, Class::Team],
                        _ => &[Class::Substance],
                    };
                    if piece == "{O}" && rng.gen_bool(self.rates.obscure) {
                        let i = self.world.pick(rng, Class::Obscure);
                        let words = self.ent(i).names[0].clone();
                        let (b, e) = Self::push_tokens(&mut out, &words, TokenRole::Name);
                        out.anchors
                            .push((TokenSpan::new(sentence, b, e), self.ent(i).id.clone()));
                        self.planted.anchors += 1;
                        self.planted.obscure_anchors += 1;
                    } else {
                        let (i, foreign) = self.choose(rng, classes);
                        self.mention(rng, &mut out, sentence, i, foreign, i == self.self_ent);
                    }
                }
                "{N}" => {
                    // skewed so that some concepts clear the support threshold and others do not
                    let concepts = &self.world.by_class[&Class::Concept];
                    let k = rng.gen_range(0..concepts.len()).min(rng.gen_range(0..concepts.len()));
                    let i = concepts[k];
                    let mut words = self.ent(i).names[0].clone();
                    if out.tokens.is_empty() {
                        words[0] = capitalize(&words[0]);
                    }
                    let (b, e) = Self::push_tokens(&mut out, &words, TokenRole::Lowercase);
                    if rng.gen_bool(self.rates.link_concept) {
                        out.anchors
                            .push((TokenSpan::new(sentence, b, e), self.ent(i).id.clone()));
                        self.planted.anchors += 1;
                        self.planted.concept_anchors += 1;
                    }
                }
                "{A}" => {
                    Self::push_tokens(
                        &mut out,
                        &[ADJECTIVES.choose(rng).unwrap().to_string()],
                        TokenRole::Adjective,
                    );
                }
                "{T}" => {
                    Self::push_tokens(&mut out, &split(TITLES.choose(rng).unwrap()), TokenRole::Name);
                }
                "{M}" => {
                    Self::push_tokens(&mut out, &[MONTHS.choose(rng).unwrap().to_string()], TokenRole::Name);
                }
                "{D}" => {
                    Self::push_tokens(&mut out, &[DAYS.choose(rng).unwrap().to_string()], TokenRole::Name);
                }
                "{Y}" => {
                    Self::push_tokens(&mut out, &[rng.gen_range(1890..2020).to_string()], TokenRole::Plain);
                }
                literal => {
                    Self::push_tokens(&mut out, &[literal.to_string()], TokenRole::Plain);
                }
            }
        }
        out
    }
}

fn tag(tokens: &[String], roles: &[TokenRole]) -> Vec<String> {
    let mut tags = BuiltinTagger.tag_tokens(tokens);
    for (t, role) in tags.iter_mut().zip(roles) {
        match role {
            TokenRole::Name => *t = "NNP".into(),
            TokenRole::Lowercase => *t = "NN".into(),
            TokenRole::Adjective => *t = "JJ".into(),
            TokenRole::Plain => {}
        }
    }
    tags
}

pub fn generate(config: FixtureConfig) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let world = World::build(&mut rng, config.documents);
    let rates = config.preset.rates();
    let mut documents = Vec::with_capacity(config.documents);
    let mut gold = Vec::new();
    let mut planted = PlantedCounts::default();

    for d in 0..config.documents {
        let doc_id = format!("doc{d:05}");
        let mut builder = DocBuilder::new(&world, rates, &mut rng);
        let intro = match builder.ent(builder.self_ent).class {
            Class::Person => INTRO_PERSON,
            Class::City => INTRO_CITY,
            _ => INTRO_ORG,
        };
        let count = rng.gen_range(5..=9);
        let mut sentences = Vec::with_capacity(count);
        let mut pos = Vec::with_capacity(count);
        let mut links = Vec::new();
        for s in 0..count {
            let template = if s == 0 { intro } else { BODY.choose(&mut rng).unwrap() };
            let out = builder.sentence(&mut rng, template, s);
            pos.push(tag(&out.tokens, &out.roles));
            links.extend(out.anchors);
            gold.push(SentenceRecord {
                doc: doc_id.clone(),
                sent: s,
                tokens: out.tokens.clone(),
                mentions: out.gold,
            });
            sentences.push(out.tokens);
        }
        let self_entity = Some(builder.ent(builder.self_ent).id.clone());
        let doc = Document::new(doc_id, self_entity, sentences, links)
            .and_then(|d| d.with_pos(pos))
            .expect("generated documents are well formed");
        let p = builder.planted;
        planted.anchors += p.anchors;
        planted.non_referential_anchors += p.non_referential_anchors;
        planted.concept_anchors += p.concept_anchors;
        planted.obscure_anchors += p.obscure_anchors;
        planted.gold_mentions += p.gold_mentions;
        planted.unlinked_gold_mentions += p.unlinked_gold_mentions;
        planted.foreign_mentions += p.foreign_mentions;
        planted.unknown_names += p.unknown_names;
        planted.sentences += doc.sentences.len();
        planted.documents += 1;
        documents.push(doc);
    }

    let mut kb_types = Vec::new();
    let mut kb_aliases = Vec::new();
    for e in &world.ents {
        for raw in &e.raw_types {
            kb_types.push((e.id.0.clone(), raw.to_string()));
        }
        if matches!(e.class, Class::Concept) {
            continue;
        }
        for name in &e.names {
            kb_aliases.push((e.id.0.clone(), name.join(" ")));
        }
    }

    Fixture {
        config,
        documents,
        kb_types,
        kb_aliases,
        gold,
        planted,
    }
}

impl Fixture {
    /// The KB as it reads back from the written files.
    pub fn knowledge_base(&self) -> KnowledgeBase {
        let mapping: BTreeMap<&str, &str> = TYPE_MAPPING.iter().copied().collect();
        let mut kb = KnowledgeBase::new();
        for (entity, raw) in &self.kb_types {
            match mapping.get(raw.as_str()) {
                Some(path) => kb.add_type(EntityId::new(entity.clone()), *path),
                None => kb.add_entity(EntityId::new(entity.clone())),
            }
        }
        for (entity, alias) in &self.kb_aliases {
            kb.add_alias(EntityId::new(entity.clone()), alias);
        }
        kb
    }

    /// Share of anchors that are planted non-referential.
    pub fn non_referential_rate(&self) -> f64 {
        if self.planted.anchors == 0 {
            0.0
        } else {
            self.planted.non_referential_anchors as f64 / self.planted.anchors as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureFiles {
    pub corpus: PathBuf,
    pub kb_types: PathBuf,
    pub kb_aliases: PathBuf,
    pub mapping: PathBuf,
    pub hierarchy: PathBuf,
    pub gold: PathBuf,
}

impl FixtureFiles {
    pub fn in_dir(dir: &Path) -> Self {
        FixtureFiles {
            corpus: dir.join("corpus.jsonl"),
            kb_types: dir.join("kb_types.tsv"),
            kb_aliases: dir.join("kb_aliases.tsv"),
            mapping: dir.join("type_mapping.tsv"),
            hierarchy: dir.join("hierarchy.types"),
            gold: dir.join("gold.jsonl"),
        }
    }
}

fn write_pairs(path: &Path, pairs: impl IntoIterator<Item = (String, String)>) -> Result<()> {
    let mut w = AtomicWriter::create(path)?;
    for (a, b) in pairs {
        w.write_all(format!("{a}\t{b}\n").as_bytes())?;
    }
    w.finish()
}

/// Writes the corpus, KB, mapping, FIGER hierarchy and gold files into `dir`.
pub fn write_fixture(fixture: &Fixture, dir: &Path) -> Result<FixtureFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = FixtureFiles::in_dir(dir);
    let mut corpus = AtomicWriter::create(&files.corpus)?;
    for doc in &fixture.documents {
        corpus.write_all(document_to_line(doc).as_bytes())?;
        corpus.write_all(b"\n")?;
    }
    corpus.finish()?;
    write_pairs(&files.kb_types, fixture.kb_types.iter().cloned())?;
    write_pairs(&files.kb_aliases, fixture.kb_aliases.iter().cloned())?;
    write_pairs(
        &files.mapping,
        TYPE_MAPPING.iter().map(|(a, b)| (a.to_string(), b.to_string())),
    )?;
    let mut h = AtomicWriter::create(&files.hierarchy)?;
    h.write_all(FIGER_TYPES.as_bytes())?;
    h.finish()?;
    let mut g = JsonlWriter::create(&files.gold)?;
    for record in &fixture.gold {
        g.write_record(record)?;
    }
    g.finish()?;
    Ok(files)
}
