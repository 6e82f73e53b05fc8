use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::profile::{l1_normalize, AvatarProfile, ContextTriplet, FeedbackEvent, HistoryEntry};
use super::strategy::DEFAULT_STRATEGY;
use crate::error::{Error, Result};
use crate::ontology::OntologyStore;
use crate::text::tokenize;

/// Preference learning rate for feedback.
pub const DEFAULT_ETA: f64 = 0.1;

pub const PROFILES_FILE: &str = "profiles.jsonl";
pub const COMMUNITIES_FILE: &str = "communities.json";
pub const FACETS_FILE: &str = "facets.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Geographic,
    Linguistic,
    Interest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Community {
    pub id: String,
    pub criterion: Criterion,
    /// user id -> membership degree in (0, 1].
    pub members: BTreeMap<String, f64>,
}

/// Per-user, per-domain search state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetState {
    pub user_id: String,
    pub domain: String,
    pub strategy: String,
    pub usage: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuggestionKind {
    History,
    Predictive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    pub text: String,
    pub kind: SuggestionKind,
}

/// All avatars, communities and facets, owned by one authority.
#[derive(Debug, Clone, PartialEq)]
pub struct Personalization {
    avatars: BTreeMap<String, AvatarProfile>,
    communities: BTreeMap<String, Community>,
    facets: BTreeMap<String, BTreeMap<String, FacetState>>,
    eta: f64,
}

impl Default for Personalization {
    fn default() -> Self {
        Self::new(DEFAULT_ETA)
    }
}

fn validate_degree(degree: f64) -> Result<()> {
    if !(degree > 0.0 && degree <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "membership degree {degree} outside (0, 1]"
        )));
    }
    Ok(())
}

impl Personalization {
    pub fn new(eta: f64) -> Self {
        Personalization {
            avatars: BTreeMap::new(),
            communities: BTreeMap::new(),
            facets: BTreeMap::new(),
            eta,
        }
    }

    pub fn avatar(&self, user_id: &str) -> Result<&AvatarProfile> {
        self.avatars
            .get(user_id)
            .ok_or_else(|| Error::UnknownUser(user_id.to_string()))
    }

    pub fn avatars(&self) -> impl Iterator<Item = &AvatarProfile> {
        self.avatars.values()
    }

    pub fn community(&self, id: &str) -> Result<&Community> {
        self.communities
            .get(id)
            .ok_or_else(|| Error::UnknownCommunity(id.to_string()))
    }

    pub fn communities(&self) -> impl Iterator<Item = &Community> {
        self.communities.values()
    }

    pub fn facet(&self, user_id: &str, domain: &str) -> Option<&FacetState> {
        self.facets.get(user_id)?.get(domain)
    }

    /// Creates the user's avatar, enrols it in its country and language
    /// communities and seeds its preferences from the country community.
    pub fn create_avatar(
        &mut self,
        user_id: &str,
        country: &str,
        language: &str,
        context: ContextTriplet,
    ) -> Result<&AvatarProfile> {
        if user_id.is_empty() {
            return Err(Error::InvalidArgument("empty user id".into()));
        }
        if self.avatars.contains_key(user_id) {
            return Err(Error::DuplicateUser(user_id.to_string()));
        }
        let country = country.to_ascii_uppercase();
        let language = language.to_ascii_lowercase();
        let geo = format!("geo:{country}");
        let lang = format!("lang:{language}");

        let mut prefs = BTreeMap::new();
        if let Some(community) = self.communities.get(&geo) {
            let domains: BTreeSet<&String> = community
                .members
                .keys()
                .filter_map(|m| self.avatars.get(m))
                .flat_map(|a| a.prefs.keys())
                .collect();
            for domain in domains {
                prefs.insert(domain.clone(), self.community_profile(&geo, domain)?);
            }
        }

        self.communities
            .entry(geo.clone())
            .or_insert_with(|| Community {
                id: geo.clone(),
                criterion: Criterion::Geographic,
                members: BTreeMap::new(),
            })
            .members
            .insert(user_id.to_string(), 1.0);
        self.communities
            .entry(lang.clone())
            .or_insert_with(|| Community {
                id: lang.clone(),
                criterion: Criterion::Linguistic,
                members: BTreeMap::new(),
            })
            .members
            .insert(user_id.to_string(), 1.0);

        let profile = AvatarProfile {
            user_id: user_id.to_string(),
            language,
            context,
            prefs,
            memberships: [(geo, 1.0), (lang, 1.0)].into(),
            history: BTreeMap::new(),
        };
        Ok(self.avatars.entry(user_id.to_string()).or_insert(profile))
    }

    /// Adds (or re-weights) a membership, creating the community if needed.
    pub fn join_community(
        &mut self,
        user_id: &str,
        community_id: &str,
        criterion: Criterion,
        degree: f64,
    ) -> Result<()> {
        validate_degree(degree)?;
        let avatar = self
            .avatars
            .get_mut(user_id)
            .ok_or_else(|| Error::UnknownUser(user_id.to_string()))?;
        avatar.memberships.insert(community_id.to_string(), degree);
        self.communities
            .entry(community_id.to_string())
            .or_insert_with(|| Community {
                id: community_id.to_string(),
                criterion,
                members: BTreeMap::new(),
            })
            .members
            .insert(user_id.to_string(), degree);
        Ok(())
    }

    /// Degree-weighted mean of the members' preference vectors, renormalized
    /// to unit mass (all-zero if no member has preferences).
    pub fn community_profile(&self, community_id: &str, domain: &str) -> Result<BTreeMap<String, f64>> {
        let community = self.community(community_id)?;
        let mut acc: BTreeMap<String, f64> = BTreeMap::new();
        for (member, degree) in &community.members {
            let Some(prefs) = self.avatars.get(member).and_then(|a| a.prefs.get(domain)) else {
                continue;
            };
            for (concept, w) in prefs {
                *acc.entry(concept.clone()).or_default() += degree * w;
            }
        }
        l1_normalize(&mut acc);
        Ok(acc)
    }

    fn peers(&self, user_id: &str) -> Result<BTreeSet<&str>> {
        let avatar = self.avatar(user_id)?;
        Ok(avatar
            .memberships
            .keys()
            .filter_map(|c| self.communities.get(c))
            .flat_map(|c| c.members.keys())
            .map(String::as_str)
            .filter(|m| *m != user_id)
            .collect())
    }

    /// The strategy most used, for `domain`, by users sharing a community
    /// with `user_id`; `hybrid` if nobody has used one yet.
    pub fn assign_strategy(&self, user_id: &str, domain: &str) -> Result<String> {
        let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
        for peer in self.peers(user_id)? {
            if let Some(facet) = self.facet(peer, domain) {
                for (name, count) in &facet.usage {
                    *totals.entry(name.as_str()).or_default() += count;
                }
            }
        }
        // BTreeMap order makes the first maximum the lexicographically smallest.
        let best = totals
            .into_iter()
            .filter(|(_, n)| *n > 0)
            .fold(None::<(&str, u64)>, |best, (name, n)| match best {
                Some((_, b)) if b >= n => best,
                _ => Some((name, n)),
            });
        Ok(best.map_or_else(|| DEFAULT_STRATEGY.to_string(), |(name, _)| name.to_string()))
    }

    /// Returns the user's facet for `domain`, creating it with the
    /// strategist's pick on first use.
    pub fn ensure_facet(&mut self, user_id: &str, domain: &str) -> Result<&mut FacetState> {
        self.avatar(user_id)?;
        if self.facet(user_id, domain).is_none() {
            let strategy = self.assign_strategy(user_id, domain)?;
            self.facets.entry(user_id.to_string()).or_default().insert(
                domain.to_string(),
                FacetState {
                    user_id: user_id.to_string(),
                    domain: domain.to_string(),
                    strategy,
                    usage: BTreeMap::new(),
                },
            );
        }
        Ok(self
            .facets
            .get_mut(user_id)
            .and_then(|f| f.get_mut(domain))
            .expect("facet just ensured"))
    }

    /// Overrides the strategy of a user's facet.
    pub fn set_strategy(&mut self, user_id: &str, domain: &str, strategy: &str) -> Result<()> {
        self.ensure_facet(user_id, domain)?.strategy = strategy.to_string();
        Ok(())
    }

    /// Appends the query to the domain history and counts one use of the
    /// facet's strategy. Returns that strategy.
    pub fn record_query(&mut self, user_id: &str, domain: &str, text: &str, step: u64) -> Result<String> {
        let facet = self.ensure_facet(user_id, domain)?;
        let strategy = facet.strategy.clone();
        *facet.usage.entry(strategy.clone()).or_default() += 1;
        let avatar = self.avatars.get_mut(user_id).expect("facet implies avatar");
        avatar.context.time = step;
        avatar
            .history
            .entry(domain.to_string())
            .or_default()
            .push(HistoryEntry {
                query: text.to_string(),
                step,
            });
        Ok(strategy)
    }

    /// History suggestions first (most frequent, then most recent), then
    /// community-trend concepts not already covered by the history.
    pub fn suggest(&self, user_id: &str, domain: &str, k: usize, ontology: &OntologyStore) -> Result<Vec<Suggestion>> {
        let avatar = self.avatar(user_id)?;
        let mut out: Vec<Suggestion> = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();

        let history = avatar.history.get(domain).map(Vec::as_slice).unwrap_or(&[]);
        let mut freq: BTreeMap<&str, (usize, u64, usize)> = BTreeMap::new();
        for (pos, entry) in history.iter().enumerate() {
            let slot = freq.entry(entry.query.as_str()).or_insert((0, 0, 0));
            slot.0 += 1;
            slot.1 = slot.1.max(entry.step);
            slot.2 = pos;
        }
        let mut ranked: Vec<(&str, (usize, u64, usize))> = freq.into_iter().collect();
        ranked.sort_by(|a, b| {
            b.1 .0
                .cmp(&a.1 .0)
                .then(b.1 .1.cmp(&a.1 .1))
                .then(b.1 .2.cmp(&a.1 .2))
                .then(a.0.cmp(b.0))
        });
        for (query, _) in ranked {
            if out.len() >= k {
                return Ok(out);
            }
            if seen.insert(query.to_string()) {
                out.push(Suggestion {
                    text: query.to_string(),
                    kind: SuggestionKind::History,
                });
            }
        }

        let covered: BTreeSet<String> = history.iter().flat_map(|h| tokenize(&h.query)).collect();
        let mut trend: BTreeMap<String, f64> = BTreeMap::new();
        for (community, degree) in &avatar.memberships {
            let Ok(profile) = self.community_profile(community, domain) else {
                continue;
            };
            for (concept, w) in profile {
                *trend.entry(concept).or_default() += degree * w;
            }
        }
        let mut trend: Vec<(String, f64)> = trend.into_iter().filter(|(_, w)| *w > 0.0).collect();
        trend.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        for (concept, _) in trend {
            if out.len() >= k {
                break;
            }
            let label = ontology
                .concept(&concept)
                .map(|c| c.label.to_lowercase())
                .unwrap_or(concept);
            if covered.contains(&label) || !seen.insert(label.clone()) {
                continue;
            }
            out.push(Suggestion {
                text: label,
                kind: SuggestionKind::Predictive,
            });
        }
        Ok(out)
    }

    /// Moves the user's preferences towards the concepts of a rated document.
    ///
    /// `concepts` are the document's `(concept id, confidence)` pairs; each
    /// updates the preference vector of the concept's own domain.
    pub fn record_feedback(
        &mut self,
        event: &FeedbackEvent,
        concepts: &[(String, f64)],
        ontology: &OntologyStore,
    ) -> Result<&AvatarProfile> {
        event.validate()?;
        let eta = self.eta;
        let avatar = self
            .avatars
            .get_mut(&event.user_id)
            .ok_or_else(|| Error::UnknownUser(event.user_id.clone()))?;
        if event.rating > 0 {
            let mut touched = BTreeSet::new();
            for (concept, conf) in concepts {
                let Some(domain) = ontology.concept(concept).map(|c| c.domain.clone()) else {
                    continue;
                };
                let prefs = avatar.prefs.entry(domain.clone()).or_default();
                *prefs.entry(concept.clone()).or_default() += eta * (event.rating as f64 / 5.0) * conf;
                touched.insert(domain);
            }
            for domain in touched {
                l1_normalize(avatar.prefs.get_mut(&domain).expect("touched domain exists"));
            }
        }
        avatar.context.time = event.step;
        Ok(avatar)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_jsonl(&dir.join(PROFILES_FILE), self.avatars.values())?;
        write_jsonl(&dir.join(FACETS_FILE), self.facets.values().flat_map(|f| f.values()))?;
        let path = dir.join(COMMUNITIES_FILE);
        let communities: Vec<&Community> = self.communities.values().collect();
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&communities).expect("communities serialize"),
        )
        .map_err(|e| Error::io(&path, e))
    }

    /// Restores from `dir`; missing files mean an empty registry part.
    pub fn load(dir: &Path, eta: f64) -> Result<Self> {
        let mut reg = Personalization::new(eta);
        for avatar in read_jsonl::<AvatarProfile>(&dir.join(PROFILES_FILE))? {
            reg.avatars.insert(avatar.user_id.clone(), avatar);
        }
        for facet in read_jsonl::<FacetState>(&dir.join(FACETS_FILE))? {
            reg.facets
                .entry(facet.user_id.clone())
                .or_default()
                .insert(facet.domain.clone(), facet);
        }
        let path = dir.join(COMMUNITIES_FILE);
        if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let list: Vec<Community> =
                serde_json::from_str(&text).map_err(|e| Error::CorruptStore(format!("{COMMUNITIES_FILE}: {e}")))?;
            for c in list {
                reg.communities.insert(c.id.clone(), c);
            }
        }
        Ok(reg)
    }
}

fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl Iterator<Item = &'a T>) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for item in items {
        let line = serde_json::to_string(item).expect("record serializes");
        writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::CorruptStore(format!("{}:{}: {e}", path.display(), n + 1)))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::personalization::Device;
    use proptest::prelude::*;

    fn ctx() -> ContextTriplet {
        ContextTriplet::new("??", 0, Device::Desktop).unwrap()
    }

    fn with_users(users: &[(&str, &str, &str)]) -> Personalization {
        let mut p = Personalization::default();
        for (u, c, l) in users {
            p.create_avatar(u, c, l, ctx()).unwrap();
        }
        p
    }

    fn set_prefs(p: &mut Personalization, user: &str, domain: &str, prefs: &[(&str, f64)]) {
        p.avatars
            .get_mut(user)
            .unwrap()
            .prefs
            .insert(domain.into(), prefs.iter().map(|(c, w)| (c.to_string(), *w)).collect());
    }

    #[test]
    fn fresh_avatar_joins_geo_and_language() {
        let p = with_users(&[("u1", "FR", "fr")]);
        let a = p.avatar("u1").unwrap();
        assert_eq!(
            a.memberships,
            [("geo:FR".to_string(), 1.0), ("lang:fr".to_string(), 1.0)].into()
        );
        assert!(a.prefs.values().all(|v| v.values().all(|w| *w == 0.0)));
        assert_eq!(p.community("geo:FR").unwrap().criterion, Criterion::Geographic);
    }

    #[test]
    fn duplicate_avatar_rejected() {
        let mut p = with_users(&[("u1", "FR", "fr")]);
        assert!(matches!(
            p.create_avatar("u1", "FR", "fr", ctx()),
            Err(Error::DuplicateUser(_))
        ));
    }

    #[test]
    fn new_avatar_inherits_country_preferences() {
        let mut p = with_users(&[("old", "MA", "ar")]);
        set_prefs(&mut p, "old", "sports", &[("football", 1.0)]);
        p.create_avatar("new", "MA", "fr", ctx()).unwrap();
        let prefs = &p.avatar("new").unwrap().prefs["sports"];
        assert_eq!(prefs, &[("football".to_string(), 1.0)].into());
    }

    #[test]
    fn community_profile_averages() {
        let mut p = with_users(&[("a", "FR", "fr"), ("b", "FR", "fr")]);
        set_prefs(&mut p, "a", "sports", &[("x", 1.0)]);
        set_prefs(&mut p, "b", "sports", &[("y", 1.0)]);
        let prof = p.community_profile("geo:FR", "sports").unwrap();
        assert_eq!(prof, [("x".to_string(), 0.5), ("y".to_string(), 0.5)].into());

        let solo = with_users(&[("c", "US", "en")]);
        assert!(solo.community_profile("geo:US", "sports").unwrap().is_empty());
        assert!(matches!(
            solo.community_profile("geo:ZZ", "sports"),
            Err(Error::UnknownCommunity(_))
        ));
    }

    #[test]
    fn community_profile_single_member() {
        let mut p = with_users(&[("a", "FR", "fr")]);
        set_prefs(&mut p, "a", "news", &[("x", 0.25), ("y", 0.75)]);
        assert_eq!(
            p.community_profile("geo:FR", "news").unwrap(),
            p.avatar("a").unwrap().prefs["news"]
        );
    }

    #[test]
    fn strategist_picks_most_used() {
        let mut p = with_users(&[("p1", "FR", "fr"), ("p2", "FR", "fr"), ("me", "FR", "fr")]);
        for s in ["concept-first", "concept-first"] {
            p.set_strategy("p1", "sports", s).unwrap();
            p.record_query("p1", "sports", "q", 1).unwrap();
        }
        p.set_strategy("p2", "sports", "text-first").unwrap();
        p.record_query("p2", "sports", "q", 1).unwrap();
        p.set_strategy("p2", "sports", "concept-first").unwrap();
        p.record_query("p2", "sports", "q", 2).unwrap();
        // concept-first 3x, text-first 1x across the two peers.
        assert_eq!(p.assign_strategy("me", "sports").unwrap(), "concept-first");
        assert_eq!(p.assign_strategy("me", "sports").unwrap(), "concept-first");
    }

    #[test]
    fn strategist_defaults_and_ties() {
        let mut p = with_users(&[("me", "FR", "fr")]);
        assert_eq!(p.assign_strategy("me", "sports").unwrap(), "hybrid");
        p.create_avatar("x", "FR", "fr", ctx()).unwrap();
        p.create_avatar("y", "FR", "fr", ctx()).unwrap();
        p.set_strategy("x", "art", "b-strat").unwrap();
        p.record_query("x", "art", "q", 1).unwrap();
        p.set_strategy("y", "art", "a-strat").unwrap();
        p.record_query("y", "art", "q", 1).unwrap();
        assert_eq!(p.assign_strategy("me", "art").unwrap(), "a-strat");
        assert!(matches!(p.assign_strategy("ghost", "art"), Err(Error::UnknownUser(_))));
    }

    #[test]
    fn suggestions_from_history() {
        let o = OntologyStore::bundled();
        let mut p = with_users(&[("u", "FR", "fr")]);
        assert!(p.suggest("u", "sports", 5, &o).unwrap().is_empty());
        for (i, q) in ["final", "final", "derby"].iter().enumerate() {
            p.record_query("u", "sports", q, i as u64).unwrap();
        }
        let s = p.suggest("u", "sports", 2, &o).unwrap();
        assert_eq!(
            s,
            vec![
                Suggestion {
                    text: "final".into(),
                    kind: SuggestionKind::History
                },
                Suggestion {
                    text: "derby".into(),
                    kind: SuggestionKind::History
                },
            ]
        );
        assert!(p.suggest("u", "sports", 0, &o).unwrap().is_empty());
    }

    #[test]
    fn predictive_suggestions_from_community() {
        let o = OntologyStore::bundled();
        let mut p = with_users(&[("fan", "MA", "ar"), ("u", "MA", "ar")]);
        set_prefs(&mut p, "fan", "sports", &[("football", 1.0)]);
        let s = p.suggest("u", "sports", 3, &o).unwrap();
        assert_eq!(
            s,
            vec![Suggestion {
                text: "football".into(),
                kind: SuggestionKind::Predictive
            }]
        );
        // Covered by history -> not predicted again.
        p.record_query("u", "sports", "football final", 1).unwrap();
        let s = p.suggest("u", "sports", 3, &o).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].kind, SuggestionKind::History);
    }

    fn event(rating: i64) -> FeedbackEvent {
        FeedbackEvent {
            user_id: "u".into(),
            doc_id: "d".into(),
            rating,
            step: 1,
        }
    }

    #[test]
    fn zero_rating_leaves_prefs() {
        let o = OntologyStore::bundled();
        let mut p = with_users(&[("u", "FR", "fr")]);
        let before = p.avatar("u").unwrap().clone();
        p.record_feedback(&event(0), &[("football".into(), 1.0)], &o).unwrap();
        assert_eq!(p.avatar("u").unwrap().prefs, before.prefs);
    }

    #[test]
    fn first_positive_rating_normalizes_to_one() {
        let o = OntologyStore::bundled();
        let mut p = with_users(&[("u", "FR", "fr")]);
        p.record_feedback(&event(5), &[("football".into(), 1.0)], &o).unwrap();
        assert_eq!(
            p.avatar("u").unwrap().prefs["sports"],
            [("football".to_string(), 1.0)].into()
        );
    }

    #[test]
    fn positive_rating_shifts_mass() {
        let o = OntologyStore::bundled();
        let mut p = with_users(&[("u", "FR", "fr")]);
        set_prefs(&mut p, "u", "sports", &[("football", 0.5), ("tennis", 0.5)]);
        p.record_feedback(&event(5), &[("football".into(), 1.0)], &o).unwrap();
        let prefs = &p.avatar("u").unwrap().prefs["sports"];
        // (0.5 + 0.1) / 1.1 and 0.5 / 1.1
        assert!((prefs["football"] - 0.6 / 1.1).abs() < 1e-12);
        assert!((prefs["tennis"] - 0.5 / 1.1).abs() < 1e-12);
    }

    #[test]
    fn feedback_errors() {
        let o = OntologyStore::bundled();
        let mut p = with_users(&[("u", "FR", "fr")]);
        assert!(matches!(
            p.record_feedback(&event(6), &[], &o),
            Err(Error::InvalidRating(6))
        ));
        let mut ghost = event(3);
        ghost.user_id = "ghost".into();
        assert!(matches!(p.record_feedback(&ghost, &[], &o), Err(Error::UnknownUser(_))));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let o = OntologyStore::bundled();
        let mut p = with_users(&[("a", "FR", "fr"), ("b", "MA", "ar")]);
        p.record_query("a", "sports", "final", 3).unwrap();
        p.record_feedback(&event_for("a", 4), &[("football".into(), 0.8)], &o)
            .unwrap();
        p.join_community("b", "interest:art", Criterion::Interest, 0.5).unwrap();
        p.save(dir.path()).unwrap();
        assert_eq!(Personalization::load(dir.path(), DEFAULT_ETA).unwrap(), p);
    }

    fn event_for(user: &str, rating: i64) -> FeedbackEvent {
        FeedbackEvent {
            user_id: user.into(),
            ..event(rating)
        }
    }

    proptest! {
        #[test]
        fn prefs_stay_normalized(ratings in prop::collection::vec((0i64..=5, 0usize..3, 0.0f64..=1.0), 1..30)) {
            let o = OntologyStore::bundled();
            let mut p = with_users(&[("u", "FR", "fr")]);
            let concepts = ["football", "tennis", "music"];
            for (r, c, conf) in ratings {
                p.record_feedback(&event_for("u", r), &[(concepts[c].to_string(), conf)], &o).unwrap();
            }
            for v in p.avatar("u").unwrap().prefs.values() {
                let s: f64 = v.values().sum();
                prop_assert!(s == 0.0 || (s - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn community_profile_scale_invariant(c in 0.01f64..1.0, w1 in 0.01f64..1.0, w2 in 0.01f64..1.0) {
            let mut p = with_users(&[("a", "FR", "fr"), ("b", "FR", "fr")]);
            set_prefs(&mut p, "a", "sports", &[("x", 1.0)]);
            set_prefs(&mut p, "b", "sports", &[("x", 0.3), ("y", 0.7)]);
            p.join_community("a", "i", Criterion::Interest, w1).unwrap();
            p.join_community("b", "i", Criterion::Interest, w2).unwrap();
            let base = p.community_profile("i", "sports").unwrap();
            p.join_community("a", "i", Criterion::Interest, w1 * c).unwrap();
            p.join_community("b", "i", Criterion::Interest, w2 * c).unwrap();
            let scaled = p.community_profile("i", "sports").unwrap();
            for (k, v) in base {
                prop_assert!((scaled[&k] - v).abs() < 1e-9);
            }
        }

        #[test]
        fn suggestions_bounded_and_unique(queries in prop::collection::vec(0usize..5, 0..20), k in 0usize..6) {
            let o = OntologyStore::bundled();
            let words = ["final", "derby", "football", "goal", "tennis"];
            let mut p = with_users(&[("fan", "FR", "fr"), ("u", "FR", "fr")]);
            set_prefs(&mut p, "fan", "sports", &[("football", 0.6), ("tennis", 0.4)]);
            for (i, q) in queries.into_iter().enumerate() {
                p.record_query("u", "sports", words[q], i as u64).unwrap();
            }
            let s = p.suggest("u", "sports", k, &o).unwrap();
            prop_assert!(s.len() <= k);
            let uniq: BTreeSet<_> = s.iter().map(|x| &x.text).collect();
            prop_assert_eq!(uniq.len(), s.len());
        }
    }
}
