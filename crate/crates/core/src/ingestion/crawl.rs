use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{BufRead, BufReader, Write};
use std::path::{Component, Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use url::Url;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkStatus {
    Pending,
    Extracted,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub uri: String,
    pub discovered_at: u64,
    pub status: LinkStatus,
}

/// Retrieves page or descriptor bodies by URI.
pub trait Fetcher: Send + Sync {
    fn fetch(&self, uri: &str) -> Result<String>;
}

/// Reads local paths (`file://` or bare) from disk and `http(s)://` over the
/// network.
#[derive(Debug, Default, Clone, Copy)]
pub struct StdFetcher;

impl Fetcher for StdFetcher {
    fn fetch(&self, uri: &str) -> Result<String> {
        let failed = |reason: String| Error::FetchFailed {
            uri: uri.to_string(),
            reason,
        };
        if uri.starts_with("http://") || uri.starts_with("https://") {
            let mut resp = ureq::get(uri).call().map_err(|e| failed(e.to_string()))?;
            return resp.body_mut().read_to_string().map_err(|e| failed(e.to_string()));
        }
        let path = local_path(uri);
        std::fs::read_to_string(&path).map_err(|e| failed(e.to_string()))
    }
}

fn local_path(uri: &str) -> PathBuf {
    PathBuf::from(uri.strip_prefix("file://").unwrap_or(uri))
}

fn is_remote(uri: &str) -> bool {
    uri.starts_with("http://") || uri.starts_with("https://")
}

/// Lexically normalizes `.` and `..` without touching the file system.
fn normalize_path(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for comp in path.components() {
        match comp {
            Component::CurDir => {}
            Component::ParentDir => {
                if !out.pop() {
                    out.push("..");
                }
            }
            other => out.push(other.as_os_str()),
        }
    }
    out
}

/// Canonical form used for the visited set and for deduplication.
pub(crate) fn canonicalize(uri: &str) -> String {
    if is_remote(uri) {
        match Url::parse(uri) {
            Ok(mut u) => {
                u.set_fragment(None);
                u.to_string()
            }
            Err(_) => uri.to_string(),
        }
    } else {
        normalize_path(&local_path(uri)).to_string_lossy().into_owned()
    }
}

fn resolve(base: &str, href: &str) -> Option<String> {
    let href = href.trim();
    if href.is_empty() || href.starts_with('#') || href.starts_with("mailto:") {
        return None;
    }
    if is_remote(href) {
        return Some(canonicalize(href));
    }
    if is_remote(base) {
        let joined = Url::parse(base).ok()?.join(href).ok()?;
        return Some(canonicalize(joined.as_str()));
    }
    let target = local_path(href);
    let joined = if target.is_absolute() {
        target
    } else {
        local_path(base).parent().map(|p| p.join(&target)).unwrap_or(target)
    };
    Some(canonicalize(&joined.to_string_lossy()))
}

fn href_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"(?i)href\s*=\s*(?:"([^"]*)"|'([^']*)'|([^\s>"']+))"#).expect("valid regex"))
}

fn extract_hrefs(html: &str) -> Vec<String> {
    href_regex()
        .captures_iter(html)
        .filter_map(|c| c.get(1).or_else(|| c.get(2)).or_else(|| c.get(3)))
        .map(|m| m.as_str().to_string())
        .collect()
}

/// Turns a link pattern into an anchored regex. Patterns prefixed `re:` are
/// taken as regular expressions; anything else is a glob where `*` matches
/// any run of characters and `?` a single one.
pub fn glob_to_regex(pattern: &str) -> Result<Regex> {
    let source = match pattern.strip_prefix("re:") {
        Some(re) => re.to_string(),
        None => {
            let mut re = String::from("^");
            for ch in pattern.chars() {
                match ch {
                    '*' => re.push_str(".*"),
                    '?' => re.push('.'),
                    c => re.push_str(&regex::escape(&c.to_string())),
                }
            }
            re.push('$');
            re
        }
    };
    Regex::new(&source).map_err(|e| Error::InvalidArgument(format!("bad link pattern: {e}")))
}

/// Breadth-first discovery of descriptor links.
///
/// Pages are fetched at most once each, up to `depth_limit` hops from the
/// seeds. Links matching `link_pattern` are recorded rather than followed.
/// A page that cannot be fetched is recorded with [`LinkStatus::Failed`].
pub fn crawl(
    fetcher: &dyn Fetcher,
    seeds: &[String],
    depth_limit: usize,
    link_pattern: &str,
) -> Result<Vec<LinkRecord>> {
    let matcher = glob_to_regex(link_pattern)?;
    let mut visited = BTreeSet::new();
    let mut recorded = BTreeSet::new();
    let mut records = Vec::new();
    let mut frontier = VecDeque::new();
    let mut step = 0u64;

    for seed in seeds {
        let uri = canonicalize(seed);
        if matcher.is_match(&uri) {
            if recorded.insert(uri.clone()) {
                records.push(LinkRecord {
                    uri,
                    discovered_at: step,
                    status: LinkStatus::Pending,
                });
            }
        } else if visited.insert(uri.clone()) {
            frontier.push_back((uri, 0usize));
        }
    }

    while let Some((page, depth)) = frontier.pop_front() {
        step += 1;
        let body = match fetcher.fetch(&page) {
            Ok(body) => body,
            Err(_) => {
                if recorded.insert(page.clone()) {
                    records.push(LinkRecord {
                        uri: page,
                        discovered_at: step,
                        status: LinkStatus::Failed,
                    });
                }
                continue;
            }
        };
        for href in extract_hrefs(&body) {
            let Some(target) = resolve(&page, &href) else {
                continue;
            };
            if matcher.is_match(&target) {
                if recorded.insert(target.clone()) {
                    records.push(LinkRecord {
                        uri: target,
                        discovered_at: step,
                        status: LinkStatus::Pending,
                    });
                }
            } else if depth < depth_limit && visited.insert(target.clone()) {
                frontier.push_back((target, depth + 1));
            }
        }
    }
    Ok(records)
}

/// The crawler's "links DB": unique URIs in discovery order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkStore {
    links: Vec<LinkRecord>,
    index: BTreeMap<String, usize>,
}

impl LinkStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the record unless its URI is already known. Returns whether it was new.
    pub fn add(&mut self, record: LinkRecord) -> bool {
        if self.index.contains_key(&record.uri) {
            return false;
        }
        self.index.insert(record.uri.clone(), self.links.len());
        self.links.push(record);
        true
    }

    pub fn set_status(&mut self, uri: &str, status: LinkStatus) -> bool {
        match self.index.get(uri) {
            Some(&i) => {
                self.links[i].status = status;
                true
            }
            None => false,
        }
    }

    pub fn get(&self, uri: &str) -> Option<&LinkRecord> {
        self.index.get(uri).map(|&i| &self.links[i])
    }

    pub fn links(&self) -> &[LinkRecord] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        for link in &self.links {
            let line = serde_json::to_string(link).expect("link serializes");
            writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut store = LinkStore::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: LinkRecord = serde_json::from_str(&line)
                .map_err(|e| Error::CorruptStore(format!("{}:{}: {e}", path.display(), n + 1)))?;
            store.add(rec);
        }
        Ok(store)
    }
}
