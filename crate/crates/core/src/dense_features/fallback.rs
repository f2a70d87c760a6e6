//! Mapping unsupported languages onto supported ones.
//!
//! Resolution order: the language itself if supported, then the static map,
//! then the on-disk cache of earlier model answers, and finally a query to the
//! chat model. Model answers are written back to the cache so repeated runs
//! need no network access.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::llm::{render_prompt, ChatTransport, HttpChatTransport, LlmBackendConfig};
use super::FallbackError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FallbackPolicy {
    /// Language codes that have embeddings available.
    pub supported_languages: Vec<String>,
    #[serde(default)]
    pub static_map: BTreeMap<String, String>,
    #[serde(default)]
    pub llm_backend: Option<LlmBackendConfig>,
    #[serde(default)]
    pub cache_path: Option<PathBuf>,
    /// Display names by code; overrides the built-in table.
    #[serde(default)]
    pub language_names: BTreeMap<String, String>,
}

impl FallbackPolicy {
    pub fn validate(&self) -> Result<(), FallbackError> {
        for (from, to) in &self.static_map {
            if !self.supported_languages.contains(to) {
                return Err(FallbackError::Config(format!(
                    "static map target `{to}` (for `{from}`) is not a supported language"
                )));
            }
        }
        if let Some(b) = &self.llm_backend {
            b.validate()?;
        }
        Ok(())
    }

    pub fn name_of<'a>(&'a self, code: &'a str) -> &'a str {
        self.language_names.get(code).map(String::as_str).or_else(|| builtin_name(code)).unwrap_or(code)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Native,
    Static,
    Llm,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Native => "native",
            Provenance::Static => "static",
            Provenance::Llm => "llm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    pub language: String,
    pub provenance: Provenance,
}

/// Stateful resolver holding the answer cache.
pub struct LanguageResolver {
    policy: FallbackPolicy,
    transport: Option<Box<dyn ChatTransport>>,
    cache: Mutex<BTreeMap<String, String>>,
}

impl fmt::Debug for LanguageResolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LanguageResolver").field("policy", &self.policy).finish_non_exhaustive()
    }
}

impl LanguageResolver {
    /// Builds a resolver, connecting an HTTP transport when a backend is configured.
    pub fn new(policy: FallbackPolicy) -> Result<Self, FallbackError> {
        let transport = match &policy.llm_backend {
            Some(cfg) => Some(Box::new(HttpChatTransport::from_config(cfg)?) as Box<dyn ChatTransport>),
            None => None,
        };
        Self::with_transport(policy, transport)
    }

    pub fn with_transport(
        policy: FallbackPolicy,
        transport: Option<Box<dyn ChatTransport>>,
    ) -> Result<Self, FallbackError> {
        policy.validate()?;
        let cache = match &policy.cache_path {
            Some(p) if p.exists() => read_cache(p)?,
            _ => BTreeMap::new(),
        };
        Ok(Self { policy, transport, cache: Mutex::new(cache) })
    }

    pub fn policy(&self) -> &FallbackPolicy {
        &self.policy
    }

    pub fn resolve(&self, lang: &str) -> Result<Resolution, FallbackError> {
        let policy = &self.policy;
        if policy.supported_languages.iter().any(|s| s == lang) {
            return Ok(Resolution { language: lang.to_string(), provenance: Provenance::Native });
        }
        if let Some(target) = policy.static_map.get(lang) {
            return Ok(Resolution { language: target.clone(), provenance: Provenance::Static });
        }
        if let Some(hit) = self.cache.lock().unwrap().get(lang) {
            if policy.supported_languages.contains(hit) {
                return Ok(Resolution { language: hit.clone(), provenance: Provenance::Llm });
            }
        }
        let (Some(cfg), Some(transport)) = (&policy.llm_backend, &self.transport) else {
            return Err(FallbackError::Unresolved(lang.to_string()));
        };
        let known: Vec<&str> = policy.supported_languages.iter().map(|c| policy.name_of(c)).collect();
        let prompt = render_prompt(cfg, &known, policy.name_of(lang))?;
        let reply = transport.complete(&prompt)?;
        let candidates: Vec<(&str, &str)> =
            policy.supported_languages.iter().map(|c| (c.as_str(), policy.name_of(c))).collect();
        let Some(code) = parse_reply(&reply, &candidates) else {
            return Err(FallbackError::NoLanguageInReply { language: lang.to_string(), reply });
        };
        self.store(lang, code)?;
        Ok(Resolution { language: code.to_string(), provenance: Provenance::Llm })
    }

    fn store(&self, lang: &str, code: &str) -> Result<(), FallbackError> {
        let mut cache = self.cache.lock().unwrap();
        cache.insert(lang.to_string(), code.to_string());
        if let Some(path) = &self.policy.cache_path {
            write_cache(path, &cache)?;
        }
        Ok(())
    }
}

/// Finds the supported language named earliest in the reply (case-insensitive,
/// whole words). At equal positions the longer name wins.
pub fn parse_reply<'a>(reply: &str, candidates: &[(&'a str, &str)]) -> Option<&'a str> {
    let hay = reply.to_lowercase();
    let mut best: Option<(usize, usize, &'a str)> = None;
    for &(code, name) in candidates {
        let needle = name.to_lowercase();
        if needle.is_empty() {
            continue;
        }
        let Some(pos) = find_word(&hay, &needle) else { continue };
        let better = match best {
            None => true,
            Some((bp, blen, _)) => pos < bp || (pos == bp && needle.len() > blen),
        };
        if better {
            best = Some((pos, needle.len(), code));
        }
    }
    best.map(|(_, _, code)| code)
}

fn find_word(hay: &str, needle: &str) -> Option<usize> {
    let mut from = 0;
    while let Some(off) = hay[from..].find(needle) {
        let start = from + off;
        let end = start + needle.len();
        let before_ok = hay[..start].chars().next_back().is_none_or(|c| !c.is_alphanumeric());
        let after_ok = hay[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
        if before_ok && after_ok {
            return Some(start);
        }
        from = start + hay[start..].chars().next().map_or(1, char::len_utf8);
    }
    None
}

fn read_cache(path: &Path) -> Result<BTreeMap<String, String>, FallbackError> {
    let body = std::fs::read_to_string(path).map_err(|e| FallbackError::Cache(format!("{}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                map.insert(a.to_string(), b.to_string());
            }
            _ => {
                return Err(FallbackError::Cache(format!(
                    "{}: line {}: expected two tab-separated columns",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(map)
}

fn write_cache(path: &Path, cache: &BTreeMap<String, String>) -> Result<(), FallbackError> {
    let err = |e: std::io::Error| FallbackError::Cache(format!("{}: {e}", path.display()));
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp).map_err(err)?;
        for (k, v) in cache {
            writeln!(f, "{k}\t{v}").map_err(err)?;
        }
    }
    std::fs::rename(&tmp, path).map_err(err)
}

/// English names for ISO 639-1 codes and the shared-task language codes.
fn builtin_name(code: &str) -> Option<&'static str> {
    const NAMES: &[(&str, &str)] = &[
        ("af", "Afrikaans"),
        ("am", "Amharic"),
        ("ar", "Arabic"),
        ("az", "Azerbaijani"),
        ("be", "Belarusian"),
        ("bg", "Bulgarian"),
        ("bn", "Bengali"),
        ("ca", "Catalan"),
        ("cs", "Czech"),
        ("da", "Danish"),
        ("de", "German"),
        ("el", "Greek"),
        ("en", "English"),
        ("es", "Spanish"),
        ("et", "Estonian"),
        ("fa", "Persian"),
        ("fi", "Finnish"),
        ("fr", "French"),
        ("gu", "Gujarati"),
        ("ha", "Hausa"),
        ("he", "Hebrew"),
        ("hi", "Hindi"),
        ("hr", "Croatian"),
        ("hu", "Hungarian"),
        ("id", "Indonesian"),
        ("ig", "Igbo"),
        ("it", "Italian"),
        ("ja", "Japanese"),
        ("jv", "Javanese"),
        ("ka", "Georgian"),
        ("kk", "Kazakh"),
        ("km", "Khmer"),
        ("kn", "Kannada"),
        ("ko", "Korean"),
        ("ky", "Kyrgyz"),
        ("lt", "Lithuanian"),
        ("lv", "Latvian"),
        ("mg", "Malagasy"),
        ("mk", "Macedonian"),
        ("ml", "Malayalam"),
        ("mn", "Mongolian"),
        ("mr", "Marathi"),
        ("ms", "Malay"),
        ("my", "Burmese"),
        ("ne", "Nepali"),
        ("nl", "Dutch"),
        ("no", "Norwegian"),
        ("om", "Oromo"),
        ("pa", "Punjabi"),
        ("pl", "Polish"),
        ("ps", "Pashto"),
        ("pt", "Portuguese"),
        ("ro", "Romanian"),
        ("ru", "Russian"),
        ("rw", "Kinyarwanda"),
        ("sd", "Sindhi"),
        ("si", "Sinhala"),
        ("sk", "Slovak"),
        ("sl", "Slovenian"),
        ("so", "Somali"),
        ("sq", "Albanian"),
        ("sr", "Serbian"),
        ("su", "Sundanese"),
        ("sv", "Swedish"),
        ("sw", "Swahili"),
        ("ta", "Tamil"),
        ("te", "Telugu"),
        ("tg", "Tajik"),
        ("th", "Thai"),
        ("ti", "Tigrinya"),
        ("tl", "Tagalog"),
        ("tr", "Turkish"),
        ("tt", "Tatar"),
        ("uk", "Ukrainian"),
        ("ur", "Urdu"),
        ("uz", "Uzbek"),
        ("vi", "Vietnamese"),
        ("xh", "Xhosa"),
        ("yo", "Yoruba"),
        ("zh", "Chinese"),
        ("zu", "Zulu"),
    ];
    NAMES
        .iter()
        .find(|(c, _)| *c == code)
        .map(|(_, n)| *n)
        .or_else(|| crate::corpus::declared_languages().find(|(c, _)| *c == code).map(|(_, n)| n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    struct Canned {
        reply: String,
        calls: Arc<AtomicUsize>,
        last_prompt: Arc<Mutex<String>>,
    }

    impl ChatTransport for Canned {
        fn complete(&self, prompt: &str) -> Result<String, FallbackError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            *self.last_prompt.lock().unwrap() = prompt.to_string();
            Ok(self.reply.clone())
        }
    }

    fn policy(cache: Option<PathBuf>) -> FallbackPolicy {
        FallbackPolicy {
            supported_languages: vec!["en".into(), "am".into(), "ru".into()],
            static_map: BTreeMap::new(),
            llm_backend: Some(LlmBackendConfig::new("http://127.0.0.1:9", "test-model")),
            cache_path: cache,
            language_names: BTreeMap::new(),
        }
    }

    fn canned(reply: &str) -> (Box<dyn ChatTransport>, Arc<AtomicUsize>, Arc<Mutex<String>>) {
        let calls = Arc::new(AtomicUsize::new(0));
        let last = Arc::new(Mutex::new(String::new()));
        let t = Canned { reply: reply.into(), calls: calls.clone(), last_prompt: last.clone() };
        (Box::new(t), calls, last)
    }

    #[test]
    fn native_and_static() {
        let mut p = policy(None);
        p.static_map.insert("om".into(), "am".into());
        let r = LanguageResolver::with_transport(p, None).unwrap();
        assert_eq!(r.resolve("ru").unwrap(), Resolution { language: "ru".into(), provenance: Provenance::Native });
        assert_eq!(r.resolve("om").unwrap(), Resolution { language: "am".into(), provenance: Provenance::Static });
    }

    #[test]
    fn static_target_must_be_supported() {
        let mut p = policy(None);
        p.static_map.insert("om".into(), "xx".into());
        assert!(matches!(LanguageResolver::with_transport(p, None), Err(FallbackError::Config(_))));
    }

    #[test]
    fn llm_answer_is_parsed_and_cached() {
        let dir = tempfile::tempdir().unwrap();
        let cache = dir.path().join("lang.tsv");
        let (t, calls, last) = canned("The most similar language is Amharic.");
        let r = LanguageResolver::with_transport(policy(Some(cache.clone())), Some(t)).unwrap();
        let res = r.resolve("om").unwrap();
        assert_eq!(res, Resolution { language: "am".into(), provenance: Provenance::Llm });
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        assert!(last.lock().unwrap().contains("English, Amharic, Russian"));
        assert!(last.lock().unwrap().contains("most similar to Oromo"));
        assert_eq!(r.resolve("om").unwrap(), res);
        assert_eq!(calls.load(Ordering::SeqCst), 1);
        assert_eq!(std::fs::read_to_string(&cache).unwrap(), "om\tam\n");

        // A fresh resolver reads the cache instead of asking again.
        let (t2, calls2, _) = canned("English");
        let r2 = LanguageResolver::with_transport(policy(Some(cache)), Some(t2)).unwrap();
        assert_eq!(r2.resolve("om").unwrap(), res);
        assert_eq!(calls2.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn reply_without_language_keeps_raw_text() {
        let (t, _, _) = canned("I cannot decide.");
        let r = LanguageResolver::with_transport(policy(None), Some(t)).unwrap();
        match r.resolve("om").unwrap_err() {
            FallbackError::NoLanguageInReply { reply, .. } => assert_eq!(reply, "I cannot decide."),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn no_backend_is_unresolved() {
        let mut p = policy(None);
        p.llm_backend = None;
        let r = LanguageResolver::with_transport(p, None).unwrap();
        assert!(matches!(r.resolve("om"), Err(FallbackError::Unresolved(l)) if l == "om"));
    }

    #[test]
    fn reply_scan_rules() {
        let c = [("ar", "Arabic"), ("ary", "Moroccan Arabic"), ("en", "English"), ("ro", "Romanian")];
        assert_eq!(parse_reply("ENGLISH, then arabic", &c), Some("en"));
        assert_eq!(parse_reply("I'd say Moroccan Arabic.", &c), Some("ary"));
        assert_eq!(parse_reply("Arabic (not Moroccan Arabic)", &c), Some("ar"));
        assert_eq!(parse_reply("Englishness is not a language", &c), None);
        assert_eq!(parse_reply("nothing here", &c), None);
    }
}
