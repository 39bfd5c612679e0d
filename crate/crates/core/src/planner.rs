//! Query decomposition through a chat-completions endpoint.
//!
//! A query is turned into a [`QueryPlan`]: one or more sub-event descriptions,
//! their chronological order, and how they relate in time. Raw model output is
//! cached on disk keyed by the prompt and model, and every failure path ends in
//! the single-event fallback plan, so planning never blocks the pipeline.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::{Error, Result};

/// Plans with more sub-events than this are rejected, which keeps fusion's
/// Cartesian product small (`topk^4` at most).
pub const MAX_SUB_EVENTS: usize = 4;

pub const MAX_RETRIES_LIMIT: u32 = 5;

/// How the sub-events of a query co-occur.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Single,
    Simultaneously,
    Sequentially,
}

impl Relation {
    pub const ALL: [Relation; 3] = [Relation::Single, Relation::Simultaneously, Relation::Sequentially];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Single => "single",
            Relation::Simultaneously => "simultaneously",
            Relation::Sequentially => "sequentially",
        }
    }

    pub fn parse(s: &str) -> Option<Relation> {
        let s = s.trim();
        Relation::ALL.into_iter().find(|r| r.as_str().eq_ignore_ascii_case(s))
    }
}

impl std::fmt::Display for Relation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubEvent {
    pub description: String,
    /// Chronological rank, 0 = earliest.
    pub order: usize,
}

/// Where a plan came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PlanSource {
    Llm,
    Cache,
    #[default]
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub original_query: String,
    #[serde(default)]
    pub reasoning: String,
    pub relation: Relation,
    /// Sorted by `order`; the orders are exactly `0..len`.
    pub sub_events: Vec<SubEvent>,
    #[serde(default)]
    pub provenance: PlanSource,
}

impl QueryPlan {
    /// The single-event plan used when no model is available: the whole query
    /// is the only sub-event.
    pub fn fallback(query: &str) -> QueryPlan {
        QueryPlan {
            original_query: query.to_string(),
            reasoning: String::new(),
            relation: Relation::Single,
            sub_events: vec![SubEvent {
                description: query.trim().to_string(),
                order: 0,
            }],
            provenance: PlanSource::Fallback,
        }
    }

    pub fn len(&self) -> usize {
        self.sub_events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sub_events.is_empty()
    }

    /// Chronological rank of each sub-event, by position.
    pub fn order(&self) -> Vec<usize> {
        self.sub_events.iter().map(|s| s.order).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.sub_events.len();
        if m == 0 {
            return Err(Error::invalid("plan has no sub-events"));
        }
        if m > MAX_SUB_EVENTS {
            return Err(Error::invalid(format!("plan has {m} sub-events; at most {MAX_SUB_EVENTS} are supported")));
        }
        if (self.relation == Relation::Single) != (m == 1) {
            return Err(Error::invalid(format!(
                "relation `{}` is inconsistent with {m} sub-event(s)",
                self.relation
            )));
        }
        let mut seen = vec![false; m];
        for ev in &self.sub_events {
            if ev.description.trim().is_empty() {
                return Err(Error::invalid("sub-event description is empty"));
            }
            if ev.order >= m || std::mem::replace(&mut seen[ev.order], true) {
                return Err(Error::invalid("sub-event orders are not a permutation of 0..m"));
            }
        }
        Ok(())
    }
}

/// The model output could not be turned into a valid plan.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("could not parse plan: {0}")]
pub struct ParseFailure(pub String);

/// A chat request failed before any text came back.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("chat transport failed: {0}")]
pub struct TransportError(pub String);

pub const SYSTEM_PROMPT: &str =
    "You analyze video search queries. Reply with a single JSON object and nothing else.";

const PROMPT_TEMPLATE: &str = r#"A user is searching an untrimmed video for the moment described by a query. The query may describe one event or several sub-events.

Provide:
1. reasoning: analyze the query and infer which sub-events it contains.
2. order: list the sub-events in chronological order, starting from 0 for the earliest.
3. relation: how the sub-events relate in time. Use exactly one of:
   - "single": the query describes one event.
   - "simultaneously": the sub-events happen at the same time.
   - "sequentially": the sub-events happen one after another.
4. description: a short, self-contained text description of each sub-event that could be matched against individual video frames.

Answer with ONLY a JSON object of this form, without code fences or commentary:
{"reasoning": "<string>", "relation": "single" | "simultaneously" | "sequentially", "sub_events": [{"description": "<string>", "order": <integer>}]}

Example
Query: "the man opens the fridge and then takes out a bottle of milk"
Answer: {"reasoning": "The man first opens the fridge, and only afterwards takes the milk out, so there are two sub-events in sequence.", "relation": "sequentially", "sub_events": [{"description": "a man opens the fridge", "order": 0}, {"description": "a man takes a bottle of milk out of the fridge", "order": 1}]}

Query: {{QUERY}}
Answer:"#;

/// Prompt asking the model for a plan of `query`. The query is embedded as a
/// JSON string literal so quotes and backslashes stay unambiguous.
pub fn build_prompt(query: &str) -> Result<String> {
    if query.trim().is_empty() {
        return Err(Error::invalid("query is empty"));
    }
    let quoted = serde_json::to_string(query).map_err(|e| Error::Internal(e.to_string()))?;
    Ok(PROMPT_TEMPLATE.replace("{{QUERY}}", &quoted))
}

/// First JSON object in `raw` that carries a `sub_events` field. Surrounding
/// prose and code fences are skipped.
fn first_plan_object(raw: &str) -> Option<serde_json::Map<String, Value>> {
    raw.char_indices().filter(|&(_, c)| c == '{').find_map(|(pos, _)| {
        let mut stream = serde_json::Deserializer::from_str(&raw[pos..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(Value::Object(map))) if map.contains_key("sub_events") => Some(map),
            _ => None,
        }
    })
}

/// Extracts and validates a plan from raw model output.
///
/// Orders are normalized to ranks `0..m` (ties keep list position) and the
/// sub-events are returned in chronological order. A multi-event relation with
/// a single sub-event is coerced to `single`.
pub fn parse_plan(raw: &str, original_query: &str) -> Result<QueryPlan, ParseFailure> {
    let fail = |msg: &str| ParseFailure(msg.to_string());
    let obj = first_plan_object(raw).ok_or_else(|| fail("no JSON object with `sub_events` found"))?;

    let reasoning = match obj.get("reasoning") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(fail("`reasoning` is not a string")),
    };
    let relation = match obj.get("relation") {
        Some(Value::String(s)) => {
            Relation::parse(s).ok_or_else(|| ParseFailure(format!("unknown relation `{s}`")))?
        }
        Some(_) => return Err(fail("`relation` is not a string")),
        None => return Err(fail("missing `relation`")),
    };
    let items = obj
        .get("sub_events")
        .and_then(Value::as_array)
        .ok_or_else(|| fail("`sub_events` is not an array"))?;
    if items.is_empty() {
        return Err(fail("`sub_events` is empty"));
    }
    if items.len() > MAX_SUB_EVENTS {
        return Err(ParseFailure(format!(
            "{} sub-events exceed the supported maximum of {MAX_SUB_EVENTS}",
            items.len()
        )));
    }

    let mut events = Vec::with_capacity(items.len());
    for (pos, item) in items.iter().enumerate() {
        let description = item
            .get("description")
            .and_then(Value::as_str)
            .map(str::trim)
            .filter(|d| !d.is_empty())
            .ok_or_else(|| ParseFailure(format!("sub-event {pos} has no description")))?;
        let order = match item.get("order") {
            None | Some(Value::Null) => pos as u64,
            Some(v) => v
                .as_u64()
                .ok_or_else(|| ParseFailure(format!("sub-event {pos} has a non-integer order")))?,
        };
        events.push((order, pos, description.to_string()));
    }
    events.sort();
    let sub_events: Vec<SubEvent> = events
        .into_iter()
        .enumerate()
        .map(|(rank, (_, _, description))| SubEvent { description, order: rank })
        .collect();

    let relation = match (relation, sub_events.len()) {
        (_, 1) => Relation::Single,
        (Relation::Single, m) => {
            return Err(ParseFailure(format!("relation `single` given with {m} sub-events")));
        }
        (r, _) => r,
    };

    Ok(QueryPlan {
        original_query: original_query.to_string(),
        reasoning,
        relation,
        sub_events,
        provenance: PlanSource::Llm,
    })
}

fn default_api_key_env_var() -> String {
    "OPENAI_API_KEY".into()
}

fn default_max_retries() -> u32 {
    2
}

fn default_timeout() -> Duration {
    Duration::from_secs(60)
}

fn default_cache_dir() -> PathBuf {
    PathBuf::from(".vtg-cache/plans")
}

mod duration_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

/// Chat endpoint settings. The credential itself never appears here, only the
/// name of the environment variable that holds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    pub endpoint_url: String,
    pub model_name: String,
    #[serde(default = "default_api_key_env_var")]
    pub api_key_env_var: String,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(rename = "timeout_sec", with = "duration_secs", default = "default_timeout")]
    pub timeout: Duration,
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
}

impl PlannerConfig {
    pub fn new(endpoint_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            endpoint_url: endpoint_url.into(),
            model_name: model_name.into(),
            api_key_env_var: default_api_key_env_var(),
            max_retries: default_max_retries(),
            timeout: default_timeout(),
            cache_dir: default_cache_dir(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_retries > MAX_RETRIES_LIMIT {
            return Err(Error::invalid(format!(
                "max_retries is {}, at most {MAX_RETRIES_LIMIT} allowed",
                self.max_retries
            )));
        }
        if self.timeout.is_zero() {
            return Err(Error::invalid("planner timeout must be positive"));
        }
        if self.endpoint_url.trim().is_empty() || self.model_name.trim().is_empty() {
            return Err(Error::invalid("planner endpoint_url and model_name must be set"));
        }
        Ok(())
    }
}

/// One chat completion: system and user message in, assistant text out.
pub trait ChatTransport {
    fn complete(&self, system: &str, user: &str) -> Result<String, TransportError>;
}

/// Chat-completions client over HTTP.
pub struct HttpChat {
    agent: ureq::Agent,
    endpoint_url: String,
    model_name: String,
    api_key: Option<String>,
}

impl HttpChat {
    pub fn new(cfg: &PlannerConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        let api_key = std::env::var(&cfg.api_key_env_var).ok().filter(|k| !k.is_empty());
        Self {
            agent,
            endpoint_url: cfg.endpoint_url.clone(),
            model_name: cfg.model_name.clone(),
            api_key,
        }
    }
}

/// Request body for a deterministic single-turn completion.
pub fn chat_request_body(model: &str, system: &str, user: &str) -> Value {
    serde_json::json!({
        "model": model,
        "temperature": 0,
        "messages": [
            {"role": "system", "content": system},
            {"role": "user", "content": user},
        ],
    })
}

/// Text of the first choice in a chat-completions response.
pub fn completion_text(response: &Value) -> Option<&str> {
    response.get("choices")?.get(0)?.get("message")?.get("content")?.as_str()
}

impl ChatTransport for HttpChat {
    fn complete(&self, system: &str, user: &str) -> Result<String, TransportError> {
        let body = chat_request_body(&self.model_name, system, user).to_string();
        let mut request = self.agent.post(&self.endpoint_url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", format!("Bearer {key}"));
        }
        let mut response = request.send(body).map_err(|e| TransportError(e.to_string()))?;
        let status = response.status();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError(e.to_string()))?;
        if !status.is_success() {
            return Err(TransportError(format!("HTTP {status}: {}", truncate(&text, 200))));
        }
        let json: Value = serde_json::from_str(&text).map_err(|e| TransportError(format!("response is not JSON: {e}")))?;
        completion_text(&json)
            .map(str::to_string)
            .ok_or_else(|| TransportError("response has no choices[0].message.content".into()))
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((idx, _)) => &s[..idx],
        None => s,
    }
}

/// A cached raw completion. The raw text is stored rather than the parsed
/// plan so that parser changes apply to old entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub model_name: String,
    pub endpoint_url: String,
    pub query: String,
    pub raw: String,
}

/// Hex SHA-256 over the prompt and model name.
pub fn cache_key(prompt: &str, model_name: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prompt.as_bytes());
    hasher.update([0u8]);
    hasher.update(model_name.as_bytes());
    hex::encode(hasher.finalize())
}

/// One JSON file per key under a directory.
#[derive(Debug, Clone)]
pub struct PlanCache {
    dir: PathBuf,
}

impl PlanCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<CacheEntry> {
        let path = self.path_for(key);
        let text = fs::read_to_string(&path).ok()?;
        match serde_json::from_str(&text) {
            Ok(entry) => Some(entry),
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {}: {e}", path.display());
                None
            }
        }
    }

    /// Writes through a temporary file and an atomic rename, so concurrent
    /// writers of one key leave a single complete entry.
    pub fn put(&self, key: &str, entry: &CacheEntry) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path_for(key);
        let json = serde_json::to_vec_pretty(entry).map_err(|e| Error::Internal(e.to_string()))?;
        write_atomic(&path, &json)
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn backoff(attempt: u32) -> Duration {
    Duration::from_millis(50u64 << attempt.min(5))
}

/// Plans `query` with the configured HTTP endpoint.
pub fn plan_query(query: &str, cfg: &PlannerConfig) -> Result<QueryPlan> {
    cfg.validate()?;
    plan_query_with(query, cfg, &HttpChat::new(cfg))
}

/// Plans `query` through `transport`, consulting and filling the cache.
///
/// Transport errors and unparseable replies are retried up to
/// `cfg.max_retries` times. When every attempt fails the fallback plan is
/// returned; the outcome is visible in [`QueryPlan::provenance`]. Only an empty
/// query or an invalid config is an error.
pub fn plan_query_with(query: &str, cfg: &PlannerConfig, transport: &dyn ChatTransport) -> Result<QueryPlan> {
    cfg.validate()?;
    let prompt = build_prompt(query)?;
    let key = cache_key(&prompt, &cfg.model_name);
    let cache = PlanCache::new(&cfg.cache_dir);

    if let Some(entry) = cache.get(&key) {
        match parse_plan(&entry.raw, query) {
            Ok(mut plan) => {
                plan.provenance = PlanSource::Cache;
                return Ok(plan);
            }
            Err(e) => log::warn!("cached plan for {query:?} no longer parses ({e}); refreshing"),
        }
    }

    for attempt in 0..=cfg.max_retries {
        if attempt > 0 {
            std::thread::sleep(backoff(attempt - 1));
        }
        let raw = match transport.complete(SYSTEM_PROMPT, &prompt) {
            Ok(raw) => raw,
            Err(e) => {
                log::warn!("planner attempt {} for {query:?}: {e}", attempt + 1);
                continue;
            }
        };
        match parse_plan(&raw, query) {
            Ok(plan) => {
                let entry = CacheEntry {
                    model_name: cfg.model_name.clone(),
                    endpoint_url: cfg.endpoint_url.clone(),
                    query: query.to_string(),
                    raw,
                };
                if let Err(e) = cache.put(&key, &entry) {
                    log::warn!("could not write plan cache: {e}");
                }
                return Ok(plan);
            }
            Err(e) => log::warn!("planner attempt {} for {query:?}: {e}", attempt + 1),
        }
    }
    log::warn!("planner gave up on {query:?}; using the single-event fallback");
    Ok(QueryPlan::fallback(query))
}

#[cfg(test)]
mod tests {
    use std::cell::{Cell, RefCell};

    use super::*;

    const TWO_EVENTS: &str = r#"Sure! Here is the plan:
```json
{"reasoning": "spraying happens while brushing continues",
 "relation": "simultaneously",
 "sub_events": [{"description": "she sprays her hair with a bottle", "order": 0},
                {"description": "she brushes her hair", "order": 1}]}
```"#;

    #[test]
    fn prompt_embeds_query_and_relations() {
        let p = build_prompt("a person sits down").unwrap();
        assert!(p.contains("\"a person sits down\""));
        for r in Relation::ALL {
            assert!(p.contains(&format!("\"{}\"", r.as_str())));
        }
        assert_eq!(p, build_prompt("a person sits down").unwrap());
    }

    #[test]
    fn prompt_escapes_quotes() {
        let p = build_prompt(r#"he says "hi" \ waves"#).unwrap();
        assert!(p.contains(r#"Query: "he says \"hi\" \\ waves""#), "{p}");
    }

    #[test]
    fn empty_query_rejected() {
        assert!(build_prompt("   ").is_err());
    }

    #[test]
    fn parses_fenced_two_event_plan() {
        let plan = parse_plan(TWO_EVENTS, "q").unwrap();
        assert_eq!(plan.relation, Relation::Simultaneously);
        assert_eq!(plan.len(), 2);
        assert_eq!(plan.sub_events[1].description, "she brushes her hair");
        assert_eq!(plan.provenance, PlanSource::Llm);
        plan.validate().unwrap();
    }

    #[test]
    fn prose_only_is_failure() {
        assert!(parse_plan("no structure here", "q").is_err());
        assert!(parse_plan("{\"foo\": 1}", "q").is_err());
    }

    #[test]
    fn one_event_coerced_to_single() {
        let raw = r#"{"reasoning":"", "relation":"sequentially", "sub_events":[{"description":"a dog runs","order":0}]}"#;
        assert_eq!(parse_plan(raw, "q").unwrap().relation, Relation::Single);
    }

    #[test]
    fn unknown_relation_and_empty_list_fail() {
        let raw = r#"{"relation":"before", "sub_events":[{"description":"x","order":0}]}"#;
        assert!(parse_plan(raw, "q").is_err());
        let raw = r#"{"relation":"single", "sub_events":[]}"#;
        assert!(parse_plan(raw, "q").is_err());
        let raw = r#"{"relation":"single", "sub_events":[{"description":"a","order":0},{"description":"b","order":1}]}"#;
        assert!(parse_plan(raw, "q").is_err());
    }

    #[test]
    fn orders_normalized_to_ranks() {
        let raw = r#"{"relation":"sequentially","sub_events":[
            {"description":"third","order":7},{"description":"first","order":2},{"description":"second","order":5}]}"#;
        let plan = parse_plan(raw, "q").unwrap();
        let names: Vec<_> = plan.sub_events.iter().map(|s| s.description.as_str()).collect();
        assert_eq!(names, ["first", "second", "third"]);
        assert_eq!(plan.order(), vec![0, 1, 2]);
    }

    #[test]
    fn config_limits() {
        let mut cfg = PlannerConfig::new("http://127.0.0.1:1/v1/chat/completions", "m");
        cfg.validate().unwrap();
        cfg.max_retries = 6;
        assert!(cfg.validate().is_err());
        cfg.max_retries = 1;
        cfg.timeout = Duration::ZERO;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn completion_text_reads_first_choice() {
        let v: Value = serde_json::from_str(r#"{"choices":[{"message":{"role":"assistant","content":"hi"}}]}"#).unwrap();
        assert_eq!(completion_text(&v), Some("hi"));
        assert_eq!(completion_text(&serde_json::json!({"choices": []})), None);
    }

    struct Scripted {
        replies: RefCell<Vec<Result<String, TransportError>>>,
        calls: Cell<usize>,
    }

    impl ChatTransport for Scripted {
        fn complete(&self, _: &str, _: &str) -> Result<String, TransportError> {
            self.calls.set(self.calls.get() + 1);
            let mut r = self.replies.borrow_mut();
            if r.is_empty() {
                Err(TransportError("exhausted".into()))
            } else {
                r.remove(0)
            }
        }
    }

    fn cfg(dir: &Path) -> PlannerConfig {
        PlannerConfig {
            max_retries: 2,
            cache_dir: dir.to_path_buf(),
            ..PlannerConfig::new("http://unused", "stub-model")
        }
    }

    #[test]
    fn retries_then_caches() {
        let dir = tempfile::tempdir().unwrap();
        let t = Scripted {
            replies: RefCell::new(vec![Err(TransportError("boom".into())), Ok("garbage".into()), Ok(TWO_EVENTS.into())]),
            calls: Cell::new(0),
        };
        let plan = plan_query_with("q", &cfg(dir.path()), &t).unwrap();
        assert_eq!(plan.provenance, PlanSource::Llm);
        assert_eq!(t.calls.get(), 3);

        let again = plan_query_with("q", &cfg(dir.path()), &t).unwrap();
        assert_eq!(again.provenance, PlanSource::Cache);
        assert_eq!(t.calls.get(), 3);
        assert_eq!(again.sub_events, plan.sub_events);
    }

    #[test]
    fn exhausted_retries_fall_back() {
        let dir = tempfile::tempdir().unwrap();
        let t = Scripted {
            replies: RefCell::new(vec![]),
            calls: Cell::new(0),
        };
        let plan = plan_query_with("a person sits down", &cfg(dir.path()), &t).unwrap();
        assert_eq!(plan, QueryPlan::fallback("a person sits down"));
        assert_eq!(t.calls.get(), 3);
        // failures are not cached
        assert_eq!(fs::read_dir(dir.path()).map(|d| d.count()).unwrap_or(0), 0);
    }
}
