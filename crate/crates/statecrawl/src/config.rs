//! Run configuration: defaults < config file < flags < environment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statecrawl_core::policy::{MetadataAccounting, DEFAULT_METADATA_RECORD_BYTES};
use statecrawl_core::{CrawlLimits, CrawlRates, DateTime, PolicyKind, SessionPatterns};

use crate::error::{Error, Result};
use crate::live::LiveConfig;

/// Overrides the configured TimeMap endpoint.
pub const ENDPOINT_ENV: &str = "STATECRAWL_TIMEMAP_ENDPOINT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    /// Baseline frontier size; defaults to the nondeferred seeds' `R0`.
    pub baseline_size: Option<u64>,
    /// Measured baseline (archival crawler only) time in seconds.
    pub baseline_time: Option<f64>,
    /// Measured crawl time per level, index = level.
    pub times: Option<Vec<f64>>,
    /// Mean resource bytes per level for deferred seeds; the last entry
    /// covers deeper levels.
    pub mean_bytes_deferred: Vec<u64>,
    pub mean_bytes_nondeferred: Vec<u64>,
    pub metadata_record_bytes: u64,
    pub accounting: MetadataAccounting,
    /// URIs per monthly crawl the corpus is scaled to.
    pub base_uris: u64,
    /// Bytes of one monthly crawl without descendants.
    pub base_bytes: u64,
    pub months: u64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            baseline_size: None,
            baseline_time: None,
            times: None,
            mean_bytes_deferred: vec![2_600, 2_400, 2_400],
            mean_bytes_nondeferred: vec![2_600],
            metadata_record_bytes: DEFAULT_METADATA_RECORD_BYTES,
            accounting: MetadataAccounting::PerDescendant,
            base_uris: 1_810_000_000,
            base_bytes: 145_000_000_000_000,
            months: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Optional seed list; without one every fixture is crawled.
    pub seeds: Option<PathBuf>,
    pub fixtures: PathBuf,
    pub out: PathBuf,
    pub limits: CrawlLimits,
    pub rates: CrawlRates,
    pub policy: PolicyKind,
    pub timemap_endpoint: Option<String>,
    pub holdings: Option<PathBuf>,
    pub session_patterns: SessionPatterns,
    pub workers: usize,
    /// Minimum size of the simulated driver's markup.
    pub markup_bytes: usize,
    /// Clock origin for metadata timestamps, ISO 8601.
    pub started_at: String,
    pub top_k: usize,
    pub estimate: EstimateConfig,
    pub live: LiveConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seeds: None,
            fixtures: PathBuf::from("fixtures"),
            out: PathBuf::from("out"),
            limits: CrawlLimits::default(),
            rates: CrawlRates::default(),
            policy: PolicyKind::MaxRoi,
            timemap_endpoint: None,
            holdings: None,
            session_patterns: SessionPatterns::default(),
            workers: 4,
            markup_bytes: 0,
            started_at: "1970-01-01T00:00:00Z".into(),
            top_k: 10,
            estimate: EstimateConfig::default(),
            live: LiveConfig::default(),
        }
    }
}

/// Command-line overrides; `None` leaves the file or default value.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// TOML config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed list, one URI-R per line; defaults to every fixture
    #[arg(long)]
    pub seeds: Option<PathBuf>,
    /// Fixture directory
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// Output directory for stage artifacts
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seeds crawled in parallel
    #[arg(long)]
    pub workers: Option<usize>,
    /// Deepest level expanded
    #[arg(long)]
    pub max_depth: Option<u32>,
    /// Events explored per state
    #[arg(long)]
    pub max_events: Option<u32>,
    /// State budget per seed
    #[arg(long)]
    pub max_states: Option<u32>,
    /// States offering more events than this are not expanded
    #[arg(long)]
    pub explosion_threshold: Option<u64>,
    /// MaxCoverage or MaxROI
    #[arg(long)]
    pub policy: Option<String>,
    /// TimeMap URL prefix or template with `{uri}`
    #[arg(long)]
    pub timemap_endpoint: Option<String>,
    /// Holdings file for offline coverage
    #[arg(long)]
    pub holdings: Option<PathBuf>,
    /// Comma-separated query keys to strip; `prefix*` allowed
    #[arg(long)]
    pub session_patterns: Option<String>,
    /// Pad simulated markup to at least this many bytes
    #[arg(long)]
    pub markup_bytes: Option<usize>,
    /// Clock origin for metadata timestamps (ISO 8601)
    #[arg(long)]
    pub started_at: Option<String>,
    /// Rows in the occurrence ranking
    #[arg(long)]
    pub top_k: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Layers file, flags and environment over the defaults. `env` is
    /// injected so tests need not touch the process environment.
    pub fn resolve(flags: &Overrides, env: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let mut config = match &flags.config {
            Some(path) => Self::read(path)?,
            None => Self::default(),
        };
        config.apply(flags)?;
        if let Some(endpoint) = env(ENDPOINT_ENV).filter(|v| !v.trim().is_empty()) {
            config.timemap_endpoint = Some(endpoint);
        }
        config.validate()?;
        Ok(config)
    }

    fn apply(&mut self, flags: &Overrides) -> Result<()> {
        fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
            if let Some(v) = value {
                *slot = v.clone();
            }
        }
        if flags.seeds.is_some() {
            self.seeds = flags.seeds.clone();
        }
        set(&mut self.fixtures, &flags.fixtures);
        set(&mut self.out, &flags.out);
        set(&mut self.workers, &flags.workers);
        set(&mut self.limits.max_depth, &flags.max_depth);
        set(&mut self.limits.max_events_per_state, &flags.max_events);
        set(&mut self.limits.max_states_per_seed, &flags.max_states);
        set(&mut self.limits.explosion_threshold, &flags.explosion_threshold);
        if let Some(name) = &flags.policy {
            self.policy = PolicyKind::from_name(name)
                .ok_or_else(|| Error::Config(format!("unknown policy {name:?}; expected MaxCoverage or MaxROI")))?;
        }
        if flags.timemap_endpoint.is_some() {
            self.timemap_endpoint = flags.timemap_endpoint.clone();
        }
        if flags.holdings.is_some() {
            self.holdings = flags.holdings.clone();
        }
        if let Some(list) = &flags.session_patterns {
            self.session_patterns = SessionPatterns::new(list.split(',').map(str::trim));
        }
        set(&mut self.markup_bytes, &flags.markup_bytes);
        set(&mut self.started_at, &flags.started_at);
        set(&mut self.top_k, &flags.top_k);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.limits.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.rates.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.live.validate().map_err(Error::Config)?;
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if self.estimate.months == 0 {
            return Err(Error::Config("estimate.months must be at least 1".into()));
        }
        if self.estimate.mean_bytes_deferred.is_empty() || self.estimate.mean_bytes_nondeferred.is_empty() {
            return Err(Error::Config("estimate mean byte lists must not be empty".into()));
        }
        self.started_at()?;
        Ok(())
    }

    pub fn started_at(&self) -> Result<DateTime> {
        DateTime::parse_iso8601(&self.started_at)
            .map_err(|e| Error::Config(format!("started_at {:?}: {}", self.started_at, e.0)))
    }

    /// Paths a crawl needs.
    pub fn check_crawl_inputs(&self) -> Result<()> {
        require_dir(&self.fixtures, "fixtures")?;
        if let Some(seeds) = &self.seeds {
            require_file(seeds, "seeds")?;
        }
        Ok(())
    }

    /// Exactly one of holdings file and live endpoint.
    pub fn archive_source(&self) -> Result<ArchiveSource> {
        match (&self.holdings, &self.timemap_endpoint) {
            (Some(path), None) => {
                require_file(path, "holdings")?;
                Ok(ArchiveSource::Holdings(path.clone()))
            }
            (None, Some(endpoint)) => Ok(ArchiveSource::Live(endpoint.clone())),
            (Some(_), Some(_)) => Err(Error::Config(format!(
                "both holdings and a TimeMap endpoint are set (check {ENDPOINT_ENV}); choose one"
            ))),
            (None, None) => Err(Error::Config(format!(
                "coverage needs --holdings or a TimeMap endpoint (--timemap-endpoint or {ENDPOINT_ENV})"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArchiveSource {
    Holdings(PathBuf),
    Live(String),
}

fn require_dir(path: &Path, what: &str) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} directory {} does not exist", path.display())))
    }
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} file {} does not exist", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env(_: &str) -> Option<String> {
        None
    }

    #[test]
    fn precedence_is_defaults_file_flags_env() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.toml");
        std::fs::write(
            &file,
            "workers = 2\ntop_k = 5\ntimemap_endpoint = \"http://file.test/\"\n[limits]\nmax_depth = 2\n",
        )
        .unwrap();
        let flags = Overrides {
            config: Some(file),
            top_k: Some(7),
            timemap_endpoint: Some("http://flag.test/".into()),
            ..Overrides::default()
        };
        let c = RunConfig::resolve(&flags, no_env).unwrap();
        assert_eq!((c.workers, c.top_k, c.limits.max_depth), (2, 7, 2));
        assert_eq!(c.limits.max_events_per_state, 256);
        assert_eq!(c.timemap_endpoint.as_deref(), Some("http://flag.test/"));
        let env = |k: &str| (k == ENDPOINT_ENV).then(|| "http://env.test/".to_string());
        let c = RunConfig::resolve(&flags, env).unwrap();
        assert_eq!(c.timemap_endpoint.as_deref(), Some("http://env.test/"));
    }

    #[test]
    fn config_errors() {
        assert!(matches!(RunConfig::from_toml("bogus = 1"), Err(Error::Config(_))));
        let bad_policy = Overrides {
            policy: Some("greedy".into()),
            ..Overrides::default()
        };
        assert!(matches!(RunConfig::resolve(&bad_policy, no_env), Err(Error::Config(_))));
        let zero = Overrides {
            max_depth: Some(0),
            ..Overrides::default()
        };
        assert!(matches!(RunConfig::resolve(&zero, no_env), Err(Error::Config(_))));
    }

    #[test]
    fn archive_source_must_be_unique() {
        let mut c = RunConfig::default();
        assert!(matches!(c.archive_source(), Err(Error::Config(_))));
        c.timemap_endpoint = Some("http://a.test/".into());
        assert_eq!(c.archive_source().unwrap(), ArchiveSource::Live("http://a.test/".into()));
        c.holdings = Some("h.txt".into());
        assert!(matches!(c.archive_source(), Err(Error::Config(_))));
    }

    #[test]
    fn default_round_trips_through_toml() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
    }
}
