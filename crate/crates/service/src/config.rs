use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

/// Server settings, read from `VRPTW_*` environment variables.
#[derive(Debug, Clone)]
pub struct Config {
    pub bind: SocketAddr,
    /// Extra `*.json` fixtures; they shadow bundled ones of the same name.
    pub fixture_dir: Option<PathBuf>,
    /// Default wall time of a re-optimisation job.
    pub reoptimise_budget: Duration,
    /// Default wall time for seeding a new session.
    pub seeding_budget: Duration,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            fixture_dir: None,
            reoptimise_budget: Duration::from_secs(3),
            seeding_budget: Duration::from_secs(3),
        }
    }
}

impl Config {
    /// `VRPTW_BIND`, `VRPTW_FIXTURE_DIR`, `VRPTW_INTERACTIVE_MS`,
    /// `VRPTW_SEEDING_MS`.
    pub fn from_env() -> Result<Self, String> {
        let mut config = Self::default();
        if let Ok(bind) = std::env::var("VRPTW_BIND") {
            config.bind = bind.parse().map_err(|e| format!("VRPTW_BIND: {e}"))?;
        }
        if let Ok(dir) = std::env::var("VRPTW_FIXTURE_DIR") {
            config.fixture_dir = Some(PathBuf::from(dir));
        }
        if let Some(ms) = millis("VRPTW_INTERACTIVE_MS")? {
            config.reoptimise_budget = ms;
        }
        if let Some(ms) = millis("VRPTW_SEEDING_MS")? {
            config.seeding_budget = ms;
        }
        Ok(config)
    }
}

fn millis(var: &str) -> Result<Option<Duration>, String> {
    match std::env::var(var) {
        Ok(v) => v
            .parse::<u64>()
            .map(|ms| Some(Duration::from_millis(ms)))
            .map_err(|e| format!("{var}: {e}")),
        Err(_) => Ok(None),
    }
}
