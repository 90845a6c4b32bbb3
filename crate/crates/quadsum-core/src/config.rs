//! Pipeline configuration: verification window, search horizons, build mode.

/// How stratification builds justify their claims.
///
/// `Certified` requires a structure certificate on the operator and only
/// returns answers backed by it; `Heuristic` answers within the configured
/// horizons and relies on post-hoc window validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Certified,
    Heuristic,
}

/// Desk-scale bounds for the build and verification machinery.
///
/// Defaults follow the window: orbit searches run to `4 * window`, family
/// coordinate extraction consumes at most `8 * window` members, candidate
/// scans cover one window.
#[derive(Clone, Copy, Debug)]
pub struct Config {
    /// Columns checked by window verification.
    pub window: usize,
    /// Longest orbit explored before an orbit is declared free (evidence
    /// `FreeUpTo(orbit_horizon)`).
    pub orbit_horizon: usize,
    /// Most family members consumed while extracting coordinates before
    /// giving up with `HorizonExceeded`.
    pub family_horizon: usize,
    /// How many basis vectors the free-vector scan inspects.
    pub free_scan: usize,
    /// How many leading basis vectors must lie in the built span before the
    /// greedy construction declares the stratification finite.
    pub termination_scan: usize,
    /// Strata materialized before an unterminated build is declared
    /// omega-indexed (further strata are produced on demand).
    pub omega_probe: usize,
    pub mode: Mode,
}

impl Config {
    pub fn with_window(window: usize) -> Self {
        assert!(window >= 1, "window must be at least 1");
        Config {
            window,
            orbit_horizon: 4 * window,
            family_horizon: 8 * window,
            free_scan: window,
            termination_scan: window,
            omega_probe: window,
            mode: Mode::Heuristic,
        }
    }

    pub fn certified(mut self) -> Self {
        self.mode = Mode::Certified;
        self
    }

    /// Invariant required by the run configuration: horizons never undercut
    /// the window.
    pub fn validate(&self) -> bool {
        self.window >= 1 && self.orbit_horizon >= self.window && self.family_horizon >= self.window
    }
}

impl Default for Config {
    fn default() -> Self {
        Config::with_window(64)
    }
}
