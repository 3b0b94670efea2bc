//! Meter implementations and the scope-bracketing helpers.

use serde::{Deserialize, Serialize};

use crate::energy::{MeasurementScope, Phase};
use crate::error::{Error, Result};

/// Handle for an open scope; must be closed in LIFO order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScopeId(usize);

impl ScopeId {
    /// Handle at the given stack depth, for meters implemented outside this
    /// crate.
    pub fn at_depth(depth: usize) -> Self {
        Self(depth)
    }

    pub fn depth(self) -> usize {
        self.0
    }
}

/// Brackets measured regions and reports joules per region.
///
/// `end` takes the work units the region performed (rows processed, rows x
/// candidates, ...). Proxy meters price that work; hardware/time meters
/// ignore it.
pub trait EnergyMeter {
    fn begin(&mut self, scope: MeasurementScope) -> Result<ScopeId>;
    fn end(&mut self, id: ScopeId, work_units: f64) -> Result<f64>;
}

/// Runs `action` inside `scope`; the action returns its result and the work
/// units performed. Yields the result and the joules attributed.
pub fn measure_scope<T>(
    meter: &mut dyn EnergyMeter,
    scope: MeasurementScope,
    action: impl FnOnce() -> (T, f64),
) -> Result<(T, f64)> {
    let id = meter.begin(scope)?;
    let (result, work) = action();
    let joules = meter.end(id, work)?;
    Ok((result, joules))
}

/// A meter handle that accumulates everything charged through it; one per
/// charged phase-bucket in the lifecycle loop.
pub struct PhaseMeter<'m> {
    meter: &'m mut dyn EnergyMeter,
    charged_j: f64,
}

impl<'m> PhaseMeter<'m> {
    pub fn new(meter: &'m mut dyn EnergyMeter) -> Self {
        Self {
            meter,
            charged_j: 0.0,
        }
    }

    pub fn measure<T>(
        &mut self,
        scope: MeasurementScope,
        action: impl FnOnce() -> (T, f64),
    ) -> Result<T> {
        let (result, joules) = measure_scope(self.meter, scope, action)?;
        self.charged_j += joules;
        Ok(result)
    }

    /// Total joules charged through this handle so far.
    pub fn charged_j(&self) -> f64 {
        self.charged_j
    }
}

fn push_scope(stack: &mut Vec<MeasurementScope>, scope: MeasurementScope) -> ScopeId {
    stack.push(scope);
    ScopeId(stack.len() - 1)
}

fn pop_scope(stack: &mut Vec<MeasurementScope>, id: ScopeId) -> Result<MeasurementScope> {
    if id.0 + 1 != stack.len() {
        return Err(Error::Instrumentation(format!(
            "scope {} closed while {} scopes are open; scopes must nest strictly",
            id.0,
            stack.len()
        )));
    }
    stack
        .pop()
        .ok_or_else(|| Error::Instrumentation("no open scope".into()))
}

/// Joules per work unit for each phase of the proxy model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VirtualCoefficients {
    pub train_j_per_unit: f64,
    pub detect_j_per_unit: f64,
    pub infer_j_per_unit: f64,
}

impl Default for VirtualCoefficients {
    fn default() -> Self {
        Self {
            train_j_per_unit: 1e-3,
            detect_j_per_unit: 1e-5,
            infer_j_per_unit: 1e-4,
        }
    }
}

/// Deterministic proxy meter: joules = phase coefficient x work units.
#[derive(Debug, Default)]
pub struct VirtualMeter {
    coefficients: VirtualCoefficients,
    stack: Vec<MeasurementScope>,
}

impl VirtualMeter {
    pub fn new(coefficients: VirtualCoefficients) -> Self {
        Self {
            coefficients,
            stack: Vec::new(),
        }
    }
}

impl EnergyMeter for VirtualMeter {
    fn begin(&mut self, scope: MeasurementScope) -> Result<ScopeId> {
        Ok(push_scope(&mut self.stack, scope))
    }

    fn end(&mut self, id: ScopeId, work_units: f64) -> Result<f64> {
        let scope = pop_scope(&mut self.stack, id)?;
        if work_units.is_nan() || work_units < 0.0 {
            return Err(Error::Validation(format!(
                "work units {work_units} must be non-negative"
            )));
        }
        let coefficient = match scope.phase {
            Phase::Train => self.coefficients.train_j_per_unit,
            Phase::Detect => self.coefficients.detect_j_per_unit,
            Phase::Infer => self.coefficients.infer_j_per_unit,
        };
        Ok(coefficient * work_units)
    }
}

/// Process CPU time x average power. Parallel runs would cross-attribute
/// CPU seconds, so runs sharing a process must execute serially.
#[derive(Debug)]
pub struct CpuTimeMeter {
    watts: f64,
    stack: Vec<(MeasurementScope, f64)>,
}

impl CpuTimeMeter {
    pub const DEFAULT_WATTS: f64 = 65.0;

    pub fn new(watts: f64) -> Self {
        Self {
            watts,
            stack: Vec::new(),
        }
    }
}

impl Default for CpuTimeMeter {
    fn default() -> Self {
        Self::new(Self::DEFAULT_WATTS)
    }
}

impl EnergyMeter for CpuTimeMeter {
    fn begin(&mut self, scope: MeasurementScope) -> Result<ScopeId> {
        self.stack.push((scope, process_cpu_seconds()));
        Ok(ScopeId(self.stack.len() - 1))
    }

    fn end(&mut self, id: ScopeId, _work_units: f64) -> Result<f64> {
        if id.0 + 1 != self.stack.len() {
            return Err(Error::Instrumentation(format!(
                "scope {} closed while {} scopes are open; scopes must nest strictly",
                id.0,
                self.stack.len()
            )));
        }
        let (_, start) = self
            .stack
            .pop()
            .ok_or_else(|| Error::Instrumentation("no open scope".into()))?;
        let elapsed = (process_cpu_seconds() - start).max(0.0);
        Ok(elapsed * self.watts)
    }
}

#[cfg(unix)]
fn process_cpu_seconds() -> f64 {
    let mut usage = std::mem::MaybeUninit::<libc::rusage>::zeroed();
    let rc = unsafe { libc::getrusage(libc::RUSAGE_SELF, usage.as_mut_ptr()) };
    if rc != 0 {
        return 0.0;
    }
    let usage = unsafe { usage.assume_init() };
    let tv = |t: libc::timeval| t.tv_sec as f64 + t.tv_usec as f64 * 1e-6;
    tv(usage.ru_utime) + tv(usage.ru_stime)
}

#[cfg(not(unix))]
fn process_cpu_seconds() -> f64 {
    use std::sync::OnceLock;
    use std::time::Instant;
    static START: OnceLock<Instant> = OnceLock::new();
    START.get_or_init(Instant::now).elapsed().as_secs_f64()
}

/// Linux powercap (RAPL) counter reader. Process-global: runs sharing it
/// must be serialized.
#[cfg(feature = "rapl")]
#[derive(Debug)]
pub struct RaplMeter {
    domains: Vec<RaplDomain>,
    stack: Vec<(MeasurementScope, f64)>,
}

#[cfg(feature = "rapl")]
#[derive(Debug)]
struct RaplDomain {
    energy_path: std::path::PathBuf,
    max_range_uj: f64,
}

#[cfg(feature = "rapl")]
impl RaplMeter {
    const POWERCAP_ROOT: &'static str = "/sys/class/powercap";

    /// Discovers top-level `intel-rapl:N` package domains.
    pub fn discover() -> Result<Self> {
        let root = std::path::Path::new(Self::POWERCAP_ROOT);
        let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
        let mut domains = Vec::new();
        for entry in entries.flatten() {
            let name = entry.file_name().to_string_lossy().into_owned();
            // package domains only; sub-domains contain a second colon
            if !name.starts_with("intel-rapl:") || name.matches(':').count() != 1 {
                continue;
            }
            let energy_path = entry.path().join("energy_uj");
            if !energy_path.exists() {
                continue;
            }
            let max_range_uj = std::fs::read_to_string(entry.path().join("max_energy_range_uj"))
                .ok()
                .and_then(|s| s.trim().parse().ok())
                .unwrap_or(f64::MAX);
            domains.push(RaplDomain {
                energy_path,
                max_range_uj,
            });
        }
        if domains.is_empty() {
            return Err(Error::Configuration(
                "no RAPL package domains exposed under /sys/class/powercap".into(),
            ));
        }
        Ok(Self {
            domains,
            stack: Vec::new(),
        })
    }

    fn read_total_uj(&self) -> Result<f64> {
        let mut total = 0.0;
        for domain in &self.domains {
            let raw = std::fs::read_to_string(&domain.energy_path)
                .map_err(|e| Error::io(&domain.energy_path, e))?;
            total += raw
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Instrumentation(format!("unreadable RAPL counter: {e}")))?;
        }
        Ok(total)
    }
}

#[cfg(feature = "rapl")]
impl EnergyMeter for RaplMeter {
    fn begin(&mut self, scope: MeasurementScope) -> Result<ScopeId> {
        let reading = self.read_total_uj()?;
        self.stack.push((scope, reading));
        Ok(ScopeId(self.stack.len() - 1))
    }

    fn end(&mut self, id: ScopeId, _work_units: f64) -> Result<f64> {
        if id.0 + 1 != self.stack.len() {
            return Err(Error::Instrumentation("scopes must nest strictly".into()));
        }
        let (_, start) = self.stack.pop().expect("checked");
        let now = self.read_total_uj()?;
        let mut delta = now - start;
        if delta < 0.0 {
            // counter wrapped
            let range: f64 = self.domains.iter().map(|d| d.max_range_uj).sum();
            delta += range;
        }
        Ok(delta.max(0.0) * 1e-6)
    }
}
