//! C ABI over `ctxtrack`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` and
//! released by the matching `*_free`. Every fallible call returns a
//! [`CtxStatus`]; on failure `ctx_last_error` describes the most recent error
//! on the calling thread. Panics are caught and reported as
//! `CTX_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use ctxtrack::context::{
    DetectorContext, LidarContext, LidarContextConfig, RadarContext, RadarContextConfig, RangeBearingClutter,
    SensorPose, UniformContext, UniformContextConfig,
};
use ctxtrack::eval::{gospa, GospaConfig};
use ctxtrack::gmphd::{GmphdConfig, GmphdTracker};
use ctxtrack::models::CvModelConfig;
use ctxtrack::types::{
    Detection, MeasurementCovariance, Position, SensorId, SensorKind, SensorScan, StateCovariance, StateEstimate,
    StateVector, Timestamp,
};
use ctxtrack::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    /// A covariance was not symmetric positive definite.
    Numerical = 4,
    /// Scans were given out of time order.
    TimeOrder = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtxSensorKind {
    Radar = 0,
    Lidar = 1,
}

/// A position measurement. `cov` is row-major 2×2; set `area` to NaN when the
/// sensor reports no segmentation area.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct CtxDetection {
    pub x: f64,
    pub y: f64,
    pub cov: [f64; 4],
    pub area: f64,
}

/// An extracted target: label and state `[x, vx, y, vy]`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CtxEstimate {
    pub label: u64,
    pub mean: [f64; 4],
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CtxGospa {
    pub total: f64,
    pub localization: f64,
    pub missed: f64,
    pub false_estimates: f64,
}

/// Detection probability and clutter model for one scan.
pub struct CtxContext {
    inner: Arc<dyn DetectorContext>,
}

/// Labelled GM-PHD filter.
pub struct CtxGmphd {
    tracker: GmphdTracker,
    estimates: Vec<CtxEstimate>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: CtxStatus, message: &str) -> CtxStatus {
    set_error(message);
    status
}

fn from_error(e: Error) -> CtxStatus {
    let status = match e {
        Error::NotPositiveDefinite => CtxStatus::Numerical,
        Error::NegativeTimeStep(_) => CtxStatus::TimeOrder,
        Error::InvalidConfig(_) => CtxStatus::InvalidConfig,
        _ => CtxStatus::InvalidArgument,
    };
    fail(status, &e.to_string())
}

fn guard(f: impl FnOnce() -> CtxStatus) -> CtxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(CtxStatus::Panic, "internal panic"),
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ctx_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let bytes = e.borrow();
        let bytes = bytes.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Context with a constant detection probability and clutter intensity (m⁻²).
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn ctx_context_new_uniform(pd: f64, lambda: f64, out: *mut *mut CtxContext) -> CtxStatus {
    guard(|| {
        if out.is_null() {
            return fail(CtxStatus::NullPointer, "out is null");
        }
        let config = UniformContextConfig { pd, lambda };
        if let Err(e) = config.validate() {
            return from_error(e);
        }
        put(out, CtxContext {
            inner: Arc::new(UniformContext::new(config)),
        });
        CtxStatus::Ok
    })
}

/// Radar coverage at the given sensor pose with default parameters; clutter
/// is converted to m⁻² around the sensor.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn ctx_context_new_radar(x: f64, y: f64, heading: f64, out: *mut *mut CtxContext) -> CtxStatus {
    guard(|| {
        if out.is_null() {
            return fail(CtxStatus::NullPointer, "out is null");
        }
        if !(x.is_finite() && y.is_finite() && heading.is_finite()) {
            return fail(CtxStatus::InvalidArgument, "sensor pose must be finite");
        }
        let pose = SensorPose::new(Position::new(x, y), heading);
        let radar = Arc::new(RadarContext::new(RadarContextConfig::default().at(pose)));
        put(out, CtxContext {
            inner: Arc::new(RangeBearingClutter::new(pose.position, radar)),
        });
        CtxStatus::Ok
    })
}

/// Lidar coverage at the given sensor pose with default parameters.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn ctx_context_new_lidar(x: f64, y: f64, heading: f64, out: *mut *mut CtxContext) -> CtxStatus {
    guard(|| {
        if out.is_null() {
            return fail(CtxStatus::NullPointer, "out is null");
        }
        if !(x.is_finite() && y.is_finite() && heading.is_finite()) {
            return fail(CtxStatus::InvalidArgument, "sensor pose must be finite");
        }
        let pose = SensorPose::new(Position::new(x, y), heading);
        put(out, CtxContext {
            inner: Arc::new(LidarContext::new(LidarContextConfig::default().at(pose))),
        });
        CtxStatus::Ok
    })
}

/// # Safety
/// `ctx` must be null or a handle from a `ctx_context_new_*` call not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ctx_context_free(ctx: *mut CtxContext) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

/// Detection probability of a target at `(x, y)`.
///
/// # Safety
/// `ctx` must be a live context handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_context_pd(ctx: *const CtxContext, x: f64, y: f64, out: *mut f64) -> CtxStatus {
    guard(|| {
        if ctx.is_null() || out.is_null() {
            return fail(CtxStatus::NullPointer, "context or out is null");
        }
        let state = match StateEstimate::new(StateVector::new(x, 0.0, y, 0.0), StateCovariance::identity()) {
            Ok(s) => s,
            Err(e) => return from_error(e),
        };
        match ctxtrack::context::detection_probability(&*(*ctx).inner, &state) {
            Ok(pd) => {
                *out = pd;
                CtxStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

fn detection(d: &CtxDetection) -> Result<Detection, Error> {
    if !(d.x.is_finite() && d.y.is_finite()) {
        return Err(Error::InvalidConfig("detection position must be finite".into()));
    }
    let area = (!d.area.is_nan()).then_some(d.area);
    let [a, b, c, e] = d.cov;
    Detection::new(
        Position::new(d.x, d.y),
        MeasurementCovariance::new(a, b, c, e),
        area,
        SensorId::new("ffi"),
    )
}

/// Clutter intensity (m⁻²) at a detection.
///
/// # Safety
/// `ctx` must be a live context handle, `det` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_context_clutter(
    ctx: *const CtxContext,
    det: *const CtxDetection,
    out: *mut f64,
) -> CtxStatus {
    guard(|| {
        if ctx.is_null() || det.is_null() || out.is_null() {
            return fail(CtxStatus::NullPointer, "context, detection or out is null");
        }
        let result = detection(&*det).and_then(|d| ctxtrack::context::clutter_intensity(&*(*ctx).inner, &d));
        match result {
            Ok(v) => {
                *out = v;
                CtxStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// GM-PHD filter with default parameters.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn ctx_gmphd_new(out: *mut *mut CtxGmphd) -> CtxStatus {
    guard(|| {
        if out.is_null() {
            return fail(CtxStatus::NullPointer, "out is null");
        }
        match GmphdTracker::new(GmphdConfig::default(), CvModelConfig::default()) {
            Ok(tracker) => {
                put(out, CtxGmphd {
                    tracker,
                    estimates: Vec::new(),
                });
                CtxStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `f` must be null or a handle from `ctx_gmphd_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ctx_gmphd_free(f: *mut CtxGmphd) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Processes one scan taken at `time` seconds. Scans must arrive in time
/// order. On error the filter keeps its previous state.
///
/// # Safety
/// `f` and `ctx` must be live handles; `dets` must point to `n` detections
/// (it may be null when `n` is 0).
#[no_mangle]
pub unsafe extern "C" fn ctx_gmphd_step(
    f: *mut CtxGmphd,
    ctx: *const CtxContext,
    kind: CtxSensorKind,
    time: f64,
    dets: *const CtxDetection,
    n: usize,
) -> CtxStatus {
    guard(|| {
        if f.is_null() || ctx.is_null() || (dets.is_null() && n > 0) {
            return fail(CtxStatus::NullPointer, "filter, context or detections is null");
        }
        if !time.is_finite() {
            return fail(CtxStatus::InvalidArgument, "time must be finite");
        }
        let raw = if n == 0 { &[][..] } else { std::slice::from_raw_parts(dets, n) };
        let detections = match raw.iter().map(detection).collect::<Result<Vec<_>, _>>() {
            Ok(d) => d,
            Err(e) => return from_error(e),
        };
        let scan = SensorScan {
            sensor_id: SensorId::new("ffi"),
            kind: match kind {
                CtxSensorKind::Radar => SensorKind::Radar,
                CtxSensorKind::Lidar => SensorKind::Lidar,
            },
            timestamp: Timestamp::from_secs(time),
            pose: SensorPose::default(),
            detections,
            context: Some((*ctx).inner.clone()),
        };
        let f = &mut *f;
        match f.tracker.step(&scan) {
            Ok(out) => {
                f.estimates = out
                    .iter()
                    .map(|(l, s)| CtxEstimate {
                        label: l.0,
                        mean: [s.mean[0], s.mean[1], s.mean[2], s.mean[3]],
                    })
                    .collect();
                CtxStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Copies the estimates extracted by the last step into `out`. `written`
/// receives the number available; if it exceeds `capacity` nothing is copied
/// and `CTX_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `f` must be a live handle, `out` must point to `capacity` writable
/// estimates (or be null when `capacity` is 0) and `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_gmphd_estimates(
    f: *const CtxGmphd,
    out: *mut CtxEstimate,
    capacity: usize,
    written: *mut usize,
) -> CtxStatus {
    guard(|| {
        if f.is_null() || written.is_null() || (out.is_null() && capacity > 0) {
            return fail(CtxStatus::NullPointer, "filter, out or written is null");
        }
        let est = &(*f).estimates;
        *written = est.len();
        if est.len() > capacity {
            return fail(CtxStatus::BufferTooSmall, "estimate buffer too small");
        }
        if !est.is_empty() {
            std::ptr::copy_nonoverlapping(est.as_ptr(), out, est.len());
        }
        CtxStatus::Ok
    })
}

/// Sum of mixture weights, the expected number of targets.
///
/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_gmphd_total_weight(f: *const CtxGmphd, out: *mut f64) -> CtxStatus {
    guard(|| {
        if f.is_null() || out.is_null() {
            return fail(CtxStatus::NullPointer, "filter or out is null");
        }
        *out = (*f).tracker.mixture().map_or(0.0, |m| m.total_weight());
        CtxStatus::Ok
    })
}

unsafe fn positions(xy: *const f64, n: usize) -> Vec<Position> {
    if n == 0 {
        return Vec::new();
    }
    std::slice::from_raw_parts(xy, 2 * n)
        .chunks_exact(2)
        .map(|p| Position::new(p[0], p[1]))
        .collect()
}

/// GOSPA between `n` truth points and `m` estimates, each given as
/// interleaved `x, y` pairs.
///
/// # Safety
/// `truth` must point to `2n` doubles and `estimates` to `2m` doubles (either
/// may be null when its count is 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ctx_gospa(
    truth: *const f64,
    n: usize,
    estimates: *const f64,
    m: usize,
    c: f64,
    p: f64,
    alpha: f64,
    out: *mut CtxGospa,
) -> CtxStatus {
    guard(|| {
        if out.is_null() || (truth.is_null() && n > 0) || (estimates.is_null() && m > 0) {
            return fail(CtxStatus::NullPointer, "truth, estimates or out is null");
        }
        let config = GospaConfig { c, p, alpha };
        if let Err(e) = config.validate() {
            return from_error(e);
        }
        let (x, y) = (positions(truth, n), positions(estimates, m));
        if x.iter().chain(&y).any(|q| !(q.x.is_finite() && q.y.is_finite())) {
            return fail(CtxStatus::InvalidArgument, "points must be finite");
        }
        let g = gospa(&x, &y, &config);
        *out = CtxGospa {
            total: g.total,
            localization: g.localization,
            missed: g.missed,
            false_estimates: g.false_,
        };
        CtxStatus::Ok
    })
}
