//! C ABI for the noisekit toolkit.
//!
//! Conventions: every fallible call returns an [`NkStatus`]; outputs go
//! through pointers that are only written on `NK_STATUS_OK`. Handles
//! (`NkGainTable`) are opaque, created and freed by this library only.
//! On failure a thread-local message is retrievable with
//! [`nk_last_error_message`]. All functions catch panics and report them
//! as `NK_STATUS_INTERNAL_ERROR` instead of unwinding across the FFI
//! boundary.
//!
//! The matching header is generated into `include/noisekit.h` at build
//! time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use noisekit::audio::AudioBuffer;
use noisekit::augment::{mix_at_snr, AugmentationSpec, NoiseOffsetPolicy, Region};
use noisekit::metrics::evaluate_pair;
use noisekit::pitch::PitchConfig;
use noisekit::spectral::FrameGeometry;
use noisekit::train_math::{
    ctc_loss, kl_to_standard_normal, learning_rate, pooling_probability, CtcProblem,
    GaussianPosterior, PoolingSchedule,
};
use noisekit::wada::{estimate_snr, estimate_snr_file, GainTable};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NkStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument value was rejected before any work started.
    InvalidArgument = 2,
    /// A file could not be read or written.
    IoError = 3,
    /// The input data was readable but unusable (wrong format, silent
    /// region, infeasible problem, ...).
    DataError = 4,
    /// An internal invariant failed; a bug, not a caller error.
    InternalError = 5,
}

/// Opaque WADA gain table handle.
pub struct NkGainTable(GainTable);

/// Pair evaluation results, mirroring the library's metric report.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NkMetricReport {
    pub gpe: f64,
    pub vde: f64,
    pub ffe: f64,
    pub mcd_db: f64,
    pub n_frames: usize,
    pub n_both_voiced: usize,
    pub n_voicing_errors: usize,
    pub n_gross_pitch_errors: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    let cstring = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("invalid error message").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn fail(status: NkStatus, message: impl Into<String>) -> NkStatus {
    set_error(message);
    status
}

/// Copies the most recent error message on this thread into `buffer`
/// (NUL-terminated, truncated to `capacity`). Returns the full message
/// length in bytes excluding the NUL, or 0 when there is no message.
///
/// # Safety
/// `buffer` must point to at least `capacity` writable bytes, or be null
/// (in which case only the length is returned).
#[no_mangle]
pub unsafe extern "C" fn nk_last_error_message(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let borrowed = slot.borrow();
        let Some(message) = borrowed.as_ref() else {
            return 0;
        };
        let bytes = message.as_bytes();
        if !buffer.is_null() && capacity > 0 {
            let n = bytes.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buffer.cast(), n);
            *buffer.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn guard<F: FnOnce() -> NkStatus>(f: F) -> NkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(
                NkStatus::InternalError,
                format!("internal panic: {message}"),
            )
        }
    }
}

unsafe fn path_from(ptr: *const c_char) -> Result<&'static Path, NkStatus> {
    if ptr.is_null() {
        return Err(fail(NkStatus::NullPointer, "path pointer is null"));
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => Err(fail(NkStatus::InvalidArgument, "path is not valid UTF-8")),
    }
}

fn wada_status(err: &noisekit::wada::WadaError) -> NkStatus {
    use noisekit::wada::WadaError;
    match err {
        WadaError::Io { .. } => NkStatus::IoError,
        WadaError::Audio(inner) => audio_status(inner),
        _ => NkStatus::DataError,
    }
}

fn audio_status(err: &noisekit::audio::AudioError) -> NkStatus {
    use noisekit::audio::AudioError;
    match err {
        AudioError::Unreadable { .. } | AudioError::Unwritable { .. } => NkStatus::IoError,
        _ => NkStatus::DataError,
    }
}

/// Builds a gain table by Monte-Carlo simulation (deterministic in
/// `seed`). The handle must be freed with [`nk_gain_table_free`].
///
/// # Safety
/// `out` must be a valid pointer to a table-handle slot.
#[no_mangle]
pub unsafe extern "C" fn nk_gain_table_build(
    seed: u64,
    samples_per_point: u64,
    out: *mut *mut NkGainTable,
) -> NkStatus {
    guard(|| {
        if out.is_null() {
            return fail(NkStatus::NullPointer, "out pointer is null");
        }
        if samples_per_point == 0 {
            return fail(NkStatus::InvalidArgument, "samples_per_point must be > 0");
        }
        let table = GainTable::build(seed, samples_per_point);
        *out = Box::into_raw(Box::new(NkGainTable(table)));
        NkStatus::Ok
    })
}

/// Loads a gain table from the JSON produced by [`nk_gain_table_save_json`].
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn nk_gain_table_load_json(
    path: *const c_char,
    out: *mut *mut NkGainTable,
) -> NkStatus {
    guard(|| {
        if out.is_null() {
            return fail(NkStatus::NullPointer, "out pointer is null");
        }
        let path = match path_from(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match GainTable::load_json(path) {
            Ok(table) => {
                *out = Box::into_raw(Box::new(NkGainTable(table)));
                NkStatus::Ok
            }
            Err(err) => fail(wada_status(&err), err.to_string()),
        }
    })
}

/// Saves a gain table as JSON for caching.
///
/// # Safety
/// `table` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nk_gain_table_save_json(
    table: *const NkGainTable,
    path: *const c_char,
) -> NkStatus {
    guard(|| {
        if table.is_null() {
            return fail(NkStatus::NullPointer, "table handle is null");
        }
        let path = match path_from(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match (*table).0.save_json(path) {
            Ok(()) => NkStatus::Ok,
            Err(err) => fail(wada_status(&err), err.to_string()),
        }
    })
}

/// Frees a table handle. Null is a no-op.
///
/// # Safety
/// `table` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn nk_gain_table_free(table: *mut NkGainTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Blind WADA-SNR estimate over `len` mono samples at any scale.
///
/// # Safety
/// `samples` must point to `len` readable doubles; output pointers must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn nk_estimate_snr(
    table: *const NkGainTable,
    samples: *const f64,
    len: usize,
    out_snr_db: *mut f64,
    out_clipped: *mut bool,
) -> NkStatus {
    guard(|| {
        if table.is_null() || samples.is_null() || out_snr_db.is_null() || out_clipped.is_null() {
            return fail(NkStatus::NullPointer, "null pointer argument");
        }
        if len == 0 {
            return fail(NkStatus::InvalidArgument, "len must be > 0");
        }
        let slice = std::slice::from_raw_parts(samples, len);
        let buffer = AudioBuffer::new(slice.to_vec(), 1);
        match estimate_snr(&buffer, &(*table).0) {
            Ok(estimate) => {
                *out_snr_db = estimate.snr_db;
                *out_clipped = estimate.clipped;
                NkStatus::Ok
            }
            Err(err) => fail(wada_status(&err), err.to_string()),
        }
    })
}

/// Blind WADA-SNR estimate over a WAV file.
///
/// # Safety
/// Pointer arguments as in [`nk_estimate_snr`].
#[no_mangle]
pub unsafe extern "C" fn nk_estimate_snr_file(
    table: *const NkGainTable,
    path: *const c_char,
    out_snr_db: *mut f64,
    out_clipped: *mut bool,
) -> NkStatus {
    guard(|| {
        if table.is_null() || out_snr_db.is_null() || out_clipped.is_null() {
            return fail(NkStatus::NullPointer, "null pointer argument");
        }
        let path = match path_from(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match estimate_snr_file(path, &(*table).0) {
            Ok(estimate) => {
                *out_snr_db = estimate.snr_db;
                *out_clipped = estimate.clipped;
                NkStatus::Ok
            }
            Err(err) => fail(wada_status(&err), err.to_string()),
        }
    })
}

/// Mixes `noise` into `speech` at exactly `target_snr_db` over the sample
/// region `[region_start, region_start + region_len)`, reading noise from
/// `noise_offset`. Writes `speech_len` output samples.
///
/// # Safety
/// `speech`, `noise`, and `output` must point to buffers of the stated
/// lengths; output pointers must be valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn nk_mix_at_snr(
    speech: *const f64,
    speech_len: usize,
    noise: *const f64,
    noise_len: usize,
    sample_rate: u32,
    target_snr_db: f64,
    region_start: usize,
    region_len: usize,
    noise_offset: usize,
    output: *mut f64,
    out_realized_snr_db: *mut f64,
    out_clipped: *mut bool,
) -> NkStatus {
    guard(|| {
        if speech.is_null()
            || noise.is_null()
            || output.is_null()
            || out_realized_snr_db.is_null()
            || out_clipped.is_null()
        {
            return fail(NkStatus::NullPointer, "null pointer argument");
        }
        if speech_len == 0 || noise_len == 0 || sample_rate == 0 {
            return fail(
                NkStatus::InvalidArgument,
                "empty buffer or zero sample rate",
            );
        }
        if region_start + region_len > speech_len || region_len == 0 {
            return fail(
                NkStatus::InvalidArgument,
                "region must be non-empty and inside the speech buffer",
            );
        }
        let speech_buf = AudioBuffer::new(
            std::slice::from_raw_parts(speech, speech_len).to_vec(),
            sample_rate,
        );
        let noise_buf = AudioBuffer::new(
            std::slice::from_raw_parts(noise, noise_len).to_vec(),
            sample_rate,
        );
        let rate = sample_rate as f64;
        let spec = AugmentationSpec {
            region: Region::Interval {
                start_s: region_start as f64 / rate,
                end_s: (region_start + region_len) as f64 / rate,
            },
            noise_offset_policy: NoiseOffsetPolicy::Fixed {
                offset: noise_offset,
            },
            ..AugmentationSpec::new(target_snr_db, Region::Full)
        };
        match mix_at_snr(&speech_buf, &noise_buf, &spec) {
            Ok((mixed, outcome)) => {
                std::ptr::copy_nonoverlapping(mixed.samples.as_ptr(), output, speech_len);
                *out_realized_snr_db = outcome.realized_snr_db;
                *out_clipped = outcome.clipped;
                NkStatus::Ok
            }
            Err(err) => fail(NkStatus::DataError, err.to_string()),
        }
    })
}

/// CTC loss (and optionally the gradient) for a `n_frames` x `n_classes`
/// row-major log-probability matrix whose last column is the blank.
/// `out_grad` may be null when only the loss is wanted; otherwise it
/// receives `n_frames * n_classes` values.
///
/// # Safety
/// Matrix and label pointers must cover the stated extents.
#[no_mangle]
pub unsafe extern "C" fn nk_ctc_loss(
    log_probs: *const f64,
    n_frames: usize,
    n_classes: usize,
    labels: *const u32,
    n_labels: usize,
    out_loss: *mut f64,
    out_grad: *mut f64,
) -> NkStatus {
    guard(|| {
        if log_probs.is_null() || out_loss.is_null() || (labels.is_null() && n_labels > 0) {
            return fail(NkStatus::NullPointer, "null pointer argument");
        }
        if n_frames == 0 || n_classes < 2 {
            return fail(
                NkStatus::InvalidArgument,
                "need n_frames >= 1 and n_classes >= 2",
            );
        }
        let flat = std::slice::from_raw_parts(log_probs, n_frames * n_classes);
        let rows: Vec<Vec<f64>> = flat.chunks(n_classes).map(|r| r.to_vec()).collect();
        let labels: Vec<usize> = if n_labels == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(labels, n_labels)
                .iter()
                .map(|&l| l as usize)
                .collect()
        };
        let problem = match CtcProblem::new(&rows, &labels) {
            Ok(problem) => problem,
            Err(err) => return fail(NkStatus::DataError, err.to_string()),
        };
        match ctc_loss(&problem) {
            Ok(result) => {
                *out_loss = result.loss;
                if !out_grad.is_null() {
                    std::ptr::copy_nonoverlapping(
                        result.grad.as_ptr(),
                        out_grad,
                        n_frames * n_classes,
                    );
                }
                NkStatus::Ok
            }
            Err(err) => fail(NkStatus::DataError, err.to_string()),
        }
    })
}

/// Closed-form KL divergence from a diagonal Gaussian to the standard
/// normal.
///
/// # Safety
/// `mean` and `log_variance` must each point to `dims` doubles.
#[no_mangle]
pub unsafe extern "C" fn nk_kl_to_standard_normal(
    mean: *const f64,
    log_variance: *const f64,
    dims: usize,
    out: *mut f64,
) -> NkStatus {
    guard(|| {
        if mean.is_null() || log_variance.is_null() || out.is_null() {
            return fail(NkStatus::NullPointer, "null pointer argument");
        }
        let mean = std::slice::from_raw_parts(mean, dims).to_vec();
        let log_variance = std::slice::from_raw_parts(log_variance, dims).to_vec();
        match GaussianPosterior::new(mean, log_variance) {
            Ok(posterior) => {
                *out = kl_to_standard_normal(&posterior);
                NkStatus::Ok
            }
            Err(err) => fail(NkStatus::InvalidArgument, err.to_string()),
        }
    })
}

/// Mean-pooling probability of the utterance-to-frame schedule.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nk_pooling_probability(
    step: u64,
    start_step: u64,
    end_step: u64,
    out: *mut f64,
) -> NkStatus {
    guard(|| {
        if out.is_null() {
            return fail(NkStatus::NullPointer, "out pointer is null");
        }
        match PoolingSchedule::new(start_step, end_step) {
            Ok(schedule) => {
                *out = pooling_probability(step, &schedule);
                NkStatus::Ok
            }
            Err(err) => fail(NkStatus::InvalidArgument, err.to_string()),
        }
    })
}

/// Learning rate at `step`: linear 3e-3 -> 3e-5 over the first 100000
/// steps, constant afterwards.
#[no_mangle]
pub extern "C" fn nk_learning_rate(step: u64) -> f64 {
    learning_rate(step)
}

/// Scores a candidate WAV against a reference WAV (MCD with DTW plus the
/// GPE/VDE/FFE pitch suite) using the default analysis setup.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nk_evaluate_pair(
    ref_path: *const c_char,
    cand_path: *const c_char,
    out: *mut NkMetricReport,
) -> NkStatus {
    guard(|| {
        if out.is_null() {
            return fail(NkStatus::NullPointer, "out pointer is null");
        }
        let ref_path = match path_from(ref_path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        let cand_path = match path_from(cand_path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        // The frame geometry follows the reference file's sample rate.
        let reference = match noisekit::audio::load_wav(ref_path) {
            Ok(buffer) => buffer,
            Err(err) => return fail(audio_status(&err), err.to_string()),
        };
        let geometry = FrameGeometry::default().with_sample_rate(reference.sample_rate);
        match evaluate_pair(ref_path, cand_path, &geometry, &PitchConfig::default()) {
            Ok(report) => {
                *out = NkMetricReport {
                    gpe: report.gpe,
                    vde: report.vde,
                    ffe: report.ffe,
                    mcd_db: report.mcd_db,
                    n_frames: report.n_frames,
                    n_both_voiced: report.n_both_voiced,
                    n_voicing_errors: report.n_voicing_errors,
                    n_gross_pitch_errors: report.n_gross_pitch_errors,
                };
                NkStatus::Ok
            }
            Err(err) => fail(NkStatus::DataError, err.to_string()),
        }
    })
}
