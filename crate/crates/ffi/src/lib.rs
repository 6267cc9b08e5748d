//! C ABI over `qdialog`.
//!
//! Experiments are exposed as an opaque `QdExperiment` handle. Every fallible
//! call returns a `QdStatus`; on failure `qd_last_error` gives a message for
//! the calling thread. Strings returned through out-pointers are owned by the
//! caller and must be released with `qd_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qdialog::harness::{replay, run_experiment, Estimate, ExperimentConfig, MessageSource};
use qdialog::io::{parse_transcript, summary_to_string, transcript_to_string, SummaryDocument};
use qdialog::table::check_table;
use qdialog::{decode_peer_bit, BellLabel, QubitIndex, RoundRecord, Strategy, SummaryStats};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    Schema = 3,
    Mismatch = 4,
    TamperPhi = 5,
    InvalidArgument = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdBellOutcome {
    PhiPlus = 0,
    PhiMinus = 1,
    PsiPlus = 2,
    PsiMinus = 3,
}

impl From<BellLabel> for QdBellOutcome {
    fn from(l: BellLabel) -> Self {
        match l {
            BellLabel::PhiPlus => QdBellOutcome::PhiPlus,
            BellLabel::PhiMinus => QdBellOutcome::PhiMinus,
            BellLabel::PsiPlus => QdBellOutcome::PsiPlus,
            BellLabel::PsiMinus => QdBellOutcome::PsiMinus,
        }
    }
}

impl From<QdBellOutcome> for BellLabel {
    fn from(o: QdBellOutcome) -> Self {
        match o {
            QdBellOutcome::PhiPlus => BellLabel::PhiPlus,
            QdBellOutcome::PhiMinus => BellLabel::PhiMinus,
            QdBellOutcome::PsiPlus => BellLabel::PsiPlus,
            QdBellOutcome::PsiMinus => BellLabel::PsiMinus,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdQubit {
    Travel = 0,
    Home = 1,
}

impl From<QdQubit> for QubitIndex {
    fn from(q: QdQubit) -> Self {
        match q {
            QdQubit::Travel => QubitIndex::Travel,
            QdQubit::Home => QubitIndex::Home,
        }
    }
}

/// Experiment parameters. String fields may be NULL: `adversary` defaults to
/// "none", message sources to "random".
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QdConfig {
    pub rounds: u64,
    pub control_prob: f64,
    pub announce_fraction: f64,
    pub loss_p: f64,
    pub seed: u64,
    pub adversary: *const c_char,
    pub alice_message: *const c_char,
    pub bob_message: *const c_char,
    pub bob_target: QdQubit,
}

/// Flattened summary. Rates without trials are NaN; `would_abort_round` is
/// -1 when nothing would abort.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QdSummary {
    pub rounds: u64,
    pub control_rounds: u64,
    pub message_rounds: u64,
    pub lost_rounds: u64,
    pub payload_bits: u64,
    pub message_delivery: f64,
    pub detection_rate: f64,
    pub ber_alice_to_bob: f64,
    pub ber_bob_to_alice: f64,
    pub phi_rate: f64,
    pub mismatch_rate: f64,
    pub eve_accuracy_j: f64,
    pub eve_accuracy_k: f64,
    pub throughput: f64,
    pub would_abort_round: i64,
}

impl From<&SummaryStats> for QdSummary {
    fn from(s: &SummaryStats) -> Self {
        let rate = |e: &Option<Estimate>| e.map_or(f64::NAN, |e| e.rate);
        QdSummary {
            rounds: s.rounds,
            control_rounds: s.control_rounds,
            message_rounds: s.message_rounds,
            lost_rounds: s.lost_rounds,
            payload_bits: s.payload_bits,
            message_delivery: rate(&s.message_delivery),
            detection_rate: rate(&s.detection_rate),
            ber_alice_to_bob: rate(&s.ber_alice_to_bob),
            ber_bob_to_alice: rate(&s.ber_bob_to_alice),
            phi_rate: rate(&s.phi_rate),
            mismatch_rate: rate(&s.mismatch_rate),
            eve_accuracy_j: rate(&s.eve_accuracy_j),
            eve_accuracy_k: rate(&s.eve_accuracy_k),
            throughput: s.throughput.unwrap_or(f64::NAN),
            would_abort_round: s.would_abort_round.map_or(-1, |r| r as i64),
        }
    }
}

/// Opaque experiment result: summary, transcript and (for live runs) the
/// effective configuration.
pub struct QdExperiment {
    config: Option<ExperimentConfig>,
    summary: SummaryStats,
    records: Vec<RoundRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: QdStatus, message: impl Into<String>) -> QdStatus {
    set_error(message);
    status
}

fn guard(body: impl FnOnce() -> QdStatus) -> QdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|_| fail(QdStatus::Panic, "internal panic"))
}

unsafe fn opt_str<'a>(p: *const c_char, field: &str) -> Result<Option<&'a str>, QdStatus> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| fail(QdStatus::InvalidArgument, format!("{field} is not valid UTF-8")))
}

unsafe fn config_from_c(c: &QdConfig) -> Result<ExperimentConfig, QdStatus> {
    let invalid = |m: String| fail(QdStatus::InvalidConfig, m);
    let adversary = match opt_str(c.adversary, "adversary")? {
        Some(s) => s.parse::<Strategy>().map_err(|e| invalid(e.to_string()))?,
        None => Strategy::Honest,
    };
    let message = |p, party| -> Result<MessageSource, QdStatus> {
        match opt_str(p, party)? {
            Some(s) => s.parse().map_err(|e| invalid(format!("{party}: {e}"))),
            None => Ok(MessageSource::Random),
        }
    };
    Ok(ExperimentConfig {
        rounds: c.rounds,
        control_prob: c.control_prob,
        announce_fraction: c.announce_fraction,
        adversary,
        loss_p: c.loss_p,
        seed: c.seed,
        alice_message: message(c.alice_message, "alice_message")?,
        bob_message: message(c.bob_message, "bob_message")?,
        bob_encode_target: c.bob_target.into(),
    })
}

fn into_c_string(s: String, out: *mut *mut c_char) -> QdStatus {
    match CString::new(s) {
        Ok(c) => {
            // SAFETY: callers checked `out` for null.
            unsafe { *out = c.into_raw() };
            QdStatus::Ok
        }
        Err(_) => fail(QdStatus::Panic, "string contains NUL"),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn qd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Fills `out` with the default configuration.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one `QdConfig`.
#[no_mangle]
pub unsafe extern "C" fn qd_config_default(out: *mut QdConfig) -> QdStatus {
    guard(|| {
        if out.is_null() {
            return fail(QdStatus::NullPointer, "out is NULL");
        }
        let d = ExperimentConfig::default();
        *out = QdConfig {
            rounds: d.rounds,
            control_prob: d.control_prob,
            announce_fraction: d.announce_fraction,
            loss_p: d.loss_p,
            seed: d.seed,
            adversary: ptr::null(),
            alice_message: ptr::null(),
            bob_message: ptr::null(),
            bob_target: QdQubit::Travel,
        };
        QdStatus::Ok
    })
}

/// Runs an experiment. On success `*out` receives a handle to release with
/// `qd_experiment_free`.
///
/// # Safety
/// `config` must point to a valid `QdConfig` whose string fields are NULL or
/// NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_experiment_run(
    config: *const QdConfig,
    out: *mut *mut QdExperiment,
) -> QdStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            return fail(QdStatus::NullPointer, "config or out is NULL");
        }
        let config = match config_from_c(&*config) {
            Ok(c) => c,
            Err(status) => return status,
        };
        match run_experiment(&config) {
            Ok(result) => {
                let exp = QdExperiment {
                    config: Some(config),
                    summary: result.summary,
                    records: result.records,
                };
                *out = Box::into_raw(Box::new(exp));
                QdStatus::Ok
            }
            Err(e) => fail(QdStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// Rebuilds an experiment from JSON-lines transcript text (replay).
///
/// # Safety
/// `transcript` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_experiment_from_jsonl(
    transcript: *const c_char,
    out: *mut *mut QdExperiment,
) -> QdStatus {
    guard(|| {
        if transcript.is_null() || out.is_null() {
            return fail(QdStatus::NullPointer, "transcript or out is NULL");
        }
        let bytes = CStr::from_ptr(transcript).to_bytes();
        let records = match parse_transcript(bytes) {
            Ok(r) => r,
            Err(e) => return fail(QdStatus::Schema, e.to_string()),
        };
        match replay(&records) {
            Ok(summary) => {
                *out = Box::into_raw(Box::new(QdExperiment { config: None, summary, records }));
                QdStatus::Ok
            }
            Err((idx, m)) => fail(QdStatus::Schema, format!("transcript line {}: {m}", idx + 1)),
        }
    })
}

/// # Safety
/// `exp` must be a live handle (or NULL); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_experiment_summary(
    exp: *const QdExperiment,
    out: *mut QdSummary,
) -> QdStatus {
    guard(|| {
        if exp.is_null() || out.is_null() {
            return fail(QdStatus::NullPointer, "exp or out is NULL");
        }
        *out = QdSummary::from(&(*exp).summary);
        QdStatus::Ok
    })
}

/// Number of rounds in the transcript; 0 for NULL.
///
/// # Safety
/// `exp` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qd_experiment_round_count(exp: *const QdExperiment) -> u64 {
    if exp.is_null() {
        return 0;
    }
    (*exp).records.len() as u64
}

/// Transcript as JSON lines, identical to `transcript.jsonl`.
///
/// # Safety
/// `exp` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_experiment_transcript_jsonl(
    exp: *const QdExperiment,
    out: *mut *mut c_char,
) -> QdStatus {
    guard(|| {
        if exp.is_null() || out.is_null() {
            return fail(QdStatus::NullPointer, "exp or out is NULL");
        }
        into_c_string(transcript_to_string(&(*exp).records), out)
    })
}

/// Summary document, identical in content to `summary.json`.
///
/// # Safety
/// `exp` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_experiment_summary_json(
    exp: *const QdExperiment,
    out: *mut *mut c_char,
) -> QdStatus {
    guard(|| {
        if exp.is_null() || out.is_null() {
            return fail(QdStatus::NullPointer, "exp or out is NULL");
        }
        let exp = &*exp;
        let doc = SummaryDocument::new(exp.config.clone(), exp.summary.clone());
        into_c_string(summary_to_string(&doc), out)
    })
}

/// # Safety
/// `exp` must be a handle from this library not yet freed, or NULL.
#[no_mangle]
pub unsafe extern "C" fn qd_experiment_free(exp: *mut QdExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// # Safety
/// `s` must be a string returned by this library not yet freed, or NULL.
#[no_mangle]
pub unsafe extern "C" fn qd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Checks the four encoding-table cells. `out_table` receives the observed
/// outcome for `(j, k)` at index `2 * j + k`. Returns `Mismatch` if any cell
/// is not deterministic or differs from the reference.
///
/// # Safety
/// `out_table` must point to four writable `QdBellOutcome` slots.
#[no_mangle]
pub unsafe extern "C" fn qd_check_table(
    bob_target: QdQubit,
    repetitions: u64,
    seed: u64,
    out_table: *mut QdBellOutcome,
) -> QdStatus {
    guard(|| {
        if out_table.is_null() {
            return fail(QdStatus::NullPointer, "out_table is NULL");
        }
        let report = check_table(bob_target.into(), repetitions, seed);
        let observed = report.observed();
        for (j, row) in observed.iter().enumerate() {
            for (k, label) in row.iter().enumerate() {
                *out_table.add(2 * j + k) = (*label).into();
            }
        }
        let failure = report.failures().next().map(|cell| cell.describe());
        match failure {
            None => QdStatus::Ok,
            Some(message) => fail(QdStatus::Mismatch, message),
        }
    })
}

/// `psi_parity(outcome) XOR own_bit`; `TamperPhi` for Φ outcomes.
///
/// # Safety
/// `out_bit` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qd_decode_peer_bit(
    outcome: QdBellOutcome,
    own_bit: u8,
    out_bit: *mut u8,
) -> QdStatus {
    guard(|| {
        if out_bit.is_null() {
            return fail(QdStatus::NullPointer, "out_bit is NULL");
        }
        if own_bit > 1 {
            return fail(QdStatus::InvalidArgument, "own_bit must be 0 or 1");
        }
        match decode_peer_bit(outcome.into(), own_bit) {
            Ok(bit) => {
                *out_bit = bit;
                QdStatus::Ok
            }
            Err(e) => fail(QdStatus::TamperPhi, e.to_string()),
        }
    })
}
