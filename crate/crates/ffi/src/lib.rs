//! C interface to the fdmac simulator.
//!
//! Configurations and reports are opaque heap handles released with their
//! `_free` function. Every fallible call returns an `FdmacStatus`; on failure
//! `fdmac_last_error` describes the problem for the calling thread.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fdmac::assign::{min_fair_shares, DemandSnapshot};
use fdmac::mac::ArrivalSpec;
use fdmac::phy::RateTable;
use fdmac::{Error, SchemeId, SimConfig, SimReport};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdmacStatus {
    Ok = 0,
    InvalidArgument = 1,
    Infeasible = 2,
    Io = 3,
    Panic = 4,
    NullPointer = 5,
}

/// Simulation parameters. Create with `fdmac_config_new`.
pub struct FdmacConfig(SimConfig);

/// Results of one run. Create with `fdmac_run`.
pub struct FdmacReport(SimReport);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> FdmacStatus {
    match err {
        Error::Infeasible(_) => FdmacStatus::Infeasible,
        Error::Io(_) | Error::Csv(_) => FdmacStatus::Io,
        _ => FdmacStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (FdmacStatus, String)>) -> FdmacStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FdmacStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FdmacStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (FdmacStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FdmacStatus, String) {
    (FdmacStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (FdmacStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (FdmacStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn config_mut<'a>(cfg: *mut FdmacConfig) -> Result<&'a mut SimConfig, (FdmacStatus, String)> {
    cfg.as_mut().map(|c| &mut c.0).ok_or_else(|| null("config"))
}

unsafe fn report_ref<'a>(r: *const FdmacReport) -> Result<&'a SimReport, (FdmacStatus, String)> {
    r.as_ref().map(|r| &r.0).ok_or_else(|| null("report"))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), (FdmacStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fdmac_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// A configuration with every parameter at its default.
#[no_mangle]
pub extern "C" fn fdmac_config_new() -> *mut FdmacConfig {
    Box::into_raw(Box::new(FdmacConfig(SimConfig::default())))
}

/// Parses a TOML configuration into `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fdmac_config_from_toml(text: *const c_char, out: *mut *mut FdmacConfig) -> FdmacStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let cfg = SimConfig::from_toml(text).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(FdmacConfig(cfg))))
    })
}

/// # Safety
/// `cfg` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fdmac_config_free(cfg: *mut FdmacConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Scheme by name: proposed, oracle, max-rate, greedy, random, half-duplex.
///
/// # Safety
/// `cfg` must be a live handle and `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fdmac_config_set_scheme(cfg: *mut FdmacConfig, name: *const c_char) -> FdmacStatus {
    guard(|| {
        let cfg = config_mut(cfg)?;
        cfg.scheme = str_arg(name, "scheme")?.parse::<SchemeId>().map_err(lib_err)?;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fdmac_config_set_clients(cfg: *mut FdmacConfig, n: usize) -> FdmacStatus {
    guard(|| {
        config_mut(cfg)?.n_clients = n;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fdmac_config_set_epochs(cfg: *mut FdmacConfig, epochs: usize) -> FdmacStatus {
    guard(|| {
        config_mut(cfg)?.epochs = epochs;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fdmac_config_set_seed(cfg: *mut FdmacConfig, seed: u64) -> FdmacStatus {
    guard(|| {
        config_mut(cfg)?.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fdmac_config_set_delta_db(cfg: *mut FdmacConfig, delta_db: f64) -> FdmacStatus {
    guard(|| {
        config_mut(cfg)?.delta_db = delta_db;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fdmac_config_set_sic_db(cfg: *mut FdmacConfig, sic_db: f64) -> FdmacStatus {
    guard(|| {
        config_mut(cfg)?.sic_db = sic_db;
        Ok(())
    })
}

/// Frames per second per client and direction; a negative value means
/// backlogged.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fdmac_config_set_arrival_fps(cfg: *mut FdmacConfig, fps: f64) -> FdmacStatus {
    guard(|| {
        config_mut(cfg)?.arrival_fps = if fps < 0.0 { ArrivalSpec::Backlogged } else { ArrivalSpec::Fixed(fps) };
        Ok(())
    })
}

/// Validates `cfg`, runs it and stores a new report in `*out`.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fdmac_run(cfg: *const FdmacConfig, out: *mut *mut FdmacReport) -> FdmacStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let report = fdmac::run_simulation(&cfg.0).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(FdmacReport(report))))
    })
}

/// # Safety
/// `report` must come from `fdmac_run` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fdmac_report_free(report: *mut FdmacReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Aggregate figures of a run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FdmacSummary {
    pub tput_total_mbps: f64,
    pub tput_down_mbps: f64,
    pub tput_up_mbps: f64,
    pub collision_prob: f64,
    pub fd_time_frac: f64,
    pub hd_time_frac: f64,
    pub mean_contention_us: f64,
    pub txops: u64,
}

/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fdmac_report_summary(report: *const FdmacReport, out: *mut FdmacSummary) -> FdmacStatus {
    guard(|| {
        let r = report_ref(report)?;
        let s = FdmacSummary {
            tput_total_mbps: r.throughput_total_mbps(),
            tput_down_mbps: r.throughput_down_mbps(),
            tput_up_mbps: r.throughput_up_mbps(),
            collision_prob: r.collision_prob(),
            fd_time_frac: r.fd_time_frac(),
            hd_time_frac: r.hd_time_frac(),
            mean_contention_us: r.mean_contention_us(),
            txops: r.txops(),
        };
        write_out(out, s)
    })
}

/// Uplink transmissions and deliveries of client `k` (1-based).
///
/// # Safety
/// `report` must be a live handle; `tx` and `ok` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fdmac_report_client_uplink(
    report: *const FdmacReport,
    k: usize,
    tx: *mut u64,
    ok: *mut u64,
) -> FdmacStatus {
    guard(|| {
        let r = report_ref(report)?;
        if k == 0 || k >= r.clients.len() {
            return Err((FdmacStatus::InvalidArgument, format!("client {k} out of range")));
        }
        write_out(tx, r.clients[k].uplink_tx)?;
        write_out(ok, r.clients[k].uplink_ok)
    })
}

/// Delivery ratio of `rate_mbps` at `sinr_db` under the default rate table.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fdmac_pdr(rate_mbps: f64, sinr_db: f64, out: *mut f64) -> FdmacStatus {
    guard(|| {
        let v = RateTable::default().pdr(rate_mbps, sinr_db).map_err(lib_err)?;
        write_out(out, v)
    })
}

/// Best rate at `sinr_db` and its expected throughput (rate × delivery ratio).
///
/// # Safety
/// `rate_mbps` and `tput_mbps` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fdmac_effective_throughput(sinr_db: f64, rate_mbps: *mut f64, tput_mbps: *mut f64) -> FdmacStatus {
    guard(|| {
        if sinr_db.is_nan() {
            return Err((FdmacStatus::InvalidArgument, "SINR is NaN".into()));
        }
        let c = RateTable::default().effective_throughput(sinr_db);
        write_out(rate_mbps, c.rate_mbps)?;
        write_out(tput_mbps, c.throughput_mbps)
    })
}

/// Max-min fair minimum shares for `n` clients. The arrays hold `n + 1`
/// entries indexed by client id (entry 0 unused); rates are frames/s.
///
/// # Safety
/// All four arrays must hold `n + 1` elements.
#[no_mangle]
pub unsafe extern "C" fn fdmac_min_fair_shares(
    n: usize,
    lambda_d: *const f64,
    lambda_u: *const f64,
    epoch_s: f64,
    t_bar_s: f64,
    eta_d: *mut f64,
    eta_u: *mut f64,
) -> FdmacStatus {
    guard(|| {
        if lambda_d.is_null() || lambda_u.is_null() || eta_d.is_null() || eta_u.is_null() {
            return Err(null("array"));
        }
        let demands = DemandSnapshot {
            lambda_d: std::slice::from_raw_parts(lambda_d, n + 1).to_vec(),
            lambda_u: std::slice::from_raw_parts(lambda_u, n + 1).to_vec(),
            l_d_bits: vec![0.0; n + 1],
            l_u_bits: vec![0.0; n + 1],
            epoch_s,
        };
        demands.validate().map_err(lib_err)?;
        if !(t_bar_s > 0.0) {
            return Err((FdmacStatus::InvalidArgument, "t_bar_s must be positive".into()));
        }
        let s = min_fair_shares(&demands, t_bar_s);
        std::slice::from_raw_parts_mut(eta_d, n + 1).copy_from_slice(&s.eta_d);
        std::slice::from_raw_parts_mut(eta_u, n + 1).copy_from_slice(&s.eta_u);
        Ok(())
    })
}
