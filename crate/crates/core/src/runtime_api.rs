//! The supported CUDA runtime API: error codes, enumerators, architecture
//! parameters and the call dispatcher.

use std::fmt;

use thiserror::Error;

use crate::diag::SourceLoc;
use crate::machine::{ApiRecord, Configuration, Kont, Stop, ThreadState};
use crate::memory::{MemSpace, ObjKind, ThreadKey};
use crate::program::{ApiFn, ExprId};
use crate::streams::{Event, EventStatus, Stream, StreamItem, SyncTarget};
use crate::types::CType;
use crate::value::{Location, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    Success,
    InvalidConfiguration,
    InvalidValue,
    InvalidDevicePointer,
    InvalidMemcpyDirection,
    InvalidResourceHandle,
    NotReady,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 7] = [
        ErrorCode::Success,
        ErrorCode::InvalidConfiguration,
        ErrorCode::InvalidValue,
        ErrorCode::InvalidDevicePointer,
        ErrorCode::InvalidMemcpyDirection,
        ErrorCode::InvalidResourceHandle,
        ErrorCode::NotReady,
    ];

    pub fn code(self) -> i128 {
        match self {
            ErrorCode::Success => 0,
            ErrorCode::InvalidConfiguration => 9,
            ErrorCode::InvalidValue => 11,
            ErrorCode::InvalidDevicePointer => 17,
            ErrorCode::InvalidMemcpyDirection => 21,
            ErrorCode::InvalidResourceHandle => 33,
            ErrorCode::NotReady => 34,
        }
    }

    pub fn from_code(code: i128) -> Option<Self> {
        ErrorCode::ALL.into_iter().find(|c| c.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorCode::Success => "cudaSuccess",
            ErrorCode::InvalidConfiguration => "cudaErrorInvalidConfiguration",
            ErrorCode::InvalidValue => "cudaErrorInvalidValue",
            ErrorCode::InvalidDevicePointer => "cudaErrorInvalidDevicePointer",
            ErrorCode::InvalidMemcpyDirection => "cudaErrorInvalidMemcpyDirection",
            ErrorCode::InvalidResourceHandle => "cudaErrorInvalidResourceHandle",
            ErrorCode::NotReady => "cudaErrorNotReady",
        }
    }

    /// The text `cudaGetErrorString` returns.
    pub fn description(self) -> &'static str {
        match self {
            ErrorCode::Success => "no error",
            ErrorCode::InvalidConfiguration => "invalid configuration argument",
            ErrorCode::InvalidValue => "invalid argument",
            ErrorCode::InvalidDevicePointer => "invalid device pointer",
            ErrorCode::InvalidMemcpyDirection => "invalid copy direction for memcpy",
            ErrorCode::InvalidResourceHandle => "invalid resource handle",
            ErrorCode::NotReady => "device not ready",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MemcpyKind {
    HostToHost,
    HostToDevice,
    DeviceToHost,
    DeviceToDevice,
}

impl MemcpyKind {
    pub fn from_code(code: i128) -> Option<Self> {
        Some(match code {
            0 => MemcpyKind::HostToHost,
            1 => MemcpyKind::HostToDevice,
            2 => MemcpyKind::DeviceToHost,
            3 => MemcpyKind::DeviceToDevice,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            MemcpyKind::HostToHost => "cudaMemcpyHostToHost",
            MemcpyKind::HostToDevice => "cudaMemcpyHostToDevice",
            MemcpyKind::DeviceToHost => "cudaMemcpyDeviceToHost",
            MemcpyKind::DeviceToDevice => "cudaMemcpyDeviceToDevice",
        }
    }

    /// Whether (destination, source) live on the device.
    pub fn sides(self) -> (bool, bool) {
        match self {
            MemcpyKind::HostToHost => (false, false),
            MemcpyKind::HostToDevice => (true, false),
            MemcpyKind::DeviceToHost => (false, true),
            MemcpyKind::DeviceToDevice => (true, true),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeviceAttr {
    MaxThreadsPerBlock,
    WarpSize,
    ComputeCapabilityMajor,
    ComputeCapabilityMinor,
}

impl DeviceAttr {
    pub fn from_code(code: i128) -> Option<Self> {
        Some(match code {
            1 => DeviceAttr::MaxThreadsPerBlock,
            10 => DeviceAttr::WarpSize,
            75 => DeviceAttr::ComputeCapabilityMajor,
            76 => DeviceAttr::ComputeCapabilityMinor,
            _ => return None,
        })
    }
}

/// Identifiers the source may use as integer constants.
pub fn named_constant(name: &str) -> Option<i128> {
    if let Some(c) = ErrorCode::ALL.into_iter().find(|c| c.name() == name) {
        return Some(c.code());
    }
    Some(match name {
        "cudaMemcpyHostToHost" => 0,
        "cudaMemcpyHostToDevice" => 1,
        "cudaMemcpyDeviceToHost" => 2,
        "cudaMemcpyDeviceToDevice" => 3,
        "cudaDevAttrMaxThreadsPerBlock" => 1,
        "cudaDevAttrWarpSize" => 10,
        "cudaDevAttrComputeCapabilityMajor" => 75,
        "cudaDevAttrComputeCapabilityMinor" => 76,
        "cudaStreamDefault" | "cudaEventDefault" => 0,
        _ => return None,
    })
}

/// Architecture parameters reported to programs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchParams {
    pub warp_size: i64,
    pub compute_capability_major: i64,
    pub compute_capability_minor: i64,
    pub max_threads_per_block: i64,
    pub driver_version: i64,
    pub runtime_version: i64,
}

impl Default for ArchParams {
    fn default() -> Self {
        ArchParams {
            warp_size: 32,
            compute_capability_major: 2,
            compute_capability_minor: 0,
            max_threads_per_block: 1024,
            driver_version: 5000,
            runtime_version: 5000,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ArchError {
    #[error("line {line}: expected `key = integer`")]
    Syntax { line: usize },
    #[error("line {line}: unknown architecture parameter `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` must be positive")]
    NotPositive { line: usize, key: String },
}

impl ArchParams {
    /// Parses `key = integer` lines over the defaults. Blank lines and
    /// `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, ArchError> {
        let mut p = ArchParams::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ArchError::Syntax { line })?;
            let key = key.trim();
            let value: i64 = value.trim().parse().map_err(|_| ArchError::Syntax { line })?;
            let slot = match key {
                "warpSize" => &mut p.warp_size,
                "computeCapabilityMajor" => &mut p.compute_capability_major,
                "computeCapabilityMinor" => &mut p.compute_capability_minor,
                "maxThreadsPerBlock" => &mut p.max_threads_per_block,
                "driverVersion" => &mut p.driver_version,
                "runtimeVersion" => &mut p.runtime_version,
                _ => {
                    return Err(ArchError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            };
            let minimum = if key == "computeCapabilityMinor" { 0 } else { 1 };
            if value < minimum {
                return Err(ArchError::NotPositive {
                    line,
                    key: key.to_string(),
                });
            }
            *slot = value;
        }
        Ok(p)
    }

    pub fn attribute(&self, attr: DeviceAttr) -> i64 {
        match attr {
            DeviceAttr::MaxThreadsPerBlock => self.max_threads_per_block,
            DeviceAttr::WarpSize => self.warp_size,
            DeviceAttr::ComputeCapabilityMajor => self.compute_capability_major,
            DeviceAttr::ComputeCapabilityMinor => self.compute_capability_minor,
        }
    }
}

/// Largest single `cudaMalloc` the interpreter honours.
pub const MAX_ALLOCATION: u64 = 1 << 30;

impl Configuration {
    /// Logs a finished call and latches its failure for `cudaGetLastError`.
    pub(crate) fn api_finish(&mut self, func: ApiFn, code: ErrorCode, loc: &SourceLoc) -> ErrorCode {
        self.api_log.push(ApiRecord { func, code });
        if code != ErrorCode::Success && code != ErrorCode::NotReady {
            self.last_error = code;
            self.api_error(func, code, loc);
        }
        code
    }

    /// The host-memory string `cudaGetErrorString` hands out for a code.
    fn error_string(&mut self, code: i128) -> Location {
        if let Some(loc) = self.error_strings.get(&code) {
            return *loc;
        }
        let text = ErrorCode::from_code(code).map_or("unrecognized error code", ErrorCode::description);
        let mut bytes = text.as_bytes().to_vec();
        bytes.push(0);
        let loc = self.memory.alloc(MemSpace::Host, bytes.len() as u64, ObjKind::Literal, None);
        for (i, b) in bytes.iter().enumerate() {
            let _ = self.memory.store(loc.offset_by(i as i64), &CType::Char, Value::Int(i128::from(*b)));
        }
        self.error_strings.insert(code, loc);
        loc
    }

    /// Stores an out-parameter through a host pointer.
    fn out_param(&mut self, ptr: Value, ty: &CType, v: Value, loc: &SourceLoc) -> Result<ErrorCode, Stop> {
        if ptr == Value::NULL {
            return Ok(ErrorCode::InvalidValue);
        }
        self.write(ThreadKey::HOST, ptr, ty, v, loc)?;
        Ok(ErrorCode::Success)
    }
}

fn int(v: &Value) -> i128 {
    v.as_int().unwrap_or(0)
}

fn ptr(v: &Value) -> Option<Location> {
    v.as_ptr().flatten()
}

/// Executes one runtime API call on the host. The call's value is pushed
/// on the host's value stack, possibly after blocking.
pub(crate) fn call(cfg: &mut Configuration, th: &mut ThreadState, func: ApiFn, args: Vec<Value>, e: ExprId) -> Result<(), Stop> {
    let loc = cfg.program.expr(e).loc.clone();
    let wait = |th: &mut ThreadState, target: SyncTarget, code: ErrorCode| {
        th.k.push(Kont::PushValue(Value::Int(code.code())));
        th.k.push(Kont::HostWait(target, e));
    };
    let code = match func {
        ApiFn::Malloc => {
            let size = int(&args[1]) as u64;
            if size > MAX_ALLOCATION {
                ErrorCode::InvalidValue
            } else {
                let obj = cfg.memory.alloc(MemSpace::DeviceGlobal, size, ObjKind::Heap, None);
                let code = cfg.out_param(args[0], &CType::ptr_to(CType::Void), Value::Ptr(Some(obj)), &loc)?;
                if code != ErrorCode::Success {
                    cfg.memory.kill(obj.object);
                }
                code
            }
        }
        ApiFn::Free => {
            th.k.push(Kont::FreeAfterSync(ptr(&args[0]), e));
            th.k.push(Kont::HostWait(SyncTarget::Device, e));
            return Ok(());
        }
        ApiFn::Memcpy | ApiFn::MemcpyAsync => {
            let (dst, src, n) = (ptr(&args[0]), ptr(&args[1]), int(&args[2]) as u64);
            let stream = if func == ApiFn::Memcpy {
                Some(0)
            } else {
                cfg.valid_stream(int(&args[4]))
            };
            match (MemcpyKind::from_code(int(&args[3])), stream) {
                (None, _) => ErrorCode::InvalidMemcpyDirection,
                (_, None) => ErrorCode::InvalidResourceHandle,
                (Some(kind), Some(sid)) => match cfg.memory.check_memcpy(dst, src, n, kind) {
                    Err(code) => code,
                    Ok(()) => {
                        let item = StreamItem::Memcpy {
                            func,
                            dst,
                            src,
                            n,
                            kind,
                            loc: loc.clone(),
                        };
                        cfg.enqueue(sid, item);
                        if func == ApiFn::Memcpy {
                            let code = cfg.api_finish(func, ErrorCode::Success, &loc);
                            wait(th, SyncTarget::Stream(0), code);
                            return Ok(());
                        }
                        ErrorCode::Success
                    }
                },
            }
        }
        ApiFn::Memset => {
            let (dst, n) = (ptr(&args[0]), int(&args[2]) as u64);
            match cfg.memory.check_memset(dst, n) {
                Err(code) => code,
                Ok(()) => {
                    let value = int(&args[1]) as u8;
                    cfg.enqueue(0, StreamItem::Memset { dst, value, n, loc: loc.clone() });
                    ErrorCode::Success
                }
            }
        }
        ApiFn::DeviceSynchronize => {
            let code = cfg.api_finish(func, ErrorCode::Success, &loc);
            wait(th, SyncTarget::Device, code);
            return Ok(());
        }
        ApiFn::StreamCreate => {
            let sid = cfg.next_sid;
            let code = cfg.out_param(args[0], &CType::Int, Value::Int(i128::from(sid)), &loc)?;
            if code == ErrorCode::Success {
                cfg.next_sid += 1;
                cfg.streams.insert(sid, Stream::new(sid));
            }
            code
        }
        ApiFn::StreamDestroy => match cfg.valid_stream(int(&args[0])) {
            Some(sid) if sid != 0 => {
                cfg.streams.get_mut(&sid).expect("valid stream").destroyed = true;
                ErrorCode::Success
            }
            _ => ErrorCode::InvalidResourceHandle,
        },
        ApiFn::StreamSynchronize => match cfg.valid_stream(int(&args[0])) {
            Some(sid) => {
                let code = cfg.api_finish(func, ErrorCode::Success, &loc);
                wait(th, SyncTarget::Stream(sid), code);
                return Ok(());
            }
            None => ErrorCode::InvalidResourceHandle,
        },
        ApiFn::StreamQuery => match cfg.valid_stream(int(&args[0])) {
            Some(sid) if cfg.sync_satisfied(SyncTarget::Stream(sid)) => ErrorCode::Success,
            Some(_) => ErrorCode::NotReady,
            None => ErrorCode::InvalidResourceHandle,
        },
        ApiFn::StreamWaitEvent => match (cfg.valid_stream(int(&args[0])), cfg.valid_event(int(&args[1]))) {
            (Some(sid), Some(eid)) => {
                cfg.enqueue(sid, StreamItem::Wait(eid));
                ErrorCode::Success
            }
            _ => ErrorCode::InvalidResourceHandle,
        },
        ApiFn::EventCreate => {
            let eid = cfg.next_eid;
            let code = cfg.out_param(args[0], &CType::Int, Value::Int(i128::from(eid)), &loc)?;
            if code == ErrorCode::Success {
                cfg.next_eid += 1;
                cfg.events.insert(
                    eid,
                    Event {
                        eid,
                        status: EventStatus::Created,
                    },
                );
            }
            code
        }
        ApiFn::EventDestroy => match cfg.valid_event(int(&args[0])) {
            Some(eid) => {
                cfg.events.remove(&eid);
                ErrorCode::Success
            }
            None => ErrorCode::InvalidResourceHandle,
        },
        ApiFn::EventRecord => match (cfg.valid_event(int(&args[0])), cfg.valid_stream(int(&args[1]))) {
            (Some(eid), Some(sid)) => {
                cfg.enqueue(sid, StreamItem::Record(eid));
                ErrorCode::Success
            }
            _ => ErrorCode::InvalidResourceHandle,
        },
        ApiFn::EventSynchronize => match cfg.valid_event(int(&args[0])) {
            Some(eid) => {
                let code = cfg.api_finish(func, ErrorCode::Success, &loc);
                wait(th, SyncTarget::Event(eid), code);
                return Ok(());
            }
            None => ErrorCode::InvalidResourceHandle,
        },
        ApiFn::EventQuery => match cfg.valid_event(int(&args[0])) {
            Some(eid) if cfg.sync_satisfied(SyncTarget::Event(eid)) => ErrorCode::Success,
            Some(_) => ErrorCode::NotReady,
            None => ErrorCode::InvalidResourceHandle,
        },
        ApiFn::EventElapsedTime => match (cfg.valid_event(int(&args[1])), cfg.valid_event(int(&args[2]))) {
            (Some(_), Some(_)) => cfg.out_param(args[0], &CType::Float, Value::Float(0.0), &loc)?,
            _ => ErrorCode::InvalidResourceHandle,
        },
        ApiFn::GetLastError => {
            let code = std::mem::replace(&mut cfg.last_error, ErrorCode::Success);
            cfg.api_log.push(ApiRecord { func, code: ErrorCode::Success });
            th.vals.push(Value::Int(code.code()));
            return Ok(());
        }
        ApiFn::GetErrorString => {
            let s = cfg.error_string(int(&args[0]));
            cfg.api_log.push(ApiRecord { func, code: ErrorCode::Success });
            th.vals.push(Value::Ptr(Some(s)));
            return Ok(());
        }
        ApiFn::DeviceGetAttribute => {
            let attr = DeviceAttr::from_code(int(&args[1]));
            match attr {
                Some(a) if int(&args[2]) == 0 => {
                    let v = Value::Int(i128::from(cfg.options.arch.attribute(a)));
                    cfg.out_param(args[0], &CType::Int, v, &loc)?
                }
                _ => ErrorCode::InvalidValue,
            }
        }
        ApiFn::DriverGetVersion | ApiFn::RuntimeGetVersion => {
            let arch = &cfg.options.arch;
            let v = if func == ApiFn::DriverGetVersion {
                arch.driver_version
            } else {
                arch.runtime_version
            };
            cfg.out_param(args[0], &CType::Int, Value::Int(i128::from(v)), &loc)?
        }
    };
    let code = cfg.api_finish(func, code, &loc);
    th.vals.push(Value::Int(code.code()));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arch_file_overrides_defaults() {
        let p = ArchParams::parse("# tesla\nwarpSize = 16\n\ncomputeCapabilityMajor=3 # kepler\n").unwrap();
        assert_eq!(p.warp_size, 16);
        assert_eq!(p.compute_capability_major, 3);
        assert_eq!(p.driver_version, 5000);
    }

    #[test]
    fn arch_file_errors() {
        assert_eq!(ArchParams::parse("warpSize 16"), Err(ArchError::Syntax { line: 1 }));
        assert!(matches!(
            ArchParams::parse("\nclock = 5"),
            Err(ArchError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            ArchParams::parse("warpSize = 0"),
            Err(ArchError::NotPositive { .. })
        ));
    }

    #[test]
    fn error_codes_round_trip() {
        for c in ErrorCode::ALL {
            assert_eq!(ErrorCode::from_code(c.code()), Some(c));
            assert_eq!(named_constant(c.name()), Some(c.code()));
        }
        assert_eq!(named_constant("cudaMemcpyDeviceToHost"), Some(2));
    }
}
