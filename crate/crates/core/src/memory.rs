//! The tagged object store. Every object carries the memory space it lives
//! in, and every typed read or write is checked against the accessor.

use std::fmt;
use std::fmt::Write as _;

use crate::types::CType;
use crate::value::{Location, ObjectId, Value};
use crate::runtime_api::{ErrorCode, MemcpyKind};

/// Identity of a device thread; the host thread is `(0, 0, 0)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThreadKey {
    pub gid: u32,
    pub bid: u32,
    pub tid: u32,
}

impl ThreadKey {
    pub const HOST: ThreadKey = ThreadKey {
        gid: 0,
        bid: 0,
        tid: 0,
    };

    pub fn new(gid: u32, bid: u32, tid: u32) -> Self {
        ThreadKey { gid, bid, tid }
    }

    pub fn is_host(&self) -> bool {
        self.gid == 0
    }
}

impl fmt::Display for ThreadKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gid={} bid={} tid={}", self.gid, self.bid, self.tid)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MemSpace {
    Host,
    DeviceGlobal,
    DeviceShared { gid: u32, bid: u32 },
}

impl fmt::Display for MemSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemSpace::Host => f.write_str("host"),
            MemSpace::DeviceGlobal => f.write_str("global"),
            MemSpace::DeviceShared { gid, bid } => write!(f, "shared({gid},{bid})"),
        }
    }
}

impl MemSpace {
    fn describe(&self) -> String {
        match self {
            MemSpace::Host => "host memory".into(),
            MemSpace::DeviceGlobal => "device global memory".into(),
            MemSpace::DeviceShared { gid, bid } => {
                format!("shared memory of grid {gid} block {bid}")
            }
        }
    }
}

/// Who performs an access; always derived from the executing thread.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Accessor {
    HostCode,
    DeviceCode(ThreadKey),
}

impl Accessor {
    pub fn for_thread(key: ThreadKey) -> Self {
        if key.is_host() {
            Accessor::HostCode
        } else {
            Accessor::DeviceCode(key)
        }
    }

    /// The legality matrix for dereferences.
    pub fn may_access(&self, space: MemSpace) -> bool {
        match (self, space) {
            (Accessor::HostCode, MemSpace::Host) => true,
            (Accessor::DeviceCode(_), MemSpace::DeviceGlobal) => true,
            (Accessor::DeviceCode(k), MemSpace::DeviceShared { gid, bid }) => {
                k.gid == gid && k.bid == bid
            }
            _ => false,
        }
    }
}

impl fmt::Display for Accessor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Accessor::HostCode => f.write_str("host code"),
            Accessor::DeviceCode(k) => {
                write!(f, "device thread (grid {}, block {}, thread {})", k.gid, k.bid, k.tid)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AccessKind {
    Read,
    Write,
}

impl fmt::Display for AccessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AccessKind::Read => "read",
            AccessKind::Write => "write",
        })
    }
}

/// What an object was created for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObjKind {
    /// `cudaMalloc`.
    Heap,
    /// A file-scope variable.
    Global,
    /// A local variable or parameter; `owner` of the object names the thread.
    Local,
    Shared,
    /// A constant string such as one returned by `cudaGetErrorString`.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Byte {
    Undef,
    Data(u8),
    /// Byte `idx` of the stored pointer value.
    Ptr(Location, u8),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemObject {
    pub id: ObjectId,
    pub space: MemSpace,
    pub kind: ObjKind,
    pub bytes: Vec<Byte>,
    pub live: bool,
    /// The only thread that can name this object (locals and parameters).
    pub owner: Option<ThreadKey>,
}

impl MemObject {
    pub fn size(&self) -> u64 {
        self.bytes.len() as u64
    }
}

/// Why a typed access failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MemFault {
    Boundary {
        accessor: Accessor,
        kind: AccessKind,
        space: MemSpace,
    },
    Null,
    Dead,
    OutOfBounds { offset: i64, len: u64, size: u64 },
    Uninitialized,
    /// Integer bytes read as a pointer or pointer bytes read as a number.
    BadRepresentation,
}

impl MemFault {
    pub fn is_boundary(&self) -> bool {
        matches!(self, MemFault::Boundary { .. })
    }
}

impl fmt::Display for MemFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemFault::Boundary {
                accessor,
                kind,
                space,
            } => write!(
                f,
                "illegal device or host memory access: {accessor} attempted a {kind} of {}",
                space.describe()
            ),
            MemFault::Null => f.write_str("dereferencing a null pointer"),
            MemFault::Dead => f.write_str("accessing an object whose lifetime has ended"),
            MemFault::OutOfBounds { offset, len, size } => write!(
                f,
                "out-of-bounds access ({len} bytes at offset {offset} of a {size}-byte object)"
            ),
            MemFault::Uninitialized => f.write_str("reading uninitialized memory"),
            MemFault::BadRepresentation => f.write_str("reading bytes of the wrong representation"),
        }
    }
}

/// One entry of the space-isolation audit trail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditEntry {
    pub accessor: Accessor,
    pub space: MemSpace,
    pub kind: AccessKind,
    pub allowed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Memory {
    objects: Vec<MemObject>,
    audit: Option<Vec<AuditEntry>>,
}

impl Memory {
    pub fn new() -> Self {
        Memory::default()
    }

    pub fn with_audit() -> Self {
        Memory {
            objects: Vec::new(),
            audit: Some(Vec::new()),
        }
    }

    pub fn audit_log(&self) -> Option<&[AuditEntry]> {
        self.audit.as_deref()
    }

    pub fn alloc(&mut self, space: MemSpace, size: u64, kind: ObjKind, owner: Option<ThreadKey>) -> Location {
        let id = ObjectId(self.objects.len() as u32);
        self.objects.push(MemObject {
            id,
            space,
            kind,
            bytes: vec![Byte::Undef; size as usize],
            live: true,
            owner,
        });
        Location::new(id, 0)
    }

    pub fn object(&self, id: ObjectId) -> &MemObject {
        &self.objects[id.0 as usize]
    }

    pub fn objects(&self) -> impl Iterator<Item = &MemObject> {
        self.objects.iter()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Ends an object's lifetime; later accesses are diagnosed.
    pub fn kill(&mut self, id: ObjectId) {
        self.objects[id.0 as usize].live = false;
    }

    /// The `cudaFree` rules: only live, unoffset `cudaMalloc` results.
    pub fn free_device(&mut self, ptr: Option<Location>) -> Result<(), ErrorCode> {
        let Some(loc) = ptr else {
            return Ok(());
        };
        let obj = &self.objects[loc.object.0 as usize];
        if obj.space != MemSpace::DeviceGlobal || obj.kind != ObjKind::Heap {
            return Err(ErrorCode::InvalidDevicePointer);
        }
        if !obj.live || loc.offset != 0 {
            return Err(ErrorCode::InvalidValue);
        }
        self.kill(loc.object);
        Ok(())
    }

    /// The access hook: space legality for a dereference.
    pub fn check_access(&mut self, loc: Location, accessor: Accessor, kind: AccessKind) -> Result<(), MemFault> {
        let space = self.object(loc.object).space;
        let allowed = accessor.may_access(space);
        if let Some(log) = &mut self.audit {
            log.push(AuditEntry {
                accessor,
                space,
                kind,
                allowed,
            });
        }
        if allowed {
            Ok(())
        } else {
            Err(MemFault::Boundary {
                accessor,
                kind,
                space,
            })
        }
    }

    fn range(&self, loc: Location, len: u64) -> Result<std::ops::Range<usize>, MemFault> {
        let obj = self.object(loc.object);
        if !obj.live {
            return Err(MemFault::Dead);
        }
        let size = obj.size();
        if loc.offset < 0 || loc.offset as u64 + len > size {
            return Err(MemFault::OutOfBounds {
                offset: loc.offset,
                len,
                size,
            });
        }
        let start = loc.offset as usize;
        Ok(start..start + len as usize)
    }

    pub fn read(&mut self, ptr: Option<Location>, ty: &CType, accessor: Accessor) -> Result<Value, MemFault> {
        let loc = ptr.ok_or(MemFault::Null)?;
        self.check_access(loc, accessor, AccessKind::Read)?;
        self.load(loc, ty)
    }

    pub fn write(&mut self, ptr: Option<Location>, ty: &CType, value: Value, accessor: Accessor) -> Result<(), MemFault> {
        let loc = ptr.ok_or(MemFault::Null)?;
        self.check_access(loc, accessor, AccessKind::Write)?;
        self.store(loc, ty, value)
    }

    /// A typed read without the space check.
    pub fn load(&self, loc: Location, ty: &CType) -> Result<Value, MemFault> {
        let size = ty.size_of().ok_or(MemFault::BadRepresentation)?;
        let range = self.range(loc, size)?;
        let bytes = &self.object(loc.object).bytes[range];
        if bytes.contains(&Byte::Undef) {
            return Err(MemFault::Uninitialized);
        }
        decode(bytes, ty)
    }

    /// A typed write without the space check.
    pub fn store(&mut self, loc: Location, ty: &CType, value: Value) -> Result<(), MemFault> {
        let size = ty.size_of().ok_or(MemFault::BadRepresentation)?;
        let range = self.range(loc, size)?;
        let encoded = encode(value, ty);
        self.objects[loc.object.0 as usize].bytes[range].copy_from_slice(&encoded);
        Ok(())
    }

    /// Sets every byte of an object to defined zero.
    pub fn zero_fill(&mut self, id: ObjectId) {
        for b in &mut self.objects[id.0 as usize].bytes {
            *b = Byte::Data(0);
        }
    }

    fn transfer_range(&self, loc: Option<Location>, n: u64) -> Result<(Location, std::ops::Range<usize>), ErrorCode> {
        let loc = loc.ok_or(ErrorCode::InvalidValue)?;
        let range = self.range(loc, n).map_err(|_| ErrorCode::InvalidValue)?;
        Ok((loc, range))
    }

    /// Checks a transfer without performing it: both ends must be live,
    /// in bounds, and in the spaces `kind` names.
    pub fn check_memcpy(&self, dst: Option<Location>, src: Option<Location>, n: u64, kind: MemcpyKind) -> Result<(), ErrorCode> {
        if n == 0 {
            return Ok(());
        }
        let (d, _) = self.transfer_range(dst, n)?;
        let (s, _) = self.transfer_range(src, n)?;
        let on_device = |space: MemSpace| match space {
            MemSpace::Host => Some(false),
            MemSpace::DeviceGlobal => Some(true),
            MemSpace::DeviceShared { .. } => None,
        };
        let (want_dst, want_src) = kind.sides();
        if on_device(self.object(d.object).space) != Some(want_dst)
            || on_device(self.object(s.object).space) != Some(want_src)
        {
            return Err(ErrorCode::InvalidMemcpyDirection);
        }
        Ok(())
    }

    /// A privileged transfer: no accessor check. Definedness travels with
    /// the bytes, and overlapping ranges behave like `memmove`.
    pub fn memcpy(&mut self, dst: Option<Location>, src: Option<Location>, n: u64, kind: MemcpyKind) -> Result<(), ErrorCode> {
        self.check_memcpy(dst, src, n, kind)?;
        if n == 0 {
            return Ok(());
        }
        let (d, drange) = self.transfer_range(dst, n)?;
        let (s, srange) = self.transfer_range(src, n)?;
        let buffer: Vec<Byte> = self.object(s.object).bytes[srange].to_vec();
        self.objects[d.object.0 as usize].bytes[drange].copy_from_slice(&buffer);
        Ok(())
    }

    pub fn check_memset(&self, dst: Option<Location>, n: u64) -> Result<(), ErrorCode> {
        if n == 0 {
            return Ok(());
        }
        let (d, _) = self.transfer_range(dst, n)?;
        if self.object(d.object).space != MemSpace::DeviceGlobal {
            return Err(ErrorCode::InvalidValue);
        }
        Ok(())
    }

    /// `cudaMemset`: fills device bytes, marking them defined.
    pub fn memset(&mut self, dst: Option<Location>, value: u8, n: u64) -> Result<(), ErrorCode> {
        self.check_memset(dst, n)?;
        if n == 0 {
            return Ok(());
        }
        let (d, range) = self.transfer_range(dst, n)?;
        for b in &mut self.objects[d.object.0 as usize].bytes[range] {
            *b = Byte::Data(value);
        }
        Ok(())
    }

    /// Reads a NUL-terminated string for `%s`, with the usual checks.
    pub fn read_c_string(&mut self, ptr: Option<Location>, accessor: Accessor) -> Result<Vec<u8>, MemFault> {
        let mut loc = ptr.ok_or(MemFault::Null)?;
        let mut out = Vec::new();
        loop {
            let Value::Int(c) = self.read(Some(loc), &CType::Char, accessor)? else {
                return Err(MemFault::BadRepresentation);
            };
            if c == 0 {
                return Ok(out);
            }
            out.push(c as u8);
            loc = loc.offset_by(1);
        }
    }

    /// One line per object: `id space size hex-bytes definedness-bitmap`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for obj in &self.objects {
            let mut hex = String::new();
            let mut bits = String::new();
            for b in &obj.bytes {
                let (v, defined) = match b {
                    Byte::Undef => (0, false),
                    Byte::Data(v) => (*v, true),
                    Byte::Ptr(l, i) => (synthetic_address(*l).to_le_bytes()[*i as usize], true),
                };
                let _ = write!(hex, "{v:02x}");
                bits.push(if defined { '1' } else { '0' });
            }
            if obj.bytes.is_empty() {
                hex.push('-');
                bits.push('-');
            }
            let _ = writeln!(out, "{} {} {} {} {}", obj.id, obj.space, obj.size(), hex, bits);
        }
        out
    }
}

/// The integer a pointer shows when printed: object id in the high half.
pub fn synthetic_address(loc: Location) -> u64 {
    ((loc.object.0 as u64) << 32).wrapping_add(loc.offset as u64)
}

fn encode(value: Value, ty: &CType) -> Vec<Byte> {
    let size = ty.size_of().unwrap_or(0) as usize;
    match (value, ty) {
        (Value::Ptr(Some(loc)), _) => (0..size as u8).map(|i| Byte::Ptr(loc, i)).collect(),
        (Value::Ptr(None), _) => vec![Byte::Data(0); size],
        (Value::Float(x), CType::Float) => (x as f32).to_le_bytes().map(Byte::Data).to_vec(),
        (Value::Float(x), _) => x.to_le_bytes().map(Byte::Data).to_vec(),
        (Value::Int(v), _) => v.to_le_bytes()[..size].iter().map(|b| Byte::Data(*b)).collect(),
        (Value::Void, _) => vec![Byte::Undef; size],
    }
}

fn decode(bytes: &[Byte], ty: &CType) -> Result<Value, MemFault> {
    if ty.is_pointer() {
        if bytes.iter().all(|b| *b == Byte::Data(0)) {
            return Ok(Value::NULL);
        }
        if let Byte::Ptr(loc, _) = bytes[0] {
            let intact = bytes
                .iter()
                .enumerate()
                .all(|(i, b)| *b == Byte::Ptr(loc, i as u8));
            if intact {
                return Ok(Value::Ptr(Some(loc)));
            }
        }
        return Err(MemFault::BadRepresentation);
    }
    let mut raw = [0u8; 16];
    for (i, b) in bytes.iter().enumerate() {
        match b {
            Byte::Data(v) => raw[i] = *v,
            _ => return Err(MemFault::BadRepresentation),
        }
    }
    Ok(match ty {
        CType::Float => Value::Float(f32::from_le_bytes(raw[..4].try_into().unwrap()) as f64),
        CType::Double => Value::Float(f64::from_le_bytes(raw[..8].try_into().unwrap())),
        _ => {
            let unsigned = u128::from_le_bytes(raw) as i128;
            Value::Int(crate::value::wrap_int(unsigned, ty))
        }
    })
}
