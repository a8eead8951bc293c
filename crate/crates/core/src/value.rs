//! Runtime values and the arithmetic performed on them.

use std::fmt;

use crate::program::Op;
use crate::types::CType;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectId(pub u32);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A symbolic address: an object plus a byte offset into it. Pointer
/// arithmetic moves the offset; nothing ever turns an integer into one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Location {
    pub object: ObjectId,
    pub offset: i64,
}

impl Location {
    pub fn new(object: ObjectId, offset: i64) -> Self {
        Location { object, offset }
    }

    pub fn offset_by(self, bytes: i64) -> Self {
        Location {
            object: self.object,
            offset: self.offset + bytes,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "obj{}+{}", self.object.0, self.offset)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    /// Every integer type, holding its mathematical value.
    Int(i128),
    Float(f64),
    /// `None` is the null pointer.
    Ptr(Option<Location>),
    Void,
}

impl Value {
    pub const NULL: Value = Value::Ptr(None);

    pub fn as_int(&self) -> Option<i128> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_ptr(&self) -> Option<Option<Location>> {
        match self {
            Value::Ptr(p) => Some(*p),
            _ => None,
        }
    }

    pub fn is_true(&self) -> bool {
        match self {
            Value::Int(v) => *v != 0,
            Value::Float(f) => *f != 0.0,
            Value::Ptr(p) => p.is_some(),
            Value::Void => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v}"),
            Value::Ptr(Some(l)) => write!(f, "&{l}"),
            Value::Ptr(None) => f.write_str("NULL"),
            Value::Void => f.write_str("void"),
        }
    }
}

/// Why an operation had no well-defined result.
#[derive(Clone, Debug, PartialEq)]
pub enum ArithFault {
    DivisionByZero,
    /// Signed overflow; evaluation may continue with the wrapped value.
    SignedOverflow(Value),
    ShiftOutOfRange,
    /// Relational comparison or subtraction of pointers into different objects.
    UnrelatedPointers,
    NullArithmetic,
    BadOperands,
}

impl fmt::Display for ArithFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithFault::DivisionByZero => f.write_str("division by zero"),
            ArithFault::SignedOverflow(_) => f.write_str("signed integer overflow"),
            ArithFault::ShiftOutOfRange => f.write_str("shift amount out of range"),
            ArithFault::UnrelatedPointers => {
                f.write_str("comparing or subtracting pointers to different objects")
            }
            ArithFault::NullArithmetic => f.write_str("arithmetic on a null pointer"),
            ArithFault::BadOperands => f.write_str("invalid operands"),
        }
    }
}

/// Wraps an integer into the range of an unsigned type, or reports signed
/// overflow with the two's-complement wrapped value.
pub fn fit_int(v: i128, ty: &CType) -> Result<Value, ArithFault> {
    let (lo, hi) = ty.int_range().ok_or(ArithFault::BadOperands)?;
    if (lo..=hi).contains(&v) {
        return Ok(Value::Int(v));
    }
    let wrapped = wrap_int(v, ty);
    if ty.is_signed() {
        Err(ArithFault::SignedOverflow(Value::Int(wrapped)))
    } else {
        Ok(Value::Int(wrapped))
    }
}

/// Two's-complement truncation to the width of `ty`.
pub fn wrap_int(v: i128, ty: &CType) -> i128 {
    let bits = ty.bit_size_of().unwrap_or(64) as u32;
    let mask: u128 = if bits >= 128 { u128::MAX } else { (1u128 << bits) - 1 };
    let raw = (v as u128) & mask;
    if ty.is_signed() && raw >> (bits - 1) & 1 == 1 {
        (raw as i128) - (1i128 << bits)
    } else {
        raw as i128
    }
}

/// Converts between scalar types; out-of-range integers wrap.
pub fn convert(v: Value, to: &CType) -> Value {
    match (v, to) {
        (Value::Int(i), t) if t.is_integer() => Value::Int(wrap_int(i, t)),
        (Value::Int(i), CType::Float) => Value::Float(i as f32 as f64),
        (Value::Int(i), CType::Double) => Value::Float(i as f64),
        (Value::Float(x), CType::Float) => Value::Float(x as f32 as f64),
        (Value::Float(x), CType::Double) => Value::Float(x),
        (Value::Float(x), t) if t.is_integer() => {
            let (lo, hi) = t.int_range().unwrap_or((0, 0));
            Value::Int((x.trunc() as i128).clamp(lo, hi))
        }
        (Value::Int(0), CType::Ptr(_)) => Value::NULL,
        (Value::Ptr(p), CType::Ptr(_)) => Value::Ptr(p),
        (Value::Ptr(p), t) if t.is_integer() => Value::Int(i128::from(p.is_some())),
        (v, _) => v,
    }
}

/// Applies a binary operator. `operand` is the common operand type for
/// arithmetic, the pointer type for pointer operations.
pub fn binary(op: Op, operand: &CType, a: Value, b: Value) -> Result<Value, ArithFault> {
    use Value::{Float, Int, Ptr};
    match (op, a, b) {
        (Op::PtrAdd | Op::PtrSub, Ptr(p), Int(n)) => {
            let elem = operand
                .pointee()
                .and_then(CType::size_of)
                .ok_or(ArithFault::BadOperands)? as i128;
            let delta = if op == Op::PtrAdd { n * elem } else { -n * elem };
            match p {
                Some(loc) => Ok(Ptr(Some(loc.offset_by(delta as i64)))),
                None if delta == 0 => Ok(Ptr(None)),
                None => Err(ArithFault::NullArithmetic),
            }
        }
        (Op::PtrDiff, Ptr(Some(x)), Ptr(Some(y))) => {
            if x.object != y.object {
                return Err(ArithFault::UnrelatedPointers);
            }
            let elem = operand
                .pointee()
                .and_then(CType::size_of)
                .ok_or(ArithFault::BadOperands)? as i64;
            Ok(Int(((x.offset - y.offset) / elem) as i128))
        }
        (Op::Eq | Op::Ne, Ptr(x), Ptr(y)) => {
            let eq = x == y;
            Ok(Int(i128::from(if op == Op::Eq { eq } else { !eq })))
        }
        (Op::Lt | Op::Le | Op::Gt | Op::Ge, Ptr(Some(x)), Ptr(Some(y))) => {
            if x.object != y.object {
                return Err(ArithFault::UnrelatedPointers);
            }
            Ok(Int(i128::from(compare(op, x.offset.cmp(&y.offset)))))
        }
        (_, Int(x), Int(y)) => int_binary(op, operand, x, y),
        (_, Float(x), Float(y)) => float_binary(op, operand, x, y),
        _ => Err(ArithFault::BadOperands),
    }
}

fn compare(op: Op, ord: std::cmp::Ordering) -> bool {
    use std::cmp::Ordering::*;
    match op {
        Op::Lt => ord == Less,
        Op::Le => ord != Greater,
        Op::Gt => ord == Greater,
        Op::Ge => ord != Less,
        Op::Eq => ord == Equal,
        Op::Ne => ord != Equal,
        _ => false,
    }
}

fn int_binary(op: Op, ty: &CType, x: i128, y: i128) -> Result<Value, ArithFault> {
    let bits = ty.bit_size_of().unwrap_or(32) as i128;
    let r = match op {
        Op::Add => x + y,
        Op::Sub => x - y,
        Op::Mul => x.checked_mul(y).ok_or(ArithFault::SignedOverflow(Value::Int(0)))?,
        Op::Div | Op::Rem => {
            if y == 0 {
                return Err(ArithFault::DivisionByZero);
            }
            if op == Op::Div {
                x / y
            } else {
                x % y
            }
        }
        Op::Shl | Op::Shr => {
            if y < 0 || y >= bits {
                return Err(ArithFault::ShiftOutOfRange);
            }
            if op == Op::Shr {
                x >> y
            } else if ty.is_signed() {
                if x < 0 {
                    return Err(ArithFault::SignedOverflow(Value::Int(wrap_int(x << y, ty))));
                }
                x << y
            } else {
                wrap_int(x << y, ty)
            }
        }
        Op::BitAnd => x & y,
        Op::BitOr => x | y,
        Op::BitXor => x ^ y,
        Op::Lt | Op::Le | Op::Gt | Op::Ge | Op::Eq | Op::Ne => {
            return Ok(Value::Int(i128::from(compare(op, x.cmp(&y)))))
        }
        Op::PtrAdd | Op::PtrSub | Op::PtrDiff => return Err(ArithFault::BadOperands),
    };
    fit_int(r, ty)
}

fn float_binary(op: Op, ty: &CType, x: f64, y: f64) -> Result<Value, ArithFault> {
    let r = match op {
        Op::Add => x + y,
        Op::Sub => x - y,
        Op::Mul => x * y,
        Op::Div => x / y,
        Op::Lt | Op::Le | Op::Gt | Op::Ge | Op::Eq | Op::Ne => {
            let ord = x.partial_cmp(&y);
            let holds = match ord {
                Some(o) => compare(op, o),
                None => op == Op::Ne,
            };
            return Ok(Value::Int(i128::from(holds)));
        }
        _ => return Err(ArithFault::BadOperands),
    };
    Ok(if *ty == CType::Float {
        Value::Float(r as f32 as f64)
    } else {
        Value::Float(r)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unsigned_wraps_signed_overflow_is_reported() {
        assert_eq!(
            binary(Op::Add, &CType::UInt, Value::Int(u32::MAX as i128), Value::Int(1)),
            Ok(Value::Int(0))
        );
        assert_eq!(
            binary(Op::Add, &CType::Int, Value::Int(i32::MAX as i128), Value::Int(1)),
            Err(ArithFault::SignedOverflow(Value::Int(i32::MIN as i128)))
        );
        assert_eq!(
            binary(Op::Sub, &CType::UInt, Value::Int(0), Value::Int(1)),
            Ok(Value::Int(u32::MAX as i128))
        );
    }

    #[test]
    fn c_division_truncates_toward_zero() {
        assert_eq!(binary(Op::Div, &CType::Int, Value::Int(-7), Value::Int(2)), Ok(Value::Int(-3)));
        assert_eq!(binary(Op::Rem, &CType::Int, Value::Int(-7), Value::Int(2)), Ok(Value::Int(-1)));
        assert_eq!(
            binary(Op::Div, &CType::Int, Value::Int(1), Value::Int(0)),
            Err(ArithFault::DivisionByZero)
        );
    }

    #[test]
    fn pointer_arithmetic_scales_by_element() {
        let p = Value::Ptr(Some(Location::new(ObjectId(3), 4)));
        let ty = CType::ptr_to(CType::Int);
        assert_eq!(
            binary(Op::PtrAdd, &ty, p, Value::Int(2)),
            Ok(Value::Ptr(Some(Location::new(ObjectId(3), 12))))
        );
        let q = Value::Ptr(Some(Location::new(ObjectId(4), 0)));
        assert_eq!(binary(Op::Lt, &ty, p, q), Err(ArithFault::UnrelatedPointers));
        assert_eq!(binary(Op::Eq, &ty, p, q), Ok(Value::Int(0)));
    }

    #[test]
    fn conversions() {
        assert_eq!(convert(Value::Int(-1), &CType::UInt), Value::Int(u32::MAX as i128));
        assert_eq!(convert(Value::Int(300), &CType::Char), Value::Int(44));
        assert_eq!(convert(Value::Float(2.9), &CType::Int), Value::Int(2));
        assert_eq!(convert(Value::Int(0), &CType::ptr_to(CType::Int)), Value::NULL);
    }

    proptest! {
        #[test]
        fn wrap_is_identity_in_range(v in any::<i32>()) {
            prop_assert_eq!(wrap_int(v as i128, &CType::Int), v as i128);
        }

        #[test]
        fn unsigned_add_matches_wrapping(a in any::<u32>(), b in any::<u32>()) {
            let r = binary(Op::Add, &CType::UInt, Value::Int(a as i128), Value::Int(b as i128));
            prop_assert_eq!(r, Ok(Value::Int(a.wrapping_add(b) as i128)));
        }
    }
}
