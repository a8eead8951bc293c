//! The C type subset understood by the interpreter.

use std::fmt;

pub const POINTER_SIZE: u64 = 8;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CType {
    Void,
    Char,
    Int,
    UInt,
    Long,
    ULong,
    Float,
    Double,
    Ptr(Box<CType>),
    /// An array with a known extent, or an unsized one (`extern __shared__ T x[]`).
    Array(Box<CType>, Option<u64>),
}

impl CType {
    pub fn ptr_to(inner: CType) -> CType {
        CType::Ptr(Box::new(inner))
    }

    /// Size in bytes. `None` for `void` and unsized arrays.
    pub fn size_of(&self) -> Option<u64> {
        Some(match self {
            CType::Void => return None,
            CType::Char => 1,
            CType::Int | CType::UInt | CType::Float => 4,
            CType::Long | CType::ULong | CType::Double => 8,
            CType::Ptr(_) => POINTER_SIZE,
            CType::Array(elem, Some(n)) => elem.size_of()? * n,
            CType::Array(_, None) => return None,
        })
    }

    /// Size in bits of a scalar, as used when assembling values from bytes.
    pub fn bit_size_of(&self) -> Option<u64> {
        self.size_of().map(|b| b * 8)
    }

    pub fn is_integer(&self) -> bool {
        matches!(
            self,
            CType::Char | CType::Int | CType::UInt | CType::Long | CType::ULong
        )
    }

    pub fn is_floating(&self) -> bool {
        matches!(self, CType::Float | CType::Double)
    }

    pub fn is_arithmetic(&self) -> bool {
        self.is_integer() || self.is_floating()
    }

    pub fn is_pointer(&self) -> bool {
        matches!(self, CType::Ptr(_))
    }

    pub fn is_scalar(&self) -> bool {
        self.is_arithmetic() || self.is_pointer()
    }

    pub fn is_array(&self) -> bool {
        matches!(self, CType::Array(..))
    }

    pub fn is_signed(&self) -> bool {
        matches!(self, CType::Char | CType::Int | CType::Long)
    }

    /// Pointee of a pointer or element of an array.
    pub fn pointee(&self) -> Option<&CType> {
        match self {
            CType::Ptr(t) | CType::Array(t, _) => Some(t),
            _ => None,
        }
    }

    /// Array-to-pointer decay; other types are returned unchanged.
    pub fn decay(&self) -> CType {
        match self {
            CType::Array(elem, _) => CType::Ptr(elem.clone()),
            other => other.clone(),
        }
    }

    /// Inclusive range of an integer type.
    pub fn int_range(&self) -> Option<(i128, i128)> {
        Some(match self {
            CType::Char => (i8::MIN as i128, i8::MAX as i128),
            CType::Int => (i32::MIN as i128, i32::MAX as i128),
            CType::UInt => (0, u32::MAX as i128),
            CType::Long => (i64::MIN as i128, i64::MAX as i128),
            CType::ULong => (0, u64::MAX as i128),
            _ => return None,
        })
    }

    fn int_rank(&self) -> u8 {
        match self {
            CType::Char => 1,
            CType::Int | CType::UInt => 2,
            CType::Long | CType::ULong => 3,
            _ => 0,
        }
    }

    /// Integer promotion: `char` widens to `int`.
    pub fn promoted(&self) -> CType {
        match self {
            CType::Char => CType::Int,
            other => other.clone(),
        }
    }

    /// The common type of the usual arithmetic conversions.
    pub fn common_arithmetic(a: &CType, b: &CType) -> CType {
        if *a == CType::Double || *b == CType::Double {
            return CType::Double;
        }
        if *a == CType::Float || *b == CType::Float {
            return CType::Float;
        }
        let (a, b) = (a.promoted(), b.promoted());
        if a == b {
            return a;
        }
        if a.is_signed() == b.is_signed() {
            return if a.int_rank() >= b.int_rank() { a } else { b };
        }
        let (signed, unsigned) = if a.is_signed() { (a, b) } else { (b, a) };
        if unsigned.int_rank() >= signed.int_rank() {
            unsigned
        } else {
            // long can represent every unsigned int
            signed
        }
    }
}

impl fmt::Display for CType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CType::Void => f.write_str("void"),
            CType::Char => f.write_str("char"),
            CType::Int => f.write_str("int"),
            CType::UInt => f.write_str("unsigned int"),
            CType::Long => f.write_str("long"),
            CType::ULong => f.write_str("unsigned long"),
            CType::Float => f.write_str("float"),
            CType::Double => f.write_str("double"),
            CType::Ptr(t) => write!(f, "{t}*"),
            CType::Array(t, Some(n)) => write!(f, "{t}[{n}]"),
            CType::Array(t, None) => write!(f, "{t}[]"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_match_the_data_model() {
        assert_eq!(CType::Char.size_of(), Some(1));
        assert_eq!(CType::Int.size_of(), Some(4));
        assert_eq!(CType::UInt.size_of(), Some(4));
        assert_eq!(CType::Long.size_of(), Some(8));
        assert_eq!(CType::Float.size_of(), Some(4));
        assert_eq!(CType::Double.size_of(), Some(8));
        assert_eq!(CType::ptr_to(CType::Char).size_of(), Some(8));
        assert_eq!(CType::Array(Box::new(CType::Int), Some(18)).size_of(), Some(72));
        assert_eq!(CType::Void.size_of(), None);
        assert_eq!(CType::Array(Box::new(CType::Int), None).size_of(), None);
    }

    #[test]
    fn usual_arithmetic_conversions() {
        use CType::*;
        assert_eq!(CType::common_arithmetic(&Char, &Char), Int);
        assert_eq!(CType::common_arithmetic(&Int, &UInt), UInt);
        assert_eq!(CType::common_arithmetic(&Long, &UInt), Long);
        assert_eq!(CType::common_arithmetic(&Int, &ULong), ULong);
        assert_eq!(CType::common_arithmetic(&Int, &Float), Float);
        assert_eq!(CType::common_arithmetic(&Float, &Double), Double);
    }
}
