//! `printf` formatting over interpreter values.

use crate::memory::synthetic_address;
use crate::value::{Location, Value};

#[derive(Default)]
struct Spec {
    left: bool,
    zero: bool,
    plus: bool,
    space: bool,
    alt: bool,
    width: usize,
    precision: Option<usize>,
    long: bool,
}

/// Formats `fmt` with `args`. `read_str` fetches the bytes behind a `%s`
/// argument. Errors describe the misuse.
pub fn format_printf(
    fmt: &[u8],
    args: &[Value],
    mut read_str: impl FnMut(Option<Location>) -> Result<Vec<u8>, String>,
) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    let mut args = args.iter();
    let mut i = 0;
    while i < fmt.len() {
        let c = fmt[i];
        i += 1;
        if c != b'%' {
            out.push(c);
            continue;
        }
        let mut spec = Spec::default();
        while let Some(&f) = fmt.get(i) {
            match f {
                b'-' => spec.left = true,
                b'0' => spec.zero = true,
                b'+' => spec.plus = true,
                b' ' => spec.space = true,
                b'#' => spec.alt = true,
                _ => break,
            }
            i += 1;
        }
        while let Some(d) = fmt.get(i).filter(|d| d.is_ascii_digit()) {
            spec.width = spec.width * 10 + usize::from(d - b'0');
            i += 1;
        }
        if fmt.get(i) == Some(&b'.') {
            i += 1;
            let mut p = 0;
            while let Some(d) = fmt.get(i).filter(|d| d.is_ascii_digit()) {
                p = p * 10 + usize::from(d - b'0');
                i += 1;
            }
            spec.precision = Some(p);
        }
        while let Some(&l) = fmt.get(i) {
            match l {
                b'l' | b'z' => spec.long = true,
                b'h' => {}
                _ => break,
            }
            i += 1;
        }
        let Some(&conv) = fmt.get(i) else {
            return Err("format string ends inside a conversion".into());
        };
        i += 1;
        if conv == b'%' {
            out.push(b'%');
            continue;
        }
        let arg = *args
            .next()
            .ok_or_else(|| format!("conversion `%{}` has no argument", conv as char))?;
        let mismatch = || format!("conversion `%{}` does not match its argument", conv as char);
        let (sign, body): (&str, Vec<u8>) = match (conv, arg) {
            (b'd' | b'i', Value::Int(v)) => {
                let v = if spec.long { v as i64 } else { v as i32 as i64 };
                let sign = if v < 0 {
                    "-"
                } else if spec.plus {
                    "+"
                } else if spec.space {
                    " "
                } else {
                    ""
                };
                (sign, digits(v.unsigned_abs().to_string(), spec.precision))
            }
            (b'u' | b'x' | b'X' | b'o', Value::Int(v)) => {
                let v = if spec.long { v as u64 } else { v as u32 as u64 };
                let text = match conv {
                    b'u' => v.to_string(),
                    b'x' => format!("{}{v:x}", if spec.alt && v != 0 { "0x" } else { "" }),
                    b'X' => format!("{}{v:X}", if spec.alt && v != 0 { "0X" } else { "" }),
                    _ => format!("{}{v:o}", if spec.alt { "0" } else { "" }),
                };
                ("", digits(text, spec.precision))
            }
            (b'c', Value::Int(v)) => ("", vec![v as u8]),
            (b'f' | b'F' | b'e' | b'E', Value::Float(x)) => {
                let p = spec.precision.unwrap_or(6);
                let sign = if x.is_sign_negative() {
                    "-"
                } else if spec.plus {
                    "+"
                } else if spec.space {
                    " "
                } else {
                    ""
                };
                let a = x.abs();
                let text = if a.is_nan() {
                    "nan".to_string()
                } else if a.is_infinite() {
                    "inf".to_string()
                } else if conv == b'f' || conv == b'F' {
                    format!("{a:.p$}")
                } else {
                    exponent_form(a, p)
                };
                let text = if conv.is_ascii_uppercase() {
                    text.to_uppercase()
                } else {
                    text
                };
                (if x.is_nan() { "" } else { sign }, text.into_bytes())
            }
            (b's', Value::Ptr(p)) => {
                let mut s = read_str(p)?;
                if let Some(p) = spec.precision {
                    s.truncate(p);
                }
                ("", s)
            }
            (b'p', Value::Ptr(p)) => {
                let text = match p {
                    Some(l) => format!("0x{:x}", synthetic_address(l)),
                    None => "(nil)".to_string(),
                };
                ("", text.into_bytes())
            }
            (b'd' | b'i' | b'u' | b'x' | b'X' | b'o' | b'c' | b'f' | b'F' | b'e' | b'E' | b's' | b'p', _) => {
                return Err(mismatch())
            }
            _ => return Err(format!("conversion `%{}` is not supported", conv as char)),
        };
        let len = sign.len() + body.len();
        let pad = spec.width.saturating_sub(len);
        let numeric = !matches!(conv, b's' | b'c' | b'p');
        let zero_pad = spec.zero && !spec.left && numeric && (spec.precision.is_none() || conv == b'f' || conv == b'e');
        if spec.left {
            out.extend_from_slice(sign.as_bytes());
            out.extend_from_slice(&body);
            out.extend(std::iter::repeat_n(b' ', pad));
        } else if zero_pad {
            out.extend_from_slice(sign.as_bytes());
            out.extend(std::iter::repeat_n(b'0', pad));
            out.extend_from_slice(&body);
        } else {
            out.extend(std::iter::repeat_n(b' ', pad));
            out.extend_from_slice(sign.as_bytes());
            out.extend_from_slice(&body);
        }
    }
    Ok(out)
}

/// Applies an integer precision (minimum digit count).
fn digits(text: String, precision: Option<usize>) -> Vec<u8> {
    match precision {
        Some(0) if text == "0" => Vec::new(),
        Some(p) if text.len() < p => {
            let mut v = vec![b'0'; p - text.len()];
            v.extend_from_slice(text.as_bytes());
            v
        }
        _ => text.into_bytes(),
    }
}

/// C's `%e`: one digit, a point, `p` digits and a signed two-digit exponent.
fn exponent_form(a: f64, p: usize) -> String {
    let s = format!("{a:.p$e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fmt(f: &str, args: &[Value]) -> String {
        let out = format_printf(f.as_bytes(), args, |_| Ok(b"str".to_vec())).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn integers() {
        assert_eq!(fmt("%d|%3d|%-3d|%03d", &[Value::Int(-5), Value::Int(7), Value::Int(7), Value::Int(7)]), "-5|  7|7  |007");
        assert_eq!(fmt("%u %x %X %#x", &[Value::Int(-1), Value::Int(255), Value::Int(255), Value::Int(255)]), "4294967295 ff FF 0xff");
        assert_eq!(fmt("%ld %lu", &[Value::Int(-1), Value::Int(-1)]), "-1 18446744073709551615");
        assert_eq!(fmt("%+d %.3d %c%%", &[Value::Int(4), Value::Int(4), Value::Int(65)]), "+4 004 A%");
    }

    #[test]
    fn floats_and_strings() {
        assert_eq!(fmt("%f %.2f %8.3f", &[Value::Float(1.5), Value::Float(-0.125), Value::Float(7.0625)]), "1.500000 -0.12    7.062");
        assert_eq!(fmt("%e", &[Value::Float(1234.5)]), "1.234500e+03");
        assert_eq!(fmt("[%5s|%-5s|%.2s]", &[Value::NULL, Value::NULL, Value::NULL]), "[  str|str  |st]");
    }

    #[test]
    fn misuse() {
        assert!(format_printf(b"%d", &[], |_| Ok(Vec::new())).is_err());
        assert!(format_printf(b"%s", &[Value::Int(1)], |_| Ok(Vec::new())).is_err());
        assert!(format_printf(b"%q", &[Value::Int(1)], |_| Ok(Vec::new())).is_err());
    }
}
