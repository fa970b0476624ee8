//! Parsing of list arguments, complex numbers, exact rationals and the
//! tagged insertion files.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;

use grsk::{Error, Result};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Comma-separated reals.
pub fn floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| parse_err(format!("{t:?}: {e}"))))
        .collect()
}

/// A complex number such as `0.3`, `-0.5i`, `i`, `0.1+2i` or `1e-3-2.5i`.
pub fn complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || parse_err(format!("not a complex number: {s:?}"));
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|x| Complex64::new(x, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&i| {
        (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E')
    });
    let imag = |x: &str| -> Result<f64> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse::<f64>().map_err(|_| bad()),
        }
    };
    match split {
        Some(i) => {
            let re = body[..i].parse::<f64>().map_err(|_| bad())?;
            Ok(Complex64::new(re, imag(&body[i..])?))
        }
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

/// Comma-separated complex numbers.
pub fn complexes(s: &str) -> Result<Vec<Complex64>> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(complex).collect()
}

/// Exact rational from `p/q`, an integer or a plain decimal.
pub fn rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = || parse_err(format!("not an exact rational: {t:?}"));
    let int = |x: &str| x.parse::<BigInt>().map_err(|_| bad());
    if let Some((p, q)) = t.split_once('/') {
        let q = int(q)?;
        if q == BigInt::from(0) {
            return Err(parse_err(format!("zero denominator in {t:?}")));
        }
        return Ok(BigRational::new(int(p)?, q));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = whole.starts_with('-');
        let digits = format!("{}{frac}", whole.trim_start_matches(['-', '+']));
        let mut v = BigRational::new(int(&digits)?, BigInt::from(10).pow(frac.len() as u32));
        if neg {
            v = -v;
        }
        return Ok(v);
    }
    Ok(BigRational::from_integer(int(t)?))
}

/// Displays a rational as `p/q`, or `p` when integral.
pub fn rational_string(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Contents of a tagged insertion file: rows of an initial triangular array
/// (`array,…`), a word inserted into it (`word,…`), and a single row
/// insertion `b` into `ξ` (`xi,…` and `b,…`). Lines starting with `#` are
/// comments.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InsertionFile {
    pub array: Vec<Vec<String>>,
    pub word: Option<Vec<String>>,
    pub xi: Option<Vec<String>>,
    pub b: Option<Vec<String>>,
}

/// Returns `None` when the text is not in the tagged format (it is then a
/// plain weight matrix).
pub fn insertion_file(text: &str) -> Result<Option<InsertionFile>> {
    let mut out = InsertionFile::default();
    let mut tagged = false;
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let tag = fields.next().unwrap_or_default();
        let values: Vec<String> = fields.filter(|f| !f.is_empty()).map(String::from).collect();
        match tag {
            "array" => out.array.push(values),
            "word" => out.word = Some(values),
            "xi" => out.xi = Some(values),
            "b" => out.b = Some(values),
            _ if !tagged => return Ok(None),
            other => return Err(parse_err(format!("line {}: unknown tag {other:?}", no + 1))),
        }
        tagged = true;
    }
    if !tagged {
        return Ok(None);
    }
    for (k, row) in out.array.iter().enumerate() {
        if row.len() != k + 1 {
            return Err(parse_err(format!("array row {} has {} entries, expected {}", k + 1, row.len(), k + 1)));
        }
    }
    if out.xi.is_some() != out.b.is_some() {
        return Err(parse_err("xi and b must be given together"));
    }
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(complex("0.3").unwrap(), Complex64::new(0.3, 0.0));
        assert_eq!(complex("-0.5i").unwrap(), Complex64::new(0.0, -0.5));
        assert_eq!(complex("i").unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(complex("0.1+2i").unwrap(), Complex64::new(0.1, 2.0));
        assert_eq!(complex("1e-3-2.5i").unwrap(), Complex64::new(1e-3, -2.5));
        assert_eq!(complex("-1e+2-i").unwrap(), Complex64::new(-100.0, -1.0));
        assert!(complex("abc").is_err());
    }

    #[test]
    fn rational_forms() {
        assert_eq!(rational_string(&rational("138/7").unwrap()), "138/7");
        assert_eq!(rational_string(&rational("4").unwrap()), "4");
        assert_eq!(rational_string(&rational("-0.25").unwrap()), "-1/4");
        assert_eq!(rational_string(&rational("6/4").unwrap()), "3/2");
        assert!(rational("1/0").is_err());
        assert!(rational("1.").is_err());
    }

    #[test]
    fn tagged_file() {
        let f = insertion_file("# c\narray,4\narray,1,3\nword,2,2\n").unwrap().unwrap();
        assert_eq!(f.array.len(), 2);
        assert_eq!(f.word.unwrap(), vec!["2", "2"]);
        assert!(insertion_file("1,2\n3,4\n").unwrap().is_none());
        assert!(insertion_file("array,1,2\n").is_err());
        assert!(insertion_file("xi,1,2\n").is_err());
    }
}
