//! JSON value model, parser and writer.
//!
//! Numbers keep the spelling they were parsed with so that a value such as
//! `31.9938` is written back byte-for-byte. Numeric comparison goes through
//! [`Decimal`], which reduces a numeral to its exact decimal value.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt::{self, Write as _};

/// Maximum nesting of arrays and objects accepted by [`parse`].
pub const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Bool(bool),
    Number(Number),
    String(String),
    Array(Vec<Value>),
    Object(Map),
}

impl Value {
    pub fn as_object(&self) -> Option<&Map> {
        match self {
            Value::Object(map) => Some(map),
            _ => None,
        }
    }

    pub fn as_array(&self) -> Option<&[Value]> {
        match self {
            Value::Array(items) => Some(items),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::String(s) => Some(s),
            _ => None,
        }
    }

    /// Compact JSON text (`,` and `:` separators, no whitespace).
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        write_value(&mut out, self, Layout::Compact);
        out
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::String(s.into())
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Number(Number::from_i64(n))
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

/// Insertion-ordered JSON object with unique keys.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Map {
    entries: Vec<(String, Value)>,
}

impl Map {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    /// Inserts or replaces; a replaced entry keeps its original position.
    pub fn insert(&mut self, key: impl Into<String>, value: Value) -> Option<Value> {
        let key = key.into();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some((_, slot)) => Some(core::mem::replace(slot, value)),
            None => {
                self.entries.push((key, value));
                None
            }
        }
    }

    pub fn remove(&mut self, key: &str) -> Option<Value> {
        let pos = self.entries.iter().position(|(k, _)| k == key)?;
        Some(self.entries.remove(pos).1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut Value> {
        self.entries.iter_mut().map(|(_, v)| v)
    }
}

impl FromIterator<(String, Value)> for Map {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        let mut map = Map::new();
        for (k, v) in iter {
            map.insert(k, v);
        }
        map
    }
}

/// A JSON numeral in its source spelling.
///
/// Equality is by exact decimal value, so `1999` equals `1999.0` and `1.999e3`.
#[derive(Debug, Clone)]
pub struct Number {
    repr: String,
}

impl Number {
    /// Accepts exactly the JSON numeral grammar.
    pub fn parse(text: &str) -> Option<Number> {
        Decimal::parse(text)?;
        Some(Number { repr: text.into() })
    }

    pub fn from_i64(n: i64) -> Number {
        let mut repr = String::new();
        let _ = write!(repr, "{n}");
        Number { repr }
    }

    pub fn as_str(&self) -> &str {
        &self.repr
    }

    pub fn decimal(&self) -> Decimal {
        // repr was validated on construction
        Decimal::parse(&self.repr).unwrap_or_default()
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.repr == other.repr || self.decimal() == other.decimal()
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.repr)
    }
}

/// Exact decimal value of a JSON numeral: `(-1)^negative * digits * 10^exponent`.
///
/// `digits` has no leading or trailing zeros; zero is the empty digit string
/// with exponent 0 and a positive sign (so `-0` equals `0`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Decimal {
    negative: bool,
    digits: String,
    exponent: i64,
}

impl Decimal {
    pub fn parse(text: &str) -> Option<Decimal> {
        let bytes = text.as_bytes();
        let mut i = 0;
        let negative = bytes.first() == Some(&b'-');
        if negative {
            i += 1;
        }
        let int_start = i;
        match bytes.get(i) {
            Some(b'0') => i += 1,
            Some(b'1'..=b'9') => {
                while matches!(bytes.get(i), Some(b'0'..=b'9')) {
                    i += 1;
                }
            }
            _ => return None,
        }
        let int_digits = &text[int_start..i];
        let mut frac_digits = "";
        if bytes.get(i) == Some(&b'.') {
            i += 1;
            let start = i;
            while matches!(bytes.get(i), Some(b'0'..=b'9')) {
                i += 1;
            }
            if i == start {
                return None;
            }
            frac_digits = &text[start..i];
        }
        let mut exp: i64 = 0;
        if matches!(bytes.get(i), Some(b'e' | b'E')) {
            i += 1;
            let exp_negative = match bytes.get(i) {
                Some(b'-') => {
                    i += 1;
                    true
                }
                Some(b'+') => {
                    i += 1;
                    false
                }
                _ => false,
            };
            let start = i;
            while let Some(d @ b'0'..=b'9') = bytes.get(i) {
                exp = exp.checked_mul(10)?.checked_add(i64::from(d - b'0'))?;
                i += 1;
            }
            if i == start {
                return None;
            }
            if exp_negative {
                exp = -exp;
            }
        }
        if i != bytes.len() {
            return None;
        }

        let mut digits = String::with_capacity(int_digits.len() + frac_digits.len());
        digits.push_str(int_digits);
        digits.push_str(frac_digits);
        let mut exponent = exp.checked_sub(i64::try_from(frac_digits.len()).ok()?)?;
        let leading = digits.bytes().take_while(|&b| b == b'0').count();
        digits.drain(..leading);
        while digits.ends_with('0') {
            digits.pop();
            exponent = exponent.checked_add(1)?;
        }
        if digits.is_empty() {
            return Some(Decimal::default());
        }
        Some(Decimal { negative, digits, exponent })
    }

    pub fn is_zero(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn is_integer(&self) -> bool {
        self.exponent >= 0
    }

    /// The value as `i64` when it is an integer in range.
    pub fn to_i64(&self) -> Option<i64> {
        if self.is_zero() {
            return Some(0);
        }
        if !self.is_integer() || self.digits.len() as i64 + self.exponent > 19 {
            return None;
        }
        let mut value: i64 = 0;
        for b in self.digits.bytes() {
            value = value.checked_mul(10)?.checked_sub(i64::from(b - b'0'))?;
        }
        for _ in 0..self.exponent {
            value = value.checked_mul(10)?;
        }
        if self.negative {
            Some(value)
        } else {
            value.checked_neg()
        }
    }

    // position of the decimal point relative to the first digit
    fn adjusted(&self) -> i64 {
        self.digits.len() as i64 + self.exponent
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        let sign = |d: &Decimal| -> i8 {
            if d.is_zero() {
                0
            } else if d.negative {
                -1
            } else {
                1
            }
        };
        let (a, b) = (sign(self), sign(other));
        if a != b || a == 0 {
            return a.cmp(&b);
        }
        let magnitude = self
            .adjusted()
            .cmp(&other.adjusted())
            .then_with(|| self.digits.cmp(&other.digits));
        if a < 0 {
            magnitude.reverse()
        } else {
            magnitude
        }
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest plain spelling for moderate magnitudes, scientific otherwise.
/// The output is always a valid JSON numeral.
impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        if self.negative {
            f.write_char('-')?;
        }
        let n = self.digits.len() as i64;
        let adjusted = self.adjusted();
        if self.exponent >= 0 && adjusted <= 21 {
            f.write_str(&self.digits)?;
            for _ in 0..self.exponent {
                f.write_char('0')?;
            }
            Ok(())
        } else if self.exponent < 0 && adjusted > -6 {
            if adjusted > 0 {
                let split = adjusted as usize;
                write!(f, "{}.{}", &self.digits[..split], &self.digits[split..])
            } else {
                f.write_str("0.")?;
                for _ in 0..-adjusted {
                    f.write_char('0')?;
                }
                f.write_str(&self.digits)
            }
        } else {
            f.write_str(&self.digits[..1])?;
            if n > 1 {
                write!(f, ".{}", &self.digits[1..])?;
            }
            write!(f, "e{}", adjusted - 1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyntaxErrorKind {
    UnexpectedEnd,
    UnexpectedChar(char),
    InvalidNumber,
    InvalidEscape,
    InvalidUnicodeEscape,
    ControlCharacterInString,
    TrailingCharacters,
    TooDeep,
}

impl fmt::Display for SyntaxErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntaxErrorKind::UnexpectedEnd => f.write_str("unexpected end of input"),
            SyntaxErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            SyntaxErrorKind::InvalidNumber => f.write_str("invalid number"),
            SyntaxErrorKind::InvalidEscape => f.write_str("invalid escape sequence"),
            SyntaxErrorKind::InvalidUnicodeEscape => f.write_str("invalid unicode escape"),
            SyntaxErrorKind::ControlCharacterInString => {
                f.write_str("unescaped control character in string")
            }
            SyntaxErrorKind::TrailingCharacters => f.write_str("trailing characters"),
            SyntaxErrorKind::TooDeep => f.write_str("nesting too deep"),
        }
    }
}

/// Failure reported by [`parse`]; `offset` is a byte offset into the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JsonError {
    Syntax { kind: SyntaxErrorKind, offset: usize },
    DuplicateKey { key: String, offset: usize },
}

impl JsonError {
    pub fn offset(&self) -> usize {
        match self {
            JsonError::Syntax { offset, .. } | JsonError::DuplicateKey { offset, .. } => *offset,
        }
    }
}

/// Parses a complete JSON document. Duplicate object keys are rejected.
pub fn parse(text: &str) -> Result<Value, JsonError> {
    Parser::new(text).parse_document().map(|(value, _)| value)
}

/// Like [`parse`], also returning the byte offset at which each element of a
/// top-level array begins (empty when the document is not an array).
pub fn parse_with_element_offsets(text: &str) -> Result<(Value, Vec<usize>), JsonError> {
    Parser::new(text).parse_document()
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    depth: usize,
    element_offsets: Vec<usize>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            text,
            bytes: text.as_bytes(),
            pos: 0,
            depth: 0,
            element_offsets: Vec::new(),
        }
    }

    fn parse_document(mut self) -> Result<(Value, Vec<usize>), JsonError> {
        self.skip_ws();
        let value = self.parse_value()?;
        self.skip_ws();
        if self.pos != self.bytes.len() {
            return Err(self.syntax(SyntaxErrorKind::TrailingCharacters));
        }
        Ok((value, self.element_offsets))
    }

    fn syntax(&self, kind: SyntaxErrorKind) -> JsonError {
        JsonError::Syntax { kind, offset: self.pos }
    }

    fn unexpected(&self) -> JsonError {
        match self.text[self.pos..].chars().next() {
            Some(c) => self.syntax(SyntaxErrorKind::UnexpectedChar(c)),
            None => self.syntax(SyntaxErrorKind::UnexpectedEnd),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(b' ' | b'\t' | b'\n' | b'\r') = self.bytes.get(self.pos) {
            self.pos += 1;
        }
    }

    fn expect_literal(&mut self, literal: &str, value: Value) -> Result<Value, JsonError> {
        for expected in literal.bytes() {
            if self.bytes.get(self.pos) != Some(&expected) {
                return Err(self.unexpected());
            }
            self.pos += 1;
        }
        Ok(value)
    }

    fn parse_value(&mut self) -> Result<Value, JsonError> {
        match self.bytes.get(self.pos) {
            None => Err(self.syntax(SyntaxErrorKind::UnexpectedEnd)),
            Some(b'n') => self.expect_literal("null", Value::Null),
            Some(b't') => self.expect_literal("true", Value::Bool(true)),
            Some(b'f') => self.expect_literal("false", Value::Bool(false)),
            Some(b'"') => self.parse_string().map(Value::String),
            Some(b'[') => self.parse_array(),
            Some(b'{') => self.parse_object(),
            Some(b'-' | b'0'..=b'9') => self.parse_number(),
            Some(_) => Err(self.unexpected()),
        }
    }

    fn enter(&mut self) -> Result<(), JsonError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.syntax(SyntaxErrorKind::TooDeep));
        }
        Ok(())
    }

    fn parse_array(&mut self) -> Result<Value, JsonError> {
        self.enter()?;
        let top_level = self.depth == 1;
        self.pos += 1;
        let mut items = Vec::new();
        self.skip_ws();
        if self.bytes.get(self.pos) == Some(&b']') {
            self.pos += 1;
            self.depth -= 1;
            return Ok(Value::Array(items));
        }
        loop {
            self.skip_ws();
            if top_level {
                self.element_offsets.push(self.pos);
            }
            items.push(self.parse_value()?);
            self.skip_ws();
            match self.bytes.get(self.pos) {
                Some(b',') => self.pos += 1,
                Some(b']') => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(self.unexpected()),
            }
        }
        self.depth -= 1;
        Ok(Value::Array(items))
    }

    fn parse_object(&mut self) -> Result<Value, JsonError> {
        self.enter()?;
        self.pos += 1;
        let mut map = Map::new();
        self.skip_ws();
        if self.bytes.get(self.pos) == Some(&b'}') {
            self.pos += 1;
            self.depth -= 1;
            return Ok(Value::Object(map));
        }
        loop {
            self.skip_ws();
            if self.bytes.get(self.pos) != Some(&b'"') {
                return Err(self.unexpected());
            }
            let key_offset = self.pos;
            let key = self.parse_string()?;
            self.skip_ws();
            if self.bytes.get(self.pos) != Some(&b':') {
                return Err(self.unexpected());
            }
            self.pos += 1;
            self.skip_ws();
            let value = self.parse_value()?;
            if map.contains_key(&key) {
                return Err(JsonError::DuplicateKey { key, offset: key_offset });
            }
            map.entries.push((key, value));
            self.skip_ws();
            match self.bytes.get(self.pos) {
                Some(b',') => self.pos += 1,
                Some(b'}') => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(self.unexpected()),
            }
        }
        self.depth -= 1;
        Ok(Value::Object(map))
    }

    fn parse_number(&mut self) -> Result<Value, JsonError> {
        let start = self.pos;
        while let Some(b'-' | b'+' | b'.' | b'e' | b'E' | b'0'..=b'9') = self.bytes.get(self.pos) {
            self.pos += 1;
        }
        let numeral = &self.text[start..self.pos];
        Number::parse(numeral).map(Value::Number).ok_or(JsonError::Syntax {
            kind: SyntaxErrorKind::InvalidNumber,
            offset: start,
        })
    }

    fn parse_hex4(&mut self) -> Result<u32, JsonError> {
        let digits = self
            .text
            .get(self.pos..self.pos + 4)
            .filter(|d| d.bytes().all(|b| b.is_ascii_hexdigit()))
            .ok_or_else(|| self.syntax(SyntaxErrorKind::InvalidUnicodeEscape))?;
        let value = u32::from_str_radix(digits, 16)
            .map_err(|_| self.syntax(SyntaxErrorKind::InvalidUnicodeEscape))?;
        self.pos += 4;
        Ok(value)
    }

    fn parse_string(&mut self) -> Result<String, JsonError> {
        self.pos += 1;
        let mut out = String::new();
        loop {
            let run_start = self.pos;
            while let Some(&b) = self.bytes.get(self.pos) {
                if b == b'"' || b == b'\\' || b < 0x20 {
                    break;
                }
                self.pos += 1;
            }
            out.push_str(&self.text[run_start..self.pos]);
            match self.bytes.get(self.pos) {
                None => return Err(self.syntax(SyntaxErrorKind::UnexpectedEnd)),
                Some(b'"') => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some(b'\\') => {
                    let escape_start = self.pos;
                    self.pos += 1;
                    let c = match self.bytes.get(self.pos) {
                        Some(b'"') => '"',
                        Some(b'\\') => '\\',
                        Some(b'/') => '/',
                        Some(b'b') => '\u{8}',
                        Some(b'f') => '\u{c}',
                        Some(b'n') => '\n',
                        Some(b'r') => '\r',
                        Some(b't') => '\t',
                        Some(b'u') => {
                            self.pos += 1;
                            let c = self.parse_unicode_escape(escape_start)?;
                            out.push(c);
                            continue;
                        }
                        None => return Err(self.syntax(SyntaxErrorKind::UnexpectedEnd)),
                        Some(_) => return Err(self.syntax(SyntaxErrorKind::InvalidEscape)),
                    };
                    self.pos += 1;
                    out.push(c);
                }
                Some(_) => return Err(self.syntax(SyntaxErrorKind::ControlCharacterInString)),
            }
        }
    }

    fn parse_unicode_escape(&mut self, escape_start: usize) -> Result<char, JsonError> {
        let invalid = JsonError::Syntax {
            kind: SyntaxErrorKind::InvalidUnicodeEscape,
            offset: escape_start,
        };
        let first = self.parse_hex4()?;
        let code = match first {
            0xD800..=0xDBFF => {
                if self.text.get(self.pos..self.pos + 2) != Some("\\u") {
                    return Err(invalid);
                }
                self.pos += 2;
                let second = self.parse_hex4()?;
                if !(0xDC00..=0xDFFF).contains(&second) {
                    return Err(invalid);
                }
                0x10000 + ((first - 0xD800) << 10) + (second - 0xDC00)
            }
            0xDC00..=0xDFFF => return Err(invalid),
            other => other,
        };
        char::from_u32(code).ok_or(invalid)
    }
}

/// Separator style for [`write_value`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// `[1,2]`, `{"a":1}`
    Compact,
    /// `[1, 2]`, `{"a": 1}`, the layout used in the prompt exemplars.
    Spaced,
}

pub fn write_value(out: &mut String, value: &Value, layout: Layout) {
    let item_sep = match layout {
        Layout::Compact => ",",
        Layout::Spaced => ", ",
    };
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(true) => out.push_str("true"),
        Value::Bool(false) => out.push_str("false"),
        Value::Number(n) => out.push_str(n.as_str()),
        Value::String(s) => write_string(out, s),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(item_sep);
                }
                write_value(out, item, layout);
            }
            out.push(']');
        }
        Value::Object(map) => write_object(out, map, layout),
    }
}

pub fn write_object(out: &mut String, map: &Map, layout: Layout) {
    let (item_sep, key_sep) = match layout {
        Layout::Compact => (",", ":"),
        Layout::Spaced => (", ", ": "),
    };
    out.push('{');
    for (i, (key, item)) in map.iter().enumerate() {
        if i > 0 {
            out.push_str(item_sep);
        }
        write_string(out, key);
        out.push_str(key_sep);
        write_value(out, item, layout);
    }
    out.push('}');
}

/// Writes `s` as a JSON string literal. Non-ASCII text is emitted as UTF-8.
pub fn write_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{8}' => out.push_str("\\b"),
            '\u{c}' => out.push_str("\\f"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}
