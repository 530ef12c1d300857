//! The value universe carried by recorded actions and model states.
//!
//! Every [`Value`] is kept in canonical form: set members and map keys are
//! sorted by the canonical order and deduplicated when the value is built.
//! Structural equality, hashing and [`Ord`] therefore all agree with the
//! byte-level [`Value::encode`] representation.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

const TAG_BOOL: u8 = 0x01;
const TAG_INT: u8 = 0x02;
const TAG_STR: u8 = 0x03;
const TAG_SET: u8 = 0x04;
const TAG_TUPLE: u8 = 0x05;
const TAG_MAP: u8 = 0x06;

/// A recursive, immutable datum: the argument universe of recorded actions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Str(String),
    Set(ValueSet),
    Tuple(Vec<Value>),
    Map(ValueMap),
}

/// A duplicate-free set of values, stored in canonical order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ValueSet(Vec<Value>);

/// A finite mapping with duplicate-free keys, stored in canonical key order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ValueMap(Vec<(Value, Value)>);

impl ValueSet {
    pub fn new<I: IntoIterator<Item = Value>>(members: I) -> Self {
        let mut members: Vec<Value> = members.into_iter().collect();
        members.sort();
        members.dedup();
        ValueSet(members)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Value> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.0.binary_search(v).is_ok()
    }
}

impl ValueMap {
    /// Builds a map from pairs. When a key repeats, the last pair wins.
    pub fn new<I: IntoIterator<Item = (Value, Value)>>(pairs: I) -> Self {
        let mut pairs: Vec<(Value, Value)> = pairs.into_iter().collect();
        // Stable sort keeps insertion order among equal keys, so keeping the
        // last of each run implements last-write-wins.
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Value, Value)> = Vec::with_capacity(pairs.len());
        for (k, v) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 = v,
                _ => out.push((k, v)),
            }
        }
        ValueMap(out)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&Value, &Value)> {
        self.0.iter().map(|(k, v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, key: &Value) -> Option<&Value> {
        self.0
            .binary_search_by(|(k, _)| k.cmp(key))
            .ok()
            .map(|i| &self.0[i].1)
    }
}

impl Value {
    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    pub fn set<I: IntoIterator<Item = Value>>(members: I) -> Value {
        Value::Set(ValueSet::new(members))
    }

    pub fn tuple<I: IntoIterator<Item = Value>>(elems: I) -> Value {
        Value::Tuple(elems.into_iter().collect())
    }

    pub fn map<I: IntoIterator<Item = (Value, Value)>>(pairs: I) -> Value {
        Value::Map(ValueMap::new(pairs))
    }

    pub fn empty_tuple() -> Value {
        Value::Tuple(Vec::new())
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_tuple(&self) -> Option<&[Value]> {
        match self {
            Value::Tuple(t) => Some(t),
            _ => None,
        }
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Bool(_) => ValueKind::Bool,
            Value::Int(_) => ValueKind::Int,
            Value::Str(_) => ValueKind::Str,
            Value::Set(_) => ValueKind::Set,
            Value::Tuple(_) => ValueKind::Tuple,
            Value::Map(_) => ValueKind::Map,
        }
    }

    fn tag(&self) -> u8 {
        match self {
            Value::Bool(_) => TAG_BOOL,
            Value::Int(_) => TAG_INT,
            Value::Str(_) => TAG_STR,
            Value::Set(_) => TAG_SET,
            Value::Tuple(_) => TAG_TUPLE,
            Value::Map(_) => TAG_MAP,
        }
    }

    /// Canonical, injective, prefix-free byte encoding.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(self.tag());
        match self {
            Value::Bool(b) => out.push(u8::from(*b)),
            // Flipping the sign bit makes big-endian byte order match numeric order.
            Value::Int(i) => out.extend_from_slice(&((*i as u64) ^ (1 << 63)).to_be_bytes()),
            Value::Str(s) => {
                put_len(out, s.len());
                out.extend_from_slice(s.as_bytes());
            }
            Value::Set(set) => {
                put_len(out, set.len());
                for m in set.iter() {
                    m.encode_into(out);
                }
            }
            Value::Tuple(elems) => {
                put_len(out, elems.len());
                for e in elems {
                    e.encode_into(out);
                }
            }
            Value::Map(map) => {
                put_len(out, map.len());
                for (k, v) in map.iter() {
                    k.encode_into(out);
                    v.encode_into(out);
                }
            }
        }
    }

    /// Encoding of `Value::Tuple(elems)` without building the tuple.
    pub fn encode_tuple(elems: &[Value]) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 + 9 * elems.len());
        out.push(Value::Tuple(Vec::new()).tag());
        put_len(&mut out, elems.len());
        for e in elems {
            e.encode_into(&mut out);
        }
        out
    }

    /// Decodes a complete canonical encoding.
    pub fn decode(bytes: &[u8]) -> Result<Value, DecodeError> {
        let mut cursor = bytes;
        let v = decode_one(&mut cursor)?;
        if !cursor.is_empty() {
            return Err(DecodeError::TrailingBytes(cursor.len()));
        }
        Ok(v)
    }

    /// A 64-bit digest of the canonical encoding.
    pub fn digest(&self) -> u64 {
        digest_bytes(&self.encode())
    }
}

/// Digest used for fingerprints: deterministic for a given build.
pub fn digest_bytes(bytes: &[u8]) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    bytes.hash(&mut h);
    h.finish()
}

fn put_len(out: &mut Vec<u8>, len: usize) {
    let len = u32::try_from(len).expect("value component longer than u32::MAX");
    out.extend_from_slice(&len.to_be_bytes());
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Bool,
    Int,
    Str,
    Set,
    Tuple,
    Map,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ValueKind::Bool => "bool",
            ValueKind::Int => "int",
            ValueKind::Str => "string",
            ValueKind::Set => "set",
            ValueKind::Tuple => "tuple",
            ValueKind::Map => "map",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("unexpected end of input")]
    Truncated,
    #[error("unknown type tag {0:#04x}")]
    UnknownTag(u8),
    #[error("invalid boolean byte {0:#04x}")]
    BadBool(u8),
    #[error("string is not valid UTF-8")]
    BadUtf8,
    #[error("set or map members are not in canonical order")]
    NotCanonical,
    #[error("{0} trailing bytes after value")]
    TrailingBytes(usize),
}

fn take<'a>(cursor: &mut &'a [u8], n: usize) -> Result<&'a [u8], DecodeError> {
    if cursor.len() < n {
        return Err(DecodeError::Truncated);
    }
    let (head, rest) = cursor.split_at(n);
    *cursor = rest;
    Ok(head)
}

fn take_len(cursor: &mut &[u8]) -> Result<usize, DecodeError> {
    let b = take(cursor, 4)?;
    Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]) as usize)
}

fn decode_one(cursor: &mut &[u8]) -> Result<Value, DecodeError> {
    let tag = take(cursor, 1)?[0];
    match tag {
        TAG_BOOL => match take(cursor, 1)?[0] {
            0 => Ok(Value::Bool(false)),
            1 => Ok(Value::Bool(true)),
            b => Err(DecodeError::BadBool(b)),
        },
        TAG_INT => {
            let b = take(cursor, 8)?;
            let raw = u64::from_be_bytes(b.try_into().expect("8 bytes"));
            Ok(Value::Int((raw ^ (1 << 63)) as i64))
        }
        TAG_STR => {
            let n = take_len(cursor)?;
            let b = take(cursor, n)?;
            String::from_utf8(b.to_vec())
                .map(Value::Str)
                .map_err(|_| DecodeError::BadUtf8)
        }
        TAG_SET => {
            let n = take_len(cursor)?;
            let mut members = Vec::with_capacity(n.min(cursor.len()));
            for _ in 0..n {
                members.push(decode_one(cursor)?);
            }
            if members.windows(2).any(|w| w[0] >= w[1]) {
                return Err(DecodeError::NotCanonical);
            }
            Ok(Value::Set(ValueSet(members)))
        }
        TAG_TUPLE => {
            let n = take_len(cursor)?;
            let mut elems = Vec::with_capacity(n.min(cursor.len()));
            for _ in 0..n {
                elems.push(decode_one(cursor)?);
            }
            Ok(Value::Tuple(elems))
        }
        TAG_MAP => {
            let n = take_len(cursor)?;
            let mut pairs = Vec::with_capacity(n.min(cursor.len()));
            for _ in 0..n {
                let k = decode_one(cursor)?;
                let v = decode_one(cursor)?;
                pairs.push((k, v));
            }
            if pairs.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(DecodeError::NotCanonical);
            }
            Ok(Value::Map(ValueMap(pairs)))
        }
        t => Err(DecodeError::UnknownTag(t)),
    }
}

// The order below is exactly the lexicographic order of `encode()` output:
// tag first, then length prefix, then members in sequence. Because the
// encoding is prefix-free, comparing members one at a time is equivalent to
// comparing the concatenated bytes.
impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.tag().cmp(&other.tag()) {
            Ordering::Equal => {}
            o => return o,
        }
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a
                .len()
                .cmp(&b.len())
                .then_with(|| a.as_bytes().cmp(b.as_bytes())),
            (Value::Set(a), Value::Set(b)) => cmp_seq(&a.0, &b.0),
            (Value::Tuple(a), Value::Tuple(b)) => cmp_seq(a, b),
            (Value::Map(a), Value::Map(b)) => a.0.len().cmp(&b.0.len()).then_with(|| {
                for ((ka, va), (kb, vb)) in a.0.iter().zip(&b.0) {
                    match ka.cmp(kb).then_with(|| va.cmp(vb)) {
                        Ordering::Equal => {}
                        o => return o,
                    }
                }
                Ordering::Equal
            }),
            _ => unreachable!("tags compared equal"),
        }
    }
}

fn cmp_seq(a: &[Value], b: &[Value]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_owned())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Str(s)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list<'a>(
            f: &mut fmt::Formatter<'_>,
            items: impl Iterator<Item = &'a Value>,
        ) -> fmt::Result {
            for (i, v) in items.enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            Ok(())
        }
        match self {
            Value::Bool(b) => write!(f, "{}", if *b { "TRUE" } else { "FALSE" }),
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Set(s) => {
                f.write_str("{")?;
                list(f, s.iter())?;
                f.write_str("}")
            }
            Value::Tuple(t) => {
                f.write_str("<<")?;
                list(f, t.iter())?;
                f.write_str(">>")
            }
            Value::Map(m) => {
                f.write_str("[")?;
                for (i, (k, v)) in m.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k} |-> {v}")?;
                }
                f.write_str("]")
            }
        }
    }
}
