//! Minimal PLY codec: ASCII and binary little-endian, arbitrary elements,
//! scalar and list properties. Values are held as `f64`, which represents
//! every PLY scalar type exactly.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Self::I8 => "char",
            Self::U8 => "uchar",
            Self::I16 => "short",
            Self::U16 => "ushort",
            Self::I32 => "int",
            Self::U32 => "uint",
            Self::F32 => "float",
            Self::F64 => "double",
        }
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }

    fn write_le(self, v: f64, out: &mut Vec<u8>) {
        match self {
            Self::I8 => out.push(v as i8 as u8),
            Self::U8 => out.push(v as u8),
            Self::I16 => out.extend_from_slice(&(v as i16).to_le_bytes()),
            Self::U16 => out.extend_from_slice(&(v as u16).to_le_bytes()),
            Self::I32 => out.extend_from_slice(&(v as i32).to_le_bytes()),
            Self::U32 => out.extend_from_slice(&(v as u32).to_le_bytes()),
            Self::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            Self::F64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, Self::F32 | Self::F64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyKind {
    Scalar(ScalarType),
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub name: String,
    pub kind: PropertyKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Scalar(Vec<f64>),
    List(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub count: usize,
    pub properties: Vec<Property>,
    pub columns: Vec<Column>,
}

impl Element {
    pub fn new(name: impl Into<String>, count: usize) -> Self {
        Self { name: name.into(), count, properties: Vec::new(), columns: Vec::new() }
    }

    /// Appends a scalar column. `values.len()` must equal the element count.
    pub fn with_scalar(mut self, name: &str, ty: ScalarType, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.count, "column `{name}` has wrong length");
        self.properties.push(Property { name: name.into(), kind: PropertyKind::Scalar(ty) });
        self.columns.push(Column::Scalar(values));
        self
    }

    pub fn with_list(mut self, name: &str, count: ScalarType, item: ScalarType, values: Vec<Vec<f64>>) -> Self {
        assert_eq!(values.len(), self.count, "column `{name}` has wrong length");
        self.properties.push(Property { name: name.into(), kind: PropertyKind::List { count, item } });
        self.columns.push(Column::List(values));
        self
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.properties.iter().position(|p| p.name == name)
    }

    pub fn scalar(&self, name: &str) -> Option<&[f64]> {
        match &self.columns[self.position(name)?] {
            Column::Scalar(v) => Some(v),
            Column::List(_) => None,
        }
    }

    pub fn list(&self, name: &str) -> Option<&[Vec<f64>]> {
        match &self.columns[self.position(name)?] {
            Column::List(v) => Some(v),
            Column::Scalar(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ply {
    pub encoding: Encoding,
    pub comments: Vec<String>,
    pub elements: Vec<Element>,
}

impl Ply {
    pub fn new(encoding: Encoding) -> Self {
        Self { encoding, comments: Vec::new(), elements: Vec::new() }
    }

    pub fn element(&self, name: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.name == name)
    }

    pub fn parse(bytes: &[u8], path: &Path) -> Result<Self> {
        let err = |m: String| Error::parse(path, m);

        let (header, body) = split_header(bytes).ok_or_else(|| err("missing `end_header`".into()))?;
        let mut lines = header.lines().map(str::trim);
        if lines.next() != Some("ply") {
            return Err(err("missing `ply` magic".into()));
        }

        let mut encoding = None;
        let mut comments = Vec::new();
        let mut defs: Vec<Element> = Vec::new();
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                [] => {}
                ["format", fmt, _version] => {
                    encoding = Some(match *fmt {
                        "ascii" => Encoding::Ascii,
                        "binary_little_endian" => Encoding::BinaryLittleEndian,
                        other => return Err(Error::UnsupportedFormat(format!("PLY encoding `{other}`"))),
                    })
                }
                ["comment", ..] => comments.push(line["comment".len()..].trim().to_owned()),
                ["obj_info", ..] => {}
                ["element", name, count] => {
                    let count = count.parse().map_err(|_| err(format!("bad element count `{count}`")))?;
                    defs.push(Element::new(*name, count));
                }
                ["property", "list", ct, it, name] => {
                    let el = defs.last_mut().ok_or_else(|| err("property before element".into()))?;
                    let (Some(count), Some(item)) = (ScalarType::parse(ct), ScalarType::parse(it)) else {
                        return Err(err(format!("unknown list types `{ct} {it}`")));
                    };
                    if !count.is_integer() {
                        return Err(err(format!("list count type `{ct}` is not an integer")));
                    }
                    el.properties.push(Property { name: (*name).into(), kind: PropertyKind::List { count, item } });
                }
                ["property", ty, name] => {
                    let el = defs.last_mut().ok_or_else(|| err("property before element".into()))?;
                    let ty = ScalarType::parse(ty).ok_or_else(|| err(format!("unknown property type `{ty}`")))?;
                    el.properties.push(Property { name: (*name).into(), kind: PropertyKind::Scalar(ty) });
                }
                _ => return Err(err(format!("malformed header line `{line}`"))),
            }
        }
        let encoding = encoding.ok_or_else(|| err("missing `format` line".into()))?;

        let mut reader: Box<dyn ValueReader> = match encoding {
            Encoding::Ascii => Box::new(AsciiReader {
                tokens: std::str::from_utf8(body)
                    .map_err(|_| err("ASCII body is not UTF-8".into()))?
                    .split_ascii_whitespace(),
            }),
            Encoding::BinaryLittleEndian => Box::new(BinaryReader { bytes: body, pos: 0 }),
        };

        for el in &mut defs {
            let mut columns: Vec<Column> = el
                .properties
                .iter()
                .map(|p| match p.kind {
                    PropertyKind::Scalar(_) => Column::Scalar(Vec::with_capacity(el.count)),
                    PropertyKind::List { .. } => Column::List(Vec::with_capacity(el.count)),
                })
                .collect();
            for row in 0..el.count {
                for (prop, col) in el.properties.iter().zip(columns.iter_mut()) {
                    let ctx = || err(format!("truncated data in element `{}` row {row}", el.name));
                    match (prop.kind, col) {
                        (PropertyKind::Scalar(ty), Column::Scalar(v)) => v.push(reader.next(ty).ok_or_else(ctx)?),
                        (PropertyKind::List { count, item }, Column::List(v)) => {
                            let n = reader.next(count).ok_or_else(ctx)?;
                            if n < 0.0 {
                                return Err(err(format!("negative list length in `{}`", el.name)));
                            }
                            let items = (0..n as usize)
                                .map(|_| reader.next(item).ok_or_else(ctx))
                                .collect::<Result<Vec<_>>>()?;
                            v.push(items);
                        }
                        _ => unreachable!(),
                    }
                }
            }
            el.columns = columns;
        }
        Ok(Self { encoding, comments, elements: defs })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let fmt = match self.encoding {
            Encoding::Ascii => "ascii",
            Encoding::BinaryLittleEndian => "binary_little_endian",
        };
        out.extend_from_slice(format!("ply\nformat {fmt} 1.0\n").as_bytes());
        for c in &self.comments {
            out.extend_from_slice(format!("comment {c}\n").as_bytes());
        }
        for el in &self.elements {
            out.extend_from_slice(format!("element {} {}\n", el.name, el.count).as_bytes());
            for p in &el.properties {
                let line = match p.kind {
                    PropertyKind::Scalar(t) => format!("property {} {}\n", t.name(), p.name),
                    PropertyKind::List { count, item } => {
                        format!("property list {} {} {}\n", count.name(), item.name(), p.name)
                    }
                };
                out.extend_from_slice(line.as_bytes());
            }
        }
        out.extend_from_slice(b"end_header\n");

        for el in &self.elements {
            for row in 0..el.count {
                let mut fields: Vec<String> = Vec::new();
                for (p, col) in el.properties.iter().zip(&el.columns) {
                    match (p.kind, col) {
                        (PropertyKind::Scalar(t), Column::Scalar(v)) => emit(self.encoding, t, v[row], &mut out, &mut fields),
                        (PropertyKind::List { count, item }, Column::List(v)) => {
                            emit(self.encoding, count, v[row].len() as f64, &mut out, &mut fields);
                            for &x in &v[row] {
                                emit(self.encoding, item, x, &mut out, &mut fields);
                            }
                        }
                        _ => unreachable!("column kind mismatch"),
                    }
                }
                if self.encoding == Encoding::Ascii {
                    out.extend_from_slice(fields.join(" ").as_bytes());
                    out.push(b'\n');
                }
            }
        }
        out
    }
}

fn emit(enc: Encoding, ty: ScalarType, v: f64, bin: &mut Vec<u8>, ascii: &mut Vec<String>) {
    match enc {
        Encoding::BinaryLittleEndian => ty.write_le(v, bin),
        Encoding::Ascii if ty.is_integer() => ascii.push(format!("{}", v as i64)),
        Encoding::Ascii if ty == ScalarType::F32 => ascii.push(format!("{}", v as f32)),
        Encoding::Ascii => ascii.push(format!("{v}")),
    }
}

fn split_header(bytes: &[u8]) -> Option<(&str, &[u8])> {
    const END: &[u8] = b"end_header";
    let at = bytes.windows(END.len()).position(|w| w == END)?;
    let mut body = at + END.len();
    if bytes.get(body) == Some(&b'\r') {
        body += 1;
    }
    if bytes.get(body) == Some(&b'\n') {
        body += 1;
    }
    let header = std::str::from_utf8(&bytes[..at]).ok()?;
    Some((header, &bytes[body..]))
}

trait ValueReader {
    fn next(&mut self, ty: ScalarType) -> Option<f64>;
}

struct AsciiReader<'a> {
    tokens: std::str::SplitAsciiWhitespace<'a>,
}

impl ValueReader for AsciiReader<'_> {
    fn next(&mut self, _ty: ScalarType) -> Option<f64> {
        self.tokens.next()?.parse().ok()
    }
}

struct BinaryReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl ValueReader for BinaryReader<'_> {
    fn next(&mut self, ty: ScalarType) -> Option<f64> {
        let end = self.pos + ty.size();
        let slice = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(ty.read_le(slice))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(enc: Encoding) -> Ply {
        let mut ply = Ply::new(enc);
        ply.elements.push(
            Element::new("vertex", 3)
                .with_scalar("x", ScalarType::F64, vec![0.0, 1.5, -2.25])
                .with_scalar("y", ScalarType::F32, vec![0.5, 0.0, 1.0])
                .with_scalar("flag", ScalarType::U8, vec![1.0, 0.0, 255.0]),
        );
        ply.elements.push(Element::new("face", 1).with_list(
            "vertex_indices",
            ScalarType::U8,
            ScalarType::I32,
            vec![vec![0.0, 1.0, 2.0]],
        ));
        ply
    }

    #[test]
    fn binary_and_ascii_round_trip() {
        for enc in [Encoding::Ascii, Encoding::BinaryLittleEndian] {
            let ply = sample(enc);
            let back = Ply::parse(&ply.to_bytes(), Path::new("mem.ply")).unwrap();
            assert_eq!(back, ply);
        }
    }

    #[test]
    fn skips_unknown_elements_with_lists() {
        let text = "ply\nformat ascii 1.0\ncomment made by hand\nelement edge 1\nproperty list uchar int ids\n\
                    element vertex 1\nproperty float x\nend_header\n3 1 2 3\n0.25\n";
        let ply = Ply::parse(text.as_bytes(), Path::new("t.ply")).unwrap();
        assert_eq!(ply.element("vertex").unwrap().scalar("x").unwrap(), &[0.25]);
        assert_eq!(ply.comments, vec!["made by hand".to_string()]);
    }

    #[test]
    fn rejects_malformed_headers() {
        let p = Path::new("bad.ply");
        assert!(Ply::parse(b"plx\nformat ascii 1.0\nend_header\n", p).is_err());
        assert!(Ply::parse(b"ply\nformat ascii 1.0\nelement vertex 1\n", p).is_err());
        assert!(Ply::parse(b"ply\nformat ascii 1.0\nproperty float x\nend_header\n", p).is_err());
        assert!(matches!(
            Ply::parse(b"ply\nformat binary_big_endian 1.0\nend_header\n", p),
            Err(Error::UnsupportedFormat(_))
        ));
        let truncated = b"ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nend_header\n1.0\n";
        assert!(Ply::parse(truncated, p).is_err());
    }
}
