//! The packet layout shared by every device in a system.

use std::collections::HashMap;

use crate::pir::{DeviceProgram, FieldDecl};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderLayout {
    pub name: String,
    pub fields: Vec<FieldDecl>,
    /// Slot of the first field in [`crate::semantics::Packet::fields`].
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Layout {
    pub headers: Vec<HeaderLayout>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("field `{header}.{field}` is bit<{a}> in `{dev_a}` but bit<{b}> in `{dev_b}`")]
pub struct LayoutError {
    pub header: String,
    pub field: String,
    pub a: u32,
    pub dev_a: String,
    pub b: u32,
    pub dev_b: String,
}

impl Layout {
    /// Union of all header fields; headers and fields keep first-seen order.
    pub fn unify<'a>(progs: impl IntoIterator<Item = &'a DeviceProgram>) -> Result<Layout, LayoutError> {
        let mut headers: Vec<(String, Vec<(FieldDecl, String)>)> = Vec::new();
        for p in progs {
            for h in &p.headers {
                let pos = match headers.iter().position(|(n, _)| *n == h.name) {
                    Some(i) => i,
                    None => {
                        headers.push((h.name.clone(), vec![]));
                        headers.len() - 1
                    }
                };
                let fields = &mut headers[pos].1;
                for f in &h.fields {
                    match fields.iter().find(|(g, _)| g.name == f.name) {
                        Some((g, dev)) if g.width != f.width => {
                            return Err(LayoutError {
                                header: h.name.clone(),
                                field: f.name.clone(),
                                a: g.width,
                                dev_a: dev.clone(),
                                b: f.width,
                                dev_b: p.name.clone(),
                            })
                        }
                        Some(_) => {}
                        None => fields.push((f.clone(), p.name.clone())),
                    }
                }
            }
        }
        let mut out = Layout::default();
        let mut offset = 0;
        for (name, fields) in headers {
            let fields: Vec<FieldDecl> = fields.into_iter().map(|(f, _)| f).collect();
            out.index.insert(name.clone(), out.headers.len());
            let n = fields.len();
            out.headers.push(HeaderLayout { name, fields, offset });
            offset += n;
        }
        Ok(out)
    }

    pub fn header_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// (slot, width, header index)
    pub fn field_slot(&self, header: &str, field: &str) -> Option<(usize, u32, usize)> {
        let hi = self.header_index(header)?;
        let h = &self.headers[hi];
        let fi = h.fields.iter().position(|f| f.name == field)?;
        Some((h.offset + fi, h.fields[fi].width, hi))
    }

    pub fn num_fields(&self) -> usize {
        self.headers.iter().map(|h| h.fields.len()).sum()
    }

    /// `header.field` names in slot order.
    pub fn field_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for h in &self.headers {
            for f in &h.fields {
                out.push(format!("{}.{}", h.name, f.name));
            }
        }
        out
    }

    pub fn slot_width(&self, slot: usize) -> u32 {
        for h in &self.headers {
            if slot < h.offset + h.fields.len() {
                return h.fields[slot - h.offset].width;
            }
        }
        64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pir::parse_device_program;

    #[test]
    fn union_of_fields() {
        let a = parse_device_program("device a { header h { seq: bit<8>; } }").unwrap();
        let b = parse_device_program("device b { header h { seq: bit<8>; op: bit<4>; } header g { x: bit<1>; } }").unwrap();
        let l = Layout::unify([&a, &b]).unwrap();
        assert_eq!(l.field_names(), vec!["h.seq", "h.op", "g.x"]);
        assert_eq!(l.field_slot("g", "x"), Some((2, 1, 1)));
        let single = Layout::unify([&b]).unwrap();
        assert_eq!(Layout::unify([&b, &b]).unwrap(), single);
    }

    #[test]
    fn width_conflict() {
        let a = parse_device_program("device a { header h { x: bit<8>; } }").unwrap();
        let b = parse_device_program("device b { header h { x: bit<16>; } }").unwrap();
        let e = Layout::unify([&a, &b]).unwrap_err();
        assert_eq!((e.a, e.b), (8, 16));
    }
}
