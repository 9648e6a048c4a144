use std::collections::BTreeMap;

use super::layout::Layout;
use crate::pir::CloneSpec;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Packet {
    /// Validity per layout header.
    pub valid: Vec<bool>,
    /// Field values in layout slot order.
    pub fields: Vec<u64>,
    /// Metadata of the device currently holding the packet.
    pub meta: Vec<u64>,
    pub clone_spec: CloneSpec,
    pub drop: bool,
    pub recirc: bool,
    pub i2i: bool,
    pub egress_port: u64,
    pub recirc_count: u32,
}

impl Packet {
    pub fn new(layout: &Layout, meta_len: usize) -> Packet {
        Packet {
            valid: vec![false; layout.headers.len()],
            fields: vec![0; layout.num_fields()],
            meta: vec![0; meta_len],
            clone_spec: CloneSpec::None,
            drop: false,
            recirc: false,
            i2i: false,
            egress_port: 0,
            recirc_count: 0,
        }
    }

    /// The clone primitive: an exact copy.
    pub fn duplicate(&self) -> Packet {
        self.clone()
    }

    /// Zero the fields of every header that is not valid, as after serialization.
    pub fn wire_image(&mut self, layout: &Layout) {
        for (hi, h) in layout.headers.iter().enumerate() {
            if !self.valid[hi] {
                for v in &mut self.fields[h.offset..h.offset + h.fields.len()] {
                    *v = 0;
                }
            }
        }
    }

    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        out.extend((self.valid.len() as u32).to_le_bytes());
        out.extend(self.valid.iter().map(|&b| b as u8));
        out.extend((self.fields.len() as u32).to_le_bytes());
        for v in &self.fields {
            out.extend(v.to_le_bytes());
        }
        out.extend((self.meta.len() as u32).to_le_bytes());
        for v in &self.meta {
            out.extend(v.to_le_bytes());
        }
        out.push(self.clone_spec as u8);
        out.push(self.drop as u8 | (self.recirc as u8) << 1 | (self.i2i as u8) << 2);
        out.extend(self.egress_port.to_le_bytes());
        out.extend(self.recirc_count.to_le_bytes());
    }

    /// Named view of the valid headers' fields, for traces.
    pub fn summary(&self, layout: &Layout) -> BTreeMap<String, u64> {
        let mut out = BTreeMap::new();
        for (hi, h) in layout.headers.iter().enumerate() {
            if !self.valid[hi] {
                continue;
            }
            for (fi, f) in h.fields.iter().enumerate() {
                out.insert(format!("{}.{}", h.name, f.name), self.fields[h.offset + fi]);
            }
        }
        out
    }
}
