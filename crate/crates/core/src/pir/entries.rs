//! Static exact-match table entries.

use std::collections::BTreeMap;

use super::ast::{ActionCall, DeviceProgram};
use super::validate::check_args;
use crate::syntax::lexer::Tok;
use crate::syntax::Cursor;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EntriesError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown table `{table}`")]
    UnknownTable { line: usize, table: String },
    #[error("line {line}: unknown action `{action}` for table `{table}`")]
    UnknownAction { line: usize, table: String, action: String },
    #[error("line {line}: duplicate key {key} for table `{table}` (first given on line {first})")]
    DuplicateKey { line: usize, first: usize, table: String, key: u64 },
    #[error("line {line}: {msg}")]
    Invalid { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: u64,
    pub action: ActionCall,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EntrySet {
    pub tables: BTreeMap<String, Vec<Entry>>,
}

impl EntrySet {
    /// Exact lookup; `None` means the table's default action applies.
    pub fn lookup(&self, table: &str, key: u64) -> Option<&ActionCall> {
        self.tables.get(table)?.iter().find(|e| e.key == key).map(|e| &e.action)
    }

    pub fn resolve<'a>(&'a self, prog: &'a DeviceProgram, table: &str, key: u64) -> &'a ActionCall {
        self.lookup(table, key).unwrap_or_else(|| &prog.table(table).expect("validated table").default)
    }

    pub fn len(&self) -> usize {
        self.tables.values().map(|v| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn load_table_entries(text: &str, prog: &DeviceProgram) -> Result<EntrySet, EntriesError> {
    let mut set = EntrySet::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let syn = |msg: String| EntriesError::Syntax { line, msg };
        let mut c = Cursor::new(raw).map_err(|e| syn(format!("column {}: {}", e.pos.col, e.msg)))?;
        if c.at_eof() {
            continue;
        }
        let wrap = |e: crate::syntax::ParseError| syn(format!("column {}: {}", e.pos.col, e.msg));
        let table = c.ident().map_err(wrap)?;
        c.expect(Tok::Colon).map_err(wrap)?;
        let key = c.int().map_err(wrap)?;
        c.expect(Tok::Arrow).map_err(wrap)?;
        let action = c.ident().map_err(wrap)?;
        c.expect(Tok::LParen).map_err(wrap)?;
        let mut args = Vec::new();
        while !c.eat(&Tok::RParen) {
            args.push(c.int().map_err(wrap)?);
            c.eat(&Tok::Comma);
        }
        if !c.at_eof() {
            return Err(wrap(c.unexpected::<()>("end of line").unwrap_err()));
        }
        let Some(t) = prog.table(&table) else { return Err(EntriesError::UnknownTable { line, table }) };
        let Some(a) = t.action(&action) else { return Err(EntriesError::UnknownAction { line, table, action }) };
        check_args(t, a, &args, "action").map_err(|e| EntriesError::Invalid { line, msg: e.to_string() })?;
        let key_w = prog.var_width(match &t.key {
            crate::syntax::Expr::Var(v) => v,
            _ => unreachable!("validated key"),
        }, &[]);
        if let Some(w) = key_w {
            if w < 64 && key >> w != 0 {
                return Err(EntriesError::Invalid { line, msg: format!("key {key} does not fit the bit<{w}> key of table `{table}`") });
            }
        }
        let list = set.tables.entry(table.clone()).or_default();
        if let Some(prev) = list.iter().find(|e| e.key == key) {
            return Err(EntriesError::DuplicateKey { line, first: prev.line, table, key });
        }
        list.push(Entry { key, action: ActionCall { name: action, args }, line });
    }
    Ok(set)
}
