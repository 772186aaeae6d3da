//! On-disk layout: `index.bin` (little-endian binary) plus `stats.json`.
//!
//! ```text
//! magic "ODIX" | version u32
//! num_docs u32 | { doc_id str | text str } * num_docs
//! num_terms u32 | { term str | n u32 | { doc u32 | tf u32 } * n } * num_terms
//! str := len u32 | utf-8 bytes
//! ```
//! Only the inverted side is stored; the direct index is its transpose.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{transpose, Index, Posting};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"ODIX";
const VERSION: u32 = 1;
pub const INDEX_FILE: &str = "index.bin";
pub const STATS_FILE: &str = "stats.json";

fn write_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    w.write_u32::<LittleEndian>(s.len() as u32)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn read_str<R: Read>(r: &mut R) -> Result<String> {
    let len = r.read_u32::<LittleEndian>()? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::CorruptIndex(e.to_string()))
}

impl Index {
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join(INDEX_FILE))?);
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u32::<LittleEndian>(self.doc_ids.len() as u32)?;
        for (id, text) in self.doc_ids.iter().zip(&self.texts) {
            write_str(&mut w, id)?;
            write_str(&mut w, text)?;
        }
        w.write_u32::<LittleEndian>(self.vocab.len() as u32)?;
        for (term, plist) in self.vocab.iter().zip(&self.inverted) {
            write_str(&mut w, term)?;
            w.write_u32::<LittleEndian>(plist.len() as u32)?;
            for p in plist {
                w.write_u32::<LittleEndian>(p.id)?;
                w.write_u32::<LittleEndian>(p.tf)?;
            }
        }
        w.flush()?;
        let stats = serde_json::to_string_pretty(&self.stats)?;
        fs::write(dir.join(STATS_FILE), stats + "\n")?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let mut r = BufReader::new(File::open(dir.as_ref().join(INDEX_FILE))?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::CorruptIndex("bad magic".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(Error::CorruptIndex(format!("unsupported version {version}")));
        }
        let num_docs = r.read_u32::<LittleEndian>()? as usize;
        let mut doc_ids = Vec::with_capacity(num_docs);
        let mut texts = Vec::with_capacity(num_docs);
        for _ in 0..num_docs {
            doc_ids.push(read_str(&mut r)?);
            texts.push(read_str(&mut r)?);
        }
        let num_terms = r.read_u32::<LittleEndian>()? as usize;
        let mut vocab = Vec::with_capacity(num_terms);
        let mut inverted = Vec::with_capacity(num_terms);
        for _ in 0..num_terms {
            vocab.push(read_str(&mut r)?);
            let n = r.read_u32::<LittleEndian>()? as usize;
            let mut plist = Vec::with_capacity(n);
            for _ in 0..n {
                let id = r.read_u32::<LittleEndian>()?;
                let tf = r.read_u32::<LittleEndian>()?;
                if id as usize >= num_docs {
                    return Err(Error::CorruptIndex(format!("posting doc {id} out of range")));
                }
                plist.push(Posting { id, tf });
            }
            inverted.push(plist);
        }
        let direct = transpose(&inverted, num_docs);
        Ok(Self::assemble(vocab, doc_ids, texts, direct))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Document, SparseQuery};

    #[test]
    fn save_load_preserves_retrieval() {
        let docs = vec![
            Document::new("b", "alpha beta beta"),
            Document::new("a", "gamma alpha"),
            Document::new("c", ""),
        ];
        let idx = Index::build(docs).unwrap();
        let dir = tempfile::tempdir().unwrap();
        idx.save(dir.path()).unwrap();
        let loaded = Index::load(dir.path()).unwrap();
        assert_eq!(loaded.direct, idx.direct);
        assert_eq!(loaded.inverted, idx.inverted);
        assert_eq!(loaded.stats, idx.stats);
        assert_eq!(loaded.document("a"), idx.document("a"));
        let q = SparseQuery::from_text("alpha beta").unwrap();
        assert_eq!(
            loaded.bm25_retrieve("q", &q, 10).unwrap(),
            idx.bm25_retrieve("q", &q, 10).unwrap()
        );
        let stats: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(STATS_FILE)).unwrap()).unwrap();
        assert_eq!(stats["num_docs"], 3);
    }

    #[test]
    fn garbage_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(INDEX_FILE), b"nope").unwrap();
        assert!(matches!(Index::load(dir.path()), Err(Error::CorruptIndex(_))));
    }
}
