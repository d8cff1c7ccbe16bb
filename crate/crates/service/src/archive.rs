use std::io::{Cursor, Write};

use ras_core::export::CsvDocument;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipWriter};

/// Packs CSV documents into an uncompressed zip. Entries carry a fixed
/// timestamp so the archive bytes depend only on the documents.
pub fn zip_documents(docs: &[CsvDocument]) -> zip::result::ZipResult<Vec<u8>> {
    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Stored)
        .last_modified_time(DateTime::default())
        .unix_permissions(0o644);
    let mut w = ZipWriter::new(Cursor::new(Vec::new()));
    for doc in docs {
        w.start_file(doc.name.as_str(), options)?;
        w.write_all(doc.contents.as_bytes())?;
    }
    Ok(w.finish()?.into_inner())
}
