//! GKG record parsing.
//!
//! Rows are tab-delimited. Themes are `;`-delimited, GCAM is a `,`-delimited
//! list of `key:value` pairs, and locations are `;`-delimited blocks whose
//! sub-fields are `#`-delimited (V1 convention: type, full name, country code,
//! ADM1, lat, long, feature id). Which column holds what is given by a
//! [`GkgSchema`], since GKG versions disagree on layout.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tone values outside this magnitude are treated as parser garbage.
pub const MAX_ABS_TONE: f64 = 25.0;

const DATE_FMT: &str = "%Y%m%d%H%M%S";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed row: expected {expected} columns, found {found} (byte {byte_offset})")]
    MalformedRow {
        expected: usize,
        found: usize,
        byte_offset: usize,
    },
    #[error("malformed field in column {column} at byte {byte_offset}: {reason}")]
    MalformedField {
        column: usize,
        byte_offset: usize,
        reason: String,
    },
}

impl ParseError {
    fn field(column: usize, byte_offset: usize, reason: impl Into<String>) -> Self {
        ParseError::MalformedField {
            column,
            byte_offset,
            reason: reason.into(),
        }
    }

    /// Short machine-friendly reason, used as a key in [`ScanStats`].
    pub fn kind(&self) -> &'static str {
        match self {
            ParseError::MalformedRow { .. } => "malformed_row",
            ParseError::MalformedField { .. } => "malformed_field",
        }
    }
}

/// Column indices of the fields we parse. All other columns are carried verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GkgSchema {
    pub column_count: usize,
    pub record_id: usize,
    pub date: usize,
    pub document_url: usize,
    pub themes: usize,
    pub locations: usize,
    pub tone: usize,
    pub gcam: usize,
}

impl GkgSchema {
    /// Layout of the public GKG 2.1 export (27 columns).
    pub fn gkg_v21() -> Self {
        GkgSchema {
            column_count: 27,
            record_id: 0,
            date: 1,
            document_url: 4,
            themes: 7,
            locations: 9,
            tone: 15,
            gcam: 17,
        }
    }

    fn parsed_columns(&self) -> [usize; 7] {
        [
            self.record_id,
            self.date,
            self.document_url,
            self.themes,
            self.locations,
            self.tone,
            self.gcam,
        ]
    }

    pub fn validate(&self) -> Result<(), String> {
        let cols = self.parsed_columns();
        for (i, c) in cols.iter().enumerate() {
            if *c >= self.column_count {
                return Err(format!("column index {c} out of range for {} columns", self.column_count));
            }
            if cols[..i].contains(c) {
                return Err(format!("column index {c} mapped twice"));
            }
        }
        Ok(())
    }
}

impl Default for GkgSchema {
    fn default() -> Self {
        Self::gkg_v21()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneBlock {
    pub average_tone: f64,
    /// Remaining tone dimensions, carried but unused.
    pub dimensions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcamEntry {
    pub key: String,
    pub value: f64,
}

impl GcamEntry {
    pub fn new(key: impl Into<String>, value: f64) -> Self {
        GcamEntry {
            key: key.into(),
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationRef {
    pub location_type: String,
    pub full_name: String,
    pub country_code: String,
    /// Sub-fields after the country code (ADM1, coordinates, feature id).
    pub trailing: Vec<String>,
}

impl LocationRef {
    pub fn new(full_name: impl Into<String>, country_code: impl Into<String>) -> Self {
        LocationRef {
            location_type: "1".into(),
            full_name: full_name.into(),
            country_code: country_code.into(),
            trailing: Vec::new(),
        }
    }
}

/// One parsed news-article row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GkgRecord {
    pub record_id: String,
    pub timestamp: NaiveDateTime,
    pub document_url: String,
    pub themes: Vec<String>,
    pub locations: Vec<LocationRef>,
    pub tone: ToneBlock,
    pub gcam: Vec<GcamEntry>,
    pub word_count: u64,
    /// Every source column as read; unparsed columns are written back from here.
    #[serde(skip)]
    pub(crate) columns: Vec<String>,
}

impl GkgRecord {
    /// UTC calendar day of publication.
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date()
    }

    pub fn gcam_value(&self, key: &str) -> Option<f64> {
        self.gcam.iter().find(|e| e.key == key).map(|e| e.value)
    }

    pub fn country_codes(&self) -> impl Iterator<Item = &str> {
        self.locations.iter().map(|l| l.country_code.as_str())
    }

    /// Build a record from typed parts. Unparsed columns are left empty.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        schema: &GkgSchema,
        record_id: impl Into<String>,
        timestamp: NaiveDateTime,
        document_url: impl Into<String>,
        themes: Vec<String>,
        locations: Vec<LocationRef>,
        tone: ToneBlock,
        gcam: Vec<GcamEntry>,
    ) -> Self {
        let word_count = gcam
            .iter()
            .find(|e| e.key == "wc")
            .map(|e| e.value.max(0.0) as u64)
            .unwrap_or(0);
        GkgRecord {
            record_id: record_id.into(),
            timestamp,
            document_url: document_url.into(),
            themes,
            locations,
            tone,
            gcam,
            word_count,
            columns: vec![String::new(); schema.column_count],
        }
    }

    /// Write the record back as one tab-delimited row (no trailing newline).
    pub fn serialize(&self, schema: &GkgSchema) -> String {
        let mut cols = self.columns.clone();
        cols.resize(schema.column_count, String::new());
        cols[schema.record_id] = self.record_id.clone();
        cols[schema.date] = self.timestamp.format(DATE_FMT).to_string();
        cols[schema.document_url] = self.document_url.clone();
        cols[schema.themes] = self.themes.join(";");
        cols[schema.locations] = self
            .locations
            .iter()
            .map(serialize_location)
            .collect::<Vec<_>>()
            .join(";");
        cols[schema.tone] = serialize_tone(&self.tone);
        cols[schema.gcam] = serialize_gcam(&self.gcam);
        cols.join("\t")
    }
}

fn serialize_location(loc: &LocationRef) -> String {
    let mut parts = vec![
        loc.location_type.as_str(),
        loc.full_name.as_str(),
        loc.country_code.as_str(),
    ];
    parts.extend(loc.trailing.iter().map(String::as_str));
    parts.join("#")
}

fn serialize_tone(tone: &ToneBlock) -> String {
    std::iter::once(tone.average_tone)
        .chain(tone.dimensions.iter().copied())
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn serialize_gcam(entries: &[GcamEntry]) -> String {
    entries
        .iter()
        .map(|e| format!("{}:{}", e.key, e.value))
        .collect::<Vec<_>>()
        .join(",")
}

/// Parse a GCAM field. Offsets in errors are relative to the field start.
pub fn parse_gcam(field: &str) -> Result<Vec<GcamEntry>, ParseError> {
    parse_gcam_at(field, 0, 0)
}

fn parse_gcam_at(field: &str, column: usize, base: usize) -> Result<Vec<GcamEntry>, ParseError> {
    let mut out = Vec::new();
    if field.is_empty() {
        return Ok(out);
    }
    let mut offset = base;
    for pair in field.split(',') {
        let mut it = pair.split(':');
        let (key, value) = match (it.next(), it.next(), it.next()) {
            (Some(k), Some(v), None) => (k, v),
            _ => {
                return Err(ParseError::field(
                    column,
                    offset,
                    format!("GCAM pair `{}` needs exactly one colon", truncate(pair)),
                ))
            }
        };
        if key.is_empty() {
            return Err(ParseError::field(column, offset, "empty GCAM key"));
        }
        let value: f64 = value
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| {
                ParseError::field(
                    column,
                    offset + key.len() + 1,
                    format!("non-numeric GCAM value `{}`", truncate(value)),
                )
            })?;
        out.push(GcamEntry::new(key, value));
        offset += pair.len() + 1;
    }
    Ok(out)
}

fn truncate(s: &str) -> &str {
    match s.char_indices().nth(40) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

fn parse_timestamp(s: &str, column: usize, base: usize) -> Result<NaiveDateTime, ParseError> {
    let bad = || ParseError::field(column, base, format!("bad date `{}`", truncate(s)));
    if !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    match s.len() {
        14 => NaiveDateTime::parse_from_str(s, DATE_FMT).map_err(|_| bad()),
        8 => NaiveDate::parse_from_str(s, "%Y%m%d")
            .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight"))
            .map_err(|_| bad()),
        _ => Err(bad()),
    }
}

fn split_nonempty(field: &str, sep: char) -> impl Iterator<Item = (usize, &str)> {
    let mut offset = 0;
    field.split(sep).filter_map(move |part| {
        let at = offset;
        offset += part.len() + 1;
        (!part.is_empty()).then_some((at, part))
    })
}

fn parse_locations(field: &str, column: usize, base: usize) -> Result<Vec<LocationRef>, ParseError> {
    let mut out = Vec::new();
    for (at, block) in split_nonempty(field, ';') {
        let parts: Vec<&str> = block.split('#').collect();
        if parts.len() < 3 {
            return Err(ParseError::field(
                column,
                base + at,
                "location block needs at least 3 `#` sub-fields",
            ));
        }
        let code = parts[2];
        if code.len() != 2 || !code.bytes().all(|b| b.is_ascii_uppercase()) {
            return Err(ParseError::field(
                column,
                base + at,
                format!("country code `{}` is not two upper-case letters", truncate(code)),
            ));
        }
        out.push(LocationRef {
            location_type: parts[0].to_string(),
            full_name: parts[1].to_string(),
            country_code: code.to_string(),
            trailing: parts[3..].iter().map(|s| s.to_string()).collect(),
        });
    }
    Ok(out)
}

fn parse_tone(field: &str, column: usize, base: usize) -> Result<ToneBlock, ParseError> {
    let mut values = Vec::with_capacity(7);
    let mut offset = base;
    for part in field.split(',') {
        let v: f64 = part
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| ParseError::field(column, offset, format!("bad tone value `{}`", truncate(part))))?;
        values.push(v);
        offset += part.len() + 1;
    }
    if !(6..=7).contains(&values.len()) {
        return Err(ParseError::field(
            column,
            base,
            format!("tone block has {} values, expected 6 or 7", values.len()),
        ));
    }
    if values[0].abs() > MAX_ABS_TONE {
        return Err(ParseError::field(
            column,
            base,
            format!("average tone {} outside ±{MAX_ABS_TONE}", values[0]),
        ));
    }
    Ok(ToneBlock {
        average_tone: values[0],
        dimensions: values[1..].to_vec(),
    })
}

/// Parse one tab-delimited GKG row (without its line terminator).
pub fn parse_record(line: &str, schema: &GkgSchema) -> Result<GkgRecord, ParseError> {
    let columns: Vec<&str> = line.split('\t').collect();
    if columns.len() != schema.column_count {
        let byte_offset = if columns.len() > schema.column_count {
            columns[..schema.column_count].iter().map(|c| c.len() + 1).sum::<usize>() - 1
        } else {
            line.len()
        };
        return Err(ParseError::MalformedRow {
            expected: schema.column_count,
            found: columns.len(),
            byte_offset,
        });
    }
    let mut starts = Vec::with_capacity(columns.len());
    let mut acc = 0;
    for c in &columns {
        starts.push(acc);
        acc += c.len() + 1;
    }
    let col = |i: usize| (columns[i], i, starts[i]);

    let (id, i, at) = col(schema.record_id);
    if id.is_empty() {
        return Err(ParseError::field(i, at, "empty record id"));
    }
    let (date, i, at) = col(schema.date);
    let timestamp = parse_timestamp(date, i, at)?;

    let (themes_field, _, _) = col(schema.themes);
    let themes = split_nonempty(themes_field, ';').map(|(_, t)| t.to_string()).collect();

    let (loc_field, i, at) = col(schema.locations);
    let locations = parse_locations(loc_field, i, at)?;

    let (tone_field, i, at) = col(schema.tone);
    let tone = parse_tone(tone_field, i, at)?;

    let (gcam_field, i, at) = col(schema.gcam);
    let gcam = parse_gcam_at(gcam_field, i, at)?;

    let word_count = match gcam.iter().find(|e| e.key == "wc") {
        Some(e) if e.value >= 0.0 && e.value.fract() == 0.0 => e.value as u64,
        Some(e) => {
            return Err(ParseError::field(
                i,
                at,
                format!("word count `{}` is not a non-negative integer", e.value),
            ))
        }
        // GKG 2.1 tone blocks carry the word count as their seventh value.
        None => match tone.dimensions.get(5) {
            Some(v) if *v >= 0.0 && v.fract() == 0.0 => *v as u64,
            _ => 0,
        },
    };

    Ok(GkgRecord {
        record_id: id.to_string(),
        timestamp,
        document_url: columns[schema.document_url].to_string(),
        themes,
        locations,
        tone,
        gcam,
        word_count,
        columns: columns.iter().map(|s| s.to_string()).collect(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanStats {
    pub parsed: u64,
    pub skipped: u64,
    /// Skip counts keyed by reason kind.
    pub skip_reasons: std::collections::BTreeMap<String, u64>,
}

impl ScanStats {
    fn skip(&mut self, kind: &str) {
        self.skipped += 1;
        *self.skip_reasons.entry(kind.to_string()).or_default() += 1;
    }

    pub fn merge(&mut self, other: &ScanStats) {
        self.parsed += other.parsed;
        self.skipped += other.skipped;
        for (k, v) in &other.skip_reasons {
            *self.skip_reasons.entry(k.clone()).or_default() += v;
        }
    }
}

/// Open a file, transparently decompressing `.gz`.
pub fn open_maybe_gzip(path: &Path) -> io::Result<Box<dyn BufRead>> {
    let file = File::open(path)?;
    let is_gz = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gz"));
    let reader: Box<dyn Read> = if is_gz {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::with_capacity(1 << 16, reader)))
}

/// Stream a GKG file into `sink`, one record at a time.
///
/// Malformed rows are counted and logged, never fatal. Blank lines are ignored.
pub fn scan_file<F>(path: &Path, schema: &GkgSchema, sink: F) -> io::Result<ScanStats>
where
    F: FnMut(GkgRecord),
{
    let reader = open_maybe_gzip(path)?;
    scan_reader(reader, schema, sink)
}

pub fn scan_reader<R, F>(mut reader: R, schema: &GkgSchema, mut sink: F) -> io::Result<ScanStats>
where
    R: BufRead,
    F: FnMut(GkgRecord),
{
    let mut stats = ScanStats::default();
    let mut buf = Vec::new();
    let mut line_no = 0u64;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        if buf.is_empty() {
            continue;
        }
        let line = match std::str::from_utf8(&buf) {
            Ok(l) => l,
            Err(e) => {
                log::warn!("line {line_no}: invalid UTF-8 at byte {}", e.valid_up_to());
                stats.skip("invalid_utf8");
                continue;
            }
        };
        match parse_record(line, schema) {
            Ok(rec) => {
                stats.parsed += 1;
                sink(rec);
            }
            Err(e) => {
                log::warn!("line {line_no}: {e}");
                stats.skip(e.kind());
            }
        }
    }
    Ok(stats)
}

/// Column order of the normalized record dump.
pub const DUMP_HEADER: [&str; 8] = [
    "record_id",
    "date",
    "document_url",
    "themes",
    "countries",
    "average_tone",
    "word_count",
    "gcam",
];

/// Write records as CSV with a stable column order.
pub fn write_record_dump<'a, W, I>(writer: W, records: I) -> csv::Result<()>
where
    W: io::Write,
    I: IntoIterator<Item = &'a GkgRecord>,
{
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(DUMP_HEADER)?;
    for r in records {
        let countries: Vec<&str> = r.country_codes().collect();
        w.write_record([
            r.record_id.as_str(),
            &r.date().format("%Y-%m-%d").to_string(),
            &r.document_url,
            &r.themes.join(";"),
            &countries.join(";"),
            &r.tone.average_tone.to_string(),
            &r.word_count.to_string(),
            &serialize_gcam(&r.gcam),
        ])?;
    }
    w.flush()?;
    Ok(())
}
