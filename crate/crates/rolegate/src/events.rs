//! Canonical multi-device event and label data model plus log parsing/merging.
//!
//! Logs are UTF-8 line-delimited JSON records, one object per line. Event
//! records carry `ts` (epoch ms), `off` (local offset, minutes), `dev`
//! (`"phone"`/`"desktop"`), `pid`, a `kind` tag and a `payload` object. ESM
//! records use the same framing with `ts`, `dev`, `pid`, `role`, `intr`.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Milliseconds since the Unix epoch, UTC.
pub type EpochMs = i64;

/// Largest supported UTC offset, in minutes (UTC+14 / UTC-14).
pub const MAX_OFFSET_MIN: i32 = 840;

#[derive(Debug, Error)]
pub enum EventError {
    #[error("{} of {total} lines malformed, above the {:.1}% limit", malformed.len(), limit * 100.0)]
    TooManyMalformed {
        malformed: Vec<MalformedRecord>,
        total: usize,
        limit: f64,
    },
    #[error("participant mismatch: {left:?} vs {right:?}")]
    ParticipantMismatch { left: String, right: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A line that failed to parse or validate, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Device {
    Phone,
    Desktop,
}

impl Device {
    pub fn label(self) -> &'static str {
        match self {
            Device::Phone => "phone",
            Device::Desktop => "desktop",
        }
    }
}

/// Self-reported relationship of a notification's contact. Multiple
/// selections are possible, hence events carry a set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relationship {
    Family,
    Friend,
    Work,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RingerSetting {
    Silent,
    Vibrate,
    Normal,
}

impl RingerSetting {
    pub fn label(self) -> &'static str {
        match self {
            RingerSetting::Silent => "silent",
            RingerSetting::Vibrate => "vibrate",
            RingerSetting::Normal => "normal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Still,
    Walking,
    Running,
    InVehicle,
    OnBicycle,
    Tilting,
    Unknown,
}

/// Sensor/interaction payloads. Keyboard and mouse events occur only on
/// desktops; location, physical activity and ringer mode only on phones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    AppForeground {
        app: String,
    },
    Notification {
        app: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        contact_hash: Option<String>,
        #[serde(default)]
        relationships: BTreeSet<Relationship>,
        content_length: u32,
    },
    ScreenState {
        on: bool,
    },
    RingerMode {
        mode: RingerSetting,
    },
    LocationFix {
        lat: f64,
        lon: f64,
    },
    PhysicalActivity {
        activity: Activity,
    },
    KeyPress {
        char_keys: u32,
        control_keys: u32,
    },
    MouseClick {
        left: u32,
        right: u32,
    },
    AppGenre {
        app: String,
        genre: String,
    },
}

const KNOWN_KINDS: &[&str] = &[
    "app_foreground",
    "notification",
    "screen_state",
    "ringer_mode",
    "location_fix",
    "physical_activity",
    "key_press",
    "mouse_click",
    "app_genre",
];

/// One timestamped sensor/interaction record from a phone or desktop stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceEvent {
    #[serde(rename = "ts")]
    pub timestamp: EpochMs,
    /// Local UTC offset in minutes at the time of the event.
    #[serde(rename = "off")]
    pub local_offset: i32,
    #[serde(rename = "dev")]
    pub device: Device,
    #[serde(rename = "pid")]
    pub participant: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl DeviceEvent {
    /// Checks the field invariants, returning the first problem found.
    pub fn validate(&self) -> Result<(), String> {
        if self.timestamp <= 0 {
            return Err(format!("timestamp must be positive, got {}", self.timestamp));
        }
        if self.local_offset.abs() > MAX_OFFSET_MIN {
            return Err(format!(
                "local_offset {} outside [-{MAX_OFFSET_MIN}, {MAX_OFFSET_MIN}]",
                self.local_offset
            ));
        }
        match (&self.kind, self.device) {
            (EventKind::KeyPress { .. } | EventKind::MouseClick { .. }, Device::Phone) => {
                return Err("keyboard/mouse events are desktop-only".into());
            }
            (
                EventKind::LocationFix { .. }
                | EventKind::PhysicalActivity { .. }
                | EventKind::RingerMode { .. },
                Device::Desktop,
            ) => {
                return Err("location/activity/ringer events are phone-only".into());
            }
            _ => {}
        }
        if let EventKind::LocationFix { lat, lon } = self.kind {
            if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
                return Err(format!("location ({lat}, {lon}) out of range"));
            }
        }
        Ok(())
    }
}

/// The social role a participant reports being engaged in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Private,
    Work,
    Both,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Private, Role::Work, Role::Both];

    pub fn label(self) -> &'static str {
        match self {
            Role::Private => "private",
            Role::Work => "work",
            Role::Both => "both",
        }
    }
}

/// Which life domains may interrupt right now.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Interruptibility {
    #[serde(rename = "private")]
    PrivateOnly,
    #[serde(rename = "work")]
    WorkOnly,
    #[serde(rename = "both")]
    Both,
    #[serde(rename = "none")]
    None,
}

impl Interruptibility {
    pub const ALL: [Interruptibility; 4] = [
        Interruptibility::PrivateOnly,
        Interruptibility::WorkOnly,
        Interruptibility::Both,
        Interruptibility::None,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Interruptibility::PrivateOnly => "private",
            Interruptibility::WorkOnly => "work",
            Interruptibility::Both => "both",
            Interruptibility::None => "none",
        }
    }
}

/// An answered ESM questionnaire: the ground-truth role and interruptibility
/// preference for the preceding 15 minutes, anchored at the answer time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsmResponse {
    #[serde(rename = "ts")]
    pub timestamp: EpochMs,
    #[serde(rename = "dev")]
    pub device: Device,
    #[serde(rename = "pid")]
    pub participant: String,
    pub role: Role,
    #[serde(rename = "intr")]
    pub interruptibility: Interruptibility,
}

/// Parser knobs. `max_malformed_ratio` is the fraction of malformed lines
/// above which parsing fails instead of skipping.
#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub max_malformed_ratio: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            max_malformed_ratio: 0.10,
        }
    }
}

/// Result of a lenient parse: sorted records plus skipped-line diagnostics.
#[derive(Debug, Clone)]
pub struct ParseOutcome<T> {
    pub records: Vec<T>,
    pub malformed: Vec<MalformedRecord>,
    /// 1-based line numbers whose `kind` tag was unknown (skipped, not counted
    /// as malformed, for forward compatibility of logs).
    pub unknown_kinds: Vec<usize>,
}

fn parse_lines<T, F>(
    reader: impl BufRead,
    opts: &ParseOptions,
    mut parse_one: F,
) -> Result<ParseOutcome<T>, EventError>
where
    F: FnMut(&str) -> Result<Option<T>, String>,
{
    let mut records = Vec::new();
    let mut malformed = Vec::new();
    let mut unknown_kinds = Vec::new();
    let mut total = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        match parse_one(&line) {
            Ok(Some(record)) => records.push(record),
            Ok(None) => unknown_kinds.push(idx + 1),
            Err(reason) => malformed.push(MalformedRecord {
                line: idx + 1,
                reason,
            }),
        }
    }
    if total > 0 && malformed.len() as f64 > opts.max_malformed_ratio * total as f64 {
        return Err(EventError::TooManyMalformed {
            malformed,
            total,
            limit: opts.max_malformed_ratio,
        });
    }
    Ok(ParseOutcome {
        records,
        malformed,
        unknown_kinds,
    })
}

/// Parses an event log. Records come back sorted by timestamp, stable in
/// input order for ties. Malformed lines are collected with line numbers;
/// the call fails only when more than `max_malformed_ratio` of lines are bad.
pub fn parse_event_log(
    reader: impl BufRead,
    opts: &ParseOptions,
) -> Result<ParseOutcome<DeviceEvent>, EventError> {
    let mut outcome = parse_lines(reader, opts, |line| {
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| format!("invalid json: {e}"))?;
        match value.get("kind").and_then(|k| k.as_str()) {
            Some(kind) if !KNOWN_KINDS.contains(&kind) => return Ok(None),
            _ => {}
        }
        let event: DeviceEvent =
            serde_json::from_value(value).map_err(|e| format!("invalid record: {e}"))?;
        event.validate()?;
        Ok(Some(event))
    })?;
    outcome.records.sort_by_key(|e| e.timestamp);
    Ok(outcome)
}

/// Parses an ESM response log, sorted by timestamp.
pub fn parse_esm_log(
    reader: impl BufRead,
    opts: &ParseOptions,
) -> Result<ParseOutcome<EsmResponse>, EventError> {
    let mut outcome = parse_lines(reader, opts, |line| {
        let response: EsmResponse =
            serde_json::from_str(line).map_err(|e| format!("invalid record: {e}"))?;
        if response.timestamp <= 0 {
            return Err(format!(
                "timestamp must be positive, got {}",
                response.timestamp
            ));
        }
        Ok(Some(response))
    })?;
    outcome.records.sort_by_key(|r| r.timestamp);
    Ok(outcome)
}

pub fn serialize_event_log(events: &[DeviceEvent], mut writer: impl Write) -> std::io::Result<()> {
    for event in events {
        serde_json::to_writer(&mut writer, event)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn serialize_esm_log(responses: &[EsmResponse], mut writer: impl Write) -> std::io::Result<()> {
    for response in responses {
        serde_json::to_writer(&mut writer, response)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Merges a phone log and a desktop log of the same participant into one
/// timestamp-ordered stream. Ties put phone events before desktop events.
pub fn merge_streams(
    phone_log: &[DeviceEvent],
    desktop_log: &[DeviceEvent],
) -> Result<Vec<DeviceEvent>, EventError> {
    let pid_of = |log: &[DeviceEvent]| log.first().map(|e| e.participant.clone());
    if let (Some(left), Some(right)) = (pid_of(phone_log), pid_of(desktop_log)) {
        if left != right {
            return Err(EventError::ParticipantMismatch { left, right });
        }
    }
    for log in [phone_log, desktop_log] {
        if let Some(first) = log.first() {
            if let Some(other) = log.iter().find(|e| e.participant != first.participant) {
                return Err(EventError::ParticipantMismatch {
                    left: first.participant.clone(),
                    right: other.participant.clone(),
                });
            }
        }
    }

    let mut merged = Vec::with_capacity(phone_log.len() + desktop_log.len());
    let (mut i, mut j) = (0, 0);
    while i < phone_log.len() && j < desktop_log.len() {
        if phone_log[i].timestamp <= desktop_log[j].timestamp {
            merged.push(phone_log[i].clone());
            i += 1;
        } else {
            merged.push(desktop_log[j].clone());
            j += 1;
        }
    }
    merged.extend_from_slice(&phone_log[i..]);
    merged.extend_from_slice(&desktop_log[j..]);
    Ok(merged)
}
