//! Dense per-window features: interaction counters, location pluscodes,
//! ringer/screen/notification statistics and temporal context, plus the
//! fitted encoder that one-hot-expands categoricals and optionally
//! standardizes continuous columns with training-fold statistics.

use std::collections::{BTreeSet, HashMap};

use chrono::{Datelike, FixedOffset, TimeZone, Timelike, Weekday};

use super::pluscode::encode_pluscode;
use super::sparse::{NamedMatrix, SparseMatrix};
use crate::events::{Device, DeviceEvent, EpochMs, EventKind};
use crate::sessionize::{group_consecutive, LabeledWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartOfDay {
    Morning,
    Noon,
    Afternoon,
    Evening,
    Night,
}

impl PartOfDay {
    /// Hour ranges (local): morning [05,11), noon [11,14), afternoon [14,17),
    /// evening [17,22), night [22,05).
    pub fn from_hour(hour: u32) -> PartOfDay {
        match hour {
            5..=10 => PartOfDay::Morning,
            11..=13 => PartOfDay::Noon,
            14..=16 => PartOfDay::Afternoon,
            17..=21 => PartOfDay::Evening,
            _ => PartOfDay::Night,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PartOfDay::Morning => "morning",
            PartOfDay::Noon => "noon",
            PartOfDay::Afternoon => "afternoon",
            PartOfDay::Evening => "evening",
            PartOfDay::Night => "night",
        }
    }
}

/// Per-window dense feature values for one device slice (or all in-scope
/// events for single-device scopes).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseFeatures {
    pub unique_app_count: f64,
    /// Total grouped foreground-app time in the window, seconds.
    pub interaction_time_s: f64,
    pub char_keys: f64,
    pub control_keys: f64,
    pub left_clicks: f64,
    pub right_clicks: f64,
    pub unique_activity_count: f64,
    pub ringer_change_count: f64,
    pub screen_on_count: f64,
    pub screen_off_count: f64,
    pub notif_count: f64,
    pub notif_unique_apps: f64,
    pub notif_family: f64,
    pub notif_friend: f64,
    pub notif_work: f64,
    pub comm_genre_app_count: f64,
    pub genre_count: f64,
    pub pluscode8_last: Option<String>,
    pub pluscode8_mode: Option<String>,
    pub pluscode10_last: Option<String>,
    pub pluscode10_mode: Option<String>,
    pub last_ringer_mode: Option<String>,
    pub day_of_week: f64,
    pub part_of_day: PartOfDay,
    pub weekend: bool,
    /// Whether any event contributed to this slice (drives presence flags).
    pub has_events: bool,
}

pub const SENSOR_NUMERIC_NAMES: [&str; 17] = [
    "unique_app_count",
    "interaction_time_s",
    "char_keys",
    "control_keys",
    "left_clicks",
    "right_clicks",
    "unique_activity_count",
    "ringer_change_count",
    "screen_on_count",
    "screen_off_count",
    "notif_count",
    "notif_unique_apps",
    "notif_family",
    "notif_friend",
    "notif_work",
    "comm_genre_app_count",
    "genre_count",
];

pub const SENSOR_CAT_NAMES: [&str; 5] = [
    "pluscode8_last",
    "pluscode8_mode",
    "pluscode10_last",
    "pluscode10_mode",
    "last_ringer_mode",
];

impl DenseFeatures {
    pub fn sensor_numerics(&self) -> [f64; 17] {
        [
            self.unique_app_count,
            self.interaction_time_s,
            self.char_keys,
            self.control_keys,
            self.left_clicks,
            self.right_clicks,
            self.unique_activity_count,
            self.ringer_change_count,
            self.screen_on_count,
            self.screen_off_count,
            self.notif_count,
            self.notif_unique_apps,
            self.notif_family,
            self.notif_friend,
            self.notif_work,
            self.comm_genre_app_count,
            self.genre_count,
        ]
    }

    pub fn sensor_categoricals(&self) -> [Option<&str>; 5] {
        [
            self.pluscode8_last.as_deref(),
            self.pluscode8_mode.as_deref(),
            self.pluscode10_last.as_deref(),
            self.pluscode10_mode.as_deref(),
            self.last_ringer_mode.as_deref(),
        ]
    }
}

fn local_datetime(ts: EpochMs, offset_min: i32) -> chrono::DateTime<FixedOffset> {
    let offset = FixedOffset::east_opt(offset_min * 60)
        .unwrap_or_else(|| FixedOffset::east_opt(0).expect("zero offset"));
    offset
        .timestamp_millis_opt(ts)
        .single()
        .expect("validated epoch milliseconds")
}

fn features_over<'a>(
    events: impl Iterator<Item = &'a DeviceEvent>,
    end_ts: EpochMs,
    local_offset: i32,
) -> DenseFeatures {
    let mut apps: BTreeSet<&str> = BTreeSet::new();
    let mut app_events: Vec<(&str, EpochMs)> = Vec::new();
    let mut char_keys = 0u64;
    let mut control_keys = 0u64;
    let mut left_clicks = 0u64;
    let mut right_clicks = 0u64;
    let mut activities: BTreeSet<u8> = BTreeSet::new();
    let mut ringer_changes = 0u64;
    let mut last_ringer: Option<&'static str> = None;
    let mut screen_on = 0u64;
    let mut screen_off = 0u64;
    let mut notif_count = 0u64;
    let mut notif_apps: BTreeSet<&str> = BTreeSet::new();
    let mut notif_family = 0u64;
    let mut notif_friend = 0u64;
    let mut notif_work = 0u64;
    let mut genres: BTreeSet<&str> = BTreeSet::new();
    let mut comm_apps: BTreeSet<&str> = BTreeSet::new();
    let mut fixes: Vec<(f64, f64)> = Vec::new();
    let mut has_events = false;

    for event in events {
        has_events = true;
        match &event.kind {
            EventKind::AppForeground { app } => {
                apps.insert(app);
                app_events.push((app.as_str(), event.timestamp));
            }
            EventKind::Notification {
                app,
                relationships,
                ..
            } => {
                notif_count += 1;
                notif_apps.insert(app);
                for rel in relationships {
                    use crate::events::Relationship;
                    match rel {
                        Relationship::Family => notif_family += 1,
                        Relationship::Friend => notif_friend += 1,
                        Relationship::Work => notif_work += 1,
                        Relationship::None => {}
                    }
                }
            }
            EventKind::ScreenState { on } => {
                if *on {
                    screen_on += 1;
                } else {
                    screen_off += 1;
                }
            }
            EventKind::RingerMode { mode } => {
                ringer_changes += 1;
                last_ringer = Some(mode.label());
            }
            EventKind::LocationFix { lat, lon } => fixes.push((*lat, *lon)),
            EventKind::PhysicalActivity { activity } => {
                activities.insert(*activity as u8);
            }
            EventKind::KeyPress {
                char_keys: ck,
                control_keys: ctl,
            } => {
                char_keys += *ck as u64;
                control_keys += *ctl as u64;
            }
            EventKind::MouseClick { left, right } => {
                left_clicks += *left as u64;
                right_clicks += *right as u64;
            }
            EventKind::AppGenre { app, genre } => {
                genres.insert(genre);
                if genre == "communication" {
                    comm_apps.insert(app);
                }
            }
        }
    }

    let interaction_time_s: f64 = group_consecutive(&app_events, end_ts)
        .map(|runs| runs.iter().map(|r| r.duration_s).sum())
        .unwrap_or(0.0);

    // Most frequent code, ties resolved by earliest occurrence. Invalid
    // coordinates cannot appear in validated events; skip defensively.
    let encode_all = |length: u8| -> Vec<String> {
        fixes
            .iter()
            .filter_map(|&(lat, lon)| encode_pluscode(lat, lon, length).ok())
            .collect()
    };
    let mode_of = |codes: &[String]| -> Option<String> {
        let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
        for (i, code) in codes.iter().enumerate() {
            let entry = counts.entry(code).or_insert((0, i));
            entry.0 += 1;
        }
        counts
            .into_iter()
            .max_by(|a, b| (a.1 .0, std::cmp::Reverse(a.1 .1)).cmp(&(b.1 .0, std::cmp::Reverse(b.1 .1))))
            .map(|(code, _)| code.to_string())
    };
    let codes8 = encode_all(8);
    let codes10 = encode_all(10);

    let dt = local_datetime(end_ts, local_offset);
    let weekday = dt.weekday();

    DenseFeatures {
        unique_app_count: apps.len() as f64,
        interaction_time_s,
        char_keys: char_keys as f64,
        control_keys: control_keys as f64,
        left_clicks: left_clicks as f64,
        right_clicks: right_clicks as f64,
        unique_activity_count: activities.len() as f64,
        ringer_change_count: ringer_changes as f64,
        screen_on_count: screen_on as f64,
        screen_off_count: screen_off as f64,
        notif_count: notif_count as f64,
        notif_unique_apps: notif_apps.len() as f64,
        notif_family: notif_family as f64,
        notif_friend: notif_friend as f64,
        notif_work: notif_work as f64,
        comm_genre_app_count: comm_apps.len() as f64,
        genre_count: genres.len() as f64,
        pluscode8_last: codes8.last().cloned(),
        pluscode8_mode: mode_of(&codes8),
        pluscode10_last: codes10.last().cloned(),
        pluscode10_mode: mode_of(&codes10),
        last_ringer_mode: last_ringer.map(str::to_string),
        day_of_week: weekday.num_days_from_monday() as f64,
        part_of_day: PartOfDay::from_hour(dt.hour()),
        weekend: matches!(weekday, Weekday::Sat | Weekday::Sun),
        has_events,
    }
}

/// Dense features over all in-scope events of a window.
pub fn dense_features(window: &LabeledWindow) -> DenseFeatures {
    features_over(window.events.iter(), window.end_ts, window.local_offset)
}

/// Dense features over one device's slice of a window.
pub fn dense_features_for_device(window: &LabeledWindow, device: Device) -> DenseFeatures {
    features_over(
        window.events.iter().filter(|e| e.device == device),
        window.end_ts,
        window.local_offset,
    )
}

/// One assembled dense row: raw numeric values plus categorical values.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseRow {
    pub numerics: Vec<f64>,
    pub cats: Vec<Option<String>>,
}

/// Names of a dense row layout (before one-hot expansion).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSchema {
    pub numeric_names: Vec<String>,
    pub cat_names: Vec<String>,
}

/// Layout for a single-device (or whole-scope) dense row: sensor numerics,
/// a presence flag and day-of-week, plus sensor and temporal categoricals.
pub fn single_schema() -> DenseSchema {
    let mut numeric_names: Vec<String> =
        SENSOR_NUMERIC_NAMES.iter().map(|s| s.to_string()).collect();
    numeric_names.push("present".into());
    numeric_names.push("day_of_week".into());
    let mut cat_names: Vec<String> = SENSOR_CAT_NAMES.iter().map(|s| s.to_string()).collect();
    cat_names.push("part_of_day".into());
    cat_names.push("weekend".into());
    DenseSchema {
        numeric_names,
        cat_names,
    }
}

pub fn single_row(features: &DenseFeatures) -> DenseRow {
    let mut numerics = features.sensor_numerics().to_vec();
    numerics.push(if features.has_events { 1.0 } else { 0.0 });
    numerics.push(features.day_of_week);
    let mut cats: Vec<Option<String>> = features
        .sensor_categoricals()
        .iter()
        .map(|c| c.map(str::to_string))
        .collect();
    cats.push(Some(features.part_of_day.label().to_string()));
    cats.push(Some(if features.weekend { "yes" } else { "no" }.to_string()));
    DenseRow { numerics, cats }
}

/// Layout for combined-device rows: device-prefixed sensor blocks, two
/// presence flags, then the shared temporal features.
pub fn combined_schema() -> DenseSchema {
    let mut numeric_names = Vec::new();
    let mut cat_names = Vec::new();
    for device in ["phone", "desktop"] {
        numeric_names.extend(
            SENSOR_NUMERIC_NAMES
                .iter()
                .map(|n| format!("{device}_{n}")),
        );
        cat_names.extend(SENSOR_CAT_NAMES.iter().map(|n| format!("{device}_{n}")));
    }
    numeric_names.push("phone_present".into());
    numeric_names.push("desktop_present".into());
    numeric_names.push("day_of_week".into());
    cat_names.push("part_of_day".into());
    cat_names.push("weekend".into());
    DenseSchema {
        numeric_names,
        cat_names,
    }
}

/// Concatenates a window's phone and desktop dense features into one row:
/// both sensor blocks, presence flags, and the shared temporal features.
/// A device with no events contributes zeros and a presence flag of 0.
pub fn combine_device_features(phone: &DenseFeatures, desktop: &DenseFeatures) -> DenseRow {
    let mut numerics = Vec::with_capacity(17 * 2 + 3);
    numerics.extend(phone.sensor_numerics());
    numerics.extend(desktop.sensor_numerics());
    numerics.push(if phone.has_events { 1.0 } else { 0.0 });
    numerics.push(if desktop.has_events { 1.0 } else { 0.0 });
    numerics.push(phone.day_of_week);
    let mut cats: Vec<Option<String>> = Vec::with_capacity(5 * 2 + 2);
    cats.extend(
        phone
            .sensor_categoricals()
            .iter()
            .map(|c| c.map(str::to_string)),
    );
    cats.extend(
        desktop
            .sensor_categoricals()
            .iter()
            .map(|c| c.map(str::to_string)),
    );
    cats.push(Some(phone.part_of_day.label().to_string()));
    cats.push(Some(if phone.weekend { "yes" } else { "no" }.to_string()));
    DenseRow { numerics, cats }
}

/// Encoder fitted on training rows: categorical category sets (first
/// occurrence order) and per-numeric mean/standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseEncoder {
    schema: DenseSchema,
    categories: Vec<Vec<String>>,
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl DenseEncoder {
    pub fn fit(schema: DenseSchema, rows: &[DenseRow]) -> DenseEncoder {
        let n = rows.len().max(1) as f64;
        let n_num = schema.numeric_names.len();
        let mut means = vec![0.0; n_num];
        for row in rows {
            for (i, v) in row.numerics.iter().enumerate() {
                means[i] += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut stds = vec![0.0; n_num];
        for row in rows {
            for (i, v) in row.numerics.iter().enumerate() {
                stds[i] += (v - means[i]) * (v - means[i]);
            }
        }
        for s in &mut stds {
            *s = (*s / n).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        let mut categories: Vec<Vec<String>> = vec![Vec::new(); schema.cat_names.len()];
        for row in rows {
            for (i, value) in row.cats.iter().enumerate() {
                if let Some(value) = value {
                    if !categories[i].contains(value) {
                        categories[i].push(value.clone());
                    }
                }
            }
        }
        DenseEncoder {
            schema,
            categories,
            means,
            stds,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.schema.numeric_names.len() + self.categories.iter().map(Vec::len).sum::<usize>()
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = self.schema.numeric_names.clone();
        for (i, cats) in self.categories.iter().enumerate() {
            for cat in cats {
                names.push(format!("{}={cat}", self.schema.cat_names[i]));
            }
        }
        names
    }

    /// Encodes rows: numeric columns (raw or z-scored with training-fold
    /// statistics) followed by one-hot blocks. Unseen or absent categorical
    /// values produce all-zero blocks.
    pub fn transform(&self, rows: &[DenseRow], standardize: bool) -> NamedMatrix {
        let mut matrix = SparseMatrix::new(self.n_cols());
        for row in rows {
            let mut entries: Vec<(u32, f64)> = Vec::new();
            for (i, &v) in row.numerics.iter().enumerate() {
                let value = if standardize {
                    (v - self.means[i]) / self.stds[i]
                } else {
                    v
                };
                if value != 0.0 {
                    entries.push((i as u32, value));
                }
            }
            let mut offset = self.schema.numeric_names.len();
            for (i, value) in row.cats.iter().enumerate() {
                if let Some(value) = value {
                    if let Some(pos) = self.categories[i].iter().position(|c| c == value) {
                        entries.push(((offset + pos) as u32, 1.0));
                    }
                }
                offset += self.categories[i].len();
            }
            matrix.push_row(entries);
        }
        NamedMatrix::new(matrix, self.column_names())
    }
}
