//! Converts event streams plus ESM responses into labeled 15-minute windows.
//!
//! Each answered ESM yields one window covering the 15 minutes before the
//! answer. Foreground-app events inside the window become an application
//! sequence: adjacent repeats are grouped into runs with usage durations,
//! then stopword apps (launchers, settings, system updates) are removed.
//! Runs are deliberately not re-merged across removed stopwords, since the
//! gap is real time spent in another app.

use std::collections::HashSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{Device, DeviceEvent, EpochMs, EsmResponse, EventKind, Interruptibility, Role};

/// Look-back horizon of a labeled window.
pub const WINDOW_MS: i64 = 15 * 60_000;

#[derive(Debug, Error)]
pub enum SessionizeError {
    #[error("app events must be sorted by timestamp (index {0})")]
    UnsortedInput(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which device's events a window draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceScope {
    Phone,
    Desktop,
    Combined,
}

impl DeviceScope {
    pub const ALL: [DeviceScope; 3] = [
        DeviceScope::Phone,
        DeviceScope::Desktop,
        DeviceScope::Combined,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DeviceScope::Phone => "phone",
            DeviceScope::Desktop => "desktop",
            DeviceScope::Combined => "combined",
        }
    }

    pub fn includes(self, device: Device) -> bool {
        match self {
            DeviceScope::Phone => device == Device::Phone,
            DeviceScope::Desktop => device == Device::Desktop,
            DeviceScope::Combined => true,
        }
    }
}

/// A grouped run of one application with its usage duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppRun {
    pub app: String,
    pub duration_s: f64,
}

/// Apps filtered out of sequences because they carry no signal (launchers,
/// settings, system updates).
#[derive(Debug, Clone)]
pub struct StopwordList {
    apps: HashSet<String>,
}

/// Default stopword apps shipped with the artifact.
pub const DEFAULT_STOPWORD_APPS: &[&str] = &[
    "com.android.launcher",
    "com.android.launcher3",
    "com.google.android.apps.nexuslauncher",
    "com.sec.android.app.launcher",
    "com.android.settings",
    "com.android.systemui",
    "com.google.android.packageinstaller",
    "com.android.vending",
    "explorer.exe",
    "searchhost.exe",
    "lockapp.exe",
    "loginwindow",
    "softwareupdated",
    "systempreferences",
];

impl Default for StopwordList {
    fn default() -> Self {
        StopwordList {
            apps: DEFAULT_STOPWORD_APPS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl StopwordList {
    pub fn empty() -> Self {
        StopwordList {
            apps: HashSet::new(),
        }
    }

    pub fn from_apps<I: IntoIterator<Item = S>, S: Into<String>>(apps: I) -> Self {
        StopwordList {
            apps: apps.into_iter().map(Into::into).collect(),
        }
    }

    /// Reads a plain-text list, one app identifier per line, `#` comments.
    pub fn from_reader(reader: impl BufRead) -> std::io::Result<Self> {
        let mut apps = HashSet::new();
        for line in reader.lines() {
            let line = line?;
            let entry = line.split('#').next().unwrap_or("").trim();
            if !entry.is_empty() {
                apps.insert(entry.to_string());
            }
        }
        Ok(StopwordList { apps })
    }

    pub fn contains(&self, app: &str) -> bool {
        self.apps.contains(app)
    }

    pub fn len(&self) -> usize {
        self.apps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.apps.is_empty()
    }
}

/// The 15-minute pre-ESM slice of events with its label pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindow {
    pub participant: String,
    pub device_scope: DeviceScope,
    pub start_ts: EpochMs,
    /// Equal to the ESM answer timestamp.
    pub end_ts: EpochMs,
    /// Local offset at the window end, taken from the latest event at or
    /// before `end_ts` (0 if the participant has no earlier events).
    pub local_offset: i32,
    /// Grouped, stopword-filtered application runs, in time order.
    pub sequence: Vec<AppRun>,
    /// All in-scope events with `start_ts <= ts <= end_ts`.
    pub events: Vec<DeviceEvent>,
    pub role: Role,
    pub interruptibility: Interruptibility,
}

impl LabeledWindow {
    /// Sequence apps only, in order (the tokens fed to vectorizers).
    pub fn sequence_apps(&self) -> Vec<&str> {
        self.sequence.iter().map(|r| r.app.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SessionizeWarning {
    /// Two windows of the same participant/scope overlap in time, which a
    /// schedule honoring the minimum prompt gap cannot produce.
    OverlappingWindows {
        first_end: EpochMs,
        second_start: EpochMs,
    },
}

/// Groups adjacent identical apps into runs and assigns usage durations.
/// A run lasts until the next run starts; the last run ends at `window_end`.
pub fn group_consecutive(
    app_events: &[(&str, EpochMs)],
    window_end: EpochMs,
) -> Result<Vec<AppRun>, SessionizeError> {
    if let Some(idx) = app_events.windows(2).position(|w| w[0].1 > w[1].1) {
        return Err(SessionizeError::UnsortedInput(idx + 1));
    }
    let mut runs: Vec<(String, EpochMs)> = Vec::new();
    for (app, ts) in app_events {
        match runs.last() {
            Some((last_app, _)) if last_app == app => {}
            _ => runs.push((app.to_string(), *ts)),
        }
    }
    let mut out = Vec::with_capacity(runs.len());
    for i in 0..runs.len() {
        let end = if i + 1 < runs.len() {
            runs[i + 1].1
        } else {
            window_end
        };
        out.push(AppRun {
            app: runs[i].0.clone(),
            duration_s: (end - runs[i].1).max(0) as f64 / 1000.0,
        });
    }
    Ok(out)
}

/// Drops runs whose app is a stopword. Remaining runs keep their order and
/// durations; runs separated by a removed stopword are not re-merged.
pub fn remove_stopwords(runs: Vec<AppRun>, stopwords: &StopwordList) -> Vec<AppRun> {
    runs.into_iter()
        .filter(|run| !stopwords.contains(&run.app))
        .collect()
}

/// Builds one labeled window per answered ESM response.
///
/// `events` and `responses` must belong to the same participant and be sorted
/// by timestamp. Windows with zero in-scope events are kept with an empty
/// sequence. Overlapping windows (possible only in logs that violate the
/// prompt schedule) are kept and flagged.
pub fn extract_labeled_windows(
    events: &[DeviceEvent],
    responses: &[EsmResponse],
    stopwords: &StopwordList,
    scope: DeviceScope,
) -> (Vec<LabeledWindow>, Vec<SessionizeWarning>) {
    let mut windows = Vec::with_capacity(responses.len());
    let mut warnings = Vec::new();

    for response in responses {
        let end_ts = response.timestamp;
        let start_ts = end_ts - WINDOW_MS;

        let lo = events.partition_point(|e| e.timestamp < start_ts);
        let hi = events.partition_point(|e| e.timestamp <= end_ts);
        let local_offset = if hi > 0 { events[hi - 1].local_offset } else { 0 };

        let in_window: Vec<DeviceEvent> = events[lo..hi]
            .iter()
            .filter(|e| scope.includes(e.device))
            .cloned()
            .collect();

        let app_events: Vec<(&str, EpochMs)> = in_window
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::AppForeground { app } => Some((app.as_str(), e.timestamp)),
                _ => None,
            })
            .collect();
        let runs = group_consecutive(&app_events, end_ts)
            .expect("window events are slice-ordered by construction");
        let sequence = remove_stopwords(runs, stopwords);

        if let Some(prev) = windows.last() {
            let prev: &LabeledWindow = prev;
            if start_ts < prev.end_ts {
                warnings.push(SessionizeWarning::OverlappingWindows {
                    first_end: prev.end_ts,
                    second_start: start_ts,
                });
            }
        }

        windows.push(LabeledWindow {
            participant: response.participant.clone(),
            device_scope: scope,
            start_ts,
            end_ts,
            local_offset,
            sequence,
            events: in_window,
            role: response.role,
            interruptibility: response.interruptibility,
        });
    }

    (windows, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Device;
    use proptest::prelude::*;

    fn app_event(ts: EpochMs, device: Device, app: &str) -> DeviceEvent {
        DeviceEvent {
            timestamp: ts,
            local_offset: 0,
            device,
            participant: "p".into(),
            kind: EventKind::AppForeground { app: app.into() },
        }
    }

    fn esm(ts: EpochMs, role: Role, intr: Interruptibility) -> EsmResponse {
        EsmResponse {
            timestamp: ts,
            device: Device::Phone,
            participant: "p".into(),
            role,
            interruptibility: intr,
        }
    }

    #[test]
    fn group_empty_is_empty() {
        assert_eq!(group_consecutive(&[], 100).unwrap(), vec![]);
    }

    #[test]
    fn group_merges_adjacent_repeats() {
        let events = [("A", 0), ("A", 5_000), ("B", 10_000)];
        let runs = group_consecutive(&events, 20_000).unwrap();
        assert_eq!(
            runs,
            vec![
                AppRun { app: "A".into(), duration_s: 10.0 },
                AppRun { app: "B".into(), duration_s: 10.0 },
            ]
        );
    }

    #[test]
    fn group_keeps_nonadjacent_repeats_separate() {
        let events = [("A", 0), ("B", 4_000), ("A", 8_000)];
        let runs = group_consecutive(&events, 12_000).unwrap();
        assert_eq!(
            runs,
            vec![
                AppRun { app: "A".into(), duration_s: 4.0 },
                AppRun { app: "B".into(), duration_s: 4.0 },
                AppRun { app: "A".into(), duration_s: 4.0 },
            ]
        );
    }

    #[test]
    fn group_rejects_unsorted() {
        let events = [("A", 5_000), ("B", 1_000)];
        assert!(matches!(
            group_consecutive(&events, 10_000),
            Err(SessionizeError::UnsortedInput(1))
        ));
    }

    #[test]
    fn stopwords_filter_everything_when_all_match() {
        let stop = StopwordList::from_apps(["x", "y"]);
        let runs = vec![
            AppRun { app: "x".into(), duration_s: 1.0 },
            AppRun { app: "y".into(), duration_s: 2.0 },
        ];
        assert_eq!(remove_stopwords(runs, &stop), vec![]);
    }

    #[test]
    fn stopwords_drop_launcher_keep_rest() {
        let stop = StopwordList::from_apps(["launcher"]);
        let runs = vec![
            AppRun { app: "launcher".into(), duration_s: 2.0 },
            AppRun { app: "A".into(), duration_s: 5.0 },
        ];
        assert_eq!(
            remove_stopwords(runs, &stop),
            vec![AppRun { app: "A".into(), duration_s: 5.0 }]
        );
    }

    #[test]
    fn stopword_removal_does_not_remerge() {
        let stop = StopwordList::from_apps(["launcher"]);
        let runs = vec![
            AppRun { app: "A".into(), duration_s: 3.0 },
            AppRun { app: "launcher".into(), duration_s: 1.0 },
            AppRun { app: "A".into(), duration_s: 4.0 },
        ];
        assert_eq!(
            remove_stopwords(runs, &stop),
            vec![
                AppRun { app: "A".into(), duration_s: 3.0 },
                AppRun { app: "A".into(), duration_s: 4.0 },
            ]
        );
    }

    #[test]
    fn stopword_file_parses_comments() {
        let text = "# launchers\ncom.android.launcher\n\nexplorer.exe # windows shell\n";
        let list = StopwordList::from_reader(text.as_bytes()).unwrap();
        assert_eq!(list.len(), 2);
        assert!(list.contains("com.android.launcher"));
        assert!(list.contains("explorer.exe"));
    }

    #[test]
    fn no_responses_no_windows() {
        let events = vec![app_event(1000, Device::Phone, "a")];
        let (windows, _) =
            extract_labeled_windows(&events, &[], &StopwordList::empty(), DeviceScope::Combined);
        assert!(windows.is_empty());
    }

    #[test]
    fn events_before_window_yield_empty_sequence() {
        let t = 30 * 60_000;
        let events = vec![app_event(t - 20 * 60_000, Device::Phone, "a")];
        let (windows, _) = extract_labeled_windows(
            &events,
            &[esm(t, Role::Private, Interruptibility::PrivateOnly)],
            &StopwordList::empty(),
            DeviceScope::Combined,
        );
        assert_eq!(windows.len(), 1);
        assert!(windows[0].sequence.is_empty());
        assert!(windows[0].events.is_empty());
        assert_eq!(windows[0].role, Role::Private);
        assert_eq!(windows[0].interruptibility, Interruptibility::PrivateOnly);
    }

    #[test]
    fn combined_scope_interleaves_devices() {
        let t = 60 * 60_000;
        let events = vec![
            app_event(t - 10 * 60_000, Device::Phone, "phone.app"),
            app_event(t - 5 * 60_000, Device::Desktop, "desktop.exe"),
        ];
        let (windows, _) = extract_labeled_windows(
            &events,
            &[esm(t, Role::Both, Interruptibility::Both)],
            &StopwordList::empty(),
            DeviceScope::Combined,
        );
        let apps = windows[0].sequence_apps();
        assert_eq!(apps, vec!["phone.app", "desktop.exe"]);
    }

    #[test]
    fn scope_filters_devices() {
        let t = 60 * 60_000;
        let events = vec![
            app_event(t - 10 * 60_000, Device::Phone, "phone.app"),
            app_event(t - 5 * 60_000, Device::Desktop, "desktop.exe"),
        ];
        let (phone_windows, _) = extract_labeled_windows(
            &events,
            &[esm(t, Role::Both, Interruptibility::Both)],
            &StopwordList::empty(),
            DeviceScope::Phone,
        );
        assert_eq!(phone_windows[0].sequence_apps(), vec!["phone.app"]);
        let (desk_windows, _) = extract_labeled_windows(
            &events,
            &[esm(t, Role::Both, Interruptibility::Both)],
            &StopwordList::empty(),
            DeviceScope::Desktop,
        );
        assert_eq!(desk_windows[0].sequence_apps(), vec!["desktop.exe"]);
    }

    #[test]
    fn overlapping_windows_are_flagged() {
        let t = 60 * 60_000;
        let responses = vec![
            esm(t, Role::Private, Interruptibility::PrivateOnly),
            esm(t + 5 * 60_000, Role::Private, Interruptibility::PrivateOnly),
        ];
        let (windows, warnings) = extract_labeled_windows(
            &[],
            &responses,
            &StopwordList::empty(),
            DeviceScope::Combined,
        );
        assert_eq!(windows.len(), 2);
        assert_eq!(warnings.len(), 1);
    }

    proptest! {
        #[test]
        fn window_count_matches_answered_esm_count(
            n_events in 0usize..60,
            n_esm in 0usize..10,
            seed in 0u64..1000,
        ) {
            let mut state = seed;
            let mut next = move || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                state
            };
            let mut events: Vec<_> = (0..n_events)
                .map(|_| {
                    let ts = (next() % 3_600_000) as i64 + 1;
                    let dev = if next() % 2 == 0 { Device::Phone } else { Device::Desktop };
                    app_event(ts, dev, if next() % 3 == 0 { "a" } else { "b" })
                })
                .collect();
            events.sort_by_key(|e| e.timestamp);
            let mut responses: Vec<_> = (0..n_esm)
                .map(|_| {
                    let ts = (next() % 3_600_000) as i64 + 1;
                    esm(ts, Role::Private, Interruptibility::Both)
                })
                .collect();
            responses.sort_by_key(|r| r.timestamp);

            for scope in DeviceScope::ALL {
                let (windows, _) = extract_labeled_windows(&events, &responses, &StopwordList::empty(), scope);
                prop_assert_eq!(windows.len(), responses.len());
                for w in &windows {
                    prop_assert!(w.events.iter().all(|e| w.start_ts <= e.timestamp && e.timestamp <= w.end_ts));
                    prop_assert!(w.events.iter().all(|e| scope.includes(e.device)));
                    prop_assert!(w.sequence.windows(2).all(|p| p[0].app != p[1].app));
                    let total: f64 = w.sequence.iter().map(|r| r.duration_s).sum();
                    prop_assert!(total <= WINDOW_MS as f64 / 1000.0 + 1e-9);
                }
            }
        }

        #[test]
        fn stopword_removal_is_idempotent(apps in proptest::collection::vec("[a-d]", 0..20)) {
            let stop = StopwordList::from_apps(["a", "b"]);
            let runs: Vec<AppRun> = apps
                .iter()
                .map(|a| AppRun { app: a.clone(), duration_s: 1.0 })
                .collect();
            let once = remove_stopwords(runs.clone(), &stop);
            let twice = remove_stopwords(once.clone(), &stop);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn grouping_preserves_order_and_total_time(
            raw in proptest::collection::vec(("[ab]", 0i64..1000), 0..30),
        ) {
            let mut raw = raw;
            raw.sort_by_key(|(_, ts)| *ts);
            let pairs: Vec<(&str, EpochMs)> = raw.iter().map(|(a, t)| (a.as_str(), *t)).collect();
            let window_end = 1000;
            let runs = group_consecutive(&pairs, window_end).unwrap();

            // No adjacent duplicates.
            prop_assert!(runs.windows(2).all(|w| w[0].app != w[1].app));
            // Total covered time = window_end - first event time.
            if let Some((_, first_ts)) = pairs.first() {
                let total: f64 = runs.iter().map(|r| r.duration_s).sum();
                prop_assert!((total - (window_end - first_ts) as f64 / 1000.0).abs() < 1e-9);
            }
            // First-occurrence order of runs matches the deduped input order.
            let mut expected_first: Vec<&str> = Vec::new();
            for (app, _) in &pairs {
                if expected_first.last() != Some(app) {
                    expected_first.push(app);
                }
            }
            let got: Vec<&str> = runs.iter().map(|r| r.app.as_str()).collect();
            prop_assert_eq!(got, expected_first);
        }
    }
}
