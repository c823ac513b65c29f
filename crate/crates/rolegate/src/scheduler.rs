//! ESM prompt scheduling: a simulator that issues prompts over an event
//! stream and a checker that audits prompt logs against the scheduling rules.
//!
//! Prompts follow a fixed interval counted from the last issued prompt, plus
//! an event-based trigger after sustained phone interaction. Prompts are only
//! issued inside the daily issue window (outside quiet hours), at least
//! `min_gap` apart, and expire a fixed number of minutes after being issued.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{Device, DeviceEvent, EpochMs, EventKind, MalformedRecord, ParseOptions};

const MIN_MS: i64 = 60_000;
const DAY_MS: i64 = 86_400_000;

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("invalid scheduler config: {0}")]
    InvalidConfig(String),
    #[error("events must be sorted by timestamp (index {0})")]
    UnsortedInput(usize),
    #[error("{} of {total} prompt lines malformed", malformed.len())]
    TooManyMalformed {
        malformed: Vec<MalformedRecord>,
        total: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Scheduling rules. Times of day are minutes since local midnight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulerConfig {
    pub fixed_interval_min: u32,
    pub interaction_trigger_min: u32,
    pub expiry_min: u32,
    pub quiet_start_min: u32,
    pub quiet_end_min: u32,
    pub min_gap_min: u32,
    pub interaction_gap_tolerance_s: u32,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            fixed_interval_min: 90,
            interaction_trigger_min: 10,
            expiry_min: 10,
            quiet_start_min: 22 * 60,
            quiet_end_min: 7 * 60,
            min_gap_min: 30,
            interaction_gap_tolerance_s: 60,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<(), SchedulerError> {
        if self.fixed_interval_min == 0
            || self.interaction_trigger_min == 0
            || self.expiry_min == 0
            || self.min_gap_min == 0
            || self.interaction_gap_tolerance_s == 0
        {
            return Err(SchedulerError::InvalidConfig(
                "all durations must be positive".into(),
            ));
        }
        if self.min_gap_min > self.fixed_interval_min {
            return Err(SchedulerError::InvalidConfig(format!(
                "min_gap ({}) must not exceed fixed_interval ({})",
                self.min_gap_min, self.fixed_interval_min
            )));
        }
        if self.quiet_start_min >= 1440 || self.quiet_end_min >= 1440 {
            return Err(SchedulerError::InvalidConfig(
                "quiet hours must be within a day".into(),
            ));
        }
        Ok(())
    }

    /// True when the local time of day falls in quiet hours. An empty quiet
    /// range (start == end) disables quiet hours entirely.
    pub fn in_quiet(&self, tod_min: u32) -> bool {
        let (qs, qe) = (self.quiet_start_min, self.quiet_end_min);
        if qs == qe {
            false
        } else if qs < qe {
            (qs..qe).contains(&tod_min)
        } else {
            tod_min >= qs || tod_min < qe
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptTrigger {
    Fixed,
    Interaction,
}

/// One issued ESM prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledPrompt {
    pub issue_ts: EpochMs,
    /// Local UTC offset in minutes; quiet hours are local-time rules.
    pub local_offset: i32,
    pub trigger: PromptTrigger,
    pub expiry_ts: EpochMs,
    pub answered: bool,
    pub answer_ts: Option<EpochMs>,
}

/// Inclusive time range over which prompts may be issued.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeRange {
    pub start: EpochMs,
    pub end: EpochMs,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Consecutive prompts issued closer than the minimum gap.
    MinGap {
        first_issue: EpochMs,
        second_issue: EpochMs,
    },
    /// Prompt issued during quiet hours.
    IssueWindow { issue_ts: EpochMs, tod_min: u32 },
    /// Answer outside [issue_ts, expiry_ts].
    Expiry {
        issue_ts: EpochMs,
        answer_ts: EpochMs,
        expiry_ts: EpochMs,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::MinGap {
                first_issue,
                second_issue,
            } => write!(
                f,
                "min-gap violation: prompts at {first_issue} and {second_issue} are {:.1} min apart",
                (*second_issue - *first_issue) as f64 / MIN_MS as f64
            ),
            Violation::IssueWindow { issue_ts, tod_min } => write!(
                f,
                "issue-window violation: prompt at {issue_ts} issued at {:02}:{:02} local",
                tod_min / 60,
                tod_min % 60
            ),
            Violation::Expiry {
                issue_ts,
                answer_ts,
                expiry_ts,
            } => write!(
                f,
                "expiry violation: prompt at {issue_ts} answered at {answer_ts}, expired {expiry_ts}"
            ),
        }
    }
}

fn local_tod_min(ts: EpochMs, offset_min: i32) -> u32 {
    let local = ts + offset_min as i64 * MIN_MS;
    (local.rem_euclid(DAY_MS) / MIN_MS) as u32
}

/// Moves a would-be issue time out of quiet hours to the next quiet end.
fn defer_out_of_quiet(ts: EpochMs, offset_min: i32, config: &SchedulerConfig) -> EpochMs {
    let tod = local_tod_min(ts, offset_min);
    if !config.in_quiet(tod) {
        return ts;
    }
    let local = ts + offset_min as i64 * MIN_MS;
    let day_start = local - local.rem_euclid(DAY_MS);
    let qe = config.quiet_end_min as i64 * MIN_MS;
    let target_local = if tod < config.quiet_end_min {
        day_start + qe
    } else {
        day_start + DAY_MS + qe
    };
    target_local - offset_min as i64 * MIN_MS
}

fn is_phone_interaction(event: &DeviceEvent) -> bool {
    event.device == Device::Phone && matches!(event.kind, EventKind::AppForeground { .. })
}

/// Simulates the prompt schedule over a sorted event stream.
///
/// Fixed prompts fire `fixed_interval` after the last issued prompt (the
/// horizon start acts as the initial anchor), deferred to the end of quiet
/// hours when due inside them. Interaction prompts fire when a continuous
/// phone-interaction session (inter-event gaps at most the tolerance)
/// exceeds the trigger duration, subject to the issue window and min gap;
/// every issued prompt restarts both the fixed clock and the session.
pub fn simulate_schedule(
    events: &[DeviceEvent],
    config: &SchedulerConfig,
    horizon: TimeRange,
    local_offset_min: i32,
) -> Result<Vec<ScheduledPrompt>, SchedulerError> {
    config.validate()?;
    if let Some(idx) = events
        .windows(2)
        .position(|w| w[0].timestamp > w[1].timestamp)
    {
        return Err(SchedulerError::UnsortedInput(idx + 1));
    }

    let interval_ms = config.fixed_interval_min as i64 * MIN_MS;
    let trigger_ms = config.interaction_trigger_min as i64 * MIN_MS;
    let min_gap_ms = config.min_gap_min as i64 * MIN_MS;
    let gap_tol_ms = config.interaction_gap_tolerance_s as i64 * 1000;
    let expiry_ms = config.expiry_min as i64 * MIN_MS;

    let interaction_ts: Vec<EpochMs> = events
        .iter()
        .filter(|e| is_phone_interaction(e))
        .map(|e| e.timestamp)
        .collect();

    let mut prompts = Vec::new();
    let issue = |ts: EpochMs, trigger: PromptTrigger, prompts: &mut Vec<ScheduledPrompt>| {
        prompts.push(ScheduledPrompt {
            issue_ts: ts,
            local_offset: local_offset_min,
            trigger,
            expiry_ts: ts + expiry_ms,
            answered: false,
            answer_ts: None,
        });
    };

    let mut last_issue = horizon.start;
    let mut fixed_due = defer_out_of_quiet(horizon.start + interval_ms, local_offset_min, config);
    let mut session_start: Option<EpochMs> = None;
    let mut prev_interaction: Option<EpochMs> = None;
    let mut idx = 0usize;

    loop {
        let next_event = interaction_ts.get(idx).copied();
        if fixed_due <= horizon.end && next_event.is_none_or(|e| fixed_due <= e) {
            issue(fixed_due, PromptTrigger::Fixed, &mut prompts);
            last_issue = fixed_due;
            fixed_due = defer_out_of_quiet(last_issue + interval_ms, local_offset_min, config);
            continue;
        }
        let Some(event_ts) = next_event else { break };
        idx += 1;

        match prev_interaction {
            Some(prev) if event_ts - prev <= gap_tol_ms => {}
            _ => session_start = Some(event_ts),
        }
        prev_interaction = Some(event_ts);

        let start = session_start.expect("session started above");
        if event_ts - start > trigger_ms
            && event_ts - last_issue >= min_gap_ms
            && event_ts >= horizon.start
            && event_ts <= horizon.end
            && !config.in_quiet(local_tod_min(event_ts, local_offset_min))
        {
            issue(event_ts, PromptTrigger::Interaction, &mut prompts);
            last_issue = event_ts;
            fixed_due = defer_out_of_quiet(last_issue + interval_ms, local_offset_min, config);
            session_start = Some(event_ts);
        }
    }

    Ok(prompts)
}

/// Audits a prompt list (sorted by issue time) against the scheduling rules:
/// minimum gap between issues, issue inside the daily window, and answers
/// within the expiry. Total function; returns every violation found.
pub fn check_constraints(prompts: &[ScheduledPrompt], config: &SchedulerConfig) -> Vec<Violation> {
    let min_gap_ms = config.min_gap_min as i64 * MIN_MS;
    let mut violations = Vec::new();
    for pair in prompts.windows(2) {
        if pair[1].issue_ts - pair[0].issue_ts < min_gap_ms {
            violations.push(Violation::MinGap {
                first_issue: pair[0].issue_ts,
                second_issue: pair[1].issue_ts,
            });
        }
    }
    for prompt in prompts {
        let tod = local_tod_min(prompt.issue_ts, prompt.local_offset);
        if config.in_quiet(tod) {
            violations.push(Violation::IssueWindow {
                issue_ts: prompt.issue_ts,
                tod_min: tod,
            });
        }
        if prompt.answered {
            let answer_ts = prompt.answer_ts.unwrap_or(prompt.issue_ts);
            if answer_ts < prompt.issue_ts || answer_ts > prompt.expiry_ts {
                violations.push(Violation::Expiry {
                    issue_ts: prompt.issue_ts,
                    answer_ts,
                    expiry_ts: prompt.expiry_ts,
                });
            }
        }
    }
    violations
}

/// A prompt attributed to a participant, as stored in prompt logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantPrompt {
    pub participant: String,
    pub device: Device,
    pub prompt: ScheduledPrompt,
}

#[derive(Serialize, Deserialize)]
struct PromptRecord {
    ts: EpochMs,
    off: i32,
    dev: Device,
    pid: String,
    kind: PromptTag,
    payload: PromptPayload,
}

#[derive(Serialize, Deserialize)]
enum PromptTag {
    #[serde(rename = "prompt")]
    Prompt,
}

#[derive(Serialize, Deserialize)]
struct PromptPayload {
    trigger: PromptTrigger,
    expiry_ts: EpochMs,
    answered: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    answer_ts: Option<EpochMs>,
}

/// Writes prompts in the shared line-delimited record format (tag "prompt").
pub fn serialize_prompt_log(
    prompts: &[ParticipantPrompt],
    mut writer: impl Write,
) -> std::io::Result<()> {
    for entry in prompts {
        let record = PromptRecord {
            ts: entry.prompt.issue_ts,
            off: entry.prompt.local_offset,
            dev: entry.device,
            pid: entry.participant.clone(),
            kind: PromptTag::Prompt,
            payload: PromptPayload {
                trigger: entry.prompt.trigger,
                expiry_ts: entry.prompt.expiry_ts,
                answered: entry.prompt.answered,
                answer_ts: entry.prompt.answer_ts,
            },
        };
        serde_json::to_writer(&mut writer, &record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses a prompt log, sorted by issue time.
pub fn parse_prompt_log(
    reader: impl BufRead,
    opts: &ParseOptions,
) -> Result<Vec<ParticipantPrompt>, SchedulerError> {
    let mut records = Vec::new();
    let mut malformed = Vec::new();
    let mut total = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        match serde_json::from_str::<PromptRecord>(&line) {
            Ok(record) => records.push(ParticipantPrompt {
                participant: record.pid,
                device: record.dev,
                prompt: ScheduledPrompt {
                    issue_ts: record.ts,
                    local_offset: record.off,
                    trigger: record.payload.trigger,
                    expiry_ts: record.payload.expiry_ts,
                    answered: record.payload.answered,
                    answer_ts: record.payload.answer_ts,
                },
            }),
            Err(e) => malformed.push(MalformedRecord {
                line: idx + 1,
                reason: e.to_string(),
            }),
        }
    }
    if total > 0 && malformed.len() as f64 > opts.max_malformed_ratio * total as f64 {
        return Err(SchedulerError::TooManyMalformed { malformed, total });
    }
    records.sort_by_key(|p| p.prompt.issue_ts);
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Device;

    /// A timestamp whose local time of day (offset 0) is `hh:mm` (UTC day 0).
    fn at(day: i64, hh: i64, mm: i64) -> EpochMs {
        day * DAY_MS + hh * 3_600_000 + mm * MIN_MS
    }

    fn phone_app(ts: EpochMs) -> DeviceEvent {
        DeviceEvent {
            timestamp: ts,
            local_offset: 0,
            device: Device::Phone,
            participant: "p".into(),
            kind: EventKind::AppForeground { app: "a".into() },
        }
    }

    #[test]
    fn fixed_prompts_every_interval_from_anchor() {
        let horizon = TimeRange {
            start: at(0, 7, 0),
            end: at(0, 10, 0),
        };
        let prompts = simulate_schedule(&[], &SchedulerConfig::default(), horizon, 0).unwrap();
        let issues: Vec<_> = prompts.iter().map(|p| p.issue_ts).collect();
        assert_eq!(issues, vec![at(0, 8, 30), at(0, 10, 0)]);
        assert!(prompts.iter().all(|p| p.trigger == PromptTrigger::Fixed));
    }

    #[test]
    fn nine_minute_session_does_not_trigger() {
        let events: Vec<_> = (0..=18)
            .map(|i| phone_app(at(0, 9, 0) + i * 30_000))
            .collect();
        let horizon = TimeRange {
            start: at(0, 8, 55),
            end: at(0, 9, 30),
        };
        let prompts = simulate_schedule(&events, &SchedulerConfig::default(), horizon, 0).unwrap();
        assert!(prompts.is_empty());
    }

    #[test]
    fn eleven_minute_session_triggers_once() {
        let events: Vec<_> = (0..=22)
            .map(|i| phone_app(at(0, 9, 0) + i * 30_000))
            .collect();
        let horizon = TimeRange {
            start: at(0, 8, 0),
            end: at(0, 9, 30),
        };
        let prompts = simulate_schedule(&events, &SchedulerConfig::default(), horizon, 0).unwrap();
        assert_eq!(prompts.len(), 1);
        assert_eq!(prompts[0].trigger, PromptTrigger::Interaction);
        assert_eq!(prompts[0].issue_ts, at(0, 9, 0) + 10 * MIN_MS + 30_000);
    }

    #[test]
    fn session_with_large_gap_resets() {
        // 8 minutes of use, a 5-minute break, 8 more minutes: never continuous
        // beyond the trigger.
        let mut events: Vec<_> = (0..=16)
            .map(|i| phone_app(at(0, 9, 0) + i * 30_000))
            .collect();
        events.extend((0..=16).map(|i| phone_app(at(0, 9, 13) + i * 30_000)));
        let horizon = TimeRange {
            start: at(0, 8, 0),
            end: at(0, 10, 0),
        };
        let prompts = simulate_schedule(&events, &SchedulerConfig::default(), horizon, 0).unwrap();
        assert!(prompts.iter().all(|p| p.trigger == PromptTrigger::Fixed));
    }

    #[test]
    fn fixed_prompt_in_quiet_hours_is_deferred() {
        let horizon = TimeRange {
            start: at(0, 21, 0),
            end: at(1, 9, 0),
        };
        let prompts = simulate_schedule(&[], &SchedulerConfig::default(), horizon, 0).unwrap();
        // Due 22:30 falls in quiet hours; deferred to 07:00 next day, then 08:30.
        let issues: Vec<_> = prompts.iter().map(|p| p.issue_ts).collect();
        assert_eq!(issues, vec![at(1, 7, 0), at(1, 8, 30)]);
    }

    #[test]
    fn deferral_respects_local_offset() {
        let offset = 120; // UTC+2
        let horizon = TimeRange {
            start: at(0, 19, 0), // 21:00 local
            end: at(1, 7, 0),    // 09:00 local next day
        };
        let prompts = simulate_schedule(&[], &SchedulerConfig::default(), horizon, offset).unwrap();
        let issues: Vec<_> = prompts.iter().map(|p| p.issue_ts).collect();
        // 22:30 local is quiet; next issue at 07:00 local = 05:00 UTC.
        assert_eq!(issues, vec![at(1, 5, 0), at(1, 6, 30)]);
    }

    #[test]
    fn quiet_free_day_has_floor_d_over_interval_prompts() {
        let config = SchedulerConfig {
            quiet_start_min: 0,
            quiet_end_min: 0,
            ..SchedulerConfig::default()
        };
        let horizon = TimeRange {
            start: at(0, 0, 0) + 1,
            end: at(0, 9, 0) + 1, // 9 hours
        };
        let prompts = simulate_schedule(&[], &config, horizon, 0).unwrap();
        assert_eq!(prompts.len(), (9 * 60) / 90);
    }

    #[test]
    fn unsorted_events_rejected() {
        let events = vec![phone_app(at(0, 9, 0)), phone_app(at(0, 8, 0))];
        let horizon = TimeRange {
            start: at(0, 7, 0),
            end: at(0, 10, 0),
        };
        assert!(matches!(
            simulate_schedule(&events, &SchedulerConfig::default(), horizon, 0),
            Err(SchedulerError::UnsortedInput(_))
        ));
    }

    fn bare_prompt(issue_ts: EpochMs) -> ScheduledPrompt {
        ScheduledPrompt {
            issue_ts,
            local_offset: 0,
            trigger: PromptTrigger::Fixed,
            expiry_ts: issue_ts + 10 * MIN_MS,
            answered: false,
            answer_ts: None,
        }
    }

    #[test]
    fn empty_prompt_list_has_no_violations() {
        assert!(check_constraints(&[], &SchedulerConfig::default()).is_empty());
    }

    #[test]
    fn twenty_minute_gap_is_one_violation() {
        let prompts = vec![bare_prompt(at(0, 9, 0)), bare_prompt(at(0, 9, 20))];
        let violations = check_constraints(&prompts, &SchedulerConfig::default());
        assert_eq!(violations.len(), 1);
        assert!(matches!(violations[0], Violation::MinGap { .. }));
    }

    #[test]
    fn late_answer_is_expiry_violation() {
        let mut prompt = bare_prompt(at(0, 9, 0));
        prompt.answered = true;
        prompt.answer_ts = Some(prompt.issue_ts + 11 * MIN_MS);
        let violations = check_constraints(&[prompt], &SchedulerConfig::default());
        assert_eq!(violations.len(), 1);
        assert!(matches!(violations[0], Violation::Expiry { .. }));
    }

    #[test]
    fn quiet_hour_issue_is_window_violation() {
        let prompts = vec![bare_prompt(at(0, 22, 30))];
        let violations = check_constraints(&prompts, &SchedulerConfig::default());
        assert_eq!(violations.len(), 1);
        assert!(matches!(violations[0], Violation::IssueWindow { .. }));
    }

    #[test]
    fn simulated_schedule_passes_checker() {
        // Dense morning usage with breaks, three days.
        let mut events = Vec::new();
        for day in 0..3 {
            for burst in 0..6 {
                let start = at(day, 8, 0) + burst * 2 * 3_600_000;
                events.extend((0..40).map(|i| phone_app(start + i * 45_000)));
            }
        }
        events.sort_by_key(|e| e.timestamp);
        let horizon = TimeRange {
            start: at(0, 0, 0) + 1,
            end: at(3, 0, 0),
        };
        let config = SchedulerConfig::default();
        let prompts = simulate_schedule(&events, &config, horizon, 60).unwrap();
        assert!(!prompts.is_empty());
        assert!(prompts
            .iter()
            .any(|p| p.trigger == PromptTrigger::Interaction));
        assert_eq!(check_constraints(&prompts, &config), vec![]);
    }

    #[test]
    fn prompt_log_round_trips() {
        let entry = ParticipantPrompt {
            participant: "p01".into(),
            device: Device::Phone,
            prompt: ScheduledPrompt {
                issue_ts: at(0, 9, 0),
                local_offset: 60,
                trigger: PromptTrigger::Interaction,
                expiry_ts: at(0, 9, 10),
                answered: true,
                answer_ts: Some(at(0, 9, 3)),
            },
        };
        let mut buf = Vec::new();
        serialize_prompt_log(&[entry.clone()], &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).contains(r#""kind":"prompt""#));
        let parsed = parse_prompt_log(buf.as_slice(), &ParseOptions::default()).unwrap();
        assert_eq!(parsed, vec![entry]);
    }
}
