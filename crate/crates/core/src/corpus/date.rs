//! Rule-based date extraction for free-form quote citations.
//!
//! Every recognised date mention in the input is collected and the earliest
//! one is returned. Partial dates resolve to the first day they could denote.

use std::sync::LazyLock;

use chrono::{Datelike, NaiveDate};
use regex::Regex;

use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DateOptions {
    /// Read numerically ambiguous dates such as 03/04/2018 as month-first.
    pub month_first: bool,
    /// Year implied by surrounding context, used for "September 27".
    pub context_year: Option<i32>,
}

/// Renderings understood by [`parse_date`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DateFormat {
    /// 2018-09-27
    Iso,
    /// 27/09/2018
    DayMonthYear,
    /// 09/27/2018
    MonthDayYear,
    /// 27/09/18
    DayMonthShortYear,
    /// September 27, 2018
    MonthNameDayYear,
    /// 27 Sep 2018
    DayAbbrevYear,
    /// 27 Sep 18
    DayAbbrevShortYear,
    /// September 27 (year from context)
    MonthNameDay,
    /// 2018
    YearOnly,
}

impl DateFormat {
    pub const ALL: [DateFormat; 9] = [
        DateFormat::Iso,
        DateFormat::DayMonthYear,
        DateFormat::MonthDayYear,
        DateFormat::DayMonthShortYear,
        DateFormat::MonthNameDayYear,
        DateFormat::DayAbbrevYear,
        DateFormat::DayAbbrevShortYear,
        DateFormat::MonthNameDay,
        DateFormat::YearOnly,
    ];
}

const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

pub fn render_date(date: NaiveDate, format: DateFormat) -> String {
    let (y, m, d) = (date.year(), date.month(), date.day());
    let name = MONTHS[m as usize - 1];
    let abbrev = &name[..3];
    let yy = y.rem_euclid(100);
    match format {
        DateFormat::Iso => date.format("%Y-%m-%d").to_string(),
        DateFormat::DayMonthYear => format!("{d:02}/{m:02}/{y}"),
        DateFormat::MonthDayYear => format!("{m:02}/{d:02}/{y}"),
        DateFormat::DayMonthShortYear => format!("{d:02}/{m:02}/{yy:02}"),
        DateFormat::MonthNameDayYear => format!("{name} {d}, {y}"),
        DateFormat::DayAbbrevYear => format!("{d} {abbrev} {y}"),
        DateFormat::DayAbbrevShortYear => format!("{d} {abbrev} {yy:02}"),
        DateFormat::MonthNameDay => format!("{name} {d}"),
        DateFormat::YearOnly => format!("{y}"),
    }
}

/// Parses with day-first disambiguation and no context year.
pub fn parse_date(raw: &str) -> Result<NaiveDate, CorpusError> {
    parse_date_with(raw, &DateOptions::default())
}

pub fn parse_date_with(raw: &str, opts: &DateOptions) -> Result<NaiveDate, CorpusError> {
    let mut claimed: Vec<(usize, usize)> = Vec::new();
    let mut found: Vec<NaiveDate> = Vec::new();
    for rule in RULES.iter() {
        for caps in rule.regex.captures_iter(raw) {
            let whole = caps.get(0).expect("group 0");
            let span = (whole.start(), whole.end());
            if claimed.iter().any(|&(s, e)| span.0 < e && s < span.1) {
                continue;
            }
            claimed.push(span);
            let field = |i: usize| caps.get(i).map(|m| m.as_str()).unwrap_or("");
            if let Some(date) = (rule.build)(&field, opts) {
                found.push(date);
            }
        }
    }
    found
        .into_iter()
        .min()
        .ok_or_else(|| CorpusError::UnparsableDate(raw.to_string()))
}

type Builder = for<'a> fn(&'a dyn Fn(usize) -> &'a str, &DateOptions) -> Option<NaiveDate>;

struct Rule {
    regex: Regex,
    build: Builder,
}

const MONTH_RE: &str = r"(jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|sep(?:t(?:ember)?)?|oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)\.?";
const ORD: &str = r"(?:st|nd|rd|th)?";

static RULES: LazyLock<Vec<Rule>> = LazyLock::new(|| {
    let rule = |pattern: String, build: Builder| Rule {
        regex: Regex::new(&format!("(?i){pattern}")).expect("valid date regex"),
        build,
    };
    vec![
        rule(r"\b(\d{4})-(\d{1,2})-(\d{1,2})\b".into(), |f, _| {
            ymd(f(1).parse().ok()?, f(2).parse().ok()?, f(3).parse().ok()?)
        }),
        rule(r"\b(\d{1,2})[/.](\d{1,2})[/.](\d{4}|\d{2})\b".into(), |f, o| {
            let a: u32 = f(1).parse().ok()?;
            let b: u32 = f(2).parse().ok()?;
            let (day, month) = if a > 12 {
                (a, b)
            } else if b > 12 || o.month_first {
                (b, a)
            } else {
                (a, b)
            };
            ymd(year(f(3))?, month, day)
        }),
        rule(
            format!(r"\b{MONTH_RE}\s+(\d{{1,2}}){ORD}(?:,\s*|\s+)(\d{{4}}|\d{{2}})\b"),
            |f, _| ymd(year(f(3))?, month(f(1))?, f(2).parse().ok()?),
        ),
        rule(
            format!(r"\b(\d{{1,2}}){ORD}\s+(?:of\s+)?{MONTH_RE},?\s+(\d{{4}}|\d{{2}})\b"),
            |f, _| ymd(year(f(3))?, month(f(2))?, f(1).parse().ok()?),
        ),
        rule(format!(r"\b{MONTH_RE},?\s+(\d{{4}})\b"), |f, _| {
            ymd(year(f(2))?, month(f(1))?, 1)
        }),
        rule(format!(r"\b{MONTH_RE}\s+(\d{{1,2}}){ORD}\b"), |f, o| {
            ymd(o.context_year?, month(f(1))?, f(2).parse().ok()?)
        }),
        rule(format!(r"\b(\d{{1,2}}){ORD}\s+(?:of\s+)?{MONTH_RE}(?:\b|$)"), |f, o| {
            ymd(o.context_year?, month(f(2))?, f(1).parse().ok()?)
        }),
        rule(r"\b(1\d{3}|20\d{2})\b".into(), |f, _| ymd(f(1).parse().ok()?, 1, 1)),
    ]
});

fn ymd(y: i32, m: u32, d: u32) -> Option<NaiveDate> {
    NaiveDate::from_ymd_opt(y, m, d)
}

/// Two-digit years pivot like strptime's %y: 69..=99 are 19xx, 00..=68 are 20xx.
fn year(s: &str) -> Option<i32> {
    let v: i32 = s.parse().ok()?;
    Some(match s.len() {
        2 if v >= 69 => 1900 + v,
        2 => 2000 + v,
        _ => v,
    })
}

fn month(s: &str) -> Option<u32> {
    let s = s.trim_end_matches('.').to_ascii_lowercase();
    MONTHS
        .iter()
        .position(|m| m.to_ascii_lowercase().starts_with(&s[..s.len().min(3)]))
        .map(|i| i as u32 + 1)
}
