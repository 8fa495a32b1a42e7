//! Release-date features: holiday proximity and meteorological season.

use std::sync::OnceLock;

use chrono::{Datelike, Duration, NaiveDate, Weekday};

static HOLIDAYS_SRC: &str = include_str!("../data/holidays.txt");

#[derive(Debug, Clone, Copy)]
enum Rule {
    Fixed { month: u32, day: u32 },
    Nth { n: u8, weekday: Weekday, month: u32 },
    Last { weekday: Weekday, month: u32 },
}

impl Rule {
    fn date(self, year: i32) -> Option<NaiveDate> {
        match self {
            Rule::Fixed { month, day } => NaiveDate::from_ymd_opt(year, month, day),
            Rule::Nth { n, weekday, month } => NaiveDate::from_weekday_of_month_opt(year, month, weekday, n),
            Rule::Last { weekday, month } => {
                let next = if month == 12 {
                    NaiveDate::from_ymd_opt(year + 1, 1, 1)?
                } else {
                    NaiveDate::from_ymd_opt(year, month + 1, 1)?
                };
                let mut d = next - Duration::days(1);
                while d.weekday() != weekday {
                    d -= Duration::days(1);
                }
                Some(d)
            }
        }
    }
}

fn parse_weekday(s: &str) -> Weekday {
    s.parse()
        .unwrap_or_else(|_| panic!("bad weekday '{s}' in holiday table"))
}

fn rules() -> &'static [(String, Rule)] {
    static RULES: OnceLock<Vec<(String, Rule)>> = OnceLock::new();
    RULES.get_or_init(|| {
        HOLIDAYS_SRC
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|l| {
                let (name, rule) = l.split_once('\t').expect("name<TAB>rule");
                let f: Vec<&str> = rule.split_whitespace().collect();
                let num = |s: &str| s.parse::<u32>().expect("numeric field in holiday table");
                let rule = match f.as_slice() {
                    ["fixed", m, d] => Rule::Fixed {
                        month: num(m),
                        day: num(d),
                    },
                    ["nth", n, w, m] => Rule::Nth {
                        n: num(n) as u8,
                        weekday: parse_weekday(w),
                        month: num(m),
                    },
                    ["last", w, m] => Rule::Last {
                        weekday: parse_weekday(w),
                        month: num(m),
                    },
                    _ => panic!("bad holiday rule '{rule}'"),
                };
                (name.to_string(), rule)
            })
            .collect()
    })
}

/// Holidays observed in `year`, by name.
pub fn holidays(year: i32) -> Vec<(&'static str, NaiveDate)> {
    rules()
        .iter()
        .filter_map(|(name, r)| Some((name.as_str(), r.date(year)?)))
        .collect()
}

/// True when `date` lies within `window_days` of a holiday (neighboring
/// years included, so late December counts for New Year).
pub fn is_holiday_release(date: NaiveDate, window_days: i64) -> bool {
    (date.year() - 1..=date.year() + 1)
        .flat_map(holidays)
        .any(|(_, h)| (date - h).num_days().abs() <= window_days)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Season {
    Spring,
    Summer,
    Fall,
    Winter,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Spring, Season::Summer, Season::Fall, Season::Winter];

    pub fn of(date: NaiveDate) -> Season {
        match date.month() {
            3..=5 => Season::Spring,
            6..=8 => Season::Summer,
            9..=11 => Season::Fall,
            _ => Season::Winter,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Fall => "fall",
            Season::Winter => "winter",
        }
    }
}
