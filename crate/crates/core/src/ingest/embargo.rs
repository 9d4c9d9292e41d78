use std::fmt;
use std::str::FromStr;

use chrono::{Days, Months, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::model::{Document, Reason, Verdict};

pub const STAGE: &str = "embargo";

/// A calendar duration written like `1y`, `18m`, `30d` or `1y2m3d`.
/// Years and months use calendar arithmetic (Feb 29 minus one year is
/// Feb 28).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Embargo {
    pub months: u32,
    pub days: u32,
}

impl Embargo {
    pub const ONE_YEAR: Embargo = Embargo { months: 12, days: 0 };

    pub fn none() -> Self {
        Embargo { months: 0, days: 0 }
    }

    /// The latest capture date still allowed when processing on `date`.
    pub fn cutoff(&self, date: NaiveDate) -> NaiveDate {
        date.checked_sub_months(Months::new(self.months))
            .and_then(|d| d.checked_sub_days(Days::new(self.days as u64)))
            .unwrap_or(NaiveDate::MIN)
    }
}

impl Default for Embargo {
    fn default() -> Self {
        Embargo::ONE_YEAR
    }
}

impl fmt::Display for Embargo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (y, m) = (self.months / 12, self.months % 12);
        let mut wrote = false;
        for (n, unit) in [(y, 'y'), (m, 'm'), (self.days, 'd')] {
            if n > 0 {
                write!(f, "{n}{unit}")?;
                wrote = true;
            }
        }
        if !wrote {
            f.write_str("0d")?;
        }
        Ok(())
    }
}

impl FromStr for Embargo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty embargo duration".into());
        }
        let mut out = Embargo::none();
        let mut digits = String::new();
        for c in s.chars() {
            if c.is_ascii_digit() {
                digits.push(c);
                continue;
            }
            let n: u32 = digits
                .parse()
                .map_err(|_| format!("embargo `{s}`: expected a number before `{c}`"))?;
            digits.clear();
            match c {
                'y' => out.months += n * 12,
                'm' => out.months += n,
                'd' => out.days += n,
                _ => return Err(format!("embargo `{s}`: unknown unit `{c}` (use y, m, d)")),
            }
        }
        if !digits.is_empty() {
            return Err(format!("embargo `{s}`: trailing number without unit"));
        }
        Ok(out)
    }
}

impl Serialize for Embargo {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Embargo {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbargoPolicy {
    pub processing_date: NaiveDate,
    #[serde(default)]
    pub embargo: Embargo,
}

impl EmbargoPolicy {
    pub fn new(processing_date: NaiveDate, embargo: Embargo) -> Self {
        EmbargoPolicy {
            processing_date,
            embargo,
        }
    }
}

/// Keep iff the capture date is on or before `processing_date - embargo`.
pub fn embargo_filter(doc: &Document, policy: &EmbargoPolicy) -> Verdict {
    match doc.capture_date {
        None => Verdict::drop(STAGE, Reason::EmbargoMissingDate),
        Some(d) if d <= policy.embargo.cutoff(policy.processing_date) => Verdict::keep(STAGE),
        Some(_) => Verdict::drop(STAGE, Reason::EmbargoTooRecent),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn policy() -> EmbargoPolicy {
        EmbargoPolicy::new(ymd(2025, 9, 1), Embargo::ONE_YEAR)
    }

    #[test]
    fn examples() {
        let old = Document::new("a", "").with_date(ymd(2024, 1, 1));
        assert!(embargo_filter(&old, &policy()).is_keep());
        let recent = Document::new("b", "").with_date(ymd(2025, 6, 1));
        assert_eq!(embargo_filter(&recent, &policy()).reason(), Some(Reason::EmbargoTooRecent));
        let undated = Document::new("c", "");
        assert_eq!(embargo_filter(&undated, &policy()).reason(), Some(Reason::EmbargoMissingDate));
    }

    #[test]
    fn boundary_is_inclusive() {
        let exactly = Document::new("a", "").with_date(ymd(2024, 9, 1));
        assert!(embargo_filter(&exactly, &policy()).is_keep());
        let day_after = Document::new("a", "").with_date(ymd(2024, 9, 2));
        assert!(!embargo_filter(&day_after, &policy()).is_keep());
    }

    #[test]
    fn leap_day_cutoff() {
        assert_eq!(Embargo::ONE_YEAR.cutoff(ymd(2024, 2, 29)), ymd(2023, 2, 28));
    }

    #[test]
    fn duration_parsing() {
        assert_eq!("1y".parse::<Embargo>().unwrap(), Embargo::ONE_YEAR);
        assert_eq!("1y6m10d".parse::<Embargo>().unwrap(), Embargo { months: 18, days: 10 });
        assert_eq!("0d".parse::<Embargo>().unwrap(), Embargo::none());
        assert!("12".parse::<Embargo>().is_err());
        assert!("3w".parse::<Embargo>().is_err());
        assert_eq!(Embargo { months: 18, days: 10 }.to_string(), "1y6m10d");
    }

    proptest! {
        #[test]
        fn monotone_in_capture_date(a in 0i64..4000, b in 0i64..4000) {
            let base = ymd(2015, 1, 1);
            let (early, late) = (a.min(b), a.max(b));
            let doc = |off: i64| Document::new("x", "").with_date(base + chrono::Duration::days(off));
            if embargo_filter(&doc(late), &policy()).is_keep() {
                prop_assert!(embargo_filter(&doc(early), &policy()).is_keep());
            }
        }
    }
}
