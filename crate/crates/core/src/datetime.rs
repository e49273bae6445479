//! UTC timestamps in the two textual forms this crate deals with: the
//! RFC 1123 dates found in TimeMap `datetime` attributes and ISO-8601 for
//! metadata records.

use alloc::format;
use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const WEEKDAYS: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];
const MONTHS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DateTime {
    pub year: i32,
    pub month: u8,
    pub day: u8,
    pub hour: u8,
    pub minute: u8,
    pub second: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DateTimeError(pub String);

impl fmt::Display for DateTimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid datetime {:?}", self.0)
    }
}

impl core::error::Error for DateTimeError {}

fn is_leap(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(year) => 29,
        2 => 28,
        _ => 0,
    }
}

// Howard Hinnant's days-from-civil.
fn days_from_civil(year: i32, month: u8, day: u8) -> i64 {
    let y = i64::from(year) - i64::from(month <= 2);
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let m = i64::from(month);
    let doy = (153 * (if m > 2 { m - 3 } else { m + 9 }) + 2) / 5 + i64::from(day) - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

fn civil_from_days(days: i64) -> (i32, u8, u8) {
    let z = days + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = (doy - (153 * mp + 2) / 5 + 1) as u8;
    let month = if mp < 10 { mp + 3 } else { mp - 9 } as u8;
    let year = (yoe + era * 400 + i64::from(month <= 2)) as i32;
    (year, month, day)
}

impl DateTime {
    pub fn new(year: i32, month: u8, day: u8, hour: u8, minute: u8, second: u8) -> Option<Self> {
        let valid = (1..=12).contains(&month)
            && day >= 1
            && day <= days_in_month(year, month)
            && hour < 24
            && minute < 60
            && second < 61;
        valid.then_some(Self {
            year,
            month,
            day,
            hour,
            minute,
            second,
        })
    }

    pub const UNIX_EPOCH: DateTime = DateTime {
        year: 1970,
        month: 1,
        day: 1,
        hour: 0,
        minute: 0,
        second: 0,
    };

    pub fn from_unix_seconds(secs: i64) -> Self {
        let days = secs.div_euclid(86_400);
        let rem = secs.rem_euclid(86_400);
        let (year, month, day) = civil_from_days(days);
        Self {
            year,
            month,
            day,
            hour: (rem / 3600) as u8,
            minute: (rem % 3600 / 60) as u8,
            second: (rem % 60) as u8,
        }
    }

    pub fn unix_seconds(&self) -> i64 {
        days_from_civil(self.year, self.month, self.day) * 86_400
            + i64::from(self.hour) * 3600
            + i64::from(self.minute) * 60
            + i64::from(self.second)
    }

    fn weekday(&self) -> &'static str {
        // 1970-01-01 was a Thursday.
        let days = days_from_civil(self.year, self.month, self.day);
        WEEKDAYS[(days + 3).rem_euclid(7) as usize]
    }

    /// `Sun, 06 Nov 1994 08:49:37 GMT`
    pub fn to_http_date(&self) -> String {
        format!(
            "{}, {:02} {} {:04} {:02}:{:02}:{:02} GMT",
            self.weekday(),
            self.day,
            MONTHS[usize::from(self.month - 1)],
            self.year,
            self.hour,
            self.minute,
            self.second
        )
    }

    /// Parses an RFC 1123 date. The weekday is optional and not checked
    /// against the date; the zone must be `GMT` or `UTC`.
    pub fn parse_http_date(text: &str) -> Result<Self, DateTimeError> {
        let err = || DateTimeError(String::from(text));
        let body = match text.split_once(',') {
            Some((weekday, rest)) => {
                if !WEEKDAYS.iter().any(|w| w.eq_ignore_ascii_case(weekday.trim())) {
                    return Err(err());
                }
                rest
            }
            None => text,
        };
        let mut fields = body.split_ascii_whitespace();
        let day: u8 = fields.next().and_then(|d| d.parse().ok()).ok_or_else(err)?;
        let month = fields
            .next()
            .and_then(|m| MONTHS.iter().position(|n| n.eq_ignore_ascii_case(m)))
            .ok_or_else(err)? as u8
            + 1;
        let year: i32 = fields
            .next()
            .filter(|y| y.len() == 4)
            .and_then(|y| y.parse().ok())
            .ok_or_else(err)?;
        let (hour, minute, second) = fields.next().and_then(parse_clock).ok_or_else(err)?;
        match fields.next() {
            Some(zone) if zone.eq_ignore_ascii_case("GMT") || zone.eq_ignore_ascii_case("UTC") => {}
            _ => return Err(err()),
        }
        if fields.next().is_some() {
            return Err(err());
        }
        DateTime::new(year, month, day, hour, minute, second).ok_or_else(err)
    }

    /// `1994-11-06T08:49:37Z`
    pub fn to_iso8601(&self) -> String {
        format!(
            "{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z",
            self.year, self.month, self.day, self.hour, self.minute, self.second
        )
    }

    pub fn parse_iso8601(text: &str) -> Result<Self, DateTimeError> {
        let err = || DateTimeError(String::from(text));
        let body = text.strip_suffix('Z').ok_or_else(err)?;
        let (date, clock) = body.split_once('T').ok_or_else(err)?;
        let mut parts = date.split('-');
        let year = parts
            .next()
            .filter(|y| y.len() == 4)
            .and_then(|y| y.parse().ok())
            .ok_or_else(err)?;
        let month = parts
            .next()
            .filter(|m| m.len() == 2)
            .and_then(|m| m.parse().ok())
            .ok_or_else(err)?;
        let day = parts
            .next()
            .filter(|d| d.len() == 2)
            .and_then(|d| d.parse().ok())
            .ok_or_else(err)?;
        if parts.next().is_some() {
            return Err(err());
        }
        let (hour, minute, second) = parse_clock(clock).ok_or_else(err)?;
        DateTime::new(year, month, day, hour, minute, second).ok_or_else(err)
    }
}

fn parse_clock(text: &str) -> Option<(u8, u8, u8)> {
    let mut parts = text.split(':');
    let mut next = || -> Option<u8> {
        let p = parts.next()?;
        if p.len() != 2 {
            return None;
        }
        p.parse().ok()
    };
    let clock = (next()?, next()?, next()?);
    parts.next().is_none().then_some(clock)
}

impl fmt::Display for DateTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_iso8601())
    }
}

impl Serialize for DateTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_iso8601())
    }
}

impl<'de> Deserialize<'de> for DateTime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        DateTime::parse_iso8601(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn http_date_round_trip() {
        let dt = DateTime::parse_http_date("Sun, 06 Nov 1994 08:49:37 GMT").unwrap();
        assert_eq!(dt, DateTime::new(1994, 11, 6, 8, 49, 37).unwrap());
        assert_eq!(dt.to_http_date(), "Sun, 06 Nov 1994 08:49:37 GMT");
        assert_eq!(dt.to_iso8601(), "1994-11-06T08:49:37Z");
        assert_eq!(DateTime::parse_iso8601("1994-11-06T08:49:37Z").unwrap(), dt);
    }

    #[test]
    fn unix_conversion() {
        assert_eq!(DateTime::from_unix_seconds(0), DateTime::UNIX_EPOCH);
        let dt = DateTime::from_unix_seconds(1_437_091_200);
        assert_eq!(dt.to_iso8601(), "2015-07-17T00:00:00Z");
        assert_eq!(dt.unix_seconds(), 1_437_091_200);
        assert_eq!(DateTime::from_unix_seconds(951_782_400).to_iso8601(), "2000-02-29T00:00:00Z");
    }

    #[test]
    fn rejects_bad_dates() {
        for bad in [
            "",
            "Sun, 31 Feb 2015 00:00:00 GMT",
            "Sun, 06 Nov 94 08:49:37 GMT",
            "Sun, 06 Nov 1994 08:49:37 PST",
            "Xyz, 06 Nov 1994 08:49:37 GMT",
            "06 Nov 1994 8:49:37 GMT",
            "Sun, 06 Nov 1994 08:49:37 GMT extra",
        ] {
            assert!(DateTime::parse_http_date(bad).is_err(), "{bad}");
        }
        assert!(DateTime::parse_iso8601("2015-13-01T00:00:00Z").is_err());
        assert!(DateTime::parse_iso8601("2015-01-01 00:00:00").is_err());
    }
}
