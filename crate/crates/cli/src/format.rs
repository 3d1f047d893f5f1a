use trex::Time;

/// Parses `HH:MM:SS` (hours may exceed 23) or a plain number of seconds.
pub fn parse_time(s: &str) -> Result<Time, String> {
    if let Ok(secs) = s.parse::<Time>() {
        return Ok(secs);
    }
    let parts: Vec<&str> = s.split(':').collect();
    let [h, m, sec] = parts.as_slice() else {
        return Err(format!("expected HH:MM:SS or seconds, got {s:?}"));
    };
    let field = |v: &str, max: Time| v.parse::<Time>().ok().filter(|&x| x < max).ok_or_else(|| format!("bad time {s:?}"));
    Ok(field(h, 48)? * 3600 + field(m, 60)? * 60 + field(sec, 60)?)
}

pub fn show_time(t: Time) -> String {
    format!("{:02}:{:02}:{:02}", t / 3600, t / 60 % 60, t % 60)
}
