use serde::{Deserialize, Serialize};

/// Machine description recorded with every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostInfo {
    /// Distribution name and version, e.g. `Debian GNU/Linux 9 (stretch)`.
    pub os: String,
    /// Kernel line in `uname -srvm` form.
    pub kernel: String,
    /// e.g. `Intel(R) Core(TM) i7-4770 CPU @ 3.40GHz`
    pub cpu_model: String,
    pub logical_cores: usize,
    pub total_ram_mib: u64,
}

pub fn capture_host() -> HostInfo {
    HostInfo {
        os: os_release().unwrap_or_else(|| std::env::consts::OS.to_string()),
        kernel: uname().unwrap_or_default(),
        cpu_model: cpu_model().unwrap_or_else(|| "unknown".into()),
        logical_cores: std::thread::available_parallelism().map_or(1, |n| n.get()),
        total_ram_mib: total_ram_mib().unwrap_or(0),
    }
}

fn os_release() -> Option<String> {
    let text = std::fs::read_to_string("/etc/os-release").ok()?;
    text.lines()
        .find_map(|l| l.strip_prefix("PRETTY_NAME="))
        .map(|v| v.trim_matches('"').to_string())
}

fn uname() -> Option<String> {
    // SAFETY: utsname is plain data filled in by the call.
    let u = unsafe {
        let mut u: libc::utsname = std::mem::zeroed();
        if libc::uname(&mut u) != 0 {
            return None;
        }
        u
    };
    let field = |f: &[libc::c_char]| {
        let bytes: Vec<u8> = f.iter().take_while(|&&c| c != 0).map(|&c| c as u8).collect();
        String::from_utf8_lossy(&bytes).into_owned()
    };
    Some(format!(
        "{} {} {} {}",
        field(&u.sysname),
        field(&u.release),
        field(&u.version),
        field(&u.machine)
    ))
}

fn cpu_model() -> Option<String> {
    let text = std::fs::read_to_string("/proc/cpuinfo").ok()?;
    text.lines()
        .find(|l| l.starts_with("model name"))
        .and_then(|l| l.split_once(':'))
        .map(|(_, v)| v.trim().to_string())
}

fn total_ram_mib() -> Option<u64> {
    let text = std::fs::read_to_string("/proc/meminfo").ok()?;
    let kib: u64 = text
        .lines()
        .find_map(|l| l.strip_prefix("MemTotal:"))?
        .trim()
        .trim_end_matches("kB")
        .trim()
        .parse()
        .ok()?;
    Some(kib / 1024)
}

#[cfg(test)]
mod tests {
    #[test]
    fn captures_something() {
        let h = super::capture_host();
        assert!(h.logical_cores >= 1);
        assert!(h.kernel.starts_with("Linux"));
        assert!(h.total_ram_mib > 0);
    }
}
