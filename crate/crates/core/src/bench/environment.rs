use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    X86_64,
    Aarch64,
    Other,
}

impl Arch {
    pub fn from_name(name: &str) -> Arch {
        match name {
            "x86_64" => Arch::X86_64,
            "aarch64" => Arch::Aarch64,
            _ => Arch::Other,
        }
    }
}

/// Crypto-relevant instruction set extensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Feature {
    Aes,
    Avx2,
    Pmull,
    Asimd,
    Rdrand,
    Pclmulqdq,
    Sha2,
}

impl Feature {
    /// Maps a kernel cpuinfo flag name to a feature.
    pub fn from_cpuinfo_flag(arch: Arch, flag: &str) -> Option<Feature> {
        match (arch, flag) {
            (Arch::X86_64, "aes") => Some(Feature::Aes),
            (Arch::X86_64, "avx2") => Some(Feature::Avx2),
            (Arch::X86_64, "rdrand") => Some(Feature::Rdrand),
            (Arch::X86_64, "pclmulqdq") => Some(Feature::Pclmulqdq),
            (Arch::X86_64, "sha_ni") => Some(Feature::Sha2),
            (Arch::Aarch64, "aes") => Some(Feature::Aes),
            (Arch::Aarch64, "pmull") => Some(Feature::Pmull),
            (Arch::Aarch64, "asimd") => Some(Feature::Asimd),
            (Arch::Aarch64, "sha2") => Some(Feature::Sha2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Environment {
    pub arch: Arch,
    pub cpu_model: Option<String>,
    pub core_count: Option<usize>,
    pub feature_flags: BTreeSet<Feature>,
    /// Cache name ("L1d", "L1i", "L2", ...) to size in bytes.
    pub cache_sizes: BTreeMap<String, u64>,
}

/// Detects the host once per process; later calls return the same value.
pub fn capture_environment() -> Environment {
    static ENV: OnceLock<Environment> = OnceLock::new();
    ENV.get_or_init(detect).clone()
}

fn detect() -> Environment {
    let cpuinfo = fs::read_to_string("/proc/cpuinfo").ok();
    Environment {
        arch: Arch::from_name(std::env::consts::ARCH),
        cpu_model: cpuinfo.as_deref().and_then(cpu_model),
        core_count: std::thread::available_parallelism().ok().map(|n| n.get()),
        feature_flags: detect_features(),
        cache_sizes: cache_sizes(Path::new("/sys/devices/system/cpu/cpu0/cache")),
    }
}

fn cpuinfo_field<'a>(cpuinfo: &'a str, key: &str) -> Option<&'a str> {
    cpuinfo.lines().find_map(|line| {
        let (k, v) = line.split_once(':')?;
        (k.trim() == key).then(|| v.trim()).filter(|v| !v.is_empty())
    })
}

pub(crate) fn cpu_model(cpuinfo: &str) -> Option<String> {
    ["model name", "Model", "Hardware"]
        .iter()
        .find_map(|k| cpuinfo_field(cpuinfo, k))
        .map(str::to_owned)
}

/// Feature set as the kernel reports it in a cpuinfo dump.
pub fn features_from_cpuinfo(arch: Arch, cpuinfo: &str) -> BTreeSet<Feature> {
    let key = match arch {
        Arch::X86_64 => "flags",
        Arch::Aarch64 => "Features",
        Arch::Other => return BTreeSet::new(),
    };
    cpuinfo_field(cpuinfo, key)
        .map(|flags| {
            flags
                .split_whitespace()
                .filter_map(|f| Feature::from_cpuinfo_flag(arch, f))
                .collect()
        })
        .unwrap_or_default()
}

#[cfg(target_arch = "x86_64")]
fn detect_features() -> BTreeSet<Feature> {
    let mut s = BTreeSet::new();
    let mut add = |on: bool, f| {
        if on {
            s.insert(f);
        }
    };
    add(std::arch::is_x86_feature_detected!("aes"), Feature::Aes);
    add(std::arch::is_x86_feature_detected!("avx2"), Feature::Avx2);
    add(std::arch::is_x86_feature_detected!("rdrand"), Feature::Rdrand);
    add(std::arch::is_x86_feature_detected!("pclmulqdq"), Feature::Pclmulqdq);
    add(std::arch::is_x86_feature_detected!("sha"), Feature::Sha2);
    s
}

#[cfg(target_arch = "aarch64")]
fn detect_features() -> BTreeSet<Feature> {
    let mut s = BTreeSet::new();
    let mut add = |on: bool, f| {
        if on {
            s.insert(f);
        }
    };
    add(std::arch::is_aarch64_feature_detected!("aes"), Feature::Aes);
    add(std::arch::is_aarch64_feature_detected!("pmull"), Feature::Pmull);
    add(std::arch::is_aarch64_feature_detected!("neon"), Feature::Asimd);
    add(std::arch::is_aarch64_feature_detected!("sha2"), Feature::Sha2);
    s
}

#[cfg(not(any(target_arch = "x86_64", target_arch = "aarch64")))]
fn detect_features() -> BTreeSet<Feature> {
    BTreeSet::new()
}

/// Parses sysfs sizes such as "48K", "2048K", "32M".
pub(crate) fn parse_size(s: &str) -> Option<u64> {
    let s = s.trim();
    let (digits, mult) = match s.as_bytes().last()? {
        b'K' => (&s[..s.len() - 1], 1 << 10),
        b'M' => (&s[..s.len() - 1], 1 << 20),
        b'G' => (&s[..s.len() - 1], 1 << 30),
        _ => (s, 1),
    };
    digits.parse::<u64>().ok()?.checked_mul(mult)
}

pub(crate) fn cache_sizes(dir: &Path) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    let Ok(entries) = fs::read_dir(dir) else {
        return out;
    };
    for entry in entries.flatten() {
        let p = entry.path();
        if !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("index")) {
            continue;
        }
        let read = |f: &str| fs::read_to_string(p.join(f)).ok();
        let (Some(level), Some(kind), Some(size)) = (read("level"), read("type"), read("size")) else {
            continue;
        };
        let Some(bytes) = parse_size(&size) else {
            continue;
        };
        let suffix = match kind.trim() {
            "Data" => "d",
            "Instruction" => "i",
            _ => "",
        };
        out.insert(format!("L{}{}", level.trim(), suffix), bytes);
    }
    out
}
