//! Small filesystem helpers shared across modules.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::Rng;

/// Write `bytes` to `path` atomically: write a sibling temporary file named
/// `<file>.tmp.<suffix>`, then rename it over the destination. The parent
/// directory is created if missing. On failure the previous file content is
/// left intact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    atomic_write_with_crash_hook(path, bytes, &mut || false)
}

/// [`atomic_write`] with a crash-injection point for tests: when `crash`
/// returns true after the temporary file is written, the rename is skipped,
/// simulating a process death between the two steps.
pub fn atomic_write_with_crash_hook(
    path: &Path,
    bytes: &[u8],
    crash: &mut dyn FnMut() -> bool,
) -> io::Result<()> {
    let parent = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(parent)?;

    let file_name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("file");
    let tmp = parent.join(format!("{}.tmp.{}", file_name, random_suffix()));

    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);

    if crash() {
        // Simulated crash: the temp file stays behind, the target is untouched.
        return Ok(());
    }

    fs::rename(&tmp, path)
}

/// An eight-character lowercase hex suffix for temporary names.
pub fn random_suffix() -> String {
    let mut rng = rand::rng();
    (0..8)
        .map(|_| {
            let v: u8 = rng.random_range(0..16);
            char::from_digit(v as u32, 16).unwrap()
        })
        .collect()
}

/// Recursively copy `src` into `dst` (created fresh). Symlinks are followed;
/// file contents are copied byte for byte.
pub fn copy_dir_recursive(src: &Path, dst: &Path) -> io::Result<()> {
    fs::create_dir_all(dst)?;
    for entry in fs::read_dir(src)? {
        let entry = entry?;
        let target = dst.join(entry.file_name());
        if entry.file_type()?.is_dir() {
            copy_dir_recursive(&entry.path(), &target)?;
        } else {
            fs::copy(entry.path(), &target)?;
        }
    }
    Ok(())
}

/// Direct child directories of `dir`, sorted by name.
pub fn child_dirs(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_dir()).unwrap_or(false))
        .map(|e| e.path())
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Whether a path's file name starts with a dot.
pub fn is_hidden(path: &Path) -> bool {
    path.file_name()
        .and_then(|n| n.to_str())
        .map(|n| n.starts_with('.'))
        .unwrap_or(false)
}
