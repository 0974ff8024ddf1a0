//! Download of Matrix Market archives from a collection mirror, with a local
//! cache that is only ever written by rename.

use std::fs::{self, File};
use std::io::{self, BufWriter, Read};
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::CliError;

pub const DEFAULT_URL_TEMPLATE: &str = "https://sparse.tamu.edu/MM/{group}/{name}.tar.gz";
pub const MIRROR_ENV: &str = "CJFEAST_MIRROR";
pub const CACHE_ENV: &str = "CJFEAST_CACHE";

const MAX_ARCHIVE_BYTES: u64 = 4 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnownMatrix {
    pub name: &'static str,
    pub group: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
}

/// Matrices with published dimensions; anything else can be fetched as `Group/Name`.
pub const CATALOG: &[KnownMatrix] = &[
    KnownMatrix {
        name: "GL7d12",
        group: "JGD_GL7d",
        rows: 8899,
        cols: 1019,
        nnz: 37519,
    },
    KnownMatrix {
        name: "plat1919",
        group: "HB",
        rows: 1919,
        cols: 1919,
        nnz: 32399,
    },
    KnownMatrix {
        name: "flower_5_4",
        group: "JGD_Homology",
        rows: 5226,
        cols: 14721,
        nnz: 43942,
    },
    KnownMatrix {
        name: "fv1",
        group: "Norris",
        rows: 9604,
        cols: 9604,
        nnz: 85264,
    },
    KnownMatrix {
        name: "3elt_dual",
        group: "AG-Monien",
        rows: 9000,
        cols: 9000,
        nnz: 26556,
    },
    KnownMatrix {
        name: "rel8",
        group: "JGD_Relat",
        rows: 345688,
        cols: 12347,
        nnz: 821839,
    },
    KnownMatrix {
        name: "crack_dual",
        group: "AG-Monien",
        rows: 20141,
        cols: 20141,
        nnz: 60086,
    },
    KnownMatrix {
        name: "nopoly",
        group: "Gaertner",
        rows: 10774,
        cols: 10774,
        nnz: 70842,
    },
    KnownMatrix {
        name: "barth5",
        group: "Pothen",
        rows: 15606,
        cols: 15606,
        nnz: 61484,
    },
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixId {
    pub group: String,
    pub name: String,
    pub expected: Option<(usize, usize, usize)>,
}

pub fn resolve(id: &str) -> Result<MatrixId, CliError> {
    if let Some((group, name)) = id.split_once('/') {
        if group.is_empty() || name.is_empty() || name.contains('/') {
            return Err(CliError::Usage(format!("expected Group/Name, got {id:?}")));
        }
        let expected = CATALOG
            .iter()
            .find(|k| k.group == group && k.name == name)
            .map(|k| (k.rows, k.cols, k.nnz));
        return Ok(MatrixId {
            group: group.into(),
            name: name.into(),
            expected,
        });
    }
    CATALOG
        .iter()
        .find(|k| k.name == id)
        .map(|k| MatrixId {
            group: k.group.into(),
            name: k.name.into(),
            expected: Some((k.rows, k.cols, k.nnz)),
        })
        .ok_or_else(|| {
            let known: Vec<&str> = CATALOG.iter().map(|k| k.name).collect();
            CliError::Usage(format!(
                "matrix {id:?} not found in the built-in catalog ({}); pass it as Group/Name",
                known.join(", ")
            ))
        })
}

pub fn url_for(template: &str, id: &MatrixId) -> String {
    template
        .replace("{group}", &id.group)
        .replace("{name}", &id.name)
}

pub fn default_cache_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os(CACHE_ENV) {
        return PathBuf::from(dir);
    }
    let home = std::env::var_os("HOME")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    home.join(".cache").join("cjfeast")
}

pub fn default_url_template() -> String {
    std::env::var(MIRROR_ENV).unwrap_or_else(|_| DEFAULT_URL_TEMPLATE.to_string())
}

pub fn cache_path(cache_dir: &Path, id: &MatrixId) -> PathBuf {
    cache_dir.join(&id.group).join(format!("{}.mtx", id.name))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchOutcome {
    pub path: PathBuf,
    pub from_cache: bool,
}

/// Returns the cached `.mtx` for `id`, downloading it first if needed.
pub fn fetch(
    id: &MatrixId,
    cache_dir: &Path,
    url_template: &str,
) -> Result<FetchOutcome, CliError> {
    let target = cache_path(cache_dir, id);
    if target.is_file() {
        return Ok(FetchOutcome {
            path: target,
            from_cache: true,
        });
    }
    let dir = target.parent().expect("cache path has a parent");
    fs::create_dir_all(dir).map_err(|e| {
        CliError::Data(format!(
            "cannot create cache directory {}: {e}",
            dir.display()
        ))
    })?;

    let url = url_for(url_template, id);
    let body = download(&url)?;
    let partial = dir.join(format!(".{}.mtx.partial-{}", id.name, std::process::id()));
    let result = extract_member(body, &format!("{}.mtx", id.name), &partial)
        .and_then(|()| check_dimensions(&partial, id))
        .and_then(|()| {
            fs::rename(&partial, &target)
                .map_err(|e| CliError::Data(format!("cannot move download into cache: {e}")))
        });
    if result.is_err() {
        let _ = fs::remove_file(&partial);
    }
    result.map(|()| FetchOutcome {
        path: target,
        from_cache: false,
    })
}

fn download(url: &str) -> Result<impl Read, CliError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_connect(Some(Duration::from_secs(30)))
        .build()
        .into();
    match agent.get(url).call() {
        Ok(resp) => Ok(resp.into_body().into_with_config().limit(MAX_ARCHIVE_BYTES).reader()),
        Err(ureq::Error::StatusCode(404)) => Err(CliError::Data(format!(
            "{url} returned 404 not found; check the matrix name and group, or set --url-template"
        ))),
        Err(ureq::Error::StatusCode(code)) => Err(CliError::Unavailable(format!(
            "{url} returned HTTP {code}; the mirror may be down, retry later or set --url-template"
        ))),
        Err(e) => Err(CliError::Unavailable(format!(
            "cannot download {url}: {e}; check network access or point {MIRROR_ENV} at a reachable mirror"
        ))),
    }
}

/// Streams a `.tar.gz` and copies the member whose file name is `member` to `dest`.
fn extract_member(body: impl Read, member: &str, dest: &Path) -> Result<(), CliError> {
    let corrupt = |e: io::Error| CliError::Data(format!("archive is corrupt or truncated: {e}"));
    let mut archive = tar::Archive::new(flate2::read::GzDecoder::new(body));
    for entry in archive.entries().map_err(corrupt)? {
        let mut entry = entry.map_err(corrupt)?;
        let is_member = entry
            .path()
            .map_err(corrupt)?
            .file_name()
            .is_some_and(|f| f == member);
        if !is_member {
            continue;
        }
        let file = File::create(dest)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", dest.display())))?;
        let mut out = BufWriter::new(file);
        io::copy(&mut entry, &mut out).map_err(corrupt)?;
        out.into_inner()
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", dest.display())))?
            .sync_all()?;
        return Ok(());
    }
    Err(CliError::Data(format!(
        "archive has no member named {member}"
    )))
}

fn check_dimensions(path: &Path, id: &MatrixId) -> Result<(), CliError> {
    let a = cjfeast::read_matrix_market_file(path)
        .map_err(|e| CliError::Data(format!("downloaded matrix does not parse: {e}")))?;
    if let Some((m, n, nnz)) = id.expected {
        let got = (a.rows(), a.cols(), a.nnz());
        if got != (m, n, nnz) {
            return Err(CliError::Data(format!(
                "downloaded {} is {}x{} with {} nonzeros, expected {m}x{n} with {nnz}",
                id.name, got.0, got.1, got.2
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_lookup() {
        let id = resolve("plat1919").unwrap();
        assert_eq!(id.group, "HB");
        assert_eq!(id.expected, Some((1919, 1919, 32399)));
        let id = resolve("HB/plat1919").unwrap();
        assert_eq!(id.expected, Some((1919, 1919, 32399)));
        let id = resolve("Foo/bar").unwrap();
        assert_eq!(id.expected, None);
        assert!(matches!(resolve("no_such_matrix"), Err(CliError::Usage(_))));
        assert!(resolve("/x").is_err());
    }

    #[test]
    fn url_template_substitution() {
        let id = resolve("GL7d12").unwrap();
        assert_eq!(
            url_for(DEFAULT_URL_TEMPLATE, &id),
            "https://sparse.tamu.edu/MM/JGD_GL7d/GL7d12.tar.gz"
        );
    }
}
