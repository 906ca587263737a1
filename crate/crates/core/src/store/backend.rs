use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::{PersistedState, StoreError};

/// Where a [`super::Dataset`] keeps its state between runs.
pub trait Backend: Send + Sync {
    fn load(&self) -> Result<Option<PersistedState>, StoreError>;
    fn save(&self, state: &PersistedState) -> Result<(), StoreError>;
}

/// Volatile backend for tests and embedding.
#[derive(Debug, Default)]
pub struct MemoryBackend {
    saved: Mutex<Option<String>>,
}

impl MemoryBackend {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Backend for MemoryBackend {
    fn load(&self) -> Result<Option<PersistedState>, StoreError> {
        let guard = self.saved.lock().expect("memory backend poisoned");
        guard
            .as_deref()
            .map(|s| serde_json::from_str(s).map_err(|e| StoreError::Parse(e.to_string())))
            .transpose()
    }

    fn save(&self, state: &PersistedState) -> Result<(), StoreError> {
        let text = serde_json::to_string(state).map_err(|e| StoreError::Io(e.to_string()))?;
        *self.saved.lock().expect("memory backend poisoned") = Some(text);
        Ok(())
    }
}

/// Single JSON file under a data directory, replaced atomically on save.
#[derive(Debug, Clone)]
pub struct FileBackend {
    path: PathBuf,
}

impl FileBackend {
    pub const FILE_NAME: &'static str = "dataset.json";

    pub fn new(data_dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = data_dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| StoreError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { path: dir.join(Self::FILE_NAME) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Backend for FileBackend {
    fn load(&self) -> Result<Option<PersistedState>, StoreError> {
        match fs::read_to_string(&self.path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| StoreError::Parse(format!("{}: {e}", self.path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(StoreError::Io(format!("{}: {e}", self.path.display()))),
        }
    }

    fn save(&self, state: &PersistedState) -> Result<(), StoreError> {
        let io = |e: std::io::Error| StoreError::Io(format!("{}: {e}", self.path.display()));
        let tmp = self.path.with_extension("json.tmp");
        let mut f = fs::File::create(&tmp).map_err(io)?;
        serde_json::to_writer(&mut f, state).map_err(|e| StoreError::Io(e.to_string()))?;
        f.write_all(b"\n").map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, &self.path).map_err(io)
    }
}
