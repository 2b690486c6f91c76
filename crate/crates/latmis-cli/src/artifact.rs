//! Versioned JSON artifacts in the output directory.

use latmis::error::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Graph,
    Planarized,
    Ising,
    Layout,
    Program,
    Routed,
    Spectrum,
    Sweep,
    Ensemble,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::Graph,
        Kind::Planarized,
        Kind::Ising,
        Kind::Layout,
        Kind::Program,
        Kind::Routed,
        Kind::Spectrum,
        Kind::Sweep,
        Kind::Ensemble,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Graph => "graph",
            Kind::Planarized => "planarized",
            Kind::Ising => "ising",
            Kind::Layout => "layout",
            Kind::Program => "program",
            Kind::Routed => "routed",
            Kind::Spectrum => "spectrum",
            Kind::Sweep => "sweep",
            Kind::Ensemble => "ensemble",
        }
    }

    pub fn file(self) -> String {
        format!("{}.json", self.name())
    }

    pub fn schema(self) -> String {
        format!("latmis.{}/{VERSION}", self.name())
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    schema: String,
    data: T,
}

#[derive(Debug, Clone)]
pub struct Store {
    pub dir: PathBuf,
}

impl Store {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Store { dir: dir.to_path_buf() })
    }

    pub fn open(dir: &Path) -> Self {
        Store { dir: dir.to_path_buf() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn has(&self, kind: Kind) -> bool {
        self.path(&kind.file()).is_file()
    }

    pub fn write<T: Serialize>(&self, kind: Kind, data: &T) -> Result<()> {
        let env = Envelope { schema: kind.schema(), data };
        self.write_json(&kind.file(), &env)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        Ok(std::fs::write(self.path(name), text)?)
    }

    /// Reads an artifact, accepting any version up to the current one.
    /// Unknown fields are ignored.
    pub fn read<T: DeserializeOwned>(&self, kind: Kind) -> Result<T> {
        let path = self.path(&kind.file());
        let text = std::fs::read_to_string(&path).map_err(|_| Error::MissingArtifact(path.display().to_string()))?;
        let env: Envelope<T> = serde_json::from_str(&text)?;
        check_schema(&env.schema, kind.name())?;
        Ok(env.data)
    }

    pub fn read_opt<T: DeserializeOwned>(&self, kind: Kind) -> Result<Option<T>> {
        if self.has(kind) {
            self.read(kind).map(Some)
        } else {
            Ok(None)
        }
    }
}

pub fn check_schema(schema: &str, name: &str) -> Result<()> {
    let bad = || Error::Parse(format!("expected schema latmis.{name}/N, found {schema}"));
    let (head, version) = schema.rsplit_once('/').ok_or_else(bad)?;
    if head != format!("latmis.{name}") {
        return Err(bad());
    }
    match version.parse::<u32>() {
        Ok(v) if v <= VERSION => Ok(()),
        Ok(v) => Err(Error::Parse(format!("{schema} is newer than supported version {VERSION} (got {v})"))),
        Err(_) => Err(bad()),
    }
}
