//! Graph files on disk and the live sessions built from them.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use cgs_core::layout::{layout_graph, stable_relayout, LayoutParams, LayoutResult, Pin};
use cgs_core::{build_hierarchy, parse_graph_file, IngestError, ProcessedGraph, Session, SessionOptions};
use serde::Serialize;

use crate::error::ApiError;

#[derive(Clone, Debug, Serialize)]
pub struct GraphInfo {
    pub name: String,
    pub bytes: u64,
}

/// A directory of `*.json` graph files, parsed on first use.
#[derive(Debug)]
pub struct GraphLibrary {
    dir: PathBuf,
    loaded: Mutex<HashMap<String, Arc<ProcessedGraph>>>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !name.starts_with('.')
}

impl GraphLibrary {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        GraphLibrary {
            dir: dir.into(),
            loaded: Mutex::new(HashMap::new()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Graph files sorted by name.
    pub fn list(&self) -> std::io::Result<Vec<GraphInfo>> {
        let mut out = Vec::new();
        for entry in std::fs::read_dir(&self.dir)? {
            let entry = entry?;
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let Some(name) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            if valid_name(name) && entry.file_type()?.is_file() {
                out.push(GraphInfo {
                    name: name.to_owned(),
                    bytes: entry.metadata()?.len(),
                });
            }
        }
        out.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(out)
    }

    pub fn load(&self, name: &str) -> Result<Arc<ProcessedGraph>, ApiError> {
        if !valid_name(name) {
            return Err(ApiError::UnknownGraph(name.to_owned()));
        }
        if let Some(pg) = self.loaded.lock().unwrap().get(name) {
            return Ok(pg.clone());
        }
        let path = self.dir.join(format!("{name}.json"));
        let bytes = std::fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => ApiError::UnknownGraph(name.to_owned()),
            _ => ApiError::Internal(format!("{}: {e}", path.display())),
        })?;
        let invalid = |message: String| ApiError::InvalidGraph {
            name: name.to_owned(),
            message,
        };
        let raw = parse_graph_file(&bytes).map_err(|e: IngestError| invalid(e.to_string()))?;
        let pg = Arc::new(build_hierarchy(&raw).map_err(|e| invalid(e.to_string()))?);
        self.loaded.lock().unwrap().insert(name.to_owned(), pg.clone());
        Ok(pg)
    }
}

/// One client session: the engine session plus serialized caches.
#[derive(Debug)]
pub struct ApiSession {
    pub id: String,
    pub graph: String,
    pub session: Session,
    visible: Option<(u64, Arc<Vec<u8>>)>,
    layout: Option<LayoutResult>,
    layout_bytes: Option<(u64, LayoutParams, Arc<Vec<u8>>)>,
}

impl ApiSession {
    pub fn new(id: String, graph: String, session: Session) -> Self {
        ApiSession {
            id,
            graph,
            session,
            visible: None,
            layout: None,
            layout_bytes: None,
        }
    }

    pub fn revision(&self) -> u64 {
        self.session.revision()
    }

    pub fn check_revision(&self, given: u64) -> Result<(), ApiError> {
        let current = self.revision();
        if given == current {
            Ok(())
        } else {
            Err(ApiError::StaleRevision { given, current })
        }
    }

    /// Visible-graph JSON, serialized once per revision.
    pub fn visible_json(&mut self) -> Result<Arc<Vec<u8>>, ApiError> {
        let rev = self.revision();
        if let Some((r, bytes)) = &self.visible {
            if *r == rev {
                return Ok(bytes.clone());
            }
        }
        let vis = self.session.derive_visible()?;
        let bytes = Arc::new(vis.to_json());
        self.visible = Some((rev, bytes.clone()));
        Ok(bytes)
    }

    /// Layout JSON for the current revision. A new revision is laid out
    /// relative to the previous layout so unchanged regions keep their
    /// order and the response carries a correspondence map.
    pub fn layout_json(&mut self, params: &LayoutParams) -> Result<Arc<Vec<u8>>, ApiError> {
        let rev = self.revision();
        if let Some((r, p, bytes)) = &self.layout_bytes {
            if *r == rev && p == params {
                return Ok(bytes.clone());
            }
        }
        self.relayout(params, None)
    }

    /// The layout most recently served, if any.
    pub fn current_layout(&self) -> Option<&LayoutResult> {
        self.layout.as_ref()
    }

    /// Lays out again with a drag hint.
    pub fn drag(&mut self, params: &LayoutParams, pin: &Pin) -> Result<Arc<Vec<u8>>, ApiError> {
        self.relayout(params, Some(pin))
    }

    fn relayout(&mut self, params: &LayoutParams, pin: Option<&Pin>) -> Result<Arc<Vec<u8>>, ApiError> {
        params.validate()?;
        let vis = self.session.derive_visible()?;
        if let Some(pin) = pin {
            if !self.layout.as_ref().is_some_and(|l| l.boxes.contains_key(&pin.node)) {
                return Err(ApiError::NotFound(format!("no box for {}", pin.node)));
            }
        }
        let l = match &self.layout {
            Some(prev) if prev.flow == params.flow => stable_relayout(prev, &vis, params, pin)?,
            _ => layout_graph(&vis, params)?,
        };
        let bytes = Arc::new(l.to_json());
        self.layout = Some(l);
        self.layout_bytes = Some((self.revision(), params.clone(), bytes.clone()));
        Ok(bytes)
    }
}

/// Shared server state.
#[derive(Debug)]
pub struct AppState {
    pub library: GraphLibrary,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<ApiSession>>>>,
}

impl AppState {
    pub fn new(library: GraphLibrary) -> Self {
        AppState {
            library,
            sessions: RwLock::new(BTreeMap::new()),
        }
    }

    pub fn create(&self, graph: &str, options: SessionOptions) -> Result<Arc<Mutex<ApiSession>>, ApiError> {
        let pg = self.library.load(graph)?;
        let session = Session::new(pg, options)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let s = Arc::new(Mutex::new(ApiSession::new(id.clone(), graph.to_owned(), session)));
        self.sessions.write().unwrap().insert(id, s.clone());
        Ok(s)
    }

    pub fn get(&self, id: &str) -> Result<Arc<Mutex<ApiSession>>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::UnknownSession(id.to_owned()))
    }

    pub fn remove(&self, id: &str) -> Result<(), ApiError> {
        self.sessions
            .write()
            .unwrap()
            .remove(id)
            .map(|_| ())
            .ok_or_else(|| ApiError::UnknownSession(id.to_owned()))
    }
}
