//! Synthetic graph corpora built from repeated block templates.

use serde::{Deserialize, Serialize};

use crate::error::IngestError;
use crate::model::{NodeId, NodeKind, RawGraph};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockOp {
    /// Path relative to the block namespace, may contain sub-namespaces.
    pub path: String,
    pub op_type: String,
    /// Parameter nodes feeding this op.
    #[serde(default)]
    pub params: usize,
    #[serde(default)]
    pub constants: usize,
}

/// A small graph copied `repeats` times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTemplate {
    pub name: String,
    pub ops: Vec<BlockOp>,
    /// Internal edges as indices into `ops`.
    pub edges: Vec<(usize, usize)>,
    pub entry: usize,
    pub exit: usize,
}

impl BlockTemplate {
    /// `op_types` connected in sequence, each op in its own slot of the block.
    pub fn chain(name: &str, op_types: &[&str]) -> BlockTemplate {
        let ops = op_types
            .iter()
            .enumerate()
            .map(|(i, t)| BlockOp {
                path: format!("{t}-op{i}"),
                op_type: (*t).to_owned(),
                params: 0,
                constants: 0,
            })
            .collect::<Vec<_>>();
        let n = ops.len();
        BlockTemplate {
            name: name.to_owned(),
            ops,
            edges: (1..n).map(|i| (i - 1, i)).collect(),
            entry: 0,
            exit: n.saturating_sub(1),
        }
    }

    /// `units` sub-namespaces `{i}_Unit`, each a Conv2D→BatchNorm→ReLU chain,
    /// closed by an `Add` at block level. Convolutions carry one weight.
    pub fn conv_units(name: &str, units: usize) -> BlockTemplate {
        let mut ops = Vec::new();
        let mut edges = Vec::new();
        for u in 0..units {
            for (k, t) in ["Conv2D", "BatchNorm", "ReLU"].iter().enumerate() {
                let i = ops.len();
                ops.push(BlockOp {
                    path: format!("{u}_Unit/{t}-op{k}"),
                    op_type: (*t).to_owned(),
                    params: usize::from(k == 0),
                    constants: 0,
                });
                if i > 0 {
                    edges.push((i - 1, i));
                }
            }
        }
        let add = ops.len();
        ops.push(BlockOp {
            path: "Add-op".to_owned(),
            op_type: "Add".to_owned(),
            params: 0,
            constants: 0,
        });
        if add > 0 {
            edges.push((add - 1, add));
        }
        BlockTemplate {
            name: name.to_owned(),
            ops,
            edges,
            entry: 0,
            exit: add,
        }
    }

    pub fn data_nodes(&self) -> usize {
        self.ops.iter().map(|o| o.params + o.constants).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Wiring {
    /// source → copy 0 → copy 1 → … → sink
    Chain,
    /// source → every copy → sink
    ParallelSameEndpoints,
    /// source → every copy, no sink
    FanOut,
    /// every copy → sink, no source
    FanIn,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub block: BlockTemplate,
    pub repeats: usize,
    pub wiring: Wiring,
    /// Namespace segments the copies and endpoints live under.
    pub namespace: Vec<String>,
}

impl SyntheticSpec {
    fn prefix(&self) -> String {
        self.namespace.join("/")
    }

    fn join(&self, rest: &str) -> String {
        if self.namespace.is_empty() {
            rest.to_owned()
        } else {
            format!("{}/{}", self.prefix(), rest)
        }
    }

    pub fn source(&self) -> Option<String> {
        match self.wiring {
            Wiring::FanIn => None,
            _ => Some(self.join("source")),
        }
    }

    pub fn sink(&self) -> Option<String> {
        match self.wiring {
            Wiring::FanOut => None,
            _ => Some(self.join("sink")),
        }
    }

    /// Operations and data nodes this spec generates.
    pub fn expected_nodes(&self) -> usize {
        let endpoints = usize::from(self.source().is_some()) + usize::from(self.sink().is_some());
        self.repeats * (self.block.ops.len() + self.block.data_nodes()) + endpoints
    }

    pub fn expected_edges(&self) -> usize {
        let per_copy = self.block.edges.len() + self.block.data_nodes();
        let wiring = match self.wiring {
            Wiring::Chain => self.repeats + 1,
            Wiring::ParallelSameEndpoints => 2 * self.repeats,
            Wiring::FanOut | Wiring::FanIn => self.repeats,
        };
        self.repeats * per_copy + wiring
    }

    fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: &str| Err(IngestError::InvalidSpec(m.to_owned()));
        if self.repeats == 0 {
            return bad("repeats must be at least 1");
        }
        if self.block.ops.is_empty() {
            return bad("block has no operations");
        }
        let n = self.block.ops.len();
        if self.block.entry >= n || self.block.exit >= n {
            return bad("block entry/exit out of range");
        }
        if self.block.edges.iter().any(|&(a, b)| a >= n || b >= n) {
            return bad("block edge index out of range");
        }
        let mut paths: Vec<&str> = self.block.ops.iter().map(|o| o.path.as_str()).collect();
        paths.sort_unstable();
        if paths.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate op path in block");
        }
        for p in &paths {
            if NodeId::new(*p).is_err() {
                return bad("invalid op path in block");
            }
        }
        if self.namespace.iter().any(|s| s.is_empty() || s.contains('/')) {
            return bad("invalid namespace segment");
        }
        Ok(())
    }

    fn copy_path(&self, copy: usize, op: &str) -> String {
        self.join(&format!("{copy}_{}/{op}", self.block.name))
    }

    /// Appends this spec's nodes and edges to `g`.
    pub fn emit_into(&self, g: &mut RawGraph) -> Result<(), IngestError> {
        self.validate()?;
        let source = self.source();
        let sink = self.sink();
        if let Some(s) = &source {
            g.op(s, "Identity");
        }
        if let Some(s) = &sink {
            g.op(s, "Concat");
        }
        let mut prev_exit = source.clone();
        for copy in 0..self.repeats {
            for op in &self.block.ops {
                let path = self.copy_path(copy, &op.path);
                g.op(&path, &op.op_type);
                for k in 0..op.params {
                    let p = format!("{path}.weight{k}");
                    g.add(&p, NodeKind::Parameter).link(&p, &path);
                }
                for k in 0..op.constants {
                    let c = format!("{path}.const{k}");
                    g.add(&c, NodeKind::Constant).link(&c, &path);
                }
            }
            for &(a, b) in &self.block.edges {
                g.link(
                    &self.copy_path(copy, &self.block.ops[a].path),
                    &self.copy_path(copy, &self.block.ops[b].path),
                );
            }
            let entry = self.copy_path(copy, &self.block.ops[self.block.entry].path);
            let exit = self.copy_path(copy, &self.block.ops[self.block.exit].path);
            match self.wiring {
                Wiring::Chain => {
                    if let Some(p) = &prev_exit {
                        g.link(p, &entry);
                    }
                    prev_exit = Some(exit);
                }
                Wiring::ParallelSameEndpoints => {
                    g.link(source.as_deref().unwrap(), &entry);
                    g.link(&exit, sink.as_deref().unwrap());
                }
                Wiring::FanOut => {
                    g.link(source.as_deref().unwrap(), &entry);
                }
                Wiring::FanIn => {
                    g.link(&exit, sink.as_deref().unwrap());
                }
            }
        }
        if let (Wiring::Chain, Some(p), Some(s)) = (self.wiring, &prev_exit, &sink) {
            g.link(p, s);
        }
        Ok(())
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<RawGraph, IngestError> {
    let mut g = RawGraph::new(format!("synthetic-{}", spec.block.name));
    spec.emit_into(&mut g)?;
    Ok(g)
}

/// Several specs whose sinks feed the next spec's source.
pub fn generate_corpus(name: &str, stages: &[SyntheticSpec]) -> Result<RawGraph, IngestError> {
    let mut g = RawGraph::new(name);
    let mut prev_sink: Option<String> = None;
    for stage in stages {
        stage.emit_into(&mut g)?;
        if let (Some(p), Some(s)) = (&prev_sink, stage.source()) {
            g.link(p, &s);
        }
        prev_sink = stage.sink();
    }
    Ok(g)
}

/// ResNet-like corpus: four stages, each holding one family of identical
/// residual blocks between a shared source and sink.
pub fn resnet_like_stages() -> Vec<SyntheticSpec> {
    let families = [
        ("Bottleneck", 3, 24),
        ("Basic", 2, 32),
        ("Wide", 4, 24),
        ("Deep", 5, 16),
    ];
    families
        .iter()
        .enumerate()
        .map(|(i, &(name, units, repeats))| SyntheticSpec {
            block: BlockTemplate::conv_units(name, units),
            repeats,
            wiring: Wiring::ParallelSameEndpoints,
            namespace: vec!["net".to_owned(), format!("stage{}", i + 1)],
        })
        .collect()
}

pub fn resnet_like() -> RawGraph {
    generate_corpus("resnet_like", &resnet_like_stages()).expect("preset is valid")
}

fn bert_layer(name: &str) -> BlockTemplate {
    let ops: &[(&str, &str, usize)] = &[
        ("input", "Identity", 0),
        ("attention/self/query/MatMul", "MatMul", 1),
        ("attention/self/query/BiasAdd", "BiasAdd", 1),
        ("attention/self/key/MatMul", "MatMul", 1),
        ("attention/self/key/BiasAdd", "BiasAdd", 1),
        ("attention/self/value/MatMul", "MatMul", 1),
        ("attention/self/value/BiasAdd", "BiasAdd", 1),
        ("attention/self/scores/BatchMatMul", "BatchMatMul", 0),
        ("attention/self/scores/Mul", "Mul", 0),
        ("attention/self/softmax/Softmax", "Softmax", 0),
        ("attention/self/context/BatchMatMul", "BatchMatMul", 0),
        ("attention/output/dense/MatMul", "MatMul", 1),
        ("attention/output/dense/BiasAdd", "BiasAdd", 1),
        ("attention/output/Add", "Add", 0),
        ("attention/output/LayerNorm", "LayerNorm", 2),
        ("intermediate/dense/MatMul", "MatMul", 1),
        ("intermediate/dense/BiasAdd", "BiasAdd", 1),
        ("intermediate/GeLU", "GeLU", 0),
        ("output/dense/MatMul", "MatMul", 1),
        ("output/dense/BiasAdd", "BiasAdd", 1),
        ("output/Add", "Add", 0),
        ("output/LayerNorm", "LayerNorm", 2),
    ];
    let idx = |p: &str| ops.iter().position(|o| o.0 == p).unwrap();
    let mut edges = Vec::new();
    let mut e = |a: &str, b: &str| edges.push((idx(a), idx(b)));
    // The layer input fans out to q/k/v and to the residual add.
    e("input", "attention/self/query/MatMul");
    e("input", "attention/self/key/MatMul");
    e("input", "attention/self/value/MatMul");
    e("input", "attention/output/Add");
    e("attention/self/query/MatMul", "attention/self/query/BiasAdd");
    e("attention/self/key/MatMul", "attention/self/key/BiasAdd");
    e("attention/self/value/MatMul", "attention/self/value/BiasAdd");
    e("attention/self/query/BiasAdd", "attention/self/scores/BatchMatMul");
    e("attention/self/key/BiasAdd", "attention/self/scores/BatchMatMul");
    e("attention/self/scores/BatchMatMul", "attention/self/scores/Mul");
    e("attention/self/scores/Mul", "attention/self/softmax/Softmax");
    e("attention/self/softmax/Softmax", "attention/self/context/BatchMatMul");
    e("attention/self/value/BiasAdd", "attention/self/context/BatchMatMul");
    e("attention/self/context/BatchMatMul", "attention/output/dense/MatMul");
    e("attention/output/dense/MatMul", "attention/output/dense/BiasAdd");
    e("attention/output/dense/BiasAdd", "attention/output/Add");
    e("attention/output/Add", "attention/output/LayerNorm");
    e("attention/output/LayerNorm", "intermediate/dense/MatMul");
    e("attention/output/LayerNorm", "output/Add");
    e("intermediate/dense/MatMul", "intermediate/dense/BiasAdd");
    e("intermediate/dense/BiasAdd", "intermediate/GeLU");
    e("intermediate/GeLU", "output/dense/MatMul");
    e("output/dense/MatMul", "output/dense/BiasAdd");
    e("output/dense/BiasAdd", "output/Add");
    e("output/Add", "output/LayerNorm");
    BlockTemplate {
        name: name.to_owned(),
        ops: ops
            .iter()
            .map(|&(p, t, params)| BlockOp {
                path: p.to_owned(),
                op_type: t.to_owned(),
                params,
                constants: 0,
            })
            .collect(),
        edges,
        entry: idx("input"),
        exit: idx("output/LayerNorm"),
    }
}

/// BERT-like graph: embeddings, `layers` chained encoder layers, a pooler,
/// loss, and an optimizer namespace with gradient clipping.
pub fn bert_like(layers: usize) -> RawGraph {
    let mut g = RawGraph::new("bert_like");
    let emb = "Default/network/bert/embeddings";
    g.op(&format!("{emb}/word/Gather"), "Gather")
        .op(&format!("{emb}/position/Gather"), "Gather")
        .op(&format!("{emb}/Add"), "Add")
        .op(&format!("{emb}/LayerNorm"), "LayerNorm");
    g.add(&format!("{emb}/word/table"), NodeKind::Parameter)
        .add(&format!("{emb}/position/table"), NodeKind::Parameter)
        .add(&format!("{emb}/input_ids"), NodeKind::Constant)
        .link(&format!("{emb}/word/table"), &format!("{emb}/word/Gather"))
        .link(&format!("{emb}/input_ids"), &format!("{emb}/word/Gather"))
        .link(&format!("{emb}/position/table"), &format!("{emb}/position/Gather"))
        .link(&format!("{emb}/word/Gather"), &format!("{emb}/Add"))
        .link(&format!("{emb}/position/Gather"), &format!("{emb}/Add"))
        .link(&format!("{emb}/Add"), &format!("{emb}/LayerNorm"));
    let spec = SyntheticSpec {
        block: bert_layer("layer"),
        repeats: layers.max(1),
        wiring: Wiring::Chain,
        namespace: vec![
            "Default".into(),
            "network".into(),
            "bert".into(),
            "encoder".into(),
        ],
    };
    spec.emit_into(&mut g).expect("preset is valid");
    let enc = spec.prefix();
    g.link(&format!("{emb}/LayerNorm"), &format!("{enc}/source"));
    let pooler = "Default/network/bert/pooler";
    g.op(&format!("{pooler}/dense/MatMul"), "MatMul")
        .op(&format!("{pooler}/Tanh"), "Tanh")
        .link(&format!("{enc}/sink"), &format!("{pooler}/dense/MatMul"))
        .link(&format!("{pooler}/dense/MatMul"), &format!("{pooler}/Tanh"));
    let loss = "Default/network/loss";
    g.op(&format!("{loss}/SoftmaxCrossEntropy"), "SoftmaxCrossEntropyWithLogits")
        .op(&format!("{loss}/ReduceMean"), "ReduceMean")
        .link(&format!("{pooler}/Tanh"), &format!("{loss}/SoftmaxCrossEntropy"))
        .link(&format!("{loss}/SoftmaxCrossEntropy"), &format!("{loss}/ReduceMean"));
    let clip = "Default/optimizer/clip_gradients_ClipGradients";
    g.op(&format!("{clip}/Square"), "Square")
        .op(&format!("{clip}/ReduceSum"), "ReduceSum")
        .op(&format!("{clip}/Sqrt"), "Sqrt")
        .op(&format!("{clip}/Maximum"), "Maximum")
        .op(&format!("{clip}/RealDiv"), "RealDiv")
        .add(&format!("{clip}/clip_norm"), NodeKind::Constant)
        .link(&format!("{clip}/clip_norm"), &format!("{clip}/Maximum"))
        .link(&format!("{loss}/ReduceMean"), &format!("{clip}/Square"))
        .link(&format!("{clip}/Square"), &format!("{clip}/ReduceSum"))
        .link(&format!("{clip}/ReduceSum"), &format!("{clip}/Sqrt"))
        .link(&format!("{clip}/Sqrt"), &format!("{clip}/Maximum"))
        .link(&format!("{clip}/Maximum"), &format!("{clip}/RealDiv"))
        .link(&format!("{loss}/ReduceMean"), &format!("{clip}/RealDiv"));
    let opt = "Default/optimizer/adam";
    g.op(&format!("{opt}/ApplyAdam"), "ApplyAdam")
        .link(&format!("{clip}/RealDiv"), &format!("{opt}/ApplyAdam"));
    g
}

/// Graph with at least `min_nodes` nodes made of chained stages of parallel
/// residual blocks, used for scale measurements.
pub fn scale_graph(min_nodes: usize) -> RawGraph {
    let block = BlockTemplate::conv_units("Block", 3);
    let per_block = block.ops.len() + block.data_nodes();
    let per_stage_blocks = 16;
    let per_stage = per_stage_blocks * per_block + 2;
    let stages = min_nodes.div_ceil(per_stage).max(1);
    let specs: Vec<SyntheticSpec> = (0..stages)
        .map(|s| SyntheticSpec {
            block: block.clone(),
            repeats: per_stage_blocks,
            wiring: Wiring::ParallelSameEndpoints,
            namespace: vec![
                "model".to_owned(),
                format!("group{}", s / 8),
                format!("stage{s}"),
            ],
        })
        .collect();
    generate_corpus("scale", &specs).expect("preset is valid")
}
