//! Network architecture descriptions.
//!
//! A network is a linear chain of layers (no branches, no skip connections)
//! read from a JSON document. Parsing validates the schema strictly — unknown
//! keys and fields that do not apply to a layer's type are rejected with the
//! offending layer named — and shape inference resolves every layer's input
//! and output extents before any cost or simulation work happens.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Height x width x channels of one feature map. There is no batch axis.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TensorShape {
    pub height: u32,
    pub width: u32,
    pub channels: u32,
}

impl TensorShape {
    pub fn new(height: u32, width: u32, channels: u32) -> Self {
        TensorShape {
            height,
            width,
            channels,
        }
    }

    pub fn element_count(&self) -> u64 {
        self.height as u64 * self.width as u64 * self.channels as u64
    }

    pub fn is_flat(&self) -> bool {
        self.height == 1 && self.width == 1
    }
}

impl std::fmt::Display for TensorShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.height, self.width, self.channels)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Padding {
    Same,
    Valid,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Activation {
    None,
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::None => "none",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }
}

/// Layer type tag, used for cost-table rows and split-candidate filtering.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LayerKind {
    Conv2d,
    ConvTranspose2d,
    Dense,
    MaxPool,
    Flatten,
    BatchNorm,
    Dropout,
    Activation,
}

impl LayerKind {
    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Conv2d => "conv2d",
            LayerKind::ConvTranspose2d => "conv_transpose2d",
            LayerKind::Dense => "dense",
            LayerKind::MaxPool => "maxpool",
            LayerKind::Flatten => "flatten",
            LayerKind::BatchNorm => "batchnorm",
            LayerKind::Dropout => "dropout",
            LayerKind::Activation => "activation",
        }
    }

    /// Kinds that multiply-accumulate and therefore carry a nonzero cost.
    pub fn has_macs(self) -> bool {
        matches!(
            self,
            LayerKind::Conv2d | LayerKind::ConvTranspose2d | LayerKind::Dense
        )
    }

    /// Kinds with a kernel-shaped weight tensor (conv and transposed conv).
    pub fn is_conv(self) -> bool {
        matches!(self, LayerKind::Conv2d | LayerKind::ConvTranspose2d)
    }
}

impl std::fmt::Display for LayerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A layer's operation with exactly the parameters that apply to it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum LayerOp {
    Conv2d {
        kernel: (u32, u32),
        filters: u32,
        stride: u32,
        padding: Padding,
        activation: Activation,
    },
    ConvTranspose2d {
        kernel: (u32, u32),
        filters: u32,
        stride: u32,
        activation: Activation,
    },
    Dense {
        units: u32,
        activation: Activation,
    },
    MaxPool {
        kernel: (u32, u32),
        stride: u32,
    },
    Flatten,
    BatchNorm,
    Dropout,
    Activation {
        activation: Activation,
    },
}

impl LayerOp {
    pub fn kind(&self) -> LayerKind {
        match self {
            LayerOp::Conv2d { .. } => LayerKind::Conv2d,
            LayerOp::ConvTranspose2d { .. } => LayerKind::ConvTranspose2d,
            LayerOp::Dense { .. } => LayerKind::Dense,
            LayerOp::MaxPool { .. } => LayerKind::MaxPool,
            LayerOp::Flatten => LayerKind::Flatten,
            LayerOp::BatchNorm => LayerKind::BatchNorm,
            LayerOp::Dropout => LayerKind::Dropout,
            LayerOp::Activation { .. } => LayerKind::Activation,
        }
    }

    pub fn kernel(&self) -> Option<(u32, u32)> {
        match self {
            LayerOp::Conv2d { kernel, .. }
            | LayerOp::ConvTranspose2d { kernel, .. }
            | LayerOp::MaxPool { kernel, .. } => Some(*kernel),
            _ => None,
        }
    }

    pub fn activation(&self) -> Activation {
        match self {
            LayerOp::Conv2d { activation, .. }
            | LayerOp::ConvTranspose2d { activation, .. }
            | LayerOp::Dense { activation, .. }
            | LayerOp::Activation { activation } => *activation,
            _ => Activation::None,
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct LayerSpec {
    pub id: String,
    pub op: LayerOp,
}

impl LayerSpec {
    pub fn kind(&self) -> LayerKind {
        self.op.kind()
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct NetworkSpec {
    pub name: String,
    pub input_shape: TensorShape,
    pub layers: Vec<LayerSpec>,
    /// Per-layer (input, output) shapes, in layer order. Empty until
    /// [`NetworkSpec::infer_shapes`] has run.
    resolved: Vec<(TensorShape, TensorShape)>,
}

impl NetworkSpec {
    pub fn is_inferred(&self) -> bool {
        self.resolved.len() == self.layers.len() && !self.layers.is_empty()
    }

    /// Resolves every layer's input and output shape by chaining the
    /// per-kind shape rules from the network input forward.
    pub fn infer_shapes(&mut self) -> Result<()> {
        let mut shapes = Vec::with_capacity(self.layers.len());
        let mut current = self.input_shape;
        for layer in &self.layers {
            let out = output_shape(&layer.op, current, &layer.id)?;
            shapes.push((current, out));
            current = out;
        }
        self.resolved = shapes;
        Ok(())
    }

    /// (input, output) shapes of the layer at `index`.
    pub fn layer_io(&self, index: usize) -> Result<(TensorShape, TensorShape)> {
        self.resolved
            .get(index)
            .copied()
            .ok_or_else(|| Error::InvalidArgument("network shapes have not been inferred".into()))
    }

    pub fn output_shape(&self) -> Result<TensorShape> {
        self.resolved
            .last()
            .map(|io| io.1)
            .ok_or_else(|| Error::InvalidArgument("network shapes have not been inferred".into()))
    }

    pub fn layer_index(&self, id: &str) -> Result<usize> {
        self.layers
            .iter()
            .position(|l| l.id == id)
            .ok_or_else(|| Error::UnknownLayer(id.to_string()))
    }

    /// Renders the network back into its document form. Parsing the result
    /// yields a structurally identical `NetworkSpec`.
    pub fn to_document(&self) -> String {
        let doc = NetDoc {
            name: self.name.clone(),
            input: [
                self.input_shape.height as i64,
                self.input_shape.width as i64,
                self.input_shape.channels as i64,
            ],
            layers: self.layers.iter().map(layer_to_doc).collect(),
            extra: BTreeMap::new(),
        };
        serde_json::to_string_pretty(&doc).expect("architecture documents always serialize")
    }
}

/// Parses and validates an architecture document. The returned network has
/// not had shapes inferred yet; call [`NetworkSpec::infer_shapes`] next.
pub fn parse(document: &str) -> Result<NetworkSpec> {
    let doc: NetDoc =
        serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))?;
    if let Some(key) = doc.extra.keys().next() {
        return Err(Error::Schema(format!("unknown key {key:?}")));
    }
    if doc.name.is_empty() {
        return Err(Error::Schema("name must be non-empty".into()));
    }
    let input_shape = shape_from_doc(doc.input)?;
    if doc.layers.is_empty() {
        return Err(Error::Schema("layers must be non-empty".into()));
    }

    let mut seen = std::collections::BTreeSet::new();
    let mut layers = Vec::with_capacity(doc.layers.len());
    for layer_doc in &doc.layers {
        let layer = layer_from_doc(layer_doc)?;
        if !seen.insert(layer.id.clone()) {
            return Err(Error::Schema(format!("duplicate layer id {:?}", layer.id)));
        }
        layers.push(layer);
    }

    Ok(NetworkSpec {
        name: doc.name,
        input_shape,
        layers,
        resolved: Vec::new(),
    })
}

/// Convenience: parse a document and infer shapes in one step.
pub fn parse_inferred(document: &str) -> Result<NetworkSpec> {
    let mut net = parse(document)?;
    net.infer_shapes()?;
    Ok(net)
}

fn shape_from_doc(dims: [i64; 3]) -> Result<TensorShape> {
    for d in dims {
        if d < 1 || d > u32::MAX as i64 {
            return Err(Error::Schema(format!(
                "input dimensions must be positive, got {dims:?}"
            )));
        }
    }
    Ok(TensorShape::new(dims[0] as u32, dims[1] as u32, dims[2] as u32))
}

fn output_shape(op: &LayerOp, input: TensorShape, id: &str) -> Result<TensorShape> {
    let out = match op {
        LayerOp::Conv2d {
            kernel,
            filters,
            stride,
            padding,
            ..
        } => {
            let (h, w) = match padding {
                Padding::Same => (
                    ceil_div(input.height, *stride),
                    ceil_div(input.width, *stride),
                ),
                Padding::Valid => (
                    valid_dim(input.height, kernel.0, *stride, id, "height")?,
                    valid_dim(input.width, kernel.1, *stride, id, "width")?,
                ),
            };
            TensorShape::new(h, w, *filters)
        }
        LayerOp::ConvTranspose2d {
            filters, stride, ..
        } => TensorShape::new(
            mul_dim(input.height, *stride, id)?,
            mul_dim(input.width, *stride, id)?,
            *filters,
        ),
        LayerOp::MaxPool { stride, .. } => {
            let h = input.height / *stride;
            let w = input.width / *stride;
            if h == 0 || w == 0 {
                return Err(Error::shape(
                    id,
                    format!("pooling stride {stride} reduces {input} to a zero-sized output"),
                ));
            }
            TensorShape::new(h, w, input.channels)
        }
        LayerOp::Flatten => {
            let n = input.element_count();
            if n > u32::MAX as u64 {
                return Err(Error::shape(id, format!("flattening {input} overflows")));
            }
            TensorShape::new(1, 1, n as u32)
        }
        LayerOp::Dense { units, .. } => {
            if !input.is_flat() {
                return Err(Error::shape(
                    id,
                    format!("dense requires a flat input (got {input}); insert a flatten layer"),
                ));
            }
            TensorShape::new(1, 1, *units)
        }
        LayerOp::BatchNorm | LayerOp::Dropout | LayerOp::Activation { .. } => input,
    };
    Ok(out)
}

fn ceil_div(n: u32, d: u32) -> u32 {
    (n + d - 1) / d
}

fn valid_dim(n: u32, k: u32, stride: u32, id: &str, axis: &str) -> Result<u32> {
    if k > n {
        return Err(Error::shape(
            id,
            format!("kernel {axis} {k} exceeds input {axis} {n} under valid padding"),
        ));
    }
    Ok((n - k) / stride + 1)
}

fn mul_dim(n: u32, stride: u32, id: &str) -> Result<u32> {
    (n as u64 * stride as u64)
        .try_into()
        .map_err(|_| Error::shape(id, format!("upsampled dimension {n}x{stride} overflows")))
}

// --- document schema -------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct NetDoc {
    name: String,
    input: [i64; 3],
    layers: Vec<LayerDoc>,
    #[serde(flatten, skip_serializing)]
    extra: BTreeMap<String, Value>,
}

#[derive(Serialize, Deserialize, Default)]
struct LayerDoc {
    #[serde(default)]
    id: Option<String>,
    #[serde(rename = "type", default)]
    ty: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kernel: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    filters: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    units: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stride: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    padding: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    activation: Option<String>,
    #[serde(flatten, skip_serializing)]
    extra: BTreeMap<String, Value>,
}

/// Per-layer field validator. Tracks which schema fields the layer's type
/// consumed so leftovers can be rejected by name.
struct FieldCheck<'a> {
    id: &'a str,
    doc: &'a LayerDoc,
}

impl<'a> FieldCheck<'a> {
    fn kernel(&self) -> Result<(u32, u32)> {
        let raw = self
            .doc
            .kernel
            .as_ref()
            .ok_or_else(|| Error::layer(self.id, "missing required field \"kernel\""))?;
        if raw.len() != 2 {
            return Err(Error::layer(
                self.id,
                format!("kernel must be [kh, kw], got {} entries", raw.len()),
            ));
        }
        Ok((
            self.positive(raw[0], "kernel height")?,
            self.positive(raw[1], "kernel width")?,
        ))
    }

    fn filters(&self) -> Result<u32> {
        let raw = self
            .doc
            .filters
            .ok_or_else(|| Error::layer(self.id, "missing required field \"filters\""))?;
        self.positive(raw, "filters")
    }

    fn units(&self) -> Result<u32> {
        let raw = self
            .doc
            .units
            .ok_or_else(|| Error::layer(self.id, "missing required field \"units\""))?;
        self.positive(raw, "units")
    }

    fn stride(&self, default: u32) -> Result<u32> {
        match self.doc.stride {
            None => Ok(default),
            Some(raw) => self.positive(raw, "stride"),
        }
    }

    fn padding(&self) -> Result<Padding> {
        match self.doc.padding.as_deref() {
            None | Some("same") => Ok(Padding::Same),
            Some("valid") => Ok(Padding::Valid),
            Some(other) => Err(Error::layer(
                self.id,
                format!("padding must be \"same\" or \"valid\", got {other:?}"),
            )),
        }
    }

    fn activation(&self) -> Result<Activation> {
        match self.doc.activation.as_deref() {
            None | Some("none") => Ok(Activation::None),
            Some("relu") => Ok(Activation::Relu),
            Some("sigmoid") => Ok(Activation::Sigmoid),
            Some("tanh") => Ok(Activation::Tanh),
            Some(other) => Err(Error::layer(
                self.id,
                format!("unknown activation {other:?}"),
            )),
        }
    }

    fn positive(&self, raw: i64, what: &str) -> Result<u32> {
        if raw < 1 || raw > u32::MAX as i64 {
            return Err(Error::layer(
                self.id,
                format!("{what} must be a positive integer, got {raw}"),
            ));
        }
        Ok(raw as u32)
    }

    /// Rejects any field that the layer's type does not use.
    fn forbid_unused(&self, used: &[&str]) -> Result<()> {
        if let Some(key) = self.doc.extra.keys().next() {
            return Err(Error::layer(self.id, format!("unknown field {key:?}")));
        }
        let fields: [(&str, bool); 6] = [
            ("kernel", self.doc.kernel.is_some()),
            ("filters", self.doc.filters.is_some()),
            ("units", self.doc.units.is_some()),
            ("stride", self.doc.stride.is_some()),
            ("padding", self.doc.padding.is_some()),
            ("activation", self.doc.activation.is_some()),
        ];
        for (name, present) in fields {
            if present && !used.contains(&name) {
                return Err(Error::layer(
                    self.id,
                    format!("field {name:?} does not apply to this layer type"),
                ));
            }
        }
        Ok(())
    }
}

fn layer_from_doc(doc: &LayerDoc) -> Result<LayerSpec> {
    let id = doc
        .id
        .clone()
        .ok_or_else(|| Error::Schema("layer missing required field \"id\"".into()))?;
    if id.is_empty() {
        return Err(Error::Schema("layer id must be non-empty".into()));
    }
    let ty = doc
        .ty
        .as_deref()
        .ok_or_else(|| Error::layer(&id, "missing required field \"type\""))?;
    let check = FieldCheck { id: &id, doc };

    let op = match ty {
        "conv2d" => {
            check.forbid_unused(&["kernel", "filters", "stride", "padding", "activation"])?;
            LayerOp::Conv2d {
                kernel: check.kernel()?,
                filters: check.filters()?,
                stride: check.stride(1)?,
                padding: check.padding()?,
                activation: check.activation()?,
            }
        }
        "conv_transpose2d" => {
            check.forbid_unused(&["kernel", "filters", "stride", "activation"])?;
            LayerOp::ConvTranspose2d {
                kernel: check.kernel()?,
                filters: check.filters()?,
                stride: check.stride(1)?,
                activation: check.activation()?,
            }
        }
        "dense" => {
            check.forbid_unused(&["units", "activation"])?;
            LayerOp::Dense {
                units: check.units()?,
                activation: check.activation()?,
            }
        }
        "maxpool" => {
            check.forbid_unused(&["kernel", "stride"])?;
            let kernel = check.kernel()?;
            let stride = check.stride(kernel.0.min(kernel.1))?;
            if stride > kernel.0.min(kernel.1) {
                return Err(Error::layer(
                    &id,
                    format!(
                        "pooling stride {stride} exceeds the kernel ({}x{})",
                        kernel.0, kernel.1
                    ),
                ));
            }
            LayerOp::MaxPool { kernel, stride }
        }
        "flatten" => {
            check.forbid_unused(&[])?;
            LayerOp::Flatten
        }
        "batchnorm" => {
            check.forbid_unused(&[])?;
            LayerOp::BatchNorm
        }
        "dropout" => {
            check.forbid_unused(&[])?;
            LayerOp::Dropout
        }
        "activation" => {
            check.forbid_unused(&["activation"])?;
            LayerOp::Activation {
                activation: check.activation()?,
            }
        }
        other => {
            return Err(Error::layer(&id, format!("unknown layer type {other:?}")));
        }
    };
    Ok(LayerSpec { id, op })
}

fn layer_to_doc(layer: &LayerSpec) -> LayerDoc {
    let mut doc = LayerDoc {
        id: Some(layer.id.clone()),
        ty: Some(layer.kind().name().to_string()),
        ..LayerDoc::default()
    };
    let activation = |a: Activation| match a {
        Activation::None => None,
        other => Some(other.name().to_string()),
    };
    match &layer.op {
        LayerOp::Conv2d {
            kernel,
            filters,
            stride,
            padding,
            activation: act,
        } => {
            doc.kernel = Some(vec![kernel.0 as i64, kernel.1 as i64]);
            doc.filters = Some(*filters as i64);
            doc.stride = Some(*stride as i64);
            doc.padding = Some(
                match padding {
                    Padding::Same => "same",
                    Padding::Valid => "valid",
                }
                .to_string(),
            );
            doc.activation = activation(*act);
        }
        LayerOp::ConvTranspose2d {
            kernel,
            filters,
            stride,
            activation: act,
        } => {
            doc.kernel = Some(vec![kernel.0 as i64, kernel.1 as i64]);
            doc.filters = Some(*filters as i64);
            doc.stride = Some(*stride as i64);
            doc.activation = activation(*act);
        }
        LayerOp::Dense {
            units,
            activation: act,
        } => {
            doc.units = Some(*units as i64);
            doc.activation = activation(*act);
        }
        LayerOp::MaxPool { kernel, stride } => {
            doc.kernel = Some(vec![kernel.0 as i64, kernel.1 as i64]);
            doc.stride = Some(*stride as i64);
        }
        LayerOp::Flatten | LayerOp::BatchNorm | LayerOp::Dropout => {}
        LayerOp::Activation { activation: act } => {
            doc.activation = activation(*act);
        }
    }
    doc
}
