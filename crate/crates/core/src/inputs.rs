//! Graph-derived inputs shared by every model: features, meta-path
//! adjacencies and schema neighborhoods, prepared once per dataset.

use std::sync::Arc;

use crate::csr::Csr;
use crate::diff::{SparseRows, Tensor};
use crate::error::{Error, Result};
use crate::hin::{compose_metapath_adjacency, schema_neighbors, Hin, MetaPath, MetaPathAdjacency, SchemaNeighborhood};
use crate::scalar::Scalar;

/// Raw node features, one matrix per node type in type order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore<S> {
    per_type: Vec<Arc<SparseRows<S>>>,
}

impl<S: Scalar> FeatureStore<S> {
    pub fn new(hin: &Hin, dense: Vec<Tensor<S>>) -> Result<Self> {
        if dense.len() != hin.types().len() {
            return Err(Error::Dataset(format!("{} feature matrices for {} node types", dense.len(), hin.types().len())));
        }
        for (t, x) in dense.iter().enumerate() {
            let ty = &hin.types()[t];
            if x.rows() != ty.count {
                return Err(Error::Dataset(format!("features of {}: {} rows for {} nodes", ty.name, x.rows(), ty.count)));
            }
            if !x.all_finite() {
                return Err(Error::Dataset(format!("features of {} contain non-finite values", ty.name)));
            }
        }
        Ok(FeatureStore { per_type: dense.iter().map(|x| Arc::new(SparseRows::from_dense(x))).collect() })
    }

    /// One-hot (identity) features for every type except those given.
    pub fn with_one_hot_defaults(hin: &Hin, given: Vec<(usize, Tensor<S>)>) -> Result<Self> {
        let mut dense: Vec<Option<Tensor<S>>> = vec![None; hin.types().len()];
        for (t, x) in given {
            dense[t] = Some(x);
        }
        let dense = dense
            .into_iter()
            .enumerate()
            .map(|(t, x)| x.unwrap_or_else(|| SparseRows::identity(hin.node_count(t)).to_dense()))
            .collect();
        Self::new(hin, dense)
    }

    pub fn of_type(&self, ty: usize) -> &Arc<SparseRows<S>> {
        &self.per_type[ty]
    }

    pub fn dim(&self, ty: usize) -> usize {
        self.per_type[ty].cols()
    }

    pub fn num_types(&self) -> usize {
        self.per_type.len()
    }
}

/// Everything the models read from the graph.
#[derive(Debug, Clone)]
pub struct GraphInputs<S> {
    pub hin: Hin,
    pub metapaths: Vec<MetaPath>,
    pub adjacencies: Vec<MetaPathAdjacency>,
    /// Same structures as `adjacencies`, shared with tape operators.
    pub channels: Vec<Arc<Csr>>,
    pub schema: SchemaNeighborhood,
    pub schema_csr: Arc<Csr>,
    pub features: FeatureStore<S>,
    pub num_classes: usize,
}

impl<S: Scalar> GraphInputs<S> {
    pub fn new(hin: Hin, metapaths: Vec<MetaPath>, features: FeatureStore<S>, num_classes: usize) -> Result<Self> {
        if metapaths.is_empty() {
            return Err(Error::Config("at least one meta-path is required".into()));
        }
        if num_classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {num_classes}")));
        }
        if features.num_types() != hin.types().len() {
            return Err(Error::Dataset("feature store does not match the graph's node types".into()));
        }
        let adjacencies = metapaths.iter().map(|mp| compose_metapath_adjacency(&hin, mp)).collect::<Result<Vec<_>>>()?;
        let channels = adjacencies.iter().map(|a| Arc::new(a.csr.clone())).collect();
        let schema = schema_neighbors(&hin);
        let schema_csr = Arc::new(schema.csr.clone());
        Ok(GraphInputs { hin, metapaths, adjacencies, channels, schema, schema_csr, features, num_classes })
    }

    pub fn n_target(&self) -> usize {
        self.hin.target_count()
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }
}
