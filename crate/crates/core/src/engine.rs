//! The query loop interface shared by every engine.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::params::{HyperParams, LabelState};
use crate::select;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Las,
    Wnas,
    Asg,
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineKind::Las => "las",
            EngineKind::Wnas => "wnas",
            EngineKind::Asg => "asg",
        })
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "las" => Ok(EngineKind::Las),
            "wnas" => Ok(EngineKind::Wnas),
            "asg" => Ok(EngineKind::Asg),
            other => Err(param("engine", format!("unknown engine `{other}`"))),
        }
    }
}

/// Scores behind one selection: `f`, the rescaled impact factor (when the
/// engine has one and `alpha > 0`), and the criterion `f + alpha * im`.
#[derive(Debug, Clone)]
pub struct Scores {
    pub f: DVector<f64>,
    pub im: Option<DVector<f64>>,
    pub criterion: DVector<f64>,
}

impl Scores {
    pub fn new(f: DVector<f64>, im: Option<DVector<f64>>, alpha: f64) -> Self {
        let criterion = select::criterion(&f, im.as_ref(), alpha);
        Scores { f, im, criterion }
    }

    pub fn best(&self, labels: &LabelState) -> Result<usize> {
        select::argmax_unlabeled(&self.criterion, labels)
    }

    pub fn top_k(&self, labels: &LabelState, k: usize) -> Vec<usize> {
        select::top_k_unlabeled(&self.criterion, labels, k)
    }
}

pub trait ActiveSearch: Send + Sync {
    fn kind(&self) -> EngineKind;

    /// Current label estimate for every point.
    fn f(&self) -> &DVector<f64>;

    fn labels(&self) -> &LabelState;

    fn params(&self) -> &HyperParams;

    fn scores(&self) -> Result<Scores>;

    /// Records label `y` for unlabeled point `i`. On error the engine is
    /// unchanged.
    fn update(&mut self, i: usize, y: u8) -> Result<()>;

    fn next_query(&self) -> Result<usize> {
        if self.labels().n_unlabeled() == 0 {
            return Err(Error::Exhausted);
        }
        self.scores()?.best(self.labels())
    }
}

/// Constructs an engine of the given kind with default options.
pub fn build(
    kind: EngineKind,
    d: &crate::Dataset,
    initial: &[(usize, u8)],
    params: HyperParams,
) -> Result<Box<dyn ActiveSearch>> {
    Ok(match kind {
        EngineKind::Las => Box::new(crate::las::LasState::init(d, initial, params)?),
        EngineKind::Wnas => Box::new(crate::wnas::WnasState::init(d, initial, params)?),
        EngineKind::Asg => Box::new(crate::asg::AsgEngine::new(d, initial, params)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_parses_case_insensitively() {
        assert_eq!("LAS".parse::<EngineKind>().unwrap(), EngineKind::Las);
        assert_eq!(EngineKind::Wnas.to_string(), "wnas");
        assert!(matches!("agr".parse::<EngineKind>(), Err(Error::Param { field: "engine", .. })));
    }

    #[test]
    fn built_engines_agree_on_kind() {
        let d = crate::synthetic::uniform(3, 12, 0);
        for kind in [EngineKind::Las, EngineKind::Wnas, EngineKind::Asg] {
            let e = build(kind, &d, &[(0, 1)], HyperParams::default()).unwrap();
            assert_eq!(e.kind(), kind);
            assert_eq!(e.labels().n_labeled(), 1);
        }
    }
}
