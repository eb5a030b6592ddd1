use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CnnConfig, ForestConfig, Topology};
use crate::padding::PadMethod;
use crate::wavelet::{MAX_LEVEL, MAX_ORDER, MIN_ORDER};

/// How wavelet information reaches the regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Approach {
    /// Raw day as input, no wavelet transform.
    Direct,
    /// One model per reconstructed component; forecasts are summed.
    Mm,
    /// One model with the coefficient bands as input channels.
    Mc,
    /// One network with one input branch per coefficient band.
    Mi,
}

impl Approach {
    pub fn uses_wavelet(self) -> bool {
        !matches!(self, Approach::Direct)
    }
}

/// Regressor family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelKind {
    Persistence,
    Lr,
    Rf,
    Cnn,
}

macro_rules! upper_enum_text {
    ($t:ty, $($v:ident => $s:literal),+) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(<$t>::$v => $s),+ })
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_uppercase().as_str() {
                    $($s => Ok(<$t>::$v),)+
                    _ => Err(Error::Config(format!(
                        concat!("unknown ", stringify!($t), " {:?} (expected one of: ", $($s, " "),+, ")"),
                        s
                    ))),
                }
            }
        }
    };
}

upper_enum_text!(Approach, Direct => "DIRECT", Mm => "MM", Mc => "MC", Mi => "MI");
upper_enum_text!(ModelKind, Persistence => "PERSISTENCE", Lr => "LR", Rf => "RF", Cnn => "CNN");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WaveletConfig {
    /// Daubechies order `M` (`db1` is Haar).
    pub order: usize,
    /// Decomposition level `DL`.
    pub level: usize,
    pub padding: PadMethod,
}

impl WaveletConfig {
    pub fn n_coeff(&self) -> usize {
        self.level + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub approach: Approach,
    pub model: ModelKind,
    pub wavelet: Option<WaveletConfig>,
    pub seed: u64,
    /// Days at the start of the series used for training.
    pub train_days: usize,
    /// Trailing share of training samples held out for early stopping.
    pub val_fraction: f64,
    pub forest: ForestConfig,
    /// `topology` is derived from the approach.
    pub cnn: CnnConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            approach: Approach::Direct,
            model: ModelKind::Lr,
            wavelet: None,
            seed: 0,
            train_days: 365,
            val_fraction: 0.3,
            forest: ForestConfig::default(),
            cnn: CnnConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn new(approach: Approach, model: ModelKind, wavelet: Option<WaveletConfig>) -> Self {
        Self {
            approach,
            model,
            wavelet,
            ..Default::default()
        }
    }

    /// Short name such as `LR`, `LR_MC` or `CNN_MI`.
    pub fn label(&self) -> String {
        match self.approach {
            Approach::Direct => self.model.to_string(),
            a => format!("{}_{}", self.model, a),
        }
    }

    pub(crate) fn topology(&self) -> Topology {
        match self.approach {
            Approach::Mi => Topology::Mi,
            _ => Topology::Mc,
        }
    }

    /// Every violated rule, joined into one error.
    pub fn validate(&self) -> Result<()> {
        let mut errs = self.violations();
        if errs.is_empty() {
            Ok(())
        } else {
            errs.dedup();
            Err(Error::Config(errs.join("; ")))
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.approach == Approach::Mi && self.model != ModelKind::Cnn {
            errs.push(format!("MI requires the CNN model, got {}", self.model));
        }
        if self.model == ModelKind::Persistence && self.approach != Approach::Direct {
            errs.push(format!("persistence takes no wavelet features, got approach {}", self.approach));
        }
        match (self.approach.uses_wavelet(), &self.wavelet) {
            (true, None) => errs.push(format!("approach {} needs wavelet settings", self.approach)),
            (false, Some(_)) => errs.push("approach DIRECT takes no wavelet settings".into()),
            (true, Some(w)) => {
                if !(MIN_ORDER..=MAX_ORDER).contains(&w.order) {
                    errs.push(format!("wavelet order must be in [{MIN_ORDER}, {MAX_ORDER}], got {}", w.order));
                }
                if !(1..=MAX_LEVEL).contains(&w.level) {
                    errs.push(format!("decomposition level must be in [1, {MAX_LEVEL}], got {}", w.level));
                }
            }
            (false, None) => {}
        }
        if self.train_days < 2 {
            errs.push(format!("train_days must be at least 2, got {}", self.train_days));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            errs.push(format!("val_fraction must be in (0, 1), got {}", self.val_fraction));
        }
        if self.model == ModelKind::Rf && self.forest.n_estimators == 0 {
            errs.push("forest.n_estimators must be positive".into());
        }
        if self.model == ModelKind::Cnn {
            if let Err(Error::Config(m)) = self.cnn.validate() {
                errs.push(format!("cnn: {m}"));
            }
        }
        errs
    }
}
