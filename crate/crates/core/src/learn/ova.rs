use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::smo::{svm_decision, svm_train, SvmModel, SvmParams};
use super::SvmError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OvaModel {
    pub classes: Vec<String>,
    pub models: Vec<SvmModel>,
}

pub fn ova_train(x: &[Vec<f64>], labels: &[String], params: &SvmParams) -> Result<OvaModel, SvmError> {
    if x.len() != labels.len() {
        return Err(SvmError::LabelCount { rows: x.len(), labels: labels.len() });
    }
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(SvmError::SingleClass);
    }
    let models = classes
        .par_iter()
        .map(|c| {
            let y: Vec<i8> = labels.iter().map(|l| if l == c { 1 } else { -1 }).collect();
            svm_train(x, &y, params)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(OvaModel { classes, models })
}

pub fn ova_margins(model: &OvaModel, x: &[f64]) -> Result<Vec<f64>, SvmError> {
    model.models.iter().map(|m| svm_decision(m, x)).collect()
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if values[b] >= v => {}
            _ => best = Some(i),
        }
    }
    best
}

pub fn ova_predict<'a>(model: &'a OvaModel, x: &[f64]) -> Result<&'a str, SvmError> {
    let margins = ova_margins(model, x)?;
    let i = argmax_first(&margins).ok_or(SvmError::SingleClass)?;
    Ok(&model.classes[i])
}
