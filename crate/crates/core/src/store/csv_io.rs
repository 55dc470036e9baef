//! Long-format CSV: one row per `(size, pretrain_seed, finetune_seed,
//! checkpoint, instance_id)` cell.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::store::tensor::{PredictionTensor, SizeBlock, TensorParts, ValueKind};

/// Column names. The defaults match the canonical header
/// `size,pretrain_seed,finetune_seed,checkpoint,instance_id,correct`.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub size: String,
    pub pretrain_seed: String,
    pub finetune_seed: String,
    pub checkpoint: String,
    pub instance_id: String,
    pub correct: String,
    pub prob: String,
    pub pred_label: String,
    pub gold_label: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            size: "size".into(),
            pretrain_seed: "pretrain_seed".into(),
            finetune_seed: "finetune_seed".into(),
            checkpoint: "checkpoint".into(),
            instance_id: "instance_id".into(),
            correct: "correct".into(),
            prob: "prob".into(),
            pred_label: "pred_label".into(),
            gold_label: "gold_label".into(),
        }
    }
}

struct Columns {
    size: usize,
    pretrain: usize,
    finetune: usize,
    checkpoint: Option<usize>,
    instance: usize,
    value: usize,
    kind: ValueKind,
    pred: Option<usize>,
    gold: Option<usize>,
}

impl Columns {
    fn resolve(headers: &csv::StringRecord, schema: &CsvSchema) -> Result<Self> {
        let find = |name: &str| headers.iter().position(|h| h.trim() == name);
        let require = |name: &str| {
            find(name).ok_or_else(|| Error::Schema(format!("missing required column {name:?}")))
        };
        let (value, kind) = match (find(&schema.correct), find(&schema.prob)) {
            (Some(_), Some(_)) => {
                return Err(Error::Schema(format!(
                    "both {:?} and {:?} columns present",
                    schema.correct, schema.prob
                )))
            }
            (Some(c), None) => (c, ValueKind::Correctness),
            (None, Some(p)) => (p, ValueKind::Probability),
            (None, None) => {
                return Err(Error::Schema(format!(
                    "need a {:?} or {:?} column",
                    schema.correct, schema.prob
                )))
            }
        };
        Ok(Columns {
            size: require(&schema.size)?,
            pretrain: require(&schema.pretrain_seed)?,
            finetune: require(&schema.finetune_seed)?,
            checkpoint: find(&schema.checkpoint),
            instance: require(&schema.instance_id)?,
            value,
            kind,
            pred: find(&schema.pred_label),
            gold: find(&schema.gold_label),
        })
    }
}

type CellKey = (usize, i64, i64, i64, usize);

pub fn ingest_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<PredictionTensor> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<PredictionTensor> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols = Columns::resolve(&headers, schema)?;

    let mut size_labels: Vec<String> = Vec::new();
    let mut size_lookup: HashMap<String, usize> = HashMap::new();
    let mut instance_ids: Vec<String> = Vec::new();
    let mut instance_lookup: HashMap<String, usize> = HashMap::new();
    let mut pretrain_sets: Vec<BTreeSet<i64>> = Vec::new();
    let mut finetune_set = BTreeSet::new();
    let mut checkpoint_set = BTreeSet::new();
    let mut gold: Vec<Option<String>> = Vec::new();
    let mut cells: HashMap<CellKey, (f64, Option<String>)> = HashMap::new();

    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |idx: usize| -> Result<&str> {
            record
                .get(idx)
                .map(str::trim)
                .ok_or_else(|| Error::Schema(format!("line {line}: too few fields")))
        };
        let int = |idx: usize, what: &str| -> Result<i64> {
            let raw = field(idx)?;
            raw.parse::<i64>()
                .map_err(|_| Error::Schema(format!("line {line}: {what} {raw:?} is not an integer")))
        };

        let size_label = field(cols.size)?.to_string();
        let size = match size_lookup.get(&size_label) {
            Some(&s) => s,
            None => {
                size_labels.push(size_label.clone());
                pretrain_sets.push(BTreeSet::new());
                size_lookup.insert(size_label.clone(), size_labels.len() - 1);
                size_labels.len() - 1
            }
        };
        let p = int(cols.pretrain, "pretrain_seed")?;
        let f = int(cols.finetune, "finetune_seed")?;
        let e = match cols.checkpoint {
            Some(c) => int(c, "checkpoint")?,
            None => 0,
        };
        let inst_id = field(cols.instance)?.to_string();
        let inst = match instance_lookup.get(&inst_id) {
            Some(&i) => i,
            None => {
                instance_ids.push(inst_id.clone());
                gold.push(None);
                instance_lookup.insert(inst_id.clone(), instance_ids.len() - 1);
                instance_ids.len() - 1
            }
        };

        let raw = field(cols.value)?;
        let value: f64 = raw
            .parse()
            .map_err(|_| Error::Schema(format!("line {line}: value {raw:?} is not a number")))?;
        let in_range = match cols.kind {
            ValueKind::Correctness => value == 0.0 || value == 1.0,
            ValueKind::Probability => (0.0..=1.0).contains(&value),
        };
        if !in_range {
            return Err(Error::ValueOutOfRange {
                value,
                location: format!("line {line}"),
            });
        }

        let pred = match cols.pred {
            Some(c) => Some(field(c)?.to_string()),
            None => None,
        };
        if let Some(c) = cols.gold {
            let g = field(c)?;
            match &gold[inst] {
                Some(existing) if existing != g => {
                    return Err(Error::Schema(format!(
                        "line {line}: gold label {g:?} for instance {inst_id:?} conflicts with {existing:?}"
                    )))
                }
                Some(_) => {}
                None => gold[inst] = Some(g.to_string()),
            }
        }

        pretrain_sets[size].insert(p);
        finetune_set.insert(f);
        checkpoint_set.insert(e);
        if cells.insert((size, p, f, e, inst), (value, pred)).is_some() {
            return Err(Error::DuplicateCell {
                line,
                size: size_label,
                pretrain_seed: p,
                finetune_seed: f,
                checkpoint: e,
                instance: inst_id,
            });
        }
    }

    if size_labels.is_empty() {
        return Err(Error::Schema("no data rows".into()));
    }

    let finetune_ids: Vec<i64> = finetune_set.into_iter().collect();
    let checkpoint_ids: Vec<i64> = checkpoint_set.into_iter().collect();
    let mut sizes = Vec::with_capacity(size_labels.len());
    for (s, label) in size_labels.iter().enumerate() {
        let pretrain_ids: Vec<i64> = pretrain_sets[s].iter().copied().collect();
        let total = pretrain_ids.len() * finetune_ids.len() * checkpoint_ids.len() * instance_ids.len();
        let mut values = Vec::with_capacity(total);
        let mut preds = cols.pred.map(|_| Vec::with_capacity(total));
        for &p in &pretrain_ids {
            for &f in &finetune_ids {
                for &e in &checkpoint_ids {
                    for (i, inst) in instance_ids.iter().enumerate() {
                        let (v, pred) = cells.remove(&(s, p, f, e, i)).ok_or_else(|| {
                            Error::MissingCell {
                                size: label.clone(),
                                pretrain_seed: p,
                                finetune_seed: f,
                                checkpoint: e,
                                instance: inst.clone(),
                            }
                        })?;
                        values.push(v);
                        if let (Some(out), Some(pred)) = (preds.as_mut(), pred) {
                            out.push(pred);
                        }
                    }
                }
            }
        }
        sizes.push(SizeBlock {
            label: label.clone(),
            pretrain_seed_ids: pretrain_ids,
            values,
            pred_labels: preds,
        });
    }

    let gold_labels = match cols.gold {
        Some(_) => Some(
            gold.into_iter()
                .zip(&instance_ids)
                .map(|(g, id)| {
                    g.ok_or_else(|| Error::Schema(format!("instance {id:?} has no gold label")))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };

    PredictionTensor::from_parts(TensorParts {
        value_kind: cols.kind,
        sizes,
        finetune_seed_ids: finetune_ids,
        checkpoint_ids,
        instance_ids,
        gold_labels,
    })
}

/// Emit canonical CSV: rows in tensor index order `(size, p, f, e, instance)`,
/// `\n` line ends, shortest round-trip float formatting.
pub fn write_csv<W: Write>(tensor: &PredictionTensor, writer: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let value_col = match tensor.value_kind() {
        ValueKind::Correctness => "correct",
        ValueKind::Probability => "prob",
    };
    let labels = tensor.has_labels();
    let mut header = vec![
        "size",
        "pretrain_seed",
        "finetune_seed",
        "checkpoint",
        "instance_id",
        value_col,
    ];
    if labels {
        header.extend(["pred_label", "gold_label"]);
    }
    wtr.write_record(&header)?;

    let gold = tensor.gold_labels();
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for (s, block) in tensor.sizes().iter().enumerate() {
        for (p, &pid) in block.pretrain_seed_ids.iter().enumerate() {
            for (f, &fid) in tensor.finetune_seed_ids().iter().enumerate() {
                for (e, &eid) in tensor.checkpoint_ids().iter().enumerate() {
                    let run = tensor.run(s, p, f, e);
                    let run_labels = tensor.run_labels(s, p, f, e);
                    for (i, inst) in tensor.instance_ids().iter().enumerate() {
                        row.clear();
                        row.push(block.label.clone());
                        row.push(pid.to_string());
                        row.push(fid.to_string());
                        row.push(eid.to_string());
                        row.push(inst.clone());
                        row.push(format_value(tensor.value_kind(), run[i]));
                        if labels {
                            row.push(run_labels.map(|l| l[i].clone()).unwrap_or_default());
                            row.push(gold.map(|g| g[i].clone()).unwrap_or_default());
                        }
                        wtr.write_record(&row)?;
                    }
                }
            }
        }
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn emit_csv(tensor: &PredictionTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(tensor, std::io::BufWriter::new(file))
}

fn format_value(kind: ValueKind, v: f64) -> String {
    match kind {
        ValueKind::Correctness => {
            if v == 1.0 {
                "1".into()
            } else {
                "0".into()
            }
        }
        ValueKind::Probability => format!("{v:?}"),
    }
}
