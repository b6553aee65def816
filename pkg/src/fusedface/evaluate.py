"""Experiment driver: eigenspace + classifier training, probe scoring, reports."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from fusedface.dataset import Split, make_split
from fusedface.eigenspace import Eigenspace, fit_eigenspace, project_many
from fusedface.errors import DataError, NumericError
from fusedface.fusion import FusionWeights
from fusedface.mlp import MlpModel, MlpTrainConfig, mlp_predict_many, train_mlp
from fusedface.rbf import RbfModel, RbfTrainConfig, rbf_predict_many, train_rbf

MODEL_VERSION = 1


@dataclass(frozen=True)
class ClassResult:
    label: str
    size: int
    correct: int

    @property
    def rate(self) -> float:
        return self.correct / self.size if self.size else 0.0


@dataclass(frozen=True)
class EvalReport:
    classifier_tag: str
    per_class: tuple
    config_echo: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(r.size for r in self.per_class)

    @property
    def correct(self) -> int:
        return sum(r.correct for r in self.per_class)

    @property
    def overall_rate(self) -> float:
        """Pooled rate: all correct probes over all probes."""
        return self.correct / self.total if self.total else 0.0

    @property
    def mean_batch_rate(self) -> float:
        """Unweighted mean of the per-batch rates."""
        rates = [r.rate for r in self.per_class if r.size]
        return sum(rates) / len(rates) if rates else 0.0

    def to_dict(self) -> dict:
        return {
            "classifier_tag": self.classifier_tag,
            "per_class": [{"class": r.label, "size": r.size, "correct": r.correct, "rate": r.rate}
                          for r in self.per_class],
            "total": self.total,
            "correct": self.correct,
            "overall_rate": self.overall_rate,
            "mean_batch_rate": self.mean_batch_rate,
            "config_echo": self.config_echo,
        }


def parse_u_selector(text):
    """``"20"`` -> 20, ``"energy:0.95"`` -> 0.95, ``"all"`` -> None."""
    if text is None or isinstance(text, (int, float)):
        return text
    text = str(text).strip()
    if text == "all":
        return None
    if text.startswith("energy:"):
        return float(text.split(":", 1)[1])
    return int(text)


def features_digest(F: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(F, dtype=np.float64).tobytes()).hexdigest()


def fit_features(split: Split, u_selector=None, skip: int = 0):
    """Fit the eigenspace on the fused training images and project them."""
    if not split.train:
        raise DataError("split has no training images")
    es = fit_eigenspace([t.image for t in split.train], u_selector, skip)
    if es.u == 0:
        raise NumericError("eigenspace has zero retained dimensions; training images carry no variance")
    F = project_many(es, [t.image for t in split.train])
    return es, F, [t.label for t in split.train]


def train_classifier(kind: str, F, labels, rbf_cfg=None, mlp_cfg=None, hidden=None):
    if kind == "rbf":
        return train_rbf(F, rbf_cfg or RbfTrainConfig(), labels=labels)
    if kind == "mlp":
        sizes = None if hidden is None else [F.shape[1], *hidden, len(set(labels))]
        return train_mlp(F, mlp_cfg or MlpTrainConfig(), sizes, labels=labels)
    raise DataError(f"unknown classifier {kind!r}")


def predict(model, F) -> list:
    if isinstance(model, RbfModel):
        return rbf_predict_many(model, F)
    return mlp_predict_many(model, F)


def score_batches(es: Eigenspace, model, split: Split) -> tuple:
    results = []
    for batch in split.probe_batches:
        if batch.probes:
            pred = predict(model, project_many(es, [p.image for p in batch.probes]))
            correct = sum(int(p == q.label) for p, q in zip(pred, batch.probes))
        else:
            correct = 0
        results.append(ClassResult(batch.target_class, len(batch.probes), correct))
    return tuple(results)


def _split_echo(split: Split) -> dict:
    return {"weights": {"a": split.weights.a, "b": split.weights.b},
            "protocol": asdict(split.protocol)}


def run_experiment(split: Split, u_selector=None, rbf_cfg: RbfTrainConfig | None = None,
                   mlp_cfg: MlpTrainConfig | None = None, skip: int = 0, hidden=None):
    """Train both classifiers on identical eigenspace features; return (rbf, mlp) reports."""
    rbf_cfg = rbf_cfg or RbfTrainConfig()
    mlp_cfg = mlp_cfg or MlpTrainConfig()
    es, F, labels = fit_features(split, u_selector, skip)
    digest = features_digest(F)
    reports = []
    for tag, cfg in (("rbf", rbf_cfg), ("mlp", mlp_cfg)):
        model = train_classifier(tag, F, labels, rbf_cfg, mlp_cfg, hidden)
        echo = {**_split_echo(split), "u": es.u, "u_selector": u_selector, "skip": skip,
                "classifier": asdict(cfg), "train_features_sha256": digest}
        if tag == "mlp":
            echo["layer_sizes"] = model.layer_sizes
        reports.append(EvalReport(tag, score_batches(es, model, split), echo))
    return reports[0], reports[1]


def weight_sweep(pairs, protocol, a_grid, u_selector=None, rbf_cfg=None, mlp_cfg=None,
                 skip: int = 0, hidden=None) -> list:
    """One ``(a, rbf_rate, mlp_rate)`` row per visual weight; ``b = 1 - a``.

    Every row reuses the same protocol seed, hence the same sample selection.
    """
    rows = []
    for a in a_grid:
        a = float(a)
        if not 0.0 <= a <= 1.0:
            raise DataError(f"visual weight {a} outside [0, 1]")
        split = make_split(pairs, protocol, FusionWeights.from_visual(a))
        rbf_rep, mlp_rep = run_experiment(split, u_selector, rbf_cfg, mlp_cfg, skip, hidden)
        rows.append((a, rbf_rep.overall_rate, mlp_rep.overall_rate))
    return rows


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def report_csv(report: EvalReport) -> str:
    if not report.per_class:
        raise DataError("cannot emit a report with no classes")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class", "size", "correct", "rate"])
    for r in report.per_class:
        w.writerow([r.label, r.size, r.correct, _fmt(r.rate)])
    w.writerow(["overall", report.total, report.correct, _fmt(report.overall_rate)])
    return buf.getvalue()


def report_json(report: EvalReport) -> str:
    if not report.per_class:
        raise DataError("cannot emit a report with no classes")
    return json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n"


def emit_report(report: EvalReport, fmt: str, path) -> None:
    """Write ``report`` as ``json`` or ``csv`` to ``path``."""
    if fmt == "json":
        text = report_json(report)
    elif fmt == "csv":
        text = report_csv(report)
    else:
        raise DataError(f"unknown report format {fmt!r}")
    with open(path, "w", newline="") as fh:
        fh.write(text)


def curve_csv(rbf_report: EvalReport, mlp_report: EvalReport) -> str:
    """Per-class rate of both classifiers side by side: one row per class index."""
    if len(rbf_report.per_class) != len(mlp_report.per_class) or not rbf_report.per_class:
        raise DataError("curve needs two nonempty reports over the same classes")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class_index", "class", "rbf_rate", "mlp_rate"])
    for i, (r, m) in enumerate(zip(rbf_report.per_class, mlp_report.per_class), start=1):
        if r.label != m.label:
            raise DataError(f"class mismatch at row {i}: {r.label!r} vs {m.label!r}")
        w.writerow([i, r.label, _fmt(r.rate), _fmt(m.rate)])
    return buf.getvalue()


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["a", "rbf_rate", "mlp_rate"])
    for a, r, m in rows:
        w.writerow([_fmt(a), _fmt(r), _fmt(m)])
    return buf.getvalue()


def model_to_dict(es: Eigenspace, model, config_echo: dict) -> dict:
    kind = "rbf" if isinstance(model, RbfModel) else "mlp"
    return {"version": MODEL_VERSION, "kind": kind, "eigenspace": es.to_dict(),
            "classifier": model.to_dict(), "config_echo": config_echo}


def model_from_dict(d: dict):
    if d.get("version") != MODEL_VERSION:
        raise DataError(f"unsupported model version {d.get('version')!r}")
    es = Eigenspace.from_dict(d["eigenspace"])
    if d["kind"] == "rbf":
        model = RbfModel.from_dict(d["classifier"])
    elif d["kind"] == "mlp":
        model = MlpModel.from_dict(d["classifier"])
    else:
        raise DataError(f"unknown model kind {d['kind']!r}")
    return es, model, d.get("config_echo", {})
