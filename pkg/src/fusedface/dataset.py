"""Paired visual/thermal face data: directory ingestion, split protocol, synthesis.

On-disk layout is one P5 file per channel, named
``<subject>_<sample>_<v|t>.pgm``.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import asdict, dataclass

import numpy as np

from fusedface.errors import DataError
from fusedface.fusion import FusionWeights, default_weights, fuse
from fusedface.imageio import GrayImage, load_image, resize_bilinear, save_image

FILENAME_RE = re.compile(r"^(?P<subject>[^_]+)_(?P<sample>[^_]+)_(?P<channel>[vt])\.pgm$")
MANIFEST_VERSION = 1


@dataclass(frozen=True, eq=False)
class FacePair:
    subject: str
    sample_id: str
    visual: GrayImage
    thermal: GrayImage

    def __post_init__(self):
        if self.visual.size != self.thermal.size:
            raise DataError(
                f"{self.subject}/{self.sample_id}: visual {self.visual.size} and thermal "
                f"{self.thermal.size} sizes differ"
            )

    @property
    def key(self) -> tuple:
        return (self.subject, self.sample_id)

    def filenames(self) -> tuple:
        return (f"{self.subject}_{self.sample_id}_v.pgm", f"{self.subject}_{self.sample_id}_t.pgm")


@dataclass(frozen=True)
class SplitProtocol:
    classes: int = 10
    train_per_class: int = 10
    probe_in_class: int = 5
    probe_out_class: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.classes < 1 or self.train_per_class < 1:
            raise DataError("classes and train_per_class must be positive")
        if self.probe_in_class < 0 or self.probe_out_class < 0:
            raise DataError("probe counts must be non-negative")
        if self.probe_out_class and self.classes < 2:
            raise DataError("out-of-class probes need at least two classes")


@dataclass(frozen=True, eq=False)
class LabeledImage:
    key: tuple          # (subject, sample_id) of the source pair
    label: str
    image: GrayImage


@dataclass(frozen=True, eq=False)
class ProbeBatch:
    target_class: str
    probes: tuple       # of LabeledImage; in-class first, then out-of-class


@dataclass(frozen=True, eq=False)
class Split:
    train: tuple
    probe_batches: tuple
    protocol: SplitProtocol
    weights: FusionWeights
    classes: tuple = ()

    def to_manifest(self) -> dict:
        def ref(item):
            subject, sample = item.key
            return {"subject": subject, "sample": sample, "label": item.label,
                    "visual": f"{subject}_{sample}_v.pgm", "thermal": f"{subject}_{sample}_t.pgm"}

        return {
            "version": MANIFEST_VERSION,
            "protocol": asdict(self.protocol),
            "weights": {"a": self.weights.a, "b": self.weights.b},
            "classes": list(self.classes),
            "train": [ref(t) for t in self.train],
            "probe_batches": [
                {"class": b.target_class, "probes": [ref(p) for p in b.probes]}
                for b in self.probe_batches
            ],
        }


def load_pairs(root, target_size: tuple | None = None) -> list:
    """Read every ``<subject>_<sample>_<v|t>.pgm`` pair under ``root``.

    Files that do not end in ``.pgm`` are ignored.  Both channels are
    resized to ``target_size`` (width, height) when it is given.
    """
    root = os.fspath(root)
    if not os.path.isdir(root):
        raise DataError(f"data directory not found: {root}")
    found = {}
    bad = []
    for name in sorted(os.listdir(root)):
        if not name.endswith(".pgm"):
            continue
        m = FILENAME_RE.match(name)
        if m is None:
            bad.append(name)
            continue
        found.setdefault((m["subject"], m["sample"]), {})[m["channel"]] = os.path.join(root, name)
    if bad:
        raise DataError(f"unparsable image filenames (want <subject>_<sample>_<v|t>.pgm): {bad}")
    missing = []
    for (subject, sample), chans in sorted(found.items()):
        for ch in "vt":
            if ch not in chans:
                missing.append(f"{subject}_{sample}_{ch}.pgm")
    if missing:
        raise DataError(f"unpaired images; missing mates: {missing}")

    pairs = []
    for (subject, sample), chans in sorted(found.items()):
        vis, th = load_image(chans["v"]), load_image(chans["t"])
        if target_size is not None:
            vis = resize_bilinear(vis, *target_size)
            th = resize_bilinear(th, *target_size)
        elif vis.size != th.size:
            raise DataError(
                f"{subject}_{sample}: visual is {vis.width}x{vis.height}, thermal is "
                f"{th.width}x{th.height}; pass a target size to resize"
            )
        pairs.append(FacePair(subject, sample, vis, th))
    return pairs


def save_pairs(pairs, root) -> None:
    os.makedirs(root, exist_ok=True)
    for p in pairs:
        vname, tname = p.filenames()
        save_image(p.visual, os.path.join(root, vname))
        save_image(p.thermal, os.path.join(root, tname))


def _group(pairs) -> dict:
    groups = {}
    for p in pairs:
        groups.setdefault(p.subject, []).append(p)
    for members in groups.values():
        members.sort(key=lambda p: p.sample_id)
    return groups


def make_split(pairs, protocol: SplitProtocol | None = None,
               weights: FusionWeights | None = None) -> Split:
    """Build the train set and the per-class probe batches.

    Each selected class contributes ``train_per_class`` fused training
    images.  The batch for class ``c`` holds ``probe_in_class`` unused
    images of ``c`` followed by ``probe_out_class`` unused images taken
    round-robin from the other selected classes.
    """
    protocol = protocol or SplitProtocol()
    weights = weights or default_weights()
    groups = _group(pairs)
    subjects = sorted(groups)
    if len(subjects) < protocol.classes:
        raise DataError(f"protocol needs {protocol.classes} classes, data has {len(subjects)}")
    rng = np.random.default_rng(protocol.seed)
    if len(subjects) > protocol.classes:
        picked = rng.choice(len(subjects), size=protocol.classes, replace=False)
        subjects = [subjects[i] for i in sorted(picked)]
    need = protocol.train_per_class + protocol.probe_in_class
    train_sets, pools = {}, {}
    for s in subjects:
        members = groups[s]
        if len(members) < need:
            raise DataError(f"class {s!r} has {len(members)} samples, protocol needs {need}")
        perm = rng.permutation(len(members))
        train_sets[s] = [members[i] for i in perm[:protocol.train_per_class]]
        pools[s] = [members[i] for i in perm[protocol.train_per_class:]]
    if protocol.probe_out_class and all(not pools[s] for s in subjects):
        raise DataError("no unused samples left for out-of-class probes")

    cache = {}

    def fused(pair, label):
        if pair.key not in cache:
            cache[pair.key] = fuse(pair.visual, pair.thermal, weights)
        return LabeledImage(pair.key, label, cache[pair.key])

    train = tuple(fused(p, s) for s in subjects for p in train_sets[s])
    cursor = {s: 0 for s in subjects}
    batches = []
    for ci, s in enumerate(subjects):
        probes = [fused(p, s) for p in pools[s][:protocol.probe_in_class]]
        others = [subjects[(ci + k) % len(subjects)] for k in range(1, len(subjects))]
        others = [o for o in others if pools[o]]
        for i in range(protocol.probe_out_class):
            o = others[i % len(others)]
            probes.append(fused(pools[o][cursor[o] % len(pools[o])], o))
            cursor[o] += 1
        batches.append(ProbeBatch(s, tuple(probes)))
    return Split(train, tuple(batches), protocol, weights, tuple(subjects))


def split_from_manifest(pairs, manifest: dict) -> Split:
    """Rebuild a split exactly as recorded in ``manifest`` (see :meth:`Split.to_manifest`)."""
    if manifest.get("version") != MANIFEST_VERSION:
        raise DataError(f"unsupported split manifest version {manifest.get('version')!r}")
    weights = FusionWeights(**manifest["weights"])
    protocol = SplitProtocol(**manifest["protocol"])
    by_key = {p.key: p for p in pairs}
    cache = {}

    def item(ref):
        key = (ref["subject"], ref["sample"])
        if key not in by_key:
            raise DataError(f"manifest references {ref['visual']}/{ref['thermal']}, not present in data")
        if key not in cache:
            p = by_key[key]
            cache[key] = fuse(p.visual, p.thermal, weights)
        return LabeledImage(key, ref["label"], cache[key])

    train = tuple(item(r) for r in manifest["train"])
    batches = tuple(ProbeBatch(b["class"], tuple(item(r) for r in b["probes"]))
                    for b in manifest["probe_batches"])
    return Split(train, batches, protocol, weights, tuple(manifest["classes"]))


@dataclass(frozen=True)
class SynthConfig:
    classes: int = 10
    samples_per_class: int = 20
    width: int = 32
    height: int = 32
    illum_strength: float = 0.5
    noise_sigma: float = 0.05
    seed: int = 42
    blobs: int = 6

    def __post_init__(self):
        if min(self.classes, self.samples_per_class, self.width, self.height, self.blobs) < 1:
            raise DataError("synthetic dataset counts and dimensions must be positive")
        if self.illum_strength < 0 or self.noise_sigma < 0:
            raise DataError("illum_strength and noise_sigma must be non-negative")


def _blob_template(rng, cfg: SynthConfig, grid) -> np.ndarray:
    yy, xx = grid
    img = np.full(xx.shape, 0.15)
    for _ in range(cfg.blobs):
        cx, cy = rng.uniform(0.15, 0.85, size=2)
        sx, sy = rng.uniform(0.06, 0.18, size=2)
        amp = rng.uniform(0.25, 0.6)
        img += amp * np.exp(-((xx - cx) ** 2 / (2 * sx ** 2) + (yy - cy) ** 2 / (2 * sy ** 2)))
    return np.clip(img, 0.0, 1.0)


def synth_templates(cfg: SynthConfig):
    """Per-class (visual, thermal) template arrays, drawn from ``cfg.seed``."""
    ss = np.random.SeedSequence(cfg.seed)
    template_ss = ss.spawn(1)[0]
    v_rng, t_rng = (np.random.default_rng(s) for s in template_ss.spawn(2))
    ys = (np.arange(cfg.height) + 0.5) / cfg.height
    xs = (np.arange(cfg.width) + 0.5) / cfg.width
    grid = np.meshgrid(ys, xs, indexing="ij")
    visual = [_blob_template(v_rng, cfg, grid) for _ in range(cfg.classes)]
    thermal = [_blob_template(t_rng, cfg, grid) for _ in range(cfg.classes)]
    return visual, thermal


def synth_generate(cfg: SynthConfig | None = None) -> list:
    """Synthetic paired faces.

    Visual samples get a random linear illumination ramp scaled by
    ``illum_strength`` plus Gaussian noise; thermal samples get noise
    only, drawn from a separate stream, so they do not depend on
    ``illum_strength`` at all.
    """
    cfg = cfg or SynthConfig()
    visual_t, thermal_t = synth_templates(cfg)
    _, sample_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    illum_rng, vnoise_rng, tnoise_rng = (np.random.default_rng(s) for s in sample_ss.spawn(3))
    ys = np.linspace(-1.0, 1.0, cfg.height)
    xs = np.linspace(-1.0, 1.0, cfg.width)
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    shape = (cfg.height, cfg.width)
    width = max(2, len(str(cfg.samples_per_class - 1)))
    cwidth = max(2, len(str(cfg.classes - 1)))
    pairs = []
    for c in range(cfg.classes):
        for k in range(cfg.samples_per_class):
            theta = illum_rng.uniform(0.0, 2.0 * np.pi)
            ramp = (np.cos(theta) * xx + np.sin(theta) * yy) / np.sqrt(2.0)
            vis = visual_t[c] + cfg.illum_strength * ramp + cfg.noise_sigma * vnoise_rng.standard_normal(shape)
            th = thermal_t[c] + cfg.noise_sigma * tnoise_rng.standard_normal(shape)
            pairs.append(FacePair(
                subject=f"c{c:0{cwidth}d}", sample_id=f"{k:0{width}d}",
                visual=GrayImage.from_array(np.clip(vis, 0.0, 1.0)),
                thermal=GrayImage.from_array(np.clip(th, 0.0, 1.0)),
            ))
    return pairs


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    if not os.path.isfile(path):
        raise DataError(f"file not found: {path}")
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from None
