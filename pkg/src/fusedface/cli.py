"""Command-line entry point: ``fusedface <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict

from fusedface.dataset import (
    SplitProtocol,
    SynthConfig,
    load_pairs,
    make_split,
    read_json,
    save_pairs,
    split_from_manifest,
    synth_generate,
    write_json,
)
from fusedface.errors import DataError, NumericError
from fusedface.evaluate import (
    EvalReport,
    curve_csv,
    emit_report,
    fit_features,
    model_from_dict,
    model_to_dict,
    parse_u_selector,
    run_experiment,
    score_batches,
    sweep_csv,
    train_classifier,
    weight_sweep,
)
from fusedface.fusion import FusionWeights, default_weights, fuse
from fusedface.imageio import load_image, save_image
from fusedface.mlp import MlpTrainConfig
from fusedface.rbf import RbfModel, RbfTrainConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _size(text):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError(f"dimensions must be positive, got {text!r}")
    return (w, h)


def _u(text):
    try:
        return parse_u_selector(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, 'all' or energy:<fraction>, got {text!r}") from None


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_protocol_flags(p):
    g = p.add_argument_group("split protocol")
    g.add_argument("--classes", type=int, default=10)
    g.add_argument("--train-per-class", type=int, default=10)
    g.add_argument("--probe-in", type=int, default=5)
    g.add_argument("--probe-out", type=int, default=5)
    g.add_argument("--size", type=_size, default=None, help="resize every image to WxH on load")


def _add_classifier_flags(p):
    g = p.add_argument_group("RBF")
    g.add_argument("--clusters-per-class", type=int, default=1)
    g.add_argument("--width-scale", type=float, default=1.0)
    g.add_argument("--kmeans-max-iter", type=int, default=100)
    g = p.add_argument_group("MLP")
    g.add_argument("--hidden", type=_ints, default=None,
                   help="hidden layer sizes, comma separated (default: one layer of 2*U)")
    g.add_argument("--lr", type=float, default=0.1)
    g.add_argument("--momentum", type=float, default=0.9)
    g.add_argument("--epochs", type=int, default=500)
    g.add_argument("--init-scale", type=float, default=0.5)
    p.add_argument("--skip", type=int, default=0, help="drop this many leading eigenfaces")


def build_parser():
    parser = _Parser(prog="fusedface", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fuse", help="fuse one visual/thermal pair")
    p.add_argument("--visual", required=True)
    p.add_argument("--thermal", required=True)
    p.add_argument("--a", type=float, default=None, help="visual weight (default 0.70); thermal weight is 1-a")
    p.add_argument("--out", default="fused.pgm")

    p = sub.add_parser("synth", help="write a synthetic paired dataset")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--size", type=_size, required=True)
    p.add_argument("--illum", type=float, required=True)
    p.add_argument("--noise", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="fit eigenspace and one classifier on a split")
    p.add_argument("--data")
    p.add_argument("--synth-manifest", help="synth.json; regenerates the data in memory when --data is absent")
    p.add_argument("--u", type=_u, required=True)
    p.add_argument("--classifier", choices=("rbf", "mlp"), required=True)
    p.add_argument("--a", type=float, default=None, help="visual weight (default 0.70)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--split-out", help="split manifest path (default: <model-out>.split.json)")
    _add_protocol_flags(p)
    _add_classifier_flags(p)

    p = sub.add_parser("eval", help="score a trained model on the probe batches of a split")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--protocol", required=True, help="split manifest or bare protocol JSON")
    p.add_argument("--report", required=True, help=".json or .csv")
    p.add_argument("--size", type=_size, default=None)

    p = sub.add_parser("experiment", help="train and score both classifiers; write per-class curve")
    p.add_argument("--data", required=True)
    p.add_argument("--u", type=_u, default=20)
    p.add_argument("--a", type=float, default=None, help="visual weight (default 0.70)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    _add_protocol_flags(p)
    _add_classifier_flags(p)

    p = sub.add_parser("sweep", help="recognition rate of both classifiers across fusion weights")
    p.add_argument("--data", required=True)
    p.add_argument("--a-grid", type=_floats, default=[0.0, 0.3, 0.5, 0.7, 1.0])
    p.add_argument("--report", required=True)
    p.add_argument("--u", type=_u, default=20)
    p.add_argument("--seed", type=int, default=0)
    _add_protocol_flags(p)
    _add_classifier_flags(p)
    return parser


def _protocol(args) -> SplitProtocol:
    return SplitProtocol(args.classes, args.train_per_class, args.probe_in, args.probe_out, args.seed)


def _configs(args):
    rbf = RbfTrainConfig(args.clusters_per_class, args.width_scale, args.kmeans_max_iter, args.seed)
    mlp = MlpTrainConfig(args.lr, args.momentum, args.epochs, args.seed, args.init_scale)
    return rbf, mlp


def _weights(a) -> FusionWeights:
    if a is None:
        return default_weights()
    if not 0.0 <= a <= 1.0:
        raise UsageError(f"--a must be in [0, 1], got {a}")
    return FusionWeights.from_visual(a)


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def cmd_fuse(args):
    out = fuse(load_image(args.visual), load_image(args.thermal), _weights(args.a))
    save_image(out, args.out)
    print(f"wrote {args.out} ({out.width}x{out.height})")


def cmd_synth(args):
    w, h = args.size
    cfg = SynthConfig(args.classes, args.per_class, w, h, args.illum, args.noise, args.seed)
    pairs = synth_generate(cfg)
    save_pairs(pairs, args.out)
    write_json({"version": 1, "synth": asdict(cfg)}, os.path.join(args.out, "synth.json"))
    print(f"wrote {len(pairs)} pairs to {args.out}")


def _train_pairs(args):
    synth = None
    if args.synth_manifest:
        synth = read_json(args.synth_manifest)["synth"]
    if args.data:
        return load_pairs(args.data, args.size), synth
    if synth is None:
        raise UsageError("train needs --data or --synth-manifest")
    return synth_generate(SynthConfig(**synth)), synth


def cmd_train(args):
    pairs, synth = _train_pairs(args)
    split = make_split(pairs, _protocol(args), _weights(args.a))
    rbf_cfg, mlp_cfg = _configs(args)
    es, F, labels = fit_features(split, args.u, args.skip)
    model = train_classifier(args.classifier, F, labels, rbf_cfg, mlp_cfg, args.hidden)
    echo = {
        "weights": {"a": split.weights.a, "b": split.weights.b},
        "protocol": asdict(split.protocol),
        "u_selector": args.u,
        "skip": args.skip,
        "size": list(args.size) if args.size else None,
        "synth": synth,
    }
    write_json(model_to_dict(es, model, echo), args.model_out)
    split_out = args.split_out or os.path.splitext(args.model_out)[0] + ".split.json"
    write_json(split.to_manifest(), split_out)
    print(f"trained {args.classifier} on {len(split.train)} images (u={es.u}); "
          f"model {args.model_out}, split {split_out}")


def _report_format(path):
    ext = os.path.splitext(path)[1].lower()
    if ext not in (".json", ".csv"):
        raise UsageError(f"report path must end in .json or .csv, got {path!r}")
    return ext[1:]


def cmd_eval(args):
    fmt = _report_format(args.report)
    es, model, echo = model_from_dict(read_json(args.model))
    pairs = load_pairs(args.data, args.size or (tuple(echo["size"]) if echo.get("size") else None))
    manifest = read_json(args.protocol)
    if "train" in manifest:
        split = split_from_manifest(pairs, manifest)
    else:
        weights = FusionWeights(**manifest.pop("weights")) if "weights" in manifest else None
        split = make_split(pairs, SplitProtocol(**manifest), weights)
    tag = "rbf" if isinstance(model, RbfModel) else "mlp"
    report = EvalReport(tag, score_batches(es, model, split), {
        "model": echo,
        "weights": {"a": split.weights.a, "b": split.weights.b},
        "protocol": asdict(split.protocol),
        "u": es.u,
        "classifier": model.to_dict()["config"],
    })
    emit_report(report, fmt, args.report)
    print(f"{tag}: {report.correct}/{report.total} correct, overall rate {report.overall_rate!r}")


def cmd_experiment(args):
    pairs = load_pairs(args.data, args.size)
    split = make_split(pairs, _protocol(args), _weights(args.a))
    rbf_cfg, mlp_cfg = _configs(args)
    rbf_rep, mlp_rep = run_experiment(split, args.u, rbf_cfg, mlp_cfg, args.skip, args.hidden)
    os.makedirs(args.out, exist_ok=True)
    for rep in (rbf_rep, mlp_rep):
        emit_report(rep, "json", os.path.join(args.out, f"{rep.classifier_tag}.json"))
        emit_report(rep, "csv", os.path.join(args.out, f"{rep.classifier_tag}.csv"))
    _write(os.path.join(args.out, "curve.csv"), curve_csv(rbf_rep, mlp_rep))
    write_json(split.to_manifest(), os.path.join(args.out, "split.json"))
    for rep in (rbf_rep, mlp_rep):
        print(f"{rep.classifier_tag}: pooled {rep.overall_rate!r}, mean per batch {rep.mean_batch_rate!r}")


def cmd_sweep(args):
    pairs = load_pairs(args.data, args.size)
    rbf_cfg, mlp_cfg = _configs(args)
    for a in args.a_grid:
        _weights(a)
    rows = weight_sweep(pairs, _protocol(args), args.a_grid, args.u, rbf_cfg, mlp_cfg,
                        args.skip, args.hidden)
    _write(args.report, sweep_csv(rows))
    for a, r, m in rows:
        print(f"a={a!r}: rbf {r!r}, mlp {m!r}")


COMMANDS = {
    "fuse": cmd_fuse,
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "experiment": cmd_experiment,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"fusedface: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"fusedface: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, OSError, KeyError, TypeError) as exc:
        print(f"fusedface: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
