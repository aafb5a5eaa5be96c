"""Command-line surface: encode / infer / quantize / sweep / verify / cycles."""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import dataset, network, oracle, quantization
from .netspec import load_netspec, netspec_from_dict, save_netspec
from .spike_codec import delta_encode_signal, to_delta_words, write_dts


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--images", required=True, help="IDX image file")
    p.add_argument("--labels", required=True, help="IDX label file")
    p.add_argument("--theta", type=float, default=0.05, help="delta encoding threshold")
    p.add_argument("--limit", type=int, default=None, help="evaluate at most N images")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dtsnn",
        description="Integer-exact event-driven simulator for differential-time SNN hardware",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="delta-encode images into a DTS1 stream file")
    _add_dataset_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--width-bits", type=int, default=8)

    p = sub.add_parser("infer", help="classify a dataset and write a per-image report")
    p.add_argument("--net", required=True)
    _add_dataset_args(p)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--bits", type=int, default=None, help="quantize float weights on load")
    p.add_argument("--report", required=True)

    p = sub.add_parser("quantize", help="fixed-point quantize a float netspec")
    p.add_argument("--net", required=True)
    p.add_argument("--bits", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="accuracy over a list of weight bit widths")
    p.add_argument("--net", required=True)
    _add_dataset_args(p)
    p.add_argument("--bits", required=True, help="comma-separated bit widths, e.g. 4,5,6")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="fuzz the event engine against the dense oracle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-inputs", type=int, default=20)
    p.add_argument("--max-neurons", type=int, default=10)
    p.add_argument("--max-spikes", type=int, default=200)
    p.add_argument("--engine", choices=["fast", "stepped"], default="fast")

    p = sub.add_parser("cycles", help="average modeled clock cycles per image")
    p.add_argument("--net", required=True)
    _add_dataset_args(p)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--bits", type=int, default=None)

    return parser


def _cmd_encode(args) -> int:
    data = dataset.load_idx(args.images, args.labels)
    n = len(data) if args.limit is None else min(args.limit, len(data))
    streams = []
    for i in range(n):
        train = delta_encode_signal(data.images[i].reshape(-1), args.theta)
        streams.append(to_delta_words(train, args.width_bits))
    write_dts(streams, args.out)
    words = sum(len(s) for s in streams)
    print(f"encoded {n} images to {args.out} ({words} words, width {args.width_bits})")
    return 0


def _load_runnable(path, bits):
    net = load_netspec(path, bits=bits)
    return net


def _cmd_infer(args) -> int:
    net = _load_runnable(args.net, args.bits)
    data = dataset.load_idx(args.images, args.labels)
    outcomes = network.evaluate_dataset(
        net, data.images, data.labels, theta_enc=args.theta, reps=args.reps, limit=args.limit
    )
    with open(args.report, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "label", "predicted", "correct", "events", "cycles"])
        for o in outcomes:
            writer.writerow([o.index, o.label, o.predicted, int(o.correct), o.events, o.cycles])
    acc = network.accuracy(outcomes)
    print(f"accuracy {100.0 * acc:.2f}% on {len(outcomes)} images, report: {args.report}")
    return 0


def _cmd_quantize(args) -> int:
    with open(args.net, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    net = quantization.quantize_netspec(data, args.bits)
    extra = {"metadata": data["metadata"]} if "metadata" in data else None
    save_netspec(net, args.out, extra=extra)
    scales = [l.weight_scale for l in net.layers]
    print(f"quantized to {args.bits} bits (layer scales {scales}), wrote {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    with open(args.net, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    bits_list = [int(b) for b in args.bits.split(",") if b.strip()]
    if not bits_list:
        raise ValueError("empty bit width list")
    ds = dataset.load_idx(args.images, args.labels)
    rows = quantization.sweep(
        data, ds.images, ds.labels, bits_list,
        theta_enc=args.theta, reps=args.reps, limit=args.limit,
    )
    quantization.write_sweep_csv(rows, args.out)
    for r in rows:
        print(f"bits {r.bits:2d}: {r.accuracy:6.2f}%  ({r.errors} errors / {r.images} images)")
    return 0


def _cmd_verify(args) -> int:
    failures = oracle.fuzz_equivalence(
        args.seed,
        args.trials,
        max_inputs=args.max_inputs,
        max_neurons=args.max_neurons,
        max_spikes=args.max_spikes,
        engine=args.engine,
    )
    if failures:
        trial, report = failures[0]
        print(f"divergence in trial {trial}: {report.detail}", file=sys.stderr)
        return 1
    print(f"{args.trials} trials equivalent (seed {args.seed}, engine {args.engine})")
    return 0


def _cmd_cycles(args) -> int:
    net = _load_runnable(args.net, args.bits)
    data = dataset.load_idx(args.images, args.labels)
    outcomes = network.evaluate_dataset(
        net, data.images, data.labels, theta_enc=args.theta, reps=args.reps, limit=args.limit
    )
    if not outcomes:
        raise ValueError("no images evaluated")
    avg_cycles = sum(o.cycles for o in outcomes) / len(outcomes)
    avg_events = sum(o.events for o in outcomes) / len(outcomes)
    print(
        f"avg {avg_cycles:.0f} cycles/image ({avg_events:.0f} events) over {len(outcomes)} images"
    )
    return 0


_COMMANDS = {
    "encode": _cmd_encode,
    "infer": _cmd_infer,
    "quantize": _cmd_quantize,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "cycles": _cmd_cycles,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
