"""Command-line surface: taper generation, extraction, corpus, training, leakage.

Exit codes: 0 ok, 2 configuration error, 3 input error, 4 training
divergence. Config files are strict JSON objects; unknown or mistyped
fields are named in the error message rather than passed through.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .audio import (ToyCorpusSpec, load_manifest, make_toy_corpus, read_wav,
                    write_corpus)
from .errors import (ConfigError, DivergenceError, InputError,
                     InvalidCenterError, ShapeError)
from .features import (FeatureConfig, extract_utterance, save_features_csv,
                       save_features_tplf)
from .leakage import (SyntheticSignalSpec, leakage_study, save_report_csv,
                      save_report_json, save_spectra_csv)
from .multitaper import (bank_at_frame_length, load_bank, make_rectangular_bank,
                         make_single_hamming_bank, make_swce_bank, save_bank)
from .optimizer import (TrainConfig, save_checkpoint, save_training_log, train)

_INT = "int"
_NUM = "number"
_STR = "string"
_OBJ = "object"

FEATURE_FIELDS = {
    "sample_rate": _INT, "frame_length": _INT, "frame_shift": _INT,
    "n_fft": _INT, "num_filters": _INT, "num_ceps": _INT,
    "f_low": _NUM, "f_high": _NUM, "log_floor": _NUM,
    "pre_emphasis": _NUM, "dither": _NUM, "dither_seed": _INT,
}
TRAIN_FIELDS = {
    "init": _STR, "constraint": _STR, "num_tapers": _INT, "lr": _NUM,
    "batch_size": _INT, "epochs": _INT, "seed": _INT,
    "margin": _NUM, "scale": _NUM, "embed_dim": _INT,
}
CORPUS_FIELDS = {
    "num_speakers": _INT, "utterances_per_speaker": _INT,
    "duration_seconds": _NUM, "sample_rate": _INT,
    "snr_db": _NUM, "seed": _INT,
}


def _type_ok(value, kind):
    if isinstance(value, bool):
        return False
    if kind == _INT:
        return isinstance(value, int)
    if kind == _NUM:
        return isinstance(value, (int, float))
    if kind == _OBJ:
        return isinstance(value, dict)
    return isinstance(value, str)


def load_config_doc(path, fields, what):
    """Strictly validated JSON object; names every offending field."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    except OSError as exc:
        raise InputError(f"cannot read {what} config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: {what} config must be a JSON object")
    unknown = sorted(set(doc) - set(fields))
    if unknown:
        raise ConfigError(
            f"{path}: unknown {what} config field(s): {', '.join(unknown)}")
    for key, value in doc.items():
        if not _type_ok(value, fields[key]):
            raise ConfigError(
                f"{path}: field {key!r} must be a {fields[key]}, "
                f"got {value!r}")
    return doc


def cmd_tapers(args):
    if args.kind == "swce":
        bank = make_swce_bank(args.num_tapers, args.frame_len)
    elif args.kind == "single_hamming":
        bank = make_single_hamming_bank(args.frame_len)
    else:
        bank = make_rectangular_bank(args.frame_len)
    save_bank(bank, args.out)
    print(f"wrote {bank.kind} bank (K={bank.num_tapers}, N={bank.frame_length}) "
          f"to {args.out}")
    return 0


def _feature_config(args):
    doc = load_config_doc(args.config, FEATURE_FIELDS, "feature") \
        if args.config else {}
    bank = load_bank(args.tapers) if args.tapers else None
    try:
        return FeatureConfig(estimator=bank, **doc)
    except TypeError as exc:
        raise ConfigError(f"invalid feature config: {exc}") from exc


def _extract_one(wav_path, config, out_path, fmt):
    samples, rate = read_wav(wav_path)
    if rate != config.sample_rate:
        raise InputError(
            f"{wav_path}: {rate} Hz does not match configured "
            f"{config.sample_rate} Hz")
    stem = os.path.splitext(os.path.basename(wav_path))[0]
    fm = extract_utterance(samples, config, source_id=stem)
    if fmt == "csv":
        save_features_csv(fm, out_path)
    else:
        save_features_tplf(fm, out_path)
    return fm


def cmd_extract(args):
    config = _feature_config(args)
    config.resolve_bank()  # fail fast on taper/frame mismatch
    ext = ".csv" if args.format == "csv" else ".tplf"
    if os.path.isdir(args.input):
        wavs = sorted(f for f in os.listdir(args.input)
                      if f.lower().endswith(".wav"))
        if not wavs:
            raise InputError(f"no .wav files in {args.input}")
        os.makedirs(args.out, exist_ok=True)
        threads = os.environ.get("TAPERLAB_THREADS")
        if threads is not None:
            try:
                workers = max(1, int(threads))
            except ValueError:
                raise ConfigError(
                    f"TAPERLAB_THREADS must be an integer, got {threads!r}")
        else:
            workers = min(8, os.cpu_count() or 1)

        def job(name):
            stem = os.path.splitext(name)[0]
            _extract_one(os.path.join(args.input, name), config,
                         os.path.join(args.out, stem + ext), args.format)

        failures = 0
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for name, future in [(n, pool.submit(job, n)) for n in wavs]:
                try:
                    future.result()
                except Exception as exc:
                    failures += 1
                    print(f"extract failed for {name}: {exc}", file=sys.stderr)
        done = len(wavs) - failures
        print(f"extracted {done}/{len(wavs)} files to {args.out}")
        if done == 0:
            raise InputError("every file in the batch failed")
        return 0
    fm = _extract_one(args.input, config, args.out, args.format)
    print(f"wrote {fm.num_frames}x{fm.num_ceps} features to {args.out}")
    return 0


def cmd_make_corpus(args):
    doc = load_config_doc(args.spec, CORPUS_FIELDS, "corpus") \
        if args.spec else {}
    spec = ToyCorpusSpec(**doc)
    corpus = make_toy_corpus(spec)
    manifest = write_corpus(corpus, args.out, spec.sample_rate)
    print(f"wrote {len(corpus)} utterances ({spec.num_speakers} speakers) "
          f"and {manifest}")
    return 0


def cmd_train(args):
    doc = load_config_doc(args.config, dict(TRAIN_FIELDS, features=_OBJ),
                          "train") if args.config else {}
    feat_doc = {}
    if "features" in doc:
        # nested feature section is an object, validated like --config above
        raw = doc.pop("features")
        unknown = sorted(set(raw) - set(FEATURE_FIELDS))
        if unknown:
            raise ConfigError(f"{args.config}: unknown feature config "
                              f"field(s): {', '.join(unknown)}")
        for key, value in raw.items():
            if not _type_ok(value, FEATURE_FIELDS[key]):
                raise ConfigError(f"{args.config}: field features.{key} must "
                                  f"be a {FEATURE_FIELDS[key]}, got {value!r}")
        feat_doc = raw
    try:
        config = TrainConfig(**doc)
    except TypeError as exc:
        raise ConfigError(f"invalid train config: {exc}") from exc
    feature_config = FeatureConfig(**feat_doc)
    corpus = load_manifest(args.manifest)
    bank, log, state = train([u.as_tuple() for u in corpus], config,
                             feature_config)
    save_bank(bank, args.out_bank)
    if args.log:
        save_training_log(log, args.log)
    if args.checkpoint:
        labels = sorted({u.label for u in corpus})
        save_checkpoint(args.checkpoint, bank, state.classifier, labels)
    first, last = log[0], log[-1]
    print(f"trained {config.epochs} epochs: loss {first.loss:.4f} -> "
          f"{last.loss:.4f}; bank written to {args.out_bank}")
    return 0


def cmd_leakage(args):
    names_banks = []
    for path in args.tapers.split(","):
        path = path.strip()
        if not path:
            continue
        bank = load_bank(path)
        if args.frame_len:
            bank = bank_at_frame_length(bank, args.frame_len)
        names_banks.append((os.path.splitext(os.path.basename(path))[0], bank))
    if not names_banks:
        raise ConfigError("--tapers lists no bank files")
    frame_length = names_banks[0][1].frame_length
    try:
        bins = tuple(int(b) for b in args.bins.split(","))
    except ValueError:
        raise ConfigError(f"--bins must be comma-separated integers, "
                          f"got {args.bins!r}")
    spec = SyntheticSignalSpec(bin_indices=bins, sample_rate=args.sample_rate,
                               n_fft=args.n_fft,
                               duration=max(frame_length, args.n_fft))
    report = leakage_study(names_banks, spec, threshold_db=args.threshold_db)
    for row in report.rows:
        widths = " ".join(
            f"width@{int(round(w.center_hz))}Hz={w.width_hz:.2f}"
            + ("*" if w.clamped else "") for w in row.widths)
        print(f"{row.name}: is_distance={row.is_distance:.6g} {widths}")
    if any(w.clamped for row in report.rows for w in row.widths):
        print("(* width clamped at spectrum edge or tone midpoint)")
    if args.out_report:
        save_report_json(report, args.out_report)
    if args.out_csv:
        save_report_csv(report, args.out_csv)
    if args.out_spectra:
        save_spectra_csv(report, args.out_spectra)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="taperlab",
        description="Multi-taper spectrum estimation with learnable weights.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tapers", help="write a taper bank as JSON")
    p.add_argument("--kind", choices=("swce", "single_hamming", "rectangular"),
                   default="swce")
    p.add_argument("--num-tapers", type=int, default=8,
                   help="K, used by --kind swce")
    p.add_argument("--frame-len", type=int, default=400)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tapers)

    p = sub.add_parser("extract", help="extract MFCC features from WAV input")
    p.add_argument("--in", dest="input", required=True,
                   help="a WAV file, or a directory of WAV files")
    p.add_argument("--tapers", default=None,
                   help="taper bank JSON; omitted means single Hamming")
    p.add_argument("--config", default=None, help="feature config JSON")
    p.add_argument("--out", required=True,
                   help="output file (or directory when --in is a directory)")
    p.add_argument("--format", choices=("tplf", "csv"), default="tplf")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("make-corpus", help="synthesize the labeled toy corpus")
    p.add_argument("--spec", default=None, help="corpus spec JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_make_corpus)

    p = sub.add_parser("train", help="learn taper weights on a labeled corpus")
    p.add_argument("--manifest", required=True, help="path,label manifest CSV")
    p.add_argument("--config", default=None, help="train config JSON")
    p.add_argument("--out-bank", required=True, help="learned bank JSON")
    p.add_argument("--log", default=None, help="JSON-lines training log")
    p.add_argument("--checkpoint", default=None,
                   help="directory for bank + classifier checkpoint")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("leakage", help="tone leakage study over taper banks")
    p.add_argument("--tapers", required=True,
                   help="comma-separated taper bank JSON files")
    p.add_argument("--frame-len", type=int, default=None,
                   help="re-express banks at this taper length first")
    p.add_argument("--n-fft", type=int, default=512)
    p.add_argument("--sample-rate", type=int, default=16000)
    p.add_argument("--bins", default="16,32",
                   help="comma-separated tone bins (cycles per n_fft)")
    p.add_argument("--threshold-db", type=float, default=80.0)
    p.add_argument("--out-report", default=None, help="report JSON")
    p.add_argument("--out-csv", default=None, help="report summary CSV")
    p.add_argument("--out-spectra", default=None, help="per-bin spectra CSV")
    p.set_defaults(func=cmd_leakage)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except (ConfigError, ShapeError, InvalidCenterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
