"""Command-line entry points: disguise audio, estimate a disguise,
build a toy corpus, draw trials, and run the evaluation matrix.

Machine-readable results go to stdout as JSON; progress, summaries and
timings go to stderr so reports stay reproducible byte for byte.
"""

import argparse
import csv
import json
import logging
import os
import sys
import time

import numpy as np

from .audio import AudioBuffer, load_wav, save_wav
from .disguise import DisguiseFamily, DisguiseSpec, disguise, parse_family
from .evaluate import (Corpus, CorpusConfig, Trial, gen_trials, run_matrix,
                       synth_corpus)
from .pitch import UnvoicedUtteranceError
from .restore import (GridSpec, default_grid, f0_ratio_restore,
                      grid_search_restore)
from .speaker import (ScorerConfig, embed, load_external_embeddings, mfcc,
                      write_embeddings)

log = logging.getLogger("voxrestore")


def _setup_logging(level: str) -> None:
    numeric = getattr(logging, level.upper(), None)
    if numeric is None:
        raise ValueError(f"unknown log level {level!r}")
    logging.basicConfig(level=numeric, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")


def _parse_scorer(text: str) -> ScorerConfig:
    if text == "builtin":
        return ScorerConfig()
    if text.startswith("external:"):
        path = text[len("external:"):]
        return ScorerConfig(mode="external",
                            table=load_external_embeddings(path))
    raise ValueError(
        f"scorer must be 'builtin' or 'external:<path>', got {text!r}")


def _parse_grid(text: str, family) -> GridSpec:
    if text == "default":
        return default_grid(family)
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(
            f"grid must be 'default' or 'lo:hi:step', got {text!r}")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0 or hi < lo:
        raise ValueError(f"bad grid bounds {text!r}")
    count = int(round((hi - lo) / step)) + 1
    values = np.round(lo + step * np.arange(count), 10)
    return GridSpec(parse_family(family), tuple(float(v) for v in values))


def _utt_id(token: str) -> str:
    return os.path.splitext(os.path.basename(token))[0]


def cmd_disguise(args) -> int:
    buf = load_wav(args.input)
    spec = DisguiseSpec.from_string(args.spec)
    t0 = time.perf_counter()
    out = disguise(buf, spec)
    save_wav(args.output, out)
    log.info("disguised %s -> %s in %.2fs", args.input, args.output,
             time.perf_counter() - t0)
    _emit({"input": os.fspath(args.input), "output": os.fspath(args.output),
           "family": spec.family.value, "param": spec.param,
           "samples": len(out), "sample_rate": out.sample_rate})
    print(f"wrote {args.output} ({len(out)} samples at {out.sample_rate} Hz)",
          file=sys.stderr)
    return 0


def cmd_estimate(args) -> int:
    enroll = load_wav(args.enroll)
    test = load_wav(args.test)
    scorer = _parse_scorer(args.scorer)
    family = parse_family(args.family)
    grid = _parse_grid(args.grid, family)
    enroll_id = args.enroll_id or _utt_id(args.enroll)
    test_id = args.test_id or _utt_id(args.test)
    t0 = time.perf_counter()
    if args.method == "grid":
        result = grid_search_restore(
            enroll, test, grid=grid, family=family, scorer=scorer,
            enroll_id=enroll_id, test_id=test_id,
            with_audio=args.restored is not None)
    else:
        result = f0_ratio_restore(
            enroll, test, family=family, grid=grid, scorer=scorer,
            enroll_id=enroll_id, test_id=test_id,
            with_audio=args.restored is not None)
    elapsed = time.perf_counter() - t0
    if args.restored is not None:
        save_wav(args.restored, result.restored_audio)
    _emit(result.to_dict())
    print(f"estimated {result.family.value}:{result.alpha_hat:g} "
          f"(distance {result.d_hat:.4f}) in {elapsed:.2f}s",
          file=sys.stderr)
    return 0


def cmd_corpus(args) -> int:
    config = CorpusConfig(n_speakers=args.speakers,
                          utts_per_speaker=args.utts,
                          seed=args.seed,
                          sample_rate=args.sample_rate,
                          duration_s=args.duration)
    t0 = time.perf_counter()
    corpus = synth_corpus(config)
    os.makedirs(args.out, exist_ok=True)
    index_path = os.path.join(args.out, "corpus.tsv")
    with open(index_path, "w", encoding="utf-8", newline="\n") as fh:
        for utt, buf in corpus.utterances.items():
            filename = f"{utt}.wav"
            save_wav(os.path.join(args.out, filename), buf)
            fh.write(f"{utt}\t{corpus.speaker_of[utt]}\t{filename}\n")
    log.info("synthesized %d utterances in %.2fs",
             len(corpus.utterances), time.perf_counter() - t0)
    _emit({"out": os.fspath(args.out), "n_speakers": config.n_speakers,
           "utts_per_speaker": config.utts_per_speaker,
           "n_utterances": len(corpus.utterances),
           "sample_rate": config.sample_rate, "seed": config.seed})
    print(f"wrote {len(corpus.utterances)} utterances under {args.out}",
          file=sys.stderr)
    return 0


def _load_corpus_dir(path: str) -> Corpus:
    index_path = os.path.join(path, "corpus.tsv")
    if not os.path.isfile(index_path):
        raise FileNotFoundError(f"no corpus index at {index_path}")
    utterances = {}
    speaker_of = {}
    with open(index_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise ValueError(f"{index_path}:{lineno}: expected "
                                 f"'utt speaker filename'")
            utt, spk, filename = parts
            utterances[utt] = load_wav(os.path.join(path, filename))
            speaker_of[utt] = spk
    if not utterances:
        raise ValueError(f"corpus index {index_path} is empty")
    return Corpus(utterances, speaker_of, None)


def cmd_trials(args) -> int:
    corpus = _load_corpus_dir(args.corpus)
    t0 = time.perf_counter()
    trials, extra = gen_trials(corpus, args.n, policy=args.disguise,
                               seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    disg_dir = os.path.join(args.out, "disguised")
    if extra:
        os.makedirs(disg_dir, exist_ok=True)
    token_of = {}
    for utt in corpus.utterances:
        rel = os.path.relpath(os.path.join(args.corpus, f"{utt}.wav"),
                              args.out)
        token_of[utt] = rel
    for test_id, buf in extra.items():
        filename = os.path.join("disguised", f"{test_id}.wav")
        save_wav(os.path.join(args.out, filename), buf)
        token_of[test_id] = filename
    trial_path = os.path.join(args.out, "trials.txt")
    with open(trial_path, "w", encoding="utf-8", newline="\n") as fh:
        for t in trials:
            line = (f"{1 if t.label else 0} {token_of[t.enroll_id]} "
                    f"{token_of[t.test_id]}")
            if t.disguise_meta is not None:
                line += f" {t.disguise_meta.spec_string()}"
            fh.write(line + "\n")
    n_same = sum(1 for t in trials if t.label)
    log.info("drew %d trials in %.2fs", len(trials),
             time.perf_counter() - t0)
    _emit({"trial_file": trial_path, "n_trials": len(trials),
           "n_same": n_same, "n_diff": len(trials) - n_same,
           "policy": args.disguise, "n_disguised_files": len(extra)})
    print(f"wrote {trial_path} ({n_same} target / "
          f"{len(trials) - n_same} impostor)", file=sys.stderr)
    return 0


def _read_trials(path: str):
    base = os.path.dirname(os.path.abspath(path))
    trials = []
    tokens = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) not in (3, 4):
                raise ValueError(
                    f"{path}:{lineno}: expected 'label enroll test "
                    f"[family:param]'")
            if parts[0] not in ("0", "1"):
                raise ValueError(f"{path}:{lineno}: label must be 0 or 1")
            meta = (DisguiseSpec.from_string(parts[3])
                    if len(parts) == 4 else None)
            trials.append(Trial(parts[1], parts[2], parts[0] == "1", meta))
            tokens.extend(parts[1:3])
    if not trials:
        raise ValueError(f"no trials found in {path}")
    return trials, list(dict.fromkeys(tokens)), base


def _restoration_slug(name: str) -> str:
    return name.replace(":", "-")


def cmd_eval(args) -> int:
    trials, tokens, base = _read_trials(args.trials)
    scorer = _parse_scorer(args.scorer)
    restorations = args.restore or ["none"]
    t0 = time.perf_counter()
    audio = {}
    for token in tokens:
        full = token if os.path.isabs(token) else os.path.join(base, token)
        if scorer.mode == "external" and not os.path.isfile(full):
            continue   # embeddings come from the table; audio optional
        audio[token] = load_wav(full)
    report = run_matrix(audio, trials, restorations, scorer=scorer,
                        jobs=args.jobs)
    elapsed = time.perf_counter() - t0

    payload = report.to_dict()
    out_json = os.fspath(args.out)
    stem, _ = os.path.splitext(out_json)
    with open(out_json, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(stem + ".csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["disguise", "restoration", "eer_percent",
                         "threshold", "n_same", "n_diff"])
        for row in report.rows:
            writer.writerow([report.disguise_label, row.restoration,
                             repr(row.eer.eer_percent),
                             repr(row.eer.threshold), row.eer.n_same,
                             row.eer.n_diff])
    for row in report.rows:
        if not row.per_alpha:
            continue
        path = f"{stem}_per_alpha_{_restoration_slug(row.restoration)}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["alpha", "eer"])
            single_family = len({e["family"] for e in row.per_alpha}) == 1
            for entry in row.per_alpha:
                key = (f"{entry['param']:g}" if single_family
                       else f"{entry['family']}:{entry['param']:g}")
                writer.writerow([key, repr(entry["eer_percent"])])

    if args.dump_embeddings:
        if scorer.mode != "builtin":
            raise ValueError(
                "--dump-embeddings only applies to the builtin scorer")
        table = {}
        for token in sorted(set(t.enroll_id for t in trials)
                            | set(t.test_id for t in trials)):
            table[token] = embed(mfcc(audio[token]), token)
        write_embeddings(args.dump_embeddings, table)

    log.info("evaluated %d trials x %d restorations in %.2fs",
             report.n_trials, len(report.rows), elapsed)
    _emit(payload)
    for row in report.rows:
        print(f"{row.restoration}: EER {row.eer.eer_percent:.2f}% "
              f"(threshold {row.eer.threshold:.4f})", file=sys.stderr)
    print(f"report written to {out_json} in {elapsed:.2f}s", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="base seed for anything randomized")
    common.add_argument("--jobs", type=int, default=1,
                        help="worker threads; results are identical for any "
                             "value")
    common.add_argument("--log-level",
                        default=os.environ.get("VOXRESTORE_LOG", "warning"),
                        help="debug, info, warning or error "
                             "(env: VOXRESTORE_LOG)")

    parser = argparse.ArgumentParser(
        prog="voxrestore",
        description="Voice disguise, disguise-parameter estimation and "
                    "restoration-based speaker verification tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("disguise", parents=[common],
                       help="apply one disguise transform to a WAV file")
    p.add_argument("--in", dest="input", required=True, metavar="WAV")
    p.add_argument("--out", dest="output", required=True, metavar="WAV")
    p.add_argument("--spec", required=True,
                   help="transform as family:param, e.g. pitch-freq:-4 or "
                        "vtln-power:0.2")
    p.set_defaults(func=cmd_disguise)

    p = sub.add_parser("estimate", parents=[common],
                       help="estimate a disguise parameter against an "
                            "enrolled utterance")
    p.add_argument("--enroll", required=True, metavar="WAV")
    p.add_argument("--test", required=True, metavar="WAV")
    p.add_argument("--family", default="pitch-freq")
    p.add_argument("--method", choices=("grid", "f0ratio"), default="grid")
    p.add_argument("--grid", default="default",
                   help="'default' or lo:hi:step")
    p.add_argument("--scorer", default="builtin",
                   help="'builtin' or external:<sidecar path>")
    p.add_argument("--enroll-id", default=None,
                   help="utterance id for external lookups")
    p.add_argument("--test-id", default=None)
    p.add_argument("--restored", default=None, metavar="WAV",
                   help="also write the restored audio here")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("corpus", parents=[common],
                       help="synthesize a deterministic toy corpus")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--speakers", type=int, default=8)
    p.add_argument("--utts", type=int, default=5)
    p.add_argument("--sample-rate", type=int, default=16000)
    p.add_argument("--duration", type=float, default=2.0)
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("trials", parents=[common],
                       help="draw verification trials from a corpus "
                            "directory")
    p.add_argument("--corpus", required=True, metavar="DIR")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--disguise", default="none",
                   help="none, a family name, or vtln-all")
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("eval", parents=[common],
                       help="score trials under one or more restorations "
                            "and write a report")
    p.add_argument("--trials", required=True, metavar="FILE")
    p.add_argument("--out", required=True, metavar="JSON")
    p.add_argument("--restore", action="append", default=None,
                   metavar="METHOD",
                   help="none, f0ratio, a family name, or grid:<family>; "
                        "repeatable (default: none)")
    p.add_argument("--scorer", default="builtin")
    p.add_argument("--dump-embeddings", default=None, metavar="FILE",
                   help="write builtin embeddings of all trial utterances "
                        "in the external sidecar format")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _setup_logging(args.log_level)
        return args.func(args)
    except (ValueError, KeyError, OSError, UnvoicedUtteranceError) as exc:
        msg = exc.args[0] if exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
