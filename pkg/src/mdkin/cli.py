"""Command-line interface: simulate, analyse and sift micro-Doppler sign signatures.

Exit codes: 0 success, 1 usage error, 2 data/parse error, 3 rule
configuration error. Diagnostics go to stderr; outputs are written
atomically so a failed run leaves no partial files.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from mdkin import io
from mdkin.errors import ConfigurationError, DomainError, MdkinError, ParseError, ShapeError, UsageError
from mdkin.kinematics import (
    DEFAULT_HANDEDNESS_THRESHOLD,
    KinematicProfile,
    PeakConfig,
    calibrate_handedness_threshold,
    classify_handedness,
    corpus_kinematic_stats,
)
from mdkin.radar_sim import RadarConfig, SyntheticSignSpec, range_resolution, synth_sign_trajectory, velocity_resolution
from mdkin.sifter import AnalysisConfig, SiftConfig, analyze_sample, lexicon_index, sift_corpus

log = logging.getLogger("mdkin")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONFIG = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))  # preserves input order


def _analysis_config(args) -> AnalysisConfig:
    if args.window_len < 1 or args.hop < 1:
        raise UsageError("--window-len and --hop must be >= 1")
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    try:
        peaks = PeakConfig(args.min_height, args.min_prominence, args.min_separation)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    return AnalysisConfig(
        window_kind=args.window,
        window_len=args.window_len,
        hop=args.hop,
        scale_factor=args.alpha,
        smooth=args.smooth,
        peaks=peaks,
    )


def _load_samples(inputs, workers):
    paths = io.signature_paths(inputs)
    if not paths:
        raise ParseError("no signature files given")
    try:
        sigs = _map(io.read_signature, paths, workers)
    except OSError as exc:
        raise ParseError(str(exc)) from None
    return [s.to_sample() for s in sigs]


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    radar = RadarConfig(
        center_frequency_hz=args.fc,
        bandwidth_hz=args.bandwidth,
        chirp_duration_s=args.chirp,
        pulses_per_cpi=args.pulses_per_cpi,
        paper_compat=args.paper_compat,
    )
    analysis = _analysis_config(args)
    jobs = []
    fields = set(SyntheticSignSpec.__dataclass_fields__)
    for lineno, rec in io.iter_jsonl(args.specs):
        unknown = set(rec) - fields - {"sample_id", "class_label"}
        if unknown:
            raise ParseError(f"{args.specs}:{lineno}: unknown fields {sorted(unknown)}")
        try:
            spec = SyntheticSignSpec(**{k: v for k, v in rec.items() if k in fields})
        except (DomainError, TypeError) as exc:
            raise ParseError(f"{args.specs}:{lineno}: {exc}") from None
        sid = str(rec.get("sample_id", f"sample{len(jobs):05d}"))
        jobs.append((len(jobs), sid, str(rec.get("class_label", "")), spec))

    seeds = np.random.SeedSequence(args.seed).spawn(len(jobs))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def run(job):
        idx, sid, label, spec = job
        try:
            sign = synth_sign_trajectory(spec, radar)
        except DomainError as exc:
            raise ParseError(f"sample {sid}: {exc}") from None
        if args.noise_power is not None:
            seed = int(seeds[idx].generate_state(1)[0])
            iq = sign.simulate(noise_power=args.noise_power, seed=seed)
        else:
            iq = sign.simulate()
        spec_map = analysis.spectrogram(iq)
        extra = {"synthetic": spec.to_dict(), "mean_envelope_speed_mps": spec.mean_envelope_speed()}
        return sid, io.encode_signature(io.SignatureFile(spec_map, label, sid, extra))

    encoded = _map(run, jobs, args.workers)
    for sid, data in encoded:
        io.atomic_write_bytes(out_dir / f"{sid}{io.SUFFIX}", data)
    log.info("wrote %d signatures to %s", len(encoded), out_dir)
    return EXIT_OK


def _profile_record(analysis, spec) -> dict:
    radar = spec.radar or RadarConfig()
    return {
        **analysis.profile.to_dict(),
        "range_resolution_m": range_resolution(radar),
        "velocity_resolution_mps": velocity_resolution(radar),
        "upper_mps": [float(v) for v in analysis.upper_mps],
        "lower_mps": [float(v) for v in analysis.lower_mps],
    }


def cmd_analyze(args) -> int:
    samples = _load_samples(args.signatures, args.workers)
    cfg = _analysis_config(args)
    analyses = _map(lambda s: analyze_sample(s, cfg), samples, args.workers)
    energies = [a.profile.total_energy for a in analyses]
    scale = max(energies) if max(energies) > 0 else 1.0

    threshold = args.handedness_threshold
    if threshold is None and args.lexicon:
        lex = lexicon_index(io.read_lexicon(args.lexicon))
        threshold = calibrate_handedness_threshold([a.profile for a in analyses], lex, scale).threshold
    if threshold is None:
        threshold = DEFAULT_HANDEDNESS_THRESHOLD

    records = []
    for a, s in zip(analyses, samples):
        norm = a.profile.total_energy / scale
        prof = KinematicProfile(
            **{**a.profile.to_dict(), "normalized_energy": norm, "handedness": classify_handedness(norm, threshold)}
        )
        rec = _profile_record(a, s.spectrogram)
        rec.update(prof.to_dict())
        rec["handedness_threshold"] = threshold
        records.append(rec)
    io.write_jsonl(args.out, records)
    return EXIT_OK


def cmd_stats(args) -> int:
    profiles, curves = [], {}
    for lineno, rec in io.iter_jsonl(args.profiles):
        try:
            p = KinematicProfile.from_dict(rec)
            curve = np.concatenate([np.asarray(rec["upper_mps"], float), np.asarray(rec["lower_mps"], float)])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{args.profiles}:{lineno}: {exc}") from None
        if p.sample_id in curves:
            raise ParseError(f"{args.profiles}:{lineno}: duplicate sample_id {p.sample_id!r}")
        profiles.append(p)
        curves[p.sample_id] = curve
    stats = corpus_kinematic_stats(profiles, curves)
    io.write_jsonl(args.out, ({"record": "class_stats", **s.to_dict()} for s in stats.values()))
    return EXIT_OK


def cmd_sift(args) -> int:
    candidates = _load_samples(args.candidates, args.workers)
    reference = _load_samples(args.reference, args.workers)
    lexicon = io.read_lexicon(args.lexicon)
    cfg = SiftConfig(_analysis_config(args), args.handedness_threshold, args.std_scale)
    report = sift_corpus(candidates, reference, lexicon, cfg)
    io.atomic_write_bytes(args.out, report.to_jsonl().encode("utf-8"))
    log.info("%d of %d candidates sifted out", report.n_sifted, len(report.verdicts))
    return EXIT_OK


def cmd_export_plot(args) -> int:
    sig = io.read_signature(args.signature)
    power = sig.spectrogram.power
    db = 10.0 * np.log10(power + 1e-12)
    db = np.maximum(db, db.max() - args.dynamic_range)
    lines = [
        f"# sample_id={sig.sample_id} class_label={sig.class_label}",
        f"# rows=doppler_bins({power.shape[0]}) cols=frames({power.shape[1]}) unit=dB dynamic_range={args.dynamic_range}",
        "# freq_axis_hz " + " ".join(repr(float(f)) for f in sig.spectrogram.freq_axis_hz),
        "# time_axis_s " + " ".join(repr(float(t)) for t in sig.spectrogram.time_axis_s),
    ]
    lines.extend(" ".join(f"{v:.4f}" for v in row) for row in db)
    io.atomic_write_bytes(args.out, ("\n".join(lines) + "\n").encode("utf-8"))
    return EXIT_OK


# ---------------------------------------------------------------------------


def _add_analysis_flags(p):
    g = p.add_argument_group("analysis")
    g.add_argument("--window", default="hann", choices=["hann", "hamming", "rectangular", "gaussian"])
    g.add_argument("--window-len", type=int, default=AnalysisConfig.window_len)
    g.add_argument("--hop", type=int, default=AnalysisConfig.hop)
    g.add_argument("--alpha", type=float, default=AnalysisConfig.scale_factor, help="envelope scale factor")
    g.add_argument("--smooth", action="store_true", help="3-tap median filter on envelopes")
    g.add_argument("--min-height", type=float, help="stroke peak height, m/s")
    g.add_argument("--min-prominence", type=float, help="stroke peak prominence, m/s")
    g.add_argument("--min-separation", type=int, help="stroke peak spacing, frames")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mdkin", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--workers", type=int, default=1, help="worker threads (output order is input order)")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("simulate", help="synthetic sign specs (JSONL) -> signature files")
    p.add_argument("specs")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-power", type=float)
    p.add_argument("--fc", type=float, default=RadarConfig.center_frequency_hz)
    p.add_argument("--bandwidth", type=float, default=RadarConfig.bandwidth_hz)
    p.add_argument("--chirp", type=float, default=RadarConfig.chirp_duration_s, help="chirp duration / PRI, s")
    p.add_argument("--pulses-per-cpi", type=int, default=RadarConfig.pulses_per_cpi)
    p.add_argument("--paper-compat", action="store_true", help="use c = 3e8")
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="signatures -> kinematic profiles (JSONL)")
    p.add_argument("signatures", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--lexicon", help="calibrate the handedness threshold against this lexicon")
    p.add_argument("--handedness-threshold", type=float)
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("stats", help="profiles -> per-class statistics (JSONL)")
    p.add_argument("profiles")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sift", help="apply kinematic Rules 1-3 to candidates")
    p.add_argument("--candidates", nargs="+", required=True)
    p.add_argument("--reference", nargs="+", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--handedness-threshold", type=float)
    p.add_argument("--std-scale", type=float, default=1.0)
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_sift)

    p = sub.add_parser("export-plot", help="signature -> dB text grid")
    p.add_argument("signature")
    p.add_argument("--out", required=True)
    p.add_argument("--dynamic-range", type=float, default=60.0)
    p.set_defaults(func=cmd_export_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"mdkin: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mdkin: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigurationError as exc:
        print(f"mdkin: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, DomainError, ShapeError) as exc:
        code = getattr(exc, "code", "data")
        print(f"mdkin: data error [{code}]: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"mdkin: data error [io]: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MdkinError as exc:
        print(f"mdkin: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
