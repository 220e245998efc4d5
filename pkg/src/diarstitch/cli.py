"""Command-line frontend: synth, cluster, pipeline, and score subcommands.

Exit codes: 0 on success, 1 when some recordings failed (the rest are
still processed and written), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import io as dio
from .pipeline import (
    ALGORITHMS,
    DiarizationResult,
    PipelineConfig,
    assignment_report,
    diarize_recording,
)
from .scoring import (
    ReferenceAnnotation,
    UndefinedDerError,
    compute_der,
    der_table_rows_tsv,
    format_der_table,
    report_by_speaker_count,
)
from .stitch import SegmentList
from .synth import SynthConfig, generate_recording

log = logging.getLogger("diarstitch")


def _speaker_count(value: str) -> int | str:
    if value in ("estimate", "oracle"):
        return value
    try:
        count = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected a positive integer, 'estimate', or 'oracle', got {value!r}"
        ) from None
    if count < 1:
        raise argparse.ArgumentTypeError(f"speaker count must be >= 1, got {count}")
    return count


def _add_clustering_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--algorithm", choices=ALGORITHMS, default="cahc")
    parser.add_argument("--num-speakers", type=_speaker_count, default="estimate",
                        help="positive integer, 'estimate', or 'oracle' (needs --ref)")
    parser.add_argument("--tau", type=float, default=0.05,
                        help="silent-slot threshold on mean posterior")
    parser.add_argument("--kappa", type=float, default=10000.0,
                        help="cannot-link distance inserted for constrained AHC")
    parser.add_argument("--ahc-threshold", type=float, default=1.0,
                        help="AHC merge threshold in estimated-count mode")
    parser.add_argument("--max-k", type=int, default=10,
                        help="largest cluster count the eigengap may choose")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--metric", choices=("euclidean", "cosine"), default="euclidean")
    parser.add_argument("--posterior-threshold", type=float, default=0.5)
    parser.add_argument("--min-segment-duration", type=float, default=0.0)
    parser.add_argument("--ref", type=Path, default=None,
                        help="reference RTTM (for oracle clustering or oracle counts)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diarstitch",
        description="Stitch block-wise diarization output via constrained clustering",
    )
    parser.add_argument("--quiet", action="store_true", help="log warnings only")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic block archive")
    p_synth.add_argument("--speakers", type=int, required=True)
    p_synth.add_argument("--blocks", type=int, required=True)
    p_synth.add_argument("--block-frames", type=int, default=300)
    p_synth.add_argument("--s-local", type=int, default=3)
    p_synth.add_argument("--embedding-dim", type=int, default=16)
    p_synth.add_argument("--inter-distance", type=float, default=3.0)
    p_synth.add_argument("--intra-stddev", type=float, default=0.3)
    p_synth.add_argument("--posterior-noise", type=float, default=0.1)
    p_synth.add_argument("--activity-prob", type=float, default=0.7)
    p_synth.add_argument("--overlap-prob", type=float, default=0.2)
    p_synth.add_argument("--frame-duration", type=float, default=0.1)
    p_synth.add_argument("--recording-id", default=None,
                         help="default: name of the output directory")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", type=Path, required=True)

    p_cluster = sub.add_parser("cluster", help="cluster one archive, print the slot labels")
    p_cluster.add_argument("archive", type=Path)
    _add_clustering_flags(p_cluster)
    p_cluster.add_argument("--out", type=Path, default=None, help="default: stdout")

    p_pipe = sub.add_parser("pipeline", help="diarize archives end to end into an RTTM")
    p_pipe.add_argument("archives", type=Path, nargs="+")
    _add_clustering_flags(p_pipe)
    p_pipe.add_argument("--out", type=Path, required=True, help="hypothesis RTTM path")
    p_pipe.add_argument("--report", type=Path, default=None,
                        help="per-recording assignment report path")
    p_pipe.add_argument("--jobs", type=int, default=1)

    p_score = sub.add_parser("score", help="score a hypothesis RTTM against a reference")
    p_score.add_argument("--hyp", type=Path, required=True)
    p_score.add_argument("--ref", type=Path, required=True)
    p_score.add_argument("--collar", type=float, default=0.25)
    p_score.add_argument("--step", type=float, default=0.01)
    p_score.add_argument("--no-overlap", action="store_true",
                         help="exclude reference overlap regions from scoring")
    p_score.add_argument("--tsv", type=Path, default=None,
                         help="also write the table as TSV rows")
    return parser


def _read_references(path: Path) -> dict[str, ReferenceAnnotation]:
    with open(path, encoding="utf-8") as handle:
        by_recording = dio.read_rttm(handle)
    return {
        recording_id: ReferenceAnnotation.from_segments(recording_id, segments)
        for recording_id, segments in by_recording.items()
    }


def _cmd_synth(args: argparse.Namespace) -> int:
    recording_id = args.recording_id or args.out.name
    config = SynthConfig(
        num_speakers=args.speakers,
        num_blocks=args.blocks,
        frames_per_block=args.block_frames,
        s_local=args.s_local,
        embedding_dim=args.embedding_dim,
        inter_speaker_distance=args.inter_distance,
        intra_speaker_stddev=args.intra_stddev,
        posterior_noise_stddev=args.posterior_noise,
        speaker_activity_prob=args.activity_prob,
        overlap_prob=args.overlap_prob,
        seed=args.seed,
        frame_duration=args.frame_duration,
        recording_id=recording_id,
    )
    blocks, reference, _ = generate_recording(config)
    dio.write_block_archive(blocks, config.frame_duration, args.out)
    with open(args.out / "reference.rttm", "w", encoding="utf-8") as handle:
        dio.write_rttm({recording_id: reference.segments}, handle)
    log.info("%s: wrote %d blocks and reference to %s", recording_id, len(blocks), args.out)
    return 0


def _pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig(
        algorithm=args.algorithm,
        num_speakers=args.num_speakers,
        tau=args.tau,
        kappa=args.kappa,
        ahc_threshold=args.ahc_threshold,
        max_k=args.max_k,
        seed=args.seed,
        posterior_threshold=args.posterior_threshold,
        min_segment_duration=args.min_segment_duration,
        metric=args.metric,
    )


def _needs_reference(args: argparse.Namespace) -> bool:
    return args.algorithm == "oracle" or args.num_speakers == "oracle"


def _run_one(
    archive: Path, config: PipelineConfig, references: dict[str, ReferenceAnnotation] | None
) -> DiarizationResult:
    blocks, frame_duration = dio.read_block_archive(archive)
    reference = None
    if references is not None:
        recording_id = blocks[0].recording_id
        if recording_id not in references:
            raise ValueError(f"reference RTTM has no recording {recording_id!r}")
        reference = references[recording_id]
    return diarize_recording(blocks, frame_duration, config, reference)


def _cmd_cluster(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if _needs_reference(args) and args.ref is None:
        parser.error("--ref is required for oracle clustering or oracle speaker counts")
    try:
        config = _pipeline_config(args)
    except ValueError as err:
        parser.error(str(err))
    references = _read_references(args.ref) if args.ref is not None else None
    try:
        result = _run_one(args.archive, config, references if _needs_reference(args) else None)
    except Exception as err:  # noqa: BLE001 - reported per recording
        log.error("%s: %s", args.archive, err)
        return 1
    report = assignment_report(result)
    if args.out is None:
        sys.stdout.write(report)
    else:
        args.out.write_text(report, encoding="utf-8")
    return 0


def _cmd_pipeline(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if _needs_reference(args) and args.ref is None:
        parser.error("--ref is required for oracle clustering or oracle speaker counts")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        config = _pipeline_config(args)
    except ValueError as err:
        parser.error(str(err))
    references = _read_references(args.ref) if _needs_reference(args) else None

    results: list[DiarizationResult] = []
    failures: list[tuple[Path, str]] = []

    def run(archive: Path) -> DiarizationResult | Exception:
        try:
            return _run_one(archive, config, references)
        except Exception as err:  # noqa: BLE001 - reported per recording
            return err

    if args.jobs == 1:
        outcomes = [run(archive) for archive in args.archives]
    else:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(run, args.archives))
    for archive, outcome in zip(args.archives, outcomes):
        if isinstance(outcome, Exception):
            failures.append((archive, str(outcome)))
            log.error("%s: %s", archive, outcome)
        else:
            results.append(outcome)

    if results:
        segments = {result.recording_id: result.segments for result in results}
        with open(args.out, "w", encoding="utf-8") as handle:
            dio.write_rttm(segments, handle)
        if args.report is not None:
            ordered = sorted(results, key=lambda r: r.recording_id)
            args.report.write_text(
                "".join(assignment_report(result) for result in ordered), encoding="utf-8"
            )
    if failures:
        log.error("%d of %d recordings failed:", len(failures), len(args.archives))
        for archive, message in failures:
            log.error("  %s: %s", archive, message)
        return 1
    return 0


def _cmd_score(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.collar < 0 or args.step <= 0:
        parser.error("--collar must be >= 0 and --step must be > 0")
    with open(args.ref, encoding="utf-8") as handle:
        ref_map = dio.read_rttm(handle)
    with open(args.hyp, encoding="utf-8") as handle:
        hyp_map = dio.read_rttm(handle)
    unknown = sorted(set(hyp_map) - set(ref_map))
    failures = []
    if unknown:
        failures.extend((rec, "not present in the reference") for rec in unknown)
    rows_input = []
    for recording_id, ref_segments in sorted(ref_map.items()):
        reference = ReferenceAnnotation.from_segments(recording_id, ref_segments)
        hyp_segments = hyp_map.get(recording_id, SegmentList(segments=[]))
        try:
            breakdown = compute_der(
                hyp_segments, reference, args.collar, not args.no_overlap, args.step
            )
        except UndefinedDerError as err:
            failures.append((recording_id, str(err)))
            continue
        rows_input.append((recording_id, breakdown, reference.num_speakers))
    if rows_input:
        rows = report_by_speaker_count(rows_input)
        print(format_der_table(rows))
        if args.tsv is not None:
            args.tsv.write_text(der_table_rows_tsv(rows), encoding="utf-8")
    for recording_id, message in failures:
        log.error("%s: %s", recording_id, message)
    return 1 if failures else 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "cluster":
            return _cmd_cluster(args, parser)
        if args.command == "pipeline":
            return _cmd_pipeline(args, parser)
        return _cmd_score(args, parser)
    except (ValueError, OSError) as err:
        log.error("%s", err)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
