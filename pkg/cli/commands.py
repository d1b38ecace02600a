import json
import sys
from pathlib import Path

from loguru import logger

from cli.run_config import RunConfig
from detection.detector import DetectionConfig, calibrated, score_windows
from detection.replay import event_to_json, replay_csv
from input_output.checkpoint_io import load_checkpoint, save_checkpoint
from input_output.traces import merge_traces, read_trace, serialize_trace, write_trace
from preprocessing.correlation import correlation_matrix
from preprocessing.feature_catalog import catalog_features
from preprocessing.filter_rules import RULE_MISSING
from preprocessing.pipeline import FeaturePipeline, fit_pipeline
from preprocessing.windows import Label
from report.evaluation import compose_test_set, evaluate
from report.experiment import rotation_table, run_owner_rotation
from report.metrics import render_table
from report.plots import plot_correlation_matrix
from rgan.train import train
from simulation.profiles import default_profiles, load_profiles, profile_by_name
from simulation.simulator import synth_trace


def split_trace_arg(argument: str) -> tuple:
    """'label=path' or a bare path, whose file stem then serves as the driver label"""
    label, separator, path = argument.partition('=')
    if not separator:
        return Path(argument).stem, Path(argument)
    return label, Path(path)


def check_inputs(*arguments) -> None:
    """Every referenced input file must exist before any compute starts"""
    missing = []
    for argument in arguments:
        if argument is None or argument == '-':
            continue
        path = split_trace_arg(argument)[1] if isinstance(argument, str) else Path(argument)
        if not path.is_file():
            missing.append(str(path))
    if missing:
        raise FileNotFoundError(f'Input file(s) not found: {", ".join(missing)}')


def read_traces(arguments) -> list:
    traces = []
    for argument in arguments:
        label, path = split_trace_arg(argument)
        traces.append(read_trace(path, driver_label=label))
    return traces


def write_text(text: str, out) -> None:
    """Writes to the --out file, or to standard output without one"""
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(out).write_text(text, encoding='utf-8')
        logger.info(f'Wrote {out}')


def cmd_synth(args, run_config: RunConfig) -> int:
    check_inputs(args.profile_file)
    profiles = load_profiles(args.profile_file) if args.profile_file else default_profiles()
    if args.profile is None and len(profiles) == 1:
        profile = profiles[0]
    else:
        profile = profile_by_name(args.profile or 'A', profiles)
    duration = args.duration if args.duration is not None else run_config.synth_duration_s
    trace = synth_trace(profile, duration, run_config.synth_seed)
    if args.out is None:
        write_text(serialize_trace(trace), None)
    else:
        write_trace(trace, args.out)
    logger.info(f'Synthesized driver {profile.name}: {trace.duration_s} rows, {trace.feature_count} features')
    return 0


def cmd_features(args, run_config: RunConfig) -> int:
    check_inputs(*args.traces, *(args.drivers or []))
    train_set = merge_traces(read_traces(args.traces))
    multi_driver_set = merge_traces(read_traces(args.drivers)) if args.drivers else None
    fixed = catalog_features() if args.catalog else None
    if fixed is not None:
        fixed = [name for name in fixed if name in train_set.feature_names]
    pipeline = fit_pipeline(train_set, multi_driver_set, run_config.features, fixed_features=fixed)

    write_text(pipeline.to_json() + '\n', args.out)
    report = pipeline.drop_report()
    for row in report.itertuples(index=False):
        logger.info(f'Dropped {row.feature}: {row.reason}' + (f' (kept {row.partner})' if row.partner else ''))
    if args.out is not None:
        sys.stdout.write((report.to_string(index=False) if len(report) else 'No features dropped') + '\n')
    if args.plot:
        missing = set(report.loc[report.reason == RULE_MISSING, 'feature'])
        plotted = [name for name in train_set.feature_names if name not in missing]
        plot_correlation_matrix(correlation_matrix(train_set, plotted), args.plot)
    return 0


def cmd_train(args, run_config: RunConfig) -> int:
    if args.out is None:
        raise ValueError('train needs --out for the checkpoint file')
    check_inputs(*args.traces, args.pipeline)
    owner_traces = read_traces(args.traces)
    if args.pipeline:
        pipeline = FeaturePipeline.from_json(Path(args.pipeline).read_text(encoding='utf-8'))
    else:
        pipeline = fit_pipeline(merge_traces(owner_traces), config=run_config.features)
    windows = pipeline.normalized_windows(owner_traces, label=Label.OWNER)
    logger.info(f'{len(windows)} owner training windows from {len(owner_traces)} trace(s)')
    save_checkpoint(train(windows, run_config.train, pipeline), args.out)
    return 0


def cmd_eval(args, run_config: RunConfig) -> int:
    check_inputs(args.checkpoint, *args.owner, *args.thief, *(args.calibration or []))
    ckpt = load_checkpoint(args.checkpoint)
    pipeline = ckpt.pipeline

    detection = run_config.detection
    if args.threshold is not None:
        detection = DetectionConfig(threshold=args.threshold, calibration_fnr=detection.calibration_fnr)
    target_fnr = args.calibrate_fnr if args.calibrate_fnr is not None else detection.calibration_fnr
    if target_fnr is not None:
        if not args.calibration:
            raise ValueError('Threshold calibration needs owner validation traces (--calibration)')
        raw = [window for trace in read_traces(args.calibration) for window in pipeline.windows(trace).windows]
        detection = calibrated(detection, score_windows(ckpt, raw), target_fnr)

    owner_pool = [window for trace in read_traces(args.owner) for window in pipeline.windows(trace).windows]
    thief_pool = [window for trace in read_traces(args.thief) for window in pipeline.windows(trace).windows]
    ratio = args.ratio if args.ratio is not None else run_config.owner_ratio
    size = args.size if args.size is not None else run_config.eval_size
    test_set = compose_test_set(owner_pool, thief_pool, owner_ratio=ratio, size=size, seed=run_config.eval_seed)
    report = evaluate(ckpt, detection, test_set)

    document = dict(report.to_dict(), threshold=detection.threshold)
    write_text(json.dumps(document, indent=2) + '\n', args.out)
    driver = split_trace_arg(args.owner[0])[0]
    table = render_table([report.to_frame(driver)])
    if args.out is None:
        logger.info('\n' + table)
    else:
        sys.stdout.write(table + '\n')
    return 0


def cmd_replay(args, run_config: RunConfig) -> int:
    check_inputs(args.checkpoint, args.trace)
    ckpt = load_checkpoint(args.checkpoint)
    detection = run_config.detection
    if args.threshold is not None:
        detection = DetectionConfig(threshold=args.threshold)

    out_file = sys.stdout if args.out is None else open(args.out, 'w', encoding='utf-8')
    in_file = sys.stdin if args.trace == '-' else open(args.trace, 'r', encoding='utf-8', newline='')
    trace_id = 'stdin' if args.trace == '-' else Path(args.trace).stem
    verdicts = 0
    try:
        for event in replay_csv(ckpt, detection, in_file, trace_id=trace_id):
            out_file.write(event_to_json(event) + '\n')
            verdicts += 1
        out_file.flush()
    finally:
        if in_file is not sys.stdin:
            in_file.close()
        if out_file is not sys.stdout:
            out_file.close()
    logger.info(f'Replay emitted {verdicts} event(s)')
    return 0


def cmd_experiment(args, run_config: RunConfig) -> int:
    check_inputs(args.profile_file)
    profiles = load_profiles(args.profile_file) if args.profile_file else default_profiles()
    results = run_owner_rotation(
        profiles, run_config.experiment, run_config.features, run_config.train, run_config.detection
    )
    document = [
        dict(result.report.to_dict(), driver=result.driver, threshold=result.detection.threshold) for result in results
    ]
    write_text(json.dumps(document, indent=2) + '\n', args.out)
    table = rotation_table(results)
    if args.out is None:
        logger.info('\n' + table)
    else:
        sys.stdout.write(table + '\n')
    return 0
