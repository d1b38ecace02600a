import json

import pytest

from cli.commands import check_inputs, split_trace_arg
from cli.run_config import RunConfig, load_config
from main import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from simulation.profiles import default_profiles, dump_profiles

TINY_TRAIN = ['--set', 'train.epochs=1', '--set', 'train.hidden_dim=4', '--set', 'train.batch_size=16']


@pytest.fixture
def traces(tmp_path):
    owner = tmp_path / 'owner.csv'
    thief = tmp_path / 'thief.csv'
    assert main(['synth', '--profile', 'A', '--duration', '150', '--seed', '1', '--out', str(owner)]) == EXIT_OK
    assert main(['synth', '--profile', 'B', '--duration', '100', '--seed', '2', '--out', str(thief)]) == EXIT_OK
    return owner, thief


def test_packaged_config_defaults():
    run_config = RunConfig.from_config(load_config())
    assert run_config.features.window_length_s == 33
    assert run_config.train.epochs == 40
    assert run_config.train.lr_discriminator == 0.5
    assert run_config.detection.threshold == 0.5
    assert run_config.owner_ratio == 0.8


def test_seed_override_propagates():
    run_config = RunConfig.from_config(load_config(overrides=['seed=7']))
    assert run_config.train.seed == 7
    assert run_config.eval_seed == 7
    assert run_config.synth_seed == 7


def test_user_config_file_is_merged(tmp_path):
    path = tmp_path / 'user.yaml'
    path.write_text('train:\n  epochs: 5\n')
    assert RunConfig.from_config(load_config(path)).train.epochs == 5


def test_split_trace_arg(tmp_path):
    assert split_trace_arg('B=data/trip.csv')[0] == 'B'
    assert split_trace_arg('data/trip.csv')[0] == 'trip'
    with pytest.raises(FileNotFoundError, match='absent.csv'):
        check_inputs(str(tmp_path / 'absent.csv'), None, '-')


def test_synth_is_reproducible(capsys):
    assert main(['synth', '--profile', 'C', '--duration', '60']) == EXIT_OK
    first = capsys.readouterr().out
    assert main(['synth', '--profile', 'C', '--duration', '60']) == EXIT_OK
    second = capsys.readouterr().out
    assert first == second
    assert len(first.splitlines()) == 61
    assert first.splitlines()[0].startswith('car_speed,')


def test_synth_unknown_profile_is_a_usage_error():
    assert main(['synth', '--profile', 'Z', '--duration', '60']) == EXIT_USAGE


def test_unknown_config_key_is_a_usage_error():
    assert main(['synth', '--duration', '60', '--set', 'train.bogus=1']) == EXIT_USAGE


def test_missing_input_is_a_runtime_error(tmp_path):
    assert main(['train', str(tmp_path / 'absent.csv'), '--out', str(tmp_path / 'model.json')]) == EXIT_RUNTIME


def test_subcommand_is_required():
    with pytest.raises(SystemExit) as error:
        main([])
    assert error.value.code == EXIT_USAGE


def test_features_writes_pipeline(tmp_path, traces, capsys):
    owner, thief = traces
    pipeline_path = tmp_path / 'pipeline.json'
    plot_path = tmp_path / 'correlation.png'
    arguments = ['features', f'A={owner}', '--drivers', f'A={owner}', f'B={thief}']
    assert main(arguments + ['--out', str(pipeline_path), '--plot', str(plot_path)]) == EXIT_OK
    document = json.loads(pipeline_path.read_text())
    assert 'car_speed' in document['kept_features']
    header = owner.read_text().splitlines()[0].split(',')
    assert sorted(document['kept_features'] + [item['name'] for item in document['dropped']]) == sorted(header)
    assert capsys.readouterr().out.strip()
    assert plot_path.stat().st_size > 0


def test_train_eval_replay_round(tmp_path, traces, capsys):
    owner, thief = traces
    pipeline_path = tmp_path / 'pipeline.json'
    model = tmp_path / 'model.json'
    assert main(['features', str(owner), '--out', str(pipeline_path)]) == EXIT_OK
    assert main(['train', str(owner), '--pipeline', str(pipeline_path), '--out', str(model)] + TINY_TRAIN) == EXIT_OK
    assert json.loads(model.read_text())['format_version'] == 1
    capsys.readouterr()

    evaluation = ['eval', '--checkpoint', str(model), '--owner', str(owner), '--thief', str(thief)]
    assert main(evaluation + ['--ratio', '0.8', '--size', '100']) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report['composition'] == {'owner': 80, 'thief': 20}
    assert sum(report['confusion'].values()) == 100
    assert 0.0 <= report['accuracy'] <= 1.0

    assert main(evaluation + ['--calibrate-fnr', '0.25']) == EXIT_RUNTIME
    capsys.readouterr()
    calibration = ['--calibrate-fnr', '0.25', '--calibration', str(owner), '--size', '50']
    assert main(evaluation + calibration) == EXIT_OK
    assert 0 < json.loads(capsys.readouterr().out)['threshold'] < 1


def test_replay_emits_one_line_per_window(tmp_path, traces, capsys):
    owner, _ = traces
    model = tmp_path / 'model.json'
    short = tmp_path / 'short.csv'
    assert main(['train', str(owner), '--out', str(model)] + TINY_TRAIN) == EXIT_OK
    assert main(['synth', '--profile', 'A', '--duration', '33', '--out', str(short)]) == EXIT_OK
    capsys.readouterr()

    assert main(['replay', '--checkpoint', str(model), str(short)]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 1
    event = json.loads(lines[0])
    assert event['offset_s'] == 0
    assert event['decision'] in ('owner', 'thief')


def test_train_is_byte_reproducible(tmp_path, traces):
    owner, _ = traces
    first, second = tmp_path / 'first.json', tmp_path / 'second.json'
    assert main(['train', str(owner), '--out', str(first), '--seed', '3'] + TINY_TRAIN) == EXIT_OK
    assert main(['train', str(owner), '--out', str(second), '--seed', '3'] + TINY_TRAIN) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_experiment_rotates_owners(tmp_path, capsys):
    profile_file = tmp_path / 'profiles.json'
    dump_profiles(default_profiles()[:2], profile_file)
    results = tmp_path / 'results.json'
    sizes = ['experiment.owner_train_s=80', 'experiment.owner_validation_s=40', 'experiment.owner_test_s=40']
    sizes += ['experiment.thief_s=40', 'experiment.size=10']
    overrides = [item for value in sizes for item in ('--set', value)]
    arguments = ['experiment', '--profile-file', str(profile_file), '--out', str(results)]
    assert main(arguments + overrides + TINY_TRAIN) == EXIT_OK
    document = json.loads(results.read_text())
    assert [row['driver'] for row in document] == ['A', 'B']
    assert all(sum(row['confusion'].values()) == 10 for row in document)
    assert 'Average' in capsys.readouterr().out
