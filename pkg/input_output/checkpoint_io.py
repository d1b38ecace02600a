import json
import os
import tempfile

from loguru import logger

from rgan.checkpoint import Checkpoint, CheckpointParseError, UnsupportedVersionError


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    """Writes the checkpoint JSON next to its destination first, so a reader never sees a partial file"""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    handle, tmp_path = tempfile.mkstemp(dir=directory, prefix='.ckpt-', suffix='.tmp')
    try:
        with os.fdopen(handle, 'w', encoding='utf-8') as out_file:
            out_file.write(ckpt.to_json())
            out_file.write('\n')
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    logger.info(f'Checkpoint written to {path} ({ckpt.epochs_completed} epochs)')


def load_checkpoint(path) -> Checkpoint:
    with open(path, 'r', encoding='utf-8') as in_file:
        text = in_file.read()
    try:
        document = json.loads(text)
    except json.JSONDecodeError as error:
        raise CheckpointParseError(f'{path} is not a valid checkpoint: {error}') from error
    if not isinstance(document, dict):
        raise CheckpointParseError(f'{path} does not hold a checkpoint object')

    try:
        ckpt = Checkpoint.from_dict(document)
    except UnsupportedVersionError:
        raise
    except (KeyError, TypeError, ValueError) as error:
        raise CheckpointParseError(f'{path} is not a valid checkpoint: {error!r}') from error
    logger.info(f'Loaded checkpoint {path}: {ckpt.pipeline.feature_count} features, {ckpt.epochs_completed} epochs')
    return ckpt
