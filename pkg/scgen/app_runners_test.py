# Copyright 2026 The scgen Authors. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ==============================================================================
"""Tests for scgen.app_runners"""
import csv
import os

import numpy as np

import pytest

import scgen
from scgen.exceptions import ParameterError, ShapeError, ValidityError


TINY_CONFIG = {
    'preset': 'families4',
    'generator': {
        'svg_channels': [4, 4, 4],
        'svg_head_channels': 4,
        'srg_channels': [8, 4, 4],
        'z_dim': 8,
    },
    'discriminator': {'base_channels': 4, 'depth': 2},
    'train': {
        'batch_size': 2,
        'total_steps': 2,
        'checkpoint_every': 1,
        'sample_every': 2,
        'sample_count': 2,
        'log_every': 1,
    },
}


def _run(argv):
    args = scgen.argparse.get_arg_parser().parse_args(argv)
    return scgen.app_runners.run_command(dict(args._get_kwargs()))


@pytest.fixture(scope='module')
def trained(tmpdir_factory):
    root = str(tmpdir_factory.mktemp('runners'))
    data = os.path.join(root, 'data')
    _run(['make-data', '--out', data, '--preset', 'families4',
          '--count', '4', '--seed', '1'])
    config = os.path.join(root, 'tiny.json')
    scgen.io.write_json(config, TINY_CONFIG)
    out = os.path.join(root, 'train')
    _run(['train', '--config', config, '--data', data, '--out', out])
    return {'root': root, 'data': data, 'out': out,
            'ckpt': os.path.join(out, 'ckpt_final.ckpt')}


def test_run_make_data(tmpdir):
    out = os.path.join(str(tmpdir), 'data')
    written = _run(['make-data', '--out', out, '--count', '3',
                    '--seed', '2'])
    assert len(written) == 7
    assert sorted(os.listdir(out)) == sorted(os.path.basename(p)
                                             for p in written)

    # rerunning into the same directory is refused
    with pytest.raises(IOError):
        _run(['make-data', '--out', out, '--count', '3', '--seed', '2'])

    # unless forced, and the bytes are identical
    with open(os.path.join(out, 'img_00001.ppm'), 'rb') as f:
        first = f.read()
    _run(['make-data', '--out', out, '--count', '3', '--seed', '2',
          '--force'])
    with open(os.path.join(out, 'img_00001.ppm'), 'rb') as f:
        assert f.read() == first

    with pytest.raises(ParameterError, match='count must be >= 1'):
        _run(['make-data', '--out', os.path.join(str(tmpdir), 'empty'),
              '--count', '0'])


def test_run_train(trained):
    out = trained['out']
    for name in ('config.json', 'metrics.csv', 'ckpt_000001.ckpt',
                 'ckpt_000002.ckpt', 'ckpt_final.ckpt',
                 'samples_000002.ppm'):
        assert os.path.exists(os.path.join(out, name)), name

    resolved = scgen.io.read_json(os.path.join(out, 'config.json'))
    assert resolved['loss']['perceptual'] == 10.0
    assert resolved['loss']['gan'] == 1.0
    assert resolved['loss']['feature_matching'] == 10.0
    assert resolved['loss']['svg'] == 2.0
    assert resolved['scene']['seed'] == 1

    with open(os.path.join(out, 'metrics.csv')) as f:
        rows = list(csv.reader(f))
    assert rows[0] == list(scgen.training.METRIC_COLUMNS)
    assert [r[0] for r in rows[1:]] == ['0', '1']

    ckpt = scgen.io.load_checkpoint(os.path.join(out, 'ckpt_final.ckpt'))
    assert ckpt.step == 2


def test_run_train_resume(trained, tmpdir):
    out = str(tmpdir)
    config = os.path.join(out, 'longer.json')
    document = dict(TINY_CONFIG)
    document['train'] = dict(TINY_CONFIG['train'], total_steps=3)
    scgen.io.write_json(config, document)
    _run(['train', '--config', config, '--data', trained['data'],
          '--out', out, '--resume',
          os.path.join(trained['out'], 'ckpt_000002.ckpt')])
    with open(os.path.join(out, 'metrics.csv')) as f:
        rows = list(csv.reader(f))
    # step numbering continues from the checkpoint
    assert [r[0] for r in rows[1:]] == ['2']
    assert scgen.io.load_checkpoint(
        os.path.join(out, 'ckpt_final.ckpt')).step == 3


def test_run_train_mismatched_data(trained, tmpdir):
    config = os.path.join(str(tmpdir), 'bad.json')
    document = dict(TINY_CONFIG)
    document['generator'] = dict(TINY_CONFIG['generator'], num_classes=5)
    scgen.io.write_json(config, document)
    with pytest.raises(ValueError, match='num_classes'):
        _run(['train', '--config', config, '--data', trained['data'],
              '--out', os.path.join(str(tmpdir), 'out')])


def test_run_synth(trained, tmpdir):
    layout = os.path.join(trained['data'], 'seg_00000.pgm')
    out = os.path.join(str(tmpdir), 'fake.ppm')
    argv = ['synth', '--ckpt', trained['ckpt'], '--layout', layout,
            '--seed', '5', '--out', out]
    written = _run(argv)
    assert out in written
    assert os.path.exists(os.path.join(str(tmpdir), 'fake.json'))
    image = scgen.io.read_ppm(out)
    assert image.shape == (32, 32, 3)

    # deterministic per invocation
    with open(out, 'rb') as f:
        first = f.read()
    _run(argv)
    with open(out, 'rb') as f:
        assert f.read() == first

    written = _run(argv + ['--samples', '3'])
    for k in range(3):
        assert os.path.join(str(tmpdir), 'fake_{}.ppm'.format(k)) in written

    # class index outside the model
    bad_layout = os.path.join(str(tmpdir), 'bad.pgm')
    labels = np.zeros((32, 32), dtype='uint8')
    labels[3, 7] = 9
    scgen.io.write_pgm(bad_layout, labels)
    with pytest.raises(ValidityError, match='row 3, column 7'):
        _run(['synth', '--ckpt', trained['ckpt'], '--layout', bad_layout,
              '--seed', '5', '--out', out])

    # wrong resolution
    small = os.path.join(str(tmpdir), 'small.pgm')
    scgen.io.write_pgm(small, np.zeros((16, 16), dtype='uint8'))
    with pytest.raises(ShapeError):
        _run(['synth', '--ckpt', trained['ckpt'], '--layout', small,
              '--seed', '5', '--out', out])


def test_run_analyze(trained, tmpdir):
    out = os.path.join(str(tmpdir), 'analysis')
    written = _run(['analyze', '--ckpt', trained['ckpt'],
                    '--data', trained['data'], '--out', out])
    names = {os.path.basename(p) for p in written}
    assert names == {'similarity.csv', 'similarity.pgm', 'config.json'}

    with open(os.path.join(out, 'similarity.csv')) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 16
    values = {}
    for row in rows:
        if row['cosine']:
            values[int(row['class_i']), int(row['class_j'])] = \
                float(row['cosine'])
    for (i, j), value in values.items():
        assert value == pytest.approx(values[j, i])
        if i == j:
            assert value == pytest.approx(1.0, abs=1e-5)

    heatmap = scgen.io.read_pgm(os.path.join(out, 'similarity.pgm'))
    assert heatmap.shape == (4, 4)

    with pytest.raises(ParameterError):
        _run(['analyze', '--ckpt', trained['ckpt'], '--data',
              trained['data'], '--out', out, '--level', '3'])


def test_run_eval(trained, tmpdir):
    out = os.path.join(str(tmpdir), 'eval')
    _run(['eval', '--ckpt', trained['ckpt'], '--data', trained['data'],
          '--out', out])
    with open(os.path.join(out, 'metrics.csv')) as f:
        rows = list(csv.DictReader(f))
    assert [r['step'] for r in rows] == ['real', '2']
    assert float(rows[0]['frechet']) == 0
    assert 0 <= float(rows[1]['accuracy']) <= 1
    assert 0 <= float(rows[1]['accuracy_interior']) <= 1
    # the dataset scored against itself
    assert float(rows[0]['accuracy']) >= 0.95
    assert 'accuracy_class_3' in rows[0]
    assert os.path.exists(os.path.join(out, 'config.json'))


def test_run_gradcheck(mocker, capsys):
    mocker.patch('scgen.gradcheck.run_suite',
                 return_value={'conv2d': 1e-7, 'semantic_gate': 2e-8})
    assert scgen.app_runners.run_gradcheck(seed=0, instances=1) == []
    assert 'conv2d' in capsys.readouterr().out

    mocker.patch('scgen.gradcheck.run_suite',
                 return_value={'conv2d': 1e-7, 'scc_forward': 3e-3})
    with pytest.raises(ValidityError, match='scc_forward'):
        scgen.app_runners.run_gradcheck(seed=0, instances=1)


def test_run_command_unknown():
    with pytest.raises(ValueError):
        scgen.app_runners.run_command({'command': 'bad_command'})
