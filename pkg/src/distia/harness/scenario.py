"""
Scenario description and its YAML file format.

A scenario file looks like::

    K: 3
    M: [4, 4, 4]
    N: [4, 4, 4]
    d: [2, 2, 2]
    snr_grid_db: [0, 10, 20, 30, 40, 50, 60]
    trials: 2000
    seed: 20130616
    receiver: perfect_ia          # or mmse
    error_norm: unit              # or per_entry
    filter_eps: null
    csit:
      model: gaussian             # gaussian | rvq | perfect
      C: 1.0
      A.default: 1.0
      A.3.2.2: 0.5                # A.<rx>.<tx>.<owner>, one-based
      A.3.2.3: 0.0

``csit: perfect`` is accepted as a shorthand for perfect CSIT.
"""

import dataclasses
import hashlib
import json
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np
import yaml

from ..channel import Dims
from ..csit import CsitProfile
from ..errors import ScenarioError

__all__ = ['Scenario', 'load_scenario', 'parse_scenario', 'golden_scenario',
           'GOLDEN_NAMES']

RECEIVERS = ('perfect_ia', 'mmse')
GOLDEN_NAMES = ('golden_perfect', 'golden_a1', 'golden_degraded')
_A_KEY = re.compile(r'^A\.(\d+)\.(\d+)\.(\d+)$')


@dataclass
class Scenario:
    dims: Dims
    snr_grid_db: tuple
    trials: int
    csit: object  # CsitProfile, or None for perfect CSIT
    receiver: str = 'perfect_ia'
    seed: int = 0
    filter_eps: float = None
    error_norm: str = 'unit'

    def __post_init__(self):
        self.snr_grid_db = tuple(float(x) for x in self.snr_grid_db)
        if any(b <= a for a, b in zip(self.snr_grid_db, self.snr_grid_db[1:])):
            raise ScenarioError('snr_grid_db must be strictly increasing')
        if int(self.trials) < 1:
            raise ScenarioError('trials must be >= 1')
        self.trials = int(self.trials)
        self.seed = int(self.seed)
        if self.receiver not in RECEIVERS:
            raise ScenarioError(f'unknown receiver {self.receiver!r}')
        if self.error_norm not in ('unit', 'per_entry'):
            raise ScenarioError(f'unknown error_norm {self.error_norm!r}')
        if self.csit is not None:
            if self.csit.K != self.dims.K:
                raise ScenarioError('CSIT profile size does not match K')
            if self.csit.error_norm != self.error_norm:
                self.csit = dataclasses.replace(self.csit, error_norm=self.error_norm)
        if self.filter_eps is not None and self.filter_eps < 0:
            raise ScenarioError('filter_eps must be nonnegative')

    @property
    def perfect_csit(self):
        return self.csit is None or self.csit.is_perfect

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        out = {
            'K': self.dims.K, 'M': list(self.dims.M), 'N': list(self.dims.N),
            'd': list(self.dims.d), 'snr_grid_db': list(self.snr_grid_db),
            'trials': self.trials, 'seed': self.seed, 'receiver': self.receiver,
            'error_norm': self.error_norm, 'filter_eps': self.filter_eps,
        }
        if self.perfect_csit:
            out['csit'] = 'perfect'
        else:
            csit = {'model': self.csit.model, 'C': self.csit.C}
            K = self.dims.K
            for i in range(K):
                for k in range(K):
                    for j in range(K):
                        csit[f'A.{i + 1}.{k + 1}.{j + 1}'] = float(self.csit.A[i, k, j])
            out['csit'] = csit
        return out

    def digest(self):
        """SHA-256 of the canonical JSON form."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(text.encode('utf-8')).hexdigest()


def _parse_csit(raw, K, error_norm):
    if raw is None or raw == 'perfect':
        return None
    if not isinstance(raw, dict):
        raise ScenarioError('csit must be a mapping or "perfect"')
    raw = dict(raw)
    model = str(raw.pop('model', 'gaussian'))
    if model == 'perfect':
        return None
    C = float(raw.pop('C', 1.0))
    default = raw.pop('A.default', None)
    entries = {}
    for key, value in raw.items():
        m = _A_KEY.match(str(key))
        if not m:
            raise ScenarioError(f'unknown csit key {key!r}')
        idx = tuple(int(x) - 1 for x in m.groups())
        if not all(0 <= x < K for x in idx):
            raise ScenarioError(f'csit key {key!r} is out of range for K={K}')
        entries[idx] = _as_exponent(value)
    if default is None and len(entries) != K ** 3:
        raise ScenarioError(f'csit needs A.default or all {K ** 3} A.i.k.j entries')
    default = _as_exponent(default if default is not None else 0.0)
    return CsitProfile.from_entries(K, default, entries, model=model, C=C,
                                    error_norm=error_norm)


def _as_exponent(value):
    if isinstance(value, str) and value.strip().lower() in ('inf', '.inf', 'perfect'):
        return np.inf
    return float(value)


def parse_scenario(text):
    """Build a `Scenario` from YAML text."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f'invalid scenario file: {exc}') from exc
    if not isinstance(raw, dict):
        raise ScenarioError('scenario must be a mapping')
    known = {'K', 'M', 'N', 'd', 'snr_grid_db', 'trials', 'seed', 'receiver',
             'error_norm', 'filter_eps', 'csit', 'name'}
    unknown = set(raw) - known
    if unknown:
        raise ScenarioError(f'unknown scenario keys: {sorted(unknown)}')
    try:
        K = int(raw.get('K', 3))
        dims = Dims(K=K, M=raw['M'], N=raw['N'], d=raw['d'])
        error_norm = raw.get('error_norm', 'unit')
        return Scenario(
            dims=dims,
            snr_grid_db=raw['snr_grid_db'],
            trials=raw['trials'],
            csit=_parse_csit(raw.get('csit'), K, error_norm),
            receiver=raw.get('receiver', 'perfect_ia'),
            seed=raw.get('seed', 0),
            filter_eps=raw.get('filter_eps'),
            error_norm=error_norm,
        )
    except KeyError as exc:
        raise ScenarioError(f'missing scenario key {exc}') from exc
    except TypeError as exc:
        raise ScenarioError(f'malformed scenario: {exc}') from exc


def load_scenario(path):
    with open(path, encoding='utf-8') as f:
        return parse_scenario(f.read())


def golden_scenario(name='golden_perfect'):
    """One of the scenario files shipped with the package."""
    if name not in GOLDEN_NAMES:
        raise ScenarioError(f'unknown golden scenario {name!r}; choose from {GOLDEN_NAMES}')
    text = resources.files('distia.scenarios').joinpath(f'{name}.yaml').read_text('utf-8')
    return parse_scenario(text)
