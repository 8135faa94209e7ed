"""
Declarative Monte Carlo configurations

A config is a JSON object; see configs/README.md for the schema. Inside each
grid entry, list-valued keys expand into their cartesian product, and the
"sizes" list pairs a size with its sieve dimension.
"""

import itertools
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

from src.config import DGP_DEFAULTS, MC_DEFAULTS, MASTER_SEED, WORKERS
from src.errors import ConfigError
from src.models.simulation import ErrorFamily, HeteroScheme, Link, McCell, McConfig
from src.models.weight_matrix import DesignTag
from src.utils.validators import InputValidator

TOP_LEVEL_KEYS = {
    'kind', 'description', 'reps', 'alpha', 'master_seed', 'workers',
    'failure_budget', 'lambda0', 'beta0', 'grid',
}
GRID_KEYS = {'design', 'scheme', 'family', 'link', 'n', 'lattice', 'p', 'sizes'}
SIZE_KEYS = {'n', 'lattice', 'p'}
KINDS = ('size', 'power')


def _as_list(value: Any) -> List[Any]:
    return list(value) if isinstance(value, list) else [value]


def _enum(enum_cls, value: Any, key: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(member.value for member in enum_cls)
        raise ConfigError(f"'{key}': {value!r} is not one of {allowed}", key=key)


def _int(value: Any, key: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"'{key}' must be an integer >= {minimum}, got {value!r}", key=key)
    return value


def _lattice(value: Any) -> tuple:
    if (not isinstance(value, list) or len(value) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 2 for v in value)):
        raise ConfigError(f"'lattice' must be [m1, m2] with both >= 2, got {value!r}",
                          key='lattice')
    return tuple(value)


def _lattice_list(value: Any) -> List[tuple]:
    # [m1, m2] or [[m1, m2], ...]
    if isinstance(value, list) and value and isinstance(value[0], list):
        return [_lattice(v) for v in value]
    return [_lattice(value)]


def _sizes(entry: Dict[str, Any]) -> List[Dict[str, Any]]:
    if 'sizes' in entry:
        if any(key in entry for key in SIZE_KEYS):
            raise ConfigError("'sizes' cannot be combined with n, lattice or p", key='sizes')
        sizes = entry['sizes']
        if not isinstance(sizes, list) or not sizes:
            raise ConfigError("'sizes' must be a non-empty list", key='sizes')
        out = []
        for size in sizes:
            if not isinstance(size, dict):
                raise ConfigError("'sizes' items must be objects", key='sizes')
            unknown = set(size) - SIZE_KEYS
            if unknown:
                key = sorted(unknown)[0]
                raise ConfigError(f"unknown size key '{key}'", key=key)
            out.append(size)
        return out

    lattices = _lattice_list(entry['lattice']) if 'lattice' in entry else [None]
    ns = _as_list(entry['n']) if 'n' in entry else [None]
    ps = _as_list(entry.get('p'))
    return [
        {k: v for k, v in (('n', n), ('lattice', list(lat) if lat else None), ('p', p))
         if v is not None}
        for n, lat, p in itertools.product(ns, lattices, ps)
    ]


def _cells(entry: Dict[str, Any], index: int) -> Iterable[McCell]:
    if not isinstance(entry, dict):
        raise ConfigError(f"grid[{index}] must be an object", key='grid')
    unknown = set(entry) - GRID_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"grid[{index}]: unknown key '{key}'", key=key)
    if 'design' not in entry:
        raise ConfigError(f"grid[{index}]: 'design' is required", key='design')

    designs = [_enum(DesignTag, v, 'design') for v in _as_list(entry['design'])]
    schemes = [_enum(HeteroScheme, v, 'scheme')
               for v in _as_list(entry.get('scheme', HeteroScheme.A_DEGREE.value))]
    families = [_enum(ErrorFamily, v, 'family')
                for v in _as_list(entry.get('family', ErrorFamily.GAUSSIAN.value))]
    links = [_enum(Link, v, 'link')
             for v in _as_list(entry.get('link', Link.NULL_LINEAR.value))]
    sizes = _sizes(entry)

    for design, size, scheme, family, link in itertools.product(
            designs, sizes, schemes, families, links):
        lattice = _lattice(size['lattice']) if size.get('lattice') is not None else None
        n = _int(size['n'], 'n', 8) if size.get('n') is not None else None
        p = _int(size['p'], 'p', 1) if size.get('p') is not None else None
        if lattice is None and n is None:
            raise ConfigError(f"grid[{index}]: every size needs n or lattice", key='n')
        if design is not DesignTag.LATTICE and lattice is not None:
            # other designs take the explicit n, or the lattice size
            n, lattice = (n if n is not None else lattice[0] * lattice[1]), None
        if design is DesignTag.LATTICE:
            if lattice is None:
                raise ConfigError(f"grid[{index}]: the lattice design needs 'lattice'",
                                  key='lattice')
            n = None
        try:
            yield McCell(design=design, scheme=scheme, family=family, link=link,
                         n=n, lattice=lattice, p=p)
        except ValueError as e:
            raise ConfigError(f"grid[{index}]: {e}", key='link')


def parse_mc_config(data: Dict[str, Any], expected_kind: Optional[str] = None) -> McConfig:
    """Validate a decoded config document and expand its grid"""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - TOP_LEVEL_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key '{key}'", key=key)
    kind = data.get('kind', expected_kind)
    if kind is not None and kind not in KINDS:
        raise ConfigError(f"'kind' must be one of {KINDS}, got {kind!r}", key='kind')
    if expected_kind is not None and kind != expected_kind:
        raise ConfigError(f"config is for a {kind} experiment, not {expected_kind}", key='kind')

    grid = data.get('grid')
    if not isinstance(grid, list) or not grid:
        raise ConfigError("'grid' must be a non-empty list", key='grid')
    cells = [cell for index, entry in enumerate(grid) for cell in _cells(entry, index)]

    alpha = data.get('alpha', MC_DEFAULTS['alpha'])
    ok, message = InputValidator.validate_alpha(alpha)
    if not ok:
        raise ConfigError(message, key='alpha')
    budget = data.get('failure_budget', MC_DEFAULTS['failure_budget'])
    if not isinstance(budget, (int, float)) or not 0 <= budget < 1:
        raise ConfigError("'failure_budget' must lie in [0, 1)", key='failure_budget')
    lambda0 = data.get('lambda0', DGP_DEFAULTS['lambda0'])
    if not isinstance(lambda0, (int, float)) or isinstance(lambda0, bool):
        raise ConfigError("'lambda0' must be a number", key='lambda0')
    beta0 = data.get('beta0', list(DGP_DEFAULTS['beta0']))
    if (not isinstance(beta0, list) or len(beta0) != 3
            or not all(isinstance(b, (int, float)) for b in beta0)):
        raise ConfigError("'beta0' must be a list of three numbers", key='beta0')

    return McConfig(
        grid=cells,
        reps=_int(data.get('reps', MC_DEFAULTS['reps']), 'reps', 1),
        alpha=float(alpha),
        master_seed=_int(data.get('master_seed', MASTER_SEED), 'master_seed', 0),
        parallel_workers=_int(data.get('workers', WORKERS), 'workers', 1),
        failure_budget=float(budget),
        lambda0=float(lambda0),
        beta0=tuple(float(b) for b in beta0),
    )


def load_mc_config(path: Union[str, Path], expected_kind: Optional[str] = None) -> McConfig:
    """Read and parse a JSON config file"""
    path = Path(path)
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})")
    return parse_mc_config(data, expected_kind)
