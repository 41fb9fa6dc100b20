"""Run configuration: one JSON document, dotted-key overrides, defaults.

The same file drives every subcommand; each consumes its own section.
``campaign`` holds the end-to-end study settings (with nested ``dmd``,
``podi`` and ``optimizer`` blocks), while the top-level ``ffd``, ``dmd``,
``as`` and ``podi`` sections belong to the corresponding standalone
subcommands.  Unknown keys are rejected so typos fail loudly.
"""

import copy
import json

from .errors import ConfigError

__all__ = ["DEFAULT_CONFIG", "load_config", "merge_defaults", "apply_overrides", "schema_text"]

DEFAULT_CONFIG = {
    "schema_version": 1,
    "seed": 0,
    "output_dir": "rombox-out",
    "oracle": {
        "name": "ridge-drag",
    },
    "campaign": {
        "n_pod": 100,
        "n_pod_as": 80,
        "active_dim": 1,
        "gradient_scheme": "central-fd",
        "fd_step": 1e-4,
        "neighbors": None,
        "skip_tolerance": 0.8,
        "workers": 1,
        "dmd": {
            "enabled": "auto",
            "n_snapshots": 12,
            "dt": 0.3,
            "t0": 0.0,
            "rank": 1.0,
            "mode_kind": "exact",
            "horizon": 30.0,
            "window": 8,
        },
        "podi": {
            "rank": 1.0,
            "interp": "auto",
        },
        "optimizer": {
            "budget": 200,
            "surrogate": "auto",
        },
    },
    "ffd": {
        "mesh": None,
        "output": None,
        "lattice": {
            "origin": [0.0, 0.0, 0.0],
            "axes": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            "counts": [2, 2, 2],
        },
        "parameters": {
            "entries": [],
            "mu": [],
        },
    },
    "dmd": {
        "snapshots": None,
        "dt": 1.0,
        "t0": 0.0,
        "rank": 1.0,
        "mode_kind": "exact",
        "horizon": None,
        "window": 8,
    },
    "as": {
        "samples": None,
        "n_samples": 500,
        "scheme": "central-fd",
        "fd_step": 1e-4,
        "active_dim": "gap",
        "seed": 0,
    },
    "podi": {
        "manifest": None,
        "rank": 1.0,
        "interp": "auto",
    },
}

_DOC = {
    "schema_version": "config format version (currently 1)",
    "seed": "master seed; every stage derives its own stream from it",
    "output_dir": "directory for ledgers, reports and rendered CSVs",
    "oracle": "full-order model: 'name' plus constructor options",
    "oracle.name": "ridge-drag | heat-regime | geo-demo",
    "campaign.n_pod": "full-space training samples",
    "campaign.n_pod_as": "active-direction resampling count",
    "campaign.active_dim": "fixed subspace dimension or 'gap'",
    "campaign.gradient_scheme": "analytic | central-fd | local-linear",
    "campaign.fd_step": "central-difference step in normalized coordinates",
    "campaign.neighbors": "local-linear neighbor count (null = 2P+1)",
    "campaign.skip_tolerance": "minimum fraction of samples that must succeed",
    "campaign.workers": "concurrent oracle evaluations per stage",
    "campaign.dmd.enabled": "auto = use when the oracle is time-resolved",
    "campaign.dmd.n_snapshots": "early-time snapshots per simulation",
    "campaign.dmd.rank": "int mode count or float energy in (0, 1]",
    "campaign.dmd.horizon": "forecast time for the regime estimate",
    "campaign.dmd.window": "samples averaged for the regime estimate",
    "campaign.podi.rank": "retained output modes (int or energy float)",
    "campaign.podi.interp": "auto | cubic | rbf",
    "campaign.optimizer.budget": "total surrogate evaluations",
    "campaign.optimizer.surrogate": "auto | podi-functional | active-g",
    "ffd": "standalone mesh deformation: lattice block, mesh path, mu",
    "dmd": "standalone decomposition of a snapshot CSV",
    "as": "standalone subspace fit from a gradient ledger or an oracle",
    "podi": "standalone surrogate build from a snapshot manifest",
}


def merge_defaults(cfg, defaults=None, path=""):
    """Fill missing keys from the defaults, rejecting unknown ones."""
    if defaults is None:
        defaults = DEFAULT_CONFIG
    merged = copy.deepcopy(defaults)
    for key, value in cfg.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown config key '{where}'")
        if isinstance(defaults[key], dict) and key != "oracle":
            if not isinstance(value, dict):
                raise ConfigError(f"config key '{where}' must be a mapping")
            merged[key] = merge_defaults(value, defaults[key], where)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(path):
    """Parse a JSON config file and fill in defaults."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    version = raw.get("schema_version", 1)
    if version != 1:
        raise ConfigError(f"{path}: unsupported schema_version {version}")
    return merge_defaults(raw)


def _parse_override_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text  # bare strings need no quoting


def apply_overrides(cfg, overrides):
    """Apply ``key.path=value`` overrides in order; values parse as JSON."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        dotted, text = item.split("=", 1)
        keys = dotted.strip().split(".")
        node = cfg
        for key in keys[:-1]:
            if not isinstance(node.get(key), dict):
                raise ConfigError(f"override path '{dotted}' does not exist")
            node = node[key]
        if keys[-1] not in node:
            raise ConfigError(f"override path '{dotted}' does not exist")
        node[keys[-1]] = _parse_override_value(text)
    return cfg


def schema_text():
    """Human-readable schema: defaults annotated with documentation."""
    lines = ["configuration schema (JSON, all keys optional):", ""]

    def walk(node, prefix):
        for key, value in node.items():
            dotted = f"{prefix}.{key}" if prefix else key
            doc = _DOC.get(dotted, "")
            if isinstance(value, dict) and dotted != "oracle":
                note = f"  # {doc}" if doc else ""
                lines.append(f"{dotted}:{note}")
                walk(value, dotted)
            else:
                rendered = json.dumps(value)
                note = f"  # {doc}" if doc else ""
                lines.append(f"{dotted} = {rendered}{note}")

    walk(DEFAULT_CONFIG, "")
    return "\n".join(lines) + "\n"
