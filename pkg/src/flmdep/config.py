"""Plain-text scenario files.

A scenario file is INI-style with a single ``[scenario]`` section::

    [scenario]
    name = table1
    n = 50, 100
    ns = 500
    seed = 2024
    theta = zero
    kn = 5, 10, 20
    alpha = 0.2, 0.1, 0.05, 0.01
    B = 1000
    methods =
        t1/asymptotic
        t1/wild/bootstrapped

A list of sample sizes expands to one :class:`ScenarioSpec` per ``n``.
``seed`` is mandatory.
"""

from __future__ import annotations

import configparser

from flmdep.errors import ConfigurationError
from flmdep.simgen import STANDARD_METHODS, MethodSpec, ScenarioSpec

_KNOWN = {
    "name", "n", "ns", "seed", "p", "theta", "theta_values", "r", "sigma0", "kn",
    "alpha", "methods", "b", "multiplier", "local_alternative",
}


def _split(text):
    return [tok for tok in text.replace("\n", ",").split(",") if tok.strip()]


def _ints(text):
    return [int(tok.strip()) for tok in _split(text)]


def _floats(text):
    return [float(tok.strip()) for tok in _split(text)]


def parse_scenarios(text, source="<string>"):
    """Parse scenario-file text into a list of validated specs.

    Raises :class:`ConfigurationError` listing every problem found.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from None
    if not parser.has_section("scenario"):
        raise ConfigurationError(f"{source}: missing [scenario] section")
    sec = parser["scenario"]
    problems = [f"{key}: unknown field" for key in sec if key not in _KNOWN]

    def field(key, convert, default=None, required=False):
        if key not in sec:
            if required:
                problems.append(f"{key}: required field is missing")
            return default
        try:
            return convert(sec[key])
        except (ValueError, ConfigurationError) as exc:
            problems.append(f"{key}: cannot parse {sec[key]!r} ({exc})")
            return default

    ns_list = field("n", _ints, required=True) or []
    kwargs = {
        "name": sec.get("name", "").strip(),
        "ns": field("ns", int, required=True),
        "seed": field("seed", int, required=True),
        "p": field("p", int, 100),
        "theta": sec.get("theta", "zero").strip().lower(),
        "theta_values": field("theta_values", _floats),
        "r": field("r", float),
        "sigma0": field("sigma0", float, 1.0),
        "kn_grid": tuple(field("kn", _ints, [5, 10, 20])),
        "alpha_grid": tuple(field("alpha", _floats, [0.2, 0.1, 0.05, 0.01])),
        "B": field("b", int, 1000),
        "multiplier": sec.get("multiplier", "gaussian").strip().lower(),
        "local_alternative": field("local_alternative", float),
        "methods": field(
            "methods", lambda s: tuple(MethodSpec.parse(m) for m in _split(s)), STANDARD_METHODS
        ),
    }
    if not ns_list and "n" in sec:
        problems.append("n: at least one sample size is required")

    specs = []
    for n in ns_list:
        try:
            spec = ScenarioSpec(n=n, **kwargs)
        except ConfigurationError as exc:
            problems.extend(exc.problems)
            continue
        reported = {p.split(":")[0] for p in problems}
        problems.extend(p for p in spec.problems()
                        if p not in problems and p.split(":")[0] not in reported)
        specs.append(spec)
    if not ns_list and not problems:
        problems.append("n: required field is missing")
    if problems:
        raise ConfigurationError(f"{source}: invalid scenario: " + "; ".join(problems), problems)
    return specs


def load_scenarios(path):
    with open(path, encoding="utf-8") as fh:
        return parse_scenarios(fh.read(), source=str(path))


def spec_to_dict(spec):
    """JSON-ready echo of a scenario spec."""
    return {
        "name": spec.name,
        "n": spec.n,
        "ns": spec.ns,
        "seed": spec.seed,
        "p": spec.p,
        "theta": spec.theta.value,
        "theta_values": list(spec.theta_values) if spec.theta_values else None,
        "r": spec.r,
        "sigma0": spec.sigma0,
        "kn": list(spec.kn_grid),
        "alpha": list(spec.alpha_grid),
        "methods": [m.key for m in spec.methods],
        "B": spec.B,
        "multiplier": spec.multiplier.value,
        "local_alternative": spec.local_alternative,
    }
