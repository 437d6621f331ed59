"""Registry tying each result of the convergence theory to the code that
implements it and the check that verifies it, and the generated map document.

Functions declare what they implement with ``@register(anchor, operation=...,
check=...)``. ``emit_theory_map`` refuses to produce a document while any
anchor lacks an operation or a check.
"""

from __future__ import annotations

import importlib
import json
from pathlib import Path

# anchor -> one-line statement of the result
ANCHORS: dict[str, str] = {
    "maml-loss": "MAML loss F(w) = E_i f_i(w - alpha grad f_i(w)) and its gradient by the chain rule",
    "maml-update": "MAML update w <- w - beta grad F(w)",
    "maml-ode": "continuous-time limit w' = -grad F(w) of the MAML update",
    "biphasic-discrete": "biphasic MAML: descend f until ||grad f|| <= eps0, then descend F",
    "biphasic-ode": "continuous-time biphasic MAML",
    "smoothness-assumptions": "per-task smoothness L, strong convexity mu, Hessian Lipschitz kappa, gradient variance sigma",
    "convergence-maml-ode": "MAML ODE reaches ||grad F|| <= eps in logarithmic time for small alpha",
    "convergence-bi-maml-ode": "biphasic MAML ODE reaches ||grad F|| <= eps in logarithmic time for small alpha",
    "lyapunov-descent": "d/dt (1/2)||grad f||^2 <= -zeta ||grad f||^2 + sigma^2/2 along the MAML ODE",
    "cross-term-bound": "bound on the alpha-dependent cross term of the Lyapunov derivative",
    "gradient-envelope": "||grad f(w(t))||^2 stays below an exponential envelope with limit below sigma^2/mu",
    "norm-transfer-forward": "||grad f|| <= G implies a bound on ||grad F||",
    "norm-transfer-backward": "||grad F|| <= K implies ||grad f|| <= 2K + sigma for alpha < 1/(4L)",
    "local-strong-convexity": "Hessian of F in [mu/8, 9L/8] where ||grad f|| is bounded",
    "strong-convexity-window": "Hessian of F in [mu/8, 9L/8] on U(K) for small alpha",
    "region-inclusion": "U(K) inside a sublevel set of f inside a larger U",
    "sublevel-inclusion": "nested U / V inclusions for K' > (1 + sqrt(L/mu)) sigma",
    "critical-point-existence": "F has a critical point for alpha < 1/(4L)",
    "unique-minimum": "F has a unique critical point, lying in V((K - sigma)^2/(2L))",
    "nonconvex-example": "strongly convex tasks whose MAML loss is not convex",
    "synthetic-experiments": "synthetic regression and classification task suites",
}

_REGISTRY: dict[str, dict[str, set]] = {a: {"operations": set(), "checks": set()} for a in ANCHORS}

_MODULES = ("meta_grad", "flow", "optimizers", "diagnostics", "datagen")


class StaleRegistry(RuntimeError):
    pass


class OrphanAnchor(RuntimeError):
    def __init__(self, anchors):
        self.anchors = list(anchors)
        super().__init__("anchors without an operation or check: " + ", ".join(self.anchors))


def register(anchor: str, operation: str | None = None, check: str | None = None):
    """Decorator recording that the decorated code implements/verifies ``anchor``."""
    if anchor not in ANCHORS:
        raise StaleRegistry(f"unknown anchor {anchor!r}")

    def deco(fn):
        module = getattr(fn, "__module__", "").rsplit(".", 1)[-1]
        if operation is not None:
            _REGISTRY[anchor]["operations"].add(f"{module}.{operation}")
        if check is not None:
            _REGISTRY[anchor]["checks"].add(check)
        return fn

    return deco


def unregister(anchor: str, operation: str | None = None, check: str | None = None) -> None:
    entry = _REGISTRY[anchor]
    if operation is not None:
        entry["operations"] = {o for o in entry["operations"] if not o.endswith("." + operation)}
    if check is not None:
        entry["checks"].discard(check)


def load_registry() -> dict[str, dict[str, list[str]]]:
    for name in _MODULES:
        importlib.import_module(f"{__package__}.{name}")
    return {a: {k: sorted(v) for k, v in e.items()} for a, e in _REGISTRY.items()}


def load_statuses(paths) -> dict[str, str]:
    """check name -> status from verification report JSON files (later files win)."""
    out = {}
    for p in paths:
        for rec in json.loads(Path(p).read_text()):
            out[rec["check"]] = rec["status"]
    return out


def _cell(text: str) -> str:
    return text.replace("|", "\\|")


def emit_theory_map(statuses: dict[str, str] | None = None, path=None) -> str:
    """Render the map as a markdown table; raise OrphanAnchor if coverage is incomplete."""
    reg = load_registry()
    orphans = [a for a, e in reg.items() if not e["operations"] or not e["checks"]]
    if orphans:
        raise OrphanAnchor(orphans)
    statuses = statuses or {}
    lines = [
        "# Theory-to-code map",
        "",
        "Generated by `mamlflow docs`. Status is taken from the last verification report, `not-run` otherwise.",
        "",
        "| anchor | statement | operations | checks | status |",
        "|---|---|---|---|---|",
    ]
    for a, e in reg.items():
        ops = ", ".join(f"`{o}`" for o in e["operations"])
        checks = ", ".join(f"`{c}`" for c in e["checks"])
        status = ", ".join(f"{c}: {statuses.get(c, 'not-run')}" for c in e["checks"])
        lines.append(f"| {a} | {_cell(ANCHORS[a])} | {ops} | {checks} | {status} |")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
