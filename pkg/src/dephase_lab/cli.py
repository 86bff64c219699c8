"""Command-line interface: ``dephase-lab <subcommand> ...``.

Exit status is 0 on success, 1 when the computation ran but the verdict is
negative (a violated condition, a non-optimal circuit, a search that missed
the optimum) and 2 when the input is invalid. Mode numbers on the command
line and in CSV output are 1-based.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import io as fio
from .dephase import dephase_partial, dephase_total, distribution_csv
from .discrimination import (classify_patterns, conditional_mode_check, optimal_form_check,
                             orthogonal_hierarchy, usd_hierarchy, usd_report)
from .fock import coherent_product_state, inner_product
from .linop import beam_splitter_50_50, decompose_to_givens, transform
from .metrics import check_fidelity_bounds
from .naimark import naimark_unitary, rail_state, simulate_povm, usd_povm
from .search import SearchConfig, ancilla_sweep, minimize_failure, sweep_csv, toy_feasibility, toy_parameters

OK, NEGATIVE, INPUT_ERROR = 0, 1, 2

log = logging.getLogger("dephase_lab")


@dataclass
class CommandOutcome:
    status: int
    written: list = field(default_factory=list)


def _write(path, text, outcome: CommandOutcome):
    Path(path).write_text(text)
    outcome.written.append(str(path))


def _write_json(path, data, outcome: CommandOutcome):
    fio.dump_json(data, path)
    outcome.written.append(str(path))


def _pair_files(plus_file, minus_file):
    plus, minus = fio.read_state(plus_file), fio.read_state(minus_file)
    if plus.n_modes != minus.n_modes:
        raise ValueError(f"states have {plus.n_modes} and {minus.n_modes} modes")
    return plus, minus


def _fit(circuit, *states):
    for s in states:
        if s.n_modes != circuit.dim:
            raise ValueError(f"state has {s.n_modes} modes, circuit acts on {circuit.dim}")


def cmd_transform(state_file, circuit_file, out_file) -> CommandOutcome:
    state, circuit = fio.read_state(state_file), fio.read_circuit(circuit_file)
    _fit(circuit, state)
    out = transform(circuit, state)
    outcome = CommandOutcome(OK)
    _write_json(out_file, fio.state_to_dict(out), outcome)
    print(f"norm^2 {out.norm_sq:.15g}, {len(out.terms)} patterns")
    return outcome


def cmd_dephase(state_file, circuit_file=None, modes=None, out_file=None) -> CommandOutcome:
    state = fio.read_state(state_file)
    if circuit_file:
        circuit = fio.read_circuit(circuit_file)
        _fit(circuit, state)
        state = transform(circuit, state)
    outcome = CommandOutcome(OK)
    if not modes:
        text = distribution_csv(dephase_total(state))
    else:
        mix = dephase_partial(state, [j - 1 for j in modes])
        text = json.dumps({
            "dephased_modes": [j + 1 for j in mix.dephased_modes],
            "blocks": [{"occupation": list(k), "probability": b.probability,
                        "state": None if b.state is None else fio.state_to_dict(b.state)}
                       for k, b in mix.blocks.items()],
        }, indent=2) + "\n"
    if out_file:
        _write(out_file, text, outcome)
    else:
        sys.stdout.write(text)
    return outcome


def cmd_classify(plus_file, minus_file, circuit_file, tol=1e-10, out_file=None) -> CommandOutcome:
    plus, minus = _pair_files(plus_file, minus_file)
    circuit = fio.read_circuit(circuit_file)
    _fit(circuit, plus, minus)
    cls = classify_patterns(transform(circuit, plus), transform(circuit, minus), tol)
    data = {name: [list(p) for p in getattr(cls, name)]
            for name in ("conclusive_plus", "conclusive_minus", "ambiguous")}
    outcome = CommandOutcome(OK)
    text = json.dumps(data, indent=2) + "\n"
    if out_file:
        _write(out_file, text, outcome)
    else:
        sys.stdout.write(text)
    return outcome


def cmd_check(plus_file, minus_file, circuit_file, mode="all", max_order=None,
              out_file=None) -> CommandOutcome:
    plus, minus = _pair_files(plus_file, minus_file)
    circuit = fio.read_circuit(circuit_file)
    _fit(circuit, plus, minus)
    if mode != "all":
        j = int(mode)
        if not 1 <= j <= circuit.dim:
            raise ValueError(f"--mode {j} out of range 1..{circuit.dim}")
        report = conditional_mode_check(circuit, plus, minus, j - 1, max_order=max_order)
    elif abs(inner_product(plus, minus)) <= 1e-10:
        report = orthogonal_hierarchy(circuit, plus, minus, max_order=max_order)
    else:
        report = usd_hierarchy(circuit, plus, minus, max_order=max_order)
    outcome = CommandOutcome(OK if report.verdict else NEGATIVE)
    if out_file:
        _write(out_file, report.to_csv(), outcome)
    else:
        sys.stdout.write(report.to_csv())
    bad = len(report.violations())
    print(f"{report.kind} conditions: {'pass' if report.verdict else 'FAIL'} "
          f"({len(report.entries)} moments, {bad} violated)", file=sys.stderr)
    if report.sum_rule is not None:
        print(f"sum rule: {report.sum_rule.value:.12g} vs {report.sum_rule.expected:.12g} "
              f"({'ok' if report.sum_rule.ok else 'FAIL'})", file=sys.stderr)
    return outcome


def cmd_usd(plus_file, minus_file, circuit_file, priors=0.5, out_file=None,
            dephased_modes=None) -> CommandOutcome:
    plus, minus = _pair_files(plus_file, minus_file)
    circuit = fio.read_circuit(circuit_file)
    _fit(circuit, plus, minus)
    report = usd_report(circuit, plus, minus, priors=(priors, 1.0 - priors))
    modes = None if not dephased_modes else [j - 1 for j in dephased_modes]
    bounds = check_fidelity_bounds(plus, minus, circuit, modes, min(report.prob_fail_circuit, 1.0))
    form = optimal_form_check(transform(circuit, plus), transform(circuit, minus))
    data = {**report.to_dict(), "fidelity_bounds": bounds.to_dict(),
            "optimal_form": {"amplitude_match": form.amplitude_match,
                             "common_phase": form.common_phase}}
    print(f"P_fail {report.prob_fail_circuit:.15g}, P_succ {report.prob_success_circuit:.15g}")
    if report.optimal is None:
        print("optimality not judged at unequal priors")
    else:
        print(f"optimal bound {report.prob_fail_optimal:.15g}: "
              f"{'optimal' if report.optimal else 'not optimal'}")
    status = OK if (report.optimal is not False and bounds.ok) else NEGATIVE
    outcome = CommandOutcome(status)
    if out_file:
        _write_json(out_file, data, outcome)
    return outcome


def cmd_naimark(povm_file, out_circuit, usd=None, mesh_file=None) -> CommandOutcome:
    if usd is not None:
        result = usd_povm(*usd)
        povm = result.povm
    elif povm_file:
        povm, result = fio.read_povm(povm_file), None
    else:
        raise ValueError("give a POVM file or --usd ALPHA BETA")
    dilation = naimark_unitary(povm)
    circuit = dilation.circuit
    outcome = CommandOutcome(OK)
    _write_json(out_circuit, fio.circuit_to_dict(circuit), outcome)
    if mesh_file is None:
        mesh_file = Path(out_circuit).with_suffix(".mesh.json")
    _write_json(mesh_file, fio.givens_to_dict(decompose_to_givens(circuit)), outcome)
    print(f"{povm.total_dim} rails, completeness deviation {povm.deviation:.2e}")
    if result is not None:
        n = povm.total_dim
        for name, sign in (("plus", 1), ("minus", -1)):
            probs = simulate_povm(dilation, rail_state([result.alpha, sign * result.beta], n))
            print(f"{name}: outcome probabilities " + " ".join(f"{p:.12g}" for p in probs))
        print(f"P_fail {result.prob_fail:.12g}")
    return outcome


def cmd_search(plus_file, minus_file, config_file, out_file=None, csv_file=None,
               n_jobs=None) -> CommandOutcome:
    plus, minus = _pair_files(plus_file, minus_file)
    raw = fio.load_json(config_file)
    if not isinstance(raw, dict):
        raise fio.FormatError("search config must be a JSON object")
    try:
        config = SearchConfig.from_dict(raw)
    except TypeError as exc:
        raise fio.FormatError(str(exc)) from exc
    outcome = CommandOutcome(OK)
    note = None
    toy = toy_parameters(plus, minus)
    if toy is not None:
        feas = toy_feasibility(*toy)
        note = ("analytic: optimum excluded for every static circuit; " + feas.obstruction
                if not feas.feasible_fixed_array else "analytic: optimum not excluded")

    if "ancillas" in raw:
        ancillas = [(str(_label(a)), fio.state_from_dict(a["state"])) for a in raw["ancillas"]]
        rows = ancilla_sweep(plus, minus, ancillas, config, n_jobs=n_jobs)
        text = sweep_csv(rows)
        if csv_file:
            _write(csv_file, text, outcome)
        else:
            sys.stdout.write(text)
        found = any(r.optimal for r in rows)
        best = min(rows, key=lambda r: r.best_objective).result
    else:
        best = minimize_failure(plus, minus, config, n_jobs=n_jobs)
        found = best.optimal
    print(f"best P_fail {best.best_objective:.15g} vs |overlap| {abs(best.overlap):.15g}: "
          f"{best.status}")
    if note:
        print(note)
    if out_file:
        _write_json(out_file, {**best.summary(), "note": note,
                               "circuit": fio.circuit_to_dict(best.best_circuit),
                               "usd_report": best.usd_report.to_dict()}, outcome)
    outcome.status = OK if found else NEGATIVE
    return outcome


def _label(entry):
    if not isinstance(entry, dict) or "state" not in entry:
        raise fio.FormatError("each ancilla needs a state")
    return entry.get("label", "ancilla")


def cmd_coherent_demo(alpha=0.7, tail_tol=1e-12, out_file=None) -> CommandOutcome:
    """|alpha>|alpha> versus |-alpha>|alpha> behind a 50/50 beam splitter."""
    plus = coherent_product_state([alpha, alpha], tail_tol=tail_tol)
    minus = coherent_product_state([-alpha, alpha], tail_tol=tail_tol)
    circuit = beam_splitter_50_50()
    report = usd_report(circuit, plus, minus)
    expected = math.exp(-2 * abs(alpha) ** 2)
    checks = [conditional_mode_check(circuit, plus, minus, j, max_order=6) for j in range(2)]
    print(f"cutoff {plus.meta['cutoff']} photons, truncation deficit "
          f"{plus.meta['truncation_deficit']:.2e}")
    print(f"P_fail {report.prob_fail_circuit:.15g}, exp(-2|alpha|^2) {expected:.15g}")
    for rep in checks:
        worst = max(abs(e.value) for e in rep.entries)
        print(f"mode {rep.mode + 1}: conditional moments n=1..6, max modulus {worst:.2e}")
    good = report.optimal and all(r.verdict for r in checks)
    outcome = CommandOutcome(OK if good else NEGATIVE)
    if out_file:
        _write_json(out_file, report.to_dict(), outcome)
    return outcome


def _mode_arg(text):
    if text == "all":
        return text
    try:
        j = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("mode must be 'all' or a 1-based mode number") from None
    if j < 1:
        raise argparse.ArgumentTypeError("modes are numbered from 1")
    return j


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dephase-lab",
        description="Linear-optics state discrimination through the dephasing picture.",
        epilog="file schemas (JSON):\n" + fio.SCHEMAS
               + "\nexit status: 0 success, 1 negative verdict, 2 invalid input\n"
                 "DEPHASE_LAB_THREADS caps parallel search restarts.",
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="apply a circuit to a state")
    p.add_argument("state")
    p.add_argument("circuit", help="circuit or givens file")
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("dephase", help="pattern distribution (CSV) or partial dephasing (JSON)")
    p.add_argument("state")
    p.add_argument("--circuit")
    p.add_argument("--modes", type=int, nargs="+", help="dephase only these 1-based modes")
    p.add_argument("-o", "--out")

    p = sub.add_parser("classify", help="conclusive and ambiguous output patterns")
    for name in ("plus", "minus", "circuit"):
        p.add_argument(name)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("-o", "--out")

    p = sub.add_parser("check", help="moment conditions, chosen by the input overlap")
    for name in ("plus", "minus", "circuit"):
        p.add_argument(name)
    p.add_argument("--mode", type=_mode_arg, default="all",
                   help="'all' or a 1-based output mode for the conditional subset")
    p.add_argument("--max-order", type=int)
    p.add_argument("-o", "--out", help="CSV report (default stdout)")

    p = sub.add_parser("usd", help="failure probability, optimality and fidelity bounds")
    for name in ("plus", "minus", "circuit"):
        p.add_argument(name)
    p.add_argument("--priors", type=float, default=0.5, help="prior of the plus state")
    p.add_argument("--dephase-modes", type=int, nargs="+",
                   help="1-based modes for the partial-dephasing fidelity")
    p.add_argument("-o", "--out", help="JSON report")

    p = sub.add_parser("naimark", help="compile a one-photon POVM into a circuit")
    p.add_argument("povm", nargs="?")
    p.add_argument("-o", "--out", required=True, help="circuit file")
    p.add_argument("--mesh", help="givens file (default: <out>.mesh.json)")
    p.add_argument("--usd", type=float, nargs=2, metavar=("ALPHA", "BETA"),
                   help="use the optimal USD POVM for alpha|0> +/- beta|1>")

    p = sub.add_parser("search", help="search circuits for minimal failure probability")
    for name in ("plus", "minus", "config"):
        p.add_argument(name)
    p.add_argument("-o", "--out", help="JSON report")
    p.add_argument("--csv", help="sweep CSV when the config lists ancillas")
    p.add_argument("--jobs", type=int)

    p = sub.add_parser("coherent-demo", help="binary coherent-state USD with a 50/50 splitter")
    p.add_argument("--alpha", type=float, default=0.7)
    p.add_argument("--tail-tol", type=float, default=1e-12)
    p.add_argument("-o", "--out")
    return parser


def run(args) -> CommandOutcome:
    c = args.command
    if c == "transform":
        return cmd_transform(args.state, args.circuit, args.out)
    if c == "dephase":
        return cmd_dephase(args.state, args.circuit, args.modes, args.out)
    if c == "classify":
        return cmd_classify(args.plus, args.minus, args.circuit, args.tol, args.out)
    if c == "check":
        return cmd_check(args.plus, args.minus, args.circuit, args.mode, args.max_order, args.out)
    if c == "usd":
        return cmd_usd(args.plus, args.minus, args.circuit, args.priors, args.out,
                       args.dephase_modes)
    if c == "naimark":
        return cmd_naimark(args.povm, args.out, args.usd, args.mesh)
    if c == "search":
        return cmd_search(args.plus, args.minus, args.config, args.out, args.csv, args.jobs)
    return cmd_coherent_demo(args.alpha, args.tail_tol, args.out)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return INPUT_ERROR if exc.code else OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        outcome = run(args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    for path in outcome.written:
        log.info("wrote %s", path)
    return outcome.status


if __name__ == "__main__":
    sys.exit(main())
