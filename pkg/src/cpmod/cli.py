"""Command line interface.

Exit status: 0 when the computation succeeded with a positive verdict (or
has no verdict), 1 when it succeeded with a negative verdict, 2 on bad input
or a failed precondition. Reports go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings

import numpy as np

from cpmod import compare as cmp
from cpmod import oracle
from cpmod.cpmaps import is_nondegenerate_map, validate_module_cp
from cpmod.dilation import check_quintuple, construct, quintuples_unitarily_equivalent
from cpmod.errors import CPModError
from cpmod.numerics import DEFAULT_TOL, Tolerance, adjoint, max_abs, projector_onto_span
from cpmod.problem import dumps, encode_matrix, load_element, load_problem, map_payload

REPORT_FORMAT = "cpmod-report/1"


class Report:
    """Accumulates a machine-readable report for one command."""

    def __init__(self, argv: list[str], tol: Tolerance):
        self.data = {
            "format": REPORT_FORMAT,
            "command": list(argv),
            "tolerance": tol.as_dict(),
            "verdicts": {},
            "certificates": {},
            "residuals": {},
            "dimensions": {},
            "warnings": [],
        }

    def verdict(self, name: str, value: bool):
        self.data["verdicts"][name] = bool(value)

    def matrix(self, name: str, M):
        self.data["certificates"][name] = encode_matrix(M)

    def certificate(self, name: str, value):
        self.data["certificates"][name] = value

    def residual(self, name: str, value: float):
        value = float(value)
        self.data["residuals"][name] = value if math.isfinite(value) else None

    def dimension(self, name: str, value: int):
        self.data["dimensions"][name] = int(value)

    def warn(self, message: str):
        self.data["warnings"].append(message)

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return dumps(self.data)
        lines = [f"command: {' '.join(self.data['command'])}"]
        for section in ("verdicts", "dimensions", "residuals"):
            for key, value in self.data[section].items():
                lines.append(f"{section[:-1] if section != 'residuals' else 'residual'} {key}: {value}")
        for key, value in self.data["certificates"].items():
            lines.append(f"certificate {key}:")
            lines.append(_text_matrix(value))
        for message in self.data["warnings"]:
            lines.append(f"warning: {message}")
        return "\n".join(lines) + "\n"


def _text_matrix(value) -> str:
    def is_matrix(v):
        return isinstance(v, list) and v and isinstance(v[0], list) and v[0] and isinstance(v[0][0], list)

    if is_matrix(value):
        M = np.array([[complex(re, im) for re, im in row] for row in value])
        if not np.any(M.imag):
            M = M.real
        return np.array2string(M, precision=6, suppress_small=True, max_line_width=120)
    if isinstance(value, list):
        return "\n".join(_text_matrix(v) for v in value)
    if isinstance(value, dict):
        return "\n".join(f"  {k}:\n{_text_matrix(v)}" for k, v in value.items())
    return f"  {value}"


def _sample_config(args) -> oracle.SampleConfig:
    return oracle.SampleConfig(seed=args.seed, samples=args.samples)


def _quintuple_certificates(report: Report, Q, prefix: str = ""):
    report.dimension(f"{prefix}dH", Q.dH)
    report.dimension(f"{prefix}dK", Q.dK)
    report.matrix(f"{prefix}V", Q.V)
    report.matrix(f"{prefix}W", Q.W)
    report.certificate(f"{prefix}pi_X", {
        f"E_{r + 1}{s + 1}": encode_matrix(Q.piX_images[r, s]) for r in range(Q.k) for s in range(Q.m)
    })
    report.certificate(f"{prefix}pi_A", {
        f"E_{s + 1}{t + 1}": encode_matrix(Q.pi_phi.pi_images[s, t]) for s in range(Q.m) for t in range(Q.m)
    })


def cmd_validate(args, problem, tol, report) -> bool:
    Phi = problem.get(args.map)
    result = validate_module_cp(Phi, tol)
    report.verdict("valid", result.is_valid)
    report.verdict("nondegenerate", is_nondegenerate_map(Phi, tol))
    report.residual("underlying_consistency", result.residual)
    report.residual("choi_min_eigenvalue", result.choi_min_eigenvalue)
    report.certificate("underlying", {
        f"E_{s + 1}{t + 1}": encode_matrix(result.phi.images[s, t]) for s in range(Phi.m) for t in range(Phi.m)
    })
    return result.is_valid


def cmd_stinespring(args, problem, tol, report) -> bool:
    Phi = problem.get(args.map)
    Q = construct(Phi, tol)
    checks = check_quintuple(Q, Phi, tol)
    _quintuple_certificates(report, Q)
    for name in ("representation", "factorization", "coisometry", "phi_factorization", "homomorphism"):
        report.residual(name, getattr(checks, name))
    report.dimension("h_span_rank", checks.h_span_rank)
    report.dimension("k_span_rank", checks.k_span_rank)
    report.verdict("nondegenerate_representation", checks.nondegenerate)
    report.verdict("invariants_hold", checks.ok(tol))
    if args.verify:
        cfg = _sample_config(args)
        report.residual("oracle_factorization", oracle.verify_factorization(Q, Phi, cfg))
        report.residual("oracle_representation", oracle.verify_representation(Q, cfg))
    return checks.ok(tol)


def cmd_compare(args, problem, tol, report) -> bool:
    Phi, Psi = problem.get(args.map_a), problem.get(args.map_b)
    same = cmp.equivalent(Phi, Psi, tol)
    report.verdict("equivalent", same)
    if args.verify:
        report.residual("oracle_equivalence", oracle.verify_equivalence_pointwise(Phi, Psi, _sample_config(args)))
    if not same:
        return False
    V = cmp.connecting_partial_isometry(Phi, Psi, tol)
    report.matrix("V", V)
    P_phi = projector_onto_span(Phi.image_vectors(), tol, dim=Phi.q)
    P_psi = projector_onto_span(Psi.image_vectors(), tol, dim=Psi.q)
    report.residual("V_Psi_minus_Phi", max_abs(np.einsum("ab,rsbj->rsaj", V, Psi.images) - Phi.images))
    report.residual("VVstar_minus_projector", max_abs(V @ adjoint(V) - P_phi))
    report.residual("VstarV_minus_projector", max_abs(adjoint(V) @ V - P_psi))
    both_nondegenerate = is_nondegenerate_map(Phi, tol) and is_nondegenerate_map(Psi, tol)
    report.verdict("both_nondegenerate", both_nondegenerate)
    report.verdict("V_unitary", max_abs(adjoint(V) @ V - np.eye(Phi.q)) <= tol.eq_abs_tol
                   and max_abs(V @ adjoint(V) - np.eye(Phi.q)) <= tol.eq_abs_tol)
    ok, witness = quintuples_unitarily_equivalent(construct(Psi, tol), construct(Phi, tol), tol)
    report.verdict("quintuples_unitarily_equivalent", ok)
    report.matrix("U1", witness.U1)
    report.matrix("U2", witness.U2)
    report.residual("quintuple_equivalence", witness.max_residual)
    report.residual("U2W_minus_W", witness.coisometry_residual)
    if args.verify:
        report.residual("oracle_partial_isometry", oracle.verify_partial_isometry(V, Phi, Psi, _sample_config(args)))
    return True


def cmd_dominates(args, problem, tol, report) -> bool:
    Psi, Phi = problem.get(args.map_a), problem.get(args.map_b)
    mode = "complete" if args.mode == "complete" else "pointwise_sampled"
    verdict = cmp.dominates(Psi, Phi, mode, tol, seed=args.seed, samples=args.samples)
    report.verdict("dominated", verdict.dominated)
    report.certificate("mode", verdict.mode)
    report.residual("margin", verdict.margin)
    if args.verify:
        report.residual("oracle_pointwise_margin", oracle.verify_domination_pointwise(Psi, Phi, _sample_config(args)))
    return verdict.dominated


def _rn_certificates(report: Report, D: cmp.RNDerivative):
    report.matrix("J", D.J)
    report.matrix("I", D.Imap)
    report.matrix("Delta1", D.Delta1)
    report.matrix("Delta2", D.Delta2)
    report.residual("J_fit", D.residual_J)
    report.residual("I_fit", D.residual_I)


def cmd_rn(args, problem, tol, report) -> bool:
    Psi, Phi = problem.get(args.map_a), problem.get(args.map_b)
    Q = construct(Phi, tol)
    D = cmp.rn_derivative(Psi, Phi, tol, Q_phi=Q)
    _rn_certificates(report, D)
    report.residual("commutant_membership", D.element.intertwining_residual(Q))
    in_interval = D.element.is_contraction_interval(tol)
    report.verdict("in_unit_interval", in_interval)
    recovered = cmp.compress(Q, D.element.sqrt(tol), tol)
    same = cmp.equivalent(Psi, recovered, tol)
    report.verdict("equivalent_to_compression", same)
    if args.verify:
        report.residual("oracle_equivalence", oracle.verify_equivalence_pointwise(Psi, recovered, _sample_config(args)))
    return in_interval and same


def cmd_compress(args, problem, tol, report) -> bool:
    Phi = problem.get(args.map)
    Q = construct(Phi, tol)
    T, S = load_element(args.element, Q.dH, Q.dK)
    result = cmp.compress(Q, cmp.CommutantElement(T, S), tol)
    report.certificate("map", map_payload(result))
    valid = validate_module_cp(result, tol).is_valid
    report.verdict("valid", valid)
    return valid


def cmd_commutant(args, problem, tol, report) -> bool:
    Q = construct(problem.get(args.map), tol)
    basis = cmp.commutant(Q, tol)
    report.dimension("commutant_dim", basis.dim)
    report.dimension("dH", Q.dH)
    report.dimension("dK", Q.dK)
    report.certificate("basis", [
        {"T": encode_matrix(E.T), "S": encode_matrix(E.S)} for E in basis.elements
    ])
    return True


def cmd_purity(args, problem, tol, report) -> bool:
    result = cmp.is_pure(problem.get(args.map), tol)
    report.verdict("pure", result.pure)
    report.dimension("commutant_dim", result.commutant_dim)
    return result.pure


def cmd_reconstruct(args, problem, tol, report) -> bool:
    Psi, Phi = problem.get(args.map_a), problem.get(args.map_b)
    Q = construct(Phi, tol)
    D = cmp.rn_derivative(Psi, Phi, tol, Q_phi=Q)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        R = cmp.reconstruct_stinespring(Q, D, tol)
    for w in caught:
        report.warn(str(w.message))
    _quintuple_certificates(report, R)
    ok, witness = quintuples_unitarily_equivalent(R, construct(Psi, tol), tol)
    report.verdict("unitarily_equivalent_to_construction", ok)
    report.residual("quintuple_equivalence", witness.max_residual)
    if args.verify:
        report.residual("oracle_factorization", oracle.verify_factorization(R, Psi, _sample_config(args)))
    return ok


COMMANDS = {
    "validate": cmd_validate,
    "stinespring": cmd_stinespring,
    "compare": cmd_compare,
    "dominates": cmd_dominates,
    "rn": cmd_rn,
    "compress": cmd_compress,
    "commutant": cmd_commutant,
    "purity": cmd_purity,
    "reconstruct": cmd_reconstruct,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL.eq_abs_tol,
                        help="entrywise equality tolerance; rank and PSD tolerances scale with it")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--verify", action="store_true", help="add sampled oracle residuals to the report")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    common.add_argument("--samples", type=int, default=64, help="number of sampled module elements")

    parser = argparse.ArgumentParser(prog="cpmod", description="Compare completely positive maps on Hilbert C*-modules.")
    sub = parser.add_subparsers(dest="command", required=True)

    def single(name, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("file")
        p.add_argument("map")
        return p

    def pair(name, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("file")
        p.add_argument("map_a")
        p.add_argument("map_b")
        return p

    single("validate", "check that a map is module-CP and report its underlying map")
    single("stinespring", "build the Stinespring quintuple")
    pair("compare", "equivalence and connecting partial isometry")
    dom = pair("dominates", "decide whether map_a is dominated by map_b")
    dom.add_argument("--mode", choices=("complete", "pointwise"), default="complete")
    pair("rn", "Radon-Nikodym derivative of map_a with respect to map_b")
    comp = single("compress", "compress a map by a commutant element")
    comp.add_argument("--element", required=True, help="JSON file holding T and S")
    single("commutant", "basis of the commutant of the Stinespring representation")
    single("purity", "purity test")
    pair("reconstruct", "rebuild the quintuple of map_a from that of map_b")
    return parser


def run(argv: list[str]) -> tuple[int, str]:
    """Execute a command; returns ``(exit_status, stdout_text)``."""
    args = build_parser().parse_args(argv)
    try:
        tol = DEFAULT_TOL.with_eq_tol(args.tol)
        if args.samples < 1:
            raise CPModError("--samples must be >= 1")
        problem = load_problem(args.file)
        report = Report(argv, tol)
        positive = COMMANDS[args.command](args, problem, tol, report)
    except (CPModError, ValueError) as exc:
        print(f"cpmod {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2, ""
    return (0 if positive else 1), report.render(args.format)


def main(argv: list[str] | None = None) -> int:
    status, text = run(sys.argv[1:] if argv is None else list(argv))
    sys.stdout.write(text)
    return status
