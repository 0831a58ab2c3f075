"""Command-line driver.

Every subcommand loads the run configuration (environment, then
``--config`` file, then flags), builds the group, writes its artifacts
into the output directory and returns an exit code. A failing run
leaves ``violations.json`` next to the other artifacts.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import pathlib
import sys
from collections.abc import Callable
from collections.abc import Sequence
from typing import Any

from hgpartners import words
from hgpartners.config import RunConfig
from hgpartners.exceptions import BoundViolated
from hgpartners.exceptions import ConditionViolated
from hgpartners.exceptions import ConfigurationError
from hgpartners.exceptions import EncounterTypeMismatch
from hgpartners.exceptions import HgPartnersError
from hgpartners.exceptions import IdentifyFailed
from hgpartners.exceptions import InvalidParameter
from hgpartners.flow import Encounter
from hgpartners.flow import EncounterKind
from hgpartners.flow import PeriodicOrbit
from hgpartners.flow import detect_encounters
from hgpartners.flow import detect_self_crossings
from hgpartners.flow import orbit_from_word
from hgpartners.fuchsian import SurfaceGroup
from hgpartners.fuchsian import load_group
from hgpartners.partners import MAX_ANGLE
from hgpartners.partners import PartnerResult
from hgpartners.partners import Topology
from hgpartners.partners import crossing_partner
from hgpartners.partners import partner_aas
from hgpartners.partners import partner_api
from hgpartners.partners import partner_ppi
from hgpartners.partners import partner_single_antiparallel
from hgpartners.partners import verify_partnership
from hgpartners.reports import write_json
from hgpartners.spectrum import FORM_FACTOR_NOTE
from hgpartners.spectrum import Weight
from hgpartners.spectrum import action_histogram
from hgpartners.spectrum import enumerate_classes
from hgpartners.spectrum import form_factor_diagonal
from hgpartners.spectrum import inverse_pair_audit
from hgpartners.spectrum import length_spectrum
from hgpartners.spectrum import pair_catalog
from hgpartners.spectrum import shortest_period
from hgpartners.spectrum import tau_edges
from hgpartners.spectrum import write_catalog_json
from hgpartners.spectrum import write_spectrum_csv
from hgpartners.spectrum import write_xy_csv

logger = logging.getLogger(__name__)

# Checked in order, so subclasses come before their bases.
EXIT_CODES: tuple[tuple[type[HgPartnersError], int], ...] = (
    (ConfigurationError, 2),
    (InvalidParameter, 2),
    (BoundViolated, 3),
    (IdentifyFailed, 4),
    (ConditionViolated, 5),
    (HgPartnersError, 1),
)
VIOLATIONS_FILE = "violations.json"
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"

Command = Callable[[RunConfig, SurfaceGroup, argparse.Namespace], int]


def exit_code(exc: HgPartnersError) -> int:
    for kind, code in EXIT_CODES:
        if isinstance(exc, kind):
            return code
    return 1


def _common_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument(
        "--config", type=pathlib.Path, help="key=value configuration file"
    )
    parent.add_argument("--group", help='"octagon" or a group JSON file')
    parent.add_argument("--max-len", dest="max_word_len", type=int)
    parent.add_argument("--eps", type=float, help="encounter radius")
    parent.add_argument("--dt", type=float, help="encounter scan step")
    parent.add_argument("--crossing-dt", type=float)
    parent.add_argument("--ball-radius", type=int)
    parent.add_argument("--metric-factor", type=float)
    parent.add_argument("--precision", choices=["double", "extended"])
    parent.add_argument("--seed", type=int)
    parent.add_argument("--out", dest="output_dir", help="output directory")
    parent.add_argument("--jobs", type=int)
    parent.add_argument("--eps-star", type=float)
    parent.add_argument("--log-level")
    return parent


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="hgpartners",
        description="Partner orbits of the geodesic flow on the octagon "
        "surface.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser(
        "group-info", parents=[common], help="generators and group constants"
    )
    p = sub.add_parser(
        "enumerate", parents=[common], help="conjugacy classes by length"
    )
    p.add_argument("--include-powers", action="store_true")

    p = sub.add_parser("orbit", parents=[common], help="periodic orbits")
    p.add_argument("--word", help="class word, e.g. aBc")
    p.add_argument("--words", help="comma separated class words")

    p = sub.add_parser(
        "encounters", parents=[common], help="encounters and crossings"
    )
    p.add_argument("--word", required=True)

    p = sub.add_parser("partner", parents=[common], help="build a partner")
    p.add_argument("--word", required=True)
    p.add_argument(
        "--topology",
        choices=[str(t) for t in Topology],
        default=str(Topology.SINGLE_ANTIPARALLEL),
    )
    p.add_argument(
        "--encounters",
        help="comma separated indices into the detected encounters "
        "(or crossings)",
    )
    p.add_argument("--strict", action="store_true")

    p = sub.add_parser(
        "verify", parents=[common], help="certify an orbit pair"
    )
    p.add_argument("--word", required=True)
    p.add_argument("--partner", required=True)

    p = sub.add_parser(
        "spectrum", parents=[common], help="length spectrum and form factor"
    )
    p.add_argument("--include-powers", action="store_true")
    p.add_argument("--tau-max", type=float, default=20.0)
    p.add_argument("--tau-bins", type=int, default=40)
    p.add_argument(
        "--weight", choices=[str(w) for w in Weight], default="unit"
    )
    p.add_argument(
        "--pairs-max-len",
        type=int,
        help="also build the pair catalog up to this word length",
    )
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    names = (
        "group",
        "max_word_len",
        "eps",
        "dt",
        "crossing_dt",
        "ball_radius",
        "metric_factor",
        "precision",
        "seed",
        "output_dir",
        "jobs",
        "eps_star",
        "log_level",
    )
    return {name: getattr(args, name) for name in names}


def _configure_logging(level: str) -> None:
    levels = logging.getLevelNamesMapping()
    if level.upper() not in levels:
        msg = f"Unknown log level {level!r}"
        raise ConfigurationError(msg)
    logging.basicConfig(level=levels[level.upper()], format=LOG_FORMAT)


def _parse_word(text: str) -> str:
    return words.check_word(text.strip())


def _indices(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        msg = f"Invalid index list {text!r}"
        raise InvalidParameter(msg) from exc


def _pick(items: Sequence[Any], indices: Sequence[int]) -> tuple[Any, ...]:
    try:
        return tuple(items[i] for i in indices)
    except IndexError as exc:
        msg = f"Index out of range: {list(indices)} of {len(items)}"
        raise InvalidParameter(msg) from exc


def _report(cfg: RunConfig, name: str, payload: dict[str, Any]) -> None:
    path = write_json(
        pathlib.Path(cfg.output_dir) / name,
        {"config": cfg.to_dict(), **payload},
    )
    logger.info("Wrote %s", path)


def cmd_group_info(
    cfg: RunConfig, grp: SurfaceGroup, args: argparse.Namespace
) -> int:
    del args
    info = grp.to_dict()
    info["relator_residual"] = grp.relator_residual()
    info["eps_star"] = cfg.resolved_eps_star(grp.sigma0)
    _report(cfg, "group.json", {"group": info})
    print(
        f"[hgpartners] group: {len(grp.generators) // 2} generators, "
        f"relator residual {info['relator_residual']:.3g}, "
        f"sigma0 {grp.sigma0:.6g}, ball {len(grp.ball)} elements"
    )
    return 0


def cmd_enumerate(
    cfg: RunConfig, grp: SurfaceGroup, args: argparse.Namespace
) -> int:
    entries = enumerate_classes(
        grp, cfg.max_word_len, args.include_powers, cfg.jobs
    )
    write_spectrum_csv(pathlib.Path(cfg.output_dir) / "spectrum.csv", entries)
    _report(cfg, "classes.json", {"classes": entries})
    print(
        f"[hgpartners] {len(entries)} classes up to length "
        f"{cfg.max_word_len}"
    )
    return 0


def cmd_orbit(
    cfg: RunConfig, grp: SurfaceGroup, args: argparse.Namespace
) -> int:
    texts = [args.word] if args.word else []
    if args.words:
        texts.extend(args.words.split(","))
    if not texts:
        msg = "orbit needs --word or --words"
        raise InvalidParameter(msg)
    orbits = [orbit_from_word(grp, _parse_word(t)) for t in texts]
    _report(cfg, "orbit.json", {"orbits": orbits})
    for orbit in orbits:
        print(f"[hgpartners] {orbit.cls.word}: period {orbit.period:.12g}")
    return 0


def cmd_encounters(
    cfg: RunConfig, grp: SurfaceGroup, args: argparse.Namespace
) -> int:
    orbit = orbit_from_word(grp, _parse_word(args.word))
    encs = detect_encounters(orbit, cfg.eps, cfg.dt)
    crossings = detect_self_crossings(orbit, cfg.crossing_dt)
    _report(
        cfg,
        "encounters.json",
        {"orbit": orbit, "encounters": encs, "crossings": crossings},
    )
    print(
        f"[hgpartners] {orbit.cls.word}: {len(encs)} encounters, "
        f"{len(crossings)} crossings"
    )
    return 0


def _encounter_sets(
    encs: Sequence[Encounter], topology: Topology
) -> list[tuple[Encounter, ...]]:
    anti = EncounterKind.ANTIPARALLEL
    par = EncounterKind.PARALLEL
    if topology is Topology.SINGLE_ANTIPARALLEL:
        return [(e,) for e in encs if e.kind is anti]
    wanted = {
        Topology.AAS: (anti, anti),
        Topology.PPI: (par, par),
        Topology.API: (par, anti),
    }[topology]
    return [
        pair
        for pair in itertools.permutations(encs, 2)
        if (pair[0].kind, pair[1].kind) == wanted
        and (topology is Topology.API or pair[0].t1 < pair[1].t1)
    ]


def _build_partner(
    cfg: RunConfig,
    orbit: PeriodicOrbit,
    topology: Topology,
    chosen: tuple[Any, ...],
    strict: bool,
) -> PartnerResult:
    options = {
        "metric_factor": cfg.metric_factor,
        "eps_star": cfg.eps_star,
        "strict": strict,
    }
    build = {
        Topology.SINGLE_ANTIPARALLEL: partner_single_antiparallel,
        Topology.AAS: partner_aas,
        Topology.PPI: partner_ppi,
        Topology.API: partner_api,
        Topology.TWO_CROSSINGS: crossing_partner,
    }[topology]
    return build(orbit, *chosen, **options)


def _candidates(
    cfg: RunConfig,
    orbit: PeriodicOrbit,
    topology: Topology,
    indices: list[int] | None,
) -> list[tuple[Any, ...]]:
    if topology is Topology.TWO_CROSSINGS:
        crossings = detect_self_crossings(orbit, cfg.crossing_dt)
        if indices is not None:
            return [_pick(crossings, indices)]
        small = [c for c in crossings if abs(c.psi) < MAX_ANGLE]
        pairs = list(itertools.combinations(small, 2))
        pairs.sort(key=lambda p: max(abs(p[0].psi), abs(p[1].psi)))
        return pairs
    encs = detect_encounters(orbit, cfg.eps, cfg.dt)
    if indices is not None:
        return [_pick(encs, indices)]
    return _encounter_sets(encs, topology)


def cmd_partner(
    cfg: RunConfig, grp: SurfaceGroup, args: argparse.Namespace
) -> int:
    orbit = orbit_from_word(grp, _parse_word(args.word))
    topology = Topology(args.topology)
    candidates = _candidates(cfg, orbit, topology, _indices(args.encounters))
    if not candidates:
        msg = f"{orbit.cls.word} has no encounters for {topology}"
        raise EncounterTypeMismatch(msg)
    last = len(candidates) - 1
    for index, chosen in enumerate(candidates):
        try:
            result = _build_partner(cfg, orbit, topology, chosen, args.strict)
        except HgPartnersError as exc:
            if index == last:
                raise
            logger.info("Candidate refused: %s", exc)
            continue
        _report(cfg, "partner.json", {"partner": result})
        print(
            f"[hgpartners] {topology} partner of {orbit.cls.word}: "
            f"{result.partner.cls.word}, action difference "
            f"{result.action_diff:.6g} (target {result.target:.6g})"
        )
        return 0
    return 1


def cmd_verify(
    cfg: RunConfig, grp: SurfaceGroup, args: argparse.Namespace
) -> int:
    orbit = orbit_from_word(grp, _parse_word(args.word))
    partner = orbit_from_word(grp, _parse_word(args.partner))
    eps = 20 * cfg.eps * cfg.metric_factor
    cert = verify_partnership(orbit, partner, eps, cfg.eps, cfg.dt)
    _report(
        cfg,
        "verify.json",
        {"original": orbit, "partner": partner, "certificate": cert},
    )
    if cert is None:
        msg = (
            f"No certificate pairs {orbit.cls.word} with "
            f"{partner.cls.word} at eps={eps:.6g}"
        )
        raise ConditionViolated(msg)
    print(
        f"[hgpartners] certified {orbit.cls.word} ~ {partner.cls.word}: "
        f"{cert.legs} legs, closeness {cert.closeness:.6g}"
    )
    return 0


def cmd_spectrum(
    cfg: RunConfig, grp: SurfaceGroup, args: argparse.Namespace
) -> int:
    out = pathlib.Path(cfg.output_dir)
    entries = enumerate_classes(
        grp, cfg.max_word_len, args.include_powers, cfg.jobs
    )
    write_spectrum_csv(out / "spectrum.csv", entries)
    write_xy_csv(
        out / "length_spectrum.csv",
        length_spectrum(entries),
        ("period", "multiplicity"),
    )
    form_factor = form_factor_diagonal(
        entries, tau_edges(args.tau_max, args.tau_bins), args.weight
    )
    write_xy_csv(out / "form_factor.csv", form_factor, ("tau", "K"))
    summary: dict[str, Any] = {
        "classes": len(entries),
        "shortest_period": shortest_period(entries),
        "audit": inverse_pair_audit(entries),
        "form_factor": {"weight": args.weight, "note": FORM_FACTOR_NOTE},
    }
    if args.pairs_max_len:
        catalog = pair_catalog(
            grp,
            args.pairs_max_len,
            cfg.eps,
            cfg.dt,
            cfg.jobs,
            cfg.metric_factor,
            cfg.eps_star,
        )
        write_catalog_json(out / "pairs.json", catalog, cfg.to_dict())
        write_xy_csv(
            out / "action_histogram.csv",
            action_histogram(catalog),
            ("action_diff", "count"),
        )
        summary["pairs"] = len(catalog)
    _report(cfg, "spectrum.json", {"spectrum": summary})
    print(
        f"[hgpartners] spectrum: {len(entries)} classes, shortest period "
        f"{summary['shortest_period']:.12g}"
    )
    return 0


COMMANDS: dict[str, Command] = {
    "group-info": cmd_group_info,
    "enumerate": cmd_enumerate,
    "orbit": cmd_orbit,
    "encounters": cmd_encounters,
    "partner": cmd_partner,
    "verify": cmd_verify,
    "spectrum": cmd_spectrum,
}


def _violation(command: str, exc: HgPartnersError) -> dict[str, Any]:
    record: dict[str, Any] = {
        "command": command,
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": exit_code(exc),
    }
    if isinstance(exc, BoundViolated) and exc.report is not None:
        record["report"] = exc.report
    return record


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = pathlib.Path(args.output_dir or "hgpartners-out")
    try:
        cfg = RunConfig.from_file(args.config, _overrides(args))
        out = pathlib.Path(cfg.output_dir)
        _configure_logging(cfg.log_level)
        grp = load_group(cfg.group, cfg.ball_radius, cfg.precision, cfg.seed)
        cfg.validate(grp.sigma0)
        return COMMANDS[args.command](cfg, grp, args)
    except HgPartnersError as exc:
        code = exit_code(exc)
        logger.error("%s failed: %s", args.command, exc)
        write_json(out / VIOLATIONS_FILE, _violation(args.command, exc))
        print(
            f"[hgpartners] FAIL ({type(exc).__name__}): {exc}",
            file=sys.stderr,
        )
        return code


if __name__ == "__main__":
    sys.exit(main())
