"""End-to-end experiments: generate, initialize, deflate, refine, tabulate.

Every order in the configuration runs the same pipeline on the same
matrix. The start comes from :func:`init_svd` at ``init_bits`` (IEEE
double by default), is widened to ``base_bits`` and, for square matrices,
deflated before the refinement with a geometric precision schedule.
"""

from __future__ import annotations

import dataclasses

from ..errors import RefinementError
from ..mpcore import MpMatrix
from ..refiner import (CSV_HEADER, KAPPA_AUTO, PrecisionSchedule, refine, residuals)
from ..spectra import deflate, deflation_quantity
from .generators import gen_cauchy, gen_prescribed, gen_random
from .jacobi import init_svd

FAMILIES = ("random", "cauchy", "prescribed")


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of :func:`run_experiment`.

    Attributes
    ----------
    family : {"random", "cauchy", "prescribed"}
    size : int
        ``n``. Random matrices are ``n x cols`` (square by default), Cauchy
        matrices ``n x n`` and prescribed ones ``4n x 4n``.
    orders : tuple of int
        Series orders ``p`` to run.
    base_bits : int
        Precision of the start; iterate ``i`` uses ``base_bits (p+1)^i``.
    iterations : int
    seed : int
    init_bits : int
        Precision of the baseline SVD.
    deflate : bool
        Deflate square problems before refining.
    cols : int or None
        Column count for the random family.
    """

    family: str
    size: int
    orders: tuple = (1,)
    base_bits: int = 64
    iterations: int = 3
    seed: int = 0
    init_bits: int = 53
    deflate: bool = True
    cols: int = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError("family must be one of %s" % (FAMILIES,))
        if self.size < 1:
            raise ValueError("size must be positive")
        orders = tuple(int(p) for p in self.orders)
        if not orders or min(orders) < 1:
            raise ValueError("orders must be positive integers")
        object.__setattr__(self, "orders", orders)

    def max_bits(self):
        return max(self.base_bits * (p + 1) ** self.iterations for p in self.orders)


@dataclasses.dataclass
class OrderOutcome:
    """Result of the pipeline for one order ``p``."""

    order: int
    deflation: object = None
    trace: object = None


@dataclasses.dataclass
class ExperimentResult:
    config: ExperimentConfig
    outcomes: list
    matrix: MpMatrix = None

    def table(self):
        """Rows of ``e_i``: one row per iteration, one column per order."""
        depth = max((len(o.trace.records) for o in self.outcomes if o.trace), default=0)
        rows = []
        for i in range(depth):
            row = []
            for o in self.outcomes:
                recs = o.trace.records if o.trace else []
                if i < len(recs):
                    row.append("inf" if recs[i].e_index is None else str(recs[i].e_index))
                else:
                    row.append("")
            rows.append(row)
        return rows

    def format_table(self):
        header = ["iteration"] + ["p=%d" % o.order for o in self.outcomes]
        body = [[str(i)] + row for i, row in enumerate(self.table())]
        lines = []
        for o in self.outcomes:
            if o.deflation is not None:
                lines.append("p=%d: deflation kept q=%d of %d (e=%.3e)"
                             % (o.order, o.deflation.q, self._order_of_matrix(),
                                float(o.deflation.e)))
        widths = [max(len(r[k]) for r in [header] + body) for k in range(len(header))]
        fmt = "  ".join("%%%ds" % w for w in widths)
        lines.append(fmt % tuple(header))
        lines.extend(fmt % tuple(r) for r in body)
        return "\n".join(lines)

    def csv_rows(self):
        rows = [CSV_HEADER]
        for o in self.outcomes:
            if o.trace:
                rows.extend(o.trace.rows())
        return rows

    def _order_of_matrix(self):
        return self.matrix.cols if self.matrix is not None else 0


class ExperimentError(RefinementError):
    """A pipeline stage failed.

    Attributes
    ----------
    stage : str
        ``"generate"``, ``"init"``, ``"deflate"`` or ``"refine"``.
    order : int or None
    partial : ExperimentResult
        Outcomes gathered before the failure.
    """

    def __init__(self, stage, order, cause, partial):
        self.stage, self.order, self.partial = stage, order, partial
        where = "" if order is None else " (p=%d)" % order
        super().__init__("[%s]%s %s: %s" % (stage, where, type(cause).__name__, cause))


def generate(cfg, bits):
    if cfg.family == "random":
        return gen_random(cfg.size, cfg.cols or cfg.size, bits, cfg.seed)
    if cfg.family == "cauchy":
        return gen_cauchy(cfg.size, bits)
    return gen_prescribed(cfg.size, bits, cfg.seed)[0]


def run_experiment(cfg):
    """Run the pipeline for every order of ``cfg``.

    Returns
    -------
    ExperimentResult

    Raises
    ------
    ExperimentError
        Wrapping the failure of any stage; the original exception is the
        ``__cause__``.
    """
    result = ExperimentResult(cfg, [])
    stage, order = "generate", None
    try:
        M = generate(cfg, cfg.max_bits())
        result.matrix = M
        stage = "init"
        start = init_svd(M.round(max(cfg.init_bits, 53)), cfg.init_bits).round(cfg.base_bits)
        square = M.rows == M.cols
        cached = None
        for order in cfg.orders:
            outcome = OrderOutcome(order)
            result.outcomes.append(outcome)
            T = start
            if cfg.deflate and square:
                stage = "deflate"
                if cached is None:
                    cached = residuals(start, M)
                e = deflation_quantity(start, M, order, precomputed=cached)
                outcome.deflation = deflate(start, M, order, e=e)
                T = outcome.deflation.triplet
            stage = "refine"
            schedule = PrecisionSchedule(cfg.base_bits, order, True)
            outcome.trace = refine(M, T, order, schedule, cfg.iterations,
                                   kappa_form=KAPPA_AUTO)
    except Exception as exc:
        raise ExperimentError(stage, order, exc, result) from exc
    return result
