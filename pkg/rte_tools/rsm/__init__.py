import logging
import time
from dataclasses import dataclass
from typing import List, Optional

from rte_tools.discretization import Discretization
from rte_tools.exceptions import FactorizationFormatError
from rte_tools.rsm.factorization import (
    MultilevelFactorization,
    apply_inverse,
    dense_oracle_inverse,
    factorize,
)
from rte_tools.rsm.level_basis import (
    LevelBasis,
    build_level0_basis,
    build_level_bases,
)
from rte_tools.rsm.operators import (
    LevelOperators,
    RowLayout,
    assemble_B,
    assemble_all,
)


logger = logging.getLogger()


@dataclass(frozen=True, slots=True, eq=False)
class RsmBuild:
    layout: RowLayout
    level0: LevelBasis
    factorization: MultilevelFactorization
    level_bases: Optional[List[LevelBasis]]
    operators: Optional[List[LevelOperators]]
    seconds: float


def build_factorization(
    disc: Discretization,
    threads: int = 1,
    cached: Optional[MultilevelFactorization] = None,
) -> RsmBuild:
    """
    Level bases, level operators and the multilevel factorization of the
    compressed interface system. With a cached factorization only the
    level-0 basis is rebuilt.
    """
    start = time.perf_counter()
    layout = RowLayout(disc)
    if cached is not None:
        level0 = build_level0_basis(disc, threads)
        if cached.size != level0.dimension or cached.I != disc.mesh.I:
            raise FactorizationFormatError(
                "Cached factorization does not match the discretization"
            )
        return RsmBuild(
            layout=layout,
            level0=level0,
            factorization=cached,
            level_bases=None,
            operators=None,
            seconds=time.perf_counter() - start,
        )
    level_bases = build_level_bases(disc, threads)
    operators = assemble_all(disc, layout, level_bases)
    coarse_B = assemble_B(disc, layout, level_bases[-1])
    factorization = factorize(operators, coarse_B, disc.mesh.I)
    seconds = time.perf_counter() - start
    logger.info(f"Offline phase finished in {seconds:.3f} s")
    return RsmBuild(
        layout=layout,
        level0=level_bases[0],
        factorization=factorization,
        level_bases=level_bases,
        operators=operators,
        seconds=seconds,
    )


__all__ = [
    "RsmBuild",
    "MultilevelFactorization",
    "apply_inverse",
    "build_factorization",
    "dense_oracle_inverse",
]
