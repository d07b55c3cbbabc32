"""
Configuration Tools
Pydantic schemas for run configuration files and the helpers that turn
them into states, chain settings and worker counts
"""
import json
import os
from typing import Annotated, List, Literal, Optional, Tuple, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, conint

from estimators.sampler import ChainConfig
from phasespace.densities import MAX_ORDER, GridSpec
from phasespace.errors import ConfigError
from phasespace.quadrature import QuadratureSpec
from phasespace.states import State, state_from_descriptor

load_dotenv()

DEFAULT_OBSERVABLES = ["q^4 + 1", "0.25*(p^2 - q)^3", "cos(q)", "exp(sin(q))"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GaussianSpec(_Strict):
    type: Literal["gaussian"]
    q: List[float]
    p: List[float]


class HermiteSpec(_Strict):
    type: Literal["hermite"]
    k: List[int]


class HatSpec(_Strict):
    type: Literal["hat"]
    q: float = 0.0


class TermSpec(_Strict):
    coeff: Union[float, Tuple[float, float]] = (1.0, 0.0)
    state: "StateSpec"


class SuperpositionSpec(_Strict):
    type: Literal["superposition"]
    terms: List[TermSpec] = Field(..., min_length=1)


StateSpec = Annotated[
    Union[GaussianSpec, HermiteSpec, HatSpec, SuperpositionSpec], Field(discriminator="type")
]
TermSpec.model_rebuild()
SuperpositionSpec.model_rebuild()


class GridConfig(_Strict):
    q_min: float
    q_max: float
    p_min: float
    p_max: float
    nq: int = Field(101, ge=1)
    np: int = Field(101, ge=1)

    def to_grid(self) -> GridSpec:
        return GridSpec(self.q_min, self.q_max, self.p_min, self.p_max, self.nq, self.np)


class DensityBlock(_Strict):
    which: Literal["wigner", "husimi", "spectrogram", "mu", "profile"] = "mu"
    order: int = Field(1, ge=1, le=MAX_ORDER)
    k: List[int] = Field(default_factory=lambda: [0])
    grid: Optional[GridConfig] = None
    force_quadrature: bool = False


class SampleBlock(_Strict):
    orders: List[conint(ge=0)] = Field(default_factory=lambda: [0], min_length=1)
    chain: ChainConfig = Field(default_factory=ChainConfig)


class ExpectBlock(_Strict):
    observable: str
    order: int = Field(1, ge=1, le=MAX_ORDER)
    method: Literal["mcmc", "deterministic"] = "mcmc"
    chain: ChainConfig = Field(default_factory=ChainConfig)


class ConvergeBlock(_Strict):
    center: List[float] = Field(default_factory=lambda: [0.5, -1.0])
    observables: List[str] = Field(default_factory=lambda: list(DEFAULT_OBSERVABLES))
    orders: List[int] = Field(default_factory=lambda: [1, 2, 3, 4])
    eps_grid: Optional[List[float]] = None
    gh_nodes: Optional[int] = Field(None, ge=1, le=200)
    precision_digits: Optional[int] = Field(40, ge=16)


class HistogramBlock(_Strict):
    order: int = Field(3, ge=1, le=MAX_ORDER)
    chain: ChainConfig = Field(default_factory=ChainConfig)
    half_width: float = Field(6.0, gt=0)
    bins: Optional[int] = Field(None, ge=1)


class HatStudyBlock(_Strict):
    observable: str = "q"
    order: int = Field(1, ge=1, le=MAX_ORDER)
    n_list: List[int] = Field(default_factory=lambda: [1000, 10000, 100000])
    runs: int = Field(10, ge=1)
    reference: Optional[float] = None
    chain: ChainConfig = Field(default_factory=ChainConfig)


class RunConfig(_Strict):
    """Top-level run configuration; each command reads its own block"""

    eps: Optional[float] = Field(None, gt=0)
    state: Optional[StateSpec] = None
    quad: Optional[QuadratureSpec] = None
    seed: Optional[int] = Field(None, ge=0, lt=2 ** 64)
    threads: Optional[int] = Field(None, ge=1)
    density: Optional[DensityBlock] = None
    sample: Optional[SampleBlock] = None
    expect: Optional[ExpectBlock] = None
    converge: Optional[ConvergeBlock] = None
    histogram: Optional[HistogramBlock] = None
    hat_study: Optional[HatStudyBlock] = None


def _descriptor(spec) -> dict:
    if isinstance(spec, SuperpositionSpec):
        terms = []
        for term in spec.terms:
            coeff = [term.coeff, 0.0] if isinstance(term.coeff, float) else list(term.coeff)
            terms.append({"coeff": coeff, "state": _descriptor(term.state)})
        return {"type": "superposition", "terms": terms}
    return spec.model_dump()


class ConfigTools:
    """Loading and resolving run configurations"""

    @staticmethod
    def parse_config(data: dict) -> RunConfig:
        try:
            return RunConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"invalid run configuration: {e}") from e

    @staticmethod
    def load_config(path: str) -> RunConfig:
        """
        Load and validate a JSON run configuration

        Args:
            path: Path to the JSON file

        Returns:
            RunConfig (unknown keys are rejected)
        """
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from e
        return ConfigTools.parse_config(data)

    @staticmethod
    def build_state(cfg: RunConfig) -> State:
        if cfg.state is None or cfg.eps is None:
            raise ConfigError("this command needs 'state' and 'eps' in the configuration")
        return state_from_descriptor(_descriptor(cfg.state), cfg.eps)

    @staticmethod
    def resolve_chain(chain: ChainConfig, cfg: RunConfig, seed: Optional[int] = None) -> ChainConfig:
        """Apply the seed override (CLI, then config) and the run-wide quadrature"""
        update = {}
        seed = seed if seed is not None else cfg.seed
        if seed is not None:
            update["seed"] = seed
        if chain.quad is None and cfg.quad is not None:
            update["quad"] = cfg.quad
        return chain.model_copy(update=update) if update else chain

    @staticmethod
    def resolve_threads(cli_threads: Optional[int], cfg: Optional[RunConfig] = None) -> int:
        """--threads, then the config, then SPECTRO_THREADS, then 1"""
        if cli_threads is not None:
            threads = cli_threads
        elif cfg is not None and cfg.threads is not None:
            threads = cfg.threads
        else:
            threads = int(os.getenv("SPECTRO_THREADS", "1"))
        if threads < 1:
            raise ConfigError(f"thread count must be positive, got {threads}")
        return threads

    @staticmethod
    def require(block, name: str):
        if block is None:
            raise ConfigError(f"configuration has no '{name}' block")
        return block
