"""Error taxonomy shared by every module.

Each exception carries a short machine-readable ``code`` and the name of the
module that raised it, so the command-line front end can emit structured
error JSON and map failures onto exit codes (config -> 2, data/structural
-> 3, numerical -> 4).
"""

from __future__ import annotations


class RRTransportError(Exception):
    """Base class; subclasses define ``code`` and ``exit_code``."""

    code = "ERROR"
    exit_code = 1

    def __init__(self, message: str, module: str = ""):
        super().__init__(message)
        self.module = module

    def to_json_dict(self) -> dict:
        return {"code": self.code, "module": self.module, "message": str(self)}


class ConfigError(RRTransportError):
    code = "CONFIG"
    exit_code = 2


class SchemaError(RRTransportError):
    code = "SCHEMA"
    exit_code = 3


class ParseError(RRTransportError):
    code = "PARSE"
    exit_code = 3


class StructuralError(RRTransportError):
    code = "STRUCTURAL"
    exit_code = 3


class ScenarioMismatchError(RRTransportError):
    code = "SCENARIO_MISMATCH"
    exit_code = 3


class StratumEmptyError(RRTransportError):
    code = "STRATUM_EMPTY"
    exit_code = 3


class FoldInfeasibleError(RRTransportError):
    code = "FOLD_INFEASIBLE"
    exit_code = 3


class SpecError(RRTransportError):
    """A required nuisance is missing from a spec or prediction set."""

    code = "SPEC"
    exit_code = 2


class DegenerateKappaError(RRTransportError):
    code = "DEGENERATE_KAPPA"
    exit_code = 4


class PositivityError(RRTransportError):
    code = "POSITIVITY"
    exit_code = 4


class SingularityError(RRTransportError):
    code = "SINGULAR"
    exit_code = 4


class RootNotFoundError(RRTransportError):
    code = "ROOT_NOT_FOUND"
    exit_code = 4


class ParameterError(RRTransportError):
    code = "PARAMETER"
    exit_code = 2
