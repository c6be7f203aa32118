# pylint: disable=raise-missing-from
import logging
from typing import Dict, Type, TypeVar

import pydantic

from rte_tools.exceptions import ConfigurationError
from rte_tools.model.run_config import (
    ConvergenceStudyConfig,
    RunConfig,
    SweepStudyConfig,
)


logger = logging.getLogger()

Model = TypeVar("Model", bound=pydantic.BaseModel)


def _format_pydantic_error(error: dict) -> str:
    location = "->".join(
        str(loc)
        for loc in error["loc"]
        if loc != "__root__" and not isinstance(loc, int)
    )
    if not location:
        return error["msg"]
    return f'{location}: {error["msg"]}'


def _validate(model: Type[Model], content: Dict, source: str) -> Model:
    try:
        return model(**content)
    except pydantic.ValidationError as e:
        logger.exception(e)
        error_messages = [
            _format_pydantic_error(error) for error in e.errors()
        ]
        raise ConfigurationError(source, errors=error_messages)
    except Exception as e:
        logger.exception(e)
        raise e


def validate_run_config(content: Dict) -> RunConfig:
    return _validate(RunConfig, content, "run config")


def validate_convergence_config(content: Dict) -> ConvergenceStudyConfig:
    return _validate(ConvergenceStudyConfig, content, "convergence config")


def validate_sweep_config(content: Dict) -> SweepStudyConfig:
    return _validate(SweepStudyConfig, content, "sweep config")
