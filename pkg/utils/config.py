from pathlib import Path
from typing import Any, Type, TypeVar

import yaml
from pydantic import BaseModel, ValidationError

from utils.errors import ConfigurationError

ModelT = TypeVar("ModelT", bound=BaseModel)


def load_config(config_path: str | Path) -> dict:
    """Read a YAML or JSON document (JSON parses as YAML)."""
    try:
        with open(config_path, 'r', encoding="utf-8") as file:
            data = yaml.safe_load(file)
    except FileNotFoundError as e:
        raise ConfigurationError(f"Config file not found: {config_path}") from e
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigurationError(f"Cannot parse {config_path}{where}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{config_path}: top level must be a mapping")
    return data


def format_validation_error(error: ValidationError) -> list[str]:
    """One 'field.path: message' line per pydantic error."""
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{location}: {item['msg']}")
    return lines


def validate_model(model: Type[ModelT], data: Any, source: str = "config") -> ModelT:
    """Validate data against a pydantic model, raising ConfigurationError."""
    try:
        return model.model_validate(data)
    except ValidationError as e:
        lines = format_validation_error(e)
        message = f"Invalid {source}:\n  " + "\n  ".join(lines)
        raise ConfigurationError(message, fields=[line.split(":")[0] for line in lines]) from e


def load_model(model: Type[ModelT], config_path: str | Path) -> ModelT:
    """Load a document from disk and validate it against a pydantic model."""
    return validate_model(model, load_config(config_path), source=str(config_path))
