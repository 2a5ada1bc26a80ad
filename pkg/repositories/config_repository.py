"""Config repository: JSON run configurations and problem spec files."""
import json
from pathlib import Path
from typing import Any, Dict, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError

from core.errors import ConfigError

ModelT = TypeVar("ModelT", bound=BaseModel)


def _line_of_key(text: str, key: str) -> Union[int, None]:
    needle = f'"{key}"'
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return lineno
    return None


class ConfigRepository:
    """Load JSON files into dictionaries and pydantic models, reporting line numbers."""

    @staticmethod
    def load_json(path: Union[str, Path]) -> Dict[str, Any]:
        """
        Raises:
            ConfigError: If the file is missing, unparsable or not a JSON object
        """
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read {path}: {e.strerror or e}") from e
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: {e.msg}", line=e.lineno) from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a JSON object", line=1)
        return data

    @staticmethod
    def validate(path: Union[str, Path], data: Dict[str, Any], model: Type[ModelT]) -> ModelT:
        """
        Validate a dictionary against a model.

        Raises:
            ConfigError: Naming the first invalid field and, when the file is
                readable, the line it appears on
        """
        try:
            return model.model_validate(data)
        except ValidationError as e:
            first = e.errors()[0]
            field = ".".join(str(p) for p in first["loc"]) or "<root>"
            line = None
            if first["loc"]:
                try:
                    line = _line_of_key(Path(path).read_text(), str(first["loc"][0]))
                except OSError:
                    line = None
            raise ConfigError(f"{path}: {field}: {first['msg']}", line=line) from e

    @staticmethod
    def load_model(path: Union[str, Path], model: Type[ModelT]) -> ModelT:
        return ConfigRepository.validate(path, ConfigRepository.load_json(path), model)
